//! Grid evaluation.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::time::Instant;

use rayon::prelude::*;
use spin1_mbqc::dmrg::ground_state;
use spin1_mbqc::fidelity::{
    aklt_rz_fidelity, g_corr, g_fail, identity_fidelity, rz_fidelity_expansion, rz_fidelity_haldane_with,
    string_order, unitary_fidelity,
};
use spin1_mbqc::linalg::Truncation;
use spin1_mbqc::model::{build_mpo, expect_mpo, variance};
use spin1_mbqc::mps::{aklt_mps_on, Mps, DEFAULT_DENSE_CAP};
use spin1_mbqc::oracle::{exact_ground_state, oracle_fidelity, DenseState, MAX_ENUMERATION_SITES};
use spin1_mbqc::protocol::{Gate, Protocol};
use spin1_mbqc::spin_ops::Axis;

use crate::cache::{self, Cache, Meta};
use crate::config::{ExperimentConfig, MethodName, ModelKindName, Point, StateSource};
use crate::output::Row;
use crate::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    GroundState,
    FidelityRz,
    FidelityUnitary,
    Scan,
    OracleCheck,
    AkltClosedForm,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::GroundState => "ground-state",
            Command::FidelityRz => "fidelity-rz",
            Command::FidelityUnitary => "fidelity-unitary",
            Command::Scan => "scan",
            Command::OracleCheck => "oracle-check",
            Command::AkltClosedForm => "aklt-closed-form",
        }
    }

    /// Rejects configurations the command cannot evaluate.
    pub fn check(self, cfg: &ExperimentConfig) -> Result<(), CliError> {
        let err = |m: &str| Err(CliError::Config(format!("{}: {m}", self.name())));
        let needs_gates = !matches!(self, Command::GroundState | Command::Scan);
        if needs_gates && cfg.gates.is_empty() {
            return err("no gates configured");
        }
        let has_unitary = cfg.gates.iter().any(|g| matches!(g, Gate::Unitary { .. }));
        match self {
            Command::FidelityRz | Command::AkltClosedForm if has_unitary => return err("only identity and rz gates allowed"),
            Command::FidelityUnitary if cfg.points[0].kind != ModelKindName::Blocked => return err("needs the blocked model"),
            Command::AkltClosedForm if cfg.points[0].kind != ModelKindName::Aklt => return err("needs the aklt model"),
            Command::OracleCheck => {
                for p in &cfg.points {
                    let n = p.spec().layout()?.n_spin1();
                    if n > MAX_ENUMERATION_SITES {
                        return err(&format!("{n} spin-one sites exceed the enumeration limit {MAX_ENUMERATION_SITES}"));
                    }
                }
            }
            _ => {}
        }
        if cfg.state == StateSource::Exact {
            for p in &cfg.points {
                let dim = p.spec().layout()?.total_dim().unwrap_or(usize::MAX);
                if dim > DEFAULT_DENSE_CAP {
                    return err(&format!("exact state dimension {dim} exceeds {DEFAULT_DENSE_CAP}"));
                }
            }
        }
        Ok(())
    }
}

#[derive(Default)]
pub struct Outcome {
    pub rows: Vec<Row>,
    /// Human-readable report lines, in row order.
    pub lines: Vec<String>,
    pub cache_hits: usize,
    pub advisories: usize,
    /// Largest |method - oracle| seen by `oracle-check`.
    pub max_delta: Option<f64>,
}

struct Solved {
    state: Mps,
    energy: f64,
    variance: f64,
    converged: Option<bool>,
    time_ms: u64,
}

fn elapsed_ms(t: Instant) -> u64 {
    t.elapsed().as_millis() as u64
}

fn solve(p: &Point, cfg: &ExperimentConfig, cache: Option<&Cache>, hits: &AtomicUsize) -> Result<Solved, CliError> {
    let start = Instant::now();
    let spec = p.spec();
    let layout = spec.layout()?;
    let h = build_mpo(&spec)?;
    match cfg.state {
        StateSource::Aklt => {
            let state = aklt_mps_on(layout)?;
            Ok(Solved {
                energy: expect_mpo(&h, &state)?,
                variance: variance(&h, &state)?,
                state,
                converged: None,
                time_ms: elapsed_ms(start),
            })
        }
        StateSource::Exact => {
            let exact = exact_ground_state(&spec, DEFAULT_DENSE_CAP)?;
            let state = Mps::from_dense(layout, exact.state.amplitudes(), Truncation::default())?;
            Ok(Solved { variance: variance(&h, &state)?, state, energy: exact.energy, converged: Some(true), time_ms: elapsed_ms(start) })
        }
        StateSource::Dmrg => {
            let key = cache::key(&spec, &cfg.dmrg);
            if let Some((state, meta)) = cache.and_then(|c| c.load(&key)) {
                hits.fetch_add(1, Ordering::Relaxed);
                eprintln!("cache hit: {} L={} ({key})", p.kind.as_str(), p.length);
                return Ok(Solved {
                    state,
                    energy: meta.energy,
                    variance: meta.variance,
                    converged: Some(meta.converged),
                    time_ms: elapsed_ms(start),
                });
            }
            let r = ground_state(&h, &cfg.dmrg)?;
            if let Some(c) = cache {
                let meta = Meta { energy: r.energy, variance: r.variance, converged: r.converged, sweeps: r.energy_per_sweep.len() };
                c.store(&key, &r.state, &meta)?;
            }
            Ok(Solved { state: r.state, energy: r.energy, variance: r.variance, converged: Some(r.converged), time_ms: elapsed_ms(start) })
        }
    }
}

fn base_row(p: &Point, s: &Solved, seed: u64) -> Result<Row, CliError> {
    let g = &s.state;
    Ok(Row {
        model: p.kind.as_str(),
        length: p.length,
        junction: p.junction,
        alpha: p.alpha,
        j: p.j,
        d: p.d,
        g_corr: Some(g_corr(g)?),
        g_fail: Some(g_fail(g)?),
        o_x: Some(string_order(g, Axis::X)?),
        o_y: Some(string_order(g, Axis::Y)?),
        o_z: Some(string_order(g, Axis::Z)?),
        energy: Some(s.energy),
        variance: Some(s.variance),
        converged: s.converged,
        seed,
        ..Row::default()
    })
}

fn with_gate(mut row: Row, gate: Gate) -> Row {
    match gate {
        Gate::Identity => {}
        Gate::Rz(t) => row.theta = Some(t),
        Gate::Unitary { theta, phi, lambda } => {
            row.theta = Some(theta);
            row.phi = Some(phi);
            row.lambda = Some(lambda);
        }
    }
    row
}

struct Value {
    raw: f64,
    advisory: bool,
}

/// `None` when the method does not apply to the gate.
fn evaluate(state: &Mps, dense: &mut Option<DenseState>, gate: Gate, method: MethodName, threshold: f64) -> Result<Option<Value>, CliError> {
    let plain = |raw| Some(Value { raw, advisory: false });
    Ok(match (method, gate) {
        (MethodName::Expansion, Gate::Identity) => plain(identity_fidelity(state)?),
        (MethodName::Expansion, Gate::Rz(t)) => plain(rz_fidelity_expansion(state, t)?.raw),
        (MethodName::Expansion, Gate::Unitary { theta, phi, lambda }) => plain(unitary_fidelity(state, theta, phi, lambda)?.raw),
        (MethodName::HaldaneClosedForm, Gate::Rz(t)) => {
            let r = rz_fidelity_haldane_with(state, t, threshold)?;
            Some(Value { raw: r.raw, advisory: r.advisory })
        }
        (MethodName::HaldaneClosedForm, _) => None,
        (MethodName::Oracle, gate) => {
            if dense.is_none() {
                *dense = Some(DenseState::from_mps(state)?);
            }
            let protocol = Protocol::new(*state.layout(), gate)?;
            plain(oracle_fidelity(dense.as_ref().expect("dense state"), &protocol)?)
        }
    })
}

#[derive(Default)]
struct PointOutcome {
    rows: Vec<Row>,
    lines: Vec<String>,
    advisories: usize,
    max_delta: Option<f64>,
}

fn describe(p: &Point) -> String {
    let mut s = format!("{} L={}", p.kind.as_str(), p.length);
    for (name, v) in [("alpha", p.alpha), ("J", p.j), ("D", p.d)] {
        if let Some(v) = v {
            s += &format!(" {name}={v}");
        }
    }
    if let Some(n) = p.junction {
        s += &format!(" N={n}");
    }
    s
}

fn run_point(cmd: Command, p: &Point, cfg: &ExperimentConfig, cache: Option<&Cache>, hits: &AtomicUsize) -> Result<PointOutcome, CliError> {
    let solved = solve(p, cfg, cache, hits)?;
    let base = base_row(p, &solved, cfg.dmrg.seed)?;
    let mut out = PointOutcome::default();
    if cmd == Command::GroundState {
        out.rows.push(Row { wall_time_ms: solved.time_ms, ..base });
        return Ok(out);
    }
    let methods: Vec<MethodName> = match cmd {
        Command::OracleCheck => {
            let mut m = cfg.methods.clone();
            if !m.contains(&MethodName::Oracle) {
                m.push(MethodName::Oracle);
            }
            m
        }
        Command::AkltClosedForm => vec![MethodName::Expansion, MethodName::HaldaneClosedForm],
        _ => cfg.methods.clone(),
    };
    let mut dense = None;
    for &gate in &cfg.gates {
        let gate = match (cmd, gate) {
            (Command::AkltClosedForm, Gate::Identity) => Gate::Rz(0.0),
            (_, g) => g,
        };
        let mut values = Vec::new();
        if cmd == Command::AkltClosedForm {
            let Gate::Rz(theta) = gate else { unreachable!("checked by Command::check") };
            let analytic = aklt_rz_fidelity(p.length, theta);
            out.rows.push(Row { method: Some("analytic"), fidelity: Some(analytic), ..with_gate(base.clone(), gate) });
            values.push(("analytic", analytic));
        }
        for &method in &methods {
            let start = Instant::now();
            let Some(v) = evaluate(&solved.state, &mut dense, gate, method, cfg.haldane_threshold)? else {
                continue;
            };
            out.advisories += v.advisory as usize;
            values.push((method.as_str(), v.raw));
            out.rows.push(Row {
                method: Some(method.as_str()),
                fidelity: Some(v.raw.clamp(0.0, 1.0)),
                wall_time_ms: elapsed_ms(start),
                ..with_gate(base.clone(), gate)
            });
        }
        match cmd {
            Command::OracleCheck => {
                let oracle = values.iter().find(|(m, _)| *m == "oracle").map(|v| v.1).expect("oracle evaluated");
                for (m, v) in values.iter().filter(|(m, _)| *m != "oracle") {
                    let delta = (v - oracle).abs();
                    out.max_delta = Some(out.max_delta.map_or(delta, |d: f64| d.max(delta)));
                    let mark = if delta > cfg.oracle_tolerance { "FAIL" } else { "ok" };
                    out.lines.push(format!("{} gate={gate} method={m} value={v:.12} oracle={oracle:.12} delta={delta:.3e} {mark}", describe(p)));
                }
            }
            Command::AkltClosedForm => {
                let cols: Vec<String> = values.iter().map(|(m, v)| format!("{m}={v:.15}")).collect();
                out.lines.push(format!("L={} theta={} {}", p.length, gate_theta(gate), cols.join(" ")));
            }
            _ => {}
        }
    }
    Ok(out)
}

fn gate_theta(g: Gate) -> f64 {
    match g {
        Gate::Rz(t) => t,
        _ => 0.0,
    }
}

/// Evaluates every grid point on a pool of `jobs` threads; rows come back in
/// grid order regardless of scheduling.
pub fn run(cmd: Command, cfg: &ExperimentConfig, jobs: usize, cache: Option<&Cache>) -> Result<Outcome, CliError> {
    cmd.check(cfg)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    let hits = AtomicUsize::new(0);
    let parts: Vec<PointOutcome> =
        pool.install(|| cfg.points.par_iter().map(|p| run_point(cmd, p, cfg, cache, &hits)).collect::<Result<_, _>>())?;
    let mut out = Outcome { cache_hits: hits.into_inner(), ..Outcome::default() };
    for part in parts {
        out.rows.extend(part.rows);
        out.lines.extend(part.lines);
        out.advisories += part.advisories;
        if let Some(d) = part.max_delta {
            out.max_delta = Some(out.max_delta.map_or(d, |m: f64| m.max(d)));
        }
    }
    Ok(out)
}
