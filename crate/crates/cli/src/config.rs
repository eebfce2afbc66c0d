//! Experiment configuration files.

use std::f64::consts::PI;

use serde::Deserialize;
use spin1_mbqc::dmrg::DmrgConfig;
use spin1_mbqc::model::HamiltonianSpec;
use spin1_mbqc::protocol::Gate;

use crate::CliError;

/// A number or an angle expression such as `"pi/2"` or `"-3pi/4"`.
#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum Value {
    Number(f64),
    Text(String),
}

impl Value {
    pub fn resolve(&self) -> Result<f64, CliError> {
        let v = match self {
            Value::Number(x) => *x,
            Value::Text(s) => parse_angle(s)?,
        };
        if !v.is_finite() {
            return Err(CliError::Config(format!("non-finite value {self:?}")));
        }
        Ok(v)
    }
}

/// Parses `[sign][coefficient][*]pi[/denominator]` or a plain number.
pub fn parse_angle(s: &str) -> Result<f64, CliError> {
    let bad = || CliError::Config(format!("cannot parse angle {s:?}"));
    let t: String = s.chars().filter(|c| !c.is_whitespace()).collect::<String>().to_lowercase();
    if let Ok(x) = t.parse::<f64>() {
        return Ok(x);
    }
    let Some(pos) = t.find("pi") else {
        return Err(bad());
    };
    let (head, tail) = (&t[..pos], &t[pos + 2..]);
    let head = head.strip_suffix('*').unwrap_or(head);
    let coeff = match head {
        "" | "+" => 1.0,
        "-" => -1.0,
        h => h.parse::<f64>().map_err(|_| bad())?,
    };
    let denom = match tail {
        "" => 1.0,
        d => d.strip_prefix('/').ok_or_else(bad)?.parse::<f64>().map_err(|_| bad())?,
    };
    if denom == 0.0 {
        return Err(bad());
    }
    Ok(coeff * PI / denom)
}

/// A parameter grid: one value, an explicit list, or an inclusive linear range.
#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum Grid {
    Range { start: Value, stop: Value, steps: usize },
    List(Vec<Value>),
    Single(Value),
}

impl Grid {
    pub fn values(&self) -> Result<Vec<f64>, CliError> {
        let out = match self {
            Grid::Single(v) => vec![v.resolve()?],
            Grid::List(vs) => vs.iter().map(Value::resolve).collect::<Result<_, _>>()?,
            Grid::Range { start, stop, steps } => {
                let (a, b) = (start.resolve()?, stop.resolve()?);
                match steps {
                    0 => Vec::new(),
                    1 => vec![a],
                    n => (0..*n).map(|k| a + (b - a) * k as f64 / (*n - 1) as f64).collect(),
                }
            }
        };
        if out.is_empty() {
            return Err(CliError::Config("empty grid".into()));
        }
        Ok(out)
    }

    fn sizes(&self, what: &str) -> Result<Vec<usize>, CliError> {
        self.values()?
            .into_iter()
            .map(|x| {
                if x >= 0.0 && x.fract() == 0.0 {
                    Ok(x as usize)
                } else {
                    Err(CliError::Config(format!("{what} must be a non-negative integer, got {x}")))
                }
            })
            .collect()
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub kind: String,
    #[serde(rename = "L")]
    pub length: Grid,
    #[serde(rename = "N")]
    pub junction: Option<Grid>,
    pub alpha: Option<Grid>,
    #[serde(rename = "J")]
    pub j: Option<Grid>,
    #[serde(rename = "D")]
    pub d: Option<Grid>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DmrgSection {
    pub max_bond: Option<usize>,
    pub cutoff: Option<f64>,
    pub max_sweeps: Option<usize>,
    pub energy_tol: Option<f64>,
    pub noise: Option<Vec<f64>>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum GateSection {
    Identity,
    Rz { theta: Grid },
    Unitary { theta: Grid, phi: Grid, lambda: Grid },
}

#[derive(Clone, Copy, Debug, Default, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum StateSource {
    #[default]
    Dmrg,
    Exact,
    Aklt,
}

#[derive(Clone, Copy, Debug, Deserialize, PartialEq, Eq, PartialOrd, Ord)]
#[serde(rename_all = "snake_case")]
pub enum MethodName {
    Expansion,
    HaldaneClosedForm,
    Oracle,
}

impl MethodName {
    pub fn as_str(self) -> &'static str {
        match self {
            MethodName::Expansion => "expansion",
            MethodName::HaldaneClosedForm => "haldane_closed_form",
            MethodName::Oracle => "oracle",
        }
    }
}

fn default_methods() -> Vec<MethodName> {
    vec![MethodName::Expansion]
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    pub model: ModelSection,
    #[serde(default)]
    pub dmrg: DmrgSection,
    #[serde(default)]
    pub gates: Vec<GateSection>,
    #[serde(default = "default_methods")]
    pub methods: Vec<MethodName>,
    #[serde(default)]
    pub state: StateSource,
    pub seed: Option<u64>,
    pub haldane_threshold: Option<f64>,
    pub oracle_tolerance: Option<f64>,
}

/// One point of the parameter grid.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Point {
    pub kind: ModelKindName,
    pub length: usize,
    pub junction: Option<usize>,
    pub alpha: Option<f64>,
    pub j: Option<f64>,
    pub d: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ModelKindName {
    Aklt,
    Blbq,
    Xxz,
    Blocked,
}

impl ModelKindName {
    pub fn as_str(self) -> &'static str {
        match self {
            ModelKindName::Aklt => "aklt",
            ModelKindName::Blbq => "blbq",
            ModelKindName::Xxz => "xxz",
            ModelKindName::Blocked => "blocked",
        }
    }
}

impl Point {
    pub fn spec(&self) -> HamiltonianSpec {
        match self.kind {
            ModelKindName::Aklt => HamiltonianSpec::aklt(self.length),
            ModelKindName::Blbq => HamiltonianSpec::blbq(self.length, self.alpha.unwrap_or_default()),
            ModelKindName::Xxz => HamiltonianSpec::xxz(self.length, self.j.unwrap_or_default(), self.d.unwrap_or_default()),
            ModelKindName::Blocked => HamiltonianSpec::blocked(
                self.length,
                self.j.unwrap_or_default(),
                self.d.unwrap_or_default(),
                self.junction.unwrap_or_default(),
            ),
        }
    }
}

/// Validated configuration.
#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    pub points: Vec<Point>,
    pub dmrg: DmrgConfig,
    pub gates: Vec<Gate>,
    pub methods: Vec<MethodName>,
    pub state: StateSource,
    pub haldane_threshold: f64,
    pub oracle_tolerance: f64,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str, seed_override: Option<u64>) -> Result<Self, CliError> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        Self::from_raw(raw, seed_override)
    }

    pub fn from_raw(raw: RawConfig, seed_override: Option<u64>) -> Result<Self, CliError> {
        let m = &raw.model;
        let kind = match m.kind.as_str() {
            "aklt" => ModelKindName::Aklt,
            "blbq" => ModelKindName::Blbq,
            "xxz" => ModelKindName::Xxz,
            "blocked" => ModelKindName::Blocked,
            other => return Err(CliError::Config(format!("unknown model kind {other:?}"))),
        };
        let need = |g: &Option<Grid>, name: &str| -> Result<Vec<f64>, CliError> {
            g.as_ref().ok_or_else(|| CliError::Config(format!("model {} needs {name}", m.kind)))?.values()
        };
        let none = vec![None];
        let some = |v: Vec<f64>| v.into_iter().map(Some).collect::<Vec<_>>();
        let lengths = m.length.sizes("L")?;
        let alphas = if kind == ModelKindName::Blbq { some(need(&m.alpha, "alpha")?) } else { none.clone() };
        let (js, ds) = if matches!(kind, ModelKindName::Xxz | ModelKindName::Blocked) {
            (some(need(&m.j, "J")?), some(need(&m.d, "D")?))
        } else {
            (none.clone(), none.clone())
        };
        let junctions: Vec<Option<usize>> = if kind == ModelKindName::Blocked {
            match &m.junction {
                Some(g) => g.sizes("N")?.into_iter().map(Some).collect(),
                None => vec![Some(0)],
            }
        } else {
            vec![None]
        };
        let mut points = Vec::new();
        for &length in &lengths {
            for &junction in &junctions {
                for &alpha in &alphas {
                    for &j in &js {
                        for &d in &ds {
                            let p = Point { kind, length, junction, alpha, j, d };
                            p.spec().layout().map_err(|e| CliError::Config(e.to_string()))?;
                            points.push(p);
                        }
                    }
                }
            }
        }
        let defaults = DmrgConfig::default();
        let dmrg = DmrgConfig {
            max_bond: raw.dmrg.max_bond.unwrap_or(defaults.max_bond),
            cutoff: raw.dmrg.cutoff.unwrap_or(defaults.cutoff),
            max_sweeps: raw.dmrg.max_sweeps.unwrap_or(defaults.max_sweeps),
            energy_tol: raw.dmrg.energy_tol.unwrap_or(defaults.energy_tol),
            noise: raw.dmrg.noise.clone().unwrap_or(defaults.noise),
            seed: seed_override.or(raw.seed).unwrap_or(defaults.seed),
        };
        dmrg.validate().map_err(|e| CliError::Config(e.to_string()))?;
        let mut gates = Vec::new();
        for g in &raw.gates {
            match g {
                GateSection::Identity => gates.push(Gate::Identity),
                GateSection::Rz { theta } => gates.extend(theta.values()?.into_iter().map(Gate::Rz)),
                GateSection::Unitary { theta, phi, lambda } => {
                    for &t in &theta.values()? {
                        for &p in &phi.values()? {
                            for &l in &lambda.values()? {
                                gates.push(Gate::Unitary { theta: t, phi: p, lambda: l });
                            }
                        }
                    }
                }
            }
        }
        let mut methods = raw.methods.clone();
        methods.sort();
        methods.dedup();
        if methods.is_empty() {
            return Err(CliError::Config("methods list is empty".into()));
        }
        if methods.contains(&MethodName::Oracle) {
            if let Some(p) = points.iter().find(|p| p.spec().layout().map(|l| l.n_spin1()).unwrap_or(0) > spin1_mbqc::oracle::MAX_ENUMERATION_SITES) {
                return Err(CliError::Config(format!(
                    "oracle method limited to {} spin-one sites, point has L={} N={:?}",
                    spin1_mbqc::oracle::MAX_ENUMERATION_SITES,
                    p.length,
                    p.junction
                )));
            }
        }
        if gates.iter().any(|g| matches!(g, Gate::Unitary { .. })) && kind != ModelKindName::Blocked {
            return Err(CliError::Config("unitary gates need the blocked model".into()));
        }
        let haldane_threshold = raw.haldane_threshold.unwrap_or(spin1_mbqc::fidelity::HALDANE_THRESHOLD);
        let oracle_tolerance = raw.oracle_tolerance.unwrap_or(1e-6);
        Ok(Self { points, dmrg, gates, methods, state: raw.state, haldane_threshold, oracle_tolerance })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn angles() {
        let cases = [("pi", PI), ("-pi/2", -PI / 2.0), ("3pi/4", 0.75 * PI), ("2*pi", 2.0 * PI), (" PI / 8 ", PI / 8.0), ("0.25", 0.25)];
        for (s, want) in cases {
            assert!((parse_angle(s).unwrap() - want).abs() < 1e-15, "{s}");
        }
        for s in ["pie", "pi/0", "x", "pi/", "2pi3"] {
            assert!(parse_angle(s).is_err(), "{s}");
        }
    }

    #[test]
    fn grids_expand_in_order() {
        let cfg = ExperimentConfig::from_toml(
            r#"
            seed = 7
            methods = ["oracle", "expansion", "expansion"]
            [model]
            kind = "xxz"
            L = [2, 3]
            J = 1
            D = { start = -1, stop = 0, steps = 3 }
            [[gates]]
            kind = "identity"
            [[gates]]
            kind = "rz"
            theta = ["pi/2", 1.0]
            "#,
            None,
        )
        .unwrap();
        let ds: Vec<_> = cfg.points.iter().map(|p| (p.length, p.d.unwrap())).collect();
        assert_eq!(ds, vec![(2, -1.0), (2, -0.5), (2, 0.0), (3, -1.0), (3, -0.5), (3, 0.0)]);
        assert_eq!(cfg.gates, vec![Gate::Identity, Gate::Rz(PI / 2.0), Gate::Rz(1.0)]);
        assert_eq!(cfg.methods, vec![MethodName::Expansion, MethodName::Oracle]);
        assert_eq!(cfg.dmrg.seed, 7);
        let cfg = ExperimentConfig::from_toml("[model]\nkind = \"aklt\"\nL = 4\n", Some(3)).unwrap();
        assert_eq!(cfg.dmrg.seed, 3);
    }

    #[test]
    fn rejects_invalid() {
        let bad = [
            "[model]\nkind = \"foo\"\nL = 4\n",
            "[model]\nkind = \"xxz\"\nL = 4\nJ = 1\n",
            "[model]\nkind = \"aklt\"\nL = 2.5\n",
            "[model]\nkind = \"aklt\"\nL = []\n",
            "[model]\nkind = \"blocked\"\nL = 4\nJ = 1\nD = 0\n",
            "[model]\nkind = \"aklt\"\nL = 4\nextra = 1\n",
            "methods = [\"oracle\"]\n[model]\nkind = \"aklt\"\nL = 12\n",
            "[model]\nkind = \"aklt\"\nL = 3\n[[gates]]\nkind = \"unitary\"\ntheta = 0\nphi = 0\nlambda = 0\n",
            "[model]\nkind = \"aklt\"\nL = 3\n[dmrg]\nmax_bond = 0\n",
            "[model]\nkind = \"aklt\"\nL = 3\n[[gates]]\nkind = \"rz\"\ntheta = \"pi/x\"\n",
        ];
        for text in bad {
            assert!(matches!(ExperimentConfig::from_toml(text, None), Err(CliError::Config(_))), "{text}");
        }
    }
}
