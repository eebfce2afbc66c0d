//! Gates and the measurement schedules that implement them.

use std::fmt;
use std::ops::Range;

use crate::error::{Error, Result};
use crate::mps::{ChainLayout, Region};
use crate::spin_ops::{euler_unitary, identity, rotation_gate, Axis, Matrix};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Gate {
    Identity,
    Rz(f64),
    /// `R_x(theta) R_y(phi) R_z(lambda)`.
    Unitary { theta: f64, phi: f64, lambda: f64 },
}

impl Gate {
    pub fn matrix(&self) -> Matrix {
        match *self {
            Gate::Identity => identity(2),
            Gate::Rz(theta) => rotation_gate(Axis::Z, theta),
            Gate::Unitary { theta, phi, lambda } => euler_unitary(theta, phi, lambda),
        }
    }
}

impl fmt::Display for Gate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Gate::Identity => write!(f, "I"),
            Gate::Rz(t) => write!(f, "Rz({t})"),
            Gate::Unitary { theta, phi, lambda } => write!(f, "U({theta}, {phi}, {lambda})"),
        }
    }
}

/// A stretch of consecutive spin-1 sites measured with a common rule.
#[derive(Clone, Debug, PartialEq)]
pub struct Stage {
    pub sites: Range<usize>,
    /// Rotation `(axis, angle)` implemented by the first successful outcome;
    /// `None` for stages that only teleport.
    pub rotation: Option<(Axis, f64)>,
}

/// Ordered measurement schedule over the spin-1 sites of a layout.
#[derive(Clone, Debug, PartialEq)]
pub struct Protocol {
    pub layout: ChainLayout,
    pub gate: Gate,
    pub stages: Vec<Stage>,
}

impl Protocol {
    pub fn new(layout: ChainLayout, gate: Gate) -> Result<Self> {
        let all = 1..layout.n_spin1() + 1;
        let stages = match gate {
            Gate::Identity => vec![Stage { sites: all, rotation: None }],
            Gate::Rz(theta) => vec![Stage { sites: all, rotation: Some((Axis::Z, theta)) }],
            Gate::Unitary { theta, phi, lambda } => {
                if !layout.is_blocked() {
                    return Err(Error::NotBlocked);
                }
                layout
                    .segments()
                    .into_iter()
                    .map(|seg| {
                        let rotation = match seg.region {
                            Region::A => Some((Axis::Z, lambda)),
                            Region::B => Some((Axis::Y, phi)),
                            Region::C => Some((Axis::X, theta)),
                            _ => None,
                        };
                        Stage { sites: seg.sites, rotation }
                    })
                    .filter(|s| !s.sites.is_empty())
                    .collect()
            }
        };
        Ok(Self { layout, gate, stages })
    }

    /// Index into [`Protocol::stages`] of the stage holding `site`.
    pub fn stage_of(&self, site: usize) -> Option<usize> {
        self.stages.iter().position(|s| s.sites.contains(&site))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn blocked_schedule() {
        let layout = ChainLayout::blocked(6, 1).unwrap();
        let p = Protocol::new(layout, Gate::Unitary { theta: 0.1, phi: 0.2, lambda: 0.3 }).unwrap();
        let got: Vec<_> = p.stages.iter().map(|s| (s.sites.clone(), s.rotation)).collect();
        assert_eq!(
            got,
            vec![
                (1..3, Some((Axis::Z, 0.3))),
                (3..4, None),
                (4..6, Some((Axis::Y, 0.2))),
                (6..7, None),
                (7..9, Some((Axis::X, 0.1))),
            ]
        );
        assert_eq!(p.stage_of(6), Some(3));
        let p = Protocol::new(ChainLayout::blocked(3, 0).unwrap(), Gate::Unitary { theta: 0.0, phi: 0.0, lambda: 0.0 }).unwrap();
        assert_eq!(p.stages.len(), 3);
    }

    #[test]
    fn unitary_needs_blocks() {
        let layout = ChainLayout::uniform(3).unwrap();
        assert!(matches!(
            Protocol::new(layout, Gate::Unitary { theta: 0.0, phi: 0.0, lambda: 0.0 }),
            Err(Error::NotBlocked)
        ));
        let p = Protocol::new(layout, Gate::Rz(0.5)).unwrap();
        assert_eq!(p.stages, vec![Stage { sites: 1..4, rotation: Some((Axis::Z, 0.5)) }]);
    }
}
