use std::ops::Range;

use crate::error::{Error, Result};

/// Role of a stretch of spin-1 sites in a blocked chain.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Region {
    /// Uniform chain: every spin-1 site.
    Bulk,
    A,
    LeftJunction,
    B,
    RightJunction,
    C,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Segment {
    pub region: Region,
    /// Site indices (the input qubit is site 0).
    pub sites: Range<usize>,
}

/// Site structure of a chain: an input qubit, spin-1 sites, an output qubit.
///
/// Site `0` is the input qubit, sites `1..=n` are spin one and site `n + 1` is
/// the output qubit, where `n` counts every spin-1 site including junctions.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct ChainLayout {
    length: usize,
    junction: Option<usize>,
}

impl ChainLayout {
    pub fn uniform(length: usize) -> Result<Self> {
        if length == 0 {
            return Err(Error::InvalidModel("chain needs at least one spin-1 site".into()));
        }
        Ok(Self { length, junction: None })
    }

    /// Blocked chain with three blocks of `length / 3` sites separated by two
    /// junctions of `junction` sites each.
    pub fn blocked(length: usize, junction: usize) -> Result<Self> {
        if length == 0 || length % 3 != 0 {
            return Err(Error::InvalidModel(format!("blocked length {length} must be a positive multiple of 3")));
        }
        Ok(Self { length, junction: Some(junction) })
    }

    /// Spin-1 sites outside the junctions.
    pub fn length(&self) -> usize {
        self.length
    }

    pub fn junction(&self) -> Option<usize> {
        self.junction
    }

    pub fn is_blocked(&self) -> bool {
        self.junction.is_some()
    }

    pub fn n_spin1(&self) -> usize {
        self.length + 2 * self.junction.unwrap_or(0)
    }

    pub fn n_sites(&self) -> usize {
        self.n_spin1() + 2
    }

    pub fn input_site(&self) -> usize {
        0
    }

    pub fn output_site(&self) -> usize {
        self.n_spin1() + 1
    }

    pub fn local_dim(&self, site: usize) -> usize {
        if site == 0 || site == self.output_site() {
            2
        } else {
            3
        }
    }

    pub fn local_dims(&self) -> Vec<usize> {
        (0..self.n_sites()).map(|s| self.local_dim(s)).collect()
    }

    pub fn total_dim(&self) -> Option<usize> {
        self.local_dims().iter().try_fold(1usize, |acc, &d| acc.checked_mul(d))
    }

    pub fn check_site(&self, site: usize) -> Result<()> {
        if site < self.n_sites() {
            Ok(())
        } else {
            Err(Error::SiteOutOfRange { site, sites: self.n_sites() })
        }
    }

    /// Spin-1 segments in chain order.
    pub fn segments(&self) -> Vec<Segment> {
        match self.junction {
            None => vec![Segment { region: Region::Bulk, sites: 1..self.length + 1 }],
            Some(n) => {
                let b = self.length / 3;
                let mut start = 1;
                [(Region::A, b), (Region::LeftJunction, n), (Region::B, b), (Region::RightJunction, n), (Region::C, b)]
                    .into_iter()
                    .map(|(region, len)| {
                        let seg = Segment { region, sites: start..start + len };
                        start += len;
                        seg
                    })
                    .collect()
            }
        }
    }

    pub fn region_of(&self, site: usize) -> Option<Region> {
        self.segments().into_iter().find(|s| s.sites.contains(&site)).map(|s| s.region)
    }
}
