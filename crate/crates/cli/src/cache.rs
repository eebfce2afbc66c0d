//! On-disk store of solved ground states keyed by model, solver settings and seed.

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use spin1_mbqc::dmrg::DmrgConfig;
use spin1_mbqc::model::HamiltonianSpec;
use spin1_mbqc::mps::{read_mps, write_mps, Mps, FORMAT_VERSION};

use crate::CliError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Meta {
    pub energy: f64,
    pub variance: f64,
    pub converged: bool,
    pub sweeps: usize,
}

pub struct Cache {
    dir: PathBuf,
}

pub fn key(spec: &HamiltonianSpec, cfg: &DmrgConfig) -> String {
    let text = format!("{}|{}|{:?}|{:?}", env!("CARGO_PKG_VERSION"), FORMAT_VERSION, spec, cfg);
    hex::encode(Sha256::digest(text.as_bytes()))
}

impl Cache {
    pub fn open(dir: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        Ok(Self { dir: dir.to_path_buf() })
    }

    fn paths(&self, key: &str) -> (PathBuf, PathBuf) {
        (self.dir.join(format!("{key}.mps")), self.dir.join(format!("{key}.toml")))
    }

    /// Returns `None` when the entry is missing or unreadable.
    pub fn load(&self, key: &str) -> Option<(Mps, Meta)> {
        let (mps_path, meta_path) = self.paths(key);
        let meta: Meta = toml::from_str(&fs::read_to_string(&meta_path).ok()?).ok()?;
        let file = File::open(&mps_path).ok()?;
        match read_mps(&mut BufReader::new(file)) {
            Ok(state) => Some((state, meta)),
            Err(e) => {
                eprintln!("warning: ignoring cache entry {}: {e}", mps_path.display());
                None
            }
        }
    }

    pub fn store(&self, key: &str, state: &Mps, meta: &Meta) -> Result<(), CliError> {
        let (mps_path, meta_path) = self.paths(key);
        let tmp = self.dir.join(format!("{key}.mps.tmp"));
        {
            let file = File::create(&tmp).map_err(|e| CliError::io(&tmp, e))?;
            let mut w = BufWriter::new(file);
            write_mps(state, &mut w)?;
            w.flush().map_err(|e| CliError::io(&tmp, e))?;
        }
        fs::rename(&tmp, &mps_path).map_err(|e| CliError::io(&mps_path, e))?;
        let text = toml::to_string(meta).map_err(|e| CliError::Check(e.to_string()))?;
        fs::write(&meta_path, text).map_err(|e| CliError::io(&meta_path, e))?;
        Ok(())
    }
}
