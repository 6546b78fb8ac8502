//! On-disk layout of a run:
//!
//! ```text
//! <run>/config.toml          flat key = value
//! <run>/log.csv              training log
//! <run>/ckpt/<step>.dibckpt  parameter checkpoints
//! <run>/measure.csv, plane.csv, alloc.csv, disting_<ch>.csv, subsets.csv
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use crate::diffcore::ParamStore;
use crate::error::{Error, Result};
use crate::kv::KvMap;

#[derive(Clone, Debug)]
pub struct RunDir {
    root: PathBuf,
}

impl RunDir {
    /// Creates the directory. An existing non-empty directory is refused
    /// unless `force`, in which case its contents are removed.
    pub fn create(path: &Path, force: bool) -> Result<Self> {
        if path.exists() {
            let non_empty = fs::read_dir(path)?.next().is_some();
            if non_empty {
                if !force {
                    return Err(Error::Config(format!(
                        "output directory {} is not empty (use --force to overwrite)",
                        path.display()
                    )));
                }
                fs::remove_dir_all(path)?;
            }
        }
        fs::create_dir_all(path.join("ckpt"))?;
        Ok(Self {
            root: path.to_path_buf(),
        })
    }

    pub fn open(path: &Path) -> Result<Self> {
        if !path.is_dir() {
            return Err(Error::Config(format!("run directory {} does not exist", path.display())));
        }
        Ok(Self {
            root: path.to_path_buf(),
        })
    }

    pub fn path(&self) -> &Path {
        &self.root
    }

    pub fn config_path(&self) -> PathBuf {
        self.root.join("config.toml")
    }

    pub fn log_path(&self) -> PathBuf {
        self.root.join("log.csv")
    }

    pub fn ckpt_dir(&self) -> PathBuf {
        self.root.join("ckpt")
    }

    pub fn ckpt_path(&self, step: u64) -> PathBuf {
        self.ckpt_dir().join(format!("{step}.dibckpt"))
    }

    pub fn measure_path(&self) -> PathBuf {
        self.root.join("measure.csv")
    }

    pub fn plane_path(&self) -> PathBuf {
        self.root.join("plane.csv")
    }

    pub fn alloc_path(&self) -> PathBuf {
        self.root.join("alloc.csv")
    }

    pub fn disting_path(&self, channel: usize) -> PathBuf {
        self.root.join(format!("disting_{channel}.csv"))
    }

    pub fn subsets_path(&self) -> PathBuf {
        self.root.join("subsets.csv")
    }

    pub fn write_config(&self, kv: &KvMap) -> Result<()> {
        fs::write(self.config_path(), kv.to_text())?;
        Ok(())
    }

    pub fn read_config(&self) -> Result<KvMap> {
        KvMap::load(&self.config_path())
    }

    pub fn save_checkpoint(&self, step: u64, params: &ParamStore) -> Result<()> {
        fs::create_dir_all(self.ckpt_dir())?;
        params.save(&self.ckpt_path(step))
    }

    pub fn load_checkpoint(&self, step: u64) -> Result<ParamStore> {
        ParamStore::load(&self.ckpt_path(step))
    }

    /// Steps with a checkpoint file, ascending.
    pub fn checkpoint_steps(&self) -> Result<Vec<u64>> {
        let dir = self.ckpt_dir();
        if !dir.is_dir() {
            return Ok(vec![]);
        }
        let mut steps = Vec::new();
        for entry in fs::read_dir(dir)? {
            let name = entry?.file_name();
            let name = name.to_string_lossy();
            if let Some(s) = name.strip_suffix(".dibckpt") {
                if let Ok(step) = s.parse() {
                    steps.push(step);
                }
            }
        }
        steps.sort_unstable();
        Ok(steps)
    }
}
