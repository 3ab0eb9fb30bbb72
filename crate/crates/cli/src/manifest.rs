use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use mpass_core::potential::{builtin_example, AuditConfig, PotentialSpec, RandomSphere, SpecFile};
use mpass_core::Result;

pub const MANIFEST_FILE: &str = "manifest.json";
pub const RANDOM_SPHERE_COUNT: usize = 256;

/// Everything needed to rerun a command.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub subcommand: String,
    pub example: Option<u32>,
    pub spec_path: Option<PathBuf>,
    /// Contents of the spec file at run time.
    pub spec_source: Option<String>,
    pub k: Option<f64>,
    pub ladder: Option<Vec<f64>>,
    pub h: f64,
    pub tol_grad: f64,
    pub tol_residual: f64,
    pub tol_refine: f64,
    pub out: PathBuf,
    pub force: bool,
    pub seed: Option<u64>,
    pub dump_geometry: bool,
    pub version: String,
}

impl RunManifest {
    pub fn load(path: &Path) -> Result<RunManifest> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::write(dir.join(MANIFEST_FILE), serde_json::to_string_pretty(self)? + "\n")?;
        Ok(())
    }

    pub fn potential(&self) -> Result<PotentialSpec> {
        match (&self.example, &self.spec_source) {
            (Some(id), _) => builtin_example(*id),
            (None, Some(src)) => SpecFile::parse(src)?.into_spec(),
            (None, None) => Err(mpass_core::Error::InvalidConfig("no example or spec file given".into())),
        }
    }

    pub fn audit_config(&self) -> AuditConfig {
        AuditConfig {
            random_sphere: self.seed.map(|seed| RandomSphere {
                count: RANDOM_SPHERE_COUNT,
                seed,
            }),
            ..AuditConfig::default()
        }
    }
}
