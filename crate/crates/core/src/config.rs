//! Run configuration: TOML file plus flag overrides, validated before any work starts.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Pipeline stages in dependency order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Group,
    Words,
    Qdiff,
    Mesh,
    Green,
    Pairings,
    Tensor,
    Q,
    Spectrum,
    Checks,
    Surrogate,
    Rankone,
}

impl Stage {
    pub const ALL: [Stage; 12] = [
        Stage::Group,
        Stage::Words,
        Stage::Qdiff,
        Stage::Mesh,
        Stage::Green,
        Stage::Pairings,
        Stage::Tensor,
        Stage::Q,
        Stage::Spectrum,
        Stage::Checks,
        Stage::Surrogate,
        Stage::Rankone,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Stage::Group => "group",
            Stage::Words => "words",
            Stage::Qdiff => "qdiff",
            Stage::Mesh => "mesh",
            Stage::Green => "green",
            Stage::Pairings => "pairings",
            Stage::Tensor => "tensor",
            Stage::Q => "q",
            Stage::Spectrum => "spectrum",
            Stage::Checks => "checks",
            Stage::Surrogate => "surrogate",
            Stage::Rankone => "rankone",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Stage {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase();
        Stage::ALL
            .into_iter()
            .find(|st| st.name() == key || (key == "dg" && *st == Stage::Green))
            .ok_or_else(|| {
                let names: Vec<_> = Stage::ALL.iter().map(|s| s.name()).collect();
                Error::Config(format!("unknown stage '{s}', expected one of {}", names.join(", ")))
            })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub genus: u32,
    pub word_length: usize,
    /// Words translating the origin further than this are skipped.
    pub max_displacement: f64,
    pub max_elements: usize,
    /// Series tail and automorphy tolerance.
    pub eps_auto: f64,
    pub mesh_level: u32,
    pub max_mesh_nodes: usize,
    /// Dense Green kernel cap.
    pub max_kernel_nodes: usize,
    /// Relative residual accepted from the factorized solve.
    pub solver_tolerance: f64,
    pub tau_rel: f64,
    /// Surrogate seeds per dimension.
    pub seeds: u64,
    pub surrogate_dims: Vec<usize>,
    pub surrogate_points: usize,
    pub rankone_dims: Vec<usize>,
    pub rankone_trials: usize,
    /// Random wedge elements for the two-path comparison.
    pub two_path_samples: usize,
    pub sample_seed: u64,
    pub out: PathBuf,
    /// Last stage to run; everything when absent.
    pub stage: Option<Stage>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            genus: 2,
            word_length: 12,
            max_displacement: 13.0,
            max_elements: 2_000_000,
            eps_auto: 1e-5,
            mesh_level: 4,
            max_mesh_nodes: 20_000,
            max_kernel_nodes: 6_000,
            solver_tolerance: 1e-10,
            tau_rel: 1e-8,
            seeds: 100,
            surrogate_dims: vec![2, 3],
            surrogate_points: 60,
            rankone_dims: vec![1, 2],
            rankone_trials: 20,
            two_path_samples: 50,
            sample_seed: 7,
            out: PathBuf::from("out"),
            stage: None,
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.genus != 2 {
            return Err(Error::UnsupportedGenus(self.genus));
        }
        if self.word_length < 4 || self.word_length > 20 {
            return bad(format!("word_length {} outside [4, 20]", self.word_length));
        }
        if !(self.max_displacement.is_finite() && self.max_displacement > 0.0) {
            return bad(format!("max_displacement {} must be positive", self.max_displacement));
        }
        if self.max_elements == 0 {
            return bad("max_elements must be positive".into());
        }
        if !(self.eps_auto > 0.0 && self.eps_auto < 1.0) {
            return bad(format!("eps_auto {} outside (0, 1)", self.eps_auto));
        }
        if !(1..=8).contains(&self.mesh_level) {
            return bad(format!("mesh_level {} outside [1, 8]", self.mesh_level));
        }
        if !(self.solver_tolerance > 0.0 && self.solver_tolerance < 1e-2) {
            return bad(format!("solver_tolerance {} outside (0, 1e-2)", self.solver_tolerance));
        }
        if !(self.tau_rel > 0.0 && self.tau_rel < 1.0) {
            return bad(format!("tau_rel {} outside (0, 1)", self.tau_rel));
        }
        if self.seeds == 0 {
            return bad("seeds must be positive".into());
        }
        if self.surrogate_dims.is_empty() || self.surrogate_dims.contains(&0) {
            return bad("surrogate_dims must be non-empty and positive".into());
        }
        let worst = self.surrogate_dims.iter().max().copied().unwrap_or(1);
        if self.surrogate_points <= 2 * worst * worst {
            return bad(format!("surrogate_points {} must exceed 2n^2 = {}", self.surrogate_points, 2 * worst * worst));
        }
        if self.rankone_dims.is_empty() || self.rankone_dims.contains(&0) {
            return bad("rankone_dims must be non-empty and positive".into());
        }
        if self.rankone_trials == 0 || self.two_path_samples == 0 {
            return bad("rankone_trials and two_path_samples must be positive".into());
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON form, ignoring the output directory.
    pub fn hash(&self) -> String {
        let mut canon = self.clone();
        canon.out = PathBuf::new();
        let bytes = serde_json::to_vec(&canon).expect("config serializes");
        hex::encode(Sha256::digest(bytes))
    }

    /// Whether `stage` falls within the selected range.
    pub fn runs(&self, stage: Stage) -> bool {
        self.stage.is_none_or(|last| stage <= last)
    }
}
