use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::fusion::FusionConfig;
use crate::sim::SimConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AblationMode {
    /// Both matrices, seam segments and fused crossings, online updates.
    Sis,
    /// One matrix for every configuration.
    AbDm,
    /// Crossings from the seam-map detector only.
    AbSi,
    /// Matrices used as loaded, never updated.
    AbMi,
}

impl AblationMode {
    pub const ALL: [AblationMode; 4] = [Self::Sis, Self::AbDm, Self::AbSi, Self::AbMi];

    pub fn name(self) -> &'static str {
        match self {
            Self::Sis => "sis",
            Self::AbDm => "ab-dm",
            Self::AbSi => "ab-si",
            Self::AbMi => "ab-mi",
        }
    }
}

impl std::str::FromStr for AblationMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "sis" => Ok(Self::Sis),
            "ab-dm" => Ok(Self::AbDm),
            "ab-si" => Ok(Self::AbSi),
            "ab-mi" => Ok(Self::AbMi),
            other => Err(format!("unknown mode {other:?}; expected sis, ab-dm, ab-si or ab-mi")),
        }
    }
}

impl std::fmt::Display for AblationMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PathsConfig {
    /// Demonstration matrix; the starting point for both matrices unless
    /// they are given separately.
    pub init_matrix: Option<PathBuf>,
    pub nint_matrix: Option<PathBuf>,
    pub int_matrix: Option<PathBuf>,
    /// Garment geometry; the bundled T-shirt when absent.
    pub garment: Option<PathBuf>,
    pub out_dir: Option<PathBuf>,
}

impl PathsConfig {
    fn resolve_against(&mut self, base: &Path) {
        for p in [
            &mut self.init_matrix,
            &mut self.nint_matrix,
            &mut self.int_matrix,
            &mut self.garment,
            &mut self.out_dir,
        ]
        .into_iter()
        .flatten()
        {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub n_trials: usize,
    pub t_max: usize,
    pub success_threshold: f64,
    pub matrix_switch_threshold: f64,
    pub mode: AblationMode,
    pub seed: u64,
    /// Count steps whose grasp missed the garment in the statistics.
    pub include_failures: bool,
    pub paths: PathsConfig,
    pub sim: SimConfig,
    pub fusion: FusionConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            n_trials: 20,
            t_max: 5,
            success_threshold: 0.85,
            matrix_switch_threshold: 0.4,
            mode: AblationMode::Sis,
            seed: 0,
            include_failures: false,
            paths: PathsConfig::default(),
            sim: SimConfig::default(),
            fusion: FusionConfig::default(),
        }
    }
}

impl ExperimentConfig {
    /// Reads a TOML file; relative paths inside it are taken relative to the
    /// file's directory.
    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))?;
        let mut cfg = Self::from_toml(&text).map_err(|e| match e {
            HarnessError::Config(m) => HarnessError::Config(format!("{}: {m}", path.display())),
            other => other,
        })?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        cfg.paths.resolve_against(base);
        Ok(cfg)
    }

    pub fn from_toml(text: &str) -> Result<Self, HarnessError> {
        let cfg: Self = toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |m: String| Err(HarnessError::Config(m));
        if self.n_trials == 0 {
            return bad("n_trials must be at least 1".into());
        }
        if self.t_max == 0 {
            return bad("t_max must be at least 1".into());
        }
        for (name, v) in [
            ("success_threshold", self.success_threshold),
            ("matrix_switch_threshold", self.matrix_switch_threshold),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return bad(format!("{name} must be in [0, 1], got {v}"));
            }
        }
        self.sim.validate().map_err(|e| HarnessError::Config(e.to_string()))?;
        self.fusion.validate().map_err(|e| HarnessError::Config(format!("fusion: {e}")))?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_and_partial_files() {
        let cfg = ExperimentConfig::from_toml("").unwrap();
        assert_eq!(cfg, ExperimentConfig::default());
        let cfg = ExperimentConfig::from_toml(
            "mode = \"ab_dm\"\nseed = 7\n[sim]\nrotation_noise_deg = 0.0\n[fusion]\ndedup_radius = 5.0\n",
        )
        .unwrap();
        assert_eq!(cfg.mode, AblationMode::AbDm);
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.sim.rotation_noise_deg, 0.0);
        assert_eq!(cfg.sim.max_folds, 4);
        assert_eq!(cfg.fusion.max_per_type, [2, 2, 2]);
    }

    #[test]
    fn rejects_bad_values() {
        for text in [
            "t_max = 0",
            "success_threshold = 1.5",
            "unknown_key = 1",
            "[sim]\nmax_folds = 0",
            "[fusion]\nmax_per_type = [0, 2, 2]",
            "mode = \"greedy\"",
        ] {
            assert!(
                matches!(ExperimentConfig::from_toml(text), Err(HarnessError::Config(_))),
                "{text}"
            );
        }
    }

    #[test]
    fn mode_names() {
        for m in AblationMode::ALL {
            assert_eq!(m.name().parse::<AblationMode>().unwrap(), m);
        }
        assert_eq!("AB_SI".parse::<AblationMode>().unwrap(), AblationMode::AbSi);
        assert!("x".parse::<AblationMode>().is_err());
    }

    #[test]
    fn relative_paths_follow_the_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.toml");
        std::fs::write(&path, "[paths]\ninit_matrix = \"m/init.json\"\nout_dir = \"/abs/out\"\n").unwrap();
        let cfg = ExperimentConfig::load(&path).unwrap();
        assert_eq!(cfg.paths.init_matrix.unwrap(), dir.path().join("m/init.json"));
        assert_eq!(cfg.paths.out_dir.unwrap(), PathBuf::from("/abs/out"));
        assert!(matches!(
            ExperimentConfig::load(&dir.path().join("missing.toml")),
            Err(HarnessError::Config(_))
        ));
    }
}
