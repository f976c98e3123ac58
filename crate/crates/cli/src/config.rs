//! JSON run configuration.

use std::path::{Path, PathBuf};

use num_complex::Complex;
use pxqama::inforate::BitAssignment;
use pxqama::region::{Family, Grid, ModeConfig, Scenario, Sizes};
use serde::{Deserialize, Serialize};

use crate::CliError;

/// Schema tag every config must carry.
pub const SCHEMA: &str = "pxqama.config/1";

fn one() -> f64 {
    1.0
}

fn two() -> f64 {
    2.0
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub schema: String,
    pub gamma1_db: Option<f64>,
    pub gamma2_db: Option<f64>,
    pub rho_abs: Option<f64>,
    #[serde(default)]
    pub rho_phase: f64,
    #[serde(default = "one")]
    pub sigma2: f64,
    #[serde(default)]
    pub grid: GridOverrides,
    pub mode: Option<ModeSpec>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    /// Modes kept by the reduction step.
    pub n2: Option<usize>,
    /// Channel uses simulated by `llr`.
    pub llr_samples: Option<usize>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridOverrides {
    pub theta_points: Option<usize>,
    pub power_steps: Option<usize>,
    pub layer_ratios: Option<Vec<f64>>,
    pub max_branch_bits: Option<usize>,
    pub family: Option<Family>,
    /// `[m0, n0, m1, n1]` entries.
    pub sizes: Option<Vec<[usize; 4]>>,
}

/// One transmission mode as written in a config.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeSpec {
    /// `[m0, n0, m1, n1]`.
    pub sizes: [usize; 4],
    #[serde(default = "two")]
    pub layer_ratio: f64,
    /// Shared beam angle in radians, within `[0, Theta]`.
    pub theta0: Option<f64>,
    /// Amplitudes `(a0, a1, a2)`; renormalized when their squares sum to
    /// within 1e-6 of one.
    pub alpha: Option<[f64; 3]>,
    #[serde(default)]
    pub assignment_mask_i: u32,
    #[serde(default)]
    pub assignment_mask_q: u32,
}

impl Config {
    /// Parses config text, reporting the line and column of syntax and
    /// schema errors.
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let cfg: Config = serde_json::from_str(text)
            .map_err(|e| CliError::Config(format!("line {}, column {}: {e}", e.line(), e.column())))?;
        if cfg.schema != SCHEMA {
            return Err(CliError::Config(format!("unsupported schema {:?}, expected {SCHEMA:?}", cfg.schema)));
        }
        if !(cfg.sigma2 > 0.0) || !cfg.sigma2.is_finite() {
            return Err(CliError::Config(format!("sigma2 must be positive, got {}", cfg.sigma2)));
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.to_owned(), source })?;
        Self::parse(&text).map_err(|e| match e {
            CliError::Config(msg) => CliError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    /// Channel scenario; dB values are converted to linear SNRs here.
    pub fn scenario(&self) -> Result<Scenario<f64>, CliError> {
        let need = |v: Option<f64>, name: &str| v.ok_or_else(|| CliError::Config(format!("missing {name}")));
        let g1 = need(self.gamma1_db, "gamma1_db")?;
        let g2 = need(self.gamma2_db, "gamma2_db")?;
        let rho = need(self.rho_abs, "rho_abs")?;
        if !g1.is_finite() || !g2.is_finite() {
            return Err(CliError::Config("SNRs must be finite".into()));
        }
        if !(0.0..1.0).contains(&rho) || !self.rho_phase.is_finite() {
            return Err(CliError::Config(format!("rho_abs must lie in [0, 1), got {rho}")));
        }
        let lin = |db: f64| 10f64.powf(db / 10.0);
        Ok(Scenario::new(lin(g1), lin(g2), Complex::from_polar(rho, self.rho_phase), self.sigma2)?)
    }

    pub fn grid(&self) -> Grid {
        let d = Grid::default();
        let o = &self.grid;
        Grid {
            theta_points: o.theta_points.unwrap_or(d.theta_points),
            power_steps: o.power_steps.unwrap_or(d.power_steps),
            layer_ratios: o.layer_ratios.clone().unwrap_or(d.layer_ratios),
            max_branch_bits: o.max_branch_bits.unwrap_or(d.max_branch_bits),
            family: o.family.unwrap_or(d.family),
            sizes: o.sizes.as_ref().map(|v| v.iter().map(|s| Sizes::new(s[0], s[1], s[2], s[3])).collect()),
        }
    }

    pub fn mode_spec(&self) -> Result<&ModeSpec, CliError> {
        self.mode.as_ref().ok_or_else(|| CliError::Config("missing mode".into()))
    }
}

impl ModeSpec {
    pub fn sizes(&self) -> Sizes {
        let [m0, n0, m1, n1] = self.sizes;
        Sizes::new(m0, n0, m1, n1)
    }

    pub fn assignment(&self) -> Result<BitAssignment, CliError> {
        let [m0, n0, ..] = self.sizes;
        Ok(BitAssignment::new(m0, n0, self.assignment_mask_i, self.assignment_mask_q)?)
    }

    /// Full mode, requiring `theta0` and `alpha`.
    pub fn mode(&self) -> Result<ModeConfig<f64>, CliError> {
        let theta0 = self.theta0.ok_or_else(|| CliError::Config("mode.theta0 is required".into()))?;
        let alpha = self.alpha.ok_or_else(|| CliError::Config("mode.alpha is required".into()))?;
        let sum: f64 = alpha.iter().map(|a| a * a).sum();
        if alpha.iter().any(|&a| a < 0.0 || !a.is_finite()) || (sum - 1.0).abs() > 1e-6 {
            return Err(CliError::Config(format!("mode.alpha squares must sum to 1 (got {sum})")));
        }
        let norm = sum.sqrt();
        let mode = ModeConfig {
            sizes: self.sizes(),
            layer_ratio: self.layer_ratio,
            assignment: self.assignment()?,
            theta0,
            alpha: alpha.map(|a| a / norm),
        };
        mode.validate()?;
        Ok(mode)
    }
}
