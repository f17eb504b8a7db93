use serde::{Deserialize, Serialize};

use atsp_core::leverage::LeverageConfig;
use atsp_core::sparsifier::{BssConfig, RandomizedConfig};

use crate::error::{CliError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum MethodArg {
    Rand,
    Det,
}

/// Everything a pipeline run depends on besides the input bytes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub method: MethodArg,
    pub eps: f64,
    pub delta: f64,
    pub eps_sigma: f64,
    /// `delta / 2` when unset.
    pub delta_sigma: Option<f64>,
    /// Declared bound on `||XX^T||_inf`; measured when unset.
    pub radius: Option<f64>,
    pub seed: u64,
    pub c_chernoff: f64,
    pub c_bss: f64,
    pub s1_const: f64,
    pub s2_const: f64,
    pub validate_radius: bool,
    pub threads: Option<usize>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let lev = LeverageConfig::default();
        Self {
            method: MethodArg::Rand,
            eps: 0.5,
            delta: 0.05,
            eps_sigma: 0.5,
            delta_sigma: None,
            radius: None,
            seed: 0,
            c_chernoff: 4.0,
            c_bss: BssConfig::default().c_bss,
            s1_const: lev.s1_const,
            s2_const: lev.s2_const,
            validate_radius: true,
            threads: None,
        }
    }
}

fn open_unit(name: &str, v: f64, hi: f64, hi_inclusive: bool) -> Result<()> {
    let ok = v > 0.0 && (v < hi || (hi_inclusive && v == hi));
    if ok {
        Ok(())
    } else {
        let close = if hi_inclusive { ']' } else { ')' };
        Err(CliError::Usage(format!("{name} must lie in (0, {hi}{close}, got {v}")))
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        open_unit("eps", self.eps, 1.0, false)?;
        open_unit("delta", self.delta, 0.1, false)?;
        open_unit("eps-sigma", self.eps_sigma, 1.0, false)?;
        open_unit("delta-sigma", self.effective_delta_sigma(), 0.1, true)?;
        if let Some(r) = self.radius {
            open_unit("r", r, 0.1, false)?;
        }
        for (name, v) in [
            ("c-chernoff", self.c_chernoff),
            ("c-bss", self.c_bss),
            ("s1 constant", self.s1_const),
            ("s2 constant", self.s2_const),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(CliError::Usage(format!("{name} must be positive, got {v}")));
            }
        }
        if self.threads == Some(0) {
            return Err(CliError::Usage("threads must be positive".into()));
        }
        Ok(())
    }

    pub fn effective_delta_sigma(&self) -> f64 {
        self.delta_sigma.unwrap_or(self.delta / 2.0)
    }

    pub fn randomized(&self) -> RandomizedConfig {
        RandomizedConfig {
            eps_sigma: self.eps_sigma,
            delta_sigma: Some(self.effective_delta_sigma()),
            c_chernoff: self.c_chernoff,
            leverage: LeverageConfig {
                s1_const: self.s1_const,
                s2_const: self.s2_const,
                ..LeverageConfig::default()
            },
        }
    }

    pub fn barrier(&self) -> BssConfig {
        BssConfig { c_bss: self.c_bss }
    }
}
