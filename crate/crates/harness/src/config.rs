use std::path::{Path, PathBuf};
use std::str::FromStr;

use erm_lab_core::instances::{default_dimension, default_threshold};
use erm_lab_core::nn::{ActivationKind, LossKind, NN_MIN_PRECISION};
use erm_lab_core::precision::DEFAULT_PRECISION_CAP;
use erm_lab_core::{Error, PrecisionPolicy, Reduction, Result};
use rug::Rational;
use serde::{Deserialize, Serialize};

/// Overrides `precision_cap` when set.
pub const PRECISION_CAP_ENV: &str = "ERM_LAB_PRECISION_CAP";

/// Starting precision of the gradient reductions.
const GRADIENT_START_BITS: u32 = 128;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DimensionRule {
    /// `max(4, ceil(log2(n)^2))`.
    Default,
    Fixed(usize),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThresholdRule {
    /// `max(2, ceil(d / 5))`.
    Default,
    Fixed(usize),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchSettings {
    pub n_start: usize,
    pub doublings: usize,
    pub d: usize,
    /// Minimum wall time per measurement batch.
    pub min_batch_ms: u64,
}

impl Default for BenchSettings {
    fn default() -> Self {
        BenchSettings { n_start: 64, doublings: 3, d: 64, min_batch_ms: 150 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub reductions: Vec<Reduction>,
    pub n_values: Vec<usize>,
    pub d_rule: DimensionRule,
    pub t_rule: ThresholdRule,
    /// Trials per (reduction, n) cell; even trials are planted YES, odd NO.
    pub trials: usize,
    pub seed: u64,
    /// `C = c_multiplier * ln n`, as a rational string.
    pub c_multiplier: String,
    /// Activation exponent `T`.
    pub t_exponent: u32,
    pub k_loss: String,
    pub k_box: i64,
    pub activation: ActivationKind,
    /// Loss used by the gradient reductions.
    pub gradient_loss: LossKind,
    /// Fixed starting precision; `None` derives it per reduction.
    pub precision_start: Option<u32>,
    pub precision_cap: u32,
    /// Replace every threshold by the statistic itself (exercises UNDECIDABLE).
    pub force_tie: bool,
    pub bench: BenchSettings,
    pub json_out: Option<PathBuf>,
    pub csv_out: Option<PathBuf>,
    pub markdown_out: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            reductions: Reduction::ALL.to_vec(),
            n_values: vec![4, 8, 16],
            d_rule: DimensionRule::Default,
            t_rule: ThresholdRule::Default,
            trials: 25,
            seed: 20240601,
            c_multiplier: "100".into(),
            t_exponent: erm_lab_core::nn::DEFAULT_T,
            k_loss: "1".into(),
            k_box: erm_lab_core::svm::DEFAULT_K_BOX,
            activation: ActivationKind::Relu,
            gradient_loss: LossKind::Logistic,
            precision_start: None,
            precision_cap: DEFAULT_PRECISION_CAP,
            force_tie: false,
            bench: BenchSettings::default(),
            json_out: None,
            csv_out: None,
            markdown_out: None,
        }
    }
}

fn parse_rational(field: &str, s: &str) -> Result<Rational> {
    Rational::from_str(s.trim())
        .map_err(|e| Error::Parse { field: field.into(), message: format!("'{s}' is not a rational: {e}") })
}

impl ExperimentConfig {
    pub fn from_json_str(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(text)
            .map_err(|e| Error::Parse { field: "config".into(), message: e.to_string() })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::from_json_str(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.reductions.is_empty() {
            return Err(Error::Parameter("the reduction set is empty".into()));
        }
        if self.n_values.is_empty() || self.n_values.iter().any(|&n| n < 2) {
            return Err(Error::Parameter("every n must be at least 2".into()));
        }
        if self.trials == 0 {
            return Err(Error::Parameter("trials must be at least 1".into()));
        }
        if self.precision_cap < 64 {
            return Err(Error::Parameter("precision cap must be at least 64 bits".into()));
        }
        if self.k_box <= 0 || self.t_exponent == 0 {
            return Err(Error::Parameter("K_box and T must be positive".into()));
        }
        if self.c_multiplier()? <= 0 || self.k_loss()? <= 0 {
            return Err(Error::Parameter("C multiplier and K_loss must be positive".into()));
        }
        Ok(())
    }

    /// Applies `ERM_LAB_PRECISION_CAP` if it is set.
    pub fn with_env_overrides(mut self) -> Result<Self> {
        if let Ok(v) = std::env::var(PRECISION_CAP_ENV) {
            self.precision_cap = v.trim().parse().map_err(|_| Error::Parse {
                field: PRECISION_CAP_ENV.into(),
                message: format!("'{v}' is not a bit count"),
            })?;
        }
        Ok(self)
    }

    pub fn c_multiplier(&self) -> Result<Rational> {
        parse_rational("c_multiplier", &self.c_multiplier)
    }

    pub fn k_loss(&self) -> Result<Rational> {
        parse_rational("k_loss", &self.k_loss)
    }

    pub fn dimension(&self, n: usize) -> usize {
        match self.d_rule {
            DimensionRule::Default => default_dimension(n),
            DimensionRule::Fixed(d) => d,
        }
    }

    pub fn threshold(&self, d: usize) -> usize {
        match self.t_rule {
            ThresholdRule::Default => default_threshold(d),
            ThresholdRule::Fixed(t) => t,
        }
    }

    /// Precision schedule for one reduction at size `n` (and BHCP threshold `t`).
    pub fn policy(&self, reduction: Reduction, n: usize, t: Option<usize>) -> Result<PrecisionPolicy> {
        let cap = self.precision_cap;
        let start = match reduction {
            Reduction::NnHinge | Reduction::NnLogistic => self.precision_start.unwrap_or(0).max(NN_MIN_PRECISION),
            Reduction::GradRelu | Reduction::GradSigmoid => self.precision_start.unwrap_or(GRADIENT_START_BITS),
            _ => match self.precision_start {
                Some(p) => p,
                None => {
                    let c = self.c_multiplier()?.to_f64() * (n.max(2) as f64).ln();
                    let depth = t.ok_or_else(|| Error::Validation("BHCP reduction without threshold".into()))?;
                    PrecisionPolicy::for_depth(c, depth, cap).start_bits
                }
            },
        };
        Ok(PrecisionPolicy::new(start.min(cap), cap))
    }
}
