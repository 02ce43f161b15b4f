use std::time::Instant;

use erm_lab_core::gradient::{gradient_distinguisher, Gadget};
use erm_lab_core::instances::{generate, normalize, GenerateParams, Planted, ProblemKind, VectorPairInstance};
use erm_lab_core::kernels::KernelParams;
use erm_lab_core::kpca::kpca_distinguisher;
use erm_lab_core::krr::krr_distinguisher;
use erm_lab_core::nn::{nn_distinguisher, LossKind, NiceLoss};
use erm_lab_core::oracles::{solve_bhcp, solve_ovp};
use erm_lab_core::svm::{soft_margin_distinguisher, svm_distinguisher, SvmVariant};
use erm_lab_core::verdict::decide;
use erm_lab_core::{Answer, Error, PrecisionPolicy, Reduction, ReductionVerdict, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::ExperimentConfig;

/// Digits kept when printing interval endpoints.
const DIGITS: usize = 17;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cell {
    pub reduction: Reduction,
    pub n: usize,
    pub trial: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TrialVerdict {
    #[serde(rename = "YES")]
    Yes,
    #[serde(rename = "NO")]
    No,
    #[serde(rename = "UNDECIDABLE")]
    Undecidable,
    /// The pipeline raised an error; never counted as agreement.
    #[serde(rename = "ERROR")]
    Error,
}

impl TrialVerdict {
    pub fn as_str(self) -> &'static str {
        match self {
            TrialVerdict::Yes => "YES",
            TrialVerdict::No => "NO",
            TrialVerdict::Undecidable => "UNDECIDABLE",
            TrialVerdict::Error => "ERROR",
        }
    }
}

impl From<Answer> for TrialVerdict {
    fn from(a: Answer) -> Self {
        match a {
            Answer::Yes => TrialVerdict::Yes,
            Answer::No => TrialVerdict::No,
            Answer::Undecidable => TrialVerdict::Undecidable,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: usize,
    pub reduction: Reduction,
    pub n: usize,
    pub d: usize,
    pub t: Option<usize>,
    pub seed: u64,
    pub planted: Planted,
    /// First 16 hex digits of the SHA-256 of the instance file.
    pub instance_digest: String,
    pub oracle: Answer,
    pub verdict: TrialVerdict,
    pub agree: bool,
    pub stat_lo: String,
    pub stat_hi: String,
    pub thresh_lo: String,
    pub thresh_hi: String,
    pub bits: u32,
    pub ms: f64,
    pub error: Option<String>,
}

fn decimal(s: String) -> String {
    if s == "-0" {
        "0".into()
    } else {
        s
    }
}

/// Per-trial seed, independent of scheduling order.
pub fn trial_seed(base: u64, cell: &Cell) -> u64 {
    let mut h = Sha256::new();
    h.update(base.to_le_bytes());
    h.update(cell.reduction.as_str().as_bytes());
    h.update((cell.n as u64).to_le_bytes());
    h.update((cell.trial as u64).to_le_bytes());
    let out = h.finalize();
    u64::from_le_bytes(out[..8].try_into().expect("digest has 32 bytes"))
}

pub fn instance_digest(inst: &VectorPairInstance) -> String {
    let out = Sha256::digest(inst.to_json_string().as_bytes());
    out[..8].iter().map(|b| format!("{b:02x}")).collect()
}

fn loss_for(config: &ExperimentConfig, kind: LossKind) -> Result<NiceLoss> {
    Ok(NiceLoss { kind, k_loss: config.k_loss()? })
}

/// Runs one reduction on `inst`; OVP inputs to the network reductions are
/// normalized first.
pub fn decide_instance(reduction: Reduction, inst: &VectorPairInstance, config: &ExperimentConfig) -> Result<ReductionVerdict> {
    if inst.kind != reduction.problem() {
        return Err(Error::Validation(format!(
            "reduction {reduction} takes a {} instance, got {}",
            reduction.problem().as_str(),
            inst.kind.as_str()
        )));
    }
    let n = inst.n();
    let policy = config.policy(reduction, n, inst.t)?;
    let kernel = || KernelParams::new(config.c_multiplier()?, n.max(2), policy.start_bits);
    let verdict = match reduction {
        Reduction::Svm => svm_distinguisher(inst, &kernel()?, &SvmVariant::HardMargin, &policy)?,
        Reduction::SvmBias => svm_distinguisher(inst, &kernel()?, &SvmVariant::Bias, &policy)?,
        Reduction::SvmSoft => soft_margin_distinguisher(inst, &kernel()?, None, config.k_box, &policy)?,
        Reduction::Kpca => kpca_distinguisher(inst, &kernel()?, &policy)?,
        Reduction::Krr => krr_distinguisher(inst, &kernel()?, &policy)?,
        Reduction::NnHinge | Reduction::NnLogistic => {
            let kind = if reduction == Reduction::NnHinge { LossKind::Hinge } else { LossKind::Logistic };
            let normalized = if inst.normalized { inst.clone() } else { normalize(inst)? };
            nn_distinguisher(&normalized, &loss_for(config, kind)?, config.activation, config.t_exponent, &policy)?
        }
        Reduction::GradRelu => gradient_distinguisher(inst, &loss_for(config, config.gradient_loss)?, Gadget::Relu, &policy)?,
        Reduction::GradSigmoid => {
            gradient_distinguisher(inst, &loss_for(config, config.gradient_loss)?, Gadget::Sigmoid, &policy)?
        }
    };
    if !config.force_tie {
        return Ok(verdict);
    }
    let stat = verdict.statistic.clone();
    let tie = PrecisionPolicy::new(verdict.precision_bits_used, config.precision_cap.max(verdict.precision_bits_used));
    let mut tied = decide(reduction, &tie, |bits| {
        let s = stat.with_prec(bits);
        Ok::<_, Error>((s.clone(), s))
    })?;
    tied.solve_time += verdict.solve_time;
    Ok(tied)
}

/// Even trials are planted YES, odd trials NO.
fn planted_for(cell: &Cell) -> Planted {
    if cell.trial.is_multiple_of(2) {
        Planted::Yes
    } else {
        Planted::No
    }
}

fn build_instance(config: &ExperimentConfig, cell: &Cell, seed: u64) -> Result<VectorPairInstance> {
    let kind = cell.reduction.problem();
    let d = config.dimension(cell.n);
    let t = (kind == ProblemKind::Bhcp).then(|| config.threshold(d));
    let g = generate(&GenerateParams { kind, n: cell.n, d, t, planted: planted_for(cell), seed })?;
    Ok(g.instance)
}

/// Generates the cell's instance, runs the oracle and the reduction, and
/// records the outcome. Errors are recorded, not propagated.
pub fn run_trial(config: &ExperimentConfig, cell: &Cell) -> TrialRecord {
    let seed = trial_seed(config.seed, cell);
    let d = config.dimension(cell.n);
    let t = (cell.reduction.problem() == ProblemKind::Bhcp).then(|| config.threshold(d));
    let planted = planted_for(cell);
    let mut rec = TrialRecord {
        trial: cell.trial,
        reduction: cell.reduction,
        n: cell.n,
        d,
        t,
        seed,
        planted,
        instance_digest: String::new(),
        oracle: Answer::Undecidable,
        verdict: TrialVerdict::Error,
        agree: false,
        stat_lo: String::new(),
        stat_hi: String::new(),
        thresh_lo: String::new(),
        thresh_hi: String::new(),
        bits: 0,
        ms: 0.0,
        error: None,
    };
    let start = Instant::now();
    let outcome = (|| -> Result<ReductionVerdict> {
        let inst = build_instance(config, cell, seed)?;
        rec.instance_digest = instance_digest(&inst);
        let truth = match inst.kind {
            ProblemKind::Ovp => solve_ovp(&inst)?,
            ProblemKind::Bhcp => solve_bhcp(&inst)?,
        };
        rec.oracle = Answer::from_bool(truth.has_pair);
        decide_instance(cell.reduction, &inst, config)
    })();
    rec.ms = start.elapsed().as_secs_f64() * 1e3;
    match outcome {
        Ok(v) => {
            rec.verdict = v.answer.into();
            rec.agree = v.answer == rec.oracle;
            rec.stat_lo = decimal(v.statistic.lo_decimal(DIGITS));
            rec.stat_hi = decimal(v.statistic.hi_decimal(DIGITS));
            rec.thresh_lo = decimal(v.threshold.lo_decimal(DIGITS));
            rec.thresh_hi = decimal(v.threshold.hi_decimal(DIGITS));
            rec.bits = v.precision_bits_used;
        }
        Err(e) => rec.error = Some(e.to_string()),
    }
    rec
}
