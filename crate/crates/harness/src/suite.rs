use std::time::{Duration, Instant};

use erm_lab_core::instances::{default_threshold, generate, GenerateParams, Planted, ProblemKind};
use erm_lab_core::oracles::solve_bhcp;
use erm_lab_core::{Reduction, Result};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::ExperimentConfig;
use crate::trial::{run_trial, Cell, TrialRecord, TrialVerdict};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReductionSummary {
    pub reduction: Reduction,
    pub trials: usize,
    pub agreed: usize,
    pub disagreed: usize,
    pub undecidable: usize,
    pub failed: usize,
    pub mean_ms: f64,
    pub max_ms: f64,
    pub max_bits: u32,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub trials: usize,
    pub decided: usize,
    pub agreed: usize,
    pub disagreed: usize,
    pub undecidable: usize,
    pub failed: usize,
    /// `agreed / decided`; 1 when nothing was decided.
    pub agreement_rate: f64,
    pub undecidable_rate: f64,
    pub per_reduction: Vec<ReductionSummary>,
    pub total_ms: f64,
}

/// Oracle timing at one size of the scaling benchmark.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingRow {
    pub n: usize,
    pub d: usize,
    pub runs: usize,
    pub ms_per_run: f64,
    /// Time relative to the previous row.
    pub ratio: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub config: ExperimentConfig,
    pub records: Vec<TrialRecord>,
    pub aggregate: Aggregate,
    pub scaling: Vec<ScalingRow>,
    /// SHA-256 over the records with timing removed.
    pub digest: String,
}

impl RunReport {
    fn assemble(config: &ExperimentConfig, records: Vec<TrialRecord>, scaling: Vec<ScalingRow>) -> Self {
        let aggregate = aggregate(&records);
        let digest = timing_free_digest(&records);
        RunReport { config: config.clone(), records, aggregate, scaling, digest }
    }

    /// Exit status: 0 all decided trials agree, 1 disagreement or failure,
    /// 2 undecidable trials present.
    pub fn exit_code(&self) -> u8 {
        let a = &self.aggregate;
        if a.disagreed > 0 || a.failed > 0 {
            1
        } else if a.undecidable > 0 {
            2
        } else {
            0
        }
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        serde_json::from_str(text)
            .map_err(|e| erm_lab_core::Error::Parse { field: "report".into(), message: e.to_string() })
    }
}

fn timing_free_digest(records: &[TrialRecord]) -> String {
    let mut h = Sha256::new();
    for r in records {
        let mut r = r.clone();
        r.ms = 0.0;
        h.update(serde_json::to_vec(&r).expect("records serialize"));
    }
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

pub fn aggregate(records: &[TrialRecord]) -> Aggregate {
    let mut agg = Aggregate { trials: records.len(), ..Default::default() };
    let mut order: Vec<Reduction> = Vec::new();
    for r in records {
        if !order.contains(&r.reduction) {
            order.push(r.reduction);
        }
        agg.total_ms += r.ms;
        match r.verdict {
            TrialVerdict::Undecidable => agg.undecidable += 1,
            TrialVerdict::Error => agg.failed += 1,
            _ if r.agree => agg.agreed += 1,
            _ => agg.disagreed += 1,
        }
    }
    agg.decided = agg.agreed + agg.disagreed;
    agg.agreement_rate = if agg.decided == 0 { 1.0 } else { agg.agreed as f64 / agg.decided as f64 };
    agg.undecidable_rate = if records.is_empty() { 0.0 } else { agg.undecidable as f64 / records.len() as f64 };
    for red in order {
        let rs: Vec<&TrialRecord> = records.iter().filter(|r| r.reduction == red).collect();
        let count = |v: TrialVerdict| rs.iter().filter(|r| r.verdict == v).count();
        let agreed = rs.iter().filter(|r| r.agree).count();
        let undecidable = count(TrialVerdict::Undecidable);
        let failed = count(TrialVerdict::Error);
        agg.per_reduction.push(ReductionSummary {
            reduction: red,
            trials: rs.len(),
            agreed,
            disagreed: rs.len() - agreed - undecidable - failed,
            undecidable,
            failed,
            mean_ms: rs.iter().map(|r| r.ms).sum::<f64>() / rs.len() as f64,
            max_ms: rs.iter().map(|r| r.ms).fold(0.0, f64::max),
            max_bits: rs.iter().map(|r| r.bits).max().unwrap_or(0),
        });
    }
    agg
}

/// All cells of `config` in report order: reduction, then n, then trial.
pub fn cells(config: &ExperimentConfig) -> Vec<Cell> {
    let mut out = Vec::new();
    for &reduction in &config.reductions {
        for &n in &config.n_values {
            for trial in 0..config.trials {
                out.push(Cell { reduction, n, trial });
            }
        }
    }
    out
}

pub fn run_suite(config: &ExperimentConfig) -> Result<RunReport> {
    config.validate()?;
    let records: Vec<TrialRecord> = cells(config).par_iter().map(|c| run_trial(config, c)).collect();
    Ok(RunReport::assemble(config, records, Vec::new()))
}

/// Brute-force BHCP timing over doubling `n` at fixed `d`. Each size is
/// measured as the best of three batches of at least `min_batch_ms`.
pub fn bench_scaling(config: &ExperimentConfig) -> Result<RunReport> {
    let b = &config.bench;
    if b.n_start < 2 || b.d < 2 {
        return Err(erm_lab_core::Error::Parameter("bench needs n_start >= 2 and d >= 2".into()));
    }
    let mut rows: Vec<ScalingRow> = Vec::new();
    for k in 0..=b.doublings {
        let n = b.n_start << k;
        let inst = generate(&GenerateParams {
            kind: ProblemKind::Bhcp,
            n,
            d: b.d,
            t: Some(default_threshold(b.d)),
            planted: Planted::Random,
            seed: config.seed.wrapping_add(k as u64),
        })?
        .instance;
        let min = Duration::from_millis(b.min_batch_ms);
        let mut best = f64::INFINITY;
        let mut total_runs = 0;
        for _ in 0..3 {
            let start = Instant::now();
            let mut runs = 0usize;
            while runs == 0 || start.elapsed() < min {
                std::hint::black_box(solve_bhcp(std::hint::black_box(&inst))?);
                runs += 1;
            }
            total_runs += runs;
            best = best.min(start.elapsed().as_secs_f64() * 1e3 / runs as f64);
        }
        let ratio = rows.last().map(|r| best / r.ms_per_run);
        rows.push(ScalingRow { n, d: b.d, runs: total_runs, ms_per_run: best, ratio });
    }
    Ok(RunReport::assemble(config, Vec::new(), rows))
}
