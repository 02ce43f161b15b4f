//! Certified decisions returned by every reduction.

use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instances::ProblemKind;
use crate::precision::{escalate_precision, Interval, PrecisionPolicy, Side};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Answer {
    #[serde(rename = "YES")]
    Yes,
    #[serde(rename = "NO")]
    No,
    #[serde(rename = "UNDECIDABLE")]
    Undecidable,
}

impl Answer {
    pub fn as_str(self) -> &'static str {
        match self {
            Answer::Yes => "YES",
            Answer::No => "NO",
            Answer::Undecidable => "UNDECIDABLE",
        }
    }

    pub fn from_bool(has_pair: bool) -> Self {
        if has_pair {
            Answer::Yes
        } else {
            Answer::No
        }
    }
}

impl From<Side> for Answer {
    fn from(side: Side) -> Self {
        match side {
            Side::Above => Answer::Yes,
            Side::Below => Answer::No,
            Side::Undecidable => Answer::Undecidable,
        }
    }
}

impl fmt::Display for Answer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Reduction {
    Svm,
    SvmBias,
    SvmSoft,
    Kpca,
    Krr,
    NnHinge,
    NnLogistic,
    GradRelu,
    GradSigmoid,
}

impl Reduction {
    pub const ALL: [Reduction; 9] = [
        Reduction::Svm,
        Reduction::SvmBias,
        Reduction::SvmSoft,
        Reduction::Kpca,
        Reduction::Krr,
        Reduction::NnHinge,
        Reduction::NnLogistic,
        Reduction::GradRelu,
        Reduction::GradSigmoid,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Reduction::Svm => "svm",
            Reduction::SvmBias => "svm_bias",
            Reduction::SvmSoft => "svm_soft",
            Reduction::Kpca => "kpca",
            Reduction::Krr => "krr",
            Reduction::NnHinge => "nn_hinge",
            Reduction::NnLogistic => "nn_logistic",
            Reduction::GradRelu => "grad_relu",
            Reduction::GradSigmoid => "grad_sigmoid",
        }
    }

    /// Source problem the reduction decides.
    pub fn problem(self) -> ProblemKind {
        match self {
            Reduction::Svm | Reduction::SvmBias | Reduction::SvmSoft | Reduction::Kpca | Reduction::Krr => {
                ProblemKind::Bhcp
            }
            _ => ProblemKind::Ovp,
        }
    }
}

impl fmt::Display for Reduction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Reduction {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase().replace('-', "_");
        if key == "nn" {
            return Ok(Reduction::NnHinge);
        }
        Reduction::ALL
            .into_iter()
            .find(|r| r.as_str() == key)
            .ok_or_else(|| Error::Parameter(format!("unknown reduction '{s}'")))
    }
}

/// A YES/NO decision backed by a certified statistic.
///
/// `threshold` is the band `[no_bound, yes_bound]`: YES means
/// `statistic.lo > threshold.hi`, NO means `statistic.hi < threshold.lo`.
#[derive(Clone, Debug, PartialEq)]
pub struct ReductionVerdict {
    pub answer: Answer,
    pub statistic: Interval,
    pub threshold: Interval,
    pub reduction: Reduction,
    pub precision_bits_used: u32,
    pub solve_time: Duration,
}

/// Runs `compute` under precision escalation and packages the outcome.
pub fn decide<F>(reduction: Reduction, policy: &PrecisionPolicy, compute: F) -> Result<ReductionVerdict>
where
    F: FnMut(u32) -> Result<(Interval, Interval)>,
{
    let start = Instant::now();
    let out = escalate_precision(policy, compute)?;
    Ok(ReductionVerdict {
        answer: out.side.into(),
        statistic: out.statistic,
        threshold: out.threshold,
        reduction,
        precision_bits_used: out.bits,
        solve_time: start.elapsed(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for r in Reduction::ALL {
            assert_eq!(r.as_str().parse::<Reduction>().unwrap(), r);
        }
        assert_eq!("nn".parse::<Reduction>().unwrap(), Reduction::NnHinge);
        assert!("lasso".parse::<Reduction>().is_err());
    }

    #[test]
    fn tie_is_undecidable() {
        let p = PrecisionPolicy::new(64, 128);
        let v = decide(Reduction::Kpca, &p, |b| Ok((Interval::one(b), Interval::one(b)))).unwrap();
        assert_eq!(v.answer, Answer::Undecidable);
        assert_eq!(v.precision_bits_used, 128);
    }
}
