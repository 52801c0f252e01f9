//! Discrete Shannon entropies over probability vectors and joint
//! distributions.
//!
//! All quantities are computed in nats and converted to the requested
//! logarithm base at the end. Cells below [`ZERO_CUTOFF`] contribute nothing
//! (the `0 log 0 = 0` convention).

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::dist::{marginalize, stable_sum, JointDistribution};
use crate::error::{Error, Result};
use crate::grid::Party;

/// Probabilities below this are treated as exact zeros.
pub const ZERO_CUTOFF: f64 = 1e-300;

/// Tolerance on the total of a probability vector passed to [`entropy`].
pub const VECTOR_SUM_TOLERANCE: f64 = 1e-9;

/// Base of the logarithm; fixes the entropy unit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct LogBase(f64);

impl LogBase {
    pub const BITS: LogBase = LogBase(2.0);
    pub const NATS: LogBase = LogBase(std::f64::consts::E);
    pub const DITS: LogBase = LogBase(10.0);

    pub fn new(base: f64) -> Result<Self> {
        if base > 1.0 && base.is_finite() {
            Ok(LogBase(base))
        } else {
            Err(Error::InvalidParameter(format!(
                "logarithm base must be a finite number above 1, got {base}"
            )))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn ln(self) -> f64 {
        if self == Self::BITS {
            std::f64::consts::LN_2
        } else if self == Self::DITS {
            std::f64::consts::LN_10
        } else {
            self.0.ln()
        }
    }

    /// Logarithm of `x` in this base.
    pub fn log(self, x: f64) -> f64 {
        x.ln() / self.ln()
    }

    /// Convert a quantity in nats to this base.
    pub fn from_nats(self, nats: f64) -> f64 {
        nats / self.ln()
    }

    pub fn unit(self) -> String {
        if self == Self::BITS {
            "bit".into()
        } else if self == Self::NATS {
            "nat".into()
        } else if self == Self::DITS {
            "dit".into()
        } else {
            format!("log{}", self.0)
        }
    }
}

impl Default for LogBase {
    fn default() -> Self {
        Self::BITS
    }
}

impl TryFrom<f64> for LogBase {
    type Error = Error;

    fn try_from(b: f64) -> Result<Self> {
        LogBase::new(b)
    }
}

impl From<LogBase> for f64 {
    fn from(b: LogBase) -> f64 {
        b.0
    }
}

impl fmt::Display for LogBase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.unit())
    }
}

/// A discrete entropy together with the base it is expressed in.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EntropyValue {
    pub value: f64,
    pub base: LogBase,
}

impl EntropyValue {
    fn from_nats(nats: f64, base: LogBase) -> Self {
        Self {
            value: base.from_nats(nats),
            base,
        }
    }

    /// Same quantity expressed in `base`.
    pub fn rebase(self, base: LogBase) -> Self {
        Self {
            value: self.value * self.base.ln() / base.ln(),
            base,
        }
    }
}

fn neg_plogp(p: f64) -> f64 {
    if p < ZERO_CUTOFF {
        0.0
    } else {
        -p * p.ln()
    }
}

fn entropy_nats(p: &[f64]) -> f64 {
    stable_sum(p.iter().map(|&x| neg_plogp(x)))
}

/// Shannon entropy `-sum p log p` of a probability vector.
pub fn entropy(p: &[f64], base: LogBase) -> Result<EntropyValue> {
    if let Some((index, &value)) = p
        .iter()
        .enumerate()
        .find(|(_, &x)| !(x >= 0.0 && x.is_finite()))
    {
        return Err(Error::NegativeProbability { index, value });
    }
    let sum = stable_sum(p.iter().copied());
    if (sum - 1.0).abs() > VECTOR_SUM_TOLERANCE {
        return Err(Error::NotNormalized(sum));
    }
    Ok(EntropyValue::from_nats(entropy_nats(p), base))
}

/// Entropy of the full cell distribution, `H(A, B)`.
pub fn joint_entropy(dist: &JointDistribution, base: LogBase) -> EntropyValue {
    EntropyValue::from_nats(entropy_nats(dist.probs()), base)
}

/// Entropy of one party's marginal.
pub fn marginal_entropy(dist: &JointDistribution, party: Party, base: LogBase) -> EntropyValue {
    EntropyValue::from_nats(entropy_nats(&marginalize(dist, party)), base)
}

/// Entropy of the other party given `conditioned_party`, computed as
/// `H(A, B) - H(conditioned_party)`. `Party::A` gives `H(B|A)`.
pub fn conditional_entropy(
    dist: &JointDistribution,
    conditioned_party: Party,
    base: LogBase,
) -> EntropyValue {
    let joint = entropy_nats(dist.probs());
    let given = entropy_nats(&marginalize(dist, conditioned_party));
    EntropyValue::from_nats((joint - given).max(0.0), base)
}

/// `I(A; B) = H(A) + H(B) - H(A, B)`.
pub fn mutual_information(dist: &JointDistribution, base: LogBase) -> EntropyValue {
    let joint = entropy_nats(dist.probs());
    let a = entropy_nats(&marginalize(dist, Party::A));
    let b = entropy_nats(&marginalize(dist, Party::B));
    EntropyValue::from_nats((a + b - joint).max(0.0), base)
}
