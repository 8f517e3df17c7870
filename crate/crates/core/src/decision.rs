//! Verdicts returned by the congruence and conjugacy deciders.

use serde::{Deserialize, Serialize};

use crate::hlinalg::HMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Congruent,
    NotCongruent,
    Conjugate,
    NotConjugate,
    Inconclusive,
}

/// The invariant that separated two inputs, or why no verdict was reached.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Reason {
    GramOrbit,
    RealTrace,
    NegativeClass,
    SingleConjugacy,
    CanonicalOrbit,
    Grassmannian,
    Multiplicity,
    Degenerate,
    Verification,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Decision {
    pub verdict: Verdict,
    pub reason: Option<Reason>,
    pub witness: Option<HMatrix>,
    pub residual: Option<f64>,
}

impl Decision {
    pub fn positive(verdict: Verdict, witness: HMatrix, residual: f64) -> Self {
        Decision { verdict, reason: None, witness: Some(witness), residual: Some(residual) }
    }

    pub fn negative(verdict: Verdict, reason: Reason) -> Self {
        Decision { verdict, reason: Some(reason), witness: None, residual: None }
    }

    pub fn inconclusive(reason: Reason) -> Self {
        Decision::negative(Verdict::Inconclusive, reason)
    }

    pub fn is_positive(&self) -> bool {
        matches!(self.verdict, Verdict::Congruent | Verdict::Conjugate)
    }

    /// 0 positive, 1 negative, 3 inconclusive.
    pub fn exit_code(&self) -> i32 {
        match self.verdict {
            Verdict::Congruent | Verdict::Conjugate => 0,
            Verdict::NotCongruent | Verdict::NotConjugate => 1,
            Verdict::Inconclusive => 3,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes() {
        assert_eq!(Decision::positive(Verdict::Conjugate, HMatrix::identity(2), 0.0).exit_code(), 0);
        assert_eq!(Decision::negative(Verdict::NotCongruent, Reason::GramOrbit).exit_code(), 1);
        let d = Decision::inconclusive(Reason::Multiplicity);
        assert_eq!(d.exit_code(), 3);
        assert!(!d.is_positive());
        let v = serde_json::to_value(&d).unwrap();
        assert_eq!(v["verdict"], "inconclusive");
        assert_eq!(v["reason"], "multiplicity");
    }
}
