use serde::{Deserialize, Serialize};

use crate::model::encoding::bit_weights;
use crate::model::{ModelError, QuboModel};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    Eq,
    Le,
}

/// `Σ π_i x_i (= | ≤) β` over the first `coeffs.len()` binaries of a model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct LinearConstraint<S> {
    coeffs: Vec<S>,
    relation: Relation,
    rhs: S,
}

impl<S: Scalar> LinearConstraint<S> {
    pub fn new(coeffs: Vec<S>, relation: Relation, rhs: S) -> Result<Self, ModelError> {
        if coeffs.iter().all(|c| *c == S::zero()) {
            return Err(ModelError::DegenerateConstraint);
        }
        Ok(Self { coeffs, relation, rhs })
    }

    pub fn equality(coeffs: Vec<S>, rhs: S) -> Result<Self, ModelError> {
        Self::new(coeffs, Relation::Eq, rhs)
    }

    pub fn at_most(coeffs: Vec<S>, rhs: S) -> Result<Self, ModelError> {
        Self::new(coeffs, Relation::Le, rhs)
    }

    /// `1^T x = k` over `n` binaries.
    pub fn cardinality(n: usize, k: usize) -> Result<Self, ModelError> {
        Self::equality(vec![S::one(); n], S::from_usize_lossy(k))
    }

    pub fn coeffs(&self) -> &[S] {
        &self.coeffs
    }

    pub fn relation(&self) -> Relation {
        self.relation
    }

    pub fn rhs(&self) -> S {
        self.rhs
    }

    /// Highest variable index referenced (with a nonzero coefficient) plus one.
    pub fn span(&self) -> usize {
        self.coeffs.iter().rposition(|c| *c != S::zero()).map_or(0, |i| i + 1)
    }

    pub fn lhs(&self, x: &[bool]) -> S {
        self.coeffs.iter().zip(x).filter(|(_, &b)| b).map(|(c, _)| *c).sum()
    }

    /// Signed violation: positive means infeasible.
    pub fn violation(&self, x: &[bool]) -> S {
        let d = self.lhs(x) - self.rhs;
        match self.relation {
            Relation::Eq => d.abs(),
            Relation::Le => d.max(S::zero()),
        }
    }

    pub fn is_satisfied(&self, x: &[bool], tolerance: S) -> bool {
        self.violation(x) <= tolerance
    }
}

/// Slack variable `σ = granularity · Σ w_j b_j` appended to a model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct SlackEncoding<S> {
    pub first_bit: usize,
    pub granularity: S,
    pub bit_weights: Vec<u64>,
}

impl<S: Scalar> SlackEncoding<S> {
    pub fn n_bits(&self) -> usize {
        self.bit_weights.len()
    }

    pub fn value(&self, bits: &[bool]) -> S {
        let units: u64 = self
            .bit_weights
            .iter()
            .zip(&bits[self.first_bit..self.first_bit + self.n_bits()])
            .filter(|(_, &b)| b)
            .map(|(w, _)| *w)
            .sum();
        S::from_u64(units).expect("slack units fit scalar") * self.granularity
    }
}

fn check_lambda<S: Scalar>(lambda: S) -> Result<(), ModelError> {
    if lambda > S::zero() && lambda.is_finite() {
        Ok(())
    } else {
        Err(ModelError::NonPositive { name: "lambda", value: lambda.as_f64() })
    }
}

/// `λ (π^T x − β)²` expanded over binaries, as its own model on `n` variables.
fn squared_residual<S: Scalar>(n: usize, coeffs: &[S], rhs: S, lambda: S) -> Result<QuboModel<S>, ModelError> {
    let two = S::lit(2.0);
    let mut p = QuboModel::new(n);
    let nz: Vec<(usize, S)> = coeffs.iter().copied().enumerate().filter(|(_, c)| *c != S::zero()).collect();
    for (a, &(i, ci)) in nz.iter().enumerate() {
        p.add_linear(i, lambda * (ci * ci - two * rhs * ci))?;
        for &(j, cj) in &nz[a + 1..] {
            p.add_quadratic(i, j, lambda * two * ci * cj)?;
        }
    }
    p.add_offset(lambda * rhs * rhs);
    Ok(p)
}

/// Returns `m + λ (π^T x − β)²`, using `x_i² = x_i`.
pub fn penalize_equality<S: Scalar>(m: &QuboModel<S>, c: &LinearConstraint<S>, lambda: S) -> Result<QuboModel<S>, ModelError> {
    if c.relation != Relation::Eq {
        return Err(ModelError::WrongRelation { expected: Relation::Eq });
    }
    check_lambda(lambda)?;
    if c.span() > m.n() {
        return Err(ModelError::IndexOutOfRange { index: c.span() - 1, n: m.n() });
    }
    let mut out = m.clone();
    out.add_scaled(&squared_residual(m.n(), &c.coeffs, c.rhs, lambda)?, S::one())?;
    Ok(out)
}

/// Lowers `π^T x ≤ β` to `π^T x + σ = β` with a binary-encoded slack
/// `σ ∈ [0, β]` at resolution `granularity`, then penalizes the equality.
///
/// Slack bits are appended after the existing variables.
pub fn penalize_inequality<S: Scalar>(
    m: &QuboModel<S>,
    c: &LinearConstraint<S>,
    lambda: S,
    granularity: S,
) -> Result<(QuboModel<S>, SlackEncoding<S>), ModelError> {
    if c.relation != Relation::Le {
        return Err(ModelError::WrongRelation { expected: Relation::Le });
    }
    check_lambda(lambda)?;
    if !(granularity > S::zero() && granularity.is_finite()) {
        return Err(ModelError::NonPositive { name: "slack_granularity", value: granularity.as_f64() });
    }
    if c.rhs < S::zero() {
        return Err(ModelError::NegativeRhs(c.rhs.as_f64()));
    }
    if c.span() > m.n() {
        return Err(ModelError::IndexOutOfRange { index: c.span() - 1, n: m.n() });
    }

    let units = (c.rhs / granularity).floor().to_u64().ok_or(ModelError::NegativeRhs(c.rhs.as_f64()))?;
    let slack = SlackEncoding { first_bit: m.n(), granularity, bit_weights: bit_weights(units) };

    let mut out = m.clone();
    out.extend(slack.n_bits());
    let mut coeffs = c.coeffs.clone();
    coeffs.resize(m.n(), S::zero());
    coeffs.extend(slack.bit_weights.iter().map(|w| S::from_u64(*w).expect("slack weight fits") * granularity));
    out.add_scaled(&squared_residual(out.n(), &coeffs, c.rhs, lambda)?, S::one())?;
    Ok((out, slack))
}
