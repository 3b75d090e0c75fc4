use crate::marketdata::AssetStats;
use crate::model::constraint::{penalize_equality, penalize_inequality, LinearConstraint, Relation, SlackEncoding};
use crate::model::encoding::{encode_integer_at, IntegerEncoding};
use crate::model::{ModelError, QuboModel};
use crate::scalar::Scalar;

/// Quadratic objective over encoded binaries plus linear constraints that have
/// not been lowered to penalties yet.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstrainedModel<S> {
    pub objective: QuboModel<S>,
    pub constraints: Vec<LinearConstraint<S>>,
    pub encodings: Vec<IntegerEncoding>,
    pub variable_names: Vec<String>,
}

/// A constrained model after penalty lowering. Slack bits follow the
/// objective's variables in the order of `slacks`.
#[derive(Debug, Clone, PartialEq)]
pub struct LoweredModel<S> {
    pub qubo: QuboModel<S>,
    pub lambda: S,
    pub slacks: Vec<Option<SlackEncoding<S>>>,
}

impl<S: Scalar> ConstrainedModel<S> {
    pub fn new(
        objective: QuboModel<S>,
        constraints: Vec<LinearConstraint<S>>,
        encodings: Vec<IntegerEncoding>,
        variable_names: Vec<String>,
    ) -> Result<Self, ModelError> {
        let n = objective.n();
        if let Some(c) = constraints.iter().find(|c| c.span() > n) {
            return Err(ModelError::IndexOutOfRange { index: c.span() - 1, n });
        }
        if variable_names.len() != n {
            return Err(ModelError::LengthMismatch { expected: n, actual: variable_names.len() });
        }
        Ok(Self { objective, constraints, encodings, variable_names })
    }

    pub fn n_bits(&self) -> usize {
        self.objective.n()
    }

    /// Integer values of the encoded variables, in encoding order.
    pub fn decode(&self, bits: &[bool]) -> Vec<u64> {
        self.encodings.iter().map(|e| e.decode(bits)).collect()
    }

    pub fn is_feasible(&self, bits: &[bool], tolerance: S) -> bool {
        self.constraints.iter().all(|c| c.is_satisfied(&bits[..self.n_bits()], tolerance))
    }

    /// Largest change of the objective caused by flipping any single bit.
    pub fn max_flip_swing(&self) -> S {
        let mut swing: Vec<S> = self.objective.linear().iter().map(|a| a.abs()).collect();
        for (&(i, j), b) in self.objective.quadratic() {
            swing[i] = swing[i] + b.abs();
            swing[j] = swing[j] + b.abs();
        }
        swing.into_iter().fold(S::zero(), S::max)
    }

    /// Penalty weight making a one-unit-of-smallest-coefficient violation cost
    /// twice the largest single-flip objective swing.
    pub fn default_penalty(&self) -> S {
        let smallest = self
            .constraints
            .iter()
            .flat_map(|c| c.coeffs().iter().map(|v| v.abs()))
            .filter(|v| *v > S::zero())
            .fold(S::infinity(), S::min);
        if !smallest.is_finite() {
            return S::one();
        }
        (S::lit(2.0) * self.max_flip_swing() / (smallest * smallest)).max(S::min_positive_value())
    }

    /// Folds every constraint into the objective as a quadratic penalty.
    pub fn lower(&self, lambda: S, slack_granularity: S) -> Result<LoweredModel<S>, ModelError> {
        let mut qubo = self.objective.clone();
        let mut slacks = Vec::with_capacity(self.constraints.len());
        for c in &self.constraints {
            match c.relation() {
                Relation::Eq => {
                    qubo = penalize_equality(&qubo, c, lambda)?;
                    slacks.push(None);
                }
                Relation::Le => {
                    let (q, s) = penalize_inequality(&qubo, c, lambda, slack_granularity)?;
                    qubo = q;
                    slacks.push(Some(s));
                }
            }
        }
        Ok(LoweredModel { qubo, lambda, slacks })
    }
}

fn check_positive<S: Scalar>(name: &'static str, v: S) -> Result<(), ModelError> {
    if v > S::zero() && v.is_finite() {
        Ok(())
    } else {
        Err(ModelError::NonPositive { name, value: v.as_f64() })
    }
}

/// Automatic cardinality penalty for [`build_mvo_qubo`]:
/// `q · max_i (|Σ_ii| + 2 Σ_{j≠i} |Σ_ij|) + max_i |μ_i| + 1`.
///
/// This bounds the objective change of any single flip, so every infeasible
/// selection has a neighbour one step closer to the target count with
/// strictly lower penalized energy.
pub fn mvo_default_lambda<S: Scalar>(stats: &AssetStats<S>, q: S) -> S {
    let n = stats.n();
    let two = S::lit(2.0);
    let row = (0..n)
        .map(|i| {
            let off: S = (0..n).filter(|&j| j != i).map(|j| stats.sigma[[i, j]].abs()).sum();
            stats.sigma[[i, i]].abs() + two * off
        })
        .fold(S::zero(), S::max);
    let mu = stats.mu.iter().fold(S::zero(), |m, v| m.max(v.abs()));
    q * row + mu + S::one()
}

/// Unpenalized mean-variance objective `q x^T Σ x − μ^T x` over selection bits.
pub fn mvo_objective<S: Scalar>(stats: &AssetStats<S>, q: S) -> QuboModel<S> {
    let n = stats.n();
    let two = S::lit(2.0);
    let mut m = QuboModel::new(n);
    for i in 0..n {
        m.add_linear(i, q * stats.sigma[[i, i]] - stats.mu[i]).expect("index in range");
        for j in (i + 1)..n {
            let c = stats.sigma[[i, j]];
            if c != S::zero() {
                m.add_quadratic(i, j, two * q * c).expect("index in range");
            }
        }
    }
    m
}

/// Asset-selection QUBO `q x^T Σ x − μ^T x + λ (1^T x − k)²`.
///
/// `lambda = None` uses [`mvo_default_lambda`].
pub fn build_mvo_qubo<S: Scalar>(stats: &AssetStats<S>, q: S, k: usize, lambda: Option<S>) -> Result<QuboModel<S>, ModelError> {
    let n = stats.n();
    if k > n {
        return Err(ModelError::CardinalityTooLarge { k, n });
    }
    check_positive("q", q)?;
    let lambda = lambda.unwrap_or_else(|| mvo_default_lambda(stats, q));
    check_positive("lambda", lambda)?;
    if n == 0 {
        return Ok(QuboModel::new(0));
    }
    let c = LinearConstraint::cardinality(n, k)?;
    penalize_equality(&mvo_objective(stats, q), &c, lambda)
}

/// Integer-share model: minimize `q y^T Σ y − μ^T y` with `y_i = p_i x_i`
/// dollars, subject to `Σ y_i ≤ budget` and `0 ≤ x_i ≤ floor(budget / p_i)`.
pub fn build_mpt_model<S: Scalar>(stats: &AssetStats<S>, prices: &[S], budget: S, q: S) -> Result<ConstrainedModel<S>, ModelError> {
    let n = stats.n();
    if prices.len() != n {
        return Err(ModelError::LengthMismatch { expected: n, actual: prices.len() });
    }
    check_positive("budget", budget)?;
    check_positive("q", q)?;
    if let Some(p) = prices.iter().find(|p| !(**p > S::zero() && p.is_finite())) {
        return Err(ModelError::NonPositive { name: "price", value: p.as_f64() });
    }

    let mut encodings = Vec::with_capacity(n);
    let mut next_bit = 0;
    for (i, p) in prices.iter().enumerate() {
        let upper = (budget / *p).floor().to_u64().unwrap_or(0);
        let enc = encode_integer_at(i, next_bit, upper);
        next_bit += enc.n_bits();
        encodings.push(enc);
    }

    // dollar value carried by each bit, with its owning asset
    let mut bit_value = Vec::with_capacity(next_bit);
    let mut names = Vec::with_capacity(next_bit);
    for enc in &encodings {
        for w in &enc.bit_weights {
            bit_value.push((enc.variable, prices[enc.variable] * S::from_u64(*w).expect("weight fits")));
            names.push(format!("{}[{}]", stats.tickers[enc.variable], w));
        }
    }

    let two = S::lit(2.0);
    let mut objective = QuboModel::new(next_bit);
    for (a, &(i, ca)) in bit_value.iter().enumerate() {
        objective.add_linear(a, q * stats.sigma[[i, i]] * ca * ca - stats.mu[i] * ca)?;
        for (b, &(j, cb)) in bit_value.iter().enumerate().skip(a + 1) {
            let s = stats.sigma[[i, j]];
            if s != S::zero() {
                objective.add_quadratic(a, b, two * q * s * ca * cb)?;
            }
        }
    }

    let mut constraints = Vec::new();
    if next_bit > 0 {
        constraints.push(LinearConstraint::at_most(bit_value.iter().map(|(_, c)| *c).collect(), budget)?);
    }
    ConstrainedModel::new(objective, constraints, encodings, names)
}

/// Dollar-term objective of integer share counts, evaluated directly.
pub fn mpt_objective<S: Scalar>(stats: &AssetStats<S>, prices: &[S], shares: &[u64], q: S) -> S {
    let y: Vec<S> = prices
        .iter()
        .zip(shares)
        .map(|(p, x)| *p * S::from_u64(*x).expect("share count fits"))
        .collect();
    let risk = crate::linalg::quad_form(&stats.sigma, &y);
    let ret: S = stats.mu.iter().zip(&y).map(|(m, v)| *m * *v).sum();
    q * risk - ret
}
