//! Active-set solver for `min ½ yᵀHy + gᵀy  s.t.  aᵀy = b, y ≥ 0`.

use ndarray::{Array1, Array2};

use crate::linalg;
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum QpFailure {
    /// No index with `a_i > 0`, so `aᵀy = b > 0` has no nonnegative solution.
    Infeasible,
    /// The reduced KKT system on some support was singular.
    Singular,
    IterationLimit { iterations: usize },
}

/// KKT residuals of a returned point.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct KktReport<S> {
    /// `‖Hy + g − νa − λ‖∞`
    pub stationarity: S,
    /// `max(|aᵀy − b|, max_i −y_i)`
    pub primal: S,
    /// `max_i −λ_i`, clipped at zero
    pub dual: S,
    /// `max_i |λ_i y_i|`
    pub complementarity: S,
}

impl<S: Scalar> KktReport<S> {
    pub fn max_residual(&self) -> S {
        self.stationarity.max(self.primal).max(self.dual).max(self.complementarity)
    }
}

#[derive(Debug, Clone)]
pub(crate) struct QpSolution<S> {
    pub y: Vec<S>,
    pub multipliers: Vec<S>,
    pub iterations: usize,
    pub kkt: KktReport<S>,
}

pub(crate) struct SimplexQp<'a, S> {
    pub h: &'a Array2<S>,
    pub g: &'a [S],
    pub a: &'a [S],
    pub b: S,
}

impl<S: Scalar> SimplexQp<'_, S> {
    fn n(&self) -> usize {
        self.g.len()
    }

    /// `Hy + g − νa`
    fn reduced_gradient(&self, y: &[S], nu: S) -> Vec<S> {
        let n = self.n();
        (0..n)
            .map(|i| {
                let hy: S = (0..n).map(|j| self.h[[i, j]] * y[j]).sum();
                hy + self.g[i] - nu * self.a[i]
            })
            .collect()
    }

    /// Solves the equality-constrained problem on `support`, all other
    /// variables pinned at zero. Returns `(y_support, ν)`.
    fn solve_support(&self, support: &[usize]) -> Option<(Vec<S>, S)> {
        let k = support.len();
        let mut m = Array2::zeros((k + 1, k + 1));
        let mut rhs = Array1::zeros(k + 1);
        for (r, &i) in support.iter().enumerate() {
            for (c, &j) in support.iter().enumerate() {
                m[[r, c]] = self.h[[i, j]];
            }
            m[[r, k]] = -self.a[i];
            m[[k, r]] = self.a[i];
            rhs[r] = -self.g[i];
        }
        rhs[k] = self.b;
        let sol = linalg::solve(&m, &rhs)?;
        Some((sol.iter().take(k).copied().collect(), sol[k]))
    }

    pub fn kkt(&self, y: &[S], nu: S, support: &[bool]) -> (KktReport<S>, Vec<S>) {
        let r = self.reduced_gradient(y, nu);
        let lambda: Vec<S> = r.iter().zip(support).map(|(v, &s)| if s { S::zero() } else { *v }).collect();
        let stationarity = r.iter().zip(&lambda).fold(S::zero(), |m, (ri, li)| m.max((*ri - *li).abs()));
        let ay: S = self.a.iter().zip(y).map(|(a, y)| *a * *y).sum();
        let primal = y.iter().fold((ay - self.b).abs(), |m, v| m.max(-*v));
        let dual = lambda.iter().fold(S::zero(), |m, l| m.max(-*l));
        let complementarity = lambda.iter().zip(y).fold(S::zero(), |m, (l, y)| m.max((*l * *y).abs()));
        (KktReport { stationarity, primal, dual, complementarity }, lambda)
    }

    /// Primal active-set iteration from the vertex with the largest `a_i`
    /// (lowest index on ties).
    pub fn solve(&self, max_iterations: usize, tolerance: S) -> Result<QpSolution<S>, QpFailure> {
        let n = self.n();
        let start = (0..n)
            .filter(|&i| self.a[i] > S::zero())
            .fold(None::<usize>, |best, i| match best {
                Some(b) if self.a[b] >= self.a[i] => Some(b),
                _ => Some(i),
            })
            .ok_or(QpFailure::Infeasible)?;

        let mut y = vec![S::zero(); n];
        y[start] = self.b / self.a[start];
        let mut free = vec![false; n];
        free[start] = true;
        let tiny = S::solver_eps().sqrt() * S::lit(1e-3);

        for iteration in 1..=max_iterations {
            let support: Vec<usize> = (0..n).filter(|&i| free[i]).collect();
            let (cand, nu) = self.solve_support(&support).ok_or(QpFailure::Singular)?;

            let scale = cand.iter().fold(S::zero(), |m, v| m.max(v.abs())).max(S::one());
            if cand.iter().all(|v| *v >= -tiny * scale) {
                for (&i, v) in support.iter().zip(&cand) {
                    y[i] = v.max(S::zero());
                }
                let r = self.reduced_gradient(&y, nu);
                let entering = (0..n)
                    .filter(|&i| !free[i] && r[i] < -tolerance)
                    .fold(None::<usize>, |best, i| match best {
                        Some(b) if r[b] <= r[i] => Some(b),
                        _ => Some(i),
                    });
                match entering {
                    Some(i) => free[i] = true,
                    None => {
                        let (kkt, multipliers) = self.kkt(&y, nu, &free);
                        return Ok(QpSolution { y, multipliers, iterations: iteration, kkt });
                    }
                }
            } else {
                // move toward the candidate until the first support variable hits zero
                let mut alpha = S::one();
                let mut blocking = None;
                for (&i, &c) in support.iter().zip(&cand) {
                    if c < S::zero() {
                        let ratio = y[i] / (y[i] - c);
                        if ratio < alpha || blocking.is_none() && ratio <= alpha {
                            alpha = ratio;
                            blocking = Some(i);
                        }
                    }
                }
                for (&i, &c) in support.iter().zip(&cand) {
                    y[i] = y[i] + alpha * (c - y[i]);
                }
                if let Some(i) = blocking {
                    y[i] = S::zero();
                    free[i] = false;
                }
            }
        }
        Err(QpFailure::IterationLimit { iterations: max_iterations })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn two_asset_sharpe_program() {
        // min yᵀΣy, (μ)ᵀy = 1, Σ = diag(0.01, 0.04), μ = (0.1, 0.2)
        let h = array![[0.02f64, 0.0], [0.0, 0.08]];
        let qp = SimplexQp { h: &h, g: &[0.0, 0.0], a: &[0.1, 0.2], b: 1.0 };
        let sol = qp.solve(20, 1e-12).unwrap();
        assert!((sol.y[0] - 5.0).abs() < 1e-12);
        assert!((sol.y[1] - 2.5).abs() < 1e-12);
        assert!(sol.kkt.max_residual() < 1e-12);
    }

    #[test]
    fn bound_becomes_active() {
        // second asset dominated: same variance, negative excess return
        let h = array![[0.02f64, 0.0], [0.0, 0.02]];
        let qp = SimplexQp { h: &h, g: &[0.0, 0.0], a: &[0.1, -0.05], b: 1.0 };
        let sol = qp.solve(20, 1e-12).unwrap();
        assert!((sol.y[0] - 10.0).abs() < 1e-12);
        assert_eq!(sol.y[1], 0.0);
        assert!(sol.multipliers[1] > 0.0);
    }

    #[test]
    fn infeasible_without_positive_coefficient() {
        let h = array![[1.0]];
        let qp = SimplexQp { h: &h, g: &[0.0], a: &[-1.0], b: 1.0 };
        assert_eq!(qp.solve(10, 1e-9).unwrap_err(), QpFailure::Infeasible);
    }
}
