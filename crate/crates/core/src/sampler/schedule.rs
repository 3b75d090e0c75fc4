use serde::{Deserialize, Serialize};

use crate::sampler::SamplerError;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Interpolation {
    #[default]
    Geometric,
    Linear,
}

/// Temperature schedule and restart count for [`super::simulated_anneal`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct AnnealSchedule<S> {
    t_initial: S,
    t_final: S,
    sweeps: usize,
    restarts: usize,
    interpolation: Interpolation,
}

impl<S: Scalar> AnnealSchedule<S> {
    pub fn new(t_initial: S, t_final: S, sweeps: usize, restarts: usize, interpolation: Interpolation) -> Result<Self, SamplerError> {
        if !(t_final > S::zero() && t_final.is_finite()) {
            return Err(SamplerError::InvalidSchedule(format!("t_final must be positive, got {t_final}")));
        }
        if !(t_initial > t_final && t_initial.is_finite()) {
            return Err(SamplerError::InvalidSchedule(format!(
                "t_initial ({t_initial}) must exceed t_final ({t_final})"
            )));
        }
        if sweeps == 0 || restarts == 0 {
            return Err(SamplerError::InvalidSchedule("sweeps and restarts must be at least 1".into()));
        }
        Ok(Self { t_initial, t_final, sweeps, restarts, interpolation })
    }

    pub fn t_initial(&self) -> S {
        self.t_initial
    }

    pub fn t_final(&self) -> S {
        self.t_final
    }

    pub fn sweeps(&self) -> usize {
        self.sweeps
    }

    pub fn restarts(&self) -> usize {
        self.restarts
    }

    pub fn interpolation(&self) -> Interpolation {
        self.interpolation
    }

    pub fn with_restarts(mut self, restarts: usize) -> Result<Self, SamplerError> {
        self.restarts = restarts;
        Self::new(self.t_initial, self.t_final, self.sweeps, self.restarts, self.interpolation)
    }

    /// Temperature used during sweep `k` (0-based). The first sweep runs at
    /// `t_initial`, the last at `t_final`.
    pub fn temperature(&self, k: usize) -> S {
        if self.sweeps == 1 {
            return self.t_initial;
        }
        let frac = S::from_usize_lossy(k) / S::from_usize_lossy(self.sweeps - 1);
        match self.interpolation {
            Interpolation::Geometric => self.t_initial * (self.t_final / self.t_initial).powf(frac),
            Interpolation::Linear => self.t_initial + (self.t_final - self.t_initial) * frac,
        }
    }
}

/// Serializable schedule settings; `t_initial = None` derives it from the
/// model as `max |coefficient| · n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScheduleConfig {
    pub t_initial: Option<f64>,
    pub t_final: f64,
    pub sweeps: usize,
    pub restarts: usize,
    pub interpolation: Interpolation,
}

impl Default for ScheduleConfig {
    fn default() -> Self {
        Self { t_initial: None, t_final: 1e-3, sweeps: 1000, restarts: 32, interpolation: Interpolation::Geometric }
    }
}

impl ScheduleConfig {
    /// Resolves against a model's largest coefficient magnitude and size.
    ///
    /// A derived start temperature that does not exceed `t_final` (an all-zero
    /// or near-zero model) is raised to `10 · t_final`.
    pub fn resolve<S: Scalar>(&self, max_abs_coefficient: S, n: usize) -> Result<AnnealSchedule<S>, SamplerError> {
        let t_final = S::lit(self.t_final);
        let t_initial = match self.t_initial {
            Some(t) => S::lit(t),
            None => {
                let t = max_abs_coefficient * S::from_usize_lossy(n.max(1));
                if t > t_final {
                    t
                } else {
                    t_final * S::lit(10.0)
                }
            }
        };
        AnnealSchedule::new(t_initial, t_final, self.sweeps, self.restarts, self.interpolation)
    }
}
