use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::model::{bits_to_spins, IsingModel, QuboModel};
use crate::sampler::{AnnealSchedule, SampleRecord, SampleSet, SamplerError};
use crate::scalar::Scalar;

/// Models the annealer can sample. Spin models are annealed through their
/// exact binary form; returned states are bits with `s = 2x - 1`.
pub trait Annealable<S: Scalar>: Sync {
    fn n(&self) -> usize;
    fn to_binary(&self) -> QuboModel<S>;
    /// Energy of a bit assignment under this model's own representation.
    fn energy_of_bits(&self, x: &[bool]) -> S;
    fn max_abs_coefficient(&self) -> S;
}

impl<S: Scalar> Annealable<S> for QuboModel<S> {
    fn n(&self) -> usize {
        QuboModel::n(self)
    }

    fn to_binary(&self) -> QuboModel<S> {
        self.clone()
    }

    fn energy_of_bits(&self, x: &[bool]) -> S {
        self.energy_unchecked(x)
    }

    fn max_abs_coefficient(&self) -> S {
        QuboModel::max_abs_coefficient(self)
    }
}

impl<S: Scalar> Annealable<S> for IsingModel<S> {
    fn n(&self) -> usize {
        IsingModel::n(self)
    }

    fn to_binary(&self) -> QuboModel<S> {
        self.to_qubo()
    }

    fn energy_of_bits(&self, x: &[bool]) -> S {
        self.energy(&bits_to_spins(x)).expect("state length matches model")
    }

    fn max_abs_coefficient(&self) -> S {
        self.h().iter().chain(self.coupling().values()).fold(S::zero(), |m, v| m.max(v.abs()))
    }
}

/// Adjacency form of a QUBO for O(degree) flip updates.
pub(crate) struct Sparse<S> {
    pub(crate) linear: Vec<S>,
    pub(crate) neighbors: Vec<Vec<(usize, S)>>,
}

impl<S: Scalar> Sparse<S> {
    pub(crate) fn new(m: &QuboModel<S>) -> Self {
        let mut neighbors = vec![Vec::new(); m.n()];
        for (&(i, j), &b) in m.quadratic() {
            if b != S::zero() {
                neighbors[i].push((j, b));
                neighbors[j].push((i, b));
            }
        }
        Self { linear: m.linear().to_vec(), neighbors }
    }

    /// `a_i + Σ_j b_ij x_j` for every `i`.
    pub(crate) fn fields(&self, x: &[bool]) -> Vec<S> {
        (0..x.len())
            .map(|i| {
                self.neighbors[i]
                    .iter()
                    .filter(|(j, _)| x[*j])
                    .fold(self.linear[i], |acc, (_, b)| acc + *b)
            })
            .collect()
    }

    /// Flips `x[i]` and updates neighbouring fields.
    #[inline]
    pub(crate) fn flip(&self, x: &mut [bool], field: &mut [S], i: usize) {
        x[i] = !x[i];
        for &(j, b) in &self.neighbors[i] {
            field[j] = if x[i] { field[j] + b } else { field[j] - b };
        }
    }
}

/// Random generator for restart `r`: ChaCha8 seeded with `seed`, stream `r`.
fn restart_rng(seed: u64, restart: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(restart as u64);
    rng
}

fn anneal_once<S: Scalar>(sparse: &Sparse<S>, schedule: &AnnealSchedule<S>, mut rng: ChaCha8Rng) -> Vec<bool> {
    let n = sparse.linear.len();
    let mut x: Vec<bool> = (0..n).map(|_| rng.random::<bool>()).collect();
    let mut field = sparse.fields(&x);
    // energy relative to the starting state; only differences matter here
    let mut energy = S::zero();
    let mut best_energy = energy;
    let mut best = x.clone();

    for k in 0..schedule.sweeps() {
        let t = schedule.temperature(k);
        for i in 0..n {
            let delta = if x[i] { -field[i] } else { field[i] };
            let accept = delta <= S::zero() || S::lit(rng.random::<f64>()) < (-delta / t).exp();
            if accept {
                sparse.flip(&mut x, &mut field, i);
                energy = energy + delta;
                if energy < best_energy {
                    best_energy = energy;
                    best.copy_from_slice(&x);
                }
            }
        }
    }
    best
}

/// Single-flip Metropolis annealing with independent seeded restarts.
///
/// Restart `r` draws from ChaCha8 seeded with `seed` on stream `r`, so the
/// first `r` restarts of a longer run reproduce a shorter run exactly.
/// Restarts run in parallel and are merged in restart order; each restart
/// contributes the lowest-energy state it visited.
pub fn simulated_anneal<S: Scalar, M: Annealable<S>>(
    model: &M,
    schedule: &AnnealSchedule<S>,
    seed: u64,
) -> Result<SampleSet<S>, SamplerError> {
    let n = model.n();
    if n == 0 {
        return Err(SamplerError::EmptyModel);
    }
    let sparse = Sparse::new(&model.to_binary());
    let states: Vec<Vec<bool>> = (0..schedule.restarts())
        .into_par_iter()
        .map(|r| anneal_once(&sparse, schedule, restart_rng(seed, r)))
        .collect();
    let records = states.into_iter().map(|state| SampleRecord {
        energy: model.energy_of_bits(&state),
        state,
        count: 1,
    });
    Ok(SampleSet::from_samples(records, seed, n))
}
