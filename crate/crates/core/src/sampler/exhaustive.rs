use crate::model::QuboModel;
use crate::sampler::anneal::Sparse;
use crate::sampler::{SampleRecord, SampleSet, SamplerError};
use crate::scalar::{total_cmp, Scalar};

/// Hard cap on variables for exhaustive enumeration.
pub const EXHAUSTIVE_MAX_N: usize = 24;

/// Enumerates all `2^n` states. With `top_k = Some(k)` only the `k` lowest
/// states are kept; otherwise every state is returned.
pub fn exhaustive_solve<S: Scalar>(m: &QuboModel<S>, top_k: Option<usize>) -> Result<SampleSet<S>, SamplerError> {
    exhaustive_solve_where(m, top_k, |_| true)
}

/// As [`exhaustive_solve`], keeping only states accepted by `filter`.
///
/// States are visited in Gray-code order with incremental energy updates;
/// retained records are re-evaluated exactly before sorting.
pub fn exhaustive_solve_where<S, F>(m: &QuboModel<S>, top_k: Option<usize>, filter: F) -> Result<SampleSet<S>, SamplerError>
where
    S: Scalar,
    F: Fn(&[bool]) -> bool,
{
    let n = m.n();
    if n > EXHAUSTIVE_MAX_N {
        return Err(SamplerError::TooLarge { n, cap: EXHAUSTIVE_MAX_N });
    }
    if top_k == Some(0) {
        return Err(SamplerError::ZeroTopK);
    }

    let sparse = Sparse::new(m);
    let mut x = vec![false; n];
    let mut field = sparse.fields(&x);
    let mut energy = m.offset();
    let mut mask: u32 = 0;
    let mut kept: Vec<(S, u32)> = Vec::new();
    // slack on the cut-off so incremental rounding never drops a true tie
    let slack = m.max_abs_coefficient().max(S::one()) * S::lit(1e-9);
    let mut cutoff = S::infinity();

    let visit = |x: &[bool], energy: S, mask: u32, kept: &mut Vec<(S, u32)>, cutoff: &mut S| {
        if energy > *cutoff + slack || !filter(x) {
            return;
        }
        kept.push((energy, mask));
        if let Some(k) = top_k {
            if kept.len() >= 4 * k + 64 {
                kept.sort_by(|a, b| total_cmp(&a.0, &b.0));
                *cutoff = kept[k - 1].0;
                let limit = *cutoff + slack;
                kept.retain(|e| e.0 <= limit);
            }
        }
    };

    visit(&x, energy, mask, &mut kept, &mut cutoff);
    for g in 1u64..(1u64 << n) {
        let i = g.trailing_zeros() as usize;
        let delta = if x[i] { -field[i] } else { field[i] };
        sparse.flip(&mut x, &mut field, i);
        mask ^= 1 << i;
        energy = energy + delta;
        visit(&x, energy, mask, &mut kept, &mut cutoff);
    }

    let mut records: Vec<SampleRecord<S>> = kept
        .into_iter()
        .map(|(_, mask)| {
            let state: Vec<bool> = (0..n).map(|i| mask >> i & 1 == 1).collect();
            SampleRecord { energy: m.energy_unchecked(&state), state, count: 1 }
        })
        .collect();
    records.sort_by(|a, b| total_cmp(&a.energy, &b.energy).then_with(|| a.state.cmp(&b.state)));
    if let Some(k) = top_k {
        records.truncate(k);
    }
    Ok(SampleSet::from_samples(records, 0, n))
}
