use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::model::LinearConstraint;
use crate::sampler::SamplerError;
use crate::scalar::{total_cmp, Scalar};

#[derive(Debug, Clone, PartialEq)]
pub struct SampleRecord<S> {
    pub state: Vec<bool>,
    pub energy: S,
    pub count: usize,
}

impl<S> SampleRecord<S> {
    /// `"0101…"`, variable 0 first.
    pub fn state_string(&self) -> String {
        self.state.iter().map(|&b| if b { '1' } else { '0' }).collect()
    }
}

/// Distinct states sorted by `(energy, bitstring)` ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet<S> {
    records: Vec<SampleRecord<S>>,
    seed: u64,
    model_n: usize,
}

fn record_order<S: Scalar>(a: &SampleRecord<S>, b: &SampleRecord<S>) -> Ordering {
    total_cmp(&a.energy, &b.energy).then_with(|| a.state.cmp(&b.state))
}

impl<S: Scalar> SampleSet<S> {
    /// Merges duplicate states (summing counts) and sorts.
    pub fn from_samples<I>(samples: I, seed: u64, model_n: usize) -> Self
    where
        I: IntoIterator<Item = SampleRecord<S>>,
    {
        let mut records: Vec<SampleRecord<S>> = samples.into_iter().collect();
        records.sort_by(|a, b| a.state.cmp(&b.state));
        let mut merged: Vec<SampleRecord<S>> = Vec::with_capacity(records.len());
        for r in records {
            match merged.last_mut() {
                Some(last) if last.state == r.state => last.count += r.count,
                _ => merged.push(r),
            }
        }
        merged.sort_by(record_order);
        Self { records: merged, seed, model_n }
    }

    pub fn records(&self) -> &[SampleRecord<S>] {
        &self.records
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn model_n(&self) -> usize {
        self.model_n
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn best(&self) -> Option<&SampleRecord<S>> {
        self.records.first()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&SampleSetJson::from(self)).expect("sample set serializes")
    }

    pub fn from_json(s: &str) -> Result<Self, SamplerError> {
        let raw: SampleSetJson<S> = serde_json::from_str(s).map_err(|e| SamplerError::Format(e.to_string()))?;
        let mut records = Vec::with_capacity(raw.records.len());
        for r in raw.records {
            let state = r
                .state
                .chars()
                .map(|c| match c {
                    '0' => Ok(false),
                    '1' => Ok(true),
                    other => Err(SamplerError::Format(format!("bad state character {other:?}"))),
                })
                .collect::<Result<Vec<_>, _>>()?;
            if state.len() != raw.n {
                return Err(SamplerError::Format(format!("state length {} != n {}", state.len(), raw.n)));
            }
            records.push(SampleRecord { state, energy: r.energy, count: r.count });
        }
        Ok(Self::from_samples(records, raw.seed, raw.n))
    }
}

#[derive(Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
struct RecordJson<S> {
    state: String,
    energy: S,
    count: usize,
}

#[derive(Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
struct SampleSetJson<S> {
    seed: u64,
    n: usize,
    records: Vec<RecordJson<S>>,
}

impl<S: Scalar> From<&SampleSet<S>> for SampleSetJson<S> {
    fn from(s: &SampleSet<S>) -> Self {
        Self {
            seed: s.seed,
            n: s.model_n,
            records: s
                .records
                .iter()
                .map(|r| RecordJson { state: r.state_string(), energy: r.energy, count: r.count })
                .collect(),
        }
    }
}

/// Lowest-energy record that satisfies every constraint within `tolerance`.
pub fn best_feasible<'a, S: Scalar>(
    samples: &'a SampleSet<S>,
    constraints: &[LinearConstraint<S>],
    tolerance: S,
) -> Option<&'a SampleRecord<S>> {
    samples
        .records
        .iter()
        .find(|r| constraints.iter().all(|c| c.is_satisfied(&r.state, tolerance)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(state: &[u8], energy: f64) -> SampleRecord<f64> {
        SampleRecord { state: state.iter().map(|&b| b == 1).collect(), energy, count: 1 }
    }

    #[test]
    fn merges_and_sorts() {
        let s = SampleSet::from_samples(
            vec![rec(&[1, 0], -1.0), rec(&[0, 1], -1.0), rec(&[1, 0], -1.0), rec(&[0, 0], 0.0)],
            7,
            2,
        );
        let states: Vec<String> = s.records().iter().map(|r| r.state_string()).collect();
        assert_eq!(states, vec!["01", "10", "00"]);
        assert_eq!(s.records()[1].count, 2);
    }

    #[test]
    fn feasible_selection() {
        let s = SampleSet::from_samples(vec![rec(&[1, 1], -5.0), rec(&[1, 0], -3.0)], 0, 2);
        let one_hot = LinearConstraint::cardinality(2, 1).unwrap();
        assert_eq!(best_feasible(&s, &[one_hot.clone()], 1e-9).unwrap().state, vec![true, false]);
        assert_eq!(best_feasible(&s, &[], 1e-9).unwrap().energy, -5.0);
        let none = SampleSet::from_samples(vec![rec(&[1, 1], -5.0)], 0, 2);
        assert!(best_feasible(&none, &[one_hot], 1e-9).is_none());
    }

    #[test]
    fn json_roundtrip() {
        let s = SampleSet::from_samples(vec![rec(&[1, 0, 1], -2.5), rec(&[0, 0, 0], 0.0)], 42, 3);
        let json = s.to_json();
        assert_eq!(
            json,
            r#"{"seed":42,"n":3,"records":[{"state":"101","energy":-2.5,"count":1},{"state":"000","energy":0.0,"count":1}]}"#
        );
        assert_eq!(SampleSet::<f64>::from_json(&json).unwrap(), s);
        assert!(SampleSet::<f64>::from_json(r#"{"seed":1,"n":2,"records":[{"state":"1x","energy":0,"count":1}]}"#).is_err());
    }
}
