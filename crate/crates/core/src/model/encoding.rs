use serde::{Deserialize, Serialize};

/// Binary expansion of a bounded integer variable `0 ..= upper`.
///
/// Weights are `1, 2, 4, …, 2^(k-1)` followed by a remainder `R` so that they
/// sum to `upper` exactly. Every value in range is reachable and no bit
/// assignment exceeds `upper`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IntegerEncoding {
    /// Index of the integer variable this encodes (asset index for share counts).
    pub variable: usize,
    /// Index of the first binary in the owning model.
    pub first_bit: usize,
    pub upper: u64,
    pub bit_weights: Vec<u64>,
}

impl IntegerEncoding {
    pub fn n_bits(&self) -> usize {
        self.bit_weights.len()
    }

    pub fn bit_range(&self) -> std::ops::Range<usize> {
        self.first_bit..self.first_bit + self.bit_weights.len()
    }

    /// Reads this variable's value out of a full model bitstring.
    pub fn decode(&self, bits: &[bool]) -> u64 {
        self.bit_weights
            .iter()
            .zip(&bits[self.bit_range()])
            .filter(|(_, &b)| b)
            .map(|(w, _)| *w)
            .sum()
    }

    /// One bit assignment (greedy from the largest weight) that represents `value`.
    pub fn encode_value(&self, value: u64) -> Option<Vec<bool>> {
        if value > self.upper {
            return None;
        }
        let mut bits = vec![false; self.n_bits()];
        let mut rest = value;
        // remainder weight first, then powers of two high to low
        for idx in (0..self.n_bits()).rev() {
            let w = self.bit_weights[idx];
            let below: u64 = self.bit_weights[..idx].iter().sum();
            if rest >= w && rest - w <= below {
                bits[idx] = true;
                rest -= w;
            }
        }
        (rest == 0).then_some(bits)
    }
}

/// Truncated binary weights for `0 ..= upper`.
pub fn bit_weights(upper: u64) -> Vec<u64> {
    let mut weights = Vec::new();
    let mut covered = 0u64;
    let mut next = 1u64;
    while covered + next <= upper {
        weights.push(next);
        covered += next;
        next <<= 1;
    }
    if upper > covered {
        weights.push(upper - covered);
    }
    weights
}

/// Encoding for a variable placed at `variable` with bits starting at `first_bit`.
pub fn encode_integer_at(variable: usize, first_bit: usize, upper: u64) -> IntegerEncoding {
    IntegerEncoding { variable, first_bit, upper, bit_weights: bit_weights(upper) }
}

pub fn encode_integer(upper: u64) -> IntegerEncoding {
    encode_integer_at(0, 0, upper)
}
