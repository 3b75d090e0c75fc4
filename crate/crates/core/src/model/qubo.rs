use std::collections::BTreeMap;

use crate::model::ModelError;
use crate::scalar::Scalar;

/// Quadratic objective over binaries: `offset + Σ a_i x_i + Σ_{i<j} b_ij x_i x_j`.
///
/// Quadratic keys are always stored with `i < j`; diagonal contributions are
/// folded into `linear` on insertion since `x_i² = x_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuboModel<S> {
    linear: Vec<S>,
    quadratic: BTreeMap<(usize, usize), S>,
    offset: S,
}

impl<S: Scalar> QuboModel<S> {
    pub fn new(n: usize) -> Self {
        Self { linear: vec![S::zero(); n], quadratic: BTreeMap::new(), offset: S::zero() }
    }

    /// Builds a model from raw terms; `(i, i)` and `(j, i)` entries are canonicalized.
    pub fn from_terms<I>(linear: Vec<S>, quadratic: I, offset: S) -> Result<Self, ModelError>
    where
        I: IntoIterator<Item = (usize, usize, S)>,
    {
        let mut m = Self { linear, quadratic: BTreeMap::new(), offset };
        for (i, j, v) in quadratic {
            m.add_quadratic(i, j, v)?;
        }
        Ok(m)
    }

    pub fn n(&self) -> usize {
        self.linear.len()
    }

    pub fn linear(&self) -> &[S] {
        &self.linear
    }

    pub fn quadratic(&self) -> &BTreeMap<(usize, usize), S> {
        &self.quadratic
    }

    pub fn offset(&self) -> S {
        self.offset
    }

    /// Coupling between `i` and `j` in either order; zero when absent.
    pub fn coupling(&self, i: usize, j: usize) -> S {
        let key = if i < j { (i, j) } else { (j, i) };
        self.quadratic.get(&key).copied().unwrap_or(S::zero())
    }

    pub fn add_linear(&mut self, i: usize, v: S) -> Result<(), ModelError> {
        let n = self.n();
        let slot = self.linear.get_mut(i).ok_or(ModelError::IndexOutOfRange { index: i, n })?;
        *slot = *slot + v;
        Ok(())
    }

    pub fn add_quadratic(&mut self, i: usize, j: usize, v: S) -> Result<(), ModelError> {
        let n = self.n();
        if i >= n || j >= n {
            return Err(ModelError::IndexOutOfRange { index: i.max(j), n });
        }
        if i == j {
            return self.add_linear(i, v);
        }
        let key = if i < j { (i, j) } else { (j, i) };
        let slot = self.quadratic.entry(key).or_insert_with(S::zero);
        *slot = *slot + v;
        Ok(())
    }

    pub fn add_offset(&mut self, v: S) {
        self.offset = self.offset + v;
    }

    /// Appends `extra` fresh variables with zero coefficients.
    pub fn extend(&mut self, extra: usize) {
        self.linear.extend(std::iter::repeat_n(S::zero(), extra));
    }

    /// Adds `scale * other` term by term. `other` may have fewer variables.
    pub fn add_scaled(&mut self, other: &QuboModel<S>, scale: S) -> Result<(), ModelError> {
        if other.n() > self.n() {
            return Err(ModelError::LengthMismatch { expected: self.n(), actual: other.n() });
        }
        for (i, a) in other.linear.iter().enumerate() {
            self.linear[i] = self.linear[i] + *a * scale;
        }
        for (&(i, j), b) in &other.quadratic {
            self.add_quadratic(i, j, *b * scale)?;
        }
        self.offset = self.offset + other.offset * scale;
        Ok(())
    }

    pub fn energy(&self, x: &[bool]) -> Result<S, ModelError> {
        if x.len() != self.n() {
            return Err(ModelError::LengthMismatch { expected: self.n(), actual: x.len() });
        }
        Ok(self.energy_unchecked(x))
    }

    pub(crate) fn energy_unchecked(&self, x: &[bool]) -> S {
        let lin: S = self.linear.iter().zip(x).filter(|(_, &b)| b).map(|(a, _)| *a).sum();
        let quad: S = self
            .quadratic
            .iter()
            .filter(|(&(i, j), _)| x[i] && x[j])
            .map(|(_, b)| *b)
            .sum();
        self.offset + lin + quad
    }

    /// Largest absolute linear or quadratic coefficient.
    pub fn max_abs_coefficient(&self) -> S {
        self.linear
            .iter()
            .chain(self.quadratic.values())
            .fold(S::zero(), |m, v| m.max(v.abs()))
    }

    /// Substitutes `x = (1 + s) / 2`; exact up to floating rounding of halves and quarters.
    pub fn to_ising(&self) -> IsingModel<S> {
        let half = S::lit(0.5);
        let quarter = S::lit(0.25);
        let mut h: Vec<S> = self.linear.iter().map(|a| *a * half).collect();
        let mut offset = self.offset + self.linear.iter().copied().sum::<S>() * half;
        let mut coupling = BTreeMap::new();
        for (&(i, j), &b) in &self.quadratic {
            let q = b * quarter;
            h[i] = h[i] + q;
            h[j] = h[j] + q;
            offset = offset + q;
            coupling.insert((i, j), q);
        }
        IsingModel { h, coupling, offset }
    }
}

/// Spin objective: `offset + Σ h_i s_i + Σ_{i<j} J_ij s_i s_j`, `s ∈ {-1, +1}^n`.
#[derive(Debug, Clone, PartialEq)]
pub struct IsingModel<S> {
    h: Vec<S>,
    coupling: BTreeMap<(usize, usize), S>,
    offset: S,
}

impl<S: Scalar> IsingModel<S> {
    pub fn new(n: usize) -> Self {
        Self { h: vec![S::zero(); n], coupling: BTreeMap::new(), offset: S::zero() }
    }

    /// `(i, i)` couplings are constant (`s_i² = 1`) and go to the offset.
    pub fn from_terms<I>(h: Vec<S>, coupling: I, offset: S) -> Result<Self, ModelError>
    where
        I: IntoIterator<Item = (usize, usize, S)>,
    {
        let n = h.len();
        let mut m = Self { h, coupling: BTreeMap::new(), offset };
        for (i, j, v) in coupling {
            if i >= n || j >= n {
                return Err(ModelError::IndexOutOfRange { index: i.max(j), n });
            }
            if i == j {
                m.offset = m.offset + v;
                continue;
            }
            let key = if i < j { (i, j) } else { (j, i) };
            let slot = m.coupling.entry(key).or_insert_with(S::zero);
            *slot = *slot + v;
        }
        Ok(m)
    }

    pub fn n(&self) -> usize {
        self.h.len()
    }

    pub fn h(&self) -> &[S] {
        &self.h
    }

    pub fn coupling(&self) -> &BTreeMap<(usize, usize), S> {
        &self.coupling
    }

    pub fn offset(&self) -> S {
        self.offset
    }

    pub fn energy(&self, s: &[i8]) -> Result<S, ModelError> {
        if s.len() != self.n() {
            return Err(ModelError::LengthMismatch { expected: self.n(), actual: s.len() });
        }
        if let Some(&bad) = s.iter().find(|v| **v != 1 && **v != -1) {
            return Err(ModelError::InvalidSpin(bad));
        }
        let spin = |v: i8| if v > 0 { S::one() } else { -S::one() };
        let lin: S = self.h.iter().zip(s).map(|(h, &v)| *h * spin(v)).sum();
        let quad: S = self
            .coupling
            .iter()
            .map(|(&(i, j), &jv)| if s[i] == s[j] { jv } else { -jv })
            .sum();
        Ok(self.offset + lin + quad)
    }

    /// Substitutes `s = 2x - 1`.
    pub fn to_qubo(&self) -> QuboModel<S> {
        let two = S::lit(2.0);
        let four = S::lit(4.0);
        let mut linear: Vec<S> = self.h.iter().map(|h| *h * two).collect();
        let mut offset = self.offset - self.h.iter().copied().sum::<S>();
        let mut quadratic = BTreeMap::new();
        for (&(i, j), &jv) in &self.coupling {
            linear[i] = linear[i] - jv * two;
            linear[j] = linear[j] - jv * two;
            offset = offset + jv;
            quadratic.insert((i, j), jv * four);
        }
        QuboModel { linear, quadratic, offset }
    }
}

/// Maps a bitstring to spins via `s = 2x - 1`.
pub fn bits_to_spins(x: &[bool]) -> Vec<i8> {
    x.iter().map(|&b| if b { 1 } else { -1 }).collect()
}

pub fn spins_to_bits(s: &[i8]) -> Vec<bool> {
    s.iter().map(|&v| v > 0).collect()
}

pub fn qubo_energy<S: Scalar>(m: &QuboModel<S>, x: &[bool]) -> Result<S, ModelError> {
    m.energy(x)
}

pub fn ising_energy<S: Scalar>(m: &IsingModel<S>, s: &[i8]) -> Result<S, ModelError> {
    m.energy(s)
}

pub fn qubo_to_ising<S: Scalar>(m: &QuboModel<S>) -> IsingModel<S> {
    m.to_ising()
}

pub fn ising_to_qubo<S: Scalar>(m: &IsingModel<S>) -> QuboModel<S> {
    m.to_qubo()
}
