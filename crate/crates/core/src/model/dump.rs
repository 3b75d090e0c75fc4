use serde::{Deserialize, Serialize};

use crate::model::{ConstrainedModel, IntegerEncoding, LinearConstraint, ModelError, QuboModel};
use crate::scalar::Scalar;

/// JSON shape used to exchange models: quadratic terms as sorted `[i, j, value]` triples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct ModelDump<S> {
    pub n: usize,
    pub linear: Vec<S>,
    pub quadratic: Vec<(usize, usize, S)>,
    pub offset: S,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub constraints: Option<Vec<LinearConstraint<S>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub encodings: Option<Vec<IntegerEncoding>>,
}

impl<S: Scalar> From<&QuboModel<S>> for ModelDump<S> {
    fn from(m: &QuboModel<S>) -> Self {
        Self {
            n: m.n(),
            linear: m.linear().to_vec(),
            quadratic: m.quadratic().iter().map(|(&(i, j), &v)| (i, j, v)).collect(),
            offset: m.offset(),
            constraints: None,
            encodings: None,
        }
    }
}

impl<S: Scalar> From<&ConstrainedModel<S>> for ModelDump<S> {
    fn from(m: &ConstrainedModel<S>) -> Self {
        Self {
            constraints: Some(m.constraints.clone()),
            encodings: Some(m.encodings.clone()),
            ..Self::from(&m.objective)
        }
    }
}

impl<S: Scalar> ModelDump<S> {
    pub fn to_qubo(&self) -> Result<QuboModel<S>, ModelError> {
        if self.linear.len() != self.n {
            return Err(ModelError::Dump(format!("linear has {} entries, n = {}", self.linear.len(), self.n)));
        }
        QuboModel::from_terms(self.linear.clone(), self.quadratic.iter().copied(), self.offset)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("model dump serializes")
    }

    pub fn from_json(s: &str) -> Result<Self, ModelError> {
        serde_json::from_str(s).map_err(|e| ModelError::Dump(e.to_string()))
    }
}
