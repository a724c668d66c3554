use serde::{Deserialize, Serialize};

use crate::mdp::{apply_search_action, SearchAction, SearchState};
use crate::Result;

/// `[x_p′ | x_o | t′/D]`, length `2N + 1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector(pub Vec<f64>);

impl FeatureVector {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

pub fn feature_dim(n: usize) -> usize {
    2 * n + 1
}

/// Features of a state on its own.
pub fn state_features(s: &SearchState) -> FeatureVector {
    let n = s.n();
    let mut phi = vec![0.0; feature_dim(n)];
    for i in s.x_p.indices() {
        phi[i] = 1.0;
    }
    for i in s.x_o.indices() {
        phi[n + i] = 1.0;
    }
    phi[2 * n] = s.t as f64 / s.horizon() as f64;
    FeatureVector(phi)
}

/// A state-action pair is represented by the state it leads to.
pub fn featurize(s: &SearchState, a: &SearchAction) -> Result<FeatureVector> {
    Ok(state_features(&apply_search_action(s, a)?))
}
