//! Bandit policies: LinUCB chooses the care action, Thompson sampling
//! chooses the feature set.

mod linucb;
mod thompson;

pub use linucb::{LinUcb, Selection, LINUCB_FORMAT_VERSION};
pub use thompson::{BetaPrior, ThompsonSampling, THOMPSON_FORMAT_VERSION};

use crate::error::{Error, Result};

/// A context fed to LinUCB. Every entry is finite and lies in `[0, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct ContextVector(Vec<f64>);

impl ContextVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some((i, v)) = values
            .iter()
            .enumerate()
            .find(|(_, v)| !(v.is_finite() && (0.0..=1.0).contains(*v)))
        {
            return Err(Error::Contract(format!(
                "context entry {i} = {v} is outside [0, 1]"
            )));
        }
        Ok(ContextVector(values))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn context_rejects_out_of_range() {
        assert!(ContextVector::new(vec![0.0, 1.0, 0.5]).is_ok());
        assert!(matches!(
            ContextVector::new(vec![1.5]),
            Err(Error::Contract(_))
        ));
        assert!(matches!(
            ContextVector::new(vec![f64::NAN]),
            Err(Error::Contract(_))
        ));
    }
}
