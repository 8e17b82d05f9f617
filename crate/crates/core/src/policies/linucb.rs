//! Disjoint LinUCB over the three care recommendations.
//!
//! Each action keeps a ridge design matrix `A = I + sum x x^T` and response
//! vector `b = sum r x`. The score of an action for context `x` is
//!
//! ```text
//!   p_a = theta_a . x + alpha * sqrt(x^T A_a^{-1} x),   theta_a = A_a^{-1} b_a
//! ```
//!
//! Rather than maintaining `A^{-1}`, each arm caches the Cholesky factor
//! `A = L L^T` (refreshed on update) and `z = L^{-1} b`. Then
//! `theta . x = z . (L^{-1} x)` and `x^T A^{-1} x = |L^{-1} x|^2`, so a
//! selection costs one triangular solve per action.

use serde::{Deserialize, Serialize};

use super::ContextVector;
use crate::environment::{ActionId, NUM_ACTIONS};
use crate::error::{Error, Result};
use crate::linalg;

/// Serialization format of LinUCB checkpoints.
pub const LINUCB_FORMAT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq)]
struct Arm {
    /// Row-major `d x d` design matrix.
    matrix_a: Vec<f64>,
    vector_b: Vec<f64>,
    /// Lower-triangular Cholesky factor of `matrix_a`, row-major.
    chol: Vec<f64>,
    /// `L^{-1} b`.
    whitened_b: Vec<f64>,
}

impl Arm {
    fn identity(dim: usize) -> Self {
        let mut matrix_a = vec![0.0; dim * dim];
        for i in 0..dim {
            matrix_a[i * dim + i] = 1.0;
        }
        Arm {
            chol: matrix_a.clone(),
            matrix_a,
            vector_b: vec![0.0; dim],
            whitened_b: vec![0.0; dim],
        }
    }

    fn from_parts(dim: usize, matrix_a: Vec<f64>, vector_b: Vec<f64>) -> Result<Self> {
        let mut arm = Arm {
            chol: vec![0.0; dim * dim],
            whitened_b: vec![0.0; dim],
            matrix_a,
            vector_b,
        };
        arm.refresh(dim)?;
        Ok(arm)
    }

    fn refresh(&mut self, dim: usize) -> Result<()> {
        self.chol.copy_from_slice(&self.matrix_a);
        if !linalg::cholesky_in_place(&mut self.chol, dim) {
            return Err(Error::Contract(
                "LinUCB design matrix is not symmetric positive definite".into(),
            ));
        }
        self.whitened_b.copy_from_slice(&self.vector_b);
        linalg::forward_substitute(&self.chol, dim, &mut self.whitened_b);
        Ok(())
    }
}

/// Scores and choice of one LinUCB selection.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Selection {
    pub action: ActionId,
    pub scores: [f64; NUM_ACTIONS],
}

#[derive(Clone, Debug, PartialEq)]
pub struct LinUcb {
    alpha: f64,
    dim: usize,
    arms: Vec<Arm>,
}

impl LinUcb {
    /// Fresh state: identity design matrices and zero response vectors.
    pub fn new(dim: usize, alpha: f64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Config(
                "LinUCB context dimension must be >= 1".into(),
            ));
        }
        if !(alpha >= 0.0 && alpha.is_finite()) {
            return Err(Error::Config(format!(
                "LinUCB alpha must be finite and >= 0, got {alpha}"
            )));
        }
        Ok(LinUcb {
            alpha,
            dim,
            arms: (0..NUM_ACTIONS).map(|_| Arm::identity(dim)).collect(),
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Row-major design matrix `A_a`.
    pub fn matrix_a(&self, action: ActionId) -> &[f64] {
        &self.arms[action.index()].matrix_a
    }

    pub fn vector_b(&self, action: ActionId) -> &[f64] {
        &self.arms[action.index()].vector_b
    }

    /// Ridge estimate `theta_a = A_a^{-1} b_a`.
    pub fn theta(&self, action: ActionId) -> Vec<f64> {
        let arm = &self.arms[action.index()];
        let mut theta = arm.whitened_b.clone();
        linalg::backward_substitute_transposed(&arm.chol, self.dim, &mut theta);
        theta
    }

    fn check_dim(&self, context: &ContextVector) -> Result<()> {
        if context.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                actual: context.len(),
            });
        }
        Ok(())
    }

    /// Upper-confidence scores for every action and the argmax (lowest index on ties).
    pub fn select(&self, context: &ContextVector) -> Result<Selection> {
        self.check_dim(context)?;
        let mut scores = [0.0; NUM_ACTIONS];
        let mut y = vec![0.0; self.dim];
        for (score, arm) in scores.iter_mut().zip(&self.arms) {
            y.copy_from_slice(context.values());
            linalg::forward_substitute(&arm.chol, self.dim, &mut y);
            let mean: f64 = arm.whitened_b.iter().zip(&y).map(|(z, v)| z * v).sum();
            let width: f64 = y.iter().map(|v| v * v).sum::<f64>().sqrt();
            *score = mean + self.alpha * width;
        }
        let mut best = 0;
        for (i, s) in scores.iter().enumerate().skip(1) {
            if *s > scores[best] {
                best = i;
            }
        }
        Ok(Selection {
            action: ActionId::ALL[best],
            scores,
        })
    }

    /// Rank-one update of the chosen action: `A += x x^T`, `b += r x`.
    pub fn update(&mut self, action: ActionId, context: &ContextVector, reward: f64) -> Result<()> {
        self.check_dim(context)?;
        if !reward.is_finite() {
            return Err(Error::Contract(format!(
                "LinUCB reward must be finite, got {reward}"
            )));
        }
        let d = self.dim;
        let x = context.values();
        let arm = &mut self.arms[action.index()];
        for i in 0..d {
            for j in 0..d {
                arm.matrix_a[i * d + j] += x[i] * x[j];
            }
            arm.vector_b[i] += reward * x[i];
        }
        arm.refresh(d)
    }
}

// ── checkpoint format ──────────────────────────────────────────────────

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
struct LinUcbDoc {
    format_version: u32,
    alpha: f64,
    dim: usize,
    arms: Vec<ArmDoc>,
}

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
struct ArmDoc {
    action: ActionId,
    /// Row-major.
    matrix_a: Vec<f64>,
    vector_b: Vec<f64>,
}

impl Serialize for LinUcb {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        LinUcbDoc {
            format_version: LINUCB_FORMAT_VERSION,
            alpha: self.alpha,
            dim: self.dim,
            arms: ActionId::ALL
                .into_iter()
                .zip(&self.arms)
                .map(|(action, arm)| ArmDoc {
                    action,
                    matrix_a: arm.matrix_a.clone(),
                    vector_b: arm.vector_b.clone(),
                })
                .collect(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for LinUcb {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        use serde::de::Error as _;
        let doc = LinUcbDoc::deserialize(deserializer)?;
        LinUcb::from_doc(doc).map_err(D::Error::custom)
    }
}

impl LinUcb {
    fn from_doc(doc: LinUcbDoc) -> Result<Self> {
        if doc.format_version != LINUCB_FORMAT_VERSION {
            return Err(Error::Config(format!(
                "unsupported LinUCB formatVersion {}",
                doc.format_version
            )));
        }
        let mut state = LinUcb::new(doc.dim, doc.alpha)?;
        if doc.arms.len() != NUM_ACTIONS {
            return Err(Error::Config(format!(
                "expected {NUM_ACTIONS} arms, got {}",
                doc.arms.len()
            )));
        }
        let d = doc.dim;
        for (expected, arm) in ActionId::ALL.into_iter().zip(doc.arms) {
            if arm.action != expected {
                return Err(Error::Config(format!(
                    "arm order: expected {expected}, got {}",
                    arm.action
                )));
            }
            if arm.matrix_a.len() != d * d || arm.vector_b.len() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    actual: arm.vector_b.len(),
                });
            }
            let symmetric =
                (0..d).all(|i| (0..d).all(|j| arm.matrix_a[i * d + j] == arm.matrix_a[j * d + i]));
            if !symmetric {
                return Err(Error::Config(format!(
                    "matrixA for {expected} is not symmetric"
                )));
            }
            state.arms[expected.index()] =
                Arm::from_parts(d, arm.matrix_a, arm.vector_b).map_err(|_| {
                    Error::Config(format!("matrixA for {expected} is not positive definite"))
                })?;
        }
        Ok(state)
    }
}
