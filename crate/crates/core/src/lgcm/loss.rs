use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Below this residual norm the gradient uses `δ` in place of the norm.
pub const DELTA_SMOOTH: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Alignment {
    pub loss: f64,
    pub grad_primary: Vec<Vec<f64>>,
    pub grad_aux: Vec<Vec<f64>>,
}

/// `loss = (1/N) Σ ‖a_i − p_i‖₂` with
/// `∂loss/∂p_i = (p_i − a_i) / (N · max(‖a_i − p_i‖, δ))`.
///
/// `grad_aux` is `−grad_primary`, or all zeros when `stop_aux` is set.
pub fn alignment_loss(aux: &[Vec<f64>], primary: &[Vec<f64>], stop_aux: bool) -> Result<Alignment> {
    if aux.len() != primary.len() {
        return Err(Error::LengthMismatch(format!(
            "{} aux features vs {} primary features",
            aux.len(),
            primary.len()
        )));
    }
    if aux.is_empty() {
        return Err(Error::InsufficientValues { needed: 1, got: 0 });
    }
    let dim = aux[0].len();
    for v in aux.iter().chain(primary) {
        if v.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: v.len(),
            });
        }
    }
    let n = aux.len() as f64;
    let mut total = 0.0;
    let mut grad_primary = Vec::with_capacity(aux.len());
    for (a, p) in aux.iter().zip(primary) {
        let diff: Vec<f64> = p.iter().zip(a).map(|(p, a)| p - a).collect();
        let norm = diff.iter().map(|d| d * d).sum::<f64>().sqrt();
        total += norm;
        let denom = n * norm.max(DELTA_SMOOTH);
        grad_primary.push(diff.into_iter().map(|d| d / denom).collect::<Vec<f64>>());
    }
    let grad_aux = if stop_aux {
        vec![vec![0.0; dim]; aux.len()]
    } else {
        grad_primary.iter().map(|g| g.iter().map(|v| -v).collect()).collect()
    };
    Ok(Alignment {
        loss: total / n,
        grad_primary,
        grad_aux,
    })
}
