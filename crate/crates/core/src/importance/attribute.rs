//! Attribution of latent importance to raw features.

use crate::error::{DfiError, Result};
use crate::importance::latent::LatentImportanceResult;
use crate::transport::AttributionWeights;

#[derive(Debug, Clone, PartialEq)]
pub struct AttributedImportanceResult {
    pub l: usize,
    pub phi_hat: f64,
    pub influence_values: Vec<f64>,
}

/// `φ̂_Xl = Σ_j w[j][l]·φ̂_Zj`, with influence values built from the same
/// weighted combination of the latent kernels.
///
/// `latents[j]` must hold coordinate `j`, all computed on one evaluation fold.
pub fn attribute(latents: &[LatentImportanceResult], w: &AttributionWeights) -> Result<Vec<AttributedImportanceResult>> {
    let d = w.d();
    if latents.len() != d {
        return Err(DfiError::DimensionMismatch { expected: d, got: latents.len() });
    }
    let n = latents.first().map(|r| r.influence_values.len()).unwrap_or(0);
    if n == 0 {
        return Err(DfiError::InvalidDataset("empty evaluation fold".into()));
    }
    for (j, r) in latents.iter().enumerate() {
        if r.j != j {
            return Err(DfiError::InvalidConfig(format!("latent result {} found at position {j}", r.j)));
        }
        if r.influence_values.len() != n {
            return Err(DfiError::DimensionMismatch {
                expected: n,
                got: r.influence_values.len(),
            });
        }
    }

    let mut out = Vec::with_capacity(d);
    for l in 0..d {
        let phi_hat: f64 = latents.iter().map(|r| w.get(r.j, l) * r.phi_hat).sum();
        let mut kernel = vec![0.0; n];
        for r in latents {
            let wj = w.get(r.j, l);
            if wj == 0.0 {
                continue;
            }
            for (k, v) in kernel.iter_mut().zip(&r.influence_values) {
                *k += wj * (v + r.phi_hat);
            }
        }
        let influence_values = kernel.into_iter().map(|k| k - phi_hat).collect();
        out.push(AttributedImportanceResult {
            l,
            phi_hat,
            influence_values,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    fn latent(j: usize, phi: f64, ifs: Vec<f64>) -> LatentImportanceResult {
        LatentImportanceResult {
            j,
            phi_hat: phi,
            influence_values: ifs,
            m_used: 1,
        }
    }

    #[test]
    fn identity_weights_pass_through() {
        let lat = vec![latent(0, 2.0, vec![0.5, -0.5]), latent(1, 0.3, vec![-0.1, 0.1])];
        let out = attribute(&lat, &AttributionWeights::identity(2)).unwrap();
        for (a, l) in out.iter().zip(&lat) {
            assert_eq!(a.phi_hat, l.phi_hat);
            for (x, y) in a.influence_values.iter().zip(&l.influence_values) {
                assert!((x - y).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn m1_correlated_block() {
        // latent (20, 5) with BW weights a² = 0.8, b² = 0.2
        let w = AttributionWeights::from_matrix(DMatrix::from_row_slice(2, 2, &[0.8, 0.2, 0.2, 0.8]));
        let lat = vec![latent(0, 20.0, vec![0.0; 3]), latent(1, 5.0, vec![0.0; 3])];
        let out = attribute(&lat, &w).unwrap();
        assert!((out[0].phi_hat - 17.0).abs() < 1e-12);
        assert!((out[1].phi_hat - 8.0).abs() < 1e-12);
    }

    #[test]
    fn influence_values_stay_centered() {
        let w = AttributionWeights::from_matrix(DMatrix::from_row_slice(2, 2, &[1.0, 0.64, 0.0, 0.36]));
        let lat = vec![latent(0, 1.5, vec![1.0, -2.0, 1.0]), latent(1, 0.2, vec![0.3, 0.3, -0.6])];
        for a in attribute(&lat, &w).unwrap() {
            let s: f64 = a.influence_values.iter().sum();
            assert!(s.abs() < 1e-12);
        }
    }

    #[test]
    fn misaligned_inputs_error() {
        let w = AttributionWeights::identity(2);
        let lat = vec![latent(0, 1.0, vec![0.0; 3]), latent(1, 1.0, vec![0.0; 4])];
        assert!(attribute(&lat, &w).is_err());
        assert!(attribute(&lat[..1], &w).is_err());
    }
}
