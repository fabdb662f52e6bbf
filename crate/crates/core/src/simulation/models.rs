//! Generators and closed-form targets for the four benchmark models.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, Rows};
use crate::error::{DfiError, Result};
use crate::regression::OracleFn;
use crate::transport::{LinearTransport, TransportKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Model {
    M1,
    M2,
    M3,
    M4,
}

impl Model {
    pub fn d(self) -> usize {
        match self {
            Model::M3 => 5,
            _ => 10,
        }
    }

    pub fn oracle(self) -> OracleFn {
        match self {
            Model::M1 => OracleFn::M1Mu,
            Model::M2 => OracleFn::M2Mu,
            Model::M3 => OracleFn::M3Mu,
            Model::M4 => OracleFn::M4Mu,
        }
    }

    /// Features independent of the response and of the signal features.
    pub fn null_features(self) -> Vec<usize> {
        match self {
            Model::M3 => vec![],
            _ => (2..10).collect(),
        }
    }
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Model::M1 => "m1",
            Model::M2 => "m2",
            Model::M3 => "m3",
            Model::M4 => "m4",
        };
        f.write_str(s)
    }
}

impl FromStr for Model {
    type Err = DfiError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "m1" => Ok(Model::M1),
            "m2" => Ok(Model::M2),
            "m3" => Ok(Model::M3),
            "m4" => Ok(Model::M4),
            _ => Err(DfiError::InvalidConfig(format!("unknown model \"{s}\" (expected m1, m2, m3 or m4)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub model: Model,
    pub rho: f64,
    pub n: usize,
    pub seed: u64,
}

impl ModelSpec {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.rho) {
            return Err(DfiError::InvalidConfig(format!("rho must lie in [0, 1), got {}", self.rho)));
        }
        if self.model == Model::M4 && self.rho != 0.0 {
            return Err(DfiError::InvalidConfig("m4 has no correlation parameter; rho must be 0".into()));
        }
        if self.n < 10 {
            return Err(DfiError::InvalidConfig(format!("n must be at least 10, got {}", self.n)));
        }
        Ok(())
    }

    /// Feature covariance for the Gaussian models; `None` for m4.
    pub fn covariance(&self) -> Option<Vec<Vec<f64>>> {
        let d = self.model.d();
        let mut s = vec![vec![0.0; d]; d];
        for (i, row) in s.iter_mut().enumerate() {
            row[i] = 1.0;
        }
        let mut link = |a: usize, b: usize| {
            s[a][b] = self.rho;
            s[b][a] = self.rho;
        };
        match self.model {
            Model::M1 | Model::M2 => link(0, 1),
            Model::M3 => {
                link(0, 1);
                link(3, 4);
            }
            Model::M4 => return None,
        }
        Some(s)
    }

    pub fn with_seed(self, seed: u64) -> Self {
        ModelSpec { seed, ..self }
    }
}

pub fn feature_names(d: usize) -> Vec<String> {
    (1..=d).map(|i| format!("X{i}")).collect()
}

/// Draws `n` rows from the model; identical specs give identical datasets.
pub fn generate(spec: &ModelSpec) -> Result<Dataset> {
    spec.validate()?;
    let d = spec.model.d();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut x = Rows::zeros(spec.n, d);
    let mut y = Vec::with_capacity(spec.n);
    let chol = match spec.covariance() {
        Some(s) => {
            let m = DMatrix::from_fn(d, d, |a, b| s[a][b]);
            Some(LinearTransport::from_covariance(&m, TransportKind::Triangular, None)?)
        }
        None => None,
    };
    let mut z = vec![0.0; d];
    for i in 0..spec.n {
        for v in z.iter_mut() {
            *v = rng.sample(StandardNormal);
        }
        let row = x.row_mut(i);
        match &chol {
            Some(t) => t.inverse_row(&z, row),
            None => {
                // m4: X₂ = 3X₁² + δ, the rest standard normal
                row.copy_from_slice(&z);
                row[1] = 3.0 * z[0] * z[0] + z[1];
            }
        }
        let noise: f64 = rng.sample(StandardNormal);
        let eps = match spec.model {
            Model::M3 => 0.4f64.sqrt() * noise,
            _ => noise,
        };
        y.push(spec.model.oracle().eval(row) + eps);
    }
    Dataset::new(feature_names(d), x, y)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheoreticalValues {
    pub phi_z: Option<Vec<f64>>,
    pub phi_x: Option<Vec<f64>>,
    pub total_signal_variance: Option<f64>,
}

/// Entries of the symmetric square root of `[[1, ρ], [ρ, 1]]`.
fn bw_block(rho: f64) -> (f64, f64) {
    let (p, m) = ((1.0 + rho).sqrt(), (1.0 - rho).sqrt());
    (0.5 * (p + m), 0.5 * (p - m))
}

/// Population latent and attributed importance under the symmetric map.
pub fn theoretical_values(spec: &ModelSpec) -> Result<TheoreticalValues> {
    spec.validate()?;
    let rho = spec.rho;
    let (a, b) = bw_block(rho);
    let (a2, b2) = (a * a, b * b);
    match spec.model {
        Model::M1 => {
            let mut phi_z = vec![0.0; 10];
            phi_z[0] = 25.0 * a2;
            phi_z[1] = 25.0 * b2;
            let mut phi_x = vec![0.0; 10];
            phi_x[0] = a2 * phi_z[0] + b2 * phi_z[1];
            phi_x[1] = b2 * phi_z[0] + a2 * phi_z[1];
            Ok(TheoreticalValues {
                phi_z: Some(phi_z),
                phi_x: Some(phi_x),
                total_signal_variance: Some(25.0),
            })
        }
        Model::M2 => {
            let e = std::f64::consts::E;
            let total = 25.0 + 25.0 / (e * e) - 100.0 / e + 50.0 * rho.cosh() / e;
            Ok(TheoreticalValues {
                phi_z: None,
                phi_x: None,
                total_signal_variance: Some(total),
            })
        }
        Model::M3 => {
            let r2 = rho * rho;
            let p12 = 9.0 / 16.0 * (r2 + 2.0);
            let p3 = (14.0 * r2 + 13.0) / 16.0;
            // ½·V(η₂ | Z₅) with η₂ = ρ/2·(Z₄² + Z₅²) + Z₄Z₅, averaged: ½(ρ²/2 + 1)
            let p45 = (r2 + 2.0) / 4.0;
            let phi = vec![p12, p12, p3, p45, p45];
            // E[η²] = ½(2.25 + 1)·E[X₁²X₂²] with E[X₁²X₂²] = 1 + 2ρ², E[η] = 1.25ρ
            let total = 1.625 * (1.0 + 2.0 * r2) - (1.25 * rho).powi(2);
            Ok(TheoreticalValues {
                phi_z: Some(phi.clone()),
                phi_x: Some(phi),
                total_signal_variance: Some(total),
            })
        }
        Model::M4 => Err(DfiError::Unavailable("theoretical values not available for m4".into())),
    }
}
