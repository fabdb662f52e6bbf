use serde::{Deserialize, Serialize};

/// Closed-form regression functions of the simulation models.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OracleFn {
    /// `5·x₁`
    M1Mu,
    /// `5·cos(x₁) + 5·cos(x₂)`
    M2Mu,
    /// `1.5·x₁x₂·1{x₃>0} + x₄x₅·1{x₃<0}`
    M3Mu,
    /// `5·x₁`
    M4Mu,
}

impl OracleFn {
    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            OracleFn::M1Mu | OracleFn::M4Mu => 5.0 * x[0],
            OracleFn::M2Mu => 5.0 * x[0].cos() + 5.0 * x[1].cos(),
            OracleFn::M3Mu => {
                let mut v = 0.0;
                if x[2] > 0.0 {
                    v += 1.5 * x[0] * x[1];
                }
                if x[2] < 0.0 {
                    v += x[3] * x[4];
                }
                v
            }
        }
    }

    pub fn min_dim(&self) -> usize {
        match self {
            OracleFn::M1Mu | OracleFn::M4Mu => 1,
            OracleFn::M2Mu => 2,
            OracleFn::M3Mu => 5,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            OracleFn::M1Mu => "m1_mu",
            OracleFn::M2Mu => "m2_mu",
            OracleFn::M3Mu => "m3_mu",
            OracleFn::M4Mu => "m4_mu",
        }
    }
}
