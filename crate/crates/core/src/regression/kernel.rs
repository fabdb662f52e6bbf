//! Nadaraya-Watson regression with a Gaussian kernel.

use crate::data::{mean_sd, Rows};

#[derive(Debug, Clone)]
pub(crate) struct KernelSmoother {
    x: Rows,
    y: Vec<f64>,
    bandwidth: f64,
}

impl KernelSmoother {
    pub fn fit(x: &Rows, y: &[f64], bandwidth: Option<f64>) -> Self {
        let bandwidth = bandwidth.unwrap_or_else(|| scott_bandwidth(x));
        KernelSmoother {
            x: x.clone(),
            y: y.to_vec(),
            bandwidth,
        }
    }

    pub fn predict(&self, row: &[f64]) -> f64 {
        let dist2: Vec<f64> = self
            .x
            .iter_rows()
            .map(|r| r.iter().zip(row).map(|(a, b)| (a - b) * (a - b)).sum())
            .collect();
        // shift by the nearest distance so at least one weight is exactly 1
        let nearest = dist2.iter().copied().fold(f64::INFINITY, f64::min);
        let scale = 0.5 / (self.bandwidth * self.bandwidth);
        let (mut num, mut den) = (0.0, 0.0);
        for (d2, y) in dist2.iter().zip(&self.y) {
            let w = (-(d2 - nearest) * scale).exp();
            num += w * y;
            den += w;
        }
        num / den
    }
}

/// `h = s̄ · n^{-1/(d+4)}` with `s̄` the mean column standard deviation.
fn scott_bandwidth(x: &Rows) -> f64 {
    let n = x.n_rows() as f64;
    let d = x.width();
    let s: f64 = (0..d)
        .map(|j| mean_sd(x.iter_rows().map(move |r| r[j])).1)
        .sum::<f64>()
        / d as f64;
    let s = if s > 0.0 { s } else { 1.0 };
    s * n.powf(-1.0 / (d as f64 + 4.0))
}
