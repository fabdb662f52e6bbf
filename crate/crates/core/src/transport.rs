//! Linear disentangling maps.
//!
//! Both maps factor the covariance as `Σ = L·Lᵀ` and define latent
//! coordinates `Z = L⁻¹·X`. The Bures-Wasserstein map uses the symmetric
//! square root `L = Σ^{1/2}`; the triangular map uses the Cholesky factor,
//! which is the Gaussian case of the Knothe-Rosenblatt rearrangement.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, Rows};
use crate::error::{DfiError, Result};

/// Relative eigenvalue floor used when no explicit floor is given.
pub const DEFAULT_RELATIVE_FLOOR: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum TransportKind {
    #[default]
    BuresWasserstein,
    Triangular,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceEstimate {
    pub sigma: DMatrix<f64>,
    pub n_used: usize,
}

/// Sample covariance with the n - 1 denominator, symmetrized exactly.
pub fn estimate_covariance(x: &Rows) -> Result<CovarianceEstimate> {
    let n = x.n_rows();
    if n < 2 {
        return Err(DfiError::InvalidDataset(format!(
            "covariance needs at least 2 rows, got {n}"
        )));
    }
    let d = x.width();
    let mut mean = vec![0.0; d];
    for r in x.iter_rows() {
        for (m, v) in mean.iter_mut().zip(r) {
            *m += v;
        }
    }
    for m in &mut mean {
        *m /= n as f64;
    }
    let mut sigma = DMatrix::<f64>::zeros(d, d);
    let mut centered = vec![0.0; d];
    for r in x.iter_rows() {
        for ((c, v), m) in centered.iter_mut().zip(r).zip(&mean) {
            *c = v - m;
        }
        for a in 0..d {
            for b in 0..=a {
                sigma[(a, b)] += centered[a] * centered[b];
            }
        }
    }
    let denom = (n - 1) as f64;
    for a in 0..d {
        for b in 0..=a {
            let v = sigma[(a, b)] / denom;
            sigma[(a, b)] = v;
            sigma[(b, a)] = v;
        }
    }
    Ok(CovarianceEstimate { sigma, n_used: n })
}

fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

struct CheckedEigen {
    eigen: SymmetricEigen<f64, nalgebra::Dyn>,
    lambda_min: f64,
    lambda_max: f64,
}

/// Eigendecomposition with the floor check. The offending eigenvector's
/// dominant entries name the dependent block.
fn checked_eigen(sigma: &DMatrix<f64>, eps: Option<f64>, names: &[String]) -> Result<CheckedEigen> {
    if !sigma.is_square() || sigma.nrows() == 0 {
        return Err(DfiError::InvalidDataset("covariance must be square and non-empty".into()));
    }
    let d = sigma.nrows();
    for a in 0..d {
        for b in 0..a {
            let (u, v) = (sigma[(a, b)], sigma[(b, a)]);
            if (u - v).abs() > 1e-12 * (1.0 + u.abs().max(v.abs())) {
                return Err(DfiError::InvalidDataset("covariance is not symmetric".into()));
            }
        }
    }
    let eigen = SymmetricEigen::new(symmetrize(sigma));
    let (mut imin, mut imax) = (0, 0);
    for (i, &v) in eigen.eigenvalues.iter().enumerate() {
        if v < eigen.eigenvalues[imin] {
            imin = i;
        }
        if v > eigen.eigenvalues[imax] {
            imax = i;
        }
    }
    let lambda_min = eigen.eigenvalues[imin];
    let lambda_max = eigen.eigenvalues[imax];
    let floor = eps.unwrap_or(DEFAULT_RELATIVE_FLOOR * lambda_max.abs());
    if !(lambda_min > floor) {
        let v = eigen.eigenvectors.column(imin);
        let block = (0..d)
            .filter(|&k| v[k].abs() >= 0.1)
            .map(|k| names.get(k).cloned().unwrap_or_else(|| format!("#{}", k + 1)))
            .collect();
        return Err(DfiError::SingularCovariance {
            eigenvalue: lambda_min,
            floor,
            block,
        });
    }
    Ok(CheckedEigen {
        eigen,
        lambda_min,
        lambda_max,
    })
}

fn spectral_function(eigen: &SymmetricEigen<f64, nalgebra::Dyn>, f: impl Fn(f64) -> f64) -> DMatrix<f64> {
    let v = &eigen.eigenvectors;
    let mut scaled = v.clone();
    for (k, &lambda) in eigen.eigenvalues.iter().enumerate() {
        let s = f(lambda);
        scaled.column_mut(k).scale_mut(s);
    }
    symmetrize(&(scaled * v.transpose()))
}

/// Symmetric PSD square root and its inverse via symmetric eigendecomposition.
///
/// `eps` is the eigenvalue floor; `None` means `1e-10 · λ_max`.
pub fn sqrt_psd(sigma: &DMatrix<f64>, eps: Option<f64>) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let checked = checked_eigen(sigma, eps, &[])?;
    Ok((
        spectral_function(&checked.eigen, f64::sqrt),
        spectral_function(&checked.eigen, |l| 1.0 / l.sqrt()),
    ))
}

/// Invertible linear map with `X = L·Z` and `Z = L⁻¹·X`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearTransport {
    #[serde(with = "matrix_rows")]
    pub l: DMatrix<f64>,
    #[serde(with = "matrix_rows")]
    pub l_inv: DMatrix<f64>,
    pub kind: TransportKind,
    pub condition_number: f64,
}

impl LinearTransport {
    pub fn identity(d: usize) -> Self {
        LinearTransport {
            l: DMatrix::identity(d, d),
            l_inv: DMatrix::identity(d, d),
            kind: TransportKind::BuresWasserstein,
            condition_number: 1.0,
        }
    }

    /// Builds the map from a given covariance matrix.
    pub fn from_covariance(sigma: &DMatrix<f64>, kind: TransportKind, eps: Option<f64>) -> Result<Self> {
        Self::from_covariance_named(sigma, kind, eps, &[])
    }

    pub(crate) fn from_covariance_named(
        sigma: &DMatrix<f64>,
        kind: TransportKind,
        eps: Option<f64>,
        names: &[String],
    ) -> Result<Self> {
        let checked = checked_eigen(sigma, eps, names)?;
        let condition_number = checked.lambda_max / checked.lambda_min;
        let (l, l_inv) = match kind {
            TransportKind::BuresWasserstein => (
                spectral_function(&checked.eigen, f64::sqrt),
                spectral_function(&checked.eigen, |v| 1.0 / v.sqrt()),
            ),
            TransportKind::Triangular => {
                let chol = nalgebra::Cholesky::new(symmetrize(sigma)).ok_or_else(|| {
                    DfiError::SingularCovariance {
                        eigenvalue: checked.lambda_min,
                        floor: 0.0,
                        block: names.to_vec(),
                    }
                })?;
                let l = chol.l();
                let d = l.nrows();
                let l_inv = l
                    .solve_lower_triangular(&DMatrix::identity(d, d))
                    .expect("Cholesky factor has a positive diagonal");
                (l, l_inv)
            }
        };
        Ok(LinearTransport {
            l,
            l_inv,
            kind,
            condition_number,
        })
    }

    pub fn d(&self) -> usize {
        self.l.nrows()
    }

    /// `z = L⁻¹·x` for a single row.
    pub fn forward_row(&self, x: &[f64], z: &mut [f64]) {
        apply(&self.l_inv, x, z)
    }

    /// `x = L·z` for a single row.
    pub fn inverse_row(&self, z: &[f64], x: &mut [f64]) {
        apply(&self.l, z, x)
    }

    pub fn forward(&self, x: &Rows) -> Result<Rows> {
        self.map_rows(x, &self.l_inv)
    }

    pub fn inverse(&self, z: &Rows) -> Result<Rows> {
        self.map_rows(z, &self.l)
    }

    fn map_rows(&self, rows: &Rows, m: &DMatrix<f64>) -> Result<Rows> {
        if rows.width() != self.d() {
            return Err(DfiError::DimensionMismatch {
                expected: self.d(),
                got: rows.width(),
            });
        }
        let mut out = Rows::zeros(rows.n_rows(), self.d());
        for i in 0..rows.n_rows() {
            apply(m, rows.row(i), out.row_mut(i));
        }
        Ok(out)
    }

    pub fn attribution_weights(&self) -> AttributionWeights {
        AttributionWeights::from_transport(self)
    }
}

fn apply(m: &DMatrix<f64>, v: &[f64], out: &mut [f64]) {
    let d = v.len();
    for (a, o) in out.iter_mut().enumerate() {
        let mut acc = 0.0;
        for b in 0..d {
            acc += m[(a, b)] * v[b];
        }
        *o = acc;
    }
}

/// Fits `L = Σ̂^{1/2}` on the dataset's features.
pub fn fit_bw_transport(ds: &Dataset, eps: Option<f64>) -> Result<LinearTransport> {
    fit_transport(ds, TransportKind::BuresWasserstein, eps)
}

/// Fits the lower-triangular Cholesky factor `Σ̂ = L·Lᵀ`.
pub fn fit_triangular_transport(ds: &Dataset, eps: Option<f64>) -> Result<LinearTransport> {
    fit_transport(ds, TransportKind::Triangular, eps)
}

pub fn fit_transport(ds: &Dataset, kind: TransportKind, eps: Option<f64>) -> Result<LinearTransport> {
    let cov = estimate_covariance(ds.x())?;
    LinearTransport::from_covariance_named(&cov.sigma, kind, eps, ds.feature_names())
}

/// Squared sensitivities `w[j][l] = (∂X_l/∂Z_j)² = L_{lj}²`.
///
/// Row `j` is a latent coordinate and column `l` a raw feature, so the
/// attributed importance is `Σ_j w[j][l] · latent[j]`.
#[derive(Debug, Clone, PartialEq)]
pub struct AttributionWeights {
    w: DMatrix<f64>,
}

impl AttributionWeights {
    pub fn from_transport(t: &LinearTransport) -> Self {
        let l = &t.l;
        let d = l.nrows();
        let w = DMatrix::from_fn(d, d, |j, col| l[(col, j)] * l[(col, j)]);
        AttributionWeights { w }
    }

    /// Weights given directly as a `d × d` matrix indexed `[latent][feature]`.
    pub fn from_matrix(w: DMatrix<f64>) -> Self {
        AttributionWeights { w }
    }

    pub fn identity(d: usize) -> Self {
        AttributionWeights {
            w: DMatrix::identity(d, d),
        }
    }

    pub fn d(&self) -> usize {
        self.w.nrows()
    }

    #[inline]
    pub fn get(&self, latent: usize, feature: usize) -> f64 {
        self.w[(latent, feature)]
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.w
    }

    /// `Σ_j w[j][l] = (L·Lᵀ)_{ll} = Σ_{ll}`.
    pub fn column_sums(&self) -> Vec<f64> {
        self.w.column_iter().map(|c| c.sum()).collect()
    }

    /// `Σ_l w[j][l] = (Lᵀ·L)_{jj}`; equals `Σ_{jj}` for the symmetric map.
    pub fn row_sums(&self) -> Vec<f64> {
        self.w.row_iter().map(|r| r.sum()).collect()
    }
}

/// Serializes a matrix as a list of rows.
mod matrix_rows {
    use nalgebra::DMatrix;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(m: &DMatrix<f64>, s: S) -> Result<S::Ok, S::Error> {
        let rows: Vec<Vec<f64>> = m.row_iter().map(|r| r.iter().copied().collect()).collect();
        rows.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<DMatrix<f64>, D::Error> {
        let rows = Vec::<Vec<f64>>::deserialize(d)?;
        let n = rows.len();
        let m = rows.first().map(Vec::len).unwrap_or(0);
        if rows.iter().any(|r| r.len() != m) {
            return Err(serde::de::Error::custom("ragged matrix"));
        }
        Ok(DMatrix::from_fn(n, m, |i, j| rows[i][j]))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn rel_frob(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
        (a - b).norm() / b.norm()
    }

    fn max_abs(a: &DMatrix<f64>) -> f64 {
        a.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// Draws `n` rows from N(0, Σ) using an independent hand-rolled Cholesky.
    fn gaussian_rows(sigma: &DMatrix<f64>, n: usize, seed: u64) -> Rows {
        let d = sigma.nrows();
        let mut c = DMatrix::<f64>::zeros(d, d);
        for i in 0..d {
            for j in 0..=i {
                let s: f64 = (0..j).map(|k| c[(i, k)] * c[(j, k)]).sum();
                c[(i, j)] = if i == j {
                    (sigma[(i, i)] - s).sqrt()
                } else {
                    (sigma[(i, j)] - s) / c[(j, j)]
                };
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut data = Vec::with_capacity(n * d);
        let mut e = vec![0.0; d];
        for _ in 0..n {
            for v in e.iter_mut() {
                *v = StandardNormal.sample(&mut rng);
            }
            for i in 0..d {
                data.push((0..=i).map(|k| c[(i, k)] * e[k]).sum());
            }
        }
        Rows::new(data, d).unwrap()
    }

    fn dataset(x: Rows) -> Dataset {
        let d = x.width();
        let n = x.n_rows();
        let names = (1..=d).map(|k| format!("X{k}")).collect();
        Dataset::new(names, x, vec![0.0; n]).unwrap()
    }

    fn rho_matrix(rho: f64) -> DMatrix<f64> {
        DMatrix::from_row_slice(2, 2, &[1.0, rho, rho, 1.0])
    }

    #[test]
    fn covariance_of_duplicate_columns() {
        let x = Rows::from_rows(&[vec![-1.0, -1.0], vec![0.0, 0.0], vec![1.0, 1.0]]).unwrap();
        let cov = estimate_covariance(&x).unwrap();
        assert_eq!(cov.sigma, DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]));
        assert_eq!(cov.n_used, 3);
    }

    #[test]
    fn covariance_concentrates() {
        let x = gaussian_rows(&rho_matrix(0.8), 100_000, 7);
        let cov = estimate_covariance(&x).unwrap();
        assert!(max_abs(&(cov.sigma - rho_matrix(0.8))) < 0.02);
    }

    #[test]
    fn covariance_needs_two_rows() {
        let x = Rows::from_rows(&[vec![1.0, 2.0]]).unwrap();
        assert!(estimate_covariance(&x).is_err());
    }

    #[test]
    fn sqrt_of_identity() {
        let (l, li) = sqrt_psd(&DMatrix::identity(2, 2), None).unwrap();
        assert_abs_diff_eq!(l, DMatrix::identity(2, 2), epsilon = 1e-14);
        assert_abs_diff_eq!(li, DMatrix::identity(2, 2), epsilon = 1e-14);
    }

    #[test]
    fn sqrt_closed_form_two_by_two() {
        let rho: f64 = 0.8;
        let a = 0.5 * ((1.0 + rho).sqrt() + (1.0 - rho).sqrt());
        let b = 0.5 * ((1.0 + rho).sqrt() - (1.0 - rho).sqrt());
        let (l, li) = sqrt_psd(&rho_matrix(rho), None).unwrap();
        assert_abs_diff_eq!(l, DMatrix::from_row_slice(2, 2, &[a, b, b, a]), epsilon = 1e-12);
        assert_abs_diff_eq!(l[(0, 0)], 0.894427, epsilon = 1e-6);
        assert_abs_diff_eq!(l[(0, 1)], 0.447214, epsilon = 1e-6);
        assert!(rel_frob(&(&l * &l), &rho_matrix(rho)) < 1e-10);
        let inv = rho_matrix(rho).try_inverse().unwrap();
        assert!(rel_frob(&(&li * &li), &inv) < 1e-10);
    }

    #[test]
    fn sqrt_of_diagonal() {
        let s = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![4.0, 9.0]));
        let (l, li) = sqrt_psd(&s, None).unwrap();
        assert_abs_diff_eq!(l, DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 3.0]), epsilon = 1e-12);
        assert_abs_diff_eq!(li, DMatrix::from_row_slice(2, 2, &[0.5, 0.0, 0.0, 1.0 / 3.0]), epsilon = 1e-12);
    }

    #[test]
    fn singular_covariance_names_eigenvalue() {
        let err = sqrt_psd(&rho_matrix(1.0), None).unwrap_err();
        assert!(err.to_string().contains("singular"));
        assert!(matches!(err, DfiError::SingularCovariance { eigenvalue, .. } if eigenvalue.abs() < 1e-12));
    }

    #[test]
    fn duplicated_column_dataset_is_singular() {
        let base = gaussian_rows(&DMatrix::identity(2, 2), 200, 1);
        let rows: Vec<Vec<f64>> = base.iter_rows().map(|r| vec![r[0], r[0], r[1]]).collect();
        let err = fit_bw_transport(&dataset(Rows::from_rows(&rows).unwrap()), None).unwrap_err();
        match err {
            DfiError::SingularCovariance { block, .. } => assert_eq!(block, vec!["X1", "X2"]),
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn bw_fit_on_white_noise_is_near_identity() {
        let x = gaussian_rows(&DMatrix::identity(3, 3), 5000, 11);
        let t = fit_bw_transport(&dataset(x), None).unwrap();
        assert_eq!(t.kind, TransportKind::BuresWasserstein);
        assert!(max_abs(&(&t.l - DMatrix::identity(3, 3))) < 0.05);
    }

    #[test]
    fn one_dimensional_transport() {
        let rows: Vec<Vec<f64>> = (0..4).map(|i| vec![[-3.0, -1.0, 1.0, 3.0][i] * (12.0f64 / 20.0).sqrt()]).collect();
        let x = Rows::from_rows(&rows).unwrap();
        // sample variance of ±1, ±3 scaled: (2·9 + 2·1)/3 · 12/20 = 4
        let t = fit_bw_transport(&dataset(x), None).unwrap();
        assert_abs_diff_eq!(t.l[(0, 0)], 2.0, epsilon = 1e-12);
        let t = fit_triangular_transport(&dataset(Rows::from_rows(&rows).unwrap()), None).unwrap();
        assert_abs_diff_eq!(t.l[(0, 0)], 2.0, epsilon = 1e-12);
    }

    #[test]
    fn triangular_closed_forms() {
        let t = LinearTransport::from_covariance(&DMatrix::identity(2, 2), TransportKind::Triangular, None).unwrap();
        assert_abs_diff_eq!(t.l, DMatrix::identity(2, 2), epsilon = 1e-14);
        let t = LinearTransport::from_covariance(&rho_matrix(0.8), TransportKind::Triangular, None).unwrap();
        assert_abs_diff_eq!(t.l, DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.8, 0.6]), epsilon = 1e-12);
        let s = DMatrix::from_row_slice(2, 2, &[4.0, 0.0, 0.0, 9.0]);
        let t = LinearTransport::from_covariance(&s, TransportKind::Triangular, None).unwrap();
        assert_abs_diff_eq!(t.l, DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 3.0]), epsilon = 1e-12);
        assert_abs_diff_eq!(&t.l * &t.l_inv, DMatrix::identity(2, 2), epsilon = 1e-12);
    }

    #[test]
    fn identity_transport_is_pass_through() {
        let x = Rows::from_rows(&[vec![1.0, -2.0], vec![3.5, 0.25]]).unwrap();
        let t = LinearTransport::identity(2);
        assert_eq!(t.forward(&x).unwrap(), x);
        assert_eq!(t.inverse(&x).unwrap(), x);
    }

    #[test]
    fn forward_checks_width() {
        let x = Rows::from_rows(&[vec![1.0, 2.0, 3.0]]).unwrap();
        assert!(matches!(
            LinearTransport::identity(2).forward(&x),
            Err(DfiError::DimensionMismatch { expected: 2, got: 3 })
        ));
    }

    #[test]
    fn whitening_of_large_sample() {
        let sigma = rho_matrix(0.8);
        let t = fit_bw_transport(&dataset(gaussian_rows(&sigma, 20_000, 5)), None).unwrap();
        // fresh sample, so the deviation is statistical rather than exact
        let z = t.forward(&gaussian_rows(&sigma, 20_000, 6)).unwrap();
        let cov = estimate_covariance(&z).unwrap().sigma;
        assert!(max_abs(&(cov - DMatrix::identity(2, 2))) < 0.05);
    }

    #[test]
    fn attribution_weights_orientation() {
        let w = LinearTransport::identity(3).attribution_weights();
        assert_eq!(w.matrix(), &DMatrix::identity(3, 3));

        let t = LinearTransport::from_covariance(&rho_matrix(0.8), TransportKind::Triangular, None).unwrap();
        let w = t.attribution_weights();
        // X2 = 0.8·Z1 + 0.6·Z2, so latent 1 feeds feature 2 with weight 0.64
        assert_abs_diff_eq!(
            w.matrix().clone(),
            DMatrix::from_row_slice(2, 2, &[1.0, 0.64, 0.0, 0.36]),
            epsilon = 1e-12
        );
    }

    #[test]
    fn bw_weights_block_values() {
        let mut s = DMatrix::identity(3, 3);
        s[(0, 1)] = 0.8;
        s[(1, 0)] = 0.8;
        let t = LinearTransport::from_covariance(&s, TransportKind::BuresWasserstein, None).unwrap();
        let w = t.attribution_weights();
        assert_abs_diff_eq!(w.get(0, 0), 0.8, epsilon = 1e-12);
        assert_abs_diff_eq!(w.get(1, 0), 0.2, epsilon = 1e-12);
        assert_abs_diff_eq!(w.get(0, 1), 0.2, epsilon = 1e-12);
        assert_abs_diff_eq!(w.get(2, 2), 1.0, epsilon = 1e-12);
        for (c, r) in w.column_sums().iter().zip(w.row_sums()) {
            assert_abs_diff_eq!(*c, r, epsilon = 1e-12);
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn random_spd(d: usize, seed: u64) -> DMatrix<f64> {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a: DMatrix<f64> = DMatrix::from_fn(d, d, |_, _| StandardNormal.sample(&mut rng));
            &a * a.transpose() + DMatrix::identity(d, d) * 0.5
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(48))]

            #[test]
            fn bw_map_invariants(d in 1usize..7, seed in any::<u64>()) {
                let s = random_spd(d, seed);
                let t = LinearTransport::from_covariance(&s, TransportKind::BuresWasserstein, None).unwrap();
                prop_assert!(rel_frob(&(&t.l * &t.l), &s) < 1e-10);
                prop_assert!(max_abs(&(&t.l - t.l.transpose())) == 0.0);
                prop_assert!(max_abs(&(&t.l * &t.l_inv - DMatrix::identity(d, d))) < 1e-8);
                let w = t.attribution_weights();
                for (c, l) in w.column_sums().iter().zip(0..d) {
                    prop_assert!((c - s[(l, l)]).abs() < 1e-10 * s[(l, l)]);
                }
                for (r, j) in w.row_sums().iter().zip(0..d) {
                    prop_assert!((r - s[(j, j)]).abs() < 1e-10 * s[(j, j)]);
                }
                prop_assert!(w.matrix().iter().all(|v| *v >= 0.0));
            }

            #[test]
            fn triangular_map_invariants(d in 1usize..7, seed in any::<u64>()) {
                let s = random_spd(d, seed);
                let t = LinearTransport::from_covariance(&s, TransportKind::Triangular, None).unwrap();
                prop_assert!(rel_frob(&(&t.l * t.l.transpose()), &s) < 1e-10);
                for i in 0..d {
                    prop_assert!(t.l[(i, i)] > 0.0);
                    for j in i + 1..d {
                        prop_assert!(t.l[(i, j)] == 0.0);
                    }
                }
                prop_assert!(max_abs(&(&t.l * &t.l_inv - DMatrix::identity(d, d))) < 1e-8);
                let w = t.attribution_weights();
                for (c, l) in w.column_sums().iter().zip(0..d) {
                    prop_assert!((c - s[(l, l)]).abs() < 1e-10 * s[(l, l)]);
                }
            }

            #[test]
            fn forward_inverse_round_trip(seed in any::<u64>(), d in 1usize..6) {
                let s = random_spd(d, seed);
                let t = LinearTransport::from_covariance(&s, TransportKind::BuresWasserstein, None).unwrap();
                let x = gaussian_rows(&s, 25, seed ^ 0x55);
                let back = t.inverse(&t.forward(&x).unwrap()).unwrap();
                for (a, b) in back.as_slice().iter().zip(x.as_slice()) {
                    prop_assert!((a - b).abs() < 1e-8);
                }
            }

            #[test]
            fn training_sample_whitening(seed in any::<u64>()) {
                let s = random_spd(3, seed);
                let n = 2000;
                let x = gaussian_rows(&s, n, seed.wrapping_add(1));
                for kind in [TransportKind::BuresWasserstein, TransportKind::Triangular] {
                    let t = fit_transport(&dataset(x.clone()), kind, None).unwrap();
                    let cov = estimate_covariance(&t.forward(&x).unwrap()).unwrap().sigma;
                    let bound = 5.0 * (n as f64).powf(-0.5) * t.condition_number;
                    prop_assert!(max_abs(&(cov - DMatrix::identity(3, 3))) < bound);
                }
            }
        }
    }
}
