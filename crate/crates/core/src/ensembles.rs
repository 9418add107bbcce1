//! Wigner and sample-covariance ensembles.
//!
//! Entry normalization follows the usual conventions: a real symmetric
//! Wigner matrix has off-diagonal entries of variance `1/N` and diagonal
//! entries of variance `2/N`; hermitian entries split the off-diagonal
//! variance evenly over the real and imaginary parts (`1/(2N)` each, diagonal
//! `1/N`); quaternion self-dual entries split it over four components
//! (`1/(4N)` each, diagonal `1/(2N)`). A covariance factor `A` is `M x N` with
//! entries of variance `1/M` (split evenly in the complex case), and the
//! spectrum of interest is the singular values of `A`.
//!
//! Quaternion matrices are stored as `2N x 2N` complex matrices built from
//! the 2x2 blocks `[[z, w], [-conj(w), conj(z)]]`. Their spectrum is doubly
//! degenerate; [`spectrum`] keeps every second sorted eigenvalue.

use std::io::Write;

use faer::{c64, Mat, Side};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Result, RmtError};
use crate::rng::{stream_rng, STREAM_ENTRIES, STREAM_OU};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EnsembleKind {
    WignerSymmetric,
    WignerHermitian,
    WignerQuaternion,
    CovarianceReal,
    CovarianceComplex,
}

impl EnsembleKind {
    pub fn is_covariance(self) -> bool {
        matches!(self, EnsembleKind::CovarianceReal | EnsembleKind::CovarianceComplex)
    }

    /// Dyson index of the symmetry class.
    pub fn beta(self) -> f64 {
        match self {
            EnsembleKind::WignerSymmetric | EnsembleKind::CovarianceReal => 1.0,
            EnsembleKind::WignerHermitian | EnsembleKind::CovarianceComplex => 2.0,
            EnsembleKind::WignerQuaternion => 4.0,
        }
    }

    /// Variance of one real component of an off-diagonal (or covariance) entry,
    /// before the `1/N` or `1/M` scaling.
    fn component_variance(self) -> f64 {
        match self {
            EnsembleKind::WignerSymmetric | EnsembleKind::CovarianceReal => 1.0,
            EnsembleKind::WignerHermitian | EnsembleKind::CovarianceComplex => 0.5,
            EnsembleKind::WignerQuaternion => 0.25,
        }
    }

    /// Variance of a diagonal Wigner entry before the `1/N` scaling.
    fn diagonal_variance(self) -> f64 {
        match self {
            EnsembleKind::WignerSymmetric => 2.0,
            EnsembleKind::WignerHermitian => 1.0,
            EnsembleKind::WignerQuaternion => 0.5,
            _ => 0.0,
        }
    }
}

/// Single-entry law; every choice is centered and rescaled to the variance the
/// ensemble requires.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EntryDist {
    Gaussian,
    Rademacher,
    Uniform,
}

impl EntryDist {
    /// Draw one value with mean zero and standard deviation `std`.
    pub fn draw<R: Rng + ?Sized>(self, rng: &mut R, std: f64) -> f64 {
        match self {
            EntryDist::Gaussian => {
                let g: f64 = rng.sample(StandardNormal);
                std * g
            }
            EntryDist::Rademacher => {
                if rng.random::<bool>() {
                    std
                } else {
                    -std
                }
            }
            EntryDist::Uniform => {
                let u: f64 = rng.random::<f64>();
                std * 3f64.sqrt() * (2.0 * u - 1.0)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSpec {
    pub kind: EnsembleKind,
    /// Matrix size `N` (number of eigenvalues or singular values).
    pub n: usize,
    /// Row count `M` of the covariance factor; ignored for Wigner kinds.
    #[serde(default)]
    pub m: usize,
    pub entry_dist: EntryDist,
    #[serde(default)]
    pub seed: u64,
}

impl EnsembleSpec {
    pub fn wigner(kind: EnsembleKind, n: usize, entry_dist: EntryDist, seed: u64) -> Self {
        EnsembleSpec { kind, n, m: 0, entry_dist, seed }
    }

    pub fn covariance(kind: EnsembleKind, n: usize, m: usize, entry_dist: EntryDist, seed: u64) -> Self {
        EnsembleSpec { kind, n, m, entry_dist, seed }
    }

    /// Same ensemble with a different seed.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    /// Aspect ratio `d = N/M` of a covariance ensemble.
    pub fn ratio(&self) -> f64 {
        self.n as f64 / self.m as f64
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(RmtError::Config("matrix size n must be positive".into()));
        }
        if self.kind.is_covariance() {
            if self.m == 0 {
                return Err(RmtError::Config("covariance kinds need m > 0 rows".into()));
            }
            let d = self.ratio();
            if !(d > 0.0 && d < 1.0) {
                return Err(RmtError::Config(format!("aspect ratio d = n/m = {d} must satisfy 0 < d < 1")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum MatrixData {
    Real(Mat<f64>),
    Complex(Mat<c64>),
}

/// A sampled matrix. Wigner kinds hold the (self-adjoint) matrix itself,
/// covariance kinds hold the rectangular factor `A`.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixSample {
    pub spec: EnsembleSpec,
    pub data: MatrixData,
    pub seed_used: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SpectrumKind {
    Eigenvalues,
    SingularValues,
}

/// Ordered real spectrum: eigenvalues of a Wigner matrix or singular values of
/// a covariance factor.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralPoints {
    values: Vec<f64>,
    kind: SpectrumKind,
    spec: Option<EnsembleSpec>,
}

impl SpectralPoints {
    /// Wrap already sorted values.
    pub fn new(values: Vec<f64>, kind: SpectrumKind) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(RmtError::Domain("spectral points must be finite".into()));
        }
        if values.windows(2).any(|w| w[1] < w[0]) {
            return Err(RmtError::Domain("spectral points must be non-decreasing".into()));
        }
        if kind == SpectrumKind::SingularValues && values.first().is_some_and(|&v| v < 0.0) {
            return Err(RmtError::Domain("singular values must be non-negative".into()));
        }
        Ok(SpectralPoints { values, kind, spec: None })
    }

    /// Sort (stably, so ties keep their original order) and wrap.
    pub fn from_unsorted(mut values: Vec<f64>, kind: SpectrumKind) -> Result<Self> {
        if values.iter().any(|v| v.is_nan()) {
            return Err(RmtError::Domain("spectral points must not be NaN".into()));
        }
        values.sort_by(f64::total_cmp);
        Self::new(values, kind)
    }

    pub fn with_spec(mut self, spec: EnsembleSpec) -> Self {
        self.spec = Some(spec);
        self
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn kind(&self) -> SpectrumKind {
        self.kind
    }

    pub fn spec(&self) -> Option<&EnsembleSpec> {
        self.spec.as_ref()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Eigenvalue view: the values themselves, or `lambda_j = x_j^2` for
    /// singular values.
    pub fn eigenvalues(&self) -> Vec<f64> {
        match self.kind {
            SpectrumKind::Eigenvalues => self.values.clone(),
            SpectrumKind::SingularValues => self.values.iter().map(|x| x * x).collect(),
        }
    }

    /// Smallest gap between consecutive points (infinite for fewer than two).
    pub fn min_gap(&self) -> f64 {
        self.values.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min)
    }
}

/// Draw a matrix from `spec`. Deterministic in `spec.seed`.
pub fn sample(spec: &EnsembleSpec) -> Result<MatrixSample> {
    sample_with_dist(spec, spec.entry_dist, spec.seed, STREAM_ENTRIES)
}

fn sample_with_dist(spec: &EnsembleSpec, dist: EntryDist, seed: u64, stream: u64) -> Result<MatrixSample> {
    spec.validate()?;
    let mut rng = stream_rng(seed, stream);
    let n = spec.n;
    let kind = spec.kind;
    let data = match kind {
        EnsembleKind::WignerSymmetric => {
            let scale = (n as f64).sqrt().recip();
            let off = kind.component_variance().sqrt() * scale;
            let diag = kind.diagonal_variance().sqrt() * scale;
            let mut h = Mat::<f64>::zeros(n, n);
            for i in 0..n {
                h[(i, i)] = dist.draw(&mut rng, diag);
                for j in (i + 1)..n {
                    let v = dist.draw(&mut rng, off);
                    h[(i, j)] = v;
                    h[(j, i)] = v;
                }
            }
            MatrixData::Real(h)
        }
        EnsembleKind::WignerHermitian => {
            let scale = (n as f64).sqrt().recip();
            let off = kind.component_variance().sqrt() * scale;
            let diag = kind.diagonal_variance().sqrt() * scale;
            let mut h = Mat::<c64>::zeros(n, n);
            for i in 0..n {
                h[(i, i)] = c64::new(dist.draw(&mut rng, diag), 0.0);
                for j in (i + 1)..n {
                    let re = dist.draw(&mut rng, off);
                    let im = dist.draw(&mut rng, off);
                    h[(i, j)] = c64::new(re, im);
                    h[(j, i)] = c64::new(re, -im);
                }
            }
            MatrixData::Complex(h)
        }
        EnsembleKind::WignerQuaternion => {
            let scale = (n as f64).sqrt().recip();
            let off = kind.component_variance().sqrt() * scale;
            let diag = kind.diagonal_variance().sqrt() * scale;
            let mut h = Mat::<c64>::zeros(2 * n, 2 * n);
            for k in 0..n {
                let x = dist.draw(&mut rng, diag);
                h[(2 * k, 2 * k)] = c64::new(x, 0.0);
                h[(2 * k + 1, 2 * k + 1)] = c64::new(x, 0.0);
                for l in (k + 1)..n {
                    let a = dist.draw(&mut rng, off);
                    let b = dist.draw(&mut rng, off);
                    let c = dist.draw(&mut rng, off);
                    let d = dist.draw(&mut rng, off);
                    let z = c64::new(a, b);
                    let w = c64::new(c, d);
                    let block = [[z, w], [-w.conj(), z.conj()]];
                    for (r, row) in block.iter().enumerate() {
                        for (s, &entry) in row.iter().enumerate() {
                            h[(2 * k + r, 2 * l + s)] = entry;
                            h[(2 * l + s, 2 * k + r)] = entry.conj();
                        }
                    }
                }
            }
            MatrixData::Complex(h)
        }
        EnsembleKind::CovarianceReal => {
            let std = kind.component_variance().sqrt() / (spec.m as f64).sqrt();
            let mut a = Mat::<f64>::zeros(spec.m, n);
            for i in 0..spec.m {
                for j in 0..n {
                    a[(i, j)] = dist.draw(&mut rng, std);
                }
            }
            MatrixData::Real(a)
        }
        EnsembleKind::CovarianceComplex => {
            let std = kind.component_variance().sqrt() / (spec.m as f64).sqrt();
            let mut a = Mat::<c64>::zeros(spec.m, n);
            for i in 0..spec.m {
                for j in 0..n {
                    let re = dist.draw(&mut rng, std);
                    let im = dist.draw(&mut rng, std);
                    a[(i, j)] = c64::new(re, im);
                }
            }
            MatrixData::Complex(a)
        }
    };
    Ok(MatrixSample { spec: *spec, data, seed_used: seed })
}

impl MatrixSample {
    /// The self-adjoint matrix whose spectrum is reported: `H` itself for
    /// Wigner kinds, `A* A` for covariance kinds.
    pub fn self_adjoint(&self) -> MatrixData {
        match (&self.data, self.spec.kind.is_covariance()) {
            (MatrixData::Real(a), true) => MatrixData::Real(a.transpose() * a),
            (MatrixData::Complex(a), true) => MatrixData::Complex(a.adjoint() * a),
            (data, false) => data.clone(),
        }
    }

    /// Largest absolute deviation from exact self-adjointness (Wigner kinds).
    pub fn structure_residual(&self) -> f64 {
        match &self.data {
            MatrixData::Real(h) => {
                let mut r: f64 = 0.0;
                for i in 0..h.nrows() {
                    for j in 0..h.ncols() {
                        r = r.max((h[(i, j)] - h[(j, i)]).abs());
                    }
                }
                r
            }
            MatrixData::Complex(h) => {
                let mut r: f64 = 0.0;
                for i in 0..h.nrows() {
                    for j in 0..h.ncols() {
                        r = r.max((h[(i, j)] - h[(j, i)].conj()).norm());
                    }
                }
                r
            }
        }
    }
}

fn numeric(seed: u64) -> RmtError {
    RmtError::Numeric { seed, reason: "self-adjoint eigensolver did not converge".into() }
}

fn sorted_eigenvalues(h: &MatrixData, seed: u64) -> Result<Vec<f64>> {
    let mut values = match h {
        MatrixData::Real(h) => h.self_adjoint_eigenvalues(Side::Lower).map_err(|_| numeric(seed))?,
        MatrixData::Complex(h) => h.self_adjoint_eigenvalues(Side::Lower).map_err(|_| numeric(seed))?,
    };
    if values.iter().any(|v| !v.is_finite()) {
        return Err(numeric(seed));
    }
    values.sort_by(f64::total_cmp);
    Ok(values)
}

fn singular_from_gram(eigs: Vec<f64>) -> Vec<f64> {
    eigs.into_iter().map(|l| l.max(0.0).sqrt()).collect()
}

/// Ordered eigenvalues (Wigner) or singular values (covariance) of a sample.
pub fn spectrum(sample: &MatrixSample) -> Result<SpectralPoints> {
    let seed = sample.seed_used;
    let eigs = sorted_eigenvalues(&sample.self_adjoint(), seed)?;
    let (values, kind) = match sample.spec.kind {
        EnsembleKind::WignerQuaternion => (eigs.into_iter().step_by(2).collect(), SpectrumKind::Eigenvalues),
        k if k.is_covariance() => (singular_from_gram(eigs), SpectrumKind::SingularValues),
        _ => (eigs, SpectrumKind::Eigenvalues),
    };
    Ok(SpectralPoints::new(values, kind)?.with_spec(sample.spec))
}

/// Largest eigen-pair residual `|H v - lambda v|` relative to the Frobenius
/// norm of `H` (for covariance kinds `H = A* A`).
pub fn eigen_residual(sample: &MatrixSample) -> Result<f64> {
    let seed = sample.seed_used;
    match sample.self_adjoint() {
        MatrixData::Real(h) => {
            let evd = h.self_adjoint_eigen(Side::Lower).map_err(|_| numeric(seed))?;
            let u = evd.U();
            let s = evd.S().column_vector();
            let hu = &h * u;
            let norm = h.norm_l2().max(f64::MIN_POSITIVE);
            let mut worst: f64 = 0.0;
            for k in 0..u.ncols() {
                let mut acc = 0.0;
                for i in 0..u.nrows() {
                    let r = hu[(i, k)] - s[k] * u[(i, k)];
                    acc += r * r;
                }
                worst = worst.max(acc.sqrt() / norm);
            }
            Ok(worst)
        }
        MatrixData::Complex(h) => {
            let evd = h.self_adjoint_eigen(Side::Lower).map_err(|_| numeric(seed))?;
            let u = evd.U();
            let s = evd.S().column_vector();
            let hu = &h * u;
            let norm = h.norm_l2().max(f64::MIN_POSITIVE);
            let mut worst: f64 = 0.0;
            for k in 0..u.ncols() {
                let mut acc = 0.0;
                for i in 0..u.nrows() {
                    let r = hu[(i, k)] - u[(i, k)] * s[k];
                    acc += r.norm_sqr();
                }
                worst = worst.max(acc.sqrt() / norm);
            }
            Ok(worst)
        }
    }
}

/// Singular values of the `M x (N-1)` factor obtained by deleting column
/// `drop_index` (one-based, `1..=N`) of a covariance sample.
pub fn minor_spectrum(sample: &MatrixSample, drop_index: usize) -> Result<SpectralPoints> {
    if !sample.spec.kind.is_covariance() {
        return Err(RmtError::Domain("minor spectra are defined for covariance kinds".into()));
    }
    let n = sample.spec.n;
    if drop_index == 0 || drop_index > n {
        return Err(RmtError::IndexOutOfRange { index: drop_index, len: n });
    }
    let drop_col = drop_index - 1;
    if n == 1 {
        return SpectralPoints::new(Vec::new(), SpectrumKind::SingularValues);
    }
    let keep = |j: usize| if j < drop_col { j } else { j + 1 };
    let gram = match &sample.data {
        MatrixData::Real(a) => {
            let b = Mat::<f64>::from_fn(a.nrows(), n - 1, |i, j| a[(i, keep(j))]);
            MatrixData::Real(b.transpose() * &b)
        }
        MatrixData::Complex(a) => {
            let b = Mat::<c64>::from_fn(a.nrows(), n - 1, |i, j| a[(i, keep(j))]);
            MatrixData::Complex(b.adjoint() * &b)
        }
    };
    let eigs = sorted_eigenvalues(&gram, sample.seed_used)?;
    SpectralPoints::new(singular_from_gram(eigs), SpectrumKind::SingularValues)
}

/// Matrix Ornstein-Uhlenbeck interpolation
/// `e^{-t/2} H + (1 - e^{-t})^{1/2} G`, with `G` a fresh Gaussian sample of the
/// same kind drawn from `seed`.
pub fn ou_interpolate(initial: &MatrixSample, t: f64, seed: u64) -> Result<MatrixSample> {
    if !(t >= 0.0) || !t.is_finite() {
        return Err(RmtError::Config(format!("OU time must be non-negative, got {t}")));
    }
    if t == 0.0 {
        return Ok(initial.clone());
    }
    let fresh = sample_with_dist(&initial.spec, EntryDist::Gaussian, seed, STREAM_OU)?;
    let keep = (-0.5 * t).exp();
    let add = (-(-t).exp_m1()).sqrt();
    let data = match (&initial.data, &fresh.data) {
        (MatrixData::Real(h), MatrixData::Real(g)) => {
            MatrixData::Real(Mat::from_fn(h.nrows(), h.ncols(), |i, j| keep * h[(i, j)] + add * g[(i, j)]))
        }
        (MatrixData::Complex(h), MatrixData::Complex(g)) => {
            MatrixData::Complex(Mat::from_fn(h.nrows(), h.ncols(), |i, j| h[(i, j)] * keep + g[(i, j)] * add))
        }
        _ => unreachable!("fresh sample has the same kind"),
    };
    Ok(MatrixSample { spec: initial.spec, data, seed_used: seed })
}

/// Write spectra as CSV rows `seed,k,value` with one-based `k`.
pub fn write_spectra_csv<W: Write>(mut out: W, spectra: &[(u64, &SpectralPoints)]) -> Result<()> {
    writeln!(out, "seed,k,value")?;
    for (seed, points) in spectra {
        for (k, v) in points.values().iter().enumerate() {
            writeln!(out, "{},{},{}", seed, k + 1, v)?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(kind: EnsembleKind, n: usize, m: usize, dist: EntryDist, seed: u64) -> EnsembleSpec {
        EnsembleSpec { kind, n, m, entry_dist: dist, seed }
    }

    #[test]
    fn two_by_two_symmetric_has_equal_off_diagonal() {
        let s = sample(&spec(EnsembleKind::WignerSymmetric, 2, 0, EntryDist::Gaussian, 11)).unwrap();
        let MatrixData::Real(h) = &s.data else { panic!("real kind") };
        assert_eq!(h[(0, 1)], h[(1, 0)]);
        assert_eq!(s.structure_residual(), 0.0);
    }

    #[test]
    fn rademacher_covariance_column_is_plus_minus_half() {
        let s = sample(&spec(EnsembleKind::CovarianceReal, 1, 4, EntryDist::Rademacher, 3)).unwrap();
        let MatrixData::Real(a) = &s.data else { panic!("real kind") };
        assert_eq!((a.nrows(), a.ncols()), (4, 1));
        for i in 0..4 {
            assert_eq!(a[(i, 0)].abs(), 0.5);
        }
    }

    #[test]
    fn invalid_ratio_is_rejected() {
        for (n, m) in [(4, 4), (5, 4), (3, 0)] {
            let err = sample(&spec(EnsembleKind::CovarianceReal, n, m, EntryDist::Gaussian, 0)).unwrap_err();
            assert!(matches!(err, RmtError::Config(_)), "{err}");
        }
        assert!(sample(&spec(EnsembleKind::WignerSymmetric, 0, 0, EntryDist::Gaussian, 0)).is_err());
    }

    #[test]
    fn structure_is_exact_for_every_kind() {
        for kind in [EnsembleKind::WignerSymmetric, EnsembleKind::WignerHermitian, EnsembleKind::WignerQuaternion] {
            for dist in [EntryDist::Gaussian, EntryDist::Rademacher, EntryDist::Uniform] {
                let s = sample(&spec(kind, 7, 0, dist, 5)).unwrap();
                assert_eq!(s.structure_residual(), 0.0);
                let t = ou_interpolate(&s, 0.3, 9).unwrap();
                assert_eq!(t.structure_residual(), 0.0);
            }
        }
    }

    #[test]
    fn quaternion_blocks_have_self_dual_form() {
        let s = sample(&spec(EnsembleKind::WignerQuaternion, 3, 0, EntryDist::Gaussian, 2)).unwrap();
        let MatrixData::Complex(h) = &s.data else { panic!() };
        for k in 0..3 {
            for l in 0..3 {
                let z = h[(2 * k, 2 * l)];
                let w = h[(2 * k, 2 * l + 1)];
                assert_eq!(h[(2 * k + 1, 2 * l)], -w.conj());
                assert_eq!(h[(2 * k + 1, 2 * l + 1)], z.conj());
            }
        }
        // Kramers degeneracy: the doubled spectrum comes in equal pairs.
        let eigs = sorted_eigenvalues(&s.self_adjoint(), 2).unwrap();
        for pair in eigs.chunks(2) {
            assert!((pair[0] - pair[1]).abs() < 1e-12);
        }
        assert_eq!(spectrum(&s).unwrap().len(), 3);
    }

    #[test]
    fn diagonal_matrix_spectrum() {
        let h = Mat::<f64>::from_fn(3, 3, |i, j| if i == j { [3.0, 1.0, 2.0][i] } else { 0.0 });
        let s = MatrixSample {
            spec: spec(EnsembleKind::WignerSymmetric, 3, 0, EntryDist::Gaussian, 0),
            data: MatrixData::Real(h),
            seed_used: 0,
        };
        let sp = spectrum(&s).unwrap();
        for (v, e) in sp.values().iter().zip([1.0, 2.0, 3.0]) {
            assert!((v - e).abs() < 1e-14);
        }
    }

    #[test]
    fn rank_one_factor_has_single_singular_value() {
        let c = -1.75;
        let a = Mat::<f64>::from_fn(6, 3, |i, j| if i == 0 && j == 1 { c } else { 0.0 });
        let s = MatrixSample {
            spec: spec(EnsembleKind::CovarianceReal, 3, 6, EntryDist::Gaussian, 0),
            data: MatrixData::Real(a),
            seed_used: 0,
        };
        let sp = spectrum(&s).unwrap();
        assert_eq!(sp.kind(), SpectrumKind::SingularValues);
        assert!(sp.values()[0].abs() < 1e-7 && sp.values()[1].abs() < 1e-7);
        assert!((sp.values()[2] - c.abs()).abs() < 1e-14);
    }

    #[test]
    fn minor_spectrum_lengths_and_errors() {
        let one = sample(&spec(EnsembleKind::CovarianceReal, 1, 3, EntryDist::Gaussian, 1)).unwrap();
        assert!(minor_spectrum(&one, 1).unwrap().is_empty());
        let s = sample(&spec(EnsembleKind::CovarianceComplex, 6, 10, EntryDist::Gaussian, 1)).unwrap();
        for j in 1..=6 {
            assert_eq!(minor_spectrum(&s, j).unwrap().len(), 5);
        }
        assert!(matches!(minor_spectrum(&s, 0), Err(RmtError::IndexOutOfRange { .. })));
        assert!(matches!(minor_spectrum(&s, 7), Err(RmtError::IndexOutOfRange { .. })));
        let w = sample(&spec(EnsembleKind::WignerSymmetric, 4, 0, EntryDist::Gaussian, 1)).unwrap();
        assert!(minor_spectrum(&w, 1).is_err());
    }

    #[test]
    fn ou_at_zero_is_identity_and_negative_time_fails() {
        let s = sample(&spec(EnsembleKind::WignerHermitian, 5, 0, EntryDist::Rademacher, 4)).unwrap();
        assert_eq!(ou_interpolate(&s, 0.0, 99).unwrap(), s);
        assert!(ou_interpolate(&s, -1.0, 99).is_err());
    }

    #[test]
    fn spectral_points_validation() {
        assert!(SpectralPoints::new(vec![1.0, 0.0], SpectrumKind::Eigenvalues).is_err());
        assert!(SpectralPoints::new(vec![-1.0, 0.0], SpectrumKind::SingularValues).is_err());
        let p = SpectralPoints::from_unsorted(vec![2.0, -1.0, 0.5], SpectrumKind::Eigenvalues).unwrap();
        assert_eq!(p.values(), &[-1.0, 0.5, 2.0]);
        assert_eq!(p.min_gap(), 1.5);
    }

    #[test]
    fn csv_layout() {
        let p = SpectralPoints::new(vec![0.5, 1.5], SpectrumKind::Eigenvalues).unwrap();
        let mut buf = Vec::new();
        write_spectra_csv(&mut buf, &[(7, &p)]).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "seed,k,value\n7,1,0.5\n7,2,1.5\n");
    }
}
