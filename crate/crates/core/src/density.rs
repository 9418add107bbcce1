//! Limiting spectral laws.
//!
//! Three laws are supported: the semicircle `(1/2pi) sqrt(4 - x^2)` on
//! `[-2, 2]`, the Marchenko-Pastur law with ratio `d` on `[l-, l+]`,
//! `l± = (1 ± sqrt d)^2`, and its push-forward to singular values,
//! `2x rho_W(x^2)` on `[sqrt l-, sqrt l+]`.

use std::f64::consts::PI;
use std::io::Write;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::ensembles::SpectralPoints;
use crate::error::{Result, RmtError};

/// Absolute error target of the CDF quadrature.
pub const CDF_TOLERANCE: f64 = 1e-10;
/// Position tolerance of the classical-location bisection.
pub const QUANTILE_TOLERANCE: f64 = 1e-12;
const BISECTION_CAP: usize = 200;
/// Largest `|delta|` accepted by [`DensityModel::perturbed_roots`].
pub const MAX_DELTA: f64 = 0.1;
/// Reference point where the physical root is selected by its sign.
pub const REFERENCE_POINT: Complex64 = Complex64::new(10.0, 5.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Law {
    Semicircle,
    MarchenkoPastur,
    MpSingular,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DensityModel {
    law: Law,
    d: f64,
}

/// A Stieltjes transform value together with its argument.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StieltjesPoint {
    pub z: Complex64,
    pub value: Complex64,
}

impl DensityModel {
    pub fn semicircle() -> Self {
        DensityModel { law: Law::Semicircle, d: 0.0 }
    }

    pub fn marchenko_pastur(d: f64) -> Result<Self> {
        Self::new(Law::MarchenkoPastur, d)
    }

    pub fn mp_singular(d: f64) -> Result<Self> {
        Self::new(Law::MpSingular, d)
    }

    pub fn new(law: Law, d: f64) -> Result<Self> {
        if law == Law::Semicircle {
            return Ok(Self::semicircle());
        }
        if !(d > 0.0 && d < 1.0) {
            return Err(RmtError::Config(format!("ratio d = {d} must satisfy 0 < d < 1")));
        }
        Ok(DensityModel { law, d })
    }

    pub fn law(&self) -> Law {
        self.law
    }

    pub fn d(&self) -> f64 {
        self.d
    }

    /// Marchenko-Pastur edges `(l-, l+)` for the model's ratio.
    pub fn mp_edges(&self) -> (f64, f64) {
        let s = self.d.sqrt();
        ((1.0 - s).powi(2), (1.0 + s).powi(2))
    }

    pub fn support(&self) -> (f64, f64) {
        match self.law {
            Law::Semicircle => (-2.0, 2.0),
            Law::MarchenkoPastur => self.mp_edges(),
            Law::MpSingular => {
                let (a, b) = self.mp_edges();
                (a.sqrt(), b.sqrt())
            }
        }
    }

    /// Density at `e`; exactly zero off the support.
    pub fn rho(&self, e: f64) -> f64 {
        let (a, b) = self.support();
        if !(e > a && e < b) {
            return 0.0;
        }
        match self.law {
            Law::Semicircle => (4.0 - e * e).sqrt() / (2.0 * PI),
            Law::MarchenkoPastur => mp_rho(self.d, e),
            Law::MpSingular => 2.0 * e * mp_rho(self.d, e * e),
        }
    }

    /// Maximum of the density over the support (by golden-section search).
    pub fn max_rho(&self) -> f64 {
        match self.law {
            Law::Semicircle => 1.0 / PI,
            _ => {
                let (mut a, mut b) = self.support();
                let g = 0.5 * (5f64.sqrt() - 1.0);
                for _ in 0..200 {
                    let c = b - g * (b - a);
                    let e = a + g * (b - a);
                    if self.rho(c) > self.rho(e) {
                        b = e;
                    } else {
                        a = c;
                    }
                }
                self.rho(0.5 * (a + b))
            }
        }
    }

    /// Integral of the density over `(-inf, e]`.
    pub fn cdf(&self, e: f64) -> f64 {
        let (a, b) = self.support();
        if e <= a {
            return 0.0;
        }
        if e >= b {
            return 1.0;
        }
        // x = a + (b - a)(1 - cos t)/2 absorbs the square-root edges.
        let theta = (1.0 - 2.0 * (e - a) / (b - a)).clamp(-1.0, 1.0).acos();
        let half = 0.5 * (b - a);
        let integrand = |t: f64| {
            let x = a + half * (1.0 - t.cos());
            self.rho(x) * half * t.sin()
        };
        integrate(&integrand, 0.0, theta, CDF_TOLERANCE).clamp(0.0, 1.0)
    }

    /// Smallest `x` in the support with `cdf(x) >= s`, by bisection.
    pub fn quantile(&self, s: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&s) {
            return Err(RmtError::Domain(format!("quantile level {s} outside [0, 1]")));
        }
        let (mut lo, mut hi) = self.support();
        if s <= 0.0 {
            return Ok(lo);
        }
        if s >= 1.0 {
            return Ok(hi);
        }
        for _ in 0..BISECTION_CAP {
            if hi - lo <= QUANTILE_TOLERANCE {
                break;
            }
            let mid = 0.5 * (lo + hi);
            if self.cdf(mid) < s {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }

    /// Classical locations `gamma_j`, `N cdf(gamma_j) = j`, for `j = 1..=n`.
    pub fn classical_locations(&self, n: usize) -> Result<Vec<f64>> {
        if n == 0 {
            return Err(RmtError::Config("number of classical locations must be positive".into()));
        }
        let mut out = Vec::with_capacity(n);
        for j in 1..n {
            out.push(self.quantile(j as f64 / n as f64)?);
        }
        out.push(self.support().1);
        Ok(out)
    }

    /// Closed-form Stieltjes transform `m(z) = int rho(x)/(x - z) dx`.
    ///
    /// Marchenko-Pastur values use
    /// `(1 - d - z + i sqrt((z - l-)(l+ - z))) / (2dz)` with the principal
    /// square root; the semicircle uses `(-z + i sqrt(4 - z^2))/2`.
    pub fn stieltjes_mw(&self, z: Complex64) -> Result<StieltjesPoint> {
        if !(z.im > 0.0) || !z.re.is_finite() || !z.im.is_finite() {
            return Err(RmtError::Domain(format!("Stieltjes transform needs Im z > 0, got {z}")));
        }
        let i = Complex64::i();
        let value = match self.law {
            Law::Semicircle => (-z + i * (4.0 - z * z).sqrt()) / 2.0,
            Law::MarchenkoPastur => {
                let d = self.d;
                let (lm, lp) = self.mp_edges();
                let mut m = (1.0 - d - z + i * ((z - lm) * (lp - z)).sqrt()) / (2.0 * d * z);
                // One Newton step on the quadratic polishes cancellation at large |z|.
                let f = d * z * m * m + (z - (1.0 - d)) * m + 1.0;
                let df = 2.0 * d * z * m + (z - (1.0 - d));
                if df.norm() > 0.0 {
                    let next = m - f / df;
                    if next.is_finite() {
                        m = next;
                    }
                }
                m
            }
            Law::MpSingular => {
                return Err(RmtError::Domain("Stieltjes transform is provided for the eigenvalue laws".into()))
            }
        };
        Ok(StieltjesPoint { z, value })
    }

    /// Residual `|m + 1/(z - (1 - d) + z d m)|` of the self-consistent equation.
    pub fn self_consistent_residual(&self, z: Complex64, m: Complex64) -> f64 {
        let d = self.d;
        (m + 1.0 / (z - (1.0 - d) + z * d * m)).norm()
    }

    fn require_mp(&self) -> Result<()> {
        if self.law == Law::MarchenkoPastur {
            Ok(())
        } else {
            Err(RmtError::Domain("operation defined for the Marchenko-Pastur law".into()))
        }
    }

    /// Edges `l±^Delta = ((sqrt(1 + Delta(d - d^2)) ± sqrt d)/(1 + Delta d))^2` of
    /// the perturbed equation.
    pub fn perturbed_edges(&self, delta: Complex64) -> Result<(Complex64, Complex64)> {
        self.require_mp()?;
        let d = self.d;
        let root = (1.0 + delta * (d - d * d)).sqrt();
        let den = 1.0 + delta * d;
        let sd = d.sqrt();
        let lm = (root - sd) / den;
        let lp = (root + sd) / den;
        Ok((lm * lm, lp * lp))
    }

    /// The two solutions `(S+, S-)` of `S + 1/(z - (1 - d) + z d S) = Delta`.
    ///
    /// `S+` is the root with positive imaginary part at [`REFERENCE_POINT`],
    /// continued along the straight segment to `z`.
    pub fn perturbed_roots(&self, z: Complex64, delta: Complex64) -> Result<(Complex64, Complex64)> {
        self.require_mp()?;
        if !(z.im > 0.0) {
            return Err(RmtError::Domain(format!("perturbed roots need Im z > 0, got {z}")));
        }
        if !(delta.norm() <= MAX_DELTA) {
            return Err(RmtError::Domain(format!("|delta| = {} exceeds {MAX_DELTA}", delta.norm())));
        }
        let roots = |w: Complex64| self.quadratic_roots(w, delta);
        let (r1, r2) = roots(REFERENCE_POINT);
        let mut plus = if r1.im >= r2.im { r1 } else { r2 };
        const STEPS: usize = 512;
        for k in 1..=STEPS {
            let w = REFERENCE_POINT + (z - REFERENCE_POINT) * (k as f64 / STEPS as f64);
            let (a, b) = roots(w);
            plus = if (a - plus).norm() <= (b - plus).norm() { a } else { b };
        }
        let (a, b) = roots(z);
        let (sp, sm) = if (a - plus).norm() <= (b - plus).norm() { (a, b) } else { (b, a) };
        Ok((self.polish(z, delta, sp), self.polish(z, delta, sm)))
    }

    /// Roots of `dz S^2 + (z - (1 - d) - dz Delta) S + 1 - Delta (z - (1 - d)) = 0`.
    fn quadratic_roots(&self, z: Complex64, delta: Complex64) -> (Complex64, Complex64) {
        let d = self.d;
        let w = z - (1.0 - d);
        let a = d * z;
        let b = w - d * z * delta;
        let c = 1.0 - delta * w;
        let disc = (b * b - 4.0 * a * c).sqrt();
        // Avoid cancellation: q = -(b + sign * disc)/2 with the larger modulus.
        let q = if (b + disc).norm() >= (b - disc).norm() { -(b + disc) / 2.0 } else { -(b - disc) / 2.0 };
        let r1 = q / a;
        let r2 = if q.norm() > 0.0 { c / q } else { -b / a - r1 };
        (r1, r2)
    }

    fn polish(&self, z: Complex64, delta: Complex64, s: Complex64) -> Complex64 {
        let d = self.d;
        let w = z - (1.0 - d);
        let f = d * z * s * s + (w - d * z * delta) * s + 1.0 - delta * w;
        let df = 2.0 * d * z * s + (w - d * z * delta);
        if df.norm() == 0.0 {
            return s;
        }
        let next = s - f / df;
        if next.is_finite() {
            next
        } else {
            s
        }
    }

    /// Residual `|S + 1/(z - (1 - d) + z d S) - Delta|`.
    pub fn perturbed_residual(&self, z: Complex64, delta: Complex64, s: Complex64) -> f64 {
        let d = self.d;
        (s + 1.0 / (z - (1.0 - d) + z * d * s) - delta).norm()
    }

    /// Closed-form perturbed roots in the `+`/`-` sign convention of the
    /// square-root expression (no continuity selection).
    pub fn perturbed_roots_closed_form(&self, z: Complex64, delta: Complex64) -> Result<(Complex64, Complex64)> {
        let (lm, lp) = self.perturbed_edges(delta)?;
        let d = self.d;
        let i = Complex64::i();
        let core = i * (1.0 + d * delta) * ((lp - z) * (z - lm)).sqrt();
        let base = 1.0 - d - z;
        Ok(((base + core) / (2.0 * d * z) + delta / 2.0, (base - core) / (2.0 * d * z) + delta / 2.0))
    }

    /// `kappa(E) = |(E - l-)(E - l+)|`.
    pub fn kappa(&self, e: f64) -> f64 {
        let (a, b) = self.support();
        ((e - a) * (e - b)).abs()
    }

    /// Constant `C` of the Hoelder-2/3 bound on the inverse counting function:
    /// twice the largest `a^{-2/3}`, where `cdf(edge + E) ~ a E^{3/2}` at
    /// either edge.
    pub fn inverse_modulus_constant(&self) -> f64 {
        let (a, b) = self.support();
        let eps = 1e-10 * (b - a);
        let lower = self.rho(a + eps) / eps.sqrt();
        let upper = self.rho(b - eps) / eps.sqrt();
        let coef = |slope: f64| (2.0 / 3.0 * slope).powf(-2.0 / 3.0);
        2.0 * coef(lower).max(coef(upper))
    }

    /// Whether `|t - cdf^{-1}(s)| <= C |cdf(t) - s|^{2/3}`.
    pub fn inverse_modulus_bound_check(&self, t: f64, s: f64) -> Result<bool> {
        if !(0.0..=1.0).contains(&s) {
            return Err(RmtError::Domain(format!("level {s} outside [0, 1]")));
        }
        let (a, b) = self.support();
        if !(t > a && t < b) {
            return Err(RmtError::Domain(format!("{t} is not in the open support")));
        }
        let lhs = (t - self.quantile(s)?).abs();
        let rhs = self.inverse_modulus_constant() * (self.cdf(t) - s).abs().powf(2.0 / 3.0);
        Ok(lhs <= rhs + QUANTILE_TOLERANCE)
    }

    /// Write `x,rho,cdf` rows for each grid point.
    pub fn write_csv<W: Write>(&self, mut out: W, grid: &[f64]) -> Result<()> {
        writeln!(out, "x,rho,cdf")?;
        for &x in grid {
            writeln!(out, "{},{},{}", x, self.rho(x), self.cdf(x))?;
        }
        Ok(())
    }
}

fn mp_rho(d: f64, x: f64) -> f64 {
    let s = d.sqrt();
    let (lm, lp) = ((1.0 - s).powi(2), (1.0 + s).powi(2));
    if !(x > lm && x < lp) {
        return 0.0;
    }
    ((lp - x) * (x - lm)).sqrt() / (2.0 * PI * d * x)
}

/// Empirical Stieltjes transform `(1/N) sum 1/(lambda_j - z)` over the
/// eigenvalue view of `points` (squared values for singular values).
pub fn empirical_stieltjes(points: &SpectralPoints, z: Complex64) -> Result<StieltjesPoint> {
    if !(z.im > 0.0) {
        return Err(RmtError::Domain(format!("Stieltjes transform needs Im z > 0, got {z}")));
    }
    if points.is_empty() {
        return Err(RmtError::EmptyInput("spectral points"));
    }
    let eig = points.eigenvalues();
    let sum: Complex64 = eig.iter().map(|&l| 1.0 / (l - z)).sum();
    Ok(StieltjesPoint { z, value: sum / eig.len() as f64 })
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];
const WG: [f64; 4] =
    [0.129_484_966_168_869_7, 0.279_705_391_489_276_7, 0.381_830_050_505_118_9, 0.417_959_183_673_469_4];

fn gauss_kronrod<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for k in 0..7 {
        let x = h * XGK[k];
        let s = f(c - x) + f(c + x);
        kronrod += WGK[k] * s;
        if k % 2 == 1 {
            gauss += WG[k / 2] * s;
        }
    }
    (kronrod * h, ((kronrod - gauss) * h).abs())
}

/// Adaptive Gauss-Kronrod (7/15) quadrature to absolute tolerance `tol`.
pub fn integrate<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    fn recurse<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64, depth: usize) -> f64 {
        let (value, err) = gauss_kronrod(f, a, b);
        if err <= tol || depth == 0 {
            return value;
        }
        let m = 0.5 * (a + b);
        recurse(f, a, m, 0.5 * tol, depth - 1) + recurse(f, m, b, 0.5 * tol, depth - 1)
    }
    if a == b {
        return 0.0;
    }
    recurse(f, a, b, tol, 40)
}
