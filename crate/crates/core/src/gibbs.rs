//! Gibbs Hamiltonians of the Wigner and covariance eigenvalue ensembles and of
//! the pseudo-equilibrium measure.
//!
//! With `U(x) = x^2/4` (Wigner) the Hamiltonian is
//! `H(x) = beta [ sum U(x_i) - (1/N) sum_{i<j} log|x_j - x_i| ]`.
//! For singular values, `U(x) = x^2/(2d)`, the pair term also contains
//! `log(x_i + x_j)` and there is a one-body term `-c sum log x_i` with
//! `c = 1/d - 1 + (1 - 1/beta)/N`. Energies and gradients are reported for
//! `N H`; Hessian quadratic forms for `H` itself.

use serde::{Deserialize, Serialize};

use crate::error::{Result, RmtError};

/// Minimum separation between points before a configuration counts as
/// singular.
pub const MIN_SEPARATION: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum HamiltonianKind {
    Wigner,
    Covariance { d: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HamiltonianSpec {
    pub kind: HamiltonianKind,
    pub beta: f64,
    pub n: usize,
}

impl HamiltonianSpec {
    pub fn wigner(beta: f64, n: usize) -> Result<Self> {
        Self { kind: HamiltonianKind::Wigner, beta, n }.validated()
    }

    pub fn covariance(beta: f64, n: usize, d: f64) -> Result<Self> {
        Self { kind: HamiltonianKind::Covariance { d }, beta, n }.validated()
    }

    pub fn validated(self) -> Result<Self> {
        if !(self.beta >= 1.0) || !self.beta.is_finite() {
            return Err(RmtError::Config(format!("beta = {} must be at least 1", self.beta)));
        }
        if self.n == 0 {
            return Err(RmtError::Config("n must be positive".into()));
        }
        if let HamiltonianKind::Covariance { d } = self.kind {
            if !(d > 0.0 && d < 1.0) {
                return Err(RmtError::Config(format!("ratio d = {d} must satisfy 0 < d < 1")));
            }
        }
        Ok(self)
    }

    /// Second derivative of the one-body potential `U`.
    pub fn u_second(&self) -> f64 {
        match self.kind {
            HamiltonianKind::Wigner => 0.5,
            HamiltonianKind::Covariance { d } => 1.0 / d,
        }
    }

    fn u(&self, x: f64) -> f64 {
        0.5 * self.u_second() * x * x
    }

    /// Coefficient `c` of `-sum log x_i` inside the bracket (zero for Wigner).
    pub fn log_coefficient(&self) -> f64 {
        match self.kind {
            HamiltonianKind::Wigner => 0.0,
            HamiltonianKind::Covariance { d } => 1.0 / d - 1.0 + (1.0 - 1.0 / self.beta) / self.n as f64,
        }
    }

    fn is_covariance(&self) -> bool {
        matches!(self.kind, HamiltonianKind::Covariance { .. })
    }

    /// Check that `x` is an admissible configuration for this Hamiltonian.
    pub fn check_configuration(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.n {
            return Err(RmtError::LengthMismatch { expected: self.n, found: x.len() });
        }
        check_points(x, self.is_covariance())
    }
}

/// Points must be finite and pairwise separated by at least
/// [`MIN_SEPARATION`]; with `positive` they must also exceed it.
pub fn check_points(x: &[f64], positive: bool) -> Result<()> {
    if x.iter().any(|v| !v.is_finite()) {
        return Err(RmtError::SingularConfiguration("non-finite coordinate".into()));
    }
    let mut sorted = x.to_vec();
    sorted.sort_by(f64::total_cmp);
    if let Some(w) = sorted.windows(2).find(|w| w[1] - w[0] < MIN_SEPARATION) {
        return Err(RmtError::SingularConfiguration(format!("points {} and {} coincide", w[0], w[1])));
    }
    if positive && sorted.first().is_some_and(|&v| v < MIN_SEPARATION) {
        return Err(RmtError::SingularConfiguration(format!("singular values must be positive, found {}", sorted[0])));
    }
    Ok(())
}

/// `N H(x)`.
pub fn energy(spec: &HamiltonianSpec, x: &[f64]) -> Result<f64> {
    spec.check_configuration(x)?;
    let n = x.len() as f64;
    let mut one_body = 0.0;
    let mut pairs = 0.0;
    let c = spec.log_coefficient();
    for (i, &xi) in x.iter().enumerate() {
        one_body += spec.u(xi);
        if spec.is_covariance() {
            one_body -= c * xi.ln();
        }
        for &xj in &x[i + 1..] {
            pairs += (xj - xi).abs().ln();
            if spec.is_covariance() {
                pairs += (xi + xj).ln();
            }
        }
    }
    Ok(spec.beta * (n * one_body - pairs))
}

/// Gradient of `N H(x)`.
pub fn grad(spec: &HamiltonianSpec, x: &[f64]) -> Result<Vec<f64>> {
    spec.check_configuration(x)?;
    let n = x.len() as f64;
    let c = spec.log_coefficient();
    let u2 = spec.u_second();
    let cov = spec.is_covariance();
    Ok(x.iter()
        .enumerate()
        .map(|(i, &xi)| {
            let mut pair = 0.0;
            for (j, &xj) in x.iter().enumerate() {
                if j != i {
                    pair += 1.0 / (xi - xj);
                    if cov {
                        pair += 1.0 / (xi + xj);
                    }
                }
            }
            let mut g = n * u2 * xi - pair;
            if cov {
                g -= n * c / xi;
            }
            spec.beta * g
        })
        .collect())
}

/// Pieces of `<v, Hess H(x) v>`, each already multiplied by `beta`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HessianParts {
    /// `beta sum U''(x_i) v_i^2`.
    pub potential: f64,
    /// `(beta/N) sum_{i<j} (v_i - v_j)^2/(x_i - x_j)^2`.
    pub interaction: f64,
    /// Covariance extras: `(beta/N) sum (v_i + v_j)^2/(x_i + x_j)^2 + beta c sum v_i^2/x_i^2`.
    pub covariance: f64,
}

impl HessianParts {
    pub fn total(&self) -> f64 {
        self.potential + self.interaction + self.covariance
    }
}

pub fn hessian_parts(spec: &HamiltonianSpec, x: &[f64], v: &[f64]) -> Result<HessianParts> {
    spec.check_configuration(x)?;
    if v.len() != x.len() {
        return Err(RmtError::LengthMismatch { expected: x.len(), found: v.len() });
    }
    let n = x.len() as f64;
    let beta = spec.beta;
    let potential = beta * spec.u_second() * v.iter().map(|vi| vi * vi).sum::<f64>();
    let mut interaction = 0.0;
    let mut covariance = 0.0;
    for i in 0..x.len() {
        for j in (i + 1)..x.len() {
            interaction += ((v[i] - v[j]) / (x[i] - x[j])).powi(2);
            if spec.is_covariance() {
                covariance += ((v[i] + v[j]) / (x[i] + x[j])).powi(2);
            }
        }
    }
    interaction *= beta / n;
    covariance *= beta / n;
    if spec.is_covariance() {
        let c = spec.log_coefficient();
        covariance += beta * c * x.iter().zip(v).map(|(xi, vi)| (vi / xi).powi(2)).sum::<f64>();
    }
    Ok(HessianParts { potential, interaction, covariance })
}

/// `<v, Hess H(x) v>`.
pub fn hessian_quadratic_form(spec: &HamiltonianSpec, x: &[f64], v: &[f64]) -> Result<f64> {
    Ok(hessian_parts(spec, x, v)?.total())
}

/// `(beta/N) sum_{i<j} (v_i - v_j)^2/(x_i - x_j)^2`, the lower bound asserted
/// by convexity of `U`.
pub fn convexity_rhs(spec: &HamiltonianSpec, x: &[f64], v: &[f64]) -> Result<f64> {
    Ok(hessian_parts(spec, x, v)?.interaction)
}

/// Quadratic confinement `W(x) = sum (x_j - gamma_j)^2/(2R^2)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PseudoPotential {
    gamma: Vec<f64>,
    r: f64,
}

impl PseudoPotential {
    pub fn new(gamma: Vec<f64>, r: f64) -> Result<Self> {
        if !(r > 0.0) || !r.is_finite() {
            return Err(RmtError::Config(format!("relaxation scale R = {r} must be positive")));
        }
        if gamma.is_empty() {
            return Err(RmtError::EmptyInput("classical locations"));
        }
        if gamma.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(RmtError::Config("classical locations must be strictly increasing".into()));
        }
        Ok(PseudoPotential { gamma, r })
    }

    pub fn gamma(&self) -> &[f64] {
        &self.gamma
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    fn check_len(&self, len: usize) -> Result<()> {
        if len != self.gamma.len() {
            return Err(RmtError::LengthMismatch { expected: self.gamma.len(), found: len });
        }
        Ok(())
    }

    /// `W'_j(x_j) = (x_j - gamma_j)/R^2`.
    pub fn gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_len(x.len())?;
        let r2 = self.r * self.r;
        Ok(x.iter().zip(&self.gamma).map(|(xi, g)| (xi - g) / r2).collect())
    }
}

/// `N W(x)`.
pub fn pseudo_energy(pp: &PseudoPotential, x: &[f64]) -> Result<f64> {
    pp.check_len(x.len())?;
    let sq: f64 = x.iter().zip(&pp.gamma).map(|(xi, g)| (xi - g).powi(2)).sum();
    Ok(x.len() as f64 * sq / (2.0 * pp.r * pp.r))
}

/// Right-hand side `|v|^2/R^2 + (1/N) sum_{i<j} (v_i - v_j)^2/(x_i - x_j)^2`
/// of the relaxation bound.
pub fn relaxation_rhs(pp: &PseudoPotential, x: &[f64], v: &[f64]) -> Result<f64> {
    pp.check_len(x.len())?;
    if v.len() != x.len() {
        return Err(RmtError::LengthMismatch { expected: x.len(), found: v.len() });
    }
    let n = x.len() as f64;
    let mut pair = 0.0;
    for i in 0..x.len() {
        for j in (i + 1)..x.len() {
            pair += ((v[i] - v[j]) / (x[i] - x[j])).powi(2);
        }
    }
    let norm: f64 = v.iter().map(|vi| vi * vi).sum();
    Ok(norm / (pp.r * pp.r) + pair / n)
}

/// `<v, Hess(H + W)(x) v>`.
pub fn relaxation_form(spec: &HamiltonianSpec, pp: &PseudoPotential, x: &[f64], v: &[f64]) -> Result<f64> {
    pp.check_len(x.len())?;
    let w: f64 = v.iter().map(|vi| vi * vi).sum::<f64>() / (pp.r * pp.r);
    Ok(hessian_quadratic_form(spec, x, v)? + w)
}

/// Whether a supplied value of the quadratic form satisfies the relaxation
/// bound at `(x, v)`.
pub fn relaxation_bound_holds(form: f64, pp: &PseudoPotential, x: &[f64], v: &[f64]) -> Result<bool> {
    Ok(form >= relaxation_rhs(pp, x, v)?)
}

/// Whether `<v, Hess(H + W) v> >= |v|^2/R^2 + (1/N) sum (v_i - v_j)^2/(x_i - x_j)^2`.
pub fn relaxation_hessian_bound_check(
    spec: &HamiltonianSpec,
    pp: &PseudoPotential,
    x: &[f64],
    v: &[f64],
) -> Result<bool> {
    relaxation_bound_holds(relaxation_form(spec, pp, x, v)?, pp, x, v)
}
