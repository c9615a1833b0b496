//! Koenigs linearization at an attracting circle cycle, and the explicit
//! radial-stretch deformation arithmetic that changes a cycle's multiplier.
//!
//! The chart solves `phi(g^p(z)) = lambda phi(z)` with `phi(x0) = 0` near a
//! cycle point `x0` on the unit circle, normalized to `|phi'(x0)| = 1` with
//! the direction that makes `phi` symmetric: `conj(phi(1/conj(z))) = phi(z)`.
//!
//! Evaluation composes the dynamics with a local Taylor model: the orbit is
//! iterated in blocks of `p` until it lands within a small switch radius of
//! `x0`, where a quartic jet of the linearizer (coefficients solved from the
//! conjugacy recursion) finishes the job. Renormalizing the raw limit
//! `lambda^{-n}(g^{pn}(z) - x0)` instead would amplify rounding noise by
//! `lambda^{-n}` and cap the usable accuracy near 1e-7.
//!
//! The model deformation is the radial stretch `chi(z) = |z|^alpha z` with
//! constant dilatation modulus `|alpha/2| / |1 + alpha/2|`; composing it with
//! the chart and pulling back along `g` spreads the new structure over the
//! basin while preserving that modulus.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::circle::SolverConfig;
use crate::complex::{g_derivative, g_eval, ComplexParams};
use crate::cycle::Cycle;
use crate::error::{Error, Result};

const TAU: f64 = std::f64::consts::TAU;

/// Target residual for the functional equation when sizing the chart domain.
const CHART_RESIDUAL: f64 = 1e-6;

/// A local linearizing chart at an attracting (non-superattracting) cycle
/// point on the unit circle.
#[derive(Clone, Debug)]
pub struct KoenigsChart {
    /// The cycle point `x0` the chart is centered at, `|x0| = 1`.
    pub base: Complex64,
    /// Real multiplier of the cycle, in `(0, 1)`.
    pub lambda: f64,
    /// Cap on the number of `g^p` blocks applied before the local model.
    pub depth: usize,
    /// Normalization constant: `phi = scale * K` with `K'(x0) = 1`.
    ///
    /// `scale = i conj(x0)`, the unique unimodular direction (up to sign) for
    /// which `phi` satisfies the symmetry identity; it maps the circle into
    /// the real axis and agrees with `i x0` at real base points.
    pub scale: Complex64,
    /// Radius of the linearization disk around `base`.
    pub radius: f64,
    /// Taylor coefficients of `K` at `x0`: `K = d + c2 d^2 + c3 d^3 + c4 d^4`.
    model: [Complex64; 3],
    /// Orbit distance to `x0` below which the local model takes over.
    switch: f64,
}

/// Value and first four derivatives of `g` at `z`, from the logarithmic
/// derivative `L = 2/z + b + b/z^2`.
fn g_jet(params: &ComplexParams, z: Complex64) -> Result<[Complex64; 5]> {
    let g = g_eval(params, z)?;
    let b = params.b;
    let zi = z.inv();
    let zi2 = zi * zi;
    let l = 2.0 * zi + b + b * zi2;
    let l1 = -2.0 * zi2 - 2.0 * b * zi2 * zi;
    let l2 = 4.0 * zi2 * zi + 6.0 * b * zi2 * zi2;
    let l3 = -12.0 * zi2 * zi2 - 24.0 * b * zi2 * zi2 * zi;
    Ok([
        g,
        g * l,
        g * (l * l + l1),
        g * (l * l * l + 3.0 * l * l1 + l2),
        g * (l * l * l * l + 6.0 * l * l * l1 + 4.0 * l * l2 + 3.0 * l1 * l1 + l3),
    ])
}

/// Propagate a 4-jet through one application of `g`.
fn jet_step(params: &ComplexParams, w: &[Complex64; 5]) -> Result<[Complex64; 5]> {
    let g = g_jet(params, w[0])?;
    let (w1, w2, w3, w4) = (w[1], w[2], w[3], w[4]);
    Ok([
        g[0],
        g[1] * w1,
        g[2] * w1 * w1 + g[1] * w2,
        g[3] * w1 * w1 * w1 + 3.0 * g[2] * w1 * w2 + g[1] * w3,
        g[4] * w1 * w1 * w1 * w1
            + 6.0 * g[3] * w1 * w1 * w2
            + g[2] * (4.0 * w1 * w3 + 3.0 * w2 * w2)
            + g[1] * w4,
    ])
}

impl KoenigsChart {
    /// Build the chart at the cycle's distinguished point (index 0 when the
    /// distinguished index has not been set).
    ///
    /// Fails with [`Error::UnsupportedMultiplier`] for superattracting or
    /// non-contracting multipliers; the superattracting endpoint is handled
    /// combinatorially by the atlas instead.
    pub fn build(params: &ComplexParams, cycle: &Cycle, cfg: &SolverConfig) -> Result<Self> {
        let lambda = cycle.multiplier;
        if !(lambda > cfg.root_tol && lambda < 1.0 - cfg.root_tol) {
            return Err(Error::UnsupportedMultiplier(lambda));
        }
        let idx = cycle.distinguished_index.unwrap_or(0);
        let base = Complex64::from_polar(1.0, TAU * cycle.angle(idx).value());
        let scale = Complex64::new(0.0, 1.0) * base.conj();

        // Taylor coefficients of G = g^p at x0 by jet propagation
        let one = Complex64::new(1.0, 0.0);
        let zero = Complex64::new(0.0, 0.0);
        let mut jet = [base, one, zero, zero, zero];
        for _ in 0..cycle.period {
            jet = jet_step(params, &jet).map_err(|_| Error::NoConvergence("chart jet"))?;
        }
        let g1 = jet[1];
        if (g1 - Complex64::new(lambda, 0.0)).norm() > 1e-6 * (1.0 + lambda) {
            return Err(Error::NoConvergence("multiplier mismatch at chart base"));
        }
        let l = Complex64::new(lambda, 0.0);
        let g2 = jet[2] / 2.0;
        let g3 = jet[3] / 6.0;
        let g4 = jet[4] / 24.0;
        let c2 = g2 / (l - l * l);
        let c3 = (g3 + 2.0 * l * g2 * c2) / (l - l * l * l);
        let c4 = (g4 + c2 * (2.0 * l * g3 + g2 * g2) + 3.0 * l * l * g2 * c3)
            / (l - l * l * l * l);

        let mut chart = KoenigsChart {
            base,
            lambda,
            depth: cfg.koenigs_depth,
            scale,
            radius: 0.1,
            model: [c2, c3, c4],
            switch: 1e-4,
        };
        while chart.radius > 1e-7 {
            chart.switch = (0.2 * chart.radius).min(1e-4);
            if chart.radius_admissible(params, cycle) {
                return Ok(chart);
            }
            chart.radius *= 0.5;
        }
        Err(Error::NoConvergence("linearization disk"))
    }

    /// The disk is admissible when `g^p` maps it into itself and the
    /// functional equation holds at half radius.
    fn radius_admissible(&self, params: &ComplexParams, cycle: &Cycle) -> bool {
        let p = cycle.period;
        for i in 0..16 {
            let z = self.base + Complex64::from_polar(self.radius, TAU * i as f64 / 16.0);
            let mut w = z;
            for _ in 0..p {
                match g_eval(params, w) {
                    Ok(v) => w = v,
                    Err(_) => return false,
                }
            }
            if (w - self.base).norm() > self.radius {
                return false;
            }
        }
        for i in 0..8 {
            let z = self.base + Complex64::from_polar(0.5 * self.radius, TAU * i as f64 / 8.0);
            match koenigs_residual(params, cycle, self, z) {
                Ok(r) if r < CHART_RESIDUAL => {}
                _ => return false,
            }
        }
        true
    }

    /// `K(d) = d + c2 d^2 + c3 d^3 + c4 d^4` near the base.
    fn local(&self, d: Complex64) -> Complex64 {
        let [c2, c3, c4] = self.model;
        d * (Complex64::new(1.0, 0.0) + d * (c2 + d * (c3 + d * c4)))
    }

    /// `K'(d)` near the base.
    fn local_derivative(&self, d: Complex64) -> Complex64 {
        let [c2, c3, c4] = self.model;
        Complex64::new(1.0, 0.0) + d * (2.0 * c2 + d * (3.0 * c3 + d * 4.0 * c4))
    }

    /// Iterate `g^p` blocks until the orbit is inside the switch radius;
    /// returns the landing offset, the block count, and `(g^{pn})'(z)` when
    /// requested.
    fn descend(
        &self,
        params: &ComplexParams,
        cycle: &Cycle,
        z: Complex64,
        with_derivative: bool,
    ) -> Result<(Complex64, usize, Complex64)> {
        if (z - self.base).norm() > self.radius {
            return Err(Error::DomainEscape);
        }
        let p = cycle.period;
        let mut w = z;
        let mut n = 0usize;
        let mut deriv = Complex64::new(1.0, 0.0);
        while (w - self.base).norm() > self.switch && n < self.depth {
            for _ in 0..p {
                if with_derivative {
                    deriv *= g_derivative(params, w).map_err(|_| Error::DomainEscape)?;
                }
                w = g_eval(params, w).map_err(|_| Error::DomainEscape)?;
            }
            n += 1;
            if (w - self.base).norm() > self.radius {
                return Err(Error::DomainEscape);
            }
        }
        Ok((w - self.base, n, deriv))
    }
}

/// Evaluate the chart: `phi(z) = scale * lambda^{-n} K(g^{pn}(z) - x0)` with
/// `n` chosen so the landing point is within the local-model radius.
pub fn koenigs_eval(
    params: &ComplexParams,
    cycle: &Cycle,
    chart: &KoenigsChart,
    z: Complex64,
) -> Result<Complex64> {
    let (d, n, _) = chart.descend(params, cycle, z, false)?;
    Ok(chart.scale * chart.local(d) * chart.lambda.powi(-(n as i32)))
}

/// `phi'(z) = scale * lambda^{-n} K'(g^{pn}(z) - x0) * (g^{pn})'(z)`.
pub fn koenigs_derivative(
    params: &ComplexParams,
    cycle: &Cycle,
    chart: &KoenigsChart,
    z: Complex64,
) -> Result<Complex64> {
    let (d, n, deriv) = chart.descend(params, cycle, z, true)?;
    Ok(chart.scale * chart.local_derivative(d) * deriv * chart.lambda.powi(-(n as i32)))
}

/// `phi'` by central finite difference at step 1e-7, as an independent check
/// of the chain-rule evaluation.
pub fn koenigs_derivative_fd(
    params: &ComplexParams,
    cycle: &Cycle,
    chart: &KoenigsChart,
    z: Complex64,
) -> Result<Complex64> {
    let h = 1e-7;
    let fp = koenigs_eval(params, cycle, chart, z + Complex64::new(h, 0.0))?;
    let fm = koenigs_eval(params, cycle, chart, z - Complex64::new(h, 0.0))?;
    Ok((fp - fm) / (2.0 * h))
}

/// Functional-equation residual `|phi(g^p(z)) - lambda phi(z)|`.
pub fn koenigs_residual(
    params: &ComplexParams,
    cycle: &Cycle,
    chart: &KoenigsChart,
    z: Complex64,
) -> Result<f64> {
    let mut w = z;
    for _ in 0..cycle.period {
        w = g_eval(params, w).map_err(|_| Error::DomainEscape)?;
    }
    let lhs = koenigs_eval(params, cycle, chart, w)?;
    let rhs = koenigs_eval(params, cycle, chart, z)? * chart.lambda;
    Ok((lhs - rhs).norm())
}

/// The stretch exponent realizing a multiplier change `lambda -> rho`:
/// `alpha = log(rho)/log(lambda) - 1`, always `> -1`.
pub fn alpha_for_multiplier(lambda: f64, rho: f64) -> Result<f64> {
    if !(lambda > 0.0 && lambda < 1.0) {
        return Err(Error::OutOfRange { name: "lambda", value: lambda });
    }
    if !(rho > 0.0 && rho < 1.0) {
        return Err(Error::OutOfRange { name: "rho", value: rho });
    }
    Ok(rho.ln() / lambda.ln() - 1.0)
}

/// The radial stretch `chi(z) = |z|^alpha z`. Radial and multiplicative; for
/// `alpha = log(r)/log(R) - 1` it maps the disk of radius `R` onto the disk
/// of radius `r`.
pub fn radial_stretch(alpha: f64, z: Complex64) -> Complex64 {
    z.norm().powf(alpha) * z
}

/// Beltrami coefficient of the radial stretch:
/// `mu_chi(z) = (alpha/2)/(1 + alpha/2) * z/conj(z)`.
///
/// Its modulus `|alpha/2|/|1 + alpha/2|` is constant in `z` and below 1 for
/// `alpha > -1`.
pub fn beltrami_of_stretch(alpha: f64, z: Complex64) -> Complex64 {
    let c = (0.5 * alpha) / (1.0 + 0.5 * alpha);
    c * (z / z.conj())
}

/// One multiplier-change step `lambda -> rho` of the deformation.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct DeformationStep {
    pub lambda: f64,
    pub rho: f64,
    /// Stretch exponent, `rho = lambda^(1 + alpha)`.
    pub alpha: f64,
    /// Constant dilatation modulus `|alpha/2|/|1 + alpha/2| < 1`.
    pub mu_modulus: f64,
}

impl DeformationStep {
    pub fn new(lambda: f64, rho: f64) -> Result<Self> {
        let alpha = alpha_for_multiplier(lambda, rho)?;
        Ok(DeformationStep {
            lambda,
            rho,
            alpha,
            mu_modulus: (0.5 * alpha).abs() / (1.0 + 0.5 * alpha).abs(),
        })
    }
}

/// Dilatation of the composition `stretch ∘ chart` on the chart domain:
/// `mu(z) = (alpha/2)/(1+alpha/2) * phi/conj(phi) * conj(phi')/phi'`.
pub fn composed_dilatation(
    params: &ComplexParams,
    cycle: &Cycle,
    chart: &KoenigsChart,
    alpha: f64,
    z: Complex64,
) -> Result<Complex64> {
    let phi = koenigs_eval(params, cycle, chart, z)?;
    if phi.norm() < 1e-12 {
        return Err(Error::AtBasePoint);
    }
    let dphi = koenigs_derivative(params, cycle, chart, z)?;
    let c = (0.5 * alpha) / (1.0 + 0.5 * alpha);
    Ok(c * (phi / phi.conj()) * (dphi.conj() / dphi))
}

/// Pull a dilatation coefficient at `g^n(z)` back to `z`:
/// `mu(z) = conj((g^n)'(z)) / (g^n)'(z) * mu(g^n(z))`.
///
/// The prefactor is unimodular, so the modulus is preserved exactly.
pub fn pullback_dilatation(
    params: &ComplexParams,
    mu_at_target: Complex64,
    z: Complex64,
    n: usize,
) -> Result<Complex64> {
    let mut deriv = Complex64::new(1.0, 0.0);
    let mut w = z;
    for _ in 0..n {
        let d = g_derivative(params, w)?;
        if d.norm() == 0.0 {
            return Err(Error::CriticalOnOrbit);
        }
        deriv *= d;
        w = g_eval(params, w)?;
    }
    Ok((deriv.conj() / deriv) * mu_at_target)
}

/// Value at `1/conj(z)` of the reflection of a symmetric Beltrami form.
///
/// A form `mu dconj(z)/dz` is symmetric in the unit circle exactly when
/// `mu(1/conj(z)) = reflect_coefficient(mu(z), z)`; the `(z/conj(z))^2`
/// factor is the chart twist of the antiholomorphic reflection.
pub fn reflect_coefficient(mu: Complex64, z: Complex64) -> Complex64 {
    let u = z * z;
    mu.conj() * (u / u.conj())
}
