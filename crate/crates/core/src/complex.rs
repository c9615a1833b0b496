//! The complexified family `g_{a,b}(z) = e^{2 pi i a} z^2 e^{b(z - 1/z)}`
//! on `C^*`, its critical points, symmetry, and critical-orbit classification.
//!
//! `g` restricts to the circle map on `|z| = 1` and is symmetric with respect
//! to the unit circle: `g(1/conj(z)) = 1/conj(g(z))`. Its only asymptotic
//! values are `0` and `infinity`, so an orbit that leaves a large modulus
//! annulus has a well-defined escape side.

use std::f64::consts::TAU;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::circle::{Angle, CircleParams, SolverConfig};
use crate::cycle::{refine_cycle_raw, Cycle};
use crate::error::{Error, Result};

/// Real-part budget for the exponential factor before `exp` leaves f64 range.
const EXP_GUARD: f64 = 700.0;

/// Modulus tolerance for "the orbit sits on the unit circle".
const ON_CIRCLE_TOL: f64 = 1e-6;

/// Parameters of the complexified family. Unlike [`CircleParams`], `b > 1`
/// is allowed; the circle restriction is monotone only for `b <= 1`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComplexParams {
    pub a: Angle,
    pub b: f64,
}

impl ComplexParams {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        if !b.is_finite() || b < 0.0 {
            return Err(Error::ParamOutOfRange { name: "b", value: b });
        }
        Ok(ComplexParams { a: Angle::new(a), b })
    }

    pub fn from_circle(p: CircleParams) -> Self {
        ComplexParams { a: p.a, b: p.b }
    }

    /// The unimodular front factor `e^{2 pi i a}`.
    pub fn front(&self) -> Complex64 {
        Complex64::from_polar(1.0, TAU * self.a.value())
    }
}

/// Evaluate `g_{a,b}(z)`; the result is never zero.
pub fn g_eval(params: &ComplexParams, z: Complex64) -> Result<Complex64> {
    let w = z - z.inv();
    let t = params.b * w.re;
    if t.abs() > EXP_GUARD {
        return Err(Error::Overflow(t));
    }
    Ok(params.front() * z * z * (params.b * w).exp())
}

/// Derivative `g'(z) = e^{2 pi i a} e^{b(z - 1/z)} (b z^2 + 2z + b)`.
pub fn g_derivative(params: &ComplexParams, z: Complex64) -> Result<Complex64> {
    let w = z - z.inv();
    let t = params.b * w.re;
    if t.abs() > EXP_GUARD {
        return Err(Error::Overflow(t));
    }
    let poly = params.b * z * z + 2.0 * z + params.b;
    Ok(params.front() * (params.b * w).exp() * poly)
}

/// Evaluate the general circle-symmetric map `front z^2 e^{beta z - conj(beta)/z}`.
pub fn g_eval_symmetric(front: Complex64, beta: Complex64, z: Complex64) -> Result<Complex64> {
    let e = beta * z - beta.conj() * z.inv();
    if e.re.abs() > EXP_GUARD {
        return Err(Error::Overflow(e.re));
    }
    Ok(front * z * z * e.exp())
}

/// Critical points of `g_{a,b}`: the roots of `b z^2 + 2z + b`, inner
/// (`|z| <= 1`) first. The product of the pair is 1.
///
/// For `0 < b < 1` both roots are negative reals; for `b > 1` they form a
/// conjugate pair on the unit circle (returned with the lower half-plane
/// root first); `b = 1` has the double root `-1`.
pub fn critical_points(b: f64) -> Result<(Complex64, Complex64)> {
    if !b.is_finite() || b < 0.0 {
        return Err(Error::ParamOutOfRange { name: "b", value: b });
    }
    if b == 0.0 {
        return Err(Error::DegenerateB); // critical points collapse to 0 and infinity
    }
    if b <= 1.0 {
        let s = (1.0 - b * b).sqrt();
        // -b/(1+s) avoids cancellation in (-1+s)/b for small b
        let inner = -b / (1.0 + s);
        let outer = -(1.0 + s) / b;
        Ok((Complex64::new(inner, 0.0), Complex64::new(outer, 0.0)))
    } else {
        let s = (b * b - 1.0).sqrt() / b;
        Ok((
            Complex64::new(-1.0 / b, -s),
            Complex64::new(-1.0 / b, s),
        ))
    }
}

/// Recover `(a, b)` from one critical point and its critical value.
///
/// `b = -2 omega / (1 + omega^2)` (both roots satisfy it), and `e^{2 pi i a}`
/// is the ratio of the critical value to `omega^2 e^{b(omega - 1/omega)}`.
pub fn params_from_critical_data(omega: Complex64, critical_value: Complex64) -> Result<ComplexParams> {
    let denom = 1.0 + omega * omega;
    if denom.norm() < 1e-12 {
        return Err(Error::InconsistentData("1 + omega^2 vanishes"));
    }
    let b_c = -2.0 * omega / denom;
    if b_c.im.abs() > 1e-8 * b_c.norm().max(1.0) || b_c.re <= 0.0 {
        return Err(Error::InconsistentData("omega is not a critical point of the circle-symmetric family"));
    }
    let b = b_c.re;
    let base = omega * omega * (b * (omega - omega.inv())).exp();
    let front = critical_value / base;
    if (front.norm() - 1.0).abs() > 1e-6 {
        return Err(Error::InconsistentData("critical value has non-unimodular front factor"));
    }
    Ok(ComplexParams {
        a: Angle::new(front.arg() / TAU),
        b,
    })
}

/// Conjugate a general symmetric member `front z^2 e^{beta z - conj(beta)/z}`
/// onto the canonical real-coefficient ray by the unique rotation.
///
/// Returns the canonical `(a, b)` and the rotation `rho` with `rho beta > 0`;
/// the conjugated map is `z -> rho^{-1} g(rho z)`.
///
/// Panics if `beta = 0` or `front` is not unimodular to 1e-9.
pub fn canonicalize_rotation(lambda_front: Complex64, b_complex: Complex64) -> (ComplexParams, Complex64) {
    assert!(b_complex.norm() > 0.0, "b must be nonzero");
    assert!(
        (lambda_front.norm() - 1.0).abs() < 1e-9,
        "front factor must be unimodular"
    );
    let rho = b_complex.conj() / b_complex.norm();
    let b = (b_complex * rho).re; // = |b_complex|, real positive by construction
    let front = lambda_front * rho;
    (
        ComplexParams {
            a: Angle::new(front.arg() / TAU),
            b,
        },
        rho,
    )
}

/// Outcome of iterating the inner critical orbit.
#[derive(Clone, Debug)]
pub enum OrbitClass {
    /// The orbit converges to an attracting cycle on the unit circle;
    /// `distinguished` is the limit of the period-subsampled orbit.
    CircleAttracting { cycle: Cycle, distinguished: Angle },
    /// The orbit converges to an attracting cycle off the circle (one of a
    /// symmetric pair).
    PairAttracting { period: usize },
    EscapeZero,
    EscapeInfinity,
    /// Budget exhausted without a decision.
    Undecided,
}

impl OrbitClass {
    pub fn label(&self) -> &'static str {
        match self {
            OrbitClass::CircleAttracting { .. } => "circle",
            OrbitClass::PairAttracting { .. } => "pair",
            OrbitClass::EscapeZero => "escape_zero",
            OrbitClass::EscapeInfinity => "escape_infinity",
            OrbitClass::Undecided => "undecided",
        }
    }
}

/// Classify the inner critical orbit of `g_{a,b}`.
///
/// Escape is declared when `|log|z||` passes `cfg.escape_log_threshold`;
/// since the asymptotic values are exactly `{0, infinity}` there is no finite
/// escape target to confuse. Convergence to a cycle is detected by
/// near-periodicity of the orbit over windows of length up to
/// `cfg.max_period`, then split by whether the limit sits on the circle.
pub fn classify_critical_orbit(params: &ComplexParams, cfg: &SolverConfig) -> Result<OrbitClass> {
    let (inner, _) = critical_points(params.b)?;
    let front = params.front();
    let b = params.b;
    let maxp = cfg.max_period;
    let thr = cfg.escape_log_threshold;
    let trigger = 1e-10f64;

    let mut ring = vec![Complex64::new(f64::NAN, f64::NAN); maxp + 1];
    let mut z = inner;
    ring[0] = z;
    for step in 1..=cfg.complex_budget {
        let logr = z.norm().ln();
        if logr > thr {
            return Ok(OrbitClass::EscapeInfinity);
        }
        if logr < -thr {
            return Ok(OrbitClass::EscapeZero);
        }
        let w = z - z.inv();
        let t = b * w.re;
        // next modulus satisfies log|g| = 2 log|z| + t; with |log|z|| <= thr
        // an out-of-range exponent decides the side immediately
        if t > EXP_GUARD {
            return Ok(OrbitClass::EscapeInfinity);
        }
        if t < -EXP_GUARD {
            return Ok(OrbitClass::EscapeZero);
        }
        z = front * z * z * (b * w).exp();
        ring[step % (maxp + 1)] = z;
        if step < 8 {
            continue;
        }
        for p in 1..=maxp.min(step) {
            let past = ring[(step + maxp + 1 - p) % (maxp + 1)];
            if (z - past).norm_sqr() < trigger * trigger {
                if (z.norm() - 1.0).abs() < ON_CIRCLE_TOL {
                    return Ok(circle_outcome(params, z, p, step, cfg));
                }
                return Ok(OrbitClass::PairAttracting {
                    period: exact_complex_period(&ring, step, p, maxp, trigger),
                });
            }
        }
    }
    Ok(OrbitClass::Undecided)
}

/// Resolve a near-periodic on-circle orbit into a refined cycle and the
/// distinguished point, using the phase of the detection step.
fn circle_outcome(
    params: &ComplexParams,
    z: Complex64,
    p: usize,
    step: usize,
    cfg: &SolverConfig,
) -> OrbitClass {
    let x = Angle::new(z.arg() / TAU);
    let Ok(mut cycle) = refine_cycle_raw(params.a.value(), params.b, x.value(), p, cfg) else {
        return OrbitClass::Undecided;
    };
    if cycle.multiplier.abs() >= 1.0 {
        return OrbitClass::Undecided;
    }
    // the limit of g^{n q}(omega) is the cycle point the orbit passes at
    // steps divisible by q, i.e. the current index shifted back by `step`
    let q = cycle.period;
    let near = cycle.nearest_index(x);
    let idx = (near + q - step % q) % q;
    cycle.distinguished_index = Some(idx);
    let distinguished = cycle.angle(idx);
    OrbitClass::CircleAttracting { cycle, distinguished }
}

/// Smallest period consistent with the already-converged ring window.
fn exact_complex_period(
    ring: &[Complex64],
    step: usize,
    p: usize,
    maxp: usize,
    trigger: f64,
) -> usize {
    'candidate: for q in 1..p {
        if p % q != 0 {
            continue;
        }
        for j in 0..p {
            let zi = ring[(step + maxp + 1 - j) % (maxp + 1)];
            let zq = ring[(step + maxp + 1 - j - q) % (maxp + 1)];
            if (zi - zq).norm() >= trigger * 10.0 {
                continue 'candidate;
            }
        }
        return q;
    }
    p
}

/// The distinguished point of a circle-attracting cycle: the limit of the
/// period-subsampled inner critical orbit, matched to the nearest cycle
/// point. Sets `cycle.distinguished_index`.
pub fn distinguished_point(
    params: &ComplexParams,
    cycle: &mut Cycle,
    cfg: &SolverConfig,
) -> Result<Angle> {
    let p = cycle.period;
    let (inner, _) = critical_points(params.b)?;
    let mut z = inner;
    let mut prev = z;
    let mut steps = 0usize;
    while steps < cfg.complex_budget {
        for _ in 0..p {
            z = g_eval(params, z).map_err(|_| Error::NoConvergence("distinguished point"))?;
        }
        steps += p;
        if (z - prev).norm() < 1e-11 && (z.norm() - 1.0).abs() < ON_CIRCLE_TOL {
            let x = Angle::new(z.arg() / TAU);
            let idx = cycle.nearest_index(x);
            cycle.distinguished_index = Some(idx);
            return Ok(cycle.angle(idx));
        }
        prev = z;
    }
    Err(Error::NoConvergence("distinguished point"))
}
