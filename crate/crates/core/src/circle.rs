//! The real double standard family, its lift and derivative.
//!
//! The family is `f_{a,b}(x) = 2x + a + (b/pi) sin(2 pi x)` on the circle
//! `R/Z`, lifted to `F_{a,b}` on the line. For `b <= 1` the circle map is
//! monotone of degree 2 and `f' >= 2(1 - b)` everywhere.

use std::f64::consts::{FRAC_1_PI, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A point of the circle `R/Z`, stored as its representative in `[0, 1)`.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Angle(f64);

impl Angle {
    /// Reduce an arbitrary real number mod 1 into `[0, 1)`.
    pub fn new(value: f64) -> Self {
        let mut r = value % 1.0;
        if r < 0.0 {
            r += 1.0;
        }
        // x % 1 + 1 can round up to exactly 1 for tiny negative x.
        if r >= 1.0 {
            r = 0.0;
        }
        Angle(r)
    }

    pub fn value(self) -> f64 {
        self.0
    }

    /// Circle distance, in `[0, 1/2]`.
    pub fn dist(self, other: Angle) -> f64 {
        circle_dist(self.0, other.0)
    }
}

impl std::fmt::Display for Angle {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Distance mod 1 between two representatives in `[0, 1)`.
pub(crate) fn circle_dist(x: f64, y: f64) -> f64 {
    let d = (x - y).abs() % 1.0;
    d.min(1.0 - d)
}

/// Parameters `(a, b)` of the real family, `b` restricted to `[0, 1]`.
///
/// The complexified family relaxes the restriction; see [`crate::complex`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CircleParams {
    pub a: Angle,
    pub b: f64,
}

impl CircleParams {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        if !b.is_finite() || !(0.0..=1.0).contains(&b) {
            return Err(Error::ParamOutOfRange { name: "b", value: b });
        }
        Ok(CircleParams { a: Angle::new(a), b })
    }

    /// Lift `F_{a,b}(X) = 2X + a + (b/pi) sin(2 pi X)`.
    pub fn eval_lift(&self, x: f64) -> f64 {
        lift_raw(self.a.value(), self.b, x)
    }

    /// Circle map `f_{a,b} = F_{a,b} mod 1`.
    pub fn eval_circle(&self, x: Angle) -> Angle {
        Angle::new(lift_frac(self.a.value(), self.b, x.value()))
    }

    /// Derivative `f'_{a,b}(x) = 2 + 2b cos(2 pi x)`, bounded below by `2(1-b)`.
    pub fn eval_derivative(&self, x: Angle) -> f64 {
        derivative_raw(self.b, x.value())
    }

    /// `n`-fold composition of the lift. The lift grows like `2^n`; deep
    /// iteration must go through the circle projection instead.
    pub fn iterate_lift(&self, x: f64, n: usize) -> f64 {
        let mut v = x;
        for _ in 0..n {
            v = self.eval_lift(v);
        }
        v
    }
}

/// Lift evaluated at any real `x`. The sine argument is reduced first so the
/// degree-2 identity `F(x + 1) = F(x) + 2` holds at full precision.
pub(crate) fn lift_raw(a: f64, b: f64, x: f64) -> f64 {
    let k = x.floor();
    2.0 * k + lift_frac(a, b, x - k)
}

/// Lift restricted to `x` in `[0, 1)`.
pub(crate) fn lift_frac(a: f64, b: f64, x: f64) -> f64 {
    2.0 * x + a + b * FRAC_1_PI * (TAU * x).sin()
}

pub(crate) fn derivative_raw(b: f64, x: f64) -> f64 {
    2.0 + 2.0 * b * (TAU * x).cos()
}

/// One circle step, returning the new angle and the integer carry of the lift.
pub(crate) fn circle_step(a: f64, b: f64, x: f64) -> (f64, f64) {
    let v = lift_frac(a, b, x);
    let d = v.floor();
    let mut frac = v - d;
    if frac >= 1.0 {
        frac = 0.0;
    }
    (frac, d)
}

/// Numerical knobs shared by the solvers and classifiers.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Target residual for root refinement and boundary bisection.
    pub root_tol: f64,
    /// Tolerance for near-periodicity of an orbit.
    pub cycle_tol: f64,
    /// Iteration budget for transients in cycle detection.
    pub max_transient: usize,
    /// Largest cycle period searched for.
    pub max_period: usize,
    /// Truncation depth of the semiconjugacy limit `F^n(x)/2^n`.
    pub phi_depth: usize,
    /// `|log|z||` beyond which a complex orbit counts as escaped.
    pub escape_log_threshold: f64,
    /// Cap on the Koenigs renormalization depth.
    pub koenigs_depth: usize,
    /// Iteration budget for complex critical-orbit classification.
    pub complex_budget: usize,
    /// Cells in a tongue cross-section scan of the full `a` circle.
    pub section_grid: usize,
    /// Step in `b` for in-tongue paths, halved adaptively on failure.
    pub path_step: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            root_tol: 1e-9,
            cycle_tol: 1e-10,
            max_transient: 20_000,
            max_period: 16,
            phi_depth: 60,
            escape_log_threshold: 50.0,
            koenigs_depth: 200,
            complex_budget: 100_000,
            section_grid: 4096,
            path_step: 1.0 / 256.0,
        }
    }
}

impl SolverConfig {
    /// A cheaper profile for large raster scans and interactive use.
    pub fn fast() -> Self {
        SolverConfig {
            max_transient: 4000,
            complex_budget: 20_000,
            section_grid: 1024,
            ..SolverConfig::default()
        }
    }
}
