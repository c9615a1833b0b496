//! The monotone semiconjugacy to the doubling map, and binary-rational types.
//!
//! Every member of the family is semiconjugate to `D: x -> 2x mod 1` by a
//! unique monotone degree-1 circle map `phi_{a,b}(x) = lim F^n(x)/2^n`.
//! Periodic points go to periodic points of `D` with the same period, so
//! attracting cycles acquire a rational label `k/(2^p - 1)`: the tongue type.

use serde::{Deserialize, Serialize};

use crate::circle::{circle_step, Angle, CircleParams, SolverConfig};
use crate::error::{Error, Result};

/// A periodic point `tau = k/(2^p - 1)` of the doubling map, in canonical
/// form: `p` is the exact period of `tau` and `0 <= k < 2^p - 1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct BinaryType {
    k: u64,
    p: u32,
}

impl BinaryType {
    /// Build from a numerator over `2^p - 1`, reducing to canonical form.
    pub fn new(k: u64, p: u32) -> Result<Self> {
        if p == 0 || p > 62 {
            return Err(Error::InvalidType(format!("{k}/(2^{p}-1)")));
        }
        let den = (1u64 << p) - 1;
        if k >= den && !(k == 0 && p == 1) {
            return Err(Error::InvalidType(format!("{k}/{den}")));
        }
        Ok(Self::reduce(k, p))
    }

    /// Canonical form: divide out to the exact period under doubling.
    fn reduce(k: u64, p: u32) -> Self {
        let den_p = (1u128 << p) - 1;
        for q in 1..=p {
            if p % q != 0 {
                continue;
            }
            let den_q = (1u128 << q) - 1;
            if (k as u128 * den_q) % den_p == 0 {
                let k_q = (k as u128 * den_q / den_p) as u64;
                return BinaryType { k: k_q, p: q };
            }
        }
        BinaryType { k, p }
    }

    pub fn numerator(&self) -> u64 {
        self.k
    }

    pub fn denominator(&self) -> u64 {
        (1u64 << self.p) - 1
    }

    /// Exact period under the doubling map.
    pub fn period(&self) -> u32 {
        self.p
    }

    /// Value of `tau` as a point of the circle.
    pub fn value(&self) -> f64 {
        if self.p == 1 {
            return self.k as f64; // 0/1
        }
        self.k as f64 / self.denominator() as f64
    }

    /// Image under the doubling map; the exact period is preserved.
    pub fn double(&self) -> BinaryType {
        if self.p == 1 {
            return *self;
        }
        BinaryType {
            k: (2 * self.k) % self.denominator(),
            p: self.p,
        }
    }

    /// The full doubling orbit `{tau, 2 tau, 4 tau, ...}`.
    pub fn orbit(&self) -> Vec<BinaryType> {
        let mut out = Vec::with_capacity(self.p as usize);
        let mut t = *self;
        for _ in 0..self.p {
            out.push(t);
            t = t.double();
        }
        out
    }

    /// All canonical types of exact period dividing `p`, sorted by value.
    pub fn all_of_period_dividing(p: u32) -> Vec<BinaryType> {
        let den = (1u64 << p) - 1;
        let mut out: Vec<BinaryType> = (0..den).map(|k| Self::reduce(k, p)).collect();
        out.sort_by(|x, y| {
            x.value()
                .partial_cmp(&y.value())
                .unwrap()
                .then(x.p.cmp(&y.p))
        });
        out.dedup();
        out
    }
}

impl std::fmt::Display for BinaryType {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}/{}", self.k, self.denominator())
    }
}

impl std::str::FromStr for BinaryType {
    type Err = Error;

    /// Parse `"k/m"` where `m = 2^p - 1`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidType(s.to_string());
        let (ks, ms) = s.split_once('/').ok_or_else(bad)?;
        let k: u64 = ks.trim().parse().map_err(|_| bad())?;
        let m: u64 = ms.trim().parse().map_err(|_| bad())?;
        if m == 0 || (m + 1) & m != 0 {
            return Err(bad()); // denominator must be 2^p - 1
        }
        let p = (m + 1).trailing_zeros();
        BinaryType::new(k, p)
    }
}

/// Lift of the semiconjugacy, `Phi(X) = lim F^n(X)/2^n`, truncated at
/// `cfg.phi_depth`.
///
/// The orbit is tracked on the circle with the integer carries of each lift
/// step accumulated as a dyadic sum, so depth is not limited by the `2^n`
/// growth of the raw lift. Truncation error is below `(1 + 1/pi) 2^(1-n)`.
pub fn phi_lift(params: CircleParams, x: f64, cfg: &SolverConfig) -> f64 {
    let k0 = x.floor();
    let mut xn = x - k0;
    let mut acc = 0.0;
    let mut weight = 0.5;
    let (a, b) = (params.a.value(), params.b);
    for _ in 0..cfg.phi_depth {
        let (frac, d) = circle_step(a, b, xn);
        acc += d * weight;
        weight *= 0.5;
        xn = frac;
    }
    // adding x_n 2^{-n} makes this exactly F^n(X)/2^n
    k0 + acc + xn * (2.0 * weight)
}

/// The semiconjugacy `phi_{a,b}(x)`, reduced mod 1.
pub fn phi_eval(params: CircleParams, x: Angle, cfg: &SolverConfig) -> Angle {
    Angle::new(phi_lift(params, x.value(), cfg))
}

/// Type of a period-`p` cycle point: `phi(x0)` rounded to the nearest
/// `k/(2^p - 1)` and reduced to canonical form.
///
/// Fails with [`Error::ResidualTooLarge`] when the rounding residual exceeds
/// `root_tol * 2^p`, which signals a wrong period or a near-neutral cycle.
pub fn type_from_point(
    params: CircleParams,
    x0: Angle,
    p: usize,
    cfg: &SolverConfig,
) -> Result<BinaryType> {
    assert!(p >= 1 && p <= 62, "period out of range: {p}");
    let phi = phi_eval(params, x0, cfg).value();
    let den = ((1u64 << p) - 1) as f64;
    let kf = (phi * den).round();
    let k = if den >= 1.0 { (kf as u64) % (den as u64).max(1) } else { 0 };
    let target = if p == 1 { 0.0 } else { k as f64 / den };
    let residual = Angle::new(phi).dist(Angle::new(target));
    if residual >= cfg.root_tol * (1u64 << p) as f64 {
        return Err(Error::ResidualTooLarge { residual, period: p });
    }
    BinaryType::new(k, p as u32)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};

    fn cfg() -> SolverConfig {
        SolverConfig::default()
    }

    #[test]
    fn binary_type_canonical_form() {
        // 5/15 reduces to 1/3 (period 2), 7/7 invalid, 0/anything is 0/1
        let t = BinaryType::new(5, 4).unwrap();
        assert_eq!(t.to_string(), "1/3");
        assert_eq!(t.period(), 2);
        let z = BinaryType::new(0, 5).unwrap();
        assert_eq!(z.to_string(), "0/1");
        assert_eq!(z.period(), 1);
        assert!(BinaryType::new(7, 3).is_err());
    }

    #[test]
    fn binary_type_parse_and_display() {
        let t: BinaryType = "2/7".parse().unwrap();
        assert_eq!(t.numerator(), 2);
        assert_eq!(t.period(), 3);
        assert_eq!(t.to_string(), "2/7");
        assert!("2/6".parse::<BinaryType>().is_err()); // 6 is not 2^p - 1
        assert!("x/7".parse::<BinaryType>().is_err());
        let z: BinaryType = "0/1".parse().unwrap();
        assert_eq!(z.period(), 1);
    }

    #[test]
    fn binary_type_orbit_is_doubling_cycle() {
        let t: BinaryType = "1/7".parse().unwrap();
        let orbit: Vec<u64> = t.orbit().iter().map(|u| u.numerator()).collect();
        assert_eq!(orbit, vec![1, 2, 4]);
    }

    #[test]
    fn all_types_counts() {
        // 2^p - 1 periodic points of period dividing p
        for p in 1..=8 {
            let all = BinaryType::all_of_period_dividing(p);
            assert_eq!(all.len(), (1usize << p) - 1, "p = {p}");
        }
    }

    #[test]
    fn phi_linear_case_closed_form() {
        // b = 0: phi(x) = x + a solves phi(2x + a) = 2 phi(x)
        let p = CircleParams::new(0.3, 0.0).unwrap();
        let v = phi_eval(p, Angle::new(0.2), &cfg());
        assert!(v.dist(Angle::new(0.5)) < 1e-10);
        for i in 0..64 {
            let x = i as f64 / 64.0;
            let v = phi_eval(p, Angle::new(x), &cfg());
            assert!(v.dist(Angle::new(x + 0.3)) < 1e-10, "x = {x}");
        }
    }

    #[test]
    fn phi_superattracting_fixed_point() {
        // F^n(1/2) = 2^n - 1/2 at (1/2, 1), so the limit is 1 = 0 mod 1
        let p = CircleParams::new(0.5, 1.0).unwrap();
        let v = phi_eval(p, Angle::new(0.5), &cfg());
        assert!(v.dist(Angle::new(0.0)) < 1e-12);
    }

    #[test]
    fn phi_functional_equation_sampled() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let c = cfg();
        for _ in 0..500 {
            let a: f64 = rng.random();
            let b: f64 = rng.random();
            let x: f64 = rng.random();
            let p = CircleParams::new(a, b).unwrap();
            let lhs = phi_eval(p, p.eval_circle(Angle::new(x)), &c);
            let rhs = Angle::new(2.0 * phi_eval(p, Angle::new(x), &c).value());
            assert!(lhs.dist(rhs) < 1e-8, "a={a} b={b} x={x}");
        }
    }

    #[test]
    fn phi_lift_monotone_degree_one() {
        let p = CircleParams::new(0.23, 0.97).unwrap();
        let c = cfg();
        let n = 4000;
        let mut prev = phi_lift(p, 0.0, &c);
        for i in 1..=n {
            let x = i as f64 / n as f64;
            let v = phi_lift(p, x, &c);
            assert!(v >= prev - 1e-9, "drop at x = {x}: {prev} -> {v}");
            prev = v;
        }
        // degree 1: Phi(x + 1) = Phi(x) + 1
        assert_relative_eq!(phi_lift(p, 1.3, &c), phi_lift(p, 0.3, &c) + 1.0, epsilon = 1e-12);
    }

    #[test]
    fn phi_continuity_in_parameters() {
        let c = cfg();
        let p1 = CircleParams::new(0.31, 0.72).unwrap();
        let p2 = CircleParams::new(0.31 + 1e-6, 0.72 - 1e-6).unwrap();
        let mut sup: f64 = 0.0;
        for i in 0..1000 {
            let x = Angle::new(i as f64 / 1000.0);
            sup = sup.max(phi_eval(p1, x, &c).dist(phi_eval(p2, x, &c)));
        }
        assert!(sup <= 1e-3, "sup difference {sup}");
    }

    #[test]
    fn type_from_fixed_point() {
        let p = CircleParams::new(0.5, 1.0).unwrap();
        let t = type_from_point(p, Angle::new(0.5), 1, &cfg()).unwrap();
        assert_eq!(t, BinaryType::new(0, 1).unwrap());
    }

    #[test]
    fn type_residual_error_path() {
        // a generic point is not a cycle point: phi lands far from any k/(2^p-1)
        let p = CircleParams::new(0.123, 0.9).unwrap();
        let c = cfg();
        let r = type_from_point(p, Angle::new(0.377), 2, &c);
        assert!(matches!(r, Err(Error::ResidualTooLarge { .. })));
    }
}
