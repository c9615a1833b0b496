//! Tongue membership, the superattracting atlas at `b = 1`, cross-sections,
//! tips, connectedness verification, and in-tongue paths to `(a_tau, 1)`.
//!
//! At `b = 1` the map `a -> F^p_{a,1}(1/2)` is strictly increasing of degree
//! `2^p - 1`, so each integer level is hit exactly once on a period of `a`:
//! there are exactly `2^p - 1` parameters whose critical point `1/2` is
//! periodic with period dividing `p`, one per type `k/(2^p - 1)`. That anchor
//! is the endpoint of every in-tongue path.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circle::{circle_dist, lift_raw, Angle, CircleParams, SolverConfig};
use crate::complex::{distinguished_point, ComplexParams};
use crate::cycle::{find_attracting_cycle, Cycle};
use crate::error::{Error, Result};
use crate::raster::{classify_raster, label_components, ClassRaster, Window};
use crate::semiconjugacy::{type_from_point, BinaryType};

/// Classification of one parameter against the tongue decomposition.
#[derive(Clone, Debug)]
pub struct TongueSample {
    pub params: CircleParams,
    pub outcome: TongueOutcome,
}

#[derive(Clone, Debug)]
pub enum TongueOutcome {
    /// Attracting circle cycle of this type; the cycle carries the
    /// distinguished index.
    InTongue { ty: BinaryType, cycle: Cycle },
    /// Decisively no attracting cycle (`b <= 1/2`, or positive Lyapunov sum
    /// over the detection budget).
    NoAttractor,
    /// Budget exhausted near a boundary.
    Undecided,
}

impl TongueOutcome {
    pub fn in_tongue_of(&self, ty: BinaryType) -> bool {
        matches!(self, TongueOutcome::InTongue { ty: t, .. } if *t == ty)
    }
}

/// A superattracting parameter at `b = 1` and its type.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct AtlasEntry {
    pub ty: BinaryType,
    pub a_super: Angle,
}

/// Full classification of one parameter: attracting cycle, distinguished
/// point of the complexification, and type.
pub fn classify_param(params: CircleParams, cfg: &SolverConfig) -> TongueSample {
    let outcome = classify_outcome(params, cfg);
    TongueSample { params, outcome }
}

fn classify_outcome(params: CircleParams, cfg: &SolverConfig) -> TongueOutcome {
    if params.b <= 0.5 {
        return TongueOutcome::NoAttractor;
    }
    match find_attracting_cycle(params, cfg) {
        Some(mut cycle) => {
            let cp = ComplexParams::from_circle(params);
            let typed = distinguished_point(&cp, &mut cycle, cfg)
                .and_then(|x0| type_from_point(params, x0, cycle.period, cfg));
            match typed {
                Ok(ty) if ty.period() as usize == cycle.period => {
                    TongueOutcome::InTongue { ty, cycle }
                }
                _ => TongueOutcome::Undecided,
            }
        }
        None => {
            if lyapunov_clearly_positive(params, cfg) {
                TongueOutcome::NoAttractor
            } else {
                TongueOutcome::Undecided
            }
        }
    }
}

/// Mean log-derivative along the seed orbit; clearly positive means the
/// detection failure was not a budget artifact.
fn lyapunov_clearly_positive(params: CircleParams, cfg: &SolverConfig) -> bool {
    let n = cfg.max_transient.min(2000);
    let mut x = Angle::new(0.5);
    for _ in 0..100 {
        x = params.eval_circle(x);
    }
    let mut sum = 0.0;
    for _ in 0..n {
        sum += params.eval_derivative(x).abs().ln();
        x = params.eval_circle(x);
    }
    sum / n as f64 > 0.05
}

/// `F^p_{a,1}(1/2) - 1/2` on the lift.
fn level_map(a: f64, p: usize) -> f64 {
    let mut v = 0.5;
    for _ in 0..p {
        v = lift_raw(a, 1.0, v);
    }
    v - 0.5
}

/// All superattracting parameters at `b = 1` whose cycle period divides `p`:
/// exactly `2^p - 1` of them, one per type `k/(2^p - 1)`, found by bisecting
/// the strictly increasing level map on each integer level.
pub fn superattracting_atlas(p: usize, cfg: &SolverConfig) -> Result<Vec<AtlasEntry>> {
    assert!(p >= 1 && p <= 20, "atlas period out of range: {p}");
    let count = (1u64 << p) - 1;
    let h0 = level_map(0.0, p);
    let m0 = h0.ceil() as i64;
    let mut entries = Vec::with_capacity(count as usize);
    let solved: Vec<Result<AtlasEntry>> = (0..count)
        .into_par_iter()
        .map(|off| {
            let m = m0 + off as i64;
            let a = bisect_level(p, m)?;
            let q = exact_period_at_b1(a, p);
            let params = CircleParams::new(a, 1.0).expect("b = 1 in range");
            let ty = type_from_point(params, Angle::new(0.5), q, cfg)?;
            Ok(AtlasEntry { ty, a_super: Angle::new(a) })
        })
        .collect();
    for e in solved {
        entries.push(e?);
    }
    entries.sort_by(|x, y| x.a_super.value().partial_cmp(&y.a_super.value()).unwrap());
    Ok(entries)
}

/// Bisection of `level_map(a, p) = m` on `a` in `[0, 1]`. Monotonicity makes
/// the bracket unconditional; 100 halvings reach f64 resolution.
fn bisect_level(p: usize, m: i64) -> Result<f64> {
    let target = m as f64;
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    let (glo, ghi) = (level_map(lo, p) - target, level_map(hi, p) - target);
    if glo > 1e-12 || ghi < -1e-12 {
        return Err(Error::BisectionFailure { level: m });
    }
    if glo == 0.0 {
        return Ok(0.0);
    }
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if level_map(mid, p) - target <= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-16 {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Exact period of the superattracting orbit of `1/2` at `(a, 1)`.
fn exact_period_at_b1(a: f64, p: usize) -> usize {
    for q in 1..p {
        if p % q != 0 {
            continue;
        }
        let mut v = 0.5;
        for _ in 0..q {
            v = lift_raw(a, 1.0, v);
        }
        if circle_dist(Angle::new(v).value(), 0.5) < 1e-6 {
            return q;
        }
    }
    p
}

/// The unique atlas entry of one type.
pub fn atlas_entry_for(ty: BinaryType, cfg: &SolverConfig) -> Result<AtlasEntry> {
    let entries = superattracting_atlas(ty.period() as usize, cfg)?;
    entries
        .into_iter()
        .find(|e| e.ty == ty)
        .ok_or(Error::NoConvergence("type missing from atlas"))
}

fn is_member(a: f64, b: f64, ty: BinaryType, cfg: &SolverConfig) -> bool {
    match CircleParams::new(a, b) {
        Ok(p) => classify_outcome(p, cfg).in_tongue_of(ty),
        Err(_) => false,
    }
}

/// Maximal intervals of the tongue's cross-section at height `b`, as lift
/// intervals `(lo, hi)` with `lo` in `[0, 1)` and `hi <= lo + 1` (an interval
/// with `hi > 1` wraps through `a = 0`). Endpoints are refined by bisection
/// between membership and non-membership to `root_tol`.
pub fn cross_section(ty: BinaryType, b: f64, cfg: &SolverConfig) -> Vec<(f64, f64)> {
    let n = cfg.section_grid;
    let member: Vec<bool> = (0..n)
        .into_par_iter()
        .map(|i| is_member((i as f64 + 0.5) / n as f64, b, ty, cfg))
        .collect();
    let Some(start) = member.iter().position(|m| !m) else {
        return vec![(0.0, 1.0)]; // degenerate: the whole circle
    };
    let da = 1.0 / n as f64;
    let center = |i: usize| (i % n) as f64 * da + 0.5 * da + (i / n) as f64;
    let mut intervals = Vec::new();
    let mut i = start + 1;
    while i <= start + n {
        if !member[i % n] {
            i += 1;
            continue;
        }
        let first = i;
        while i <= start + n && member[i % n] {
            i += 1;
        }
        let last = i - 1;
        let lo = refine_boundary(center(first - 1), center(first), b, ty, cfg);
        let hi = refine_boundary(center(last + 1), center(last), b, ty, cfg);
        let shift = lo.rem_euclid(1.0) - lo;
        intervals.push((lo + shift, hi + shift));
    }
    intervals.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap());
    intervals
}

/// Bisect between a non-member `a` and a member `a` to `root_tol`.
fn refine_boundary(mut out: f64, mut inside: f64, b: f64, ty: BinaryType, cfg: &SolverConfig) -> f64 {
    while (out - inside).abs() > cfg.root_tol {
        let mid = 0.5 * (out + inside);
        if is_member(mid, b, ty, cfg) {
            inside = mid;
        } else {
            out = mid;
        }
    }
    0.5 * (out + inside)
}

/// Minimal `b` with a nonempty cross-section, to `root_tol`, by bisection on
/// emptiness. Always at least 1/2 (below that no cycle attracts). The result
/// is resolution-limited: sections thinner than the scan grid read as empty.
pub fn tongue_tip(ty: BinaryType, cfg: &SolverConfig) -> Result<f64> {
    if cross_section(ty, 1.0, cfg).is_empty() {
        return Err(Error::NoConvergence("tongue empty at b = 1"));
    }
    let (mut lo, mut hi) = (0.5f64, 1.0f64);
    while hi - lo > cfg.root_tol {
        let mid = 0.5 * (lo + hi);
        if cross_section(ty, mid, cfg).is_empty() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(hi)
}

/// Outcome of rasterizing a tongue and flood-filling its pixel set.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ConnectivityReport {
    pub ty: BinaryType,
    pub window: Window,
    pub width: usize,
    pub height: usize,
    pub resolution_ok: bool,
    /// Connected components of the tongue's pixel set (cylinder topology
    /// when the window spans the full circle).
    pub components: usize,
    pub tongue_pixels: usize,
    /// Pixel of the superattracting anchor `(a_tau, 1)`, when inside the window.
    pub anchor_cell: Option<(usize, usize)>,
    pub anchor_in_component: bool,
    pub undecided_fraction: f64,
    pub pass: bool,
}

/// Rasterize the window, flood-fill the pixels of this type, and check there
/// is exactly one component containing the superattracting anchor.
pub fn connectivity_check(
    ty: BinaryType,
    window: Window,
    width: usize,
    height: usize,
    cfg: &SolverConfig,
) -> Result<ConnectivityReport> {
    if width < 64 || height < 64 {
        return Ok(ConnectivityReport {
            ty,
            window,
            width,
            height,
            resolution_ok: false,
            components: 0,
            tongue_pixels: 0,
            anchor_cell: None,
            anchor_in_component: false,
            undecided_fraction: 0.0,
            pass: false,
        });
    }
    window.validate()?;
    let raster = classify_raster(window, width, height, cfg);
    connectivity_check_on(&raster, ty, cfg)
}

/// The flood-fill part of [`connectivity_check`], reusing an existing raster
/// (several types can share one scan).
pub fn connectivity_check_on(
    raster: &ClassRaster,
    ty: BinaryType,
    cfg: &SolverConfig,
) -> Result<ConnectivityReport> {
    let (w, h) = (raster.width, raster.height);
    let mask = raster.mask_of(ty);
    let (labels, components) = label_components(&mask, w, h, raster.window.wraps_a());
    let entry = atlas_entry_for(ty, cfg)?;
    let win = raster.window;
    let anchor_cell = (win.a_min <= entry.a_super.value()
        && entry.a_super.value() < win.a_max
        && win.b_min <= 1.0
        && 1.0 <= win.b_max)
        .then(|| win.cell_of(entry.a_super.value(), 1.0, w, h));
    let anchor_in_component = anchor_cell.map_or(false, |(i, j)| labels[j * w + i] != 0);
    let tongue_pixels = mask.iter().filter(|m| **m).count();
    Ok(ConnectivityReport {
        ty,
        window: win,
        width: w,
        height: h,
        resolution_ok: true,
        components,
        tongue_pixels,
        anchor_cell,
        anchor_in_component,
        undecided_fraction: raster.undecided_fraction(),
        pass: components == 1 && anchor_in_component,
    })
}

/// One vertex of an in-tongue path.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct PathVertex {
    pub a: f64,
    pub b: f64,
    pub multiplier: f64,
}

/// A polyline in `(a, b)` joining a tongue parameter to the superattracting
/// anchor of its type.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TonguePath {
    pub ty: BinaryType,
    pub vertices: Vec<PathVertex>,
    /// Steps where the multiplier failed to decrease (tolerance 1e-3). The
    /// spine path follows section midpoints, not the multiplier level sets,
    /// so decay is observed rather than guaranteed; violations are reported,
    /// never asserted away.
    pub decay_violations: usize,
}

impl TonguePath {
    pub fn endpoint(&self) -> PathVertex {
        *self.vertices.last().expect("path has at least one vertex")
    }
}

/// Walk the local cross-section interval containing `a` at height `b`:
/// outward cell steps until membership fails, then boundary bisection. This
/// is the interval `cross_section` would report around `a`.
fn local_interval(ty: BinaryType, a: f64, b: f64, cfg: &SolverConfig) -> Option<(f64, f64)> {
    if !is_member(a, b, ty, cfg) {
        return None;
    }
    let da = 1.0 / cfg.section_grid as f64;
    let max_steps = cfg.section_grid;
    let mut right = a;
    let mut steps = 0;
    while is_member(right + da, b, ty, cfg) {
        right += da;
        steps += 1;
        if steps > max_steps {
            return Some((a - 0.5, a + 0.5));
        }
    }
    let mut left = a;
    steps = 0;
    while is_member(left - da, b, ty, cfg) {
        left -= da;
        steps += 1;
        if steps > max_steps {
            return Some((a - 0.5, a + 0.5));
        }
    }
    let hi = refine_boundary(right + da, right, b, ty, cfg);
    let lo = refine_boundary(left - da, left, b, ty, cfg);
    Some((lo, hi))
}

/// Ascend `b` from `start` to 1, keeping `a` at the midpoint of the local
/// cross-section interval, and end exactly at the superattracting atlas
/// entry of the type.
///
/// The step in `b` is halved (up to 6 times) when the interval is lost;
/// a persistent loss surfaces as [`Error::PathBroken`] with the offending
/// height.
pub fn path_to_superattracting(
    ty: BinaryType,
    start: CircleParams,
    cfg: &SolverConfig,
) -> Result<TonguePath> {
    let sample = classify_param(start, cfg);
    let TongueOutcome::InTongue { ty: t0, cycle } = sample.outcome else {
        return Err(Error::TypeMismatch);
    };
    if t0 != ty {
        return Err(Error::TypeMismatch);
    }
    let entry = atlas_entry_for(ty, cfg)?;
    let mut vertices = vec![PathVertex {
        a: start.a.value(),
        b: start.b,
        multiplier: cycle.multiplier,
    }];

    if start.b == 1.0 && start.a.dist(entry.a_super) <= cfg.root_tol {
        return Ok(TonguePath { ty, vertices, decay_violations: 0 });
    }

    let mut a = start.a.value();
    let mut b = start.b;
    let mut step = cfg.path_step;
    while b < 1.0 - 0.5 * cfg.path_step {
        let bn = (b + step).min(1.0 - 0.5 * cfg.path_step);
        match local_interval(ty, a, bn, cfg) {
            Some((lo, hi)) => {
                a = Angle::new(0.5 * (lo + hi)).value();
                let params = CircleParams::new(a, bn).expect("b within range");
                let multiplier = match classify_outcome(params, cfg) {
                    TongueOutcome::InTongue { cycle, .. } => cycle.multiplier,
                    _ => return Err(Error::PathBroken { b: bn }),
                };
                vertices.push(PathVertex { a, b: bn, multiplier });
                b = bn;
                step = cfg.path_step;
            }
            None => {
                step *= 0.5;
                if step < cfg.path_step / 64.0 {
                    return Err(Error::PathBroken { b: bn });
                }
            }
        }
    }
    vertices.push(PathVertex {
        a: entry.a_super.value(),
        b: 1.0,
        multiplier: 0.0,
    });

    let decay_violations = vertices
        .windows(2)
        .filter(|w| w[1].multiplier > w[0].multiplier + 1e-3)
        .count();
    Ok(TonguePath { ty, vertices, decay_violations })
}

/// Least-squares estimate of the contact exponent at the tongue tip.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct TipExponent {
    pub b_tip: f64,
    /// Slope of `log(width)` against `log(b - b_tip)` over one decade.
    pub exponent: f64,
    /// Root-mean-square residual of the fit.
    pub residual: f64,
    pub points: usize,
}

/// Fit the section-width growth over one decade of `b` above the tip. No
/// ground-truth value is asserted anywhere; this is an exploratory estimate.
pub fn tip_exponent_estimate(
    ty: BinaryType,
    samples: usize,
    cfg: &SolverConfig,
) -> Result<TipExponent> {
    let b_tip = tongue_tip(ty, cfg)?;
    let headroom = 1.0 - b_tip;
    if headroom < 1e-6 {
        return Err(Error::InsufficientData("tongue tip too close to b = 1"));
    }
    let d_hi = (0.5 * headroom).min(0.1);
    let d_lo = d_hi / 10.0;
    let mut points = Vec::new();
    for j in 0..samples.max(2) {
        let t = j as f64 / (samples.max(2) - 1) as f64;
        let delta = d_lo * (d_hi / d_lo).powf(t);
        let width: f64 = cross_section(ty, b_tip + delta, cfg)
            .iter()
            .map(|(lo, hi)| hi - lo)
            .sum();
        if width > 0.0 {
            points.push((delta.ln(), width.ln()));
        }
    }
    if points.len() < 5 {
        return Err(Error::InsufficientData("fewer than 5 usable section widths"));
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss: f64 = points
        .iter()
        .map(|p| {
            let r = p.1 - (slope * p.0 + intercept);
            r * r
        })
        .sum();
    Ok(TipExponent {
        b_tip,
        exponent: slope,
        residual: (ss / n).sqrt(),
        points: points.len(),
    })
}
