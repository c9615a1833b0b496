//! Deterministic rendering of the two parameter-plane figures.
//!
//! A manifest fully determines the output bytes: pixels are sampled at cell
//! centers, rows are rendered independently and assembled in index order, and
//! the `TONGUE_ATLAS_THREADS` environment variable only sizes the thread pool
//! (it must never change the bytes). Images are binary P6 pixmaps, legends
//! are CSV with a 17-significant-digit float format, manifests are JSON with
//! sorted keys.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::circle::SolverConfig;
use crate::complex::OrbitClass;
use crate::error::{Error, Result};
use crate::raster::{classify_raster, complex_raster, Cell, Window};
use crate::semiconjugacy::BinaryType;

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Environment variable overriding render parallelism. Any value accepted by
/// `usize` (0 or unset meaning the rayon default); output bytes do not
/// depend on it.
pub const THREADS_ENV: &str = "TONGUE_ATLAS_THREADS";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RenderMode {
    Tongues,
    ComplexClasses,
}

/// Everything that determines a render: window, grid, palette, solver knobs.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RenderManifest {
    pub mode: RenderMode,
    pub window: Window,
    pub width: usize,
    pub height: usize,
    /// Outcome name to RGB. Tongue mode keys: `none`, `undecided`, `p1`..;
    /// complex mode keys: `circle`, `pair`, `escape_zero`, `escape_infinity`,
    /// `undecided`.
    pub palette: BTreeMap<String, [u8; 3]>,
    pub cfg: SolverConfig,
    pub tool_version: String,
}

impl RenderManifest {
    /// Tongue-plane default: the full circle over `b` in `[0, 1]`.
    pub fn tongues_default(width: usize, height: usize) -> Self {
        let mut palette = BTreeMap::new();
        palette.insert("none".into(), [255, 255, 255]);
        palette.insert("undecided".into(), [168, 168, 168]);
        let cfg = SolverConfig::fast();
        for p in 1..=cfg.max_period {
            palette.insert(format!("p{p}"), period_hue(p));
        }
        RenderManifest {
            mode: RenderMode::Tongues,
            window: Window { a_min: 0.0, a_max: 1.0, b_min: 0.0, b_max: 1.0 },
            width,
            height,
            palette,
            cfg,
            tool_version: TOOL_VERSION.into(),
        }
    }

    /// Complex-plane default: mirrors the real figure axis `[-1/2, 1/2]` and
    /// extends `b` to 2 to expose the structures above `b = 1`.
    pub fn complex_default(width: usize, height: usize) -> Self {
        let mut palette = BTreeMap::new();
        palette.insert("circle".into(), [40, 60, 230]);
        palette.insert("pair".into(), [245, 170, 30]);
        palette.insert("escape_zero".into(), [220, 40, 40]);
        palette.insert("escape_infinity".into(), [40, 180, 70]);
        palette.insert("undecided".into(), [0, 0, 0]);
        RenderManifest {
            mode: RenderMode::ComplexClasses,
            window: Window { a_min: -0.5, a_max: 0.5, b_min: 0.0, b_max: 2.0 },
            width,
            height,
            palette,
            cfg: SolverConfig::fast(),
            tool_version: TOOL_VERSION.into(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.window.validate()?;
        if self.width == 0 || self.height == 0 {
            return Err(Error::ParamOutOfRange { name: "raster", value: 0.0 });
        }
        if self.mode == RenderMode::Tongues
            && (self.window.b_min < 0.0 || self.window.b_max > 1.0)
        {
            return Err(Error::ParamOutOfRange {
                name: "tongue window b_max",
                value: self.window.b_max,
            });
        }
        Ok(())
    }

    /// JSON with sorted keys (serde_json maps are ordered), one trailing
    /// newline.
    pub fn to_json(&self) -> String {
        let v = serde_json::to_value(self).expect("manifest serializes");
        let mut s = serde_json::to_string_pretty(&v).expect("manifest serializes");
        s.push('\n');
        s
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let m: RenderManifest = serde_json::from_str(s)
            .map_err(|e| Error::InvalidType(format!("manifest: {e}")))?;
        m.validate()?;
        Ok(m)
    }

    fn color(&self, key: &str) -> [u8; 3] {
        self.palette.get(key).copied().unwrap_or([255, 0, 255])
    }
}

/// Fixed hue wheel for cycle periods.
fn period_hue(p: usize) -> [u8; 3] {
    let h = ((p - 1) as f64 * 0.3183) % 1.0;
    hsv_to_rgb(h, 0.85, 0.85)
}

fn hsv_to_rgb(h: f64, s: f64, v: f64) -> [u8; 3] {
    let h6 = (h * 6.0) % 6.0;
    let c = v * s;
    let x = c * (1.0 - ((h6 % 2.0) - 1.0).abs());
    let (r, g, b) = match h6 as usize {
        0 => (c, x, 0.0),
        1 => (x, c, 0.0),
        2 => (0.0, c, x),
        3 => (0.0, x, c),
        4 => (x, 0.0, c),
        _ => (c, 0.0, x),
    };
    let m = v - c;
    [
        ((r + m) * 255.0).round() as u8,
        ((g + m) * 255.0).round() as u8,
        ((b + m) * 255.0).round() as u8,
    ]
}

/// Binary P6 pixmap from row-major RGB triples.
pub fn ppm_bytes(width: usize, height: usize, rgb: &[[u8; 3]]) -> Vec<u8> {
    assert_eq!(rgb.len(), width * height);
    let mut out = format!("P6\n{width} {height}\n255\n").into_bytes();
    out.reserve(3 * rgb.len());
    for px in rgb {
        out.extend_from_slice(px);
    }
    out
}

/// 17-significant-digit float format used in every CSV.
pub fn csv_float(v: f64) -> String {
    format!("{v:.16e}")
}

fn run_in_pool<T: Send>(f: impl FnOnce() -> T + Send) -> T {
    let threads = std::env::var(THREADS_ENV)
        .ok()
        .and_then(|s| s.parse::<usize>().ok())
        .unwrap_or(0);
    if threads == 0 {
        return f();
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .expect("thread pool");
    pool.install(f)
}

/// Render the real-family tongue plane. Returns the image bytes and a CSV
/// legend with one row per outcome (`type,color,pixels`).
pub fn render_tongue_plane(manifest: &RenderManifest) -> Result<(Vec<u8>, String)> {
    manifest.validate()?;
    let (w, h) = (manifest.width, manifest.height);
    let raster = run_in_pool(|| classify_raster(manifest.window, w, h, &manifest.cfg));

    let mut pixels = vec![[0u8; 3]; w * h];
    // legend rows keyed by (period, type label) so tongues sort before the
    // special outcomes and by period within
    let mut counts: BTreeMap<(u32, String), usize> = BTreeMap::new();
    for j in 0..h {
        for i in 0..w {
            // image rows run top-down, raster rows bottom-up
            let cell = raster.cell(i, h - 1 - j);
            let (palette_key, legend_key) = match cell {
                Cell::NoAttractor => ("none".to_string(), (u32::MAX - 1, "none".to_string())),
                Cell::Undecided => ("undecided".to_string(), (u32::MAX, "undecided".to_string())),
                Cell::Tongue { ty, .. } => {
                    (format!("p{}", ty.period()), (ty.period(), ty.to_string()))
                }
            };
            pixels[j * w + i] = manifest.color(&palette_key);
            *counts.entry(legend_key).or_insert(0) += 1;
        }
    }

    let mut legend = String::from("type,color,pixels\n");
    for ((period, label), n) in &counts {
        let key = if label == "none" || label == "undecided" {
            label.clone()
        } else {
            format!("p{period}")
        };
        let c = manifest.color(&key);
        legend.push_str(&format!(
            "{label},#{:02x}{:02x}{:02x},{n}\n",
            c[0], c[1], c[2]
        ));
    }
    Ok((ppm_bytes(w, h, &pixels), legend))
}

/// Render the complexified-family class plane with the caption scheme:
/// circle-attracting blue, escape to zero red, escape to infinity green,
/// attracting pair its own color, undecided black.
pub fn render_complex_plane(manifest: &RenderManifest) -> Result<Vec<u8>> {
    manifest.validate()?;
    let (w, h) = (manifest.width, manifest.height);
    let classes = run_in_pool(|| complex_raster(manifest.window, w, h, &manifest.cfg));
    let mut pixels = vec![[0u8; 3]; w * h];
    for j in 0..h {
        for i in 0..w {
            let class = &classes[(h - 1 - j) * w + i];
            let key = match class {
                OrbitClass::CircleAttracting { .. } => "circle",
                OrbitClass::PairAttracting { .. } => "pair",
                OrbitClass::EscapeZero => "escape_zero",
                OrbitClass::EscapeInfinity => "escape_infinity",
                OrbitClass::Undecided => "undecided",
            };
            pixels[j * w + i] = manifest.color(key);
        }
    }
    Ok(ppm_bytes(w, h, &pixels))
}

/// Legend helper shared by the CLI: one row per atlas type.
pub fn atlas_csv(entries: &[crate::atlas::AtlasEntry]) -> String {
    let mut out = String::from("type,a_super\n");
    for e in entries {
        out.push_str(&format!("{},{}\n", e.ty, csv_float(e.a_super.value())));
    }
    out
}

/// CSV of cross-section intervals.
pub fn section_csv(ty: BinaryType, b: f64, intervals: &[(f64, f64)]) -> String {
    let mut out = String::from("type,b,a_lo,a_hi\n");
    for (lo, hi) in intervals {
        out.push_str(&format!(
            "{ty},{},{},{}\n",
            csv_float(b),
            csv_float(*lo),
            csv_float(*hi)
        ));
    }
    out
}

/// CSV of path vertices.
pub fn path_csv(path: &crate::atlas::TonguePath) -> String {
    let mut out = String::from("a,b,multiplier\n");
    for v in &path.vertices {
        out.push_str(&format!(
            "{},{},{}\n",
            csv_float(v.a),
            csv_float(v.b),
            csv_float(v.multiplier)
        ));
    }
    out
}
