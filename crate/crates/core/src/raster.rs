//! Parameter-plane rasters and connected-component labeling.
//!
//! Cells are sampled at their centers; rows are computed independently and
//! merged by index, so results are identical for any thread count.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::VecDeque;

use crate::atlas::{classify_param, TongueOutcome};
use crate::circle::{CircleParams, SolverConfig};
use crate::complex::{classify_critical_orbit, ComplexParams, OrbitClass};
use crate::error::{Error, Result};
use crate::semiconjugacy::BinaryType;

/// A rectangle in the `(a, b)` parameter plane.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub a_min: f64,
    pub a_max: f64,
    pub b_min: f64,
    pub b_max: f64,
}

impl Window {
    pub fn new(a_min: f64, a_max: f64, b_min: f64, b_max: f64) -> Result<Self> {
        let w = Window { a_min, a_max, b_min, b_max };
        w.validate()?;
        Ok(w)
    }

    pub fn validate(&self) -> Result<()> {
        let vals = [self.a_min, self.a_max, self.b_min, self.b_max];
        if vals.iter().any(|v| !v.is_finite()) || self.a_max <= self.a_min || self.b_max <= self.b_min
        {
            return Err(Error::ParamOutOfRange {
                name: "window",
                value: self.a_max - self.a_min,
            });
        }
        Ok(())
    }

    /// Whether the `a` extent covers the full circle, so the raster should be
    /// treated as a cylinder (left and right columns adjacent).
    pub fn wraps_a(&self) -> bool {
        (self.a_max - self.a_min - 1.0).abs() < 1e-9
    }

    /// Center of cell `(i, j)` on a `width x height` grid; `j = 0` is `b_min`.
    pub fn cell_center(&self, i: usize, j: usize, width: usize, height: usize) -> (f64, f64) {
        let a = self.a_min + (i as f64 + 0.5) * (self.a_max - self.a_min) / width as f64;
        let b = self.b_min + (j as f64 + 0.5) * (self.b_max - self.b_min) / height as f64;
        (a, b)
    }

    /// Cell containing the point, clamped to the grid.
    pub fn cell_of(&self, a: f64, b: f64, width: usize, height: usize) -> (usize, usize) {
        let fi = (a - self.a_min) / (self.a_max - self.a_min) * width as f64;
        let fj = (b - self.b_min) / (self.b_max - self.b_min) * height as f64;
        let i = (fi.floor() as isize).clamp(0, width as isize - 1) as usize;
        let j = (fj.floor() as isize).clamp(0, height as isize - 1) as usize;
        (i, j)
    }
}

/// Outcome of classifying one tongue-raster cell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Cell {
    NoAttractor,
    Undecided,
    Tongue { ty: BinaryType, multiplier: f64 },
}

/// A classified raster of the real family over a window with `b <= 1`.
#[derive(Clone, Debug)]
pub struct ClassRaster {
    pub window: Window,
    pub width: usize,
    pub height: usize,
    /// Row-major, row `j = 0` at `b_min`.
    pub cells: Vec<Cell>,
}

impl ClassRaster {
    pub fn cell(&self, i: usize, j: usize) -> &Cell {
        &self.cells[j * self.width + i]
    }

    pub fn undecided_fraction(&self) -> f64 {
        let n = self.cells.iter().filter(|c| matches!(c, Cell::Undecided)).count();
        n as f64 / self.cells.len() as f64
    }

    /// Membership mask of one tongue type.
    pub fn mask_of(&self, ty: BinaryType) -> Vec<bool> {
        self.cells
            .iter()
            .map(|c| matches!(c, Cell::Tongue { ty: t, .. } if *t == ty))
            .collect()
    }
}

/// Classify every cell of the window under the real family.
///
/// Cells with `b` outside `[0, 1]` come back [`Cell::Undecided`].
pub fn classify_raster(
    window: Window,
    width: usize,
    height: usize,
    cfg: &SolverConfig,
) -> ClassRaster {
    let rows: Vec<Vec<Cell>> = (0..height)
        .into_par_iter()
        .map(|j| {
            (0..width)
                .map(|i| {
                    let (a, b) = window.cell_center(i, j, width, height);
                    match CircleParams::new(a, b) {
                        Ok(p) => match classify_param(p, cfg).outcome {
                            TongueOutcome::InTongue { ty, cycle } => Cell::Tongue {
                                ty,
                                multiplier: cycle.multiplier,
                            },
                            TongueOutcome::NoAttractor => Cell::NoAttractor,
                            TongueOutcome::Undecided => Cell::Undecided,
                        },
                        Err(_) => Cell::Undecided,
                    }
                })
                .collect()
        })
        .collect();
    ClassRaster {
        window,
        width,
        height,
        cells: rows.concat(),
    }
}

/// Classify every cell of the window under the complexified family.
pub fn complex_raster(
    window: Window,
    width: usize,
    height: usize,
    cfg: &SolverConfig,
) -> Vec<OrbitClass> {
    let rows: Vec<Vec<OrbitClass>> = (0..height)
        .into_par_iter()
        .map(|j| {
            (0..width)
                .map(|i| {
                    let (a, b) = window.cell_center(i, j, width, height);
                    match ComplexParams::new(a, b) {
                        Ok(p) => {
                            classify_critical_orbit(&p, cfg).unwrap_or(OrbitClass::Undecided)
                        }
                        Err(_) => OrbitClass::Undecided,
                    }
                })
                .collect()
        })
        .collect();
    rows.concat()
}

/// 4-connected component labeling of a boolean mask. Labels start at 1;
/// zero marks background. With `wrap_x` the first and last columns are
/// adjacent (cylinder topology in `a`).
pub fn label_components(
    mask: &[bool],
    width: usize,
    height: usize,
    wrap_x: bool,
) -> (Vec<u32>, usize) {
    assert_eq!(mask.len(), width * height);
    let mut labels = vec![0u32; mask.len()];
    let mut count = 0u32;
    let mut queue = VecDeque::new();
    for start in 0..mask.len() {
        if !mask[start] || labels[start] != 0 {
            continue;
        }
        count += 1;
        labels[start] = count;
        queue.push_back(start);
        while let Some(idx) = queue.pop_front() {
            let (i, j) = (idx % width, idx / width);
            let mut push = |ni: usize, nj: usize| {
                let nidx = nj * width + ni;
                if mask[nidx] && labels[nidx] == 0 {
                    labels[nidx] = count;
                    queue.push_back(nidx);
                }
            };
            if i > 0 {
                push(i - 1, j);
            } else if wrap_x && width > 1 {
                push(width - 1, j);
            }
            if i + 1 < width {
                push(i + 1, j);
            } else if wrap_x && width > 1 {
                push(0, j);
            }
            if j > 0 {
                push(i, j - 1);
            }
            if j + 1 < height {
                push(i, j + 1);
            }
        }
    }
    (labels, count as usize)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mask(rows: &[&str]) -> (Vec<bool>, usize, usize) {
        let height = rows.len();
        let width = rows[0].len();
        let mut m = Vec::with_capacity(width * height);
        for row in rows {
            for c in row.chars() {
                m.push(c == '#');
            }
        }
        (m, width, height)
    }

    #[test]
    fn labeling_counts_components() {
        let (m, w, h) = mask(&[
            "##..#",
            ".#..#",
            ".....",
            "#..##",
        ]);
        let (_, count) = label_components(&m, w, h, false);
        assert_eq!(count, 4);
    }

    #[test]
    fn labeling_diagonals_not_connected() {
        let (m, w, h) = mask(&[
            "#.",
            ".#",
        ]);
        let (_, count) = label_components(&m, w, h, false);
        assert_eq!(count, 2);
    }

    #[test]
    fn labeling_wrap_joins_edge_columns() {
        let (m, w, h) = mask(&[
            "#..#",
            "....",
        ]);
        assert_eq!(label_components(&m, w, h, false).1, 2);
        assert_eq!(label_components(&m, w, h, true).1, 1);
    }

    #[test]
    fn labeling_full_and_empty() {
        let (m, w, h) = mask(&["###", "###"]);
        assert_eq!(label_components(&m, w, h, false).1, 1);
        let empty = vec![false; 6];
        assert_eq!(label_components(&empty, 3, 2, false).1, 0);
    }

    #[test]
    fn labels_are_consistent() {
        let (m, w, h) = mask(&[
            "##.",
            ".#.",
            "..#",
        ]);
        let (labels, count) = label_components(&m, w, h, false);
        assert_eq!(count, 2);
        assert_eq!(labels[0], labels[1]);
        assert_eq!(labels[1], labels[4]);
        assert_ne!(labels[4], labels[8]);
        assert_eq!(labels[2], 0);
    }

    #[test]
    fn window_mapping() {
        let w = Window::new(0.0, 1.0, 0.5, 1.0).unwrap();
        assert!(w.wraps_a());
        let (a, b) = w.cell_center(0, 0, 4, 4);
        assert!((a - 0.125).abs() < 1e-15 && (b - 0.5625).abs() < 1e-15);
        assert_eq!(w.cell_of(a, b, 4, 4), (0, 0));
        assert_eq!(w.cell_of(1.0, 1.0, 4, 4), (3, 3)); // clamped top corner
        assert!(Window::new(0.3, 0.3, 0.0, 1.0).is_err());
        let narrow = Window::new(0.2, 0.7, 0.5, 1.0).unwrap();
        assert!(!narrow.wraps_a());
    }
}
