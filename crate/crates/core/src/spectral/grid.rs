use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Sampling geometry of a periodic box standing in for ℝ^d.
///
/// Values are stored row-major with axis 0 slowest. Axis 0 is the
/// anisotropic direction `x₁` of the dispersion symbol. Physical nodes sit at
/// `x = -L/2 + i·Δx`; frequency nodes are laid out in FFT order,
/// `ξ = 2πk/L` with `k = 0, 1, …, n/2-1, -n/2, …, -1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GridShape", into = "GridShape")]
pub struct GridSpec {
    points: Vec<usize>,
    lengths: Vec<f64>,
    #[serde(skip)]
    freqs: Vec<Vec<f64>>,
}

#[derive(Serialize, Deserialize)]
struct GridShape {
    points: Vec<usize>,
    lengths: Vec<f64>,
}

impl TryFrom<GridShape> for GridSpec {
    type Error = Error;

    fn try_from(shape: GridShape) -> Result<Self> {
        GridSpec::new(&shape.points, &shape.lengths)
    }
}

impl From<GridSpec> for GridShape {
    fn from(grid: GridSpec) -> Self {
        GridShape {
            points: grid.points,
            lengths: grid.lengths,
        }
    }
}

impl GridSpec {
    pub fn new(points: &[usize], lengths: &[f64]) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidGrid("dimension must be at least 1".into()));
        }
        if points.len() != lengths.len() {
            return Err(Error::InvalidGrid(format!(
                "{} point counts but {} box lengths",
                points.len(),
                lengths.len()
            )));
        }
        for (axis, (&n, &l)) in points.iter().zip(lengths).enumerate() {
            if n < 4 || !n.is_power_of_two() {
                return Err(Error::InvalidGrid(format!(
                    "axis {axis}: {n} points, need a power of two >= 4"
                )));
            }
            if !(l.is_finite() && l > 0.0) {
                return Err(Error::InvalidGrid(format!(
                    "axis {axis}: box length {l} must be positive"
                )));
            }
        }
        let freqs = points
            .iter()
            .zip(lengths)
            .map(|(&n, &l)| {
                (0..n)
                    .map(|i| 2.0 * PI * signed_index(i, n) as f64 / l)
                    .collect()
            })
            .collect();
        Ok(GridSpec {
            points: points.to_vec(),
            lengths: lengths.to_vec(),
            freqs,
        })
    }

    /// Same point count and box length on every axis.
    pub fn cube(d: usize, n: usize, length: f64) -> Result<Self> {
        GridSpec::new(&vec![n; d], &vec![length; d])
    }

    pub fn dim(&self) -> usize {
        self.points.len()
    }

    pub fn points(&self) -> &[usize] {
        &self.points
    }

    pub fn lengths(&self) -> &[f64] {
        &self.lengths
    }

    /// Total number of nodes.
    pub fn len(&self) -> usize {
        self.points.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        self.lengths[axis] / self.points[axis] as f64
    }

    /// Volume element Π Δx_j of the discrete physical measure.
    pub fn cell_volume(&self) -> f64 {
        (0..self.dim()).map(|a| self.spacing(a)).product()
    }

    pub fn volume(&self) -> f64 {
        self.lengths.iter().product()
    }

    /// Largest resolved angular frequency `π n / L` on an axis.
    pub fn nyquist(&self, axis: usize) -> f64 {
        PI / self.spacing(axis)
    }

    pub fn min_nyquist(&self) -> f64 {
        (0..self.dim())
            .map(|a| self.nyquist(a))
            .fold(f64::INFINITY, f64::min)
    }

    /// Frequency nodes of one axis in FFT order.
    pub fn axis_frequencies(&self, axis: usize) -> &[f64] {
        &self.freqs[axis]
    }

    /// Physical coordinate of node `i` on an axis.
    pub fn position(&self, axis: usize, i: usize) -> f64 {
        -0.5 * self.lengths[axis] + i as f64 * self.spacing(axis)
    }

    /// Signed lattice index `k` of FFT-ordered node `i`, the centered view.
    pub fn centered_index(&self, axis: usize, i: usize) -> i64 {
        signed_index(i, self.points[axis])
    }

    /// FFT-order slot of centered index `k` on an axis.
    pub fn slot_of(&self, axis: usize, k: i64) -> Option<usize> {
        let n = self.points[axis] as i64;
        if k < -n / 2 || k >= n / 2 {
            return None;
        }
        Some(k.rem_euclid(n) as usize)
    }

    pub fn strides(&self) -> Vec<usize> {
        let mut strides = vec![1; self.dim()];
        for a in (0..self.dim().saturating_sub(1)).rev() {
            strides[a] = strides[a + 1] * self.points[a + 1];
        }
        strides
    }

    /// Visit every node in storage order with its multi-index.
    pub fn for_each_index(&self, mut f: impl FnMut(usize, &[usize])) {
        let d = self.dim();
        let mut idx = vec![0usize; d];
        for flat in 0..self.len() {
            f(flat, &idx);
            for a in (0..d).rev() {
                idx[a] += 1;
                if idx[a] < self.points[a] {
                    break;
                }
                idx[a] = 0;
            }
        }
    }

    /// Evaluate `f(ξ)` at every frequency node, in storage order.
    pub fn map_frequencies<T>(&self, mut f: impl FnMut(&[f64]) -> T) -> Vec<T> {
        let mut out = Vec::with_capacity(self.len());
        let mut xi = vec![0.0; self.dim()];
        self.for_each_index(|_, idx| {
            for (a, &i) in idx.iter().enumerate() {
                xi[a] = self.freqs[a][i];
            }
            out.push(f(&xi));
        });
        out
    }

    /// Evaluate `f(x)` at every physical node, in storage order.
    pub fn map_positions<T>(&self, mut f: impl FnMut(&[f64]) -> T) -> Vec<T> {
        let mut out = Vec::with_capacity(self.len());
        let mut x = vec![0.0; self.dim()];
        self.for_each_index(|_, idx| {
            for (a, &i) in idx.iter().enumerate() {
                x[a] = self.position(a, i);
            }
            out.push(f(&x));
        });
        out
    }

    /// Mask of nodes lying in the outer `fraction` shell of the box on any axis.
    pub fn shell_mask(&self, fraction: f64) -> Vec<bool> {
        let widths: Vec<usize> = self
            .points
            .iter()
            .map(|&n| (n as f64 * fraction).floor() as usize)
            .collect();
        let mut mask = Vec::with_capacity(self.len());
        self.for_each_index(|_, idx| {
            let outer = idx
                .iter()
                .zip(&self.points)
                .zip(&widths)
                .any(|((&i, &n), &w)| i < w || i >= n - w);
            mask.push(outer);
        });
        mask
    }
}

fn signed_index(i: usize, n: usize) -> i64 {
    if i < n / 2 {
        i as i64
    } else {
        i as i64 - n as i64
    }
}
