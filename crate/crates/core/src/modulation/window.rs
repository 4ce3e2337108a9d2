use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::spectral::GridSpec;

/// Smooth bump `exp(1 - 1/(1 - x²))` on `(-1, 1)`, zero outside.
pub fn bump(x: f64) -> f64 {
    let t = 1.0 - x * x;
    if t <= 0.0 {
        0.0
    } else {
        (1.0 - 1.0 / t).exp()
    }
}

/// Weights of the one-dimensional partition at `x`: `(k, σ(x - k))` for the
/// two lattice points whose bumps can be nonzero there.
pub fn axis_weights(x: f64) -> (i64, [f64; 2]) {
    let base = x.floor();
    let r = x - base;
    let lo = bump(r);
    let hi = bump(r - 1.0);
    let total = lo + hi;
    (base as i64, [lo / total, hi / total])
}

/// One-dimensional factor `σ(x) = bump(x) / Σ_k bump(x - k)`.
pub fn axis_sigma(x: f64) -> f64 {
    if x.abs() >= 1.0 {
        return 0.0;
    }
    let (base, w) = axis_weights(x);
    match base {
        0 => w[0],
        -1 => w[1],
        _ => 0.0,
    }
}

/// Product window `σ₀(ξ) = Π_j σ(ξ_j)` and its translates `σ_k = σ₀(· - k)`.
///
/// The one-dimensional bump has radius 1, so `supp σ₀ ⊂ (-1, 1)^d ⊂ B(0, √d)`,
/// and the normalization by the periodized sum makes `Σ_k σ_k ≡ 1`.
#[derive(Debug, Clone)]
pub struct Window {
    grid: GridSpec,
    /// Per axis: lattice coordinate → (frequency slot, weight) pairs.
    axis_bands: Vec<BTreeMap<i64, Vec<(usize, f64)>>>,
    lower_bound_c: f64,
    kmax: i64,
}

/// Sampled checks of the three window conditions on the grid nodes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WindowCheck {
    /// `max |Σ_{k∈K} σ_k(ξ) - 1|` over all nodes.
    pub partition_residual: f64,
    /// `max σ₀(ξ)` over nodes with `|ξ| ≥ √d`; zero when the support holds.
    pub support_leak: f64,
    /// `min σ₀(η)` over nodes `η ∈ Q₀`.
    pub lower_bound_c: f64,
}

impl Window {
    pub fn build(d: usize, grid: &GridSpec) -> Result<Window> {
        if d != grid.dim() {
            return Err(Error::domain(
                "window dimension",
                format!("{d} does not match grid dimension {}", grid.dim()),
            ));
        }
        let required = 2.0 * (d as f64).sqrt();
        for axis in 0..d {
            let nyquist = grid.nyquist(axis);
            if nyquist < required {
                return Err(Error::Resolution {
                    axis,
                    nyquist,
                    required,
                });
            }
        }
        let axis_bands: Vec<_> = (0..d)
            .map(|axis| {
                let mut bands: BTreeMap<i64, Vec<(usize, f64)>> = BTreeMap::new();
                for (slot, &xi) in grid.axis_frequencies(axis).iter().enumerate() {
                    let (base, w) = axis_weights(xi);
                    for (offset, &weight) in w.iter().enumerate() {
                        if weight > 0.0 {
                            bands
                                .entry(base + offset as i64)
                                .or_default()
                                .push((slot, weight));
                        }
                    }
                }
                bands
            })
            .collect();
        let max_nyquist = (0..d).map(|a| grid.nyquist(a)).fold(0.0, f64::max);
        let kmax = max_nyquist.ceil() as i64 + 1;
        let mut window = Window {
            grid: grid.clone(),
            axis_bands,
            lower_bound_c: 0.0,
            kmax,
        };
        window.lower_bound_c = window.check().lower_bound_c;
        Ok(window)
    }

    pub fn dim(&self) -> usize {
        self.grid.dim()
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    /// Measured `c` with `σ₀ ≥ c` on the grid nodes of the unit cube.
    pub fn lower_bound_c(&self) -> f64 {
        self.lower_bound_c
    }

    /// Smallest lattice radius whose cube covers every resolved frequency.
    pub fn default_kmax(&self) -> i64 {
        self.kmax
    }

    /// `σ_k(ξ)` at an arbitrary point.
    pub fn sigma(&self, k: &[i64], xi: &[f64]) -> f64 {
        k.iter()
            .zip(xi)
            .map(|(&kj, &x)| axis_sigma(x - kj as f64))
            .product()
    }

    pub fn sigma0(&self, xi: &[f64]) -> f64 {
        xi.iter().map(|&x| axis_sigma(x)).product()
    }

    /// Frequency slots and weights of band `k` on one axis.
    pub(crate) fn axis_support(&self, axis: usize, k: i64) -> &[(usize, f64)] {
        self.axis_bands[axis].get(&k).map_or(&[], Vec::as_slice)
    }

    /// `Σ_{|k|_∞ ≤ kmax} σ_k(ξ)` at every node, in storage order.
    pub fn partition_sum(&self, kmax: i64) -> Vec<f64> {
        let per_axis: Vec<Vec<f64>> = (0..self.dim())
            .map(|axis| {
                let mut sums = vec![0.0; self.grid.points()[axis]];
                for (&k, entries) in &self.axis_bands[axis] {
                    if k.abs() <= kmax {
                        for &(slot, w) in entries {
                            sums[slot] += w;
                        }
                    }
                }
                sums
            })
            .collect();
        let mut out = Vec::with_capacity(self.grid.len());
        self.grid.for_each_index(|_, idx| {
            out.push(
                idx.iter()
                    .enumerate()
                    .map(|(a, &i)| per_axis[a][i])
                    .product(),
            );
        });
        out
    }

    pub fn check(&self) -> WindowCheck {
        let d = self.dim();
        let radius = (d as f64).sqrt();
        let sums = self.partition_sum(self.kmax);
        let partition_residual = sums.iter().map(|s| (s - 1.0).abs()).fold(0.0, f64::max);
        let mut support_leak: f64 = 0.0;
        let mut lower: f64 = f64::INFINITY;
        let values = self.grid.map_frequencies(|xi| {
            let norm = xi.iter().map(|x| x * x).sum::<f64>().sqrt();
            let in_cube = xi.iter().all(|x| x.abs() <= 0.5);
            (norm, in_cube, self.sigma0(xi))
        });
        for (norm, in_cube, s) in values {
            if norm >= radius {
                support_leak = support_leak.max(s.abs());
            }
            if in_cube {
                lower = lower.min(s.abs());
            }
        }
        WindowCheck {
            partition_residual,
            support_leak,
            lower_bound_c: lower,
        }
    }
}

/// Build the frequency-uniform window for a grid.
pub fn build_window(d: usize, grid: &GridSpec) -> Result<Window> {
    Window::build(d, grid)
}

/// All lattice points of the cube `|k|_∞ ≤ kmax` in lexicographic order.
pub fn lattice_cube(d: usize, kmax: i64) -> Vec<Vec<i64>> {
    let side = (2 * kmax + 1) as usize;
    let total = side.pow(d as u32);
    (0..total)
        .map(|mut flat| {
            let mut k = vec![0i64; d];
            for a in (0..d).rev() {
                k[a] = (flat % side) as i64 - kmax;
                flat /= side;
            }
            k
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bump_profile() {
        assert_eq!(bump(0.0), 1.0);
        assert_eq!(bump(1.0), 0.0);
        assert_eq!(bump(-1.5), 0.0);
        assert!(bump(0.999) > 0.0);
        assert!((bump(0.5) - bump(-0.5)).abs() < 1e-16);
    }

    #[test]
    fn one_dimensional_partition_is_exact() {
        for i in 0..=2000 {
            let x = -5.0 + i as f64 * 0.005;
            let total: f64 = (-7..=7).map(|k| axis_sigma(x - k as f64)).sum();
            assert!((total - 1.0).abs() < 1e-15, "x={x}");
        }
        assert_eq!(axis_sigma(0.0), 1.0);
        assert!((axis_sigma(0.5) - 0.5).abs() < 1e-15);
        assert_eq!(axis_sigma(1.0), 0.0);
    }

    #[test]
    fn window_conditions_hold_1d() {
        let grid = GridSpec::cube(1, 256, 64.0).unwrap();
        let w = build_window(1, &grid).unwrap();
        let c = w.check();
        assert!(c.partition_residual <= 1e-12);
        assert_eq!(c.support_leak, 0.0);
        assert!(c.lower_bound_c >= 0.5 && c.lower_bound_c < 0.6);
    }

    #[test]
    fn window_conditions_hold_2d() {
        let grid = GridSpec::cube(2, 64, 24.0).unwrap();
        let w = build_window(2, &grid).unwrap();
        let c = w.check();
        assert!(c.partition_residual <= 1e-12);
        assert_eq!(c.support_leak, 0.0);
        assert!(c.lower_bound_c >= 0.25);
    }

    #[test]
    fn coarse_grid_is_rejected() {
        // nyquist = π·8/16 ≈ 1.57 < 2
        let grid = GridSpec::cube(1, 8, 16.0).unwrap();
        assert!(matches!(
            build_window(1, &grid),
            Err(Error::Resolution { .. })
        ));
        let grid = GridSpec::cube(2, 8, 12.0).unwrap();
        assert!(matches!(
            build_window(2, &grid),
            Err(Error::Resolution { .. })
        ));
        assert!(build_window(2, &GridSpec::cube(1, 64, 4.0).unwrap()).is_err());
    }

    #[test]
    fn lattice_enumeration() {
        let ks = lattice_cube(2, 1);
        assert_eq!(ks.len(), 9);
        assert_eq!(ks[0], vec![-1, -1]);
        assert_eq!(ks[4], vec![0, 0]);
        assert_eq!(ks[8], vec![1, 1]);
    }
}
