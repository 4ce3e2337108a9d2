use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use super::window::{lattice_cube, Window};
use crate::error::{Error, Result};
use crate::spectral::{
    lp_norm, to_spectral, transform_in_place, ComplexField, Direction, Exponent, Representation,
};

/// Largest tolerated relative truncation residual for norm evaluation.
pub const TRUNCATION_LIMIT: f64 = 1e-10;

/// Bands holding less than this fraction of the spectral energy are left out
/// of norm computations; their share of any norm is below double precision.
pub const NEGLIGIBLE_BAND: f64 = 1e-32;

/// One isometric decomposition component `□_k f`.
#[derive(Debug, Clone)]
pub struct Band {
    pub k: Vec<i64>,
    pub field: ComplexField,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "state", rename_all = "lowercase")]
pub enum Coverage {
    Complete,
    /// The lattice cube missed part of the spectrum.
    Truncated {
        residual: f64,
    },
}

#[derive(Debug, Clone)]
pub struct BandDecomposition {
    pub kmax: i64,
    /// Bands in lexicographic order of `k`, physical representation.
    pub bands: Vec<Band>,
    /// `‖(1 - Σ_{k∈K} σ_k) f̂‖₂ / ‖f̂‖₂`.
    pub truncation_residual: f64,
    pub coverage: Coverage,
}

impl BandDecomposition {
    /// `Σ_k □_k f`, which equals `f` when the lattice covers the spectrum.
    pub fn reconstruct(&self) -> Result<ComplexField> {
        let mut iter = self.bands.iter();
        let first = iter
            .next()
            .ok_or_else(|| Error::domain("decomposition", "no bands"))?;
        let mut acc = first.field.clone();
        for band in iter {
            for (a, b) in acc.values_mut().iter_mut().zip(band.field.values()) {
                *a += b;
            }
        }
        Ok(acc)
    }

    pub fn band(&self, k: &[i64]) -> Option<&ComplexField> {
        self.bands.iter().find(|b| b.k == k).map(|b| &b.field)
    }
}

/// Spectral coefficients `σ_k · f̂` of one band, or `None` when the band
/// misses every grid node.
pub(crate) fn band_spectrum(
    window: &Window,
    spectrum: &[Complex64],
    k: &[i64],
) -> Option<Vec<Complex64>> {
    let grid = window.grid();
    let supports: Vec<&[(usize, f64)]> = k
        .iter()
        .enumerate()
        .map(|(axis, &kj)| window.axis_support(axis, kj))
        .collect();
    if supports.iter().any(|s| s.is_empty()) {
        return None;
    }
    let strides = grid.strides();
    let mut out = vec![Complex64::new(0.0, 0.0); grid.len()];
    let d = k.len();
    let mut pos = vec![0usize; d];
    loop {
        let mut offset = 0;
        let mut weight = 1.0;
        for a in 0..d {
            let (slot, w) = supports[a][pos[a]];
            offset += slot * strides[a];
            weight *= w;
        }
        out[offset] = spectrum[offset] * weight;
        let mut a = d;
        loop {
            if a == 0 {
                return Some(out);
            }
            a -= 1;
            pos[a] += 1;
            if pos[a] < supports[a].len() {
                break;
            }
            pos[a] = 0;
        }
    }
}

/// Physical samples of `□_k f` given the spectrum of `f`.
pub(crate) fn band_field(
    window: &Window,
    spectrum: &[Complex64],
    k: &[i64],
) -> Option<Vec<Complex64>> {
    band_spectrum(window, spectrum, k).map(|mut values| {
        transform_in_place(window.grid(), &mut values, Direction::Inverse);
        values
    })
}

pub(crate) fn truncation_residual(window: &Window, spectrum: &[Complex64], kmax: i64) -> f64 {
    let sums = window.partition_sum(kmax);
    let mut missed = 0.0;
    let mut total = 0.0;
    for (v, s) in spectrum.iter().zip(sums) {
        total += v.norm_sqr();
        missed += v.norm_sqr() * (1.0 - s).powi(2);
    }
    if total == 0.0 {
        0.0
    } else {
        (missed / total).sqrt()
    }
}

fn spectrum_on_window(f: &ComplexField, window: &Window) -> Result<ComplexField> {
    if f.grid() != window.grid() {
        return Err(Error::GridMismatch);
    }
    to_spectral(f)
}

/// `□_k f = ℱ⁻¹ σ_k ℱ f` for every `|k|_∞ ≤ kmax`.
///
/// With `kmax = None` the window's covering radius is used. A smaller radius
/// is honoured but reported through [`Coverage::Truncated`].
pub fn decompose(
    f: &ComplexField,
    window: &Window,
    kmax: Option<i64>,
) -> Result<BandDecomposition> {
    let spectrum = spectrum_on_window(f, window)?;
    let kmax = kmax.unwrap_or_else(|| window.default_kmax());
    let lattice = lattice_cube(window.dim(), kmax);
    let grid = window.grid().clone();
    let bands = lattice
        .into_par_iter()
        .map(|k| {
            let values = band_field(window, spectrum.values(), &k)
                .unwrap_or_else(|| vec![Complex64::new(0.0, 0.0); grid.len()]);
            let field = ComplexField::new(grid.clone(), values, Representation::Physical)?;
            Ok(Band { k, field })
        })
        .collect::<Result<Vec<_>>>()?;
    let residual = truncation_residual(window, spectrum.values(), kmax);
    let coverage = if residual > 1e-12 {
        Coverage::Truncated { residual }
    } else {
        Coverage::Complete
    };
    Ok(BandDecomposition {
        kmax,
        bands,
        truncation_residual: residual,
        coverage,
    })
}

/// `‖□_k f‖_p` for every non-negligible band on the covering lattice, in
/// lexicographic order of `k`.
pub fn band_norms(f: &ComplexField, window: &Window, p: Exponent) -> Result<Vec<(Vec<i64>, f64)>> {
    if !f.is_finite() {
        return Err(Error::domain("field", "non-finite values"));
    }
    let spectrum = spectrum_on_window(f, window)?;
    let kmax = window.default_kmax();
    let residual = truncation_residual(window, spectrum.values(), kmax);
    if residual > TRUNCATION_LIMIT {
        return Err(Error::Truncation {
            residual,
            limit: TRUNCATION_LIMIT,
        });
    }
    let grid = window.grid().clone();
    let floor = NEGLIGIBLE_BAND * spectrum.sum_sq();
    lattice_cube(window.dim(), kmax)
        .into_par_iter()
        .filter_map(|k| {
            let mut values = band_spectrum(window, spectrum.values(), &k)?;
            let energy: f64 = values.iter().map(|v| v.norm_sqr()).sum();
            if energy == 0.0 || energy < floor {
                return None;
            }
            transform_in_place(&grid, &mut values, Direction::Inverse);
            Some(
                ComplexField::new(grid.clone(), values, Representation::Physical)
                    .and_then(|field| Ok((k.clone(), lp_norm(&field, p)?))),
            )
        })
        .collect()
}
