//! Unitary N-d discrete Fourier transforms over [`GridSpec`] storage.
//!
//! Both directions carry a `1/√n` factor per axis, so the transform pair is
//! an isometry of plain `Σ|v|²`. Plans come from a process-wide cache and are
//! shared across threads.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use rustfft::{Fft, FftDirection, FftPlanner};

use super::field::{ComplexField, Representation};
use super::grid::GridSpec;
use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Inverse,
}

type PlanKey = (usize, bool);
type PlanCache = (FftPlanner<f64>, HashMap<PlanKey, Arc<dyn Fft<f64>>>);

fn plan(n: usize, direction: Direction) -> Arc<dyn Fft<f64>> {
    static CACHE: OnceLock<Mutex<PlanCache>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new((FftPlanner::new(), HashMap::new())));
    let mut guard = cache.lock().unwrap_or_else(|e| e.into_inner());
    let (planner, plans) = &mut *guard;
    let forward = direction == Direction::Forward;
    plans
        .entry((n, forward))
        .or_insert_with(|| {
            planner.plan_fft(
                n,
                if forward {
                    FftDirection::Forward
                } else {
                    FftDirection::Inverse
                },
            )
        })
        .clone()
}

/// Transform raw storage in place along every axis of `grid`.
pub fn transform_in_place(grid: &GridSpec, data: &mut [Complex64], direction: Direction) {
    debug_assert_eq!(data.len(), grid.len());
    let strides = grid.strides();
    for (axis, &n) in grid.points().iter().enumerate() {
        let fft = plan(n, direction);
        let stride = strides[axis];
        let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
        // Lines that are identically zero stay zero; band spectra are mostly such lines.
        let zero = Complex64::new(0.0, 0.0);
        if stride == 1 {
            for line in data.chunks_exact_mut(n) {
                if line.iter().any(|v| *v != zero) {
                    fft.process_with_scratch(line, &mut scratch);
                }
            }
        } else {
            let block = n * stride;
            let mut line = vec![Complex64::new(0.0, 0.0); n];
            for outer in (0..data.len()).step_by(block) {
                for inner in 0..stride {
                    let base = outer + inner;
                    for (j, slot) in line.iter_mut().enumerate() {
                        *slot = data[base + j * stride];
                    }
                    if line.iter().all(|v| *v == zero) {
                        continue;
                    }
                    fft.process_with_scratch(&mut line, &mut scratch);
                    for (j, v) in line.iter().enumerate() {
                        data[base + j * stride] = *v;
                    }
                }
            }
        }
    }
    let norm = 1.0 / (grid.len() as f64).sqrt();
    for v in data.iter_mut() {
        *v *= norm;
    }
}

/// Physical → spectral, unitary normalization.
pub fn forward_transform(f: &ComplexField) -> Result<ComplexField> {
    f.expect(Representation::Physical)?;
    let mut values = f.values().to_vec();
    transform_in_place(f.grid(), &mut values, Direction::Forward);
    ComplexField::new(f.grid().clone(), values, Representation::Spectral)
}

/// Spectral → physical, exact inverse of [`forward_transform`].
pub fn inverse_transform(f: &ComplexField) -> Result<ComplexField> {
    f.expect(Representation::Spectral)?;
    let mut values = f.values().to_vec();
    transform_in_place(f.grid(), &mut values, Direction::Inverse);
    ComplexField::new(f.grid().clone(), values, Representation::Physical)
}

/// Bring any field to the spectral representation.
pub fn to_spectral(f: &ComplexField) -> Result<ComplexField> {
    match f.representation() {
        Representation::Spectral => Ok(f.clone()),
        Representation::Physical => forward_transform(f),
    }
}

/// Bring any field to the physical representation.
pub fn to_physical(f: &ComplexField) -> Result<ComplexField> {
    match f.representation() {
        Representation::Physical => Ok(f.clone()),
        Representation::Spectral => inverse_transform(f),
    }
}
