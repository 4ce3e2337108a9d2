use serde::Serialize;

use super::norm::modulation_norm;
use super::window::Window;
use crate::error::{Error, Result};
use crate::spectral::{to_physical, ComplexField, Exponent, ModIndex};

/// An empirical ratio from one of the inequality meters. Zero inputs give
/// `ratio = 0` with `degenerate = true` instead of NaN.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Defect {
    pub ratio: f64,
    pub degenerate: bool,
}

impl Defect {
    fn degenerate() -> Self {
        Defect {
            ratio: 0.0,
            degenerate: true,
        }
    }
}

/// `‖fg‖_{M^s_{p,q}} / (‖f‖_{M^s_{p1,q}} ‖g‖_{M^s_{p2,q}})` with
/// `1/p = 1/p1 + 1/p2`, where `p = idx.p`.
pub fn holder_defect(
    f: &ComplexField,
    g: &ComplexField,
    p1: Exponent,
    p2: Exponent,
    idx: &ModIndex,
    window: &Window,
) -> Result<Defect> {
    let mismatch = idx.p.reciprocal() - p1.reciprocal() - p2.reciprocal();
    if mismatch.abs() > 1e-12 {
        return Err(Error::domain(
            "holder exponents",
            format!("1/{} != 1/{} + 1/{}", idx.p, p1, p2),
        ));
    }
    if !idx.is_admissible(window.dim()) {
        return Err(Error::domain(
            "holder index",
            format!(
                "(q, s) = ({}, {}) is not admissible in d = {}",
                idx.q,
                idx.s,
                window.dim()
            ),
        ));
    }
    let f = to_physical(f)?;
    let g = to_physical(g)?;
    if f.is_zero() || g.is_zero() {
        return Ok(Defect::degenerate());
    }
    let product = f.mul(&g)?;
    let num = modulation_norm(&product, idx, window)?;
    let den = modulation_norm(&f, &idx.with_p(p1), window)?
        * modulation_norm(&g, &idx.with_p(p2), window)?;
    Ok(Defect {
        ratio: num / den,
        degenerate: false,
    })
}

/// Whether `M^{s1}_{p1,q1} ↪ M^{s2}_{p2,q2}` is covered by the classical
/// sufficient conditions.
pub fn embedding_holds(from: &ModIndex, to: &ModIndex, d: usize) -> bool {
    let d = d as f64;
    from.p <= to.p
        && ((from.q <= to.q && from.s >= to.s)
            || (to.q < from.q && from.s > to.s + d * to.q.reciprocal() - d * from.q.reciprocal()))
}

/// `‖f‖_{target} / ‖f‖_{source}`, the empirical embedding constant on `f`.
pub fn embedding_defect(
    f: &ComplexField,
    from: &ModIndex,
    to: &ModIndex,
    window: &Window,
) -> Result<Defect> {
    if !embedding_holds(from, to, window.dim()) {
        return Err(Error::domain(
            "embedding indices",
            format!(
                "M^{}_{{{},{}}} -> M^{}_{{{},{}}} violates the embedding hypotheses",
                from.s, from.p, from.q, to.s, to.p, to.q
            ),
        ));
    }
    let source = modulation_norm(f, from, window)?;
    if source == 0.0 {
        return Ok(Defect::degenerate());
    }
    Ok(Defect {
        ratio: modulation_norm(f, to, window)? / source,
        degenerate: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn idx(p: f64, q: f64, s: f64) -> ModIndex {
        ModIndex::new(Exponent::new(p).unwrap(), Exponent::new(q).unwrap(), s).unwrap()
    }

    #[test]
    fn embedding_branches() {
        assert!(embedding_holds(&idx(2.0, 1.0, 0.0), &idx(2.0, 1.0, 0.0), 1));
        assert!(embedding_holds(
            &idx(4.0, 1.0, 0.0),
            &idx(f64::INFINITY, 1.0, 0.0),
            1
        ));
        assert!(!embedding_holds(
            &idx(4.0, 1.0, 0.0),
            &idx(2.0, 1.0, 0.0),
            1
        ));
        // q2 < q1 needs s1 > s2 + d/q2 - d/q1 = 0 + 1 - 1/2
        assert!(!embedding_holds(
            &idx(2.0, 2.0, 0.5),
            &idx(2.0, 1.0, 0.0),
            1
        ));
        assert!(embedding_holds(&idx(2.0, 2.0, 0.6), &idx(2.0, 1.0, 0.0), 1));
        assert!(!embedding_holds(
            &idx(2.0, 1.0, 0.0),
            &idx(2.0, 1.0, 1.0),
            1
        ));
    }
}
