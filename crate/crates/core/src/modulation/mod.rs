//! Frequency-uniform decomposition and modulation-space norms.

mod decompose;
mod defect;
mod norm;
mod window;

pub use decompose::{
    band_norms, decompose, Band, BandDecomposition, Coverage, NEGLIGIBLE_BAND, TRUNCATION_LIMIT,
};
pub use defect::{embedding_defect, embedding_holds, holder_defect, Defect};
pub use norm::{japanese_bracket, modulation_norm, time_decay_norm, DecaySeries, WeightedSup};
pub use window::{axis_sigma, build_window, bump, lattice_cube, Window, WindowCheck};

pub(crate) use decompose::band_field;
