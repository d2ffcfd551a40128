//! Numerical toolkit for fractional orbital-angular-momentum (OAM) photon
//! analyzers.
//!
//! A spiral phase plate (SPP) with a non-integer step index, followed by a
//! single-mode fiber, projects light onto a spatial mode that is a broad
//! superposition of Laguerre-Gaussian (LG) modes. Two such analyzers placed
//! in the arms of a spontaneous parametric down-conversion (SPDC) source
//! probe a very high dimensional entangled state. This crate provides the
//! numerics behind that picture:
//!
//! * [`lg`] — stable evaluation of LG modes and their index arithmetic,
//! * [`field`] — sampled complex fields on polar Gauss-Legendre grids,
//!   overlap integrals and the far-field transform,
//! * [`spp`] — spiral phase plates, ideal and with fabrication imperfections,
//! * [`analyzer`] — analyzer modes, modal spectra, fidelity curves, modal
//!   bandwidth extrapolation and the two-plate conversion efficiency,
//! * [`twophoton`] — coincidence fringes for entangled and separable
//!   two-photon models, Schmidt-number estimates and dimensionality reports.
//!
//! Conventions: lengths in millimetres, angles in radians, complex fields in
//! units where the squared norm is a probability.

pub mod analyzer;
pub mod error;
pub mod field;
pub mod lg;
pub mod special;
pub mod spp;
pub mod twophoton;

pub use analyzer::{AnalyzerSpec, ModalSpectrum};
pub use error::{Error, Result};
pub use field::{PolarGrid, SampledField};
pub use lg::{BasisParams, LGIndex};
pub use spp::{AnomalyModel, Spp, SppSpec};
pub use twophoton::{CrystalParams, DimensionalityReport, FringeCurve, SchmidtResult};
