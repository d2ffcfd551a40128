//! Analyzer modes and their Laguerre-Gaussian modal analysis.
//!
//! An analyzer is a spiral phase plate followed by a single-mode fiber: the
//! spatial mode it projects onto is the plate's transmission applied to the
//! fiber's fundamental Gaussian. This module decomposes that mode over the
//! LG basis, tracks how much power a truncated basis captures (the fidelity),
//! extrapolates the modal bandwidth needed for a target fidelity, and
//! evaluates the classical two-plate conversion efficiency.

use crate::error::{Error, Result};
use crate::field::{self, PolarGrid, SampledField};
use crate::lg::{self, BasisParams, LGIndex};
use crate::spp::{Spp, SppSpec};
use num_complex::Complex64;
use rayon::prelude::*;
use std::f64::consts::PI;
use std::io;
use std::sync::Arc;

/// A fractional-OAM analyzer: one plate plus the fiber mode waist as imaged
/// onto the plate plane.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalyzerSpec {
    pub spp: SppSpec,
    /// Waist of the fiber's fundamental Gaussian at the plate plane, mm.
    pub fiber_waist: f64,
}

impl AnalyzerSpec {
    pub fn new(spp: SppSpec, fiber_waist: f64) -> Result<Self> {
        if !(fiber_waist > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "fiber_waist must be positive (got {fiber_waist})"
            )));
        }
        spp.validate()?;
        Ok(Self { spp, fiber_waist })
    }

    pub fn with_orientation(&self, alpha: f64) -> Self {
        Self {
            spp: self.spp.clone().with_orientation(alpha),
            fiber_waist: self.fiber_waist,
        }
    }
}

/// Complex LG coefficients of a field up to a truncation order.
#[derive(Debug, Clone)]
pub struct ModalSpectrum {
    basis_waist: f64,
    max_order: u32,
    /// Entries in the canonical index order (ascending mode order, then l).
    entries: Vec<(LGIndex, Complex64)>,
    captured_power: f64,
}

impl ModalSpectrum {
    fn new(basis_waist: f64, max_order: u32, entries: Vec<(LGIndex, Complex64)>) -> Self {
        debug_assert!(entries.windows(2).all(|w| w[0].0 < w[1].0));
        let captured_power = entries.iter().map(|(_, c)| c.norm_sqr()).sum();
        Self {
            basis_waist,
            max_order,
            entries,
            captured_power,
        }
    }

    pub fn basis_waist(&self) -> f64 {
        self.basis_waist
    }

    pub fn max_order(&self) -> u32 {
        self.max_order
    }

    pub fn entries(&self) -> &[(LGIndex, Complex64)] {
        &self.entries
    }

    pub fn coefficient(&self, idx: LGIndex) -> Option<Complex64> {
        self.entries
            .binary_search_by(|(i, _)| i.cmp(&idx))
            .ok()
            .map(|k| self.entries[k].1)
    }

    /// Total captured power `sum |c|^2`; the fidelity of the truncated
    /// decomposition.
    pub fn captured_power(&self) -> f64 {
        self.captured_power
    }

    /// Captured power restricted to mode orders `<= order`.
    pub fn captured_power_up_to(&self, order: u32) -> f64 {
        self.entries
            .iter()
            .take_while(|(i, _)| i.order() <= order)
            .map(|(_, c)| c.norm_sqr())
            .sum()
    }

    /// Fraction of the captured power sitting in radial indices p >= 1.
    pub fn p_nonzero_share(&self) -> f64 {
        if self.captured_power == 0.0 {
            return 0.0;
        }
        let p1: f64 = self
            .entries
            .iter()
            .filter(|(i, _)| i.p >= 1)
            .map(|(_, c)| c.norm_sqr())
            .sum();
        p1 / self.captured_power
    }

    /// Rebuild the truncated field `sum c_{l,p} u_{l,p}` on a grid.
    pub fn synthesize(&self, grid: &Arc<PolarGrid>) -> SampledField {
        // Waist-plane modes do not depend on the wavelength.
        let params = BasisParams::new(self.basis_waist, 1.0).expect("positive waist");
        let entries = &self.entries;
        SampledField::from_fn(grid, |r, phi| {
            entries
                .iter()
                .map(|(idx, c)| c * lg::lg_eval(*idx, &params, r, phi))
                .sum()
        })
    }

    /// CSV with header `l,p,order,re,im,power`, rows in the canonical order.
    pub fn write_csv<W: io::Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "l,p,order,re,im,power")?;
        for (idx, c) in &self.entries {
            writeln!(
                w,
                "{},{},{},{},{},{}",
                idx.l,
                idx.p,
                idx.order(),
                c.re,
                c.im,
                c.norm_sqr()
            )?;
        }
        Ok(())
    }
}

/// Unit-norm fundamental Gaussian of the given waist (the fiber mode).
pub fn gaussian_input(grid: &Arc<PolarGrid>, waist: f64) -> SampledField {
    let params = BasisParams::new(waist, 1.0).expect("positive waist");
    SampledField::from_fn(grid, |r, phi| {
        lg::lg_eval(LGIndex::new(0, 0), &params, r, phi)
    })
}

/// The analyzer mode: plate transmission applied to the fiber Gaussian,
/// normalized to unit norm (after any anomaly loss).
pub fn analyzer_mode(spec: &AnalyzerSpec, grid: &Arc<PolarGrid>) -> Result<SampledField> {
    if spec.spp.ramp_width > 0.0 && grid.azimuthal_step() >= spec.spp.ramp_width / 4.0 {
        return Err(Error::GridTooCoarse(format!(
            "azimuthal step {} does not resolve the ramp width {} (need < ramp/4)",
            grid.azimuthal_step(),
            spec.spp.ramp_width
        )));
    }
    let plate = Spp::new(spec.spp.clone())?;
    plate.apply(&gaussian_input(grid, spec.fiber_waist)).normalized()
}

/// Quadrature-validity guideline for decomposing up to `max_order` in a
/// basis of waist `w`: the outermost radial lobe of an order-M mode sits
/// near `w sqrt(M+1)`, so the grid must extend at least one waist beyond it,
/// and the azimuthal sampling must hold the highest harmonic.
fn check_quadrature(grid: &PolarGrid, basis_waist: f64, max_order: u32) -> Result<()> {
    let needed = basis_waist * ((max_order as f64 + 1.0).sqrt() + 1.0);
    if grid.r_max() < needed {
        return Err(Error::GridTooCoarse(format!(
            "r_max {} too small for order {} at waist {} (need >= {:.3})",
            grid.r_max(),
            max_order,
            basis_waist,
            needed
        )));
    }
    if (max_order as usize) > grid.n_azimuthal() / 2 {
        return Err(Error::GridTooCoarse(format!(
            "n_azimuthal {} cannot hold harmonic {}",
            grid.n_azimuthal(),
            max_order
        )));
    }
    // Sentinel check: the highest-order basis modes must be normalized on
    // this quadrature, otherwise the radial rule is under-resolved.
    let params = BasisParams::new(basis_waist, 1.0).expect("positive waist");
    for idx in [
        LGIndex::new(max_order as i32, 0),
        LGIndex::new(max_order as i32 % 2, max_order / 2),
    ] {
        let quad_norm: f64 = grid
            .radial_nodes()
            .iter()
            .zip(grid.radial_weights())
            .map(|(&r, &w)| {
                let v = lg::lg_radial(idx, &params, r);
                w * v * v
            })
            .sum::<f64>()
            * 2.0
            * PI;
        if (quad_norm - 1.0).abs() > 1e-8 {
            return Err(Error::NotConverged(format!(
                "quadrature norm of sentinel mode {idx} is {quad_norm}, expected 1"
            )));
        }
    }
    Ok(())
}

/// LG coefficients `c_{l,p} = <u_{l,p} | f>` for all `|l| + 2p <= max_order`.
///
/// `f` must be unit-norm. The azimuthal projection is taken once per
/// harmonic by FFT; each coefficient then costs one radial quadrature.
pub fn decompose(f: &SampledField, basis_waist: f64, max_order: u32) -> Result<ModalSpectrum> {
    let grid = f.grid();
    check_quadrature(grid, basis_waist, max_order)?;
    let norm = f.norm_sq();
    if (norm - 1.0).abs() > 1e-6 {
        return Err(Error::InvalidArgument(format!(
            "decompose expects a unit-norm field (norm^2 = {norm})"
        )));
    }
    let coeffs = f.azimuthal_coefficients();
    let params = BasisParams::new(basis_waist, 1.0).expect("positive waist");
    let na = grid.n_azimuthal();
    let weights = grid.radial_weights();
    let nodes = grid.radial_nodes();

    let per_l: Vec<Vec<(LGIndex, Complex64)>> = (-(max_order as i32)..=max_order as i32)
        .into_par_iter()
        .map(|l| {
            let k = (l as i64).rem_euclid(na as i64) as usize;
            let p_max = (max_order - l.unsigned_abs()) / 2;
            (0..=p_max)
                .map(|p| {
                    let idx = LGIndex::new(l, p);
                    let c: Complex64 = nodes
                        .iter()
                        .zip(weights)
                        .enumerate()
                        .map(|(i, (&r, &w))| coeffs[[i, k]] * (w * lg::lg_radial(idx, &params, r)))
                        .sum();
                    (idx, c * 2.0 * PI)
                })
                .collect()
        })
        .collect();

    let mut entries: Vec<(LGIndex, Complex64)> = per_l.into_iter().flatten().collect();
    entries.sort_by(|a, b| a.0.cmp(&b.0));
    Ok(ModalSpectrum::new(basis_waist, max_order, entries))
}

/// Decompose a field produced by a generator, with a grid-convergence gate:
/// the captured power is recomputed on a doubled grid and the two must agree
/// to `1e-4`, otherwise the quadrature is declared non-converged.
pub fn decompose_converged<G>(
    generator: G,
    grid: &Arc<PolarGrid>,
    basis_waist: f64,
    max_order: u32,
) -> Result<ModalSpectrum>
where
    G: Fn(&Arc<PolarGrid>) -> Result<SampledField>,
{
    let spectrum = decompose(&generator(grid)?, basis_waist, max_order)?;
    let doubled = PolarGrid::new(grid.n_radial() * 2, grid.n_azimuthal() * 2, grid.r_max())?;
    let check = decompose(&generator(&doubled)?, basis_waist, max_order)?;
    let delta = (spectrum.captured_power() - check.captured_power()).abs();
    if delta > 1e-4 {
        return Err(Error::NotConverged(format!(
            "captured power moved by {delta:.2e} under grid doubling"
        )));
    }
    Ok(spectrum)
}

/// Fidelity (captured power) of the analyzer mode as a function of the
/// truncation order. Coefficients are independent of the truncation, so one
/// decomposition at the largest order yields every point as a partial sum.
pub fn fidelity_curve(
    spec: &AnalyzerSpec,
    basis_waist: f64,
    orders: &[u32],
    grid: &Arc<PolarGrid>,
) -> Result<Vec<(u32, f64)>> {
    if orders.is_empty() || orders.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidArgument(
            "orders must be non-empty and strictly ascending".into(),
        ));
    }
    let max_order = *orders.last().unwrap();
    let spectrum = decompose_converged(
        |g| analyzer_mode(spec, g),
        grid,
        basis_waist,
        max_order,
    )?;
    Ok(orders
        .iter()
        .map(|&m| (m, spectrum.captured_power_up_to(m)))
        .collect())
}

/// Power-law tail fitted to a fidelity curve.
#[derive(Debug, Clone, Copy)]
pub struct PowerLawFit {
    /// A in `1 - F(M) = A (M+1)^(-gamma)`.
    pub amplitude: f64,
    /// gamma in the same form.
    pub exponent: f64,
    /// rms residual of the fit in log-log space.
    pub rms_residual: f64,
}

/// Result of a modal-bandwidth extrapolation.
#[derive(Debug, Clone, Copy)]
pub struct BandwidthEstimate {
    /// Number of LG modes needed: `(M*+1)(M*+2)/2` rounded.
    pub mode_count: u64,
    /// The (real-valued) mode order at which the target fidelity is reached.
    pub m_star: f64,
    /// Present when the target lay beyond the curve and a fit was used.
    pub fit: Option<PowerLawFit>,
    /// False when the target was reached inside the curve (interpolation).
    pub extrapolated: bool,
}

/// Options for the bandwidth fit; the tail window starts at `min_order`.
#[derive(Debug, Clone, Copy)]
pub struct FitWindow {
    pub min_order: u32,
}

impl Default for FitWindow {
    fn default() -> Self {
        Self { min_order: 8 }
    }
}

fn count_for_m(m_star: f64) -> u64 {
    (((m_star + 1.0) * (m_star + 2.0)) / 2.0).round().max(1.0) as u64
}

/// Extrapolate the number of LG modes needed to reach `target_fidelity`,
/// fitting `1 - F(M) = A (M+1)^(-gamma)` by least squares on the log-log
/// tail of the curve (orders >= `window.min_order`).
///
/// If the target is already reached inside the curve the result is an
/// interpolation (flagged by `extrapolated = false`). Non-monotone curves
/// are rejected.
pub fn extrapolate_bandwidth(
    curve: &[(u32, f64)],
    target_fidelity: f64,
    window: FitWindow,
) -> Result<BandwidthEstimate> {
    if curve.len() < 6 {
        return Err(Error::InvalidArgument(format!(
            "need at least 6 curve points (got {})",
            curve.len()
        )));
    }
    if !(0.0 < target_fidelity && target_fidelity < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "target fidelity must lie in (0, 1) (got {target_fidelity})"
        )));
    }
    if curve.windows(2).any(|w| w[0].0 >= w[1].0) {
        return Err(Error::InvalidArgument("curve orders must be ascending".into()));
    }
    if curve.windows(2).any(|w| w[1].1 < w[0].1 - 1e-12) {
        return Err(Error::InvalidArgument(
            "non-monotone fidelity curve rejected".into(),
        ));
    }

    let max_f = curve.last().unwrap().1;
    if target_fidelity <= max_f {
        // Interpolate inside the curve.
        let k = curve.iter().position(|&(_, f)| f >= target_fidelity).unwrap();
        let m_star = if k == 0 || (curve[k].1 - target_fidelity).abs() < 1e-15 {
            curve[k].0 as f64
        } else {
            let (m0, f0) = (curve[k - 1].0 as f64, curve[k - 1].1);
            let (m1, f1) = (curve[k].0 as f64, curve[k].1);
            m0 + (target_fidelity - f0) / (f1 - f0) * (m1 - m0)
        };
        return Ok(BandwidthEstimate {
            mode_count: count_for_m(m_star),
            m_star,
            fit: None,
            extrapolated: false,
        });
    }

    let pts: Vec<(f64, f64)> = curve
        .iter()
        .filter(|&&(m, f)| m >= window.min_order && f < 1.0)
        .map(|&(m, f)| ((m as f64 + 1.0).ln(), (1.0 - f).ln()))
        .collect();
    if pts.len() < 2 {
        return Err(Error::InvalidArgument(
            "fit window leaves fewer than 2 usable points".into(),
        ));
    }
    // least squares: y = ln A - gamma x
    let n = pts.len() as f64;
    let sx: f64 = pts.iter().map(|p| p.0).sum();
    let sy: f64 = pts.iter().map(|p| p.1).sum();
    let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
    let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    let intercept = (sy - slope * sx) / n;
    let gamma = -slope;
    let amplitude = intercept.exp();
    if gamma <= 0.0 {
        return Err(Error::NotConverged(
            "fidelity tail does not decay; cannot extrapolate".into(),
        ));
    }
    let rms = (pts
        .iter()
        .map(|&(x, y)| {
            let e = y - (intercept + slope * x);
            e * e
        })
        .sum::<f64>()
        / n)
        .sqrt();
    let m_star = (amplitude / (1.0 - target_fidelity)).powf(1.0 / gamma) - 1.0;
    Ok(BandwidthEstimate {
        mode_count: count_for_m(m_star),
        m_star,
        fit: Some(PowerLawFit {
            amplitude,
            exponent: gamma,
            rms_residual: rms,
        }),
        extrapolated: true,
    })
}

/// Two-plate classical conversion result.
#[derive(Debug, Clone, Copy)]
pub struct TrainReport {
    /// Fidelity of one analyzer mode as measured by the other: the squared
    /// product integral of the two unit-norm analyzer modes. Anomaly
    /// transmission loss is normalized out (it is a loss, not a mode
    /// mismatch).
    pub efficiency: f64,
    /// Same overlap without normalizing the modes, i.e. including any
    /// anomaly transmission loss of both plates.
    pub raw_overlap: f64,
    /// True when the two step indices are complementary (b = -a).
    pub complementary: bool,
}

/// Conversion efficiency of two plates as an optical train: the first plate
/// converts the fiber Gaussian into an extended LG superposition, the second
/// converts it back; the efficiency is the fidelity of one analyzer mode as
/// measured by the other.
pub fn train_efficiency(
    spec_a: &AnalyzerSpec,
    spec_b: &AnalyzerSpec,
    grid: &Arc<PolarGrid>,
) -> Result<TrainReport> {
    if (spec_a.fiber_waist - spec_b.fiber_waist).abs() > 1e-12 * spec_a.fiber_waist {
        return Err(Error::InvalidArgument(
            "train requires matching fiber waists".into(),
        ));
    }
    let complementary = (spec_a.spp.step_index + spec_b.spp.step_index).abs()
        <= 1e-9 * (1.0 + spec_a.spp.step_index.abs());
    let mode_a = analyzer_mode(spec_a, grid)?;
    let mode_b = analyzer_mode(spec_b, grid)?;
    // The coupling amplitude through plate b of the incoming mode a is
    // <G| T_b mode_a> = integral of (mode_b * mode_a) for unit-norm modes.
    let amp = field::bilinear_overlap(&mode_a, &mode_b, None)?;
    let efficiency = amp.norm_sqr();

    let g = gaussian_input(grid, spec_a.fiber_waist);
    let plate_a = Spp::new(spec_a.spp.clone())?;
    let plate_b = Spp::new(spec_b.spp.clone())?;
    let through = plate_b.apply(&plate_a.apply(&g));
    let raw_overlap = field::inner_product(&g, &through)?.norm_sqr();

    Ok(TrainReport {
        efficiency,
        raw_overlap,
        complementary,
    })
}
