//! Spiral phase plates (SPPs) as pointwise transmission functions.
//!
//! An SPP imprints the azimuth-dependent phase `2 pi l * frac((phi - alpha)/2pi)`
//! on an incident field: the phase climbs linearly with azimuth and drops by
//! `2 pi l` across the radial edge at azimuth `alpha`. Non-integer step
//! indices `l` make the output field non-cylindrically-symmetric, with a
//! mixed screw-edge dislocation along the edge.
//!
//! Besides the ideal plate, the model covers three measured fabrication
//! imperfections: a finite azimuthal ramp replacing the abrupt step, a small
//! central anomaly (opaque disk by default, a scrambled-phase disk as an
//! alternative -- both are guesses, the physical nature of the anomaly is not
//! characterized), and a smooth pseudo-random surface-height error screen of
//! configurable rms.

use crate::error::{Error, Result};
use crate::field::SampledField;
use ndarray::Array2;
use num_complex::Complex64;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// How the central fabrication anomaly is modelled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AnomalyModel {
    /// Zero transmission inside the anomaly radius (conservative: the defect
    /// shows up as a measurable loss).
    #[default]
    Opaque,
    /// Unit transmission with a deterministic pseudo-random phase inside.
    ScrambledPhase,
}

/// Full description of one spiral phase plate.
#[derive(Debug, Clone, PartialEq)]
pub struct SppSpec {
    /// Step index `l` (signed, any real value).
    pub step_index: f64,
    /// Azimuth of the radial edge, radians in [0, 2pi).
    pub orientation: f64,
    /// Azimuthal width of the linear step ramp, radians in [0, pi/2).
    /// Zero means an abrupt step. The ramp is centered on the edge azimuth.
    pub ramp_width: f64,
    /// Radius of the central anomaly, mm (0 = none).
    pub anomaly_radius: f64,
    /// rms of the surface-height error, mm (0 = none).
    pub surface_rms: f64,
    /// Wavelength at which `step_index` is realized, mm.
    pub wavelength: f64,
    /// Seed of the deterministic roughness screen.
    pub roughness_seed: u64,
    /// Anomaly model; not part of the plain-text config block (defaults to
    /// opaque there).
    pub anomaly_model: AnomalyModel,
}

/// Index contrast (plate minus surroundings) used to convert surface-height
/// errors into phase errors: molded polymer in air.
pub const PLATE_INDEX_CONTRAST: f64 = 0.5;

/// Radial extent over which the roughness screen's radial harmonics live, mm
/// (a typical plate clear aperture).
const SCREEN_REFERENCE_RADIUS: f64 = 5.0;

/// Highest azimuthal/radial harmonic of the roughness screen.
const SCREEN_MAX_HARMONIC: usize = 16;

impl SppSpec {
    /// An ideal plate: abrupt step, no anomaly, no roughness.
    pub fn ideal(step_index: f64, orientation: f64, wavelength: f64) -> Self {
        Self {
            step_index,
            orientation: orientation.rem_euclid(2.0 * PI),
            ramp_width: 0.0,
            anomaly_radius: 0.0,
            surface_rms: 0.0,
            wavelength,
            roughness_seed: 0,
            anomaly_model: AnomalyModel::Opaque,
        }
    }

    pub fn is_ideal(&self) -> bool {
        self.ramp_width == 0.0 && self.anomaly_radius == 0.0 && self.surface_rms == 0.0
    }

    pub fn with_orientation(mut self, alpha: f64) -> Self {
        self.orientation = alpha.rem_euclid(2.0 * PI);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..PI / 2.0).contains(&self.ramp_width) {
            return Err(Error::InvalidArgument(format!(
                "ramp_width must lie in [0, pi/2) (got {})",
                self.ramp_width
            )));
        }
        if self.anomaly_radius < 0.0 || self.surface_rms < 0.0 {
            return Err(Error::InvalidArgument(
                "anomaly_radius and surface_rms must be non-negative".into(),
            ));
        }
        if !(self.wavelength > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "wavelength must be positive (got {})",
                self.wavelength
            )));
        }
        Ok(())
    }

    /// Parse from the flat plain-text configuration block.
    pub fn from_config_str(text: &str) -> Result<Self> {
        let cfg: SppConfig =
            toml::from_str(text).map_err(|e| Error::ConfigParse(e.to_string()))?;
        let spec = SppSpec::from(&cfg);
        spec.validate()?;
        Ok(spec)
    }

    /// Serialize to the flat plain-text configuration block.
    pub fn to_config_string(&self) -> String {
        toml::to_string(&SppConfig::from(self)).expect("spp config serializes")
    }
}

/// Plain-text configuration block of one plate. Keys and units are fixed:
/// angles in degrees, anomaly radius in micrometres, surface rms in
/// nanometres, wavelength in nanometres.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SppConfig {
    pub step_index: f64,
    pub orientation_deg: f64,
    pub ramp_width_deg: f64,
    pub anomaly_radius_um: f64,
    pub surface_rms_nm: f64,
    pub wavelength_nm: f64,
    pub roughness_seed: u64,
}

impl From<&SppSpec> for SppConfig {
    fn from(s: &SppSpec) -> Self {
        Self {
            step_index: s.step_index,
            orientation_deg: s.orientation.to_degrees(),
            ramp_width_deg: s.ramp_width.to_degrees(),
            anomaly_radius_um: s.anomaly_radius * 1e3,
            surface_rms_nm: s.surface_rms * 1e6,
            wavelength_nm: s.wavelength * 1e6,
            roughness_seed: s.roughness_seed,
        }
    }
}

impl From<&SppConfig> for SppSpec {
    fn from(c: &SppConfig) -> Self {
        Self {
            step_index: c.step_index,
            orientation: c.orientation_deg.to_radians().rem_euclid(2.0 * PI),
            ramp_width: c.ramp_width_deg.to_radians(),
            anomaly_radius: c.anomaly_radius_um * 1e-3,
            surface_rms: c.surface_rms_nm * 1e-6,
            wavelength: c.wavelength_nm * 1e-6,
            roughness_seed: c.roughness_seed,
            anomaly_model: AnomalyModel::Opaque,
        }
    }
}

/// Step index realized by a physical plate: `l = h_s (n - n0) / lambda`.
pub fn step_index_from_plate(step_height: f64, n_plate: f64, n_surround: f64, wavelength: f64) -> f64 {
    assert!(wavelength > 0.0, "wavelength must be positive");
    step_height * (n_plate - n_surround) / wavelength
}

/// Smooth pseudo-random height-error screen on a low-order harmonic basis,
/// scaled to unit rms over the reference disk. The screen is attached to the
/// plate frame, so it rotates with the plate orientation.
#[derive(Debug, Clone)]
struct RoughnessScreen {
    /// cos(m phi) coefficients, indexed [m][n] over radial harmonics n.
    a: Vec<Vec<f64>>,
    /// sin(m phi) coefficients.
    b: Vec<Vec<f64>>,
    scale: f64,
}

impl RoughnessScreen {
    fn new(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = SCREEN_MAX_HARMONIC + 1;
        let mut a = vec![vec![0.0; n]; n];
        let mut b = vec![vec![0.0; n]; n];
        for m in 0..n {
            for k in 0..n {
                a[m][k] = rng.sample(StandardNormal);
                b[m][k] = rng.sample(StandardNormal);
            }
        }
        let mut screen = Self { a, b, scale: 1.0 };
        // Normalize the realized (not ensemble) rms over the reference disk,
        // measured on a fixed internal quadrature so the scale is independent
        // of whatever grid the screen is later evaluated on.
        let (nodes, weights) = crate::special::gauss_legendre(48);
        let half = 0.5 * SCREEN_REFERENCE_RADIUS;
        let n_az = 128;
        let mut ms = 0.0;
        for (x, w) in nodes.iter().zip(&weights) {
            let r = half * (x + 1.0);
            let wr = w * half * r;
            for j in 0..n_az {
                let phi = (j as f64 + 0.5) * 2.0 * PI / n_az as f64;
                let s = screen.eval_raw(r, phi);
                ms += wr * s * s * (2.0 * PI / n_az as f64);
            }
        }
        ms /= PI * SCREEN_REFERENCE_RADIUS * SCREEN_REFERENCE_RADIUS;
        screen.scale = 1.0 / ms.sqrt();
        screen
    }

    fn eval_raw(&self, r: f64, phi: f64) -> f64 {
        let u = PI * r / SCREEN_REFERENCE_RADIUS;
        let mut sum = 0.0;
        for m in 0..=SCREEN_MAX_HARMONIC {
            let (sin_m, cos_m) = (m as f64 * phi).sin_cos();
            let mut radial = 0.0;
            for k in 0..=SCREEN_MAX_HARMONIC {
                radial += (self.a[m][k] * cos_m + self.b[m][k] * sin_m) * (k as f64 * u).cos();
            }
            sum += radial;
        }
        sum
    }

    /// Unit-rms height error at plate-frame coordinates.
    fn eval(&self, r: f64, phi: f64) -> f64 {
        self.scale * self.eval_raw(r, phi)
    }
}

/// A compiled plate: the spec plus its precomputed roughness screen.
#[derive(Debug, Clone)]
pub struct Spp {
    spec: SppSpec,
    screen: Option<RoughnessScreen>,
}

impl Spp {
    pub fn new(spec: SppSpec) -> Result<Self> {
        spec.validate()?;
        let screen = if spec.surface_rms > 0.0 {
            Some(RoughnessScreen::new(spec.roughness_seed))
        } else {
            None
        };
        Ok(Self { spec, screen })
    }

    pub fn spec(&self) -> &SppSpec {
        &self.spec
    }

    /// Thickness fraction g(psi) in [0, 1] at plate-frame azimuth psi: rises
    /// linearly over the main sector and descends across the ramp sector
    /// centered on the edge (psi = 0). With zero ramp width this is psi/2pi.
    fn thickness_fraction(&self, psi: f64) -> f64 {
        let w = self.spec.ramp_width;
        if w <= 0.0 {
            return psi / (2.0 * PI);
        }
        let half = 0.5 * w;
        if psi < half {
            (half - psi) / w
        } else if psi > 2.0 * PI - half {
            1.0 - (psi - (2.0 * PI - half)) / w
        } else {
            (psi - half) / (2.0 * PI - w)
        }
    }

    /// Phase retardation at (r, phi), radians.
    ///
    /// For a plate with an opaque anomaly the value inside the anomaly radius
    /// is the regular profile (the transmission there is zero anyway); for a
    /// scrambled-phase anomaly it is the scrambled phase.
    pub fn phase_at(&self, r: f64, phi: f64) -> f64 {
        debug_assert!(r >= 0.0);
        let psi = (phi - self.spec.orientation).rem_euclid(2.0 * PI);
        if r < self.spec.anomaly_radius && self.spec.anomaly_model == AnomalyModel::ScrambledPhase {
            return self.scrambled_phase(r, psi);
        }
        let mut phase = 2.0 * PI * self.spec.step_index * self.thickness_fraction(psi);
        if let Some(screen) = &self.screen {
            let height = self.spec.surface_rms * screen.eval(r, psi);
            phase += 2.0 * PI * height * PLATE_INDEX_CONTRAST / self.spec.wavelength;
        }
        phase
    }

    /// Pointwise transmission factor (phase, and amplitude 0 inside an
    /// opaque anomaly).
    pub fn transmission_at(&self, r: f64, phi: f64) -> Complex64 {
        if r < self.spec.anomaly_radius && self.spec.anomaly_model == AnomalyModel::Opaque {
            return Complex64::new(0.0, 0.0);
        }
        Complex64::from_polar(1.0, self.phase_at(r, phi))
    }

    /// Deterministic pseudo-random phase inside a scrambled anomaly,
    /// bucketed at quarter-wavelength radial and 1/4096-turn azimuthal
    /// resolution in the plate frame.
    fn scrambled_phase(&self, r: f64, psi: f64) -> f64 {
        let rq = (r / (self.spec.wavelength * 0.25)).round() as u64;
        let aq = (psi / (2.0 * PI / 4096.0)).round() as u64 % 4096;
        let mut h = self
            .spec
            .roughness_seed
            .wrapping_mul(0x9e3779b97f4a7c15)
            .wrapping_add(rq)
            .wrapping_mul(0xbf58476d1ce4e5b9)
            .wrapping_add(aq);
        // splitmix64 finalizer
        h ^= h >> 30;
        h = h.wrapping_mul(0xbf58476d1ce4e5b9);
        h ^= h >> 27;
        h = h.wrapping_mul(0x94d049bb133111eb);
        h ^= h >> 31;
        (h as f64 / u64::MAX as f64) * 2.0 * PI
    }

    /// Apply the plate to a sampled field (pointwise multiplication by the
    /// transmission). Pure phase unless an opaque anomaly removes power.
    pub fn apply(&self, f: &SampledField) -> SampledField {
        let grid = f.grid().clone();
        let (nr, na) = (grid.n_radial(), grid.n_azimuthal());
        let rows: Vec<Vec<Complex64>> = (0..nr)
            .into_par_iter()
            .map(|i| {
                let r = grid.radial_nodes()[i];
                (0..na)
                    .map(|j| f.values()[[i, j]] * self.transmission_at(r, grid.azimuth(j)))
                    .collect()
            })
            .collect();
        let mut values = Array2::zeros((nr, na));
        for (i, row) in rows.into_iter().enumerate() {
            for (j, v) in row.into_iter().enumerate() {
                values[[i, j]] = v;
            }
        }
        SampledField::from_values(&grid, values)
    }
}

/// Phase retardation of a plate described by `spec` at one point.
/// Convenience wrapper; for whole-grid work build the [`Spp`] once.
pub fn phase_profile(spec: &SppSpec, r: f64, phi: f64) -> Result<f64> {
    Ok(Spp::new(spec.clone())?.phase_at(r, phi))
}
