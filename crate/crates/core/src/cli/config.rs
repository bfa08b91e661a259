//! Run configuration. Every physical quantity is a string carrying its unit,
//! e.g. `"10 nm"`, `"415.9 THz"`, `"1.26e16 rad/s"`. Frequencies given in Hz
//! or THz are ordinary frequencies and are converted to angular frequency;
//! `rad/s` is taken as angular already. Unknown keys are rejected.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{de, Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::model::{Background, Geometry, MaterialModel, Point2, Resonator};
use crate::normalize::{DomainShape, NormOptions};
use crate::solver::pole::{Drive, PoleSearch};

/// A length in metres, written with a unit suffix.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default)]
pub struct Length(pub f64);

/// An angular frequency in rad/s, written with a unit suffix.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default)]
pub struct Frequency(pub f64);

fn split_unit(s: &str) -> Result<(f64, &str)> {
    let s = s.trim();
    let at = s
        .find(|c: char| c.is_ascii_alphabetic() && c != 'e' && c != 'E' || c == 'µ' || c == ' ')
        .unwrap_or(s.len());
    let (num, unit) = s.split_at(at);
    let value: f64 = num.trim().parse().map_err(|_| Error::Config(format!("bad number in quantity {s:?}")))?;
    if !value.is_finite() {
        return Err(Error::Config(format!("quantity {s:?} is not finite")));
    }
    Ok((value, unit.trim()))
}

impl FromStr for Length {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let (v, unit) = split_unit(s)?;
        let scale = match unit {
            "m" => 1.0,
            "mm" => 1e-3,
            "um" | "µm" => 1e-6,
            "nm" => 1e-9,
            _ => return Err(Error::Config(format!("{s:?}: length needs a unit of m, mm, um or nm"))),
        };
        Ok(Length(v * scale))
    }
}

impl FromStr for Frequency {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let (v, unit) = split_unit(s)?;
        let two_pi = 2.0 * std::f64::consts::PI;
        let w = match unit {
            "rad/s" => v,
            "Hz" => two_pi * v,
            "GHz" => two_pi * v * 1e9,
            "THz" => two_pi * v * 1e12,
            _ => return Err(Error::Config(format!("{s:?}: frequency needs a unit of THz, GHz, Hz or rad/s"))),
        };
        Ok(Frequency(w))
    }
}

impl fmt::Display for Length {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} nm", self.0 * 1e9)
    }
}

impl fmt::Display for Frequency {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} rad/s", self.0)
    }
}

macro_rules! string_serde {
    ($t:ty) => {
        impl Serialize for $t {
            fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
                s.collect_str(self)
            }
        }

        impl<'de> Deserialize<'de> for $t {
            fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
                String::deserialize(d)?.parse().map_err(de::Error::custom)
            }
        }
    };
}

string_serde!(Length);
string_serde!(Frequency);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum GeometryConfig {
    /// Rectangle centred at the origin, `width` along x and `length` along y.
    Rod { width: Length, length: Length },
    Cylinder { radius: Length },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MaterialConfig {
    Drude { omega_p: Frequency, gamma_d: Frequency },
    /// Dimensionless relative permittivity.
    Constant {
        eps_re: f64,
        #[serde(default)]
        eps_im: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    /// Cell size of the resonator discretization for the mode.
    pub h: Length,
    /// Cell size for the full-dipole oracle; defaults to `h`.
    #[serde(default)]
    pub oracle_h: Option<Length>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PoleConfig {
    /// Starting guess `Re w~` (positive) and `Im w~` (negative for decay).
    pub guess_re: Frequency,
    pub guess_im: Frequency,
    #[serde(default)]
    pub drive: Drive,
    /// Reject the pole unless it is the only one within this radius.
    #[serde(default)]
    pub basin_radius: Option<Frequency>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NormConfig {
    pub step: Length,
    pub max: Length,
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
    #[serde(default = "default_shape")]
    pub shape: DomainShape,
}

fn default_tolerance() -> f64 {
    NormOptions::default().tolerance
}

fn default_shape() -> DomainShape {
    NormOptions::default().shape
}

/// Emitter position and orientation (orientation is dimensionless).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmitterConfig {
    pub position: [Length; 2],
    pub orientation: [f64; 2],
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumConfig {
    pub emitter: EmitterConfig,
    /// Sweep `w_c +- span * gamma_c`.
    pub span_gamma: f64,
    pub points: usize,
    #[serde(default)]
    pub oracle: bool,
}

/// Emitters along a ray `start + s * direction`, `s` log-spaced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DistanceConfig {
    pub start: [Length; 2],
    pub direction: [f64; 2],
    pub orientation: [f64; 2],
    pub min: Length,
    pub max: Length,
    pub per_decade: usize,
    /// Standoffs at which the oracle is also solved.
    #[serde(default)]
    pub oracle_checkpoints: Vec<Length>,
}

/// Receivers along a ray, for a y-oriented source at `source`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PropagatorConfig {
    pub source: [Length; 2],
    pub start: [Length; 2],
    pub direction: [f64; 2],
    pub min: Length,
    pub max: Length,
    pub per_decade: usize,
    #[serde(default)]
    pub oracle_checkpoints: Vec<Length>,
}

/// Relative tolerances for the oracle comparisons in the report.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    pub spectrum: f64,
    pub distance: f64,
    pub propagator: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { spectrum: 0.10, distance: 0.10, propagator: 0.15 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub geometry: GeometryConfig,
    pub material: MaterialConfig,
    pub background_index: f64,
    pub grid: GridConfig,
    pub pole_search: PoleConfig,
    pub normalization: NormConfig,
    /// Reference point for the effective mode volume; default is the field
    /// maximum a few nm off the surface.
    #[serde(default)]
    pub r0: Option<[Length; 2]>,
    #[serde(default)]
    pub spectrum: Option<SpectrumConfig>,
    #[serde(default)]
    pub distance: Option<DistanceConfig>,
    #[serde(default)]
    pub propagator: Option<PropagatorConfig>,
    #[serde(default)]
    pub tolerances: Tolerances,
    /// Output directory, relative to the working directory.
    #[serde(default)]
    pub output: Option<String>,
}

fn point(p: [Length; 2]) -> Point2 {
    Point2::new(p[0].0, p[1].0)
}

fn unit(v: [f64; 2], what: &str) -> Result<Point2> {
    Point2::new(v[0], v[1]).normalized().ok_or_else(|| Error::Config(format!("{what} must be a non-zero vector")))
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let c: RunConfig = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Checks beyond what the schema enforces; run before any compute.
    pub fn validate(&self) -> Result<()> {
        self.resonator()?;
        let positive = |l: Length, what: &str| {
            if l.0 > 0.0 {
                Ok(())
            } else {
                Err(Error::Config(format!("{what} must be positive")))
            }
        };
        positive(self.grid.h, "grid.h")?;
        if let Some(h) = self.grid.oracle_h {
            positive(h, "grid.oracle_h")?;
        }
        if !(self.pole_search.guess_re.0 > 0.0) {
            return Err(Error::Config("pole_search.guess_re must be positive".into()));
        }
        positive(self.normalization.step, "normalization.step")?;
        if self.normalization.max.0 < 3.0 * self.normalization.step.0 {
            return Err(Error::Config("normalization needs at least three domain sizes".into()));
        }
        if !(self.normalization.tolerance > 0.0) {
            return Err(Error::Config("normalization.tolerance must be positive".into()));
        }
        if let Some(s) = &self.spectrum {
            unit(s.emitter.orientation, "spectrum.emitter.orientation")?;
            if s.points < 2 || !(s.span_gamma > 0.0) {
                return Err(Error::Config("spectrum needs points >= 2 and span_gamma > 0".into()));
            }
        }
        if let Some(d) = &self.distance {
            unit(d.direction, "distance.direction")?;
            unit(d.orientation, "distance.orientation")?;
            positive(d.min, "distance.min")?;
            if d.max < d.min || d.per_decade == 0 {
                return Err(Error::Config("distance needs max >= min and per_decade > 0".into()));
            }
        }
        if let Some(p) = &self.propagator {
            unit(p.direction, "propagator.direction")?;
            positive(p.min, "propagator.min")?;
            if p.max < p.min || p.per_decade == 0 {
                return Err(Error::Config("propagator needs max >= min and per_decade > 0".into()));
            }
        }
        Ok(())
    }

    pub fn resonator(&self) -> Result<Resonator> {
        let geometry = match self.geometry {
            GeometryConfig::Rod { width, length } => Geometry::rod(width.0, length.0, Point2::default()),
            GeometryConfig::Cylinder { radius } => Geometry::cylinder(radius.0, Point2::default()),
        }
        .map_err(|e| Error::Config(e.to_string()))?;
        let material = match self.material {
            MaterialConfig::Drude { omega_p, gamma_d } => MaterialModel::drude(omega_p.0, gamma_d.0),
            MaterialConfig::Constant { eps_re, eps_im } => Ok(MaterialModel::constant(Complex64::new(eps_re, eps_im))),
        }
        .map_err(|e| Error::Config(e.to_string()))?;
        let background = Background::new(self.background_index).map_err(|e| Error::Config(e.to_string()))?;
        Ok(Resonator::new(geometry, material, background))
    }

    /// True when the material is a constant equal to the background, so
    /// there is nothing to scatter.
    pub fn zero_contrast(&self) -> bool {
        match self.material {
            MaterialConfig::Constant { eps_re, eps_im } => {
                eps_im == 0.0 && eps_re == self.background_index * self.background_index
            }
            MaterialConfig::Drude { .. } => false,
        }
    }

    pub fn pole_search(&self) -> PoleSearch {
        let p = &self.pole_search;
        let mut s = PoleSearch::new(Complex64::new(p.guess_re.0, p.guess_im.0));
        s.drive = p.drive;
        s.basin_radius = p.basin_radius.map(|r| r.0);
        s
    }

    pub fn norm_options(&self) -> NormOptions {
        NormOptions { tolerance: self.normalization.tolerance, shape: self.normalization.shape, ..NormOptions::default() }
    }

    pub fn r0(&self) -> Option<Point2> {
        self.r0.map(point)
    }

    pub fn oracle_h(&self) -> f64 {
        self.grid.oracle_h.unwrap_or(self.grid.h).0
    }
}

impl EmitterConfig {
    pub fn position(&self) -> Point2 {
        point(self.position)
    }

    pub fn orientation(&self) -> Point2 {
        unit(self.orientation, "orientation").expect("validated")
    }
}

/// A ray of log-spaced points shared by the distance and propagator scans.
pub(crate) struct Ray {
    pub start: Point2,
    pub direction: Point2,
}

impl Ray {
    pub fn at(&self, s: f64) -> Point2 {
        self.start + self.direction * s
    }
}

impl DistanceConfig {
    pub(crate) fn ray(&self) -> Ray {
        Ray { start: point(self.start), direction: unit(self.direction, "direction").expect("validated") }
    }

    pub fn orientation(&self) -> Point2 {
        unit(self.orientation, "orientation").expect("validated")
    }
}

impl PropagatorConfig {
    pub(crate) fn ray(&self) -> Ray {
        Ray { start: point(self.start), direction: unit(self.direction, "direction").expect("validated") }
    }

    pub fn source(&self) -> Point2 {
        point(self.source)
    }
}
