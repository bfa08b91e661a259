//! Green functions composed from a single quasinormal mode.
//!
//! The bare mode `f` grows without bound away from the resonator, so outside
//! it is replaced by the regularized field
//! `F(r) = int_V G_B(r, r') Delta-eps(r', w) f(r') dr'`, which radiates like
//! an ordinary source. All dyadics follow the background convention of
//! [`crate::background`] and are built from unconjugated outer products.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::background::{green_b_2d, green_qs, Dyadic, Dyadic2};
use crate::error::{Error, Result};
use crate::kernel::CellKernel;
use crate::model::{Point2, Resonator, SurfacePlane};
use crate::solver::mode::ModeField;
use crate::solver::radiator::Radiator;
use crate::solver::vie::Discretization;

/// Volume quadrature of the regularized field.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FieldQuadrature {
    /// Exact integral of `G_B` over each cell (multipole beyond twice the
    /// enclosing radius).
    CellIntegrated,
    /// `sub x sub` midpoint points per cell.
    Midpoint { sub: usize },
}

type PointKey = (u64, u64, u64);

fn key(r: Point2, omega: f64) -> PointKey {
    (r.x.to_bits(), r.y.to_bits(), omega.to_bits())
}

/// On-demand, memoized samples of the regularized field.
pub struct RegularizedField {
    mode: Arc<ModeField>,
    quadrature: FieldQuadrature,
    radiators: Mutex<HashMap<u64, Arc<Radiator>>>,
    cache: Mutex<HashMap<PointKey, [Complex64; 2]>>,
}

impl RegularizedField {
    pub fn new(mode: Arc<ModeField>) -> Self {
        Self::with_quadrature(mode, FieldQuadrature::CellIntegrated)
    }

    pub fn with_quadrature(mode: Arc<ModeField>, quadrature: FieldQuadrature) -> Self {
        Self { mode, quadrature, radiators: Mutex::new(HashMap::new()), cache: Mutex::new(HashMap::new()) }
    }

    pub fn mode(&self) -> &ModeField {
        &self.mode
    }

    /// Radiator of `Delta-eps(w) f` at real `omega`, shared across points.
    fn radiator(&self, omega: f64) -> Result<Arc<Radiator>> {
        if let Some(r) = self.radiators.lock().expect("radiator cache poisoned").get(&omega.to_bits()) {
            return Ok(r.clone());
        }
        let w = Complex64::new(omega, 0.0);
        let rad = Arc::new(Radiator::new(&self.mode.disc, w, &self.mode.resonator.background, self.mode.polarization_at(w)?));
        Ok(self
            .radiators
            .lock()
            .expect("radiator cache poisoned")
            .entry(omega.to_bits())
            .or_insert(rad)
            .clone())
    }

    fn compute(&self, r: Point2, omega: f64) -> Result<[Complex64; 2]> {
        match self.quadrature {
            FieldQuadrature::CellIntegrated => Ok(self.radiator(omega)?.field(r)),
            FieldQuadrature::Midpoint { sub } => {
                if sub == 0 {
                    return Err(Error::Config("midpoint subdivision must be at least 1".into()));
                }
                let w = Complex64::new(omega, 0.0);
                let pol = self.mode.polarization_at(w)?;
                let disc = &self.mode.disc;
                let step = disc.h / sub as f64;
                let weight = step * step;
                let mut e = [Complex64::default(); 2];
                for (idx, p) in pol.iter().enumerate() {
                    let corner = disc.center(idx) - Point2::new(0.5 * disc.h, 0.5 * disc.h);
                    for a in 0..sub {
                        for b in 0..sub {
                            let q = corner + Point2::new((a as f64 + 0.5) * step, (b as f64 + 0.5) * step);
                            let v = green_b_2d(r, q, omega, &self.mode.resonator.background)?.apply(*p);
                            e[0] += v[0] * weight;
                            e[1] += v[1] * weight;
                        }
                    }
                }
                Ok(e)
            }
        }
    }

    /// `F(r)` at real frequency `omega`; `r` must lie outside the resonator.
    pub fn eval(&self, r: Point2, omega: f64) -> Result<[Complex64; 2]> {
        if !(omega > 0.0 && omega.is_finite()) {
            return Err(Error::domain(format!("regularized field needs a real positive frequency, got {omega}")));
        }
        self.mode.resonator.require_outside(r)?;
        if let Some(v) = self.cache.lock().expect("field cache poisoned").get(&key(r, omega)) {
            return Ok(*v);
        }
        let v = self.compute(r, omega)?;
        self.cache.lock().expect("field cache poisoned").insert(key(r, omega), v);
        Ok(v)
    }

    /// Parallel evaluation over a point list.
    pub fn sample(&self, points: &[Point2], omega: f64) -> Result<Vec<[Complex64; 2]>> {
        points.par_iter().map(|&r| self.eval(r, omega)).collect()
    }

    pub fn cached_points(&self) -> usize {
        self.cache.lock().expect("field cache poisoned").len()
    }
}

/// Sampled regularized field, `F(r)` for each point.
pub fn regularized_field(mode: Arc<ModeField>, omega: f64, points: &[Point2]) -> Result<Vec<[Complex64; 2]>> {
    RegularizedField::new(mode).sample(points, omega)
}

/// Single-mode Green-function approximations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GreenVariant {
    /// `G_B + G^f` with the bare mode.
    F,
    /// `G_B + G^F` with the regularized field.
    Far,
    /// `G^far + G_qs`.
    Out,
    /// `G^far` plus the first Born term in place of `G_qs`.
    Born,
}

impl GreenVariant {
    pub const ALL: [GreenVariant; 4] = [GreenVariant::F, GreenVariant::Far, GreenVariant::Out, GreenVariant::Born];

    pub fn name(&self) -> &'static str {
        match self {
            GreenVariant::F => "f",
            GreenVariant::Far => "far",
            GreenVariant::Out => "out",
            GreenVariant::Born => "born",
        }
    }
}

/// `w^2 / (2 w~ (w~ - w))`.
pub fn lorentzian(omega: f64, eigen: Complex64) -> Complex64 {
    omega * omega / (2.0 * eigen * (eigen - omega))
}

fn outer(a: [Complex64; 2], b: [Complex64; 2]) -> Dyadic2 {
    Dyadic::outer(a, b)
}

/// Tangent plane for the quasi-static image of a point pair: the one
/// nearest to whichever point is closer to the surface, so that swapping the
/// arguments picks the same plane.
pub fn image_plane(resonator: &Resonator, r1: Point2, r2: Point2) -> SurfacePlane {
    let g = &resonator.geometry;
    let (s1, s2) = (g.standoff(r1), g.standoff(r2));
    if s1 < s2 {
        g.nearest_surface(r1)
    } else if s2 < s1 {
        g.nearest_surface(r2)
    } else {
        g.nearest_surface(r1 + (r2 - r1) * 0.5)
    }
}

/// The mode, its exterior evaluator and its regularized field.
pub struct QnmGreen {
    pub mode: Arc<ModeField>,
    pub regularized: RegularizedField,
    mode_radiator: Radiator,
}

impl QnmGreen {
    pub fn new(mode: ModeField) -> Result<Self> {
        let mode = Arc::new(mode);
        Ok(Self { mode_radiator: mode.radiator()?, regularized: RegularizedField::new(mode.clone()), mode })
    }

    pub fn with_quadrature(mode: ModeField, quadrature: FieldQuadrature) -> Result<Self> {
        let mode = Arc::new(mode);
        Ok(Self {
            mode_radiator: mode.radiator()?,
            regularized: RegularizedField::with_quadrature(mode.clone(), quadrature),
            mode,
        })
    }

    pub fn resonator(&self) -> &Resonator {
        &self.mode.resonator
    }

    /// Mode field `f(r)` anywhere; inside the resonator the cell value.
    pub fn f(&self, r: Point2) -> [Complex64; 2] {
        match self.mode.cell_at(r) {
            Some(idx) => self.mode.cell_field[idx],
            None => self.mode_radiator.field(r),
        }
    }

    /// Regularized field `F(r)` at real `omega`.
    pub fn big_f(&self, r: Point2, omega: f64) -> Result<[Complex64; 2]> {
        self.regularized.eval(r, omega)
    }

    /// `G^f(r1, r2) = w^2 / (2 w~ (w~ - w)) f(r1) f(r2)`.
    pub fn green_f(&self, omega: f64, r1: Point2, r2: Point2) -> Dyadic2 {
        outer(self.f(r1), self.f(r2)) * lorentzian(omega, self.mode.omega())
    }

    /// `G^F(r1, r2)`, the mode term with the regularized field.
    pub fn green_big_f(&self, omega: f64, r1: Point2, r2: Point2) -> Result<Dyadic2> {
        Ok(outer(self.big_f(r1, omega)?, self.big_f(r2, omega)?) * lorentzian(omega, self.mode.omega()))
    }

    /// `G_qs` on the shared image plane of the pair.
    pub fn green_qs(&self, omega: f64, r1: Point2, r2: Point2) -> Result<Dyadic2> {
        let res = self.resonator();
        green_qs(r1, r2, omega, &res.material, &res.background, &image_plane(res, r1, r2))
    }

    /// First Born term with the resonator cells of the mode.
    pub fn green_back_1(&self, omega: f64, r1: Point2, r2: Point2) -> Result<Dyadic2> {
        green_back_1(self.resonator(), &self.mode.disc, omega, r1, r2)
    }

    /// `G - G_B` of a variant; finite at coincident points.
    pub fn scattered(&self, variant: GreenVariant, omega: f64, r1: Point2, r2: Point2) -> Result<Dyadic2> {
        let res = self.resonator();
        res.require_outside(r1)?;
        res.require_outside(r2)?;
        Ok(match variant {
            GreenVariant::F => self.green_f(omega, r1, r2),
            GreenVariant::Far => self.green_big_f(omega, r1, r2)?,
            GreenVariant::Out => self.green_big_f(omega, r1, r2)? + self.green_qs(omega, r1, r2)?,
            GreenVariant::Born => self.green_big_f(omega, r1, r2)? + self.green_back_1(omega, r1, r2)?,
        })
    }

    /// Full dyadic `G_B + (G - G_B)` for distinct points.
    pub fn green(&self, variant: GreenVariant, omega: f64, r1: Point2, r2: Point2) -> Result<Dyadic2> {
        Ok(green_b_2d(r1, r2, omega, &self.resonator().background)? + self.scattered(variant, omega, r1, r2)?)
    }

    pub fn green_far(&self, omega: f64, r1: Point2, r2: Point2) -> Result<Dyadic2> {
        self.green(GreenVariant::Far, omega, r1, r2)
    }

    pub fn green_out(&self, omega: f64, r1: Point2, r2: Point2) -> Result<Dyadic2> {
        self.green(GreenVariant::Out, omega, r1, r2)
    }
}

/// `G_1(r1, r2) = int_V G_B(r1, r') Delta-eps(w) G_B(r', r2) dr'`, each cell
/// contributing the product of its two cell integrals divided by the area.
pub fn green_back_1(resonator: &Resonator, disc: &Discretization, omega: f64, r1: Point2, r2: Point2) -> Result<Dyadic2> {
    resonator.require_outside(r1)?;
    resonator.require_outside(r2)?;
    let w = Complex64::new(omega, 0.0);
    let eps = resonator.material.eps_at(w)?;
    let eps_b = resonator.background.eps_b();
    let kernel = CellKernel::new(w, &resonator.background, disc.h);
    let mut acc = Dyadic2::zero();
    for idx in 0..disc.len() {
        let c = disc.center(idx);
        let a = kernel.green(r1, c);
        let b = kernel.green(r2, c).transpose();
        acc += a.matmul(&disc.contrast_tensor(idx, eps, eps_b)).matmul(&b);
    }
    Ok(acc * (1.0 / disc.cell_area()))
}
