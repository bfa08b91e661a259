//! Shared domain types: points, complex frequencies, dispersive materials,
//! resonator geometries, grids and dipole emitters.
//!
//! Everything is SI internally (metres, rad/s). The helpers in [`units`]
//! convert from the nm / THz values used in configuration files.

use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Speed of light in vacuum (m/s).
pub const C0: f64 = 299_792_458.0;

pub mod units {
    use std::f64::consts::PI;

    pub const NM: f64 = 1e-9;
    pub const UM: f64 = 1e-6;

    /// Angular frequency (rad/s) of a frequency given in THz.
    pub fn thz(f: f64) -> f64 {
        2.0 * PI * f * 1e12
    }

    pub fn to_thz(omega: f64) -> f64 {
        omega / (2.0 * PI * 1e12)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn dot(self, o: Point2) -> f64 {
        self.x * o.x + self.y * o.y
    }

    /// z component of the 2D cross product.
    pub fn cross(self, o: Point2) -> f64 {
        self.x * o.y - self.y * o.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn dist(self, o: Point2) -> f64 {
        (self - o).norm()
    }

    pub fn normalized(self) -> Option<Point2> {
        let n = self.norm();
        (n > 0.0 && n.is_finite()).then(|| self * (1.0 / n))
    }
}

impl Add for Point2 {
    type Output = Point2;
    fn add(self, o: Point2) -> Point2 {
        Point2::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Point2 {
    type Output = Point2;
    fn sub(self, o: Point2) -> Point2 {
        Point2::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Point2 {
    type Output = Point2;
    fn mul(self, s: f64) -> Point2 {
        Point2::new(self.x * s, self.y * s)
    }
}

impl Neg for Point2 {
    type Output = Point2;
    fn neg(self) -> Point2 {
        Point2::new(-self.x, -self.y)
    }
}

/// Complex resonance frequency `omega - i*gamma`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComplexFrequency {
    /// Real angular frequency (rad/s).
    pub omega: f64,
    /// Decay rate, the half width (rad/s).
    pub gamma: f64,
}

impl ComplexFrequency {
    pub fn new(omega: f64, gamma: f64) -> Result<Self> {
        if !(omega > 0.0) || !omega.is_finite() || !gamma.is_finite() {
            return Err(Error::domain(format!(
                "invalid complex frequency omega={omega}, gamma={gamma}"
            )));
        }
        Ok(Self { omega, gamma })
    }

    /// From `omega - i*gamma` as a complex number.
    pub fn from_complex(w: Complex64) -> Result<Self> {
        Self::new(w.re, -w.im)
    }

    pub fn complex(&self) -> Complex64 {
        Complex64::new(self.omega, -self.gamma)
    }

    /// Quality factor `omega / (2 gamma)`.
    pub fn q(&self) -> f64 {
        self.omega / (2.0 * self.gamma)
    }
}

/// Relative permittivity model of the resonator material.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MaterialModel {
    /// `eps(w) = 1 - wp^2 / (w (w + i gd))`.
    Drude { omega_p: f64, gamma_d: f64 },
    Constant { eps: Complex64 },
}

impl MaterialModel {
    pub fn drude(omega_p: f64, gamma_d: f64) -> Result<Self> {
        if !(omega_p >= 0.0) || !(gamma_d >= 0.0) {
            return Err(Error::domain("Drude parameters must be non-negative"));
        }
        Ok(MaterialModel::Drude { omega_p, gamma_d })
    }

    pub fn constant(eps: Complex64) -> Self {
        MaterialModel::Constant { eps }
    }

    fn check_freq(omega: Complex64) -> Result<()> {
        if omega.norm() > 0.0 && omega.is_finite() {
            Ok(())
        } else {
            Err(Error::domain("permittivity requested at zero frequency"))
        }
    }

    /// Permittivity at a (possibly complex) angular frequency.
    pub fn eps_at(&self, omega: Complex64) -> Result<Complex64> {
        Self::check_freq(omega)?;
        Ok(match *self {
            MaterialModel::Drude { omega_p, gamma_d } => {
                1.0 - omega_p * omega_p / (omega * (omega + Complex64::new(0.0, gamma_d)))
            }
            MaterialModel::Constant { eps } => eps,
        })
    }

    /// `sigma(w) = (1/2w) d(eps w^2)/dw`, the weight of the volume term in the
    /// mode normalization.
    pub fn sigma_dispersion(&self, omega: Complex64) -> Result<Complex64> {
        Self::check_freq(omega)?;
        Ok(match *self {
            MaterialModel::Drude { omega_p, gamma_d } => {
                let ig = Complex64::new(0.0, gamma_d);
                let d = 2.0 * omega - ig * omega_p * omega_p / ((omega + ig) * (omega + ig));
                d / (2.0 * omega)
            }
            MaterialModel::Constant { eps } => eps,
        })
    }

    /// `d(w eps)/dw`, used by the reciprocity-based norm.
    pub fn d_omega_eps(&self, omega: Complex64) -> Result<Complex64> {
        Self::check_freq(omega)?;
        Ok(match *self {
            MaterialModel::Drude { omega_p, gamma_d } => {
                let s = omega + Complex64::new(0.0, gamma_d);
                1.0 + omega_p * omega_p / (s * s)
            }
            MaterialModel::Constant { eps } => eps,
        })
    }
}

/// Homogeneous, lossless background medium.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Background {
    pub n_b: f64,
}

impl Background {
    pub fn new(n_b: f64) -> Result<Self> {
        if !(n_b > 0.0) || !n_b.is_finite() {
            return Err(Error::domain(format!("background index must be positive, got {n_b}")));
        }
        Ok(Self { n_b })
    }

    pub fn eps_b(&self) -> f64 {
        self.n_b * self.n_b
    }

    /// Background wavenumber `n_B w / c` (complex for complex `w`).
    pub fn k(&self, omega: Complex64) -> Complex64 {
        omega * (self.n_b / C0)
    }
}

/// A surface plane given by a point on it and the outward unit normal
/// (pointing into the background).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SurfacePlane {
    pub point: Point2,
    pub normal: Point2,
}

impl SurfacePlane {
    pub fn new(point: Point2, normal: Point2) -> Result<Self> {
        let normal = normal
            .normalized()
            .ok_or_else(|| Error::domain("surface normal must be non-zero"))?;
        Ok(Self { point, normal })
    }

    /// Signed height above the plane (positive on the background side).
    pub fn height(&self, r: Point2) -> f64 {
        (r - self.point).dot(self.normal)
    }

    pub fn mirror(&self, r: Point2) -> Point2 {
        r - self.normal * (2.0 * self.height(r))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Geometry {
    /// Axis-aligned rectangle; `width` along x, `length` along y.
    Rod2D { width: f64, length: f64, center: Point2 },
    Cylinder2D { radius: f64, center: Point2 },
    /// Metal fills the side opposite to `surface.normal`.
    HalfSpace { surface: SurfacePlane },
}

impl Geometry {
    pub fn rod(width: f64, length: f64, center: Point2) -> Result<Self> {
        if !(width > 0.0 && length > 0.0) {
            return Err(Error::domain("rod dimensions must be positive"));
        }
        Ok(Geometry::Rod2D { width, length, center })
    }

    pub fn cylinder(radius: f64, center: Point2) -> Result<Self> {
        if !(radius > 0.0) {
            return Err(Error::domain("cylinder radius must be positive"));
        }
        Ok(Geometry::Cylinder2D { radius, center })
    }

    pub fn inside(&self, r: Point2) -> bool {
        match *self {
            Geometry::Rod2D { width, length, center } => {
                let d = r - center;
                d.x.abs() < 0.5 * width && d.y.abs() < 0.5 * length
            }
            Geometry::Cylinder2D { radius, center } => r.dist(center) < radius,
            Geometry::HalfSpace { surface } => surface.height(r) < 0.0,
        }
    }

    pub fn center(&self) -> Point2 {
        match *self {
            Geometry::Rod2D { center, .. } | Geometry::Cylinder2D { center, .. } => center,
            Geometry::HalfSpace { surface } => surface.point,
        }
    }

    /// Bounding box `(lower-left, upper-right)`; `None` for unbounded support.
    pub fn bbox(&self) -> Option<(Point2, Point2)> {
        match *self {
            Geometry::Rod2D { width, length, center } => {
                let half = Point2::new(0.5 * width, 0.5 * length);
                Some((center - half, center + half))
            }
            Geometry::Cylinder2D { radius, center } => {
                let half = Point2::new(radius, radius);
                Some((center - half, center + half))
            }
            Geometry::HalfSpace { .. } => None,
        }
    }

    /// Radius of the smallest circle about [`Geometry::center`] enclosing the support.
    pub fn enclosing_radius(&self) -> Option<f64> {
        match *self {
            Geometry::Rod2D { width, length, .. } => Some(0.5 * width.hypot(length)),
            Geometry::Cylinder2D { radius, .. } => Some(radius),
            Geometry::HalfSpace { .. } => None,
        }
    }

    /// Shortest distance from `r` to the boundary (positive outside).
    pub fn standoff(&self, r: Point2) -> f64 {
        let plane = self.nearest_surface(r);
        let d = r.dist(plane.point);
        if self.inside(r) { -d } else { d }
    }

    /// Tangent plane at the boundary point nearest to `r`.
    ///
    /// Outside a rod corner the nearest boundary point is the corner itself;
    /// the plane normal then points from the corner towards `r`.
    pub fn nearest_surface(&self, r: Point2) -> SurfacePlane {
        match *self {
            Geometry::Rod2D { width, length, center } => {
                let d = r - center;
                let (hx, hy) = (0.5 * width, 0.5 * length);
                let (ox, oy) = (d.x.abs() - hx, d.y.abs() - hy);
                let sx = if d.x < 0.0 { -1.0 } else { 1.0 };
                let sy = if d.y < 0.0 { -1.0 } else { 1.0 };
                let (point, normal) = if ox > 0.0 && oy > 0.0 {
                    let corner = Point2::new(sx * hx, sy * hy);
                    (corner, (d - corner).normalized().unwrap_or(Point2::new(sx, 0.0)))
                } else if ox >= oy {
                    (Point2::new(sx * hx, d.y.clamp(-hy, hy)), Point2::new(sx, 0.0))
                } else {
                    (Point2::new(d.x.clamp(-hx, hx), sy * hy), Point2::new(0.0, sy))
                };
                SurfacePlane { point: point + center, normal }
            }
            Geometry::Cylinder2D { radius, center } => {
                let normal = (r - center).normalized().unwrap_or(Point2::new(1.0, 0.0));
                SurfacePlane { point: center + normal * radius, normal }
            }
            Geometry::HalfSpace { surface } => SurfacePlane {
                point: r - surface.normal * surface.height(r),
                normal: surface.normal,
            },
        }
    }
}

/// Perfectly matched layer parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PmlSpec {
    pub cells: usize,
    pub order: f64,
    pub reflection: f64,
}

impl Default for PmlSpec {
    fn default() -> Self {
        Self { cells: 16, order: 3.0, reflection: 1e-8 }
    }
}

/// Uniform rectangular grid with cell size `h`. The cell lattice is anchored
/// at `(x_min, y_min)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
    pub h: f64,
    #[serde(default)]
    pub pml: PmlSpec,
}

impl GridSpec {
    pub fn new(lower: Point2, upper: Point2, h: f64, pml: PmlSpec) -> Result<Self> {
        if !(h > 0.0) || !(upper.x > lower.x) || !(upper.y > lower.y) {
            return Err(Error::domain("grid needs h > 0 and a non-empty extent"));
        }
        if pml.cells < 8 {
            return Err(Error::domain(format!("PML needs at least 8 cells, got {}", pml.cells)));
        }
        Ok(Self { x_min: lower.x, x_max: upper.x, y_min: lower.y, y_max: upper.y, h, pml })
    }

    /// Square grid of half-width `half` about `center`.
    pub fn centered(center: Point2, half: f64, h: f64, pml: PmlSpec) -> Result<Self> {
        let d = Point2::new(half, half);
        Self::new(center - d, center + d, h, pml)
    }

    pub fn nx(&self) -> usize {
        ((self.x_max - self.x_min) / self.h).round() as usize
    }

    pub fn ny(&self) -> usize {
        ((self.y_max - self.y_min) / self.h).round() as usize
    }

    pub fn origin(&self) -> Point2 {
        Point2::new(self.x_min, self.y_min)
    }

    pub fn cell_center(&self, i: usize, j: usize) -> Point2 {
        Point2::new(
            self.x_min + (i as f64 + 0.5) * self.h,
            self.y_min + (j as f64 + 0.5) * self.h,
        )
    }

    /// Warnings for a grid that under-resolves `geometry` or leaves too
    /// little room between it and the absorber at `omega`.
    pub fn diagnostics(&self, geometry: &Geometry, omega: f64) -> Vec<String> {
        let mut out = Vec::new();
        if let Some((lo, hi)) = geometry.bbox() {
            let smallest = match *geometry {
                Geometry::Cylinder2D { radius, .. } => 2.0 * radius,
                _ => (hi.x - lo.x).min(hi.y - lo.y),
            };
            if smallest / self.h < 10.0 {
                out.push(format!(
                    "smallest feature {:.3e} m spans only {:.1} cells (want >= 10)",
                    smallest,
                    smallest / self.h
                ));
            }
            let lambda = 2.0 * std::f64::consts::PI * C0 / omega;
            let margin = (lo.x - self.x_min)
                .min(lo.y - self.y_min)
                .min(self.x_max - hi.x)
                .min(self.y_max - hi.y)
                - self.pml.cells as f64 * self.h;
            if margin < lambda {
                out.push(format!(
                    "resonator-to-PML margin {margin:.3e} m is below one free-space wavelength {lambda:.3e} m"
                ));
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Dipole {
    pub position: Point2,
    /// Unit orientation vector.
    pub orientation: Point2,
}

impl Dipole {
    pub fn new(position: Point2, orientation: Point2) -> Result<Self> {
        let orientation = orientation
            .normalized()
            .ok_or_else(|| Error::domain("dipole orientation must be non-zero"))?;
        Ok(Self { position, orientation })
    }

    pub fn x(position: Point2) -> Self {
        Self { position, orientation: Point2::new(1.0, 0.0) }
    }

    pub fn y(position: Point2) -> Self {
        Self { position, orientation: Point2::new(0.0, 1.0) }
    }
}

/// Geometry, material and background of one nanoresonator problem.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Resonator {
    pub geometry: Geometry,
    pub material: MaterialModel,
    pub background: Background,
}

impl Resonator {
    pub fn new(geometry: Geometry, material: MaterialModel, background: Background) -> Self {
        Self { geometry, material, background }
    }

    /// Permittivity contrast `eps_MNP(w) - eps_B` of the resonator material.
    pub fn contrast(&self, omega: Complex64) -> Result<Complex64> {
        Ok(self.material.eps_at(omega)? - self.background.eps_b())
    }

    /// `Delta eps(r, w)`, exactly zero outside the support.
    pub fn delta_eps_at(&self, r: Point2, omega: Complex64) -> Result<Complex64> {
        if self.geometry.inside(r) {
            self.contrast(omega)
        } else {
            Ok(Complex64::new(0.0, 0.0))
        }
    }

    pub fn require_outside(&self, r: Point2) -> Result<()> {
        if self.geometry.inside(r) {
            Err(Error::InsideResonator { x: r.x, y: r.y })
        } else {
            Ok(())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    const WP: f64 = 1.26e16;
    const GD: f64 = 7e13;

    #[test]
    fn constant_material_is_dispersionless() {
        let m = MaterialModel::constant(c(2.25, 0.0));
        for w in [1e14, 3e15, 8e15] {
            assert_eq!(m.eps_at(c(w, 0.0)).unwrap(), c(2.25, 0.0));
            assert_eq!(m.sigma_dispersion(c(w, -1e13)).unwrap(), c(2.25, 0.0));
        }
    }

    #[test]
    fn drude_at_rod_resonance() {
        let m = MaterialModel::drude(WP, GD).unwrap();
        let eps = m.eps_at(c(2.0 * PI * 415.863e12, 0.0)).unwrap();
        assert!((eps.re + 22.2364).abs() < 1e-3, "{eps}");
        assert!((eps.im - 0.6225).abs() < 1e-3, "{eps}");
    }

    #[test]
    fn lossless_drude_limits() {
        let m = MaterialModel::drude(WP, 0.0).unwrap();
        let w = 3e15;
        let eps = m.eps_at(c(w, 0.0)).unwrap();
        assert_eq!(eps.im, 0.0);
        assert!((eps.re - (1.0 - WP * WP / (w * w))).abs() < 1e-12);
        let s = m.sigma_dispersion(c(w, 0.0)).unwrap();
        assert!((s - 1.0).norm() < 1e-14);
    }

    #[test]
    fn zero_frequency_is_rejected() {
        let m = MaterialModel::drude(WP, GD).unwrap();
        assert!(matches!(m.eps_at(c(0.0, 0.0)), Err(Error::Domain(_))));
        assert!(matches!(m.sigma_dispersion(c(0.0, 0.0)), Err(Error::Domain(_))));
    }

    fn fd_sigma(m: &MaterialModel, w: Complex64, step: f64) -> Complex64 {
        let f = |w: Complex64| m.eps_at(w).unwrap() * w * w;
        (f(w + step) - f(w - step)) / (2.0 * step) / (2.0 * w)
    }

    #[test]
    fn sigma_matches_finite_difference_at_rod_pole() {
        let m = MaterialModel::drude(WP, GD).unwrap();
        let w = c(2.0 * PI * 415.863e12, -2.0 * PI * 37.176e12);
        let exact = m.sigma_dispersion(w).unwrap();
        let fd = fd_sigma(&m, w, 1e9);
        assert!((exact - fd).norm() / exact.norm() < 1e-6, "{exact} vs {fd}");
    }

    #[test]
    fn d_omega_eps_matches_finite_difference() {
        let m = MaterialModel::drude(WP, GD).unwrap();
        let w = c(2.4e15, -1.5e14);
        let f = |w: Complex64| m.eps_at(w).unwrap() * w;
        let fd = (f(w + 1e9) - f(w - 1e9)) / 2e9;
        let exact = m.d_omega_eps(w).unwrap();
        assert!((exact - fd).norm() / exact.norm() < 1e-6);
    }

    #[test]
    fn rod_surface_planes() {
        let g = Geometry::rod(10e-9, 80e-9, Point2::default()).unwrap();
        let top = g.nearest_surface(Point2::new(1e-9, 45e-9));
        assert_eq!(top.normal, Point2::new(0.0, 1.0));
        assert!((top.point.y - 40e-9).abs() < 1e-20);
        let side = g.nearest_surface(Point2::new(-8e-9, 3e-9));
        assert_eq!(side.normal, Point2::new(-1.0, 0.0));
        assert!((g.standoff(Point2::new(-8e-9, 3e-9)) - 3e-9).abs() < 1e-18);
        assert!(g.standoff(Point2::new(0.0, 0.0)) < 0.0);
        let corner = g.nearest_surface(Point2::new(8e-9, 44e-9));
        assert!((corner.normal.norm() - 1.0).abs() < 1e-12);
        assert!((corner.point.x - 5e-9).abs() < 1e-20);
    }

    #[test]
    fn mirror_is_an_involution() {
        let p = SurfacePlane::new(Point2::new(5e-9, 0.0), Point2::new(1.0, 1.0)).unwrap();
        let r = Point2::new(9e-9, -3e-9);
        let m = p.mirror(r);
        assert!((p.height(m) + p.height(r)).abs() < 1e-20);
        assert!(p.mirror(m).dist(r) < 1e-22);
    }

    #[test]
    fn delta_eps_vanishes_outside_support() {
        let res = Resonator::new(
            Geometry::rod(10e-9, 80e-9, Point2::default()).unwrap(),
            MaterialModel::drude(WP, GD).unwrap(),
            Background::new(1.5).unwrap(),
        );
        let w = c(2.6e15, 0.0);
        assert_eq!(res.delta_eps_at(Point2::new(6e-9, 0.0), w).unwrap(), c(0.0, 0.0));
        assert!(res.delta_eps_at(Point2::new(0.0, 39e-9), w).unwrap().norm() > 1.0);
    }

    #[test]
    fn grid_diagnostics_flag_small_margin() {
        let g = Geometry::rod(10e-9, 80e-9, Point2::default()).unwrap();
        let grid = GridSpec::centered(Point2::default(), 200e-9, 1e-9, PmlSpec::default()).unwrap();
        let diags = grid.diagnostics(&g, 2.6e15);
        assert_eq!(diags.len(), 1, "{diags:?}");
        assert!(GridSpec::centered(Point2::default(), 1e-7, 1e-9, PmlSpec { cells: 4, ..Default::default() }).is_err());
    }

    proptest::proptest! {
        #[test]
        fn drude_is_passive(w in 1e13f64..2e16, gd in 1e12f64..1e15) {
            let m = MaterialModel::drude(WP, gd).unwrap();
            proptest::prop_assert!(m.eps_at(c(w, 0.0)).unwrap().im > 0.0);
        }

        #[test]
        fn sigma_is_the_analytic_derivative(wr in 1e15f64..8e15, wi in -5e14f64..0.0) {
            let m = MaterialModel::drude(WP, GD).unwrap();
            let w = c(wr, wi);
            let exact = m.sigma_dispersion(w).unwrap();
            let fd = fd_sigma(&m, w, wr * 1e-6);
            proptest::prop_assert!((exact - fd).norm() / exact.norm() < 1e-6);
        }

        #[test]
        fn cells_are_partitioned(i in 0usize..40, j in 0usize..100) {
            let g = Geometry::rod(10e-9, 80e-9, Point2::default()).unwrap();
            let grid = GridSpec::centered(Point2::default(), 50e-9, 1e-9, PmlSpec::default()).unwrap();
            let r = grid.cell_center(i + 30, j);
            let inside = g.inside(r);
            let expected = r.x.abs() < 5e-9 && r.y.abs() < 40e-9;
            proptest::prop_assert_eq!(inside, expected);
        }
    }
}
