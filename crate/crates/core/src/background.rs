//! Dyadic Green functions of the homogeneous background, plus the
//! quasi-static image term near a metal surface.
//!
//! Convention: `curl curl G - k0^2 eps G = k0^2 delta(r - r') 1`, with
//! `k0 = omega / c`. With this normalization the 2D background dyadic is
//!
//! ```text
//! G_B = k0^2 (i/4) [ (H0(x) - H1(x)/x) 1 + H2(x) u u ],   x = k rho,
//! ```
//!
//! where `k = n_B k0`, `rho = |r1 - r2|` and `u = (r1 - r2)/rho`; the
//! coincident-point distribution adds `-delta/(2 eps_B)`. In 3D,
//! `G_B = k0^2 (1 + grad grad / k^2) exp(ikr)/(4 pi r)`. `G` therefore has
//! units of 1/length^dim times the `k0^2` factor (1/length^2).

use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::{Background, MaterialModel, Point2, SurfacePlane, C0};
use crate::special;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// A `N x N` complex dyadic value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dyadic<const N: usize>(pub [[Complex64; N]; N]);

pub type Dyadic2 = Dyadic<2>;
pub type Dyadic3 = Dyadic<3>;

impl<const N: usize> Default for Dyadic<N> {
    fn default() -> Self {
        Self::zero()
    }
}

impl<const N: usize> Dyadic<N> {
    pub fn zero() -> Self {
        Dyadic([[Complex64::default(); N]; N])
    }

    pub fn identity() -> Self {
        let mut m = Self::zero();
        for i in 0..N {
            m.0[i][i] = Complex64::new(1.0, 0.0);
        }
        m
    }

    pub fn transpose(&self) -> Self {
        let mut m = Self::zero();
        for i in 0..N {
            for j in 0..N {
                m.0[i][j] = self.0[j][i];
            }
        }
        m
    }

    /// `a b^T` without conjugation.
    pub fn outer(a: [Complex64; N], b: [Complex64; N]) -> Self {
        let mut m = Self::zero();
        for i in 0..N {
            for j in 0..N {
                m.0[i][j] = a[i] * b[j];
            }
        }
        m
    }

    pub fn apply(&self, v: [Complex64; N]) -> [Complex64; N] {
        let mut out = [Complex64::default(); N];
        for i in 0..N {
            for j in 0..N {
                out[i] += self.0[i][j] * v[j];
            }
        }
        out
    }

    /// `a . G . b` for real vectors.
    pub fn project(&self, a: [f64; N], b: [f64; N]) -> Complex64 {
        let mut s = Complex64::default();
        for i in 0..N {
            for j in 0..N {
                s += a[i] * self.0[i][j] * b[j];
            }
        }
        s
    }

    pub fn matmul(&self, o: &Self) -> Self {
        let mut m = Self::zero();
        for i in 0..N {
            for j in 0..N {
                for k in 0..N {
                    m.0[i][j] += self.0[i][k] * o.0[k][j];
                }
            }
        }
        m
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> f64 {
        self.0.iter().flatten().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().flatten().all(|z| z.is_finite())
    }
}

impl<const N: usize> Add for Dyadic<N> {
    type Output = Self;
    fn add(mut self, o: Self) -> Self {
        self += o;
        self
    }
}

impl<const N: usize> AddAssign for Dyadic<N> {
    fn add_assign(&mut self, o: Self) {
        for i in 0..N {
            for j in 0..N {
                self.0[i][j] += o.0[i][j];
            }
        }
    }
}

impl<const N: usize> Sub for Dyadic<N> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        self + (-o)
    }
}

impl<const N: usize> Neg for Dyadic<N> {
    type Output = Self;
    fn neg(self) -> Self {
        self * Complex64::new(-1.0, 0.0)
    }
}

impl<const N: usize> Mul<Complex64> for Dyadic<N> {
    type Output = Self;
    fn mul(mut self, s: Complex64) -> Self {
        for row in self.0.iter_mut() {
            for z in row.iter_mut() {
                *z *= s;
            }
        }
        self
    }
}

impl<const N: usize> Mul<f64> for Dyadic<N> {
    type Output = Self;
    fn mul(self, s: f64) -> Self {
        self * Complex64::new(s, 0.0)
    }
}

impl Dyadic2 {
    pub fn xx(&self) -> Complex64 {
        self.0[0][0]
    }
    pub fn xy(&self) -> Complex64 {
        self.0[0][1]
    }
    pub fn yx(&self) -> Complex64 {
        self.0[1][0]
    }
    pub fn yy(&self) -> Complex64 {
        self.0[1][1]
    }
}

/// Free-space `k0^2` at a (possibly complex) angular frequency.
pub fn k0_sq(omega: Complex64) -> Complex64 {
    omega * omega / (C0 * C0)
}

/// 2D background dyadic for separation `d = r1 - r2 != 0` at background
/// wavenumber `k`, scaled by `k0sq`. Accepts complex `k`.
pub fn green_b_2d_sep(d: Point2, k: Complex64, k0sq: Complex64) -> Dyadic2 {
    let rho = d.norm();
    let x = k * rho;
    let h = special::hankel1_seq(2, x);
    let a = (I * 0.25) * k0sq * (h[0] - h[1] / x);
    let b = (I * 0.25) * k0sq * h[2];
    let (ux, uy) = (d.x / rho, d.y / rho);
    Dyadic([[a + b * ux * ux, b * ux * uy], [b * ux * uy, a + b * uy * uy]])
}

fn check_real_omega(omega: f64) -> Result<()> {
    if omega > 0.0 && omega.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(format!("angular frequency must be positive, got {omega}")))
    }
}

/// In-plane 2D background dyadic `G_B(r1, r2; omega)`.
pub fn green_b_2d(r1: Point2, r2: Point2, omega: f64, bg: &Background) -> Result<Dyadic2> {
    check_real_omega(omega)?;
    if r1 == r2 {
        return Err(Error::SingularPoint);
    }
    let w = Complex64::new(omega, 0.0);
    Ok(green_b_2d_sep(r1 - r2, bg.k(w), k0_sq(w)))
}

/// 3D background dyadic `G_B(r1, r2; omega)` for points given in metres.
pub fn green_b_3d(r1: [f64; 3], r2: [f64; 3], omega: f64, bg: &Background) -> Result<Dyadic3> {
    check_real_omega(omega)?;
    let d = [r1[0] - r2[0], r1[1] - r2[1], r1[2] - r2[2]];
    let r = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
    if r == 0.0 {
        return Err(Error::SingularPoint);
    }
    let w = Complex64::new(omega, 0.0);
    let k = bg.k(w);
    let kr = k * r;
    let g = (I * kr).exp() / (4.0 * std::f64::consts::PI * r) * k0_sq(w);
    let a = g * (1.0 + I / kr - 1.0 / (kr * kr));
    let b = g * (-1.0 - 3.0 * I / kr + 3.0 / (kr * kr));
    let u = [d[0] / r, d[1] / r, d[2] / r];
    let mut m = Dyadic3::zero();
    for i in 0..3 {
        for j in 0..3 {
            m.0[i][j] = b * u[i] * u[j];
        }
        m.0[i][i] += a;
    }
    Ok(m)
}

/// Coincident-point `Im{n . G_B(r, r) . n}` for any unit `n`:
/// `omega^2 / (8 c^2)` in 2D and `n_B omega^3 / (6 pi c^3)` in 3D.
pub fn im_green_b_diag(omega: f64, bg: &Background, dim: usize) -> Result<f64> {
    check_real_omega(omega)?;
    let k0 = omega / C0;
    match dim {
        2 => Ok(k0 * k0 / 8.0),
        3 => Ok(bg.n_b * k0 * k0 * k0 / (6.0 * std::f64::consts::PI)),
        _ => Err(Error::domain(format!("dimension must be 2 or 3, got {dim}"))),
    }
}

/// Image strength `(eps - eps_B) / (2 (eps + eps_B))` of the quasi-static term.
pub fn image_strength(material: &MaterialModel, bg: &Background, omega: f64) -> Result<Complex64> {
    let eps = material.eps_at(Complex64::new(omega, 0.0))?;
    let eb = bg.eps_b();
    Ok((eps - eb) / (2.0 * (eps + eb)))
}

/// Quasi-static image contribution `G_qs(r_a, r_b)`.
///
/// The source point `r_b` is mirrored across `surface`; the source
/// orientation is split into its parallel (s, sign -) and normal (p, sign +)
/// parts, i.e. `G_qs = beta * G_B(r_a, r_b') . (2 n n - 1)`.
pub fn green_qs(
    r_a: Point2,
    r_b: Point2,
    omega: f64,
    material: &MaterialModel,
    bg: &Background,
    surface: &SurfacePlane,
) -> Result<Dyadic2> {
    for r in [r_a, r_b] {
        if !(surface.height(r) > 0.0) {
            return Err(Error::domain(format!(
                "point ({:.4e}, {:.4e}) is not on the background side of the surface",
                r.x, r.y
            )));
        }
    }
    let beta = image_strength(material, bg, omega)?;
    let image = surface.mirror(r_b);
    let gb = green_b_2d(r_a, image, omega, bg)?;
    Ok(gb.matmul(&image_sign(surface.normal)) * beta)
}

/// `2 n n - 1`: flips the parallel component and keeps the normal one.
pub fn image_sign(n: Point2) -> Dyadic2 {
    let c = |v: f64| Complex64::new(v, 0.0);
    Dyadic([
        [c(2.0 * n.x * n.x - 1.0), c(2.0 * n.x * n.y)],
        [c(2.0 * n.x * n.y), c(2.0 * n.y * n.y - 1.0)],
    ])
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn bg() -> Background {
        Background::new(1.5).unwrap()
    }

    const W: f64 = 2.0 * PI * 415.863e12;

    #[test]
    fn reciprocity_2d_and_3d() {
        let b = bg();
        let r1 = Point2::new(12e-9, -7e-9);
        let r2 = Point2::new(-30e-9, 44e-9);
        let g12 = green_b_2d(r1, r2, W, &b).unwrap();
        let g21 = green_b_2d(r2, r1, W, &b).unwrap();
        assert_eq!(g12, g21.transpose());
        let a = green_b_3d([1e-8, 2e-8, -3e-8], [4e-8, -1e-8, 0.0], W, &b).unwrap();
        let c = green_b_3d([4e-8, -1e-8, 0.0], [1e-8, 2e-8, -3e-8], W, &b).unwrap();
        assert!((a - c.transpose()).max_abs() < 1e-12 * a.max_abs());
    }

    #[test]
    fn coincident_points_error() {
        let p = Point2::new(1e-9, 1e-9);
        assert!(matches!(green_b_2d(p, p, W, &bg()), Err(Error::SingularPoint)));
    }

    /// Scalar generating function differentiated numerically.
    fn brute_force_2d(d: Point2, k: f64, k0sq: f64) -> Dyadic2 {
        let g = |x: f64, y: f64| {
            let r = x.hypot(y);
            I * 0.25 * special::hankel1_01(Complex64::new(k * r, 0.0)).0
        };
        let s = 1e-3 / k;
        // 4th order central differences
        let d2 = |f: &dyn Fn(f64) -> Complex64| {
            (-f(2.0 * s) + 16.0 * f(s) - 30.0 * f(0.0) + 16.0 * f(-s) - f(-2.0 * s)) / (12.0 * s * s)
        };
        let dxx = d2(&|t| g(d.x + t, d.y));
        let dyy = d2(&|t| g(d.x, d.y + t));
        let dxy = (g(d.x + s, d.y + s) - g(d.x + s, d.y - s) - g(d.x - s, d.y + s) + g(d.x - s, d.y - s))
            / (4.0 * s * s);
        let g0 = g(d.x, d.y);
        let k2 = k * k;
        Dyadic([[g0 + dxx / k2, dxy / k2], [dxy / k2, g0 + dyy / k2]]) * k0sq
    }

    #[test]
    fn matches_numerical_differentiation_at_kd_one() {
        let b = bg();
        let k = b.n_b * W / C0;
        let dir = Point2::new(0.6, 0.8);
        let d = dir * (1.0 / k);
        let exact = green_b_2d(d, Point2::default(), W, &b).unwrap();
        let k0sq = (W / C0).powi(2);
        let brute = brute_force_2d(d, k, k0sq);
        assert!((exact - brute).max_abs() < 1e-6 * exact.max_abs(), "{exact:?} vs {brute:?}");
    }

    #[test]
    fn outgoing_cylindrical_asymptotics() {
        let b = bg();
        let k = b.n_b * W / C0;
        // transverse component at large distance: k0^2 (i/4) sqrt(2/(pi k d)) e^{i(kd - pi/4)}
        for kd in [200.0, 400.0] {
            let g = green_b_2d(Point2::new(kd / k, 0.0), Point2::default(), W, &b).unwrap();
            let k0sq = (W / C0).powi(2);
            let expect = k0sq * I * 0.25 * (2.0 / (PI * kd)).sqrt() * (I * (kd - PI / 4.0)).exp();
            assert!((g.yy() - expect).norm() < 5e-3 * expect.norm());
            // longitudinal part decays faster
            assert!(g.xx().norm() < 0.01 * g.yy().norm());
        }
    }

    #[test]
    fn im_diag_2d_matches_extrapolated_limit() {
        let b = bg();
        let k = b.n_b * W / C0;
        let exact = im_green_b_diag(W, &b, 2).unwrap();
        // Richardson over d = 1e-3/k .. 1e-6/k (Im part is analytic in d^2)
        let im_at = |d: f64| green_b_2d(Point2::new(d, 0.0), Point2::default(), W, &b).unwrap().yy().im;
        let ds: Vec<f64> = (3..=6).map(|p| 10f64.powi(-p) / k).collect();
        let mut vals: Vec<f64> = ds.iter().map(|&d| im_at(d)).collect();
        // Richardson for successive factor 10 in d (error ~ d^2)
        for _ in 0..2 {
            vals = vals.windows(2).map(|w| (100.0 * w[1] - w[0]) / 99.0).collect();
        }
        let got = vals[vals.len() - 1];
        assert!(((got - exact) / exact).abs() < 1e-3, "{got} vs {exact}");
        // any orientation
        let g = green_b_2d(Point2::new(0.0, 1e-6 / k), Point2::default(), W, &b).unwrap();
        assert!(((g.project([0.6, 0.8], [0.6, 0.8]).im - exact) / exact).abs() < 1e-3);
    }

    #[test]
    fn im_diag_3d() {
        let b = Background::new(1.0).unwrap();
        let v = im_green_b_diag(C0, &b, 3).unwrap();
        assert!((v - 1.0 / (6.0 * PI)).abs() < 1e-15);
        let v2 = im_green_b_diag(2.0 * C0, &b, 3).unwrap();
        assert!((v2 / v - 8.0).abs() < 1e-12);
        // limit of the full dyadic
        let b = bg();
        let exact = im_green_b_diag(W, &b, 3).unwrap();
        let k = b.n_b * W / C0;
        let g = green_b_3d([0.0, 0.0, 1e-3 / k], [0.0; 3], W, &b).unwrap();
        assert!(((g.0[0][0].im - exact) / exact).abs() < 1e-5);
        assert!(((g.0[2][2].im - exact) / exact).abs() < 1e-5);
    }

    #[test]
    fn far_field_3d_is_transverse() {
        let b = bg();
        let k = b.n_b * W / C0;
        let r = 1000.0 / k;
        let g = green_b_3d([r, 0.0, 0.0], [0.0; 3], W, &b).unwrap();
        let k0sq = (W / C0).powi(2);
        let expect = k0sq * (I * k * r).exp() / (4.0 * PI * r);
        assert!((g.0[1][1] - expect).norm() < 2e-3 * expect.norm());
        assert!(g.0[0][0].norm() < 3e-3 * expect.norm());
    }

    fn plane(normal: Point2) -> SurfacePlane {
        SurfacePlane::new(Point2::new(5e-9, 0.0), normal).unwrap()
    }

    #[test]
    fn qs_vanishes_without_contrast() {
        let m = MaterialModel::constant(Complex64::new(2.25, 0.0));
        let s = plane(Point2::new(1.0, 0.0));
        let g = green_qs(Point2::new(8e-9, 0.0), Point2::new(9e-9, 1e-9), W, &m, &bg(), &s).unwrap();
        assert_eq!(g.max_abs(), 0.0);
    }

    #[test]
    fn qs_perfect_conductor_limit() {
        let m = MaterialModel::constant(Complex64::new(-1e12, 0.0));
        let b = bg();
        let beta = image_strength(&m, &b, W).unwrap();
        assert!((beta - 0.5).norm() < 1e-9);
        let s = plane(Point2::new(1.0, 0.0));
        let h = 3e-9;
        let ra = Point2::new(5e-9 + h, 0.0);
        let g = green_qs(ra, ra, W, &m, &b, &s).unwrap();
        let gb = green_b_2d(ra, Point2::new(5e-9 - h, 0.0), W, &b).unwrap();
        // p (normal, x) keeps sign, s (parallel, y) flips
        assert!((g.xx() - gb.xx() * beta).norm() < 1e-12 * gb.max_abs());
        assert!((g.yy() + gb.yy() * beta).norm() < 1e-12 * gb.max_abs());
    }

    #[test]
    fn qs_resonant_near_surface_plasmon() {
        let b = bg();
        let (wp, gd) = (1.26e16, 7e13);
        let m = MaterialModel::drude(wp, gd).unwrap();
        // Re eps = -eps_B  ->  w^2 ~ wp^2 / (1 + eps_B)
        let w = wp / (1.0 + b.eps_b()).sqrt();
        let beta = image_strength(&m, &b, w).unwrap();
        assert!(beta.norm() > 10.0, "{beta}");
        let eps = m.eps_at(Complex64::new(w, 0.0)).unwrap();
        let direct = (eps - 2.25) / (2.0 * (eps + 2.25));
        assert!((beta - direct).norm() < 1e-12 * direct.norm());
    }

    #[test]
    fn qs_rejects_points_behind_surface() {
        let m = MaterialModel::drude(1.26e16, 7e13).unwrap();
        let s = plane(Point2::new(1.0, 0.0));
        assert!(green_qs(Point2::new(4e-9, 0.0), Point2::new(8e-9, 0.0), W, &m, &bg(), &s).is_err());
    }

    proptest::proptest! {
        #[test]
        fn qs_is_reciprocal(ax in 5.5e-9f64..30e-9, ay in -40e-9f64..40e-9, bx in 5.5e-9f64..30e-9, by in -40e-9f64..40e-9) {
            let m = MaterialModel::drude(1.26e16, 7e13).unwrap();
            let s = plane(Point2::new(1.0, 0.0));
            let (a, b) = (Point2::new(ax, ay), Point2::new(bx, by));
            let g = green_qs(a, b, W, &m, &bg(), &s).unwrap();
            let gt = green_qs(b, a, W, &m, &bg(), &s).unwrap().transpose();
            proptest::prop_assert!((g - gt).max_abs() <= 1e-10 * g.max_abs());
        }

        #[test]
        fn b2d_reciprocal(x in -1e-6f64..1e-6, y in -1e-6f64..1e-6) {
            proptest::prop_assume!(x.hypot(y) > 1e-10);
            let b = bg();
            let p = Point2::new(x, y);
            let g1 = green_b_2d(p, Point2::default(), W, &b).unwrap();
            let g2 = green_b_2d(Point2::default(), p, W, &b).unwrap();
            proptest::prop_assert_eq!(g1, g2.transpose());
        }
    }
}
