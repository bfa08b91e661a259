//! Background Green function integrated over square cells.
//!
//! Near the target point the integral of `G_B` over a cell is reduced to
//! boundary integrals: the scalar part in polar coordinates about the target,
//! `int_cell g dA = sum_edges int F(R(theta)) dtheta` with
//! `F(R) = int_0^R g(rho) rho drho`, and the `grad grad g` part by the
//! divergence theorem. Both forms include the coincident-point
//! `-delta/(2 eps_B)` term automatically when the target lies inside the
//! cell. Farther away a tensor Gauss rule is used.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::background::{green_b_2d_sep, k0_sq, Dyadic, Dyadic2};
use crate::model::{Background, Point2};
use crate::quadrature::{gauss_legendre, gauss_on};
use crate::special;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Cell integrals of the 2D background Green function at one frequency.
#[derive(Debug, Clone)]
pub struct CellKernel {
    k: Complex64,
    k0sq: Complex64,
    h: f64,
    edge_rule: (Vec<f64>, Vec<f64>),
    mid_rule: Vec<(f64, f64)>,
    far_rule: Vec<(f64, f64)>,
}

/// Distance (in cells) below which the boundary-integral form is used.
const NEAR: f64 = 3.0;
/// Distance (in cells) below which the 5x5 Gauss rule is used.
const MID: f64 = 8.0;

impl CellKernel {
    pub fn new(omega: Complex64, bg: &Background, h: f64) -> Self {
        Self {
            k: bg.k(omega),
            k0sq: k0_sq(omega),
            h,
            edge_rule: gauss_legendre(8),
            mid_rule: gauss_on(5, -0.5 * h, 0.5 * h),
            far_rule: gauss_on(3, -0.5 * h, 0.5 * h),
        }
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn k(&self) -> Complex64 {
        self.k
    }

    pub fn k0sq(&self) -> Complex64 {
        self.k0sq
    }

    /// `int_cell G_B(t, r') dA'` over the cell centred at `c`.
    pub fn green(&self, t: Point2, c: Point2) -> Dyadic2 {
        let dist = t.dist(c) / self.h;
        if dist < NEAR {
            self.green_boundary(t, c)
        } else {
            let rule = if dist < MID { &self.mid_rule } else { &self.far_rule };
            let mut acc = Dyadic2::zero();
            for &(x, wx) in rule {
                for &(y, wy) in rule {
                    let r = c + Point2::new(x, y);
                    acc += green_b_2d_sep(t - r, self.k, self.k0sq) * (wx * wy);
                }
            }
            acc
        }
    }

    /// `int_cell grad_t g(t - r') dA'` with the scalar `g = (i/4) H0(k|t-r'|)`.
    pub fn grad_scalar(&self, t: Point2, c: Point2) -> [Complex64; 2] {
        let dist = t.dist(c) / self.h;
        if dist < NEAR {
            // -oint n' g ds'
            let mut acc = [Complex64::default(); 2];
            for (a, b, n) in self.edges(c) {
                self.edge_quadrature(t, a, b, |q, w| {
                    let r = q.dist(t);
                    let g = I * 0.25 * special::hankel1_01(self.k * r).0 * w;
                    acc[0] -= g * n.x;
                    acc[1] -= g * n.y;
                });
            }
            acc
        } else {
            let rule = if dist < MID { &self.mid_rule } else { &self.far_rule };
            let mut acc = [Complex64::default(); 2];
            for &(x, wx) in rule {
                for &(y, wy) in rule {
                    let d = t - (c + Point2::new(x, y));
                    let r = d.norm();
                    // g'(R) = -(i/4) k H1(kR)
                    let gp = -I * 0.25 * self.k * special::hankel1_01(self.k * r).1 * (wx * wy / r);
                    acc[0] += gp * d.x;
                    acc[1] += gp * d.y;
                }
            }
            acc
        }
    }

    /// Counter-clockwise edges `(start, end, outward normal)` of the cell at `c`.
    fn edges(&self, c: Point2) -> [(Point2, Point2, Point2); 4] {
        let s = 0.5 * self.h;
        let p = |x: f64, y: f64| c + Point2::new(x * s, y * s);
        [
            (p(-1.0, -1.0), p(1.0, -1.0), Point2::new(0.0, -1.0)),
            (p(1.0, -1.0), p(1.0, 1.0), Point2::new(1.0, 0.0)),
            (p(1.0, 1.0), p(-1.0, 1.0), Point2::new(0.0, 1.0)),
            (p(-1.0, 1.0), p(-1.0, -1.0), Point2::new(-1.0, 0.0)),
        ]
    }

    /// Gauss quadrature along the segment `a -> b`, with panels graded
    /// geometrically away from the point nearest to `t`. Calls `f(q, ds)`.
    fn edge_quadrature(&self, t: Point2, a: Point2, b: Point2, mut f: impl FnMut(Point2, f64)) {
        let e = b - a;
        let len = e.norm();
        let s_foot = ((t - a).dot(e) / (len * len)).clamp(0.0, 1.0);
        let foot = a + e * s_foot;
        let delta = t.dist(foot).max(1e-3 * len);
        let (x, w) = &self.edge_rule;
        let mut run = |from: f64, to: f64| {
            // arc length measured from the foot, towards `to`
            let sign = if to >= from { 1.0 } else { -1.0 };
            let total = (to - from).abs() * len;
            let mut lo = 0.0;
            let mut width = delta;
            while lo < total {
                let hi = (lo + width).min(total);
                let (m, r) = (0.5 * (lo + hi), 0.5 * (hi - lo));
                for (xi, wi) in x.iter().zip(w) {
                    let arc = m + r * xi;
                    let q = foot + e * (sign * arc / len);
                    f(q, r * wi);
                }
                lo = hi;
                width *= 3.0;
            }
        };
        run(s_foot, 1.0);
        run(s_foot, 0.0);
    }

    fn green_boundary(&self, t: Point2, c: Point2) -> Dyadic2 {
        let k = self.k;
        let k2 = k * k;
        let mut scalar = Complex64::default();
        let mut tensor = [[Complex64::default(); 2]; 2];
        for (a, b, n) in self.edges(c) {
            let e = b - a;
            let len = e.norm();
            let tangent = e * (1.0 / len);
            self.edge_quadrature(t, a, b, |q, ds| {
                let d = q - t;
                let r2 = d.dot(d);
                let r = r2.sqrt();
                let kr = k * r;
                // dtheta = (d x tangent) / |d|^2 ds
                let dtheta = d.cross(tangent) / r2 * ds;
                scalar += I / (4.0 * k2) * special::int_x_hankel0(kr) * dtheta;
                let gp = -I * 0.25 * k * special::hankel1_01(kr).1;
                let nv = [n.x, n.y];
                let dv = [d.x / r, d.y / r];
                for i in 0..2 {
                    for j in 0..2 {
                        tensor[i][j] += nv[i] * gp * dv[j] * ds;
                    }
                }
            });
        }
        let mut out = Dyadic2::zero();
        for i in 0..2 {
            for j in 0..2 {
                out.0[i][j] = self.k0sq * tensor[i][j] / k2;
            }
            out.0[i][i] += self.k0sq * scalar;
        }
        // The divergence-theorem tensor is symmetric only up to quadrature
        // error; symmetrize so discrete reciprocity is exact.
        let off = 0.5 * (out.0[0][1] + out.0[1][0]);
        out.0[0][1] = off;
        out.0[1][0] = off;
        out
    }
}

/// Cell integrals for all non-negative lattice offsets `(di, dj)`,
/// `di <= max_di`, `dj <= max_dj`; other offsets follow by symmetry
/// (the `xy` entry is odd in each offset, the diagonal even).
#[derive(Debug, Clone)]
pub struct KernelTable {
    pub max_di: usize,
    pub max_dj: usize,
    green: Vec<Dyadic2>,
    grad: Option<Vec<[Complex64; 2]>>,
}

impl KernelTable {
    pub fn build(kernel: &CellKernel, max_di: usize, max_dj: usize, with_grad: bool) -> Self {
        let h = kernel.h();
        let offsets: Vec<(usize, usize)> =
            (0..=max_di).flat_map(|i| (0..=max_dj).map(move |j| (i, j))).collect();
        let green = offsets
            .par_iter()
            .map(|&(i, j)| kernel.green(Point2::new(i as f64 * h, j as f64 * h), Point2::default()))
            .collect();
        let grad = with_grad.then(|| {
            offsets
                .par_iter()
                .map(|&(i, j)| kernel.grad_scalar(Point2::new(i as f64 * h, j as f64 * h), Point2::default()))
                .collect()
        });
        Self { max_di, max_dj, green, grad }
    }

    fn index(&self, di: usize, dj: usize) -> usize {
        assert!(di <= self.max_di && dj <= self.max_dj, "offset ({di}, {dj}) outside kernel table");
        di * (self.max_dj + 1) + dj
    }

    /// Integral over the cell at offset `-(di, dj)` as seen from the origin
    /// target, i.e. the kernel for target minus source cell index `(di, dj)`.
    pub fn green(&self, di: i64, dj: i64) -> Dyadic2 {
        let g = self.green[self.index(di.unsigned_abs() as usize, dj.unsigned_abs() as usize)];
        if (di < 0) != (dj < 0) && di != 0 && dj != 0 {
            Dyadic([[g.0[0][0], -g.0[0][1]], [-g.0[1][0], g.0[1][1]]])
        } else {
            g
        }
    }

    pub fn grad(&self, di: i64, dj: i64) -> [Complex64; 2] {
        let table = self.grad.as_ref().expect("kernel table built without gradients");
        let g = table[self.index(di.unsigned_abs() as usize, dj.unsigned_abs() as usize)];
        [
            if di < 0 { -g[0] } else { g[0] },
            if dj < 0 { -g[1] } else { g[1] },
        ]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::C0;
    use std::f64::consts::PI;

    const W: f64 = 2.0 * PI * 415.863e12;

    fn kernel(h: f64, omega: Complex64) -> CellKernel {
        CellKernel::new(omega, &Background::new(1.5).unwrap(), h)
    }

    /// Tensor Gauss over the cell split into `m x m` subcells.
    fn brute(kern: &CellKernel, t: Point2, c: Point2, m: usize) -> Dyadic2 {
        let h = kern.h();
        let sub = h / m as f64;
        let rule = gauss_on(12, -0.5 * sub, 0.5 * sub);
        let mut acc = Dyadic2::zero();
        for a in 0..m {
            for b in 0..m {
                let cc = c + Point2::new(-0.5 * h + (a as f64 + 0.5) * sub, -0.5 * h + (b as f64 + 0.5) * sub);
                for &(x, wx) in &rule {
                    for &(y, wy) in &rule {
                        let r = cc + Point2::new(x, y);
                        acc += green_b_2d_sep(t - r, kern.k(), kern.k0sq()) * (wx * wy);
                    }
                }
            }
        }
        acc
    }

    #[test]
    fn boundary_form_matches_area_quadrature_outside() {
        let h = 1e-9;
        for omega in [Complex64::new(W, 0.0), Complex64::new(W, -0.09 * W)] {
            let kern = kernel(h, omega);
            for t in [Point2::new(h, 0.0), Point2::new(h, h), Point2::new(2.0 * h, -h), Point2::new(0.7 * h, 0.2 * h)] {
                let got = kern.green_boundary(t, Point2::default());
                let reference = brute(&kern, t, Point2::default(), 8);
                let err = (got - reference).max_abs() / reference.max_abs();
                assert!(err < 1e-7, "t={t:?} err={err:e}");
            }
        }
    }

    #[test]
    fn self_cell_contains_the_delta_term() {
        // Trace identity: tr int G = k0^2 (S - 1/k^2), and by symmetry the
        // self-cell integral is isotropic.
        let h = 1e-9;
        let kern = kernel(h, Complex64::new(W, 0.0));
        let g = kern.green(Point2::default(), Point2::default());
        assert!(g.xy().norm() < 1e-12 * g.xx().norm());
        assert!((g.xx() - g.yy()).norm() < 1e-10 * g.xx().norm());
        // Static limit: int g over a small square ~ -(h^2/2pi)(ln(kh/2)-...) is
        // negligible next to the delta term, so xx ~ -k0^2/(2k^2) = -1/(2 eps_B).
        let expect = -1.0 / (2.0 * 2.25);
        assert!((g.xx().re - expect).abs() < 1e-3, "{}", g.xx());
    }

    #[test]
    fn self_cell_scalar_matches_polar_integration() {
        // Off-diagonal free check on the scalar part: xx + yy = k0^2 (S - 1/k^2)
        // with S by polar integration over four triangles.
        let h = 4e-9;
        let kern = kernel(h, Complex64::new(W, 0.0));
        let k = kern.k();
        let g = kern.green(Point2::default(), Point2::default());
        let rule_t = gauss_on(40, -PI / 4.0, PI / 4.0);
        let mut s = Complex64::default();
        for &(th, wt) in &rule_t {
            let rmax = 0.5 * h / th.cos();
            for &(r, wr) in &gauss_on(40, 0.0, rmax) {
                s += I * 0.25 * special::hankel1_01(k * r).0 * r * wr * wt;
            }
        }
        s *= 4.0;
        let k0sq = (W / C0).powi(2);
        let trace = k0sq * (s - 1.0 / (k * k));
        assert!((g.xx() + g.yy() - trace).norm() < 1e-8 * trace.norm());
    }

    #[test]
    fn tiers_agree_at_switch_points() {
        let h = 1e-9;
        let kern = kernel(h, Complex64::new(W, -0.09 * W));
        for d in [NEAR, MID] {
            let t = Point2::new(d * h * 0.8, d * h * 0.6);
            let exact = kern.green_boundary(t, Point2::default());
            let fast = kern.green(t + Point2::new(1e-15, 0.0), Point2::default());
            assert!((exact - fast).max_abs() < 1e-5 * exact.max_abs());
        }
    }

    #[test]
    fn grad_scalar_matches_brute_force() {
        let h = 1e-9;
        let kern = kernel(h, Complex64::new(W, 0.0));
        let t = Point2::new(1.0 * h, 0.5 * h);
        let got = kern.grad_scalar(t, Point2::default());
        // finite difference of the scalar integral computed by area quadrature
        let scalar = |t: Point2| {
            let rule = gauss_on(40, -0.5 * h, 0.5 * h);
            let mut s = Complex64::default();
            for &(x, wx) in &rule {
                for &(y, wy) in &rule {
                    let r = t.dist(Point2::new(x, y));
                    s += I * 0.25 * special::hankel1_01(kern.k() * r).0 * wx * wy;
                }
            }
            s
        };
        let e = 1e-12;
        let fx = (scalar(t + Point2::new(e, 0.0)) - scalar(t - Point2::new(e, 0.0))) / (2.0 * e);
        let fy = (scalar(t + Point2::new(0.0, e)) - scalar(t - Point2::new(0.0, e))) / (2.0 * e);
        assert!((got[0] - fx).norm() < 1e-4 * fx.norm(), "{} vs {fx}", got[0]);
        assert!((got[1] - fy).norm() < 1e-4 * fy.norm(), "{} vs {fy}", got[1]);
    }

    #[test]
    fn table_symmetry_matches_direct() {
        let h = 1e-9;
        let kern = kernel(h, Complex64::new(W, 0.0));
        let table = KernelTable::build(&kern, 4, 4, true);
        for (di, dj) in [(-2i64, 3i64), (3, -1), (-1, -4), (0, -2), (2, 0)] {
            let direct = kern.green(Point2::new(di as f64 * h, dj as f64 * h), Point2::default());
            assert!((table.green(di, dj) - direct).max_abs() < 1e-12 * direct.max_abs());
            let g = kern.grad_scalar(Point2::new(di as f64 * h, dj as f64 * h), Point2::default());
            let tg = table.grad(di, dj);
            assert!((tg[0] - g[0]).norm() + (tg[1] - g[1]).norm() < 1e-10 * (g[0].norm() + g[1].norm() + 1e-30));
        }
    }
}
