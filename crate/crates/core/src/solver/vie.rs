//! Volume integral formulation over the resonator cells.
//!
//! The total field satisfies `E = E_inc + int_V G_B Delta-eps E dA'`. With
//! `E` piecewise constant on square cells and collocation at cell centres,
//! this becomes `(1 - K D) e = e_inc`, where `K` holds cell integrals of
//! `G_B` and `D` the per-cell contrast. Only the resonator is discretized and
//! the outgoing radiation condition is exact, so the system stays small.
//! `K` is symmetric and so is `K D` up to the diagonal scaling, which makes
//! the discrete Green function exactly reciprocal.

use faer::linalg::solvers::{PartialPivLu, Solve};
use faer::Mat;
use num_complex::Complex64;

use crate::background::{Dyadic, Dyadic2};
use crate::error::{Error, Result};
use crate::kernel::{CellKernel, KernelTable};
use crate::model::{Dipole, Geometry, Point2, Resonator};

/// Sub-samples per cell side used to measure how much of a cell the
/// resonator covers.
const FILL_SAMPLES: usize = 20;

/// Square cells of side `h` covering the resonator support. Cell `(i, j)`
/// spans `anchor + [i h, (i+1) h] x [j h, (j+1) h]`; every cell the resonator
/// overlaps is kept together with its covered area fraction and, for partly
/// covered cells, the outward boundary normal.
///
/// A partly covered cell gets an anisotropic effective permittivity: the
/// area average of `eps` along the boundary (tangential `E` is continuous)
/// and the harmonic average across it (normal `D` is continuous).
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Discretization {
    pub h: f64,
    pub anchor: Point2,
    pub cells: Vec<(i64, i64)>,
    pub fill: Vec<f64>,
    pub normal: Vec<Point2>,
}

impl Discretization {
    /// Lattice aligned with the resonator: the rod faces coincide with cell
    /// faces when its sides are multiples of `h`, and a cylinder centre sits
    /// on a lattice node.
    pub fn new(geometry: &Geometry, h: f64) -> Result<Self> {
        if !(h > 0.0) {
            return Err(Error::domain("cell size must be positive"));
        }
        let (lo, hi) = geometry
            .bbox()
            .ok_or_else(|| Error::domain("volume discretization needs a bounded resonator"))?;
        let anchor = match *geometry {
            Geometry::Cylinder2D { radius, center } => {
                let n = (radius / h).ceil();
                center - Point2::new(n * h, n * h)
            }
            _ => lo,
        };
        let ni = ((hi.x - anchor.x) / h).ceil() as i64 + 1;
        let nj = ((hi.y - anchor.y) / h).ceil() as i64 + 1;
        let mut cells = Vec::new();
        let mut fill = Vec::new();
        let mut normal = Vec::new();
        let step = h / FILL_SAMPLES as f64;
        for j in 0..nj {
            for i in 0..ni {
                let corner = anchor + Point2::new(i as f64 * h, j as f64 * h);
                let mut covered = 0usize;
                for sj in 0..FILL_SAMPLES {
                    for si in 0..FILL_SAMPLES {
                        let p = corner + Point2::new((si as f64 + 0.5) * step, (sj as f64 + 0.5) * step);
                        covered += geometry.inside(p) as usize;
                    }
                }
                if covered > 0 {
                    let c = corner + Point2::new(0.5 * h, 0.5 * h);
                    cells.push((i, j));
                    fill.push(covered as f64 / (FILL_SAMPLES * FILL_SAMPLES) as f64);
                    normal.push(geometry.nearest_surface(c).normal);
                }
            }
        }
        if cells.is_empty() {
            return Err(Error::domain("resonator covers no cell; refine h"));
        }
        Ok(Self { h, anchor, cells, fill, normal })
    }

    /// Effective contrast `eps_eff - eps_B` of cell `idx` for resonator
    /// permittivity `eps`.
    pub fn contrast_tensor(&self, idx: usize, eps: Complex64, eps_b: f64) -> Dyadic2 {
        let f = self.fill[idx];
        let tangential = (eps - eps_b) * f;
        if f == 1.0 {
            return Dyadic2::identity() * tangential;
        }
        let inv = f / eps + (1.0 - f) / eps_b;
        let normal = 1.0 / inv - eps_b;
        self.split(idx, tangential, normal)
    }

    /// Weight `W` such that `int_cell s(r) E.E dA = A (E.W.E)` for a quantity
    /// `s` equal to `s_res` in the resonator and `s_b` outside, with `E` the
    /// cell-averaged field and `eps` the permittivity that sets the normal
    /// jump.
    pub fn weight_tensor(&self, idx: usize, eps: Complex64, eps_b: f64, s_res: Complex64, s_b: Complex64) -> Dyadic2 {
        let f = self.fill[idx];
        let tangential = s_res * f + s_b * (1.0 - f);
        if f == 1.0 {
            return Dyadic2::identity() * tangential;
        }
        let inv = f / eps + (1.0 - f) / eps_b;
        let normal = (s_res * f / (eps * eps) + s_b * (1.0 - f) / (eps_b * eps_b)) / (inv * inv);
        self.split(idx, tangential, normal)
    }

    fn split(&self, idx: usize, tangential: Complex64, normal: Complex64) -> Dyadic2 {
        let n = self.normal[idx];
        let nn = Dyadic([[n.x * n.x, n.x * n.y], [n.x * n.y, n.y * n.y]].map(|r| r.map(|v| Complex64::new(v, 0.0))));
        Dyadic2::identity() * tangential + nn * (normal - tangential)
    }

    /// Index of lattice cell `(i, j)` among the resonator cells.
    pub fn index_of(&self, i: i64, j: i64) -> Option<usize> {
        self.cells.binary_search_by(|&(ci, cj)| (cj, ci).cmp(&(j, i))).ok()
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn center(&self, idx: usize) -> Point2 {
        let (i, j) = self.cells[idx];
        self.lattice_point(i, j)
    }

    /// Centre of lattice cell `(i, j)` (not necessarily a resonator cell).
    pub fn lattice_point(&self, i: i64, j: i64) -> Point2 {
        self.anchor + Point2::new((i as f64 + 0.5) * self.h, (j as f64 + 0.5) * self.h)
    }

    pub fn cell_area(&self) -> f64 {
        self.h * self.h
    }

    /// Inclusive index bounds `(i_min, i_max, j_min, j_max)` of the cells.
    pub fn index_bounds(&self) -> (i64, i64, i64, i64) {
        let mut b = (i64::MAX, i64::MIN, i64::MAX, i64::MIN);
        for &(i, j) in &self.cells {
            b = (b.0.min(i), b.1.max(i), b.2.min(j), b.3.max(j));
        }
        b
    }

    /// Centroid of the cells and the largest distance from it to a cell corner.
    pub fn enclosing_circle(&self) -> (Point2, f64) {
        let n = self.len() as f64;
        let mut c = Point2::default();
        for idx in 0..self.len() {
            c = c + self.center(idx) * (1.0 / n);
        }
        let half = 0.5 * self.h * std::f64::consts::SQRT_2;
        let r = (0..self.len()).map(|i| self.center(i).dist(c) + half).fold(0.0, f64::max);
        (c, r)
    }
}

/// Field radiated by a cell polarization `p_j = Delta-eps_j E_j`:
/// `E(r) = sum_j int_cell_j G_B(r, r') dA' p_j`.
pub fn radiate(kernel: &CellKernel, disc: &Discretization, polarization: &[[Complex64; 2]], r: Point2) -> [Complex64; 2] {
    let mut e = [Complex64::default(); 2];
    for (idx, p) in polarization.iter().enumerate() {
        let g = kernel.green(r, disc.center(idx));
        let v = g.apply(*p);
        e[0] += v[0];
        e[1] += v[1];
    }
    e
}

/// `(curl E)_z` of the field radiated by `polarization`. Only the scalar part
/// of `G_B` has a curl: `curl E = k0^2 sum_j (d_x S_j p_jy - d_y S_j p_jx)`.
pub fn radiate_curl(kernel: &CellKernel, disc: &Discretization, polarization: &[[Complex64; 2]], r: Point2) -> Complex64 {
    let mut acc = Complex64::default();
    for (idx, p) in polarization.iter().enumerate() {
        let g = kernel.grad_scalar(r, disc.center(idx));
        acc += g[0] * p[1] - g[1] * p[0];
    }
    acc * kernel.k0sq()
}

/// The volume-integral operator of a resonator at one (complex) frequency.
#[derive(Debug, Clone)]
pub struct VieOperator {
    pub disc: Discretization,
    pub omega: Complex64,
    pub kernel: CellKernel,
    pub table: KernelTable,
    /// Bulk contrast `eps(omega) - eps_B`.
    pub delta_eps: Complex64,
    contrasts: Vec<Dyadic2>,
}

impl VieOperator {
    pub fn new(resonator: &Resonator, disc: &Discretization, omega: Complex64) -> Result<Self> {
        let delta_eps = resonator.contrast(omega)?;
        let kernel = CellKernel::new(omega, &resonator.background, disc.h);
        let (i0, i1, j0, j1) = disc.index_bounds();
        let table = KernelTable::build(&kernel, (i1 - i0) as usize, (j1 - j0) as usize, false);
        let eps = resonator.material.eps_at(omega)?;
        let eps_b = resonator.background.eps_b();
        let contrasts = (0..disc.len()).map(|j| disc.contrast_tensor(j, eps, eps_b)).collect();
        Ok(Self { disc: disc.clone(), omega, kernel, table, delta_eps, contrasts })
    }

    pub fn unknowns(&self) -> usize {
        2 * self.disc.len()
    }

    /// Block `K_ab` between cells `a` (target) and `b` (source).
    pub fn block(&self, a: usize, b: usize) -> Dyadic2 {
        let (ia, ja) = self.disc.cells[a];
        let (ib, jb) = self.disc.cells[b];
        self.table.green(ia - ib, ja - jb)
    }

    /// Dense `1 - K D`, unknowns ordered `(x_0, y_0, x_1, y_1, ...)`.
    pub fn dense(&self) -> Mat<Complex64> {
        let n = self.unknowns();
        let mut m = Mat::<Complex64>::zeros(n, n);
        for b in 0..self.disc.len() {
            let d = self.cell_contrast(b);
            for a in 0..self.disc.len() {
                let g = self.block(a, b).matmul(&d);
                for p in 0..2 {
                    for q in 0..2 {
                        m[(2 * a + p, 2 * b + q)] = -g.0[p][q];
                    }
                }
            }
        }
        for i in 0..n {
            m[(i, i)] += Complex64::new(1.0, 0.0);
        }
        m
    }

    /// Effective contrast tensor of cell `idx`.
    pub fn cell_contrast(&self, idx: usize) -> Dyadic2 {
        self.contrasts[idx]
    }

    /// `(1 - K D) x` without forming the matrix.
    pub fn apply(&self, x: &[Complex64]) -> Vec<Complex64> {
        let n = self.disc.len();
        let p = self.polarization(x);
        let mut y = x.to_vec();
        for a in 0..n {
            let mut acc = [Complex64::default(); 2];
            for (b, pb) in p.iter().enumerate() {
                let v = self.block(a, b).apply(*pb);
                acc[0] += v[0];
                acc[1] += v[1];
            }
            y[2 * a] -= acc[0];
            y[2 * a + 1] -= acc[1];
        }
        y
    }

    pub fn factor(self) -> Result<FactoredVie> {
        let lu = self.dense().partial_piv_lu();
        let diag_min = (0..self.unknowns()).map(|i| lu.U()[(i, i)].norm()).fold(f64::INFINITY, f64::min);
        if !(diag_min > 0.0) || !diag_min.is_finite() {
            return Err(Error::LinearSolve(format!("singular volume operator at omega = {}", self.omega)));
        }
        Ok(FactoredVie { op: self, lu })
    }

    /// Cell averages of `G_B(r, r_a) n_a`, the incident field of a dipole.
    pub fn dipole_incident(&self, dipole: &Dipole) -> Vec<Complex64> {
        let inv_area = 1.0 / self.disc.cell_area();
        let n = [Complex64::new(dipole.orientation.x, 0.0), Complex64::new(dipole.orientation.y, 0.0)];
        let mut out = Vec::with_capacity(self.unknowns());
        for idx in 0..self.disc.len() {
            // G_B is symmetric, so the cell average equals the cell integral
            // seen from the dipole.
            let g = self.kernel.green(dipole.position, self.disc.center(idx)).transpose();
            let v = g.apply(n);
            out.push(v[0] * inv_area);
            out.push(v[1] * inv_area);
        }
        out
    }

    /// Polarization `Delta-eps_j E_j` of a cell field vector.
    pub fn polarization(&self, field: &[Complex64]) -> Vec<[Complex64; 2]> {
        field.chunks(2).zip(&self.contrasts).map(|(c, d)| d.apply([c[0], c[1]])).collect()
    }
}

/// LU-factored operator.
pub struct FactoredVie {
    pub op: VieOperator,
    lu: PartialPivLu<Complex64>,
}

impl FactoredVie {
    pub fn solve(&self, rhs: &[Complex64]) -> Vec<Complex64> {
        let b = Mat::<Complex64>::from_fn(rhs.len(), 1, |i, _| rhs[i]);
        let x = self.lu.solve(&b);
        (0..rhs.len()).map(|i| x[(i, 0)]).collect()
    }

    /// `log det(1 - K D)`, imaginary part reduced to `(-pi, pi]`.
    pub fn log_det(&self) -> Complex64 {
        let n = self.op.unknowns();
        let mut acc = Complex64::default();
        for i in 0..n {
            acc += self.lu.U()[(i, i)].ln();
        }
        let (fwd, _) = self.lu.P().arrays();
        if permutation_is_odd(fwd) {
            acc += Complex64::new(0.0, std::f64::consts::PI);
        }
        Complex64::new(acc.re, acc.im.sin().atan2(acc.im.cos()))
    }

    /// Full solve of a dipole excitation.
    pub fn solve_dipole(&self, dipole: &Dipole) -> Result<DipoleSolution> {
        let inc = self.op.dipole_incident(dipole);
        let field = self.solve(&inc);
        let residual = residual_norm(&self.op, &field, &inc);
        if !(residual < 1e-8) {
            return Err(Error::LinearSolve(format!("dipole solve residual {residual:.3e}")));
        }
        Ok(DipoleSolution { dipole: *dipole, polarization: self.op.polarization(&field), cell_field: field })
    }
}

fn permutation_is_odd(p: &[usize]) -> bool {
    let mut seen = vec![false; p.len()];
    let mut odd = false;
    for start in 0..p.len() {
        if seen[start] {
            continue;
        }
        let mut len = 0;
        let mut i = start;
        while !seen[i] {
            seen[i] = true;
            i = p[i];
            len += 1;
        }
        if len % 2 == 0 {
            odd = !odd;
        }
    }
    odd
}

/// `|A x - b| / |b|`.
pub fn residual_norm(op: &VieOperator, x: &[Complex64], b: &[Complex64]) -> f64 {
    let ax = op.apply(x);
    let num: f64 = ax.iter().zip(b).map(|(a, b)| (a - b).norm_sqr()).sum();
    let den: f64 = b.iter().map(|v| v.norm_sqr()).sum();
    (num / den.max(1e-300)).sqrt()
}

/// Interior field of a dipole-driven resonator; evaluates the scattered
/// Green-function column anywhere.
#[derive(Debug, Clone)]
pub struct DipoleSolution {
    pub dipole: Dipole,
    pub cell_field: Vec<Complex64>,
    pub polarization: Vec<[Complex64; 2]>,
}

impl DipoleSolution {
    /// `G_scat(r, r_a) n_a`.
    pub fn scattered(&self, op: &VieOperator, r: Point2) -> [Complex64; 2] {
        radiate(&op.kernel, &op.disc, &self.polarization, r)
    }

    /// `n . G_scat(r_a, r_a) . n_a` for the source position itself.
    pub fn self_term(&self, op: &VieOperator, n: Point2) -> Complex64 {
        let e = self.scattered(op, self.dipole.position);
        e[0] * n.x + e[1] * n.y
    }
}

/// Column pair `(G_scat(r, r_a) x, G_scat(r, r_a) y)` assembled as a dyadic.
pub fn scattered_dyadic(x: &DipoleSolution, y: &DipoleSolution, op: &VieOperator, r: Point2) -> Dyadic2 {
    let cx = x.scattered(op, r);
    let cy = y.scattered(op, r);
    Dyadic([[cx[0], cy[0]], [cx[1], cy[1]]])
}
