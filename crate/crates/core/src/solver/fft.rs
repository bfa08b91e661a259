//! Matrix-free volume operator for grids too large to factor densely.
//!
//! The kernel depends only on the lattice offset between cells, so `K x` is a
//! discrete convolution: the cell vector is scattered onto the bounding
//! lattice, zero-padded to twice its size and multiplied in Fourier space.
//! Systems are solved with restarted GMRES, left-preconditioned by the
//! inverse of each cell's self-block.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::model::Dipole;
use crate::solver::vie::{DipoleSolution, VieOperator};

type C = Complex64;

/// Stopping rule for the iterative solve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GmresOptions {
    pub tolerance: f64,
    pub restart: usize,
    pub max_iterations: usize,
}

impl Default for GmresOptions {
    fn default() -> Self {
        Self { tolerance: 1e-10, restart: 400, max_iterations: 8000 }
    }
}

struct Fft2 {
    px: usize,
    py: usize,
    row_fwd: Arc<dyn Fft<f64>>,
    row_inv: Arc<dyn Fft<f64>>,
    col_fwd: Arc<dyn Fft<f64>>,
    col_inv: Arc<dyn Fft<f64>>,
}

impl Fft2 {
    fn new(px: usize, py: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            px,
            py,
            row_fwd: planner.plan_fft_forward(px),
            row_inv: planner.plan_fft_inverse(px),
            col_fwd: planner.plan_fft_forward(py),
            col_inv: planner.plan_fft_inverse(py),
        }
    }

    /// In-place 2D transform of a row-major `py x px` array (x fastest).
    /// The inverse is normalized.
    fn run(&self, data: &mut [C], inverse: bool) {
        let (row, col) = if inverse { (&self.row_inv, &self.col_inv) } else { (&self.row_fwd, &self.col_fwd) };
        for r in data.chunks_mut(self.px) {
            row.process(r);
        }
        let mut column = vec![C::default(); self.py];
        for i in 0..self.px {
            for j in 0..self.py {
                column[j] = data[j * self.px + i];
            }
            col.process(&mut column);
            for j in 0..self.py {
                data[j * self.px + i] = column[j];
            }
        }
        if inverse {
            let s = 1.0 / (self.px * self.py) as f64;
            data.iter_mut().for_each(|v| *v *= s);
        }
    }
}

/// `1 - K D` applied by FFT convolution.
pub struct FastVie {
    pub op: VieOperator,
    pub options: GmresOptions,
    fft: Fft2,
    /// Lattice slot of every cell in the padded array.
    slots: Vec<usize>,
    /// Spectra of the `xx`, `xy` and `yy` kernel entries.
    spectra: [Vec<C>; 3],
    /// Inverse of each cell self-block `1 - K_00 Delta-eps_j`.
    precond: Vec<[[C; 2]; 2]>,
}

impl FastVie {
    pub fn new(op: VieOperator, options: GmresOptions) -> Result<Self> {
        let (i0, i1, j0, j1) = op.disc.index_bounds();
        let (nx, ny) = ((i1 - i0 + 1) as usize, (j1 - j0 + 1) as usize);
        let (px, py) = ((2 * nx).max(2), (2 * ny).max(2));
        let fft = Fft2::new(px, py);
        let slots =
            op.disc.cells.iter().map(|&(i, j)| (j - j0) as usize * px + (i - i0) as usize).collect();
        let wrap = |d: i64, n: usize| if d < 0 { (d + n as i64) as usize } else { d as usize };
        let mut spectra = [vec![C::default(); px * py], vec![C::default(); px * py], vec![C::default(); px * py]];
        for dj in -(ny as i64 - 1)..ny as i64 {
            for di in -(nx as i64 - 1)..nx as i64 {
                let g = op.table.green(di, dj);
                let s = wrap(dj, py) * px + wrap(di, px);
                spectra[0][s] = g.0[0][0];
                spectra[1][s] = g.0[0][1];
                spectra[2][s] = g.0[1][1];
            }
        }
        for s in spectra.iter_mut() {
            fft.run(s, false);
        }
        let k00 = op.table.green(0, 0);
        let one = C::new(1.0, 0.0);
        let precond = (0..op.disc.len())
            .map(|j| {
                let m = k00.matmul(&op.cell_contrast(j));
                let (a, b, c, d) = (one - m.0[0][0], -m.0[0][1], -m.0[1][0], one - m.0[1][1]);
                let det = a * d - b * c;
                if !(det.norm() > 0.0) {
                    return Err(Error::LinearSolve("singular cell self-block".into()));
                }
                Ok([[d / det, -b / det], [-c / det, a / det]])
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { op, options, fft, slots, spectra, precond })
    }

    /// `K p` for a per-cell polarization.
    fn convolve(&self, p: &[[C; 2]]) -> Vec<C> {
        let n = self.fft.px * self.fft.py;
        let mut ux = vec![C::default(); n];
        let mut uy = vec![C::default(); n];
        for (c, &s) in self.slots.iter().enumerate() {
            ux[s] = p[c][0];
            uy[s] = p[c][1];
        }
        self.fft.run(&mut ux, false);
        self.fft.run(&mut uy, false);
        let [kxx, kxy, kyy] = &self.spectra;
        for s in 0..n {
            let (a, b) = (ux[s], uy[s]);
            ux[s] = kxx[s] * a + kxy[s] * b;
            uy[s] = kxy[s] * a + kyy[s] * b;
        }
        self.fft.run(&mut ux, true);
        self.fft.run(&mut uy, true);
        let mut out = Vec::with_capacity(2 * p.len());
        for &s in &self.slots {
            out.push(ux[s]);
            out.push(uy[s]);
        }
        out
    }

    /// `(1 - K D) x`.
    pub fn apply(&self, x: &[C]) -> Vec<C> {
        let kp = self.convolve(&self.op.polarization(x));
        x.iter().zip(kp).map(|(x, k)| x - k).collect()
    }

    fn precondition(&self, v: &mut [C]) {
        for (c, p) in v.chunks_mut(2).zip(&self.precond) {
            let (a, b) = (c[0], c[1]);
            c[0] = p[0][0] * a + p[0][1] * b;
            c[1] = p[1][0] * a + p[1][1] * b;
        }
    }

    /// Solves `(1 - K D) x = rhs`; fails if GMRES does not reach the tolerance.
    pub fn solve(&self, rhs: &[C]) -> Result<Vec<C>> {
        let mut b = rhs.to_vec();
        self.precondition(&mut b);
        let apply = |x: &[C]| {
            let mut y = self.apply(x);
            self.precondition(&mut y);
            y
        };
        let (x, iterations) = gmres(apply, &b, self.options)?;
        log::debug!("gmres converged in {iterations} iterations ({} unknowns)", rhs.len());
        Ok(x)
    }

    pub fn residual(&self, x: &[C], b: &[C]) -> f64 {
        relative_residual(&self.apply(x), b)
    }

    pub fn solve_dipole(&self, dipole: &Dipole) -> Result<DipoleSolution> {
        let inc = self.op.dipole_incident(dipole);
        let field = self.solve(&inc)?;
        let residual = self.residual(&field, &inc);
        if !(residual < 100.0 * self.options.tolerance) {
            return Err(Error::LinearSolve(format!("dipole solve residual {residual:.3e}")));
        }
        Ok(DipoleSolution { dipole: *dipole, polarization: self.op.polarization(&field), cell_field: field })
    }
}

fn norm(v: &[C]) -> f64 {
    v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
}

fn relative_residual(ax: &[C], b: &[C]) -> f64 {
    let num: f64 = ax.iter().zip(b).map(|(a, b)| (a - b).norm_sqr()).sum();
    (num / norm(b).powi(2).max(1e-300)).sqrt()
}

/// Restarted GMRES with modified Gram-Schmidt and Givens rotations.
/// Returns the solution and the number of operator applications.
pub fn gmres(apply: impl Fn(&[C]) -> Vec<C>, b: &[C], opts: GmresOptions) -> Result<(Vec<C>, usize)> {
    let n = b.len();
    let b_norm = norm(b);
    let mut x = vec![C::default(); n];
    if b_norm == 0.0 {
        return Ok((x, 0));
    }
    let m = opts.restart.max(1);
    let mut iterations = 0;
    let mut rel = 1.0;
    while iterations < opts.max_iterations {
        let ax = apply(&x);
        let r: Vec<C> = b.iter().zip(&ax).map(|(b, a)| b - a).collect();
        let beta = norm(&r);
        rel = beta / b_norm;
        if rel < opts.tolerance {
            return Ok((x, iterations));
        }
        let mut basis: Vec<Vec<C>> = vec![r.iter().map(|v| v / beta).collect()];
        let mut hess: Vec<Vec<C>> = Vec::with_capacity(m);
        let mut rot: Vec<(f64, C)> = Vec::with_capacity(m);
        let mut g = vec![C::new(beta, 0.0)];
        for k in 0..m {
            let mut w = apply(&basis[k]);
            iterations += 1;
            let mut col = vec![C::default(); k + 2];
            for (i, v) in basis.iter().enumerate() {
                let hik: C = v.iter().zip(&w).map(|(v, w)| v.conj() * w).sum();
                col[i] = hik;
                w.iter_mut().zip(v).for_each(|(w, v)| *w -= hik * v);
            }
            let wn = norm(&w);
            col[k + 1] = C::new(wn, 0.0);
            for (i, &(c, s)) in rot.iter().enumerate() {
                let (a, b) = (col[i], col[i + 1]);
                col[i] = c * a + s * b;
                col[i + 1] = -s.conj() * a + c * b;
            }
            let (a, bb) = (col[k], col[k + 1]);
            let r = (a.norm_sqr() + bb.norm_sqr()).sqrt();
            let (c, s) = if a.norm() == 0.0 { (0.0, C::new(1.0, 0.0)) } else { (a.norm() / r, a / a.norm() * bb.conj() / r) };
            col[k] = c * a + s * bb;
            col[k + 1] = C::default();
            rot.push((c, s));
            g.push(-s.conj() * g[k]);
            g[k] *= c;
            hess.push(col);
            rel = g[k + 1].norm() / b_norm;
            let done = rel < opts.tolerance || wn == 0.0 || iterations >= opts.max_iterations;
            if !done {
                basis.push(w.iter().map(|v| v / wn).collect());
            }
            if done || k + 1 == m {
                let dim = k + 1;
                let mut y = vec![C::default(); dim];
                for i in (0..dim).rev() {
                    let mut acc = g[i];
                    for j in i + 1..dim {
                        acc -= hess[j][i] * y[j];
                    }
                    y[i] = acc / hess[i][i];
                }
                for (j, yj) in y.iter().enumerate() {
                    x.iter_mut().zip(&basis[j]).for_each(|(x, v)| *x += yj * v);
                }
                break;
            }
        }
    }
    let ax = apply(&x);
    let final_rel = relative_residual(&ax, b);
    if final_rel < opts.tolerance {
        return Ok((x, iterations));
    }
    Err(Error::LinearSolve(format!(
        "GMRES stalled at relative residual {:.3e} after {iterations} iterations",
        final_rel.min(rel.max(final_rel))
    )))
}
