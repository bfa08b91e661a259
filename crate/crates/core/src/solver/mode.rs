//! Quasinormal mode fields.
//!
//! A mode is stored twice: exactly, as its values on the resonator cells
//! (from which the field anywhere follows through the volume integral at the
//! complex eigenfrequency), and as samples on a lattice box around the
//! resonator for export and near-field quadrature.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::{CellKernel, KernelTable};
use crate::model::{ComplexFrequency, GridSpec, PmlSpec, Point2, Resonator};
use crate::solver::pole::{find_pole, null_vector, PoleSearch};
use crate::solver::radiator::Radiator;
use crate::solver::vie::Discretization;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "state", rename_all = "snake_case")]
pub enum NormState {
    Raw,
    /// Scaled so that the inner product is one; `norm` is the inner product
    /// of the raw field that was divided out.
    Normalized { norm: Complex64 },
}

/// Phase convention of a raw mode.
pub const GAUGE: &str = "largest-component-real-positive";

/// Index window of lattice cells `(i_lo..=i_hi, j_lo..=j_hi)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LatticeBox {
    pub i_lo: i64,
    pub i_hi: i64,
    pub j_lo: i64,
    pub j_hi: i64,
}

impl LatticeBox {
    pub fn nx(&self) -> usize {
        (self.i_hi - self.i_lo + 1) as usize
    }

    pub fn ny(&self) -> usize {
        (self.j_hi - self.j_lo + 1) as usize
    }

    pub fn len(&self) -> usize {
        self.nx() * self.ny()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Row-major position of `(i, j)`.
    pub fn index(&self, i: i64, j: i64) -> usize {
        (j - self.j_lo) as usize * self.nx() + (i - self.i_lo) as usize
    }

    pub fn cell(&self, idx: usize) -> (i64, i64) {
        (self.i_lo + (idx % self.nx()) as i64, self.j_lo + (idx / self.nx()) as i64)
    }

    /// Smallest box of `disc`'s lattice containing a disc of `radius` about
    /// `center`, plus `pad` cells.
    pub fn around(disc: &Discretization, center: Point2, radius: f64, pad: i64) -> Self {
        let h = disc.h;
        let lo = center - Point2::new(radius, radius) - disc.anchor;
        let hi = center + Point2::new(radius, radius) - disc.anchor;
        Self {
            i_lo: (lo.x / h).floor() as i64 - pad,
            i_hi: (hi.x / h).ceil() as i64 + pad,
            j_lo: (lo.y / h).floor() as i64 - pad,
            j_hi: (hi.y / h).ceil() as i64 + pad,
        }
    }

    /// Physical corners of the box.
    pub fn bounds(&self, disc: &Discretization) -> (Point2, Point2) {
        let h = disc.h;
        (
            disc.anchor + Point2::new(self.i_lo as f64 * h, self.j_lo as f64 * h),
            disc.anchor + Point2::new((self.i_hi + 1) as f64 * h, (self.j_hi + 1) as f64 * h),
        )
    }
}

/// Field and `(curl E)_z` of a cell polarization on every cell of a lattice box.
pub struct LatticeSamples {
    pub ex: Vec<Complex64>,
    pub ey: Vec<Complex64>,
    pub curl: Option<Vec<Complex64>>,
}

/// Convolve the polarization with tabulated cell integrals.
pub fn sample_lattice(
    disc: &Discretization,
    kernel: &CellKernel,
    polarization: &[[Complex64; 2]],
    bx: &LatticeBox,
    with_curl: bool,
) -> LatticeSamples {
    let (ci0, ci1, cj0, cj1) = disc.index_bounds();
    let max_di = (bx.i_hi - ci0).max(ci1 - bx.i_lo).max(0) as usize;
    let max_dj = (bx.j_hi - cj0).max(cj1 - bx.j_lo).max(0) as usize;
    let table = KernelTable::build(kernel, max_di, max_dj, with_curl);
    let k0sq = kernel.k0sq();
    let values: Vec<([Complex64; 2], Complex64)> = (0..bx.len())
        .into_par_iter()
        .map(|idx| {
            let (i, j) = bx.cell(idx);
            let mut e = [Complex64::default(); 2];
            let mut c = Complex64::default();
            for (&(ci, cj), p) in disc.cells.iter().zip(polarization) {
                let g = table.green(i - ci, j - cj);
                let v = g.apply(*p);
                e[0] += v[0];
                e[1] += v[1];
                if with_curl {
                    let gr = table.grad(i - ci, j - cj);
                    c += gr[0] * p[1] - gr[1] * p[0];
                }
            }
            (e, c * k0sq)
        })
        .collect();
    LatticeSamples {
        ex: values.iter().map(|v| v.0[0]).collect(),
        ey: values.iter().map(|v| v.0[1]).collect(),
        curl: with_curl.then(|| values.iter().map(|v| v.1).collect()),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModeField {
    /// Sampling lattice; samples sit at cell centres, row-major in y.
    pub grid: GridSpec,
    pub sample_box: LatticeBox,
    pub ex: Vec<Complex64>,
    pub ey: Vec<Complex64>,
    pub eigenfrequency: ComplexFrequency,
    pub norm_state: NormState,
    pub gauge: String,
    pub resonator: Resonator,
    pub disc: Discretization,
    /// Field on the resonator cells.
    pub cell_field: Vec<[Complex64; 2]>,
}

/// Padding of the sample box beyond twice the enclosing radius, in cells.
const SAMPLE_PAD: i64 = 2;

impl ModeField {
    /// Build a raw mode from its cell values at eigenfrequency `omega`,
    /// applying the gauge and sampling the surrounding box.
    pub fn from_cells(resonator: &Resonator, disc: &Discretization, omega: Complex64, cells: Vec<[Complex64; 2]>) -> Result<Self> {
        let eigenfrequency = ComplexFrequency::from_complex(omega)?;
        let largest = cells
            .iter()
            .flat_map(|c| c.iter())
            .copied()
            .max_by(|a, b| a.norm().total_cmp(&b.norm()))
            .ok_or_else(|| Error::domain("empty mode"))?;
        if largest.norm() == 0.0 {
            return Err(Error::domain("mode field vanishes identically"));
        }
        let phase = largest.conj() / largest.norm();
        let cells: Vec<[Complex64; 2]> = cells.iter().map(|c| [c[0] * phase, c[1] * phase]).collect();
        let (center, radius) = disc.enclosing_circle();
        let sample_box = LatticeBox::around(disc, center, 2.0 * radius, SAMPLE_PAD);
        let (lo, hi) = sample_box.bounds(disc);
        let grid = GridSpec::new(lo, hi, disc.h, PmlSpec::default())?;
        let mut mode = Self {
            grid,
            sample_box,
            ex: Vec::new(),
            ey: Vec::new(),
            eigenfrequency,
            norm_state: NormState::Raw,
            gauge: GAUGE.to_string(),
            resonator: *resonator,
            disc: disc.clone(),
            cell_field: cells,
        };
        mode.resample()?;
        Ok(mode)
    }

    fn resample(&mut self) -> Result<()> {
        let kernel = CellKernel::new(self.omega(), &self.resonator.background, self.disc.h);
        let s = sample_lattice(&self.disc, &kernel, &self.polarization()?, &self.sample_box, false);
        self.ex = s.ex;
        self.ey = s.ey;
        // resonator cells carry the exact collocation values
        for (&(i, j), f) in self.disc.cells.iter().zip(&self.cell_field) {
            let idx = self.sample_box.index(i, j);
            self.ex[idx] = f[0];
            self.ey[idx] = f[1];
        }
        Ok(())
    }

    pub fn omega(&self) -> Complex64 {
        self.eigenfrequency.complex()
    }

    /// `Delta-eps(omega~) f` on the resonator cells.
    pub fn polarization(&self) -> Result<Vec<[Complex64; 2]>> {
        self.polarization_at(self.omega())
    }

    /// `Delta-eps(omega) f` with the contrast taken at another frequency.
    pub fn polarization_at(&self, omega: Complex64) -> Result<Vec<[Complex64; 2]>> {
        let eps = self.resonator.material.eps_at(omega)?;
        let eps_b = self.resonator.background.eps_b();
        Ok(self.cell_field.iter().enumerate().map(|(j, f)| self.disc.contrast_tensor(j, eps, eps_b).apply(*f)).collect())
    }

    /// Evaluator for the mode anywhere outside the resonator.
    pub fn radiator(&self) -> Result<Radiator> {
        Ok(Radiator::new(&self.disc, self.omega(), &self.resonator.background, self.polarization()?))
    }

    /// Field at an arbitrary point: the cell value inside the resonator, the
    /// radiated field outside.
    pub fn field_at(&self, r: Point2) -> Result<[Complex64; 2]> {
        if let Some(idx) = self.cell_at(r) {
            return Ok(self.cell_field[idx]);
        }
        Ok(self.radiator()?.field(r))
    }

    /// Resonator cell containing `r`, if any.
    pub fn cell_at(&self, r: Point2) -> Option<usize> {
        if !self.resonator.geometry.inside(r) {
            return None;
        }
        let d = r - self.disc.anchor;
        let (i, j) = ((d.x / self.disc.h).floor() as i64, (d.y / self.disc.h).floor() as i64);
        self.disc.index_of(i, j)
    }

    /// Sample at lattice cell `(i, j)` if it lies in the sample box.
    pub fn sample(&self, i: i64, j: i64) -> Option<[Complex64; 2]> {
        let b = &self.sample_box;
        if i < b.i_lo || i > b.i_hi || j < b.j_lo || j > b.j_hi {
            return None;
        }
        let idx = b.index(i, j);
        Some([self.ex[idx], self.ey[idx]])
    }

    /// Multiply the field by a complex constant.
    pub fn scaled(&self, c: Complex64) -> Self {
        let mut m = self.clone();
        m.ex.iter_mut().chain(m.ey.iter_mut()).for_each(|v| *v *= c);
        m.cell_field.iter_mut().for_each(|f| {
            f[0] *= c;
            f[1] *= c;
        });
        m
    }

    /// Lattice sample with the largest `|f|` outside the resonator.
    pub fn exterior_maximum(&self) -> Point2 {
        let mut best = (0.0, Point2::default());
        for idx in 0..self.sample_box.len() {
            let (i, j) = self.sample_box.cell(idx);
            let r = self.disc.lattice_point(i, j);
            if self.resonator.geometry.inside(r) {
                continue;
            }
            let a = self.ex[idx].norm_sqr() + self.ey[idx].norm_sqr();
            if a > best.0 {
                best = (a, r);
            }
        }
        best.1
    }
}

/// Pole search followed by mode extraction.
pub fn find_qnm(resonator: &Resonator, disc: &Discretization, search: &PoleSearch) -> Result<ModeField> {
    let pole = find_pole(resonator, disc, search)?;
    let (x, residual) = null_vector(&pole);
    log::info!("mode residual {residual:.2e}");
    let cells = x.chunks(2).map(|c| [c[0], c[1]]).collect();
    ModeField::from_cells(resonator, disc, pole.omega, cells)
}
