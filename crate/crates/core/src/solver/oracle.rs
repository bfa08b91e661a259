//! Full-dipole reference calculation: the resonator driven by a point dipole
//! and solved exactly (to discretization error) at a real frequency.

use num_complex::Complex64;

use crate::background::{green_b_2d, im_green_b_diag, Dyadic2};
use crate::error::Result;
use crate::model::{Dipole, Point2, Resonator, C0};
use crate::solver::fft::{FastVie, GmresOptions};
use crate::solver::mie::CrossSections;
use crate::solver::vie::{scattered_dyadic, Discretization, DipoleSolution, FactoredVie, VieOperator};

/// Largest system factored densely; bigger ones are solved iteratively.
pub const DENSE_LIMIT: usize = 7000;

enum Backend {
    Dense(FactoredVie),
    Iterative(FastVie),
}

/// Resonator operator at one real frequency, ready for dipole solves.
pub struct DipoleOracle {
    pub resonator: Resonator,
    pub omega: f64,
    backend: Backend,
}

impl DipoleOracle {
    pub fn new(resonator: &Resonator, disc: &Discretization, omega: f64) -> Result<Self> {
        let op = VieOperator::new(resonator, disc, Complex64::new(omega, 0.0))?;
        let backend = if op.unknowns() <= DENSE_LIMIT {
            Backend::Dense(op.factor()?)
        } else {
            Backend::Iterative(FastVie::new(op, GmresOptions::default())?)
        };
        Ok(Self { resonator: *resonator, omega, backend })
    }

    pub fn operator(&self) -> &VieOperator {
        match &self.backend {
            Backend::Dense(f) => &f.op,
            Backend::Iterative(f) => &f.op,
        }
    }

    fn solve(&self, dipole: &Dipole) -> Result<DipoleSolution> {
        match &self.backend {
            Backend::Dense(f) => f.solve_dipole(dipole),
            Backend::Iterative(f) => f.solve_dipole(dipole),
        }
    }

    /// `n . G_scat(r_a, r_a) . n`.
    pub fn self_term(&self, r_a: Point2, n_a: Point2) -> Result<Complex64> {
        self.resonator.require_outside(r_a)?;
        let sol = self.solve(&Dipole::new(r_a, n_a)?)?;
        Ok(sol.self_term(self.operator(), sol.dipole.orientation))
    }

    /// Enhancement `Im{n.G.n} / Im{n.G_B.n}` of the emission rate.
    pub fn enhancement(&self, r_a: Point2, n_a: Point2) -> Result<f64> {
        let s = self.self_term(r_a, n_a)?;
        Ok(1.0 + s.im / im_green_b_diag(self.omega, &self.resonator.background, 2)?)
    }

    fn solve_rhs(&self, rhs: &[Complex64]) -> Result<Vec<Complex64>> {
        match &self.backend {
            Backend::Dense(f) => Ok(f.solve(rhs)),
            Backend::Iterative(f) => f.solve(rhs),
        }
    }

    /// Widths for a unit plane wave travelling along `+x` with the electric
    /// field along `y`, from the absorbed power and the forward (extinction)
    /// overlap of the induced polarization with the incident field.
    pub fn plane_wave_cross_sections(&self) -> Result<CrossSections> {
        let op = self.operator();
        let k = self.resonator.background.n_b * self.omega / C0;
        let h = op.disc.h;
        let average = (k * h / 2.0).sin() / (k * h / 2.0);
        let incident: Vec<Complex64> = (0..op.disc.len())
            .map(|c| Complex64::from_polar(1.0, k * op.disc.center(c).x))
            .collect();
        let rhs: Vec<Complex64> = incident.iter().flat_map(|e| [Complex64::default(), e * average]).collect();
        let field = self.solve_rhs(&rhs)?;
        let area = op.disc.cell_area();
        let scale = self.omega / C0 / self.resonator.background.n_b * area;
        let pol = op.polarization(&field);
        // Im(E* . P) is the absorbed power density; its cell sum is exact
        // for the effective tensor of a partly covered cell
        let absorbed: f64 = field.chunks(2).zip(&pol).map(|(e, p)| (e[0].conj() * p[0] + e[1].conj() * p[1]).im).sum();
        let overlap: Complex64 = pol.iter().zip(&incident).map(|(p, inc)| p[1] * inc.conj()).sum();
        let extinction = scale * overlap.im;
        let absorption = scale * absorbed;
        Ok(CrossSections { extinction, scattering: extinction - absorption, absorption })
    }

    /// Total `G(r_b, r_a)` at every `r_b` from two solves at `r_a`.
    pub fn propagator(&self, r_a: Point2, points: &[Point2]) -> Result<Vec<Dyadic2>> {
        self.resonator.require_outside(r_a)?;
        let op = self.operator();
        let x = self.solve(&Dipole::x(r_a))?;
        let y = self.solve(&Dipole::y(r_a))?;
        points
            .iter()
            .map(|&r| Ok(green_b_2d(r, r_a, self.omega, &self.resonator.background)? + scattered_dyadic(&x, &y, op, r)))
            .collect()
    }
}
