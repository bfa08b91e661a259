//! Analytic scattering by a circular cylinder with the electric field in the
//! plane and the magnetic field along the axis.
//!
//! With `H_z^inc = exp(i k x) = sum_n i^n J_n(k r) e^{i n phi}`, the scattered
//! field is `sum_n i^n b_n H_n(k r) e^{i n phi}` where
//!
//! `b_n = [J_n(x) J_n'(mx) - m J_n(mx) J_n'(x)] / [m J_n(mx) H_n'(x) - H_n(x) J_n'(mx)]`,
//!
//! `x = k a` and `m = sqrt(eps / eps_B)`. `b_{-n} = b_n`. Cross sections are
//! per unit length. Zeros of the denominator in the complex frequency plane
//! are the resonances of the cylinder.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Background, MaterialModel, C0};
use crate::special::{bessel_j_seq, derivative_seq, hankel1_seq};

type C = Complex64;

/// Largest partial-wave order the series may need.
pub const MAX_ORDER: usize = 100;

/// Extinction, scattering and absorption widths (m).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrossSections {
    pub extinction: f64,
    pub scattering: f64,
    pub absorption: f64,
}

impl CrossSections {
    /// Largest relative difference over the three widths, each relative to
    /// the extinction (absorption or scattering can be tiny on their own).
    pub fn max_relative_difference(&self, other: &CrossSections) -> f64 {
        let s = self.extinction.abs().max(1e-300);
        [
            (self.extinction - other.extinction).abs(),
            (self.scattering - other.scattering).abs(),
            (self.absorption - other.absorption).abs(),
        ]
        .into_iter()
        .fold(0.0, f64::max)
            / s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MieCylinder {
    pub radius: f64,
    pub omega: f64,
    /// `b_n` for `n = 0..=order`.
    pub coefficients: Vec<C>,
    pub cross_sections: CrossSections,
}

fn relative_index(material: &MaterialModel, bg: &Background, omega: C) -> Result<C> {
    Ok((material.eps_at(omega)? / bg.eps_b()).sqrt())
}

/// `(numerator, denominator)` of `b_n` for `n = 0..=nmax`.
fn partial_waves(nmax: usize, x: C, m: C) -> (Vec<C>, Vec<C>) {
    let j = bessel_j_seq(nmax + 1, x);
    let jd = derivative_seq(&j, x);
    let h = hankel1_seq(nmax + 1, x);
    let hd = derivative_seq(&h, x);
    let jm = bessel_j_seq(nmax + 1, m * x);
    let jmd = derivative_seq(&jm, m * x);
    (0..=nmax)
        .map(|n| (j[n] * jmd[n] - m * jm[n] * jd[n], m * jm[n] * hd[n] - h[n] * jmd[n]))
        .unzip()
}

pub fn mie_cylinder(radius: f64, material: &MaterialModel, bg: &Background, omega: f64) -> Result<MieCylinder> {
    if !(radius > 0.0 && omega > 0.0) {
        return Err(Error::domain("Mie series needs a positive radius and frequency"));
    }
    let w = C::new(omega, 0.0);
    let k = bg.n_b * omega / C0;
    let x = C::new(k * radius, 0.0);
    let m = relative_index(material, bg, w)?;
    let mx = (m * x).norm();
    let order = (x.re.max(mx) + 4.0 * x.re.max(mx).cbrt() + 4.0).ceil() as usize;
    if order > MAX_ORDER {
        return Err(Error::domain(format!("Mie series needs order {order} > {MAX_ORDER}")));
    }
    let (num, den) = partial_waves(order, x, m);
    let b: Vec<C> = num.iter().zip(&den).map(|(n, d)| n / d).collect();
    let weight = |n: usize| if n == 0 { 1.0 } else { 2.0 };
    let sca: f64 = b.iter().enumerate().map(|(n, b)| weight(n) * b.norm_sqr()).sum();
    let ext: f64 = b.iter().enumerate().map(|(n, b)| -weight(n) * b.re).sum();
    let tail = b[order].norm_sqr() + b[order - 1].norm_sqr();
    if !(tail <= 1e-12 * sca.max(1e-300)) && sca > 0.0 {
        return Err(Error::domain(format!("Mie series not converged at order {order}")));
    }
    let (extinction, scattering) = (4.0 / k * ext, 4.0 / k * sca);
    Ok(MieCylinder {
        radius,
        omega,
        coefficients: b,
        cross_sections: CrossSections { extinction, scattering, absorption: extinction - scattering },
    })
}

/// Denominator of `b_n` at a complex frequency; zero at a resonance of order `n`.
pub fn pole_determinant(order: usize, radius: f64, material: &MaterialModel, bg: &Background, omega: C) -> Result<C> {
    let x = bg.k(omega) * radius;
    let m = relative_index(material, bg, omega)?;
    let (_, den) = partial_waves(order, x, m);
    Ok(den[order])
}

/// Newton iteration on the denominator of `b_n`, derivative by central
/// differences (the determinant is analytic in `omega`).
pub fn find_mie_pole(order: usize, radius: f64, material: &MaterialModel, bg: &Background, guess: C) -> Result<C> {
    let mut w = guess;
    for _ in 0..60 {
        let d = 1e-7 * w.norm();
        let f = pole_determinant(order, radius, material, bg, w)?;
        let fp = (pole_determinant(order, radius, material, bg, w + d)?
            - pole_determinant(order, radius, material, bg, w - d)?)
            / (2.0 * d);
        let step = f / fp;
        w -= step;
        if !w.re.is_finite() || !w.im.is_finite() {
            break;
        }
        if step.norm() < 1e-13 * w.norm() {
            return Ok(w);
        }
    }
    Err(Error::domain(format!("no Mie pole of order {order} near {guess}")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::units;

    #[test]
    fn matched_index_does_not_scatter() {
        let m = mie_cylinder(50e-9, &MaterialModel::constant(C::new(2.25, 0.0)), &Background::new(1.5).unwrap(), units::thz(400.0)).unwrap();
        assert!(m.coefficients.iter().all(|b| b.norm() < 1e-15));
        assert!(m.cross_sections.extinction.abs() < 1e-20);
    }

    #[test]
    fn lossless_cylinder_obeys_the_optical_theorem() {
        for r in [20e-9, 150e-9, 600e-9] {
            let m = mie_cylinder(r, &MaterialModel::constant(C::new(12.25, 0.0)), &Background::new(1.0).unwrap(), units::thz(300.0)).unwrap();
            let c = m.cross_sections;
            assert!((c.extinction - c.scattering).abs() < 1e-10 * c.extinction, "{c:?}");
        }
    }

    /// Widths from an independent evaluation with library Bessel functions.
    #[test]
    fn drude_cylinder_matches_reference_series() {
        let drude = MaterialModel::drude(1.26e16, 7e13).unwrap();
        let bg = Background::new(1.5).unwrap();
        let m = mie_cylinder(30e-9, &drude, &bg, units::thz(415.863)).unwrap();
        let c = m.cross_sections;
        let (ext, sca) = (REF_EXT_415, REF_SCA_415);
        assert!((c.extinction - ext).abs() < 1e-9 * ext, "{}", c.extinction);
        assert!((c.scattering - sca).abs() < 1e-9 * sca, "{}", c.scattering);
    }

    const REF_EXT_415: f64 = 1.61406542836207545e-08;
    const REF_SCA_415: f64 = 1.53881126120556856e-08;

    #[test]
    fn pole_matches_an_independent_root() {
        let mat = MaterialModel::constant(C::new(12.25, 0.0));
        let bg = Background::new(1.0).unwrap();
        let w = find_mie_pole(0, 100e-9, &mat, &bg, C::new(units::thz(330.0), -units::thz(20.0))).unwrap();
        // Independent root of the same determinant: 312.036673 - 27.483501i THz.
        assert!((w.re / units::thz(1.0) - 312.036673).abs() < 1e-5);
        assert!((w.im / units::thz(1.0) + 27.483501).abs() < 1e-5);
    }
}
