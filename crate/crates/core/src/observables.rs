//! Emission-rate enhancement, Purcell factor and the emitter-position factor.
//!
//! In 2D the enhancement is always taken from the ratio of imaginary parts
//! of the Green function; the closed-form Purcell factor and `eta` use the
//! 3D prefactors and are provided for 3D inputs.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::background::im_green_b_diag;
use crate::dyson::{lorentzian, GreenVariant, QnmGreen};
use crate::error::{Error, Result};
use crate::model::{Point2, C0};
use crate::solver::oracle::DipoleOracle;
use crate::solver::vie::Discretization;

/// `F_a = Im{n.G.n} / Im{n.G_B.n} = 1 + Im{n.(G - G_B).n} / Im{n.G_B.n}`.
pub fn se_enhancement(model: &QnmGreen, variant: GreenVariant, r_a: Point2, n_a: Point2, omega: f64) -> Result<f64> {
    let n = n_a.normalized().ok_or_else(|| Error::domain("dipole orientation must be nonzero"))?;
    let gs = model.scattered(variant, omega, r_a, r_a)?;
    let im_b = im_green_b_diag(omega, &model.resonator().background, 2)?;
    Ok(1.0 + gs.project([n.x, n.y], [n.x, n.y]).im / im_b)
}

/// `F_P = (3 / 4 pi^2) (lambda / n_B)^3 Q / V_eff`, with `lambda` the vacuum
/// wavelength at the mode frequency.
pub fn purcell_factor(q: f64, v_eff: f64, lambda: f64, n_b: f64) -> Result<f64> {
    if !(q > 0.0 && v_eff > 0.0 && lambda > 0.0 && n_b > 0.0) {
        return Err(Error::domain("Purcell factor needs positive Q, volume, wavelength and index"));
    }
    Ok(3.0 / (4.0 * PI * PI) * (lambda / n_b).powi(3) * q / v_eff)
}

fn dot(field: &[Complex64], n: &[f64]) -> Result<Complex64> {
    if field.len() != n.len() {
        return Err(Error::domain(format!("field has {} components, orientation {}", field.len(), n.len())));
    }
    Ok(field.iter().zip(n).map(|(f, n)| f * *n).sum())
}

/// `eta = (V_eff w_c^2 gamma_c / w) Im{eps_B (n.F)^2 / (w~ (w~ - w))}`.
pub fn eta_factor(
    field: &[Complex64],
    n: &[f64],
    omega: f64,
    v_eff: f64,
    omega_c: f64,
    gamma_c: f64,
    eps_b: f64,
) -> Result<f64> {
    let nf = dot(field, n)?;
    let eigen = Complex64::new(omega_c, -gamma_c);
    let v = eps_b * nf * nf / (eigen * (eigen - omega));
    Ok(v_eff * omega_c * omega_c * gamma_c / omega * v.im)
}

/// 3D enhancement from the mode term alone,
/// `1 + (6 pi c^3 / n_B w^3) Im{n.G^F.n}`.
pub fn enhancement_3d(field: &[Complex64], n: &[f64], omega: f64, omega_c: f64, gamma_c: f64, n_b: f64) -> Result<f64> {
    let nf = dot(field, n)?;
    let g = lorentzian(omega, Complex64::new(omega_c, -gamma_c)) * nf * nf;
    Ok(1.0 + 6.0 * PI * C0.powi(3) / (n_b * omega.powi(3)) * g.im)
}

/// Enhancement of one emitter under every approximation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SERecord {
    pub omega: f64,
    pub position: Point2,
    pub orientation: Point2,
    pub oracle: Option<f64>,
    pub f: f64,
    pub far: f64,
    pub out: f64,
    pub born: f64,
}

impl SERecord {
    pub fn variant(&self, v: GreenVariant) -> f64 {
        match v {
            GreenVariant::F => self.f,
            GreenVariant::Far => self.far,
            GreenVariant::Out => self.out,
            GreenVariant::Born => self.born,
        }
    }
}

fn record(model: &QnmGreen, oracle: Option<&DipoleOracle>, r_a: Point2, n_a: Point2, omega: f64) -> Result<SERecord> {
    let fa = |v| se_enhancement(model, v, r_a, n_a, omega);
    Ok(SERecord {
        omega,
        position: r_a,
        orientation: n_a,
        oracle: oracle.map(|o| o.enhancement(r_a, n_a)).transpose()?,
        f: fa(GreenVariant::F)?,
        far: fa(GreenVariant::Far)?,
        out: fa(GreenVariant::Out)?,
        born: fa(GreenVariant::Born)?,
    })
}

/// Records over frequency at a fixed emitter; with `oracle_disc` the full
/// dipole problem is solved at every frequency.
pub fn spectrum(
    model: &QnmGreen,
    oracle_disc: Option<&Discretization>,
    r_a: Point2,
    n_a: Point2,
    omegas: &[f64],
) -> Result<Vec<SERecord>> {
    omegas
        .par_iter()
        .map(|&w| {
            let oracle = oracle_disc.map(|d| DipoleOracle::new(model.resonator(), d, w)).transpose()?;
            record(model, oracle.as_ref(), r_a, n_a, w)
        })
        .collect()
}

/// Records along a path of emitter positions at one frequency.
pub fn distance_scan(
    model: &QnmGreen,
    oracle: Option<&DipoleOracle>,
    path: &[Point2],
    n_a: Point2,
    omega: f64,
) -> Result<Vec<SERecord>> {
    path.par_iter().map(|&r| record(model, oracle, r, n_a, omega)).collect()
}

/// Logarithmically spaced standoffs from `min` to `max`, `per_decade` per decade.
pub fn log_standoffs(min: f64, max: f64, per_decade: usize) -> Result<Vec<f64>> {
    if !(min > 0.0 && max >= min && per_decade > 0) {
        return Err(Error::domain("standoff range must be positive and increasing"));
    }
    let decades = (max / min).log10();
    let n = (decades * per_decade as f64).ceil() as usize;
    Ok((0..=n).map(|i| min * 10f64.powf(decades * i as f64 / n.max(1) as f64)).collect())
}

/// `|G_yy(r_b, r_a)|^2 / (Im G_B,yy(r_a, r_a))^2` for one receiver.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PropagatorRecord {
    pub r_b: Point2,
    pub oracle: Option<f64>,
    pub f: f64,
    pub far: f64,
    /// Undefined when the receiver is behind the image plane.
    pub out: Option<f64>,
}

pub fn propagator_map(
    model: &QnmGreen,
    oracle: Option<&DipoleOracle>,
    r_a: Point2,
    points: &[Point2],
    omega: f64,
) -> Result<Vec<PropagatorRecord>> {
    let im_b = im_green_b_diag(omega, &model.resonator().background, 2)?;
    let scale = 1.0 / (im_b * im_b);
    let oracle_values = match oracle {
        Some(o) => Some(o.propagator(r_a, points)?),
        None => None,
    };
    points
        .par_iter()
        .enumerate()
        .map(|(i, &r_b)| {
            let yy = |v| -> Result<f64> { Ok(model.green(v, omega, r_b, r_a)?.yy().norm_sqr() * scale) };
            Ok(PropagatorRecord {
                r_b,
                oracle: oracle_values.as_ref().map(|g| g[i].yy().norm_sqr() * scale),
                f: yy(GreenVariant::F)?,
                far: yy(GreenVariant::Far)?,
                out: yy(GreenVariant::Out).ok(),
            })
        })
        .collect()
}
