//! Complex-frequency pole search of the resonator response.
//!
//! The resonator is driven by a fixed source `b` with the symmetry of the
//! target mode and the scalar response `R(w) = b^T (1 - K D)^{-1} b` is tracked; its inverse is
//! analytic with a simple zero at the eigenfrequency, so a secant iteration
//! on `1/R` converges quickly. The basin check counts zeros of
//! `det(1 - K D)` inside a circle by the argument principle.

use std::f64::consts::PI;

use log::{debug, info};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Point2, Resonator};
use crate::solver::vie::{Discretization, FactoredVie, VieOperator};

/// Source pattern on the resonator cells. A mode is invisible to the search
/// when the drive has no overlap with it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Drive {
    /// Uniform `y` polarization, for modes with a net `y` dipole.
    #[default]
    UniformY,
    /// Circulating field about the resonator centre, for modes with
    /// azimuthal `E` and no net dipole.
    Azimuthal,
}

impl Drive {
    fn vector(self, disc: &Discretization, center: Point2) -> Vec<Complex64> {
        let mut b = vec![Complex64::default(); 2 * disc.len()];
        for i in 0..disc.len() {
            let v = match self {
                Drive::UniformY => Point2::new(0.0, 1.0),
                Drive::Azimuthal => {
                    let d = disc.center(i) - center;
                    Point2::new(-d.y, d.x)
                }
            };
            b[2 * i] = Complex64::new(v.x, 0.0);
            b[2 * i + 1] = Complex64::new(v.y, 0.0);
        }
        b
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoleSearch {
    /// Starting complex angular frequency (rad/s).
    pub guess: Complex64,
    /// Relative step size at which the iteration stops.
    pub tolerance: f64,
    pub max_iter: usize,
    /// If set, count the poles within this radius (rad/s) of the converged
    /// frequency and fail unless there is exactly one.
    pub basin_radius: Option<f64>,
    /// Contour points for the basin check.
    pub basin_points: usize,
    pub drive: Drive,
}

impl PoleSearch {
    pub fn new(guess: Complex64) -> Self {
        Self { guess, tolerance: 1e-10, max_iter: 40, basin_radius: None, basin_points: 24, drive: Drive::UniformY }
    }
}

/// Converged pole plus the factored operator at that frequency.
pub struct Pole {
    pub omega: Complex64,
    pub iterations: usize,
    pub factored: FactoredVie,
    pub drive: Vec<Complex64>,
}

fn inverse_response(resonator: &Resonator, disc: &Discretization, b: &[Complex64], omega: Complex64) -> Result<(Complex64, FactoredVie)> {
    let f = VieOperator::new(resonator, disc, omega)?.factor()?;
    let x = f.solve(b);
    let r: Complex64 = b.iter().zip(&x).map(|(b, x)| b * x).sum();
    Ok((1.0 / r, f))
}

/// Secant iteration on the inverse response.
pub fn find_pole(resonator: &Resonator, disc: &Discretization, search: &PoleSearch) -> Result<Pole> {
    let b = search.drive.vector(disc, resonator.geometry.center());
    let mut w0 = search.guess;
    let mut w1 = search.guess * Complex64::new(1.0 + 1e-3, 1e-3);
    let (mut h0, _) = inverse_response(resonator, disc, &b, w0)?;
    let (mut h1, _) = inverse_response(resonator, disc, &b, w1)?;
    for it in 0..search.max_iter {
        let denom = h1 - h0;
        if denom.norm() == 0.0 {
            return Err(Error::NoPole("secant stalled: identical responses".into()));
        }
        let w2 = w1 - h1 * (w1 - w0) / denom;
        if !w2.is_finite() || w2.re <= 0.0 {
            return Err(Error::NoPole(format!("iteration left the physical half plane at {w2}")));
        }
        let step = (w2 - w1).norm() / w2.norm();
        debug!("pole iteration {it}: omega = {w2:.9e}, step {step:.2e}");
        let (h2, f2) = inverse_response(resonator, disc, &b, w2)?;
        w0 = w1;
        h0 = h1;
        w1 = w2;
        h1 = h2;
        if step < search.tolerance {
            if w1.im >= 0.0 {
                return Err(Error::NoPole(format!("converged to a non-decaying frequency {w1}")));
            }
            info!("pole at {:.6} THz after {} iterations", w1 / (2.0 * PI * 1e12), it + 1);
            if let Some(radius) = search.basin_radius {
                check_basin(resonator, disc, w1, radius, search.basin_points)?;
            }
            return Ok(Pole { omega: w1, iterations: it + 1, factored: f2, drive: b });
        }
    }
    Err(Error::NoPole(format!("no convergence within {} iterations (last {w1})", search.max_iter)))
}

/// Number of zeros of `det(1 - K D)` enclosed by a circle, by the winding of
/// its logarithm. The contour is refined until no phase step exceeds 1 rad.
pub fn count_poles(resonator: &Resonator, disc: &Discretization, center: Complex64, radius: f64, points: usize) -> Result<i64> {
    let phase = |t: f64| -> Result<f64> {
        let w = center + Complex64::from_polar(radius, t);
        Ok(VieOperator::new(resonator, disc, w)?.factor()?.log_det().im)
    };
    let mut n = points.max(8);
    let mut logs = (0..n).map(|p| phase(2.0 * PI * p as f64 / n as f64)).collect::<Result<Vec<_>>>()?;
    loop {
        let mut winding = 0.0;
        let mut largest: f64 = 0.0;
        for p in 0..n {
            let mut d = logs[(p + 1) % n] - logs[p];
            d -= 2.0 * PI * (d / (2.0 * PI)).round();
            largest = largest.max(d.abs());
            winding += d;
        }
        if largest < 1.0 || n >= 1024 {
            return Ok((winding / (2.0 * PI)).round() as i64);
        }
        // double the sampling, reusing the existing points
        let mut refined = Vec::with_capacity(2 * n);
        for (p, &l) in logs.iter().enumerate() {
            refined.push(l);
            refined.push(phase(2.0 * PI * (2 * p + 1) as f64 / (2 * n) as f64)?);
        }
        logs = refined;
        n *= 2;
    }
}

/// Zero of `det(1 - K D)` by Newton iteration with the already-known zeros
/// divided out; the logarithmic derivative comes from a central difference.
fn deflated_newton(resonator: &Resonator, disc: &Discretization, start: Complex64, known: &[Complex64]) -> Result<Complex64> {
    let mut w = start;
    for _ in 0..30 {
        let eps = w.norm() * 1e-6;
        let lp = VieOperator::new(resonator, disc, w + eps)?.factor()?.log_det();
        let lm = VieOperator::new(resonator, disc, w - eps)?.factor()?.log_det();
        let mut dl = lp - lm;
        dl.im -= 2.0 * PI * (dl.im / (2.0 * PI)).round();
        let mut d = dl / (2.0 * eps);
        for z in known {
            d -= 1.0 / (w - z);
        }
        let step = 1.0 / d;
        w -= step;
        if step.norm() < 1e-9 * w.norm() {
            return Ok(w);
        }
    }
    Err(Error::NoPole(format!("deflated search from {start} did not converge")))
}

fn check_basin(resonator: &Resonator, disc: &Discretization, pole: Complex64, radius: f64, points: usize) -> Result<()> {
    let count = count_poles(resonator, disc, pole, radius, points)?;
    match count {
        1 => Ok(()),
        n if n < 1 => Err(Error::NoPole(format!("argument principle finds {n} zeros around {pole}"))),
        n => {
            let mut poles = vec![pole];
            for k in 1..n as usize {
                let start = pole + Complex64::from_polar(0.5 * radius, 2.0 * PI * k as f64 / n as f64);
                poles.push(deflated_newton(resonator, disc, start, &poles)?);
            }
            Err(Error::MultiplePoles { poles })
        }
    }
}

/// Null vector of the operator at the pole by two steps of inverse
/// iteration, and its relative residual `|(1 - K D) f| / |f|`.
pub fn null_vector(pole: &Pole) -> (Vec<Complex64>, f64) {
    let mut x = pole.drive.clone();
    for _ in 0..3 {
        x = pole.factored.solve(&x);
        let n = x.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
        x.iter_mut().for_each(|v| *v /= n);
    }
    let r = pole.factored.op.apply(&x);
    let res = r.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
    (x, res)
}
