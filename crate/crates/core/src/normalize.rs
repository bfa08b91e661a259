//! Mode normalization, effective mode volume and the domain-size scan.
//!
//! The integration domain is a circle about the resonator whose radius
//! exceeds the enclosing radius by a margin `D` (or, optionally, the bounding
//! box grown by `D`). On a circle the outgoing field meets the boundary
//! normally, which is what the surface term assumes; on a rectangle the
//! corners leave an oscillating remainder of a few percent. Inside the sample box around the resonator the
//! integrand uses the lattice samples (midpoint rule); the rest of the domain
//! is tiled with small Gauss panels evaluated through the multipole
//! expansion, so arbitrarily large domains need no grid.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::CellKernel;
use crate::model::{Point2, C0};
use crate::quadrature::gauss_on;
use crate::solver::mode::{sample_lattice, LatticeSamples, ModeField, NormState};
use crate::solver::radiator::Radiator;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormBreakdown {
    /// Margin between the resonator bounding box and the domain boundary (m).
    pub domain_half_width: f64,
    pub volume_term: Complex64,
    pub surface_term: Complex64,
    pub total: Complex64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NormOptions {
    /// Largest side of a far-field quadrature panel (m).
    pub panel: f64,
    /// Trapezoid spacing on the boundary contour (m).
    pub contour_step: f64,
    /// Relative change of the total between successive domains regarded as converged.
    pub tolerance: f64,
    pub shape: DomainShape,
}

/// Outline of the integration domain for a margin `D`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DomainShape {
    /// Bounding box of the resonator grown by `D` on every side.
    Rectangle,
    /// Circle about the resonator centre of radius `D` plus the enclosing radius.
    Circle,
}

impl Default for NormOptions {
    fn default() -> Self {
        Self { panel: 10e-9, contour_step: 1e-9, tolerance: 0.01, shape: DomainShape::Circle }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Rect {
    lo: Point2,
    hi: Point2,
}

impl Rect {
    fn contains(&self, r: Point2) -> bool {
        r.x > self.lo.x && r.x < self.hi.x && r.y > self.lo.y && r.y < self.hi.y
    }

    /// `self` minus `hole`, as up to four disjoint rectangles.
    fn minus(&self, hole: &Rect) -> Vec<Rect> {
        let mut out = Vec::new();
        let mut push = |lo: Point2, hi: Point2| {
            if hi.x > lo.x && hi.y > lo.y {
                out.push(Rect { lo, hi });
            }
        };
        let (ylo, yhi) = (hole.lo.y.max(self.lo.y), hole.hi.y.min(self.hi.y));
        push(self.lo, Point2::new(self.hi.x, hole.lo.y.min(self.hi.y)));
        push(Point2::new(self.lo.x, hole.hi.y.max(self.lo.y)), self.hi);
        push(Point2::new(self.lo.x, ylo), Point2::new(hole.lo.x.min(self.hi.x), yhi));
        push(Point2::new(hole.hi.x.max(self.lo.x), ylo), Point2::new(self.hi.x, yhi));
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Domain {
    Rect(Rect),
    Disc { center: Point2, radius: f64 },
}

impl Domain {
    fn contains(&self, r: Point2) -> bool {
        match self {
            Domain::Rect(rect) => rect.contains(r),
            Domain::Disc { center, radius } => r.dist(*center) < *radius,
        }
    }
}

/// Weighted integrand values accumulated over a domain.
#[derive(Debug, Clone, Copy, Default)]
struct Sums {
    /// `int sigma f.f`
    volume: Complex64,
    /// `int (1/2) [d(w eps)/dw f.f + c^2/w~^2 (curl f)^2]`
    sauvan: Complex64,
}

impl std::ops::Add for Sums {
    type Output = Sums;
    fn add(self, o: Sums) -> Sums {
        Sums { volume: self.volume + o.volume, sauvan: self.sauvan + o.sauvan }
    }
}

/// Quadrature machinery for one mode, reusable across domain sizes.
pub struct NormIntegrator<'a> {
    mode: &'a ModeField,
    radiator: Radiator,
    samples: LatticeSamples,
    near: Rect,
    bbox: Rect,
    sigma_metal: Complex64,
    dweps_metal: Complex64,
    eps_metal: Complex64,
    eps_b: f64,
    curl_scale: Complex64,
    options: NormOptions,
}

impl<'a> NormIntegrator<'a> {
    pub fn new(mode: &'a ModeField, options: NormOptions) -> Result<Self> {
        if !(options.panel > 0.0 && options.contour_step > 0.0 && options.tolerance > 0.0) {
            return Err(Error::Config("normalization panel, step and tolerance must be positive".into()));
        }
        let w = mode.omega();
        let res = &mode.resonator;
        let (lo, hi) = res
            .geometry
            .bbox()
            .ok_or_else(|| Error::domain("normalization needs a bounded resonator"))?;
        let kernel = CellKernel::new(w, &res.background, mode.disc.h);
        let pol = mode.polarization()?;
        let samples = sample_lattice(&mode.disc, &kernel, &pol, &mode.sample_box, true);
        let (nlo, nhi) = mode.sample_box.bounds(&mode.disc);
        let eps_b = res.background.eps_b();
        let dweps_metal = res.material.d_omega_eps(w)?;
        Ok(Self {
            mode,
            radiator: Radiator::new(&mode.disc, w, &res.background, pol),
            samples,
            near: Rect { lo: nlo, hi: nhi },
            bbox: Rect { lo, hi },
            sigma_metal: res.material.sigma_dispersion(w)?,
            dweps_metal,
            eps_metal: res.material.eps_at(w)?,
            eps_b,
            curl_scale: C0 * C0 / (w * w),
            options,
        })
    }

    /// Domain for margin `d`; rectangle edges are snapped to lattice lines.
    fn domain(&self, d: f64) -> Result<Domain> {
        if !(d > 0.0) || !d.is_finite() {
            return Err(Error::domain(format!("domain half-width must be positive, got {d}")));
        }
        let geometry = &self.mode.resonator.geometry;
        Ok(match self.options.shape {
            DomainShape::Rectangle => {
                let h = self.mode.disc.h;
                let a = self.mode.disc.anchor;
                let snap = |v: f64, o: f64| o + ((v - o) / h).round() * h;
                Domain::Rect(Rect {
                    lo: Point2::new(snap(self.bbox.lo.x - d, a.x), snap(self.bbox.lo.y - d, a.y)),
                    hi: Point2::new(snap(self.bbox.hi.x + d, a.x), snap(self.bbox.hi.y + d, a.y)),
                })
            }
            DomainShape::Circle => Domain::Disc {
                center: geometry.center(),
                radius: d + geometry.enclosing_radius().unwrap_or(0.0),
            },
        })
    }

    fn background_sums(&self, f: [Complex64; 2], curl: Complex64, weight: f64) -> Sums {
        let ff = f[0] * f[0] + f[1] * f[1];
        Sums {
            volume: ff * self.eps_b * weight,
            sauvan: (ff * self.eps_b + self.curl_scale * curl * curl) * (0.5 * weight),
        }
    }

    fn sums(&self, domain: &Domain) -> Sums {
        let mode = self.mode;
        let h = mode.disc.h;
        let area = h * h;
        let bx = mode.sample_box;

        let curl = self.samples.curl.as_ref().expect("samples carry the curl");
        // the disc is split into an inner disc on the samples and an annulus
        let near_domain = match *domain {
            Domain::Disc { center, radius } => Domain::Disc { center, radius: radius.min(self.inscribed(center)) },
            d => d,
        };
        let mut near = Sums::default();
        for idx in 0..bx.len() {
            let (i, j) = bx.cell(idx);
            if !near_domain.contains(mode.disc.lattice_point(i, j)) {
                continue;
            }
            // resonator cells use the exact collocation values
            let f = [mode.ex[idx], mode.ey[idx]];
            let c = curl[idx];
            if let Some(cell) = mode.disc.index_of(i, j) {
                // partly covered cells mix the metal and background weights
                let eb = Complex64::new(self.eps_b, 0.0);
                let quad = |s: Complex64| {
                    let w = mode.disc.weight_tensor(cell, self.eps_metal, self.eps_b, s, eb);
                    let wf = w.apply(f);
                    f[0] * wf[0] + f[1] * wf[1]
                };
                near = near
                    + Sums {
                        volume: quad(self.sigma_metal) * area,
                        sauvan: (quad(self.dweps_metal) + self.curl_scale * c * c) * (0.5 * area),
                    };
            } else {
                near = near + self.background_sums(f, c, area);
            }
        }
        let far_points: Vec<(Point2, f64)> = match *domain {
            Domain::Rect(rect) => rect
                .minus(&self.near)
                .iter()
                .flat_map(|r| panels(r, self.options.panel))
                .flat_map(|p| {
                    let rule_y = gauss_on(2, p.lo.y, p.hi.y);
                    gauss_on(2, p.lo.x, p.hi.x)
                        .into_iter()
                        .flat_map(move |(x, wx)| rule_y.clone().into_iter().map(move |(y, wy)| (Point2::new(x, y), wx * wy)))
                })
                .collect(),
            Domain::Disc { center, radius } => {
                let inner = self.inscribed(center);
                if radius <= inner {
                    Vec::new()
                } else {
                    let nr = ((radius - inner) / self.options.panel).ceil() as usize;
                    let dr = (radius - inner) / nr as f64;
                    let nphi = (2.0 * std::f64::consts::PI * radius / (0.5 * self.options.panel)).ceil() as usize;
                    let dphi = 2.0 * std::f64::consts::PI / nphi as f64;
                    let mut pts = Vec::with_capacity(2 * nr * nphi);
                    for ir in 0..nr {
                        for (r, wr) in gauss_on(2, inner + ir as f64 * dr, inner + (ir + 1) as f64 * dr) {
                            for ip in 0..nphi {
                                let phi = ip as f64 * dphi;
                                pts.push((center + Point2::new(r * phi.cos(), r * phi.sin()), wr * r * dphi));
                            }
                        }
                    }
                    pts
                }
            }
        };
        // collected before summing so the result does not depend on the thread count
        let far = far_points
            .par_iter()
            .map(|&(r, w)| {
                let (f, c) = self.radiator.field_and_curl(r);
                self.background_sums(f, c, w)
            })
            .collect::<Vec<_>>()
            .into_iter()
            .fold(Sums::default(), |a, b| a + b);
        near + far
    }

    /// Radius of the largest disc about `center` inside the sample box.
    fn inscribed(&self, center: Point2) -> f64 {
        let n = &self.near;
        (center.x - n.lo.x).min(n.hi.x - center.x).min(center.y - n.lo.y).min(n.hi.y - center.y)
    }

    /// `i n_B c / (2 w~) oint f.f` over the domain boundary.
    fn surface(&self, domain: &Domain) -> Complex64 {
        let mut points = Vec::new();
        match *domain {
            Domain::Rect(rect) => {
                let corners = [rect.lo, Point2::new(rect.hi.x, rect.lo.y), rect.hi, Point2::new(rect.lo.x, rect.hi.y)];
                for k in 0..4 {
                    let (a, b) = (corners[k], corners[(k + 1) % 4]);
                    let len = a.dist(b);
                    let n = (len / self.options.contour_step).ceil().max(1.0) as usize;
                    let ds = len / n as f64;
                    // closed-contour trapezoid: each corner gets ds/2 from both sides
                    for s in 0..n {
                        points.push((a + (b - a) * (s as f64 / n as f64), ds));
                    }
                }
            }
            Domain::Disc { center, radius } => {
                let n = (2.0 * std::f64::consts::PI * radius / self.options.contour_step).ceil().max(8.0) as usize;
                let ds = 2.0 * std::f64::consts::PI * radius / n as f64;
                for s in 0..n {
                    let phi = 2.0 * std::f64::consts::PI * s as f64 / n as f64;
                    points.push((center + Point2::new(radius * phi.cos(), radius * phi.sin()), ds));
                }
            }
        }
        let sum: Complex64 = points
            .par_iter()
            .map(|&(r, w)| {
                let f = self.radiator.field(r);
                (f[0] * f[0] + f[1] * f[1]) * w
            })
            .collect::<Vec<_>>()
            .into_iter()
            .sum();
        let bg = &self.mode.resonator.background;
        Complex64::new(0.0, bg.n_b * C0 * 0.5) / self.mode.omega() * sum
    }

    pub fn breakdown(&self, d: f64) -> Result<NormBreakdown> {
        let domain = self.domain(d)?;
        let volume_term = self.sums(&domain).volume;
        let surface_term = self.surface(&domain);
        Ok(NormBreakdown { domain_half_width: d, volume_term, surface_term, total: volume_term + surface_term })
    }

    pub fn sauvan(&self, d: f64) -> Result<Complex64> {
        Ok(self.sums(&self.domain(d)?).sauvan)
    }

    /// Breakdown and the Sauvan integral at once.
    pub fn both(&self, d: f64) -> Result<(NormBreakdown, Complex64)> {
        let domain = self.domain(d)?;
        let s = self.sums(&domain);
        let surface_term = self.surface(&domain);
        Ok((
            NormBreakdown { domain_half_width: d, volume_term: s.volume, surface_term, total: s.volume + surface_term },
            s.sauvan,
        ))
    }
}

/// Tile a rectangle with panels no larger than `size`.
fn panels(r: &Rect, size: f64) -> Vec<Rect> {
    let nx = ((r.hi.x - r.lo.x) / size).ceil().max(1.0) as usize;
    let ny = ((r.hi.y - r.lo.y) / size).ceil().max(1.0) as usize;
    let (dx, dy) = ((r.hi.x - r.lo.x) / nx as f64, (r.hi.y - r.lo.y) / ny as f64);
    let mut out = Vec::with_capacity(nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            let lo = r.lo + Point2::new(i as f64 * dx, j as f64 * dy);
            out.push(Rect { lo, hi: lo + Point2::new(dx, dy) });
        }
    }
    out
}

/// Inner product `<<f|f>>` over the domain with margin `domain_half_width`.
pub fn inner_product(mode: &ModeField, domain_half_width: f64) -> Result<NormBreakdown> {
    NormIntegrator::new(mode, NormOptions::default())?.breakdown(domain_half_width)
}

/// Volume integral of the reciprocity norm over the same domain, with no
/// surface term.
pub fn sauvan_norm(mode: &ModeField, domain_half_width: f64) -> Result<Complex64> {
    NormIntegrator::new(mode, NormOptions::default())?.sauvan(domain_half_width)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormScan {
    pub breakdowns: Vec<NormBreakdown>,
    pub sauvan: Vec<Complex64>,
    /// First margin at which the total changed by less than the tolerance.
    pub r_caustic: Option<f64>,
    /// Whether the last two increments both stayed below the tolerance.
    pub converged: bool,
    pub tolerance: f64,
}

impl NormScan {
    pub fn last(&self) -> Option<&NormBreakdown> {
        self.breakdowns.last()
    }

    /// Relative change of the total between consecutive domains.
    pub fn changes(&self) -> Vec<f64> {
        self.breakdowns.windows(2).map(|w| ((w[1].total - w[0].total) / w[1].total).norm()).collect()
    }
}

/// Breakdowns over increasing margins.
pub fn norm_scan(mode: &ModeField, widths: &[f64], options: NormOptions) -> Result<NormScan> {
    if widths.is_empty() || widths.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Config("scan widths must be non-empty and strictly increasing".into()));
    }
    let integ = NormIntegrator::new(mode, options)?;
    let mut breakdowns = Vec::new();
    let mut sauvan = Vec::new();
    for &d in widths {
        let (b, s) = integ.both(d)?;
        log::debug!("norm at {:.0} nm: total {:.6e}, sauvan {:.6e}", d * 1e9, b.total, s);
        breakdowns.push(b);
        sauvan.push(s);
    }
    let mut scan = NormScan { breakdowns, sauvan, r_caustic: None, converged: false, tolerance: options.tolerance };
    let changes = scan.changes();
    scan.r_caustic = changes.iter().position(|&c| c < options.tolerance).map(|i| widths[i + 1]);
    scan.converged = changes.len() >= 2 && changes[changes.len() - 2..].iter().all(|&c| c < options.tolerance);
    Ok(scan)
}

/// Margins `step, 2 step, ..., max`.
pub fn scan_widths(step: f64, max: f64) -> Vec<f64> {
    let n = (max / step).round() as usize;
    (1..=n).map(|i| i as f64 * step).collect()
}

/// Scale the mode to unit inner product, `f / sqrt(total)` on the principal branch.
pub fn normalize_mode(mode: &ModeField, scan: &NormScan) -> Result<ModeField> {
    if !scan.converged {
        let last = scan.changes().last().copied().unwrap_or(f64::NAN);
        return Err(Error::NormNotConverged { change: last, tolerance: scan.tolerance });
    }
    let total = scan.last().expect("converged scan is non-empty").total;
    let mut out = mode.scaled(1.0 / total.sqrt());
    let previous = match mode.norm_state {
        NormState::Raw => Complex64::new(1.0, 0.0),
        NormState::Normalized { norm } => norm,
    };
    out.norm_state = NormState::Normalized { norm: previous * total };
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModeVolume {
    pub v_q: Complex64,
    pub v_eff: f64,
    pub r0: Point2,
}

/// Smallest standoff from the resonator of the default reference point.
pub const R0_STANDOFF: f64 = 5e-9;

/// Default reference point: the lattice sample of largest `|f|` among those
/// at least [`R0_STANDOFF`] from the resonator surface.
pub fn default_r0(mode: &ModeField) -> Point2 {
    let mut best = (-1.0, Point2::default());
    for idx in 0..mode.sample_box.len() {
        let (i, j) = mode.sample_box.cell(idx);
        let r = mode.disc.lattice_point(i, j);
        if mode.resonator.geometry.inside(r) || mode.resonator.geometry.standoff(r) < R0_STANDOFF {
            continue;
        }
        let a = mode.ex[idx].norm_sqr() + mode.ey[idx].norm_sqr();
        if a > best.0 {
            best = (a, r);
        }
    }
    best.1
}

/// `v_Q = <<f|f>> / (eps_B f(r0).f(r0))` with `<<f|f>> = norm`.
pub fn mode_volume_with_norm(mode: &ModeField, norm: Complex64, r0: Point2) -> Result<ModeVolume> {
    let f = mode.field_at(r0)?;
    let ff = f[0] * f[0] + f[1] * f[1];
    if ff.norm() == 0.0 {
        return Err(Error::domain("mode field vanishes at the reference point"));
    }
    let v_q = norm / (mode.resonator.background.eps_b() * ff);
    let v_eff = 1.0 / (1.0 / v_q).re;
    Ok(ModeVolume { v_q, v_eff, r0 })
}

/// Effective mode volume of a normalized mode.
pub fn mode_volume(mode: &ModeField, r0: Option<Point2>) -> Result<ModeVolume> {
    if mode.norm_state == NormState::Raw {
        return Err(Error::domain("mode volume needs a normalized mode"));
    }
    mode_volume_with_norm(mode, Complex64::new(1.0, 0.0), r0.unwrap_or_else(|| default_r0(mode)))
}

/// Rows of the domain-size table with the running effective volume.
pub fn modevol_rows(mode: &ModeField, scan: &NormScan, r0: Point2) -> Result<Vec<(NormBreakdown, f64)>> {
    scan.breakdowns
        .iter()
        .map(|b| Ok((*b, mode_volume_with_norm(mode, b.total, r0)?.v_eff)))
        .collect()
}
