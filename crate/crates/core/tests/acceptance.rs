//! Acceptance run: one PASS/FAIL line per criterion with the measured numbers.
//!
//! Runs as a plain binary (no libtest harness) so the lines reach the test
//! output. A FAIL line does not abort the run; the process exits non-zero
//! only if a computation itself errors.

use std::f64::consts::PI;
use std::time::Instant;

use num_complex::Complex64;
use qnm::background::{green_qs, image_strength};
use qnm::dyson::{GreenVariant, QnmGreen, RegularizedField};
use qnm::model::{units, Background, Geometry, MaterialModel, Point2, Resonator, C0};
use qnm::normalize::{default_r0, mode_volume, norm_scan, normalize_mode, scan_widths, NormOptions, NormScan};
use qnm::observables::{enhancement_3d, eta_factor, purcell_factor, se_enhancement, spectrum};
use qnm::solver::mie::mie_cylinder;
use qnm::solver::mode::{find_qnm, ModeField};
use qnm::solver::oracle::DipoleOracle;
use qnm::solver::pole::{Drive, PoleSearch};
use qnm::solver::vie::Discretization;
use qnm::special::hankel1_01;
use std::sync::Arc;

type C = Complex64;

const NM: f64 = units::NM;
const MODE_H: f64 = 1.0 * NM;
const ORACLE_H: f64 = 0.5 * NM;

fn rod_resonator() -> Resonator {
    Resonator::new(
        Geometry::rod(10.0 * NM, 80.0 * NM, Point2::default()).unwrap(),
        MaterialModel::drude(1.26e16, 7e13).unwrap(),
        Background::new(1.5).unwrap(),
    )
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn line(n: usize, pass: bool, name: &str, detail: String) -> bool {
    println!("criterion {n:2} {} {name}: {detail}", if pass { "PASS" } else { "FAIL" });
    pass
}

struct Rod {
    raw: ModeField,
    scan: NormScan,
    green: QnmGreen,
    find_seconds: f64,
    oracle_c: DipoleOracle,
}

impl Rod {
    fn omega_c(&self) -> f64 {
        self.green.mode.omega().re
    }

    fn gamma_c(&self) -> f64 {
        -self.green.mode.omega().im
    }
}

fn build_rod() -> qnm::Result<Rod> {
    let res = rod_resonator();
    let t = Instant::now();
    let disc = Discretization::new(&res.geometry, MODE_H)?;
    let raw = find_qnm(&res, &disc, &PoleSearch::new(C::new(units::thz(420.0), -units::thz(35.0))))?;
    let find_seconds = t.elapsed().as_secs_f64();
    let scan = norm_scan(&raw, &scan_widths(100.0 * NM, 1000.0 * NM), NormOptions::default())?;
    let green = QnmGreen::new(normalize_mode(&raw, &scan)?)?;
    let fine = Discretization::new(&res.geometry, ORACLE_H)?;
    let oracle_c = DipoleOracle::new(&res, &fine, green.mode.omega().re)?;
    Ok(Rod { raw, scan, green, find_seconds, oracle_c })
}

fn c1(rod: &Rod) -> bool {
    let w = rod.raw.omega() / units::thz(1.0);
    let (re, im) = (w.re, w.im);
    let pass = rel(re, 415.863) < 0.02 && rel(im, -37.176) < 0.10 && rod.find_seconds < 900.0;
    line(
        1,
        pass,
        "rod eigenfrequency",
        format!(
            "{re:.3} {im:+.3}i THz at h = 1 nm (re off {:.2}% < 2%, im off {:.2}% < 10%), found in {:.1} s; open boundary is exact, so no domain size applies",
            100.0 * rel(re, 415.863),
            100.0 * rel(im, -37.176),
            rod.find_seconds
        ),
    )
}

fn c2(rod: &Rod) -> bool {
    let at = |d: f64| *rod.scan.breakdowns.iter().find(|b| (b.domain_half_width - d).abs() < 1e-12).unwrap();
    let (a, b) = (at(600.0 * NM), at(900.0 * NM));
    let total = ((b.total - a.total) / b.total).norm();
    let volume = ((b.volume_term - a.volume_term) / b.volume_term).norm();
    let surface = ((b.surface_term - a.surface_term) / b.surface_term).norm();
    let pass = total < 0.01 && volume > 0.10 && surface > 0.10;
    line(
        2,
        pass,
        "norm convergence 600 -> 900 nm",
        format!(
            "total changes {:.3}% (< 1%), volume term {:.1}% and surface term {:.1}% (> 10%)",
            100.0 * total,
            100.0 * volume,
            100.0 * surface
        ),
    )
}

fn c3(rod: &Rod) -> qnm::Result<bool> {
    let last = rod.scan.breakdowns.len() - 1;
    let rod_err = ((rod.scan.sauvan[last] - rod.scan.breakdowns[last].total) / rod.scan.breakdowns[last].total).norm();

    let cyl = Resonator::new(
        Geometry::cylinder(100.0 * NM, Point2::default())?,
        MaterialModel::constant(C::new(12.25, 0.0)),
        Background::new(1.0)?,
    );
    let disc = Discretization::new(&cyl.geometry, 5.0 * NM)?;
    let mut search = PoleSearch::new(C::new(units::thz(330.0), -units::thz(20.0)));
    search.drive = Drive::Azimuthal;
    let mode = find_qnm(&cyl, &disc, &search)?;
    let scan = norm_scan(&mode, &scan_widths(100.0 * NM, 1000.0 * NM), NormOptions::default())?;
    let l = scan.breakdowns.len() - 1;
    let cyl_err = ((scan.sauvan[l] - scan.breakdowns[l].total) / scan.breakdowns[l].total).norm();
    let w = mode.omega() / units::thz(1.0);
    Ok(line(
        3,
        rod_err < 0.01 && cyl_err < 0.01,
        "Sauvan norm vs volume+surface norm at 1000 nm",
        format!(
            "rod {:.2}%, dielectric cylinder (TE0 at {:.2} {:+.2}i THz) {:.2}% (< 1% each)",
            100.0 * rod_err,
            w.re,
            w.im,
            100.0 * cyl_err
        ),
    ))
}

fn c4(rod: &Rod) -> qnm::Result<bool> {
    let res = rod_resonator();
    let fine = Discretization::new(&res.geometry, ORACLE_H)?;
    let (wc, gc) = (rod.omega_c(), rod.gamma_c());
    let omegas: Vec<f64> = (0..=12).map(|i| wc + gc * (-3.0 + 0.5 * i as f64)).collect();
    let records = spectrum(&rod.green, Some(&fine), Point2::new(0.0, 50.4 * NM), Point2::new(0.0, 1.0), &omegas)?;
    let errs: Vec<f64> = records.iter().map(|r| rel(r.far, r.oracle.unwrap())).collect();
    let worst = errs.iter().cloned().fold(0.0, f64::max);
    let core = errs[3..=9].iter().cloned().fold(0.0, f64::max);
    Ok(line(
        4,
        worst < 0.10,
        "spectrum at (0, 10.4 nm) beyond the rod end, G^far vs oracle",
        format!(
            "max pointwise error {:.1}% over w_c +- 3 gamma_c (< 10%); {:.1}% within +- 1.5 gamma_c",
            100.0 * worst,
            100.0 * core
        ),
    ))
}

fn side(s: f64) -> Point2 {
    Point2::new(5.0 * NM + s, 0.0)
}

fn c5(rod: &Rod) -> qnm::Result<bool> {
    let wc = rod.omega_c();
    let ny = Point2::new(0.0, 1.0);
    let mut pass = true;
    let mut parts = Vec::new();
    for s in [10.0 * NM, 100.0 * NM, 1000.0 * NM] {
        let o = rod.oracle_c.enhancement(side(s), ny)?;
        let far = se_enhancement(&rod.green, GreenVariant::Far, side(s), ny, wc)?;
        pass &= rel(far, o) < 0.10;
        parts.push(format!("{:.0} nm {:.1}%", s / NM, 100.0 * rel(far, o)));
    }
    let s5 = 5000.0 * NM;
    let ratio = se_enhancement(&rod.green, GreenVariant::Far, side(s5), ny, wc)? / rod.oracle_c.enhancement(side(s5), ny)?;
    pass &= (0.9..=1.1).contains(&ratio);
    let mut f_worst = 0.0f64;
    for s in [1500.0, 2000.0, 3000.0, 5000.0] {
        let r = side(s * NM);
        let f = se_enhancement(&rod.green, GreenVariant::F, r, ny, wc)?;
        f_worst = f_worst.max(rel(f, rod.oracle_c.enhancement(r, ny)?));
    }
    pass &= f_worst > 0.5;
    Ok(line(
        5,
        pass,
        "on-resonance G^far vs oracle from the rod side",
        format!(
            "{} (< 10%); 5 um ratio {:.3} (in [0.9, 1.1]); f-variant worst deviation beyond 1 um {:.0}% (> 50%)",
            parts.join(", "),
            ratio,
            100.0 * f_worst
        ),
    ))
}

fn c6(rod: &Rod) -> qnm::Result<bool> {
    let wc = rod.omega_c();
    let r_a = Point2::new(15.0 * NM, 0.0);
    let xs = [100.0, 200.0, 500.0, 1000.0, 2000.0];
    let points: Vec<Point2> = xs.iter().map(|x| Point2::new(x * NM, 0.0)).collect();
    let oracle = rod.oracle_c.propagator(r_a, &points)?;
    let mut far_worst = 0.0f64;
    let mut f_worst = 0.0f64;
    for (p, o) in points.iter().zip(&oracle) {
        let o = o.yy().norm_sqr();
        far_worst = far_worst.max(rel(rod.green.green(GreenVariant::Far, wc, *p, r_a)?.yy().norm_sqr(), o));
        f_worst = f_worst.max(rel(rod.green.green(GreenVariant::F, wc, *p, r_a)?.yy().norm_sqr(), o));
    }
    Ok(line(
        6,
        far_worst < 0.15 && f_worst > 0.15,
        "propagator |G_yy|^2 from (10, 0) nm off the side",
        format!(
            "G^F worst {:.1}% at x = 100..2000 nm (< 15%); f-variant worst {:.0}% (fails the bound)",
            100.0 * far_worst,
            100.0 * f_worst
        ),
    ))
}

/// Image-dipole self terms `(normal, parallel)` over a flat surface at
/// height `z`: the image sits at `rho = 2z` along the normal, where the 2D
/// background dyadic reduces to `(i k0^2 / 4) H1(x) / x` along the
/// separation and `(i k0^2 / 4) (H0(x) - H1(x) / x)` across it, `x = k rho`.
/// The parallel image is inverted.
fn image_dipole_closed_form(beta: C, omega: f64, n_b: f64, z: f64) -> (C, C) {
    let k0 = omega / C0;
    let x = C::new(n_b * k0 * 2.0 * z, 0.0);
    let (h0, h1) = hankel1_01(x);
    let pre = C::new(0.0, 0.25 * k0 * k0);
    (beta * pre * h1 / x, -beta * pre * (h0 - h1 / x))
}

fn c7(rod: &Rod) -> qnm::Result<bool> {
    let wc = rod.omega_c();
    let ny = Point2::new(0.0, 1.0);
    let mut out_worst = 0.0f64;
    let mut far_at_2 = 0.0;
    for s in [2.0, 3.0, 4.0, 5.0] {
        let r = side(s * NM);
        let o = rod.oracle_c.enhancement(r, ny)?;
        out_worst = out_worst.max(rel(se_enhancement(&rod.green, GreenVariant::Out, r, ny, wc)?, o));
        if s == 2.0 {
            far_at_2 = rel(se_enhancement(&rod.green, GreenVariant::Far, r, ny, wc)?, o);
        }
    }
    let res = rod_resonator();
    let beta = image_strength(&res.material, &res.background, wc)?;
    let mut qs_worst = 0.0f64;
    for s in [2.0, 3.0, 5.0] {
        let r = side(s * NM);
        let plane = res.geometry.nearest_surface(r);
        let g = green_qs(r, r, wc, &res.material, &res.background, &plane)?;
        let (normal, parallel) = image_dipole_closed_form(beta, wc, res.background.n_b, s * NM);
        qs_worst = qs_worst.max(((g.xx() - normal) / normal).norm()).max(((g.yy() - parallel) / parallel).norm());
    }
    Ok(line(
        7,
        out_worst < 0.25 && far_at_2 > 0.5 && qs_worst < 0.01,
        "quasi-static patch 2-5 nm from the side",
        format!(
            "G^out worst {:.1}% (< 25%); G^far at 2 nm {:.1}% (> 50%); G^qs vs image-dipole closed form {:.3}% (< 1%)",
            100.0 * out_worst,
            100.0 * far_at_2,
            100.0 * qs_worst
        ),
    ))
}

fn c8(rod: &Rod) -> qnm::Result<bool> {
    let wc = rod.omega_c();
    let ny = Point2::new(0.0, 1.0);
    let r50 = side(50.0 * NM);
    let ratio = rod.green.green_back_1(wc, r50, r50)?.yy().norm() / rod.green.green_qs(wc, r50, r50)?.yy().norm();
    let r3 = side(3.0 * NM);
    let born = se_enhancement(&rod.green, GreenVariant::Born, r3, ny, wc)?;
    let o = rod.oracle_c.enhancement(r3, ny)?;
    Ok(line(
        8,
        ratio < 0.05 && rel(born, o) > 0.25,
        "first Born term",
        format!(
            "|G_back1 / G_qs| at 50 nm = {:.2} (< 0.05); Born-patched F_a at 3 nm {:.1} vs oracle {:.1}, off {:.0}% (> 25%)",
            ratio,
            born,
            o,
            100.0 * rel(born, o)
        ),
    ))
}

fn c9() -> qnm::Result<bool> {
    let drude = MaterialModel::drude(1.26e16, 7e13)?;
    let bg = Background::new(1.5)?;
    let radius = 30.0 * NM;
    let cyl = Resonator::new(Geometry::cylinder(radius, Point2::default())?, drude, bg);
    let disc = Discretization::new(&cyl.geometry, ORACLE_H)?;
    let mut worst = 0.0f64;
    let mut parts = Vec::new();
    for f in [415.863, 800.0] {
        let w = units::thz(f);
        let mie = mie_cylinder(radius, &drude, &bg, w)?.cross_sections;
        let vie = DipoleOracle::new(&cyl, &disc, w)?.plane_wave_cross_sections()?;
        let e = [
            rel(vie.extinction, mie.extinction),
            rel(vie.scattering, mie.scattering),
            rel(vie.absorption, mie.absorption),
        ];
        worst = e.iter().cloned().fold(worst, f64::max);
        parts.push(format!(
            "{f} THz ext {:.2}% sca {:.2}% abs {:.2}%",
            100.0 * e[0],
            100.0 * e[1],
            100.0 * e[2]
        ));
    }
    let res = rod_resonator();
    let coarse = Discretization::new(&res.geometry, 2.0 * NM)?;
    let o = DipoleOracle::new(&res, &coarse, units::thz(416.0))?;
    let (a, b) = (Point2::new(0.0, 50.0 * NM), Point2::new(60.0 * NM, -40.0 * NM));
    let gab = o.propagator(b, &[a])?[0];
    let gba = o.propagator(a, &[b])?[0];
    let recip = (gab - gba.transpose()).max_abs() / gab.max_abs();
    Ok(line(
        9,
        worst < 0.02 && recip < 0.01,
        "Drude cylinder (r = 30 nm) widths vs Mie at h = 0.5 nm, discrete reciprocity",
        format!("{} (< 2% each); reciprocity {:.1e} (< 1%)", parts.join("; "), recip),
    ))
}

fn c10(rod: &Rod) -> qnm::Result<bool> {
    let mode = &*rod.green.mode;
    let wc = rod.omega_c();
    let gc = rod.gamma_c();
    let eps_b = mode.resonator.background.eps_b();

    // eta at the reference point for an aligned emitter on resonance
    let r0 = default_r0(mode);
    let v = mode_volume(mode, Some(r0))?;
    let f = mode.field_at(r0)?;
    let phase = if f[0].norm() > f[1].norm() { f[0] } else { f[1] };
    let aligned = Point2::new((f[0] / phase).re, (f[1] / phase).re).normalized().unwrap();
    let eta = eta_factor(&f, &[aligned.x, aligned.y], wc, v.v_eff, wc, gc, eps_b)?;
    let q = mode.eigenfrequency.q();
    let eta_ok = (eta - 1.0).abs() <= 0.2;

    // F_P eta + 1 against the direct 3D evaluation over a parameter grid
    let mut identity = 0.0f64;
    for (i, detune) in [-0.3, -0.1, 0.0, 0.05, 0.25].into_iter().enumerate() {
        for q3 in [2.0, 5.6, 30.0] {
            let (omega_c, n_b, v_eff) = (2.0 * PI * 325e12, 1.33, 1e-21 * (1.0 + i as f64));
            let gamma_c = omega_c / (2.0 * q3);
            let omega = omega_c * (1.0 + detune);
            let field = [C::new(3e10, -1e10), C::new(2e10, 5e10), C::new(0.0, 1e9)];
            let n = [0.0, 0.6, 0.8];
            let fp = purcell_factor(q3, v_eff, 2.0 * PI * C0 / omega_c, n_b)?;
            let e = eta_factor(&field, &n, omega, v_eff, omega_c, gamma_c, n_b * n_b)?;
            let direct = enhancement_3d(&field, &n, omega, omega_c, gamma_c, n_b)?;
            identity = identity.max((fp * e + 1.0 - direct).abs() / direct.abs().max(1.0));
        }
    }

    // zero contrast: oracle, regularized field, Born and image terms all vanish
    let mut flat = rod_resonator();
    flat.material = MaterialModel::constant(C::new(eps_b, 0.0));
    let coarse = Discretization::new(&flat.geometry, 2.0 * NM)?;
    let r = side(10.0 * NM);
    let ny = Point2::new(0.0, 1.0);
    let oracle_dev = (DipoleOracle::new(&flat, &coarse, wc)?.enhancement(r, ny)? - 1.0).abs();
    let mut flat_mode = mode.clone();
    flat_mode.resonator = flat;
    let big_f = RegularizedField::new(Arc::new(flat_mode.clone())).eval(r, wc)?;
    let flat_green = QnmGreen::new(flat_mode)?;
    let born = flat_green.green_back_1(wc, r, r)?.max_abs();
    let qs = flat_green.green_qs(wc, r, r)?.max_abs();
    let mie = mie_cylinder(30.0 * NM, &flat.material, &flat.background, wc)?.cross_sections.extinction.abs();
    let zero = oracle_dev.max(big_f[0].norm() + big_f[1].norm()).max(born).max(qs).max(mie);
    let zero_ok = oracle_dev < 1e-10 && big_f == [C::default(); 2] && born == 0.0 && qs == 0.0 && mie < 1e-20;

    // gauge: a complex rescaling of the raw mode changes nothing physical
    let c = C::from_polar(2.7, 1.1);
    let scaled = rod.raw.scaled(c);
    let rescan = norm_scan(&scaled, &scan_widths(100.0 * NM, 1000.0 * NM), NormOptions::default())?;
    let regauged = QnmGreen::new(normalize_mode(&scaled, &rescan)?)?;
    let v2 = mode_volume(&regauged.mode, Some(r0))?;
    let mut gauge = rel(v2.v_eff, v.v_eff);
    let (p, q_pt) = (side(10.0 * NM), Point2::new(300.0 * NM, 50.0 * NM));
    for variant in GreenVariant::ALL {
        let a = rod.green.green(variant, wc, p, q_pt)?;
        let b = regauged.green(variant, wc, p, q_pt)?;
        gauge = gauge.max((a - b).max_abs() / a.max_abs());
    }
    let gauge_ok = gauge < 1e-8;

    Ok(line(
        10,
        eta_ok && identity < 1e-10 && zero_ok && gauge_ok,
        "property suites",
        format!(
            "eta(r0) = {eta:.3} at Q = {q:.2} (1 +- 0.2); F_P eta + 1 identity {identity:.1e} (< 1e-10); zero-contrast residue {zero:.1e} (exact); gauge deviation {gauge:.1e}"
        ),
    ))
}

/// `QNM_CRITERIA=3,7` restricts the run to the listed criteria.
fn selected() -> Vec<usize> {
    match std::env::var("QNM_CRITERIA") {
        Ok(list) => list.split(',').filter_map(|v| v.trim().parse().ok()).collect(),
        Err(_) => (1..=10).collect(),
    }
}

fn main() -> qnm::Result<()> {
    let t = Instant::now();
    let rod = build_rod()?;
    let which = selected();
    let mut passed = 0;
    for n in &which {
        let pass = match n {
            1 => c1(&rod),
            2 => c2(&rod),
            3 => c3(&rod)?,
            4 => c4(&rod)?,
            5 => c5(&rod)?,
            6 => c6(&rod)?,
            7 => c7(&rod)?,
            8 => c8(&rod)?,
            9 => c9()?,
            10 => c10(&rod)?,
            _ => continue,
        };
        passed += pass as usize;
    }
    println!("acceptance: {passed}/{} criteria pass ({:.0} s)", which.len(), t.elapsed().as_secs_f64());
    Ok(())
}
