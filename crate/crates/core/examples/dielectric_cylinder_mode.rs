//! The lowest azimuthal mode of a high-index cylinder: pole search driven by
//! a circulating source, the analytic pole for comparison, and the two mode
//! norms as the domain grows.
//!
//! Usage: `cargo run --release --example dielectric_cylinder_mode -- [h_nm]`

use num_complex::Complex64;
use qnm::model::{units, Background, Geometry, MaterialModel, Point2, Resonator};
use qnm::normalize::{norm_scan, scan_widths, NormOptions};
use qnm::solver::mie::find_mie_pole;
use qnm::solver::mode::find_qnm;
use qnm::solver::pole::{Drive, PoleSearch};
use qnm::solver::vie::Discretization;

fn main() -> qnm::Result<()> {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("QNM_LOG", "warn")).init();
    let h: f64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(5.0);
    let (radius, material, bg) = (100.0 * units::NM, MaterialModel::constant(Complex64::new(12.25, 0.0)), Background::new(1.0)?);
    let res = Resonator::new(Geometry::cylinder(radius, Point2::default())?, material, bg);
    let guess = Complex64::new(units::thz(330.0), -units::thz(20.0));
    let exact = find_mie_pole(0, radius, &material, &bg, guess)? / units::thz(1.0);

    let disc = Discretization::new(&res.geometry, h * units::NM)?;
    let mut search = PoleSearch::new(guess);
    search.drive = Drive::Azimuthal;
    let mode = find_qnm(&res, &disc, &search)?;
    let w = mode.omega() / units::thz(1.0);
    println!("analytic pole {:.4} {:+.4}i THz", exact.re, exact.im);
    println!("h = {h} nm:    {:.4} {:+.4}i THz  ({:.2}% off)", w.re, w.im, 100.0 * (w - exact).norm() / exact.norm());

    let scan = norm_scan(&mode, &scan_widths(100.0 * units::NM, 1000.0 * units::NM), NormOptions::default())?;
    println!("D/nm   |volume+surface|   |Sauvan|   relative difference");
    for (b, s) in scan.breakdowns.iter().zip(&scan.sauvan) {
        println!("{:5.0}   {:.5e}   {:.5e}   {:.3}%", b.domain_half_width / units::NM, b.total.norm(), s.norm(), 100.0 * ((s - b.total) / b.total).norm());
    }
    Ok(())
}
