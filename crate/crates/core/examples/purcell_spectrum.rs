//! Emission enhancement of a y-oriented dipole 10.4 nm beyond the rod end,
//! swept across the resonance, from the single-mode Green functions and the
//! full dipole solution.
//!
//! Usage: `cargo run --release --example purcell_spectrum -- [mode_h_nm] [oracle_h_nm]`

use num_complex::Complex64;
use qnm::dyson::QnmGreen;
use qnm::model::{units, Background, Geometry, MaterialModel, Point2, Resonator};
use qnm::normalize::{norm_scan, normalize_mode, scan_widths, NormOptions};
use qnm::observables::spectrum;
use qnm::solver::mode::find_qnm;
use qnm::solver::pole::PoleSearch;
use qnm::solver::vie::Discretization;

fn main() -> qnm::Result<()> {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("QNM_LOG", "warn")).init();
    let arg = |i: usize, d: f64| std::env::args().nth(i).and_then(|s| s.parse().ok()).unwrap_or(d);
    let (mode_h, oracle_h) = (arg(1, 2.0), arg(2, 1.0));
    let res = Resonator::new(
        Geometry::rod(10.0 * units::NM, 80.0 * units::NM, Point2::default())?,
        MaterialModel::drude(1.26e16, 7e13)?,
        Background::new(1.5)?,
    );
    let disc = Discretization::new(&res.geometry, mode_h * units::NM)?;
    let mode = find_qnm(&res, &disc, &PoleSearch::new(Complex64::new(units::thz(420.0), -units::thz(35.0))))?;
    let scan = norm_scan(&mode, &scan_widths(100.0 * units::NM, 1000.0 * units::NM), NormOptions::default())?;
    let green = QnmGreen::new(normalize_mode(&mode, &scan)?)?;
    let (wc, gc) = (mode.omega().re, -mode.omega().im);

    let omegas: Vec<f64> = (0..=12).map(|i| wc + gc * (-3.0 + 0.5 * i as f64)).collect();
    let oracle_disc = Discretization::new(&res.geometry, oracle_h * units::NM)?;
    let r_a = Point2::new(0.0, 50.4 * units::NM);
    println!("f/THz     oracle      G^f     G^far     G^out");
    for r in spectrum(&green, Some(&oracle_disc), r_a, Point2::new(0.0, 1.0), &omegas)? {
        println!(
            "{:7.2} {:9.2} {:9.2} {:9.2} {:9.2}",
            units::to_thz(r.omega),
            r.oracle.unwrap_or(f64::NAN),
            r.f,
            r.far,
            r.out
        );
    }
    Ok(())
}
