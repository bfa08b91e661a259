//! A few nanometres from the flat side of the rod the single mode misses the
//! quasi-static image interaction. Compare the far-field form, the image
//! patched form and the first Born term against the full dipole solution.
//!
//! Usage: `cargo run --release --example quasi_static_patch -- [mode_h_nm] [oracle_h_nm]`

use num_complex::Complex64;
use qnm::dyson::QnmGreen;
use qnm::model::{units, Background, Geometry, MaterialModel, Point2, Resonator};
use qnm::normalize::{norm_scan, normalize_mode, scan_widths, NormOptions};
use qnm::observables::distance_scan;
use qnm::solver::mode::find_qnm;
use qnm::solver::oracle::DipoleOracle;
use qnm::solver::pole::PoleSearch;
use qnm::solver::vie::Discretization;

fn main() -> qnm::Result<()> {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("QNM_LOG", "warn")).init();
    let arg = |i: usize, d: f64| std::env::args().nth(i).and_then(|s| s.parse().ok()).unwrap_or(d);
    let (mode_h, oracle_h) = (arg(1, 2.0), arg(2, 0.5));
    let nm = units::NM;
    let res = Resonator::new(
        Geometry::rod(10.0 * nm, 80.0 * nm, Point2::default())?,
        MaterialModel::drude(1.26e16, 7e13)?,
        Background::new(1.5)?,
    );
    let disc = Discretization::new(&res.geometry, mode_h * nm)?;
    let mode = find_qnm(&res, &disc, &PoleSearch::new(Complex64::new(units::thz(420.0), -units::thz(35.0))))?;
    let scan = norm_scan(&mode, &scan_widths(100.0 * nm, 1000.0 * nm), NormOptions::default())?;
    let green = QnmGreen::new(normalize_mode(&mode, &scan)?)?;
    let wc = mode.omega().re;
    let oracle = DipoleOracle::new(&res, &Discretization::new(&res.geometry, oracle_h * nm)?, wc)?;

    let path: Vec<Point2> = [2.0, 3.0, 4.0, 5.0, 10.0, 20.0, 50.0].iter().map(|s| Point2::new(5.0 * nm + s * nm, 0.0)).collect();
    println!("standoff/nm   oracle     G^far     G^out    G^Born");
    for r in distance_scan(&green, Some(&oracle), &path, Point2::new(0.0, 1.0), wc)? {
        println!(
            "{:8.1} {:9.2} {:9.2} {:9.2} {:9.2}",
            (r.position.x - 5.0 * nm) / nm,
            r.oracle.unwrap(),
            r.far,
            r.out,
            r.born
        );
    }
    Ok(())
}
