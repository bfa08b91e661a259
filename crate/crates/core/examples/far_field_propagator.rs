//! Why the regularized field matters far away: enhancement along the rod's
//! side axis out to 5 um, and the propagator `|G_yy|^2` from a source 10 nm
//! off the side, with the bare mode (`G^f`) and the regularized one (`G^F`).
//!
//! Usage: `cargo run --release --example far_field_propagator -- [mode_h_nm] [oracle_h_nm]`

use num_complex::Complex64;
use qnm::dyson::QnmGreen;
use qnm::model::{units, Background, Geometry, MaterialModel, Point2, Resonator};
use qnm::normalize::{norm_scan, normalize_mode, scan_widths, NormOptions};
use qnm::observables::{distance_scan, log_standoffs, propagator_map};
use qnm::solver::mode::find_qnm;
use qnm::solver::oracle::DipoleOracle;
use qnm::solver::pole::PoleSearch;
use qnm::solver::vie::Discretization;

fn main() -> qnm::Result<()> {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("QNM_LOG", "warn")).init();
    let arg = |i: usize, d: f64| std::env::args().nth(i).and_then(|s| s.parse().ok()).unwrap_or(d);
    let (mode_h, oracle_h) = (arg(1, 2.0), arg(2, 1.0));
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

    let path: Vec<Point2> = log_standoffs(10.0 * nm, 5000.0 * nm, 3)?.iter().map(|s| Point2::new(5.0 * nm + s, 0.0)).collect();
    println!("standoff/nm   oracle        G^f       G^far");
    for r in distance_scan(&green, Some(&oracle), &path, Point2::new(0.0, 1.0), wc)? {
        println!("{:9.1} {:10.4} {:10.4} {:10.4}", (r.position.x - 5.0 * nm) / nm, r.oracle.unwrap(), r.f, r.far);
    }

    let r_a = Point2::new(15.0 * nm, 0.0);
    let receivers: Vec<Point2> = [100.0, 200.0, 500.0, 1000.0, 2000.0].iter().map(|x| Point2::new(x * nm, 0.0)).collect();
    println!("\nx_b/nm     oracle        G^f       G^F");
    for p in propagator_map(&green, Some(&oracle), r_a, &receivers, wc)? {
        println!("{:7.0} {:10.4e} {:10.4e} {:10.4e}", p.r_b.x / nm, p.oracle.unwrap(), p.f, p.far);
    }
    Ok(())
}
