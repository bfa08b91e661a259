//! Normalize the rod plasmon and follow the norm and the effective mode
//! volume as the integration domain grows.
//!
//! Usage: `cargo run --release --example normalize_and_mode_volume -- [h_nm]`

use num_complex::Complex64;
use qnm::model::{units, Background, Geometry, MaterialModel, Point2, Resonator};
use qnm::normalize::{default_r0, mode_volume, modevol_rows, norm_scan, normalize_mode, scan_widths, NormOptions};
use qnm::solver::mode::find_qnm;
use qnm::solver::pole::PoleSearch;
use qnm::solver::vie::Discretization;

fn main() -> qnm::Result<()> {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("QNM_LOG", "info")).init();
    let h_nm: f64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(2.0);
    let res = Resonator::new(
        Geometry::rod(10.0 * units::NM, 80.0 * units::NM, Point2::default())?,
        MaterialModel::drude(1.26e16, 7e13)?,
        Background::new(1.5)?,
    );
    let disc = Discretization::new(&res.geometry, h_nm * units::NM)?;
    let mode = find_qnm(&res, &disc, &PoleSearch::new(Complex64::new(units::thz(420.0), -units::thz(35.0))))?;
    let t = std::time::Instant::now();
    let scan = norm_scan(&mode, &scan_widths(100.0 * units::NM, 1000.0 * units::NM), NormOptions::default())?;
    let r0 = default_r0(&mode);
    println!("D/nm   volume term              surface term             total                    sauvan - total   V_eff/nm^2");
    for ((b, v_eff), s) in modevol_rows(&mode, &scan, r0)?.iter().zip(&scan.sauvan) {
        println!(
            "{:5.0}  {:>11.4e} {:+.4e}i  {:>11.4e} {:+.4e}i  {:>11.4e} {:+.4e}i  {:.2e}  {:.2}",
            b.domain_half_width / units::NM,
            b.volume_term.re,
            b.volume_term.im,
            b.surface_term.re,
            b.surface_term.im,
            b.total.re,
            b.total.im,
            ((s - b.total) / b.total).norm(),
            v_eff / (units::NM * units::NM),
        );
    }
    println!("caustic radius: {:?} nm", scan.r_caustic.map(|r| r / units::NM));
    let normalized = normalize_mode(&mode, &scan)?;
    let v = mode_volume(&normalized, Some(r0))?;
    println!("r0 = ({:.1}, {:.1}) nm, V_eff = {:.2} nm^2, v_Q = {:.2}", r0.x / units::NM, r0.y / units::NM, v.v_eff / 1e-18, v.v_q / 1e-18);
    println!("scan took {:.1} s", t.elapsed().as_secs_f64());
    Ok(())
}
