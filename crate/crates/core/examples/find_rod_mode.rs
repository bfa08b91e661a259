//! Locate the dipolar plasmon of the 10 x 80 nm gold-like rod.
//!
//! Usage: `cargo run --release --example find_rod_mode -- [h_nm]`

use num_complex::Complex64;
use qnm::model::{units, Background, Geometry, MaterialModel, Point2, Resonator};
use qnm::solver::pole::{find_pole, null_vector, PoleSearch};
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
    let t = std::time::Instant::now();
    let search = PoleSearch::new(Complex64::new(units::thz(420.0), -units::thz(35.0)));
    let pole = find_pole(&res, &disc, &search)?;
    let (_, residual) = null_vector(&pole);
    let f = pole.omega / (2.0 * std::f64::consts::PI * 1e12);
    println!("h = {h_nm} nm, {} cells", disc.len());
    println!("eigenfrequency / 2pi = {:.4} {:+.4}i THz  (Q = {:.3})", f.re, f.im, -f.re / (2.0 * f.im));
    println!("iterations {}, null-vector residual {residual:.2e}, {:.1} s", pole.iterations, t.elapsed().as_secs_f64());
    Ok(())
}
