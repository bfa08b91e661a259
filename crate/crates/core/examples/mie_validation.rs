//! Check the full-wave solver against the analytic series for a Drude
//! cylinder under plane-wave illumination (E in the plane, H along the axis).
//!
//! Usage: `cargo run --release --example mie_validation -- [h_nm] [f_THz ...]`

use qnm::model::{units, Background, Geometry, MaterialModel, Point2, Resonator};
use qnm::solver::mie::mie_cylinder;
use qnm::solver::oracle::DipoleOracle;
use qnm::solver::vie::Discretization;

fn main() -> qnm::Result<()> {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("QNM_LOG", "warn")).init();
    let args: Vec<f64> = std::env::args().skip(1).filter_map(|s| s.parse().ok()).collect();
    let h = args.first().copied().unwrap_or(1.0);
    let freqs = if args.len() > 1 { args[1..].to_vec() } else { vec![415.863] };
    let radius = 30.0 * units::NM;
    let drude = MaterialModel::drude(1.26e16, 7e13)?;
    let bg = Background::new(1.5)?;
    let cyl = Resonator::new(Geometry::cylinder(radius, Point2::default())?, drude, bg);
    let disc = Discretization::new(&cyl.geometry, h * units::NM)?;
    println!("r = 30 nm, h = {h} nm, {} cells; widths in nm", disc.len());
    for f in freqs {
        let w = units::thz(f);
        let mie = mie_cylinder(radius, &drude, &bg, w)?.cross_sections;
        let t = std::time::Instant::now();
        let vie = DipoleOracle::new(&cyl, &disc, w)?.plane_wave_cross_sections()?;
        for (name, a, b) in [
            ("extinction", vie.extinction, mie.extinction),
            ("scattering", vie.scattering, mie.scattering),
            ("absorption", vie.absorption, mie.absorption),
        ] {
            println!("{f:8.3} THz {name:11} solver {:10.4} series {:10.4}  {:+.2}%", a * 1e9, b * 1e9, 100.0 * (a / b - 1.0));
        }
        println!("             ({:.1} s)", t.elapsed().as_secs_f64());
    }
    Ok(())
}
