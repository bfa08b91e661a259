//! find -> normalize -> regularize -> observe -> validate, writing the
//! artifact files into an output directory.
//!
//! CSV values are written with 17 significant digits and every parallel
//! stage collects in input order, so a rerun reproduces the files byte for
//! byte.

use std::fmt::Write as _;
use std::path::PathBuf;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use super::config::RunConfig;
use crate::background::{green_b_2d, im_green_b_diag};
use crate::dyson::QnmGreen;
use crate::error::Result;
use crate::model::{units, Point2, Resonator};
use crate::normalize::{default_r0, mode_volume, modevol_rows, norm_scan, normalize_mode, scan_widths, NormScan};
use crate::observables::{distance_scan, log_standoffs, propagator_map, spectrum, PropagatorRecord, SERecord};
use crate::solver::container;
use crate::solver::mode::{find_qnm, ModeField};
use crate::solver::oracle::DipoleOracle;
use crate::solver::vie::Discretization;

pub const MODE_FILE: &str = "mode.field";
pub const MODEVOL_FILE: &str = "modevol.csv";
pub const SPECTRUM_FILE: &str = "spectrum.csv";
pub const DISTANCE_FILE: &str = "distance.csv";
pub const PROPAGATOR_FILE: &str = "propagator.csv";
pub const REPORT_FILE: &str = "report.json";

/// How far a subcommand carries the pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Find,
    Normalize,
    ModeVolume,
    Se,
    Propagate,
    Validate,
    Run,
}

impl Stage {
    fn normalizes(self) -> bool {
        self != Stage::Find
    }

    fn writes_modevol(self) -> bool {
        matches!(self, Stage::ModeVolume | Stage::Run)
    }

    fn writes_se(self) -> bool {
        matches!(self, Stage::Se | Stage::Validate | Stage::Run)
    }

    fn writes_propagator(self) -> bool {
        matches!(self, Stage::Propagate | Stage::Validate | Stage::Run)
    }

    fn solves_oracle(self) -> bool {
        matches!(self, Stage::Validate | Stage::Run)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ComplexValue {
    pub re: f64,
    pub im: f64,
}

impl From<Complex64> for ComplexValue {
    fn from(c: Complex64) -> Self {
        Self { re: c.re, im: c.im }
    }
}

/// One oracle comparison in the report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub max_relative_error: f64,
    pub tolerance: f64,
    pub met: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NormSummary {
    pub converged: bool,
    pub tolerance: f64,
    pub r_caustic_nm: Option<f64>,
    pub norm: ComplexValue,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub stage: Stage,
    pub zero_contrast: bool,
    pub h_nm: f64,
    pub cells: usize,
    pub eigenfrequency_thz: Option<ComplexValue>,
    pub q: Option<f64>,
    pub normalization: Option<NormSummary>,
    pub v_eff_nm2: Option<f64>,
    pub r0_nm: Option<[f64; 2]>,
    pub checks: Vec<Check>,
    pub tolerances_met: bool,
    pub artifacts: Vec<String>,
}

/// Pipeline over one configuration and output directory.
pub struct Pipeline {
    pub config: RunConfig,
    pub out: PathBuf,
}

fn num(v: f64) -> String {
    format!("{v:.16e}")
}

fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

fn rel(a: f64, reference: f64) -> f64 {
    (a - reference).abs() / reference.abs()
}

impl Pipeline {
    pub fn new(config: RunConfig, out: impl Into<PathBuf>) -> Self {
        Self { config, out: out.into() }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    fn write(&self, name: &str, contents: &[u8], report: &mut Report) -> Result<()> {
        std::fs::write(self.path(name), contents)?;
        report.artifacts.push(name.to_string());
        log::info!("wrote {}", self.path(name).display());
        Ok(())
    }

    pub fn execute(&self, stage: Stage) -> Result<Report> {
        std::fs::create_dir_all(&self.out)?;
        let resonator = self.config.resonator()?;
        let disc = Discretization::new(&resonator.geometry, self.config.grid.h.0)?;
        let mut report = Report {
            stage,
            zero_contrast: self.config.zero_contrast(),
            h_nm: disc.h / units::NM,
            cells: disc.len(),
            eigenfrequency_thz: None,
            q: None,
            normalization: None,
            v_eff_nm2: None,
            r0_nm: None,
            checks: Vec::new(),
            tolerances_met: true,
            artifacts: Vec::new(),
        };
        if report.zero_contrast {
            log::warn!("material equals the background: no resonance, every enhancement is 1");
            self.zero_contrast_artifacts(stage, &resonator, &mut report)?;
        } else {
            self.resonant_artifacts(stage, &resonator, &disc, &mut report)?;
        }
        report.tolerances_met = report.checks.iter().all(|c| c.met);
        let mut json = serde_json::to_string_pretty(&report)?;
        json.push('\n');
        self.write(REPORT_FILE, json.as_bytes(), &mut report)?;
        Ok(report)
    }

    fn resonant_artifacts(&self, stage: Stage, resonator: &Resonator, disc: &Discretization, report: &mut Report) -> Result<()> {
        let raw = find_qnm(resonator, disc, &self.config.pole_search())?;
        let w = raw.omega();
        log::info!("eigenfrequency {:.6} THz, Q = {:.3}", w / units::thz(1.0), raw.eigenfrequency.q());
        report.eigenfrequency_thz = Some((w / units::thz(1.0)).into());
        report.q = Some(raw.eigenfrequency.q());
        if !stage.normalizes() {
            return self.write(MODE_FILE, &container::encode(&raw)?, report);
        }

        let widths = scan_widths(self.config.normalization.step.0, self.config.normalization.max.0);
        let scan = norm_scan(&raw, &widths, self.config.norm_options())?;
        let mode = normalize_mode(&raw, &scan)?;
        let r0 = self.config.r0().unwrap_or_else(|| default_r0(&mode));
        let volume = mode_volume(&mode, Some(r0))?;
        report.normalization = Some(NormSummary {
            converged: scan.converged,
            tolerance: scan.tolerance,
            r_caustic_nm: scan.r_caustic.map(|r| r / units::NM),
            norm: scan.last().expect("non-empty scan").total.into(),
        });
        report.v_eff_nm2 = Some(volume.v_eff / (units::NM * units::NM));
        report.r0_nm = Some([r0.x / units::NM, r0.y / units::NM]);
        self.write(MODE_FILE, &container::encode(&mode)?, report)?;
        if stage.writes_modevol() {
            self.write(MODEVOL_FILE, modevol_csv(&raw, &scan, r0)?.as_bytes(), report)?;
        }
        if !(stage.writes_se() || stage.writes_propagator()) {
            return Ok(());
        }

        let oracle_disc = if stage.solves_oracle() {
            Some(Discretization::new(&resonator.geometry, self.config.oracle_h())?)
        } else {
            None
        };
        let green = QnmGreen::new(mode)?;
        let omega_c = w.re;
        let oracle_c = match &oracle_disc {
            Some(d) => Some(DipoleOracle::new(resonator, d, omega_c)?),
            None => None,
        };
        let tol = self.config.tolerances;
        if stage.writes_se() {
            if let Some(s) = &self.config.spectrum {
                let omegas = sweep(omega_c, -w.im, s.span_gamma, s.points);
                let with_oracle = if s.oracle { oracle_disc.as_ref() } else { None };
                let records = spectrum(&green, with_oracle, s.emitter.position(), s.emitter.orientation(), &omegas)?;
                if with_oracle.is_some() {
                    report.checks.push(check("spectrum far vs oracle", records.iter().map(|r| (r.far, r.oracle)), tol.spectrum));
                }
                self.write(SPECTRUM_FILE, spectrum_csv(&records).as_bytes(), report)?;
            }
            if let Some(d) = &self.config.distance {
                let ray = d.ray();
                let (standoffs, marks) = merged_standoffs(d.min.0, d.max.0, d.per_decade, &d.oracle_checkpoints, oracle_c.is_some())?;
                let points: Vec<Point2> = standoffs.iter().map(|&s| ray.at(s)).collect();
                let mut records = distance_scan(&green, None, &points, d.orientation(), omega_c)?;
                if let Some(o) = &oracle_c {
                    let values: Vec<f64> = marks
                        .par_iter()
                        .map(|&i| o.enhancement(points[i], d.orientation()))
                        .collect::<Result<_>>()?;
                    for (&i, v) in marks.iter().zip(values) {
                        records[i].oracle = Some(v);
                    }
                    report.checks.push(check("distance far vs oracle", records.iter().map(|r| (r.far, r.oracle)), tol.distance));
                }
                self.write(DISTANCE_FILE, distance_csv(&standoffs, &records).as_bytes(), report)?;
            }
        }
        if stage.writes_propagator() {
            if let Some(p) = &self.config.propagator {
                let ray = p.ray();
                let (distances, marks) = merged_standoffs(p.min.0, p.max.0, p.per_decade, &p.oracle_checkpoints, oracle_c.is_some())?;
                let points: Vec<Point2> = distances.iter().map(|&s| ray.at(s)).collect();
                let mut records = propagator_map(&green, None, p.source(), &points, omega_c)?;
                if let Some(o) = &oracle_c {
                    let marked: Vec<Point2> = marks.iter().map(|&i| points[i]).collect();
                    let values = propagator_map(&green, Some(o), p.source(), &marked, omega_c)?;
                    for (&i, v) in marks.iter().zip(values) {
                        records[i].oracle = v.oracle;
                    }
                    report.checks.push(check("propagator far vs oracle", records.iter().map(|r| (r.far, r.oracle)), tol.propagator));
                }
                self.write(PROPAGATOR_FILE, propagator_csv(&records).as_bytes(), report)?;
            }
        }
        Ok(())
    }

    /// With no contrast every variant reduces to the background: enhancement
    /// 1 and the bare background propagator.
    fn zero_contrast_artifacts(&self, stage: Stage, resonator: &Resonator, report: &mut Report) -> Result<()> {
        if stage.writes_modevol() {
            self.write(MODEVOL_FILE, modevol_header().as_bytes(), report)?;
        }
        let oracle = stage.solves_oracle();
        if stage.writes_se() {
            if let Some(s) = &self.config.spectrum {
                let p = &self.config.pole_search;
                let omegas = sweep(p.guess_re.0, p.guess_im.0.abs(), s.span_gamma, s.points);
                let records: Vec<SERecord> = omegas
                    .iter()
                    .map(|&w| unit_record(w, s.emitter.position(), s.emitter.orientation(), oracle && s.oracle))
                    .collect();
                self.write(SPECTRUM_FILE, spectrum_csv(&records).as_bytes(), report)?;
            }
            if let Some(d) = &self.config.distance {
                let ray = d.ray();
                let (standoffs, marks) = merged_standoffs(d.min.0, d.max.0, d.per_decade, &d.oracle_checkpoints, oracle)?;
                let records: Vec<SERecord> = standoffs
                    .iter()
                    .enumerate()
                    .map(|(i, &s)| unit_record(self.config.pole_search.guess_re.0, ray.at(s), d.orientation(), marks.contains(&i)))
                    .collect();
                self.write(DISTANCE_FILE, distance_csv(&standoffs, &records).as_bytes(), report)?;
            }
        }
        if stage.writes_propagator() {
            if let Some(p) = &self.config.propagator {
                let omega = self.config.pole_search.guess_re.0;
                let bg = &resonator.background;
                let im_b = im_green_b_diag(omega, bg, 2)?;
                let ray = p.ray();
                let (distances, marks) = merged_standoffs(p.min.0, p.max.0, p.per_decade, &p.oracle_checkpoints, oracle)?;
                let records = distances
                    .iter()
                    .enumerate()
                    .map(|(i, &s)| {
                        let r_b = ray.at(s);
                        let g = green_b_2d(r_b, p.source(), omega, bg)?.yy().norm_sqr() / (im_b * im_b);
                        Ok(PropagatorRecord { r_b, oracle: marks.contains(&i).then_some(g), f: g, far: g, out: Some(g) })
                    })
                    .collect::<Result<Vec<_>>>()?;
                self.write(PROPAGATOR_FILE, propagator_csv(&records).as_bytes(), report)?;
            }
        }
        Ok(())
    }
}

fn unit_record(omega: f64, position: Point2, orientation: Point2, oracle: bool) -> SERecord {
    SERecord { omega, position, orientation, oracle: oracle.then_some(1.0), f: 1.0, far: 1.0, out: 1.0, born: 1.0 }
}

/// `points` frequencies evenly covering `center +- span * gamma`.
fn sweep(center: f64, gamma: f64, span: f64, points: usize) -> Vec<f64> {
    (0..points)
        .map(|i| center + gamma * span * (2.0 * i as f64 / (points - 1) as f64 - 1.0))
        .collect()
}

/// Log-spaced standoffs merged with the checkpoints, and the indices of the
/// checkpoints in the merged list (empty without an oracle).
fn merged_standoffs(min: f64, max: f64, per_decade: usize, checkpoints: &[super::config::Length], oracle: bool) -> Result<(Vec<f64>, Vec<usize>)> {
    let mut s = log_standoffs(min, max, per_decade)?;
    s.extend(checkpoints.iter().map(|c| c.0));
    s.sort_by(f64::total_cmp);
    s.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * b.abs());
    let marks = if oracle {
        checkpoints
            .iter()
            .map(|c| s.iter().position(|v| (v - c.0).abs() <= 1e-12 * c.0.abs()).expect("merged"))
            .collect()
    } else {
        Vec::new()
    };
    Ok((s, marks))
}

fn check(name: &str, pairs: impl Iterator<Item = (f64, Option<f64>)>, tolerance: f64) -> Check {
    let err = pairs.filter_map(|(v, o)| o.map(|o| rel(v, o))).fold(0.0, f64::max);
    Check { name: name.to_string(), max_relative_error: err, tolerance, met: err < tolerance }
}

fn modevol_header() -> String {
    "domain_half_width_nm,re_volume_term,im_volume_term,re_surface_term,im_surface_term,re_total,im_total,V_eff_running\n".into()
}

fn modevol_csv(mode: &ModeField, scan: &NormScan, r0: Point2) -> Result<String> {
    let mut out = modevol_header();
    for (b, v) in modevol_rows(mode, scan, r0)? {
        let cols = [
            b.domain_half_width / units::NM,
            b.volume_term.re,
            b.volume_term.im,
            b.surface_term.re,
            b.surface_term.im,
            b.total.re,
            b.total.im,
            v,
        ];
        writeln!(out, "{}", cols.map(num).join(",")).expect("string write");
    }
    Ok(out)
}

fn se_columns(r: &SERecord) -> String {
    [opt(r.oracle), num(r.f), num(r.far), num(r.out), num(r.born)].join(",")
}

fn spectrum_csv(records: &[SERecord]) -> String {
    let mut out = String::from("omega_thz,F_a_oracle,F_a_f,F_a_far,F_a_out,F_a_born\n");
    for r in records {
        writeln!(out, "{},{}", num(units::to_thz(r.omega)), se_columns(r)).expect("string write");
    }
    out
}

fn distance_csv(standoffs: &[f64], records: &[SERecord]) -> String {
    let mut out = String::from("standoff_nm,F_a_oracle,F_a_f,F_a_far,F_a_out,F_a_born\n");
    for (s, r) in standoffs.iter().zip(records) {
        writeln!(out, "{},{}", num(s / units::NM), se_columns(r)).expect("string write");
    }
    out
}

fn propagator_csv(records: &[PropagatorRecord]) -> String {
    let mut out = String::from("x_b_nm,y_b_nm,G_oracle,G_f,G_far,G_out\n");
    for r in records {
        let cols = [num(r.r_b.x / units::NM), num(r.r_b.y / units::NM), opt(r.oracle), num(r.f), num(r.far), opt(r.out)];
        writeln!(out, "{}", cols.join(",")).expect("string write");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cli::config::Length;

    #[test]
    fn sweep_is_symmetric() {
        let s = sweep(10.0, 1.0, 3.0, 13);
        assert_eq!(s[0], 7.0);
        assert_eq!(s[6], 10.0);
        assert_eq!(s[12], 13.0);
    }

    #[test]
    fn checkpoints_are_merged_once() {
        let cps = [Length(10e-9), Length(100e-9)];
        let (s, marks) = merged_standoffs(5e-9, 500e-9, 4, &cps, true).unwrap();
        assert!(s.windows(2).all(|w| w[1] > w[0]));
        assert_eq!(marks.len(), 2);
        assert_eq!(s[marks[0]], 10e-9);
        assert_eq!(s[marks[1]], 100e-9);
        let (_, none) = merged_standoffs(5e-9, 500e-9, 4, &cps, false).unwrap();
        assert!(none.is_empty());
    }

    #[test]
    fn numbers_keep_seventeen_digits() {
        let v = 0.1 + 0.2;
        assert_eq!(num(v).parse::<f64>().unwrap(), v);
        assert_eq!(opt(None), "");
    }
}
