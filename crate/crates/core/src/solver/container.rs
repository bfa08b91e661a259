//! Binary container for mode fields.
//!
//! Layout: the magic line `QNMFIELD1\n`, a little-endian `u64` header length,
//! a JSON header, then little-endian `f64` payload arrays with real and
//! imaginary parts interleaved: `ex` and `ey` in row-major order (x fastest),
//! followed by the resonator cell field `(fx, fy)` per cell. Values round-trip
//! bit for bit.

use std::io::{Read, Write};
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ComplexFrequency, GridSpec, Resonator};
use crate::solver::mode::{LatticeBox, ModeField, NormState};
use crate::solver::vie::Discretization;

const MAGIC: &[u8] = b"QNMFIELD1\n";

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Header {
    endianness: String,
    layout: String,
    grid: GridSpec,
    sample_box: LatticeBox,
    nx: usize,
    ny: usize,
    eigenfrequency: ComplexFrequency,
    gauge: String,
    norm_state: NormState,
    resonator: Resonator,
    discretization: Discretization,
}

fn put(out: &mut Vec<u8>, values: &[Complex64]) {
    for v in values {
        out.extend_from_slice(&v.re.to_le_bytes());
        out.extend_from_slice(&v.im.to_le_bytes());
    }
}

pub fn encode(mode: &ModeField) -> Result<Vec<u8>> {
    let header = Header {
        endianness: "little".into(),
        layout: "ex,ey row-major x-fastest; then cell field; complex as (re, im) f64".into(),
        grid: mode.grid,
        sample_box: mode.sample_box,
        nx: mode.sample_box.nx(),
        ny: mode.sample_box.ny(),
        eigenfrequency: mode.eigenfrequency,
        gauge: mode.gauge.clone(),
        norm_state: mode.norm_state,
        resonator: mode.resonator,
        discretization: mode.disc.clone(),
    };
    let json = serde_json::to_vec(&header)?;
    let mut out = Vec::with_capacity(MAGIC.len() + 8 + json.len() + 16 * (mode.ex.len() * 2 + mode.cell_field.len() * 2));
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(json.len() as u64).to_le_bytes());
    out.extend_from_slice(&json);
    put(&mut out, &mode.ex);
    put(&mut out, &mode.ey);
    let cells: Vec<Complex64> = mode.cell_field.iter().flat_map(|c| c.iter().copied()).collect();
    put(&mut out, &cells);
    Ok(out)
}

struct Cursor<'a> {
    data: &'a [u8],
    at: usize,
}

impl Cursor<'_> {
    fn take(&mut self, n: usize) -> Result<&[u8]> {
        if self.at + n > self.data.len() {
            return Err(Error::Format(format!("truncated container at byte {}", self.at)));
        }
        let s = &self.data[self.at..self.at + n];
        self.at += n;
        Ok(s)
    }

    fn complexes(&mut self, n: usize) -> Result<Vec<Complex64>> {
        let raw = self.take(16 * n)?;
        Ok(raw
            .chunks_exact(16)
            .map(|c| {
                let re = f64::from_le_bytes(c[..8].try_into().unwrap());
                let im = f64::from_le_bytes(c[8..].try_into().unwrap());
                Complex64::new(re, im)
            })
            .collect())
    }
}

pub fn decode(data: &[u8]) -> Result<ModeField> {
    let mut cur = Cursor { data, at: 0 };
    if cur.take(MAGIC.len())? != MAGIC {
        return Err(Error::Format("not a mode field container".into()));
    }
    let len = u64::from_le_bytes(cur.take(8)?.try_into().unwrap()) as usize;
    let header: Header = serde_json::from_slice(cur.take(len)?)?;
    if header.endianness != "little" {
        return Err(Error::Format(format!("unsupported endianness {}", header.endianness)));
    }
    let n = header.sample_box.len();
    if header.nx * header.ny != n {
        return Err(Error::Format("header dimensions disagree with the sample box".into()));
    }
    let ex = cur.complexes(n)?;
    let ey = cur.complexes(n)?;
    let cells = cur.complexes(2 * header.discretization.len())?;
    if cur.at != data.len() {
        return Err(Error::Format(format!("{} trailing bytes", data.len() - cur.at)));
    }
    Ok(ModeField {
        grid: header.grid,
        sample_box: header.sample_box,
        ex,
        ey,
        eigenfrequency: header.eigenfrequency,
        norm_state: header.norm_state,
        gauge: header.gauge,
        resonator: header.resonator,
        disc: header.discretization,
        cell_field: cells.chunks(2).map(|c| [c[0], c[1]]).collect(),
    })
}

pub fn write(mode: &ModeField, path: &Path) -> Result<()> {
    let mut f = std::fs::File::create(path)?;
    f.write_all(&encode(mode)?)?;
    Ok(())
}

pub fn read(path: &Path) -> Result<ModeField> {
    let mut data = Vec::new();
    std::fs::File::open(path)?.read_to_end(&mut data)?;
    decode(&data)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{units, Background, Geometry, MaterialModel, Point2};

    #[test]
    fn round_trip_is_bit_exact() {
        let res = Resonator::new(
            Geometry::rod(10e-9, 20e-9, Point2::default()).unwrap(),
            MaterialModel::drude(1.26e16, 7e13).unwrap(),
            Background::new(1.5).unwrap(),
        );
        let disc = Discretization::new(&res.geometry, 5e-9).unwrap();
        let cells = (0..disc.len()).map(|i| [Complex64::new(i as f64 * 0.1 + 1e-17, -1.0 / 3.0), Complex64::new(std::f64::consts::PI, i as f64)]).collect();
        let omega = Complex64::new(units::thz(700.0), -units::thz(40.123456789));
        let mode = ModeField::from_cells(&res, &disc, omega, cells).unwrap();
        let mode = ModeField { norm_state: NormState::Normalized { norm: Complex64::new(1.0 / 7.0, 2e-30) }, ..mode };
        let bytes = encode(&mode).unwrap();
        let back = decode(&bytes).unwrap();
        assert_eq!(back, mode);
        for (a, b) in back.ex.iter().zip(&mode.ex) {
            assert_eq!(a.re.to_bits(), b.re.to_bits());
            assert_eq!(a.im.to_bits(), b.im.to_bits());
        }
        assert_eq!(encode(&back).unwrap(), bytes);
        assert!(decode(&bytes[..bytes.len() - 3]).is_err());
    }
}
