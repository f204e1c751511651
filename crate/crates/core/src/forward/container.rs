//! On-disk measurement-set container.
//!
//! Layout: one line of compact JSON
//! `{"version":1,"height":H,"width":W,"I":I,"input_snr_db":S,"mask_seeds":[...]}`
//! terminated by `\n`, followed by `I` blocks of `H*W` little-endian `f64`
//! magnitudes in measurement order. `input_snr_db` is `null` for noiseless
//! data. Masks are not stored; they are regenerated from their seeds.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::{CdpMask, CdpMeasurement, Measurement, MeasurementSet};
use crate::error::{Error, Result};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
struct Header {
    version: u32,
    height: usize,
    width: usize,
    #[serde(rename = "I")]
    count: usize,
    input_snr_db: Option<f64>,
    mask_seeds: Vec<u64>,
}

pub fn write_measurement_set<W: Write>(set: &MeasurementSet, mut out: W) -> Result<()> {
    let mut seeds = Vec::with_capacity(set.len());
    let mut blocks = Vec::with_capacity(set.len());
    for m in set.measurements() {
        match m {
            Measurement::Cdp(c) => {
                seeds.push(c.mask.seed());
                blocks.push(&c.magnitudes);
            }
            Measurement::Linear(_) => {
                return Err(Error::Format(
                    "only coded-diffraction sets can be serialized".into(),
                ))
            }
        }
    }
    let snr = set.input_snr_db();
    let header = Header {
        version: FORMAT_VERSION,
        height: set.height(),
        width: set.width(),
        count: set.len(),
        input_snr_db: snr.is_finite().then_some(snr),
        mask_seeds: seeds,
    };
    let json = serde_json::to_string(&header).map_err(|e| Error::Format(e.to_string()))?;
    out.write_all(json.as_bytes())?;
    out.write_all(b"\n")?;
    for block in blocks {
        for v in block {
            out.write_all(&v.to_le_bytes())?;
        }
    }
    out.flush()?;
    Ok(())
}

pub fn read_measurement_set<R: BufRead>(mut input: R) -> Result<MeasurementSet> {
    let mut line = Vec::new();
    input.read_until(b'\n', &mut line)?;
    if line.last() != Some(&b'\n') {
        return Err(Error::Format("missing header terminator".into()));
    }
    let header: Header =
        serde_json::from_slice(&line).map_err(|e| Error::Format(format!("bad header: {e}")))?;
    if header.version != FORMAT_VERSION {
        return Err(Error::Format(format!("unsupported version {}", header.version)));
    }
    if header.height == 0 || header.width == 0 || header.count == 0 {
        return Err(Error::Format("empty dimensions or measurement count".into()));
    }
    if header.mask_seeds.len() != header.count {
        return Err(Error::Format(format!(
            "header lists {} seeds for {} measurements",
            header.mask_seeds.len(),
            header.count
        )));
    }
    let n = header.height * header.width;
    let mut buf = vec![0u8; n * 8];
    let mut measurements = Vec::with_capacity(header.count);
    for &seed in &header.mask_seeds {
        input.read_exact(&mut buf).map_err(|_| Error::Format("truncated data".into()))?;
        let magnitudes = buf
            .chunks_exact(8)
            .map(|b| f64::from_le_bytes(b.try_into().expect("8-byte chunk")))
            .collect();
        let mask = CdpMask::from_seed(seed, header.height, header.width);
        measurements.push(Measurement::Cdp(CdpMeasurement::new(mask, magnitudes)?));
    }
    let mut rest = [0u8; 1];
    if input.read(&mut rest)? != 0 {
        return Err(Error::Format("trailing bytes after data".into()));
    }
    MeasurementSet::new(measurements, header.input_snr_db.unwrap_or(f64::INFINITY))
}
