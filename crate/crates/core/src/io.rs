//! Field files: a small little-endian binary format and a row-major CSV form.
//!
//! Binary layout: d (u32), N (u32), dt (f64), seed (u64), then N^d f64 values,
//! all little-endian, first coordinate slowest.

use serde::{Deserialize, Serialize};
use std::io::Write;

use crate::error::{Error, Result};
use crate::lattice::grid_point;
use crate::noise_field::NoiseIncrement;

pub const HEADER_LEN: usize = 4 + 4 + 8 + 8;
/// Largest number of values a decoder will accept (2^28, i.e. 2 GiB of payload).
pub const MAX_VALUES: usize = 1 << 28;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldFile {
    pub d: usize,
    pub n: usize,
    pub dt: f64,
    pub seed: u64,
    pub values: Vec<f64>,
}

fn fmt_err<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Format(msg.into()))
}

fn value_count(d: usize, n: usize) -> Result<usize> {
    if d == 0 || n == 0 {
        return fmt_err(format!("d and N must be positive, got d={d}, N={n}"));
    }
    let mut c: usize = 1;
    for _ in 0..d {
        c = match c.checked_mul(n) {
            Some(v) if v <= MAX_VALUES => v,
            _ => return fmt_err(format!("N^d too large (d={d}, N={n})")),
        };
    }
    Ok(c)
}

impl FieldFile {
    pub fn new(d: usize, n: usize, dt: f64, seed: u64, values: Vec<f64>) -> Result<Self> {
        let f = Self { d, n, dt, seed, values };
        f.check()?;
        Ok(f)
    }

    pub fn from_increment(inc: &NoiseIncrement, seed: u64) -> Self {
        Self { d: inc.d, n: inc.grid_n, dt: inc.dt, seed, values: inc.values.clone() }
    }

    fn check(&self) -> Result<()> {
        let c = value_count(self.d, self.n)?;
        if self.values.len() != c {
            return fmt_err(format!("expected {c} values, found {}", self.values.len()));
        }
        if !self.dt.is_finite() || self.dt < 0.0 {
            return fmt_err(format!("dt must be finite and >= 0, got {}", self.dt));
        }
        Ok(())
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(HEADER_LEN + 8 * self.values.len());
        out.extend_from_slice(&(self.d as u32).to_le_bytes());
        out.extend_from_slice(&(self.n as u32).to_le_bytes());
        out.extend_from_slice(&self.dt.to_le_bytes());
        out.extend_from_slice(&self.seed.to_le_bytes());
        for v in &self.values {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < HEADER_LEN {
            return fmt_err(format!("truncated header: {} bytes", bytes.len()));
        }
        let u32_at = |i: usize| u32::from_le_bytes(bytes[i..i + 4].try_into().expect("4 bytes")) as usize;
        let u64_at = |i: usize| u64::from_le_bytes(bytes[i..i + 8].try_into().expect("8 bytes"));
        let d = u32_at(0);
        let n = u32_at(4);
        let dt = f64::from_bits(u64_at(8));
        let seed = u64_at(16);
        let count = value_count(d, n)?;
        let payload = &bytes[HEADER_LEN..];
        if payload.len() != 8 * count {
            return fmt_err(format!("payload has {} bytes, expected {}", payload.len(), 8 * count));
        }
        let values = payload.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes"))).collect();
        Self::new(d, n, dt, seed, values)
    }

    /// `# d=.. n=.. dt=.. seed=..` then `flat,x_1..x_d,value` rows in row-major order.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut w = w;
        writeln!(w, "# d={} n={} dt={:e} seed={}", self.d, self.n, self.dt, self.seed)?;
        let mut wr = csv::Writer::from_writer(w);
        let mut header = vec!["flat".to_string()];
        header.extend((1..=self.d).map(|i| format!("x_{i}")));
        header.push("value".into());
        wr.write_record(&header).map_err(csv_err)?;
        for (flat, v) in self.values.iter().enumerate() {
            let mut rec = vec![flat.to_string()];
            rec.extend(grid_point(flat, self.n, self.d).iter().map(|x| format!("{x:e}")));
            rec.push(format!("{v:e}"));
            wr.write_record(&rec).map_err(csv_err)?;
        }
        wr.flush()?;
        Ok(())
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        String::from_utf8(buf).map_err(|e| Error::Format(e.to_string()))
    }

    pub fn parse_csv(text: &str) -> Result<Self> {
        let (meta, body) = match text.split_once('\n') {
            Some((m, b)) if m.starts_with('#') => (m, b),
            _ => return fmt_err("missing '# d=.. n=.. dt=.. seed=..' line"),
        };
        let (mut d, mut n, mut dt, mut seed) = (None, None, None, None);
        for tok in meta.trim_start_matches('#').split_whitespace() {
            let (k, v) = tok.split_once('=').ok_or_else(|| Error::Format(format!("bad metadata token {tok:?}")))?;
            let bad = |_| Error::Format(format!("bad value for {k}: {v:?}"));
            match k {
                "d" => d = Some(v.parse::<usize>().map_err(|e| bad(e.to_string()))?),
                "n" => n = Some(v.parse::<usize>().map_err(|e| bad(e.to_string()))?),
                "dt" => dt = Some(v.parse::<f64>().map_err(|e| bad(e.to_string()))?),
                "seed" => seed = Some(v.parse::<u64>().map_err(|e| bad(e.to_string()))?),
                _ => return fmt_err(format!("unknown metadata key {k:?}")),
            }
        }
        let (Some(d), Some(n), Some(dt), Some(seed)) = (d, n, dt, seed) else {
            return fmt_err("metadata needs d, n, dt and seed");
        };
        let count = value_count(d, n)?;
        let mut rd = csv::ReaderBuilder::new().has_headers(true).from_reader(body.as_bytes());
        let ncol = d + 2;
        if rd.headers().map_err(csv_err)?.len() != ncol {
            return fmt_err(format!("expected {ncol} columns"));
        }
        let mut values = Vec::with_capacity(count.min(1 << 16));
        for (i, rec) in rd.records().enumerate() {
            let rec = rec.map_err(csv_err)?;
            if rec.len() != ncol {
                return fmt_err(format!("row {i}: expected {ncol} columns"));
            }
            let flat: usize = rec[0].trim().parse().map_err(|_| Error::Format(format!("row {i}: bad index")))?;
            if flat != i || i >= count {
                return fmt_err(format!("row {i}: index {flat} out of order or out of range"));
            }
            let v: f64 = rec[ncol - 1].trim().parse().map_err(|_| Error::Format(format!("row {i}: bad value")))?;
            values.push(v);
        }
        Self::new(d, n, dt, seed, values)
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Format(e.to_string())
}

/// Comma-separated numbers, or `start:stop:count` for an inclusive linear range.
pub fn parse_value_list(s: &str) -> Result<Vec<f64>> {
    let s = s.trim();
    if s.is_empty() {
        return fmt_err("empty value list");
    }
    let num = |t: &str| -> Result<f64> {
        let v: f64 = t.trim().parse().map_err(|_| Error::Format(format!("not a number: {t:?}")))?;
        if v.is_finite() {
            Ok(v)
        } else {
            fmt_err(format!("not finite: {t:?}"))
        }
    };
    if s.contains(':') {
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 3 {
            return fmt_err(format!("range must be start:stop:count, got {s:?}"));
        }
        let (a, b) = (num(parts[0])?, num(parts[1])?);
        let c: usize = parts[2].trim().parse().map_err(|_| Error::Format(format!("bad count in {s:?}")))?;
        if c == 0 || c > 1_000_000 {
            return fmt_err(format!("range count must be in 1..=1e6, got {c}"));
        }
        if c == 1 {
            return Ok(vec![a]);
        }
        return Ok((0..c).map(|i| a + (b - a) * i as f64 / (c - 1) as f64).collect());
    }
    s.split(',').map(num).collect()
}

/// Points of the d-torus: `x1,x2;y1,y2`. With d = 1 a plain list `a,b,c` is three points.
pub fn parse_points(s: &str, d: usize) -> Result<Vec<Vec<f64>>> {
    if d == 0 {
        return fmt_err("dimension must be >= 1");
    }
    if d == 1 && !s.contains(';') {
        return Ok(parse_value_list(s)?.into_iter().map(|v| vec![v]).collect());
    }
    s.split(';')
        .map(|p| {
            let v = parse_value_list(p)?;
            if v.len() != d {
                return fmt_err(format!("point {p:?} has {} coordinates, expected {d}", v.len()));
            }
            Ok(v)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binary_header_layout() {
        let f = FieldFile::new(1, 2, 0.5, 7, vec![1.0, -2.0]).unwrap();
        let b = f.encode();
        assert_eq!(b.len(), HEADER_LEN + 16);
        assert_eq!(&b[0..4], &[1, 0, 0, 0]);
        assert_eq!(&b[4..8], &[2, 0, 0, 0]);
        assert_eq!(&b[8..16], &0.5f64.to_le_bytes());
        assert_eq!(&b[16..24], &[7, 0, 0, 0, 0, 0, 0, 0]);
        assert_eq!(FieldFile::decode(&b).unwrap(), f);
    }

    #[test]
    fn decode_rejects_bad_lengths() {
        let b = FieldFile::new(2, 3, 0.1, 1, vec![0.0; 9]).unwrap().encode();
        assert!(FieldFile::decode(&b[..b.len() - 1]).is_err());
        assert!(FieldFile::decode(&b[..10]).is_err());
        let mut huge = b.clone();
        huge[4..8].copy_from_slice(&u32::MAX.to_le_bytes());
        assert!(FieldFile::decode(&huge).is_err());
    }

    #[test]
    fn csv_roundtrip() {
        let f = FieldFile::new(2, 3, 1e-3, 99, (0..9).map(|i| i as f64 * 0.1 - 0.3).collect()).unwrap();
        let text = f.to_csv().unwrap();
        assert!(text.starts_with("# d=2 n=3"));
        assert_eq!(FieldFile::parse_csv(&text).unwrap(), f);
    }

    #[test]
    fn value_lists() {
        assert_eq!(parse_value_list("0.1, 1,10").unwrap(), vec![0.1, 1.0, 10.0]);
        assert_eq!(parse_value_list("0:1:3").unwrap(), vec![0.0, 0.5, 1.0]);
        assert!(parse_value_list("1,,2").is_err());
        assert!(parse_value_list("nan").is_err());
        assert!(parse_value_list("0:1").is_err());
    }

    #[test]
    fn point_lists() {
        assert_eq!(parse_points("0.1,0.2", 1).unwrap(), vec![vec![0.1], vec![0.2]]);
        assert_eq!(parse_points("0,1;2,3", 2).unwrap(), vec![vec![0.0, 1.0], vec![2.0, 3.0]]);
        assert!(parse_points("0,1,2", 2).is_err());
    }
}
