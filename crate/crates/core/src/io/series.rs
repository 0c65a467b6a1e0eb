//! Series files: a little-endian binary container and a long CSV layout.

use std::collections::HashMap;
use std::fs;
use std::io::{BufReader, Read, Write};
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::series::TensorSeries;
use crate::tensor::check_dims;

pub const MAGIC: &[u8; 4] = b"TFTS";
pub const VERSION: u16 = 1;
const TAG_F64_LE: u8 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeriesFormat {
    Binary,
    Csv,
}

impl FromStr for SeriesFormat {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "binary" | "bin" | "tfts" => Ok(SeriesFormat::Binary),
            "csv" => Ok(SeriesFormat::Csv),
            other => Err(Error::InvalidConfig(format!("unknown series format `{other}`"))),
        }
    }
}

impl SeriesFormat {
    /// Guesses from the file extension, defaulting to binary.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("csv") => SeriesFormat::Csv,
            _ => SeriesFormat::Binary,
        }
    }
}

pub fn write_binary<W: Write>(series: &TensorSeries, mut w: W) -> Result<()> {
    let order = u16::try_from(series.order())
        .map_err(|_| Error::InvalidShape("tensor order exceeds 65535".into()))?;
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&order.to_le_bytes())?;
    for &d in series.dims() {
        w.write_all(&(d as u64).to_le_bytes())?;
    }
    w.write_all(&(series.len() as u64).to_le_bytes())?;
    w.write_all(&[TAG_F64_LE, u8::from(series.mask().is_some())])?;
    let mut buf = Vec::with_capacity(series.data().len() * 8);
    for v in series.data() {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    w.write_all(&buf)?;
    if let Some(mask) = series.mask() {
        let bytes: Vec<u8> = mask.iter().map(|&m| u8::from(m)).collect();
        w.write_all(&bytes)?;
    }
    Ok(())
}

fn read_exact<R: Read, const N: usize>(r: &mut R, what: &str) -> Result<[u8; N]> {
    let mut b = [0u8; N];
    r.read_exact(&mut b)
        .map_err(|_| Error::Parse(format!("truncated header: missing {what}")))?;
    Ok(b)
}

pub fn read_binary<R: Read>(mut r: R) -> Result<TensorSeries> {
    let magic: [u8; 4] = read_exact(&mut r, "magic")?;
    if &magic != MAGIC {
        return Err(Error::Parse("not a TFTS file (bad magic)".into()));
    }
    let version = u16::from_le_bytes(read_exact(&mut r, "version")?);
    if version != VERSION {
        return Err(Error::Parse(format!("unsupported TFTS version {version}")));
    }
    let order = u16::from_le_bytes(read_exact(&mut r, "order")?) as usize;
    let mut dims = Vec::with_capacity(order);
    for _ in 0..order {
        let d = u64::from_le_bytes(read_exact(&mut r, "dimension")?);
        dims.push(usize::try_from(d).map_err(|_| Error::Parse("dimension overflows".into()))?);
    }
    let t = u64::from_le_bytes(read_exact(&mut r, "length")?) as usize;
    let [tag, has_mask] = read_exact::<_, 2>(&mut r, "element tag")?;
    if tag != TAG_F64_LE {
        return Err(Error::Parse(format!("unsupported element tag {tag}")));
    }
    if has_mask > 1 {
        return Err(Error::Parse(format!("invalid mask flag {has_mask}")));
    }
    let p = check_dims(&dims).map_err(|e| Error::Parse(e.to_string()))?;
    let n = p
        .checked_mul(t)
        .ok_or_else(|| Error::Parse("series size overflows".into()))?;
    let mut payload = vec![0u8; n * 8];
    r.read_exact(&mut payload)
        .map_err(|_| Error::Parse(format!("payload shorter than {n} values")))?;
    let data = payload
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect();
    let mut series = TensorSeries::new(dims, t, data)?;
    if has_mask == 1 {
        let mut m = vec![0u8; n];
        r.read_exact(&mut m)
            .map_err(|_| Error::Parse("mask shorter than the payload".into()))?;
        if m.iter().any(|&b| b > 1) {
            return Err(Error::Parse("mask bytes must be 0 or 1".into()));
        }
        series = series.with_mask(m.into_iter().map(|b| b == 1).collect())?;
    }
    let mut extra = [0u8; 1];
    if r.read(&mut extra)? != 0 {
        return Err(Error::Parse("trailing bytes after payload".into()));
    }
    Ok(series)
}

/// Long format: header `t,i1,…,iK,value`, 1-based indices, one row per
/// observed cell. Masked cells are omitted.
pub fn write_csv<W: Write>(series: &TensorSeries, w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let order = series.order();
    let mut header = vec!["t".to_string()];
    header.extend((1..=order).map(|k| format!("i{k}")));
    header.push("value".into());
    out.write_record(&header)?;
    let dims = series.dims();
    let p = series.obs_size();
    let mask = series.mask();
    let mut idx = vec![0usize; order];
    let mut row: Vec<String> = Vec::with_capacity(order + 2);
    for t in 0..series.len() {
        idx.iter_mut().for_each(|i| *i = 0);
        let obs = series.observation(t);
        for (e, v) in obs.iter().enumerate() {
            if mask.is_none_or(|m| m[t * p + e]) {
                row.clear();
                row.push((t + 1).to_string());
                row.extend(idx.iter().map(|i| (i + 1).to_string()));
                row.push(format!("{v:?}"));
                out.write_record(&row)?;
            }
            for (i, &d) in idx.iter_mut().zip(dims) {
                *i += 1;
                if *i < d {
                    break;
                }
                *i = 0;
            }
        }
    }
    out.flush()?;
    Ok(())
}

pub fn read_csv<R: Read>(r: R) -> Result<TensorSeries> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(BufReader::new(r));
    let header = reader.headers()?.clone();
    let cols = header.len();
    let ok_header = cols >= 3
        && &header[0] == "t"
        && &header[cols - 1] == "value"
        && (1..cols - 1).all(|k| header[k] == format!("i{k}"));
    if !ok_header {
        return Err(Error::Parse(
            "CSV header must be `t,i1,...,iK,value`".into(),
        ));
    }
    let order = cols - 2;
    let mut cells: HashMap<Vec<usize>, (f64, u64)> = HashMap::new();
    let mut dims = vec![0usize; order];
    let mut t_len = 0usize;
    for rec in reader.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() != cols {
            return Err(Error::Parse(format!(
                "line {line}: expected {cols} fields, got {}",
                rec.len()
            )));
        }
        let mut key = Vec::with_capacity(order + 1);
        for f in rec.iter().take(cols - 1) {
            let v: usize = f
                .parse()
                .map_err(|_| Error::Parse(format!("line {line}: bad index `{f}`")))?;
            if v == 0 {
                return Err(Error::Parse(format!("line {line}: indices are 1-based")));
            }
            key.push(v - 1);
        }
        let value: f64 = rec[cols - 1]
            .parse()
            .map_err(|_| Error::Parse(format!("line {line}: bad value `{}`", &rec[cols - 1])))?;
        t_len = t_len.max(key[0] + 1);
        for (d, &i) in dims.iter_mut().zip(&key[1..]) {
            *d = (*d).max(i + 1);
        }
        if let Some((_, first)) = cells.insert(key, (value, line)) {
            return Err(Error::Parse(format!(
                "line {line}: duplicate cell (first seen on line {first})"
            )));
        }
    }
    if cells.is_empty() {
        return Err(Error::Parse("CSV has no data rows".into()));
    }
    let p: usize = dims.iter().product();
    let mut data = vec![f64::NAN; p * t_len];
    let mut mask = vec![false; p * t_len];
    for (key, (v, _)) in cells {
        let mut lin = 0;
        for k in (0..order).rev() {
            lin = lin * dims[k] + key[k + 1];
        }
        let at = key[0] * p + lin;
        data[at] = v;
        mask[at] = true;
    }
    let series = TensorSeries::new(dims, t_len, data)?;
    if mask.iter().all(|&m| m) {
        Ok(series)
    } else {
        series.with_mask(mask)
    }
}

pub fn load_series(path: &Path, format: SeriesFormat) -> Result<TensorSeries> {
    let file = fs::File::open(path).map_err(super::with_path(path))?;
    match format {
        SeriesFormat::Binary => read_binary(BufReader::new(file)),
        SeriesFormat::Csv => read_csv(file),
    }
}

pub fn save_series(series: &TensorSeries, path: &Path, format: SeriesFormat) -> Result<()> {
    let mut w = std::io::BufWriter::new(fs::File::create(path).map_err(super::with_path(path))?);
    match format {
        SeriesFormat::Binary => write_binary(series, &mut w)?,
        SeriesFormat::Csv => write_csv(series, &mut w)?,
    }
    w.flush()?;
    Ok(())
}
