//! File formats: PGM images (P2 ASCII / P5 binary), RAW3D volumes, dense
//! numeric CSV, and SVM datasets.
//!
//! RAW3D is an ASCII header line `RAW3D nx ny nz` followed by `nx·ny·nz`
//! little-endian `f32` values, x fastest.

use std::fs;
use std::io::Write;
use std::path::Path;

use nalgebra::{DMatrix, DVector};

use super::svm::SvmDataset;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GrayImage {
    pub width: usize,
    pub height: usize,
    pub maxval: u16,
    /// Row-major, top row first.
    pub pixels: Vec<u16>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, maxval: u16, pixels: Vec<u16>) -> Result<Self> {
        if width == 0 || height == 0 || maxval == 0 {
            return Err(Error::InvalidData("PGM dimensions and maxval must be positive".into()));
        }
        if pixels.len() != width * height {
            return Err(Error::InvalidData(format!(
                "{} pixels for a {width}x{height} image",
                pixels.len()
            )));
        }
        if let Some(p) = pixels.iter().find(|p| **p > maxval) {
            return Err(Error::InvalidData(format!("pixel {p} exceeds maxval {maxval}")));
        }
        Ok(Self { width, height, maxval, pixels })
    }

    /// Intensities scaled to `[0, 1]`.
    pub fn to_unit(&self) -> Vec<f64> {
        self.pixels.iter().map(|&p| f64::from(p) / f64::from(self.maxval)).collect()
    }

    /// Quantizes values in `[0, 1]` (clamped) to `0..=maxval`.
    pub fn from_unit(width: usize, height: usize, maxval: u16, values: &[f64]) -> Result<Self> {
        let pixels = values
            .iter()
            .map(|v| (v.clamp(0.0, 1.0) * f64::from(maxval)).round() as u16)
            .collect();
        Self::new(width, height, maxval, pixels)
    }
}

fn format_err(format: &'static str, path: &Path, reason: impl Into<String>) -> Error {
    Error::Format {
        format,
        path: path.to_path_buf(),
        reason: reason.into(),
    }
}

pub fn read_pgm(path: impl AsRef<Path>) -> Result<GrayImage> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    parse_pgm(&bytes).map_err(|reason| format_err("PGM", path, reason))
}

fn parse_pgm(bytes: &[u8]) -> std::result::Result<GrayImage, String> {
    let mut pos = 0;
    let mut token = || -> std::result::Result<String, String> {
        loop {
            while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if pos < bytes.len() && bytes[pos] == b'#' {
                while pos < bytes.len() && bytes[pos] != b'\n' {
                    pos += 1;
                }
                continue;
            }
            break;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err("unexpected end of file".into());
        }
        Ok(String::from_utf8_lossy(&bytes[start..pos]).into_owned())
    };
    let magic = token()?;
    let number = |t: String, what: &str| t.parse::<usize>().map_err(|_| format!("bad {what} `{t}`"));
    let width = number(token()?, "width")?;
    let height = number(token()?, "height")?;
    let maxval = number(token()?, "maxval")?;
    if maxval == 0 || maxval > 65535 {
        return Err(format!("maxval {maxval} outside 1..=65535"));
    }
    let count = width * height;
    let pixels = match magic.as_str() {
        "P2" => (0..count)
            .map(|_| token().and_then(|t| t.parse::<u16>().map_err(|_| format!("bad pixel `{t}`"))))
            .collect::<std::result::Result<Vec<_>, _>>()?,
        "P5" => {
            // exactly one whitespace byte separates the header from the raster
            let start = pos + 1;
            let wide = maxval > 255;
            let need = count * if wide { 2 } else { 1 };
            let raster = bytes
                .get(start..start + need)
                .ok_or_else(|| format!("raster truncated: need {need} bytes"))?;
            if wide {
                raster.chunks_exact(2).map(|c| u16::from_be_bytes([c[0], c[1]])).collect()
            } else {
                raster.iter().map(|&b| u16::from(b)).collect()
            }
        }
        other => return Err(format!("unsupported magic `{other}`")),
    };
    GrayImage::new(width, height, maxval as u16, pixels).map_err(|e| e.to_string())
}

pub fn write_pgm(path: impl AsRef<Path>, image: &GrayImage, binary: bool) -> Result<()> {
    let path = path.as_ref();
    let mut out = Vec::new();
    let magic = if binary { "P5" } else { "P2" };
    writeln!(out, "{magic}\n{} {}\n{}", image.width, image.height, image.maxval).expect("write to Vec");
    if binary {
        for &p in &image.pixels {
            if image.maxval > 255 {
                out.extend_from_slice(&p.to_be_bytes());
            } else {
                out.push(p as u8);
            }
        }
    } else {
        for row in image.pixels.chunks(image.width) {
            let line: Vec<String> = row.iter().map(u16::to_string).collect();
            writeln!(out, "{}", line.join(" ")).expect("write to Vec");
        }
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// A scalar volume, x fastest then y then z.
#[derive(Clone, Debug, PartialEq)]
pub struct Volume {
    pub dims: [usize; 3],
    pub data: Vec<f32>,
}

pub fn read_raw3d(path: impl AsRef<Path>) -> Result<Volume> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let newline = bytes
        .iter()
        .position(|&b| b == b'\n')
        .ok_or_else(|| format_err("RAW3D", path, "missing header line"))?;
    let header = String::from_utf8_lossy(&bytes[..newline]);
    let fields: Vec<&str> = header.split_whitespace().collect();
    if fields.len() != 4 || fields[0] != "RAW3D" {
        return Err(format_err("RAW3D", path, format!("bad header `{header}`")));
    }
    let mut dims = [0usize; 3];
    for (d, f) in dims.iter_mut().zip(&fields[1..]) {
        *d = f
            .parse()
            .ok()
            .filter(|v| *v > 0)
            .ok_or_else(|| format_err("RAW3D", path, format!("bad dimension `{f}`")))?;
    }
    let body = &bytes[newline + 1..];
    let count = dims.iter().product::<usize>();
    if body.len() != 4 * count {
        return Err(format_err(
            "RAW3D",
            path,
            format!("expected {} data bytes, found {}", 4 * count, body.len()),
        ));
    }
    let data = body
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect();
    Ok(Volume { dims, data })
}

pub fn write_raw3d(path: impl AsRef<Path>, volume: &Volume) -> Result<()> {
    let path = path.as_ref();
    if volume.data.len() != volume.dims.iter().product::<usize>() {
        return Err(Error::InvalidData("volume data does not match its dimensions".into()));
    }
    let [nx, ny, nz] = volume.dims;
    let mut out = format!("RAW3D {nx} {ny} {nz}\n").into_bytes();
    for v in &volume.data {
        out.extend_from_slice(&v.to_le_bytes());
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

fn open(path: &Path) -> Result<fs::File> {
    fs::File::open(path).map_err(|e| Error::io(path, e))
}

fn read_numeric_rows(path: &Path) -> Result<Vec<Vec<f64>>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(open(path)?);
    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        let row = record
            .iter()
            .map(|f| f.parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| format_err("CSV", path, format!("line {}: {e}", i + 1)))?;
        rows.push(row);
    }
    Ok(rows)
}

/// Dense matrix, one row per line, no header.
pub fn read_matrix_csv(path: impl AsRef<Path>) -> Result<DMatrix<f64>> {
    let path = path.as_ref();
    let rows = read_numeric_rows(path)?;
    let ncols = rows.first().map_or(0, Vec::len);
    if rows.is_empty() || ncols == 0 {
        return Err(format_err("CSV", path, "empty matrix"));
    }
    if let Some(i) = rows.iter().position(|r| r.len() != ncols) {
        return Err(format_err("CSV", path, format!("line {} has {} fields, expected {ncols}", i + 1, rows[i].len())));
    }
    Ok(DMatrix::from_row_iterator(rows.len(), ncols, rows.into_iter().flatten()))
}

/// Dense vector written either as one column or as one row.
pub fn read_vector_csv(path: impl AsRef<Path>) -> Result<DVector<f64>> {
    let path = path.as_ref();
    let rows = read_numeric_rows(path)?;
    let values: Vec<f64> = match rows.as_slice() {
        [] => Vec::new(),
        [single] => single.clone(),
        many if many.iter().all(|r| r.len() == 1) => many.iter().map(|r| r[0]).collect(),
        _ => return Err(format_err("CSV", path, "expected a single row or a single column")),
    };
    if values.is_empty() {
        return Err(format_err("CSV", path, "empty vector"));
    }
    Ok(DVector::from_vec(values))
}

/// Columns `f1..fn,label` with a header row.
pub fn read_svm_csv(path: impl AsRef<Path>) -> Result<SvmDataset> {
    let path = path.as_ref();
    let mut reader = csv::Reader::from_reader(open(path)?);
    let header = reader.headers()?.clone();
    let n = header.len().saturating_sub(1);
    let expected: Vec<String> = (1..=n).map(|i| format!("f{i}")).chain(["label".to_string()]).collect();
    if n == 0 || header.iter().ne(expected.iter().map(String::as_str)) {
        return Err(format_err("SVM CSV", path, format!("header must be f1..fn,label, got {:?}", header)));
    }
    let mut points = Vec::new();
    let mut labels = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        let values = record
            .iter()
            .map(|f| f.trim().parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| format_err("SVM CSV", path, format!("row {}: {e}", i + 1)))?;
        if values.len() != n + 1 {
            return Err(format_err("SVM CSV", path, format!("row {} has {} fields", i + 1, values.len())));
        }
        labels.push(values[n]);
        points.push(values[..n].to_vec());
    }
    SvmDataset::new(points, labels)
}

pub fn write_svm_csv(path: impl AsRef<Path>, data: &SvmDataset) -> Result<()> {
    let path = path.as_ref();
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut writer = csv::Writer::from_writer(file);
    let mut header: Vec<String> = (1..=data.dim()).map(|i| format!("f{i}")).collect();
    header.push("label".into());
    writer.write_record(&header)?;
    for (p, y) in data.points().iter().zip(data.labels()) {
        let mut row: Vec<String> = p.iter().map(|v| format!("{v:e}")).collect();
        row.push(format!("{y}"));
        writer.write_record(&row)?;
    }
    writer.flush().map_err(|e| Error::io(path, e))
}
