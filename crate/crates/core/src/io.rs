//! Matrix and report files.
//!
//! * CSV: one image row per line, comma separated, every value written with
//!   nine significant digits (C `%.9g`).
//! * PGM: binary `P5`, 8- or 16-bit. Temperatures are mapped linearly onto
//!   `0..=maxval`; the mapping is stored next to the image in
//!   `<file>.json` so it can be read back in physical units.
//! * JSON for everything else.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{de::DeserializeOwned, Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::segmentation::SegmentationMask;
use crate::signal::{GridImage, Unit};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ImageFormat {
    Csv,
    Pgm,
}

impl ImageFormat {
    pub fn from_path(path: &Path) -> Result<Self> {
        match path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase).as_deref() {
            Some("csv") => Ok(ImageFormat::Csv),
            Some("pgm") => Ok(ImageFormat::Pgm),
            _ => Err(Error::invalid(format!(
                "cannot tell the image format of {} (expected .csv or .pgm)",
                path.display()
            ))),
        }
    }
}

/// `%.9g`.
pub fn format_g9(v: f64) -> String {
    const DIGITS: i32 = 9;
    if v == 0.0 {
        return if v.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    if !v.is_finite() {
        return v.to_string();
    }
    let sci = format!("{:.*e}", (DIGITS - 1) as usize, v);
    let (mantissa, exp) = sci.split_once('e').expect("exponent in {:e} output");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-4..DIGITS).contains(&exp) {
        let fixed = format!("{:.*}", (DIGITS - 1 - exp) as usize, v);
        strip_zeros(&fixed).to_string()
    } else {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", strip_zeros(mantissa), exp.abs())
    }
}

fn strip_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn parse_csv(text: &str, unit: Unit, context: &str) -> Result<GridImage> {
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let row = line
            .split(|c: char| c == ',' || c == ';' || c.is_whitespace())
            .filter(|s| !s.is_empty())
            .map(|s| {
                s.parse::<f64>()
                    .map_err(|e| Error::parse(format!("{context} line {}", i + 1), format!("`{s}`: {e}")))
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::parse(context, "no numeric rows"));
    }
    GridImage::from_rows(&rows, unit)
}

pub fn to_csv(img: &GridImage) -> String {
    let mut out = String::with_capacity(img.values().len() * 12);
    for r in 0..img.rows() {
        let line: Vec<String> = img.row(r).iter().map(|&v| format_g9(v)).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    out
}

/// Linear map between stored gray levels and sample values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PgmScale {
    pub maxval: u16,
    /// Value of gray level 0.
    pub min: f64,
    /// Value of gray level `maxval`.
    pub max: f64,
    pub unit: Unit,
}

impl PgmScale {
    fn level_of(&self, v: f64) -> u16 {
        if self.max == self.min {
            return 0;
        }
        let t = ((v - self.min) / (self.max - self.min)).clamp(0.0, 1.0);
        (t * f64::from(self.maxval)).round() as u16
    }

    fn value_of(&self, level: u16) -> f64 {
        self.min + (self.max - self.min) * f64::from(level) / f64::from(self.maxval)
    }
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

fn encode_pgm(rows: usize, cols: usize, maxval: u16, levels: impl Iterator<Item = u16>) -> Vec<u8> {
    let mut out = format!("P5\n{cols} {rows}\n{maxval}\n").into_bytes();
    for l in levels {
        if maxval < 256 {
            out.push(l as u8);
        } else {
            out.extend_from_slice(&l.to_be_bytes());
        }
    }
    out
}

struct Pgm {
    rows: usize,
    cols: usize,
    maxval: u16,
    levels: Vec<u16>,
}

fn decode_pgm(bytes: &[u8], context: &str) -> Result<Pgm> {
    let bad = |m: &str| Error::parse(context, m.to_string());
    let mut pos = 0;
    let mut token = || -> Result<String> {
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
            return Err(bad("truncated header"));
        }
        Ok(String::from_utf8_lossy(&bytes[start..pos]).into_owned())
    };
    let magic = token()?;
    let num = |s: String| s.parse::<usize>().map_err(|_| bad(&format!("bad header field `{s}`")));
    let cols = num(token()?)?;
    let rows = num(token()?)?;
    let maxval = num(token()?)?;
    if !(1..=65535).contains(&maxval) {
        return Err(bad("maxval must be in 1..=65535"));
    }
    let maxval = maxval as u16;
    let count = rows * cols;
    let levels: Vec<u16> = match magic.as_str() {
        "P5" => {
            let data = &bytes[(pos + 1).min(bytes.len())..];
            let width = if maxval < 256 { 1 } else { 2 };
            if data.len() < count * width {
                return Err(bad(&format!("expected {} data bytes, found {}", count * width, data.len())));
            }
            if width == 1 {
                data[..count].iter().map(|&b| u16::from(b)).collect()
            } else {
                data[..2 * count].chunks_exact(2).map(|c| u16::from_be_bytes([c[0], c[1]])).collect()
            }
        }
        "P2" => {
            let text = String::from_utf8_lossy(&bytes[pos..]);
            let levels = text
                .split_whitespace()
                .take(count)
                .map(|s| s.parse::<u16>().map_err(|_| bad(&format!("bad sample `{s}`"))))
                .collect::<Result<Vec<u16>>>()?;
            if levels.len() != count {
                return Err(bad("too few samples"));
            }
            levels
        }
        other => return Err(bad(&format!("unsupported magic `{other}` (expected P5 or P2)"))),
    };
    if let Some(l) = levels.iter().find(|&&l| l > maxval) {
        return Err(bad(&format!("sample {l} exceeds maxval {maxval}")));
    }
    Ok(Pgm { rows, cols, maxval, levels })
}

/// Write `img` as a 16-bit PGM plus its value-scale sidecar.
pub fn write_pgm(path: &Path, img: &GridImage) -> Result<()> {
    let scale = PgmScale {
        maxval: u16::MAX,
        min: img.min(),
        max: img.max(),
        unit: img.unit(),
    };
    let bytes = encode_pgm(img.rows(), img.cols(), scale.maxval, img.values().iter().map(|&v| scale.level_of(v)));
    write_bytes(path, &bytes)?;
    write_json(&sidecar_path(path), &scale)
}

/// Read a PGM. With a sidecar, levels are mapped back to its units;
/// otherwise the raw gray levels are returned as [`Unit::GrayLevel`].
pub fn read_pgm(path: &Path) -> Result<GridImage> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let pgm = decode_pgm(&bytes, &path.display().to_string())?;
    let side = sidecar_path(path);
    if side.exists() {
        let scale: PgmScale = read_json(&side)?;
        if scale.maxval != pgm.maxval {
            return Err(Error::parse(
                side.display().to_string(),
                format!("sidecar maxval {} does not match image maxval {}", scale.maxval, pgm.maxval),
            ));
        }
        let vals = pgm.levels.iter().map(|&l| scale.value_of(l)).collect();
        let img = GridImage::new(pgm.rows, pgm.cols, vals, scale.unit)?;
        // Nothing finer than one stored level is resolved.
        let step = (scale.max - scale.min) / f64::from(scale.maxval);
        return img.with_resolution(step.max(scale.unit.default_resolution()));
    }
    let vals = pgm.levels.iter().map(|&l| f64::from(l)).collect();
    GridImage::new(pgm.rows, pgm.cols, vals, Unit::GrayLevel)
}

/// 8-bit mask: 255 for the bridge area, 0 elsewhere.
pub fn write_mask_pgm(path: &Path, mask: &SegmentationMask) -> Result<()> {
    let levels = mask.as_slice().iter().map(|&b| if b { 255 } else { 0 });
    write_bytes(path, &encode_pgm(mask.rows(), mask.cols(), 255, levels))
}

pub fn read_mask_pgm(path: &Path) -> Result<SegmentationMask> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let pgm = decode_pgm(&bytes, &path.display().to_string())?;
    let half = pgm.maxval / 2;
    SegmentationMask::new(pgm.rows, pgm.cols, pgm.levels.iter().map(|&l| l > half).collect())
}

/// Read by extension. `unit` applies to CSV input; PGM units come from the sidecar.
pub fn read_image(path: &Path, unit: Unit) -> Result<GridImage> {
    match ImageFormat::from_path(path)? {
        ImageFormat::Csv => parse_csv(&read_text(path)?, unit, &path.display().to_string()),
        ImageFormat::Pgm => read_pgm(path),
    }
}

pub fn write_image(path: &Path, img: &GridImage) -> Result<()> {
    match ImageFormat::from_path(path)? {
        ImageFormat::Csv => write_bytes(path, to_csv(img).as_bytes()),
        ImageFormat::Pgm => write_pgm(path, img),
    }
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| Error::parse(path.display().to_string(), e.to_string()))?;
    text.push('\n');
    write_bytes(path, text.as_bytes())
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    serde_json::from_str(&read_text(path)?).map_err(|e| Error::parse(path.display().to_string(), e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn g9_formatting() {
        let cases = [
            (0.0, "0"),
            (1.0, "1"),
            (21.5, "21.5"),
            (-3.25, "-3.25"),
            (1.0 / 3.0, "0.333333333"),
            (123456789.0, "123456789"),
            (1234567890.0, "1.23456789e+09"),
            (0.0001, "0.0001"),
            (0.00001234, "1.234e-05"),
            (2.0f64.sqrt(), "1.41421356"),
            (99999999.95, "100000000"),
        ];
        for (v, want) in cases {
            assert_eq!(format_g9(v), want, "{v}");
        }
    }

    #[test]
    fn g9_round_trip_precision() {
        for i in 1..2000 {
            let v = (i as f64).powf(1.7) * 1e-3 - 3.0;
            let back: f64 = format_g9(v).parse().unwrap();
            assert!((back - v).abs() <= 5e-9 * v.abs().max(1e-300), "{v}");
        }
    }

    #[test]
    fn csv_round_trip() {
        let img = GridImage::from_rows(&[vec![20.125, 21.0], vec![-1e-7, 3.0]], Unit::Celsius).unwrap();
        let back = parse_csv(&to_csv(&img), Unit::Celsius, "t").unwrap();
        assert_eq!(back, img);
    }

    #[test]
    fn csv_errors() {
        assert!(matches!(parse_csv("1,2\n3,x\n", Unit::Celsius, "t"), Err(Error::Parse { .. })));
        assert!(parse_csv("1,2\n3\n", Unit::Celsius, "t").is_err());
        assert!(parse_csv("# only a comment\n", Unit::Celsius, "t").is_err());
    }

    #[test]
    fn pgm_round_trip_with_sidecar() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.pgm");
        let vals: Vec<f64> = (0..12).map(|i| 18.0 + 0.5 * i as f64).collect();
        let img = GridImage::new(3, 4, vals.clone(), Unit::Celsius).unwrap();
        write_image(&path, &img).unwrap();
        assert!(sidecar_path(&path).exists());
        let back = read_image(&path, Unit::GrayLevel).unwrap();
        assert_eq!((back.rows(), back.cols(), back.unit()), (3, 4, Unit::Celsius));
        let step = 5.5 / 65535.0;
        for (a, b) in back.values().iter().zip(&vals) {
            assert!((a - b).abs() <= step);
        }
    }

    #[test]
    fn pgm_without_sidecar_is_gray_levels() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("g.pgm");
        fs::write(&path, b"P5\n# comment\n3 2\n255\n\x00\x01\x02\x03\x04\xff").unwrap();
        let img = read_image(&path, Unit::Celsius).unwrap();
        assert_eq!((img.rows(), img.cols(), img.unit()), (2, 3, Unit::GrayLevel));
        assert_eq!(img.values(), &[0.0, 1.0, 2.0, 3.0, 4.0, 255.0]);
        fs::write(&path, b"P2\n2 1\n9\n3 9\n").unwrap();
        assert_eq!(read_image(&path, Unit::Celsius).unwrap().values(), &[3.0, 9.0]);
        fs::write(&path, b"P5\n3 2\n255\n\x00").unwrap();
        assert!(read_image(&path, Unit::Celsius).is_err());
    }

    #[test]
    fn mask_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.pgm");
        let mask = SegmentationMask::new(2, 2, vec![true, false, false, true]).unwrap();
        write_mask_pgm(&path, &mask).unwrap();
        assert_eq!(read_mask_pgm(&path).unwrap(), mask);
    }

    #[test]
    fn unknown_extension_and_missing_file() {
        assert!(ImageFormat::from_path(Path::new("a.tiff")).is_err());
        let err = read_image(Path::new("/definitely/missing.csv"), Unit::Celsius).unwrap_err();
        assert!(matches!(err, Error::Io { .. }));
    }
}
