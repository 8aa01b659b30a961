//! File formats: the binary field container, 8-bit PGM images, run
//! configuration files, and CSV traces.
//!
//! Field files (`CTVF`) are laid out as
//!
//! | bytes            | content                                    |
//! |------------------|--------------------------------------------|
//! | 0..4             | magic `b"CTVF"`                            |
//! | 4..8             | format version, `u32` LE, always 1         |
//! | 8..12            | rows, `u32` LE                             |
//! | 12..16           | cols, `u32` LE                             |
//! | 16..16+8·r·c     | real part, `f64` LE, row-major             |
//! | ..+8·r·c         | imaginary part, `f64` LE, row-major        |

use std::f64::consts::PI;
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use ndarray::Array2;

use crate::constraint::ConstraintSet;
use crate::denoise::DualMode;
use crate::error::{Error, Result};
use crate::field::ComplexField;
use crate::optics::PropagatorConfig;
use crate::retrieval::{wrap_phase, Algorithm, NoiseModel};
use crate::tv::{TvKind, TvVariant};

pub const FIELD_MAGIC: &[u8; 4] = b"CTVF";
pub const FIELD_VERSION: u32 = 1;
const HEADER_LEN: usize = 16;

/// Serializes a field into the `CTVF` container.
pub fn encode_field(x: &ComplexField) -> Vec<u8> {
    let (m, n) = x.dim();
    let mut out = Vec::with_capacity(HEADER_LEN + 16 * m * n);
    out.extend_from_slice(FIELD_MAGIC);
    out.extend_from_slice(&FIELD_VERSION.to_le_bytes());
    out.extend_from_slice(&(m as u32).to_le_bytes());
    out.extend_from_slice(&(n as u32).to_le_bytes());
    for value in x.u().iter().chain(x.v().iter()) {
        out.extend_from_slice(&value.to_le_bytes());
    }
    out
}

fn read_u32(bytes: &[u8], offset: usize) -> u32 {
    u32::from_le_bytes(bytes[offset..offset + 4].try_into().expect("slice of length 4"))
}

/// Parses a `CTVF` container, rejecting truncated or oversized payloads and
/// non-finite values.
pub fn decode_field(bytes: &[u8]) -> Result<ComplexField> {
    if bytes.len() < HEADER_LEN {
        return Err(Error::Format(format!("field file too short ({} bytes)", bytes.len())));
    }
    if &bytes[..4] != FIELD_MAGIC {
        return Err(Error::Format("bad magic, expected CTVF".into()));
    }
    let version = read_u32(bytes, 4);
    if version != FIELD_VERSION {
        return Err(Error::Format(format!("unsupported version {version}")));
    }
    let rows = read_u32(bytes, 8) as usize;
    let cols = read_u32(bytes, 12) as usize;
    if rows == 0 || cols == 0 {
        return Err(Error::Format(format!("empty field ({rows}×{cols})")));
    }
    let count = rows
        .checked_mul(cols)
        .ok_or_else(|| Error::Format("dimensions overflow".into()))?;
    let expected = count
        .checked_mul(16)
        .and_then(|p| p.checked_add(HEADER_LEN))
        .ok_or_else(|| Error::Format("dimensions overflow".into()))?;
    if bytes.len() != expected {
        return Err(Error::Format(format!(
            "payload size mismatch: expected {expected} bytes for {rows}×{cols}, found {}",
            bytes.len()
        )));
    }
    let values: Vec<f64> = bytes[HEADER_LEN..]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of length 8")))
        .collect();
    if !values.iter().all(|v| v.is_finite()) {
        return Err(Error::Format("non-finite value in payload".into()));
    }
    let (re, im) = values.split_at(count);
    let u = Array2::from_shape_vec((rows, cols), re.to_vec()).expect("length checked");
    let v = Array2::from_shape_vec((rows, cols), im.to_vec()).expect("length checked");
    ComplexField::new(u, v)
}

pub fn read_field(path: impl AsRef<std::path::Path>) -> Result<ComplexField> {
    decode_field(&std::fs::read(path)?)
}

pub fn write_field(path: impl AsRef<std::path::Path>, x: &ComplexField) -> Result<()> {
    std::fs::write(path, encode_field(x))?;
    Ok(())
}

/// Whether `bytes` start with the field-file magic.
pub fn is_field_file(bytes: &[u8]) -> bool {
    bytes.starts_with(FIELD_MAGIC)
}

/// Encodes an 8-bit binary PGM (P5).
pub fn encode_pgm(image: &Array2<u8>) -> Vec<u8> {
    let (m, n) = image.dim();
    let mut out = format!("P5\n{n} {m}\n255\n").into_bytes();
    out.extend(image.iter().copied());
    out
}

/// Decodes a binary PGM with `maxval ≤ 255`. Header comments are skipped.
pub fn decode_pgm(bytes: &[u8]) -> Result<Array2<u8>> {
    let mut pos = 0;
    let mut tokens = Vec::with_capacity(4);
    while tokens.len() < 4 {
        while pos < bytes.len() && (bytes[pos].is_ascii_whitespace() || bytes[pos] == b'#') {
            if bytes[pos] == b'#' {
                while pos < bytes.len() && bytes[pos] != b'\n' {
                    pos += 1;
                }
            } else {
                pos += 1;
            }
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(Error::Format("truncated PGM header".into()));
        }
        tokens.push(String::from_utf8_lossy(&bytes[start..pos]).into_owned());
    }
    if tokens[0] != "P5" {
        return Err(Error::Format(format!("expected binary PGM (P5), found `{}`", tokens[0])));
    }
    let parse = |s: &str, what: &str| -> Result<usize> {
        s.parse()
            .map_err(|_| Error::Format(format!("invalid PGM {what} `{s}`")))
    };
    let cols = parse(&tokens[1], "width")?;
    let rows = parse(&tokens[2], "height")?;
    let maxval = parse(&tokens[3], "maxval")?;
    if rows == 0 || cols == 0 {
        return Err(Error::Format("empty PGM image".into()));
    }
    if maxval == 0 || maxval > 255 {
        return Err(Error::Format(format!("unsupported PGM maxval {maxval}")));
    }
    // exactly one whitespace byte separates the header from the raster
    pos += 1;
    let raster = bytes.get(pos..).unwrap_or_default();
    if raster.len() != rows * cols {
        return Err(Error::Format(format!(
            "PGM raster size mismatch: expected {} bytes, found {}",
            rows * cols,
            raster.len()
        )));
    }
    Ok(Array2::from_shape_vec((rows, cols), raster.to_vec()).expect("length checked"))
}

/// Unit-modulus object whose phase is `π·pixel/255`.
pub fn phase_object_from_image(image: &Array2<u8>) -> ComplexField {
    let phase = image.mapv(|p| PI * f64::from(p) / 255.0);
    ComplexField::unit_phase(&phase).expect("finite phase")
}

/// Quantizes `[0, 1]` values to 8 bits.
pub fn quantize_unit(image: &Array2<f64>) -> Array2<u8> {
    image.mapv(|v| (v.clamp(0.0, 1.0) * 255.0).round() as u8)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Channel {
    Phase,
    Magnitude,
    Real,
    Imag,
}

impl FromStr for Channel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "phase" => Ok(Channel::Phase),
            "magnitude" => Ok(Channel::Magnitude),
            "real" => Ok(Channel::Real),
            "imag" => Ok(Channel::Imag),
            other => Err(Error::invalid(format!("unknown channel `{other}`"))),
        }
    }
}

/// Renders one channel of a field as an 8-bit image and returns the value
/// range mapped onto `0..=255`.
///
/// Phase is wrapped into `(−π, π]` and mapped linearly from that interval;
/// the other channels are min–max scaled (a constant channel maps to 0).
pub fn render_channel(x: &ComplexField, channel: Channel) -> (Array2<u8>, f64, f64) {
    let values = match channel {
        Channel::Phase => x.phase().mapv(wrap_phase),
        Channel::Magnitude => x.modulus(),
        Channel::Real => x.u().clone(),
        Channel::Imag => x.v().clone(),
    };
    let (lo, hi) = match channel {
        Channel::Phase => (-PI, PI),
        _ => values
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v))),
    };
    let span = hi - lo;
    let image = values.mapv(|v| {
        if span > 0.0 {
            ((v - lo) / span * 255.0).round().clamp(0.0, 255.0) as u8
        } else {
            0
        }
    });
    (image, lo, hi)
}

/// Writes the `iter,objective,rmse` trace; the rmse column is left empty
/// when no values are available.
pub fn write_trace_csv(mut out: impl Write, objective: &[f64], rmse: &[f64]) -> Result<()> {
    writeln!(out, "iter,objective,rmse")?;
    for (k, obj) in objective.iter().enumerate() {
        match rmse.get(k) {
            Some(r) => writeln!(out, "{k},{obj:e},{r:e}")?,
            None => writeln!(out, "{k},{obj:e},")?,
        }
    }
    Ok(())
}

/// Algorithm selector accepted in config files; retrieval and denoising
/// commands each accept a subset.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AlgorithmChoice {
    Retrieval(Algorithm),
    Dual(DualMode),
}

impl FromStr for AlgorithmChoice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        s.parse::<Algorithm>()
            .map(AlgorithmChoice::Retrieval)
            .or_else(|_| s.parse::<DualMode>().map(AlgorithmChoice::Dual))
            .map_err(|_| Error::invalid(format!("unknown algorithm `{s}`")))
    }
}

impl fmt::Display for AlgorithmChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AlgorithmChoice::Retrieval(a) => a.fmt(f),
            AlgorithmChoice::Dual(m) => m.fmt(f),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NoiseKind {
    #[default]
    None,
    Intensity,
    Phase,
}

impl FromStr for NoiseKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(NoiseKind::None),
            "intensity" => Ok(NoiseKind::Intensity),
            "phase" => Ok(NoiseKind::Phase),
            other => Err(Error::invalid(format!("unknown noise kind `{other}`"))),
        }
    }
}

/// Parsed `key = value` run configuration. Every key is optional.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub wavelength_m: f64,
    pub distance_m: f64,
    pub pixel_pitch_m: f64,
    pub tv_variant: TvKind,
    pub alpha: f64,
    pub tau: f64,
    pub lambda: f64,
    pub outer_iters: usize,
    pub inner_iters: usize,
    pub constraint: ConstraintSet,
    /// `None` lets each command pick its own default.
    pub algorithm: Option<AlgorithmChoice>,
    pub noise_kind: NoiseKind,
    /// Relative intensity noise, or phase noise in radians.
    pub noise_level: f64,
    pub seed: u64,
    pub warm_start: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            wavelength_m: 500e-9,
            distance_m: 5e-3,
            pixel_pitch_m: 5e-6,
            tv_variant: TvKind::Type1Anisotropic,
            alpha: 0.5,
            tau: 3e-3,
            lambda: 0.2,
            outer_iters: 150,
            inner_iters: 10,
            constraint: ConstraintSet::UnitDisk,
            algorithm: None,
            noise_kind: NoiseKind::None,
            noise_level: 0.0,
            seed: 0,
            warm_start: true,
        }
    }
}

pub const CONFIG_KEYS: [&str; 15] = [
    "wavelength_m",
    "distance_m",
    "pixel_pitch_m",
    "tv_variant",
    "alpha",
    "tau",
    "lambda",
    "outer_iters",
    "inner_iters",
    "constraint",
    "algorithm",
    "noise_kind",
    "noise_level",
    "seed",
    "warm_start",
];

fn parse_value<T: FromStr>(value: &str, line: usize, key: &str) -> Result<T> {
    value.parse().map_err(|_| Error::Config {
        line,
        message: format!("invalid value `{value}` for `{key}`"),
    })
}

fn parse_positive(value: &str, line: usize, key: &str) -> Result<f64> {
    let v: f64 = parse_value(value, line, key)?;
    if !(v.is_finite() && v > 0.0) {
        return Err(Error::Config {
            line,
            message: format!("`{key}` must be positive and finite, got {value}"),
        });
    }
    Ok(v)
}

impl RunConfig {
    /// Parses config text. Blank lines and lines starting with `#` are
    /// ignored; anything else must be `key = value` with a known key given
    /// at most once.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = RunConfig::default();
        let mut seen = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let trimmed = raw.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let (key, value) = trimmed.split_once('=').ok_or_else(|| Error::Config {
                line,
                message: format!("expected `key = value`, found `{trimmed}`"),
            })?;
            let (key, value) = (key.trim(), value.trim());
            if !CONFIG_KEYS.contains(&key) {
                return Err(Error::Config {
                    line,
                    message: format!("unknown key `{key}`"),
                });
            }
            if seen.contains(&key) {
                return Err(Error::Config {
                    line,
                    message: format!("duplicate key `{key}`"),
                });
            }
            seen.push(key);
            if value.is_empty() {
                return Err(Error::Config {
                    line,
                    message: format!("missing value for `{key}`"),
                });
            }
            match key {
                "wavelength_m" => cfg.wavelength_m = parse_positive(value, line, key)?,
                "distance_m" => {
                    cfg.distance_m = parse_value(value, line, key)?;
                    if !cfg.distance_m.is_finite() {
                        return Err(Error::Config {
                            line,
                            message: "`distance_m` must be finite".into(),
                        });
                    }
                }
                "pixel_pitch_m" => cfg.pixel_pitch_m = parse_positive(value, line, key)?,
                "tv_variant" => cfg.tv_variant = parse_value(value, line, key)?,
                "alpha" => {
                    cfg.alpha = parse_value(value, line, key)?;
                    if !(0.0..=1.0).contains(&cfg.alpha) {
                        return Err(Error::Config {
                            line,
                            message: format!("`alpha` must lie in [0, 1], got {value}"),
                        });
                    }
                }
                "tau" => cfg.tau = parse_positive(value, line, key)?,
                "lambda" => cfg.lambda = parse_positive(value, line, key)?,
                "outer_iters" | "inner_iters" => {
                    let n: usize = parse_value(value, line, key)?;
                    if n == 0 {
                        return Err(Error::Config {
                            line,
                            message: format!("`{key}` must be at least 1"),
                        });
                    }
                    if key == "outer_iters" {
                        cfg.outer_iters = n;
                    } else {
                        cfg.inner_iters = n;
                    }
                }
                "constraint" => cfg.constraint = parse_value(value, line, key)?,
                "algorithm" => cfg.algorithm = Some(parse_value(value, line, key)?),
                "noise_kind" => cfg.noise_kind = parse_value(value, line, key)?,
                "noise_level" => {
                    cfg.noise_level = parse_value(value, line, key)?;
                    if !(cfg.noise_level.is_finite() && cfg.noise_level >= 0.0) {
                        return Err(Error::Config {
                            line,
                            message: format!("`noise_level` must be non-negative, got {value}"),
                        });
                    }
                }
                "seed" => cfg.seed = parse_value(value, line, key)?,
                "warm_start" => {
                    cfg.warm_start = match value {
                        "on" => true,
                        "off" => false,
                        _ => {
                            return Err(Error::Config {
                                line,
                                message: format!("`warm_start` must be `on` or `off`, got `{value}`"),
                            })
                        }
                    }
                }
                _ => unreachable!("key list checked above"),
            }
        }
        Ok(cfg)
    }

    pub fn variant(&self) -> TvVariant {
        self.tv_variant.with_alpha(self.alpha).expect("alpha validated on parse")
    }

    pub fn propagator_config(&self, rows: usize, cols: usize) -> PropagatorConfig {
        PropagatorConfig::new(self.wavelength_m, self.distance_m, self.pixel_pitch_m, rows, cols)
    }

    pub fn noise_model(&self) -> NoiseModel {
        match self.noise_kind {
            NoiseKind::None => NoiseModel::None,
            NoiseKind::Intensity => NoiseModel::IntensityGaussian { level: self.noise_level },
            NoiseKind::Phase => NoiseModel::PhaseGaussian { sigma: self.noise_level },
        }
    }
}
