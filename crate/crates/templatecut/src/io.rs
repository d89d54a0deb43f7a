//! Binary PGM images, raw volumes with a text header, and mask files.
//!
//! Volume header, one key per line:
//!
//! ```text
//! DIMS 64 64 64
//! SPACING 1 1 1.5
//! TYPE u16le
//! DATA scan.raw
//! ```
//!
//! `DATA` names a raw file relative to the header, x fastest. `DATA inline`
//! means the raw bytes follow the header line directly; uploads and mask
//! downloads use this single-buffer form.

use std::fs;
use std::path::{Path, PathBuf};

use templatecut_core::{Dim, Grid, Mask, ScalarField};

#[derive(Debug, thiserror::Error)]
pub enum IoError {
    #[error("BadMagic: {0}")]
    BadMagic(String),
    #[error("TruncatedData: expected {expected} bytes, got {got}")]
    TruncatedData { expected: usize, got: usize },
    #[error("HeaderMalformed: {0}")]
    HeaderMalformed(String),
    #[error("SizeMismatch: expected {expected} bytes, got {got}")]
    SizeMismatch { expected: usize, got: usize },
    #[error("ValueOutOfRange: {0}")]
    ValueOutOfRange(String),
    #[error("Io: {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

impl IoError {
    pub fn kind(&self) -> &'static str {
        match self {
            IoError::BadMagic(_) => "BadMagic",
            IoError::TruncatedData { .. } => "TruncatedData",
            IoError::HeaderMalformed(_) => "HeaderMalformed",
            IoError::SizeMismatch { .. } => "SizeMismatch",
            IoError::ValueOutOfRange(_) => "ValueOutOfRange",
            IoError::Io { .. } => "Io",
        }
    }
}

pub type Result<T, E = IoError> = std::result::Result<T, E>;

fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|source| IoError::Io { path: path.to_path_buf(), source })
}

fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|source| IoError::Io { path: path.to_path_buf(), source })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ElemType {
    U8,
    U16Le,
}

impl ElemType {
    pub fn size(self) -> usize {
        match self {
            ElemType::U8 => 1,
            ElemType::U16Le => 2,
        }
    }

    pub fn max_value(self) -> f64 {
        match self {
            ElemType::U8 => 255.0,
            ElemType::U16Le => 65535.0,
        }
    }

    pub fn token(self) -> &'static str {
        match self {
            ElemType::U8 => "u8",
            ElemType::U16Le => "u16le",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "u8" => Some(ElemType::U8),
            "u16le" => Some(ElemType::U16Le),
            _ => None,
        }
    }
}

// ---- PGM ----

/// Parse a binary (`P5`) PGM. Spacing is 1 on both axes.
pub fn parse_pgm(bytes: &[u8]) -> Result<ScalarField> {
    if bytes.len() < 2 || &bytes[..2] != b"P5" {
        return Err(IoError::BadMagic("expected P5".into()));
    }
    let mut pos = 2;
    let mut fields = [0usize; 3];
    for f in fields.iter_mut() {
        // whitespace and comments
        loop {
            match bytes.get(pos) {
                Some(b) if b.is_ascii_whitespace() => pos += 1,
                Some(b'#') => {
                    while pos < bytes.len() && bytes[pos] != b'\n' {
                        pos += 1;
                    }
                }
                _ => break,
            }
        }
        let start = pos;
        while pos < bytes.len() && bytes[pos].is_ascii_digit() {
            pos += 1;
        }
        if start == pos {
            return Err(IoError::TruncatedData { expected: pos + 1, got: bytes.len() });
        }
        *f = std::str::from_utf8(&bytes[start..pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| IoError::BadMagic("unparseable PGM header number".into()))?;
    }
    // exactly one whitespace byte before the raster
    if !bytes.get(pos).is_some_and(|b| b.is_ascii_whitespace()) {
        return Err(IoError::TruncatedData { expected: pos + 1, got: bytes.len() });
    }
    pos += 1;
    let [w, h, maxval] = fields;
    if w == 0 || h == 0 {
        return Err(IoError::BadMagic("PGM with zero width or height".into()));
    }
    if maxval == 0 || maxval > 65535 {
        return Err(IoError::BadMagic(format!("unsupported maxval {maxval}")));
    }
    let wide = maxval > 255;
    let n = w * h;
    let expected = n * if wide { 2 } else { 1 };
    let raster = &bytes[pos..];
    if raster.len() < expected {
        return Err(IoError::TruncatedData { expected, got: raster.len() });
    }
    let values = if wide {
        raster[..expected].chunks_exact(2).map(|c| u16::from_be_bytes([c[0], c[1]]) as f64).collect()
    } else {
        raster[..n].iter().map(|&b| b as f64).collect()
    };
    let grid = Grid::planar(w, h);
    Ok(ScalarField::new(grid, values).expect("raster matches grid"))
}

pub fn read_image_2d(path: &Path) -> Result<ScalarField> {
    parse_pgm(&read_bytes(path)?)
}

fn check_range(values: &[f64], elem: ElemType) -> Result<()> {
    if let Some(v) = values.iter().find(|&&v| !(0.0..=elem.max_value()).contains(&v) || v.fract() != 0.0) {
        return Err(IoError::ValueOutOfRange(format!("{v} does not fit {}", elem.token())));
    }
    Ok(())
}

/// Encode a 2D field as P5. Values must be integers in the range of `elem`;
/// `U16Le` selects maxval 65535 (stored big-endian as PGM requires).
pub fn encode_pgm(field: &ScalarField, elem: ElemType) -> Result<Vec<u8>> {
    if field.grid.dim != Dim::Two {
        return Err(IoError::HeaderMalformed("PGM holds 2D images only".into()));
    }
    check_range(&field.values, elem)?;
    let [w, h, _] = field.grid.extents;
    let mut out = format!("P5\n{w} {h}\n{}\n", elem.max_value() as u32).into_bytes();
    match elem {
        ElemType::U8 => out.extend(field.values.iter().map(|&v| v as u8)),
        ElemType::U16Le => {
            for &v in &field.values {
                out.extend_from_slice(&(v as u16).to_be_bytes());
            }
        }
    }
    Ok(out)
}

pub fn write_image_2d(field: &ScalarField, elem: ElemType, path: &Path) -> Result<()> {
    write_bytes(path, &encode_pgm(field, elem)?)
}

pub fn encode_mask_pgm(mask: &Mask) -> Vec<u8> {
    let [w, h, _] = mask.grid.extents;
    let mut out = format!("P5\n{w} {h}\n255\n").into_bytes();
    out.extend(mask.bits.iter().map(|&b| if b { 255u8 } else { 0 }));
    out
}

pub fn write_mask_2d(mask: &Mask, path: &Path) -> Result<()> {
    write_bytes(path, &encode_mask_pgm(mask))
}

// ---- volumes ----

#[derive(Debug, Clone, PartialEq)]
pub enum DataRef {
    File(PathBuf),
    Inline,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VolumeHeader {
    pub dims: [usize; 3],
    pub spacing: [f64; 3],
    pub elem: ElemType,
    pub data: DataRef,
}

impl VolumeHeader {
    pub fn byte_len(&self) -> usize {
        self.dims.iter().product::<usize>() * self.elem.size()
    }

    pub fn render(&self) -> String {
        let data = match &self.data {
            DataRef::File(p) => p.display().to_string(),
            DataRef::Inline => "inline".into(),
        };
        let [nx, ny, nz] = self.dims;
        let [sx, sy, sz] = self.spacing;
        format!("DIMS {nx} {ny} {nz}\nSPACING {sx} {sy} {sz}\nTYPE {}\nDATA {data}\n", self.elem.token())
    }
}

fn malformed(msg: impl Into<String>) -> IoError {
    IoError::HeaderMalformed(msg.into())
}

/// Parse header lines from the start of `bytes`. Returns the header and the
/// offset just past the `DATA` line.
pub fn parse_volume_header(bytes: &[u8]) -> Result<(VolumeHeader, usize)> {
    let mut dims = None;
    let mut spacing = None;
    let mut elem = None;
    let mut pos = 0;
    while pos < bytes.len() {
        let end = bytes[pos..].iter().position(|&b| b == b'\n').map_or(bytes.len(), |i| pos + i);
        let line = std::str::from_utf8(&bytes[pos..end]).map_err(|_| malformed("header is not UTF-8"))?;
        pos = (end + 1).min(bytes.len());
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut parts = line.split_whitespace();
        let key = parts.next().unwrap_or_default();
        let rest: Vec<&str> = parts.collect();
        match key {
            "DIMS" => {
                let v: Vec<usize> = rest.iter().map(|s| s.parse()).collect::<Result<_, _>>().map_err(|_| malformed("DIMS needs integers"))?;
                if v.len() != 3 || v.contains(&0) {
                    return Err(malformed("DIMS needs three positive integers"));
                }
                dims = Some([v[0], v[1], v[2]]);
            }
            "SPACING" => {
                let v: Vec<f64> = rest.iter().map(|s| s.parse()).collect::<Result<_, _>>().map_err(|_| malformed("SPACING needs numbers"))?;
                if v.len() != 3 || v.iter().any(|s| !(*s > 0.0 && s.is_finite())) {
                    return Err(malformed("SPACING needs three positive numbers"));
                }
                spacing = Some([v[0], v[1], v[2]]);
            }
            "TYPE" => {
                elem = Some(
                    rest.first()
                        .and_then(|t| ElemType::parse(t))
                        .filter(|_| rest.len() == 1)
                        .ok_or_else(|| malformed("TYPE must be u8 or u16le"))?,
                );
            }
            "DATA" => {
                let target = line[4..].trim();
                if target.is_empty() {
                    return Err(malformed("DATA needs a path or 'inline'"));
                }
                let data = if target == "inline" { DataRef::Inline } else { DataRef::File(PathBuf::from(target)) };
                let header = VolumeHeader {
                    dims: dims.ok_or_else(|| malformed("missing DIMS"))?,
                    spacing: spacing.ok_or_else(|| malformed("missing SPACING"))?,
                    elem: elem.ok_or_else(|| malformed("missing TYPE"))?,
                    data,
                };
                return Ok((header, pos));
            }
            other => return Err(malformed(format!("unknown key {other}"))),
        }
    }
    Err(malformed("missing DATA"))
}

fn decode_raw(header: &VolumeHeader, raw: &[u8]) -> Result<ScalarField> {
    let expected = header.byte_len();
    if raw.len() != expected {
        return Err(IoError::SizeMismatch { expected, got: raw.len() });
    }
    let values: Vec<f64> = match header.elem {
        ElemType::U8 => raw.iter().map(|&b| b as f64).collect(),
        ElemType::U16Le => raw.chunks_exact(2).map(|c| u16::from_le_bytes([c[0], c[1]]) as f64).collect(),
    };
    let dim = if header.dims[2] == 1 { Dim::Two } else { Dim::Three };
    let grid = Grid::new(dim, header.dims, header.spacing).map_err(|e| malformed(e.to_string()))?;
    Ok(ScalarField::new(grid, values).expect("raw size checked"))
}

/// Volume from a single buffer: header with `DATA inline` followed by raw bytes.
/// A header naming a file is resolved against `base`, if given.
pub fn parse_volume(bytes: &[u8], base: Option<&Path>) -> Result<ScalarField> {
    let (header, offset) = parse_volume_header(bytes)?;
    match &header.data {
        DataRef::Inline => decode_raw(&header, &bytes[offset..]),
        DataRef::File(rel) => match base {
            Some(dir) => decode_raw(&header, &read_bytes(&dir.join(rel))?),
            None => Err(malformed("DATA must be inline here")),
        },
    }
}

pub fn read_volume(header_path: &Path) -> Result<ScalarField> {
    let bytes = read_bytes(header_path)?;
    let dir = header_path.parent().unwrap_or(Path::new("."));
    parse_volume(&bytes, Some(dir))
}

fn encode_raw(values: &[f64], elem: ElemType) -> Vec<u8> {
    match elem {
        ElemType::U8 => values.iter().map(|&v| v as u8).collect(),
        ElemType::U16Le => values.iter().flat_map(|&v| (v as u16).to_le_bytes()).collect(),
    }
}

fn header_for(grid: &Grid, elem: ElemType, data: DataRef) -> VolumeHeader {
    VolumeHeader { dims: grid.extents, spacing: grid.spacing, elem, data }
}

/// Single-buffer form with inline data.
pub fn encode_volume_inline(field: &ScalarField, elem: ElemType) -> Result<Vec<u8>> {
    check_range(&field.values, elem)?;
    let mut out = header_for(&field.grid, elem, DataRef::Inline).render().into_bytes();
    out.extend(encode_raw(&field.values, elem));
    Ok(out)
}

fn raw_path_for(header_path: &Path) -> PathBuf {
    header_path.with_extension("raw")
}

/// Writes the header at `header_path` and the samples next to it with a `.raw` extension.
pub fn write_volume(field: &ScalarField, elem: ElemType, header_path: &Path) -> Result<()> {
    check_range(&field.values, elem)?;
    write_split(&field.grid, elem, &encode_raw(&field.values, elem), header_path)
}

fn write_split(grid: &Grid, elem: ElemType, raw: &[u8], header_path: &Path) -> Result<()> {
    let raw_path = raw_path_for(header_path);
    let rel = PathBuf::from(raw_path.file_name().expect("header path has a file name"));
    let header = header_for(grid, elem, DataRef::File(rel));
    write_bytes(&raw_path, raw)?;
    write_bytes(header_path, header.render().as_bytes())
}

fn mask_raw(mask: &Mask) -> Vec<u8> {
    mask.bits.iter().map(|&b| b as u8).collect()
}

/// 3D mask as u8 {0, 1} with a header, split into header and `.raw` files.
pub fn write_mask_3d(mask: &Mask, header_path: &Path) -> Result<()> {
    write_split(&mask.grid, ElemType::U8, &mask_raw(mask), header_path)
}

pub fn encode_mask_inline(mask: &Mask) -> Vec<u8> {
    let mut out = header_for(&mask.grid, ElemType::U8, DataRef::Inline).render().into_bytes();
    out.extend(mask_raw(mask));
    out
}

/// Which container a path or buffer uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Container {
    Pgm,
    Volume,
}

pub fn sniff(bytes: &[u8]) -> Container {
    if bytes.starts_with(b"P5") {
        Container::Pgm
    } else {
        Container::Volume
    }
}

/// Image or volume from a file, by content.
pub fn read_field(path: &Path) -> Result<ScalarField> {
    let bytes = read_bytes(path)?;
    match sniff(&bytes) {
        Container::Pgm => parse_pgm(&bytes),
        Container::Volume => parse_volume(&bytes, Some(path.parent().unwrap_or(Path::new(".")))),
    }
}

/// Image or volume from an in-memory upload (PGM or inline volume).
pub fn parse_field(bytes: &[u8]) -> Result<ScalarField> {
    match sniff(bytes) {
        Container::Pgm => parse_pgm(bytes),
        Container::Volume => parse_volume(bytes, None),
    }
}

fn field_to_mask(field: ScalarField) -> Mask {
    let bits = field.values.iter().map(|&v| v != 0.0).collect();
    Mask::new(field.grid, bits).expect("same grid")
}

/// Any nonzero sample is set.
pub fn read_mask(path: &Path) -> Result<Mask> {
    read_field(path).map(field_to_mask)
}

pub fn parse_mask(bytes: &[u8]) -> Result<Mask> {
    parse_field(bytes).map(field_to_mask)
}

/// PGM for 2D masks, header plus `.raw` for 3D.
pub fn write_mask(mask: &Mask, path: &Path) -> Result<()> {
    match mask.grid.dim {
        Dim::Two => write_mask_2d(mask, path),
        Dim::Three => write_mask_3d(mask, path),
    }
}

/// PGM for 2D fields, header plus `.raw` for 3D.
pub fn write_field(field: &ScalarField, elem: ElemType, path: &Path) -> Result<()> {
    match field.grid.dim {
        Dim::Two => write_image_2d(field, elem, path),
        Dim::Three => write_volume(field, elem, path),
    }
}
