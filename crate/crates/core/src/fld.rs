//! The ".fld" field file format.
//!
//! Layout: 8-byte magic "MKGFLD01", a u32 little-endian header length, a
//! UTF-8 JSON header, then raw little-endian float64 samples, row-major,
//! component-minor (all lanes of one grid point together; complex kinds
//! store re/im lanes per component).

use std::io::{Read, Write};
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{Field, FieldKind, Lattice};

pub const MAGIC: &[u8; 8] = b"MKGFLD01";

#[derive(Debug, Serialize, Deserialize)]
struct Header {
    dim: usize,
    n: Vec<usize>,
    box_len: f64,
    kind: String,
    components: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    time_extent: Option<TimeExtent>,
}

#[derive(Debug, Serialize, Deserialize)]
struct TimeExtent {
    n_t: usize,
    t_len: f64,
}

fn kind_from_name(s: &str) -> Result<FieldKind> {
    Ok(match s {
        "real-scalar" => FieldKind::RealScalar,
        "complex-scalar" => FieldKind::ComplexScalar,
        "real-vector" => FieldKind::RealVector,
        "complex-vector" => FieldKind::ComplexVector,
        other => return Err(Error::BadFieldFile(format!("unknown kind {other:?}"))),
    })
}

/// Number of f64 lanes per grid point.
fn lanes(kind: FieldKind, dim: usize) -> usize {
    let c = kind.components(dim);
    if kind.is_real() {
        c
    } else {
        2 * c
    }
}

pub fn write_field(path: &Path, field: &Field) -> Result<()> {
    let lat = field.lattice();
    let header = Header {
        dim: lat.dim(),
        n: vec![lat.n(); lat.dim()],
        box_len: lat.box_len(),
        kind: field.kind().name().to_string(),
        components: lanes(field.kind(), lat.dim()),
        time_extent: lat.time().map(|t| TimeExtent { n_t: t.n_t, t_len: t.t_len }),
    };
    let hjson = serde_json::to_vec(&header).expect("header serialization");
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    out.write_all(MAGIC)?;
    out.write_all(&(hjson.len() as u32).to_le_bytes())?;
    out.write_all(&hjson)?;
    let np = lat.num_points();
    let real = field.kind().is_real();
    let mut buf = Vec::with_capacity(np * lanes(field.kind(), lat.dim()) * 8);
    for i in 0..np {
        for c in 0..field.num_components() {
            let v = field.comp(c)[i];
            buf.extend_from_slice(&v.re.to_le_bytes());
            if !real {
                buf.extend_from_slice(&v.im.to_le_bytes());
            }
        }
    }
    out.write_all(&buf)?;
    Ok(())
}

pub fn read_field(path: &Path) -> Result<Field> {
    let mut file = std::io::BufReader::new(std::fs::File::open(path)?);
    let mut magic = [0u8; 8];
    file.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::BadFieldFile("bad magic".into()));
    }
    let mut len_bytes = [0u8; 4];
    file.read_exact(&mut len_bytes)?;
    let hlen = u32::from_le_bytes(len_bytes) as usize;
    if hlen > 1 << 20 {
        return Err(Error::BadFieldFile(format!("implausible header length {hlen}")));
    }
    let mut hjson = vec![0u8; hlen];
    file.read_exact(&mut hjson)?;
    let header: Header = serde_json::from_slice(&hjson)
        .map_err(|e| Error::BadFieldFile(format!("header parse: {e}")))?;
    let kind = kind_from_name(&header.kind)?;
    if header.n.is_empty() || header.n.iter().any(|&n| n != header.n[0]) {
        return Err(Error::BadFieldFile("anisotropic n per axis unsupported".into()));
    }
    let lat = match header.time_extent {
        None => Lattice::spatial(header.dim, header.n[0], header.box_len),
        Some(t) => Lattice::space_time(header.dim, header.n[0], header.box_len, t.n_t, t.t_len),
    };
    let expect_lanes = lanes(kind, lat.dim());
    if header.components != expect_lanes {
        return Err(Error::BadFieldFile(format!(
            "component count {} does not match kind {} (expect {})",
            header.components,
            header.kind,
            expect_lanes
        )));
    }
    let np = lat.num_points();
    let mut raw = vec![0u8; np * expect_lanes * 8];
    file.read_exact(&mut raw)?;
    let mut field = Field::zeros(&lat, kind);
    let real = kind.is_real();
    let ncomp = field.num_components();
    let mut off = 0usize;
    for i in 0..np {
        for c in 0..ncomp {
            let re = f64::from_le_bytes(raw[off..off + 8].try_into().unwrap());
            off += 8;
            let im = if real {
                0.0
            } else {
                let v = f64::from_le_bytes(raw[off..off + 8].try_into().unwrap());
                off += 8;
                v
            };
            field.comp_mut(c)[i] = Complex64::new(re, im);
        }
    }
    if !field.is_finite() {
        return Err(Error::BadFieldFile("non-finite samples".into()));
    }
    Ok(field)
}
