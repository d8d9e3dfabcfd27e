//! Model container format (version 1).
//!
//! ```text
//! offset  size  field
//! 0       8     magic "BCSMODEL"
//! 8       4     format version, u32 LE (= 1)
//! 12      4     header length H in bytes, u32 LE
//! 16      H     UTF-8 header, one `key=value` per line ('\n' terminated):
//!                 block_size, rate, recon_layers, redundancy,
//!                 linear_sensing (0|1), measurement_dim, layer_count,
//!                 layer.<i> = <in>,<out>,<identity|relu>
//! 16+H    ...   for each layer in order: out*in f64 LE weights (row-major),
//!               then out f64 LE biases
//! ```
//!
//! `rate` is written with the shortest decimal form that parses back to the
//! identical `f64`. Nothing may follow the last bias.

use std::fmt::Write as _;
use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use crate::codec::{field, parse_key_values, put_f64s, put_u32, Reader};
use crate::model::{ArchSpec, BcsModel};
use crate::nn::{Activation, DenseLayer};
use crate::{Error, Result};

pub const MODEL_MAGIC: &[u8; 8] = b"BCSMODEL";
pub const MODEL_VERSION: u32 = 1;

fn header_text(model: &BcsModel) -> String {
    let spec = model.spec();
    let mut h = String::new();
    let _ = writeln!(h, "block_size={}", spec.block_size);
    let _ = writeln!(h, "rate={}", spec.rate);
    let _ = writeln!(h, "recon_layers={}", spec.recon_layers);
    let _ = writeln!(h, "redundancy={}", spec.redundancy);
    let _ = writeln!(h, "linear_sensing={}", u8::from(spec.linear_sensing));
    let _ = writeln!(h, "measurement_dim={}", spec.measurement_dim());
    let _ = writeln!(h, "layer_count={}", model.layers().len());
    for (i, l) in model.layers().iter().enumerate() {
        let _ = writeln!(
            h,
            "layer.{i}={},{},{}",
            l.in_dim(),
            l.out_dim(),
            l.activation()
        );
    }
    h
}

/// Serialises a model to bytes.
pub fn model_to_bytes(model: &BcsModel) -> Vec<u8> {
    let header = header_text(model);
    let mut out = Vec::with_capacity(16 + header.len() + model.allocated_params() * 8);
    out.extend_from_slice(MODEL_MAGIC);
    put_u32(&mut out, MODEL_VERSION);
    put_u32(&mut out, header.len() as u32);
    out.extend_from_slice(header.as_bytes());
    for l in model.layers() {
        put_f64s(&mut out, l.weights());
        put_f64s(&mut out, l.bias());
    }
    out
}

pub fn model_from_bytes(bytes: &[u8]) -> Result<BcsModel> {
    let mut r = Reader::new(bytes);
    let magic = r
        .take(8)
        .map_err(|_| Error::CorruptHeader("file too short for magic".into()))?;
    if magic != MODEL_MAGIC {
        return Err(Error::CorruptHeader("bad magic, not a model file".into()));
    }
    let version = r.u32()?;
    if version != MODEL_VERSION {
        return Err(Error::VersionMismatch {
            found: version,
            supported: MODEL_VERSION,
        });
    }
    let header_len = r.u32()? as usize;
    let header = std::str::from_utf8(r.take(header_len)?)
        .map_err(|_| Error::CorruptHeader("header is not UTF-8".into()))?;
    let kv = parse_key_values(header)?;

    let linear: u8 = field(&kv, "linear_sensing")?;
    if linear > 1 {
        return Err(Error::CorruptHeader("linear_sensing must be 0 or 1".into()));
    }
    let spec = ArchSpec::new(
        field(&kv, "block_size")?,
        field(&kv, "rate")?,
        field(&kv, "recon_layers")?,
        field(&kv, "redundancy")?,
    )
    .map_err(|e| Error::CorruptHeader(e.to_string()))?
    .with_linear_sensing(linear == 1);

    let m: usize = field(&kv, "measurement_dim")?;
    if m != spec.measurement_dim() {
        return Err(Error::CorruptHeader(format!(
            "measurement_dim {m} inconsistent with spec {spec}"
        )));
    }
    let expected = spec.layer_dims();
    let count: usize = field(&kv, "layer_count")?;
    if count != expected.len() {
        return Err(Error::CorruptHeader(format!(
            "layer_count {count}, spec implies {}",
            expected.len()
        )));
    }
    for (i, &(din, dout, act)) in expected.iter().enumerate() {
        let raw: String = field(&kv, &format!("layer.{i}"))?;
        let parts: Vec<&str> = raw.split(',').collect();
        let ok = parts.len() == 3
            && parts[0].parse::<usize>().ok() == Some(din)
            && parts[1].parse::<usize>().ok() == Some(dout)
            && parts[2].parse::<Activation>().ok() == Some(act);
        if !ok {
            return Err(Error::CorruptHeader(format!(
                "layer.{i}=`{raw}` inconsistent with spec {spec}"
            )));
        }
    }

    let payload: usize = expected.iter().map(|&(i, o, _)| (i * o + o) * 8).sum();
    r.require(payload)?;
    let mut layers = Vec::with_capacity(expected.len());
    for &(din, dout, act) in &expected {
        let w = r.f64s(din * dout)?;
        let b = r.f64s(dout)?;
        layers.push(
            DenseLayer::new(din, dout, w, b, act)
                .map_err(|e| Error::CorruptHeader(format!("bad layer payload: {e}")))?,
        );
    }
    r.expect_end()?;
    BcsModel::from_layers(spec, layers).map_err(|e| Error::CorruptHeader(e.to_string()))
}

pub fn write_model<W: Write>(model: &BcsModel, mut out: W) -> Result<()> {
    out.write_all(&model_to_bytes(model))?;
    Ok(())
}

pub fn read_model<R: Read>(mut src: R) -> Result<BcsModel> {
    let mut buf = Vec::new();
    src.read_to_end(&mut buf)?;
    model_from_bytes(&buf)
}

pub fn save_model(model: &BcsModel, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, model_to_bytes(model))?;
    Ok(())
}

pub fn load_model(path: impl AsRef<Path>) -> Result<BcsModel> {
    model_from_bytes(&fs::read(path)?)
}
