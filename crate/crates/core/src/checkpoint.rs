//! Versioned binary checkpoint of a [`PolicyModel`].
//!
//! All integers `u64`, all reals `f64`, little-endian:
//!
//! ```text
//! magic        8 bytes "AGNNCKPT"
//! version      u64     1
//! kind         u64     0 mpnn, 1 air-mpnn, 2 air-mprnn
//! layers       u64
//! aggregation  u64     0 sum, 1 mean, 2 max
//! gain scale   u64     0 linear, 1 log
//! floor, direct mean, direct std, cross mean, cross std   5 x f64
//! mlp count    u64     3, in the order message, update, output
//! per mlp:
//!   name       u64 length + UTF-8 bytes
//!   output     u64     0 linear, 1 sigmoid
//!   dims       u64 count + count x u64
//!   per layer: weights d_l x d_{l+1} row-major, then bias d_{l+1}
//! ```

use std::io::{Read, Write};
use std::path::Path;

use crate::airphy::Aggregation;
use crate::diffmath::{Mlp, OutputActivation, Tensor};
use crate::error::{Error, Result};
use crate::gnn::{GainScale, NormStats, PolicyKind, PolicyModel};
use crate::scalar::Scalar;

const MAGIC: &[u8; 8] = b"AGNNCKPT";
const VERSION: u64 = 1;
const NAMES: [&str; 3] = ["message", "update", "output"];

pub fn write_model<S: Scalar, W: Write>(model: &PolicyModel<S>, mut w: W) -> Result<()> {
    w.write_all(MAGIC)?;
    put(&mut w, VERSION)?;
    put(&mut w, model.kind().code())?;
    put(&mut w, model.layers() as u64)?;
    put(&mut w, match model.aggregation {
        Aggregation::Sum => 0,
        Aggregation::Mean => 1,
        Aggregation::Max => 2,
    })?;
    let n = &model.norm;
    put(&mut w, match n.scale {
        GainScale::Linear => 0,
        GainScale::Log => 1,
    })?;
    for v in [n.floor, n.direct_mean, n.direct_std, n.cross_mean, n.cross_std] {
        put_f(&mut w, v)?;
    }
    put(&mut w, 3)?;
    for (name, mlp) in model.mlps() {
        put(&mut w, name.len() as u64)?;
        w.write_all(name.as_bytes())?;
        put(&mut w, match mlp.output_activation() {
            OutputActivation::Linear => 0,
            OutputActivation::Sigmoid => 1,
        })?;
        put(&mut w, mlp.dims().len() as u64)?;
        for &d in mlp.dims() {
            put(&mut w, d as u64)?;
        }
        for (wt, b) in mlp.weights().iter().zip(mlp.biases()) {
            for v in wt.data().iter().chain(b.data()) {
                put_f(&mut w, v.as_f64())?;
            }
        }
    }
    Ok(())
}

pub fn read_model<S: Scalar, R: Read>(mut r: R) -> Result<PolicyModel<S>> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic).map_err(eof)?;
    if &magic != MAGIC {
        return Err(Error::data("not a checkpoint file (bad magic)"));
    }
    let version = get(&mut r)?;
    if version != VERSION {
        return Err(Error::data(format!("unsupported checkpoint version {version}")));
    }
    let code = get(&mut r)?;
    let kind = PolicyKind::from_code(code).ok_or_else(|| Error::data(format!("unknown policy kind code {code}")))?;
    let layers = get(&mut r)? as usize;
    let aggregation = match get(&mut r)? {
        0 => Aggregation::Sum,
        1 => Aggregation::Mean,
        2 => Aggregation::Max,
        c => return Err(Error::data(format!("unknown aggregation code {c}"))),
    };
    let scale = match get(&mut r)? {
        0 => GainScale::Linear,
        1 => GainScale::Log,
        c => return Err(Error::data(format!("unknown gain scale code {c}"))),
    };
    let mut f = [0.0; 5];
    for v in &mut f {
        *v = get_f(&mut r)?;
    }
    let norm = NormStats { scale, floor: f[0], direct_mean: f[1], direct_std: f[2], cross_mean: f[3], cross_std: f[4] };
    if get(&mut r)? != 3 {
        return Err(Error::data("checkpoint must hold exactly three networks"));
    }
    let mut mlps = Vec::with_capacity(3);
    for expected in NAMES {
        let len = get(&mut r)? as usize;
        if len > 64 {
            return Err(Error::data("implausible network name length"));
        }
        let mut name = vec![0u8; len];
        r.read_exact(&mut name).map_err(eof)?;
        if name != expected.as_bytes() {
            return Err(Error::data(format!("expected network {expected:?}, found {:?}", String::from_utf8_lossy(&name))));
        }
        let output = match get(&mut r)? {
            0 => OutputActivation::Linear,
            1 => OutputActivation::Sigmoid,
            c => return Err(Error::data(format!("unknown activation code {c}"))),
        };
        let count = get(&mut r)? as usize;
        if !(2..=16).contains(&count) {
            return Err(Error::data(format!("implausible layer count {count}")));
        }
        let dims = (0..count).map(|_| get(&mut r).map(|d| d as usize)).collect::<Result<Vec<_>>>()?;
        if dims.iter().any(|&d| d == 0 || d > 1 << 16) {
            return Err(Error::data(format!("implausible widths {dims:?}")));
        }
        let mut weights = Vec::new();
        let mut biases = Vec::new();
        for d in dims.windows(2) {
            let wd = (0..d[0] * d[1]).map(|_| get_f(&mut r).map(S::of)).collect::<Result<Vec<_>>>()?;
            let bd = (0..d[1]).map(|_| get_f(&mut r).map(S::of)).collect::<Result<Vec<_>>>()?;
            weights.push(Tensor::from_vec(d[0], d[1], wd)?);
            biases.push(Tensor::from_vec(1, d[1], bd)?);
        }
        mlps.push(Mlp::from_parts(dims, weights, biases, output).map_err(|e| Error::data(e.to_string()))?);
    }
    let output = mlps.pop().expect("three networks");
    let update = mlps.pop().expect("three networks");
    let message = mlps.pop().expect("three networks");
    PolicyModel::from_parts(kind, layers, aggregation, norm, message, update, output).map_err(|e| Error::data(e.to_string()))
}

pub fn save_model<S: Scalar>(model: &PolicyModel<S>, path: &Path) -> Result<()> {
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    write_model(model, &mut w)?;
    w.flush()?;
    Ok(())
}

pub fn load_model<S: Scalar>(path: &Path) -> Result<PolicyModel<S>> {
    read_model(std::io::BufReader::new(std::fs::File::open(path)?))
}

fn eof(e: std::io::Error) -> Error {
    if e.kind() == std::io::ErrorKind::UnexpectedEof {
        Error::data("checkpoint file is truncated")
    } else {
        Error::Io(e)
    }
}

fn put<W: Write>(w: &mut W, v: u64) -> Result<()> {
    Ok(w.write_all(&v.to_le_bytes())?)
}

fn put_f<W: Write>(w: &mut W, v: f64) -> Result<()> {
    Ok(w.write_all(&v.to_le_bytes())?)
}

fn get<R: Read>(r: &mut R) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b).map_err(eof)?;
    Ok(u64::from_le_bytes(b))
}

fn get_f<R: Read>(r: &mut R) -> Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b).map_err(eof)?;
    Ok(f64::from_le_bytes(b))
}
