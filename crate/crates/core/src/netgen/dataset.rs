//! Binary dataset container.
//!
//! Layout, all integers `u64` and all reals `f64`, little-endian:
//!
//! ```text
//! magic    8 bytes  "AGNNDSET"
//! version  u64      1
//! pairs    u64      K
//! field    f64      field length l in meters
//! frames   u64      T
//! rho_mode u64      0 = uniform, 1 = fixed
//! rho      f64      fixed value (0 when uniform)
//! seed     u64
//! count    u64      number of layouts
//! per layout:
//!   rho    f64
//!   g_ls   K*K f64, row-major (tx, rx)
//!   h_ss   T*K*K pairs (re, im), frame-major then (tx, rx)
//! ```
//!
//! Channel coefficients are `sqrt(g_ls) * h_ss`; storing the two factors keeps
//! `|h|^2 = g_ls * |h_ss|^2` exact after a round trip.

use std::io::{Read, Write};
use std::path::Path;

use num_complex::Complex64;

use super::{ChannelEpisode, ChannelParams, GainMatrix, RhoMode};
use crate::error::{Error, Result};

const MAGIC: &[u8; 8] = b"AGNNDSET";
const VERSION: u64 = 1;

#[derive(Clone, Debug, PartialEq)]
pub struct DatasetHeader {
    pub pairs: usize,
    pub field_length_m: f64,
    pub frames: usize,
    pub rho: RhoMode,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub header: DatasetHeader,
    pub episodes: Vec<ChannelEpisode>,
}

impl Dataset {
    /// Generates `count` layouts; layout `n` depends only on `(params, seed, n)`.
    pub fn generate(params: &ChannelParams, count: usize, seed: u64) -> Result<Self> {
        let episodes = (0..count as u64)
            .map(|n| params.generate_episode(seed, n).map(|(_, ep)| ep))
            .collect::<Result<Vec<_>>>()?;
        let header = DatasetHeader {
            pairs: params.pairs,
            field_length_m: params.field_length_m,
            frames: params.frames,
            rho: params.rho,
            seed,
        };
        Ok(Self { header, episodes })
    }

    pub fn len(&self) -> usize {
        self.episodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.episodes.is_empty()
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        let h = &self.header;
        w.write_all(MAGIC)?;
        put_u64(&mut w, VERSION)?;
        put_u64(&mut w, h.pairs as u64)?;
        put_f64(&mut w, h.field_length_m)?;
        put_u64(&mut w, h.frames as u64)?;
        let (mode, value) = match h.rho {
            RhoMode::Uniform => (0, 0.0),
            RhoMode::Fixed(r) => (1, r),
        };
        put_u64(&mut w, mode)?;
        put_f64(&mut w, value)?;
        put_u64(&mut w, h.seed)?;
        put_u64(&mut w, self.episodes.len() as u64)?;
        for ep in &self.episodes {
            put_f64(&mut w, ep.rho())?;
            for &g in ep.large_scale().data() {
                put_f64(&mut w, g)?;
            }
            for t in 0..ep.frames() {
                for z in ep.small_scale_frame(t) {
                    put_f64(&mut w, z.re)?;
                    put_f64(&mut w, z.im)?;
                }
            }
        }
        Ok(())
    }

    pub fn read_from<R: Read>(mut r: R) -> Result<Self> {
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic).map_err(truncated)?;
        if &magic != MAGIC {
            return Err(Error::data("not a dataset file (bad magic)"));
        }
        let version = get_u64(&mut r)?;
        if version != VERSION {
            return Err(Error::data(format!("unsupported dataset version {version}")));
        }
        let pairs = get_usize(&mut r)?;
        let field_length_m = get_f64(&mut r)?;
        let frames = get_usize(&mut r)?;
        let mode = get_u64(&mut r)?;
        let value = get_f64(&mut r)?;
        let rho = match mode {
            0 => RhoMode::Uniform,
            1 => RhoMode::Fixed(value),
            m => return Err(Error::data(format!("unknown correlation mode {m}"))),
        };
        let seed = get_u64(&mut r)?;
        let count = get_usize(&mut r)?;
        if pairs == 0 || frames == 0 || pairs > 4096 || frames > 1 << 20 {
            return Err(Error::data(format!("implausible header: {pairs} pairs, {frames} frames")));
        }
        let n = pairs * pairs;
        let mut episodes = Vec::with_capacity(count.min(1 << 16));
        for _ in 0..count {
            let ep_rho = get_f64(&mut r)?;
            let mut g = Vec::with_capacity(n);
            for _ in 0..n {
                g.push(get_f64(&mut r)?);
            }
            let mut hs = Vec::with_capacity(frames * n);
            for _ in 0..frames * n {
                let re = get_f64(&mut r)?;
                let im = get_f64(&mut r)?;
                hs.push(Complex64::new(re, im));
            }
            let g = GainMatrix::from_vec(pairs, g).expect("length checked");
            episodes.push(ChannelEpisode::from_parts(ep_rho, g, frames, hs)?);
        }
        let header = DatasetHeader { pairs, field_length_m, frames, rho, seed };
        Ok(Self { header, episodes })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path)?;
        let mut w = std::io::BufWriter::new(file);
        self.write_to(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        Self::read_from(std::io::BufReader::new(file))
    }
}

fn truncated(e: std::io::Error) -> Error {
    if e.kind() == std::io::ErrorKind::UnexpectedEof {
        Error::data("dataset file is truncated")
    } else {
        Error::Io(e)
    }
}

fn put_u64<W: Write>(w: &mut W, v: u64) -> Result<()> {
    Ok(w.write_all(&v.to_le_bytes())?)
}

fn put_f64<W: Write>(w: &mut W, v: f64) -> Result<()> {
    Ok(w.write_all(&v.to_le_bytes())?)
}

fn get_u64<R: Read>(r: &mut R) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b).map_err(truncated)?;
    Ok(u64::from_le_bytes(b))
}

fn get_usize<R: Read>(r: &mut R) -> Result<usize> {
    usize::try_from(get_u64(r)?).map_err(|_| Error::data("count exceeds address space"))
}

fn get_f64<R: Read>(r: &mut R) -> Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b).map_err(truncated)?;
    Ok(f64::from_le_bytes(b))
}
