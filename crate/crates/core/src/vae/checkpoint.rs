//! `FSOM` model checkpoints.
//!
//! ```text
//! magic "FSOM" | version u16 | config JSON byte length u64 | config JSON
//! then, for each array: element count u64 | f64 values
//! ```
//!
//! All integers and floats are little-endian. Array order: for each encoder
//! block `W, gamma, shift, running_mean, running_var`; `mu W, b`;
//! `logvar W, b`; for each decoder block `W, gamma, shift, running_mean,
//! running_var`; output `W, b`. Blocks feeding batch norm have no bias.

use std::io::{Read, Write};

use super::model::{DenseBlock, VaeModel};
use super::VaeConfig;
use crate::kernel::{AffineLayer, BatchNormLayer, Matrix};
use crate::{Error, Result};

pub const CHECKPOINT_MAGIC: &[u8; 4] = b"FSOM";
pub const CHECKPOINT_FORMAT_VERSION: u16 = 1;

fn block_arrays(b: &DenseBlock) -> [&[f64]; 5] {
    [b.affine.weights.data(), &b.bn.gamma, &b.bn.shift, &b.bn.running_mean, &b.bn.running_var]
}

fn arrays(model: &VaeModel) -> Vec<&[f64]> {
    let mut out: Vec<&[f64]> = Vec::new();
    out.extend(block_arrays(&model.encoder[0]));
    out.extend(block_arrays(&model.encoder[1]));
    for h in [&model.mu_head, &model.logvar_head] {
        out.push(h.weights.data());
        out.push(h.bias.as_deref().unwrap_or(&[]));
    }
    out.extend(block_arrays(&model.decoder[0]));
    out.extend(block_arrays(&model.decoder[1]));
    out.push(model.output.weights.data());
    out.push(model.output.bias.as_deref().unwrap_or(&[]));
    out
}

pub fn write_checkpoint<W: Write>(model: &VaeModel, mut out: W) -> Result<()> {
    let io = |e| Error::io("<checkpoint>", e);
    let json = serde_json::to_vec(model.config())?;
    out.write_all(CHECKPOINT_MAGIC).map_err(io)?;
    out.write_all(&CHECKPOINT_FORMAT_VERSION.to_le_bytes()).map_err(io)?;
    out.write_all(&(json.len() as u64).to_le_bytes()).map_err(io)?;
    out.write_all(&json).map_err(io)?;
    for a in arrays(model) {
        out.write_all(&(a.len() as u64).to_le_bytes()).map_err(io)?;
        let mut buf = Vec::with_capacity(a.len() * 8);
        for v in a {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        out.write_all(&buf).map_err(io)?;
    }
    out.flush().map_err(io)
}

struct Reader<R>(R);

impl<R: Read> Reader<R> {
    fn exact(&mut self, buf: &mut [u8]) -> Result<()> {
        self.0
            .read_exact(buf)
            .map_err(|e| Error::Format(format!("truncated checkpoint: {e}")))
    }

    fn u64(&mut self) -> Result<u64> {
        let mut b = [0u8; 8];
        self.exact(&mut b)?;
        Ok(u64::from_le_bytes(b))
    }

    fn array(&mut self, expected: usize, what: &str) -> Result<Vec<f64>> {
        let len = self.u64()?;
        if len != expected as u64 {
            return Err(Error::Format(format!("checkpoint {what}: expected {expected} values, found {len}")));
        }
        let mut bytes = vec![0u8; expected * 8];
        self.exact(&mut bytes)?;
        Ok(bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect())
    }

    fn affine(&mut self, in_dim: usize, out_dim: usize, bias: bool, l1: f64, what: &str) -> Result<AffineLayer> {
        let w = Matrix::from_vec(in_dim, out_dim, self.array(in_dim * out_dim, what)?)?;
        let b = self.array(if bias { out_dim } else { 0 }, what)?;
        AffineLayer::new(w, bias.then_some(b), l1)
    }

    fn block(&mut self, in_dim: usize, out_dim: usize, cfg: &VaeConfig, what: &str) -> Result<DenseBlock> {
        let w = Matrix::from_vec(in_dim, out_dim, self.array(in_dim * out_dim, what)?)?;
        let mut bn = BatchNormLayer::new(out_dim, cfg.bn_momentum, cfg.bn_eps)?;
        bn.gamma = self.array(out_dim, what)?;
        bn.shift = self.array(out_dim, what)?;
        bn.running_mean = self.array(out_dim, what)?;
        bn.running_var = self.array(out_dim, what)?;
        Ok(DenseBlock {
            affine: AffineLayer::new(w, None, cfg.l1_coeff)?,
            bn,
        })
    }
}

pub fn read_checkpoint<R: Read>(input: R) -> Result<VaeModel> {
    let mut r = Reader(input);
    let mut magic = [0u8; 4];
    r.exact(&mut magic)?;
    if &magic != CHECKPOINT_MAGIC {
        return Err(Error::Format("not an FSOM checkpoint (bad magic)".into()));
    }
    let mut version = [0u8; 2];
    r.exact(&mut version)?;
    let version = u16::from_le_bytes(version);
    if version != CHECKPOINT_FORMAT_VERSION {
        return Err(Error::Format(format!("unsupported FSOM version {version}")));
    }
    let json_len = r.u64()?;
    let mut json = Vec::new();
    (&mut r.0).take(json_len).read_to_end(&mut json).map_err(|e| Error::Format(e.to_string()))?;
    if json.len() as u64 != json_len {
        return Err(Error::Format("truncated checkpoint config".into()));
    }
    let cfg: VaeConfig = serde_json::from_slice(&json)?;
    cfg.validate()?;
    let [e1, e2] = cfg.encoder_units;
    let [d1, d2] = cfg.decoder_units;
    let (m, d, l1) = (cfg.input_dim, cfg.latent_dim, cfg.l1_coeff);
    let encoder = [r.block(m, e1, &cfg, "encoder 1")?, r.block(e1, e2, &cfg, "encoder 2")?];
    let mu_head = r.affine(e2, d, true, l1, "mu head")?;
    let logvar_head = r.affine(e2, d, true, l1, "logvar head")?;
    let decoder = [r.block(d, d1, &cfg, "decoder 1")?, r.block(d1, d2, &cfg, "decoder 2")?];
    let output = r.affine(d2, m, true, l1, "output")?;
    let mut trailing = [0u8; 1];
    if r.0.read(&mut trailing).map_err(|e| Error::Format(e.to_string()))? != 0 {
        return Err(Error::Format("trailing bytes after checkpoint".into()));
    }
    Ok(VaeModel::from_parts(cfg, encoder, mu_head, logvar_head, decoder, output))
}
