//! Binary model container and the on-disk per-fold model store.
//!
//! Container layout (all integers little-endian):
//!
//! ```text
//! "MYOX"            magic, 4 bytes
//! u16               format version (1)
//! u8                variant tag (1 convnet, 2 texture, 3 hybrid)
//! u32               c1x1 filter count
//! u32               concatenated feature length
//! u8                encoder frozen flag
//! u16, u16          encoder / head layer counts
//! layer table       kind byte + per-kind hyperparameters
//! parameters        per layer: weights then bias, f32
//! u64               FNV-1a 64 checksum of all preceding bytes
//! ```
//!
//! The store maps an experiment name and fold key to
//! `<root>/<experiment>/<key>.model`; writes go to a temp file in the same
//! directory and are renamed into place.

use std::fs;
use std::path::PathBuf;

use myox_core::nn::{Conv2d, Dense, Dropout, Flatten, Layer, MaxPool2, Model, Relu, Variant};
use thiserror::Error;

pub const MAGIC: &[u8; 4] = b"MYOX";
pub const FORMAT_VERSION: u16 = 1;

#[derive(Debug, Error)]
pub enum ModelStoreError {
    #[error("model file not found: {0}")]
    Missing(PathBuf),
    #[error("bad magic bytes (not a model container)")]
    BadMagic,
    #[error("unsupported container version {0}")]
    UnsupportedVersion(u16),
    #[error("corrupt container at byte {offset}: {detail}")]
    Corrupt { offset: usize, detail: String },
    #[error("checksum mismatch: stored {stored:#018x}, computed {computed:#018x}")]
    ChecksumMismatch { stored: u64, computed: u64 },
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}

const KIND_CONV: u8 = 1;
const KIND_POOL: u8 = 2;
const KIND_RELU: u8 = 3;
const KIND_DROPOUT: u8 = 4;
const KIND_FLATTEN: u8 = 5;
const KIND_DENSE: u8 = 6;

fn push_layer_table(out: &mut Vec<u8>, layers: &[Layer<f32>]) {
    for layer in layers {
        match layer {
            Layer::Conv(l) => {
                out.push(KIND_CONV);
                out.extend((l.kh as u16).to_le_bytes());
                out.extend((l.kw as u16).to_le_bytes());
                out.extend((l.cin as u32).to_le_bytes());
                out.extend((l.cout as u32).to_le_bytes());
            }
            Layer::Pool(_) => out.push(KIND_POOL),
            Layer::Relu(_) => out.push(KIND_RELU),
            Layer::Dropout(l) => {
                out.push(KIND_DROPOUT);
                out.extend(l.rate.to_le_bytes());
            }
            Layer::Flatten(_) => out.push(KIND_FLATTEN),
            Layer::Dense(l) => {
                out.push(KIND_DENSE);
                out.extend((l.input as u32).to_le_bytes());
                out.extend((l.output as u32).to_le_bytes());
            }
        }
    }
}

fn push_params(out: &mut Vec<u8>, layers: &[Layer<f32>]) {
    for layer in layers {
        let (weights, bias): (&[f32], &[f32]) = match layer {
            Layer::Conv(l) => (&l.weights, &l.bias),
            Layer::Dense(l) => (&l.weights, &l.bias),
            _ => continue,
        };
        for v in weights.iter().chain(bias) {
            out.extend(v.to_le_bytes());
        }
    }
}

/// Serialize a model to the container format.
pub fn encode_model(model: &Model<f32>) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend(MAGIC);
    out.extend(FORMAT_VERSION.to_le_bytes());
    out.push(model.variant.tag());
    out.extend((model.c1x1 as u32).to_le_bytes());
    out.extend((model.feature_len as u32).to_le_bytes());
    out.push(model.encoder_frozen as u8);
    out.extend((model.encoder.len() as u16).to_le_bytes());
    out.extend((model.head.len() as u16).to_le_bytes());
    push_layer_table(&mut out, &model.encoder);
    push_layer_table(&mut out, &model.head);
    push_params(&mut out, &model.encoder);
    push_params(&mut out, &model.head);
    let checksum = fnv1a64(&out);
    out.extend(checksum.to_le_bytes());
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], ModelStoreError> {
        if self.pos + n > self.bytes.len() {
            return Err(ModelStoreError::Corrupt {
                offset: self.pos,
                detail: format!("wanted {n} bytes, {} remain", self.bytes.len() - self.pos),
            });
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8, ModelStoreError> {
        Ok(self.take(1)?[0])
    }

    fn u16(&mut self) -> Result<u16, ModelStoreError> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    fn u32(&mut self) -> Result<u32, ModelStoreError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64, ModelStoreError> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f32_into(&mut self, dst: &mut [f32]) -> Result<(), ModelStoreError> {
        let raw = self.take(dst.len() * 4)?;
        for (v, chunk) in dst.iter_mut().zip(raw.chunks_exact(4)) {
            *v = f32::from_le_bytes(chunk.try_into().unwrap());
        }
        Ok(())
    }
}

fn read_layer_table(r: &mut Reader, count: usize) -> Result<Vec<Layer<f32>>, ModelStoreError> {
    let mut layers = Vec::with_capacity(count);
    for _ in 0..count {
        let offset = r.pos;
        let kind = r.u8()?;
        let layer = match kind {
            KIND_CONV => {
                let kh = r.u16()? as usize;
                let kw = r.u16()? as usize;
                let cin = r.u32()? as usize;
                let cout = r.u32()? as usize;
                if kh.is_multiple_of(2) || kw.is_multiple_of(2) || kh == 0 || cin == 0 || cout == 0 {
                    return Err(ModelStoreError::Corrupt {
                        offset,
                        detail: format!("bad conv shape {kh}x{kw}x{cin}x{cout}"),
                    });
                }
                Layer::Conv(Conv2d::new(kh, kw, cin, cout))
            }
            KIND_POOL => Layer::Pool(MaxPool2::new()),
            KIND_RELU => Layer::Relu(Relu::new()),
            KIND_DROPOUT => {
                let rate = r.f64()?;
                if !(0.0..1.0).contains(&rate) {
                    return Err(ModelStoreError::Corrupt {
                        offset,
                        detail: format!("bad dropout rate {rate}"),
                    });
                }
                Layer::Dropout(Dropout::new(rate))
            }
            KIND_FLATTEN => Layer::Flatten(Flatten::new()),
            KIND_DENSE => {
                let input = r.u32()? as usize;
                let output = r.u32()? as usize;
                if input == 0 || output == 0 {
                    return Err(ModelStoreError::Corrupt {
                        offset,
                        detail: format!("bad dense shape {input}x{output}"),
                    });
                }
                Layer::Dense(Dense::new(input, output))
            }
            other => {
                return Err(ModelStoreError::Corrupt {
                    offset,
                    detail: format!("unknown layer kind {other}"),
                })
            }
        };
        layers.push(layer);
    }
    Ok(layers)
}

fn read_params(r: &mut Reader, layers: &mut [Layer<f32>]) -> Result<(), ModelStoreError> {
    for layer in layers {
        match layer {
            Layer::Conv(l) => {
                r.f32_into(&mut l.weights)?;
                r.f32_into(&mut l.bias)?;
            }
            Layer::Dense(l) => {
                r.f32_into(&mut l.weights)?;
                r.f32_into(&mut l.bias)?;
            }
            _ => {}
        }
    }
    Ok(())
}

/// Deserialize a container, verifying the checksum trailer.
pub fn decode_model(bytes: &[u8]) -> Result<Model<f32>, ModelStoreError> {
    if bytes.len() < MAGIC.len() + 2 + 8 {
        return Err(ModelStoreError::Corrupt {
            offset: 0,
            detail: "file too short".into(),
        });
    }
    let (body, trailer) = bytes.split_at(bytes.len() - 8);
    let stored = u64::from_le_bytes(trailer.try_into().unwrap());
    let computed = fnv1a64(body);
    if stored != computed {
        return Err(ModelStoreError::ChecksumMismatch { stored, computed });
    }
    let mut r = Reader {
        bytes: body,
        pos: 0,
    };
    if r.take(4)? != MAGIC {
        return Err(ModelStoreError::BadMagic);
    }
    let version = r.u16()?;
    if version != FORMAT_VERSION {
        return Err(ModelStoreError::UnsupportedVersion(version));
    }
    let variant_tag = r.u8()?;
    let variant = Variant::from_tag(variant_tag).ok_or(ModelStoreError::Corrupt {
        offset: r.pos - 1,
        detail: format!("unknown variant tag {variant_tag}"),
    })?;
    let c1x1 = r.u32()? as usize;
    let feature_len = r.u32()? as usize;
    let encoder_frozen = r.u8()? != 0;
    let n_encoder = r.u16()? as usize;
    let n_head = r.u16()? as usize;
    let mut encoder = read_layer_table(&mut r, n_encoder)?;
    let mut head = read_layer_table(&mut r, n_head)?;
    read_params(&mut r, &mut encoder)?;
    read_params(&mut r, &mut head)?;
    if r.pos != body.len() {
        return Err(ModelStoreError::Corrupt {
            offset: r.pos,
            detail: format!("{} trailing bytes", body.len() - r.pos),
        });
    }
    Ok(Model {
        variant,
        c1x1,
        encoder,
        head,
        feature_len,
        encoder_frozen,
    })
}

/// Directory-backed store of per-fold models.
pub struct ModelStore {
    root: PathBuf,
}

impl ModelStore {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        ModelStore { root: root.into() }
    }

    pub fn path_for(&self, experiment: &str, key: &str) -> PathBuf {
        self.root.join(experiment).join(format!("{key}.model"))
    }

    pub fn exists(&self, experiment: &str, key: &str) -> bool {
        self.path_for(experiment, key).is_file()
    }

    /// Atomic save: write to a temp file in the target directory, then
    /// rename over the final name.
    pub fn save(
        &self,
        experiment: &str,
        key: &str,
        model: &Model<f32>,
    ) -> Result<PathBuf, ModelStoreError> {
        let path = self.path_for(experiment, key);
        let dir = path.parent().expect("store path has a parent");
        fs::create_dir_all(dir)?;
        let tmp = dir.join(format!(".{key}.model.tmp"));
        fs::write(&tmp, encode_model(model))?;
        fs::rename(&tmp, &path)?;
        Ok(path)
    }

    pub fn load(&self, experiment: &str, key: &str) -> Result<Model<f32>, ModelStoreError> {
        let path = self.path_for(experiment, key);
        if !path.is_file() {
            return Err(ModelStoreError::Missing(path));
        }
        let bytes = fs::read(&path)?;
        decode_model(&bytes)
    }
}
