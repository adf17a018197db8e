//! Binary embedding files.
//!
//! Layout: magic `GDAE`, then little-endian `u32` kind, dim, |E|, |R|, then
//! every parameter table as row-major little-endian `f32`. Walk tables
//! (kind [`WALK_KIND`]) carry their entity ids as `u32` before the matrix.
//! Bit 8 of the kind word marks a TransE model with the l1 norm.

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use super::model::{EmbeddingModel, Matrix};
use super::{ModelConfig, ModelKind, Norm};
use crate::error::{Error, Result};
use crate::kg::EntityId;

pub const MAGIC: &[u8; 4] = b"GDAE";
pub(crate) const WALK_KIND: u32 = 6;
const L1_FLAG: u32 = 1 << 8;

fn sidecar(path: &Path) -> PathBuf {
    path.with_extension("json")
}

struct Header {
    kind: u32,
    dim: usize,
    entities: usize,
    relations: usize,
}

fn write_header<W: Write>(w: &mut W, h: &Header) -> std::io::Result<()> {
    w.write_all(MAGIC)?;
    for v in [h.kind, h.dim as u32, h.entities as u32, h.relations as u32] {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

fn read_u32<R: Read>(r: &mut R) -> std::io::Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_header<R: Read>(r: &mut R, path: &Path) -> Result<Header> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic).map_err(|e| Error::io(path, e))?;
    if &magic != MAGIC {
        return Err(Error::Format(format!("{}: not an embedding file", path.display())));
    }
    let mut v = [0u32; 4];
    for x in &mut v {
        *x = read_u32(r).map_err(|e| Error::io(path, e))?;
    }
    Ok(Header {
        kind: v[0],
        dim: v[1] as usize,
        entities: v[2] as usize,
        relations: v[3] as usize,
    })
}

fn write_matrix<W: Write>(w: &mut W, m: &Matrix) -> std::io::Result<()> {
    for &x in m.as_slice() {
        w.write_all(&(x as f32).to_le_bytes())?;
    }
    Ok(())
}

fn read_matrix<R: Read>(r: &mut R, rows: usize, cols: usize, path: &Path) -> Result<Matrix> {
    let mut buf = vec![0u8; rows * cols * 4];
    r.read_exact(&mut buf).map_err(|e| Error::io(path, e))?;
    let data = buf
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
        .collect();
    Matrix::from_vec(rows, cols, data)
}

fn expect_eof<R: Read>(r: &mut R, path: &Path) -> Result<()> {
    let mut rest = [0u8; 1];
    match r.read(&mut rest).map_err(|e| Error::io(path, e))? {
        0 => Ok(()),
        _ => Err(Error::Format(format!("{}: trailing bytes after the last table", path.display()))),
    }
}

/// Writes `model` to `path` and its config to `path` with a `.json` extension.
pub fn save_model(path: &Path, model: &EmbeddingModel, config: &ModelConfig) -> Result<()> {
    if config.kind != model.kind() || config.dim != model.dim() {
        return Err(Error::Inconsistent(format!(
            "config describes {} dim {}, model is {} dim {}",
            config.kind,
            config.dim,
            model.kind(),
            model.dim()
        )));
    }
    let mut kind = model.kind().code();
    if model.kind() == ModelKind::TransE && model.norm() == Norm::L1 {
        kind |= L1_FLAG;
    }
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let header = Header {
        kind,
        dim: model.dim(),
        entities: model.num_entities(),
        relations: model.num_relations(),
    };
    (|| {
        write_header(&mut w, &header)?;
        for m in model.params() {
            write_matrix(&mut w, m)?;
        }
        w.flush()
    })()
    .map_err(|e| Error::io(path, e))?;
    let side = sidecar(path);
    fs::write(&side, serde_json::to_vec_pretty(config)?).map_err(|e| Error::io(&side, e))
}

/// Reads a model written by [`save_model`]. Values are rounded to `f32`.
pub fn load_model(path: &Path) -> Result<(EmbeddingModel, ModelConfig)> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut r = BufReader::new(file);
    let h = read_header(&mut r, path)?;
    let kind = ModelKind::from_code(h.kind & 0xff)
        .ok_or_else(|| Error::Format(format!("{}: kind code {} is not a link-prediction model", path.display(), h.kind)))?;
    let mut params = Vec::new();
    for spec in kind.layout() {
        let rows = match spec.axis {
            super::Axis::Entity => h.entities,
            super::Axis::Relation => h.relations,
        };
        params.push(read_matrix(&mut r, rows, h.dim, path)?);
    }
    expect_eof(&mut r, path)?;
    let norm = if h.kind & L1_FLAG != 0 { Norm::L1 } else { Norm::L2 };
    let model = EmbeddingModel::from_params(kind, h.dim, h.entities, h.relations, params)?.with_norm(norm);
    let side = sidecar(path);
    let text = fs::read(&side).map_err(|e| Error::io(&side, e))?;
    let config: ModelConfig = serde_json::from_slice(&text)?;
    if config.kind != kind || config.dim != h.dim {
        return Err(Error::Inconsistent(format!("{}: sidecar does not match the binary header", side.display())));
    }
    Ok((model, config))
}

/// Writes an entity-indexed vector table (walk embeddings).
pub fn write_table(path: &Path, ids: &[EntityId], vectors: &Matrix) -> Result<()> {
    if ids.len() != vectors.rows() {
        return Err(Error::Inconsistent(format!("{} ids for {} vectors", ids.len(), vectors.rows())));
    }
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let header = Header {
        kind: WALK_KIND,
        dim: vectors.cols(),
        entities: ids.len(),
        relations: 0,
    };
    (|| {
        write_header(&mut w, &header)?;
        for id in ids {
            w.write_all(&id.0.to_le_bytes())?;
        }
        write_matrix(&mut w, vectors)?;
        w.flush()
    })()
    .map_err(|e| Error::io(path, e))
}

pub fn read_table(path: &Path) -> Result<(Vec<EntityId>, Matrix)> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut r = BufReader::new(file);
    let h = read_header(&mut r, path)?;
    if h.kind != WALK_KIND {
        return Err(Error::Format(format!("{}: not a walk embedding table", path.display())));
    }
    let mut ids = Vec::with_capacity(h.entities);
    for _ in 0..h.entities {
        ids.push(EntityId(read_u32(&mut r).map_err(|e| Error::io(path, e))?));
    }
    let m = read_matrix(&mut r, h.entities, h.dim, path)?;
    expect_eof(&mut r, path)?;
    Ok((ids, m))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn model_round_trip_is_f32_exact() {
        let dir = tempfile::tempdir().unwrap();
        for kind in ModelKind::ALL {
            let mut rng = ChaCha8Rng::seed_from_u64(2);
            let cfg = ModelConfig {
                dim: 5,
                norm: Norm::L1,
                ..ModelConfig::defaults(kind)
            };
            let m = EmbeddingModel::init(kind, 5, 7, 3, &mut rng).with_norm(Norm::L1);
            let path = dir.path().join(format!("{kind}.bin"));
            save_model(&path, &m, &cfg).unwrap();
            let (back, cfg2) = load_model(&path).unwrap();
            assert_eq!(cfg2, cfg);
            assert_eq!(back.kind(), kind);
            assert_eq!(back.norm() == Norm::L1, kind == ModelKind::TransE);
            for (a, b) in m.params().iter().zip(back.params()) {
                for (x, y) in a.as_slice().iter().zip(b.as_slice()) {
                    assert_eq!(*x as f32 as f64, *y);
                }
            }
            let size = fs::metadata(&path).unwrap().len() as usize;
            let floats: usize = m.params().iter().map(|p| p.as_slice().len()).sum();
            assert_eq!(size, 4 + 16 + 4 * floats);
        }
    }

    #[test]
    fn table_round_trip_and_kind_check() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("walk.bin");
        let m = Matrix::from_vec(2, 3, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.5]).unwrap();
        write_table(&path, &[EntityId(4), EntityId(9)], &m).unwrap();
        let (ids, back) = read_table(&path).unwrap();
        assert_eq!(ids, [EntityId(4), EntityId(9)]);
        assert_eq!(back, m);
        assert!(load_model(&path).is_err());
    }

    #[test]
    fn bad_magic_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.bin");
        fs::write(&path, b"NOPE0000000000000000").unwrap();
        assert!(matches!(read_table(&path), Err(Error::Format(_))));
    }
}
