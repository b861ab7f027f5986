//! Binary policy checkpoints.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! magic          4 bytes  "RWCK"
//! format         u32      currently 1
//! scalar width   u8       4 (f32) or 8 (f64)
//! dims           6 × u64  embedding_dim, hidden_size, mlp_size, layers,
//!                         entity rows, relation rows (STAY included)
//! vocab hashes   3 × 32   sha256 of entity, relation, type names
//! param version  u64
//! tensor count   u32
//! per tensor     rows u64, cols u64, rows·cols scalars (row-major)
//! ```
//!
//! Tensors appear in [`PolicyNetwork::tensors`] order.

use std::io::{self, Read, Write};

use thiserror::Error;

use crate::kg::VocabularyHashes;
use crate::policy::{PolicyConfig, PolicyNetwork};
use crate::scalar::Scalar;
use crate::tensor::Tensor;

const MAGIC: &[u8; 4] = b"RWCK";
const FORMAT: u32 = 1;

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("not a checkpoint (bad magic)")]
    BadMagic,
    #[error("unsupported checkpoint format {0}")]
    UnsupportedFormat(u32),
    #[error("checkpoint stores {found}-byte scalars, expected {expected}")]
    ScalarWidth { expected: u8, found: u8 },
    #[error("{0} vocabulary hash does not match the graph")]
    VocabularyMismatch(&'static str),
    #[error("corrupt checkpoint: {0}")]
    Corrupt(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

fn put_u64<W: Write>(w: &mut W, v: u64) -> io::Result<()> {
    w.write_all(&v.to_le_bytes())
}

fn get_array<const N: usize, R: Read>(r: &mut R) -> io::Result<[u8; N]> {
    let mut b = [0u8; N];
    r.read_exact(&mut b)?;
    Ok(b)
}

fn get_u64<R: Read>(r: &mut R) -> io::Result<u64> {
    get_array::<8, _>(r).map(u64::from_le_bytes)
}

pub fn write_checkpoint<F: Scalar, W: Write>(
    net: &PolicyNetwork<F>,
    hashes: &VocabularyHashes,
    mut out: W,
) -> io::Result<()> {
    out.write_all(MAGIC)?;
    out.write_all(&FORMAT.to_le_bytes())?;
    out.write_all(&[F::BYTES])?;
    let c = net.config();
    for d in [
        c.embedding_dim,
        c.hidden_size,
        c.mlp_size,
        c.layers,
        net.num_entities(),
        net.relation_rows(),
    ] {
        put_u64(&mut out, d as u64)?;
    }
    for h in [&hashes.entities, &hashes.relations, &hashes.types] {
        out.write_all(h)?;
    }
    put_u64(&mut out, net.version())?;
    let tensors = net.tensors();
    out.write_all(&(tensors.len() as u32).to_le_bytes())?;
    let mut buf = Vec::new();
    for (_, t) in tensors {
        put_u64(&mut out, t.rows() as u64)?;
        put_u64(&mut out, t.cols() as u64)?;
        buf.clear();
        for &v in t.data() {
            v.write_le(&mut buf);
        }
        out.write_all(&buf)?;
    }
    Ok(())
}

/// Reads a checkpoint and checks it against the graph's vocabulary hashes.
pub fn read_checkpoint<F: Scalar, R: Read>(
    mut input: R,
    expected: &VocabularyHashes,
) -> Result<PolicyNetwork<F>, CheckpointError> {
    if &get_array::<4, _>(&mut input)? != MAGIC {
        return Err(CheckpointError::BadMagic);
    }
    let format = u32::from_le_bytes(get_array(&mut input)?);
    if format != FORMAT {
        return Err(CheckpointError::UnsupportedFormat(format));
    }
    let [width] = get_array::<1, _>(&mut input)?;
    if width != F::BYTES {
        return Err(CheckpointError::ScalarWidth {
            expected: F::BYTES,
            found: width,
        });
    }
    let mut dims = [0usize; 6];
    for d in &mut dims {
        *d = usize::try_from(get_u64(&mut input)?)
            .map_err(|_| CheckpointError::Corrupt("dimension overflows usize".into()))?;
    }
    for (name, want) in [
        ("entity", &expected.entities),
        ("relation", &expected.relations),
        ("type", &expected.types),
    ] {
        if &get_array::<32, _>(&mut input)? != want {
            return Err(CheckpointError::VocabularyMismatch(name));
        }
    }
    let version = get_u64(&mut input)?;
    let config = PolicyConfig {
        embedding_dim: dims[0],
        hidden_size: dims[1],
        mlp_size: dims[2],
        layers: dims[3],
    };
    let mut net = PolicyNetwork::<F>::init(config, dims[4], dims[5], 0)
        .map_err(|e| CheckpointError::Corrupt(e.to_string()))?;
    let count = u32::from_le_bytes(get_array(&mut input)?) as usize;
    let slots = net.tensors_mut();
    if count != slots.len() {
        return Err(CheckpointError::Corrupt(format!(
            "{count} tensors stored, network has {}",
            slots.len()
        )));
    }
    let width = usize::from(F::BYTES);
    for (k, slot) in slots.into_iter().enumerate() {
        let rows = get_u64(&mut input)? as usize;
        let cols = get_u64(&mut input)? as usize;
        if (rows, cols) != slot.shape() {
            return Err(CheckpointError::Corrupt(format!(
                "tensor {k} is {rows}×{cols}, expected {:?}",
                slot.shape()
            )));
        }
        let mut bytes = vec![0u8; rows * cols * width];
        input.read_exact(&mut bytes)?;
        let data = bytes.chunks_exact(width).map(F::read_le).collect();
        *slot = Tensor::from_vec(rows, cols, data);
    }
    if input.read(&mut [0u8; 1])? != 0 {
        return Err(CheckpointError::Corrupt("trailing bytes".into()));
    }
    net.version = version;
    Ok(net)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hashes(seed: u8) -> VocabularyHashes {
        VocabularyHashes {
            entities: [seed; 32],
            relations: [seed + 1; 32],
            types: [seed + 2; 32],
        }
    }

    fn net<F: Scalar>() -> PolicyNetwork<F> {
        let cfg = PolicyConfig {
            embedding_dim: 3,
            hidden_size: 4,
            mlp_size: 5,
            layers: 2,
        };
        PolicyNetwork::init(cfg, 6, 4, 11).unwrap()
    }

    #[test]
    fn roundtrip_both_widths() {
        let mut a: PolicyNetwork<f64> = net();
        a.version = 17;
        let mut buf = Vec::new();
        write_checkpoint(&a, &hashes(1), &mut buf).unwrap();
        let b: PolicyNetwork<f64> = read_checkpoint(&buf[..], &hashes(1)).unwrap();
        assert_eq!(a, b);

        let c: PolicyNetwork<f32> = net();
        let mut buf = Vec::new();
        write_checkpoint(&c, &hashes(1), &mut buf).unwrap();
        assert_eq!(read_checkpoint::<f32, _>(&buf[..], &hashes(1)).unwrap(), c);
        assert!(matches!(
            read_checkpoint::<f64, _>(&buf[..], &hashes(1)),
            Err(CheckpointError::ScalarWidth { expected: 8, found: 4 })
        ));
    }

    #[test]
    fn hash_mismatch_rejected() {
        let a: PolicyNetwork<f64> = net();
        let mut buf = Vec::new();
        write_checkpoint(&a, &hashes(1), &mut buf).unwrap();
        let mut other = hashes(1);
        other.relations[0] ^= 1;
        assert!(matches!(
            read_checkpoint::<f64, _>(&buf[..], &other),
            Err(CheckpointError::VocabularyMismatch("relation"))
        ));
    }

    #[test]
    fn truncation_and_garbage_rejected() {
        let a: PolicyNetwork<f64> = net();
        let mut buf = Vec::new();
        write_checkpoint(&a, &hashes(1), &mut buf).unwrap();
        assert!(read_checkpoint::<f64, _>(&buf[..buf.len() - 3], &hashes(1)).is_err());
        buf.push(0);
        assert!(matches!(
            read_checkpoint::<f64, _>(&buf[..], &hashes(1)),
            Err(CheckpointError::Corrupt(_))
        ));
        assert!(matches!(
            read_checkpoint::<f64, _>(&b"nope"[..], &hashes(1)),
            Err(CheckpointError::BadMagic)
        ));
    }
}
