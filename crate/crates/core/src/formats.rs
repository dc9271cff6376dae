//! Binary exchange formats: SFCP probability tracks and SFCM model
//! checkpoints. All multi-byte values are little-endian.
//!
//! ```text
//! SFCP:  "SFCP" | count: u32 | count x f32
//! SFCM:  "SFCM" | version: u16 | C: u32 | feature_dim: u32 | hidden: u32
//!        | mean, std: feature_dim x f32 | w1, b1, w2, b2: f32
//! ```

use alloc::vec::Vec;

use thiserror::Error;

use crate::features::FEATURE_DIM;
use crate::model::{Mlp, Normalizer, SfcModel};
use crate::track::ProbabilityTrack;

pub const SFCP_MAGIC: &[u8; 4] = b"SFCP";
pub const CHECKPOINT_MAGIC: &[u8; 4] = b"SFCM";
pub const CHECKPOINT_VERSION: u16 = 1;

const CHECKPOINT_HEADER: usize = 4 + 2 + 4 * 3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SfcpError {
    #[error("not an SFCP file (bad magic)")]
    BadMagic,
    #[error("SFCP header declares {declared} values but payload holds {bytes} bytes")]
    CountMismatch { declared: u32, bytes: usize },
    #[error("probability {value} at frame {index} is outside [0, 1]")]
    ValueOutOfRange { index: usize, value: f32 },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CheckpointError {
    #[error("not a model checkpoint (bad magic)")]
    BadMagic,
    #[error("unsupported checkpoint version {0}")]
    UnsupportedVersion(u16),
    #[error("checkpoint truncated or padded: expected {expected} bytes, found {found}")]
    SizeMismatch { expected: usize, found: usize },
    #[error("checkpoint feature dimension {0} does not match this build")]
    FeatureDim(u32),
    #[error("checkpoint holds non-finite values")]
    NonFinite,
    #[error("cannot save a model whose normalizer is not fitted")]
    UnfittedModel,
}

pub fn encode_sfcp(track: &[f32]) -> Vec<u8> {
    let mut out = Vec::with_capacity(8 + 4 * track.len());
    out.extend_from_slice(SFCP_MAGIC);
    out.extend_from_slice(&(track.len() as u32).to_le_bytes());
    for p in track {
        out.extend_from_slice(&p.to_le_bytes());
    }
    out
}

pub fn decode_sfcp(bytes: &[u8]) -> Result<ProbabilityTrack, SfcpError> {
    if bytes.len() < 8 || &bytes[..4] != SFCP_MAGIC {
        return Err(SfcpError::BadMagic);
    }
    let declared = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
    let payload = &bytes[8..];
    if payload.len() as u64 != declared as u64 * 4 {
        return Err(SfcpError::CountMismatch {
            declared,
            bytes: payload.len(),
        });
    }
    let values: Vec<f32> = payload
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
        .collect();
    ProbabilityTrack::new(values)
        .map_err(|e| SfcpError::ValueOutOfRange { index: e.index, value: e.value })
}

pub fn encode_checkpoint(model: &SfcModel) -> Result<Vec<u8>, CheckpointError> {
    let norm = model.normalizer().ok_or(CheckpointError::UnfittedModel)?;
    let mlp = model.mlp();
    let mut out = Vec::with_capacity(
        CHECKPOINT_HEADER + 4 * (2 * FEATURE_DIM + mlp.params().len()),
    );
    out.extend_from_slice(CHECKPOINT_MAGIC);
    out.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
    for v in [model.context_radius(), FEATURE_DIM, mlp.hidden_dim()] {
        out.extend_from_slice(&(v as u32).to_le_bytes());
    }
    let floats = norm
        .mean
        .iter()
        .chain(&norm.std)
        .copied()
        .chain(mlp.params().iter().map(|&p| p as f32));
    for f in floats {
        out.extend_from_slice(&f.to_le_bytes());
    }
    Ok(out)
}

pub fn decode_checkpoint(bytes: &[u8]) -> Result<SfcModel, CheckpointError> {
    if bytes.len() < CHECKPOINT_HEADER || &bytes[..4] != CHECKPOINT_MAGIC {
        return Err(CheckpointError::BadMagic);
    }
    let version = u16::from_le_bytes([bytes[4], bytes[5]]);
    if version != CHECKPOINT_VERSION {
        return Err(CheckpointError::UnsupportedVersion(version));
    }
    let word = |at: usize| u32::from_le_bytes(bytes[at..at + 4].try_into().unwrap());
    let (context, feature_dim, hidden) = (word(6) as usize, word(10), word(14) as usize);
    if feature_dim as usize != FEATURE_DIM {
        return Err(CheckpointError::FeatureDim(feature_dim));
    }
    let input = SfcModel::input_dim_for(context);
    let n_floats = 2 * FEATURE_DIM + Mlp::param_count(input, hidden);
    let expected = CHECKPOINT_HEADER + 4 * n_floats;
    if bytes.len() != expected {
        return Err(CheckpointError::SizeMismatch {
            expected,
            found: bytes.len(),
        });
    }
    let floats: Vec<f32> = bytes[CHECKPOINT_HEADER..]
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
        .collect();
    if floats.iter().any(|f| !f.is_finite()) {
        return Err(CheckpointError::NonFinite);
    }
    let normalizer = Normalizer {
        mean: floats[..FEATURE_DIM].to_vec(),
        std: floats[FEATURE_DIM..2 * FEATURE_DIM].to_vec(),
    };
    let params = floats[2 * FEATURE_DIM..].iter().map(|&f| f as f64).collect();
    let mlp = Mlp::from_params(input, hidden, params).expect("length checked above");
    Ok(SfcModel::new(context, mlp).with_normalizer(normalizer))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn sfcp_byte_layout() {
        assert_eq!(encode_sfcp(&[]), b"SFCP\0\0\0\0");
        assert_eq!(
            encode_sfcp(&[0.5]),
            [0x53, 0x46, 0x43, 0x50, 1, 0, 0, 0, 0, 0, 0, 0x3F]
        );
    }

    #[test]
    fn sfcp_round_trip_is_bitwise() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let track: Vec<f32> = (0..10_000).map(|_| rng.gen::<f32>()).collect();
        let back = decode_sfcp(&encode_sfcp(&track)).unwrap();
        assert!(track.iter().zip(back.iter()).all(|(a, b)| a.to_bits() == b.to_bits()));
        assert_eq!(back.len(), track.len());
    }

    #[test]
    fn sfcp_errors() {
        assert_eq!(decode_sfcp(b"SFCQ\0\0\0\0"), Err(SfcpError::BadMagic));
        assert_eq!(decode_sfcp(b"SFC"), Err(SfcpError::BadMagic));
        let mut b = encode_sfcp(&[0.1, 0.2]);
        b.pop();
        assert_eq!(decode_sfcp(&b), Err(SfcpError::CountMismatch { declared: 2, bytes: 7 }));
        assert_eq!(
            decode_sfcp(&encode_sfcp(&[0.2, 1.5])),
            Err(SfcpError::ValueOutOfRange { index: 1, value: 1.5 })
        );
        assert!(matches!(
            decode_sfcp(&encode_sfcp(&[f32::NAN])),
            Err(SfcpError::ValueOutOfRange { index: 0, .. })
        ));
    }

    fn random_model(seed: u64, context: usize, hidden: usize) -> SfcModel {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mlp = Mlp::init(SfcModel::input_dim_for(context), hidden, &mut rng);
        let normalizer = Normalizer {
            mean: (0..FEATURE_DIM).map(|_| rng.gen_range(-5.0..5.0)).collect(),
            std: (0..FEATURE_DIM).map(|_| rng.gen_range(0.1..3.0)).collect(),
        };
        SfcModel::new(context, mlp).with_normalizer(normalizer).quantized()
    }

    #[test]
    fn checkpoint_round_trip_is_bitwise() {
        for (seed, c, h) in [(1, 10, 64), (2, 0, 1), (3, 3, 7)] {
            let model = random_model(seed, c, h);
            let bytes = encode_checkpoint(&model).unwrap();
            let back = decode_checkpoint(&bytes).unwrap();
            assert_eq!(back, model);
            assert_eq!(encode_checkpoint(&back).unwrap(), bytes);
        }
    }

    #[test]
    fn checkpoint_header() {
        let bytes = encode_checkpoint(&random_model(4, 10, 64)).unwrap();
        assert_eq!(&bytes[..4], b"SFCM");
        assert_eq!(&bytes[4..6], &[1, 0]);
        assert_eq!(&bytes[6..10], &10u32.to_le_bytes());
        assert_eq!(&bytes[10..14], &10u32.to_le_bytes());
        assert_eq!(&bytes[14..18], &64u32.to_le_bytes());
        assert_eq!(bytes.len(), 18 + 4 * (20 + 64 * 210 + 64 + 64 + 1));
    }

    #[test]
    fn checkpoint_errors() {
        let good = encode_checkpoint(&random_model(5, 2, 3)).unwrap();
        let mut bad = good.clone();
        bad[0] = b'X';
        assert_eq!(decode_checkpoint(&bad), Err(CheckpointError::BadMagic));
        let mut v2 = good.clone();
        v2[4] = 2;
        assert_eq!(decode_checkpoint(&v2), Err(CheckpointError::UnsupportedVersion(2)));
        assert!(matches!(
            decode_checkpoint(&good[..good.len() - 1]),
            Err(CheckpointError::SizeMismatch { .. })
        ));
        let unfitted = SfcModel::new(1, Mlp::zeros(SfcModel::input_dim_for(1), 2));
        assert_eq!(encode_checkpoint(&unfitted), Err(CheckpointError::UnfittedModel));
        assert_eq!(decode_checkpoint(&[]), Err(CheckpointError::BadMagic));
    }
}
