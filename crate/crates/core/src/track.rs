use alloc::vec::Vec;
use core::ops::Deref;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
#[error("probability {value} at frame {index} is outside [0, 1]")]
pub struct OutOfRange {
    pub index: usize,
    pub value: f32,
}

/// Per-frame inclusion probabilities, one value in `[0, 1]` per 20 ms frame.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ProbabilityTrack(Vec<f32>);

impl ProbabilityTrack {
    pub fn new(probs: Vec<f32>) -> Result<Self, OutOfRange> {
        if let Some((index, &value)) = probs
            .iter()
            .enumerate()
            .find(|(_, p)| !(0.0..=1.0).contains(*p))
        {
            return Err(OutOfRange { index, value });
        }
        Ok(Self(probs))
    }

    /// Builds a track without validation. Out-of-range values make the
    /// segmenters' threshold comparisons meaningless, so callers must
    /// guarantee the range themselves.
    pub fn new_unchecked(probs: Vec<f32>) -> Self {
        Self(probs)
    }

    pub fn as_slice(&self) -> &[f32] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f32> {
        self.0
    }
}

impl Deref for ProbabilityTrack {
    type Target = [f32];

    fn deref(&self) -> &[f32] {
        &self.0
    }
}

impl TryFrom<Vec<f32>> for ProbabilityTrack {
    type Error = OutOfRange;

    fn try_from(v: Vec<f32>) -> Result<Self, OutOfRange> {
        Self::new(v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn rejects_values_outside_unit_interval() {
        assert!(ProbabilityTrack::new(vec![0.0, 0.5, 1.0]).is_ok());
        assert_eq!(
            ProbabilityTrack::new(vec![0.1, 1.5]),
            Err(OutOfRange { index: 1, value: 1.5 })
        );
        assert!(ProbabilityTrack::new(vec![f32::NAN]).is_err());
        assert!(ProbabilityTrack::new(vec![-0.0]).is_ok());
    }
}
