//! Log-likelihood-ratio grids aligned with symbol pages.

use crate::error::CoreError;
use crate::Result;

/// Global LLR clip magnitude. Beyond 40 the implied error probability is
/// below 1e-17, and tanh/atanh saturate in f64.
pub const LLR_CLIP: f64 = 40.0;

/// Clamps an LLR to the global clip range, mapping NaN-free inputs only.
#[inline]
pub fn clip_llr(l: f64) -> f64 {
    l.clamp(-LLR_CLIP, LLR_CLIP)
}

/// A 2D array of log-likelihood ratios aligned with a [`crate::SymbolPage`].
/// The same type serves prior, extrinsic, and posterior roles.
#[derive(Debug, Clone, PartialEq)]
pub struct LlrGrid {
    height: usize,
    width: usize,
    values: Vec<f64>,
}

impl LlrGrid {
    /// All-zero grid (no information).
    pub fn zeros(height: usize, width: usize) -> Self {
        LlrGrid {
            height,
            width,
            values: vec![0.0; height * width],
        }
    }

    pub fn from_values(height: usize, width: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != height * width {
            return Err(CoreError::mismatch(format!(
                "LLR grid {}x{} needs {} values, got {}",
                height,
                width,
                height * width,
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(CoreError::invalid("LLR grid contains non-finite values"));
        }
        Ok(LlrGrid {
            height,
            width,
            values,
        })
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.width + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.values[i * self.width + j] = v;
    }

    /// Row-major view of all values.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }
}
