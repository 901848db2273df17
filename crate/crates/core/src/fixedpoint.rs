//! Offset-binary fixed-point codec mapping SH coefficients to `γ`-bit codes.
//!
//! A value `v` is clamped to `[-C_max, C_max - q]` and encoded as
//! `round((v + C_max) / q)` with `q = 2·C_max / 2^γ`. Codes are unsigned, so
//! every bit-plane operation downstream works on plain masks and shifts.

use crate::error::{Error, Result};

pub const DEFAULT_GAMMA: u32 = 32;
pub const DEFAULT_C_MAX: f64 = 8.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuantParams {
    gamma: u32,
    c_max: f64,
}

impl Default for QuantParams {
    fn default() -> Self {
        Self {
            gamma: DEFAULT_GAMMA,
            c_max: DEFAULT_C_MAX,
        }
    }
}

impl QuantParams {
    pub fn new(gamma: u32, c_max: f64) -> Result<Self> {
        if !(8..=32).contains(&gamma) {
            return Err(Error::InvalidParams(format!("gamma {gamma} outside [8, 32]")));
        }
        if !(c_max.is_finite() && c_max > 0.0) {
            return Err(Error::InvalidParams(format!("c_max {c_max} must be positive")));
        }
        Ok(Self { gamma, c_max })
    }

    pub fn gamma(&self) -> u32 {
        self.gamma
    }

    pub fn c_max(&self) -> f64 {
        self.c_max
    }

    /// Quantization step `q`.
    pub fn step(&self) -> f64 {
        2.0 * self.c_max / (1u64 << self.gamma) as f64
    }

    /// Largest code, `2^γ - 1`.
    pub fn max_code(&self) -> u32 {
        ((1u64 << self.gamma) - 1) as u32
    }

    pub fn quantize(&self, v: f64) -> Result<u32> {
        if !v.is_finite() {
            return Err(Error::NonFinite(v));
        }
        Ok(self.quantize_finite(v))
    }

    /// `quantize` for callers that already know `v` is finite.
    pub(crate) fn quantize_finite(&self, v: f64) -> u32 {
        let q = self.step();
        let v = v.clamp(-self.c_max, self.c_max - q);
        let code = ((v + self.c_max) / q).round_ties_even();
        (code as u64).min(self.max_code() as u64) as u32
    }

    /// Nearest `f32` to `code·q - C_max`.
    pub fn dequantize(&self, code: u32) -> f32 {
        debug_assert!(code as u64 <= self.max_code() as u64);
        (code as f64 * self.step() - self.c_max) as f32
    }
}
