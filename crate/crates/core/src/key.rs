//! Binary key file holding everything needed for extraction.
//!
//! Layout, little-endian throughout:
//!
//! ```text
//! "SISK" | version u16 | gamma u8 | k u8 | n u8 | reserved u8
//! c_max f64 | tau f64 | count u64 | count × (x f32, y f32, z f32)
//! layers u16 | layers × (in u16, out u16, kernel u16, stride u16)
//! per layer: weights f32..., bias f32...
//! ```

use std::path::Path;

use crate::error::{Error, Result};
use crate::fixedpoint::QuantParams;
use crate::opacity::{Autoencoder, KERNEL, STRIDE};
use crate::scene::SH_COEFFS;
use crate::sh_stego::StegoParams;

pub const MAGIC: [u8; 4] = *b"SISK";
pub const VERSION: u16 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct StegoKey {
    pub version: u16,
    pub gamma: u32,
    pub k: u32,
    pub n: u32,
    pub c_max: f64,
    pub tau: f64,
    pub coords: Vec<[f32; 3]>,
    pub model: Autoencoder,
}

impl StegoKey {
    pub fn new(params: &StegoParams, tau: f64, coords: Vec<[f32; 3]>, model: Autoencoder) -> Self {
        Self {
            version: VERSION,
            gamma: params.quant().gamma(),
            k: params.k(),
            n: SH_COEFFS as u32,
            c_max: params.quant().c_max(),
            tau,
            coords,
            model,
        }
    }

    /// Graded stego parameters recorded in the key.
    pub fn stego_params(&self) -> Result<StegoParams> {
        if self.n as usize != SH_COEFFS {
            return Err(Error::InvalidKey(format!("unsupported coefficient count {}", self.n)));
        }
        StegoParams::new(self.k, QuantParams::new(self.gamma, self.c_max)?)
    }

    fn validate(&self) -> Result<()> {
        if self.coords.is_empty() {
            return Err(Error::EmptyIndexSet);
        }
        if !(0.0..1.0).contains(&self.tau) {
            return Err(Error::InvalidKey(format!("threshold {} outside [0, 1)", self.tau)));
        }
        for (name, v) in [("gamma", self.gamma), ("k", self.k), ("n", self.n)] {
            if v > u8::MAX as u32 {
                return Err(Error::InvalidKey(format!("{name} = {v} does not fit in a byte")));
            }
        }
        self.stego_params()?;
        self.model.check_architecture()
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        self.validate()?;
        let mut out = Vec::with_capacity(34 + self.coords.len() * 12 + 2 + self.model.param_count() * 4 + 32);
        out.extend_from_slice(&MAGIC);
        out.extend_from_slice(&self.version.to_le_bytes());
        out.extend_from_slice(&[self.gamma as u8, self.k as u8, self.n as u8, 0]);
        out.extend_from_slice(&self.c_max.to_le_bytes());
        out.extend_from_slice(&self.tau.to_le_bytes());
        out.extend_from_slice(&(self.coords.len() as u64).to_le_bytes());
        for c in &self.coords {
            for v in c {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out.extend_from_slice(&(self.model.layers.len() as u16).to_le_bytes());
        for layer in &self.model.layers {
            for v in [layer.in_channels, layer.out_channels, KERNEL, STRIDE] {
                out.extend_from_slice(&(v as u16).to_le_bytes());
            }
        }
        for layer in &self.model.layers {
            for &p in layer.weight.iter().chain(&layer.bias) {
                out.extend_from_slice(&(p as f32).to_le_bytes());
            }
        }
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { bytes, pos: 0 };
        let magic: [u8; 4] = r.take(4)?.try_into().expect("4 bytes");
        if magic != MAGIC {
            return Err(Error::BadMagic(magic));
        }
        let version = r.u16()?;
        if version != VERSION {
            return Err(Error::VersionMismatch(version));
        }
        let small = r.take(4)?;
        let (gamma, k, n) = (small[0] as u32, small[1] as u32, small[2] as u32);
        let c_max = r.f64()?;
        let tau = r.f64()?;
        let count = r.u64()?;
        let remaining = (bytes.len() - r.pos) as u64;
        if count.saturating_mul(12) > remaining {
            return Err(Error::TruncatedKey(bytes.len()));
        }
        let mut coords = Vec::with_capacity(count as usize);
        for _ in 0..count {
            coords.push([r.f32()?, r.f32()?, r.f32()?]);
        }

        let mut model = Autoencoder::zeros();
        let layers = r.u16()? as usize;
        if layers != model.layers.len() {
            return Err(Error::InvalidKey(format!("expected {} layers, found {layers}", model.layers.len())));
        }
        for (idx, layer) in model.layers.iter().enumerate() {
            let desc = [r.u16()?, r.u16()?, r.u16()?, r.u16()?].map(usize::from);
            let want = [layer.in_channels, layer.out_channels, KERNEL, STRIDE];
            if desc != want {
                return Err(Error::InvalidKey(format!("layer {idx} descriptor {desc:?}, expected {want:?}")));
            }
        }
        for layer in &mut model.layers {
            for p in layer.weight.iter_mut().chain(layer.bias.iter_mut()) {
                *p = r.f32()? as f64;
            }
        }
        let key = StegoKey {
            version,
            gamma,
            k,
            n,
            c_max,
            tau,
            coords,
            model,
        };
        key.validate()?;
        Ok(key)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_bytes()?)?;
        Ok(())
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_bytes(&std::fs::read(path)?)
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos + n;
        if end > self.bytes.len() {
            return Err(Error::TruncatedKey(self.bytes.len()));
        }
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().expect("2 bytes")))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn f32(&mut self) -> Result<f32> {
        Ok(f32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_key(count: usize) -> StegoKey {
        let mut model = Autoencoder::init(11);
        model.round_to_f32();
        let params = StegoParams::new(17, QuantParams::new(32, 8.0).unwrap()).unwrap();
        let coords = (0..count).map(|i| [i as f32 * 0.1, -0.5, 0.25]).collect();
        StegoKey::new(&params, 0.25, coords, model)
    }

    #[test]
    fn round_trip() {
        let key = sample_key(5);
        let bytes = key.to_bytes().unwrap();
        assert_eq!(bytes.len(), 34 + 5 * 12 + 2 + 4 * 8 + key.model.param_count() * 4);
        let back = StegoKey::from_bytes(&bytes).unwrap();
        assert_eq!(back, key);
        assert_eq!(back.to_bytes().unwrap(), bytes);
        assert_eq!((back.k, back.tau), (17, 0.25));
    }

    #[test]
    fn header_layout() {
        let bytes = sample_key(2).to_bytes().unwrap();
        assert_eq!(&bytes[..4], b"SISK");
        assert_eq!(&bytes[4..6], &[1, 0]);
        assert_eq!(&bytes[6..10], &[32, 17, 16, 0]);
        assert_eq!(&bytes[10..18], &8.0f64.to_le_bytes());
        assert_eq!(&bytes[18..26], &0.25f64.to_le_bytes());
        assert_eq!(&bytes[26..34], &2u64.to_le_bytes());
        assert_eq!(&bytes[38..42], &(-0.5f32).to_le_bytes());
        // descriptor of the first layer
        assert_eq!(&bytes[58..60], &4u16.to_le_bytes());
        assert_eq!(&bytes[60..68], &[1, 0, 8, 0, 5, 0, 2, 0]);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(sample_key(0).to_bytes(), Err(Error::EmptyIndexSet)));
        let bytes = sample_key(3).to_bytes().unwrap();
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(matches!(StegoKey::from_bytes(&bad), Err(Error::BadMagic(_))));
        let mut bad = bytes.clone();
        bad[4] = 2;
        assert!(matches!(StegoKey::from_bytes(&bad), Err(Error::VersionMismatch(2))));
        for cut in [0, 3, 20, 40, bytes.len() - 1] {
            assert!(matches!(StegoKey::from_bytes(&bytes[..cut]), Err(Error::TruncatedKey(_))), "cut {cut}");
        }
        let mut bad = bytes.clone();
        bad[26..34].copy_from_slice(&u64::MAX.to_le_bytes());
        assert!(matches!(StegoKey::from_bytes(&bad), Err(Error::TruncatedKey(_))));
        let mut bad = bytes.clone();
        bad[7] = 30; // k too large for gamma 32
        assert!(StegoKey::from_bytes(&bad).is_err());
        let mut bad = bytes;
        bad[34 + 3 * 12 + 4] = 9; // first layer out channels
        assert!(matches!(StegoKey::from_bytes(&bad), Err(Error::InvalidKey(_))));
    }
}
