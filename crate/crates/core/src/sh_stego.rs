//! Importance-graded bit-plane embedding of hidden SH coefficients.
//!
//! Every cover coefficient is quantized to a `γ`-bit code. Slot `j` of each
//! channel gives up its low `b(j) = k + ⌊√j⌋` bits, which then receive the top
//! `b(j)` bits of hidden coefficient `n - 1 - j` of the same channel. The
//! hidden DC term therefore lands in the least visible cover slot with the
//! largest budget, and the hidden order-3 terms get the smallest budgets.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fixedpoint::QuantParams;
use crate::scene::{sh_order, GaussianScene, ShBlock, SH_COEFFS, SH_MAX_ORDER};

/// Default base shift length for the order-0 slot.
pub const DEFAULT_K: u32 = 17;

/// How per-slot bit budgets are assigned.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BudgetScheme {
    /// `b(j) = k + ⌊√j⌋`.
    Graded,
    /// The same budget for every slot (the "AVG" ablation baseline).
    Uniform(u32),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StegoParams {
    k: u32,
    quant: QuantParams,
    scheme: BudgetScheme,
}

impl Default for StegoParams {
    fn default() -> Self {
        Self {
            k: DEFAULT_K,
            quant: QuantParams::default(),
            scheme: BudgetScheme::Graded,
        }
    }
}

impl StegoParams {
    pub fn new(k: u32, quant: QuantParams) -> Result<Self> {
        if k < 1 {
            return Err(Error::InvalidParams("k must be at least 1".into()));
        }
        let top = k + sh_order(SH_COEFFS - 1) as u32;
        if top > quant.gamma() {
            return Err(Error::InvalidParams(format!(
                "bit budget k + {} = {top} exceeds gamma {}",
                SH_MAX_ORDER,
                quant.gamma()
            )));
        }
        Ok(Self {
            k,
            quant,
            scheme: BudgetScheme::Graded,
        })
    }

    /// Same quantizer with every slot given budget `b`.
    pub fn uniform(b: u32, quant: QuantParams) -> Result<Self> {
        if b < 1 || b > quant.gamma() {
            return Err(Error::InvalidParams(format!(
                "uniform budget {b} outside [1, {}]",
                quant.gamma()
            )));
        }
        Ok(Self {
            k: b,
            quant,
            scheme: BudgetScheme::Uniform(b),
        })
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn quant(&self) -> QuantParams {
        self.quant
    }

    pub fn scheme(&self) -> BudgetScheme {
        self.scheme
    }

    /// Budget of carrier slot `j`.
    pub fn budget(&self, j: usize) -> u32 {
        match self.scheme {
            BudgetScheme::Graded => self.k + sh_order(j) as u32,
            BudgetScheme::Uniform(b) => b,
        }
    }

    fn budgets(&self) -> [u32; SH_COEFFS] {
        std::array::from_fn(|j| self.budget(j))
    }
}

/// `k + ⌊√j⌋` for slot `j` in `0..16`.
pub fn bit_budget(j: usize, k: u32) -> Result<u32> {
    if j >= SH_COEFFS {
        return Err(Error::SlotOutOfRange(j));
    }
    Ok(k + sh_order(j) as u32)
}

#[inline]
fn low_mask(b: u32) -> u64 {
    (1u64 << b) - 1
}

/// Clears the low `b` bits.
#[inline]
pub fn nullify(code: u32, b: u32) -> u32 {
    (code as u64 & !low_mask(b)) as u32
}

/// Keeps the cover's high `γ - b` bits and writes the hidden code's top `b`
/// bits into the low `b`.
#[inline]
pub fn embed_coeff(cover: u32, hidden: u32, b: u32, gamma: u32) -> u32 {
    debug_assert!(b <= gamma);
    nullify(cover, b) ^ ((hidden as u64) >> (gamma - b)) as u32
}

/// Inverse of [`embed_coeff`]: the hidden code's top `b` bits, restored to
/// their position, with the low `γ - b` bits zero.
#[inline]
pub fn extract_coeff(stego: u32, b: u32, gamma: u32) -> u32 {
    debug_assert!(b <= gamma);
    ((stego as u64 & low_mask(b)) << (gamma - b)) as u32
}

/// Hidden coefficient index carried by carrier slot `j`, and vice versa.
#[inline]
pub fn paired_slot(j: usize) -> usize {
    SH_COEFFS - 1 - j
}

fn check_finite(v: f32) -> Result<f64> {
    if v.is_finite() {
        Ok(v as f64)
    } else {
        Err(Error::NonFinite(v as f64))
    }
}

/// Embeds one hidden block into one cover block.
pub fn embed_block(cover: &ShBlock, hidden: &ShBlock, params: &StegoParams) -> Result<ShBlock> {
    let q = params.quant;
    let gamma = q.gamma();
    let budgets = params.budgets();
    let mut out = ShBlock::zeros();
    for (j, &b) in budgets.iter().enumerate() {
        for ch in 0..3 {
            let c = q.quantize_finite(check_finite(cover.coeffs[j][ch])?);
            let h = q.quantize_finite(check_finite(hidden.coeffs[paired_slot(j)][ch])?);
            out.coeffs[j][ch] = q.dequantize(embed_coeff(c, h, b, gamma));
        }
    }
    Ok(out)
}

/// Recovers the hidden block from one stego block.
pub fn extract_block(stego: &ShBlock, params: &StegoParams) -> Result<ShBlock> {
    let q = params.quant;
    let gamma = q.gamma();
    let budgets = params.budgets();
    let mut out = ShBlock::zeros();
    for (j, &b) in budgets.iter().enumerate() {
        for ch in 0..3 {
            let s = q.quantize_finite(check_finite(stego.coeffs[j][ch])?);
            out.coeffs[paired_slot(j)][ch] = q.dequantize(extract_coeff(s, b, gamma));
        }
    }
    Ok(out)
}

/// Returns a copy of `cover` whose SH fields carry `hidden_sh`. All other
/// attributes are copied bit-for-bit.
pub fn embed_scene(
    cover: &GaussianScene,
    hidden_sh: &[ShBlock],
    params: &StegoParams,
) -> Result<GaussianScene> {
    cover.validate()?;
    if hidden_sh.len() != cover.len() {
        return Err(Error::LengthMismatch {
            expected: cover.len(),
            actual: hidden_sh.len(),
        });
    }
    let sh = cover
        .sh
        .par_iter()
        .zip(hidden_sh.par_iter())
        .map(|(c, h)| embed_block(c, h, params))
        .collect::<Result<Vec<_>>>()?;
    Ok(GaussianScene {
        sh,
        ..cover.clone()
    })
}

/// Recovers the hidden SH of every primitive in `stego`.
pub fn extract_scene(stego: &GaussianScene, params: &StegoParams) -> Result<Vec<ShBlock>> {
    stego
        .sh
        .par_iter()
        .map(|s| extract_block(s, params))
        .collect()
}

/// Set of SH orders, bit `o` set when order `o` is kept.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OrderMask(u8);

impl OrderMask {
    pub const ALL: OrderMask = OrderMask(0b1111);
    pub const NONE: OrderMask = OrderMask(0);

    pub fn from_orders(orders: &[usize]) -> Self {
        OrderMask(
            orders
                .iter()
                .filter(|&&o| o <= SH_MAX_ORDER)
                .fold(0, |m, &o| m | (1 << o)),
        )
    }

    /// Orders `0..=max_order`.
    pub fn up_to(max_order: usize) -> Self {
        let top = max_order.min(SH_MAX_ORDER);
        OrderMask(((1u16 << (top + 1)) - 1) as u8)
    }

    pub fn contains(&self, order: usize) -> bool {
        order <= SH_MAX_ORDER && self.0 & (1 << order) != 0
    }
}

/// Zeroes every coefficient whose order is not in `keep`.
pub fn filter_orders(sh: &ShBlock, keep: OrderMask) -> ShBlock {
    let mut out = *sh;
    for (j, row) in out.coeffs.iter_mut().enumerate() {
        if !keep.contains(sh_order(j)) {
            *row = [0.0; 3];
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn budgets() {
        assert_eq!(bit_budget(0, 17).unwrap(), 17);
        assert_eq!(bit_budget(15, 17).unwrap(), 20);
        assert_eq!(bit_budget(4, 10).unwrap(), 12);
        assert!(matches!(bit_budget(16, 17), Err(Error::SlotOutOfRange(16))));
    }

    #[test]
    fn budget_is_monotone_and_pairing_is_an_involution() {
        let p = StegoParams::default();
        for j in 1..SH_COEFFS {
            assert!(p.budget(j) >= p.budget(j - 1));
        }
        for j in 0..SH_COEFFS {
            assert_eq!(paired_slot(paired_slot(j)), j);
        }
        // hidden DC rides in the top slot with budget k + 3
        assert_eq!(p.budget(paired_slot(0)), DEFAULT_K + 3);
        assert_eq!(p.budget(paired_slot(15)), DEFAULT_K);
    }

    #[test]
    fn params_validation() {
        let q = QuantParams::default();
        assert!(StegoParams::new(29, q).is_ok());
        assert!(StegoParams::new(30, q).is_err());
        assert!(StegoParams::new(0, q).is_err());
        let q24 = QuantParams::new(24, 8.0).unwrap();
        assert!(StegoParams::new(22, q24).is_err());
        assert!(StegoParams::uniform(33, q).is_err());
    }

    #[test]
    fn nullify_examples() {
        assert_eq!(nullify(0x0001_FFFF, 17), 0);
        assert_eq!(nullify(0xFFFF_FFFF, 20), 0xFFF0_0000);
        assert_eq!(nullify(0x1234_5678, 0), 0x1234_5678);
        assert_eq!(nullify(0xFFFF_FFFF, 32), 0);
    }

    #[test]
    fn embed_and_extract_examples() {
        // oracle: 0xFFF0_0000 ^ (0xABCD_0123 >> 12)
        let expected = 0xFFF0_0000u32 ^ (0xABCD_0123u32 >> 12);
        assert_eq!(expected, 0xFFFA_BCD0);
        assert_eq!(embed_coeff(0xFFFF_FFFF, 0xABCD_0123, 20, 32), 0xFFFA_BCD0);
        assert_eq!(extract_coeff(0xFFFA_BCD0, 20, 32), 0xABCD_0000);
        assert_eq!(embed_coeff(0x1234_5678, 0, 17, 32), nullify(0x1234_5678, 17));
        assert_eq!(embed_coeff(0x1234_5678, 0xDEAD_BEEF, 32, 32), 0xDEAD_BEEF);
        assert_eq!(extract_coeff(0xDEAD_BEEF, 32, 32), 0xDEAD_BEEF);
        assert_eq!(extract_coeff(0xDEAD_BEEF, 0, 32), 0);
    }

    proptest! {
        #[test]
        fn extract_inverts_embed(c: u32, h: u32, b in 0u32..=32) {
            let trunc = if b == 0 { 0 } else { h & !(((1u64 << (32 - b)) - 1) as u32) };
            prop_assert_eq!(extract_coeff(embed_coeff(c, h, b, 32), b, 32), trunc);
            // the cover keeps its high bits
            prop_assert_eq!(nullify(embed_coeff(c, h, b, 32), b), nullify(c, b));
        }

        #[test]
        fn extract_inverts_embed_narrow(c: u32, h: u32, gamma in 8u32..=31, b_frac in 0.0f64..=1.0) {
            let b = (b_frac * gamma as f64) as u32;
            let max = ((1u64 << gamma) - 1) as u32;
            let (c, h) = (c & max, h & max);
            let s = embed_coeff(c, h, b, gamma);
            prop_assert!(s <= max);
            let keep_low = ((1u64 << (gamma - b)) - 1) as u32;
            prop_assert_eq!(extract_coeff(s, b, gamma), h & !keep_low);
        }
    }

    fn random_block(rng: &mut ChaCha8Rng, scale: f32) -> ShBlock {
        let mut b = ShBlock::zeros();
        for row in b.coeffs.iter_mut() {
            for v in row.iter_mut() {
                *v = rng.random_range(-scale..scale);
            }
        }
        b
    }

    #[test]
    fn nullification_only_bound() {
        // hidden all at -C_max (code 0): cover only loses low bits
        let p = StegoParams::default();
        let q = p.quant().step();
        let hidden = ShBlock {
            coeffs: [[-8.0; 3]; SH_COEFFS],
        };
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..2000 {
            let cover = random_block(&mut rng, 7.9);
            let out = embed_block(&cover, &hidden, &p).unwrap();
            for j in 0..SH_COEFFS {
                let bound = (1u64 << p.budget(j)) as f64 * q;
                for ch in 0..3 {
                    let d = (out.coeffs[j][ch] as f64 - cover.coeffs[j][ch] as f64).abs();
                    assert!(d <= bound + 1e-6, "slot {j}: {d} > {bound}");
                }
            }
        }
    }

    #[test]
    fn cover_distortion_within_worst_slot_bound() {
        // 2^(b-γ)·2·C_max for b = 20 is 2^-12·16 = 0.00390625
        let p = StegoParams::default();
        let bound = 2f64.powi(20 - 32) * 16.0;
        assert!((bound - 0.0039).abs() < 1e-4);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut worst = 0f64;
        for _ in 0..5000 {
            let cover = random_block(&mut rng, 3.0);
            let hidden = random_block(&mut rng, 3.0);
            let out = embed_block(&cover, &hidden, &p).unwrap();
            for j in 0..SH_COEFFS {
                for ch in 0..3 {
                    worst = worst.max((out.coeffs[j][ch] as f64 - cover.coeffs[j][ch] as f64).abs());
                }
            }
        }
        assert!(worst <= bound + 2f64.powi(-22), "{worst}");
    }

    #[test]
    fn dc_round_trip_error() {
        // hidden DC sits at b = 20; measured error must stay under 0.002
        let p = StegoParams::default();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut worst = 0f64;
        for _ in 0..40_000 {
            let cover = random_block(&mut rng, 7.99);
            let hidden = random_block(&mut rng, 7.99);
            let back = extract_block(&embed_block(&cover, &hidden, &p).unwrap(), &p).unwrap();
            for ch in 0..3 {
                worst = worst.max((back.coeffs[0][ch] as f64 - hidden.coeffs[0][ch] as f64).abs());
            }
        }
        assert!(worst <= 0.002, "{worst}");
    }

    #[test]
    fn scene_level_locality_and_pruning() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut cover = GaussianScene::default();
        let mut hidden = Vec::new();
        for i in 0..64 {
            cover.push(
                [i as f32, 0.0, 1.0],
                [0.0; 3],
                [1.0, 0.0, 0.0, 0.0],
                [-3.0; 3],
                rng.random_range(-2.0..2.0),
                random_block(&mut rng, 2.0),
            );
            hidden.push(random_block(&mut rng, 2.0));
        }
        let p = StegoParams::default();
        let stego = embed_scene(&cover, &hidden, &p).unwrap();
        assert!(stego.non_sh_bits_eq(&cover));
        let full = extract_scene(&stego, &p).unwrap();
        assert_eq!(full, extract_scene(&stego, &p).unwrap());
        let keep: Vec<usize> = (0..64).filter(|i| i % 3 != 0).collect();
        let pruned = extract_scene(&stego.select(&keep), &p).unwrap();
        for (k, &i) in keep.iter().enumerate() {
            assert!(pruned[k].bits_eq(&full[i]));
        }
        assert!(matches!(
            embed_scene(&cover, &hidden[..10], &p),
            Err(Error::LengthMismatch { expected: 64, actual: 10 })
        ));
    }

    #[test]
    fn non_finite_cover_is_rejected() {
        let mut cover = ShBlock::zeros();
        cover.coeffs[3][1] = f32::NAN;
        assert!(embed_block(&cover, &ShBlock::zeros(), &StegoParams::default()).is_err());
    }

    #[test]
    fn order_filter() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let b = random_block(&mut rng, 1.0);
        assert_eq!(filter_orders(&b, OrderMask::ALL), b);
        assert_eq!(filter_orders(&b, OrderMask::NONE), ShBlock::zeros());
        let dc = filter_orders(&b, OrderMask::from_orders(&[0]));
        assert_eq!(dc.coeffs[0], b.coeffs[0]);
        assert!(dc.coeffs[1..].iter().flatten().all(|&v| v == 0.0));
        let low = filter_orders(&b, OrderMask::up_to(1));
        assert_eq!(low.coeffs[..4], b.coeffs[..4]);
        assert!(low.coeffs[4..].iter().flatten().all(|&v| v == 0.0));
        assert_eq!(OrderMask::up_to(3), OrderMask::ALL);
        assert_eq!(OrderMask::up_to(9), OrderMask::ALL);
    }
}
