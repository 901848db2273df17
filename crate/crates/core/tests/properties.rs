use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use splatstego::attacks;
use splatstego::fixedpoint::QuantParams;
use splatstego::key::StegoKey;
use splatstego::opacity::{match_coordinates, significant_indices, Autoencoder};
use splatstego::render::render;
use splatstego::scene::{load_scene, save_scene, GaussianScene, ShBlock};
use splatstego::sh_stego::{
    bit_budget, embed_coeff, embed_scene, extract_coeff, extract_scene, paired_slot, StegoParams,
};
use splatstego::synth::{default_camera, gen_scene_pair, SynthConfig};

fn finite_f32() -> impl Strategy<Value = f32> {
    -100.0f32..100.0
}

prop_compose! {
    fn arb_scene(max: usize)(n in 1..max)(
        pos in prop::collection::vec(prop::array::uniform3(finite_f32()), n),
        rot in prop::collection::vec(prop::array::uniform4(-1.0f32..1.0), n),
        scale in prop::collection::vec(prop::array::uniform3(-8.0f32..1.0), n),
        op in prop::collection::vec(-10.0f32..10.0, n),
        sh in prop::collection::vec(prop::array::uniform16(prop::array::uniform3(-4.0f32..4.0)), n),
    ) -> GaussianScene {
        let mut s = GaussianScene::default();
        for i in 0..pos.len() {
            s.push(pos[i], [0.0; 3], rot[i], scale[i], op[i], ShBlock { coeffs: sh[i] });
        }
        s
    }
}

fn params(k: u32) -> StegoParams {
    StegoParams::new(k, QuantParams::new(32, 8.0).unwrap()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn asset_round_trip_is_byte_exact(scene in arb_scene(40)) {
        let bytes = save_scene(&scene).unwrap();
        let back = load_scene(&bytes).unwrap();
        prop_assert!(back.bits_eq(&scene));
        prop_assert_eq!(save_scene(&back).unwrap(), bytes);
    }

    #[test]
    fn embedding_touches_only_sh(scene in arb_scene(40), seed in any::<u64>(), k in 10u32..=29) {
        let (_, hidden) = gen_scene_pair(&SynthConfig { count: scene.len(), seed, ..Default::default() }).unwrap();
        let stego = embed_scene(&scene, &hidden.sh_hidden, &params(k)).unwrap();
        prop_assert!(stego.non_sh_bits_eq(&scene));
    }

    #[test]
    fn extraction_inverts_embedding(cover in any::<u32>(), hidden in any::<u32>(), gamma in 8u32..=32, b_frac in 0.0f64..=1.0) {
        // codes are γ-bit values
        let range = ((1u64 << gamma) - 1) as u32;
        let (cover, hidden) = (cover & range, hidden & range);
        let b = (b_frac * gamma as f64).round() as u32;
        let s = embed_coeff(cover, hidden, b, gamma);
        let low = ((1u64 << (gamma - b)) - 1) as u32;
        prop_assert_eq!(extract_coeff(s, b, gamma), hidden & !low);
        prop_assert!(s <= range);
        // the bits above the budget still belong to the cover
        prop_assert_eq!((s as u64) >> b, (cover as u64) >> b);
    }

    #[test]
    fn pruning_preserves_per_primitive_extraction(seed in any::<u64>(), ratio in 0.0f64..0.9, random in any::<bool>()) {
        let (cover, hidden) = gen_scene_pair(&SynthConfig { count: 120, seed, ..Default::default() }).unwrap();
        let stego = embed_scene(&cover, &hidden.sh_hidden, &params(17)).unwrap();
        let survivors = if random {
            attacks::random_survivors(stego.len(), ratio, seed).unwrap()
        } else {
            attacks::sequential_survivors(&stego, ratio).unwrap()
        };
        prop_assert_eq!(survivors.len(), stego.len() - (ratio * stego.len() as f64).floor() as usize);
        let before = extract_scene(&stego, &params(17)).unwrap();
        let after = extract_scene(&stego.select(&survivors), &params(17)).unwrap();
        for (row, &i) in survivors.iter().enumerate() {
            prop_assert!(after[row].bits_eq(&before[i]));
        }
        let matches = match_coordinates(&stego.positions, &stego.select(&survivors)).unwrap();
        let found: Vec<usize> = (0..matches.len()).filter(|&i| matches[i].is_some()).collect();
        prop_assert_eq!(found, survivors);
    }

    #[test]
    fn threshold_is_strict(alphas in prop::collection::vec(0.0f32..=1.0, 1..60), tau in 0.0f64..0.99) {
        let pos: Vec<[f32; 3]> = (0..alphas.len()).map(|i| [i as f32, 0.0, 0.0]).collect();
        match significant_indices(&alphas, &pos, tau) {
            Ok(set) => {
                let want: Vec<usize> = (0..alphas.len()).filter(|&i| alphas[i] as f64 > tau).collect();
                prop_assert_eq!(&set.indices, &want);
                prop_assert!(set.indices.windows(2).all(|w| w[0] < w[1]));
                for (k, &i) in set.indices.iter().enumerate() {
                    prop_assert_eq!(set.coords[k], pos[i]);
                }
            }
            Err(_) => prop_assert!(alphas.iter().all(|&a| a as f64 <= tau)),
        }
    }

    #[test]
    fn key_round_trip(coords in prop::collection::vec(prop::array::uniform3(any::<f32>()), 1..50), k in 1u32..=29, tau in 0.0f64..1.0, seed in any::<u64>()) {
        let mut model = Autoencoder::init(seed);
        model.round_to_f32();
        let key = StegoKey::new(&params(k), tau, coords, model);
        let bytes = key.to_bytes().unwrap();
        let back = StegoKey::from_bytes(&bytes).unwrap();
        prop_assert_eq!(back.to_bytes().unwrap(), bytes);
        prop_assert_eq!(back.k, k);
        prop_assert_eq!(back.coords.len(), key.coords.len());
        for (a, b) in back.coords.iter().zip(&key.coords) {
            prop_assert_eq!(a.map(f32::to_bits), b.map(f32::to_bits));
        }
    }
}

#[test]
fn budgets_are_graded() {
    for k in 1..=29 {
        let b: Vec<u32> = (0..16).map(|j| bit_budget(j, k).unwrap()).collect();
        assert!(b.windows(2).all(|w| w[0] <= w[1]));
        assert_eq!((b[0], b[15]), (k, k + 3));
    }
    for j in 0..16 {
        assert_eq!(paired_slot(paired_slot(j)), j);
    }
}

#[test]
fn dc_survives_noise_better_than_order_three() {
    // equal noise on every stored float: the hidden DC has three more guard bits
    let quant = QuantParams::new(24, 8.0).unwrap();
    let p = StegoParams::new(17, quant).unwrap();
    let (cover, hidden) = gen_scene_pair(&SynthConfig { count: 4000, seed: 3, ..Default::default() }).unwrap();
    let stego = embed_scene(&cover, &hidden.sh_hidden, &p).unwrap();
    let noisy = attacks::add_sh_noise(&stego, 0.001, 9).unwrap();
    let rec = extract_scene(&noisy, &p).unwrap();
    let mean_err = |slots: std::ops::Range<usize>| {
        let mut total = 0.0;
        let mut n = 0;
        for (r, h) in rec.iter().zip(&hidden.sh_hidden) {
            for j in slots.clone() {
                for c in 0..3 {
                    total += (r.coeffs[j][c] as f64 - h.coeffs[j][c] as f64).abs();
                    n += 1;
                }
            }
        }
        total / n as f64
    };
    let dc = mean_err(0..1);
    let order3 = mean_err(9..16);
    assert!(dc <= order3, "dc {dc} order3 {order3}");
}

#[test]
fn renders_are_bit_identical_and_weights_bounded() {
    let (scene, _) = gen_scene_pair(&SynthConfig { count: 2000, seed: 12, ..Default::default() }).unwrap();
    let cam = default_camera(80, 64);
    let a = render(&scene, &cam, [0.2, 0.3, 0.4]).unwrap();
    let b = render(&scene, &cam, [0.2, 0.3, 0.4]).unwrap();
    assert_eq!(a.image, b.image);
    assert_eq!(a.alpha, b.alpha);
    assert!(a.alpha.iter().all(|w| (0.0..=1.0).contains(w)));
    // storage order does not matter once depth ties are broken by index
    let mut order: Vec<usize> = (0..scene.len()).collect();
    order.reverse();
    let reversed = render(&scene.select(&order), &cam, [0.2, 0.3, 0.4]).unwrap();
    let diff = a
        .image
        .data()
        .iter()
        .zip(reversed.image.data())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0f32, f32::max);
    assert!(diff < 1e-6, "{diff}");
}

#[test]
fn metrics_are_symmetric() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let n = Normal::new(0.5, 0.2).unwrap();
    let img = |rng: &mut ChaCha8Rng| {
        splatstego::ImageBuffer::from_rgb(24, 20, (0..24 * 20 * 3).map(|_| n.sample(rng) as f32).collect()).unwrap()
    };
    for _ in 0..5 {
        let a = img(&mut rng);
        let b = img(&mut rng);
        let psnr = |x, y| splatstego::metrics::psnr(x, y).unwrap();
        let ssim = |x, y| splatstego::metrics::ssim(x, y).unwrap();
        assert_eq!(psnr(&a, &b), psnr(&b, &a));
        assert!((ssim(&a, &b) - ssim(&b, &a)).abs() < 1e-12);
        assert!(ssim(&a, &b) <= 1.0 && psnr(&a, &b) < 99.0);
        assert_eq!(ssim(&a, &a), 1.0);
    }
}
