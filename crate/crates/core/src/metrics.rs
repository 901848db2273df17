//! PSNR and SSIM for images in `[0, 1]`.

use crate::error::{Error, Result};
use crate::image::ImageBuffer;

/// PSNR reported for identical images.
pub const PSNR_CAP: f64 = 99.0;
const WINDOW: usize = 11;
const SIGMA: f64 = 1.5;
const C1: f64 = 0.01 * 0.01;
const C2: f64 = 0.03 * 0.03;
const LUMA: [f64; 3] = [0.299, 0.587, 0.114];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricReport {
    pub psnr: f64,
    pub ssim: f64,
}

impl std::fmt::Display for MetricReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "psnr {:.4} dB, ssim {:.6}", self.psnr, self.ssim)
    }
}

fn same_dims(a: &ImageBuffer, b: &ImageBuffer) -> Result<()> {
    if a.width() != b.width() || a.height() != b.height() {
        return Err(Error::DimensionMismatch(a.width(), a.height(), b.width(), b.height()));
    }
    Ok(())
}

pub fn mse(a: &ImageBuffer, b: &ImageBuffer) -> Result<f64> {
    same_dims(a, b)?;
    let n = a.data().len().max(1);
    let sum: f64 = a
        .data()
        .iter()
        .zip(b.data())
        .map(|(&x, &y)| (x as f64 - y as f64).powi(2))
        .sum();
    Ok(sum / n as f64)
}

/// `10·log10(1/MSE)` over all channels, capped at 99 dB.
pub fn psnr(a: &ImageBuffer, b: &ImageBuffer) -> Result<f64> {
    let m = mse(a, b)?;
    if m == 0.0 {
        return Ok(PSNR_CAP);
    }
    Ok((10.0 * (1.0 / m).log10()).min(PSNR_CAP))
}

fn luma(img: &ImageBuffer) -> Vec<f64> {
    img.data()
        .chunks_exact(3)
        .map(|p| LUMA[0] * p[0] as f64 + LUMA[1] * p[1] as f64 + LUMA[2] * p[2] as f64)
        .collect()
}

fn gaussian_window() -> [f64; WINDOW] {
    let half = (WINDOW / 2) as f64;
    let mut w: [f64; WINDOW] = std::array::from_fn(|i| (-((i as f64 - half).powi(2)) / (2.0 * SIGMA * SIGMA)).exp());
    let total: f64 = w.iter().sum();
    for v in &mut w {
        *v /= total;
    }
    w
}

/// Separable "valid" filtering: output is `(w - 10) × (h - 10)`.
fn filter_valid(src: &[f64], width: usize, height: usize, k: &[f64; WINDOW]) -> Vec<f64> {
    let ow = width - WINDOW + 1;
    let oh = height - WINDOW + 1;
    let mut horiz = vec![0.0; ow * height];
    for y in 0..height {
        let row = &src[y * width..(y + 1) * width];
        for x in 0..ow {
            horiz[y * ow + x] = k.iter().zip(&row[x..x + WINDOW]).map(|(a, b)| a * b).sum();
        }
    }
    let mut out = vec![0.0; ow * oh];
    for y in 0..oh {
        for x in 0..ow {
            out[y * ow + x] = (0..WINDOW).map(|i| k[i] * horiz[(y + i) * ow + x]).sum();
        }
    }
    out
}

/// Mean SSIM on luma with an 11×11 Gaussian window (σ = 1.5), valid region only.
pub fn ssim(a: &ImageBuffer, b: &ImageBuffer) -> Result<f64> {
    same_dims(a, b)?;
    let (w, h) = (a.width(), a.height());
    if w < WINDOW || h < WINDOW {
        return Err(Error::ImageTooSmall(w, h, WINDOW));
    }
    let x = luma(a);
    let y = luma(b);
    let xx: Vec<f64> = x.iter().map(|v| v * v).collect();
    let yy: Vec<f64> = y.iter().map(|v| v * v).collect();
    let xy: Vec<f64> = x.iter().zip(&y).map(|(p, q)| p * q).collect();
    let k = gaussian_window();
    let mu_x = filter_valid(&x, w, h, &k);
    let mu_y = filter_valid(&y, w, h, &k);
    let e_xx = filter_valid(&xx, w, h, &k);
    let e_yy = filter_valid(&yy, w, h, &k);
    let e_xy = filter_valid(&xy, w, h, &k);
    let n = mu_x.len();
    let total: f64 = (0..n)
        .map(|i| {
            let (mx, my) = (mu_x[i], mu_y[i]);
            let vx = e_xx[i] - mx * mx;
            let vy = e_yy[i] - my * my;
            let cov = e_xy[i] - mx * my;
            ((2.0 * mx * my + C1) * (2.0 * cov + C2)) / ((mx * mx + my * my + C1) * (vx + vy + C2))
        })
        .sum();
    Ok(total / n as f64)
}

pub fn compare(a: &ImageBuffer, b: &ImageBuffer) -> Result<MetricReport> {
    Ok(MetricReport {
        psnr: psnr(a, b)?,
        ssim: ssim(a, b)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    fn noise_image(seed: u64, w: usize, h: usize) -> ImageBuffer {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data = (0..w * h * 3).map(|_| rng.random_range(0.2..0.8)).collect();
        ImageBuffer::from_rgb(w, h, data).unwrap()
    }

    fn add_noise(img: &ImageBuffer, sigma: f64, seed: u64) -> ImageBuffer {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = Normal::new(0.0, sigma).unwrap();
        let data = img.data().iter().map(|&v| v + n.sample(&mut rng) as f32).collect();
        ImageBuffer::from_rgb(img.width(), img.height(), data).unwrap()
    }

    #[test]
    fn psnr_examples() {
        let a = noise_image(1, 16, 16);
        assert_eq!(psnr(&a, &a).unwrap(), 99.0);
        let zeros = ImageBuffer::filled(4, 4, [0.0; 3]);
        let ones = ImageBuffer::filled(4, 4, [1.0; 3]);
        assert_eq!(psnr(&zeros, &ones).unwrap(), 0.0);
        let tenth = ImageBuffer::filled(4, 4, [0.1; 3]);
        // MSE = 0.01 up to f32 rounding of 0.1
        assert!((psnr(&zeros, &tenth).unwrap() - 20.0).abs() < 1e-5);
        assert!(psnr(&zeros, &ImageBuffer::filled(4, 5, [0.0; 3])).is_err());
    }

    #[test]
    fn ssim_examples() {
        let a = noise_image(2, 32, 24);
        assert!((ssim(&a, &a).unwrap() - 1.0).abs() < 1e-12);
        let zeros = ImageBuffer::filled(16, 16, [0.0; 3]);
        let ones = ImageBuffer::filled(16, 16, [1.0; 3]);
        let want = C1 / (1.0 + C1);
        assert!((ssim(&zeros, &ones).unwrap() - want).abs() < 1e-9);
        assert!((want - 9.99e-5).abs() < 1e-7);
        assert!(matches!(ssim(&ImageBuffer::filled(10, 20, [0.0; 3]), &ImageBuffer::filled(10, 20, [0.0; 3])), Err(Error::ImageTooSmall(10, 20, 11))));
    }

    #[test]
    fn ssim_symmetric_and_bounded() {
        let a = noise_image(3, 20, 20);
        let b = noise_image(4, 20, 20);
        let ab = ssim(&a, &b).unwrap();
        assert!((ab - ssim(&b, &a).unwrap()).abs() < 1e-12);
        assert!((-1.0..=1.0).contains(&ab));
        assert!(ab < 0.5);
    }

    #[test]
    fn psnr_decreases_with_noise() {
        let base = ImageBuffer::filled(32, 32, [0.5; 3]);
        for seed in 0..3 {
            let mut last = f64::INFINITY;
            for sigma in [0.01, 0.02, 0.05, 0.1] {
                let p = psnr(&base, &add_noise(&base, sigma, seed)).unwrap();
                assert!(p < last);
                last = p;
            }
        }
    }

    #[test]
    fn window_is_normalized() {
        let w = gaussian_window();
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert_eq!(w[0], w[10]);
    }
}
