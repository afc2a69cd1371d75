use super::image::{to_u8, ImageU8};
use crate::error::{Error, Result};

pub const SHARPEN_KERNEL: [[f64; 3]; 3] = [[-1., -1., -1.], [-1., 9., -1.], [-1., -1., -1.]];
pub const EMBOSS_KERNEL: [[f64; 3]; 3] = [[-2., -1., 0.], [-1., 1., 1.], [0., 1., 2.]];
const EMBOSS_BIAS: f64 = 128.0;

/// Normalized 1-D Gaussian taps. `sigma == 0` gives the unit impulse.
pub fn gaussian_kernel(sigma: f64, ksize: usize) -> Result<Vec<f64>> {
    if ksize < 3 || ksize % 2 == 0 {
        return Err(Error::param(format!("blur kernel size must be odd and >= 3, got {ksize}")));
    }
    if !(sigma >= 0.0) {
        return Err(Error::param(format!("blur sigma must be >= 0, got {sigma}")));
    }
    let r = (ksize / 2) as isize;
    if sigma == 0.0 {
        return Ok((-r..=r).map(|i| if i == 0 { 1.0 } else { 0.0 }).collect());
    }
    let taps: Vec<f64> = (-r..=r)
        .map(|i| (-((i * i) as f64) / (2.0 * sigma * sigma)).exp())
        .collect();
    let s: f64 = taps.iter().sum();
    Ok(taps.into_iter().map(|t| t / s).collect())
}

/// Separable Gaussian blur with edge replication.
pub fn gaussian_blur(img: &ImageU8, sigma: f64, ksize: usize) -> Result<ImageU8> {
    let k = gaussian_kernel(sigma, ksize)?;
    let r = (ksize / 2) as isize;
    let (h, w) = (img.height(), img.width());
    let src: Vec<f64> = img.data().iter().map(|&v| f64::from(v)).collect();
    let clampi = |v: isize, n: usize| v.clamp(0, n as isize - 1) as usize;
    let mut tmp = vec![0.0; src.len()];
    for y in 0..h {
        for x in 0..w {
            for c in 0..3 {
                tmp[(y * w + x) * 3 + c] = k
                    .iter()
                    .enumerate()
                    .map(|(t, kv)| kv * src[(y * w + clampi(x as isize + t as isize - r, w)) * 3 + c])
                    .sum();
            }
        }
    }
    let mut out = Vec::with_capacity(src.len());
    for y in 0..h {
        for x in 0..w {
            for c in 0..3 {
                let v: f64 = k
                    .iter()
                    .enumerate()
                    .map(|(t, kv)| kv * tmp[(clampi(y as isize + t as isize - r, h) * w + x) * 3 + c])
                    .sum();
                out.push(to_u8(v));
            }
        }
    }
    ImageU8::new(h, w, out)
}

/// 3×3 cross-correlation (edge replication) plus `bias`, blended with the
/// source: `(1-alpha)·img + alpha·(kernel∗img + bias)`, rounded and clamped.
pub fn blend_filter3(img: &ImageU8, kernel: &[[f64; 3]; 3], bias: f64, alpha: f64) -> Result<ImageU8> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::param(format!("blend alpha {alpha} outside [0,1]")));
    }
    if alpha == 0.0 {
        return Ok(img.clone());
    }
    let (h, w) = (img.height(), img.width());
    let d = img.data();
    let mut out = Vec::with_capacity(d.len());
    for y in 0..h {
        for x in 0..w {
            for c in 0..3 {
                let mut acc = bias;
                for (ky, row) in kernel.iter().enumerate() {
                    let sy = (y as isize + ky as isize - 1).clamp(0, h as isize - 1) as usize;
                    for (kx, &kv) in row.iter().enumerate() {
                        let sx = (x as isize + kx as isize - 1).clamp(0, w as isize - 1) as usize;
                        acc += kv * f64::from(d[(sy * w + sx) * 3 + c]);
                    }
                }
                let v = f64::from(d[(y * w + x) * 3 + c]);
                out.push(to_u8((1.0 - alpha) * v + alpha * acc));
            }
        }
    }
    ImageU8::new(h, w, out)
}

pub fn sharpen(img: &ImageU8, alpha: f64) -> Result<ImageU8> {
    blend_filter3(img, &SHARPEN_KERNEL, 0.0, alpha)
}

pub fn emboss(img: &ImageU8, alpha: f64) -> Result<ImageU8> {
    blend_filter3(img, &EMBOSS_KERNEL, EMBOSS_BIAS, alpha)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn noise(h: usize, w: usize) -> ImageU8 {
        ImageU8::from_fn(h, w, |y, x| {
            let v = (y * 131 + x * 71 + 13) % 256;
            [v as u8, (255 - v) as u8, ((v * 3) % 256) as u8]
        })
    }

    #[test]
    fn blur_constant_and_delta() {
        let c = ImageU8::filled(6, 7, [40, 90, 250]);
        assert_eq!(gaussian_blur(&c, 1.3, 5).unwrap(), c);
        let n = noise(6, 7);
        assert_eq!(gaussian_blur(&n, 0.0, 3).unwrap(), n);
    }

    #[test]
    fn blur_impulse_reproduces_kernel() {
        // 9x9 black with a 255 centre: output = 255·k(i)·k(j)
        let mut img = ImageU8::filled(9, 9, [0; 3]);
        img.set_pixel(4, 4, [255; 3]);
        let sigma: f64 = 1.0;
        let raw: Vec<f64> = (-2i32..=2).map(|i| (-(i * i) as f64 / (2.0 * sigma * sigma)).exp()).collect();
        let s: f64 = raw.iter().sum();
        let k: Vec<f64> = raw.iter().map(|v| v / s).collect();
        let out = gaussian_blur(&img, sigma, 5).unwrap();
        for dy in 0..5 {
            for dx in 0..5 {
                let expect = (255.0 * k[dy] * k[dx]).round() as u8;
                assert_eq!(out.pixel(2 + dy, 2 + dx)[0], expect, "at {dy},{dx}");
            }
        }
        assert_eq!(out.pixel(0, 0), [0; 3]);
    }

    #[test]
    fn blur_even_kernel_rejected() {
        assert!(gaussian_blur(&noise(4, 4), 1.0, 4).is_err());
        assert!(gaussian_blur(&noise(4, 4), 1.0, 1).is_err());
    }

    #[test]
    fn zero_alpha_is_identity() {
        let n = noise(5, 5);
        assert_eq!(sharpen(&n, 0.0).unwrap(), n);
        assert_eq!(emboss(&n, 0.0).unwrap(), n);
        assert!(sharpen(&n, 1.5).is_err());
    }

    #[test]
    fn sharpen_constant() {
        let c = ImageU8::filled(4, 4, [33, 100, 200]);
        assert_eq!(sharpen(&c, 1.0).unwrap(), c);
    }

    #[test]
    fn sharpen_point_hand_computed() {
        // centre 10 on black: centre 9·10 = 90, neighbours -10 clamp to 0
        let mut img = ImageU8::filled(3, 3, [0; 3]);
        img.set_pixel(1, 1, [10; 3]);
        let out = sharpen(&img, 1.0).unwrap();
        assert_eq!(out.pixel(1, 1), [90; 3]);
        for (y, x) in [(0, 0), (0, 1), (2, 2), (1, 0)] {
            assert_eq!(out.pixel(y, x), [0; 3]);
        }
        // half blend: 0.5·10 + 0.5·90
        assert_eq!(sharpen(&img, 0.5).unwrap().pixel(1, 1), [50; 3]);
    }

    #[test]
    fn emboss_constant_shifts_by_bias() {
        // kernel sums to 1 so a constant v maps to v + 128 before blending
        let c = ImageU8::filled(3, 3, [20; 3]);
        assert_eq!(emboss(&c, 1.0).unwrap(), ImageU8::filled(3, 3, [148; 3]));
        assert_eq!(emboss(&c, 0.5).unwrap(), ImageU8::filled(3, 3, [84; 3]));
    }
}
