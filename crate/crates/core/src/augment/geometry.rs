use super::image::{to_u8, ImageU8};
use crate::error::{Error, Result};

/// Bilinear resize with half-pixel-centred sampling and edge clamping.
pub fn resize_bilinear(img: &ImageU8, out_h: usize, out_w: usize) -> Result<ImageU8> {
    if out_h == 0 || out_w == 0 || img.height() == 0 || img.width() == 0 {
        return Err(Error::param(format!(
            "resize {}x{} -> {out_h}x{out_w}: zero dimension",
            img.height(),
            img.width()
        )));
    }
    let axis = |out: usize, len: usize| -> Vec<(usize, usize, f64)> {
        let scale = len as f64 / out as f64;
        (0..out)
            .map(|d| {
                let s = ((d as f64 + 0.5) * scale - 0.5).clamp(0.0, (len - 1) as f64);
                let i0 = s.floor() as usize;
                let i1 = (i0 + 1).min(len - 1);
                (i0, i1, s - i0 as f64)
            })
            .collect()
    };
    let ys = axis(out_h, img.height());
    let xs = axis(out_w, img.width());
    Ok(ImageU8::from_fn(out_h, out_w, |y, x| {
        let (y0, y1, fy) = ys[y];
        let (x0, x1, fx) = xs[x];
        let (a, b, c, d) = (img.pixel(y0, x0), img.pixel(y0, x1), img.pixel(y1, x0), img.pixel(y1, x1));
        let mut px = [0u8; 3];
        for ch in 0..3 {
            let top = f64::from(a[ch]) * (1.0 - fx) + f64::from(b[ch]) * fx;
            let bot = f64::from(c[ch]) * (1.0 - fx) + f64::from(d[ch]) * fx;
            px[ch] = to_u8(top * (1.0 - fy) + bot * fy);
        }
        px
    }))
}

/// Mirror left-right.
pub fn hflip(img: &ImageU8) -> ImageU8 {
    let w = img.width();
    ImageU8::from_fn(img.height(), w, |y, x| img.pixel(y, w - 1 - x))
}

/// Mirror top-bottom.
pub fn vflip(img: &ImageU8) -> ImageU8 {
    let h = img.height();
    ImageU8::from_fn(h, img.width(), |y, x| img.pixel(h - 1 - y, x))
}

/// Rotate counter-clockwise (as displayed) by `angle_deg` about the image
/// centre. Bilinear sampling; samples outside the source read as black.
pub fn rotate(img: &ImageU8, angle_deg: f64) -> ImageU8 {
    if angle_deg == 0.0 {
        return img.clone();
    }
    let (h, w) = (img.height(), img.width());
    let (cy, cx) = ((h as f64 - 1.0) / 2.0, (w as f64 - 1.0) / 2.0);
    let (sin, cos) = angle_deg.to_radians().sin_cos();
    let fetch = |y: isize, x: isize| -> [f64; 3] {
        if y < 0 || x < 0 || y >= h as isize || x >= w as isize {
            [0.0; 3]
        } else {
            img.pixel(y as usize, x as usize).map(f64::from)
        }
    };
    ImageU8::from_fn(h, w, |y, x| {
        let (dx, dy) = (x as f64 - cx, y as f64 - cy);
        // inverse map of the destination offset back into the source
        let sx = dx * cos - dy * sin + cx;
        let sy = dx * sin + dy * cos + cy;
        let (x0, y0) = (sx.floor(), sy.floor());
        let (fx, fy) = (sx - x0, sy - y0);
        let (x0, y0) = (x0 as isize, y0 as isize);
        let a = fetch(y0, x0);
        let b = fetch(y0, x0 + 1);
        let c = fetch(y0 + 1, x0);
        let d = fetch(y0 + 1, x0 + 1);
        let mut px = [0u8; 3];
        for ch in 0..3 {
            let top = a[ch] * (1.0 - fx) + b[ch] * fx;
            let bot = c[ch] * (1.0 - fx) + d[ch] * fx;
            px[ch] = to_u8(top * (1.0 - fy) + bot * fy);
        }
        px
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gradient(h: usize, w: usize) -> ImageU8 {
        ImageU8::from_fn(h, w, |y, x| [(y * 17 % 256) as u8, (x * 29 % 256) as u8, ((x + y) * 7) as u8])
    }

    #[test]
    fn resize_same_dims_is_identity() {
        let img = gradient(9, 13);
        assert_eq!(resize_bilinear(&img, 9, 13).unwrap(), img);
    }

    #[test]
    fn resize_constant_stays_constant() {
        let img = ImageU8::filled(5, 8, [10, 200, 77]);
        assert_eq!(resize_bilinear(&img, 13, 3).unwrap(), ImageU8::filled(13, 3, [10, 200, 77]));
    }

    #[test]
    fn resize_checkerboard_center() {
        // centre of the 3x3 output samples source (0.5, 0.5): mean 127.5 rounds up
        let img = ImageU8::from_fn(2, 2, |y, x| if (x + y) % 2 == 0 { [0; 3] } else { [255; 3] });
        let out = resize_bilinear(&img, 3, 3).unwrap();
        assert_eq!(out.pixel(1, 1), [128; 3]);
        assert_eq!(out.pixel(0, 0), [0; 3]);
        assert_eq!(out.pixel(0, 2), [255; 3]);
    }

    #[test]
    fn resize_zero_dim_fails() {
        assert!(resize_bilinear(&gradient(3, 3), 0, 4).is_err());
    }

    #[test]
    fn flips() {
        let img = ImageU8::from_fn(1, 2, |_, x| if x == 0 { [1, 2, 3] } else { [4, 5, 6] });
        assert_eq!(hflip(&img).data(), &[4, 5, 6, 1, 2, 3]);
        let g = gradient(6, 5);
        assert_eq!(hflip(&hflip(&g)), g);
        assert_eq!(vflip(&vflip(&g)), g);
        assert_eq!(vflip(&hflip(&g)), hflip(&vflip(&g)));
    }

    #[test]
    fn rotate_zero_and_half_turn() {
        let g = gradient(8, 8);
        assert_eq!(rotate(&g, 0.0), g);
        let half = rotate(&g, 180.0);
        let flipped = vflip(&hflip(&g));
        for (a, b) in half.data().iter().zip(flipped.data()) {
            assert!((i16::from(*a) - i16::from(*b)).abs() <= 1);
        }
    }

    #[test]
    fn quarter_turn_moves_pixel() {
        // 5x5, centre (2,2). Pixel at row 2, col 4 (right of centre) rotates
        // counter-clockwise by 90 degrees to row 0, col 2 (above centre).
        let mut img = ImageU8::filled(5, 5, [0; 3]);
        img.set_pixel(2, 4, [255, 255, 255]);
        let r = rotate(&img, 90.0);
        assert_eq!(r.pixel(0, 2), [255; 3]);
        let lit = r.data().chunks(3).filter(|p| p[0] > 0).count();
        assert_eq!(lit, 1);
    }
}
