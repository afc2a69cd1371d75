use std::path::Path;

use crate::error::{Error, Result};
use crate::nn::{Scalar, Tensor};

/// Row-major interleaved 8-bit RGB image.
#[derive(Clone, PartialEq, Eq)]
pub struct ImageU8 {
    height: usize,
    width: usize,
    data: Vec<u8>,
}

impl std::fmt::Debug for ImageU8 {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "ImageU8({}x{})", self.height, self.width)
    }
}

/// Float to byte: round half away from zero, then clamp to [0, 255].
#[inline]
pub fn to_u8(v: f64) -> u8 {
    if v.is_nan() {
        return 0;
    }
    v.round().clamp(0.0, 255.0) as u8
}

impl ImageU8 {
    pub fn new(height: usize, width: usize, data: Vec<u8>) -> Result<Self> {
        if data.len() != height * width * 3 {
            return Err(Error::param(format!(
                "{height}x{width} RGB image needs {} bytes, got {}",
                height * width * 3,
                data.len()
            )));
        }
        Ok(Self { height, width, data })
    }

    pub fn filled(height: usize, width: usize, rgb: [u8; 3]) -> Self {
        let data = rgb.iter().copied().cycle().take(height * width * 3).collect();
        Self { height, width, data }
    }

    pub fn from_fn(height: usize, width: usize, mut f: impl FnMut(usize, usize) -> [u8; 3]) -> Self {
        let mut data = Vec::with_capacity(height * width * 3);
        for y in 0..height {
            for x in 0..width {
                data.extend_from_slice(&f(y, x));
            }
        }
        Self { height, width, data }
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn into_data(self) -> Vec<u8> {
        self.data
    }

    pub fn pixel(&self, y: usize, x: usize) -> [u8; 3] {
        let i = (y * self.width + x) * 3;
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    pub fn set_pixel(&mut self, y: usize, x: usize, rgb: [u8; 3]) {
        let i = (y * self.width + x) * 3;
        self.data[i..i + 3].copy_from_slice(&rgb);
    }

    pub fn load_png(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let img = image::open(path).map_err(|e| match e {
            image::ImageError::IoError(io) => Error::io(path, io),
            other => Error::Image {
                path: path.to_path_buf(),
                msg: other.to_string(),
            },
        })?;
        let rgb = img.to_rgb8();
        let (w, h) = rgb.dimensions();
        Self::new(h as usize, w as usize, rgb.into_raw())
    }

    pub fn save_png(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        image::save_buffer_with_format(
            path,
            &self.data,
            self.width as u32,
            self.height as u32,
            image::ExtendedColorType::Rgb8,
            image::ImageFormat::Png,
        )
        .map_err(|e| match e {
            image::ImageError::IoError(io) => Error::io(path, io),
            other => Error::Image {
                path: path.to_path_buf(),
                msg: other.to_string(),
            },
        })
    }

    /// Planar `[3, H, W]` tensor scaled to [0, 1].
    pub fn to_chw<S: Scalar>(&self) -> Tensor<S> {
        let (h, w) = (self.height, self.width);
        let mut out = vec![S::default(); 3 * h * w];
        for (i, px) in self.data.chunks_exact(3).enumerate() {
            for c in 0..3 {
                out[c * h * w + i] = S::from_f64(f64::from(px[c]) / 255.0);
            }
        }
        Tensor::new(vec![3, h, w], out).expect("consistent layout")
    }

    /// Per-pixel BT.601 luma.
    pub fn luma(&self) -> Vec<f64> {
        self.data.chunks_exact(3).map(|p| luma(p[0], p[1], p[2])).collect()
    }
}

pub(crate) fn luma(r: u8, g: u8, b: u8) -> f64 {
    0.299 * f64::from(r) + 0.587 * f64::from(g) + 0.114 * f64::from(b)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rounding_rule() {
        assert_eq!(to_u8(127.5), 128);
        assert_eq!(to_u8(127.49), 127);
        assert_eq!(to_u8(-3.0), 0);
        assert_eq!(to_u8(300.0), 255);
        assert_eq!(to_u8(f64::NAN), 0);
    }

    #[test]
    fn png_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.png");
        let img = ImageU8::from_fn(5, 7, |y, x| [(y * 30) as u8, (x * 20) as u8, 99]);
        img.save_png(&p).unwrap();
        assert_eq!(ImageU8::load_png(&p).unwrap(), img);
    }

    #[test]
    fn missing_file_is_io_error() {
        let err = ImageU8::load_png("/nonexistent/x.png").unwrap_err();
        assert!(matches!(err, Error::Io { .. }), "{err}");
    }

    #[test]
    fn chw_layout() {
        let img = ImageU8::from_fn(1, 2, |_, x| if x == 0 { [255, 0, 0] } else { [0, 0, 255] });
        let t = img.to_chw::<f64>();
        assert_eq!(t.shape(), &[3, 1, 2]);
        assert_eq!(t.data(), &[1., 0., 0., 0., 0., 1.]);
    }
}
