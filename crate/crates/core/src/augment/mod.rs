//! Deterministic 8-bit RGB augmentations.
//!
//! Every float-to-byte conversion rounds half away from zero, then clamps to
//! `[0, 255]` (see [`image::to_u8`]). Random ops draw their parameters from an
//! [`RngState`] child stream named after the op, so an image-specific stream
//! gives results that do not depend on processing order.

pub mod clahe;
pub mod color;
pub mod filter;
pub mod geometry;
pub mod image;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

pub use clahe::{clahe, clip_histogram, clipped_tile_histograms, tile_mapping, ClippedHistogram};
pub use color::{brightness_contrast, fancy_pca, PixelBasis};
pub use filter::{emboss, gaussian_blur, gaussian_kernel, sharpen};
pub use geometry::{hflip, resize_bilinear, rotate, vflip};
pub use image::{to_u8, ImageU8};

use crate::error::{Error, Result};
use crate::rng::RngState;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AugmentKind {
    Blur,
    VerticalFlip,
    HorizontalFlip,
    Rotate,
    Sharpen,
    Clahe,
    Emboss,
    FancyPca,
    BrightnessContrast,
}

impl AugmentKind {
    /// The nine ops in expansion order.
    pub const ALL: [AugmentKind; 9] = [
        AugmentKind::Blur,
        AugmentKind::VerticalFlip,
        AugmentKind::HorizontalFlip,
        AugmentKind::Rotate,
        AugmentKind::Sharpen,
        AugmentKind::Clahe,
        AugmentKind::Emboss,
        AugmentKind::FancyPca,
        AugmentKind::BrightnessContrast,
    ];

    pub fn name(self) -> &'static str {
        match self {
            AugmentKind::Blur => "blur",
            AugmentKind::VerticalFlip => "vflip",
            AugmentKind::HorizontalFlip => "hflip",
            AugmentKind::Rotate => "rotate",
            AugmentKind::Sharpen => "sharpen",
            AugmentKind::Clahe => "clahe",
            AugmentKind::Emboss => "emboss",
            AugmentKind::FancyPca => "fancy_pca",
            AugmentKind::BrightnessContrast => "brightness_contrast",
        }
    }
}

/// Ranges the random ops draw from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AugmentParams {
    /// Angle drawn uniformly from `[-limit, limit]` degrees.
    pub rotation_limit_deg: f64,
    pub blur_sigma: [f64; 2],
    pub blur_ksize: usize,
    pub clahe_clip_limit: f64,
    /// Clamped to the image size inside the expansion.
    pub clahe_tiles: [usize; 2],
    pub pca_sigma: f64,
    pub brightness_limit: f64,
    pub contrast_limit: f64,
    pub sharpen_alpha: [f64; 2],
    pub emboss_alpha: [f64; 2],
}

impl Default for AugmentParams {
    fn default() -> Self {
        Self {
            rotation_limit_deg: 180.0,
            blur_sigma: [0.5, 1.5],
            blur_ksize: 5,
            clahe_clip_limit: 2.0,
            clahe_tiles: [8, 8],
            pca_sigma: 0.1,
            brightness_limit: 0.2,
            contrast_limit: 0.2,
            sharpen_alpha: [0.2, 0.5],
            emboss_alpha: [0.2, 0.5],
        }
    }
}

impl AugmentParams {
    /// Zero-strength ranges: every parameterised op becomes the identity.
    pub fn identity() -> Self {
        Self {
            rotation_limit_deg: 0.0,
            blur_sigma: [0.0, 0.0],
            clahe_clip_limit: 1.0,
            pca_sigma: 0.0,
            brightness_limit: 0.0,
            contrast_limit: 0.0,
            sharpen_alpha: [0.0, 0.0],
            emboss_alpha: [0.0, 0.0],
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let range = |name: &str, r: [f64; 2], lo: f64, hi: f64| {
            if r[0].is_finite() && r[1].is_finite() && lo <= r[0] && r[0] <= r[1] && r[1] <= hi {
                Ok(())
            } else {
                Err(Error::param(format!("{name} range {r:?} must lie in [{lo}, {hi}] and be ordered")))
            }
        };
        range("blur_sigma", self.blur_sigma, 0.0, 100.0)?;
        range("sharpen_alpha", self.sharpen_alpha, 0.0, 1.0)?;
        range("emboss_alpha", self.emboss_alpha, 0.0, 1.0)?;
        gaussian_kernel(0.0, self.blur_ksize)?;
        let checks = [
            ("rotation_limit_deg", self.rotation_limit_deg, 0.0, 360.0),
            ("clahe_clip_limit", self.clahe_clip_limit, 1.0, f64::MAX),
            ("pca_sigma", self.pca_sigma, 0.0, 10.0),
            ("brightness_limit", self.brightness_limit, 0.0, 1.0),
            ("contrast_limit", self.contrast_limit, 0.0, 0.999),
        ];
        for (name, v, lo, hi) in checks {
            if !(lo..=hi).contains(&v) {
                return Err(Error::param(format!("{name} = {v} outside [{lo}, {hi}]")));
            }
        }
        if self.clahe_tiles.contains(&0) {
            return Err(Error::param("clahe_tiles must be at least 1x1"));
        }
        Ok(())
    }
}

/// One op with concrete parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum AugmentOp {
    Blur { sigma: f64, ksize: usize },
    VerticalFlip,
    HorizontalFlip,
    Rotate { angle_deg: f64 },
    Sharpen { alpha: f64 },
    Clahe { clip_limit: f64, tiles: [usize; 2] },
    Emboss { alpha: f64 },
    FancyPca { alphas: [f64; 3] },
    BrightnessContrast { brightness: f64, contrast: f64 },
}

fn uniform(rng: &mut impl Rng, r: [f64; 2]) -> f64 {
    if r[0] == r[1] {
        r[0]
    } else {
        rng.random_range(r[0]..=r[1])
    }
}

impl AugmentOp {
    pub fn kind(&self) -> AugmentKind {
        match self {
            AugmentOp::Blur { .. } => AugmentKind::Blur,
            AugmentOp::VerticalFlip => AugmentKind::VerticalFlip,
            AugmentOp::HorizontalFlip => AugmentKind::HorizontalFlip,
            AugmentOp::Rotate { .. } => AugmentKind::Rotate,
            AugmentOp::Sharpen { .. } => AugmentKind::Sharpen,
            AugmentOp::Clahe { .. } => AugmentKind::Clahe,
            AugmentOp::Emboss { .. } => AugmentKind::Emboss,
            AugmentOp::FancyPca { .. } => AugmentKind::FancyPca,
            AugmentOp::BrightnessContrast { .. } => AugmentKind::BrightnessContrast,
        }
    }

    /// Draw parameters for `kind` from the `kind.name()` child of `rng`.
    pub fn draw(kind: AugmentKind, params: &AugmentParams, rng: &RngState) -> Result<Self> {
        params.validate()?;
        let mut g = rng.child(kind.name()).generator();
        let sym = |g: &mut rand_chacha::ChaCha8Rng, l: f64| uniform(g, [-l, l]);
        Ok(match kind {
            AugmentKind::Blur => AugmentOp::Blur {
                sigma: uniform(&mut g, params.blur_sigma),
                ksize: params.blur_ksize,
            },
            AugmentKind::VerticalFlip => AugmentOp::VerticalFlip,
            AugmentKind::HorizontalFlip => AugmentOp::HorizontalFlip,
            AugmentKind::Rotate => AugmentOp::Rotate {
                angle_deg: sym(&mut g, params.rotation_limit_deg),
            },
            AugmentKind::Sharpen => AugmentOp::Sharpen {
                alpha: uniform(&mut g, params.sharpen_alpha),
            },
            AugmentKind::Clahe => AugmentOp::Clahe {
                clip_limit: params.clahe_clip_limit,
                tiles: params.clahe_tiles,
            },
            AugmentKind::Emboss => AugmentOp::Emboss {
                alpha: uniform(&mut g, params.emboss_alpha),
            },
            AugmentKind::FancyPca => {
                let mut alphas = [0.0; 3];
                if params.pca_sigma > 0.0 {
                    let n = Normal::new(0.0, params.pca_sigma).map_err(|e| Error::param(e.to_string()))?;
                    for a in &mut alphas {
                        *a = n.sample(&mut g);
                    }
                }
                AugmentOp::FancyPca { alphas }
            }
            AugmentKind::BrightnessContrast => {
                let brightness = sym(&mut g, params.brightness_limit);
                let contrast = sym(&mut g, params.contrast_limit);
                AugmentOp::BrightnessContrast { brightness, contrast }
            }
        })
    }

    pub fn apply(&self, img: &ImageU8) -> Result<ImageU8> {
        match *self {
            AugmentOp::Blur { sigma, ksize } => gaussian_blur(img, sigma, ksize),
            AugmentOp::VerticalFlip => Ok(vflip(img)),
            AugmentOp::HorizontalFlip => Ok(hflip(img)),
            AugmentOp::Rotate { angle_deg } => Ok(rotate(img, angle_deg)),
            AugmentOp::Sharpen { alpha } => sharpen(img, alpha),
            AugmentOp::Clahe { clip_limit, tiles } => {
                let t = (tiles[0].min(img.height()).max(1), tiles[1].min(img.width()).max(1));
                clahe(img, clip_limit, t)
            }
            AugmentOp::Emboss { alpha } => emboss(img, alpha),
            AugmentOp::FancyPca { alphas } => fancy_pca(img, alphas),
            AugmentOp::BrightnessContrast { brightness, contrast } => {
                brightness_contrast(img, brightness, contrast)
            }
        }
    }
}

/// Draw and apply one op.
pub fn augment(img: &ImageU8, kind: AugmentKind, params: &AugmentParams, rng: &RngState) -> Result<ImageU8> {
    AugmentOp::draw(kind, params, rng)?.apply(img)
}

/// Op used for variant `v` (1-based) of a multiplied image; variant 0 is the original.
pub fn variant_kind(v: usize) -> Option<AugmentKind> {
    (v > 0).then(|| AugmentKind::ALL[(v - 1) % 9])
}

/// `multiplier` images: the original, then ops cycling through [`AugmentKind::ALL`].
/// Cycles after the first draw from stream `cycle{n}` so repeats differ.
pub fn expand(img: &ImageU8, multiplier: usize, params: &AugmentParams, rng: &RngState) -> Result<Vec<ImageU8>> {
    if multiplier == 0 {
        return Err(Error::param("augmentation multiplier must be >= 1"));
    }
    (0..multiplier)
        .map(|v| variant(img, v, params, rng))
        .collect()
}

/// Variant `v` of [`expand`], computed on its own.
pub fn variant(img: &ImageU8, v: usize, params: &AugmentParams, rng: &RngState) -> Result<ImageU8> {
    match variant_kind(v) {
        None => Ok(img.clone()),
        Some(kind) => {
            let cycle = (v - 1) / 9;
            let stream = if cycle == 0 { rng.clone() } else { rng.child(format!("cycle{cycle}")) };
            augment(img, kind, params, &stream)
        }
    }
}

/// `[original, blur, vflip, hflip, rotate, sharpen, clahe, emboss, fancy_pca, brightness_contrast]`
/// with default parameter ranges.
pub fn expand_tenfold(img: &ImageU8, rng: &RngState) -> Result<[ImageU8; 10]> {
    expand_tenfold_with(img, &AugmentParams::default(), rng)
}

pub fn expand_tenfold_with(img: &ImageU8, params: &AugmentParams, rng: &RngState) -> Result<[ImageU8; 10]> {
    let v = expand(img, 10, params, rng)?;
    Ok(v.try_into().expect("ten variants"))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn img() -> ImageU8 {
        ImageU8::from_fn(16, 20, |y, x| [(x * 12) as u8, (y * 15) as u8, ((x * y) % 256) as u8])
    }

    #[test]
    fn tenfold_shape_and_order() {
        let i = img();
        let rng = RngState::new(7, "augment");
        let out = expand_tenfold(&i, &rng).unwrap();
        assert_eq!(out[0], i);
        assert_eq!(out[2], vflip(&i));
        assert_eq!(out[3], hflip(&i));
        assert!(out.iter().all(|o| o.height() == 16 && o.width() == 20));
        assert_eq!(out, expand_tenfold(&i, &rng).unwrap());
        assert_ne!(out[4], expand_tenfold(&i, &RngState::new(8, "augment")).unwrap()[4]);
    }

    #[test]
    fn identity_params() {
        let i = img();
        let p = AugmentParams::identity();
        let rng = RngState::new(1, "augment");
        for k in AugmentKind::ALL {
            let out = augment(&i, k, &p, &rng).unwrap();
            match k {
                AugmentKind::VerticalFlip | AugmentKind::HorizontalFlip => {
                    assert_eq!(augment(&out, k, &p, &rng).unwrap(), i)
                }
                _ => assert_eq!(out, i, "{k:?}"),
            }
        }
    }

    #[test]
    fn variant_cycles() {
        assert_eq!(variant_kind(0), None);
        assert_eq!(variant_kind(1), Some(AugmentKind::Blur));
        assert_eq!(variant_kind(9), Some(AugmentKind::BrightnessContrast));
        assert_eq!(variant_kind(10), Some(AugmentKind::Blur));
        let i = img();
        let rng = RngState::new(3, "x");
        let p = AugmentParams::default();
        assert_ne!(variant(&i, 4, &p, &rng).unwrap(), variant(&i, 13, &p, &rng).unwrap());
    }

    #[test]
    fn params_roundtrip_and_validate() {
        let p = AugmentParams::default();
        let s = serde_json::to_string(&p).unwrap();
        assert_eq!(serde_json::from_str::<AugmentParams>(&s).unwrap(), p);
        let bad = AugmentParams { sharpen_alpha: [0.5, 0.2], ..p };
        assert!(bad.validate().is_err());
        let op = AugmentOp::Rotate { angle_deg: 3.0 };
        assert_eq!(serde_json::to_string(&op).unwrap(), r#"{"op":"rotate","angle_deg":3.0}"#);
    }
}
