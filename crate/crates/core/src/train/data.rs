use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::augment::{resize_bilinear, to_u8, ImageU8};
use crate::dataset::ManifestEntry;
use crate::error::{Error, Result};
use crate::nn::{Scalar, Tensor};
use crate::rng::RngState;

/// In-memory images `[N,3,H,W]` scaled to `[0,1]`, with class labels.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledImages<S: Scalar = f32> {
    pub images: Tensor<S>,
    pub labels: Vec<usize>,
}

impl<S: Scalar> LabeledImages<S> {
    pub fn new(images: Tensor<S>, labels: Vec<usize>) -> Result<Self> {
        let s = images.shape();
        if s.len() != 4 || s[1] != 3 || s[0] != labels.len() {
            return Err(Error::param(format!("images {s:?} do not match {} labels", labels.len())));
        }
        Ok(Self { images, labels })
    }

    /// All images must share one size.
    pub fn from_images(images: &[ImageU8], labels: Vec<usize>) -> Result<Self> {
        if images.is_empty() {
            return Err(Error::param("no images"));
        }
        let chw: Vec<Tensor<S>> = images.iter().map(|i| i.to_chw()).collect();
        Self::new(Tensor::stack(&chw)?, labels)
    }

    /// Loads, resizes to `hw` and labels each entry; `binary` maps grades to referable/non-referable.
    pub fn from_entries(entries: &[ManifestEntry], hw: [usize; 2], binary: bool) -> Result<Self> {
        let mut imgs = Vec::with_capacity(entries.len());
        for e in entries {
            let img = ImageU8::load_png(&e.image_path)?;
            imgs.push(if img.height() == hw[0] && img.width() == hw[1] {
                img
            } else {
                resize_bilinear(&img, hw[0], hw[1])?
            });
        }
        let labels = entries
            .iter()
            .map(|e| if binary { e.binary_label() as usize } else { e.grade as usize })
            .collect();
        Self::from_images(&imgs, labels)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn hw(&self) -> (usize, usize) {
        (self.images.shape()[2], self.images.shape()[3])
    }

    pub fn select(&self, idx: &[usize]) -> Result<Self> {
        Ok(Self {
            images: self.images.select_batch(idx)?,
            labels: idx.iter().map(|&i| self.labels[i]).collect(),
        })
    }

    pub fn class_counts(&self, k: usize) -> Vec<usize> {
        let mut c = vec![0; k];
        for &l in &self.labels {
            if l < k {
                c[l] += 1;
            }
        }
        c
    }
}

/// Gaussian-blob images whose position and colour encode the class.
#[derive(Debug, Clone, PartialEq)]
pub struct BlobSpec {
    pub classes: usize,
    pub size: usize,
    /// Pixel noise standard deviation in 0..255 units.
    pub noise: f64,
    /// Maximum blob-centre offset in pixels.
    pub jitter: f64,
}

impl Default for BlobSpec {
    fn default() -> Self {
        Self {
            classes: 5,
            size: 32,
            noise: 12.0,
            jitter: 2.0,
        }
    }
}

const BLOB_COLORS: [[f64; 3]; 5] = [
    [230.0, 70.0, 40.0],
    [240.0, 200.0, 60.0],
    [60.0, 200.0, 90.0],
    [70.0, 110.0, 240.0],
    [220.0, 80.0, 220.0],
];

/// One blob image of class `label` drawn from `rng`.
pub fn blob_image(label: usize, spec: &BlobSpec, rng: &RngState) -> ImageU8 {
    let mut g = rng.generator();
    let s = spec.size as f64;
    // classes sit on a ring so every pair differs in position
    let angle = std::f64::consts::TAU * label as f64 / spec.classes as f64;
    let cy = s / 2.0 + 0.28 * s * angle.sin() + g.random_range(-spec.jitter..=spec.jitter);
    let cx = s / 2.0 + 0.28 * s * angle.cos() + g.random_range(-spec.jitter..=spec.jitter);
    let radius = 0.12 * s;
    let color = BLOB_COLORS[label % BLOB_COLORS.len()];
    let noise = Normal::new(0.0, spec.noise.max(1e-9)).expect("finite");
    let mut px = Vec::with_capacity(spec.size * spec.size * 3);
    for y in 0..spec.size {
        for x in 0..spec.size {
            let d2 = (y as f64 - cy).powi(2) + (x as f64 - cx).powi(2);
            let w = (-d2 / (2.0 * radius * radius)).exp();
            for c in color {
                px.push(to_u8(20.0 + w * (c - 20.0) + noise.sample(&mut g)));
            }
        }
    }
    ImageU8::new(spec.size, spec.size, px).expect("sized")
}

/// `n` balanced samples (label `i % classes`), each from stream `rng/<i>`.
pub fn synthetic_blobs(n: usize, spec: &BlobSpec, rng: &RngState) -> (Vec<ImageU8>, Vec<usize>) {
    let labels: Vec<usize> = (0..n).map(|i| i % spec.classes).collect();
    let images = labels.iter().enumerate().map(|(i, &l)| blob_image(l, spec, &rng.child(i))).collect();
    (images, labels)
}
