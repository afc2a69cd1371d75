use nalgebra::{Matrix3, SymmetricEigen, Vector3};

use super::image::{to_u8, ImageU8};
use crate::error::{Error, Result};

/// Principal axes of an image's RGB pixel distribution, in `[0,1]` units.
/// Eigenvalues are sorted descending; each eigenvector is signed so that its
/// largest-magnitude component is positive.
#[derive(Debug, Clone, PartialEq)]
pub struct PixelBasis {
    pub eigenvalues: [f64; 3],
    pub eigenvectors: [[f64; 3]; 3],
}

impl PixelBasis {
    pub fn of(img: &ImageU8) -> Result<Self> {
        let n = img.height() * img.width();
        if n == 0 {
            return Err(Error::param("fancy PCA on an empty image"));
        }
        let mut mean = Vector3::zeros();
        for p in img.data().chunks(3) {
            mean += Vector3::new(p[0] as f64, p[1] as f64, p[2] as f64) / 255.0;
        }
        mean /= n as f64;
        let mut cov = Matrix3::zeros();
        for p in img.data().chunks(3) {
            let d = Vector3::new(p[0] as f64, p[1] as f64, p[2] as f64) / 255.0 - mean;
            cov += d * d.transpose();
        }
        cov /= n as f64;
        let eig = SymmetricEigen::new(cov);
        let mut order = [0usize, 1, 2];
        order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
        let mut eigenvalues = [0.0; 3];
        let mut eigenvectors = [[0.0; 3]; 3];
        for (slot, &i) in order.iter().enumerate() {
            eigenvalues[slot] = eig.eigenvalues[i].max(0.0);
            let col = eig.eigenvectors.column(i);
            let mut v = [col[0], col[1], col[2]];
            let lead = v.iter().copied().fold(0.0f64, |m, c| if c.abs() > m.abs() { c } else { m });
            if lead < 0.0 {
                v.iter_mut().for_each(|c| *c = -*c);
            }
            eigenvectors[slot] = v;
        }
        Ok(Self { eigenvalues, eigenvectors })
    }

    /// RGB shift in 0..255 units: `255 · Σ αᵢ λᵢ pᵢ`.
    pub fn shift(&self, alphas: [f64; 3]) -> [f64; 3] {
        let mut s = [0.0; 3];
        for i in 0..3 {
            for (c, sc) in s.iter_mut().enumerate() {
                *sc += 255.0 * alphas[i] * self.eigenvalues[i] * self.eigenvectors[i][c];
            }
        }
        s
    }
}

/// Add the PCA colour shift for `alphas` to every pixel.
pub fn fancy_pca(img: &ImageU8, alphas: [f64; 3]) -> Result<ImageU8> {
    if alphas.iter().any(|a| !a.is_finite()) {
        return Err(Error::param("fancy PCA alphas must be finite"));
    }
    if alphas == [0.0; 3] {
        return Ok(img.clone());
    }
    let shift = PixelBasis::of(img)?.shift(alphas);
    let data = img
        .data()
        .chunks(3)
        .flat_map(|p| [0, 1, 2].map(|c| to_u8(p[c] as f64 + shift[c])))
        .collect();
    ImageU8::new(img.height(), img.width(), data)
}

/// `out = (1 + contrast)(in − m) + m + 255·brightness`, with `m` the mean luma.
pub fn brightness_contrast(img: &ImageU8, brightness: f64, contrast: f64) -> Result<ImageU8> {
    if !brightness.is_finite() || !(contrast > -1.0) || !contrast.is_finite() {
        return Err(Error::param(format!(
            "brightness {brightness} / contrast {contrast} out of range"
        )));
    }
    if brightness == 0.0 && contrast == 0.0 {
        return Ok(img.clone());
    }
    let lum = img.luma();
    let m = if lum.is_empty() { 0.0 } else { lum.iter().sum::<f64>() / lum.len() as f64 };
    let data = img
        .data()
        .iter()
        .map(|&v| to_u8((1.0 + contrast) * (v as f64 - m) + m + 255.0 * brightness))
        .collect();
    ImageU8::new(img.height(), img.width(), data)
}
