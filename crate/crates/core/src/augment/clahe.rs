//! Contrast-limited adaptive histogram equalization on the BT.601 luma channel.
//!
//! Each tile gets a 256-bin luma histogram, clipped at
//! `clip_limit · tile_pixels / 256`. The clipped excess is handed back as one
//! common increment to every bin, with no bin allowed to rise above the clip
//! level. Luma `v` then maps through the mid-rank CDF
//! `255 · (cdf(v) − h(v)/2) / tile_pixels`, so `clip_limit = 1` (a flat
//! histogram) is the identity after rounding. A tile whose luma is constant
//! keeps the identity mapping. Per-pixel mappings are bilinearly interpolated
//! between tile centres, and the luma change is added equally to R, G and B,
//! which leaves the BT.601 chroma components untouched.

use super::image::{luma, to_u8, ImageU8};
use crate::error::{Error, Result};

/// Clip `hist` at `limit` and give the excess back as a common per-bin
/// increment, capped at `limit`. Returns the new bins and the increment.
///
/// With `limit >= mean bin height` the whole excess always fits.
pub fn clip_histogram(hist: &[f64; 256], limit: f64) -> ([f64; 256], f64) {
    let mut out = [0.0; 256];
    let mut excess = 0.0;
    for (o, &h) in out.iter_mut().zip(hist) {
        *o = h.min(limit);
        excess += (h - limit).max(0.0);
    }
    if excess <= 0.0 {
        return (out, 0.0);
    }
    // smallest increment d with sum(min(limit - bin, d)) == excess
    let mut gaps: Vec<f64> = out.iter().map(|&b| limit - b).collect();
    gaps.sort_by(f64::total_cmp);
    let mut remaining = excess;
    let mut increment = 0.0;
    for (i, &g) in gaps.iter().enumerate() {
        let open = (256 - i) as f64;
        let step = g - increment;
        if step * open >= remaining {
            increment += remaining / open;
            remaining = 0.0;
            break;
        }
        remaining -= step * open;
        increment = g;
    }
    debug_assert!(remaining <= 1e-9 * excess.max(1.0), "clip limit below mean bin height");
    for o in out.iter_mut() {
        *o = (*o + increment).min(limit);
    }
    (out, increment)
}

/// Luma mapping for one tile.
pub fn tile_mapping(hist: &[f64; 256], clip_limit: f64) -> [f64; 256] {
    let n: f64 = hist.iter().sum();
    let occupied = hist.iter().filter(|&&h| h > 0.0).count();
    let mut map = [0.0; 256];
    if occupied <= 1 {
        for (v, m) in map.iter_mut().enumerate() {
            *m = v as f64;
        }
        return map;
    }
    let (clipped, _) = clip_histogram(hist, clip_limit * n / 256.0);
    let mut cdf = 0.0;
    for (m, h) in map.iter_mut().zip(clipped) {
        cdf += h;
        *m = 255.0 * (cdf - h / 2.0) / n;
    }
    map
}

fn bounds(len: usize, tiles: usize) -> Vec<(usize, usize)> {
    (0..tiles).map(|i| (i * len / tiles, (i + 1) * len / tiles)).collect()
}

/// For each coordinate: (lower tile, upper tile, weight of the upper tile).
fn interp_axis(len: usize, tiles: &[(usize, usize)]) -> Vec<(usize, usize, f64)> {
    let centres: Vec<f64> = tiles.iter().map(|&(a, b)| (a + b - 1) as f64 / 2.0).collect();
    (0..len)
        .map(|p| {
            let p = p as f64;
            if p <= centres[0] {
                return (0, 0, 0.0);
            }
            let last = centres.len() - 1;
            if p >= centres[last] {
                return (last, last, 0.0);
            }
            let i = centres.iter().rposition(|&c| c <= p).unwrap_or(0);
            (i, i + 1, (p - centres[i]) / (centres[i + 1] - centres[i]))
        })
        .collect()
}

fn check_grid(img: &ImageU8, clip_limit: f64, (ty, tx): (usize, usize)) -> Result<()> {
    let (h, w) = (img.height(), img.width());
    if ty == 0 || tx == 0 {
        return Err(Error::param("CLAHE tile grid must be at least 1x1"));
    }
    if !(clip_limit >= 1.0) {
        return Err(Error::param(format!("CLAHE clip limit must be >= 1, got {clip_limit}")));
    }
    if h < ty || w < tx {
        return Err(Error::param(format!(
            "image {h}x{w} smaller than CLAHE tile grid {ty}x{tx}"
        )));
    }
    Ok(())
}

pub fn clahe(img: &ImageU8, clip_limit: f64, tiles: (usize, usize)) -> Result<ImageU8> {
    check_grid(img, clip_limit, tiles)?;
    let (ty, tx) = tiles;
    let (h, w) = (img.height(), img.width());
    let q: Vec<u8> = img.luma().into_iter().map(to_u8).collect();
    let rows = bounds(h, ty);
    let cols = bounds(w, tx);
    let mut maps = Vec::with_capacity(ty * tx);
    for &(y0, y1) in &rows {
        for &(x0, x1) in &cols {
            let mut hist = [0.0; 256];
            for y in y0..y1 {
                for x in x0..x1 {
                    hist[q[y * w + x] as usize] += 1.0;
                }
            }
            maps.push(tile_mapping(&hist, clip_limit));
        }
    }
    let iy = interp_axis(h, &rows);
    let ix = interp_axis(w, &cols);
    let d = img.data();
    let mut out = Vec::with_capacity(d.len());
    for y in 0..h {
        let (ya, yb, wy) = iy[y];
        for x in 0..w {
            let (xa, xb, wx) = ix[x];
            let v = q[y * w + x] as usize;
            let m = |r: usize, c: usize| maps[r * tx + c][v];
            let top = m(ya, xa) * (1.0 - wx) + m(ya, xb) * wx;
            let bot = m(yb, xa) * (1.0 - wx) + m(yb, xb) * wx;
            let delta = top * (1.0 - wy) + bot * wy - v as f64;
            let i = (y * w + x) * 3;
            for c in 0..3 {
                out.push(to_u8(f64::from(d[i + c]) + delta));
            }
        }
    }
    ImageU8::new(h, w, out)
}

/// A tile histogram after clipping, with the clip level and the common
/// per-bin increment that redistributed the excess.
#[derive(Debug, Clone)]
pub struct ClippedHistogram {
    pub bins: [f64; 256],
    pub limit: f64,
    pub share: f64,
}

/// Post-clip histograms of every tile, row-major over the grid.
pub fn clipped_tile_histograms(img: &ImageU8, clip_limit: f64, tiles: (usize, usize)) -> Result<Vec<ClippedHistogram>> {
    check_grid(img, clip_limit, tiles)?;
    let (h, w) = (img.height(), img.width());
    let lum: Vec<u8> = img.data().chunks(3).map(|p| to_u8(luma(p[0], p[1], p[2]))).collect();
    let mut out = Vec::new();
    for (y0, y1) in bounds(h, tiles.0) {
        for (x0, x1) in bounds(w, tiles.1) {
            let mut hist = [0.0; 256];
            for y in y0..y1 {
                for x in x0..x1 {
                    hist[lum[y * w + x] as usize] += 1.0;
                }
            }
            let n = ((y1 - y0) * (x1 - x0)) as f64;
            let limit = clip_limit * n / 256.0;
            let (bins, share) = clip_histogram(&hist, limit);
            out.push(ClippedHistogram { bins, limit, share });
        }
    }
    Ok(out)
}
