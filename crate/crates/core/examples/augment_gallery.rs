//! Expands one synthetic fundus-like image into its ten variants and saves them as PNGs.
//!
//! `cargo run --example augment_gallery -- [out_dir]`

use drgrade::augment::{expand_tenfold, variant_kind, ImageU8};
use drgrade::rng::RngState;

fn main() -> drgrade::Result<()> {
    let out = std::env::args().nth(1).unwrap_or_else(|| "gallery".into());
    std::fs::create_dir_all(&out).map_err(|e| drgrade::Error::io(&out, e))?;
    let (h, w) = (96, 96);
    let img = ImageU8::from_fn(h, w, |y, x| {
        let (dy, dx) = (y as f64 - 48.0, x as f64 - 48.0);
        let r = (dy * dy + dx * dx).sqrt();
        if r > 44.0 {
            [0, 0, 0]
        } else {
            let v = (1.0 - r / 44.0) * 120.0;
            [(110.0 + v) as u8, (50.0 + v * 0.5) as u8, 20 + ((x * 7 + y * 3) % 30) as u8]
        }
    });
    for (v, im) in expand_tenfold(&img, &RngState::new(7, "gallery"))?.iter().enumerate() {
        let name = variant_kind(v).map_or("original", |k| k.name());
        let path = std::path::Path::new(&out).join(format!("{v:02}_{name}.png"));
        im.save_png(&path)?;
        println!("{}", path.display());
    }
    Ok(())
}
