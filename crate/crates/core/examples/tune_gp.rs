//! Bayesian search over learning rate and momentum against a known quadratic surface.

use drgrade::rng::RngState;
use drgrade::train::{gp_tune, quadratic_objective, TuneSpace};

fn main() -> drgrade::Result<()> {
    let target = (0.02, 0.85);
    let r = gp_tune(&TuneSpace::default(), quadratic_objective(target), &RngState::new(3, "tune"))?;
    for t in &r.trace {
        println!(
            "{:>2} {:<21} lr {:.5} momentum {:.4} score {:>9.6} best {:>9.6}",
            t.index,
            format!("{:?}", t.source),
            t.lr,
            t.momentum,
            t.score.unwrap_or(f64::NAN),
            t.incumbent.unwrap_or(f64::NAN)
        );
    }
    println!("target {target:?}, found ({:.5}, {:.4})", r.best_lr, r.best_momentum);
    Ok(())
}
