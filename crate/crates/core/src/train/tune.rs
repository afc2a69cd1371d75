//! Gaussian-process Bayesian optimisation over (learning rate, momentum).
//!
//! Points live in the unit square; the learning-rate axis is log-scaled. The
//! surrogate is a zero-mean GP on standardised scores with an RBF kernel whose
//! per-axis length scales and signal variance are picked by grid search on the
//! log marginal likelihood. Each step maximises expected improvement over
//! random candidates plus perturbations of the incumbent.

use nalgebra::{Cholesky, DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Normal as NormalDist};
use serde::{Deserialize, Serialize};
use statrs::distribution::{Continuous, ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::rng::RngState;

pub const JITTER: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TuneSpace {
    /// Searched on a log scale.
    pub lr: [f64; 2],
    pub momentum: [f64; 2],
    pub init_points: usize,
    pub budget: usize,
    pub candidates: usize,
}

impl Default for TuneSpace {
    fn default() -> Self {
        Self {
            lr: [1e-3, 0.1],
            momentum: [0.5, 0.99],
            init_points: 5,
            budget: 20,
            candidates: 2000,
        }
    }
}

impl TuneSpace {
    pub fn validate(&self) -> Result<()> {
        let [l0, l1] = self.lr;
        let [m0, m1] = self.momentum;
        if !(l0 > 0.0 && l1 > l0 && l1.is_finite()) {
            return Err(Error::param(format!("lr range {:?} must be positive and increasing", self.lr)));
        }
        if !(m0 >= 0.0 && m1 > m0 && m1 < 1.0) {
            return Err(Error::param(format!("momentum range {:?} must be increasing within [0,1)", self.momentum)));
        }
        if self.init_points < 2 || self.budget < self.init_points {
            return Err(Error::param("need budget >= init_points >= 2"));
        }
        if self.candidates == 0 {
            return Err(Error::param("candidates must be >= 1"));
        }
        Ok(())
    }

    pub fn to_params(&self, u: [f64; 2]) -> (f64, f64) {
        let (a, b) = (self.lr[0].ln(), self.lr[1].ln());
        let lr = (a + u[0] * (b - a)).exp();
        let m = self.momentum[0] + u[1] * (self.momentum[1] - self.momentum[0]);
        (lr, m)
    }

    pub fn to_unit(&self, lr: f64, momentum: f64) -> [f64; 2] {
        let (a, b) = (self.lr[0].ln(), self.lr[1].ln());
        [
            (lr.ln() - a) / (b - a),
            (momentum - self.momentum[0]) / (self.momentum[1] - self.momentum[0]),
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trial {
    pub index: usize,
    pub lr: f64,
    pub momentum: f64,
    /// `None` when the objective failed or was not finite.
    pub score: Option<f64>,
    /// Best score so far, including this trial.
    pub incumbent: Option<f64>,
    pub source: TrialSource,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrialSource {
    LatinHypercube,
    ExpectedImprovement,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuneResult {
    pub best_lr: f64,
    pub best_momentum: f64,
    pub best_score: f64,
    pub trace: Vec<Trial>,
}

/// `n` Latin-hypercube points in the unit square.
pub fn latin_hypercube(n: usize, rng: &RngState) -> Vec<[f64; 2]> {
    let mut g = rng.generator();
    let mut axes = [(0..n).collect::<Vec<_>>(), (0..n).collect::<Vec<_>>()];
    for a in &mut axes {
        a.shuffle(&mut g);
    }
    (0..n)
        .map(|i| {
            let u0 = (axes[0][i] as f64 + g.random::<f64>()) / n as f64;
            let u1 = (axes[1][i] as f64 + g.random::<f64>()) / n as f64;
            [u0, u1]
        })
        .collect()
}

/// Fitted GP posterior over standardised scores.
pub struct Gp {
    x: Vec<[f64; 2]>,
    length: [f64; 2],
    signal: f64,
    chol: Cholesky<f64, nalgebra::Dyn>,
    alpha: DVector<f64>,
    mean: f64,
    scale: f64,
}

fn rbf(a: &[f64; 2], b: &[f64; 2], length: &[f64; 2], signal: f64) -> f64 {
    let d0 = (a[0] - b[0]) / length[0];
    let d1 = (a[1] - b[1]) / length[1];
    signal * (-0.5 * (d0 * d0 + d1 * d1)).exp()
}

const LENGTH_GRID: [f64; 10] = [0.03, 0.05, 0.08, 0.12, 0.2, 0.3, 0.5, 0.8, 1.3, 2.0];
const SIGNAL_GRID: [f64; 3] = [0.5, 1.0, 2.0];

impl Gp {
    pub fn fit(x: &[[f64; 2]], y: &[f64]) -> Result<Self> {
        let n = x.len();
        if n == 0 || n != y.len() {
            return Err(Error::param("GP needs matching, non-empty observations"));
        }
        let mean = y.iter().sum::<f64>() / n as f64;
        let var = y.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64;
        let scale = if var > 0.0 { var.sqrt() } else { 1.0 };
        let ys = DVector::from_iterator(n, y.iter().map(|v| (v - mean) / scale));
        let mut best: Option<(f64, [f64; 2], f64, Cholesky<f64, nalgebra::Dyn>, DVector<f64>)> = None;
        for &l0 in &LENGTH_GRID {
            for &l1 in &LENGTH_GRID {
                for &s in &SIGNAL_GRID {
                    let length = [l0, l1];
                    let k = DMatrix::from_fn(n, n, |i, j| rbf(&x[i], &x[j], &length, s) + if i == j { JITTER } else { 0.0 });
                    let Some(chol) = Cholesky::new(k) else { continue };
                    let alpha = chol.solve(&ys);
                    let logdet: f64 = chol.l_dirty().diagonal().iter().map(|d| d.ln()).sum();
                    let lml = -0.5 * ys.dot(&alpha) - logdet;
                    if lml.is_finite() && best.as_ref().is_none_or(|b| lml > b.0) {
                        best = Some((lml, length, s, chol, alpha));
                    }
                }
            }
        }
        let (_, length, signal, chol, alpha) = best.ok_or_else(|| Error::numeric("GP kernel matrix not positive definite"))?;
        Ok(Self {
            x: x.to_vec(),
            length,
            signal,
            chol,
            alpha,
            mean,
            scale,
        })
    }

    pub fn length_scales(&self) -> [f64; 2] {
        self.length
    }

    /// Posterior mean and standard deviation in standardised units.
    pub fn predict_std(&self, p: &[f64; 2]) -> (f64, f64) {
        let ks = DVector::from_iterator(self.x.len(), self.x.iter().map(|xi| rbf(xi, p, &self.length, self.signal)));
        let mu = ks.dot(&self.alpha);
        let v = self.chol.l().solve_lower_triangular(&ks).expect("nonsingular");
        let var = (self.signal - v.dot(&v)).max(0.0);
        (mu, var.sqrt())
    }

    /// Posterior mean and standard deviation in score units.
    pub fn predict(&self, p: &[f64; 2]) -> (f64, f64) {
        let (m, s) = self.predict_std(p);
        (self.mean + self.scale * m, self.scale * s)
    }

    pub fn standardize(&self, y: f64) -> f64 {
        (y - self.mean) / self.scale
    }
}

/// Expected improvement over `best` for a maximisation problem.
pub fn expected_improvement(mu: f64, sigma: f64, best: f64) -> f64 {
    if sigma <= 0.0 {
        return (mu - best).max(0.0);
    }
    let n = Normal::standard();
    let z = (mu - best) / sigma;
    (mu - best) * n.cdf(z) + sigma * n.pdf(z)
}

/// Maximise `objective(lr, momentum)` within `space.budget` evaluations.
/// Failed or non-finite evaluations are recorded and left out of the GP.
pub fn gp_tune(space: &TuneSpace, mut objective: impl FnMut(f64, f64) -> Result<f64>, rng: &RngState) -> Result<TuneResult> {
    space.validate()?;
    let mut trace: Vec<Trial> = Vec::new();
    let mut obs_x: Vec<[f64; 2]> = Vec::new();
    let mut obs_y: Vec<f64> = Vec::new();
    let mut best: Option<(f64, f64, f64)> = None;
    let mut record = |u: [f64; 2], source: TrialSource, trace: &mut Vec<Trial>, obs_x: &mut Vec<[f64; 2]>, obs_y: &mut Vec<f64>| {
        let (lr, m) = space.to_params(u);
        let score = match objective(lr, m) {
            Ok(v) if v.is_finite() => Some(v),
            Ok(v) => {
                log::warn!("tune trial {}: objective returned {v}", trace.len());
                None
            }
            Err(e) => {
                log::warn!("tune trial {}: {e}", trace.len());
                None
            }
        };
        if let Some(s) = score {
            obs_x.push(u);
            obs_y.push(s);
            if best.is_none_or(|b| s > b.2) {
                best = Some((lr, m, s));
            }
        }
        log::info!("tune trial {}: lr {lr:.5} momentum {m:.4} score {score:?}", trace.len());
        trace.push(Trial {
            index: trace.len(),
            lr,
            momentum: m,
            score,
            incumbent: best.map(|b| b.2),
            source,
        });
    };

    for u in latin_hypercube(space.init_points, &rng.child("lhs")) {
        record(u, TrialSource::LatinHypercube, &mut trace, &mut obs_x, &mut obs_y);
    }
    for t in space.init_points..space.budget {
        let mut g = rng.child(format!("candidates{t}")).generator();
        let u = if obs_x.len() < 2 {
            [g.random::<f64>(), g.random::<f64>()]
        } else {
            let gp = Gp::fit(&obs_x, &obs_y)?;
            let inc_i = (0..obs_y.len()).max_by(|&a, &b| obs_y[a].total_cmp(&obs_y[b])).expect("nonempty");
            let inc = obs_x[inc_i];
            let f_best = gp.standardize(obs_y[inc_i]);
            let mut cands: Vec<[f64; 2]> = (0..space.candidates).map(|_| [g.random::<f64>(), g.random::<f64>()]).collect();
            for sd in [0.1, 0.03, 0.01] {
                let d = NormalDist::new(0.0, sd).expect("finite");
                for _ in 0..space.candidates / 8 + 1 {
                    let p = [inc[0] + d.sample(&mut g), inc[1] + d.sample(&mut g)];
                    cands.push([p[0].clamp(0.0, 1.0), p[1].clamp(0.0, 1.0)]);
                }
            }
            let mut pick = cands[0];
            let mut pick_ei = f64::NEG_INFINITY;
            for c in cands {
                let (mu, sd) = gp.predict_std(&c);
                let ei = expected_improvement(mu, sd, f_best);
                if ei > pick_ei {
                    pick_ei = ei;
                    pick = c;
                }
            }
            pick
        };
        record(u, TrialSource::ExpectedImprovement, &mut trace, &mut obs_x, &mut obs_y);
    }
    let (best_lr, best_momentum, best_score) = best.ok_or_else(|| Error::numeric("every tuning trial failed"))?;
    Ok(TuneResult {
        best_lr,
        best_momentum,
        best_score,
        trace,
    })
}

/// `-((lr - lr0)^2 + (momentum - m0)^2)`.
pub fn quadratic_objective(center: (f64, f64)) -> impl FnMut(f64, f64) -> Result<f64> {
    move |lr, m| Ok(-((lr - center.0).powi(2) + (m - center.1).powi(2)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lhs_strata() {
        let pts = latin_hypercube(7, &RngState::new(0, "l"));
        for d in 0..2 {
            let mut bins: Vec<usize> = pts.iter().map(|p| (p[d] * 7.0) as usize).collect();
            bins.sort();
            assert_eq!(bins, (0..7).collect::<Vec<_>>());
        }
    }

    #[test]
    fn unit_roundtrip() {
        let s = TuneSpace::default();
        let (lr, m) = s.to_params([0.3, 0.8]);
        let u = s.to_unit(lr, m);
        assert!((u[0] - 0.3).abs() < 1e-12 && (u[1] - 0.8).abs() < 1e-12);
    }

    #[test]
    fn gp_interpolates() {
        let x = vec![[0.1, 0.1], [0.5, 0.5], [0.9, 0.2]];
        let y = vec![1.0, 3.0, -2.0];
        let gp = Gp::fit(&x, &y).unwrap();
        for (p, v) in x.iter().zip(&y) {
            assert!((gp.predict(p).0 - v).abs() < 1e-2);
        }
    }

    #[test]
    fn converges_on_quadratic() {
        let r = gp_tune(&TuneSpace::default(), quadratic_objective((0.06, 0.66)), &RngState::new(1, "tune")).unwrap();
        let d = ((r.best_lr - 0.06).powi(2) + (r.best_momentum - 0.66).powi(2)).sqrt();
        assert!(d < 0.01, "{r:?}");
        assert_eq!(r.trace.len(), 20);
        let inc: Vec<f64> = r.trace.iter().filter_map(|t| t.incumbent).collect();
        assert!(inc.windows(2).all(|w| w[1] >= w[0]));
    }

    #[test]
    fn constant_and_failures() {
        let space = TuneSpace { budget: 8, ..TuneSpace::default() };
        let r = gp_tune(&space, |_, _| Ok(1.0), &RngState::new(2, "t")).unwrap();
        assert_eq!(r.best_score, 1.0);
        let mut n = 0;
        let r = gp_tune(
            &space,
            |lr, _| {
                n += 1;
                if n % 2 == 0 { Ok(f64::NAN) } else { Ok(-lr) }
            },
            &RngState::new(2, "t"),
        )
        .unwrap();
        assert!(r.trace.iter().filter(|t| t.score.is_none()).count() >= 3);
        let pure = TuneSpace { budget: 5, ..TuneSpace::default() };
        let r = gp_tune(&pure, quadratic_objective((0.06, 0.66)), &RngState::new(3, "t")).unwrap();
        let max = r.trace.iter().filter_map(|t| t.score).fold(f64::NEG_INFINITY, f64::max);
        assert_eq!(r.best_score, max);
    }
}
