//! Bounds on the largest eigenvalue from noisy moment estimates.

use rand::Rng;
use rand_distr::{Exp1, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::sim::{derive, shot_rng};
use crate::stats::{mean, std_dev};
use crate::{Error, Result};

/// Estimates `m̂₂ … m̂_k` known to lie within `±ε` of the true moments.
#[derive(Debug, Clone, PartialEq)]
pub struct NoisyMoments {
    pub moments: Vec<f64>,
    pub epsilon: f64,
}

impl NoisyMoments {
    pub fn k(&self) -> usize {
        self.moments.len() + 1
    }

    fn m(&self, j: usize) -> f64 {
        self.moments[j - 2]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EigenInterval {
    pub lower: f64,
    pub upper: f64,
    /// False when the raw bounds crossed and the interval was collapsed.
    pub consistent: bool,
}

impl EigenInterval {
    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lower <= x && x <= self.upper
    }
}

/// Interval for `λ_max` from the ratio bounds `(m̂_{j+1} − ε)/(m̂_j + ε)`,
/// the root bounds `(m̂_j − ε)^{1/(j−1)}` and the upper bounds `(m̂_j + ε)^{1/j}`.
pub fn lambda_max_interval(nm: &NoisyMoments) -> Result<EigenInterval> {
    let k = nm.k();
    let eps = nm.epsilon;
    if k < 2 {
        return Err(Error::arg("need at least the second moment"));
    }
    if !(eps >= 0.0) {
        return Err(Error::arg("epsilon must be nonnegative"));
    }
    let mut lowers = Vec::new();
    for j in 2..k {
        let (num, den) = (nm.m(j + 1) - eps, nm.m(j) + eps);
        if num > 0.0 && den > 0.0 {
            lowers.push(num / den);
        }
    }
    for j in 2..=k {
        let r = nm.m(j) - eps;
        if r > 0.0 {
            lowers.push(r.powf(1.0 / (j - 1) as f64));
        }
    }
    let uppers: Vec<f64> = (2..=k)
        .filter_map(|j| {
            let r = nm.m(j) + eps;
            (r > 0.0).then(|| r.powf(1.0 / j as f64))
        })
        .collect();
    if lowers.is_empty() && uppers.is_empty() {
        return Err(Error::Numerical("insufficient usable moments".into()));
    }
    let lower = lowers.into_iter().fold(0.0, f64::max).clamp(0.0, 1.0);
    let upper = uppers.into_iter().fold(1.0, f64::min).clamp(0.0, 1.0);
    if lower > upper {
        let mid = 0.5 * (lower + upper);
        return Ok(EigenInterval {
            lower: mid,
            upper: mid,
            consistent: false,
        });
    }
    Ok(EigenInterval {
        lower,
        upper,
        consistent: true,
    })
}

/// Clipped Gaussian noise `m̂_j = m_j + sgn(ξ) min(ε, |ξ|)`, `ξ ~ N(0, ε²/4)`.
pub fn perturb_moments<R: Rng + ?Sized>(exact: &[f64], epsilon: f64, rng: &mut R) -> NoisyMoments {
    let normals: Vec<f64> = exact.iter().map(|_| rng.sample(StandardNormal)).collect();
    perturb_with(exact, epsilon, &normals)
}

fn perturb_with(exact: &[f64], epsilon: f64, normals: &[f64]) -> NoisyMoments {
    let moments = exact
        .iter()
        .zip(normals)
        .map(|(m, z)| {
            let xi: f64 = z * epsilon / 2.0;
            m + xi.signum() * xi.abs().min(epsilon)
        })
        .collect();
    NoisyMoments { moments, epsilon }
}

/// Spectrum drawn from the flat Dirichlet distribution on `rank` entries.
pub fn dirichlet_spectrum<R: Rng + ?Sized>(rank: usize, rng: &mut R) -> Vec<f64> {
    let draws: Vec<f64> = (0..rank).map(|_| rng.sample::<f64, _>(Exp1)).collect();
    let total: f64 = draws.iter().sum();
    draws.into_iter().map(|x| x / total).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IntervalRow {
    pub rank: usize,
    pub eps: f64,
    pub mean_width: f64,
    pub sd_width: f64,
    pub containment: f64,
}

/// Monte Carlo study of interval widths. Trial `t` at rank `r` reuses the
/// same spectrum and the same standard normal draws for every `ε`.
pub fn interval_study(ranks: &[usize], eps_grid: &[f64], trials: usize, k: usize, seed: u64) -> Result<Vec<IntervalRow>> {
    if k < 2 {
        return Err(Error::arg("order k must be at least 2"));
    }
    if trials == 0 {
        return Err(Error::arg("trials must be at least 1"));
    }
    let mut rows = Vec::new();
    for &rank in ranks {
        if rank == 0 {
            return Err(Error::arg("rank must be positive"));
        }
        let draws: Vec<(Vec<f64>, f64, Vec<f64>)> = (0..trials)
            .into_par_iter()
            .map(|t| {
                let mut rng = shot_rng(derive(seed, rank as u64), t as u64);
                let spec = dirichlet_spectrum(rank, &mut rng);
                let lmax = spec.iter().copied().fold(0.0, f64::max);
                let exact: Vec<f64> = (2..=k as i32).map(|j| spec.iter().map(|l| l.powi(j)).sum()).collect();
                let normals = (0..k - 1).map(|_| rng.sample(StandardNormal)).collect();
                (exact, lmax, normals)
            })
            .collect();
        for &eps in eps_grid {
            let mut widths = Vec::with_capacity(trials);
            let mut inside = 0usize;
            for (exact, lmax, normals) in &draws {
                let iv = lambda_max_interval(&perturb_with(exact, eps, normals))?;
                widths.push(iv.width());
                inside += usize::from(iv.contains(*lmax));
            }
            rows.push(IntervalRow {
                rank,
                eps,
                mean_width: mean(&widths),
                sd_width: std_dev(&widths),
                containment: inside as f64 / trials as f64,
            });
        }
    }
    Ok(rows)
}
