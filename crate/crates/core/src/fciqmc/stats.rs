use serde::{Deserialize, Serialize};

use super::{RunConfig, Trajectory};
use crate::error::{Error, Result};

/// Fewest post-equilibration samples accepted.
pub const MIN_SAMPLES: usize = 16;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockLevel {
    pub block_size: usize,
    pub n_blocks: usize,
    pub std_error: f64,
    /// Uncertainty of `std_error` itself.
    pub std_error_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockingResult {
    pub n_samples: usize,
    pub mean: f64,
    /// Sample standard deviation of the raw series.
    pub std: f64,
    /// Standard error at the selected blocking level.
    pub std_error: f64,
    /// Standard error ignoring correlations, `std / sqrt(n)`.
    pub naive_std_error: f64,
    /// Block size of the selected level.
    pub block_size: usize,
    /// False when no level met the plateau criterion and the coarsest usable
    /// level was reported instead.
    pub plateau: bool,
    pub levels: Vec<BlockLevel>,
}

fn mean_var(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let m = x.iter().sum::<f64>() / n;
    let v = if x.len() > 1 { x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (n - 1.0) } else { 0.0 };
    (m, v)
}

/// Reblocking by repeated pairwise averaging. The reported level is the
/// smallest block size `B` with `B^3 > 2 n (se_B / se_1)^4`.
pub fn blocking(x: &[f64]) -> Result<BlockingResult> {
    if x.len() < MIN_SAMPLES {
        return Err(Error::invalid(format!("{} samples; at least {MIN_SAMPLES} needed", x.len())));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("non-finite sample".into()));
    }
    let n = x.len();
    let (mean, var) = mean_var(x);
    let std = var.sqrt();
    let mut levels = Vec::new();
    let mut data = x.to_vec();
    let mut block_size = 1;
    while data.len() >= 2 {
        let nb = data.len();
        let (_, v) = mean_var(&data);
        let se = (v / nb as f64).sqrt();
        levels.push(BlockLevel {
            block_size,
            n_blocks: nb,
            std_error: se,
            std_error_error: se / (2.0 * (nb as f64 - 1.0)).sqrt(),
        });
        data = data.chunks_exact(2).map(|p| 0.5 * (p[0] + p[1])).collect();
        block_size *= 2;
    }
    let se0 = levels[0].std_error;
    let chosen = if se0 == 0.0 {
        Some(0)
    } else {
        levels.iter().position(|l| {
            let r = l.std_error / se0;
            (l.block_size as f64).powi(3) > 2.0 * n as f64 * r.powi(4)
        })
    };
    let (k, plateau) = match chosen {
        Some(k) => (k, true),
        None => {
            let k = levels.iter().rposition(|l| l.n_blocks >= 4).unwrap_or(0);
            log::warn!("blocking: no plateau in {n} samples; using block size {}", levels[k].block_size);
            (k, false)
        }
    };
    Ok(BlockingResult {
        n_samples: n,
        mean,
        std,
        std_error: levels[k].std_error,
        naive_std_error: se0,
        block_size: levels[k].block_size,
        plateau,
        levels,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    /// First step included in the averages.
    pub first_step: u64,
    pub energy: BlockingResult,
    /// Shift statistics over active-shift steps after the cut; absent when
    /// the shift never activated or too few samples remain.
    pub shift: Option<BlockingResult>,
}

/// Mixed-energy and shift statistics after discarding the leading
/// `equilibration_fraction` of the records.
pub fn statistics(traj: &Trajectory, cfg: &RunConfig) -> Result<RunSummary> {
    if !(0.0..1.0).contains(&cfg.equilibration_fraction) {
        return Err(Error::invalid("equilibration fraction must lie in [0, 1)"));
    }
    let cut = (cfg.equilibration_fraction * traj.records.len() as f64).ceil() as usize;
    let kept = &traj.records[cut.min(traj.records.len())..];
    let first_step = kept.first().map_or(0, |r| r.step);
    let energies: Vec<f64> = kept.iter().filter_map(|r| r.e_mixed).collect();
    let energy = blocking(&energies)?;
    let shift = traj.activation_step.and_then(|a| {
        let s: Vec<f64> = kept.iter().filter(|r| r.step > a).map(|r| r.shift).collect();
        (s.len() >= MIN_SAMPLES).then(|| blocking(&s)).transpose().ok().flatten()
    });
    Ok(RunSummary { first_step, energy, shift })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_distr::{Distribution, StandardNormal};

    #[test]
    fn constant_series() {
        let r = blocking(&[2.5; 64]).unwrap();
        assert_eq!(r.mean, 2.5);
        assert_eq!(r.std, 0.0);
        assert_eq!(r.std_error, 0.0);
    }

    #[test]
    fn too_few_samples() {
        assert!(blocking(&[1.0; 15]).is_err());
    }

    #[test]
    fn iid_series() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let n = 1 << 14;
        let x: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
        let r = blocking(&x).unwrap();
        let want = 1.0 / (n as f64).sqrt();
        assert!((r.std_error / want - 1.0).abs() < 0.2, "{} vs {want}", r.std_error);
        assert!(r.plateau);
    }

    #[test]
    fn correlated_series() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        let n = 1 << 15;
        let rho: f64 = 0.9;
        let mut x = Vec::with_capacity(n);
        let mut v = 0.0;
        for _ in 0..n {
            let e: f64 = StandardNormal.sample(&mut rng);
            v = rho * v + (1.0 - rho * rho).sqrt() * e;
            x.push(v);
        }
        let r = blocking(&x).unwrap();
        assert!(r.std_error > 2.0 * r.naive_std_error);
        // Integrated autocorrelation of AR(1): se = sqrt((1 + rho) / (1 - rho) / n).
        let want = ((1.0 + rho) / (1.0 - rho) / n as f64).sqrt();
        assert!((r.std_error / want - 1.0).abs() < 0.3, "{} vs {want}", r.std_error);
    }
}
