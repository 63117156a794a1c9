//! Walker-population projector Monte Carlo on a (possibly circuit-rotated)
//! basis: spawning along off-diagonal elements, death and cloning on the
//! diagonal, annihilation, and shift-based population control. With the
//! identity circuit this is plain FCIQMC.
//!
//! Each step realizes, in expectation, `c <- c - dtau (H - S) c`. Off-diagonal
//! propagation therefore carries `-H_ji`: a child spawned from walker `i` onto
//! `j` has sign `sign(i) * -sign(H_ji)`.

mod csv;
mod stats;

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicBool, Ordering};

use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matelem::ElementSource;
use crate::rng::{stream, tag, StreamRng};

pub use csv::{read_trajectory_csv, write_trajectory_csv, CSV_HEADER};
pub use stats::{blocking, statistics, BlockLevel, BlockingResult, RunSummary, MIN_SAMPLES};

/// Signed integer walker counts per basis index; zero entries are never stored.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct WalkerPopulation {
    counts: BTreeMap<u64, i64>,
    total: u64,
}

impl WalkerPopulation {
    pub fn new() -> Self {
        Self::default()
    }

    /// `n` walkers (signed) on `index`.
    pub fn single(index: u64, n: i64) -> Self {
        let mut p = Self::new();
        p.add(index, n);
        p
    }

    pub fn from_counts(counts: impl IntoIterator<Item = (u64, i64)>) -> Self {
        let mut p = Self::new();
        for (i, n) in counts {
            p.add(i, n);
        }
        p
    }

    pub fn add(&mut self, index: u64, n: i64) {
        if n == 0 {
            return;
        }
        let e = self.counts.entry(index).or_insert(0);
        self.total -= e.unsigned_abs();
        *e += n;
        self.total += e.unsigned_abs();
        if *e == 0 {
            self.counts.remove(&index);
        }
    }

    pub fn get(&self, index: u64) -> i64 {
        self.counts.get(&index).copied().unwrap_or(0)
    }

    /// `sum_i |N_i|`.
    pub fn total_walkers(&self) -> u64 {
        self.total
    }

    pub fn n_occupied(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    /// Occupied `(index, signed count)` in index order.
    pub fn iter(&self) -> impl Iterator<Item = (u64, i64)> + '_ {
        self.counts.iter().map(|(&i, &n)| (i, n))
    }
}

/// Spawned children per target index, kept apart from the parents until
/// annihilation.
pub type Spawned = BTreeMap<u64, i64>;

static SPAWN_WARNED: AtomicBool = AtomicBool::new(false);
static DEATH_WARNED: AtomicBool = AtomicBool::new(false);

fn walker_stream(seed: u64, step: u64, index: u64, phase: u64) -> StreamRng {
    stream(seed, &[tag::WALKER, step, index, phase])
}

/// `n * floor(p) + Binomial(n, p - floor(p))`: the total over `n` walkers of
/// `floor(p) + Bernoulli(frac p)`.
fn stochastic_round(n: u64, p: f64, rng: &mut StreamRng) -> Result<u64> {
    let whole = p.floor();
    let frac = p - whole;
    let extra = if frac > 0.0 {
        Binomial::new(n, frac).map_err(|e| Error::Numerical(format!("binomial({n}, {frac}): {e}")))?.sample(rng)
    } else {
        0
    };
    Ok(n * whole as u64 + extra)
}

/// Children spawned from every occupied index onto its connections.
pub fn spawn_step(pop: &WalkerPopulation, src: &ElementSource, delta_tau: f64, seed: u64, step: u64) -> Result<Spawned> {
    if !(delta_tau > 0.0) {
        return Err(Error::invalid(format!("time step {delta_tau} must be positive")));
    }
    let occupied: Vec<(u64, i64)> = pop.iter().collect();
    let per_parent: Vec<Result<Vec<(u64, i64)>>> = occupied
        .par_iter()
        .map(|&(i, c)| {
            let conns = src.connections(i)?;
            let mut rng = walker_stream(seed, step, i, 0);
            let n = c.unsigned_abs();
            let mut out = Vec::new();
            for (j, h) in conns {
                let p = h.abs() * delta_tau;
                if p > 1.0 && !SPAWN_WARNED.swap(true, Ordering::Relaxed) {
                    log::warn!("spawn probability {p:.3} exceeds 1; reduce the time step");
                }
                let k = stochastic_round(n, p, &mut rng)? as i64;
                if k > 0 {
                    let sign = c.signum() * if h > 0.0 { -1 } else { 1 };
                    out.push((j, sign * k));
                }
            }
            Ok(out)
        })
        .collect();
    let mut spawned = Spawned::new();
    for part in per_parent {
        for (j, k) in part? {
            *spawned.entry(j).or_insert(0) += k;
        }
    }
    spawned.retain(|_, v| *v != 0);
    Ok(spawned)
}

/// Each walker on `i` dies with probability `(H_ii - S) dtau` when positive,
/// or clones with probability `|H_ii - S| dtau` otherwise. Probabilities above
/// one are clamped with a warning.
pub fn death_clone_step(
    pop: &WalkerPopulation,
    src: &ElementSource,
    shift: f64,
    delta_tau: f64,
    seed: u64,
    step: u64,
) -> Result<WalkerPopulation> {
    let occupied: Vec<(u64, i64)> = pop.iter().collect();
    let updated: Vec<Result<(u64, i64)>> = occupied
        .par_iter()
        .map(|&(i, c)| {
            let mut d = (src.get_element(i, i)? - shift) * delta_tau;
            if d.abs() > 1.0 {
                if !DEATH_WARNED.swap(true, Ordering::Relaxed) {
                    log::warn!("death/clone probability {d:.3} clamped to 1; reduce the time step");
                }
                d = d.signum();
            }
            let n = c.unsigned_abs();
            let mut rng = walker_stream(seed, step, i, 1);
            let k = stochastic_round(n, d.abs(), &mut rng)? as i64;
            let m = if d > 0.0 { n as i64 - k } else { n as i64 + k };
            Ok((i, c.signum() * m))
        })
        .collect();
    let mut out = WalkerPopulation::new();
    for r in updated {
        let (i, c) = r?;
        out.add(i, c);
    }
    Ok(out)
}

/// Signed sum of parents and children; opposite signs cancel.
pub fn annihilate(mut parents: WalkerPopulation, spawned: &Spawned) -> WalkerPopulation {
    for (&j, &k) in spawned {
        parents.add(j, k);
    }
    parents
}

fn default_damping() -> f64 {
    0.05
}
fn default_interval() -> u64 {
    5
}
fn default_threshold() -> u64 {
    5000
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShiftSettings {
    #[serde(default = "default_damping")]
    pub damping: f64,
    /// Steps between shift updates.
    #[serde(default = "default_interval")]
    pub update_interval: u64,
    /// Updates start once the walker count first exceeds this.
    #[serde(default = "default_threshold")]
    pub threshold: u64,
}

impl Default for ShiftSettings {
    fn default() -> Self {
        Self { damping: default_damping(), update_interval: default_interval(), threshold: default_threshold() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShiftController {
    pub shift: f64,
    pub settings: ShiftSettings,
    pub active: bool,
    /// Step at which the threshold was first exceeded.
    pub activation_step: Option<u64>,
    last_update_step: u64,
    last_walkers: u64,
}

impl ShiftController {
    pub fn new(initial_shift: f64, settings: ShiftSettings) -> Self {
        Self {
            shift: initial_shift,
            settings,
            active: false,
            activation_step: None,
            last_update_step: 0,
            last_walkers: 0,
        }
    }

    /// Feed the walker count after `step`; activates or updates the shift.
    pub fn observe(&mut self, step: u64, n_walkers: u64, delta_tau: f64) -> Result<()> {
        if !self.active {
            if n_walkers > self.settings.threshold {
                self.active = true;
                self.activation_step = Some(step);
                self.last_update_step = step;
                self.last_walkers = n_walkers;
            }
            return Ok(());
        }
        if step - self.last_update_step >= self.settings.update_interval {
            self.shift = update_shift(
                self.shift,
                self.settings.damping,
                self.settings.update_interval,
                n_walkers,
                self.last_walkers,
                delta_tau,
            )
            .map_err(|_| Error::Extinction(step))?;
            self.last_update_step = step;
            self.last_walkers = n_walkers;
        }
        Ok(())
    }
}

/// `S - damping / (interval * dtau) * ln(n_now / n_prev)`.
pub fn update_shift(shift: f64, damping: f64, interval: u64, n_now: u64, n_prev: u64, delta_tau: f64) -> Result<f64> {
    if n_prev == 0 || n_now == 0 {
        return Err(Error::Extinction(0));
    }
    Ok(shift - damping / (interval as f64 * delta_tau) * (n_now as f64 / n_prev as f64).ln())
}

/// `E = H_00 + sum_{i != 0} H_i0 c_i / c_0`; `None` when the reference is empty.
pub fn mixed_energy(pop: &WalkerPopulation, src: &ElementSource, reference: u64) -> Result<Option<f64>> {
    let c0 = pop.get(reference);
    if c0 == 0 {
        return Ok(None);
    }
    let mut num = 0.0;
    for (i, h) in src.connections(reference)? {
        let c = pop.get(i);
        if c != 0 {
            num += h * c as f64;
        }
    }
    Ok(Some(src.get_element(reference, reference)? + num / c0 as f64))
}

fn default_delta_tau() -> f64 {
    1e-3
}
fn default_total_time() -> f64 {
    10.0
}
fn default_initial_walkers() -> u64 {
    10
}
fn default_equilibration() -> f64 {
    0.5
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    #[serde(default = "default_delta_tau")]
    pub delta_tau: f64,
    #[serde(default = "default_total_time")]
    pub total_time: f64,
    #[serde(default = "default_initial_walkers")]
    pub initial_walkers: u64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub shift: ShiftSettings,
    /// Leading fraction of the trajectory discarded by `statistics`.
    #[serde(default = "default_equilibration")]
    pub equilibration_fraction: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            delta_tau: default_delta_tau(),
            total_time: default_total_time(),
            initial_walkers: default_initial_walkers(),
            seed: 0,
            shift: ShiftSettings::default(),
            equilibration_fraction: default_equilibration(),
        }
    }
}

impl RunConfig {
    pub fn n_steps(&self) -> Result<u64> {
        self.validate()?;
        Ok((self.total_time / self.delta_tau).round() as u64)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.delta_tau > 0.0
            && self.delta_tau.is_finite()
            && self.total_time >= 0.0
            && self.total_time.is_finite()
            && self.initial_walkers > 0
            && self.shift.update_interval > 0
            && self.shift.damping >= 0.0
            && (0.0..1.0).contains(&self.equilibration_fraction);
        if !ok {
            return Err(Error::invalid(format!("bad run configuration {self:?}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub step: u64,
    pub tau: f64,
    pub shift: f64,
    pub n_walkers: u64,
    pub n_occupied: u64,
    pub e_mixed: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub delta_tau: f64,
    pub reference: u64,
    pub activation_step: Option<u64>,
    pub records: Vec<TrajectoryRecord>,
}

/// Evolve `initial_walkers` on `reference` for `total_time`, in the order
/// spawn, death/clone, annihilate. Depends only on the configuration and seed.
pub fn run(src: &ElementSource, reference: u64, cfg: &RunConfig) -> Result<Trajectory> {
    let n_steps = cfg.n_steps()?;
    let dt = cfg.delta_tau;
    let mut pop = WalkerPopulation::single(reference, cfg.initial_walkers as i64);
    let h00 = src.get_element(reference, reference)?;
    let mut ctl = ShiftController::new(h00, cfg.shift);
    ctl.observe(0, pop.total_walkers(), dt)?;

    let l1_ref: f64 = src.connections(reference)?.iter().map(|c| c.1.abs()).sum();
    if dt * l1_ref >= 1.0 {
        log::warn!("time step times reference row weight is {:.3}; expect large spawn events", dt * l1_ref);
    }

    let record = |step: u64, pop: &WalkerPopulation, shift: f64| -> Result<TrajectoryRecord> {
        Ok(TrajectoryRecord {
            step,
            tau: step as f64 * dt,
            shift,
            n_walkers: pop.total_walkers(),
            n_occupied: pop.n_occupied() as u64,
            e_mixed: mixed_energy(pop, src, reference)?,
        })
    };
    let mut records = Vec::with_capacity(n_steps as usize + 1);
    records.push(record(0, &pop, ctl.shift)?);

    for step in 1..=n_steps {
        let spawned = spawn_step(&pop, src, dt, cfg.seed, step)?;
        let parents = death_clone_step(&pop, src, ctl.shift, dt, cfg.seed, step)?;
        pop = annihilate(parents, &spawned);
        if pop.is_empty() {
            return Err(Error::Extinction(step));
        }
        ctl.observe(step, pop.total_walkers(), dt)?;
        records.push(record(step, &pop, ctl.shift)?);
    }
    Ok(Trajectory { delta_tau: dt, reference, activation_step: ctl.activation_step, records })
}
