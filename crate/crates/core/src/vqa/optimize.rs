use serde::{Deserialize, Serialize};

use super::{energy, energy_and_gradient};
use crate::error::{Error, Result};
use crate::operators::pauli::PauliSum;
use crate::simulator::Circuit;

/// Gradient descent with a backtracking (Armijo) line search. The first trial
/// step of each iteration is the Barzilai-Borwein step from the previous
/// iterate, which keeps the method cheap on ill-conditioned landscapes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OptimizerSettings {
    pub max_iterations: usize,
    /// Stop when the gradient norm falls below this.
    pub gtol: f64,
    /// Sufficient-decrease constant.
    pub armijo: f64,
    /// Step shrink factor on rejection.
    pub shrink: f64,
    /// Trial step of the first iteration.
    pub initial_step: f64,
}

impl Default for OptimizerSettings {
    fn default() -> Self {
        Self { max_iterations: 2000, gtol: 1e-6, armijo: 1e-4, shrink: 0.5, initial_step: 0.1 }
    }
}

impl OptimizerSettings {
    fn validate(&self) -> Result<()> {
        let ok = self.gtol > 0.0
            && self.armijo > 0.0
            && self.armijo < 1.0
            && self.shrink > 0.0
            && self.shrink < 1.0
            && self.initial_step > 0.0;
        if !ok {
            return Err(Error::invalid(format!("bad optimizer settings {self:?}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VqeResult {
    pub circuit: Circuit,
    pub params: Vec<f64>,
    pub reference: u64,
    pub energy: f64,
    /// `(iteration, energy)` after each accepted step, starting at 0.
    pub history: Vec<(usize, f64)>,
    pub gradient_norm: f64,
    pub iterations: usize,
    /// False when the iteration cap or a stalled line search ended the run.
    pub converged: bool,
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Minimize `<ref|U(theta)^dag H U(theta)|ref>` from `init`.
pub fn vqe_minimize(
    c: &Circuit,
    h: &PauliSum,
    init: &[f64],
    reference: u64,
    settings: &OptimizerSettings,
) -> Result<VqeResult> {
    settings.validate()?;
    if init.len() != c.n_slots() {
        return Err(Error::invalid(format!("{} initial parameters for {} slots", init.len(), c.n_slots())));
    }
    let mut x = init.to_vec();
    let (mut e, mut g) = energy_and_gradient(c, h, &x, reference)?;
    let mut history = vec![(0, e)];
    let mut step = settings.initial_step;
    let mut converged = false;
    let mut iterations = 0;
    let mut prev: Option<(Vec<f64>, Vec<f64>)> = None;

    while iterations < settings.max_iterations {
        let gn2: f64 = g.iter().map(|v| v * v).sum();
        if gn2.sqrt() < settings.gtol {
            converged = true;
            break;
        }
        if let Some((px, pg)) = &prev {
            let s: Vec<f64> = x.iter().zip(px).map(|(a, b)| a - b).collect();
            let y: Vec<f64> = g.iter().zip(pg).map(|(a, b)| a - b).collect();
            let sy: f64 = s.iter().zip(&y).map(|(a, b)| a * b).sum();
            let ss: f64 = s.iter().map(|v| v * v).sum();
            step = if sy > 0.0 { (ss / sy).clamp(1e-8, 1e3) } else { (2.0 * step).min(1e3) };
        }
        let mut alpha = step;
        let accepted = loop {
            let trial: Vec<f64> = x.iter().zip(&g).map(|(xi, gi)| xi - alpha * gi).collect();
            let et = energy(c, h, &trial, reference)?;
            if et <= e - settings.armijo * alpha * gn2 {
                break Some(trial);
            }
            alpha *= settings.shrink;
            if alpha < 1e-14 {
                break None;
            }
        };
        let Some(trial) = accepted else {
            log::debug!("line search stalled at energy {e} with gradient norm {}", gn2.sqrt());
            break;
        };
        iterations += 1;
        step = alpha;
        prev = Some((std::mem::replace(&mut x, trial), g.clone()));
        let (en, gnew) = energy_and_gradient(c, h, &x, reference)?;
        e = en;
        g = gnew;
        history.push((iterations, e));
    }
    if !converged && norm(&g) < settings.gtol {
        converged = true;
    }
    if !converged {
        log::warn!("VQE stopped after {iterations} iterations with gradient norm {:e}", norm(&g));
    }
    Ok(VqeResult {
        circuit: c.clone(),
        params: x,
        reference,
        energy: e,
        history,
        gradient_norm: norm(&g),
        iterations,
        converged,
    })
}
