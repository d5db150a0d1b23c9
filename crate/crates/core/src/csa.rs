//! Conjugate subgradient minimizer.
//!
//! Directions follow the Polak-Ribiere recurrence over subgradients and every
//! iteration moves exactly `s_k` in Euclidean norm, with `s_k = s0 * q^k`.
//! The method is not a descent method, so the best point seen is tracked
//! separately from the iterate.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CsaError {
    #[error("objective returned a non-finite value ({value}) at iteration {iteration}")]
    NonFinite { iteration: usize, value: f64 },
    #[error("invalid solver configuration: {0}")]
    Config(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CsaConfig {
    pub k_max: usize,
    pub s0: f64,
    /// Step-control decay per iteration.
    pub q: f64,
    /// Consecutive non-improving iterations before giving up.
    pub stall_limit: usize,
    /// Minimum decrease that counts as an improvement.
    pub min_improvement: f64,
}

impl Default for CsaConfig {
    fn default() -> Self {
        Self { k_max: 50, s0: 1.0, q: 0.997, stall_limit: 30, min_improvement: 1e-12 }
    }
}

impl CsaConfig {
    pub fn validate(&self) -> Result<(), CsaError> {
        if self.k_max < 1 {
            return Err(CsaError::Config("k_max must be at least 1"));
        }
        if !(self.s0 > 0.0 && self.s0.is_finite()) {
            return Err(CsaError::Config("s0 must be positive"));
        }
        if !(self.q > 0.0 && self.q < 1.0) {
            return Err(CsaError::Config("q must lie in (0, 1)"));
        }
        if self.stall_limit < 1 {
            return Err(CsaError::Config("stall_limit must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CsaTrace {
    pub best: Vec<f64>,
    pub best_value: f64,
    pub initial_value: f64,
    /// Iterations (direction updates) performed.
    pub iterations: usize,
    /// Objective value at each evaluated iterate, starting with `u0`.
    pub values: Vec<f64>,
    /// Step-control value used at each iteration.
    pub steps: Vec<f64>,
}

/// Supplies `f(u)` and writes one subgradient into `grad`.
pub trait SubgradientOracle {
    fn evaluate(&mut self, u: &[f64], grad: &mut [f64]) -> f64;
}

impl<F> SubgradientOracle for F
where
    F: FnMut(&[f64], &mut [f64]) -> f64,
{
    fn evaluate(&mut self, u: &[f64], grad: &mut [f64]) -> f64 {
        self(u, grad)
    }
}

/// `g_k . (g_k - g_{k-1}) / |g_{k-1}|^2`, or 0 when the previous subgradient
/// vanishes (restart along `-g_k`).
pub fn polak_ribiere(g: &[f64], g_prev: &[f64]) -> f64 {
    let denom: f64 = g_prev.iter().map(|v| v * v).sum();
    if denom == 0.0 {
        return 0.0;
    }
    let num: f64 = g.iter().zip(g_prev).map(|(a, b)| a * (a - b)).sum();
    num / denom
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

pub fn minimize<O: SubgradientOracle>(oracle: &mut O, u0: &[f64], cfg: &CsaConfig) -> Result<CsaTrace, CsaError> {
    cfg.validate()?;
    let dim = u0.len();
    let mut u = u0.to_vec();
    let mut g_prev = vec![0.0; dim];
    let mut g = vec![0.0; dim];
    let mut d = vec![0.0; dim];

    let f0 = oracle.evaluate(&u, &mut g_prev);
    if !f0.is_finite() {
        return Err(CsaError::NonFinite { iteration: 0, value: f0 });
    }
    let mut trace = CsaTrace {
        best: u.clone(),
        best_value: f0,
        initial_value: f0,
        iterations: 0,
        values: vec![f0],
        steps: Vec::with_capacity(cfg.k_max),
    };
    let mut stall = 0usize;

    for k in 1..=cfg.k_max {
        if k == 1 {
            // g_1 is taken at u_0, which is where g_0 came from
            g.copy_from_slice(&g_prev);
        } else {
            let fk = oracle.evaluate(&u, &mut g);
            if !fk.is_finite() {
                return Err(CsaError::NonFinite { iteration: k, value: fk });
            }
            trace.values.push(fk);
            if fk < trace.best_value - cfg.min_improvement {
                trace.best_value = fk;
                trace.best.copy_from_slice(&u);
                stall = 0;
            } else {
                stall += 1;
                if stall >= cfg.stall_limit {
                    break;
                }
            }
        }

        if g.iter().all(|v| *v == 0.0) {
            // stationary: the direction would vanish from here on
            trace.iterations = k - 1;
            break;
        }
        let eta = polak_ribiere(&g, &g_prev);
        for (di, gi) in d.iter_mut().zip(&g) {
            *di = -gi + eta * *di;
        }
        let s = cfg.s0 * cfg.q.powi(k as i32 - 1);
        trace.steps.push(s);
        let dn = norm(&d);
        if dn > 0.0 && dn.is_finite() {
            let a = s / dn;
            for (ui, di) in u.iter_mut().zip(&d) {
                *ui += a * di;
            }
        }
        std::mem::swap(&mut g, &mut g_prev);
        trace.iterations = k;
    }

    // the last move has not been scored yet
    if trace.iterations > 0 && stall < cfg.stall_limit {
        let f_last = oracle.evaluate(&u, &mut g);
        if !f_last.is_finite() {
            return Err(CsaError::NonFinite { iteration: trace.iterations + 1, value: f_last });
        }
        trace.values.push(f_last);
        if f_last < trace.best_value - cfg.min_improvement {
            trace.best_value = f_last;
            trace.best.copy_from_slice(&u);
        }
    }
    Ok(trace)
}
