//! Distributed gradient descent: one full gradient (a sum of node gradients)
//! and one step per communication round.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::RoundSink;
use crate::objective::LogisticObjective;
use crate::sparse::DenseModel;

/// Maximum number of step shrinks in one backtracking search.
pub const MAX_HALVINGS: usize = 60;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum GdStep {
    Fixed {
        step: f64,
    },
    /// Armijo backtracking from `initial`: shrink by `rho` until
    /// `f(w − ηg) ≤ f(w) − c·η‖g‖²`.
    Backtracking {
        initial: f64,
        c: f64,
        rho: f64,
    },
}

impl GdStep {
    pub fn backtracking(initial: f64) -> Self {
        GdStep::Backtracking {
            initial,
            c: 1e-4,
            rho: 0.5,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            GdStep::Fixed { step } if step > 0.0 && step.is_finite() => Ok(()),
            GdStep::Backtracking { initial, c, rho }
                if initial > 0.0 && 0.0 < c && c < 1.0 && 0.0 < rho && rho < 1.0 =>
            {
                Ok(())
            }
            other => Err(Error::Config(format!("invalid gradient descent step {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GdConfig {
    pub step: GdStep,
    pub rounds: usize,
}

fn step_along(w: &[f64], g: &[f64], eta: f64) -> DenseModel {
    DenseModel::from(w.iter().zip(g).map(|(a, b)| a - eta * b).collect::<Vec<_>>())
}

/// One gradient step from `w`.
pub fn gd_round(obj: &LogisticObjective, w: &DenseModel, step: &GdStep) -> Result<DenseModel> {
    let g = obj.full_gradient(w)?;
    gd_step_with_gradient(obj, w, &g, step).map(|(w, _)| w)
}

/// Step from `w` given `g = ∇f(w)`; returns the new point and its objective
/// when a line search computed it.
fn gd_step_with_gradient(
    obj: &LogisticObjective,
    w: &DenseModel,
    g: &[f64],
    step: &GdStep,
) -> Result<(DenseModel, Option<f64>)> {
    let gg: f64 = g.iter().map(|v| v * v).sum();
    if gg == 0.0 {
        return Ok((w.clone(), None));
    }
    match *step {
        GdStep::Fixed { step } => Ok((step_along(w.as_slice(), g, step), None)),
        GdStep::Backtracking { initial, c, rho } => {
            let f0 = obj.value(w)?;
            let mut eta = initial;
            for _ in 0..=MAX_HALVINGS {
                let cand = step_along(w.as_slice(), g, eta);
                let f = obj.value(&cand)?;
                if f <= f0 - c * eta * gg {
                    return Ok((cand, Some(f)));
                }
                eta *= rho;
            }
            Err(Error::LineSearch {
                halvings: MAX_HALVINGS,
            })
        }
    }
}

/// Runs `cfg.rounds` rounds from zero. Divergence is declared when the
/// objective exceeds 1000× its starting value or becomes non-finite.
pub fn run(obj: &LogisticObjective, cfg: &GdConfig, sink: &mut dyn RoundSink) -> Result<DenseModel> {
    cfg.step.validate()?;
    let mut w = DenseModel::zeros(obj.dim());
    let f0 = obj.value(&w)?;
    for s in 0..cfg.rounds {
        let g = obj.full_gradient(&w)?;
        let (next, f) = gd_step_with_gradient(obj, &w, &g, &cfg.step)?;
        let f = match f {
            Some(f) => f,
            None => obj.value(&next)?,
        };
        if !f.is_finite() || f > 1e3 * f0 {
            return Err(Error::Diverged {
                round: s + 1,
                node: None,
                step: None,
            });
        }
        w = next;
        sink.record(s + 1, &w, f);
    }
    Ok(w)
}
