//! Payoffs `G` solving `A G = a² + ∫ z² μ` for the three solvable families:
//! constant relative jump intensity, fractional linear relative intensity
//! and the Lévy mixture with state-dependent weights.

pub mod fraclin;
pub mod mixture;
pub mod proportional;

use alloc::format;
use alloc::vec::Vec;

use crate::model::{KernelSpec, ModelSpec, VolSpec};
use crate::payoff::Payoff;
use crate::{Error, Result};

pub use fraclin::{fraclin_bounds, fraclin_solve, FracLin};
pub use mixture::{
    check_mixture_condition, eigen_chi, eigen_phi, mixture_coefficients, solve_mixture,
    ConditionReport, MixtureSolution, SeriesCoefficients,
};
pub use proportional::solve_proportional;

pub const DEFAULT_TAIL_TOL: f64 = 1e-6;
pub const DEFAULT_SERIES_ORDER: usize = 64;

/// Which family produced a solution, with its family-specific data.
#[derive(Debug, Clone, PartialEq)]
pub enum SolutionKind {
    /// `G = −Q x`.
    Proportional {
        q: f64,
    },
    FractionalLinear(FracLin),
    Mixture {
        coefficients: SeriesCoefficients,
        n_used: usize,
        tail: f64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub payoff: Payoff,
    pub kind: SolutionKind,
}

impl Solution {
    /// Coefficient of `−x` in the leading term (`Q`, or `Q0` for the mixture).
    pub fn leading_q(&self) -> Option<f64> {
        match &self.kind {
            SolutionKind::Proportional { q } => Some(*q),
            SolutionKind::Mixture { coefficients, .. } => Some(coefficients.q0),
            SolutionKind::FractionalLinear(_) => None,
        }
    }
}

/// Routes a model to the solver of its family.
///
/// `tail_tol` and `order` only matter for the mixture, whose truncation is
/// judged on the model's domain hint.
pub fn solve_model(model: &ModelSpec, tail_tol: f64, order: usize) -> Result<Solution> {
    match (&model.vol, &model.kernel) {
        (_, KernelSpec::None) => Ok(Solution {
            payoff: Payoff::linear(-2.0),
            kind: SolutionKind::Proportional { q: 2.0 },
        }),
        (VolSpec::Const { sigma }, KernelSpec::Levy { nu }) => proportional_solution(*sigma, nu),
        (VolSpec::Scaled { sigma, gamma }, KernelSpec::Proportional { gamma: g2, nu })
            if gamma == g2 =>
        {
            proportional_solution(*sigma, nu)
        }
        (
            VolSpec::Const { sigma },
            KernelSpec::Proportional {
                gamma: crate::ScaleFn::Const { value },
                nu,
            },
        ) if *value > 0.0 => proportional_solution(sigma / value, nu),
        (_, KernelSpec::FractionalLinear(fl)) => {
            fl.check()?;
            Ok(Solution {
                payoff: fl.payoff(),
                kind: SolutionKind::FractionalLinear(*fl),
            })
        }
        (_, KernelSpec::Mixture { .. }) => {
            let p = model.mixture_params().ok_or_else(|| {
                Error::Model(
                    "mixture kernel needs a mixture vol with the same sigma0_sq, delta and c"
                        .into(),
                )
            })?;
            let coeffs =
                mixture_coefficients(p.alpha, p.beta, p.c, p.delta, &p.nu0, &p.nu1, order)?;
            let sol = solve_mixture(&coeffs, tail_tol, model.domain)?;
            Ok(Solution {
                payoff: sol.payoff,
                kind: SolutionKind::Mixture {
                    coefficients: coeffs,
                    n_used: sol.n_used,
                    tail: sol.tail,
                },
            })
        }
        _ => Err(Error::Model(format!(
            "no closed-form solver for vol {:?} with this kernel; use a registry family",
            model.vol
        ))),
    }
}

fn proportional_solution(sigma: f64, nu: &crate::LevyKernel) -> Result<Solution> {
    let (q, payoff) = solve_proportional(sigma, nu)?;
    Ok(Solution {
        payoff,
        kind: SolutionKind::Proportional { q },
    })
}

/// `max |A G − qv_rate|` and `max qv_rate` over a grid.
pub fn residual(model: &ModelSpec, g: &Payoff, grid: &[f64]) -> Result<(f64, f64)> {
    let mut pts: Vec<f64> = grid.to_vec();
    crate::model::perturb_off_knots(&mut pts, g);
    let mut worst = 0.0f64;
    let mut qv_max = 0.0f64;
    for &x in &pts {
        let qv = model.qv_rate(x)?;
        let ag = model.apply_generator(g, x)?;
        worst = worst.max((ag - qv).abs());
        qv_max = qv_max.max(qv.abs());
    }
    Ok((worst, qv_max))
}
