//! Parameter sets of the reference figures, shared by the CLI and tests.

use crate::kernel::LevyKernel;
use crate::model::{MixtureParams, ModelSpec, ScaleFn};
use crate::{Error, Result};

/// Initial forward used by the payoff figures.
pub const FIGURE_F0: f64 = 10.0;

/// `σ0²` for the payoff figures. The payoffs do not depend on it; it only
/// sets the time scale for residual checks and simulation.
pub const FIGURE_SIGMA0_SQ: f64 = 0.18;

/// Mixture parameters of payoff figure `which ∈ 1..=4`.
pub fn figure_mixture(which: u8) -> Result<MixtureParams> {
    let (alpha, beta, c, delta, nu0, nu1) = match which {
        1 => (
            0.0,
            1.0,
            0.23,
            0.22,
            LevyKernel::dirac(1.0, 1.0)?,
            LevyKernel::empty(),
        ),
        2 => (
            0.0,
            1.0,
            -0.21,
            1.0,
            LevyKernel::dirac(-1.0, 1.0)?,
            LevyKernel::empty(),
        ),
        3 => (
            1.0,
            0.0,
            0.39,
            1.25,
            LevyKernel::empty(),
            LevyKernel::dirac(-1.5, 1.0)?,
        ),
        4 => (
            1.0,
            0.0,
            -1.05,
            1.0,
            LevyKernel::empty(),
            LevyKernel::dirac(1.75, 1.0)?,
        ),
        _ => {
            return Err(Error::Parameter(alloc::format!(
                "payoff figures are numbered 1 to 4, got {which}"
            )))
        }
    };
    Ok(MixtureParams {
        alpha,
        beta,
        delta,
        c,
        sigma0_sq: ScaleFn::Const {
            value: FIGURE_SIGMA0_SQ,
        },
        nu0,
        nu1,
    })
}

/// The mixture model of figure `which` on `F ∈ [F0/5, 3 F0]`.
pub fn figure_model(which: u8) -> Result<ModelSpec> {
    let lo = (FIGURE_F0 / 5.0).ln();
    let hi = (3.0 * FIGURE_F0).ln();
    ModelSpec::mixture(figure_mixture(which)?)?.with_domain(lo, hi)
}

/// Ratio figure: `ω = 0.3`, `c = 0.395`, `δ = 1`, `ν = δ_{−1}`, `T = 1`, `N = 35`.
pub mod ratio_figure {
    pub const OMEGA: f64 = 0.3;
    pub const C: f64 = 0.395;
    pub const DELTA: f64 = 1.0;
    pub const JUMP: f64 = -1.0;
    pub const T: f64 = 1.0;
    pub const N: usize = 35;
}
