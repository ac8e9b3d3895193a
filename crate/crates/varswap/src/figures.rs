//! Data behind the reference figures: payoff tables for the mixture models
//! and the ratio curve.

use rayon::prelude::*;
use varswap_core::model::linspace;
use varswap_core::payoff::{slope_match_constant, PriceSpacePayoff};
use varswap_core::presets::{figure_model, ratio_figure, FIGURE_F0};
use varswap_core::ratio::{IdentityClock, RatioModel};
use varswap_core::solvers::{solve_model, SolutionKind, DEFAULT_SERIES_ORDER, DEFAULT_TAIL_TOL};
use varswap_core::{Error as CoreError, LevyKernel};

use crate::error::Result;
use crate::io::Table;

pub const DEFAULT_POINTS: usize = 400;

/// Price-space payoff of payoff figure `which`, normalized so that
/// `h(F0) = 0` and `h'(F0) = −Q0/F0`.
#[derive(Debug, Clone)]
pub struct PayoffFigure {
    pub which: u8,
    pub q0: f64,
    pub q1: f64,
    pub series_terms: usize,
    pub h: PriceSpacePayoff,
}

impl PayoffFigure {
    pub fn new(which: u8) -> Result<Self> {
        let model = figure_model(which)?;
        let sol = solve_model(&model, DEFAULT_TAIL_TOL, DEFAULT_SERIES_ORDER)?;
        let (q0, q1, series_terms) = match &sol.kind {
            SolutionKind::Mixture {
                coefficients,
                n_used,
                ..
            } => (coefficients.q0, coefficients.q1, *n_used),
            _ => unreachable!("figure models are mixtures"),
        };
        let a = slope_match_constant(&sol.payoff, FIGURE_F0, q0);
        let h = sol.payoff.to_price_space(FIGURE_F0, Some(a))?;
        Ok(PayoffFigure {
            which,
            q0,
            q1,
            series_terms,
            h,
        })
    }

    /// `(F_T, h(F_T), −Q0 log(F_T/F0))` on `F_T ∈ [F0/5, 3 F0]`.
    pub fn table(&self, points: usize) -> Result<Table> {
        let mut t = Table::new(&["F_T", "h", "reference"])
            .meta("figure", self.which)
            .meta("F0", FIGURE_F0)
            .meta("Q0", self.q0)
            .meta("Q1", self.q1)
            .meta("series_terms", self.series_terms)
            .meta("slope_constant_A", self.h.slope_constant())
            .meta("reference", "-Q0*log(F_T/F0)");
        for f in linspace(FIGURE_F0 / 5.0, 3.0 * FIGURE_F0, points) {
            t.push(vec![f, self.h.value(f)?, -self.q0 * (f / FIGURE_F0).ln()]);
        }
        Ok(t)
    }
}

pub fn payoff_figure(which: u8, points: usize) -> Result<Table> {
    PayoffFigure::new(which)?.table(points)
}

/// Inputs of a ratio curve.
#[derive(Debug, Clone, PartialEq)]
pub struct RatioCurve {
    pub model: RatioModel,
    pub horizon: f64,
    pub f0: Vec<f64>,
}

impl RatioCurve {
    pub fn figure(points: usize) -> Result<Self> {
        let model = RatioModel::new(
            ratio_figure::OMEGA,
            ratio_figure::C,
            ratio_figure::DELTA,
            LevyKernel::dirac(ratio_figure::JUMP, 1.0)?,
            ratio_figure::N,
        )?;
        Ok(RatioCurve {
            model,
            horizon: ratio_figure::T,
            f0: linspace(1.0, 20.0, points),
        })
    }

    /// `(F0, Qbar, N, terms_used, last_term)` with the two reference levels
    /// as metadata: 2 (no jumps) and `m2/e0` of `ν` (pure jumps).
    pub fn table(&self) -> Result<Table> {
        let pts = self
            .f0
            .par_iter()
            .map(|&f0| self.model.qbar(&IdentityClock, self.horizon, f0))
            .collect::<std::result::Result<Vec<_>, CoreError>>()?;
        let nu = &self.model.nu;
        let pure_jump = nu.second_moment()? / nu.exp_moment()?;
        let mut t = Table::new(&["F0", "Qbar", "N", "terms_used", "last_term"])
            .meta("omega", self.model.omega)
            .meta("c", self.model.c)
            .meta("delta", self.model.delta)
            .meta("T", self.horizon)
            .meta("N", self.model.n)
            .meta("y_no_jumps", 2.0)
            .meta("y_pure_jumps", pure_jump);
        for p in pts {
            t.push(vec![
                p.f0,
                p.qbar,
                self.model.n as f64,
                p.terms_used as f64,
                p.last_term,
            ]);
        }
        Ok(t)
    }
}
