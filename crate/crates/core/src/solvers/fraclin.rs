//! Fractional linear relative jump intensity: a single downward atom at
//! `z0` whose intensity `c(x)` is chosen so that a C¹ piecewise-quadratic
//! payoff solves the pricing equation exactly.

use alloc::format;

use crate::model::{ModelSpec, VolSpec};
use crate::payoff::{Payoff, PiecewiseQuadratic};
use crate::{Error, Result};

/// `(α, β, z0)` and the knots `γ1 < γ2` of the quadratic block.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FracLin {
    pub alpha: f64,
    pub beta: f64,
    pub z0: f64,
    pub gamma1: f64,
    pub gamma2: f64,
}

/// `e^{z0} − z0 − 1`.
fn k0(z0: f64) -> f64 {
    z0.exp_m1() - z0
}

/// Upper end of the admissible `β` interval, `1 − 2(e^{z0} − z0 − 1)/z0²`.
pub fn beta_upper_bound(z0: f64) -> f64 {
    1.0 - 2.0 * k0(z0) / (z0 * z0)
}

/// `(γ0, γ3)`: the knots must satisfy `γ0 < γ1 < γ2 < γ3`.
pub fn fraclin_bounds(alpha: f64, beta: f64, z0: f64) -> Result<(f64, f64)> {
    if !(z0 < 0.0) || !z0.is_finite() {
        return Err(Error::Parameter(format!("z0 = {z0} must be negative")));
    }
    let upper = beta_upper_bound(z0);
    if !(beta > 0.0 && beta < upper) {
        return Err(Error::Parameter(format!(
            "β = {beta} outside the admissible interval (0, {upper:.6}) for z0 = {z0}"
        )));
    }
    if !alpha.is_finite() {
        return Err(Error::Parameter(format!("α = {alpha} must be finite")));
    }
    let gamma3 = -alpha / (2.0 * beta) - 1.0 / beta;
    let gamma0 = -alpha / (2.0 * beta) + z0 * z0 / (2.0 * k0(z0)) * (1.0 - 1.0 / beta);
    Ok((gamma0, gamma3))
}

impl FracLin {
    pub fn new(alpha: f64, beta: f64, z0: f64, gamma1: f64, gamma2: f64) -> Result<Self> {
        let fl = FracLin {
            alpha,
            beta,
            z0,
            gamma1,
            gamma2,
        };
        fl.check()?;
        Ok(fl)
    }

    pub fn check(&self) -> Result<()> {
        let (g0, g3) = fraclin_bounds(self.alpha, self.beta, self.z0)?;
        if !(g0 < self.gamma1 && self.gamma1 < self.gamma2 && self.gamma2 < g3) {
            return Err(Error::Parameter(format!(
                "knots must satisfy γ0 < γ1 < γ2 < γ3, got {g0:.6} < {} < {} < {g3:.6}",
                self.gamma1, self.gamma2
            )));
        }
        Ok(())
    }

    pub fn pieces(&self) -> PiecewiseQuadratic {
        PiecewiseQuadratic {
            alpha: self.alpha,
            beta: self.beta,
            gamma1: self.gamma1,
            gamma2: self.gamma2,
        }
    }

    pub fn payoff(&self) -> Payoff {
        Payoff::piecewise(self.pieces())
    }

    /// `G'' − G' − 2`.
    pub fn numerator(&self, x: f64) -> f64 {
        let p = self.pieces();
        p.d2(x) - p.d1(x) - 2.0
    }

    /// `G(x) − G(x + z0) + (e^{z0} − 1) G'(x) + z0²`.
    pub fn denominator(&self, x: f64) -> f64 {
        let p = self.pieces();
        p.value(x) - p.value(x + self.z0) + self.z0.exp_m1() * p.d1(x) + self.z0 * self.z0
    }

    /// `c(x) = a²(x)/2 · (G'' − G' − 2) / (G(x) − G(x+z0) + (e^{z0}−1) G'(x) + z0²)`.
    pub fn intensity(&self, a2: f64, x: f64) -> f64 {
        0.5 * a2 * self.numerator(x) / self.denominator(x)
    }

    /// `c(x)/a²(x)` on `(γ1 − z0, γ2)` as a ratio of two linear functions.
    pub fn relative_intensity_linear(&self, x: f64) -> f64 {
        let (a, b, z0) = (self.alpha, self.beta, self.z0);
        let k = k0(z0);
        (b - 0.5 * a - 1.0 - b * x) / (a * k + (1.0 - b) * z0 * z0 + 2.0 * b * x * k)
    }

    /// Points where `c` is not smooth.
    pub fn knots(&self) -> [f64; 4] {
        [
            self.gamma1,
            self.gamma2,
            self.gamma1 - self.z0,
            self.gamma2 - self.z0,
        ]
    }

    /// Default domain hint: the knots with two jump sizes of margin.
    pub fn natural_domain(&self) -> (f64, f64) {
        (self.gamma1 + 2.0 * self.z0, self.gamma2 - 2.0 * self.z0)
    }
}

/// Solution of the fractional linear family for a given volatility.
#[derive(Debug, Clone, PartialEq)]
pub struct FracLinSolution {
    pub params: FracLin,
    pub payoff: Payoff,
    pub model: ModelSpec,
}

impl FracLinSolution {
    pub fn intensity(&self, x: f64) -> f64 {
        self.params.intensity(self.model.a2(x), x)
    }
}

/// Builds `G` and the model `(a², c(x) δ_{z0})` it prices.
pub fn fraclin_solve(
    alpha: f64,
    beta: f64,
    z0: f64,
    gamma1: f64,
    gamma2: f64,
    vol: VolSpec,
) -> Result<FracLinSolution> {
    let params = FracLin::new(alpha, beta, z0, gamma1, gamma2)?;
    let model = ModelSpec::fractional_linear(vol, params)?;
    if let Some(x) = model
        .grid(201)
        .into_iter()
        .find(|&x| !(model.vol.a(x) > 0.0))
    {
        return Err(Error::Parameter(format!(
            "volatility must be positive, a({x}) = {}",
            model.vol.a(x)
        )));
    }
    Ok(FracLinSolution {
        params,
        payoff: params.payoff(),
        model,
    })
}
