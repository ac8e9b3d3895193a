//! Candidate payoffs `G`: constant + linear + exponential series + an
//! optional C¹ piecewise-quadratic block, all with exact derivatives.

use alloc::format;
use alloc::vec::Vec;
use core::ops::{Add, Mul};

use crate::{Error, Result};

/// Derivative order for [`Payoff::eval`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Order {
    Value,
    First,
    Second,
}

impl TryFrom<u8> for Order {
    type Error = Error;
    fn try_from(k: u8) -> Result<Self> {
        match k {
            0 => Ok(Order::Value),
            1 => Ok(Order::First),
            2 => Ok(Order::Second),
            _ => Err(Error::Parameter(format!(
                "derivative order {k} is not 0, 1 or 2"
            ))),
        }
    }
}

/// `coef · e^{rate·x}`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ExpTerm {
    pub coef: f64,
    pub rate: f64,
}

/// Quadratic `αx + βx²` on `[γ1, γ2]`, continued linearly with matching
/// slope outside, so the whole function is C¹.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PiecewiseQuadratic {
    pub alpha: f64,
    pub beta: f64,
    pub gamma1: f64,
    pub gamma2: f64,
}

impl PiecewiseQuadratic {
    fn quad(&self, x: f64) -> f64 {
        self.alpha * x + self.beta * x * x
    }

    fn slope(&self, x: f64) -> f64 {
        self.alpha + 2.0 * self.beta * x
    }

    pub fn value(&self, x: f64) -> f64 {
        if x < self.gamma1 {
            self.quad(self.gamma1) + (x - self.gamma1) * self.slope(self.gamma1)
        } else if x <= self.gamma2 {
            self.quad(x)
        } else {
            self.quad(self.gamma2) + (x - self.gamma2) * self.slope(self.gamma2)
        }
    }

    pub fn d1(&self, x: f64) -> f64 {
        self.slope(x.clamp(self.gamma1, self.gamma2))
    }

    /// Left limit at the knots.
    pub fn d2(&self, x: f64) -> f64 {
        if x > self.gamma1 && x <= self.gamma2 {
            2.0 * self.beta
        } else {
            0.0
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct Payoff {
    pub constant: f64,
    pub linear: f64,
    pub exps: Vec<ExpTerm>,
    #[cfg_attr(feature = "serde", serde(skip_serializing_if = "Option::is_none"))]
    pub pieces: Option<PiecewiseQuadratic>,
}

impl Payoff {
    pub fn zero() -> Self {
        Payoff::default()
    }

    pub fn constant(c: f64) -> Self {
        Payoff {
            constant: c,
            ..Payoff::default()
        }
    }

    /// `coef · x`.
    pub fn linear(coef: f64) -> Self {
        Payoff {
            linear: coef,
            ..Payoff::default()
        }
    }

    pub fn exp(coef: f64, rate: f64) -> Self {
        Payoff {
            exps: alloc::vec![ExpTerm { coef, rate }],
            ..Payoff::default()
        }
    }

    pub fn piecewise(p: PiecewiseQuadratic) -> Self {
        Payoff {
            pieces: Some(p),
            ..Payoff::default()
        }
    }

    pub fn knots(&self) -> Option<(f64, f64)> {
        self.pieces.map(|p| (p.gamma1, p.gamma2))
    }

    pub fn eval(&self, x: f64, order: Order) -> f64 {
        match order {
            Order::Value => self.value(x),
            Order::First => self.d1(x),
            Order::Second => self.d2(x),
        }
    }

    pub fn value(&self, x: f64) -> f64 {
        let mut v = self.constant + self.linear * x;
        for t in &self.exps {
            v += t.coef * (t.rate * x).exp();
        }
        if let Some(p) = &self.pieces {
            v += p.value(x);
        }
        v
    }

    pub fn d1(&self, x: f64) -> f64 {
        let mut v = self.linear;
        for t in &self.exps {
            v += t.coef * t.rate * (t.rate * x).exp();
        }
        if let Some(p) = &self.pieces {
            v += p.d1(x);
        }
        v
    }

    pub fn d2(&self, x: f64) -> f64 {
        let mut v = 0.0;
        for t in &self.exps {
            v += t.coef * t.rate * t.rate * (t.rate * x).exp();
        }
        if let Some(p) = &self.pieces {
            v += p.d2(x);
        }
        v
    }

    /// `self + c0 + c1·e^x`, a direction the generator annihilates.
    pub fn shift_gauge(&self, c0: f64, c1: f64) -> Payoff {
        let mut out = self.clone();
        out.constant += c0;
        if c1 != 0.0 {
            match out.exps.iter_mut().find(|t| t.rate == 1.0) {
                Some(t) => t.coef += c1,
                None => out.exps.push(ExpTerm {
                    coef: c1,
                    rate: 1.0,
                }),
            }
        }
        out
    }

    /// `h(F) = G(log F) − G(log F0) + A·(F − F0)`.
    pub fn to_price_space(&self, f0: f64, slope_match: Option<f64>) -> Result<PriceSpacePayoff> {
        if !(f0 > 0.0 && f0.is_finite()) {
            return Err(Error::Domain(format!("F0 = {f0} must be positive")));
        }
        Ok(PriceSpacePayoff {
            payoff: self.clone(),
            f0,
            g_at_f0: self.value(f0.ln()),
            slope: slope_match.unwrap_or(0.0),
        })
    }
}

/// The constant `A` that gives `h'(F0) = −Q0/F0` when `G = −Q0·x + (series)`.
pub fn slope_match_constant(g: &Payoff, f0: f64, q0: f64) -> f64 {
    -(g.d1(f0.ln()) + q0) / f0
}

impl Add for &Payoff {
    type Output = Payoff;
    fn add(self, rhs: &Payoff) -> Payoff {
        assert!(
            self.pieces.is_none() || rhs.pieces.is_none(),
            "sum of two piecewise blocks is not representable"
        );
        let mut exps = self.exps.clone();
        exps.extend_from_slice(&rhs.exps);
        Payoff {
            constant: self.constant + rhs.constant,
            linear: self.linear + rhs.linear,
            exps,
            pieces: self.pieces.or(rhs.pieces),
        }
    }
}

impl Mul<f64> for &Payoff {
    type Output = Payoff;
    fn mul(self, k: f64) -> Payoff {
        Payoff {
            constant: k * self.constant,
            linear: k * self.linear,
            exps: self
                .exps
                .iter()
                .map(|t| ExpTerm {
                    coef: k * t.coef,
                    rate: t.rate,
                })
                .collect(),
            pieces: self.pieces.map(|p| PiecewiseQuadratic {
                alpha: k * p.alpha,
                beta: k * p.beta,
                ..p
            }),
        }
    }
}

/// A payoff in forward-price coordinates, as used by static replication.
#[derive(Debug, Clone, PartialEq)]
pub struct PriceSpacePayoff {
    payoff: Payoff,
    f0: f64,
    g_at_f0: f64,
    slope: f64,
}

impl PriceSpacePayoff {
    pub fn f0(&self) -> f64 {
        self.f0
    }

    pub fn slope_constant(&self) -> f64 {
        self.slope
    }

    pub fn log_payoff(&self) -> &Payoff {
        &self.payoff
    }

    fn check(f: f64) -> Result<f64> {
        if f > 0.0 && f.is_finite() {
            Ok(f.ln())
        } else {
            Err(Error::Domain(format!("price F = {f} must be positive")))
        }
    }

    pub fn value(&self, f: f64) -> Result<f64> {
        let x = Self::check(f)?;
        Ok(self.payoff.value(x) - self.g_at_f0 + self.slope * (f - self.f0))
    }

    pub fn d1(&self, f: f64) -> Result<f64> {
        let x = Self::check(f)?;
        Ok(self.payoff.d1(x) / f + self.slope)
    }

    /// `(G''(log F) − G'(log F)) / F²`, with the left-limit `G''` at knots.
    pub fn d2(&self, f: f64) -> Result<f64> {
        let x = Self::check(f)?;
        Ok((self.payoff.d2(x) - self.payoff.d1(x)) / (f * f))
    }
}
