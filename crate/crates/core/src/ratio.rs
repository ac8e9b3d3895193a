//! Closed-form approximation of the variance-swap to log-contract ratio for
//! the downward-jump mixture on an independent clock.
//!
//! The driving process has generator `ω² (A0 + δ e^{cx} A1)` with
//! `A0 = ∂² − ∂` and `A1` the pure-jump operator of `ν`. On exponentials
//! `e_λ(x) = e^{λx}` the two parts act diagonally, `A0 e_λ = φ_λ e_λ` with
//! `φ_λ = λ² − λ`, `A1 e_λ = χ_λ e_λ`. Expanding `u = Σ δⁿ u_n` gives, for the
//! initial condition `e_s`,
//!
//! ```text
//! v̄_N(t, x; e_s) = Σ_{n=0}^N δⁿ D_n(t) e^{(s+nc)x} Π_{k<n} ω² χ_{s+kc}
//! ```
//!
//! where `D_n` is the divided difference of `μ ↦ L(t, μ)` on the nodes
//! `μ_k = ω² φ_{s+kc}`, `k = 0..=n`, and `L(t, μ) = E e^{μ τ_t}` is the
//! Laplace transform of the clock. The value for `Id(x) = x` is the
//! derivative in `s` at `s = 0`, taken by complex step.

use alloc::format;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;

use crate::kernel::LevyKernel;
use crate::solvers::mixture::{eigen_chi, mixture_coefficients, SeriesCoefficients};
use crate::{Error, Result};

/// Smallest allowed gap `|φ_{(m+k)c} − φ_{(m+j)c}|` between nodes.
pub const RESONANCE_TOL: f64 = 1e-9;
/// Step of the complex-step derivative.
pub const COMPLEX_STEP: f64 = 1e-20;
/// Largest imaginary part tolerated in a real result.
pub const IMAG_TOL: f64 = 1e-10;

/// `L(t, λ) = E e^{λ τ_t}` of a clock independent of the driving process.
///
/// Implementations must be analytic in `λ` on the discs used by the contour
/// evaluation (entire for bounded clocks).
pub trait ClockLaplace {
    fn laplace(&self, t: f64, lambda: Complex64) -> Complex64;
}

/// `τ_t = t`, so `L(t, λ) = e^{tλ}`.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct IdentityClock;

impl ClockLaplace for IdentityClock {
    fn laplace(&self, t: f64, lambda: Complex64) -> Complex64 {
        (lambda * t).exp()
    }
}

impl<F: Fn(f64, Complex64) -> Complex64> ClockLaplace for F {
    fn laplace(&self, t: f64, lambda: Complex64) -> Complex64 {
        self(t, lambda)
    }
}

/// How divided differences of `L(t, ·)` are evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DividedDifference {
    /// Cauchy integral on a circle around the nodes, trapezoid rule.
    /// Stable for any order.
    #[default]
    Contour,
    /// `Σ_k L(μ_k) / Π_{j≠k} (μ_k − μ_j)` as written. Exact in exact
    /// arithmetic but loses all digits beyond a dozen or so nodes.
    PartialFractions,
}

/// Parameters `ω`, `c`, `δ`, downward kernel `ν` and truncation order `N`.
#[derive(Debug, Clone, PartialEq)]
pub struct RatioModel {
    pub omega: f64,
    pub c: f64,
    pub delta: f64,
    pub nu: LevyKernel,
    pub n: usize,
    pub method: DividedDifference,
}

impl RatioModel {
    pub fn new(omega: f64, c: f64, delta: f64, nu: LevyKernel, n: usize) -> Result<Self> {
        if !(omega > 0.0
            && omega.is_finite()
            && c > 0.0
            && c.is_finite()
            && delta >= 0.0
            && delta.is_finite())
        {
            return Err(Error::Parameter(format!(
                "need ω > 0, c > 0, δ ≥ 0 (ω {omega}, c {c}, δ {delta})"
            )));
        }
        if !nu.is_downward() {
            return Err(Error::Parameter(
                "jumps must be downward: ν must vanish on (0, ∞)".into(),
            ));
        }
        Ok(RatioModel {
            omega,
            c,
            delta,
            nu,
            n,
            method: DividedDifference::Contour,
        })
    }

    pub fn with_method(mut self, method: DividedDifference) -> Self {
        self.method = method;
        self
    }

    pub fn with_order(mut self, n: usize) -> Self {
        self.n = n;
        self
    }

    fn phi(&self, lambda: Complex64) -> Complex64 {
        lambda * (lambda - 1.0)
    }

    /// Series coefficients of the payoff for this model (`α = 1`, `β = 0`,
    /// `ν0 = 0`, `ν1 = ν`).
    pub fn coefficients(&self) -> Result<SeriesCoefficients> {
        mixture_coefficients(
            1.0,
            0.0,
            self.c,
            self.delta,
            &LevyKernel::empty(),
            &self.nu,
            self.n,
        )
    }

    /// `v̄_N(t, x; e_s)` for a complex shift `s`.
    fn vbar_shift<L: ClockLaplace + ?Sized>(
        &self,
        clock: &L,
        t: f64,
        x: f64,
        s: Complex64,
        m: usize,
    ) -> Result<Complex64> {
        let w2 = self.omega * self.omega;
        let lambdas: Vec<Complex64> = (0..=self.n).map(|k| s + (k as f64) * self.c).collect();
        let nodes: Vec<Complex64> = lambdas.iter().map(|&l| self.phi(l) * w2).collect();
        self.check_gaps(&nodes, m)?;

        let mut total = Complex64::new(0.0, 0.0);
        let mut chi_prod = Complex64::new(1.0, 0.0);
        let mut delta_pow = 1.0;
        for n in 0..=self.n {
            if n > 0 {
                chi_prod *= eigen_chi(lambdas[n - 1], 0.0, &self.nu)? * w2;
                delta_pow *= self.delta;
                if delta_pow == 0.0 {
                    break;
                }
            }
            let dd = match self.method {
                DividedDifference::Contour => contour_dd(clock, t, &nodes[..=n]),
                DividedDifference::PartialFractions => partial_fraction_dd(clock, t, &nodes[..=n]),
            };
            total += dd * chi_prod * delta_pow * (lambdas[n] * x).exp();
        }
        Ok(total)
    }

    fn check_gaps(&self, nodes: &[Complex64], m: usize) -> Result<()> {
        let w2 = self.omega * self.omega;
        for k in 0..nodes.len() {
            for j in 0..k {
                if (nodes[k] - nodes[j]).norm() / w2 <= RESONANCE_TOL {
                    return Err(Error::Resonance(format!(
                        "φ at (m + {k})c and (m + {j})c coincide (m = {m}, c = {}); perturb c by about 1e-6",
                        self.c
                    )));
                }
            }
        }
        Ok(())
    }

    /// `v̄_N(t, x; e_{mc})`.
    pub fn vbar_exp<L: ClockLaplace + ?Sized>(
        &self,
        clock: &L,
        t: f64,
        x: f64,
        m: usize,
    ) -> Result<f64> {
        let v = self.vbar_shift(clock, t, x, Complex64::new(m as f64 * self.c, 0.0), m)?;
        real(v)
    }

    /// `v̄_N(t, x; Id)`, the `s`-derivative of `v̄_N(t, x; e_s)` at `s = 0`.
    pub fn vbar_id<L: ClockLaplace + ?Sized>(&self, clock: &L, t: f64, x: f64) -> Result<f64> {
        let v = self.vbar_shift(clock, t, x, Complex64::new(0.0, COMPLEX_STEP), 0)?;
        Ok(v.im / COMPLEX_STEP)
    }

    /// `Q̄_N(T, F0)` with its truncation diagnostics.
    pub fn qbar<L: ClockLaplace + ?Sized>(
        &self,
        clock: &L,
        horizon: f64,
        f0: f64,
    ) -> Result<RatioPoint> {
        if !(f0 > 0.0 && f0.is_finite()) {
            return Err(Error::Domain(format!("F0 = {f0} must be positive")));
        }
        let x = f0.ln();
        let co = self.coefficients()?;
        let den = x - self.vbar_id(clock, horizon, x)?;
        if !(den > 0.0) {
            return Err(Error::IndeterminateRatio(format!(
                "log-contract value {den:e} is not positive at F0 = {f0}"
            )));
        }
        let mut num = 0.0;
        let mut terms_used = 0;
        let mut last_term = 0.0;
        for n in 1..=self.n {
            let b = co.b(n);
            if b == 0.0 {
                break;
            }
            let term = b * (self.vbar_exp(clock, horizon, x, n)? - (n as f64 * self.c * x).exp());
            num += term;
            terms_used = n;
            last_term = term / den;
            if term.abs() <= 1e-12 * num.abs() {
                break;
            }
        }
        Ok(RatioPoint {
            f0,
            qbar: co.q0 + num / den,
            log_contract: den,
            terms_used,
            last_term,
        })
    }
}

/// One point of a ratio curve.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct RatioPoint {
    pub f0: f64,
    pub qbar: f64,
    /// `−v̄_N(T, log F0; Id) + log F0`.
    pub log_contract: f64,
    pub terms_used: usize,
    /// Last outer-sum term included, divided by the log-contract value.
    pub last_term: f64,
}

fn real(v: Complex64) -> Result<f64> {
    if v.im.abs() > IMAG_TOL * (1.0 + v.re.abs()) {
        return Err(Error::Domain(format!("expected a real value, got {}", v)));
    }
    Ok(v.re)
}

fn partial_fraction_dd<L: ClockLaplace + ?Sized>(
    clock: &L,
    t: f64,
    nodes: &[Complex64],
) -> Complex64 {
    nodes
        .iter()
        .enumerate()
        .map(|(k, &mk)| {
            let den: Complex64 = nodes
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != k)
                .map(|(_, &mj)| mk - mj)
                .product();
            clock.laplace(t, mk) / den
        })
        .sum()
}

/// `(1 / 2πi) ∮ L(t, μ) / Π_j (μ − μ_j) dμ` on a circle enclosing the nodes.
///
/// The radius is the larger of `1.25 h + 0.5` (with `h` the largest node
/// distance from the centre) and `n / t`, which balances the growth of
/// `e^{tμ}` against `R^{-n}` for exponential-type transforms.
fn contour_dd<L: ClockLaplace + ?Sized>(clock: &L, t: f64, nodes: &[Complex64]) -> Complex64 {
    let n = nodes.len() - 1;
    if n == 0 {
        return clock.laplace(t, nodes[0]);
    }
    let (lo, hi) = nodes
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), z| {
            (a.min(z.re), b.max(z.re))
        });
    let centre = Complex64::new(0.5 * (lo + hi), 0.0);
    let h = nodes
        .iter()
        .map(|z| (z - centre).norm())
        .fold(0.0, f64::max);
    let mut radius = 1.25 * h + 0.5;
    if t > 0.0 {
        radius = radius.max(n as f64 / t);
    }
    let points = 2 * n + 96;
    let mut acc = Complex64::new(0.0, 0.0);
    for p in 0..points {
        let theta = 2.0 * PI * (p as f64 + 0.5) / points as f64;
        let dir = Complex64::from_polar(1.0, theta);
        let mu = centre + dir * radius;
        let den: Complex64 = nodes.iter().map(|&mj| mu - mj).product();
        // dμ / (2πi) = R e^{iθ} dθ / 2π
        acc += clock.laplace(t, mu) * dir * radius / den;
    }
    acc / points as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fig() -> RatioModel {
        RatioModel::new(0.3, 0.395, 1.0, LevyKernel::dirac(-1.0, 1.0).unwrap(), 35).unwrap()
    }

    #[test]
    fn contour_matches_partial_fractions_on_few_nodes() {
        let nodes: Vec<Complex64> = [0.0, 0.3, -0.7, 1.9]
            .iter()
            .map(|&r| Complex64::new(r, 0.0))
            .collect();
        for t in [0.0, 0.5, 2.0] {
            for k in 1..=nodes.len() {
                let a = contour_dd(&IdentityClock, t, &nodes[..k]);
                let b = partial_fraction_dd(&IdentityClock, t, &nodes[..k]);
                assert!(
                    (a - b).norm() < 1e-13 * (1.0 + b.norm()),
                    "t {t} k {k}: {a} vs {b}"
                );
            }
        }
    }

    #[test]
    fn divided_difference_of_exp_on_equal_spacing() {
        // e^{tμ} on μ_k = k h: Δ^n e^{t·}/ (n! hⁿ) = (e^{th} − 1)ⁿ / (n! hⁿ)
        let h = 0.2;
        let t = 1.3;
        let nodes: Vec<Complex64> = (0..=12)
            .map(|k| Complex64::new(k as f64 * h, 0.0))
            .collect();
        let fact: f64 = (1..=12).map(|k| k as f64).product();
        let exact = (t * h).exp_m1().powi(12) / (fact * h.powi(12));
        let got = contour_dd(&IdentityClock, t, &nodes).re;
        assert!((got - exact).abs() < 1e-12 * exact, "{got} vs {exact}");
    }

    #[test]
    fn unperturbed_values() {
        let m = fig();
        let m0 = RatioModel {
            delta: 0.0,
            ..m.clone()
        };
        let (t, x) = (0.7, 1.2);
        let lam = 2.0 * m.c;
        let expect = (t * 0.09 * (lam * lam - lam)).exp() * (lam * x).exp();
        assert!((m0.vbar_exp(&IdentityClock, t, x, 2).unwrap() - expect).abs() < 1e-13 * expect);
        assert!((m0.vbar_id(&IdentityClock, t, x).unwrap() - (x - 0.09 * t)).abs() < 1e-14);
        assert!((m0.qbar(&IdentityClock, 1.0, 7.0).unwrap().qbar - 2.0).abs() < 1e-15);
    }

    #[test]
    fn initial_condition() {
        let m = fig();
        for n in [0usize, 1, 5, 20, 35] {
            let m = m.clone().with_order(n);
            for x in [-1.0, 0.5, 3.0] {
                for k in [1usize, 3] {
                    let e = (k as f64 * m.c * x).exp();
                    assert!(
                        (m.vbar_exp(&IdentityClock, 0.0, x, k).unwrap() - e).abs() <= 1e-10 * e
                    );
                }
                assert!((m.vbar_id(&IdentityClock, 0.0, x).unwrap() - x).abs() <= 1e-10);
            }
        }
    }

    #[test]
    fn upward_jumps_rejected() {
        assert!(RatioModel::new(0.3, 0.4, 1.0, LevyKernel::dirac(0.5, 1.0).unwrap(), 5).is_err());
    }

    #[test]
    fn resonant_shift_is_reported() {
        // φ_{mc} = φ_{(m+k)c} when (2m + k) c = 1
        let m = RatioModel::new(0.3, 0.25, 1.0, LevyKernel::dirac(-1.0, 1.0).unwrap(), 3).unwrap();
        match m.vbar_exp(&IdentityClock, 1.0, 0.0, 1) {
            Err(Error::Resonance(msg)) => assert!(
                msg.contains("(m + 2)c") && msg.contains("(m + 0)c"),
                "{msg}"
            ),
            other => panic!("{other:?}"),
        }
    }
}
