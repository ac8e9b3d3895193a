//! Lévy mixture with state-dependent weights `σ1²/σ0² = e^{cx}`: the
//! perturbation series `G = −Q0 x + Σ_{n≥1} Q1 δⁿ a_n e^{ncx}`.

use alloc::format;
use alloc::string::ToString;
use alloc::vec::Vec;
use num_complex::Complex64;

use crate::kernel::LevyKernel;
use crate::payoff::{ExpTerm, Payoff};
use crate::{Error, Result};

/// Largest `|Re(λ z)|` for which `e^{λz}` is evaluated.
const EXP_LIMIT: f64 = 700.0;
const RESONANCE_TOL: f64 = 1e-12;

/// `q (λ² − λ) + ∫ (e^{λz} − 1 + (1 − e^z) λ) ν(dz)`: the eigenvalue of the
/// generator with diffusion weight `q` and kernel `ν` on `e^{λx}`.
fn eigenvalue(lambda: Complex64, q: f64, nu: &LevyKernel) -> Result<Complex64> {
    if let Some(z) = overflow_witness(lambda.re, nu) {
        return Err(Error::Range {
            lambda: lambda.to_string(),
            z,
        });
    }
    let jumps = nu.moment_complex(|z| {
        let lz = lambda * z;
        let em1 = if lz.norm() < 1e-5 {
            lz * (1.0 + lz * (0.5 + lz / 6.0))
        } else {
            lz.exp() - 1.0
        };
        em1 - lambda * z.exp_m1()
    })?;
    Ok(lambda * (lambda - 1.0) * q + jumps)
}

fn eigenvalue_real(lambda: f64, q: f64, nu: &LevyKernel) -> Result<f64> {
    if let Some(z) = overflow_witness(lambda, nu) {
        return Err(Error::Range {
            lambda: lambda.to_string(),
            z,
        });
    }
    let jumps = nu.moment(|z| (lambda * z).exp_m1() - lambda * z.exp_m1())?;
    Ok(q * lambda * (lambda - 1.0) + jumps)
}

/// `∫ |e^{λz} − 1 + (1 − e^z)λ| ν(dz)`, the scale against which a vanishing
/// eigenvalue is judged.
fn eigenvalue_scale(lambda: f64, q: f64, nu: &LevyKernel) -> Result<f64> {
    let jumps = nu.moment(|z| ((lambda * z).exp_m1() - lambda * z.exp_m1()).abs())?;
    Ok(q * lambda * lambda + jumps)
}

fn overflow_witness(re_lambda: f64, nu: &LevyKernel) -> Option<f64> {
    let big = |z: f64| (re_lambda * z).abs() > EXP_LIMIT || z.abs() > EXP_LIMIT;
    if let Some(a) = nu.atoms().iter().find(|a| big(a.size)) {
        return Some(a.size);
    }
    nu.density().and_then(|d| {
        let (lo, hi) = d.support();
        [lo, hi].into_iter().find(|&z| big(z))
    })
}

/// `φ_λ = α(λ² − λ) + ∫ (e^{λz} − 1 + (1 − e^z)λ) ν0(dz)`.
pub fn eigen_phi(lambda: Complex64, alpha: f64, nu0: &LevyKernel) -> Result<Complex64> {
    eigenvalue(lambda, alpha, nu0)
}

/// `χ_λ`, the same with `(β, ν1)`.
pub fn eigen_chi(lambda: Complex64, beta: f64, nu1: &LevyKernel) -> Result<Complex64> {
    eigenvalue(lambda, beta, nu1)
}

/// `Q0`, `Q1` and the series coefficients `a_n` for `n = 1..=N`.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesCoefficients {
    pub q0: f64,
    pub q1: f64,
    pub c: f64,
    pub delta: f64,
    /// `a[n-1] = a_n = (1/φ_{nc}) Π_{k<n} (−χ_{kc}/φ_{kc})`.
    pub a: Vec<f64>,
    /// `phi[n-1] = φ_{nc}`.
    pub phi: Vec<f64>,
    /// `chi[n-1] = χ_{nc}`.
    pub chi: Vec<f64>,
}

impl SeriesCoefficients {
    pub fn order(&self) -> usize {
        self.a.len()
    }

    /// `b_n = Q1 δⁿ a_n`, the coefficient of `e^{ncx}` in `G`.
    pub fn b(&self, n: usize) -> f64 {
        self.q1 * self.delta.powi(n as i32) * self.a[n - 1]
    }

    /// `G_n` without the `δⁿ` factor: `−Q0 x` for `n = 0`, `Q1 a_n e^{ncx}` after.
    pub fn term_payoff(&self, n: usize) -> Payoff {
        if n == 0 {
            Payoff::linear(-self.q0)
        } else {
            Payoff::exp(self.q1 * self.a[n - 1], n as f64 * self.c)
        }
    }

    /// `sup_{x ∈ [lo, hi]} |b_n e^{ncx}|`, computed in log space.
    pub fn term_sup(&self, n: usize, interval: (f64, f64)) -> f64 {
        let an = self.a[n - 1];
        if self.q1 == 0.0 || an == 0.0 || self.delta == 0.0 {
            return 0.0;
        }
        let nc = n as f64 * self.c;
        let edge = (nc * interval.0).max(nc * interval.1);
        (self.q1.abs().ln() + n as f64 * self.delta.ln() + an.abs().ln() + edge).exp()
    }
}

pub fn mixture_coefficients(
    alpha: f64,
    beta: f64,
    c: f64,
    delta: f64,
    nu0: &LevyKernel,
    nu1: &LevyKernel,
    order: usize,
) -> Result<SeriesCoefficients> {
    if !(alpha >= 0.0 && beta >= 0.0 && delta >= 0.0 && c.is_finite()) {
        return Err(Error::Parameter(format!(
            "need α, β, δ ≥ 0 and finite c (α {alpha}, β {beta}, δ {delta}, c {c})"
        )));
    }
    let den = alpha + nu0.exp_moment()?;
    if !(den > 0.0) {
        return Err(Error::Degenerate(format!("α + ∫(e^z − 1 − z)ν0 = {den}")));
    }
    let q0 = (2.0 * alpha + nu0.second_moment()?) / den;
    let q1 = 2.0 * beta + nu1.second_moment()? - q0 * (beta + nu1.exp_moment()?);

    let mut a = Vec::with_capacity(order);
    let mut phi = Vec::with_capacity(order);
    let mut chi = Vec::with_capacity(order);
    for k in 1..=order {
        let lam = k as f64 * c;
        let p = eigenvalue_real(lam, alpha, nu0)?;
        let scale = eigenvalue_scale(lam, alpha, nu0)?;
        if !(p.abs() > RESONANCE_TOL * scale) || p == 0.0 {
            return Err(Error::Resonance(format!(
                "φ at λ = {k}·c = {lam} vanishes (φ = {p:e}); series coefficient a_{k} is undefined"
            )));
        }
        phi.push(p);
        chi.push(eigenvalue_real(lam, beta, nu1)?);
    }
    for n in 1..=order {
        let an = if n == 1 {
            1.0 / phi[0]
        } else {
            a[n - 2] * (-chi[n - 2]) / phi[n - 1]
        };
        a.push(an);
    }
    Ok(SeriesCoefficients {
        q0,
        q1,
        c,
        delta,
        a,
        phi,
        chi,
    })
}

/// Decay diagnostics for the ratio `r_n = |χ_{nc} / φ_{(n+1)c}| = |a_{n+1}/a_n|`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionReport {
    /// `ratios[n-1] = r_n`.
    pub ratios: Vec<f64>,
    /// Least-squares slope of `ln r_n` against `n` over the upper half.
    pub log_slope: f64,
    pub threshold: f64,
    pub passed: bool,
}

pub const DEFAULT_CONDITION_THRESHOLD: f64 = 1e-3;

pub fn check_mixture_condition(
    alpha: f64,
    beta: f64,
    c: f64,
    nu0: &LevyKernel,
    nu1: &LevyKernel,
    n_max: usize,
) -> ConditionReport {
    check_mixture_condition_with(alpha, beta, c, nu0, nu1, n_max, DEFAULT_CONDITION_THRESHOLD)
}

pub fn check_mixture_condition_with(
    alpha: f64,
    beta: f64,
    c: f64,
    nu0: &LevyKernel,
    nu1: &LevyKernel,
    n_max: usize,
    threshold: f64,
) -> ConditionReport {
    let n_max = n_max.max(2);
    let ratios: Vec<f64> = (1..=n_max)
        .map(|n| {
            let chi = eigenvalue_real(n as f64 * c, beta, nu1);
            let phi = eigenvalue_real((n + 1) as f64 * c, alpha, nu0);
            match (chi, phi) {
                (Ok(x), Ok(p)) if p != 0.0 => (x / p).abs(),
                (Ok(0.0), Ok(_)) => 0.0,
                _ => f64::INFINITY,
            }
        })
        .collect();
    let pts: Vec<(f64, f64)> = ratios
        .iter()
        .enumerate()
        .skip(n_max / 2)
        .filter(|(_, r)| r.is_finite() && **r > 0.0)
        .map(|(i, r)| ((i + 1) as f64, r.ln()))
        .collect();
    let log_slope = if pts.len() >= 2 {
        let m = pts.len() as f64;
        let (sx, sy) = pts.iter().fold((0.0, 0.0), |(a, b), (x, y)| (a + x, b + y));
        let (mx, my) = (sx / m, sy / m);
        let (num, den) = pts.iter().fold((0.0, 0.0), |(a, b), (x, y)| {
            (a + (x - mx) * (y - my), b + (x - mx) * (x - mx))
        });
        num / den
    } else {
        0.0
    };
    let last = *ratios.last().unwrap();
    ConditionReport {
        passed: last < threshold,
        ratios,
        log_slope,
        threshold,
    }
}

/// A truncated mixture payoff.
#[derive(Debug, Clone, PartialEq)]
pub struct MixtureSolution {
    pub payoff: Payoff,
    pub n_used: usize,
    /// Sup over the interval of the first dropped term.
    pub tail: f64,
    /// Sup of the generator residual left by the truncation, in units of
    /// `σ0²/2`: `|φ_{(N+1)c}|` times the first dropped term.
    pub residual_bound: f64,
}

/// Truncates the series at the smallest `N` for which both the next term and
/// the generator residual it leaves behind stay below `tail_tol` in sup-norm
/// over `interval`.
///
/// Dropping terms `N+1, N+2, …` leaves `A G − qv = (σ0²/2) φ_{(N+1)c} b_{N+1} e^{(N+1)cx}`,
/// so the second condition bounds the residual directly.
pub fn solve_mixture(
    coeffs: &SeriesCoefficients,
    tail_tol: f64,
    interval: (f64, f64),
) -> Result<MixtureSolution> {
    let mut payoff = Payoff::linear(-coeffs.q0);
    if coeffs.delta == 0.0 || coeffs.q1 == 0.0 {
        return Ok(MixtureSolution {
            payoff,
            n_used: 0,
            tail: 0.0,
            residual_bound: 0.0,
        });
    }
    let available = coeffs.order();
    for n_used in 0..available {
        let tail = coeffs.term_sup(n_used + 1, interval);
        let residual_bound = coeffs.phi[n_used].abs() * tail;
        if tail < tail_tol && residual_bound < tail_tol {
            payoff.exps = (1..=n_used)
                .map(|n| ExpTerm {
                    coef: coeffs.b(n),
                    rate: n as f64 * coeffs.c,
                })
                .collect();
            return Ok(MixtureSolution {
                payoff,
                n_used,
                tail,
                residual_bound,
            });
        }
    }
    let tail = if available > 0 {
        coeffs.term_sup(available, interval)
    } else {
        f64::INFINITY
    };
    Err(Error::Convergence(format!(
        "term {available} still has sup-norm {tail:e} on [{}, {}], tolerance {tail_tol:e}",
        interval.0, interval.1
    )))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use core::f64::consts::E;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn phi_vanishes_at_zero_and_one() {
        let nu = LevyKernel::from_atoms(&[(-1.0, 0.7), (0.4, 0.3)]).unwrap();
        for alpha in [0.0, 0.5, 2.0] {
            assert!(eigen_phi(c(0.0), alpha, &nu).unwrap().norm() < 1e-15);
            assert!(eigen_phi(c(1.0), alpha, &nu).unwrap().norm() < 1e-15);
        }
    }

    #[test]
    fn phi_examples() {
        assert_eq!(
            eigen_phi(c(2.0), 1.0, &LevyKernel::empty()).unwrap(),
            c(2.0)
        );
        let nu = LevyKernel::dirac(1.0, 1.0).unwrap();
        for lam in [0.23f64, 0.46, 3.0] {
            let expect = lam.exp() - 1.0 + (1.0 - E) * lam;
            assert_relative_eq!(
                eigen_phi(c(lam), 0.0, &nu).unwrap().re,
                expect,
                max_relative = 1e-13
            );
        }
    }

    #[test]
    fn phi_overflow_is_a_range_error() {
        let nu = LevyKernel::dirac(1.0, 1.0).unwrap();
        assert!(matches!(
            eigen_phi(c(800.0), 0.0, &nu),
            Err(Error::Range { .. })
        ));
    }

    #[test]
    fn complex_phi_matches_real_on_axis() {
        let nu = LevyKernel::dirac(-1.5, 1.0).unwrap();
        for lam in [0.39, 1.17, 5.0] {
            let a = eigen_chi(c(lam), 0.3, &nu).unwrap();
            let b = eigenvalue_real(lam, 0.3, &nu).unwrap();
            assert_relative_eq!(a.re, b, max_relative = 1e-13);
            assert_eq!(a.im, 0.0);
        }
    }

    #[test]
    fn q0_is_two_without_nu0() {
        let co = mixture_coefficients(
            1.0,
            0.0,
            0.39,
            1.25,
            &LevyKernel::empty(),
            &LevyKernel::dirac(-1.5, 1.0).unwrap(),
            8,
        )
        .unwrap();
        assert_eq!(co.q0, 2.0);
        let expect_q1 = 2.25 - 2.0 * ((-1.5f64).exp() - 1.0 + 1.5);
        assert_relative_eq!(co.q1, expect_q1, max_relative = 1e-14);
        assert!((co.q1 - 0.80374).abs() < 1e-5);
        assert_relative_eq!(co.a[0], 1.0 / co.phi[0], max_relative = 1e-15);
    }

    #[test]
    fn figure_one_q0() {
        let nu0 = LevyKernel::dirac(1.0, 1.0).unwrap();
        let co = mixture_coefficients(0.0, 1.0, 0.23, 0.22, &nu0, &LevyKernel::empty(), 8).unwrap();
        // kernel-moment oracle: m2 / e0 with m2 = 1, e0 = e − 2
        let oracle = nu0.second_moment().unwrap() / nu0.exp_moment().unwrap();
        assert_relative_eq!(co.q0, oracle, max_relative = 1e-14);
        assert_relative_eq!(co.q0, 1.0 / (E - 2.0), max_relative = 1e-12);
    }

    #[test]
    fn zero_step_is_resonant() {
        let nu = LevyKernel::dirac(-0.5, 1.0).unwrap();
        match mixture_coefficients(1.0, 2.0, 0.0, 0.5, &nu, &nu, 4) {
            Err(Error::Resonance(msg)) => assert!(msg.contains("a_1"), "{msg}"),
            other => panic!("{other:?}"),
        }
        // c = 1/2: φ_{2c} = φ_1 = 0
        match mixture_coefficients(1.0, 0.0, 0.5, 0.5, &LevyKernel::empty(), &nu, 4) {
            Err(Error::Resonance(msg)) => assert!(msg.contains("a_2"), "{msg}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn condition_positive_support_for_phi() {
        let c = 0.23;
        let r = check_mixture_condition(
            0.0,
            1.0,
            c,
            &LevyKernel::dirac(1.0, 1.0).unwrap(),
            &LevyKernel::empty(),
            64,
        );
        assert!(r.passed, "{:?}", r.ratios.last());
        for n in [1usize, 5, 30, 64] {
            let nf = n as f64;
            let m = (nf + 1.0) * c;
            let oracle = (nf * nf * c * c - nf * c).abs() / (m.exp() - 1.0 + (1.0 - E) * m).abs();
            assert_relative_eq!(r.ratios[n - 1], oracle, max_relative = 1e-10);
        }
        assert!(r.log_slope < 0.0);
    }

    #[test]
    fn condition_fails_for_upward_jumps_in_nu1() {
        let r = check_mixture_condition(
            1.0,
            0.0,
            0.39,
            &LevyKernel::empty(),
            &LevyKernel::dirac(1.75, 1.0).unwrap(),
            64,
        );
        assert!(!r.passed);
        assert!(r.log_slope > 0.0);
    }

    #[test]
    fn condition_without_jumps_tends_to_beta_over_alpha() {
        let r = check_mixture_condition(
            2.0,
            1.0,
            0.3,
            &LevyKernel::empty(),
            &LevyKernel::empty(),
            400,
        );
        assert!(!r.passed);
        assert!((r.ratios.last().unwrap() - 0.5).abs() < 1e-2);
        let r = check_mixture_condition(
            2.0,
            0.0,
            0.3,
            &LevyKernel::empty(),
            &LevyKernel::empty(),
            40,
        );
        assert!(r.passed);
    }

    #[test]
    fn unperturbed_series_is_linear() {
        let co = mixture_coefficients(
            1.0,
            0.0,
            0.39,
            0.0,
            &LevyKernel::empty(),
            &LevyKernel::dirac(-1.5, 1.0).unwrap(),
            16,
        )
        .unwrap();
        let sol = solve_mixture(&co, 1e-6, (0.0, 3.0)).unwrap();
        assert_eq!(sol.n_used, 0);
        assert_eq!(sol.payoff, Payoff::linear(-2.0));
    }

    #[test]
    fn convergence_error_when_order_too_small() {
        let co = mixture_coefficients(
            1.0,
            0.0,
            0.39,
            1.25,
            &LevyKernel::empty(),
            &LevyKernel::dirac(-1.5, 1.0).unwrap(),
            3,
        )
        .unwrap();
        assert!(matches!(
            solve_mixture(&co, 1e-6, (2.0f64.ln(), 30.0f64.ln())),
            Err(Error::Convergence(_))
        ));
    }
}
