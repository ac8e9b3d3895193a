use alloc::format;

use crate::kernel::LevyKernel;
use crate::payoff::Payoff;
use crate::{Error, Result};

/// `Q = (σ² + m2) / (σ²/2 + e0)` and `G(x) = −Q x` for kernels `γ²(x)ν`
/// with diffusion `γ(x)σ`; `γ` drops out.
pub fn solve_proportional(sigma: f64, nu: &LevyKernel) -> Result<(f64, Payoff)> {
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(Error::Parameter(format!(
            "sigma = {sigma} must be finite and ≥ 0"
        )));
    }
    let m2 = nu.second_moment()?;
    let e0 = nu.exp_moment()?;
    let den = 0.5 * sigma * sigma + e0;
    if !(den > 0.0) {
        return Err(Error::Degenerate(format!(
            "σ²/2 + e0 = {den} (σ = {sigma}, e0 = {e0})"
        )));
    }
    let q = (sigma * sigma + m2) / den;
    Ok((q, Payoff::linear(-q)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn no_jumps_gives_two() {
        let (q, g) = solve_proportional(0.3, &LevyKernel::empty()).unwrap();
        assert_eq!(q, 2.0);
        assert_eq!(g, Payoff::linear(-2.0));
    }

    #[test]
    fn pure_jumps_at_minus_one_give_e() {
        let (q, _) = solve_proportional(0.0, &LevyKernel::dirac(-1.0, 1.0).unwrap()).unwrap();
        assert_relative_eq!(q, core::f64::consts::E, max_relative = 1e-14);
    }

    #[test]
    fn mixed_example() {
        // (0.04 + 0.045) / (0.02 + 0.5 (e^0.3 − 1.3)) computed by hand
        let (q, _) = solve_proportional(0.2, &LevyKernel::dirac(0.3, 0.5).unwrap()).unwrap();
        let e0 = 0.5 * (0.3f64.exp() - 1.3);
        assert_relative_eq!(q, 0.085 / (0.02 + e0), max_relative = 1e-14);
        assert!((q - 1.891857).abs() < 1e-6, "{q}");
    }

    #[test]
    fn degenerate_model() {
        assert!(matches!(
            solve_proportional(0.0, &LevyKernel::empty()),
            Err(Error::Degenerate(_))
        ));
    }
}
