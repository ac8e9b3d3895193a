//! Path simulation of the time-changed process and the statistics built on it.
//!
//! Each path runs an Euler scheme in calendar time. The clock has activity
//! `v_t` (`dτ = v dt`), and the state coefficients are frozen at the start of
//! each step. Between jumps `X` moves with drift `−a²/2 − ∫(e^z − 1) μ(X, dz)`
//! per unit business time, which is the martingale drift with the jump
//! compensator folded in. Jumps arrive by thinning. A unit-exponential budget
//! is spent against a proposal rate that dominates `λ(x) v` on a window
//! around the current state. Each proposal is accepted with probability
//! `λ(X_s) v / bound` at the linearly interpolated state `X_s`. A proposal
//! whose true rate exceeds the bound counts as a violation, and the path is
//! still simulated.
//!
//! Paths are reproducible one at a time: path `i` draws from ChaCha8 stream
//! `i` of `seed`, so any partition of the index range gives the same records.

use alloc::format;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp1, StandardNormal};

use crate::model::{KernelSpec, ModelSpec};
use crate::payoff::Payoff;
use crate::{Error, Result};

/// The business clock `τ`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "snake_case"))]
pub enum ClockSpec {
    /// `τ_t = t`.
    Identity,
    /// `dτ = v⁺ dt` with `dv = κ(θ − v⁺) dt + η √v⁺ dW_v`, `d⟨W_v, W_X⟩ = ρ dt`,
    /// discretized with full truncation at zero.
    ActivityRate {
        v0: f64,
        kappa: f64,
        theta: f64,
        eta: f64,
        rho: f64,
    },
}

impl ClockSpec {
    pub fn check(&self) -> Result<()> {
        match *self {
            ClockSpec::Identity => Ok(()),
            ClockSpec::ActivityRate {
                v0,
                kappa,
                theta,
                eta,
                rho,
            } => {
                if !(v0 > 0.0
                    && kappa > 0.0
                    && theta >= 0.0
                    && eta >= 0.0
                    && (-1.0..=1.0).contains(&rho))
                    || ![v0, kappa, theta, eta].iter().all(|v| v.is_finite())
                {
                    return Err(Error::Parameter(format!(
                        "activity clock needs v0 > 0, κ > 0, θ ≥ 0, η ≥ 0 and ρ in [−1, 1] \
                         (v0 {v0}, κ {kappa}, θ {theta}, η {eta}, ρ {rho})"
                    )));
                }
                Ok(())
            }
        }
    }

    /// `E τ_T` of the continuous-time clock.
    pub fn expected_tau(&self, horizon: f64) -> f64 {
        match *self {
            ClockSpec::Identity => horizon,
            ClockSpec::ActivityRate {
                v0, kappa, theta, ..
            } => theta * horizon + (v0 - theta) * (-(-kappa * horizon).exp_m1()) / kappa,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SimConfig {
    pub paths: u64,
    pub steps_per_unit: u32,
    pub horizon: f64,
    pub seed: u64,
    /// Proposal rate multiplier over the local intensity bound, `> 1`.
    pub thinning_safety: f64,
    /// Paths leaving `[x0 − w, x0 + w]` stop and are flagged.
    pub box_half_width: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            paths: 100_000,
            steps_per_unit: 1000,
            horizon: 1.0,
            seed: 0,
            thinning_safety: 1.5,
            box_half_width: 15.0,
        }
    }
}

impl SimConfig {
    pub fn check(&self) -> Result<()> {
        if self.paths == 0 || self.steps_per_unit == 0 {
            return Err(Error::Parameter(
                "paths and steps must be at least 1".into(),
            ));
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(Error::Parameter(format!(
                "horizon {} must be positive",
                self.horizon
            )));
        }
        if !(self.thinning_safety > 1.0 && self.thinning_safety.is_finite()) {
            return Err(Error::Parameter(format!(
                "thinning safety {} must exceed 1",
                self.thinning_safety
            )));
        }
        if !(self.box_half_width > 0.0) {
            return Err(Error::Parameter(format!(
                "box half width {} must be positive",
                self.box_half_width
            )));
        }
        Ok(())
    }

    /// Number of Euler steps; the step is `horizon / steps`.
    pub fn steps(&self) -> u64 {
        ((self.horizon * self.steps_per_unit as f64).round() as u64).max(1)
    }
}

/// Per-path accumulators.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PathRecord {
    pub x_t: f64,
    /// `∫ a²(X) dτ + Σ (jump size)²`.
    pub qv: f64,
    pub tau: f64,
    pub jumps: u32,
    pub violations: u32,
    pub exited: bool,
}

/// Rejects models the simulator cannot run: jump measures with a density part.
pub fn check_simulable(model: &ModelSpec) -> Result<()> {
    let atomic = match &model.kernel {
        KernelSpec::None | KernelSpec::FractionalLinear(_) => true,
        KernelSpec::Levy { nu } | KernelSpec::Proportional { nu, .. } => nu.is_atomic(),
        KernelSpec::Mixture { nu0, nu1, .. } => nu0.is_atomic() && nu1.is_atomic(),
    };
    if !atomic {
        return Err(Error::Parameter(
            "path simulation supports atomic jump measures only".into(),
        ));
    }
    Ok(())
}

/// Whether coefficients are the same at every state, so they can be
/// evaluated once per path.
fn homogeneous(model: &ModelSpec) -> bool {
    use crate::model::{ScaleFn, VolSpec};
    let constant = |f: &ScaleFn| matches!(f, ScaleFn::Const { .. });
    let vol = match &model.vol {
        VolSpec::Const { .. } => true,
        VolSpec::Scaled { gamma, .. } => constant(gamma),
        VolSpec::Exp { rate, .. } => *rate == 0.0,
        VolSpec::Mixture { c, sigma0_sq, .. } => *c == 0.0 && constant(sigma0_sq),
        VolSpec::Piecewise { breaks, .. } => breaks.is_empty(),
    };
    let kernel = match &model.kernel {
        KernelSpec::None | KernelSpec::Levy { .. } => true,
        KernelSpec::Proportional { gamma, .. } => constant(gamma),
        KernelSpec::Mixture { c, sigma0_sq, .. } => *c == 0.0 && constant(sigma0_sq),
        KernelSpec::FractionalLinear(_) => false,
    };
    vol && kernel
}

/// Local coefficients at one state.
#[derive(Clone, Copy)]
struct Local {
    a2: f64,
    /// Drift per unit business time between jumps.
    drift: f64,
}

fn local(model: &ModelSpec, x: f64) -> Result<Local> {
    let a2 = model.a2(x);
    let comp = model.kernel_at(x).integrate(|z| z.exp_m1())?;
    Ok(Local {
        a2,
        drift: -0.5 * a2 - comp,
    })
}

/// Simulates path `index` of the run described by `cfg`.
pub fn simulate_path(
    model: &ModelSpec,
    clock: &ClockSpec,
    x0: f64,
    cfg: &SimConfig,
    index: u64,
) -> Result<PathRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(index);

    let n = cfg.steps();
    let dt = cfg.horizon / n as f64;
    let jumpy = !matches!(model.kernel, KernelSpec::None);
    let (lo_box, hi_box) = (x0 - cfg.box_half_width, x0 + cfg.box_half_width);

    let mut x = x0;
    let mut v = match *clock {
        ClockSpec::Identity => 1.0,
        ClockSpec::ActivityRate { v0, .. } => v0,
    };
    let mut rec = PathRecord {
        x_t: x0,
        qv: 0.0,
        tau: 0.0,
        jumps: 0,
        violations: 0,
        exited: false,
    };
    let mut budget: f64 = if jumpy {
        rng.sample(Exp1)
    } else {
        f64::INFINITY
    };
    let fixed = if homogeneous(model) {
        Some((local(model, x0)?, model.intensity_sup(x0, x0)))
    } else {
        None
    };

    for _ in 0..n {
        let vp = v.max(0.0);
        let dtau = vp * dt;
        let xi1: f64 = rng.sample(StandardNormal);
        if let ClockSpec::ActivityRate {
            kappa,
            theta,
            eta,
            rho,
            ..
        } = *clock
        {
            let xi2: f64 = rng.sample(StandardNormal);
            let xv = rho * xi1 + (1.0 - rho * rho).sqrt() * xi2;
            v += kappa * (theta - vp) * dt + eta * (vp * dt).sqrt() * xv;
        }
        rec.tau += dtau;
        if dtau == 0.0 {
            continue;
        }

        let loc = match &fixed {
            Some((l, _)) => *l,
            None => local(model, x)?,
        };
        rec.qv += loc.a2 * dtau;
        let cont = loc.drift * dtau + (loc.a2 * dtau).sqrt() * xi1;

        if jumpy {
            // Thinning over business time s ∈ [0, dτ] with X_s = X + (s/dτ)·cont + jumps so far.
            let radius = 5.0 * (loc.a2 * dtau).sqrt() + loc.drift.abs() * dtau;
            let mut jumped = 0.0;
            let mut s = 0.0;
            let window = |centre: f64| match &fixed {
                Some((_, b)) => *b,
                None => model.intensity_sup(centre - radius, centre + radius),
            };
            let mut bound = cfg.thinning_safety * window(x);
            loop {
                let hazard = bound * (dtau - s);
                if !(bound > 0.0) || budget >= hazard {
                    if bound > 0.0 {
                        budget -= hazard;
                    }
                    break;
                }
                s += budget / bound;
                budget = rng.sample(Exp1);
                let xs = x + jumped + cont * (s / dtau);
                let k = model.kernel_at(xs);
                let rate = k.atom_intensity();
                if rate > bound {
                    rec.violations += 1;
                }
                let u: f64 = rng.random();
                if u * bound < rate {
                    if let Some(z) = k.pick_atom(u * bound) {
                        jumped += z;
                        rec.qv += z * z;
                        rec.jumps += 1;
                        let centre = x + jumped + cont * (s / dtau);
                        bound = cfg.thinning_safety * window(centre);
                    }
                }
            }
            x += jumped;
        }
        x += cont;
        if !(x > lo_box && x < hi_box) {
            rec.exited = true;
            break;
        }
    }
    rec.x_t = x;
    Ok(rec)
}

/// Simulates the index range `paths` sequentially.
pub fn simulate_range(
    model: &ModelSpec,
    clock: &ClockSpec,
    x0: f64,
    cfg: &SimConfig,
    paths: core::ops::Range<u64>,
) -> Result<Vec<PathRecord>> {
    check_simulable(model)?;
    clock.check()?;
    cfg.check()?;
    paths
        .map(|i| simulate_path(model, clock, x0, cfg, i))
        .collect()
}

/// Fails when any path broke the thinning bound or left the simulation box.
pub fn check_records(records: &[PathRecord]) -> Result<()> {
    let violations: u64 = records.iter().map(|r| r.violations as u64).sum();
    let exits = records.iter().filter(|r| r.exited).count();
    if violations > 0 || exits > 0 {
        return Err(Error::Simulation(format!(
            "{violations} thinning-bound violations and {exits} box exits in {} paths",
            records.len()
        )));
    }
    Ok(())
}

/// Sample mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct McEstimate {
    pub mean: f64,
    pub se: f64,
    pub n: u64,
}

impl McEstimate {
    /// Two-pass estimate over `samples`, summed in iteration order.
    pub fn from_samples(samples: impl Iterator<Item = f64> + Clone) -> McEstimate {
        let (n, sum) = samples
            .clone()
            .fold((0u64, 0.0), |(n, s), v| (n + 1, s + v));
        if n == 0 {
            return McEstimate {
                mean: f64::NAN,
                se: f64::NAN,
                n,
            };
        }
        let mean = sum / n as f64;
        let ss: f64 = samples.map(|v| (v - mean) * (v - mean)).sum();
        let var = if n > 1 { ss / (n - 1) as f64 } else { f64::NAN };
        McEstimate {
            mean,
            se: (var / n as f64).sqrt(),
            n,
        }
    }

    /// `|mean − target| ≤ k·SE`.
    pub fn within(&self, target: f64, k: f64) -> bool {
        (self.mean - target).abs() <= k * self.se
    }
}

/// Per-path `QV − (G(X_T) − G(x0))`, mean zero when `G` prices the swap.
pub fn identity_gap(records: &[PathRecord], g: &Payoff, x0: f64) -> McEstimate {
    let g0 = g.value(x0);
    McEstimate::from_samples(records.iter().map(move |r| r.qv - (g.value(r.x_t) - g0)))
}

/// `mean(QV) / mean(−(X_T − x0))` with a delta-method standard error.
pub fn mc_ratio(records: &[PathRecord], x0: f64) -> Result<McEstimate> {
    let n = records.len() as u64;
    if n < 2 {
        return Err(Error::IndeterminateRatio(format!("{n} paths")));
    }
    let q = McEstimate::from_samples(records.iter().map(|r| r.qv));
    let d = McEstimate::from_samples(records.iter().map(|r| x0 - r.x_t));
    if !(d.mean.abs() > 5.0 * d.se) {
        return Err(Error::IndeterminateRatio(format!(
            "log-contract estimate {:e} is within 5 SE ({:e}) of zero",
            d.mean, d.se
        )));
    }
    let cov: f64 = records
        .iter()
        .map(|r| (r.qv - q.mean) * (x0 - r.x_t - d.mean))
        .sum::<f64>()
        / (n - 1) as f64;
    let nf = n as f64;
    let (vq, vd) = (q.se * q.se * nf, d.se * d.se * nf);
    let ratio = q.mean / d.mean;
    let var = (vq - 2.0 * ratio * cov + ratio * ratio * vd) / (d.mean * d.mean);
    Ok(McEstimate {
        mean: ratio,
        se: (var.max(0.0) / nf).sqrt(),
        n,
    })
}
