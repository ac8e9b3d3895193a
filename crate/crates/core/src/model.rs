//! Local characteristics `(a², μ)` of the driving Markov process, and the
//! quantities built from them: martingale drift, QV rate and the generator.
//!
//! All formulas use the truncation-free form of the generator,
//!
//! ```text
//! A g(x) = a²(x)/2 (g'' − g') + ∫ (g(x+z) − g(x) + (1 − e^z) g'(x)) μ(x, dz),
//! ```
//!
//! so the truncation function `h(z) = z·1{|z| ≤ 1}` never enters numerics.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::kernel::{LevyKernel, LocalKernel};
use crate::payoff::Payoff;
use crate::solvers::fraclin::FracLin;
use crate::{Error, Result};

pub const DEFAULT_GRID_POINTS: usize = 201;

/// Scalar functions of the log-price used to modulate volatility and
/// jump intensity.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "snake_case"))]
pub enum ScaleFn {
    Const {
        value: f64,
    },
    /// `base + amp · tanh((x − center) / width)`.
    Tanh {
        base: f64,
        amp: f64,
        center: f64,
        width: f64,
    },
    /// `scale · e^{rate·x}`.
    Exp {
        scale: f64,
        rate: f64,
    },
    /// Piecewise constant: `values[i]` on `[breaks[i-1], breaks[i])`.
    Piecewise {
        breaks: Vec<f64>,
        values: Vec<f64>,
    },
}

impl ScaleFn {
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            ScaleFn::Const { value } => *value,
            ScaleFn::Tanh {
                base,
                amp,
                center,
                width,
            } => base + amp * ((x - center) / width).tanh(),
            ScaleFn::Exp { scale, rate } => scale * (rate * x).exp(),
            ScaleFn::Piecewise { breaks, values } => values[breaks.partition_point(|b| *b <= x)],
        }
    }

    fn check(&self, what: &str) -> Result<()> {
        let bad = |msg: String| Err(Error::Parameter(format!("{what}: {msg}")));
        match self {
            ScaleFn::Const { value } if !(value.is_finite() && *value >= 0.0) => {
                bad(format!("value {value} must be ≥ 0"))
            }
            ScaleFn::Tanh {
                base, amp, width, ..
            } if !(*base > amp.abs() && *width > 0.0) => bad(format!(
                "tanh needs base > |amp| and width > 0 (base {base}, amp {amp}, width {width})"
            )),
            ScaleFn::Exp { scale, rate }
                if !(scale.is_finite() && *scale >= 0.0 && rate.is_finite()) =>
            {
                bad(format!(
                    "exp needs finite scale ≥ 0 (scale {scale}, rate {rate})"
                ))
            }
            ScaleFn::Piecewise { breaks, values } => {
                if values.len() != breaks.len() + 1 {
                    return bad(format!(
                        "{} values for {} breaks",
                        values.len(),
                        breaks.len()
                    ));
                }
                if breaks.windows(2).any(|w| !(w[0] < w[1])) {
                    return bad("breaks must be strictly increasing".into());
                }
                if values.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
                    return bad("values must be finite and ≥ 0".into());
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    /// `sup` over `[lo, hi]`; the registry functions are monotone or
    /// piecewise constant, so this is exact.
    pub fn sup_on(&self, lo: f64, hi: f64) -> f64 {
        match self {
            ScaleFn::Piecewise { breaks, values } => {
                let first = breaks.partition_point(|b| *b <= lo);
                let last = breaks.partition_point(|b| *b <= hi);
                values[first..=last].iter().cloned().fold(0.0, f64::max)
            }
            _ => self.eval(lo).max(self.eval(hi)),
        }
    }

    fn breaks(&self) -> &[f64] {
        match self {
            ScaleFn::Piecewise { breaks, .. } => breaks,
            _ => &[],
        }
    }
}

/// Local volatility `a(x)` registry.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "snake_case"))]
pub enum VolSpec {
    Const {
        sigma: f64,
    },
    /// `scale · e^{rate·x}`.
    Exp {
        scale: f64,
        rate: f64,
    },
    Piecewise {
        breaks: Vec<f64>,
        values: Vec<f64>,
    },
    /// `σ · γ(x)`, the diffusion part of a constant-relative-intensity model.
    Scaled {
        sigma: f64,
        gamma: ScaleFn,
    },
    /// `a² = σ0²(x) (α + δ β e^{cx})`.
    Mixture {
        alpha: f64,
        beta: f64,
        delta: f64,
        c: f64,
        sigma0_sq: ScaleFn,
    },
}

impl VolSpec {
    pub fn a2(&self, x: f64) -> f64 {
        match self {
            VolSpec::Mixture {
                alpha,
                beta,
                delta,
                c,
                sigma0_sq,
            } => sigma0_sq.eval(x) * (alpha + delta * beta * (c * x).exp()),
            _ => {
                let a = self.a(x);
                a * a
            }
        }
    }

    pub fn a(&self, x: f64) -> f64 {
        match self {
            VolSpec::Const { sigma } => *sigma,
            VolSpec::Exp { scale, rate } => scale * (rate * x).exp(),
            VolSpec::Piecewise { breaks, values } => values[breaks.partition_point(|b| *b <= x)],
            VolSpec::Scaled { sigma, gamma } => sigma * gamma.eval(x),
            VolSpec::Mixture { .. } => self.a2(x).sqrt(),
        }
    }

    fn check(&self) -> Result<()> {
        match self {
            VolSpec::Const { sigma } => ScaleFn::Const { value: *sigma }.check("vol"),
            VolSpec::Exp { scale, rate } => ScaleFn::Exp {
                scale: *scale,
                rate: *rate,
            }
            .check("vol"),
            VolSpec::Piecewise { breaks, values } => ScaleFn::Piecewise {
                breaks: breaks.clone(),
                values: values.clone(),
            }
            .check("vol"),
            VolSpec::Scaled { sigma, gamma } => {
                ScaleFn::Const { value: *sigma }.check("vol sigma")?;
                gamma.check("vol gamma")
            }
            VolSpec::Mixture {
                alpha,
                beta,
                delta,
                c,
                sigma0_sq,
            } => {
                check_mixture_scalars(*alpha, *beta, *delta, *c)?;
                sigma0_sq.check("sigma0_sq")
            }
        }
    }

    fn breaks(&self) -> &[f64] {
        match self {
            VolSpec::Piecewise { breaks, .. } => breaks,
            VolSpec::Scaled { gamma, .. } => gamma.breaks(),
            VolSpec::Mixture { sigma0_sq, .. } => sigma0_sq.breaks(),
            _ => &[],
        }
    }
}

fn check_mixture_scalars(alpha: f64, beta: f64, delta: f64, c: f64) -> Result<()> {
    if !(alpha >= 0.0
        && beta >= 0.0
        && delta >= 0.0
        && c.is_finite()
        && alpha.is_finite()
        && beta.is_finite())
        || !delta.is_finite()
    {
        return Err(Error::Parameter(format!(
            "mixture needs α, β, δ ≥ 0 and finite c (α {alpha}, β {beta}, δ {delta}, c {c})"
        )));
    }
    Ok(())
}

/// Lévy kernel `μ(x, dz)` registry.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "snake_case"))]
pub enum KernelSpec {
    None,
    /// State-independent `ν`.
    Levy {
        #[cfg_attr(feature = "serde", serde(flatten))]
        nu: LevyKernel,
    },
    /// `γ²(x) · ν`.
    Proportional {
        gamma: ScaleFn,
        #[cfg_attr(feature = "serde", serde(flatten))]
        nu: LevyKernel,
    },
    /// `c(x) δ_{z0}` with `c` fixed by the piecewise-quadratic payoff.
    FractionalLinear(FracLin),
    /// `σ0²(x)/2 · ν0 + δ σ0²(x) e^{cx}/2 · ν1`.
    Mixture {
        sigma0_sq: ScaleFn,
        delta: f64,
        c: f64,
        nu0: LevyKernel,
        nu1: LevyKernel,
    },
}

/// Parameters of the state-dependent Lévy mixture, gathered from a model.
#[derive(Debug, Clone, PartialEq)]
pub struct MixtureParams {
    pub alpha: f64,
    pub beta: f64,
    pub delta: f64,
    pub c: f64,
    pub sigma0_sq: ScaleFn,
    pub nu0: LevyKernel,
    pub nu1: LevyKernel,
}

/// Local volatility and Lévy kernel of the driving Markov process, plus the
/// interval over which validation grids are built.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ModelSpec {
    pub vol: VolSpec,
    pub kernel: KernelSpec,
    #[cfg_attr(feature = "serde", serde(default = "default_domain"))]
    pub domain: (f64, f64),
}

pub fn default_domain() -> (f64, f64) {
    (-3.0, 3.0)
}

impl ModelSpec {
    pub fn new(vol: VolSpec, kernel: KernelSpec, domain: (f64, f64)) -> Result<Self> {
        let m = ModelSpec {
            vol,
            kernel,
            domain,
        };
        m.check()?;
        Ok(m)
    }

    /// Structural validation of the registry parameters.
    pub fn check(&self) -> Result<()> {
        let (lo, hi) = self.domain;
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::Parameter(format!(
                "domain [{lo}, {hi}] is not a finite interval"
            )));
        }
        self.vol.check()?;
        match &self.kernel {
            KernelSpec::None | KernelSpec::Levy { .. } => Ok(()),
            KernelSpec::Proportional { gamma, .. } => gamma.check("kernel gamma"),
            KernelSpec::FractionalLinear(fl) => fl.check(),
            KernelSpec::Mixture {
                sigma0_sq,
                delta,
                c,
                ..
            } => {
                check_mixture_scalars(0.0, 0.0, *delta, *c)?;
                sigma0_sq.check("kernel sigma0_sq")
            }
        }
    }

    pub fn with_domain(mut self, lo: f64, hi: f64) -> Result<Self> {
        self.domain = (lo, hi);
        self.check()?;
        Ok(self)
    }

    pub fn diffusion(sigma: f64) -> Result<Self> {
        ModelSpec::new(VolSpec::Const { sigma }, KernelSpec::None, default_domain())
    }

    /// Constant volatility with a state-independent kernel.
    pub fn levy(sigma: f64, nu: LevyKernel) -> Result<Self> {
        ModelSpec::new(
            VolSpec::Const { sigma },
            KernelSpec::Levy { nu },
            default_domain(),
        )
    }

    /// `a² = γ²σ²`, `μ = γ²ν`.
    pub fn proportional(sigma: f64, gamma: ScaleFn, nu: LevyKernel) -> Result<Self> {
        ModelSpec::new(
            VolSpec::Scaled {
                sigma,
                gamma: gamma.clone(),
            },
            KernelSpec::Proportional { gamma, nu },
            default_domain(),
        )
    }

    pub fn fractional_linear(vol: VolSpec, params: FracLin) -> Result<Self> {
        let (lo, hi) = params.natural_domain();
        ModelSpec::new(vol, KernelSpec::FractionalLinear(params), (lo, hi))
    }

    pub fn mixture(p: MixtureParams) -> Result<Self> {
        ModelSpec::new(
            VolSpec::Mixture {
                alpha: p.alpha,
                beta: p.beta,
                delta: p.delta,
                c: p.c,
                sigma0_sq: p.sigma0_sq.clone(),
            },
            KernelSpec::Mixture {
                sigma0_sq: p.sigma0_sq,
                delta: p.delta,
                c: p.c,
                nu0: p.nu0,
                nu1: p.nu1,
            },
            default_domain(),
        )
    }

    /// The mixture parameters, when vol and kernel are a consistent pair.
    pub fn mixture_params(&self) -> Option<MixtureParams> {
        match (&self.vol, &self.kernel) {
            (
                VolSpec::Mixture {
                    alpha,
                    beta,
                    delta,
                    c,
                    sigma0_sq,
                },
                KernelSpec::Mixture {
                    sigma0_sq: s2,
                    delta: d2,
                    c: c2,
                    nu0,
                    nu1,
                },
            ) if sigma0_sq == s2 && delta == d2 && c == c2 => Some(MixtureParams {
                alpha: *alpha,
                beta: *beta,
                delta: *delta,
                c: *c,
                sigma0_sq: sigma0_sq.clone(),
                nu0: nu0.clone(),
                nu1: nu1.clone(),
            }),
            _ => None,
        }
    }

    pub fn a2(&self, x: f64) -> f64 {
        self.vol.a2(x)
    }

    /// `μ(x, ·)`.
    pub fn kernel_at(&self, x: f64) -> LocalKernel<'_> {
        match &self.kernel {
            KernelSpec::None => LocalKernel::empty(),
            KernelSpec::Levy { nu } => LocalKernel::scaled(1.0, nu),
            KernelSpec::Proportional { gamma, nu } => {
                let g = gamma.eval(x);
                LocalKernel::scaled(g * g, nu)
            }
            KernelSpec::FractionalLinear(fl) => {
                LocalKernel::atom(fl.z0, fl.intensity(self.a2(x), x))
            }
            KernelSpec::Mixture {
                sigma0_sq,
                delta,
                c,
                nu0,
                nu1,
            } => {
                let s0 = 0.5 * sigma0_sq.eval(x);
                LocalKernel::scaled(s0, nu0)
                    .plus(LocalKernel::scaled(delta * s0 * (c * x).exp(), nu1))
            }
        }
    }

    /// Martingale drift `−a²/2 − ∫(e^z − 1 − z) μ(x, dz)`.
    pub fn drift_b(&self, x: f64) -> Result<f64> {
        let e0 = self
            .kernel_at(x)
            .integrate(|z| z.exp_m1() - z)
            .map_err(|e| Error::Model(format!("exponential moment at x = {x}: {e}")))?;
        Ok(-0.5 * self.a2(x) - e0)
    }

    /// `a²(x) + ∫ z² μ(x, dz)`.
    pub fn qv_rate(&self, x: f64) -> Result<f64> {
        Ok(self.a2(x) + self.kernel_at(x).integrate(|z| z * z)?)
    }

    /// `A g(x)` in truncation-free form.
    pub fn apply_generator(&self, g: &Payoff, x: f64) -> Result<f64> {
        let gx = g.value(x);
        let g1 = g.d1(x);
        let diffusion = 0.5 * self.a2(x) * (g.d2(x) - g1);
        let jumps = self
            .kernel_at(x)
            .integrate(|z| g.value(x + z) - gx - z.exp_m1() * g1)?;
        Ok(diffusion + jumps)
    }

    /// Upper bound for the total atomic intensity over `[lo, hi]`.
    ///
    /// Exact for the registry kernels built from monotone scale functions;
    /// the fractional-linear intensity is sampled at nine equispaced points
    /// and its knots, so callers must leave a safety margin.
    pub fn intensity_sup(&self, lo: f64, hi: f64) -> f64 {
        match &self.kernel {
            KernelSpec::None => 0.0,
            KernelSpec::Levy { nu } => nu.atom_rate(),
            KernelSpec::Proportional { gamma, nu } => {
                let g = gamma.sup_on(lo, hi);
                g * g * nu.atom_rate()
            }
            KernelSpec::Mixture {
                sigma0_sq,
                delta,
                c,
                nu0,
                nu1,
            } => {
                let growth = (c * lo).exp().max((c * hi).exp());
                0.5 * sigma0_sq.sup_on(lo, hi)
                    * (nu0.atom_rate() + delta * growth * nu1.atom_rate())
            }
            KernelSpec::FractionalLinear(fl) => {
                let mut best = 0.0f64;
                let mut probe = |x: f64| best = best.max(fl.intensity(self.a2(x), x));
                for i in 0..=8 {
                    probe(lo + (hi - lo) * i as f64 / 8.0);
                }
                for k in fl
                    .knots()
                    .into_iter()
                    .chain(self.vol.breaks().iter().copied())
                {
                    if k > lo && k < hi {
                        probe(k);
                    }
                }
                best
            }
        }
    }

    /// `n` equispaced points on the domain hint.
    pub fn grid(&self, n: usize) -> Vec<f64> {
        linspace(self.domain.0, self.domain.1, n)
    }

    pub fn validate(&self, grid: &[f64]) -> ValidationReport {
        validate_model(self, grid, &ValidationConfig::default())
    }
}

pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => alloc::vec![lo],
        _ => (0..n)
            .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
            .collect(),
    }
}

/// Moves grid points that coincide with the payoff's knots by `1e-9`.
pub fn perturb_off_knots(grid: &mut [f64], g: &Payoff) {
    if let Some((k1, k2)) = g.knots() {
        for x in grid.iter_mut() {
            if *x == k1 || *x == k2 {
                *x += 1e-9;
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CheckStatus {
    Pass,
    Warn,
    Fail,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckEntry {
    pub name: &'static str,
    pub status: CheckStatus,
    pub sup: f64,
    pub witness: f64,
    pub note: String,
}

/// Grid-based check of the boundedness conditions on `a` and `μ`.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub entries: Vec<CheckEntry>,
    /// Largest `p ≥ 0` with `sup ∫(e^{pz} − 1 − pz) μ ≤ cap` on the grid.
    pub p_max_pos: f64,
    /// Most negative `p ≤ 0` with the same bound.
    pub p_max_neg: f64,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.entries.iter().all(|e| e.status != CheckStatus::Fail)
    }

    pub fn warnings(&self) -> impl Iterator<Item = &CheckEntry> {
        self.entries
            .iter()
            .filter(|e| e.status == CheckStatus::Warn)
    }

    pub fn entry(&self, name: &str) -> Option<&CheckEntry> {
        self.entries.iter().find(|e| e.name == name)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ValidationConfig {
    /// Cap on `sup ∫(e^{pz} − 1 − pz) μ` when searching for admissible `p`.
    pub exp_cap: f64,
    /// Search range for `|p|`.
    pub p_search_max: f64,
    /// Log-slope above which a supremum at the grid edge is flagged.
    pub growth_tol: f64,
}

impl Default for ValidationConfig {
    fn default() -> Self {
        ValidationConfig {
            exp_cap: 1e6,
            p_search_max: 64.0,
            growth_tol: 1e-2,
        }
    }
}

pub fn validate_model(model: &ModelSpec, grid: &[f64], cfg: &ValidationConfig) -> ValidationReport {
    let mut entries = Vec::new();
    if grid.is_empty() {
        entries.push(CheckEntry {
            name: "grid",
            status: CheckStatus::Fail,
            sup: f64::NAN,
            witness: f64::NAN,
            note: "empty validation grid".into(),
        });
        return ValidationReport {
            entries,
            p_max_pos: 0.0,
            p_max_neg: 0.0,
        };
    }

    let a_vals: Vec<f64> = grid.iter().map(|&x| model.vol.a(x)).collect();
    entries.push(sup_entry("vol_sup", grid, &a_vals, cfg, |v| v >= 0.0));

    let moments = |f: fn(f64) -> f64| -> Vec<f64> {
        grid.iter()
            .map(|&x| model.kernel_at(x).integrate(f).unwrap_or(f64::NAN))
            .collect()
    };
    let m2 = moments(|z| z * z);
    let e0 = moments(|z| z.exp_m1() - z);
    entries.push(sup_entry("second_moment_sup", grid, &m2, cfg, |v| v >= 0.0));
    entries.push(sup_entry("exp_moment_sup", grid, &e0, cfg, |v| v >= -1e-15));

    let lam: Vec<f64> = grid
        .iter()
        .map(|&x| model.kernel_at(x).atom_intensity())
        .collect();
    entries.push(sup_entry("jump_intensity_sup", grid, &lam, cfg, |v| {
        v >= 0.0
    }));

    let sup_p = |p: f64| -> f64 {
        grid.iter()
            .map(|&x| {
                model
                    .kernel_at(x)
                    .integrate(|z| (p * z).exp_m1() - p * z)
                    .unwrap_or(f64::INFINITY)
            })
            .fold(0.0, f64::max)
    };
    let search = |sign: f64| -> f64 {
        let cap = cfg.exp_cap;
        let hi = cfg.p_search_max;
        if sup_p(sign * hi) <= cap {
            return sign * hi;
        }
        let (mut a, mut b) = (0.0, hi);
        for _ in 0..60 {
            let m = 0.5 * (a + b);
            if sup_p(sign * m) <= cap {
                a = m;
            } else {
                b = m;
            }
        }
        sign * a
    };
    let p_max_pos = search(1.0);
    let p_max_neg = search(-1.0);

    ValidationReport {
        entries,
        p_max_pos,
        p_max_neg,
    }
}

fn sup_entry(
    name: &'static str,
    grid: &[f64],
    vals: &[f64],
    cfg: &ValidationConfig,
    admissible: impl Fn(f64) -> bool,
) -> CheckEntry {
    if let Some(i) = vals.iter().position(|v| !v.is_finite() || !admissible(*v)) {
        return CheckEntry {
            name,
            status: CheckStatus::Fail,
            sup: vals[i],
            witness: grid[i],
            note: format!("inadmissible value {} at x = {}", vals[i], grid[i]),
        };
    }
    let (i, &sup) = vals
        .iter()
        .enumerate()
        .fold((0, &f64::NEG_INFINITY), |acc, (i, v)| {
            if *v > *acc.1 {
                (i, v)
            } else {
                acc
            }
        });
    let n = grid.len();
    let mut status = CheckStatus::Pass;
    let mut note = String::new();
    if n >= 10 && sup > 0.0 && (i == 0 || i == n - 1) {
        let k = (n / 10).max(1);
        let (j0, j1) = if i == n - 1 {
            (n - 1 - k, n - 1)
        } else {
            (k, 0)
        };
        let (v0, v1) = (vals[j0], vals[j1]);
        if v0 > 0.0 && v1 > 0.0 {
            let rate = (v1 / v0).ln() / (grid[j1] - grid[j0]);
            if rate.abs() > cfg.growth_tol {
                status = CheckStatus::Warn;
                note = format!("supremum at the grid edge, growing like e^({rate:.4}·x)");
            }
        }
    }
    CheckEntry {
        name,
        status,
        sup,
        witness: grid[i],
        note,
    }
}
