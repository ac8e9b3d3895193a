//! Lévy measures at a fixed location: finitely many atoms plus an optional
//! smooth density on a compact support.

use alloc::format;
use alloc::vec::Vec;
use core::f64::consts::PI;
use num_complex::Complex64;

use crate::quadrature::GaussLegendre;
use crate::{Error, Result};

pub const DEFAULT_DENSITY_NODES: usize = 128;

/// A jump of log-size `size` arriving at `rate` per unit business time.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(from = "(f64, f64)", into = "(f64, f64)"))]
pub struct Atom {
    pub size: f64,
    pub rate: f64,
}

impl From<(f64, f64)> for Atom {
    fn from((size, rate): (f64, f64)) -> Self {
        Atom { size, rate }
    }
}

impl From<Atom> for (f64, f64) {
    fn from(a: Atom) -> Self {
        (a.size, a.rate)
    }
}

/// Parametric rate densities for the continuous part of a kernel.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "snake_case"))]
pub enum DensityShape {
    /// `intensity · N(z; mean, std²)`.
    Gaussian { intensity: f64, mean: f64, std: f64 },
    /// `intensity / (hi − lo)` on the support.
    Uniform { intensity: f64 },
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
struct JumpDensityRepr {
    shape: DensityShape,
    support: (f64, f64),
    #[cfg_attr(feature = "serde", serde(default = "default_nodes"))]
    nodes: usize,
}

#[cfg(feature = "serde")]
fn default_nodes() -> usize {
    DEFAULT_DENSITY_NODES
}

/// Smooth jump-rate density on `[lo, hi]`, integrated by Gauss–Legendre.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(
    feature = "serde",
    serde(try_from = "JumpDensityRepr", into = "JumpDensityRepr")
)]
pub struct JumpDensity {
    shape: DensityShape,
    lo: f64,
    hi: f64,
    rule: GaussLegendre,
}

impl TryFrom<JumpDensityRepr> for JumpDensity {
    type Error = Error;
    fn try_from(r: JumpDensityRepr) -> Result<Self> {
        JumpDensity::new(r.shape, r.support.0, r.support.1, r.nodes)
    }
}

impl From<JumpDensity> for JumpDensityRepr {
    fn from(d: JumpDensity) -> Self {
        JumpDensityRepr {
            shape: d.shape,
            support: (d.lo, d.hi),
            nodes: d.rule.len(),
        }
    }
}

impl JumpDensity {
    pub fn new(shape: DensityShape, lo: f64, hi: f64, nodes: usize) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::Parameter(format!(
                "density support [{lo}, {hi}] is not a finite interval"
            )));
        }
        if nodes == 0 {
            return Err(Error::Parameter(
                "density needs at least one quadrature node".into(),
            ));
        }
        let ok = match shape {
            DensityShape::Gaussian {
                intensity,
                mean,
                std,
            } => intensity >= 0.0 && std > 0.0 && mean.is_finite() && intensity.is_finite(),
            DensityShape::Uniform { intensity } => intensity >= 0.0 && intensity.is_finite(),
        };
        if !ok {
            return Err(Error::Parameter(format!("invalid density shape {shape:?}")));
        }
        Ok(JumpDensity {
            shape,
            lo,
            hi,
            rule: GaussLegendre::new(nodes),
        })
    }

    pub fn shape(&self) -> DensityShape {
        self.shape
    }

    pub fn support(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }

    pub fn nodes(&self) -> usize {
        self.rule.len()
    }

    /// Same density with a different node count.
    pub fn with_nodes(&self, nodes: usize) -> Result<Self> {
        JumpDensity::new(self.shape, self.lo, self.hi, nodes)
    }

    pub fn rate_density(&self, z: f64) -> f64 {
        if z < self.lo || z > self.hi {
            return 0.0;
        }
        match self.shape {
            DensityShape::Gaussian {
                intensity,
                mean,
                std,
            } => {
                let u = (z - mean) / std;
                intensity * (-0.5 * u * u).exp() / (std * (2.0 * PI).sqrt())
            }
            DensityShape::Uniform { intensity } => intensity / (self.hi - self.lo),
        }
    }

    fn integrate(&self, mut f: impl FnMut(f64) -> Result<f64>) -> Result<f64> {
        let mut acc = 0.0;
        for (z, w) in self.rule.mapped(self.lo, self.hi) {
            acc += w * self.rate_density(z) * f(z)?;
        }
        Ok(acc)
    }

    fn integrate_complex(&self, mut f: impl FnMut(f64) -> Result<Complex64>) -> Result<Complex64> {
        let mut acc = Complex64::new(0.0, 0.0);
        for (z, w) in self.rule.mapped(self.lo, self.hi) {
            acc += f(z)? * (w * self.rate_density(z));
        }
        Ok(acc)
    }
}

/// A Lévy measure: atoms plus an optional density.
#[derive(Debug, Clone, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(
    feature = "serde",
    serde(try_from = "LevyKernelRepr", into = "LevyKernelRepr")
)]
pub struct LevyKernel {
    atoms: Vec<Atom>,
    density: Option<JumpDensity>,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
struct LevyKernelRepr {
    #[cfg_attr(feature = "serde", serde(default))]
    atoms: Vec<Atom>,
    #[cfg_attr(
        feature = "serde",
        serde(default, skip_serializing_if = "Option::is_none")
    )]
    density: Option<JumpDensity>,
}

impl TryFrom<LevyKernelRepr> for LevyKernel {
    type Error = Error;
    fn try_from(r: LevyKernelRepr) -> Result<Self> {
        LevyKernel::new(r.atoms, r.density)
    }
}

impl From<LevyKernel> for LevyKernelRepr {
    fn from(k: LevyKernel) -> Self {
        LevyKernelRepr {
            atoms: k.atoms,
            density: k.density,
        }
    }
}

impl LevyKernel {
    pub fn new(atoms: Vec<Atom>, density: Option<JumpDensity>) -> Result<Self> {
        for (i, a) in atoms.iter().enumerate() {
            if !(a.size.is_finite() && a.rate.is_finite()) {
                return Err(Error::Parameter(format!("atom {i} is not finite: {a:?}")));
            }
            if a.rate < 0.0 {
                return Err(Error::Parameter(format!(
                    "atom {i} has negative rate {}",
                    a.rate
                )));
            }
            if a.size == 0.0 {
                return Err(Error::Parameter(format!("atom {i} sits at z = 0")));
            }
        }
        Ok(LevyKernel { atoms, density })
    }

    pub fn empty() -> Self {
        LevyKernel::default()
    }

    /// Single atom `rate · δ_size`.
    pub fn dirac(size: f64, rate: f64) -> Result<Self> {
        LevyKernel::new(alloc::vec![Atom { size, rate }], None)
    }

    pub fn from_atoms(atoms: &[(f64, f64)]) -> Result<Self> {
        LevyKernel::new(atoms.iter().copied().map(Atom::from).collect(), None)
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn density(&self) -> Option<&JumpDensity> {
        self.density.as_ref()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.iter().all(|a| a.rate == 0.0) && self.density.is_none()
    }

    /// Finite activity and representable by atoms alone.
    pub fn is_atomic(&self) -> bool {
        self.density.is_none()
    }

    /// Total atom rate (the density part is ignored).
    pub fn atom_rate(&self) -> f64 {
        self.atoms.iter().map(|a| a.rate).sum()
    }

    /// True if every atom and the density support lie in `z < 0`.
    pub fn is_downward(&self) -> bool {
        self.atoms.iter().all(|a| a.size < 0.0 || a.rate == 0.0)
            && self.density.as_ref().is_none_or(|d| d.hi <= 0.0)
    }

    /// `Σ w_i f(z_i) + ∫ f · density`.
    pub fn moment(&self, mut f: impl FnMut(f64) -> f64) -> Result<f64> {
        let mut acc = 0.0;
        for a in &self.atoms {
            acc += a.rate * checked(a.size, f(a.size))?;
        }
        if let Some(d) = &self.density {
            acc += d.integrate(|z| checked(z, f(z)))?;
        }
        Ok(acc)
    }

    pub fn moment_complex(&self, mut f: impl FnMut(f64) -> Complex64) -> Result<Complex64> {
        let mut acc = Complex64::new(0.0, 0.0);
        for a in &self.atoms {
            acc += checked_c(a.size, f(a.size))? * a.rate;
        }
        if let Some(d) = &self.density {
            acc += d.integrate_complex(|z| checked_c(z, f(z)))?;
        }
        Ok(acc)
    }

    /// `∫ z² ν(dz)`.
    pub fn second_moment(&self) -> Result<f64> {
        self.moment(|z| z * z)
    }

    /// `∫ (e^z − 1 − z) ν(dz)`.
    pub fn exp_moment(&self) -> Result<f64> {
        self.moment(|z| z.exp_m1() - z)
    }
}

/// Evaluates `∫ f(z) μ(dz)` for a kernel; the free-function form of
/// [`LevyKernel::moment`].
pub fn kernel_moment(kernel: &LevyKernel, integrand: impl FnMut(f64) -> f64) -> Result<f64> {
    kernel.moment(integrand)
}

fn checked(z: f64, v: f64) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Domain(format!(
            "integrand is not finite at jump size z = {z}"
        )))
    }
}

fn checked_c(z: f64, v: Complex64) -> Result<Complex64> {
    if v.re.is_finite() && v.im.is_finite() {
        Ok(v)
    } else {
        Err(Error::Domain(format!(
            "integrand is not finite at jump size z = {z}"
        )))
    }
}

/// One scaled piece of a location-dependent kernel.
#[derive(Debug, Clone, Copy)]
enum Part<'a> {
    Scaled { scale: f64, kernel: &'a LevyKernel },
    Atom { size: f64, rate: f64 },
}

/// The Lévy measure `μ(x, ·)` at one location `x`, as a non-allocating view:
/// at most two scaled copies of stored kernels or bare atoms.
#[derive(Debug, Clone, Copy, Default)]
pub struct LocalKernel<'a> {
    parts: [Option<Part<'a>>; 2],
}

impl<'a> LocalKernel<'a> {
    pub fn empty() -> Self {
        LocalKernel::default()
    }

    pub fn scaled(scale: f64, kernel: &'a LevyKernel) -> Self {
        LocalKernel {
            parts: [Some(Part::Scaled { scale, kernel }), None],
        }
    }

    pub fn atom(size: f64, rate: f64) -> Self {
        LocalKernel {
            parts: [Some(Part::Atom { size, rate }), None],
        }
    }

    /// Sum of two single-part kernels.
    pub fn plus(self, other: LocalKernel<'a>) -> Self {
        LocalKernel {
            parts: [self.parts[0], other.parts[0]],
        }
    }

    /// `∫ f(z) μ(x, dz)`.
    pub fn integrate(&self, mut f: impl FnMut(f64) -> f64) -> Result<f64> {
        let mut acc = 0.0;
        for part in self.parts.iter().flatten() {
            match *part {
                Part::Scaled { scale, kernel } => {
                    if scale != 0.0 {
                        acc += scale * kernel.moment(&mut f)?;
                    }
                }
                Part::Atom { size, rate } => {
                    if rate != 0.0 {
                        acc += rate * checked(size, f(size))?;
                    }
                }
            }
        }
        Ok(acc)
    }

    /// Total jump intensity of the atomic parts.
    pub fn atom_intensity(&self) -> f64 {
        self.parts
            .iter()
            .flatten()
            .map(|p| match *p {
                Part::Scaled { scale, kernel } => scale * kernel.atom_rate(),
                Part::Atom { rate, .. } => rate,
            })
            .sum()
    }

    pub fn is_atomic(&self) -> bool {
        self.parts.iter().flatten().all(|p| match p {
            Part::Scaled { kernel, scale } => kernel.is_atomic() || *scale == 0.0,
            Part::Atom { .. } => true,
        })
    }

    /// Calls `f(size, rate)` for every atom with its location-scaled rate.
    pub fn for_each_atom(&self, mut f: impl FnMut(f64, f64)) {
        for part in self.parts.iter().flatten() {
            match *part {
                Part::Scaled { scale, kernel } => {
                    for a in kernel.atoms() {
                        f(a.size, scale * a.rate);
                    }
                }
                Part::Atom { size, rate } => f(size, rate),
            }
        }
    }

    /// Picks the atom whose cumulative rate first exceeds `target`.
    pub fn pick_atom(&self, target: f64) -> Option<f64> {
        let mut acc = 0.0;
        let mut last = None;
        for part in self.parts.iter().flatten() {
            match *part {
                Part::Scaled { scale, kernel } => {
                    for a in kernel.atoms() {
                        acc += scale * a.rate;
                        if a.rate > 0.0 {
                            last = Some(a.size);
                        }
                        if acc > target {
                            return Some(a.size);
                        }
                    }
                }
                Part::Atom { size, rate } => {
                    acc += rate;
                    if rate > 0.0 {
                        last = Some(size);
                    }
                    if acc > target {
                        return Some(size);
                    }
                }
            }
        }
        last
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn single_atom_second_moment() {
        let k = LevyKernel::dirac(-1.0, 0.5).unwrap();
        assert_eq!(k.second_moment().unwrap(), 0.5);
    }

    #[test]
    fn single_atom_exp_moment() {
        let k = LevyKernel::dirac(-1.0, 1.0).unwrap();
        assert_relative_eq!(
            k.exp_moment().unwrap(),
            (-1.0f64).exp(),
            max_relative = 1e-15
        );
        // m2 / e0 = e for the unit atom at −1
        let ratio = k.second_moment().unwrap() / k.exp_moment().unwrap();
        assert_relative_eq!(ratio, core::f64::consts::E, max_relative = 1e-15);
    }

    #[test]
    fn empty_measure_integrates_to_zero() {
        let k = LevyKernel::empty();
        assert_eq!(k.moment(|z| z.exp() + 7.0).unwrap(), 0.0);
        assert_eq!(LocalKernel::empty().integrate(|z| z).unwrap(), 0.0);
    }

    #[test]
    fn rejects_bad_atoms() {
        assert!(LevyKernel::dirac(0.0, 1.0).is_err());
        assert!(LevyKernel::dirac(-1.0, -0.1).is_err());
        assert!(LevyKernel::dirac(f64::NAN, 1.0).is_err());
    }

    #[test]
    fn non_finite_integrand_names_the_node() {
        let k = LevyKernel::dirac(-2.0, 1.0).unwrap();
        let err = k.moment(|z| 1.0 / (z + 2.0)).unwrap_err();
        match err {
            Error::Domain(msg) => assert!(msg.contains("-2"), "{msg}"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn gaussian_density_moments() {
        let d = JumpDensity::new(
            DensityShape::Gaussian {
                intensity: 2.0,
                mean: -0.1,
                std: 0.2,
            },
            -2.5,
            2.3,
            128,
        )
        .unwrap();
        let k = LevyKernel::new(alloc::vec![], Some(d)).unwrap();
        // ∫ z² = λ (m² + s²), ∫ (e^z − 1 − z) = λ (e^{m + s²/2} − 1 − m)
        let (m, s, lam) = (-0.1f64, 0.2f64, 2.0);
        assert_relative_eq!(
            k.second_moment().unwrap(),
            lam * (m * m + s * s),
            max_relative = 1e-12
        );
        let e0 = lam * ((m + 0.5 * s * s).exp() - 1.0 - m);
        assert_relative_eq!(k.exp_moment().unwrap(), e0, max_relative = 1e-12);
    }

    #[test]
    fn doubling_nodes_changes_smooth_moments_below_tolerance() {
        let d = JumpDensity::new(
            DensityShape::Gaussian {
                intensity: 1.0,
                mean: 0.05,
                std: 0.3,
            },
            -3.0,
            3.0,
            128,
        )
        .unwrap();
        let k1 = LevyKernel::new(alloc::vec![], Some(d.clone())).unwrap();
        let k2 = LevyKernel::new(alloc::vec![], Some(d.with_nodes(256).unwrap())).unwrap();
        for f in [
            |z: f64| z * z,
            |z: f64| z.exp_m1() - z,
            |z: f64| (0.7 * z).cos(),
        ] {
            let a = k1.moment(f).unwrap();
            let b = k2.moment(f).unwrap();
            assert!((a - b).abs() <= 1e-9 * a.abs().max(1e-300), "{a} vs {b}");
        }
    }

    #[test]
    fn local_kernel_parts_add() {
        let nu = LevyKernel::from_atoms(&[(-0.3, 0.5), (0.2, 1.0)]).unwrap();
        let lk = LocalKernel::scaled(2.0, &nu).plus(LocalKernel::atom(-1.0, 0.25));
        let m2 = lk.integrate(|z| z * z).unwrap();
        assert_relative_eq!(m2, 2.0 * (0.045 + 0.04) + 0.25, max_relative = 1e-14);
        assert_relative_eq!(lk.atom_intensity(), 3.25, max_relative = 1e-15);
        assert_eq!(lk.pick_atom(0.5), Some(-0.3));
        assert_eq!(lk.pick_atom(2.9), Some(0.2));
        assert_eq!(lk.pick_atom(3.1), Some(-1.0));
    }
}
