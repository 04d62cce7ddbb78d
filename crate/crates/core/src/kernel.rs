//! Kernel families, their integrals, per-cell quadrature weights and tail masses.
//!
//! Every kernel is radial in one space dimension, so all integrals reduce to
//! `radial_integral(r0, r1) = ∫_{r0}^{r1} density(r) dr` and its mirror image.

use serde::{Deserialize, Serialize};

use crate::error::{config, Error, Result};
use crate::geometry::Domain;
use crate::quad;

/// Space dimension. Formulas keep the `N` exponent explicit.
pub const DIM: u32 = 1;

/// Relative tolerance for every kernel integral.
pub const QUAD_REL_TOL: f64 = 1e-13;
const QUAD_ABS_TOL: f64 = 1e-15;

/// Tabulated radial profile, linearly interpolated between table points.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadialProfile {
    radii: Vec<f64>,
    values: Vec<f64>,
    beyond: Beyond,
}

/// What a profile does past its last table point.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Beyond {
    /// Zero past the last radius (compactly supported densities).
    #[default]
    Zero,
    /// Hold the last value (coefficient profiles).
    Hold,
}

impl RadialProfile {
    /// Builds a profile from `(radius, value)` points. Radii must start at 0 and
    /// increase strictly; values must be nonnegative.
    pub fn new(points: &[[f64; 2]], beyond: Beyond) -> Result<Self> {
        if points.is_empty() {
            return config("profile table is empty");
        }
        if points[0][0] != 0.0 {
            return config("profile table must start at radius 0");
        }
        for w in points.windows(2) {
            if !(w[1][0] > w[0][0]) {
                return config("profile radii must increase strictly");
            }
        }
        if points
            .iter()
            .any(|p| !p[1].is_finite() || p[1] < 0.0 || !p[0].is_finite())
        {
            return config("profile values must be finite and nonnegative");
        }
        Ok(Self {
            radii: points.iter().map(|p| p[0]).collect(),
            values: points.iter().map(|p| p[1]).collect(),
            beyond,
        })
    }

    /// Constant profile (used for constant-coefficient families).
    pub fn constant(value: f64) -> Result<Self> {
        Self::new(&[[0.0, value]], Beyond::Hold)
    }

    pub fn points(&self) -> Vec<[f64; 2]> {
        self.radii
            .iter()
            .zip(&self.values)
            .map(|(&r, &v)| [r, v])
            .collect()
    }

    pub fn beyond(&self) -> Beyond {
        self.beyond
    }

    pub fn eval(&self, r: f64) -> f64 {
        let r = r.abs();
        let n = self.radii.len();
        let last = self.radii[n - 1];
        if r > last {
            return match self.beyond {
                Beyond::Zero => 0.0,
                Beyond::Hold => self.values[n - 1],
            };
        }
        if r == last {
            return self.values[n - 1];
        }
        // first index with radius > r
        let j = self.radii.partition_point(|&x| x <= r);
        let (r0, r1) = (self.radii[j - 1], self.radii[j]);
        let (v0, v1) = (self.values[j - 1], self.values[j]);
        v0 + (v1 - v0) * (r - r0) / (r1 - r0)
    }

    /// Smallest and largest value taken anywhere on [0, ∞).
    pub fn range(&self) -> (f64, f64) {
        let mut lo = self.values.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = self
            .values
            .iter()
            .cloned()
            .fold(f64::NEG_INFINITY, f64::max);
        if self.beyond == Beyond::Zero {
            lo = 0.0;
        }
        (lo, hi)
    }

    /// Radius past which the profile vanishes, if it does.
    pub fn support_radius(&self) -> Option<f64> {
        match self.beyond {
            Beyond::Zero => Some(*self.radii.last().unwrap()),
            Beyond::Hold => None,
        }
    }

    fn breakpoints(&self) -> &[f64] {
        &self.radii
    }
}

/// Discriminant of [`KernelSpec`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelFamily {
    ZeroOrder,
    GeneralJ,
    SingularFractional,
    RegularizedSingular,
    Anisotropic,
}

/// One of the supported kernel families together with its parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "KernelRecord", into = "KernelRecord")]
pub enum KernelSpec {
    /// `1 / (ε^{N+2σ} + |z|^{N+2σ})`.
    ZeroOrder { sigma: f64, epsilon: f64 },
    /// A general integrable radial density given by a table.
    GeneralJ { profile: RadialProfile },
    /// `|z|^{-(N+2σ)}`, the fractional Laplacian kernel.
    SingularFractional { sigma: f64 },
    /// `J(z) / min{1, |z/ε|^α}` with `α ∈ (1, 2)`.
    RegularizedSingular {
        epsilon: f64,
        alpha: f64,
        base: RadialProfile,
    },
    /// One member `a(z) K_ε(z)` of an anisotropic family with `λ₁ ≤ a ≤ λ₂`.
    Anisotropic {
        sigma: f64,
        epsilon: f64,
        coefficient: RadialProfile,
        lambda1: f64,
        lambda2: f64,
    },
}

/// Flat key/value form used in run configs.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelRecord {
    pub family: Option<KernelFamily>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda2: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub profile_table: Option<Vec<[f64; 2]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dim: Option<u32>,
}

fn need(v: Option<f64>, key: &str, family: &str) -> Result<f64> {
    v.ok_or_else(|| Error::Config(format!("kernel family {family} requires key `{key}`")))
}

impl TryFrom<KernelRecord> for KernelSpec {
    type Error = Error;

    fn try_from(r: KernelRecord) -> Result<Self> {
        if let Some(d) = r.dim {
            if d != DIM {
                return config(format!("kernel.dim = {d}: only N = {DIM} is supported"));
            }
        }
        let family = r
            .family
            .ok_or_else(|| Error::Config("kernel requires key `family`".into()))?;
        let table = |beyond| -> Result<RadialProfile> {
            let t = r
                .profile_table
                .as_ref()
                .ok_or_else(|| Error::Config("kernel requires key `profile_table`".into()))?;
            RadialProfile::new(t, beyond)
        };
        let spec = match family {
            KernelFamily::ZeroOrder => KernelSpec::ZeroOrder {
                sigma: need(r.sigma, "sigma", "zero_order")?,
                epsilon: need(r.epsilon, "epsilon", "zero_order")?,
            },
            KernelFamily::GeneralJ => KernelSpec::GeneralJ {
                profile: table(Beyond::Zero)?,
            },
            KernelFamily::SingularFractional => KernelSpec::SingularFractional {
                sigma: need(r.sigma, "sigma", "singular_fractional")?,
            },
            KernelFamily::RegularizedSingular => KernelSpec::RegularizedSingular {
                epsilon: need(r.epsilon, "epsilon", "regularized_singular")?,
                alpha: need(r.alpha, "alpha", "regularized_singular")?,
                base: table(Beyond::Zero)?,
            },
            KernelFamily::Anisotropic => KernelSpec::Anisotropic {
                sigma: need(r.sigma, "sigma", "anisotropic")?,
                epsilon: need(r.epsilon, "epsilon", "anisotropic")?,
                coefficient: table(Beyond::Hold)?,
                lambda1: need(r.lambda1, "lambda1", "anisotropic")?,
                lambda2: need(r.lambda2, "lambda2", "anisotropic")?,
            },
        };
        spec.validate()?;
        Ok(spec)
    }
}

impl From<KernelSpec> for KernelRecord {
    fn from(s: KernelSpec) -> Self {
        let mut r = KernelRecord {
            family: Some(s.family()),
            ..Default::default()
        };
        match s {
            KernelSpec::ZeroOrder { sigma, epsilon } => {
                r.sigma = Some(sigma);
                r.epsilon = Some(epsilon);
            }
            KernelSpec::GeneralJ { profile } => r.profile_table = Some(profile.points()),
            KernelSpec::SingularFractional { sigma } => r.sigma = Some(sigma),
            KernelSpec::RegularizedSingular {
                epsilon,
                alpha,
                base,
            } => {
                r.epsilon = Some(epsilon);
                r.alpha = Some(alpha);
                r.profile_table = Some(base.points());
            }
            KernelSpec::Anisotropic {
                sigma,
                epsilon,
                coefficient,
                lambda1,
                lambda2,
            } => {
                r.sigma = Some(sigma);
                r.epsilon = Some(epsilon);
                r.lambda1 = Some(lambda1);
                r.lambda2 = Some(lambda2);
                r.profile_table = Some(coefficient.points());
            }
        }
        r
    }
}

/// Integral summaries of a kernel.
#[derive(Clone, Debug)]
pub struct KernelMoments {
    spec: KernelSpec,
    /// `+∞` for non-integrable kernels.
    pub l1_norm: f64,
    /// `∫_{|z|<1} z² density`.
    pub second_moment_near_zero: f64,
}

impl KernelMoments {
    pub fn tail_mass(&self, r: f64) -> Result<f64> {
        self.spec.tail_mass(r)
    }

    /// The Lévy integrability condition `∫ min{1, z²} density < ∞`.
    pub fn levy_condition(&self) -> bool {
        self.tail_mass(1.0)
            .map(|t| (self.second_moment_near_zero + t).is_finite())
            .unwrap_or(false)
    }
}

/// Per-cell weights `w_k = ∫_{[kh-h/2, kh+h/2]} density`, stored one-sided (`w_{-k} = w_k`).
#[derive(Clone, Debug)]
pub struct CellWeights {
    pub h: f64,
    /// `weights[k]` for `k = 0..=K`. For singular kernels `weights[0]` is `+∞`
    /// and the centre cell is carried by `taylor_moment` instead.
    pub weights: Vec<f64>,
    /// `∫_0^{h/2} z² density dz`, the second moment of one half of the centre cell.
    pub taylor_moment: f64,
    /// Mass beyond the last stored cell, both sides: `∫_{|z|>(K+1/2)h} density`.
    pub tail: f64,
    pub l1_norm: f64,
}

impl CellWeights {
    pub fn reach(&self) -> usize {
        self.weights.len() - 1
    }

    pub fn weight(&self, k: isize) -> f64 {
        self.weights[k.unsigned_abs()]
    }

    /// `Σ_{|k|≤K} w_k + tail`; equals the L¹ norm for integrable kernels.
    pub fn total(&self) -> f64 {
        self.weights[0] + 2.0 * self.weights[1..].iter().sum::<f64>() + self.tail
    }
}

impl KernelSpec {
    pub fn family(&self) -> KernelFamily {
        match self {
            KernelSpec::ZeroOrder { .. } => KernelFamily::ZeroOrder,
            KernelSpec::GeneralJ { .. } => KernelFamily::GeneralJ,
            KernelSpec::SingularFractional { .. } => KernelFamily::SingularFractional,
            KernelSpec::RegularizedSingular { .. } => KernelFamily::RegularizedSingular,
            KernelSpec::Anisotropic { .. } => KernelFamily::Anisotropic,
        }
    }

    pub fn zero_order(sigma: f64, epsilon: f64) -> Result<Self> {
        let s = KernelSpec::ZeroOrder { sigma, epsilon };
        s.validate()?;
        Ok(s)
    }

    pub fn singular(sigma: f64) -> Result<Self> {
        let s = KernelSpec::SingularFractional { sigma };
        s.validate()?;
        Ok(s)
    }

    pub fn general(profile: RadialProfile) -> Result<Self> {
        let s = KernelSpec::GeneralJ { profile };
        s.validate()?;
        Ok(s)
    }

    pub fn regularized(epsilon: f64, alpha: f64, base: RadialProfile) -> Result<Self> {
        let s = KernelSpec::RegularizedSingular {
            epsilon,
            alpha,
            base,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn anisotropic(
        sigma: f64,
        epsilon: f64,
        coefficient: RadialProfile,
        lambda1: f64,
        lambda2: f64,
    ) -> Result<Self> {
        let s = KernelSpec::Anisotropic {
            sigma,
            epsilon,
            coefficient,
            lambda1,
            lambda2,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        let check_sigma = |s: f64| {
            if s > 0.0 && s < 1.0 {
                Ok(())
            } else {
                config(format!("sigma = {s} must lie in (0, 1)"))
            }
        };
        let check_eps = |e: f64| {
            if e > 0.0 && e.is_finite() {
                Ok(())
            } else {
                config(format!("epsilon = {e} must be positive"))
            }
        };
        match self {
            KernelSpec::ZeroOrder { sigma, epsilon } => {
                check_sigma(*sigma)?;
                check_eps(*epsilon)
            }
            KernelSpec::GeneralJ { profile } => {
                if profile.support_radius().is_none() {
                    return config("general_j profile must vanish beyond its last radius");
                }
                Ok(())
            }
            KernelSpec::SingularFractional { sigma } => check_sigma(*sigma),
            KernelSpec::RegularizedSingular {
                epsilon,
                alpha,
                base,
            } => {
                check_eps(*epsilon)?;
                if !(*alpha > 1.0 && *alpha < 2.0) {
                    return config(format!("alpha = {alpha} must lie in (1, 2)"));
                }
                if base.support_radius().is_none() {
                    return config(
                        "regularized_singular base profile must vanish beyond its last radius",
                    );
                }
                Ok(())
            }
            KernelSpec::Anisotropic {
                sigma,
                epsilon,
                coefficient,
                lambda1,
                lambda2,
            } => {
                check_sigma(*sigma)?;
                check_eps(*epsilon)?;
                if !(*lambda1 > 0.0 && lambda1 <= lambda2) {
                    return config(format!(
                        "need 0 < lambda1 ≤ lambda2, got {lambda1}, {lambda2}"
                    ));
                }
                let (lo, hi) = coefficient.range();
                if lo < *lambda1 || hi > *lambda2 {
                    return config(format!(
                        "coefficient range [{lo}, {hi}] violates ellipticity bounds [{lambda1}, {lambda2}]"
                    ));
                }
                Ok(())
            }
        }
    }

    pub fn sigma(&self) -> Option<f64> {
        match self {
            KernelSpec::ZeroOrder { sigma, .. }
            | KernelSpec::SingularFractional { sigma }
            | KernelSpec::Anisotropic { sigma, .. } => Some(*sigma),
            _ => None,
        }
    }

    pub fn epsilon(&self) -> Option<f64> {
        match self {
            KernelSpec::ZeroOrder { epsilon, .. }
            | KernelSpec::RegularizedSingular { epsilon, .. }
            | KernelSpec::Anisotropic { epsilon, .. } => Some(*epsilon),
            _ => None,
        }
    }

    /// True when the density is not integrable at the origin.
    pub fn is_singular(&self) -> bool {
        matches!(
            self,
            KernelSpec::SingularFractional { .. } | KernelSpec::RegularizedSingular { .. }
        )
    }

    /// Density at radius `r ≥ 0`, no domain checks.
    pub(crate) fn density(&self, r: f64) -> f64 {
        let n = DIM as f64;
        match self {
            KernelSpec::ZeroOrder { sigma, epsilon } => {
                let p = n + 2.0 * sigma;
                1.0 / (epsilon.powf(p) + r.powf(p))
            }
            KernelSpec::GeneralJ { profile } => profile.eval(r),
            KernelSpec::SingularFractional { sigma } => r.powf(-(n + 2.0 * sigma)),
            KernelSpec::RegularizedSingular {
                epsilon,
                alpha,
                base,
            } => {
                let j = base.eval(r);
                if j == 0.0 {
                    return 0.0;
                }
                j / (r / epsilon).powf(*alpha).min(1.0)
            }
            KernelSpec::Anisotropic {
                sigma,
                epsilon,
                coefficient,
                ..
            } => {
                let p = n + 2.0 * sigma;
                coefficient.eval(r) / (epsilon.powf(p) + r.powf(p))
            }
        }
    }

    /// Evaluates the kernel density at `z`.
    pub fn eval(&self, z: f64) -> Result<f64> {
        if z == 0.0 && self.is_singular() {
            return Err(Error::Domain("singular kernel evaluated at z = 0".into()));
        }
        Ok(self.density(z.abs()))
    }

    /// Radii where the density has a kink or changes regime.
    fn breakpoints(&self) -> Vec<f64> {
        let mut b = match self {
            KernelSpec::ZeroOrder { epsilon, .. } => vec![*epsilon, 1.0],
            KernelSpec::GeneralJ { profile } => profile.breakpoints().to_vec(),
            KernelSpec::SingularFractional { .. } => vec![1.0],
            KernelSpec::RegularizedSingular { epsilon, base, .. } => {
                let mut v = base.breakpoints().to_vec();
                v.push(*epsilon);
                v
            }
            KernelSpec::Anisotropic {
                epsilon,
                coefficient,
                ..
            } => {
                let mut v = coefficient.breakpoints().to_vec();
                v.push(*epsilon);
                v.push(1.0);
                v
            }
        };
        b.retain(|&r| r > 0.0);
        b.sort_by(|a, c| a.partial_cmp(c).unwrap());
        b.dedup();
        b
    }

    fn support_radius(&self) -> Option<f64> {
        match self {
            KernelSpec::GeneralJ { profile } => profile.support_radius(),
            KernelSpec::RegularizedSingular { base, .. } => base.support_radius(),
            _ => None,
        }
    }

    /// Exponent `p` of the far-field decay `density ~ r^{-(1+p)}`.
    fn decay_exponent(&self) -> f64 {
        self.sigma().map(|s| 2.0 * s).unwrap_or(1.0)
    }

    /// `∫_{r0}^{r1} density(r) dr` for `0 ≤ r0 ≤ r1 ≤ ∞`.
    pub fn radial_integral(&self, r0: f64, r1: f64) -> f64 {
        assert!(r0 >= 0.0 && r1 >= r0, "bad radial range [{r0}, {r1}]");
        if r1 == r0 {
            return 0.0;
        }
        if let KernelSpec::SingularFractional { sigma } = self {
            let p = 2.0 * sigma;
            if r0 == 0.0 {
                return f64::INFINITY;
            }
            let hi = if r1.is_infinite() { 0.0 } else { r1.powf(-p) };
            return (r0.powf(-p) - hi) / p;
        }
        if r0 == 0.0 && matches!(self, KernelSpec::RegularizedSingular { .. }) {
            return f64::INFINITY;
        }
        let (r1, tail_from) = match self.support_radius() {
            Some(s) => (r1.min(s), None),
            None if r1.is_infinite() => {
                let last = self.breakpoints().last().copied().unwrap_or(1.0).max(r0);
                (last, Some(last))
            }
            None => (r1, None),
        };
        let mut total = 0.0;
        if r1 > r0 {
            let mut pts = vec![r0];
            pts.extend(self.breakpoints().into_iter().filter(|&b| b > r0 && b < r1));
            pts.push(r1);
            let f = |r: f64| self.density(r);
            total += quad::integrate_pieces(&f, &pts, QUAD_REL_TOL, QUAD_ABS_TOL);
        }
        if let Some(t) = tail_from {
            let f = |r: f64| self.density(r);
            let p = self.decay_exponent();
            total +=
                quad::integrate_tail(&f, t.max(f64::MIN_POSITIVE), p, QUAD_REL_TOL, QUAD_ABS_TOL);
        }
        total
    }

    /// `∫_{ℝ} density`; `+∞` for singular kernels.
    pub fn l1_norm(&self) -> f64 {
        if self.is_singular() {
            return f64::INFINITY;
        }
        2.0 * self.radial_integral(0.0, f64::INFINITY)
    }

    /// `∫_{|z|>R} density`.
    pub fn tail_mass(&self, r: f64) -> Result<f64> {
        if !(r > 0.0) {
            return config(format!("tail radius R = {r} must be positive"));
        }
        Ok(2.0 * self.radial_integral(r, f64::INFINITY))
    }

    /// `∫_0^{r} z² density dz`.
    pub fn taylor_moment(&self, r: f64) -> f64 {
        if let KernelSpec::SingularFractional { sigma } = self {
            let e = 2.0 - 2.0 * sigma;
            return r.powf(e) / e;
        }
        let mut pts = vec![0.0];
        pts.extend(self.breakpoints().into_iter().filter(|&b| b < r));
        pts.push(r);
        let f = |z: f64| z * z * self.density(z);
        quad::integrate_pieces(&f, &pts, QUAD_REL_TOL, QUAD_ABS_TOL)
    }

    pub fn moments(&self) -> KernelMoments {
        KernelMoments {
            spec: self.clone(),
            l1_norm: self.l1_norm(),
            second_moment_near_zero: 2.0 * self.taylor_moment(1.0),
        }
    }

    /// Cell quadrature weights for spacing `h` out to `reach` cells.
    pub fn cell_weights(&self, h: f64, reach: usize) -> Result<CellWeights> {
        if !(h > 0.0 && h.is_finite()) {
            return config(format!("grid spacing h = {h} must be positive"));
        }
        if let KernelSpec::ZeroOrder { epsilon, .. } = self {
            if h > epsilon / 4.0 * (1.0 + 1e-12) {
                return config(format!(
                    "h = {h} exceeds epsilon/4 = {}: the kernel peak is unresolved",
                    epsilon / 4.0
                ));
            }
        }
        if reach == 0 {
            return config("cell reach K must be at least 1");
        }
        let mut weights = Vec::with_capacity(reach + 1);
        weights.push(if self.is_singular() {
            f64::INFINITY
        } else {
            2.0 * self.radial_integral(0.0, 0.5 * h)
        });
        for k in 1..=reach {
            let k = k as f64;
            weights.push(self.radial_integral((k - 0.5) * h, (k + 0.5) * h));
        }
        let tail = 2.0 * self.radial_integral((reach as f64 + 0.5) * h, f64::INFINITY);
        Ok(CellWeights {
            h,
            weights,
            taylor_moment: self.taylor_moment(0.5 * h),
            tail,
            l1_norm: self.l1_norm(),
        })
    }

    /// `∫_{lo}^{hi} density` over a signed interval.
    pub fn signed_integral(&self, lo: f64, hi: f64) -> f64 {
        if hi <= lo {
            return 0.0;
        }
        if lo >= 0.0 {
            self.radial_integral(lo, hi)
        } else if hi <= 0.0 {
            self.radial_integral(-hi, -lo)
        } else {
            self.radial_integral(0.0, -lo) + self.radial_integral(0.0, hi)
        }
    }

    /// Mass the point `x` sees outside the domain: `∫_{Ω^c - x} density`.
    pub fn exterior_mass(&self, domain: &Domain, x: f64) -> f64 {
        let iv = domain.intervals();
        let (first, last) = (iv[0].0, iv[iv.len() - 1].1);
        let mut m = self.signed_integral(f64::NEG_INFINITY, first - x);
        m += self.signed_integral(last - x, f64::INFINITY);
        for w in iv.windows(2) {
            m += self.signed_integral(w[0].1 - x, w[1].0 - x);
        }
        m
    }

    /// `inf_{x ∈ Ω̄} ∫_{Ω^c - x} density`, the exterior-mass lower bound ν₀.
    pub fn nu0_lower_bound(&self, domain: &Domain) -> Result<f64> {
        if self.is_singular() {
            return config("nu0 is defined for integrable kernels only");
        }
        const SAMPLES: usize = 512;
        let mut best = f64::INFINITY;
        for &(a, b) in domain.intervals() {
            let xs: Vec<f64> = (0..=SAMPLES)
                .map(|i| a + (b - a) * i as f64 / SAMPLES as f64)
                .collect();
            let vals: Vec<f64> = xs.iter().map(|&x| self.exterior_mass(domain, x)).collect();
            let (imin, &vmin) = vals
                .iter()
                .enumerate()
                .min_by(|p, q| p.1.partial_cmp(q.1).unwrap())
                .unwrap();
            best = best.min(vmin);
            let lo = xs[imin.saturating_sub(1)];
            let hi = xs[(imin + 1).min(SAMPLES)];
            best = best.min(golden_min(|x| self.exterior_mass(domain, x), lo, hi));
        }
        if !(best > 0.0) {
            return Err(Error::Consistency(format!(
                "exterior mass lower bound {best} is not positive for this kernel and domain"
            )));
        }
        Ok(best)
    }
}

fn golden_min<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64) -> f64 {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..80 {
        if (b - a).abs() < 1e-12 {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    fc.min(fd)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn k(sigma: f64, eps: f64) -> KernelSpec {
        KernelSpec::zero_order(sigma, eps).unwrap()
    }

    #[test]
    fn eval_examples() {
        assert_eq!(k(0.5, 1.0).eval(0.0).unwrap(), 1.0);
        assert_eq!(k(0.5, 1.0).eval(1.0).unwrap(), 0.5);
        assert!((k(0.5, 0.5).eval(0.25).unwrap() - 3.2).abs() < 1e-14);
        assert!(KernelSpec::singular(0.5).unwrap().eval(0.0).is_err());
    }

    #[test]
    fn scaling_identity() {
        for &eps in &[1.0, 0.5, 0.25, 0.1] {
            for &s in &[0.2, 0.5, 0.8] {
                let ke = k(s, eps);
                let k1 = k(s, 1.0);
                for &z in &[0.0, 0.01, 0.3, 1.7, 20.0] {
                    let lhs = ke.eval(z).unwrap();
                    let rhs = eps.powf(-(1.0 + 2.0 * s)) * k1.eval(z / eps).unwrap();
                    assert!((lhs - rhs).abs() <= 1e-13 * lhs, "eps {eps} s {s} z {z}");
                }
            }
        }
    }

    #[test]
    fn l1_norm_examples() {
        assert!((k(0.5, 1.0).l1_norm() - PI).abs() < 1e-10);
        assert!((k(0.5, 0.5).l1_norm() - 2.0 * PI).abs() < 1e-10);
        assert!(KernelSpec::singular(0.5).unwrap().l1_norm().is_infinite());
    }

    #[test]
    fn l1_scaling_in_epsilon() {
        for &s in &[0.25, 0.5, 0.75] {
            let c = k(s, 1.0).l1_norm();
            for &eps in &[0.5, 0.25, 0.1] {
                let v = k(s, eps).l1_norm() * eps.powf(2.0 * s);
                assert!((v - c).abs() <= 1e-6 * c, "sigma {s} eps {eps}: {v} vs {c}");
            }
        }
    }

    #[test]
    fn tail_mass_examples() {
        let t = KernelSpec::singular(0.5).unwrap().tail_mass(1.0).unwrap();
        assert!((t - 2.0).abs() < 1e-14);
        let t = k(0.5, 1.0).tail_mass(1.0).unwrap();
        assert!((t - PI / 2.0).abs() < 1e-8 * PI);
        let spec = k(0.3, 0.2);
        let mut prev = f64::INFINITY;
        for r in [0.1, 0.5, 1.0, 5.0, 50.0, 500.0] {
            let t = spec.tail_mass(r).unwrap();
            assert!(t < prev);
            prev = t;
        }
        // far tail approaches 2 r^{-2σ} / (2σ)
        let far = 2.0 * 500f64.powf(-0.6) / 0.6;
        assert!((prev - far).abs() < 1e-2 * far);
        assert!(spec.tail_mass(0.0).is_err());
    }

    #[test]
    fn indicator_cell_weights() {
        // J = 1 on |z| < 1: cells [-0.25, 0.25], [0.25, 0.75], [0.75, 1.25]
        let j = KernelSpec::general(
            RadialProfile::new(&[[0.0, 1.0], [1.0, 1.0]], Beyond::Zero).unwrap(),
        )
        .unwrap();
        let w = j.cell_weights(0.5, 2).unwrap();
        assert!((w.weights[0] - 0.5).abs() < 1e-14);
        assert!((w.weights[1] - 0.5).abs() < 1e-14);
        assert!((w.weights[2] - 0.25).abs() < 1e-14);
        assert!(w.tail.abs() < 1e-14);
        assert!((w.total() - 2.0).abs() < 1e-13);
    }

    #[test]
    fn partition_of_mass() {
        let base = RadialProfile::new(&[[0.0, 1.0], [1.0, 1.0], [2.0, 0.0]], Beyond::Zero).unwrap();
        let coef = RadialProfile::new(&[[0.0, 1.0], [0.3, 2.0], [1.0, 1.5]], Beyond::Hold).unwrap();
        let specs = [
            k(0.5, 1.0),
            k(0.3, 0.2),
            k(0.8, 0.1),
            KernelSpec::general(base).unwrap(),
            KernelSpec::anisotropic(0.5, 0.2, coef, 1.0, 2.0).unwrap(),
        ];
        for spec in &specs {
            let h = spec.epsilon().map(|e| e / 4.0).unwrap_or(0.1);
            let w = spec.cell_weights(h, (3.0 / h) as usize).unwrap();
            let l1 = spec.l1_norm();
            assert!(
                (w.total() - l1).abs() <= 1e-8 * l1,
                "{spec:?}: {} vs {l1}",
                w.total()
            );
            assert_eq!(w.weight(-3), w.weight(3));
        }
    }

    #[test]
    fn cell_weights_reject_coarse_grid() {
        assert!(matches!(
            k(0.5, 0.2).cell_weights(0.06, 10),
            Err(Error::Config(_))
        ));
        assert!(k(0.5, 0.2).cell_weights(0.05, 10).is_ok());
    }

    #[test]
    fn singular_weights_closed_form() {
        let s = KernelSpec::singular(0.5).unwrap();
        let w = s.cell_weights(0.1, 20).unwrap();
        // ∫_{0.05}^{0.15} z^{-2} = 1/0.05 - 1/0.15
        assert!((w.weights[1] - (20.0 - 1.0 / 0.15)).abs() < 1e-12);
        assert!(w.weights[0].is_infinite());
        assert!((w.tail - 2.0 / 2.05).abs() < 1e-12);
        assert!((w.taylor_moment - 0.05).abs() < 1e-15);
    }

    #[test]
    fn domination_by_fractional_kernel() {
        let f = KernelSpec::singular(0.4).unwrap();
        let z = k(0.4, 0.3);
        for i in 1..200 {
            let x = i as f64 * 0.037;
            assert!(z.eval(x).unwrap() <= f.eval(x).unwrap());
        }
    }

    #[test]
    fn regularized_density_matches_definition() {
        let base = RadialProfile::new(&[[0.0, 1.0], [1.0, 1.0], [2.0, 0.0]], Beyond::Zero).unwrap();
        let r = KernelSpec::regularized(0.2, 1.5, base.clone()).unwrap();
        for &z in &[0.01, 0.1, 0.2, 0.5, 1.5, 3.0] {
            let expected = base.eval(z) / (z / 0.2f64).powf(1.5).min(1.0);
            assert!((r.eval(z).unwrap() - expected).abs() < 1e-14);
            assert_eq!(r.eval(z).unwrap(), r.eval(-z).unwrap());
        }
        assert!(r.l1_norm().is_infinite());
        assert!(KernelSpec::regularized(0.2, 2.5, base).is_err());
    }

    #[test]
    fn anisotropic_bounds_enforced() {
        let coef = RadialProfile::new(&[[0.0, 0.5], [1.0, 3.0]], Beyond::Hold).unwrap();
        assert!(KernelSpec::anisotropic(0.5, 0.2, coef, 1.0, 2.0).is_err());
    }

    #[test]
    fn moments_and_levy_condition() {
        for spec in [k(0.5, 0.2), KernelSpec::singular(0.7).unwrap()] {
            let m = spec.moments();
            assert!(m.levy_condition());
            if !spec.is_singular() {
                assert!((m.tail_mass(1e-9).unwrap() - m.l1_norm).abs() < 1e-6 * m.l1_norm);
            }
        }
        // ∫_{|z|<1} z² |z|^{-2} = 2
        let m = KernelSpec::singular(0.5).unwrap().moments();
        assert!((m.second_moment_near_zero - 2.0).abs() < 1e-14);
    }

    #[test]
    fn nu0_examples() {
        let omega = Domain::new(vec![(-1.0, 1.0)]).unwrap();
        let v = k(0.5, 1.0).nu0_lower_bound(&omega).unwrap();
        assert!((v - PI / 2.0).abs() < 1e-9, "{v}");
        // an indicator of radius 1 sees no exterior mass from the centre
        let j = KernelSpec::general(
            RadialProfile::new(&[[0.0, 1.0], [1.0, 1.0]], Beyond::Zero).unwrap(),
        )
        .unwrap();
        assert!(matches!(
            j.nu0_lower_bound(&omega),
            Err(Error::Consistency(_))
        ));
        // tiny domain: almost all mass is exterior
        let tiny = Domain::new(vec![(0.0, 1e-6)]).unwrap();
        let s = k(0.5, 1.0);
        assert!((s.nu0_lower_bound(&tiny).unwrap() - s.l1_norm()).abs() < 1e-5);
    }
}
