//! Collision kernels: velocity cross-section, angular measure, spatial rate.
//!
//! The collision rate of a pair `(r, v)`, `(q, u)` factorizes as
//! `sigma(|v - u|) * beta(r - q) * Q(d theta) d xi`, with `d xi` the surface
//! measure of the unit sphere of R^{d-1}.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::quadrature;
use crate::vector::Vector;

/// Absolute tolerance of the quadrature fallback.
pub const QUADRATURE_TOL: f64 = 1e-10;

/// Surface area of the unit sphere `S^k` in R^{k+1}.
pub fn sphere_area(k: usize) -> f64 {
    match k {
        0 => 2.0,
        1 => 2.0 * PI,
        _ => 2.0 * PI / (k as f64 - 1.0) * sphere_area(k - 2),
    }
}

/// Uniform draw from the unit sphere of R^{d-1}.
pub fn sample_xi<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Vector {
    assert!(d >= 3, "velocity dimension must be at least 3");
    loop {
        let mut xi = Vector::zeros(d - 1);
        for c in xi.as_mut_slice() {
            *c = rng.sample(StandardNormal);
        }
        let n = xi.norm();
        if n > 1e-12 {
            return xi * (1.0 / n);
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SigmaForm {
    /// `|z|^gamma`
    Power,
    /// `(1 + |z|^2)^{gamma/2}`
    Tempered,
}

/// Velocity cross-section.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrossSection {
    gamma: f64,
    form: SigmaForm,
    c_sigma: f64,
}

impl CrossSection {
    /// `gamma` must lie in `(-dim, 2]`.
    pub fn new(gamma: f64, form: SigmaForm, dim: usize) -> Result<Self> {
        if !(gamma > -(dim as f64) && gamma <= 2.0) {
            return Err(Error::InvalidArgument(format!(
                "sigma exponent {gamma} outside (-{dim}, 2]"
            )));
        }
        Ok(CrossSection {
            gamma,
            form,
            c_sigma: 1.0,
        })
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn form(&self) -> SigmaForm {
        self.form
    }

    /// Constant in the growth and Lipschitz bounds; both built-in forms
    /// satisfy them with `c_sigma = 1`.
    pub fn c_sigma(&self) -> f64 {
        self.c_sigma
    }

    /// `sigma(z)` for a relative speed `z >= 0`.
    pub fn eval(&self, z: f64) -> Result<f64> {
        if !(z >= 0.0) {
            return Err(Error::InvalidArgument(format!("speed {z} must be >= 0")));
        }
        match self.form {
            SigmaForm::Power => {
                if z == 0.0 && self.gamma < 0.0 {
                    return Err(Error::SingularInput(
                        "power-form sigma with gamma < 0 is singular at z = 0".into(),
                    ));
                }
                Ok(if self.gamma == 0.0 { 1.0 } else { z.powf(self.gamma) })
            }
            SigmaForm::Tempered => Ok((1.0 + z * z).powf(0.5 * self.gamma)),
        }
    }

    /// `sigma(max(z, z_min))` for singular kernels, with a flag telling
    /// whether the cap was active. Non-singular kernels ignore `z_min`.
    pub fn eval_capped(&self, z: f64, z_min: f64) -> (f64, bool) {
        let singular = self.form == SigmaForm::Power && self.gamma < 0.0;
        if singular && z < z_min {
            (z_min.powf(self.gamma), true)
        } else {
            (self.eval(z).unwrap_or(f64::INFINITY), false)
        }
    }

    /// Supremum of the capped cross-section over speeds in `[0, z_max]`.
    pub fn sup_capped(&self, z_max: f64, z_min: f64) -> f64 {
        if self.gamma > 0.0 {
            self.eval(z_max).unwrap_or(f64::INFINITY)
        } else if self.gamma == 0.0 {
            1.0
        } else {
            match self.form {
                SigmaForm::Power => z_min.powf(self.gamma),
                SigmaForm::Tempered => 1.0,
            }
        }
    }
}

/// Shape of the angular density `b(theta)`.
#[derive(Debug, Clone, PartialEq)]
pub enum AngularKind {
    /// `b(theta) = theta^{-1-nu}`, `0 < nu < 2`.
    LongRange { nu: f64 },
    /// `b(theta) = sin(theta/2) cos(theta/2)`.
    HardSphere,
    /// Piecewise-linear density through `(theta_k, b_k)`, zero outside the
    /// tabulated range.
    Table { thetas: Vec<f64>, densities: Vec<f64> },
}

/// Angular measure `Q(d theta) = b(theta) d theta` restricted to
/// `theta > cutoff_eps`.
#[derive(Debug, Clone, PartialEq)]
pub struct AngularMeasure {
    kind: AngularKind,
    cutoff_eps: f64,
}

impl AngularMeasure {
    pub fn new(kind: AngularKind, cutoff_eps: f64) -> Result<Self> {
        if !(0.0..PI).contains(&cutoff_eps) {
            return Err(Error::InvalidArgument(format!(
                "cutoff {cutoff_eps} outside [0, pi)"
            )));
        }
        match &kind {
            AngularKind::LongRange { nu } => {
                if !(*nu > 0.0 && *nu < 2.0) {
                    return Err(Error::InvalidArgument(format!("nu = {nu} outside (0, 2)")));
                }
            }
            AngularKind::HardSphere => {}
            AngularKind::Table { thetas, densities } => {
                if thetas.len() < 2 || thetas.len() != densities.len() {
                    return Err(Error::InvalidArgument(
                        "angular table needs >= 2 nodes and matching densities".into(),
                    ));
                }
                let increasing = thetas.windows(2).all(|w| w[0] < w[1]);
                if !increasing || thetas[0] <= 0.0 || thetas[thetas.len() - 1] > PI {
                    return Err(Error::InvalidArgument(
                        "table angles must increase strictly within (0, pi]".into(),
                    ));
                }
                if densities.iter().any(|b| !(*b >= 0.0) || !b.is_finite()) {
                    return Err(Error::InvalidArgument(
                        "table densities must be finite and >= 0".into(),
                    ));
                }
            }
        }
        Ok(AngularMeasure { kind, cutoff_eps })
    }

    pub fn long_range(nu: f64, cutoff_eps: f64) -> Result<Self> {
        Self::new(AngularKind::LongRange { nu }, cutoff_eps)
    }

    pub fn hard_sphere(cutoff_eps: f64) -> Result<Self> {
        Self::new(AngularKind::HardSphere, cutoff_eps)
    }

    pub fn kind(&self) -> &AngularKind {
        &self.kind
    }

    pub fn cutoff_eps(&self) -> f64 {
        self.cutoff_eps
    }

    /// Density `b(theta)`; zero at and below the cutoff.
    pub fn density(&self, theta: f64) -> f64 {
        if theta <= self.cutoff_eps || theta > PI {
            return 0.0;
        }
        match &self.kind {
            AngularKind::LongRange { nu } => theta.powf(-1.0 - nu),
            AngularKind::HardSphere => 0.5 * theta.sin(),
            AngularKind::Table { thetas, densities } => table_density(thetas, densities, theta),
        }
    }

    /// `kappa = int theta Q(d theta)`, in closed form where available.
    pub fn kappa(&self) -> Result<f64> {
        let eps = self.cutoff_eps;
        match &self.kind {
            AngularKind::LongRange { nu } => {
                let nu = *nu;
                if eps == 0.0 && nu >= 1.0 {
                    return Err(Error::DivergentMeasure(format!(
                        "int theta^(-nu) diverges at 0 for nu = {nu} without cutoff"
                    )));
                }
                if nu == 1.0 {
                    Ok((PI / eps).ln())
                } else {
                    Ok((PI.powf(1.0 - nu) - eps.powf(1.0 - nu)) / (1.0 - nu))
                }
            }
            // int theta sin(theta)/2 = (sin t - t cos t)/2
            AngularKind::HardSphere => {
                let anti = |t: f64| 0.5 * (t.sin() - t * t.cos());
                Ok(anti(PI) - anti(eps))
            }
            AngularKind::Table { .. } => self.kappa_by_quadrature(),
        }
    }

    /// `kappa` by adaptive quadrature, independent of the closed forms.
    pub fn kappa_by_quadrature(&self) -> Result<f64> {
        if let AngularKind::LongRange { nu } = self.kind {
            if self.cutoff_eps == 0.0 && nu >= 1.0 {
                return Err(Error::DivergentMeasure(format!(
                    "int theta^(-nu) diverges at 0 for nu = {nu} without cutoff"
                )));
            }
        }
        self.integrate(|t| t * self.density(t))
    }

    /// Total mass `int_{theta > eps} Q(d theta)`.
    pub fn mass(&self) -> Result<f64> {
        let eps = self.cutoff_eps;
        match &self.kind {
            AngularKind::LongRange { nu } => {
                if eps == 0.0 {
                    return Err(Error::NonNormalizable(
                        "long-range angular measure has infinite mass without cutoff".into(),
                    ));
                }
                Ok((eps.powf(-nu) - PI.powf(-nu)) / nu)
            }
            AngularKind::HardSphere => Ok(0.5 * (1.0 + eps.cos())),
            AngularKind::Table { .. } => Ok(*self.table_cdf()?.1.last().unwrap_or(&0.0)),
        }
    }

    /// `int sin^2(theta/2) Q(d theta)` over the truncated measure.
    pub fn sin2_moment(&self) -> Result<f64> {
        match &self.kind {
            AngularKind::HardSphere => {
                let s = (0.5 * self.cutoff_eps).sin();
                Ok(0.5 * (1.0 - s.powi(4)))
            }
            _ => self.integrate(|t| {
                let s = (0.5 * t).sin();
                s * s * self.density(t)
            }),
        }
    }

    /// Cumulative distribution of the normalized truncated measure.
    pub fn cdf(&self, theta: f64) -> Result<f64> {
        let eps = self.cutoff_eps;
        if theta <= eps {
            return Ok(0.0);
        }
        if theta >= PI {
            return Ok(1.0);
        }
        match &self.kind {
            AngularKind::LongRange { nu } => {
                let mass = self.mass()?;
                Ok((eps.powf(-nu) - theta.powf(-nu)) / nu / mass)
            }
            AngularKind::HardSphere => Ok((eps.cos() - theta.cos()) / (1.0 + eps.cos())),
            AngularKind::Table { .. } => {
                let (nodes, cum) = self.table_cdf()?;
                let total = *cum.last().unwrap_or(&0.0);
                let k = nodes.partition_point(|&t| t <= theta);
                if k == 0 {
                    return Ok(0.0);
                }
                if k >= nodes.len() {
                    return Ok(1.0);
                }
                let w = (theta - nodes[k - 1]) / (nodes[k] - nodes[k - 1]);
                Ok((cum[k - 1] + w * (cum[k] - cum[k - 1])) / total)
            }
        }
    }

    /// Draw `theta` in `(eps, pi]` from the normalized truncated measure by
    /// inverting its distribution function.
    pub fn sample_theta<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<f64> {
        let eps = self.cutoff_eps;
        // U in (0, 1]
        let u = 1.0 - rng.random::<f64>();
        let theta = match &self.kind {
            AngularKind::LongRange { nu } => {
                if eps == 0.0 {
                    return Err(Error::NonNormalizable(
                        "long-range sampling requires a positive cutoff".into(),
                    ));
                }
                let lo = eps.powf(-nu);
                let hi = PI.powf(-nu);
                (lo - u * (lo - hi)).powf(-1.0 / nu)
            }
            AngularKind::HardSphere => {
                let c = eps.cos();
                (c - u * (1.0 + c)).clamp(-1.0, 1.0).acos()
            }
            AngularKind::Table { .. } => {
                let (nodes, cum) = self.table_cdf()?;
                let target = u * cum[cum.len() - 1];
                let k = cum.partition_point(|&c| c < target).clamp(1, cum.len() - 1);
                let span = cum[k] - cum[k - 1];
                let w = if span > 0.0 { (target - cum[k - 1]) / span } else { 1.0 };
                nodes[k - 1] + w * (nodes[k] - nodes[k - 1])
            }
        };
        Ok(theta.clamp(f64::MIN_POSITIVE.max(eps), PI).max(next_up(eps)))
    }

    fn integrate<F: Fn(f64) -> f64>(&self, f: F) -> Result<f64> {
        let mut total = 0.0;
        let mut lo = self.cutoff_eps;
        // Split at table nodes so the piecewise-linear kinks are resolved.
        if let AngularKind::Table { thetas, .. } = &self.kind {
            for &t in thetas {
                if t > lo {
                    total += quadrature::integrate(&f, lo, t, QUADRATURE_TOL)?.value;
                    lo = t;
                }
            }
        }
        total += quadrature::integrate(&f, lo, PI, QUADRATURE_TOL)?.value;
        Ok(total)
    }

    /// Nodes above the cutoff and the cumulative mass at each node.
    fn table_cdf(&self) -> Result<(Vec<f64>, Vec<f64>)> {
        let AngularKind::Table { thetas, densities } = &self.kind else {
            return Err(Error::InvalidArgument("not a tabulated measure".into()));
        };
        let eps = self.cutoff_eps;
        let mut nodes = Vec::with_capacity(thetas.len() + 1);
        let mut values = Vec::with_capacity(thetas.len() + 1);
        if eps > thetas[0] && eps < thetas[thetas.len() - 1] {
            nodes.push(eps);
            values.push(table_density(thetas, densities, eps));
        }
        for (&t, &b) in thetas.iter().zip(densities) {
            if t > eps {
                nodes.push(t);
                values.push(b);
            }
        }
        if nodes.len() < 2 {
            return Err(Error::NonNormalizable(
                "cutoff leaves less than one table cell".into(),
            ));
        }
        let mut cum = vec![0.0; nodes.len()];
        for k in 1..nodes.len() {
            cum[k] = cum[k - 1] + 0.5 * (values[k] + values[k - 1]) * (nodes[k] - nodes[k - 1]);
        }
        if !(cum[cum.len() - 1] > 0.0) {
            return Err(Error::NonNormalizable("table has zero mass above cutoff".into()));
        }
        Ok((nodes, cum))
    }
}

fn next_up(x: f64) -> f64 {
    if x == 0.0 {
        f64::MIN_POSITIVE
    } else {
        f64::from_bits(x.to_bits() + 1)
    }
}

fn table_density(thetas: &[f64], densities: &[f64], theta: f64) -> f64 {
    let n = thetas.len();
    if theta < thetas[0] || theta > thetas[n - 1] {
        return 0.0;
    }
    let k = thetas.partition_point(|&t| t <= theta);
    if k >= n {
        return densities[n - 1];
    }
    let w = (theta - thetas[k - 1]) / (thetas[k] - thetas[k - 1]);
    densities[k - 1] + w * (densities[k] - densities[k - 1])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BetaProfile {
    /// `(1 - (|x|/rho)^2)^2` inside the ball of radius `rho`, zero outside.
    Bump,
    /// `beta = 1` everywhere; a test surrogate for an infinite support.
    Constant,
}

/// Spatial collision rate `beta`, symmetric and bounded by 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpatialRate {
    rho: f64,
    profile: BetaProfile,
}

impl SpatialRate {
    pub fn new(rho: f64, profile: BetaProfile) -> Result<Self> {
        if !(rho > 0.0) {
            return Err(Error::InvalidArgument(format!("support radius {rho} must be > 0")));
        }
        Ok(SpatialRate { rho, profile })
    }

    pub fn bump(rho: f64) -> Result<Self> {
        Self::new(rho, BetaProfile::Bump)
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn profile(&self) -> BetaProfile {
        self.profile
    }

    /// Support radius, `None` for the constant surrogate.
    pub fn support_radius(&self) -> Option<f64> {
        match self.profile {
            BetaProfile::Bump => Some(self.rho),
            BetaProfile::Constant => None,
        }
    }

    /// `beta(x)` for a displacement `x = r - q`.
    pub fn eval(&self, x: &Vector) -> f64 {
        self.eval_sq(x.norm_sq())
    }

    /// `beta` as a function of `|x|^2`.
    pub fn eval_sq(&self, dist_sq: f64) -> f64 {
        match self.profile {
            BetaProfile::Constant => 1.0,
            BetaProfile::Bump => {
                let s = dist_sq / (self.rho * self.rho);
                if s >= 1.0 {
                    0.0
                } else {
                    (1.0 - s) * (1.0 - s)
                }
            }
        }
    }
}

/// Interaction regime of an inverse-power potential.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    VerySoft,
    Soft,
    Maxwellian,
    Hard,
}

/// Kernel exponents of the potential `|x|^{1-s}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PotentialExponents {
    pub s: f64,
    pub gamma: f64,
    pub nu: f64,
    pub regime: Regime,
}

/// `gamma = (s - 5)/(s - 1)`, `nu = 2/(s - 1)` for `s > 2`.
pub fn exponents_from_s(s: f64) -> Result<PotentialExponents> {
    if !(s > 2.0) || !s.is_finite() {
        return Err(Error::InvalidArgument(format!("potential exponent s = {s} must exceed 2")));
    }
    let regime = if s <= 3.0 {
        Regime::VerySoft
    } else if s < 5.0 {
        Regime::Soft
    } else if s == 5.0 {
        Regime::Maxwellian
    } else {
        Regime::Hard
    };
    Ok(PotentialExponents {
        s,
        gamma: (s - 5.0) / (s - 1.0),
        nu: 2.0 / (s - 1.0),
        regime,
    })
}

/// Cross-section, angular measure and spatial rate of one simulation,
/// with the truncated angular integrals precomputed.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelSpec {
    sigma: CrossSection,
    angular: AngularMeasure,
    beta: SpatialRate,
    z_min: f64,
    dim: usize,
    angular_mass: f64,
    sin2_moment: f64,
}

impl KernelSpec {
    /// `z_min` is the speed below which singular cross-sections are capped.
    pub fn new(
        dim: usize,
        sigma: CrossSection,
        angular: AngularMeasure,
        beta: SpatialRate,
        z_min: f64,
    ) -> Result<Self> {
        if dim < 3 || dim > crate::vector::MAX_DIM {
            return Err(Error::InvalidArgument(format!("dimension {dim} outside 3..=8")));
        }
        if !(z_min > 0.0) {
            return Err(Error::InvalidArgument(format!("z_min = {z_min} must be > 0")));
        }
        let angular_mass = angular.mass()?;
        let sin2_moment = angular.sin2_moment()?;
        Ok(KernelSpec {
            sigma,
            angular,
            beta,
            z_min,
            dim,
            angular_mass,
            sin2_moment,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn sigma(&self) -> &CrossSection {
        &self.sigma
    }

    pub fn angular(&self) -> &AngularMeasure {
        &self.angular
    }

    pub fn beta(&self) -> &SpatialRate {
        &self.beta
    }

    pub fn z_min(&self) -> f64 {
        self.z_min
    }

    /// Mass of the truncated angular measure (without the sphere factor).
    pub fn angular_mass(&self) -> f64 {
        self.angular_mass
    }

    /// `|S^{d-2}|`, the total mass of `d xi`.
    pub fn xi_area(&self) -> f64 {
        sphere_area(self.dim - 2)
    }

    /// `mass(Q_eps) * |S^{d-2}|`: total angular rate per unit `sigma * beta`.
    pub fn total_angular_rate(&self) -> f64 {
        self.angular_mass * self.xi_area()
    }

    /// `|S^{d-2}| * int sin^2(theta/2) Q_eps(d theta)`, the coefficient in
    /// the closed-form generator of velocity moments.
    pub fn momentum_transfer_rate(&self) -> f64 {
        self.sin2_moment * self.xi_area()
    }

    /// Capped `sigma(|v - u|) * beta(r - q)`, with the cap flag.
    pub fn pair_rate(&self, dr_sq: f64, speed: f64) -> (f64, bool) {
        let b = self.beta.eval_sq(dr_sq);
        if b == 0.0 {
            return (0.0, false);
        }
        let (s, capped) = self.sigma.eval_capped(speed, self.z_min);
        (s * b, capped)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn ks_distance<F: Fn(f64) -> f64>(mut samples: Vec<f64>, cdf: F) -> f64 {
        samples.sort_by(f64::total_cmp);
        let n = samples.len() as f64;
        samples
            .iter()
            .enumerate()
            .map(|(i, &x)| {
                let f = cdf(x);
                (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
            })
            .fold(0.0, f64::max)
    }

    #[test]
    fn sphere_areas() {
        assert!((sphere_area(1) - 2.0 * PI).abs() < 1e-15);
        assert!((sphere_area(2) - 4.0 * PI).abs() < 1e-14);
        assert!((sphere_area(3) - 2.0 * PI * PI).abs() < 1e-13);
    }

    #[test]
    fn exponent_table() {
        let m = exponents_from_s(5.0).unwrap();
        assert_eq!((m.gamma, m.nu, m.regime), (0.0, 0.5, Regime::Maxwellian));
        let vs = exponents_from_s(3.0).unwrap();
        assert_eq!((vs.gamma, vs.nu, vs.regime), (-1.0, 1.0, Regime::VerySoft));
        let h = exponents_from_s(7.0).unwrap();
        assert_eq!((h.gamma, h.nu, h.regime), (1.0 / 3.0, 1.0 / 3.0, Regime::Hard));
        assert_eq!(exponents_from_s(4.0).unwrap().regime, Regime::Soft);
        assert!(exponents_from_s(2.0).is_err());
    }

    #[test]
    fn sigma_values() {
        let s0 = CrossSection::new(0.0, SigmaForm::Power, 3).unwrap();
        assert_eq!(s0.eval(0.0).unwrap(), 1.0);
        assert_eq!(s0.eval(7.3).unwrap(), 1.0);
        let s1 = CrossSection::new(1.0, SigmaForm::Power, 3).unwrap();
        assert_eq!(s1.eval(2.0).unwrap(), 2.0);
        let sm = CrossSection::new(-1.0, SigmaForm::Power, 3).unwrap();
        assert_eq!(sm.eval(0.5).unwrap(), 2.0);
        assert!(matches!(sm.eval(0.0), Err(Error::SingularInput(_))));
        assert_eq!(sm.eval_capped(1e-6, 1e-3), (1000.0, true));
        let t = CrossSection::new(2.0, SigmaForm::Tempered, 3).unwrap();
        assert_eq!(t.eval(3.0).unwrap(), 10.0);
        assert!(CrossSection::new(-3.0, SigmaForm::Power, 3).is_err());
        assert!(CrossSection::new(2.5, SigmaForm::Power, 3).is_err());
    }

    #[test]
    fn power_sigma_lipschitz_in_power_is_equality() {
        for gamma in [-1.5, -0.5, 0.5, 1.0, 2.0] {
            let s = CrossSection::new(gamma, SigmaForm::Power, 3).unwrap();
            for (z, w) in [(0.3, 2.0), (1.0, 1.5), (4.0, 0.1)] {
                let lhs = (s.eval(z).unwrap() - s.eval(w).unwrap()).abs();
                let rhs = s.c_sigma() * (f64::powf(z, gamma) - f64::powf(w, gamma)).abs();
                assert_eq!(lhs, rhs);
            }
        }
    }

    #[test]
    fn beta_profile() {
        let b = SpatialRate::bump(0.5).unwrap();
        assert_eq!(b.eval(&Vector::zeros(3)), 1.0);
        assert_eq!(b.eval(&Vector::from_slice(&[0.5, 0.0, 0.0])), 0.0);
        assert_eq!(b.eval(&Vector::from_slice(&[0.3, 0.4, 0.1])), 0.0);
        let x = Vector::from_slice(&[0.1, -0.2, 0.05]);
        assert_eq!(b.eval(&x), b.eval(&-x));
        let v = b.eval(&x);
        assert!(v > 0.0 && v < 1.0);
    }

    #[test]
    fn beta_is_c1_at_boundary() {
        let rho = 0.8;
        let b = SpatialRate::bump(rho).unwrap();
        let f = |r: f64| b.eval(&Vector::from_slice(&[r, 0.0, 0.0]));
        let h = 1e-4;
        // Second-order one-sided differences from each side of |x| = rho.
        let inner = (3.0 * f(rho) - 4.0 * f(rho - h) + f(rho - 2.0 * h)) / (2.0 * h);
        let outer = (-3.0 * f(rho) + 4.0 * f(rho + h) - f(rho + 2.0 * h)) / (2.0 * h);
        assert!((inner - outer).abs() < 1e-6, "{inner} vs {outer}");
    }

    #[test]
    fn kappa_closed_forms() {
        let lr = AngularMeasure::long_range(0.5, 0.0).unwrap();
        assert!((lr.kappa().unwrap() - 2.0 * PI.sqrt()).abs() < 1e-14);
        let eps = 0.01;
        let lr_eps = AngularMeasure::long_range(0.5, eps).unwrap();
        let expect = (PI.powf(0.5) - eps.powf(0.5)) / 0.5;
        assert!((lr_eps.kappa().unwrap() - expect).abs() < 1e-14);
        let hs = AngularMeasure::hard_sphere(0.0).unwrap();
        assert!((hs.kappa().unwrap() - PI / 2.0).abs() < 1e-15);
        assert!(matches!(
            AngularMeasure::long_range(1.2, 0.0).unwrap().kappa(),
            Err(Error::DivergentMeasure(_))
        ));
        let nu1 = AngularMeasure::long_range(1.0, 0.1).unwrap();
        assert!((nu1.kappa().unwrap() - (PI / 0.1).ln()).abs() < 1e-14);
    }

    #[test]
    fn kappa_quadrature_matches_closed_forms() {
        for am in [
            AngularMeasure::long_range(0.5, 0.0).unwrap(),
            AngularMeasure::long_range(0.5, 1e-2).unwrap(),
            AngularMeasure::long_range(1.25, 0.1).unwrap(),
            AngularMeasure::hard_sphere(0.0).unwrap(),
            AngularMeasure::hard_sphere(0.3).unwrap(),
        ] {
            let a = am.kappa().unwrap();
            let q = am.kappa_by_quadrature().unwrap();
            assert!((a - q).abs() < 1e-10, "{am:?}: {a} vs {q}");
        }
    }

    #[test]
    fn kappa_monotone_in_cutoff() {
        let mut last = f64::INFINITY;
        for eps in [0.0, 1e-3, 1e-2, 0.1, 1.0] {
            let k = AngularMeasure::long_range(0.5, eps).unwrap().kappa().unwrap();
            assert!(k < last);
            last = k;
        }
    }

    #[test]
    fn mass_and_sin2_moment() {
        let lr = AngularMeasure::long_range(0.5, 1e-2).unwrap();
        let m = lr.mass().unwrap();
        let q = quadrature::integrate(|t: f64| t.powf(-1.5), 1e-2, PI, 1e-12).unwrap();
        assert!((m - q.value).abs() < 1e-9);
        assert!(matches!(
            AngularMeasure::long_range(0.5, 0.0).unwrap().mass(),
            Err(Error::NonNormalizable(_))
        ));
        let hs = AngularMeasure::hard_sphere(0.2).unwrap();
        let q = quadrature::integrate(
            |t: f64| (0.5 * t).sin().powi(2) * 0.5 * t.sin(),
            0.2,
            PI,
            1e-13,
        )
        .unwrap();
        assert!((hs.sin2_moment().unwrap() - q.value).abs() < 1e-12);
    }

    #[test]
    fn long_range_sampler_matches_cdf() {
        let am = AngularMeasure::long_range(0.5, 1e-2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 100_000;
        let samples: Vec<f64> = (0..n).map(|_| am.sample_theta(&mut rng).unwrap()).collect();
        assert!(samples.iter().all(|&t| t > 1e-2 && t <= PI));
        let ks = ks_distance(samples.clone(), |t| am.cdf(t).unwrap());
        assert!(ks < 0.01, "ks = {ks}");
        // Mean of theta equals kappa / mass; compare within 3 standard errors.
        let mean = samples.iter().sum::<f64>() / n as f64;
        let var = samples.iter().map(|t| (t - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0);
        let expect = am.kappa().unwrap() / am.mass().unwrap();
        assert!((mean - expect).abs() < 3.0 * (var / n as f64).sqrt());
    }

    #[test]
    fn hard_sphere_sampler_matches_cdf() {
        let am = AngularMeasure::hard_sphere(0.05).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let samples: Vec<f64> = (0..100_000).map(|_| am.sample_theta(&mut rng).unwrap()).collect();
        assert!(samples.iter().all(|&t| t > 0.05 && t <= PI));
        assert!(ks_distance(samples, |t| am.cdf(t).unwrap()) < 0.01);
        assert!(matches!(
            AngularMeasure::long_range(0.5, 0.0)
                .unwrap()
                .sample_theta(&mut rng),
            Err(Error::NonNormalizable(_))
        ));
    }

    #[test]
    fn table_measure() {
        let am = AngularMeasure::new(
            AngularKind::Table {
                thetas: vec![0.5, 1.0, 2.0, 3.0],
                densities: vec![2.0, 1.0, 1.0, 0.0],
            },
            0.0,
        )
        .unwrap();
        // Trapezoids: 0.75 + 1.0 + 0.5
        assert!((am.mass().unwrap() - 2.25).abs() < 1e-15);
        let exact_kappa = {
            // int t*b(t) over the linear pieces
            let piece = |a: f64, b: f64, fa: f64, fb: f64| {
                let s = (fb - fa) / (b - a);
                let c = fa - s * a;
                s * (b.powi(3) - a.powi(3)) / 3.0 + c * (b * b - a * a) / 2.0
            };
            piece(0.5, 1.0, 2.0, 1.0) + piece(1.0, 2.0, 1.0, 1.0) + piece(2.0, 3.0, 1.0, 0.0)
        };
        assert!((am.kappa().unwrap() - exact_kappa).abs() < 1e-10);
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let samples: Vec<f64> = (0..100_000).map(|_| am.sample_theta(&mut rng).unwrap()).collect();
        assert!(samples.iter().all(|&t| (0.5..=3.0).contains(&t)));
        assert!(ks_distance(samples, |t| am.cdf(t).unwrap()) < 0.01);
    }

    #[test]
    fn xi_is_uniform_on_sphere() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 100_000;
        for d in [3usize, 4, 5] {
            let draws: Vec<Vector> = (0..n).map(|_| sample_xi(d, &mut rng)).collect();
            assert!(draws.iter().all(|x| (x.norm() - 1.0).abs() < 1e-14));
            for k in 0..d - 1 {
                let mean = draws.iter().map(|x| x[k]).sum::<f64>() / n as f64;
                // Var of a coordinate on S^{m-1} is 1/m.
                let sd = (1.0 / ((d - 1) as f64) / n as f64).sqrt();
                assert!(mean.abs() < 3.0 * sd, "d={d} k={k} mean={mean}");
            }
        }
    }

    #[test]
    fn xi_pairwise_dot_matches_rejection_oracle() {
        // Oracle: uniform points by rejection from the cube.
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let d = 4;
        let n = 100_000;
        let mut oracle = Vec::with_capacity(n);
        while oracle.len() < n {
            let p: Vec<Vector> = (0..2)
                .map(|_| loop {
                    let c = Vector::from_slice(&[
                        rng.random_range(-1.0..1.0),
                        rng.random_range(-1.0..1.0),
                        rng.random_range(-1.0..1.0),
                    ]);
                    let r = c.norm();
                    if r > 1e-3 && r <= 1.0 {
                        break c * (1.0 / r);
                    }
                })
                .collect();
            oracle.push(p[0].dot(&p[1]));
        }
        let drawn: Vec<f64> = (0..n)
            .map(|_| sample_xi(d, &mut rng).dot(&sample_xi(d, &mut rng)))
            .collect();
        oracle.sort_by(f64::total_cmp);
        let ks = ks_distance(drawn, |x| oracle.partition_point(|&o| o <= x) as f64 / n as f64);
        assert!(ks < 0.01, "ks = {ks}");
    }

    #[test]
    fn kernel_spec_rates() {
        let k = KernelSpec::new(
            3,
            CrossSection::new(0.0, SigmaForm::Power, 3).unwrap(),
            AngularMeasure::long_range(0.5, 1e-2).unwrap(),
            SpatialRate::bump(1.0).unwrap(),
            1e-3,
        )
        .unwrap();
        let mass = (1e-2f64.powf(-0.5) - PI.powf(-0.5)) / 0.5;
        assert!((k.total_angular_rate() - 2.0 * PI * mass).abs() < 1e-12);
        assert_eq!(k.pair_rate(0.0, 3.0), (1.0, false));
        assert_eq!(k.pair_rate(1.0, 3.0), (0.0, false));
    }
}
