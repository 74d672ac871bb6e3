//! Randomized audits of the pointwise inequalities behind the stability
//! estimates. Each family samples inputs, evaluates `lhs / rhs` with the
//! constant left out, and reports the largest ratio seen. Families with an
//! explicit constant also count violations.

use std::io::Write;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::generator::AngleSamples;
use super::moments::psi_integrand;
use super::test_functions::TestFunction;
use crate::csv::fmt_f64;
use crate::error::{Error, Result};
use crate::geometry::{alpha, gamma, tanaka_shift, AngleParam};
use crate::kernels::{sample_xi, AngularMeasure, CrossSection, KernelSpec, SigmaForm, SpatialRate};
use crate::particles::Particle;
use crate::rng::substream;
use crate::vector::Vector;

/// Relative slack on explicit constants, covering rounding in the
/// evaluation of both sides.
pub const AUDIT_REL_TOL: f64 = 1e-9;

/// Samples per parallel chunk.
const CHUNK: u64 = 8192;

/// Angle draws for Monte Carlo collision terms.
const MC_ANGLES: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AuditFamily {
    /// `|Gamma(X, xi) - Gamma(Y, xi_0)| <= 3 |X - Y|`.
    TanakaShift,
    /// `|alpha(v,u,theta,xi) - alpha(v~,u~,theta,xi_0)| <= 2 theta (|v-v~| + |u-u~|)`.
    DeflectionShift,
    /// `|psi(r, v + alpha) - psi(r, v)| <= theta |v-u| max_{|z| <= 2(|v|+|u|)} |grad_v psi(r, z)|`.
    TestFunctionIncrement,
    /// `(a + b) |sigma(a) - sigma(b)| <= C (a^g + b^g)(|v-v~| + |u-u~|)`,
    /// `a = |v-u|`, `b = |v~-u~|`.
    CrossSectionDifference { gamma: f64 },
    /// Coupling integrand against exponential-moment weights, `gamma >= 0`.
    CouplingIntegrandHard { gamma: f64, delta: f64 },
    /// Coupling integrand against singular weights, `gamma < 0`.
    CouplingIntegrandSoft { gamma: f64 },
    /// `|B psi| <= C |v-u| sigma(|v-u|) ||psi||_Lip`.
    CollisionOperatorBound { gamma: f64, nu: f64, cutoff: f64 },
}

impl AuditFamily {
    pub fn name(&self) -> &'static str {
        match self {
            AuditFamily::TanakaShift => "tanaka_shift",
            AuditFamily::DeflectionShift => "deflection_shift",
            AuditFamily::TestFunctionIncrement => "test_function_increment",
            AuditFamily::CrossSectionDifference { .. } => "cross_section_difference",
            AuditFamily::CouplingIntegrandHard { .. } => "coupling_integrand_hard",
            AuditFamily::CouplingIntegrandSoft { .. } => "coupling_integrand_soft",
            AuditFamily::CollisionOperatorBound { .. } => "collision_operator_bound",
        }
    }

    /// Explicit constant, if the inequality has one.
    pub fn constant(&self) -> Option<f64> {
        match self {
            AuditFamily::TanakaShift => Some(3.0),
            AuditFamily::DeflectionShift => Some(2.0),
            AuditFamily::TestFunctionIncrement => Some(1.0),
            _ => None,
        }
    }

    fn tag(&self) -> u64 {
        match self {
            AuditFamily::TanakaShift => 1,
            AuditFamily::DeflectionShift => 2,
            AuditFamily::TestFunctionIncrement => 3,
            AuditFamily::CrossSectionDifference { .. } => 4,
            AuditFamily::CouplingIntegrandHard { .. } => 5,
            AuditFamily::CouplingIntegrandSoft { .. } => 6,
            AuditFamily::CollisionOperatorBound { .. } => 7,
        }
    }

    fn validate(&self, dim: usize) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidArgument(msg));
        match *self {
            AuditFamily::CrossSectionDifference { gamma } if gamma > 2.0 || gamma <= -(dim as f64) => {
                bad(format!("gamma = {gamma} outside (-d, 2]"))
            }
            AuditFamily::CouplingIntegrandHard { gamma, delta } => {
                if !(0.0..=2.0).contains(&gamma) || !(delta > 0.0) {
                    bad(format!("needs gamma in [0, 2] and delta > 0, got {gamma}, {delta}"))
                } else {
                    Ok(())
                }
            }
            AuditFamily::CouplingIntegrandSoft { gamma } if !(gamma < 0.0 && gamma > -(dim as f64)) => {
                bad(format!("gamma = {gamma} outside (-d, 0)"))
            }
            AuditFamily::CollisionOperatorBound { gamma, .. } if gamma > 2.0 || gamma <= -(dim as f64) => {
                bad(format!("gamma = {gamma} outside (-d, 2]"))
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AuditReport {
    pub family: String,
    /// Evaluated (non-degenerate) samples.
    pub samples: u64,
    /// Degenerate draws excluded before evaluation.
    pub excluded: u64,
    /// Largest `lhs / rhs` with the constant removed.
    pub max_ratio: f64,
    /// Ratios above the explicit constant; `None` for existential constants.
    pub violations: Option<u64>,
}

/// A random vector with a log-uniform scale over four decades.
fn random_vector(d: usize, rng: &mut ChaCha8Rng) -> Vector {
    let scale = 10f64.powf(rng.random_range(-2.0..1.0));
    let mut x = Vector::zeros(d);
    for c in x.as_mut_slice() {
        *c = rng.sample::<f64, _>(rand_distr::StandardNormal) * scale;
    }
    x
}

/// Either an independent draw or a small relative perturbation of `x`,
/// so that both the global and the local regime are exercised.
fn partner(x: &Vector, rng: &mut ChaCha8Rng) -> Vector {
    if rng.random_bool(0.5) {
        return random_vector(x.dim(), rng);
    }
    let rel = 10f64.powf(rng.random_range(-6.0..0.0));
    let dir = sample_xi(x.dim() + 1, rng);
    x.axpy(rel * x.norm().max(1e-3), &dir)
}

fn random_angles(d: usize, rng: &mut ChaCha8Rng) -> Result<AngleParam> {
    let theta = std::f64::consts::PI * (1.0 - rng.random::<f64>());
    AngleParam::new(theta, sample_xi(d, rng))
}

fn bracket(x: &Vector) -> f64 {
    (1.0 + x.norm_sq()).sqrt()
}

/// One sample: `Some((lhs, rhs))`, or `None` for degenerate inputs.
type Draw = Option<(f64, f64)>;

struct Sampler {
    family: AuditFamily,
    dim: usize,
    kernel: Option<KernelSpec>,
    angles: Option<AngleSamples>,
}

impl Sampler {
    fn new(family: AuditFamily, dim: usize, seed: u64) -> Result<Self> {
        let kernel = match family {
            AuditFamily::CouplingIntegrandHard { gamma, .. }
            | AuditFamily::CouplingIntegrandSoft { gamma }
            | AuditFamily::CrossSectionDifference { gamma } => Some(KernelSpec::new(
                dim,
                CrossSection::new(gamma, SigmaForm::Power, dim)?,
                AngularMeasure::hard_sphere(0.0)?,
                SpatialRate::bump(1.0)?,
                1e-3,
            )?),
            AuditFamily::CollisionOperatorBound { gamma, nu, cutoff } => Some(KernelSpec::new(
                dim,
                CrossSection::new(gamma, SigmaForm::Power, dim)?,
                AngularMeasure::long_range(nu, cutoff)?,
                SpatialRate::bump(1.0)?,
                1e-3,
            )?),
            _ => None,
        };
        let angles = match (&family, &kernel) {
            (AuditFamily::CollisionOperatorBound { .. }, Some(k)) => {
                Some(AngleSamples::draw(k, MC_ANGLES, seed)?)
            }
            _ => None,
        };
        Ok(Sampler {
            family,
            dim,
            kernel,
            angles,
        })
    }

    fn draw(&self, rng: &mut ChaCha8Rng) -> Result<Draw> {
        let d = self.dim;
        match self.family {
            AuditFamily::TanakaShift => {
                let x = random_vector(d, rng);
                let y = partner(&x, rng);
                let dist = (x - y).norm();
                if x.is_zero() || y.is_zero() || dist == 0.0 {
                    return Ok(None);
                }
                let xi = sample_xi(d, rng);
                let xi0 = tanaka_shift(&x, &y, &xi)?;
                let lhs = (gamma(&x, &xi)? - gamma(&y, &xi0)?).norm();
                Ok(Some((lhs, dist)))
            }
            AuditFamily::DeflectionShift => {
                let (v, u) = (random_vector(d, rng), random_vector(d, rng));
                let (vt, ut) = (partner(&v, rng), partner(&u, rng));
                let ap = random_angles(d, rng)?;
                let spread = (v - vt).norm() + (u - ut).norm();
                if v == u || vt == ut || spread == 0.0 {
                    return Ok(None);
                }
                let xi0 = tanaka_shift(&(v - u), &(vt - ut), ap.xi())?;
                let ap0 = AngleParam::new(ap.theta(), xi0)?;
                let lhs = (alpha(&v, &u, &ap) - alpha(&vt, &ut, &ap0)).norm();
                Ok(Some((lhs, ap.theta() * spread)))
            }
            AuditFamily::TestFunctionIncrement => {
                let width = 10f64.powf(rng.random_range(-1.0..0.5));
                let (cr, cv) = (random_vector(d, rng), random_vector(d, rng));
                let psi = TestFunction::GaussianBump {
                    center_r: cr,
                    center_v: cv,
                    width,
                };
                let (r, v, u) = (random_vector(d, rng), random_vector(d, rng), random_vector(d, rng));
                if v == u {
                    return Ok(None);
                }
                let ap = random_angles(d, rng)?;
                let lhs = (psi.eval(&r, &(v + alpha(&v, &u, &ap))) - psi.eval(&r, &v)).abs();
                // |grad_z psi(r, z)| = g_r(r) rho e^{-rho^2 / 2w^2} / w^2 with
                // rho = |z - c_v|, maximized at rho = w within the reachable range.
                let radius = 2.0 * (v.norm() + u.norm());
                let lo = (cv.norm() - radius).max(0.0);
                let hi = cv.norm() + radius;
                let rho = width.clamp(lo, hi);
                let g_r = (-(r - cr).norm_sq() / (2.0 * width * width)).exp();
                let grad_max = g_r * rho * (-rho * rho / (2.0 * width * width)).exp() / (width * width);
                let rhs = ap.theta() * (v - u).norm() * grad_max;
                if rhs == 0.0 {
                    return Ok(None);
                }
                Ok(Some((lhs, rhs)))
            }
            AuditFamily::CrossSectionDifference { gamma: g } => {
                let sigma = self.kernel.as_ref().expect("kernel").sigma();
                let (v, u) = (random_vector(d, rng), random_vector(d, rng));
                let (vt, ut) = (partner(&v, rng), partner(&u, rng));
                let (a, b) = ((v - u).norm(), (vt - ut).norm());
                let spread = (v - vt).norm() + (u - ut).norm();
                if a == 0.0 || b == 0.0 || spread == 0.0 {
                    return Ok(None);
                }
                let lhs = (a + b) * (sigma.eval(a)? - sigma.eval(b)?).abs();
                Ok(Some((lhs, (a.powf(g) + b.powf(g)) * spread)))
            }
            AuditFamily::CouplingIntegrandHard { gamma: g, delta } => {
                let kernel = self.kernel.as_ref().expect("kernel");
                let (x, xt, y, yt) = self.pair_of_pairs(rng);
                let psi = psi_integrand((&x, &xt), (&y, &yt), kernel)?.0;
                let e = |w: &Vector| (delta * bracket(w).powf(1.0 + g)).exp();
                let p = |w: &Vector| bracket(w).powf(1.0 + g);
                let dx = (x.v - xt.v).norm() + (x.r - xt.r).norm();
                let dy = (y.v - yt.v).norm() + (y.r - yt.r).norm();
                let rhs = (e(&y.v) + e(&yt.v)) * dx
                    + (e(&x.v) + e(&xt.v)) * dy
                    + (p(&x.v) + p(&xt.v)) * dx
                    + (p(&y.v) + p(&yt.v)) * dy;
                if rhs == 0.0 {
                    return Ok(None);
                }
                Ok(Some((psi, rhs)))
            }
            AuditFamily::CouplingIntegrandSoft { gamma: g } => {
                let kernel = self.kernel.as_ref().expect("kernel");
                let (x, xt, y, yt) = self.pair_of_pairs(rng);
                let (a, b) = ((x.v - y.v).norm(), (xt.v - yt.v).norm());
                if a == 0.0 || b == 0.0 {
                    return Ok(None);
                }
                let psi = psi_integrand((&x, &xt), (&y, &yt), kernel)?.0;
                let dr = (x.r - xt.r).norm() + (y.r - yt.r).norm();
                let dv = (x.v - xt.v).norm() + (y.v - yt.v).norm();
                let spatial = if g <= -1.0 {
                    a.powf(1.0 + g) + b.powf(1.0 + g)
                } else {
                    [&x.v, &y.v, &xt.v, &yt.v]
                        .iter()
                        .map(|w| bracket(w).powf(1.0 + g))
                        .sum()
                };
                let rhs = spatial * dr + (a.powf(g) + b.powf(g)) * dv;
                if rhs == 0.0 {
                    return Ok(None);
                }
                Ok(Some((psi, rhs)))
            }
            AuditFamily::CollisionOperatorBound { .. } => {
                let kernel = self.kernel.as_ref().expect("kernel");
                let samples = self.angles.as_ref().expect("angles");
                let width = 10f64.powf(rng.random_range(-0.5..0.5));
                let psi = TestFunction::GaussianBump {
                    center_r: random_vector(d, rng),
                    center_v: random_vector(d, rng),
                    width,
                };
                let lip = psi.lipschitz_bound().expect("bounded gradient");
                let (r, v) = (random_vector(d, rng), random_vector(d, rng));
                let (q, u) = (partner(&r, rng), random_vector(d, rng));
                let z = (v - u).norm();
                if z == 0.0 {
                    return Ok(None);
                }
                let sigma = kernel.sigma().eval(z)?;
                let beta = kernel.beta().eval(&(r - q));
                let l = samples.integrate(&v, &u, |w| psi.eval(&r, w));
                Ok(Some(((sigma * beta * l).abs(), z * sigma * lip)))
            }
        }
    }

    fn pair_of_pairs(&self, rng: &mut ChaCha8Rng) -> (Particle, Particle, Particle, Particle) {
        let d = self.dim;
        let x = Particle {
            r: random_vector(d, rng),
            v: random_vector(d, rng),
        };
        let y = Particle {
            r: partner(&x.r, rng),
            v: random_vector(d, rng),
        };
        let xt = Particle {
            r: partner(&x.r, rng),
            v: partner(&x.v, rng),
        };
        let yt = Particle {
            r: partner(&y.r, rng),
            v: partner(&y.v, rng),
        };
        (x, xt, y, yt)
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct Tally {
    max_ratio: f64,
    violations: u64,
    samples: u64,
    excluded: u64,
}

/// Draw `samples` random inputs for `family` in dimension `dim`.
/// Degenerate draws (equal arguments, vanishing right-hand sides or
/// singular cross-sections) are excluded and counted separately.
pub fn audit_inequality(family: AuditFamily, samples: u64, dim: usize, seed: u64) -> Result<AuditReport> {
    if dim < 3 || dim > crate::vector::MAX_DIM {
        return Err(Error::InvalidArgument(format!("dimension {dim} outside 3..=8")));
    }
    family.validate(dim)?;
    let sampler = Sampler::new(family, dim, seed)?;
    let limit = family.constant().map(|c| c * (1.0 + AUDIT_REL_TOL));
    let chunks = samples.div_ceil(CHUNK);
    let tallies = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = substream(seed, family.tag(), c);
            let count = CHUNK.min(samples - c * CHUNK);
            let mut t = Tally::default();
            for _ in 0..count {
                match sampler.draw(&mut rng)? {
                    Some((lhs, rhs)) => {
                        let ratio = lhs / rhs;
                        t.samples += 1;
                        t.max_ratio = t.max_ratio.max(ratio);
                        if limit.is_some_and(|l| ratio > l) {
                            t.violations += 1;
                        }
                    }
                    None => t.excluded += 1,
                }
            }
            Ok(t)
        })
        .collect::<Result<Vec<Tally>>>()?;
    let total = tallies.iter().fold(Tally::default(), |a, t| Tally {
        max_ratio: a.max_ratio.max(t.max_ratio),
        violations: a.violations + t.violations,
        samples: a.samples + t.samples,
        excluded: a.excluded + t.excluded,
    });
    Ok(AuditReport {
        family: family.name().to_string(),
        samples: total.samples,
        excluded: total.excluded,
        max_ratio: total.max_ratio,
        violations: family.constant().map(|_| total.violations),
    })
}

pub const AUDIT_HEADER: &str = "family,samples,max_ratio,violations";

pub fn write_audit_report<W: Write>(mut w: W, reports: &[AuditReport]) -> Result<()> {
    writeln!(w, "{AUDIT_HEADER}")?;
    for r in reports {
        let violations = r.violations.map_or_else(|| "NA".to_string(), |v| v.to_string());
        writeln!(w, "{},{},{},{}", r.family, r.samples, fmt_f64(r.max_ratio), violations)?;
    }
    Ok(())
}
