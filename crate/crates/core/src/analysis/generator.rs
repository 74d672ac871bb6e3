//! The generator `A psi = v . grad_r psi + sigma beta L psi` and its pairing
//! with the product of an empirical measure with itself.

use std::collections::HashMap;

use rayon::prelude::*;

use super::test_functions::TestFunction;
use crate::error::Result;
use crate::geometry::{self, AngleParam};
use crate::kernels::{sample_xi, KernelSpec};
use crate::particles::{Ensemble, Particle};
use crate::rng::substream;
use crate::vector::{Vector, MAX_DIM};

/// Stream coordinate for angle samples.
const ANGLE_STREAM: u64 = u64::MAX - 1;

/// Angles drawn from the normalized truncated angular measure, shared by
/// all Monte Carlo evaluations of one computation.
#[derive(Debug, Clone, PartialEq)]
pub struct AngleSamples {
    angles: Vec<AngleParam>,
    total_rate: f64,
}

impl AngleSamples {
    pub fn draw(kernel: &KernelSpec, count: usize, seed: u64) -> Result<Self> {
        let mut rng = substream(seed, ANGLE_STREAM, 0);
        let angles = (0..count)
            .map(|_| {
                let theta = kernel.angular().sample_theta(&mut rng)?;
                AngleParam::new(theta, sample_xi(kernel.dim(), &mut rng))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(AngleSamples {
            angles,
            total_rate: kernel.total_angular_rate(),
        })
    }

    pub fn len(&self) -> usize {
        self.angles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.angles.is_empty()
    }

    /// Monte Carlo estimate of `int (f(v + alpha) - f(v)) Q_eps(d theta) d xi`.
    pub fn integrate<F: Fn(&Vector) -> f64>(&self, v: &Vector, u: &Vector, f: F) -> f64 {
        if self.angles.is_empty() {
            return 0.0;
        }
        let base = f(v);
        let sum: f64 = self
            .angles
            .iter()
            .map(|ap| f(&(*v + geometry::alpha(v, u, ap))) - base)
            .sum();
        self.total_rate * sum / self.angles.len() as f64
    }
}

/// `(L psi)(r, v; u)`: closed form when available, else Monte Carlo.
pub fn collision_term(
    psi: &TestFunction,
    r: &Vector,
    v: &Vector,
    u: &Vector,
    kernel: &KernelSpec,
    samples: &AngleSamples,
) -> f64 {
    psi.collision_closed_form(r, v, u, kernel)
        .unwrap_or_else(|| samples.integrate(v, u, |w| psi.eval(r, w)))
}

/// `(L S(tau) psi)(r, v; u)` by Monte Carlo (closed form at `tau = 0`).
pub fn transported_collision_term(
    psi: &TestFunction,
    tau: f64,
    r: &Vector,
    v: &Vector,
    u: &Vector,
    kernel: &KernelSpec,
    samples: &AngleSamples,
) -> f64 {
    if tau == 0.0 {
        return collision_term(psi, r, v, u, kernel, samples);
    }
    samples.integrate(v, u, |w| psi.eval_transported(r, w, tau))
}

/// `(A psi)(r, v; q, u)` with the cross-section capped at `z_min` as in
/// the simulator.
pub fn apply_generator(
    psi: &TestFunction,
    x: &Particle,
    y: &Particle,
    kernel: &KernelSpec,
    samples: &AngleSamples,
) -> f64 {
    if *psi == TestFunction::Constant {
        return 0.0;
    }
    let transport = x.v.dot(&psi.grad(&x.r, &x.v).0);
    let (sb, _) = kernel.pair_rate((x.r - y.r).norm_sq(), (x.v - y.v).norm());
    if sb == 0.0 || psi.velocity_independent() {
        return transport;
    }
    transport + sb * collision_term(psi, &x.r, &x.v, &y.v, kernel, samples)
}

/// Neighbour search over the support of `beta`.
pub(crate) struct Neighbours {
    radius: Option<f64>,
    cells: HashMap<[i64; MAX_DIM], Vec<usize>>,
}

impl Neighbours {
    pub(crate) fn new(e: &Ensemble, kernel: &KernelSpec) -> Self {
        let radius = kernel.beta().support_radius();
        let mut cells: HashMap<[i64; MAX_DIM], Vec<usize>> = HashMap::new();
        if let Some(rho) = radius {
            for (i, p) in e.particles().iter().enumerate() {
                cells.entry(cell_of(&p.r, rho)).or_default().push(i);
            }
        }
        Neighbours { radius, cells }
    }

    /// Calls `f(j)` for every `j != i` that may lie within the support,
    /// in increasing order of `j`.
    pub(crate) fn for_each<F: FnMut(usize)>(&self, e: &Ensemble, i: usize, mut f: F) {
        let Some(rho) = self.radius else {
            (0..e.len()).filter(|&j| j != i).for_each(f);
            return;
        };
        let d = e.dim();
        let home = cell_of(&e.particles()[i].r, rho);
        let mut found = Vec::new();
        let offsets = 3usize.pow(d as u32);
        for code in 0..offsets {
            let mut key = home;
            let mut c = code;
            for k in key.iter_mut().take(d) {
                *k += (c % 3) as i64 - 1;
                c /= 3;
            }
            if let Some(list) = self.cells.get(&key) {
                found.extend(list.iter().copied().filter(|&j| j != i));
            }
        }
        found.sort_unstable();
        found.into_iter().for_each(&mut f);
    }
}

fn cell_of(r: &Vector, rho: f64) -> [i64; MAX_DIM] {
    let mut key = [0i64; MAX_DIM];
    for (k, x) in r.as_slice().iter().enumerate() {
        key[k] = (x / rho).floor() as i64;
    }
    key
}

/// Sum `(1/N^2) sum_i sum_{j != i} f(i, j) sigma_cap beta` over pairs in the
/// support of `beta`, plus `(1/N) sum_i g(i)`. Per-particle sums are
/// reduced in index order, so the result does not depend on threading.
pub(crate) fn pair_average<F, G>(e: &Ensemble, kernel: &KernelSpec, g: G, f: F) -> f64
where
    F: Fn(usize, usize) -> f64 + Sync,
    G: Fn(usize) -> f64 + Sync,
{
    let n = e.len();
    let nb = Neighbours::new(e, kernel);
    let parts = e.particles();
    let per: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut acc = 0.0;
            nb.for_each(e, i, |j| {
                let (pi, pj) = (&parts[i], &parts[j]);
                let (sb, _) = kernel.pair_rate((pi.r - pj.r).norm_sq(), (pi.v - pj.v).norm());
                if sb > 0.0 {
                    acc += sb * f(i, j);
                }
            });
            g(i) + acc / n as f64
        })
        .collect();
    per.iter().sum::<f64>() / n as f64
}

/// `<A psi, mu (x) mu>` for the empirical measure of `e`, summing ordered
/// pairs over `N^2`. Self-pairs contribute nothing since `L psi(r, v; v) = 0`.
pub fn generator_pairing(
    e: &Ensemble,
    psi: &TestFunction,
    kernel: &KernelSpec,
    samples: &AngleSamples,
) -> f64 {
    if *psi == TestFunction::Constant {
        return 0.0;
    }
    let parts = e.particles();
    let transport = |i: usize| {
        let p = &parts[i];
        p.v.dot(&psi.grad(&p.r, &p.v).0)
    };
    let n = e.len() as f64;
    if psi.velocity_independent() {
        return (0..e.len()).map(transport).sum::<f64>() / n;
    }
    if let Some(rate) = uniform_pair_rate(kernel) {
        if let Some(coll) = separated_collision_sum(e, psi, kernel) {
            let t: f64 = (0..e.len()).map(transport).sum();
            return (t + rate * coll / n) / n;
        }
    }
    pair_average(e, kernel, transport, |i, j| {
        collision_term(psi, &parts[i].r, &parts[i].v, &parts[j].v, kernel, samples)
    })
}

/// `sigma beta` when it is the same for every pair (Maxwellian `sigma`
/// with a constant spatial rate).
fn uniform_pair_rate(kernel: &KernelSpec) -> Option<f64> {
    (kernel.beta().support_radius().is_none() && kernel.sigma().gamma() == 0.0)
        .then(|| kernel.pair_rate(0.0, 1.0).0)
}

/// `sum_i sum_{j != i} (L psi)(r_i, v_i; v_j)` in linear time for
/// `psi = a(r) P(v)`, using `L psi = a(r) c (P(u) - P(v))`.
fn separated_collision_sum(e: &Ensemble, psi: &TestFunction, kernel: &KernelSpec) -> Option<f64> {
    let parts = e.particles();
    let (_, factor) = psi.separated(&parts.first()?.r)?;
    let c = kernel.momentum_transfer_rate();
    let n = parts.len() as f64;
    let total: f64 = parts.iter().map(|p| factor.eval(&p.v)).sum();
    Some(
        parts
            .iter()
            .map(|p| {
                let (a, _) = psi.separated(&p.r).expect("separated");
                a * c * (total - n * factor.eval(&p.v))
            })
            .sum(),
    )
}

/// `<B S(tau) psi, mu (x) mu>`: the collision part only, applied to the
/// transported test function.
pub fn collision_pairing(
    e: &Ensemble,
    psi: &TestFunction,
    tau: f64,
    kernel: &KernelSpec,
    samples: &AngleSamples,
) -> f64 {
    if *psi == TestFunction::Constant {
        return 0.0;
    }
    let parts = e.particles();
    pair_average(
        e,
        kernel,
        |_| 0.0,
        |i, j| {
            transported_collision_term(
                psi,
                tau,
                &parts[i].r,
                &parts[i].v,
                &parts[j].v,
                kernel,
                samples,
            )
        },
    )
}

/// `<psi, mu>` for the empirical measure of `e`.
pub fn pairing(e: &Ensemble, psi: &TestFunction) -> f64 {
    let n = e.len() as f64;
    e.particles().iter().map(|p| psi.eval(&p.r, &p.v)).sum::<f64>() / n
}

/// `<S(tau) psi, mu>`.
pub fn transported_pairing(e: &Ensemble, psi: &TestFunction, tau: f64) -> f64 {
    let n = e.len() as f64;
    e.particles()
        .iter()
        .map(|p| psi.eval_transported(&p.r, &p.v, tau))
        .sum::<f64>()
        / n
}
