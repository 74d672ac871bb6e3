//! Residuals of the weak and mild formulations along simulated
//! trajectories.

use super::generator::{collision_pairing, generator_pairing, pairing, transported_pairing, AngleSamples};
use super::test_functions::TestFunction;
use crate::error::{Error, Result};
use crate::kernels::KernelSpec;
use crate::particles::Ensemble;

/// Collision part of the generator used by a residual; `None` in the
/// residual functions means collisions are switched off.
#[derive(Debug, Clone, Copy)]
pub struct Collisions<'a> {
    pub kernel: &'a KernelSpec,
    pub samples: &'a AngleSamples,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResidualPoint {
    pub t: f64,
    pub value: f64,
}

/// Transport-only generator pairing `<v . grad_r psi, mu>`.
fn transport_pairing(e: &Ensemble, psi: &TestFunction) -> f64 {
    let n = e.len() as f64;
    e.particles()
        .iter()
        .map(|p| p.v.dot(&psi.grad(&p.r, &p.v).0))
        .sum::<f64>()
        / n
}

fn full_pairing(e: &Ensemble, psi: &TestFunction, coll: Option<&Collisions>) -> f64 {
    match coll {
        Some(c) => generator_pairing(e, psi, c.kernel, c.samples),
        None => transport_pairing(e, psi),
    }
}

/// Streaming weak-form residual
/// `R(t) = <psi, mu_t> - <psi, mu_0> - int_0^t <A psi, mu_s (x) mu_s> ds`
/// with a left Riemann sum over the observed snapshots.
#[derive(Debug, Clone)]
pub struct WeakAccumulator<'a> {
    psi: TestFunction,
    coll: Option<Collisions<'a>>,
    dim: usize,
    psi0: f64,
    t_prev: f64,
    p_prev: f64,
    integral: f64,
    started: bool,
}

impl<'a> WeakAccumulator<'a> {
    pub fn new(psi: TestFunction, coll: Option<Collisions<'a>>) -> Self {
        WeakAccumulator {
            psi,
            coll,
            dim: 0,
            psi0: 0.0,
            t_prev: 0.0,
            p_prev: 0.0,
            integral: 0.0,
            started: false,
        }
    }

    /// Adds the next snapshot and returns the residual at its time.
    pub fn observe(&mut self, e: &Ensemble) -> Result<ResidualPoint> {
        if e.is_empty() {
            return Err(Error::InvalidArgument("empty snapshot".into()));
        }
        let t = e.time();
        if !self.started {
            self.dim = e.dim();
            self.psi0 = pairing(e, &self.psi);
            self.t_prev = t;
            self.started = true;
        } else {
            if e.dim() != self.dim {
                return Err(Error::InvalidArgument("snapshot dimension changed".into()));
            }
            if !(t >= self.t_prev) {
                return Err(Error::InvalidArgument(format!(
                    "snapshot time {t} precedes {}",
                    self.t_prev
                )));
            }
            self.integral += (t - self.t_prev) * self.p_prev;
            self.t_prev = t;
        }
        self.p_prev = full_pairing(e, &self.psi, self.coll.as_ref());
        Ok(ResidualPoint {
            t,
            value: pairing(e, &self.psi) - self.psi0 - self.integral,
        })
    }
}

/// Weak-form residual series over a stored trajectory.
pub fn weak_form_residual(
    trajectory: &[Ensemble],
    psi: &TestFunction,
    coll: Option<Collisions>,
) -> Result<Vec<ResidualPoint>> {
    let mut acc = WeakAccumulator::new(psi.clone(), coll);
    trajectory.iter().map(|e| acc.observe(e)).collect()
}

/// Mild-form residual
/// `R(t_k) = <psi, mu_k> - <S(t_k) psi, mu_0> - sum_{l<k} dt_l <B S(t_k - t_l) psi, mu_l (x) mu_l>`.
/// Free transport is handled exactly through `S`, so only the collision
/// integral is discretized.
pub fn mild_form_residual(
    trajectory: &[Ensemble],
    psi: &TestFunction,
    coll: Option<Collisions>,
) -> Result<Vec<ResidualPoint>> {
    let Some(first) = trajectory.first() else {
        return Ok(Vec::new());
    };
    for w in trajectory.windows(2) {
        if w[1].dim() != w[0].dim() || !(w[1].time() >= w[0].time()) {
            return Err(Error::InvalidArgument(
                "snapshots must share a dimension and be ordered in time".into(),
            ));
        }
    }
    let t0 = first.time();
    trajectory
        .iter()
        .enumerate()
        .map(|(k, e)| {
            let tk = e.time();
            let mut integral = 0.0;
            if let Some(c) = &coll {
                for l in 0..k {
                    let ds = trajectory[l + 1].time() - trajectory[l].time();
                    let tau = tk - trajectory[l].time();
                    integral += ds * collision_pairing(&trajectory[l], psi, tau, c.kernel, c.samples);
                }
            }
            Ok(ResidualPoint {
                t: tk,
                value: pairing(e, psi) - transported_pairing(first, psi, tk - t0) - integral,
            })
        })
        .collect()
}
