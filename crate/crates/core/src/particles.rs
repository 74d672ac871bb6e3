//! N-particle approximation of the Enskog dynamics.
//!
//! Each time step applies free transport `r <- r + dt v` followed by
//! stochastic binary collisions. An unordered pair `(i, j)` collides at rate
//! `sigma(|v_i - v_j|) beta(r_i - r_j) |Q_eps| |S^{d-2}| / N`; collisions are
//! drawn by uniformization: `M ~ Poisson(dt (N-1) cap / 2)` candidate pairs
//! are picked uniformly and each is accepted with probability `rate / cap`.
//!
//! All randomness of candidate `k` in step `s` comes from the substream
//! `(seed, s, k)`, independent of particle states. Two simulations with the
//! same seed and cap therefore share their candidates (common random
//! numbers), and generating candidates in parallel cannot change results.

use std::io::Write;

use rand::Rng;
use rand_distr::{Distribution, Normal, Poisson};
use rayon::prelude::*;

use crate::csv::{fmt_f64, indexed_columns};
use crate::error::{Error, Result};
use crate::geometry::{self, AngleParam, VELOCITY_QUANTUM};
use crate::kernels::{sample_xi, KernelSpec};
use crate::rng::substream;
use crate::vector::Vector;

/// Stream coordinate reserved for initial draws.
const INIT_STREAM: u64 = u64::MAX;
/// Candidate coordinate reserved for the per-step candidate count.
const COUNT_STREAM: u64 = u64::MAX;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Particle {
    pub r: Vector,
    pub v: Vector,
}

/// Ordered particle list with a common clock.
#[derive(Debug, Clone, PartialEq)]
pub struct Ensemble {
    dim: usize,
    time: f64,
    particles: Vec<Particle>,
}

impl Ensemble {
    pub fn new(dim: usize, particles: Vec<Particle>) -> Result<Self> {
        if particles.is_empty() {
            return Err(Error::InvalidArgument("an ensemble needs N >= 1".into()));
        }
        for p in &particles {
            if p.r.dim() != dim || p.v.dim() != dim {
                return Err(Error::InvalidArgument(format!(
                    "particle dimension differs from {dim}"
                )));
            }
            if !p.r.is_finite() || !p.v.is_finite() {
                return Err(Error::InvalidArgument("non-finite particle state".into()));
            }
        }
        Ok(Ensemble {
            dim,
            time: 0.0,
            particles,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.particles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.particles.is_empty()
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn set_time(&mut self, t: f64) {
        self.time = t;
    }

    pub fn particles(&self) -> &[Particle] {
        &self.particles
    }

    pub fn particles_mut(&mut self) -> &mut [Particle] {
        &mut self.particles
    }

    /// `r <- r + dt v` for every particle; velocities are untouched.
    pub fn free_transport(&mut self, dt: f64) -> Result<()> {
        if !(dt >= 0.0) {
            return Err(Error::InvalidArgument(format!("dt = {dt} must be >= 0")));
        }
        for p in &mut self.particles {
            p.r = p.r.axpy(dt, &p.v);
        }
        self.time += dt;
        Ok(())
    }

    pub fn conserved_quantities(&self) -> ConservedQuantities {
        conserved_quantities(self)
    }

    /// Largest particle speed.
    pub fn max_speed(&self) -> f64 {
        self.particles.iter().map(|p| p.v.norm()).fold(0.0, f64::max)
    }

    /// `sum_i |v_i|^2`, compensated.
    pub fn kinetic_sum(&self) -> f64 {
        neumaier_sum(self.particles.iter().map(|p| p.v.norm_sq()))
    }
}

/// Mass, mean momentum and mean kinetic energy of an empirical measure.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConservedQuantities {
    pub mass: f64,
    pub momentum: Vector,
    pub energy: f64,
}

/// `mass = 1`, `momentum = (1/N) sum v_i`, `energy = (1/N) sum |v_i|^2`.
///
/// When every velocity is on the collision lattice the momentum is summed
/// in integer arithmetic, so it is a function of the exact velocity sum and
/// therefore bitwise invariant under collisions.
pub fn conserved_quantities(e: &Ensemble) -> ConservedQuantities {
    let n = e.len() as f64;
    let d = e.dim();
    let mut momentum = Vector::zeros(d);
    let on_lattice = e.particles.iter().all(|p| geometry::is_lattice_velocity(&p.v));
    for k in 0..d {
        momentum[k] = if on_lattice {
            let total: i128 = e
                .particles
                .iter()
                .map(|p| (p.v[k] / VELOCITY_QUANTUM) as i64 as i128)
                .sum();
            total as f64 * VELOCITY_QUANTUM / n
        } else {
            neumaier_sum(e.particles.iter().map(|p| p.v[k])) / n
        };
    }
    ConservedQuantities {
        mass: 1.0,
        momentum,
        energy: e.kinetic_sum() / n,
    }
}

/// Compensated (Neumaier) summation.
pub fn neumaier_sum<I: IntoIterator<Item = f64>>(xs: I) -> f64 {
    let mut sum = 0.0;
    let mut c = 0.0;
    for x in xs {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            c += (sum - t) + x;
        } else {
            c += (x - t) + sum;
        }
        sum = t;
    }
    sum + c
}

/// Initial law; particles are drawn independently.
#[derive(Debug, Clone, PartialEq)]
pub enum InitSpec {
    /// Every particle at `(r, v)`.
    Point { r: Vec<f64>, v: Vec<f64> },
    /// Independent isotropic Gaussians in position and velocity.
    Gaussian {
        r_mean: Vec<f64>,
        r_std: f64,
        v_mean: Vec<f64>,
        v_std: f64,
    },
    /// Position uniform in a ball, velocity Gaussian.
    UniformBallGaussian {
        center: Vec<f64>,
        radius: f64,
        v_mean: Vec<f64>,
        v_std: f64,
    },
    /// Even-indexed particles around `(+r_offset, +v_offset)`, odd-indexed
    /// around `(-r_offset, -v_offset)`, with Gaussian spreads.
    TwoCluster {
        r_offset: Vec<f64>,
        r_std: f64,
        v_offset: Vec<f64>,
        v_std: f64,
    },
}

impl InitSpec {
    pub fn validate(&self, dim: usize) -> Result<()> {
        let (vectors, scales): (Vec<&Vec<f64>>, Vec<f64>) = match self {
            InitSpec::Point { r, v } => (vec![r, v], vec![]),
            InitSpec::Gaussian {
                r_mean,
                r_std,
                v_mean,
                v_std,
            } => (vec![r_mean, v_mean], vec![*r_std, *v_std]),
            InitSpec::UniformBallGaussian {
                center,
                radius,
                v_mean,
                v_std,
            } => (vec![center, v_mean], vec![*radius, *v_std]),
            InitSpec::TwoCluster {
                r_offset,
                r_std,
                v_offset,
                v_std,
            } => (vec![r_offset, v_offset], vec![*r_std, *v_std]),
        };
        if vectors.iter().any(|x| x.len() != dim) {
            return Err(Error::Config(format!("init vectors must have length {dim}")));
        }
        if vectors.iter().any(|x| x.iter().any(|c| !c.is_finite())) {
            return Err(Error::Config("init vectors must be finite".into()));
        }
        if scales.iter().any(|s| !(*s >= 0.0) || !s.is_finite()) {
            return Err(Error::Config("init spreads must be finite and >= 0".into()));
        }
        Ok(())
    }

    fn draw<R: Rng + ?Sized>(&self, index: usize, dim: usize, rng: &mut R) -> Particle {
        let normal = Normal::new(0.0, 1.0).expect("unit normal");
        let mut gauss = |mean: &[f64], std: f64, sign: f64| {
            let mut x = Vector::zeros(dim);
            for k in 0..dim {
                x[k] = sign * mean[k] + std * normal.sample(rng);
            }
            x
        };
        match self {
            InitSpec::Point { r, v } => Particle {
                r: Vector::from_slice(r),
                v: Vector::from_slice(v),
            },
            InitSpec::Gaussian {
                r_mean,
                r_std,
                v_mean,
                v_std,
            } => {
                let r = gauss(r_mean, *r_std, 1.0);
                let v = gauss(v_mean, *v_std, 1.0);
                Particle { r, v }
            }
            InitSpec::UniformBallGaussian {
                center,
                radius,
                v_mean,
                v_std,
            } => {
                let v = gauss(v_mean, *v_std, 1.0);
                // Direction from a Gaussian, radius by the inverse CDF r^d.
                let dir = loop {
                    let g = gauss(&vec![0.0; dim], 1.0, 1.0);
                    let n = g.norm();
                    if n > 1e-12 {
                        break g * (1.0 / n);
                    }
                };
                let u: f64 = rng.random();
                let r = Vector::from_slice(center) + dir * (radius * u.powf(1.0 / dim as f64));
                Particle { r, v }
            }
            InitSpec::TwoCluster {
                r_offset,
                r_std,
                v_offset,
                v_std,
            } => {
                let sign = if index % 2 == 0 { 1.0 } else { -1.0 };
                let r = gauss(r_offset, *r_std, sign);
                let v = gauss(v_offset, *v_std, sign);
                Particle { r, v }
            }
        }
    }
}

/// Majorant policy for the uniformized collision sampler. Caps bound
/// `sigma(|v - u|) beta(r - q) |Q_eps| |S^{d-2}|` over all pairs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RateCap {
    /// A fixed majorant; `Fixed(0.0)` switches collisions off.
    Fixed(f64),
    /// Recomputed each step from the current maximal speed.
    Auto,
    /// Computed once from the conserved kinetic energy, using
    /// `|v_i - v_j|^2 <= 2 sum_k |v_k|^2`. Independent of the trajectory,
    /// which keeps common-random-number couplings exact.
    EnergyBound,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub n: usize,
    pub dt: f64,
    pub t_end: f64,
    pub seed: u64,
    pub kernel: KernelSpec,
    pub init: InitSpec,
    pub rate_cap: RateCap,
    /// Worker threads for candidate generation; results do not depend on it.
    pub threads: usize,
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::Config("N must be >= 1".into()));
        }
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(Error::Config(format!("dt = {} must be > 0", self.dt)));
        }
        if !(self.t_end >= 0.0) || !self.t_end.is_finite() {
            return Err(Error::Config(format!("t_end = {} must be >= 0", self.t_end)));
        }
        if let RateCap::Fixed(c) = self.rate_cap {
            if !(c >= 0.0) || !c.is_finite() {
                return Err(Error::Config(format!("rate cap {c} must be finite and >= 0")));
            }
        }
        self.init.validate(self.kernel.dim())
    }

    /// Number of steps to reach `t_end`.
    pub fn steps(&self) -> u64 {
        (self.t_end / self.dt).round() as u64
    }
}

/// Draw the initial ensemble. Particle `i` uses its own substream, and
/// velocities are rounded to the collision lattice.
pub fn init_ensemble(cfg: &SimConfig) -> Result<Ensemble> {
    cfg.validate()?;
    let d = cfg.kernel.dim();
    let particles = (0..cfg.n)
        .map(|i| {
            let mut rng = substream(cfg.seed, INIT_STREAM, i as u64);
            let mut p = cfg.init.draw(i, d, &mut rng);
            p.v = geometry::snap_velocity(&p.v);
            p
        })
        .collect();
    Ensemble::new(d, particles)
}

/// Pre-drawn randomness of one collision candidate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Candidate {
    pub i: usize,
    pub j: usize,
    /// Acceptance uniform in [0, 1).
    pub u: f64,
    pub angles: AngleParam,
}

/// Outcome of one collision step.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EventLog {
    pub step: u64,
    pub candidates: usize,
    /// Accepted collisions `(i, j)` in application order.
    pub accepted: Vec<(usize, usize)>,
    /// Candidates whose cross-section hit the `z_min` cap.
    pub capped: usize,
}

/// Per-pair majorant for the energy-bound policy.
pub fn energy_bound_cap(kernel: &KernelSpec, e: &Ensemble) -> f64 {
    // Slack covers the rounding drift of the kinetic sum.
    let z_max = (2.0 * e.kinetic_sum()).sqrt() * (1.0 + 1e-9);
    kernel.sigma().sup_capped(z_max, kernel.z_min()) * kernel.total_angular_rate()
}

/// Per-pair majorant from the current maximal speed.
pub fn speed_bound_cap(kernel: &KernelSpec, e: &Ensemble) -> f64 {
    let z_max = 2.0 * e.max_speed() * (1.0 + 1e-12);
    kernel.sigma().sup_capped(z_max, kernel.z_min()) * kernel.total_angular_rate()
}

/// Draw the candidates of step `step` for `n` particles under majorant `cap`.
pub fn draw_candidates(
    kernel: &KernelSpec,
    seed: u64,
    step: u64,
    n: usize,
    dt: f64,
    cap: f64,
) -> Result<Vec<Candidate>> {
    if n < 2 || cap == 0.0 {
        return Ok(Vec::new());
    }
    let lambda = dt * (n as f64 - 1.0) * cap * 0.5;
    let mut count_rng = substream(seed, step, COUNT_STREAM);
    let m = Poisson::new(lambda)
        .map_err(|e| Error::InvalidArgument(format!("candidate intensity {lambda}: {e}")))?
        .sample(&mut count_rng) as u64;
    let angular = kernel.angular();
    let d = kernel.dim();
    (0..m)
        .into_par_iter()
        .map(|k| {
            let mut rng = substream(seed, step, k);
            let i = rng.random_range(0..n);
            let mut j = rng.random_range(0..n - 1);
            if j >= i {
                j += 1;
            }
            let u = rng.random::<f64>();
            let theta = angular.sample_theta(&mut rng)?;
            let xi = sample_xi(d, &mut rng);
            Ok(Candidate {
                i: i.min(j),
                j: i.max(j),
                u,
                angles: AngleParam::new(theta, xi)?,
            })
        })
        .collect()
}

/// Apply candidates in order: each is accepted with probability
/// `rate / cap` evaluated on the current velocities.
pub fn apply_candidates(
    e: &mut Ensemble,
    kernel: &KernelSpec,
    cap: f64,
    step: u64,
    candidates: &[Candidate],
) -> Result<EventLog> {
    let mut log = EventLog {
        step,
        candidates: candidates.len(),
        ..EventLog::default()
    };
    for c in candidates {
        if accepts(e, kernel, cap, step, c, &mut log)? {
            collide(e, c, &c.angles);
        }
    }
    Ok(log)
}

/// Acceptance test of candidate `c` against the current state.
fn accepts(
    e: &Ensemble,
    kernel: &KernelSpec,
    cap: f64,
    step: u64,
    c: &Candidate,
    log: &mut EventLog,
) -> Result<bool> {
    let (pi, pj) = (&e.particles[c.i], &e.particles[c.j]);
    let dr = pi.r - pj.r;
    let speed = (pi.v - pj.v).norm();
    let (sb, capped) = kernel.pair_rate(dr.norm_sq(), speed);
    if capped {
        log.capped += 1;
    }
    let rate = sb * kernel.total_angular_rate();
    if rate > cap * (1.0 + 1e-12) {
        return Err(Error::MajorantViolation {
            step,
            i: c.i,
            j: c.j,
            rate,
            cap,
        });
    }
    let accepted = rate > 0.0 && c.u * cap < rate;
    if accepted {
        log.accepted.push((c.i, c.j));
    }
    Ok(accepted)
}

fn collide(e: &mut Ensemble, c: &Candidate, angles: &AngleParam) {
    let (vs, us) = geometry::deflect(&e.particles[c.i].v, &e.particles[c.j].v, angles);
    e.particles[c.i].v = vs;
    e.particles[c.j].v = us;
}

/// Angles for the second run of a coupled pair: `xi` re-aligned by the
/// Tanaka shift from the relative velocity `x` of the first run to `y`.
fn aligned_angles(x: &Vector, y: &Vector, angles: &AngleParam) -> Result<AngleParam> {
    if x == y || x.norm_sq() == 0.0 || y.norm_sq() == 0.0 {
        return Ok(*angles);
    }
    let xi0 = geometry::tanaka_shift(x, y, angles.xi())?;
    AngleParam::new(angles.theta(), xi0)
}

/// Stepper for one trajectory: transport then collisions per step.
pub struct Simulation {
    cfg: SimConfig,
    ensemble: Ensemble,
    step: u64,
    fixed_cap: Option<f64>,
    pool: Option<rayon::ThreadPool>,
    collisions: u64,
    capped: u64,
}

impl Simulation {
    pub fn new(cfg: SimConfig) -> Result<Self> {
        let ensemble = init_ensemble(&cfg)?;
        Self::from_ensemble(cfg, ensemble)
    }

    /// Start from a given ensemble; `cfg.n` and `cfg.init` are ignored.
    pub fn from_ensemble(cfg: SimConfig, ensemble: Ensemble) -> Result<Self> {
        if ensemble.dim() != cfg.kernel.dim() {
            return Err(Error::Config("ensemble and kernel dimensions differ".into()));
        }
        if !(cfg.dt > 0.0) {
            return Err(Error::Config(format!("dt = {} must be > 0", cfg.dt)));
        }
        let fixed_cap = match cfg.rate_cap {
            RateCap::Fixed(c) => Some(c),
            RateCap::Auto => None,
            RateCap::EnergyBound => Some(energy_bound_cap(&cfg.kernel, &ensemble)),
        };
        let pool = if cfg.threads > 1 {
            Some(
                rayon::ThreadPoolBuilder::new()
                    .num_threads(cfg.threads)
                    .build()
                    .map_err(|e| Error::Config(format!("thread pool: {e}")))?,
            )
        } else {
            None
        };
        Ok(Simulation {
            cfg,
            ensemble,
            step: 0,
            fixed_cap,
            pool,
            collisions: 0,
            capped: 0,
        })
    }

    pub fn config(&self) -> &SimConfig {
        &self.cfg
    }

    pub fn ensemble(&self) -> &Ensemble {
        &self.ensemble
    }

    pub fn into_ensemble(self) -> Ensemble {
        self.ensemble
    }

    pub fn steps_done(&self) -> u64 {
        self.step
    }

    pub fn total_collisions(&self) -> u64 {
        self.collisions
    }

    /// Candidates whose cross-section was capped at `z_min`.
    pub fn total_capped(&self) -> u64 {
        self.capped
    }

    /// Majorant used in the next step.
    pub fn current_cap(&self) -> f64 {
        self.fixed_cap
            .unwrap_or_else(|| speed_bound_cap(&self.cfg.kernel, &self.ensemble))
    }

    /// Advance by one step of length `dt`.
    pub fn step(&mut self) -> Result<EventLog> {
        let dt = self.cfg.dt;
        self.ensemble.free_transport(dt)?;
        let cap = self.current_cap();
        let n = self.ensemble.len();
        let (kernel, seed, step) = (&self.cfg.kernel, self.cfg.seed, self.step);
        let candidates = match &self.pool {
            Some(pool) => pool.install(|| draw_candidates(kernel, seed, step, n, dt, cap))?,
            None => draw_candidates(kernel, seed, step, n, dt, cap)?,
        };
        let log = apply_candidates(&mut self.ensemble, kernel, cap, step, &candidates)?;
        self.step += 1;
        // Avoid clock drift from repeated addition.
        self.ensemble.time = self.step as f64 * dt;
        self.collisions += log.accepted.len() as u64;
        self.capped += log.capped as u64;
        Ok(log)
    }
}

/// Advance two simulations that share their collision randomness.
///
/// Candidates are drawn once from the first run's stream and tested against
/// each state with the same uniform, under a common majorant (the fixed cap,
/// or for [`RateCap::Auto`] the larger of the two speed bounds). When both runs accept, the second run
/// deflects with the Tanaka-shifted angle, so nearby velocity pairs are
/// deflected to nearby outcomes. For fixed relative velocities the shift is
/// a volume-preserving bijection of the sphere, so each run on its own is
/// still distributed as an unpaired simulation.
pub fn step_coupled(a: &mut Simulation, b: &mut Simulation) -> Result<(EventLog, EventLog)> {
    let (ca, cb) = (&a.cfg, &b.cfg);
    if ca.seed != cb.seed || ca.dt != cb.dt || a.step != b.step || a.ensemble.len() != b.ensemble.len() {
        return Err(Error::Config(
            "coupled runs need equal seed, dt, step and particle count".into(),
        ));
    }
    let dt = ca.dt;
    a.ensemble.free_transport(dt)?;
    b.ensemble.free_transport(dt)?;
    let cap = match (a.fixed_cap, b.fixed_cap) {
        (Some(x), Some(y)) if x == y => x,
        (None, None) => a.current_cap().max(b.current_cap()),
        _ => return Err(Error::Config("coupled runs need a shared rate cap policy".into())),
    };
    let n = a.ensemble.len();
    let (seed, step) = (ca.seed, a.step);
    let candidates = match &a.pool {
        Some(pool) => pool.install(|| draw_candidates(&a.cfg.kernel, seed, step, n, dt, cap))?,
        None => draw_candidates(&a.cfg.kernel, seed, step, n, dt, cap)?,
    };
    let mut log_a = EventLog {
        step,
        candidates: candidates.len(),
        ..EventLog::default()
    };
    let mut log_b = log_a.clone();
    for c in &candidates {
        let x = a.ensemble.particles[c.j].v - a.ensemble.particles[c.i].v;
        let y = b.ensemble.particles[c.j].v - b.ensemble.particles[c.i].v;
        let hit_a = accepts(&a.ensemble, &a.cfg.kernel, cap, step, c, &mut log_a)?;
        let hit_b = accepts(&b.ensemble, &b.cfg.kernel, cap, step, c, &mut log_b)?;
        if hit_a {
            collide(&mut a.ensemble, c, &c.angles);
        }
        if hit_b {
            let angles = if hit_a { aligned_angles(&x, &y, &c.angles)? } else { c.angles };
            collide(&mut b.ensemble, c, &angles);
        }
    }
    for (sim, log) in [(&mut *a, &log_a), (&mut *b, &log_b)] {
        sim.step += 1;
        sim.ensemble.time = sim.step as f64 * dt;
        sim.collisions += log.accepted.len() as u64;
        sim.capped += log.capped as u64;
    }
    Ok((log_a, log_b))
}

/// Coupled analogue of [`run_simulation`]; snapshot steps follow the first run.
pub fn run_coupled(
    a: &mut Simulation,
    b: &mut Simulation,
    snapshot_times: &[f64],
) -> Result<Vec<(Ensemble, Ensemble)>> {
    let targets = snapshot_steps(&a.cfg, snapshot_times)?;
    let mut out = Vec::with_capacity(targets.len());
    let mut next = 0;
    while next < targets.len() {
        if targets[next] == a.steps_done() {
            out.push((a.ensemble().clone(), b.ensemble().clone()));
            next += 1;
        } else {
            step_coupled(a, b)?;
        }
    }
    Ok(out)
}

/// Run from `0` to `t_end`, returning copies of the ensemble at the steps
/// nearest to each requested time.
pub fn run(cfg: &SimConfig, snapshot_times: &[f64]) -> Result<Vec<Ensemble>> {
    let mut sim = Simulation::new(cfg.clone())?;
    run_simulation(&mut sim, snapshot_times)
}

/// Like [`run`] but for an already constructed simulation.
pub fn run_simulation(sim: &mut Simulation, snapshot_times: &[f64]) -> Result<Vec<Ensemble>> {
    let cfg = sim.config().clone();
    let targets = snapshot_steps(&cfg, snapshot_times)?;
    let mut out = Vec::with_capacity(targets.len());
    let mut next = 0;
    while next < targets.len() {
        if targets[next] == sim.steps_done() {
            out.push(sim.ensemble().clone());
            next += 1;
        } else {
            sim.step()?;
        }
    }
    Ok(out)
}

/// Step indices of snapshot times; times must be sorted within `[0, t_end]`.
pub fn snapshot_steps(cfg: &SimConfig, times: &[f64]) -> Result<Vec<u64>> {
    let horizon = cfg.steps();
    let mut last = f64::NEG_INFINITY;
    times
        .iter()
        .map(|&t| {
            if !(t >= last) {
                return Err(Error::InvalidArgument("snapshot times must be sorted".into()));
            }
            last = t;
            let k = (t / cfg.dt).round();
            if t < 0.0 || k as u64 > horizon || t > cfg.t_end + 0.5 * cfg.dt {
                return Err(Error::InvalidArgument(format!(
                    "snapshot time {t} outside [0, {}]",
                    cfg.t_end
                )));
            }
            Ok(k as u64)
        })
        .collect()
}

/// Header `t,particle_id,r1..rd,v1..vd`.
pub fn snapshot_header(d: usize) -> String {
    let mut cols = vec!["t".to_string(), "particle_id".to_string()];
    cols.extend(indexed_columns("r", d));
    cols.extend(indexed_columns("v", d));
    cols.join(",")
}

/// Write snapshots as CSV, one row per particle per snapshot.
pub fn write_snapshots<W: Write>(mut w: W, snapshots: &[Ensemble]) -> Result<()> {
    let Some(first) = snapshots.first() else {
        return Err(Error::InvalidArgument("no snapshots to write".into()));
    };
    writeln!(w, "{}", snapshot_header(first.dim()))?;
    for e in snapshots {
        let t = fmt_f64(e.time());
        for (id, p) in e.particles().iter().enumerate() {
            let mut line = format!("{t},{id}");
            for x in p.r.as_slice().iter().chain(p.v.as_slice()) {
                line.push(',');
                line.push_str(&fmt_f64(*x));
            }
            writeln!(w, "{line}")?;
        }
    }
    Ok(())
}
