//! Stability experiments: two coupled runs started `epsilon` apart, their
//! shifted W1 distance over time, and a Gronwall/Osgood majorant with a
//! rate constant fitted on calibration seeds.

use std::io::Write;

use rand::Rng;

use super::moments::{moment_c_gamma, moment_report, second_moment, MomentReport};
use super::osgood::{loglinear_phi, osgood_closed_form, OsgoodSpec, RateFunction};
use crate::csv::fmt_f64;
use crate::error::{Error, Result};
use crate::geometry::snap_velocity;
use crate::kernels::sample_xi;
use crate::particles::{
    energy_bound_cap, init_ensemble, run_coupled, run_simulation, Ensemble, RateCap, SimConfig, Simulation,
};
use crate::rng::substream;
use crate::transport::{paired_cost, w1_shifted, DiscreteMeasure};

/// Stream coordinate for the initial perturbation.
const PERTURB_STREAM: u64 = u64::MAX - 2;

/// Seed offset of the second run in independent mode.
const INDEPENDENT_SALT: u64 = 0x9e37_79b9_7f4a_7c15;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CouplingMode {
    /// Both runs share the collision randomness, with deflection angles
    /// aligned by the Tanaka shift; distances are bounded by the atom-paired
    /// cost.
    CommonRandomNumbers,
    /// Independent randomness; distances are exact optimal transport values.
    Independent,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StabilityConfig {
    /// Simulation of the first run; the second starts from its perturbation.
    pub sim: SimConfig,
    pub epsilon: f64,
    pub coupling: CouplingMode,
    /// Snapshot times, sorted, starting at 0.
    pub times: Vec<f64>,
    pub delta: f64,
    /// Cap of the singular moment estimator.
    pub lambda_cap: f64,
    /// Grid points per axis added to the singular moment probes.
    pub probe_grid: usize,
    /// Seeds whose runs calibrate the rate constant.
    pub calibration_seeds: Vec<u64>,
}

impl StabilityConfig {
    pub fn validate(&self) -> Result<()> {
        self.sim.validate()?;
        if !(self.epsilon >= 0.0) || !self.epsilon.is_finite() {
            return Err(Error::Config(format!("epsilon = {} must be >= 0", self.epsilon)));
        }
        if !(self.delta > 0.0) {
            return Err(Error::Config(format!("delta = {} must be > 0", self.delta)));
        }
        if self.times.first() != Some(&0.0) {
            return Err(Error::Config("snapshot times must start at 0".into()));
        }
        let gamma = self.sim.kernel.sigma().gamma();
        if gamma < 0.0 && !(self.lambda_cap > 0.0) {
            return Err(Error::Config(format!(
                "gamma = {gamma} needs a positive singular-moment cap, got {}",
                self.lambda_cap
            )));
        }
        if gamma > 2.0 || gamma <= -(self.sim.kernel.dim() as f64) {
            return Err(Error::Config(format!("gamma = {gamma} outside the supported range")));
        }
        Ok(())
    }
}

/// Regime-dependent majorant of the distance series.
#[derive(Debug, Clone, PartialEq)]
pub enum MajorantModel {
    /// `rho' = K m rho (1 + |ln rho|)`.
    LogLinear { m: f64 },
    /// `a exp(K I(t))` with `I(t) = int_0^t (1 + Lambda) ds` on the snapshot grid.
    ExpLambda { integral: Vec<f64> },
}

impl MajorantModel {
    fn evaluate(&self, a: f64, k: f64, times: &[f64], idx: usize) -> Result<f64> {
        match self {
            MajorantModel::LogLinear { m } => {
                let horizon = *times.last().expect("non-empty");
                let spec = OsgoodSpec {
                    a,
                    g: RateFunction::LogLinear(k * m),
                    horizon,
                };
                osgood_closed_form(&spec, times[idx])
            }
            MajorantModel::ExpLambda { integral } => Ok(a * (k * integral[idx]).exp()),
        }
    }

    /// Per-snapshot lower bound on `K` making the majorant reach `w` at `idx`
    /// (`None` when it carries no information), with the regressor used by
    /// the least-squares fit: `(y, x)` with `y = K x`.
    fn k_point(&self, a: f64, w: f64, times: &[f64], idx: usize) -> Option<(f64, f64)> {
        if a <= 0.0 || w <= 0.0 || times[idx] <= 0.0 {
            return None;
        }
        match self {
            MajorantModel::LogLinear { m } => {
                (*m > 0.0).then(|| (loglinear_phi(w) - loglinear_phi(a), m * times[idx]))
            }
            MajorantModel::ExpLambda { integral } => {
                (integral[idx] > 0.0).then(|| ((w / a).ln(), integral[idx]))
            }
        }
    }
}

/// Raw output of one coupled pair of runs.
#[derive(Debug, Clone, PartialEq)]
pub struct PairRun {
    pub seed: u64,
    pub times: Vec<f64>,
    pub w1: Vec<f64>,
    pub moments_mu: Vec<MomentReport>,
    pub moments_nu: Vec<MomentReport>,
    /// Singular moment of `mu_t + nu_t`, `NaN` for `gamma >= 0`.
    pub lambda: Vec<f64>,
    pub second_moment: Vec<f64>,
    pub model: MajorantModel,
    /// Shared collision majorant of both runs; `NaN` when it is recomputed
    /// every step.
    pub cap: f64,
}

impl PairRun {
    /// Initial value of the majorant.
    pub fn a(&self) -> f64 {
        self.w1[0]
    }

    pub fn majorant(&self, k: f64) -> Result<Vec<f64>> {
        (0..self.times.len())
            .map(|i| self.model.evaluate(self.a(), k, &self.times, i))
            .collect()
    }
}

/// Perturb every atom by `epsilon (a_i eta_r, (1 - a_i) eta_v)` with unit
/// directions `eta` and `a_i` uniform, so that the atom-paired cost is at
/// most `epsilon` (up to velocity rounding).
pub fn perturb_ensemble(e: &Ensemble, epsilon: f64, seed: u64) -> Result<Ensemble> {
    let d = e.dim();
    let parts = e
        .particles()
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let mut rng = substream(seed, PERTURB_STREAM, i as u64);
            let a: f64 = rng.random();
            let eta_r = sample_xi(d + 1, &mut rng);
            let eta_v = sample_xi(d + 1, &mut rng);
            let mut q = *p;
            q.r = p.r.axpy(epsilon * a, &eta_r);
            q.v = snap_velocity(&p.v.axpy(epsilon * (1.0 - a), &eta_v));
            q
        })
        .collect();
    let mut out = Ensemble::new(d, parts)?;
    out.set_time(e.time());
    Ok(out)
}

/// Moments of one measure, without the singular functional.
fn single_moments(m: &DiscreteMeasure, gamma: f64, delta: f64) -> Result<MomentReport> {
    Ok(MomentReport {
        c_gamma: moment_c_gamma(m, gamma.max(-1.0), delta)?,
        lambda: None,
        second_moment: second_moment(m),
        delta,
    })
}

fn integrate_trapezoid(times: &[f64], values: &[f64]) -> Vec<f64> {
    let mut acc = vec![0.0; times.len()];
    for k in 1..times.len() {
        acc[k] = acc[k - 1] + 0.5 * (times[k] - times[k - 1]) * (values[k] + values[k - 1]);
    }
    acc
}

/// Simulate both runs of a pair with seed `seed`.
pub fn run_pair(cfg: &StabilityConfig, seed: u64) -> Result<PairRun> {
    cfg.validate()?;
    let mut sim_cfg = cfg.sim.clone();
    sim_cfg.seed = seed;
    let mu0 = init_ensemble(&sim_cfg)?;
    let nu0 = perturb_ensemble(&mu0, cfg.epsilon, seed)?;
    let kernel = sim_cfg.kernel.clone();
    // One majorant for both runs so that candidates coincide; `Auto` is
    // shared step by step inside the coupled stepper.
    let cap = match sim_cfg.rate_cap {
        RateCap::Fixed(c) => c,
        RateCap::Auto => f64::NAN,
        RateCap::EnergyBound => energy_bound_cap(&kernel, &mu0).max(energy_bound_cap(&kernel, &nu0)),
    };
    if !cap.is_nan() {
        sim_cfg.rate_cap = RateCap::Fixed(cap);
    }
    let mut nu_cfg = sim_cfg.clone();
    if cfg.coupling == CouplingMode::Independent {
        nu_cfg.seed = seed ^ INDEPENDENT_SALT;
    }
    let mut sim_mu = Simulation::from_ensemble(sim_cfg, mu0)?;
    let mut sim_nu = Simulation::from_ensemble(nu_cfg, nu0)?;
    let (snaps_mu, snaps_nu): (Vec<_>, Vec<_>) = match cfg.coupling {
        CouplingMode::CommonRandomNumbers => run_coupled(&mut sim_mu, &mut sim_nu, &cfg.times)?
            .into_iter()
            .unzip(),
        CouplingMode::Independent => (
            run_simulation(&mut sim_mu, &cfg.times)?,
            run_simulation(&mut sim_nu, &cfg.times)?,
        ),
    };

    let gamma = kernel.sigma().gamma();
    let mut w1 = Vec::new();
    let mut moments_mu = Vec::new();
    let mut moments_nu = Vec::new();
    let mut lambda = Vec::new();
    let mut second_moment = Vec::new();
    for (em, en) in snaps_mu.iter().zip(&snaps_nu) {
        let t = em.time();
        let mu = DiscreteMeasure::from_ensemble(em);
        let nu = DiscreteMeasure::from_ensemble(en);
        w1.push(match cfg.coupling {
            CouplingMode::CommonRandomNumbers => paired_cost(&mu, &nu, t)?,
            CouplingMode::Independent => w1_shifted(&mu, &nu, t)?.0,
        });
        let rm = single_moments(&mu, gamma, cfg.delta)?;
        let rn = single_moments(&nu, gamma, cfg.delta)?;
        let joint = if gamma < 0.0 {
            moment_report(&[&mu, &nu], gamma, cfg.delta, cfg.probe_grid, cfg.lambda_cap)?
                .lambda
                .map_or(f64::NAN, |l| l.value)
        } else {
            f64::NAN
        };
        second_moment.push(rm.second_moment + rn.second_moment);
        moments_mu.push(rm);
        moments_nu.push(rn);
        lambda.push(joint);
    }

    let times: Vec<f64> = snaps_mu.iter().map(|e| e.time()).collect();
    let sup_c = moments_mu
        .iter()
        .zip(&moments_nu)
        .map(|(a, b)| a.c_gamma + b.c_gamma)
        .fold(0.0, f64::max);
    let model = if gamma >= 0.0 {
        MajorantModel::LogLinear { m: sup_c }
    } else if gamma > -1.0 {
        let sup_l = lambda.iter().copied().fold(0.0, f64::max);
        MajorantModel::LogLinear { m: sup_c * sup_l }
    } else {
        let integrand: Vec<f64> = lambda.iter().map(|l| 1.0 + l).collect();
        MajorantModel::ExpLambda {
            integral: integrate_trapezoid(&times, &integrand),
        }
    };
    Ok(PairRun {
        seed,
        times,
        w1,
        moments_mu,
        moments_nu,
        lambda,
        second_moment,
        model,
        cap,
    })
}

/// Fitted rate constant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KFit {
    /// Twice the smallest constant that majorizes every calibration series.
    pub k: f64,
    /// Least squares through the origin on the first half of the horizon;
    /// reported for comparison only.
    pub k_ls: f64,
}

/// Safety factor applied to the calibration envelope.
pub const K_SAFETY: f64 = 2.0;

pub fn fit_k(runs: &[PairRun]) -> KFit {
    let mut envelope: f64 = 0.0;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for run in runs {
        let horizon = run.times.last().copied().unwrap_or(0.0);
        for idx in 0..run.times.len() {
            if let Some((y, x)) = run.model.k_point(run.a(), run.w1[idx], &run.times, idx) {
                envelope = envelope.max(y / x);
                if run.times[idx] <= 0.5 * horizon {
                    sxy += x * y;
                    sxx += x * x;
                }
            }
        }
    }
    KFit {
        k: K_SAFETY * envelope,
        k_ls: if sxx > 0.0 { sxy / sxx } else { 0.0 },
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StabilityRow {
    pub t: f64,
    pub w1_shifted: f64,
    pub majorant: f64,
    pub c_gamma_mu: f64,
    pub c_gamma_nu: f64,
    pub lambda: f64,
    pub second_moment: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StabilityReport {
    pub seed: u64,
    pub fit: KFit,
    pub rows: Vec<StabilityRow>,
}

impl StabilityReport {
    /// True when the distance stays below the majorant at every snapshot.
    pub fn bounded(&self) -> bool {
        self.rows.iter().all(|r| r.w1_shifted <= r.majorant)
    }
}

/// Assemble report rows for `run` under rate constant `k`.
pub fn report_rows(run: &PairRun, k: f64) -> Result<Vec<StabilityRow>> {
    let maj = run.majorant(k)?;
    Ok((0..run.times.len())
        .map(|i| StabilityRow {
            t: run.times[i],
            w1_shifted: run.w1[i],
            majorant: maj[i],
            c_gamma_mu: run.moments_mu[i].c_gamma,
            c_gamma_nu: run.moments_nu[i].c_gamma,
            lambda: run.lambda[i],
            second_moment: run.second_moment[i],
        })
        .collect())
}

/// Calibrate `K` on `cfg.calibration_seeds`, then run `cfg.sim.seed` and
/// compare its distance series with the fitted majorant.
pub fn stability_experiment(cfg: &StabilityConfig) -> Result<StabilityReport> {
    cfg.validate()?;
    let calib = cfg
        .calibration_seeds
        .iter()
        .map(|&s| run_pair(cfg, s))
        .collect::<Result<Vec<_>>>()?;
    let fit = fit_k(&calib);
    let run = run_pair(cfg, cfg.sim.seed)?;
    Ok(StabilityReport {
        seed: cfg.sim.seed,
        fit,
        rows: report_rows(&run, fit.k)?,
    })
}

pub const STABILITY_HEADER: &str = "t,w1_shifted,majorant,c_gamma_mu,c_gamma_nu,lambda,second_moment";

pub fn write_stability_report<W: Write>(mut w: W, rows: &[StabilityRow]) -> Result<()> {
    writeln!(w, "{STABILITY_HEADER}")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{},{},{}",
            fmt_f64(r.t),
            fmt_f64(r.w1_shifted),
            fmt_f64(r.majorant),
            fmt_f64(r.c_gamma_mu),
            fmt_f64(r.c_gamma_nu),
            fmt_f64(r.lambda),
            fmt_f64(r.second_moment)
        )?;
    }
    Ok(())
}
