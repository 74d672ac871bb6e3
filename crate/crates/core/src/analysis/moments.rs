//! Moment functionals of discrete measures and the coupling integrand.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::kernels::KernelSpec;
use crate::transport::{DiscreteMeasure, PhasePoint};
use crate::vector::Vector;

/// Plug-in estimate of `int (exp(delta |v|^{1+gamma}) + |r|^{1+delta}) dm`.
pub fn moment_c_gamma(m: &DiscreteMeasure, gamma: f64, delta: f64) -> Result<f64> {
    if !(delta > 0.0) || !delta.is_finite() {
        return Err(Error::InvalidArgument(format!("delta = {delta} must be > 0")));
    }
    if !(-1.0..=2.0).contains(&gamma) {
        return Err(Error::InvalidArgument(format!("gamma = {gamma} outside [-1, 2]")));
    }
    let mut total = 0.0;
    let mut worst = (0usize, f64::NEG_INFINITY);
    for (i, (p, w)) in m.points().iter().zip(m.weights()).enumerate() {
        let term = w * ((delta * p.v.norm().powf(1.0 + gamma)).exp() + p.r.norm().powf(1.0 + delta));
        if term > worst.1 || term.is_nan() {
            worst = (i, term);
        }
        total += term;
    }
    if !total.is_finite() {
        let (i, _) = worst;
        let p = &m.points()[i];
        return Err(Error::DivergentMeasure(format!(
            "exponential moment overflows at atom {i} (|r| = {}, |v| = {})",
            p.r.norm(),
            p.v.norm()
        )));
    }
    Ok(total)
}

/// `int |v|^2 dm`.
pub fn second_moment(m: &DiscreteMeasure) -> f64 {
    m.points()
        .iter()
        .zip(m.weights())
        .map(|(p, w)| w * p.v.norm_sq())
        .sum()
}

/// Capped estimate of `sup_u int |v - u|^gamma dm` over a probe set.
#[derive(Debug, Clone, PartialEq)]
pub struct LambdaEstimate {
    pub value: f64,
    /// Number of capped terms at the maximizing probe.
    pub cap_hits: usize,
    pub argmax: Vector,
    pub cap: f64,
    pub probes: usize,
}

/// `max_u sum_m sum_i w_i min(|v_i - u|^gamma, cap)` over `probes`, for the
/// sum of the given measures.
pub fn lambda_singular(
    measures: &[&DiscreteMeasure],
    gamma: f64,
    probes: &[Vector],
    cap: f64,
) -> Result<LambdaEstimate> {
    if !(gamma < 0.0) {
        return Err(Error::InvalidArgument(format!("gamma = {gamma} must be < 0")));
    }
    if !(cap > 0.0) {
        return Err(Error::InvalidArgument(format!("cap = {cap} must be > 0")));
    }
    if probes.is_empty() {
        return Err(Error::InvalidArgument("no probes".into()));
    }
    let half = 0.5 * gamma;
    let per: Vec<(f64, usize)> = probes
        .par_iter()
        .map(|u| {
            let mut sum = 0.0;
            let mut hits = 0;
            for m in measures {
                for (p, w) in m.points().iter().zip(m.weights()) {
                    let x = (p.v - *u).norm_sq().powf(half);
                    if x >= cap {
                        hits += 1;
                        sum += w * cap;
                    } else {
                        sum += w * x;
                    }
                }
            }
            (sum, hits)
        })
        .collect();
    let (k, &(value, cap_hits)) = per
        .iter()
        .enumerate()
        .fold(None, |best: Option<(usize, &(f64, usize))>, (k, x)| match best {
            Some((_, b)) if b.0 >= x.0 => best,
            _ => Some((k, x)),
        })
        .expect("non-empty");
    Ok(LambdaEstimate {
        value,
        cap_hits,
        argmax: probes[k],
        cap,
        probes: probes.len(),
    })
}

/// Upper bound on the atom velocities used as probes.
pub const MAX_ATOM_PROBES: usize = 128;

/// Atom velocities of all measures (evenly thinned to at most
/// [`MAX_ATOM_PROBES`]) plus a `per_axis^d` grid spanning their bounding box.
pub fn default_probes(measures: &[&DiscreteMeasure], per_axis: usize) -> Vec<Vector> {
    let atoms: Vec<Vector> = measures
        .iter()
        .flat_map(|m| m.points().iter().map(|p| p.v))
        .collect();
    let Some(first) = atoms.first().copied() else {
        return atoms;
    };
    let stride = atoms.len().div_ceil(MAX_ATOM_PROBES);
    let mut probes: Vec<Vector> = atoms.iter().step_by(stride).copied().collect();
    let d = first.dim();
    if per_axis == 0 {
        return probes;
    }
    let (mut lo, mut hi) = (first, first);
    for v in &atoms {
        for k in 0..d {
            lo[k] = lo[k].min(v[k]);
            hi[k] = hi[k].max(v[k]);
        }
    }
    let count = per_axis.pow(d as u32);
    for code in 0..count {
        let mut u = Vector::zeros(d);
        let mut c = code;
        for k in 0..d {
            let idx = c % per_axis;
            c /= per_axis;
            let s = if per_axis == 1 {
                0.5
            } else {
                idx as f64 / (per_axis - 1) as f64
            };
            u[k] = lo[k] + s * (hi[k] - lo[k]);
        }
        probes.push(u);
    }
    probes
}

#[derive(Debug, Clone, PartialEq)]
pub struct MomentReport {
    pub c_gamma: f64,
    /// `None` for `gamma >= 0`, where the functional is not used.
    pub lambda: Option<LambdaEstimate>,
    pub second_moment: f64,
    pub delta: f64,
}

/// Moments of the sum of `measures`; `gamma` below `-1` is clamped to `-1`
/// inside the exponential moment.
pub fn moment_report(
    measures: &[&DiscreteMeasure],
    gamma: f64,
    delta: f64,
    probe_grid: usize,
    cap: f64,
) -> Result<MomentReport> {
    let g = gamma.max(-1.0);
    let mut c_gamma = 0.0;
    let mut second = 0.0;
    for m in measures {
        c_gamma += moment_c_gamma(m, g, delta)?;
        second += second_moment(m);
    }
    let lambda = if gamma < 0.0 {
        let probes = default_probes(measures, probe_grid);
        Some(lambda_singular(measures, gamma, &probes, cap)?)
    } else {
        None
    };
    Ok(MomentReport {
        c_gamma,
        lambda,
        second_moment: second,
        delta,
    })
}

/// Value of the coupling integrand; always `>= 0`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct PsiValue(pub f64);

/// `(|v-u| + |v~-u~|) |sb - sb~| + (|v-v~| + |u-u~|) min(sb, sb~)` with
/// `sb = sigma(|v-u|) beta(r-q)` evaluated without the low-speed cap.
///
/// `pair1 = ((r,v), (r~,v~))`, `pair0 = ((q,u), (q~,u~))`.
pub fn psi_integrand(
    pair1: (&PhasePoint, &PhasePoint),
    pair0: (&PhasePoint, &PhasePoint),
    kernel: &KernelSpec,
) -> Result<PsiValue> {
    let (x, xt) = pair1;
    let (y, yt) = pair0;
    let rate = |a: &PhasePoint, b: &PhasePoint| -> Result<(f64, f64)> {
        let z = (a.v - b.v).norm();
        let beta = kernel.beta().eval(&(a.r - b.r));
        if beta == 0.0 {
            return Ok((z, 0.0));
        }
        Ok((z, kernel.sigma().eval(z)? * beta))
    };
    let (z, sb) = rate(x, y)?;
    let (zt, sbt) = rate(xt, yt)?;
    let spread = (x.v - xt.v).norm() + (y.v - yt.v).norm();
    Ok(PsiValue((z + zt) * (sb - sbt).abs() + spread * sb.min(sbt)))
}
