//! Maximal solutions of `rho' = g(rho)` for Osgood-type rate functions.

use crate::error::{Error, Result};

/// Relative tolerance of the adaptive integrator.
pub const OSGOOD_RTOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RateFunction {
    /// `g(x) = K x`
    Linear(f64),
    /// `g(x) = K x (1 + |ln x|)`
    LogLinear(f64),
}

impl RateFunction {
    pub fn k(&self) -> f64 {
        match *self {
            RateFunction::Linear(k) | RateFunction::LogLinear(k) => k,
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            RateFunction::Linear(k) => k * x,
            RateFunction::LogLinear(k) => k * x * (1.0 + x.ln().abs()),
        }
    }

    /// `g(e^y) / e^y`, the right-hand side in the variable `y = ln rho`.
    fn log_rate(&self, y: f64) -> f64 {
        match *self {
            RateFunction::Linear(k) => k,
            RateFunction::LogLinear(k) => k * (1.0 + y.abs()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OsgoodSpec {
    pub a: f64,
    pub g: RateFunction,
    pub horizon: f64,
}

impl OsgoodSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.a >= 0.0) || !self.a.is_finite() {
            return Err(Error::InvalidArgument(format!("initial value {} must be >= 0", self.a)));
        }
        let k = self.g.k();
        if !(k >= 0.0) || !k.is_finite() {
            return Err(Error::InvalidArgument(format!("rate constant {k} must be >= 0")));
        }
        if !(self.horizon >= 0.0) || !self.horizon.is_finite() {
            return Err(Error::InvalidArgument(format!("horizon {} must be >= 0", self.horizon)));
        }
        Ok(())
    }

    fn check_time(&self, t: f64) -> Result<()> {
        self.validate()?;
        if !(0.0..=self.horizon).contains(&t) {
            return Err(Error::InvalidArgument(format!(
                "t = {t} outside [0, {}]",
                self.horizon
            )));
        }
        Ok(())
    }
}

/// `Phi(rho) = int_1^rho dx / (x (1 + |ln x|))`.
pub fn loglinear_phi(rho: f64) -> f64 {
    let l = rho.ln();
    if l >= 0.0 {
        l.ln_1p()
    } else {
        -(-l).ln_1p()
    }
}

/// Inverse of [`loglinear_phi`].
pub fn loglinear_phi_inv(s: f64) -> f64 {
    if s >= 0.0 {
        s.exp_m1().exp()
    } else {
        (-(-s).exp_m1()).exp()
    }
}

/// Closed-form maximal solution: `a e^{K t}` or `Phi^{-1}(Phi(a) + K t)`.
pub fn osgood_closed_form(spec: &OsgoodSpec, t: f64) -> Result<f64> {
    spec.check_time(t)?;
    if spec.a == 0.0 || t == 0.0 {
        return Ok(spec.a);
    }
    Ok(match spec.g {
        RateFunction::Linear(k) => spec.a * (k * t).exp(),
        RateFunction::LogLinear(k) => loglinear_phi_inv(loglinear_phi(spec.a) + k * t),
    })
}

/// Maximal solution at `t`, by adaptive Dormand-Prince 5(4) integration of
/// `y' = g(e^y) / e^y` for `y = ln rho`.
pub fn osgood_majorant(spec: &OsgoodSpec, t: f64) -> Result<f64> {
    spec.check_time(t)?;
    if spec.a == 0.0 {
        return Ok(0.0);
    }
    let g = spec.g;
    // A relative tolerance on rho is an absolute tolerance on ln rho.
    let kink = matches!(g, RateFunction::LogLinear(_)).then_some(0.0);
    let y = dopri5(|y| g.log_rate(y), spec.a.ln(), t, 0.0, OSGOOD_RTOL, kink)?;
    Ok(y.exp())
}

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

/// One Dormand-Prince step: `(y_new, f(y_new), error estimate)`.
fn dp_step<F: Fn(f64) -> f64>(f: &F, y: f64, k1: f64, h: f64) -> (f64, f64, f64) {
    let k2 = f(y + h * A21 * k1);
    let k3 = f(y + h * (A31 * k1 + A32 * k2));
    let k4 = f(y + h * (A41 * k1 + A42 * k2 + A43 * k3));
    let k5 = f(y + h * (A51 * k1 + A52 * k2 + A53 * k3 + A54 * k4));
    let k6 = f(y + h * (A61 * k1 + A62 * k2 + A63 * k3 + A64 * k4 + A65 * k5));
    let y_new = y + h * (B1 * k1 + B3 * k3 + B4 * k4 + B5 * k5 + B6 * k6);
    let k7 = f(y_new);
    let err = h * (E1 * k1 + E3 * k3 + E4 * k4 + E5 * k5 + E6 * k6 + E7 * k7);
    (y_new, k7, err)
}

/// Integrates the autonomous ODE `y' = f(y)` from 0 to `t_end`. `f` may
/// have a kink at `y = kink`; steps crossing it are shortened to end
/// exactly there, so the error estimate only ever sees smooth pieces.
fn dopri5<F: Fn(f64) -> f64>(
    f: F,
    y0: f64,
    t_end: f64,
    rtol: f64,
    atol: f64,
    kink: Option<f64>,
) -> Result<f64> {
    if t_end == 0.0 {
        return Ok(y0);
    }
    let mut t = 0.0;
    let mut y = y0;
    let mut h = (t_end * 1e-3).max(1e-12);
    let mut k1 = f(y);
    let mut steps = 0usize;
    while t < t_end {
        steps += 1;
        if steps > 10_000_000 {
            return Err(Error::Capacity("ODE integration exceeded the step budget".into()));
        }
        if t + h > t_end {
            h = t_end - t;
        }
        let (y_new, k7, err) = dp_step(&f, y, k1, h);
        if !y_new.is_finite() {
            return Err(Error::Capacity("ODE solution left the representable range".into()));
        }
        let scale = atol + rtol * y.abs().max(y_new.abs());
        let ratio = (err / scale).abs();
        if ratio <= 1.0 {
            match kink {
                Some(b) if (y - b) * (y_new - b) < 0.0 => {
                    // Bisect for the step length that lands on the kink.
                    let (mut lo, mut hi) = (0.0, h);
                    for _ in 0..100 {
                        let mid = 0.5 * (lo + hi);
                        let (ym, _, _) = dp_step(&f, y, k1, mid);
                        if (y - b) * (ym - b) > 0.0 {
                            lo = mid;
                        } else {
                            hi = mid;
                        }
                    }
                    t += hi;
                    y = b;
                    k1 = f(b);
                    continue;
                }
                _ => {
                    t += h;
                    y = y_new;
                    k1 = k7;
                }
            }
        }
        let factor = if ratio == 0.0 {
            5.0
        } else {
            (0.9 * ratio.powf(-0.2)).clamp(0.2, 5.0)
        };
        h *= factor;
    }
    Ok(y)
}
