//! Closed library of test functions with analytic gradients.

use crate::kernels::KernelSpec;
use crate::vector::Vector;

/// Velocity factor of an [`TestFunction::RBumpPoly`] function.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VelocityFactor {
    /// `P(v) = 1`
    One,
    /// `P(v) = v_i`
    Component(usize),
    /// `P(v) = |v|^2`
    Energy,
}

impl VelocityFactor {
    pub(crate) fn eval(&self, v: &Vector) -> f64 {
        match *self {
            VelocityFactor::One => 1.0,
            VelocityFactor::Component(i) => v[i],
            VelocityFactor::Energy => v.norm_sq(),
        }
    }

    fn grad(&self, v: &Vector) -> Vector {
        match *self {
            VelocityFactor::One => Vector::zeros(v.dim()),
            VelocityFactor::Component(i) => Vector::axis(v.dim(), i),
            VelocityFactor::Energy => *v * 2.0,
        }
    }
}

/// Test functions `psi(r, v)` on phase space.
#[derive(Debug, Clone, PartialEq)]
pub enum TestFunction {
    /// `psi = 1`
    Constant,
    /// `psi = r_i`
    CoordinateR(usize),
    /// `psi = v_i`
    CoordinateV(usize),
    /// `exp(-(|r - c_r|^2 + |v - c_v|^2) / (2 w^2))`
    GaussianBump {
        center_r: Vector,
        center_v: Vector,
        width: f64,
    },
    /// Tensor product over all `2d` coordinates of `(1 - (z_k - c_k)^2 / w^2)^2`
    /// on `|z_k - c_k| < w`; compactly supported and C^1.
    TensorPolyBump {
        center_r: Vector,
        center_v: Vector,
        width: f64,
    },
    /// `exp(-|r - c|^2 / (2 w^2)) * P(v)`; the collision term has a closed
    /// form for every velocity factor.
    RBumpPoly {
        center: Vector,
        width: f64,
        factor: VelocityFactor,
    },
}

fn gauss(x: &Vector, c: &Vector, w: f64) -> f64 {
    (-(*x - *c).norm_sq() / (2.0 * w * w)).exp()
}

/// `(1 - s^2)^2` on `|s| < 1` and its derivative in `s`.
fn poly_bump(s: f64) -> (f64, f64) {
    if s.abs() >= 1.0 {
        (0.0, 0.0)
    } else {
        let q = 1.0 - s * s;
        (q * q, -4.0 * s * q)
    }
}

impl TestFunction {
    pub fn eval(&self, r: &Vector, v: &Vector) -> f64 {
        match self {
            TestFunction::Constant => 1.0,
            TestFunction::CoordinateR(i) => r[*i],
            TestFunction::CoordinateV(i) => v[*i],
            TestFunction::GaussianBump {
                center_r,
                center_v,
                width,
            } => gauss(r, center_r, *width) * gauss(v, center_v, *width),
            TestFunction::TensorPolyBump {
                center_r,
                center_v,
                width,
            } => {
                let mut p = 1.0;
                for k in 0..r.dim() {
                    p *= poly_bump((r[k] - center_r[k]) / width).0;
                    p *= poly_bump((v[k] - center_v[k]) / width).0;
                }
                p
            }
            TestFunction::RBumpPoly {
                center,
                width,
                factor,
            } => gauss(r, center, *width) * factor.eval(v),
        }
    }

    /// `(grad_r psi, grad_v psi)`.
    pub fn grad(&self, r: &Vector, v: &Vector) -> (Vector, Vector) {
        let d = r.dim();
        match self {
            TestFunction::Constant => (Vector::zeros(d), Vector::zeros(d)),
            TestFunction::CoordinateR(i) => (Vector::axis(d, *i), Vector::zeros(d)),
            TestFunction::CoordinateV(i) => (Vector::zeros(d), Vector::axis(d, *i)),
            TestFunction::GaussianBump {
                center_r,
                center_v,
                width,
            } => {
                let p = self.eval(r, v);
                let s = -p / (width * width);
                ((*r - *center_r) * s, (*v - *center_v) * s)
            }
            TestFunction::TensorPolyBump {
                center_r,
                center_v,
                width,
            } => {
                let fr: Vec<(f64, f64)> =
                    (0..d).map(|k| poly_bump((r[k] - center_r[k]) / width)).collect();
                let fv: Vec<(f64, f64)> =
                    (0..d).map(|k| poly_bump((v[k] - center_v[k]) / width)).collect();
                let all: Vec<(f64, f64)> = fr.into_iter().chain(fv).collect();
                let mut g = vec![0.0; 2 * d];
                for (k, gk) in g.iter_mut().enumerate() {
                    let mut p = all[k].1 / width;
                    for (m, f) in all.iter().enumerate() {
                        if m != k {
                            p *= f.0;
                        }
                    }
                    *gk = p;
                }
                (Vector::from_slice(&g[..d]), Vector::from_slice(&g[d..]))
            }
            TestFunction::RBumpPoly {
                center,
                width,
                factor,
            } => {
                let g = gauss(r, center, *width);
                let p = factor.eval(v);
                ((*r - *center) * (-g * p / (width * width)), factor.grad(v) * g)
            }
        }
    }

    /// `(S(tau) psi)(r, v) = psi(r + tau v, v)`.
    pub fn eval_transported(&self, r: &Vector, v: &Vector, tau: f64) -> f64 {
        self.eval(&r.axpy(tau, v), v)
    }

    /// True if `psi` does not depend on `v`.
    pub fn velocity_independent(&self) -> bool {
        matches!(
            self,
            TestFunction::Constant
                | TestFunction::CoordinateR(_)
                | TestFunction::RBumpPoly {
                    factor: VelocityFactor::One,
                    ..
                }
        )
    }

    /// `psi(r, v) = a(r) P(v)` for the functions of that form: returns
    /// `(a(r), P)`.
    pub(crate) fn separated(&self, r: &Vector) -> Option<(f64, VelocityFactor)> {
        match self {
            TestFunction::CoordinateV(i) => Some((1.0, VelocityFactor::Component(*i))),
            TestFunction::RBumpPoly {
                center,
                width,
                factor,
            } => Some((gauss(r, center, *width), *factor)),
            _ => None,
        }
    }

    /// Closed form of the collision term `(L psi)(r, v; u)` for the
    /// truncated angular measure, when one exists.
    ///
    /// Averaging over `xi` removes the `gamma` part of the deflection, so
    /// `int alpha = c (u - v)` and `int |v + alpha|^2 - |v|^2 = c (|u|^2 - |v|^2)`
    /// with `c = |S^{d-2}| int sin^2(theta/2) Q_eps(d theta)`.
    pub fn collision_closed_form(
        &self,
        r: &Vector,
        v: &Vector,
        u: &Vector,
        kernel: &KernelSpec,
    ) -> Option<f64> {
        let c = kernel.momentum_transfer_rate();
        let poly = |factor: &VelocityFactor| match *factor {
            VelocityFactor::One => 0.0,
            VelocityFactor::Component(i) => c * (u[i] - v[i]),
            VelocityFactor::Energy => c * (u.norm_sq() - v.norm_sq()),
        };
        match self {
            TestFunction::Constant | TestFunction::CoordinateR(_) => Some(0.0),
            TestFunction::CoordinateV(i) => Some(poly(&VelocityFactor::Component(*i))),
            TestFunction::RBumpPoly {
                center,
                width,
                factor,
            } => {
                if *factor == VelocityFactor::One {
                    Some(0.0)
                } else {
                    Some(gauss(r, center, *width) * poly(factor))
                }
            }
            _ => None,
        }
    }

    /// Upper bound on `sup |grad psi|`, which bounds the Lipschitz constant
    /// for the metric `|dr| + |dv|`; `None` for unbounded gradients.
    pub fn lipschitz_bound(&self) -> Option<f64> {
        match self {
            TestFunction::Constant => Some(0.0),
            TestFunction::CoordinateR(_) | TestFunction::CoordinateV(_) => Some(1.0),
            TestFunction::GaussianBump { width, .. } => Some((-0.5f64).exp() / width),
            TestFunction::TensorPolyBump { width, center_r, .. } => {
                // max |d/ds (1 - s^2)^2| = 8 / (3 sqrt 3); other factors <= 1.
                let per = 8.0 / (3.0 * 3f64.sqrt()) / width;
                Some(per * (2.0 * center_r.dim() as f64).sqrt())
            }
            TestFunction::RBumpPoly { .. } => None,
        }
    }
}
