//! Collision parameterization in dimension d >= 3.
//!
//! A binary collision of velocities `v`, `u` is described by a deflection
//! angle `theta` in (0, pi] and a direction `xi` on the unit sphere of
//! R^{d-1}. The map `gamma(X, .)` identifies that sphere with the set of
//! vectors orthogonal to `X` having the same length as `X`; post-collision
//! velocities are `v + alpha` and `u - alpha` with
//!
//! ```text
//! alpha(v, u, theta, xi) = sin^2(theta/2) (u - v) + sin(theta)/2 * gamma(u - v, xi)
//! ```
//!
//! so that `|alpha| = |v - u| sin(theta/2)`.

use crate::error::{Error, Result};
use crate::vector::Vector;

/// Tolerance on `|xi| = 1` and `|n| = 1` preconditions.
pub const UNIT_TOLERANCE: f64 = 1e-12;

/// Grid spacing of the velocity lattice (2^-46).
///
/// Velocities that are integer multiples of this quantum and smaller than
/// [`VELOCITY_LATTICE_LIMIT`] in every component add and subtract without
/// rounding, which makes momentum conservation of [`deflect`] exact in
/// floating point.
pub const VELOCITY_QUANTUM: f64 = 1.0 / 70_368_744_177_664.0;

/// Component bound below which lattice arithmetic is exact (2^53 quanta).
pub const VELOCITY_LATTICE_LIMIT: f64 = 128.0;

/// Relative threshold on `1 + cos(angle(X, Y))` below which the rotation
/// taking X to Y is replaced by a fixed half-turn.
pub const ANTIPARALLEL_THRESHOLD: f64 = 1e-10;

/// Round a scalar to the nearest lattice point.
pub fn snap_to_lattice(x: f64) -> f64 {
    (x / VELOCITY_QUANTUM).round() * VELOCITY_QUANTUM
}

/// Round every component of a velocity to the lattice.
pub fn snap_velocity(v: &Vector) -> Vector {
    let mut out = *v;
    for c in out.as_mut_slice() {
        *c = snap_to_lattice(*c);
    }
    out
}

/// True if every component is a lattice point inside the exact range.
pub fn is_lattice_velocity(v: &Vector) -> bool {
    v.as_slice()
        .iter()
        .all(|&c| c.abs() < VELOCITY_LATTICE_LIMIT && snap_to_lattice(c) == c)
}

/// Collision angles `(theta, xi)` with `theta` in (0, pi] and `xi` a unit
/// vector of R^{d-1}.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AngleParam {
    theta: f64,
    xi: Vector,
}

impl AngleParam {
    pub fn new(theta: f64, xi: Vector) -> Result<Self> {
        if !(theta > 0.0 && theta <= std::f64::consts::PI) {
            return Err(Error::InvalidArgument(format!(
                "theta = {theta} outside (0, pi]"
            )));
        }
        check_unit(&xi, "xi")?;
        Ok(AngleParam { theta, xi })
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn xi(&self) -> &Vector {
        &self.xi
    }

    /// Dimension of the velocity space (one more than `xi`).
    pub fn dim(&self) -> usize {
        self.xi.dim() + 1
    }
}

fn check_unit(x: &Vector, name: &str) -> Result<()> {
    let n = x.norm();
    if (n - 1.0).abs() > UNIT_TOLERANCE || !n.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "{name} must be a unit vector, |{name}| = {n}"
        )));
    }
    Ok(())
}

/// Orthonormal basis of the orthogonal complement of a nonzero vector,
/// obtained from the Householder reflection sending `X/|X|` onto the last
/// coordinate axis.
#[derive(Debug, Clone, Copy)]
pub struct Frame {
    /// Householder vector `w`, stored with `2 / |w|^2`.
    w: Vector,
    scale: f64,
    norm: f64,
}

impl Frame {
    /// Frame for `x`; `None` when `x = 0`.
    pub fn new(x: &Vector) -> Option<Frame> {
        let norm = x.norm();
        if norm == 0.0 {
            return None;
        }
        let d = x.dim();
        let mut w = *x * (1.0 / norm);
        // Reflect onto -sign(x_d) e_d so that w never cancels.
        let last = w[d - 1];
        w[d - 1] += if last >= 0.0 { 1.0 } else { -1.0 };
        let scale = 2.0 / w.norm_sq();
        Some(Frame { w, scale, norm })
    }

    pub fn dim(&self) -> usize {
        self.w.dim()
    }

    /// Length of the vector the frame was built from.
    pub fn norm(&self) -> f64 {
        self.norm
    }

    /// Apply the (symmetric, involutive) reflection.
    fn reflect(&self, y: &Vector) -> Vector {
        y.axpy(-self.scale * self.w.dot(y), &self.w)
    }

    /// i-th basis vector of the orthogonal complement, `0 <= i < d - 1`.
    pub fn basis_vector(&self, i: usize) -> Vector {
        self.reflect(&Vector::axis(self.dim(), i))
    }

    /// All `d - 1` basis vectors.
    pub fn basis(&self) -> Vec<Vector> {
        (0..self.dim() - 1).map(|i| self.basis_vector(i)).collect()
    }

    /// Embed a point of R^{d-1} into the complement, without scaling.
    pub fn embed(&self, xi: &Vector) -> Vector {
        let d = self.dim();
        let mut y = Vector::zeros(d);
        y.as_mut_slice()[..d - 1].copy_from_slice(xi.as_slice());
        self.reflect(&y)
    }

    /// Coordinates in R^{d-1} of the orthogonal projection of `y` onto the
    /// complement.
    pub fn coordinates(&self, y: &Vector) -> Vector {
        let d = self.dim();
        let z = self.reflect(y);
        Vector::from_slice(&z.as_slice()[..d - 1])
    }
}

/// `gamma(X, xi)`: the point of the sphere of radius `|X|` in `X^perp`
/// labelled by `xi`. Returns the zero vector for `X = 0`.
pub fn gamma(x: &Vector, xi: &Vector) -> Result<Vector> {
    check_unit(xi, "xi")?;
    if xi.dim() + 1 != x.dim() {
        return Err(Error::InvalidArgument(format!(
            "xi has dimension {} but X has dimension {}",
            xi.dim(),
            x.dim()
        )));
    }
    Ok(gamma_unchecked(x, xi))
}

fn gamma_unchecked(x: &Vector, xi: &Vector) -> Vector {
    match Frame::new(x) {
        Some(frame) => frame.embed(xi) * frame.norm(),
        None => Vector::zeros(x.dim()),
    }
}

/// Velocity increment of the collision `(v, u) -> (v + alpha, u - alpha)`.
pub fn alpha(v: &Vector, u: &Vector, ap: &AngleParam) -> Vector {
    let diff = *u - *v;
    let half = 0.5 * ap.theta;
    let s = half.sin();
    let g = gamma_unchecked(&diff, &ap.xi);
    (diff * (s * s)).axpy(0.5 * ap.theta.sin(), &g)
}

/// Post-collision velocities `(v + alpha, u - alpha)`.
///
/// When both inputs lie on the velocity lattice the increment is rounded
/// to the lattice first, so that `v* + u* == v + u` holds bit for bit.
/// Off-lattice inputs use the unrounded increment.
pub fn deflect(v: &Vector, u: &Vector, ap: &AngleParam) -> (Vector, Vector) {
    let a = alpha(v, u, ap);
    if is_lattice_velocity(v) && is_lattice_velocity(u) {
        let a_snapped = snap_velocity(&a);
        let fits = (0..v.dim()).all(|k| {
            v[k].abs() + a_snapped[k].abs() < VELOCITY_LATTICE_LIMIT
                && u[k].abs() + a_snapped[k].abs() < VELOCITY_LATTICE_LIMIT
        });
        if fits {
            return (*v + a_snapped, *u - a_snapped);
        }
    }
    (*v + a, *u - a)
}

/// Post-collision velocities for an explicit unit direction `n`:
/// `v* = v + (u - v, n) n`, `u* = u - (u - v, n) n`.
pub fn deflect_n(v: &Vector, u: &Vector, n: &Vector) -> Result<(Vector, Vector)> {
    check_unit(n, "n")?;
    let c = (*u - *v).dot(n);
    Ok((v.axpy(c, n), u.axpy(-c, n)))
}

/// Unit direction `n` reproducing `deflect(v, u, ap)` through [`deflect_n`].
pub fn n_from_angles(v: &Vector, u: &Vector, ap: &AngleParam) -> Result<Vector> {
    let diff = *u - *v;
    let frame = Frame::new(&diff).ok_or_else(|| {
        Error::DegenerateInput("n is undefined for coinciding velocities".into())
    })?;
    let half = 0.5 * ap.theta;
    // gamma(u - v, xi) / |u - v| is the unscaled embedding.
    let n = (diff * (half.sin() / frame.norm())).axpy(half.cos(), &frame.embed(&ap.xi));
    Ok(n)
}

/// Rotation in span{a, b} taking unit `a` to unit `b`, identity on the
/// orthogonal complement. Near-antiparallel pairs use a fixed half-turn.
fn rotate(a: &Vector, b: &Vector, y: &Vector) -> Vector {
    let c = a.dot(b);
    if 1.0 + c < ANTIPARALLEL_THRESHOLD {
        let e = half_turn_axis(a);
        return y.axpy(-2.0 * a.dot(y), a).axpy(-2.0 * e.dot(y), &e);
    }
    let s = *a + *b;
    y.axpy(2.0 * a.dot(y), b).axpy(-s.dot(y) / (1.0 + c), &s)
}

/// Unit vector orthogonal to `a`, depending only on the line through `a`.
fn half_turn_axis(a: &Vector) -> Vector {
    let k = (0..a.dim())
        .min_by(|&i, &j| a[i].abs().total_cmp(&a[j].abs()))
        .unwrap_or(0);
    let e = Vector::axis(a.dim(), k).axpy(-a[k], a);
    e * (1.0 / e.norm())
}

/// Angle re-alignment `xi_0(X, Y, xi)`.
///
/// `gamma(Y, xi_0)` is the image of `gamma(X, xi)` under the rotation taking
/// `X/|X|` to `Y/|Y|`, rescaled to length `|Y|`. For fixed `X, Y` the map is
/// an orthogonal transformation of R^{d-1}, hence a volume-preserving
/// bijection of the sphere, and it satisfies
/// `|gamma(X, xi) - gamma(Y, xi_0)| <= 3 |X - Y|`.
pub fn tanaka_shift(x: &Vector, y: &Vector, xi: &Vector) -> Result<Vector> {
    check_unit(xi, "xi")?;
    let fx = Frame::new(x)
        .ok_or_else(|| Error::DegenerateInput("tanaka_shift requires X != 0".into()))?;
    let fy = Frame::new(y)
        .ok_or_else(|| Error::DegenerateInput("tanaka_shift requires Y != 0".into()))?;
    let a = *x * (1.0 / fx.norm());
    let b = *y * (1.0 / fy.norm());
    let w = rotate(&a, &b, &fx.embed(xi));
    let xi0 = fy.coordinates(&w);
    Ok(xi0 * (1.0 / xi0.norm()))
}
