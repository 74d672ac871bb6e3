//! Exact Wasserstein-1 distances between discrete phase-space measures.
//!
//! The shifted cost `|(r - v t) - (r' - v' t)| + |v - v'|` turns free
//! transport into a rigid motion: `W1^t(mu_t, nu_t)` is unchanged when both
//! measures are transported freely for time `t`.
//!
//! Uniform measures of equal size are solved as assignment problems with a
//! shortest-augmenting-path (Hungarian) method; everything else goes through
//! a primal network simplex on the bipartite support graph. Optimality can
//! be certified independently with [`dual_check`].

use std::io::{BufRead, Write};

use crate::csv::{fmt_f64, indexed_columns, join_f64, parse_row};
use crate::error::{Error, Result};
use crate::particles::{Ensemble, Particle};
use crate::vector::Vector;

/// A point `(r, v)` of phase space.
pub type PhasePoint = Particle;

/// Default bound on the number of atoms per measure.
pub const DEFAULT_MAX_SUPPORT: usize = 10_000;

/// Largest support accepted by [`brute_force_w1`].
pub const BRUTE_FORCE_MAX: usize = 8;

/// Tolerance on `sum w = 1`.
pub const WEIGHT_TOLERANCE: f64 = 1e-12;

/// Tolerance on coupling marginals.
pub const MARGINAL_TOLERANCE: f64 = 1e-10;

/// `|(r - v t) - (r' - v' t)| + |v - v'|`.
pub fn cost_t(p: &PhasePoint, q: &PhasePoint, t: f64) -> Result<f64> {
    if p.r.dim() != q.r.dim() || p.v.dim() != q.v.dim() || p.r.dim() != p.v.dim() {
        return Err(Error::InvalidArgument("phase points differ in dimension".into()));
    }
    Ok(shifted_cost(p, q, t))
}

fn shifted_cost(p: &PhasePoint, q: &PhasePoint, t: f64) -> f64 {
    let dr = p.r.axpy(-t, &p.v) - q.r.axpy(-t, &q.v);
    dr.norm() + p.v.distance(&q.v)
}

/// Weighted point cloud on phase space.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteMeasure {
    dim: usize,
    points: Vec<PhasePoint>,
    weights: Vec<f64>,
}

impl DiscreteMeasure {
    /// Weights must be nonnegative and sum to 1 within `1e-12`.
    pub fn new(points: Vec<PhasePoint>, weights: Vec<f64>) -> Result<Self> {
        if points.is_empty() || points.len() != weights.len() {
            return Err(Error::InvalidArgument(
                "a measure needs >= 1 atom and one weight per atom".into(),
            ));
        }
        let dim = points[0].r.dim();
        if points.iter().any(|p| p.r.dim() != dim || p.v.dim() != dim) {
            return Err(Error::InvalidArgument("atoms differ in dimension".into()));
        }
        if points.iter().any(|p| !p.r.is_finite() || !p.v.is_finite()) {
            return Err(Error::InvalidArgument("atoms must be finite".into()));
        }
        if weights.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
            return Err(Error::InvalidArgument("weights must be finite and >= 0".into()));
        }
        let total = crate::particles::neumaier_sum(weights.iter().copied());
        if (total - 1.0).abs() > WEIGHT_TOLERANCE {
            return Err(Error::InvalidArgument(format!("weights sum to {total}, not 1")));
        }
        Ok(DiscreteMeasure {
            dim,
            points,
            weights,
        })
    }

    /// Equal weights `1/n`.
    pub fn uniform(points: Vec<PhasePoint>) -> Result<Self> {
        let w = 1.0 / points.len().max(1) as f64;
        let weights = vec![w; points.len()];
        Self::new(points, weights)
    }

    /// Empirical measure of an ensemble; duplicate atoms are kept so that
    /// atom `i` is particle `i`.
    pub fn from_ensemble(e: &Ensemble) -> Self {
        Self::uniform(e.particles().to_vec()).expect("ensembles are nonempty and finite")
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[PhasePoint] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    fn is_uniform(&self) -> bool {
        self.weights.iter().all(|&w| w == self.weights[0])
    }

    /// Read `weight,r1..rd,v1..vd` CSV.
    pub fn read_csv<R: BufRead>(reader: R) -> Result<Self> {
        let mut lines = reader.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("empty measure file".into()))??;
        let cols: Vec<&str> = header.trim().split(',').collect();
        if cols.len() < 3 || (cols.len() - 1) % 2 != 0 || cols[0] != "weight" {
            return Err(Error::Parse(format!("bad measure header {header:?}")));
        }
        let d = (cols.len() - 1) / 2;
        let expected = measure_header(d);
        if header.trim() != expected {
            return Err(Error::Parse(format!("expected header {expected:?}")));
        }
        let mut points = Vec::new();
        let mut weights = Vec::new();
        for (k, line) in lines.enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let row = parse_row(&line, k + 2)?;
            if row.len() != 2 * d + 1 {
                return Err(Error::Parse(format!("line {}: expected {} fields", k + 2, 2 * d + 1)));
            }
            weights.push(row[0]);
            points.push(Particle {
                r: Vector::from_slice(&row[1..=d]),
                v: Vector::from_slice(&row[d + 1..]),
            });
        }
        Self::new(points, weights)
    }

    /// Write `weight,r1..rd,v1..vd` CSV.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{}", measure_header(self.dim))?;
        for (p, &wt) in self.points.iter().zip(&self.weights) {
            let row = std::iter::once(wt)
                .chain(p.r.as_slice().iter().copied())
                .chain(p.v.as_slice().iter().copied());
            writeln!(w, "{}", join_f64(row))?;
        }
        Ok(())
    }
}

fn measure_header(d: usize) -> String {
    let mut cols = vec!["weight".to_string()];
    cols.extend(indexed_columns("r", d));
    cols.extend(indexed_columns("v", d));
    cols.join(",")
}

/// Push every atom `(r, v)` to `(r - t v, v)`.
pub fn shift_measure(m: &DiscreteMeasure, t: f64) -> DiscreteMeasure {
    let points = m
        .points
        .iter()
        .map(|p| Particle {
            r: p.r.axpy(-t, &p.v),
            v: p.v,
        })
        .collect();
    DiscreteMeasure {
        dim: m.dim,
        points,
        weights: m.weights.clone(),
    }
}

/// Sparse transport plan: entries `(i, j, mass)` sorted by `(i, j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Coupling {
    pub n_mu: usize,
    pub n_nu: usize,
    pub entries: Vec<(usize, usize, f64)>,
}

impl Coupling {
    /// `sum_ij H_ij cost(x_i, y_j)`.
    pub fn cost<C: Fn(&PhasePoint, &PhasePoint) -> f64>(
        &self,
        mu: &DiscreteMeasure,
        nu: &DiscreteMeasure,
        cost: C,
    ) -> f64 {
        self.entries
            .iter()
            .map(|&(i, j, h)| h * cost(&mu.points[i], &nu.points[j]))
            .sum()
    }

    /// Largest deviation of the row and column sums from the marginals.
    pub fn marginal_error(&self, mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> f64 {
        let mut rows = vec![0.0; self.n_mu];
        let mut cols = vec![0.0; self.n_nu];
        for &(i, j, h) in &self.entries {
            rows[i] += h;
            cols[j] += h;
        }
        let r = rows.iter().zip(&mu.weights).map(|(a, b)| (a - b).abs());
        let c = cols.iter().zip(&nu.weights).map(|(a, b)| (a - b).abs());
        r.chain(c).fold(0.0, f64::max)
    }

    fn validate(&self, mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> Result<()> {
        if self.n_mu != mu.len() || self.n_nu != nu.len() {
            return Err(Error::InvalidArgument("coupling size differs from marginals".into()));
        }
        if self
            .entries
            .iter()
            .any(|&(i, j, h)| i >= self.n_mu || j >= self.n_nu || !(h >= 0.0))
        {
            return Err(Error::InvalidArgument("coupling entries out of range".into()));
        }
        let err = self.marginal_error(mu, nu);
        if err > MARGINAL_TOLERANCE {
            return Err(Error::InvalidArgument(format!(
                "coupling marginals off by {err:e}"
            )));
        }
        Ok(())
    }
}

/// Optimal transport value and plan for a cost `c(x, y)`.
pub fn w1<C>(mu: &DiscreteMeasure, nu: &DiscreteMeasure, cost: C) -> Result<(f64, Coupling)>
where
    C: Fn(&PhasePoint, &PhasePoint) -> f64,
{
    w1_with_limit(mu, nu, cost, DEFAULT_MAX_SUPPORT)
}

/// [`w1`] with an explicit support bound.
pub fn w1_with_limit<C>(
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    cost: C,
    max_support: usize,
) -> Result<(f64, Coupling)>
where
    C: Fn(&PhasePoint, &PhasePoint) -> f64,
{
    if mu.dim != nu.dim {
        return Err(Error::InvalidArgument("measures differ in dimension".into()));
    }
    if mu.len() > max_support || nu.len() > max_support {
        return Err(Error::Capacity(format!(
            "supports of {} and {} atoms exceed the limit {max_support}",
            mu.len(),
            nu.len()
        )));
    }
    if mu.len() == nu.len() && mu.is_uniform() && nu.is_uniform() {
        let n = mu.len();
        let c = |i: usize, j: usize| cost(&mu.points[i], &nu.points[j]);
        let perm = assignment(n, &c);
        let value = assignment_value(n, &c, &perm);
        let w = mu.weights[0];
        let entries = perm.iter().enumerate().map(|(i, &j)| (i, j, w)).collect();
        return Ok((
            value,
            Coupling {
                n_mu: n,
                n_nu: n,
                entries,
            },
        ));
    }
    let coupling = network_simplex(mu, nu, &cost)?;
    let value = coupling.cost(mu, nu, &cost);
    Ok((value, coupling))
}

/// `W1^t`: transport under the shifted cost.
pub fn w1_shifted(mu: &DiscreteMeasure, nu: &DiscreteMeasure, t: f64) -> Result<(f64, Coupling)> {
    w1(mu, nu, |p, q| shifted_cost(p, q, t))
}

/// `W1^t` computed by shifting both measures and using the unshifted cost.
pub fn w1_shifted_via_shift(
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    t: f64,
) -> Result<(f64, Coupling)> {
    let (a, b) = (shift_measure(mu, t), shift_measure(nu, t));
    w1(&a, &b, |p, q| shifted_cost(p, q, 0.0))
}

/// Cost of the identity pairing of two equally sized uniform measures; an
/// upper bound on `W1^t` used for coupled simulations.
pub fn paired_cost(mu: &DiscreteMeasure, nu: &DiscreteMeasure, t: f64) -> Result<f64> {
    if mu.len() != nu.len() || !mu.is_uniform() || !nu.is_uniform() {
        return Err(Error::InvalidArgument(
            "paired cost needs uniform measures of equal size".into(),
        ));
    }
    let total: f64 = mu
        .points
        .iter()
        .zip(&nu.points)
        .map(|(p, q)| shifted_cost(p, q, t))
        .sum();
    Ok(total / mu.len() as f64)
}

/// Exact minimum over all `n!` assignments of equally sized uniform
/// measures, summed in the same order as the assignment solver.
pub fn brute_force_w1<C>(mu: &DiscreteMeasure, nu: &DiscreteMeasure, cost: C) -> Result<f64>
where
    C: Fn(&PhasePoint, &PhasePoint) -> f64,
{
    let n = mu.len();
    if n > BRUTE_FORCE_MAX {
        return Err(Error::Capacity(format!(
            "brute force supports at most {BRUTE_FORCE_MAX} atoms, got {n}"
        )));
    }
    if nu.len() != n || !mu.is_uniform() || !nu.is_uniform() {
        return Err(Error::InvalidArgument(
            "brute force needs uniform measures of equal size".into(),
        ));
    }
    let c = |i: usize, j: usize| cost(&mu.points[i], &nu.points[j]);
    // Heap's algorithm over all permutations.
    let mut perm: Vec<usize> = (0..n).collect();
    let mut best = assignment_value(n, &c, &perm);
    let mut stack = vec![0usize; n];
    let mut k = 1;
    while k < n {
        if stack[k] < k {
            if k % 2 == 0 {
                perm.swap(0, k);
            } else {
                perm.swap(stack[k], k);
            }
            best = best.min(assignment_value(n, &c, &perm));
            stack[k] += 1;
            k = 1;
        } else {
            stack[k] = 0;
            k += 1;
        }
    }
    Ok(best)
}

fn assignment_value<F: Fn(usize, usize) -> f64>(n: usize, c: &F, perm: &[usize]) -> f64 {
    let total: f64 = (0..n).map(|i| c(i, perm[i])).sum();
    total / n as f64
}

/// Minimum-cost perfect matching by shortest augmenting paths with
/// potentials. Returns `perm` with row `i` matched to column `perm[i]`.
fn assignment<F: Fn(usize, usize) -> f64>(n: usize, c: &F) -> Vec<usize> {
    let inf = f64::INFINITY;
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    // p[j]: row matched to column j (1-based, 0 = free).
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![inf; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = inf;
            let mut j1 = 0;
            for j in 1..=n {
                if !used[j] {
                    let cur = c(i0 - 1, j - 1) - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut perm = vec![0; n];
    for j in 1..=n {
        perm[p[j] - 1] = j - 1;
    }
    perm
}

/// Primal network simplex for the transportation problem between the
/// positive-weight atoms of `mu` (sources) and `nu` (sinks).
///
/// Starts from the strongly feasible tree of artificial root arcs, prices
/// by block search and selects the leaving arc by Cunningham's rule (last
/// blocking arc after the apex), which excludes cycling.
fn network_simplex<C>(mu: &DiscreteMeasure, nu: &DiscreteMeasure, cost: &C) -> Result<Coupling>
where
    C: Fn(&PhasePoint, &PhasePoint) -> f64,
{
    let src: Vec<usize> = (0..mu.len()).filter(|&i| mu.weights[i] > 0.0).collect();
    let dst: Vec<usize> = (0..nu.len()).filter(|&j| nu.weights[j] > 0.0).collect();
    let (n, m) = (src.len(), dst.len());
    let c = |i: usize, j: usize| cost(&mu.points[src[i]], &nu.points[dst[j]]);

    let mut max_cost: f64 = 0.0;
    for i in 0..n {
        for j in 0..m {
            max_cost = max_cost.max(c(i, j));
        }
    }
    let big_m = 1.0 + (n + m) as f64 * (1.0 + max_cost);
    let tol = 1e-12 * (1.0 + max_cost);

    let root = n + m;
    let nodes = n + m + 1;
    let real_arcs = n * m;
    // Tree arrays indexed by node; the root has no predecessor.
    let mut parent = vec![root; nodes];
    let mut pred_arc = vec![usize::MAX; nodes];
    let mut up = vec![false; nodes];
    let mut flow = vec![0.0; nodes];
    for i in 0..n {
        pred_arc[i] = real_arcs + i;
        up[i] = true;
        flow[i] = mu.weights[src[i]];
    }
    for j in 0..m {
        pred_arc[n + j] = real_arcs + n + j;
        up[n + j] = false;
        flow[n + j] = nu.weights[dst[j]];
    }

    let endpoints = |k: usize| -> (usize, usize) {
        if k < real_arcs {
            (k / m, n + k % m)
        } else {
            let v = k - real_arcs;
            if v < n {
                (v, root)
            } else {
                (root, v)
            }
        }
    };
    let arc_cost = |k: usize| -> f64 {
        if k < real_arcs {
            c(k / m, k % m)
        } else {
            big_m
        }
    };

    let mut depth = vec![0usize; nodes];
    let mut pot = vec![0.0; nodes];
    let mut children: Vec<Vec<usize>> = vec![Vec::new(); nodes];
    let mut order = Vec::with_capacity(nodes);
    let mut refresh = |parent: &[usize],
                       pred_arc: &[usize],
                       up: &[bool],
                       depth: &mut Vec<usize>,
                       pot: &mut Vec<f64>| {
        for ch in children.iter_mut() {
            ch.clear();
        }
        for v in 0..root {
            children[parent[v]].push(v);
        }
        order.clear();
        order.push(root);
        depth[root] = 0;
        pot[root] = 0.0;
        let mut head = 0;
        while head < order.len() {
            let x = order[head];
            head += 1;
            for &ch in &children[x] {
                depth[ch] = depth[x] + 1;
                let ck = arc_cost(pred_arc[ch]);
                pot[ch] = if up[ch] { pot[x] - ck } else { pot[x] + ck };
                order.push(ch);
            }
        }
    };
    refresh(&parent, &pred_arc, &up, &mut depth, &mut pot);

    let block = ((real_arcs as f64).sqrt().ceil() as usize).max(16);
    let mut next_arc = 0usize;
    let max_pivots = 50 * nodes * nodes + 1000;
    let mut pivots = 0usize;
    let mut path_u = Vec::new();
    let mut path_w = Vec::new();
    loop {
        // Block-search pricing over real arcs.
        let mut entering = None;
        let mut best = -tol;
        let mut scanned = 0;
        while scanned < real_arcs {
            let k = next_arc;
            next_arc = if next_arc + 1 == real_arcs { 0 } else { next_arc + 1 };
            scanned += 1;
            let (a, b) = endpoints(k);
            let rc = arc_cost(k) + pot[a] - pot[b];
            if rc < best {
                best = rc;
                entering = Some(k);
            }
            if scanned % block == 0 && entering.is_some() {
                break;
            }
        }
        let Some(k) = entering else { break };
        pivots += 1;
        if pivots > max_pivots {
            return Err(Error::Capacity("network simplex pivot limit reached".into()));
        }

        let (u, w) = endpoints(k);
        path_u.clear();
        path_w.clear();
        let (mut a, mut b) = (u, w);
        while a != b {
            if depth[a] >= depth[b] {
                path_u.push(a);
                a = parent[a];
            } else {
                path_w.push(b);
                b = parent[b];
            }
        }
        // Cycle orientation: apex -> ... -> u -> w -> ... -> apex.
        // On u's side arcs are traversed downward, on w's side upward.
        let mut delta = f64::INFINITY;
        for &x in &path_u {
            if up[x] {
                delta = delta.min(flow[x]);
            }
        }
        for &x in &path_w {
            if !up[x] {
                delta = delta.min(flow[x]);
            }
        }
        if !delta.is_finite() {
            return Err(Error::InvalidArgument("transport problem is unbounded".into()));
        }
        // Last blocking arc in cycle order starting from the apex.
        let mut leaving: Option<(usize, bool)> = None;
        for &x in path_u.iter().rev() {
            if up[x] && flow[x] == delta {
                leaving = Some((x, true));
            }
        }
        for &x in &path_w {
            if !up[x] && flow[x] == delta {
                leaving = Some((x, false));
            }
        }
        let (q, on_u_side) = leaving.expect("a backward arc attains the minimum");
        for &x in &path_u {
            if up[x] {
                flow[x] -= delta;
            } else {
                flow[x] += delta;
            }
        }
        for &x in &path_w {
            if up[x] {
                flow[x] += delta;
            } else {
                flow[x] -= delta;
            }
        }
        // Re-hang the cut subtree from the entering arc, reversing the path
        // between the entering endpoint and the leaving arc.
        let (start, new_parent, start_up) = if on_u_side { (u, w, true) } else { (w, u, false) };
        let (mut prev, mut prev_arc, mut prev_up, mut prev_flow) = (new_parent, k, start_up, delta);
        let mut cur = start;
        loop {
            let (next, arc_c, up_c, flow_c) = (parent[cur], pred_arc[cur], up[cur], flow[cur]);
            parent[cur] = prev;
            pred_arc[cur] = prev_arc;
            up[cur] = prev_up;
            flow[cur] = prev_flow;
            if cur == q {
                break;
            }
            prev = cur;
            prev_arc = arc_c;
            prev_up = !up_c;
            prev_flow = flow_c;
            cur = next;
        }
        refresh(&parent, &pred_arc, &up, &mut depth, &mut pot);
    }

    let mut entries: Vec<(usize, usize, f64)> = (0..root)
        .filter(|&x| pred_arc[x] < real_arcs && flow[x] > 0.0)
        .map(|x| {
            let k = pred_arc[x];
            (src[k / m], dst[k % m], flow[x])
        })
        .collect();
    entries.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
    Ok(Coupling {
        n_mu: mu.len(),
        n_nu: nu.len(),
        entries,
    })
}

/// Duality certificate for a coupling.
#[derive(Debug, Clone, PartialEq)]
pub struct Certificate {
    /// `sum H_ij c(x_i, y_j)`.
    pub primal: f64,
    /// `<psi, mu - nu>` for the constructed 1-Lipschitz potential.
    pub dual: f64,
    pub gap: f64,
    /// Potential at the atoms of `mu`.
    pub psi_mu: Vec<f64>,
    /// Potential at the atoms of `nu`.
    pub psi_nu: Vec<f64>,
}

/// Build a potential that is 1-Lipschitz for `cost` on the union of both
/// supports and tight on the support of `coupling`, and report the
/// resulting duality gap.
///
/// Potentials are shortest-path distances in the graph with arcs `z -> z'`
/// of length `c(z, z')` and, for each coupled pair, `x_i -> y_j` of length
/// `-c(x_i, y_j)`. A suboptimal coupling creates a negative cycle; the
/// potentials are then made admissible by the c-transform
/// `psi(z) = min_w h(w) + c(w, z)`, so the dual value is always valid and
/// the gap is positive. `cost` must be a metric.
pub fn dual_check<C>(
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    coupling: &Coupling,
    cost: C,
) -> Result<Certificate>
where
    C: Fn(&PhasePoint, &PhasePoint) -> f64,
{
    coupling.validate(mu, nu)?;
    let pts: Vec<&PhasePoint> = mu.points.iter().chain(&nu.points).collect();
    let z = pts.len();
    let n = mu.len();
    let mut dist = vec![vec![0.0; z]; z];
    for a in 0..z {
        for b in 0..a {
            let c = cost(pts[a], pts[b]);
            dist[a][b] = c;
            dist[b][a] = c;
        }
    }
    let support: Vec<(usize, usize, f64)> = coupling
        .entries
        .iter()
        .filter(|e| e.2 > 0.0)
        .map(|&(i, j, _)| (i, n + j, -dist[i][n + j]))
        .collect();

    // Bellman-Ford from a virtual source joined to every node at length 0.
    let mut h = vec![0.0; z];
    for _ in 0..z {
        let mut changed = false;
        for b in 0..z {
            let mut best = h[b];
            for a in 0..z {
                let cand = h[a] + dist[a][b];
                if cand < best {
                    best = cand;
                }
            }
            if best < h[b] {
                h[b] = best;
                changed = true;
            }
        }
        for &(a, b, len) in &support {
            let cand = h[a] + len;
            if cand < h[b] {
                h[b] = cand;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    let psi: Vec<f64> = (0..z)
        .map(|b| (0..z).map(|a| h[a] + dist[a][b]).fold(f64::INFINITY, f64::min))
        .collect();
    let primal = coupling.cost(mu, nu, &cost);
    let dual: f64 = mu.weights.iter().zip(&psi[..n]).map(|(w, p)| w * p).sum::<f64>()
        - nu.weights.iter().zip(&psi[n..]).map(|(w, p)| w * p).sum::<f64>();
    Ok(Certificate {
        primal,
        dual,
        gap: primal - dual,
        psi_mu: psi[..n].to_vec(),
        psi_nu: psi[n..].to_vec(),
    })
}

/// One row of a distance report.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DistanceRow {
    pub t: f64,
    pub w1_shifted: f64,
    pub primal: f64,
    pub dual: f64,
    pub gap: f64,
}

/// Write `t,w1_shifted,primal,dual,gap` CSV.
pub fn write_distance_report<W: Write>(mut w: W, rows: &[DistanceRow]) -> Result<()> {
    writeln!(w, "t,w1_shifted,primal,dual,gap")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{}",
            fmt_f64(r.t),
            fmt_f64(r.w1_shifted),
            fmt_f64(r.primal),
            fmt_f64(r.dual),
            fmt_f64(r.gap)
        )?;
    }
    Ok(())
}
