//! Rough and Young integrals, the coefficient maps `f_τ`, and the step-N Euler scheme.

use std::sync::Arc;

use log::warn;
use serde::Serialize;

use crate::controlled::ControlledPath;
use crate::error::{Error, Result};
use crate::forest::{b_plus, enumerate_trees_over, Letter, PlanarForest, PlanarTree};
use crate::function::{Directional, MapRef, VectorFieldFamily};
use crate::rough_path::{RoughPath, ScalarExtensionPath};
use crate::scalar::Real;
use crate::stats::{loglog_slope, serialize_float};

/// Nodes `a, a + stride, …, b`.
pub fn partition(a: usize, b: usize, stride: usize) -> Result<Vec<usize>> {
    if a > b {
        return Err(Error::Interval(format!("start node {a} after end node {b}")));
    }
    if stride == 0 || !(b - a).is_multiple_of(stride) {
        return Err(Error::Mesh(format!("stride {stride} does not divide [{a}, {b}]")));
    }
    Ok((a..=b).step_by(stride).collect())
}

/// Step characters of `x` on every interval of a partition.
#[derive(Clone, Debug)]
pub struct MeshChars<R> {
    pub nodes: Vec<usize>,
    pub chars: Vec<Vec<R>>,
}

impl<R: Real> MeshChars<R> {
    pub fn new(x: &RoughPath<R>, a: usize, b: usize, stride: usize) -> Result<Self> {
        let nodes = partition(a, b, stride)?;
        let chars = nodes
            .windows(2)
            .map(|w| x.eval_char(w[0], w[1]))
            .collect::<Result<_>>()?;
        Ok(MeshChars { nodes, chars })
    }

    pub fn mesh(&self, x: &RoughPath<R>) -> f64 {
        let n = self.nodes.len().saturating_sub(1).max(1);
        (x.grid().time(*self.nodes.last().unwrap()) - x.grid().time(self.nodes[0])).f64() / n as f64
    }
}

/// Pairs `(τ, [τ]_ℓ)` of controlled-path forest indices and rough-path algebra indices.
pub fn integration_table<R: Real>(y: &ControlledPath<R>, x: &RoughPath<R>, letter: Letter) -> Result<Vec<(usize, usize)>> {
    if x.grid() != y.rough().grid() {
        return Err(Error::Grid("integrand and integrator live on different grids".into()));
    }
    if !x.alphabet().contains(&letter) {
        return Err(Error::UnknownLetter(letter.to_string()));
    }
    y.forests()
        .forests()
        .iter()
        .enumerate()
        .map(|(ti, tau)| Ok((ti, x.algebra().tree_index(&b_plus(tau, letter))?)))
        .collect()
}

/// `Σ_τ ⟨τ, Y_{t_u}⟩ ⟨g, [τ]_ℓ⟩` for one interval with character `g`.
pub fn local_sum<R: Real>(y: &ControlledPath<R>, table: &[(usize, usize)], g: &[R], u: usize) -> Vec<R> {
    let mut out = vec![R::zero(); y.dim()];
    for &(ti, ai) in table {
        let w = g[ai];
        if w.is_zero() {
            continue;
        }
        for (o, c) in out.iter_mut().zip(y.coef(u, ti)) {
            *o = *o + *c * w;
        }
    }
    out
}

/// Compensated Riemann sum over a precomputed mesh, summed left to right.
pub fn compensated_sum<R: Real>(y: &ControlledPath<R>, table: &[(usize, usize)], mesh: &MeshChars<R>) -> Vec<R> {
    let mut acc = vec![R::zero(); y.dim()];
    for (w, g) in mesh.nodes.windows(2).zip(&mesh.chars) {
        let inc = local_sum(y, table, g, w[0]);
        for (a, v) in acc.iter_mut().zip(inc) {
            *a = *a + v;
        }
    }
    acc
}

/// Mesh ladder diagnostics for an integral.
#[derive(Clone, Debug, Serialize)]
pub struct ConvergenceReport {
    pub meshes: Vec<f64>,
    pub values: Vec<Vec<f64>>,
    pub residuals: Vec<f64>,
    #[serde(serialize_with = "serialize_float")]
    pub slope: f64,
    pub local_defects: Vec<f64>,
    #[serde(serialize_with = "serialize_float")]
    pub local_slope: f64,
    pub pass: bool,
    pub warnings: Vec<String>,
}

fn max_abs<R: Real>(v: &[R]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.f64().abs()))
}

fn diff_norm(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
}

fn sorted_strides(strides: &[usize]) -> Result<Vec<usize>> {
    if strides.len() < 4 {
        return Err(Error::Mesh("a mesh ladder needs at least 4 rungs".into()));
    }
    let mut s = strides.to_vec();
    s.sort_unstable_by(|a, b| b.cmp(a));
    s.dedup();
    if s.len() != strides.len() {
        return Err(Error::Mesh("mesh ladder has repeated rungs".into()));
    }
    Ok(s)
}

fn ladder_report(meshes: Vec<f64>, values: Vec<Vec<f64>>, local_defects: Vec<f64>, local_h: &[f64], floor: f64, order: f64, local_order: f64, slack: f64) -> ConvergenceReport {
    let residuals: Vec<f64> = values.windows(2).map(|w| diff_norm(&w[0], &w[1])).collect();
    let slope = loglog_slope(&meshes[..residuals.len()], &residuals, floor);
    let local_slope = loglog_slope(local_h, &local_defects, floor);
    let pass = slope >= order - slack && local_slope >= local_order - slack;
    ConvergenceReport {
        meshes,
        values,
        residuals,
        slope,
        local_defects,
        local_slope,
        pass,
        warnings: Vec::new(),
    }
}

/// Largest three-point defect `|Ξ_{s,t} − Ξ_{s,u} − Ξ_{u,t}|` of a one-interval approximant
/// over windows of `2·half` cells.
fn max_defect<R: Real>(cells: usize, a: usize, b: usize, half: usize, xi: &dyn Fn(usize, usize) -> Result<Vec<R>>) -> Result<f64> {
    let mut m = 0.0f64;
    let mut s = a;
    while s + 2 * half <= b.min(cells) {
        let whole = xi(s, s + 2 * half)?;
        let l = xi(s, s + half)?;
        let r = xi(s + half, s + 2 * half)?;
        for c in 0..whole.len() {
            m = m.max((whole[c] - l[c] - r[c]).f64().abs());
        }
        s += 2 * half;
    }
    Ok(m)
}

/// `∫_s^t Y dX^ℓ` by compensated sums on each rung of a mesh ladder (strides in cells).
/// Returns the finest-mesh value.
pub fn rough_integral<R: Real>(y: &ControlledPath<R>, x: &RoughPath<R>, letter: Letter, a: usize, b: usize, strides: &[usize]) -> Result<(Vec<R>, ConvergenceReport)> {
    let table = integration_table(y, x, letter)?;
    let strides = sorted_strides(strides)?;
    let mut meshes = Vec::new();
    let mut values = Vec::new();
    let mut finest = Vec::new();
    for &s in &strides {
        let mesh = MeshChars::new(x, a, b, s)?;
        meshes.push(mesh.mesh(x));
        finest = compensated_sum(y, &table, &mesh);
        values.push(finest.iter().map(|v| v.f64()).collect());
    }
    let xi = |u: usize, v: usize| -> Result<Vec<R>> { Ok(local_sum(y, &table, &x.eval_char(u, v)?, u)) };
    let mut local = Vec::new();
    let mut local_h = Vec::new();
    for &s in &strides {
        if s % 2 == 0 {
            local.push(max_defect(x.cells(), a, b, s / 2, &xi)?);
            local_h.push(x.mean_cell() * s as f64);
        }
    }
    let n = x.depth() as f64;
    let alpha = x.alpha();
    let floor = y.rounding_floor() * (b - a).max(1) as f64;
    let report = ladder_report(meshes, values, local, &local_h, floor, (n + 1.0) * alpha - 1.0, (n + 1.0) * alpha, 0.3);
    Ok((finest, report))
}

/// Vector-valued path sampled at grid nodes.
#[derive(Clone, Debug, PartialEq)]
pub struct GridPath<R> {
    dim: usize,
    values: Vec<R>,
}

impl<R: Real> GridPath<R> {
    pub fn new(dim: usize, values: Vec<R>) -> Result<Self> {
        if dim == 0 || !values.len().is_multiple_of(dim) {
            return Err(Error::Dimension("grid path values do not match its dimension".into()));
        }
        Ok(GridPath { dim, values })
    }

    pub fn from_fn(dim: usize, nodes: usize, mut f: impl FnMut(usize) -> Vec<R>) -> Result<Self> {
        let mut values = Vec::with_capacity(dim * nodes);
        for k in 0..nodes {
            let v = f(k);
            if v.len() != dim {
                return Err(Error::Dimension("grid path sample has the wrong length".into()));
            }
            values.extend(v);
        }
        Self::new(dim, values)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nodes(&self) -> usize {
        self.values.len() / self.dim
    }

    pub fn value(&self, k: usize) -> &[R] {
        &self.values[k * self.dim..(k + 1) * self.dim]
    }

    /// Log-log slope of the largest windowed increment.
    pub fn holder_slope(&self, mean_cell: f64, scales: &[usize]) -> f64 {
        let cells = self.nodes().saturating_sub(1);
        let mut hs = Vec::new();
        let mut ms = Vec::new();
        for &s in scales {
            let mut m = 0.0f64;
            let mut a = 0;
            while s > 0 && a + s <= cells {
                for c in 0..self.dim {
                    m = m.max((self.value(a + s)[c] - self.value(a)[c]).f64().abs());
                }
                a += s;
            }
            hs.push(mean_cell * s as f64);
            ms.push(m);
        }
        loglog_slope(&hs, &ms, 0.0)
    }
}

/// Left-point sum `Σ g(t_u) δh_{u,v}` over a precomputed mesh of the rough path behind `h`.
pub fn young_sum<R: Real>(g: &GridPath<R>, h: &ScalarExtensionPath<R>, mesh: &MeshChars<R>) -> Vec<R> {
    let mut acc = vec![R::zero(); g.dim()];
    for (w, ch) in mesh.nodes.windows(2).zip(&mesh.chars) {
        let dh = h.increment_from_char(ch);
        if dh.is_zero() {
            continue;
        }
        for (a, v) in acc.iter_mut().zip(g.value(w[0])) {
            *a = *a + *v * dh;
        }
    }
    acc
}

/// Young-type integral `∫_s^t g dh` by left-point sums on each rung of a mesh ladder.
pub fn young_integral<R: Real>(g: &GridPath<R>, h: &ScalarExtensionPath<R>, a: usize, b: usize, strides: &[usize]) -> Result<(Vec<R>, ConvergenceReport)> {
    let x = h.rough();
    if g.nodes() != x.grid().nodes() {
        return Err(Error::Grid("integrand is not sampled on the integrator grid".into()));
    }
    let strides = sorted_strides(strides)?;
    let mut meshes = Vec::new();
    let mut values = Vec::new();
    let mut finest = Vec::new();
    for &s in &strides {
        let mesh = MeshChars::new(x, a, b, s)?;
        meshes.push(mesh.mesh(x));
        finest = young_sum(g, h, &mesh);
        values.push(finest.iter().map(|v| v.f64()).collect());
    }
    let xi = |u: usize, v: usize| -> Result<Vec<R>> {
        let dh = h.increment(u, v)?;
        Ok(g.value(u).iter().map(|&c| c * dh).collect())
    };
    let mut local = Vec::new();
    let mut local_h = Vec::new();
    for &s in &strides {
        if s % 2 == 0 {
            local.push(max_defect(x.cells(), a, b, s / 2, &xi)?);
            local_h.push(x.mean_cell() * s as f64);
        }
    }
    let alpha = x.alpha();
    let scale = g.values.iter().fold(1.0f64, |m, v| m.max(v.f64().abs()));
    let floor = R::epsilon().f64() * 64.0 * scale * (b - a).max(1) as f64;
    let mut report = ladder_report(meshes, values, local, &local_h, floor, 4.0 * alpha - 1.0, 4.0 * alpha, 0.3);
    let mut scales: Vec<usize> = strides.clone();
    scales.sort_unstable();
    let hg = g.holder_slope(x.mean_cell(), &scales);
    let hh = {
        let mut hs = Vec::new();
        let mut ms = Vec::new();
        for &s in &scales {
            let mut m = 0.0f64;
            let mut u = 0;
            while u + s <= x.cells() {
                m = m.max(h.increment(u, u + s)?.f64().abs());
                u += s;
            }
            hs.push(x.mean_cell() * s as f64);
            ms.push(m);
        }
        loglog_slope(&hs, &ms, 0.0)
    };
    if hg + hh <= 1.0 {
        let msg = format!(
            "Young precondition not met for {}: Hölder slopes {hg:.3} + {hh:.3} ≤ 1",
            h.label()
        );
        warn!("{msg}");
        report.warnings.push(msg);
    }
    Ok((finest, report))
}

/// `f_τ` for a tree over base letters: `f_{•_i} = f_i`,
/// `f_{[τ_1⋯τ_m]_i} = D^m f_i : (f_{τ_1}, …, f_{τ_m})`.
pub fn f_tau<R: Real>(f: &VectorFieldFamily<R>, tau: &PlanarTree) -> Result<MapRef<R>> {
    let i = match tau.root {
        Letter::Base(i) if (1..=f.len()).contains(&(i as usize)) => i as usize,
        other => return Err(Error::UnknownLetter(other.to_string())),
    };
    let base = f.field(i - 1).clone();
    if tau.children.is_empty() {
        return Ok(base);
    }
    let dirs = tau
        .children
        .trees()
        .iter()
        .map(|c| f_tau(f, c))
        .collect::<Result<Vec<_>>>()?;
    Ok(Arc::new(Directional::new(base, dirs)?))
}

/// [`f_tau`] for forests; only single trees are accepted.
pub fn f_forest<R: Real>(f: &VectorFieldFamily<R>, forest: &PlanarForest) -> Result<MapRef<R>> {
    match forest.as_tree() {
        Some(t) => f_tau(f, t),
        None => Err(Error::NotATree(forest.key())),
    }
}

/// Default blow-up bound of [`solve_rde`].
pub const DIVERGENCE_BOUND: f64 = 1e6;

/// Step-N Euler scheme `Y_{k+1} = Y_k + Σ_{τ ∈ T^{≤N}} f_τ(Y_k) ⟨X_{t_k,t_{k+1}}, τ⟩`.
/// The result carries `⟨τ, Y⟩ = f_τ(Y)` on trees of degree `≤ N−1` and zero on
/// forests with several trees.
pub fn solve_rde<R: Real>(x: &Arc<RoughPath<R>>, f: &VectorFieldFamily<R>, xi: &[R], bound: f64) -> Result<ControlledPath<R>> {
    let letters = x.base_letters();
    if f.len() != letters.len() {
        return Err(Error::Dimension(format!("{} vector fields for {} letters", f.len(), letters.len())));
    }
    if xi.len() != f.dim() {
        return Err(Error::Dimension(format!("initial value in ℝ^{} for fields on ℝ^{}", xi.len(), f.dim())));
    }
    let trees = enumerate_trees_over(&letters, x.depth())?;
    let maps: Vec<(usize, MapRef<R>)> = trees
        .iter()
        .map(|t| Ok((x.algebra().tree_index(t)?, f_tau(f, t)?)))
        .collect::<Result<_>>()?;
    let n = f.dim();
    let mut path = Vec::with_capacity(x.grid().nodes() * n);
    path.extend_from_slice(xi);
    let mut y = xi.to_vec();
    for k in 0..x.cells() {
        let g = x.step(k);
        let mut next = y.clone();
        for (ai, m) in &maps {
            let w = g[*ai];
            if w.is_zero() {
                continue;
            }
            for (o, v) in next.iter_mut().zip(m.eval(&y)) {
                *o = *o + v * w;
            }
        }
        let norm = max_abs(&next);
        if !norm.is_finite() || norm > bound {
            return Err(Error::Divergence {
                time: x.grid().time(k + 1).f64(),
                norm,
                bound,
            });
        }
        path.extend_from_slice(&next);
        y = next;
    }
    let coef_maps: Vec<Option<MapRef<R>>> = crate::controlled::controlled_basis(x)?
        .forests()
        .iter()
        .map(|fo| match fo.as_tree() {
            Some(t) => f_tau(f, t).map(Some),
            None => Ok(None),
        })
        .collect::<Result<_>>()?;
    ControlledPath::from_fn(x.clone(), n, |k, fi, forest, out| {
        let yk = &path[k * n..(k + 1) * n];
        if forest.is_empty() {
            out.copy_from_slice(yk);
        } else if let Some(m) = &coef_maps[fi] {
            out.copy_from_slice(&m.eval(yk));
        }
    })
}
