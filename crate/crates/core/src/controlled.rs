//! Controlled planarly branched rough paths and their constructions.

use std::sync::Arc;

use crate::algebra::TruncatedAlgebra;
use crate::calculus::{integration_table, local_sum};
use crate::error::{Error, Result};
use crate::forest::{b_plus, enumerate_forests_over, ForestIndex, Letter, PlanarForest};
use crate::function::MapRef;
use crate::jet::multilinear;
use crate::rough_path::RoughPath;
use crate::scalar::Real;
use crate::stats::loglog_slope;

/// Entries `(σ, left, c)` per `τ` with `⟨X ★ τ, Y⟩ = Σ c ⟨X, left⟩⟨σ, Y⟩`.
#[derive(Clone, Debug)]
pub struct Transport {
    rows: Vec<Vec<(u32, u32, i64)>>,
}

impl Transport {
    pub fn new(forests: &ForestIndex, algebra: &TruncatedAlgebra) -> Result<Self> {
        let mut rows = vec![Vec::new(); forests.len()];
        for (si, sigma) in forests.forests().iter().enumerate() {
            let sa = algebra.require(sigma)?;
            for cut in algebra.cuts(sa) {
                if let Some(ti) = forests.get(algebra.forest(cut.right as usize)) {
                    rows[ti].push((si as u32, cut.left, cut.coef));
                }
            }
        }
        Ok(Transport { rows })
    }
}

/// Coefficient paths `t ↦ ⟨τ, Y_t⟩ ∈ ℝⁿ` for `τ ∈ F^{≤N−1}` over the base letters,
/// sampled at the nodes of the reference rough path.
#[derive(Clone, Debug)]
pub struct ControlledPath<R> {
    rough: Arc<RoughPath<R>>,
    dim: usize,
    forests: Arc<ForestIndex>,
    transport: Arc<Transport>,
    values: Vec<R>,
}

/// Forest basis `F^{≤N−1}` over the base letters of `x`.
pub fn controlled_basis<R: Real>(x: &RoughPath<R>) -> Result<ForestIndex> {
    Ok(ForestIndex::new(enumerate_forests_over(&x.base_letters(), x.depth() - 1)?))
}

impl<R: Real> ControlledPath<R> {
    /// Builds a path from a per-node, per-forest coefficient generator.
    pub fn from_fn(rough: Arc<RoughPath<R>>, dim: usize, mut coef: impl FnMut(usize, usize, &PlanarForest, &mut [R])) -> Result<Self> {
        let forests = controlled_basis(&rough)?;
        let nodes = rough.grid().nodes();
        let mut values = vec![R::zero(); nodes * forests.len() * dim];
        for k in 0..nodes {
            for (fi, f) in forests.forests().iter().enumerate() {
                let off = (k * forests.len() + fi) * dim;
                coef(k, fi, f, &mut values[off..off + dim]);
            }
        }
        Self::assemble(rough, dim, forests, values)
    }

    fn assemble(rough: Arc<RoughPath<R>>, dim: usize, forests: ForestIndex, values: Vec<R>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Dimension("controlled path needs a positive dimension".into()));
        }
        if values.len() != rough.grid().nodes() * forests.len() * dim {
            return Err(Error::Dimension("coefficient table has the wrong size".into()));
        }
        let transport = Transport::new(&forests, rough.algebra())?;
        Ok(ControlledPath {
            rough,
            dim,
            forests: Arc::new(forests),
            transport: Arc::new(transport),
            values,
        })
    }

    /// Coefficients `(node, forest index)` taken from a flat table.
    pub fn from_values(rough: Arc<RoughPath<R>>, dim: usize, values: Vec<R>) -> Result<Self> {
        let forests = controlled_basis(&rough)?;
        Self::assemble(rough, dim, forests, values)
    }

    pub fn rough(&self) -> &Arc<RoughPath<R>> {
        &self.rough
    }

    pub fn depth(&self) -> usize {
        self.rough.depth()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nodes(&self) -> usize {
        self.rough.grid().nodes()
    }

    pub fn forests(&self) -> &ForestIndex {
        &self.forests
    }

    pub fn forest_index(&self, f: &PlanarForest) -> Result<usize> {
        self.forests.get(f).ok_or_else(|| {
            if f.degree() >= self.depth() {
                Error::DegreeTooHigh {
                    forest: f.key(),
                    degree: f.degree(),
                    depth: self.depth() - 1,
                }
            } else {
                Error::UnknownLetter(f.key())
            }
        })
    }

    /// `⟨τ, Y_{t_k}⟩` by forest index.
    pub fn coef(&self, k: usize, fi: usize) -> &[R] {
        let off = (k * self.forests.len() + fi) * self.dim;
        &self.values[off..off + self.dim]
    }

    pub fn coefficient(&self, k: usize, f: &PlanarForest) -> Result<&[R]> {
        Ok(self.coef(k, self.forest_index(f)?))
    }

    /// Base path `Y_{t_k} = ⟨𝟙, Y_{t_k}⟩`.
    pub fn value(&self, k: usize) -> &[R] {
        self.coef(k, 0)
    }

    pub fn values(&self) -> &[R] {
        &self.values
    }

    fn remainder_core(&self, transport: &Transport, g: &[R], ti: usize, a: usize, b: usize) -> Vec<R> {
        let mut out = self.coef(b, ti).to_vec();
        for &(si, l, c) in &transport.rows[ti] {
            let w = R::of_i64(c) * g[l as usize];
            if w.is_zero() {
                continue;
            }
            for (o, y) in out.iter_mut().zip(self.coef(a, si as usize)) {
                *o = *o - w * *y;
            }
        }
        out
    }

    /// `R Y^τ_{s,t} = ⟨τ, Y_t⟩ − ⟨X_{s,t} ★ τ, Y_s⟩` for nodes `a ≤ b`.
    pub fn remainder(&self, tau: &PlanarForest, a: usize, b: usize) -> Result<Vec<R>> {
        let ti = self.forest_index(tau)?;
        let g = self.rough.eval_char(a, b)?;
        Ok(self.remainder_core(&self.transport, &g, ti, a, b))
    }

    /// The same remainder tested against another rough path on the same grid,
    /// e.g. the bracket extension.
    pub fn remainder_against(&self, x: &RoughPath<R>, tau: &PlanarForest, a: usize, b: usize) -> Result<Vec<R>> {
        if x.grid() != self.rough.grid() {
            return Err(Error::Grid("rough paths live on different grids".into()));
        }
        let ti = self.forest_index(tau)?;
        let transport = Transport::new(&self.forests, x.algebra())?;
        let g = x.eval_char(a, b)?;
        Ok(self.remainder_core(&transport, &g, ti, a, b))
    }

    /// Largest remainder norm over consecutive windows of `stride` cells.
    pub fn max_remainder(&self, tau: &PlanarForest, stride: usize) -> Result<f64> {
        let ti = self.forest_index(tau)?;
        let mut m = 0.0f64;
        let mut a = 0;
        while stride > 0 && a + stride <= self.rough.cells() {
            let g = self.rough.eval_char(a, a + stride)?;
            let r = self.remainder_core(&self.transport, &g, ti, a, a + stride);
            m = r.iter().fold(m, |acc, x| acc.max(x.f64().abs()));
            a += stride;
        }
        Ok(m)
    }

    /// Log-log slope of the windowed remainder against the window length; `+∞` when the
    /// remainder vanishes to rounding at every scale.
    pub fn remainder_rate(&self, tau: &PlanarForest, scales: &[usize]) -> Result<f64> {
        if scales.len() < 4 {
            return Err(Error::Invalid("remainder_rate needs at least 4 scales".into()));
        }
        let mean = self.rough.mean_cell();
        let mut hs = Vec::new();
        let mut ms = Vec::new();
        for &s in scales {
            hs.push(mean * s as f64);
            ms.push(self.max_remainder(tau, s)?);
        }
        Ok(loglog_slope(&hs, &ms, self.rounding_floor()))
    }

    pub(crate) fn rounding_floor(&self) -> f64 {
        let scale = self.values.iter().fold(1.0f64, |acc, v| acc.max(v.f64().abs()));
        R::epsilon().f64() * 64.0 * scale
    }
}

fn word_exponents(f: &PlanarForest, letters: &[Letter]) -> Option<Vec<u8>> {
    let mut e = vec![0u8; letters.len()];
    for t in f.trees() {
        if !t.children.is_empty() {
            return None;
        }
        let p = letters.iter().position(|&l| l == t.root)?;
        e[p] += 1;
    }
    Some(e)
}

/// `F(X)`: `⟨𝟙⟩ = F(X_t)`, `⟨•_{i_1}⋯•_{i_m}⟩ = ∂_{i_1}⋯∂_{i_m}F(X_t)`, zero elsewhere.
pub fn compose_fx<R: Real>(x: &Arc<RoughPath<R>>, f: &MapRef<R>) -> Result<ControlledPath<R>> {
    let letters = x.base_letters();
    if f.dim_in() != letters.len() {
        return Err(Error::Dimension(format!(
            "map on ℝ^{} composed with a path in ℝ^{}",
            f.dim_in(),
            letters.len()
        )));
    }
    let order = x.depth() - 1;
    let mut jets = Vec::new();
    let mut cur = usize::MAX;
    ControlledPath::from_fn(x.clone(), f.dim_out(), |k, _, forest, out| {
        if cur != k {
            jets = f.jet(&x.base_point(k), order);
            cur = k;
        }
        if let Some(e) = word_exponents(forest, &letters) {
            for (o, p) in out.iter_mut().zip(&jets) {
                *o = p.derivative_at_zero(&e);
            }
        }
    })
}

/// Ordered splittings of `0..len` into `m` nonempty consecutive blocks, `m ≤ max_blocks`.
fn splittings(len: usize, max_blocks: usize) -> Vec<Vec<(usize, usize)>> {
    fn rec(start: usize, len: usize, left: usize, cur: &mut Vec<(usize, usize)>, out: &mut Vec<Vec<(usize, usize)>>) {
        if start == len {
            out.push(cur.clone());
            return;
        }
        if left == 0 {
            return;
        }
        for end in start + 1..=len {
            cur.push((start, end));
            rec(end, len, left - 1, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, len, max_blocks, &mut Vec::new(), &mut out);
    out
}

/// `F(Y)` with `⟨τ⟩ = Σ_m Σ_{τ_1⋯τ_m = τ} D^mF(Y_t):(⟨τ_1,Y_t⟩, …, ⟨τ_m,Y_t⟩)`.
pub fn compose_fy<R: Real>(y: &ControlledPath<R>, f: &MapRef<R>) -> Result<ControlledPath<R>> {
    if f.dim_in() != y.dim() {
        return Err(Error::Dimension(format!(
            "map on ℝ^{} composed with a controlled path in ℝ^{}",
            f.dim_in(),
            y.dim()
        )));
    }
    let max_m = y.depth() - 1;
    let plans: Vec<Vec<Vec<usize>>> = y
        .forests()
        .forests()
        .iter()
        .map(|tau| {
            splittings(tau.num_trees(), max_m)
                .into_iter()
                .map(|blocks| {
                    blocks
                        .iter()
                        .map(|&(lo, hi)| y.forests().get(&tau.slice(lo, hi)).expect("block in basis"))
                        .collect()
                })
                .collect()
        })
        .collect();
    let mut jets = Vec::new();
    let mut cur = usize::MAX;
    ControlledPath::from_fn(y.rough().clone(), f.dim_out(), |k, fi, forest, out| {
        if cur != k {
            jets = f.jet(y.value(k), max_m);
            cur = k;
        }
        if forest.is_empty() {
            for (o, p) in out.iter_mut().zip(&jets) {
                *o = p.value();
            }
            return;
        }
        for plan in &plans[fi] {
            let dirs: Vec<&[R]> = plan.iter().map(|&b| y.coef(k, b)).collect();
            for (o, p) in out.iter_mut().zip(&jets) {
                *o = *o + multilinear(p, &dirs);
            }
        }
    })
}

/// `∫ Y dX^ℓ` as a controlled path: cumulative compensated sums at `⟨𝟙⟩`,
/// `⟨[τ]_ℓ⟩ = ⟨τ, Y⟩`, zero elsewhere.
pub fn lift_integral<R: Real>(y: &ControlledPath<R>, letter: Letter) -> Result<ControlledPath<R>> {
    let x = y.rough();
    if !letter.is_base() || !x.base_letters().contains(&letter) {
        return Err(Error::UnknownLetter(letter.to_string()));
    }
    let table = integration_table(y, x, letter)?;
    let n = y.dim();
    let mut cumulative = vec![R::zero(); y.nodes() * n];
    for k in 0..x.cells() {
        let g = x.eval_char(k, k + 1)?;
        let inc = local_sum(y, &table, &g, k);
        for c in 0..n {
            cumulative[(k + 1) * n + c] = cumulative[k * n + c] + inc[c];
        }
    }
    let src: Vec<Option<usize>> = y
        .forests()
        .forests()
        .iter()
        .map(|f| match f.as_tree() {
            Some(t) if t.root == letter => y.forests().get(&t.children),
            _ => None,
        })
        .collect();
    ControlledPath::from_fn(x.clone(), n, |k, fi, forest, out| {
        if forest.is_empty() {
            out.copy_from_slice(&cumulative[k * n..(k + 1) * n]);
        } else if let Some(si) = src[fi] {
            out.copy_from_slice(y.coef(k, si));
        }
    })
}

/// `[τ]_ℓ` as a forest.
pub fn graft(tau: &PlanarForest, letter: Letter) -> PlanarForest {
    b_plus(tau, letter).to_forest()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn splitting_counts() {
        assert_eq!(splittings(1, 2).len(), 1);
        assert_eq!(splittings(2, 2).len(), 2);
        assert_eq!(splittings(3, 2).len(), 3);
        assert_eq!(splittings(3, 3).len(), 4);
        assert_eq!(splittings(0, 2).len(), 1);
    }
}
