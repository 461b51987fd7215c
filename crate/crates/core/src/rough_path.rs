//! Planarly branched rough paths built from one-step characters on a grid.

use std::sync::Arc;

use crate::algebra::TruncatedAlgebra;
use crate::driver::{DriverSpec, Grid, ScalarPath};
use crate::error::{Error, Result};
use crate::forest::{b_plus, single, Letter, PlanarForest, PlanarTree};
use crate::hopf::{coproduct_series, Series, TensorSeries};
use crate::scalar::Real;
use crate::stats::loglog_slope;

/// Default number of RK4 substeps per grid cell.
pub const DEFAULT_SUBSTEPS: usize = 64;

/// Nominal Hölder exponent used for diagnostics when none is configured.
pub fn default_alpha(depth: usize) -> f64 {
    if depth <= 2 {
        0.45
    } else {
        0.30
    }
}

/// Step characters `g_k` on `[t_k, t_{k+1}]` together with a dyadic cache of their
/// ★-products, so that `X_{s,t}` costs `O(log M)` products.
#[derive(Clone, Debug)]
pub struct RoughPath<R> {
    algebra: Arc<TruncatedAlgebra>,
    grid: Grid<R>,
    levels: Vec<Vec<R>>,
    base: Vec<Vec<R>>,
    spec: Option<DriverSpec<R>>,
    substeps: usize,
    alpha: f64,
}

struct Driver<'a, R> {
    path: &'a ScalarPath<R>,
    table: Vec<(u32, u32, i64)>,
}

fn apply<R: Real>(g: &[R], drivers: &[Driver<'_, R>], rates: &[R], out: &mut [R]) {
    out.iter_mut().for_each(|x| *x = R::zero());
    for (d, r) in drivers.iter().zip(rates) {
        if r.is_zero() {
            continue;
        }
        for &(f, f1, c) in &d.table {
            let v = g[f1 as usize];
            out[f as usize] = out[f as usize] + *r * if c == 1 { v } else { R::of_i64(c) * v };
        }
    }
}

impl<R: Real> RoughPath<R> {
    /// Solves `g' = g ★ (Σ_i Ẋ^i •_i + Σ_τ λ̇_τ τ)` on every cell with `g(t_k) = 𝟙*`
    /// by classical RK4 over `substeps` equal substeps.
    pub fn lift(spec: &DriverSpec<R>, depth: usize, grid: &Grid<R>, substeps: usize) -> Result<Self> {
        if !(2..=3).contains(&depth) {
            return Err(Error::UnsupportedDepth(depth));
        }
        if substeps == 0 {
            return Err(Error::Invalid("substeps must be at least 1".into()));
        }
        let alphabet = spec.alphabet();
        let mut sorted = alphabet.clone();
        sorted.sort();
        sorted.dedup();
        if sorted.len() != alphabet.len() {
            return Err(Error::Invalid("duplicate letter in driver spec".into()));
        }
        for (tree, _) in &spec.intensities {
            let f = tree.to_forest();
            if !f.is_decorated_by(&alphabet) {
                return Err(Error::UnknownTree(tree.key()));
            }
            if tree.degree() > depth {
                return Err(Error::DegreeTooHigh {
                    forest: tree.key(),
                    degree: tree.degree(),
                    depth,
                });
            }
            if tree.degree() < 2 {
                return Err(Error::UnknownTree(format!(
                    "{} (single vertices are letter drivers)",
                    tree.key()
                )));
            }
        }
        let algebra = Arc::new(TruncatedAlgebra::new(&alphabet, depth)?);
        let mut drivers = Vec::new();
        for (l, p) in &spec.letters {
            let idx = algebra.tree_index(&single(*l))?;
            drivers.push(Driver {
                path: p,
                table: algebra.right_multiplication(idx),
            });
        }
        for (t, p) in &spec.intensities {
            let idx = algebra.tree_index(t)?;
            drivers.push(Driver {
                path: p,
                table: algebra.right_multiplication(idx),
            });
        }
        let dim = algebra.dim();
        let cells = grid.cells();
        let mut steps = vec![R::zero(); cells * dim];
        let m = R::of_usize(substeps);
        let half = R::of(0.5);
        let sixth = R::one() / R::of(6.0);
        let mut rates = vec![R::zero(); drivers.len()];
        let mut k1 = vec![R::zero(); dim];
        let mut k2 = vec![R::zero(); dim];
        let mut k3 = vec![R::zero(); dim];
        let mut k4 = vec![R::zero(); dim];
        let mut tmp = vec![R::zero(); dim];
        for k in 0..cells {
            let (t0, t1) = (grid.time(k), grid.time(k + 1));
            let g = &mut steps[k * dim..(k + 1) * dim];
            g[0] = R::one();
            for sub in 0..substeps {
                let a = t0 + (t1 - t0) * R::of_usize(sub) / m;
                let b = if sub + 1 == substeps {
                    t1
                } else {
                    t0 + (t1 - t0) * R::of_usize(sub + 1) / m
                };
                let h = b - a;
                let mid = a + h * half;
                let rate_at = |t: R, out: &mut [R]| {
                    for (r, d) in out.iter_mut().zip(&drivers) {
                        *r = d.path.derivative_within(t, a, b);
                    }
                };
                rate_at(a, &mut rates);
                apply(g, &drivers, &rates, &mut k1);
                rate_at(mid, &mut rates);
                for i in 0..dim {
                    tmp[i] = g[i] + h * half * k1[i];
                }
                apply(&tmp, &drivers, &rates, &mut k2);
                for i in 0..dim {
                    tmp[i] = g[i] + h * half * k2[i];
                }
                apply(&tmp, &drivers, &rates, &mut k3);
                rate_at(b, &mut rates);
                for i in 0..dim {
                    tmp[i] = g[i] + h * k3[i];
                }
                apply(&tmp, &drivers, &rates, &mut k4);
                for i in 0..dim {
                    g[i] = g[i] + h * sixth * (k1[i] + (k2[i] + k3[i]) * R::of(2.0) + k4[i]);
                }
            }
        }
        let x0: Vec<R> = algebra
            .alphabet()
            .iter()
            .map(|l| spec.path(*l).map(|p| p.value(grid.time(0))).unwrap_or_else(R::zero))
            .collect();
        let mut out = Self::assemble(algebra, grid.clone(), steps, &x0)?;
        out.spec = Some(spec.clone());
        out.substeps = substeps;
        out.alpha = default_alpha(depth);
        Ok(out)
    }

    /// Builds a rough path from explicit step characters (flattened, `cells × dim`).
    /// `x0` gives the starting point of the base path, one entry per letter of the
    /// algebra's (sorted) alphabet.
    pub fn from_steps(alphabet: &[Letter], depth: usize, grid: Grid<R>, steps: Vec<R>, x0: &[R]) -> Result<Self> {
        let algebra = Arc::new(TruncatedAlgebra::new(alphabet, depth)?);
        if steps.len() != grid.cells() * algebra.dim() {
            return Err(Error::Dimension(format!(
                "{} step coefficients for {} cells of dimension {}",
                steps.len(),
                grid.cells(),
                algebra.dim()
            )));
        }
        if x0.len() != algebra.alphabet().len() {
            return Err(Error::Dimension("initial point does not match alphabet".into()));
        }
        let mut out = Self::assemble(algebra, grid, steps, x0)?;
        out.alpha = default_alpha(depth);
        Ok(out)
    }

    fn assemble(algebra: Arc<TruncatedAlgebra>, grid: Grid<R>, steps: Vec<R>, x0: &[R]) -> Result<Self> {
        let dim = algebra.dim();
        let cells = grid.cells();
        let mut base = Vec::with_capacity(algebra.alphabet().len());
        for (li, l) in algebra.alphabet().iter().enumerate() {
            let idx = algebra.tree_index(&single(*l))?;
            let mut v = Vec::with_capacity(cells + 1);
            let mut acc = x0[li];
            v.push(acc);
            for k in 0..cells {
                acc = acc + steps[k * dim + idx];
                v.push(acc);
            }
            base.push(v);
        }
        let mut levels = vec![steps];
        let mut count = cells;
        while count >= 2 {
            let prev = levels.last().expect("level");
            let next_count = count / 2;
            let mut next = vec![R::zero(); next_count * dim];
            for k in 0..next_count {
                let a = &prev[(2 * k) * dim..(2 * k + 1) * dim];
                let b = &prev[(2 * k + 1) * dim..(2 * k + 2) * dim];
                algebra.star_into(a, b, &mut next[k * dim..(k + 1) * dim]);
            }
            levels.push(next);
            count = next_count;
        }
        Ok(RoughPath {
            algebra,
            grid,
            levels,
            base,
            spec: None,
            substeps: 0,
            alpha: 0.0,
        })
    }

    pub fn with_alpha(mut self, alpha: f64) -> Self {
        self.alpha = alpha;
        self
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn algebra(&self) -> &Arc<TruncatedAlgebra> {
        &self.algebra
    }

    pub fn alphabet(&self) -> &[Letter] {
        self.algebra.alphabet()
    }

    /// Base letters in increasing order.
    pub fn base_letters(&self) -> Vec<Letter> {
        self.alphabet().iter().copied().filter(|l| l.is_base()).collect()
    }

    pub fn depth(&self) -> usize {
        self.algebra.depth()
    }

    pub fn grid(&self) -> &Grid<R> {
        &self.grid
    }

    pub fn cells(&self) -> usize {
        self.grid.cells()
    }

    pub fn spec(&self) -> Option<&DriverSpec<R>> {
        self.spec.as_ref()
    }

    pub fn substeps(&self) -> usize {
        self.substeps
    }

    /// Step character on `[t_k, t_{k+1}]`.
    pub fn step(&self, k: usize) -> &[R] {
        let dim = self.algebra.dim();
        &self.levels[0][k * dim..(k + 1) * dim]
    }

    /// Base path value of `letter` at node `k`.
    pub fn base_value(&self, letter: Letter, k: usize) -> Result<R> {
        let li = self
            .alphabet()
            .iter()
            .position(|&l| l == letter)
            .ok_or_else(|| Error::UnknownLetter(letter.to_string()))?;
        Ok(self.base[li][k])
    }

    /// Base point in `ℝ^d` (base letters only) at node `k`.
    pub fn base_point(&self, k: usize) -> Vec<R> {
        self.alphabet()
            .iter()
            .enumerate()
            .filter(|(_, l)| l.is_base())
            .map(|(li, _)| self.base[li][k])
            .collect()
    }

    fn check_nodes(&self, a: usize, b: usize) -> Result<()> {
        if a > b {
            return Err(Error::Interval(format!("s index {a} after t index {b}")));
        }
        if b > self.cells() {
            return Err(Error::Interval(format!("node {b} beyond grid of {} cells", self.cells())));
        }
        Ok(())
    }

    /// Dense character `X_{t_a, t_b}`.
    pub fn eval_char(&self, a: usize, b: usize) -> Result<Vec<R>> {
        self.check_nodes(a, b)?;
        let dim = self.algebra.dim();
        let mut acc: Option<Vec<R>> = None;
        let mut pos = a;
        while pos < b {
            let mut l = 0;
            while l + 1 < self.levels.len() && pos.is_multiple_of(1 << (l + 1)) && pos + (1 << (l + 1)) <= b {
                l += 1;
            }
            let i = pos >> l;
            let block = &self.levels[l][i * dim..(i + 1) * dim];
            acc = Some(match acc {
                None => block.to_vec(),
                Some(v) => self.algebra.star(&v, block),
            });
            pos += 1 << l;
        }
        Ok(acc.unwrap_or_else(|| self.algebra.unit()))
    }

    /// `⟨X_{t_a,t_b}, ω⟩`.
    pub fn eval(&self, a: usize, b: usize, forest: &PlanarForest) -> Result<R> {
        let i = self.algebra.require(forest)?;
        Ok(self.eval_char(a, b)?[i])
    }

    /// `⟨X_{s,t}, ω⟩` for grid times `s ≤ t`.
    pub fn eval_at(&self, s: R, t: R, forest: &PlanarForest) -> Result<R> {
        if s > t {
            return Err(Error::Interval(format!("s = {s} after t = {t}")));
        }
        self.eval(self.grid.locate(s)?, self.grid.locate(t)?, forest)
    }

    /// `|⟨X_{s,u} ★ X_{u,t} − X_{s,t}, ω⟩|`.
    pub fn chen_residual(&self, a: usize, u: usize, b: usize, forest: &PlanarForest) -> Result<R> {
        if !(a <= u && u <= b) {
            return Err(Error::Interval("need s ≤ u ≤ t".into()));
        }
        let i = self.algebra.require(forest)?;
        let left = self.eval_char(a, u)?;
        let right = self.eval_char(u, b)?;
        let whole = self.eval_char(a, b)?;
        let prod = self.algebra.star(&left, &right);
        Ok((prod[i] - whole[i]).abs())
    }

    /// `|⟨X_{s,t}, σ ⧢ τ⟩ − ⟨X_{s,t}, σ⟩⟨X_{s,t}, τ⟩|`.
    pub fn character_residual(&self, a: usize, b: usize, sigma: &PlanarForest, tau: &PlanarForest) -> Result<R> {
        if sigma.degree() + tau.degree() > self.depth() {
            return Err(Error::DegreeTooHigh {
                forest: format!("{sigma} ⧢ {tau}"),
                degree: sigma.degree() + tau.degree(),
                depth: self.depth(),
            });
        }
        let g = self.eval_char(a, b)?;
        Ok(character_defect(&self.algebra, &g, sigma, tau)?.abs())
    }

    /// Increments `⟨X_{t_a, t_{a+stride}}, ω⟩` over consecutive windows.
    pub fn window_increments(&self, forest: &PlanarForest, stride: usize) -> Result<Vec<R>> {
        let i = self.algebra.require(forest)?;
        let mut out = Vec::new();
        let mut a = 0;
        while stride > 0 && a + stride <= self.cells() {
            out.push(self.eval_char(a, a + stride)?[i]);
            a += stride;
        }
        Ok(out)
    }

    /// Least-squares slope of `log max_s |⟨X_{s,s+h}, ω⟩|` against `log h` over the given
    /// scales (in grid cells); `+∞` for an identically vanishing component.
    pub fn holder_slope(&self, forest: &PlanarForest, scales: &[usize]) -> Result<f64> {
        if scales.len() < 4 {
            return Err(Error::Invalid("holder_slope needs at least 4 scales".into()));
        }
        let mean = self.mean_cell();
        let mut hs = Vec::new();
        let mut ms = Vec::new();
        for &s in scales {
            let inc = self.window_increments(forest, s)?;
            let m = inc.iter().fold(0.0f64, |acc, x| acc.max(x.f64().abs()));
            hs.push(mean * s as f64);
            ms.push(m);
        }
        Ok(loglog_slope(&hs, &ms, 0.0))
    }

    pub(crate) fn mean_cell(&self) -> f64 {
        let c = self.cells().max(1);
        (self.grid.time(self.cells()) - self.grid.time(0)).f64() / c as f64
    }

    /// Re-lifts over `A ∪ {(i,j)}` with bracket letters driven piecewise-linearly by the
    /// cell increments `⟨g_k, •_j•_i − [•_j]_i⟩`.
    pub fn bracket_extension(&self) -> Result<RoughPath<R>> {
        let spec = self
            .spec
            .as_ref()
            .ok_or_else(|| Error::Missing("rough path has no driver spec to re-lift".into()))?;
        if self.alphabet().iter().any(|l| l.is_bracket()) {
            return Err(Error::Invalid("rough path is already extended".into()));
        }
        let base = self.base_letters();
        let mut letters = spec.letters.clone();
        let knots = self.grid.times().to_vec();
        for &li in &base {
            for &lj in &base {
                let (Letter::Base(i), Letter::Base(j)) = (li, lj) else {
                    unreachable!()
                };
                let elem = self.algebra.sparse(&bracket_element(i, j))?;
                let mut values = Vec::with_capacity(knots.len());
                let mut acc = R::zero();
                values.push(acc);
                for k in 0..self.cells() {
                    acc = acc + self.algebra.pair(self.step(k), &elem);
                    values.push(acc);
                }
                letters.push((Letter::Bracket(i, j), ScalarPath::sampled(knots.clone(), values)?));
            }
        }
        let ext = DriverSpec {
            letters,
            intensities: spec.intensities.clone(),
        };
        Ok(RoughPath::lift(&ext, self.depth(), &self.grid, self.substeps)?.with_alpha(self.alpha))
    }
}

/// `⟨g, σ ⧢ τ⟩ − ⟨g, σ⟩⟨g, τ⟩` for a dense character `g`.
pub fn character_defect<R: Real>(algebra: &TruncatedAlgebra, g: &[R], sigma: &PlanarForest, tau: &PlanarForest) -> Result<R> {
    let a = algebra.require(sigma)?;
    let b = algebra.require(tau)?;
    let sh = algebra.shuffle_sparse(a, b)?;
    Ok(algebra.pair(g, &sh) - g[a] * g[b])
}

fn base(i: u16) -> Letter {
    Letter::Base(i)
}

fn ladder(child: Letter, root: Letter) -> PlanarTree {
    b_plus(&PlanarForest::single(child), root)
}

/// `•_j•_i − [•_j]_i`, whose pairing drives the bracket letter `(i,j)`.
pub fn bracket_element(i: u16, j: u16) -> Series<i64> {
    Series::from_terms([
        (PlanarForest::word(&[base(j), base(i)]), 1),
        (ladder(base(j), base(i)).to_forest(), -1),
    ])
}

/// `•_k•_j•_i − [•_k•_j]_i − [•_k]_(i,j)`.
pub fn tilde_element(i: u16, j: u16, k: u16) -> Series<i64> {
    let cherry = b_plus(&PlanarForest::word(&[base(k), base(j)]), base(i));
    Series::from_terms([
        (PlanarForest::word(&[base(k), base(j), base(i)]), 1),
        (cherry.to_forest(), -1),
        (ladder(base(k), Letter::Bracket(i, j)).to_forest(), -1),
    ])
}

/// `•_i[•_k]_j + [•_k]_j•_i − [[•_k]_j]_i − [•_k]_(i,j) − [•_k]_(j,i)`, taken literally.
/// Not primitive, even modulo the bracket relation; see [`cbar_element`].
pub fn cbar_element_literal(i: u16, j: u16, k: u16) -> Series<i64> {
    let inner = ladder(base(k), base(j));
    let dot_i = single(base(i));
    let tall = b_plus(&inner.to_forest(), base(i));
    Series::from_terms([
        (PlanarForest::from_trees(vec![dot_i.clone(), inner.clone()]), 1),
        (PlanarForest::from_trees(vec![inner, dot_i]), 1),
        (tall.to_forest(), -1),
        (ladder(base(k), Letter::Bracket(i, j)).to_forest(), -1),
        (ladder(base(k), Letter::Bracket(j, i)).to_forest(), -1),
    ])
}

/// The literal element minus the two cherries `[•_k•_i]_j + [•_i•_k]_j`; primitive
/// modulo `•_(a,b) ≡ •_b•_a − [•_b]_a`, so its increments are additive on `X̂`.
pub fn cbar_element(i: u16, j: u16, k: u16) -> Series<i64> {
    let mut s = cbar_element_literal(i, j, k);
    s.add_term(b_plus(&PlanarForest::word(&[base(k), base(i)]), base(j)).to_forest(), -1);
    s.add_term(b_plus(&PlanarForest::word(&[base(i), base(k)]), base(j)).to_forest(), -1);
    s
}

/// Which degree-3 element drives `c̄X`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CbarVariant {
    #[default]
    Corrected,
    Literal,
}

impl CbarVariant {
    pub fn element(self, i: u16, j: u16, k: u16) -> Series<i64> {
        match self {
            CbarVariant::Corrected => cbar_element(i, j, k),
            CbarVariant::Literal => cbar_element_literal(i, j, k),
        }
    }
}

/// Replaces every tensor factor equal to a bracket vertex `•_(a,b)` by `•_b•_a − [•_b]_a`.
pub fn reduce_brackets(t: &TensorSeries<i64>) -> TensorSeries<i64> {
    let expand = |f: &PlanarForest| -> Vec<(PlanarForest, i64)> {
        match f.as_tree() {
            Some(tree) if tree.children.is_empty() => match tree.root {
                Letter::Bracket(a, b) => bracket_element(a, b).iter().map(|(g, c)| (g.clone(), *c)).collect(),
                _ => vec![(f.clone(), 1)],
            },
            _ => vec![(f.clone(), 1)],
        }
    };
    let mut out = TensorSeries::zero();
    for (a, b, c) in t.iter() {
        for (a2, ca) in expand(a) {
            for (b2, cb) in expand(b) {
                out.add_term(a2.clone(), b2, c * ca * cb);
            }
        }
    }
    out
}

/// Primitivity after [`reduce_brackets`]; the sense in which the degree-3 extension
/// elements are primitive.
pub fn is_primitive_mod_brackets(s: &Series<i64>) -> bool {
    let mut reduced = reduce_brackets(&coproduct_series(s));
    for (f, c) in s.iter() {
        reduced.add_term(f.clone(), PlanarForest::empty(), -c);
        reduced.add_term(PlanarForest::empty(), f.clone(), -c);
    }
    reduce_brackets(&reduced).is_zero()
}

/// Scalar path given by its increments `⟨X̂_{s,t}, e⟩` for a fixed element `e`.
#[derive(Clone, Debug)]
pub struct ScalarExtensionPath<R> {
    label: String,
    rough: Arc<RoughPath<R>>,
    element: Series<i64>,
    sparse: Vec<(usize, i64)>,
}

impl<R: Real> ScalarExtensionPath<R> {
    pub fn new(rough: Arc<RoughPath<R>>, label: impl Into<String>, element: Series<i64>) -> Result<Self> {
        let sparse = rough.algebra().sparse(&element)?;
        Ok(ScalarExtensionPath {
            label: label.into(),
            rough,
            element,
            sparse,
        })
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn element(&self) -> &Series<i64> {
        &self.element
    }

    pub fn rough(&self) -> &Arc<RoughPath<R>> {
        &self.rough
    }

    pub fn increment(&self, a: usize, b: usize) -> Result<R> {
        Ok(self.increment_from_char(&self.rough.eval_char(a, b)?))
    }

    /// Pairing with an already evaluated character of the underlying rough path.
    pub fn increment_from_char(&self, g: &[R]) -> R {
        self.rough.algebra().pair(g, &self.sparse)
    }

    /// `|δ(s,u) + δ(u,t) − δ(s,t)|`.
    pub fn additivity_defect(&self, a: usize, u: usize, b: usize) -> Result<R> {
        Ok((self.increment(a, u)? + self.increment(u, b)? - self.increment(a, b)?).abs())
    }
}

fn require_extension<R: Real>(x: &RoughPath<R>, letters: &[Letter]) -> Result<()> {
    if x.depth() != 3 {
        return Err(Error::Invalid(format!("degree-3 extension paths need N = 3, got N = {}", x.depth())));
    }
    for l in letters {
        if !x.alphabet().contains(l) {
            return Err(Error::UnknownLetter(format!("{l} (expected a bracket extension)")));
        }
    }
    Ok(())
}

/// `X̂^{(ij)}` as a scalar path over the bracket extension.
pub fn bracket_path<R: Real>(xhat: &Arc<RoughPath<R>>, i: u16, j: u16) -> Result<ScalarExtensionPath<R>> {
    ScalarExtensionPath::new(
        xhat.clone(),
        format!("Xhat({i},{j})"),
        Series::from_forest(PlanarForest::single(Letter::Bracket(i, j))),
    )
}

/// `X̃^{(ijk)}` with increments `⟨X̂_{s,t}, •_k•_j•_i − [•_k•_j]_i − [•_k]_(i,j)⟩`.
pub fn tilde_path<R: Real>(xhat: &Arc<RoughPath<R>>, i: u16, j: u16, k: u16) -> Result<ScalarExtensionPath<R>> {
    require_extension(xhat, &[Letter::Bracket(i, j)])?;
    ScalarExtensionPath::new(xhat.clone(), format!("Xtilde({i},{j},{k})"), tilde_element(i, j, k))
}

/// `c̄X^{(ijk)}` with increments `⟨X̂_{s,t}, e⟩` for [`cbar_element`].
pub fn cbar_path<R: Real>(xhat: &Arc<RoughPath<R>>, i: u16, j: u16, k: u16) -> Result<ScalarExtensionPath<R>> {
    cbar_path_with(xhat, i, j, k, CbarVariant::Corrected)
}

pub fn cbar_path_with<R: Real>(xhat: &Arc<RoughPath<R>>, i: u16, j: u16, k: u16, variant: CbarVariant) -> Result<ScalarExtensionPath<R>> {
    require_extension(xhat, &[Letter::Bracket(i, j), Letter::Bracket(j, i)])?;
    let label = match variant {
        CbarVariant::Corrected => format!("cbarX({i},{j},{k})"),
        CbarVariant::Literal => format!("cbarX-literal({i},{j},{k})"),
    };
    ScalarExtensionPath::new(xhat.clone(), label, variant.element(i, j, k))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f(s: &str) -> PlanarForest {
        PlanarForest::parse(s).unwrap()
    }

    fn linear_lift(c: f64, depth: usize) -> RoughPath<f64> {
        let mut spec = DriverSpec::from_paths(vec![ScalarPath::linear(1.0)]);
        if c != 0.0 {
            spec = spec.with_intensity(f("[•1]1").as_tree().unwrap().clone(), ScalarPath::linear(c));
        }
        RoughPath::lift(&spec, depth, &Grid::uniform(1.0, 16).unwrap(), 8).unwrap()
    }

    #[test]
    fn linear_driver_values() {
        let x = linear_lift(0.0, 2);
        assert!((x.eval(0, 16, &f("[•1]1")).unwrap() - 0.5).abs() < 1e-14);
        assert!((x.eval(0, 16, &f("•1•1")).unwrap() - 0.5).abs() < 1e-14);
        assert_eq!(x.eval(0, 16, &f("e")).unwrap(), 1.0);
        assert!((x.eval(0, 16, &f("•1")).unwrap() - 1.0).abs() < 1e-14);
        assert_eq!(x.eval(5, 5, &f("•1")).unwrap(), 0.0);
        assert_eq!(x.eval(5, 5, &f("e")).unwrap(), 1.0);
        let y = linear_lift(0.3, 2);
        assert!((y.eval(0, 16, &f("[•1]1")).unwrap() - 0.8).abs() < 1e-14);
        assert!((y.eval(0, 16, &f("•1•1")).unwrap() - 0.5).abs() < 1e-14);
    }

    #[test]
    fn errors() {
        let x = linear_lift(0.0, 2);
        assert!(matches!(x.eval(3, 2, &f("•1")), Err(Error::Interval(_))));
        assert!(matches!(x.eval(0, 2, &f("•1•1•1")), Err(Error::DegreeTooHigh { .. })));
        let spec = DriverSpec::from_paths(vec![ScalarPath::linear(1.0)])
            .with_intensity(f("[•2]1").as_tree().unwrap().clone(), ScalarPath::linear(1.0));
        let g = Grid::uniform(1.0, 4).unwrap();
        assert!(matches!(RoughPath::lift(&spec, 2, &g, 4), Err(Error::UnknownTree(_))));
        let spec = DriverSpec::from_paths(vec![ScalarPath::linear(1.0)])
            .with_intensity(f("[•1•1]1").as_tree().unwrap().clone(), ScalarPath::linear(1.0));
        assert!(matches!(RoughPath::lift(&spec, 2, &g, 4), Err(Error::DegreeTooHigh { .. })));
        assert!(matches!(RoughPath::lift(&spec, 4, &g, 4), Err(Error::UnsupportedDepth(4))));
        let no_spec = RoughPath::from_steps(x.alphabet(), 2, x.grid().clone(), (0..16).flat_map(|k| x.step(k).to_vec()).collect(), &[0.0]).unwrap();
        assert!(matches!(no_spec.bracket_extension(), Err(Error::Missing(_))));
    }

    #[test]
    fn bracket_of_intensity() {
        let x = linear_lift(0.25, 2);
        let xh = x.bracket_extension().unwrap();
        let v = xh.eval(0, 16, &PlanarForest::single(Letter::Bracket(1, 1))).unwrap();
        assert!((v + 0.25).abs() < 1e-13);
    }
}
