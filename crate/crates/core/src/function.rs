//! Smooth maps `ℝⁿ → ℝᵐ` with exact derivatives from truncated Taylor jets.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::jet::{multilinear, Poly};
use crate::scalar::Real;

/// A smooth map with Taylor jets of any order.
pub trait SmoothMap<R: Real>: Send + Sync + fmt::Debug {
    fn dim_in(&self) -> usize;
    fn dim_out(&self) -> usize;

    /// Taylor polynomials of every output component at `y`, truncated at `order`.
    fn jet(&self, y: &[R], order: usize) -> Vec<Poly<R>>;

    fn eval(&self, y: &[R]) -> Vec<R> {
        self.jet(y, 0).iter().map(Poly::value).collect()
    }

    /// `D^m F(y) : (v_1, …, v_m)`; `m = 0` gives `F(y)`.
    fn differential(&self, y: &[R], dirs: &[&[R]]) -> Vec<R> {
        self.jet(y, dirs.len()).iter().map(|p| multilinear(p, dirs)).collect()
    }
}

pub type MapRef<R> = Arc<dyn SmoothMap<R>>;

/// Expression tree over the input coordinates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Expr {
    Const(f64),
    Var(usize),
    Add(Vec<Expr>),
    Mul(Vec<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Neg(Box<Expr>),
    Powi(Box<Expr>, u32),
    Sin(Box<Expr>),
    Cos(Box<Expr>),
    Exp(Box<Expr>),
}

impl Expr {
    pub fn var(i: usize) -> Self {
        Expr::Var(i)
    }

    pub fn max_var(&self) -> Option<usize> {
        match self {
            Expr::Const(_) => None,
            Expr::Var(i) => Some(*i),
            Expr::Add(v) | Expr::Mul(v) => v.iter().filter_map(Expr::max_var).max(),
            Expr::Sub(a, b) => a.max_var().max(b.max_var()),
            Expr::Neg(a) | Expr::Powi(a, _) | Expr::Sin(a) | Expr::Cos(a) | Expr::Exp(a) => a.max_var(),
        }
    }

    pub fn eval<R: Real>(&self, y: &[R]) -> R {
        match self {
            Expr::Const(c) => R::of(*c),
            Expr::Var(i) => y[*i],
            Expr::Add(v) => v.iter().fold(R::zero(), |acc, e| acc + e.eval(y)),
            Expr::Mul(v) => v.iter().fold(R::one(), |acc, e| acc * e.eval(y)),
            Expr::Sub(a, b) => a.eval(y) - b.eval(y),
            Expr::Neg(a) => -a.eval(y),
            Expr::Powi(a, n) => a.eval(y).powi(*n as i32),
            Expr::Sin(a) => a.eval(y).sin(),
            Expr::Cos(a) => a.eval(y).cos(),
            Expr::Exp(a) => a.eval(y).exp(),
        }
    }

    pub fn eval_jet<R: Real>(&self, vars: &[Poly<R>]) -> Poly<R> {
        let (n, k) = (vars[0].nvars(), vars[0].order());
        match self {
            Expr::Const(c) => Poly::constant(n, k, R::of(*c)),
            Expr::Var(i) => vars[*i].clone(),
            Expr::Add(v) => v
                .iter()
                .fold(Poly::zero(n, k), |acc, e| acc.add(&e.eval_jet(vars))),
            Expr::Mul(v) => v
                .iter()
                .fold(Poly::constant(n, k, R::one()), |acc, e| acc.mul(&e.eval_jet(vars))),
            Expr::Sub(a, b) => a.eval_jet(vars).sub(&b.eval_jet(vars)),
            Expr::Neg(a) => a.eval_jet(vars).scale(-R::one()),
            Expr::Powi(a, p) => a.eval_jet(vars).powi(*p),
            Expr::Sin(a) => a.eval_jet(vars).sin(),
            Expr::Cos(a) => a.eval_jet(vars).cos(),
            Expr::Exp(a) => a.eval_jet(vars).exp(),
        }
    }
}

/// Vector of expressions in `dim_in` variables.
#[derive(Clone, Debug, PartialEq)]
pub struct ExprMap {
    dim_in: usize,
    components: Vec<Expr>,
}

impl ExprMap {
    pub fn new(dim_in: usize, components: Vec<Expr>) -> Result<Self> {
        if dim_in == 0 {
            return Err(Error::Dimension("map needs at least one input".into()));
        }
        if components.is_empty() {
            return Err(Error::Dimension("map needs at least one output".into()));
        }
        for c in &components {
            if let Some(v) = c.max_var() {
                if v >= dim_in {
                    return Err(Error::Dimension(format!("variable {v} outside input dimension {dim_in}")));
                }
            }
        }
        Ok(ExprMap { dim_in, components })
    }

    pub fn components(&self) -> &[Expr] {
        &self.components
    }
}

impl<R: Real> SmoothMap<R> for ExprMap {
    fn dim_in(&self) -> usize {
        self.dim_in
    }

    fn dim_out(&self) -> usize {
        self.components.len()
    }

    fn jet(&self, y: &[R], order: usize) -> Vec<Poly<R>> {
        let vars = Poly::variables(y, order);
        self.components.iter().map(|e| e.eval_jet(&vars)).collect()
    }

    fn eval(&self, y: &[R]) -> Vec<R> {
        self.components.iter().map(|e| e.eval(y)).collect()
    }
}

/// `y ↦ ∂_i F(y)`.
#[derive(Clone, Debug)]
pub struct Partial<R> {
    base: MapRef<R>,
    var: usize,
}

impl<R: Real> Partial<R> {
    pub fn new(base: MapRef<R>, var: usize) -> Result<Self> {
        if var >= base.dim_in() {
            return Err(Error::Dimension(format!("partial in variable {var} of a map on ℝ^{}", base.dim_in())));
        }
        Ok(Partial { base, var })
    }
}

impl<R: Real> SmoothMap<R> for Partial<R> {
    fn dim_in(&self) -> usize {
        self.base.dim_in()
    }

    fn dim_out(&self) -> usize {
        self.base.dim_out()
    }

    fn jet(&self, y: &[R], order: usize) -> Vec<Poly<R>> {
        self.base.jet(y, order + 1).iter().map(|p| p.partial(self.var)).collect()
    }
}

/// `y ↦ D^m F(y) : (g_1(y), …, g_m(y))`.
#[derive(Clone, Debug)]
pub struct Directional<R> {
    base: MapRef<R>,
    dirs: Vec<MapRef<R>>,
}

impl<R: Real> Directional<R> {
    pub fn new(base: MapRef<R>, dirs: Vec<MapRef<R>>) -> Result<Self> {
        let n = base.dim_in();
        for g in &dirs {
            if g.dim_in() != n || g.dim_out() != n {
                return Err(Error::Dimension(format!(
                    "direction ℝ^{} → ℝ^{} does not match base input ℝ^{n}",
                    g.dim_in(),
                    g.dim_out()
                )));
            }
        }
        Ok(Directional { base, dirs })
    }
}

impl<R: Real> SmoothMap<R> for Directional<R> {
    fn dim_in(&self) -> usize {
        self.base.dim_in()
    }

    fn dim_out(&self) -> usize {
        self.base.dim_out()
    }

    fn jet(&self, y: &[R], order: usize) -> Vec<Poly<R>> {
        let m = self.dirs.len();
        let n = self.base.dim_in();
        let base = self.base.jet(y, order + m);
        let g: Vec<Vec<Poly<R>>> = self.dirs.iter().map(|d| d.jet(y, order)).collect();
        let mut out: Vec<Poly<R>> = vec![Poly::zero(n, order); base.len()];
        let mut idx = vec![0usize; m];
        loop {
            let mut w = Poly::constant(n, order, R::one());
            for (r, &a) in idx.iter().enumerate() {
                w = w.mul(&g[r][a]);
            }
            for (c, p) in base.iter().enumerate() {
                let mut q = p.clone();
                for &a in &idx {
                    q = q.partial(a);
                }
                out[c] = out[c].add(&q.mul(&w));
            }
            let mut r = 0;
            loop {
                if r == m {
                    return out;
                }
                idx[r] += 1;
                if idx[r] < n {
                    break;
                }
                idx[r] = 0;
                r += 1;
            }
        }
    }
}

/// Built-in scalar and vector test maps, or explicit expression components.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum FunctionSpec {
    Builtin {
        name: String,
        #[serde(default)]
        params: Vec<f64>,
    },
    Expr {
        components: Vec<Expr>,
    },
}

impl FunctionSpec {
    pub fn builtin(name: &str, params: &[f64]) -> Self {
        FunctionSpec::Builtin {
            name: name.to_string(),
            params: params.to_vec(),
        }
    }

    pub fn to_map(&self, dim_in: usize) -> Result<ExprMap> {
        match self {
            FunctionSpec::Expr { components } => ExprMap::new(dim_in, components.clone()),
            FunctionSpec::Builtin { name, params } => ExprMap::new(dim_in, builtin(name, params, dim_in)?),
        }
    }

    pub fn build<R: Real>(&self, dim_in: usize) -> Result<MapRef<R>> {
        Ok(Arc::new(self.to_map(dim_in)?))
    }
}

fn weighted_sum(params: &[f64], n: usize) -> Result<Expr> {
    let w: Vec<f64> = if params.is_empty() { vec![1.0; n] } else { params.to_vec() };
    if w.len() != n {
        return Err(Error::Dimension(format!("expected {n} weights, got {}", w.len())));
    }
    Ok(Expr::Add(
        w.iter()
            .enumerate()
            .map(|(i, &c)| Expr::Mul(vec![Expr::Const(c), Expr::Var(i)]))
            .collect(),
    ))
}

fn builtin(name: &str, params: &[f64], n: usize) -> Result<Vec<Expr>> {
    let s = || weighted_sum(params, n);
    Ok(match name {
        "constant" => {
            if params.is_empty() {
                vec![Expr::Const(1.0)]
            } else {
                params.iter().map(|&c| Expr::Const(c)).collect()
            }
        }
        "identity" => (0..n).map(Expr::Var).collect(),
        "linear" => vec![s()?],
        "square" => vec![Expr::Powi(Box::new(s()?), 2)],
        "cube" => vec![Expr::Powi(Box::new(s()?), 3)],
        "product" => vec![Expr::Mul((0..n).map(Expr::Var).collect())],
        "sin" => vec![Expr::Sin(Box::new(s()?))],
        "cos" => vec![Expr::Cos(Box::new(s()?))],
        "exp" => vec![Expr::Exp(Box::new(s()?))],
        "quadratic-form" => {
            if params.len() != n * n {
                return Err(Error::Dimension(format!("quadratic-form needs {} entries, got {}", n * n, params.len())));
            }
            let mut terms = Vec::new();
            for i in 0..n {
                for j in 0..n {
                    let q = params[i * n + j];
                    if q != 0.0 {
                        terms.push(Expr::Mul(vec![Expr::Const(q), Expr::Var(i), Expr::Var(j)]));
                    }
                }
            }
            vec![Expr::Add(terms)]
        }
        other => return Err(Error::Invalid(format!("unknown built-in function `{other}`"))),
    })
}

/// Vector fields `f_1, …, f_d : ℝⁿ → ℝⁿ`, one per base letter.
#[derive(Clone, Debug)]
pub struct VectorFieldFamily<R> {
    dim: usize,
    fields: Vec<MapRef<R>>,
}

impl<R: Real> VectorFieldFamily<R> {
    pub fn new(fields: Vec<MapRef<R>>) -> Result<Self> {
        let dim = fields
            .first()
            .map(|f| f.dim_in())
            .ok_or_else(|| Error::Dimension("no vector fields".into()))?;
        for f in &fields {
            if f.dim_in() != dim || f.dim_out() != dim {
                return Err(Error::Dimension(format!(
                    "vector field ℝ^{} → ℝ^{} in a family on ℝ^{dim}",
                    f.dim_in(),
                    f.dim_out()
                )));
            }
        }
        Ok(VectorFieldFamily { dim, fields })
    }

    pub fn from_specs(specs: &[FunctionSpec], dim: usize) -> Result<Self> {
        Self::new(specs.iter().map(|s| s.build(dim)).collect::<Result<_>>()?)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.fields.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fields.is_empty()
    }

    pub fn field(&self, i: usize) -> &MapRef<R> {
        &self.fields[i]
    }

    pub fn fields(&self) -> &[MapRef<R>] {
        &self.fields
    }
}
