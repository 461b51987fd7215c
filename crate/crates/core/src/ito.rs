//! Numerical verification of the Itô formulas for `F(X)` and `F(Y)` at `N = 2, 3`.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::calculus::{compensated_sum, integration_table, solve_rde, young_sum, GridPath, MeshChars};
use crate::controlled::{compose_fx, compose_fy, ControlledPath};
use crate::error::{Error, Result};
use crate::forest::Letter;
use crate::function::{Directional, MapRef, Partial, VectorFieldFamily};
use crate::rough_path::{cbar_path_with, default_alpha, tilde_path, CbarVariant, RoughPath, ScalarExtensionPath};
use crate::scalar::Real;
use crate::stats::{loglog_slope, serialize_float};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Theorem {
    #[serde(rename = "simple-N2")]
    SimpleN2,
    #[serde(rename = "simple-N3")]
    SimpleN3,
    #[serde(rename = "general-N2")]
    GeneralN2,
    #[serde(rename = "general-N3")]
    GeneralN3,
}

impl Theorem {
    pub const ALL: [Theorem; 4] = [Theorem::SimpleN2, Theorem::SimpleN3, Theorem::GeneralN2, Theorem::GeneralN3];

    pub fn depth(self) -> usize {
        match self {
            Theorem::SimpleN2 | Theorem::GeneralN2 => 2,
            Theorem::SimpleN3 | Theorem::GeneralN3 => 3,
        }
    }

    pub fn is_general(self) -> bool {
        matches!(self, Theorem::GeneralN2 | Theorem::GeneralN3)
    }

    pub fn id(self) -> &'static str {
        match self {
            Theorem::SimpleN2 => "simple-N2",
            Theorem::SimpleN3 => "simple-N3",
            Theorem::GeneralN2 => "general-N2",
            Theorem::GeneralN3 => "general-N3",
        }
    }
}

impl fmt::Display for Theorem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for Theorem {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Theorem::ALL
            .into_iter()
            .find(|t| t.id().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Invalid(format!("unknown theorem `{s}`")))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ItoOptions {
    pub alpha: f64,
    pub tolerance: f64,
    pub slack: f64,
    /// Residuals at or below this are treated as exact.
    pub floor: f64,
    /// Mesh ladder in grid cells.
    pub strides: Vec<usize>,
    pub cbar: CbarVariant,
}

impl ItoOptions {
    pub fn new(depth: usize, strides: Vec<usize>) -> Self {
        ItoOptions {
            alpha: default_alpha(depth),
            tolerance: 1e-5,
            slack: 0.3,
            floor: 1e-12,
            strides,
            cbar: CbarVariant::default(),
        }
    }

    /// `(N+1)α − 1 − slack`.
    pub fn threshold(&self, depth: usize) -> f64 {
        (depth as f64 + 1.0) * self.alpha - 1.0 - self.slack
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct TermReport {
    pub name: String,
    pub kind: String,
    /// Value per mesh, coarsest first.
    pub values: Vec<Vec<f64>>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ItoReport {
    pub theorem: Theorem,
    pub interval: [f64; 2],
    pub meshes: Vec<f64>,
    pub lhs: Vec<f64>,
    pub terms: Vec<TermReport>,
    pub residuals: Vec<f64>,
    #[serde(serialize_with = "serialize_float")]
    pub order: f64,
    pub threshold: f64,
    pub tolerance: f64,
    pub verdict: bool,
    pub warnings: Vec<String>,
}

impl ItoReport {
    pub fn finest_residual(&self) -> f64 {
        *self.residuals.last().unwrap_or(&f64::NAN)
    }

    /// Finest-mesh value of a term.
    pub fn term(&self, name: &str) -> Option<&[f64]> {
        self.terms
            .iter()
            .find(|t| t.name == name)
            .and_then(|t| t.values.last())
            .map(|v| v.as_slice())
    }

    /// Convergence table rows `(mesh, residual, local order)`.
    pub fn table(&self) -> Vec<(f64, f64, f64)> {
        (0..self.meshes.len())
            .map(|k| {
                let order = if k == 0 {
                    f64::NAN
                } else {
                    (self.residuals[k - 1] / self.residuals[k]).ln() / (self.meshes[k - 1] / self.meshes[k]).ln()
                };
                (self.meshes[k], self.residuals[k], order)
            })
            .collect()
    }
}

enum Part<R> {
    Rough {
        y: ControlledPath<R>,
        table: Vec<(usize, usize)>,
        extended: bool,
    },
    Young {
        g: GridPath<R>,
        h: ScalarExtensionPath<R>,
    },
}

struct Term<R> {
    name: &'static str,
    parts: Vec<Part<R>>,
}

impl<R: Real> Term<R> {
    fn kind(&self) -> &'static str {
        match self.parts.first() {
            Some(Part::Young { .. }) => "young",
            _ => "rough",
        }
    }
}

fn base_letters<R: Real>(x: &RoughPath<R>) -> Result<Vec<u16>> {
    x.base_letters()
        .into_iter()
        .map(|l| match l {
            Letter::Base(i) => Ok(i),
            other => Err(Error::UnknownLetter(other.to_string())),
        })
        .collect()
}

fn check_pair<R: Real>(x: &RoughPath<R>, xhat: &RoughPath<R>, depth: usize) -> Result<()> {
    if x.depth() != depth {
        return Err(Error::Invalid(format!("verifier needs N = {depth}, got N = {}", x.depth())));
    }
    if xhat.depth() != depth || xhat.grid() != x.grid() {
        return Err(Error::Invalid("bracket extension does not match the rough path".into()));
    }
    if !xhat.alphabet().iter().any(|l| l.is_bracket()) {
        return Err(Error::Invalid("second rough path is not a bracket extension".into()));
    }
    Ok(())
}

fn rough_part<R: Real>(y: ControlledPath<R>, over: &RoughPath<R>, letter: Letter, extended: bool) -> Result<Part<R>> {
    let table = integration_table(&y, over, letter)?;
    Ok(Part::Rough { y, table, extended })
}

fn partial<R: Real>(f: &MapRef<R>, vars: &[usize]) -> Result<MapRef<R>> {
    let mut m = f.clone();
    for &v in vars {
        m = Arc::new(Partial::new(m, v)?);
    }
    Ok(m)
}

fn sample<R: Real>(m: &MapRef<R>, nodes: usize, at: impl Fn(usize) -> Vec<R>) -> Result<GridPath<R>> {
    GridPath::from_fn(m.dim_out(), nodes, |k| m.eval(&at(k)))
}

fn assemble<R: Real>(theorem: Theorem, x: &RoughPath<R>, xhat: &RoughPath<R>, lhs_of: impl Fn(usize) -> Vec<R>, terms: Vec<Term<R>>, a: usize, b: usize, opts: &ItoOptions) -> Result<ItoReport> {
    if opts.strides.len() < 4 {
        return Err(Error::Mesh("a mesh ladder needs at least 4 rungs".into()));
    }
    let mut strides = opts.strides.clone();
    strides.sort_unstable_by(|p, q| q.cmp(p));
    strides.dedup();
    let lhs: Vec<R> = lhs_of(b).iter().zip(lhs_of(a)).map(|(u, v)| *u - v).collect();
    let needs_hat = terms.iter().flat_map(|t| &t.parts).any(|p| match p {
        Part::Rough { extended, .. } => *extended,
        Part::Young { .. } => true,
    });
    let mut meshes = Vec::new();
    let mut residuals = Vec::new();
    let mut values: Vec<Vec<Vec<f64>>> = vec![Vec::new(); terms.len()];
    for &s in &strides {
        let mx = MeshChars::new(x, a, b, s)?;
        let mh = if needs_hat { Some(MeshChars::new(xhat, a, b, s)?) } else { None };
        meshes.push(mx.mesh(x));
        let mut total = vec![R::zero(); lhs.len()];
        for (ti, term) in terms.iter().enumerate() {
            let mut acc = vec![R::zero(); lhs.len()];
            for part in &term.parts {
                let v = match part {
                    Part::Rough { y, table, extended } => {
                        compensated_sum(y, table, if *extended { mh.as_ref().unwrap() } else { &mx })
                    }
                    Part::Young { g, h } => young_sum(g, h, mh.as_ref().unwrap()),
                };
                for (p, q) in acc.iter_mut().zip(v) {
                    *p = *p + q;
                }
            }
            for (p, q) in total.iter_mut().zip(&acc) {
                *p = *p + *q;
            }
            values[ti].push(acc.iter().map(|v| v.f64()).collect());
        }
        let r = lhs
            .iter()
            .zip(&total)
            .fold(0.0f64, |m, (l, t)| m.max((*l - *t).f64().abs()));
        residuals.push(r);
    }
    let order = loglog_slope(&meshes, &residuals, opts.floor);
    let threshold = opts.threshold(theorem.depth());
    let finest = *residuals.last().unwrap();
    let mut warnings = Vec::new();
    let converging = residuals.windows(2).all(|w| w[1] <= w[0] || w[1] <= opts.floor);
    if order < threshold && converging {
        warnings.push(format!(
            "residual decreases but fitted order {order:.3} is below the threshold {threshold:.3}"
        ));
    }
    if !(finest < opts.tolerance) {
        warnings.push(format!("finest residual {finest:.3e} exceeds tolerance {:.1e}", opts.tolerance));
    }
    Ok(ItoReport {
        theorem,
        interval: [x.grid().time(a).f64(), x.grid().time(b).f64()],
        meshes,
        lhs: lhs.iter().map(|v| v.f64()).collect(),
        terms: terms
            .iter()
            .zip(values)
            .map(|(t, v)| TermReport {
                name: t.name.to_string(),
                kind: t.kind().to_string(),
                values: v,
            })
            .collect(),
        residuals,
        order,
        threshold,
        tolerance: opts.tolerance,
        verdict: finest < opts.tolerance && order >= threshold,
        warnings,
    })
}

fn simple_terms<R: Real>(x: &Arc<RoughPath<R>>, xhat: &Arc<RoughPath<R>>, f: &MapRef<R>, depth: usize) -> Result<Vec<Term<R>>> {
    let letters = base_letters(x)?;
    if f.dim_in() != letters.len() {
        return Err(Error::Dimension(format!("F acts on ℝ^{} but the path lives in ℝ^{}", f.dim_in(), letters.len())));
    }
    let d = letters.len();
    let mut t1 = Vec::new();
    for i in 0..d {
        let y = compose_fx(x, &partial(f, &[i])?)?;
        t1.push(rough_part(y, x, Letter::Base(letters[i]), false)?);
    }
    let mut t2 = Vec::new();
    for i in 0..d {
        for j in 0..d {
            let y = compose_fx(x, &partial(f, &[i, j])?)?;
            t2.push(rough_part(y, xhat, Letter::Bracket(letters[i], letters[j]), true)?);
        }
    }
    let mut terms = vec![
        Term { name: "DF:dX", parts: t1 },
        Term {
            name: "D2F:dXhat",
            parts: t2,
        },
    ];
    if depth == 3 {
        let nodes = x.grid().nodes();
        let mut t3 = Vec::new();
        for i in 0..d {
            for j in 0..d {
                for k in 0..d {
                    let g = sample(&partial(f, &[i, j, k])?, nodes, |n| x.base_point(n))?;
                    let h = tilde_path(xhat, letters[i], letters[j], letters[k])?;
                    t3.push(Part::Young { g, h });
                }
            }
        }
        terms.push(Term {
            name: "D3F:dXtilde",
            parts: t3,
        });
    }
    Ok(terms)
}

fn verify_simple<R: Real>(theorem: Theorem, x: &Arc<RoughPath<R>>, xhat: &Arc<RoughPath<R>>, f: &MapRef<R>, a: usize, b: usize, opts: &ItoOptions) -> Result<ItoReport> {
    check_pair(x, xhat, theorem.depth())?;
    let terms = simple_terms(x, xhat, f, theorem.depth())?;
    assemble(theorem, x, xhat, |k| f.eval(&x.base_point(k)), terms, a, b, opts)
}

/// `δF(X)_{s,t} = ∫DF(X):dX + ∫D²F(X):dX̂` at `N = 2`.
pub fn verify_simple_n2<R: Real>(x: &Arc<RoughPath<R>>, xhat: &Arc<RoughPath<R>>, f: &MapRef<R>, a: usize, b: usize, opts: &ItoOptions) -> Result<ItoReport> {
    verify_simple(Theorem::SimpleN2, x, xhat, f, a, b, opts)
}

/// `δF(X)_{s,t} = ∫DF(X):dX + ∫D²F(X):dX̂ + ∫D³F(X):dX̃` at `N = 3`.
pub fn verify_simple_n3<R: Real>(x: &Arc<RoughPath<R>>, xhat: &Arc<RoughPath<R>>, f: &MapRef<R>, a: usize, b: usize, opts: &ItoOptions) -> Result<ItoReport> {
    verify_simple(Theorem::SimpleN3, x, xhat, f, a, b, opts)
}

fn directional<R: Real>(f: &MapRef<R>, dirs: Vec<MapRef<R>>) -> Result<MapRef<R>> {
    Ok(Arc::new(Directional::new(f.clone(), dirs)?))
}

fn general_terms<R: Real>(x: &Arc<RoughPath<R>>, xhat: &Arc<RoughPath<R>>, y: &ControlledPath<R>, fields: &VectorFieldFamily<R>, f: &MapRef<R>, depth: usize, cbar: CbarVariant) -> Result<Vec<Term<R>>> {
    let letters = base_letters(x)?;
    let d = letters.len();
    let fi = |i: usize| fields.field(i).clone();
    let mut t1 = Vec::new();
    for i in 0..d {
        let z = compose_fy(y, &directional(f, vec![fi(i)])?)?;
        t1.push(rough_part(z, x, Letter::Base(letters[i]), false)?);
    }
    let mut t2 = Vec::new();
    for i in 0..d {
        for j in 0..d {
            let z = compose_fy(y, &directional(f, vec![fi(i), fi(j)])?)?;
            t2.push(rough_part(z, xhat, Letter::Bracket(letters[i], letters[j]), true)?);
        }
    }
    let mut terms = vec![
        Term {
            name: "DF:(f dX)",
            parts: t1,
        },
        Term {
            name: "D2F:(f,f dXhat)",
            parts: t2,
        },
    ];
    if depth == 3 {
        let nodes = y.nodes();
        let mut t3 = Vec::new();
        let mut t4 = Vec::new();
        for i in 0..d {
            for j in 0..d {
                for k in 0..d {
                    let m3 = directional(f, vec![fi(i), fi(j), fi(k)])?;
                    t3.push(Part::Young {
                        g: sample(&m3, nodes, |n| y.value(n).to_vec())?,
                        h: tilde_path(xhat, letters[i], letters[j], letters[k])?,
                    });
                    let dfjk = directional(&fi(j), vec![fi(k)])?;
                    let m4 = directional(f, vec![fi(i), dfjk])?;
                    t4.push(Part::Young {
                        g: sample(&m4, nodes, |n| y.value(n).to_vec())?,
                        h: cbar_path_with(xhat, letters[i], letters[j], letters[k], cbar)?,
                    });
                }
            }
        }
        terms.push(Term {
            name: "D3F:(f,f,f dXtilde)",
            parts: t3,
        });
        terms.push(Term {
            name: "D2F:(f,Df:f dcbarX)",
            parts: t4,
        });
    }
    Ok(terms)
}

/// The general verifiers with an already computed solution `Y` of `dY = f(Y) dX`.
pub fn verify_general_with<R: Real>(theorem: Theorem, x: &Arc<RoughPath<R>>, xhat: &Arc<RoughPath<R>>, y: &ControlledPath<R>, fields: &VectorFieldFamily<R>, f: &MapRef<R>, a: usize, b: usize, opts: &ItoOptions) -> Result<ItoReport> {
    if !theorem.is_general() {
        return Err(Error::Invalid(format!("{theorem} is not a general-case theorem")));
    }
    check_pair(x, xhat, theorem.depth())?;
    if f.dim_in() != fields.dim() {
        return Err(Error::Dimension(format!("F acts on ℝ^{} but Y lives in ℝ^{}", f.dim_in(), fields.dim())));
    }
    let terms = general_terms(x, xhat, y, fields, f, theorem.depth(), opts.cbar)?;
    assemble(theorem, x, xhat, |k| f.eval(y.value(k)), terms, a, b, opts)
}

fn verify_general<R: Real>(theorem: Theorem, x: &Arc<RoughPath<R>>, xhat: &Arc<RoughPath<R>>, fields: &VectorFieldFamily<R>, f: &MapRef<R>, xi: &[R], bound: f64, a: usize, b: usize, opts: &ItoOptions) -> Result<ItoReport> {
    check_pair(x, xhat, theorem.depth())?;
    let y = solve_rde(x, fields, xi, bound)?;
    verify_general_with(theorem, x, xhat, &y, fields, f, a, b, opts)
}

/// `δF(Y) = ∫DF(Y):(f(Y)·dX) + ∫D²F(Y):((f(Y), f(Y))·dX̂)` for the solution `Y` at `N = 2`.
#[allow(clippy::too_many_arguments)]
pub fn verify_general_n2<R: Real>(x: &Arc<RoughPath<R>>, xhat: &Arc<RoughPath<R>>, fields: &VectorFieldFamily<R>, f: &MapRef<R>, xi: &[R], bound: f64, a: usize, b: usize, opts: &ItoOptions) -> Result<ItoReport> {
    verify_general(Theorem::GeneralN2, x, xhat, fields, f, xi, bound, a, b, opts)
}

/// The four-term identity for `F(Y)` at `N = 3`, with Young integrals against `X̃` and `c̄X`.
#[allow(clippy::too_many_arguments)]
pub fn verify_general_n3<R: Real>(x: &Arc<RoughPath<R>>, xhat: &Arc<RoughPath<R>>, fields: &VectorFieldFamily<R>, f: &MapRef<R>, xi: &[R], bound: f64, a: usize, b: usize, opts: &ItoOptions) -> Result<ItoReport> {
    verify_general(Theorem::GeneralN3, x, xhat, fields, f, xi, bound, a, b, opts)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn theorem_ids_round_trip() {
        for t in Theorem::ALL {
            assert_eq!(t.id().parse::<Theorem>().unwrap(), t);
            assert_eq!(serde_json::to_string(&t).unwrap(), format!("\"{}\"", t.id()));
        }
        assert!("simple-N4".parse::<Theorem>().is_err());
    }
}
