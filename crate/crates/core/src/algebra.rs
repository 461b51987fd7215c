//! Dense indexed form of the truncated dual algebra used by the numerical layers.

use crate::error::{Error, Result};
use crate::forest::{enumerate_forests_over, ForestIndex, Letter, PlanarForest, PlanarTree};
use crate::hopf::{coproduct_mkw, shuffle, Series};
use crate::scalar::Real;

/// Coproduct term `c · basis[left] ⊗ basis[right]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CutTerm {
    pub left: u32,
    pub right: u32,
    pub coef: i64,
}

/// Basis `F^{≤N}` over an alphabet with per-forest coproduct tables.
#[derive(Clone, Debug)]
pub struct TruncatedAlgebra {
    alphabet: Vec<Letter>,
    depth: usize,
    basis: ForestIndex,
    degrees: Vec<usize>,
    cuts: Vec<Vec<CutTerm>>,
}

impl TruncatedAlgebra {
    pub fn new(alphabet: &[Letter], depth: usize) -> Result<Self> {
        let mut alphabet = alphabet.to_vec();
        alphabet.sort();
        alphabet.dedup();
        let forests = enumerate_forests_over(&alphabet, depth)?;
        let basis = ForestIndex::new(forests);
        let mut cuts = Vec::with_capacity(basis.len());
        for f in basis.forests() {
            let mut terms = Vec::new();
            for (a, b, c) in coproduct_mkw::<i64>(f).iter() {
                let left = basis.get(a).expect("left factor in basis") as u32;
                let right = basis.get(b).expect("right factor in basis") as u32;
                terms.push(CutTerm {
                    left,
                    right,
                    coef: *c,
                });
            }
            cuts.push(terms);
        }
        let degrees = basis.forests().iter().map(PlanarForest::degree).collect();
        Ok(TruncatedAlgebra {
            alphabet,
            depth,
            basis,
            degrees,
            cuts,
        })
    }

    pub fn alphabet(&self) -> &[Letter] {
        &self.alphabet
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &ForestIndex {
        &self.basis
    }

    pub fn forest(&self, i: usize) -> &PlanarForest {
        self.basis.forest(i)
    }

    pub fn degree(&self, i: usize) -> usize {
        self.degrees[i]
    }

    pub fn index(&self, f: &PlanarForest) -> Option<usize> {
        self.basis.get(f)
    }

    /// Index of `f`, with a descriptive error when it lies outside the truncation.
    pub fn require(&self, f: &PlanarForest) -> Result<usize> {
        if let Some(i) = self.basis.get(f) {
            return Ok(i);
        }
        if f.degree() > self.depth {
            return Err(Error::DegreeTooHigh {
                forest: f.key(),
                degree: f.degree(),
                depth: self.depth,
            });
        }
        Err(Error::UnknownLetter(f.key()))
    }

    pub fn tree_index(&self, t: &PlanarTree) -> Result<usize> {
        self.require(&t.to_forest())
    }

    pub fn cuts(&self, i: usize) -> &[CutTerm] {
        &self.cuts[i]
    }

    /// The counit as a dense vector.
    pub fn unit<R: Real>(&self) -> Vec<R> {
        let mut v = vec![R::zero(); self.dim()];
        v[0] = R::one();
        v
    }

    /// `a ★ b` on dense vectors.
    pub fn star<R: Real>(&self, a: &[R], b: &[R]) -> Vec<R> {
        let mut out = vec![R::zero(); self.dim()];
        self.star_into(a, b, &mut out);
        out
    }

    pub fn star_into<R: Real>(&self, a: &[R], b: &[R], out: &mut [R]) {
        for (f, terms) in self.cuts.iter().enumerate() {
            let mut acc = R::zero();
            for t in terms {
                let x = a[t.left as usize] * b[t.right as usize];
                acc = acc + if t.coef == 1 { x } else { R::of_i64(t.coef) * x };
            }
            out[f] = acc;
        }
    }

    /// Entries `(f, g, c)` such that `(v ★ e_tree)[f] = Σ c · v[g]`.
    pub fn right_multiplication(&self, tree: usize) -> Vec<(u32, u32, i64)> {
        let mut out = Vec::new();
        for (f, terms) in self.cuts.iter().enumerate() {
            for t in terms {
                if t.right as usize == tree {
                    out.push((f as u32, t.left, t.coef));
                }
            }
        }
        out
    }

    /// Sparse dense-index form of an exact series; fails on forests outside the basis.
    pub fn sparse(&self, s: &Series<i64>) -> Result<Vec<(usize, i64)>> {
        s.iter().map(|(f, c)| Ok((self.require(f)?, *c))).collect()
    }

    pub fn pair<R: Real>(&self, g: &[R], sparse: &[(usize, i64)]) -> R {
        sparse
            .iter()
            .fold(R::zero(), |acc, &(i, c)| acc + R::of_i64(c) * g[i])
    }

    /// `σ ⧢ τ` in sparse form.
    pub fn shuffle_sparse(&self, a: usize, b: usize) -> Result<Vec<(usize, i64)>> {
        let s: Series<i64> = shuffle(self.forest(a), self.forest(b));
        self.sparse(&s)
    }
}
