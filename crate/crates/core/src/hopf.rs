//! The Hopf algebra of planar forests with shuffle product and left admissible cut
//! coproduct, and its graded dual with the ★ product.
//!
//! Structural operations are generic over an exact coefficient ring (`i64`,
//! [`crate::Rational`]). ★ is the graded transpose of the coproduct.

use std::collections::BTreeMap;
use std::fmt::Debug;

use num_traits::Num;

use crate::error::Result;
use crate::forest::{b_plus, enumerate_forests_over, Letter, PlanarForest, PlanarTree};

/// Coefficient ring for structural computations.
pub trait Coeff: Num + Clone + Debug + Send + Sync {}

impl<T: Num + Clone + Debug + Send + Sync> Coeff for T {}

/// `n` as an element of the coefficient ring.
pub fn from_int<C: Coeff>(n: i64) -> C {
    let mut acc = C::zero();
    let mut unit = if n < 0 { C::zero() - C::one() } else { C::one() };
    let mut k = n.unsigned_abs();
    while k > 0 {
        if k & 1 == 1 {
            acc = acc + unit.clone();
        }
        unit = unit.clone() + unit;
        k >>= 1;
    }
    acc
}

fn add_into<K: Ord, C: Coeff>(map: &mut BTreeMap<K, C>, key: K, c: C) {
    use std::collections::btree_map::Entry;
    if c.is_zero() {
        return;
    }
    match map.entry(key) {
        Entry::Vacant(v) => {
            v.insert(c);
        }
        Entry::Occupied(mut o) => {
            let v = o.get().clone() + c;
            if v.is_zero() {
                o.remove();
            } else {
                *o.get_mut() = v;
            }
        }
    }
}

/// Finite linear combination of forests.
#[derive(Clone, Debug, PartialEq)]
pub struct Series<C> {
    terms: BTreeMap<PlanarForest, C>,
}

impl<C: Coeff> Default for Series<C> {
    fn default() -> Self {
        Self::zero()
    }
}

impl<C: Coeff> Series<C> {
    pub fn zero() -> Self {
        Series {
            terms: BTreeMap::new(),
        }
    }

    pub fn unit() -> Self {
        Self::from_forest(PlanarForest::empty())
    }

    pub fn from_forest(f: PlanarForest) -> Self {
        Self::term(f, C::one())
    }

    pub fn term(f: PlanarForest, c: C) -> Self {
        let mut s = Self::zero();
        s.add_term(f, c);
        s
    }

    pub fn from_terms<I: IntoIterator<Item = (PlanarForest, C)>>(it: I) -> Self {
        let mut s = Self::zero();
        for (f, c) in it {
            s.add_term(f, c);
        }
        s
    }

    pub fn add_term(&mut self, f: PlanarForest, c: C) {
        add_into(&mut self.terms, f, c);
    }

    pub fn coefficient(&self, f: &PlanarForest) -> C {
        self.terms.get(f).cloned().unwrap_or_else(C::zero)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&PlanarForest, &C)> {
        self.terms.iter()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Largest degree carrying a nonzero coefficient.
    pub fn grade(&self) -> usize {
        self.terms.keys().map(PlanarForest::degree).max().unwrap_or(0)
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (f, c) in &other.terms {
            out.add_term(f.clone(), c.clone());
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(&(C::zero() - C::one())))
    }

    pub fn scale(&self, k: &C) -> Self {
        Self::from_terms(self.terms.iter().map(|(f, c)| (f.clone(), c.clone() * k.clone())))
    }

    /// Drops components of degree above `n`.
    pub fn truncate(&self, n: usize) -> Self {
        Self::from_terms(
            self.terms
                .iter()
                .filter(|(f, _)| f.degree() <= n)
                .map(|(f, c)| (f.clone(), c.clone())),
        )
    }

    pub fn map_coeffs<D: Coeff>(&self, g: impl Fn(&C) -> D) -> Series<D> {
        Series::from_terms(self.terms.iter().map(|(f, c)| (f.clone(), g(c))))
    }
}

/// Finite linear combination of pairs of forests.
#[derive(Clone, Debug, PartialEq)]
pub struct TensorSeries<C> {
    terms: BTreeMap<(PlanarForest, PlanarForest), C>,
}

impl<C: Coeff> Default for TensorSeries<C> {
    fn default() -> Self {
        Self::zero()
    }
}

impl<C: Coeff> TensorSeries<C> {
    pub fn zero() -> Self {
        TensorSeries {
            terms: BTreeMap::new(),
        }
    }

    pub fn add_term(&mut self, a: PlanarForest, b: PlanarForest, c: C) {
        add_into(&mut self.terms, (a, b), c);
    }

    pub fn from_terms<I: IntoIterator<Item = (PlanarForest, PlanarForest, C)>>(it: I) -> Self {
        let mut s = Self::zero();
        for (a, b, c) in it {
            s.add_term(a, b, c);
        }
        s
    }

    pub fn coefficient(&self, a: &PlanarForest, b: &PlanarForest) -> C {
        self.terms
            .get(&(a.clone(), b.clone()))
            .cloned()
            .unwrap_or_else(C::zero)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&PlanarForest, &PlanarForest, &C)> {
        self.terms.iter().map(|((a, b), c)| (a, b, c))
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for ((a, b), c) in &other.terms {
            out.add_term(a.clone(), b.clone(), c.clone());
        }
        out
    }

    pub fn scale(&self, k: &C) -> Self {
        Self::from_terms(
            self.terms
                .iter()
                .map(|((a, b), c)| (a.clone(), b.clone(), c.clone() * k.clone())),
        )
    }
}

/// Element of the graded dual, written in the dual basis of forests.
#[derive(Clone, Debug, PartialEq)]
pub struct DualSeries<C> {
    inner: Series<C>,
}

impl<C: Coeff> Default for DualSeries<C> {
    fn default() -> Self {
        Self::zero()
    }
}

impl<C: Coeff> DualSeries<C> {
    pub fn zero() -> Self {
        DualSeries {
            inner: Series::zero(),
        }
    }

    /// The counit, unit of ★.
    pub fn unit() -> Self {
        Self::basis(PlanarForest::empty())
    }

    pub fn basis(f: PlanarForest) -> Self {
        DualSeries {
            inner: Series::from_forest(f),
        }
    }

    pub fn from_series(s: Series<C>) -> Self {
        DualSeries { inner: s }
    }

    pub fn from_terms<I: IntoIterator<Item = (PlanarForest, C)>>(it: I) -> Self {
        Self::from_series(Series::from_terms(it))
    }

    pub fn as_series(&self) -> &Series<C> {
        &self.inner
    }

    pub fn coefficient(&self, f: &PlanarForest) -> C {
        self.inner.coefficient(f)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&PlanarForest, &C)> {
        self.inner.iter()
    }

    pub fn is_zero(&self) -> bool {
        self.inner.is_zero()
    }

    pub fn add(&self, other: &Self) -> Self {
        Self::from_series(self.inner.add(&other.inner))
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self::from_series(self.inner.sub(&other.inner))
    }

    pub fn scale(&self, k: &C) -> Self {
        Self::from_series(self.inner.scale(k))
    }

    pub fn truncate(&self, n: usize) -> Self {
        Self::from_series(self.inner.truncate(n))
    }
}

/// All interleavings of the tree sequences of `a` and `b`, each with coefficient one.
pub fn shuffle<C: Coeff>(a: &PlanarForest, b: &PlanarForest) -> Series<C> {
    let mut out = Series::zero();
    let (ta, tb) = (a.trees(), b.trees());
    let n = ta.len() + tb.len();
    // choose positions of a's trees among n slots
    let mut chosen = Vec::with_capacity(ta.len());
    fn rec<C: Coeff>(
        start: usize,
        n: usize,
        ta: &[crate::forest::PlanarTree],
        tb: &[crate::forest::PlanarTree],
        chosen: &mut Vec<usize>,
        out: &mut Series<C>,
    ) {
        if chosen.len() == ta.len() {
            let mut trees = Vec::with_capacity(n);
            let (mut ia, mut ib) = (0, 0);
            for slot in 0..n {
                if ia < chosen.len() && chosen[ia] == slot {
                    trees.push(ta[ia].clone());
                    ia += 1;
                } else {
                    trees.push(tb[ib].clone());
                    ib += 1;
                }
            }
            out.add_term(PlanarForest::from_trees(trees), C::one());
            return;
        }
        let remaining = ta.len() - chosen.len();
        for slot in start..=(n - remaining) {
            chosen.push(slot);
            rec(slot + 1, n, ta, tb, chosen, out);
            chosen.pop();
        }
    }
    rec(0, n, ta, tb, &mut chosen, &mut out);
    out
}

/// Bilinear extension of [`shuffle`].
pub fn shuffle_series<C: Coeff>(a: &Series<C>, b: &Series<C>) -> Series<C> {
    let mut out = Series::zero();
    for (fa, ca) in a.iter() {
        for (fb, cb) in b.iter() {
            let k = ca.clone() * cb.clone();
            for (f, c) in shuffle::<C>(fa, fb).iter() {
                out.add_term(f.clone(), c.clone() * k.clone());
            }
        }
    }
    out
}

/// Left admissible cut coproduct.
///
/// With `ω` the forest of all but the last tree and `[ω']_ℓ` the last tree,
/// `Δ(ω [ω']_ℓ) = ω[ω']_ℓ ⊗ e + Σ (a ⧢ c) ⊗ (b [d]_ℓ)` over `Δω = Σ a⊗b`, `Δω' = Σ c⊗d`.
pub fn coproduct_mkw<C: Coeff>(f: &PlanarForest) -> TensorSeries<C> {
    let mut out = TensorSeries::zero();
    let Some((rest, last)) = f.split_last() else {
        out.add_term(PlanarForest::empty(), PlanarForest::empty(), C::one());
        return out;
    };
    out.add_term(f.clone(), PlanarForest::empty(), C::one());
    let d_rest = coproduct_mkw::<C>(&rest);
    let d_children = coproduct_mkw::<C>(&last.children);
    for (a, b, cab) in d_rest.iter() {
        for (c, d, ccd) in d_children.iter() {
            let mut right = b.clone();
            right.push(b_plus(d, last.root));
            let k = cab.clone() * ccd.clone();
            for (s, cs) in shuffle::<C>(a, c).iter() {
                out.add_term(s.clone(), right.clone(), cs.clone() * k.clone());
            }
        }
    }
    out
}

/// Linear extension of [`coproduct_mkw`].
pub fn coproduct_series<C: Coeff>(s: &Series<C>) -> TensorSeries<C> {
    let mut out = TensorSeries::zero();
    for (f, c) in s.iter() {
        for (a, b, k) in coproduct_mkw::<C>(f).iter() {
            out.add_term(a.clone(), b.clone(), c.clone() * k.clone());
        }
    }
    out
}

/// Counit: the coefficient of the empty forest.
pub fn counit<C: Coeff>(s: &Series<C>) -> C {
    s.coefficient(&PlanarForest::empty())
}

/// `(Δ ⊗ id) Δ(f)` as triples.
pub fn left_iterated_coproduct<C: Coeff>(f: &PlanarForest) -> BTreeMap<(PlanarForest, PlanarForest, PlanarForest), C> {
    let mut out = BTreeMap::new();
    for (a, b, c) in coproduct_mkw::<C>(f).iter() {
        for (a1, a2, c1) in coproduct_mkw::<C>(a).iter() {
            add_into(&mut out, (a1.clone(), a2.clone(), b.clone()), c.clone() * c1.clone());
        }
    }
    out
}

/// `(id ⊗ Δ) Δ(f)` as triples.
pub fn right_iterated_coproduct<C: Coeff>(f: &PlanarForest) -> BTreeMap<(PlanarForest, PlanarForest, PlanarForest), C> {
    let mut out = BTreeMap::new();
    for (a, b, c) in coproduct_mkw::<C>(f).iter() {
        for (b1, b2, c1) in coproduct_mkw::<C>(b).iter() {
            add_into(&mut out, (a.clone(), b1.clone(), b2.clone()), c.clone() * c1.clone());
        }
    }
    out
}

/// Kronecker pairing extended bilinearly.
pub fn pairing<C: Coeff>(a: &DualSeries<C>, s: &Series<C>) -> C {
    let mut acc = C::zero();
    for (f, c) in s.iter() {
        acc = acc + a.coefficient(f) * c.clone();
    }
    acc
}

/// Pairing of `a ⊗ b` with a tensor.
pub fn pairing_tensor<C: Coeff>(a: &DualSeries<C>, b: &DualSeries<C>, t: &TensorSeries<C>) -> C {
    let mut acc = C::zero();
    for (l, r, c) in t.iter() {
        acc = acc + a.coefficient(l) * b.coefficient(r) * c.clone();
    }
    acc
}

/// `Δs == s⊗e + e⊗s`.
pub fn is_primitive<C: Coeff>(s: &Series<C>) -> bool {
    let mut expect = TensorSeries::zero();
    for (f, c) in s.iter() {
        expect.add_term(f.clone(), PlanarForest::empty(), c.clone());
        expect.add_term(PlanarForest::empty(), f.clone(), c.clone());
    }
    coproduct_series(s) == expect
}

/// Transpose of the coproduct restricted to forests of degree ≤ N over a fixed alphabet:
/// for each pair `(a, b)` the forests `f` with `⟨a⊗b, Δf⟩ ≠ 0`.
#[derive(Clone, Debug)]
pub struct StarTable<C> {
    depth: usize,
    entries: BTreeMap<(PlanarForest, PlanarForest), Vec<(PlanarForest, C)>>,
}

impl<C: Coeff> StarTable<C> {
    pub fn new(alphabet: &[Letter], depth: usize) -> Result<Self> {
        let mut entries: BTreeMap<(PlanarForest, PlanarForest), Vec<(PlanarForest, C)>> = BTreeMap::new();
        for f in enumerate_forests_over(alphabet, depth)? {
            for (a, b, c) in coproduct_mkw::<C>(&f).iter() {
                entries
                    .entry((a.clone(), b.clone()))
                    .or_default()
                    .push((f.clone(), c.clone()));
            }
        }
        Ok(StarTable { depth, entries })
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn product(&self, a: &DualSeries<C>, b: &DualSeries<C>) -> DualSeries<C> {
        let mut out = Series::zero();
        for (fa, ca) in a.iter() {
            for (fb, cb) in b.iter() {
                if let Some(list) = self.entries.get(&(fa.clone(), fb.clone())) {
                    let k = ca.clone() * cb.clone();
                    for (f, c) in list {
                        out.add_term(f.clone(), c.clone() * k.clone());
                    }
                }
            }
        }
        DualSeries::from_series(out)
    }

    /// Rows `(a, b, f, coefficient)` in canonical order.
    pub fn rows(&self) -> impl Iterator<Item = (&PlanarForest, &PlanarForest, &PlanarForest, &C)> {
        self.entries
            .iter()
            .flat_map(|((a, b), v)| v.iter().map(move |(f, c)| (a, b, f, c)))
    }
}

/// `a ★ b` truncated at degree `n`, over the letters occurring in `a` and `b`.
pub fn star<C: Coeff>(a: &DualSeries<C>, b: &DualSeries<C>, n: usize) -> Result<DualSeries<C>> {
    let mut alphabet: Vec<Letter> = a
        .iter()
        .chain(b.iter())
        .flat_map(|(f, _)| f.letters())
        .collect();
    alphabet.sort();
    alphabet.dedup();
    let table = StarTable::<C>::new(&alphabet, n)?;
    Ok(table.product(a, b))
}

fn concat_series<C: Coeff>(a: &Series<C>, b: &Series<C>) -> Series<C> {
    let mut out = Series::zero();
    for (x, p) in a.iter() {
        for (y, q) in b.iter() {
            out.add_term(x.concat(y), p.clone() * q.clone());
        }
    }
    out
}

fn graft_tree<C: Coeff>(t: &PlanarTree, target: &PlanarTree) -> Series<C> {
    let (root, children) = target.split_root();
    let single = PlanarForest::from_trees(vec![t.clone()]);
    let mut out = Series::term(b_plus(&single.concat(children), root).to_forest(), C::one());
    for (f, c) in left_graft::<C>(&single, children).iter() {
        out.add_term(b_plus(f, root).to_forest(), c.clone());
    }
    out
}

/// Left grafting `a ▷ b`: a single tree is grafted onto every vertex of `b` as leftmost child,
/// extended to forests by `(τa') ▷ b = τ ▷ (a' ▷ b) − (τ ▷ a') ▷ b`.
pub fn left_graft<C: Coeff>(a: &PlanarForest, b: &PlanarForest) -> Series<C> {
    if a.is_empty() {
        return Series::from_forest(b.clone());
    }
    if b.is_empty() {
        return Series::zero();
    }
    if let Some(t) = a.as_tree() {
        let mut out = Series::zero();
        let trees = b.trees();
        for p in 0..trees.len() {
            let before = PlanarForest::from_trees(trees[..p].to_vec());
            let after = PlanarForest::from_trees(trees[p + 1..].to_vec());
            for (g, c) in graft_tree::<C>(t, &trees[p]).iter() {
                out.add_term(before.concat(g).concat(&after), c.clone());
            }
        }
        return out;
    }
    let head = a.slice(0, 1);
    let rest = a.slice(1, a.num_trees());
    let mut out = Series::zero();
    for (g, c) in left_graft::<C>(&rest, b).iter() {
        for (h, e) in left_graft::<C>(&head, g).iter() {
            out.add_term(h.clone(), c.clone() * e.clone());
        }
    }
    for (g, c) in left_graft::<C>(&head, &rest).iter() {
        for (h, e) in left_graft::<C>(g, b).iter() {
            out.add_term(h.clone(), C::zero() - c.clone() * e.clone());
        }
    }
    out
}

/// `a ★ b = Σ a_(1) (a_(2) ▷ b)` over deshuffles of the tree word `a`; agrees with the
/// transpose of the coproduct and is computed without it.
pub fn grafting_product<C: Coeff>(a: &PlanarForest, b: &PlanarForest) -> Series<C> {
    let trees = a.trees();
    let m = trees.len();
    let mut out = Series::zero();
    for mask in 0..1u32 << m {
        let (mut l, mut r) = (Vec::new(), Vec::new());
        for (p, t) in trees.iter().enumerate() {
            if mask & (1 << p) != 0 {
                l.push(t.clone());
            } else {
                r.push(t.clone());
            }
        }
        let left = Series::from_forest(PlanarForest::from_trees(l));
        out = out.add(&concat_series(&left, &left_graft::<C>(&PlanarForest::from_trees(r), b)));
    }
    out
}
