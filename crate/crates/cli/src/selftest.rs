//! Exhaustive exact checks of a coproduct table: coverage, counit, coassociativity,
//! duality with the grafting product, the displayed expansions and primitivity.

use std::collections::{BTreeMap, BTreeSet};

use pbrp_core::forest::{b_plus, enumerate_forests_over, extended_alphabet, single};
use pbrp_core::hopf::{coproduct_mkw, grafting_product, Series, TensorSeries};
use pbrp_core::io::CoproductTable;
use pbrp_core::rough_path::{bracket_element, cbar_element, cbar_element_literal, reduce_brackets, tilde_element};
use pbrp_core::{Letter, PlanarForest, PlanarTree};
use serde::Serialize;

#[derive(Clone, Debug, Serialize)]
pub struct Mismatch {
    pub identity: String,
    pub subject: String,
    pub left: String,
    pub right: String,
    pub expected: i64,
    pub actual: i64,
}

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub cases: usize,
    pub failures: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct DisplayedVectors {
    pub matched: usize,
    pub checked: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct SelfTestSummary {
    pub d: usize,
    pub depth: usize,
    pub source: String,
    pub alphabet: Vec<String>,
    pub forests: usize,
    pub checks: Vec<Check>,
    pub displayed_vectors: DisplayedVectors,
    pub pass: bool,
    pub first_failure: Option<Mismatch>,
}

pub fn builtin_table(d: usize, depth: usize) -> pbrp_core::Result<CoproductTable> {
    Ok(enumerate_forests_over(&extended_alphabet(d), depth)?
        .into_iter()
        .map(|f| {
            let c = coproduct_mkw::<i64>(&f);
            (f, c)
        })
        .collect())
}

struct Run<'a> {
    table: &'a CoproductTable,
    checks: Vec<Check>,
    first: Option<Mismatch>,
}

impl Run<'_> {
    fn record(&mut self, name: &'static str, failures: Vec<Mismatch>, cases: usize) {
        if self.first.is_none() {
            self.first = failures.first().cloned();
        }
        self.checks.push(Check {
            name,
            cases,
            failures: failures.len(),
        });
    }

    fn delta(&self, f: &PlanarForest) -> Option<&TensorSeries<i64>> {
        self.table.get(f)
    }

    fn delta_series(&self, s: &Series<i64>) -> Option<TensorSeries<i64>> {
        let mut out = TensorSeries::zero();
        for (f, c) in s.iter() {
            for (a, b, k) in self.delta(f)?.iter() {
                out.add_term(a.clone(), b.clone(), c * k);
            }
        }
        Some(out)
    }
}

fn mismatch(identity: &str, subject: &PlanarForest, left: &PlanarForest, right: &PlanarForest, expected: i64, actual: i64) -> Mismatch {
    Mismatch {
        identity: identity.into(),
        subject: subject.key(),
        left: left.key(),
        right: right.key(),
        expected,
        actual,
    }
}

fn tensor_diff(identity: &str, subject: &PlanarForest, expected: &TensorSeries<i64>, actual: &TensorSeries<i64>) -> Option<Mismatch> {
    let keys: BTreeSet<(&PlanarForest, &PlanarForest)> = expected.iter().chain(actual.iter()).map(|(a, b, _)| (a, b)).collect();
    keys.into_iter().find_map(|(a, b)| {
        let (e, g) = (expected.coefficient(a, b), actual.coefficient(a, b));
        (e != g).then(|| mismatch(identity, subject, a, b, e, g))
    })
}

/// Letters decorating the table's keys, base letters first.
fn table_alphabet(table: &CoproductTable) -> Vec<Letter> {
    let set: BTreeSet<Letter> = table.keys().flat_map(|f| f.letters()).collect();
    let mut v: Vec<Letter> = set.into_iter().collect();
    v.sort_by_key(|l| (l.is_bracket(), *l));
    v
}

pub fn run(table: &CoproductTable, d: usize, depth: usize, source: &str) -> pbrp_core::Result<SelfTestSummary> {
    let alphabet = table_alphabet(table);
    let forests = enumerate_forests_over(&alphabet, depth)?;
    let mut run = Run {
        table,
        checks: Vec::new(),
        first: None,
    };
    let e = PlanarForest::empty();

    let mut fails = Vec::new();
    for f in &forests {
        if !table.contains_key(f) {
            fails.push(mismatch("coverage", f, &e, &e, 1, 0));
        }
    }
    for f in table.keys() {
        if f.degree() > depth {
            fails.push(mismatch("coverage", f, &e, &e, 0, 1));
        }
    }
    run.record("coverage", fails, forests.len());

    let mut fails = Vec::new();
    for f in &forests {
        let Some(t) = run.delta(f) else { continue };
        let mut left = Series::<i64>::zero();
        let mut right = Series::<i64>::zero();
        for (a, b, c) in t.iter() {
            if a.is_empty() {
                left.add_term(b.clone(), *c);
            }
            if b.is_empty() {
                right.add_term(a.clone(), *c);
            }
        }
        for (name, s) in [("counit-left", &left), ("counit-right", &right)] {
            if *s != Series::from_forest(f.clone()) {
                let got = s.coefficient(f);
                fails.push(mismatch(name, f, &e, f, 1, got));
            }
        }
    }
    run.record("counit", fails, forests.len());

    let mut fails = Vec::new();
    for f in &forests {
        let Some(t) = run.delta(f) else { continue };
        let mut lhs: BTreeMap<(PlanarForest, PlanarForest, PlanarForest), i64> = BTreeMap::new();
        let mut rhs = lhs.clone();
        let mut missing = None;
        for (a, b, c) in t.iter() {
            match (run.delta(a), run.delta(b)) {
                (Some(da), Some(db)) => {
                    for (x, y, k) in da.iter() {
                        *lhs.entry((x.clone(), y.clone(), b.clone())).or_insert(0) += c * k;
                    }
                    for (x, y, k) in db.iter() {
                        *rhs.entry((a.clone(), x.clone(), y.clone())).or_insert(0) += c * k;
                    }
                }
                _ => missing = Some((a.clone(), b.clone())),
            }
        }
        if let Some((a, b)) = missing {
            fails.push(mismatch("coassociativity-missing-factor", f, &a, &b, 1, 0));
            continue;
        }
        lhs.retain(|_, v| *v != 0);
        rhs.retain(|_, v| *v != 0);
        if lhs != rhs {
            let keys: BTreeSet<_> = lhs.keys().chain(rhs.keys()).cloned().collect();
            if let Some((x, y, z)) = keys.into_iter().find(|k| lhs.get(k) != rhs.get(k)) {
                let l = lhs.get(&(x.clone(), y.clone(), z.clone())).copied().unwrap_or(0);
                let r = rhs.get(&(x.clone(), y.clone(), z.clone())).copied().unwrap_or(0);
                fails.push(mismatch("coassociativity", f, &x.concat(&y), &z, l, r));
            }
        }
    }
    run.record("coassociativity", fails, forests.len());

    // ⟨a ★ b, f⟩ = ⟨a ⊗ b, Δf⟩ with ★ from left grafting.
    let mut transpose: BTreeMap<(PlanarForest, PlanarForest), Series<i64>> = BTreeMap::new();
    for (f, t) in table.iter() {
        for (a, b, c) in t.iter() {
            transpose.entry((a.clone(), b.clone())).or_default().add_term(f.clone(), *c);
        }
    }
    let mut fails = Vec::new();
    let mut cases = 0;
    for a in &forests {
        for b in &forests {
            if a.degree() + b.degree() > depth {
                continue;
            }
            cases += 1;
            let want = grafting_product::<i64>(a, b);
            let zero = Series::zero();
            let got = transpose.get(&(a.clone(), b.clone())).unwrap_or(&zero);
            if *got != want {
                let keys: BTreeSet<&PlanarForest> = want.iter().chain(got.iter()).map(|(f, _)| f).collect();
                if let Some(f) = keys.into_iter().find(|f| want.coefficient(f) != got.coefficient(f)) {
                    fails.push(mismatch("duality", f, a, b, want.coefficient(f), got.coefficient(f)));
                }
            }
        }
    }
    run.record("duality", fails, cases);

    let displayed = displayed_vectors(&mut run, &alphabet, depth);
    primitivity(&mut run, &alphabet, depth);

    let pass = run.checks.iter().all(|c| c.failures == 0);
    Ok(SelfTestSummary {
        d,
        depth,
        source: source.into(),
        alphabet: alphabet.iter().map(|l| l.to_string()).collect(),
        forests: forests.len(),
        checks: run.checks,
        displayed_vectors: displayed,
        pass,
        first_failure: run.first,
    })
}

fn tree(children: &[PlanarTree], root: Letter) -> PlanarForest {
    b_plus(&PlanarForest::from_trees(children.to_vec()), root).to_forest()
}

fn base_labels(alphabet: &[Letter]) -> Vec<u16> {
    alphabet
        .iter()
        .filter_map(|l| match l {
            Letter::Base(i) => Some(*i),
            _ => None,
        })
        .collect()
}

/// The five expansions: `•_j•_i`, `[•_j]_i`, `•_k•_j•_i`, `[•_k•_j]_i`, `[•_k]_(ij)`, each
/// over all label choices. A vector counts as matched when every choice matches.
fn displayed_vectors(run: &mut Run<'_>, alphabet: &[Letter], depth: usize) -> DisplayedVectors {
    let labels = base_labels(alphabet);
    let e = PlanarForest::empty;
    let dot = |i: u16| PlanarForest::single(Letter::Base(i));
    let b = Letter::Base;
    let mut fails = Vec::new();
    let mut per_vector = [(0usize, 0usize); 5];
    let mut cases = 0;
    for &i in &labels {
        for &j in &labels {
            for &k in &labels {
                let two = PlanarForest::word(&[b(j), b(i)]);
                let ladder = tree(&[single(b(j))], b(i));
                let three = PlanarForest::word(&[b(k), b(j), b(i)]);
                let cherry = tree(&[single(b(k)), single(b(j))], b(i));
                let br = Letter::Bracket(i, j);
                let bl = tree(&[single(b(k))], br);
                let vectors: [(usize, PlanarForest, Vec<(PlanarForest, PlanarForest)>); 5] = [
                    (2, two.clone(), vec![(two.clone(), e()), (dot(j), dot(i)), (e(), two.clone())]),
                    (2, ladder.clone(), vec![(ladder.clone(), e()), (dot(j), dot(i)), (e(), ladder.clone())]),
                    (3, three.clone(), vec![(three.clone(), e()), (e(), three.clone()), (dot(k), two.clone()), (PlanarForest::word(&[b(k), b(j)]), dot(i))]),
                    (3, cherry.clone(), vec![(cherry.clone(), e()), (e(), cherry.clone()), (dot(k), ladder.clone()), (PlanarForest::word(&[b(k), b(j)]), dot(i))]),
                    (2, bl.clone(), vec![(bl.clone(), e()), (e(), bl.clone()), (dot(k), PlanarForest::single(br))]),
                ];
                for (v, (deg, f, terms)) in vectors.into_iter().enumerate() {
                    if deg > depth || !f.is_decorated_by(alphabet) {
                        continue;
                    }
                    cases += 1;
                    per_vector[v].0 += 1;
                    let want = TensorSeries::from_terms(terms.into_iter().map(|(a, c)| (a, c, 1i64)));
                    let got = run.delta(&f).cloned().unwrap_or_default();
                    match tensor_diff("displayed-expansion", &f, &want, &got) {
                        Some(m) => fails.push(m),
                        None => per_vector[v].1 += 1,
                    }
                }
            }
        }
    }
    run.record("displayed-expansions", fails, cases);
    DisplayedVectors {
        matched: per_vector.iter().filter(|(n, ok)| *n > 0 && n == ok).count(),
        checked: per_vector.iter().filter(|(n, _)| *n > 0).count(),
    }
}

fn reduced_delta(run: &Run<'_>, h: &Series<i64>) -> Option<TensorSeries<i64>> {
    let mut t = run.delta_series(h)?;
    let one = PlanarForest::empty();
    for (f, c) in h.iter() {
        t.add_term(f.clone(), one.clone(), -c);
        t.add_term(one.clone(), f.clone(), -c);
    }
    Some(t)
}

fn primitivity(run: &mut Run<'_>, alphabet: &[Letter], depth: usize) {
    let labels = base_labels(alphabet);
    let has_brackets = alphabet.iter().any(|l| l.is_bracket());
    let mut fails = Vec::new();
    let mut cases = 0;
    let e = PlanarForest::empty();
    let check = |name: &str, h: Series<i64>, modulo: bool, expect: bool, fails: &mut Vec<Mismatch>| {
        let subject = h.iter().next().map(|(f, _)| f.clone()).unwrap_or_else(PlanarForest::empty);
        let Some(t) = reduced_delta(run, &h) else {
            fails.push(mismatch(name, &subject, &e, &e, 1, 0));
            return;
        };
        let t = if modulo { reduce_brackets(&t) } else { t };
        if t.is_zero() != expect {
            let (l, r, c) = t.iter().next().map(|(a, b, c)| (a.clone(), b.clone(), *c)).unwrap_or((e.clone(), e.clone(), 0));
            fails.push(mismatch(name, &subject, &l, &r, i64::from(!expect), c));
        }
    };
    for &i in &labels {
        for &j in &labels {
            cases += 1;
            check("bracket-primitive", bracket_element(i, j), false, true, &mut fails);
            if depth < 3 || !has_brackets {
                continue;
            }
            for &k in &labels {
                cases += 3;
                check("tilde-primitive-mod-brackets", tilde_element(i, j, k), true, true, &mut fails);
                check("cbar-primitive-mod-brackets", cbar_element(i, j, k), true, true, &mut fails);
                check("literal-cbar-not-primitive", cbar_element_literal(i, j, k), true, false, &mut fails);
            }
        }
    }
    run.record("primitivity", fails, cases);
}

pub const FAILURE_HEADER: [&str; 6] = ["identity", "subject", "left", "right", "expected", "actual"];
