use pbrp_core::forest::{b_plus, base_alphabet, enumerate_forests, enumerate_forests_over, extended_alphabet, single};
use pbrp_core::hopf::{coproduct_mkw, coproduct_series, counit, is_primitive, shuffle, star, DualSeries, Series, TensorSeries};
use pbrp_core::rough_path::{bracket_element, cbar_element, cbar_element_literal, is_primitive_mod_brackets, tilde_element};
use pbrp_core::{Letter, PlanarForest, PlanarTree};

type S = Series<i64>;

fn b(i: u16) -> Letter {
    Letter::Base(i)
}

fn dot(l: Letter) -> PlanarForest {
    PlanarForest::single(l)
}

fn word(ls: &[Letter]) -> PlanarForest {
    PlanarForest::word(ls)
}

fn tree(children: &[PlanarTree], root: Letter) -> PlanarForest {
    b_plus(&PlanarForest::from_trees(children.to_vec()), root).to_forest()
}

fn tensor(terms: Vec<(PlanarForest, PlanarForest, i64)>) -> TensorSeries<i64> {
    TensorSeries::from_terms(terms)
}

// Guin–Oudom product on planar forests from left grafting, used as an independent oracle for ★.

fn deshuffle(w: &PlanarForest) -> Vec<(PlanarForest, PlanarForest)> {
    let trees = w.trees();
    let m = trees.len();
    (0..1u32 << m)
        .map(|mask| {
            let mut l = Vec::new();
            let mut r = Vec::new();
            for (p, t) in trees.iter().enumerate() {
                if mask & (1 << p) != 0 {
                    l.push(t.clone());
                } else {
                    r.push(t.clone());
                }
            }
            (PlanarForest::from_trees(l), PlanarForest::from_trees(r))
        })
        .collect()
}

fn concat_series(a: &S, c: &S) -> S {
    let mut out = S::zero();
    for (x, p) in a.iter() {
        for (y, q) in c.iter() {
            out.add_term(x.concat(y), p * q);
        }
    }
    out
}

fn graft_tree_on_tree(t: &PlanarTree, target: &PlanarTree) -> S {
    let (root, children) = target.split_root();
    let mut out = S::zero();
    let front = PlanarForest::from_trees(vec![t.clone()]).concat(children);
    out.add_term(b_plus(&front, root).to_forest(), 1);
    for (f, c) in graft(&PlanarForest::from_trees(vec![t.clone()]), children).iter() {
        out.add_term(b_plus(f, root).to_forest(), *c);
    }
    out
}

// A ▷ B for forests A, B.
fn graft(a: &PlanarForest, target: &PlanarForest) -> S {
    if a.is_empty() {
        return S::from_forest(target.clone());
    }
    if target.is_empty() {
        return S::zero();
    }
    if a.num_trees() == 1 {
        let t = &a.trees()[0];
        let mut out = S::zero();
        let trees = target.trees();
        for p in 0..trees.len() {
            let before = PlanarForest::from_trees(trees[..p].to_vec());
            let after = PlanarForest::from_trees(trees[p + 1..].to_vec());
            for (g, c) in graft_tree_on_tree(t, &trees[p]).iter() {
                out.add_term(before.concat(g).concat(&after), *c);
            }
        }
        return out;
    }
    // (τ A') ▷ B = τ ▷ (A' ▷ B) − (τ ▷ A') ▷ B
    let t = PlanarForest::from_trees(vec![a.trees()[0].clone()]);
    let rest = a.slice(1, a.num_trees());
    let mut out = S::zero();
    for (g, c) in graft(&rest, target).iter() {
        for (h, e) in graft(&t, g).iter() {
            out.add_term(h.clone(), c * e);
        }
    }
    for (g, c) in graft(&t, &rest).iter() {
        for (h, e) in graft(g, target).iter() {
            out.add_term(h.clone(), -c * e);
        }
    }
    out
}

fn go_product(a: &PlanarForest, target: &PlanarForest) -> S {
    let mut out = S::zero();
    for (l, r) in deshuffle(a) {
        out = out.add(&concat_series(&S::from_forest(l), &graft(&r, target)));
    }
    out
}

#[test]
fn forest_counts() {
    assert_eq!(enumerate_forests(2, 3).unwrap().len(), 51);
    assert_eq!(enumerate_forests(1, 2).unwrap().len(), 4);
    assert_eq!(enumerate_forests(3, 0).unwrap(), vec![PlanarForest::empty()]);
}

#[test]
fn star_matches_grafting_oracle() {
    let forests = enumerate_forests(2, 3).unwrap();
    let mut checked = 0;
    for a in &forests {
        for c in &forests {
            if a.degree() + c.degree() > 3 {
                continue;
            }
            let got = star(&DualSeries::<i64>::basis(a.clone()), &DualSeries::basis(c.clone()), 3).unwrap();
            let oracle = go_product(a, c);
            assert_eq!(got, DualSeries::from_series(oracle), "{a} ★ {c}");
            checked += 1;
        }
    }
    assert!(checked > 100);
}

#[test]
fn duality_with_coproduct() {
    let forests = enumerate_forests(2, 3).unwrap();
    for a in &forests {
        for c in &forests {
            if a.degree() + c.degree() > 3 {
                continue;
            }
            let p = star(&DualSeries::<i64>::basis(a.clone()), &DualSeries::basis(c.clone()), 3).unwrap();
            for f in &forests {
                assert_eq!(p.coefficient(f), coproduct_mkw::<i64>(f).coefficient(a, c), "⟨{a}★{c}, {f}⟩");
            }
        }
    }
}

fn apply_left(t: &TensorSeries<i64>) -> Vec<(PlanarForest, PlanarForest, PlanarForest, i64)> {
    let mut out = Vec::new();
    for (l, r, c) in t.iter() {
        for (ll, lr, d) in coproduct_mkw::<i64>(l).iter() {
            out.push((ll.clone(), lr.clone(), r.clone(), c * d));
        }
    }
    out
}

fn apply_right(t: &TensorSeries<i64>) -> Vec<(PlanarForest, PlanarForest, PlanarForest, i64)> {
    let mut out = Vec::new();
    for (l, r, c) in t.iter() {
        for (rl, rr, d) in coproduct_mkw::<i64>(r).iter() {
            out.push((l.clone(), rl.clone(), rr.clone(), c * d));
        }
    }
    out
}

fn collect(v: Vec<(PlanarForest, PlanarForest, PlanarForest, i64)>) -> std::collections::BTreeMap<(PlanarForest, PlanarForest, PlanarForest), i64> {
    let mut m = std::collections::BTreeMap::new();
    for (a, b, c, k) in v {
        *m.entry((a, b, c)).or_insert(0) += k;
    }
    m.retain(|_, k| *k != 0);
    m
}

#[test]
fn coassociativity_and_counit() {
    for f in enumerate_forests_over(&extended_alphabet(2), 3).unwrap() {
        let d = coproduct_mkw::<i64>(&f);
        assert_eq!(collect(apply_left(&d)), collect(apply_right(&d)), "{f}");
        let mut left = S::zero();
        let mut right = S::zero();
        for (a, c, k) in d.iter() {
            left.add_term(c.clone(), counit(&S::from_forest(a.clone())) * k);
            right.add_term(a.clone(), counit(&S::from_forest(c.clone())) * k);
        }
        assert_eq!(left, S::from_forest(f.clone()));
        assert_eq!(right, S::from_forest(f.clone()));
    }
}

#[test]
fn coproduct_is_shuffle_morphism() {
    let forests = enumerate_forests(2, 3).unwrap();
    for a in &forests {
        for c in &forests {
            if a.degree() + c.degree() > 3 || a.is_empty() || c.is_empty() {
                continue;
            }
            let lhs = coproduct_series(&shuffle::<i64>(a, c));
            let mut rhs = TensorSeries::zero();
            for (a1, a2, p) in coproduct_mkw::<i64>(a).iter() {
                for (c1, c2, q) in coproduct_mkw::<i64>(c).iter() {
                    for (l, x) in shuffle::<i64>(a1, c1).iter() {
                        for (r, y) in shuffle::<i64>(a2, c2).iter() {
                            rhs.add_term(l.clone(), r.clone(), p * q * x * y);
                        }
                    }
                }
            }
            assert_eq!(lhs, rhs, "{a} ⧢ {c}");
        }
    }
}

#[test]
fn displayed_coproduct_expansions() {
    let e = PlanarForest::empty;
    let mut matched = 0;
    for i in 1..=2 {
        for j in 1..=2 {
            for k in 1..=2 {
                let (i, j, k) = (b(i), b(j), b(k));
                let two = word(&[j, i]);
                assert_eq!(coproduct_mkw::<i64>(&two), tensor(vec![(two.clone(), e(), 1), (dot(j), dot(i), 1), (e(), two.clone(), 1)]));
                let ladder = tree(&[single(j)], i);
                assert_eq!(coproduct_mkw::<i64>(&ladder), tensor(vec![(ladder.clone(), e(), 1), (dot(j), dot(i), 1), (e(), ladder.clone(), 1)]));
                let three = word(&[k, j, i]);
                assert_eq!(
                    coproduct_mkw::<i64>(&three),
                    tensor(vec![(three.clone(), e(), 1), (e(), three.clone(), 1), (dot(k), word(&[j, i]), 1), (word(&[k, j]), dot(i), 1)])
                );
                let cherry = tree(&[single(k), single(j)], i);
                assert_eq!(
                    coproduct_mkw::<i64>(&cherry),
                    tensor(vec![(cherry.clone(), e(), 1), (e(), cherry.clone(), 1), (dot(k), ladder.clone(), 1), (word(&[k, j]), dot(i), 1)])
                );
                let (Letter::Base(ii), Letter::Base(jj)) = (i, j) else { unreachable!() };
                let br = Letter::Bracket(ii, jj);
                let bl = tree(&[single(k)], br);
                assert_eq!(coproduct_mkw::<i64>(&bl), tensor(vec![(bl.clone(), e(), 1), (e(), bl.clone(), 1), (dot(k), dot(br), 1)]));
                matched += 5;
            }
        }
    }
    assert_eq!(matched, 40);
}

#[test]
fn bracket_element_is_primitive() {
    for i in 1..=2 {
        for j in 1..=2 {
            assert!(is_primitive(&bracket_element(i, j)));
            assert!(!is_primitive(&S::from_forest(word(&[b(j), b(i)]))));
        }
    }
}

#[test]
fn degree_three_elements_primitive_mod_brackets() {
    for i in 1..=3 {
        for j in 1..=3 {
            for k in 1..=3 {
                let t = tilde_element(i, j, k);
                assert!(is_primitive_mod_brackets(&t), "tilde {i}{j}{k}");
                assert!(!is_primitive(&t), "only the cut •k⊗•(ij) survives without the relation");
                assert!(is_primitive_mod_brackets(&cbar_element(i, j, k)), "cbar {i}{j}{k}");
                assert!(!is_primitive_mod_brackets(&cbar_element_literal(i, j, k)), "literal cbar {i}{j}{k}");
            }
        }
    }
}

#[test]
fn pairing_examples() {
    use pbrp_core::hopf::pairing;
    let one = DualSeries::<i64>::basis(dot(b(1)));
    assert_eq!(pairing(&one, &S::from_forest(dot(b(1)))), 1);
    assert_eq!(pairing(&DualSeries::basis(word(&[b(1), b(2)])), &S::from_forest(word(&[b(2), b(1)]))), 0);
    let p = star(&DualSeries::<i64>::basis(dot(b(2))), &DualSeries::basis(dot(b(1))), 3).unwrap();
    assert_eq!(pairing(&p, &S::from_forest(tree(&[single(b(2))], b(1)))), 1);
    for x in base_alphabet(2) {
        for y in base_alphabet(2) {
            let sh = shuffle::<i64>(&dot(x), &dot(y));
            let expect = i64::from(sh.coefficient(&word(&[b(2), b(1)])) != 0);
            assert_eq!(pairing(&p, &sh), expect);
        }
    }
}

#[test]
fn library_grafting_product_matches_oracle() {
    use pbrp_core::hopf::grafting_product;
    let forests = enumerate_forests(2, 3).unwrap();
    for a in &forests {
        for c in &forests {
            if a.degree() + c.degree() <= 3 {
                assert_eq!(grafting_product::<i64>(a, c), go_product(a, c), "{a} ★ {c}");
            }
        }
    }
}
