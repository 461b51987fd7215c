use std::sync::Arc;

use pbrp_core::calculus::{f_forest, f_tau, rough_integral, solve_rde, young_integral, GridPath, DIVERGENCE_BOUND};
use pbrp_core::controlled::{compose_fx, compose_fy, lift_integral, ControlledPath};
use pbrp_core::driver::{fbm_synthetic, DriverSpec, Grid, ScalarPath};
use pbrp_core::function::{Expr, FunctionSpec, MapRef, VectorFieldFamily};
use pbrp_core::hopf::Series;
use pbrp_core::rough_path::{bracket_path, RoughPath, ScalarExtensionPath};
use pbrp_core::{Error, Letter, PlanarForest};
use proptest::prelude::*;

fn f(s: &str) -> PlanarForest {
    PlanarForest::parse(s).unwrap()
}

fn tree(s: &str) -> pbrp_core::PlanarTree {
    f(s).as_tree().unwrap().clone()
}

fn builtin(name: &str, params: &[f64], n: usize) -> MapRef<f64> {
    FunctionSpec::builtin(name, params).build(n).unwrap()
}

fn linear_x(depth: usize, cells: usize, intensity: Option<f64>) -> Arc<RoughPath<f64>> {
    let mut spec = DriverSpec::from_paths(vec![ScalarPath::linear(1.0)]);
    if let Some(c) = intensity {
        spec = spec.with_intensity(tree("[•1]1"), ScalarPath::linear(c));
    }
    Arc::new(RoughPath::lift(&spec, depth, &Grid::uniform(1.0, cells).unwrap(), 4).unwrap())
}

fn rough_2d(depth: usize, cells: usize) -> Arc<RoughPath<f64>> {
    let grid = Grid::uniform(1.0, cells).unwrap();
    let spec = DriverSpec::from_paths(vec![
        fbm_synthetic(&grid, 0.45, 48, 0.4, 11).unwrap(),
        ScalarPath::Trig { offset: 0.0, modes: vec![(0.8, 4.0, 0.3)] },
    ])
    .with_intensity(tree("[•2]1"), ScalarPath::linear(0.2));
    Arc::new(RoughPath::lift(&spec, depth, &grid, 4).unwrap())
}

const LADDER: [usize; 6] = [32, 16, 8, 4, 2, 1];

#[test]
fn compose_fx_coefficients() {
    let x = linear_x(3, 16, None);
    let z = compose_fx(&x, &builtin("square", &[], 1)).unwrap();
    for k in 0..=16 {
        let t = k as f64 / 16.0;
        assert!((z.coefficient(k, &f("e")).unwrap()[0] - t * t).abs() < 1e-14);
        assert!((z.coefficient(k, &f("•1")).unwrap()[0] - 2.0 * t).abs() < 1e-14);
        assert_eq!(z.coefficient(k, &f("•1•1")).unwrap()[0], 2.0);
        assert_eq!(z.coefficient(k, &f("[•1]1")).unwrap()[0], 0.0);
    }
    let c = compose_fx(&x, &builtin("constant", &[3.0], 1)).unwrap();
    for k in 0..=16 {
        for (fi, fo) in c.forests().forests().iter().enumerate() {
            let expect = if fo.is_empty() { 3.0 } else { 0.0 };
            assert_eq!(c.coef(k, fi)[0], expect);
        }
    }
    assert!(c.remainder_rate(&f("e"), &[1, 2, 4, 8]).unwrap().is_infinite());
}

#[test]
fn remainders_vanish_on_the_diagonal() {
    let x = rough_2d(3, 64);
    let z = compose_fx(&x, &builtin("sin", &[1.0, 0.5], 2)).unwrap();
    for fo in z.forests().forests() {
        for a in [0, 13, 64] {
            assert!(z.remainder(fo, a, a).unwrap().iter().all(|v| *v == 0.0));
        }
    }
}

#[test]
fn compose_fx_remainder_rates() {
    let x = linear_x(2, 1024, None);
    let z = compose_fx(&x, &builtin("square", &[], 1)).unwrap();
    let s = z.remainder_rate(&f("e"), &LADDER).unwrap();
    assert!(s > 1.9, "{s}");
    let x = rough_2d(3, 1024);
    let z = compose_fx(&x, &builtin("sin", &[1.0, 0.5], 2)).unwrap();
    let alpha = x.alpha();
    for fo in z.forests().forests() {
        let s = z.remainder_rate(fo, &LADDER).unwrap();
        assert!(s >= (3.0 - fo.degree() as f64) * alpha - 0.2, "{fo}: {s}");
    }
}

#[test]
fn compose_fy_splittings() {
    let x = rough_2d(3, 32);
    let y = compose_fx(&x, &FunctionSpec::Expr { components: vec![Expr::Sin(Box::new(Expr::var(0))), Expr::Mul(vec![Expr::var(0), Expr::var(1)])] }.build(2).unwrap()).unwrap();
    let g = builtin("cube", &[1.0, -2.0], 2);
    let z = compose_fy(&y, &g).unwrap();
    for k in [0, 7, 32] {
        let yk = y.value(k).to_vec();
        let c = |s: &str| y.coefficient(k, &f(s)).unwrap().to_vec();
        let tree_part = g.differential(&yk, &[&c("•1")]);
        assert!((z.coefficient(k, &f("•1")).unwrap()[0] - tree_part[0]).abs() < 1e-12);
        let two = g.differential(&yk, &[&c("•1•2")])[0] + g.differential(&yk, &[&c("•1"), &c("•2")])[0];
        assert!((z.coefficient(k, &f("•1•2")).unwrap()[0] - two).abs() < 1e-12);
        assert!((z.value(k)[0] - g.eval(&yk)[0]).abs() < 1e-14);
    }
}

#[test]
fn compose_fy_identity_and_componentwise() {
    let x = rough_2d(3, 32);
    let fields = VectorFieldFamily::<f64>::from_specs(&[FunctionSpec::builtin("sin", &[1.0, 0.0]), FunctionSpec::builtin("identity", &[])], 2);
    assert!(fields.is_err(), "dimension mismatch is reported");
    let fam = VectorFieldFamily::new(vec![
        FunctionSpec::Expr { components: vec![Expr::Sin(Box::new(Expr::var(1))), Expr::Const(0.5)] }.build(2).unwrap(),
        FunctionSpec::Expr { components: vec![Expr::var(0), Expr::Cos(Box::new(Expr::var(0)))] }.build(2).unwrap(),
    ])
    .unwrap();
    let y = solve_rde(&x, &fam, &[0.1, -0.2], DIVERGENCE_BOUND).unwrap();
    let id = builtin("identity", &[], 2);
    let z = compose_fy(&y, &id).unwrap();
    assert_eq!(z.values(), y.values());

    let g = FunctionSpec::Expr { components: vec![Expr::Exp(Box::new(Expr::var(0))), Expr::Mul(vec![Expr::var(0), Expr::var(1)])] };
    let whole = compose_fy(&y, &g.build(2).unwrap()).unwrap();
    let FunctionSpec::Expr { components } = g else { unreachable!() };
    for (c, comp) in components.into_iter().enumerate() {
        let part = compose_fy(&y, &FunctionSpec::Expr { components: vec![comp] }.build(2).unwrap()).unwrap();
        for k in 0..y.nodes() {
            for fi in 0..y.forests().len() {
                assert_eq!(part.coef(k, fi)[0], whole.coef(k, fi)[c]);
            }
        }
    }
}

#[test]
fn lift_integral_structure() {
    let x = rough_2d(3, 256);
    let y = compose_fx(&x, &builtin("sin", &[1.0, 0.5], 2)).unwrap();
    let z = lift_integral(&y, Letter::Base(1)).unwrap();
    for k in [0, 100, 256] {
        assert_eq!(z.coefficient(k, &f("•1")).unwrap(), y.value(k));
        assert_eq!(z.coefficient(k, &f("[•2]1")).unwrap(), y.coefficient(k, &f("•2")).unwrap());
        for s in ["•2", "•1•1", "[•1]2", "•2•1"] {
            assert_eq!(z.coefficient(k, &f(s)).unwrap(), &[0.0]);
        }
    }
    let top = y.depth() - 1;
    let low = ControlledPath::from_fn(x.clone(), 1, |k, fi, fo, out| {
        if fo.degree() < top {
            out.copy_from_slice(y.coef(k, fi));
        }
    })
    .unwrap();
    for mu in ["e", "•1", "•2"] {
        let grafted = PlanarForest::from(pbrp_core::forest::b_plus(&f(mu), Letter::Base(1)));
        for (a, b) in [(0, 8), (40, 72), (200, 201)] {
            let lhs = z.remainder(&grafted, a, b).unwrap();
            let rhs = low.remainder(&f(mu), a, b).unwrap();
            assert!((lhs[0] - rhs[0]).abs() < 1e-12, "{mu}");
        }
    }
    let alpha = x.alpha();
    for fo in z.forests().forests() {
        let s = z.remainder_rate(fo, &LADDER).unwrap();
        assert!(s >= (3.0 - fo.degree() as f64) * alpha - 0.2, "{fo}: {s}");
    }
}

#[test]
fn remainders_against_bracket_extension() {
    let x = rough_2d(3, 64);
    let xhat = x.bracket_extension().unwrap();
    let y = compose_fx(&x, &builtin("cos", &[0.3, 1.0], 2)).unwrap();
    for fo in y.forests().forests() {
        for (a, b) in [(0, 64), (3, 9), (30, 31)] {
            let r = y.remainder(fo, a, b).unwrap();
            let rh = y.remainder_against(&xhat, fo, a, b).unwrap();
            assert!((r[0] - rh[0]).abs() < 1e-12, "{fo}");
        }
    }
}

#[test]
fn rough_integral_examples() {
    let x = linear_x(2, 4096, None);
    let y = compose_fx(&x, &builtin("identity", &[], 1)).unwrap();
    let (v, rep) = rough_integral(&y, &x, Letter::Base(1), 0, 4096, &[64, 32, 16, 8, 4, 2, 1]).unwrap();
    assert!((v[0] - 0.5).abs() < 1e-6);
    assert!(rep.pass, "{rep:?}");

    let c = compose_fx(&x, &builtin("constant", &[2.5], 1)).unwrap();
    let (v, _) = rough_integral(&c, &x, Letter::Base(1), 1024, 3072, &[8, 4, 2, 1]).unwrap();
    assert!((v[0] - 2.5 * 0.5).abs() < 1e-13);

    let xi = linear_x(2, 4096, Some(-0.5));
    let y = compose_fx(&xi, &builtin("square", &[], 1)).unwrap();
    let dy = ControlledPath::from_fn(xi.clone(), 1, |k, _, fo, out| {
        out[0] = if fo.is_empty() { 2.0 * k as f64 / 4096.0 } else if *fo == f("•1") { 2.0 } else { 0.0 };
    })
    .unwrap();
    assert!((dy.value(4096)[0] - y.coefficient(4096, &f("•1")).unwrap()[0]).abs() < 1e-12);
    let (v, _) = rough_integral(&dy, &xi, Letter::Base(1), 0, 4096, &[8, 4, 2, 1]).unwrap();
    assert!(v[0].abs() < 1e-6, "{}", v[0]);
}

#[test]
fn rough_integral_ladder_orders() {
    let x = rough_2d(3, 2048);
    let y = compose_fx(&x, &builtin("sin", &[1.0, 0.5], 2)).unwrap();
    for l in [1, 2] {
        let (_, rep) = rough_integral(&y, &x, Letter::Base(l), 0, 2048, &[64, 32, 16, 8, 4, 2, 1]).unwrap();
        assert!(rep.pass, "{rep:?}");
    }
    assert!(rough_integral(&y, &x, Letter::Base(1), 0, 2048, &[4, 2, 1]).is_err());
    assert!(rough_integral(&y, &x, Letter::Base(1), 0, 2047, &[8, 4, 2, 1]).is_err());
}

fn h_of(x: &Arc<RoughPath<f64>>) -> ScalarExtensionPath<f64> {
    ScalarExtensionPath::new(x.clone(), "x1", Series::from_forest(f("•1"))).unwrap()
}

#[test]
fn young_integral_examples() {
    let x = linear_x(3, 1024, None);
    let h = h_of(&x);
    let one = GridPath::from_fn(1, 1025, |_| vec![1.0]).unwrap();
    let (v, _) = young_integral(&one, &h, 100, 900, &[8, 4, 2, 1]).unwrap();
    assert!((v[0] - h.increment(100, 900).unwrap()).abs() < 1e-14);
    let t = GridPath::from_fn(1, 1025, |k| vec![k as f64 / 1024.0]).unwrap();
    let (v, rep) = young_integral(&t, &h, 0, 1024, &[8, 4, 2, 1]).unwrap();
    assert!((v[0] - 0.5).abs() < 1e-3);
    let fine = linear_x(3, 1 << 17, None);
    let tf = GridPath::from_fn(1, (1 << 17) + 1, |k| vec![k as f64 / (1 << 17) as f64]).unwrap();
    let (vf, _) = young_integral(&tf, &h_of(&fine), 0, 1 << 17, &[8, 4, 2, 1]).unwrap();
    assert!((vf[0] - 0.5).abs() < 1e-5);
    assert!(rep.warnings.is_empty(), "{:?}", rep.warnings);
    let xhat = Arc::new(x.bracket_extension().unwrap());
    let zero = bracket_path(&xhat, 1, 1).unwrap();
    let (v, _) = young_integral(&t, &zero, 0, 1024, &[8, 4, 2, 1]).unwrap();
    assert!(v[0].abs() < 1e-14);
}

#[test]
fn f_tau_examples() {
    let lin = VectorFieldFamily::<f64>::from_specs(&[FunctionSpec::builtin("identity", &[])], 1).unwrap();
    for y in [0.3, -1.7, 2.0] {
        assert_eq!(f_tau(&lin, &tree("•1")).unwrap().eval(&[y])[0], y);
        assert!((f_tau(&lin, &tree("[[•1]1]1")).unwrap().eval(&[y])[0] - y).abs() < 1e-14);
        assert!((f_tau(&lin, &tree("[•1•1]1")).unwrap().eval(&[y])[0]).abs() < 1e-14);
    }
    let fam = VectorFieldFamily::new(vec![
        FunctionSpec::Expr { components: vec![Expr::Sin(Box::new(Expr::var(1))), Expr::Mul(vec![Expr::var(0), Expr::var(0)])] }.build(2).unwrap(),
        FunctionSpec::Expr { components: vec![Expr::Const(1.0), Expr::Cos(Box::new(Expr::var(0)))] }.build(2).unwrap(),
    ])
    .unwrap();
    let y = [0.4f64, -0.9];
    let f2 = fam.field(1).eval(&y);
    let expect = fam.field(0).differential(&y, &[&f2]);
    let got = f_tau(&fam, &tree("[•2]1")).unwrap().eval(&y);
    for c in 0..2 {
        assert!((got[c] - expect[c]).abs() < 1e-14);
    }
    assert!(matches!(f_forest(&fam, &f("•1•2")), Err(Error::NotATree(_))));
}

#[test]
fn rde_oracles() {
    let xi = 1.3f64;
    let lin = VectorFieldFamily::<f64>::from_specs(&[FunctionSpec::builtin("identity", &[])], 1).unwrap();
    let x2 = linear_x(2, 1024, None);
    let x3 = linear_x(3, 1024, None);
    let y2 = solve_rde(&x2, &lin, &[xi], DIVERGENCE_BOUND).unwrap();
    let y3 = solve_rde(&x3, &lin, &[xi], DIVERGENCE_BOUND).unwrap();
    let mut err = 0.0f64;
    let mut diff = 0.0f64;
    for k in 0..=1024 {
        let exact = xi * (k as f64 / 1024.0).exp();
        err = err.max((y2.value(k)[0] - exact).abs()).max((y3.value(k)[0] - exact).abs());
        diff = diff.max((y2.value(k)[0] - y3.value(k)[0]).abs());
    }
    assert!(err < 1e-4 && diff < 1e-5, "{err} {diff}");

    let consts = VectorFieldFamily::<f64>::from_specs(&[FunctionSpec::builtin("constant", &[0.5, -1.0]), FunctionSpec::builtin("constant", &[2.0, 0.0])], 2).unwrap();
    let x = rough_2d(3, 256);
    let y = solve_rde(&x, &consts, &[1.0, 1.0], DIVERGENCE_BOUND).unwrap();
    let x0 = (x.base_value(Letter::Base(1), 0).unwrap(), x.base_value(Letter::Base(2), 0).unwrap());
    for k in [0, 77, 256] {
        let (a, b) = (x.base_value(Letter::Base(1), k).unwrap() - x0.0, x.base_value(Letter::Base(2), k).unwrap() - x0.1);
        assert!((y.value(k)[0] - (1.0 + 0.5 * a + 2.0 * b)).abs() < 1e-12);
        assert!((y.value(k)[1] - (1.0 - a)).abs() < 1e-12);
    }

    let cubic = VectorFieldFamily::<f64>::from_specs(&[FunctionSpec::builtin("cube", &[])], 1).unwrap();
    let blow = solve_rde(&linear_x(2, 1024, None), &cubic, &[3.0], DIVERGENCE_BOUND);
    assert!(matches!(blow, Err(Error::Divergence { .. })));
}

#[test]
fn rde_remainder_rates() {
    let x = rough_2d(3, 1024);
    let fam = VectorFieldFamily::new(vec![
        FunctionSpec::Expr { components: vec![Expr::Sin(Box::new(Expr::var(1))), Expr::Const(0.5)] }.build(2).unwrap(),
        FunctionSpec::Expr { components: vec![Expr::var(0), Expr::Cos(Box::new(Expr::var(0)))] }.build(2).unwrap(),
    ])
    .unwrap();
    let y = solve_rde(&x, &fam, &[0.2, 0.1], DIVERGENCE_BOUND).unwrap();
    let alpha = x.alpha();
    for fo in y.forests().forests() {
        let s = y.remainder_rate(fo, &LADDER).unwrap();
        assert!(s >= (3.0 - fo.degree() as f64) * alpha - 0.2, "{fo}: {s}");
    }
    for fo in ["•1•2", "•2•2"] {
        assert!(y.coefficient(5, &f(fo)).unwrap().iter().all(|v| *v == 0.0));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn rough_integral_is_linear(a in -3.0f64..3.0, b in -3.0f64..3.0, w1 in 0.1f64..2.0, w2 in -2.0f64..2.0) {
        let x = rough_2d(3, 256);
        let y1 = compose_fx(&x, &builtin("sin", &[w1, w2], 2)).unwrap();
        let y2 = compose_fx(&x, &builtin("square", &[w2, w1], 2)).unwrap();
        let comb = ControlledPath::from_fn(x.clone(), 1, |k, fi, _, out| {
            out[0] = a * y1.coef(k, fi)[0] + b * y2.coef(k, fi)[0];
        }).unwrap();
        for l in [1, 2] {
            let strides = [8, 4, 2, 1];
            let (v1, _) = rough_integral(&y1, &x, Letter::Base(l), 0, 256, &strides).unwrap();
            let (v2, _) = rough_integral(&y2, &x, Letter::Base(l), 0, 256, &strides).unwrap();
            let (vc, _) = rough_integral(&comb, &x, Letter::Base(l), 0, 256, &strides).unwrap();
            prop_assert!((vc[0] - a * v1[0] - b * v2[0]).abs() < 1e-9);
        }
    }

    #[test]
    fn remainders_agree_on_extension(w1 in -2.0f64..2.0, w2 in -2.0f64..2.0, a in 0usize..60, len in 1usize..40) {
        let x = rough_2d(3, 128);
        let xhat = x.bracket_extension().unwrap();
        let y = compose_fx(&x, &builtin("exp", &[w1, w2], 2)).unwrap();
        let b = (a + len).min(128);
        for fo in y.forests().forests() {
            let r = y.remainder(fo, a, b).unwrap();
            let rh = y.remainder_against(&xhat, fo, a, b).unwrap();
            prop_assert!((r[0] - rh[0]).abs() < 1e-12 * (1.0 + r[0].abs()));
        }
    }
}
