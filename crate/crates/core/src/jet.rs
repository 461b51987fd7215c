//! Truncated multivariate Taylor polynomials.
//!
//! A [`Poly`] of order `K` in `n` variables stores the coefficients of
//! `p(h) = Σ_{|α| ≤ K} c_α h^α`. Arithmetic truncates at order `K`, so evaluating a
//! map on `y + h` with `h` the variable jet yields its exact Taylor coefficients.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use crate::scalar::Real;

/// Graded monomial basis with multiplication and differentiation tables.
#[derive(Debug)]
pub struct MonomialTable {
    nvars: usize,
    order: usize,
    exps: Vec<Vec<u8>>,
    degree: Vec<usize>,
    index: HashMap<Vec<u8>, usize>,
    products: Vec<(u32, u32, u32)>,
    // per variable: (source monomial, target monomial in the order-1 table, multiplicity)
    derivs: Vec<Vec<(u32, u32, u32)>>,
}

impl MonomialTable {
    fn build(nvars: usize, order: usize) -> Self {
        let mut exps: Vec<Vec<u8>> = Vec::new();
        for deg in 0..=order {
            let mut cur = vec![0u8; nvars];
            compositions(nvars, deg, 0, &mut cur, &mut exps);
        }
        let degree: Vec<usize> = exps.iter().map(|e| e.iter().map(|&x| x as usize).sum()).collect();
        let index: HashMap<Vec<u8>, usize> = exps.iter().cloned().enumerate().map(|(i, e)| (e, i)).collect();
        let mut products = Vec::new();
        for (i, a) in exps.iter().enumerate() {
            for (j, b) in exps.iter().enumerate() {
                if degree[i] + degree[j] <= order {
                    let s: Vec<u8> = a.iter().zip(b).map(|(x, y)| x + y).collect();
                    products.push((i as u32, j as u32, index[&s] as u32));
                }
            }
        }
        let mut derivs = vec![Vec::new(); nvars];
        if order > 0 {
            let lower: HashMap<Vec<u8>, usize> = exps
                .iter()
                .filter(|e| e.iter().map(|&x| x as usize).sum::<usize>() < order)
                .cloned()
                .enumerate()
                .map(|(i, e)| (e, i))
                .collect();
            for (v, dv) in derivs.iter_mut().enumerate() {
                for (i, e) in exps.iter().enumerate() {
                    if e[v] > 0 {
                        let mut t = e.clone();
                        t[v] -= 1;
                        dv.push((i as u32, lower[&t] as u32, e[v] as u32));
                    }
                }
            }
        }
        MonomialTable {
            nvars,
            order,
            exps,
            degree,
            index,
            products,
            derivs,
        }
    }

    pub fn len(&self) -> usize {
        self.exps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.exps.is_empty()
    }

    pub fn exponents(&self, i: usize) -> &[u8] {
        &self.exps[i]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.degree[i]
    }

    pub fn index_of(&self, e: &[u8]) -> Option<usize> {
        self.index.get(e).copied()
    }
}

fn compositions(nvars: usize, deg: usize, pos: usize, cur: &mut Vec<u8>, out: &mut Vec<Vec<u8>>) {
    if nvars == 0 {
        if deg == 0 {
            out.push(Vec::new());
        }
        return;
    }
    if pos + 1 == nvars {
        cur[pos] = deg as u8;
        out.push(cur.clone());
        cur[pos] = 0;
        return;
    }
    for k in (0..=deg).rev() {
        cur[pos] = k as u8;
        compositions(nvars, deg - k, pos + 1, cur, out);
    }
    cur[pos] = 0;
}

/// Shared table for `(nvars, order)`.
pub fn table(nvars: usize, order: usize) -> Arc<MonomialTable> {
    static CACHE: OnceLock<Mutex<HashMap<(usize, usize), Arc<MonomialTable>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().expect("jet table cache");
    guard
        .entry((nvars, order))
        .or_insert_with(|| Arc::new(MonomialTable::build(nvars, order)))
        .clone()
}

#[derive(Clone, Debug)]
pub struct Poly<R> {
    table: Arc<MonomialTable>,
    c: Vec<R>,
}

impl<R: Real> Poly<R> {
    pub fn zero(nvars: usize, order: usize) -> Self {
        let table = table(nvars, order);
        let c = vec![R::zero(); table.len()];
        Poly { table, c }
    }

    pub fn constant(nvars: usize, order: usize, v: R) -> Self {
        let mut p = Self::zero(nvars, order);
        p.c[0] = v;
        p
    }

    /// `y_v + h_v`.
    pub fn variable(nvars: usize, order: usize, v: usize, at: R) -> Self {
        let mut p = Self::constant(nvars, order, at);
        if order > 0 {
            let mut e = vec![0u8; nvars];
            e[v] = 1;
            let i = p.table.index_of(&e).expect("linear monomial");
            p.c[i] = R::one();
        }
        p
    }

    /// Jets of the coordinates at `y`.
    pub fn variables(y: &[R], order: usize) -> Vec<Self> {
        (0..y.len()).map(|v| Self::variable(y.len(), order, v, y[v])).collect()
    }

    pub fn nvars(&self) -> usize {
        self.table.nvars
    }

    pub fn order(&self) -> usize {
        self.table.order
    }

    pub fn coeffs(&self) -> &[R] {
        &self.c
    }

    pub fn table(&self) -> &MonomialTable {
        &self.table
    }

    pub fn value(&self) -> R {
        self.c[0]
    }

    /// Coefficient of `h^α`.
    pub fn coefficient(&self, exps: &[u8]) -> R {
        self.table.index_of(exps).map(|i| self.c[i]).unwrap_or_else(R::zero)
    }

    /// `∂^α p(0) = α! c_α`.
    pub fn derivative_at_zero(&self, exps: &[u8]) -> R {
        let fact: usize = exps.iter().map(|&k| (1..=k as usize).product::<usize>()).product();
        self.coefficient(exps) * R::of_usize(fact)
    }

    pub fn add(&self, o: &Self) -> Self {
        let mut out = self.clone();
        for (a, b) in out.c.iter_mut().zip(&o.c) {
            *a = *a + *b;
        }
        out
    }

    pub fn sub(&self, o: &Self) -> Self {
        let mut out = self.clone();
        for (a, b) in out.c.iter_mut().zip(&o.c) {
            *a = *a - *b;
        }
        out
    }

    pub fn scale(&self, k: R) -> Self {
        let mut out = self.clone();
        out.c.iter_mut().for_each(|a| *a = *a * k);
        out
    }

    pub fn add_scalar(&self, k: R) -> Self {
        let mut out = self.clone();
        out.c[0] = out.c[0] + k;
        out
    }

    pub fn mul(&self, o: &Self) -> Self {
        let mut out = Poly {
            table: self.table.clone(),
            c: vec![R::zero(); self.c.len()],
        };
        for &(i, j, k) in &self.table.products {
            let (a, b) = (self.c[i as usize], o.c[j as usize]);
            if !a.is_zero() && !b.is_zero() {
                out.c[k as usize] = out.c[k as usize] + a * b;
            }
        }
        out
    }

    pub fn powi(&self, n: u32) -> Self {
        let mut acc = Self::constant(self.nvars(), self.order(), R::one());
        for _ in 0..n {
            acc = acc.mul(self);
        }
        acc
    }

    fn nilpotent_part(&self) -> Self {
        let mut q = self.clone();
        q.c[0] = R::zero();
        q
    }

    /// `Σ_k a_k q^k` with `q` the part without constant term.
    fn compose_series(&self, coeffs: &[R]) -> Self {
        let q = self.nilpotent_part();
        let mut out = Self::constant(self.nvars(), self.order(), coeffs[0]);
        let mut pow = Self::constant(self.nvars(), self.order(), R::one());
        for a in coeffs.iter().skip(1) {
            pow = pow.mul(&q);
            out = out.add(&pow.scale(*a));
        }
        out
    }

    fn taylor(&self, f0: R, derivs: impl Fn(usize) -> R) -> Self {
        let k = self.order();
        let mut coeffs = Vec::with_capacity(k + 1);
        let mut fact = R::one();
        coeffs.push(f0);
        for m in 1..=k {
            fact = fact * R::of_usize(m);
            coeffs.push(derivs(m) / fact);
        }
        self.compose_series(&coeffs)
    }

    pub fn sin(&self) -> Self {
        let (s, c) = (self.c[0].sin(), self.c[0].cos());
        self.taylor(s, |m| match m % 4 {
            0 => s,
            1 => c,
            2 => -s,
            _ => -c,
        })
    }

    pub fn cos(&self) -> Self {
        let (s, c) = (self.c[0].sin(), self.c[0].cos());
        self.taylor(c, |m| match m % 4 {
            0 => c,
            1 => -s,
            2 => -c,
            _ => s,
        })
    }

    pub fn exp(&self) -> Self {
        let e = self.c[0].exp();
        self.taylor(e, |_| e)
    }

    /// `∂p/∂h_v`, one order lower.
    pub fn partial(&self, v: usize) -> Self {
        let order = self.order().saturating_sub(1);
        let mut out = Poly::zero(self.nvars(), order);
        if self.order() == 0 {
            return out;
        }
        for &(src, dst, mult) in &self.table.derivs[v] {
            out.c[dst as usize] = out.c[dst as usize] + self.c[src as usize] * R::of_usize(mult as usize);
        }
        out
    }

    /// Same polynomial truncated to a lower order.
    pub fn truncate(&self, order: usize) -> Self {
        if order >= self.order() {
            return self.clone();
        }
        let mut out = Poly::zero(self.nvars(), order);
        for i in 0..out.c.len() {
            let e = out.table.exps[i].clone();
            out.c[i] = self.coefficient(&e);
        }
        out
    }
}

/// `D^m p(0) : (v_1, …, v_m)` for constant directions.
pub fn multilinear<R: Real>(p: &Poly<R>, dirs: &[&[R]]) -> R {
    let m = dirs.len();
    if m == 0 {
        return p.value();
    }
    let n = p.nvars();
    let mut acc = R::zero();
    let mut idx = vec![0usize; m];
    let mut exps = vec![0u8; n];
    loop {
        let mut w = R::one();
        for (r, &a) in idx.iter().enumerate() {
            w = w * dirs[r][a];
        }
        if !w.is_zero() {
            exps.iter_mut().for_each(|e| *e = 0);
            for &a in &idx {
                exps[a] += 1;
            }
            acc = acc + w * p.derivative_at_zero(&exps);
        }
        let mut r = 0;
        loop {
            if r == m {
                return acc;
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

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_sizes() {
        assert_eq!(table(2, 3).len(), 10);
        assert_eq!(table(1, 4).len(), 5);
        assert_eq!(table(3, 0).len(), 1);
    }

    #[test]
    fn product_rule() {
        let v = Poly::<f64>::variables(&[2.0, 3.0], 3);
        let p = v[0].mul(&v[0]).mul(&v[1]);
        // x^2 y at (2,3): ∂x = 2xy = 12, ∂y = x^2 = 4, ∂xx = 2y = 6, ∂xy = 2x = 4
        assert_eq!(p.value(), 12.0);
        assert_eq!(p.derivative_at_zero(&[1, 0]), 12.0);
        assert_eq!(p.derivative_at_zero(&[0, 1]), 4.0);
        assert_eq!(p.derivative_at_zero(&[2, 0]), 6.0);
        assert_eq!(p.derivative_at_zero(&[1, 1]), 4.0);
        assert_eq!(p.derivative_at_zero(&[2, 1]), 2.0);
        assert_eq!(multilinear(&p, &[&[1.0, 0.0], &[0.0, 1.0]]), 4.0);
        assert_eq!(p.partial(0).value(), 12.0);
        assert_eq!(p.partial(0).partial(1).value(), 4.0);
    }

    #[test]
    fn transcendental() {
        let x = Poly::<f64>::variable(1, 4, 0, 0.3);
        let s = x.sin();
        let c = x.cos();
        let e = x.exp();
        for m in 0..=4u8 {
            let ds = s.derivative_at_zero(&[m]);
            let expect = match m % 4 {
                0 => 0.3f64.sin(),
                1 => 0.3f64.cos(),
                2 => -0.3f64.sin(),
                _ => -0.3f64.cos(),
            };
            assert!((ds - expect).abs() < 1e-14);
            assert!((e.derivative_at_zero(&[m]) - 0.3f64.exp()).abs() < 1e-14);
        }
        let one = s.mul(&s).add(&c.mul(&c));
        assert!((one.value() - 1.0).abs() < 1e-15);
        assert!(one.coeffs()[1..].iter().all(|v| v.abs() < 1e-14));
    }
}
