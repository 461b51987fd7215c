//! Log-log regression helpers shared by the diagnostics.

use serde::Serializer;

/// Least-squares slope of `y` against `x`; `None` with fewer than two distinct abscissae.
pub fn ls_slope(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len().min(y.len());
    if n < 2 {
        return None;
    }
    let mx = x[..n].iter().sum::<f64>() / n as f64;
    let my = y[..n].iter().sum::<f64>() / n as f64;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for k in 0..n {
        sxx += (x[k] - mx) * (x[k] - mx);
        sxy += (x[k] - mx) * (y[k] - my);
    }
    if sxx == 0.0 {
        None
    } else {
        Some(sxy / sxx)
    }
}

/// Slope of `log v` against `log h`, skipping entries with `v <= floor`.
/// Returns `+∞` when every value is at or below the floor.
pub fn loglog_slope(h: &[f64], v: &[f64], floor: f64) -> f64 {
    let mut lx = Vec::new();
    let mut ly = Vec::new();
    for (&a, &b) in h.iter().zip(v) {
        if b.is_finite() && b > floor && a > 0.0 {
            lx.push(a.ln());
            ly.push(b.ln());
        }
    }
    if lx.is_empty() {
        return f64::INFINITY;
    }
    if lx.len() < 2 {
        return f64::INFINITY;
    }
    ls_slope(&lx, &ly).unwrap_or(f64::INFINITY)
}

/// Local orders `log(v_k / v_{k+1}) / log(h_k / h_{k+1})` between consecutive rungs.
pub fn local_orders(h: &[f64], v: &[f64]) -> Vec<f64> {
    (0..h.len().saturating_sub(1).min(v.len().saturating_sub(1)))
        .map(|k| (v[k] / v[k + 1]).ln() / (h[k] / h[k + 1]).ln())
        .collect()
}

/// Dyadic scales `1, 2, 4, ...` (in grid cells) usable on a grid of `cells` cells,
/// keeping at least `min_windows` windows at the coarsest scale.
pub fn dyadic_scales(cells: usize, levels: usize, min_windows: usize) -> Vec<usize> {
    let mut out = Vec::new();
    let mut s = 1usize;
    while out.len() < levels && s * min_windows.max(1) <= cells {
        out.push(s);
        s *= 2;
    }
    out
}

/// Serializes non-finite floats as strings so JSON stays valid.
pub fn serialize_float<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
    if v.is_finite() {
        s.serialize_f64(*v)
    } else if v.is_nan() {
        s.serialize_str("nan")
    } else if *v > 0.0 {
        s.serialize_str("+inf")
    } else {
        s.serialize_str("-inf")
    }
}

pub fn serialize_floats<S: Serializer>(v: &[f64], s: S) -> Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = s.serialize_seq(Some(v.len()))?;
    for x in v {
        seq.serialize_element(&Float(*x))?;
    }
    seq.end()
}

struct Float(f64);

impl serde::Serialize for Float {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        serialize_float(&self.0, s)
    }
}
