//! Time grids and synthetic driver specifications.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::forest::{Letter, PlanarTree};
use crate::scalar::Real;

/// Strictly increasing time nodes `t_0 < ... < t_M`.
#[derive(Clone, Debug, PartialEq)]
pub struct Grid<R> {
    times: Vec<R>,
}

impl<R: Real> Grid<R> {
    pub fn new(times: Vec<R>) -> Result<Self> {
        if times.is_empty() {
            return Err(Error::Grid("no nodes".into()));
        }
        if times.iter().any(|t| !t.is_finite()) {
            return Err(Error::Grid("non-finite node".into()));
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Grid("nodes must be strictly increasing".into()));
        }
        Ok(Grid { times })
    }

    /// `cells` equal cells on `[0, t_end]`.
    pub fn uniform(t_end: R, cells: usize) -> Result<Self> {
        if cells > 0 && !(t_end > R::zero()) {
            return Err(Error::Grid("horizon must be positive".into()));
        }
        let h = if cells == 0 { R::zero() } else { t_end / R::of_usize(cells) };
        let mut times: Vec<R> = (0..=cells).map(|k| h * R::of_usize(k)).collect();
        if cells > 0 {
            times[cells] = t_end;
        }
        Grid::new(times)
    }

    pub fn times(&self) -> &[R] {
        &self.times
    }

    pub fn time(&self, k: usize) -> R {
        self.times[k]
    }

    pub fn cells(&self) -> usize {
        self.times.len() - 1
    }

    pub fn nodes(&self) -> usize {
        self.times.len()
    }

    /// Index of the node equal to `t` up to a relative tolerance.
    pub fn locate(&self, t: R) -> Result<usize> {
        let span = (self.times[self.cells()] - self.times[0]).abs().max(R::one());
        let tol = span * R::of(1e-12);
        let k = self.times.partition_point(|&x| x < t - tol);
        if k < self.times.len() && (self.times[k] - t).abs() <= tol {
            Ok(k)
        } else {
            Err(Error::Interval(format!("time {t} is not a grid node")))
        }
    }
}

/// Real-valued path of one time variable.
#[derive(Clone, Debug, PartialEq)]
pub enum ScalarPath<R> {
    /// `Σ c_k t^k`.
    Polynomial(Vec<R>),
    /// `offset + Σ a sin(ω t + φ)` with modes `(a, ω, φ)`.
    Trig { offset: R, modes: Vec<(R, R, R)> },
    /// Piecewise-linear interpolation of samples at increasing knots.
    Sampled { knots: Vec<R>, values: Vec<R> },
}

impl<R: Real> ScalarPath<R> {
    pub fn constant(c: R) -> Self {
        ScalarPath::Polynomial(vec![c])
    }

    /// `t ↦ c t`.
    pub fn linear(c: R) -> Self {
        ScalarPath::Polynomial(vec![R::zero(), c])
    }

    pub fn sampled(knots: Vec<R>, values: Vec<R>) -> Result<Self> {
        if knots.len() != values.len() || knots.is_empty() {
            return Err(Error::Dimension("knots and values differ in length".into()));
        }
        if knots.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Grid("knots must be strictly increasing".into()));
        }
        Ok(ScalarPath::Sampled { knots, values })
    }

    pub fn value(&self, t: R) -> R {
        match self {
            ScalarPath::Polynomial(c) => c.iter().rev().fold(R::zero(), |acc, &a| acc * t + a),
            ScalarPath::Trig { offset, modes } => modes
                .iter()
                .fold(*offset, |acc, &(a, w, p)| acc + a * (w * t + p).sin()),
            ScalarPath::Sampled { knots, values } => {
                if knots.len() == 1 {
                    return values[0];
                }
                let k = segment(knots, t);
                let (t0, t1) = (knots[k], knots[k + 1]);
                values[k] + (values[k + 1] - values[k]) * (t - t0) / (t1 - t0)
            }
        }
    }

    /// Derivative at `t`; piecewise paths use the segment containing the midpoint of `[a, b]`.
    pub fn derivative_within(&self, t: R, a: R, b: R) -> R {
        match self {
            ScalarPath::Polynomial(c) => {
                let mut acc = R::zero();
                for k in (1..c.len()).rev() {
                    acc = acc * t + R::of_usize(k) * c[k];
                }
                acc
            }
            ScalarPath::Trig { modes, .. } => modes
                .iter()
                .fold(R::zero(), |acc, &(amp, w, p)| acc + amp * w * (w * t + p).cos()),
            ScalarPath::Sampled { knots, values } => {
                if knots.len() == 1 {
                    return R::zero();
                }
                let mid = (a + b) / R::of(2.0);
                let k = segment(knots, mid);
                (values[k + 1] - values[k]) / (knots[k + 1] - knots[k])
            }
        }
    }

    pub fn derivative(&self, t: R) -> R {
        self.derivative_within(t, t, t)
    }
}

fn segment<R: Real>(knots: &[R], t: R) -> usize {
    let k = knots.partition_point(|&x| x <= t);
    k.clamp(1, knots.len() - 1) - 1
}

/// Spectral synthesis of an fBm-like test signal, sampled at the grid nodes and
/// interpolated linearly: `X(t) = σ Σ_k k^{-(H+1/2)} (ξ_k cos(2πkt/T) + η_k sin(2πkt/T)) − X(0)`
/// with `ξ_k, η_k` standard normal from a seeded ChaCha8 stream.
pub fn fbm_synthetic<R: Real>(grid: &Grid<R>, hurst: f64, modes: usize, scale: f64, seed: u64) -> Result<ScalarPath<R>> {
    if !(hurst > 0.0 && hurst < 1.0) {
        return Err(Error::Invalid(format!("hurst index {hurst} outside (0,1)")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let coeffs: Vec<(f64, f64)> = (0..modes)
        .map(|_| {
            let a: f64 = StandardNormal.sample(&mut rng);
            let b: f64 = StandardNormal.sample(&mut rng);
            (a, b)
        })
        .collect();
    let t0 = grid.time(0).f64();
    let span = (grid.time(grid.cells()).f64() - t0).max(f64::MIN_POSITIVE);
    let eval = |t: f64| -> f64 {
        let mut acc = 0.0;
        for (k, &(a, b)) in coeffs.iter().enumerate() {
            let kk = (k + 1) as f64;
            let w = 2.0 * std::f64::consts::PI * kk * (t - t0) / span;
            acc += kk.powf(-(hurst + 0.5)) * (a * w.cos() + b * w.sin());
        }
        scale * acc
    };
    let x0 = eval(t0);
    let values = grid.times().iter().map(|&t| R::of(eval(t.f64()) - x0)).collect();
    ScalarPath::sampled(grid.times().to_vec(), values)
}

/// Letter drivers and tree intensities of a lift.
#[derive(Clone, Debug, PartialEq)]
pub struct DriverSpec<R> {
    pub letters: Vec<(Letter, ScalarPath<R>)>,
    pub intensities: Vec<(PlanarTree, ScalarPath<R>)>,
}

impl<R: Real> DriverSpec<R> {
    pub fn new(letters: Vec<(Letter, ScalarPath<R>)>) -> Self {
        DriverSpec {
            letters,
            intensities: Vec::new(),
        }
    }

    /// Base letters `1..=d` driven by the given paths.
    pub fn from_paths(paths: Vec<ScalarPath<R>>) -> Self {
        Self::new(
            paths
                .into_iter()
                .enumerate()
                .map(|(k, p)| (Letter::Base(k as u16 + 1), p))
                .collect(),
        )
    }

    pub fn with_intensity(mut self, tree: PlanarTree, path: ScalarPath<R>) -> Self {
        self.intensities.push((tree, path));
        self
    }

    pub fn alphabet(&self) -> Vec<Letter> {
        self.letters.iter().map(|(l, _)| *l).collect()
    }

    pub fn path(&self, l: Letter) -> Option<&ScalarPath<R>> {
        self.letters.iter().find(|(m, _)| *m == l).map(|(_, p)| p)
    }
}
