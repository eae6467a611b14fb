//! Discretized one-particle space in the positive-momentum representation.
//!
//! Conventions: `f̂(p) = (2π)^{-1/2} ∫ f(x) e^{ipx} dx`, and a vector stores the
//! amplitudes `a_k = √p_k · f̂(p_k)`, so that `Σ_k w_k conj(a_k) b_k` approximates
//! `∫_0^∞ p conj(f̂) ĝ dp`. With this choice `Im⟨f,g⟩ = ½∫ f g' dx` and
//! multiplication by `e^{ipt}` moves supports by `+t`.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::innerfun::{eval_boundary, InnerFunctionSpec};
use crate::report::hash_f64s;

/// Nodes of the trapezoid rule used for smooth-bump transforms.
pub const BUMP_QUADRATURE_NODES: usize = 2048;

/// Gaussian windows are nominally supported on `center ± 5·width`.
pub const GAUSSIAN_SUPPORT_SIGMAS: f64 = 5.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GridScheme {
    Uniform,
    Geometric,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GridDoc", into = "GridDoc")]
pub struct MomentumGrid {
    points: Vec<f64>,
    weights: Vec<f64>,
    scheme: GridScheme,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct GridDoc {
    points: Vec<f64>,
    weights: Vec<f64>,
    scheme: GridScheme,
}

impl TryFrom<GridDoc> for MomentumGrid {
    type Error = Error;
    fn try_from(d: GridDoc) -> Result<Self> {
        MomentumGrid::from_parts(d.points, d.weights, d.scheme)
    }
}

impl From<MomentumGrid> for GridDoc {
    fn from(g: MomentumGrid) -> Self {
        GridDoc {
            points: g.points,
            weights: g.weights,
            scheme: g.scheme,
        }
    }
}

impl MomentumGrid {
    pub fn from_parts(points: Vec<f64>, weights: Vec<f64>, scheme: GridScheme) -> Result<Self> {
        if points.is_empty() || points.len() != weights.len() {
            return Err(Error::Validation(
                "grid needs equally many points and weights".into(),
            ));
        }
        if !(points[0] > 0.0) || points.iter().any(|p| !p.is_finite()) {
            return Err(Error::Validation(
                "grid points must be finite and positive".into(),
            ));
        }
        if points.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Validation(
                "grid points must be strictly increasing".into(),
            ));
        }
        if weights.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
            return Err(Error::Validation("grid weights must be positive".into()));
        }
        Ok(Self {
            points,
            weights,
            scheme,
        })
    }

    /// `m` points `p_min·r^k`, trapezoid weights in `log p`.
    pub fn geometric(m: usize, p_min: f64, p_max: f64) -> Result<Self> {
        check_range(m, p_min, p_max)?;
        if m == 1 {
            return Self::from_parts(vec![p_min], vec![p_min], GridScheme::Geometric);
        }
        let du = (p_max / p_min).ln() / (m - 1) as f64;
        let points: Vec<f64> = (0..m).map(|k| p_min * (du * k as f64).exp()).collect();
        let weights = points
            .iter()
            .enumerate()
            .map(|(k, p)| {
                if k == 0 || k == m - 1 {
                    0.5 * p * du
                } else {
                    p * du
                }
            })
            .collect();
        Self::from_parts(points, weights, GridScheme::Geometric)
    }

    /// `m` equispaced points with trapezoid weights.
    pub fn uniform(m: usize, p_min: f64, p_max: f64) -> Result<Self> {
        check_range(m, p_min, p_max)?;
        if m == 1 {
            return Self::from_parts(vec![p_min], vec![1.0], GridScheme::Uniform);
        }
        let h = (p_max - p_min) / (m - 1) as f64;
        let points = (0..m).map(|k| p_min + h * k as f64).collect();
        let weights = (0..m)
            .map(|k| if k == 0 || k == m - 1 { 0.5 * h } else { h })
            .collect();
        Self::from_parts(points, weights, GridScheme::Uniform)
    }

    /// 64 geometric points on `[1e-2, 1e2]`.
    pub fn default_geometric() -> Self {
        Self::geometric(64, 1e-2, 1e2).expect("default grid is valid")
    }

    pub fn build(scheme: GridScheme, m: usize, p_min: f64, p_max: f64) -> Result<Self> {
        match scheme {
            GridScheme::Uniform => Self::uniform(m, p_min, p_max),
            GridScheme::Geometric => Self::geometric(m, p_min, p_max),
        }
    }

    /// Same scheme and range with `factor` times as many points.
    pub fn refined(&self, factor: usize) -> Result<Self> {
        Self::build(self.scheme, self.len() * factor, self.p_min(), self.p_max())
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }
    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
    pub fn points(&self) -> &[f64] {
        &self.points
    }
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
    pub fn scheme(&self) -> GridScheme {
        self.scheme
    }
    pub fn p_min(&self) -> f64 {
        self.points[0]
    }
    pub fn p_max(&self) -> f64 {
        *self.points.last().unwrap()
    }

    pub fn hash(&self) -> String {
        hash_f64s(self.points.iter().chain(self.weights.iter()))
    }
}

fn check_range(m: usize, p_min: f64, p_max: f64) -> Result<()> {
    if m == 0 {
        return Err(Error::Validation("grid needs at least one point".into()));
    }
    if !(p_min > 0.0 && p_max > p_min && p_max.is_finite()) {
        return Err(Error::Validation(format!(
            "bad grid range [{p_min}, {p_max}]"
        )));
    }
    Ok(())
}

#[derive(Clone, Debug)]
pub struct OneParticleVector {
    grid: Arc<MomentumGrid>,
    amps: Vec<C64>,
}

#[derive(Serialize, Deserialize)]
struct VectorDoc {
    points: Vec<f64>,
    weights: Vec<f64>,
    scheme: GridScheme,
    amplitudes: Vec<[f64; 2]>,
}

impl Serialize for OneParticleVector {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        VectorDoc {
            points: self.grid.points.clone(),
            weights: self.grid.weights.clone(),
            scheme: self.grid.scheme,
            amplitudes: self.amps.iter().map(|a| [a.re, a.im]).collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for OneParticleVector {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let doc = VectorDoc::deserialize(d)?;
        let grid = MomentumGrid::from_parts(doc.points, doc.weights, doc.scheme)
            .map_err(serde::de::Error::custom)?;
        let amps = doc
            .amplitudes
            .iter()
            .map(|a| C64::new(a[0], a[1]))
            .collect();
        OneParticleVector::new(Arc::new(grid), amps).map_err(serde::de::Error::custom)
    }
}

impl PartialEq for OneParticleVector {
    fn eq(&self, other: &Self) -> bool {
        same_grid(&self.grid, &other.grid) && self.amps == other.amps
    }
}

fn same_grid(a: &Arc<MomentumGrid>, b: &Arc<MomentumGrid>) -> bool {
    Arc::ptr_eq(a, b) || a == b
}

impl OneParticleVector {
    pub fn new(grid: Arc<MomentumGrid>, amps: Vec<C64>) -> Result<Self> {
        if amps.len() != grid.len() {
            return Err(Error::Validation(format!(
                "{} amplitudes for a grid of {} points",
                amps.len(),
                grid.len()
            )));
        }
        if amps.iter().any(|a| !(a.re.is_finite() && a.im.is_finite())) {
            return Err(Error::Validation("non-finite amplitude".into()));
        }
        Ok(Self { grid, amps })
    }

    pub fn zero(grid: Arc<MomentumGrid>) -> Self {
        let n = grid.len();
        Self {
            grid,
            amps: vec![C64::new(0.0, 0.0); n],
        }
    }

    /// Unit-normalized vector concentrated on grid point `k`.
    pub fn basis(grid: Arc<MomentumGrid>, k: usize) -> Self {
        let mut v = Self::zero(grid);
        v.amps[k] = C64::new(1.0 / v.grid.weights[k].sqrt(), 0.0);
        v
    }

    pub fn grid(&self) -> &Arc<MomentumGrid> {
        &self.grid
    }
    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    /// Coefficients `√w_k a_k` in the orthonormal mode basis.
    pub fn mode_coefficients(&self) -> Vec<C64> {
        self.amps
            .iter()
            .zip(&self.grid.weights)
            .map(|(a, w)| a * w.sqrt())
            .collect()
    }

    pub fn from_mode_coefficients(grid: Arc<MomentumGrid>, c: &[C64]) -> Result<Self> {
        let amps = c
            .iter()
            .zip(&grid.weights)
            .map(|(c, w)| c / w.sqrt())
            .collect();
        Self::new(grid, amps)
    }

    pub fn norm(&self) -> f64 {
        self.amps
            .iter()
            .zip(&self.grid.weights)
            .map(|(a, w)| w * a.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    pub fn scale(&self, s: C64) -> Self {
        self.map(|_, a| a * s)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if !same_grid(&self.grid, &other.grid) {
            return Err(Error::GridMismatch);
        }
        let amps = self
            .amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a + b)
            .collect();
        Ok(Self {
            grid: self.grid.clone(),
            amps,
        })
    }

    /// Pointwise multiplication by `m(p_k)`.
    pub fn multiply(&self, m: impl Fn(f64) -> C64) -> Self {
        self.map(|p, a| a * m(p))
    }

    fn map(&self, f: impl Fn(f64, C64) -> C64) -> Self {
        let amps = self
            .grid
            .points
            .iter()
            .zip(&self.amps)
            .map(|(&p, &a)| f(p, a))
            .collect();
        Self {
            grid: self.grid.clone(),
            amps,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestFamily {
    GaussianWindow,
    SmoothBump,
}

/// `f(x) = amplitude · env((x - center)/width) · cos(modulation·(x - center) + phase)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TestFunctionSpec {
    pub family: TestFamily,
    pub center: f64,
    pub width: f64,
    #[serde(default)]
    pub modulation: f64,
    #[serde(default)]
    pub phase: f64,
    #[serde(default = "unit")]
    pub amplitude: f64,
}

fn unit() -> f64 {
    1.0
}

impl TestFunctionSpec {
    pub fn bump(center: f64, width: f64, modulation: f64, phase: f64) -> Self {
        Self {
            family: TestFamily::SmoothBump,
            center,
            width,
            modulation,
            phase,
            amplitude: 1.0,
        }
    }

    pub fn gaussian(center: f64, width: f64, modulation: f64, phase: f64) -> Self {
        Self {
            family: TestFamily::GaussianWindow,
            center,
            width,
            modulation,
            phase,
            amplitude: 1.0,
        }
    }

    pub fn with_amplitude(mut self, a: f64) -> Self {
        self.amplitude = a;
        self
    }

    pub fn translated(&self, t: f64) -> Self {
        let mut s = self.clone();
        s.center += t;
        s
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.width > 0.0 && self.width.is_finite()) {
            return Err(Error::Validation(format!(
                "width must be > 0, got {}",
                self.width
            )));
        }
        if ![self.center, self.modulation, self.phase, self.amplitude]
            .iter()
            .all(|x| x.is_finite())
        {
            return Err(Error::Validation(
                "test function parameters must be finite".into(),
            ));
        }
        Ok(())
    }

    /// Exact support for bumps, `±5σ` for Gaussian windows.
    pub fn nominal_support(&self) -> (f64, f64) {
        let r = match self.family {
            TestFamily::SmoothBump => self.width,
            TestFamily::GaussianWindow => GAUSSIAN_SUPPORT_SIGMAS * self.width,
        };
        (self.center - r, self.center + r)
    }

    pub fn is_left_localized(&self) -> bool {
        self.nominal_support().1 <= 0.0
    }

    pub fn is_right_localized(&self) -> bool {
        self.nominal_support().0 >= 0.0
    }

    fn envelope(&self, u: f64) -> f64 {
        match self.family {
            TestFamily::GaussianWindow => (-0.5 * u * u).exp(),
            TestFamily::SmoothBump => {
                if u.abs() < 1.0 {
                    (-1.0 / (1.0 - u * u)).exp()
                } else {
                    0.0
                }
            }
        }
    }

    /// Position-space value.
    pub fn eval(&self, x: f64) -> f64 {
        let y = x - self.center;
        self.amplitude * self.envelope(y / self.width) * (self.modulation * y + self.phase).cos()
    }

    /// Position-space derivative.
    pub fn eval_derivative(&self, x: f64) -> f64 {
        let y = x - self.center;
        let u = y / self.width;
        let (env, denv) = match self.family {
            TestFamily::GaussianWindow => {
                let e = (-0.5 * u * u).exp();
                (e, -u * e)
            }
            TestFamily::SmoothBump => {
                if u.abs() < 1.0 {
                    let d = 1.0 - u * u;
                    let e = (-1.0 / d).exp();
                    (e, -2.0 * u / (d * d) * e)
                } else {
                    (0.0, 0.0)
                }
            }
        };
        let arg = self.modulation * y + self.phase;
        self.amplitude * (denv / self.width * arg.cos() - env * self.modulation * arg.sin())
    }
}

/// `f̂(p)` at each requested momentum.
pub fn fourier_transform(tf: &TestFunctionSpec, ps: &[f64]) -> Vec<C64> {
    let (c, w, om, ph, a) = (tf.center, tf.width, tf.modulation, tf.phase, tf.amplitude);
    match tf.family {
        TestFamily::GaussianWindow => ps
            .iter()
            .map(|&p| {
                let plus = C64::from_polar((-0.5 * (w * (p + om)).powi(2)).exp(), ph);
                let minus = C64::from_polar((-0.5 * (w * (p - om)).powi(2)).exp(), -ph);
                C64::from_polar(0.5 * a * w, p * c) * (plus + minus)
            })
            .collect(),
        TestFamily::SmoothBump => {
            let n = BUMP_QUADRATURE_NODES;
            let h = 2.0 / (n - 1) as f64;
            // Samples at the local variable u ∈ [-1, 1]; endpoints vanish.
            let nodes: Vec<(f64, f64)> = (1..n - 1)
                .map(|j| {
                    let u = -1.0 + h * j as f64;
                    (u, tf.envelope(u) * (om * w * u + ph).cos())
                })
                .filter(|(_, v)| *v != 0.0)
                .collect();
            let pref = a * w * h / (2.0 * PI).sqrt();
            ps.iter()
                .map(|&p| {
                    let s: C64 = nodes
                        .iter()
                        .map(|&(u, v)| C64::from_polar(v, p * w * u))
                        .sum();
                    C64::from_polar(pref, p * c) * s
                })
                .collect()
        }
    }
}

/// Positive-frequency embedding of a real test function.
pub fn embed(tf: &TestFunctionSpec, grid: &Arc<MomentumGrid>) -> Result<OneParticleVector> {
    tf.validate()?;
    let fh = fourier_transform(tf, grid.points());
    let amps = fh
        .iter()
        .zip(grid.points())
        .map(|(f, p)| f * p.sqrt())
        .collect();
    OneParticleVector::new(grid.clone(), amps)
}

/// Position-space reconstruction from the Hermitian extension `f̂(-p) = conj f̂(p)`.
///
/// Approximates `f(x)` up to quadrature and momentum-cutoff error.
pub fn reconstruct_position(v: &OneParticleVector, x: f64) -> C64 {
    let g = v.grid();
    let mut acc = C64::new(0.0, 0.0);
    for ((&p, &w), &a) in g.points().iter().zip(g.weights()).zip(v.amplitudes()) {
        let fh = a / p.sqrt();
        let e = C64::from_polar(1.0, -p * x);
        acc += w * (fh * e + (fh * e).conj());
    }
    // The non-Hermitian part is kept so callers can measure it.
    acc / (2.0 * PI).sqrt()
}

pub fn inner(f: &OneParticleVector, g: &OneParticleVector) -> Result<C64> {
    if !same_grid(&f.grid, &g.grid) {
        return Err(Error::GridMismatch);
    }
    Ok(f.amps
        .iter()
        .zip(&g.amps)
        .zip(&f.grid.weights)
        .map(|((a, b), w)| a.conj() * b * w)
        .sum())
}

pub fn symplectic_form(f: &OneParticleVector, g: &OneParticleVector) -> Result<f64> {
    Ok(inner(f, g)?.im)
}

pub fn translate(f: &OneParticleVector, t: f64) -> OneParticleVector {
    f.multiply(|p| C64::from_polar(1.0, p * t))
}

/// Smallest admissible `s·p` relative to `p_min` when a singular factor is present.
pub const SINGULAR_CUTOFF_RATIO: f64 = 1e-3;

/// Multiplication by `φ(s·p)`.
pub fn apply_inner_function(
    phi: &InnerFunctionSpec,
    s: f64,
    f: &OneParticleVector,
) -> Result<OneParticleVector> {
    if !(s >= 0.0 && s.is_finite()) {
        return Err(Error::Domain(format!("scale must be >= 0, got {s}")));
    }
    if s == 0.0 {
        let c = phi.limit_at_zero()?;
        return Ok(f.scale(C64::new(c, 0.0)));
    }
    if phi.nu() > 0.0 && s < SINGULAR_CUTOFF_RATIO {
        return Err(Error::Domain(format!(
            "s·p_min = {} below the singular cutoff",
            s * f.grid.p_min()
        )));
    }
    let mut amps = Vec::with_capacity(f.amps.len());
    for (&p, &a) in f.grid.points.iter().zip(&f.amps) {
        amps.push(a * eval_boundary(phi, s * p)?);
    }
    Ok(OneParticleVector {
        grid: f.grid.clone(),
        amps,
    })
}

fn check_localization(f: &TestFunctionSpec, g: &TestFunctionSpec) -> Result<()> {
    if !f.is_left_localized() {
        return Err(Error::Precondition(format!(
            "f nominal support {:?} not in the left half-line",
            f.nominal_support()
        )));
    }
    if !g.is_right_localized() {
        return Err(Error::Precondition(format!(
            "g nominal support {:?} not in the right half-line",
            g.nominal_support()
        )));
    }
    Ok(())
}

/// `|Im⟨f, φ(sP)g⟩|` for `f` left- and `g` right-localized.
pub fn one_particle_locality_defect(
    f: &TestFunctionSpec,
    g: &TestFunctionSpec,
    phi: &InnerFunctionSpec,
    s: f64,
    grid: &Arc<MomentumGrid>,
) -> Result<f64> {
    check_localization(f, g)?;
    let fv = embed(f, grid)?;
    let gv = apply_inner_function(phi, s, &embed(g, grid)?)?;
    Ok(symplectic_form(&fv, &gv)?.abs())
}

/// Error budget behind a one-particle locality tolerance.
#[derive(Clone, Debug, Serialize)]
pub struct LocalityBudget {
    pub defect: f64,
    /// Defect recomputed on a grid with four times the points.
    pub fine_defect: f64,
    pub refinement_residual: f64,
    pub tail_bound: f64,
    pub cutoff_bound: f64,
    pub safety: f64,
    pub tolerance: f64,
}

/// Safety factor applied to every composed locality tolerance.
pub const LOCALITY_SAFETY: f64 = 10.0;

/// Defect plus the tolerance `10·(tail + cutoff + |I_M - I_{4M}|)`.
pub fn one_particle_locality_budget(
    f: &TestFunctionSpec,
    g: &TestFunctionSpec,
    phi: &InnerFunctionSpec,
    s: f64,
    grid: &Arc<MomentumGrid>,
) -> Result<LocalityBudget> {
    let defect = one_particle_locality_defect(f, g, phi, s, grid)?;
    let fine = Arc::new(grid.refined(4)?);
    let fine_defect = one_particle_locality_defect(f, g, phi, s, &fine)?;
    let refinement_residual = (defect - fine_defect).abs();
    let tail_bound = tail_bound(f, g);
    let cutoff_bound = cutoff_bound(f, g, grid.p_min(), grid.p_max());
    let tolerance = LOCALITY_SAFETY * (tail_bound + cutoff_bound + refinement_residual);
    Ok(LocalityBudget {
        defect,
        fine_defect,
        refinement_residual,
        tail_bound,
        cutoff_bound,
        safety: LOCALITY_SAFETY,
        tolerance,
    })
}

/// Bound on the part of `½∫ f g'` coming from the tails that cross the origin.
///
/// Zero for bumps; for Gaussian windows it bounds the undeformed overlap.
pub fn tail_bound(f: &TestFunctionSpec, g: &TestFunctionSpec) -> f64 {
    let l2 = |h: &dyn Fn(f64) -> f64, a: f64, b: f64| -> f64 {
        if b <= a {
            return 0.0;
        }
        let n = 4096;
        let dx = (b - a) / n as f64;
        let s: f64 = (0..=n)
            .map(|j| {
                let v = h(a + dx * j as f64);
                let wt = if j == 0 || j == n { 0.5 } else { 1.0 };
                wt * v * v
            })
            .sum();
        (s * dx).sqrt()
    };
    let reach = |t: &TestFunctionSpec| match t.family {
        TestFamily::SmoothBump => t.width,
        TestFamily::GaussianWindow => 40.0 * t.width,
    };
    let (fa, fb) = (f.center - reach(f), f.center + reach(f));
    let (ga, gb) = (g.center - reach(g), g.center + reach(g));
    let fv = |x: f64| f.eval(x);
    let gd = |x: f64| g.eval_derivative(x);
    let f_right = l2(&fv, 0.0f64.max(fa), fb);
    let g_left = l2(&gd, ga, 0.0f64.min(gb));
    let f_all = l2(&fv, fa, fb);
    let g_all = l2(&gd, ga, gb);
    0.5 * (f_right * g_all + f_all * g_left)
}

/// `∫ p |f̂||ĝ| dp` outside `[p_min, p_max]`.
pub fn cutoff_bound(f: &TestFunctionSpec, g: &TestFunctionSpec, p_min: f64, p_max: f64) -> f64 {
    let integrate = |ps: &[f64], ws: &[f64]| -> f64 {
        let a = fourier_transform(f, ps);
        let b = fourier_transform(g, ps);
        ps.iter()
            .zip(ws)
            .zip(a.iter().zip(&b))
            .map(|((p, w), (x, y))| w * p * x.norm() * y.norm())
            .sum()
    };
    let n = 256;
    let h = p_min / n as f64;
    let low_p: Vec<f64> = (0..n).map(|j| h * (j as f64 + 0.5)).collect();
    let low = integrate(&low_p, &vec![h; n]);
    let hi = MomentumGrid::geometric(n, p_max, 64.0 * p_max).expect("valid tail grid");
    let high = integrate(hi.points(), hi.weights());
    low + high
}
