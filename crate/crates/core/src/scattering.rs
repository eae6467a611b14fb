//! Asymptotic fields, collision states and S-matrix extraction.
//!
//! Time averages are taken along the light rays `T(t, ±t)`, which act on a
//! single chiral factor: `T(t,t) = 1⊗T₀(√2t)` and `T(t,-t) = T₀(√2t)⊗1`.
//! The incoming and outgoing one-particle spaces are identified with the
//! sectors `ξ⊗Ω` and `Ω⊗η`.

use std::collections::HashMap;
use std::f64::consts::{PI, SQRT_2};
use std::sync::Arc;

use ndarray::{Array1, Array2};
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{weyl_operator, FockOperator, FockTruncation, FockVector};
use crate::linalg::{adjoint, columns, condition_number, lstsq, solve_right};
use crate::onepspace::{embed, TestFunctionSpec};
use crate::report::CheckReport;
use crate::smatrix::{TwoSidedBasis, TwoSidedVector};
use crate::twosided::TwoSidedOperator;
use crate::wedge::{translation_factors, WedgeTriple};

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
const ONE: C64 = C64 { re: 1.0, im: 0.0 };

/// Half-width of the integration window in units of the kernel width.
pub const WINDOW_WIDTHS: f64 = 8.0;
/// Minimum quadrature nodes per kernel width.
pub const MIN_NODES_PER_WIDTH: usize = 64;
/// Largest phase advance `ω·Δt` allowed between nodes.
pub const MAX_PHASE_STEP: f64 = PI / 4.0;
/// Budget for limits that are exact in exact arithmetic.
pub const EXACT_BUDGET: f64 = 1e-10;
/// Gram condition number above which extraction refuses to proceed.
pub const MAX_GRAM_CONDITION: f64 = 1e8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Lightray {
    Plus,
    Minus,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    In,
    Out,
}

/// Which algebra of the triple an operator belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Wedge,
    Commutant,
}

/// Gaussian smoothing profile with width `|T|^ε` centered at `T`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SmoothingKernel {
    pub epsilon: f64,
    pub t_schedule: Vec<f64>,
}

impl Default for SmoothingKernel {
    fn default() -> Self {
        Self {
            epsilon: 0.5,
            t_schedule: vec![4.0, 8.0, 16.0, 32.0, 64.0],
        }
    }
}

/// Quadrature nodes and normalized weights for one `h_T`.
#[derive(Clone, Debug)]
pub struct Quadrature {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub nodes_per_width: usize,
    /// `|Σ raw weights - 1|` before normalization.
    pub raw_mass_error: f64,
}

fn gaussian(u: f64) -> f64 {
    (-0.5 * u * u).exp() / (2.0 * PI).sqrt()
}

impl SmoothingKernel {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(Error::Validation(format!(
                "epsilon must lie in (0,1), got {}",
                self.epsilon
            )));
        }
        if self.t_schedule.len() < 2 {
            return Err(Error::Validation(
                "T schedule needs at least two entries".into(),
            ));
        }
        if !self
            .t_schedule
            .windows(2)
            .all(|w| w[0] > 0.0 && w[1] > w[0])
        {
            return Err(Error::Validation(
                "T schedule must be positive and increasing".into(),
            ));
        }
        Ok(())
    }

    pub fn width(&self, t: f64) -> f64 {
        t.abs().powf(self.epsilon)
    }

    /// Trapezoid nodes on `T ± 8|T|^ε`, fine enough that `ω_max·Δt ≤ π/4`.
    pub fn quadrature(&self, t: f64, omega_max: f64) -> Result<Quadrature> {
        if t == 0.0 || !t.is_finite() {
            return Err(Error::Domain(format!(
                "time average needs |T| > 0, got {t}"
            )));
        }
        let w = self.width(t);
        let alias = (omega_max * w / MAX_PHASE_STEP).ceil() as usize;
        let npw = MIN_NODES_PER_WIDTH.max(alias);
        let n = (2.0 * WINDOW_WIDTHS) as usize * npw;
        let dt = w / npw as f64;
        let start = t - WINDOW_WIDTHS * w;
        let nodes: Vec<f64> = (0..=n).map(|j| start + dt * j as f64).collect();
        let mut weights: Vec<f64> = nodes
            .iter()
            .enumerate()
            .map(|(j, &s)| {
                let end = if j == 0 || j == n { 0.5 } else { 1.0 };
                end * dt * gaussian((s - t) / w) / w
            })
            .collect();
        let mass: f64 = weights.iter().sum();
        weights.iter_mut().for_each(|x| *x /= mass);
        Ok(Quadrature {
            nodes,
            weights,
            nodes_per_width: npw,
            raw_mass_error: (mass - 1.0).abs(),
        })
    }
}

impl Quadrature {
    /// `Σ_n w_n e^{iωt_n}` by phase recurrence.
    pub fn transform(&self, omega: f64) -> C64 {
        if omega == 0.0 {
            return ONE;
        }
        let dt = self.nodes[1] - self.nodes[0];
        let step = C64::from_polar(1.0, omega * dt);
        let mut z = C64::from_polar(1.0, omega * self.nodes[0]);
        let mut acc = ZERO;
        for (j, w) in self.weights.iter().enumerate() {
            acc += z * *w;
            z *= step;
            if j % 256 == 255 {
                z = C64::from_polar(1.0, omega * self.nodes[j + 1]);
            }
        }
        acc
    }
}

/// `K[i,j] = ∫ h_T(t) e^{i√2 t (E_i - E_j)} dt` on one chiral factor.
pub fn kernel_matrix(tr: &FockTruncation, q: &Quadrature) -> Array2<C64> {
    let e = tr.energies();
    let mut uniq: Vec<f64> = e.clone();
    uniq.sort_by(|a, b| a.total_cmp(b));
    uniq.dedup();
    let pos: HashMap<u64, usize> = uniq
        .iter()
        .enumerate()
        .map(|(i, x)| (x.to_bits(), i))
        .collect();
    let u = uniq.len();
    let rows: Vec<Vec<C64>> = (0..u)
        .into_par_iter()
        .map(|a| {
            (0..u)
                .map(|b| {
                    if b < a {
                        ZERO
                    } else {
                        q.transform(SQRT_2 * (uniq[a] - uniq[b]))
                    }
                })
                .collect()
        })
        .collect();
    let table = Array2::from_shape_fn((u, u), |(a, b)| {
        if b >= a {
            rows[a][b]
        } else {
            rows[b][a].conj()
        }
    });
    let idx: Vec<usize> = e.iter().map(|x| pos[&x.to_bits()]).collect();
    Array2::from_shape_fn((e.len(), e.len()), |(i, j)| table[(idx[i], idx[j])])
}

fn max_energy(tr: &FockTruncation) -> f64 {
    tr.energies().into_iter().fold(0.0, f64::max)
}

/// `x_±(h_T) = ∫ h_T(t) Ad T(t, ±t)(x) dt`.
pub fn time_averaged_operator(
    x: &TwoSidedOperator,
    t: f64,
    kernel: &SmoothingKernel,
    lightray: Lightray,
) -> Result<(TwoSidedOperator, Quadrature)> {
    let b = x.basis();
    let tr = match lightray {
        Lightray::Plus => b.right(),
        Lightray::Minus => b.left(),
    };
    let q = kernel.quadrature(t, SQRT_2 * max_energy(tr))?;
    let k = kernel_matrix(tr, &q);
    let out = match lightray {
        Lightray::Plus => x.hadamard_right(&k),
        Lightray::Minus => x.hadamard_left(&k),
    };
    Ok((out, q))
}

/// Limit candidate with its convergence record.
#[derive(Clone, Debug)]
pub struct AsymptoticField {
    pub limit: TwoSidedOperator,
    /// `‖X(T_{n+1}) - X(T_n)‖_F / ‖x‖_F` along the schedule.
    pub increments: Vec<f64>,
    /// Distance between the extrapolated limit and the last average, relative.
    pub extrapolation_shift: f64,
    pub report: CheckReport,
}

fn check_pairing(side: Side, lightray: Lightray, direction: Direction) -> Result<()> {
    use Direction::*;
    use Lightray::*;
    let ok = match side {
        Side::Wedge => matches!((lightray, direction), (Plus, Out) | (Minus, In)),
        Side::Commutant => matches!((lightray, direction), (Plus, In) | (Minus, Out)),
    };
    if ok {
        Ok(())
    } else {
        Err(Error::Precondition(format!(
            "{side:?}-side asymptotic field is not defined for lightray {lightray:?}, direction {direction:?}"
        )))
    }
}

/// `P₊` keeps `ξ⊗Ω`, `P₋` keeps `Ω⊗η`.
pub fn sector_projection(v: &TwoSidedVector, lightray: Lightray) -> TwoSidedVector {
    let b = v.basis();
    let a = v.amplitudes();
    let amps = Array1::from_shape_fn(b.dim(), |i| {
        let (l, r) = b.split(i);
        let keep = match lightray {
            Lightray::Plus => r == 0,
            Lightray::Minus => l == 0,
        };
        if keep {
            a[i]
        } else {
            ZERO
        }
    });
    TwoSidedVector::new(b.clone(), amps).expect("same basis")
}

/// Time averages along the schedule (negated for `in`) with extrapolation.
///
/// The extrapolation estimates the contraction rate `ρ` from the last two
/// increments and adds the geometric tail; `ρ = 1/2` is Richardson in `1/T`.
pub fn asymptotic_field(
    x: &TwoSidedOperator,
    side: Side,
    lightray: Lightray,
    direction: Direction,
    kernel: &SmoothingKernel,
) -> Result<AsymptoticField> {
    check_pairing(side, lightray, direction)?;
    kernel.validate()?;
    let sign = match direction {
        Direction::Out => 1.0,
        Direction::In => -1.0,
    };
    let mut rep = CheckReport::new("asymptotic_field")
        .with_grid_hash(x.basis().left().grid().hash())
        .with_truncation(x.basis().describe());
    rep.param("side", side);
    rep.param("lightray", lightray);
    rep.param("direction", direction);
    rep.param("epsilon", kernel.epsilon);
    rep.param("t_schedule", &kernel.t_schedule);
    rep.log("strong-operator limits are replaced by Frobenius convergence on the truncation");
    let xn = x.frobenius_norm().max(f64::MIN_POSITIVE);
    let seq: Vec<(TwoSidedOperator, Quadrature)> = kernel
        .t_schedule
        .iter()
        .map(|&t| time_averaged_operator(x, sign * t, kernel, lightray))
        .collect::<Result<_>>()?;
    let mut increments = Vec::new();
    for w in seq.windows(2) {
        increments.push(w[1].0.distance(&w[0].0)? / xn);
    }
    let npw: Vec<usize> = seq.iter().map(|s| s.1.nodes_per_width).collect();
    rep.param("nodes_per_width", &npw);
    rep.param("increments", &increments);
    let mass = seq.iter().map(|s| s.1.raw_mass_error).fold(0.0, f64::max);
    rep.defect(
        "kernel_mass",
        mass,
        1e-10,
        "analytic: Gaussian mass outside 8 widths",
    );
    let floor = 1e-14;
    let monotone = increments.windows(2).all(|w| w[1] <= w[0] + floor);
    if !monotone {
        return Err(Error::NonConvergence(format!(
            "Cauchy increments {increments:?} are not decreasing along T = {:?}",
            kernel.t_schedule
        )));
    }
    let n = seq.len();
    let (last, prev) = (&seq[n - 1].0, &seq[n - 2].0);
    let c_last = increments[n - 2];
    let c_prev = if n >= 3 { increments[n - 3] } else { 0.0 };
    let rho = if c_prev > 0.0 {
        (c_last / c_prev).clamp(0.0, 0.9)
    } else {
        0.0
    };
    let limit = if rho > 0.0 {
        last.axpy(C64::new(rho / (1.0 - rho), 0.0), &last.sub(prev)?)?
    } else {
        last.clone()
    };
    let extrapolation_shift = limit.distance(last)? / xn;
    rep.param("rate", rho);
    rep.param("extrapolation_shift", extrapolation_shift);

    let vac = TwoSidedVector::vacuum(x.basis().clone());
    let xo = x.apply(&vac)?;
    let target = sector_projection(&xo, lightray);
    let got = limit.apply(&vac)?;
    let d = got.distance(&target) / xo.norm().max(f64::MIN_POSITIVE);
    rep.defect(
        "vacuum_sector",
        d,
        EXACT_BUDGET.max(10.0 * (c_last + extrapolation_shift)),
        "convergence budget: max(1e-10, 10 x last increment)",
    );
    rep.defect(
        "last_increment",
        c_last,
        0.1 * EXACT_BUDGET.max(d),
        "convergence discipline: 10% of budget",
    );
    Ok(AsymptoticField {
        limit,
        increments,
        extrapolation_shift,
        report: rep,
    })
}

/// Test functions and scales for Weyl-polynomial matching.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ApproximantFamily {
    /// Functions in the left half-line; the right family is their mirror image.
    pub functions: Vec<TestFunctionSpec>,
    pub base_scale: f64,
}

impl Default for ApproximantFamily {
    fn default() -> Self {
        let mut functions = Vec::new();
        for (i, c) in [-1.5, -3.5, -5.5, -7.5].into_iter().enumerate() {
            for m in [0.0, 2.5, 5.0] {
                functions
                    .push(TestFunctionSpec::bump(c, 1.0, m, 0.7 * i as f64).with_amplitude(0.3));
            }
        }
        Self {
            functions,
            base_scale: 1.0,
        }
    }
}

impl ApproximantFamily {
    pub fn left_half(&self) -> Vec<TestFunctionSpec> {
        self.functions.clone()
    }

    pub fn right_half(&self) -> Vec<TestFunctionSpec> {
        self.functions
            .iter()
            .map(|f| TestFunctionSpec {
                center: -f.center,
                ..f.clone()
            })
            .collect()
    }

    /// `n_max + 1` distinct scales `a, -a, 2a, -2a, ...`, enough to separate every layer.
    pub fn scales(&self, n_max: usize) -> Vec<f64> {
        (0..=n_max)
            .map(|i| {
                let k = (i / 2 + 1) as f64 * self.base_scale;
                if i % 2 == 0 {
                    k
                } else {
                    -k
                }
            })
            .collect()
    }
}

/// Linear combination `a = Σ c_j W(s_j f_j)` with `aΩ` closest to `target`.
///
/// Returns the operator and the relative residual `‖aΩ - target‖/‖target‖`.
pub fn weyl_polynomial_approximant(
    target: &FockVector,
    functions: &[TestFunctionSpec],
    scales: &[f64],
) -> Result<(FockOperator, f64)> {
    let tr = target.truncation().clone();
    let vac = FockVector::vacuum(tr.clone());
    let mut ops = Vec::new();
    let mut cols = Vec::new();
    for f in functions {
        let v = embed(f, tr.grid())?;
        for &s in scales {
            let w = weyl_operator(&v.scale(C64::new(s, 0.0)), &tr)?;
            cols.push(w.apply(&vac)?.into_amplitudes());
            ops.push(w);
        }
    }
    let a = columns(&cols);
    let c = lstsq(&a, target.amplitudes(), 1e-13)?;
    let mut acc = Array2::from_elem((tr.dim(), tr.dim()), ZERO);
    for (w, cj) in ops.iter().zip(c.iter()) {
        acc.scaled_add(*cj, &w.to_dense());
    }
    let op = FockOperator::dense(tr.clone(), acc)?;
    let got = op.apply(&vac)?;
    let res = got.sub(target)?.norm() / target.norm().max(f64::MIN_POSITIVE);
    Ok((op, res))
}

/// Collision state with the bookkeeping needed for tolerances.
#[derive(Clone, Debug)]
pub struct CollisionState {
    pub vector: TwoSidedVector,
    pub approximation_residual: f64,
    pub max_increment: f64,
}

fn check_sector(xi: &FockVector, eta: &FockVector, basis: &TwoSidedBasis) -> Result<()> {
    if **xi.truncation() != **basis.left() || **eta.truncation() != **basis.right() {
        return Err(Error::TruncationMismatch);
    }
    Ok(())
}

/// `ξ ×out η = Φ^out_+(x)Φ^out_-(y)Ω` or `ξ ×in η = Φ^in_+(y')Φ^in_-(x')Ω`.
pub fn collision_state<T: WedgeTriple + ?Sized>(
    xi: &FockVector,
    eta: &FockVector,
    direction: Direction,
    triple: &T,
    kernel: &SmoothingKernel,
    family: &ApproximantFamily,
) -> Result<CollisionState> {
    let basis = triple.basis();
    check_sector(xi, eta, basis)?;
    let (a, ra) = approximant(xi, direction, family)?;
    let (b, rb) = approximant(eta, direction, family)?;
    let (plus, minus) = match direction {
        Direction::Out => (
            asymptotic_field(
                &triple.wedge_left(&a)?,
                Side::Wedge,
                Lightray::Plus,
                direction,
                kernel,
            )?,
            asymptotic_field(
                &triple.commutant_right(&b)?,
                Side::Commutant,
                Lightray::Minus,
                direction,
                kernel,
            )?,
        ),
        Direction::In => (
            asymptotic_field(
                &triple.commutant_left(&a)?,
                Side::Commutant,
                Lightray::Plus,
                direction,
                kernel,
            )?,
            asymptotic_field(
                &triple.wedge_right(&b)?,
                Side::Wedge,
                Lightray::Minus,
                direction,
                kernel,
            )?,
        ),
    };
    let vac = TwoSidedVector::vacuum(basis.clone());
    let vector = plus.limit.apply(&minus.limit.apply(&vac)?)?;
    let max_increment = plus.increments.iter().chain(&minus.increments).fold(
        plus.extrapolation_shift.max(minus.extrapolation_shift),
        |m, &x| m.max(x),
    );
    Ok(CollisionState {
        vector,
        approximation_residual: ra.max(rb),
        max_increment,
    })
}

/// Out-states use left half-line functions, in-states right half-line ones.
fn approximant(
    v: &FockVector,
    direction: Direction,
    family: &ApproximantFamily,
) -> Result<(FockOperator, f64)> {
    let fs = match direction {
        Direction::Out => family.left_half(),
        Direction::In => family.right_half(),
    };
    weyl_polynomial_approximant(v, &fs, &family.scales(v.truncation().n_max()))
}

/// Collision states `ξ_a ×dir η_b` for all pairs, `a` major.
///
/// Approximants and minus-side fields are computed once per vector; only one
/// plus-side field operator is alive at a time.
pub fn collision_states<T: WedgeTriple + ?Sized>(
    left_basis: &[FockVector],
    right_basis: &[FockVector],
    direction: Direction,
    triple: &T,
    kernel: &SmoothingKernel,
    family: &ApproximantFamily,
) -> Result<Vec<CollisionState>> {
    let basis = triple.basis();
    let vac = TwoSidedVector::vacuum(basis.clone());
    for xi in left_basis {
        for eta in right_basis {
            check_sector(xi, eta, basis)?;
        }
    }
    let minus: Vec<(TwoSidedVector, f64, f64)> = right_basis
        .iter()
        .map(|eta| {
            let (b, rb) = approximant(eta, direction, family)?;
            let (op, side) = match direction {
                Direction::Out => (triple.commutant_right(&b)?, Side::Commutant),
                Direction::In => (triple.wedge_right(&b)?, Side::Wedge),
            };
            let f = asymptotic_field(&op, side, Lightray::Minus, direction, kernel)?;
            Ok((f.limit.apply(&vac)?, rb, max_increment(&f)))
        })
        .collect::<Result<_>>()?;
    let mut out = Vec::with_capacity(left_basis.len() * right_basis.len());
    for xi in left_basis {
        let (a, ra) = approximant(xi, direction, family)?;
        let (op, side) = match direction {
            Direction::Out => (triple.wedge_left(&a)?, Side::Wedge),
            Direction::In => (triple.commutant_left(&a)?, Side::Commutant),
        };
        let plus = asymptotic_field(&op, side, Lightray::Plus, direction, kernel)?;
        let ip = max_increment(&plus);
        for (u, rb, im) in &minus {
            out.push(CollisionState {
                vector: plus.limit.apply(u)?,
                approximation_residual: ra.max(*rb),
                max_increment: ip.max(*im),
            });
        }
    }
    Ok(out)
}

fn max_increment(f: &AsymptoticField) -> f64 {
    f.increments
        .last()
        .copied()
        .unwrap_or(0.0)
        .max(f.extrapolation_shift)
}

/// Extracted S-matrix on `span{ξ_a⊗η_b}` in the reference coordinates.
#[derive(Clone, Debug)]
pub struct Extraction {
    pub extracted: Array2<C64>,
    pub expected: Array2<C64>,
    pub report: CheckReport,
}

fn max_abs(m: &Array2<C64>) -> f64 {
    m.iter().map(|x| x.norm()).fold(0.0, f64::max)
}

/// Solves `S_ext · Out = In` on the span of the supplied sector vectors.
///
/// Also reports how far the out-states are from `ξ⊗η` and whether both
/// families reproduce the Gram matrix of the products.
pub fn extract_smatrix<T: WedgeTriple + ?Sized>(
    triple: &T,
    left_basis: &[FockVector],
    right_basis: &[FockVector],
    kernel: &SmoothingKernel,
    family: &ApproximantFamily,
) -> Result<Extraction> {
    let basis = triple.basis().clone();
    let mut rep = CheckReport::new("extract_smatrix")
        .with_grid_hash(basis.left().grid().hash())
        .with_truncation(basis.describe());
    rep.param("triple", triple.label());
    rep.param("left_vectors", left_basis.len());
    rep.param("right_vectors", right_basis.len());
    let outs = collision_states(
        left_basis,
        right_basis,
        Direction::Out,
        triple,
        kernel,
        family,
    )?;
    let ins = collision_states(
        left_basis,
        right_basis,
        Direction::In,
        triple,
        kernel,
        family,
    )?;
    let mut refs = Vec::new();
    for xi in left_basis {
        for eta in right_basis {
            refs.push(
                TwoSidedVector::tensor(&basis, xi, eta)?
                    .amplitudes()
                    .clone(),
            );
        }
    }
    let resid = outs
        .iter()
        .chain(&ins)
        .map(|c| c.approximation_residual)
        .fold(0.0, f64::max);
    let incr = outs
        .iter()
        .chain(&ins)
        .map(|c| c.max_increment)
        .fold(0.0, f64::max);
    let cols = |v: &[CollisionState]| {
        columns(
            &v.iter()
                .map(|c| c.vector.amplitudes().clone())
                .collect::<Vec<_>>(),
        )
    };
    let (o, i, e) = (cols(&outs), cols(&ins), columns(&refs));
    let gram = adjoint(&o).dot(&o);
    let cond = condition_number(&gram);
    rep.param("out_gram_condition", cond);
    if cond > MAX_GRAM_CONDITION {
        return Err(Error::IllConditioned(format!(
            "out-state Gram condition {cond:.3e} exceeds {MAX_GRAM_CONDITION:.0e}; choose linearly independent sector vectors"
        )));
    }
    let ge = adjoint(&e).dot(&e);
    let coord = |m: &Array2<C64>| -> Result<Array2<C64>> {
        let em = adjoint(&e).dot(m);
        solve_right(&adjoint(&em), &ge).map(|x| adjoint(&x))
    };
    let (oc, ic) = (coord(&o)?, coord(&i)?);
    let extracted = solve_right(&ic, &oc)?;
    let sd = triple.smatrix_diagonal();
    let se: Array2<C64> = e.clone() * &sd.view().insert_axis(ndarray::Axis(1));
    let expected = coord(&se)?;
    let dev = max_abs(&(&extracted - &expected));
    let k = extracted.nrows();
    let unit = max_abs(&(adjoint(&extracted).dot(&extracted) - Array2::<C64>::eye(k)));
    let gn = max_abs(&ge).max(f64::MIN_POSITIVE);
    let iso = max_abs(&(&gram - &ge)).max(max_abs(&(adjoint(&i).dot(&i) - &ge))) / gn;
    let fact = (0..e.ncols())
        .map(|j| {
            let d: f64 = o
                .column(j)
                .iter()
                .zip(e.column(j))
                .map(|(a, b)| (a - b).norm_sqr())
                .sum();
            let n: f64 = e.column(j).iter().map(|x| x.norm_sqr()).sum();
            (d / n.max(f64::MIN_POSITIVE)).sqrt()
        })
        .fold(0.0, f64::max);
    let budget = composed_budget(resid, incr);
    rep.param("approximation_residual", resid);
    rep.param("max_increment", incr);
    rep.param("budget", budget);
    rep.defect("max_entry_deviation", dev, budget, BUDGET_ORIGIN);
    rep.defect("unitarity", unit, budget, BUDGET_ORIGIN);
    rep.defect("isometry", iso, budget, BUDGET_ORIGIN);
    rep.defect("out_factorization", fact, budget, BUDGET_ORIGIN);
    rep.log("strong-operator limits are replaced by Frobenius convergence on the truncation");
    Ok(Extraction {
        extracted,
        expected,
        report: rep,
    })
}

pub const BUDGET_ORIGIN: &str =
    "convergence budget: 1e-10 + 10 x (approximant residual + last Cauchy increment)";

/// `1e-10 + 10·(residual + increment)`, capped by nothing: a bad approximant shows up as a large budget in the report.
pub fn composed_budget(residual: f64, increment: f64) -> f64 {
    EXACT_BUDGET + 10.0 * (residual + increment)
}

/// `S Φ^out(x) S* = Φ^in(x)` on the generators, plus wedge recovery and `SΩ = Ω`.
pub fn verify_recovery_identities<T: WedgeTriple + ?Sized>(
    triple: &T,
    left_ops: &[FockOperator],
    right_ops: &[FockOperator],
    kernel: &SmoothingKernel,
) -> Result<CheckReport> {
    let basis = triple.basis().clone();
    let mut rep = CheckReport::new("recovery_identities")
        .with_grid_hash(basis.left().grid().hash())
        .with_truncation(basis.describe());
    rep.param("triple", triple.label());
    let s = triple.smatrix_diagonal();
    let (mut field, mut wedge, mut incr) = (0.0f64, 0.0f64, 0.0f64);
    let rel = |a: &TwoSidedOperator, b: &TwoSidedOperator| -> Result<f64> {
        Ok(a.distance(b)? / b.frobenius_norm().max(f64::MIN_POSITIVE))
    };
    for a in left_ops {
        let x = triple.wedge_left(a)?;
        let out = asymptotic_field(&x, Side::Wedge, Lightray::Plus, Direction::Out, kernel)?;
        let sx = x.conjugate_by_diagonal(s)?;
        let inn = asymptotic_field(&sx, Side::Commutant, Lightray::Plus, Direction::In, kernel)?;
        field = field.max(rel(&out.limit.conjugate_by_diagonal(s)?, &inn.limit)?);
        wedge = wedge.max(rel(&out.limit, &x)?);
        incr = incr.max(out.increments.last().copied().unwrap_or(0.0));
    }
    for b in right_ops {
        let y = triple.wedge_right(b)?;
        let inn = asymptotic_field(&y, Side::Wedge, Lightray::Minus, Direction::In, kernel)?;
        let ys = y.conjugate_by_diagonal(&s.mapv(|v| v.conj()))?;
        let out = asymptotic_field(
            &ys,
            Side::Commutant,
            Lightray::Minus,
            Direction::Out,
            kernel,
        )?;
        field = field.max(rel(&out.limit.conjugate_by_diagonal(s)?, &inn.limit)?);
        wedge = wedge.max(rel(&inn.limit, &y)?);
        incr = incr.max(inn.increments.last().copied().unwrap_or(0.0));
    }
    let budget = composed_budget(0.0, incr);
    rep.defect("field_recovery", field, budget, BUDGET_ORIGIN);
    rep.defect("wedge_recovery", wedge, budget, BUDGET_ORIGIN);
    rep.defect(
        "vacuum_invariance",
        (s[0] - ONE).norm(),
        0.0,
        "exact: empty-product convention",
    );
    Ok(rep)
}

/// `T(a)(ξ ×dir η)` against `(T_L ξ) ×dir (T_R η)` on sample translations.
pub fn verify_collision_covariance<T: WedgeTriple + ?Sized>(
    triple: &T,
    xi: &FockVector,
    eta: &FockVector,
    points: &[(f64, f64)],
    kernel: &SmoothingKernel,
    family: &ApproximantFamily,
) -> Result<CheckReport> {
    let basis = triple.basis().clone();
    let mut rep = CheckReport::new("collision_covariance")
        .with_grid_hash(basis.left().grid().hash())
        .with_truncation(basis.describe());
    let (mut worst, mut budget) = (0.0f64, EXACT_BUDGET);
    for dir in [Direction::In, Direction::Out] {
        let base = collision_state(xi, eta, dir, triple, kernel, family)?;
        for &(t0, t1) in points {
            let (tl, tr) = translation_factors(&basis, t0, t1);
            let d: Array1<C64> = basis
                .combine(tl.as_slice().unwrap(), tr.as_slice().unwrap(), |a, b| a * b)
                .into();
            let moved = base.vector.multiply_diagonal(&d);
            let xi_t = FockVector::new(xi.truncation().clone(), xi.amplitudes() * &tl)?;
            let eta_t = FockVector::new(eta.truncation().clone(), eta.amplitudes() * &tr)?;
            let other = collision_state(&xi_t, &eta_t, dir, triple, kernel, family)?;
            worst = worst
                .max(moved.distance(&other.vector) / base.vector.norm().max(f64::MIN_POSITIVE));
            budget = budget.max(composed_budget(
                base.approximation_residual
                    .max(other.approximation_residual),
                base.max_increment.max(other.max_increment),
            ));
        }
    }
    rep.defect("covariance", worst, budget, BUDGET_ORIGIN);
    Ok(rep)
}

/// Single-excitation sector vectors `|p_k⟩` of a truncation.
pub fn single_excitations(tr: &Arc<FockTruncation>) -> Vec<FockVector> {
    tr.layer(1)
        .map(|i| FockVector::basis(tr.clone(), i))
        .collect()
}
