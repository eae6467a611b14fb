//! Twisted wedge algebras through their Weyl generators.
//!
//! `M_S` is represented by `W(f)⊗1` (f in the left half-line) and
//! `Ad S(1⊗W(g))` (g in the right half-line); the commutant side by
//! `Ad S(W(f')⊗1)` and `1⊗W(g')` with mirrored supports.

use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::sync::Arc;

use ndarray::{Array1, Array2};
use num_complex::Complex64 as C64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fock::{
    exp_i_diagonal, frob, weyl_leakage, weyl_operator, FockOperator, FockTruncation, FockVector,
    Repr,
};
use crate::innerfun::InnerFunctionSpec;
use crate::linalg::{columns, numerical_rank};
use crate::onepspace::{
    apply_inner_function, embed, symplectic_form, OneParticleVector, TestFunctionSpec,
    LOCALITY_SAFETY,
};
use crate::report::CheckReport;
use crate::smatrix::{
    integer_spectrum, SMatrixSpec, SMatrixVariant, TwoSidedBasis, TwoSidedVector,
};
use crate::twosided::{commutator_norm, Block, TwoSidedKind, TwoSidedOperator};

const ONE: C64 = C64 { re: 1.0, im: 0.0 };

/// Deterministic translation sample points.
pub const TRANSLATION_SAMPLES: [(f64, f64); 3] = [(1.0, 0.5), (2.0, 1.0), (0.5, 0.4)];

/// Relative float tolerance for identities that hold exactly in exact arithmetic.
pub const EXACT_TOL: f64 = 1e-12;

/// A pair of von Neumann algebras given by generator maps.
///
/// `wedge_*` produce elements of `M`, `commutant_*` elements of `M'`;
/// `*_left` take operators localized in the appropriate half-line of the
/// left chiral factor, `*_right` those of the right factor.
pub trait WedgeTriple: Sync {
    fn basis(&self) -> &Arc<TwoSidedBasis>;
    fn label(&self) -> String;
    /// Diagonal of the S-matrix on the two-sided basis.
    fn smatrix_diagonal(&self) -> &Array1<C64>;
    fn wedge_left(&self, x: &FockOperator) -> Result<TwoSidedOperator>;
    fn wedge_right(&self, y: &FockOperator) -> Result<TwoSidedOperator>;
    fn commutant_left(&self, x: &FockOperator) -> Result<TwoSidedOperator>;
    fn commutant_right(&self, y: &FockOperator) -> Result<TwoSidedOperator>;
}

#[derive(Clone, Debug)]
pub struct BorchersTripleSpec {
    smatrix: SMatrixSpec,
    left_generators: Vec<TestFunctionSpec>,
    right_generators: Vec<TestFunctionSpec>,
}

impl BorchersTripleSpec {
    pub fn new(
        smatrix: SMatrixSpec,
        left_generators: Vec<TestFunctionSpec>,
        right_generators: Vec<TestFunctionSpec>,
    ) -> Result<Self> {
        for f in &left_generators {
            require_left(f)?;
        }
        for g in &right_generators {
            require_right(g)?;
        }
        Ok(Self {
            smatrix,
            left_generators,
            right_generators,
        })
    }

    pub fn smatrix(&self) -> &SMatrixSpec {
        &self.smatrix
    }
    pub fn left_generators(&self) -> &[TestFunctionSpec] {
        &self.left_generators
    }
    pub fn right_generators(&self) -> &[TestFunctionSpec] {
        &self.right_generators
    }

    /// Diagonals of `T₀((t₀-t₁)/√2)` and `T₀((t₀+t₁)/√2)`.
    pub fn translation_factors(&self, t0: f64, t1: f64) -> (Array1<C64>, Array1<C64>) {
        translation_factors(self.basis(), t0, t1)
    }
}

pub fn translation_factors(basis: &TwoSidedBasis, t0: f64, t1: f64) -> (Array1<C64>, Array1<C64>) {
    let l = exp_i_diagonal(&basis.left().energies(), (t0 - t1) * FRAC_1_SQRT_2);
    let r = exp_i_diagonal(&basis.right().energies(), (t0 + t1) * FRAC_1_SQRT_2);
    (l, r)
}

/// `T(t₀,t₁)` on the two-sided basis.
pub fn translation(basis: &TwoSidedBasis, t0: f64, t1: f64) -> Array1<C64> {
    let (l, r) = translation_factors(basis, t0, t1);
    basis
        .combine(l.as_slice().unwrap(), r.as_slice().unwrap(), |a, b| a * b)
        .into()
}

/// Right wedge `t₁ > |t₀|`.
pub fn in_right_wedge(t0: f64, t1: f64) -> bool {
    t1 > t0.abs()
}

impl WedgeTriple for BorchersTripleSpec {
    fn basis(&self) -> &Arc<TwoSidedBasis> {
        self.smatrix.basis()
    }
    fn label(&self) -> String {
        format!("twisted[{}]", self.smatrix.variant().name())
    }
    fn smatrix_diagonal(&self) -> &Array1<C64> {
        self.smatrix.diagonal()
    }
    fn wedge_left(&self, x: &FockOperator) -> Result<TwoSidedOperator> {
        TwoSidedOperator::left(self.basis(), x)
    }
    fn wedge_right(&self, y: &FockOperator) -> Result<TwoSidedOperator> {
        TwoSidedOperator::right(self.basis(), y)?.conjugate_by_diagonal(self.smatrix.diagonal())
    }
    fn commutant_left(&self, x: &FockOperator) -> Result<TwoSidedOperator> {
        TwoSidedOperator::left(self.basis(), x)?.conjugate_by_diagonal(self.smatrix.diagonal())
    }
    fn commutant_right(&self, y: &FockOperator) -> Result<TwoSidedOperator> {
        TwoSidedOperator::right(self.basis(), y)
    }
}

fn require_left(f: &TestFunctionSpec) -> Result<()> {
    f.validate()?;
    if !f.is_left_localized() {
        return Err(Error::Precondition(format!(
            "support {:?} is not contained in the left half-line",
            f.nominal_support()
        )));
    }
    Ok(())
}

fn require_right(g: &TestFunctionSpec) -> Result<()> {
    g.validate()?;
    if !g.is_right_localized() {
        return Err(Error::Precondition(format!(
            "support {:?} is not contained in the right half-line",
            g.nominal_support()
        )));
    }
    Ok(())
}

fn weyl_on(f: &TestFunctionSpec, tr: &Arc<FockTruncation>) -> Result<FockOperator> {
    weyl_operator(&embed(f, tr.grid())?, tr)
}

/// `W(f)⊗1` mapped into `M`.
pub fn left_generator<T: WedgeTriple + ?Sized>(
    triple: &T,
    f: &TestFunctionSpec,
) -> Result<TwoSidedOperator> {
    require_left(f)?;
    triple.wedge_left(&weyl_on(f, triple.basis().left())?)
}

/// `1⊗W(g)` mapped into `M`; for twisted triples `Ad S(1⊗W(g))`.
pub fn twisted_right_generator<T: WedgeTriple + ?Sized>(
    triple: &T,
    g: &TestFunctionSpec,
) -> Result<TwoSidedOperator> {
    require_right(g)?;
    triple.wedge_right(&weyl_on(g, triple.basis().right())?)
}

/// Test function for a commutant generator.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum CommutantSource {
    /// `f'` in the right half-line, giving `Ad S(W(f')⊗1)`.
    Left(TestFunctionSpec),
    /// `g'` in the left half-line, giving `1⊗W(g')`.
    Right(TestFunctionSpec),
}

pub fn commutant_generator<T: WedgeTriple + ?Sized>(
    triple: &T,
    src: &CommutantSource,
) -> Result<TwoSidedOperator> {
    match src {
        CommutantSource::Left(f) => {
            require_right(f)?;
            triple.commutant_left(&weyl_on(f, triple.basis().left())?)
        }
        CommutantSource::Right(g) => {
            require_left(g)?;
            triple.commutant_right(&weyl_on(g, triple.basis().right())?)
        }
    }
}

/// `‖[a,b]‖_F / (‖a‖_F ‖b‖_F)`.
pub fn locality_defect(a: &TwoSidedOperator, b: &TwoSidedOperator) -> Result<f64> {
    locality_defect_block(a, b, Block::full(a.basis()))
}

/// Same ratio with everything compressed to a leading block.
pub fn locality_defect_block(
    a: &TwoSidedOperator,
    b: &TwoSidedOperator,
    blk: Block,
) -> Result<f64> {
    let c = commutator_norm(a, b, blk)?;
    let n = a.block_frobenius(blk) * b.block_frobenius(blk);
    Ok(if n > 0.0 { c / n } else { 0.0 })
}

/// Generator pair tested for wedge locality.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "pair", rename_all = "snake_case")]
pub enum LocalityPair {
    /// `W(f)⊗1` against `Ad S(W(f')⊗1)`.
    LeftVsCommutantLeft {
        f: TestFunctionSpec,
        fp: TestFunctionSpec,
    },
    /// `Ad S(1⊗W(g))` against `1⊗W(g')`.
    TwistedRightVsCommutantRight {
        g: TestFunctionSpec,
        gp: TestFunctionSpec,
    },
    /// `W(f)⊗1` against `1⊗W(g')`.
    LeftVsCommutantRight {
        f: TestFunctionSpec,
        gp: TestFunctionSpec,
    },
    /// `Ad S(1⊗W(g))` against `Ad S(W(f')⊗1)`.
    TwistedRightVsCommutantLeft {
        g: TestFunctionSpec,
        fp: TestFunctionSpec,
    },
}

impl LocalityPair {
    pub fn label(&self) -> &'static str {
        match self {
            Self::LeftVsCommutantLeft { .. } => "left_vs_commutant_left",
            Self::TwistedRightVsCommutantRight { .. } => "twisted_right_vs_commutant_right",
            Self::LeftVsCommutantRight { .. } => "left_vs_commutant_right",
            Self::TwistedRightVsCommutantLeft { .. } => "twisted_right_vs_commutant_left",
        }
    }
}

/// `sqrt(Σ_{cols N ≤ r} (1 - ‖col‖²))` for a compressed unitary.
fn leakage_dense(m: &Array2<C64>, cols: usize) -> f64 {
    (0..cols)
        .map(|j| (1.0 - m.column(j).iter().map(|x| x.norm_sqr()).sum::<f64>()).max(0.0))
        .sum::<f64>()
        .sqrt()
}

/// `∏_j φ(s_j p)` applied to a one-particle vector.
fn apply_scaled(
    phi: &InnerFunctionSpec,
    scales: &[f64],
    v: &OneParticleVector,
) -> Result<OneParticleVector> {
    let mut out = v.clone();
    for &s in scales {
        out = apply_inner_function(phi, s, &out)?;
    }
    Ok(out)
}

/// Fiberwise bound data for one of the two nontrivial pairs.
struct FiberBudget {
    full_sq: f64,
    block_sq: f64,
    max_sigma: f64,
}

/// Commutator bound for `Σ_fibers [W(u), W(v_k)]` with `σ_k = Im⟨u, v_k⟩`.
///
/// Full space: `min(1,L_u)L_v + min(1,L_v)L_u + 2|sin σ|√d` per fiber.
/// Leading block `N ≤ r`: `2|sin σ|√d_r + 2 L_r(u) L_r(v)`.
fn fiber_budget(
    u: &OneParticleVector,
    wu: &Array2<C64>,
    fibers: &[(OneParticleVector, usize)],
    tr: &Arc<FockTruncation>,
    r: usize,
    d_block: usize,
) -> Result<FiberBudget> {
    let d = tr.dim();
    let dr = tr.dim_up_to(r);
    let lu = leakage_dense(wu, d);
    let lu_r = leakage_dense(wu, dr);
    let (mut full_sq, mut block_sq, mut max_sigma) = (0.0, 0.0, 0.0f64);
    let mut cache: Option<(f64, f64)> = None;
    for (v, idx) in fibers {
        let sigma = symplectic_form(u, v)?;
        max_sigma = max_sigma.max(sigma.abs());
        // Fibers are unitary conjugates of one Weyl operator, so leakages agree.
        let (lv, lv_r) = match cache {
            Some(c) => c,
            None => {
                let wv = weyl_operator(v, tr)?.into_dense();
                *cache.insert((leakage_dense(&wv, d), leakage_dense(&wv, dr)))
            }
        };
        let s = 2.0 * sigma.sin().abs();
        let full = lu.min(1.0) * lv + lv.min(1.0) * lu + s * (d as f64).sqrt();
        full_sq += full * full;
        if *idx < d_block {
            let blk = s * (dr as f64).sqrt() + 2.0 * lu_r * lv_r;
            block_sq += blk * blk;
        }
    }
    Ok(FiberBudget {
        full_sq,
        block_sq,
        max_sigma,
    })
}

/// Block used for the reliable-sector defect: at most `n_max - 1` particles per side.
pub fn reliable_block(basis: &TwoSidedBasis) -> (usize, Block) {
    let r = basis
        .left()
        .n_max()
        .min(basis.right().n_max())
        .saturating_sub(1)
        .max(1);
    (r, Block::particles(basis, r))
}

/// Locality defect of a generator pair with its composed tolerance.
///
/// Reports the full truncated commutator and its restriction to states with
/// at most `n_max - 1` particles, where truncation leakage is second order.
pub fn locality_check(triple: &BorchersTripleSpec, pair: &LocalityPair) -> Result<CheckReport> {
    let basis = triple.basis().clone();
    let mut rep = CheckReport::new(format!("locality.{}", pair.label()))
        .with_grid_hash(basis.left().grid().hash())
        .with_truncation(basis.describe());
    rep.param("pair", pair);
    rep.param("smatrix", triple.smatrix().variant().name());
    let (r, blk) = reliable_block(&basis);
    rep.param("reliable_particles", r);
    let floor = 1e-14 * basis.left().dim().max(basis.right().dim()) as f64;

    let (a, b) = match pair {
        LocalityPair::LeftVsCommutantLeft { f, fp } => (
            left_generator(triple, f)?,
            commutant_generator(triple, &CommutantSource::Left(fp.clone()))?,
        ),
        LocalityPair::TwistedRightVsCommutantRight { g, gp } => (
            twisted_right_generator(triple, g)?,
            commutant_generator(triple, &CommutantSource::Right(gp.clone()))?,
        ),
        LocalityPair::LeftVsCommutantRight { f, gp } => (
            left_generator(triple, f)?,
            commutant_generator(triple, &CommutantSource::Right(gp.clone()))?,
        ),
        LocalityPair::TwistedRightVsCommutantLeft { g, fp } => (
            twisted_right_generator(triple, g)?,
            commutant_generator(triple, &CommutantSource::Left(fp.clone()))?,
        ),
    };
    let full = locality_defect(&a, &b)?;
    let block = locality_defect_block(&a, &b, blk)?;
    let norms = a.frobenius_norm() * b.frobenius_norm();
    let block_norms = a.block_frobenius(blk) * b.block_frobenius(blk);

    match pair {
        LocalityPair::LeftVsCommutantRight { .. } => {
            rep.defect("full", full, 0.0, "exact: disjoint tensor factors");
            rep.defect(
                "reliable_block",
                block,
                0.0,
                "exact: disjoint tensor factors",
            );
        }
        LocalityPair::TwistedRightVsCommutantLeft { .. } => {
            rep.defect(
                "full",
                full,
                EXACT_TOL,
                "float: Ad S of disjoint tensor factors",
            );
            rep.defect(
                "reliable_block",
                block,
                EXACT_TOL,
                "float: Ad S of disjoint tensor factors",
            );
        }
        LocalityPair::LeftVsCommutantLeft { f, fp } => {
            let phi = triple
                .smatrix()
                .one_particle_function()
                .ok_or_else(unsupported)?;
            let (tl, tr) = (basis.left(), basis.right());
            let u = embed(f, tl.grid())?;
            let v = embed(fp, tl.grid())?;
            let fibers: Vec<(OneParticleVector, usize)> = (0..tr.dim())
                .map(|q| Ok((apply_scaled(&phi, &tr.momenta(q), &v)?, q)))
                .collect::<Result<_>>()?;
            let wu = a.left_fiber(0).expect("left generator").into_owned();
            let fb = fiber_budget(&u, &wu, &fibers, tl, r, blk.right)?;
            push_budget(&mut rep, full, block, norms, block_norms, &fb, floor);
        }
        LocalityPair::TwistedRightVsCommutantRight { g, gp } => {
            let phi = triple
                .smatrix()
                .one_particle_function()
                .ok_or_else(unsupported)?;
            let (tl, tr) = (basis.left(), basis.right());
            let u = embed(gp, tr.grid())?;
            let v = embed(g, tr.grid())?;
            let fibers: Vec<(OneParticleVector, usize)> = (0..tl.dim())
                .map(|p| Ok((apply_scaled(&phi, &tl.momenta(p), &v)?, p)))
                .collect::<Result<_>>()?;
            let wu = b.right_fiber(0).expect("right generator").into_owned();
            let fb = fiber_budget(&u, &wu, &fibers, tr, r, blk.left)?;
            push_budget(&mut rep, full, block, norms, block_norms, &fb, floor);
        }
    }
    Ok(rep)
}

fn unsupported() -> Error {
    Error::Unsupported(
        "locality tolerance needs an S-matrix of the form ∏φ(p_i q_j) (translation, inner function, or the parity twist)"
            .into(),
    )
}

fn push_budget(
    rep: &mut CheckReport,
    full: f64,
    block: f64,
    norms: f64,
    block_norms: f64,
    fb: &FiberBudget,
    floor: f64,
) {
    rep.param("max_abs_sigma", fb.max_sigma);
    let tol_full = LOCALITY_SAFETY * fb.full_sq.sqrt() / norms + floor;
    let tol_block = LOCALITY_SAFETY * fb.block_sq.sqrt() / block_norms + floor;
    rep.defect(
        "full",
        full,
        tol_full,
        "composed: 10 x (Weyl leakage + 2|sin Im<f, phi g>| sqrt(d)) over fibers",
    );
    rep.defect(
        "reliable_block",
        block,
        tol_block,
        "composed: 10 x (2|sin Im<f, phi g>| sqrt(d_r) + 2 L_r L_r) over fibers",
    );
}

/// `Ad T(a)` of the generators against generators of translated test functions.
///
/// The identity is a matrix equality for any `a`; wedge inclusion is checked
/// separately on points of the right wedge.
pub fn verify_translation_covariance(
    triple: &BorchersTripleSpec,
    f: &TestFunctionSpec,
    g: &TestFunctionSpec,
    points: &[(f64, f64)],
) -> Result<CheckReport> {
    let basis = triple.basis().clone();
    let mut rep = CheckReport::new("translation_covariance")
        .with_grid_hash(basis.left().grid().hash())
        .with_truncation(basis.describe());
    rep.param("points", points);
    let x = left_generator(triple, f)?;
    let y = twisted_right_generator(triple, g)?;
    let (xn, yn) = (x.frobenius_norm(), y.frobenius_norm());
    let (mut dx, mut dy) = (0.0f64, 0.0f64);
    let mut vacuum = 0.0f64;
    for &(t0, t1) in points {
        let (tl, tr) = translation_factors(&basis, t0, t1);
        vacuum = vacuum.max((tl[0] * tr[0] - ONE).norm());
        let sl = (t0 - t1) * FRAC_1_SQRT_2;
        let sr = (t0 + t1) * FRAC_1_SQRT_2;
        let lhs = x.conjugate_by_product(&tl, &tr);
        let rhs = triple.wedge_left(&weyl_on(&f.translated(sl), basis.left())?)?;
        dx = dx.max(lhs.distance(&rhs)? / xn);
        let lhs = y.conjugate_by_product(&tl, &tr);
        let rhs = triple.wedge_right(&weyl_on(&g.translated(sr), basis.right())?)?;
        dy = dy.max(lhs.distance(&rhs)? / yn);
    }
    rep.defect(
        "left_generator",
        dx,
        EXACT_TOL,
        "exact: diagonal translations and Weyl covariance",
    );
    rep.defect(
        "twisted_right_generator",
        dy,
        EXACT_TOL,
        "exact: S commutes with T",
    );
    rep.defect("vacuum_fixed", vacuum, 0.0, "exact: zero vacuum energy");
    Ok(rep)
}

/// Counts wedge points whose translation moves a generator out of its half-line.
pub fn wedge_inclusion_violations(
    f: &TestFunctionSpec,
    g: &TestFunctionSpec,
    points: &[(f64, f64)],
) -> usize {
    points
        .iter()
        .filter(|&&(t0, t1)| in_right_wedge(t0, t1))
        .filter(|&&(t0, t1)| {
            !(f.translated((t0 - t1) * FRAC_1_SQRT_2).is_left_localized()
                && g.translated((t0 + t1) * FRAC_1_SQRT_2).is_right_localized())
        })
        .count()
}

/// Numerical ranks of `{a b Ω}` for the twisted and the untwisted generator families.
pub fn cyclicity_witness(triple: &BorchersTripleSpec, rel_tol: f64) -> Result<(usize, usize)> {
    let basis = triple.basis().clone();
    let vac = TwoSidedVector::vacuum(basis.clone());
    let plain = BorchersTripleSpec::new(
        crate::smatrix::build_inner_function_smatrix(&InnerFunctionSpec::identity(), &basis)?,
        triple.left_generators.clone(),
        triple.right_generators.clone(),
    )?;
    let family = |t: &BorchersTripleSpec| -> Result<usize> {
        let mut cols = Vec::new();
        for g in &t.right_generators {
            let b = twisted_right_generator(t, g)?.apply(&vac)?;
            cols.push(b.amplitudes().clone());
            for f in &t.left_generators {
                let a = left_generator(t, f)?;
                cols.push(a.apply(&b)?.amplitudes().clone());
            }
        }
        for f in &t.left_generators {
            cols.push(left_generator(t, f)?.apply(&vac)?.amplitudes().clone());
        }
        Ok(numerical_rank(&columns(&cols), rel_tol))
    };
    Ok((family(triple)?, family(&plain)?))
}

fn charge_of(q: &FockOperator) -> Result<Vec<i64>> {
    integer_spectrum(q)
}

fn dense_of(x: &FockOperator) -> Array2<C64> {
    x.to_dense()
}

/// `x_n = (1/k) Σ_j e^{-2πinj/k} Ad(e^{2πijQ/k})(x)`.
pub fn fourier_component(
    x: &FockOperator,
    q: &FockOperator,
    k: u32,
    n: u32,
) -> Result<FockOperator> {
    if k == 0 || n >= k {
        return Err(Error::Domain(format!(
            "need k >= 1 and n < k, got k={k}, n={n}"
        )));
    }
    let qs: Vec<f64> = charge_of(q)?.iter().map(|&v| v as f64).collect();
    let m = dense_of(x);
    let mut acc = Array2::from_elem(m.dim(), C64::new(0.0, 0.0));
    for j in 0..k {
        let theta = 2.0 * PI * j as f64 / k as f64;
        let u = exp_i_diagonal(&qs, theta);
        let w = C64::from_polar(1.0 / k as f64, -theta * n as f64);
        acc = acc + crate::fock::conjugate_dense_by_diagonal(&m, &u) * w;
    }
    FockOperator::dense(x.truncation().clone(), acc)
}

/// Entries of `x` with charge transfer `Q_i - Q_j = m`.
pub fn u1_component(x: &FockOperator, q: &FockOperator, m: i64) -> Result<FockOperator> {
    let qs = charge_of(q)?;
    let mut d = dense_of(x);
    d.indexed_iter_mut().for_each(|((i, j), v)| {
        if qs[i] - qs[j] != m {
            *v = C64::new(0.0, 0.0);
        }
    });
    FockOperator::dense(x.truncation().clone(), d)
}

/// `‖Ad(e^{iθQ})(x) - e^{iθm} x‖_F / ‖x‖_F`.
pub fn eigen_relation_defect(
    x: &FockOperator,
    q: &FockOperator,
    theta: f64,
    m: f64,
) -> Result<f64> {
    let qs: Vec<f64> = charge_of(q)?.iter().map(|&v| v as f64).collect();
    let d = dense_of(x);
    let lhs = crate::fock::conjugate_dense_by_diagonal(&d, &exp_i_diagonal(&qs, theta));
    let n = frob(&d);
    Ok(if n > 0.0 {
        frob(&(lhs - &d * C64::from_polar(1.0, theta * m))) / n
    } else {
        0.0
    })
}

/// Two-sided component `z_{m,n}` under `Ad(e^{2πijQ/k} ⊗ e^{2πilQ/k})`.
pub fn fourier_component_two_sided(
    z: &TwoSidedOperator,
    q: &FockOperator,
    k: u32,
    m: u32,
    n: u32,
) -> Result<TwoSidedOperator> {
    if k == 0 || m >= k || n >= k {
        return Err(Error::Domain(format!(
            "need k >= 1 and m, n < k, got k={k}, m={m}, n={n}"
        )));
    }
    let qs: Vec<f64> = charge_of(q)?.iter().map(|&v| v as f64).collect();
    let mut acc: Option<TwoSidedOperator> = None;
    let kk = (k * k) as f64;
    for j in 0..k {
        let uj = exp_i_diagonal(&qs, 2.0 * PI * j as f64 / k as f64);
        for l in 0..k {
            let ul = exp_i_diagonal(&qs, 2.0 * PI * l as f64 / k as f64);
            let w = C64::from_polar(1.0 / kk, -2.0 * PI * (m * j + n * l) as f64 / k as f64);
            let term = z.conjugate_by_product(&uj, &ul);
            acc = Some(match acc {
                None => term.scale(w),
                Some(a) => a.axpy(w, &term)?,
            });
        }
    }
    Ok(acc.expect("k >= 1"))
}

/// Checks `Ad e^{iκQ⊗Q}(x_m⊗1) = x_m ⊗ e^{imκQ}`.
pub fn verify_adjoint_action(
    x_m: &FockOperator,
    m: i64,
    q: &FockOperator,
    kappa: f64,
    basis: &Arc<TwoSidedBasis>,
) -> Result<CheckReport> {
    let mut rep = CheckReport::new("adjoint_action")
        .with_grid_hash(basis.left().grid().hash())
        .with_truncation(basis.describe());
    rep.param("m", m);
    rep.param("kappa", kappa);
    let qs = charge_of(q)?;
    if **q.truncation() != **basis.left() || **q.truncation() != **basis.right() {
        return Err(Error::TruncationMismatch);
    }
    let pre = eigen_relation_defect(x_m, q, kappa, m as f64)?;
    rep.defect(
        "precondition.eigen_relation",
        pre,
        1e-10,
        "declared: genuine m-component",
    );
    let diag: Array1<C64> = basis
        .combine(&qs, &qs, |a, b| {
            if a * b == 0 {
                ONE
            } else {
                C64::from_polar(1.0, kappa * (a * b) as f64)
            }
        })
        .into();
    let lhs = TwoSidedOperator::left(basis, x_m)?.conjugate_by_diagonal(&diag)?;
    let xm = x_m.to_dense();
    let rhs = TwoSidedOperator::new(
        basis.clone(),
        TwoSidedKind::LeftFibered(
            qs.iter()
                .map(|&c| &xm * C64::from_polar(1.0, kappa * (m * c) as f64))
                .collect(),
        ),
    )?;
    let n = lhs.frobenius_norm();
    let d = lhs.distance(&rhs)?;
    rep.defect(
        "matrix_equality",
        if n > 0.0 { d / n } else { d },
        EXACT_TOL,
        "exact: diagonal conjugation of a charge-m operator",
    );
    Ok(rep)
}

/// Generator-level witness of the fixed-point structure for cyclic twists.
///
/// Components `z_{m,n}` with `n_S·m ≢ 0` or `n_S·n ≢ 0 (mod k)` must vanish;
/// these are exactly the components whose phase `e^{inκQ}⊗e^{-imκQ}` is not
/// a scalar. With a commutant-side candidate `z'`, every component is compared.
pub fn verify_fixed_point_criterion(
    z: &TwoSidedOperator,
    triple: &BorchersTripleSpec,
    offsets: (f64, f64),
    candidate: Option<&TwoSidedOperator>,
) -> Result<CheckReport> {
    let (t_plus, t_minus) = offsets;
    if !(t_plus < 0.0 && t_minus > 0.0) {
        return Err(Error::Validation(format!(
            "need t+ < 0 < t-, got ({t_plus}, {t_minus})"
        )));
    }
    let (charge, k, ns) = match triple.smatrix().variant() {
        SMatrixVariant::Cyclic { charge, k, n } => (charge.clone(), *k, *n),
        v => {
            return Err(Error::Unsupported(format!(
                "fixed-point witness needs a cyclic twist, got {}",
                v.name()
            )))
        }
    };
    let basis = triple.basis();
    let tr = basis.left();
    let qop = FockOperator::diagonal(
        tr.clone(),
        charge
            .values
            .iter()
            .map(|&v| C64::new(v as f64, 0.0))
            .collect(),
    )?;
    let mut rep = CheckReport::new("fixed_point_criterion")
        .with_grid_hash(tr.grid().hash())
        .with_truncation(basis.describe());
    rep.param("k", k);
    rep.param("n", ns);
    rep.param("offsets", [t_plus, t_minus]);
    let kappa = 2.0 * PI * ns as f64 / k as f64;
    let zn = z.frobenius_norm().max(f64::MIN_POSITIVE);
    let mut forbidden_sq = 0.0;
    let mut mismatch_sq = 0.0;
    let mut rule_violations = 0usize;
    let mut recon: Option<TwoSidedOperator> = None;
    let mut norms = std::collections::BTreeMap::new();
    let qf = charge.as_f64();
    for m in 0..k {
        for n in 0..k {
            let c = fourier_component_two_sided(z, &qop, k, m, n)?;
            let cn = c.frobenius_norm();
            norms.insert(format!("{m},{n}"), cn);
            let allowed = (ns * m) % k == 0 && (ns * n) % k == 0;
            let left_phase = exp_i_diagonal(&qf, n as f64 * kappa);
            let right_phase = exp_i_diagonal(&qf, -(m as f64) * kappa);
            let scalar = is_scalar(&left_phase) && is_scalar(&right_phase);
            if allowed != scalar {
                rule_violations += 1;
            }
            if !allowed {
                forbidden_sq += cn * cn;
                if cn > EXACT_TOL * zn {
                    rep.log(format!("component ({m},{n}) has norm {cn:.3e}"));
                }
            }
            if let Some(zp) = candidate {
                let cp = fourier_component_two_sided(zp, &qop, k, m, n)?;
                mismatch_sq += c.distance(&cp)?.powi(2);
            }
            recon = Some(match recon {
                None => c,
                Some(r) => r.axpy(ONE, &c)?,
            });
        }
    }
    rep.param("component_norms", &norms);
    let recon_err = recon.expect("k >= 1").distance(z)? / zn;
    rep.defect(
        "reconstruction",
        recon_err,
        EXACT_TOL,
        "exact: discrete Fourier partition of unity",
    );
    rep.defect(
        "phase_rule",
        rule_violations as f64,
        0.0,
        "exact: allowed components have scalar phases",
    );
    rep.defect(
        "forbidden_components",
        forbidden_sq.sqrt() / zn,
        EXACT_TOL,
        "exact: fixed-point components only",
    );
    if candidate.is_some() {
        rep.defect(
            "phase_matching",
            mismatch_sq.sqrt() / zn,
            EXACT_TOL,
            "exact: componentwise equality",
        );
    }
    Ok(rep)
}

fn is_scalar(d: &Array1<C64>) -> bool {
    d.iter().all(|x| (x - d[0]).norm() <= 1e-12)
}

/// Vectors in the left factor built from a Weyl operator applied to the vacuum.
pub fn weyl_vacuum_vector(f: &TestFunctionSpec, tr: &Arc<FockTruncation>) -> Result<FockVector> {
    weyl_on(f, tr)?.apply(&FockVector::vacuum(tr.clone()))
}

/// Per-fiber twisted Weyl operator `W(∏_j φ(s_j ·) f)` built directly.
pub fn disintegrated_weyl(
    phi: &InnerFunctionSpec,
    scales: &[f64],
    f: &TestFunctionSpec,
    tr: &Arc<FockTruncation>,
) -> Result<Array2<C64>> {
    let v = apply_scaled(phi, scales, &embed(f, tr.grid())?)?;
    Ok(weyl_operator(&v, tr)?.into_dense())
}

/// Leakage of a one-sided Weyl operator over all its columns.
pub fn full_leakage(w: &FockOperator) -> f64 {
    match w.repr() {
        Repr::Dense(_) => weyl_leakage(w, w.truncation().n_max()),
        _ => 0.0,
    }
}
