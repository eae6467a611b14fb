//! Warped convolution on the discrete joint spectrum.
//!
//! With lightcone momenta `(P_L, P_R)` the deformation is the finite sum
//! `x_κ = Σ_q Ad T(s(q)) x · E(q)` with `s(q) = (c κ q_R, -c κ q_L)` on the
//! two chiral factors. The pairing constant `c = -1/2` is the only one in
//! `{±1, ±1/2}` for which both anchor identities hold: the vacuum-column
//! identity `(x⊗1)_κ (ξ⊗Ω) = xξ⊗Ω` and the collision phases
//! `ξ ×out η = e^{-iκ/2 P⊗P}(ξ⊗η)`.

use std::collections::BTreeMap;
use std::sync::Arc;

use ndarray::{Array1, Array2};
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{weyl_operator, FockOperator, FockVector};
use crate::onepspace::{embed, TestFunctionSpec};
use crate::report::CheckReport;
use crate::scattering::{
    asymptotic_field, collision_state, composed_budget, ApproximantFamily, Direction, Lightray,
    Side, SmoothingKernel, BUDGET_ORIGIN,
};
use crate::smatrix::{TwoSidedBasis, TwoSidedVector};
use crate::twosided::{TwoSidedKind, TwoSidedOperator};
use crate::wedge::{full_leakage, BorchersTripleSpec, WedgeTriple};

/// Pairing between spacetime shifts and lightcone momenta.
pub const PAIRING: f64 = -0.5;
/// Largest two-sided dimension the projector oracle accepts.
pub const ORACLE_LIMIT: usize = 400;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WarpMatrix {
    pub kappa: f64,
}

impl WarpMatrix {
    pub fn new(kappa: f64) -> Result<Self> {
        if !(kappa >= 0.0 && kappa.is_finite()) {
            return Err(Error::Domain(format!(
                "warp parameter must be finite and >= 0, got {kappa}"
            )));
        }
        Ok(Self { kappa })
    }

    /// `Θ_κ = [[0, κ], [κ, 0]]`.
    pub fn matrix(&self) -> [[f64; 2]; 2] {
        [[0.0, self.kappa], [self.kappa, 0.0]]
    }

    /// The opposite warp `-Θ_κ`, used for the commutant.
    pub fn negated(&self) -> SignedWarp {
        SignedWarp {
            kappa: self.kappa,
            sign: -1.0,
        }
    }

    pub fn signed(&self) -> SignedWarp {
        SignedWarp {
            kappa: self.kappa,
            sign: 1.0,
        }
    }
}

/// `±Θ_κ`; the negative sign is not a valid [`WarpMatrix`] but deforms the commutant.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SignedWarp {
    pub kappa: f64,
    pub sign: f64,
}

impl SignedWarp {
    fn strength(&self, pairing: f64) -> f64 {
        self.sign * pairing * self.kappa
    }
}

fn phase(x: f64) -> C64 {
    C64::from_polar(1.0, x)
}

/// Entry phase of `((a,b),(a',b'))` for warp strength `w = c·(±κ)`.
fn entry_phase(
    w: f64,
    el: &[f64],
    er: &[f64],
    (a, b): (usize, usize),
    (ap, bp): (usize, usize),
) -> C64 {
    phase(w * (er[bp] * (el[a] - el[ap]) - el[ap] * (er[b] - er[bp])))
}

fn left_fiber_warp(a: &Array2<C64>, w: f64, el: &[f64], eb: f64) -> Array2<C64> {
    Array2::from_shape_fn(a.dim(), |(i, j)| {
        a[(i, j)] * phase(w * eb * (el[i] - el[j]))
    })
}

fn right_fiber_warp(b: &Array2<C64>, w: f64, er: &[f64], ea: f64) -> Array2<C64> {
    Array2::from_shape_fn(b.dim(), |(i, j)| {
        b[(i, j)] * phase(-w * ea * (er[i] - er[j]))
    })
}

/// `x_{±Θ_κ}` by the spectral finite sum, evaluated entrywise.
pub fn warped_convolution(x: &TwoSidedOperator, warp: SignedWarp) -> Result<TwoSidedOperator> {
    warped_convolution_with_pairing(x, warp, PAIRING)
}

/// Same as [`warped_convolution`] with an explicit pairing constant.
pub fn warped_convolution_with_pairing(
    x: &TwoSidedOperator,
    warp: SignedWarp,
    pairing: f64,
) -> Result<TwoSidedOperator> {
    let basis = x.basis();
    let w = warp.strength(pairing);
    if w == 0.0 {
        return Ok(x.clone());
    }
    let el = basis.left().energies();
    let er = basis.right().energies();
    let kind = match x.kind() {
        TwoSidedKind::Identity | TwoSidedKind::Diagonal(_) => return Ok(x.clone()),
        TwoSidedKind::Left(a) => TwoSidedKind::LeftFibered(
            er.par_iter()
                .map(|&eb| left_fiber_warp(a, w, &el, eb))
                .collect(),
        ),
        TwoSidedKind::LeftFibered(v) => TwoSidedKind::LeftFibered(
            v.par_iter()
                .zip(er.par_iter())
                .map(|(a, &eb)| left_fiber_warp(a, w, &el, eb))
                .collect(),
        ),
        TwoSidedKind::Right(b) => TwoSidedKind::RightFibered(
            el.par_iter()
                .map(|&ea| right_fiber_warp(b, w, &er, ea))
                .collect(),
        ),
        TwoSidedKind::RightFibered(v) => TwoSidedKind::RightFibered(
            v.par_iter()
                .zip(el.par_iter())
                .map(|(b, &ea)| right_fiber_warp(b, w, &er, ea))
                .collect(),
        ),
        TwoSidedKind::Dense(m) => TwoSidedKind::Dense(Array2::from_shape_fn(m.dim(), |(i, j)| {
            m[(i, j)] * entry_phase(w, &el, &er, basis.split(i), basis.split(j))
        })),
    };
    TwoSidedOperator::new(basis.clone(), kind)
}

/// Independent oracle: enumerates joint eigenvalues and sums `U(s_q) X U(s_q)* E(q)` densely.
pub fn warped_convolution_bruteforce(
    x: &TwoSidedOperator,
    warp: SignedWarp,
    pairing: f64,
) -> Result<Array2<C64>> {
    let basis = x.basis();
    let d = basis.dim();
    if d > ORACLE_LIMIT {
        return Err(Error::Unsupported(format!(
            "projector oracle limited to dimension {ORACLE_LIMIT}, got {d}"
        )));
    }
    let xd = x.to_dense()?;
    let el = basis.left().energies();
    let er = basis.right().energies();
    let joint: Vec<(f64, f64)> = (0..d)
        .map(|i| {
            let (a, b) = basis.split(i);
            (el[a], er[b])
        })
        .collect();
    let mut classes: BTreeMap<(u64, u64), Vec<usize>> = BTreeMap::new();
    for (i, (ql, qr)) in joint.iter().enumerate() {
        classes
            .entry((ql.to_bits(), qr.to_bits()))
            .or_default()
            .push(i);
    }
    let w = warp.strength(pairing);
    let terms: Vec<Array2<C64>> = classes
        .par_iter()
        .map(|(&(ql, qr), members)| {
            let (ql, qr) = (f64::from_bits(ql), f64::from_bits(qr));
            let (sl, sr) = (w * qr, -w * ql);
            let u = Array2::from_diag(&Array1::from_shape_fn(d, |i| {
                phase(sl * joint[i].0 + sr * joint[i].1)
            }));
            let mut proj = Array2::<C64>::zeros((d, d));
            for &i in members {
                proj[(i, i)] = C64::new(1.0, 0.0);
            }
            let ud = u.t().mapv(|z| z.conj());
            u.dot(&xd).dot(&ud).dot(&proj)
        })
        .collect();
    let mut acc = Array2::<C64>::zeros((d, d));
    for t in &terms {
        acc += t;
    }
    Ok(acc)
}

/// `e^{iλ P⊗P}` as a two-sided diagonal.
pub fn momentum_product_phase(basis: &TwoSidedBasis, lambda: f64) -> Array1<C64> {
    let el = basis.left().energies();
    let er = basis.right().energies();
    Array1::from(basis.combine(&el, &er, |a, b| phase(lambda * a * b)))
}

/// Wedge triple whose algebra is generated by warped operators.
#[derive(Clone, Debug)]
pub struct BlsTriple {
    basis: Arc<TwoSidedBasis>,
    warp: WarpMatrix,
    pairing: f64,
    smatrix: Array1<C64>,
}

impl BlsTriple {
    pub fn new(basis: &Arc<TwoSidedBasis>, warp: WarpMatrix) -> Self {
        Self::with_pairing(basis, warp, PAIRING)
    }

    pub fn with_pairing(basis: &Arc<TwoSidedBasis>, warp: WarpMatrix, pairing: f64) -> Self {
        let smatrix = momentum_product_phase(basis, -2.0 * pairing * warp.kappa);
        Self {
            basis: basis.clone(),
            warp,
            pairing,
            smatrix,
        }
    }

    pub fn warp(&self) -> WarpMatrix {
        self.warp
    }

    fn warped(&self, x: TwoSidedOperator, w: SignedWarp) -> Result<TwoSidedOperator> {
        warped_convolution_with_pairing(&x, w, self.pairing)
    }
}

impl WedgeTriple for BlsTriple {
    fn basis(&self) -> &Arc<TwoSidedBasis> {
        &self.basis
    }
    fn label(&self) -> String {
        format!("warped[kappa={}]", self.warp.kappa)
    }
    fn smatrix_diagonal(&self) -> &Array1<C64> {
        &self.smatrix
    }
    fn wedge_left(&self, x: &FockOperator) -> Result<TwoSidedOperator> {
        self.warped(TwoSidedOperator::left(&self.basis, x)?, self.warp.signed())
    }
    fn wedge_right(&self, y: &FockOperator) -> Result<TwoSidedOperator> {
        self.warped(TwoSidedOperator::right(&self.basis, y)?, self.warp.signed())
    }
    fn commutant_left(&self, x: &FockOperator) -> Result<TwoSidedOperator> {
        self.warped(TwoSidedOperator::left(&self.basis, x)?, self.warp.negated())
    }
    fn commutant_right(&self, y: &FockOperator) -> Result<TwoSidedOperator> {
        self.warped(
            TwoSidedOperator::right(&self.basis, y)?,
            self.warp.negated(),
        )
    }
}

fn translation_kappa(triple: &BorchersTripleSpec, kappa: f64) -> Result<()> {
    let expect = momentum_product_phase(triple.basis(), kappa);
    let dev = triple
        .smatrix_diagonal()
        .iter()
        .zip(expect.iter())
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max);
    if dev > 1e-12 {
        return Err(Error::Precondition(format!(
            "triple S-matrix is not e^(i kappa P⊗P) for kappa = {kappa} (deviation {dev:.3e})"
        )));
    }
    Ok(())
}

fn rel(a: &TwoSidedOperator, b: &TwoSidedOperator) -> Result<f64> {
    Ok(a.distance(b)? / b.frobenius_norm().max(f64::MIN_POSITIVE))
}

/// Warped generators against `Ad e^{-iκ/2 P⊗P}` of the twisted triple's generators.
///
/// `f` must lie in the left half-line; its mirror image supplies the right generator.
pub fn verify_coincidence(
    triple: &BorchersTripleSpec,
    f: &TestFunctionSpec,
    kappa: f64,
) -> Result<CheckReport> {
    let warp = WarpMatrix::new(kappa)?;
    translation_kappa(triple, kappa)?;
    f.validate()?;
    if !f.is_left_localized() {
        return Err(Error::Precondition(format!(
            "support {:?} is not in the left half-line",
            f.nominal_support()
        )));
    }
    let basis = triple.basis().clone();
    let mut rep = CheckReport::new("bls_coincidence")
        .with_grid_hash(basis.left().grid().hash())
        .with_truncation(basis.describe());
    rep.param("kappa", kappa);
    rep.param("test_function", f);
    let g = TestFunctionSpec {
        center: -f.center,
        ..f.clone()
    };
    let wf = weyl_operator(&embed(f, basis.left().grid())?, basis.left())?;
    let wg = weyl_operator(&embed(&g, basis.right().grid())?, basis.right())?;
    let v = momentum_product_phase(&basis, -0.5 * kappa);
    let bound = full_leakage(&wf).max(full_leakage(&wg)).max(1e-12);

    let xl = TwoSidedOperator::left(&basis, &wf)?;
    let warped_l = warped_convolution(&xl, warp.signed())?;
    let target_l = triple.wedge_left(&wf)?.conjugate_by_diagonal(&v)?;
    let warped_r = warped_convolution(&TwoSidedOperator::right(&basis, &wg)?, warp.signed())?;
    let target_r = triple.wedge_right(&wg)?.conjugate_by_diagonal(&v)?;
    let gen = rel(&warped_l, &target_l)?.max(rel(&warped_r, &target_r)?);
    rep.defect(
        "generator_identity",
        gen,
        bound,
        "Weyl truncation bound: leakage of the truncated Weyl operators",
    );

    let kernel = SmoothingKernel::default();
    let out = asymptotic_field(
        &warped_l,
        Side::Wedge,
        Lightray::Plus,
        Direction::Out,
        &kernel,
    )?;
    let inc = out.increments.last().copied().unwrap_or(0.0);
    rep.defect(
        "outgoing_field",
        rel(&out.limit, &target_l)?,
        bound.max(composed_budget(0.0, inc)),
        BUDGET_ORIGIN,
    );

    // Vacuum-sector columns: (x⊗1)_κ(ξ⊗Ω) = xξ⊗Ω.
    let dr = basis.right().dim();
    let mut col = 0.0f64;
    let xd = wf.to_dense();
    for a in 0..basis.left().dim() {
        let xi = FockVector::basis(basis.left().clone(), a);
        let v_in = TwoSidedVector::tensor(&basis, &xi, &FockVector::vacuum(basis.right().clone()))?;
        let got = warped_l.apply(&v_in)?;
        for (i, z) in got.amplitudes().iter().enumerate() {
            let (p, q) = (i / dr, i % dr);
            let want = if q == 0 {
                xd[(p, a)]
            } else {
                C64::new(0.0, 0.0)
            };
            col = col.max((z - want).norm());
        }
    }
    rep.defect(
        "vacuum_columns",
        col,
        0.0,
        "exact: right-factor eigenvalue 0 on the vacuum",
    );

    if basis.dim() <= ORACLE_LIMIT {
        let brute = warped_convolution_bruteforce(&xl, warp.signed(), PAIRING)?;
        let fast = warped_l.to_dense()?;
        let d = brute
            .iter()
            .zip(fast.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        rep.defect(
            "oracle_agreement",
            d,
            1e-12,
            "float accumulation over the joint spectrum",
        );
    }
    rep.log("algebra-level equality and the conditional-expectation step have no finite-dimensional counterpart");
    Ok(rep)
}

/// Collision states of the warped triple against `e^{∓iκ/2 P⊗P}(ξ⊗η)`.
pub fn verify_deformed_collision(
    triple: &BlsTriple,
    xi: &FockVector,
    eta: &FockVector,
    kernel: &SmoothingKernel,
    family: &ApproximantFamily,
) -> Result<CheckReport> {
    let basis = triple.basis().clone();
    let kappa = triple.warp().kappa;
    let mut rep = CheckReport::new("bls_deformed_collision")
        .with_grid_hash(basis.left().grid().hash())
        .with_truncation(basis.describe());
    rep.param("kappa", kappa);
    let prod = TwoSidedVector::tensor(&basis, xi, eta)?;
    let out = collision_state(xi, eta, Direction::Out, triple, kernel, family)?;
    let inn = collision_state(xi, eta, Direction::In, triple, kernel, family)?;
    let out_ref = prod.multiply_diagonal(&momentum_product_phase(&basis, -0.5 * kappa));
    let in_ref = prod.multiply_diagonal(&momentum_product_phase(&basis, 0.5 * kappa));
    let n = prod.norm().max(f64::MIN_POSITIVE);
    let budget = composed_budget(
        out.approximation_residual.max(inn.approximation_residual),
        out.max_increment.max(inn.max_increment),
    );
    rep.param(
        "approximation_residual",
        out.approximation_residual.max(inn.approximation_residual),
    );
    rep.defect(
        "out_state",
        out.vector.distance(&out_ref) / n,
        budget,
        BUDGET_ORIGIN,
    );
    rep.defect(
        "in_state",
        inn.vector.distance(&in_ref) / n,
        budget,
        BUDGET_ORIGIN,
    );
    let s_out = out.vector.multiply_diagonal(triple.smatrix_diagonal());
    rep.defect(
        "in_equals_s_out",
        s_out.distance(&inn.vector) / n,
        budget,
        BUDGET_ORIGIN,
    );
    Ok(rep)
}
