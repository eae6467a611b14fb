//! Diagonal S-matrix twists on the two-sided occupation basis.

use std::f64::consts::PI;
use std::io::Write;
use std::sync::Arc;

use ndarray::Array1;
use num_complex::Complex64 as C64;
use serde::Serialize;
use serde_json::json;

use crate::error::{Error, Result};
use crate::fock::{FockOperator, FockTruncation, FockVector};
use crate::innerfun::{eval_boundary, InnerFunctionSpec};
use crate::onepspace::SINGULAR_CUTOFF_RATIO;
use crate::report::{sha256_hex, CheckReport};

const ONE: C64 = C64 { re: 1.0, im: 0.0 };

/// Product basis `|m-multiset⟩ ⊗ |n-multiset⟩`, index `i_L·d_R + i_R`.
#[derive(Debug)]
pub struct TwoSidedBasis {
    left: Arc<FockTruncation>,
    right: Arc<FockTruncation>,
}

impl TwoSidedBasis {
    pub fn new(left: Arc<FockTruncation>, right: Arc<FockTruncation>) -> Arc<Self> {
        Arc::new(Self { left, right })
    }

    /// Both factors on the same truncation.
    pub fn symmetric(tr: Arc<FockTruncation>) -> Arc<Self> {
        Self::new(tr.clone(), tr)
    }

    pub fn left(&self) -> &Arc<FockTruncation> {
        &self.left
    }
    pub fn right(&self) -> &Arc<FockTruncation> {
        &self.right
    }
    pub fn dim(&self) -> usize {
        self.left.dim() * self.right.dim()
    }
    pub fn index(&self, il: usize, ir: usize) -> usize {
        il * self.right.dim() + ir
    }
    pub fn split(&self, i: usize) -> (usize, usize) {
        (i / self.right.dim(), i % self.right.dim())
    }

    pub fn hash(&self) -> String {
        sha256_hex(format!("{}|{}", self.left.hash(), self.right.hash()).as_bytes())[..16]
            .to_string()
    }

    pub fn describe(&self) -> String {
        format!(
            "left[{}] x right[{}]",
            self.left.describe(),
            self.right.describe()
        )
    }

    /// Joint values `f(x_L) + g(x_R)` style tables: `out[i] = h(l[i_L], r[i_R])`.
    pub fn combine<T: Copy, U>(&self, l: &[T], r: &[T], h: impl Fn(T, T) -> U) -> Vec<U> {
        let mut out = Vec::with_capacity(self.dim());
        for &a in l {
            for &b in r {
                out.push(h(a, b));
            }
        }
        out
    }

    pub fn same(&self, other: &TwoSidedBasis) -> bool {
        *self.left == *other.left && *self.right == *other.right
    }
}

/// Vector on the two-sided basis.
#[derive(Clone, Debug)]
pub struct TwoSidedVector {
    basis: Arc<TwoSidedBasis>,
    amps: Array1<C64>,
}

impl TwoSidedVector {
    pub fn new(basis: Arc<TwoSidedBasis>, amps: Array1<C64>) -> Result<Self> {
        if amps.len() != basis.dim() {
            return Err(Error::Validation("two-sided vector length mismatch".into()));
        }
        Ok(Self { basis, amps })
    }

    pub fn vacuum(basis: Arc<TwoSidedBasis>) -> Self {
        let mut amps = Array1::from_elem(basis.dim(), C64::new(0.0, 0.0));
        amps[0] = ONE;
        Self { basis, amps }
    }

    pub fn tensor(basis: &Arc<TwoSidedBasis>, xi: &FockVector, eta: &FockVector) -> Result<Self> {
        if **xi.truncation() != **basis.left() || **eta.truncation() != **basis.right() {
            return Err(Error::TruncationMismatch);
        }
        let amps = basis.combine(
            xi.amplitudes().as_slice().unwrap(),
            eta.amplitudes().as_slice().unwrap(),
            |a, b| a * b,
        );
        Ok(Self {
            basis: basis.clone(),
            amps: Array1::from(amps),
        })
    }

    pub fn basis(&self) -> &Arc<TwoSidedBasis> {
        &self.basis
    }
    pub fn amplitudes(&self) -> &Array1<C64> {
        &self.amps
    }

    pub fn inner(&self, other: &Self) -> C64 {
        self.amps
            .iter()
            .zip(other.amps.iter())
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn distance(&self, other: &Self) -> f64 {
        self.amps
            .iter()
            .zip(other.amps.iter())
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    pub fn multiply_diagonal(&self, d: &Array1<C64>) -> Self {
        Self {
            basis: self.basis.clone(),
            amps: &self.amps * d,
        }
    }
}

/// Integer charge on one chiral factor, given per basis state.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Charge {
    pub values: Vec<i64>,
}

impl Charge {
    /// Reads an integer-spectrum diagonal operator; the vacuum must carry charge 0.
    pub fn from_operator(q: &FockOperator) -> Result<Self> {
        let values = integer_spectrum(q)?;
        if values[0] != 0 {
            return Err(Error::Validation(format!(
                "charge of the vacuum is {}; the twist would not fix Ω⊗Ω",
                values[0]
            )));
        }
        Ok(Self { values })
    }

    pub fn as_f64(&self) -> Vec<f64> {
        self.values.iter().map(|&v| v as f64).collect()
    }

    /// True if the charge is the particle number mod 2.
    pub fn is_parity_charge(&self, tr: &FockTruncation) -> bool {
        self.values
            .iter()
            .enumerate()
            .all(|(i, &v)| v == (tr.particle_number(i) % 2) as i64)
    }
}

/// Eigenvalues of a diagonal operator whose spectrum lies in the integers.
pub fn integer_spectrum(q: &FockOperator) -> Result<Vec<i64>> {
    let d = q
        .diagonal_values()
        .ok_or_else(|| Error::Validation("charge operator must be diagonal".into()))?;
    let mut values = Vec::with_capacity(d.len());
    for x in d.iter() {
        let r = x.re.round();
        if (x.re - r).abs() > 1e-9 || x.im.abs() > 1e-9 {
            return Err(Error::Validation(format!(
                "charge eigenvalue {x} is not an integer"
            )));
        }
        values.push(r as i64);
    }
    Ok(values)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "variant", rename_all = "snake_case")]
pub enum SMatrixVariant {
    Translation { kappa: f64 },
    InnerSymmetry { charge: Charge, kappa: f64 },
    Cyclic { charge: Charge, k: u32, n: u32 },
    InnerFunction { phi: InnerFunctionSpec },
}

impl SMatrixVariant {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Translation { .. } => "translation",
            Self::InnerSymmetry { .. } => "inner_symmetry",
            Self::Cyclic { .. } => "cyclic",
            Self::InnerFunction { .. } => "inner_function",
        }
    }
}

#[derive(Clone, Debug)]
pub struct SMatrixSpec {
    variant: SMatrixVariant,
    basis: Arc<TwoSidedBasis>,
    diagonal: Array1<C64>,
}

impl SMatrixSpec {
    pub fn variant(&self) -> &SMatrixVariant {
        &self.variant
    }
    pub fn basis(&self) -> &Arc<TwoSidedBasis> {
        &self.basis
    }
    pub fn diagonal(&self) -> &Array1<C64> {
        &self.diagonal
    }

    pub fn entry(&self, il: usize, ir: usize) -> C64 {
        self.diagonal[self.basis.index(il, ir)]
    }

    pub fn is_identity(&self) -> bool {
        self.diagonal.iter().all(|&x| x == ONE)
    }

    /// The one-particle function `φ` with `S = ⊕ ∏ φ(p_i q_j)`, when there is one.
    pub fn one_particle_function(&self) -> Option<InnerFunctionSpec> {
        match &self.variant {
            SMatrixVariant::Translation { kappa } => InnerFunctionSpec::translation(*kappa).ok(),
            SMatrixVariant::InnerFunction { phi } => Some(phi.clone()),
            SMatrixVariant::InnerSymmetry { charge, kappa } => {
                parity_phase(charge, *kappa, &self.basis)
            }
            SMatrixVariant::Cyclic { charge, k, n } => {
                parity_phase(charge, 2.0 * PI * *n as f64 / *k as f64, &self.basis)
            }
        }
    }

    pub fn apply(&self, v: &TwoSidedVector) -> TwoSidedVector {
        v.multiply_diagonal(&self.diagonal)
    }

    pub fn adjoint_diagonal(&self) -> Array1<C64> {
        self.diagonal.mapv(|x| x.conj())
    }

    /// JSON header accompanying the CSV export.
    pub fn header(&self) -> serde_json::Value {
        json!({
            "variant": self.variant,
            "grid_hash": self.basis.left().grid().hash(),
            "basis_hash": self.basis.hash(),
            "dim": self.basis.dim(),
        })
    }

    /// CSV with columns `basis_index,re,im`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        let io = |e: csv::Error| Error::Io(std::io::Error::other(e));
        wr.write_record(["basis_index", "re", "im"]).map_err(io)?;
        for (i, x) in self.diagonal.iter().enumerate() {
            wr.write_record([i.to_string(), x.re.to_string(), x.im.to_string()])
                .map_err(io)?;
        }
        wr.flush()?;
        Ok(())
    }
}

/// `e^{iκ P_o⊗P_o}` is `S_φ` for the constant `φ = e^{iκ}` when `κ ≡ 0, π`.
fn parity_phase(charge: &Charge, kappa: f64, basis: &TwoSidedBasis) -> Option<InnerFunctionSpec> {
    if !(charge.is_parity_charge(basis.left()) && charge.is_parity_charge(basis.right())) {
        return None;
    }
    let c = C64::from_polar(1.0, kappa);
    if (c - ONE).norm() < 1e-12 {
        Some(InnerFunctionSpec::identity())
    } else if (c + ONE).norm() < 1e-12 {
        InnerFunctionSpec::constant(-1.0).ok()
    } else {
        None
    }
}

/// `e^{iκ(Σp_i)(Σq_j)}`.
pub fn build_translation_smatrix(kappa: f64, basis: &Arc<TwoSidedBasis>) -> Result<SMatrixSpec> {
    if !(kappa >= 0.0 && kappa.is_finite()) {
        return Err(Error::Domain(format!(
            "translation twist needs kappa >= 0, got {kappa}"
        )));
    }
    let el = basis.left().energies();
    let er = basis.right().energies();
    let diagonal = basis.combine(&el, &er, |a, b| C64::from_polar(1.0, kappa * a * b));
    Ok(SMatrixSpec {
        variant: SMatrixVariant::Translation { kappa },
        basis: basis.clone(),
        diagonal: Array1::from(diagonal),
    })
}

fn charges(q: &FockOperator, basis: &TwoSidedBasis) -> Result<Charge> {
    if **q.truncation() != **basis.left() || **q.truncation() != **basis.right() {
        return Err(Error::Validation(
            "inner-symmetry twists need one charge on identical left and right truncations".into(),
        ));
    }
    Charge::from_operator(q)
}

fn charge_diagonal(charge: &Charge, kappa: f64, basis: &TwoSidedBasis) -> Array1<C64> {
    let q = &charge.values;
    Array1::from(basis.combine(q, q, |a, b| {
        let ab = a * b;
        if ab == 0 {
            ONE
        } else {
            C64::from_polar(1.0, kappa * ab as f64)
        }
    }))
}

/// `e^{iκ Q⊗Q}` for an integer-spectrum `Q` with `QΩ = 0`.
pub fn build_inner_symmetry_smatrix(
    q: &FockOperator,
    kappa: f64,
    basis: &Arc<TwoSidedBasis>,
) -> Result<SMatrixSpec> {
    let charge = charges(q, basis)?;
    let diagonal = charge_diagonal(&charge, kappa, basis);
    Ok(SMatrixSpec {
        variant: SMatrixVariant::InnerSymmetry { charge, kappa },
        basis: basis.clone(),
        diagonal,
    })
}

/// `e^{i(2πn/k) Q⊗Q}`.
pub fn build_cyclic_smatrix(
    q: &FockOperator,
    k: u32,
    n: u32,
    basis: &Arc<TwoSidedBasis>,
) -> Result<SMatrixSpec> {
    if k == 0 || n >= k {
        return Err(Error::Domain(format!(
            "need k >= 1 and 0 <= n < k, got k={k}, n={n}"
        )));
    }
    let charge = charges(q, basis)?;
    let diagonal = charge_diagonal(&charge, 2.0 * PI * n as f64 / k as f64, basis);
    Ok(SMatrixSpec {
        variant: SMatrixVariant::Cyclic { charge, k, n },
        basis: basis.clone(),
        diagonal,
    })
}

/// `∏_{i,j} φ(p_i q_j)`, with the empty product on either vacuum factor.
pub fn build_inner_function_smatrix(
    phi: &InnerFunctionSpec,
    basis: &Arc<TwoSidedBasis>,
) -> Result<SMatrixSpec> {
    phi.validate()?;
    let (l, r) = (basis.left(), basis.right());
    let cutoff = SINGULAR_CUTOFF_RATIO * l.grid().p_min().min(r.grid().p_min());
    let mut diagonal = Vec::with_capacity(basis.dim());
    for il in 0..l.dim() {
        let ps = l.momenta(il);
        for ir in 0..r.dim() {
            let mut v = ONE;
            for (i, &p) in ps.iter().enumerate() {
                for (j, &q) in r.momenta(ir).iter().enumerate() {
                    if phi.nu() > 0.0 && p * q < cutoff {
                        return Err(Error::Domain(format!(
                            "φ evaluated at p_{i}·q_{j} = {} below the singular cutoff (state {il}⊗{ir})",
                            p * q
                        )));
                    }
                    v *= eval_boundary(phi, p * q).map_err(|e| {
                        Error::Domain(format!("pair (i={i}, j={j}) of state {il}⊗{ir}: {e}"))
                    })?;
                }
            }
            diagonal.push(v);
        }
    }
    Ok(SMatrixSpec {
        variant: SMatrixVariant::InnerFunction { phi: phi.clone() },
        basis: basis.clone(),
        diagonal: Array1::from(diagonal),
    })
}

/// Unitarity, vacuum rows, translation commutation and the conjugation condition.
pub fn verify_smatrix_conditions(s: &SMatrixSpec, tol: f64) -> CheckReport {
    let basis = s.basis();
    let mut rep = CheckReport::new("smatrix_conditions")
        .with_grid_hash(basis.left().grid().hash())
        .with_truncation(basis.describe());
    rep.param("variant", s.variant().name());
    let unit = s
        .diagonal
        .iter()
        .map(|x| (x.norm() - 1.0).abs())
        .fold(0.0, f64::max);
    rep.defect("unitarity", unit, tol, "analytic: entries are unimodular");

    let mut vac = 0.0f64;
    for il in 0..basis.left().dim() {
        for ir in 0..basis.right().dim() {
            if il == 0 || ir == 0 {
                vac = vac.max((s.entry(il, ir) - ONE).norm());
            }
        }
    }
    rep.defect(
        "vacuum_sectors",
        vac,
        0.0,
        "exact: empty-product convention",
    );

    // Both S and the translations are diagonal; the commutator is evaluated
    // entrywise anyway so that a non-diagonal representation would show up.
    let el = basis.left().energies();
    let er = basis.right().energies();
    let t = 0.731;
    let mut comm = 0.0f64;
    for (i, x) in s.diagonal.iter().enumerate() {
        let (il, ir) = basis.split(i);
        let u = C64::from_polar(1.0, t * (el[il] + er[ir]));
        comm = comm.max((x * u - u * x).norm());
    }
    rep.defect(
        "translation_commutation",
        comm,
        0.0,
        "structural: diagonal operators commute",
    );

    // J^out as componentwise conjugation: J S J has entries conj(s), S* has conj(s).
    let jsj = s.diagonal.mapv(|x| x.conj());
    let adj = s.adjoint_diagonal();
    let conj = jsj
        .iter()
        .zip(adj.iter())
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max);
    rep.defect(
        "conjugation_condition",
        conj,
        0.0,
        "structural: diagonal model of J^out",
    );
    rep
}

/// Max deviation between `S_φ` and `∏_j` of left-side `Γ(φ(q_j P))` eigenvalues.
pub fn disintegration_defect(s: &SMatrixSpec, phi: &InnerFunctionSpec) -> Result<f64> {
    let basis = s.basis();
    let l = basis.left();
    let mut worst = 0.0f64;
    for ir in 0..basis.right().dim() {
        let qs = basis.right().momenta(ir);
        let fiber = crate::innerfun::scaled_product(phi, &qs)?;
        for il in 0..l.dim() {
            let mut v = ONE;
            for p in l.momenta(il) {
                v *= eval_boundary(&fiber, p)?;
            }
            worst = worst.max((v - s.entry(il, ir)).norm());
        }
    }
    Ok(worst)
}
