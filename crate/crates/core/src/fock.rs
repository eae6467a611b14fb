//! Truncated symmetric Fock space over a momentum grid.
//!
//! Basis states are multisets of grid indices with at most `n_max` elements,
//! ordered by particle number and then lexicographically. A state with
//! occupations `n_k` is the normalized vector `∏_k (a_k^†)^{n_k}/√(n_k!) Ω`,
//! where `a_k` annihilates the orthonormal mode `e_k/√w_k`.

use std::collections::HashMap;
use std::sync::Arc;

use itertools::Itertools;
use ndarray::{Array1, Array2, Axis};
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::onepspace::{MomentumGrid, OneParticleVector};
use crate::report::sha256_hex;

/// Largest truncation dimension the enumeration accepts.
pub const MAX_DIM: usize = 4_000_000;

/// Coherent vectors and Weyl operators refuse `‖ξ‖²` above this.
pub const NORM_SQ_GUARD: f64 = 200.0;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
const ONE: C64 = C64 { re: 1.0, im: 0.0 };

#[derive(Debug)]
pub struct FockTruncation {
    grid: Arc<MomentumGrid>,
    n_max: usize,
    states: Vec<Vec<u16>>,
    /// `(mode, occupation)` pairs, modes increasing.
    occupations: Vec<Vec<(u16, u8)>>,
    index: HashMap<Vec<u16>, usize>,
    layer_start: Vec<usize>,
}

impl PartialEq for FockTruncation {
    fn eq(&self, other: &Self) -> bool {
        self.n_max == other.n_max
            && (Arc::ptr_eq(&self.grid, &other.grid) || self.grid == other.grid)
    }
}

pub fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1usize, |acc, i| acc * (n - i) / (i + 1))
}

/// `Σ_{n ≤ n_max} C(m + n - 1, n)`.
pub fn truncation_dim(m: usize, n_max: usize) -> usize {
    (0..=n_max)
        .map(|n| {
            if m == 0 {
                usize::from(n == 0)
            } else {
                binomial(m + n - 1, n)
            }
        })
        .sum()
}

impl FockTruncation {
    pub fn new(grid: Arc<MomentumGrid>, n_max: usize) -> Result<Arc<Self>> {
        let m = grid.len();
        if m > u16::MAX as usize || n_max > u8::MAX as usize {
            return Err(Error::Validation(
                "grid or particle number too large".into(),
            ));
        }
        let dim = truncation_dim(m, n_max);
        if dim > MAX_DIM {
            return Err(Error::Validation(format!(
                "truncation dimension {dim} exceeds {MAX_DIM}"
            )));
        }
        let mut states = Vec::with_capacity(dim);
        let mut layer_start = Vec::with_capacity(n_max + 2);
        for n in 0..=n_max {
            layer_start.push(states.len());
            if n == 0 {
                states.push(Vec::new());
            } else {
                states.extend((0..m as u16).combinations_with_replacement(n));
            }
        }
        layer_start.push(states.len());
        let occupations = states
            .iter()
            .map(|s| {
                s.iter()
                    .dedup_with_count()
                    .map(|(c, &k)| (k, c as u8))
                    .collect()
            })
            .collect();
        let index = states
            .iter()
            .enumerate()
            .map(|(i, s)| (s.clone(), i))
            .collect();
        Ok(Arc::new(Self {
            grid,
            n_max,
            states,
            occupations,
            index,
            layer_start,
        }))
    }

    pub fn grid(&self) -> &Arc<MomentumGrid> {
        &self.grid
    }
    pub fn n_max(&self) -> usize {
        self.n_max
    }
    pub fn dim(&self) -> usize {
        self.states.len()
    }
    pub fn modes(&self) -> usize {
        self.grid.len()
    }

    /// Sorted grid indices of basis state `i`.
    pub fn state(&self, i: usize) -> &[u16] {
        &self.states[i]
    }

    pub fn occupation(&self, i: usize) -> &[(u16, u8)] {
        &self.occupations[i]
    }

    pub fn particle_number(&self, i: usize) -> usize {
        self.states[i].len()
    }

    pub fn index_of(&self, multiset: &[u16]) -> Option<usize> {
        let mut key = multiset.to_vec();
        key.sort_unstable();
        self.index.get(&key).copied()
    }

    /// Index range of the `n`-particle layer.
    pub fn layer(&self, n: usize) -> std::ops::Range<usize> {
        self.layer_start[n]..self.layer_start[n + 1]
    }

    /// Number of basis states with at most `n` particles.
    pub fn dim_up_to(&self, n: usize) -> usize {
        self.layer_start[n.min(self.n_max) + 1]
    }

    /// Momenta of state `i`.
    pub fn momenta(&self, i: usize) -> Vec<f64> {
        self.states[i]
            .iter()
            .map(|&k| self.grid.points()[k as usize])
            .collect()
    }

    /// Total momentum of each basis state.
    pub fn energies(&self) -> Vec<f64> {
        (0..self.dim())
            .map(|i| self.momenta(i).iter().sum())
            .collect()
    }

    pub fn hash(&self) -> String {
        let mut text = format!("{}|{}|", self.grid.hash(), self.n_max);
        text.push_str(&self.states.iter().map(|s| s.iter().join(",")).join(";"));
        sha256_hex(text.as_bytes())[..16].to_string()
    }

    pub fn describe(&self) -> String {
        format!("M={},n_max={},dim={}", self.modes(), self.n_max, self.dim())
    }

    fn same(self: &Arc<Self>, other: &Arc<Self>) -> bool {
        Arc::ptr_eq(self, other) || **self == **other
    }
}

#[derive(Clone, Debug)]
pub struct FockVector {
    tr: Arc<FockTruncation>,
    amps: Array1<C64>,
}

impl FockVector {
    pub fn new(tr: Arc<FockTruncation>, amps: Array1<C64>) -> Result<Self> {
        if amps.len() != tr.dim() {
            return Err(Error::Validation(format!(
                "vector length {} != dim {}",
                amps.len(),
                tr.dim()
            )));
        }
        if amps.iter().any(|a| !(a.re.is_finite() && a.im.is_finite())) {
            return Err(Error::Validation("non-finite amplitude".into()));
        }
        Ok(Self { tr, amps })
    }

    pub fn zero(tr: Arc<FockTruncation>) -> Self {
        let n = tr.dim();
        Self {
            tr,
            amps: Array1::from_elem(n, ZERO),
        }
    }

    pub fn vacuum(tr: Arc<FockTruncation>) -> Self {
        Self::basis(tr, 0)
    }

    pub fn basis(tr: Arc<FockTruncation>, i: usize) -> Self {
        let mut v = Self::zero(tr);
        v.amps[i] = ONE;
        v
    }

    pub fn truncation(&self) -> &Arc<FockTruncation> {
        &self.tr
    }
    pub fn amplitudes(&self) -> &Array1<C64> {
        &self.amps
    }
    pub fn into_amplitudes(self) -> Array1<C64> {
        self.amps
    }

    pub fn inner(&self, other: &Self) -> Result<C64> {
        if !self.tr.same(&other.tr) {
            return Err(Error::TruncationMismatch);
        }
        Ok(self
            .amps
            .iter()
            .zip(other.amps.iter())
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn scale(&self, s: C64) -> Self {
        Self {
            tr: self.tr.clone(),
            amps: &self.amps * s,
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if !self.tr.same(&other.tr) {
            return Err(Error::TruncationMismatch);
        }
        Ok(Self {
            tr: self.tr.clone(),
            amps: &self.amps + &other.amps,
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scale(-ONE))
    }
}

/// Operator storage; the tag always matches the data.
#[derive(Clone, Debug)]
pub enum Repr {
    Diagonal(Array1<C64>),
    Sparse(Vec<(usize, usize, C64)>),
    Dense(Array2<C64>),
}

#[derive(Clone, Debug)]
pub struct FockOperator {
    tr: Arc<FockTruncation>,
    repr: Repr,
}

/// Serialized operator: representation tag plus flat data in basis order.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct OperatorDoc {
    pub representation: String,
    pub dim: usize,
    /// Diagonal: `[re, im]` per state. Dense: row-major `[re, im]`.
    #[serde(default)]
    pub values: Vec<[f64; 2]>,
    /// Sparse: `[row, col, re, im]`.
    #[serde(default)]
    pub triplets: Vec<(usize, usize, f64, f64)>,
}

impl FockOperator {
    pub fn new(tr: Arc<FockTruncation>, repr: Repr) -> Result<Self> {
        let d = tr.dim();
        match &repr {
            Repr::Diagonal(v) if v.len() != d => {
                return Err(Error::Validation(format!(
                    "diagonal length {} != dim {d}",
                    v.len()
                )))
            }
            Repr::Sparse(t) if t.iter().any(|&(i, j, _)| i >= d || j >= d) => {
                return Err(Error::Validation("sparse index out of range".into()))
            }
            Repr::Dense(m) if m.dim() != (d, d) => {
                return Err(Error::Validation(format!(
                    "dense shape {:?} != ({d}, {d})",
                    m.dim()
                )))
            }
            _ => {}
        }
        Ok(Self { tr, repr })
    }

    pub fn identity(tr: Arc<FockTruncation>) -> Self {
        let d = tr.dim();
        Self {
            tr,
            repr: Repr::Diagonal(Array1::from_elem(d, ONE)),
        }
    }

    pub fn diagonal(tr: Arc<FockTruncation>, values: Array1<C64>) -> Result<Self> {
        Self::new(tr, Repr::Diagonal(values))
    }

    pub fn dense(tr: Arc<FockTruncation>, m: Array2<C64>) -> Result<Self> {
        Self::new(tr, Repr::Dense(m))
    }

    pub fn truncation(&self) -> &Arc<FockTruncation> {
        &self.tr
    }
    pub fn repr(&self) -> &Repr {
        &self.repr
    }
    pub fn dim(&self) -> usize {
        self.tr.dim()
    }

    pub fn diagonal_values(&self) -> Option<&Array1<C64>> {
        match &self.repr {
            Repr::Diagonal(v) => Some(v),
            _ => None,
        }
    }

    pub fn to_dense(&self) -> Array2<C64> {
        let d = self.dim();
        match &self.repr {
            Repr::Dense(m) => m.clone(),
            Repr::Diagonal(v) => Array2::from_diag(v),
            Repr::Sparse(t) => {
                let mut m = Array2::from_elem((d, d), ZERO);
                for &(i, j, v) in t {
                    m[(i, j)] += v;
                }
                m
            }
        }
    }

    pub fn into_dense(self) -> Array2<C64> {
        match self.repr {
            Repr::Dense(m) => m,
            _ => self.to_dense(),
        }
    }

    pub fn apply(&self, v: &FockVector) -> Result<FockVector> {
        if !self.tr.same(&v.tr) {
            return Err(Error::TruncationMismatch);
        }
        let amps = match &self.repr {
            Repr::Diagonal(d) => d * &v.amps,
            Repr::Dense(m) => m.dot(&v.amps),
            Repr::Sparse(t) => {
                let mut out = Array1::from_elem(self.dim(), ZERO);
                for &(i, j, x) in t {
                    out[i] += x * v.amps[j];
                }
                out
            }
        };
        Ok(FockVector {
            tr: self.tr.clone(),
            amps,
        })
    }

    /// Operator product `self · other`.
    pub fn compose(&self, other: &Self) -> Result<Self> {
        if !self.tr.same(&other.tr) {
            return Err(Error::TruncationMismatch);
        }
        let repr = match (&self.repr, &other.repr) {
            (Repr::Diagonal(a), Repr::Diagonal(b)) => Repr::Diagonal(a * b),
            (Repr::Diagonal(a), _) => {
                let mut m = other.to_dense();
                scale_rows(&mut m, a);
                Repr::Dense(m)
            }
            (_, Repr::Diagonal(b)) => {
                let mut m = self.to_dense();
                scale_cols(&mut m, b);
                Repr::Dense(m)
            }
            _ => Repr::Dense(self.to_dense().dot(&other.to_dense())),
        };
        Ok(Self {
            tr: self.tr.clone(),
            repr,
        })
    }

    pub fn adjoint(&self) -> Self {
        let repr = match &self.repr {
            Repr::Diagonal(v) => Repr::Diagonal(v.mapv(|x| x.conj())),
            Repr::Sparse(t) => Repr::Sparse(t.iter().map(|&(i, j, x)| (j, i, x.conj())).collect()),
            Repr::Dense(m) => Repr::Dense(m.t().mapv(|x| x.conj())),
        };
        Self {
            tr: self.tr.clone(),
            repr,
        }
    }

    pub fn scale(&self, s: C64) -> Self {
        let repr = match &self.repr {
            Repr::Diagonal(v) => Repr::Diagonal(v * s),
            Repr::Sparse(t) => Repr::Sparse(t.iter().map(|&(i, j, x)| (i, j, x * s)).collect()),
            Repr::Dense(m) => Repr::Dense(m * s),
        };
        Self {
            tr: self.tr.clone(),
            repr,
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if !self.tr.same(&other.tr) {
            return Err(Error::TruncationMismatch);
        }
        let repr = match (&self.repr, &other.repr) {
            (Repr::Diagonal(a), Repr::Diagonal(b)) => Repr::Diagonal(a + b),
            _ => Repr::Dense(self.to_dense() + other.to_dense()),
        };
        Ok(Self {
            tr: self.tr.clone(),
            repr,
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scale(-ONE))
    }

    /// `D · self · D*` for a diagonal `D`.
    pub fn conjugate_by_diagonal(&self, d: &Array1<C64>) -> Self {
        let repr = match &self.repr {
            Repr::Diagonal(v) => Repr::Diagonal(v.clone()),
            Repr::Sparse(t) => Repr::Sparse(
                t.iter()
                    .map(|&(i, j, x)| (i, j, d[i] * x * d[j].conj()))
                    .collect(),
            ),
            Repr::Dense(m) => Repr::Dense(conjugate_dense_by_diagonal(m, d)),
        };
        Self {
            tr: self.tr.clone(),
            repr,
        }
    }

    pub fn frobenius_norm(&self) -> f64 {
        match &self.repr {
            Repr::Diagonal(v) => frob1(v),
            Repr::Dense(m) => frob(m),
            Repr::Sparse(_) => frob(&self.to_dense()),
        }
    }

    pub fn to_doc(&self) -> OperatorDoc {
        let dim = self.dim();
        match &self.repr {
            Repr::Diagonal(v) => OperatorDoc {
                representation: "diagonal".into(),
                dim,
                values: v.iter().map(|x| [x.re, x.im]).collect(),
                triplets: vec![],
            },
            Repr::Sparse(t) => OperatorDoc {
                representation: "sparse".into(),
                dim,
                values: vec![],
                triplets: t.iter().map(|&(i, j, x)| (i, j, x.re, x.im)).collect(),
            },
            Repr::Dense(m) => OperatorDoc {
                representation: "dense".into(),
                dim,
                values: m.iter().map(|x| [x.re, x.im]).collect(),
                triplets: vec![],
            },
        }
    }

    pub fn from_doc(tr: Arc<FockTruncation>, doc: &OperatorDoc) -> Result<Self> {
        if doc.dim != tr.dim() {
            return Err(Error::Validation(
                "operator dimension does not match truncation".into(),
            ));
        }
        let c = |v: &[f64; 2]| C64::new(v[0], v[1]);
        let repr = match doc.representation.as_str() {
            "diagonal" => Repr::Diagonal(doc.values.iter().map(c).collect()),
            "sparse" => Repr::Sparse(
                doc.triplets
                    .iter()
                    .map(|&(i, j, re, im)| (i, j, C64::new(re, im)))
                    .collect(),
            ),
            "dense" => {
                let data: Vec<C64> = doc.values.iter().map(c).collect();
                Repr::Dense(
                    Array2::from_shape_vec((doc.dim, doc.dim), data)
                        .map_err(|e| Error::Validation(e.to_string()))?,
                )
            }
            other => {
                return Err(Error::Validation(format!(
                    "unknown representation {other:?}"
                )))
            }
        };
        Self::new(tr, repr)
    }
}

pub fn frob(m: &Array2<C64>) -> f64 {
    m.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

pub fn frob1(v: &Array1<C64>) -> f64 {
    v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

pub fn scale_rows(m: &mut Array2<C64>, d: &Array1<C64>) {
    for (mut row, x) in m.axis_iter_mut(Axis(0)).zip(d.iter()) {
        row.mapv_inplace(|v| v * x);
    }
}

pub fn scale_cols(m: &mut Array2<C64>, d: &Array1<C64>) {
    for mut row in m.axis_iter_mut(Axis(0)) {
        row.iter_mut().zip(d.iter()).for_each(|(v, x)| *v *= x);
    }
}

/// `D m D*` entrywise.
pub fn conjugate_dense_by_diagonal(m: &Array2<C64>, d: &Array1<C64>) -> Array2<C64> {
    let dc = d.mapv(|x| x.conj());
    let mut out = m.clone();
    scale_rows(&mut out, d);
    scale_cols(&mut out, &dc);
    out
}

/// `Σ_{n > n_max} x^n/n!`, the discarded tail of `e^x`.
pub fn coherent_tail_bound(norm_sq: f64, n_max: usize) -> f64 {
    let mut term = 1.0;
    for n in 1..=n_max {
        term *= norm_sq / n as f64;
    }
    let mut tail = 0.0;
    let mut n = n_max + 1;
    loop {
        term *= norm_sq / n as f64;
        tail += term;
        if term <= tail * 1e-17 || n > n_max + 10_000 {
            break;
        }
        n += 1;
    }
    tail
}

fn guard(xi: &OneParticleVector, tr: &FockTruncation) -> Result<()> {
    if !(Arc::ptr_eq(xi.grid(), tr.grid()) || **xi.grid() == **tr.grid()) {
        return Err(Error::GridMismatch);
    }
    let n2 = xi.norm().powi(2);
    if !(n2 <= NORM_SQ_GUARD) {
        return Err(Error::Overflow(format!(
            "‖ξ‖² = {n2:.3e} exceeds {NORM_SQ_GUARD}; use a smaller ξ or a larger n_max"
        )));
    }
    Ok(())
}

fn factorials(n: usize) -> Vec<f64> {
    let mut f = vec![1.0; n + 1];
    for k in 1..=n {
        f[k] = f[k - 1] * k as f64;
    }
    f
}

/// Truncated `e^ξ = Σ_n ξ^{⊗n}/n!` in the occupation basis.
pub fn coherent_vector(xi: &OneParticleVector, tr: &Arc<FockTruncation>) -> Result<FockVector> {
    guard(xi, tr)?;
    let c = xi.mode_coefficients();
    let fact = factorials(tr.n_max());
    let amps = (0..tr.dim())
        .map(|i| {
            tr.occupation(i)
                .iter()
                .map(|&(k, n)| c[k as usize].powu(n as u32) / fact[n as usize].sqrt())
                .product::<C64>()
        })
        .collect();
    Ok(FockVector {
        tr: tr.clone(),
        amps,
    })
}

/// Per-mode `⟨m|D(α)|n⟩ · e^{|α|²/2}` for `m, n ≤ n_max`.
fn displacement_table(alpha: C64, n_max: usize) -> Vec<Vec<C64>> {
    let fact = factorials(n_max);
    let mb = -alpha.conj();
    let mut t = vec![vec![ZERO; n_max + 1]; n_max + 1];
    for m in 0..=n_max {
        for n in 0..=n_max {
            let mut s = ZERO;
            for j in 0..=m.min(n) {
                let c = (fact[m] * fact[n]).sqrt() / (fact[j] * fact[m - j] * fact[n - j]);
                s += alpha.powu((m - j) as u32) * mb.powu((n - j) as u32) * c;
            }
            t[m][n] = s;
        }
    }
    t
}

/// Compression `P W(ξ) P` of the Weyl operator to the truncation.
///
/// Entries factorize over modes into single-mode displacement elements.
pub fn weyl_operator(xi: &OneParticleVector, tr: &Arc<FockTruncation>) -> Result<FockOperator> {
    guard(xi, tr)?;
    let c = xi.mode_coefficients();
    let n_max = tr.n_max();
    let tables: Vec<Vec<Vec<C64>>> = c.iter().map(|&a| displacement_table(a, n_max)).collect();
    let pref = (-0.5 * c.iter().map(|a| a.norm_sqr()).sum::<f64>()).exp();
    let d = tr.dim();
    let mut m = Array2::from_elem((d, d), ZERO);
    m.axis_iter_mut(Axis(0))
        .into_par_iter()
        .enumerate()
        .for_each(|(i, mut row)| {
            let oi = tr.occupation(i);
            for j in 0..d {
                row[j] = pref * merged_product(oi, tr.occupation(j), &tables);
            }
        });
    Ok(FockOperator {
        tr: tr.clone(),
        repr: Repr::Dense(m),
    })
}

fn merged_product(a: &[(u16, u8)], b: &[(u16, u8)], tables: &[Vec<Vec<C64>>]) -> C64 {
    let (mut i, mut j) = (0, 0);
    let mut acc = ONE;
    while i < a.len() || j < b.len() {
        let ka = a.get(i).map_or(u16::MAX, |x| x.0);
        let kb = b.get(j).map_or(u16::MAX, |x| x.0);
        let (k, m, n) = if ka == kb {
            i += 1;
            j += 1;
            (ka, a[i - 1].1, b[j - 1].1)
        } else if ka < kb {
            i += 1;
            (ka, a[i - 1].1, 0)
        } else {
            j += 1;
            (kb, 0, b[j - 1].1)
        };
        acc *= tables[k as usize][m as usize][n as usize];
    }
    acc
}

/// `‖P^⊥ W(ξ) P_r‖_F` where `P_r` projects onto at most `r` particles.
///
/// Uses `‖W(ξ)v‖ = ‖v‖` column by column.
pub fn weyl_leakage(w: &FockOperator, r: usize) -> f64 {
    let m = match w.repr() {
        Repr::Dense(m) => m,
        _ => return 0.0,
    };
    let cols = w.truncation().dim_up_to(r);
    let s: f64 = (0..cols)
        .map(|j| {
            let kept: f64 = m.column(j).iter().map(|x| x.norm_sqr()).sum();
            (1.0 - kept).max(0.0)
        })
        .sum();
    s.sqrt()
}

/// `‖A*A - 1‖_F`.
pub fn unitary_defect(a: &FockOperator) -> f64 {
    let m = a.to_dense();
    let mut g = m.t().mapv(|x| x.conj()).dot(&m);
    for i in 0..g.nrows() {
        g[(i, i)] -= ONE;
    }
    frob(&g)
}

/// Diagonal `∏_{k ∈ multiset} v_k`; requires unimodular `v`.
pub fn second_quantization(v: &[C64], tr: &Arc<FockTruncation>) -> Result<FockOperator> {
    if v.len() != tr.modes() {
        return Err(Error::Validation(format!(
            "{} values for {} modes",
            v.len(),
            tr.modes()
        )));
    }
    if let Some(x) = v.iter().find(|x| (x.norm() - 1.0).abs() > 1e-12) {
        return Err(Error::Validation(format!("value {x} is not unimodular")));
    }
    Ok(FockOperator {
        tr: tr.clone(),
        repr: Repr::Diagonal(second_quantization_values(v, tr)),
    })
}

/// Products `∏_{k ∈ multiset} v_k` without the unimodularity check.
pub fn second_quantization_values(v: &[C64], tr: &FockTruncation) -> Array1<C64> {
    (0..tr.dim())
        .map(|i| tr.state(i).iter().map(|&k| v[k as usize]).product::<C64>())
        .collect()
}

/// Real diagonal `Σ_{k ∈ multiset} q_k`.
pub fn d_gamma_values(q: &[f64], tr: &FockTruncation) -> Vec<f64> {
    (0..tr.dim())
        .map(|i| tr.state(i).iter().map(|&k| q[k as usize]).sum())
        .collect()
}

/// `dΓ(q)` for a real function of momentum.
pub fn d_gamma(q: impl Fn(f64) -> f64, tr: &Arc<FockTruncation>) -> FockOperator {
    let qs: Vec<f64> = tr.grid().points().iter().map(|&p| q(p)).collect();
    real_diagonal(&d_gamma_values(&qs, tr), tr)
}

pub fn real_diagonal(values: &[f64], tr: &Arc<FockTruncation>) -> FockOperator {
    let v = values.iter().map(|&x| C64::new(x, 0.0)).collect();
    FockOperator {
        tr: tr.clone(),
        repr: Repr::Diagonal(v),
    }
}

/// `e^{itX}` for a real diagonal `X`.
pub fn exp_i_diagonal(values: &[f64], t: f64) -> Array1<C64> {
    values
        .iter()
        .map(|&x| C64::from_polar(1.0, t * x))
        .collect()
}

pub fn number_values(tr: &FockTruncation) -> Vec<f64> {
    (0..tr.dim())
        .map(|i| tr.particle_number(i) as f64)
        .collect()
}

/// `2P_e - 1`: `+1` on even, `-1` on odd particle number.
pub fn parity_generator(tr: &Arc<FockTruncation>) -> FockOperator {
    let v: Vec<f64> = (0..tr.dim())
        .map(|i| {
            if tr.particle_number(i) % 2 == 0 {
                1.0
            } else {
                -1.0
            }
        })
        .collect();
    real_diagonal(&v, tr)
}

/// `P_o = N mod 2`, the integer charge whose twist `e^{iπ P_o⊗P_o}` is `(-1)^{mn}`.
pub fn parity_charge(tr: &Arc<FockTruncation>) -> FockOperator {
    let v: Vec<f64> = (0..tr.dim())
        .map(|i| (tr.particle_number(i) % 2) as f64)
        .collect();
    real_diagonal(&v, tr)
}
