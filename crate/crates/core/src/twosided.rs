//! Structured operators on the two-sided space.
//!
//! Twisted generators such as `Ad S(x⊗1)` are block diagonal in the right
//! factor, so they are stored fiber by fiber instead of as dense matrices.

use std::borrow::Cow;
use std::sync::Arc;

use ndarray::{s, Array1, Array2, Axis};
use num_complex::Complex64 as C64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fock::{conjugate_dense_by_diagonal, frob, FockOperator};
use crate::smatrix::{TwoSidedBasis, TwoSidedVector};

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
const ONE: C64 = C64 { re: 1.0, im: 0.0 };

/// Largest two-sided dimension for which dense fallbacks are allowed.
pub const DENSE_LIMIT: usize = 2048;

#[derive(Clone, Debug)]
pub enum TwoSidedKind {
    Identity,
    Diagonal(Array1<C64>),
    /// `A ⊗ 1`.
    Left(Array2<C64>),
    /// `1 ⊗ B`.
    Right(Array2<C64>),
    /// `Σ_q A_q ⊗ |q⟩⟨q|`.
    LeftFibered(Vec<Array2<C64>>),
    /// `Σ_p |p⟩⟨p| ⊗ B_p`.
    RightFibered(Vec<Array2<C64>>),
    Dense(Array2<C64>),
}

#[derive(Clone, Debug)]
pub struct TwoSidedOperator {
    basis: Arc<TwoSidedBasis>,
    kind: TwoSidedKind,
}

/// Leading block of states kept on each side.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Block {
    pub left: usize,
    pub right: usize,
}

impl Block {
    pub fn full(b: &TwoSidedBasis) -> Self {
        Self {
            left: b.left().dim(),
            right: b.right().dim(),
        }
    }

    /// States with at most `r` particles on either side.
    pub fn particles(b: &TwoSidedBasis, r: usize) -> Self {
        Self {
            left: b.left().dim_up_to(r.min(b.left().n_max())),
            right: b.right().dim_up_to(r.min(b.right().n_max())),
        }
    }
}

fn dense_guard(d: usize) -> Result<()> {
    if d > DENSE_LIMIT {
        return Err(Error::Unsupported(format!(
            "dense two-sided fallback at dimension {d} exceeds {DENSE_LIMIT}"
        )));
    }
    Ok(())
}

fn adj(m: &Array2<C64>) -> Array2<C64> {
    m.t().mapv(|x| x.conj())
}

fn frob_block(m: &Array2<C64>, n: usize) -> f64 {
    frob(&m.slice(s![..n, ..n]).to_owned())
}

impl TwoSidedOperator {
    pub fn new(basis: Arc<TwoSidedBasis>, kind: TwoSidedKind) -> Result<Self> {
        let (dl, dr) = (basis.left().dim(), basis.right().dim());
        let ok = match &kind {
            TwoSidedKind::Identity => true,
            TwoSidedKind::Diagonal(d) => d.len() == dl * dr,
            TwoSidedKind::Left(a) => a.dim() == (dl, dl),
            TwoSidedKind::Right(b) => b.dim() == (dr, dr),
            TwoSidedKind::LeftFibered(v) => v.len() == dr && v.iter().all(|a| a.dim() == (dl, dl)),
            TwoSidedKind::RightFibered(v) => v.len() == dl && v.iter().all(|b| b.dim() == (dr, dr)),
            TwoSidedKind::Dense(m) => {
                dense_guard(dl * dr)?;
                m.dim() == (dl * dr, dl * dr)
            }
        };
        if !ok {
            return Err(Error::Validation(
                "two-sided operator shape does not match the basis".into(),
            ));
        }
        Ok(Self { basis, kind })
    }

    pub fn identity(basis: &Arc<TwoSidedBasis>) -> Self {
        Self {
            basis: basis.clone(),
            kind: TwoSidedKind::Identity,
        }
    }

    pub fn diagonal(basis: &Arc<TwoSidedBasis>, d: Array1<C64>) -> Result<Self> {
        Self::new(basis.clone(), TwoSidedKind::Diagonal(d))
    }

    /// `x ⊗ 1`.
    pub fn left(basis: &Arc<TwoSidedBasis>, x: &FockOperator) -> Result<Self> {
        if **x.truncation() != **basis.left() {
            return Err(Error::TruncationMismatch);
        }
        Ok(Self {
            basis: basis.clone(),
            kind: TwoSidedKind::Left(x.to_dense()),
        })
    }

    /// `1 ⊗ y`.
    pub fn right(basis: &Arc<TwoSidedBasis>, y: &FockOperator) -> Result<Self> {
        if **y.truncation() != **basis.right() {
            return Err(Error::TruncationMismatch);
        }
        Ok(Self {
            basis: basis.clone(),
            kind: TwoSidedKind::Right(y.to_dense()),
        })
    }

    pub fn basis(&self) -> &Arc<TwoSidedBasis> {
        &self.basis
    }
    pub fn kind(&self) -> &TwoSidedKind {
        &self.kind
    }
    pub fn dim(&self) -> usize {
        self.basis.dim()
    }

    fn with(&self, kind: TwoSidedKind) -> Self {
        Self {
            basis: self.basis.clone(),
            kind,
        }
    }

    fn dl(&self) -> usize {
        self.basis.left().dim()
    }
    fn dr(&self) -> usize {
        self.basis.right().dim()
    }

    /// Block diagonal in the right factor.
    pub fn is_left_type(&self) -> bool {
        matches!(
            self.kind,
            TwoSidedKind::Identity
                | TwoSidedKind::Diagonal(_)
                | TwoSidedKind::Left(_)
                | TwoSidedKind::LeftFibered(_)
        )
    }

    /// Block diagonal in the left factor.
    pub fn is_right_type(&self) -> bool {
        matches!(
            self.kind,
            TwoSidedKind::Identity
                | TwoSidedKind::Diagonal(_)
                | TwoSidedKind::Right(_)
                | TwoSidedKind::RightFibered(_)
        )
    }

    /// `A_q` for a left-type operator.
    pub fn left_fiber(&self, q: usize) -> Option<Cow<'_, Array2<C64>>> {
        let dl = self.dl();
        let dr = self.dr();
        match &self.kind {
            TwoSidedKind::Identity => Some(Cow::Owned(Array2::eye(dl))),
            TwoSidedKind::Diagonal(d) => Some(Cow::Owned(Array2::from_diag(
                &(0..dl).map(|p| d[p * dr + q]).collect::<Array1<C64>>(),
            ))),
            TwoSidedKind::Left(a) => Some(Cow::Borrowed(a)),
            TwoSidedKind::LeftFibered(v) => Some(Cow::Borrowed(&v[q])),
            _ => None,
        }
    }

    /// `B_p` for a right-type operator.
    pub fn right_fiber(&self, p: usize) -> Option<Cow<'_, Array2<C64>>> {
        let dr = self.dr();
        match &self.kind {
            TwoSidedKind::Identity => Some(Cow::Owned(Array2::eye(dr))),
            TwoSidedKind::Diagonal(d) => Some(Cow::Owned(Array2::from_diag(
                &d.slice(s![p * dr..(p + 1) * dr]).to_owned(),
            ))),
            TwoSidedKind::Right(b) => Some(Cow::Borrowed(b)),
            TwoSidedKind::RightFibered(v) => Some(Cow::Borrowed(&v[p])),
            _ => None,
        }
    }

    fn left_fibers(&self) -> Vec<Cow<'_, Array2<C64>>> {
        (0..self.dr())
            .map(|q| self.left_fiber(q).expect("left-type"))
            .collect()
    }

    fn right_fibers(&self) -> Vec<Cow<'_, Array2<C64>>> {
        (0..self.dl())
            .map(|p| self.right_fiber(p).expect("right-type"))
            .collect()
    }

    pub fn to_dense(&self) -> Result<Array2<C64>> {
        let d = self.dim();
        dense_guard(d)?;
        let (dl, dr) = (self.dl(), self.dr());
        let mut m = Array2::from_elem((d, d), ZERO);
        match &self.kind {
            TwoSidedKind::Dense(x) => return Ok(x.clone()),
            TwoSidedKind::Identity
            | TwoSidedKind::Diagonal(_)
            | TwoSidedKind::Left(_)
            | TwoSidedKind::LeftFibered(_) => {
                for q in 0..dr {
                    let a = self.left_fiber(q).unwrap();
                    for p in 0..dl {
                        for pp in 0..dl {
                            m[(p * dr + q, pp * dr + q)] = a[(p, pp)];
                        }
                    }
                }
            }
            TwoSidedKind::Right(_) | TwoSidedKind::RightFibered(_) => {
                for p in 0..dl {
                    let b = self.right_fiber(p).unwrap();
                    for q in 0..dr {
                        for qq in 0..dr {
                            m[(p * dr + q, p * dr + qq)] = b[(q, qq)];
                        }
                    }
                }
            }
        }
        Ok(m)
    }

    pub fn apply(&self, v: &TwoSidedVector) -> Result<TwoSidedVector> {
        if !self.basis.same(v.basis()) {
            return Err(Error::TruncationMismatch);
        }
        let (dl, dr) = (self.dl(), self.dr());
        let x = v
            .amplitudes()
            .to_owned()
            .into_shape_with_order((dl, dr))
            .expect("contiguous");
        let y: Array2<C64> = match &self.kind {
            TwoSidedKind::Identity => x,
            TwoSidedKind::Diagonal(d) => {
                &x * &d
                    .view()
                    .into_shape_with_order((dl, dr))
                    .expect("contiguous")
            }
            TwoSidedKind::Left(a) => a.dot(&x),
            TwoSidedKind::Right(b) => x.dot(&b.t()),
            TwoSidedKind::LeftFibered(fs) => {
                let mut y = Array2::from_elem((dl, dr), ZERO);
                for (q, a) in fs.iter().enumerate() {
                    y.column_mut(q).assign(&a.dot(&x.column(q)));
                }
                y
            }
            TwoSidedKind::RightFibered(fs) => {
                let mut y = Array2::from_elem((dl, dr), ZERO);
                for (p, b) in fs.iter().enumerate() {
                    y.row_mut(p).assign(&b.dot(&x.row(p)));
                }
                y
            }
            TwoSidedKind::Dense(m) => {
                return TwoSidedVector::new(self.basis.clone(), m.dot(v.amplitudes()));
            }
        };
        TwoSidedVector::new(
            self.basis.clone(),
            y.into_shape_with_order(dl * dr).expect("contiguous"),
        )
    }

    pub fn adjoint(&self) -> Self {
        self.with(match &self.kind {
            TwoSidedKind::Identity => TwoSidedKind::Identity,
            TwoSidedKind::Diagonal(d) => TwoSidedKind::Diagonal(d.mapv(|x| x.conj())),
            TwoSidedKind::Left(a) => TwoSidedKind::Left(adj(a)),
            TwoSidedKind::Right(b) => TwoSidedKind::Right(adj(b)),
            TwoSidedKind::LeftFibered(v) => TwoSidedKind::LeftFibered(v.iter().map(adj).collect()),
            TwoSidedKind::RightFibered(v) => {
                TwoSidedKind::RightFibered(v.iter().map(adj).collect())
            }
            TwoSidedKind::Dense(m) => TwoSidedKind::Dense(adj(m)),
        })
    }

    pub fn scale(&self, c: C64) -> Self {
        let dl = self.dl();
        let dr = self.dr();
        self.with(match &self.kind {
            TwoSidedKind::Identity => TwoSidedKind::Diagonal(Array1::from_elem(dl * dr, c)),
            TwoSidedKind::Diagonal(d) => TwoSidedKind::Diagonal(d * c),
            TwoSidedKind::Left(a) => TwoSidedKind::Left(a * c),
            TwoSidedKind::Right(b) => TwoSidedKind::Right(b * c),
            TwoSidedKind::LeftFibered(v) => {
                TwoSidedKind::LeftFibered(v.iter().map(|a| a * c).collect())
            }
            TwoSidedKind::RightFibered(v) => {
                TwoSidedKind::RightFibered(v.iter().map(|b| b * c).collect())
            }
            TwoSidedKind::Dense(m) => TwoSidedKind::Dense(m * c),
        })
    }

    fn check_basis(&self, other: &Self) -> Result<()> {
        if self.basis.same(&other.basis) {
            Ok(())
        } else {
            Err(Error::TruncationMismatch)
        }
    }

    /// `self + c·other`, keeping structure where both sides share it.
    pub fn axpy(&self, c: C64, other: &Self) -> Result<Self> {
        use TwoSidedKind::*;
        self.check_basis(other)?;
        let kind = match (&self.kind, &other.kind) {
            (Left(a), Left(b)) => Left(a + &(b * c)),
            (Right(a), Right(b)) => Right(a + &(b * c)),
            (Diagonal(a), Diagonal(b)) => Diagonal(a + &(b * c)),
            _ if self.is_left_type() && other.is_left_type() => LeftFibered(
                self.left_fibers()
                    .iter()
                    .zip(other.left_fibers())
                    .map(|(a, b)| &**a + &(&*b * c))
                    .collect(),
            ),
            _ if self.is_right_type() && other.is_right_type() => RightFibered(
                self.right_fibers()
                    .iter()
                    .zip(other.right_fibers())
                    .map(|(a, b)| &**a + &(&*b * c))
                    .collect(),
            ),
            _ => Dense(self.to_dense()? + &(other.to_dense()? * c)),
        };
        Ok(self.with(kind))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.axpy(-ONE, other)
    }

    pub fn compose(&self, other: &Self) -> Result<Self> {
        use TwoSidedKind::*;
        self.check_basis(other)?;
        let kind = match (&self.kind, &other.kind) {
            (Identity, _) => other.kind.clone(),
            (_, Identity) => self.kind.clone(),
            (Diagonal(a), Diagonal(b)) => Diagonal(a * b),
            (Left(a), Left(b)) => Left(a.dot(b)),
            (Right(a), Right(b)) => Right(a.dot(b)),
            _ if self.is_left_type() && other.is_left_type() => LeftFibered(
                self.left_fibers()
                    .iter()
                    .zip(other.left_fibers())
                    .map(|(a, b)| a.dot(&*b))
                    .collect(),
            ),
            _ if self.is_right_type() && other.is_right_type() => RightFibered(
                self.right_fibers()
                    .iter()
                    .zip(other.right_fibers())
                    .map(|(a, b)| a.dot(&*b))
                    .collect(),
            ),
            _ => Dense(self.to_dense()?.dot(&other.to_dense()?)),
        };
        Ok(self.with(kind))
    }

    /// Multiplies the entry `((a,b),(a',b'))` by `k[a,a']`.
    pub fn hadamard_left(&self, k: &Array2<C64>) -> Self {
        let (dl, dr) = (self.dl(), self.dr());
        let kd: Array1<C64> = k.diag().to_owned();
        self.with(match &self.kind {
            TwoSidedKind::Identity => {
                TwoSidedKind::Diagonal((0..dl * dr).map(|i| kd[i / dr]).collect())
            }
            TwoSidedKind::Diagonal(d) => {
                TwoSidedKind::Diagonal((0..dl * dr).map(|i| d[i] * kd[i / dr]).collect())
            }
            TwoSidedKind::Left(a) => TwoSidedKind::Left(a * k),
            TwoSidedKind::LeftFibered(v) => {
                TwoSidedKind::LeftFibered(v.iter().map(|a| a * k).collect())
            }
            TwoSidedKind::Right(b) => {
                TwoSidedKind::RightFibered((0..dl).map(|p| b * kd[p]).collect())
            }
            TwoSidedKind::RightFibered(v) => {
                TwoSidedKind::RightFibered(v.iter().enumerate().map(|(p, b)| b * kd[p]).collect())
            }
            TwoSidedKind::Dense(m) => {
                let mut out = m.clone();
                out.indexed_iter_mut()
                    .for_each(|((i, j), x)| *x *= k[(i / dr, j / dr)]);
                TwoSidedKind::Dense(out)
            }
        })
    }

    /// Multiplies the entry `((a,b),(a',b'))` by `k[b,b']`.
    pub fn hadamard_right(&self, k: &Array2<C64>) -> Self {
        let (dl, dr) = (self.dl(), self.dr());
        let kd: Array1<C64> = k.diag().to_owned();
        self.with(match &self.kind {
            TwoSidedKind::Identity => {
                TwoSidedKind::Diagonal((0..dl * dr).map(|i| kd[i % dr]).collect())
            }
            TwoSidedKind::Diagonal(d) => {
                TwoSidedKind::Diagonal((0..dl * dr).map(|i| d[i] * kd[i % dr]).collect())
            }
            TwoSidedKind::Right(b) => TwoSidedKind::Right(b * k),
            TwoSidedKind::RightFibered(v) => {
                TwoSidedKind::RightFibered(v.iter().map(|b| b * k).collect())
            }
            TwoSidedKind::Left(a) => {
                TwoSidedKind::LeftFibered((0..dr).map(|q| a * kd[q]).collect())
            }
            TwoSidedKind::LeftFibered(v) => {
                TwoSidedKind::LeftFibered(v.iter().enumerate().map(|(q, a)| a * kd[q]).collect())
            }
            TwoSidedKind::Dense(m) => {
                let mut out = m.clone();
                out.indexed_iter_mut()
                    .for_each(|((i, j), x)| *x *= k[(i % dr, j % dr)]);
                TwoSidedKind::Dense(out)
            }
        })
    }

    /// `Ad(d_L ⊗ d_R)` for diagonal unitaries on each factor.
    pub fn conjugate_by_product(&self, dl: &Array1<C64>, dr: &Array1<C64>) -> Self {
        let outer = |d: &Array1<C64>| {
            Array2::from_shape_fn((d.len(), d.len()), |(i, j)| d[i] * d[j].conj())
        };
        self.hadamard_left(&outer(dl)).hadamard_right(&outer(dr))
    }

    /// `Ad D` for a two-sided diagonal `D`.
    pub fn conjugate_by_diagonal(&self, d: &Array1<C64>) -> Result<Self> {
        let (dl, dr) = (self.dl(), self.dr());
        if d.len() != dl * dr {
            return Err(Error::Validation(
                "diagonal length does not match the basis".into(),
            ));
        }
        let dc = d.mapv(|x| x.conj());
        let kind = match &self.kind {
            TwoSidedKind::Identity => TwoSidedKind::Identity,
            TwoSidedKind::Diagonal(x) => TwoSidedKind::Diagonal(&(x * d) * &dc),
            TwoSidedKind::Left(_) | TwoSidedKind::LeftFibered(_) => TwoSidedKind::LeftFibered(
                (0..dr)
                    .map(|q| {
                        let col: Array1<C64> = (0..dl).map(|p| d[p * dr + q]).collect();
                        conjugate_dense_by_diagonal(&self.left_fiber(q).unwrap(), &col)
                    })
                    .collect(),
            ),
            TwoSidedKind::Right(_) | TwoSidedKind::RightFibered(_) => TwoSidedKind::RightFibered(
                (0..dl)
                    .map(|p| {
                        let row = d.slice(s![p * dr..(p + 1) * dr]).to_owned();
                        conjugate_dense_by_diagonal(&self.right_fiber(p).unwrap(), &row)
                    })
                    .collect(),
            ),
            TwoSidedKind::Dense(m) => TwoSidedKind::Dense(conjugate_dense_by_diagonal(m, d)),
        };
        Ok(self.with(kind))
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.block_frobenius(Block::full(&self.basis))
    }

    /// `‖P X P‖_F` for the leading block `P`.
    pub fn block_frobenius(&self, blk: Block) -> f64 {
        let dr = self.dr();
        match &self.kind {
            TwoSidedKind::Identity => ((blk.left * blk.right) as f64).sqrt(),
            TwoSidedKind::Diagonal(d) => (0..blk.left)
                .flat_map(|p| (0..blk.right).map(move |q| p * dr + q))
                .map(|i| d[i].norm_sqr())
                .sum::<f64>()
                .sqrt(),
            TwoSidedKind::Left(a) => frob_block(a, blk.left) * (blk.right as f64).sqrt(),
            TwoSidedKind::Right(b) => frob_block(b, blk.right) * (blk.left as f64).sqrt(),
            TwoSidedKind::LeftFibered(v) => v[..blk.right]
                .iter()
                .map(|a| frob_block(a, blk.left).powi(2))
                .sum::<f64>()
                .sqrt(),
            TwoSidedKind::RightFibered(v) => v[..blk.left]
                .iter()
                .map(|b| frob_block(b, blk.right).powi(2))
                .sum::<f64>()
                .sqrt(),
            TwoSidedKind::Dense(m) => {
                let idx: Vec<usize> = (0..blk.left)
                    .flat_map(|p| (0..blk.right).map(move |q| p * dr + q))
                    .collect();
                idx.iter()
                    .map(|&i| idx.iter().map(|&j| m[(i, j)].norm_sqr()).sum::<f64>())
                    .sum::<f64>()
                    .sqrt()
            }
        }
    }

    pub fn distance(&self, other: &Self) -> Result<f64> {
        Ok(self.sub(other)?.frobenius_norm())
    }
}

fn comm_block(a: &Array2<C64>, b: &Array2<C64>, n: usize) -> f64 {
    frob_block(&(a.dot(b) - b.dot(a)), n)
}

/// `‖P[a, b]P‖_F` on the leading block, exploiting the fiber structure.
pub fn commutator_norm(a: &TwoSidedOperator, b: &TwoSidedOperator, blk: Block) -> Result<f64> {
    use TwoSidedKind::*;
    a.check_basis(b)?;
    match (&a.kind, &b.kind) {
        (Identity, _) | (_, Identity) | (Diagonal(_), Diagonal(_)) => return Ok(0.0),
        (Left(_), Right(_)) | (Right(_), Left(_)) => return Ok(0.0),
        (Left(x), Left(y)) => return Ok(comm_block(x, y, blk.left) * (blk.right as f64).sqrt()),
        (Right(x), Right(y)) => return Ok(comm_block(x, y, blk.right) * (blk.left as f64).sqrt()),
        _ => {}
    }
    if a.is_left_type() && b.is_left_type() {
        let s: f64 = (0..blk.right)
            .into_par_iter()
            .map(|q| {
                comm_block(
                    &a.left_fiber(q).unwrap(),
                    &b.left_fiber(q).unwrap(),
                    blk.left,
                )
                .powi(2)
            })
            .sum();
        return Ok(s.sqrt());
    }
    if a.is_right_type() && b.is_right_type() {
        let s: f64 = (0..blk.left)
            .into_par_iter()
            .map(|p| {
                comm_block(
                    &a.right_fiber(p).unwrap(),
                    &b.right_fiber(p).unwrap(),
                    blk.right,
                )
                .powi(2)
            })
            .sum();
        return Ok(s.sqrt());
    }
    let (l, r) = if a.is_left_type() && b.is_right_type() {
        (a, b)
    } else if a.is_right_type() && b.is_left_type() {
        (b, a)
    } else {
        let (x, y) = (a.to_dense()?, b.to_dense()?);
        let c = x.dot(&y) - y.dot(&x);
        let op = TwoSidedOperator::new(a.basis.clone(), Dense(c))?;
        return Ok(op.block_frobenius(blk));
    };
    // [Σ A_q⊗|q⟩⟨q|, Σ |p⟩⟨p|⊗B_p] has entries (A_q)_{pp'}(B_{p'})_{qq'} - (B_p)_{qq'}(A_{q'})_{pp'}.
    let af = l.left_fibers();
    let bf = r.right_fibers();
    let s: f64 = (0..blk.left)
        .into_par_iter()
        .map(|p| {
            let mut acc = 0.0;
            for pp in 0..blk.left {
                for q in 0..blk.right {
                    let aq = af[q][(p, pp)];
                    for qq in 0..blk.right {
                        let v = aq * bf[pp][(q, qq)] - bf[p][(q, qq)] * af[qq][(p, pp)];
                        acc += v.norm_sqr();
                    }
                }
            }
            acc
        })
        .sum();
    Ok(s.sqrt())
}

/// Dense matrix of a one-sided operator restricted to the leading `n` states.
pub fn leading_block(m: &Array2<C64>, n: usize) -> Array2<C64> {
    m.slice(s![..n, ..n]).to_owned()
}

/// Per-fiber Frobenius norms `‖A_q‖_F` of a left-type operator.
pub fn left_fiber_norms(x: &TwoSidedOperator) -> Option<Vec<f64>> {
    x.is_left_type().then(|| {
        (0..x.dr())
            .map(|q| frob(&x.left_fiber(q).unwrap()))
            .collect()
    })
}

/// Sum over the right factor's diagonal blocks, used by dense cross-checks.
pub fn partial_trace_right(m: &Array2<C64>, dl: usize, dr: usize) -> Array2<C64> {
    let mut out = Array2::from_elem((dl, dl), ZERO);
    for (i, row) in m.axis_iter(Axis(0)).enumerate() {
        let (p, q) = (i / dr, i % dr);
        for pp in 0..dl {
            out[(p, pp)] += row[pp * dr + q];
        }
    }
    out
}
