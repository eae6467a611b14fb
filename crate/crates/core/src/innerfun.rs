//! Inner symmetric functions of the upper half-plane.
//!
//! A spec describes `φ(z) = sign · e^{iκz} · e^{-iν/z} · ∏ (z - z_j)/(z - conj z_j)`,
//! the parameter of a Longo-Witten endomorphism `Γ(φ(P))`.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::report::CheckReport;

/// Tolerance used when pairing a zero `z` with its partner `-conj z`.
pub const PAIRING_TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "InnerFunctionDoc", into = "InnerFunctionDoc")]
pub struct InnerFunctionSpec {
    zeros: Vec<C64>,
    kappa: f64,
    nu: f64,
    sign: f64,
}

/// On-disk form: `zeros = [[re, im], ...]`, `kappa`, `nu`, `sign`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct InnerFunctionDoc {
    #[serde(default)]
    zeros: Vec<[f64; 2]>,
    #[serde(default)]
    kappa: f64,
    #[serde(default)]
    nu: f64,
    #[serde(default = "plus_one")]
    sign: f64,
}

fn plus_one() -> f64 {
    1.0
}

impl TryFrom<InnerFunctionDoc> for InnerFunctionSpec {
    type Error = Error;
    fn try_from(d: InnerFunctionDoc) -> Result<Self> {
        let zeros = d.zeros.iter().map(|z| C64::new(z[0], z[1])).collect();
        InnerFunctionSpec::new(zeros, d.kappa, d.nu, d.sign)
    }
}

impl From<InnerFunctionSpec> for InnerFunctionDoc {
    fn from(s: InnerFunctionSpec) -> Self {
        InnerFunctionDoc {
            zeros: s.zeros.iter().map(|z| [z.re, z.im]).collect(),
            kappa: s.kappa,
            nu: s.nu,
            sign: s.sign,
        }
    }
}

impl InnerFunctionSpec {
    /// Validated constructor.
    pub fn new(zeros: Vec<C64>, kappa: f64, nu: f64, sign: f64) -> Result<Self> {
        let s = Self::new_unchecked(zeros, kappa, nu, sign);
        s.validate()?;
        Ok(s)
    }

    /// Builds a spec without checking the symmetry or positivity invariants.
    ///
    /// Exists so that defective inputs can be fed to the verification suites.
    pub fn new_unchecked(zeros: Vec<C64>, kappa: f64, nu: f64, sign: f64) -> Self {
        Self {
            zeros,
            kappa,
            nu,
            sign,
        }
    }

    pub fn identity() -> Self {
        Self::new_unchecked(Vec::new(), 0.0, 0.0, 1.0)
    }

    pub fn constant(sign: f64) -> Result<Self> {
        Self::new(Vec::new(), 0.0, 0.0, sign)
    }

    /// `e^{iκp}`, the one-particle fiber of the translation twist.
    pub fn translation(kappa: f64) -> Result<Self> {
        Self::new(Vec::new(), kappa, 0.0, 1.0)
    }

    /// `e^{-iν/p}`.
    pub fn singular(nu: f64) -> Result<Self> {
        Self::new(Vec::new(), 0.0, nu, 1.0)
    }

    /// Blaschke product over `zeros`, partners appended automatically
    /// for every zero off the imaginary axis.
    pub fn blaschke_symmetric(zeros: &[C64]) -> Result<Self> {
        let mut all = Vec::with_capacity(2 * zeros.len());
        for &z in zeros {
            all.push(z);
            if z.re != 0.0 {
                all.push(C64::new(-z.re, z.im));
            }
        }
        Self::new(all, 0.0, 0.0, 1.0)
    }

    pub fn zeros(&self) -> &[C64] {
        &self.zeros
    }
    pub fn kappa(&self) -> f64 {
        self.kappa
    }
    pub fn nu(&self) -> f64 {
        self.nu
    }
    pub fn sign(&self) -> f64 {
        self.sign
    }

    pub fn is_identity(&self) -> bool {
        self.zeros.is_empty() && self.kappa == 0.0 && self.nu == 0.0 && self.sign == 1.0
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.kappa.is_finite() && self.kappa >= 0.0) {
            return Err(Error::Validation(format!(
                "kappa must be >= 0, got {}",
                self.kappa
            )));
        }
        if !(self.nu.is_finite() && self.nu >= 0.0) {
            return Err(Error::Validation(format!(
                "nu must be >= 0, got {}",
                self.nu
            )));
        }
        if self.sign != 1.0 && self.sign != -1.0 {
            return Err(Error::Validation(format!(
                "sign must be +1 or -1, got {}",
                self.sign
            )));
        }
        for z in &self.zeros {
            if !(z.im > 0.0 && z.re.is_finite() && z.im.is_finite()) {
                return Err(Error::Validation(format!(
                    "zero {z} not in the open upper half-plane"
                )));
            }
        }
        if let Some(z) = unpaired_zero(&self.zeros) {
            return Err(Error::Validation(format!(
                "zero {z} has no partner -conj(z) within {PAIRING_TOL:e}"
            )));
        }
        Ok(())
    }

    /// Parameters of `p ↦ φ(s·p)` for `s > 0`.
    pub fn scaled(&self, s: f64) -> Result<Self> {
        if !(s.is_finite() && s >= 0.0) {
            return Err(Error::Domain(format!("scale must be >= 0, got {s}")));
        }
        if s == 0.0 {
            let c = self.limit_at_zero()?;
            return Ok(Self::new_unchecked(Vec::new(), 0.0, 0.0, c));
        }
        Ok(Self::new_unchecked(
            self.zeros.iter().map(|z| z / s).collect(),
            self.kappa * s,
            self.nu / s,
            self.sign,
        ))
    }

    /// `lim_{p→0} φ(p)`; only defined without a singular factor.
    ///
    /// For a symmetric zero set the value is real, `±1`.
    pub fn limit_at_zero(&self) -> Result<f64> {
        if self.nu > 0.0 {
            return Err(Error::Domain(
                "φ(0) undefined: essential singularity (nu > 0)".into(),
            ));
        }
        let mut v = C64::new(self.sign, 0.0);
        for z in &self.zeros {
            v *= z / z.conj();
        }
        if (v.im).abs() > 1e-9 {
            return Err(Error::Domain(format!(
                "φ(0) = {v} is not real; zero set not symmetric"
            )));
        }
        Ok(v.re.signum())
    }
}

/// First zero with no partner `-conj z` in the multiset, if any.
fn unpaired_zero(zeros: &[C64]) -> Option<C64> {
    let mut used = vec![false; zeros.len()];
    for i in 0..zeros.len() {
        if used[i] {
            continue;
        }
        let target = C64::new(-zeros[i].re, zeros[i].im);
        if (zeros[i] - target).norm() <= PAIRING_TOL {
            used[i] = true;
            continue;
        }
        let partner = (0..zeros.len())
            .filter(|&j| j != i && !used[j])
            .find(|&j| (zeros[j] - target).norm() <= PAIRING_TOL);
        match partner {
            Some(j) => {
                used[i] = true;
                used[j] = true;
            }
            None => return Some(zeros[i]),
        }
    }
    None
}

/// `φ(p)` on the real line.
pub fn eval_boundary(phi: &InnerFunctionSpec, p: f64) -> Result<C64> {
    if phi.nu > 0.0 && p == 0.0 {
        return Err(Error::Domain(
            "p = 0 with nu > 0 (essential singularity)".into(),
        ));
    }
    let mut v = C64::from_polar(1.0, phi.kappa * p) * phi.sign;
    if phi.nu > 0.0 {
        v *= C64::from_polar(1.0, -phi.nu / p);
    }
    let pc = C64::new(p, 0.0);
    for z in &phi.zeros {
        // (p - z)/(p - conj z) has modulus one; normalize the quotient's
        // phase directly to keep |φ| = 1 to rounding.
        let num = pc - z;
        v *= num / num.conj();
    }
    Ok(v)
}

/// `φ(z)` in the open upper half-plane.
pub fn eval_upper_half_plane(phi: &InnerFunctionSpec, z: C64) -> Result<C64> {
    if !(z.im > 0.0) {
        return Err(Error::Domain(format!("Im z must be > 0, got {z}")));
    }
    let i = C64::i();
    let mut v = (i * phi.kappa * z).exp() * phi.sign;
    if phi.nu > 0.0 {
        v *= (-i * phi.nu / z).exp();
    }
    for zj in &phi.zeros {
        v *= (z - zj) / (z - zj.conj());
    }
    Ok(v)
}

pub fn product(a: &InnerFunctionSpec, b: &InnerFunctionSpec) -> InnerFunctionSpec {
    let mut zeros = a.zeros.clone();
    zeros.extend_from_slice(&b.zeros);
    InnerFunctionSpec::new_unchecked(zeros, a.kappa + b.kappa, a.nu + b.nu, a.sign * b.sign)
}

/// `∏_j φ(s_j ·)` as a single spec.
pub fn scaled_product(phi: &InnerFunctionSpec, scales: &[f64]) -> Result<InnerFunctionSpec> {
    let mut acc = InnerFunctionSpec::identity();
    for &s in scales {
        acc = product(&acc, &phi.scaled(s)?);
    }
    Ok(acc)
}

/// Samples `||φ(p)| - 1|` and `|φ(-p) - conj φ(p)|` over `samples`.
pub fn verify_symmetric_inner(phi: &InnerFunctionSpec, samples: &[f64], tol: f64) -> CheckReport {
    let mut rep = CheckReport::new("symmetric_inner");
    rep.param("samples", samples.len());
    let mut modulus = 0.0f64;
    let mut symmetry = 0.0f64;
    let mut evaluated = 0usize;
    for &p in samples {
        match (eval_boundary(phi, p), eval_boundary(phi, -p)) {
            (Ok(a), Ok(b)) => {
                modulus = modulus
                    .max((a.norm() - 1.0).abs())
                    .max((b.norm() - 1.0).abs());
                symmetry = symmetry.max((b - a.conj()).norm());
                evaluated += 1;
            }
            _ => {
                rep.log(format!("skipped singular sample p = {p}"));
            }
        }
    }
    if evaluated == 0 {
        modulus = f64::NAN;
        symmetry = f64::NAN;
    }
    rep.defect(
        "unit_modulus",
        modulus,
        tol,
        "analytic: |φ| = 1 on the real line",
    );
    rep.defect(
        "reflection_symmetry",
        symmetry,
        tol,
        "analytic: φ(-p) = conj φ(p)",
    );
    if let Err(e) = phi.validate() {
        rep.log(format!("spec does not validate: {e}"));
    }
    rep
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn boundary_examples() {
        let minus = InnerFunctionSpec::constant(-1.0).unwrap();
        assert_eq!(eval_boundary(&minus, 1.0).unwrap(), c(-1.0, 0.0));

        let k2 = InnerFunctionSpec::translation(2.0).unwrap();
        let v = eval_boundary(&k2, 0.5).unwrap();
        assert!((v - C64::from_polar(1.0, 1.0)).norm() < 1e-15);

        let b = InnerFunctionSpec::new(vec![c(0.0, 1.0)], 0.0, 0.0, 1.0).unwrap();
        let v = eval_boundary(&b, 1.0).unwrap();
        assert!((v - c(0.0, -1.0)).norm() < 1e-15);
    }

    #[test]
    fn singular_factor_rejects_zero() {
        let s = InnerFunctionSpec::singular(0.5).unwrap();
        assert!(matches!(eval_boundary(&s, 0.0), Err(Error::Domain(_))));
        assert!(eval_boundary(&InnerFunctionSpec::identity(), 0.0).is_ok());
    }

    #[test]
    fn half_plane_examples() {
        let id = InnerFunctionSpec::identity();
        assert_eq!(
            eval_upper_half_plane(&id, c(2.0, 3.0)).unwrap(),
            c(1.0, 0.0)
        );
        let b = InnerFunctionSpec::new(vec![c(0.0, 1.0)], 0.0, 0.0, 1.0).unwrap();
        assert_eq!(eval_upper_half_plane(&b, c(0.0, 1.0)).unwrap().norm(), 0.0);
        let k1 = InnerFunctionSpec::translation(1.0).unwrap();
        let v = eval_upper_half_plane(&k1, c(0.0, 1.0)).unwrap();
        assert!((v - c((-1.0f64).exp(), 0.0)).norm() < 1e-15);
        assert!(eval_upper_half_plane(&id, c(1.0, 0.0)).is_err());
    }

    #[test]
    fn product_examples() {
        let phi = InnerFunctionSpec::blaschke_symmetric(&[c(1.0, 1.0)]).unwrap();
        assert_eq!(product(&InnerFunctionSpec::identity(), &phi), phi);
        let m = InnerFunctionSpec::constant(-1.0).unwrap();
        assert!(product(&m, &m).is_identity());
        let p = product(
            &InnerFunctionSpec::translation(1.0).unwrap(),
            &InnerFunctionSpec::translation(2.0).unwrap(),
        );
        let v = eval_boundary(&p, 1.0).unwrap();
        assert!((v - C64::from_polar(1.0, 3.0)).norm() < 1e-15);
    }

    #[test]
    fn validation() {
        assert!(InnerFunctionSpec::new(vec![c(1.0, 1.0)], 0.0, 0.0, 1.0).is_err());
        assert!(InnerFunctionSpec::new(vec![c(1.0, -1.0), c(-1.0, -1.0)], 0.0, 0.0, 1.0).is_err());
        assert!(InnerFunctionSpec::new(vec![c(1.0, 1.0), c(-1.0, 1.0)], 0.0, 0.0, 1.0).is_ok());
        // Partners within the pairing tolerance are accepted.
        assert!(
            InnerFunctionSpec::new(vec![c(1.0, 1.0), c(-1.0 + 1e-12, 1.0)], 0.0, 0.0, 1.0).is_ok()
        );
        assert!(InnerFunctionSpec::new(vec![], -1.0, 0.0, 1.0).is_err());
        assert!(InnerFunctionSpec::new(vec![], 0.0, 0.0, 0.5).is_err());
        // Duplicate zeros need duplicate partners.
        assert!(InnerFunctionSpec::new(
            vec![c(1.0, 1.0), c(1.0, 1.0), c(-1.0, 1.0)],
            0.0,
            0.0,
            1.0
        )
        .is_err());
    }

    #[test]
    fn symmetric_report_examples() {
        let grid: Vec<f64> = (1..50).map(|k| 0.1 * k as f64).collect();
        let r = verify_symmetric_inner(&InnerFunctionSpec::identity(), &grid, 1e-12);
        assert!(r.pass);
        assert_eq!(r.find("unit_modulus").unwrap().value, 0.0);
        assert_eq!(r.find("reflection_symmetry").unwrap().value, 0.0);

        let broken = InnerFunctionSpec::new_unchecked(vec![c(1.0, 1.0)], 0.0, 0.0, 1.0);
        let r = verify_symmetric_inner(&broken, &grid, 1e-12);
        assert!(!r.pass);
        assert!(!r.find("reflection_symmetry").unwrap().passes());
        assert!(r.find("unit_modulus").unwrap().passes());

        let paired =
            InnerFunctionSpec::new(vec![c(1.0, 1.0), c(-1.0, 1.0)], 0.0, 0.0, 1.0).unwrap();
        assert!(verify_symmetric_inner(&paired, &grid, 1e-12).pass);
    }

    #[test]
    fn scaling_matches_evaluation() {
        let phi = product(
            &InnerFunctionSpec::blaschke_symmetric(&[c(0.7, 1.3), c(0.0, 0.4)]).unwrap(),
            &InnerFunctionSpec::new(vec![], 0.8, 0.3, -1.0).unwrap(),
        );
        for &s in &[0.25, 1.0, 3.5] {
            let ps = phi.scaled(s).unwrap();
            for &p in &[-2.0, -0.3, 0.01, 0.7, 9.0] {
                let a = eval_boundary(&ps, p).unwrap();
                let b = eval_boundary(&phi, s * p).unwrap();
                assert!((a - b).norm() < 1e-12, "s={s} p={p}");
            }
        }
    }

    #[test]
    fn zero_scale_limit() {
        let b = InnerFunctionSpec::blaschke_symmetric(&[c(0.0, 1.0)]).unwrap();
        // (p - i)/(p + i) → -1 as p → 0.
        assert_eq!(b.scaled(0.0).unwrap().sign(), -1.0);
        let pair = InnerFunctionSpec::blaschke_symmetric(&[c(1.0, 2.0)]).unwrap();
        assert_eq!(pair.scaled(0.0).unwrap().sign(), 1.0);
        assert!(InnerFunctionSpec::singular(1.0)
            .unwrap()
            .scaled(0.0)
            .is_err());
        let near = eval_boundary(&b, 1e-9).unwrap();
        assert!((near - c(-1.0, 0.0)).norm() < 1e-8);
    }

    #[test]
    fn toml_round_trip() {
        let phi = product(
            &InnerFunctionSpec::blaschke_symmetric(&[c(0.123456789012345678, 1.0 / 3.0)]).unwrap(),
            &InnerFunctionSpec::new(vec![], std::f64::consts::PI, 0.1, -1.0).unwrap(),
        );
        let text = toml::to_string(&phi).unwrap();
        assert!(text.contains("zeros") && text.contains("kappa") && text.contains("sign"));
        let back: InnerFunctionSpec = toml::from_str(&text).unwrap();
        assert_eq!(back, phi);
        let bad = "zeros = [[1.0, 1.0]]\n";
        assert!(toml::from_str::<InnerFunctionSpec>(bad).is_err());
    }

    prop_compose! {
        fn arb_spec()(
            zs in prop::collection::vec((-3.0f64..3.0, 0.05f64..3.0), 0..4),
            imag in prop::collection::vec(0.05f64..3.0, 0..2),
            kappa in 0.0f64..3.0,
            nu in prop_oneof![Just(0.0), 0.0f64..2.0],
            neg in any::<bool>(),
        ) -> InnerFunctionSpec {
            let mut zeros: Vec<C64> = zs.iter().map(|&(a, b)| c(a, b)).collect();
            zeros.extend(imag.iter().map(|&b| c(0.0, b)));
            InnerFunctionSpec::blaschke_symmetric(&zeros)
                .map(|b| product(&b, &InnerFunctionSpec::new(vec![], kappa, nu, if neg { -1.0 } else { 1.0 }).unwrap()))
                .unwrap()
        }
    }

    proptest! {
        #[test]
        fn boundary_axioms(phi in arb_spec(), p in prop_oneof![-50.0f64..-1e-3, 1e-3f64..50.0]) {
            let a = eval_boundary(&phi, p).unwrap();
            let b = eval_boundary(&phi, -p).unwrap();
            prop_assert!((a.norm() - 1.0).abs() <= 1e-12);
            prop_assert!((b - a.conj()).norm() <= 1e-12);
        }

        #[test]
        fn product_is_pointwise(a in arb_spec(), b in arb_spec(), p in 1e-3f64..20.0) {
            let lhs = eval_boundary(&product(&a, &b), p).unwrap();
            let rhs = eval_boundary(&a, p).unwrap() * eval_boundary(&b, p).unwrap();
            prop_assert!((lhs - rhs).norm() <= 1e-12);
        }

        #[test]
        fn bounded_in_half_plane(phi in arb_spec(), x in -5.0f64..5.0, y in 1e-3f64..5.0) {
            let v = eval_upper_half_plane(&phi, c(x, y)).unwrap();
            prop_assert!(v.norm() <= 1.0 + 1e-10);
        }
    }
}
