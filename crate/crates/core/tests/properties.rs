use std::sync::Arc;

use proptest::prelude::*;
use serde_json::Value;
use wedgenet::bls::{warped_convolution, WarpMatrix};
use wedgenet::fock::{number_values, real_diagonal, weyl_operator, FockOperator, FockTruncation};
use wedgenet::innerfun::InnerFunctionSpec;
use wedgenet::onepspace::{embed, MomentumGrid, TestFunctionSpec};
use wedgenet::report::{CheckReport, CHECK_REPORT_SCHEMA};
use wedgenet::runner::{
    cmd_bls_compare, cmd_check_locality, cmd_fourier, cmd_smatrix_table, RunConfig, SMatrixConfig,
};
use wedgenet::smatrix::{
    build_inner_function_smatrix, build_translation_smatrix, verify_smatrix_conditions,
    TwoSidedBasis,
};
use wedgenet::twosided::{TwoSidedKind, TwoSidedOperator};
use wedgenet::wedge::{fourier_component, locality_check, BorchersTripleSpec, LocalityPair};
use wedgenet::C64;

fn basis(m: usize, n_max: usize) -> Arc<TwoSidedBasis> {
    let g = Arc::new(MomentumGrid::geometric(m, 0.3, 5.0).unwrap());
    TwoSidedBasis::symmetric(FockTruncation::new(g, n_max).unwrap())
}

/// Checks `required`, `additionalProperties: false`, `type` and `minLength` recursively.
fn conforms(v: &Value, schema: &Value, path: &str) -> Result<(), String> {
    if let Some(t) = schema.get("type") {
        let types: Vec<&str> = match t {
            Value::String(s) => vec![s.as_str()],
            Value::Array(a) => a.iter().filter_map(Value::as_str).collect(),
            _ => vec![],
        };
        let ok = types.iter().any(|t| match *t {
            "object" => v.is_object(),
            "array" => v.is_array(),
            "string" => v.is_string(),
            "number" => v.is_number(),
            "integer" => v.is_u64() || v.is_i64(),
            "boolean" => v.is_boolean(),
            "null" => v.is_null(),
            _ => false,
        });
        if !ok {
            return Err(format!("{path}: {v} is not of type {t}"));
        }
    }
    if let (Some(min), Some(s)) = (schema.get("minLength").and_then(Value::as_u64), v.as_str()) {
        if (s.chars().count() as u64) < min {
            return Err(format!("{path}: string shorter than {min}"));
        }
    }
    if let Some(obj) = v.as_object() {
        let props = schema.get("properties").and_then(Value::as_object);
        for r in schema
            .get("required")
            .and_then(Value::as_array)
            .into_iter()
            .flatten()
        {
            let key = r.as_str().unwrap();
            if !obj.contains_key(key) {
                return Err(format!("{path}: missing {key}"));
            }
        }
        for (k, child) in obj {
            match props.and_then(|p| p.get(k)) {
                Some(s) => conforms(child, s, &format!("{path}.{k}"))?,
                None if schema.get("additionalProperties") == Some(&Value::Bool(false)) => {
                    return Err(format!("{path}: unexpected {k}"));
                }
                None => {}
            }
        }
    }
    if let (Some(items), Some(arr)) = (schema.get("items"), v.as_array()) {
        for (i, x) in arr.iter().enumerate() {
            conforms(x, items, &format!("{path}[{i}]"))?;
        }
    }
    Ok(())
}

fn small_config() -> RunConfig {
    let mut c = RunConfig::default();
    c.grid.modes = 3;
    c.truncation.n_max = 2;
    c
}

#[test]
fn emitted_reports_conform_to_schema() {
    let schema: Value = serde_json::from_str(CHECK_REPORT_SCHEMA).unwrap();
    let mut c = small_config();
    c.smatrix = SMatrixConfig::Translation { kappa: 0.7 };
    let mut reports = Vec::new();
    reports.extend(cmd_check_locality(&c).unwrap().reports);
    reports.extend(cmd_smatrix_table(&c).unwrap().reports);
    reports.extend(cmd_fourier(&c).unwrap().reports);
    reports.extend(cmd_bls_compare(&c).unwrap().reports);
    c.smatrix = SMatrixConfig::InnerFunction {
        zeros: vec![[0.5, 1.0]],
        kappa: 0.0,
        nu: 0.0,
        sign: 1.0,
    };
    reports.extend(cmd_check_locality(&c).unwrap().reports);
    assert!(reports.len() > 20);
    for r in &reports {
        let json = r.to_json();
        let v: Value = serde_json::from_str(&json).unwrap();
        conforms(&v, &schema, "$").unwrap_or_else(|e| panic!("{}: {e}", r.name));
        let back: CheckReport = serde_json::from_str(&json).unwrap();
        assert_eq!(back.hash(), r.hash());
    }
}

#[test]
fn schema_checker_rejects_malformed_reports() {
    let schema: Value = serde_json::from_str(CHECK_REPORT_SCHEMA).unwrap();
    let mut v: Value = serde_json::from_str(&CheckReport::new("x").to_json()).unwrap();
    assert!(conforms(&v, &schema, "$").is_ok());
    v["extra"] = Value::Bool(true);
    assert!(conforms(&v, &schema, "$").is_err());
    let mut v: Value = serde_json::from_str(&CheckReport::new("x").to_json()).unwrap();
    v.as_object_mut().unwrap().remove("pass");
    assert!(conforms(&v, &schema, "$").is_err());
}

fn dense(b: &Arc<TwoSidedBasis>, coeffs: &[f64]) -> TwoSidedOperator {
    let d = b.dim();
    let m = ndarray::Array2::from_shape_fn((d, d), |(i, j)| {
        let k = (i * d + j) % coeffs.len();
        C64::new(
            coeffs[k],
            coeffs[(k + 1) % coeffs.len()] * (i as f64 - j as f64),
        )
    });
    TwoSidedOperator::new(b.clone(), TwoSidedKind::Dense(m)).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn warping_is_a_group_action(kappa in 0.0f64..3.0, lambda in 0.0f64..3.0, coeffs in prop::collection::vec(-1.0f64..1.0, 7)) {
        let b = basis(2, 2);
        let x = dense(&b, &coeffs);
        let w = WarpMatrix::new(kappa).unwrap();
        let back = warped_convolution(&warped_convolution(&x, w.signed()).unwrap(), w.negated()).unwrap();
        prop_assert!(back.distance(&x).unwrap() <= 1e-12 * x.frobenius_norm());
        let wl = WarpMatrix::new(lambda).unwrap();
        let wsum = WarpMatrix::new(kappa + lambda).unwrap();
        let two = warped_convolution(&warped_convolution(&x, w.signed()).unwrap(), wl.signed()).unwrap();
        let one = warped_convolution(&x, wsum.signed()).unwrap();
        prop_assert!(two.distance(&one).unwrap() <= 1e-12 * x.frobenius_norm());
        // Warping preserves adjoints.
        let adj = warped_convolution(&x.adjoint(), w.signed()).unwrap();
        let adj2 = warped_convolution(&x, w.signed()).unwrap().adjoint();
        prop_assert!(adj.distance(&adj2).unwrap() <= 1e-12 * x.frobenius_norm());
    }

    #[test]
    fn inner_function_smatrices_satisfy_conditions(re in -2.0f64..2.0, im in 0.1f64..2.0, nu in 0.0f64..1.5, kappa in 0.0f64..2.0) {
        let b = basis(3, 2);
        let zeros = if re.abs() < 1e-3 { vec![C64::new(0.0, im)] } else { vec![C64::new(re, im), C64::new(-re, im)] };
        let phi = InnerFunctionSpec::new(zeros, kappa, nu, 1.0).unwrap();
        let s = build_inner_function_smatrix(&phi, &b).unwrap();
        let r = verify_smatrix_conditions(&s, 1e-12);
        prop_assert!(r.pass, "{}", r.to_json());
    }

    #[test]
    fn translation_twists_are_wedge_local(kappa in 0.1f64..2.5, shift in -1.0f64..0.0) {
        let b = basis(3, 2);
        let f = TestFunctionSpec::bump(-2.0 + shift, 1.0, 1.0, 0.2).with_amplitude(0.3);
        let g = TestFunctionSpec::bump(2.0 - shift, 1.0, 0.5, -0.4).with_amplitude(0.3);
        let t = BorchersTripleSpec::new(build_translation_smatrix(kappa, &b).unwrap(), vec![f.clone()], vec![g.clone()]).unwrap();
        for p in [
            LocalityPair::LeftVsCommutantLeft { f: f.clone(), fp: g.clone() },
            LocalityPair::TwistedRightVsCommutantRight { g: g.clone(), gp: f.clone() },
        ] {
            let r = locality_check(&t, &p).unwrap();
            prop_assert!(r.pass, "{}", r.to_json());
        }
    }

    #[test]
    fn charge_components_partition_any_weyl_operator(k in 2u32..6, center in -4.0f64..-1.5, modulation in 0.0f64..2.0) {
        let g = Arc::new(MomentumGrid::geometric(3, 0.3, 5.0).unwrap());
        let tr = FockTruncation::new(g.clone(), 3).unwrap();
        let f = TestFunctionSpec::bump(center, 1.0, modulation, 0.1).with_amplitude(0.4);
        let x = weyl_operator(&embed(&f, &g).unwrap(), &tr).unwrap();
        let q = real_diagonal(&number_values(&tr), &tr);
        let mut sum = FockOperator::dense(tr.clone(), ndarray::Array2::zeros((tr.dim(), tr.dim()))).unwrap();
        for n in 0..k {
            sum = sum.add(&fourier_component(&x, &q, k, n).unwrap()).unwrap();
        }
        prop_assert!(sum.sub(&x).unwrap().frobenius_norm() <= 1e-12 * x.frobenius_norm());
    }

    #[test]
    fn config_survives_toml_round_trip(seed in any::<u64>(), kappa in 0.0f64..5.0, tol in 0.1f64..10.0) {
        let mut c = RunConfig::default();
        c.seed = seed;
        c.bls.kappa = kappa;
        c.tol_scale = tol;
        c.smatrix = SMatrixConfig::Translation { kappa };
        let back = RunConfig::from_toml(&c.to_toml()).unwrap();
        prop_assert_eq!(back.hash(), c.hash());
    }
}
