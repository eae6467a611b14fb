//! Acceptance suite: one PASS/FAIL line per criterion, all tolerances pinned here.

use std::f64::consts::PI;
use std::sync::Arc;
use std::time::{Duration, Instant};

use ndarray::Array1;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use wedgenet::bls::{verify_coincidence, verify_deformed_collision, BlsTriple, WarpMatrix};
use wedgenet::calibration::{
    locality_benchmark, locality_benchmark_report, locality_grid, random_inner_function, weyl_grid,
    weyl_relation_sweep, WEYL_LOW_BLOCK_BOUND, WEYL_MAX_NORM, WEYL_N_MAX, WEYL_PAIRS,
    WEYL_RELATION_BOUND, WEYL_SEED,
};
use wedgenet::fock::{
    coherent_vector, number_values, parity_charge, real_diagonal, second_quantization,
    weyl_operator, FockOperator, FockTruncation,
};
use wedgenet::innerfun::{product, verify_symmetric_inner, InnerFunctionSpec};
use wedgenet::onepspace::{embed, MomentumGrid, OneParticleVector, TestFunctionSpec};
use wedgenet::report::CheckReport;
use wedgenet::runner::{
    cmd_check_locality, cmd_fourier, parity_witnesses, RunConfig, TestFunctionConfig,
};
use wedgenet::scattering::{
    extract_smatrix, single_excitations, ApproximantFamily, SmoothingKernel,
};
use wedgenet::smatrix::{
    build_cyclic_smatrix, build_inner_function_smatrix, build_translation_smatrix,
    verify_smatrix_conditions, SMatrixSpec, TwoSidedBasis,
};
use wedgenet::wedge::{
    eigen_relation_defect, fourier_component, locality_check, u1_component, verify_adjoint_action,
    verify_fixed_point_criterion, BorchersTripleSpec, LocalityPair,
};
use wedgenet::C64;

/// Writes straight to stdout so the verdict lines survive test output capture.
macro_rules! say {
    ($($t:tt)*) => {{
        use std::io::Write;
        let _ = writeln!(std::io::stdout().lock(), $($t)*);
    }};
}

/// Float accumulation allowance for identities that hold exactly.
const EXACT: f64 = 1e-12;
const INNER_SPECS: usize = 20;
const INNER_SAMPLES: usize = 200;
const INNER_RUNTIME: Duration = Duration::from_secs(1);
const WEYL_RUNTIME: Duration = Duration::from_secs(30);
const LOCALITY_RUNTIME: Duration = Duration::from_secs(600);
const REFINEMENT_GAIN: f64 = 2.0;
const TWO_SIDED_MODES: usize = 8;
const TWO_SIDED_N_MAX: usize = 3;
const SCATTER_MODES: usize = 6;
const SCATTER_N_MAX: usize = 3;
/// Largest convergence budget accepted for the extraction.
const SCATTER_TARGET: f64 = 1e-3;
const UNDEFORMED_TOL: f64 = 1e-10;
const BLS_ORACLE_TOL: f64 = 1e-12;
const BLS_PHASE_TOL: f64 = 1e-10;
const FIXED_POINT_WITNESSES: usize = 10;

type Outcome = (Vec<String>, String);

fn geometric(m: usize) -> Arc<MomentumGrid> {
    Arc::new(MomentumGrid::geometric(m, 0.3, 5.0).unwrap())
}

fn basis(m: usize, n_max: usize) -> Arc<TwoSidedBasis> {
    TwoSidedBasis::symmetric(FockTruncation::new(geometric(m), n_max).unwrap())
}

fn require(fails: &mut Vec<String>, ok: bool, msg: impl FnOnce() -> String) {
    if !ok {
        fails.push(msg());
    }
}

fn require_report(fails: &mut Vec<String>, r: &CheckReport) {
    for d in r.failing() {
        fails.push(format!(
            "{}: {} = {:.3e} > {:.1e}",
            r.name, d.metric, d.value, d.tolerance
        ));
    }
}

fn exact(fails: &mut Vec<String>, worst: &mut f64, label: &str, d: f64) {
    *worst = worst.max(d);
    require(fails, d <= EXACT, || format!("{label}: {d:.3e}"));
}

fn max_diff(a: &Array1<C64>, b: &Array1<C64>) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

fn c1_inner_functions() -> Outcome {
    let mut fails = Vec::new();
    let samples: Vec<f64> = (0..INNER_SAMPLES)
        .map(|i| -10.0 + 20.0 * (i as f64 + 0.5) / INNER_SAMPLES as f64)
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let start = Instant::now();
    let mut worst = 0.0f64;
    for _ in 0..INNER_SPECS {
        let phi = random_inner_function(&mut rng);
        let r = verify_symmetric_inner(&phi, &samples, EXACT);
        worst = r.defects.iter().map(|d| d.value).fold(worst, f64::max);
        require_report(&mut fails, &r);
    }
    let t = start.elapsed();
    require(&mut fails, t < INNER_RUNTIME, || format!("runtime {t:?}"));
    (fails, format!("worst defect {worst:.2e}, {t:?}"))
}

fn c2_weyl_relation() -> Outcome {
    let mut fails = Vec::new();
    let start = Instant::now();
    let tr = FockTruncation::new(weyl_grid(), WEYL_N_MAX).unwrap();
    let samples = weyl_relation_sweep(WEYL_SEED, WEYL_PAIRS, &tr, WEYL_MAX_NORM).unwrap();
    let worst = samples.iter().map(|s| s.defect_per_dim).fold(0.0, f64::max);
    let low = samples
        .iter()
        .map(|s| s.low_block_per_dim)
        .fold(0.0, f64::max);
    let t = start.elapsed();
    require(&mut fails, samples.len() == WEYL_PAIRS, || {
        "sample count".into()
    });
    require(&mut fails, worst <= WEYL_RELATION_BOUND, || {
        format!("defect/dim {worst:.3e} > {WEYL_RELATION_BOUND:.1e}")
    });
    require(&mut fails, low <= WEYL_LOW_BLOCK_BOUND, || {
        format!("low block {low:.3e} > {WEYL_LOW_BLOCK_BOUND:.1e}")
    });
    require(&mut fails, t < WEYL_RUNTIME, || format!("runtime {t:?}"));
    (
        fails,
        format!(
            "dim {}, max defect/dim {worst:.2e}, low block {low:.2e}, {t:?}",
            tr.dim()
        ),
    )
}

fn c3_functoriality() -> Outcome {
    let mut fails = Vec::new();
    let g = geometric(4);
    let tr = FockTruncation::new(g.clone(), 4).unwrap();
    let phases = |h: fn(f64) -> f64| -> Vec<C64> {
        g.points()
            .iter()
            .map(|&p| C64::from_polar(1.0, h(p)))
            .collect()
    };
    let u = phases(|p| 0.7 * p + 0.3);
    let v = phases(|p| (2.0 * p).sin() - 1.1);
    let uv: Vec<C64> = u.iter().zip(&v).map(|(a, b)| a * b).collect();
    let uc: Vec<C64> = u.iter().map(|a| a.conj()).collect();
    let gu = second_quantization(&u, &tr).unwrap();
    let gv = second_quantization(&v, &tr).unwrap();
    let mut worst = 0.0f64;
    let guv = second_quantization(&uv, &tr).unwrap();
    exact(
        &mut fails,
        &mut worst,
        "product",
        guv.sub(&gu.compose(&gv).unwrap()).unwrap().frobenius_norm(),
    );
    exact(
        &mut fails,
        &mut worst,
        "adjoint",
        second_quantization(&uc, &tr)
            .unwrap()
            .sub(&gu.adjoint())
            .unwrap()
            .frobenius_norm(),
    );
    let one = second_quantization(&vec![C64::new(1.0, 0.0); g.len()], &tr).unwrap();
    exact(
        &mut fails,
        &mut worst,
        "identity",
        one.sub(&FockOperator::identity(tr.clone()))
            .unwrap()
            .frobenius_norm(),
    );
    let gd = gu.to_dense();
    let one_particle = tr.layer(1);
    let layer_err = one_particle
        .clone()
        .map(|i| (gd[(i, i)] - u[i - one_particle.start]).norm())
        .fold(0.0, f64::max);
    exact(&mut fails, &mut worst, "one-particle layer", layer_err);

    let f = TestFunctionSpec::bump(-1.5, 1.0, 1.0, 0.2).with_amplitude(0.6);
    let xi = embed(&f, &g).unwrap();
    let uxi = OneParticleVector::new(
        g.clone(),
        xi.amplitudes().iter().zip(&u).map(|(a, b)| a * b).collect(),
    )
    .unwrap();
    let lhs = gu.apply(&coherent_vector(&xi, &tr).unwrap()).unwrap();
    let rhs = coherent_vector(&uxi, &tr).unwrap();
    exact(
        &mut fails,
        &mut worst,
        "coherent vector",
        lhs.sub(&rhs).unwrap().norm(),
    );
    let w = weyl_operator(&xi, &tr).unwrap();
    let conj = gu.compose(&w).unwrap().compose(&gu.adjoint()).unwrap();
    let wu = weyl_operator(&uxi, &tr).unwrap();
    exact(
        &mut fails,
        &mut worst,
        "Weyl covariance",
        conj.sub(&wu).unwrap().frobenius_norm() / wu.frobenius_norm(),
    );
    (fails, format!("dim {}, worst {worst:.2e}", tr.dim()))
}

fn c4_smatrix_family() -> Outcome {
    let mut fails = Vec::new();
    let b = basis(4, 3);
    let mut worst = 0.0f64;
    for kappa in [0.5, 1.3, 2.0] {
        let t = build_translation_smatrix(kappa, &b).unwrap();
        let p = build_inner_function_smatrix(&InnerFunctionSpec::translation(kappa).unwrap(), &b)
            .unwrap();
        exact(
            &mut fails,
            &mut worst,
            &format!("translation κ={kappa}"),
            max_diff(t.diagonal(), p.diagonal()),
        );
    }
    let cyc = build_cyclic_smatrix(&parity_charge(b.left()), 2, 1, &b).unwrap();
    let minus =
        build_inner_function_smatrix(&InnerFunctionSpec::constant(-1.0).unwrap(), &b).unwrap();
    exact(
        &mut fails,
        &mut worst,
        "cyclic parity vs -1",
        max_diff(cyc.diagonal(), minus.diagonal()),
    );

    let phis = [
        InnerFunctionSpec::translation(0.8).unwrap(),
        InnerFunctionSpec::blaschke_symmetric(&[C64::new(0.5, 1.0)]).unwrap(),
        InnerFunctionSpec::singular(0.7).unwrap(),
        InnerFunctionSpec::blaschke_symmetric(&[C64::new(0.0, 2.0), C64::new(-1.0, 0.4)]).unwrap(),
    ];
    let build =
        |phi: &InnerFunctionSpec| -> SMatrixSpec { build_inner_function_smatrix(phi, &b).unwrap() };
    for (i, a) in phis.iter().enumerate() {
        for c in &phis[i..] {
            let lhs = build(&product(a, c));
            let rhs: Array1<C64> = build(a).diagonal() * build(c).diagonal();
            let scale = rhs.iter().map(|x| x.norm()).fold(0.0, f64::max);
            exact(
                &mut fails,
                &mut worst,
                "semigroup",
                max_diff(lhs.diagonal(), &rhs) / scale,
            );
        }
        require_report(&mut fails, &verify_smatrix_conditions(&build(a), EXACT));
    }
    require_report(&mut fails, &verify_smatrix_conditions(&cyc, EXACT));
    (fails, format!("worst {worst:.2e}"))
}

fn c5_one_particle_locality() -> Outcome {
    let mut fails = Vec::new();
    let cases = locality_benchmark();
    require(&mut fails, cases.len() == 10, || {
        format!("{} cases", cases.len())
    });
    let r = locality_benchmark_report(&cases, &locality_grid()).unwrap();
    require_report(&mut fails, &r);
    let gains: Vec<f64> = r
        .defects
        .iter()
        .filter(|d| d.metric.ends_with(".refinement"))
        .map(|d| 1.0 / d.value)
        .collect();
    require(&mut fails, gains.len() == cases.len(), || {
        "missing refinement data".into()
    });
    for (i, g) in gains.iter().enumerate() {
        require(&mut fails, *g >= REFINEMENT_GAIN, || {
            format!("case {i}: gain {g:.2}")
        });
    }
    for line in &r.provenance.log {
        say!("    {line}");
    }
    let min = gains.iter().copied().fold(f64::INFINITY, f64::min);
    (fails, format!("min refinement gain {min:.1}"))
}

fn c6_two_sided_locality() -> Outcome {
    let mut fails = Vec::new();
    let start = Instant::now();
    let b = basis(TWO_SIDED_MODES, TWO_SIDED_N_MAX);
    let tf = TestFunctionConfig::default();
    let smatrices = [
        ("identity", InnerFunctionSpec::identity()),
        (
            "translation 0.5",
            InnerFunctionSpec::translation(0.5).unwrap(),
        ),
        (
            "translation 2",
            InnerFunctionSpec::translation(2.0).unwrap(),
        ),
        ("minus one", InnerFunctionSpec::constant(-1.0).unwrap()),
        (
            "blaschke",
            InnerFunctionSpec::blaschke_symmetric(&[C64::new(0.5, 1.0)]).unwrap(),
        ),
        ("singular", InnerFunctionSpec::singular(0.7).unwrap()),
    ];
    let mut checks = 0;
    for (label, phi) in &smatrices {
        let s = if label.starts_with("translation") {
            build_translation_smatrix(phi.kappa(), &b).unwrap()
        } else {
            build_inner_function_smatrix(phi, &b).unwrap()
        };
        let t = BorchersTripleSpec::new(s, tf.left.clone(), tf.right.clone()).unwrap();
        let (f, fp) = (&tf.left[0], &tf.left[1]);
        let (g, gp) = (&tf.right[0], &tf.right[1]);
        let pairs = [
            LocalityPair::LeftVsCommutantLeft {
                f: f.clone(),
                fp: g.clone(),
            },
            LocalityPair::LeftVsCommutantLeft {
                f: fp.clone(),
                fp: gp.clone(),
            },
            LocalityPair::TwistedRightVsCommutantRight {
                g: g.clone(),
                gp: f.clone(),
            },
            LocalityPair::TwistedRightVsCommutantRight {
                g: gp.clone(),
                gp: fp.clone(),
            },
            LocalityPair::LeftVsCommutantRight {
                f: f.clone(),
                gp: fp.clone(),
            },
            LocalityPair::TwistedRightVsCommutantLeft {
                g: g.clone(),
                fp: gp.clone(),
            },
        ];
        for p in &pairs {
            match locality_check(&t, p) {
                Ok(r) => {
                    let mut r = r;
                    r.name = format!("{label} {}", r.name);
                    require_report(&mut fails, &r);
                }
                Err(e) => fails.push(format!("{label} {}: {e}", p.label())),
            }
            checks += 1;
        }
    }
    let t = start.elapsed();
    require(&mut fails, t < LOCALITY_RUNTIME, || {
        format!("runtime {t:?}")
    });
    (
        fails,
        format!("{checks} pair checks at dim {}, {t:?}", b.dim()),
    )
}

fn synthetic_charges(tr: &Arc<FockTruncation>) -> Vec<(&'static str, FockOperator)> {
    // Even-mode minus odd-mode occupation, and a fixed integer labelling of basis states.
    let imbalance: Vec<f64> = (0..tr.dim())
        .map(|i| {
            tr.state(i)
                .iter()
                .map(|&k| if k % 2 == 0 { 1.0 } else { -1.0 })
                .sum()
        })
        .collect();
    let labels: Vec<f64> = (0..tr.dim())
        .map(|i| ((i * 7 + 3) % 5) as f64 - 2.0)
        .collect();
    vec![
        ("parity", parity_charge(tr)),
        ("mode imbalance", real_diagonal(&imbalance, tr)),
        ("integer labels", real_diagonal(&labels, tr)),
    ]
}

fn c7_adjoint_action() -> Outcome {
    let mut fails = Vec::new();
    let b = basis(4, 3);
    let tr = b.left();
    let x = weyl_operator(
        &embed(
            &TestFunctionSpec::bump(-2.0, 1.0, 1.0, 0.2).with_amplitude(0.5),
            tr.grid(),
        )
        .unwrap(),
        tr,
    )
    .unwrap();
    let mut worst = 0.0f64;
    let mut n = 0;
    for (label, q) in synthetic_charges(tr) {
        let vals: Vec<i64> = q
            .diagonal_values()
            .unwrap()
            .iter()
            .map(|z| z.re as i64)
            .collect();
        let span = vals.iter().max().unwrap() - vals.iter().min().unwrap();
        for kappa in [PI, 1.3] {
            for m in -span..=span {
                let xm = u1_component(&x, &q, m).unwrap();
                if xm.frobenius_norm() == 0.0 {
                    continue;
                }
                let mut r = verify_adjoint_action(&xm, m, &q, kappa, &b).unwrap();
                r.name = format!("{label} κ={kappa:.3} m={m}");
                worst = worst.max(r.find("matrix_equality").unwrap().value);
                require(
                    &mut fails,
                    r.find("matrix_equality").unwrap().tolerance <= EXACT,
                    || "tolerance".into(),
                );
                require_report(&mut fails, &r);
                n += 1;
            }
        }
    }
    (fails, format!("{n} components, worst {worst:.2e}"))
}

fn c8_fourier() -> Outcome {
    let mut fails = Vec::new();
    let b = basis(4, 3);
    let tr = b.left();
    let x = weyl_operator(
        &embed(
            &TestFunctionSpec::bump(-2.0, 1.0, 1.0, 0.2).with_amplitude(0.5),
            tr.grid(),
        )
        .unwrap(),
        tr,
    )
    .unwrap();
    let n_op = real_diagonal(&number_values(tr), tr);
    let mut worst = 0.0f64;
    for k in [2u32, 3, 4] {
        let theta = 2.0 * PI / k as f64;
        let mut sum =
            FockOperator::dense(tr.clone(), ndarray::Array2::zeros((tr.dim(), tr.dim()))).unwrap();
        for n in 0..k {
            let xn = fourier_component(&x, &n_op, k, n).unwrap();
            let e = eigen_relation_defect(&xn, &n_op, theta, n as f64).unwrap();
            worst = worst.max(e);
            require(&mut fails, e <= EXACT, || {
                format!("k={k} n={n}: eigen relation {e:.3e}")
            });
            sum = sum.add(&xn).unwrap();
        }
        let rec = sum.sub(&x).unwrap().frobenius_norm() / x.frobenius_norm();
        worst = worst.max(rec);
        require(&mut fails, rec <= EXACT, || {
            format!("k={k}: reconstruction {rec:.3e}")
        });
    }
    let tf = TestFunctionConfig::default();
    let witnesses = parity_witnesses(&b, &tf.left, &tf.right).unwrap();
    require(&mut fails, witnesses.len() == FIXED_POINT_WITNESSES, || {
        format!("{} witnesses", witnesses.len())
    });
    let t = BorchersTripleSpec::new(
        build_cyclic_smatrix(&parity_charge(tr), 2, 1, &b).unwrap(),
        vec![],
        vec![],
    )
    .unwrap();
    let mut wrong = 0;
    for (label, z, even) in &witnesses {
        let r = verify_fixed_point_criterion(z, &t, (-4.0, 4.0), None).unwrap();
        let fixed = r.find("forbidden_components").unwrap().passes();
        if fixed != *even {
            wrong += 1;
            fails.push(format!("{label}: classified fixed={fixed}"));
        }
        for m in ["reconstruction", "phase_rule"] {
            let d = r.find(m).unwrap();
            require(&mut fails, d.passes(), || {
                format!("{label}: {m} = {:.3e}", d.value)
            });
        }
    }
    (
        fails,
        format!(
            "worst {worst:.2e}, {wrong} misclassified of {}",
            witnesses.len()
        ),
    )
}

fn c9_scattering() -> Outcome {
    let mut fails = Vec::new();
    let b = basis(SCATTER_MODES, SCATTER_N_MAX);
    let kernel = SmoothingKernel::default();
    let t_max = kernel.t_schedule.iter().copied().fold(0.0, f64::max);
    require(&mut fails, t_max == 64.0, || format!("T_max = {t_max}"));
    let family = ApproximantFamily::default();
    let tf = TestFunctionConfig::default();
    let l = single_excitations(b.left());
    let r = single_excitations(b.right());
    let cases = [
        ("translation", build_translation_smatrix(1.5, &b).unwrap()),
        (
            "blaschke",
            build_inner_function_smatrix(
                &InnerFunctionSpec::blaschke_symmetric(&[C64::new(0.5, 1.0)]).unwrap(),
                &b,
            )
            .unwrap(),
        ),
        (
            "identity",
            build_inner_function_smatrix(&InnerFunctionSpec::identity(), &b).unwrap(),
        ),
    ];
    let mut summary = Vec::new();
    for (label, s) in cases {
        let t = BorchersTripleSpec::new(s, tf.left.clone(), tf.right.clone()).unwrap();
        let ex = match extract_smatrix(&t, &l, &r, &kernel, &family) {
            Ok(ex) => ex,
            Err(e) => {
                fails.push(format!("{label}: {e}"));
                continue;
            }
        };
        let mut rep = ex.report;
        rep.name = format!("{label} {}", rep.name);
        require_report(&mut fails, &rep);
        let dev = rep.find("max_entry_deviation").unwrap();
        require(&mut fails, dev.tolerance <= SCATTER_TARGET, || {
            format!("{label}: budget {:.3e}", dev.tolerance)
        });
        for m in ["isometry", "out_factorization"] {
            let d = rep.find(m).unwrap();
            require(&mut fails, d.tolerance == dev.tolerance, || {
                format!("{label}: {m} budget differs")
            });
        }
        if label == "identity" {
            let n = ex.extracted.nrows();
            let e = ex
                .extracted
                .indexed_iter()
                .map(|((i, j), z)| {
                    (z - if i == j {
                        C64::new(1.0, 0.0)
                    } else {
                        C64::new(0.0, 0.0)
                    })
                    .norm()
                })
                .fold(0.0, f64::max);
            require(&mut fails, e <= UNDEFORMED_TOL, || {
                format!("identity: |S - 1| = {e:.3e} over {n} entries")
            });
        }
        summary.push(format!("{label} {:.1e}/{:.1e}", dev.value, dev.tolerance));
    }
    (fails, summary.join(", "))
}

fn c10_bls() -> Outcome {
    let mut fails = Vec::new();
    let b = basis(2, 2);
    let kappa = 1.0;
    let t = BorchersTripleSpec::new(
        build_translation_smatrix(kappa, &b).unwrap(),
        vec![],
        vec![],
    )
    .unwrap();
    let mut worst_gen = 0.0f64;
    for f in TestFunctionConfig::default().left {
        let r = verify_coincidence(&t, &f, kappa).unwrap();
        require_report(&mut fails, &r);
        let vac = r.find("vacuum_columns").unwrap();
        require(&mut fails, vac.tolerance == 0.0, || {
            "vacuum columns must be exact".into()
        });
        match r.find("oracle_agreement") {
            Some(d) => require(&mut fails, d.tolerance <= BLS_ORACLE_TOL, || {
                "oracle tolerance".into()
            }),
            None => fails.push("enumeration oracle did not run".into()),
        }
        worst_gen = worst_gen.max(r.find("generator_identity").unwrap().value);
    }
    let warped = BlsTriple::new(&b, WarpMatrix::new(kappa).unwrap());
    let kernel = SmoothingKernel::default();
    let family = ApproximantFamily::default();
    let l = single_excitations(b.left());
    let r = single_excitations(b.right());
    let mut worst_phase = 0.0f64;
    for xi in &l {
        for eta in &r {
            let rep = verify_deformed_collision(&warped, xi, eta, &kernel, &family).unwrap();
            for m in ["out_state", "in_state", "in_equals_s_out"] {
                let d = rep.find(m).unwrap();
                worst_phase = worst_phase.max(d.value);
                require(&mut fails, d.value <= BLS_PHASE_TOL, || {
                    format!("{m} = {:.3e}", d.value)
                });
            }
        }
    }
    (
        fails,
        format!("generator defect {worst_gen:.2e}, phase defect {worst_phase:.2e}"),
    )
}

fn c11_determinism() -> Outcome {
    let mut fails = Vec::new();
    let mut cfg = RunConfig::default();
    cfg.seed = 42;
    cfg.grid.modes = 3;
    let hashes = |cfg: &RunConfig| -> Vec<String> {
        let mut h: Vec<String> = cmd_check_locality(cfg)
            .unwrap()
            .reports
            .iter()
            .map(|r| r.hash())
            .collect();
        h.extend(cmd_fourier(cfg).unwrap().reports.iter().map(|r| r.hash()));
        h
    };
    let (a, b) = (hashes(&cfg), hashes(&cfg));
    require(&mut fails, a == b, || {
        "report hashes differ between identical runs".into()
    });
    let tr = FockTruncation::new(geometric(3), 4).unwrap();
    let s1 = weyl_relation_sweep(9, 5, &tr, 0.5).unwrap();
    let s2 = weyl_relation_sweep(9, 5, &tr, 0.5).unwrap();
    let same = s1
        .iter()
        .zip(&s2)
        .all(|(x, y)| x.defect_per_dim.to_bits() == y.defect_per_dim.to_bits());
    require(&mut fails, same, || {
        "seeded sweep is not reproducible".into()
    });
    (fails, format!("{} report hashes identical", a.len()))
}

#[test]
fn acceptance() {
    let criteria: [(&str, fn() -> Outcome); 11] = [
        ("inner-function axioms", c1_inner_functions),
        ("Weyl relation", c2_weyl_relation),
        ("second-quantization functoriality", c3_functoriality),
        ("S-matrix family coherence", c4_smatrix_family),
        ("one-particle locality benchmark", c5_one_particle_locality),
        ("two-sided wedge locality", c6_two_sided_locality),
        ("adjoint action", c7_adjoint_action),
        ("Fourier machinery", c8_fourier),
        ("scattering end-to-end", c9_scattering),
        ("warped convolution", c10_bls),
        ("determinism", c11_determinism),
    ];
    say!();
    let mut failed = Vec::new();
    for (i, (name, run)) in criteria.iter().enumerate() {
        let (fails, detail) = match std::panic::catch_unwind(run) {
            Ok(o) => o,
            Err(e) => {
                let msg = e
                    .downcast_ref::<String>()
                    .cloned()
                    .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()));
                (
                    vec![format!("panicked: {}", msg.unwrap_or_default())],
                    String::new(),
                )
            }
        };
        say!(
            "{} {:>2} {name}: {detail}",
            if fails.is_empty() { "PASS" } else { "FAIL" },
            i + 1
        );
        for f in &fails {
            say!("       {f}");
        }
        if !fails.is_empty() {
            failed.push(i + 1);
        }
    }
    assert!(failed.is_empty(), "failing criteria: {failed:?}");
}
