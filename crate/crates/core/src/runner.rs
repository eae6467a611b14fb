//! Run configuration and the batch commands behind the `wedgenet` binary.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bls::{verify_coincidence, verify_deformed_collision, BlsTriple, WarpMatrix};
use crate::calibration;
use crate::error::{Error, Result};
use crate::fock::{
    number_values, parity_charge, real_diagonal, weyl_operator, FockOperator, FockTruncation,
};
use crate::innerfun::{verify_symmetric_inner, InnerFunctionSpec};
use crate::onepspace::{embed, GridScheme, MomentumGrid, TestFunctionSpec};
use crate::report::{sha256_hex, CheckReport};
use crate::scattering::{
    extract_smatrix, single_excitations, verify_recovery_identities, ApproximantFamily,
    SmoothingKernel,
};
use crate::smatrix::{
    build_cyclic_smatrix, build_inner_function_smatrix, build_inner_symmetry_smatrix,
    build_translation_smatrix, verify_smatrix_conditions, SMatrixSpec, TwoSidedBasis,
};
use crate::twosided::TwoSidedOperator;
use crate::wedge::{
    eigen_relation_defect, fourier_component, locality_check, u1_component, verify_adjoint_action,
    verify_fixed_point_criterion, verify_translation_covariance, wedge_inclusion_violations,
    BorchersTripleSpec, LocalityPair, EXACT_TOL, TRANSLATION_SAMPLES,
};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub scheme: GridScheme,
    pub modes: usize,
    pub p_min: f64,
    pub p_max: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            scheme: GridScheme::Geometric,
            modes: 4,
            p_min: 0.3,
            p_max: 5.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TruncationConfig {
    pub n_max: usize,
}

impl Default for TruncationConfig {
    fn default() -> Self {
        Self { n_max: 3 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChargeKind {
    /// `N mod 2`.
    Parity,
    /// The particle number `N`.
    Number,
}

impl ChargeKind {
    pub fn operator(&self, tr: &Arc<FockTruncation>) -> FockOperator {
        match self {
            Self::Parity => parity_charge(tr),
            Self::Number => real_diagonal(&number_values(tr), tr),
        }
    }
}

/// S-matrix choice. Inner-function parameters are kept raw so that defective
/// specs reach the symmetry check instead of failing at parse time.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case", deny_unknown_fields)]
pub enum SMatrixConfig {
    Identity,
    Translation {
        kappa: f64,
    },
    InnerFunction {
        #[serde(default)]
        zeros: Vec<[f64; 2]>,
        #[serde(default)]
        kappa: f64,
        #[serde(default)]
        nu: f64,
        #[serde(default = "plus_one")]
        sign: f64,
    },
    InnerSymmetry {
        charge: ChargeKind,
        kappa: f64,
    },
    Cyclic {
        charge: ChargeKind,
        k: u32,
        n: u32,
    },
}

fn plus_one() -> f64 {
    1.0
}

impl Default for SMatrixConfig {
    fn default() -> Self {
        Self::Identity
    }
}

impl SMatrixConfig {
    /// `φ` for the inner-function variant, without validation.
    pub fn raw_inner_function(&self) -> Option<InnerFunctionSpec> {
        match self {
            Self::InnerFunction {
                zeros,
                kappa,
                nu,
                sign,
            } => Some(InnerFunctionSpec::new_unchecked(
                zeros.iter().map(|z| C64::new(z[0], z[1])).collect(),
                *kappa,
                *nu,
                *sign,
            )),
            _ => None,
        }
    }

    pub fn build(&self, basis: &Arc<TwoSidedBasis>) -> Result<SMatrixSpec> {
        match self {
            Self::Identity => build_inner_function_smatrix(&InnerFunctionSpec::identity(), basis),
            Self::Translation { kappa } => build_translation_smatrix(*kappa, basis),
            Self::InnerFunction { .. } => build_inner_function_smatrix(
                &self.raw_inner_function().expect("inner function"),
                basis,
            ),
            Self::InnerSymmetry { charge, kappa } => {
                build_inner_symmetry_smatrix(&charge.operator(basis.left()), *kappa, basis)
            }
            Self::Cyclic { charge, k, n } => {
                build_cyclic_smatrix(&charge.operator(basis.left()), *k, *n, basis)
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TestFunctionConfig {
    /// Supported in the left half-line.
    pub left: Vec<TestFunctionSpec>,
    /// Supported in the right half-line.
    pub right: Vec<TestFunctionSpec>,
}

impl Default for TestFunctionConfig {
    fn default() -> Self {
        Self {
            left: vec![
                TestFunctionSpec::bump(-2.0, 1.0, 1.0, 0.2).with_amplitude(0.3),
                TestFunctionSpec::bump(-3.5, 1.0, 0.5, 0.0).with_amplitude(0.25),
            ],
            right: vec![
                TestFunctionSpec::bump(2.0, 1.0, 0.5, -0.4).with_amplitude(0.3),
                TestFunctionSpec::bump(3.5, 1.0, 0.0, 0.3).with_amplitude(0.25),
            ],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlsConfig {
    pub kappa: f64,
}

impl Default for BlsConfig {
    fn default() -> Self {
        Self { kappa: 1.0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FourierConfig {
    pub k_values: Vec<u32>,
    pub kappas: Vec<f64>,
}

impl Default for FourierConfig {
    fn default() -> Self {
        Self {
            k_values: vec![2, 3, 4],
            kappas: vec![std::f64::consts::PI, 1.3],
        }
    }
}

/// Everything a run depends on. A run is reproducible from this and the seed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub grid: GridConfig,
    pub truncation: TruncationConfig,
    pub smatrix: SMatrixConfig,
    pub test_functions: TestFunctionConfig,
    pub kernel: SmoothingKernel,
    pub approximants: ApproximantFamily,
    pub bls: BlsConfig,
    pub fourier: FourierConfig,
    pub seed: u64,
    /// Multiplies every tolerance.
    pub tol_scale: f64,
    pub out_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            grid: GridConfig::default(),
            truncation: TruncationConfig::default(),
            smatrix: SMatrixConfig::default(),
            test_functions: TestFunctionConfig::default(),
            kernel: SmoothingKernel::default(),
            approximants: ApproximantFamily::default(),
            bls: BlsConfig::default(),
            fourier: FourierConfig::default(),
            seed: 0,
            tol_scale: 1.0,
            out_dir: PathBuf::from("wedgenet-out"),
        }
    }
}

/// Largest two-sided dimension a run accepts.
pub const MAX_TWO_SIDED_DIM: usize = 165 * 165;

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if !(self.tol_scale > 0.0 && self.tol_scale.is_finite()) {
            return bad(format!(
                "tol_scale must be positive, got {}",
                self.tol_scale
            ));
        }
        if self.truncation.n_max == 0 {
            return bad("n_max must be at least 1".into());
        }
        let tr = self.truncation_arc()?;
        if tr.dim() * tr.dim() > MAX_TWO_SIDED_DIM {
            return bad(format!(
                "two-sided dimension {} exceeds {MAX_TWO_SIDED_DIM}; reduce modes or n_max",
                tr.dim() * tr.dim()
            ));
        }
        self.kernel
            .validate()
            .map_err(|e| Error::Config(e.to_string()))?;
        for f in &self.test_functions.left {
            f.validate().map_err(|e| Error::Config(e.to_string()))?;
            if !f.is_left_localized() {
                return bad(format!(
                    "left test function {:?} is not supported in the left half-line",
                    f.nominal_support()
                ));
            }
        }
        for g in &self.test_functions.right {
            g.validate().map_err(|e| Error::Config(e.to_string()))?;
            if !g.is_right_localized() {
                return bad(format!(
                    "right test function {:?} is not supported in the right half-line",
                    g.nominal_support()
                ));
            }
        }
        if self.test_functions.left.is_empty() || self.test_functions.right.is_empty() {
            return bad("need at least one left and one right test function".into());
        }
        if self.fourier.k_values.iter().any(|&k| k < 2) {
            return bad("Fourier orders must be at least 2".into());
        }
        WarpMatrix::new(self.bls.kappa).map_err(|e| Error::Config(e.to_string()))?;
        Ok(())
    }

    /// SHA-256 of the canonical JSON form, ignoring where output goes.
    pub fn hash(&self) -> String {
        let c = Self {
            out_dir: PathBuf::new(),
            ..self.clone()
        };
        sha256_hex(
            serde_json::to_string(&c)
                .expect("config serializes")
                .as_bytes(),
        )
    }

    pub fn grid(&self) -> Result<Arc<MomentumGrid>> {
        let g = &self.grid;
        MomentumGrid::build(g.scheme, g.modes, g.p_min, g.p_max)
            .map(Arc::new)
            .map_err(|e| Error::Config(e.to_string()))
    }

    pub fn truncation_arc(&self) -> Result<Arc<FockTruncation>> {
        FockTruncation::new(self.grid()?, self.truncation.n_max)
            .map_err(|e| Error::Config(e.to_string()))
    }

    pub fn basis(&self) -> Result<Arc<TwoSidedBasis>> {
        Ok(TwoSidedBasis::symmetric(self.truncation_arc()?))
    }
}

/// Exit status contract of the binary.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum ExitStatus {
    Pass = 0,
    DefectFailure = 1,
    ConfigError = 2,
    NonConvergence = 3,
}

pub fn exit_status_for(e: &Error) -> ExitStatus {
    match e {
        Error::Config(_) => ExitStatus::ConfigError,
        Error::NonConvergence(_) | Error::IllConditioned(_) => ExitStatus::NonConvergence,
        _ => ExitStatus::DefectFailure,
    }
}

/// Machine-readable error object.
pub fn error_json(e: &Error) -> serde_json::Value {
    let kind = match e {
        Error::Validation(_) => "validation",
        Error::Domain(_) => "domain",
        Error::GridMismatch => "grid_mismatch",
        Error::TruncationMismatch => "truncation_mismatch",
        Error::Precondition(_) => "precondition",
        Error::Overflow(_) => "overflow",
        Error::Unsupported(_) => "unsupported",
        Error::IllConditioned(_) => "ill_conditioned",
        Error::NonConvergence(_) => "non_convergence",
        Error::Config(_) => "config",
        Error::Io(_) => "io",
    };
    serde_json::json!({ "error": kind, "message": e.to_string(), "exit_code": exit_status_for(e) as i32 })
}

/// Reports plus named CSV tables.
#[derive(Clone, Debug, Default)]
pub struct Outcome {
    pub reports: Vec<CheckReport>,
    pub tables: Vec<(String, String)>,
}

impl Outcome {
    pub fn status(&self) -> ExitStatus {
        if self.reports.iter().all(|r| r.pass) {
            ExitStatus::Pass
        } else {
            ExitStatus::DefectFailure
        }
    }

    /// Writes `<stem>.json` with all reports and every table into `dir`.
    pub fn write(&self, dir: &Path, stem: &str) -> Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir)?;
        let mut written = Vec::new();
        let p = dir.join(format!("{stem}.json"));
        std::fs::write(
            &p,
            serde_json::to_string_pretty(&self.reports).expect("reports serialize"),
        )?;
        written.push(p);
        for (name, body) in &self.tables {
            let p = dir.join(name);
            std::fs::write(&p, body)?;
            written.push(p);
        }
        Ok(written)
    }
}

fn finish(
    cfg: &RunConfig,
    mut reports: Vec<CheckReport>,
    tables: Vec<(String, String)>,
) -> Outcome {
    let h = cfg.hash();
    for r in &mut reports {
        r.provenance.config_hash = Some(h.clone());
        r.provenance.seed = Some(cfg.seed);
        if cfg.tol_scale != 1.0 {
            r.scale_tolerances(cfg.tol_scale);
        }
    }
    Outcome { reports, tables }
}

/// Symmetric inner-function check on the grid points and a fixed sample set.
fn inner_function_check(phi: &InnerFunctionSpec, grid: &MomentumGrid) -> CheckReport {
    let mut samples: Vec<f64> = grid.points().to_vec();
    samples.extend((1..=200).map(|i| 0.05 * i as f64));
    let mut r = verify_symmetric_inner(phi, &samples, EXACT_TOL);
    r.provenance.grid_hash = Some(grid.hash());
    r
}

fn triple(cfg: &RunConfig, s: SMatrixSpec) -> Result<BorchersTripleSpec> {
    BorchersTripleSpec::new(
        s,
        cfg.test_functions.left.clone(),
        cfg.test_functions.right.clone(),
    )
}

/// Random wedge translations drawn per run.
pub const RANDOM_TRANSLATIONS: usize = 5;

/// The fixed sample set plus seeded draws with `t₀ > |t₁|`.
pub fn translation_points(seed: u64) -> Vec<(f64, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pts = TRANSLATION_SAMPLES.to_vec();
    for _ in 0..RANDOM_TRANSLATIONS {
        let t1: f64 = rng.random_range(-2.0..2.0);
        let t0 = t1.abs() + rng.random_range(0.05..2.0);
        pts.push((t0, t1));
    }
    pts
}

/// Every generator pair against its composed tolerance.
pub fn cmd_check_locality(cfg: &RunConfig) -> Result<Outcome> {
    cfg.validate()?;
    let basis = cfg.basis()?;
    let mut reports = Vec::new();
    if let Some(phi) = cfg.smatrix.raw_inner_function() {
        let mut r = inner_function_check(&phi, basis.left().grid());
        if !r.pass {
            r.log(
                "locality suite skipped: the S-matrix parameter is not a symmetric inner function",
            );
            reports.push(r);
            return Ok(finish(cfg, reports, vec![]));
        }
        reports.push(r);
    }
    let s = cfg.smatrix.build(&basis)?;
    let mut cond = verify_smatrix_conditions(&s, EXACT_TOL);
    // The twisted pairs need φ to compose their tolerance.
    let budgeted = s.one_particle_function().is_some();
    if !budgeted {
        cond.log("twisted locality pairs skipped: S has no one-particle function to compose a tolerance from");
    }
    reports.push(cond);
    let t = triple(cfg, s)?;
    let (left, right) = (&cfg.test_functions.left, &cfg.test_functions.right);
    let mut pairs = Vec::new();
    for f in left.iter().filter(|_| budgeted) {
        for fp in right {
            pairs.push(LocalityPair::LeftVsCommutantLeft {
                f: f.clone(),
                fp: fp.clone(),
            });
        }
    }
    for g in right.iter().filter(|_| budgeted) {
        for gp in left {
            pairs.push(LocalityPair::TwistedRightVsCommutantRight {
                g: g.clone(),
                gp: gp.clone(),
            });
        }
    }
    pairs.push(LocalityPair::LeftVsCommutantRight {
        f: left[0].clone(),
        gp: left[left.len() - 1].clone(),
    });
    pairs.push(LocalityPair::TwistedRightVsCommutantLeft {
        g: right[0].clone(),
        fp: right[right.len() - 1].clone(),
    });
    let locality: Vec<CheckReport> = pairs
        .par_iter()
        .map(|p| locality_check(&t, p))
        .collect::<Result<_>>()?;
    reports.extend(locality);
    let points = translation_points(cfg.seed);
    let mut cov = verify_translation_covariance(&t, &left[0], &right[0], &points)?;
    // Points with t₀ > |t₁| lie in the right wedge once the coordinates are swapped.
    let swapped: Vec<(f64, f64)> = points.iter().map(|&(a, b)| (b, a)).collect();
    let mut bad = 0;
    for f in left {
        for g in right {
            bad += wedge_inclusion_violations(f, g, &swapped);
        }
    }
    cov.defect(
        "wedge_inclusion_violations",
        bad as f64,
        0.0,
        "exact: half-line supports under wedge translations",
    );
    reports.push(cov);
    Ok(finish(cfg, reports, vec![]))
}

/// CSV of the S-matrix diagonal plus its header and condition report.
pub fn cmd_smatrix_table(cfg: &RunConfig) -> Result<Outcome> {
    cfg.validate()?;
    let basis = cfg.basis()?;
    let mut reports = Vec::new();
    if let Some(phi) = cfg.smatrix.raw_inner_function() {
        let r = inner_function_check(&phi, basis.left().grid());
        let ok = r.pass;
        reports.push(r);
        if !ok {
            return Ok(finish(cfg, reports, vec![]));
        }
    }
    let s = cfg.smatrix.build(&basis)?;
    let mut rep = verify_smatrix_conditions(&s, EXACT_TOL);
    rep.param("header", s.header());
    reports.push(rep);
    let mut buf = Vec::new();
    s.write_csv(&mut buf)?;
    let header = serde_json::to_string_pretty(&s.header()).expect("header serializes");
    let tables = vec![
        (
            "smatrix.csv".to_string(),
            String::from_utf8(buf).expect("utf-8 csv"),
        ),
        ("smatrix_header.json".to_string(), header),
    ];
    Ok(finish(cfg, reports, tables))
}

pub const SCATTER_HEADER: [&str; 7] = [
    "p",
    "q",
    "Re S_extracted",
    "Im S_extracted",
    "Re S_spec",
    "Im S_spec",
    "abs_error",
];

/// End-to-end extraction on the single-excitation sectors.
pub fn cmd_scatter(cfg: &RunConfig) -> Result<Outcome> {
    cfg.validate()?;
    let basis = cfg.basis()?;
    let s = cfg.smatrix.build(&basis)?;
    let t = triple(cfg, s)?;
    let l = single_excitations(basis.left());
    let r = single_excitations(basis.right());
    let ex = extract_smatrix(&t, &l, &r, &cfg.kernel, &cfg.approximants)?;
    let mut wr = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| Error::Io(std::io::Error::other(e));
    wr.write_record(SCATTER_HEADER).map_err(io)?;
    let ps = basis.left().grid().points();
    let qs = basis.right().grid().points();
    for a in 0..l.len() {
        for b in 0..r.len() {
            let j = a * r.len() + b;
            let (x, y) = (ex.extracted[(j, j)], ex.expected[(j, j)]);
            wr.write_record([
                ps[a].to_string(),
                qs[b].to_string(),
                x.re.to_string(),
                x.im.to_string(),
                y.re.to_string(),
                y.im.to_string(),
                (x - y).norm().to_string(),
            ])
            .map_err(io)?;
        }
    }
    let csv = String::from_utf8(
        wr.into_inner()
            .map_err(|e| Error::Io(std::io::Error::other(e.to_string())))?,
    )
    .expect("utf-8 csv");
    let weyl =
        |f: &TestFunctionSpec, tr: &Arc<FockTruncation>| weyl_operator(&embed(f, tr.grid())?, tr);
    let lo: Vec<FockOperator> = cfg
        .test_functions
        .left
        .iter()
        .map(|f| weyl(f, basis.left()))
        .collect::<Result<_>>()?;
    let ro: Vec<FockOperator> = cfg
        .test_functions
        .right
        .iter()
        .map(|g| weyl(g, basis.right()))
        .collect::<Result<_>>()?;
    let rec = verify_recovery_identities(&t, &lo, &ro, &cfg.kernel)?;
    Ok(finish(
        cfg,
        vec![ex.report, rec],
        vec![("scatter.csv".into(), csv)],
    ))
}

/// Warped convolution against the translation twist, and deformed collision phases.
pub fn cmd_bls_compare(cfg: &RunConfig) -> Result<Outcome> {
    cfg.validate()?;
    let basis = cfg.basis()?;
    let kappa = cfg.bls.kappa;
    let t = BorchersTripleSpec::new(build_translation_smatrix(kappa, &basis)?, vec![], vec![])?;
    let mut reports = Vec::new();
    for f in &cfg.test_functions.left {
        reports.push(verify_coincidence(&t, f, kappa)?);
    }
    let warped = BlsTriple::new(&basis, WarpMatrix::new(kappa)?);
    let l = single_excitations(basis.left());
    let r = single_excitations(basis.right());
    let n = l.len().min(3);
    for a in 0..n {
        for b in 0..n {
            let mut rep =
                verify_deformed_collision(&warped, &l[a], &r[b], &cfg.kernel, &cfg.approximants)?;
            rep.param("p", basis.left().grid().points()[a]);
            rep.param("q", basis.right().grid().points()[b]);
            reports.push(rep);
        }
    }
    Ok(finish(cfg, reports, vec![]))
}

/// Even and odd witnesses for the `Z_2` fixed-point criterion, labelled by parity.
///
/// Even: `x_0⊗1`, `1⊗y_0` and `x_0⊗y_0` from the parity components of Weyl
/// operators. Odd: `x_1⊗1`, `1⊗y_1`, and a full Weyl generator.
pub fn parity_witnesses(
    basis: &Arc<TwoSidedBasis>,
    left: &[TestFunctionSpec],
    right: &[TestFunctionSpec],
) -> Result<Vec<(String, TwoSidedOperator, bool)>> {
    let tr = basis.left();
    let po = parity_charge(tr);
    let mut out = Vec::new();
    let w = |f: &TestFunctionSpec| weyl_operator(&embed(f, tr.grid())?, tr);
    for (i, f) in left.iter().enumerate() {
        let x = w(f)?;
        let x0 = fourier_component(&x, &po, 2, 0)?;
        let x1 = fourier_component(&x, &po, 2, 1)?;
        out.push((
            format!("even_left_{i}"),
            TwoSidedOperator::left(basis, &x0)?,
            true,
        ));
        out.push((
            format!("odd_left_{i}"),
            TwoSidedOperator::left(basis, &x1)?,
            false,
        ));
    }
    for (i, g) in right.iter().enumerate() {
        let y = w(g)?;
        let y0 = fourier_component(&y, &po, 2, 0)?;
        let y1 = fourier_component(&y, &po, 2, 1)?;
        out.push((
            format!("even_right_{i}"),
            TwoSidedOperator::right(basis, &y0)?,
            true,
        ));
        out.push((
            format!("odd_right_{i}"),
            TwoSidedOperator::right(basis, &y1)?,
            false,
        ));
    }
    if let (Some(f), Some(g)) = (left.first(), right.first()) {
        let x0 = TwoSidedOperator::left(basis, &fourier_component(&w(f)?, &po, 2, 0)?)?;
        let y0 = TwoSidedOperator::right(basis, &fourier_component(&w(g)?, &po, 2, 0)?)?;
        out.push(("even_product".into(), x0.compose(&y0)?, true));
        out.push((
            "odd_full_weyl".into(),
            TwoSidedOperator::left(basis, &w(f)?)?,
            false,
        ));
    }
    Ok(out)
}

/// `Z_k` decompositions, the adjoint-action lemma and the fixed-point classifier.
pub fn cmd_fourier(cfg: &RunConfig) -> Result<Outcome> {
    cfg.validate()?;
    let basis = cfg.basis()?;
    let tr = basis.left();
    let mut reports = Vec::new();
    let x = weyl_operator(&embed(&cfg.test_functions.left[0], tr.grid())?, tr)?;
    let n_op = ChargeKind::Number.operator(tr);
    let po = parity_charge(tr);
    for &k in &cfg.fourier.k_values {
        let mut rep = CheckReport::new(format!("fourier_z{k}")).with_grid_hash(tr.grid().hash());
        rep.param("k", k);
        let mut sum =
            FockOperator::dense(tr.clone(), ndarray::Array2::zeros((tr.dim(), tr.dim())))?;
        let mut eig = 0.0f64;
        for n in 0..k {
            let xn = fourier_component(&x, &n_op, k, n)?;
            eig = eig.max(eigen_relation_defect(
                &xn,
                &n_op,
                2.0 * std::f64::consts::PI / k as f64,
                n as f64,
            )?);
            sum = sum.add(&xn)?;
        }
        let rec = sum.sub(&x)?.frobenius_norm() / x.frobenius_norm();
        rep.defect(
            "reconstruction",
            rec,
            EXACT_TOL,
            "exact: discrete Fourier partition of unity",
        );
        rep.defect(
            "eigen_relation",
            eig,
            EXACT_TOL,
            "exact: character projection",
        );
        reports.push(rep);
    }
    for &kappa in &cfg.fourier.kappas {
        for m in -1..=1 {
            let xm = u1_component(&x, &po, m)?;
            let mut r = verify_adjoint_action(&xm, m, &po, kappa, &basis)?;
            r.name = format!("adjoint_action.parity.m{m}");
            reports.push(r);
        }
        for m in -2..=2 {
            let xm = u1_component(&x, &n_op, m)?;
            let mut r = verify_adjoint_action(&xm, m, &n_op, kappa, &basis)?;
            r.name = format!("adjoint_action.number.m{m}");
            reports.push(r);
        }
    }
    let t = BorchersTripleSpec::new(build_cyclic_smatrix(&po, 2, 1, &basis)?, vec![], vec![])?;
    let witnesses = parity_witnesses(&basis, &cfg.test_functions.left, &cfg.test_functions.right)?;
    let mut rep = CheckReport::new("fixed_point_classification").with_grid_hash(tr.grid().hash());
    let mut wrong = 0usize;
    for (label, z, even) in &witnesses {
        let r = verify_fixed_point_criterion(z, &t, (-4.0, 4.0), None)?;
        let says_fixed = r.find("forbidden_components").is_some_and(|d| d.passes());
        if says_fixed != *even {
            wrong += 1;
            rep.log(format!(
                "{label}: classified as {} but constructed {}",
                says_fixed, even
            ));
        }
        if let Some(d) = r.find("reconstruction") {
            rep.defect(
                format!("{label}.reconstruction"),
                d.value,
                d.tolerance,
                d.tolerance_origin.clone(),
            );
        }
    }
    rep.param("witnesses", witnesses.len());
    rep.defect(
        "misclassifications",
        wrong as f64,
        0.0,
        "exact: constructed parity labels",
    );
    reports.push(rep);
    Ok(finish(cfg, reports, vec![]))
}

/// Sizes the global worker pool. Only the first call has an effect.
pub fn set_jobs(jobs: usize) -> Result<()> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build_global()
        .map_err(|e| Error::Config(format!("cannot size worker pool: {e}")))
}

/// Recomputes and checks the pinned baselines.
pub fn cmd_calibrate(cfg: &RunConfig) -> Result<Outcome> {
    cfg.validate()?;
    Ok(finish(cfg, vec![calibration::calibrate()?], vec![]))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_round_trip_and_hash() {
        let c = RunConfig::default();
        let back = RunConfig::from_toml(&c.to_toml()).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.hash(), c.hash());
        let partial =
            RunConfig::from_toml("seed = 7\n[smatrix]\nvariant = \"translation\"\nkappa = 0.5\n")
                .unwrap();
        assert_eq!(partial.seed, 7);
        assert_eq!(partial.smatrix, SMatrixConfig::Translation { kappa: 0.5 });
        assert_ne!(partial.hash(), c.hash());
        assert!(matches!(
            RunConfig::from_toml("bogus = 1"),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn validation_rejects_bad_values() {
        let mut c = RunConfig::default();
        c.truncation.n_max = 0;
        assert!(matches!(c.validate(), Err(Error::Config(_))));
        let mut c = RunConfig::default();
        c.test_functions.left[0].center = 2.0;
        assert!(matches!(c.validate(), Err(Error::Config(_))));
        let mut c = RunConfig::default();
        c.grid.modes = 12;
        assert!(matches!(c.validate(), Err(Error::Config(_))));
    }

    #[test]
    fn broken_phi_fails_with_named_defect() {
        let mut c = RunConfig::default();
        c.smatrix = SMatrixConfig::InnerFunction {
            zeros: vec![[0.5, 1.0]],
            kappa: 0.0,
            nu: 0.0,
            sign: 1.0,
        };
        let out = cmd_check_locality(&c).unwrap();
        assert_eq!(out.status(), ExitStatus::DefectFailure);
        assert!(!out.reports[0].find("reflection_symmetry").unwrap().passes());
    }

    #[test]
    fn exit_codes() {
        assert_eq!(
            exit_status_for(&Error::Config("x".into())),
            ExitStatus::ConfigError
        );
        assert_eq!(
            exit_status_for(&Error::NonConvergence("x".into())),
            ExitStatus::NonConvergence
        );
        assert_eq!(
            exit_status_for(&Error::Unsupported("x".into())),
            ExitStatus::DefectFailure
        );
        assert_eq!(error_json(&Error::Config("x".into()))["exit_code"], 2);
    }

    #[test]
    fn fourier_suite_passes_on_default_config() {
        let mut c = RunConfig::default();
        c.grid.modes = 3;
        c.truncation.n_max = 2;
        let out = cmd_fourier(&c).unwrap();
        for r in &out.reports {
            assert!(r.pass, "{}", r.to_json());
        }
    }
}
