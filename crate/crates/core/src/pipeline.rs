//! Staged driver from the group to the quaternionic check, writing artifacts as it goes.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::config::{RunConfig, Stage};
use crate::curvature::{
    curvature_tensor, holomorphic_sectional, pairing_symmetry, pairing_table, CurvatureTensor, PairingSymmetry,
    PairingTable, TensorExport, TensorSymmetry,
};
use crate::error::Result;
use crate::fuchsian::{octagon_group, FuchsianGroup, GroupWordSet};
use crate::qdiff::{
    beltrami_fields, build_qdiff_basis_with, gram_matrix, orthonormalize, series_words, BasisExport, BeltramiField,
    GramMatrix, QdiffBasis, SeriesOptions,
};
use crate::rankone::{lemma51_check, Lemma51Report};
use crate::report::{ReportEntry, VerificationReport};
use crate::smoothing::SmoothingOperator;
use crate::surface::{
    assemble_laplacian, build_mesh, green_kernel, DOperator, DiscreteSurface, GreenKernel, GreenReport, MeshQuality,
};
use crate::surrogate::{run_suite, SuiteSummary};
use crate::wedge::{
    analyze_spectrum, assemble_q, j_wedge_matrix, kernel_report, spectrum_csv, IntegralForm, KernelReport,
    SpectrumReport, WedgeBasis, WedgeElement, WedgeOperator,
};

/// Spectral gap ratio required for a clean kernel count.
pub const MIN_GAP_RATIO: f64 = 1e2;
/// Two-path agreement, relative to `||Q|| ||x||^2`.
pub const TWO_PATH_TOLERANCE: f64 = 1e-6;
pub const OPERATOR_TOLERANCE: f64 = 1e-10;
pub const KERNEL_TOLERANCE: f64 = 1e-8;
pub const TENSOR_TOLERANCE: f64 = 1e-9;
pub const QUATERNIONIC_TOLERANCE: f64 = 1e-12;

/// Writes JSON and binary outputs into one directory; a no-op without one.
#[derive(Debug, Default)]
pub struct ArtifactSink {
    dir: Option<PathBuf>,
    pub written: Vec<PathBuf>,
}

#[derive(Serialize)]
struct Stamped<'a, T: Serialize> {
    config_hash: &'a str,
    #[serde(flatten)]
    data: &'a T,
}

impl ArtifactSink {
    pub fn new(dir: Option<&Path>) -> Result<Self> {
        if let Some(d) = dir {
            fs::create_dir_all(d)?;
        }
        Ok(Self { dir: dir.map(Path::to_path_buf), written: Vec::new() })
    }

    pub fn path(&self, name: &str) -> Option<PathBuf> {
        self.dir.as_ref().map(|d| d.join(name))
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        if let Some(p) = self.path(name) {
            let mut text = serde_json::to_string_pretty(value)?;
            text.push('\n');
            fs::write(&p, text)?;
            self.written.push(p);
        }
        Ok(())
    }

    fn stamped<T: Serialize>(&mut self, name: &str, hash: &str, value: &T) -> Result<()> {
        self.json(name, &Stamped { config_hash: hash, data: value })
    }

    pub fn text(&mut self, name: &str, body: &str) -> Result<()> {
        if let Some(p) = self.path(name) {
            fs::write(&p, body)?;
            self.written.push(p);
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WordSummary {
    pub max_length: usize,
    pub max_displacement: Option<f64>,
    pub element_count: usize,
    /// Element count per word length.
    pub by_length: Vec<usize>,
}

impl WordSummary {
    pub fn of(words: &GroupWordSet) -> Self {
        let mut by_length = vec![0; words.max_length + 1];
        for &l in &words.lengths {
            by_length[l] += 1;
        }
        Self { max_length: words.max_length, max_displacement: words.max_displacement, element_count: words.len(), by_length }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OperatorChecks {
    /// `max |<Df, g> - <f, Dg>| / (|f| |g|)` in the weighted inner product.
    pub self_adjoint: f64,
    /// `max(0, -<Df, f> / |f|^2)`.
    pub positivity_deficit: f64,
    /// `max |D(1) - 1|`.
    pub constant_residual: f64,
}

impl OperatorChecks {
    pub fn worst(&self) -> f64 {
        self.self_adjoint.max(self.positivity_deficit).max(self.constant_residual)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KernelChecks {
    pub green: GreenReport,
    /// `max |D f - G (w f)| / max |D f|` over random `f`.
    pub operator_consistency: f64,
    pub quality: MeshQuality,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TensorChecks {
    pub symmetry: TensorSymmetry,
    pub pairing: PairingSymmetry,
    /// Smallest real part of `R_iiii`.
    pub diagonal_min: f64,
    /// Largest `|Im R_iiii| / max |R|`.
    pub diagonal_imag: f64,
    pub sectional: Vec<f64>,
}

impl TensorChecks {
    pub fn worst_symmetry(&self) -> f64 {
        self.symmetry.worst().max(self.pairing.swap).max(self.pairing.conjugation).max(self.diagonal_imag)
    }

    pub fn passes(&self, tol: f64) -> bool {
        self.worst_symmetry() <= tol && self.diagonal_min > 0.0 && self.sectional.iter().all(|&k| k < 0.0)
    }
}

/// Quadratic-form checks; values are relative to `max |eigenvalue of Q|` unless noted.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FormChecks {
    pub samples: usize,
    /// `max |x^T Q x - integral form| / (||Q||_F ||x||^2)`.
    pub two_path_error: f64,
    /// Stand-alone cross term against the polarized combined form, same scaling.
    pub cross_term_residual: f64,
    /// `max |sum G L L^T| / sum G |L|^2`.
    pub cauchy_schwarz_ratio: f64,
    /// Largest eigenvalue of `Q` on `span{x_i ^ x_j}`.
    pub real_block_max: f64,
    /// Largest eigenvalue of `Q` on `span{y_i ^ y_j}`.
    pub imaginary_block_max: f64,
    /// Largest `|Q|` on antisymmetric `x_i ^ y_j` coefficients, tensor path.
    pub antisymmetric_max: f64,
    pub antisymmetric_integral_max: f64,
    /// Largest `|Q(A, A)| / |A|^2` for `A = B - J(B)`, tensor path.
    pub j_range_max: f64,
    pub j_range_integral_max: f64,
    /// Largest `Q(A, A) / |A|^2` for `A = B + J(B)`.
    pub j_fixed_max: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SurfaceChecks {
    pub operator: OperatorChecks,
    pub kernel: KernelChecks,
    pub tensor: TensorChecks,
    pub forms: Option<FormChecks>,
}

/// Everything a run produced; later stages are `None` when not selected.
pub struct RunOutcome {
    pub config: RunConfig,
    pub config_hash: String,
    pub report: VerificationReport,
    pub group: Option<FuchsianGroup>,
    pub words: Option<Arc<GroupWordSet>>,
    pub series: Option<QdiffBasis>,
    pub surface: Option<DiscreteSurface>,
    pub raw_fields: Option<Vec<BeltramiField>>,
    pub gram: Option<GramMatrix>,
    /// Orthonormal fields.
    pub fields: Option<Vec<BeltramiField>>,
    pub operator: Option<DOperator>,
    pub green: Option<GreenKernel>,
    pub pairings: Option<PairingTable>,
    pub tensor: Option<CurvatureTensor>,
    pub q: Option<WedgeOperator>,
    pub spectrum: Option<SpectrumReport>,
    pub eigenvectors: Option<DMatrix<f64>>,
    pub kernel: Option<KernelReport>,
    pub checks: Option<SurfaceChecks>,
    pub surrogate: Option<SuiteSummary>,
    pub rankone: Option<Lemma51Report>,
    pub artifacts: Vec<PathBuf>,
}

impl RunOutcome {
    fn new(config: &RunConfig) -> Self {
        let config_hash = config.hash();
        Self {
            config: config.clone(),
            report: VerificationReport::new(&config_hash),
            config_hash,
            group: None,
            words: None,
            series: None,
            surface: None,
            raw_fields: None,
            gram: None,
            fields: None,
            operator: None,
            green: None,
            pairings: None,
            tensor: None,
            q: None,
            spectrum: None,
            eigenvectors: None,
            kernel: None,
            checks: None,
            surrogate: None,
            rankone: None,
            artifacts: Vec::new(),
        }
    }
}

pub fn series_options(config: &RunConfig) -> SeriesOptions {
    SeriesOptions {
        word_length: config.word_length,
        max_displacement: Some(config.max_displacement),
        max_elements: config.max_elements,
        eps_auto: config.eps_auto,
        ..SeriesOptions::default()
    }
}

/// Runs the selected stages and writes artifacts into `config.out`.
pub fn run(config: &RunConfig) -> Result<RunOutcome> {
    execute(config, Some(&config.out))
}

/// Runs the selected stages; artifacts go to `out` when given.
pub fn execute(config: &RunConfig, out: Option<&Path>) -> Result<RunOutcome> {
    config.validate()?;
    let mut sink = ArtifactSink::new(out)?;
    let mut run = RunOutcome::new(config);
    let result = drive(&mut run, &mut sink);
    run.artifacts = sink.written.clone();
    result?;
    sink.json("report.json", &run.report)?;
    run.artifacts = sink.written;
    Ok(run)
}

fn staged<T>(stage: Stage, r: Result<T>) -> Result<T> {
    r.map_err(|e| e.in_stage(stage.name()))
}

fn drive(run: &mut RunOutcome, sink: &mut ArtifactSink) -> Result<()> {
    let cfg = run.config.clone();
    let hash = run.config_hash.clone();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.sample_seed);

    if !cfg.runs(Stage::Group) {
        return Ok(());
    }
    let group = staged(Stage::Group, octagon_group(cfg.genus))?;
    staged(Stage::Group, sink.stamped("group.json", &hash, &group.export()))?;
    run.group = Some(group.clone());

    if !cfg.runs(Stage::Words) {
        return Ok(());
    }
    let opts = series_options(&cfg);
    let words = staged(Stage::Words, series_words(&group, &opts))?;
    staged(Stage::Words, sink.stamped("words.json", &hash, &WordSummary::of(&words)))?;
    run.words = Some(Arc::clone(&words));

    if !cfg.runs(Stage::Qdiff) {
        return Ok(());
    }
    let series = staged(Stage::Qdiff, build_qdiff_basis_with(&group, words, 3 * cfg.genus as usize - 3, &opts))?;
    staged(Stage::Qdiff, sink.stamped("series.json", &hash, &series.report))?;
    run.series = Some(series.clone());

    if !cfg.runs(Stage::Mesh) {
        return Ok(());
    }
    let (surface, raw, gram, fields) = staged(Stage::Mesh, mesh_stage(&cfg, &group, &series))?;
    staged(Stage::Mesh, sink.json("mesh.json", &surface.export(&hash)))?;
    #[derive(Serialize)]
    struct BasisArtifact {
        #[serde(flatten)]
        basis: BasisExport,
        gram: Vec<Vec<[f64; 2]>>,
        gram_eigenvalues: Vec<f64>,
        orthonormal: bool,
    }
    let n = gram.n();
    staged(
        Stage::Mesh,
        sink.json(
            "basis.json",
            &BasisArtifact {
                basis: BasisExport::new(&hash, &series.report.degrees, &surface.nodes, &surface.weights, &fields),
                gram: (0..n).map(|i| (0..n).map(|j| [gram.entries[(i, j)].re, gram.entries[(i, j)].im]).collect()).collect(),
                gram_eigenvalues: gram.eigenvalues(),
                orthonormal: true,
            },
        ),
    )?;
    run.surface = Some(surface.clone());
    run.raw_fields = Some(raw);
    run.gram = Some(gram.clone());
    run.fields = Some(fields.clone());

    if !cfg.runs(Stage::Green) {
        return Ok(());
    }
    let mut op = staged(Stage::Green, DOperator::new(&surface))?;
    op.tolerance = cfg.solver_tolerance;
    let green = staged(Stage::Green, green_kernel(&surface, &op, cfg.max_kernel_nodes))?;
    if let (Some(bin), Some(side)) = (sink.path("green.bin"), sink.path("green.json")) {
        staged(Stage::Green, green.write(&bin, &side, &hash, &surface.node_hash()))?;
        sink.written.extend([bin, side]);
    }
    let operator_checks = staged(Stage::Green, operator_checks(&op, &mut rng))?;
    let kernel_checks = staged(Stage::Green, kernel_checks(&surface, &op, &green, &mut rng))?;
    record_operator_entries(&mut run.report, &operator_checks, &kernel_checks)?;
    run.operator = Some(op.clone());
    run.green = Some(green.clone());

    if !cfg.runs(Stage::Pairings) {
        return Ok(());
    }
    let pairings = staged(Stage::Pairings, pairing_table(&fields, &op))?;
    run.pairings = Some(pairings.clone());

    if !cfg.runs(Stage::Tensor) {
        return Ok(());
    }
    let tensor = staged(Stage::Tensor, curvature_tensor(&pairings))?;
    let identity = GramMatrix { entries: DMatrix::identity(n, n) };
    let sectional: Vec<f64> = (0..n).map(|i| holomorphic_sectional(&tensor, &identity, i)).collect();
    staged(Stage::Tensor, sink.json("tensor.json", &TensorExport::new(&hash, &tensor, sectional.clone())))?;
    let max_r = tensor.symmetry.max_abs.max(f64::MIN_POSITIVE);
    let tensor_checks = TensorChecks {
        symmetry: tensor.symmetry.clone(),
        pairing: pairing_symmetry(&pairings),
        diagonal_min: (0..n).map(|i| tensor.get(i, i, i, i).re).fold(f64::INFINITY, f64::min),
        diagonal_imag: (0..n).map(|i| tensor.get(i, i, i, i).im.abs() / max_r).fold(0.0, f64::max),
        sectional,
    };
    run.report.record(ReportEntry::new(
        "Prop2.4",
        tensor_checks.passes(TENSOR_TOLERANCE),
        tensor_checks.worst_symmetry(),
        TENSOR_TOLERANCE,
        format!(
            "min R_iiii={:.6e} holomorphic sectional={:?}",
            tensor_checks.diagonal_min,
            tensor_checks.sectional.iter().map(|k| format!("{k:.6e}")).collect::<Vec<_>>()
        ),
    ))?;
    run.tensor = Some(tensor.clone());

    if !cfg.runs(Stage::Q) {
        return Ok(());
    }
    let q = staged(Stage::Q, assemble_q(&tensor))?;
    run.q = Some(q.clone());

    if !cfg.runs(Stage::Spectrum) {
        return Ok(());
    }
    let (spectrum, vectors) = analyze_spectrum(&q, cfg.tau_rel);
    let jmat = j_wedge_matrix(n);
    let kernel = staged(Stage::Spectrum, kernel_report(&q, &jmat, cfg.tau_rel))?;
    let j_fixed_max = j_fixed_max(&q, &jmat, spectrum.max_abs, &mut rng);
    #[derive(Serialize)]
    struct SpectrumArtifact<'a> {
        spectrum: &'a SpectrumReport,
        kernel: &'a KernelReport,
        j_fixed_max: f64,
        q: Vec<Vec<f64>>,
        labels: Vec<String>,
    }
    let basis = WedgeBasis::new(n);
    staged(
        Stage::Spectrum,
        sink.stamped(
            "spectrum.json",
            &hash,
            &SpectrumArtifact {
                spectrum: &spectrum,
                kernel: &kernel,
                j_fixed_max,
                q: q.matrix.row_iter().map(|r| r.iter().copied().collect()).collect(),
                labels: (0..basis.dim()).map(|k| basis.label(k)).collect(),
            },
        ),
    )?;
    staged(Stage::Spectrum, sink.text("spectrum.csv", &spectrum_csv(&spectrum)))?;
    run.report.record(spectral_entry(&spectrum, &kernel, j_fixed_max, cfg.tau_rel))?;
    run.spectrum = Some(spectrum.clone());
    run.eigenvectors = Some(vectors);
    run.kernel = Some(kernel);

    if !cfg.runs(Stage::Checks) {
        return Ok(());
    }
    let forms = staged(Stage::Checks, form_checks(&q, &fields, &green, &spectrum, cfg.two_path_samples, &mut rng))?;
    record_form_entries(&mut run.report, &forms, cfg.tau_rel)?;
    let checks = SurfaceChecks { operator: operator_checks, kernel: kernel_checks, tensor: tensor_checks, forms: Some(forms) };
    staged(Stage::Checks, sink.stamped("checks.json", &hash, &checks))?;
    if checks.kernel.green.min_entry <= 0.0 {
        run.report.warnings.push(format!(
            "Green kernel has non-positive entries (min {:.3e}) at mesh level {}; mesh quality: min angle {:.1} deg, {} positive stiffness off-diagonals",
            checks.kernel.green.min_entry, cfg.mesh_level, checks.kernel.quality.min_angle_deg, checks.kernel.quality.positive_offdiag_count
        ));
    }
    run.checks = Some(checks);

    if !cfg.runs(Stage::Surrogate) {
        return Ok(());
    }
    let suite = surrogate_stage(&cfg, &hash, sink)?;
    if let Some(entry) = run.report.get("Thm1.1").cloned() {
        let passed = entry.passed() && suite.all_passed;
        let detail = format!("{}; surrogate {}", entry.detail, surrogate_summary(&suite));
        run.report.record(ReportEntry::new("Thm1.1", passed, entry.residual, entry.tolerance, detail))?;
    }
    run.surrogate = Some(suite);

    if !cfg.runs(Stage::Rankone) {
        return Ok(());
    }
    let lemma = rankone_stage(&cfg, &hash, sink)?;
    run.report.record(quaternionic_entry(&lemma))?;
    run.rankone = Some(lemma);
    Ok(())
}

type MeshProducts = (DiscreteSurface, Vec<BeltramiField>, GramMatrix, Vec<BeltramiField>);

fn mesh_stage(cfg: &RunConfig, group: &FuchsianGroup, series: &QdiffBasis) -> Result<MeshProducts> {
    let mut surface = build_mesh(group, cfg.mesh_level, cfg.max_mesh_nodes)?;
    assemble_laplacian(&mut surface)?;
    let raw = beltrami_fields(&series.series, &surface.nodes);
    let gram = gram_matrix(&raw, &surface.weights)?;
    let (fields, _) = orthonormalize(&raw, &gram)?;
    Ok((surface, raw, gram, fields))
}

fn random_vec(len: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..len).map(|_| rng.sample::<f64, _>(StandardNormal)).collect()
}

fn weighted_dot(w: &[f64], a: &[f64], b: &[f64]) -> f64 {
    w.iter().zip(a).zip(b).map(|((w, x), y)| w * x * y).sum()
}

pub fn operator_checks(op: &DOperator, rng: &mut ChaCha8Rng) -> Result<OperatorChecks> {
    let w = op.weights().to_vec();
    let mut out = OperatorChecks { self_adjoint: 0.0, positivity_deficit: 0.0, constant_residual: 0.0 };
    for _ in 0..20 {
        let f = random_vec(w.len(), rng);
        let g = random_vec(w.len(), rng);
        let (df, dg) = (op.apply_real(&f)?, op.apply_real(&g)?);
        let (nf, ng) = (weighted_dot(&w, &f, &f).sqrt(), weighted_dot(&w, &g, &g).sqrt());
        let asym = (weighted_dot(&w, &df, &g) - weighted_dot(&w, &f, &dg)).abs() / (nf * ng);
        out.self_adjoint = out.self_adjoint.max(asym);
        out.positivity_deficit = out.positivity_deficit.max(-weighted_dot(&w, &df, &f) / (nf * nf));
    }
    let one = op.apply_real(&vec![1.0; w.len()])?;
    out.constant_residual = one.iter().map(|u| (u - 1.0).abs()).fold(0.0, f64::max);
    Ok(out)
}

pub fn kernel_checks(surface: &DiscreteSurface, op: &DOperator, green: &GreenKernel, rng: &mut ChaCha8Rng) -> Result<KernelChecks> {
    let mut consistency = 0.0f64;
    for _ in 0..20 {
        let f = random_vec(surface.len(), rng);
        let (a, b) = (op.apply_real(&f)?, green.apply_real(&f)?);
        let scale = a.iter().map(|x| x.abs()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
        consistency = consistency.max(a.iter().zip(&b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max) / scale);
    }
    Ok(KernelChecks { green: green.validate(), operator_consistency: consistency, quality: surface.quality()? })
}

fn record_operator_entries(report: &mut VerificationReport, op: &OperatorChecks, k: &KernelChecks) -> Result<()> {
    report.record(ReportEntry::new(
        "Prop2.2",
        op.worst() <= OPERATOR_TOLERANCE,
        op.worst(),
        OPERATOR_TOLERANCE,
        format!(
            "self-adjoint={:.3e} positivity deficit={:.3e} |D(1)-1|={:.3e}",
            op.self_adjoint, op.positivity_deficit, op.constant_residual
        ),
    ))?;
    let residual = k.green.asymmetry.max(k.green.row_sum_error).max(k.operator_consistency);
    report.record(ReportEntry::new(
        "Prop2.3",
        k.green.passes() && k.operator_consistency <= KERNEL_TOLERANCE,
        residual,
        KERNEL_TOLERANCE,
        format!(
            "min G={:.6e} asymmetry={:.3e} row sums={:.3e} D vs G={:.3e} min angle={:.1} deg",
            k.green.min_entry, k.green.asymmetry, k.green.row_sum_error, k.operator_consistency, k.quality.min_angle_deg
        ),
    ))
}

/// Largest `Q(A, A) / (|A|^2 max|lambda|)` over random `A = B + J(B)`.
pub fn j_fixed_max(q: &WedgeOperator, jmat: &DMatrix<f64>, max_abs: f64, rng: &mut ChaCha8Rng) -> f64 {
    let m = q.matrix.nrows();
    let scale = max_abs.max(f64::MIN_POSITIVE);
    (0..20)
        .map(|_| {
            let b = nalgebra::DVector::from_vec(random_vec(m, rng));
            let a = &b + jmat * &b;
            q.quadratic(a.as_slice()) / (a.norm_squared() * scale)
        })
        .fold(f64::NEG_INFINITY, f64::max)
}

pub fn spectral_entry(s: &SpectrumReport, k: &KernelReport, j_fixed_max: f64, tau_rel: f64) -> ReportEntry {
    let m = s.eigenvalues.len();
    let passed = s.positive == 0
        && s.zero == s.kernel_dim_expected
        && s.negative == m - s.kernel_dim_expected
        && s.gap_ratio >= MIN_GAP_RATIO
        && k.range_residual <= tau_rel
        && k.rank == k.expected_rank
        && j_fixed_max < -tau_rel;
    let mut detail = String::new();
    if s.positive > 0 {
        detail.push_str(&format!(
            "positive eigenvalue {:.6e} (magnitude {:.6e}, tau {:.3e}); ",
            s.max_eigenvalue,
            s.max_eigenvalue.abs(),
            s.tau
        ));
    }
    detail.push_str(&format!(
        "negative={} zero={} positive={} expected kernel={} gap ratio={:.3e} |Q(I-J)|/|Q|={:.3e} rank={}/{} max Q on J-fixed={:.3e}",
        s.negative, s.zero, s.positive, s.kernel_dim_expected, s.gap_ratio, k.range_residual, k.rank, k.expected_rank, j_fixed_max
    ));
    let scale = s.max_abs.max(f64::MIN_POSITIVE);
    ReportEntry::new("Thm1.1", passed, s.max_eigenvalue / scale, tau_rel, detail)
}

fn block_max(q: &WedgeOperator, keep: impl Fn(usize, usize) -> bool) -> f64 {
    let basis = WedgeBasis::new(q.n);
    let idx: Vec<usize> = (0..basis.dim()).filter(|&k| keep(basis.pairs[k].0, basis.pairs[k].1)).collect();
    if idx.is_empty() {
        return f64::NEG_INFINITY;
    }
    let sub = DMatrix::from_fn(idx.len(), idx.len(), |r, c| q.matrix[(idx[r], idx[c])]);
    sub.symmetric_eigenvalues().max()
}

pub fn form_checks(
    q: &WedgeOperator,
    fields: &[BeltramiField],
    green: &GreenKernel,
    spectrum: &SpectrumReport,
    samples: usize,
    rng: &mut ChaCha8Rng,
) -> Result<FormChecks> {
    let n = q.n;
    let form = IntegralForm::new(fields, green)?;
    let qnorm = q.matrix.norm().max(f64::MIN_POSITIVE);
    let lam = spectrum.max_abs.max(f64::MIN_POSITIVE);
    let sq = |x: &[f64]| x.iter().map(|v| v * v).sum::<f64>();

    let mut two_path = 0.0f64;
    let mut cross = 0.0f64;
    let mut cs = 0.0f64;
    for _ in 0..samples {
        let e = WedgeElement::random(n, rng);
        let x = e.coords();
        two_path = two_path.max((q.quadratic(&x) - form.evaluate(&e)).abs() / (qnorm * sq(&x)));
        let scale = qnorm * e.a.norm() * e.b.norm();
        cross = cross.max((form.cross_closed_form(&e.a, &e.b) - form.cross_polarized(&e.a, &e.b)).abs() / scale);
        let coeff = DMatrix::from_fn(n, n, |_, _| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)));
        let (c, m) = form.cauchy_schwarz(&coeff);
        cs = cs.max(c / m);
    }

    let antisym: Vec<WedgeElement> = (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
        .map(|(i, j)| {
            let mut e = WedgeElement::zeros(n);
            e.b[(i, j)] = 1.0;
            e.b[(j, i)] = -1.0;
            e
        })
        .collect();
    let mut antisymmetric_max = 0.0f64;
    let mut antisymmetric_integral_max = 0.0f64;
    if !antisym.is_empty() {
        let cols: Vec<Vec<f64>> = antisym.iter().map(|e| e.coords()).collect();
        let v = DMatrix::from_fn(q.matrix.nrows(), cols.len(), |r, c| cols[c][r] / sq(&cols[c]).sqrt());
        let restricted = v.transpose() * &q.matrix * &v;
        antisymmetric_max = restricted.symmetric_eigenvalues().amax() / lam;
        for _ in 0..10 {
            let mut e = WedgeElement::zeros(n);
            for basis_e in &antisym {
                e.b += &basis_e.b * rng.sample::<f64, _>(StandardNormal);
            }
            let x = e.coords();
            let zero = DMatrix::zeros(n, n);
            antisymmetric_integral_max = antisymmetric_integral_max.max(form.terms(&zero, &e.b).total().abs() / (lam * sq(&x)));
        }
    }

    let jmat = j_wedge_matrix(n);
    let mut j_range_max = 0.0f64;
    let mut j_range_integral_max = 0.0f64;
    for _ in 0..10 {
        let b = nalgebra::DVector::from_vec(random_vec(q.matrix.nrows(), rng));
        let a = &b - &jmat * &b;
        let x = a.as_slice();
        j_range_max = j_range_max.max(q.quadratic(x).abs() / (lam * sq(x)));
        let e = WedgeElement::from_coords(n, x);
        j_range_integral_max = j_range_integral_max.max(form.evaluate(&e).abs() / (lam * sq(x)));
    }

    Ok(FormChecks {
        samples,
        two_path_error: two_path,
        cross_term_residual: cross,
        cauchy_schwarz_ratio: cs,
        real_block_max: block_max(q, |a, b| a < n && b < n) / lam,
        imaginary_block_max: block_max(q, |a, b| a >= n && b >= n) / lam,
        antisymmetric_max,
        antisymmetric_integral_max,
        j_range_max,
        j_range_integral_max,
        j_fixed_max: j_fixed_max(q, &jmat, spectrum.max_abs, rng),
    })
}

fn record_form_entries(report: &mut VerificationReport, f: &FormChecks, tau_rel: f64) -> Result<()> {
    report.record(ReportEntry::new(
        "Thm2.6-consistency",
        f.two_path_error <= TWO_PATH_TOLERANCE && f.cauchy_schwarz_ratio <= 1.0 + 1e-12,
        f.two_path_error,
        TWO_PATH_TOLERANCE,
        format!(
            "{} samples; cross term vs polarization={:.3e}; Cauchy-Schwarz ratio={:.6}",
            f.samples, f.cross_term_residual, f.cauchy_schwarz_ratio
        ),
    ))?;
    report.record(ReportEntry::new(
        "Thm3.2",
        f.real_block_max < -tau_rel,
        f.real_block_max,
        -tau_rel,
        "largest eigenvalue of the x^x block over max |eigenvalue|",
    ))?;
    let antisym = f.antisymmetric_max.max(f.antisymmetric_integral_max);
    report.record(ReportEntry::new(
        "Thm3.4",
        antisym <= tau_rel,
        antisym,
        tau_rel,
        format!("tensor path={:.3e} integral path={:.3e}", f.antisymmetric_max, f.antisymmetric_integral_max),
    ))?;
    report.record(ReportEntry::new(
        "Thm3.6",
        f.imaginary_block_max < -tau_rel,
        f.imaginary_block_max,
        -tau_rel,
        "largest eigenvalue of the y^y block over max |eigenvalue|",
    ))?;
    let jr = f.j_range_max.max(f.j_range_integral_max);
    report.record(ReportEntry::new(
        "Thm4.4",
        jr <= tau_rel,
        jr,
        tau_rel,
        format!("tensor path={:.3e} integral path={:.3e}", f.j_range_max, f.j_range_integral_max),
    ))
}

pub fn surrogate_summary(s: &SuiteSummary) -> String {
    let passed = s.runs.iter().filter(|r| r.passed).count();
    format!(
        "{passed}/{} models pass, worst eigenvalue margin={:.3e}, worst kernel excess={}, min gap ratio={:.3e}",
        s.runs.len(),
        s.worst_eigenvalue_margin,
        s.worst_kernel_excess,
        s.min_gap_ratio
    )
}

pub fn surrogate_stage(cfg: &RunConfig, hash: &str, sink: &mut ArtifactSink) -> Result<SuiteSummary> {
    let suite = run_suite(cfg.seeds, &cfg.surrogate_dims, cfg.surrogate_points, cfg.tau_rel, hash);
    staged(Stage::Surrogate, sink.json("surrogate.json", &suite))?;
    Ok(suite)
}

pub fn rankone_stage(cfg: &RunConfig, hash: &str, sink: &mut ArtifactSink) -> Result<Lemma51Report> {
    let lemma = staged(Stage::Rankone, lemma51_check(&cfg.rankone_dims, cfg.rankone_trials, cfg.sample_seed, hash))?;
    staged(Stage::Rankone, sink.json("rankone.json", &lemma))?;
    Ok(lemma)
}

pub fn quaternionic_entry(lemma: &Lemma51Report) -> ReportEntry {
    let max = |f: fn(&crate::rankone::TrialMargins) -> f64| lemma.trials.iter().map(f).fold(0.0, f64::max);
    let lsq_ratio = lemma.trials.iter().map(|t| t.lsq_residual / t.omega_norm).fold(f64::INFINITY, f64::min);
    ReportEntry::new(
        "Lemma5.1",
        lemma.passed,
        max(|t| t.null_residual),
        QUATERNIONIC_TOLERANCE,
        format!(
            "{} trials; |Q(w,w)| max={:.3e}; |R(v,Jv,Kv,Iv)+R(v,Jv,v,Jv)| max={:.3e}; pullback max={:.3e}; |Jw-w| max={:.3e}; min lsq residual/|w|={:.3}",
            lemma.trials.len(),
            max(|t| t.null_residual),
            max(|t| t.cross_residual),
            max(|t| t.pullback_residual),
            max(|t| t.fixed_residual),
            lsq_ratio
        ),
    )
}

/// Surrogate suite alone, as for the `surrogate` command.
pub fn run_surrogate_only(cfg: &RunConfig, out: Option<&Path>) -> Result<SuiteSummary> {
    cfg.validate()?;
    let mut sink = ArtifactSink::new(out)?;
    surrogate_stage(cfg, &cfg.hash(), &mut sink)
}

/// Quaternionic check alone, as for the `rankone` command.
pub fn run_rankone_only(cfg: &RunConfig, out: Option<&Path>) -> Result<Lemma51Report> {
    cfg.validate()?;
    let mut sink = ArtifactSink::new(out)?;
    rankone_stage(cfg, &cfg.hash(), &mut sink)
}
