//! Scenario runner: JSON configs in, JSON reports (and optional spectrum
//! CSVs) out. See `docs/report-schema.md` for the formats.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::crossprod::{
    build_crossed_triple, equivariance_check, gauge_shift_residual, tau_shift_residual, torus_theta, Cocycle,
    RandomGaugeData, UnitaryCocycle,
};
use crate::deform::{
    deform_triple, deformed_rep, flat_torus_triple, star_involution, star_product, theta_t2,
    theta_torus_correspondence, FourierElement, FourierModule,
};
use crate::error::{Error, Result};
use crate::group::{IrrepLabel, GroupModel, ModuleLayout};
use crate::numerics::{comm, compress, cx, dagger, eigvalsh, inverse, mul, norm_bound, CMat, GradedMatrix, RMat, Spectrum, C64};
use crate::triple::{
    canonical_remainder, factorization_check, graded_index, graded_kernel, horizontal_dirac, mean_curvature_and_shape,
    remainder_terms, shape_reconstruction_residual, umbilic_residual, warped_u1, Generator, TripleInstance,
};
use crate::weil::{kostant_relations_check, kostant_square_table, represent_cubic_dirac, spectral_gap, RepresentedWeil};

pub const CONFIG_VERSION: u32 = 1;
pub const REPORT_VERSION: u32 = 1;

/// Complex matrix as rows of [re, im] pairs.
pub type MatrixJson = Vec<Vec<[f64; 2]>>;

pub fn matrix_from_json(m: &MatrixJson) -> Result<CMat> {
    let rows = m.len();
    let cols = m.first().map_or(0, |r| r.len());
    if m.iter().any(|r| r.len() != cols) {
        return Err(Error::ConfigParse("ragged matrix".into()));
    }
    Ok(CMat::from_fn(rows, cols, |r, c| cx(m[r][c][0], m[r][c][1])))
}

pub fn matrix_to_json(a: &CMat) -> MatrixJson {
    (0..a.nrows()).map(|r| (0..a.ncols()).map(|c| [a[(r, c)].re, a[(r, c)].im]).collect()).collect()
}

fn real_matrix(m: &[Vec<f64>]) -> Result<RMat> {
    let n = m.len();
    if m.iter().any(|r| r.len() != n) {
        return Err(Error::ConfigParse("real matrix must be square".into()));
    }
    Ok(RMat::from_fn(n, n, |r, c| m[r][c]))
}

#[derive(Clone, Debug, Deserialize, Serialize)]
pub struct Config {
    pub version: u32,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub scenarios: Vec<Scenario>,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
pub struct Scenario {
    pub name: String,
    #[serde(flatten)]
    pub kind: ScenarioKind,
    /// Per-check tolerance overrides, keyed by check name.
    #[serde(default)]
    pub tolerances: BTreeMap<String, f64>,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
pub struct GaugeSpec {
    /// omega(e_1) on H0.
    pub cocycle: MatrixJson,
    #[serde(default)]
    pub m: Option<MatrixJson>,
    /// upsilon(e_1) on H0.
    #[serde(default)]
    pub upsilon: Option<MatrixJson>,
    #[serde(default)]
    pub w: Option<MatrixJson>,
}

fn default_tau() -> Vec<f64> {
    vec![0.5, 1.0, 2.0]
}

fn default_shifts() -> Vec<i64> {
    vec![1, 2]
}

fn default_tuples() -> usize {
    20
}

fn default_gauge_base() -> i64 {
    24
}

fn default_samples() -> usize {
    50
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScenarioKind {
    TorusCrossed {
        theta: f64,
        k: i64,
        /// Base Fourier radius for the dense factorisation checks; defaults to k.
        #[serde(default)]
        base: Option<i64>,
        /// Base Fourier radius for the block-wise gauge checks.
        #[serde(default = "default_gauge_base")]
        gauge_base: i64,
        #[serde(default = "default_tau")]
        tau_shifts: Vec<f64>,
        #[serde(default = "default_shifts")]
        gauge_shifts: Vec<i64>,
        #[serde(default = "default_tuples")]
        random_tuples: usize,
        /// Explicit gauge data; matrices live on H0 at radius `gauge_base`.
        #[serde(default)]
        gauge: Option<GaugeSpec>,
    },
    WarpedU1 {
        fibre: i64,
        base: i64,
        ell: Vec<f64>,
        margin: i64,
    },
    Su2Group {
        twice_j: u32,
        #[serde(default)]
        rho: Option<Vec<Vec<f64>>>,
    },
    DeformT2 {
        theta: f64,
        k: i64,
        #[serde(default = "default_samples")]
        samples: usize,
    },
    Custom {
        dirac: MatrixJson,
        parity_mask: Vec<bool>,
        #[serde(default)]
        generators: Vec<NamedMatrix>,
    },
}

impl ScenarioKind {
    pub fn name(&self) -> &'static str {
        match self {
            ScenarioKind::TorusCrossed { .. } => "torus_crossed",
            ScenarioKind::WarpedU1 { .. } => "warped_u1",
            ScenarioKind::Su2Group { .. } => "su2_group",
            ScenarioKind::DeformT2 { .. } => "deform_t2",
            ScenarioKind::Custom { .. } => "custom",
        }
    }
}

#[derive(Clone, Debug, Deserialize, Serialize)]
pub struct NamedMatrix {
    pub name: String,
    pub matrix: MatrixJson,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub residual: f64,
    pub tolerance: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct SpectrumBlock {
    pub label: String,
    pub eigenvalues: Vec<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct ScenarioReport {
    pub name: String,
    pub kind: String,
    pub checks: Vec<Check>,
    pub spectra: Vec<SpectrumBlock>,
    /// Observed values that are reported without a pass/fail verdict.
    pub values: BTreeMap<String, f64>,
    pub truncation: BTreeMap<String, usize>,
    pub wall_time_seconds: f64,
    pub error: Option<String>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct Provenance {
    pub config_sha256: String,
    pub seed: u64,
    pub wall_time_seconds: f64,
    pub crate_version: String,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct Report {
    pub schema_version: u32,
    pub scenarios: Vec<ScenarioReport>,
    pub provenance: Provenance,
}

impl Report {
    pub fn failed_checks(&self) -> usize {
        self.scenarios.iter().flat_map(|s| &s.checks).filter(|c| !c.passed).count()
    }

    pub fn build_errors(&self) -> usize {
        self.scenarios.iter().filter(|s| s.error.is_some()).count()
    }

    /// 0 if everything passed, 1 on check failures, 2 on build errors.
    pub fn exit_code(&self) -> i32 {
        if self.build_errors() > 0 {
            2
        } else if self.failed_checks() > 0 {
            1
        } else {
            0
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    pub seed: Option<u64>,
    pub tol: Option<f64>,
}

struct Recorder<'a> {
    overrides: &'a BTreeMap<String, f64>,
    global: Option<f64>,
    report: ScenarioReport,
}

impl Recorder<'_> {
    fn tolerance(&self, name: &str, default: f64) -> f64 {
        self.overrides.get(name).copied().or(self.global).unwrap_or(default)
    }

    /// residual <= tolerance passes; NaN fails.
    fn check(&mut self, name: &str, residual: f64, default_tol: f64) {
        let tolerance = self.tolerance(name, default_tol);
        self.report.checks.push(Check { name: name.into(), passed: residual <= tolerance, residual, tolerance });
    }

    fn value(&mut self, name: &str, v: f64) {
        self.report.values.insert(name.into(), v);
    }

    fn size(&mut self, name: &str, v: usize) {
        self.report.truncation.insert(name.into(), v);
    }

    fn spectrum(&mut self, label: String, mut eigenvalues: Vec<f64>) {
        eigenvalues.sort_by(|a, b| a.total_cmp(b));
        self.report.spectra.push(SpectrumBlock { label, eigenvalues });
    }
}

pub fn parse_config(text: &str) -> Result<Config> {
    let cfg: Config = serde_json::from_str(text).map_err(|e| Error::ConfigParse(e.to_string()))?;
    if cfg.version != CONFIG_VERSION {
        return Err(Error::ConfigParse(format!("unsupported config version {}", cfg.version)));
    }
    for s in &cfg.scenarios {
        if let Some((k, v)) = s.tolerances.iter().find(|(_, v)| !(**v > 0.0)) {
            return Err(Error::ConfigParse(format!("scenario {}: tolerance {k} = {v} is not positive", s.name)));
        }
    }
    Ok(cfg)
}

/// Evaluates every scenario (in parallel) and assembles the report.
pub fn run_config(text: &str, opts: &RunOptions) -> Result<Report> {
    let start = Instant::now();
    let cfg = parse_config(text)?;
    if let Some(t) = opts.tol {
        if !(t > 0.0) {
            return Err(Error::ConfigParse(format!("--tol {t} is not positive")));
        }
    }
    let seed = opts.seed.or(cfg.seed).unwrap_or(0);
    let scenarios: Vec<ScenarioReport> =
        cfg.scenarios.par_iter().enumerate().map(|(i, s)| run_scenario(s, seed.wrapping_add(i as u64), opts.tol)).collect();
    let hash = Sha256::digest(text.as_bytes());
    Ok(Report {
        schema_version: REPORT_VERSION,
        scenarios,
        provenance: Provenance {
            config_sha256: hash.iter().map(|b| format!("{b:02x}")).collect(),
            seed,
            wall_time_seconds: start.elapsed().as_secs_f64(),
            crate_version: env!("CARGO_PKG_VERSION").into(),
        },
    })
}

pub fn run_scenario(s: &Scenario, seed: u64, tol: Option<f64>) -> ScenarioReport {
    let start = Instant::now();
    let mut rec = Recorder {
        overrides: &s.tolerances,
        global: tol,
        report: ScenarioReport {
            name: s.name.clone(),
            kind: s.kind.name().into(),
            checks: Vec::new(),
            spectra: Vec::new(),
            values: BTreeMap::new(),
            truncation: BTreeMap::new(),
            wall_time_seconds: 0.0,
            error: None,
        },
    };
    let res = match &s.kind {
        ScenarioKind::TorusCrossed { theta, k, base, gauge_base, tau_shifts, gauge_shifts, random_tuples, gauge } => {
            torus_crossed(&mut rec, *theta, *k, base.unwrap_or(*k), *gauge_base, tau_shifts, gauge_shifts, *random_tuples, gauge.as_ref(), seed)
        }
        ScenarioKind::WarpedU1 { fibre, base, ell, margin } => warped(&mut rec, *fibre, *base, ell, *margin),
        ScenarioKind::Su2Group { twice_j, rho } => su2(&mut rec, *twice_j, rho.as_deref()),
        ScenarioKind::DeformT2 { theta, k, samples } => deform_t2(&mut rec, *theta, *k, *samples, seed),
        ScenarioKind::Custom { dirac, parity_mask, generators } => custom(&mut rec, dirac, parity_mask, generators),
    };
    if let Err(e) = res {
        rec.report.error = Some(Error::ScenarioBuild(e.to_string()).to_string());
    }
    rec.report.wall_time_seconds = start.elapsed().as_secs_f64();
    rec.report
}

fn block_label(label: &[i64]) -> String {
    let parts: Vec<String> = label.iter().map(|x| x.to_string()).collect();
    format!("k=({})", parts.join(","))
}

#[allow(clippy::too_many_arguments)]
fn torus_crossed(
    rec: &mut Recorder,
    theta: f64,
    k: i64,
    base: i64,
    gauge_base: i64,
    tau_shifts: &[f64],
    gauge_shifts: &[i64],
    random_tuples: usize,
    gauge: Option<&GaugeSpec>,
    seed: u64,
) -> Result<()> {
    let cfg = torus_theta(theta, k, base);
    let ct = build_crossed_triple(&cfg)?;
    rec.size("lattice_radius", k as usize);
    rec.size("base_radius", base as usize);
    rec.size("dim", ct.triple.dim());
    rec.check("vertical_identity", ct.vertical_identity, 1e-12);
    rec.check("horizontal_identity", ct.horizontal_identity, 1e-12);
    let t = &ct.triple;
    rec.check("vertical_geometry", t.vertical_residuals()?.max(), 1e-12);
    let z = canonical_remainder(t)?;
    rec.check("remainder_zero", norm_bound(&z.data), 1e-12);
    let rep = factorization_check(t, &z, &ct.principal_blocks(None), rec.tolerance("factorisation", 1e-10))?;
    rec.check("factorisation_unitarity", rep.unitarity, 1e-10);
    rec.check("factorisation_intertwining", rep.intertwining, 1e-10);
    rec.check("anticommutator", rep.anticommutator, 1e-10);
    rec.check("square", rep.square, 1e-10);
    for (b, kk) in ct.lattice.iter().enumerate() {
        let idx: Vec<usize> = (b * ct.block_dim..(b + 1) * ct.block_dim).collect();
        rec.spectrum(block_label(kk), eigvalsh(&compress(&t.d.data, &idx)));
    }

    let gcfg = torus_theta(theta, k, gauge_base);
    for &s in tau_shifts {
        rec.check(&format!("tau_shift[s={s}]"), tau_shift_residual(&gcfg, s)?, 1e-9);
    }
    for &g in gauge_shifts {
        rec.check(&format!("gauge_shift[k={g}]"), gauge_shift_residual(&gcfg, g)?, 1e-10);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut literal, mut corrected, mut growth): (f64, f64, f64) = (0.0, 0.0, f64::NEG_INFINITY);
    for _ in 0..random_tuples {
        let d = RandomGaugeData::sample(&gcfg, &mut rng)?;
        let r = equivariance_check(&gcfg, &d.omega, &d.m_op, &d.upsilon, &d.w, |kk| d.margin(kk))?;
        literal = literal.max(r.literal);
        corrected = corrected.max(r.corrected);
        growth = growth.max(d.omega.growth(&gcfg).1);
    }
    if random_tuples > 0 {
        rec.check("equivariance", literal, 1e-9);
        rec.check("equivariance_with_w_term", corrected, 1e-9);
        // exact inequality: no tolerance
        rec.report.checks.push(Check { name: "cocycle_growth".into(), passed: growth <= 0.0, residual: growth.max(0.0), tolerance: 0.0 });
        rec.value("cocycle_growth_excess", growth);
    }
    if let Some(g) = gauge {
        let n = gcfg.base.dim();
        let omega = Cocycle::new(&gcfg, vec![matrix_from_json(&g.cocycle)?])?;
        let m_op = g.m.as_ref().map(matrix_from_json).transpose()?.unwrap_or_else(|| CMat::zeros(n, n));
        let ups = match &g.upsilon {
            Some(u) => UnitaryCocycle::new(&gcfg, vec![matrix_from_json(u)?])?,
            None => UnitaryCocycle::trivial(&gcfg),
        };
        let w = g.w.as_ref().map(matrix_from_json).transpose()?.unwrap_or_else(|| crate::numerics::eye(n));
        let band = ups.generators.iter().chain([&w, &omega.generators[0], &m_op]).map(|x| gcfg.bandwidth(x)).max().unwrap_or(0);
        let r = equivariance_check(&gcfg, &omega, &m_op, &ups, &w, |kk| 2 * band * (kk[0].abs() + 1) + 1)?;
        rec.check("equivariance[configured]", r.literal, 1e-9);
        rec.check("equivariance_with_w_term[configured]", r.corrected, 1e-9);
    }
    Ok(())
}

fn triple_spectra(rec: &mut Recorder, t: &TripleInstance) {
    let labels = match t.action.as_ref().map(|a| &a.layout) {
        Some(ModuleLayout::Torus { labels }) => Some(labels.clone()),
        _ => None,
    };
    let d = &t.d.data;
    if let Some(labels) = labels {
        let mut groups: BTreeMap<Vec<i64>, Vec<usize>> = BTreeMap::new();
        for (i, l) in labels.iter().enumerate() {
            groups.entry(l.clone()).or_default().push(i);
        }
        // only split when D is block diagonal in the labels
        let leak = crate::deform::weight_leakage(d, &labels);
        if leak <= 1e-12 * norm_bound(d).max(1.0) {
            for (l, idx) in groups {
                rec.spectrum(block_label(&l), eigvalsh(&compress(d, &idx)));
            }
            return;
        }
    }
    rec.spectrum("all".into(), eigvalsh(d));
}

fn warped(rec: &mut Recorder, fibre: i64, base: i64, ell: &[f64], margin: i64) -> Result<()> {
    let t = warped_u1(fibre, base, ell, margin)?;
    rec.size("fibre_radius", fibre as usize);
    rec.size("base_radius", base as usize);
    rec.size("dim", t.dim());
    rec.check("vertical_geometry", t.vertical_residuals()?.max(), 1e-9);
    let terms = remainder_terms(&t)?;
    let v = t.vertical.as_ref().ok_or(Error::MissingVerticalGeometry)?;
    let ell_op = v.ell.as_ref().ok_or(Error::MissingVerticalGeometry)?;
    let kappa = mul(&inverse(ell_op)?, &comm(&t.d.data, ell_op));
    rec.check("middle_term_half_kappa", t.interior_norm(&(&terms.middle - &kappa * cx(0.5, 0.0))), 1e-9);
    let z = canonical_remainder(&t)?;
    rec.check("remainder_self_adjoint", t.interior_norm(&(dagger(&z.data) - &z.data)), 1e-9);
    let (k, shape) = mean_curvature_and_shape(&t, &z)?;
    let dh = horizontal_dirac(&t, &z)?;
    rec.check("shape_reconstruction", shape_reconstruction_residual(&t, &dh, &shape)?, 1e-9);
    rec.check("umbilic", umbilic_residual(&t, &dh, &k)?, 1e-9);
    rec.value("mean_curvature_norm", t.interior_norm(&kappa));
    triple_spectra(rec, &t);
    Ok(())
}

fn su2(rec: &mut Recorder, twice_j: u32, rho: Option<&[Vec<f64>]>) -> Result<()> {
    let rho = match rho {
        Some(r) => real_matrix(r)?,
        None => RMat::identity(3, 3),
    };
    let group = GroupModel::su2(twice_j);
    let w = RepresentedWeil::su2_regular(&group, &rho)?;
    rec.size("twice_j", twice_j as usize);
    rec.size("dim", w.dim());
    // relations are recorded even when they fail
    let rep = kostant_relations_check(&w, f64::INFINITY)?;
    let scale = rep.scale.max(1.0);
    rec.check("kostant_dirac_du", rep.dirac_du / scale, 1e-9);
    rec.check("kostant_dirac_c", rep.dirac_c / scale, 1e-9);
    rec.check("kostant_square_c", rep.square_c / scale, 1e-9);
    let rows = kostant_square_table(&w)?;
    let mut literal: f64 = 0.0;
    let mut shifted: f64 = 0.0;
    for row in &rows {
        let IrrepLabel::Spin(tj) = row.label else { continue };
        let rel = |x: f64| (row.eigen_min - x).abs().max((row.eigen_max - x).abs()) / x.abs().max(1.0);
        literal = literal.max(rel(row.literal));
        shifted = shifted.max(rel(row.shifted));
        rec.value(&format!("square[2j={tj}].observed"), row.eigen_max);
        rec.value(&format!("square[2j={tj}].literal"), row.literal);
        rec.value(&format!("square[2j={tj}].shifted"), row.shifted);
    }
    rec.check("kostant_square_formula", literal, 1e-8);
    rec.check("kostant_square_shifted", shifted, 1e-8);
    let rho_plus = group.rho_plus.iter().map(|x| x * x).sum::<f64>().sqrt();
    let gap = spectral_gap(&w);
    rec.value("spectral_gap", gap);
    rec.check("spectral_gap", (rho_plus - gap).max(0.0), 1e-9);
    let d = represent_cubic_dirac(&w).data;
    for (label, range) in &w.blocks {
        let IrrepLabel::Spin(tj) = label else { continue };
        let idx: Vec<usize> = range.clone().collect();
        rec.spectrum(format!("2j={tj}"), eigvalsh(&compress(&d, &idx)));
    }
    Ok(())
}

fn deform_t2(rec: &mut Recorder, theta: f64, k: i64, samples: usize, seed: u64) -> Result<()> {
    use rand::Rng;
    let th = theta_t2(theta);
    rec.size("radius", k as usize);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let module = FourierModule { n: 2, radius: k, block: 1, spin_mask: vec![false] };
    let inner: Vec<usize> =
        module.lattice().iter().enumerate().filter(|(_, q)| q.iter().all(|v| v.abs() <= k - 4)).map(|(i, _)| i).collect();
    let (mut assoc, mut hom, mut inv, mut phase_law): (f64, f64, f64, f64) = (0.0, 0.0, 0.0, 0.0);
    for _ in 0..samples {
        let r = RMat::from_fn(2, 2, |_, _| rng.gen_range(-1.0..1.0));
        let a = FourierElement::random(&mut rng, 2, 1, 2, 3);
        let b = FourierElement::random(&mut rng, 2, 1, 2, 3);
        let c = FourierElement::random(&mut rng, 2, 1, 2, 3);
        let l = star_product(&star_product(&a, &b, &r)?, &c, &r)?;
        let rr = star_product(&a, &star_product(&b, &c, &r)?, &r)?;
        assoc = assoc.max(l.dist(&rr));
        let lab = deformed_rep(&star_product(&a, &b, &r)?, &module, &r)?.data;
        let la = deformed_rep(&a, &module, &r)?.data;
        let lb = deformed_rep(&b, &module, &r)?.data;
        hom = hom.max(norm_bound(&compress(&(lab - mul(&la, &lb)), &inner)));
        let las = deformed_rep(&star_involution(&a, &r)?, &module, &r)?.data;
        inv = inv.max(norm_bound(&(las - dagger(&la))));
        let x: Vec<i64> = (0..2).map(|_| rng.gen_range(-3..=3)).collect();
        let y: Vec<i64> = (0..2).map(|_| rng.gen_range(-3..=3)).collect();
        let p = star_product(&FourierElement::character(&x), &FourierElement::character(&y), &r)?;
        let z: Vec<i64> = x.iter().zip(&y).map(|(a, b)| a + b).collect();
        let arg: f64 = (0..2).flat_map(|i| (0..2).map(move |j| (i, j))).map(|(i, j)| x[i] as f64 * r[(i, j)] * y[j] as f64).sum();
        let expect = FourierElement::from_scalars(2, &[(z, C64::from_polar(1.0, -2.0 * PI * arg))]);
        phase_law = phase_law.max(p.dist(&expect));
    }
    rec.check("associativity", assoc, 1e-12);
    rec.check("star_homomorphism", hom, 1e-11);
    rec.check("involution_homomorphism", inv, 1e-11);
    rec.check("character_phase_law", phase_law, 1e-14);
    let t = flat_torus_triple(k)?;
    let d = deform_triple(&t, &th)?;
    let same = if d.d == t.d { 0.0 } else { f64::INFINITY };
    rec.report.checks.push(Check { name: "isospectral".into(), passed: same == 0.0, residual: same, tolerance: 0.0 });
    let zero = deform_triple(&t, &RMat::zeros(2, 2))?;
    let trivial = zero.generators.iter().zip(&t.generators).map(|(a, b)| norm_bound(&(&a.op - &b.op))).fold(0.0, f64::max);
    rec.report.checks.push(Check { name: "theta_zero".into(), passed: trivial == 0.0, residual: trivial, tolerance: 0.0 });
    let c = theta_torus_correspondence(theta, k)?;
    rec.check("crossed_product_correspondence", c.dirac.max(c.u).max(c.v), 1e-10);
    triple_spectra(rec, &d);
    Ok(())
}

fn custom(rec: &mut Recorder, dirac: &MatrixJson, mask: &[bool], generators: &[NamedMatrix]) -> Result<()> {
    let d = matrix_from_json(dirac)?;
    if d.nrows() != d.ncols() || d.nrows() != mask.len() {
        return Err(Error::ShapeMismatch(format!("D is {}x{} with {} parity flags", d.nrows(), d.ncols(), mask.len())));
    }
    rec.size("dim", d.nrows());
    let g = GradedMatrix { data: d.clone(), parity_mask: mask.to_vec(), multigrade: 0 };
    let scale = norm_bound(&d).max(1.0);
    rec.check("self_adjoint", g.hermitian_residual() / scale, 1e-12);
    rec.check("odd", norm_bound(&g.even_part().data) / scale, 1e-12);
    let gens = generators
        .iter()
        .map(|m| Ok(Generator { name: m.name.clone(), op: matrix_from_json(&m.matrix)?, derivation: None }))
        .collect::<Result<Vec<_>>>()?;
    let t = TripleInstance::new(g, gens)?;
    for (name, c) in t.commutator_norms() {
        rec.value(&format!("commutator_norm[{name}]"), c);
    }
    let tol = 1e-9 * scale;
    let (even, odd) = graded_kernel(&t, tol);
    rec.value("kernel_even", even as f64);
    rec.value("kernel_odd", odd as f64);
    rec.value("graded_index", graded_index(&t, tol) as f64);
    triple_spectra(rec, &t);
    Ok(())
}

/// Writes `<dir>/<scenario>.csv` with rows eigenvalue,multiplicity,block_label.
pub fn write_spectra(report: &Report, dir: &Path) -> std::io::Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    for s in &report.scenarios {
        let safe: String = s.name.chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' }).collect();
        let path = dir.join(format!("{safe}.csv"));
        let mut w = csv::Writer::from_path(&path)?;
        w.write_record(["eigenvalue", "multiplicity", "block_label"])?;
        for block in &s.spectra {
            let scale = block.eigenvalues.iter().fold(1.0f64, |m, x| m.max(x.abs()));
            let sp = Spectrum::from_sorted(&block.eigenvalues, 1e-9 * scale);
            for (l, m) in sp.eigenvalues.iter().zip(&sp.multiplicities) {
                w.write_record([format!("{l:.15e}"), m.to_string(), block.label.clone()])?;
            }
        }
        w.flush()?;
        written.push(path);
    }
    Ok(written)
}

/// Full `run` command: returns the exit status.
pub fn run(config: &Path, out: &Path, emit_spectra: Option<&Path>, opts: &RunOptions) -> i32 {
    let text = match std::fs::read_to_string(config) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("{}", Error::ConfigParse(format!("{}: {e}", config.display())));
            return 2;
        }
    };
    let report = match run_config(&text, opts) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("{e}");
            return 2;
        }
    };
    let json = serde_json::to_string_pretty(&report).expect("report serialises");
    if let Err(e) = std::fs::write(out, json) {
        eprintln!("cannot write {}: {e}", out.display());
        return 2;
    }
    if let Some(dir) = emit_spectra {
        if let Err(e) = write_spectra(&report, dir) {
            eprintln!("cannot write spectra to {}: {e}", dir.display());
            return 2;
        }
    }
    for s in &report.scenarios {
        if let Some(e) = &s.error {
            eprintln!("{}: {e}", s.name);
        }
        for c in s.checks.iter().filter(|c| !c.passed) {
            eprintln!("{}: {} failed (residual {:.3e} > {:.3e})", s.name, c.name, c.residual, c.tolerance);
        }
    }
    let failed = report.failed_checks();
    if failed > 0 && report.build_errors() == 0 {
        eprintln!("{}", Error::CheckFailure(failed));
    }
    report.exit_code()
}
