//! Seeded verification campaigns: configuration, instance generation, per-check
//! evaluation and report emission.
//!
//! Every trial draws its instance from its own ChaCha stream keyed by the master
//! seed, the check and the trial index, so reports do not depend on scheduling.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::bounds::{
    calculus_diff, defect_diff_check_with, exp_integral_diff, lipschitz_ratio_from, p2_chain_from,
    series_bound_from, sqrt_lipschitz_check, strict_pair_from, BoundReport, DiffNorms, DilationDiff,
    QuadConfig, RatioRecord,
};
use crate::calculus::{calc_spectral_decomp, defects, finite_dilation, fourier_eval, Contraction};
use crate::circlefn::{zoo, CircleFunction};
use crate::doi::{birman_solomyak_delta_with, commutator_identity_with, decompose_pair};
use crate::error::{Error, Result};
use crate::gen::{gaussian_matrix, gen_pair_with_gap_rng, gen_psd_rng, gen_unitary_rng, log_uniform, perturb_unitary};
use crate::linalg::{herm_eig, unitary_eig, CMat, SchattenOrder, C64};
use crate::shift::{eta_recover, eta_recover_dilation, trace_formula_check, uniqueness_check, ShiftFunction};

pub const SCHEMA_VERSION: u32 = 1;

/// Hard cap on base dimensions; dimensions above [`SOFT_DIM`] only warn.
pub const MAX_DIM: usize = 64;
pub const SOFT_DIM: usize = 16;
/// Cap on dilation and shift degrees.
pub const MAX_DEGREE: usize = 64;

pub const POWER_TOL: f64 = 1e-9;
pub const UNITARITY_TOL: f64 = 1e-10;
pub const QUAD_RESIDUAL_TOL: f64 = 1e-8;
/// `quad_err ≤ QUAD_ERR_REL · ‖A - B‖`.
pub const QUAD_ERR_REL: f64 = 1e-8;
pub const DOI_TOL: f64 = 1e-9;
pub const COMMUTATOR_TOL: f64 = 1e-9;
pub const HS_REL: f64 = 1e-8;
/// Roundoff allowance of the spectral calculus, `HS_ROUNDOFF · n · ε · ‖f‖_∞`.
pub const HS_ROUNDOFF: f64 = 16.0;
pub const SANDWICH_TOL: f64 = 1e-8;
pub const TRACE_TOL: f64 = 1e-9;
pub const UNIQUENESS_TOL: f64 = 1e-10;
/// Relative agreement required of a replayed row.
pub const REPLAY_TOL: f64 = 1e-12;
/// Relative slack allowed on the p = 2 envelope in ratio studies.
pub const ENVELOPE_TOL: f64 = 1e-9;

const STREAM_TAG: &[u8; 8] = b"opcalc-c";

pub const CSV_HEADER: [&str; 8] = ["instance_id", "p", "f_id", "lhs", "rhs", "constant_used", "slack", "pass"];
pub const RATIO_HEADER: [&str; 15] = [
    "instance_id",
    "p",
    "f_id",
    "delta",
    "lhs",
    "diff_norm",
    "lip_arc",
    "lip_chordal",
    "ratio",
    "ratio_chordal",
    "envelope",
    "k_p",
    "mixed_norm",
    "ratio_mixed",
    "path_residual",
];
pub const BLOWUP_HEADER: [&str; 9] =
    ["delta", "p", "f_id", "trials", "max_ratio", "max_ratio_chordal", "mean_ratio", "envelope", "max_over_envelope"];

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckId {
    Series,
    StrictPair,
    SqrtLip,
    Defect,
    DilationDiff,
    DoiExact,
    HsEstimate,
    TraceFormula,
    Ratio,
    Blowup,
}

impl CheckId {
    pub const ALL: [CheckId; 10] = [
        Self::Series,
        Self::StrictPair,
        Self::SqrtLip,
        Self::Defect,
        Self::DilationDiff,
        Self::DoiExact,
        Self::HsEstimate,
        Self::TraceFormula,
        Self::Ratio,
        Self::Blowup,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::Series => "series",
            Self::StrictPair => "strict_pair",
            Self::SqrtLip => "sqrt_lip",
            Self::Defect => "defect",
            Self::DilationDiff => "dilation_diff",
            Self::DoiExact => "doi_exact",
            Self::HsEstimate => "hs_estimate",
            Self::TraceFormula => "trace_formula",
            Self::Ratio => "ratio",
            Self::Blowup => "blowup",
        }
    }

    pub fn index(self) -> u64 {
        Self::ALL.iter().position(|&c| c == self).expect("listed") as u64
    }

    /// Studies report measurements and never fail a run.
    pub fn is_study(self) -> bool {
        matches!(self, Self::Ratio | Self::Blowup)
    }

    /// Row files written by a theorem check.
    pub fn row_files(self) -> &'static [&'static str] {
        match self {
            Self::Series => &["series.csv"],
            Self::StrictPair => &["strict_pair.csv"],
            Self::SqrtLip => &["sqrt_lip.csv", "sqrt_lip_quad.csv"],
            Self::Defect => &["defect.csv"],
            Self::DilationDiff => &["dilation_diff.csv", "dilation_property.csv"],
            Self::DoiExact => &["doi_exact.csv", "doi_commutator.csv"],
            Self::HsEstimate => &["hs_estimate.csv", "hs_chain.csv", "lip_sandwich.csv"],
            Self::TraceFormula => &["trace_formula.csv"],
            Self::Ratio | Self::Blowup => &[],
        }
    }
}

impl fmt::Display for CheckId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CheckId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown check id {s:?}")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BlowupConfig {
    pub deltas: Vec<f64>,
    pub trials: usize,
    pub function_id: String,
    pub dim: usize,
    /// `‖T₁ - T₀‖_2` before clipping.
    pub gap: f64,
}

impl Default for BlowupConfig {
    fn default() -> Self {
        Self {
            deltas: vec![0.5, 0.2, 0.1, 0.05, 0.01, 0.001],
            trials: 16,
            function_id: "abs_im_z_j64".into(),
            dim: 4,
            gap: 0.05,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CampaignConfig {
    pub master_seed: u64,
    pub trials: usize,
    pub dims: Vec<usize>,
    pub p_values: Vec<SchattenOrder>,
    pub delta_floor: f64,
    pub function_ids: Vec<String>,
    pub dilation_degree: usize,
    pub checks: Vec<CheckId>,
    pub output_dir: PathBuf,
    pub shift_degree: usize,
    pub blowup: BlowupConfig,
}

impl Default for CampaignConfig {
    fn default() -> Self {
        let p = |v: f64| SchattenOrder::Finite(v);
        Self {
            master_seed: 0x5eed,
            trials: 200,
            dims: vec![1, 2, 3, 4, 6, 8],
            p_values: vec![p(1.0), p(1.25), p(1.5), p(2.0), p(3.0), p(5.0), SchattenOrder::Inf],
            delta_floor: 0.05,
            function_ids: zoo::names().into_iter().map(String::from).collect(),
            dilation_degree: 8,
            checks: CheckId::ALL.to_vec(),
            output_dir: PathBuf::from("opcalc-out"),
            shift_degree: 32,
            blowup: BlowupConfig::default(),
        }
    }
}

/// Command-line overrides applied on top of a loaded config.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub master_seed: Option<u64>,
    pub checks: Vec<CheckId>,
    pub output_dir: Option<PathBuf>,
    pub trials: Option<usize>,
}

impl CampaignConfig {
    pub fn from_json(s: &str) -> Result<Self> {
        let mut cfg: Self = serde_json::from_str(s).map_err(|e| Error::Config(e.to_string()))?;
        cfg.normalize();
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        Self::from_json(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serialization is infallible")
    }

    /// Sorts and deduplicates the check list.
    pub fn normalize(&mut self) {
        self.checks.sort();
        self.checks.dedup();
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(s) = o.master_seed {
            self.master_seed = s;
        }
        if !o.checks.is_empty() {
            self.checks = o.checks.clone();
        }
        if let Some(d) = &o.output_dir {
            self.output_dir = d.clone();
        }
        if let Some(t) = o.trials {
            self.trials = t;
        }
        self.normalize();
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Config(m));
        if self.trials == 0 {
            return fail("trials must be at least 1".into());
        }
        if self.dims.is_empty() {
            return fail("dims must not be empty".into());
        }
        if let Some(&d) = self.dims.iter().find(|&&d| d == 0 || d > MAX_DIM) {
            return fail(format!("dimension {d} outside 1..={MAX_DIM}"));
        }
        if self.dims.iter().any(|&d| d > SOFT_DIM) {
            log::warn!("dimensions above {SOFT_DIM} make dilation checks slow");
        }
        if self.p_values.is_empty() {
            return fail("p_values must not be empty".into());
        }
        if !(self.delta_floor > 0.0 && self.delta_floor < 1.0) {
            return fail(format!("delta_floor {} outside (0, 1)", self.delta_floor));
        }
        for (name, n) in [("dilation_degree", self.dilation_degree), ("shift_degree", self.shift_degree)] {
            if n == 0 || n > MAX_DEGREE {
                return fail(format!("{name} {n} outside 1..={MAX_DEGREE}"));
            }
        }
        if self.function_ids.is_empty() {
            return fail("function_ids must not be empty".into());
        }
        for id in &self.function_ids {
            if zoo::get(id).is_none() {
                return fail(format!("unknown function id {id:?}"));
            }
        }
        let b = &self.blowup;
        if b.deltas.is_empty() || b.deltas.iter().any(|d| !(*d > 0.0 && *d < 1.0)) {
            return fail("blowup.deltas must be a non-empty list in (0, 1)".into());
        }
        if b.trials == 0 {
            return fail("blowup.trials must be at least 1".into());
        }
        if b.dim == 0 || b.dim > MAX_DIM {
            return fail(format!("blowup.dim {} outside 1..={MAX_DIM}", b.dim));
        }
        if !(b.gap > 0.0 && b.gap.is_finite()) {
            return fail("blowup.gap must be positive".into());
        }
        if zoo::get(&b.function_id).is_none() {
            return fail(format!("unknown blowup function id {:?}", b.function_id));
        }
        Ok(())
    }

    fn functions(&self) -> Vec<&'static CircleFunction> {
        self.function_ids.iter().filter_map(|id| zoo::get(id)).collect()
    }

    /// The config as written into summaries, without the output location.
    fn report_value(&self) -> Value {
        let mut v = serde_json::to_value(self).expect("config serialization is infallible");
        if let Value::Object(m) = &mut v {
            m.remove("output_dir");
        }
        v
    }
}

/// The random stream of one trial.
pub fn trial_rng(master_seed: u64, check: CheckId, stream: u64) -> ChaCha8Rng {
    let mut seed = [0u8; 32];
    seed[..8].copy_from_slice(&master_seed.to_le_bytes());
    seed[8..16].copy_from_slice(&check.index().to_le_bytes());
    seed[16..24].copy_from_slice(STREAM_TAG);
    let mut rng = ChaCha8Rng::from_seed(seed);
    rng.set_stream(stream);
    rng
}

pub fn instance_id(cfg: &CampaignConfig, check: CheckId, trial: usize) -> String {
    format!("{check}-{:016x}-{trial:05}", cfg.master_seed)
}

/// One generated input, stored verbatim in reproduction bundles.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Instance {
    Pair { t0: CMat, t1: CMat },
    Psd { a: CMat, b: CMat, delta: f64 },
    Dilation { t0: CMat, t1: CMat, degree: usize },
    Unitary { u: CMat, v: CMat, x: CMat },
    Hs { u: CMat, v: CMat, t0: CMat, t1: CMat },
    Shift { t0: CMat, t1: CMat, x: CMat },
    /// Zoo-wide seminorm checks; no matrices.
    Zoo,
}

fn pick<T: Copy>(rng: &mut impl Rng, xs: &[T]) -> T {
    xs[rng.random_range(0..xs.len())]
}

/// `‖T₀‖ = (1 - δ²)^{1/2}` with `δ` log-uniform in `[floor, 1]`.
fn strict_norm(rng: &mut impl Rng, floor: f64) -> f64 {
    let d = log_uniform(rng, floor, 1.0);
    ((1.0 - d) * (1.0 + d)).sqrt()
}

fn gap(rng: &mut impl Rng) -> f64 {
    log_uniform(rng, 1e-3, 1.0)
}

fn pair(rng: &mut impl Rng, cfg: &CampaignConfig, norm0: f64, limit: f64) -> Result<(CMat, CMat)> {
    let n = pick(rng, &cfg.dims);
    let p = pick(rng, &cfg.p_values);
    let g = gap(rng);
    let s = gen_pair_with_gap_rng(rng, n, norm0, g, p, limit)?;
    Ok((s.t0.into_mat(), s.t1.into_mat()))
}

fn unitary_pair(rng: &mut impl Rng, n: usize) -> Result<(CMat, CMat)> {
    let u = gen_unitary_rng(rng, n);
    let v = if rng.random_bool(0.5) {
        gen_unitary_rng(rng, n)
    } else {
        let eps = log_uniform(rng, 1e-4, 1.0);
        perturb_unitary(rng, &u, eps)?
    };
    Ok((u, v))
}

fn test_matrix(rng: &mut impl Rng, n: usize) -> CMat {
    gaussian_matrix(rng, n, n).scale_re(1.0 / (n as f64).sqrt())
}

/// Draws the instance of `trial` for `check`.
pub fn generate(cfg: &CampaignConfig, check: CheckId, trial: usize) -> Result<Instance> {
    let rng = &mut trial_rng(cfg.master_seed, check, trial as u64);
    let floor = cfg.delta_floor;
    Ok(match check {
        CheckId::Series => {
            let norm0 = if rng.random_bool(0.25) { 1.0 } else { rng.random_range(0.0..1.0) };
            let (t0, t1) = pair(rng, cfg, norm0, 1.0)?;
            Instance::Pair { t0, t1 }
        }
        CheckId::StrictPair => {
            let norm0 = rng.random_range(0.0..=0.9);
            let (t0, t1) = pair(rng, cfg, norm0, 0.9)?;
            Instance::Pair { t0, t1 }
        }
        CheckId::Defect | CheckId::Ratio => {
            let norm0 = strict_norm(rng, floor);
            let (t0, t1) = pair(rng, cfg, norm0, 1.0)?;
            Instance::Pair { t0, t1 }
        }
        CheckId::SqrtLip => {
            let n = pick(rng, &cfg.dims);
            let delta = rng.random_range(floor..1.0);
            let b = gen_psd_rng(rng, n, delta, 1.0);
            let a = if rng.random_bool(0.5) {
                gen_psd_rng(rng, n, 0.0, 1.0)
            } else {
                // a nearby pair, clamped back to spectrum [0, 1]
                let eps = log_uniform(rng, 1e-6, 0.5);
                let h = gaussian_matrix(rng, n, n).hermitian_part();
                let h = h.scale_re(eps / h.op_norm().max(f64::MIN_POSITIVE));
                herm_eig(&(&b + &h), 1e-12)?.apply(|l| C64::new(l.clamp(0.0, 1.0), 0.0)).hermitian_part()
            };
            Instance::Psd { a, b, delta }
        }
        CheckId::DilationDiff => {
            let norm0 = strict_norm(rng, floor);
            let (t0, t1) = pair(rng, cfg, norm0, 1.0)?;
            let degree = rng.random_range(1..=cfg.dilation_degree);
            Instance::Dilation { t0, t1, degree }
        }
        CheckId::DoiExact => {
            let n = pick(rng, &cfg.dims);
            let (u, v) = unitary_pair(rng, n)?;
            let x = test_matrix(rng, n);
            Instance::Unitary { u, v, x }
        }
        CheckId::HsEstimate => {
            let n = pick(rng, &cfg.dims);
            let (u, v) = unitary_pair(rng, n)?;
            let norm0 = strict_norm(rng, floor);
            let (t0, t1) = pair(rng, cfg, norm0, 1.0)?;
            Instance::Hs { u, v, t0, t1 }
        }
        CheckId::TraceFormula => {
            let norm0 = if rng.random_bool(0.25) { 1.0 } else { rng.random_range(0.0..1.0) };
            let (t0, t1) = pair(rng, cfg, norm0, 1.0)?;
            let x = test_matrix(rng, t0.rows());
            Instance::Shift { t0, t1, x }
        }
        CheckId::Blowup => {
            let b = &cfg.blowup;
            let (di, k) = (trial / b.trials, trial % b.trials);
            let delta = *b.deltas.get(di).ok_or_else(|| Error::InvalidArgument(format!("blow-up trial {trial} out of range")))?;
            let rng = &mut trial_rng(cfg.master_seed, check, (di * b.trials + k) as u64);
            let norm0 = ((1.0 - delta) * (1.0 + delta)).sqrt();
            let s = gen_pair_with_gap_rng(rng, b.dim, norm0, b.gap, SchattenOrder::Finite(2.0), 1.0)?;
            Instance::Pair { t0: s.t0.into_mat(), t1: s.t1.into_mat() }
        }
    })
}

/// One CSV row of a theorem check.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub file: String,
    pub instance_id: String,
    pub p: String,
    pub f_id: String,
    pub lhs: f64,
    pub rhs: f64,
    pub constant_used: f64,
    pub slack: f64,
    pub pass: bool,
}

impl Row {
    fn bound(file: &str, id: &str, f_id: &str, r: &BoundReport) -> Self {
        Self {
            file: file.into(),
            instance_id: id.into(),
            p: r.p.to_string(),
            f_id: f_id.into(),
            lhs: r.lhs,
            rhs: r.rhs,
            constant_used: r.constant_used,
            slack: r.slack,
            pass: r.pass(),
        }
    }

    /// `lhs ≤ rhs` with no tolerance beyond the one built into `rhs`.
    fn strict(file: &str, id: &str, p: &str, f_id: &str, lhs: f64, rhs: f64, constant: f64) -> Self {
        Self {
            file: file.into(),
            instance_id: id.into(),
            p: p.into(),
            f_id: f_id.into(),
            lhs,
            rhs,
            constant_used: constant,
            slack: rhs - lhs,
            pass: lhs.is_finite() && lhs <= rhs,
        }
    }

    /// A residual against a fixed tolerance; `rhs` and `constant_used` hold the tolerance.
    fn residual(file: &str, id: &str, p: &str, f_id: &str, residual: f64, tol: f64) -> Self {
        Self::strict(file, id, p, f_id, residual, tol, tol)
    }

    /// `lhs / rhs`, zero when both vanish.
    pub fn ratio(&self) -> f64 {
        if self.lhs == 0.0 {
            0.0
        } else {
            self.lhs / self.rhs
        }
    }

    fn key(&self) -> (&str, &str, &str) {
        (&self.file, &self.p, &self.f_id)
    }
}

/// A ratio measurement with the dilation-path residual when `deg f ≤ N`.
#[derive(Clone, Debug, PartialEq)]
pub struct RatioRow {
    pub record: RatioRecord,
    pub path_residual: Option<f64>,
}

#[derive(Clone, Debug, Default)]
pub struct TrialOutput {
    pub rows: Vec<Row>,
    pub ratios: Vec<RatioRow>,
    pub eta: Option<ShiftFunction>,
}

fn contraction(m: &CMat) -> Result<Contraction> {
    Contraction::new(m.clone())
}

/// Evaluates every row of `check` on one instance.
pub fn evaluate(cfg: &CampaignConfig, check: CheckId, inst: &Instance, id: &str) -> Result<TrialOutput> {
    let funcs = cfg.functions();
    let mut out = TrialOutput::default();
    let rows = &mut out.rows;
    match (check, inst) {
        (CheckId::Series | CheckId::StrictPair, Instance::Pair { t0, t1 }) => {
            let (c0, c1) = (contraction(t0)?, contraction(t1)?);
            let dt = DiffNorms::of_diff(t1, t0)?;
            for f in &funcs {
                let df = calculus_diff(f, &c0, &c1)?;
                for &p in &cfg.p_values {
                    let r = if check == CheckId::Series {
                        series_bound_from(f, &df, &dt, p)
                    } else {
                        strict_pair_from(f, &c0, &c1, &df, &dt, p)?
                    };
                    rows.push(Row::bound(check.row_files()[0], id, &f.id(), &r));
                }
            }
        }
        (CheckId::SqrtLip, Instance::Psd { a, b, delta }) => {
            for &p in &cfg.p_values {
                rows.push(Row::bound("sqrt_lip.csv", id, "-", &sqrt_lipschitz_check(a, b, *delta, p)?));
            }
            let q = exp_integral_diff(a, b, *delta, &QuadConfig::default())?;
            let d = a - b;
            let res = (&q.value - &d).op_norm();
            rows.push(Row::residual("sqrt_lip_quad.csv", id, "inf", "residual", res, QUAD_RESIDUAL_TOL));
            let err = q.quad_err + q.tail_bound;
            rows.push(Row::residual("sqrt_lip_quad.csv", id, "inf", "quad_err", err, QUAD_ERR_REL * d.op_norm()));
        }
        (CheckId::Defect, Instance::Pair { t0, t1 }) => {
            let (c0, c1) = (contraction(t0)?, contraction(t1)?);
            let (d0, d1) = (defects(&c0)?, defects(&c1)?);
            for &p in &cfg.p_values {
                let r = defect_diff_check_with(&c0, &c1, &d0, &d1, p)?;
                for (name, b) in [("D", &r.d), ("D*", &r.d_star), ("gram", &r.gram), ("gram*", &r.gram_star)] {
                    rows.push(Row::bound("defect.csv", id, name, b));
                }
            }
        }
        (CheckId::DilationDiff, Instance::Dilation { t0, t1, degree }) => {
            let (c0, c1) = (contraction(t0)?, contraction(t1)?);
            let dd = DilationDiff::new(&c0, &c1, *degree)?;
            for &p in &cfg.p_values {
                let r = dd.report(p);
                rows.push(Row::bound("dilation_diff.csv", id, "-", &r.bound));
                rows.push(Row::bound("dilation_diff.csv", id, "split", &r.split));
            }
            for (name, c) in [("T0", &c0), ("T1", &c1)] {
                let u = finite_dilation(c, *degree)?;
                let f = "dilation_property.csv";
                rows.push(Row::residual(f, id, "inf", &format!("powers:{name}"), u.power_residual(c), POWER_TOL));
                rows.push(Row::residual(f, id, "inf", &format!("unitary:{name}"), u.unitarity_residual(), UNITARITY_TOL));
            }
        }
        (CheckId::DoiExact, Instance::Unitary { u, v, x }) => {
            let (e, fd) = decompose_pair(u, v)?;
            let diff = u - v;
            let ux_xv = &(u * x) - &(x * v);
            let tol = COMMUTATOR_TOL * (1.0 + x.frobenius());
            for f in funcs.iter().filter(|f| f.is_trig_poly()) {
                let direct = &calc_spectral_decomp(f, &e) - &calc_spectral_decomp(f, &fd);
                let res = (&birman_solomyak_delta_with(f, &e, &fd, &diff)? - &direct).frobenius();
                rows.push(Row::residual("doi_exact.csv", id, "2", &f.id(), res, DOI_TOL));
                let com = commutator_identity_with(f, &e, &fd, x, &ux_xv)?;
                rows.push(Row::residual("doi_commutator.csv", id, "2", &f.id(), com, tol));
            }
        }
        (CheckId::HsEstimate, Instance::Hs { u, v, t0, t1 }) => {
            let (e, fd) = decompose_pair(u, v)?;
            let du = (u - v).frobenius();
            let (c0, c1) = (contraction(t0)?, contraction(t1)?);
            let dt = DiffNorms::of_diff(t1, t0)?;
            for f in &funcs {
                let lc = f.lip_chordal()?;
                let lhs = (&calc_spectral_decomp(f, &e) - &calc_spectral_decomp(f, &fd)).frobenius();
                // f(U) and f(V) are rebuilt from eigenbases, so a constant f leaves an O(ε) residue.
                let floor = HS_ROUNDOFF * u.rows() as f64 * f64::EPSILON * f.sup_norm();
                let rhs = lc * (1.0 + HS_REL) * du + floor;
                rows.push(Row::strict("hs_estimate.csv", id, "2", &f.id(), lhs, rhs, lc));
                let r = p2_chain_from(f, &c0, &calculus_diff(f, &c0, &c1)?, &dt)?;
                rows.push(Row::bound("hs_chain.csv", id, &f.id(), &r));
            }
        }
        (CheckId::HsEstimate, Instance::Zoo) => {
            for f in &funcs {
                let (la, lc) = (f.lip_arc()?, f.lip_chordal()?);
                let file = "lip_sandwich.csv";
                rows.push(Row::strict(file, id, "-", &format!("{}:arc<=chordal", f.id()), la, lc, 1.0));
                let rhs = std::f64::consts::FRAC_PI_2 * la + SANDWICH_TOL;
                rows.push(Row::strict(file, id, "-", &format!("{}:chordal<=pi/2*arc", f.id()), lc, rhs, std::f64::consts::FRAC_PI_2));
            }
        }
        (CheckId::TraceFormula, Instance::Shift { t0, t1, x }) => {
            let n = cfg.shift_degree;
            let eta = eta_recover(t0, t1, x, n)?;
            for f in funcs.iter().filter(|f| f.is_trig_poly() && f.degree() <= n) {
                let res = trace_formula_check(f, t0, t1, x, &eta)?;
                rows.push(Row::residual("trace_formula.csv", id, "-", &f.id(), res, TRACE_TOL));
            }
            let again = eta_recover(t0, t1, x, n)?;
            let dev = uniqueness_check(&eta, &again)?;
            rows.push(Row::residual("trace_formula.csv", id, "-", "uniqueness:rerun", dev, UNIQUENESS_TOL));
            let dil = eta_recover_dilation(&contraction(t0)?, &contraction(t1)?, x, n)?;
            let dev = uniqueness_check(&eta, &dil)?;
            rows.push(Row::residual("trace_formula.csv", id, "-", "uniqueness:dilation", dev, UNIQUENESS_TOL));
            out.eta = Some(eta);
        }
        (CheckId::Ratio, Instance::Pair { t0, t1 }) => {
            let (c0, c1) = (contraction(t0)?, contraction(t1)?);
            let dt = DiffNorms::of_diff(t1, t0)?;
            let n = cfg.dilation_degree;
            let paths = [&c0, &c1]
                .into_iter()
                .map(|c| {
                    let u = finite_dilation(c, n)?;
                    Ok((u.base_dim(), unitary_eig(u.u(), crate::calculus::UNITARY_TOL)?))
                })
                .collect::<Result<Vec<_>>>()?;
            for f in &funcs {
                let df = calculus_diff(f, &c0, &c1)?;
                let path_residual = if f.degree() <= n {
                    let mut worst: f64 = 0.0;
                    for ((b, d), c) in paths.iter().zip([&c0, &c1]) {
                        let comp = calc_spectral_decomp(f, d).block(0, 0, *b, *b);
                        worst = worst.max((&comp - &fourier_eval(f, c.mat())?).op_norm());
                    }
                    Some(worst)
                } else {
                    None
                };
                for &p in &cfg.p_values {
                    let mut record = lipschitz_ratio_from(f, c0.delta(), &df, &dt, p)?;
                    record.instance_id = id.into();
                    out.ratios.push(RatioRow { record, path_residual });
                }
            }
        }
        (CheckId::Blowup, Instance::Pair { t0, t1 }) => {
            let f = zoo::get(&cfg.blowup.function_id)
                .ok_or_else(|| Error::Config(format!("unknown function {}", cfg.blowup.function_id)))?;
            let (c0, c1) = (contraction(t0)?, contraction(t1)?);
            let dt = DiffNorms::of_diff(t1, t0)?;
            let df = calculus_diff(f, &c0, &c1)?;
            for &p in &cfg.p_values {
                let mut record = lipschitz_ratio_from(f, c0.delta(), &df, &dt, p)?;
                record.instance_id = id.into();
                out.ratios.push(RatioRow { record, path_residual: None });
            }
        }
        (check, inst) => {
            return Err(Error::InvalidArgument(format!(
                "instance kind {:?} does not fit check {check}",
                instance_kind(inst)
            )))
        }
    }
    Ok(out)
}

fn instance_kind(inst: &Instance) -> &'static str {
    match inst {
        Instance::Pair { .. } => "pair",
        Instance::Psd { .. } => "psd",
        Instance::Dilation { .. } => "dilation",
        Instance::Unitary { .. } => "unitary",
        Instance::Hs { .. } => "hs",
        Instance::Shift { .. } => "shift",
        Instance::Zoo => "zoo",
    }
}

/// One expected row of a reproduction bundle.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BundleRow {
    pub file: String,
    pub p: String,
    pub f_id: String,
    pub lhs: f64,
    pub rhs: f64,
    pub pass: bool,
}

/// Self-contained input for `replay`: config, instance and the rows it produced.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReproBundle {
    pub schema_version: u32,
    pub check: CheckId,
    pub instance_id: String,
    pub config: CampaignConfig,
    pub instance: Instance,
    pub rows: Vec<BundleRow>,
}

impl ReproBundle {
    pub fn new(cfg: &CampaignConfig, check: CheckId, id: &str, instance: Instance, rows: &[Row]) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            check,
            instance_id: id.into(),
            config: cfg.clone(),
            instance,
            rows: rows
                .iter()
                .map(|r| BundleRow {
                    file: r.file.clone(),
                    p: r.p.clone(),
                    f_id: r.f_id.clone(),
                    lhs: r.lhs,
                    rhs: r.rhs,
                    pass: r.pass,
                })
                .collect(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("bundle serialization is infallible")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let b: Self = serde_json::from_str(s)?;
        if b.schema_version != SCHEMA_VERSION {
            return Err(Error::Config(format!("unsupported bundle schema_version {}", b.schema_version)));
        }
        b.config.validate()?;
        Ok(b)
    }
}

/// A bundle holding every row of one trial, failing or not.
pub fn bundle_for_trial(cfg: &CampaignConfig, check: CheckId, trial: usize) -> Result<ReproBundle> {
    let id = instance_id(cfg, check, trial);
    let inst = generate(cfg, check, trial)?;
    let out = evaluate(cfg, check, &inst, &id)?;
    Ok(ReproBundle::new(cfg, check, &id, inst, &out.rows))
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReplayedRow {
    pub expected: BundleRow,
    pub lhs: f64,
    pub rhs: f64,
    pub pass: bool,
    pub reproduced: bool,
}

fn close(a: f64, b: f64) -> bool {
    a == b || (a - b).abs() <= REPLAY_TOL * a.abs().max(b.abs()).max(1.0)
}

/// Re-evaluates a bundle and compares each recorded row to `REPLAY_TOL`.
pub fn replay(bundle: &ReproBundle) -> Result<Vec<ReplayedRow>> {
    let out = evaluate(&bundle.config, bundle.check, &bundle.instance, &bundle.instance_id)?;
    bundle
        .rows
        .iter()
        .map(|want| {
            let got = out
                .rows
                .iter()
                .find(|r| r.key() == (want.file.as_str(), want.p.as_str(), want.f_id.as_str()))
                .ok_or_else(|| {
                    Error::InvalidArgument(format!("row {}/{}/{} not produced on replay", want.file, want.p, want.f_id))
                })?;
            Ok(ReplayedRow {
                expected: want.clone(),
                lhs: got.lhs,
                rhs: got.rhs,
                pass: got.pass,
                reproduced: close(got.lhs, want.lhs) && close(got.rhs, want.rhs),
            })
        })
        .collect()
}

/// A failing theorem row and the bundle written for it.
#[derive(Clone, Debug, PartialEq)]
pub struct Failure {
    pub row: Row,
    pub bundle: PathBuf,
}

#[derive(Clone, Debug)]
pub struct CampaignOutcome {
    pub exit_code: i32,
    pub rows: usize,
    pub failures: Vec<Failure>,
    pub ratio_records: usize,
    pub envelope_exceedances: usize,
    pub files: Vec<PathBuf>,
}

/// Runs the campaign on a pool of `threads` workers (0 picks the rayon default).
pub fn run_campaign(cfg: &CampaignConfig, threads: usize) -> Result<CampaignOutcome> {
    cfg.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    pool.install(|| run(cfg))
}

/// Per-trial results kept for report assembly; instances only for failing trials.
struct TrialResult {
    out: TrialOutput,
    failing: Option<Instance>,
}

fn run_trials(cfg: &CampaignConfig, check: CheckId, count: usize) -> Result<Vec<TrialResult>> {
    let results: Vec<Result<TrialResult>> = (0..count)
        .into_par_iter()
        .map(|t| {
            let id = instance_id(cfg, check, t);
            let inst = generate(cfg, check, t)?;
            let out = evaluate(cfg, check, &inst, &id)?;
            let failing = out.rows.iter().any(|r| !r.pass).then_some(inst);
            Ok(TrialResult { out, failing })
        })
        .collect();
    results.into_iter().collect()
}

fn fmt_f64(x: f64) -> String {
    format!("{x:?}")
}

fn write_rows(path: &Path, rows: &[&Row]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(CSV_HEADER)?;
    for r in rows {
        w.write_record([
            r.instance_id.as_str(),
            &r.p,
            &r.f_id,
            &fmt_f64(r.lhs),
            &fmt_f64(r.rhs),
            &fmt_f64(r.constant_used),
            &fmt_f64(r.slack),
            if r.pass { "true" } else { "false" },
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn write_ratios(path: &Path, rows: &[RatioRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(RATIO_HEADER)?;
    for r in rows {
        let x = &r.record;
        let mut rec = vec![x.instance_id.clone(), x.p.to_string(), x.f_id.clone()];
        rec.extend(
            [
                x.delta,
                x.lhs,
                x.diff_norm,
                x.lip_arc,
                x.lip_chordal,
                x.ratio,
                x.ratio_chordal,
                x.envelope,
                x.k_p,
                x.mixed_norm,
                x.ratio_mixed,
            ]
            .map(fmt_f64),
        );
        rec.push(r.path_residual.map(fmt_f64).unwrap_or_default());
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Coarse family of a zoo id, used to group ratio statistics.
pub fn f_class(id: &str) -> &'static str {
    if id.starts_with("z^") {
        "monomial"
    } else if id == "re_z" || id == "im_z" {
        "linear"
    } else if id.starts_with("abs_im_z_j") || id.starts_with("sawtooth_j") {
        "jackson"
    } else if id.starts_with("rand_poly_") {
        "random"
    } else {
        "other"
    }
}

/// Ratio exceeding the p = 2 envelope, on the chordal normalization.
pub fn exceeds_p2_envelope(r: &RatioRecord) -> bool {
    r.p == SchattenOrder::Finite(2.0) && r.ratio_chordal > r.envelope * (1.0 + ENVELOPE_TOL)
}

#[derive(Default)]
struct Agg {
    count: usize,
    failures: usize,
    min_slack: f64,
    max_ratio: f64,
}

impl Agg {
    fn push(&mut self, r: &Row) {
        if self.count == 0 {
            self.min_slack = r.slack;
            self.max_ratio = r.ratio();
        } else {
            self.min_slack = self.min_slack.min(r.slack);
            self.max_ratio = self.max_ratio.max(r.ratio());
        }
        self.count += 1;
        self.failures += usize::from(!r.pass);
    }

    fn value(&self) -> Value {
        json!({
            "rows": self.count,
            "failures": self.failures,
            "min_slack": self.min_slack,
            "max_ratio": self.max_ratio,
        })
    }
}

fn file_summary(rows: &[&Row]) -> Value {
    let mut total = Agg::default();
    let mut groups: BTreeMap<(&str, &str), Agg> = BTreeMap::new();
    for r in rows {
        total.push(r);
        groups.entry((r.p.as_str(), r.f_id.as_str())).or_default().push(r);
    }
    let groups: Vec<Value> = groups
        .iter()
        .map(|((p, f), a)| {
            let mut v = a.value();
            v["p"] = json!(p);
            v["f_id"] = json!(f);
            v
        })
        .collect();
    let mut v = total.value();
    v["groups"] = json!(groups);
    v
}

#[derive(Default)]
struct RatioAgg {
    count: usize,
    max_ratio: f64,
    max_ratio_chordal: f64,
    max_ratio_mixed: f64,
    max_over_envelope: f64,
    sum_ratio: f64,
    k_p: f64,
}

impl RatioAgg {
    fn push(&mut self, r: &RatioRecord) {
        self.count += 1;
        self.max_ratio = self.max_ratio.max(r.ratio);
        self.max_ratio_chordal = self.max_ratio_chordal.max(r.ratio_chordal);
        self.max_ratio_mixed = self.max_ratio_mixed.max(r.ratio_mixed);
        self.max_over_envelope = self.max_over_envelope.max(r.ratio_chordal / r.envelope);
        self.sum_ratio += r.ratio;
        self.k_p = r.k_p;
    }
}

fn ratio_summary(rows: &[RatioRow]) -> (Value, usize) {
    let mut groups: BTreeMap<(String, &str), RatioAgg> = BTreeMap::new();
    let mut exceed = 0;
    let mut path: f64 = 0.0;
    for r in rows {
        let x = &r.record;
        groups.entry((x.p.to_string(), f_class(&x.f_id))).or_default().push(x);
        exceed += usize::from(exceeds_p2_envelope(x));
        if let Some(pr) = r.path_residual {
            path = path.max(pr);
        }
    }
    let groups: Vec<Value> = groups
        .iter()
        .map(|((p, class), a)| {
            json!({
                "p": p,
                "f_class": class,
                "count": a.count,
                "max_ratio": a.max_ratio,
                "max_ratio_chordal": a.max_ratio_chordal,
                "max_ratio_mixed": a.max_ratio_mixed,
                "max_ratio_over_envelope": a.max_over_envelope,
                "k_p": a.k_p,
            })
        })
        .collect();
    let v = json!({
        "records": rows.len(),
        "p2_envelope_exceedances": exceed,
        "max_path_residual": path,
        "groups": groups,
    });
    (v, exceed)
}

/// Blow-up table: one line per `(δ, p)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BlowupLine {
    pub delta: f64,
    pub p: String,
    pub f_id: String,
    pub trials: usize,
    pub max_ratio: f64,
    pub max_ratio_chordal: f64,
    pub mean_ratio: f64,
    pub envelope: f64,
    pub max_over_envelope: f64,
}

fn blowup_table(cfg: &CampaignConfig, rows: &[RatioRow]) -> Vec<BlowupLine> {
    let b = &cfg.blowup;
    let np = cfg.p_values.len();
    let mut out = Vec::new();
    for (di, &delta) in b.deltas.iter().enumerate() {
        for (pi, &p) in cfg.p_values.iter().enumerate() {
            let mut agg = RatioAgg::default();
            for k in 0..b.trials {
                agg.push(&rows[(di * b.trials + k) * np + pi].record);
            }
            out.push(BlowupLine {
                delta,
                p: p.to_string(),
                f_id: b.function_id.clone(),
                trials: agg.count,
                max_ratio: agg.max_ratio,
                max_ratio_chordal: agg.max_ratio_chordal,
                mean_ratio: agg.sum_ratio / agg.count as f64,
                envelope: crate::bounds::dilation_constant(delta, p),
                max_over_envelope: agg.max_over_envelope,
            });
        }
    }
    out
}

fn write_blowup(dir: &Path, cfg: &CampaignConfig, lines: &[BlowupLine]) -> Result<Vec<PathBuf>> {
    let path = dir.join("blowup.csv");
    let mut w = csv::Writer::from_path(&path)?;
    w.write_record(BLOWUP_HEADER)?;
    for l in lines {
        w.write_record([
            fmt_f64(l.delta),
            l.p.clone(),
            l.f_id.clone(),
            l.trials.to_string(),
            fmt_f64(l.max_ratio),
            fmt_f64(l.max_ratio_chordal),
            fmt_f64(l.mean_ratio),
            fmt_f64(l.envelope),
            fmt_f64(l.max_over_envelope),
        ])?;
    }
    w.flush()?;
    let mut files = vec![path];
    for p in &cfg.p_values {
        let label = p.to_string();
        let text: String = lines
            .iter()
            .filter(|l| l.p == label)
            .map(|l| format!("{} {}\n", fmt_f64(l.delta), fmt_f64(l.max_ratio)))
            .collect();
        let path = dir.join(format!("blowup_p{label}.dat"));
        fs::write(&path, text)?;
        files.push(path);
    }
    Ok(files)
}

fn run(cfg: &CampaignConfig) -> Result<CampaignOutcome> {
    let dir = cfg.output_dir.clone();
    fs::create_dir_all(&dir)?;
    let mut files = Vec::new();
    let mut rows: Vec<Row> = Vec::new();
    let mut failing: Vec<(CheckId, String, Instance, Vec<Row>)> = Vec::new();
    let mut ratios: Vec<RatioRow> = Vec::new();
    let mut blowup_rows: Vec<RatioRow> = Vec::new();
    let mut eta: Option<ShiftFunction> = None;

    for &check in &cfg.checks {
        let count = if check == CheckId::Blowup { cfg.blowup.deltas.len() * cfg.blowup.trials } else { cfg.trials };
        let mut results = run_trials(cfg, check, count)?;
        if check == CheckId::HsEstimate {
            let id = format!("{check}-{:016x}-zoo", cfg.master_seed);
            let out = evaluate(cfg, check, &Instance::Zoo, &id)?;
            let failing = out.rows.iter().any(|r| !r.pass).then_some(Instance::Zoo);
            results.push(TrialResult { out, failing });
        }
        for (t, r) in results.into_iter().enumerate() {
            if let Some(inst) = r.failing {
                let id = r.out.rows.first().map(|x| x.instance_id.clone()).unwrap_or_default();
                failing.push((check, id, inst, r.out.rows.clone()));
            }
            if check == CheckId::TraceFormula && t == 0 {
                eta = r.out.eta;
            }
            rows.extend(r.out.rows);
            match check {
                CheckId::Ratio => ratios.extend(r.out.ratios),
                CheckId::Blowup => blowup_rows.extend(r.out.ratios),
                _ => {}
            }
        }
    }
    let blowup = cfg.checks.contains(&CheckId::Blowup).then(|| blowup_table(cfg, &blowup_rows));

    let mut checks_summary = serde_json::Map::new();
    for &check in cfg.checks.iter().filter(|c| !c.is_study()) {
        let mut per_file = serde_json::Map::new();
        for &file in check.row_files() {
            let these: Vec<&Row> = rows.iter().filter(|r| r.file == file).collect();
            let path = dir.join(file);
            write_rows(&path, &these)?;
            files.push(path);
            per_file.insert(file.into(), file_summary(&these));
        }
        checks_summary.insert(check.name().into(), Value::Object(per_file));
    }

    let mut failures = Vec::new();
    if !failing.is_empty() {
        let repro = dir.join("repro");
        fs::create_dir_all(&repro)?;
        for (check, id, inst, trial_rows) in failing {
            let bundle = ReproBundle::new(cfg, check, &id, inst, &trial_rows);
            let path = repro.join(format!("{id}.json"));
            fs::write(&path, bundle.to_json())?;
            for r in trial_rows.into_iter().filter(|r| !r.pass) {
                failures.push(Failure { row: r, bundle: path.clone() });
            }
        }
    }

    let mut summary = json!({
        "schema_version": SCHEMA_VERSION,
        "config": cfg.report_value(),
        "checks": Value::Object(checks_summary),
        "rows": rows.len(),
        "failures": failures.iter().map(|f| json!({
            "instance_id": f.row.instance_id,
            "file": f.row.file,
            "p": f.row.p,
            "f_id": f.row.f_id,
            "lhs": f.row.lhs,
            "rhs": f.row.rhs,
            "bundle": f.bundle.file_name().map(|s| format!("repro/{}", s.to_string_lossy())),
        })).collect::<Vec<_>>(),
        "notes": [
            "finite dilation differences have finite rank, so the trace-class hypotheses hold automatically",
            "ratio studies are measurements; the p = 2 envelope is compared on the chordal normalization",
        ],
    });

    let mut exceed = 0;
    if cfg.checks.contains(&CheckId::Ratio) {
        let path = dir.join("ratio.csv");
        write_ratios(&path, &ratios)?;
        files.push(path);
        let (v, e) = ratio_summary(&ratios);
        summary["ratio"] = v;
        exceed = e;
    }
    if let Some(lines) = &blowup {
        files.extend(write_blowup(&dir, cfg, lines)?);
        summary["blowup"] = serde_json::to_value(lines)?;
    }
    if let Some(eta) = &eta {
        let (re, im) = eta.plot_text();
        for (name, text) in [("eta_re.dat", re), ("eta_im.dat", im), ("eta.json", eta.to_json())] {
            let path = dir.join(name);
            fs::write(&path, text)?;
            files.push(path);
        }
    }

    let exit_code = i32::from(!failures.is_empty());
    summary["exit_code"] = json!(exit_code);
    let path = dir.join("summary.json");
    fs::write(&path, serde_json::to_string_pretty(&summary)? + "\n")?;
    files.push(path);

    Ok(CampaignOutcome {
        exit_code,
        rows: rows.len(),
        failures,
        ratio_records: ratios.len(),
        envelope_exceedances: exceed,
        files,
    })
}
