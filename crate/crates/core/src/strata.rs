//! The admissible Newton polygons for signature `(1, n−1)`, classification of
//! computed polygons, and the verification harness for the local stratum
//! equations at field-valued points of the deformation space.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Serialize, Serializer};

use crate::displayzoo::{
    deformation_display, stratum_block_size, supersingular_module, DeformationForm, DeformationPoint,
};
use crate::error::{Error, Result};
use crate::fcrystal::{
    a_number, frobenius_stable_rank, newton_polygon_single, newton_slopes, polarization_check, signature,
    validate_display, BasisLabel, NewtonPolygon, PolygonJson, Slope,
};
use crate::slopegraph::{build_graph, cycles_through, karp_min_cycle_mean, CycleJson, SlopeGraph};
use crate::wittring::{ContextJson, FieldElement, RingContext};

/// Environment variable overriding the default point budget.
pub const BUDGET_ENV: &str = "GUSTRATA_BUDGET";
pub const DEFAULT_BUDGET: u128 = 200_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum StratumLabel {
    Sigma,
    /// `ξ_{2j}`, stored by `j`.
    Xi(u32),
    Inadmissible,
}

impl fmt::Display for StratumLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StratumLabel::Sigma => f.write_str("sigma"),
            StratumLabel::Xi(j) => write!(f, "xi_{}", 2 * j),
            StratumLabel::Inadmissible => f.write_str("inadmissible"),
        }
    }
}

impl FromStr for StratumLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sigma" => Ok(StratumLabel::Sigma),
            "inadmissible" => Ok(StratumLabel::Inadmissible),
            _ => {
                let k: u32 = s
                    .strip_prefix("xi_")
                    .and_then(|k| k.parse().ok())
                    .filter(|k| k % 2 == 0 && *k > 0)
                    .ok_or_else(|| Error::Parse(format!("bad stratum label {s:?}")))?;
                Ok(StratumLabel::Xi(k / 2))
            }
        }
    }
}

impl Serialize for StratumLabel {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StratumDescriptor {
    pub label: StratumLabel,
    pub j: Option<u32>,
    pub lambda_min: Slope,
    pub polygon: NewtonPolygon,
    /// Codimension in the moduli space; metadata only.
    pub codim: u32,
    /// `(m, r)`: the module is `M(m) ⊕ N^r`.
    pub decomposition: (u32, u32),
}

#[derive(Serialize)]
pub struct StratumJson {
    pub label: String,
    pub j: Option<u32>,
    pub lambda_min: String,
    pub polygon: PolygonJson,
    pub codim: u32,
    pub decomposition: DecompositionJson,
}

#[derive(Serialize)]
pub struct DecompositionJson {
    pub m: u32,
    pub r: u32,
}

impl StratumDescriptor {
    pub fn to_json(&self) -> StratumJson {
        StratumJson {
            label: self.label.to_string(),
            j: self.j,
            lambda_min: self.lambda_min.to_string(),
            polygon: self.polygon.to_json(),
            codim: self.codim,
            decomposition: DecompositionJson {
                m: self.decomposition.0,
                r: self.decomposition.1,
            },
        }
    }
}

fn check_n(n: u32) -> Result<()> {
    if n < 3 {
        return Err(Error::OutOfRange(format!("n must be ≥ 3, got {n}")));
    }
    Ok(())
}

/// `λ(2j) = 1/2 − 1/(2(⌊n/2⌋+1−j))`.
pub fn lambda_min(n: u32, j: u32) -> Result<Slope> {
    let h = stratum_block_size(n, j)? as i64;
    Ok(Slope::new(1, 2) - Slope::new(1, 2 * h))
}

/// Polygon of `M(2h)`: slopes `(h∓1)/2h`, each with multiplicity `2h`.
fn m_even_polygon(h: u32) -> NewtonPolygon {
    let (h, m) = (h as i64, 2 * h as usize);
    NewtonPolygon::from_slopes([(Slope::new(h - 1, 2 * h), m), (Slope::new(h + 1, 2 * h), m)])
}

fn half(rank: usize) -> NewtonPolygon {
    NewtonPolygon::isoclinic(Slope::new(1, 2), rank)
}

/// The `1 + ⌊n/2⌋` admissible strata: `σ` first, then `ξ₂, ξ₄, …`, so that
/// polygons rise and `λ` strictly falls along the list. Polygons come from the
/// closed forms of `M(2h)` and `N`; the independent check against computed
/// slopes of the expected modules lives in the test suites.
pub fn catalog(n: u32) -> Result<Vec<StratumDescriptor>> {
    check_n(n)?;
    let half_n = n / 2;
    let mut out = vec![StratumDescriptor {
        label: StratumLabel::Sigma,
        j: None,
        lambda_min: Slope::new(1, 2),
        polygon: half(2 * n as usize),
        codim: half_n,
        decomposition: if n % 2 == 1 { (n, 0) } else { (n - 1, 1) },
    }];
    for j in 1..=half_n {
        let h = stratum_block_size(n, j)?;
        let r = n - 2 * h;
        out.push(StratumDescriptor {
            label: StratumLabel::Xi(j),
            j: Some(j),
            lambda_min: lambda_min(n, j)?,
            polygon: m_even_polygon(h).union(&half(2 * r as usize)),
            codim: half_n - j,
            decomposition: (2 * h, r),
        });
    }
    Ok(out)
}

/// Stratum of a polygon of rank `2n`, by its smallest slope and full shape.
pub fn classify(n: u32, polygon: &NewtonPolygon) -> Result<StratumLabel> {
    check_n(n)?;
    if polygon.rank() != 2 * n as usize {
        return Err(Error::OutOfRange(format!(
            "polygon has rank {}, expected {}",
            polygon.rank(),
            2 * n
        )));
    }
    let cat = catalog(n)?;
    let min = polygon.min_slope();
    Ok(cat
        .iter()
        .find(|s| Some(s.lambda_min) == min && s.polygon == *polygon)
        .map_or(StratumLabel::Inadmissible, |s| s.label))
}

/// The stratum predicted by which coordinates vanish.
///
/// Odd `n`: a nonzero `s_{2j}` (`1 ≤ j ≤ ⌊n/2⌋`) puts the point in `ξ_{2j}` or a
/// larger-`j` stratum, so the prediction is `ξ_{2·max j}`; no even coordinate
/// nonzero means `σ`.
///
/// Even `n` (calibrated against computed slopes, see `data/even_calibration.tsv`):
/// a nonzero `s_{2i}` with `2 ≤ 2i ≤ n−2` contributes `j = i + 1`; in the
/// polarized form a nonzero `s₀` contributes `j = 1`, in the literal form it
/// contributes nothing. Odd-index coordinates never matter.
pub fn predicted_stratum(point: &DeformationPoint, form: DeformationForm) -> StratumLabel {
    let n = point.n();
    let nonzero = |k: u32| point.s(k).is_some_and(|v| !v.is_zero());
    let contributions: Vec<u32> = if n % 2 == 1 {
        (1..=n / 2).filter(|&j| nonzero(2 * j)).collect()
    } else {
        let s0 = (form == DeformationForm::Polarized && nonzero(0)).then_some(1);
        s0.into_iter()
            .chain((1..n / 2).filter(|&i| nonzero(2 * i)).map(|i| i + 1))
            .collect()
    };
    contributions
        .into_iter()
        .max()
        .map_or(StratumLabel::Sigma, StratumLabel::Xi)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Mode {
    Exhaustive,
    Random { count: u64, seed: u64 },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct VerifyConfig {
    pub n: u32,
    pub p: u64,
    pub d: usize,
    pub mode: Mode,
    pub form: DeformationForm,
    /// Working precision; `None` means `4·n·d + 8`.
    pub precision: Option<u32>,
    pub budget: u128,
}

impl VerifyConfig {
    pub fn new(n: u32, p: u64, d: usize, mode: Mode) -> Self {
        VerifyConfig {
            n,
            p,
            d,
            mode,
            form: DeformationForm::default(),
            precision: None,
            budget: default_budget(),
        }
    }

    pub fn resolved_precision(&self) -> u32 {
        self.precision.unwrap_or(default_precision(self.n, self.d))
    }

    /// Number of points the run will evaluate.
    pub fn point_count(&self) -> u128 {
        match self.mode {
            Mode::Exhaustive => (self.p as u128)
                .checked_pow(self.d as u32 * (self.n.saturating_sub(1)))
                .unwrap_or(u128::MAX),
            Mode::Random { count, .. } => count as u128,
        }
    }
}

pub fn default_precision(n: u32, d: usize) -> u32 {
    4 * n * d as u32 + 8
}

/// `GUSTRATA_BUDGET` if set and parseable, else [`DEFAULT_BUDGET`].
pub fn default_budget() -> u128 {
    std::env::var(BUDGET_ENV)
        .ok()
        .and_then(|v| v.trim().parse().ok())
        .unwrap_or(DEFAULT_BUDGET)
}

/// Everything computed at one point.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PointOutcome {
    pub index: u64,
    pub point: DeformationPoint,
    pub description: String,
    pub result: std::result::Result<PointResult, String>,
    /// Precision at which the reported slopes were obtained.
    pub precision_used: u32,
    pub rerun: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PointResult {
    pub slopes: NewtonPolygon,
    pub classified: StratumLabel,
    pub predicted: StratumLabel,
    pub min_cycle_slope: Option<Slope>,
    /// Cycles through `u₁` whose slope is below the smallest Newton slope.
    pub slope_bound_violations: Vec<CycleJson>,
    pub karp_min_mean: Option<Slope>,
    /// `min_cycle_slope` after dropping positive-weight edges absent at the zero point.
    pub min_cycle_slope_without_extra: Option<Slope>,
    /// Odd `n`: indices `2j` with `s_{2j} ≠ 0` lacking a cycle of length `n+1−2j`, weight `(n−1)/2−j`.
    pub missing_short_cycles: Vec<u32>,
    pub structural_failures: Vec<String>,
    /// Slopes recomputed on the display built natively at twice the precision.
    pub doubled_slopes: NewtonPolygon,
    pub signature: (usize, usize),
    pub a_number: Option<usize>,
}

fn evaluate(
    ctx: &Arc<RingContext>,
    pt: &DeformationPoint,
    form: DeformationForm,
    base: &SlopeGraph,
) -> Result<PointResult> {
    let n = pt.n();
    let d = deformation_display(ctx, pt, form)?;
    let mut structural = Vec::new();
    let report = validate_display(&d)?;
    for c in report.checks.iter().filter(|c| !c.passed) {
        structural.push(format!("{}: {}", c.name, c.detail));
    }
    let pol = polarization_check(&d)?;
    if !pol.is_empty() {
        let pairs: Vec<String> = pol.iter().map(|v| format!("({}, {})", v.row, v.col)).collect();
        structural.push(format!("polarization: {}", pairs.join(" ")));
    }
    let sig = signature(&d)?;
    if sig != (1, n as usize - 1) {
        structural.push(format!("signature {sig:?}"));
    }
    let slopes = newton_slopes(&d)?;
    let violations = slopes.invariant_violations();
    if !violations.is_empty() {
        structural.push(format!("polygon: {}", violations.join("; ")));
    }
    let stable_rank = frobenius_stable_rank(&d);
    let slope_zero = slopes.multiplicity(Slope::from_integer(0));
    if stable_rank != slope_zero {
        structural.push(format!(
            "p-rank {slope_zero} from slopes but F̄ has stable rank {stable_rank}"
        ));
    }
    let a_number = a_number(&d).ok();

    let doubled_ctx = Arc::new(ctx.with_precision(2 * ctx.precision())?);
    let doubled_slopes = newton_polygon_single(&deformation_display(&doubled_ctx, pt, form)?)?;

    let graph = build_graph(&d);
    let u1 = BasisLabel::u(1);
    let cycles = cycles_through(&graph, &u1)?;
    let min_newton = slopes.min_slope().expect("nonempty polygon");
    let min_cycle = cycles.iter().map(|c| c.slope).min();
    let slope_bound_violations = cycles
        .iter()
        .filter(|c| c.slope < min_newton)
        .map(|c| c.to_json())
        .collect();
    let filtered = graph.without_extra_black_edges(base);
    let min_cycle_slope_without_extra = cycles_through(&filtered, &u1)?.iter().map(|c| c.slope).min();

    let mut missing_short_cycles = Vec::new();
    if n % 2 == 1 {
        for j in 1..=n / 2 {
            if pt.s(2 * j).is_some_and(|v| !v.is_zero()) {
                let (len, w) = ((n + 1 - 2 * j) as usize, ((n - 1) / 2 - j) as u64);
                if !cycles.iter().any(|c| c.length == len && c.weight == w) {
                    missing_short_cycles.push(2 * j);
                }
            }
        }
    }

    Ok(PointResult {
        classified: classify(n, &slopes)?,
        predicted: predicted_stratum(pt, form),
        slopes,
        min_cycle_slope: min_cycle,
        slope_bound_violations,
        karp_min_mean: karp_min_cycle_mean(&graph),
        min_cycle_slope_without_extra,
        missing_short_cycles,
        structural_failures: structural,
        doubled_slopes,
        signature: sig,
        a_number,
    })
}

/// Evaluates at the configured precision; on a precision failure, once more at
/// twice that precision.
fn evaluate_with_rerun(
    cfg: &VerifyConfig,
    ctx: &Arc<RingContext>,
    doubled: &Arc<RingContext>,
    index: u64,
    point: DeformationPoint,
    bases: &(SlopeGraph, SlopeGraph),
) -> PointOutcome {
    let description = point.describe(ctx);
    let first = evaluate(ctx, &point, cfg.form, &bases.0);
    let (result, precision_used, rerun) = match first {
        Err(e) if e.is_precision() => (evaluate(doubled, &point, cfg.form, &bases.1), doubled.precision(), true),
        other => (other, ctx.precision(), false),
    };
    PointOutcome {
        index,
        point,
        description,
        result: result.map_err(|e| e.to_string()),
        precision_used,
        rerun,
    }
}

fn point_from_index(ctx: &RingContext, n: u32, mut index: u128) -> Result<DeformationPoint> {
    let q = ctx.field().size() as u128;
    let mut params = vec![ctx.field().zero(); (n - 1) as usize];
    // first coordinate most significant
    for slot in params.iter_mut().rev() {
        *slot = ctx.field().from_index((index % q) as u64)?;
        index /= q;
    }
    DeformationPoint::new(n, params)
}

/// The points a run visits, in enumeration order.
pub fn enumerate_points(cfg: &VerifyConfig, ctx: &RingContext) -> Result<Vec<DeformationPoint>> {
    let total = cfg.point_count();
    if total > cfg.budget {
        return Err(Error::BudgetExceeded {
            needed: total,
            budget: cfg.budget,
        });
    }
    match cfg.mode {
        Mode::Exhaustive => (0..total).map(|i| point_from_index(ctx, cfg.n, i)).collect(),
        Mode::Random { count, seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let q = ctx.field().size();
            (0..count)
                .map(|_| {
                    let params: Result<Vec<FieldElement>> = (1..cfg.n)
                        .map(|_| ctx.field().from_index(rng.gen_range(0..q)))
                        .collect();
                    DeformationPoint::new(cfg.n, params?)
                })
                .collect()
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ToolInfo {
    pub name: &'static str,
    pub version: &'static str,
}

pub fn tool_info() -> ToolInfo {
    ToolInfo {
        name: "gustrata",
        version: env!("CARGO_PKG_VERSION"),
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Agreement {
    pub agree: u64,
    pub evaluated: u64,
    pub rate: f64,
    /// `matrix[classified][predicted]` = number of points.
    pub matrix: BTreeMap<String, BTreeMap<String, u64>>,
}

#[derive(Clone, Debug, Serialize)]
pub struct PointNote {
    pub index: u64,
    pub point: String,
    pub detail: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct SlopeBoundViolation {
    pub index: u64,
    pub point: String,
    pub min_newton_slope: String,
    pub cycle: CycleJson,
}

#[derive(Clone, Debug, Serialize)]
pub struct CycleSlopeMismatch {
    pub index: u64,
    pub point: String,
    pub min_newton_slope: String,
    pub min_cycle_slope: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Findings {
    /// Points where Karp's global minimum cycle mean differs from the minimum over cycles through `u₁`.
    pub karp_differs_from_u1_minimum: u64,
    /// Points where dropping the extra positive-weight edges changes the minimum cycle slope through `u₁`.
    pub extra_black_edges_change_minimum: u64,
    /// Odd `n`: points with a nonzero `s_{2j}` but no cycle of the predicted length and weight.
    pub missing_short_cycles: Vec<PointNote>,
    /// Even `n`: number of points with `s₀ ≠ 0` whose stratum changes when `s₀` is set to zero
    /// (`None` for odd `n`).
    pub s0_changes_stratum: Option<u64>,
    /// Fraction of points with `min cycle slope = min Newton slope`.
    pub cycle_slope_agreement_rate: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct VerificationReport {
    pub tool: ToolInfo,
    pub config: VerifyConfig,
    pub context: ContextJson,
    pub n: u32,
    pub p: u64,
    pub d: usize,
    pub mode: Mode,
    pub points: u64,
    pub agreement: Agreement,
    pub disagreements: Vec<PointNote>,
    pub slope_bound_violations: Vec<SlopeBoundViolation>,
    pub cycle_slope_mismatches: Vec<CycleSlopeMismatch>,
    pub counts_by_stratum: BTreeMap<String, u64>,
    pub structural_failures: Vec<PointNote>,
    /// Points whose slopes changed when rebuilt at doubled precision.
    pub doubling_mismatches: Vec<PointNote>,
    pub precision_reruns: Vec<PointNote>,
    pub precision_failures: Vec<PointNote>,
    pub findings: Findings,
}

impl VerificationReport {
    /// Predictions and the slope inequality held everywhere and every display was sound.
    pub fn verified(&self) -> bool {
        self.disagreements.is_empty()
            && self.slope_bound_violations.is_empty()
            && self.structural_failures.is_empty()
            && self.doubling_mismatches.is_empty()
            && self.precision_failures.is_empty()
    }

    pub fn to_tsv(&self) -> String {
        let mut out = String::from("key\tvalue\n");
        let mut row = |k: &str, v: String| {
            out.push_str(k);
            out.push('\t');
            out.push_str(&v);
            out.push('\n');
        };
        row("n", self.n.to_string());
        row("p", self.p.to_string());
        row("d", self.d.to_string());
        row("N", self.context.precision.to_string());
        row("modulus", format!("{:?}", self.context.modulus));
        row("form", self.config.form.to_string());
        row(
            "mode",
            match self.mode {
                Mode::Exhaustive => "exhaustive".into(),
                Mode::Random { count, seed } => format!("random(count={count},seed={seed})"),
            },
        );
        row("points", self.points.to_string());
        row(
            "agreement",
            format!("{}/{}", self.agreement.agree, self.agreement.evaluated),
        );
        row("slope_bound_violations", self.slope_bound_violations.len().to_string());
        row("cycle_slope_mismatches", self.cycle_slope_mismatches.len().to_string());
        row("structural_failures", self.structural_failures.len().to_string());
        row("doubling_mismatches", self.doubling_mismatches.len().to_string());
        row("precision_reruns", self.precision_reruns.len().to_string());
        row("precision_failures", self.precision_failures.len().to_string());
        row(
            "karp_differs_from_u1_minimum",
            self.findings.karp_differs_from_u1_minimum.to_string(),
        );
        row(
            "extra_black_edges_change_minimum",
            self.findings.extra_black_edges_change_minimum.to_string(),
        );
        row(
            "s0_changes_stratum",
            self.findings.s0_changes_stratum.map_or("n/a".into(), |v| v.to_string()),
        );
        for (label, count) in &self.counts_by_stratum {
            row(&format!("count[{label}]"), count.to_string());
        }
        row("version", self.tool.version.to_string());
        out
    }
}

/// Runs the harness. Points are evaluated in parallel; the report depends only
/// on the configuration.
pub fn verify_local_strata(cfg: &VerifyConfig) -> Result<VerificationReport> {
    check_n(cfg.n)?;
    let precision = cfg.resolved_precision();
    let ctx = Arc::new(RingContext::new(cfg.p, cfg.d, precision)?);
    let doubled = Arc::new(ctx.with_precision(2 * precision)?);
    let points = enumerate_points(cfg, &ctx)?;
    let bases = (
        build_graph(&supersingular_module(&ctx, cfg.n)?),
        build_graph(&supersingular_module(&doubled, cfg.n)?),
    );
    let outcomes: Vec<PointOutcome> = points
        .into_par_iter()
        .enumerate()
        .map(|(i, pt)| evaluate_with_rerun(cfg, &ctx, &doubled, i as u64, pt, &bases))
        .collect();

    // s₀ counterparts, for even n
    let s0_changes = if cfg.n % 2 == 0 {
        let known: HashMap<&DeformationPoint, StratumLabel> = outcomes
            .iter()
            .filter_map(|o| o.result.as_ref().ok().map(|r| (&o.point, r.classified)))
            .collect();
        let with_s0: Vec<&PointOutcome> = outcomes
            .iter()
            .filter(|o| o.result.is_ok() && o.point.s(0).is_some_and(|v| !v.is_zero()))
            .collect();
        let counterpart = |pt: &DeformationPoint| -> Result<DeformationPoint> {
            let mut params = pt.params().to_vec();
            params[0] = ctx.field().zero();
            DeformationPoint::new(cfg.n, params)
        };
        let changed: Vec<bool> = with_s0
            .par_iter()
            .map(|o| -> Result<bool> {
                let zeroed = counterpart(&o.point)?;
                let label = match known.get(&zeroed) {
                    Some(l) => *l,
                    None => {
                        let d = deformation_display(&ctx, &zeroed, cfg.form)?;
                        classify(cfg.n, &newton_slopes(&d)?)?
                    }
                };
                Ok(label != o.result.as_ref().expect("filtered").classified)
            })
            .collect::<Result<_>>()?;
        Some(changed.iter().filter(|&&c| c).count() as u64)
    } else {
        None
    };

    let mut agreement = Agreement {
        agree: 0,
        evaluated: 0,
        rate: 0.0,
        matrix: BTreeMap::new(),
    };
    let mut counts: BTreeMap<String, u64> = BTreeMap::new();
    let (mut disagreements, mut bound, mut mismatch, mut structural) = (vec![], vec![], vec![], vec![]);
    let (mut doubling, mut reruns, mut failures, mut missing) = (vec![], vec![], vec![], vec![]);
    let (mut karp_diff, mut extra_diff, mut equal_min) = (0u64, 0u64, 0u64);
    let note = |o: &PointOutcome, detail: String| PointNote {
        index: o.index,
        point: o.description.clone(),
        detail,
    };

    for o in &outcomes {
        if o.rerun {
            reruns.push(note(o, format!("re-run at N = {}", o.precision_used)));
        }
        let r = match &o.result {
            Ok(r) => r,
            Err(e) => {
                failures.push(note(o, e.clone()));
                continue;
            }
        };
        agreement.evaluated += 1;
        *agreement
            .matrix
            .entry(r.classified.to_string())
            .or_default()
            .entry(r.predicted.to_string())
            .or_default() += 1;
        *counts.entry(r.classified.to_string()).or_default() += 1;
        if r.classified == r.predicted {
            agreement.agree += 1;
        } else {
            disagreements.push(note(
                o,
                format!("classified {} ({}), predicted {}", r.classified, r.slopes, r.predicted),
            ));
        }
        let min_newton = r.slopes.min_slope().expect("nonempty polygon");
        for c in &r.slope_bound_violations {
            bound.push(SlopeBoundViolation {
                index: o.index,
                point: o.description.clone(),
                min_newton_slope: min_newton.to_string(),
                cycle: c.clone(),
            });
        }
        if r.min_cycle_slope == Some(min_newton) {
            equal_min += 1;
        } else {
            mismatch.push(CycleSlopeMismatch {
                index: o.index,
                point: o.description.clone(),
                min_newton_slope: min_newton.to_string(),
                min_cycle_slope: r.min_cycle_slope.map(|s| s.to_string()),
            });
        }
        if !r.structural_failures.is_empty() {
            structural.push(note(o, r.structural_failures.join("; ")));
        }
        if r.doubled_slopes != r.slopes {
            doubling.push(note(o, format!("{} at N, {} at 2N", r.slopes, r.doubled_slopes)));
        }
        if r.karp_min_mean != r.min_cycle_slope {
            karp_diff += 1;
        }
        if r.min_cycle_slope_without_extra != r.min_cycle_slope {
            extra_diff += 1;
        }
        if !r.missing_short_cycles.is_empty() {
            missing.push(note(o, format!("no short cycle for s{:?}", r.missing_short_cycles)));
        }
    }
    let evaluated = agreement.evaluated;
    let rate = |k: u64| {
        if evaluated == 0 {
            0.0
        } else {
            k as f64 / evaluated as f64
        }
    };
    agreement.rate = rate(agreement.agree);

    Ok(VerificationReport {
        tool: tool_info(),
        config: cfg.clone(),
        context: ctx.to_json(),
        n: cfg.n,
        p: cfg.p,
        d: cfg.d,
        mode: cfg.mode,
        points: outcomes.len() as u64,
        agreement,
        disagreements,
        slope_bound_violations: bound,
        cycle_slope_mismatches: mismatch,
        counts_by_stratum: counts,
        structural_failures: structural,
        doubling_mismatches: doubling,
        precision_reruns: reruns,
        precision_failures: failures,
        findings: Findings {
            karp_differs_from_u1_minimum: karp_diff,
            extra_black_edges_change_minimum: extra_diff,
            missing_short_cycles: missing,
            s0_changes_stratum: s0_changes,
            cycle_slope_agreement_rate: rate(equal_min),
        },
    })
}

/// One row of the even-`n` calibration table.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CalibrationRow {
    pub form: DeformationForm,
    pub n: u32,
    pub p: u64,
    /// Coordinates that are nonzero, e.g. `s0,s2`; `-` for none.
    pub support: String,
    pub points: u64,
    /// Distinct strata observed over the points with this support.
    pub observed: Vec<StratumLabel>,
    pub predicted: StratumLabel,
}

pub const CALIBRATION_HEADER: &str = "form\tn\tp\tsupport\tpoints\tobserved\tpredicted";

impl CalibrationRow {
    pub fn to_tsv(&self) -> String {
        let observed: Vec<String> = self.observed.iter().map(ToString::to_string).collect();
        format!(
            "{}\t{}\t{}\t{}\t{}\t{}\t{}",
            self.form,
            self.n,
            self.p,
            self.support,
            self.points,
            observed.join(","),
            self.predicted
        )
    }
}

/// Brute-force table: for each pattern of nonzero coordinates, the strata the
/// computed slopes fall in, next to the prediction rule.
pub fn even_calibration(n: u32, p: u64, form: DeformationForm) -> Result<Vec<CalibrationRow>> {
    let mut cfg = VerifyConfig::new(n, p, 1, Mode::Exhaustive);
    cfg.form = form;
    cfg.budget = u128::MAX;
    let ctx = Arc::new(RingContext::new(p, 1, cfg.resolved_precision())?);
    let points = enumerate_points(&cfg, &ctx)?;
    let labels: Vec<(String, StratumLabel, StratumLabel)> = points
        .par_iter()
        .map(|pt| -> Result<_> {
            let support: Vec<String> = DeformationPoint::coordinate_indices(n)
                .into_iter()
                .filter(|&k| pt.s(k).is_some_and(|v| !v.is_zero()))
                .map(|k| format!("s{k}"))
                .collect();
            let support = if support.is_empty() {
                "-".to_string()
            } else {
                support.join(",")
            };
            let d = deformation_display(&ctx, pt, form)?;
            Ok((support, classify(n, &newton_slopes(&d)?)?, predicted_stratum(pt, form)))
        })
        .collect::<Result<_>>()?;
    let mut grouped: BTreeMap<(usize, String), (u64, Vec<StratumLabel>, StratumLabel)> = BTreeMap::new();
    for (support, observed, predicted) in labels {
        let key = (if support == "-" { 0 } else { support.split(',').count() }, support);
        let e = grouped.entry(key).or_insert((0, vec![], predicted));
        e.0 += 1;
        if !e.1.contains(&observed) {
            e.1.push(observed);
            e.1.sort();
        }
    }
    Ok(grouped
        .into_iter()
        .map(|((_, support), (points, observed, predicted))| CalibrationRow {
            form,
            n,
            p,
            support,
            points,
            observed,
            predicted,
        })
        .collect())
}

/// The shipped table: `n ∈ {4, 6}`, `p ∈ {2, 3}`, both forms.
pub fn calibration_table() -> Result<String> {
    let mut out = format!("{CALIBRATION_HEADER}\n");
    for form in [DeformationForm::Polarized, DeformationForm::Literal] {
        for n in [4, 6] {
            for p in [2, 3] {
                for row in even_calibration(n, p, form)? {
                    out.push_str(&row.to_tsv());
                    out.push('\n');
                }
            }
        }
    }
    Ok(out)
}
