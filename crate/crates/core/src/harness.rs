//! Experiment orchestration: instance generation, shared pre-generated
//! labels, policy rollouts, and opportunity-cost aggregation.
//!
//! A run compares policies on the same footing:
//!
//! ```text
//! instance   M alternatives x in [low, high]^d, intercept-augmented,
//!            truth w*_i ~ N(0, 1/lambda) (or a perturbed CSV fit)
//! labels     one M x N table per replication, labels[m][n] drawn once
//!            with P(+1) = sigma(w*' x_m) and shared by every policy
//! rollout    N steps of select / observe / update, scoring after each
//!            step the implementation decision x+ = argmax predictive:
//!            oc[n] = max_x sigma(w*' x) - sigma(w*' x+)
//! report     pointwise mean and standard error of oc over replications
//! ```
//!
//! Sharing the label table removes outcome noise from the comparison;
//! two policies that measure the same alternative at the same step see
//! the same label. Every stream of randomness is derived from the master
//! seed, so a configuration reproduces byte-identical output.
//!
//! `labels[m][n]` is indexed by (alternative, step), so re-measuring an
//! alternative at a different step can yield a different outcome.

use crate::baselines::{baseline_select, BaselineKind, BaselinePolicy};
use crate::belief::{
    implementation_decision, predict_success, Alternative, AlternativeSet, GaussianBelief,
};
use crate::error::{Error, Result};
use crate::kg::{kg_scores, select_offline, select_online, transition, KgConfig, Updater};
use crate::laplace::{laplace_step, BisectionConfig, Observation};
use crate::links::{sigma, Label, Link};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::path::Path;

/// Shape of a synthetic instance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    /// Number of alternatives.
    pub m: usize,
    /// Raw feature dimension, before the intercept is prepended.
    pub d: usize,
    /// Prior precision; truth weights are drawn with variance 1/lambda.
    pub lambda: f64,
    pub feature_low: f64,
    pub feature_high: f64,
    pub seed: u64,
}

impl SyntheticSpec {
    pub fn new(m: usize, d: usize, lambda: f64, seed: u64) -> Self {
        Self {
            m,
            d,
            lambda,
            feature_low: -3.0,
            feature_high: 3.0,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.m < 1 || self.d < 1 {
            return Err(Error::Config(format!(
                "synthetic instance needs M >= 1 and d >= 1, got M={}, d={}",
                self.m, self.d
            )));
        }
        if !(self.lambda > 0.0) || !self.lambda.is_finite() {
            return Err(Error::Config(format!(
                "prior precision must be positive and finite, got {}",
                self.lambda
            )));
        }
        if !(self.feature_low < self.feature_high)
            || !self.feature_low.is_finite()
            || !self.feature_high.is_finite()
        {
            return Err(Error::Config(format!(
                "feature range must be finite with low < high, got [{}, {}]",
                self.feature_low, self.feature_high
            )));
        }
        Ok(())
    }
}

/// The data-generating weights used to simulate outcomes and score
/// decisions; hidden from every policy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthModel {
    w_star: Vec<f64>,
    link: Link,
}

impl TruthModel {
    pub fn new(w_star: Vec<f64>, link: Link) -> Result<Self> {
        if w_star.is_empty() || w_star.iter().any(|v| !v.is_finite()) {
            return Err(Error::Config(
                "truth weights must be nonempty and finite".to_string(),
            ));
        }
        Ok(Self { w_star, link })
    }

    pub fn w_star(&self) -> &[f64] {
        &self.w_star
    }

    pub fn link(&self) -> Link {
        self.link
    }

    /// True success probability sigma(w*' x).
    pub fn success_prob(&self, alt: &Alternative) -> Result<f64> {
        if alt.dim() != self.w_star.len() {
            return Err(Error::DimMismatch {
                context: "truth scoring",
                expected: self.w_star.len(),
                got: alt.dim(),
            });
        }
        let score: f64 = self
            .w_star
            .iter()
            .zip(alt.features())
            .map(|(w, x)| w * x)
            .sum();
        sigma(self.link, score)
    }

    /// Best achievable success probability over the menu.
    pub fn best_value(&self, alts: &AlternativeSet) -> Result<f64> {
        let mut best = f64::NEG_INFINITY;
        for alt in alts.iter() {
            best = best.max(self.success_prob(alt)?);
        }
        Ok(best)
    }

    /// Lowest index attaining `best_value`.
    pub fn best_index(&self, alts: &AlternativeSet) -> Result<usize> {
        let mut best = 0;
        let mut best_p = self.success_prob(alts.get(0))?;
        for (i, alt) in alts.iter().enumerate().skip(1) {
            let p = self.success_prob(alt)?;
            if p > best_p {
                best = i;
                best_p = p;
            }
        }
        Ok(best)
    }
}

/// Pre-generated outcomes, one row per alternative and one column per
/// step of the measurement budget.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelTable {
    entries: Vec<Vec<i8>>,
}

impl LabelTable {
    pub fn new(entries: Vec<Vec<i8>>) -> Result<Self> {
        if entries.is_empty() || entries[0].is_empty() {
            return Err(Error::Config("label table must be nonempty".to_string()));
        }
        let depth = entries[0].len();
        for row in &entries {
            if row.len() != depth {
                return Err(Error::Config(
                    "label table rows must share one depth".to_string(),
                ));
            }
            if row.iter().any(|&v| v != 1 && v != -1) {
                return Err(Error::Config(
                    "label table entries must be +1 or -1".to_string(),
                ));
            }
        }
        Ok(Self { entries })
    }

    /// Number of alternatives (rows).
    pub fn alternatives(&self) -> usize {
        self.entries.len()
    }

    /// Budget depth (columns).
    pub fn depth(&self) -> usize {
        self.entries[0].len()
    }

    pub fn label(&self, alternative: usize, step: usize) -> Label {
        if self.entries[alternative][step] == 1 {
            Label::Success
        } else {
            Label::Failure
        }
    }
}

/// Draws a synthetic instance: M feature vectors uniform on
/// [low, high]^d, each prepended with an intercept 1, plus truth weights
/// of length d+1 with independent N(0, 1/lambda) entries.
pub fn generate_synthetic(
    spec: &SyntheticSpec,
    link: Link,
    rng: &mut impl Rng,
) -> Result<(AlternativeSet, TruthModel)> {
    spec.validate()?;
    let mut alts = Vec::with_capacity(spec.m);
    for _ in 0..spec.m {
        let mut x = Vec::with_capacity(spec.d + 1);
        x.push(1.0);
        for _ in 0..spec.d {
            x.push(rng.gen_range(spec.feature_low..spec.feature_high));
        }
        alts.push(Alternative::new(x)?);
    }
    let sd = (1.0 / spec.lambda).sqrt();
    let w_star: Vec<f64> = (0..=spec.d)
        .map(|_| {
            let z: f64 = rng.sample(StandardNormal);
            sd * z
        })
        .collect();
    Ok((AlternativeSet::new(alts)?, TruthModel::new(w_star, link)?))
}

/// Draws the shared outcome table: entry (m, n) is +1 with probability
/// sigma(w*' x_m), independently across both indexes.
pub fn pregenerate_labels(
    alts: &AlternativeSet,
    truth: &TruthModel,
    budget: usize,
    rng: &mut impl Rng,
) -> Result<LabelTable> {
    if budget < 1 {
        return Err(Error::Config("budget must be at least 1".to_string()));
    }
    let mut entries = Vec::with_capacity(alts.len());
    for alt in alts.iter() {
        let p = truth.success_prob(alt)?;
        let row: Vec<i8> = (0..budget)
            .map(|_| if rng.gen_bool(p) { 1 } else { -1 })
            .collect();
        entries.push(row);
    }
    LabelTable::new(entries)
}

/// A selection rule competing in the benchmark.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Policy {
    /// Maximize the knowledge gradient (terminal-reward objective).
    Kg,
    /// Maximize predictive success plus tau times the knowledge gradient.
    KgOnline,
    Baseline(BaselinePolicy),
}

impl Policy {
    pub fn name(&self) -> &'static str {
        match self {
            Policy::Kg => "kg",
            Policy::KgOnline => "kg_online",
            Policy::Baseline(p) => p.kind.name(),
        }
    }
}

/// One rollout's trajectory and opportunity-cost curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub policy_name: String,
    pub chosen: Vec<usize>,
    pub observed: Vec<Label>,
    pub oc_curve: Vec<f64>,
    pub final_oc: f64,
}

/// Plays one policy against a fixed instance and label table.
///
/// After each of the `budget` measurements the implementation decision
/// (argmax of posterior predictive success) is scored against the truth;
/// the returned belief is the posterior after all updates.
pub fn run_policy(
    policy: &Policy,
    belief0: &GaussianBelief,
    alts: &AlternativeSet,
    truth: &TruthModel,
    labels: &LabelTable,
    budget: usize,
    cfg: &KgConfig,
    rng: &mut impl Rng,
) -> Result<(RunRecord, GaussianBelief)> {
    cfg.validate()?;
    if budget < 1 || budget > labels.depth() {
        return Err(Error::Config(format!(
            "budget {} exceeds label table depth {}",
            budget,
            labels.depth()
        )));
    }
    if labels.alternatives() != alts.len() {
        return Err(Error::DimMismatch {
            context: "label table rows",
            expected: alts.len(),
            got: labels.alternatives(),
        });
    }
    let best = truth.best_value(alts)?;
    let mut belief = belief0.clone();
    let mut chosen = Vec::with_capacity(budget);
    let mut observed = Vec::with_capacity(budget);
    let mut oc_curve = Vec::with_capacity(budget);
    for n in 0..budget {
        let idx = match policy {
            Policy::Kg => {
                let scores = kg_scores(&belief, alts, cfg)?;
                select_offline(&scores, cfg, rng)
            }
            Policy::KgOnline => select_online(&belief, alts, cfg, rng)?,
            Policy::Baseline(p) => baseline_select(p, &belief, alts, cfg.link, n, rng)?,
        };
        let y = labels.label(idx, n);
        belief = transition(&belief, alts.get(idx), y, cfg)?;
        let implemented = implementation_decision(&belief, alts, cfg.link)?;
        let oc = best - truth.success_prob(alts.get(implemented))?;
        chosen.push(idx);
        observed.push(y);
        oc_curve.push(oc);
    }
    let final_oc = *oc_curve.last().expect("budget >= 1");
    Ok((
        RunRecord {
            policy_name: policy.name().to_string(),
            chosen,
            observed,
            oc_curve,
            final_oc,
        },
        belief,
    ))
}

/// Pointwise mean and standard error of opportunity-cost curves.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OcSummary {
    pub mean: Vec<f64>,
    pub stderr: Vec<f64>,
}

/// Aggregates one policy's replications; a single record reports
/// standard error zero.
pub fn aggregate(records: &[RunRecord]) -> Result<OcSummary> {
    let reps = records.len();
    if reps == 0 {
        return Err(Error::Config(
            "aggregation needs at least one record".to_string(),
        ));
    }
    let steps = records[0].oc_curve.len();
    for rec in records {
        if rec.oc_curve.len() != steps {
            return Err(Error::DimMismatch {
                context: "opportunity-cost curve length",
                expected: steps,
                got: rec.oc_curve.len(),
            });
        }
    }
    let mut mean = vec![0.0; steps];
    let mut stderr = vec![0.0; steps];
    for n in 0..steps {
        let sum: f64 = records.iter().map(|r| r.oc_curve[n]).sum();
        mean[n] = sum / reps as f64;
        if reps > 1 {
            let ss: f64 = records
                .iter()
                .map(|r| (r.oc_curve[n] - mean[n]).powi(2))
                .sum();
            stderr[n] = (ss / (reps - 1) as f64).sqrt() / (reps as f64).sqrt();
        }
    }
    Ok(OcSummary { mean, stderr })
}

/// Loads a CSV dataset as the alternative menu and fits a truth model.
///
/// The file needs a header row and numeric cells; the final column holds
/// labels in {-1, +1} or {0, 1} (0 maps to -1). Feature columns are
/// min-max scaled to [-3, 3] (constant columns map to 0) and an
/// intercept 1 is prepended. The truth is a one-pass online MAP fit of
/// the scaled data, perturbed coordinatewise with N(0, perturb_scale^2);
/// the default scale is 0.1 ||w_fit||_2 / sqrt(dim).
pub fn ingest_csv(
    path: &Path,
    link: Link,
    lambda: f64,
    perturb_scale: Option<f64>,
    rng: &mut impl Rng,
) -> Result<(AlternativeSet, TruthModel)> {
    let mut reader = csv::Reader::from_path(path)?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        let mut row = Vec::with_capacity(record.len());
        for (j, cell) in record.iter().enumerate() {
            let value: f64 = cell.trim().parse().map_err(|_| {
                Error::Config(format!(
                    "non-numeric cell {:?} at data row {}, column {}",
                    cell,
                    i + 1,
                    j + 1
                ))
            })?;
            row.push(value);
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::Config("dataset has no data rows".to_string()));
    }
    let ncols = rows[0].len();
    if ncols < 2 {
        return Err(Error::Config(
            "dataset needs at least one feature column and a label column".to_string(),
        ));
    }
    if rows.iter().any(|r| r.len() != ncols) {
        return Err(Error::Config("dataset rows have ragged widths".to_string()));
    }
    let nfeat = ncols - 1;
    let mut labels = Vec::with_capacity(rows.len());
    for row in &rows {
        let value = row[nfeat];
        let label = if value == 1.0 {
            Label::Success
        } else if value == -1.0 || value == 0.0 {
            Label::Failure
        } else {
            return Err(Error::Config(format!(
                "label column must hold -1/+1 or 0/1, got {value}"
            )));
        };
        labels.push(label);
    }
    let mut lo = vec![f64::INFINITY; nfeat];
    let mut hi = vec![f64::NEG_INFINITY; nfeat];
    for row in &rows {
        for j in 0..nfeat {
            lo[j] = lo[j].min(row[j]);
            hi[j] = hi[j].max(row[j]);
        }
    }
    let mut alts = Vec::with_capacity(rows.len());
    for row in &rows {
        let mut x = Vec::with_capacity(nfeat + 1);
        x.push(1.0);
        for j in 0..nfeat {
            let span = hi[j] - lo[j];
            x.push(if span > 0.0 {
                -3.0 + 6.0 * (row[j] - lo[j]) / span
            } else {
                0.0
            });
        }
        alts.push(Alternative::new(x)?);
    }
    let alts = AlternativeSet::new(alts)?;

    let mut belief = GaussianBelief::uniform_prior(nfeat + 1, lambda)?;
    let bisection = BisectionConfig::default();
    for (alt, &y) in alts.iter().zip(&labels) {
        let obs = Observation { x: alt.clone(), y };
        belief = laplace_step(&belief, &obs, link, &bisection)?;
    }
    let w_fit = belief.mean().to_vec();
    let norm: f64 = w_fit.iter().map(|v| v * v).sum::<f64>().sqrt();
    let scale = match perturb_scale {
        Some(s) if s >= 0.0 && s.is_finite() => s,
        Some(s) => {
            return Err(Error::Config(format!(
                "perturb_scale must be nonnegative and finite, got {s}"
            )))
        }
        None => 0.1 * norm / (w_fit.len() as f64).sqrt(),
    };
    let w_star: Vec<f64> = w_fit
        .iter()
        .map(|&w| {
            let z: f64 = rng.sample(StandardNormal);
            w + scale * z
        })
        .collect();
    Ok((alts, TruthModel::new(w_star, link)?))
}

fn default_link() -> Link {
    Link::Logistic
}

fn default_updater() -> Updater {
    Updater::Laplace
}

fn default_lambda() -> f64 {
    1.0
}

fn default_budget() -> usize {
    30
}

fn default_replications() -> usize {
    100
}

fn default_policies() -> Vec<String> {
    vec!["kg".to_string(), "random".to_string()]
}

fn default_m() -> usize {
    100
}

fn default_d() -> usize {
    10
}

fn default_feature_low() -> f64 {
    -3.0
}

fn default_feature_high() -> f64 {
    3.0
}

fn default_alpha() -> f64 {
    1.0
}

fn default_ei_init() -> usize {
    5
}

fn default_quad_nodes() -> usize {
    32
}

/// Full experiment description as read from a JSON config file.
///
/// Instance keys (`M`, `d`, `feature_low`, `feature_high`) apply to
/// synthetic runs; `dataset` switches the menu to a CSV file. Baseline
/// knobs (`alpha`, `ei_init`, `quad_nodes`) apply to every baseline
/// that uses them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_link")]
    pub link: Link,
    #[serde(default = "default_updater")]
    pub updater: Updater,
    #[serde(default = "default_lambda")]
    pub lambda: f64,
    #[serde(rename = "N", default = "default_budget")]
    pub budget: usize,
    #[serde(default = "default_replications")]
    pub replications: usize,
    #[serde(default = "default_policies")]
    pub policies: Vec<String>,
    #[serde(default)]
    pub tau: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub perturb_scale: Option<f64>,
    #[serde(rename = "M", default = "default_m")]
    pub m: usize,
    #[serde(default = "default_d")]
    pub d: usize,
    #[serde(default)]
    pub dataset: Option<String>,
    #[serde(default = "crate::kg::default_tie_epsilon")]
    pub tie_epsilon: f64,
    #[serde(default = "default_feature_low")]
    pub feature_low: f64,
    #[serde(default = "default_feature_high")]
    pub feature_high: f64,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_ei_init")]
    pub ei_init: usize,
    #[serde(default = "default_quad_nodes")]
    pub quad_nodes: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        serde_json::from_str("{}").expect("empty object fills defaults")
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.budget < 1 {
            return Err(Error::Config("N must be at least 1".to_string()));
        }
        if self.replications < 1 {
            return Err(Error::Config("replications must be at least 1".to_string()));
        }
        if !matches!(self.link, Link::Logistic | Link::Probit) {
            return Err(Error::Config(format!(
                "experiments need a link with a posterior predictive (logistic or probit), got {}",
                self.link
            )));
        }
        if self.policies.is_empty() {
            return Err(Error::Config("policies must be nonempty".to_string()));
        }
        self.kg_config().validate()?;
        self.parse_policies()?;
        if self.dataset.is_none() {
            self.synthetic_spec().validate()?;
        }
        Ok(())
    }

    pub fn kg_config(&self) -> KgConfig {
        KgConfig {
            link: self.link,
            updater: self.updater,
            tie_epsilon: self.tie_epsilon,
            tau: self.tau,
            bisection: BisectionConfig::default(),
        }
    }

    pub fn synthetic_spec(&self) -> SyntheticSpec {
        SyntheticSpec {
            m: self.m,
            d: self.d,
            lambda: self.lambda,
            feature_low: self.feature_low,
            feature_high: self.feature_high,
            seed: self.seed,
        }
    }

    pub fn parse_policies(&self) -> Result<Vec<Policy>> {
        self.policies
            .iter()
            .map(|name| self.policy_from_name(name))
            .collect()
    }

    fn policy_from_name(&self, name: &str) -> Result<Policy> {
        let kind = match name {
            "kg" => return Ok(Policy::Kg),
            "kg_online" => return Ok(Policy::KgOnline),
            "random" => BaselineKind::Random,
            "most_uncertain" => BaselineKind::MostUncertain,
            "thompson" => BaselineKind::Thompson,
            "ei" => BaselineKind::Ei,
            "ucb" => BaselineKind::Ucb,
            other => {
                return Err(Error::Config(format!(
                    "unknown policy {other:?}; expected one of kg, kg_online, random, \
                     most_uncertain, thompson, ei, ucb"
                )))
            }
        };
        let policy = BaselinePolicy {
            kind,
            alpha: self.alpha,
            ei_init: self.ei_init,
            quad_nodes: self.quad_nodes,
        };
        policy.validate()?;
        Ok(Policy::Baseline(policy))
    }
}

/// Reads and parses a JSON experiment config.
pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path)?;
    let cfg: ExperimentConfig = serde_json::from_str(&text)
        .map_err(|e| Error::Config(format!("config {}: {e}", path.display())))?;
    cfg.validate()?;
    Ok(cfg)
}

const STREAM_INSTANCE: u64 = 0;
const STREAM_LABELS: u64 = 1;
const STREAM_POLICY: u64 = 2;
const STREAM_PERTURB: u64 = 3;

fn splitmix(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives an independent generator for one named stream of the master
/// seed; distinct tag sequences give uncorrelated streams.
pub fn derive_rng(master: u64, tags: &[u64]) -> ChaCha8Rng {
    let mut state = master;
    let mut acc = splitmix(&mut state);
    for &tag in tags {
        state ^= tag.wrapping_mul(0x9E37_79B9_7F4A_7C15);
        acc ^= splitmix(&mut state);
    }
    let mut seed = [0u8; 32];
    state = acc;
    for chunk in seed.chunks_exact_mut(8) {
        chunk.copy_from_slice(&splitmix(&mut state).to_le_bytes());
    }
    ChaCha8Rng::from_seed(seed)
}

/// Everything a finished experiment produced, records included so
/// callers can inspect individual replications.
#[derive(Debug, Clone)]
pub struct ExperimentResult {
    pub policy_names: Vec<String>,
    pub summaries: Vec<OcSummary>,
    /// records[p][r] is policy p's record on replication r.
    pub records: Vec<Vec<RunRecord>>,
    pub alternatives: AlternativeSet,
    pub truth: TruthModel,
    pub budget: usize,
}

/// Runs the full protocol: one instance, `replications` label tables,
/// every policy rolled out on each table, curves aggregated per policy.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    cfg.validate()?;
    let (alts, truth) = build_instance(cfg)?;
    let policies = cfg.parse_policies()?;
    let kg_cfg = cfg.kg_config();
    let belief0 = GaussianBelief::uniform_prior(alts.dim(), cfg.lambda)?;
    let mut records: Vec<Vec<RunRecord>> =
        vec![Vec::with_capacity(cfg.replications); policies.len()];
    for r in 0..cfg.replications {
        let mut label_rng = derive_rng(cfg.seed, &[STREAM_LABELS, r as u64]);
        let labels = pregenerate_labels(&alts, &truth, cfg.budget, &mut label_rng)?;
        for (p, policy) in policies.iter().enumerate() {
            let mut policy_rng = derive_rng(cfg.seed, &[STREAM_POLICY, r as u64, p as u64]);
            let (record, _) = run_policy(
                policy,
                &belief0,
                &alts,
                &truth,
                &labels,
                cfg.budget,
                &kg_cfg,
                &mut policy_rng,
            )?;
            records[p].push(record);
        }
    }
    let summaries: Vec<OcSummary> = records
        .iter()
        .map(|r| aggregate(r))
        .collect::<Result<_>>()?;
    Ok(ExperimentResult {
        policy_names: policies.iter().map(|p| p.name().to_string()).collect(),
        summaries,
        records,
        alternatives: alts,
        truth,
        budget: cfg.budget,
    })
}

fn build_instance(cfg: &ExperimentConfig) -> Result<(AlternativeSet, TruthModel)> {
    match &cfg.dataset {
        Some(path) => {
            let mut perturb_rng = derive_rng(cfg.seed, &[STREAM_PERTURB]);
            ingest_csv(
                Path::new(path),
                cfg.link,
                cfg.lambda,
                cfg.perturb_scale,
                &mut perturb_rng,
            )
        }
        None => {
            let mut instance_rng = derive_rng(cfg.seed, &[STREAM_INSTANCE]);
            generate_synthetic(&cfg.synthetic_spec(), cfg.link, &mut instance_rng)
        }
    }
}

/// One scored alternative at one iteration of a single rollout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotRow {
    pub iteration: usize,
    pub alternative_index: usize,
    pub kg: f64,
    pub nu_tilde: f64,
    pub predict: f64,
}

/// Plays one knowledge-gradient replication and records every
/// alternative's scores at each iteration, before that iteration's
/// measurement. Returns the rows and the final posterior.
pub fn run_snapshot(cfg: &ExperimentConfig) -> Result<(Vec<SnapshotRow>, GaussianBelief)> {
    cfg.validate()?;
    let (alts, truth) = build_instance(cfg)?;
    let kg_cfg = cfg.kg_config();
    let mut belief = GaussianBelief::uniform_prior(alts.dim(), cfg.lambda)?;
    let mut label_rng = derive_rng(cfg.seed, &[STREAM_LABELS, 0]);
    let labels = pregenerate_labels(&alts, &truth, cfg.budget, &mut label_rng)?;
    let mut rng = derive_rng(cfg.seed, &[STREAM_POLICY, 0, 0]);
    let mut rows = Vec::with_capacity(cfg.budget * alts.len());
    for n in 0..cfg.budget {
        let scores = kg_scores(&belief, &alts, &kg_cfg)?;
        for (i, alt) in alts.iter().enumerate() {
            rows.push(SnapshotRow {
                iteration: n + 1,
                alternative_index: i,
                kg: scores.kg[i],
                nu_tilde: scores.nu_tilde[i],
                predict: predict_success(&belief, alt, kg_cfg.link)?,
            });
        }
        let idx = select_offline(&scores, &kg_cfg, &mut rng);
        let y = labels.label(idx, n);
        belief = transition(&belief, alts.get(idx), y, &kg_cfg)?;
    }
    Ok((rows, belief))
}

#[derive(Serialize)]
struct CurveRow<'a> {
    policy: &'a str,
    step: usize,
    mean_oc: f64,
    stderr_oc: f64,
}

/// Writes aggregated curves as CSV rows (policy, step, mean_oc,
/// stderr_oc); steps are 1-based.
pub fn write_curves_csv<W: Write>(out: W, result: &ExperimentResult) -> Result<()> {
    let mut writer = csv::Writer::from_writer(out);
    for (name, summary) in result.policy_names.iter().zip(&result.summaries) {
        for (n, (&mean_oc, &stderr_oc)) in summary.mean.iter().zip(&summary.stderr).enumerate() {
            writer.serialize(CurveRow {
                policy: name,
                step: n + 1,
                mean_oc,
                stderr_oc,
            })?;
        }
    }
    writer.flush()?;
    Ok(())
}

/// Writes per-iteration score rows as CSV.
pub fn write_snapshot_csv<W: Write>(out: W, rows: &[SnapshotRow]) -> Result<()> {
    let mut writer = csv::Writer::from_writer(out);
    for row in rows {
        writer.serialize(row)?;
    }
    writer.flush()?;
    Ok(())
}
