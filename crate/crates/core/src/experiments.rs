//! Packaged studies: the lexical-decision priming validation and the gender
//! bias probe, plus the plot-ready tables derived from them.
//!
//! Both studies activate a set of primes, normalize the resulting matrix
//! (columns, then rows) and read normalized activation levels (ALs) of the
//! targets. The matrix always uses the sorted, de-duplicated prime set, so the
//! order in which primes are listed never changes any AL.

use std::collections::{BTreeSet, HashSet};
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;
use tracing::warn;

use crate::activation::{spread_batch, ActivationError, ActivationParams, ResolvedParams};
use crate::netbuild::SemanticNetwork;
use crate::stats::{
    normalize, spearman, wilcoxon_paired, CorrelationResult, NormMode, NormalizedMatrix,
    PairedTestResult, StatsError,
};

pub const LDT_ITEMS_CSV: &str = include_str!("../data/ldt_items.csv");
pub const GENDER_PROBE_JSON: &str = include_str!("../data/gender_probe.json");

const HISTOGRAM_BINS: usize = 10;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("io error on {path}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error("invalid item: {0}")]
    InvalidItem(String),
    #[error("invalid probe: {0}")]
    InvalidProbe(String),
    #[error("only {usable} usable items, need at least {needed}")]
    InsufficientItems { usable: usize, needed: usize },
    #[error("primes missing from the network: {0:?}")]
    MissingPrimes(Vec<String>),
    #[error("reports are not comparable: {0}")]
    ShapeMismatch(String),
    #[error(transparent)]
    Activation(#[from] ActivationError),
    #[error(transparent)]
    Stats(#[from] StatsError),
}

fn read_file(path: &Path) -> Result<String, ExperimentError> {
    std::fs::read_to_string(path).map_err(|source| ExperimentError::Io {
        path: path.display().to_string(),
        source,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrimingItem {
    pub target: String,
    pub related_prime: String,
    pub unrelated_prime: String,
    /// Mean z-scored reaction time after the related prime.
    pub rt_related: f64,
    pub rt_unrelated: f64,
}

impl PrimingItem {
    fn validate(&self) -> Result<(), ExperimentError> {
        if self.target.is_empty() || self.related_prime.is_empty() || self.unrelated_prime.is_empty() {
            return Err(ExperimentError::InvalidItem(format!("empty word in {self:?}")));
        }
        if self.target == self.related_prime || self.target == self.unrelated_prime {
            return Err(ExperimentError::InvalidItem(format!(
                "target {:?} equals one of its primes",
                self.target
            )));
        }
        if !self.rt_related.is_finite() || !self.rt_unrelated.is_finite() {
            return Err(ExperimentError::InvalidItem(format!("non-finite RT for {:?}", self.target)));
        }
        Ok(())
    }
}

/// Reads `target,related_prime,unrelated_prime,rt_related,rt_unrelated` CSV.
pub fn read_priming_items(r: impl Read) -> Result<Vec<PrimingItem>, ExperimentError> {
    let mut rdr = csv::Reader::from_reader(r);
    let mut items = Vec::new();
    for rec in rdr.deserialize() {
        let item: PrimingItem = rec?;
        item.validate()?;
        items.push(item);
    }
    Ok(items)
}

pub fn load_priming_items(path: impl AsRef<Path>) -> Result<Vec<PrimingItem>, ExperimentError> {
    read_priming_items(read_file(path.as_ref())?.as_bytes())
}

/// The 50 lexical-decision items shipped with the crate.
pub fn default_priming_items() -> Vec<PrimingItem> {
    read_priming_items(LDT_ITEMS_CSV.as_bytes()).expect("bundled LDT items parse")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TargetCategory {
    Female,
    Male,
}

impl TargetCategory {
    pub fn as_str(self) -> &'static str {
        match self {
            TargetCategory::Female => "female",
            TargetCategory::Male => "male",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenderProbe {
    /// `(female, male)` prime pairs.
    pub prime_pairs: Vec<(String, String)>,
    pub female_targets: Vec<String>,
    pub male_targets: Vec<String>,
}

impl GenderProbe {
    pub fn from_json(text: &str) -> Result<Self, ExperimentError> {
        let probe: GenderProbe = serde_json::from_str(text)?;
        probe.validate()?;
        Ok(probe)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ExperimentError> {
        Self::from_json(&read_file(path.as_ref())?)
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        let bad = |m: String| Err(ExperimentError::InvalidProbe(m));
        if self.prime_pairs.is_empty() {
            return bad("no prime pairs".into());
        }
        if self.female_targets.is_empty() || self.male_targets.is_empty() {
            return bad("both target lists must be non-empty".into());
        }
        let primes = self.primes();
        let mut seen = HashSet::new();
        for p in &primes {
            if !seen.insert(p) {
                return bad(format!("prime {p:?} listed twice"));
            }
        }
        for t in self.female_targets.iter().chain(&self.male_targets) {
            if seen.contains(t) {
                return bad(format!("target {t:?} is also a prime"));
            }
        }
        Ok(())
    }

    /// Female primes in pair order, then male primes in pair order.
    pub fn primes(&self) -> Vec<String> {
        self.prime_pairs
            .iter()
            .map(|(f, _)| f.clone())
            .chain(self.prime_pairs.iter().map(|(_, m)| m.clone()))
            .collect()
    }

    /// Prime–target pairs in the full design.
    pub fn pair_count(&self) -> usize {
        2 * self.prime_pairs.len() * (self.female_targets.len() + self.male_targets.len())
    }

    /// The same probe with every pair's female and male prime exchanged.
    pub fn swapped(&self) -> Self {
        GenderProbe {
            prime_pairs: self.prime_pairs.iter().map(|(f, m)| (m.clone(), f.clone())).collect(),
            ..self.clone()
        }
    }

    fn targets(&self, c: TargetCategory) -> &[String] {
        match c {
            TargetCategory::Female => &self.female_targets,
            TargetCategory::Male => &self.male_targets,
        }
    }
}

/// The five prime pairs and 25 + 25 adjective targets shipped with the crate.
pub fn default_gender_probe() -> GenderProbe {
    GenderProbe::from_json(GENDER_PROBE_JSON).expect("bundled probe parses")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunInfo {
    pub network: String,
    pub nodes: usize,
    pub edges: usize,
    pub params: ResolvedParams,
    pub normalization: NormMode,
}

fn run_info(g: &SemanticNetwork, params: ResolvedParams, mode: NormMode) -> RunInfo {
    RunInfo {
        network: g.metadata.source.clone(),
        nodes: g.node_count(),
        edges: g.edge_count(),
        params,
        normalization: mode,
    }
}

/// Activates the sorted unique primes and normalizes.
fn normalized_matrix(
    g: &SemanticNetwork,
    primes: &[&str],
    p: &ActivationParams,
    mode: NormMode,
) -> Result<NormalizedMatrix, ExperimentError> {
    let unique: Vec<&str> = primes.iter().copied().collect::<BTreeSet<_>>().into_iter().collect();
    let raw = spread_batch(g, &unique, p)?;
    Ok(normalize(&raw, mode))
}

fn al(m: &NormalizedMatrix, g: &SemanticNetwork, target: &str, prime: &str) -> f64 {
    let row = g.index_of(target).expect("target checked");
    let col = m.values.prime_column(prime).expect("prime activated");
    m.get(row, col)
}

/// Plain string table for CSV output.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    fn new(header: &[&str]) -> Self {
        Table {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn write_csv(&self, w: impl Write) -> csv::Result<()> {
        let mut out = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(w);
        out.write_record(&self.header)?;
        for r in &self.rows {
            out.write_record(r)?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), ExperimentError> {
        let path = path.as_ref();
        let file = std::fs::File::create(path).map_err(|source| ExperimentError::Io {
            path: path.display().to_string(),
            source,
        })?;
        self.write_csv(std::io::BufWriter::new(file))?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrimingObservation {
    pub target: String,
    pub related_prime: String,
    pub unrelated_prime: String,
    pub al_related: f64,
    pub al_unrelated: f64,
    pub difference: f64,
    pub rt_related: f64,
    pub rt_unrelated: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DroppedItem {
    pub target: String,
    pub missing: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrimingReport {
    pub run: RunInfo,
    pub observations: Vec<PrimingObservation>,
    pub dropped: Vec<DroppedItem>,
    /// AL after related vs. unrelated prime.
    pub activation_test: PairedTestResult,
    /// Reaction times after related vs. unrelated prime, on the usable items.
    pub rt_test: Option<PairedTestResult>,
    /// AL vs. RT over every (item, prime type) observation.
    pub correlation: CorrelationResult,
}

pub const MIN_PRIMING_ITEMS: usize = 5;

/// Activates every related and unrelated prime, and compares target ALs
/// between the two prime types.
pub fn run_priming(
    g: &SemanticNetwork,
    items: &[PrimingItem],
    p: &ActivationParams,
    mode: NormMode,
) -> Result<PrimingReport, ExperimentError> {
    let mut usable = Vec::new();
    let mut dropped = Vec::new();
    for item in items {
        let missing: Vec<String> = [&item.target, &item.related_prime, &item.unrelated_prime]
            .into_iter()
            .filter(|w| !g.contains(w))
            .cloned()
            .collect();
        if missing.is_empty() {
            usable.push(item);
        } else {
            dropped.push(DroppedItem {
                target: item.target.clone(),
                missing,
            });
        }
    }
    if !dropped.is_empty() {
        warn!(dropped = dropped.len(), "priming items dropped for missing words");
    }
    if usable.len() < MIN_PRIMING_ITEMS {
        return Err(ExperimentError::InsufficientItems {
            usable: usable.len(),
            needed: MIN_PRIMING_ITEMS,
        });
    }

    let primes: Vec<&str> = usable
        .iter()
        .flat_map(|i| [i.related_prime.as_str(), i.unrelated_prime.as_str()])
        .collect();
    let resolved = p.resolve(g)?;
    let m = normalized_matrix(g, &primes, p, mode)?;

    let observations: Vec<PrimingObservation> = usable
        .iter()
        .map(|i| {
            let r = al(&m, g, &i.target, &i.related_prime);
            let u = al(&m, g, &i.target, &i.unrelated_prime);
            PrimingObservation {
                target: i.target.clone(),
                related_prime: i.related_prime.clone(),
                unrelated_prime: i.unrelated_prime.clone(),
                al_related: r,
                al_unrelated: u,
                difference: r - u,
                rt_related: i.rt_related,
                rt_unrelated: i.rt_unrelated,
            }
        })
        .collect();

    let al_rel: Vec<f64> = observations.iter().map(|o| o.al_related).collect();
    let al_unrel: Vec<f64> = observations.iter().map(|o| o.al_unrelated).collect();
    let rt_rel: Vec<f64> = observations.iter().map(|o| o.rt_related).collect();
    let rt_unrel: Vec<f64> = observations.iter().map(|o| o.rt_unrelated).collect();

    let activation_test = wilcoxon_paired(&al_rel, &al_unrel)?;
    let rt_test = wilcoxon_paired(&rt_rel, &rt_unrel).ok();
    let all_al: Vec<f64> = al_rel.iter().chain(&al_unrel).copied().collect();
    let all_rt: Vec<f64> = rt_rel.iter().chain(&rt_unrel).copied().collect();
    let correlation = spearman(&all_al, &all_rt)?;

    Ok(PrimingReport {
        run: run_info(g, resolved, mode),
        observations,
        dropped,
        activation_test,
        rt_test,
        correlation,
    })
}

impl PrimingReport {
    /// Long format: one row per (item, prime type) with AL and RT.
    pub fn boxplot_table(&self) -> Table {
        let mut t = Table::new(&["target", "prime_type", "prime", "activation", "rt"]);
        for o in &self.observations {
            t.rows.push(vec![
                o.target.clone(),
                "related".into(),
                o.related_prime.clone(),
                o.al_related.to_string(),
                o.rt_related.to_string(),
            ]);
            t.rows.push(vec![
                o.target.clone(),
                "unrelated".into(),
                o.unrelated_prime.clone(),
                o.al_unrelated.to_string(),
                o.rt_unrelated.to_string(),
            ]);
        }
        t
    }

    pub fn histogram_table(&self) -> Table {
        let diffs: Vec<f64> = self.observations.iter().map(|o| o.difference).collect();
        let mut t = Table::new(&["group", "bin_lower", "bin_upper", "count"]);
        push_histogram(&mut t, "related_minus_unrelated", &diffs);
        t
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairedDifference {
    pub category: TargetCategory,
    pub target: String,
    pub female_prime: String,
    pub male_prime: String,
    pub female_al: f64,
    pub male_al: f64,
    /// `female_al - male_al`.
    pub difference: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeatmapRow {
    pub target: String,
    pub category: TargetCategory,
    /// One value per entry of [`BiasReport::primes`].
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoryTest {
    pub category: TargetCategory,
    pub test: PairedTestResult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiasReport {
    pub run: RunInfo,
    pub probe: GenderProbe,
    /// Heatmap column order: female primes, then male primes.
    pub primes: Vec<String>,
    pub dropped_targets: Vec<String>,
    pub heatmap: Vec<HeatmapRow>,
    pub differences: Vec<PairedDifference>,
    pub tests: Vec<CategoryTest>,
}

/// Activates the probe's primes and compares each target's AL under the
/// female and male prime of every pair.
pub fn run_bias_probe(
    g: &SemanticNetwork,
    probe: &GenderProbe,
    p: &ActivationParams,
    mode: NormMode,
) -> Result<BiasReport, ExperimentError> {
    probe.validate()?;
    let primes = probe.primes();
    let missing: Vec<String> = primes.iter().filter(|w| !g.contains(w)).cloned().collect();
    if !missing.is_empty() {
        return Err(ExperimentError::MissingPrimes(missing));
    }
    let dropped_targets: Vec<String> = probe
        .female_targets
        .iter()
        .chain(&probe.male_targets)
        .filter(|t| !g.contains(t))
        .cloned()
        .collect();
    if !dropped_targets.is_empty() {
        warn!(dropped = dropped_targets.len(), "probe targets missing from network");
    }

    let resolved = p.resolve(g)?;
    let prime_refs: Vec<&str> = primes.iter().map(String::as_str).collect();
    let m = normalized_matrix(g, &prime_refs, p, mode)?;

    let mut heatmap = Vec::new();
    let mut differences = Vec::new();
    let mut tests = Vec::new();
    for cat in [TargetCategory::Female, TargetCategory::Male] {
        let targets: Vec<&String> = probe.targets(cat).iter().filter(|t| g.contains(t)).collect();
        for t in &targets {
            heatmap.push(HeatmapRow {
                target: t.to_string(),
                category: cat,
                values: primes.iter().map(|pr| al(&m, g, t, pr)).collect(),
            });
        }
        let mut fem = Vec::new();
        let mut mal = Vec::new();
        for t in &targets {
            for (f, ma) in &probe.prime_pairs {
                let (a, b) = (al(&m, g, t, f), al(&m, g, t, ma));
                fem.push(a);
                mal.push(b);
                differences.push(PairedDifference {
                    category: cat,
                    target: t.to_string(),
                    female_prime: f.clone(),
                    male_prime: ma.clone(),
                    female_al: a,
                    male_al: b,
                    difference: a - b,
                });
            }
        }
        tests.push(CategoryTest {
            category: cat,
            test: wilcoxon_paired(&fem, &mal)?,
        });
    }

    Ok(BiasReport {
        run: run_info(g, resolved, mode),
        probe: probe.clone(),
        primes,
        dropped_targets,
        heatmap,
        differences,
        tests,
    })
}

impl BiasReport {
    pub fn test(&self, c: TargetCategory) -> Option<&PairedTestResult> {
        self.tests.iter().find(|t| t.category == c).map(|t| &t.test)
    }

    /// Targets × primes, normalized ALs.
    pub fn heatmap_table(&self) -> Table {
        let mut header = vec!["target".to_string(), "category".to_string()];
        header.extend(self.primes.iter().cloned());
        let mut t = Table {
            header,
            rows: Vec::new(),
        };
        for row in &self.heatmap {
            let mut r = vec![row.target.clone(), row.category.as_str().to_string()];
            r.extend(row.values.iter().map(|v| v.to_string()));
            t.rows.push(r);
        }
        t
    }

    /// Long format: one row per (target, prime pair) difference.
    pub fn boxplot_table(&self) -> Table {
        let mut t = Table::new(&["category", "target", "female_prime", "male_prime", "female_al", "male_al", "difference"]);
        for d in &self.differences {
            t.rows.push(vec![
                d.category.as_str().into(),
                d.target.clone(),
                d.female_prime.clone(),
                d.male_prime.clone(),
                d.female_al.to_string(),
                d.male_al.to_string(),
                d.difference.to_string(),
            ]);
        }
        t
    }

    /// One histogram per (category, prime pair).
    pub fn histogram_table(&self) -> Table {
        let mut t = Table::new(&["group", "bin_lower", "bin_upper", "count"]);
        for cat in [TargetCategory::Female, TargetCategory::Male] {
            for (f, m) in &self.probe.prime_pairs {
                let diffs: Vec<f64> = self
                    .differences
                    .iter()
                    .filter(|d| d.category == cat && &d.female_prime == f && &d.male_prime == m)
                    .map(|d| d.difference)
                    .collect();
                push_histogram(&mut t, &format!("{}:{f}-{m}", cat.as_str()), &diffs);
            }
        }
        t
    }

    /// ALs flattened target-major over [`BiasReport::primes`] for one category.
    pub fn flattened(&self, c: TargetCategory) -> Vec<f64> {
        self.heatmap
            .iter()
            .filter(|r| r.category == c)
            .flat_map(|r| r.values.iter().copied())
            .collect()
    }
}

/// Equal-width bins over the data range; a constant sample gets one bin.
fn push_histogram(t: &mut Table, group: &str, values: &[f64]) {
    if values.is_empty() {
        return;
    }
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if lo == hi {
        t.rows.push(vec![group.into(), lo.to_string(), hi.to_string(), values.len().to_string()]);
        return;
    }
    let width = (hi - lo) / HISTOGRAM_BINS as f64;
    let mut counts = [0usize; HISTOGRAM_BINS];
    for &v in values {
        let b = (((v - lo) / width) as usize).min(HISTOGRAM_BINS - 1);
        counts[b] += 1;
    }
    for (b, c) in counts.iter().enumerate() {
        let lower = lo + width * b as f64;
        let upper = if b + 1 == HISTOGRAM_BINS { hi } else { lo + width * (b + 1) as f64 };
        t.rows.push(vec![group.into(), lower.to_string(), upper.to_string(), c.to_string()]);
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoryCorrelation {
    pub category: TargetCategory,
    pub result: CorrelationResult,
}

/// Spearman correlation between two networks' ALs, per target category,
/// over the flattened target × prime vectors.
pub fn cross_model_correlation(
    a: &BiasReport,
    b: &BiasReport,
) -> Result<Vec<CategoryCorrelation>, ExperimentError> {
    if a.primes != b.primes {
        return Err(ExperimentError::ShapeMismatch("prime lists differ".into()));
    }
    let mut out = Vec::new();
    for cat in [TargetCategory::Female, TargetCategory::Male] {
        let ta: Vec<&str> = a.heatmap.iter().filter(|r| r.category == cat).map(|r| r.target.as_str()).collect();
        let tb: Vec<&str> = b.heatmap.iter().filter(|r| r.category == cat).map(|r| r.target.as_str()).collect();
        if ta != tb {
            return Err(ExperimentError::ShapeMismatch(format!(
                "{} targets differ ({} vs {})",
                cat.as_str(),
                ta.len(),
                tb.len()
            )));
        }
        out.push(CategoryCorrelation {
            category: cat,
            result: spearman(&a.flattened(cat), &b.flattened(cat))?,
        });
    }
    Ok(out)
}
