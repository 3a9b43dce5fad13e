use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::Context;
use clap::Args;
use noteval_core::analysis::{ensemble, EnsembleConfig, SigmaMode};
use noteval_core::concepts::{link_concepts, load_lexicon, mist, ConceptLexicon, MistMode};
use noteval_core::data::{
    load_dataset, load_score_column, write_score_column, write_score_table, DataFormat, Dataset,
    ScoreColumn, ScoreTable, SummaryPair,
};
use noteval_core::embeddings::{
    load_contextual, load_store, ContextualStore, EmbeddingKind, EmbeddingStore, Side,
    StaticEncoder,
};
use noteval_core::greedy::{
    med_bertscore, medical_weights, weighted_greedy, GreedyConfig, WeightNormalization,
    WeightVector,
};
use noteval_core::lexical::{rouge_l, rouge_n};
use noteval_core::likelihood::{
    bartscore, load_logprobs, med_bartscore, train_ngram_lm, Direction, LikelihoodNormalization,
    LikelihoodProvider, LogProbFile, NGramLm,
};
use noteval_core::text::{tokenize, Normalization};
use noteval_core::Prf;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::RunConfig;
use crate::output::{file_sha256, file_stem_for, write_file};
use crate::{config_bail, Outcome};

#[derive(Debug, Args)]
pub struct ScoreArgs {
    /// JSON run configuration; flags override its fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Dataset file (.jsonl or .csv).
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Comma-separated metrics: rouge-1, rouge-2, rouge-l, bertscore,
    /// bertscore-sp, medbertscore, medbertscore-sp, mist, bartscore,
    /// medbartscore.
    #[arg(long, value_delimiter = ',')]
    pub metrics: Vec<String>,
    /// lower-alnum or whitespace-only.
    #[arg(long)]
    pub tokenizer: Option<Normalization>,
    /// Static token embedding store.
    #[arg(long)]
    pub embeddings: Option<PathBuf>,
    /// Per-document contextual embeddings (JSONL).
    #[arg(long)]
    pub contextual: Option<PathBuf>,
    /// Concept (KGE) embedding store.
    #[arg(long)]
    pub kge: Option<PathBuf>,
    /// Concept lexicon (TSV: surface, concept id).
    #[arg(long)]
    pub lexicon: Option<PathBuf>,
    /// Stored token log-probabilities (JSONL); the built-in n-gram model
    /// is used otherwise.
    #[arg(long)]
    pub logprobs: Option<PathBuf>,
    /// Training text for the n-gram model, one document per line.
    #[arg(long)]
    pub lm_corpus: Option<PathBuf>,
    #[arg(long)]
    pub lm_order: Option<usize>,
    #[arg(long)]
    pub lm_k: Option<f64>,
    /// External score column CSV; repeatable.
    #[arg(long)]
    pub external: Vec<PathBuf>,
    /// Ensemble: a preset (mist-comb1, mist-comb2) or `name=a+b+c`;
    /// repeatable.
    #[arg(long = "ensemble")]
    pub ensembles: Vec<String>,
    #[arg(long)]
    pub alpha: Option<f64>,
    /// weight-sum or token-count.
    #[arg(long)]
    pub normalize: Option<WeightNormalization>,
    /// Slide windows for plain bertscore/medbertscore as well.
    #[arg(long, overrides_with = "no_window")]
    pub window: bool,
    #[arg(long)]
    pub no_window: bool,
    #[arg(long)]
    pub max_len: Option<usize>,
    #[arg(long)]
    pub overlap: Option<usize>,
    /// recall or verbatim.
    #[arg(long)]
    pub mist_mode: Option<MistMode>,
    /// src-to-sys, ref-to-sys or sys-to-ref.
    #[arg(long)]
    pub direction: Option<Direction>,
    /// weight-sum or raw-sum.
    #[arg(long)]
    pub bart_normalize: Option<LikelihoodNormalization>,
    /// population or sample.
    #[arg(long)]
    pub sigma: Option<SigmaMode>,
    #[arg(long)]
    pub bertscore_variant: Option<String>,
    /// Worker threads; output does not depend on it.
    #[arg(long)]
    pub jobs: Option<usize>,
}

impl ScoreArgs {
    pub fn resolve(self) -> anyhow::Result<RunConfig> {
        let mut c = match &self.config {
            Some(path) => RunConfig::from_file(path)?,
            None => RunConfig::default(),
        };
        macro_rules! set {
            ($($field:ident),*) => {
                $(if let Some(v) = self.$field { c.$field = v; })*
            };
        }
        set!(dataset, out, tokenizer, alpha, normalize, max_len, overlap, mist_mode, direction,
             bart_normalize, lm_order, lm_k, sigma, bertscore_variant);
        macro_rules! set_opt {
            ($($field:ident),*) => {
                $(if self.$field.is_some() { c.$field = self.$field; })*
            };
        }
        set_opt!(embeddings, contextual, kge, lexicon, logprobs, lm_corpus, jobs);
        if !self.metrics.is_empty() {
            c.metrics = self.metrics;
        }
        if !self.external.is_empty() {
            c.external = self.external;
        }
        if !self.ensembles.is_empty() {
            c.ensembles = self.ensembles;
        }
        if self.window {
            c.window = true;
        }
        if self.no_window {
            c.window = false;
        }
        Ok(c)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Metric {
    Rouge1,
    Rouge2,
    RougeL,
    BertScore,
    BertScoreSp,
    MedBertScore,
    MedBertScoreSp,
    Mist,
    BartScore,
    MedBartScore,
}

impl Metric {
    const ALL: [Metric; 10] = [
        Metric::Rouge1,
        Metric::Rouge2,
        Metric::RougeL,
        Metric::BertScore,
        Metric::BertScoreSp,
        Metric::MedBertScore,
        Metric::MedBertScoreSp,
        Metric::Mist,
        Metric::BartScore,
        Metric::MedBartScore,
    ];

    fn name(self) -> &'static str {
        match self {
            Metric::Rouge1 => "rouge-1",
            Metric::Rouge2 => "rouge-2",
            Metric::RougeL => "rouge-l",
            Metric::BertScore => "bertscore",
            Metric::BertScoreSp => "bertscore-sp",
            Metric::MedBertScore => "medbertscore",
            Metric::MedBertScoreSp => "medbertscore-sp",
            Metric::Mist => "mist",
            Metric::BartScore => "bartscore",
            Metric::MedBartScore => "medbartscore",
        }
    }

    fn parse(name: &str) -> Option<Metric> {
        Self::ALL.iter().copied().find(|m| m.name() == name)
    }

    fn is_prf(self) -> bool {
        !matches!(self, Metric::Mist | Metric::BartScore | Metric::MedBartScore)
    }

    fn is_greedy(self) -> bool {
        matches!(
            self,
            Metric::BertScore | Metric::BertScoreSp | Metric::MedBertScore | Metric::MedBertScoreSp
        )
    }

    fn is_medical(self) -> bool {
        matches!(
            self,
            Metric::MedBertScore | Metric::MedBertScoreSp | Metric::MedBartScore | Metric::Mist
        )
    }

    fn columns(self) -> Vec<String> {
        if self.is_prf() {
            ["p", "r", "f"]
                .iter()
                .map(|s| format!("{}-{s}", self.name()))
                .collect()
        } else {
            vec![self.name().to_string()]
        }
    }
}

enum Embeddings {
    Static(EmbeddingStore),
    Contextual(ContextualStore),
}

enum Likelihood {
    File(LogProbFile),
    NGram(NGramLm),
}

impl Likelihood {
    fn provider(&self) -> &(dyn LikelihoodProvider + Sync) {
        match self {
            Likelihood::File(f) => f,
            Likelihood::NGram(lm) => lm,
        }
    }
}

#[derive(Debug, Serialize)]
struct InputDigest {
    role: String,
    path: PathBuf,
    sha256: String,
}

#[derive(Debug, Clone, Serialize)]
struct PairError {
    pair_id: String,
    metric: String,
    message: String,
}

#[derive(Debug, Serialize)]
struct ColumnSummary {
    name: String,
    values: usize,
}

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    tool: String,
    config_sha256: String,
    config: &'a RunConfig,
    inputs: Vec<InputDigest>,
    pairs: usize,
    columns: Vec<ColumnSummary>,
    /// External columns' dataset pairs without a value.
    external_missing: BTreeMap<String, Vec<String>>,
    errors: Vec<PairError>,
}

/// Everything loaded and validated before any output is written.
struct Plan {
    config: RunConfig,
    dataset: Dataset,
    metrics: Vec<Metric>,
    embeddings: Option<Embeddings>,
    lexicon: Option<ConceptLexicon>,
    kge: Option<EmbeddingStore>,
    likelihood: Option<Likelihood>,
    external: Vec<ScoreColumn>,
    ensembles: Vec<EnsembleConfig>,
    inputs: Vec<InputDigest>,
}

fn parse_ensemble(spec: &str, bertscore_variant: &str) -> anyhow::Result<EnsembleConfig> {
    if let Some(cfg) = EnsembleConfig::preset(spec, bertscore_variant) {
        return Ok(cfg);
    }
    let Some((name, members)) = spec.split_once('=') else {
        config_bail!("unknown ensemble `{spec}`; use a preset or `name=a+b+c`");
    };
    let members: Vec<String> = members.split('+').map(|m| m.trim().to_string()).collect();
    EnsembleConfig::new(name.trim(), members)
        .map_err(|e| anyhow::Error::new(crate::ConfigError(e.to_string())))
}

/// Configuration checks that need no file access.
fn check_config(c: &RunConfig) -> anyhow::Result<(Vec<Metric>, Vec<EnsembleConfig>)> {
    if c.dataset.as_os_str().is_empty() {
        config_bail!("no dataset given (--dataset or `dataset` in the config file)");
    }
    if c.out.as_os_str().is_empty() {
        config_bail!("no output directory given (--out or `out` in the config file)");
    }
    c.window()?;
    if !(c.alpha >= 0.0 && c.alpha.is_finite()) {
        config_bail!("alpha must be a finite non-negative number, got {}", c.alpha);
    }
    if c.lm_order == 0 {
        config_bail!("lm_order must be at least 1");
    }
    if !(c.lm_k > 0.0 && c.lm_k.is_finite()) {
        config_bail!("lm_k must be positive, got {}", c.lm_k);
    }
    if c.jobs == Some(0) {
        config_bail!("--jobs must be at least 1");
    }

    let mut metrics = Vec::new();
    for name in &c.metrics {
        let Some(m) = Metric::parse(name.trim()) else {
            config_bail!("unknown metric `{name}`");
        };
        if metrics.contains(&m) {
            config_bail!("metric `{name}` requested twice");
        }
        metrics.push(m);
    }
    if metrics.is_empty() && c.external.is_empty() {
        config_bail!("nothing to score: give --metrics or --external columns");
    }
    if metrics.iter().any(|m| m.is_greedy()) {
        match (&c.embeddings, &c.contextual) {
            (None, None) => config_bail!("bertscore metrics need --embeddings or --contextual"),
            (Some(_), Some(_)) => config_bail!("give only one of --embeddings and --contextual"),
            _ => {}
        }
    }
    if metrics.contains(&Metric::Mist) && c.kge.is_none() {
        config_bail!("mist needs a concept embedding store (--kge)");
    }
    let needs_lexicon = metrics
        .iter()
        .any(|m| *m == Metric::Mist || (m.is_medical() && c.alpha != 0.0));
    if needs_lexicon && c.lexicon.is_none() {
        config_bail!("{} needs a concept lexicon (--lexicon)", metric_list(&metrics, true));
    }

    let ensembles = c
        .ensembles
        .iter()
        .map(|s| parse_ensemble(s, &c.bertscore_variant))
        .collect::<anyhow::Result<Vec<_>>>()?;
    Ok((metrics, ensembles))
}

fn metric_list(metrics: &[Metric], medical: bool) -> String {
    metrics
        .iter()
        .filter(|m| !medical || m.is_medical())
        .map(|m| m.name())
        .collect::<Vec<_>>()
        .join(", ")
}

fn digest(role: &str, path: &Path) -> anyhow::Result<InputDigest> {
    Ok(InputDigest {
        role: role.to_string(),
        path: path.to_path_buf(),
        sha256: file_sha256(path)?,
    })
}

fn prepare(config: RunConfig) -> anyhow::Result<Plan> {
    let (metrics, ensembles) = check_config(&config)?;
    let mut inputs = vec![digest("dataset", &config.dataset)?];
    let dataset = load_dataset(&config.dataset, DataFormat::from_path(&config.dataset))
        .with_context(|| format!("loading dataset {}", config.dataset.display()))?;

    let embeddings = if metrics.iter().any(|m| m.is_greedy()) {
        if let Some(path) = &config.embeddings {
            inputs.push(digest("embeddings", path)?);
            let store = load_store(path, EmbeddingKind::Token)
                .with_context(|| format!("loading {}", path.display()))?;
            if StaticEncoder::new(&store).unk_vector().is_none() {
                anyhow::bail!("{}: store mean is zero, unknown tokens cannot be embedded", path.display());
            }
            Some(Embeddings::Static(store))
        } else if let Some(path) = &config.contextual {
            inputs.push(digest("contextual", path)?);
            Some(Embeddings::Contextual(
                load_contextual(path).with_context(|| format!("loading {}", path.display()))?,
            ))
        } else {
            None
        }
    } else {
        None
    };

    let lexicon = match &config.lexicon {
        Some(path) if metrics.iter().any(|m| m.is_medical()) => {
            inputs.push(digest("lexicon", path)?);
            Some(load_lexicon(path).with_context(|| format!("loading {}", path.display()))?)
        }
        _ => None,
    };
    let kge = match &config.kge {
        Some(path) if metrics.contains(&Metric::Mist) => {
            inputs.push(digest("kge", path)?);
            Some(
                load_store(path, EmbeddingKind::Concept)
                    .with_context(|| format!("loading {}", path.display()))?,
            )
        }
        _ => None,
    };

    let likelihood = if metrics
        .iter()
        .any(|m| matches!(m, Metric::BartScore | Metric::MedBartScore))
    {
        Some(match &config.logprobs {
            Some(path) => {
                inputs.push(digest("logprobs", path)?);
                Likelihood::File(
                    load_logprobs(path).with_context(|| format!("loading {}", path.display()))?,
                )
            }
            None => {
                let corpus = lm_corpus(&config, &dataset, &mut inputs)?;
                Likelihood::NGram(
                    train_ngram_lm(&corpus, config.lm_order, config.lm_k)
                        .context("training the n-gram model")?,
                )
            }
        })
    } else {
        None
    };

    let mut external = Vec::new();
    for path in &config.external {
        inputs.push(digest("external", path)?);
        let col = load_score_column(path).with_context(|| format!("loading {}", path.display()))?;
        let coverage = col.coverage(&dataset);
        if !coverage.unknown.is_empty() {
            anyhow::bail!(
                "{}: {} value(s) for pairs not in the dataset, first `{}`",
                path.display(),
                coverage.unknown.len(),
                coverage.unknown[0]
            );
        }
        external.push(col);
    }

    let mut names: Vec<String> = metrics.iter().flat_map(|m| m.columns()).collect();
    for col in &external {
        if names.contains(&col.metric_name) {
            config_bail!("column `{}` is produced twice", col.metric_name);
        }
        names.push(col.metric_name.clone());
    }
    for e in &ensembles {
        if let Some(m) = e.members.iter().find(|m| !names.contains(m)) {
            config_bail!("ensemble `{}` needs column `{m}`, which this run does not produce", e.name);
        }
        if names.contains(&e.name) {
            config_bail!("ensemble name `{}` clashes with another column", e.name);
        }
        names.push(e.name.clone());
    }

    Ok(Plan {
        config,
        dataset,
        metrics,
        embeddings,
        lexicon,
        kge,
        likelihood,
        external,
        ensembles,
        inputs,
    })
}

/// Default corpus: every reference and non-empty source text of the
/// dataset.
fn lm_corpus(
    config: &RunConfig,
    dataset: &Dataset,
    inputs: &mut Vec<InputDigest>,
) -> anyhow::Result<Vec<Vec<String>>> {
    let texts: Vec<String> = match &config.lm_corpus {
        Some(path) => {
            inputs.push(digest("lm_corpus", path)?);
            std::fs::read_to_string(path)
                .with_context(|| format!("reading {}", path.display()))?
                .lines()
                .map(str::to_string)
                .collect()
        }
        None => dataset
            .pairs
            .iter()
            .flat_map(|p| [p.reference.clone(), p.source.clone()])
            .collect(),
    };
    Ok(texts
        .iter()
        .map(|t| tokenize(t, config.tokenizer).to_strings())
        .filter(|t| !t.is_empty())
        .collect())
}

type Cells = Vec<(String, Result<f64, String>)>;

fn prf_cells(metric: Metric, result: noteval_core::Result<Prf>) -> Cells {
    let cols = metric.columns();
    match result {
        Ok(p) => vec![
            (cols[0].clone(), Ok(p.precision)),
            (cols[1].clone(), Ok(p.recall)),
            (cols[2].clone(), Ok(p.f1)),
        ],
        Err(e) => cols.into_iter().map(|c| (c, Err(e.to_string()))).collect(),
    }
}

impl Plan {
    fn greedy_config(&self, metric: Metric) -> GreedyConfig {
        let base = GreedyConfig {
            alpha: self.config.alpha,
            normalize: self.config.normalize,
            window: self.config.window().expect("validated"),
            sliding: match metric {
                Metric::BertScoreSp | Metric::MedBertScoreSp => true,
                _ => self.config.window,
            },
        };
        match metric {
            Metric::BertScore | Metric::BertScoreSp => base.unweighted(),
            _ => base,
        }
    }

    fn greedy(&self, metric: Metric, pair: &SummaryPair, sys: &[String], reference: &[String]) -> Cells {
        let config = self.greedy_config(metric);
        let lexicon = if config.alpha == 0.0 { None } else { self.lexicon.as_ref() };
        let result = match self.embeddings.as_ref().expect("validated") {
            Embeddings::Static(store) => {
                let enc = StaticEncoder::new(store);
                med_bertscore(&pair.pair_id, sys, reference, &enc, lexicon, &config)
            }
            Embeddings::Contextual(store) => store
                .document(&pair.pair_id, Side::System, None)
                .and_then(|s| Ok((s, store.document(&pair.pair_id, Side::Reference, None)?)))
                .and_then(|(s, r)| weighted_greedy(s, r, lexicon, &config)),
        };
        prf_cells(metric, result)
    }

    fn likelihood(&self, metric: Metric, pair: &SummaryPair, sys: &[String], reference: &[String]) -> Result<f64, String> {
        let provider = self.likelihood.as_ref().expect("validated").provider();
        let direction = self.config.direction;
        let (target, conditioning) = match direction {
            Direction::SrcToSys => (sys, pair.source.as_str()),
            Direction::RefToSys => (sys, pair.reference.as_str()),
            Direction::SysToRef => (reference, pair.system.as_str()),
        };
        let lp = provider
            .score(&pair.pair_id, direction, target, Some(conditioning))
            .map_err(|e| e.to_string())?;
        let value = if metric == Metric::BartScore {
            bartscore(&lp)
        } else {
            let weights = match &self.lexicon {
                Some(lex) if self.config.alpha != 0.0 => {
                    medical_weights(&lp.target_tokens, lex, self.config.alpha)
                }
                _ => WeightVector::uniform(lp.target_tokens.len()),
            };
            med_bartscore(&lp, &weights, self.config.bart_normalize)
        };
        value.map_err(|e| e.to_string())
    }

    fn score_pair(&self, pair: &SummaryPair) -> Cells {
        let sys = tokenize(&pair.system, self.config.tokenizer).to_strings();
        let reference = tokenize(&pair.reference, self.config.tokenizer).to_strings();
        let mut cells = Vec::new();
        for &metric in &self.metrics {
            match metric {
                Metric::Rouge1 => cells.extend(prf_cells(metric, rouge_n(&sys, &reference, 1))),
                Metric::Rouge2 => cells.extend(prf_cells(metric, rouge_n(&sys, &reference, 2))),
                Metric::RougeL => cells.extend(prf_cells(metric, Ok(rouge_l(&sys, &reference)))),
                m if m.is_greedy() => cells.extend(self.greedy(m, pair, &sys, &reference)),
                Metric::Mist => {
                    let lex = self.lexicon.as_ref().expect("validated");
                    let kge = self.kge.as_ref().expect("validated");
                    let value = mist(
                        &link_concepts(&sys, lex),
                        &link_concepts(&reference, lex),
                        kge,
                        self.config.mist_mode,
                    )
                    .map(|s| s.value)
                    .map_err(|e| e.to_string());
                    cells.push((metric.name().to_string(), value));
                }
                Metric::BartScore | Metric::MedBartScore => {
                    let value = self.likelihood(metric, pair, &sys, &reference);
                    cells.push((metric.name().to_string(), value));
                }
                _ => unreachable!("all metrics handled"),
            }
        }
        cells
    }
}

pub fn run(args: ScoreArgs) -> anyhow::Result<Outcome> {
    let config = args.resolve()?;
    let plan = prepare(config)?;
    let jobs = plan.config.jobs.unwrap_or(0);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .context("starting worker threads")?;
    let results: Vec<Cells> =
        pool.install(|| plan.dataset.pairs.par_iter().map(|p| plan.score_pair(p)).collect());

    let mut errors = Vec::new();
    let mut table = ScoreTable::new(plan.dataset.pair_ids().map(str::to_string).collect());
    let mut columns: Vec<ScoreColumn> = plan
        .metrics
        .iter()
        .flat_map(|m| m.columns())
        .map(|name| ScoreColumn::new(name, true))
        .collect();
    for (pair, cells) in plan.dataset.pairs.iter().zip(results) {
        for (name, value) in cells {
            let col = columns
                .iter_mut()
                .find(|c| c.metric_name == name)
                .expect("column declared");
            match value {
                Ok(v) => col.insert(pair.pair_id.clone(), v).unwrap_or_else(|e| {
                    errors.push(PairError {
                        pair_id: pair.pair_id.clone(),
                        metric: name.clone(),
                        message: e.to_string(),
                    })
                }),
                Err(message) => errors.push(PairError {
                    pair_id: pair.pair_id.clone(),
                    metric: name.clone(),
                    message,
                }),
            }
        }
    }
    for col in columns.into_iter().chain(plan.external.iter().cloned()) {
        table.push(col);
    }
    for cfg in &plan.ensembles {
        match ensemble(&table, cfg, plan.config.sigma) {
            Ok(col) => table.push(col),
            Err(e) => errors.push(PairError {
                pair_id: "*".to_string(),
                metric: cfg.name.clone(),
                message: e.to_string(),
            }),
        }
    }

    let out = &plan.config.out;
    write_file(&out.join("scores.csv"), &write_score_table(&table))?;
    for col in &table.columns {
        let file = format!("{}.csv", file_stem_for(&col.metric_name));
        write_file(&out.join("columns").join(file), &write_score_column(col))?;
    }
    let manifest = Manifest {
        tool: format!("noteval {}", env!("CARGO_PKG_VERSION")),
        config_sha256: plan.config.digest(),
        config: &plan.config,
        inputs: plan.inputs,
        pairs: plan.dataset.len(),
        columns: table
            .columns
            .iter()
            .map(|c| ColumnSummary {
                name: c.metric_name.clone(),
                values: c.len(),
            })
            .collect(),
        external_missing: plan
            .external
            .iter()
            .map(|c| (c.metric_name.clone(), c.coverage(&plan.dataset).missing))
            .filter(|(_, m)| !m.is_empty())
            .collect(),
        errors,
    };
    let json = serde_json::to_string_pretty(&manifest).expect("manifest serializes") + "\n";
    write_file(&out.join("manifest.json"), &json)?;

    eprintln!(
        "scored {} pairs into {} columns; {} error(s)",
        manifest.pairs,
        manifest.columns.len(),
        manifest.errors.len()
    );
    Ok(if manifest.errors.is_empty() {
        Outcome::Success
    } else {
        Outcome::Partial
    })
}
