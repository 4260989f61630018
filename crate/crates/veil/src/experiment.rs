//! Experiment runner: every question through every technique, scored and
//! averaged into one report per prompt variant.
//!
//! Plan file (TOML):
//!
//! ```toml
//! corpus = "corpus.jsonl"
//! techniques = ["UPT", "NER", "PoS"]   # default: the seven combinations
//! prompt_engineering = "both"          # off | on | both
//! workers = 4
//! ```

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use veil_core::metrics::{aggregate, compute_ils_with, HashedTfEmbedder, MetricRow, QuestionMetrics};
use veil_core::{build_prompt, PipelineSpec, Residual};

use crate::annotations::{Annotations, Variant};
use crate::config::Config;
use crate::corpus::{self, QuestionRecord};
use crate::endpoint::LlmEndpoint;
use crate::error::{Error, Result};
use crate::gateway::{run_cycle, SessionOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PromptEngineering {
    #[default]
    Off,
    On,
    Both,
}

impl PromptEngineering {
    pub fn variants(self) -> Vec<Variant> {
        match self {
            PromptEngineering::Off => vec![Variant::Plain],
            PromptEngineering::On => vec![Variant::PromptEngineered],
            PromptEngineering::Both => vec![Variant::Plain, Variant::PromptEngineered],
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPlan {
    corpus: PathBuf,
    #[serde(default)]
    techniques: Option<Vec<String>>,
    #[serde(default)]
    prompt_engineering: PromptEngineering,
    #[serde(default)]
    workers: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct ExperimentPlan {
    pub corpus: Vec<QuestionRecord>,
    pub techniques: Vec<PipelineSpec>,
    pub prompt_engineering: PromptEngineering,
    pub workers: Option<usize>,
}

impl ExperimentPlan {
    pub fn new(
        corpus: Vec<QuestionRecord>,
        techniques: Vec<PipelineSpec>,
        prompt_engineering: PromptEngineering,
    ) -> Result<Self> {
        if techniques.is_empty() {
            return Err(Error::bad_file("", "plan lists no techniques"));
        }
        let mut seen = BTreeSet::new();
        for t in &techniques {
            if !seen.insert(t.label()) {
                return Err(Error::bad_file("", format!("technique {t} listed twice")));
            }
        }
        Ok(Self {
            corpus,
            techniques,
            prompt_engineering,
            workers: None,
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let raw: RawPlan = toml::from_str(&text).map_err(|e| Error::bad_file(path, e.message()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        let corpus = corpus::load(&base.join(&raw.corpus))?;
        let techniques = match raw.techniques {
            None => PipelineSpec::default_techniques(),
            Some(labels) => labels
                .iter()
                .map(|l| PipelineSpec::parse(l))
                .collect::<Result<_, _>>()
                .map_err(|e| Error::bad_file(path, e))?,
        };
        let mut plan = Self::new(corpus, techniques, raw.prompt_engineering).map_err(|e| match e {
            Error::BadFile { reason, .. } => Error::bad_file(path, reason),
            other => other,
        })?;
        plan.workers = raw.workers;
        Ok(plan)
    }
}

/// Per-question scores kept for auditing alongside the averaged rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellRecord {
    pub question_id: String,
    pub technique: String,
    pub stt: bool,
    pub ilm: f64,
    pub ils: f64,
    pub residuals: Vec<Residual>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub variant: Variant,
    pub rows: Vec<MetricRow>,
    pub cells: Vec<CellRecord>,
}

pub const COLUMNS: [&str; 5] = ["Transformation Technique", "STT", "ILM", "ILS", "IL"];

impl Report {
    /// Aligned text table in the column order of the published results.
    pub fn render_table(&self) -> String {
        let mut grid = vec![COLUMNS.map(String::from)];
        for row in &self.rows {
            let [stt, ilm, ils, il] = row.percent_cells();
            grid.push([row.technique.clone(), stt, ilm, ils, il]);
        }
        let widths: Vec<usize> = (0..5)
            .map(|c| grid.iter().map(|r| r[c].chars().count()).max().unwrap_or(0))
            .collect();
        let mut out = String::new();
        for (i, row) in grid.iter().enumerate() {
            let cells: Vec<String> = row
                .iter()
                .zip(&widths)
                .enumerate()
                .map(|(c, (cell, &w))| if c == 0 { format!("{cell:<w$}") } else { format!("{cell:>w$}") })
                .collect();
            let _ = writeln!(out, "{}", cells.join(" | ").trim_end());
            if i == 0 {
                let rule: Vec<String> = widths.iter().map(|&w| "-".repeat(w)).collect();
                let _ = writeln!(out, "{}", rule.join("-+-"));
            }
        }
        out
    }

    pub fn file_stem(&self) -> String {
        format!("report-{}", self.variant.as_str())
    }

    /// Writes `<stem>.json` and `<stem>.txt` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<[PathBuf; 2]> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let json = dir.join(format!("{}.json", self.file_stem()));
        let txt = dir.join(format!("{}.txt", self.file_stem()));
        let mut body = serde_json::to_string_pretty(self).expect("report serializes");
        body.push('\n');
        fs::write(&json, body).map_err(|e| Error::io(&json, e))?;
        fs::write(&txt, self.render_table()).map_err(|e| Error::io(&txt, e))?;
        Ok([json, txt])
    }
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub workers: Option<usize>,
    /// Persist every cycle's session here.
    pub session_dir: Option<PathBuf>,
}

fn cell_id(q: &str, spec: &PipelineSpec, v: Variant) -> String {
    format!("{q}/{}/{}", spec.label(), v.as_str())
}

/// Fails with every (question, technique, variant) lacking a judgment.
fn check_annotations(plan: &ExperimentPlan, ann: &Annotations, endpoint: &LlmEndpoint) -> Result<()> {
    let mut missing = Vec::new();
    for v in plan.prompt_engineering.variants() {
        for spec in &plan.techniques {
            for q in &plan.corpus {
                match ann.get(&q.id, spec, v) {
                    None => missing.push(cell_id(&q.id, spec, v)),
                    Some(a) if a.stt.is_none() && !endpoint.is_mock() => {
                        missing.push(format!("{} (stt)", cell_id(&q.id, spec, v)))
                    }
                    Some(_) => {}
                }
            }
        }
    }
    if missing.is_empty() {
        Ok(())
    } else {
        Err(Error::MissingAnnotation(missing))
    }
}

pub fn evaluate(
    plan: &ExperimentPlan,
    config: &Config,
    endpoint: &LlmEndpoint,
    ann: &Annotations,
    opts: &RunOptions,
) -> Result<Vec<Report>> {
    if plan.corpus.is_empty() {
        return Err(Error::bad_file("", "corpus is empty"));
    }
    check_annotations(plan, ann, endpoint)?;
    let workers = opts.workers.or(plan.workers).unwrap_or(0);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .expect("thread pool");
    pool.install(|| evaluate_in_pool(plan, config, endpoint, ann, opts))
}

fn evaluate_in_pool(
    plan: &ExperimentPlan,
    config: &Config,
    endpoint: &LlmEndpoint,
    ann: &Annotations,
    opts: &RunOptions,
) -> Result<Vec<Report>> {
    let template = config.template();
    let embedder = HashedTfEmbedder::new(config.embedder.dimension);
    let variants = plan.prompt_engineering.variants();

    let obfuscators = plan
        .corpus
        .iter()
        .map(|q| match &q.upt {
            Some(pairs) => config.obfuscator_with(config.upt.build(pairs)?),
            None => config.obfuscator(),
        })
        .collect::<Result<Vec<_>>>()?;

    // answers to the untransformed prompts, the reference for ILS
    let baseline_jobs: Vec<(usize, Variant)> = variants
        .iter()
        .flat_map(|&v| (0..plan.corpus.len()).map(move |i| (i, v)))
        .collect();
    let baselines: BTreeMap<(usize, Variant), String> = baseline_jobs
        .par_iter()
        .map(|&(i, v)| {
            let q = &plan.corpus[i];
            let t = (v == Variant::PromptEngineered).then_some(&template);
            let prompt = build_prompt(&q.context, &q.question, t)?;
            Ok(((i, v), endpoint.query(&prompt)?.text))
        })
        .collect::<Result<_>>()?;

    let mut reports = Vec::new();
    for &v in &variants {
        let jobs: Vec<(usize, usize)> = (0..plan.techniques.len())
            .flat_map(|t| (0..plan.corpus.len()).map(move |i| (t, i)))
            .collect();
        let cells: Vec<CellRecord> = jobs
            .par_iter()
            .map(|&(t, i)| {
                let q = &plan.corpus[i];
                let spec = plan.techniques[t].clone().with_prompt_engineering(v == Variant::PromptEngineered);
                let session = SessionOptions {
                    dir: opts.session_dir.clone(),
                    id: Some(format!("{}-{}-{}", q.id, spec.label(), v.as_str()).replace('+', "_")),
                };
                let out = run_cycle(&obfuscators[i], &q.context, &q.question, &spec, endpoint, &template, &session)?;
                let a = ann.get(&q.id, &spec, v).expect("checked above");
                let ils = match a.ils {
                    Some(x) => x,
                    None => compute_ils_with(&embedder, &baselines[&(i, v)], &out.result.clarified_response),
                };
                let stt = a.stt.or(out.result.stt_flag).expect("checked above");
                Ok(CellRecord {
                    question_id: q.id.clone(),
                    technique: spec.label(),
                    stt,
                    ilm: a.ilm()?,
                    ils,
                    residuals: out.result.residual_tokens,
                })
            })
            .collect::<Result<_>>()?;

        let rows = plan
            .techniques
            .iter()
            .enumerate()
            .map(|(t, spec)| {
                let n = plan.corpus.len();
                let per_question: Vec<QuestionMetrics> = cells[t * n..(t + 1) * n]
                    .iter()
                    .map(|c| QuestionMetrics {
                        ils: c.ils,
                        ilm: c.ilm,
                        stt: c.stt,
                    })
                    .collect();
                Ok(aggregate(&spec.label(), &per_question)?)
            })
            .collect::<Result<Vec<_>>>()?;
        reports.push(Report {
            variant: v,
            rows,
            cells,
        });
    }
    Ok(reports)
}
