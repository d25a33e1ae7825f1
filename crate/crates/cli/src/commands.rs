//! Subcommand bodies: resolve settings, load inputs, run one pipeline, write
//! the report.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use semeval_core::corpus::{load_corpus, load_hypotheses, AttributeLabels, Condition, Corpus, HypothesisSet};
use semeval_core::metrics::{BleuConfig, PrefixList, StopwordList, DEFAULT_PREFIXES};
use semeval_core::protocol::{
    attribute_baselines, bleu_trap_analysis, export_embeddings_for_projection, noise_dependency_report,
    prefix_strip_analysis, render_report, run_main_eval, ClassSets, MetricKind, MetricReport, NoiseEmbeddings,
    PairedEmbeddings, ProtocolConfig, ReportFormat, ReportLayout, DEFAULT_SEED,
};
use semeval_core::selftest::run_selftest;
use semeval_core::semantic::{
    accuracy_from_similarities, embedding_frechet_distance, load_embeddings, similarity_matrix, EmbeddingClient,
    EmbeddingFormat, EmbeddingMatrix, RetrievalConfig, ENDPOINT_ENV,
};

use crate::config::{parse_bool, parse_list, pick, ConfigFile};
use crate::{CliError, Command, Common, EmbedService, HypOpts, MetricOpts, RetrievalOpts};

const DEFAULT_EMBED_BATCH: usize = 64;

type CliResult<T> = Result<T, CliError>;

/// Settings every subcommand resolves before doing work.
struct Session {
    cfg: ConfigFile,
    seed: u64,
    out: Option<PathBuf>,
    format: ReportFormat,
}

impl Session {
    fn start(common: &Common) -> CliResult<Self> {
        let cfg = match &common.config {
            Some(p) => ConfigFile::load(p)?,
            None => ConfigFile::default(),
        };
        let seed = pick(common.seed, &cfg, "seed")?.unwrap_or(DEFAULT_SEED);
        if let Some(n) = pick(common.threads, &cfg, "threads")? {
            if n == 0 {
                return Err(CliError::Usage("--threads must be at least 1".into()));
            }
            rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build_global()
                .map_err(|e| CliError::Usage(format!("cannot start thread pool: {e}")))?;
        }
        let format = match pick(common.format, &cfg, "format")? {
            Some(f) => f,
            None => format_from_path(common.out.as_deref()),
        };
        Ok(Self {
            cfg,
            seed,
            out: common.out.clone(),
            format,
        })
    }

    fn protocol(&self) -> ProtocolConfig {
        ProtocolConfig {
            seed: self.seed,
            ..ProtocolConfig::default()
        }
    }

    fn write(&self, report: &MetricReport) -> CliResult<()> {
        let bytes = render_report(report, self.format);
        match &self.out {
            Some(p) => fs::write(p, bytes).map_err(|e| semeval_core::Error::io(p, e))?,
            None => {
                let mut out = std::io::stdout().lock();
                out.write_all(&bytes)
                    .and_then(|_| out.flush())
                    .map_err(|e| semeval_core::Error::io("<stdout>", e))?;
            }
        }
        Ok(())
    }
}

fn format_from_path(out: Option<&Path>) -> ReportFormat {
    match out.and_then(|p| p.extension()).and_then(|e| e.to_str()) {
        Some("csv") => ReportFormat::Csv,
        Some("md") | Some("markdown") => ReportFormat::Markdown,
        _ => ReportFormat::Json,
    }
}

fn apply_metric_opts(p: &mut ProtocolConfig, m: &MetricOpts, cfg: &ConfigFile) -> CliResult<()> {
    if let Some(path) = pick(m.stopwords.clone(), cfg, "stopwords")? {
        p.stopwords = StopwordList::from_file(&path)?;
        p.extra.insert("stopwords".into(), path.display().to_string());
    }
    if let Some(d) = pick(m.dist_denominator, cfg, "dist-denominator")? {
        p.dist_denominator = d;
    }
    if let Some(a) = pick(m.recall_aggregation, cfg, "recall-aggregation")? {
        p.recall_aggregation = a;
    }
    let order = pick(m.self_bleu_order, cfg, "self-bleu-order")?.unwrap_or(p.self_bleu.max_order);
    let smoothing = pick(m.self_bleu_smoothing, cfg, "self-bleu-smoothing")?.unwrap_or(p.self_bleu.smoothing);
    p.self_bleu = BleuConfig::new(order, smoothing, p.self_bleu.reference_mode)?;
    Ok(())
}

fn apply_retrieval_opts(p: &mut ProtocolConfig, r: &RetrievalOpts, cfg: &ConfigFile) -> CliResult<()> {
    let ways = match r.n_ways.clone() {
        Some(w) => Some(w),
        None => cfg
            .get("n-ways")
            .map(|v| parse_list(v).map_err(|e| CliError::Usage(format!("config key `n-ways`: {e}"))))
            .transpose()?,
    };
    if let Some(w) = ways {
        if w.is_empty() {
            return Err(CliError::Usage("--n-ways needs at least one value".into()));
        }
        p.n_ways = w;
    }
    if let Some(runs) = pick(r.runs, cfg, "runs")? {
        p.retrieval_runs = runs;
    }
    Ok(())
}

fn normalize_flag(flag: Option<bool>, cfg: &ConfigFile) -> CliResult<bool> {
    if let Some(b) = flag {
        return Ok(b);
    }
    cfg.get("normalize-embeddings")
        .map(|v| parse_bool(v).map_err(|e| CliError::Usage(format!("config key `normalize-embeddings`: {e}"))))
        .transpose()
        .map(|b| b.unwrap_or(false))
}

/// Lazily built client shared by every role without an embedding file.
struct Embedder<'a> {
    service: &'a EmbedService,
    cfg: &'a ConfigFile,
    normalize: bool,
    client: Option<EmbeddingClient>,
}

impl<'a> Embedder<'a> {
    fn new(service: &'a EmbedService, cfg: &'a ConfigFile, normalize: bool) -> Self {
        Self {
            service,
            cfg,
            normalize,
            client: None,
        }
    }

    fn client(&mut self) -> CliResult<&EmbeddingClient> {
        if self.client.is_none() {
            let endpoint = self
                .service
                .embed_endpoint
                .clone()
                .or_else(|| self.cfg.get("embed-endpoint").map(str::to_string))
                .or_else(|| std::env::var(ENDPOINT_ENV).ok().filter(|s| !s.is_empty()));
            let Some(endpoint) = endpoint else {
                return Err(CliError::Usage(format!(
                    "no embedding source: pass an embedding file, --embed-endpoint, or set {ENDPOINT_ENV}"
                )));
            };
            let batch = pick(self.service.embed_batch, self.cfg, "embed-batch")?.unwrap_or(DEFAULT_EMBED_BATCH);
            self.client = Some(EmbeddingClient::new(endpoint, batch)?.with_normalize(self.normalize));
        }
        Ok(self.client.as_ref().expect("client just built"))
    }

    /// Embeddings for one role: the file when given, otherwise the service.
    fn role(
        &mut self,
        role: &str,
        file: Option<&Path>,
        texts: impl FnOnce() -> (Vec<String>, Vec<String>),
        extra: &mut ProtocolConfig,
    ) -> CliResult<EmbeddingMatrix<f64>> {
        if let Some(path) = file {
            extra.extra.insert(format!("emb_{role}"), path.display().to_string());
            return Ok(load_embeddings(path, EmbeddingFormat::from_path(path))?);
        }
        let (ids, texts) = texts();
        let client = self.client()?;
        let endpoint = client.endpoint().to_string();
        let fetched = client.fetch_embeddings(ids, &texts)?;
        extra.extra.insert(format!("emb_{role}"), endpoint);
        if let Some(model) = fetched.model {
            extra.extra.insert("embedding_model".into(), model);
        }
        Ok(fetched.embeddings)
    }
}

fn reference_texts(corpus: &Corpus) -> (Vec<String>, Vec<String>) {
    corpus.iter().map(|s| (s.id.clone(), s.ground_truth.clone())).unzip()
}

fn hypothesis_texts(h: &HypothesisSet) -> (Vec<String>, Vec<String>) {
    h.hypotheses.iter().map(|(k, v)| (k.clone(), v.clone())).unzip()
}

fn load_hyp_opts(hyp: &HypOpts, corpus: &Corpus) -> CliResult<HypothesisSet> {
    Ok(load_hypotheses(&hyp.hyps, corpus, hyp.system.as_deref(), hyp.condition)?)
}

fn load_matrix(path: &Path) -> CliResult<EmbeddingMatrix<f64>> {
    Ok(load_embeddings(path, EmbeddingFormat::from_path(path))?)
}

pub fn run(command: Command) -> CliResult<ExitCode> {
    match command {
        Command::Eval {
            common,
            refs,
            hyp,
            emb_refs,
            emb_hyps,
            service,
            retrieval,
            metrics,
        } => {
            let s = Session::start(&common)?;
            let mut p = s.protocol();
            apply_metric_opts(&mut p, &metrics, &s.cfg)?;
            apply_retrieval_opts(&mut p, &retrieval, &s.cfg)?;
            p.normalize_embeddings = normalize_flag(service.normalize_embeddings, &s.cfg)?;
            let corpus = load_corpus(&refs)?;
            let hyps = load_hyp_opts(&hyp, &corpus)?;
            let mut embedder = Embedder::new(&service, &s.cfg, p.normalize_embeddings);
            let r = embedder.role("refs", emb_refs.as_deref(), || reference_texts(&corpus), &mut p)?;
            let h = embedder.role("hyps", emb_hyps.as_deref(), || hypothesis_texts(&hyps), &mut p)?;
            let report = run_main_eval(
                &corpus,
                &hyps,
                PairedEmbeddings {
                    hypotheses: &h,
                    references: &r,
                },
                &p,
            )?;
            s.write(&report)?;
        }
        Command::Bleu {
            common,
            refs,
            hyp,
            smoothing,
        } => {
            let s = Session::start(&common)?;
            let mut p = s.protocol();
            if let Some(sm) = pick(smoothing, &s.cfg, "smoothing")? {
                p.bleu = BleuConfig::new(p.bleu.max_order, sm, p.bleu.reference_mode)?;
            }
            let corpus = load_corpus(&refs)?;
            let hyps = load_hyp_opts(&hyp, &corpus)?;
            s.write(&bleu_trap_analysis(&corpus, &hyps, &p)?)?;
        }
        Command::Retrieval {
            common,
            emb_refs,
            emb_hyps,
            n,
            retrieval,
        } => {
            let s = Session::start(&common)?;
            let mut p = s.protocol();
            apply_retrieval_opts(&mut p, &retrieval, &s.cfg)?;
            if let Some(n) = n {
                p.n_ways = vec![n];
            }
            p.extra.insert("emb_refs".into(), emb_refs.display().to_string());
            p.extra.insert("emb_hyps".into(), emb_hyps.display().to_string());
            let r = load_matrix(&emb_refs)?;
            let h = load_matrix(&emb_hyps)?;
            let sims = similarity_matrix(&h, &r)?;
            let m = sims.len();
            let mut report = MetricReport::new(ReportLayout::Generic, "retrieval", None, &p);
            for &n in &p.n_ways {
                if n > m {
                    report.warn(format!("{n}-way retrieval skipped: corpus has only {m} items"));
                    continue;
                }
                let res = accuracy_from_similarities(
                    &sims,
                    &RetrievalConfig {
                        n_way: n,
                        runs: p.retrieval_runs,
                        seed: p.seed,
                    },
                )?;
                report.insert(format!("acc_{n}way"), res.mean_accuracy, MetricKind::Fraction)?;
                report.insert(format!("acc_{n}way_std"), res.std, MetricKind::Fraction)?;
            }
            report.insert("queries", m as f64, MetricKind::Count)?;
            s.write(&report)?;
        }
        Command::Fd {
            common,
            emb_refs,
            emb_hyps,
            normalize_embeddings,
        } => {
            let s = Session::start(&common)?;
            let mut p = s.protocol();
            p.normalize_embeddings = normalize_flag(normalize_embeddings, &s.cfg)?;
            p.extra.insert("emb_refs".into(), emb_refs.display().to_string());
            p.extra.insert("emb_hyps".into(), emb_hyps.display().to_string());
            let r = load_matrix(&emb_refs)?;
            let h = load_matrix(&emb_hyps)?;
            let fd = embedding_frechet_distance(&r, &h, p.normalize_embeddings)?;
            let mut report = MetricReport::new(ReportLayout::Generic, "fd", None, &p);
            report.insert("fd", fd, MetricKind::Scalar)?;
            report.insert("n_refs", r.len() as f64, MetricKind::Count)?;
            report.insert("n_hyps", h.len() as f64, MetricKind::Count)?;
            report.insert("dim", r.dim() as f64, MetricKind::Count)?;
            s.write(&report)?;
        }
        Command::Noise {
            common,
            refs,
            real,
            noise,
            system,
            emb_refs,
            emb_real,
            emb_noise,
            service,
            metrics,
        } => {
            let s = Session::start(&common)?;
            let mut p = s.protocol();
            apply_metric_opts(&mut p, &metrics, &s.cfg)?;
            p.normalize_embeddings = normalize_flag(service.normalize_embeddings, &s.cfg)?;
            let corpus = load_corpus(&refs)?;
            let real = load_hypotheses(&real, &corpus, system.as_deref(), Some(Condition::Real))?;
            let noise = load_hypotheses(&noise, &corpus, system.as_deref(), Some(Condition::Noise))?;
            let mut embedder = Embedder::new(&service, &s.cfg, p.normalize_embeddings);
            let r = embedder.role("refs", emb_refs.as_deref(), || reference_texts(&corpus), &mut p)?;
            let er = embedder.role("real", emb_real.as_deref(), || hypothesis_texts(&real), &mut p)?;
            let en = embedder.role("noise", emb_noise.as_deref(), || hypothesis_texts(&noise), &mut p)?;
            let report = noise_dependency_report(
                &corpus,
                &real,
                &noise,
                NoiseEmbeddings {
                    references: &r,
                    real: &er,
                    noise: &en,
                },
                &p,
            )?;
            s.write(&report)?;
        }
        Command::Prefix {
            common,
            refs,
            hyp,
            prefixes,
            extra,
        } => {
            let s = Session::start(&common)?;
            let mut p = s.protocol();
            let mut phrases: Vec<String> = Vec::new();
            if let Some(path) = pick(prefixes, &s.cfg, "prefixes")? {
                let text = fs::read_to_string(&path).map_err(|e| semeval_core::Error::io(&path, e))?;
                phrases.extend(
                    text.lines()
                        .map(str::trim)
                        .filter(|l| !l.is_empty() && !l.starts_with('#'))
                        .map(str::to_string),
                );
            }
            phrases.extend(extra);
            if phrases.is_empty() {
                phrases.extend(DEFAULT_PREFIXES.iter().map(|s| s.to_string()));
            }
            p.prefixes = PrefixList::new(&phrases);
            let corpus = load_corpus(&refs)?;
            let hyps = load_hyp_opts(&hyp, &corpus)?;
            s.write(&prefix_strip_analysis(&corpus, &hyps, &p.prefixes, &p)?)?;
        }
        Command::Baselines {
            common,
            train,
            eval_split,
            sentiment_classes,
            topic_classes,
        } => {
            let s = Session::start(&common)?;
            let labels = |path: &Path| -> CliResult<Vec<AttributeLabels>> {
                Ok(load_corpus(path)?
                    .iter()
                    .map(|x| x.attributes.clone().unwrap_or_default())
                    .collect())
            };
            let classes = ClassSets {
                sentiment: sentiment_classes,
                topic: topic_classes,
            };
            let mut report = attribute_baselines(&labels(&train)?, &labels(&eval_split)?, &classes)?;
            report.note("train", train.display().to_string());
            report.note("eval", eval_split.display().to_string());
            s.write(&report)?;
        }
        Command::EmbedExport {
            common,
            sets,
            emb_format,
        } => {
            let s = Session::start(&common)?;
            let Some(out) = s.out.clone() else {
                return Err(CliError::Usage("embed-export needs --out".into()));
            };
            let mut loaded = Vec::with_capacity(sets.len());
            for spec in &sets {
                let Some((label, path)) = spec.split_once('=') else {
                    return Err(CliError::Usage(format!("--set expects LABEL=FILE, got `{spec}`")));
                };
                loaded.push((label.to_string(), load_matrix(Path::new(path))?));
            }
            let refs: Vec<(&str, &EmbeddingMatrix<f64>)> = loaded.iter().map(|(l, e)| (l.as_str(), e)).collect();
            let fmt = emb_format.unwrap_or_else(|| EmbeddingFormat::from_path(&out));
            let n = export_embeddings_for_projection(&refs, &out, fmt)?;
            eprintln!("exported {n} vectors from {} sets to {}", refs.len(), out.display());
        }
        Command::Selftest { common } => {
            let s = Session::start(&common)?;
            let p = s.protocol();
            let checks = run_selftest(s.seed);
            let mut report = MetricReport::new(ReportLayout::Generic, "selftest", None, &p);
            for c in &checks {
                let key = c.name.replace(' ', "_");
                report.set_flag(key.clone(), c.passed);
                report.note(key, c.detail.clone());
            }
            s.write(&report)?;
            let failed: Vec<&str> = checks.iter().filter(|c| !c.passed).map(|c| c.name).collect();
            if !failed.is_empty() {
                eprintln!("error[selftest]: failed checks: {}", failed.join(", "));
                return Ok(ExitCode::from(1));
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}
