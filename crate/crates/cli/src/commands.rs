use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use assocnet::activation::spread_batch;
use assocnet::experiments::{
    cross_model_correlation, default_gender_probe, default_priming_items, load_priming_items, run_bias_probe,
    run_priming, BiasReport, GenderProbe, PrimingItem, PrimingReport, Table,
};
use assocnet::lexicon::wordnet::WordNet;
use assocnet::netbuild::{build_directed, compare, net_stats, reduce, undirect_max};
use assocnet::norms::{dataset_stats, preprocess};
use assocnet::stats::normalize;
use assocnet::{Lexicon, NormsTable, SemanticNetwork};
use assocnet_llmgen::{generate, resume, GenConfig, OpenAiClient};
use serde_json::json;
use tracing::{info, warn};
use tracing_subscriber::filter::LevelFilter;

use crate::config::RunConfig;
use crate::output::{ensure_dir, print_json, write_json, write_sidecar, Metadata};
use crate::{ActArgs, Cli, Command, RunArgs};

/// Config file values overlaid with command-line flags.
fn settings(run: &RunArgs, act: Option<&ActArgs>) -> anyhow::Result<RunConfig> {
    let mut cfg = RunConfig::load_opt(run.config.as_deref())?;
    cfg.seed = run.seed.or(cfg.seed);
    cfg.lexicon_dir = run.lexicon.clone().or(cfg.lexicon_dir);
    if let Some(a) = act {
        cfg.retention = a.retention.or(cfg.retention);
        cfg.decay = a.decay.or(cfg.decay);
        cfg.suppress = a.suppress.or(cfg.suppress);
        cfg.initial = a.initial.or(cfg.initial);
        cfg.iterations = a.iterations.or(cfg.iterations);
        if a.unweighted {
            cfg.weighted = Some(false);
        }
        cfg.normalization = a.normalization.or(cfg.normalization);
    }
    Ok(cfg)
}

fn run_args(cmd: &Command) -> Option<(&RunArgs, Option<&ActArgs>)> {
    match cmd {
        Command::Preprocess { run, .. }
        | Command::BuildNet { run, .. }
        | Command::NetStats { run, .. }
        | Command::CompareNets { run, .. } => Some((run, None)),
        Command::Activate { run, act, .. }
        | Command::PrimeExperiment { run, act, .. }
        | Command::BiasProbe { run, act, .. }
        | Command::Pipeline { run, act, .. } => Some((run, Some(act))),
        Command::Generate { .. } | Command::ExportLexicon { .. } => None,
    }
}

fn init_logging(cli: &Cli, cfg: &RunConfig) -> anyhow::Result<()> {
    let level = if cli.quiet {
        LevelFilter::ERROR
    } else {
        match cli.verbose {
            0 => match &cfg.verbosity {
                Some(v) => v.parse().map_err(|_| anyhow::anyhow!("unknown verbosity {v:?}"))?,
                None => LevelFilter::WARN,
            },
            1 => LevelFilter::INFO,
            2 => LevelFilter::DEBUG,
            _ => LevelFilter::TRACE,
        }
    };
    tracing_subscriber::fmt()
        .with_max_level(level)
        .with_writer(std::io::stderr)
        .with_target(false)
        .init();
    Ok(())
}

pub fn run(cli: Cli) -> anyhow::Result<()> {
    let cfg = match run_args(&cli.command) {
        Some((run, act)) => settings(run, act)?,
        None => RunConfig::default(),
    };
    init_logging(&cli, &cfg)?;
    if let Some(n) = cli.threads.or(cfg.threads) {
        if n == 0 {
            bail!("--threads must be at least 1");
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring the thread pool")?;
    }
    match &cli.command {
        Command::Preprocess { input, output, .. } => cmd_preprocess(input, output, &cfg),
        Command::BuildNet { input, output, full_output, .. } => {
            cmd_build_net(input, output, full_output.as_deref(), &cfg)
        }
        Command::NetStats { input, output, .. } => cmd_net_stats(input, output.as_deref(), &cfg),
        Command::CompareNets { a, b, output, .. } => cmd_compare(a, b, output.as_deref(), &cfg),
        Command::Activate { network, primes, primes_file, output, normalized, .. } => {
            cmd_activate(network, primes, primes_file.as_deref(), output, *normalized, &cfg)
        }
        Command::PrimeExperiment { network, items, output_dir, .. } => {
            cmd_priming(network, items.as_deref(), output_dir, &cfg)
        }
        Command::BiasProbe { network, probe, compare_with, output_dir, .. } => {
            cmd_bias(network, probe.as_deref(), compare_with.as_deref(), output_dir, &cfg)
        }
        Command::Generate { cues, config, output, log, resume } => cmd_generate(cues, config, output, log, *resume),
        Command::Pipeline { input, output_dir, .. } => {
            let dir = output_dir
                .clone()
                .or_else(|| cfg.output_dir.clone())
                .context("no output directory: pass --output-dir or set output_dir in the config")?;
            cmd_pipeline(input, &dir, &cfg)
        }
        Command::ExportLexicon { wordnet, vocabulary, spelling, output } => {
            cmd_export_lexicon(wordnet, vocabulary, spelling.as_deref(), output)
        }
    }
}

fn lexicon(cfg: &RunConfig) -> anyhow::Result<(Lexicon, PathBuf)> {
    let dir = cfg
        .lexicon_dir
        .clone()
        .context("no lexicon directory: pass --lexicon or set lexicon_dir in the config")?;
    let lex = Lexicon::load_dir(&dir).with_context(|| format!("loading lexicon from {}", dir.display()))?;
    Ok((lex, dir))
}

fn load_network(path: &Path) -> anyhow::Result<SemanticNetwork> {
    SemanticNetwork::load_edge_list(path).with_context(|| format!("reading network {}", path.display()))
}

fn activation_params(cfg: &RunConfig) -> serde_json::Value {
    json!({ "activation": cfg.activation(), "normalization": cfg.normalization() })
}

fn cmd_preprocess(input: &Path, output: &Path, cfg: &RunConfig) -> anyhow::Result<()> {
    let (lex, lex_dir) = lexicon(cfg)?;
    let raw = NormsTable::read_csv(input).with_context(|| format!("reading {}", input.display()))?;
    let (clean, report) = preprocess(&raw, &lex, cfg.seed());
    let stats = dataset_stats(&clean)?;
    clean.write_csv(output)?;
    let meta = Metadata::new(
        "preprocess",
        Some(cfg.seed()),
        json!({ "lexicon_provenance": lex.provenance }),
        &[input, &lex_dir],
    );
    write_sidecar(output, &meta, &json!({ "report": report, "dataset_stats": stats }))?;
    print_json(&stats)
}

fn cmd_build_net(input: &Path, output: &Path, full_output: Option<&Path>, cfg: &RunConfig) -> anyhow::Result<()> {
    let (lex, lex_dir) = lexicon(cfg)?;
    let clean = NormsTable::read_csv(input).with_context(|| format!("reading {}", input.display()))?;
    let full = undirect_max(&build_directed(&clean));
    let reduced = reduce(&full, &lex)?;
    let body = json!({ "full": net_stats(&full), "reduced": net_stats(&reduced), "filters": reduced.metadata.filters });
    let meta = Metadata::new(
        "build-net",
        Some(cfg.seed()),
        json!({ "lexicon_provenance": lex.provenance }),
        &[input, &lex_dir],
    );
    reduced.save_edge_list(output)?;
    write_sidecar(output, &meta, &body)?;
    if let Some(p) = full_output {
        full.save_edge_list(p)?;
        write_sidecar(p, &meta, &json!({ "stats": net_stats(&full) }))?;
    }
    print_json(&body)
}

fn emit(path: Option<&Path>, meta: &Metadata, body: &impl serde::Serialize) -> anyhow::Result<()> {
    match path {
        Some(p) => write_json(p, meta, body),
        None => print_json(body),
    }
}

fn cmd_net_stats(input: &Path, output: Option<&Path>, cfg: &RunConfig) -> anyhow::Result<()> {
    let g = load_network(input)?;
    let meta = Metadata::new("net-stats", Some(cfg.seed()), json!({}), &[input]);
    emit(output, &meta, &net_stats(&g))
}

fn cmd_compare(a: &Path, b: &Path, output: Option<&Path>, cfg: &RunConfig) -> anyhow::Result<()> {
    let (ga, gb) = (load_network(a)?, load_network(b)?);
    let meta = Metadata::new("compare-nets", Some(cfg.seed()), json!({}), &[a, b]);
    emit(output, &meta, &compare(&ga, &gb))
}

fn read_lines(path: &Path) -> anyhow::Result<Vec<String>> {
    Ok(std::fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))?
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(String::from)
        .collect())
}

fn cmd_activate(
    network: &Path,
    primes: &[String],
    primes_file: Option<&Path>,
    output: &Path,
    normalized: bool,
    cfg: &RunConfig,
) -> anyhow::Result<()> {
    let g = load_network(network)?;
    let mut all: Vec<String> = primes.iter().map(|p| p.trim().to_string()).filter(|p| !p.is_empty()).collect();
    if let Some(f) = primes_file {
        all.extend(read_lines(f)?);
    }
    if all.is_empty() {
        bail!("no primes given");
    }
    let p = cfg.activation();
    let raw = spread_batch(&g, &all, &p)?;
    let m = if normalized { normalize(&raw, cfg.normalization()).values } else { raw };
    let file = std::fs::File::create(output).with_context(|| format!("creating {}", output.display()))?;
    m.write_csv(std::io::BufWriter::new(file))?;
    let mut inputs = vec![network];
    inputs.extend(primes_file);
    let meta = Metadata::new("activate", Some(cfg.seed()), activation_params(cfg), &inputs);
    write_sidecar(output, &meta, &json!({ "resolved": m.params, "normalized": normalized }))
}

fn save_table(t: &Table, path: &Path, meta: &Metadata) -> anyhow::Result<()> {
    t.save(path)?;
    write_sidecar(path, meta, &json!({}))
}

fn priming_items(cfg: &RunConfig, flag: Option<&Path>) -> anyhow::Result<(Vec<PrimingItem>, Option<PathBuf>)> {
    match flag.map(Path::to_path_buf).or_else(|| cfg.items.clone()) {
        Some(p) => Ok((load_priming_items(&p)?, Some(p))),
        None => Ok((default_priming_items(), None)),
    }
}

fn gender_probe(cfg: &RunConfig, flag: Option<&Path>) -> anyhow::Result<(GenderProbe, Option<PathBuf>)> {
    match flag.map(Path::to_path_buf).or_else(|| cfg.probe.clone()) {
        Some(p) => Ok((GenderProbe::load(&p)?, Some(p))),
        None => Ok((default_gender_probe(), None)),
    }
}

fn write_priming(dir: &Path, report: &PrimingReport, meta: &Metadata) -> anyhow::Result<()> {
    ensure_dir(dir)?;
    write_json(&dir.join("report.json"), meta, report)?;
    save_table(&report.boxplot_table(), &dir.join("boxplot.csv"), meta)?;
    save_table(&report.histogram_table(), &dir.join("histogram.csv"), meta)
}

fn write_bias(dir: &Path, report: &BiasReport, meta: &Metadata) -> anyhow::Result<()> {
    ensure_dir(dir)?;
    write_json(&dir.join("report.json"), meta, report)?;
    save_table(&report.heatmap_table(), &dir.join("heatmap.csv"), meta)?;
    save_table(&report.boxplot_table(), &dir.join("boxplot.csv"), meta)?;
    save_table(&report.histogram_table(), &dir.join("histogram.csv"), meta)
}

fn cmd_priming(network: &Path, items: Option<&Path>, dir: &Path, cfg: &RunConfig) -> anyhow::Result<()> {
    let g = load_network(network)?;
    let (items, items_path) = priming_items(cfg, items)?;
    let report = run_priming(&g, &items, &cfg.activation(), cfg.normalization())?;
    let mut inputs = vec![network];
    inputs.extend(items_path.as_deref());
    let meta = Metadata::new("prime-experiment", Some(cfg.seed()), activation_params(cfg), &inputs);
    write_priming(dir, &report, &meta)?;
    print_json(&json!({ "activation_test": report.activation_test, "correlation": report.correlation }))
}

fn cmd_bias(
    network: &Path,
    probe: Option<&Path>,
    compare_with: Option<&Path>,
    dir: &Path,
    cfg: &RunConfig,
) -> anyhow::Result<()> {
    let g = load_network(network)?;
    let (probe, probe_path) = gender_probe(cfg, probe)?;
    let (p, mode) = (cfg.activation(), cfg.normalization());
    let report = run_bias_probe(&g, &probe, &p, mode)?;
    let mut inputs = vec![network];
    inputs.extend(probe_path.as_deref());
    inputs.extend(compare_with);
    let meta = Metadata::new("bias-probe", Some(cfg.seed()), activation_params(cfg), &inputs);
    write_bias(dir, &report, &meta)?;
    let mut summary = json!({ "tests": report.tests });
    if let Some(other) = compare_with {
        let other_report = run_bias_probe(&load_network(other)?, &probe, &p, mode)?;
        let corr = cross_model_correlation(&report, &other_report)?;
        write_json(&dir.join("cross_model.json"), &meta, &json!({ "correlations": corr }))?;
        summary["cross_model"] = json!(corr);
    }
    print_json(&summary)
}

fn cmd_generate(cues: &Path, config: &Path, output: &Path, log: &Path, resume_run: bool) -> anyhow::Result<()> {
    let cfg = GenConfig::load(config)?;
    let client = OpenAiClient::from_env(&cfg)?;
    let rt = tokio::runtime::Runtime::new().context("starting async runtime")?;
    let run = if resume_run {
        rt.block_on(resume(&client, &cfg, log))?
    } else {
        let cues = read_lines(cues)?;
        rt.block_on(generate(&client, &cues, &cfg, log))?
    };
    info!(requested = run.requested, failed = run.failed, "generation finished");
    if run.failed > 0 {
        warn!(failed = run.failed, "some slots are blank; rerun with --resume to retry them");
    }
    run.table.write_csv(output)?;
    let meta = Metadata::new(
        "generate",
        None,
        json!({ "model": cfg.model, "template": cfg.template, "repetitions": cfg.repetitions,
                "temperature": cfg.temperature, "max_tokens": cfg.max_tokens }),
        &[cues, config, log],
    );
    write_sidecar(output, &meta, &json!({ "requested": run.requested, "failed": run.failed }))
}

fn cmd_pipeline(input: &Path, dir: &Path, cfg: &RunConfig) -> anyhow::Result<()> {
    let (lex, lex_dir) = lexicon(cfg)?;
    ensure_dir(dir)?;
    let seed = cfg.seed();
    let (items, items_path) = priming_items(cfg, None)?;
    let (probe, probe_path) = gender_probe(cfg, None)?;
    let mut inputs: Vec<&Path> = vec![input, &lex_dir];
    inputs.extend(items_path.as_deref());
    inputs.extend(probe_path.as_deref());
    let mut params = activation_params(cfg);
    params["lexicon_provenance"] = json!(lex.provenance);
    let meta = Metadata::new("pipeline", Some(seed), params, &inputs);

    info!("preprocessing");
    let raw = NormsTable::read_csv(input).with_context(|| format!("reading {}", input.display()))?;
    let (clean, report) = preprocess(&raw, &lex, seed);
    let stats = dataset_stats(&clean)?;
    let clean_path = dir.join("clean.csv");
    clean.write_csv(&clean_path)?;
    write_sidecar(&clean_path, &meta, &json!({}))?;
    write_json(&dir.join("preprocess.json"), &meta, &json!({ "report": report, "dataset_stats": stats }))?;

    info!("building networks");
    let full = undirect_max(&build_directed(&clean));
    let mut reduced = reduce(&full, &lex)?;
    reduced.metadata.source = "reduced network".into();
    for (name, g) in [("network_full.tsv", &full), ("network_reduced.tsv", &reduced)] {
        let p = dir.join(name);
        g.save_edge_list(&p)?;
        write_sidecar(&p, &meta, &json!({ "stats": net_stats(g) }))?;
    }
    let net = json!({ "full": net_stats(&full), "reduced": net_stats(&reduced) });
    write_json(&dir.join("network_stats.json"), &meta, &net)?;

    let (p, mode) = (cfg.activation(), cfg.normalization());
    info!("priming experiment");
    let priming = match run_priming(&reduced, &items, &p, mode) {
        Ok(r) => {
            write_priming(&dir.join("priming"), &r, &meta)?;
            json!({ "status": "ok", "activation_test": r.activation_test, "correlation": r.correlation,
                    "dropped_items": r.dropped.len() })
        }
        Err(e) => {
            warn!(error = %e, "priming experiment skipped");
            json!({ "status": "skipped", "reason": e.to_string() })
        }
    };
    info!("bias probe");
    let bias = match run_bias_probe(&reduced, &probe, &p, mode) {
        Ok(r) => {
            write_bias(&dir.join("bias"), &r, &meta)?;
            json!({ "status": "ok", "tests": r.tests, "dropped_targets": r.dropped_targets })
        }
        Err(e) => {
            warn!(error = %e, "bias probe skipped");
            json!({ "status": "skipped", "reason": e.to_string() })
        }
    };
    let summary = json!({
        "dataset_stats": stats,
        "network": net,
        "priming": priming,
        "bias_probe": bias,
    });
    write_json(&dir.join("summary.json"), &meta, &summary)?;
    print_json(&summary)
}

fn read_spelling(path: &Path) -> anyhow::Result<std::collections::HashMap<String, String>> {
    let mut map = std::collections::HashMap::new();
    for (i, line) in std::fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))?
        .lines()
        .enumerate()
    {
        if line.trim().is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('\t') else {
            bail!("{}:{}: expected two tab-separated columns", path.display(), i + 1);
        };
        map.insert(k.trim().to_lowercase(), v.trim().to_lowercase());
    }
    Ok(map)
}

fn cmd_export_lexicon(wordnet: &Path, vocabulary: &Path, spelling: Option<&Path>, output: &Path) -> anyhow::Result<()> {
    let wn = WordNet::load(wordnet).with_context(|| format!("loading WordNet from {}", wordnet.display()))?;
    let raw = NormsTable::read_csv(vocabulary).with_context(|| format!("reading {}", vocabulary.display()))?;
    let words: BTreeSet<String> = raw
        .rows
        .iter()
        .flat_map(|r| std::iter::once(r.cue.as_str()).chain(r.present()))
        .map(|w| w.trim().to_lowercase().replace('_', " "))
        .collect();
    let spelling_map = spelling.map(read_spelling).transpose()?.unwrap_or_default();
    let provenance = format!(
        "wordnet: {}\nvocabulary: {}\nspelling: {}",
        wordnet.display(),
        vocabulary.display(),
        spelling.map_or("none".to_string(), |p| p.display().to_string())
    );
    let (lex, diag) = wn.export(words.iter().map(String::as_str), spelling_map, provenance);
    lex.write_dir(output).with_context(|| format!("writing {}", output.display()))?;
    print_json(&json!({
        "valid_words": lex.valid_words.len(),
        "lemma_entries": lex.lemma_map.len(),
        "spelling_entries": lex.spelling_map.len(),
        "compound_entries": lex.compound_map.len(),
        "compound_collisions": diag.colliding_keys,
        "compound_entries_dropped": diag.dropped_entries,
    }))
}

