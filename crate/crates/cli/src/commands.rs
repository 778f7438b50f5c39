use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use mpgibbs::hmm::{
    baum_welch, forward_log_likelihood, run_hmm_sampler, HmmParams, HmmRun, HmmRunConfig,
    ObservationSequence,
};
use mpgibbs::io::{
    fmt_sig9, load_corpus_with_vocab, load_hmm_params, load_observations_binary,
    load_observations_text, load_topic_matrix, parse_theta_csv, save_corpus, save_hmm_params,
    save_observations_binary, save_observations_text, save_topic_matrix, save_vocab,
    write_theta_csv, write_trace_csv,
};
use mpgibbs::lda::{run_lda_sampler, Corpus, LdaRun, LdaRunConfig, TopicMatrix};
use mpgibbs::metrics::{
    bucket_histogram, disc, table_buckets, topic_weight_series, yearly_entropy_curve,
    yearly_topic_table, Weighting, YearTopicTable,
};
use mpgibbs::prob::{sample_dirichlet, Phase, RngStream, StreamId};
use mpgibbs::synth::{make_hard_hmm, make_lda_dataset};

use crate::config::{
    EvalSpec, ExperimentConfig, GenerateSpec, MetricKind, ModelKind, ObsFormat,
};
use crate::digest::digest_files;

#[derive(Serialize, Deserialize)]
struct DatasetMetadata {
    spec: GenerateSpec,
    files: Vec<String>,
    digest: String,
}

/// Generate a dataset directory from a spec file and return its digest.
pub fn cmd_generate(
    spec_path: &Path,
    out_dir: &Path,
    seed_override: Option<u64>,
) -> anyhow::Result<String> {
    let bytes = fs::read(spec_path)
        .with_context(|| format!("reading spec file {}", spec_path.display()))?;
    let mut spec = GenerateSpec::from_slice(&bytes)?;
    if let Some(seed) = seed_override {
        spec.override_seed(seed);
    }
    fs::create_dir_all(out_dir)
        .with_context(|| format!("creating output directory {}", out_dir.display()))?;

    let files: Vec<String> = match &spec {
        GenerateSpec::Hmm { spec: hmm_spec, format } => {
            let (params, obs) = make_hard_hmm(hmm_spec)?;
            save_hmm_params(&params, &out_dir.join("params.json"))?;
            match format {
                ObsFormat::Text => {
                    save_observations_text(obs.symbols(), &out_dir.join("observations.txt"))?
                }
                ObsFormat::Binary => {
                    save_observations_binary(obs.symbols(), &out_dir.join("observations.bin"))?
                }
            }
            let obs_name = match format {
                ObsFormat::Text => "observations.txt",
                ObsFormat::Binary => "observations.bin",
            };
            vec!["params.json".into(), obs_name.into()]
        }
        GenerateSpec::Lda { spec: lda_spec } => {
            let data = make_lda_dataset(lda_spec)?;
            // Ground-truth topics are not a posterior estimate; eta 0 marks
            // that in the file.
            save_topic_matrix(&data.topics, 0.0, &out_dir.join("topics.json"))?;
            save_corpus(&data.corpus, &out_dir.join("corpus.jsonl"))?;
            let vocab: Vec<String> = (0..data.corpus.vocab_size())
                .map(|i| format!("w{i}"))
                .collect();
            save_vocab(&vocab, &out_dir.join("vocab.txt"))?;
            vec!["topics.json".into(), "corpus.jsonl".into(), "vocab.txt".into()]
        }
    };

    let names: Vec<&str> = files.iter().map(|s| s.as_str()).collect();
    let digest = digest_files(out_dir, &names)?;
    let metadata = DatasetMetadata {
        spec,
        files,
        digest: digest.clone(),
    };
    fs::write(
        out_dir.join("metadata.json"),
        serde_json::to_string_pretty(&metadata)?,
    )?;
    Ok(digest)
}

fn load_hmm_dataset(dir: &Path) -> anyhow::Result<(HmmParams, ObservationSequence)> {
    let params = load_hmm_params(&dir.join("params.json"))
        .with_context(|| format!("loading {}/params.json", dir.display()))?;
    let text_path = dir.join("observations.txt");
    let bin_path = dir.join("observations.bin");
    let symbols = if text_path.exists() {
        load_observations_text(&text_path)?
    } else if bin_path.exists() {
        load_observations_binary(&bin_path)?
    } else {
        bail!(
            "dataset {} has neither observations.txt nor observations.bin",
            dir.display()
        );
    };
    let obs = ObservationSequence::new(symbols, params.n_symbols())?;
    Ok((params, obs))
}

fn load_lda_dataset(dir: &Path) -> anyhow::Result<(Option<TopicMatrix>, Corpus)> {
    let (corpus, _vocab) =
        load_corpus_with_vocab(&dir.join("corpus.jsonl"), &dir.join("vocab.txt"))
            .with_context(|| format!("loading corpus from {}", dir.display()))?;
    let topics_path = dir.join("topics.json");
    let ground = if topics_path.exists() {
        Some(load_topic_matrix(&topics_path)?.0)
    } else {
        None
    };
    Ok((ground, corpus))
}

fn rep_file(prefix: &str, rep: usize, ext: &str) -> String {
    format!("{prefix}_{rep:03}.{ext}")
}

/// Rows sorted ascending by value (ties by repetition), printed with the
/// fixed 9-digit format.
fn write_summary(
    path: &Path,
    value_name: &str,
    mut rows: Vec<(usize, f64)>,
) -> anyhow::Result<()> {
    rows.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap().then(a.0.cmp(&b.0)));
    let mut out = format!("repetition,{value_name}\n");
    for (rep, value) in rows {
        out.push_str(&format!("{rep},{}\n", fmt_sig9(value)));
    }
    fs::write(path, out)?;
    Ok(())
}

/// Execute a run config: all repetitions, traces, models and the summary.
pub fn cmd_run(
    config_path: &Path,
    out_dir: &Path,
    threads: Option<usize>,
    seed_override: Option<u64>,
) -> anyhow::Result<()> {
    let bytes = fs::read(config_path)
        .with_context(|| format!("reading config file {}", config_path.display()))?;
    let mut config = ExperimentConfig::from_slice(&bytes)?;
    if let Some(seed) = seed_override {
        config.seed = seed;
    }
    if let Some(n) = threads {
        // A pool may already exist when called twice in one process.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    fs::create_dir_all(out_dir)?;
    fs::create_dir_all(out_dir.join("traces"))?;
    fs::create_dir_all(out_dir.join("models"))?;

    match config.model {
        ModelKind::Hmm => run_hmm_experiment(&mut config, out_dir)?,
        ModelKind::Lda => run_lda_experiment(&mut config, out_dir)?,
    }
    fs::write(
        out_dir.join("config.json"),
        serde_json::to_string_pretty(&config)?,
    )?;
    Ok(())
}

fn run_hmm_experiment(config: &mut ExperimentConfig, out_dir: &Path) -> anyhow::Result<()> {
    let (ground, obs) = load_hmm_dataset(&config.dataset)?;
    let n_states = config.n_states.unwrap_or_else(|| ground.n_states());
    config.n_states = Some(n_states);
    let priors = config.hmm_priors();

    let runs: Vec<HmmRun> = (0..config.repetitions)
        .into_par_iter()
        .map(|rep| {
            run_hmm_sampler(
                &HmmRunConfig {
                    variant: config.variant,
                    n_states,
                    m: config.m,
                    iterations: config.iterations,
                    cadence: config.cadence,
                    seed: config.seed,
                    run_index: rep as u32,
                    priors,
                    parallel_paths: config.parallel_paths,
                },
                &obs,
            )
            .map_err(|e| anyhow!("repetition {rep}: {e}"))
        })
        .collect::<anyhow::Result<_>>()?;

    let mut finals = Vec::with_capacity(runs.len());
    for (rep, run) in runs.iter().enumerate() {
        write_trace_csv(
            &run.trace,
            "log_likelihood",
            &out_dir.join("traces").join(rep_file("rep", rep, "csv")),
        )?;
        save_hmm_params(
            &run.params,
            &out_dir.join("models").join(rep_file("rep", rep, "json")),
        )?;
        finals.push((rep, run.trace.last().expect("non-empty trace").value));
    }
    write_summary(&out_dir.join("summary.csv"), "final_log_likelihood", finals)?;
    Ok(())
}

fn run_lda_experiment(config: &mut ExperimentConfig, out_dir: &Path) -> anyhow::Result<()> {
    let (ground, corpus) = load_lda_dataset(&config.dataset)?;
    let n_topics = match (config.topics, &ground) {
        (Some(t), _) => t,
        (None, Some(g)) => g.n_topics(),
        (None, None) => bail!("field topics is required when the dataset has no topics.json"),
    };
    config.topics = Some(n_topics);
    let priors = config.lda_priors(n_topics);
    fs::create_dir_all(out_dir.join("thetas"))?;
    if config.dump_assignments {
        fs::create_dir_all(out_dir.join("assignments"))?;
    }

    let runs: Vec<LdaRun> = (0..config.repetitions)
        .into_par_iter()
        .map(|rep| {
            run_lda_sampler(
                &LdaRunConfig {
                    variant: config.variant,
                    n_topics,
                    m: config.m,
                    iterations: config.iterations,
                    cadence: config.cadence,
                    seed: config.seed,
                    run_index: rep as u32,
                    priors,
                    parallel_paths: config.parallel_paths,
                },
                &corpus,
            )
            .map_err(|e| anyhow!("repetition {rep}: {e}"))
        })
        .collect::<anyhow::Result<_>>()?;

    let mut summary = Vec::with_capacity(runs.len());
    for (rep, run) in runs.iter().enumerate() {
        write_trace_csv(
            &run.trace,
            "log_joint",
            &out_dir.join("traces").join(rep_file("rep", rep, "csv")),
        )?;
        save_topic_matrix(
            &run.topics,
            priors.eta,
            &out_dir.join("models").join(rep_file("rep", rep, "json")),
        )?;
        write_theta_csv(
            &run.thetas,
            &out_dir.join("thetas").join(rep_file("rep", rep, "csv")),
        )?;
        if config.dump_assignments {
            let mut out = String::from("token_index,path,topic\n");
            for (j, path) in run.pathset.assignments().iter().enumerate() {
                for (i, &topic) in path.iter().enumerate() {
                    out.push_str(&format!("{i},{j},{topic}\n"));
                }
            }
            fs::write(
                out_dir.join("assignments").join(rep_file("rep", rep, "csv")),
                out,
            )?;
        }
        let value = match &ground {
            Some(g) => disc(g, &run.topics)?,
            None => run.trace.last().expect("non-empty trace").value,
        };
        summary.push((rep, value));
    }
    let value_name = if ground.is_some() { "disc" } else { "final_log_joint" };
    write_summary(&out_dir.join("summary.csv"), value_name, summary)?;
    Ok(())
}

fn load_run_config(run_dir: &Path) -> anyhow::Result<ExperimentConfig> {
    let bytes = fs::read(run_dir.join("config.json"))
        .with_context(|| format!("reading {}/config.json", run_dir.display()))?;
    ExperimentConfig::from_slice(&bytes)
}

fn year_table_for(
    run_dir: &Path,
    config: &ExperimentConfig,
    repetition: usize,
) -> anyhow::Result<YearTopicTable> {
    if config.model != ModelKind::Lda {
        bail!("field metrics: year-based metrics need an lda run");
    }
    let (_, corpus) = load_lda_dataset(&config.dataset)?;
    let years = corpus
        .years()
        .ok_or_else(|| anyhow!("field metrics: corpus has no year stamps"))?;
    let n_topics = config
        .topics
        .ok_or_else(|| anyhow!("run config.json lacks the resolved topics field"))?;
    let theta_path = run_dir.join("thetas").join(rep_file("rep", repetition, "csv"));
    let bytes = fs::read(&theta_path)
        .with_context(|| format!("reading {}", theta_path.display()))?;
    let thetas = parse_theta_csv(&bytes, corpus.n_docs(), n_topics)?;
    Ok(yearly_topic_table(&thetas, years)?)
}

fn metric_json(path: &Path, name: &str, value: f64) -> anyhow::Result<()> {
    #[derive(Serialize)]
    struct Metric<'a> {
        name: &'a str,
        value: f64,
    }
    fs::write(path, serde_json::to_string_pretty(&Metric { name, value })?)?;
    Ok(())
}

fn eval_disc_for_run(run_dir: &Path) -> anyhow::Result<(usize, Vec<f64>)> {
    let config = load_run_config(run_dir)?;
    let (ground, _) = load_lda_dataset(&config.dataset)?;
    let ground = ground.ok_or_else(|| {
        anyhow!(
            "dataset {} has no ground-truth topics.json",
            config.dataset.display()
        )
    })?;
    let mut values = Vec::with_capacity(config.repetitions);
    for rep in 0..config.repetitions {
        let path = run_dir.join("models").join(rep_file("rep", rep, "json"));
        let (topics, _) = load_topic_matrix(&path)
            .with_context(|| format!("loading {}", path.display()))?;
        values.push(disc(&ground, &topics)?);
    }
    Ok((config.m, values))
}

/// Compute the requested metrics over a finished run directory.
pub fn cmd_eval(run_dir: &Path, spec_path: &Path, out_dir: &Path) -> anyhow::Result<()> {
    let bytes = fs::read(spec_path)
        .with_context(|| format!("reading eval spec {}", spec_path.display()))?;
    let spec = EvalSpec::from_slice(&bytes)?;
    let config = load_run_config(run_dir)?;
    fs::create_dir_all(out_dir)?;

    for metric in &spec.metrics {
        match metric {
            MetricKind::Disc => {
                let (_, values) = eval_disc_for_run(run_dir)?;
                let mut out = String::from("repetition,disc\n");
                for (rep, v) in values.iter().enumerate() {
                    out.push_str(&format!("{rep},{}\n", fmt_sig9(*v)));
                }
                fs::write(out_dir.join("disc.csv"), out)?;
                let mean = values.iter().sum::<f64>() / values.len() as f64;
                metric_json(&out_dir.join("disc_mean.json"), "mean_disc", mean)?;
            }
            MetricKind::BaumWelch => {
                if config.model != ModelKind::Hmm {
                    bail!("field metrics: baum_welch needs an hmm run");
                }
                let (ground, obs) = load_hmm_dataset(&config.dataset)?;
                let s = config.n_states.unwrap_or_else(|| ground.n_states());
                let w = ground.n_symbols();
                let mut rng = RngStream::new(
                    spec.baum_welch.seed,
                    StreamId::new(0, 0, Phase::Generate),
                );
                let init = random_hmm_init(s, w, &mut rng)?;
                let (params, trace) =
                    baum_welch(&obs, s, w, &init, spec.baum_welch.max_iters, spec.baum_welch.tol)?;
                let ll = forward_log_likelihood(&params, &obs)?;
                metric_json(
                    &out_dir.join("baum_welch.json"),
                    "baum_welch_log_likelihood",
                    ll,
                )?;
                let points: Vec<mpgibbs::TracePoint> = trace
                    .iter()
                    .enumerate()
                    .map(|(i, &value)| mpgibbs::TracePoint { iteration: i, value })
                    .collect();
                write_trace_csv(&points, "log_likelihood", &out_dir.join("baum_welch_trace.csv"))?;
            }
            MetricKind::YearlyEntropy => {
                let table = year_table_for(run_dir, &config, spec.repetition)?;
                let mut out = String::from("year,entropy\n");
                for (year, h) in yearly_entropy_curve(&table) {
                    out.push_str(&format!("{year},{}\n", fmt_sig9(h)));
                }
                fs::write(out_dir.join("yearly_entropy.csv"), out)?;
            }
            MetricKind::BucketHistogram => {
                let table = year_table_for(run_dir, &config, spec.repetition)?;
                let buckets = table_buckets(&table, spec.gamma)?;
                let mut out = String::from("topic,bucket_index,length\n");
                for set in &buckets {
                    for (k, len) in set.bucket_lengths.iter().enumerate() {
                        out.push_str(&format!("{},{k},{len}\n", set.topic));
                    }
                }
                fs::write(out_dir.join("bucket_lengths.csv"), out)?;
                for (weighting, name) in [
                    (Weighting::None, "bucket_histogram_unweighted.csv"),
                    (Weighting::ByTopicWeight, "bucket_histogram_weighted.csv"),
                ] {
                    let hist = bucket_histogram(&[&table], spec.gamma, weighting)?;
                    let mut out = String::from("bin,count\n");
                    for (bin, count) in hist {
                        out.push_str(&format!("{bin},{}\n", fmt_sig9(count)));
                    }
                    fs::write(out_dir.join(name), out)?;
                }
            }
            MetricKind::TopicWeightSeries => {
                let table = year_table_for(run_dir, &config, spec.repetition)?;
                let mut out = String::from("topic,year,weight\n");
                for &topic in &spec.topics {
                    for (year, w) in topic_weight_series(&table, topic)? {
                        out.push_str(&format!("{topic},{year},{}\n", fmt_sig9(w)));
                    }
                }
                fs::write(out_dir.join("topic_weight_series.csv"), out)?;
            }
            MetricKind::DiscGrid => {
                if spec.runs.is_empty() {
                    bail!("field runs: disc_grid needs at least one run directory");
                }
                let mut rows: Vec<(usize, usize, f64)> = Vec::new();
                for run in &spec.runs {
                    let run_config = load_run_config(run)?;
                    let (_, corpus) = load_lda_dataset(&run_config.dataset)?;
                    let (m, values) = eval_disc_for_run(run)?;
                    let mean = values.iter().sum::<f64>() / values.len() as f64;
                    rows.push((m, corpus.n_docs(), mean));
                }
                rows.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
                let mut out = String::from("m,docs,mean_disc\n");
                for (m, docs, mean) in rows {
                    out.push_str(&format!("{m},{docs},{}\n", fmt_sig9(mean)));
                }
                fs::write(out_dir.join("disc_grid.csv"), out)?;
            }
        }
    }
    Ok(())
}

fn random_hmm_init(s: usize, w: usize, rng: &mut RngStream) -> anyhow::Result<HmmParams> {
    let conc_s = vec![1.0; s];
    let conc_w = vec![1.0; w];
    Ok(HmmParams::new(
        sample_dirichlet(&conc_s, rng)?,
        (0..s)
            .map(|_| sample_dirichlet(&conc_s, rng))
            .collect::<Result<_, _>>()?,
        (0..s)
            .map(|_| sample_dirichlet(&conc_w, rng))
            .collect::<Result<_, _>>()?,
    )?)
}

/// Path of the summary file inside a run directory.
pub fn summary_path(run_dir: &Path) -> PathBuf {
    run_dir.join("summary.csv")
}
