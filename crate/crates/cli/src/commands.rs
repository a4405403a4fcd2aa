//! Subcommand implementations: each builds its outputs under an
//! [`OutputGuard`] so a failure leaves no partial files, then records the
//! resolved configuration and a log line.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use moviecast_core::error::{Error, Result};
use moviecast_core::eval::{
    ablation_table, cross_validate, cv_table, evaluate_params, run_ablation, stratified_split,
    write_ablation_csv, write_cv_csv, AblationSpec, EvalReport, VALIDATION_FRACTION,
};
use moviecast_core::features::{FeatureGroup, FeatureSchema};
use moviecast_core::ingest::{
    generate_synthetic, load_movies, load_reviews, write_movies, write_rejects, write_reviews,
    SynthConfig,
};
use moviecast_core::mtl::{
    load_checkpoint, predict as net_predict, save_checkpoint, train as net_train, NetworkConfig,
    DECISION_THRESHOLD,
};
use moviecast_core::pipeline::{
    analyze_movies, extract_sentiments, featurize as run_featurize, read_features_csv,
    read_raw_features_csv, read_sentiment_jsonl, write_features_csv, write_raw_features_csv,
    write_sentiment_jsonl, FeaturizedData, PipelineConfig,
};
use moviecast_core::sentiment::{Extractor, RemoteConfig, RemoteExtractor, StubExtractor};
use moviecast_core::sir::{simulate, SirParams, SirState};

use crate::{
    AblateArgs, EvaluateArgs, FeaturizeArgs, NetOverrides, PredictArgs, SentimentExtractArgs,
    SirFitArgs, SirSimulateArgs, SynthArgs, TrainArgs,
};

/// Tracks files written by a command; anything registered but not
/// committed is deleted on drop.
struct OutputGuard {
    out_dir: PathBuf,
    written: Vec<PathBuf>,
    committed: bool,
}

impl OutputGuard {
    fn new(out_dir: &Path) -> Result<Self> {
        std::fs::create_dir_all(out_dir)?;
        Ok(OutputGuard {
            out_dir: out_dir.to_path_buf(),
            written: Vec::new(),
            committed: false,
        })
    }

    fn path(&mut self, name: &str) -> PathBuf {
        let p = self.out_dir.join(name);
        self.written.push(p.clone());
        p
    }

    /// Writes the resolved run configuration and a timestamped log line,
    /// then commits (timestamps live only in the log).
    fn finish<A: serde::Serialize>(mut self, command: &str, args: &A) -> Result<()> {
        let config_path = self.path(&format!("{command}_config.json"));
        let resolved = serde_json::json!({ "command": command, "args": args });
        std::fs::write(&config_path, serde_json::to_string_pretty(&resolved)?)?;

        let ts = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        let log_line = format!("unix_ts={ts} command={command} status=ok\n");
        let log_path = self.out_dir.join("run.log");
        use std::io::Write;
        std::fs::OpenOptions::new()
            .create(true)
            .append(true)
            .open(log_path)?
            .write_all(log_line.as_bytes())?;

        self.committed = true;
        Ok(())
    }
}

impl Drop for OutputGuard {
    fn drop(&mut self) {
        if !self.committed {
            for p in &self.written {
                let _ = std::fs::remove_file(p);
            }
        }
    }
}

pub fn synth(args: SynthArgs) -> Result<()> {
    let config = match &args.params {
        Some(path) => serde_json::from_str(&std::fs::read_to_string(path)?)?,
        None => SynthConfig::default(),
    };
    let (movies, reviews) = generate_synthetic(
        args.n,
        (args.reviews_min, args.reviews_max),
        args.seed,
        args.signal,
        &config,
    )?;
    let mut guard = OutputGuard::new(&args.out_dir)?;
    write_movies(&guard.path("movies.csv"), &movies)?;
    write_reviews(&guard.path("reviews.csv"), &reviews)?;
    std::fs::write(
        guard.path("synth_params.json"),
        serde_json::to_string_pretty(&config)?,
    )?;
    println!(
        "wrote {} movies and {} reviews",
        movies.len(),
        reviews.len()
    );
    guard.finish("synth", &args)
}

pub fn sir_simulate(args: SirSimulateArgs) -> Result<()> {
    let params = SirParams::new(args.beta, args.gamma)?;
    let initial = SirState::new(args.s0, args.i0, args.r0, 0.0)?;
    let trajectory = simulate(&initial, &params, args.dt, args.horizon)?;
    let mut guard = OutputGuard::new(&args.out_dir)?;
    let mut writer = csv::Writer::from_path(guard.path("trajectory.csv"))?;
    writer.write_record(["t", "s", "i", "r"])?;
    for state in &trajectory.states {
        writer.write_record([
            state.t.to_string(),
            state.s.to_string(),
            state.i.to_string(),
            state.r.to_string(),
        ])?;
    }
    writer.flush()?;
    println!("wrote trajectory with {} states", trajectory.states.len());
    guard.finish("sir_simulate", &args)
}

fn load_corpus(
    movies_path: &Path,
    reviews_path: &Path,
    salt: &str,
    guard: &mut OutputGuard,
) -> Result<(
    Vec<moviecast_core::ingest::MovieRecord>,
    Vec<moviecast_core::ingest::ReviewRecord>,
)> {
    let movies = load_movies(movies_path)?;
    let releases = movies
        .records
        .iter()
        .filter_map(|m| m.release_date().map(|d| (m.title.clone(), d)))
        .collect();
    let reviews = load_reviews(reviews_path, salt, &releases)?;
    let rejects: Vec<_> = movies
        .rejects
        .iter()
        .chain(reviews.rejects.iter())
        .cloned()
        .collect();
    if !rejects.is_empty() {
        write_rejects(&guard.path("rejects.csv"), &rejects)?;
        eprintln!("{} rows rejected (see rejects.csv)", rejects.len());
    }
    Ok((movies.records, reviews.records))
}

pub fn sir_fit(args: SirFitArgs) -> Result<()> {
    let mut guard = OutputGuard::new(&args.out_dir)?;
    let (movies, reviews) = load_corpus(&args.movies, &args.reviews, &args.salt, &mut guard)?;
    let sentiments = match &args.sentiment {
        Some(path) => read_sentiment_jsonl(path)?,
        None => extract_sentiments(&movies, &reviews, &StubExtractor)?.records,
    };
    let analysis = analyze_movies(&movies, &reviews, &sentiments, &PipelineConfig::default())?;
    for w in &analysis.warnings {
        eprintln!("warning: {w}");
    }
    let mut writer = csv::Writer::from_path(guard.path("sir_params.csv"))?;
    writer.write_record(["title", "s0", "i0", "r0", "beta", "gamma", "gamma_floored"])?;
    for d in &analysis.dynamics {
        writer.write_record([
            d.title.clone(),
            d.initial.s.to_string(),
            d.initial.i.to_string(),
            d.initial.r.to_string(),
            d.rates.params.beta.to_string(),
            d.rates.params.gamma.to_string(),
            d.rates.gamma_floored.to_string(),
        ])?;
    }
    writer.flush()?;
    println!("fitted dynamics for {} movies", analysis.dynamics.len());
    guard.finish("sir_fit", &args)
}

pub fn sentiment_extract(args: SentimentExtractArgs) -> Result<()> {
    let mut guard = OutputGuard::new(&args.out_dir)?;
    let (movies, reviews) = load_corpus(&args.movies, &args.reviews, &args.salt, &mut guard)?;
    let extractor: Box<dyn Extractor> = match args.extractor.as_str() {
        "stub" => Box::new(StubExtractor),
        "remote" => {
            let config = match &args.remote_config {
                Some(path) => serde_json::from_str(&std::fs::read_to_string(path)?)?,
                None => RemoteConfig::default(),
            };
            Box::new(RemoteExtractor::new(config)?)
        }
        other => {
            return Err(Error::ContractViolation(format!(
                "unknown extractor {other:?} (expected stub or remote)"
            )))
        }
    };
    let outcome = extract_sentiments(&movies, &reviews, extractor.as_ref())?;
    write_sentiment_jsonl(&guard.path("sentiment.jsonl"), &outcome.records)?;
    if !outcome.skipped.is_empty() {
        write_rejects(&guard.path("sentiment_skipped.csv"), &outcome.skipped)?;
    }
    println!(
        "extracted sentiment for {} reviews ({} skipped)",
        outcome.records.len(),
        outcome.skipped.len()
    );
    guard.finish("sentiment_extract", &args)
}

fn parse_mask(raw: &Option<String>) -> Result<BTreeSet<FeatureGroup>> {
    let mut mask = BTreeSet::new();
    if let Some(raw) = raw {
        for part in raw.split(',').filter(|p| !p.trim().is_empty()) {
            let group = FeatureGroup::parse(part.trim())?;
            if group == FeatureGroup::Base {
                return Err(Error::ContractViolation(
                    "the Base group is not maskable".into(),
                ));
            }
            mask.insert(group);
        }
    }
    Ok(mask)
}

pub fn featurize(args: FeaturizeArgs) -> Result<()> {
    let mut guard = OutputGuard::new(&args.out_dir)?;
    let (movies, reviews) = load_corpus(&args.movies, &args.reviews, &args.salt, &mut guard)?;
    let sentiments = read_sentiment_jsonl(&args.sentiment)?;
    let analysis = analyze_movies(&movies, &reviews, &sentiments, &PipelineConfig::default())?;
    for w in &analysis.warnings {
        eprintln!("warning: {w}");
    }

    // Rows that cannot be labeled are reported, not silently dropped.
    let (eligible, unlabeled): (Vec<_>, Vec<_>) = analysis
        .rows
        .into_iter()
        .partition(|r| r.opening_weekend.is_some());
    if !unlabeled.is_empty() {
        let rejects: Vec<moviecast_core::ingest::RejectedRow> = unlabeled
            .iter()
            .enumerate()
            .map(|(i, r)| moviecast_core::ingest::RejectedRow {
                row: i + 1,
                reason: format!("{}: no opening weekend, cannot label", r.title),
            })
            .collect();
        write_rejects(&guard.path("featurize_skipped.csv"), &rejects)?;
        eprintln!("{} movies skipped (no opening weekend)", rejects.len());
    }

    let mut data = run_featurize(&eligible, args.seed)?;
    let mask = parse_mask(&args.mask)?;
    if !mask.is_empty() {
        let schema = FeatureSchema::masked(&mask)?;
        let columns = schema.column_indices_in_full()?;
        data = FeaturizedData {
            schema,
            dataset: moviecast_core::mtl::Dataset {
                xs: data
                    .dataset
                    .xs
                    .into_iter()
                    .map(|row| columns.iter().map(|&c| row[c]).collect())
                    .collect(),
                labels: data.dataset.labels,
                targets: data.dataset.targets,
            },
            ..data
        };
    }

    write_features_csv(&guard.path("features.csv"), &data)?;
    std::fs::write(guard.path("schema.json"), data.schema.to_json()?)?;
    write_raw_features_csv(&guard.path("features_raw.csv"), &eligible)?;
    std::fs::write(
        guard.path("featurizer.json"),
        serde_json::to_string_pretty(&data.featurizer)?,
    )?;
    println!(
        "featurized {} movies into {} columns ({} train / {} test)",
        data.dataset.len(),
        data.schema.len(),
        data.split.train.len(),
        data.split.test.len()
    );
    guard.finish("featurize", &args)
}

fn network_config(seed: u64, overrides: &NetOverrides) -> Result<NetworkConfig> {
    let mut config = match &overrides.net_config {
        Some(path) => serde_json::from_str(&std::fs::read_to_string(path)?)?,
        None => NetworkConfig::with_seed(seed),
    };
    config.seed = seed;
    if let Some(v) = overrides.max_epochs {
        config.max_epochs = v;
        config.patience = config.patience.min(v);
    }
    if let Some(v) = overrides.patience {
        config.patience = v;
    }
    if let Some(v) = overrides.batch_size {
        config.batch_size = v;
    }
    if let Some(v) = overrides.learning_rate {
        config.learning_rate = v;
    }
    config.validate()?;
    Ok(config)
}

pub fn train(args: TrainArgs) -> Result<()> {
    let schema = FeatureSchema::from_json(&std::fs::read_to_string(&args.schema)?)?;
    let matrix = read_features_csv(&args.features, &schema)?;
    let config = network_config(args.seed, &args.net)?;

    let train_set = matrix.dataset.subset(&matrix.train);
    let val_plan = stratified_split(&train_set.labels, 1.0 - VALIDATION_FRACTION, config.seed)?;
    let core_set = train_set.subset(&val_plan.train);
    let val_set = train_set.subset(&val_plan.test);
    let (params, report) = net_train(&core_set, &val_set, &config)?;

    let mut guard = OutputGuard::new(&args.out_dir)?;
    save_checkpoint(&params, &config, &guard.path("model.ckpt"))?;
    report.write_csv(&guard.path("train_report.csv"))?;
    println!(
        "trained {} epochs (best {}, {:?}); checkpoint written",
        report.epochs.len(),
        report.best_epoch,
        report.stop_reason
    );
    guard.finish("train", &args)
}

pub fn evaluate(args: EvaluateArgs) -> Result<()> {
    let schema = FeatureSchema::from_json(&std::fs::read_to_string(&args.schema)?)?;
    let (params, config) = load_checkpoint(&args.checkpoint)?;
    let mut guard = OutputGuard::new(&args.out_dir)?;
    match args.split.as_str() {
        "test" => {
            let matrix = read_features_csv(&args.features, &schema)?;
            params.validate_input_width(schema.len())?;
            let test_set = matrix.dataset.subset(&matrix.test);
            let report = evaluate_params(&params, &config, &test_set)?;
            write_eval_csv(&guard.path("eval_report.csv"), &report)?;
            let table = report.text_table("Held-out test split");
            std::fs::write(guard.path("eval_report.txt"), &table)?;
            print!("{table}");
        }
        "cv10" => {
            let raw_path = args.raw_features.as_ref().ok_or_else(|| {
                Error::ContractViolation("--raw-features is required for cv10".into())
            })?;
            let rows = read_raw_features_csv(raw_path)?;
            let summary = cross_validate(&rows, 10, args.seed, &config)?;
            write_cv_csv(&guard.path("cv_report.csv"), &summary)?;
            let table = cv_table(&summary);
            std::fs::write(guard.path("cv_report.txt"), &table)?;
            print!("{table}");
        }
        other => {
            return Err(Error::ContractViolation(format!(
                "unknown split {other:?} (expected test or cv10)"
            )))
        }
    }
    guard.finish("evaluate", &args)
}

fn write_eval_csv(path: &Path, report: &EvalReport) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)?;
    writer.write_record(EvalReport::CSV_HEADER)?;
    writer.write_record(report.csv_row())?;
    writer.flush()?;
    Ok(())
}

pub fn ablate(args: AblateArgs) -> Result<()> {
    let schema = FeatureSchema::from_json(&std::fs::read_to_string(&args.schema)?)?;
    if schema != FeatureSchema::full() {
        return Err(Error::ContractViolation(
            "ablation requires the full feature schema".into(),
        ));
    }
    let matrix = read_features_csv(&args.features, &schema)?;
    let config = network_config(args.seed, &args.net)?;
    let rows = run_ablation(
        &matrix.dataset,
        &AblationSpec::standard_conditions(),
        &config,
        args.seed,
    )?;
    let mut guard = OutputGuard::new(&args.out_dir)?;
    write_ablation_csv(&guard.path("ablation.csv"), &rows)?;
    let table = ablation_table(&rows);
    std::fs::write(guard.path("ablation_table.txt"), &table)?;
    print!("{table}");
    guard.finish("ablate", &args)
}

pub fn predict(args: PredictArgs) -> Result<()> {
    let schema = FeatureSchema::from_json(&std::fs::read_to_string(&args.schema)?)?;
    let (params, config) = load_checkpoint(&args.checkpoint)?;
    params.validate_input_width(schema.len())?;
    let matrix = read_features_csv(&args.features, &schema)?;
    let mut guard = OutputGuard::new(&args.out_dir)?;
    let mut writer = csv::Writer::from_path(guard.path("predictions.csv"))?;
    writer.write_record(["title", "success_probability", "decision", "revenue_scaled"])?;
    for (title, x) in matrix.titles.iter().zip(&matrix.dataset.xs) {
        let (p, y) = net_predict(x, &params, &config)?;
        writer.write_record([
            title.clone(),
            p.to_string(),
            u8::from(p >= DECISION_THRESHOLD).to_string(),
            y.to_string(),
        ])?;
    }
    writer.flush()?;
    println!("wrote predictions for {} movies", matrix.titles.len());
    guard.finish("predict", &args)
}
