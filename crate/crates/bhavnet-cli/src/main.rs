//! `bhavnet`: train, evaluate, and inspect the dual-space antonym/synonym
//! classifier from the command line.
//!
//! Exit codes: 0 success, 1 check failure (gradcheck above threshold),
//! 2 configuration or data-format problem, 3 unknown vocabulary, 4 corrupt
//! checkpoint.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use bhavnet_core::error::Error;
use bhavnet_core::graph::graph_stats;
use bhavnet_core::model::BoundParams;
use bhavnet_core::tape::GradTape;
use bhavnet_core::{
    bind_params, effective_toml, evaluate, forward_batch, grad_check, load_checkpoint, load_pairs,
    predict, stratified_split, train, EmbeddingTable, EvalReport, FinalReport, LanguageData, Mode,
    ModelParams, PartialRunConfig, Rng, RunWriter, Stream,
};
use bhavnet_core::loss::total_loss_nodes;
use bhavnet_core::synthetic::separable_dataset;

/// Environment variable prefixed to relative `--out` paths.
const RUN_ROOT_ENV: &str = "BHAVNET_RUN_ROOT";

#[derive(Parser)]
#[command(
    name = "bhavnet",
    version,
    about = "Dual-space antonym/synonym pair classifier"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Hyperparameter overrides; any flag given here wins over the config file.
#[derive(Args, Debug, Default)]
struct HyperFlags {
    /// Config file (TOML, keys matching the hyperparameter names)
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Input embedding width d
    #[arg(long)]
    d: Option<usize>,
    /// Projection width d_prime
    #[arg(long)]
    d_prime: Option<usize>,
    /// Fused node-feature width
    #[arg(long)]
    fused_dim: Option<usize>,
    /// Classifier hidden width
    #[arg(long)]
    hidden_dim: Option<usize>,
    /// Attention heads H
    #[arg(long = "heads", alias = "H")]
    heads: Option<usize>,
    /// Transformer layer count L_layers
    #[arg(long = "layers", alias = "L_layers")]
    layers: Option<usize>,
    /// Graph similarity threshold tau
    #[arg(long)]
    tau: Option<f64>,
    /// Contrastive weight lambda_w
    #[arg(long = "lambda", alias = "lambda_w")]
    lambda_w: Option<f64>,
    /// Synonym margin m_syn
    #[arg(long)]
    m_syn: Option<f64>,
    /// Antonym margin m_ant
    #[arg(long)]
    m_ant: Option<f64>,
    /// Dropout rate
    #[arg(long = "dropout", alias = "dropout_rate")]
    dropout_rate: Option<f64>,
    /// Learning rate
    #[arg(long)]
    lr: Option<f64>,
    /// Run seed
    #[arg(long)]
    seed: Option<u64>,
    /// Transitivity edge weight
    #[arg(long)]
    trans_weight: Option<f64>,
    /// Ablation: single projection space (no antonym head)
    #[arg(long)]
    single_space: bool,
    /// Ablation: skip the graph transformer stack
    #[arg(long)]
    no_graph: bool,
}

impl HyperFlags {
    /// Config file overlaid with the explicit flags.
    fn to_partial(&self) -> Result<PartialRunConfig, Error> {
        let base = match &self.config {
            Some(path) => PartialRunConfig::from_file(path)?,
            None => PartialRunConfig::default(),
        };
        let overrides = PartialRunConfig {
            d: self.d,
            d_prime: self.d_prime,
            fused_dim: self.fused_dim,
            hidden_dim: self.hidden_dim,
            heads: self.heads,
            layers: self.layers,
            tau: self.tau,
            lambda_w: self.lambda_w,
            m_syn: self.m_syn,
            m_ant: self.m_ant,
            dropout_rate: self.dropout_rate,
            lr: self.lr,
            seed: self.seed,
            trans_weight: self.trans_weight,
            single_space: if self.single_space { Some(true) } else { None },
            no_graph: if self.no_graph { Some(true) } else { None },
            ..Default::default()
        };
        Ok(base.overlay(&overrides))
    }
}

#[derive(Args, Debug)]
struct DataFlags {
    /// Embedding text file (single-language runs)
    #[arg(long, value_name = "FILE")]
    embeddings: Option<PathBuf>,
    /// Pairs TSV file (single-language runs)
    #[arg(long, value_name = "FILE")]
    pairs: Option<PathBuf>,
    /// Language tag for --embeddings/--pairs
    #[arg(long, default_value = "en")]
    language: String,
    /// Multilingual spec LANG=EMBEDDINGS,PAIRS; repeatable
    #[arg(long = "data", value_name = "LANG=EMB,PAIRS")]
    data: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Run the training procedure and write a run directory
    Train {
        #[command(flatten)]
        hyper: HyperFlags,
        #[command(flatten)]
        data: DataFlags,
        /// Run output directory (prefixed by $BHAVNET_RUN_ROOT when relative)
        #[arg(long, value_name = "DIR")]
        out: PathBuf,
        /// Epoch count T
        #[arg(long)]
        epochs: Option<usize>,
        /// Batch size B
        #[arg(long)]
        batch_size: Option<usize>,
        /// Early-stopping patience in epochs (0 disables)
        #[arg(long)]
        patience: Option<usize>,
        /// Train/dev/test fractions
        #[arg(long, default_value = "0.8,0.1,0.1", value_name = "T,D,E")]
        split: String,
    },
    /// Evaluate a checkpoint on a pairs file
    Eval {
        /// Checkpoint produced by `train`
        #[arg(long, value_name = "FILE")]
        checkpoint: PathBuf,
        /// Embedding text file
        #[arg(long, value_name = "FILE")]
        embeddings: PathBuf,
        /// Pairs TSV file
        #[arg(long, value_name = "FILE")]
        pairs: PathBuf,
        /// Language tag
        #[arg(long, default_value = "en")]
        language: String,
    },
    /// Classify one word pair
    Predict {
        #[arg(long, value_name = "FILE")]
        checkpoint: PathBuf,
        #[arg(long, value_name = "FILE")]
        embeddings: PathBuf,
        #[arg(long, default_value = "en")]
        language: String,
        /// First word
        #[arg(long)]
        w1: String,
        /// Second word
        #[arg(long)]
        w2: String,
    },
    /// Print the pair graph a batch induces (edges then a stats footer)
    GraphDump {
        #[command(flatten)]
        hyper: HyperFlags,
        #[arg(long, value_name = "FILE")]
        embeddings: PathBuf,
        #[arg(long, value_name = "FILE")]
        pairs: PathBuf,
        #[arg(long, default_value = "en")]
        language: String,
        /// Use projections from this checkpoint instead of seed-initialized
        /// parameters
        #[arg(long, value_name = "FILE")]
        checkpoint: Option<PathBuf>,
    },
    /// Check analytic gradients of the full loss against finite differences
    Gradcheck {
        #[command(flatten)]
        hyper: HyperFlags,
        /// Central-difference step
        #[arg(long, default_value_t = 1e-5)]
        eps: f64,
        /// Failure threshold on the max relative error
        #[arg(long, default_value_t = 1e-4)]
        threshold: f64,
        /// Synthetic pairs in the probe batch
        #[arg(long, default_value_t = 4)]
        batch: usize,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Train {
            hyper,
            data,
            out,
            epochs,
            batch_size,
            patience,
            split,
        } => cmd_train(hyper, data, out, epochs, batch_size, patience, &split),
        Command::Eval {
            checkpoint,
            embeddings,
            pairs,
            language,
        } => cmd_eval(&checkpoint, &embeddings, &pairs, &language),
        Command::Predict {
            checkpoint,
            embeddings,
            language,
            w1,
            w2,
        } => cmd_predict(&checkpoint, &embeddings, &language, &w1, &w2),
        Command::GraphDump {
            hyper,
            embeddings,
            pairs,
            language,
            checkpoint,
        } => cmd_graph_dump(hyper, &embeddings, &pairs, &language, checkpoint.as_deref()),
        Command::Gradcheck {
            hyper,
            eps,
            threshold,
            batch,
        } => cmd_gradcheck(hyper, eps, threshold, batch),
    };
    match outcome {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code_for(&err))
        }
    }
}

fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::Vocabulary { .. } => 3,
        Error::Checkpoint(_) => 4,
        _ => 2,
    }
}

struct LanguageSpec {
    language: String,
    embeddings: PathBuf,
    pairs: PathBuf,
}

fn language_specs(data: &DataFlags) -> Result<Vec<LanguageSpec>, Error> {
    let mut specs = Vec::new();
    if let Some(emb) = &data.embeddings {
        let pairs = data.pairs.as_ref().ok_or_else(|| {
            Error::InvalidConfig("--pairs is required alongside --embeddings".into())
        })?;
        specs.push(LanguageSpec {
            language: data.language.clone(),
            embeddings: emb.clone(),
            pairs: pairs.clone(),
        });
    } else if data.pairs.is_some() {
        return Err(Error::InvalidConfig(
            "--embeddings is required alongside --pairs".into(),
        ));
    }
    for spec in &data.data {
        let (lang, rest) = spec.split_once('=').ok_or_else(|| {
            Error::InvalidConfig(format!("--data expects LANG=EMB,PAIRS, got {spec:?}"))
        })?;
        let (emb, pairs) = rest.split_once(',').ok_or_else(|| {
            Error::InvalidConfig(format!("--data expects LANG=EMB,PAIRS, got {spec:?}"))
        })?;
        specs.push(LanguageSpec {
            language: lang.to_string(),
            embeddings: PathBuf::from(emb),
            pairs: PathBuf::from(pairs),
        });
    }
    if specs.is_empty() {
        return Err(Error::InvalidConfig(
            "no data given: set --embeddings and --pairs, or --data".into(),
        ));
    }
    Ok(specs)
}

fn parse_split(text: &str) -> Result<(f64, f64, f64), Error> {
    let parts: Vec<&str> = text.split(',').collect();
    if parts.len() != 3 {
        return Err(Error::InvalidConfig(format!(
            "--split expects three comma-separated fractions, got {text:?}"
        )));
    }
    let mut vals = [0.0; 3];
    for (v, p) in vals.iter_mut().zip(&parts) {
        *v = p
            .trim()
            .parse()
            .map_err(|_| Error::InvalidConfig(format!("--split fraction {p:?} is not a number")))?;
    }
    Ok((vals[0], vals[1], vals[2]))
}

fn run_dir(out: &Path) -> PathBuf {
    match std::env::var_os(RUN_ROOT_ENV) {
        Some(root) if out.is_relative() => PathBuf::from(root).join(out),
        _ => out.to_path_buf(),
    }
}

fn cmd_train(
    hyper: HyperFlags,
    data: DataFlags,
    out: PathBuf,
    epochs: Option<usize>,
    batch_size: Option<usize>,
    patience: Option<usize>,
    split: &str,
) -> Result<ExitCode, Error> {
    let mut partial = hyper.to_partial()?;
    if epochs.is_some() {
        partial.epochs = epochs;
    }
    if batch_size.is_some() {
        partial.batch_size = batch_size;
    }
    if patience.is_some() {
        partial.patience = patience;
    }
    let fractions = parse_split(split)?;

    let specs = language_specs(&data)?;
    let mut tables = Vec::new();
    for spec in &specs {
        let (table, stats) =
            EmbeddingTable::load(&spec.embeddings, &spec.language, partial.d)?;
        if stats.duplicates > 0 {
            eprintln!(
                "warning: {} duplicate tokens in {} (kept last)",
                stats.duplicates,
                spec.embeddings.display()
            );
        }
        tables.push(table);
    }
    let dim = tables[0].dim();
    let (hp, opts) = partial.resolve(Some(dim))?;

    let mut split_rng = Rng::seeded(hp.seed, Stream::Split);
    let mut langs = Vec::new();
    let mut tests = Vec::new();
    for (spec, table) in specs.iter().zip(tables) {
        if table.dim() != dim {
            return Err(Error::InvalidConfig(format!(
                "table {} has dim {}, expected {dim}",
                spec.embeddings.display(),
                table.dim()
            )));
        }
        let pairs = load_pairs(&spec.pairs, &spec.language)?;
        let (kept, dropped) = bhavnet_core::filter_resolvable(pairs, &table);
        if dropped > 0 {
            eprintln!(
                "warning: dropped {dropped} pairs with out-of-vocabulary tokens from {}",
                spec.pairs.display()
            );
        }
        let (train_split, dev, test) = stratified_split(&kept, fractions, &mut split_rng)?;
        tests.push((spec.language.clone(), test));
        langs.push(LanguageData {
            language: spec.language.clone(),
            table,
            train: train_split,
            dev,
        });
    }

    let dir = run_dir(&out);
    let writer = RunWriter::create(&dir)?;
    writer.write_config(&effective_toml(&hp, &opts))?;

    let mut cb = |rec: &bhavnet_core::EpochRecord| {
        let dev_txt = rec
            .dev
            .as_ref()
            .map(|d| format!(", dev macro-F1 {:.4}", d.macro_f1))
            .unwrap_or_default();
        eprintln!(
            "epoch {}: loss {:.6} (bce {:.6}, margin {:.6}){dev_txt}",
            rec.epoch, rec.mean_train_loss, rec.mean_train_bce, rec.mean_train_margin
        );
        writer.append_epoch(rec)
    };
    let state = train(&langs, &hp, &opts, Some(&mut cb))?;

    let ckpt = writer.save_best(&state.best_params, &hp)?;
    let report = FinalReport::from_state(&state, Some(&ckpt));
    // held-out test evaluation with the retained best parameters
    let mut test_counts = (0usize, 0usize, 0usize, 0usize);
    let mut any_test = false;
    for (language, test) in &tests {
        if test.is_empty() {
            continue;
        }
        let lang = langs
            .iter()
            .find(|l| &l.language == language)
            .expect("language present");
        let r = evaluate(test, &lang.table, &state.best_params, &hp)?;
        any_test = true;
        test_counts.0 += r.tp;
        test_counts.1 += r.fp;
        test_counts.2 += r.tn;
        test_counts.3 += r.fn_;
    }
    writer.write_report(&report)?;
    if any_test {
        let r = EvalReport::from_confusion(
            test_counts.0,
            test_counts.1,
            test_counts.2,
            test_counts.3,
        )?;
        println!(
            "test: accuracy {:.4}, macro_f1 {:.4} over {} pairs",
            r.accuracy,
            r.macro_f1,
            r.total()
        );
        let path = dir.join("test_report.json");
        let json = serde_json::to_string_pretty(&r)
            .map_err(|e| Error::InvalidInput(format!("test report serialization: {e}")))?;
        std::fs::write(&path, json).map_err(|e| Error::io(&path, e))?;
    }

    println!(
        "trained {} epochs ({} steps); best dev macro-F1 {} at epoch {}; run dir {}",
        state.epochs_run,
        state.loss_trace.len(),
        state
            .best_dev_macro_f1
            .map(|v| format!("{v:.4}"))
            .unwrap_or_else(|| "n/a".into()),
        state.best_epoch,
        dir.display()
    );
    Ok(ExitCode::SUCCESS)
}

fn print_report(r: &EvalReport) {
    println!("pairs: {}", r.total());
    println!("accuracy: {:.6}", r.accuracy);
    println!("macro_f1: {:.6}", r.macro_f1);
    println!(
        "class 0 (synonym): precision {:.6} recall {:.6} f1 {:.6}",
        r.precision[0], r.recall[0], r.f1[0]
    );
    println!(
        "class 1 (antonym): precision {:.6} recall {:.6} f1 {:.6}",
        r.precision[1], r.recall[1], r.f1[1]
    );
    println!(
        "confusion: tp {} fp {} tn {} fn {}",
        r.tp, r.fp, r.tn, r.fn_
    );
    if r.zero_division_warnings > 0 {
        eprintln!(
            "warning: {} zero-denominator metrics reported as 0",
            r.zero_division_warnings
        );
    }
}

fn cmd_eval(
    checkpoint: &Path,
    embeddings: &Path,
    pairs_path: &Path,
    language: &str,
) -> Result<ExitCode, Error> {
    let (params, hp) = load_checkpoint(checkpoint)?;
    let (table, _) = EmbeddingTable::load(embeddings, language, Some(hp.d))?;
    let pairs = load_pairs(pairs_path, language)?;
    let (kept, dropped) = bhavnet_core::filter_resolvable(pairs, &table);
    if dropped > 0 {
        eprintln!("warning: dropped {dropped} pairs with out-of-vocabulary tokens");
    }
    let report = evaluate(&kept, &table, &params, &hp)?;
    print_report(&report);
    Ok(ExitCode::SUCCESS)
}

fn cmd_predict(
    checkpoint: &Path,
    embeddings: &Path,
    language: &str,
    w1: &str,
    w2: &str,
) -> Result<ExitCode, Error> {
    let (params, hp) = load_checkpoint(checkpoint)?;
    let (table, _) = EmbeddingTable::load(embeddings, language, Some(hp.d))?;
    let p = predict(w1, w2, &table, &params, &hp)?;
    let sim_ant = p
        .sim_ant
        .map(|v| format!("{v:.6}"))
        .unwrap_or_else(|| "na".into());
    println!("{:.6} {:.6} {} {}", p.probability, p.sim_syn, sim_ant, p.label);
    Ok(ExitCode::SUCCESS)
}

fn cmd_graph_dump(
    hyper: HyperFlags,
    embeddings: &Path,
    pairs_path: &Path,
    language: &str,
    checkpoint: Option<&Path>,
) -> Result<ExitCode, Error> {
    let partial = hyper.to_partial()?;
    let (params, hp, table) = match checkpoint {
        Some(ckpt) => {
            let (params, hp) = load_checkpoint(ckpt)?;
            let (table, _) = EmbeddingTable::load(embeddings, language, Some(hp.d))?;
            (params, hp, table)
        }
        None => {
            let (table, _) = EmbeddingTable::load(embeddings, language, partial.d)?;
            let (hp, _) = partial.resolve(Some(table.dim()))?;
            (ModelParams::init(&hp)?, hp, table)
        }
    };
    let pairs = load_pairs(pairs_path, language)?;
    let (kept, dropped) = bhavnet_core::filter_resolvable(pairs, &table);
    if dropped > 0 {
        eprintln!("warning: dropped {dropped} pairs with out-of-vocabulary tokens");
    }
    if kept.is_empty() {
        return Err(Error::InvalidInput("no resolvable pairs to graph".into()));
    }

    // the whole file, in file order, forms one batch
    let mut tape = GradTape::new();
    let bound = bind_params(&mut tape, &params);
    let mut rng = Rng::seeded(hp.seed, Stream::Dropout);
    let mut hp_graphed = hp.clone();
    hp_graphed.no_graph = false; // dump the graph even for no-graph checkpoints
    let fwd = forward_batch(&mut tape, &bound, &hp_graphed, &kept, &table, Mode::Eval, &mut rng)?;

    for e in fwd.graph.edges() {
        if e.src < e.dst {
            println!("{} {} {} {}", e.src, e.dst, e.weight, e.rule.number());
        }
    }
    let stats = graph_stats(&fwd.graph);
    println!(
        "# nodes={} edges_rule1={} edges_rule2={} edges_rule3={} components={}",
        stats.nodes,
        stats.edges_by_rule[0],
        stats.edges_by_rule[1],
        stats.edges_by_rule[2],
        stats.components
    );
    let mut degrees: Vec<String> = stats
        .degree_histogram
        .iter()
        .map(|(d, n)| format!("{d}:{n}"))
        .collect();
    if degrees.is_empty() {
        degrees.push("0:0".into());
    }
    println!("# degree_histogram {}", degrees.join(" "));
    Ok(ExitCode::SUCCESS)
}

fn cmd_gradcheck(
    hyper: HyperFlags,
    eps: f64,
    threshold: f64,
    batch: usize,
) -> Result<ExitCode, Error> {
    // tiny defaults so the finite-difference sweep stays fast
    let tiny = PartialRunConfig {
        d: Some(8),
        d_prime: Some(4),
        fused_dim: Some(8),
        hidden_dim: Some(4),
        heads: Some(2),
        layers: Some(1),
        tau: Some(1.0),
        dropout_rate: Some(0.0),
        ..Default::default()
    };
    let partial = tiny.overlay(&hyper.to_partial()?);
    let (hp, _) = partial.resolve(None)?;
    if batch == 0 {
        return Err(Error::InvalidConfig("--batch must be positive".into()));
    }

    let mut data_rng = Rng::seeded(hp.seed, Stream::Sampling);
    let (table, pairs) = separable_dataset(batch, hp.d, 0.2, "synthetic", "g", &mut data_rng)?;
    let labels: Vec<u8> = pairs.iter().map(|p| p.label).collect();
    let params = ModelParams::init(&hp)?;
    let flat: Vec<bhavnet_core::Tensor> = params
        .arrays()
        .into_iter()
        .map(|(_, t)| t.clone())
        .collect();

    let err = grad_check(
        |tape, ids| {
            let bound = BoundParams::from_ordered(&hp, ids)?;
            let mut rng = Rng::seeded(hp.seed, Stream::Dropout);
            let fwd = forward_batch(tape, &bound, &hp, &pairs, &table, Mode::Eval, &mut rng)?;
            let (total, _) = total_loss_nodes(tape, fwd.preds, &labels, &fwd.forwards, &hp)?;
            Ok(total)
        },
        &flat,
        eps,
    )?;
    println!("max relative error: {err:.3e} (threshold {threshold:.1e})");
    if err < threshold {
        println!("gradcheck: ok");
        Ok(ExitCode::SUCCESS)
    } else {
        println!("gradcheck: FAILED");
        Ok(ExitCode::from(1))
    }
}
