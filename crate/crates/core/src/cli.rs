//! Command-line front end: `encode`, `align`, `retrieve` and `probe`.
//!
//! Every subcommand prints one JSON object per report line. Each object
//! carries the toolkit version and the fully resolved arguments, so a report
//! can be regenerated from its own contents.

use std::ffi::OsString;
use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{ArgAction, Args, Parser, Subcommand};
use log::info;
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::alignment::{fit, LinearMap, ParallelBatch, Preprocess, Solver};
use crate::embeddings::{load_table, EmbeddingTable, Tokenizer};
use crate::encoder::{
    encode_corpus, CorpusConfig, CorpusStats, EmptyPolicy, EncodeOptions, EncoderSpec, ShortPolicy,
    MAX_K,
};
use crate::format::{load_matrix, save_matrix, FloatWidth, MatrixFormat};
use crate::probe::{
    evaluate_probe, train_probe, Activation, ProbeConfig, ProbeDataset, ProbeMeta, ProbeReport,
    Split, KNOWN_TASKS,
};
use crate::retrieval::{evaluate_direction, evaluate_zero_shot, RetrievalContext};
use crate::{Error, Result, VERSION};

#[derive(Debug, Parser, Serialize)]
#[command(name = "dctsent", version, about = "DCT sentence embeddings toolkit")]
pub struct Cli {
    /// Worker threads (0 = all cores).
    #[arg(long, global = true, env = "DCTSENT_THREADS", default_value_t = 0)]
    #[serde(skip)]
    pub threads: usize,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    /// Encode a sentence file with AVG or DCT.
    Encode(EncodeArgs),
    /// Fit a linear map between two encoded corpora.
    Align(AlignArgs),
    /// Score sentence translation retrieval.
    Retrieve(RetrieveArgs),
    /// Train and evaluate probing classifiers.
    Probe(ProbeArgs),
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct TextArgs {
    /// OOV handling: skip or zero.
    #[arg(long, default_value = "skip")]
    pub oov: String,
    /// Lowercase tokens before lookup.
    #[arg(long, default_value_t = true, action = ArgAction::Set)]
    pub lowercase: bool,
    /// Substitute zero vectors for empty sentences instead of failing.
    #[arg(long)]
    pub empty_as_zero: bool,
    /// Evaluate coefficients k >= N instead of zero-filling them.
    #[arg(long)]
    pub raw_short: bool,
    /// Keep only the first N embedding entries.
    #[arg(long)]
    pub limit: Option<usize>,
}

impl TextArgs {
    fn corpus_config(&self, skip_bad: bool) -> Result<CorpusConfig> {
        Ok(CorpusConfig {
            tokenizer: Tokenizer::new(self.lowercase),
            oov: self.oov.parse()?,
            options: EncodeOptions {
                empty: if self.empty_as_zero {
                    EmptyPolicy::ZeroVector
                } else {
                    EmptyPolicy::Error
                },
                short: if self.raw_short {
                    ShortPolicy::Raw
                } else {
                    ShortPolicy::ZeroFill
                },
            },
            skip_bad,
        })
    }
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct EncodeArgs {
    #[arg(long)]
    pub vectors: PathBuf,
    #[arg(long)]
    pub input: PathBuf,
    /// avg or dct.
    #[arg(long)]
    pub encoder: String,
    /// Highest DCT coefficient index K (required for dct).
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub allow_large_k: bool,
    #[command(flatten)]
    pub text: TextArgs,
    /// Drop lines that fail to encode instead of aborting.
    #[arg(long)]
    pub skip_bad: bool,
    #[arg(long)]
    pub out: PathBuf,
    /// tsv or bin.
    #[arg(long, default_value = "tsv")]
    pub format: String,
    /// Store binary output as 32-bit floats.
    #[arg(long)]
    pub float32: bool,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct AlignArgs {
    #[arg(long)]
    pub src_vecs: PathBuf,
    #[arg(long)]
    pub tgt_vecs: PathBuf,
    /// lsq or procrustes.
    #[arg(long, default_value = "lsq")]
    pub solver: String,
    #[arg(long, default_value_t = 0.0)]
    pub ridge: f64,
    #[arg(long)]
    pub center: bool,
    #[arg(long)]
    pub normalize: bool,
    #[arg(long)]
    pub out: PathBuf,
    /// Also write a TSV dump of the map.
    #[arg(long)]
    pub tsv: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct RetrieveArgs {
    /// Source test side: encoded vectors, or sentences with --sweep.
    #[arg(long)]
    pub src: PathBuf,
    /// Target test side: encoded vectors, or sentences with --sweep.
    #[arg(long)]
    pub tgt: PathBuf,
    /// Map applied to the source side.
    #[arg(long)]
    pub map: Option<PathBuf>,
    /// Map applied to the target side; together with --map selects zero-shot.
    #[arg(long)]
    pub map2: Option<PathBuf>,
    /// Use the inverse of --map (transpose or pseudo-inverse).
    #[arg(long)]
    pub invert: bool,
    #[arg(long, default_value = "SRC")]
    pub src_lang: String,
    #[arg(long, default_value = "TGT")]
    pub tgt_lang: String,
    /// Also report top-k accuracy (diagnostic).
    #[arg(long)]
    pub topk: Option<usize>,
    #[arg(long)]
    pub center: bool,
    #[arg(long)]
    pub normalize: bool,
    /// Re-encode with AVG and c[0..=max-k], fitting one map per encoder.
    #[arg(long)]
    pub sweep: bool,
    #[arg(long, default_value_t = 3)]
    pub max_k: usize,
    #[arg(long)]
    pub src_emb: Option<PathBuf>,
    #[arg(long)]
    pub tgt_emb: Option<PathBuf>,
    #[arg(long)]
    pub pivot_emb: Option<PathBuf>,
    /// Training sentences for the source language.
    #[arg(long)]
    pub train_src: Option<PathBuf>,
    /// Training sentences for the target language.
    #[arg(long)]
    pub train_tgt: Option<PathBuf>,
    /// Pivot translations of --train-src (zero-shot sweep).
    #[arg(long)]
    pub train_src_pivot: Option<PathBuf>,
    /// Pivot translations of --train-tgt (zero-shot sweep).
    #[arg(long)]
    pub train_tgt_pivot: Option<PathBuf>,
    #[arg(long, default_value = "lsq")]
    pub solver: String,
    #[arg(long, default_value_t = 0.0)]
    pub ridge: f64,
    #[command(flatten)]
    pub text: TextArgs,
    /// Write reports here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Write the sweep row as TSV.
    #[arg(long)]
    pub table: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct ProbeArgs {
    /// Directory of `<task>.txt` files with split<TAB>label<TAB>sentence rows.
    #[arg(long)]
    pub task_dir: PathBuf,
    #[arg(long)]
    pub vectors: PathBuf,
    /// avg or dct (ignored with --sweep).
    #[arg(long, default_value = "dct")]
    pub encoder: String,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub allow_large_k: bool,
    /// Run AVG and c[0..=4] and emit a tasks x encoders table.
    #[arg(long)]
    pub sweep: bool,
    /// Only run these tasks (file stems).
    #[arg(long)]
    pub task: Vec<String>,
    #[arg(long, default_value = "en")]
    pub language: String,
    #[arg(long, default_value_t = 13)]
    pub seed: u64,
    #[arg(long, default_value = "sigmoid")]
    pub activation: String,
    #[arg(long, default_value_t = 200)]
    pub max_epoch: usize,
    #[command(flatten)]
    pub text: TextArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub table: Option<PathBuf>,
}

fn encoder_spec(name: &str, k: Option<usize>, allow_large_k: bool) -> Result<EncoderSpec> {
    match name.to_ascii_lowercase().as_str() {
        "avg" => Ok(EncoderSpec::Avg),
        "dct" => {
            let k = k.ok_or_else(|| Error::Config("--encoder dct requires --k".into()))?;
            if allow_large_k {
                Ok(EncoderSpec::Dct { k })
            } else {
                EncoderSpec::dct(k)
            }
        }
        other => Err(Error::Config(format!(
            "unknown encoder {other:?} (avg or dct)"
        ))),
    }
}

fn read_lines(path: &Path) -> Result<Vec<String>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(text.lines().map(str::to_owned).collect())
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).map_err(|e| Error::io(p, e))?,
        )),
        None => Box::new(io::stdout().lock()),
    })
}

fn emit<T: Serialize, C: Serialize>(
    out: &mut dyn Write,
    command: &str,
    config: &C,
    report: &T,
) -> Result<()> {
    let line = json!({
        "toolkit_version": VERSION,
        "command": command,
        "config": config,
        "report": report,
    });
    writeln!(out, "{line}")?;
    Ok(())
}

/// Metadata written next to an encoded matrix as `<out>.meta.json`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EncodeMeta {
    pub toolkit_version: String,
    pub encoder: String,
    pub oov_policy: String,
    pub config: EncodeArgs,
    pub stats: CorpusStats,
}

pub fn meta_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".meta.json");
    PathBuf::from(s)
}

fn read_meta(vectors: &Path) -> Option<EncodeMeta> {
    let text = fs::read_to_string(meta_path(vectors)).ok()?;
    serde_json::from_str(&text).ok()
}

pub fn cmd_encode(args: &EncodeArgs) -> Result<()> {
    let spec = encoder_spec(&args.encoder, args.k, args.allow_large_k)?;
    let format: MatrixFormat = args.format.parse()?;
    let config = args.text.corpus_config(args.skip_bad)?;
    let table = load_table(&args.vectors, args.text.limit)?;
    let lines = read_lines(&args.input)?;
    let encoded = encode_corpus(&table, &lines, spec, &config)?;
    let width = if args.float32 {
        FloatWidth::F32
    } else {
        FloatWidth::F64
    };
    save_matrix(&args.out, &encoded.vectors, format, width)?;

    let meta = EncodeMeta {
        toolkit_version: VERSION.into(),
        encoder: spec.to_string(),
        oov_policy: config.oov.to_string(),
        config: args.clone(),
        stats: encoded.stats.clone(),
    };
    let path = meta_path(&args.out);
    let json = serde_json::to_string_pretty(&meta).expect("metadata serializes");
    fs::write(&path, json + "\n").map_err(|e| Error::io(&path, e))?;

    let report = json!({
        "encoder": spec.to_string(),
        "oov_policy": config.oov.to_string(),
        "empty_policy": config.options.empty,
        "short_policy": config.options.short,
        "rows": encoded.vectors.nrows(),
        "cols": encoded.vectors.ncols(),
        "stats": encoded.stats,
    });
    emit(&mut io::stdout().lock(), "encode", args, &report)
}

pub fn cmd_align(args: &AlignArgs) -> Result<()> {
    let solver: Solver = args.solver.parse()?;
    let pre = Preprocess {
        center: args.center,
        normalize: args.normalize,
    };
    let mut src = load_matrix(&args.src_vecs)?;
    let mut tgt = load_matrix(&args.tgt_vecs)?;
    pre.apply(&mut src);
    pre.apply(&mut tgt);
    let batch = ParallelBatch::new(src, tgt)?;
    let map = fit(&batch, solver, args.ridge)?;
    map.save(&args.out)?;
    if let Some(tsv) = &args.tsv {
        let file = File::create(tsv).map_err(|e| Error::io(tsv, e))?;
        map.write_tsv(BufWriter::new(file))?;
    }
    let report = json!({
        "solver": map.solver.as_str(),
        "pairs": batch.pairs(),
        "width": batch.width(),
        "ridge": args.ridge,
        "fit_residual": map.fit_residual,
    });
    emit(&mut io::stdout().lock(), "align", args, &report)
}

fn load_map(path: &Path, invert: bool) -> Result<LinearMap> {
    let map = LinearMap::load(path)?;
    if invert {
        map.inverse()
    } else {
        Ok(map)
    }
}

fn context_from(args: &RetrieveArgs, encoder: String, oov: String) -> RetrievalContext {
    RetrievalContext {
        source_lang: args.src_lang.clone(),
        target_lang: args.tgt_lang.clone(),
        encoder,
        oov_policy: oov,
        topk: args.topk,
    }
}

pub fn cmd_retrieve(args: &RetrieveArgs) -> Result<()> {
    if args.sweep {
        return retrieve_sweep(args);
    }
    if args.map2.is_some() && args.map.is_none() {
        return Err(Error::Config("--map2 requires --map".into()));
    }
    let pre = Preprocess {
        center: args.center,
        normalize: args.normalize,
    };
    let mut src = load_matrix(&args.src)?;
    let mut tgt = load_matrix(&args.tgt)?;
    pre.apply(&mut src);
    pre.apply(&mut tgt);

    let meta = read_meta(&args.src);
    let ctx = context_from(
        args,
        meta.as_ref()
            .map_or_else(|| "unspecified".into(), |m| m.encoder.clone()),
        meta.as_ref()
            .map_or_else(|| "unspecified".into(), |m| m.oov_policy.clone()),
    );
    let report = match (&args.map, &args.map2) {
        (Some(m1), Some(m2)) => {
            let map1 = load_map(m1, false)?;
            let map2 = load_map(m2, false)?;
            evaluate_zero_shot(&src, &tgt, &map1, &map2, &ctx)?
        }
        (Some(m), None) => {
            let map = load_map(m, args.invert)?;
            evaluate_direction(&src, &tgt, Some(&map), &ctx)?
        }
        _ => evaluate_direction(&src, &tgt, None, &ctx)?,
    };
    let mut out = output(args.out.as_deref())?;
    emit(out.as_mut(), "retrieve", args, &report)?;
    out.flush()?;
    Ok(())
}

fn required<'a>(value: &'a Option<PathBuf>, flag: &str) -> Result<&'a Path> {
    value
        .as_deref()
        .ok_or_else(|| Error::Config(format!("--sweep requires {flag}")))
}

fn encode_file(
    table: &EmbeddingTable,
    path: &Path,
    spec: EncoderSpec,
    config: &CorpusConfig,
    pre: Preprocess,
) -> Result<DMatrix<f64>> {
    let lines = read_lines(path)?;
    let mut m = encode_corpus(table, &lines, spec, config)?.vectors;
    pre.apply(&mut m);
    Ok(m)
}

fn retrieve_sweep(args: &RetrieveArgs) -> Result<()> {
    let solver: Solver = args.solver.parse()?;
    let config = args.text.corpus_config(false)?;
    let pre = Preprocess {
        center: args.center,
        normalize: args.normalize,
    };
    let src_table = load_table(required(&args.src_emb, "--src-emb")?, args.text.limit)?;
    let tgt_table = load_table(required(&args.tgt_emb, "--tgt-emb")?, args.text.limit)?;
    let train_src = required(&args.train_src, "--train-src")?;
    let train_tgt = required(&args.train_tgt, "--train-tgt")?;
    let zero_shot = match (&args.train_src_pivot, &args.train_tgt_pivot) {
        (Some(a), Some(b)) => {
            let pivot = load_table(required(&args.pivot_emb, "--pivot-emb")?, args.text.limit)?;
            Some((pivot, a.clone(), b.clone()))
        }
        (None, None) => None,
        _ => {
            return Err(Error::Config(
                "zero-shot sweep needs both --train-src-pivot and --train-tgt-pivot".into(),
            ))
        }
    };

    let mut out = output(args.out.as_deref())?;
    let mut row = vec![format!("{}→{}", args.src_lang, args.tgt_lang)];
    let mut header = vec!["direction".to_string()];
    for spec in EncoderSpec::sweep(args.max_k) {
        info!("sweep: {spec}");
        let ctx = context_from(args, spec.to_string(), config.oov.to_string());
        let test_src = encode_file(&src_table, &args.src, spec, &config, pre)?;
        let test_tgt = encode_file(&tgt_table, &args.tgt, spec, &config, pre)?;
        let report = match &zero_shot {
            None => {
                let s = encode_file(&src_table, train_src, spec, &config, pre)?;
                let t = encode_file(&tgt_table, train_tgt, spec, &config, pre)?;
                let map = fit(&ParallelBatch::new(s, t)?, solver, args.ridge)?;
                evaluate_direction(&test_src, &test_tgt, Some(&map), &ctx)?
            }
            Some((pivot, src_pivot, tgt_pivot)) => {
                let s = encode_file(&src_table, train_src, spec, &config, pre)?;
                let sp = encode_file(pivot, src_pivot, spec, &config, pre)?;
                let map1 = fit(&ParallelBatch::new(s, sp)?, solver, args.ridge)?;
                let t = encode_file(&tgt_table, train_tgt, spec, &config, pre)?;
                let tp = encode_file(pivot, tgt_pivot, spec, &config, pre)?;
                let map2 = fit(&ParallelBatch::new(t, tp)?, solver, args.ridge)?;
                evaluate_zero_shot(&test_src, &test_tgt, &map1, &map2, &ctx)?
            }
        };
        header.push(spec.to_string());
        row.push(format!("{:.2}", 100.0 * report.accuracy));
        emit(out.as_mut(), "retrieve", args, &report)?;
    }
    out.flush()?;
    if let Some(path) = &args.table {
        let text = format!("{}\n{}\n", header.join("\t"), row.join("\t"));
        fs::write(path, text).map_err(|e| Error::io(path, e))?;
    }
    Ok(())
}

/// Runs one probing task with one encoder.
pub fn run_probe_task(
    table: &EmbeddingTable,
    dataset: &ProbeDataset,
    spec: EncoderSpec,
    corpus: &CorpusConfig,
    config: &ProbeConfig,
    language: &str,
) -> Result<ProbeReport> {
    let encode_split = |split: Split| -> Result<Option<(DMatrix<f64>, Vec<String>)>> {
        let Some(rows) = dataset.split(split) else {
            return Ok(None);
        };
        let sentences: Vec<&str> = rows.iter().map(|(_, s)| s.as_str()).collect();
        let labels = rows.iter().map(|(l, _)| l.clone()).collect();
        let encoded = encode_corpus(table, &sentences, spec, corpus).map_err(|e| match e {
            Error::EmptySentence { line } => Error::Dataset(format!(
                "task {}: {split} sentence {line} has no in-vocabulary words",
                dataset.task_name
            )),
            other => other,
        })?;
        Ok(Some((encoded.vectors, labels)))
    };
    let missing =
        |split: Split| Error::Dataset(format!("task {} has no {split} split", dataset.task_name));
    let (train_x, train_y) = encode_split(Split::Train)?.ok_or_else(|| missing(Split::Train))?;
    let (test_x, test_y) = encode_split(Split::Test)?.ok_or_else(|| missing(Split::Test))?;
    let dev = encode_split(Split::Dev)?;
    let state = train_probe(
        &train_x,
        &train_y,
        dev.as_ref().map(|(x, y)| (x, y.as_slice())),
        config,
    )?;
    let meta = ProbeMeta {
        task_name: dataset.task_name.clone(),
        language: language.to_owned(),
        encoder: spec.to_string(),
    };
    evaluate_probe(&state, &test_x, &test_y, &meta)
}

fn task_files(dir: &Path, only: &[String]) -> Result<Vec<PathBuf>> {
    let entries = fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut files: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.is_file()
                && matches!(
                    p.extension().and_then(|e| e.to_str()),
                    Some("txt") | Some("tsv")
                )
        })
        .collect();
    files.sort();
    if !only.is_empty() {
        for name in only {
            if !files
                .iter()
                .any(|p| p.file_stem().is_some_and(|s| s == name.as_str()))
            {
                return Err(Error::Dataset(format!(
                    "task file for {name:?} not found in {}",
                    dir.display()
                )));
            }
        }
        files.retain(|p| {
            p.file_stem()
                .is_some_and(|s| only.iter().any(|n| s == n.as_str()))
        });
    }
    if files.is_empty() {
        return Err(Error::Dataset(format!(
            "no task files in {}",
            dir.display()
        )));
    }
    Ok(files)
}

pub fn cmd_probe(args: &ProbeArgs) -> Result<()> {
    let specs = if args.sweep {
        EncoderSpec::sweep(MAX_K)
    } else {
        vec![encoder_spec(&args.encoder, args.k, args.allow_large_k)?]
    };
    let activation: Activation = args.activation.parse()?;
    let config = ProbeConfig {
        seed: args.seed,
        activation,
        max_epoch: args.max_epoch,
        ..ProbeConfig::default()
    };
    let corpus = args.text.corpus_config(false)?;
    let files = task_files(&args.task_dir, &args.task)?;
    let datasets = files
        .iter()
        .map(ProbeDataset::load)
        .collect::<Result<Vec<_>>>()?;
    let table = load_table(&args.vectors, args.text.limit)?;

    let mut out = output(args.out.as_deref())?;
    let mut grid: Vec<(String, Vec<f64>)> = Vec::new();
    for dataset in &datasets {
        if !KNOWN_TASKS.contains(&dataset.task_name.as_str()) {
            info!(
                "task {} is not one of the standard probing tasks",
                dataset.task_name
            );
        }
        let mut accs = Vec::new();
        for &spec in &specs {
            let report = run_probe_task(&table, dataset, spec, &corpus, &config, &args.language)?;
            accs.push(report.accuracy);
            let resolved = json!({ "args": args, "probe": config });
            emit(out.as_mut(), "probe", &resolved, &report)?;
        }
        grid.push((dataset.task_name.clone(), accs));
    }
    out.flush()?;

    if let Some(path) = &args.table {
        let mut text = String::from("task");
        for spec in &specs {
            text.push('\t');
            text.push_str(&spec.to_string());
        }
        text.push('\n');
        for (task, accs) in &grid {
            text.push_str(task);
            for a in accs {
                text.push_str(&format!("\t{:.2}", 100.0 * a));
            }
            text.push('\n');
        }
        fs::write(path, text).map_err(|e| Error::io(path, e))?;
    }
    Ok(())
}

/// Parses `argv` and runs the selected subcommand, returning the exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    if cli.threads > 0 {
        // Fails only if a pool was already built in this process.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(cli.threads)
            .build_global();
    }
    let result = match &cli.command {
        Command::Encode(a) => cmd_encode(a),
        Command::Align(a) => cmd_align(a),
        Command::Retrieve(a) => cmd_retrieve(a),
        Command::Probe(a) => cmd_probe(a),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn main() -> i32 {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    run(std::env::args_os())
}
