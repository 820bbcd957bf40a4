use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use lidwatch::cascade::write_cascade;
use lidwatch::classify::{load_model, roc_from_scores, save_model, train, EyeState, TrainParams};
use lidwatch::dataset::load_labeled;
use lidwatch::eyeprep::PrepConfig;
use lidwatch::features::FeatureKind;
use lidwatch::pipeline::{run_sequence, Pipeline, PipelineConfig};
use lidwatch::raster::write_pnm_file;
use lidwatch::synth::{eye_cascade, eye_patches, face_cascade, PatchSpec, SynthSpec};

#[derive(Parser)]
#[command(name = "lidwatch", version, about = "Eye-closure drowsiness monitoring on grayscale frame sequences")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Process a directory of PNM frames and write one JSON report per frame.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        frames: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train an open/closed eye classifier from two directories of eye crops.
    Train {
        #[arg(long)]
        open: PathBuf,
        #[arg(long)]
        closed: PathBuf,
        #[arg(long, default_value = "hog")]
        features: FeatureKind,
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        lambda: Option<f64>,
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// Weight each class's hinge loss by its inverse frequency.
        #[arg(long)]
        balance: bool,
    },
    /// Score labelled eye crops, write the ROC curve and print the AUC.
    Eval {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        open: PathBuf,
        #[arg(long)]
        closed: PathBuf,
        #[arg(long)]
        roc: PathBuf,
        /// Expected feature kind; must match the model.
        #[arg(long)]
        features: Option<FeatureKind>,
        /// Also dump `label,score` rows here.
        #[arg(long)]
        scores: Option<PathBuf>,
    },
    /// Render a synthetic frame sequence with ground truth and cascades.
    Synth {
        #[arg(long)]
        spec: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Also write this many open and closed eye crops per class.
        #[arg(long)]
        patches: Option<usize>,
    },
}

fn main() -> ExitCode {
    match dispatch(Cli::parse().command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn dispatch(cmd: Command) -> Result<()> {
    match cmd {
        Command::Run { config, frames, out } => run(&config, &frames, &out),
        Command::Train {
            open,
            closed,
            features,
            model,
            lambda,
            epochs,
            seed,
            balance,
        } => {
            let defaults = TrainParams::default();
            let params = TrainParams {
                lambda: lambda.unwrap_or(defaults.lambda),
                epochs: epochs.unwrap_or(defaults.epochs),
                seed: seed.unwrap_or(defaults.seed),
                balance_classes: balance,
            };
            train_cmd(&open, &closed, features, &model, &params)
        }
        Command::Eval {
            model,
            open,
            closed,
            roc,
            features,
            scores,
        } => eval(&model, &open, &closed, &roc, features, scores.as_deref()),
        Command::Synth { spec, out, patches } => synth(spec.as_deref(), &out, patches),
    }
}

fn run(config: &Path, frames: &Path, out: &Path) -> Result<()> {
    let cfg = PipelineConfig::from_file(config)?;
    let mut pipeline = Pipeline::from_config(cfg)?;
    let file = File::create(out).with_context(|| format!("creating {}", out.display()))?;
    let mut w = BufWriter::new(file);
    let summary = run_sequence(&mut pipeline, frames, &mut w)?;
    w.flush()?;
    eprintln!(
        "{} frames, {} alarms raised, {:.1} fps overall, {:.1} fps tracked",
        summary.frames, summary.alarms_raised, summary.throughput_fps, summary.tracked_fps
    );
    Ok(())
}

fn train_cmd(open: &Path, closed: &Path, kind: FeatureKind, model: &Path, params: &TrainParams) -> Result<()> {
    let data = load_labeled(open, closed, kind, &PrepConfig::default())?;
    let n_closed = data.iter().filter(|s| s.label == EyeState::Closed).count();
    let m = train(&data, params)?;
    let mut correct = 0usize;
    for s in &data {
        if m.predict(&s.features, 0.0)? == s.label {
            correct += 1;
        }
    }
    save_model(&m, model)?;
    println!("open: {}", data.len() - n_closed);
    println!("closed: {n_closed}");
    println!("training accuracy: {:.4}", correct as f64 / data.len() as f64);
    Ok(())
}

fn eval(
    model: &Path,
    open: &Path,
    closed: &Path,
    roc_out: &Path,
    features: Option<FeatureKind>,
    dump: Option<&Path>,
) -> Result<()> {
    let m = load_model(model)?;
    if let Some(kind) = features {
        if kind != m.kind {
            bail!(
                "model {} has {} dims but {kind} features have {} dims",
                model.display(),
                m.dim(),
                kind.dim()
            );
        }
    }
    let data = load_labeled(open, closed, m.kind, &PrepConfig::default())?;
    let scores = data.iter().map(|s| m.score(&s.features)).collect::<lidwatch::Result<Vec<f64>>>()?;
    let labels: Vec<EyeState> = data.iter().map(|s| s.label).collect();
    let curve = roc_from_scores(&scores, &labels)?;
    fs::write(roc_out, curve.to_csv()).with_context(|| format!("writing {}", roc_out.display()))?;
    if let Some(path) = dump {
        let mut text = String::from("label,score\n");
        for (l, s) in labels.iter().zip(&scores) {
            text += &format!("{l},{s:.17e}\n");
        }
        fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
    }
    println!("AUC {:.12}", curve.auc);
    Ok(())
}

fn synth(spec: Option<&Path>, out: &Path, patches: Option<usize>) -> Result<()> {
    let spec: SynthSpec = match spec {
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            serde_json::from_str(&text).with_context(|| format!("parsing {}", p.display()))?
        }
        None => SynthSpec::default(),
    };
    spec.validate()?;
    let frames = out.join("frames");
    fs::create_dir_all(&frames).with_context(|| format!("creating {}", frames.display()))?;
    let mut truth = BufWriter::new(File::create(out.join("ground_truth.jsonl"))?);
    for k in 0..spec.frames {
        write_pnm_file(frames.join(format!("frame_{k:05}.pgm")), &spec.render(k))?;
        writeln!(truth, "{}", serde_json::to_string(&spec.truth(k))?)?;
    }
    truth.flush()?;
    fs::write(out.join("face_cascade.xml"), write_cascade(&face_cascade()))?;
    fs::write(out.join("eye_cascade.xml"), write_cascade(&eye_cascade()))?;
    let config = serde_json::json!({
        "face_cascade": "face_cascade.xml",
        "eye_cascade": "eye_cascade.xml",
        "model": "eye.model",
        "fps": spec.fps,
    });
    fs::write(out.join("config.json"), serde_json::to_string_pretty(&config)? + "\n")?;
    if let Some(n) = patches {
        let (open, closed) = eye_patches(&PatchSpec {
            per_class: n,
            seed: spec.seed,
            ..PatchSpec::default()
        });
        for (name, imgs) in [("open", open), ("closed", closed)] {
            let dir = out.join(name);
            fs::create_dir_all(&dir)?;
            for (i, img) in imgs.iter().enumerate() {
                write_pnm_file(dir.join(format!("{name}_{i:05}.pgm")), img)?;
            }
        }
    }
    Ok(())
}
