//! `seislink` command line: data generation, training, association, the grid
//! baseline, evaluation, stress sweeps and plots.

mod config;
mod plot;

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use seislink::aggregate::{read_catalog, write_catalog, write_event, Catalog, ScanOrder};
use seislink::dataset::{generate_dataset, read_dataset};
use seislink::eval::{pr_sweep, score_catalog, write_stress_csv, write_sweep_csv};
use seislink::geo::{load_stations, Station};
use seislink::gridassoc::{grid_associate, to_catalog, TravelTimeGrid};
use seislink::linker::{load_model, save_model, train_with, LinkerModel, TrainError};
use seislink::picks::{read_picks, write_picks, Pick};
use seislink::pipeline::{associate_picks, stream_associate, stress_test, Linker, StressConfig};
use seislink::presets;
use seislink::synth::Generator;
use seislink::velmod::LayeredModel;
use seislink::window::Featurizer;

use config::{Needs, RunConfig};

#[derive(Debug, Parser)]
#[command(name = "seislink", version, about = "Learned seismic phase association")]
struct Cli {
    /// TOML run configuration; every key is optional.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed for every random stream.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (0 = all cores).
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Directory for default output paths.
    #[arg(long, global = true)]
    output_dir: Option<PathBuf>,
    /// Station CSV (id,lat,lon); the built-in desk network when omitted.
    #[arg(long, global = true)]
    stations: Option<PathBuf>,
    /// Layered velocity model text file.
    #[arg(long, global = true)]
    velocity_model: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a training dataset, or a continuous pick stream with --stream.
    Synth(SynthArgs),
    /// Train the link model on a dataset.
    Train(TrainArgs),
    /// Associate a pick stream with the link model or the truth oracle.
    Associate(AssociateArgs),
    /// Associate a pick stream with the grid back-projection baseline.
    Grid(GridArgs),
    /// Score a catalog against the event ids of a pick file.
    Eval(EvalArgs),
    /// Sweep inter-event gaps and score every associator.
    Stress(StressArgs),
    /// Render SVG charts from stress, sweep or training-log CSVs.
    Plot(PlotArgs),
}

#[derive(Debug, Args)]
struct SynthArgs {
    #[arg(long)]
    samples: Option<usize>,
    /// Write a continuous pick stream (with event ids) instead of a dataset.
    #[arg(long)]
    stream: bool,
    /// Events in the stream.
    #[arg(long, default_value_t = 500)]
    events: usize,
    /// Maximum inter-event gap of the stream in seconds.
    #[arg(long, default_value_t = 128.0)]
    max_gap: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct TrainArgs {
    #[arg(long)]
    dataset: Option<PathBuf>,
    #[arg(long)]
    epochs: Option<usize>,
    /// Where to write the best model.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct AssociateArgs {
    #[arg(long)]
    picks: Option<PathBuf>,
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    /// Link with the event ids in the pick file instead of a model.
    #[arg(long)]
    oracle: bool,
    /// Reverse-scan batch clustering instead of forward streaming.
    #[arg(long)]
    batch: bool,
    #[arg(long)]
    threshold: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct GridArgs {
    #[arg(long)]
    picks: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct EvalArgs {
    /// Pick file with an event_id column (the truth).
    #[arg(long)]
    picks: Option<PathBuf>,
    #[arg(long)]
    catalog: Option<PathBuf>,
    /// Also write a precision/recall sweep over n_min in 8..=20.
    #[arg(long)]
    sweep: bool,
    /// Prefix for the metrics files.
    #[arg(long, default_value = "metrics")]
    name: String,
}

#[derive(Debug, Args)]
struct StressArgs {
    /// Include the link model from this checkpoint.
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    #[arg(long)]
    no_grid: bool,
    /// Cluster roots in time order instead of the reverse batch scan.
    #[arg(long)]
    forward: bool,
    #[arg(long)]
    events: Option<usize>,
    /// Comma-separated maximum gaps in seconds.
    #[arg(long, value_delimiter = ',')]
    gaps: Option<Vec<f64>>,
}

#[derive(Debug, Args)]
struct PlotArgs {
    /// Long-format stress CSV.
    #[arg(long)]
    stress: Option<PathBuf>,
    /// Long-format sweep CSV.
    #[arg(long)]
    sweep: Option<PathBuf>,
    /// Training log CSV.
    #[arg(long)]
    log: Option<PathBuf>,
}

enum Failure {
    Usage(Vec<String>),
    Runtime(anyhow::Error),
}

impl<E: Into<anyhow::Error>> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure::Runtime(e.into())
    }
}

type Outcome = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(problems)) => {
            for p in problems {
                eprintln!("error: {p}");
            }
            ExitCode::from(2)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: Cli) -> Outcome {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p).map_err(Failure::Usage)?,
        None => RunConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    // One master seed drives every stream.
    cfg.synth.seed = cfg.seed;
    cfg.train.seed = cfg.seed;
    if let Some(w) = cli.workers {
        cfg.workers = w;
    }
    set_if(&mut cfg.paths.output_dir, cli.output_dir);
    set_if(&mut cfg.paths.stations, cli.stations);
    set_if(&mut cfg.paths.velocity_model, cli.velocity_model);

    let needs = apply_command_args(&mut cfg, &cli.cmd);
    let problems = cfg.problems(needs);
    if !problems.is_empty() {
        return Err(Failure::Usage(problems));
    }
    rayon::ThreadPoolBuilder::new().num_threads(cfg.workers).build_global().context("starting worker pool")?;

    match &cli.cmd {
        Command::Synth(a) => cmd_synth(&cfg, a),
        Command::Train(a) => cmd_train(&cfg, a),
        Command::Associate(a) => cmd_associate(&cfg, a),
        Command::Grid(a) => cmd_grid(&cfg, a),
        Command::Eval(a) => cmd_eval(&cfg, a),
        Command::Stress(a) => cmd_stress(&cfg, a),
        Command::Plot(a) => cmd_plot(&cfg, a),
    }
}

fn set_if<T>(slot: &mut Option<T>, v: Option<T>) {
    if v.is_some() {
        *slot = v;
    }
}

/// Folds subcommand flags into the config and says which inputs must exist.
fn apply_command_args(cfg: &mut RunConfig, cmd: &Command) -> Needs {
    let p = &mut cfg.paths;
    match cmd {
        Command::Synth(a) => {
            if let Some(n) = a.samples {
                cfg.data.n_samples = n;
            }
            Needs::default()
        }
        Command::Train(a) => {
            set_if(&mut p.dataset, a.dataset.clone());
            if let Some(e) = a.epochs {
                cfg.train.epochs = e;
            }
            Needs { dataset: true, ..Default::default() }
        }
        Command::Associate(a) => {
            set_if(&mut p.picks, a.picks.clone());
            set_if(&mut p.checkpoint, a.checkpoint.clone());
            if let Some(t) = a.threshold {
                cfg.threshold = t;
            }
            Needs { picks: true, checkpoint: !a.oracle, ..Default::default() }
        }
        Command::Grid(a) => {
            set_if(&mut p.picks, a.picks.clone());
            Needs { picks: true, ..Default::default() }
        }
        Command::Eval(a) => {
            set_if(&mut p.picks, a.picks.clone());
            set_if(&mut p.catalog, a.catalog.clone());
            Needs { picks: true, catalog: true, ..Default::default() }
        }
        Command::Stress(a) => {
            set_if(&mut p.checkpoint, a.checkpoint.clone());
            if let Some(n) = a.events {
                cfg.stress.n_events = n;
            }
            if let Some(g) = &a.gaps {
                cfg.stress.gaps = g.clone();
            }
            if a.forward {
                cfg.stress.scan = ScanOrder::Forward;
            }
            Needs::default()
        }
        Command::Plot(_) => Needs::default(),
    }
}

/// Provenance block written into every output.
fn header(cfg: &RunConfig, command: &str) -> serde_json::Value {
    json!({
        "tool": "seislink",
        "version": env!("CARGO_PKG_VERSION"),
        "command": command,
        "config": cfg.echo(),
    })
}

/// Opens a CSV output and writes the provenance header as `#` comment lines.
fn csv_out(path: &Path, cfg: &RunConfig, command: &str) -> anyhow::Result<BufWriter<File>> {
    let mut w = create(path)?;
    writeln!(w, "# {}", header(cfg, command))?;
    Ok(w)
}

fn create(path: &Path) -> anyhow::Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    Ok(BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?))
}

fn write_json(path: &Path, value: &serde_json::Value) -> anyhow::Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn stations(cfg: &RunConfig) -> anyhow::Result<Vec<Station>> {
    match &cfg.paths.stations {
        Some(p) => Ok(load_stations(p)?),
        None => Ok(presets::desk_stations()),
    }
}

fn velocity_model(cfg: &RunConfig) -> anyhow::Result<LayeredModel> {
    match &cfg.paths.velocity_model {
        Some(p) => Ok(LayeredModel::load(p)?),
        None => Ok(presets::desk_model()),
    }
}

fn generator(cfg: &RunConfig, st: &[Station]) -> anyhow::Result<Generator> {
    Ok(Generator::new(cfg.synth.clone(), st, cfg.region, &velocity_model(cfg)?)?)
}

fn cmd_synth(cfg: &RunConfig, a: &SynthArgs) -> Outcome {
    let st = stations(cfg)?;
    let gen = generator(cfg, &st)?;
    let dir = cfg.output_dir();
    if a.stream {
        let problems = stream_problems(a.events, a.max_gap);
        if !problems.is_empty() {
            return Err(Failure::Usage(problems));
        }
        let region = cfg.region.inset_km(cfg.stress.event_inset_km).context("event region")?;
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let seq = gen.stress_sequence(&region, a.events, a.max_gap, &mut rng);
        let out = a.out.clone().unwrap_or_else(|| dir.join("picks.csv"));
        write_picks(&out, &seq.picks, &st, true).context("writing picks")?;
        let summary = json!({
            "header": header(cfg, "synth --stream"),
            "picks": seq.picks.len(),
            "events": seq.truth.events.len(),
            "mean_gap_s": seq.mean_gap(),
            "max_gap_s": a.max_gap,
        });
        write_json(&out.with_extension("json"), &summary)?;
        println!("wrote {} picks from {} events to {}", seq.picks.len(), seq.truth.events.len(), out.display());
        return Ok(());
    }
    let out = a.out.clone().or_else(|| cfg.paths.dataset.clone()).unwrap_or_else(|| dir.join("dataset.sld"));
    let h =
        generate_dataset(&gen, cfg.data.n_samples, cfg.seed, &out, header(cfg, "synth")).context("writing dataset")?;
    println!("wrote {} windows ({} train) to {}", h.n_samples, h.n_train, out.display());
    Ok(())
}

fn stream_problems(events: usize, max_gap: f64) -> Vec<String> {
    let mut out = Vec::new();
    if events == 0 {
        out.push("--events must be at least 1".to_string());
    }
    if !(max_gap >= 0.0) {
        out.push(format!("--max-gap {max_gap} must be non-negative"));
    }
    out
}

fn cmd_train(cfg: &RunConfig, a: &TrainArgs) -> Outcome {
    let path = cfg.paths.dataset.as_ref().expect("validated");
    let ds = read_dataset(path).context("reading dataset")?;
    let n_p = ds.header.n_p;
    let dir = cfg.output_dir();
    let out = a.out.clone().or_else(|| cfg.paths.checkpoint.clone()).unwrap_or_else(|| dir.join("model.slm"));
    let ckpt_dir = dir.join("checkpoints");
    let every = cfg.train.checkpoint_every;
    let mut log = csv_out(&dir.join("train_log.csv"), cfg, "train")?;
    writeln!(log, "epoch,train_loss,val_loss,val_accuracy,val_accuracy_real")?;
    let provenance = |extra: serde_json::Value| {
        json!({
            "run": header(cfg, "train"),
            "dataset": { "path": path, "header": ds.header },
            "training": extra,
        })
    };
    let mut io_err: Option<anyhow::Error> = None;
    let result = train_with(&ds, &cfg.train, |s, model| {
        if io_err.is_some() {
            return;
        }
        let r = (|| -> anyhow::Result<()> {
            writeln!(log, "{},{},{},{},{}", s.epoch, s.train_loss, s.val_loss, s.val_accuracy, s.val_accuracy_real)?;
            log.flush()?;
            if every > 0 && s.epoch % every == 0 {
                std::fs::create_dir_all(&ckpt_dir)?;
                let p = ckpt_dir.join(format!("epoch_{:03}.slm", s.epoch));
                save_model(&p, model, n_p, provenance(json!({ "epoch": s })))?;
            }
            eprintln!(
                "epoch {:>3}  train {:.5}  val {:.5}  acc {:.4}",
                s.epoch, s.train_loss, s.val_loss, s.val_accuracy
            );
            Ok(())
        })();
        io_err = r.err();
    });
    if let Some(e) = io_err {
        return Err(e.context("writing training outputs").into());
    }
    match result {
        Ok(rep) => {
            let last = rep.history.last().copied();
            let best = rep.history.iter().find(|s| s.epoch == rep.best_epoch).copied();
            save_model(
                &out,
                &rep.best,
                n_p,
                provenance(json!({ "best_epoch": rep.best_epoch, "best": best, "last": last })),
            )
            .context("writing checkpoint")?;
            println!("best epoch {} written to {}", rep.best_epoch, out.display());
            Ok(())
        }
        Err(TrainError::Diverged { epoch, last_finite, .. }) => {
            let p = dir.join("model_last_finite.slm");
            save_model(&p, &last_finite, n_p, provenance(json!({ "diverged_in_epoch": epoch })))
                .context("writing last finite checkpoint")?;
            Err(anyhow::anyhow!("training diverged in epoch {epoch}; last finite model saved to {}", p.display())
                .into())
        }
        Err(TrainError::Config(problems)) => Err(Failure::Usage(problems)),
        Err(e) => Err(anyhow::Error::from(e).into()),
    }
}

fn load_checkpoint(path: &Path, n_p: usize) -> Result<LinkerModel, Failure> {
    let (model, h) = load_model(path).with_context(|| format!("loading {}", path.display()))?;
    if h.n_p != n_p {
        return Err(Failure::Usage(vec![format!(
            "{} was trained with n_p = {} but synth.n_p is {n_p}",
            path.display(),
            h.n_p
        )]));
    }
    Ok(model)
}

fn load_picks(cfg: &RunConfig, st: &[Station]) -> anyhow::Result<Vec<Pick>> {
    let path = cfg.paths.picks.as_ref().expect("validated");
    Ok(read_picks(path, st)?)
}

fn cmd_associate(cfg: &RunConfig, a: &AssociateArgs) -> Outcome {
    let st = stations(cfg)?;
    let picks = load_picks(cfg, &st)?;
    let feat = Featurizer::new(&st, &cfg.region, cfg.synth.n_p, cfg.synth.window_s).context("featurizer")?;
    let model = match (a.oracle, &cfg.paths.checkpoint) {
        (false, Some(p)) => Some(load_checkpoint(p, cfg.synth.n_p)?),
        _ => None,
    };
    let linker = match &model {
        Some(m) => Linker::Model { model: m, threshold: cfg.threshold },
        None => Linker::Oracle,
    };
    if a.oracle && picks.iter().all(|p| p.event.is_none()) {
        return Err(Failure::Usage(vec!["--oracle needs a pick file with event ids".into()]));
    }
    let out =
        a.out.clone().or_else(|| cfg.paths.catalog.clone()).unwrap_or_else(|| cfg.output_dir().join("catalog.jsonl"));
    let head = json!({ "run": header(cfg, "associate"), "linker": linker.name(), "mode": if a.batch { "batch" } else { "stream" } });
    if a.batch {
        let cat = associate_picks(&picks, &feat, linker, cfg.aggregate).context("windowing picks")?;
        write_catalog(create(&out)?, &cat, &picks, &st, head)?;
        println!("{} events written to {}", cat.events.len(), out.display());
        return Ok(());
    }
    let mut w = create(&out)?;
    serde_json::to_writer(&mut w, &json!({ "header": head })).context("writing catalog")?;
    writeln!(w).context("writing catalog")?;
    let mut n = 0;
    let mut io: std::io::Result<()> = Ok(());
    let stats = stream_associate(picks.iter().copied(), &feat, linker, cfg.aggregate, |c| {
        if io.is_ok() {
            io = write_event(&mut w, n, &c, &picks, &st);
        }
        n += 1;
    })
    .context("windowing picks")?;
    io.context("writing catalog")?;
    w.flush().context("writing catalog")?;
    println!(
        "{} events from {} picks written to {} (at most {} live clusters)",
        stats.events,
        stats.picks,
        out.display(),
        stats.max_live_clusters
    );
    Ok(())
}

fn build_grid(cfg: &RunConfig, st: &[Station]) -> anyhow::Result<TravelTimeGrid> {
    Ok(TravelTimeGrid::build(&cfg.region, &cfg.grid.spec(), st, &velocity_model(cfg)?)?)
}

fn cmd_grid(cfg: &RunConfig, a: &GridArgs) -> Outcome {
    let st = stations(cfg)?;
    let picks = load_picks(cfg, &st)?;
    let grid = build_grid(cfg, &st)?;
    let events = grid_associate(&picks, &grid, &cfg.grid.params());
    let cat = to_catalog(&events);
    let out = a.out.clone().unwrap_or_else(|| cfg.output_dir().join("grid_catalog.jsonl"));
    let head = json!({ "run": header(cfg, "grid"), "linker": "grid", "nodes": grid.nodes().len() });
    write_catalog(create(&out)?, &cat, &picks, &st, head)?;
    println!("{} events written to {}", cat.events.len(), out.display());
    Ok(())
}

/// Truth clusters from the event ids of sorted picks.
fn truth_clusters(picks: &[Pick]) -> Vec<Vec<usize>> {
    let mut by_event: std::collections::BTreeMap<u32, Vec<usize>> = Default::default();
    for (i, p) in picks.iter().enumerate() {
        if let Some(e) = p.event {
            by_event.entry(e).or_default().push(i);
        }
    }
    by_event.into_values().collect()
}

fn cmd_eval(cfg: &RunConfig, a: &EvalArgs) -> Outcome {
    let st = stations(cfg)?;
    let picks = load_picks(cfg, &st)?;
    let truth = truth_clusters(&picks);
    if truth.is_empty() {
        return Err(Failure::Usage(vec!["the pick file has no event ids to score against".into()]));
    }
    let cpath = cfg.paths.catalog.as_ref().expect("validated");
    let file = File::open(cpath).with_context(|| format!("opening {}", cpath.display()))?;
    let (cat, cat_header): (Catalog, _) =
        read_catalog(BufReader::new(file), picks.len()).with_context(|| format!("reading {}", cpath.display()))?;
    let m = score_catalog(&cat, &truth);
    let dir = cfg.output_dir();
    let summary = json!({
        "header": header(cfg, "eval"),
        "catalog_header": cat_header,
        "metrics": m,
    });
    write_json(&dir.join(format!("{}.json", a.name)), &summary)?;
    let mut w = csv_out(&dir.join(format!("{}.csv", a.name)), cfg, "eval")?;
    let row = seislink::eval::SweepRow { n_min: cfg.aggregate.n_min, metrics: m };
    write_sweep_csv(&mut w, &[row])?;
    if a.sweep {
        let rows = pr_sweep(&cat, &truth, 8..=20);
        let mut w = csv_out(&dir.join(format!("{}_sweep.csv", a.name)), cfg, "eval --sweep")?;
        write_sweep_csv(&mut w, &rows)?;
    }
    println!(
        "events: precision {:.4} recall {:.4}; phases: precision {:.4} recall {:.4} ({} detected, {} true)",
        m.event_precision, m.event_recall, m.phase_precision, m.phase_recall, m.detected, m.truth
    );
    Ok(())
}

fn cmd_stress(cfg: &RunConfig, a: &StressArgs) -> Outcome {
    let st = stations(cfg)?;
    let gen = generator(cfg, &st)?;
    let model = match &cfg.paths.checkpoint {
        Some(p) => Some(load_checkpoint(p, cfg.synth.n_p)?),
        None => None,
    };
    let mut linkers = vec![Linker::Oracle];
    if let Some(m) = &model {
        linkers.push(Linker::Model { model: m, threshold: cfg.threshold });
    }
    let grid = if a.no_grid { None } else { Some(build_grid(cfg, &st)?) };
    let region = cfg.region.inset_km(cfg.stress.event_inset_km).context("event region")?;
    let scfg = StressConfig {
        gaps: cfg.stress.gaps.clone(),
        n_events: cfg.stress.n_events,
        seed: cfg.seed,
        agg: cfg.aggregate,
        scan: cfg.stress.scan,
        grid: cfg.grid.params(),
    };
    let rows = stress_test(&gen, &region, &linkers, grid.as_ref(), &scfg).context("stress sweep")?;
    let dir = cfg.output_dir();
    let mut w = csv_out(&dir.join("stress.csv"), cfg, "stress")?;
    write_stress_csv(&mut w, &rows)?;
    write_json(&dir.join("stress.json"), &json!({ "header": header(cfg, "stress"), "rows": rows }))?;
    for r in &rows {
        println!(
            "{:<7} max gap {:>6.1}s  mean gap {:>6.2}s  P {:.3}  R {:.3}",
            r.associator, r.max_gap_s, r.mean_gap_s, r.metrics.event_precision, r.metrics.event_recall
        );
    }
    Ok(())
}

fn cmd_plot(cfg: &RunConfig, a: &PlotArgs) -> Outcome {
    if a.stress.is_none() && a.sweep.is_none() && a.log.is_none() {
        return Err(Failure::Usage(vec!["plot needs at least one of --stress, --sweep, --log".into()]));
    }
    let missing: Vec<String> = [&a.stress, &a.sweep, &a.log]
        .into_iter()
        .flatten()
        .filter(|p| !p.is_file())
        .map(|p| format!("{} does not exist", p.display()))
        .collect();
    if !missing.is_empty() {
        return Err(Failure::Usage(missing));
    }
    let dir = cfg.output_dir();
    let mut written = Vec::new();
    if let Some(p) = &a.stress {
        for metric in ["event_precision", "event_recall"] {
            let out = dir.join(format!("stress_{metric}.svg"));
            plot::stress(p, metric, &out)?;
            written.push(out);
        }
    }
    if let Some(p) = &a.sweep {
        let out = dir.join("sweep.svg");
        plot::sweep(p, &out)?;
        written.push(out);
    }
    if let Some(p) = &a.log {
        let out = dir.join("train_log.svg");
        plot::training_log(p, &out)?;
        written.push(out);
    }
    for p in written {
        println!("wrote {}", p.display());
    }
    Ok(())
}
