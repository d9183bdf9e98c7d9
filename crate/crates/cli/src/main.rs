use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};

use stmnist::dataset::{
    describe_generation, manifest_path, read_dataset, DatasetMeta, DatasetReader, DatasetWriter,
};
use stmnist::eval::{diff_reports, evaluate, export_grids, export_report, EvalReport, Metric, ReportFormat};
use stmnist::mnist::{load_pool, MnistSplit};
use stmnist::predictions::{read_predictions, PredictionError, Task};
use stmnist::rf::{coverage_map, format_coverage, format_rf_table, parse_arch_spec, preset, PRESET_NAMES};
use stmnist::video::{generate_batch, is_valid_pair, GenOptions, FRAME_COUNT, FRAME_SIDE, MAX_BLINK, MAX_SPEED};

/// Exit 1 for data/domain failures, 2 for usage and parse failures.
#[derive(Debug)]
enum CliError {
    Usage(String),
    Data(anyhow::Error),
}

impl From<anyhow::Error> for CliError {
    fn from(e: anyhow::Error) -> Self {
        CliError::Data(e)
    }
}

type CliResult = Result<(), CliError>;

#[derive(Parser)]
#[command(name = "stmnist", version, about = "Blinking quadrant-masked moving-MNIST benchmark toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a dataset split from local MNIST files.
    Generate(GenerateArgs),
    /// Print receptive fields per layer for a preset or an arch file.
    Analyze(AnalyzeArgs),
    /// Score a prediction file against a dataset manifest.
    Evaluate(EvaluateArgs),
    /// Print one sample's labels, schedule and optionally its frames.
    Inspect(InspectArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum SplitArg {
    Train,
    Test,
}

#[derive(Args)]
struct GenerateArgs {
    /// Directory containing the IDX files (raw or .gz).
    #[arg(long, env = "STMNIST_MNIST_DIR")]
    mnist_dir: PathBuf,
    /// Which MNIST split seeds the digits.
    #[arg(long, value_enum, default_value = "train")]
    mnist_split: SplitArg,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    count: u64,
    /// Name of the dataset split; files are <out>/<split>.smnv and <out>/<split>.manifest.toml.
    #[arg(long, default_value = "train")]
    split: String,
    /// Show the whole digit on visible frames.
    #[arg(long)]
    no_mask: bool,
    #[arg(long)]
    fixed_s: Option<u8>,
    #[arg(long)]
    fixed_v: Option<u8>,
    /// Worker threads (default: all cores). Output does not depend on this.
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Args)]
struct AnalyzeArgs {
    /// Preset name or path to an arch spec file.
    #[arg(long)]
    arch: String,
    /// Also print the (S, V) first-coverage grid.
    #[arg(long)]
    coverage: bool,
}

#[derive(Args)]
struct EvaluateArgs {
    /// Dataset manifest (<split>.manifest.toml).
    #[arg(long)]
    dataset: PathBuf,
    #[arg(long)]
    predictions: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Second prediction file; difference grids favour it when positive.
    #[arg(long)]
    compare: Option<PathBuf>,
}

#[derive(Args)]
struct InspectArgs {
    #[arg(long)]
    dataset: PathBuf,
    #[arg(long)]
    sample: u64,
    /// Render visible frames as character art.
    #[arg(long)]
    ascii: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Generate(a) => generate(a),
        Command::Analyze(a) => analyze(a),
        Command::Evaluate(a) => evaluate_cmd(a),
        Command::Inspect(a) => inspect(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Data(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

const CHUNK: u64 = 256;

fn generate(a: GenerateArgs) -> CliResult {
    if a.count == 0 {
        return Err(CliError::Usage("--count must be at least 1".into()));
    }
    if let Some(s) = a.fixed_s {
        if !(1..=MAX_SPEED).contains(&s) {
            return Err(CliError::Usage(format!("--fixed-s {s} outside 1..={MAX_SPEED}")));
        }
    }
    if let Some(v) = a.fixed_v {
        if !(1..=MAX_BLINK).contains(&v) {
            return Err(CliError::Usage(format!("--fixed-v {v} outside 1..={MAX_BLINK}")));
        }
    }
    if let (Some(s), Some(v)) = (a.fixed_s, a.fixed_v) {
        if !is_valid_pair(s, v) {
            return Err(CliError::Usage(format!(
                "--fixed-s {s} --fixed-v {v}: S*V = {} must be below 50",
                s as u32 * v as u32
            )));
        }
    }
    let options = GenOptions {
        fixed_speed: a.fixed_s,
        fixed_blink: a.fixed_v,
        masking: !a.no_mask,
    };
    let split = match a.mnist_split {
        SplitArg::Train => MnistSplit::Train,
        SplitArg::Test => MnistSplit::Test,
    };
    let pool = load_pool(&a.mnist_dir, split).context("loading MNIST")?;
    std::fs::create_dir_all(&a.out).with_context(|| format!("creating {}", a.out.display()))?;

    let meta = DatasetMeta {
        master_seed: a.seed,
        split_name: a.split.clone(),
        generation: describe_generation(&options, &pool, &format!("mnist-{}", split.name())),
    };
    let data_path = stmnist::dataset::data_path(&a.out, &a.split);
    let file = std::fs::File::create(&data_path).with_context(|| format!("creating {}", data_path.display()))?;
    let mut writer = DatasetWriter::new(std::io::BufWriter::new(file)).map_err(anyhow::Error::from)?;

    let workers = match a.threads {
        Some(n) => rayon::ThreadPoolBuilder::new().num_threads(n).build(),
        None => rayon::ThreadPoolBuilder::new().build(),
    }
    .map_err(|e| anyhow!(e))?;
    let mut start = 0;
    while start < a.count {
        let end = (start + CHUNK).min(a.count);
        let batch = workers
            .install(|| generate_batch(a.seed, start..end, &pool, &options))
            .map_err(anyhow::Error::from)?;
        for s in &batch {
            writer.push(s).map_err(anyhow::Error::from)?;
        }
        start = end;
    }
    let file_name = data_path.file_name().unwrap().to_string_lossy().into_owned();
    let (_, manifest) = writer.finish(&meta, &file_name).map_err(anyhow::Error::from)?;
    let mpath = manifest_path(&a.out, &a.split);
    stmnist::dataset::write_manifest(&mpath, &manifest).map_err(anyhow::Error::from)?;

    let mut cells: BTreeMap<(u8, u8), u64> = BTreeMap::new();
    for e in &manifest.samples {
        *cells.entry((e.speed_label, e.blink_v)).or_default() += 1;
    }
    println!("wrote {} samples to {}", manifest.sample_count, data_path.display());
    println!("manifest {}", mpath.display());
    println!("samples per (S, V):");
    print!("{}", count_grid(&cells));
    println!("sha256 {}", manifest.data_sha256);
    Ok(())
}

fn count_grid(cells: &BTreeMap<(u8, u8), u64>) -> String {
    let mut out = String::from("S\\V");
    for v in 1..=MAX_BLINK {
        out.push_str(&format!(" {v:>5}"));
    }
    out.push('\n');
    for s in 1..=MAX_SPEED {
        out.push_str(&format!("{s:<3}"));
        for v in 1..=MAX_BLINK {
            let cell = if is_valid_pair(s, v) {
                cells.get(&(s, v)).copied().unwrap_or(0).to_string()
            } else {
                String::new()
            };
            out.push_str(&format!(" {cell:>5}"));
        }
        out.push('\n');
    }
    out
}

fn analyze(a: AnalyzeArgs) -> CliResult {
    let arch = match preset(&a.arch) {
        Ok(arch) => arch,
        Err(_) if Path::new(&a.arch).is_file() => {
            let text = std::fs::read_to_string(&a.arch)
                .with_context(|| format!("reading {}", a.arch))?;
            parse_arch_spec(&text).map_err(|e| CliError::Usage(format!("{}: {e}", a.arch)))?
        }
        Err(e) => {
            return Err(CliError::Usage(format!(
                "{e}; expected one of {} or an arch file",
                PRESET_NAMES.join(", ")
            )))
        }
    };
    print!("{}", format_rf_table(&arch));
    if a.coverage {
        println!();
        print!("{}", format_coverage(&coverage_map(&arch, 1..=MAX_SPEED, 1..=MAX_BLINK)));
    }
    Ok(())
}

fn load_predictions(path: &Path) -> Result<Vec<stmnist::predictions::PredictionRecord>, CliError> {
    read_predictions(path).map_err(|e| match e {
        PredictionError::Io(io) => CliError::Data(anyhow!("reading {}: {io}", path.display())),
        e => CliError::Usage(format!("{}: {e}", path.display())),
    })
}

fn single_report(reports: Vec<EvalReport>, path: &Path) -> Result<EvalReport, CliError> {
    let n = reports.len();
    let mut it = reports.into_iter();
    match (it.next(), n) {
        (Some(r), 1) => Ok(r),
        _ => Err(CliError::Usage(format!(
            "{}: --compare needs exactly one model per file, found {n}",
            path.display()
        ))),
    }
}

fn export_all(report: &EvalReport, out: &Path) -> anyhow::Result<()> {
    let m = &report.model_name;
    export_report(report, &out.join(format!("{m}.report.toml")), ReportFormat::StructuredText)?;
    export_report(report, &out.join(format!("{m}.grids.csv")), ReportFormat::Csv)?;
    Ok(())
}

fn print_summary(r: &EvalReport) {
    let mut parts = Vec::new();
    for (task, metric) in [
        (Task::Digit, Metric::Accuracy),
        (Task::Order, Metric::Accuracy),
        (Task::Speed, Metric::Mae),
        (Task::Speed, Metric::RoundedAccuracy),
    ] {
        if let Some(g) = r.grid(task, metric) {
            let overall = g.overall.map_or("n/a".to_string(), |x| format!("{x:.4}"));
            let cells = g.cell_mean.map_or("n/a".to_string(), |x| format!("{x:.4}"));
            parts.push(format!("{task} {} {overall} (cell mean {cells}, n={})", metric.as_str(), g.total_count()));
        }
    }
    println!("{}: {}", r.model_name, parts.join("; "));
}

fn evaluate_cmd(a: EvaluateArgs) -> CliResult {
    let reader = read_dataset(&a.dataset).map_err(anyhow::Error::from)?;
    let manifest = reader.manifest();
    let preds = load_predictions(&a.predictions)?;
    let reports = evaluate(manifest, &preds).map_err(anyhow::Error::from)?;
    std::fs::create_dir_all(&a.out).with_context(|| format!("creating {}", a.out.display()))?;
    for r in &reports {
        for w in r.warnings() {
            eprintln!("warning: {w}");
        }
        export_all(r, &a.out)?;
        print_summary(r);
    }
    if let Some(other) = &a.compare {
        let first = single_report(reports, &a.predictions)?;
        let other_preds = load_predictions(other)?;
        let second_reports = evaluate(manifest, &other_preds).map_err(anyhow::Error::from)?;
        let second = single_report(second_reports, other)?;
        for w in second.warnings() {
            eprintln!("warning: {w}");
        }
        let diffs = diff_reports(&first, &second).map_err(anyhow::Error::from)?;
        let stem = format!("diff_{}_vs_{}", first.model_name, second.model_name);
        export_grids(&diffs, &a.out.join(format!("{stem}.csv")), ReportFormat::Csv).map_err(anyhow::Error::from)?;
        export_grids(&diffs, &a.out.join(format!("{stem}.toml")), ReportFormat::StructuredText)
            .map_err(anyhow::Error::from)?;
        for d in &diffs {
            let overall = d.overall.map_or("n/a".to_string(), |x| format!("{x:+.4}"));
            println!(
                "diff {} {} ({} better when positive): {overall}",
                d.task,
                d.metric.as_str(),
                second.model_name
            );
        }
    }
    Ok(())
}

const RAMP: &[u8] = b" .:-=+*#%@";

fn ascii_frame(frame: &[u8]) -> String {
    let mut out = String::with_capacity((FRAME_SIDE + 1) * FRAME_SIDE);
    for row in frame.chunks_exact(FRAME_SIDE) {
        out.extend(row.iter().map(|&p| RAMP[p as usize * (RAMP.len() - 1) / 255] as char));
        out.push('\n');
    }
    out
}

fn inspect(a: InspectArgs) -> CliResult {
    let reader: DatasetReader = read_dataset(&a.dataset).map_err(anyhow::Error::from)?;
    let sample = reader.get(a.sample).map_err(anyhow::Error::from)?;
    let p = &sample.params;
    let sched = sample.schedule();
    let masking = reader.manifest().gen_options().masking;
    println!("sample {}", sample.sample_id);
    println!("digit {}", sample.digit_label);
    println!("order_class {}", p.order_class);
    println!("speed {}", p.speed);
    println!("blink {}", p.blink);
    println!("direction {}", p.direction);
    println!("start {} {}", p.start[0], p.start[1]);
    println!("digit_index {}", p.digit_index);
    println!("masking {}", if masking { "on" } else { "off" });
    let frames: Vec<String> = sched.visible_frames.iter().map(usize::to_string).collect();
    println!("visible_frames {}", frames.join(","));
    let quads: Vec<String> = sched.quadrant_at.iter().map(u8::to_string).collect();
    println!("quadrant_sequence {}", quads.join(","));
    let impacts: Vec<String> = sample.trajectory.impact_frames.iter().map(usize::to_string).collect();
    println!("impact_frames {}", impacts.join(","));
    if a.ascii {
        for t in 0..FRAME_COUNT {
            if let Some(q) = sched.quadrant_for_frame(t) {
                let (x, y) = sample.trajectory.pixel_position(t);
                println!("\nframe {t} quadrant {q} at ({x}, {y})");
                print!("{}", ascii_frame(sample.frame(t)));
            }
        }
    }
    Ok(())
}
