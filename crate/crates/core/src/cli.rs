//! `labelprop` command line: `diffuse`, `batch`, `eval`, `synth`, `inspect`.
//!
//! Exit codes: 0 success, 2 I/O or format error, 3 a class produced no
//! seeds, 4 a diffusion solve did not converge (the label map is still
//! written).

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use crate::config::PipelineConfig;
use crate::error::{Error, Result};
use crate::eval::{ConfusionMatrix, DEFAULT_IGNORE_INDEX};
use crate::imagecore::{
    load_class_table, load_fmap, load_label_png, load_label_png_with_void, load_rgb_png, save_label_png, ClassId,
    ClassTable, LabelMap,
};
use crate::labeling::ActivationSet;
use crate::pipeline::run_pipeline;
use crate::synth::{generate, SynthOptions, SynthVariant};

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 2;
pub const EXIT_NO_SEEDS: i32 = 3;
pub const EXIT_NONCONVERGENCE: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "labelprop", version, about = "Superpixel random-walk label propagation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a label map from an image, a segmentation map and activation maps.
    Diffuse(DiffuseArgs),
    /// Run `diffuse` over every line of a manifest file in parallel.
    Batch(BatchArgs),
    /// Score predicted label maps against ground truth (per-class IoU and mIoU).
    Eval(EvalArgs),
    /// Write a synthetic fixture with known ground truth.
    Synth(SynthArgs),
    /// Print width, height, min, max and mean of an FMAP file.
    Inspect(InspectArgs),
}

#[derive(Debug, Args)]
struct DiffuseArgs {
    /// RGB PNG image.
    #[arg(long)]
    image: PathBuf,
    /// Class-agnostic segmentation map (FMAP).
    #[arg(long)]
    mask: PathBuf,
    /// Activation map for one class, as `<classid>:<path>`; repeat per class.
    #[arg(long = "act", value_name = "CLASS:PATH", required = true, value_parser = parse_act)]
    acts: Vec<(ClassId, PathBuf)>,
    /// Class table (`index<TAB>name` per line).
    #[arg(long)]
    classes: PathBuf,
    /// Optional `key = value` config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output indexed PNG.
    #[arg(long)]
    out: PathBuf,
    /// Also write the effective configuration here.
    #[arg(long)]
    dump_config: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct BatchArgs {
    /// One job per line: `image<TAB>mask<TAB>out<TAB>class:path[<TAB>class:path...]`.
    /// Relative paths are resolved against the manifest's directory.
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long)]
    classes: PathBuf,
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct EvalArgs {
    /// Directory of ground-truth indexed PNGs.
    #[arg(long)]
    gt: PathBuf,
    /// Directory of predicted indexed PNGs with matching file names.
    #[arg(long)]
    pred: PathBuf,
    #[arg(long)]
    classes: PathBuf,
    /// Ground-truth label skipped during scoring.
    #[arg(long, default_value_t = DEFAULT_IGNORE_INDEX)]
    ignore: ClassId,
}

#[derive(Debug, Args)]
struct SynthArgs {
    /// Output directory (created if missing).
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// two-blob, checker or gradient.
    #[arg(long, default_value = "two-blob")]
    variant: SynthVariant,
    #[arg(long, default_value_t = 96)]
    width: usize,
    #[arg(long, default_value_t = 96)]
    height: usize,
    /// Flip probability of the segmentation map near object boundaries.
    #[arg(long, default_value_t = 0.3)]
    noise: f64,
}

#[derive(Debug, Args)]
struct InspectArgs {
    path: PathBuf,
}

fn parse_act(s: &str) -> std::result::Result<(ClassId, PathBuf), String> {
    let (id, path) = s
        .split_once(':')
        .ok_or_else(|| format!("expected `<classid>:<path>`, got `{s}`"))?;
    let id: ClassId = id.parse().map_err(|_| format!("bad class id `{id}`"))?;
    if path.is_empty() {
        return Err("empty activation path".into());
    }
    Ok((id, PathBuf::from(path)))
}

fn exit_code(err: &Error) -> i32 {
    match err {
        Error::NoSeedsForClass(_) => EXIT_NO_SEEDS,
        Error::NonConvergence { .. } => EXIT_NONCONVERGENCE,
        _ => EXIT_IO,
    }
}

/// Writes through a temporary file in the destination directory, then renames.
fn write_atomic(path: &Path, write: impl FnOnce(&Path) -> Result<()>) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let tmp = tempfile::Builder::new()
        .prefix(".labelprop-")
        .tempfile_in(dir)
        .map_err(|e| Error::io(dir, e))?;
    write(tmp.path())?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

struct DiffuseJob {
    image: PathBuf,
    mask: PathBuf,
    acts: Vec<(ClassId, PathBuf)>,
    out: PathBuf,
}

/// Runs one job. Returns the exit code and a message for stderr, if any.
fn diffuse_one(job: &DiffuseJob, classes: &ClassTable, cfg: &PipelineConfig) -> (i32, Option<String>) {
    let run = || -> Result<Vec<ClassId>> {
        let image = load_rgb_png(&job.image)?;
        let mask = load_fmap(&job.mask)?;
        let maps = job
            .acts
            .iter()
            .map(|(c, p)| load_fmap(p).map(|m| (*c, m)))
            .collect::<Result<Vec<_>>>()?;
        let acts = ActivationSet::new(maps)?;
        let out = run_pipeline(&image, &mask, &acts, classes, cfg)?;
        write_atomic(&job.out, |p| save_label_png(&out.labels, p))?;
        Ok(out.nonconverged())
    };
    match run() {
        Ok(bad) if bad.is_empty() => (EXIT_OK, None),
        Ok(bad) => (
            EXIT_NONCONVERGENCE,
            Some(format!(
                "warning: diffusion did not converge for classes {bad:?}; wrote {}",
                job.out.display()
            )),
        ),
        Err(e) => (exit_code(&e), Some(format!("error: {e}"))),
    }
}

fn load_config(path: Option<&Path>) -> Result<PipelineConfig> {
    path.map_or_else(|| Ok(PipelineConfig::default()), PipelineConfig::load)
}

fn cmd_diffuse(args: DiffuseArgs, err: &mut dyn Write) -> i32 {
    let setup = || -> Result<(ClassTable, PipelineConfig)> {
        let classes = load_class_table(&args.classes)?;
        let cfg = load_config(args.config.as_deref())?;
        if let Some((c, _)) = args.acts.iter().find(|(c, _)| *c == 0 || !classes.contains(*c)) {
            return Err(Error::InvalidActivations(format!("class {c} is not an object class of the table")));
        }
        if let Some(p) = &args.dump_config {
            std::fs::write(p, cfg.to_string()).map_err(|e| Error::io(p, e))?;
        }
        Ok((classes, cfg))
    };
    let (classes, cfg) = match setup() {
        Ok(v) => v,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return exit_code(&e);
        }
    };
    let job = DiffuseJob {
        image: args.image,
        mask: args.mask,
        acts: args.acts,
        out: args.out,
    };
    let (code, msg) = diffuse_one(&job, &classes, &cfg);
    if let Some(m) = msg {
        let _ = writeln!(err, "{m}");
    }
    code
}

fn parse_manifest(path: &Path) -> Result<Vec<DiffuseJob>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let base = path.parent().unwrap_or(Path::new("."));
    let resolve = |p: &str| base.join(p);
    let mut jobs = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        let bad = |message: String| Error::Config { line: i + 1, message };
        if fields.len() < 4 {
            return Err(bad("expected `image<TAB>mask<TAB>out<TAB>class:path...`".into()));
        }
        let acts = fields[3..]
            .iter()
            .map(|f| parse_act(f).map(|(c, p)| (c, base.join(p))))
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(bad)?;
        jobs.push(DiffuseJob {
            image: resolve(fields[0]),
            mask: resolve(fields[1]),
            out: resolve(fields[2]),
            acts,
        });
    }
    Ok(jobs)
}

fn cmd_batch(args: BatchArgs, err: &mut dyn Write) -> i32 {
    let setup = || -> Result<_> {
        Ok((
            load_class_table(&args.classes)?,
            load_config(args.config.as_deref())?,
            parse_manifest(&args.manifest)?,
        ))
    };
    let (classes, cfg, jobs) = match setup() {
        Ok(v) => v,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return EXIT_IO;
        }
    };
    let results: Vec<(i32, Option<String>)> = jobs.par_iter().map(|j| diffuse_one(j, &classes, &cfg)).collect();
    let mut worst = EXIT_OK;
    for (job, (code, msg)) in jobs.iter().zip(results) {
        if let Some(m) = msg {
            let _ = writeln!(err, "{}: {m}", job.image.display());
        }
        worst = worst.max(code);
    }
    worst
}

fn list_pngs(dir: &Path) -> Result<Vec<String>> {
    let mut names = Vec::new();
    for entry in std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let entry = entry.map_err(|e| Error::io(dir, e))?;
        let name = entry.file_name().to_string_lossy().into_owned();
        if name.ends_with(".png") && entry.path().is_file() {
            names.push(name);
        }
    }
    names.sort();
    Ok(names)
}

fn cmd_eval(args: EvalArgs, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let run = || -> Result<String> {
        let classes = load_class_table(&args.classes)?;
        let names = list_pngs(&args.gt)?;
        let pred_names = list_pngs(&args.pred)?;
        if let Some(missing) = names.iter().find(|n| pred_names.binary_search(n).is_err()) {
            return Err(Error::io(
                args.pred.join(missing),
                std::io::Error::new(std::io::ErrorKind::NotFound, "no prediction for ground-truth file"),
            ));
        }
        if names.is_empty() {
            return Err(Error::io(
                &args.gt,
                std::io::Error::new(std::io::ErrorKind::NotFound, "no PNG files to evaluate"),
            ));
        }
        let per_image = names
            .par_iter()
            .map(|name| {
                let gt: LabelMap = load_label_png_with_void(args.gt.join(name), &classes, Some(args.ignore))?;
                let pred = load_label_png(args.pred.join(name), &classes)?;
                let mut cm = ConfusionMatrix::new(classes.len());
                cm.accumulate(&gt, &pred, Some(args.ignore))?;
                Ok(cm)
            })
            .collect::<Result<Vec<_>>>()?;
        let mut total = ConfusionMatrix::new(classes.len());
        for cm in &per_image {
            total += cm;
        }
        total.report()
    };
    match run() {
        Ok(report) => {
            let _ = out.write_all(report.as_bytes());
            EXIT_OK
        }
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_IO
        }
    }
}

fn cmd_synth(args: SynthArgs, err: &mut dyn Write) -> i32 {
    let opts = SynthOptions {
        seed: args.seed,
        variant: args.variant,
        width: args.width,
        height: args.height,
        boundary_noise: args.noise,
    };
    if !(0.0..=1.0).contains(&opts.boundary_noise) || opts.width < 8 || opts.height < 8 {
        let _ = writeln!(err, "error: --noise must be in [0, 1] and the image at least 8x8");
        return EXIT_IO;
    }
    match generate(&opts).and_then(|f| f.write(&args.out)) {
        Ok(_) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_IO
        }
    }
}

fn cmd_inspect(args: InspectArgs, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    match load_fmap(&args.path) {
        Ok(map) => {
            let (min, max, mean) = map.stats();
            let _ = writeln!(out, "{} {} {:.6} {:.6} {:.6}", map.width(), map.height(), min, max, mean);
            EXIT_OK
        }
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_IO
        }
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_IO } else { EXIT_OK };
            let _ = if e.use_stderr() {
                write!(err, "{}", e.render())
            } else {
                write!(out, "{}", e.render())
            };
            return code;
        }
    };
    match cli.command {
        Command::Diffuse(a) => cmd_diffuse(a, err),
        Command::Batch(a) => cmd_batch(a, err),
        Command::Eval(a) => cmd_eval(a, out, err),
        Command::Synth(a) => cmd_synth(a, err),
        Command::Inspect(a) => cmd_inspect(a, out, err),
    }
}
