//! `nucleosim` — synthetic microscopy dataset generator and analysis CLI.
//!
//! Exit codes: 0 = success, 1 = input error, 2 = partial failures.

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use nucleosim_core::batch::{generate_dataset, DatasetConfig};
use nucleosim_core::biomarker::{
    csv_document, extract_all, BiomarkerVector, PixelCalibration, CSV_HEADER,
};
use nucleosim_core::geometry::TissueClass;
use nucleosim_core::io::{
    atomic_write, read_image_png, read_manifest, read_mask_png, verify_manifest, Sidecar,
    VerifyIssue,
};
use nucleosim_core::metrics::{overlap_metrics, sensitivity_analysis, sensitivity_csv};
use nucleosim_core::render::{FieldSample, Modality};
use nucleosim_core::stats::{bootstrap_ci, population_report, report_csv};
use nucleosim_core::StreamRng;
use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

#[derive(Parser)]
#[command(name = "nucleosim", version, about = "Physics-inspired synthetic microscopy datasets")]
struct Cli {
    /// Master seed for all stochastic stages.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads (0 or 1 = sequential).
    #[arg(long, global = true, default_value_t = 1)]
    workers: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a dataset (images, masks, sidecars, manifest).
    Generate(GenerateArgs),
    /// Re-hash every file listed in a dataset manifest.
    Verify {
        /// Dataset root containing manifest.json.
        #[arg(long)]
        dir: PathBuf,
    },
    /// Extract per-nucleus biomarkers from a generated dataset.
    Extract {
        /// Dataset root.
        #[arg(long)]
        dataset: PathBuf,
        /// Output CSV path.
        #[arg(long)]
        out: PathBuf,
    },    /// Evaluate predicted masks against ground truth.
    Evaluate {
        /// Directory of predicted mask PNGs.
        #[arg(long)]
        pred: PathBuf,
        /// Directory of ground-truth mask PNGs.
        #[arg(long)]
        truth: PathBuf,
        /// Output CSV path.
        #[arg(long)]
        out: PathBuf,
    },
    /// Population statistics report from a biomarker CSV.
    Report {
        /// Biomarker CSV (output of `extract`).
        #[arg(long)]
        input: PathBuf,
        /// Output directory for population_report.{csv,json}.
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
        #[arg(long, default_value_t = 10000)]
        resamples: usize,
    },
    /// Mask-perturbation sensitivity table.
    Sensitivity {
        /// Dataset root.
        #[arg(long)]
        dataset: PathBuf,
        /// Output CSV path.
        #[arg(long)]
        out: PathBuf,
        /// Comma-separated positive offsets (each emits ± rows).
        #[arg(long, value_delimiter = ',')]
        offsets: Option<Vec<u32>>,
        /// Cap on the number of images analyzed (in path order).
        #[arg(long)]
        limit: Option<usize>,
    },
}

#[derive(Args)]
struct GenerateArgs {
    /// Imaging modality: adversarial | cspws | he.
    #[arg(long)]
    modality: Modality,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    /// JSON config file; CLI flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    train: Option<usize>,
    #[arg(long)]
    val: Option<usize>,
    #[arg(long)]
    test: Option<usize>,
    #[arg(long)]
    image_size: Option<usize>,
    /// Fraction of dysplasia-class images (default 0.5 for cspws, else 0).
    #[arg(long)]
    class_mix: Option<f64>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    match cli.command {
        Command::Generate(args) => cmd_generate(args, cli.seed, cli.workers),
        Command::Verify { dir } => cmd_verify(&dir),
        Command::Extract { dataset, out } => cmd_extract(&dataset, &out, cli.workers),
        Command::Evaluate { pred, truth, out } => cmd_evaluate(&pred, &truth, &out, cli.seed),
        Command::Report { input, out, alpha, resamples } => {
            cmd_report(&input, &out, alpha, resamples, cli.seed)
        }
        Command::Sensitivity { dataset, out, offsets, limit } => {
            cmd_sensitivity(&dataset, &out, offsets, limit)
        }
    }
}

// ---------------------------------------------------------------------------
// generate

fn cmd_generate(args: GenerateArgs, seed: u64, workers: usize) -> anyhow::Result<ExitCode> {
    let mut config = match &args.config {
        Some(path) => {
            let bytes = std::fs::read(path)
                .with_context(|| format!("reading config {}", path.display()))?;
            serde_json::from_slice::<DatasetConfig>(&bytes)
                .with_context(|| format!("parsing config {}", path.display()))?
        }
        None => DatasetConfig::new(args.modality, seed),
    };
    config.modality = args.modality;
    config.master_seed = seed;
    let mut counts = config.counts;
    if let Some(t) = args.train {
        counts.train = t;
    }
    if let Some(v) = args.val {
        counts.val = v;
    }
    if let Some(t) = args.test {
        counts.test = t;
    }
    config.counts = counts;
    if let Some(s) = args.image_size {
        config.image_size = s;
    }
    if let Some(m) = args.class_mix {
        config.class_mix = Some(m);
    }

    let start = Instant::now();
    let outcome = generate_dataset(&config, &args.out, workers)?;
    let n = config.counts.total();
    eprintln!(
        "generated {} images ({} files) in {:.1}s",
        n - outcome.failures.len(),
        outcome.manifest.files.len(),
        start.elapsed().as_secs_f64()
    );
    if outcome.failures.is_empty() {
        Ok(ExitCode::SUCCESS)
    } else {
        for (idx, msg) in &outcome.failures {
            eprintln!("image {idx}: {msg}");
        }
        Ok(ExitCode::from(2))
    }
}

// ---------------------------------------------------------------------------
// verify

fn cmd_verify(dir: &Path) -> anyhow::Result<ExitCode> {
    let issues = verify_manifest(dir)?;
    if issues.is_empty() {
        println!("ok");
        return Ok(ExitCode::SUCCESS);
    }
    for issue in &issues {
        match issue {
            VerifyIssue::Missing { path } => eprintln!("missing: {path}"),
            VerifyIssue::HashMismatch { path, expected, actual } => {
                eprintln!("hash mismatch: {path} (expected {expected}, got {actual})")
            }
        }
    }
    Ok(ExitCode::from(2))
}

// ---------------------------------------------------------------------------
// dataset loading shared by extract/sensitivity

fn dataset_image_ids(dataset: &Path) -> anyhow::Result<Vec<String>> {
    let manifest = read_manifest(dataset)?;
    let ids: BTreeSet<String> = manifest
        .files
        .iter()
        .filter(|f| f.path.contains("/img_") && f.path.ends_with(".png"))
        .map(|f| f.path.trim_end_matches(".png").to_string())
        .collect();
    if ids.is_empty() {
        bail!("dataset {} lists no images", dataset.display());
    }
    Ok(ids.into_iter().collect())
}

fn load_sample(dataset: &Path, image_id: &str) -> anyhow::Result<FieldSample> {
    let mask_id = image_id.replace("/img_", "/mask_");
    let meta_id = image_id.replace("/img_", "/meta_");
    let image = read_image_png(&dataset.join(format!("{image_id}.png")))?;
    let mask = read_mask_png(&dataset.join(format!("{mask_id}.png")))?;
    let sidecar: Sidecar =
        serde_json::from_slice(&std::fs::read(dataset.join(format!("{meta_id}.json")))?)?;
    Ok(FieldSample { image, mask, meta: sidecar.meta })
}

// ---------------------------------------------------------------------------
// extract

fn cmd_extract(dataset: &Path, out: &Path, workers: usize) -> anyhow::Result<ExitCode> {
    let ids = dataset_image_ids(dataset)?;
    let calibration = PixelCalibration::default();
    let start = Instant::now();
    let one = |id: &String| -> anyhow::Result<(String, Vec<BiomarkerVector>)> {
        let sample = load_sample(dataset, id).with_context(|| format!("loading {id}"))?;
        Ok((id.clone(), extract_all(&sample, &calibration)?))
    };
    // ids are sorted, so the row order (and output bytes) never depend
    // on the worker count
    #[cfg(feature = "parallel")]
    let rows: Vec<(String, Vec<BiomarkerVector>)> = if workers > 1 {
        use rayon::prelude::*;
        let pool = rayon::ThreadPoolBuilder::new().num_threads(workers).build()?;
        pool.install(|| ids.par_iter().map(one).collect::<anyhow::Result<_>>())?
    } else {
        ids.iter().map(one).collect::<anyhow::Result<_>>()?
    };
    #[cfg(not(feature = "parallel"))]
    let rows: Vec<(String, Vec<BiomarkerVector>)> = {
        let _ = workers;
        ids.iter().map(one).collect::<anyhow::Result<_>>()?
    };
    let nuclei: usize = rows.iter().map(|(_, v)| v.len()).sum();
    let flagged_rows: usize = rows
        .iter()
        .map(|(_, v)| v.iter().filter(|b| !b.flags.is_empty()).count())
        .sum();
    let doc = csv_document(&rows);
    atomic_write(out, doc.as_bytes())?;
    let dt = start.elapsed().as_secs_f64();
    eprintln!(
        "extracted {nuclei} nuclei from {} images in {dt:.1}s ({:.0} nuclei/s)",
        ids.len(),
        nuclei as f64 / dt.max(1e-9)
    );
    if flagged_rows > 0 {
        eprintln!("{flagged_rows} rows carry estimator flags");
    }
    Ok(ExitCode::SUCCESS)
}

// ---------------------------------------------------------------------------
// evaluate

fn png_stems(dir: &Path) -> anyhow::Result<BTreeSet<String>> {
    let mut stems = BTreeSet::new();
    for entry in std::fs::read_dir(dir).with_context(|| format!("reading {}", dir.display()))? {
        let path = entry?.path();
        if path.extension().and_then(|e| e.to_str()) == Some("png") {
            stems.insert(path.file_stem().unwrap().to_string_lossy().into_owned());
        }
    }
    Ok(stems)
}

fn cmd_evaluate(pred: &Path, truth: &Path, out: &Path, seed: u64) -> anyhow::Result<ExitCode> {
    let pred_set = png_stems(pred)?;
    let truth_set = png_stems(truth)?;
    if pred_set != truth_set {
        let only_pred: Vec<_> = pred_set.difference(&truth_set).collect();
        let only_truth: Vec<_> = truth_set.difference(&pred_set).collect();
        bail!("file sets differ; only in pred: {only_pred:?}; only in truth: {only_truth:?}");
    }
    if pred_set.is_empty() {
        bail!("no PNG masks found in {}", pred.display());
    }
    let mut doc = String::from("image_id,dice,iou,precision,recall\n");
    let mut dices = Vec::new();
    let mut ious = Vec::new();
    let mut precisions = Vec::new();
    let mut recalls = Vec::new();
    for stem in &pred_set {
        let p = read_mask_png(&pred.join(format!("{stem}.png")))?;
        let t = read_mask_png(&truth.join(format!("{stem}.png")))?;
        let pb: Vec<bool> = p.labels().iter().map(|&l| l > 0).collect();
        let tb: Vec<bool> = t.labels().iter().map(|&l| l > 0).collect();
        let m = overlap_metrics(&pb, &tb)?;
        doc.push_str(&format!(
            "{stem},{:.6},{:.6},{:.6},{:.6}\n",
            m.dice, m.iou, m.precision, m.recall
        ));
        dices.push(m.dice);
        ious.push(m.iou);
        precisions.push(m.precision);
        recalls.push(m.recall);
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let sd = |v: &[f64]| {
        if v.len() < 2 {
            return 0.0;
        }
        let m = mean(v);
        (v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (v.len() - 1) as f64).sqrt()
    };
    let median = |v: &[f64]| {
        let mut s = v.to_vec();
        s.sort_by(|a, b| a.partial_cmp(b).unwrap());
        if s.len() % 2 == 1 {
            s[s.len() / 2]
        } else {
            0.5 * (s[s.len() / 2 - 1] + s[s.len() / 2])
        }
    };
    doc.push_str(&format!(
        "__mean__,{:.6},{:.6},{:.6},{:.6}\n",
        mean(&dices),
        mean(&ious),
        mean(&precisions),
        mean(&recalls)
    ));
    doc.push_str(&format!(
        "__sd__,{:.6},{:.6},{:.6},{:.6}\n",
        sd(&dices),
        sd(&ious),
        sd(&precisions),
        sd(&recalls)
    ));
    doc.push_str(&format!(
        "__median__,{:.6},{:.6},{:.6},{:.6}\n",
        median(&dices),
        median(&ious),
        median(&precisions),
        median(&recalls)
    ));
    if dices.len() >= 2 {
        let rng = StreamRng::new(seed, 0xC1);
        let (lo, hi) = bootstrap_ci(&dices, 10000, 0.95, &rng)?;
        doc.push_str(&format!("__dice_ci95__,{lo:.6},{hi:.6},nan,nan\n"));
    }
    atomic_write(out, doc.as_bytes())?;
    println!(
        "mean dice {:.4}, iou {:.4} over {} images",
        mean(&dices),
        mean(&ious),
        dices.len()
    );
    Ok(ExitCode::SUCCESS)
}

// ---------------------------------------------------------------------------
// report

fn parse_biomarker_csv(path: &Path) -> anyhow::Result<Vec<BiomarkerVector>> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))?;
    let mut lines = text.lines();
    let header = lines.next().context("empty CSV")?;
    if header != CSV_HEADER {
        bail!("unexpected CSV header; expected '{CSV_HEADER}'");
    }
    let parse_opt = |s: &str| -> anyhow::Result<Option<f64>> {
        if s == "nan" {
            Ok(None)
        } else {
            Ok(Some(s.parse::<f64>()?))
        }
    };
    let mut out = Vec::new();
    for (lineno, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 13 {
            bail!("line {}: expected 13 fields, got {}", lineno + 2, fields.len());
        }
        let tissue_class = match fields[2] {
            "normal" => TissueClass::Normal,
            "dysplasia" => TissueClass::Dysplasia,
            other => bail!("line {}: unknown tissue class '{other}'", lineno + 2),
        };
        out.push(BiomarkerVector {
            nucleus_id: fields[1].parse()?,
            tissue_class,
            area_px2: parse_opt(fields[3])?,
            area_um2: parse_opt(fields[4])?,
            perimeter_px: parse_opt(fields[5])?,
            circularity: parse_opt(fields[6])?,
            eccentricity: parse_opt(fields[7])?,
            sigma_intensity: parse_opt(fields[8])?,
            variance_slope: parse_opt(fields[9])?,
            packing_dimension: parse_opt(fields[10])?,
            entropy_bits: parse_opt(fields[11])?,
            flags: if fields[12].is_empty() {
                Vec::new()
            } else {
                fields[12].split(';').map(str::to_string).collect()
            },
        });
    }
    Ok(out)
}

fn cmd_report(
    input: &Path,
    out: &Path,
    alpha: f64,
    resamples: usize,
    seed: u64,
) -> anyhow::Result<ExitCode> {
    let vectors = parse_biomarker_csv(input)?;
    let rng = StreamRng::new(seed, 0x9E);
    let report = population_report(&vectors, alpha, resamples, &rng)?;
    std::fs::create_dir_all(out)?;
    atomic_write(&out.join("population_report.csv"), report_csv(&report).as_bytes())?;
    let mut json = serde_json::to_vec_pretty(&report)?;
    json.push(b'\n');
    atomic_write(&out.join("population_report.json"), &json)?;
    eprintln!("wrote population report ({} metrics) to {}", report.rows.len(), out.display());
    Ok(ExitCode::SUCCESS)
}

// ---------------------------------------------------------------------------
// sensitivity

fn cmd_sensitivity(
    dataset: &Path,
    out: &Path,
    offsets: Option<Vec<u32>>,
    limit: Option<usize>,
) -> anyhow::Result<ExitCode> {
    let mut ids = dataset_image_ids(dataset)?;
    if let Some(n) = limit {
        ids.truncate(n);
    }
    let mut samples = Vec::with_capacity(ids.len());
    for id in &ids {
        samples.push(load_sample(dataset, id).with_context(|| format!("loading {id}"))?);
    }
    let mut table = sensitivity_analysis(&samples, &PixelCalibration::default())?;
    if let Some(keep) = offsets {
        for &k in &keep {
            if !(1..=5).contains(&k) {
                bail!("offsets must be in 1..=5, got {k}");
            }
        }
        table.rows.retain(|r| r.offset == 0 || keep.contains(&(r.offset.unsigned_abs())));
    }
    atomic_write(out, sensitivity_csv(&table).as_bytes())?;
    eprintln!("wrote sensitivity table ({} rows) to {}", table.rows.len(), out.display());
    Ok(ExitCode::SUCCESS)
}
