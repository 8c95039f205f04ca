use std::path::{Path, PathBuf};

use clap::Args;
use oa_som::dataset::{
    self, generate_synthetic, ingest, read_features, read_model, read_params, stratified_split,
    write_features, write_model, write_params, DatasetManifest, LabeledSample, SkippedFile,
    SyntheticSpec,
};
use oa_som::features::{minmax_apply, minmax_fit, DEFAULT_BINS};
use oa_som::imaging::{WORKING_HEIGHT, WORKING_WIDTH};
use oa_som::pipeline::process;
use oa_som::som::{self, DEFAULT_ALPHA0, DEFAULT_EPOCHS};
use oa_som::{
    ColorImage, ContrastSetting, Label, NormalizationParams, PipelineSettings, SomConfig,
};

use crate::error::{CliError, CliResult};
use crate::report::{render_training, EvaluationReport};

const DEFAULT_SEED: u64 = 7;

/// Parses `--contrast`: a positive factor or `auto`.
pub fn parse_contrast(raw: &str) -> Result<ContrastSetting, String> {
    if raw.eq_ignore_ascii_case("auto") {
        return Ok(ContrastSetting::auto());
    }
    let factor: f64 = raw
        .parse()
        .map_err(|_| format!("expected a number or 'auto', got {raw:?}"))?;
    if !(factor > 0.0 && factor.is_finite()) {
        return Err("contrast factor must be positive".into());
    }
    Ok(ContrastSetting::fixed(factor))
}

fn with_extension(path: &Path, suffix: &str) -> PathBuf {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    path.with_file_name(format!("{stem}{suffix}"))
}

fn create_dir(dir: &Path) -> CliResult<()> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

fn write_text(path: &Path, text: &str) -> CliResult<()> {
    std::fs::write(path, text).map_err(|e| CliError::io(path, e))
}

#[derive(Debug, Clone, Args)]
pub struct SynthArgs {
    /// Output directory; images land in `normal/` and `sick/` below it.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 12)]
    pub count_normal: usize,
    #[arg(long, default_value_t = 30)]
    pub count_sick: usize,
    #[arg(long, default_value_t = WORKING_WIDTH)]
    pub width: u32,
    #[arg(long, default_value_t = WORKING_HEIGHT)]
    pub height: u32,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SynthOutcome {
    pub normal_dir: PathBuf,
    pub sick_dir: PathBuf,
    pub written: usize,
}

pub fn cmd_synth(args: &SynthArgs) -> CliResult<SynthOutcome> {
    if args.width == 0 || args.height == 0 {
        return Err(CliError::Usage(
            "width and height must be at least 1".into(),
        ));
    }
    let spec = SyntheticSpec {
        count_normal: args.count_normal,
        count_sick: args.count_sick,
        width: args.width,
        height: args.height,
        seed: args.seed,
    };
    let normal_dir = args.out.join("normal");
    let sick_dir = args.out.join("sick");
    create_dir(&normal_dir)?;
    create_dir(&sick_dir)?;
    let images = generate_synthetic(&spec);
    let mut index = [0usize; 2];
    for (img, label) in &images {
        let (dir, prefix) = match label {
            Label::Normal => (&normal_dir, "normal"),
            Label::Sick => (&sick_dir, "sick"),
        };
        let i = &mut index[*label as usize];
        img.save_png(dir.join(format!("{prefix}_{i:03}.png")))?;
        *i += 1;
    }
    Ok(SynthOutcome {
        normal_dir,
        sick_dir,
        written: images.len(),
    })
}

#[derive(Debug, Clone, Args)]
pub struct ExtractArgs {
    #[arg(long)]
    pub normal: PathBuf,
    #[arg(long)]
    pub sick: PathBuf,
    #[arg(long, default_value_t = DEFAULT_BINS)]
    pub bins: usize,
    /// Contrast factor, or `auto` to stretch the brightest pixel to 255.
    #[arg(long, default_value = "1.2", value_parser = parse_contrast)]
    pub contrast: ContrastSetting,
    /// Normalized feature file.
    #[arg(long)]
    pub out: PathBuf,
    /// Reuse previously fitted min-max parameters instead of fitting new ones.
    #[arg(long)]
    pub params: Option<PathBuf>,
    /// Where to write fitted min-max parameters [default: <out stem>.minmax.txt].
    #[arg(long)]
    pub params_out: Option<PathBuf>,
    /// Hold out a stratified test split and write it here.
    #[arg(long)]
    pub test_out: Option<PathBuf>,
    /// Fraction of each class kept for training when `--test-out` is given.
    #[arg(long, default_value_t = 2.0 / 3.0)]
    pub train_fraction: f64,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub split_seed: u64,
    #[arg(long, default_value_t = 1.0)]
    pub upper: f64,
    #[arg(long, default_value_t = 0.0)]
    pub lower: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExtractOutcome {
    pub written: usize,
    pub test_written: usize,
    pub dims: usize,
    pub params_path: PathBuf,
    pub skipped: Vec<SkippedFile>,
}

fn normalize(
    samples: &[LabeledSample],
    params: &NormalizationParams,
) -> CliResult<Vec<LabeledSample>> {
    samples
        .iter()
        .map(|s| {
            Ok(LabeledSample::new(
                minmax_apply(&s.features, params)?,
                s.label,
            ))
        })
        .collect()
}

pub fn cmd_extract(args: &ExtractArgs) -> CliResult<ExtractOutcome> {
    let settings = PipelineSettings {
        width: WORKING_WIDTH,
        height: WORKING_HEIGHT,
        contrast: args.contrast,
        bins: args.bins,
    };
    oa_som::features::validate_bins(args.bins)?;
    let report = ingest(&DatasetManifest::new(&args.normal, &args.sick), &settings)?;

    let (train, test) = match &args.test_out {
        Some(_) => stratified_split(&report.samples, args.train_fraction, args.split_seed)?,
        None => (report.samples.clone(), Vec::new()),
    };

    let (params, params_path) = match &args.params {
        Some(path) => (read_params(path)?, path.clone()),
        None => {
            let fitted_on = if train.is_empty() {
                &report.samples
            } else {
                &train
            };
            let params = minmax_fit(
                &fitted_on
                    .iter()
                    .map(|s| s.features.clone())
                    .collect::<Vec<_>>(),
                args.upper,
                args.lower,
            )?;
            let path = args
                .params_out
                .clone()
                .unwrap_or_else(|| with_extension(&args.out, ".minmax.txt"));
            write_params(&path, &params)?;
            (params, path)
        }
    };

    let train = normalize(&train, &params)?;
    write_features(&args.out, args.bins, &train)?;
    let test = normalize(&test, &params)?;
    if let Some(path) = &args.test_out {
        write_features(path, args.bins, &test)?;
    }
    Ok(ExtractOutcome {
        written: train.len(),
        test_written: test.len(),
        dims: args.bins + 2,
        params_path,
        skipped: report.skipped,
    })
}

#[derive(Debug, Clone, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub features: PathBuf,
    #[arg(long, default_value_t = DEFAULT_EPOCHS)]
    pub epochs: usize,
    #[arg(long, default_value_t = DEFAULT_ALPHA0)]
    pub lr: f64,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    #[arg(long, default_value_t = som::DEFAULT_CLUSTERS)]
    pub clusters: usize,
    #[arg(long)]
    pub out: PathBuf,
    /// Also write the training report to this file.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub report: EvaluationReport,
    pub text: String,
    pub epochs_run: usize,
}

pub fn cmd_train(args: &TrainArgs) -> CliResult<TrainOutcome> {
    let file = read_features(&args.features)?;
    let (xs, labels) = dataset::unzip(&file.samples);
    let config = SomConfig::new(file.dims)
        .with_clusters(args.clusters)
        .with_epochs(args.epochs)
        .with_alpha0(args.lr)
        .with_seed(args.seed);
    let (mut model, trace) = som::train(&xs, config)?;
    model.assign_labels(&xs, &labels)?;
    write_model(&args.out, &model)?;
    let report = EvaluationReport::evaluate(&model, &file.samples)?;
    let text = render_training(&model, &trace, &report);
    if let Some(path) = &args.report {
        write_text(path, &text)?;
    }
    Ok(TrainOutcome {
        report,
        text,
        epochs_run: model.trained_epochs(),
    })
}

#[derive(Debug, Clone, Args)]
pub struct TestArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Feature file normalized with the training set's min-max parameters.
    #[arg(long)]
    pub features: PathBuf,
    /// Text report; the per-sample CSV goes next to it as `<stem>.csv`.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone)]
pub struct TestOutcome {
    pub report: EvaluationReport,
    pub text: String,
    pub csv_path: PathBuf,
    pub summary_path: PathBuf,
}

pub fn cmd_test(args: &TestArgs) -> CliResult<TestOutcome> {
    let model = read_model(&args.model)?;
    let file = read_features(&args.features)?;
    if file.dims != model.dims() {
        return Err(oa_som::Error::DimensionMismatch {
            expected: model.dims(),
            actual: file.dims,
        }
        .into());
    }
    if file.samples.is_empty() {
        return Err(oa_som::Error::NoSamples.into());
    }
    let report = EvaluationReport::evaluate(&model, &file.samples)?;
    let text = report.render_text("Testing results");
    let csv_path = with_extension(&args.out, ".csv");
    let summary_path = with_extension(&args.out, ".summary.csv");
    write_text(&args.out, &text)?;
    write_text(&csv_path, &report.render_csv())?;
    write_text(&summary_path, &report.render_summary_csv())?;
    Ok(TestOutcome {
        report,
        text,
        csv_path,
        summary_path,
    })
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    /// Working directory for images, feature files, model and reports.
    #[arg(long)]
    pub out: PathBuf,
    /// Seed for image synthesis, the train/test split and weight initialisation.
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    #[arg(long, default_value_t = 12)]
    pub count_normal: usize,
    #[arg(long, default_value_t = 30)]
    pub count_sick: usize,
    #[arg(long, default_value_t = DEFAULT_BINS)]
    pub bins: usize,
    #[arg(long, default_value = "1.2", value_parser = parse_contrast)]
    pub contrast: ContrastSetting,
    #[arg(long, default_value_t = DEFAULT_EPOCHS)]
    pub epochs: usize,
    #[arg(long, default_value_t = DEFAULT_ALPHA0)]
    pub lr: f64,
    #[arg(long, default_value_t = 2.0 / 3.0)]
    pub train_fraction: f64,
}

impl RunArgs {
    pub fn with_defaults(out: impl Into<PathBuf>, seed: u64) -> Self {
        Self {
            out: out.into(),
            seed,
            count_normal: 12,
            count_sick: 30,
            bins: DEFAULT_BINS,
            contrast: ContrastSetting::default(),
            epochs: DEFAULT_EPOCHS,
            lr: DEFAULT_ALPHA0,
            train_fraction: 2.0 / 3.0,
        }
    }
}

/// Files produced by `run`, relative to its output directory.
pub struct RunPaths {
    pub images: PathBuf,
    pub train_features: PathBuf,
    pub test_features: PathBuf,
    pub params: PathBuf,
    pub model: PathBuf,
    pub train_report: PathBuf,
    pub report: PathBuf,
}

impl RunPaths {
    pub fn new(root: &Path) -> Self {
        Self {
            images: root.join("images"),
            train_features: root.join("train_features.txt"),
            test_features: root.join("test_features.txt"),
            params: root.join("minmax.txt"),
            model: root.join("model.txt"),
            train_report: root.join("train_report.txt"),
            report: root.join("report.txt"),
        }
    }
}

pub struct RunOutcome {
    pub paths: RunPaths,
    pub train: TrainOutcome,
    pub test: TestOutcome,
    pub skipped: Vec<SkippedFile>,
}

/// synth -> extract (with stratified split) -> train -> test.
pub fn cmd_run(args: &RunArgs) -> CliResult<RunOutcome> {
    create_dir(&args.out)?;
    let paths = RunPaths::new(&args.out);
    let synth = cmd_synth(&SynthArgs {
        out: paths.images.clone(),
        count_normal: args.count_normal,
        count_sick: args.count_sick,
        width: WORKING_WIDTH,
        height: WORKING_HEIGHT,
        seed: args.seed,
    })?;
    let extract = cmd_extract(&ExtractArgs {
        normal: synth.normal_dir,
        sick: synth.sick_dir,
        bins: args.bins,
        contrast: args.contrast,
        out: paths.train_features.clone(),
        params: None,
        params_out: Some(paths.params.clone()),
        test_out: Some(paths.test_features.clone()),
        train_fraction: args.train_fraction,
        split_seed: args.seed,
        upper: 1.0,
        lower: 0.0,
    })?;
    let train = cmd_train(&TrainArgs {
        features: paths.train_features.clone(),
        epochs: args.epochs,
        lr: args.lr,
        seed: args.seed,
        clusters: som::DEFAULT_CLUSTERS,
        out: paths.model.clone(),
        report: Some(paths.train_report.clone()),
    })?;
    let test = cmd_test(&TestArgs {
        model: paths.model.clone(),
        features: paths.test_features.clone(),
        out: paths.report.clone(),
    })?;
    Ok(RunOutcome {
        paths,
        train,
        test,
        skipped: extract.skipped,
    })
}

#[derive(Debug, Clone, Args)]
pub struct HistogramArgs {
    #[arg(long)]
    pub image: PathBuf,
    #[arg(long, default_value_t = DEFAULT_BINS)]
    pub bins: usize,
    #[arg(long, default_value = "1.2", value_parser = parse_contrast)]
    pub contrast: ContrastSetting,
    /// CSV with `bin,probability` rows.
    #[arg(long)]
    pub out: PathBuf,
    /// Also save the enhanced grayscale image and the threshold mask as PNG here.
    #[arg(long)]
    pub dump_dir: Option<PathBuf>,
}

pub fn cmd_histogram(args: &HistogramArgs) -> CliResult<f64> {
    let settings = PipelineSettings {
        contrast: args.contrast,
        bins: args.bins,
        ..PipelineSettings::default()
    };
    let img = ColorImage::open(&args.image)?;
    let processed = process(&img, &settings, &args.image.to_string_lossy())?;
    let hist = oa_som::features::histogram(&processed.gray, &processed.mask, args.bins)?;
    let mut csv = String::from("bin,probability\n");
    for (i, p) in hist.bins.iter().enumerate() {
        csv.push_str(&format!("{i},{p:.16e}\n"));
    }
    write_text(&args.out, &csv)?;
    if let Some(dir) = &args.dump_dir {
        create_dir(dir)?;
        processed.gray.save_png(dir.join("gray.png"))?;
        processed.mask.save_png(dir.join("mask.png"))?;
    }
    Ok(processed.threshold)
}

#[cfg(test)]
mod tests {
    use super::*;
    use oa_som::ContrastMode;

    #[test]
    fn contrast_flag() {
        assert_eq!(parse_contrast("auto").unwrap().mode, ContrastMode::Auto);
        assert_eq!(parse_contrast("1.5").unwrap(), ContrastSetting::fixed(1.5));
        assert!(parse_contrast("0").is_err());
        assert!(parse_contrast("x").is_err());
    }

    #[test]
    fn sibling_paths() {
        assert_eq!(
            with_extension(Path::new("/a/report.txt"), ".csv"),
            PathBuf::from("/a/report.csv")
        );
        assert_eq!(
            with_extension(Path::new("feat.txt"), ".minmax.txt"),
            PathBuf::from("feat.minmax.txt")
        );
    }
}
