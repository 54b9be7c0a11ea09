//! The `tempocomp` command line.
//!
//! Every subcommand writes its artifacts to `--out` (default `out/`) and a
//! short report to stdout. Exit codes: 0 success, 1 usage error, 2 data,
//! format or configuration error, 3 numeric or calibration error.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::devices::Fidelity;
use crate::engine::{detect_frame, optical_frame, PhotonicEngine};
use crate::error::{Error, Result};
use crate::io::{
    decisions_to_csv, detector_to_csv, encode_pgm, encode_tcwf, flower_path, kernel_to_csv,
    load_mnist, read_detector, read_fcspec, read_pgm, resolve_data_dir, seeded_subset,
    waveform_to_csv, write_fcspec, ConfusionMatrix, MnistSplit, RunConfig,
};
use crate::nn::{
    classify, compose_scene, conv2d_photonic, digital_features, gaussian_kernel, laplacian_kernel,
    pearson, predict_digital, predict_photonic, rescale_unit, sliding_window_detect,
    train_detector_digital, train_fc_digital, ConvSpec, DetectionSpec, DetectorTrainConfig, FcSpec,
    FeaturePath, Placement, TrainConfig,
};
use crate::oracle::conv2d_digital;
use crate::signal::ImageTensor;
use crate::wdm::{execute_plan, format_ops, plan_matmul, throughput_estimate};

#[derive(Debug, Parser)]
#[command(
    name = "tempocomp",
    version,
    about = "Temporal photonic computing simulator"
)]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct GlobalArgs {
    /// JSON run configuration; unknown keys are rejected.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Master seed for noise, training and sampling.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Enable or disable all impairments.
    #[arg(long, global = true, value_enum)]
    noise: Option<Switch>,
    #[arg(long, global = true, value_enum)]
    fidelity: Option<FidelityArg>,
    /// Output directory.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Dataset directory (overrides the config and TEMPOCOMP_DATA_DIR).
    #[arg(long, global = true, value_name = "DIR")]
    data_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Switch {
    On,
    Off,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FidelityArg {
    Linearized,
    Physical,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FeatureArg {
    Digital,
    Photonic,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Stage {
    Data,
    DataDrive,
    WeightDrive,
    Modulated,
    Upper,
    Lower,
    Photocurrent,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum DumpFormat {
    Tcwf,
    Csv,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Laplacian edge map of an image, photonic versus digital.
    EdgeDetect {
        /// Binary PGM input (default: the shipped 92x92 image).
        #[arg(long)]
        image: Option<PathBuf>,
    },
    /// Train the conv + FC digit classifier digitally.
    MnistTrain(TrainArgs),
    /// Classify a seeded test subset on the photonic engine.
    MnistInfer {
        /// fcspec CSV; trained on the fly when absent.
        #[arg(long)]
        weights: Option<PathBuf>,
        #[arg(long, default_value_t = 100)]
        samples: usize,
        /// Where the convolution layer runs.
        #[arg(long, value_enum, default_value = "photonic")]
        features: FeatureArg,
        #[command(flatten)]
        train: TrainArgs,
    },
    /// Sliding-window digit detection on a 68x68 scene.
    Detect {
        /// Detector CSV; trained on the fly when absent.
        #[arg(long)]
        weights: Option<PathBuf>,
        /// Scene PGM; by default digits 0, 4 and 8 are composed on the grid.
        #[arg(long)]
        image: Option<PathBuf>,
        #[arg(long, value_delimiter = ',', default_value = "0,4,8")]
        classes: Vec<u8>,
    },
    /// Two digits classified concurrently on two wavelengths.
    WdmDemo {
        #[arg(long)]
        weights: Option<PathBuf>,
        #[arg(long, default_value_t = 2)]
        wavelengths: usize,
        /// Demultiplexer crosstalk in dB (omit for an ideal demux).
        #[arg(long, allow_hyphen_values = true)]
        crosstalk_db: Option<f64>,
        #[command(flatten)]
        train: TrainArgs,
    },
    /// Print the channel plan of an M x N by L x N product as JSON.
    Plan {
        #[arg(long)]
        m: usize,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        l: usize,
        #[arg(long, default_value_t = 1)]
        wavelengths: usize,
        #[arg(long, default_value_t = 1)]
        spatial: usize,
        #[arg(long, allow_hyphen_values = true)]
        crosstalk_db: Option<f64>,
    },
    /// Throughput of a fully occupied channel grid.
    Bench {
        #[arg(long, default_value_t = 50e9)]
        symbol_rate: f64,
        #[arg(long, default_value_t = 1)]
        wavelengths: usize,
        #[arg(long, default_value_t = 1)]
        spatial: usize,
        /// Vector length per frame.
        #[arg(long, default_value_t = 784)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        guard_symbols: usize,
    },
    /// Run the synchronization and gain calibration.
    Calibrate,
    /// Dump one stage of a simulated frame.
    DumpWaveform {
        #[arg(long, value_enum, default_value = "photocurrent")]
        stage: Stage,
        #[arg(long, value_enum, default_value = "tcwf")]
        format: DumpFormat,
        /// Comma-separated data vector in [0, 1]; random when absent.
        #[arg(long, value_delimiter = ',')]
        data: Option<Vec<f64>>,
        /// Comma-separated weights in [-1, 1]; random when absent.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        weights: Option<Vec<f64>>,
        /// Length of the random vectors.
        #[arg(long, default_value_t = 16)]
        n: usize,
    },
}

#[derive(Debug, Clone, Copy, Args)]
struct TrainArgs {
    #[arg(long, default_value_t = TrainConfig::default().epochs)]
    epochs: usize,
    #[arg(long, default_value_t = TrainConfig::default().learning_rate)]
    learning_rate: f64,
}

struct Ctx {
    run: RunConfig,
    data_dir: PathBuf,
    out: PathBuf,
}

impl Ctx {
    fn engine(&self) -> Result<PhotonicEngine> {
        PhotonicEngine::calibrated(self.run.engine_config())
    }

    fn write(&self, name: &str, bytes: impl AsRef<[u8]>) -> Result<PathBuf> {
        fs::create_dir_all(&self.out)?;
        let p = self.out.join(name);
        fs::write(&p, bytes)?;
        Ok(p)
    }

    fn train_config(&self, t: &TrainArgs) -> TrainConfig {
        TrainConfig {
            epochs: t.epochs,
            learning_rate: t.learning_rate,
            rng_seed: self.run.seed,
            ..TrainConfig::default()
        }
    }
}

/// Convolution used by the digit classifier.
pub fn mnist_conv() -> ConvSpec {
    ConvSpec::same(gaussian_kernel(5, 0.7)).expect("valid kernel")
}

/// Parses `args` (including the program name), runs the subcommand and
/// returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli, &mut std::io::stdout().lock()) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn context(g: &GlobalArgs) -> Result<Ctx> {
    let mut run = match &g.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(s) = g.seed {
        run.seed = s;
    }
    if let Some(n) = g.noise {
        run.noise_enabled = matches!(n, Switch::On);
    }
    if let Some(f) = g.fidelity {
        run.engine.fidelity = match f {
            FidelityArg::Linearized => Fidelity::Linearized,
            FidelityArg::Physical => Fidelity::Physical,
        };
    }
    if let Some(o) = &g.out {
        run.out_dir = o.clone();
    }
    if let Some(d) = &g.data_dir {
        run.paths.data_dir = Some(d.clone());
    }
    run.engine.validate()?;
    Ok(Ctx {
        data_dir: resolve_data_dir(run.paths.data_dir.as_deref()),
        out: run.out_dir.clone(),
        run,
    })
}

fn dispatch(cli: Cli, out: &mut dyn Write) -> Result<()> {
    let ctx = context(&cli.global)?;
    match cli.command {
        Command::EdgeDetect { image } => edge_detect(&ctx, image, out),
        Command::MnistTrain(t) => mnist_train(&ctx, &t, out),
        Command::MnistInfer {
            weights,
            samples,
            features,
            train,
        } => mnist_infer(&ctx, weights, samples, features, &train, out),
        Command::Detect {
            weights,
            image,
            classes,
        } => detect(&ctx, weights, image, &classes, out),
        Command::WdmDemo {
            weights,
            wavelengths,
            crosstalk_db,
            train,
        } => wdm_demo(&ctx, weights, wavelengths, crosstalk_db, &train, out),
        Command::Plan {
            m,
            n,
            l,
            wavelengths,
            spatial,
            crosstalk_db,
        } => {
            let mut plan = plan_matmul(m, n, l, wavelengths, spatial)?;
            if let Some(db) = crosstalk_db {
                plan = plan.with_crosstalk(db)?;
            }
            let json = serde_json::to_string_pretty(&plan)? + "\n";
            ctx.write("plan.json", &json)?;
            write!(out, "{json}")?;
            Ok(())
        }
        Command::Bench {
            symbol_rate,
            wavelengths,
            spatial,
            n,
            guard_symbols,
        } => {
            let plan = plan_matmul(wavelengths, n, spatial, wavelengths, spatial)?;
            let ops = throughput_estimate(&plan, symbol_rate, guard_symbols)?;
            writeln!(
                out,
                "symbol_rate,wavelengths,spatial,n,guard_symbols,ops_per_second"
            )?;
            writeln!(
                out,
                "{symbol_rate},{wavelengths},{spatial},{n},{guard_symbols},{ops}"
            )?;
            writeln!(out, "{}", format_ops(ops))?;
            Ok(())
        }
        Command::Calibrate => {
            let engine = ctx.engine()?;
            let json = serde_json::to_string_pretty(&engine.cal)? + "\n";
            ctx.write("calibration.json", &json)?;
            write!(out, "{json}")?;
            Ok(())
        }
        Command::DumpWaveform {
            stage,
            format,
            data,
            weights,
            n,
        } => dump_waveform(&ctx, stage, format, data, weights, n, out),
    }
}

fn report(out: &mut dyn Write, paths: &[PathBuf]) -> Result<()> {
    for p in paths {
        writeln!(out, "wrote {}", p.display())?;
    }
    Ok(())
}

fn edge_detect(ctx: &Ctx, image: Option<PathBuf>, out: &mut dyn Write) -> Result<()> {
    let path = image
        .or_else(|| ctx.run.paths.image.clone())
        .unwrap_or_else(|| flower_path(&ctx.data_dir));
    let img = read_pgm(&path)?;
    let spec = ConvSpec::same(laplacian_kernel())?;
    let reference = rescale_unit(conv2d_digital(&img, &spec)?)?;
    let photonic = conv2d_photonic(&img, &spec, &ctx.engine()?)?;
    let corr = match pearson(
        photonic.raw.as_slice().expect("contiguous"),
        reference.raw.as_slice().expect("contiguous"),
    ) {
        Ok(r) => r.to_string(),
        // a constant map (e.g. blank input) has no defined correlation
        Err(Error::Numeric(_)) => "undefined".to_string(),
        Err(e) => return Err(e),
    };
    let written = vec![
        ctx.write("input.pgm", encode_pgm(&img))?,
        ctx.write("edges_oracle.pgm", encode_pgm(&reference.image))?,
        ctx.write("edges_photonic.pgm", encode_pgm(&photonic.image))?,
        ctx.write("correlation.csv", format!("metric,value\npearson,{corr}\n"))?,
    ];
    writeln!(out, "pearson correlation (photonic vs digital): {corr}")?;
    report(out, &written)
}

fn load_data(ctx: &Ctx) -> Result<MnistSplit> {
    load_mnist(&ctx.data_dir)
}

fn fc_weights(
    ctx: &Ctx,
    path: Option<PathBuf>,
    data: &MnistSplit,
    t: &TrainArgs,
) -> Result<FcSpec> {
    match path.or_else(|| ctx.run.paths.weights.clone()) {
        Some(p) => read_fcspec(p),
        None => train_fc_digital(
            &data.train_images,
            &data.train_labels,
            &mnist_conv(),
            &ctx.train_config(t),
        ),
    }
}

fn digital_accuracy(
    images: &[ImageTensor],
    labels: &[u8],
    conv: &ConvSpec,
    fc: &FcSpec,
) -> Result<f64> {
    let mut ok = 0usize;
    for (img, &l) in images.iter().zip(labels) {
        ok += usize::from(predict_digital(img, conv, fc)? == l as usize);
    }
    Ok(ok as f64 / images.len().max(1) as f64)
}

fn mnist_train(ctx: &Ctx, t: &TrainArgs, out: &mut dyn Write) -> Result<()> {
    let data = load_data(ctx)?;
    let conv = mnist_conv();
    let fc = train_fc_digital(
        &data.train_images,
        &data.train_labels,
        &conv,
        &ctx.train_config(t),
    )?;
    let acc = digital_accuracy(&data.test_images, &data.test_labels, &conv, &fc)?;
    fs::create_dir_all(&ctx.out)?;
    let weights = ctx.out.join("fc_weights.csv");
    write_fcspec(&fc, &weights)?;
    let kernel = ctx.write("conv_kernel.csv", kernel_to_csv(&conv.kernel))?;
    writeln!(
        out,
        "trained on {} digits; held-out digital accuracy {acc:.4} ({} digits)",
        data.train_images.len(),
        data.test_images.len()
    )?;
    report(out, &[weights, kernel])
}

fn mnist_infer(
    ctx: &Ctx,
    weights: Option<PathBuf>,
    samples: usize,
    features: FeatureArg,
    t: &TrainArgs,
    out: &mut dyn Write,
) -> Result<()> {
    let data = load_data(ctx)?;
    let conv = mnist_conv();
    let fc = fc_weights(ctx, weights, &data, t)?;
    let engine = ctx.engine()?;
    let path = match features {
        FeatureArg::Digital => FeaturePath::Digital,
        FeatureArg::Photonic => FeaturePath::Photonic,
    };
    let subset = seeded_subset(data.test_images.len(), samples, ctx.run.seed)?;
    let mut photonic = ConfusionMatrix::new(fc.n_classes());
    let mut digital = ConfusionMatrix::new(fc.n_classes());
    let mut rows = String::from("test_index,label,digital,photonic\n");
    for (k, &i) in subset.iter().enumerate() {
        let (img, label) = (&data.test_images[i], data.test_labels[i] as usize);
        let d = predict_digital(img, &conv, &fc)?;
        let (p, _) = predict_photonic(img, &conv, &fc, &engine.with_stream(k as u64), path)?;
        digital.record(label, d)?;
        photonic.record(label, p)?;
        rows.push_str(&format!("{i},{label},{d},{p}\n"));
    }
    let written = vec![
        ctx.write("confusion.csv", photonic.to_csv())?,
        ctx.write("predictions.csv", rows)?,
    ];
    writeln!(out, "digital accuracy:  {:.4}", digital.accuracy())?;
    writeln!(out, "photonic accuracy: {:.4}", photonic.accuracy())?;
    writeln!(out, "confusion matrix (rows true, columns predicted):")?;
    write!(out, "{}", photonic.to_csv())?;
    report(out, &written)
}

/// Grid cells `(digit, row, col)` of the default detection scene.
pub const DETECT_LAYOUT: [(u8, usize, usize); 3] = [(0, 2, 0), (4, 0, 3), (8, 4, 3)];

/// First held-out image of `digit`.
pub fn first_test_digit(data: &MnistSplit, digit: u8) -> Result<ImageTensor> {
    data.test_labels
        .iter()
        .position(|&l| l == digit)
        .map(|i| data.test_images[i].clone())
        .ok_or_else(|| Error::Data(format!("no held-out digit {digit}")))
}

/// Detector trained on the first 8/9 of the training split and thresholded
/// on the rest.
pub fn default_detector(data: &MnistSplit, classes: &[u8], seed: u64) -> Result<DetectionSpec> {
    let pool: Vec<(ImageTensor, u8)> = data
        .train_images
        .iter()
        .cloned()
        .zip(data.train_labels.iter().copied())
        .collect();
    let (train, calibration) = pool.split_at(pool.len() * 8 / 9);
    let mut cfg = DetectorTrainConfig::default();
    cfg.sgd.rng_seed = seed;
    train_detector_digital(train, calibration, classes, &cfg)
}

/// The 68x68 scene with each layout digit on its grid cell.
pub fn default_scene(data: &MnistSplit) -> Result<ImageTensor> {
    let placements = DETECT_LAYOUT
        .iter()
        .map(|&(d, r, c)| {
            Ok(Placement {
                image: first_test_digit(data, d)?,
                grid_row: r,
                grid_col: c,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    compose_scene(68, 10, &placements)
}

fn detect(
    ctx: &Ctx,
    weights: Option<PathBuf>,
    image: Option<PathBuf>,
    classes: &[u8],
    out: &mut dyn Write,
) -> Result<()> {
    let weights = weights.or_else(|| ctx.run.paths.weights.clone());
    let image = image.or_else(|| ctx.run.paths.image.clone());
    let data = if weights.is_none() || image.is_none() {
        Some(load_data(ctx)?)
    } else {
        None
    };
    let spec = match weights {
        Some(p) => read_detector(p)?,
        None => default_detector(data.as_ref().expect("loaded"), classes, ctx.run.seed)?,
    };
    let scene = match image {
        Some(p) => read_pgm(p)?,
        None => default_scene(data.as_ref().expect("loaded"))?,
    };
    let result = sliding_window_detect(&scene, &spec, &ctx.engine()?)?;
    let labels: Vec<String> = spec.classifiers.iter().map(|(l, _)| l.clone()).collect();
    let mut found = String::from("label,patch_index,decision_value\n");
    for d in &result.detections {
        found.push_str(&format!(
            "{},{},{}\n",
            d.label, d.patch_index, d.decision_value
        ));
    }
    let written = vec![
        ctx.write("scene.pgm", encode_pgm(&scene))?,
        ctx.write("detector.csv", detector_to_csv(&spec))?,
        ctx.write(
            "decisions.csv",
            decisions_to_csv(&result.decisions, &labels),
        )?,
        ctx.write("detections.csv", &found)?,
    ];
    writeln!(
        out,
        "{} patches scored against {} classifiers",
        result.decisions.nrows(),
        labels.len()
    )?;
    for d in &result.detections {
        writeln!(
            out,
            "digit {} at patch {} (score {:.4})",
            d.label, d.patch_index, d.decision_value
        )?;
    }
    report(out, &written)
}

/// Feature vectors of the first `count` held-out digits, with labels.
pub fn wdm_inputs(data: &MnistSplit, count: usize) -> Result<(Array2<f64>, Vec<u8>)> {
    if data.test_images.len() < count {
        return Err(Error::Data(format!("need {count} held-out digits")));
    }
    let conv = mnist_conv();
    let mut rows = Vec::with_capacity(count * 784);
    for img in &data.test_images[..count] {
        rows.extend_from_slice(digital_features(img, &conv)?.image.pixels());
    }
    let d = rows.len() / count;
    let m = Array2::from_shape_vec((count, d), rows).map_err(|e| Error::dim(e.to_string()))?;
    Ok((m, data.test_labels[..count].to_vec()))
}

fn wdm_demo(
    ctx: &Ctx,
    weights: Option<PathBuf>,
    wavelengths: usize,
    crosstalk_db: Option<f64>,
    t: &TrainArgs,
    out: &mut dyn Write,
) -> Result<()> {
    let data = load_data(ctx)?;
    let fc = fc_weights(ctx, weights, &data, t)?;
    let (inputs, labels) = wdm_inputs(&data, wavelengths)?;
    let engine = ctx.engine()?;
    let mut plan = plan_matmul(
        inputs.nrows(),
        inputs.ncols(),
        fc.n_classes(),
        wavelengths,
        1,
    )?;
    if let Some(db) = crosstalk_db {
        plan = plan.with_crosstalk(db)?;
    }
    let parallel = execute_plan(inputs.view(), fc.weights.view(), &plan, &engine)?;
    let sequential = engine.batched(inputs.view(), fc.weights.view())?;
    let deviation = parallel
        .iter()
        .zip(&sequential)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    let mut csv = String::from("wavelength,label,predicted");
    for c in &fc.class_labels {
        csv.push_str(&format!(",score_{c}"));
    }
    csv.push('\n');
    for (i, row) in parallel.rows().into_iter().enumerate() {
        let pred = classify(row.as_slice().expect("contiguous"))?;
        writeln!(
            out,
            "wavelength {i}: digit {} classified as {pred}",
            labels[i]
        )?;
        csv.push_str(&format!("{i},{},{pred}", labels[i]));
        for v in row {
            csv.push_str(&format!(",{v}"));
        }
        csv.push('\n');
    }
    writeln!(
        out,
        "max deviation from single-channel execution: {deviation:e}"
    )?;
    let written = vec![
        ctx.write("wdm_scores.csv", csv)?,
        ctx.write("plan.json", serde_json::to_string_pretty(&plan)? + "\n")?,
    ];
    report(out, &written)
}

fn dump_waveform(
    ctx: &Ctx,
    stage: Stage,
    format: DumpFormat,
    data: Option<Vec<f64>>,
    weights: Option<Vec<f64>>,
    n: usize,
    out: &mut dyn Write,
) -> Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(ctx.run.seed);
    let data = data.unwrap_or_else(|| (0..n).map(|_| rng.gen_range(0.0..=1.0)).collect());
    let weights =
        weights.unwrap_or_else(|| (0..data.len()).map(|_| rng.gen_range(-1.0..=1.0)).collect());
    if data.is_empty() {
        return Err(Error::dim("cannot dump an empty frame"));
    }
    let engine = ctx.engine()?;
    let frame = optical_frame(
        &engine.cfg,
        &data,
        &weights,
        0,
        engine.cal.found_sync_offset,
    )?;
    let wave = match stage {
        Stage::Data => frame.data,
        Stage::DataDrive => frame.data_drive,
        Stage::WeightDrive => frame.weight_drive,
        Stage::Modulated => frame.modulated,
        Stage::Upper => frame.upper,
        Stage::Lower => frame.lower,
        Stage::Photocurrent => {
            detect_frame(&engine.cfg, &frame.upper, &frame.lower, frame.n_symbols, 0)?.0
        }
    };
    let path = match format {
        DumpFormat::Tcwf => ctx.write("waveform.tcwf", encode_tcwf(&wave))?,
        DumpFormat::Csv => ctx.write("waveform.csv", waveform_to_csv(&wave))?,
    };
    writeln!(
        out,
        "{:?} waveform: {} samples at {} samples/s",
        wave.kind(),
        wave.len(),
        wave.sample_rate()
    )?;
    report(out, &[path])
}
