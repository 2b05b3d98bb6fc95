use std::path::{Path, PathBuf};
use std::time::Instant;

use facebench_core::bench::{
    load_scenes, read_mean_table, resolution_sweep, run_benchmark, score_bench_run,
    summarize_by_face_count, write_boxplot_csv, write_samples_csv, write_scores_csv,
    write_speedup_csv, write_stats_csv, BenchConfig, BenchFile, FaceCount, MeanRow, Resolution,
    RunLength, Scene, StatsRow,
};
use facebench_core::blazeface::{BlazeFaceModel, BlazeKind};
use facebench_core::cascade::{load_cascade, FeatureKind};
use facebench_core::detectors::{bundled_models_dir, load_detector, model_paths, Algorithm, FaceDetector};
use facebench_core::hog::{load_svm, svm_to_bytes, train_hog_detector, HogConfig, HogTrainOptions};
use facebench_core::imaging::io::load_image;
use facebench_core::imaging::resize_bilinear;
use facebench_core::mtcnn::MtcnnModels;
use facebench_core::Error as CoreError;

use crate::error::{CliError, CliResult};
use crate::{ModelArgs, SuiteArgs};

const MODELS_ENV: &str = "FD_MODELS_DIR";

fn models_dir(args: &ModelArgs) -> PathBuf {
    args.models
        .clone()
        .or_else(|| std::env::var_os(MODELS_ENV).map(PathBuf::from))
        .unwrap_or_else(bundled_models_dir)
}

fn check_models(algo: Algorithm, dir: &Path) -> CliResult<()> {
    for p in model_paths(algo, dir) {
        if !p.is_file() {
            return Err(CliError::ModelLoad(format!("{algo}: model file {} not found", p.display())));
        }
    }
    Ok(())
}

fn load(algo: Algorithm, dir: &Path) -> CliResult<Box<dyn FaceDetector>> {
    check_models(algo, dir)?;
    load_detector(algo, dir).map_err(CliError::model)
}

fn warn(msg: &str) {
    eprintln!("warning: {msg}");
}

fn out_file(dir: &Path, name: &str) -> CliResult<PathBuf> {
    std::fs::create_dir_all(dir)
        .map_err(|e| CliError::BadArguments(format!("{}: {e}", dir.display())))?;
    Ok(dir.join(name))
}

fn write_json<T: serde::Serialize + ?Sized>(path: &Path, value: &T) -> CliResult<()> {
    let text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::BadArguments(e.to_string()))?;
    std::fs::write(path, text + "\n")
        .map_err(|e| CliError::BadArguments(format!("{}: {e}", path.display())))
}

pub fn detect(
    algo: Algorithm,
    input: &Path,
    size: Option<Resolution>,
    json: Option<&Path>,
    models: &ModelArgs,
) -> CliResult<()> {
    if !input.is_file() {
        return Err(CliError::ImageRead(format!("{}: no such file", input.display())));
    }
    let det = load(algo, &models_dir(models))?;
    let img = load_image(input).map_err(CliError::image)?;
    let mut size = size;
    if let (Some(requested), Some((w, h))) = (size, det.native_resolution()) {
        warn(&format!("{algo} only runs at {w}x{h}; ignoring --size {requested}"));
        size = None;
    }
    let frame = match size {
        Some(r) => resize_bilinear(&img, r.w, r.h)?,
        None => img.clone(),
    };
    let start = Instant::now();
    let found = det.detect(&frame)?;
    let ms = start.elapsed().as_secs_f64() * 1e3;
    let sx = img.width() as f64 / frame.width() as f64;
    let sy = img.height() as f64 / frame.height() as f64;
    let found: Vec<_> = found.iter().map(|d| d.scaled(sx, sy)).collect();
    let summary = format!("{} face(s) in {ms:.2} ms ({algo}, {}x{})", found.len(), frame.width(), frame.height());
    match json {
        Some(path) => {
            write_json(path, &found)?;
            println!("{summary}");
        }
        None => {
            let text = serde_json::to_string_pretty(&found)
                .map_err(|e| CliError::BadArguments(e.to_string()))?;
            println!("{text}");
            eprintln!("{summary}");
        }
    }
    Ok(())
}

struct Suite {
    file: BenchFile,
    scenes: Vec<Scene>,
    detectors: Vec<Box<dyn FaceDetector>>,
}

impl Suite {
    fn detector_refs(&self) -> Vec<&dyn FaceDetector> {
        self.detectors.iter().map(|d| d.as_ref()).collect()
    }

    fn config(&self, args: &SuiteArgs, resolution: Option<Resolution>) -> CliResult<BenchConfig> {
        let mut cfg = self.file.bench_config(resolution)?;
        match (args.iterations, args.duration_ms) {
            (Some(_), Some(_)) => {
                return Err(CliError::BadArguments(
                    "--iterations and --duration-ms are mutually exclusive".into(),
                ))
            }
            (Some(n), None) => cfg.run = RunLength::Iterations(n),
            (None, Some(ms)) => cfg.run = RunLength::Duration(std::time::Duration::from_millis(ms)),
            (None, None) => {}
        }
        if let Some(w) = args.warmup {
            cfg.warmup_iterations = w;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Reads the suite, then checks every scene and model path before loading
/// anything.
fn load_suite(args: &SuiteArgs) -> CliResult<Suite> {
    let file = BenchFile::load(&args.config).map_err(|e| match e {
        CoreError::Io { path, source } => {
            CliError::BadArguments(format!("{}: {source}", path.display()))
        }
        e => CliError::BadArguments(e.to_string()),
    })?;
    let algos = if args.algos.is_empty() {
        file.algorithms()?
    } else {
        args.algos.clone()
    };
    let specs = file.scene_specs();
    for s in &specs {
        if !s.path.is_file() {
            return Err(CliError::ImageRead(format!("scene {}: {} not found", s.id, s.path.display())));
        }
    }
    let dir = models_dir(&args.models);
    for &a in &algos {
        check_models(a, &dir)?;
    }
    let scenes = load_scenes(&specs).map_err(CliError::image)?;
    let detectors = algos
        .iter()
        .map(|&a| load(a, &dir))
        .collect::<CliResult<Vec<_>>>()?;
    Ok(Suite { file, scenes, detectors })
}

fn print_stats(rows: &[StatsRow], budget_ms: f64) {
    println!(
        "{:<16} {:>9} {:>5} {:>6} {:>10} {:>9} {:>10}  realtime",
        "algorithm", "size", "faces", "n", "mean_ms", "sd_ms", "median_ms"
    );
    for r in rows {
        let rt = if r.face_count == FaceCount::All {
            if r.stats.mean <= budget_ms { "yes" } else { "no" }
        } else {
            ""
        };
        println!(
            "{:<16} {:>9} {:>5} {:>6} {:>10.3} {:>9.3} {:>10.3}  {rt}",
            r.algorithm,
            r.resolution.to_string(),
            r.face_count.to_string(),
            r.stats.n,
            r.stats.mean,
            r.stats.sd,
            r.stats.median
        );
    }
}

pub fn bench(args: &SuiteArgs, resolution: Option<Resolution>) -> CliResult<()> {
    let suite = load_suite(args)?;
    let cfg = suite.config(args, resolution)?;
    let run = run_benchmark(&cfg, &suite.scenes, &suite.detector_refs())?;
    for n in &run.notices {
        warn(n);
    }
    if run.samples.is_empty() {
        return Err(CliError::EmptySamples("benchmark produced no samples".into()));
    }
    let rows = summarize_by_face_count(&run.samples, suite.file.aggregation);
    write_samples_csv(out_file(&args.out, "samples.csv")?, &run.samples)?;
    write_stats_csv(out_file(&args.out, "stats.csv")?, &rows)?;
    write_boxplot_csv(out_file(&args.out, "boxplot.csv")?, &rows)?;
    write_json(&out_file(&args.out, "detections.json")?, &run.detections)?;
    print_stats(&rows, cfg.realtime_budget_ms);
    Ok(())
}

pub fn sweep(args: &SuiteArgs, resolutions: &[Resolution]) -> CliResult<()> {
    let suite = load_suite(args)?;
    let resolutions = if resolutions.is_empty() {
        suite.file.resolutions.clone()
    } else {
        resolutions.to_vec()
    };
    if resolutions.is_empty() {
        return Err(CliError::BadArguments(
            "no resolutions: pass --resolutions or set them in the suite".into(),
        ));
    }
    let cfg = suite.config(args, Some(resolutions[0]))?;
    let mut samples = Vec::new();
    for det in suite.detector_refs() {
        let r = resolution_sweep(det, &resolutions, &suite.scenes, &cfg, suite.file.aggregation)?;
        for n in &r.notices {
            warn(n);
        }
        samples.extend(r.samples);
    }
    if samples.is_empty() {
        return Err(CliError::EmptySamples("sweep produced no samples".into()));
    }
    let rows = summarize_by_face_count(&samples, suite.file.aggregation);
    write_samples_csv(out_file(&args.out, "samples.csv")?, &samples)?;
    write_stats_csv(out_file(&args.out, "stats.csv")?, &rows)?;
    write_boxplot_csv(out_file(&args.out, "boxplot.csv")?, &rows)?;
    print_stats(&rows, cfg.realtime_budget_ms);
    Ok(())
}

pub fn score(args: &SuiteArgs, resolutions: &[Resolution]) -> CliResult<()> {
    let suite = load_suite(args)?;
    let resolutions = match (resolutions.is_empty(), suite.file.resolutions.is_empty(), suite.file.resolution) {
        (false, _, _) => resolutions.to_vec(),
        (true, false, _) => suite.file.resolutions.clone(),
        (true, true, Some(r)) => vec![r],
        (true, true, None) => {
            return Err(CliError::BadArguments("no resolution to score at".into()))
        }
    };
    let mut cards = Vec::new();
    for res in resolutions {
        // detections are deterministic, one untimed-warmup-free pass is enough
        let mut cfg = suite.config(args, Some(res))?;
        cfg.run = RunLength::Iterations(1);
        cfg.warmup_iterations = 0;
        let run = run_benchmark(&cfg, &suite.scenes, &suite.detector_refs())?;
        for n in &run.notices {
            warn(n);
        }
        cards.extend(score_bench_run(&run, &suite.scenes)?);
    }
    write_scores_csv(out_file(&args.out, "scores.csv")?, &cards)?;
    println!("{:<16} {:>9}  empty  large  small  points", "algorithm", "size");
    let mark = |b: bool| if b { "yes" } else { "no" };
    for c in &cards {
        println!(
            "{:<16} {:>9}  {:>5}  {:>5}  {:>5}  {:>6}",
            c.algorithm,
            c.resolution.to_string(),
            mark(c.no_false_positives),
            mark(c.finds_one_large),
            mark(c.finds_two_small),
            c.points
        );
    }
    Ok(())
}

pub fn compare(a: &Path, b: &Path, column_a: &str, column_b: &str, out: &Path) -> CliResult<()> {
    let read = |p: &Path, col: &str| -> CliResult<Vec<MeanRow>> {
        read_mean_table(p, col).map_err(|e| match e {
            CoreError::EmptySamples(m) => CliError::EmptySamples(m),
            e => CliError::BadArguments(e.to_string()),
        })
    };
    let rows = facebench_core::bench::compare_runs(&read(a, column_a)?, &read(b, column_b)?)?;
    write_speedup_csv(out, &rows)?;
    println!("{:<16} {:>10} {:>10} {:>8}", "algorithm", "mean_a_ms", "mean_b_ms", "speedup");
    for r in &rows {
        println!(
            "{:<16} {:>10.3} {:>10.3} {:>8.2}",
            r.algorithm, r.mean_a_ms, r.mean_b_ms, r.rounded()
        );
    }
    Ok(())
}

fn describe(algo: Algorithm, dir: &Path) -> CliResult<String> {
    check_models(algo, dir)?;
    let paths = model_paths(algo, dir);
    Ok(match algo {
        Algorithm::Haar | Algorithm::Lbp => {
            let m = load_cascade(&paths[0]).map_err(CliError::model)?;
            let kind = match m.feature_kind() {
                FeatureKind::Haar => "Haar",
                FeatureKind::MbLbp => "MB-LBP",
            };
            format!(
                "{kind} cascade, window {}x{}, {} stages, {} weak classifiers, {} features",
                m.window_w,
                m.window_h,
                m.stages.len(),
                m.weak_count(),
                m.features.len()
            )
        }
        Algorithm::Hog => {
            let m = load_svm(&paths[0]).map_err(CliError::model)?;
            let cfg = HogConfig::default();
            format!(
                "linear SVM, window {0}x{0}, {1} weights, threshold {2}",
                cfg.window,
                m.weights.len(),
                m.threshold
            )
        }
        Algorithm::Mtcnn => {
            let m = MtcnnModels::load_dir(dir).map_err(CliError::model)?;
            format!(
                "P/R/O-Net with {}/{}/{} parameters",
                m.pnet.parameter_count(),
                m.rnet.parameter_count(),
                m.onet.parameter_count()
            )
        }
        Algorithm::BlazeFaceFront | Algorithm::BlazeFaceRear => {
            let kind = if algo == Algorithm::BlazeFaceFront { BlazeKind::Front } else { BlazeKind::Rear };
            let m = BlazeFaceModel::load(kind, &paths[0]).map_err(CliError::model)?;
            format!(
                "input {0}x{0}, {1} anchors, {2} parameters",
                m.variant.input_size,
                m.anchors().len(),
                m.network.parameter_count()
            )
        }
    })
}

pub fn info(algo: Option<Algorithm>, models: &ModelArgs) -> CliResult<()> {
    let dir = models_dir(models);
    println!("models: {}", dir.display());
    match algo {
        Some(a) => println!("{a}: {}", describe(a, &dir)?),
        None => {
            for a in Algorithm::ALL {
                match describe(a, &dir) {
                    Ok(text) => println!("{a}: {text}"),
                    Err(e) => println!("{a}: unavailable ({e})"),
                }
            }
        }
    }
    Ok(())
}

fn images_in(dir: &Path) -> CliResult<Vec<facebench_core::ImageBuffer>> {
    let entries = std::fs::read_dir(dir)
        .map_err(|e| CliError::ImageRead(format!("{}: {e}", dir.display())))?;
    let mut paths: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            matches!(
                p.extension().and_then(|x| x.to_str()).map(str::to_ascii_lowercase).as_deref(),
                Some("png" | "pgm" | "ppm" | "pnm")
            )
        })
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(CliError::ImageRead(format!("{}: no images", dir.display())));
    }
    paths
        .iter()
        .map(|p| load_image(p).map_err(CliError::image))
        .collect()
}

pub fn train_hog(positives: &Path, negatives: &Path, out: &Path, opts: HogTrainOptions) -> CliResult<()> {
    let pos = images_in(positives)?;
    let neg = images_in(negatives)?;
    let report = train_hog_detector(&pos, &neg, &HogConfig::default(), &opts)?;
    for w in &report.training.warnings {
        warn(w);
    }
    std::fs::write(out, svm_to_bytes(&report.training.model))
        .map_err(|e| CliError::BadArguments(format!("{}: {e}", out.display())))?;
    println!(
        "trained on {} positives, negatives per round {:?}; final objective {:.5}",
        report.positives,
        report.negatives_per_round,
        report.training.epoch_losses.last().copied().unwrap_or(f64::NAN)
    );
    Ok(())
}
