use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Duration;

use radioclass::augment::{augment_dataset, AugmentConfig};
use radioclass::datagen::{generate_corpus, SynthSpec};
use radioclass::dataset::{load_corpus, write_corpus, Dataset};
use radioclass::denoise::DenoiseConfig;
use radioclass::eval::grid::{preprocess, spectral_features, textual_features, transcript_of, Features};
use radioclass::eval::report::{
    auroc_aupr_csv, f1_mcc_csv, format_table, metric_matrix_csv, reports_from_csv, reports_to_csv, summarize,
    summary_csv, CellInfo,
};
use radioclass::eval::{evaluate, run_repeats, train_test_split, GridConfig, MetricsReport, Pipeline};
use radioclass::models::{self, FeatureSpace, ModelKind};
use radioclass::spectral::{pool_spectrogram, spectral_pipeline, write_mels, MelVariant};
use radioclass::text::{fit_tfidf, transform_tfidf, AsrProvider, HttpAsr};
use radioclass::{Error, Result};

use crate::config::{pick, require, DenoiseSettings, RunConfig};
use crate::{AsrArgs, AugmentArgs, Cli, Command, DatagenArgs, DenoiseArgs, EvalArgs, FeaturizeArgs, ReportArgs, TrainArgs};

const DEFAULT_ASR_TIMEOUT_MS: u64 = 30_000;

pub fn run(cli: Cli) -> Result<()> {
    let cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    match cli.command {
        Command::Datagen(a) => datagen(a, &cfg),
        Command::Featurize(a) => featurize(a, &cfg),
        Command::Augment(a) => augment(a, &cfg),
        Command::Train(a) => train(a, &cfg),
        Command::Evaluate(a) => evaluate_cmd(a, &cfg, false),
        Command::Ablate(a) => evaluate_cmd(a, &cfg, true),
        Command::Report(a) => report(a),
    }
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    std::fs::write(path, contents).map_err(|e| Error::io(path, e))
}

fn corpus_dir(flag: Option<PathBuf>, cfg: &RunConfig) -> Result<PathBuf> {
    let dir = require(pick(flag, &cfg.corpus_dir), "corpus")?;
    if !dir.is_dir() {
        return Err(Error::InvalidConfig(format!("corpus directory {} does not exist", dir.display())));
    }
    Ok(dir)
}

fn denoise_config(a: &DenoiseArgs, cfg: &RunConfig) -> Result<Option<DenoiseConfig>> {
    let file = cfg.denoise.clone().unwrap_or_default();
    let s = DenoiseSettings {
        enabled: file.enabled && !a.no_denoise,
        noise_frames: a.noise_frames.unwrap_or(file.noise_frames),
        smooth_width: a.smooth_width.unwrap_or(file.smooth_width),
    };
    if !s.enabled {
        return Ok(None);
    }
    if s.noise_frames == 0 {
        return Err(Error::InvalidConfig("noise frames must be at least 1".into()));
    }
    if s.smooth_width % 2 == 0 {
        return Err(Error::EvenWidth(s.smooth_width));
    }
    Ok(Some(DenoiseConfig {
        noise_frames: s.noise_frames,
        smooth_width: s.smooth_width,
        ..DenoiseConfig::default()
    }))
}

fn variant(flag: Option<String>, cfg: &RunConfig) -> Result<MelVariant> {
    pick(flag, &cfg.variant).map_or(Ok(MelVariant::LogMel), |v| v.parse())
}

fn parse_pipeline(s: &str, v: MelVariant) -> Result<Pipeline> {
    if s == "spectral" {
        Ok(Pipeline::Spectral(v))
    } else {
        s.parse()
    }
}

/// Fills missing transcripts from the configured provider. Returns the ids
/// still lacking one.
fn attach_transcripts(ds: &mut Dataset, a: &AsrArgs, cfg: &RunConfig, denoise: Option<&DenoiseConfig>) -> Result<Vec<String>> {
    let file = cfg.asr.clone().unwrap_or_default();
    let provider = pick(a.asr.clone(), &file.provider).unwrap_or_else(|| "sidecar".into());
    let strict = a.strict || cfg.strict.unwrap_or(false);
    match provider.as_str() {
        "sidecar" => {}
        "http" => {
            let endpoint = require(pick(a.asr_endpoint.clone(), &file.endpoint), "asr-endpoint")?;
            let timeout = pick(a.asr_timeout_ms, &file.timeout_ms).unwrap_or(DEFAULT_ASR_TIMEOUT_MS);
            let asr = HttpAsr::new(endpoint, Duration::from_millis(timeout));
            for ex in ds.examples.iter_mut().filter(|e| e.transcript.is_none()) {
                let clip = preprocess(&ex.clip, denoise)?;
                ex.transcript = Some(asr.transcribe_text(&clip)?);
            }
        }
        other => return Err(Error::InvalidConfig(format!("unknown ASR provider {other:?}"))),
    }
    let missing: Vec<String> = ds
        .examples
        .iter()
        .filter(|e| e.transcript.is_none())
        .map(|e| e.id().to_string())
        .collect();
    if let Some(first) = missing.first() {
        if strict {
            return Err(Error::MissingTranscript(first.clone()));
        }
        eprintln!("warning: {} clip(s) without transcript: {}", missing.len(), missing.join(" "));
    }
    Ok(missing)
}

fn datagen(a: DatagenArgs, cfg: &RunConfig) -> Result<()> {
    let mut spec = SynthSpec {
        n_clips: a.n.unwrap_or(200),
        class_balance: a.balance.unwrap_or(0.5),
        seed: pick(a.seed, &cfg.seed).unwrap_or(7),
        ..SynthSpec::default()
    };
    if let Some(level) = a.noise_level {
        spec.profile.noise_level = level;
    }
    let out = require(pick(a.out, &cfg.out), "out")?;
    let ds = generate_corpus(&spec, &out)?;
    println!(
        "wrote {} clips ({} landing, {} takeoff) to {} (seed {})",
        ds.len(),
        ds.count(radioclass::Label::Landing),
        ds.count(radioclass::Label::Takeoff),
        out.display(),
        spec.seed
    );
    Ok(())
}

fn csv_line(id: &str, label: radioclass::Label, values: &[f64]) -> String {
    let mut s = format!("{id},{label}");
    for v in values {
        let _ = write!(s, ",{v}");
    }
    s.push('\n');
    s
}

fn featurize(a: FeaturizeArgs, cfg: &RunConfig) -> Result<()> {
    let dir = corpus_dir(a.corpus, cfg)?;
    let out = require(pick(a.out, &cfg.out), "out")?;
    let (textual, spectral) = match a.pipeline.as_str() {
        "both" => (true, true),
        "textual" => (true, false),
        "spectral" => (false, true),
        other => return Err(Error::InvalidConfig(format!("unknown pipeline {other:?}"))),
    };
    let v = variant(a.variant, cfg)?;
    let dn = denoise_config(&a.denoise, cfg)?;
    let mut ds = load_corpus(&dir)?;
    std::fs::create_dir_all(&out).map_err(|e| Error::io(&out, e))?;
    if spectral {
        let mels = out.join("mels");
        std::fs::create_dir_all(&mels).map_err(|e| Error::io(&mels, e))?;
        let mut pooled = String::from("id,label");
        for k in 0..2 * radioclass::spectral::N_MELS {
            let _ = write!(pooled, ",f{k}");
        }
        pooled.push('\n');
        for ex in &ds.examples {
            let spec = spectral_pipeline(&preprocess(&ex.clip, dn.as_ref())?, v)?.cast::<f32>();
            write_mels(mels.join(format!("{}.mels", ex.id())), &spec)?;
            pooled.push_str(&csv_line(ex.id(), ex.label, &pool_spectrogram(&spec).values));
        }
        write_file(&out.join("spectral_pooled.csv"), &pooled)?;
        println!("spectral ({v}): {} spectrograms", ds.len());
    }
    if textual {
        let missing = attach_transcripts(&mut ds, &a.asr, cfg, dn.as_ref())?;
        let present: Vec<_> = ds.examples.iter().filter(|e| e.transcript.is_some()).collect();
        let docs = present
            .iter()
            .map(|e| transcript_of(e, true))
            .collect::<Result<Vec<_>>>()?;
        let model = fit_tfidf(&docs)?;
        write_file(&out.join("tfidf.json"), &model.to_json()?)?;
        let mut vectors = String::from("id,label");
        let mut terms: Vec<(&String, &usize)> = model.vocabulary.iter().collect();
        terms.sort_by_key(|(_, &i)| i);
        for (t, _) in terms {
            let _ = write!(vectors, ",{t}");
        }
        vectors.push('\n');
        for (ex, doc) in present.iter().zip(&docs) {
            vectors.push_str(&csv_line(ex.id(), ex.label, &transform_tfidf(doc, &model).values));
        }
        write_file(&out.join("tfidf_vectors.csv"), &vectors)?;
        println!("textual: {} vectors, {} missing transcript(s)", docs.len(), missing.len());
    }
    Ok(())
}

fn augment(a: AugmentArgs, cfg: &RunConfig) -> Result<()> {
    let dir = corpus_dir(a.corpus, cfg)?;
    let out = require(pick(a.out, &cfg.out), "out")?;
    let base = cfg.augment.unwrap_or_default();
    let aug = AugmentConfig {
        stretch_factor: a.stretch_factor.unwrap_or(base.stretch_factor),
        noise_factor: a.noise_factor.unwrap_or(base.noise_factor),
        max_shift_frac: a.max_shift.unwrap_or(base.max_shift_frac),
        seed: cfg.seed(a.seed),
        stretch: base.stretch && !a.no_stretch,
        noise: base.noise && !a.no_noise,
        shift: base.shift && !a.no_shift,
    };
    let ds = load_corpus(&dir)?;
    let n = ds.len();
    let augmented = augment_dataset(&ds.into_training(), &aug)?;
    write_corpus(&out, augmented.examples())?;
    println!(
        "augmented {n} clips into {} at {} (seed {})",
        augmented.len(),
        out.display(),
        aug.seed
    );
    Ok(())
}

fn train(a: TrainArgs, cfg: &RunConfig) -> Result<()> {
    let dir = corpus_dir(a.corpus, cfg)?;
    let out = require(pick(a.out, &cfg.out), "out")?;
    let kind: ModelKind = require(a.model.or_else(|| cfg.models.as_ref().and_then(|m| m.first().cloned())), "model")?
        .parse()?;
    let v = variant(a.variant, cfg)?;
    let pipeline = parse_pipeline(
        &a.pipeline
            .or_else(|| cfg.pipelines.as_ref().and_then(|p| p.first().cloned()))
            .unwrap_or_else(|| "spectral".into()),
        v,
    )?;
    if !pipeline.supports(kind) {
        return Err(Error::InvalidConfig(format!("{kind} needs the spectral pipeline")));
    }
    let seed = cfg.seed(a.seed);
    let dn = denoise_config(&a.denoise, cfg)?;
    let hyper = cfg.hyper.clone().unwrap_or_default();
    let mut ds = load_corpus(&dir)?;
    if pipeline == Pipeline::Textual {
        attach_transcripts(&mut ds, &a.asr, cfg, dn.as_ref())?;
    }
    let frac = pick(a.train_frac, &cfg.train_frac).unwrap_or(0.8);
    let (tr, te) = train_test_split(&ds, frac, seed)?;
    let prep = |xs: &[radioclass::dataset::Example]| -> Result<Vec<_>> {
        xs.iter()
            .map(|e| Ok(radioclass::dataset::Example { clip: preprocess(&e.clip, dn.as_ref())?, ..e.clone() }))
            .collect()
    };
    let mut train_set = prep(tr.examples())?;
    if a.augment {
        let aug = AugmentConfig {
            seed,
            ..cfg.augment.unwrap_or_default()
        };
        train_set = augment_dataset(&Dataset::new(train_set).into_training(), &aug)?.examples().to_vec();
    }
    let test_set = prep(te.examples())?;
    let strict = a.asr.strict || cfg.strict.unwrap_or(false);
    std::fs::create_dir_all(&out).map_err(|e| Error::io(&out, e))?;
    let (space, trf, tef): (FeatureSpace, Features, Features) = match pipeline {
        Pipeline::Textual => {
            let (tfidf, trf, tef) = textual_features(&train_set, &test_set, strict)?;
            write_file(&out.join("tfidf.json"), &tfidf.to_json()?)?;
            (FeatureSpace::Tfidf, trf, tef)
        }
        Pipeline::Spectral(v) => {
            let cnn = kind == ModelKind::Cnn;
            let space = if cnn { FeatureSpace::Spectrogram2d } else { FeatureSpace::PooledSpectral };
            (space, spectral_features(&train_set, v, cnn)?, spectral_features(&test_set, v, cnn)?)
        }
    };
    let pick_rows = |f: &Features| if kind == ModelKind::Cnn { f.images.clone() } else { f.rows.clone() };
    let (xtr, xte) = (pick_rows(&trf), pick_rows(&tef));
    let model = models::train(kind, &xtr, &trf.labels, &hyper, seed, space)?;
    model.save(&out.join("model.json"))?;
    let cell = CellInfo {
        model: kind,
        pipeline: pipeline.to_string(),
        augmented: a.augment,
        seed,
        n_train: xtr.len(),
        test_fingerprint: radioclass::eval::grid::fingerprint(&test_set),
    };
    let r = evaluate(&model, &xte, &tef.labels, cell)?;
    println!("saved {} to {}", kind, out.join("model.json").display());
    print!("{}", format_table(&[r]));
    Ok(())
}

fn models_from(flags: &[String], cfg: &RunConfig, ablate: bool) -> Result<Vec<ModelKind>> {
    let names: Vec<String> = if flags.is_empty() {
        cfg.models.clone().unwrap_or_default()
    } else {
        flags.to_vec()
    };
    if names.is_empty() {
        let mut m = ModelKind::TRADITIONAL.to_vec();
        if !ablate {
            m.push(ModelKind::Ensemble);
        }
        m.push(ModelKind::Cnn);
        return Ok(m);
    }
    names.iter().map(|s| s.parse()).collect()
}

fn evaluate_cmd(a: EvalArgs, cfg: &RunConfig, ablate: bool) -> Result<()> {
    let dir = corpus_dir(a.corpus, cfg)?;
    let v = variant(a.variant, cfg)?;
    let names: Vec<String> = if a.pipeline.is_empty() {
        cfg.pipelines
            .clone()
            .unwrap_or_else(|| vec!["textual".into(), "spectral".into()])
    } else {
        a.pipeline.clone()
    };
    let pipelines = names.iter().map(|s| parse_pipeline(s, v)).collect::<Result<Vec<_>>>()?;
    let models = models_from(&a.model, cfg, ablate)?;
    let dn = denoise_config(&a.denoise, cfg)?;
    let mut ds = load_corpus(&dir)?;
    if pipelines.contains(&Pipeline::Textual) {
        attach_transcripts(&mut ds, &a.asr, cfg, dn.as_ref())?;
    }
    let grid = GridConfig {
        models,
        pipelines,
        augment: if ablate {
            vec![false, true]
        } else {
            vec![a.augment]
        },
        seed: cfg.seed(a.seed),
        train_frac: pick(a.train_frac, &cfg.train_frac).unwrap_or(0.8),
        denoise: dn,
        augment_cfg: cfg.augment.unwrap_or_default(),
        hyper: cfg.hyper.clone().unwrap_or_default(),
        test_noise: pick(a.test_noise, &cfg.test_noise),
        strict_transcripts: a.asr.strict || cfg.strict.unwrap_or(false),
    };
    let repeats = pick(a.repeats, &cfg.repeats).unwrap_or(1);
    let reports = run_repeats(&ds, &grid, repeats)?;
    print!("{}", format_table(&reports));
    if let Some(out) = pick(a.out, &cfg.out) {
        write_file(&out, &reports_to_csv(&reports))?;
        if repeats > 1 {
            write_file(&out.with_extension("summary.csv"), &summary_csv(&summarize(&reports)))?;
        }
        if ablate {
            write_file(&out.with_extension("ablation.csv"), &ablation_csv(&reports))?;
        }
    }
    if let Some(dir) = a.plot_data {
        write_plot_data(&dir, &reports)?;
    }
    if ablate {
        print!("{}", ablation_summary(&reports));
    }
    Ok(())
}

/// Paired off/on accuracy per (seed, pipeline, model).
fn ablation_csv(reports: &[MetricsReport]) -> String {
    let mut s = String::from("model,pipeline,seed,acc_off,acc_on,delta\n");
    for pair in reports.chunks(2) {
        if let [off, on] = pair {
            if !off.augmented && on.augmented {
                let _ = writeln!(
                    s,
                    "{},{},{},{:.6},{:.6},{:.6}",
                    off.model,
                    off.pipeline,
                    off.seed,
                    off.accuracy,
                    on.accuracy,
                    on.accuracy - off.accuracy
                );
            }
        }
    }
    s
}

fn ablation_summary(reports: &[MetricsReport]) -> String {
    let mean = |on: bool| {
        let v: Vec<f64> = reports.iter().filter(|r| r.augmented == on).map(|r| r.accuracy).collect();
        v.iter().sum::<f64>() / v.len().max(1) as f64
    };
    format!(
        "mean accuracy without augmentation {:.4}, with augmentation {:.4}\n",
        mean(false),
        mean(true)
    )
}

fn write_plot_data(dir: &Path, reports: &[MetricsReport]) -> Result<()> {
    write_file(&dir.join("f1_mcc.csv"), &f1_mcc_csv(reports))?;
    write_file(&dir.join("auroc_aupr.csv"), &auroc_aupr_csv(reports))?;
    write_file(&dir.join("metrics_matrix.csv"), &metric_matrix_csv(reports))
}

fn report(a: ReportArgs) -> Result<()> {
    let text = std::fs::read_to_string(&a.input).map_err(|e| Error::io(&a.input, e))?;
    let reports = reports_from_csv(&text)?;
    print!("{}", format_table(&reports));
    if reports.iter().any(|r| r.seed != reports[0].seed) {
        print!("{}", summary_csv(&summarize(&reports)));
    }
    if let Some(dir) = a.plot_data {
        write_plot_data(&dir, &reports)?;
        println!("plot data written to {}", dir.display());
    }
    Ok(())
}
