use std::fs;
use std::path::{Path, PathBuf};

use umcl_core::encoders::{read_features, synth_dataset, synth_splits, write_features, SynthSpec};
use umcl_core::eval::{
    evaluate_all, ladder_conditions, ratio_conditions, robustness_conditions, EvalCondition, MetricsReport,
};
use umcl_core::head::LossBreakdown;
use umcl_core::rng;
use umcl_core::train::gradcheck::{fixture, REL_ERR_FLOOR};
use umcl_core::train::{
    fit_with, load_checkpoint, lr_at, save_checkpoint, term_suite, AblationModel, Dataset, FeatureExtractor,
    GradCheckOptions, InputMode, TrainConfig, TrainState,
};
use umcl_core::Error;

use crate::config::{Manifest, RunConfig};

pub const GRAD_TOLERANCE: f64 = 1e-4;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Numeric(String),
    #[error("{0}")]
    Core(#[from] Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Numeric(_) => 4,
            CliError::Core(e) if e.is_numeric() => 4,
            CliError::Core(Error::InvalidConfig(_) | Error::InvalidSpec(_) | Error::UnknownKind(_)) => 2,
            CliError::Core(Error::InvalidSpectralConfig(_)) => 2,
            CliError::Core(_) => 3,
        }
    }
}

type Result<T> = std::result::Result<T, CliError>;

/// Caps the worker pool at `UMCL_THREADS` when set.
pub fn init_threads() -> Result<()> {
    let Ok(v) = std::env::var("UMCL_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Usage(format!("UMCL_THREADS must be a positive integer, got {v:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Usage(format!("thread pool: {e}")))
}

fn io_at(path: &Path, e: std::io::Error) -> CliError {
    CliError::Core(Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| io_at(path, e))
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| io_at(path, e))
}

fn extractor_seed(seed: u64) -> u64 {
    rng::derive_seed(seed, &[rng::tag("feature_extractor")])
}

pub fn synth(n: usize, n_test: usize, seed: u64, out: &Path, spec: Option<&Path>) -> Result<()> {
    let spec = match spec {
        Some(p) => {
            let text = read(p)?;
            SynthSpec::from_kv(umcl_core::kv::parse_lines(&text, Error::InvalidSpec)?)?
        }
        None => SynthSpec::default(),
    };
    let (train, test) = synth_splits(n, n_test, &spec, seed)?;
    fs::create_dir_all(out).map_err(|e| io_at(out, e))?;
    let extractor = FeatureExtractor::new(&TrainConfig::default(), extractor_seed(seed));
    write_features(&out.join("train.feat"), &extractor.extract(&train)?)?;
    write_features(&out.join("test.feat"), &extractor.extract(&test)?)?;
    let manifest = Manifest {
        seed,
        n_train: n,
        n_test,
        spec,
    };
    write(&out.join("manifest"), &manifest.to_text())?;
    println!("wrote {} train and {} test samples to {}", 2 * n, 2 * n_test, out.display());
    Ok(())
}

enum Split {
    Train,
    Test,
}

/// Raw samples are regenerated from the manifest; feature datasets come
/// from the split's feature file.
fn load_split(dir: &Path, cfg: &TrainConfig, split: Split) -> Result<Dataset> {
    let manifest = Manifest::parse(&read(&dir.join("manifest"))?)?;
    match cfg.input {
        InputMode::Raw => {
            let (n, tag) = match split {
                Split::Train => (manifest.n_train, "train_split"),
                Split::Test => (manifest.n_test, "test_split"),
            };
            let seed = rng::derive_seed(manifest.seed, &[rng::tag(tag)]);
            Ok(Dataset::Raw(synth_dataset(n, &manifest.spec, seed)?))
        }
        InputMode::Features => {
            let name = match split {
                Split::Train => "train.feat",
                Split::Test => "test.feat",
            };
            let records = read_features(&dir.join(name))?;
            Ok(Dataset::from_records(&records, cfg.feature_fps)?)
        }
    }
}

pub struct TrainArgs {
    pub config: Option<PathBuf>,
    pub data: Option<PathBuf>,
    pub out: PathBuf,
    pub ablation: Option<String>,
    pub seed: Option<u64>,
    pub epochs: Option<usize>,
}

fn history_row(step: u64, lr: f64, l: &LossBreakdown) -> String {
    let vals: Vec<String> = l.values()[..7].iter().map(|v| format!("{v:?}")).collect();
    format!("{step}\t{lr:?}\t{}\n", vals.join("\t"))
}

pub fn train(a: &TrainArgs) -> Result<()> {
    let mut rc = match &a.config {
        Some(p) => RunConfig::parse(&read(p)?)?,
        None => RunConfig::parse("")?,
    };
    if let Some(m) = &a.ablation {
        let m: AblationModel = m.parse()?;
        rc.train = rc.train.with_ablation(m);
    }
    if let Some(s) = a.seed {
        rc.train.seed = s;
    }
    if let Some(e) = a.epochs {
        rc.train.epochs = e;
    }
    rc.train.validate()?;
    let dir = a
        .data
        .clone()
        .or(rc.data.clone())
        .ok_or_else(|| CliError::Usage("no dataset: pass --data or set data= in the config".into()))?;
    let cfg = rc.train;
    let conds = rc.suite.as_deref().map(suite_conditions).transpose()?;
    if let Some(suite) = rc.suite.as_deref() {
        check_suite_input(&cfg, suite)?;
    }
    let data = load_split(&dir, &cfg, Split::Train)?;
    fs::create_dir_all(&a.out).map_err(|e| io_at(&a.out, e))?;
    let mut history = format!("step\tlr\t{}\n", LossBreakdown::FIELDS[..7].join("\t"));
    let (state, losses) = fit_with(&data, &cfg, |s, l| {
        let lr = lr_at(s.step as usize - 1, s.total_steps as usize, &cfg);
        history.push_str(&history_row(s.step - 1, lr, l));
        Ok(())
    })?;
    let metrics = match losses.last() {
        Some(l) => LossBreakdown::FIELDS
            .iter()
            .zip(l.values())
            .map(|(k, v)| format!("final_{k}={v:?}\n"))
            .collect(),
        None => String::new(),
    };
    save_checkpoint(&a.out.join("model.ckpt"), &state, &metrics)?;
    write(&a.out.join("history"), &history)?;
    write(&a.out.join("config"), &cfg.to_text())?;
    println!("trained {} steps; wrote {}", state.step, a.out.display());
    if let (Some(suite), Some(conds)) = (rc.suite.as_deref(), conds) {
        write_report(&state, &dir, suite, &conds, &a.out)?;
    }
    Ok(())
}

fn suite_conditions(name: &str) -> Result<Vec<EvalCondition>> {
    match name {
        "clean" => Ok(vec![EvalCondition::clean()]),
        "ladder" => Ok(ladder_conditions()),
        "ratio" => Ok(ratio_conditions()),
        "robustness" => Ok(robustness_conditions()),
        other => Err(CliError::Usage(format!(
            "unknown suite {other:?}; expected clean, ladder, ratio or robustness"
        ))),
    }
}

pub fn eval(ckpt: &Path, data: &Path, suite: &str, out: Option<&Path>) -> Result<()> {
    let conds = suite_conditions(suite)?;
    let (state, _) = load_checkpoint(ckpt)?;
    let dir = out
        .map(Path::to_path_buf)
        .unwrap_or_else(|| ckpt.parent().map(Path::to_path_buf).unwrap_or_default());
    write_report(&state, data, suite, &conds, &dir)
}

fn check_suite_input(cfg: &TrainConfig, suite: &str) -> Result<()> {
    if cfg.input == InputMode::Features && suite != "clean" {
        return Err(CliError::Usage(format!(
            "suite {suite:?} degrades raw inputs; a features-mode model supports only the clean suite"
        )));
    }
    Ok(())
}

fn write_report(state: &TrainState, data: &Path, suite: &str, conds: &[EvalCondition], dir: &Path) -> Result<()> {
    let cfg = &state.config;
    check_suite_input(cfg, suite)?;
    let test = load_split(data, cfg, Split::Test)?;
    let report = MetricsReport::new(cfg, evaluate_all(&state.model, cfg, &test, conds)?);
    fs::create_dir_all(dir).map_err(|e| io_at(dir, e))?;
    write(&dir.join(format!("{suite}.json")), &report.to_json())?;
    let table = report.to_table();
    write(&dir.join(format!("{suite}.tsv")), &table)?;
    print!("{table}");
    Ok(())
}

pub fn gradcheck(seed: u64, coords: usize, broken: bool) -> Result<()> {
    let (model, items, cfg) = fixture(seed)?;
    let opts = GradCheckOptions {
        n_coords: coords,
        seed,
        analytic_scale: if broken { 1.01 } else { 1.0 },
        ..GradCheckOptions::default()
    };
    let mut pass = true;
    println!("term\tmax_rel_err\tchecked\tskipped\tworst\tstatus");
    for (term, r) in term_suite(&model, &items, &cfg, &opts)? {
        let ok = r.max_rel_err < GRAD_TOLERANCE && r.checked > 0;
        pass &= ok;
        let worst = r.worst.map(|(n, i)| format!("{n}[{i}]")).unwrap_or_default();
        println!(
            "{term}\t{:.3e}\t{}\t{}\t{worst}\t{}",
            r.max_rel_err,
            r.checked,
            r.skipped,
            if ok { "PASS" } else { "FAIL" }
        );
    }
    println!("# tolerance {GRAD_TOLERANCE:e}, relative-error floor {REL_ERR_FLOOR:e}");
    if pass {
        Ok(())
    } else {
        Err(CliError::Numeric("gradient check failed".into()))
    }
}
