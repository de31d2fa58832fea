//! Metrics, degradation protocols and the ablation driver.

mod metrics;
mod protocol;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;
use crate::train::{fit, AblationModel, Dataset, TrainConfig, TrainState};

pub use metrics::{acc, auc, DEFAULT_THRESHOLD};
pub use protocol::{
    degraded_view, evaluate, evaluate_all, ladder_conditions, ratio_conditions, robustness_conditions, scores,
    Degradation, EvalCondition,
};

pub const REPORT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionMetrics {
    pub name: String,
    pub auc: f64,
    pub acc: f64,
    pub n_samples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub version: u32,
    /// FNV-1a of the canonical config text, hex.
    pub fingerprint: String,
    pub seed: u64,
    pub rows: Vec<ConditionMetrics>,
}

const TABLE_HEADER: &str = "name\tauc\tacc\tn_samples";

pub fn fingerprint(cfg: &TrainConfig) -> String {
    format!("{:016x}", rng::tag(&cfg.to_text()))
}

impl MetricsReport {
    pub fn new(cfg: &TrainConfig, rows: Vec<ConditionMetrics>) -> Self {
        Self {
            version: REPORT_VERSION,
            fingerprint: fingerprint(cfg),
            seed: cfg.seed,
            rows,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for r in &self.rows {
            if !(0.0..=1.0).contains(&r.auc) || !(0.0..=1.0).contains(&r.acc) || r.n_samples == 0 {
                return Err(Error::Format(format!("report row {:?} is out of range", r.name)));
            }
        }
        Ok(())
    }

    pub fn get(&self, name: &str) -> Option<&ConditionMetrics> {
        self.rows.iter().find(|r| r.name == name)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let r: Self = serde_json::from_str(text).map_err(|e| Error::Format(format!("metrics report: {e}")))?;
        if r.version != REPORT_VERSION {
            return Err(Error::Format(format!("unsupported report version {}", r.version)));
        }
        r.validate()?;
        Ok(r)
    }

    /// Tab-separated table, one row per condition. Numbers use the shortest
    /// round-tripping decimal form.
    pub fn to_table(&self) -> String {
        let mut out = format!("# version={} fingerprint={} seed={}\n{TABLE_HEADER}\n", self.version, self.fingerprint, self.seed);
        for r in &self.rows {
            out.push_str(&format!("{}\t{:?}\t{:?}\t{}\n", r.name, r.auc, r.acc, r.n_samples));
        }
        out
    }

    pub fn from_table(text: &str) -> Result<Self> {
        let bad = |what: &str| Error::Format(format!("metrics table: {what}"));
        let mut lines = text.lines();
        let meta = lines.next().and_then(|l| l.strip_prefix("# ")).ok_or_else(|| bad("missing header"))?;
        let (mut version, mut fp, mut seed) = (None, None, None);
        for kv in meta.split_whitespace() {
            match kv.split_once('=') {
                Some(("version", v)) => version = v.parse().ok(),
                Some(("fingerprint", v)) => fp = Some(v.to_string()),
                Some(("seed", v)) => seed = v.parse().ok(),
                _ => return Err(bad("unknown header field")),
            }
        }
        if lines.next() != Some(TABLE_HEADER) {
            return Err(bad("missing column header"));
        }
        let mut rows = Vec::new();
        for line in lines {
            let cols: Vec<&str> = line.split('\t').collect();
            let [name, a, c, n] = cols[..] else {
                return Err(bad("row needs 4 columns"));
            };
            rows.push(ConditionMetrics {
                name: name.to_string(),
                auc: a.parse().map_err(|_| bad("auc"))?,
                acc: c.parse().map_err(|_| bad("acc"))?,
                n_samples: n.parse().map_err(|_| bad("n_samples"))?,
            });
        }
        let r = Self {
            version: version.ok_or_else(|| bad("version"))?,
            fingerprint: fp.ok_or_else(|| bad("fingerprint"))?,
            seed: seed.ok_or_else(|| bad("seed"))?,
            rows,
        };
        r.validate()?;
        Ok(r)
    }
}

pub fn robustness_suite(state: &TrainState, data: &Dataset) -> Result<MetricsReport> {
    let rows = evaluate_all(&state.model, &state.config, data, &robustness_conditions())?;
    Ok(MetricsReport::new(&state.config, rows))
}

pub fn ladder_suite(state: &TrainState, data: &Dataset) -> Result<MetricsReport> {
    let rows = evaluate_all(&state.model, &state.config, data, &ladder_conditions())?;
    Ok(MetricsReport::new(&state.config, rows))
}

/// Trains Models A to D from `cfg` on `train` and evaluates each on
/// `conds`. Rows are named `<model>/<condition>`.
pub fn ablation_suite(train: &Dataset, test: &Dataset, cfg: &TrainConfig, conds: &[EvalCondition]) -> Result<MetricsReport> {
    let mut rows = Vec::new();
    for m in AblationModel::ALL {
        let c = cfg.clone().with_ablation(m);
        let (state, _) = fit(train, &c)?;
        for mut r in evaluate_all(&state.model, &c, test, conds)? {
            r.name = format!("{m}/{}", r.name);
            rows.push(r);
        }
    }
    Ok(MetricsReport::new(cfg, rows))
}

/// Lowest AUC among `names`.
pub fn worst_auc(report: &MetricsReport, names: &[&str]) -> Option<f64> {
    names
        .iter()
        .map(|n| report.get(n).map(|r| r.auc))
        .collect::<Option<Vec<f64>>>()
        .and_then(|v| v.into_iter().reduce(f64::min))
}
