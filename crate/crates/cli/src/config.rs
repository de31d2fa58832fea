//! Run configuration and dataset manifests, both flat `key=value` text.

use std::path::PathBuf;

use umcl_core::encoders::SynthSpec;
use umcl_core::kv;
use umcl_core::train::TrainConfig;
use umcl_core::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub train: TrainConfig,
    /// Dataset directory written by `synth`.
    pub data: Option<PathBuf>,
    /// Evaluation grid to run on the test split after training.
    pub suite: Option<String>,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let pairs = kv::parse_lines(text, Error::InvalidConfig)?;
        let mut data = None;
        let mut suite = None;
        let mut rest = Vec::new();
        for &(k, v) in &pairs {
            let dup = match k {
                "data" => data.replace(PathBuf::from(v)).is_some(),
                "suite" => suite.replace(v.to_string()).is_some(),
                _ => {
                    rest.push((k, v));
                    false
                }
            };
            if dup {
                return Err(Error::InvalidConfig(format!("duplicate key {k:?}")));
            }
        }
        Ok(Self {
            train: TrainConfig::from_pairs(rest)?,
            data,
            suite,
        })
    }

}

pub const MANIFEST_VERSION: u32 = 1;

/// What `synth` generated: enough to regenerate the raw splits exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct Manifest {
    pub seed: u64,
    pub n_train: usize,
    pub n_test: usize,
    pub spec: SynthSpec,
}

impl Manifest {
    pub fn to_text(&self) -> String {
        let mut pairs = vec![
            ("n_test".to_string(), self.n_test.to_string()),
            ("n_train".to_string(), self.n_train.to_string()),
            ("seed".to_string(), self.seed.to_string()),
            ("version".to_string(), MANIFEST_VERSION.to_string()),
        ];
        pairs.extend(self.spec.to_kv().into_iter().map(|(k, v)| (format!("spec.{k}"), v)));
        pairs.sort();
        pairs.into_iter().map(|(k, v)| format!("{k}={v}\n")).collect()
    }

    pub fn parse(text: &str) -> Result<Self> {
        let bad = |m: String| Error::Format(format!("manifest: {m}"));
        let pairs = kv::parse_lines(text, bad)?;
        let (mut seed, mut n_train, mut n_test, mut version) = (None, None, None, None);
        let mut spec = Vec::new();
        for &(k, v) in &pairs {
            let num = || v.parse::<u64>().map_err(|_| bad(format!("{k} is not an integer")));
            match k {
                "seed" => seed = Some(num()?),
                "n_train" => n_train = Some(num()? as usize),
                "n_test" => n_test = Some(num()? as usize),
                "version" => version = Some(num()?),
                _ => match k.strip_prefix("spec.") {
                    Some(sk) => spec.push((sk, v)),
                    None => return Err(bad(format!("unknown key {k:?}"))),
                },
            }
        }
        if version != Some(MANIFEST_VERSION as u64) {
            return Err(bad(format!("unsupported version {version:?}")));
        }
        let missing = |k: &str| bad(format!("missing {k}"));
        Ok(Self {
            seed: seed.ok_or_else(|| missing("seed"))?,
            n_train: n_train.ok_or_else(|| missing("n_train"))?,
            n_test: n_test.ok_or_else(|| missing("n_test"))?,
            spec: SynthSpec::from_kv(spec).map_err(|e| bad(e.to_string()))?,
        })
    }
}
