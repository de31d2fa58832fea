use std::sync::OnceLock;

use rand::Rng as _;
use rand_distr::StandardNormal;

use crate::rng;

use super::{ModalityFeature, Modality, PromptText, Quality, T_DIM};

/// Seed of the frozen embedding table. Fixed so every process sees the same
/// "pretrained" encoder.
const TABLE_SEED: u64 = 0x5445_5854_454e_4321;

/// Frozen text encoder: tokens are hashed into a fixed embedding table and
/// mean-pooled. Nothing here is trainable.
#[derive(Debug, Clone, PartialEq)]
pub struct TEncoder {
    buckets: usize,
    table: Vec<f64>,
}

impl Default for TEncoder {
    fn default() -> Self {
        Self::pretrained()
    }
}

impl TEncoder {
    pub const BUCKETS: usize = 4096;

    /// Process-wide instance; the table is built once.
    pub fn shared() -> &'static TEncoder {
        static SHARED: OnceLock<TEncoder> = OnceLock::new();
        SHARED.get_or_init(TEncoder::pretrained)
    }

    pub fn pretrained() -> Self {
        let mut r = rng::stream(TABLE_SEED, &[]);
        let table = (0..Self::BUCKETS * T_DIM)
            .map(|_| r.sample::<f64, _>(StandardNormal))
            .collect();
        Self {
            buckets: Self::BUCKETS,
            table,
        }
    }

    pub fn table(&self) -> &[f64] {
        &self.table
    }

    pub fn tokenize(text: &str) -> Vec<String> {
        text.split(|c: char| !c.is_alphanumeric())
            .filter(|s| !s.is_empty())
            .map(|s| s.to_lowercase())
            .collect()
    }

    pub fn bucket(&self, token: &str) -> usize {
        (rng::tag(token) % self.buckets as u64) as usize
    }

    /// 512-d mean-pooled embedding; the empty prompt maps to zero.
    pub fn embed(&self, text: &str) -> Vec<f64> {
        let tokens = Self::tokenize(text);
        let mut out = vec![0.0; T_DIM];
        if tokens.is_empty() {
            return out;
        }
        for tok in &tokens {
            let b = self.bucket(tok);
            for (o, v) in out.iter_mut().zip(&self.table[b * T_DIM..(b + 1) * T_DIM]) {
                *o += v;
            }
        }
        let n = tokens.len() as f64;
        out.iter_mut().for_each(|v| *v /= n);
        out
    }

    pub fn encode(&self, prompt: &PromptText) -> ModalityFeature {
        ModalityFeature {
            vector: self.embed(&prompt.text),
            modality: Modality::T,
            quality: Quality::HQ,
            label: prompt.label,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::super::{make_prompt, Label, FAKE_PROMPTS, REAL_PROMPTS};
    use super::*;
    use std::collections::HashMap;

    #[test]
    fn dimension_and_determinism() {
        let enc = TEncoder::pretrained();
        let p = make_prompt(Label::Real, 1, None);
        let a = enc.encode(&p);
        assert_eq!(a.vector.len(), 512);
        assert_eq!(a, enc.encode(&p));
        assert_eq!(enc, TEncoder::pretrained());
    }

    #[test]
    fn bank_tokens_do_not_collide() {
        let enc = TEncoder::pretrained();
        let mut seen: HashMap<usize, String> = HashMap::new();
        for p in REAL_PROMPTS.iter().chain(FAKE_PROMPTS.iter()).chain(["real", "fake"].iter()) {
            for tok in TEncoder::tokenize(p) {
                let b = enc.bucket(&tok);
                if let Some(prev) = seen.insert(b, tok.clone()) {
                    assert_eq!(prev, tok, "bucket collision");
                }
            }
        }
        assert_ne!(enc.embed("This is a real face"), enc.embed("This is not a real face"));
    }

    #[test]
    fn distinct_bank_prompts_embed_distinctly() {
        let enc = TEncoder::pretrained();
        let all: Vec<Vec<f64>> = REAL_PROMPTS
            .iter()
            .chain(FAKE_PROMPTS.iter())
            .map(|p| enc.embed(p))
            .collect();
        for i in 0..all.len() {
            for j in i + 1..all.len() {
                assert_ne!(all[i], all[j]);
            }
        }
    }
}
