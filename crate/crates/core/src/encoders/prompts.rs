use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

use super::Label;

pub const REAL_PROMPTS: [&str; 6] = [
    "This is an example of a real face",
    "This is a bonafide face",
    "This is a real face",
    "This is how a real face looks like",
    "a photo of a real face",
    "This is not a forgery face",
];

pub const FAKE_PROMPTS: [&str; 6] = [
    "This is an example of a forgery face",
    "This is an example of an attack face",
    "This is not a real face",
    "This is how a forgery face looks like",
    "a photo of a forgery face",
    "a printout shown to be a forgery face",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Validity {
    Valid,
    Invalid,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PromptKind {
    /// The single word "real" or "fake".
    Simple,
    /// A bank description matching the label.
    Description,
    /// Random character sequence.
    Unrelated,
    /// A bank description of the other class.
    Opposite,
}

impl PromptKind {
    pub const ALL: [PromptKind; 4] = [
        PromptKind::Simple,
        PromptKind::Description,
        PromptKind::Unrelated,
        PromptKind::Opposite,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PromptKind::Simple => "simple",
            PromptKind::Description => "description",
            PromptKind::Unrelated => "unrelated",
            PromptKind::Opposite => "opposite",
        }
    }
}

impl fmt::Display for PromptKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PromptKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        PromptKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::UnknownKind(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptText {
    pub text: String,
    pub validity: Validity,
    pub kind: PromptKind,
    pub label: Label,
}

fn bank(label: Label) -> &'static [&'static str; 6] {
    match label {
        Label::Real => &REAL_PROMPTS,
        Label::Fake => &FAKE_PROMPTS,
    }
}

fn random_chars(r: &mut rng::Rng) -> String {
    const ALPHABET: &[u8] = b"abcdefghijklmnopqrstuvwxyz ";
    let n = r.gen_range(8..=32);
    (0..n)
        .map(|_| ALPHABET[r.gen_range(0..ALPHABET.len())] as char)
        .collect()
}

/// Draws a prompt for `label`.
///
/// Without `eval_kind`, the training distribution applies: a bank prompt for
/// the label with probability 0.5, otherwise a random character string of
/// length 8–32. With `eval_kind`, that kind is forced.
pub fn make_prompt(label: Label, seed: u64, eval_kind: Option<PromptKind>) -> PromptText {
    let mut r = rng::stream(seed, &[rng::tag("make_prompt")]);
    let kind = match eval_kind {
        Some(k) => k,
        None if r.gen_bool(0.5) => PromptKind::Description,
        None => PromptKind::Unrelated,
    };
    let (text, validity) = match kind {
        PromptKind::Simple => (
            match label {
                Label::Real => "real",
                Label::Fake => "fake",
            }
            .to_string(),
            Validity::Valid,
        ),
        PromptKind::Description => (
            bank(label).choose(&mut r).unwrap().to_string(),
            Validity::Valid,
        ),
        PromptKind::Unrelated => (random_chars(&mut r), Validity::Invalid),
        PromptKind::Opposite => (
            bank(label.flipped()).choose(&mut r).unwrap().to_string(),
            Validity::Invalid,
        ),
    };
    PromptText {
        text,
        validity,
        kind,
        label,
    }
}
