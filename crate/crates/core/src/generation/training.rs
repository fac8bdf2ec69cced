//! Fine-tuning hyperparameters for the external trainer. Nothing here
//! trains; configs are emitted as flat `key=value` files.

use super::{DecodingConfig, GenerationError};
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrainingProfile {
    T5Base,
    BartBase,
    BartLarge,
    /// T5-base with an intermediate MS MARCO NLGEN stage
    T5Nlgen,
    /// BART-large starting from an ELI5-tuned checkpoint
    BartEli5,
}

impl TrainingProfile {
    pub const ALL: [TrainingProfile; 5] = [
        TrainingProfile::T5Base,
        TrainingProfile::BartBase,
        TrainingProfile::BartLarge,
        TrainingProfile::T5Nlgen,
        TrainingProfile::BartEli5,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            TrainingProfile::T5Base => "t5_base",
            TrainingProfile::BartBase => "bart_base",
            TrainingProfile::BartLarge => "bart_large",
            TrainingProfile::T5Nlgen => "t5_nlgen",
            TrainingProfile::BartEli5 => "bart_eli5",
        }
    }
}

impl FromStr for TrainingProfile {
    type Err = GenerationError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|p| p.as_str() == s.to_ascii_lowercase().replace('-', "_"))
            .ok_or_else(|| GenerationError::UnknownProfile(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntermediateStage {
    pub dataset: String,
    pub epochs: u32,
    pub learning_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingConfig {
    pub profile: TrainingProfile,
    pub base_model: String,
    pub init_checkpoint: Option<String>,
    pub stage1: Option<IntermediateStage>,
    pub epochs: u32,
    pub optimizer: String,
    pub weight_decay: f64,
    pub learning_rate: f64,
    pub early_stop_patience: u32,
    pub train_batch_size_open_book: u32,
    pub train_batch_size_closed_book: u32,
    pub eval_batch_size: u32,
    pub mixed_precision: bool,
    pub decoding: DecodingConfig,
}

const T5_LR: f64 = 1e-5;
const BART_LR: f64 = 5e-6;

pub fn emit_training_config(profile: TrainingProfile) -> TrainingConfig {
    let (base_model, learning_rate) = match profile {
        TrainingProfile::T5Base | TrainingProfile::T5Nlgen => ("t5-base", T5_LR),
        TrainingProfile::BartBase => ("facebook/bart-base", BART_LR),
        TrainingProfile::BartLarge | TrainingProfile::BartEli5 => ("facebook/bart-large", BART_LR),
    };
    let stage1 = (profile == TrainingProfile::T5Nlgen).then(|| IntermediateStage {
        dataset: "msmarco-nlgen".into(),
        epochs: 1,
        learning_rate: 1e-4,
    });
    let init_checkpoint = (profile == TrainingProfile::BartEli5).then(|| "vblagoje/bart_lfqa".to_string());
    TrainingConfig {
        profile,
        base_model: base_model.into(),
        init_checkpoint,
        stage1,
        epochs: 20,
        optimizer: "adamw".into(),
        weight_decay: 0.01,
        learning_rate,
        early_stop_patience: 5,
        train_batch_size_open_book: 8,
        train_batch_size_closed_book: 16,
        eval_batch_size: 8,
        mixed_precision: true,
        decoding: DecodingConfig::default(),
    }
}

impl TrainingConfig {
    /// Flat `key=value` lines in a fixed order.
    pub fn to_key_values(&self) -> String {
        let mut out = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(out, "{k}={v}");
        };
        kv("profile", self.profile.as_str().into());
        kv("base_model", self.base_model.clone());
        if let Some(c) = &self.init_checkpoint {
            kv("init_checkpoint", c.clone());
        }
        if let Some(s) = &self.stage1 {
            kv("stage1.dataset", s.dataset.clone());
            kv("stage1.epochs", s.epochs.to_string());
            kv("stage1.learning_rate", format!("{:e}", s.learning_rate));
        }
        kv("epochs", self.epochs.to_string());
        kv("optimizer", self.optimizer.clone());
        kv("weight_decay", self.weight_decay.to_string());
        kv("learning_rate", format!("{:e}", self.learning_rate));
        kv("early_stop_patience", self.early_stop_patience.to_string());
        kv(
            "train_batch_size.open_book",
            self.train_batch_size_open_book.to_string(),
        );
        kv(
            "train_batch_size.closed_book",
            self.train_batch_size_closed_book.to_string(),
        );
        kv("eval_batch_size", self.eval_batch_size.to_string());
        kv("fp16", self.mixed_precision.to_string());
        kv("decode.num_beams", self.decoding.beams.to_string());
        kv("decode.max_length", self.decoding.max_length_tokens.to_string());
        kv(
            "decode.no_repeat_ngram_size",
            self.decoding.no_repeat_ngram.to_string(),
        );
        out
    }
}
