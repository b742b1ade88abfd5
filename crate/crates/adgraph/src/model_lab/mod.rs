//! A small, fully deterministic modeling laboratory: vocabulary and
//! tokenization, a mean-pooled embedding classifier with hand-written
//! gradients, minibatch training with momentum, evaluation metrics,
//! integrated-gradients attribution, n-gram aggregation, binary
//! checkpoints, and report rendering.

pub mod checkpoint;
pub mod ig;
pub mod metrics;
pub mod model;
pub mod ngrams;
pub mod report;
pub mod train;
pub mod vocab;

pub use checkpoint::{
    decode as decode_checkpoint, encode as encode_checkpoint, read_checkpoint, write_checkpoint,
};
pub use ig::{integrated_gradients, Attribution, Baseline, IgOptions};
pub use metrics::{auc, evaluate_at, pick_threshold, EvalReport};
pub use model::{softmax2, TinyClassifier};
pub use ngrams::{ngram_attributions, NgramRow};
pub use report::{html_report, mask_summary, text_report, AttributionRecord};
pub use train::{train_pair, train_text, TrainOptions, TrainOutcome};
pub use vocab::{tokenize, Vocab, PAD_ID, UNK_ID};
