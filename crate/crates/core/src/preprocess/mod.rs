//! Bandpass filtering, trial normalization, Euclidean alignment and
//! epoch extraction.

mod align;
mod epoch;
mod fir;
mod normalize;
mod pipeline;
mod trial;

pub use align::{alignment_matrix, apply_alignment, euclidean_align, mean_covariance, ALIGN_EIG_FLOOR};
pub use epoch::{crop_set, epoch, window_offsets, Cue};
pub use fir::{design_bandpass_fir, filter_signal, FirFilter, DEFAULT_ORDER};
pub use normalize::{normalize_set, normalize_trial};
pub use pipeline::{filter_set, prepare, AlignScope, PreprocessConfig, Prepared};
pub use trial::{default_class_names, Trial, TrialSet};
