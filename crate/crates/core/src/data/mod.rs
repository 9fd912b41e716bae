//! Synthetic data, on-disk trial sets, CSV import and checkpoints.

mod binio;
mod checkpoint;
mod csv_io;
mod frz;
mod synth;

pub use binio::write_atomic;
pub use checkpoint::{
    decode_checkpoint, encode_checkpoint, load_checkpoint, save_checkpoint, Checkpoint, CHECKPOINT_MAGIC,
    CHECKPOINT_VERSION,
};
pub use csv_io::{export_csv_trials, import_csv_trials, trials_from_csv};
pub use frz::{
    decode_trialset, encode_trialset, load_trialset, save_trialset, TrialFileHeader, HEADER_LEN, TRIAL_MAGIC,
    TRIAL_VERSION,
};
pub use synth::{class_frequency, generate_synthetic, mixing_vectors, SynthConfig, ONSET_SECONDS};
