use crate::error::{Error, Result};

use super::trial::{Trial, TrialSet};

/// Divides every entry by the trial's global max-abs. The peak entry maps
/// to exactly `+-1`.
pub fn normalize_trial(trial: &Trial) -> Result<Trial> {
    normalize_indexed(trial, 0)
}

fn normalize_indexed(trial: &Trial, index: usize) -> Result<Trial> {
    let peak = trial.data.max_abs();
    if peak == 0.0 {
        return Err(Error::DegenerateTrial { index });
    }
    Ok(Trial { data: trial.data.map(|x| x / peak), ..trial.clone() })
}

/// Normalizes every trial; a degenerate trial's error names its index.
pub fn normalize_set(set: &TrialSet) -> Result<TrialSet> {
    let trials = set
        .trials
        .iter()
        .enumerate()
        .map(|(i, t)| normalize_indexed(t, i))
        .collect::<Result<Vec<_>>>()?;
    set.with_trials(trials)
}
