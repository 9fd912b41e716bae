use crate::error::{Error, Result};
use crate::tensor::Matrix;

/// One labeled `channels x samples` segment.
#[derive(Debug, Clone, PartialEq)]
pub struct Trial {
    pub data: Matrix,
    pub label: usize,
    pub subject_id: u32,
    pub session_id: u32,
}

impl Trial {
    pub fn new(data: Matrix, label: usize) -> Self {
        Self { data, label, subject_id: 0, session_id: 0 }
    }

    pub fn channels(&self) -> usize {
        self.data.rows()
    }

    pub fn samples(&self) -> usize {
        self.data.cols()
    }
}

/// Ordered collection of trials sharing one shape and sampling rate.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialSet {
    pub trials: Vec<Trial>,
    pub fs: f64,
    pub class_names: Vec<String>,
    pub channel_count: usize,
}

/// `class_0, class_1, ...`
pub fn default_class_names(n: usize) -> Vec<String> {
    (0..n).map(|k| format!("class_{k}")).collect()
}

impl TrialSet {
    /// Builds and validates a set.
    pub fn new(trials: Vec<Trial>, fs: f64, class_names: Vec<String>) -> Result<Self> {
        let channel_count = trials.first().map_or(0, Trial::channels);
        let set = Self { trials, fs, class_names, channel_count };
        set.validate()?;
        Ok(set)
    }

    pub fn len(&self) -> usize {
        self.trials.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trials.is_empty()
    }

    pub fn n_classes(&self) -> usize {
        self.class_names.len()
    }

    /// Samples per trial (0 for an empty set).
    pub fn samples(&self) -> usize {
        self.trials.first().map_or(0, Trial::samples)
    }

    pub fn labels(&self) -> Vec<usize> {
        self.trials.iter().map(|t| t.label).collect()
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.n_classes()];
        for t in &self.trials {
            counts[t.label] += 1;
        }
        counts
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.fs > 0.0 && self.fs.is_finite()) {
            return Err(Error::domain(format!("sampling rate must be positive, got {}", self.fs)));
        }
        if self.class_names.len() < 2 {
            return Err(Error::domain("a trial set needs at least 2 classes"));
        }
        let samples = self.samples();
        for (i, t) in self.trials.iter().enumerate() {
            if t.channels() != self.channel_count || t.samples() != samples {
                return Err(Error::shape(format!(
                    "trial {i} is {}x{}, expected {}x{samples}",
                    t.channels(),
                    t.samples(),
                    self.channel_count
                )));
            }
            if t.label >= self.class_names.len() {
                return Err(Error::domain(format!(
                    "trial {i} has label {} outside [0, {})",
                    t.label,
                    self.class_names.len()
                )));
            }
            if !t.data.is_finite() {
                return Err(Error::domain(format!("trial {i} contains NaN or Inf")));
            }
        }
        Ok(())
    }

    /// Same metadata, new trials.
    pub fn with_trials(&self, trials: Vec<Trial>) -> Result<Self> {
        Self::new(trials, self.fs, self.class_names.clone())
    }

    /// Concatenates sets with matching metadata.
    pub fn concat(sets: &[&TrialSet]) -> Result<Self> {
        let first = sets.first().ok_or_else(|| Error::domain("nothing to concatenate"))?;
        let mut trials = Vec::new();
        for s in sets {
            if s.fs != first.fs || s.class_names != first.class_names {
                return Err(Error::domain("cannot concatenate sets with different fs or classes"));
            }
            trials.extend(s.trials.iter().cloned());
        }
        Self::new(trials, first.fs, first.class_names.clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validates_shapes_and_labels() {
        let t = |c, s, l| Trial::new(Matrix::zeros(c, s), l);
        assert!(TrialSet::new(vec![t(2, 5, 0), t(2, 5, 1)], 250.0, default_class_names(2)).is_ok());
        assert!(TrialSet::new(vec![t(2, 5, 0), t(3, 5, 1)], 250.0, default_class_names(2)).is_err());
        assert!(TrialSet::new(vec![t(2, 5, 0), t(2, 5, 2)], 250.0, default_class_names(2)).is_err());
        assert!(TrialSet::new(vec![t(2, 5, 0)], 0.0, default_class_names(2)).is_err());
    }

    #[test]
    fn rejects_non_finite() {
        let mut m = Matrix::zeros(1, 3);
        m[(0, 1)] = f64::NAN;
        assert!(TrialSet::new(vec![Trial::new(m, 0)], 100.0, default_class_names(2)).is_err());
    }
}
