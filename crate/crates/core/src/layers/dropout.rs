use crate::error::{Error, Result};
use crate::tensor::{Matrix, Rng};

/// Inverted dropout: during training each entry is zeroed with probability
/// `p` and survivors are scaled by `1 / (1 - p)`; evaluation is the identity.
#[derive(Debug, Clone)]
pub struct DropoutLayer {
    pub p: f64,
    pub seed: u64,
}

impl DropoutLayer {
    pub fn new(p: f64, seed: u64) -> Result<Self> {
        check_p(p)?;
        Ok(Self { p, seed })
    }
}

fn check_p(p: f64) -> Result<()> {
    if !(0.0..1.0).contains(&p) {
        return Err(Error::domain(format!("dropout probability must lie in [0, 1), got {p}")));
    }
    Ok(())
}

/// Draws a scale mask for `len` entries: `0` for dropped, `1/(1-p)` for kept.
pub(crate) fn draw_scales(p: f64, len: usize, rng: &mut Rng) -> Vec<f64> {
    let keep_scale = 1.0 / (1.0 - p);
    (0..len).map(|_| if rng.next_uniform() < p { 0.0 } else { keep_scale }).collect()
}

/// Applies dropout to `v`. With `p == 0` or `training == false` this is the
/// identity and no random numbers are consumed.
pub fn dropout_forward(v: &Matrix, layer: &DropoutLayer, training: bool, rng: &mut Rng) -> Result<Matrix> {
    check_p(layer.p)?;
    if !training || layer.p == 0.0 {
        return Ok(v.clone());
    }
    let scales = draw_scales(layer.p, v.len(), rng);
    let data = v.as_slice().iter().zip(&scales).map(|(x, s)| x * s).collect();
    Matrix::from_vec(v.rows(), v.cols(), data)
}
