use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::tensor::Matrix;

pub const DEFAULT_ORDER: usize = 200;

const BLACKMAN: (f64, f64, f64) = (0.42, 0.5, 0.08);

/// Linear-phase Blackman-windowed bandpass FIR.
#[derive(Debug, Clone, PartialEq)]
pub struct FirFilter {
    /// `order + 1` taps, symmetric about the center tap.
    pub taps: Vec<f64>,
    pub f_lo: f64,
    pub f_hi: f64,
    pub fs: f64,
}

fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        (PI * x).sin() / (PI * x)
    }
}

fn blackman(n: usize, order: usize) -> f64 {
    let (a0, a1, a2) = BLACKMAN;
    let x = n as f64 / order as f64;
    a0 - a1 * (2.0 * PI * x).cos() + a2 * (4.0 * PI * x).cos()
}

/// Windowed-sinc bandpass: the difference of ideal lowpass responses at
/// `f_hi` and `f_lo`, times a Blackman window, scaled to unit gain at the
/// geometric band center `sqrt(f_lo * f_hi)`.
pub fn design_bandpass_fir(order: usize, f_lo: f64, f_hi: f64, fs: f64) -> Result<FirFilter> {
    if order == 0 || order % 2 != 0 {
        return Err(Error::domain(format!("filter order must be even and positive, got {order}")));
    }
    if !(fs > 0.0 && 0.0 < f_lo && f_lo < f_hi && f_hi < fs / 2.0) {
        return Err(Error::domain(format!(
            "band edges must satisfy 0 < f_lo < f_hi < fs/2, got [{f_lo}, {f_hi}] at fs={fs}"
        )));
    }
    let half = order / 2;
    let (lo, hi) = (f_lo / fs, f_hi / fs);
    let mut taps = vec![0.0; order + 1];
    // mirror the first half so taps[i] == taps[order - i] bit for bit
    for n in 0..=half {
        let m = n as f64 - half as f64;
        let ideal = 2.0 * hi * sinc(2.0 * hi * m) - 2.0 * lo * sinc(2.0 * lo * m);
        let v = ideal * blackman(n, order);
        taps[n] = v;
        taps[order - n] = v;
    }
    let mut filter = FirFilter { taps, f_lo, f_hi, fs };
    let gain = filter.gain_at((f_lo * f_hi).sqrt());
    for t in &mut filter.taps {
        *t /= gain;
    }
    Ok(filter)
}

impl FirFilter {
    pub fn order(&self) -> usize {
        self.taps.len() - 1
    }

    /// `|H(e^{j 2 pi f / fs})|`.
    pub fn gain_at(&self, freq: f64) -> f64 {
        let w = 2.0 * PI * freq / self.fs;
        let (mut re, mut im) = (0.0, 0.0);
        for (n, &h) in self.taps.iter().enumerate() {
            let phase = w * n as f64;
            re += h * phase.cos();
            im -= h * phase.sin();
        }
        re.hypot(im)
    }
}

/// Per-channel causal convolution with zero left-padding, shifted left by
/// `order / 2` samples to cancel the group delay; the last `order / 2`
/// outputs are zero. Length is preserved.
pub fn filter_signal(x: &Matrix, filter: &FirFilter) -> Result<Matrix> {
    let order = filter.order();
    let len = x.cols();
    if len <= order {
        return Err(Error::InsufficientLength { samples: len, order });
    }
    let delay = order / 2;
    let n_out = len - delay;
    let mut out = Matrix::zeros(x.rows(), len);
    for c in 0..x.rows() {
        let xr = x.row(c);
        let yr = &mut out.row_mut(c)[..n_out];
        // y[t] = sum_k taps[k] * x[t + delay - k], taps added in ascending k
        for (k, &h) in filter.taps.iter().enumerate() {
            let t0 = k.saturating_sub(delay);
            let src = &xr[t0 + delay - k..n_out + delay - k];
            for (y, &v) in yr[t0..].iter_mut().zip(src) {
                *y += h * v;
            }
        }
    }
    Ok(out)
}
