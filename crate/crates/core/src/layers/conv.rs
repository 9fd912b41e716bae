use crate::error::{Error, Result};
use crate::tensor::{Matrix, Rng};

use super::dense::init_weight;

/// Valid 1-D cross-correlation over time with channel mixing.
///
/// `kernels[o][c * k + j]` weighs input channel `c` at lag `j` for output
/// channel `o`.
#[derive(Debug, Clone)]
pub struct Conv1d {
    pub kernels: Matrix,
    pub kernel_len: usize,
    pub stride: usize,
    /// `1 x out_ch`.
    pub bias: Matrix,
    pub grad_kernels: Matrix,
    pub grad_bias: Matrix,
    input: Option<Vec<Matrix>>,
}

/// Output length of a valid convolution or pooling window.
pub fn valid_len(len: usize, kernel: usize, stride: usize) -> Option<usize> {
    (len >= kernel && kernel >= 1 && stride >= 1).then(|| (len - kernel) / stride + 1)
}

impl Conv1d {
    pub fn new(kernels: Matrix, kernel_len: usize, stride: usize, bias: Vec<f64>) -> Result<Self> {
        if kernel_len == 0 || stride == 0 {
            return Err(Error::shape("kernel_len and stride must be >= 1"));
        }
        if kernels.cols() % kernel_len != 0 {
            return Err(Error::shape(format!(
                "kernel matrix has {} columns, not a multiple of kernel_len {kernel_len}",
                kernels.cols()
            )));
        }
        if bias.len() != kernels.rows() {
            return Err(Error::shape(format!("bias length {} vs {} output channels", bias.len(), kernels.rows())));
        }
        let (o, ik) = kernels.shape();
        Ok(Self {
            bias: Matrix::from_vec(1, o, bias)?,
            grad_kernels: Matrix::zeros(o, ik),
            grad_bias: Matrix::zeros(1, o),
            kernels,
            kernel_len,
            stride,
            input: None,
        })
    }

    /// Kernels uniform in `+-1/sqrt(in_ch * k)`, zero bias.
    pub fn init(rng: &mut Rng, in_ch: usize, out_ch: usize, kernel_len: usize, stride: usize) -> Self {
        let k = init_weight(rng, out_ch, in_ch * kernel_len);
        Self::new(k, kernel_len, stride, vec![0.0; out_ch]).expect("consistent shapes")
    }

    pub fn in_channels(&self) -> usize {
        self.kernels.cols() / self.kernel_len
    }

    pub fn out_channels(&self) -> usize {
        self.kernels.rows()
    }

    pub fn forward(&mut self, x: Vec<Matrix>, training: bool) -> Result<Vec<Matrix>> {
        let y = conv1d_forward(&x, self)?;
        self.input = training.then_some(x);
        Ok(y)
    }

    pub fn backward(&mut self, grad_out: &[Matrix], need_grad_x: bool) -> Result<Option<Vec<Matrix>>> {
        let x = self
            .input
            .as_ref()
            .ok_or_else(|| Error::Invariant("conv1d backward called without a training forward".into()))?;
        let g = conv1d_backward(grad_out, x, self, need_grad_x)?;
        self.grad_kernels = g.grad_kernels;
        self.grad_bias = Matrix::from_vec(1, g.grad_bias.len(), g.grad_bias)?;
        Ok(g.grad_x)
    }
}

fn check_input(x: &Matrix, layer: &Conv1d) -> Result<usize> {
    if x.rows() != layer.in_channels() {
        return Err(Error::shape(format!(
            "conv1d: input has {} channels, layer expects {}",
            x.rows(),
            layer.in_channels()
        )));
    }
    valid_len(x.cols(), layer.kernel_len, layer.stride).ok_or_else(|| {
        Error::shape(format!("conv1d: input length {} shorter than kernel {}", x.cols(), layer.kernel_len))
    })
}

/// Rows split by stride phase: `phases[c][p][u] = x[c][u * s + p]`, so
/// `x[c][t * s + j]` is `phases[c][j % s][t + j / s]`.
fn stride_phases(x: &Matrix, s: usize) -> Vec<Vec<Vec<f64>>> {
    (0..x.rows()).map(|c| (0..s).map(|p| x.row(c).iter().skip(p).step_by(s).copied().collect()).collect()).collect()
}

/// Four-lane dot product; fixed lane order keeps it deterministic.
fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut lanes = [0.0; 4];
    let (ca, cb) = (a.chunks_exact(4), b.chunks_exact(4));
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        for l in 0..4 {
            lanes[l] += x[l] * y[l];
        }
    }
    let mut tail = 0.0;
    for (x, y) in ra.iter().zip(rb) {
        tail += x * y;
    }
    (lanes[0] + lanes[1]) + (lanes[2] + lanes[3]) + tail
}

pub fn conv1d_forward(x: &[Matrix], layer: &Conv1d) -> Result<Vec<Matrix>> {
    let (k, s) = (layer.kernel_len, layer.stride);
    x.iter()
        .map(|xn| {
            let out_len = check_input(xn, layer)?;
            let phases = stride_phases(xn, s);
            let mut y = Matrix::zeros(layer.out_channels(), out_len);
            for o in 0..layer.out_channels() {
                let w_row = layer.kernels.row(o);
                let y_row = y.row_mut(o);
                for (c, ph) in phases.iter().enumerate() {
                    for j in 0..k {
                        let w = w_row[c * k + j];
                        let src = &ph[j % s][j / s..j / s + out_len];
                        for (yt, xt) in y_row.iter_mut().zip(src) {
                            *yt += w * xt;
                        }
                    }
                }
                let b = layer.bias[(0, o)];
                for yt in y_row.iter_mut() {
                    *yt += b;
                }
            }
            Ok(y)
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct Conv1dGrads {
    pub grad_x: Option<Vec<Matrix>>,
    pub grad_kernels: Matrix,
    pub grad_bias: Vec<f64>,
}

pub fn conv1d_backward(grad_out: &[Matrix], x: &[Matrix], layer: &Conv1d, need_grad_x: bool) -> Result<Conv1dGrads> {
    if grad_out.len() != x.len() {
        return Err(Error::shape(format!("conv1d_backward: {} gradients for {} inputs", grad_out.len(), x.len())));
    }
    let (k, s) = (layer.kernel_len, layer.stride);
    let (in_ch, out_ch) = (layer.in_channels(), layer.out_channels());
    let mut grad_kernels = Matrix::zeros(out_ch, in_ch * k);
    let mut grad_bias = vec![0.0; out_ch];
    let mut grad_x = need_grad_x.then(|| Vec::with_capacity(x.len()));

    for (gn, xn) in grad_out.iter().zip(x) {
        let out_len = check_input(xn, layer)?;
        if gn.shape() != (out_ch, out_len) {
            return Err(Error::shape(format!(
                "conv1d_backward: gradient {:?}, expected {:?}",
                gn.shape(),
                (out_ch, out_len)
            )));
        }
        let phases = stride_phases(xn, s);
        for o in 0..out_ch {
            let g_row = gn.row(o);
            grad_bias[o] += g_row.iter().sum::<f64>();
            let gk_row = grad_kernels.row_mut(o);
            for (c, ph) in phases.iter().enumerate() {
                for j in 0..k {
                    gk_row[c * k + j] += dot(g_row, &ph[j % s][j / s..j / s + out_len]);
                }
            }
        }
        if let Some(gx) = grad_x.as_mut() {
            let mut gxn = Matrix::zeros(in_ch, xn.cols());
            for o in 0..out_ch {
                let g_row = gn.row(o);
                let w_row = layer.kernels.row(o);
                for c in 0..in_ch {
                    let gx_row = gxn.row_mut(c);
                    for j in 0..k {
                        let w = w_row[c * k + j];
                        if s == 1 {
                            for (gxt, g) in gx_row[j..j + out_len].iter_mut().zip(g_row) {
                                *gxt += w * g;
                            }
                        } else {
                            for (t, g) in g_row.iter().enumerate() {
                                gx_row[t * s + j] += w * g;
                            }
                        }
                    }
                }
            }
            gx.push(gxn);
        }
    }
    Ok(Conv1dGrads { grad_x, grad_kernels, grad_bias })
}
