use crate::error::{Error, Result};
use crate::tensor::{Matrix, Rng};

/// `y[n] = W x[n] + b` for every row `n` of `x`.
pub fn dense_forward(x: &Matrix, w: &Matrix, b: &[f64]) -> Result<Matrix> {
    if x.cols() != w.cols() {
        return Err(Error::shape(format!(
            "dense_forward: input has {} features, weight expects {}",
            x.cols(),
            w.cols()
        )));
    }
    if b.len() != w.rows() {
        return Err(Error::shape(format!(
            "dense_forward: bias length {} vs {} outputs",
            b.len(),
            w.rows()
        )));
    }
    let mut y = Matrix::zeros(x.rows(), w.rows());
    for n in 0..x.rows() {
        let xn = x.row(n);
        for (o, y_no) in y.row_mut(n).iter_mut().enumerate() {
            let mut acc = 0.0;
            for (w_oi, x_i) in w.row(o).iter().zip(xn) {
                acc += w_oi * x_i;
            }
            *y_no = acc + b[o];
        }
    }
    Ok(y)
}

/// Gradients of [`dense_forward`].
#[derive(Debug, Clone)]
pub struct DenseGrads {
    pub grad_x: Matrix,
    pub grad_w: Matrix,
    pub grad_b: Vec<f64>,
}

/// `grad_W = sum_n grad_y[n] (x) x[n]`, `grad_b = sum_n grad_y[n]`,
/// `grad_x[n] = W^T grad_y[n]`. Batch sums run in ascending `n`.
pub fn dense_backward(grad_y: &Matrix, x: &Matrix, w: &Matrix) -> Result<DenseGrads> {
    if grad_y.rows() != x.rows() || grad_y.cols() != w.rows() || x.cols() != w.cols() {
        return Err(Error::shape(format!(
            "dense_backward: grad_y {}x{}, x {}x{}, W {}x{}",
            grad_y.rows(),
            grad_y.cols(),
            x.rows(),
            x.cols(),
            w.rows(),
            w.cols()
        )));
    }
    let (batch, outputs, inputs) = (x.rows(), w.rows(), w.cols());
    let mut grad_w = Matrix::zeros(outputs, inputs);
    let mut grad_b = vec![0.0; outputs];
    let mut grad_x = Matrix::zeros(batch, inputs);
    for n in 0..batch {
        let gn = grad_y.row(n);
        let xn = x.row(n);
        for o in 0..outputs {
            let g = gn[o];
            grad_b[o] += g;
            for (gw, &xi) in grad_w.row_mut(o).iter_mut().zip(xn) {
                *gw += g * xi;
            }
        }
        let gx = grad_x.row_mut(n);
        for o in 0..outputs {
            let g = gn[o];
            for (gxi, &w_oi) in gx.iter_mut().zip(w.row(o)) {
                *gxi += w_oi * g;
            }
        }
    }
    Ok(DenseGrads { grad_x, grad_w, grad_b })
}

/// Uniform `[-1/sqrt(fan_in), 1/sqrt(fan_in))`, row-major draws.
pub fn init_weight(rng: &mut Rng, outputs: usize, fan_in: usize) -> Matrix {
    let bound = 1.0 / (fan_in as f64).sqrt();
    let u = rng.uniform_matrix(outputs, fan_in);
    u.map(|x| (2.0 * x - 1.0) * bound)
}

/// Plain fully connected layer.
#[derive(Debug, Clone)]
pub struct Dense {
    pub weight: Matrix,
    /// Stored as a `1 x out` row.
    pub bias: Matrix,
    pub grad_weight: Matrix,
    pub grad_bias: Matrix,
    input: Option<Matrix>,
}

impl Dense {
    pub fn new(weight: Matrix, bias: Vec<f64>) -> Result<Self> {
        if bias.len() != weight.rows() {
            return Err(Error::shape(format!(
                "bias length {} vs {} outputs",
                bias.len(),
                weight.rows()
            )));
        }
        let (o, i) = weight.shape();
        Ok(Self {
            bias: Matrix::from_vec(1, o, bias)?,
            grad_weight: Matrix::zeros(o, i),
            grad_bias: Matrix::zeros(1, o),
            weight,
            input: None,
        })
    }

    /// Weight drawn from `rng`, zero bias.
    pub fn init(rng: &mut Rng, inputs: usize, outputs: usize) -> Self {
        Self::new(init_weight(rng, outputs, inputs), vec![0.0; outputs]).expect("consistent shapes")
    }

    pub fn inputs(&self) -> usize {
        self.weight.cols()
    }

    pub fn outputs(&self) -> usize {
        self.weight.rows()
    }

    pub fn forward(&mut self, x: Matrix, training: bool) -> Result<Matrix> {
        let y = dense_forward(&x, &self.weight, self.bias.as_slice())?;
        self.input = training.then_some(x);
        Ok(y)
    }

    /// Stores parameter gradients and returns the raw [`DenseGrads`].
    pub(crate) fn backward_raw(&mut self, grad_y: &Matrix) -> Result<DenseGrads> {
        let x = self
            .input
            .as_ref()
            .ok_or_else(|| Error::Invariant("dense backward called without a training forward".into()))?;
        dense_backward(grad_y, x, &self.weight)
    }

    pub fn backward(&mut self, grad_y: &Matrix) -> Result<Matrix> {
        let g = self.backward_raw(grad_y)?;
        self.grad_weight = g.grad_w;
        self.grad_bias = Matrix::from_vec(1, g.grad_b.len(), g.grad_b)?;
        Ok(g.grad_x)
    }
}
