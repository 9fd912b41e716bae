use crate::error::{Error, Result};
use crate::tensor::Matrix;

use super::conv::valid_len;

/// Per-channel mean over windows of `kernel` samples taken every `stride`.
pub fn mean_pool_forward(x: &Matrix, kernel: usize, stride: usize) -> Result<Matrix> {
    let out_len = valid_len(x.cols(), kernel, stride).ok_or_else(|| {
        Error::shape(format!("mean_pool: length {} shorter than window {kernel}", x.cols()))
    })?;
    let inv = 1.0 / kernel as f64;
    let mut y = Matrix::zeros(x.rows(), out_len);
    for c in 0..x.rows() {
        let x_row = x.row(c);
        for (t, yt) in y.row_mut(c).iter_mut().enumerate() {
            *yt = x_row[t * stride..t * stride + kernel].iter().sum::<f64>() * inv;
        }
    }
    Ok(y)
}

pub fn mean_pool_backward(grad_y: &Matrix, input_len: usize, kernel: usize, stride: usize) -> Result<Matrix> {
    let out_len = valid_len(input_len, kernel, stride)
        .ok_or_else(|| Error::shape("mean_pool_backward: window longer than input"))?;
    if grad_y.cols() != out_len {
        return Err(Error::shape(format!(
            "mean_pool_backward: gradient length {} vs {out_len}",
            grad_y.cols()
        )));
    }
    let inv = 1.0 / kernel as f64;
    let mut gx = Matrix::zeros(grad_y.rows(), input_len);
    for c in 0..grad_y.rows() {
        let g_row = grad_y.row(c);
        let gx_row = gx.row_mut(c);
        for (t, &g) in g_row.iter().enumerate() {
            for v in &mut gx_row[t * stride..t * stride + kernel] {
                *v += g * inv;
            }
        }
    }
    Ok(gx)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn window_means() {
        let x = Matrix::from_rows(&[&[1.0, 2.0, 3.0, 4.0, 5.0]]).unwrap();
        let y = mean_pool_forward(&x, 2, 2).unwrap();
        assert_eq!(y.as_slice(), &[1.5, 3.5]);
        let y = mean_pool_forward(&x, 3, 1).unwrap();
        assert_eq!(y.as_slice(), &[2.0, 3.0, 4.0]);
    }

    #[test]
    fn backward_spreads_evenly() {
        let g = Matrix::from_rows(&[&[1.0, 1.0, 1.0]]).unwrap();
        let gx = mean_pool_backward(&g, 5, 3, 1).unwrap();
        let third = 1.0 / 3.0;
        assert_eq!(gx.as_slice(), &[third, 2.0 * third, 3.0 * third, 2.0 * third, third]);
    }

    #[test]
    fn too_short() {
        assert!(mean_pool_forward(&Matrix::zeros(1, 2), 3, 1).is_err());
    }
}
