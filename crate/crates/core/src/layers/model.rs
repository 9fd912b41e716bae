use serde::{Deserialize, Serialize};

use super::activation::{activation_backward, activation_forward, ActivationKind};
use super::conv::{valid_len, Conv1d};
use super::dense::Dense;
use super::dropout::{draw_scales, DropoutLayer};
use super::frozen::FrozenDense;
use super::mask::{make_mask, MaskMatrix, MaskMode};
use super::pool::{mean_pool_backward, mean_pool_forward};
use crate::error::{Error, Result};
use crate::tensor::{derive_seed, Matrix, Rng};

/// Activations flowing between layers: either one `channels x time` matrix
/// per sample, or a flat `samples x features` matrix.
#[derive(Debug, Clone, PartialEq)]
pub enum Batch {
    Seq(Vec<Matrix>),
    Flat(Matrix),
}

impl Batch {
    pub fn len(&self) -> usize {
        match self {
            Batch::Seq(v) => v.len(),
            Batch::Flat(m) => m.rows(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn map(&self, f: impl Fn(&Matrix) -> Result<Matrix>) -> Result<Batch> {
        Ok(match self {
            Batch::Seq(v) => Batch::Seq(v.iter().map(f).collect::<Result<_>>()?),
            Batch::Flat(m) => Batch::Flat(f(m)?),
        })
    }

    fn zip_map(&self, other: &Batch, f: impl Fn(&Matrix, &Matrix) -> Result<Matrix>) -> Result<Batch> {
        Ok(match (self, other) {
            (Batch::Seq(a), Batch::Seq(b)) if a.len() == b.len() => {
                Batch::Seq(a.iter().zip(b).map(|(x, y)| f(x, y)).collect::<Result<_>>()?)
            }
            (Batch::Flat(a), Batch::Flat(b)) => Batch::Flat(f(a, b)?),
            _ => return Err(Error::shape("batch layouts differ")),
        })
    }

    fn matrices(&self) -> Vec<&Matrix> {
        match self {
            Batch::Seq(v) => v.iter().collect(),
            Batch::Flat(m) => vec![m],
        }
    }

    fn expect_seq(self, what: &str) -> Result<Vec<Matrix>> {
        match self {
            Batch::Seq(v) => Ok(v),
            Batch::Flat(_) => Err(Error::shape(format!("{what} expects a time-series batch"))),
        }
    }

    fn expect_flat(self, what: &str) -> Result<Matrix> {
        match self {
            Batch::Flat(m) => Ok(m),
            Batch::Seq(_) => Err(Error::shape(format!("{what} expects a flat batch"))),
        }
    }
}

/// One entry of a model description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum LayerSpec {
    Conv1d {
        out_channels: usize,
        kernel_len: usize,
        #[serde(default = "one")]
        stride: usize,
    },
    /// Pointwise mixing of channels at every time step.
    ChannelMix { out_channels: usize },
    Activation { function: ActivationKind },
    MeanPool { kernel: usize, stride: usize },
    Flatten,
    Dropout { p: f64 },
    Dense { units: usize },
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassifierMode {
    None,
    Frozen,
    Sparse,
}

impl ClassifierMode {
    pub fn mask_mode(self) -> Option<MaskMode> {
        match self {
            ClassifierMode::None => None,
            ClassifierMode::Frozen => Some(MaskMode::Frozen),
            ClassifierMode::Sparse => Some(MaskMode::Sparse),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassifierSpec {
    pub mode: ClassifierMode,
    #[serde(default)]
    pub threshold_t: f64,
}

impl Default for ClassifierSpec {
    fn default() -> Self {
        Self { mode: ClassifierMode::None, threshold_t: 0.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Shape {
    Seq { channels: usize, len: usize },
    Flat { features: usize },
}

#[derive(Debug, Clone)]
pub struct ActivationLayer {
    pub kind: ActivationKind,
    input: Option<Batch>,
}

#[derive(Debug, Clone)]
pub struct MeanPoolLayer {
    pub kernel: usize,
    pub stride: usize,
    input_len: usize,
}

#[derive(Debug, Clone)]
pub struct FlattenLayer {
    channels: usize,
    len: usize,
}

#[derive(Debug, Clone)]
pub struct Dropout {
    pub config: DropoutLayer,
    pub rng: Rng,
    scales: Option<Batch>,
}

#[derive(Debug, Clone)]
pub enum Layer {
    Conv1d(Conv1d),
    Activation(ActivationLayer),
    MeanPool(MeanPoolLayer),
    Flatten(FlattenLayer),
    Dropout(Dropout),
    Dense(Dense),
    FrozenDense(FrozenDense),
}

impl Layer {
    pub fn kind_name(&self) -> &'static str {
        match self {
            Layer::Conv1d(_) => "conv1d",
            Layer::Activation(_) => "activation",
            Layer::MeanPool(_) => "mean_pool",
            Layer::Flatten(_) => "flatten",
            Layer::Dropout(_) => "dropout",
            Layer::Dense(_) => "dense",
            Layer::FrozenDense(_) => "frozen_dense",
        }
    }

    fn forward(&mut self, x: Batch, training: bool) -> Result<Batch> {
        match self {
            Layer::Conv1d(c) => Ok(Batch::Seq(c.forward(x.expect_seq("conv1d")?, training)?)),
            Layer::Activation(a) => {
                let kind = a.kind;
                let y = x.map(|m| Ok(activation_forward(m, kind)))?;
                a.input = training.then_some(x);
                Ok(y)
            }
            Layer::MeanPool(p) => {
                let v = x.expect_seq("mean_pool")?;
                if let Some(first) = v.first() {
                    p.input_len = first.cols();
                }
                Ok(Batch::Seq(
                    v.iter().map(|m| mean_pool_forward(m, p.kernel, p.stride)).collect::<Result<_>>()?,
                ))
            }
            Layer::Flatten(f) => {
                let v = x.expect_seq("flatten")?;
                let n = v.len();
                let mut data = Vec::with_capacity(n * f.channels * f.len);
                for m in &v {
                    if m.shape() != (f.channels, f.len) {
                        return Err(Error::shape(format!(
                            "flatten: sample {:?}, expected {:?}",
                            m.shape(),
                            (f.channels, f.len)
                        )));
                    }
                    data.extend_from_slice(m.as_slice());
                }
                Ok(Batch::Flat(Matrix::from_vec(n, f.channels * f.len, data)?))
            }
            Layer::Dropout(d) => {
                if !training || d.config.p == 0.0 {
                    d.scales = None;
                    return Ok(x);
                }
                let p = d.config.p;
                let rng = &mut d.rng;
                // draw in sample order so the stream does not depend on layout
                let scales = match &x {
                    Batch::Seq(v) => Batch::Seq(
                        v.iter()
                            .map(|m| Matrix::from_vec(m.rows(), m.cols(), draw_scales(p, m.len(), rng)))
                            .collect::<Result<_>>()?,
                    ),
                    Batch::Flat(m) => Batch::Flat(Matrix::from_vec(m.rows(), m.cols(), draw_scales(p, m.len(), rng))?),
                };
                let y = x.zip_map(&scales, hadamard)?;
                d.scales = Some(scales);
                Ok(y)
            }
            Layer::Dense(dense) => Ok(Batch::Flat(dense.forward(x.expect_flat("dense")?, training)?)),
            Layer::FrozenDense(fd) => Ok(Batch::Flat(fd.forward(x.expect_flat("frozen_dense")?, training)?)),
        }
    }

    fn backward(&mut self, grad: Batch, need_grad_x: bool) -> Result<Option<Batch>> {
        match self {
            Layer::Conv1d(c) => Ok(c.backward(&grad.expect_seq("conv1d")?, need_grad_x)?.map(Batch::Seq)),
            Layer::Activation(a) => {
                let x = a.input.as_ref().ok_or_else(missing_forward)?;
                let kind = a.kind;
                Ok(Some(grad.zip_map(x, |g, x| activation_backward(g, x, kind))?))
            }
            Layer::MeanPool(p) => {
                let g = grad.expect_seq("mean_pool")?;
                Ok(Some(Batch::Seq(
                    g.iter()
                        .map(|m| mean_pool_backward(m, p.input_len, p.kernel, p.stride))
                        .collect::<Result<_>>()?,
                )))
            }
            Layer::Flatten(f) => {
                let g = grad.expect_flat("flatten")?;
                let v = (0..g.rows())
                    .map(|n| Matrix::from_vec(f.channels, f.len, g.row(n).to_vec()))
                    .collect::<Result<_>>()?;
                Ok(Some(Batch::Seq(v)))
            }
            Layer::Dropout(d) => match &d.scales {
                Some(s) => Ok(Some(grad.zip_map(s, hadamard)?)),
                None => Ok(Some(grad)),
            },
            Layer::Dense(dense) => Ok(Some(Batch::Flat(dense.backward(&grad.expect_flat("dense")?)?))),
            Layer::FrozenDense(fd) => Ok(Some(Batch::Flat(fd.backward(&grad.expect_flat("frozen_dense")?)?))),
        }
    }
}

fn missing_forward() -> Error {
    Error::Invariant("backward called without a training forward".into())
}

fn hadamard(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    a.check_same_shape(b, "hadamard")?;
    let data = a.as_slice().iter().zip(b.as_slice()).map(|(x, y)| x * y).collect();
    Matrix::from_vec(a.rows(), a.cols(), data)
}

/// Mutable view of one parameter tensor for an optimizer step.
pub struct ParamMut<'a> {
    pub name: String,
    pub value: &'a mut Matrix,
    pub grad: &'a Matrix,
    /// `Some(keep)` when entries with `keep == 0` must never be updated.
    pub keep: Option<&'a Matrix>,
}

/// A sequential network whose last layer is the classifier.
#[derive(Debug, Clone)]
pub struct Model {
    layers: Vec<Layer>,
    input_channels: usize,
    input_len: usize,
    n_classes: usize,
}

impl Model {
    /// Builds and initializes a network. Feature layers draw their weights
    /// in order from the `init` substream of `seed`; the classifier mask uses
    /// its own `mask` substream so that enabling a mask never shifts any
    /// other random draw.
    pub fn build(
        specs: &[LayerSpec],
        classifier: &ClassifierSpec,
        input_channels: usize,
        input_len: usize,
        n_classes: usize,
        seed: u64,
    ) -> Result<Model> {
        if n_classes < 2 {
            return Err(Error::Config(format!("need at least 2 classes, got {n_classes}")));
        }
        let mut init = Rng::substream(seed, "init");
        let mut shape = Shape::Seq { channels: input_channels, len: input_len };
        let mut layers = Vec::with_capacity(specs.len() + 2);

        let flatten_if_needed = |shape: &mut Shape, layers: &mut Vec<Layer>| {
            if let Shape::Seq { channels, len } = *shape {
                layers.push(Layer::Flatten(FlattenLayer { channels, len }));
                *shape = Shape::Flat { features: channels * len };
            }
        };

        for (i, spec) in specs.iter().enumerate() {
            let at = |msg: String| Error::Config(format!("layer {i} ({spec:?}): {msg}"));
            match *spec {
                LayerSpec::Conv1d { out_channels, kernel_len, stride } => {
                    let Shape::Seq { channels, len } = shape else {
                        return Err(at("conv1d after flatten".into()));
                    };
                    if out_channels == 0 || kernel_len == 0 || stride == 0 {
                        return Err(at("sizes must be >= 1".into()));
                    }
                    let out_len = valid_len(len, kernel_len, stride)
                        .ok_or_else(|| at(format!("kernel {kernel_len} longer than input {len}")))?;
                    layers.push(Layer::Conv1d(Conv1d::init(&mut init, channels, out_channels, kernel_len, stride)));
                    shape = Shape::Seq { channels: out_channels, len: out_len };
                }
                LayerSpec::ChannelMix { out_channels } => {
                    let Shape::Seq { channels, len } = shape else {
                        return Err(at("channel_mix after flatten".into()));
                    };
                    if out_channels == 0 {
                        return Err(at("out_channels must be >= 1".into()));
                    }
                    layers.push(Layer::Conv1d(Conv1d::init(&mut init, channels, out_channels, 1, 1)));
                    shape = Shape::Seq { channels: out_channels, len };
                }
                LayerSpec::Activation { function } => {
                    layers.push(Layer::Activation(ActivationLayer { kind: function, input: None }));
                }
                LayerSpec::MeanPool { kernel, stride } => {
                    let Shape::Seq { channels, len } = shape else {
                        return Err(at("mean_pool after flatten".into()));
                    };
                    let out_len = valid_len(len, kernel, stride)
                        .ok_or_else(|| at(format!("pool window {kernel} invalid for length {len}")))?;
                    layers.push(Layer::MeanPool(MeanPoolLayer { kernel, stride, input_len: len }));
                    shape = Shape::Seq { channels, len: out_len };
                }
                LayerSpec::Flatten => {
                    if matches!(shape, Shape::Flat { .. }) {
                        return Err(at("already flat".into()));
                    }
                    flatten_if_needed(&mut shape, &mut layers);
                }
                LayerSpec::Dropout { p } => {
                    let dseed = derive_seed(seed, &format!("dropout/{}", layers.len()));
                    let config = DropoutLayer::new(p, dseed).map_err(|e| at(e.to_string()))?;
                    layers.push(Layer::Dropout(Dropout { rng: Rng::new(dseed), config, scales: None }));
                }
                LayerSpec::Dense { units } => {
                    if units == 0 {
                        return Err(at("units must be >= 1".into()));
                    }
                    flatten_if_needed(&mut shape, &mut layers);
                    let Shape::Flat { features } = shape else { unreachable!() };
                    layers.push(Layer::Dense(Dense::init(&mut init, features, units)));
                    shape = Shape::Flat { features: units };
                }
            }
        }

        flatten_if_needed(&mut shape, &mut layers);
        let Shape::Flat { features } = shape else { unreachable!() };
        let dense = Dense::init(&mut init, features, n_classes);
        let head = match classifier.mode.mask_mode() {
            None => Layer::Dense(dense),
            Some(mode) => {
                let mask = make_mask(n_classes, features, classifier.threshold_t, mode, derive_seed(seed, "mask"))?;
                Layer::FrozenDense(FrozenDense::new(dense, mask)?)
            }
        };
        layers.push(head);
        Ok(Model { layers, input_channels, input_len, n_classes })
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Layer] {
        &mut self.layers
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn input_shape(&self) -> (usize, usize) {
        (self.input_channels, self.input_len)
    }

    /// Name used for parameters and checkpoint records of layer `i`.
    pub fn layer_name(&self, i: usize) -> String {
        format!("{i}:{}", self.layers[i].kind_name())
    }

    pub fn forward(&mut self, x: Batch, training: bool) -> Result<Matrix> {
        if let Batch::Seq(v) = &x {
            if let Some(m) = v.iter().find(|m| m.shape() != (self.input_channels, self.input_len)) {
                return Err(Error::shape(format!(
                    "model input {:?}, expected {:?}",
                    m.shape(),
                    (self.input_channels, self.input_len)
                )));
            }
        }
        let mut h = x;
        for layer in &mut self.layers {
            h = layer.forward(h, training)?;
        }
        h.expect_flat("classifier output")
    }

    /// Backpropagates `grad_logits`, leaving parameter gradients in each
    /// layer. The input gradient of the first layer is not computed.
    pub fn backward(&mut self, grad_logits: &Matrix) -> Result<()> {
        let mut g = Batch::Flat(grad_logits.clone());
        for i in (0..self.layers.len()).rev() {
            match self.layers[i].backward(g, i > 0)? {
                Some(next) => g = next,
                None => break,
            }
        }
        Ok(())
    }

    /// Parameters in layer order, weight before bias.
    pub fn params_mut(&mut self) -> Vec<ParamMut<'_>> {
        let mut out = Vec::new();
        for (i, layer) in self.layers.iter_mut().enumerate() {
            let name = format!("{i}:{}", layer.kind_name());
            match layer {
                Layer::Conv1d(c) => {
                    out.push(ParamMut { name: format!("{name}.kernels"), value: &mut c.kernels, grad: &c.grad_kernels, keep: None });
                    out.push(ParamMut { name: format!("{name}.bias"), value: &mut c.bias, grad: &c.grad_bias, keep: None });
                }
                Layer::Dense(d) => {
                    out.push(ParamMut { name: format!("{name}.weight"), value: &mut d.weight, grad: &d.grad_weight, keep: None });
                    out.push(ParamMut { name: format!("{name}.bias"), value: &mut d.bias, grad: &d.grad_bias, keep: None });
                }
                Layer::FrozenDense(fd) => {
                    let d = &mut fd.dense;
                    out.push(ParamMut {
                        name: format!("{name}.weight"),
                        value: &mut d.weight,
                        grad: &d.grad_weight,
                        keep: Some(&fd.mask.keep),
                    });
                    out.push(ParamMut { name: format!("{name}.bias"), value: &mut d.bias, grad: &d.grad_bias, keep: None });
                }
                _ => {}
            }
        }
        out
    }

    /// Read-only parameter listing matching [`Model::params_mut`].
    pub fn params(&self) -> Vec<(String, &Matrix)> {
        let mut out = Vec::new();
        for (i, layer) in self.layers.iter().enumerate() {
            let name = format!("{i}:{}", layer.kind_name());
            match layer {
                Layer::Conv1d(c) => {
                    out.push((format!("{name}.kernels"), &c.kernels));
                    out.push((format!("{name}.bias"), &c.bias));
                }
                Layer::Dense(d) => {
                    out.push((format!("{name}.weight"), &d.weight));
                    out.push((format!("{name}.bias"), &d.bias));
                }
                Layer::FrozenDense(fd) => {
                    out.push((format!("{name}.weight"), &fd.dense.weight));
                    out.push((format!("{name}.bias"), &fd.dense.bias));
                }
                _ => {}
            }
        }
        out
    }

    pub fn classifier(&self) -> &Layer {
        self.layers.last().expect("model has a classifier")
    }

    pub fn classifier_weight(&self) -> &Matrix {
        match self.classifier() {
            Layer::Dense(d) => &d.weight,
            Layer::FrozenDense(fd) => &fd.dense.weight,
            _ => unreachable!("classifier is always dense"),
        }
    }

    pub fn classifier_bias(&self) -> &Matrix {
        match self.classifier() {
            Layer::Dense(d) => &d.bias,
            Layer::FrozenDense(fd) => &fd.dense.bias,
            _ => unreachable!("classifier is always dense"),
        }
    }

    pub fn classifier_mask(&self) -> Option<&MaskMatrix> {
        match self.classifier() {
            Layer::FrozenDense(fd) => Some(&fd.mask),
            _ => None,
        }
    }

    /// Re-checks every mask contract; run after each optimizer step.
    pub fn verify_invariants(&self) -> Result<()> {
        for layer in &self.layers {
            if let Layer::FrozenDense(fd) = layer {
                fd.verify()?;
            }
        }
        Ok(())
    }

    /// Predicted class per row of `logits`; ties go to the lowest index.
    pub fn predict(logits: &Matrix) -> Vec<usize> {
        (0..logits.rows())
            .map(|n| {
                let row = logits.row(n);
                let mut best = 0;
                for (c, &v) in row.iter().enumerate().skip(1) {
                    if v > row[best] {
                        best = c;
                    }
                }
                best
            })
            .collect()
    }

    pub fn parameter_count(&self) -> usize {
        self.params().iter().map(|(_, m)| m.len()).sum()
    }

    #[doc(hidden)]
    pub fn debug_batch_shapes(b: &Batch) -> Vec<(usize, usize)> {
        b.matrices().iter().map(|m| m.shape()).collect()
    }
}
