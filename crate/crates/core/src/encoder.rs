//! The spectral encoder and the heads on top of it (forward pass only).
//!
//! Shapes use row-vector convention: node features are `N × C` matrices and
//! weights multiply from the right.

use ndarray::{s, Array1, Array2, ArrayView2, Axis};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Uniform};
use serde::{Deserialize, Serialize};

use crate::augment::GraphView;
use crate::error::{Error, Result};
use crate::spectral::{renormalized_propagation, HermitianMatrix, PhaseSpec};

pub use crate::spectral::ComplexFeatures;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelDims {
    /// Width of the trainable input embedding table.
    pub input: usize,
    /// Output channels of every convolution layer.
    pub hidden: usize,
    /// Node representation size `d`.
    pub embed: usize,
    pub layers: usize,
}

impl Default for ModelDims {
    fn default() -> Self {
        Self {
            input: 64,
            hidden: 64,
            embed: 64,
            layers: 2,
        }
    }
}

impl ModelDims {
    pub fn uniform(dim: usize) -> Self {
        Self {
            input: dim,
            hidden: dim,
            embed: dim,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.input == 0 || self.hidden == 0 || self.embed == 0 || self.layers == 0 {
            return Err(Error::Config(format!("all model dimensions must be positive: {self:?}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvParams {
    pub weight: Array2<f64>,
    pub bias_re: Array1<f64>,
    pub bias_im: Array1<f64>,
}

/// Whether a tensor is subject to weight decay.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TensorKind {
    Embedding,
    Weight,
    Bias,
}

impl TensorKind {
    pub fn decays(self) -> bool {
        !matches!(self, TensorKind::Bias)
    }
}

pub struct TensorRef<'a> {
    pub name: String,
    pub kind: TensorKind,
    pub shape: (usize, usize),
    pub data: &'a [f64],
}

pub struct TensorMut<'a> {
    pub name: String,
    pub kind: TensorKind,
    pub shape: (usize, usize),
    pub data: &'a mut [f64],
}

/// Every trainable tensor. Gradients and optimizer moments reuse this type.
#[derive(Debug, Clone, PartialEq)]
pub struct EncoderParams {
    pub embeddings: Array2<f64>,
    pub conv: Vec<ConvParams>,
    pub fc_weight: Array2<f64>,
    pub fc_bias: Array1<f64>,
    pub proj_weight1: Array2<f64>,
    pub proj_bias1: Array1<f64>,
    pub proj_weight2: Array2<f64>,
    pub proj_bias2: Array1<f64>,
    pub fusion_weight: Array2<f64>,
    pub fusion_bias: Array1<f64>,
    pub pred_weight: Array1<f64>,
    pub pred_bias: Array1<f64>,
}

fn glorot<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> Array2<f64> {
    let bound = (6.0 / (rows + cols) as f64).sqrt();
    let dist = Uniform::new_inclusive(-bound, bound).expect("finite bound");
    Array2::from_shape_simple_fn((rows, cols), || dist.sample(rng))
}

/// Glorot-uniform weights and embeddings, zero biases.
pub fn init_params<R: Rng + ?Sized>(num_nodes: usize, dims: &ModelDims, rng: &mut R) -> EncoderParams {
    let embeddings = glorot(num_nodes, dims.input, rng);
    let conv = (0..dims.layers)
        .map(|l| {
            let fan_in = if l == 0 { dims.input } else { dims.hidden };
            ConvParams {
                weight: glorot(fan_in, dims.hidden, rng),
                bias_re: Array1::zeros(dims.hidden),
                bias_im: Array1::zeros(dims.hidden),
            }
        })
        .collect();
    let d = dims.embed;
    let fc_weight = glorot(2 * dims.hidden, d, rng);
    let proj_weight1 = glorot(d, d, rng);
    let proj_weight2 = glorot(d, d, rng);
    let fusion_weight = glorot(2 * d, d, rng);
    let pred_weight = glorot(2 * d, 1, rng).into_shape_with_order(2 * d).expect("column vector");
    EncoderParams {
        embeddings,
        conv,
        fc_weight,
        fc_bias: Array1::zeros(d),
        proj_weight1,
        proj_bias1: Array1::zeros(d),
        proj_weight2,
        proj_bias2: Array1::zeros(d),
        fusion_weight,
        fusion_bias: Array1::zeros(d),
        pred_weight,
        pred_bias: Array1::zeros(1),
    }
}

fn shape2(a: &Array2<f64>) -> (usize, usize) {
    a.dim()
}

fn shape1(a: &Array1<f64>) -> (usize, usize) {
    (1, a.len())
}

impl EncoderParams {
    pub fn num_nodes(&self) -> usize {
        self.embeddings.nrows()
    }

    pub fn dims(&self) -> ModelDims {
        ModelDims {
            input: self.embeddings.ncols(),
            hidden: self.fc_weight.nrows() / 2,
            embed: self.fc_weight.ncols(),
            layers: self.conv.len(),
        }
    }

    /// Same shapes, all zeros.
    pub fn zeros_like(&self) -> Self {
        let z2 = |a: &Array2<f64>| Array2::zeros(a.raw_dim());
        let z1 = |a: &Array1<f64>| Array1::zeros(a.raw_dim());
        EncoderParams {
            embeddings: z2(&self.embeddings),
            conv: self
                .conv
                .iter()
                .map(|c| ConvParams {
                    weight: z2(&c.weight),
                    bias_re: z1(&c.bias_re),
                    bias_im: z1(&c.bias_im),
                })
                .collect(),
            fc_weight: z2(&self.fc_weight),
            fc_bias: z1(&self.fc_bias),
            proj_weight1: z2(&self.proj_weight1),
            proj_bias1: z1(&self.proj_bias1),
            proj_weight2: z2(&self.proj_weight2),
            proj_bias2: z1(&self.proj_bias2),
            fusion_weight: z2(&self.fusion_weight),
            fusion_bias: z1(&self.fusion_bias),
            pred_weight: z1(&self.pred_weight),
            pred_bias: z1(&self.pred_bias),
        }
    }

    /// Tensors in a fixed canonical order.
    pub fn tensors(&self) -> Vec<TensorRef<'_>> {
        use TensorKind::*;
        let mut out = vec![TensorRef {
            name: "embeddings".into(),
            kind: Embedding,
            shape: shape2(&self.embeddings),
            data: self.embeddings.as_slice().expect("standard layout"),
        }];
        for (l, c) in self.conv.iter().enumerate() {
            out.push(TensorRef {
                name: format!("conv{l}.weight"),
                kind: Weight,
                shape: shape2(&c.weight),
                data: c.weight.as_slice().expect("standard layout"),
            });
            out.push(TensorRef {
                name: format!("conv{l}.bias_re"),
                kind: Bias,
                shape: shape1(&c.bias_re),
                data: c.bias_re.as_slice().expect("standard layout"),
            });
            out.push(TensorRef {
                name: format!("conv{l}.bias_im"),
                kind: Bias,
                shape: shape1(&c.bias_im),
                data: c.bias_im.as_slice().expect("standard layout"),
            });
        }
        let rest: [(&str, TensorKind, (usize, usize), &[f64]); 10] = [
            ("fc.weight", Weight, shape2(&self.fc_weight), self.fc_weight.as_slice().unwrap()),
            ("fc.bias", Bias, shape1(&self.fc_bias), self.fc_bias.as_slice().unwrap()),
            ("proj1.weight", Weight, shape2(&self.proj_weight1), self.proj_weight1.as_slice().unwrap()),
            ("proj1.bias", Bias, shape1(&self.proj_bias1), self.proj_bias1.as_slice().unwrap()),
            ("proj2.weight", Weight, shape2(&self.proj_weight2), self.proj_weight2.as_slice().unwrap()),
            ("proj2.bias", Bias, shape1(&self.proj_bias2), self.proj_bias2.as_slice().unwrap()),
            ("fusion.weight", Weight, shape2(&self.fusion_weight), self.fusion_weight.as_slice().unwrap()),
            ("fusion.bias", Bias, shape1(&self.fusion_bias), self.fusion_bias.as_slice().unwrap()),
            ("pred.weight", Weight, shape1(&self.pred_weight), self.pred_weight.as_slice().unwrap()),
            ("pred.bias", Bias, shape1(&self.pred_bias), self.pred_bias.as_slice().unwrap()),
        ];
        out.extend(rest.into_iter().map(|(name, kind, shape, data)| TensorRef {
            name: name.into(),
            kind,
            shape,
            data,
        }));
        out
    }

    /// Mutable view of [`EncoderParams::tensors`], same order.
    pub fn tensors_mut(&mut self) -> Vec<TensorMut<'_>> {
        use TensorKind::*;
        let mut out = Vec::new();
        let s2 = shape2(&self.embeddings);
        out.push(TensorMut {
            name: "embeddings".into(),
            kind: Embedding,
            shape: s2,
            data: self.embeddings.as_slice_mut().expect("standard layout"),
        });
        for (l, c) in self.conv.iter_mut().enumerate() {
            let (sw, sb, si) = (shape2(&c.weight), shape1(&c.bias_re), shape1(&c.bias_im));
            out.push(TensorMut {
                name: format!("conv{l}.weight"),
                kind: Weight,
                shape: sw,
                data: c.weight.as_slice_mut().expect("standard layout"),
            });
            out.push(TensorMut {
                name: format!("conv{l}.bias_re"),
                kind: Bias,
                shape: sb,
                data: c.bias_re.as_slice_mut().expect("standard layout"),
            });
            out.push(TensorMut {
                name: format!("conv{l}.bias_im"),
                kind: Bias,
                shape: si,
                data: c.bias_im.as_slice_mut().expect("standard layout"),
            });
        }
        macro_rules! push {
            ($name:expr, $kind:expr, $field:expr, $shape:ident) => {{
                let shape = $shape(&$field);
                out.push(TensorMut {
                    name: $name.into(),
                    kind: $kind,
                    shape,
                    data: $field.as_slice_mut().expect("standard layout"),
                });
            }};
        }
        push!("fc.weight", Weight, self.fc_weight, shape2);
        push!("fc.bias", Bias, self.fc_bias, shape1);
        push!("proj1.weight", Weight, self.proj_weight1, shape2);
        push!("proj1.bias", Bias, self.proj_bias1, shape1);
        push!("proj2.weight", Weight, self.proj_weight2, shape2);
        push!("proj2.bias", Bias, self.proj_bias2, shape1);
        push!("fusion.weight", Weight, self.fusion_weight, shape2);
        push!("fusion.bias", Bias, self.fusion_bias, shape1);
        push!("pred.weight", Weight, self.pred_weight, shape1);
        push!("pred.bias", Bias, self.pred_bias, shape1);
        out
    }

    pub fn num_scalars(&self) -> usize {
        self.tensors().iter().map(|t| t.data.len()).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.tensors().iter().all(|t| t.data.iter().all(|v| v.is_finite()))
    }

    /// Checks that tensor names and shapes agree with `other`.
    pub fn check_same_layout(&self, other: &EncoderParams) -> Result<()> {
        let a = self.tensors();
        let b = other.tensors();
        if a.len() != b.len() {
            return Err(Error::Shape(format!("{} tensors vs {}", a.len(), b.len())));
        }
        for (x, y) in a.iter().zip(&b) {
            if x.name != y.name || x.shape != y.shape {
                return Err(Error::Shape(format!(
                    "{} {:?} vs {} {:?}",
                    x.name, x.shape, y.name, y.shape
                )));
            }
        }
        Ok(())
    }
}

/// Output of the encoder for one view.
#[derive(Debug, Clone, PartialEq)]
pub struct ViewEmbedding {
    pub z: Array2<f64>,
}

/// Complex ReLU: keeps `z` when `arg z ∈ [−π/2, π/2]`, i.e. `re z ≥ 0`.
pub fn complex_relu(z: Complex64) -> Complex64 {
    if z.re >= 0.0 {
        z
    } else {
        Complex64::new(0.0, 0.0)
    }
}

pub(crate) fn relu(a: &Array2<f64>) -> Array2<f64> {
    a.mapv(|v| v.max(0.0))
}

fn check_cols(what: &str, x: usize, expected: usize) -> Result<()> {
    if x != expected {
        return Err(Error::Shape(format!("{what}: {x} columns, expected {expected}")));
    }
    Ok(())
}

/// Pre-activation `Y · X · W + b` of one convolution layer.
pub(crate) fn conv_pre_activation(
    operator: &HermitianMatrix,
    x: &ComplexFeatures,
    conv: &ConvParams,
) -> Result<ComplexFeatures> {
    check_cols("convolution input", x.ncols(), conv.weight.nrows())?;
    let mixed = ComplexFeatures {
        re: x.re.dot(&conv.weight),
        im: x.im.dot(&conv.weight),
    };
    let mut pre = operator.spmm(&mixed)?;
    pre.re += &conv.bias_re;
    pre.im += &conv.bias_im;
    Ok(pre)
}

pub(crate) fn complex_relu_features(pre: &ComplexFeatures) -> ComplexFeatures {
    let mut out = pre.clone();
    ndarray::Zip::from(&mut out.re)
        .and(&mut out.im)
        .for_each(|r, i| {
            let z = complex_relu(Complex64::new(*r, *i));
            *r = z.re;
            *i = z.im;
        });
    out
}

/// `σ(Y · X · W + b)` with the complex ReLU. The real weight acts on the real
/// and imaginary planes independently.
pub fn conv_layer_forward(
    operator: &HermitianMatrix,
    x: &ComplexFeatures,
    conv: &ConvParams,
) -> Result<ComplexFeatures> {
    Ok(complex_relu_features(&conv_pre_activation(operator, x, conv)?))
}

/// `[re X ‖ im X]`.
pub fn unwind(x: &ComplexFeatures) -> Array2<f64> {
    ndarray::concatenate(Axis(1), &[x.re.view(), x.im.view()]).expect("equal row counts")
}

/// Intermediates of one encoder pass, kept for the backward pass.
#[derive(Debug, Clone)]
pub(crate) struct EncoderTrace {
    /// Input of each convolution layer (layer 0: the embedding table).
    pub layer_inputs: Vec<ComplexFeatures>,
    /// Pre-activation of each convolution layer.
    pub layer_pre: Vec<ComplexFeatures>,
    pub unwound: Array2<f64>,
    pub fc_pre: Array2<f64>,
    pub z: Array2<f64>,
}

pub(crate) fn encoder_trace(operator: &HermitianMatrix, params: &EncoderParams) -> Result<EncoderTrace> {
    if operator.dim() != params.num_nodes() {
        return Err(Error::Shape(format!(
            "operator has {} nodes, parameters have {}",
            operator.dim(),
            params.num_nodes()
        )));
    }
    let mut x = ComplexFeatures::from_real(params.embeddings.clone());
    let mut layer_inputs = Vec::with_capacity(params.conv.len());
    let mut layer_pre = Vec::with_capacity(params.conv.len());
    for conv in &params.conv {
        let pre = conv_pre_activation(operator, &x, conv)?;
        let next = complex_relu_features(&pre);
        layer_inputs.push(x);
        layer_pre.push(pre);
        x = next;
    }
    let unwound = unwind(&x);
    check_cols("fully connected input", unwound.ncols(), params.fc_weight.nrows())?;
    let fc_pre = unwound.dot(&params.fc_weight) + &params.fc_bias;
    let z = relu(&fc_pre);
    Ok(EncoderTrace {
        layer_inputs,
        layer_pre,
        unwound,
        fc_pre,
        z,
    })
}

/// Encodes a view whose propagation operator is already built.
pub fn encode_with_operator(operator: &HermitianMatrix, params: &EncoderParams) -> Result<ViewEmbedding> {
    Ok(ViewEmbedding {
        z: encoder_trace(operator, params)?.z,
    })
}

/// `Z = ReLU(unwind(conv_L(… conv_1(X⁰))) · W + B)` on the view's
/// renormalised propagation operator.
pub fn encoder_forward(view: &GraphView, params: &EncoderParams) -> Result<ViewEmbedding> {
    let operator = renormalized_propagation(&view.graph, &PhaseSpec::new(view.q));
    encode_with_operator(&operator, params)
}

/// Hidden pre-activation of the projection head.
pub(crate) fn projection_hidden(z: ArrayView2<f64>, params: &EncoderParams) -> Result<Array2<f64>> {
    check_cols("projection input", z.ncols(), params.proj_weight1.nrows())?;
    Ok(z.dot(&params.proj_weight1) + &params.proj_bias1)
}

/// Two-layer projection MLP `M = ReLU(Z W₁ + b₁) W₂ + b₂`.
pub fn project(z: &ViewEmbedding, params: &EncoderParams) -> Result<Array2<f64>> {
    let hidden = relu(&projection_hidden(z.z.view(), params)?);
    Ok(hidden.dot(&params.proj_weight2) + &params.proj_bias2)
}

/// Fusion pre-activation `[Z¹ ‖ Z²] W + B`, computed without materialising
/// the concatenation.
pub(crate) fn fusion_pre(z1: &Array2<f64>, z2: &Array2<f64>, params: &EncoderParams) -> Result<Array2<f64>> {
    let d = z1.ncols();
    check_cols("second view", z2.ncols(), d)?;
    if params.fusion_weight.nrows() != 2 * d || z1.nrows() != z2.nrows() {
        return Err(Error::Shape(format!(
            "fusion weight {:?} for views {:?} and {:?}",
            params.fusion_weight.dim(),
            z1.dim(),
            z2.dim()
        )));
    }
    let top = params.fusion_weight.slice(s![..d, ..]);
    let bottom = params.fusion_weight.slice(s![d.., ..]);
    Ok(z1.dot(&top) + z2.dot(&bottom) + &params.fusion_bias)
}

/// `R = ReLU([Z¹ ‖ Z²] W_out + B_out)`.
pub fn fuse_views(z1: &ViewEmbedding, z2: &ViewEmbedding, params: &EncoderParams) -> Result<Array2<f64>> {
    Ok(relu(&fusion_pre(&z1.z, &z2.z, params)?))
}

pub(crate) fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Pre-sigmoid edge logit `[r_u ‖ r_v] · w + b`.
pub(crate) fn edge_logit(fused: &Array2<f64>, u: usize, v: usize, params: &EncoderParams) -> Result<f64> {
    let n = fused.nrows();
    for index in [u, v] {
        if index >= n {
            return Err(Error::NodeOutOfRange { index, num_nodes: n });
        }
    }
    let d = fused.ncols();
    if params.pred_weight.len() != 2 * d {
        return Err(Error::Shape(format!(
            "prediction weight has {} entries for representations of width {d}",
            params.pred_weight.len()
        )));
    }
    let w = &params.pred_weight;
    Ok(fused.row(u).dot(&w.slice(s![..d])) + fused.row(v).dot(&w.slice(s![d..])) + params.pred_bias[0])
}

/// Probability that the directed edge `u → v` is positive. Not symmetric in
/// `(u, v)`.
pub fn predict_edge(fused: &Array2<f64>, u: usize, v: usize, params: &EncoderParams) -> Result<f64> {
    Ok(sigmoid(edge_logit(fused, u, v, params)?))
}
