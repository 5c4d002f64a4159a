//! Dense feedforward networks with exact reverse-mode gradients.
//!
//! # Parameter layout
//!
//! A network's parameters live in one flat [`ParamVector`]. Layers are stored
//! in order (layer-major). For a layer mapping `in` units to `out` units the
//! weight matrix has shape `in x out` and is stored row-major, so entry
//! `(i, j)` (input `i` feeding output `j`) sits at offset `i * out + j` from
//! the start of the layer block. When the layer has a bias, its `out` entries
//! follow the weights. The layout is stable: serialized vectors written by one
//! version of this crate load unchanged in another with the same
//! [`LAYOUT_VERSION`].

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, ArrayViewMut2, Axis, Zip};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const LAYOUT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Relu,
    Softplus,
    Sigmoid,
    Identity,
}

impl Activation {
    #[inline]
    pub fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Relu => z.max(0.0),
            Activation::Softplus => softplus(z),
            Activation::Sigmoid => sigmoid(z),
            Activation::Identity => z,
        }
    }

    /// Derivative expressed through the pre-activation `z` and the output `a`.
    #[inline]
    fn derivative(self, z: f64, a: f64) -> f64 {
        match self {
            // subgradient at 0 is 0
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Softplus => sigmoid(z),
            Activation::Sigmoid => a * (1.0 - a),
            Activation::Identity => 1.0,
        }
    }
}

#[inline]
fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

#[inline]
fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    /// Softmax over the final layer's outputs followed by cross-entropy.
    CrossEntropySoftmax,
    /// Mean over samples and output units of the squared error.
    MeanSquaredError,
}

/// Architecture of a dense network. `activations[l]` and `use_bias[l]` refer to
/// the layer mapping `layer_sizes[l]` to `layer_sizes[l + 1]`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct NetworkSpec {
    layer_sizes: Vec<usize>,
    activations: Vec<Activation>,
    use_bias: Vec<bool>,
    loss_kind: LossKind,
}

impl NetworkSpec {
    pub fn new(
        layer_sizes: Vec<usize>,
        activations: Vec<Activation>,
        use_bias: Vec<bool>,
        loss_kind: LossKind,
    ) -> Result<Self> {
        if layer_sizes.len() < 2 {
            return Err(Error::InvalidSpec("need at least two layer sizes".into()));
        }
        if layer_sizes.contains(&0) {
            return Err(Error::InvalidSpec("layer sizes must be positive".into()));
        }
        let n_layers = layer_sizes.len() - 1;
        if activations.len() != n_layers || use_bias.len() != n_layers {
            return Err(Error::InvalidSpec(format!(
                "{n_layers} layers need {n_layers} activations and bias flags, got {} and {}",
                activations.len(),
                use_bias.len()
            )));
        }
        Ok(Self {
            layer_sizes,
            activations,
            use_bias,
            loss_kind,
        })
    }

    /// Same activation and bias setting on every hidden layer, a separate one on the output.
    pub fn uniform(
        layer_sizes: Vec<usize>,
        hidden: Activation,
        output: Activation,
        bias: bool,
        loss_kind: LossKind,
    ) -> Result<Self> {
        let n = layer_sizes.len().saturating_sub(1);
        let mut activations = vec![hidden; n];
        if let Some(last) = activations.last_mut() {
            *last = output;
        }
        Self::new(layer_sizes, activations, vec![bias; n], loss_kind)
    }

    /// 784-50-50-10 ReLU classifier without biases.
    pub fn fcp() -> Self {
        Self::uniform(
            vec![784, 50, 50, 10],
            Activation::Relu,
            Activation::Identity,
            false,
            LossKind::CrossEntropySoftmax,
        )
        .expect("canonical spec is valid")
    }

    /// Shallow autoencoder: two 32-unit softplus layers each side, sigmoid
    /// reconstruction, no biases.
    pub fn autoencoder() -> Self {
        Self::uniform(
            vec![784, 32, 32, 32, 784],
            Activation::Softplus,
            Activation::Sigmoid,
            false,
            LossKind::MeanSquaredError,
        )
        .expect("canonical spec is valid")
    }

    pub fn layer_sizes(&self) -> &[usize] {
        &self.layer_sizes
    }

    pub fn activations(&self) -> &[Activation] {
        &self.activations
    }

    pub fn use_bias(&self) -> &[bool] {
        &self.use_bias
    }

    pub fn loss_kind(&self) -> LossKind {
        self.loss_kind
    }

    pub fn n_layers(&self) -> usize {
        self.layer_sizes.len() - 1
    }

    pub fn input_dim(&self) -> usize {
        self.layer_sizes[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.layer_sizes.last().unwrap()
    }

    /// Total number of trainable parameters.
    pub fn n_params(&self) -> usize {
        self.layer_blocks().map(|b| b.len()).sum()
    }

    pub(crate) fn layer_blocks(&self) -> impl Iterator<Item = LayerBlock> + '_ {
        let mut offset = 0;
        (0..self.n_layers()).map(move |l| {
            let block = LayerBlock {
                fan_in: self.layer_sizes[l],
                fan_out: self.layer_sizes[l + 1],
                offset,
                bias: self.use_bias[l],
            };
            offset += block.len();
            block
        })
    }

    /// Canonical text form; used to identify the architecture in file headers.
    pub fn descriptor(&self) -> String {
        let sizes: Vec<String> = self.layer_sizes.iter().map(|s| s.to_string()).collect();
        let acts: Vec<&str> = self
            .activations
            .iter()
            .map(|a| match a {
                Activation::Relu => "relu",
                Activation::Softplus => "softplus",
                Activation::Sigmoid => "sigmoid",
                Activation::Identity => "identity",
            })
            .collect();
        let bias: Vec<&str> = self
            .use_bias
            .iter()
            .map(|&b| if b { "b" } else { "-" })
            .collect();
        let loss = match self.loss_kind {
            LossKind::CrossEntropySoftmax => "xent",
            LossKind::MeanSquaredError => "mse",
        };
        format!(
            "dense/v{LAYOUT_VERSION}:{}:{}:{}:{}",
            sizes.join("-"),
            acts.join(","),
            bias.join(""),
            loss
        )
    }
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct LayerBlock {
    pub fan_in: usize,
    pub fan_out: usize,
    pub offset: usize,
    pub bias: bool,
}

impl LayerBlock {
    pub fn n_weights(&self) -> usize {
        self.fan_in * self.fan_out
    }

    pub fn len(&self) -> usize {
        self.n_weights() + if self.bias { self.fan_out } else { 0 }
    }

    fn weights<'a>(&self, params: &'a [f64]) -> ArrayView2<'a, f64> {
        ArrayView2::from_shape(
            (self.fan_in, self.fan_out),
            &params[self.offset..self.offset + self.n_weights()],
        )
        .expect("block lies inside parameter vector")
    }

    fn weights_mut<'a>(&self, params: &'a mut [f64]) -> ArrayViewMut2<'a, f64> {
        ArrayViewMut2::from_shape(
            (self.fan_in, self.fan_out),
            &mut params[self.offset..self.offset + self.n_weights()],
        )
        .expect("block lies inside parameter vector")
    }

    fn bias_range(&self) -> std::ops::Range<usize> {
        let start = self.offset + self.n_weights();
        start..start + self.fan_out
    }
}

/// Flat vector of every weight and bias of a network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ParamVector(Vec<f64>);


impl AsRef<[f64]> for ParamVector {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

impl ParamVector {
    pub fn new(values: Vec<f64>) -> Self {
        Self(values)
    }

    pub fn zeros(len: usize) -> Self {
        Self(vec![0.0; len])
    }

    /// Checks the length against a spec.
    pub fn for_spec(spec: &NetworkSpec, values: Vec<f64>) -> Result<Self> {
        check_len(spec, values.len())?;
        Ok(Self(values))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn norm(&self) -> f64 {
        crate::vecmath::norm(&self.0)
    }
}

impl std::ops::Deref for ParamVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl std::ops::DerefMut for ParamVector {
    fn deref_mut(&mut self) -> &mut [f64] {
        &mut self.0
    }
}

impl From<Vec<f64>> for ParamVector {
    fn from(v: Vec<f64>) -> Self {
        Self(v)
    }
}

fn check_len(spec: &NetworkSpec, got: usize) -> Result<()> {
    let expected = spec.n_params();
    if got != expected {
        return Err(Error::DimensionMismatch { expected, got });
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer {
    pub weights: Array2<f64>,
    pub bias: Option<Array1<f64>>,
}

/// Structured view of a network: spec plus per-layer matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    spec: NetworkSpec,
    layers: Vec<DenseLayer>,
}

impl Network {
    pub fn unflatten(spec: &NetworkSpec, params: &ParamVector) -> Result<Self> {
        check_len(spec, params.len())?;
        let layers = spec
            .layer_blocks()
            .map(|b| DenseLayer {
                weights: b.weights(params).to_owned(),
                bias: b
                    .bias
                    .then(|| Array1::from(params[b.bias_range()].to_vec())),
            })
            .collect();
        Ok(Self {
            spec: spec.clone(),
            layers,
        })
    }

    pub fn from_layers(spec: &NetworkSpec, layers: Vec<DenseLayer>) -> Result<Self> {
        if layers.len() != spec.n_layers() {
            return Err(Error::InvalidSpec(format!(
                "expected {} layers, got {}",
                spec.n_layers(),
                layers.len()
            )));
        }
        for (layer, block) in layers.iter().zip(spec.layer_blocks()) {
            if layer.weights.dim() != (block.fan_in, block.fan_out)
                || layer.bias.is_some() != block.bias
                || layer.bias.as_ref().is_some_and(|b| b.len() != block.fan_out)
            {
                return Err(Error::InvalidSpec("layer shape does not match spec".into()));
            }
        }
        Ok(Self {
            spec: spec.clone(),
            layers,
        })
    }

    pub fn flatten(&self) -> ParamVector {
        let mut out = Vec::with_capacity(self.spec.n_params());
        for layer in &self.layers {
            out.extend(layer.weights.iter().copied());
            if let Some(b) = &layer.bias {
                out.extend(b.iter().copied());
            }
        }
        ParamVector(out)
    }

    pub fn spec(&self) -> &NetworkSpec {
        &self.spec
    }

    pub fn layers(&self) -> &[DenseLayer] {
        &self.layers
    }
}

/// What a batch is compared against.
#[derive(Debug, Clone, Copy)]
pub enum Targets<'a> {
    /// Class indices, for cross-entropy.
    Labels(&'a [u8]),
    /// Explicit regression targets, `n_samples x output_dim`.
    Values(ArrayView2<'a, f64>),
    /// The inputs themselves (autoencoder).
    Reconstruction,
}

#[derive(Debug, Clone, Copy)]
pub struct Batch<'a> {
    pub inputs: ArrayView2<'a, f64>,
    pub targets: Targets<'a>,
}

impl<'a> Batch<'a> {
    /// The same samples with a shorter borrow.
    pub fn reborrow(&self) -> Batch<'_> {
        Batch {
            inputs: self.inputs.view(),
            targets: match &self.targets {
                Targets::Labels(l) => Targets::Labels(l),
                Targets::Values(v) => Targets::Values(v.view()),
                Targets::Reconstruction => Targets::Reconstruction,
            },
        }
    }

    pub fn classification(inputs: ArrayView2<'a, f64>, labels: &'a [u8]) -> Self {
        Self {
            inputs,
            targets: Targets::Labels(labels),
        }
    }

    pub fn reconstruction(inputs: ArrayView2<'a, f64>) -> Self {
        Self {
            inputs,
            targets: Targets::Reconstruction,
        }
    }

    pub fn regression(inputs: ArrayView2<'a, f64>, targets: ArrayView2<'a, f64>) -> Self {
        Self {
            inputs,
            targets: Targets::Values(targets),
        }
    }

    pub fn len(&self) -> usize {
        self.inputs.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

fn validate(spec: &NetworkSpec, params: &[f64], batch: &Batch<'_>) -> Result<()> {
    check_len(spec, params.len())?;
    if batch.is_empty() {
        return Err(Error::EmptyBatch);
    }
    if batch.inputs.ncols() != spec.input_dim() {
        return Err(Error::DimensionMismatch {
            expected: spec.input_dim(),
            got: batch.inputs.ncols(),
        });
    }
    match (spec.loss_kind(), batch.targets) {
        (LossKind::CrossEntropySoftmax, Targets::Labels(labels)) => {
            if labels.len() != batch.len() {
                return Err(Error::DimensionMismatch {
                    expected: batch.len(),
                    got: labels.len(),
                });
            }
            if let Some(&bad) = labels.iter().find(|&&l| l as usize >= spec.output_dim()) {
                return Err(Error::InvalidArgument(format!(
                    "label {bad} out of range for {} classes",
                    spec.output_dim()
                )));
            }
        }
        (LossKind::CrossEntropySoftmax, _) => {
            return Err(Error::TargetMismatch("cross-entropy needs class labels"))
        }
        (LossKind::MeanSquaredError, Targets::Values(t)) => {
            if t.dim() != (batch.len(), spec.output_dim()) {
                return Err(Error::DimensionMismatch {
                    expected: batch.len() * spec.output_dim(),
                    got: t.len(),
                });
            }
        }
        (LossKind::MeanSquaredError, Targets::Reconstruction) => {
            if spec.output_dim() != spec.input_dim() {
                return Err(Error::TargetMismatch(
                    "reconstruction needs equal input and output widths",
                ));
            }
        }
        (LossKind::MeanSquaredError, Targets::Labels(_)) => {
            return Err(Error::TargetMismatch("squared error needs real-valued targets"))
        }
    }
    Ok(())
}

struct Forward {
    /// Pre-activations per layer.
    pre: Vec<Array2<f64>>,
    /// Post-activations per layer.
    post: Vec<Array2<f64>>,
}

fn forward(spec: &NetworkSpec, params: &[f64], inputs: ArrayView2<'_, f64>) -> Forward {
    forward_from(spec, params, inputs, None)
}

/// Forward pass; `first_pre` replaces the first layer's pre-activation
/// (bias included) when it is already known.
fn forward_from(
    spec: &NetworkSpec,
    params: &[f64],
    inputs: ArrayView2<'_, f64>,
    first_pre: Option<Array2<f64>>,
) -> Forward {
    let mut pre = Vec::with_capacity(spec.n_layers());
    let mut post: Vec<Array2<f64>> = Vec::with_capacity(spec.n_layers());
    let mut first_pre = first_pre;
    for (l, block) in spec.layer_blocks().enumerate() {
        let z = match first_pre.take() {
            Some(z) => z,
            None => {
                let w = block.weights(params);
                let mut z = match post.last() {
                    Some(a) => a.dot(&w),
                    None => inputs.dot(&w),
                };
                if block.bias {
                    let b = ArrayView1::from(&params[block.bias_range()]);
                    z += &b;
                }
                z
            }
        };
        let act = spec.activations()[l];
        let a = z.mapv(|v| act.apply(v));
        pre.push(z);
        post.push(a);
    }
    Forward { pre, post }
}

/// Returns the summed per-sample loss and, if requested, the derivative of the
/// *mean* loss with respect to the network output.
fn output_loss(
    spec: &NetworkSpec,
    output: &Array2<f64>,
    batch: &Batch<'_>,
    want_grad: bool,
) -> (f64, Option<Array2<f64>>) {
    let n = batch.len() as f64;
    match (spec.loss_kind(), batch.targets) {
        (LossKind::CrossEntropySoftmax, Targets::Labels(labels)) => {
            let mut total = 0.0;
            let mut grad = want_grad.then(|| Array2::<f64>::zeros(output.dim()));
            for (i, row) in output.outer_iter().enumerate() {
                let max = row.fold(f64::NEG_INFINITY, |m, &v| m.max(v));
                let sum_exp: f64 = row.iter().map(|&v| (v - max).exp()).sum();
                let log_z = max + sum_exp.ln();
                let y = labels[i] as usize;
                total += log_z - row[y];
                if let Some(g) = grad.as_mut() {
                    let mut g_row = g.row_mut(i);
                    for (gj, &v) in g_row.iter_mut().zip(row.iter()) {
                        *gj = (v - log_z).exp() / n;
                    }
                    g_row[y] -= 1.0 / n;
                }
            }
            (total, grad)
        }
        (LossKind::MeanSquaredError, targets) => {
            let target = match targets {
                Targets::Values(t) => t,
                Targets::Reconstruction => batch.inputs,
                Targets::Labels(_) => unreachable!("validated"),
            };
            let d = output.ncols() as f64;
            let diff = output - &target;
            let total = diff.iter().map(|v| v * v).sum::<f64>() / d;
            let grad = want_grad.then(|| diff * (2.0 / (n * d)));
            (total, grad)
        }
        (LossKind::CrossEntropySoftmax, _) => unreachable!("validated"),
    }
}

/// Mean loss of the network over `batch`.
pub fn loss(spec: &NetworkSpec, params: &[f64], batch: &Batch<'_>) -> Result<f64> {
    validate(spec, params, batch)?;
    let fwd = forward(spec, params, batch.inputs);
    let (total, _) = output_loss(spec, fwd.post.last().unwrap(), batch, false);
    Ok(total / batch.len() as f64)
}

/// Mean loss together with its exact gradient with respect to every parameter.
pub fn loss_and_grad(
    spec: &NetworkSpec,
    params: &[f64],
    batch: &Batch<'_>,
) -> Result<(f64, ParamVector)> {
    validate(spec, params, batch)?;
    let fwd = forward(spec, params, batch.inputs);
    let (total, d_out) = output_loss(spec, fwd.post.last().unwrap(), batch, true);
    let mut grad = vec![0.0; params.len()];
    let d_first = backward(spec, params, &fwd, d_out.unwrap(), &mut grad);
    let first = spec.layer_blocks().next().unwrap();
    first.weights_mut(&mut grad).assign(&batch.inputs.t().dot(&d_first));
    Ok((total / batch.len() as f64, ParamVector(grad)))
}

/// Back-propagates `d_out` (derivative of the mean loss with respect to the
/// output) and fills `grad` for every parameter except the first layer's
/// weights. Returns the derivative with respect to the first layer's
/// pre-activation, from which those weights' gradient is `X^T d`.
fn backward(
    spec: &NetworkSpec,
    params: &[f64],
    fwd: &Forward,
    d_out: Array2<f64>,
    grad: &mut [f64],
) -> Array2<f64> {
    let blocks: Vec<LayerBlock> = spec.layer_blocks().collect();
    let mut d_post = d_out;
    for l in (0..blocks.len()).rev() {
        let block = blocks[l];
        let act = spec.activations()[l];
        // dL/dz = dL/da * act'(z)
        let mut d_pre = d_post;
        Zip::from(&mut d_pre)
            .and(&fwd.pre[l])
            .and(&fwd.post[l])
            .for_each(|g, &z, &a| *g *= act.derivative(z, a));
        if block.bias {
            let gb = d_pre.sum_axis(Axis(0));
            grad[block.bias_range()].copy_from_slice(gb.as_slice().unwrap());
        }
        if l == 0 {
            return d_pre;
        }
        let gw = fwd.post[l - 1].t().dot(&d_pre);
        block.weights_mut(grad).assign(&gw);
        d_post = d_pre.dot(&block.weights(params).t());
    }
    unreachable!("a network has at least one layer")
}

/// Network outputs (after the final activation) for each input row.
pub fn predict(spec: &NetworkSpec, params: &[f64], inputs: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
    check_len(spec, params.len())?;
    if inputs.ncols() != spec.input_dim() {
        return Err(Error::DimensionMismatch {
            expected: spec.input_dim(),
            got: inputs.ncols(),
        });
    }
    Ok(forward(spec, params, inputs).post.pop().unwrap())
}

/// Evaluates `loss(origin - u * direction)` along a line.
///
/// The first layer is linear in its weights, so `X (W - u P) = XW - u XP`; both
/// products are computed once and each evaluation only pays for the remaining
/// (narrow) layers.
pub struct LineEvaluator<'a> {
    spec: &'a NetworkSpec,
    origin: &'a [f64],
    direction: &'a [f64],
    batch: Batch<'a>,
    base: Array2<f64>,
    slope: Array2<f64>,
}

impl<'a> LineEvaluator<'a> {
    pub fn new(
        spec: &'a NetworkSpec,
        origin: &'a [f64],
        direction: &'a [f64],
        batch: Batch<'a>,
    ) -> Result<Self> {
        validate(spec, origin, &batch)?;
        check_len(spec, direction.len())?;
        let first = spec.layer_blocks().next().unwrap();
        let base = batch.inputs.dot(&first.weights(origin));
        let slope = batch.inputs.dot(&first.weights(direction));
        Ok(Self {
            spec,
            origin,
            direction,
            batch,
            base,
            slope,
        })
    }

    pub fn loss_at(&self, u: f64) -> f64 {
        let blocks: Vec<LayerBlock> = self.spec.layer_blocks().collect();
        let first = blocks[0];
        let mut z = &self.base - &(&self.slope * u);
        if first.bias {
            let b: Array1<f64> = first
                .bias_range()
                .map(|i| self.origin[i] - u * self.direction[i])
                .collect();
            z += &b;
        }
        // parameters of the remaining layers at this step
        let tail_start = first.len();
        let trial: Vec<f64> = self.origin[tail_start..]
            .iter()
            .zip(&self.direction[tail_start..])
            .map(|(o, d)| o - u * d)
            .collect();
        let act0 = self.spec.activations()[0];
        let mut a = z.mapv(|v| act0.apply(v));
        for (l, block) in blocks.iter().enumerate().skip(1) {
            let shifted = LayerBlock {
                offset: block.offset - tail_start,
                ..*block
            };
            let mut z = a.dot(&shifted.weights(&trial));
            if block.bias {
                z += &ArrayView1::from(&trial[shifted.bias_range()]);
            }
            let act = self.spec.activations()[l];
            a = z.mapv(|v| act.apply(v));
        }
        let (total, _) = output_loss(self.spec, &a, &self.batch, false);
        total / self.batch.len() as f64
    }
}

/// Losses at points `p_m = sum_r coeffs[m][r] * basis[r]` and, optionally,
/// weighted gradient sums `sum_m weights[k][m] * grad(p_m)`.
///
/// Uses the same first-layer linearity as [`LineEvaluator`]: `X W(p_m)` is
/// the combination of the products `X W(basis[r])`, and the first-layer part
/// of each weighted sum is `X^T (sum_m weights[k][m] d_m)`. Cost is one wide
/// product per basis vector and per weight row instead of two per point.
/// `points[m]` must hold `p_m` (its remaining layers are read from it).
pub fn combination_losses(
    spec: &NetworkSpec,
    basis: &[&[f64]],
    coeffs: &[Vec<f64>],
    points: &[Vec<f64>],
    weights: Option<&[Vec<f64>]>,
    batch: &Batch<'_>,
) -> Result<(Vec<f64>, Option<Vec<Vec<f64>>>)> {
    use rayon::prelude::*;

    for b in basis {
        check_len(spec, b.len())?;
    }
    for p in points {
        validate(spec, p, batch)?;
    }
    let bad_coeffs = coeffs.len() != points.len() || coeffs.iter().any(|c| c.len() != basis.len());
    let bad_weights = weights.is_some_and(|w| w.iter().any(|row| row.len() != points.len()));
    if bad_coeffs || bad_weights {
        return Err(Error::InvalidArgument(
            "combination coefficients do not match the points".into(),
        ));
    }
    let first = spec.layer_blocks().next().unwrap();
    let products: Vec<Array2<f64>> = basis
        .par_iter()
        .map(|b| batch.inputs.dot(&first.weights(b)))
        .collect();
    let n = batch.len() as f64;
    let per_point: Vec<(f64, Option<(Vec<f64>, Array2<f64>)>)> = (0..points.len())
        .into_par_iter()
        .map(|m| {
            let p = &points[m];
            let mut z = Array2::<f64>::zeros(products[0].dim());
            for (c, prod) in coeffs[m].iter().zip(&products) {
                if *c != 0.0 {
                    z.scaled_add(*c, prod);
                }
            }
            if first.bias {
                z += &ArrayView1::from(&p[first.bias_range()]);
            }
            let fwd = forward_from(spec, p, batch.inputs, Some(z));
            let needed = weights.is_some_and(|w| w.iter().any(|row| row[m] != 0.0));
            let (total, d_out) = output_loss(spec, fwd.post.last().unwrap(), batch, needed);
            let back = d_out.map(|d| {
                let mut grad = vec![0.0; p.len()];
                let d_first = backward(spec, p, &fwd, d, &mut grad);
                (grad, d_first)
            });
            (total / n, back)
        })
        .collect();
    let losses = per_point.iter().map(|(l, _)| *l).collect();
    let sums = weights.map(|w| {
        w.par_iter()
            .map(|row| {
                let mut sum = vec![0.0; spec.n_params()];
                let mut d_sum: Option<Array2<f64>> = None;
                for (m, (_, back)) in per_point.iter().enumerate() {
                    let (Some((g, d)), c) = (back, row[m]) else { continue };
                    if c == 0.0 {
                        continue;
                    }
                    crate::vecmath::axpy(c, g, &mut sum);
                    match d_sum.as_mut() {
                        Some(acc) => acc.scaled_add(c, d),
                        None => d_sum = Some(d * c),
                    }
                }
                if let Some(d) = d_sum {
                    first.weights_mut(&mut sum).assign(&batch.inputs.t().dot(&d));
                }
                sum
            })
            .collect()
    });
    Ok((losses, sums))
}

/// Scaled-uniform initialization: each weight is drawn from
/// `U(-a, a)` with `a = sqrt(6 / (fan_in + fan_out))`; biases start at zero.
pub fn init_params(spec: &NetworkSpec, seed: u64) -> ParamVector {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut params = vec![0.0; spec.n_params()];
    for block in spec.layer_blocks() {
        let a = init_half_width(block.fan_in, block.fan_out);
        for w in &mut params[block.offset..block.offset + block.n_weights()] {
            *w = rng.random_range(-a..a);
        }
    }
    ParamVector(params)
}

pub fn init_half_width(fan_in: usize, fan_out: usize) -> f64 {
    (6.0 / (fan_in + fan_out) as f64).sqrt()
}

/// Standard deviation the initializer targets for layer `layer`.
pub fn init_std(spec: &NetworkSpec, layer: usize) -> f64 {
    let sizes = spec.layer_sizes();
    init_half_width(sizes[layer], sizes[layer + 1]) / 3f64.sqrt()
}

/// Range of the flat vector holding layer `layer`'s weights.
pub fn weight_range(spec: &NetworkSpec, layer: usize) -> std::ops::Range<usize> {
    let b = spec.layer_blocks().nth(layer).expect("layer index in range");
    b.offset..b.offset + b.n_weights()
}
