//! Dense feed-forward networks over flat parameters.

use std::sync::Arc;

use ndarray::linalg::general_mat_mul;
use ndarray::{Array2, ArrayView2, ArrayViewMut2, Axis};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::params::{FlatParams, GradientVector, ParamKind, ParamLayout};
use crate::nn::Activation;

/// Shape and activation of one dense layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayerSpec {
    pub input_width: usize,
    pub output_width: usize,
    pub activation: Activation,
}

impl LayerSpec {
    pub fn new(input_width: usize, output_width: usize, activation: Activation) -> Self {
        LayerSpec { input_width, output_width, activation }
    }
}

/// Weight initialization scheme. Biases always start at zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightInit {
    Zeros,
    /// Uniform on ±sqrt(6 / (fan_in + fan_out)).
    XavierUniform,
    /// Uniform on ±sqrt(6 / fan_in), suited to relu stacks.
    HeUniform,
    /// Gaussian with the given standard deviation.
    Normal { std: f64 },
}

impl WeightInit {
    pub fn name(self) -> String {
        match self {
            WeightInit::Zeros => "zeros".to_owned(),
            WeightInit::XavierUniform => "xavier_uniform".to_owned(),
            WeightInit::HeUniform => "he_uniform".to_owned(),
            WeightInit::Normal { std } => format!("normal({std})"),
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "zeros" => Some(WeightInit::Zeros),
            "xavier_uniform" => Some(WeightInit::XavierUniform),
            "he_uniform" => Some(WeightInit::HeUniform),
            _ => {
                let inner = s.strip_prefix("normal(")?.strip_suffix(')')?;
                let std: f64 = inner.parse().ok()?;
                (std.is_finite() && std > 0.0).then_some(WeightInit::Normal { std })
            }
        }
    }
}

fn validate_specs(specs: &[LayerSpec]) -> Result<()> {
    if specs.is_empty() {
        return Err(Error::Config("network needs at least one layer".into()));
    }
    for (i, spec) in specs.iter().enumerate() {
        if spec.input_width == 0 || spec.output_width == 0 {
            return Err(Error::Config(format!("layer {i} has a zero width")));
        }
        if i > 0 && specs[i - 1].output_width != spec.input_width {
            return Err(Error::Config(format!(
                "layer {} input width {} does not chain with layer {} output width {}",
                i,
                spec.input_width,
                i - 1,
                specs[i - 1].output_width
            )));
        }
    }
    Ok(())
}

/// A dense network: layer specs plus flat parameters.
#[derive(Debug, Clone)]
pub struct Network {
    specs: Vec<LayerSpec>,
    params: FlatParams,
}

impl Network {
    /// Zero-initialized network.
    pub fn zeros(specs: Vec<LayerSpec>) -> Result<Self> {
        validate_specs(&specs)?;
        let layout = Arc::new(ParamLayout::for_layers(&specs));
        Ok(Network { specs, params: FlatParams::zeros(layout) })
    }

    /// Randomly initialized network; biases start at zero.
    pub fn init<R: Rng + ?Sized>(specs: Vec<LayerSpec>, init: WeightInit, rng: &mut R) -> Result<Self> {
        let mut net = Network::zeros(specs)?;
        for layer in 0..net.specs.len() {
            let spec = net.specs[layer];
            let fan_in = spec.input_width as f64;
            let fan_out = spec.output_width as f64;
            let weights = net.params.slice_mut(layer, ParamKind::Weight);
            match init {
                WeightInit::Zeros => {}
                WeightInit::XavierUniform => {
                    let limit = (6.0 / (fan_in + fan_out)).sqrt();
                    for w in weights.iter_mut() {
                        *w = rng.random_range(-limit..limit);
                    }
                }
                WeightInit::HeUniform => {
                    let limit = (6.0 / fan_in).sqrt();
                    for w in weights.iter_mut() {
                        *w = rng.random_range(-limit..limit);
                    }
                }
                WeightInit::Normal { std } => {
                    for w in weights.iter_mut() {
                        let n: f64 = rng.sample(rand_distr::StandardNormal);
                        *w = n * std;
                    }
                }
            }
        }
        Ok(net)
    }

    /// Rebuilds a network from parts, validating the parameter length.
    pub fn from_parts(specs: Vec<LayerSpec>, values: Vec<f64>) -> Result<Self> {
        validate_specs(&specs)?;
        let layout = Arc::new(ParamLayout::for_layers(&specs));
        let params = FlatParams::from_values(layout, values)?;
        Ok(Network { specs, params })
    }

    pub fn specs(&self) -> &[LayerSpec] {
        &self.specs
    }

    pub fn params(&self) -> &FlatParams {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut FlatParams {
        &mut self.params
    }

    pub fn param_len(&self) -> usize {
        self.params.len()
    }

    pub fn input_width(&self) -> usize {
        self.specs[0].input_width
    }

    pub fn output_width(&self) -> usize {
        self.specs[self.specs.len() - 1].output_width
    }

    fn weights_view(&self, layer: usize) -> ArrayView2<'_, f64> {
        let spec = self.specs[layer];
        let slice = self.params.slice(layer, ParamKind::Weight);
        ArrayView2::from_shape((spec.output_width, spec.input_width), slice)
            .expect("weight span matches layer shape")
    }

    /// Runs the network on a batch (one sample per row).
    pub fn forward(&self, batch: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        Ok(self.forward_trace(batch)?.into_output())
    }

    /// Runs the network and keeps every layer's activations for a backward pass.
    pub fn forward_trace(&self, batch: ArrayView2<'_, f64>) -> Result<ForwardTrace> {
        if batch.ncols() != self.input_width() {
            return Err(Error::Config(format!(
                "input batch has {} columns, network expects {}",
                batch.ncols(),
                self.input_width()
            )));
        }
        let n = batch.nrows();
        let mut activations: Vec<Array2<f64>> = Vec::with_capacity(self.specs.len() + 1);
        activations.push(batch.to_owned());
        for (layer, spec) in self.specs.iter().enumerate() {
            let x = &activations[layer];
            let w = self.weights_view(layer);
            let mut z = Array2::<f64>::zeros((n, spec.output_width));
            general_mat_mul(1.0, x, &w.t(), 0.0, &mut z);
            let bias = self.params.slice(layer, ParamKind::Bias);
            let act = spec.activation;
            for mut row in z.rows_mut() {
                for (v, b) in row.iter_mut().zip(bias) {
                    *v = act.apply(*v + b);
                }
            }
            activations.push(z);
        }
        Ok(ForwardTrace { activations })
    }

    /// Gradient of a scalar loss w.r.t. every parameter.
    ///
    /// `upstream` holds the loss derivative w.r.t. each output entry of the
    /// traced batch; any batch-mean factor belongs in `upstream`. The returned
    /// gradient follows the parameter layout exactly.
    pub fn backward(&self, trace: &ForwardTrace, upstream: ArrayView2<'_, f64>) -> Result<GradientVector> {
        self.backprop(trace, upstream, true, false).map(|(g, _)| g.expect("param grads requested"))
    }

    /// Convenience wrapper: forward `batch`, then [`Network::backward`].
    pub fn backward_batch(
        &self,
        batch: ArrayView2<'_, f64>,
        upstream: ArrayView2<'_, f64>,
    ) -> Result<GradientVector> {
        let trace = self.forward_trace(batch)?;
        self.backward(&trace, upstream)
    }

    /// Like [`Network::backward`] but also returns the loss gradient w.r.t.
    /// the input batch, for chaining into an upstream network.
    pub fn backward_with_input_grad(
        &self,
        trace: &ForwardTrace,
        upstream: ArrayView2<'_, f64>,
    ) -> Result<(GradientVector, Array2<f64>)> {
        let (g, x) = self.backprop(trace, upstream, true, true)?;
        Ok((g.expect("param grads requested"), x.expect("input grads requested")))
    }

    /// Input gradient only, skipping parameter gradients. Used when this
    /// network is frozen and only feeds gradient to the network before it.
    pub fn input_gradient(
        &self,
        trace: &ForwardTrace,
        upstream: ArrayView2<'_, f64>,
    ) -> Result<Array2<f64>> {
        let (_, x) = self.backprop(trace, upstream, false, true)?;
        Ok(x.expect("input grads requested"))
    }

    fn backprop(
        &self,
        trace: &ForwardTrace,
        upstream: ArrayView2<'_, f64>,
        want_params: bool,
        want_input: bool,
    ) -> Result<(Option<GradientVector>, Option<Array2<f64>>)> {
        let n = trace.activations[0].nrows();
        if trace.activations.len() != self.specs.len() + 1 {
            return Err(Error::Config("trace does not match network depth".into()));
        }
        if upstream.nrows() != n || upstream.ncols() != self.output_width() {
            return Err(Error::Config(format!(
                "upstream gradient is {}x{}, expected {}x{}",
                upstream.nrows(),
                upstream.ncols(),
                n,
                self.output_width()
            )));
        }

        let mut grad = want_params.then(|| vec![0.0; self.params.len()]);
        let mut d_act = upstream.to_owned();

        for layer in (0..self.specs.len()).rev() {
            let spec = self.specs[layer];
            let outputs = &trace.activations[layer + 1];
            let inputs = &trace.activations[layer];

            // dZ = dA ⊙ act'(A), in place.
            let act = spec.activation;
            for (dv, y) in d_act.iter_mut().zip(outputs.iter()) {
                *dv *= act.grad_from_output(*y);
            }

            if let Some(grad) = grad.as_mut() {
                let (w_off, w_len) = self
                    .params
                    .layout()
                    .span(layer, ParamKind::Weight)
                    .expect("layer in layout");
                let w_grad_slice = &mut grad[w_off..w_off + w_len];
                let mut w_grad =
                    ArrayViewMut2::from_shape((spec.output_width, spec.input_width), w_grad_slice)
                        .expect("weight span matches layer shape");
                general_mat_mul(1.0, &d_act.t(), inputs, 0.0, &mut w_grad);

                let (b_off, b_len) = self
                    .params
                    .layout()
                    .span(layer, ParamKind::Bias)
                    .expect("layer in layout");
                let b_grad = &mut grad[b_off..b_off + b_len];
                for (b, col) in b_grad.iter_mut().zip(d_act.axis_iter(Axis(1))) {
                    *b = col.sum();
                }
            }

            let need_dx = layer > 0 || want_input;
            if need_dx {
                let w = self.weights_view(layer);
                let mut dx = Array2::<f64>::zeros((n, spec.input_width));
                general_mat_mul(1.0, &d_act, &w, 0.0, &mut dx);
                d_act = dx;
            }
        }

        let input_grad = want_input.then_some(d_act);
        Ok((grad.map(GradientVector::from_values), input_grad))
    }
}

/// Activations recorded by [`Network::forward_trace`].
///
/// `activations[0]` is the input batch; `activations[l + 1]` is the output of
/// layer `l`.
#[derive(Debug, Clone)]
pub struct ForwardTrace {
    activations: Vec<Array2<f64>>,
}

impl ForwardTrace {
    pub fn output(&self) -> ArrayView2<'_, f64> {
        self.activations[self.activations.len() - 1].view()
    }

    pub fn into_output(mut self) -> Array2<f64> {
        self.activations.pop().expect("trace has at least the input")
    }

    pub fn batch_size(&self) -> usize {
        self.activations[0].nrows()
    }
}
