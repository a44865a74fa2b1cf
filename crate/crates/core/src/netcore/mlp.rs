use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Tanh,
    Sigmoid,
    Linear,
}

impl Activation {
    #[inline]
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Relu => x.max(0.0),
            Activation::Tanh => x.tanh(),
            Activation::Sigmoid => sigmoid(x),
            Activation::Linear => x,
        }
    }

    /// Derivative expressed through the activation's output.
    #[inline]
    fn derivative_at_output(self, y: f64) -> f64 {
        match self {
            Activation::Relu => {
                if y > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Tanh => 1.0 - y * y,
            Activation::Sigmoid => y * (1.0 - y),
            Activation::Linear => 1.0,
        }
    }
}

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayerSpec {
    pub in_dim: usize,
    pub out_dim: usize,
    pub activation: Activation,
}

impl LayerSpec {
    pub fn new(in_dim: usize, out_dim: usize, activation: Activation) -> Self {
        Self {
            in_dim,
            out_dim,
            activation,
        }
    }

    fn param_count(&self) -> usize {
        self.in_dim * self.out_dim + self.out_dim
    }
}

/// Fully connected network with a flat parameter vector.
///
/// Per layer the weights come first as an `out_dim x in_dim` row-major
/// matrix, followed by the `out_dim` biases.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    layers: Vec<LayerSpec>,
    params: Vec<f64>,
}

/// Activations recorded by a forward pass, input first.
#[derive(Clone, Debug, Default)]
pub struct ForwardTrace {
    acts: Vec<Vec<f64>>,
}

impl ForwardTrace {
    pub fn output(&self) -> &[f64] {
        self.acts.last().map(Vec::as_slice).unwrap_or(&[])
    }
}

/// Gradient of `upstream . net(input)` with respect to parameters and input.
#[derive(Clone, Debug, PartialEq)]
pub struct Gradients {
    pub params: Vec<f64>,
    pub input: Vec<f64>,
}

impl Mlp {
    fn check_layers(layers: &[LayerSpec]) -> Result<()> {
        if layers.is_empty() {
            return Err(Error::Config("network needs at least one layer".into()));
        }
        for (i, l) in layers.iter().enumerate() {
            if l.in_dim == 0 || l.out_dim == 0 {
                return Err(Error::Config(format!("layer {i} has a zero dimension")));
            }
            if i > 0 && layers[i - 1].out_dim != l.in_dim {
                return Err(Error::Shape {
                    expected: layers[i - 1].out_dim,
                    got: l.in_dim,
                });
            }
        }
        Ok(())
    }

    pub fn param_count_for(layers: &[LayerSpec]) -> usize {
        layers.iter().map(LayerSpec::param_count).sum()
    }

    pub fn from_params(layers: Vec<LayerSpec>, params: Vec<f64>) -> Result<Self> {
        Self::check_layers(&layers)?;
        let expected = Self::param_count_for(&layers);
        if params.len() != expected {
            return Err(Error::Shape {
                expected,
                got: params.len(),
            });
        }
        if params.iter().any(|p| !p.is_finite()) {
            return Err(Error::NumericalFault("non-finite parameter".into()));
        }
        Ok(Self { layers, params })
    }

    pub fn zeros(layers: Vec<LayerSpec>) -> Result<Self> {
        let n = Self::param_count_for(&layers);
        Self::from_params(layers, vec![0.0; n])
    }

    /// Weights and biases uniform in `+-1/sqrt(fan_in)` of their layer.
    pub fn init<R: Rng + ?Sized>(layers: Vec<LayerSpec>, rng: &mut R) -> Result<Self> {
        Self::check_layers(&layers)?;
        let mut params = Vec::with_capacity(Self::param_count_for(&layers));
        for l in &layers {
            let bound = 1.0 / (l.in_dim as f64).sqrt();
            params.extend((0..l.param_count()).map(|_| rng.random_range(-bound..bound)));
        }
        Ok(Self { layers, params })
    }

    /// `input -> hidden... -> output` with one activation for hidden layers.
    pub fn dense<R: Rng + ?Sized>(
        input: usize,
        hidden: &[usize],
        output: usize,
        hidden_act: Activation,
        output_act: Activation,
        rng: &mut R,
    ) -> Result<Self> {
        let mut dims = vec![input];
        dims.extend_from_slice(hidden);
        dims.push(output);
        let last = dims.len() - 2;
        let layers = dims
            .windows(2)
            .enumerate()
            .map(|(i, w)| LayerSpec::new(w[0], w[1], if i == last { output_act } else { hidden_act }))
            .collect();
        Self::init(layers, rng)
    }

    pub fn layers(&self) -> &[LayerSpec] {
        &self.layers
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].in_dim
    }

    pub fn output_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].out_dim
    }

    pub fn forward(&self, input: &[f64]) -> Result<Vec<f64>> {
        let mut trace = ForwardTrace::default();
        self.forward_trace_into(input, &mut trace)?;
        Ok(trace.acts.pop().expect("at least one layer"))
    }

    pub fn forward_trace(&self, input: &[f64]) -> Result<ForwardTrace> {
        let mut trace = ForwardTrace::default();
        self.forward_trace_into(input, &mut trace)?;
        Ok(trace)
    }

    /// Forward pass reusing the buffers of `trace`.
    pub fn forward_trace_into(&self, input: &[f64], trace: &mut ForwardTrace) -> Result<()> {
        if input.len() != self.input_dim() {
            return Err(Error::Shape {
                expected: self.input_dim(),
                got: input.len(),
            });
        }
        trace.acts.resize_with(self.layers.len() + 1, Vec::new);
        trace.acts[0].clear();
        trace.acts[0].extend_from_slice(input);
        let mut offset = 0;
        for (li, l) in self.layers.iter().enumerate() {
            let (before, after) = trace.acts.split_at_mut(li + 1);
            let x = &before[li];
            let y = &mut after[0];
            y.clear();
            let w = &self.params[offset..offset + l.in_dim * l.out_dim];
            let b = &self.params[offset + l.in_dim * l.out_dim..offset + l.param_count()];
            for (row, bias) in w.chunks_exact(l.in_dim).zip(b) {
                let z = bias + row.iter().zip(x).map(|(wi, xi)| wi * xi).sum::<f64>();
                y.push(l.activation.apply(z));
            }
            offset += l.param_count();
        }
        Ok(())
    }

    /// Reverse pass over a recorded forward trace.
    ///
    /// Adds `d(upstream . output)/d(params)` into `param_grad` and returns the
    /// gradient with respect to the input.
    pub fn backward_into(&self, trace: &ForwardTrace, upstream: &[f64], param_grad: &mut [f64]) -> Result<Vec<f64>> {
        if upstream.len() != self.output_dim() {
            return Err(Error::Shape {
                expected: self.output_dim(),
                got: upstream.len(),
            });
        }
        if param_grad.len() != self.params.len() {
            return Err(Error::Shape {
                expected: self.params.len(),
                got: param_grad.len(),
            });
        }
        if trace.acts.len() != self.layers.len() + 1 {
            return Err(Error::Shape {
                expected: self.layers.len() + 1,
                got: trace.acts.len(),
            });
        }
        let mut offset = self.params.len();
        let mut delta: Vec<f64> = upstream.to_vec();
        for (li, l) in self.layers.iter().enumerate().rev() {
            offset -= l.param_count();
            let y = &trace.acts[li + 1];
            let x = &trace.acts[li];
            for (d, &yo) in delta.iter_mut().zip(y) {
                *d *= l.activation.derivative_at_output(yo);
            }
            let nw = l.in_dim * l.out_dim;
            let (gw, gb) = param_grad[offset..offset + l.param_count()].split_at_mut(nw);
            let w = &self.params[offset..offset + nw];
            let mut prev = vec![0.0; l.in_dim];
            for (o, &d) in delta.iter().enumerate() {
                gb[o] += d;
                if d == 0.0 {
                    continue;
                }
                let grow = &mut gw[o * l.in_dim..(o + 1) * l.in_dim];
                let wrow = &w[o * l.in_dim..(o + 1) * l.in_dim];
                for i in 0..l.in_dim {
                    grow[i] += d * x[i];
                    prev[i] += d * wrow[i];
                }
            }
            delta = prev;
        }
        Ok(delta)
    }

    /// Forward then reverse pass for a single input.
    pub fn backward(&self, input: &[f64], upstream: &[f64]) -> Result<Gradients> {
        let trace = self.forward_trace(input)?;
        let mut params = vec![0.0; self.params.len()];
        let input = self.backward_into(&trace, upstream, &mut params)?;
        Ok(Gradients { params, input })
    }

    pub fn same_shape(&self, other: &Mlp) -> bool {
        self.layers == other.layers
    }
}

/// `target <- tau * online + (1 - tau) * target`, elementwise.
pub fn soft_update(target: &mut Mlp, online: &Mlp, tau: f64) -> Result<()> {
    if !target.same_shape(online) {
        return Err(Error::SpecMismatch);
    }
    if !(0.0..=1.0).contains(&tau) {
        return Err(Error::Domain {
            what: "tau must lie in [0, 1]",
            value: tau,
        });
    }
    for (t, o) in target.params.iter_mut().zip(&online.params) {
        *t = tau * o + (1.0 - tau) * *t;
    }
    Ok(())
}
