use ndarray::{Array1, Array2, ArrayView2, Axis, Zip};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Fully connected layer: `y = x W + b`, with `W` shaped `(inputs, outputs)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub weights: Array2<f64>,
    pub bias: Array1<f64>,
}

impl Dense {
    pub fn zeros(inputs: usize, outputs: usize) -> Self {
        Self { weights: Array2::zeros((inputs, outputs)), bias: Array1::zeros(outputs) }
    }

    pub fn inputs(&self) -> usize {
        self.weights.nrows()
    }

    pub fn outputs(&self) -> usize {
        self.weights.ncols()
    }
}

/// Multi-layer perceptron with rectifier hidden layers and a linear output.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    layers: Vec<Dense>,
}

/// Per-layer gradients, shaped like the network.
pub type Gradients = Vec<Dense>;

/// Training loss shape.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub enum Loss {
    #[default]
    #[serde(rename = "mse")]
    MeanSquared,
    /// Huber loss with the given transition point.
    #[serde(rename = "huber")]
    Huber(f64),
}

impl Mlp {
    /// He-style uniform initialisation `U(-sqrt(6/fan_in), sqrt(6/fan_in))`,
    /// zero biases.
    pub fn new<R: Rng + ?Sized>(sizes: &[usize], rng: &mut R) -> Result<Self> {
        let mut net = Self::zeros(sizes)?;
        for layer in &mut net.layers {
            let bound = (6.0 / layer.inputs() as f64).sqrt();
            layer.weights.mapv_inplace(|_| rng.random_range(-bound..bound));
        }
        Ok(net)
    }

    pub fn zeros(sizes: &[usize]) -> Result<Self> {
        if sizes.len() < 2 || sizes.contains(&0) {
            return Err(Error::InvalidParams(format!("network needs >= 2 non-zero layer sizes, got {sizes:?}")));
        }
        let layers = sizes.windows(2).map(|w| Dense::zeros(w[0], w[1])).collect();
        Ok(Self { layers })
    }

    pub fn from_layers(layers: Vec<Dense>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::InvalidParams("network needs at least one layer".into()));
        }
        for (i, l) in layers.iter().enumerate() {
            if l.bias.len() != l.outputs() {
                return Err(Error::ShapeMismatch {
                    expected: format!("bias of length {}", l.outputs()),
                    got: format!("layer {i} bias of length {}", l.bias.len()),
                });
            }
        }
        for (i, w) in layers.windows(2).enumerate() {
            if w[0].outputs() != w[1].inputs() {
                return Err(Error::ShapeMismatch {
                    expected: format!("layer {} input {}", i + 1, w[0].outputs()),
                    got: format!("{}", w[1].inputs()),
                });
            }
        }
        Ok(Self { layers })
    }

    pub fn layers(&self) -> &[Dense] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Dense] {
        &mut self.layers
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut s = vec![self.layers[0].inputs()];
        s.extend(self.layers.iter().map(Dense::outputs));
        s
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].inputs()
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().expect("non-empty").outputs()
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.bias.len()).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.layers.iter().all(|l| l.weights.iter().chain(l.bias.iter()).all(|v| v.is_finite()))
    }

    /// Overwrite this network's parameters with `other`'s.
    pub fn copy_from(&mut self, other: &Mlp) -> Result<()> {
        if self.sizes() != other.sizes() {
            return Err(Error::ShapeMismatch {
                expected: format!("{:?}", self.sizes()),
                got: format!("{:?}", other.sizes()),
            });
        }
        for (dst, src) in self.layers.iter_mut().zip(&other.layers) {
            dst.weights.assign(&src.weights);
            dst.bias.assign(&src.bias);
        }
        Ok(())
    }

    fn check_input(&self, x: &ArrayView2<f64>) -> Result<()> {
        if x.ncols() != self.input_dim() {
            return Err(Error::ShapeMismatch {
                expected: format!("input width {}", self.input_dim()),
                got: format!("{}", x.ncols()),
            });
        }
        Ok(())
    }

    /// Q-values for a batch of inputs, one row per input.
    pub fn forward(&self, x: ArrayView2<f64>) -> Result<Array2<f64>> {
        self.check_input(&x)?;
        let last = self.layers.len() - 1;
        let mut h = x.to_owned();
        for (i, layer) in self.layers.iter().enumerate() {
            let mut z = h.dot(&layer.weights);
            z += &layer.bias;
            if i < last {
                z.mapv_inplace(relu);
            }
            h = z;
        }
        Ok(h)
    }

    /// Outputs for a single input vector.
    pub fn forward_one(&self, x: &[f64]) -> Result<Vec<f64>> {
        let view = ArrayView2::from_shape((1, x.len()), x)
            .map_err(|e| Error::ShapeMismatch { expected: "row vector".into(), got: e.to_string() })?;
        Ok(self.forward(view)?.into_raw_vec_and_offset().0)
    }

    /// Loss and parameter gradients for a batch where only the taken
    /// action's output receives an error signal.
    ///
    /// Mean-squared loss is `mean_i (Q(s_i, a_i) - y_i)^2`.
    pub fn loss_and_gradients(
        &self,
        x: ArrayView2<f64>,
        actions: &[usize],
        targets: &[f64],
        loss: Loss,
    ) -> Result<(f64, Gradients)> {
        self.check_input(&x)?;
        let n = x.nrows();
        if actions.len() != n || targets.len() != n {
            return Err(Error::ShapeMismatch {
                expected: format!("{n} actions and targets"),
                got: format!("{} actions, {} targets", actions.len(), targets.len()),
            });
        }
        if let Some(&a) = actions.iter().find(|&&a| a >= self.output_dim()) {
            return Err(Error::ActionOutOfRange { index: a, count: self.output_dim() });
        }

        // Forward pass keeping each layer's input (post-activation).
        let last = self.layers.len() - 1;
        let mut inputs: Vec<Array2<f64>> = Vec::with_capacity(self.layers.len());
        let mut h = x.to_owned();
        for (i, layer) in self.layers.iter().enumerate() {
            let mut z = h.dot(&layer.weights);
            z += &layer.bias;
            if i < last {
                z.mapv_inplace(relu);
            }
            inputs.push(std::mem::replace(&mut h, z));
        }
        let q = h;

        let mut delta = Array2::<f64>::zeros(q.raw_dim());
        let mut total = 0.0;
        let scale = 1.0 / n as f64;
        for (i, (&a, &y)) in actions.iter().zip(targets).enumerate() {
            let err = q[[i, a]] - y;
            let (l, g) = match loss {
                Loss::MeanSquared => (err * err, 2.0 * err),
                Loss::Huber(k) if err.abs() <= k => (err * err, 2.0 * err),
                Loss::Huber(k) => (2.0 * k * err.abs() - k * k, 2.0 * k * err.signum()),
            };
            total += l;
            delta[[i, a]] = g * scale;
        }
        let loss_value = total * scale;

        let mut grads: Vec<Dense> = Vec::with_capacity(self.layers.len());
        for (i, layer) in self.layers.iter().enumerate().rev() {
            let input = &inputs[i];
            let dw = input.t().dot(&delta);
            let db = delta.sum_axis(Axis(0));
            if i > 0 {
                let mut prev = delta.dot(&layer.weights.t());
                // `input` is the rectified output of layer i-1.
                Zip::from(&mut prev).and(input).for_each(|d, &a| {
                    if a <= 0.0 {
                        *d = 0.0;
                    }
                });
                delta = prev;
            }
            grads.push(Dense { weights: dw, bias: db });
        }
        grads.reverse();
        Ok((loss_value, grads))
    }
}

fn relu(v: f64) -> f64 {
    if v > 0.0 {
        v
    } else {
        0.0
    }
}

/// Scale gradients so their global L2 norm does not exceed `max_norm`.
pub fn clip_gradients(grads: &mut Gradients, max_norm: f64) {
    let norm = grads.iter().flat_map(|g| g.weights.iter().chain(g.bias.iter())).map(|v| v * v).sum::<f64>().sqrt();
    if norm > max_norm && norm > 0.0 {
        let s = max_norm / norm;
        for g in grads.iter_mut() {
            g.weights.mapv_inplace(|v| v * s);
            g.bias.mapv_inplace(|v| v * s);
        }
    }
}
