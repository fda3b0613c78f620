//! A bias-free affine layer with an optional elementwise activation.
//!
//! Layers own their weight and its gradient accumulator. `forward_cached`
//! hands back the values `backward` needs, so a backward call without a
//! matching forward is unrepresentable, and a cache from a different batch
//! is rejected by shape.

use alloc::string::String;
use alloc::vec::Vec;

use rand::Rng;

use super::matrix::{shape_string, DenseMatrix};
use crate::error::Error;
use crate::Result;

/// Default initial PReLU slope.
pub const PRELU_INIT_SLOPE: f64 = 0.25;

/// Elementwise activation applied after the affine product.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Activation {
    /// Identity; used by the linear model variants, which keep the full
    /// layer stack rather than collapsing it into one matrix.
    Linear,
    /// `x` for `x > 0`, `slope * x` otherwise, one learnable slope per layer.
    PRelu,
    Tanh,
}

/// PReLU slope with its gradient accumulator.
#[derive(Debug, Clone, PartialEq)]
pub struct PReluState {
    pub slope: f64,
    pub slope_grad: f64,
}

/// One affine transform `x W^T` (weights are `(out, in)`, no bias term)
/// followed by its activation.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    weight: DenseMatrix,
    weight_grad: DenseMatrix,
    activation: Activation,
    prelu: Option<PReluState>,
}

/// Values captured during `forward_cached` that `backward` consumes.
#[derive(Debug, Clone)]
pub struct LayerCache {
    input: DenseMatrix,
    preact: DenseMatrix,
}

impl Layer {
    /// Fresh layer with weights drawn from `U(-1/sqrt(in), 1/sqrt(in))`.
    pub fn new<R: Rng>(in_dim: usize, out_dim: usize, activation: Activation, rng: &mut R) -> Result<Self> {
        if in_dim == 0 || out_dim == 0 {
            return Err(Error::InvalidDimension {
                what: "Layer::new extent",
                value: 0,
            });
        }
        let bound = 1.0 / libm::sqrt(in_dim as f64);
        let data = (0..in_dim * out_dim)
            .map(|_| rng.random_range(-bound..bound))
            .collect::<Vec<f64>>();
        let weight = DenseMatrix::from_vec(out_dim, in_dim, data)?;
        Ok(Self::from_weight(weight, activation))
    }

    /// Wraps an explicit weight matrix; used by tests and deserialization.
    pub fn from_weight(weight: DenseMatrix, activation: Activation) -> Self {
        let grad = DenseMatrix::zeros(weight.rows(), weight.cols());
        let prelu = match activation {
            Activation::PRelu => Some(PReluState {
                slope: PRELU_INIT_SLOPE,
                slope_grad: 0.0,
            }),
            _ => None,
        };
        Layer {
            weight,
            weight_grad: grad,
            activation,
            prelu,
        }
    }

    pub fn in_dim(&self) -> usize {
        self.weight.cols()
    }

    pub fn out_dim(&self) -> usize {
        self.weight.rows()
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub fn weight(&self) -> &DenseMatrix {
        &self.weight
    }

    pub fn weight_mut(&mut self) -> &mut DenseMatrix {
        &mut self.weight
    }

    pub fn weight_grad(&self) -> &DenseMatrix {
        &self.weight_grad
    }

    pub fn prelu(&self) -> Option<&PReluState> {
        self.prelu.as_ref()
    }

    pub(crate) fn parts_mut(&mut self) -> (&mut DenseMatrix, &mut DenseMatrix, Option<&mut PReluState>) {
        (&mut self.weight, &mut self.weight_grad, self.prelu.as_mut())
    }

    pub fn zero_grads(&mut self) {
        self.weight_grad.fill(0.0);
        if let Some(p) = &mut self.prelu {
            p.slope_grad = 0.0;
        }
    }

    /// Activation output without keeping anything for backward.
    pub fn forward(&self, input: &DenseMatrix) -> Result<DenseMatrix> {
        let mut out = input.mul_transpose(&self.weight)?;
        self.apply_activation(&mut out);
        Ok(out)
    }

    /// Forward pass that also captures the inputs `backward` needs.
    pub fn forward_cached(&self, input: &DenseMatrix) -> Result<(DenseMatrix, LayerCache)> {
        let preact = input.mul_transpose(&self.weight)?;
        let mut out = preact.clone();
        self.apply_activation(&mut out);
        let cache = LayerCache {
            input: input.clone(),
            preact,
        };
        Ok((out, cache))
    }

    /// Accumulates parameter gradients for this layer and returns the
    /// gradient with respect to its input. `upstream` is dL/d(output).
    pub fn backward(&mut self, cache: &LayerCache, upstream: &DenseMatrix) -> Result<DenseMatrix> {
        if upstream.shape() != cache.preact.shape() {
            return Err(Error::ShapeMismatch {
                op: "Layer::backward upstream",
                left: upstream.shape(),
                right: cache.preact.shape(),
            });
        }
        if cache.input.cols() != self.in_dim() || upstream.cols() != self.out_dim() {
            return Err(Error::ParameterMismatch {
                name: String::from("layer cache"),
                reason: shape_string(&cache.input),
            });
        }

        // dL/d(preact): activation derivative times upstream; PReLU also
        // accumulates its slope gradient from the negative branch.
        let mut g_pre = upstream.clone();
        match self.activation {
            Activation::Linear => {}
            Activation::Tanh => {
                for (g, &z) in g_pre.data_mut().iter_mut().zip(cache.preact.data()) {
                    let t = libm::tanh(z);
                    *g *= 1.0 - t * t;
                }
            }
            Activation::PRelu => {
                let state = self.prelu.as_mut().expect("PReLU layer carries a slope");
                let mut slope_grad = 0.0;
                for (g, &z) in g_pre.data_mut().iter_mut().zip(cache.preact.data()) {
                    if z <= 0.0 {
                        slope_grad += *g * z;
                        *g *= state.slope;
                    }
                }
                state.slope_grad += slope_grad;
            }
        }

        // dL/dW = g_pre^T * input, accumulated; dL/d(input) = g_pre * W.
        // Overflow to non-finite values is possible here under a
        // diverging learning rate; that is a runtime condition, not a
        // bug, and the optimizer step reports it with the layer's name.
        let w_grad = g_pre.transpose_mul(&cache.input)?;
        self.weight_grad.add_scaled(&w_grad, 1.0)?;
        let g_input = g_pre.mul(&self.weight)?;
        Ok(g_input)
    }

    fn apply_activation(&self, out: &mut DenseMatrix) {
        match self.activation {
            Activation::Linear => {}
            Activation::Tanh => {
                for v in out.data_mut() {
                    *v = libm::tanh(*v);
                }
            }
            Activation::PRelu => {
                let slope = self.prelu.as_ref().expect("PReLU layer carries a slope").slope;
                for v in out.data_mut() {
                    if *v <= 0.0 {
                        *v *= slope;
                    }
                }
            }
        }
    }
}
