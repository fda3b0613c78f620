//! Layer sequences with manual forward/backward passes.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::Rng;

use super::layer::{Activation, Layer, LayerCache};
use super::matrix::DenseMatrix;
use super::params::{ParamVisitor, ParamVisitorMut, Parameters};
use crate::error::Error;
use crate::Result;

/// A chain of affine layers evaluated front to back.
#[derive(Debug, Clone, PartialEq)]
pub struct FeedForwardNet {
    layers: Vec<Layer>,
}

/// Per-layer caches from one `forward_cached` call. Consuming it in
/// `backward` is the only way to run a backward pass.
#[derive(Debug, Clone)]
pub struct NetCache {
    caches: Vec<LayerCache>,
}

impl FeedForwardNet {
    /// Builds a net from consecutive dimensions and one activation per
    /// layer: `dims = [in, h, out]` with two activations gives two layers.
    pub fn new<R: Rng>(dims: &[usize], activations: &[Activation], rng: &mut R) -> Result<Self> {
        if dims.len() < 2 || activations.len() != dims.len() - 1 {
            return Err(Error::InvalidDimension {
                what: "FeedForwardNet::new activation count",
                value: activations.len(),
            });
        }
        let mut layers = Vec::with_capacity(activations.len());
        for (i, &act) in activations.iter().enumerate() {
            layers.push(Layer::new(dims[i], dims[i + 1], act, rng)?);
        }
        Ok(FeedForwardNet { layers })
    }

    pub fn from_layers(layers: Vec<Layer>) -> Self {
        FeedForwardNet { layers }
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Layer] {
        &mut self.layers
    }

    pub fn in_dim(&self) -> usize {
        self.layers.first().map_or(0, Layer::in_dim)
    }

    pub fn out_dim(&self) -> usize {
        self.layers.last().map_or(0, Layer::out_dim)
    }

    pub fn forward(&self, input: &DenseMatrix) -> Result<DenseMatrix> {
        let mut x = input.clone();
        for layer in &self.layers {
            x = layer.forward(&x)?;
        }
        Ok(x)
    }

    pub fn forward_cached(&self, input: &DenseMatrix) -> Result<(DenseMatrix, NetCache)> {
        let mut x = input.clone();
        let mut caches = Vec::with_capacity(self.layers.len());
        for layer in &self.layers {
            let (out, cache) = layer.forward_cached(&x)?;
            caches.push(cache);
            x = out;
        }
        Ok((x, NetCache { caches }))
    }

    /// Runs the chain backwards, accumulating parameter gradients, and
    /// returns dL/d(input). The cache must come from a `forward_cached`
    /// call on this net with the same batch.
    pub fn backward(&mut self, cache: &NetCache, upstream: &DenseMatrix) -> Result<DenseMatrix> {
        if cache.caches.len() != self.layers.len() {
            return Err(Error::ParameterMismatch {
                name: String::from("net cache"),
                reason: format!(
                    "cache has {} layers, net has {}",
                    cache.caches.len(),
                    self.layers.len()
                ),
            });
        }
        let mut g = upstream.clone();
        for (layer, layer_cache) in self.layers.iter_mut().zip(&cache.caches).rev() {
            g = layer.backward(layer_cache, &g)?;
        }
        Ok(g)
    }

    pub fn zero_grads(&mut self) {
        for layer in &mut self.layers {
            layer.zero_grads();
        }
    }
}

impl Parameters for FeedForwardNet {
    fn visit(&self, f: &mut ParamVisitor<'_>) {
        for (i, layer) in self.layers.iter().enumerate() {
            let name = format!("layer{}", i + 1);
            let dims = [layer.out_dim(), layer.in_dim()];
            f(&name, &dims, layer.weight().data(), layer.weight_grad().data());
            if let Some(p) = layer.prelu() {
                f(
                    &format!("{name}.slope"),
                    &[1],
                    core::slice::from_ref(&p.slope),
                    core::slice::from_ref(&p.slope_grad),
                );
            }
        }
    }

    fn visit_mut(&mut self, f: &mut ParamVisitorMut<'_>) {
        for (i, layer) in self.layers.iter_mut().enumerate() {
            let name = format!("layer{}", i + 1);
            let (weight, grad, prelu) = layer.parts_mut();
            let dims = [weight.rows(), weight.cols()];
            f(&name, &dims, weight.data_mut(), grad.data_mut());
            if let Some(p) = prelu {
                f(
                    &format!("{name}.slope"),
                    &[1],
                    core::slice::from_mut(&mut p.slope),
                    core::slice::from_mut(&mut p.slope_grad),
                );
            }
        }
    }
}
