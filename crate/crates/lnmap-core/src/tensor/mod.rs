//! Minimal dense numerics: matrices, bias-free layers, manual
//! backpropagation, SGD with step decay, and finite-difference checking.

mod gradcheck;
mod layer;
mod matrix;
mod net;
mod optim;
pub mod params;

pub use gradcheck::{fd_gradient_check, fd_gradient_check_filtered, FdFailure, FdReport};
pub use layer::{Activation, Layer, LayerCache, PReluState, PRELU_INIT_SLOPE};
pub use matrix::{dot, norm, DenseMatrix};
pub use net::{FeedForwardNet, NetCache};
pub use optim::SgdOptimizer;
pub use params::{NamedTensor, ParamVisitor, ParamVisitorMut, Parameters, PARAM_MAGIC};
