//! Dense feedforward networks trained by full-batch backpropagation.
//!
//! Hidden layers apply `tanh` (or nothing), the output layer is always
//! linear, and the training loss is MSE plus `λ‖W‖²` on weights only.

mod loss;
mod network;
mod optim;
mod train;

pub use loss::{l2_penalty, loss, loss_and_grad, Composite, Objective, Supervised, Tap, Term};
pub use network::{Activation, Activations, Initializer, LayerSpec, Network, NetworkSpec, NETWORK_FORMAT};
pub use optim::{OptimizerKind, OptimizerState, ADAM_EPS, BETA1, BETA2};
pub use train::{train, train_with, TrainConfig, TrainOutcome};
