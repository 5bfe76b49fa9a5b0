use std::ops::Range;

use super::network::Network;
use crate::error::{Error, Result};
use crate::numerics::Matrix;

/// Where a loss term reads the network: units `units` of layer `layer`
/// (post-activation). The output layer is `net.output_layer()`.
#[derive(Clone, Debug, PartialEq)]
pub struct Tap {
    pub layer: usize,
    pub units: Range<usize>,
}

impl Tap {
    pub fn output(net: &Network) -> Self {
        Self {
            layer: net.output_layer(),
            units: 0..net.output_dim(),
        }
    }
}

/// Weighted mean-squared-error term: `weight · (1/N) Σ_k ‖t_k − f_tap(x_k)‖²`.
#[derive(Clone, Debug)]
pub struct Term<'a> {
    pub inputs: &'a Matrix,
    pub targets: &'a Matrix,
    pub tap: Tap,
    pub weight: f64,
}

/// Data part of a training loss. The L2 penalty is added by the trainer.
pub trait Objective {
    /// Returns the data loss and adds its gradient into `grad`.
    fn data_loss_and_grad(&mut self, net: &Network, grad: &mut [f64]) -> Result<f64>;
}

/// Sum of weighted MSE terms, each on its own batch.
#[derive(Clone, Debug, Default)]
pub struct Composite<'a> {
    pub terms: Vec<Term<'a>>,
}

impl<'a> Composite<'a> {
    pub fn new(terms: Vec<Term<'a>>) -> Self {
        Self { terms }
    }

    /// Per-term unweighted MSE values, in order.
    pub fn term_mses(&self, net: &Network) -> Result<Vec<f64>> {
        self.terms.iter().map(|t| term_mse(net, t)).collect()
    }
}

impl Objective for Composite<'_> {
    fn data_loss_and_grad(&mut self, net: &Network, grad: &mut [f64]) -> Result<f64> {
        let mut total = 0.0;
        for term in &self.terms {
            // Zero-weight terms contribute exactly nothing.
            if term.weight == 0.0 {
                continue;
            }
            total += term_loss_and_grad(net, term, grad)?;
        }
        Ok(total)
    }
}

/// Plain supervised regression on the network outputs.
#[derive(Clone, Debug)]
pub struct Supervised<'a> {
    pub inputs: &'a Matrix,
    pub targets: &'a Matrix,
}

impl Objective for Supervised<'_> {
    fn data_loss_and_grad(&mut self, net: &Network, grad: &mut [f64]) -> Result<f64> {
        let term = Term {
            inputs: self.inputs,
            targets: self.targets,
            tap: Tap::output(net),
            weight: 1.0,
        };
        term_loss_and_grad(net, &term, grad)
    }
}

fn check_term(net: &Network, term: &Term<'_>) -> Result<()> {
    if term.inputs.rows() == 0 {
        return Err(Error::EmptyBatch);
    }
    if term.inputs.rows() != term.targets.rows() {
        return Err(Error::DimensionMismatch {
            expected: term.inputs.rows(),
            got: term.targets.rows(),
        });
    }
    if term.tap.layer >= net.num_layers() || term.tap.units.end > net.layer_width(term.tap.layer) {
        return Err(Error::InvalidConfig(format!(
            "tap {:?} does not exist in the network",
            term.tap
        )));
    }
    if term.targets.cols() != term.tap.units.len() {
        return Err(Error::DimensionMismatch {
            expected: term.tap.units.len(),
            got: term.targets.cols(),
        });
    }
    Ok(())
}

fn term_mse(net: &Network, term: &Term<'_>) -> Result<f64> {
    check_term(net, term)?;
    let acts = net.forward_to(term.inputs, term.tap.layer)?;
    let out = &acts.post[term.tap.layer];
    let n = term.inputs.rows();
    let mut sse = 0.0;
    for i in 0..n {
        let f = &out.row(i)[term.tap.units.clone()];
        sse += f
            .iter()
            .zip(term.targets.row(i))
            .map(|(p, t)| (p - t) * (p - t))
            .sum::<f64>();
    }
    Ok(sse / n as f64)
}

fn term_loss_and_grad(net: &Network, term: &Term<'_>, grad: &mut [f64]) -> Result<f64> {
    check_term(net, term)?;
    let layer = term.tap.layer;
    let acts = net.forward_to(term.inputs, layer)?;
    let out = &acts.post[layer];
    let n = term.inputs.rows();
    let scale = 2.0 * term.weight / n as f64;
    let mut d_post = Matrix::zeros(n, out.cols());
    let mut sse = 0.0;
    for i in 0..n {
        let f = &out.row(i)[term.tap.units.clone()];
        let d = &mut d_post.row_mut(i)[term.tap.units.clone()];
        for ((di, p), t) in d.iter_mut().zip(f).zip(term.targets.row(i)) {
            let r = p - t;
            sse += r * r;
            *di = scale * r;
        }
    }
    net.backward_from(term.inputs, &acts, layer, d_post, grad);
    Ok(term.weight * sse / n as f64)
}

/// `λ‖W‖²` over weights only; adds `2λW` into `grad` when given.
pub fn l2_penalty(net: &Network, l2: f64, grad: Option<&mut [f64]>) -> f64 {
    if l2 == 0.0 {
        return 0.0;
    }
    if let Some(grad) = grad {
        let params = net.params();
        for s in net.shapes() {
            for k in s.w_offset..s.b_offset {
                grad[k] += 2.0 * l2 * params[k];
            }
        }
    }
    l2 * net.weight_sq_norm()
}

/// Regularized MSE `(1/N) Σ‖y − f(x)‖² + λ‖W‖²` and its exact gradient.
pub fn loss_and_grad(net: &Network, inputs: &Matrix, targets: &Matrix, l2: f64) -> Result<(f64, Vec<f64>)> {
    let mut grad = vec![0.0; net.num_params()];
    let data = Supervised { inputs, targets }.data_loss_and_grad(net, &mut grad)?;
    let penalty = l2_penalty(net, l2, Some(&mut grad));
    Ok((data + penalty, grad))
}

/// Regularized MSE without the gradient.
pub fn loss(net: &Network, inputs: &Matrix, targets: &Matrix, l2: f64) -> Result<f64> {
    let term = Term {
        inputs,
        targets,
        tap: Tap::output(net),
        weight: 1.0,
    };
    Ok(term_mse(net, &term)? + l2_penalty(net, l2, None))
}
