use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{gemm_slice, MatRef, Matrix, Rng};

pub const NETWORK_FORMAT: &str = "mufide-net-v1";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Tanh,
    Linear,
}

impl Activation {
    #[inline]
    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Tanh => z.tanh(),
            Activation::Linear => z,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Initializer {
    /// `U(-0.05, 0.05)`
    Uniform,
    /// `N(0, 0.05²)`
    Normal,
    /// `U(±√(6/(fan_in+fan_out)))`
    GlorotUniform,
    /// `N(0, 2/(fan_in+fan_out))`
    GlorotNormal,
}

impl Initializer {
    pub const ALL: [Initializer; 4] = [
        Initializer::Uniform,
        Initializer::Normal,
        Initializer::GlorotUniform,
        Initializer::GlorotNormal,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Initializer::Uniform => "uniform",
            Initializer::Normal => "normal",
            Initializer::GlorotUniform => "glorot_uniform",
            Initializer::GlorotNormal => "glorot_normal",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|i| i.name() == name)
    }

    fn sample(self, fan_in: usize, fan_out: usize, rng: &mut Rng) -> f64 {
        let fans = (fan_in + fan_out) as f64;
        match self {
            Initializer::Uniform => rng.uniform_range(-0.05, 0.05),
            Initializer::Normal => 0.05 * rng.normal(),
            Initializer::GlorotUniform => {
                let limit = (6.0 / fans).sqrt();
                rng.uniform_range(-limit, limit)
            }
            Initializer::GlorotNormal => (2.0 / fans).sqrt() * rng.normal(),
        }
    }
}

/// One hidden layer.
///
/// The last `linear_tail` units skip the activation and pass their
/// pre-activation through unchanged.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LayerSpec {
    pub width: usize,
    pub activation: Activation,
    #[serde(default, skip_serializing_if = "is_zero")]
    pub linear_tail: usize,
}

fn is_zero(v: &usize) -> bool {
    *v == 0
}

impl LayerSpec {
    pub fn tanh(width: usize) -> Self {
        Self {
            width,
            activation: Activation::Tanh,
            linear_tail: 0,
        }
    }

    pub fn linear(width: usize) -> Self {
        Self {
            width,
            activation: Activation::Linear,
            linear_tail: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NetworkSpec {
    pub input_dim: usize,
    pub hidden: Vec<LayerSpec>,
    pub output_dim: usize,
    pub initializer: Initializer,
    pub seed: u64,
}

impl NetworkSpec {
    pub fn new(input_dim: usize, hidden: Vec<LayerSpec>, output_dim: usize) -> Self {
        Self {
            input_dim,
            hidden,
            output_dim,
            initializer: Initializer::GlorotUniform,
            seed: 0,
        }
    }

    pub fn with_initializer(mut self, initializer: Initializer) -> Self {
        self.initializer = initializer;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_dim == 0 || self.output_dim == 0 {
            return Err(Error::InvalidConfig(
                "network input and output dimensions must be at least 1".into(),
            ));
        }
        for (i, layer) in self.hidden.iter().enumerate() {
            if layer.width == 0 {
                return Err(Error::InvalidConfig(format!("hidden layer {i} has width 0")));
            }
            if layer.linear_tail > layer.width {
                return Err(Error::InvalidConfig(format!(
                    "hidden layer {i}: linear tail {} exceeds width {}",
                    layer.linear_tail, layer.width
                )));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) struct LayerShape {
    pub fan_in: usize,
    pub fan_out: usize,
    pub w_offset: usize,
    pub b_offset: usize,
    pub activation: Activation,
    /// Units `[nonlinear_units, fan_out)` are linear.
    pub nonlinear_units: usize,
}

impl LayerShape {
    fn act(&self, unit: usize) -> Activation {
        if unit < self.nonlinear_units {
            self.activation
        } else {
            Activation::Linear
        }
    }
}

fn layout(spec: &NetworkSpec) -> (Vec<LayerShape>, usize) {
    let mut shapes = Vec::with_capacity(spec.hidden.len() + 1);
    let mut fan_in = spec.input_dim;
    let mut offset = 0;
    let outputs = spec
        .hidden
        .iter()
        .map(|l| (l.width, l.activation, l.width - l.linear_tail))
        .chain(std::iter::once((spec.output_dim, Activation::Linear, spec.output_dim)));
    for (fan_out, activation, nonlinear_units) in outputs {
        let w_offset = offset;
        let b_offset = w_offset + fan_in * fan_out;
        offset = b_offset + fan_out;
        shapes.push(LayerShape {
            fan_in,
            fan_out,
            w_offset,
            b_offset,
            activation,
            nonlinear_units,
        });
        fan_in = fan_out;
    }
    (shapes, offset)
}

/// Dense feedforward network: tanh (or linear) hidden layers and a linear
/// output layer. Parameters live in one flat vector; layer `l` stores its
/// row-major `fan_out × fan_in` weights followed by its biases.
#[derive(Clone, Debug, PartialEq)]
pub struct Network {
    spec: NetworkSpec,
    shapes: Vec<LayerShape>,
    params: Vec<f64>,
}

/// Pre- and post-activations of every evaluated layer, one row per sample.
#[derive(Clone, Debug)]
pub struct Activations {
    pub pre: Vec<Matrix>,
    pub post: Vec<Matrix>,
}

impl Network {
    /// Draws weights with the configured initializer; biases start at zero.
    pub fn init(spec: NetworkSpec) -> Result<Self> {
        spec.validate()?;
        let (shapes, n) = layout(&spec);
        let mut params = vec![0.0; n];
        let mut rng = Rng::new(spec.seed);
        for s in &shapes {
            for w in &mut params[s.w_offset..s.b_offset] {
                *w = spec.initializer.sample(s.fan_in, s.fan_out, &mut rng);
            }
        }
        Ok(Self { spec, shapes, params })
    }

    /// Builds a network around explicit parameters.
    pub fn from_params(spec: NetworkSpec, params: Vec<f64>) -> Result<Self> {
        spec.validate()?;
        let (shapes, n) = layout(&spec);
        if params.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: params.len(),
            });
        }
        if params.iter().any(|p| !p.is_finite()) {
            return Err(Error::NonFinite("network parameters"));
        }
        Ok(Self { spec, shapes, params })
    }

    pub fn spec(&self) -> &NetworkSpec {
        &self.spec
    }

    pub fn input_dim(&self) -> usize {
        self.spec.input_dim
    }

    pub fn output_dim(&self) -> usize {
        self.spec.output_dim
    }

    /// Number of weight layers (hidden layers + output layer).
    pub fn num_layers(&self) -> usize {
        self.shapes.len()
    }

    /// Index of the output layer.
    pub fn output_layer(&self) -> usize {
        self.shapes.len() - 1
    }

    pub fn layer_width(&self, layer: usize) -> usize {
        self.shapes[layer].fan_out
    }

    pub fn num_params(&self) -> usize {
        self.params.len()
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub(crate) fn shapes(&self) -> &[LayerShape] {
        &self.shapes
    }

    /// Weights of `layer` within a parameter-shaped vector (params or gradient).
    pub fn weights_of<'a>(&self, flat: &'a [f64], layer: usize) -> &'a [f64] {
        let s = &self.shapes[layer];
        &flat[s.w_offset..s.b_offset]
    }

    pub fn biases_of<'a>(&self, flat: &'a [f64], layer: usize) -> &'a [f64] {
        let s = &self.shapes[layer];
        &flat[s.b_offset..s.b_offset + s.fan_out]
    }

    /// Weight matrix of `layer` (`fan_out × fan_in`).
    pub fn weights(&self, layer: usize) -> Matrix {
        let s = &self.shapes[layer];
        Matrix::from_vec(s.fan_out, s.fan_in, self.weights_of(&self.params, layer).to_vec())
            .expect("layout is consistent")
    }

    pub fn biases(&self, layer: usize) -> &[f64] {
        self.biases_of(&self.params, layer)
    }

    /// Overwrites one layer's weights and biases.
    pub fn set_layer(&mut self, layer: usize, weights: &Matrix, biases: &[f64]) -> Result<()> {
        let s = self.shapes[layer];
        if weights.shape() != (s.fan_out, s.fan_in) || biases.len() != s.fan_out {
            return Err(Error::DimensionMismatch {
                expected: s.fan_out * s.fan_in,
                got: weights.rows() * weights.cols(),
            });
        }
        self.params[s.w_offset..s.b_offset].copy_from_slice(weights.as_slice());
        self.params[s.b_offset..s.b_offset + s.fan_out].copy_from_slice(biases);
        Ok(())
    }

    /// Is `flat` (params or gradient) a weight entry rather than a bias?
    pub fn weight_mask(&self) -> Vec<bool> {
        let mut mask = vec![false; self.params.len()];
        for s in &self.shapes {
            mask[s.w_offset..s.b_offset].fill(true);
        }
        mask
    }

    /// `‖W‖²` over all weight matrices (biases excluded).
    pub fn weight_sq_norm(&self) -> f64 {
        self.shapes
            .iter()
            .map(|s| self.params[s.w_offset..s.b_offset].iter().map(|w| w * w).sum::<f64>())
            .sum()
    }

    /// Evaluates a single input; returns the output and the per-layer cache.
    pub fn forward(&self, x: &[f64]) -> Result<(Vec<f64>, Activations)> {
        let inputs = Matrix::from_vec(1, x.len(), x.to_vec())?;
        let acts = self.forward_batch(&inputs)?;
        let out = acts.post[self.output_layer()].row(0).to_vec();
        Ok((out, acts))
    }

    pub fn predict(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(self.forward(x)?.0)
    }

    /// Outputs for every row of `inputs`.
    pub fn predict_batch(&self, inputs: &Matrix) -> Result<Matrix> {
        let mut acts = self.forward_to(inputs, self.output_layer())?;
        Ok(acts.post.pop().expect("at least one layer"))
    }

    pub fn forward_batch(&self, inputs: &Matrix) -> Result<Activations> {
        self.forward_to(inputs, self.output_layer())
    }

    /// Forward pass through layers `0..=last`.
    pub fn forward_to(&self, inputs: &Matrix, last: usize) -> Result<Activations> {
        if inputs.cols() != self.spec.input_dim {
            return Err(Error::DimensionMismatch {
                expected: self.spec.input_dim,
                got: inputs.cols(),
            });
        }
        let n = inputs.rows();
        let mut pre = Vec::with_capacity(last + 1);
        let mut post: Vec<Matrix> = Vec::with_capacity(last + 1);
        for (l, s) in self.shapes[..=last].iter().enumerate() {
            let x = if l == 0 { inputs } else { &post[l - 1] };
            let mut z = Matrix::zeros(n, s.fan_out);
            let bias = &self.params[s.b_offset..s.b_offset + s.fan_out];
            for i in 0..n {
                z.row_mut(i).copy_from_slice(bias);
            }
            let w = MatRef::from_slice(&self.params[s.w_offset..s.b_offset], s.fan_out, s.fan_in);
            gemm_slice(1.0, MatRef::new(x), w.t(), 1.0, z.as_mut_slice(), n, s.fan_out);
            let mut a = z.clone();
            if s.activation != Activation::Linear && s.nonlinear_units > 0 {
                for i in 0..n {
                    for v in &mut a.row_mut(i)[..s.nonlinear_units] {
                        *v = s.activation.apply(*v);
                    }
                }
            }
            pre.push(z);
            post.push(a);
        }
        Ok(Activations { pre, post })
    }

    /// Reverse pass from layer `last`, whose post-activation gradient is
    /// `d_post` (consumed). Accumulates into `grad`.
    pub(crate) fn backward_from(
        &self,
        inputs: &Matrix,
        acts: &Activations,
        last: usize,
        mut d_post: Matrix,
        grad: &mut [f64],
    ) {
        let n = inputs.rows();
        for l in (0..=last).rev() {
            let s = &self.shapes[l];
            // d_pre = d_post ⊙ φ'(z)
            if s.activation == Activation::Tanh && s.nonlinear_units > 0 {
                let y = &acts.post[l];
                for i in 0..n {
                    let yr = y.row(i);
                    for (u, d) in d_post.row_mut(i)[..s.nonlinear_units].iter_mut().enumerate() {
                        *d *= 1.0 - yr[u] * yr[u];
                    }
                }
            }
            let x = if l == 0 { inputs } else { &acts.post[l - 1] };
            {
                let (gw, gb) = grad[s.w_offset..s.b_offset + s.fan_out].split_at_mut(s.b_offset - s.w_offset);
                gemm_slice(
                    1.0,
                    MatRef::new(&d_post).t(),
                    MatRef::new(x),
                    1.0,
                    gw,
                    s.fan_out,
                    s.fan_in,
                );
                for i in 0..n {
                    for (g, d) in gb.iter_mut().zip(d_post.row(i)) {
                        *g += d;
                    }
                }
            }
            if l > 0 {
                let w = MatRef::from_slice(&self.params[s.w_offset..s.b_offset], s.fan_out, s.fan_in);
                let mut next = Matrix::zeros(n, s.fan_in);
                gemm_slice(1.0, MatRef::new(&d_post), w, 0.0, next.as_mut_slice(), n, s.fan_in);
                d_post = next;
            }
        }
    }

    /// Activation used by unit `unit` of layer `layer`.
    pub fn unit_activation(&self, layer: usize, unit: usize) -> Activation {
        self.shapes[layer].act(unit)
    }
}

/// Serialized form: spec plus flat per-layer parameter arrays.
#[derive(Serialize, Deserialize)]
struct NetworkDocument {
    format: String,
    spec: NetworkSpec,
    weights: Vec<Vec<f64>>,
    biases: Vec<Vec<f64>>,
}

impl Serialize for Network {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        NetworkDocument {
            format: NETWORK_FORMAT.to_string(),
            spec: self.spec.clone(),
            weights: (0..self.num_layers())
                .map(|l| self.weights_of(&self.params, l).to_vec())
                .collect(),
            biases: (0..self.num_layers())
                .map(|l| self.biases_of(&self.params, l).to_vec())
                .collect(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Network {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        use serde::de::Error as _;
        let doc = NetworkDocument::deserialize(deserializer)?;
        if doc.format != NETWORK_FORMAT {
            return Err(D::Error::custom(format!(
                "expected format `{NETWORK_FORMAT}`, found `{}`",
                doc.format
            )));
        }
        if doc.weights.len() != doc.biases.len() {
            return Err(D::Error::custom("weights and biases disagree on layer count"));
        }
        let params: Vec<f64> = doc
            .weights
            .into_iter()
            .zip(doc.biases)
            .flat_map(|(w, b)| w.into_iter().chain(b))
            .collect();
        Network::from_params(doc.spec, params).map_err(D::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn affine(w: f64, b: f64) -> Network {
        let spec = NetworkSpec::new(1, vec![], 1);
        Network::from_params(spec, vec![w, b]).unwrap()
    }

    #[test]
    fn pure_affine_forward() {
        let net = affine(2.0, 1.0);
        assert_eq!(net.predict(&[3.0]).unwrap(), vec![7.0]);
    }

    #[test]
    fn single_tanh_unit() {
        let spec = NetworkSpec::new(1, vec![LayerSpec::tanh(1)], 1);
        let net = Network::from_params(spec, vec![1.0, 0.0, 1.0, 0.0]).unwrap();
        assert_eq!(net.predict(&[0.0]).unwrap(), vec![0.0]);
        assert_relative_eq!(net.predict(&[1.0]).unwrap()[0], 0.761594155955765, epsilon = 1e-12);
    }

    #[test]
    fn forward_caches_every_layer() {
        let spec = NetworkSpec::new(2, vec![LayerSpec::tanh(3), LayerSpec::tanh(4)], 1);
        let net = Network::init(spec).unwrap();
        let (_, acts) = net.forward(&[0.1, 0.2]).unwrap();
        assert_eq!(acts.pre.len(), 3);
        assert_eq!(acts.post[1].cols(), 4);
        for (z, x) in acts.pre[0].as_slice().iter().zip(acts.post[0].as_slice()) {
            assert_eq!(z.tanh(), *x);
        }
    }

    #[test]
    fn wrong_input_length() {
        let net = affine(1.0, 0.0);
        assert!(matches!(
            net.predict(&[1.0, 2.0]),
            Err(Error::DimensionMismatch { expected: 1, got: 2 })
        ));
    }

    #[test]
    fn glorot_uniform_limit() {
        // fan_in = fan_out = 3 gives limit √(6/6) = 1.
        let spec = NetworkSpec::new(3, vec![LayerSpec::tanh(3)], 3).with_seed(11);
        let net = Network::init(spec).unwrap();
        for l in 0..net.num_layers() {
            assert!(net.weights(l).as_slice().iter().all(|w| w.abs() <= 1.0));
        }
    }

    #[test]
    fn biases_start_at_zero() {
        for init in Initializer::ALL {
            let spec = NetworkSpec::new(2, vec![LayerSpec::tanh(8)], 1).with_initializer(init);
            let net = Network::init(spec).unwrap();
            for l in 0..net.num_layers() {
                assert!(net.biases(l).iter().all(|&b| b == 0.0));
            }
        }
    }

    #[test]
    fn init_is_deterministic() {
        let spec = NetworkSpec::new(2, vec![LayerSpec::tanh(16)], 1).with_seed(5);
        let a = Network::init(spec.clone()).unwrap();
        let b = Network::init(spec).unwrap();
        assert_eq!(a.params(), b.params());
    }

    #[test]
    fn small_initializers_stay_small() {
        let spec = NetworkSpec::new(4, vec![LayerSpec::tanh(64)], 1).with_initializer(Initializer::Uniform);
        let net = Network::init(spec).unwrap();
        assert!(net.params().iter().all(|w| w.abs() <= 0.05));
    }

    #[test]
    fn linear_tail_units_skip_activation() {
        let mut spec = NetworkSpec::new(1, vec![LayerSpec::tanh(2)], 1);
        spec.hidden[0].linear_tail = 1;
        // Hidden weights [1, 1], biases [0, 0]; output reads unit 1 only.
        let net = Network::from_params(spec, vec![1.0, 1.0, 0.0, 0.0, 0.0, 1.0, 0.0]).unwrap();
        assert_eq!(net.predict(&[2.0]).unwrap(), vec![2.0]);
    }

    #[test]
    fn json_round_trip() {
        let spec = NetworkSpec::new(2, vec![LayerSpec::tanh(5)], 2).with_seed(9);
        let net = Network::init(spec).unwrap();
        let text = serde_json::to_string(&net).unwrap();
        assert!(text.contains(NETWORK_FORMAT));
        let back: Network = serde_json::from_str(&text).unwrap();
        assert_eq!(back, net);
    }

    #[test]
    fn wrong_format_tag_rejected() {
        let net = affine(1.0, 0.0);
        let text = serde_json::to_string(&net).unwrap().replace(NETWORK_FORMAT, "other");
        assert!(serde_json::from_str::<Network>(&text).is_err());
    }
}
