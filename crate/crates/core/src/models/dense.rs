use rand::Rng;

use super::{sigmoid, Capability, ModelError, OutputKind, QueryModel, Result};
use crate::grid::Grid;
use crate::rng::{stream, Domain};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Relu,
    Sigmoid,
    Identity,
}

impl Activation {
    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Relu => z.max(0.0),
            Activation::Sigmoid => sigmoid(z),
            Activation::Identity => z,
        }
    }

    /// Derivative expressed through the pre-activation `z` and output `a`.
    fn derivative(self, z: f64, a: f64) -> f64 {
        match self {
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Sigmoid => a * (1.0 - a),
            Activation::Identity => 1.0,
        }
    }
}

impl std::fmt::Display for Activation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Activation::Relu => "relu",
            Activation::Sigmoid => "sigmoid",
            Activation::Identity => "identity",
        })
    }
}

impl std::str::FromStr for Activation {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "relu" => Ok(Activation::Relu),
            "sigmoid" => Ok(Activation::Sigmoid),
            "identity" => Ok(Activation::Identity),
            other => Err(format!("unknown activation '{other}'")),
        }
    }
}

/// Output width and activation of one layer in an architecture description.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LayerSpec {
    pub units: usize,
    pub activation: Activation,
}

impl LayerSpec {
    pub fn new(units: usize, activation: Activation) -> Self {
        Self { units, activation }
    }
}

/// Fully connected layer `a = act(W h + b)` with `W` of shape `[out, in]`.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer {
    weights: Grid,
    bias: Grid,
    activation: Activation,
}

impl DenseLayer {
    pub fn new(weights: Grid, bias: Grid, activation: Activation) -> Result<Self> {
        let (rows, _) = weights.dims2().map_err(|_| {
            ModelError::BadArch(format!("weights must be 2-D, got {:?}", weights.shape()))
        })?;
        if bias.shape() != [rows] {
            return Err(ModelError::BadArch(format!(
                "bias shape {:?} does not match {rows} output units",
                bias.shape()
            )));
        }
        Ok(Self {
            weights,
            bias,
            activation,
        })
    }

    pub fn rows(&self) -> usize {
        self.weights.shape()[0]
    }

    pub fn cols(&self) -> usize {
        self.weights.shape()[1]
    }

    pub fn weights(&self) -> &Grid {
        &self.weights
    }

    pub fn bias(&self) -> &Grid {
        &self.bias
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    fn pre_activation(&self, h: &[f64]) -> Vec<f64> {
        let cols = self.cols();
        let w = self.weights.data();
        self.bias
            .data()
            .iter()
            .enumerate()
            .map(|(r, &b)| {
                let row = &w[r * cols..(r + 1) * cols];
                row.iter().zip(h).fold(b, |acc, (wi, hi)| acc + wi * hi)
            })
            .collect()
    }

    pub(super) fn weights_mut(&mut self) -> &mut [f64] {
        self.weights.data_mut()
    }

    pub(super) fn bias_mut(&mut self) -> &mut [f64] {
        self.bias.data_mut()
    }
}

/// Small multilayer perceptron with exact input gradients.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseNet {
    input_shape: Vec<usize>,
    layers: Vec<DenseLayer>,
    input_range: (f64, f64),
}

impl DenseNet {
    /// Checks that layer widths chain from the flattened input to the output.
    pub fn new(input_shape: &[usize], layers: Vec<DenseLayer>) -> Result<Self> {
        let mut width: usize = input_shape.iter().product();
        if input_shape.is_empty() || width == 0 {
            return Err(ModelError::BadArch(format!(
                "bad input shape {input_shape:?}"
            )));
        }
        if layers.is_empty() {
            return Err(ModelError::BadArch("network has no layers".into()));
        }
        for (i, layer) in layers.iter().enumerate() {
            if layer.cols() != width {
                return Err(ModelError::BadLayer {
                    layer: i,
                    message: format!("expects {} inputs but receives {width}", layer.cols()),
                });
            }
            width = layer.rows();
        }
        Ok(Self {
            input_shape: input_shape.to_vec(),
            layers,
            input_range: (f64::NEG_INFINITY, f64::INFINITY),
        })
    }

    /// Seeded Glorot/He-uniform initialization with zero biases.
    pub fn random(input_shape: &[usize], arch: &[LayerSpec], seed: u64) -> Result<Self> {
        let mut fan_in: usize = input_shape.iter().product();
        let mut layers = Vec::with_capacity(arch.len());
        for (i, spec) in arch.iter().enumerate() {
            if spec.units == 0 {
                return Err(ModelError::BadLayer {
                    layer: i,
                    message: "zero units".into(),
                });
            }
            let limit = match spec.activation {
                Activation::Relu => (6.0 / fan_in as f64).sqrt(),
                _ => (6.0 / (fan_in + spec.units) as f64).sqrt(),
            };
            let mut rng = stream(seed, Domain::Init, i as u64);
            let w = (0..spec.units * fan_in)
                .map(|_| rng.random_range(-limit..limit))
                .collect();
            layers.push(DenseLayer::new(
                Grid::new(vec![spec.units, fan_in], w)?,
                Grid::zeros(&[spec.units])?,
                spec.activation,
            )?);
            fan_in = spec.units;
        }
        Self::new(input_shape, layers)
    }

    pub fn with_input_range(mut self, lo: f64, hi: f64) -> Self {
        self.input_range = (lo, hi);
        self
    }

    pub fn layers(&self) -> &[DenseLayer] {
        &self.layers
    }

    pub(super) fn layers_mut(&mut self) -> &mut [DenseLayer] {
        &mut self.layers
    }

    /// A functionally identical network with an identity layer inserted
    /// before layer `position`.
    pub fn insert_identity_layer(&self, position: usize) -> Result<DenseNet> {
        if position > self.layers.len() {
            return Err(ModelError::BadArch(format!(
                "cannot insert at {position} into {} layers",
                self.layers.len()
            )));
        }
        let width = if position == 0 {
            self.input_shape.iter().product()
        } else {
            self.layers[position - 1].rows()
        };
        let mut w = vec![0.0; width * width];
        for i in 0..width {
            w[i * width + i] = 1.0;
        }
        let identity = DenseLayer::new(
            Grid::new(vec![width, width], w)?,
            Grid::zeros(&[width])?,
            Activation::Identity,
        )?;
        let mut layers = self.layers.clone();
        layers.insert(position, identity);
        Ok(DenseNet {
            input_shape: self.input_shape.clone(),
            layers,
            input_range: self.input_range,
        })
    }

    /// Pre-activations and activations of every layer.
    pub(super) fn forward_trace(&self, input: &[f64]) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
        let mut zs = Vec::with_capacity(self.layers.len());
        let mut acts: Vec<Vec<f64>> = Vec::with_capacity(self.layers.len());
        for layer in &self.layers {
            let h = acts.last().map(Vec::as_slice).unwrap_or(input);
            let z = layer.pre_activation(h);
            let a = z.iter().map(|&v| layer.activation.apply(v)).collect();
            zs.push(z);
            acts.push(a);
        }
        (zs, acts)
    }

    /// Back-propagates dLoss/dOutput and returns dLoss/dInput along with
    /// per-layer pre-activation deltas.
    pub(super) fn backward(
        &self,
        zs: &[Vec<f64>],
        acts: &[Vec<f64>],
        output_grad: &[f64],
    ) -> (Vec<f64>, Vec<Vec<f64>>) {
        let last = self.layers.len() - 1;
        let act = self.layers[last].activation;
        let top = output_grad
            .iter()
            .zip(zs[last].iter().zip(&acts[last]))
            .map(|(g, (&z, &a))| g * act.derivative(z, a))
            .collect();
        self.backward_from_delta(zs, acts, top)
    }

    /// Same as [`DenseNet::backward`] but starting from the output layer's
    /// pre-activation delta.
    pub(super) fn backward_from_delta(
        &self,
        zs: &[Vec<f64>],
        acts: &[Vec<f64>],
        top: Vec<f64>,
    ) -> (Vec<f64>, Vec<Vec<f64>>) {
        let mut deltas = vec![Vec::new(); self.layers.len()];
        let mut delta = top;
        for (l, layer) in self.layers.iter().enumerate().rev() {
            let cols = layer.cols();
            let w = layer.weights.data();
            let mut down = vec![0.0; cols];
            for (r, d) in delta.iter().enumerate() {
                for (c, slot) in down.iter_mut().enumerate() {
                    *slot += w[r * cols + c] * d;
                }
            }
            deltas[l] = std::mem::take(&mut delta);
            if l == 0 {
                return (down, deltas);
            }
            let below = &self.layers[l - 1];
            delta = down
                .iter()
                .zip(zs[l - 1].iter().zip(&acts[l - 1]))
                .map(|(g, (&z, &a))| g * below.activation.derivative(z, a))
                .collect();
        }
        unreachable!("network has at least one layer")
    }
}

impl QueryModel for DenseNet {
    fn input_shape(&self) -> &[usize] {
        &self.input_shape
    }

    fn num_classes(&self) -> usize {
        self.layers.last().map_or(0, DenseLayer::rows)
    }

    fn capability(&self) -> Capability {
        Capability::WhiteBox
    }

    fn input_range(&self) -> (f64, f64) {
        self.input_range
    }

    fn output_kind(&self) -> OutputKind {
        match self.layers.last().map(DenseLayer::activation) {
            Some(Activation::Sigmoid) => OutputKind::Probability,
            _ => OutputKind::Logit,
        }
    }

    fn evaluate(&self, input: &[f64]) -> Vec<f64> {
        let mut h = input.to_vec();
        for layer in &self.layers {
            h = layer
                .pre_activation(&h)
                .into_iter()
                .map(|z| layer.activation.apply(z))
                .collect();
        }
        h
    }

    fn evaluate_gradient(&self, input: &[f64], class: usize) -> Option<Vec<f64>> {
        let (zs, acts) = self.forward_trace(input);
        let mut seed = vec![0.0; self.num_classes()];
        seed[class] = 1.0;
        Some(self.backward(&zs, &acts, &seed).0)
    }
}

/// Hides the gradient of any model, leaving only query access.
#[derive(Debug, Clone)]
pub struct BlackBox<M> {
    inner: M,
}

impl<M: QueryModel> BlackBox<M> {
    pub fn new(inner: M) -> Self {
        Self { inner }
    }

    pub fn into_inner(self) -> M {
        self.inner
    }
}

impl<M: QueryModel> QueryModel for BlackBox<M> {
    fn input_shape(&self) -> &[usize] {
        self.inner.input_shape()
    }

    fn num_classes(&self) -> usize {
        self.inner.num_classes()
    }

    fn capability(&self) -> Capability {
        Capability::BlackBox
    }

    fn input_range(&self) -> (f64, f64) {
        self.inner.input_range()
    }

    fn output_kind(&self) -> OutputKind {
        self.inner.output_kind()
    }

    fn evaluate(&self, input: &[f64]) -> Vec<f64> {
        self.inner.evaluate(input)
    }
}
