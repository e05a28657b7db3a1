use super::{argmax, Activation, Dataset, DenseNet, LayerSpec, ModelError, QueryModel, Result};

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub net: DenseNet,
    pub train_accuracy: f64,
    pub final_loss: f64,
}

/// Full-batch gradient descent on cross-entropy.
///
/// A sigmoid output layer is trained with per-class binary cross-entropy
/// against one-hot targets; an identity output layer with softmax
/// cross-entropy. The result depends only on the arguments.
pub fn train_toy(
    dataset: &Dataset,
    arch: &[LayerSpec],
    epochs: usize,
    lr: f64,
    seed: u64,
) -> Result<TrainOutcome> {
    let shape = dataset
        .input_shape()
        .ok_or(ModelError::EmptyDataset)?
        .to_vec();
    if let Some(bad) = dataset
        .samples
        .iter()
        .find(|s| s.input.shape() != shape.as_slice())
    {
        return Err(ModelError::ShapeMismatch {
            expected: shape,
            actual: bad.input.shape().to_vec(),
        });
    }
    let last = arch
        .last()
        .ok_or_else(|| ModelError::BadArch("empty architecture".into()))?;
    if last.units != dataset.num_classes {
        return Err(ModelError::BadArch(format!(
            "output layer has {} units for {} classes",
            last.units, dataset.num_classes
        )));
    }
    if last.activation == Activation::Relu {
        return Err(ModelError::BadArch(
            "output activation must be sigmoid or identity".into(),
        ));
    }
    if let Some(s) = dataset
        .samples
        .iter()
        .find(|s| s.label >= dataset.num_classes)
    {
        return Err(ModelError::BadClass {
            class: s.label,
            num_classes: dataset.num_classes,
        });
    }

    let mut net = DenseNet::random(&shape, arch, seed)?.with_input_range(0.0, 1.0);
    let n = dataset.len() as f64;
    let softmax_head = last.activation == Activation::Identity;

    for _ in 0..epochs {
        let mut grads: Vec<(Vec<f64>, Vec<f64>)> = net
            .layers()
            .iter()
            .map(|l| (vec![0.0; l.rows() * l.cols()], vec![0.0; l.rows()]))
            .collect();
        for sample in &dataset.samples {
            let x = sample.input.data();
            let (zs, acts) = net.forward_trace(x);
            let out = acts.last().expect("non-empty network");
            // Sigmoid + BCE and softmax + CE both give `p - y` at the output
            // pre-activation.
            let probs = if softmax_head {
                softmax(out)
            } else {
                out.clone()
            };
            let top = probs
                .iter()
                .enumerate()
                .map(|(k, &p)| p - if k == sample.label { 1.0 } else { 0.0 })
                .collect();
            let (_, deltas) = net.backward_from_delta(&zs, &acts, top);
            for (l, delta) in deltas.iter().enumerate() {
                let h = if l == 0 { x } else { &acts[l - 1] };
                let cols = h.len();
                let (gw, gb) = &mut grads[l];
                for (r, d) in delta.iter().enumerate() {
                    gb[r] += d;
                    for (c, hv) in h.iter().enumerate() {
                        gw[r * cols + c] += d * hv;
                    }
                }
            }
        }
        for (layer, (gw, gb)) in net.layers_mut().iter_mut().zip(&grads) {
            for (w, g) in layer.weights_mut().iter_mut().zip(gw) {
                *w -= lr * g / n;
            }
            for (b, g) in layer.bias_mut().iter_mut().zip(gb) {
                *b -= lr * g / n;
            }
        }
    }

    let mut correct = 0usize;
    let mut loss = 0.0;
    for sample in &dataset.samples {
        let out = net.evaluate(sample.input.data());
        if argmax(&out) == sample.label {
            correct += 1;
        }
        loss += sample_loss(&out, sample.label, softmax_head);
    }
    Ok(TrainOutcome {
        net,
        train_accuracy: correct as f64 / n,
        final_loss: loss / n,
    })
}

/// The two-blob reference setup used by the command-line defaults and the
/// test suites.
#[derive(Debug, Clone, PartialEq)]
pub struct ToyRecipe {
    pub samples: usize,
    pub noise_sigma: f64,
    pub data_seed: u64,
    pub hidden: usize,
    pub epochs: usize,
    pub lr: f64,
    pub init_seed: u64,
}

impl Default for ToyRecipe {
    fn default() -> Self {
        Self {
            samples: 200,
            noise_sigma: 0.1,
            data_seed: 1,
            hidden: 16,
            epochs: 300,
            lr: 0.5,
            init_seed: 7,
        }
    }
}

impl ToyRecipe {
    pub fn arch(&self) -> Vec<LayerSpec> {
        vec![
            LayerSpec::new(self.hidden, Activation::Relu),
            LayerSpec::new(2, Activation::Sigmoid),
        ]
    }

    pub fn dataset(&self) -> Result<Dataset> {
        super::gen_synthetic_dataset(
            super::DatasetKind::TwoBlob8x8,
            self.samples,
            self.noise_sigma,
            self.data_seed,
        )
    }

    pub fn train(&self) -> Result<TrainOutcome> {
        train_toy(
            &self.dataset()?,
            &self.arch(),
            self.epochs,
            self.lr,
            self.init_seed,
        )
    }
}

fn softmax(z: &[f64]) -> Vec<f64> {
    let m = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = z.iter().map(|v| (v - m).exp()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|v| v / s).collect()
}

fn sample_loss(out: &[f64], label: usize, softmax_head: bool) -> f64 {
    const EPS: f64 = 1e-12;
    if softmax_head {
        -softmax(out)[label].max(EPS).ln()
    } else {
        out.iter()
            .enumerate()
            .map(|(k, &p)| {
                if k == label {
                    -p.max(EPS).ln()
                } else {
                    -(1.0 - p).max(EPS).ln()
                }
            })
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{gen_synthetic_dataset, DatasetKind};

    fn arch() -> Vec<LayerSpec> {
        vec![
            LayerSpec::new(8, Activation::Relu),
            LayerSpec::new(2, Activation::Sigmoid),
        ]
    }

    #[test]
    fn zero_epochs_returns_initialization() {
        let d = gen_synthetic_dataset(DatasetKind::TwoBlob8x8, 16, 0.1, 2).unwrap();
        let out = train_toy(&d, &arch(), 0, 0.5, 5).unwrap();
        let init = DenseNet::random(&[8, 8], &arch(), 5).unwrap();
        assert_eq!(out.net.layers(), init.layers());
    }

    #[test]
    fn training_is_deterministic() {
        let d = gen_synthetic_dataset(DatasetKind::TwoBlob8x8, 32, 0.1, 2).unwrap();
        let a = train_toy(&d, &arch(), 20, 0.5, 5).unwrap();
        let b = train_toy(&d, &arch(), 20, 0.5, 5).unwrap();
        assert_eq!(a.net, b.net);
    }

    #[test]
    fn loss_decreases() {
        let d = gen_synthetic_dataset(DatasetKind::TwoBlob8x8, 64, 0.1, 2).unwrap();
        let a = train_toy(&d, &arch(), 1, 0.5, 5).unwrap();
        let b = train_toy(&d, &arch(), 50, 0.5, 5).unwrap();
        assert!(b.final_loss < a.final_loss);
    }

    #[test]
    fn softmax_head_trains() {
        let d = gen_synthetic_dataset(DatasetKind::TwoBlob8x8, 64, 0.1, 2).unwrap();
        let arch = [
            LayerSpec::new(6, Activation::Relu),
            LayerSpec::new(2, Activation::Identity),
        ];
        let out = train_toy(&d, &arch, 100, 0.3, 1).unwrap();
        assert!(out.train_accuracy >= 0.95, "{}", out.train_accuracy);
    }

    #[test]
    fn rejects_bad_inputs() {
        let d = gen_synthetic_dataset(DatasetKind::TwoBlob8x8, 8, 0.1, 2).unwrap();
        let empty = Dataset {
            samples: vec![],
            num_classes: 2,
            relevant: vec![],
        };
        assert!(matches!(
            train_toy(&empty, &arch(), 1, 0.1, 0),
            Err(ModelError::EmptyDataset)
        ));
        assert!(matches!(
            train_toy(&d, &[LayerSpec::new(3, Activation::Sigmoid)], 1, 0.1, 0),
            Err(ModelError::BadArch(_))
        ));
        assert!(matches!(
            train_toy(&d, &[LayerSpec::new(2, Activation::Relu)], 1, 0.1, 0),
            Err(ModelError::BadArch(_))
        ));
    }
}
