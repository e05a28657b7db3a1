use super::{sigmoid, Capability, ModelError, QueryModel, Result};
use crate::grid::Grid;

/// Closed-form single-output test functions with exact gradients.
#[derive(Debug, Clone, PartialEq)]
pub enum AnalyticModel {
    /// `f(x) = sigmoid(x)` on a one-element input.
    Sigmoid1d,
    /// `f(x, y) = sigmoid(x)`; the second coordinate is ignored.
    SigmoidOfXOnly2d,
    /// `f(x) = <w, x> + b`.
    Linear {
        w: Grid,
        b: f64,
    },
    Constant {
        value: f64,
        shape: Vec<usize>,
    },
    /// Flat vector input with an ignored coordinate at position `k`; the
    /// remaining coordinates go to `inner`.
    DummyFeature {
        k: usize,
        inner: Box<AnalyticModel>,
        shape: Vec<usize>,
    },
}

impl AnalyticModel {
    pub fn linear(w: Grid, b: f64) -> Self {
        AnalyticModel::Linear { w, b }
    }

    pub fn constant(value: f64, shape: &[usize]) -> Self {
        AnalyticModel::Constant {
            value,
            shape: shape.to_vec(),
        }
    }

    /// Wraps `inner` so that flat coordinate `k` of a one-longer vector
    /// input is dropped before delegation.
    pub fn dummy_feature(k: usize, inner: AnalyticModel) -> Result<Self> {
        let inner_len: usize = inner.input_shape().iter().product();
        if k > inner_len {
            return Err(ModelError::BadArch(format!(
                "dummy coordinate {k} out of range for {} inputs",
                inner_len + 1
            )));
        }
        Ok(AnalyticModel::DummyFeature {
            k,
            inner: Box::new(inner),
            shape: vec![inner_len + 1],
        })
    }

    fn value(&self, x: &[f64]) -> f64 {
        match self {
            AnalyticModel::Sigmoid1d | AnalyticModel::SigmoidOfXOnly2d => sigmoid(x[0]),
            AnalyticModel::Linear { w, b } => w
                .data()
                .iter()
                .zip(x)
                .fold(*b, |acc, (wi, xi)| acc + wi * xi),
            AnalyticModel::Constant { value, .. } => *value,
            AnalyticModel::DummyFeature { k, inner, .. } => inner.value(&drop_at(x, *k)),
        }
    }

    fn grad(&self, x: &[f64]) -> Vec<f64> {
        match self {
            AnalyticModel::Sigmoid1d => {
                let s = sigmoid(x[0]);
                vec![s * (1.0 - s)]
            }
            AnalyticModel::SigmoidOfXOnly2d => {
                let s = sigmoid(x[0]);
                vec![s * (1.0 - s), 0.0]
            }
            AnalyticModel::Linear { w, .. } => w.data().to_vec(),
            AnalyticModel::Constant { .. } => vec![0.0; x.len()],
            AnalyticModel::DummyFeature { k, inner, .. } => {
                let mut g = inner.grad(&drop_at(x, *k));
                g.insert(*k, 0.0);
                g
            }
        }
    }
}

fn drop_at(x: &[f64], k: usize) -> Vec<f64> {
    x.iter()
        .enumerate()
        .filter(|&(i, _)| i != k)
        .map(|(_, &v)| v)
        .collect()
}

const SHAPE_1: [usize; 1] = [1];
const SHAPE_2: [usize; 1] = [2];

impl QueryModel for AnalyticModel {
    fn input_shape(&self) -> &[usize] {
        match self {
            AnalyticModel::Sigmoid1d => &SHAPE_1,
            AnalyticModel::SigmoidOfXOnly2d => &SHAPE_2,
            AnalyticModel::Linear { w, .. } => w.shape(),
            AnalyticModel::Constant { shape, .. } | AnalyticModel::DummyFeature { shape, .. } => {
                shape
            }
        }
    }

    fn num_classes(&self) -> usize {
        1
    }

    fn capability(&self) -> Capability {
        Capability::WhiteBox
    }

    fn evaluate(&self, input: &[f64]) -> Vec<f64> {
        vec![self.value(input)]
    }

    fn evaluate_gradient(&self, input: &[f64], _class: usize) -> Option<Vec<f64>> {
        Some(self.grad(input))
    }
}
