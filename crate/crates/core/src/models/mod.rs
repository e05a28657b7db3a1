//! The black-box boundary.
//!
//! Explainers only ever see a [`QueryModel`]: something that maps an input
//! grid to a vector of class scores. Models that can also differentiate
//! themselves advertise [`Capability::WhiteBox`]; the reference explainers
//! and the gradient checks need that, the query-only explainers do not.

mod analytic;
mod data;
mod dense;
mod io;
mod train;

pub use analytic::AnalyticModel;
pub use data::{gen_synthetic_dataset, Dataset, DatasetKind, LabeledGrid};
pub use dense::{Activation, BlackBox, DenseLayer, DenseNet, LayerSpec};
pub use io::{load_model, model_from_text, model_to_text, save_model, ModelFile, FORMAT_VERSION};
pub use train::{train_toy, ToyRecipe, TrainOutcome};

use thiserror::Error;

use crate::grid::{Grid, GridError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("input shape {actual:?} does not match model input shape {expected:?}")]
    ShapeMismatch {
        expected: Vec<usize>,
        actual: Vec<usize>,
    },
    #[error("non-finite input value at flat index {0}")]
    NonFiniteInput(usize),
    #[error("white-box capability required")]
    NotWhiteBox,
    #[error("class index {class} out of range for {num_classes} classes")]
    BadClass { class: usize, num_classes: usize },
    #[error("bad architecture: {0}")]
    BadArch(String),
    #[error("bad architecture at layer {layer}: {message}")]
    BadLayer { layer: usize, message: String },
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("sample count {0} must be at least 2")]
    BadCount(usize),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("unsupported model format version {found} (expected {expected})")]
    VersionMismatch { found: u32, expected: u32 },
    #[error("{0}")]
    Io(String),
    #[error(transparent)]
    Grid(#[from] GridError),
}

pub type Result<T> = std::result::Result<T, ModelError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Capability {
    BlackBox,
    WhiteBox,
}

impl std::fmt::Display for Capability {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Capability::BlackBox => "black_box",
            Capability::WhiteBox => "white_box",
        })
    }
}

/// What the class scores mean. Deletion metrics divide by the score, so it
/// matters whether it is a probability or an unbounded logit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputKind {
    Probability,
    Logit,
    Raw,
}

impl std::fmt::Display for OutputKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            OutputKind::Probability => "probability",
            OutputKind::Logit => "logit",
            OutputKind::Raw => "raw",
        })
    }
}

pub trait QueryModel: Send + Sync {
    fn input_shape(&self) -> &[usize];

    fn num_classes(&self) -> usize;

    fn capability(&self) -> Capability;

    /// Declared valid input range, used to clip sampled replacement values.
    fn input_range(&self) -> (f64, f64) {
        (f64::NEG_INFINITY, f64::INFINITY)
    }

    fn output_kind(&self) -> OutputKind {
        OutputKind::Raw
    }

    /// Class scores for flat, row-major input data. Callers guarantee the
    /// length matches `input_shape` and every value is finite.
    fn evaluate(&self, input: &[f64]) -> Vec<f64>;

    /// Gradient of one class score for flat input data, or `None` for
    /// black-box models. Same preconditions as [`QueryModel::evaluate`].
    fn evaluate_gradient(&self, _input: &[f64], _class: usize) -> Option<Vec<f64>> {
        None
    }

    /// Validated query.
    fn query(&self, input: &Grid) -> Result<Vec<f64>> {
        check_input(self.input_shape(), input)?;
        Ok(self.evaluate(input.data()))
    }

    /// Validated analytic gradient of class `class`.
    fn gradient(&self, input: &Grid, class: usize) -> Result<Grid> {
        if self.capability() != Capability::WhiteBox {
            return Err(ModelError::NotWhiteBox);
        }
        check_class(class, self.num_classes())?;
        check_input(self.input_shape(), input)?;
        let g = self
            .evaluate_gradient(input.data(), class)
            .ok_or(ModelError::NotWhiteBox)?;
        Ok(Grid::new(input.shape().to_vec(), g)?)
    }
}

pub(crate) fn check_input(expected: &[usize], input: &Grid) -> Result<()> {
    if input.shape() != expected {
        return Err(ModelError::ShapeMismatch {
            expected: expected.to_vec(),
            actual: input.shape().to_vec(),
        });
    }
    if let Some(i) = input.data().iter().position(|v| !v.is_finite()) {
        return Err(ModelError::NonFiniteInput(i));
    }
    Ok(())
}

pub(crate) fn check_class(class: usize, num_classes: usize) -> Result<()> {
    if class >= num_classes {
        return Err(ModelError::BadClass { class, num_classes });
    }
    Ok(())
}

/// Index of the largest score (first one on ties).
pub fn argmax(scores: &[f64]) -> usize {
    scores
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |(bi, bv), (i, &v)| {
            if v > bv {
                (i, v)
            } else {
                (bi, bv)
            }
        })
        .0
}

pub(crate) fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

impl<M: QueryModel + ?Sized> QueryModel for Box<M> {
    fn input_shape(&self) -> &[usize] {
        (**self).input_shape()
    }
    fn num_classes(&self) -> usize {
        (**self).num_classes()
    }
    fn capability(&self) -> Capability {
        (**self).capability()
    }
    fn input_range(&self) -> (f64, f64) {
        (**self).input_range()
    }
    fn output_kind(&self) -> OutputKind {
        (**self).output_kind()
    }
    fn evaluate(&self, input: &[f64]) -> Vec<f64> {
        (**self).evaluate(input)
    }
    fn evaluate_gradient(&self, input: &[f64], class: usize) -> Option<Vec<f64>> {
        (**self).evaluate_gradient(input, class)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn argmax_prefers_first_on_ties() {
        assert_eq!(argmax(&[0.1, 0.7, 0.7]), 1);
        assert_eq!(argmax(&[-3.0]), 0);
    }

    #[test]
    fn query_validates_input() {
        let m = AnalyticModel::Sigmoid1d;
        assert!(matches!(
            m.query(&Grid::from_vec(vec![0.0, 1.0]).unwrap()),
            Err(ModelError::ShapeMismatch { .. })
        ));
        assert!(matches!(
            m.gradient(&Grid::from_vec(vec![0.0]).unwrap(), 1),
            Err(ModelError::BadClass { .. })
        ));
        let bb = BlackBox::new(m);
        assert!(matches!(
            bb.gradient(&Grid::from_vec(vec![0.0]).unwrap(), 0),
            Err(ModelError::NotWhiteBox)
        ));
        assert_eq!(
            bb.query(&Grid::from_vec(vec![0.0]).unwrap()).unwrap(),
            vec![0.5]
        );
    }
}
