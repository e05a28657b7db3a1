use rand::Rng;
use rand_distr::StandardNormal;

use super::{ModelError, Result};
use crate::grid::Grid;
use crate::rng::{stream, Domain};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DatasetKind {
    /// 8x8 images; class 0 carries a bright 3x3 patch in the top-left
    /// corner, class 1 in the bottom-right corner.
    TwoBlob8x8,
}

impl std::str::FromStr for DatasetKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "two-blob" | "two_blob_8x8" | "two-blob-8x8" => Ok(DatasetKind::TwoBlob8x8),
            other => Err(format!("unknown dataset kind '{other}'")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledGrid {
    pub input: Grid,
    pub label: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub samples: Vec<LabeledGrid>,
    pub num_classes: usize,
    /// Ground-truth class-discriminative flat indices, per class.
    pub relevant: Vec<Vec<usize>>,
}

impl Dataset {
    pub fn input_shape(&self) -> Option<&[usize]> {
        self.samples.first().map(|s| s.input.shape())
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

const SIDE: usize = 8;
const PATCH: usize = 3;

fn patch_indices(row0: usize, col0: usize) -> Vec<usize> {
    (row0..row0 + PATCH)
        .flat_map(|r| (col0..col0 + PATCH).map(move |c| r * SIDE + c))
        .collect()
}

/// Sample `i` has label `i % 2` and noise drawn from its own stream, so the
/// dataset is balanced and any prefix is reproducible on its own.
pub fn gen_synthetic_dataset(
    kind: DatasetKind,
    n: usize,
    noise_sigma: f64,
    seed: u64,
) -> Result<Dataset> {
    if n < 2 {
        return Err(ModelError::BadCount(n));
    }
    if !(noise_sigma >= 0.0 && noise_sigma.is_finite()) {
        return Err(ModelError::BadArch(format!(
            "bad noise sigma {noise_sigma}"
        )));
    }
    match kind {
        DatasetKind::TwoBlob8x8 => {
            let relevant = vec![
                patch_indices(0, 0),
                patch_indices(SIDE - PATCH, SIDE - PATCH),
            ];
            let samples = (0..n)
                .map(|i| {
                    let label = i % 2;
                    let mut rng = stream(seed, Domain::Dataset, i as u64);
                    let mut data: Vec<f64> = (0..SIDE * SIDE)
                        .map(|_| noise_sigma * rng.sample::<f64, _>(StandardNormal))
                        .collect();
                    for &p in &relevant[label] {
                        data[p] += 1.0;
                    }
                    Ok(LabeledGrid {
                        input: Grid::new(vec![SIDE, SIDE], data)?,
                        label,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(Dataset {
                samples,
                num_classes: 2,
                relevant,
            })
        }
    }
}
