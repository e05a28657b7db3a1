//! Shaped dense `f64` arrays.
//!
//! [`Grid`] carries explicands, baselines, noise masks, queries and
//! attributions alike. Storage is flat and row-major; every public operation
//! returns a fresh grid and leaves its inputs untouched.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GridError {
    #[error("shape mismatch: {left:?} vs {right:?}")]
    ShapeMismatch { left: Vec<usize>, right: Vec<usize> },
    #[error("shape {shape:?} holds {expected} elements but {actual} were given")]
    LengthMismatch {
        shape: Vec<usize>,
        expected: usize,
        actual: usize,
    },
    #[error("shape {0:?} must be non-empty with positive dimensions")]
    BadShape(Vec<usize>),
    #[error("non-finite value at flat index {0}")]
    NonFinite(usize),
    #[error("interpolation coefficient {0} outside [0, 1]")]
    AlphaOutOfRange(f64),
    #[error("expected a 2-D grid, got shape {0:?}")]
    NotTwoDimensional(Vec<usize>),
    #[error("kernel size {0} must be odd and positive")]
    EvenKernel(usize),
    #[error("kernel sigma {0} must be positive and finite")]
    BadSigma(f64),
}

pub type Result<T> = std::result::Result<T, GridError>;

#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    shape: Vec<usize>,
    data: Vec<f64>,
}

fn check_shape(shape: &[usize]) -> Result<usize> {
    if shape.is_empty() || shape.contains(&0) {
        return Err(GridError::BadShape(shape.to_vec()));
    }
    Ok(shape.iter().product())
}

fn first_non_finite(data: &[f64]) -> Option<usize> {
    data.iter().position(|v| !v.is_finite())
}

impl Grid {
    /// Builds a grid, validating the length against `shape` and rejecting
    /// NaN or infinite entries.
    pub fn new(shape: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        let expected = check_shape(&shape)?;
        if expected != data.len() {
            return Err(GridError::LengthMismatch {
                shape,
                expected,
                actual: data.len(),
            });
        }
        if let Some(i) = first_non_finite(&data) {
            return Err(GridError::NonFinite(i));
        }
        Ok(Self { shape, data })
    }

    /// A 1-D grid holding `data`.
    pub fn from_vec(data: Vec<f64>) -> Result<Self> {
        Self::new(vec![data.len()], data)
    }

    pub fn filled(shape: &[usize], value: f64) -> Result<Self> {
        let n = check_shape(shape)?;
        Self::new(shape.to_vec(), vec![value; n])
    }

    pub fn zeros(shape: &[usize]) -> Result<Self> {
        Self::filled(shape, 0.0)
    }

    /// Crate-internal constructor for data produced by operations that cannot
    /// break the length invariant.
    pub(crate) fn from_parts(shape: Vec<usize>, data: Vec<f64>) -> Self {
        debug_assert_eq!(shape.iter().product::<usize>(), data.len());
        Self { shape, data }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub(crate) fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn get(&self, index: usize) -> Option<f64> {
        self.data.get(index).copied()
    }

    /// `(rows, cols)` of a 2-D grid.
    pub fn dims2(&self) -> Result<(usize, usize)> {
        match self.shape.as_slice() {
            &[rows, cols] => Ok((rows, cols)),
            _ => Err(GridError::NotTwoDimensional(self.shape.clone())),
        }
    }

    pub fn same_shape(&self, other: &Grid) -> Result<()> {
        if self.shape != other.shape {
            return Err(GridError::ShapeMismatch {
                left: self.shape.clone(),
                right: other.shape.clone(),
            });
        }
        Ok(())
    }

    /// Same data under a different shape with equal element count.
    pub fn reshape(&self, shape: &[usize]) -> Result<Grid> {
        let n = check_shape(shape)?;
        if n != self.len() {
            return Err(GridError::LengthMismatch {
                shape: shape.to_vec(),
                expected: n,
                actual: self.len(),
            });
        }
        Ok(Grid::from_parts(shape.to_vec(), self.data.clone()))
    }

    fn zip_with(&self, other: &Grid, f: impl Fn(f64, f64) -> f64) -> Result<Grid> {
        self.same_shape(other)?;
        let data: Vec<f64> = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(&a, &b)| f(a, b))
            .collect();
        if let Some(i) = first_non_finite(&data) {
            return Err(GridError::NonFinite(i));
        }
        Ok(Grid::from_parts(self.shape.clone(), data))
    }

    pub fn add(&self, other: &Grid) -> Result<Grid> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Grid) -> Result<Grid> {
        self.zip_with(other, |a, b| a - b)
    }

    /// Hadamard product.
    pub fn mul(&self, other: &Grid) -> Result<Grid> {
        self.zip_with(other, |a, b| a * b)
    }

    pub fn scale(&self, factor: f64) -> Result<Grid> {
        let data: Vec<f64> = self.data.iter().map(|&v| v * factor).collect();
        if let Some(i) = first_non_finite(&data) {
            return Err(GridError::NonFinite(i));
        }
        Ok(Grid::from_parts(self.shape.clone(), data))
    }

    pub fn sum(&self) -> f64 {
        self.data.iter().sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Point on the straight line from `baseline` (`alpha = 0`) to
    /// `explicand` (`alpha = 1`). Both endpoints are reproduced exactly.
    pub fn interpolate(baseline: &Grid, explicand: &Grid, alpha: f64) -> Result<Grid> {
        if !(0.0..=1.0).contains(&alpha) {
            return Err(GridError::AlphaOutOfRange(alpha));
        }
        baseline.same_shape(explicand)?;
        let data = baseline
            .data
            .iter()
            .zip(&explicand.data)
            .map(|(&b, &x)| lerp(b, x, alpha))
            .collect();
        Ok(Grid::from_parts(baseline.shape.clone(), data))
    }

    /// Same-size 2-D convolution with zero padding outside the image.
    pub fn convolve_same(&self, kernel: &Kernel) -> Result<Grid> {
        let (rows, cols) = self.dims2()?;
        let size = kernel.size;
        let half = (size / 2) as isize;
        let w = kernel.weights.data();
        let mut out = vec![0.0; rows * cols];
        for r in 0..rows as isize {
            for c in 0..cols as isize {
                let mut acc = 0.0;
                for i in 0..size as isize {
                    // Flipped kernel: an impulse reproduces the kernel itself.
                    let src_r = r - (i - half);
                    if src_r < 0 || src_r >= rows as isize {
                        continue;
                    }
                    for j in 0..size as isize {
                        let src_c = c - (j - half);
                        if src_c < 0 || src_c >= cols as isize {
                            continue;
                        }
                        acc += w[(i as usize) * size + j as usize]
                            * self.data[(src_r as usize) * cols + src_c as usize];
                    }
                }
                out[(r as usize) * cols + c as usize] = acc;
            }
        }
        Ok(Grid::from_parts(self.shape.clone(), out))
    }

    /// Blur with a Gaussian kernel whose weights sum to one.
    pub fn gaussian_blur(&self, size: usize, sigma: f64) -> Result<Grid> {
        self.dims2()?;
        let kernel = Kernel::gaussian_unit_sum(size, sigma)?;
        self.convolve_same(&kernel)
    }
}

/// `b + alpha * (x - b)`, pinned to the endpoints at 0 and 1.
#[inline]
pub(crate) fn lerp(b: f64, x: f64, alpha: f64) -> f64 {
    if alpha == 1.0 {
        x
    } else {
        b + alpha * (x - b)
    }
}

/// Square Gaussian filter.
#[derive(Debug, Clone, PartialEq)]
pub struct Kernel {
    size: usize,
    sigma: f64,
    weights: Grid,
}

impl Kernel {
    fn sampled(size: usize, sigma: f64) -> Result<Vec<f64>> {
        if size == 0 || size.is_multiple_of(2) {
            return Err(GridError::EvenKernel(size));
        }
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(GridError::BadSigma(sigma));
        }
        let half = (size / 2) as isize;
        let denom = 2.0 * sigma * sigma;
        let mut w = Vec::with_capacity(size * size);
        for i in -half..=half {
            for j in -half..=half {
                w.push((-((i * i + j * j) as f64) / denom).exp());
            }
        }
        Ok(w)
    }

    /// Gaussian kernel scaled to unit Frobenius norm, used for mask
    /// smoothing so that i.i.d. noise keeps its per-pixel variance.
    pub fn gaussian(size: usize, sigma: f64) -> Result<Kernel> {
        let mut w = Self::sampled(size, sigma)?;
        let norm = w.iter().map(|v| v * v).sum::<f64>().sqrt();
        w.iter_mut().for_each(|v| *v /= norm);
        Ok(Kernel {
            size,
            sigma,
            weights: Grid::from_parts(vec![size, size], w),
        })
    }

    /// Gaussian kernel scaled so its weights sum to one (plain blur).
    pub fn gaussian_unit_sum(size: usize, sigma: f64) -> Result<Kernel> {
        let mut w = Self::sampled(size, sigma)?;
        let total: f64 = w.iter().sum();
        w.iter_mut().for_each(|v| *v /= total);
        Ok(Kernel {
            size,
            sigma,
            weights: Grid::from_parts(vec![size, size], w),
        })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn weights(&self) -> &Grid {
        &self.weights
    }
}
