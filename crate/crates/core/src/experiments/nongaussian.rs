use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::tensor::Vector;

/// Stream ids used with [`ChaCha8Rng::set_stream`] so that every random
/// quantity of a study is drawn from its own reproducible sequence.
pub(crate) mod stream {
    pub const MATRICES: u64 = 1;
    pub const SAMPLES: u64 = 2;
    pub const COEFFICIENTS: u64 = 3;
    pub const TRIALS: u64 = 1 << 32;
}

pub(crate) fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

pub(crate) fn normal_matrix(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    // Row-major fill so the draw order matches how the matrix is printed.
    let vals: Vec<f64> = (0..rows * cols)
        .map(|_| StandardNormal.sample(rng))
        .collect();
    DMatrix::from_row_slice(rows, cols, &vals)
}

/// Distribution of `X = A Z + B (sign(Z) ⊙ Z ⊙ Z)` with `Z ~ N(0, I)`.
#[derive(Debug, Clone, PartialEq)]
pub struct NonGaussianSpec {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub ensemble_size: usize,
    pub seed: u64,
}

impl NonGaussianSpec {
    /// `A` and `B` with i.i.d. standard normal entries drawn from `seed`.
    pub fn random(dim: usize, ensemble_size: usize, seed: u64) -> Self {
        let mut rng = rng_for(seed, stream::MATRICES);
        let a = normal_matrix(dim, dim, &mut rng);
        let b = normal_matrix(dim, dim, &mut rng);
        NonGaussianSpec {
            a,
            b,
            ensemble_size,
            seed,
        }
    }

    pub fn dim(&self) -> usize {
        self.a.nrows()
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.a.nrows();
        if d == 0 || self.a.shape() != (d, d) || self.b.shape() != (d, d) {
            return Err(Error::Shape(format!(
                "A is {:?} and B is {:?}; both must be square of the same size",
                self.a.shape(),
                self.b.shape()
            )));
        }
        if self.a.iter().chain(self.b.iter()).any(|x| !x.is_finite()) {
            return Err(Error::InvalidInput("A and B must be finite".into()));
        }
        if self.ensemble_size < 10 {
            return Err(Error::InvalidInput(format!(
                "ensemble_size must be at least 10, got {}",
                self.ensemble_size
            )));
        }
        Ok(())
    }
}

/// Draws `ensemble_size` samples of `A z + B (sign(z) z²)`.
pub fn sample_nongaussian(spec: &NonGaussianSpec) -> Result<Vec<Vector>> {
    spec.validate()?;
    let d = spec.dim();
    let mut rng = rng_for(spec.seed, stream::SAMPLES);
    Ok((0..spec.ensemble_size)
        .map(|_| {
            let z = Vector::from_fn(d, |_, _| StandardNormal.sample(&mut rng));
            let sq = z.map(|x: f64| x.signum() * x * x);
            &spec.a * z + &spec.b * sq
        })
        .collect())
}
