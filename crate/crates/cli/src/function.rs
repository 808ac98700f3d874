use hout::experiments::{rk4_step, LorenzParams, PolySpec};
use hout::tensor::Vector;
use hout::{Error, Result};
use nalgebra::DMatrix;
use serde::Deserialize;

/// Function applied by `hout propagate`, read from JSON.
#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum FunctionSpec {
    Identity {},
    /// `y = M x + b`; `matrix` is a list of rows.
    Affine {
        matrix: Vec<Vec<f64>>,
        #[serde(default)]
        offset: Option<Vec<f64>>,
    },
    /// Scalar `a·x + c·(b·xⁿ)`.
    Poly {
        a: Vec<f64>,
        b: Vec<f64>,
        c: f64,
        n: u32,
    },
    /// `steps` RK4 steps of Lorenz-63.
    Lorenz {
        dt: f64,
        steps: usize,
        #[serde(default)]
        params: Option<LorenzParams>,
    },
}

pub type BoxedFn = Box<dyn Fn(&Vector) -> Vector + Sync + Send>;

impl FunctionSpec {
    pub fn build(self, dim: usize) -> Result<BoxedFn> {
        match self {
            FunctionSpec::Identity {} => Ok(Box::new(|x: &Vector| x.clone())),
            FunctionSpec::Affine { matrix, offset } => {
                let rows = matrix.len();
                if rows == 0 || matrix.iter().any(|r| r.len() != dim) {
                    return Err(Error::Shape(format!(
                        "affine matrix must have at least one row of length {dim}"
                    )));
                }
                let flat: Vec<f64> = matrix.into_iter().flatten().collect();
                let m = DMatrix::from_row_slice(rows, dim, &flat);
                let b = match offset {
                    Some(b) if b.len() != rows => {
                        return Err(Error::Shape(format!(
                            "offset has length {} for {rows} rows",
                            b.len()
                        )))
                    }
                    Some(b) => Vector::from_vec(b),
                    None => Vector::zeros(rows),
                };
                Ok(Box::new(move |x: &Vector| &m * x + &b))
            }
            FunctionSpec::Poly { a, b, c, n } => {
                let spec = PolySpec {
                    a: Vector::from_vec(a),
                    b: Vector::from_vec(b),
                    n,
                };
                spec.validate()?;
                if spec.a.len() != dim {
                    return Err(Error::Shape(format!(
                        "polynomial of dimension {} for inputs of dimension {dim}",
                        spec.a.len()
                    )));
                }
                Ok(Box::new(move |x: &Vector| {
                    Vector::from_element(1, hout::experiments::poly_f(&spec, c)(x))
                }))
            }
            FunctionSpec::Lorenz { dt, steps, params } => {
                if dim != 3 {
                    return Err(Error::Shape(format!(
                        "Lorenz inputs have dimension 3, got {dim}"
                    )));
                }
                if !(dt > 0.0) {
                    return Err(Error::Parameter(format!("dt must be positive, got {dt}")));
                }
                let p = params.unwrap_or_default();
                Ok(Box::new(move |x: &Vector| {
                    let s = (0..steps).fold([x[0], x[1], x[2]], |s, _| rk4_step(s, dt, &p));
                    Vector::from_row_slice(&s)
                }))
            }
        }
    }
}
