//! Property checks shared by the `properties` and `acceptance` targets.

#![allow(dead_code)]

use hout::decomp::{approx_rank1_decompose, hopm, DecompOptions, HopmOptions};
use hout::experiments::{rk4_step, sample_nongaussian, LorenzParams, NonGaussianSpec};
use hout::sigma::{empirical_moments, hout_transform, sut, HoutOptions};
use hout::tensor::{ModeProduct, SymTensor, Vector};
use proptest::prelude::*;
use proptest::test_runner::{Config, RngAlgorithm, TestCaseError, TestRng, TestRunner};

pub const CASES: u32 = 100;

pub fn config() -> Config {
    Config {
        cases: CASES,
        failure_persistence: None,
        ..Config::default()
    }
}

/// `(order, dim, raw entries)` with entries in `[−1, 1]`.
pub fn raw_tensor(max_dim: usize) -> impl Strategy<Value = (usize, usize, Vec<f64>)> {
    (2usize..=4, 1usize..=max_dim).prop_flat_map(|(k, d)| {
        (
            Just(k),
            Just(d),
            prop::collection::vec(-1.0f64..1.0, d.pow(k as u32)),
        )
    })
}

pub fn sym_tensor(max_dim: usize) -> impl Strategy<Value = SymTensor> {
    raw_tensor(max_dim).prop_map(|(k, d, raw)| SymTensor::symmetrize(k, d, &raw).unwrap())
}

pub fn unit_vector(d: usize) -> impl Strategy<Value = Vector> {
    prop::collection::vec(-1.0f64..1.0, d)
        .prop_filter("nonzero", |v| v.iter().map(|x| x * x).sum::<f64>() > 1e-6)
        .prop_map(|v| {
            let v = Vector::from_vec(v);
            let n = v.norm();
            v / n
        })
}

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), TestCaseError> {
    if cond {
        Ok(())
    } else {
        Err(TestCaseError::fail(msg()))
    }
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
}

/// `‖v^{⊗k}‖_F = ‖v‖^k`.
pub fn tensor_power_norm() -> Result<(), String> {
    let strat = (2usize..=4, prop::collection::vec(-3.0f64..3.0, 1..=5));
    run(strat, |(k, v)| {
        let v = Vector::from_vec(v);
        let t = SymTensor::tensor_power(&v, k).unwrap();
        let expected = v.norm().powi(k as i32);
        check(close(t.frobenius_norm(), expected, 1e-12), || {
            format!("{} vs {expected}", t.frobenius_norm())
        })
    })
}

/// Symmetrized tensors are symmetric and their mode products agree across
/// modes.
pub fn symmetry() -> Result<(), String> {
    let strat = sym_tensor(4).prop_flat_map(|t| {
        let d = t.dim();
        (Just(t), unit_vector(d))
    });
    run(strat, |(t, v)| {
        check(
            t.symmetry_deviation() <= 1e-12 * t.frobenius_norm().max(1.0),
            || "symmetrized tensor is not symmetric".into(),
        )?;
        let first = t.n_mode_product(&v, 1).unwrap();
        for mode in 2..=t.order() {
            let other = t.n_mode_product(&v, mode).unwrap();
            let diff = match (&first, other) {
                (ModeProduct::Vector(x), ModeProduct::Vector(y)) => (x - y).norm(),
                (ModeProduct::Tensor(x), ModeProduct::Tensor(y)) => {
                    x.sub(&y).unwrap().frobenius_norm()
                }
                _ => f64::INFINITY,
            };
            check(diff <= 1e-12 * (1.0 + t.frobenius_norm()), || {
                format!("mode 1 and mode {mode} products differ by {diff}")
            })?;
        }
        Ok(())
    })
}

/// `refold(unfold(T)) = T` exactly.
pub fn unfold_round_trip() -> Result<(), String> {
    run(sym_tensor(4), |t| {
        let m = t.unfold();
        check(m.nrows() == t.dim(), || "row count".into())?;
        let back = SymTensor::refold(t.order(), &m).unwrap();
        check(back == t, || "refold(unfold(T)) != T".into())
    })
}

/// Converged power iterations satisfy the eigen-equation and `|λ| ≤ ‖T‖_F`.
pub fn hopm_residual() -> Result<(), String> {
    let strat = sym_tensor(3).prop_filter("nonzero", |t| t.frobenius_norm() > 1e-3);
    run(strat, |t| {
        let p = hopm(&t, &HopmOptions::default()).unwrap();
        check((p.vector.norm() - 1.0).abs() < 1e-12, || {
            "eigenvector not unit".into()
        })?;
        check(
            p.eigenvalue.abs() <= t.frobenius_norm() * (1.0 + 1e-12),
            || {
                format!(
                    "|λ| = {} exceeds ‖T‖ = {}",
                    p.eigenvalue.abs(),
                    t.frobenius_norm()
                )
            },
        )?;
        if p.converged {
            let r = p.residual(&t);
            check(r <= 1e-10 * p.eigenvalue.abs().max(1.0), || {
                format!("residual {r}")
            })?;
        }
        Ok(())
    })
}

/// `‖T − λv^{⊗k}‖² = ‖T‖² − λ²` for unit `v` and `λ = T(v, …, v)`.
pub fn subtraction_identity() -> Result<(), String> {
    let strat = sym_tensor(4).prop_flat_map(|t| {
        let d = t.dim();
        (Just(t), unit_vector(d))
    });
    run(strat, |(t, v)| {
        let lambda = t.form(&v);
        let mut r = t.clone();
        r.add_scaled_power(-lambda, &v).unwrap();
        let lhs = r.frobenius_norm().powi(2);
        let rhs = t.frobenius_norm().powi(2) - lambda * lambda;
        check(
            (lhs - rhs).abs() <= 1e-12 * (1.0 + t.frobenius_norm().powi(2)),
            || format!("{lhs} vs {rhs}"),
        )
    })
}

/// Greedy decomposition: strictly decreasing residuals down to the
/// tolerance, and the terms reconstruct the tensor.
pub fn decomposition_decay() -> Result<(), String> {
    let strat = (3usize..=4, prop::collection::vec(-1.0f64..1.0, 16))
        .prop_map(|(k, raw)| SymTensor::symmetrize(k, 2, &raw[..2usize.pow(k as u32)]).unwrap());
    run(strat, |t| {
        let tol = 1e-9;
        let d = approx_rank1_decompose(&t, &DecompOptions::with_tol(tol)).unwrap();
        check(d.residual() <= tol, || format!("residual {}", d.residual()))?;
        check(d.residual_norms.windows(2).all(|w| w[1] < w[0]), || {
            "residual norms not strictly decreasing".into()
        })?;
        let err = d.reconstruct().sub(&t).unwrap().frobenius_norm();
        check(
            (err - d.residual()).abs() <= 1e-12 * (1.0 + t.frobenius_norm()),
            || format!("reconstruction error {err} vs residual {}", d.residual()),
        )
    })
}

fn sampled_moments(d: usize, seed: u64) -> hout::sigma::MomentSet {
    let spec = NonGaussianSpec::random(d, 400, seed);
    empirical_moments(&sample_nongaussian(&spec).unwrap(), None).unwrap()
}

/// SUT and HOUT weights sum to one; the SUT matches mean and covariance.
pub fn weight_sums() -> Result<(), String> {
    let strat = (1usize..=3, any::<u64>(), 0.3f64..3.0);
    run(strat, |(d, seed, beta)| {
        let m = sampled_moments(d, seed);
        let s = sut(&m.mean, &m.covariance, beta).unwrap();
        check((s.weight_sum() - 1.0).abs() <= 1e-12, || {
            format!("SUT sum {}", s.weight_sum())
        })?;
        let sm = s.moments().unwrap();
        let scale = m.covariance.frobenius_norm();
        check(
            sm.covariance.sub(&m.covariance).unwrap().frobenius_norm() <= 1e-10 * scale,
            || "SUT covariance mismatch".into(),
        )?;
        let (h, _) = hout_transform(&m, &HoutOptions::with_tau(1e-4)).unwrap();
        // Σw = 1 holds up to one rounding of the largest weight.
        let scale = h.weights.iter().fold(1.0f64, |m, w| m.max(w.abs()));
        check((h.weight_sum() - 1.0).abs() <= 1e-12 * scale, || {
            format!("HOUT sum {} with largest weight {scale}", h.weight_sum())
        })
    })
}

/// Fourth-order convergence of the Lorenz RK4 step under halving.
pub fn rk4_order() -> Result<(), String> {
    let strat = (-15.0f64..15.0, -15.0f64..15.0, 5.0f64..40.0);
    run(strat, |(x, y, z)| {
        let p = LorenzParams::default();
        let t_end = 0.1;
        let integrate = |dt: f64| {
            let n = (t_end / dt).round() as usize;
            (0..n).fold([x, y, z], |s, _| rk4_step(s, dt, &p))
        };
        let reference = integrate(0.005 / 100.0);
        let err = |dt: f64| {
            let s = integrate(dt);
            (0..3)
                .map(|i| (s[i] - reference[i]).powi(2))
                .sum::<f64>()
                .sqrt()
        };
        let ratio = err(0.005) / err(0.0025);
        check((12.0..=20.0).contains(&ratio), || format!("ratio {ratio}"))
    })
}

/// Seeded pipelines are bit-reproducible.
pub fn determinism() -> Result<(), String> {
    let strat = (1usize..=2, any::<u64>());
    run(strat, |(d, seed)| {
        let a = sampled_moments(d, seed);
        let b = sampled_moments(d, seed);
        check(a == b, || "moments differ".into())?;
        let opts = HoutOptions::with_tau(1e-4);
        let (ea, _) = hout_transform(&a, &opts).unwrap();
        let (eb, _) = hout_transform(&b, &opts).unwrap();
        check(ea == eb, || "ensembles differ".into())
    })
}

/// Tensors survive a JSON round trip unchanged.
pub fn json_round_trip() -> Result<(), String> {
    run(sym_tensor(3), |t| {
        let s = serde_json::to_string(&t).unwrap();
        let back: SymTensor = serde_json::from_str(&s).unwrap();
        check(back == t, || "JSON round trip changed the tensor".into())
    })
}

fn run<S: Strategy>(
    strat: S,
    test: impl Fn(S::Value) -> Result<(), TestCaseError>,
) -> Result<(), String> {
    let rng = TestRng::deterministic_rng(RngAlgorithm::ChaCha);
    let mut runner = TestRunner::new_with_rng(config(), rng);
    runner.run(&strat, test).map_err(|e| e.to_string())
}

pub type Suite = fn() -> Result<(), String>;

/// Every suite, by name.
pub fn suites() -> Vec<(&'static str, Suite)> {
    vec![
        ("tensor power norm", tensor_power_norm),
        ("symmetry", symmetry),
        ("unfold round trip", unfold_round_trip),
        ("eigen-residual", hopm_residual),
        ("subtraction identity", subtraction_identity),
        ("decomposition decay", decomposition_decay),
        ("weight sums", weight_sums),
        ("RK4 order", rk4_order),
        ("determinism", determinism),
        ("JSON round trip", json_round_trip),
    ]
}
