//! Forecast skill of sigma-point ensembles on the Lorenz-63 system.
//!
//! Each trial perturbs a point on the attractor with Gaussian noise, spins
//! the large ensemble up for a few steps so it becomes non-Gaussian, then
//! summarizes it by HOUT and SUT ensembles. All three are integrated forward
//! and the quadrature moments are compared with those of the large ensemble.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::nongaussian::{rng_for, stream};
use crate::decomp::DecompOptions;
use crate::error::{Error, Result};
use crate::sigma::{
    empirical_moments, hout_transform, sut, weighted_moments, HoutOptions, MomentSet,
};
use crate::tensor::Vector;

/// Floor added before taking logarithms in the geometric mean.
pub const GEOMETRIC_FLOOR: f64 = 1e-16;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LorenzParams {
    pub sigma: f64,
    pub rho: f64,
    pub beta: f64,
}

impl Default for LorenzParams {
    fn default() -> Self {
        LorenzParams {
            sigma: 10.0,
            rho: 28.0,
            beta: 8.0 / 3.0,
        }
    }
}

impl LorenzParams {
    fn rhs(&self, s: [f64; 3]) -> [f64; 3] {
        let [x, y, z] = s;
        [
            self.sigma * (y - x),
            x * (self.rho - z) - y,
            x * y - self.beta * z,
        ]
    }

    /// The two nontrivial equilibria `(±√(β(ρ−1)), ±√(β(ρ−1)), ρ−1)`.
    pub fn equilibria(&self) -> [[f64; 3]; 2] {
        let r = (self.beta * (self.rho - 1.0)).sqrt();
        [[r, r, self.rho - 1.0], [-r, -r, self.rho - 1.0]]
    }
}

fn axpy3(a: [f64; 3], h: f64, b: [f64; 3]) -> [f64; 3] {
    [a[0] + h * b[0], a[1] + h * b[1], a[2] + h * b[2]]
}

/// One classical fourth-order Runge–Kutta step.
pub fn rk4_step(s: [f64; 3], dt: f64, p: &LorenzParams) -> [f64; 3] {
    let k1 = p.rhs(s);
    let k2 = p.rhs(axpy3(s, dt / 2.0, k1));
    let k3 = p.rhs(axpy3(s, dt / 2.0, k2));
    let k4 = p.rhs(axpy3(s, dt, k3));
    std::array::from_fn(|i| s[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
}

/// [`rk4_step`] on a length-3 vector.
pub fn lorenz_rk4_step(state: &Vector, dt: f64, p: &LorenzParams) -> Result<Vector> {
    if state.len() != 3 {
        return Err(Error::Shape(format!(
            "Lorenz state has length 3, got {}",
            state.len()
        )));
    }
    let s = rk4_step([state[0], state[1], state[2]], dt, p);
    Ok(Vector::from_row_slice(&s))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LorenzSpec {
    pub params: LorenzParams,
    pub dt: f64,
    /// Steps integrated before the moments are taken (N₁).
    pub spinup_steps: usize,
    /// Forecast steps after the moments are taken (N₂).
    pub forecast_steps: usize,
    pub trials: usize,
    /// Standard deviation of the isotropic initial perturbation.
    pub noise_scale: f64,
    pub ensemble_size: usize,
    pub seed: u64,
    /// HOUT tolerance.
    pub tau: f64,
    /// HOUT skew scale; `None` means `J^{−1/3}`.
    pub gamma: Option<f64>,
    pub sut_beta: f64,
    /// Steps from `(1,1,1)` before the attractor is sampled.
    pub burn_in_steps: usize,
    /// Trials start a uniform `1..=max_offset_steps` steps past the burn-in.
    pub max_offset_steps: usize,
}

impl Default for LorenzSpec {
    fn default() -> Self {
        LorenzSpec {
            params: LorenzParams::default(),
            dt: 0.1,
            spinup_steps: 5,
            forecast_steps: 15,
            trials: 50,
            noise_scale: 0.1,
            ensemble_size: 20_000,
            seed: 0,
            tau: 1e-5,
            gamma: None,
            sut_beta: 3f64.sqrt(),
            burn_in_steps: 1000,
            max_offset_steps: 5000,
        }
    }
}

impl LorenzSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) {
            return Err(Error::Parameter(format!(
                "dt must be positive, got {}",
                self.dt
            )));
        }
        if self.trials == 0 {
            return Err(Error::Parameter("trials must be at least 1".into()));
        }
        if self.ensemble_size < 10 {
            return Err(Error::Parameter("ensemble_size must be at least 10".into()));
        }
        if !(self.tau > 0.0) || !(self.sut_beta > 0.0) || !(self.noise_scale >= 0.0) {
            return Err(Error::Parameter(
                "tau and sut_beta must be positive and noise_scale nonnegative".into(),
            ));
        }
        if self.max_offset_steps == 0 {
            return Err(Error::Parameter(
                "max_offset_steps must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// Frobenius-norm errors of the four moments.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct MomentErrors {
    pub mean: f64,
    pub covariance: f64,
    pub skewness: f64,
    pub kurtosis: f64,
}

impl MomentErrors {
    pub fn between(est: &MomentSet, truth: &MomentSet) -> Result<Self> {
        Ok(MomentErrors {
            mean: (&est.mean - &truth.mean).norm(),
            covariance: est.covariance.sub(&truth.covariance)?.frobenius_norm(),
            skewness: est.skewness.sub(&truth.skewness)?.frobenius_norm(),
            kurtosis: est.kurtosis.sub(&truth.kurtosis)?.frobenius_norm(),
        })
    }

    pub fn as_array(&self) -> [f64; 4] {
        [self.mean, self.covariance, self.skewness, self.kurtosis]
    }

    fn from_array(a: [f64; 4]) -> Self {
        MomentErrors {
            mean: a[0],
            covariance: a[1],
            skewness: a[2],
            kurtosis: a[3],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepSkill {
    pub step: usize,
    pub time: f64,
    pub hout: MomentErrors,
    pub sut: MomentErrors,
}

/// Geometric-mean errors per forecast step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkillReport {
    pub steps: Vec<StepSkill>,
    pub trials_used: usize,
    pub trials_skipped: usize,
}

/// Per-step errors of one trial.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialErrors {
    pub hout: Vec<MomentErrors>,
    pub sut: Vec<MomentErrors>,
    pub hout_nodes: usize,
}

/// `exp(mean(ln(x + ε₀)))`.
pub fn geometric_mean(xs: impl IntoIterator<Item = f64>) -> f64 {
    let (sum, n) = xs.into_iter().fold((0.0, 0usize), |(s, n), x| {
        (s + (x + GEOMETRIC_FLOOR).ln(), n + 1)
    });
    if n == 0 {
        f64::NAN
    } else {
        (sum / n as f64).exp()
    }
}

fn to_vectors(states: &[[f64; 3]]) -> Vec<Vector> {
    states.iter().map(|s| Vector::from_row_slice(s)).collect()
}

fn advance(states: &mut [[f64; 3]], dt: f64, p: &LorenzParams) {
    for s in states.iter_mut() {
        *s = rk4_step(*s, dt, p);
    }
}

/// States visited after the burn-in, indexed by offset `1..=max_offset_steps`.
fn attractor_track(spec: &LorenzSpec) -> Vec<[f64; 3]> {
    let mut s = [1.0, 1.0, 1.0];
    for _ in 0..spec.burn_in_steps {
        s = rk4_step(s, spec.dt, &spec.params);
    }
    (0..spec.max_offset_steps)
        .map(|_| {
            s = rk4_step(s, spec.dt, &spec.params);
            s
        })
        .collect()
}

/// Runs one trial; errors come from building the HOUT or SUT ensembles.
pub fn forecast_trial(spec: &LorenzSpec, trial: usize) -> Result<TrialErrors> {
    let track = attractor_track(spec);
    run_trial(spec, &track, trial)
}

fn run_trial(spec: &LorenzSpec, track: &[[f64; 3]], trial: usize) -> Result<TrialErrors> {
    let p = &spec.params;
    let mut rng = rng_for(spec.seed, stream::TRIALS + trial as u64);
    let start = track[rng.random_range(0..track.len())];
    let mut ensemble: Vec<[f64; 3]> = (0..spec.ensemble_size)
        .map(|_| {
            std::array::from_fn(|i| {
                let z: f64 = StandardNormal.sample(&mut rng);
                start[i] + spec.noise_scale * z
            })
        })
        .collect();
    for _ in 0..spec.spinup_steps {
        advance(&mut ensemble, spec.dt, p);
    }

    let moments = empirical_moments(&to_vectors(&ensemble), None)?;
    let opts = HoutOptions {
        tau: spec.tau,
        gamma: spec.gamma,
        decomp: DecompOptions {
            seed: spec.seed ^ (trial as u64),
            ..Default::default()
        },
        ..Default::default()
    };
    let (hout_e, _) = hout_transform(&moments, &opts)?;
    let sut_e = sut(&moments.mean, &moments.covariance, spec.sut_beta)?;

    let as_arrays =
        |nodes: &[Vector]| -> Vec<[f64; 3]> { nodes.iter().map(|v| [v[0], v[1], v[2]]).collect() };
    let mut hout_nodes = as_arrays(&hout_e.nodes);
    let mut sut_nodes = as_arrays(&sut_e.nodes);

    let mut out = TrialErrors {
        hout: Vec::with_capacity(spec.forecast_steps + 1),
        sut: Vec::with_capacity(spec.forecast_steps + 1),
        hout_nodes: hout_nodes.len(),
    };
    for step in 0..=spec.forecast_steps {
        if step > 0 {
            advance(&mut ensemble, spec.dt, p);
            advance(&mut hout_nodes, spec.dt, p);
            advance(&mut sut_nodes, spec.dt, p);
        }
        let truth = empirical_moments(&to_vectors(&ensemble), None)?;
        let h = weighted_moments(&to_vectors(&hout_nodes), &hout_e.weights)?;
        let s = weighted_moments(&to_vectors(&sut_nodes), &sut_e.weights)?;
        out.hout.push(MomentErrors::between(&h, &truth)?);
        out.sut.push(MomentErrors::between(&s, &truth)?);
    }
    Ok(out)
}

/// Runs every trial (in parallel on the current rayon pool), merging in
/// trial order, and reports geometric-mean errors per forecast step.
/// Trials whose ensembles cannot be built are skipped and counted.
pub fn forecast_study(spec: &LorenzSpec) -> Result<SkillReport> {
    spec.validate()?;
    let track = attractor_track(spec);
    let results: Vec<Result<TrialErrors>> = (0..spec.trials)
        .into_par_iter()
        .map(|t| run_trial(spec, &track, t))
        .collect();

    let mut used = Vec::new();
    let mut skipped = 0;
    for r in results {
        match r {
            Ok(t) => used.push(t),
            Err(_) => skipped += 1,
        }
    }
    if used.is_empty() {
        return Err(Error::Degenerate("every forecast trial failed"));
    }

    let agg = |pick: &dyn Fn(&TrialErrors) -> &Vec<MomentErrors>, step: usize| {
        MomentErrors::from_array(std::array::from_fn(|m| {
            geometric_mean(used.iter().map(|t| pick(t)[step].as_array()[m]))
        }))
    };
    let steps = (0..=spec.forecast_steps)
        .map(|step| StepSkill {
            step,
            time: step as f64 * spec.dt,
            hout: agg(&|t| &t.hout, step),
            sut: agg(&|t| &t.sut, step),
        })
        .collect();
    Ok(SkillReport {
        steps,
        trials_used: used.len(),
        trials_skipped: skipped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn origin_is_fixed() {
        let p = LorenzParams::default();
        assert_eq!(rk4_step([0.0; 3], 0.1, &p), [0.0; 3]);
    }

    #[test]
    fn nontrivial_equilibria_are_fixed() {
        let p = LorenzParams::default();
        for e in p.equilibria() {
            let next = rk4_step(e, 0.1, &p);
            for i in 0..3 {
                assert!((next[i] - e[i]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn fourth_order_convergence() {
        // Global error at t = 0.5 against a dt/100 reference, halving dt.
        let p = LorenzParams::default();
        let s0 = [1.3, -2.1, 20.5];
        let t = 0.5;
        let run = |dt: f64| {
            let n = (t / dt).round() as usize;
            (0..n).fold(s0, |s, _| rk4_step(s, dt, &p))
        };
        let reference = run(0.05 / 100.0);
        let err = |dt: f64| {
            let s = run(dt);
            (0..3)
                .map(|i| (s[i] - reference[i]).powi(2))
                .sum::<f64>()
                .sqrt()
        };
        let ratio = err(0.05) / err(0.025);
        assert!((12.0..=20.0).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn vector_wrapper_checks_length() {
        let p = LorenzParams::default();
        assert!(lorenz_rk4_step(&Vector::zeros(2), 0.1, &p).is_err());
        let v = lorenz_rk4_step(&Vector::from_vec(vec![1.0, 1.0, 1.0]), 0.01, &p).unwrap();
        assert_eq!(v.as_slice(), &rk4_step([1.0; 3], 0.01, &p));
    }

    #[test]
    fn geometric_mean_of_constants() {
        assert!((geometric_mean([2.0, 2.0, 2.0]) - 2.0).abs() < 1e-12);
        assert!((geometric_mean([1.0, 100.0]) - 10.0).abs() < 1e-9);
        assert!(geometric_mean([0.0]) > 0.0);
    }

    #[test]
    fn zero_lead_time_matches_moments() {
        let spec = LorenzSpec {
            trials: 2,
            ensemble_size: 2000,
            forecast_steps: 0,
            ..Default::default()
        };
        let r = forecast_study(&spec).unwrap();
        assert_eq!(r.trials_used, 2);
        let h = r.steps[0].hout;
        for e in h.as_array() {
            assert!(e <= spec.tau + 1e-9, "{h:?}");
        }
    }
}
