//! Monte Carlo validation of designs: nominal and zero-alarm-attacked closed
//! loops with a chi-squared detector.
//!
//! Randomness comes from ChaCha8 seeded with the run seed; trajectory `i`
//! draws from stream `i`, so runs are reproducible regardless of thread
//! count.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::ReachableBound;
use crate::error::{Error, Result};
use crate::model::{
    build_stacked, residual_covariance, DetectorConfig, GainPair, LtiSystem, TruncationConfig,
};
use crate::numerics::{inverse, spectral_radius, sqrtm_psd};

/// Slack on the ellipsoid level before a step counts as a violation.
pub const CONTAINMENT_TOL: f64 = 1e-6;

/// Relative pull-in of attack residuals so rounding cannot lift `z` above
/// the threshold.
pub const BOUNDARY_GUARD: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub steps: usize,
    pub seed: u64,
    /// Rejection-sample noise inside its chi-squared ellipsoid.
    pub truncate_noise: bool,
    pub burn_in: usize,
}

impl SimConfig {
    pub fn new(steps: usize, seed: u64) -> Self {
        Self {
            steps,
            seed,
            truncate_noise: false,
            burn_in: 100,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.steps <= self.burn_in {
            return Err(Error::Argument(format!(
                "steps ({}) must exceed burn_in ({})",
                self.steps, self.burn_in
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AttackKind {
    None,
    ZeroAlarm,
}

/// How the attacker picks the direction of the residual it substitutes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PhiPolicy {
    /// A fixed unit vector.
    FixedDirection(Vec<f64>),
    /// Rotates in the first two coordinates by `rate` radians per step.
    Rotating { rate: f64 },
    /// Greedy heuristic: maximizes the predicted state norm two steps ahead,
    /// the first step at which the injection reaches the plant state.
    MaxGrowth,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttackStrategy {
    pub kind: AttackKind,
    pub policy: PhiPolicy,
    /// Fraction of the detector boundary `√α` used, in `(0, 1]`.
    pub scale: f64,
}

impl AttackStrategy {
    pub fn none() -> Self {
        Self {
            kind: AttackKind::None,
            policy: PhiPolicy::MaxGrowth,
            scale: 1.0,
        }
    }

    pub fn zero_alarm(policy: PhiPolicy, scale: f64) -> Self {
        Self {
            kind: AttackKind::ZeroAlarm,
            policy,
            scale,
        }
    }

    fn validate(&self, p: usize) -> Result<()> {
        if !(self.scale > 0.0 && self.scale <= 1.0) {
            return Err(Error::Argument(format!(
                "attack scale must lie in (0, 1], got {}",
                self.scale
            )));
        }
        match &self.policy {
            PhiPolicy::FixedDirection(d) => {
                if d.len() != p {
                    return Err(Error::dim("attack direction", p, d.len()));
                }
                let norm = d.iter().map(|v| v * v).sum::<f64>().sqrt();
                if (norm - 1.0).abs() > 1e-9 {
                    return Err(Error::Argument(format!(
                        "attack direction must be unit norm, got {norm}"
                    )));
                }
            }
            PhiPolicy::Rotating { rate } if !rate.is_finite() => {
                return Err(Error::Argument("rotation rate must be finite".into()));
            }
            _ => {}
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimTrace {
    pub x: Vec<DVector<f64>>,
    pub xhat: Vec<DVector<f64>>,
    pub e: Vec<DVector<f64>>,
    /// Residual seen by the detector.
    pub r: Vec<DVector<f64>>,
    pub z: Vec<f64>,
    /// Post-burn-in steps with `z > α`.
    pub alarms: Vec<usize>,
    /// Sensor injections `δ`; zero without attack.
    pub attack_inputs: Vec<DVector<f64>>,
    /// Steps whose state leaves the supplied ellipsoid.
    pub containment_violations: Vec<usize>,
    pub alpha: f64,
    pub burn_in: usize,
}

impl SimTrace {
    pub fn steps(&self) -> usize {
        self.z.len()
    }

    pub fn alarm_rate(&self) -> f64 {
        self.alarms.len() as f64 / (self.steps() - self.burn_in) as f64
    }

    pub fn max_z(&self) -> f64 {
        self.z.iter().copied().fold(0.0, f64::max)
    }

    pub fn mean_z(&self) -> f64 {
        let tail = &self.z[self.burn_in..];
        tail.iter().sum::<f64>() / tail.len() as f64
    }

    /// CSV with header `k,x1..,xhat1..,z,alarm`.
    pub fn to_csv(&self) -> String {
        let n = self.x.first().map_or(0, |v| v.len());
        let mut out = String::from("k");
        for i in 1..=n {
            out.push_str(&format!(",x{i}"));
        }
        for i in 1..=n {
            out.push_str(&format!(",xhat{i}"));
        }
        out.push_str(",z,alarm\n");
        for k in 0..self.steps() {
            out.push_str(&k.to_string());
            for v in self.x[k].iter().chain(self.xhat[k].iter()) {
                out.push_str(&format!(",{v}"));
            }
            let alarm = k >= self.burn_in && self.z[k] > self.alpha;
            out.push_str(&format!(",{},{}\n", self.z[k], u8::from(alarm)));
        }
        out
    }
}

/// Summary statistics of a trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimSummary {
    pub steps: usize,
    pub burn_in: usize,
    pub alarm_count: usize,
    pub alarm_rate: f64,
    pub mean_z: f64,
    pub max_z: f64,
    pub alpha: f64,
    pub containment_violations: usize,
}

impl From<&SimTrace> for SimSummary {
    fn from(t: &SimTrace) -> Self {
        Self {
            steps: t.steps(),
            burn_in: t.burn_in,
            alarm_count: t.alarms.len(),
            alarm_rate: t.alarm_rate(),
            mean_z: t.mean_z(),
            max_z: t.max_z(),
            alpha: t.alpha,
            containment_violations: t.containment_violations.len(),
        }
    }
}

/// Generator for trajectory `stream` of a run seeded with `seed`.
pub fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Gaussian sampler `L w` with `L Lᵀ = cov`, optionally restricted to
/// `wᵀw ≤ bound` (equivalently `vᵀ cov⁻¹ v ≤ bound`).
struct NoiseSampler {
    factor: DMatrix<f64>,
    bound: Option<f64>,
}

impl NoiseSampler {
    fn new(cov: &DMatrix<f64>, bound: Option<f64>, what: &str) -> Result<Self> {
        let chol = nalgebra::linalg::Cholesky::new(cov.clone())
            .ok_or_else(|| Error::NotPositiveDefinite(what.into()))?;
        Ok(Self {
            factor: chol.l(),
            bound,
        })
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> DVector<f64> {
        let d = self.factor.nrows();
        loop {
            let w = DVector::from_fn(d, |_, _| StandardNormal.sample(rng));
            if self.bound.is_none_or(|b| w.norm_squared() <= b) {
                return &self.factor * w;
            }
        }
    }
}

/// Maximizes `‖c + M d‖` over unit `d` by fixed-point ascent from the best of
/// the leading right singular vector and its negation.
fn max_growth_direction(c: &DVector<f64>, m: &DMatrix<f64>) -> DVector<f64> {
    let p = m.ncols();
    let svd = m.clone().svd(false, true);
    let mut d = match svd.v_t {
        Some(vt) => {
            let idx = svd
                .singular_values
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.total_cmp(b.1))
                .map_or(0, |(i, _)| i);
            vt.row(idx).transpose()
        }
        None => DVector::from_element(p, 1.0 / (p as f64).sqrt()),
    };
    if (c - m * &d).norm() > (c + m * &d).norm() {
        d = -d;
    }
    for _ in 0..50 {
        let g = m.transpose() * (c + m * &d);
        let norm = g.norm();
        if norm < 1e-300 {
            break;
        }
        d = g / norm;
    }
    d
}

/// Simulates the closed loop for `config.steps` steps from rest on stream 0.
pub fn simulate(
    sys: &LtiSystem,
    gains: &GainPair,
    detector: &DetectorConfig,
    strategy: &AttackStrategy,
    config: &SimConfig,
    bound: Option<&ReachableBound>,
) -> Result<SimTrace> {
    simulate_stream(sys, gains, detector, strategy, config, bound, 0)
}

fn simulate_stream(
    sys: &LtiSystem,
    gains: &GainPair,
    detector: &DetectorConfig,
    strategy: &AttackStrategy,
    config: &SimConfig,
    bound: Option<&ReachableBound>,
    stream: u64,
) -> Result<SimTrace> {
    config.validate()?;
    strategy.validate(sys.p())?;
    let st = build_stacked(sys, gains)?;
    let radius = spectral_radius(&st.a);
    if radius >= 1.0 {
        return Err(Error::Unstable {
            what: "closed loop".into(),
            radius,
        });
    }
    let (_, sigma) = residual_covariance(sys, &gains.l)?;
    let sigma_inv = inverse(&sigma, "residual covariance")?;
    let sigma_root = sqrtm_psd(&sigma);
    let q_inv = match bound {
        Some(b) => {
            if b.q_x.shape() != (sys.n(), sys.n()) {
                return Err(Error::dim("bound shape", sys.n(), b.q_x.nrows()));
            }
            Some(inverse(&b.q_x, "bound shape")?)
        }
        None => None,
    };
    let trunc = TruncationConfig::default_for(sys);
    let (nu_bound, eta_bound) = if config.truncate_noise {
        (Some(trunc.nu_bar), Some(trunc.eta_bar))
    } else {
        (None, None)
    };
    let process = NoiseSampler::new(sys.r1(), nu_bound, "R1")?;
    let sensor = NoiseSampler::new(sys.r2(), eta_bound, "R2")?;

    let (f, g, c) = (sys.f(), sys.g(), sys.c());
    let (k, l) = (&gains.k, &gains.l);
    let gk = g * k;
    let closed_estimator = f + &gk;
    let injection_gain = &gk * l;
    let amplitude = strategy.scale * detector.alpha.sqrt() * (1.0 - BOUNDARY_GUARD);
    let (n, p) = (sys.n(), sys.p());

    let mut rng = rng_for(config.seed, stream);
    let mut x = DVector::zeros(n);
    let mut xhat = DVector::zeros(n);
    let mut trace = SimTrace {
        x: Vec::with_capacity(config.steps),
        xhat: Vec::with_capacity(config.steps),
        e: Vec::with_capacity(config.steps),
        r: Vec::with_capacity(config.steps),
        z: Vec::with_capacity(config.steps),
        alarms: Vec::new(),
        attack_inputs: Vec::with_capacity(config.steps),
        containment_violations: Vec::new(),
        alpha: detector.alpha,
        burn_in: config.burn_in,
    };
    for step in 0..config.steps {
        let nu = process.sample(&mut rng);
        let eta = sensor.sample(&mut rng);
        let y = c * &x + eta;
        let innovation = &y - c * &xhat;
        let (residual, delta) = match strategy.kind {
            AttackKind::None => (innovation.clone(), DVector::zeros(p)),
            AttackKind::ZeroAlarm => {
                let direction = match &strategy.policy {
                    PhiPolicy::FixedDirection(d) => DVector::from_column_slice(d),
                    PhiPolicy::Rotating { rate } => {
                        let angle = rate * step as f64;
                        let mut d = DVector::zeros(p);
                        if p == 1 {
                            d[0] = if angle.cos() >= 0.0 { 1.0 } else { -1.0 };
                        } else {
                            d[0] = angle.cos();
                            d[1] = angle.sin();
                        }
                        d
                    }
                    PhiPolicy::MaxGrowth => {
                        let x_next = f * &x + &gk * &xhat;
                        let drift = f * &x_next + &gk * (&closed_estimator * &xhat);
                        max_growth_direction(&drift, &(&injection_gain * &sigma_root * amplitude))
                    }
                };
                let phi = &sigma_root * direction * amplitude;
                let delta = &phi - &innovation;
                (phi, delta)
            }
        };
        let z = residual.dot(&(&sigma_inv * &residual));
        if step >= config.burn_in && z > detector.alpha {
            trace.alarms.push(step);
        }
        if let Some(qi) = &q_inv {
            if x.dot(&(qi * &x)) > 1.0 + CONTAINMENT_TOL {
                trace.containment_violations.push(step);
            }
        }
        let u = k * &xhat;
        let x_next = f * &x + g * &u + nu;
        let xhat_next = f * &xhat + g * &u + l * &residual;
        trace.e.push(&x - &xhat);
        trace.x.push(std::mem::replace(&mut x, x_next));
        trace.xhat.push(std::mem::replace(&mut xhat, xhat_next));
        trace.r.push(residual);
        trace.z.push(z);
        trace.attack_inputs.push(delta);
    }
    Ok(trace)
}

/// Post-burn-in states visited under each policy; policy `i` uses stream `i`.
/// Attained states are an inner probe of the reachable set, not the set
/// itself.
pub fn empirical_reachable_cloud(
    sys: &LtiSystem,
    gains: &GainPair,
    detector: &DetectorConfig,
    policies: &[AttackStrategy],
    config: &SimConfig,
) -> Result<Vec<DVector<f64>>> {
    if policies.is_empty() {
        return Err(Error::Argument("at least one attack policy is required".into()));
    }
    let clouds: Vec<Vec<DVector<f64>>> = policies
        .par_iter()
        .enumerate()
        .map(|(i, s)| {
            simulate_stream(sys, gains, detector, s, config, None, i as u64)
                .map(|t| t.x[config.burn_in..].to_vec())
        })
        .collect::<Result<_>>()?;
    Ok(clouds.into_iter().flatten().collect())
}

/// CSV with header `x1,..,xn`.
pub fn cloud_csv(points: &[DVector<f64>]) -> String {
    let n = points.first().map_or(0, |p| p.len());
    let header: Vec<String> = (1..=n).map(|i| format!("x{i}")).collect();
    let mut out = header.join(",") + "\n";
    for p in points {
        let row: Vec<String> = p.iter().map(|v| v.to_string()).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::make_detector;

    fn setup() -> (LtiSystem, GainPair, DetectorConfig) {
        let sys = LtiSystem::case_study();
        let gains = GainPair::new(
            DMatrix::from_row_slice(2, 2, &[0.1273, -2.0544, -0.4303, 1.4190]),
            DMatrix::from_row_slice(2, 2, &[1.0085, -0.9780, -0.0139, 0.2664]),
        );
        (sys, gains, make_detector(0.05, 2).unwrap())
    }

    #[test]
    fn zero_alarm_never_alarms() {
        let (sys, gains, det) = setup();
        for policy in [
            PhiPolicy::FixedDirection(vec![0.6, 0.8]),
            PhiPolicy::Rotating { rate: 0.3 },
            PhiPolicy::MaxGrowth,
        ] {
            let t = simulate(
                &sys,
                &gains,
                &det,
                &AttackStrategy::zero_alarm(policy, 1.0),
                &SimConfig::new(2000, 7),
                None,
            )
            .unwrap();
            assert!(t.alarms.is_empty());
            assert!(t.max_z() <= det.alpha);
        }
    }

    #[test]
    fn error_dynamics_under_attack() {
        let (sys, gains, det) = setup();
        let strategy = AttackStrategy::zero_alarm(PhiPolicy::Rotating { rate: 0.1 }, 0.8);
        let t = simulate(&sys, &gains, &det, &strategy, &SimConfig::new(500, 3), None).unwrap();
        for k in 0..t.steps() - 1 {
            assert!((&t.e[k] - (&t.x[k] - &t.xhat[k])).amax() < 1e-12);
            let nu = &t.x[k + 1] - sys.f() * &t.x[k] - sys.g() * (&gains.k * &t.xhat[k]);
            let pred = sys.f() * &t.e[k] - &gains.l * &t.r[k] + nu;
            assert!((&t.e[k + 1] - pred).amax() < 1e-12);
        }
    }

    #[test]
    fn deterministic_given_seed() {
        let (sys, gains, det) = setup();
        let cfg = SimConfig::new(300, 11);
        let s = AttackStrategy::none();
        let a = simulate(&sys, &gains, &det, &s, &cfg, None).unwrap();
        let b = simulate(&sys, &gains, &det, &s, &cfg, None).unwrap();
        assert_eq!(a.z, b.z);
        let c = simulate(&sys, &gains, &det, &s, &SimConfig::new(300, 12), None).unwrap();
        assert_ne!(a.z, c.z);
    }

    #[test]
    fn truncated_noise_respects_bound() {
        let sys = LtiSystem::case_study();
        let trunc = TruncationConfig::default_for(&sys);
        let sampler = NoiseSampler::new(sys.r1(), Some(trunc.nu_bar), "R1").unwrap();
        let r1_inv = sys.r1().clone().try_inverse().unwrap();
        let mut rng = rng_for(5, 0);
        for _ in 0..2000 {
            let v = sampler.sample(&mut rng);
            assert!(v.dot(&(&r1_inv * &v)) <= trunc.nu_bar * (1.0 + 1e-9));
        }
    }

    #[test]
    fn invalid_policies_rejected() {
        let (sys, gains, det) = setup();
        let cfg = SimConfig::new(200, 1);
        let bad = [
            AttackStrategy::zero_alarm(PhiPolicy::FixedDirection(vec![1.0, 1.0]), 1.0),
            AttackStrategy::zero_alarm(PhiPolicy::FixedDirection(vec![1.0]), 1.0),
            AttackStrategy::zero_alarm(PhiPolicy::MaxGrowth, 1.5),
        ];
        for s in bad {
            assert!(simulate(&sys, &gains, &det, &s, &cfg, None).is_err());
        }
        assert!(simulate(
            &sys,
            &gains,
            &det,
            &AttackStrategy::none(),
            &SimConfig::new(50, 1),
            None
        )
        .is_err());
        assert!(empirical_reachable_cloud(&sys, &gains, &det, &[], &cfg).is_err());
    }

    #[test]
    fn growth_direction_maximizes() {
        let m = DMatrix::from_row_slice(2, 2, &[2.0, 0.5, -0.3, 1.0]);
        let c = DVector::from_vec(vec![0.4, -1.0]);
        let d = max_growth_direction(&c, &m);
        let best = (&c + &m * &d).norm();
        for i in 0..720 {
            let t = i as f64 * std::f64::consts::PI / 360.0;
            let e = DVector::from_vec(vec![t.cos(), t.sin()]);
            assert!((&c + &m * e).norm() <= best + 1e-9);
        }
    }
}
