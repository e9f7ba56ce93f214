//! Stochastic integration of the full positive-P equations.
//!
//! Only the four fundamental equations carry noise, `sqrt(kappa beta) eta`
//! with real white noises `eta`. The harmonic equations are noiseless, so the
//! Ito and Stratonovich readings coincide.
//!
//! Trajectory `i` draws its noise from a ChaCha8 generator seeded with the
//! master seed and switched to stream `i`. Every trajectory is therefore
//! reproducible on its own, and [`SdeRunner::reduce`] folds outcomes in index
//! order, so any parallel schedule gives bit-identical statistics.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;
// libm-backed float methods when std is absent.
#[allow(unused_imports)]
use num_traits::Float;
use rand_chacha::ChaCha8Rng;
use rand_core::SeedableRng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::linalg::{self, Vec8};
use crate::linearized::{classify_stability, default_self_pulsing_tol, linearize_at_steady_state};
use crate::model::{drift, ModelParams, PhaseSpaceState};
use crate::spectra::QuadratureProbe;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    /// Midpoint rule solved by three fixed-point iterations.
    SemiImplicitMidpoint,
    ExplicitEulerMaruyama,
}

/// A quadrature combination to monitor, optionally with its output spectrum
/// at the listed frequencies.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbeRequest {
    pub name: String,
    pub probe: QuadratureProbe,
    pub omegas: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SdeConfig {
    pub dt: f64,
    pub t_transient: f64,
    pub t_sample: f64,
    pub n_traj: usize,
    pub seed: u64,
    pub scheme: Scheme,
    /// Time between recorded samples; rounded to a whole number of steps.
    pub sample_interval: f64,
    /// Samples per spectral window (Hann, 50% overlap).
    pub window: usize,
    pub probes: Vec<ProbeRequest>,
}

/// Amplitude beyond which a trajectory counts as diverged.
pub const DIVERGENCE_BOUND: f64 = 1e6;
/// Largest tolerated fraction of diverged trajectories.
pub const MAX_DIVERGED_FRACTION: f64 = 0.01;
/// Fewest spectral windows per trajectory.
pub const MIN_WINDOWS: usize = 8;

const FIXED_POINT_ITERATIONS: usize = 3;

impl SdeConfig {
    /// Defaults: `dt = 1e-3`, transient `20 / min(gamma)`, 10 000 trajectories,
    /// samples every 0.01 in windows of 25.6.
    ///
    /// Point sampling folds the `1/omega^2` tail of the spectrum back into
    /// the band, biasing every estimate by roughly `sample_interval^2`; at
    /// 0.05 the shift is already a few 1e-3.
    pub fn new(p: &ModelParams) -> Self {
        Self {
            dt: 1e-3,
            t_transient: 20.0 / p.gamma_a.min(p.gamma_b),
            t_sample: 200.0,
            n_traj: 10_000,
            seed: 0,
            scheme: Scheme::SemiImplicitMidpoint,
            sample_interval: 0.01,
            window: 2560,
            probes: Vec::new(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return bad(format!("dt must be positive, got {}", self.dt));
        }
        if !(self.t_sample > 0.0 && self.t_sample.is_finite()) {
            return bad(format!("t_sample must be positive, got {}", self.t_sample));
        }
        if !(self.t_transient >= 0.0 && self.t_transient.is_finite()) {
            return bad(format!("t_transient must be non-negative, got {}", self.t_transient));
        }
        if self.n_traj < 2 {
            return bad(format!("n_traj must be at least 2, got {}", self.n_traj));
        }
        if !(self.sample_interval >= self.dt * (1.0 - 1e-9)) || !self.sample_interval.is_finite() {
            return bad(format!("sample_interval {} is shorter than dt {}", self.sample_interval, self.dt));
        }
        if self.n_samples() == 0 {
            return bad("t_sample is shorter than one sample interval".into());
        }
        if self.window < 16 || self.window % 2 != 0 {
            return bad(format!("window must be an even number of samples >= 16, got {}", self.window));
        }
        for r in &self.probes {
            if r.omegas.iter().any(|w| !w.is_finite()) {
                return bad(format!("probe `{}` has non-finite frequencies", r.name));
            }
        }
        Ok(())
    }

    pub fn steps_per_sample(&self) -> usize {
        ((self.sample_interval / self.dt).round() as usize).max(1)
    }

    /// Actual sample spacing after rounding to whole steps.
    pub fn sample_spacing(&self) -> f64 {
        self.steps_per_sample() as f64 * self.dt
    }

    pub fn transient_steps(&self) -> usize {
        (self.t_transient / self.dt).round() as usize
    }

    pub fn n_samples(&self) -> usize {
        (self.t_sample / self.sample_spacing() + 1e-9).floor() as usize
    }

    pub fn total_steps(&self) -> usize {
        self.transient_steps() + self.n_samples() * self.steps_per_sample()
    }

    /// Windows per trajectory at 50% overlap.
    pub fn n_windows(&self) -> usize {
        let n = self.n_samples();
        if n < self.window {
            0
        } else {
            (n - self.window) / (self.window / 2) + 1
        }
    }
}

/// Per-probe accumulators of one trajectory. Sums are of `q - r`, with `r`
/// the probe value at the classical steady state.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbeAccumulator {
    pub sum: Complex64,
    pub sum_sq: Complex64,
    /// Per frequency: sum over windows of `Q(w) Q(-w)`.
    pub cross: Vec<Complex64>,
    /// Per frequency: sum over windows of `Q(w) H(-w) + H(w) Q(-w)`, with `H`
    /// the transform of the window itself.
    pub mixed: Vec<Complex64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryOutcome {
    pub index: usize,
    pub diverged: bool,
    /// Time average over the sampling window.
    pub mean: [Complex64; 8],
    pub probes: Vec<ProbeAccumulator>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EqualTimeMoment {
    /// Real part of the normally ordered equal-time variance of the probe.
    pub value: f64,
    pub std_error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampledSpectrum {
    pub name: String,
    pub omegas: Vec<f64>,
    /// Output spectral variance, vacuum level as for the probe.
    pub values: Vec<f64>,
    pub std_errors: Vec<f64>,
    pub n_windows: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanEstimate {
    pub value: Complex64,
    pub std_error_re: f64,
    pub std_error_im: f64,
}

impl MeanEstimate {
    /// Standard error of the complex mean, `sqrt(se_re^2 + se_im^2)`.
    pub fn std_error(&self) -> f64 {
        self.std_error_re.hypot(self.std_error_im)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleStats {
    pub mean_state: PhaseSpaceState,
    /// Standard errors of the real (in `re`) and imaginary (in `im`) parts.
    pub mean_std_error: PhaseSpaceState,
    /// One per configured probe, in order.
    pub equal_time: Vec<EqualTimeMoment>,
    /// One per probe that requested frequencies, in order.
    pub spectra: Vec<SampledSpectrum>,
    pub n_used: usize,
    pub n_diverged: usize,
    pub warnings: Vec<String>,
    trajectory_means: Vec<[Complex64; 8]>,
}

impl EnsembleStats {
    pub fn spectrum(&self, name: &str) -> Option<&SampledSpectrum> {
        self.spectra.iter().find(|s| s.name == name)
    }

    /// Ensemble mean of `w . x` with standard errors from the spread of
    /// per-trajectory time averages.
    pub fn mean_estimate(&self, w: &Vec8) -> MeanEstimate {
        let vals: Vec<Complex64> =
            self.trajectory_means.iter().map(|m| m.iter().zip(w.iter()).map(|(x, c)| x * c).sum()).collect();
        let (value, std_error_re, std_error_im) = complex_mean_se(&vals);
        MeanEstimate { value, std_error_re, std_error_im }
    }
}

/// Compensated summation.
#[derive(Debug, Clone, Copy, Default)]
struct Neumaier {
    sum: f64,
    comp: f64,
}

impl Neumaier {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn total(&self) -> f64 {
        self.sum + self.comp
    }
}

fn mean_se(vals: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let mut acc = Neumaier::default();
    let mut n = 0usize;
    for v in vals.clone() {
        acc.add(v);
        n += 1;
    }
    let mean = acc.total() / n as f64;
    let mut sq = Neumaier::default();
    for v in vals {
        sq.add((v - mean) * (v - mean));
    }
    let var = if n > 1 { sq.total() / (n - 1) as f64 } else { 0.0 };
    (mean, (var / n as f64).sqrt())
}

fn complex_mean_se(vals: &[Complex64]) -> (Complex64, f64, f64) {
    let (re, se_re) = mean_se(vals.iter().map(|z| z.re));
    let (im, se_im) = mean_se(vals.iter().map(|z| z.im));
    (Complex64::new(re, im), se_re, se_im)
}

/// Precomputed per-probe data.
#[derive(Debug, Clone)]
struct ProbePlan {
    weights: [Complex64; 8],
    reference: Complex64,
    /// `exp(-i w n ds)` per frequency, row-major `[freq][n]`.
    twiddles: Vec<Complex64>,
    /// Window transform `H(w)` per frequency.
    window_transform: Vec<Complex64>,
}

/// A prepared ensemble run.
#[derive(Debug, Clone)]
pub struct SdeRunner {
    params: ModelParams,
    cfg: SdeConfig,
    hann: Vec<f64>,
    hann_power: f64,
    plans: Vec<ProbePlan>,
    warnings: Vec<String>,
}

impl SdeRunner {
    pub fn new(p: &ModelParams, cfg: &SdeConfig) -> Result<Self> {
        p.validate()?;
        cfg.validate()?;
        let wants_spectra = cfg.probes.iter().any(|r| !r.omegas.is_empty());
        if wants_spectra && cfg.n_windows() < MIN_WINDOWS {
            return Err(Error::InsufficientData { windows: cfg.n_windows(), required: MIN_WINDOWS });
        }
        let warnings = preflight(p, cfg);
        let reference_state = linearize_at_steady_state(p).map(|(ss, _)| ss).unwrap_or_default();
        let x_ref = reference_state.to_array();

        let m = cfg.window;
        let hann: Vec<f64> = (0..m).map(|n| 0.5 * (1.0 - (2.0 * PI * n as f64 / m as f64).cos())).collect();
        let hann_power = hann.iter().map(|h| h * h).sum();
        let ds = cfg.sample_spacing();
        let plans = cfg
            .probes
            .iter()
            .map(|r| {
                let mut weights = [Complex64::new(0.0, 0.0); 8];
                weights.iter_mut().zip(r.probe.weights.iter()).for_each(|(o, w)| *o = *w);
                let reference = weights.iter().zip(x_ref.iter()).map(|(w, x)| w * x).sum();
                let mut twiddles = Vec::with_capacity(r.omegas.len() * m);
                let mut window_transform = Vec::with_capacity(r.omegas.len());
                for &w in &r.omegas {
                    let mut h = Complex64::new(0.0, 0.0);
                    for (n, hn) in hann.iter().enumerate() {
                        let t = Complex64::from_polar(1.0, -w * ds * n as f64);
                        twiddles.push(t);
                        h += t * hn;
                    }
                    window_transform.push(h);
                }
                ProbePlan { weights, reference, twiddles, window_transform }
            })
            .collect();
        Ok(Self { params: *p, cfg: cfg.clone(), hann, hann_power, plans, warnings })
    }

    pub fn config(&self) -> &SdeConfig {
        &self.cfg
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    fn noise_amplitudes(&self, x: &[Complex64; 8]) -> [Complex64; 4] {
        let k = self.params.kappa;
        [
            linalg::principal_sqrt(k * x[4]),
            linalg::principal_sqrt(k * x[5]),
            linalg::principal_sqrt(k * x[6]),
            linalg::principal_sqrt(k * x[7]),
        ]
    }

    fn increment(&self, x: &[Complex64; 8], dw: &[f64; 4]) -> [Complex64; 8] {
        let f = drift(&self.params, &PhaseSpaceState::from_array(*x)).to_array();
        let g = self.noise_amplitudes(x);
        let dt = self.cfg.dt;
        let mut out = [Complex64::new(0.0, 0.0); 8];
        for i in 0..8 {
            out[i] = f[i] * dt;
        }
        for i in 0..4 {
            out[i] += g[i] * dw[i];
        }
        out
    }

    fn step(&self, x: &mut [Complex64; 8], dw: &[f64; 4]) {
        match self.cfg.scheme {
            Scheme::ExplicitEulerMaruyama => {
                let d = self.increment(x, dw);
                for i in 0..8 {
                    x[i] += d[i];
                }
            }
            Scheme::SemiImplicitMidpoint => {
                let mut mid = *x;
                for _ in 0..FIXED_POINT_ITERATIONS {
                    let d = self.increment(&mid, dw);
                    for i in 0..8 {
                        mid[i] = x[i] + 0.5 * d[i];
                    }
                }
                for i in 0..8 {
                    x[i] = 2.0 * mid[i] - x[i];
                }
            }
        }
    }

    /// Integrates trajectory `index` from the vacuum. The observer, if any,
    /// sees every state from the initial one onwards.
    pub fn run_trajectory(
        &self,
        index: usize,
        mut observer: Option<&mut dyn FnMut(usize, &[Complex64; 8])>,
    ) -> TrajectoryOutcome {
        let cfg = &self.cfg;
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(index as u64);
        let sqrt_dt = cfg.dt.sqrt();
        let mut x = [Complex64::new(0.0, 0.0); 8];
        let n_samples = cfg.n_samples();
        let per_sample = cfg.steps_per_sample();
        let transient = cfg.transient_steps();
        let mut series: Vec<Vec<Complex64>> = self
            .plans
            .iter()
            .map(|p| if p.window_transform.is_empty() { Vec::new() } else { Vec::with_capacity(n_samples) })
            .collect();
        let mut probes: Vec<ProbeAccumulator> = self
            .plans
            .iter()
            .map(|p| ProbeAccumulator {
                sum: Complex64::new(0.0, 0.0),
                sum_sq: Complex64::new(0.0, 0.0),
                cross: alloc::vec![Complex64::new(0.0, 0.0); p.window_transform.len()],
                mixed: alloc::vec![Complex64::new(0.0, 0.0); p.window_transform.len()],
            })
            .collect();
        let mut mean = [Complex64::new(0.0, 0.0); 8];

        if let Some(obs) = observer.as_mut() {
            obs(0, &x);
        }
        let total = cfg.total_steps();
        for step in 1..=total {
            let mut dw = [0.0; 4];
            for d in dw.iter_mut() {
                let z: f64 = StandardNormal.sample(&mut rng);
                *d = sqrt_dt * z;
            }
            self.step(&mut x, &dw);
            if x.iter().any(|z| !(z.norm() <= DIVERGENCE_BOUND)) {
                return TrajectoryOutcome { index, diverged: true, mean, probes };
            }
            if let Some(obs) = observer.as_mut() {
                obs(step, &x);
            }
            if step > transient && (step - transient) % per_sample == 0 {
                for (m, xi) in mean.iter_mut().zip(x.iter()) {
                    *m += xi;
                }
                for ((plan, acc), s) in self.plans.iter().zip(probes.iter_mut()).zip(series.iter_mut()) {
                    let q: Complex64 =
                        plan.weights.iter().zip(x.iter()).map(|(w, xi)| w * xi).sum::<Complex64>() - plan.reference;
                    acc.sum += q;
                    acc.sum_sq += q * q;
                    if !plan.window_transform.is_empty() {
                        s.push(q);
                    }
                }
            }
        }
        let inv = 1.0 / n_samples as f64;
        for m in mean.iter_mut() {
            *m *= inv;
        }

        let m = cfg.window;
        let hop = m / 2;
        for ((plan, acc), s) in self.plans.iter().zip(probes.iter_mut()).zip(series.iter()) {
            if plan.window_transform.is_empty() {
                continue;
            }
            for start in (0..cfg.n_windows()).map(|k| k * hop) {
                let seg = &s[start..start + m];
                for (f, h) in plan.window_transform.iter().enumerate() {
                    let tw = &plan.twiddles[f * m..(f + 1) * m];
                    let mut fwd = Complex64::new(0.0, 0.0);
                    let mut bwd = Complex64::new(0.0, 0.0);
                    for ((q, t), hn) in seg.iter().zip(tw.iter()).zip(self.hann.iter()) {
                        let hq = q * hn;
                        fwd += hq * t;
                        bwd += hq * t.conj();
                    }
                    acc.cross[f] += fwd * bwd;
                    acc.mixed[f] += fwd * h.conj() + h * bwd;
                }
            }
        }
        TrajectoryOutcome { index, diverged: false, mean, probes }
    }

    /// Folds trajectory outcomes, in index order, into ensemble statistics.
    pub fn reduce(&self, mut outcomes: Vec<TrajectoryOutcome>) -> Result<EnsembleStats> {
        outcomes.sort_by_key(|o| o.index);
        let total = outcomes.len();
        let n_diverged = outcomes.iter().filter(|o| o.diverged).count();
        if n_diverged as f64 > MAX_DIVERGED_FRACTION * total as f64 || total - n_diverged < 2 {
            return Err(Error::TrajectoryDivergence { diverged: n_diverged, total });
        }
        let used: Vec<&TrajectoryOutcome> = outcomes.iter().filter(|o| !o.diverged).collect();
        let n_used = used.len();

        let mut mean = [Complex64::new(0.0, 0.0); 8];
        let mut se = [Complex64::new(0.0, 0.0); 8];
        for k in 0..8 {
            let vals: Vec<Complex64> = used.iter().map(|o| o.mean[k]).collect();
            let (m, sr, si) = complex_mean_se(&vals);
            mean[k] = m;
            se[k] = Complex64::new(sr, si);
        }

        let n_samples = self.cfg.n_samples() as f64;
        let n_windows = self.cfg.n_windows();
        let ds = self.cfg.sample_spacing();
        let mut equal_time = Vec::with_capacity(self.plans.len());
        let mut spectra = Vec::new();
        for (j, (plan, req)) in self.plans.iter().zip(self.cfg.probes.iter()).enumerate() {
            let firsts: Vec<Complex64> = used.iter().map(|o| o.probes[j].sum / n_samples).collect();
            let (mu, _, _) = complex_mean_se(&firsts);
            let per_traj: Vec<f64> = used
                .iter()
                .map(|o| {
                    let a = &o.probes[j];
                    (a.sum_sq / n_samples - 2.0 * mu * a.sum / n_samples + mu * mu).re
                })
                .collect();
            let (value, std_error) = mean_se(per_traj.iter().cloned());
            equal_time.push(EqualTimeMoment { value, std_error });

            if plan.window_transform.is_empty() {
                continue;
            }
            let gain = 2.0 * self.params.gamma(req.probe.band);
            let norm = ds / (self.hann_power * n_windows as f64);
            let mut values = Vec::with_capacity(req.omegas.len());
            let mut std_errors = Vec::with_capacity(req.omegas.len());
            for (f, h) in plan.window_transform.iter().enumerate() {
                let hh = h * h.conj();
                let est: Vec<f64> = used
                    .iter()
                    .map(|o| {
                        let a = &o.probes[j];
                        ((a.cross[f] - mu * a.mixed[f] + mu * mu * hh * n_windows as f64) * norm).re
                    })
                    .collect();
                let (s, s_se) = mean_se(est.iter().cloned());
                values.push(req.probe.vacuum + gain * s);
                std_errors.push(gain * s_se);
            }
            spectra.push(SampledSpectrum {
                name: req.name.clone(),
                omegas: req.omegas.clone(),
                values,
                std_errors,
                n_windows,
            });
        }

        Ok(EnsembleStats {
            mean_state: PhaseSpaceState::from_array(mean),
            mean_std_error: PhaseSpaceState::from_array(se),
            equal_time,
            spectra,
            n_used,
            n_diverged,
            warnings: self.warnings.clone(),
            trajectory_means: used.iter().map(|o| o.mean).collect(),
        })
    }
}

/// Advisory checks: an unstable linearization, or a sampling window short
/// against the slowest relaxation time.
pub fn preflight(p: &ModelParams, cfg: &SdeConfig) -> Vec<String> {
    let mut out = Vec::new();
    match linearize_at_steady_state(p).and_then(|(_, sys)| classify_stability(&sys, default_self_pulsing_tol(p))) {
        Ok(report) if report.is_operable() => {
            let slowest = 50.0 / report.margin;
            if cfg.t_sample < slowest {
                out.push(format!(
                    "t_sample = {} is shorter than 50 relaxation times ({slowest:.3}); spectra may be biased",
                    cfg.t_sample
                ));
            }
        }
        Ok(_) => out.push(
            "the classical steady state is unstable or self-pulsing; positive-P sampling may be unreliable".into(),
        ),
        Err(e) => out.push(format!("no stable classical steady state ({e}); positive-P sampling may be unreliable")),
    }
    out
}

/// Sequential ensemble run.
pub fn integrate_sde(p: &ModelParams, cfg: &SdeConfig) -> Result<EnsembleStats> {
    let runner = SdeRunner::new(p, cfg)?;
    let outcomes = (0..cfg.n_traj).map(|i| runner.run_trajectory(i, None)).collect();
    runner.reduce(outcomes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::real;
    use crate::linearized::linearize_at_steady_state;
    use crate::model::{critical_pump, Band};
    use crate::spectra::{equal_time_covariance, intracavity_spectrum, Mode, QuadratureSelector};
    use alloc::vec;

    fn uncoupled(ratio: f64) -> ModelParams {
        ModelParams { kappa: 0.01, gamma_a: 1.0, gamma_b: 1.0, ..Default::default() }.with_pump(ratio * 600.0)
    }

    fn quick(p: &ModelParams, n_traj: usize) -> SdeConfig {
        SdeConfig {
            dt: 5e-3,
            t_transient: 10.0,
            t_sample: 40.0,
            n_traj,
            seed: 7,
            sample_interval: 0.05,
            window: 128,
            ..SdeConfig::new(p)
        }
    }

    fn x_probe(theta: f64) -> QuadratureProbe {
        QuadratureProbe::single(&QuadratureSelector::new(Band::Fundamental, Mode::One, theta))
    }

    #[test]
    fn config_validation() {
        let p = uncoupled(0.0);
        let base = SdeConfig::new(&p);
        assert!(base.validate().is_ok());
        assert!(matches!(SdeConfig { dt: 0.0, ..base.clone() }.validate(), Err(Error::InvalidConfig(_))));
        assert!(matches!(SdeConfig { n_traj: 1, ..base.clone() }.validate(), Err(Error::InvalidConfig(_))));
        assert!(matches!(SdeConfig { t_sample: -1.0, ..base.clone() }.validate(), Err(Error::InvalidConfig(_))));
        assert!(matches!(SdeConfig { window: 15, ..base.clone() }.validate(), Err(Error::InvalidConfig(_))));
        assert_eq!(base.transient_steps(), 20_000);
        assert_eq!(base.steps_per_sample(), 10);
        assert_eq!(base.n_samples(), 20_000);
        assert_eq!(base.n_windows(), 14);
    }

    #[test]
    fn too_few_windows() {
        let p = uncoupled(0.4);
        let mut cfg = quick(&p, 4);
        cfg.probes = vec![ProbeRequest { name: "x".into(), probe: x_probe(0.0), omegas: vec![0.0] }];
        cfg.t_sample = 200.0;
        cfg.window = 1024;
        assert!(matches!(SdeRunner::new(&p, &cfg), Err(Error::InsufficientData { windows: 6, required: 8 })));
    }

    #[test]
    fn unpumped_vacuum_is_exact() {
        let p = uncoupled(0.0);
        let mut cfg = quick(&p, 8);
        cfg.probes = vec![ProbeRequest { name: "x".into(), probe: x_probe(0.3), omegas: vec![-2.0, 0.0, 1.0] }];
        let stats = integrate_sde(&p, &cfg).unwrap();
        assert_eq!(stats.mean_state, PhaseSpaceState::vacuum());
        assert_eq!(stats.equal_time[0].value, 0.0);
        assert_eq!(stats.spectra[0].values, vec![1.0; 3]);
    }

    #[test]
    fn linear_cavity_gives_flat_vacuum_spectrum() {
        let mut p = uncoupled(0.0);
        p.kappa = 0.0;
        p.eps1 = real(2.0);
        p.eps2 = real(2.0);
        let mut cfg = SdeConfig { t_transient: 40.0, ..quick(&p, 4) };
        cfg.probes = vec![ProbeRequest { name: "x".into(), probe: x_probe(0.0), omegas: vec![0.0, 3.0] }];
        let stats = integrate_sde(&p, &cfg).unwrap();
        for v in &stats.spectra[0].values {
            assert!((v - 1.0).abs() < 1e-10, "{v}");
        }
        assert!((stats.mean_state.a1 - real(2.0)).norm() < 1e-6);
    }

    #[test]
    fn bit_identical_reruns_and_order_independence() {
        let p = uncoupled(0.4);
        let mut cfg = quick(&p, 6);
        cfg.probes = vec![ProbeRequest { name: "x".into(), probe: x_probe(0.0), omegas: vec![0.0, 1.0] }];
        let a = integrate_sde(&p, &cfg).unwrap();
        let b = integrate_sde(&p, &cfg).unwrap();
        assert_eq!(a, b);

        let runner = SdeRunner::new(&p, &cfg).unwrap();
        let reversed: Vec<_> = (0..cfg.n_traj).rev().map(|i| runner.run_trajectory(i, None)).collect();
        assert_eq!(runner.reduce(reversed).unwrap(), a);

        let other = integrate_sde(&p, &SdeConfig { seed: 8, ..cfg }).unwrap();
        assert_ne!(other.mean_state, a.mean_state);
    }

    #[test]
    fn observer_sees_every_step() {
        let p = uncoupled(0.3);
        let cfg =
            SdeConfig { t_transient: 0.1, t_sample: 0.2, sample_interval: 0.05, dt: 0.01, n_traj: 2, ..quick(&p, 2) };
        let runner = SdeRunner::new(&p, &cfg).unwrap();
        let mut seen = Vec::new();
        let mut obs = |i: usize, x: &[Complex64; 8]| seen.push((i, x[0]));
        let out = runner.run_trajectory(1, Some(&mut obs));
        assert!(!out.diverged);
        assert_eq!(seen.len(), cfg.total_steps() + 1);
        assert_eq!(seen[0], (0, Complex64::new(0.0, 0.0)));
        assert_eq!(out, runner.run_trajectory(1, None));
    }

    #[test]
    fn divergence_is_reported() {
        // Far above threshold with a huge coupling the amplitudes blow up.
        let p = ModelParams { kappa: 1.0, gamma_a: 1.0, gamma_b: 1.0, ..Default::default() }.with_pump(1e7);
        let cfg = SdeConfig { dt: 0.05, t_transient: 0.0, t_sample: 1.0, window: 16, ..quick(&p, 4) };
        assert!(matches!(integrate_sde(&p, &cfg), Err(Error::TrajectoryDivergence { diverged: 4, total: 4 })));
    }

    #[test]
    fn preflight_warns_above_threshold_and_on_short_windows() {
        let p = uncoupled(1.05);
        assert!(preflight(&p, &SdeConfig::new(&p)).iter().any(|w| w.contains("unstable")));
        let p = uncoupled(0.4);
        assert!(preflight(&p, &SdeConfig::new(&p)).is_empty());
        let short = SdeConfig { t_sample: 5.0, ..SdeConfig::new(&p) };
        assert!(preflight(&p, &short).iter().any(|w| w.contains("relaxation")));
    }

    #[test]
    fn conjugacy_and_mean_agree_with_steady_state() {
        let p = uncoupled(0.4);
        let cfg = quick(&p, 200);
        let stats = integrate_sde(&p, &cfg).unwrap();
        let (ss, _) = linearize_at_steady_state(&p).unwrap();
        let m = &stats.mean_state;
        let se = &stats.mean_std_error;
        let d = m.a1p - m.a1.conj();
        assert!(d.re.abs() < 3.0 * (se.a1p.re + se.a1.re) + 1e-12);
        assert!(d.im.abs() < 3.0 * (se.a1p.im + se.a1.im) + 1e-12);
        // Quantum corrections to the mean are O(kappa^2) relative here.
        assert!((m.a1 - ss.a1).norm() < 1e-3 * ss.a1.norm());
    }

    #[test]
    fn equal_time_variance_matches_linearized() {
        let p = uncoupled(0.4);
        let mut cfg = quick(&p, 400);
        cfg.probes = vec![
            ProbeRequest { name: "x".into(), probe: x_probe(0.0), omegas: vec![] },
            ProbeRequest { name: "y".into(), probe: x_probe(core::f64::consts::FRAC_PI_2), omegas: vec![] },
        ];
        let stats = integrate_sde(&p, &cfg).unwrap();
        let (_, sys) = linearize_at_steady_state(&p).unwrap();
        let cov = equal_time_covariance(&sys, 2048).unwrap();
        for (k, req) in cfg.probes.iter().enumerate() {
            let w = req.probe.weights;
            let lin = (w.transpose() * cov * w)[(0, 0)].re;
            let got = stats.equal_time[k];
            assert!(got.std_error > 0.0);
            assert!((got.value - lin).abs() < 3.0 * got.std_error + 2e-3 * lin.abs(), "{}: {got:?} vs {lin}", req.name);
        }
    }

    #[test]
    fn sampled_spectrum_shows_squeezing() {
        let p = uncoupled(0.4);
        // Windows of 25.6 resolve the dip; short windows smear it.
        let mut cfg = SdeConfig { t_sample: 140.0, window: 512, ..quick(&p, 150) };
        let omegas = vec![0.0, 1.0, 4.0];
        cfg.probes = vec![ProbeRequest { name: "x".into(), probe: x_probe(0.0), omegas: omegas.clone() }];
        let stats = integrate_sde(&p, &cfg).unwrap();
        let (_, sys) = linearize_at_steady_state(&p).unwrap();
        let spec = &stats.spectra[0];
        assert!(spec.values[0] < 1.0);
        for (i, &w) in omegas.iter().enumerate() {
            let sm = intracavity_spectrum(&sys, w).unwrap();
            let lin = cfg.probes[0].probe.variance(&sm, &p);
            let tol = 3.0 * spec.std_errors[i];
            assert!(
                (spec.values[i] - lin).abs() < tol,
                "w={w}: {} vs {lin} (se {})",
                spec.values[i],
                spec.std_errors[i]
            );
        }
    }

    #[test]
    fn schemes_agree_on_the_mean() {
        let p = uncoupled(0.4);
        let a = integrate_sde(&p, &quick(&p, 50)).unwrap();
        let b =
            integrate_sde(&p, &SdeConfig { scheme: Scheme::ExplicitEulerMaruyama, dt: 1e-3, ..quick(&p, 50) }).unwrap();
        let w = {
            let mut w = Vec8::zeros();
            w[0] = real(1.0);
            w
        };
        let (ma, mb) = (a.mean_estimate(&w), b.mean_estimate(&w));
        assert!((ma.value - mb.value).norm() < 3.0 * (ma.std_error() + mb.std_error()) + 1e-3 * ma.value.norm());
        let _ = critical_pump(&p);
    }
}
