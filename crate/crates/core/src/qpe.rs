//! The phase estimation register, simulated exactly.
//!
//! After the controlled powers and the inverse Fourier transform, the joint
//! state is `Σ_j |j⟩ ⊗ a_j` with
//! `a_j = 2^{-t} Σ_k e^{-2πi kj/2^t} w_k` and `w_k = W_k ψ`, so the outcome
//! probabilities are `‖a_j‖²`. A length-`2^t` FFT per state component yields
//! all of them at once.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use num_complex::Complex64;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::format::format_float;
use crate::hamiltonian::{check_normalized, HamiltonianModel, Spectrum};
use crate::linalg::CVector;
use crate::propagators::{exact_power, sample_sequence, Propagator, QDriftMode};
use crate::rng::stream_rng;

const WEIGHT_SUM_TOL: f64 = 1e-10;
const SINGULARITY_TOL: f64 = 1e-14;

/// Largest register this simulator accepts.
pub const MAX_REGISTER_QUBITS: u32 = 24;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum DistributionSource {
    ClosedForm,
    Simulated,
    QdriftRealization { seed: u64 },
    /// Pointwise mean of `count` distributions.
    Mixture { count: usize },
}

/// Exact probabilities of the `2^t` register outcomes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutcomeDistribution {
    pub probs: Vec<f64>,
    pub t: u32,
    pub source: DistributionSource,
}

impl OutcomeDistribution {
    fn new(mut probs: Vec<f64>, t: u32, source: DistributionSource) -> Self {
        for p in &mut probs {
            if *p < 0.0 {
                *p = 0.0;
            }
        }
        Self { probs, t, source }
    }

    /// Pointwise mean of distributions over the same register, summed in order.
    pub fn average(dists: &[OutcomeDistribution]) -> Result<Self> {
        let first = dists.first().ok_or(Error::EmptySet)?;
        if dists.iter().any(|d| d.t != first.t) {
            return Err(Error::InvalidArgument(
                "cannot average distributions over different registers".into(),
            ));
        }
        let mut probs = vec![0.0; first.size()];
        for d in dists {
            for (acc, p) in probs.iter_mut().zip(&d.probs) {
                *acc += p;
            }
        }
        let count = dists.len();
        for p in &mut probs {
            *p /= count as f64;
        }
        Ok(Self::new(probs, first.t, DistributionSource::Mixture { count }))
    }

    pub fn size(&self) -> usize {
        self.probs.len()
    }

    pub fn total(&self) -> f64 {
        self.probs.iter().sum()
    }

    /// Probability of an outcome farther than `ell` (cyclically) from `b`.
    pub fn failure_probability(&self, b: usize, ell: usize) -> f64 {
        failure_probability(self, b, ell)
    }

    /// Total-variation distance to another distribution of the same size.
    pub fn total_variation(&self, other: &Self) -> f64 {
        0.5 * self
            .probs
            .iter()
            .zip(&other.probs)
            .map(|(a, b)| (a - b).abs())
            .sum::<f64>()
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.probs
            .iter()
            .zip(&other.probs)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// `outcome,probability` rows.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("outcome,probability\n");
        for (j, p) in self.probs.iter().enumerate() {
            let _ = writeln!(out, "{j},{}", format_float(*p));
        }
        out
    }
}

fn register_size(t: u32) -> Result<usize> {
    if t == 0 || t > MAX_REGISTER_QUBITS {
        return Err(Error::InvalidArgument(format!(
            "register size t = {t} must lie in 1..={MAX_REGISTER_QUBITS}"
        )));
    }
    Ok(1usize << t)
}

/// `b = ⌊2^t ℰ⌋ mod 2^t` and the defect `δ = ℰ − b/2^t`.
pub fn nearest_index(phase: f64, t: u32) -> (usize, f64) {
    let n = (1u64 << t) as f64;
    let scaled = (phase * n).floor();
    let b = (scaled as i64).rem_euclid(n as i64) as usize;
    (b, phase - scaled / n)
}

/// `F_t(θ) = sin²(2^t πθ) / (2^{2t} sin²(πθ))`, equal to 1 at integer `θ`.
pub fn fejer_weight(theta: f64, t: u32) -> f64 {
    let n = (1u64 << t) as f64;
    let reduced = theta - theta.round();
    let denom = (std::f64::consts::PI * reduced).sin();
    if denom.abs() < SINGULARITY_TOL {
        return 1.0;
    }
    let cycles = n * reduced;
    if (cycles - cycles.round()).abs() < SINGULARITY_TOL {
        // other dyadic grid points: the numerator vanishes exactly
        return 0.0;
    }
    let numer = (std::f64::consts::PI * cycles).sin();
    (numer * numer) / (n * n * denom * denom)
}

/// Outcome distribution from `(eigenphase, weight)` pairs via the
/// geometric-series closed form.
pub fn closed_form_distribution(overlaps: &[(f64, f64)], t: u32) -> Result<OutcomeDistribution> {
    let n = register_size(t)?;
    let total: f64 = overlaps.iter().map(|(_, w)| w).sum();
    if (total - 1.0).abs() > WEIGHT_SUM_TOL {
        return Err(Error::InvalidArgument(format!(
            "overlap weights sum to {total}, expected 1"
        )));
    }
    let probs = (0..n)
        .map(|j| {
            let grid = j as f64 / n as f64;
            overlaps
                .iter()
                .map(|&(phase, w)| w * fejer_weight(phase - grid, t))
                .sum()
        })
        .collect();
    Ok(OutcomeDistribution::new(probs, t, DistributionSource::ClosedForm))
}

/// Closed-form distribution for `psi` under the exact unitary.
pub fn closed_form_for_state(spectrum: &Spectrum, psi: &CVector, t: u32) -> Result<OutcomeDistribution> {
    check_normalized(psi)?;
    let overlaps: Vec<(f64, f64)> = spectrum
        .phases
        .iter()
        .copied()
        .zip(spectrum.weights(psi))
        .collect();
    closed_form_distribution(&overlaps, t)
}

/// Exact outcome distribution when `W_k` is supplied by `propagator`.
pub fn simulate_qpe(propagator: &Propagator, psi: &CVector, t: u32) -> Result<OutcomeDistribution> {
    let n = register_size(t)?;
    let d = psi.len();
    // component-major so each component's k-series is contiguous
    let mut series = vec![Complex64::new(0.0, 0.0); d * n];
    propagator.for_each_power(psi, n as u64, |k, w| {
        for (i, &c) in w.iter().enumerate() {
            series[i * n + k as usize] = c;
        }
    })?;
    Ok(distribution_from_series(series, n, t, DistributionSource::Simulated))
}

/// Outcome distribution from precomputed `w_k`, `k = 0 … 2^t − 1`.
pub fn distribution_from_states(
    states: &[CVector],
    t: u32,
    source: DistributionSource,
) -> Result<OutcomeDistribution> {
    let n = register_size(t)?;
    if states.len() != n {
        return Err(Error::InvalidArgument(format!(
            "need {n} powers for t = {t}, got {}",
            states.len()
        )));
    }
    let d = states[0].len();
    let mut series = vec![Complex64::new(0.0, 0.0); d * n];
    for (k, w) in states.iter().enumerate() {
        for (i, &c) in w.iter().enumerate() {
            series[i * n + k] = c;
        }
    }
    Ok(distribution_from_series(series, n, t, source))
}

fn distribution_from_series(
    mut series: Vec<Complex64>,
    n: usize,
    t: u32,
    source: DistributionSource,
) -> OutcomeDistribution {
    // forward transform: X_j = Σ_k e^{-2πi jk/n} x_k
    let fft = FftPlanner::<f64>::new().plan_fft_forward(n);
    fft.process(&mut series);
    let scale = 1.0 / (n as f64 * n as f64);
    let mut probs = vec![0.0; n];
    for component in series.chunks_exact(n) {
        for (p, x) in probs.iter_mut().zip(component) {
            *p += x.norm_sqr() * scale;
        }
    }
    OutcomeDistribution::new(probs, t, source)
}

/// Mass on outcomes whose cyclic distance from `b` exceeds `ell`.
pub fn failure_probability(dist: &OutcomeDistribution, b: usize, ell: usize) -> f64 {
    let n = dist.size();
    dist.probs
        .iter()
        .enumerate()
        .filter(|&(j, _)| {
            let diff = j.abs_diff(b % n);
            diff.min(n - diff) > ell
        })
        .map(|(_, p)| p)
        .sum::<f64>()
        .clamp(0.0, 1.0)
}

/// Multinomial shot counts (outcomes with zero counts are omitted).
pub fn sample_outcomes(dist: &OutcomeDistribution, shots: u64, seed: u64) -> BTreeMap<usize, u64> {
    let mut rng = stream_rng(seed, 0);
    let mut remaining = shots;
    let mut mass_left = 1.0f64;
    let mut hist = BTreeMap::new();
    let last = dist.size() - 1;
    for (j, &p) in dist.probs.iter().enumerate() {
        if remaining == 0 {
            break;
        }
        let count = if j == last || mass_left <= p {
            remaining
        } else {
            let q = (p / mass_left).clamp(0.0, 1.0);
            Binomial::new(remaining, q)
                .expect("probability in [0, 1]")
                .sample(&mut rng)
        };
        if count > 0 {
            hist.insert(j, count);
        }
        remaining -= count;
        mass_left -= p;
    }
    hist
}

pub fn histogram_to_csv(hist: &BTreeMap<usize, u64>) -> String {
    let mut out = String::from("outcome,count\n");
    for (j, c) in hist {
        let _ = writeln!(out, "{j},{c}");
    }
    out
}

/// `w_k` for one QDRIFT realization, `k = 0 … 2^t − 1`.
pub fn qdrift_realization_states(
    model: &HamiltonianModel,
    psi: &CVector,
    t: u32,
    steps_per_unit: u64,
    seed: u64,
    mode: QDriftMode,
) -> Result<Vec<CVector>> {
    let n = register_size(t)? as u64;
    let prop = Propagator::qdrift_sampled(model, steps_per_unit, n, seed, mode)?;
    prop.powers(psi, n)
}

/// Exact outcome distribution of a single QDRIFT realization.
pub fn qdrift_qpe_realization(
    model: &HamiltonianModel,
    psi: &CVector,
    t: u32,
    steps_per_unit: u64,
    seed: u64,
    mode: QDriftMode,
) -> Result<OutcomeDistribution> {
    let states = qdrift_realization_states(model, psi, t, steps_per_unit, seed, mode)?;
    distribution_from_states(&states, t, DistributionSource::QdriftRealization { seed })
}

/// Monte Carlo mean of `‖(V_{rk} ⋯ V_1 − U^k) ψ‖²` with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MseEstimate {
    pub mean: f64,
    pub std_err: f64,
    pub samples: usize,
}

impl MseEstimate {
    /// Mean and standard error of `values`, summed in index order.
    pub fn from_samples(values: &[f64]) -> Self {
        let n = values.len();
        let mean = values.iter().sum::<f64>() / n as f64;
        let var = if n > 1 {
            values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64
        } else {
            0.0
        };
        Self {
            mean,
            std_err: (var / n as f64).sqrt(),
            samples: n,
        }
    }
}

/// Squared error of one random product of length `r·k`, for sample `sample`.
pub fn qdrift_squared_error(
    model: &HamiltonianModel,
    spectrum: &Spectrum,
    psi: &CVector,
    k: u64,
    steps_per_unit: u64,
    seed: u64,
    sample: u64,
) -> Result<f64> {
    let sequence = sample_sequence(
        model,
        (steps_per_unit * k) as usize,
        crate::rng::derive_seed(seed, sample),
        QDriftMode::Prefix,
    );
    let prop = Propagator::qdrift(model, steps_per_unit, sequence)?;
    let approx = prop.power(psi, k)?;
    Ok((approx - exact_power(spectrum, psi, k)).norm_squared())
}

pub fn qdrift_mse(
    model: &HamiltonianModel,
    spectrum: &Spectrum,
    psi: &CVector,
    k: u64,
    steps_per_unit: u64,
    num_samples: usize,
    seed: u64,
) -> Result<MseEstimate> {
    if num_samples < 2 {
        return Err(Error::InvalidArgument(
            "need at least two samples for a standard error".into(),
        ));
    }
    check_normalized(psi)?;
    let values = (0..num_samples as u64)
        .into_par_iter()
        .map(|s| qdrift_squared_error(model, spectrum, psi, k, steps_per_unit, seed, s))
        .collect::<Result<Vec<f64>>>()?;
    Ok(MseEstimate::from_samples(&values))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonian::{build_model, normalize_spectrum, spectral_decomposition};
    use crate::testutil::{diag, random_hermitian, random_unit_vector};
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn phase_model(phases: &[f64]) -> (HamiltonianModel, Spectrum) {
        let values: Vec<f64> = phases.iter().map(|p| 2.0 * PI * p).collect();
        let model = build_model(vec![diag(&values)]).unwrap();
        let spec = spectral_decomposition(&model).unwrap();
        (model, spec)
    }

    /// Direct O(N²) evaluation of `‖2^{-t} Σ_k e^{2πik(ℰ − j/N)}‖²`.
    fn brute_force_single(phase: f64, t: u32) -> Vec<f64> {
        let n = 1usize << t;
        (0..n)
            .map(|j| {
                let mut acc = Complex64::new(0.0, 0.0);
                for k in 0..n {
                    let theta = 2.0 * PI * (k as f64) * (phase - j as f64 / n as f64);
                    acc += Complex64::from_polar(1.0, theta);
                }
                acc.norm_sqr() / (n * n) as f64
            })
            .collect()
    }

    #[test]
    fn nearest_index_examples() {
        let (b, d) = nearest_index(0.3, 3);
        assert_eq!(b, 2);
        assert_relative_eq!(d, 0.05, epsilon = 1e-15);
        assert_eq!(nearest_index(0.375, 3), (3, 0.0));
        let (b, d) = nearest_index(0.999, 2);
        assert_eq!(b, 3);
        assert_relative_eq!(d, 0.249, epsilon = 1e-12);
    }

    #[test]
    fn closed_form_examples() {
        let exact = closed_form_distribution(&[(0.375, 1.0)], 3).unwrap();
        assert_eq!(exact.probs[3], 1.0);
        assert!(exact.probs.iter().enumerate().all(|(j, &p)| j == 3 || p < 1e-30));

        let quarter = closed_form_distribution(&[(0.25, 1.0)], 1).unwrap();
        let oracle = brute_force_single(0.25, 1);
        assert_relative_eq!(quarter.probs[0], 0.5, epsilon = 1e-15);
        assert_relative_eq!(quarter.probs[1], 0.5, epsilon = 1e-15);
        assert_relative_eq!(oracle[0], 0.5, epsilon = 1e-15);

        let two = closed_form_distribution(&[(0.25, 0.5), (0.625, 0.5)], 3).unwrap();
        assert_relative_eq!(two.probs[2], 0.5, epsilon = 1e-15);
        assert_relative_eq!(two.probs[5], 0.5, epsilon = 1e-15);

        assert!(closed_form_distribution(&[(0.1, 0.7)], 3).is_err());
    }

    #[test]
    fn closed_form_matches_brute_force() {
        for (i, phase) in [0.0, 0.013, 0.37, 0.5, 0.9921].iter().enumerate() {
            let t = 2 + i as u32;
            let cf = closed_form_distribution(&[(*phase, 1.0)], t).unwrap();
            for (a, b) in cf.probs.iter().zip(brute_force_single(*phase, t)) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn simulated_examples() {
        let (_, spec) = phase_model(&[0.375, 0.8]);
        let psi = spec.eigenvector(0);
        let dist = simulate_qpe(&Propagator::exact(&spec), &psi, 3).unwrap();
        assert_relative_eq!(dist.probs[3], 1.0, epsilon = 1e-12);

        let (_, spec) = phase_model(&[0.25, 0.625]);
        let mix = (spec.eigenvector(0) + spec.eigenvector(1)) / Complex64::new(2f64.sqrt(), 0.0);
        let dist = simulate_qpe(&Propagator::exact(&spec), &mix, 3).unwrap();
        assert_relative_eq!(dist.probs[2], 0.5, epsilon = 1e-12);
        assert_relative_eq!(dist.probs[5], 0.5, epsilon = 1e-12);
    }

    #[test]
    fn simulated_matches_closed_form_for_mixed_states() {
        let (model, _) = normalize_spectrum(&[random_hermitian(5, 3)], 0.05).unwrap();
        let spec = spectral_decomposition(&model).unwrap();
        let psi = random_unit_vector(5, 4);
        let sim = simulate_qpe(&Propagator::exact(&spec), &psi, 7).unwrap();
        let cf = closed_form_for_state(&spec, &psi, 7).unwrap();
        assert!(sim.max_abs_diff(&cf) < 1e-10);
        assert_relative_eq!(sim.total(), 1.0, epsilon = 1e-10);
    }

    #[test]
    fn failure_probability_examples() {
        let exact = closed_form_distribution(&[(0.375, 1.0)], 3).unwrap();
        for ell in 0..4 {
            assert_eq!(failure_probability(&exact, 3, ell), 0.0);
        }
        let uniform = OutcomeDistribution::new(vec![0.125; 8], 3, DistributionSource::Simulated);
        assert_relative_eq!(failure_probability(&uniform, 0, 1), 5.0 / 8.0);

        let phase = 0.3141;
        let dist = closed_form_distribution(&[(phase, 1.0)], 8).unwrap();
        let (b, _) = nearest_index(phase, 8);
        assert!(failure_probability(&dist, b, 8) <= 1.0 / 14.0);
    }

    #[test]
    fn shots() {
        let exact = closed_form_distribution(&[(0.375, 1.0)], 3).unwrap();
        let hist = sample_outcomes(&exact, 1000, 1);
        assert_eq!(hist.len(), 1);
        assert_eq!(hist[&3], 1000);

        let half = OutcomeDistribution::new(vec![0.5, 0.5], 1, DistributionSource::Simulated);
        let a = sample_outcomes(&half, 100_000, 5);
        assert_eq!(a, sample_outcomes(&half, 100_000, 5));
        assert_eq!(a.values().sum::<u64>(), 100_000);
        for c in a.values() {
            assert!((*c as i64 - 50_000).abs() <= 700, "{c}");
        }
        assert!(histogram_to_csv(&a).starts_with("outcome,count\n0,"));
    }

    #[test]
    fn qdrift_single_term_is_exact() {
        let (model, _) = normalize_spectrum(&[random_hermitian(3, 8)], 0.1).unwrap();
        let spec = spectral_decomposition(&model).unwrap();
        let psi = spec.eigenvector(1);
        let exact = simulate_qpe(&Propagator::exact(&spec), &psi, 5).unwrap();
        for seed in 0..3 {
            let real = qdrift_qpe_realization(&model, &psi, 5, 8, seed, QDriftMode::Prefix).unwrap();
            assert!(real.max_abs_diff(&exact) < 1e-10);
        }
        let mse = qdrift_mse(&model, &spec, &psi, 3, 8, 4, 0).unwrap();
        assert!(mse.mean < 1e-20);
    }

    #[test]
    fn qdrift_commuting_large_r_approaches_exact() {
        let model = build_model(vec![diag(&[0.4, 1.3, 2.2]), diag(&[1.9, 0.8, 0.3])]).unwrap();
        let spec = spectral_decomposition(&model).unwrap();
        let psi = spec.eigenvector(0);
        let exact = simulate_qpe(&Propagator::exact(&spec), &psi, 3).unwrap();
        let real = qdrift_qpe_realization(&model, &psi, 3, 2048, 17, QDriftMode::Prefix).unwrap();
        assert!(real.total_variation(&exact) < 0.05);
        let again = qdrift_qpe_realization(&model, &psi, 3, 2048, 17, QDriftMode::Prefix).unwrap();
        assert_eq!(real, again);
        let indep =
            qdrift_qpe_realization(&model, &psi, 3, 2048, 17, QDriftMode::IndependentPerPower).unwrap();
        assert!(indep.total_variation(&exact) < 0.05);
    }

    #[test]
    fn csv_layout() {
        let d = closed_form_distribution(&[(0.5, 1.0)], 1).unwrap();
        assert_eq!(
            d.to_csv(),
            "outcome,probability\n0,0.0000000000000000e0\n1,1.0000000000000000e0\n"
        );
    }

    proptest! {
        #[test]
        fn simulation_equals_closed_form(phase in 0.0f64..1.0, t in 1u32..=10) {
            let (_, spec) = phase_model(&[phase, (phase + 0.5).fract()]);
            let m = if spec.phases[0] == phase { 0 } else { 1 };
            let psi = spec.eigenvector(m);
            let sim = simulate_qpe(&Propagator::exact(&spec), &psi, t).unwrap();
            let cf = closed_form_distribution(&[(spec.phases[m], 1.0)], t).unwrap();
            prop_assert!(sim.max_abs_diff(&cf) <= 1e-10);
            prop_assert!((sim.total() - 1.0).abs() <= 1e-10);
        }

        #[test]
        fn shift_covariance(phase in 0.0f64..1.0, t in 1u32..=8, s in 0usize..256) {
            let n = 1usize << t;
            let s = s % n;
            let base = closed_form_distribution(&[(phase, 1.0)], t).unwrap();
            let shifted_phase = (phase + s as f64 / n as f64).fract();
            let shifted = closed_form_distribution(&[(shifted_phase, 1.0)], t).unwrap();
            for j in 0..n {
                prop_assert!((shifted.probs[(j + s) % n] - base.probs[j]).abs() <= 1e-12);
            }
        }

        #[test]
        fn failure_is_monotone_and_bounded(phase in 0.0f64..1.0, t in 2u32..=10) {
            let dist = closed_form_distribution(&[(phase, 1.0)], t).unwrap();
            let (b, _) = nearest_index(phase, t);
            let n = 1usize << t;
            let mut prev = f64::INFINITY;
            for ell in 0..n / 2 {
                let f = failure_probability(&dist, b, ell);
                prop_assert!(f <= prev + 1e-15);
                if ell >= 2 {
                    prop_assert!(f <= 1.0 / (2.0 * (ell as f64 - 1.0)));
                }
                prev = f;
            }
        }
    }
}
