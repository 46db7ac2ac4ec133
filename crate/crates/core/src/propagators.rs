//! Exact, Trotterized and QDRIFT-randomized stand-ins for the powers `U^k`
//! of `U = e^{iH}`.

use num_complex::Complex64;
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hamiltonian::{check_normalized, HamiltonianModel, Spectrum};
use crate::linalg::{expm_i_hermitian, identity, CMatrix, CVector, TWO_PI};
use crate::rng::{derive_seed, stream_rng};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TrotterOrder {
    /// `Π e^{iτ h_ℓ}`
    First,
    /// Symmetric (Strang) splitting.
    Second,
}

impl TrotterOrder {
    pub fn from_int(order: u32) -> Result<Self> {
        match order {
            1 => Ok(TrotterOrder::First),
            2 => Ok(TrotterOrder::Second),
            o => Err(Error::InvalidArgument(format!(
                "Trotter order must be 1 or 2, got {o}"
            ))),
        }
    }

    pub fn as_int(self) -> u32 {
        match self {
            TrotterOrder::First => 1,
            TrotterOrder::Second => 2,
        }
    }
}

/// How the random products standing in for successive powers relate.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QDriftMode {
    /// One sequence; power `k` uses its first `r·k` factors.
    #[default]
    Prefix,
    /// A fresh sequence of length `r·k` for every power `k`.
    IndependentPerPower,
}

/// `U^k ψ = Σ_m e^{2πikℰ_m} ⟨ψ_m|ψ⟩ ψ_m`.
pub fn exact_power(spectrum: &Spectrum, psi: &CVector, k: u64) -> CVector {
    let coeffs = spectrum.eigenvectors.adjoint() * psi;
    let rotated = CVector::from_iterator(
        coeffs.len(),
        coeffs.iter().zip(&spectrum.phases).map(|(c, &phase)| {
            // reduce k·ℰ first so large k keep full precision
            let turns = (k as f64 * phase).fract();
            c * Complex64::from_polar(1.0, TWO_PI * turns)
        }),
    );
    &spectrum.eigenvectors * rotated
}

/// One step of the first- or second-order product formula for `e^{iτH}`.
///
/// The first-order product is `e^{iτh_1} ⋯ e^{iτh_L}`, so `h_L` acts first.
pub fn trotter_step(model: &HamiltonianModel, tau: f64, order: TrotterOrder) -> CMatrix {
    let terms = model.terms();
    let d = model.dim();
    match order {
        TrotterOrder::First => terms
            .iter()
            .fold(identity(d), |acc, h| acc * expm_i_hermitian(h, tau)),
        TrotterOrder::Second => {
            let last = terms.len() - 1;
            let halves: Vec<CMatrix> = terms[..last]
                .iter()
                .map(|h| expm_i_hermitian(h, 0.5 * tau))
                .collect();
            let mut step = expm_i_hermitian(&terms[last], tau);
            for half in halves.iter().rev() {
                step = half * step * half;
            }
            step
        }
    }
}

/// `exp(iτ h_ℓ / p_ℓ)`.
pub fn qdrift_step(model: &HamiltonianModel, ell: usize, tau: f64) -> Result<CMatrix> {
    let h = model.terms().get(ell).ok_or_else(|| {
        Error::InvalidArgument(format!(
            "term index {ell} out of range for {} terms",
            model.num_terms()
        ))
    })?;
    Ok(expm_i_hermitian(h, tau / model.probs()[ell]))
}

/// `Σ_ℓ p_ℓ exp(iτ h_ℓ / p_ℓ)`, the expected QDRIFT step.
pub fn mean_channel(model: &HamiltonianModel, tau: f64) -> CMatrix {
    let d = model.dim();
    model
        .probs()
        .iter()
        .enumerate()
        .fold(CMatrix::zeros(d, d), |acc, (ell, &p)| {
            acc + qdrift_step(model, ell, tau).expect("index in range") * Complex64::new(p, 0.0)
        })
}

/// Term indices (0-based) drawn i.i.d. from the model's probabilities.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QDriftSequence {
    pub indices: Vec<usize>,
    pub seed: u64,
    pub mode: QDriftMode,
}

fn draw_indices(model: &HamiltonianModel, length: usize, seed: u64, stream: u64) -> Vec<usize> {
    let sampler = WeightedIndex::new(model.probs()).expect("probabilities are positive");
    let mut rng = stream_rng(seed, stream);
    (0..length).map(|_| sampler.sample(&mut rng)).collect()
}

pub fn sample_sequence(
    model: &HamiltonianModel,
    length: usize,
    seed: u64,
    mode: QDriftMode,
) -> QDriftSequence {
    QDriftSequence {
        indices: draw_indices(model, length, seed, 0),
        seed,
        mode,
    }
}

/// Trotter power `(V_τ)^r` with `τ = 1/r`.
#[derive(Debug, Clone)]
pub struct TrotterPropagator {
    pub order: TrotterOrder,
    pub steps: u64,
    pub step: CMatrix,
    /// The full stand-in for `U`.
    pub unit: CMatrix,
}

#[derive(Debug, Clone)]
pub struct QDriftPropagator {
    pub steps_per_unit: u64,
    pub sequence: QDriftSequence,
    /// `exp(iτ h_ℓ / p_ℓ)` for every term.
    pub step_matrices: Vec<CMatrix>,
    probs: Vec<f64>,
}

/// A source of the vectors `w_k = W_k ψ`, `k = 0, 1, …`.
#[derive(Debug, Clone)]
pub enum Propagator {
    Exact(Spectrum),
    Trotter(TrotterPropagator),
    QDrift(QDriftPropagator),
}

fn matrix_power(m: &CMatrix, mut e: u64) -> CMatrix {
    let mut result = identity(m.nrows());
    let mut base = m.clone();
    while e > 0 {
        if e & 1 == 1 {
            result = &result * &base;
        }
        e >>= 1;
        if e > 0 {
            base = &base * &base;
        }
    }
    result
}

impl Propagator {
    pub fn exact(spectrum: &Spectrum) -> Self {
        Propagator::Exact(spectrum.clone())
    }

    pub fn trotter(model: &HamiltonianModel, order: TrotterOrder, steps: u64) -> Result<Self> {
        if steps == 0 {
            return Err(Error::InvalidArgument("step count must be positive".into()));
        }
        let step = trotter_step(model, 1.0 / steps as f64, order);
        let unit = matrix_power(&step, steps);
        Ok(Propagator::Trotter(TrotterPropagator {
            order,
            steps,
            step,
            unit,
        }))
    }

    /// QDRIFT with `steps_per_unit` random factors per power of `U`.
    pub fn qdrift(
        model: &HamiltonianModel,
        steps_per_unit: u64,
        sequence: QDriftSequence,
    ) -> Result<Self> {
        if steps_per_unit == 0 {
            return Err(Error::InvalidArgument("step count must be positive".into()));
        }
        let tau = 1.0 / steps_per_unit as f64;
        let step_matrices = (0..model.num_terms())
            .map(|ell| qdrift_step(model, ell, tau))
            .collect::<Result<_>>()?;
        Ok(Propagator::QDrift(QDriftPropagator {
            steps_per_unit,
            sequence,
            step_matrices,
            probs: model.probs().to_vec(),
        }))
    }

    /// Draw a sequence long enough for `count` powers and wrap it.
    pub fn qdrift_sampled(
        model: &HamiltonianModel,
        steps_per_unit: u64,
        count: u64,
        seed: u64,
        mode: QDriftMode,
    ) -> Result<Self> {
        let length = match mode {
            QDriftMode::Prefix => steps_per_unit * count.saturating_sub(1),
            // powers draw their own sequences lazily
            QDriftMode::IndependentPerPower => 0,
        };
        let sequence = sample_sequence(model, length as usize, seed, mode);
        Self::qdrift(model, steps_per_unit, sequence)
    }

    /// Call `visit(k, w_k)` for `k = 0 … count − 1` in order.
    pub fn for_each_power(
        &self,
        psi: &CVector,
        count: u64,
        mut visit: impl FnMut(u64, &CVector),
    ) -> Result<()> {
        check_normalized(psi)?;
        match self {
            Propagator::Exact(spectrum) => {
                for k in 0..count {
                    visit(k, &exact_power(spectrum, psi, k));
                }
            }
            Propagator::Trotter(p) => {
                let mut w = psi.clone();
                let mut next = w.clone();
                for k in 0..count {
                    if k > 0 {
                        next.gemv(Complex64::new(1.0, 0.0), &p.unit, &w, Complex64::new(0.0, 0.0));
                        std::mem::swap(&mut w, &mut next);
                    }
                    visit(k, &w);
                }
            }
            Propagator::QDrift(p) => p.for_each_power(psi, count, visit)?,
        }
        Ok(())
    }

    /// `[w_0, …, w_{count−1}]`.
    pub fn powers(&self, psi: &CVector, count: u64) -> Result<Vec<CVector>> {
        let mut out = Vec::with_capacity(count as usize);
        self.for_each_power(psi, count, |_, w| out.push(w.clone()))?;
        Ok(out)
    }

    /// `W_k ψ` for a single `k`.
    pub fn power(&self, psi: &CVector, k: u64) -> Result<CVector> {
        match self {
            Propagator::Exact(spectrum) => {
                check_normalized(psi)?;
                Ok(exact_power(spectrum, psi, k))
            }
            Propagator::Trotter(p) => {
                check_normalized(psi)?;
                Ok(matrix_power(&p.unit, k) * psi)
            }
            Propagator::QDrift(p) => {
                check_normalized(psi)?;
                let indices = p.power_indices(k)?;
                Ok(p.apply_indices(&indices, psi.clone()))
            }
        }
    }
}

impl QDriftPropagator {
    fn apply_indices(&self, indices: &[usize], mut w: CVector) -> CVector {
        let mut next = w.clone();
        for &ell in indices {
            next.gemv(
                Complex64::new(1.0, 0.0),
                &self.step_matrices[ell],
                &w,
                Complex64::new(0.0, 0.0),
            );
            std::mem::swap(&mut w, &mut next);
        }
        w
    }

    /// Factor indices standing in for `U^k`, in application order.
    pub fn power_indices(&self, k: u64) -> Result<Vec<usize>> {
        let len = (self.steps_per_unit * k) as usize;
        match self.sequence.mode {
            QDriftMode::Prefix => self
                .sequence
                .indices
                .get(..len)
                .map(<[usize]>::to_vec)
                .ok_or_else(|| {
                    Error::InvalidArgument(format!(
                        "sequence of length {} is too short for power {k}",
                        self.sequence.indices.len()
                    ))
                }),
            QDriftMode::IndependentPerPower => Ok(self.independent_indices(k, len)),
        }
    }

    fn independent_indices(&self, k: u64, len: usize) -> Vec<usize> {
        let sampler = WeightedIndex::new(&self.probs).expect("probabilities are positive");
        let mut rng = stream_rng(derive_seed(self.sequence.seed, k), 0);
        (0..len).map(|_| sampler.sample(&mut rng)).collect()
    }

    fn for_each_power(
        &self,
        psi: &CVector,
        count: u64,
        mut visit: impl FnMut(u64, &CVector),
    ) -> Result<()> {
        let r = self.steps_per_unit as usize;
        match self.sequence.mode {
            QDriftMode::Prefix => {
                let needed = r * count.saturating_sub(1) as usize;
                if self.sequence.indices.len() < needed {
                    return Err(Error::InvalidArgument(format!(
                        "sequence of length {} is too short for {count} powers",
                        self.sequence.indices.len()
                    )));
                }
                let mut w = psi.clone();
                for k in 0..count {
                    if k > 0 {
                        let start = (k as usize - 1) * r;
                        w = self.apply_indices(&self.sequence.indices[start..start + r], w);
                    }
                    visit(k, &w);
                }
            }
            QDriftMode::IndependentPerPower => {
                for k in 0..count {
                    let indices = self.independent_indices(k, r * k as usize);
                    visit(k, &self.apply_indices(&indices, psi.clone()));
                }
            }
        }
        Ok(())
    }
}

/// `‖U^k ψ − W_k ψ‖`.
pub fn kstep_error(
    spectrum: &Spectrum,
    psi: &CVector,
    propagator: &Propagator,
    k: u64,
) -> Result<f64> {
    let exact = exact_power(spectrum, psi, k);
    Ok((exact - propagator.power(psi, k)?).norm())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonian::{build_model, normalize_spectrum, spectral_decomposition};
    use crate::linalg::{operator_norm, unitarity_defect};
    use crate::testutil::{diag, random_hermitian, random_unit_vector};
    use approx::assert_relative_eq;

    fn noncommuting(seed: u64) -> HamiltonianModel {
        normalize_spectrum(
            &[random_hermitian(4, seed), random_hermitian(4, seed + 500)],
            0.1,
        )
        .unwrap()
        .0
    }

    fn loglog_slope(xs: &[f64], ys: &[f64]) -> f64 {
        let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
        let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
        let n = lx.len() as f64;
        let mx = lx.iter().sum::<f64>() / n;
        let my = ly.iter().sum::<f64>() / n;
        let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
        let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
        sxy / sxx
    }

    #[test]
    fn exact_power_basics() {
        let model = noncommuting(1);
        let spec = spectral_decomposition(&model).unwrap();
        let psi = random_unit_vector(4, 2);
        assert!((exact_power(&spec, &psi, 0) - &psi).norm() < 1e-12);

        let v = spec.eigenvector(1);
        let w = exact_power(&spec, &v, 5);
        let expected = &v * Complex64::from_polar(1.0, TWO_PI * 5.0 * spec.phases[1]);
        assert!((w - expected).norm() < 1e-10);

        let mut stepped = psi.clone();
        for _ in 0..3 {
            stepped = exact_power(&spec, &stepped, 1);
        }
        let direct = exact_power(&spec, &psi, 3);
        assert!((stepped - &direct).norm() < 1e-10);
        assert_relative_eq!(direct.norm(), 1.0, epsilon = 1e-10);
    }

    #[test]
    fn commuting_terms_split_exactly() {
        let model = build_model(vec![diag(&[0.3, 1.1, 2.0]), diag(&[1.0, 0.2, 0.7])]).unwrap();
        let exact = expm_i_hermitian(model.total(), 0.3);
        for order in [TrotterOrder::First, TrotterOrder::Second] {
            assert!((trotter_step(&model, 0.3, order) - &exact).camax() < 1e-10);
        }
    }

    #[test]
    fn single_term_orders_agree() {
        let model = build_model(vec![random_hermitian(3, 4)]).unwrap();
        let exact = expm_i_hermitian(model.total(), 0.2);
        for order in [TrotterOrder::First, TrotterOrder::Second] {
            assert!((trotter_step(&model, 0.2, order) - &exact).camax() < 1e-12);
        }
    }

    #[test]
    fn strang_splitting_is_third_order_locally() {
        let model = noncommuting(7);
        let taus = [0.1, 0.05, 0.025, 0.0125];
        let errs: Vec<f64> = taus
            .iter()
            .map(|&tau| {
                operator_norm(
                    &(expm_i_hermitian(model.total(), tau)
                        - trotter_step(&model, tau, TrotterOrder::Second)),
                )
            })
            .collect();
        let slope = loglog_slope(&taus, &errs);
        assert!((slope - 3.0).abs() < 0.3, "slope {slope}");
    }

    #[test]
    fn steps_are_unitary() {
        let model = noncommuting(3);
        for order in [TrotterOrder::First, TrotterOrder::Second] {
            assert!(unitarity_defect(&trotter_step(&model, 0.37, order)) < 1e-10);
        }
        for ell in 0..2 {
            assert!(unitarity_defect(&qdrift_step(&model, ell, 0.37).unwrap()) < 1e-10);
        }
        assert!(qdrift_step(&model, 2, 0.1).is_err());
    }

    #[test]
    fn qdrift_step_degenerate_cases() {
        let h = random_hermitian(3, 9);
        let single = build_model(vec![h.clone()]).unwrap();
        assert!((qdrift_step(&single, 0, 0.4).unwrap() - expm_i_hermitian(&h, 0.4)).camax() < 1e-14);
        assert!((qdrift_step(&single, 0, 0.0).unwrap() - identity(3)).camax() < 1e-14);

        let model = build_model(vec![diag(&[1.0, -1.0]), diag(&[3.0, 0.0])]).unwrap();
        // generator is h_1 / 0.25 = 4 h_1
        let expected = expm_i_hermitian(&(diag(&[1.0, -1.0]) * Complex64::new(4.0, 0.0)), 0.1);
        assert!((qdrift_step(&model, 0, 0.1).unwrap() - expected).camax() < 1e-14);
    }

    #[test]
    fn sequences() {
        let single = build_model(vec![random_hermitian(2, 1)]).unwrap();
        let seq = sample_sequence(&single, 50, 3, QDriftMode::Prefix);
        assert!(seq.indices.iter().all(|&i| i == 0));

        let model = build_model(vec![diag(&[1.0, -1.0]), diag(&[3.0, 0.0])]).unwrap();
        let a = sample_sequence(&model, 100_000, 11, QDriftMode::Prefix);
        let b = sample_sequence(&model, 100_000, 11, QDriftMode::Prefix);
        assert_eq!(a, b);
        let freq = a.indices.iter().filter(|&&i| i == 1).count() as f64 / 1e5;
        assert!((freq - 0.75).abs() < 0.01, "{freq}");
    }

    #[test]
    fn sequence_passes_chi_squared() {
        let model = build_model(vec![
            diag(&[1.0, 0.0]),
            diag(&[2.0, 0.0]),
            diag(&[0.0, 3.0]),
            diag(&[4.0, 0.0]),
        ])
        .unwrap();
        let n = 200_000;
        let seq = sample_sequence(&model, n, 99, QDriftMode::Prefix);
        let mut counts = [0usize; 4];
        for &i in &seq.indices {
            counts[i] += 1;
        }
        let chi2: f64 = counts
            .iter()
            .zip(model.probs())
            .map(|(&c, &p)| {
                let e = p * n as f64;
                (c as f64 - e).powi(2) / e
            })
            .sum();
        // 3 degrees of freedom: P(χ² > 30.7) ≈ 1e−6
        assert!(chi2 < 30.7, "chi2 = {chi2}");
    }

    #[test]
    fn mean_channel_properties() {
        let single = build_model(vec![random_hermitian(3, 2)]).unwrap();
        let m = mean_channel(&single, 0.3);
        assert!((&m - expm_i_hermitian(single.total(), 0.3)).camax() < 1e-14);
        assert!(unitarity_defect(&m) < 1e-12);

        let model = noncommuting(5);
        assert!((mean_channel(&model, 0.0) - identity(4)).camax() < 1e-14);
        assert!(operator_norm(&mean_channel(&model, 0.2)) <= 1.0 + 1e-12);

        let psi = random_unit_vector(4, 8);
        let taus = [0.02, 0.01, 0.005, 0.0025];
        let errs: Vec<f64> = taus
            .iter()
            .map(|&tau| {
                ((mean_channel(&model, tau) - expm_i_hermitian(model.total(), tau)) * &psi).norm()
            })
            .collect();
        let slope = loglog_slope(&taus, &errs);
        assert!((slope - 2.0).abs() < 0.3, "slope {slope}");
    }

    #[test]
    fn kstep_errors() {
        let model = noncommuting(12);
        let spec = spectral_decomposition(&model).unwrap();
        let psi = random_unit_vector(4, 13);
        let exact = Propagator::exact(&spec);
        for k in 0..5 {
            assert!(kstep_error(&spec, &psi, &exact, k).unwrap() < 1e-12);
        }

        let commuting = build_model(vec![diag(&[0.3, 1.1]), diag(&[1.0, 0.2])]).unwrap();
        let cspec = spectral_decomposition(&commuting).unwrap();
        let cpsi = random_unit_vector(2, 1);
        let trot = Propagator::trotter(&commuting, TrotterOrder::First, 4).unwrap();
        for k in 0..5 {
            assert!(kstep_error(&cspec, &cpsi, &trot, k).unwrap() < 1e-10);
        }

        // global second order: doubling r cuts the error by about four
        let e1 = kstep_error(&spec, &psi, &Propagator::trotter(&model, TrotterOrder::Second, 32).unwrap(), 1).unwrap();
        let e2 = kstep_error(&spec, &psi, &Propagator::trotter(&model, TrotterOrder::Second, 64).unwrap(), 1).unwrap();
        let ratio = e1 / e2;
        assert!((ratio - 4.0).abs() < 0.5, "ratio {ratio}");
    }

    #[test]
    fn kstep_error_is_subadditive_on_eigenvectors() {
        // U^k − V^k = Σ_j V^j (U − V) U^{k−1−j}, and U only rotates an eigenvector
        for seed in 0..10 {
            let model = noncommuting(seed);
            let spec = spectral_decomposition(&model).unwrap();
            let psi = spec.eigenvector((seed % 4) as usize);
            for order in [TrotterOrder::First, TrotterOrder::Second] {
                let prop = Propagator::trotter(&model, order, 8).unwrap();
                let one = kstep_error(&spec, &psi, &prop, 1).unwrap();
                for k in 1..12 {
                    let ek = kstep_error(&spec, &psi, &prop, k).unwrap();
                    assert!(ek <= k as f64 * one + 1e-9, "k={k}: {ek} > {k}·{one}");
                }
            }
        }
    }

    #[test]
    fn streamed_powers_match_direct_powers() {
        let model = noncommuting(4);
        let psi = random_unit_vector(4, 5);
        for prop in [
            Propagator::trotter(&model, TrotterOrder::Second, 5).unwrap(),
            Propagator::qdrift_sampled(&model, 6, 8, 21, QDriftMode::Prefix).unwrap(),
            Propagator::qdrift_sampled(&model, 6, 8, 21, QDriftMode::IndependentPerPower).unwrap(),
        ] {
            let streamed = prop.powers(&psi, 8).unwrap();
            for (k, w) in streamed.iter().enumerate() {
                assert!((w - prop.power(&psi, k as u64).unwrap()).norm() < 1e-10);
                assert_relative_eq!(w.norm(), 1.0, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn single_term_qdrift_is_exact() {
        let (model, _) = normalize_spectrum(&[random_hermitian(3, 31)], 0.1).unwrap();
        let spec = spectral_decomposition(&model).unwrap();
        let psi = random_unit_vector(3, 1);
        let prop = Propagator::qdrift_sampled(&model, 16, 8, 5, QDriftMode::Prefix).unwrap();
        for k in 0..8 {
            assert!(kstep_error(&spec, &psi, &prop, k).unwrap() < 1e-10);
        }
    }

    #[test]
    fn lemma2_eigenphase_and_overlap() {
        use crate::hamiltonian::phase_dist;
        use crate::linalg::unitary_eigen;
        let mut checked = 0;
        for seed in 0..30u64 {
            let model = noncommuting(seed + 100);
            let spec = spectral_decomposition(&model).unwrap();
            for r in [2u64, 4, 8, 16] {
                let prop = Propagator::trotter(&model, TrotterOrder::First, r).unwrap();
                let Propagator::Trotter(p) = &prop else { unreachable!() };
                let (vphases, chi) = unitary_eigen(&p.unit);
                let m_target = (seed % 4) as usize;
                let psi = spec.eigenvector(m_target);
                let target = spec.phases[m_target];
                let err = kstep_error(&spec, &psi, &prop, 1).unwrap();
                let (m, closest) = vphases
                    .iter()
                    .enumerate()
                    .map(|(i, &e)| (i, phase_dist(e, target)))
                    .min_by(|a, b| a.1.total_cmp(&b.1))
                    .unwrap();
                assert!(closest <= 0.5 * err + 1e-12);
                let gap = vphases
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| *i != m)
                    .map(|(_, &e)| phase_dist(e, target))
                    .fold(f64::INFINITY, f64::min);
                let overlap = chi.column(m).dotc(&psi).norm_sqr();
                assert!(overlap >= 1.0 - (err / (2.0 * gap)).powi(2) - 1e-10);
                checked += 1;
            }
        }
        assert!(checked >= 100);
    }
}
