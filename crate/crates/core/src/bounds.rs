//! Closed-form qubit counts and probability bounds, plus the small fitting
//! and concentration helpers needed to evaluate them from measurements.
//!
//! Logarithms are base 2 with an outer ceiling. Constants the bounds leave
//! unspecified (the `C` in the local and mean-square error bounds) are
//! supplied by the caller from fitted measurements.

use std::collections::BTreeMap;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hamiltonian::{residual_and_rayleigh, HamiltonianModel, Spectrum};
use crate::linalg::{wrap_phase, CVector, TWO_PI};
use crate::propagators::{exact_power, QDriftMode};
use crate::qpe::{nearest_index, qdrift_realization_states, MseEstimate};
use crate::rng::derive_seed;

/// Relative slack when comparing a log argument against a power of two, so
/// that arguments landing on `2^c` up to rounding give exactly `c`.
const LOG_SLACK: f64 = 1e-12;

/// Smallest `c ≥ 0` with `2^c ≥ x`.
pub fn ceil_log2(x: f64) -> u32 {
    let mut c = 0u32;
    let mut p = 1.0f64;
    while p < x * (1.0 - LOG_SLACK) {
        p *= 2.0;
        c += 1;
    }
    c
}

/// Which version of the residual/splitting bounds to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundForm {
    /// Only the off-target spectral components, as in the original statement.
    PaperStated,
    /// Off-target components plus the exact-eigenvector term.
    Combined,
}

fn check_eps(eps: f64) -> Result<()> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::BoundDomain(format!("eps = {eps} must lie in (0, 1)")));
    }
    Ok(())
}

fn check_ell(ell: u64) -> Result<()> {
    if ell < 2 {
        return Err(Error::BoundDomain(format!(
            "failure radius ell = {ell} must be at least 2"
        )));
    }
    Ok(())
}

/// `t = n + ⌈log₂(2 + 1/(2ε))⌉` qubits for `n` digits with failure at most `ε`.
pub fn thm1_qubits(n: u32, eps: f64) -> Result<u32> {
    check_eps(eps)?;
    Ok(n + ceil_log2(2.0 + 1.0 / (2.0 * eps)))
}

/// `1 / (2(ℓ − 1))`.
pub fn thm1_failure(ell: u64) -> Result<f64> {
    check_ell(ell)?;
    Ok(1.0 / (2.0 * (ell as f64 - 1.0)))
}

fn check_residual(delta: f64, gap: f64) -> Result<()> {
    if gap <= 0.0 {
        return Err(Error::BoundDomain(format!("gap = {gap} must be positive")));
    }
    if delta < 0.0 || delta >= gap {
        return Err(Error::BoundDomain(format!(
            "residual {delta} must satisfy 0 <= residual < gap = {gap}"
        )));
    }
    Ok(())
}

fn residual_qubits(n: u32, eps: f64, ratio_sq: f64, form: BoundForm) -> u32 {
    match form {
        BoundForm::PaperStated => n + ceil_log2(2.0 + ratio_sq / (2.0 * eps)),
        BoundForm::Combined => n + ceil_log2(2.0 + (1.0 + ratio_sq) / (2.0 * eps)),
    }
}

fn residual_failure(ell: u64, ratio_sq: f64, form: BoundForm) -> f64 {
    let denom = 2.0 * (ell as f64 - 1.0);
    match form {
        BoundForm::PaperStated => ratio_sq / denom,
        BoundForm::Combined => (1.0 + ratio_sq) / denom,
    }
}

/// Qubits when the input has residual `delta` and the target is separated
/// from the rest of the spectrum by `gap`.
pub fn thm2_qubits(n: u32, eps: f64, delta: f64, gap: f64, form: BoundForm) -> Result<u32> {
    check_eps(eps)?;
    check_residual(delta, gap)?;
    Ok(residual_qubits(n, eps, (delta / gap).powi(2), form))
}

/// `δ²/(2ΔE²(ℓ−1))`, or `(1 + δ²/ΔE²)/(2(ℓ−1))` in combined form.
pub fn thm2_failure(ell: u64, delta: f64, gap: f64, form: BoundForm) -> Result<f64> {
    check_ell(ell)?;
    check_residual(delta, gap)?;
    Ok(residual_failure(ell, (delta / gap).powi(2), form))
}

fn check_splitting(err: f64, gap: f64) -> Result<()> {
    if gap <= 0.0 {
        return Err(Error::BoundDomain(format!("gap = {gap} must be positive")));
    }
    if err < 0.0 {
        return Err(Error::BoundDomain(format!("error {err} must be nonnegative")));
    }
    Ok(())
}

/// Qubits when `U` is replaced by an approximation with one-application
/// error `err = ‖Uψ − Vψ‖`.
pub fn thm3_qubits(n: u32, eps: f64, err: f64, gap: f64, form: BoundForm) -> Result<u32> {
    check_eps(eps)?;
    check_splitting(err, gap)?;
    Ok(residual_qubits(n, eps, (err / gap).powi(2), form))
}

/// Failure bound matching [`thm3_qubits`].
pub fn thm3_failure(ell: u64, err: f64, gap: f64, form: BoundForm) -> Result<f64> {
    check_ell(ell)?;
    check_splitting(err, gap)?;
    Ok(residual_failure(ell, (err / gap).powi(2), form))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OverlapLemma {
    /// Residual `‖Hψ − aψ‖` against the eigenvalue gap.
    Residual,
    /// One-application error `‖Uψ − Vψ‖` against the eigenphase gap of `V`.
    Splitting,
}

/// Lower bound on the overlap with the nearest exact eigenvector.
pub fn lemma_overlap_bound(err: f64, gap: f64, which: OverlapLemma) -> Result<f64> {
    if gap <= 0.0 || err < 0.0 {
        return Err(Error::BoundDomain(format!(
            "need err >= 0 and gap > 0 (err = {err}, gap = {gap})"
        )));
    }
    match which {
        OverlapLemma::Residual => {
            if err >= gap {
                return Err(Error::BoundDomain(format!(
                    "residual {err} must be below the gap {gap}"
                )));
            }
            Ok(1.0 - (err / gap).powi(2))
        }
        OverlapLemma::Splitting => {
            if err >= 2.0 * gap {
                return Err(Error::BoundDomain(format!(
                    "error {err} must be below twice the gap {gap}"
                )));
            }
            Ok(1.0 - (err / (2.0 * gap)).powi(2))
        }
    }
}

/// Largest possible distance from the target eigenphase to the nearest
/// eigenphase of the approximate unitary.
pub fn mmin_bound(err: f64) -> f64 {
    0.5 * err
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thm4Requirements {
    /// Smallest step count with `r^{q−1} > 2^{n+6} λ² / ε²`.
    pub r_min: u64,
    /// `n + ⌈log₂(2 + 1/ε)⌉`.
    pub t_min: u32,
    /// `2^{n+6} λ² / ε²`.
    pub threshold: f64,
}

fn check_q(q: f64) -> Result<()> {
    if q <= 1.0 {
        return Err(Error::BoundDomain(format!(
            "q = {q} must exceed 1, otherwise the deviation does not shrink with r"
        )));
    }
    Ok(())
}

pub fn thm4_t_min(n: u32, eps: f64) -> Result<u32> {
    check_eps(eps)?;
    Ok(n + ceil_log2(2.0 + 1.0 / eps))
}

pub fn thm4_requirements(n: u32, eps: f64, lambda: f64, q: f64) -> Result<Thm4Requirements> {
    check_eps(eps)?;
    check_q(q)?;
    if lambda < 0.0 {
        return Err(Error::BoundDomain(format!("lambda = {lambda} must be nonnegative")));
    }
    let threshold = 2f64.powi(n as i32 + 6) * lambda * lambda / (eps * eps);
    let exponent = q - 1.0;
    let mut r = threshold.powf(1.0 / exponent).floor().max(1.0) as u64;
    while (r as f64).powf(exponent) <= threshold {
        r += 1;
    }
    while r > 1 && ((r - 1) as f64).powf(exponent) > threshold {
        r -= 1;
    }
    Ok(Thm4Requirements {
        r_min: r,
        t_min: thm4_t_min(n, eps)?,
        threshold,
    })
}

/// `(2/3) 2^{t/2} √(c λ² / r^{q−1})`.
///
/// This is the squared concentration scale `σ_t²`; it bounds the mean of the
/// amplitude deviation `ξ`.
pub fn sigma_t(t: u32, c_est: f64, lambda: f64, r: u64, q: f64) -> Result<f64> {
    check_q(q)?;
    if c_est < 0.0 || r == 0 {
        return Err(Error::BoundDomain(format!(
            "need c_est >= 0 and r >= 1 (c_est = {c_est}, r = {r})"
        )));
    }
    Ok((2.0 / 3.0) * 2f64.powf(t as f64 / 2.0) * (c_est * lambda * lambda / (r as f64).powf(q - 1.0)).sqrt())
}

/// Failure level `1/(4(ℓ+1)) + 2√2 σ_t (2ℓ+1)^{1/4}` reached by the
/// randomized estimate for radius `ell`, given `σ_t²`.
pub fn thm4_proof_failure(ell: u64, sigma_t_sq: f64) -> f64 {
    let l = ell as f64;
    1.0 / (4.0 * (l + 1.0)) + 2.0 * 2f64.sqrt() * sigma_t_sq.sqrt() * (2.0 * l + 1.0).powf(0.25)
}

/// `mse / ε²`.
pub fn markov_failure(mse: f64, eps: f64) -> Result<f64> {
    if eps <= 0.0 || mse < 0.0 {
        return Err(Error::BoundDomain(format!(
            "need mse >= 0 and eps > 0 (mse = {mse}, eps = {eps})"
        )));
    }
    Ok(mse / (eps * eps))
}

/// `C λ² r k τ²` with `τ = 1/r`.
pub fn mse_bound(c_est: f64, lambda: f64, r: u64, k: u64) -> f64 {
    c_est * lambda * lambda * k as f64 / r as f64
}

/// Upper end of the Wilson score interval for a proportion `p` over `n` trials.
pub fn wilson_upper(p: f64, n: usize, z: f64) -> f64 {
    let n = n as f64;
    let z2 = z * z;
    let centre = p + z2 / (2.0 * n);
    let spread = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).max(0.0).sqrt();
    ((centre + spread) / (1.0 + z2 / n)).min(1.0)
}

/// Least-squares slope and intercept of `ln y` against `ln x`.
pub fn loglog_fit(xs: &[f64], ys: &[f64]) -> Result<(f64, f64)> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(Error::InvalidArgument(
            "need at least two paired points for a fit".into(),
        ));
    }
    if xs.iter().chain(ys).any(|v| *v <= 0.0) {
        return Err(Error::InvalidArgument(
            "log-log fit needs positive data".into(),
        ));
    }
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidArgument("abscissae are all equal".into()));
    }
    let slope = sxy / sxx;
    Ok((slope, my - slope * mx))
}

/// Least-squares `c` in `y ≈ c·x`.
pub fn fit_proportional(xs: &[f64], ys: &[f64]) -> Result<f64> {
    let sxx: f64 = xs.iter().map(|x| x * x).sum();
    if xs.len() != ys.len() || sxx == 0.0 {
        return Err(Error::InvalidArgument(
            "need paired data with a nonzero abscissa".into(),
        ));
    }
    Ok(xs.iter().zip(ys).map(|(x, y)| x * y).sum::<f64>() / sxx)
}

/// The amplitude deviation of one QDRIFT realization.
#[derive(Debug, Clone, PartialEq)]
pub struct XiSample {
    /// `2^{-t} Σ_k |⟨ψ|e_k⟩|`.
    pub xi: f64,
    /// `2^{-t} Σ_k e^{-2πik(j+b)/2^t} ⟨ψ|e_k⟩` for every `j`.
    pub alpha_tilde: Vec<Complex64>,
}

/// ξ and the perturbations α̃_j from the realized powers `w_k` of an
/// eigenvector `psi`, where `e_k = w_k − U^k ψ`.
pub fn xi_from_states(spectrum: &Spectrum, psi: &CVector, states: &[CVector], b: usize) -> XiSample {
    let n = states.len();
    let overlaps: Vec<Complex64> = states
        .iter()
        .enumerate()
        .map(|(k, w)| psi.dotc(&(w - exact_power(spectrum, psi, k as u64))))
        .collect();
    let xi = overlaps.iter().map(|c| c.norm()).sum::<f64>() / n as f64;
    let alpha_tilde = (0..n)
        .map(|j| {
            let shift = (j + b) % n;
            overlaps
                .iter()
                .enumerate()
                .map(|(k, c)| {
                    let turns = ((k * shift) % n) as f64 / n as f64;
                    c * Complex64::from_polar(1.0, -TWO_PI * turns)
                })
                .sum::<Complex64>()
                / n as f64
        })
        .collect();
    XiSample { xi, alpha_tilde }
}

/// Monte Carlo estimate of `E[ξ]` over `num_samples` prefix-mode realizations.
pub fn xi_diagnostic(
    model: &HamiltonianModel,
    spectrum: &Spectrum,
    psi: &CVector,
    t: u32,
    r: u64,
    num_samples: usize,
    seed: u64,
) -> Result<MseEstimate> {
    if num_samples == 0 {
        return Err(Error::InvalidArgument("need at least one sample".into()));
    }
    let (a, _) = residual_and_rayleigh(model, psi, None)?;
    let (b, _) = nearest_index(wrap_phase(a / TWO_PI), t);
    let values = (0..num_samples as u64)
        .into_par_iter()
        .map(|s| {
            let states =
                qdrift_realization_states(model, psi, t, r, derive_seed(seed, s), QDriftMode::Prefix)?;
            Ok(xi_from_states(spectrum, psi, &states, b).xi)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(MseEstimate::from_samples(&values))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundName {
    Thm1,
    Thm2,
    Thm3,
    Thm4,
    Lemma1Overlap,
    Lemma2Overlap,
    Mmin,
    Mse,
    Markov,
}

impl BoundName {
    pub const ALL: [BoundName; 9] = [
        BoundName::Thm1,
        BoundName::Thm2,
        BoundName::Thm3,
        BoundName::Thm4,
        BoundName::Lemma1Overlap,
        BoundName::Lemma2Overlap,
        BoundName::Mmin,
        BoundName::Mse,
        BoundName::Markov,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            BoundName::Thm1 => "thm1",
            BoundName::Thm2 => "thm2",
            BoundName::Thm3 => "thm3",
            BoundName::Thm4 => "thm4",
            BoundName::Lemma1Overlap => "lemma1_overlap",
            BoundName::Lemma2Overlap => "lemma2_overlap",
            BoundName::Mmin => "mmin",
            BoundName::Mse => "mse",
            BoundName::Markov => "markov",
        }
    }

    pub fn parse(name: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|b| b.as_str() == name)
            .ok_or_else(|| {
                let names: Vec<&str> = Self::ALL.iter().map(|b| b.as_str()).collect();
                Error::InvalidArgument(format!(
                    "unknown bound `{name}`, expected one of {}",
                    names.join(", ")
                ))
            })
    }
}

/// A bound evaluated at named inputs, optionally compared with a measurement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub name: BoundName,
    /// Which quantity of the bound family was evaluated (`qubits`, `failure`, ...).
    pub quantity: String,
    pub inputs: BTreeMap<String, f64>,
    pub value: f64,
    pub satisfied_by: Option<f64>,
    pub slack: Option<f64>,
}

impl BoundReport {
    pub fn with_measured(mut self, measured: f64) -> Self {
        self.satisfied_by = Some(measured);
        self.slack = Some(self.value - measured);
        self
    }

    /// Re-evaluate from the echoed inputs alone.
    pub fn recompute(&self) -> Result<f64> {
        Ok(evaluate(self.name, &self.inputs)?.value)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

struct Params<'a> {
    map: &'a BTreeMap<String, f64>,
}

impl Params<'_> {
    fn has(&self, key: &str) -> bool {
        self.map.contains_key(key)
    }

    fn get(&self, key: &str) -> Result<f64> {
        self.map
            .get(key)
            .copied()
            .ok_or_else(|| Error::InvalidArgument(format!("missing parameter `{key}`")))
    }

    fn int(&self, key: &str) -> Result<u64> {
        let v = self.get(key)?;
        if v < 0.0 || v.fract() != 0.0 {
            return Err(Error::InvalidArgument(format!(
                "parameter `{key}` must be a nonnegative integer, got {v}"
            )));
        }
        Ok(v as u64)
    }

    fn form(&self) -> Result<BoundForm> {
        match self.map.get("combined").copied().unwrap_or(0.0) {
            v if v == 0.0 => Ok(BoundForm::PaperStated),
            v if v == 1.0 => Ok(BoundForm::Combined),
            v => Err(Error::InvalidArgument(format!(
                "parameter `combined` must be 0 or 1, got {v}"
            ))),
        }
    }

    fn only(&self, allowed: &[&str]) -> Result<()> {
        for key in self.map.keys() {
            if !allowed.contains(&key.as_str()) {
                return Err(Error::InvalidArgument(format!(
                    "unexpected parameter `{key}` (allowed: {})",
                    allowed.join(", ")
                )));
            }
        }
        Ok(())
    }
}

/// Evaluate bound `name` at `params`; the parameter set selects the quantity.
///
/// | name | parameters | quantity |
/// |---|---|---|
/// | thm1 | n, eps / ell | qubits / failure |
/// | thm2 | n, eps, delta, gap [, combined] / ell, delta, gap [, combined] | qubits / failure |
/// | thm3 | n, eps, err, gap [, combined] / ell, err, gap [, combined] | qubits / failure |
/// | thm4 | n, eps, lambda, q / n, eps / t, c_est, lambda, r, q / ell, sigma_t_sq | r_min / t_min / sigma_t / proof_failure |
/// | lemma1_overlap, lemma2_overlap | err, gap | overlap |
/// | mmin | err | distance |
/// | mse | c_est, lambda, r, k | mse |
/// | markov | mse, eps | failure |
pub fn evaluate(name: BoundName, params: &BTreeMap<String, f64>) -> Result<BoundReport> {
    let p = Params { map: params };
    let n = || -> Result<u32> { Ok(p.int("n")? as u32) };
    let (quantity, value) = match name {
        BoundName::Thm1 if p.has("ell") => {
            p.only(&["ell"])?;
            ("failure", thm1_failure(p.int("ell")?)?)
        }
        BoundName::Thm1 => {
            p.only(&["n", "eps"])?;
            ("qubits", thm1_qubits(n()?, p.get("eps")?)? as f64)
        }
        BoundName::Thm2 if p.has("ell") => {
            p.only(&["ell", "delta", "gap", "combined"])?;
            let v = thm2_failure(p.int("ell")?, p.get("delta")?, p.get("gap")?, p.form()?)?;
            ("failure", v)
        }
        BoundName::Thm2 => {
            p.only(&["n", "eps", "delta", "gap", "combined"])?;
            let v = thm2_qubits(n()?, p.get("eps")?, p.get("delta")?, p.get("gap")?, p.form()?)?;
            ("qubits", v as f64)
        }
        BoundName::Thm3 if p.has("ell") => {
            p.only(&["ell", "err", "gap", "combined"])?;
            let v = thm3_failure(p.int("ell")?, p.get("err")?, p.get("gap")?, p.form()?)?;
            ("failure", v)
        }
        BoundName::Thm3 => {
            p.only(&["n", "eps", "err", "gap", "combined"])?;
            let v = thm3_qubits(n()?, p.get("eps")?, p.get("err")?, p.get("gap")?, p.form()?)?;
            ("qubits", v as f64)
        }
        BoundName::Thm4 if p.has("sigma_t_sq") => {
            p.only(&["ell", "sigma_t_sq"])?;
            ("proof_failure", thm4_proof_failure(p.int("ell")?, p.get("sigma_t_sq")?))
        }
        BoundName::Thm4 if p.has("c_est") => {
            p.only(&["t", "c_est", "lambda", "r", "q"])?;
            let v = sigma_t(
                p.int("t")? as u32,
                p.get("c_est")?,
                p.get("lambda")?,
                p.int("r")?,
                p.get("q")?,
            )?;
            ("sigma_t", v)
        }
        BoundName::Thm4 if p.has("lambda") => {
            p.only(&["n", "eps", "lambda", "q"])?;
            let req = thm4_requirements(n()?, p.get("eps")?, p.get("lambda")?, p.get("q")?)?;
            ("r_min", req.r_min as f64)
        }
        BoundName::Thm4 => {
            p.only(&["n", "eps"])?;
            ("t_min", thm4_t_min(n()?, p.get("eps")?)? as f64)
        }
        BoundName::Lemma1Overlap | BoundName::Lemma2Overlap => {
            p.only(&["err", "gap"])?;
            let which = if name == BoundName::Lemma1Overlap {
                OverlapLemma::Residual
            } else {
                OverlapLemma::Splitting
            };
            ("overlap", lemma_overlap_bound(p.get("err")?, p.get("gap")?, which)?)
        }
        BoundName::Mmin => {
            p.only(&["err"])?;
            ("distance", mmin_bound(p.get("err")?))
        }
        BoundName::Mse => {
            p.only(&["c_est", "lambda", "r", "k"])?;
            let v = mse_bound(p.get("c_est")?, p.get("lambda")?, p.int("r")?, p.int("k")?);
            ("mse", v)
        }
        BoundName::Markov => {
            p.only(&["mse", "eps"])?;
            ("failure", markov_failure(p.get("mse")?, p.get("eps")?)?)
        }
    };
    Ok(BoundReport {
        name,
        quantity: quantity.to_string(),
        inputs: params.clone(),
        value,
        satisfied_by: None,
        slack: None,
    })
}

/// Convenience wrapper taking `(key, value)` pairs.
pub fn report(name: BoundName, params: &[(&str, f64)]) -> Result<BoundReport> {
    let map = params.iter().map(|(k, v)| (k.to_string(), *v)).collect();
    evaluate(name, &map)
}
