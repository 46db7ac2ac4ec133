//! Hamiltonians written as sums of Hermitian terms, their spectra, and the
//! phase arithmetic used to compare eigenphases.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    self, hermitian_deviation, hermitian_eigen, hermitian_norm, wrap_phase, CMatrix, CVector,
    TWO_PI,
};
use num_complex::Complex64;

const HERMITIAN_TOL: f64 = 1e-12;
const RANGE_SLACK: f64 = 1e-9;
const NORMALIZED_TOL: f64 = 1e-10;
/// Eigenvalues closer than this are treated as one degenerate cluster.
pub const DEGENERACY_TOL: f64 = 1e-10;

/// `H = Σ h_ℓ` together with the term norms and the sampling distribution
/// `p_ℓ = ‖h_ℓ‖ / λ` used by randomized product formulas.
#[derive(Debug, Clone)]
pub struct HamiltonianModel {
    terms: Vec<CMatrix>,
    term_norms: Vec<f64>,
    lambda: f64,
    probs: Vec<f64>,
    total: CMatrix,
}

impl HamiltonianModel {
    /// Validate the terms and precompute norms, `λ` and the probabilities.
    pub fn new(terms: Vec<CMatrix>) -> Result<Self> {
        let first = terms.first().ok_or(Error::EmptyModel)?;
        let dim = first.nrows();
        for (i, h) in terms.iter().enumerate() {
            if h.nrows() != h.ncols() {
                return Err(Error::NonSquare {
                    term: i,
                    rows: h.nrows(),
                    cols: h.ncols(),
                });
            }
            if h.nrows() != dim {
                return Err(Error::DimensionMismatch {
                    term: i,
                    expected: dim,
                    found: h.nrows(),
                });
            }
        }
        if dim < 2 {
            return Err(Error::DimensionTooSmall(dim));
        }

        let mut term_norms = Vec::with_capacity(terms.len());
        for (i, h) in terms.iter().enumerate() {
            let norm = hermitian_norm(h);
            let deviation = hermitian_deviation(h);
            if deviation > HERMITIAN_TOL * norm.max(f64::MIN_POSITIVE) {
                return Err(Error::NonHermitian { term: i, deviation });
            }
            if norm == 0.0 {
                return Err(Error::ZeroNormTerm { term: i });
            }
            term_norms.push(norm);
        }
        let lambda: f64 = term_norms.iter().sum();
        let probs = term_norms.iter().map(|n| n / lambda).collect();
        let total = terms
            .iter()
            .fold(CMatrix::zeros(dim, dim), |acc, h| acc + h);
        Ok(Self {
            terms,
            term_norms,
            lambda,
            probs,
            total,
        })
    }

    pub fn terms(&self) -> &[CMatrix] {
        &self.terms
    }

    pub fn term_norms(&self) -> &[f64] {
        &self.term_norms
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn dim(&self) -> usize {
        self.total.nrows()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    /// The full Hamiltonian `Σ h_ℓ`.
    pub fn total(&self) -> &CMatrix {
        &self.total
    }
}

/// Shorthand for [`HamiltonianModel::new`].
pub fn build_model(terms: Vec<CMatrix>) -> Result<HamiltonianModel> {
    HamiltonianModel::new(terms)
}

/// Eigenphases of `U = e^{iH}` sorted ascending, with eigenvectors as the
/// columns of `eigenvectors` in the same order.
#[derive(Debug, Clone)]
pub struct Spectrum {
    pub phases: Vec<f64>,
    pub eigenvectors: CMatrix,
    pub raw_eigenvalues: Vec<f64>,
}

impl Spectrum {
    /// Decompose a Hermitian matrix whose eigenvalues lie in `[0, 2π)`.
    pub fn from_hermitian(h: &CMatrix) -> Result<Self> {
        let eig = hermitian_eigen(h);
        for &v in &eig.values {
            if v < -RANGE_SLACK || v >= TWO_PI + RANGE_SLACK {
                return Err(Error::SpectrumOutOfRange { eigenvalue: v });
            }
        }
        let phases: Vec<f64> = eig
            .values
            .iter()
            .map(|&v| wrap_phase((v / TWO_PI).max(0.0)))
            .collect();
        let d = phases.len();
        let mut order: Vec<usize> = (0..d).collect();
        order.sort_by(|&i, &j| phases[i].total_cmp(&phases[j]));
        Ok(Self {
            phases: order.iter().map(|&i| phases[i]).collect(),
            eigenvectors: CMatrix::from_fn(d, d, |r, c| eig.vectors[(r, order[c])]),
            raw_eigenvalues: order.iter().map(|&i| eig.values[i]).collect(),
        })
    }

    pub fn dim(&self) -> usize {
        self.phases.len()
    }

    pub fn eigenvector(&self, m: usize) -> CVector {
        linalg::column(&self.eigenvectors, m)
    }

    /// `|⟨ψ_m|ψ⟩|²` for every eigenvector.
    pub fn weights(&self, psi: &CVector) -> Vec<f64> {
        let coeffs = self.eigenvectors.adjoint() * psi;
        coeffs.iter().map(|c| c.norm_sqr()).collect()
    }

    /// Indices whose eigenvalue lies within [`DEGENERACY_TOL`] of eigenvalue `m`.
    pub fn cluster_of(&self, m: usize) -> Vec<usize> {
        let e = self.raw_eigenvalues[m];
        (0..self.dim())
            .filter(|&i| (self.raw_eigenvalues[i] - e).abs() < DEGENERACY_TOL)
            .collect()
    }

    /// Overlap of `psi` with the eigenspace containing eigenvector `m`.
    pub fn cluster_weight(&self, psi: &CVector, m: usize) -> f64 {
        let w = self.weights(psi);
        self.cluster_of(m).into_iter().map(|i| w[i]).sum()
    }

    /// `Σ λ_m |ψ_m⟩⟨ψ_m|`.
    pub fn rebuild(&self) -> CMatrix {
        let eig = linalg::HermitianEigen {
            values: self.raw_eigenvalues.clone(),
            vectors: self.eigenvectors.clone(),
        };
        linalg::apply_function(&eig, |v| Complex64::new(v, 0.0))
    }
}

pub fn spectral_decomposition(model: &HamiltonianModel) -> Result<Spectrum> {
    Spectrum::from_hermitian(model.total())
}

/// Affine map `H' = scale·H + shift·I` applied by [`normalize_spectrum`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AffineMap {
    pub scale: f64,
    pub shift: f64,
}

impl AffineMap {
    pub fn apply(&self, eigenvalue: f64) -> f64 {
        self.scale * eigenvalue + self.shift
    }

    /// Map an eigenvalue of the normalized operator back to the original one.
    pub fn invert(&self, eigenvalue: f64) -> f64 {
        (eigenvalue - self.shift) / self.scale
    }

    /// Original eigenvalue corresponding to a normalized eigenphase.
    pub fn phase_to_eigenvalue(&self, phase: f64) -> f64 {
        self.invert(phase * TWO_PI)
    }
}

/// Default margin kept between the spectrum and the `0/2π` seam.
pub const DEFAULT_MARGIN: f64 = 0.05;

/// Rescale and shift the terms so the spectrum of `Σ h_ℓ` fills
/// `[margin·2π, (1 − margin)·2π]`.
///
/// The identity shift is split evenly over the terms, which leaves every
/// commutator (and so every splitting error) unchanged up to the scale.
/// A spectrum consisting of a single point is only shifted, to `π`.
pub fn normalize_spectrum(
    terms: &[CMatrix],
    margin: f64,
) -> Result<(HamiltonianModel, AffineMap)> {
    normalize_spectrum_into(terms, margin, 1.0 - margin)
}

/// Like [`normalize_spectrum`] with explicit target interval `[lo·2π, hi·2π]`.
pub fn normalize_spectrum_into(
    terms: &[CMatrix],
    lo: f64,
    hi: f64,
) -> Result<(HamiltonianModel, AffineMap)> {
    if !(0.0 <= lo && lo < hi && hi <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "target interval [{lo}, {hi}] must satisfy 0 <= lo < hi <= 1"
        )));
    }
    let raw = HamiltonianModel::new(terms.to_vec())?;
    let eig = hermitian_eigen(raw.total());
    let (emin, emax) = (eig.values[0], *eig.values.last().unwrap());
    let (lo, hi) = (lo * TWO_PI, hi * TWO_PI);
    let map = if emax - emin < DEGENERACY_TOL {
        AffineMap {
            scale: 1.0,
            shift: 0.5 * (lo + hi) - emin,
        }
    } else {
        let scale = (hi - lo) / (emax - emin);
        AffineMap {
            scale,
            shift: lo - scale * emin,
        }
    };
    let d = raw.dim();
    let per_term = Complex64::new(map.shift / terms.len() as f64, 0.0);
    let scaled: Vec<CMatrix> = terms
        .iter()
        .map(|h| h * Complex64::new(map.scale, 0.0) + CMatrix::identity(d, d) * per_term)
        .collect();
    Ok((HamiltonianModel::new(scaled)?, map))
}

/// Cyclic distance between two phases, `min_z |ω1 − ω2 + z|`.
pub fn phase_dist(a: f64, b: f64) -> f64 {
    let d = (a - b).abs().rem_euclid(1.0);
    d.min(1.0 - d)
}

/// Distance from a phase to the closest element of a set.
pub fn phase_dist_to_set(a: f64, set: &[f64]) -> Result<f64> {
    set.iter()
        .map(|&s| phase_dist(a, s))
        .min_by(f64::total_cmp)
        .ok_or(Error::EmptySet)
}

/// Rayleigh quotient (unless `a` is given) and residual `‖Hψ − aψ‖`.
pub fn residual_and_rayleigh(
    model: &HamiltonianModel,
    psi: &CVector,
    a: Option<f64>,
) -> Result<(f64, f64)> {
    residual_with_matrix(model.total(), psi, a)
}

pub(crate) fn residual_with_matrix(
    h: &CMatrix,
    psi: &CVector,
    a: Option<f64>,
) -> Result<(f64, f64)> {
    check_normalized(psi)?;
    let h_psi = h * psi;
    let a = a.unwrap_or_else(|| linalg::inner(psi, &h_psi).re);
    let residual = (h_psi - psi * Complex64::new(a, 0.0)).norm();
    Ok((a, residual))
}

pub(crate) fn check_normalized(psi: &CVector) -> Result<()> {
    let norm = psi.norm();
    if (norm - 1.0).abs() > NORMALIZED_TOL {
        return Err(Error::NotNormalized { norm });
    }
    Ok(())
}

/// Phase distance from `target` to the nearest eigenphase not in `exclude`.
///
/// Excluding a whole index set measures the gap between a cluster of
/// eigenphases and the rest of the spectrum.
pub fn spectral_gap(spectrum: &Spectrum, target: f64, exclude: &[usize]) -> Result<f64> {
    let rest: Vec<f64> = spectrum
        .phases
        .iter()
        .enumerate()
        .filter(|(i, _)| !exclude.contains(i))
        .map(|(_, &p)| p)
        .collect();
    if exclude.is_empty() {
        return Err(Error::InvalidArgument(
            "exclusion set must name the target eigenphase".into(),
        ));
    }
    if rest.is_empty() {
        return Err(Error::InvalidArgument(
            "exclusion set covers every eigenphase".into(),
        ));
    }
    phase_dist_to_set(target, &rest)
}

/// Checks `sin x ≥ (2/π) x` on a uniform grid over `[0, π/2]`.
pub fn jordan_check(grid_points: usize) -> bool {
    let n = grid_points.max(2);
    let half_pi = std::f64::consts::FRAC_PI_2;
    (0..n).all(|i| {
        let x = half_pi * i as f64 / (n - 1) as f64;
        x.sin() >= x / half_pi - 1e-12
    })
}

/// On-disk model: `dim` plus a list of row-major matrices of `[re, im]` pairs.
///
/// Each matrix may also be written as a list of rows.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelFile {
    pub dim: usize,
    pub terms: Vec<MatrixEntries>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MatrixEntries {
    Flat(Vec<[f64; 2]>),
    Rows(Vec<Vec<[f64; 2]>>),
}

impl MatrixEntries {
    fn from_matrix(m: &CMatrix) -> Self {
        let d = m.nrows();
        let mut flat = Vec::with_capacity(d * d);
        for r in 0..d {
            for c in 0..d {
                flat.push([m[(r, c)].re, m[(r, c)].im]);
            }
        }
        MatrixEntries::Flat(flat)
    }

    fn to_matrix(&self, dim: usize, term: usize) -> Result<CMatrix> {
        let flat: Vec<[f64; 2]> = match self {
            MatrixEntries::Flat(v) => v.clone(),
            MatrixEntries::Rows(rows) => {
                if rows.len() != dim || rows.iter().any(|r| r.len() != dim) {
                    return Err(Error::config(
                        format!("terms[{term}]"),
                        format!("expected {dim} rows of {dim} entries"),
                    ));
                }
                rows.concat()
            }
        };
        if flat.len() != dim * dim {
            return Err(Error::config(
                format!("terms[{term}]"),
                format!("expected {} entries, found {}", dim * dim, flat.len()),
            ));
        }
        Ok(CMatrix::from_fn(dim, dim, |r, c| {
            let [re, im] = flat[r * dim + c];
            Complex64::new(re, im)
        }))
    }
}

impl ModelFile {
    pub fn from_model(model: &HamiltonianModel) -> Self {
        Self {
            dim: model.dim(),
            terms: model.terms().iter().map(MatrixEntries::from_matrix).collect(),
        }
    }

    pub fn matrices(&self) -> Result<Vec<CMatrix>> {
        self.terms
            .iter()
            .enumerate()
            .map(|(i, m)| m.to_matrix(self.dim, i))
            .collect()
    }

    pub fn into_model(self) -> Result<HamiltonianModel> {
        HamiltonianModel::new(self.matrices()?)
    }
}

/// Parse a model from its JSON form.
pub fn parse_model(text: &str) -> Result<HamiltonianModel> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let file: ModelFile = serde_path_to_error::deserialize(de)
        .map_err(|e| Error::config(e.path().to_string(), e.inner().to_string()))?;
    file.into_model()
}

pub fn model_to_json(model: &HamiltonianModel) -> String {
    serde_json::to_string_pretty(&ModelFile::from_model(model)).expect("model serializes")
}
