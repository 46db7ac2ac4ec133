use num_complex::Complex64;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::hamiltonian::{
    normalize_spectrum_into, residual_and_rayleigh, spectral_decomposition, HamiltonianModel,
    Spectrum,
};
use crate::linalg::{hermitian_part, CMatrix, CVector};
use crate::rng::stream_rng;

use super::config::{InstanceConfig, RandomInstance};

/// Lower and upper ends of the widest spectral window, as fractions of 2π.
const WINDOW_LO: f64 = 0.1;
const WINDOW_HI: f64 = 0.9;

/// Stream reserved for the orthogonal direction used by residual perturbations.
const PERTURBATION_STREAM: u64 = 1 << 32;

const RESIDUAL_TOL: f64 = 1e-9;
const SCAN_POINTS: usize = 512;

/// A model, its spectrum, and the eigenvector the experiment targets.
#[derive(Debug, Clone)]
pub struct Instance {
    pub model: HamiltonianModel,
    pub spectrum: Spectrum,
    pub eigen_index: usize,
    pub eigenvector: CVector,
}

impl Instance {
    fn new(model: HamiltonianModel, eigen_index: usize) -> Result<Self> {
        let spectrum = spectral_decomposition(&model)?;
        if eigen_index >= spectrum.dim() {
            return Err(Error::InvalidArgument(format!(
                "eigen index {eigen_index} exceeds dimension {}",
                spectrum.dim()
            )));
        }
        let eigenvector = spectrum.eigenvector(eigen_index);
        Ok(Self {
            model,
            spectrum,
            eigen_index,
            eigenvector,
        })
    }

    pub fn target_phase(&self) -> f64 {
        self.spectrum.phases[self.eigen_index]
    }
}

fn gaussian_hermitian(d: usize, rng: &mut impl rand::Rng) -> CMatrix {
    let a = CMatrix::from_fn(d, d, |_, _| {
        Complex64::new(StandardNormal.sample(rng), StandardNormal.sample(rng))
    });
    hermitian_part(&a)
}

/// Seeded random model whose spectrum spans
/// `[0.1·2π, (0.1 + 0.8·norm_scale)·2π]`, targeting eigenvector `eigen_index`.
pub fn random_instance(spec: &RandomInstance) -> Result<Instance> {
    if spec.dim < 2 {
        return Err(Error::DimensionTooSmall(spec.dim));
    }
    if spec.num_terms == 0 {
        return Err(Error::EmptyModel);
    }
    if !(spec.norm_scale > 0.0 && spec.norm_scale <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "norm_scale = {} must lie in (0, 1]",
            spec.norm_scale
        )));
    }
    let terms: Vec<CMatrix> = (0..spec.num_terms as u64)
        .map(|ell| gaussian_hermitian(spec.dim, &mut stream_rng(spec.seed, ell)))
        .collect();
    let hi = WINDOW_LO + (WINDOW_HI - WINDOW_LO) * spec.norm_scale;
    let (model, _) = normalize_spectrum_into(&terms, WINDOW_LO, hi)?;
    Instance::new(model, spec.eigen_index)
}

pub fn build_instance(config: &InstanceConfig) -> Result<Instance> {
    match config {
        InstanceConfig::Random(spec) => random_instance(spec),
        InstanceConfig::Inline {
            model,
            eigen_index,
            normalize,
        } => {
            let terms = model.matrices()?;
            let model = if *normalize {
                normalize_spectrum_into(&terms, WINDOW_LO, WINDOW_HI)?.0
            } else {
                HamiltonianModel::new(terms)?
            };
            Instance::new(model, *eigen_index)
        }
    }
}

/// An input vector `√(1 − s²) ψ_m + s ψ⊥` at a prescribed residual.
#[derive(Debug, Clone)]
pub struct Perturbed {
    pub psi: CVector,
    pub mixing: f64,
    pub rayleigh: f64,
    pub residual: f64,
}

/// Unit vector orthogonal to `v`, drawn from stream `PERTURBATION_STREAM` of `seed`.
fn orthogonal_direction(v: &CVector, seed: u64) -> CVector {
    let mut rng = stream_rng(seed, PERTURBATION_STREAM);
    loop {
        let g = CVector::from_fn(v.len(), |_, _| {
            Complex64::new(StandardNormal.sample(&mut rng), StandardNormal.sample(&mut rng))
        });
        let w = &g - v * v.dotc(&g);
        let norm = w.norm();
        if norm > 1e-8 {
            return w / Complex64::new(norm, 0.0);
        }
    }
}

fn mix(v: &CVector, w: &CVector, s: f64) -> CVector {
    v * Complex64::new((1.0 - s * s).max(0.0).sqrt(), 0.0) + w * Complex64::new(s, 0.0)
}

/// Mix the target eigenvector with a seeded orthogonal direction until the
/// Rayleigh residual equals `delta`.
///
/// The mixing weight is found by scanning `s ∈ [0, 1]` for the first crossing
/// and bisecting inside it.
pub fn perturb_to_residual(instance: &Instance, delta: f64, seed: u64) -> Result<Perturbed> {
    let v = &instance.eigenvector;
    if delta < 0.0 {
        return Err(Error::InvalidArgument(format!("residual {delta} is negative")));
    }
    let w = orthogonal_direction(v, seed);
    let eval = |s: f64| -> Result<(CVector, f64, f64)> {
        let psi = mix(v, &w, s);
        let (a, res) = residual_and_rayleigh(&instance.model, &psi, None)?;
        Ok((psi, a, res))
    };
    let (psi0, a0, r0) = eval(0.0)?;
    if delta <= r0 + RESIDUAL_TOL {
        return Ok(Perturbed {
            psi: psi0,
            mixing: 0.0,
            rayleigh: a0,
            residual: r0,
        });
    }
    let mut lo = 0.0;
    let mut max_seen = r0;
    let mut hi = None;
    for i in 1..=SCAN_POINTS {
        let s = i as f64 / SCAN_POINTS as f64;
        let (_, _, r) = eval(s)?;
        max_seen = max_seen.max(r);
        if r >= delta {
            hi = Some(s);
            break;
        }
        lo = s;
    }
    let Some(mut hi) = hi else {
        return Err(Error::UnreachableResidual {
            requested: delta,
            max: max_seen,
        });
    };
    let mut best = eval(hi)?;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let cur = eval(mid)?;
        if cur.2 >= delta {
            hi = mid;
        } else {
            lo = mid;
        }
        if (cur.2 - delta).abs() < (best.2 - delta).abs() {
            best = cur;
        }
        if (best.2 - delta).abs() <= RESIDUAL_TOL || hi - lo < f64::EPSILON {
            break;
        }
    }
    let (psi, rayleigh, residual) = best;
    let mixing = v.dotc(&psi).norm().min(1.0);
    Ok(Perturbed {
        psi,
        mixing: (1.0 - mixing * mixing).max(0.0).sqrt(),
        rayleigh,
        residual,
    })
}
