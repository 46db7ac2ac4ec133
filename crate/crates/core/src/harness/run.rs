use std::collections::BTreeMap;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::{
    self, fit_proportional, loglog_fit, wilson_upper, BoundForm, BoundName, BoundReport,
};
use crate::error::{Error, Result};
use crate::hamiltonian::{phase_dist, spectral_gap};
use crate::linalg::{unitary_eigen, CVector, TWO_PI};
use crate::propagators::{exact_power, kstep_error, trotter_step, Propagator};
use crate::qpe::{
    closed_form_for_state, distribution_from_states, failure_probability, nearest_index,
    qdrift_realization_states, sample_outcomes, simulate_qpe, DistributionSource, MseEstimate,
    OutcomeDistribution,
};
use crate::rng::derive_seed;

use super::config::{ExperimentConfig, ExperimentKind, InstanceConfig, Point};
use super::instance::{build_instance, perturb_to_residual, Instance};

/// z-score of the two-sided 95% interval.
const Z95: f64 = 1.959_963_984_540_054;

/// Realization index reserved for shot sampling within a sweep point.
const SHOT_STREAM: u64 = u64::MAX;

/// Decay rate `q` of the QDRIFT deviation with `r`.
const QDRIFT_Q: f64 = 2.0;

/// Tolerance when comparing `|α̃_j|` against `ξ` within a realization.
const XI_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub index: usize,
    /// `None` when the experiment has no sweep.
    pub sweep_value: Option<f64>,
    pub t: Option<u32>,
    pub n: Option<u32>,
    pub ell: Option<u64>,
    pub seed: u64,
    /// Failure probability (mean over realizations for E4).
    pub measured: Option<f64>,
    pub std_err: Option<f64>,
    pub mse: Option<f64>,
    pub bounds: Vec<BoundReport>,
    pub diagnostics: BTreeMap<String, f64>,
    /// `ok`, or `error: <message>` on a failure marker row.
    pub status: String,
}

impl ResultRow {
    fn blank(point: &Point, seed: u64) -> Self {
        Self {
            index: point.index,
            sweep_value: (!point.sweep_value.is_nan()).then_some(point.sweep_value),
            t: None,
            n: None,
            ell: None,
            seed,
            measured: None,
            std_err: None,
            mse: None,
            bounds: Vec::new(),
            diagnostics: BTreeMap::new(),
            status: "ok".into(),
        }
    }

    fn failed(point: &Point, seed: u64, err: &Error) -> Self {
        Self {
            status: format!("error: {err}"),
            ..Self::blank(point, seed)
        }
    }

    pub fn is_ok(&self) -> bool {
        self.status == "ok"
    }

    fn diag(&mut self, key: &str, value: f64) {
        self.diagnostics.insert(key.to_string(), value);
    }

    fn push(&mut self, report: BoundReport) {
        self.bounds.push(report);
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Provenance {
    pub config: ExperimentConfig,
    pub version: String,
    pub master_seed: u64,
    pub row_seeds: Vec<u64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub kind: ExperimentKind,
    pub sweep_parameter: Option<String>,
    pub rows: Vec<ResultRow>,
    /// Fits across the sweep (order slopes, fitted constants).
    pub summary: BTreeMap<String, f64>,
    pub provenance: Provenance,
}

impl ExperimentResult {
    pub fn failed_rows(&self) -> usize {
        self.rows.iter().filter(|r| !r.is_ok()).count()
    }
}

fn bound(name: BoundName, params: &[(&str, f64)]) -> Result<BoundReport> {
    bounds::report(name, params)
}

fn combined_flag(form: BoundForm) -> f64 {
    match form {
        BoundForm::PaperStated => 0.0,
        BoundForm::Combined => 1.0,
    }
}

/// `(t, n, ℓ)` once `t` is known; `n` defaults to `t − 2`.
fn radius(t: u32, n: Option<u32>) -> Result<(u32, u64)> {
    let n = n.unwrap_or(t.saturating_sub(2));
    if n == 0 || n >= t {
        return Err(Error::InvalidArgument(format!(
            "failure radius needs 1 <= n < t (n = {n}, t = {t})"
        )));
    }
    Ok((n, 1u64 << (t - n)))
}

fn record_register(row: &mut ResultRow, t: u32, n: u32, ell: u64) {
    row.t = Some(t);
    row.n = Some(n);
    row.ell = Some(ell);
}

fn record_shots(
    row: &mut ResultRow,
    dist: &OutcomeDistribution,
    b: usize,
    ell: u64,
    shots: u64,
    seed: u64,
) {
    if shots == 0 {
        return;
    }
    let hist = sample_outcomes(dist, shots, derive_seed(seed, SHOT_STREAM));
    let n = dist.size();
    let misses: u64 = hist
        .iter()
        .filter(|(&j, _)| {
            let diff = j.abs_diff(b);
            diff.min(n - diff) as u64 > ell
        })
        .map(|(_, &c)| c)
        .sum();
    row.diag("shot_failure", misses as f64 / shots as f64);
}

fn flag_vacuous(row: &mut ResultRow) {
    let vacuous = row
        .bounds
        .iter()
        .filter(|b| b.quantity.ends_with("failure") && b.value > 1.0)
        .count();
    row.diag("vacuous_bounds", vacuous as f64);
}

struct Context<'a> {
    config: &'a ExperimentConfig,
    instance: &'a Instance,
    /// Seed for the fixed perturbation direction (E2).
    perturbation_seed: u64,
}

fn run_exact(ctx: &Context, point: &Point, row: &mut ResultRow) -> Result<()> {
    let inst = ctx.instance;
    let t = match point.t {
        Some(t) => t,
        None => bounds::thm1_qubits(point.n.expect("validated"), point.eps.expect("validated"))?,
    };
    let (n, ell) = radius(t, point.n)?;
    record_register(row, t, n, ell);
    let psi = &inst.eigenvector;
    // exact regime: the closed form is the measurement, the FFT simulation its check
    let dist = closed_form_for_state(&inst.spectrum, psi, t)?;
    let simulated = simulate_qpe(&Propagator::exact(&inst.spectrum), psi, t)?;
    let (b, offset) = nearest_index(inst.target_phase(), t);
    let failure = dist.failure_probability(b, ell as usize);
    row.measured = Some(failure);
    row.diag("phase_offset", offset);
    row.diag("simulation_max_diff", dist.max_abs_diff(&simulated));
    row.push(bound(BoundName::Thm1, &[("ell", ell as f64)])?.with_measured(failure));
    if let Some(eps) = point.eps {
        row.push(bound(BoundName::Thm1, &[("n", n as f64), ("eps", eps)])?);
        row.diag("eps", eps);
    }
    record_shots(row, &dist, b, ell, ctx.config.shots, row.seed);
    Ok(())
}

fn run_residual(ctx: &Context, point: &Point, row: &mut ResultRow) -> Result<()> {
    let inst = ctx.instance;
    let target = inst.target_phase();
    let cluster = inst.spectrum.cluster_of(inst.eigen_index);
    let base_gap = TWO_PI * spectral_gap(&inst.spectrum, target, &cluster)?;
    let requested = point.residual.expect("validated")
        * if ctx.config.residual_relative { base_gap } else { 1.0 };
    let pert = perturb_to_residual(inst, requested, ctx.perturbation_seed)?;
    let rest: Vec<f64> = (0..inst.spectrum.dim())
        .filter(|i| !cluster.contains(i))
        .map(|i| inst.spectrum.phases[i])
        .collect();
    // eigenvalue gap measured from the Rayleigh quotient, modulo 2π
    let gap = TWO_PI * crate::hamiltonian::phase_dist_to_set(pert.rayleigh / TWO_PI, &rest)?;
    let delta = pert.residual;
    let t = match point.t {
        Some(t) => t,
        None => bounds::thm2_qubits(
            point.n.expect("validated"),
            point.eps.expect("validated"),
            delta,
            gap,
            BoundForm::Combined,
        )?,
    };
    let (n, ell) = radius(t, point.n)?;
    record_register(row, t, n, ell);
    let dist = closed_form_for_state(&inst.spectrum, &pert.psi, t)?;
    let simulated = simulate_qpe(&Propagator::exact(&inst.spectrum), &pert.psi, t)?;
    let (b, offset) = nearest_index(target, t);
    let failure = dist.failure_probability(b, ell as usize);
    let overlap = inst.spectrum.cluster_weight(&pert.psi, inst.eigen_index);
    row.measured = Some(failure);
    row.diag("residual", delta);
    row.diag("requested_residual", requested);
    row.diag("gap", gap);
    row.diag("rayleigh", pert.rayleigh);
    row.diag("mixing", pert.mixing);
    row.diag("overlap", overlap);
    row.diag("phase_offset", offset);
    row.diag("simulation_max_diff", dist.max_abs_diff(&simulated));
    for form in [BoundForm::PaperStated, BoundForm::Combined] {
        let params = [
            ("ell", ell as f64),
            ("delta", delta),
            ("gap", gap),
            ("combined", combined_flag(form)),
        ];
        row.push(bound(BoundName::Thm2, &params)?.with_measured(failure));
    }
    row.push(bound(BoundName::Lemma1Overlap, &[("err", delta), ("gap", gap)])?.with_measured(overlap));
    if let Some(eps) = point.eps {
        for form in [BoundForm::PaperStated, BoundForm::Combined] {
            let params = [
                ("n", n as f64),
                ("eps", eps),
                ("delta", delta),
                ("gap", gap),
                ("combined", combined_flag(form)),
            ];
            row.push(bound(BoundName::Thm2, &params)?);
        }
        row.diag("eps", eps);
    }
    record_shots(row, &dist, b, ell, ctx.config.shots, row.seed);
    Ok(())
}

fn run_trotter(ctx: &Context, point: &Point, row: &mut ResultRow) -> Result<()> {
    let inst = ctx.instance;
    let order = ctx.config.trotter();
    let r = point.steps.expect("validated");
    let tau = 1.0 / r as f64;
    let psi = &inst.eigenvector;
    let target = inst.target_phase();
    let prop = Propagator::trotter(&inst.model, order, r)?;
    let err = kstep_error(&inst.spectrum, psi, &prop, 1)?;
    // one step of length τ against e^{iτH}
    let exact_step: CVector = {
        let coeffs = inst.spectrum.eigenvectors.adjoint() * psi;
        let rotated = CVector::from_iterator(
            coeffs.len(),
            coeffs
                .iter()
                .zip(&inst.spectrum.phases)
                .map(|(c, &p)| c * Complex64::from_polar(1.0, TWO_PI * p * tau)),
        );
        &inst.spectrum.eigenvectors * rotated
    };
    let local_err = (exact_step - trotter_step(&inst.model, tau, order) * psi).norm();

    let Propagator::Trotter(trotter) = &prop else {
        unreachable!("constructed as a Trotter propagator")
    };
    let (vphases, chi) = unitary_eigen(&trotter.unit);
    let (m, closest) = vphases
        .iter()
        .enumerate()
        .map(|(i, &e)| (i, phase_dist(e, target)))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .expect("nonempty spectrum");
    let gap = vphases
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != m)
        .map(|(_, &e)| phase_dist(e, target))
        .fold(f64::INFINITY, f64::min);
    let overlap = chi.column(m).dotc(psi).norm_sqr();

    let t = match point.t {
        Some(t) => t,
        None => bounds::thm3_qubits(
            point.n.expect("validated"),
            point.eps.expect("validated"),
            err,
            gap,
            BoundForm::Combined,
        )?,
    };
    let (n, ell) = radius(t, point.n)?;
    record_register(row, t, n, ell);
    let dist = simulate_qpe(&prop, psi, t)?;
    let (b, offset) = nearest_index(target, t);
    let failure = dist.failure_probability(b, ell as usize);
    row.measured = Some(failure);
    row.diag("tau", tau);
    row.diag("onestep_err", err);
    row.diag("local_err", local_err);
    row.diag("eigenphase_dist", closest);
    row.diag("gap", gap);
    row.diag("overlap", overlap);
    row.diag("phase_offset", offset);
    row.push(bound(BoundName::Mmin, &[("err", err)])?.with_measured(closest));
    if err < 2.0 * gap {
        row.push(bound(BoundName::Lemma2Overlap, &[("err", err), ("gap", gap)])?.with_measured(overlap));
    }
    for form in [BoundForm::PaperStated, BoundForm::Combined] {
        let params = [
            ("ell", ell as f64),
            ("err", err),
            ("gap", gap),
            ("combined", combined_flag(form)),
        ];
        row.push(bound(BoundName::Thm3, &params)?.with_measured(failure));
    }
    if let Some(eps) = point.eps {
        for form in [BoundForm::PaperStated, BoundForm::Combined] {
            let params = [
                ("n", n as f64),
                ("eps", eps),
                ("err", err),
                ("gap", gap),
                ("combined", combined_flag(form)),
            ];
            row.push(bound(BoundName::Thm3, &params)?);
        }
        row.diag("eps", eps);
    }
    record_shots(row, &dist, b, ell, ctx.config.shots, row.seed);
    Ok(())
}

/// Everything kept from one QDRIFT realization.
struct Realization {
    dist: OutcomeDistribution,
    failure: f64,
    /// `‖w_k − U^k ψ‖²` for every `k`.
    squared_errors: Vec<f64>,
    xi: f64,
    max_alpha: f64,
}

struct QDriftPlan {
    t: u32,
    n: u32,
    ell: u64,
    steps: u64,
    b: usize,
}

fn plan_qdrift(ctx: &Context, point: &Point) -> Result<QDriftPlan> {
    let t = match point.t {
        Some(t) => t,
        None => bounds::thm4_t_min(point.n.expect("validated"), point.eps.expect("validated"))?,
    };
    let (n, ell) = radius(t, point.n)?;
    let (b, _) = nearest_index(ctx.instance.target_phase(), t);
    Ok(QDriftPlan {
        t,
        n,
        ell,
        steps: point.steps.expect("validated"),
        b,
    })
}

fn run_realization(ctx: &Context, plan: &QDriftPlan, seed: u64) -> Result<Realization> {
    let inst = ctx.instance;
    let psi = &inst.eigenvector;
    let states = qdrift_realization_states(
        &inst.model,
        psi,
        plan.t,
        plan.steps,
        seed,
        ctx.config.mode,
    )?;
    let dist = distribution_from_states(&states, plan.t, DistributionSource::QdriftRealization { seed })?;
    let failure = failure_probability(&dist, plan.b, plan.ell as usize);
    let squared_errors = states
        .iter()
        .enumerate()
        .map(|(k, w)| (w - exact_power(&inst.spectrum, psi, k as u64)).norm_squared())
        .collect();
    let xi = bounds::xi_from_states(&inst.spectrum, psi, &states, plan.b);
    let max_alpha = xi.alpha_tilde.iter().map(|a| a.norm()).fold(0.0, f64::max);
    Ok(Realization {
        dist,
        failure,
        squared_errors,
        xi: xi.xi,
        max_alpha,
    })
}

fn summarize_qdrift(
    ctx: &Context,
    point: &Point,
    plan: &QDriftPlan,
    realizations: &[Realization],
    row: &mut ResultRow,
) -> Result<()> {
    let inst = ctx.instance;
    let lambda = inst.model.lambda();
    let count = realizations.len();
    record_register(row, plan.t, plan.n, plan.ell);
    let failures: Vec<f64> = realizations.iter().map(|r| r.failure).collect();
    let failure = MseEstimate::from_samples(&failures);
    row.measured = Some(failure.mean);
    row.std_err = Some(failure.std_err);
    row.diag("wilson_upper", wilson_upper(failure.mean, count, Z95));
    row.diag("realizations", count as f64);
    row.diag("steps", plan.steps as f64);
    row.diag("lambda", lambda);

    let powers = 1usize << plan.t;
    let mse_by_k: Vec<f64> = (0..powers)
        .map(|k| realizations.iter().map(|r| r.squared_errors[k]).sum::<f64>() / count as f64)
        .collect();
    let k_max = powers - 1;
    let mse = mse_by_k[k_max];
    row.mse = Some(mse);
    let xs: Vec<f64> = (1..powers)
        .map(|k| lambda * lambda * k as f64 / plan.steps as f64)
        .collect();
    let c_est = fit_proportional(&xs, &mse_by_k[1..])?;
    row.diag("c_est", c_est);

    let xis: Vec<f64> = realizations.iter().map(|r| r.xi).collect();
    let xi = MseEstimate::from_samples(&xis);
    row.diag("xi_mean", xi.mean);
    row.diag("xi_std_err", xi.std_err);
    let alpha_violations = realizations
        .iter()
        .filter(|r| r.max_alpha > r.xi + XI_TOL)
        .count();
    row.diag("xi_alpha_violations", alpha_violations as f64);

    let r = plan.steps as f64;
    let k = k_max as f64;
    row.push(
        bound(BoundName::Mse, &[("c_est", c_est), ("lambda", lambda), ("r", r), ("k", k)])?
            .with_measured(mse),
    );
    let sigma = bound(
        BoundName::Thm4,
        &[("t", plan.t as f64), ("c_est", c_est), ("lambda", lambda), ("r", r), ("q", QDRIFT_Q)],
    )?;
    let sigma_sq = sigma.value;
    row.push(sigma.with_measured(xi.mean));
    row.push(
        bound(BoundName::Thm4, &[("ell", plan.ell as f64), ("sigma_t_sq", sigma_sq)])?
            .with_measured(failure.mean),
    );
    if let Some(eps) = point.eps {
        let n = plan.n as f64;
        row.push(
            bound(BoundName::Thm4, &[("n", n), ("eps", eps), ("lambda", lambda), ("q", QDRIFT_Q)])?
                .with_measured(r),
        );
        row.push(bound(BoundName::Thm4, &[("n", n), ("eps", eps)])?.with_measured(plan.t as f64));
        let exceed = realizations
            .iter()
            .filter(|x| x.squared_errors[k_max].sqrt() >= eps)
            .count() as f64
            / count as f64;
        row.push(bound(BoundName::Markov, &[("mse", mse), ("eps", eps)])?.with_measured(exceed));
        row.diag("eps", eps);
    }
    if ctx.config.shots > 0 {
        let dists: Vec<OutcomeDistribution> = realizations.iter().map(|r| r.dist.clone()).collect();
        let mean = OutcomeDistribution::average(&dists)?;
        record_shots(row, &mean, plan.b, plan.ell, ctx.config.shots, row.seed);
    }
    Ok(())
}

fn run_point(ctx: &Context, point: &Point, seed: u64) -> ResultRow {
    let mut row = ResultRow::blank(point, seed);
    let outcome = match ctx.config.kind {
        ExperimentKind::Exact => run_exact(ctx, point, &mut row),
        ExperimentKind::Residual => run_residual(ctx, point, &mut row),
        ExperimentKind::Trotter => run_trotter(ctx, point, &mut row),
        ExperimentKind::QDrift => unreachable!("QDRIFT points run per realization"),
    };
    match outcome {
        Ok(()) => {
            flag_vacuous(&mut row);
            row
        }
        Err(e) => ResultRow::failed(point, seed, &e),
    }
}

fn run_qdrift_points(ctx: &Context, points: &[Point], seeds: &[u64]) -> Vec<ResultRow> {
    let plans: Vec<Result<QDriftPlan>> = points.iter().map(|p| plan_qdrift(ctx, p)).collect();
    let count = ctx.config.realizations;
    let tasks: Vec<(usize, usize)> = plans
        .iter()
        .enumerate()
        .filter(|(_, p)| p.is_ok())
        .flat_map(|(i, _)| (0..count).map(move |j| (i, j)))
        .collect();
    let outcomes: Vec<Result<Realization>> = tasks
        .par_iter()
        .map(|&(i, j)| {
            let plan = plans[i].as_ref().expect("filtered");
            run_realization(ctx, plan, derive_seed(seeds[i], j as u64))
        })
        .collect();
    let mut grouped: Vec<Vec<Result<Realization>>> = (0..points.len()).map(|_| Vec::new()).collect();
    for ((i, _), outcome) in tasks.iter().zip(outcomes) {
        grouped[*i].push(outcome);
    }
    points
        .iter()
        .zip(plans)
        .zip(grouped)
        .zip(seeds)
        .map(|(((point, plan), outcomes), &seed)| {
            let result = plan.and_then(|plan| {
                let realizations = outcomes.into_iter().collect::<Result<Vec<_>>>()?;
                let mut row = ResultRow::blank(point, seed);
                summarize_qdrift(ctx, point, &plan, &realizations, &mut row)?;
                flag_vacuous(&mut row);
                Ok(row)
            });
            result.unwrap_or_else(|e| ResultRow::failed(point, seed, &e))
        })
        .collect()
}

/// Log-log slope of a diagnostic against a positive abscissa over the ok rows.
fn slope(rows: &[ResultRow], x: impl Fn(&ResultRow) -> Option<f64>, y: impl Fn(&ResultRow) -> Option<f64>) -> Option<f64> {
    let (xs, ys): (Vec<f64>, Vec<f64>) = rows
        .iter()
        .filter(|r| r.is_ok())
        .filter_map(|r| Some((x(r)?, y(r)?)))
        .filter(|(x, y)| *x > 0.0 && *y > 0.0)
        .unzip();
    loglog_fit(&xs, &ys).ok().map(|(s, _)| s)
}

fn summarize(kind: ExperimentKind, rows: &[ResultRow]) -> BTreeMap<String, f64> {
    let mut summary = BTreeMap::new();
    let diag = |key: &'static str| move |r: &ResultRow| r.diagnostics.get(key).copied();
    let mut put = |key: &str, v: Option<f64>| {
        if let Some(v) = v {
            summary.insert(key.to_string(), v);
        }
    };
    match kind {
        ExperimentKind::Trotter => {
            put("onestep_err_slope_vs_tau", slope(rows, diag("tau"), diag("onestep_err")));
            put("local_err_slope_vs_tau", slope(rows, diag("tau"), diag("local_err")));
        }
        ExperimentKind::QDrift => {
            put("mse_slope_vs_steps", slope(rows, diag("steps"), |r| r.mse));
            put("xi_slope_vs_steps", slope(rows, diag("steps"), diag("xi_mean")));
            let ok: Vec<&ResultRow> = rows.iter().filter(|r| r.is_ok()).collect();
            if !ok.is_empty() {
                let xs: Vec<f64> = ok
                    .iter()
                    .map(|r| {
                        let lambda = r.diagnostics["lambda"];
                        let k = ((1u64 << r.t.unwrap_or(0)) - 1) as f64;
                        lambda * lambda * k / r.diagnostics["steps"]
                    })
                    .collect();
                let ys: Vec<f64> = ok.iter().map(|r| r.mse.unwrap_or(0.0)).collect();
                put("c_est", fit_proportional(&xs, &ys).ok());
            }
        }
        ExperimentKind::Exact | ExperimentKind::Residual => {}
    }
    let failed = rows.iter().filter(|r| !r.is_ok()).count();
    summary.insert("failed_rows".into(), failed as f64);
    summary
}

/// Run every sweep point of `config` on a pool of `threads` workers
/// (`0` picks the rayon default).
///
/// Results never depend on `threads`: every task draws from its own seeded
/// stream and results are gathered in index order. Errors at a sweep point
/// become failure marker rows; only an invalid config or instance aborts.
pub fn run_experiment(config: &ExperimentConfig, threads: usize) -> Result<ExperimentResult> {
    config.validate()?;
    let instance = build_instance(&config.instance)?;
    let perturbation_seed = match &config.instance {
        InstanceConfig::Random(spec) => spec.seed,
        InstanceConfig::Inline { .. } => config.master_seed,
    };
    let ctx = Context {
        config,
        instance: &instance,
        perturbation_seed,
    };
    let points = config.points();
    let seeds: Vec<u64> = points
        .iter()
        .map(|p| derive_seed(config.master_seed, p.index as u64))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::InvalidArgument(format!("cannot start worker pool: {e}")))?;
    let rows = pool.install(|| match config.kind {
        ExperimentKind::QDrift => run_qdrift_points(&ctx, &points, &seeds),
        _ => points
            .par_iter()
            .zip(seeds.par_iter())
            .map(|(p, &s)| run_point(&ctx, p, s))
            .collect(),
    });
    Ok(ExperimentResult {
        kind: config.kind,
        sweep_parameter: config.sweep.as_ref().map(|s| s.parameter.as_str().to_string()),
        summary: summarize(config.kind, &rows),
        rows,
        provenance: Provenance {
            config: config.clone(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            master_seed: config.master_seed,
            row_seeds: seeds,
        },
    })
}
