use phase_lab::bounds::{xi_diagnostic, xi_from_states};
use phase_lab::harness::config::RandomInstance;
use phase_lab::harness::random_instance;
use phase_lab::propagators::QDriftMode;
use phase_lab::qpe::{nearest_index, qdrift_realization_states};

fn instance(num_terms: usize, seed: u64) -> phase_lab::harness::Instance {
    random_instance(&RandomInstance {
        dim: 4,
        num_terms,
        norm_scale: 0.5,
        seed,
        eigen_index: 1,
    })
    .unwrap()
}

#[test]
fn single_term_has_no_deviation() {
    let inst = instance(1, 4);
    let est = xi_diagnostic(&inst.model, &inst.spectrum, &inst.eigenvector, 4, 16, 5, 1).unwrap();
    assert!(est.mean < 1e-12, "{}", est.mean);
}

#[test]
fn xi_dominates_every_amplitude_perturbation() {
    let inst = instance(3, 7);
    let t = 5;
    let (b, _) = nearest_index(inst.target_phase(), t);
    for seed in 0..20 {
        let states =
            qdrift_realization_states(&inst.model, &inst.eigenvector, t, 32, seed, QDriftMode::Prefix)
                .unwrap();
        let s = xi_from_states(&inst.spectrum, &inst.eigenvector, &states, b);
        assert!(s.xi > 0.0);
        for a in &s.alpha_tilde {
            assert!(a.norm() <= s.xi + 1e-12);
        }
    }
}

#[test]
fn xi_shrinks_with_more_steps() {
    let inst = instance(2, 9);
    let psi = &inst.eigenvector;
    let coarse = xi_diagnostic(&inst.model, &inst.spectrum, psi, 4, 64, 200, 3).unwrap();
    let fine = xi_diagnostic(&inst.model, &inst.spectrum, psi, 4, 256, 200, 3).unwrap();
    let ratio = fine.mean / coarse.mean;
    assert!(ratio <= 0.6, "ratio {ratio}");
}
