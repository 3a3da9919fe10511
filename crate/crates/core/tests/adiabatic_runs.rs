use odd_walk::{evolve_protocol, fidelity_ensemble, lambda_for_duration, DisorderSpec, ProtocolRun, ProtocolSpec};

fn clean(n: usize) -> DisorderSpec {
    DisorderSpec::new(n, 0.0, 0.0, 1)
}

#[test]
fn infidelity_shrinks_with_duration_on_a_clean_chain() {
    for make in [
        |t: usize| ProtocolSpec::exponential(clean(18), t, lambda_for_duration(t)),
        |t: usize| ProtocolSpec::constant_rate(clean(18), t),
    ] {
        let loss: Vec<f64> = [90, 240, 1000, 4000]
            .iter()
            .map(|&t| 1.0 - evolve_protocol(&make(t), 0).unwrap().final_overlap())
            .collect();
        assert!(loss.windows(2).all(|w| w[1] < w[0]), "{loss:?}");
        assert!(loss[3] < 1e-3, "{loss:?}");
    }
}

#[test]
fn trace_starts_in_the_instantaneous_zero_mode() {
    let spec = ProtocolSpec::exponential(DisorderSpec::new(18, 0.0, 0.7, 3), 90, 0.0562);
    let trace = evolve_protocol(&spec, 0).unwrap();
    assert_eq!(trace.steps.len(), 91);
    assert!((trace.steps[0].overlap - 1.0).abs() < 1e-12);
    assert!((trace.final_state.norm() - 1.0).abs() < 1e-12);
    assert!(trace.steps.iter().all(|s| (0.0..=1.0).contains(&s.overlap)));
    assert!(trace.steps.windows(2).all(|w| w[1].theta_tilde < w[0].theta_tilde));
}

#[test]
fn duration_sets_the_end_angle() {
    for t in [90, 150, 240] {
        let spec = ProtocolSpec::exponential(clean(10), t, lambda_for_duration(t));
        assert!((spec.theta_tilde(t) - 0.01).abs() < 1e-12);
        assert_eq!(ProtocolSpec::constant_rate(clean(10), t).theta_tilde(t), 0.0);
    }
}

#[test]
fn ensemble_agrees_with_single_runs() {
    let spec = ProtocolSpec::exponential(DisorderSpec::new(12, 0.0, 0.7, 8), 60, lambda_for_duration(60));
    let rows = fidelity_ensemble(&spec, 5).unwrap();
    for r in &rows {
        let single = evolve_protocol(&spec, r.realization).unwrap();
        assert!((single.final_overlap() - r.final_overlap).abs() < 1e-13);
        assert_eq!(single.mean_delta, r.mean_delta);
        let run = ProtocolRun::new(&spec, r.realization).unwrap();
        assert_eq!(run.final_state().unwrap(), single.final_state);
    }
}

#[test]
fn protocols_require_a_pinned_start() {
    let mut spec = ProtocolSpec::exponential(DisorderSpec::new(12, 0.0, 0.7, 8), 60, 0.05);
    spec.disorder.pin_first_site = false;
    assert!(spec.validate().is_err());
    assert!(ProtocolSpec::exponential(DisorderSpec::new(1, 0.0, 0.7, 8), 60, 0.05).validate().is_err());
    assert!(ProtocolSpec::exponential(DisorderSpec::new(12, 0.0, 0.7, 8), 60, -0.05).validate().is_err());
}
