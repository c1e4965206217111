use hgl_core::evolution::{amplitude_sweep, evolve, EvolutionConfig, Outcome};
use hgl_core::stationary::{ForcingShape, ProblemSpec};
use hgl_core::{BoundaryCondition, GridSpec};

fn setup(bc: BoundaryCondition) -> (ProblemSpec, hgl_core::GridField2D) {
    let grid = GridSpec::unit_square(33).unwrap();
    (ProblemSpec::with_shape(grid, bc, ForcingShape::Sine, 0.0).unwrap(), ForcingShape::Sine.sample(grid, bc))
}

#[test]
fn large_data_blows_up_small_data_decays() {
    for bc in [BoundaryCondition::Navier, BoundaryCondition::Dirichlet] {
        let (spec, phi) = setup(bc);
        let big = evolve(&EvolutionConfig::new(spec.clone(), phi.scaled(1e3), 1e-6, 1e-2)).unwrap();
        assert_eq!(big.outcome, Outcome::BlowUp, "{bc:?}");
        assert!(big.sobolev22.last().unwrap() >= &big.blowup_norm_cap);
        let t_end = *big.times.last().unwrap();
        assert!(big.t_star_estimate.unwrap() >= t_end && t_end < 1e-2);

        let small = evolve(&EvolutionConfig::new(spec, phi.scaled(1e-2), 1e-3, 5.0)).unwrap();
        assert_eq!(small.outcome, Outcome::Decayed, "{bc:?}");
        assert!(small.sobolev22.last().unwrap() <= &1e-8);
        assert!(small.sobolev22.windows(2).all(|w| w[1] < w[0]));
    }
}

#[test]
fn outcome_is_monotone_in_amplitude() {
    for bc in [BoundaryCondition::Navier, BoundaryCondition::Dirichlet] {
        let (spec, phi) = setup(bc);
        let amps: Vec<f64> = (0..9).map(|k| 10f64.powf(-1.0 + 0.375 * k as f64)).collect();
        let outcomes: Vec<Outcome> = amplitude_sweep(&spec, &phi, &amps, 1e-4, 2.0).into_iter().map(|(_, o)| o.unwrap()).collect();
        assert!(outcomes.iter().all(|o| matches!(o, Outcome::Decayed | Outcome::BlowUp)), "{outcomes:?}");
        let first_blow = outcomes.iter().position(|o| *o == Outcome::BlowUp).expect("largest amplitude blows up");
        assert!(first_blow > 0, "{outcomes:?}");
        assert!(outcomes[first_blow..].iter().all(|o| *o == Outcome::BlowUp), "{bc:?} {outcomes:?}");
    }
}

#[test]
fn snapshots_and_csv() {
    let (spec, phi) = setup(BoundaryCondition::Dirichlet);
    let cfg = EvolutionConfig { snapshot_every: 4, ..EvolutionConfig::new(spec, phi.scaled(0.1), 1e-3, 1e-2) };
    let tr = evolve(&cfg).unwrap();
    assert_eq!(tr.outcome, Outcome::ReachedHorizon);
    let times: Vec<f64> = tr.snapshots.iter().map(|(t, _)| *t).collect();
    assert_eq!(times.len(), 4);
    assert_eq!(times[0], 0.0);
    assert!((times[3] - 1e-2).abs() < 1e-15);
    let csv = tr.to_csv();
    assert!(csv.starts_with("t,sobolev22,energy\n"));
    assert_eq!(csv.lines().count(), tr.times.len() + 1);
}
