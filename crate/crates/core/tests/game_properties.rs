use potential_play::game::{
    check_potential_identity, coercivity_probe, potential_value, utility_partial, FlowControlGame, JointAction,
    PotentialGame, QuadraticGame,
};
use potential_play::Error;
use proptest::prelude::*;

fn naive_phi(h: &[f64], a: &[f64]) -> f64 {
    let s: f64 = h.iter().zip(a).map(|(h, a)| h * a.exp()).sum();
    (1.0 + s).ln() - a.iter().map(|a| 3.0 * (1.0 + a.exp()).ln() - a).sum::<f64>()
}

fn naive_utility(h: &[f64], i: usize, a: &[f64]) -> f64 {
    let others: f64 = (0..h.len()).filter(|&j| j != i).map(|j| h[j] * a[j].exp()).sum();
    (1.0 + h[i] * a[i].exp() / (1.0 + others)).ln() - (3.0 * (1.0 + a[i].exp()).ln() - a[i])
}

fn game_and_point() -> impl Strategy<Value = (Vec<f64>, Vec<f64>, usize, f64)> {
    (1usize..6).prop_flat_map(|n| {
        (
            prop::collection::vec(0.01f64..=1.0, n),
            prop::collection::vec(-5.0f64..5.0, n),
            0..n,
            -5.0f64..5.0,
        )
    })
}

proptest! {
    // a unilateral deviation changes U_i and φ by the same amount
    #[test]
    fn unilateral_deviation_matches_potential((h, a, i, b) in game_and_point()) {
        let game = FlowControlGame::new(h.clone()).unwrap();
        let mut dev = a.clone();
        dev[i] = b;
        let du = game.utility(i, &a) - game.utility(i, &dev);
        let dphi = game.potential(&a) - game.potential(&dev);
        prop_assert!((du - dphi).abs() < 1e-10, "{du} vs {dphi}");
        let oracle = naive_utility(&h, i, &a) - naive_utility(&h, i, &dev);
        prop_assert!((du - oracle).abs() < 1e-10);
    }

    #[test]
    fn closed_forms_agree_with_oracle((h, a, _i, _b) in game_and_point()) {
        let game = FlowControlGame::new(h.clone()).unwrap();
        prop_assert!((game.potential(&a) - naive_phi(&h, &a)).abs() < 1e-10);
    }

    #[test]
    fn partials_are_bounded((h, a, i, _b) in game_and_point()) {
        let game = FlowControlGame::new(h).unwrap();
        let g = game.potential_partial(i, &a);
        prop_assert!(g > -2.0 && g < 2.0);
        prop_assert_eq!(g, game.utility_partial(i, &a));
    }
}

#[test]
fn hand_evaluated_potentials() {
    let one = FlowControlGame::new(vec![1.0]).unwrap();
    let v = potential_value(&one, &JointAction::new(vec![0.0]).unwrap()).unwrap();
    assert!((v + 2.0 * 2f64.ln()).abs() < 1e-12);
    assert!((v - (-1.386294)).abs() < 1e-6);

    let two = FlowControlGame::new(vec![1.0, 1.0]).unwrap();
    let v = potential_value(&two, &JointAction::zeros(2)).unwrap();
    assert!((v - (3f64.ln() - 6.0 * 2f64.ln())).abs() < 1e-12);
    assert!((v - (-3.060270)).abs() < 1e-6);
}

#[test]
fn contract_violations() {
    let game = FlowControlGame::new(vec![1.0, 0.5]).unwrap();
    assert!(matches!(
        potential_value(&game, &JointAction::zeros(3)),
        Err(Error::DimensionMismatch { expected: 2, got: 3 })
    ));
    assert!(matches!(
        utility_partial(&game, 2, &JointAction::zeros(2)),
        Err(Error::AgentOutOfRange { index: 2, n: 2 })
    ));
    assert!(JointAction::new(vec![0.0, f64::NAN]).is_err());
    assert!(FlowControlGame::new(vec![0.0]).is_err());
    assert!(FlowControlGame::new(vec![1.5]).is_err());
}

#[test]
fn quadratic_game_is_its_own_potential() {
    let game = QuadraticGame::new(vec![1.0, -1.0, 2.0]).unwrap();
    let r = check_potential_identity(&game, 200, 5.0, 1).unwrap();
    assert_eq!(r.max_analytic_discrepancy, 0.0);
    assert!(r.max_fd_discrepancy < 1e-6);
    let c = coercivity_probe(&game, 16, 20.0, 100, 1).unwrap();
    assert!(c.t0.is_some());
}

#[test]
fn flow_control_is_coercive() {
    for n in [1, 3, 10] {
        let game = FlowControlGame::new(vec![1.0; n]).unwrap();
        let c = coercivity_probe(&game, 32, 100.0, 200, 7).unwrap();
        assert!(c.t0.is_some(), "N = {n}");
        assert!(c.max_phi_at_t_max < game.potential(&vec![0.0; n]));
    }
}
