mod common;

use common::{fixture, max_min_leader};
use mtd_core::{
    evaluate_strategy, simulate, solve_stackelberg, subset_analysis, MixedStrategy,
    ObservationWindow, Policy, SimulationConfig,
};

fn three_sigma(p: f64, rounds: u64) -> f64 {
    3.0 * (p * (100.0 - p) / rounds as f64).sqrt()
}

#[test]
fn fixed_policies_follow_the_law_of_large_numbers() {
    let g = fixture("mnist_fgsm");
    let rounds = 40_000;
    for (policy, x) in [
        (Policy::Uniform, MixedStrategy::uniform(3)),
        (Policy::Pure(2), MixedStrategy::pure(3, 2)),
        (
            Policy::Custom(MixedStrategy::new(vec![0.5, 0.25, 0.25]).unwrap()),
            MixedStrategy::new(vec![0.5, 0.25, 0.25]).unwrap(),
        ),
    ] {
        for alpha in [0.0, 0.5, 1.0] {
            let r = simulate(
                &g,
                &SimulationConfig::new(rounds, 99, alpha, policy.clone()),
            )
            .unwrap();
            let analytic = evaluate_strategy(&g, &x, alpha).unwrap().objective;
            assert!(
                (r.empirical_accuracy - analytic).abs() < three_sigma(analytic, rounds),
                "{policy:?} alpha {alpha}: {} vs {analytic}",
                r.empirical_accuracy
            );
        }
    }
}

#[test]
fn uniform_policy_is_worse_than_equilibrium_under_attack() {
    let g = fixture("mnist_fgsm");
    let rounds = 100_000;
    let uni = simulate(&g, &SimulationConfig::new(rounds, 5, 1.0, Policy::Uniform)).unwrap();
    let eq = simulate(
        &g,
        &SimulationConfig::new(rounds, 5, 1.0, Policy::Equilibrium),
    )
    .unwrap();
    let u = uni.empirical_accuracy_adversarial.unwrap();
    let e = eq.empirical_accuracy_adversarial.unwrap();
    assert!((u - 24.53).abs() < 0.5, "{u}");
    assert!(u < e);
    // attacker settles on FGSM_MLP against the uniform mix
    assert!(uni.per_attack_usage["FGSM_MLP"] > 99_000);
}

#[test]
fn estimate_error_shrinks_with_history() {
    let g = fixture("imagenet_up");
    let short = simulate(&g, &SimulationConfig::new(200, 1, 1.0, Policy::Equilibrium)).unwrap();
    let long = simulate(
        &g,
        &SimulationConfig::new(100_000, 1, 1.0, Policy::Equilibrium),
    )
    .unwrap();
    assert!(long.attacker_strategy_estimate_error < 0.02);
    assert!(long.attacker_strategy_estimate_error < short.attacker_strategy_estimate_error);
}

#[test]
fn short_window_attacker_exploits_recent_history() {
    // A one-round memory attacker against a pure-ish policy always guesses
    // the last config, which for a pure policy is exactly right.
    let g = fixture("mnist_fgsm");
    let cfg = SimulationConfig {
        observation_window: ObservationWindow::Last(1),
        ..SimulationConfig::new(20_000, 8, 1.0, Policy::Pure(0))
    };
    let r = simulate(&g, &cfg).unwrap();
    assert!(r.per_attack_usage["FGSM_CNN"] >= 19_999);
    let acc = r.empirical_accuracy_adversarial.unwrap();
    assert!((acc - 11.63).abs() < three_sigma(11.63, 20_000));
}

#[test]
fn report_serializes_identically_for_the_same_seed() {
    let g = fixture("mnist_fgsm");
    let cfg = SimulationConfig::new(10_000, 1234, 0.4, Policy::Equilibrium);
    let a = serde_json::to_string(&simulate(&g, &cfg).unwrap()).unwrap();
    let b = serde_json::to_string(&simulate(&g, &cfg).unwrap()).unwrap();
    assert_eq!(a, b);
}

#[test]
fn subset_values_grow_with_ensemble_size() {
    let g = fixture("imagenet_up");
    let alphas = [0.0, 0.25, 0.5, 0.75, 1.0];
    let res = subset_analysis(&g, &alphas).unwrap();
    assert_eq!(res.len(), 6 * alphas.len());
    for (i, &a) in alphas.iter().enumerate() {
        let series: Vec<f64> = res
            .iter()
            .skip(i)
            .step_by(alphas.len())
            .map(|r| r.objective)
            .collect();
        assert!(res
            .iter()
            .skip(i)
            .step_by(alphas.len())
            .all(|r| r.alpha == a));
        for w in series.windows(2) {
            assert!(w[1] >= w[0] - 1e-9, "alpha {a}: {series:?}");
        }
    }
    let single_clean = &res[0];
    assert_eq!(single_clean.configs, vec!["ResNet-152"]);
    assert!((single_clean.objective - 95.5).abs() < 1e-9);

    let full = res.iter().find(|r| r.size == 6 && r.alpha == 1.0).unwrap();
    let eq = solve_stackelberg(&g, 1.0).unwrap();
    assert!((full.objective - eq.objective).abs() < 1e-9);
}

#[test]
fn single_network_value_under_attack_is_max_min() {
    let g = fixture("imagenet_up");
    let res = subset_analysis(&g, &[1.0]).unwrap();
    let (oracle, row) = max_min_leader(&g);
    assert!((res[0].objective - oracle).abs() < 1e-9);
    assert_eq!(res[0].configs, vec![g.configs()[row].label.clone()]);
    assert!((oracle - 22.2).abs() < 1e-9);
    assert_eq!(res[0].configs, vec!["VGG-19"]);
}

/// A figure of 21.1 has been quoted for the best single network under attack.
/// That is GoogLeNet's worst-case column, not the max-min over networks
/// (VGG-19 keeps 22.2), so this assertion cannot hold for the shipped matrix.
#[test]
#[ignore = "quoted value 21.1 disagrees with the max-min of the shipped matrix (22.2)"]
fn single_network_value_quoted_as_21_1() {
    let g = fixture("imagenet_up");
    let res = subset_analysis(&g, &[1.0]).unwrap();
    assert!(
        (res[0].objective - 21.1).abs() < 1e-6,
        "got {}",
        res[0].objective
    );
}
