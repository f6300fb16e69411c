use approx::assert_abs_diff_eq;

use super::*;
use crate::metric::MetricSpace;

fn circle(m: f64) -> Instance {
    let l = 2.0 * m + 1.0;
    Instance::new(
        MetricSpace::circle(l).unwrap(),
        vec![Point::arc(0.0), Point::arc(2.0 * m)],
        Point::arc(m),
    )
    .unwrap()
}

fn line(xs: &[f64], pred: f64) -> Instance {
    Instance::new(
        MetricSpace::l2(1),
        xs.iter().map(|x| Point::coords(vec![*x])).collect(),
        Point::coords(vec![pred]),
    )
    .unwrap()
}

#[test]
fn circle_profile_is_certified_with_both_interior() {
    let inst = circle(100.0);
    let cert = verify_pne(&inst, &[0.5, 0.5], 0.0, 1e-7 * 100.0).unwrap().unwrap();
    assert_eq!(cert.interior, vec![0, 1]);
    assert_abs_diff_eq!(cert.social_cost, 200.0, epsilon = 1e-9);
    for k in &cert.kappa {
        assert_abs_diff_eq!(*k, 0.0, epsilon = 1e-9);
    }
    assert_eq!(cert.reports[0], Point::arc(99.5));
    assert_eq!(cert.reports[1], Point::arc(100.5));
}

#[test]
fn circle_agent_is_indifferent() {
    let inst = circle(100.0);
    let (class, diag) = best_response_class(0, &inst, &[0.5, 0.5], 0.0, 1e-5).unwrap();
    assert_eq!(class, BestResponse::Indifferent);
    assert_abs_diff_eq!(diag.kappa, 0.0, epsilon = 1e-9);
}

#[test]
fn circle_perturbation_breaks_indifference() {
    let inst = circle(100.0);
    // Moving a report below 0.5 keeps the other agent indifferent; moving it
    // past 0.5 tips the other agent toward its true location.
    assert!(verify_pne(&inst, &[0.4, 0.5], 0.0, 1e-5).unwrap().is_ok());
    let out = verify_pne(&inst, &[0.6, 0.5], 0.0, 1e-5).unwrap();
    let violations = out.unwrap_err();
    assert!(!violations.is_empty());
}

#[test]
fn enumeration_finds_circle_profile() {
    let inst = circle(100.0);
    let certs = find_pne_enumerative(&inst, 0.0, &EnumerationOptions::default()).unwrap();
    assert!(certs
        .iter()
        .any(|c| (c.y[0] - 0.5).abs() < 1e-6 && (c.y[1] - 0.5).abs() < 1e-6));
    for c in &certs {
        assert!(verify_pne(&inst, &c.y, 0.0, c.eps).unwrap().is_ok());
    }
}

#[test]
fn dynamics_from_symmetric_start_stays_on_circle_profile() {
    let inst = circle(100.0);
    let cert = find_pne_dynamics(&inst, 0.0, Some(&[0.5, 0.5]), DynamicsOptions::default())
        .unwrap()
        .unwrap();
    assert_abs_diff_eq!(cert.social_cost, 200.0, epsilon = 1e-9);
}

#[test]
fn grid_search_sees_circle_family() {
    let inst = circle(100.0);
    // Every profile with both reports within 0.5 of the prediction is an
    // equilibrium; on a 64-step grid only y = 0 falls in that family.
    let profiles = brute_force_epsilon_pne(&inst, 0.0, 64, 1e-5).unwrap();
    assert!(profiles.contains(&vec![0.0, 0.0]));
    assert!(profiles.contains(&vec![100.0, 100.0]));
    let game = Game::new(&inst, 0.0).unwrap();
    for y in [[0.25, 0.5], [0.5, 0.1], [0.5, 0.5]] {
        assert!(game.certify(&y, 1e-9).is_ok());
        assert!(is_grid_epsilon_pne(&game, &y, 64, 1e-9));
    }
}

#[test]
fn single_agent_is_truthful() {
    let inst = line(&[3.0], 0.0);
    let certs = find_pne_enumerative(&inst, 1.0, &EnumerationOptions::default()).unwrap();
    assert_eq!(certs.len(), 1);
    assert_eq!(certs[0].truthful, vec![0]);
    let grid = brute_force_epsilon_pne(&inst, 1.0, 8, 1e-9).unwrap();
    assert_eq!(grid, vec![vec![3.0]]);
}

#[test]
fn agent_at_prediction_counts_as_truthful() {
    let inst = line(&[0.0, 0.0], 0.0);
    let (class, _) = best_response_class(0, &inst, &[0.0, 0.0], 1.0, 1e-7).unwrap();
    assert_eq!(class, BestResponse::Truthful);
}

#[test]
fn huge_delta_makes_everyone_truthful() {
    let inst = line(&[0.0, 4.0, 9.0], 3.0);
    let cert = verify_pne(&inst, &[3.0, 1.0, 6.0], 1e6, 1e-6).unwrap().unwrap();
    assert_eq!(cert.truthful.len(), 3);
    let dyn_cert = find_pne_dynamics(&inst, 1e6, None, DynamicsOptions::default())
        .unwrap()
        .unwrap();
    assert_eq!(dyn_cert.truthful.len(), 3);
}

#[test]
fn line_kappa_matches_direct_arithmetic() {
    // l = (0, 10), prediction 10, delta 1, agent 2 truthful (at the prediction).
    let inst = line(&[0.0, 10.0], 10.0);
    let (class, diag) = best_response_class(0, &inst, &[10.0, 0.0], 1.0, 1e-6).unwrap();
    // Truthful: weights 1/11 (cost 0) and 1/1 (cost 10).
    let cost = (10.0 / 1.0) / (1.0 / 11.0 + 1.0);
    assert_abs_diff_eq!(diag.kappa, cost - 11.0, epsilon = 1e-12);
    assert_eq!(class, BestResponse::Truthful);
    // Fine grid over the agent's own path confirms the endpoint minimizer.
    let game = Game::new(&inst, 1.0).unwrap();
    let y = vec![10.0, 0.0];
    let reports = game.reports(&y);
    let best = (0..=100_000)
        .map(|g| {
            let yi = 10.0 * g as f64 / 100_000.0;
            (yi, game.cost_on_path(0, yi, &y, &reports))
        })
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .unwrap();
    assert_abs_diff_eq!(best.0, 10.0, epsilon = 1e-12);
}

#[test]
fn trichotomy_is_sound_on_random_profiles() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
    for _ in 0..40 {
        let n = rng.gen_range(2..5);
        let locs: Vec<Point> = (0..n)
            .map(|_| Point::coords(vec![rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0)]))
            .collect();
        let inst = Instance::new(MetricSpace::l2(2), locs, Point::coords(vec![0.0, 0.0])).unwrap();
        let delta = rng.gen_range(0.0..3.0);
        let game = Game::new(&inst, delta).unwrap();
        let y: Vec<f64> = (0..n).map(|i| rng.gen::<f64>() * game.t(i)).collect();
        let reports = game.reports(&y);
        let eps = game.eps();
        for i in 0..n {
            let (class, _) = best_response_class(i, &inst, &y, delta, eps).unwrap();
            let t = game.t(i);
            let grid = 10_000;
            let costs: Vec<f64> = (0..=grid)
                .map(|g| game.cost_on_path(i, t * g as f64 / grid as f64, &y, &reports))
                .collect();
            let min = costs.iter().copied().fold(f64::INFINITY, f64::min);
            let recommended = match class {
                BestResponse::Truthful => costs[grid],
                BestResponse::Prediction => costs[0],
                BestResponse::Indifferent => costs[grid].min(costs[0]),
            };
            assert!(recommended <= min + eps + 10.0 * t / grid as f64);
            // Cost is monotone along the path: no strict interior minimum.
            let interior_min = costs[1..grid].iter().copied().fold(f64::INFINITY, f64::min);
            assert!(interior_min >= costs[0].min(costs[grid]) - 1e-12 * game.geom.scale);
        }
    }
}

#[test]
fn on_path_point_dominates_off_path_report() {
    let inst = Instance::new(
        MetricSpace::l2(2),
        vec![Point::coords(vec![0.0, 0.0]), Point::coords(vec![5.0, 1.0])],
        Point::coords(vec![2.0, 0.0]),
    )
    .unwrap();
    let rec = dominance_check(0, &inst, &Point::coords(vec![1.0, 1.0]), &[0.0, 1.0], 0.5).unwrap();
    assert_eq!(rec.alternative, DominatingReport::OnPath);
    assert_abs_diff_eq!(rec.y, 2f64.sqrt(), epsilon = 1e-12);
    assert!(rec.dominated);
    assert!(rec.alternative_cost < rec.off_path_cost);

    let same = dominance_check(0, &inst, &Point::coords(vec![0.5, 0.0]), &[0.0, 1.0], 0.5).unwrap();
    assert_abs_diff_eq!(same.off_path_cost, same.alternative_cost, epsilon = 1e-12);

    let beyond = dominance_check(0, &inst, &Point::coords(vec![5.0, 0.0]), &[0.0, 1.0], 0.5).unwrap();
    assert_eq!(beyond.alternative, DominatingReport::Truthful);
    assert!(beyond.dominated);
}

#[test]
fn certificate_json_uses_class_keys() {
    let inst = circle(100.0);
    let cert = verify_pne(&inst, &[0.5, 0.5], 0.0, 1e-5).unwrap().unwrap();
    let v = serde_json::to_value(cert.to_json()).unwrap();
    assert_eq!(v["U"], serde_json::json!([0, 1]));
    assert!(v["S"].as_array().unwrap().is_empty());
}

#[test]
fn size_guards_are_enforced() {
    let inst = line(&[0.0, 1.0, 2.0, 3.0, 4.0], 1.0);
    assert!(matches!(
        brute_force_epsilon_pne(&inst, 1.0, 8, 1e-6),
        Err(FinderError::SizeGuard { .. })
    ));
    let small = line(&[0.0, 1.0], 1.0);
    assert!(matches!(
        brute_force_epsilon_pne(&small, 1.0, 65, 1e-6),
        Err(FinderError::SizeGuard { .. })
    ));
}
