mod common;

use common::{field_gradient, library_walk, reference_walk, walkthrough_route, Outcome};
use greenroute::routing::{default_hop_budget, discover, DiscoverySession, GradientField, GradientTable};
use greenroute::topology::{hop_weights, NodeId};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn matches_reference_walk_on_small_graphs() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let (mut found, mut failed) = (0, 0);
    for case in 0..1000 {
        let n = rng.random_range(2..=6);
        let extra = rng.random_range(0.0..0.8);
        let topo = common::random_connected(&mut rng, n, extra);
        let adj = common::adjacency(&topo);
        let s = rng.random_range(0..n);
        let d = (s + rng.random_range(1..n)) % n;
        let budget = if rng.random_bool(0.2) {
            rng.random_range(1..=2 * n)
        } else {
            default_hop_budget(&topo)
        };

        let (lib, reference) = if case % 2 == 0 {
            // arbitrary per-link values, coarse so that ties are common
            let mut table = GradientTable::new();
            let mut values = vec![vec![0.0; n]; n];
            for (u, row) in adj.iter().enumerate() {
                for &v in row {
                    let x = rng.random_range(0..=4) as f64 / 4.0;
                    values[u][v] = x;
                    table.set(NodeId(u), NodeId(v), x);
                }
            }
            let lib = library_walk(&topo, &table, s, d, budget);
            (lib, reference_walk(&adj, &|u, v| values[u][v], s, d, budget))
        } else {
            let alpha = [0.0, 0.3, 0.5, 0.8, 1.0, rng.random()][rng.random_range(0..6)];
            let green: Vec<f64> = (0..n).map(|_| rng.random_range(0..=5) as f64 / 5.0).collect();
            let field = GradientField::new(alpha, green.clone());
            let weights = hop_weights(&topo, NodeId(d));
            let lib = library_walk(&topo, &field.toward(&topo, &weights), s, d, budget);
            let dist = common::distances(&adj, d);
            let grad = |u: usize, v: usize| field_gradient(&adj, &dist, alpha, &green, u, v);
            (lib, reference_walk(&adj, &grad, s, d, budget))
        };
        assert_eq!(lib, reference, "case {case}: {adj:?} {s}->{d} budget {budget}");
        match lib.0 {
            Outcome::Path(_) => found += 1,
            _ => failed += 1,
        }
    }
    assert!(found > 500 && failed > 0, "found {found}, failed {failed}");
}

#[test]
fn walkthrough_green_field() {
    let route = walkthrough_route(&[
        ("1", "4", 0.65),
        ("1", "2", 0.4),
        ("4", "5", 0.7),
        ("4", "2", 0.65),
        ("5", "6", 0.85),
        ("5", "3", 0.75),
    ]);
    assert_eq!(route, ["S", "1", "4", "5", "6", "D"]);
}

#[test]
fn walkthrough_avoids_browned_router() {
    let route = walkthrough_route(&[
        ("1", "4", 0.65),
        ("1", "2", 0.4),
        ("4", "5", 0.65),
        ("4", "2", 0.7),
        ("2", "3", 0.6),
        ("3", "6", 0.8),
    ]);
    assert_eq!(route, ["S", "1", "4", "2", "3", "6", "D"]);
    assert!(!route.contains(&"5".to_string()));
}

#[test]
fn shortest_paths_when_alpha_is_zero() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for _ in 0..200 {
        let n = rng.random_range(2..=50);
        let extra = rng.random_range(0.0..0.15);
        let topo = common::random_connected(&mut rng, n, extra);
        let adj = common::adjacency(&topo);
        let green: Vec<f64> = (0..n).map(|_| rng.random()).collect();
        let field = GradientField::new(0.0, green);
        for _ in 0..5 {
            let s = rng.random_range(0..n);
            let d = (s + rng.random_range(1..n)) % n;
            let weights = hop_weights(&topo, NodeId(d));
            let path = discover(
                &topo,
                &field.toward(&topo, &weights),
                NodeId(s),
                NodeId(d),
                default_hop_budget(&topo),
            )
            .unwrap();
            assert_eq!(path.hops() as u32, common::distances(&adj, d)[s]);
        }
    }
}

#[test]
fn greenest_eligible_neighbour_when_alpha_is_one() {
    let mut rng = ChaCha8Rng::seed_from_u64(78);
    let mut checked = 0;
    for _ in 0..200 {
        let n = rng.random_range(2..=50);
        let extra = rng.random_range(0.0..0.15);
        let topo = common::random_connected(&mut rng, n, extra);
        let green: Vec<f64> = (0..n).map(|_| rng.random_range(0..=10) as f64 / 10.0).collect();
        let field = GradientField::new(1.0, green.clone());
        let s = rng.random_range(0..n);
        let d = (s + rng.random_range(1..n)) % n;
        let weights = hop_weights(&topo, NodeId(d));
        let grads = field.toward(&topo, &weights);

        let mut session = DiscoverySession::new(NodeId(s), NodeId(d));
        let (mut cur, mut incoming) = (NodeId(s), None);
        for _ in 0..default_hop_budget(&topo) {
            if cur == NodeId(d) {
                break;
            }
            let (q_in, q_out) = session
                .queues(cur)
                .map(|(a, b)| (a.to_vec(), b.to_vec()))
                .unwrap_or_default();
            let eligible: Vec<NodeId> = topo
                .neighbors(cur)
                .iter()
                .copied()
                .filter(|v| Some(*v) != incoming && !q_in.contains(v) && !q_out.contains(v))
                .collect();
            let expected = eligible
                .iter()
                .copied()
                .fold(None, |best: Option<NodeId>, v| match best {
                    Some(b) if green[b.0] >= green[v.0] => Some(b),
                    _ => Some(v),
                });
            let Some(next) = session.next_hop(&topo, cur, incoming, &grads) else {
                break;
            };
            if let Some(e) = expected {
                assert_eq!(next, e, "at {cur}, eligible {eligible:?}");
                checked += 1;
            }
            incoming = Some(cur);
            cur = next;
        }
    }
    assert!(checked > 200);
}
