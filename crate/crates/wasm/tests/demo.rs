use greenroute::caching::Strategy;
use greenroute::weather::SyntheticProfile;
use greenroute_wasm::call_json;
use greenroute_wasm::demo::{
    alpha_sweep, explore_route, mix_curve, MixRequest, NetworkSpec, RouteRequest, SweepRequest,
};

fn route(alpha: f64, hour: usize, source: usize, destination: usize) -> RouteRequest {
    RouteRequest {
        network: NetworkSpec::default(),
        hour,
        alpha,
        source,
        destination,
    }
}

#[test]
fn shortest_route_when_alpha_is_zero() {
    for dst in 1..30 {
        let v = explore_route(&route(0.0, 30, 0, dst)).unwrap();
        assert_eq!(v.nodes.len(), 30);
        assert_eq!(v.path.len(), v.shortest.len(), "to {dst}");
        assert_eq!((v.path[0], *v.path.last().unwrap()), (0, dst));
        assert_eq!(v.walk[0], 0);
        assert!(v
            .nodes
            .iter()
            .all(|n| (0.0..=1.0).contains(&n.green) && (0.0..=1.0).contains(&n.x)));
    }
}

#[test]
fn route_requests_are_checked() {
    assert!(explore_route(&route(1.5, 0, 0, 3)).is_err());
    assert!(explore_route(&route(0.5, 0, 4, 4)).is_err());
    assert!(explore_route(&route(0.5, 0, 0, 30)).is_err());
    // hours past the horizon clamp to the last one
    assert!(explore_route(&route(0.5, 10_000, 0, 3)).is_ok());
}

fn mix(solar_amplitude: f64, wind_mean: f64) -> MixRequest {
    MixRequest {
        profile: SyntheticProfile {
            solar_amplitude,
            wind_mean,
            wind_variance: 4.0,
            seasonal_modulation: 0.3,
        },
        capacity_c: 2.0,
        seed: 3,
    }
}

#[test]
fn single_source_sites_pick_that_source() {
    let sunny = mix_curve(&mix(800.0, 0.0)).unwrap();
    assert_eq!(sunny.best_beta, Some(0.0));
    assert!(sunny.points[1..].iter().all(|p| p.avg_green_ratio.is_none()));
    let windy = mix_curve(&mix(0.0, 7.0)).unwrap();
    assert_eq!(windy.best_beta, Some(1.0));
    assert_eq!(mix_curve(&mix(0.0, 0.0)).unwrap().best_beta, None);
}

#[test]
fn best_beta_is_the_curve_maximum() {
    let c = mix_curve(&mix(700.0, 5.0)).unwrap();
    assert_eq!(c.points.len(), 21);
    let top = c
        .points
        .iter()
        .filter_map(|p| p.avg_green_ratio)
        .fold(f64::MIN, f64::max);
    let best = c.points.iter().find(|p| Some(p.beta) == c.best_beta).unwrap();
    assert_eq!(best.avg_green_ratio, Some(top));
}

#[test]
fn sweep_without_caches_saves_no_hops() {
    let spec = NetworkSpec {
        hours: 72,
        ..NetworkSpec::default()
    };
    let rows = alpha_sweep(&SweepRequest {
        network: spec,
        strategy: Strategy::None,
        alphas: vec![0.0, 1.0],
        request_rate: 5,
        cache_capacity: 8,
    })
    .unwrap();
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[0].hit_rate, Some(0.0));
    assert_eq!(rows[0].footprint_reduction, Some(0.0));
    assert!(rows[1].footprint_reduction.unwrap() <= 0.0);
}

#[test]
fn json_layer() {
    let out = call_json(
        "exploreRoute",
        r#"{"alpha": 0.3, "hour": 5, "source": 2, "destination": 9}"#,
    )
    .unwrap();
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["nodes"].as_array().unwrap().len(), 30);
    assert!(call_json("mixCurve", "{").unwrap_err().starts_with("bad request"));
    assert!(call_json("teleport", "{}").is_err());
    let err = call_json("alphaSweep", r#"{"strategy": "cachedbit", "alphas": [0.5, 7]}"#).unwrap_err();
    assert!(err.contains("experiment.alphas"), "{err}");
}
