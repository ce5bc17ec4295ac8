use lambda_soliton::experiments::{
    formed, height_vs_time, monotonicity_check, threshold_gradient, velocity_vs_lambda, DetectionParams, GradientMode,
    RunAnalysis, DEFAULT_HEIGHT_C,
};
use lambda_soliton::metrics::{height_series, PeakTrack};
use lambda_soliton::{simulate, InitialCondition, SimulationConfig, C64};

fn i(im: f64) -> C64 {
    C64::new(0.0, im)
}

#[test]
fn zero_field_does_not_form() {
    let cfg = SimulationConfig {
        ic: InitialCondition::Uniform { level: 0.0 },
        ..SimulationConfig::default()
    };
    assert!(!formed(&cfg, &DetectionParams::default()).unwrap());
}

#[test]
fn unit_plateau_with_zero_walls_forms() {
    assert!(formed(&SimulationConfig::default(), &DetectionParams::default()).unwrap());
}

#[test]
fn tiny_edge_ramp_does_not_form() {
    let cfg = SimulationConfig {
        ic: GradientMode::default().initial_condition(1e-6),
        ..SimulationConfig::default()
    };
    assert!(
        !formed(&cfg, &DetectionParams::default()).unwrap(),
        "a unit plateau with a 1e-6 edge ramp still forms a soliton"
    );
}

#[test]
fn threshold_is_of_order_one_thousandth() {
    let r = threshold_gradient(
        1.0,
        i(1.0),
        (1e-5, 1e-1),
        1e-4,
        &SimulationConfig::default(),
        GradientMode::default(),
        &DetectionParams::default(),
    );
    match r {
        Ok(r) => assert!(
            (1e-4..=1e-2).contains(&r.epsilon_star),
            "epsilon_star = {:e}",
            r.epsilon_star
        ),
        Err(e) => panic!("threshold search failed: {e}"),
    }
}

#[test]
fn degenerate_bracket_is_rejected() {
    let r = threshold_gradient(
        1.0,
        i(1.0),
        (1e-3, 1e-3),
        1e-4,
        &SimulationConfig::default(),
        GradientMode::default(),
        &DetectionParams::default(),
    );
    assert!(matches!(r, Err(lambda_soliton::Error::BracketInvalid { .. })));
}

#[test]
fn speed_is_monotone_in_lambda_for_unit_imaginary_c() {
    let grid: Vec<f64> = (1..=9).map(|k| k as f64 / 5.0).collect();
    let sweep = velocity_vs_lambda(&[i(1.0)], &grid, &SimulationConfig::default(), &DetectionParams::default()).unwrap();
    let m = monotonicity_check(&sweep, i(1.0)).unwrap();
    assert!(m.monotone, "violation at {:?}", m.first_violation);
    for r in &sweep.rows {
        if let Some(v) = r.velocity_abs {
            assert!(v > 0.0 && v.is_finite());
        }
    }
    let at_one = sweep.rows.iter().find(|r| r.lambda == 1.0).unwrap();
    assert_eq!(at_one.velocity_relative, Some(1.0));
}

#[test]
fn plateau_heights_follow_the_coefficient_order() {
    let cs: Vec<C64> = DEFAULT_HEIGHT_C.iter().map(|&c| i(c)).collect();
    let traces = height_vs_time(&cs, 1.0, &SimulationConfig::default(), &DetectionParams::default()).unwrap();
    let h: Vec<f64> = traces.iter().map(|t| t.plateau().unwrap()).collect();
    assert!(h[0] > h[1] && h[1] > h[2], "plateaus for 2.8i, 1.5i, 0.5i: {h:?}");
}

#[test]
fn height_spikes_have_events() {
    let cs: Vec<C64> = DEFAULT_HEIGHT_C.iter().map(|&c| i(c)).collect();
    let traces = height_vs_time(&cs, 1.0, &SimulationConfig::default(), &DetectionParams::default()).unwrap();
    for t in &traces {
        assert!(t.unexplained_spikes(1.5, 2).is_empty(), "{:?}: {:?}", t.c_coef, t.unexplained_spikes(1.5, 2));
    }
}

// Each collision on the default run sits at a local maximum of the height
// series of the track that is tallest around the event. A track that ends in
// the collision has its maximum at the last sample.
#[test]
fn collisions_sit_on_height_maxima() {
    let cfg = SimulationConfig::default();
    let traj = simulate(&cfg).unwrap();
    let analysis = RunAnalysis::new(&traj, &DetectionParams::default());
    assert!(!analysis.collisions.is_empty());
    let reach = 2 * cfg.snapshot_stride;
    for e in &analysis.collisions {
        let near = |t: &PeakTrack| {
            t.samples
                .iter()
                .filter(|s| s.time_index.abs_diff(e.time_index) <= reach)
                .map(|s| s.height)
                .fold(f64::NEG_INFINITY, f64::max)
        };
        let tallest = e
            .track_ids
            .iter()
            .filter_map(|id| analysis.tracks.iter().find(|t| t.track_id == *id))
            .max_by(|a, b| near(a).total_cmp(&near(b)))
            .unwrap();
        let series = height_series(tallest);
        let maxima: Vec<usize> = (0..series.len())
            .filter(|&k| {
                let h = series[k].1;
                (k == 0 || h > series[k - 1].1) && (k + 1 == series.len() || h > series[k + 1].1)
            })
            .map(|k| series[k].0)
            .collect();
        assert!(
            maxima.iter().any(|t| t.abs_diff(e.time_index) <= reach),
            "collision at {} has no height maximum of track {} nearby",
            e.time_index,
            tallest.track_id
        );
    }
}

#[test]
fn runs_are_deterministic() {
    let cfg = SimulationConfig {
        lambda: 0.7,
        ..SimulationConfig::default()
    };
    let a = RunAnalysis::new(&simulate(&cfg).unwrap(), &DetectionParams::default());
    let b = RunAnalysis::new(&simulate(&cfg).unwrap(), &DetectionParams::default());
    assert_eq!(a.tracks, b.tracks);
    assert_eq!(a.collisions, b.collisions);
    assert_eq!(a.reflections, b.reflections);
}
