//! Scenario construction, TOML configuration, sweeps and run output.

mod builders;
mod config;
mod output;
mod sweep;

pub use builders::{
    adaptive_simpson, build_collision_example, build_collision_example_with, build_flocking_scenario,
    build_pattern_targets, flocking_state, manifold_state, pattern_state, preset, star_points,
    verify_collision_conditions, CollisionConditions,
};
pub use config::{BuiltScenario, ModelConfig, ScenarioKind, ScenarioSpec};
pub use output::{
    diagnostics_records, format_g17, read_trajectory_csv, run_scenario, write_diagnostics_jsonl, write_trajectory_csv,
    DiagnosticsRecord, RunArtifacts, RunSummary, DIAGNOSTICS_FILE, SUMMARY_FILE, TRAJECTORY_FILE,
};
pub use sweep::{least_squares_slope, run_limit_sweep, sweep_deviations, SweepResult};

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::KernelSpec;
    use crate::error::Error;
    use crate::relkin::SpeedOfLight;

    #[test]
    fn g17_matches_printf() {
        let cases = [
            (0.1, "0.10000000000000001"),
            (1.0, "1"),
            (-2.5, "-2.5"),
            (1e-5, "1.0000000000000001e-05"),
            (1.2345678901234568e17, "1.2345678901234568e+17"),
            (1e17, "1e+17"),
            (1e16, "10000000000000000"),
            (std::f64::consts::PI, "3.1415926535897931"),
            (1e-4, "0.0001"),
            (0.00012345, "0.00012344999999999999"),
            (-1e300, "-1.0000000000000001e+300"),
            (5e-324, "4.9406564584124654e-324"),
            (1.0 / 3.0, "0.33333333333333331"),
            (0.0, "0"),
        ];
        for (v, s) in cases {
            assert_eq!(format_g17(v), s, "{v:e}");
            assert_eq!(s.parse::<f64>().unwrap(), v);
        }
    }

    #[test]
    fn pattern_target_examples() {
        let t = build_pattern_targets(&[vec![0.0, 0.0], vec![2.0, 0.0]]).unwrap();
        assert_eq!(t.rows(), vec![vec![0.0, 2.0], vec![2.0, 0.0]]);
        let sq = build_pattern_targets(&[vec![0.0, 0.0], vec![1.0, 0.0], vec![1.0, 1.0], vec![0.0, 1.0]]).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                if i != j {
                    let r = sq.get(i, j);
                    assert!(r == 1.0 || r == 2f64.sqrt());
                }
            }
        }
        assert!(matches!(build_pattern_targets(&[vec![1.0, 1.0], vec![1.0, 1.0]]), Err(Error::Degenerate(_))));
        assert!(matches!(build_pattern_targets(&[vec![1.0, 1.0]]), Err(Error::Degenerate(_))));
    }

    #[test]
    fn simpson_matches_closed_forms() {
        let asinh = adaptive_simpson(&|y| (1.0 + y * y).powf(-0.5), 0.0, 1.0, 1e-10);
        assert!((asinh - 1f64.asinh()).abs() < 1e-10);
        let atan = adaptive_simpson(&|y| 1.0 / (1.0 + y * y), 0.0, 3.0, 1e-10);
        assert!((atan - 3f64.atan()).abs() < 1e-10);
    }

    #[test]
    fn collision_example_conditions() {
        let k = KernelSpec::CuckerSmale { beta: 0.5 };
        let c = verify_collision_conditions(2.0, [-0.5, 0.5], [1.0, -1.0], (0.01, 0.01, 1e-4), k).unwrap();
        assert!(c.all(), "{c:?}");
        assert!((c.big_phi - 1f64.asinh()).abs() < 1e-10);
        assert!(c.y_min < 0.0 && c.t_star.unwrap() > 0.0);

        let strong = build_collision_example_with(2.0, [-0.5, 0.5], [1.0, -1.0], (100.0, 0.01, 1e-4), k);
        assert!(matches!(strong, Err(Error::Condition { ref clause, .. }) if clause == "C2" || clause == "C3"));
        let wrong_way = build_collision_example_with(2.0, [-0.5, 0.5], [-1.0, -1.0], (0.01, 0.01, 1e-4), k);
        assert!(matches!(wrong_way, Err(Error::Condition { ref clause, .. }) if clause == "C1"));
        let stiff = build_collision_example_with(2.0, [-0.5, 0.5], [1.0, -1.0], (0.01, 0.01, 10.0), k);
        assert!(matches!(stiff, Err(Error::Condition { ref clause, .. }) if clause == "C4"));
    }

    #[test]
    fn flocking_state_has_zero_momentum() {
        for seed in 0..20 {
            let s = flocking_state(7, 3, 3.0, 1.5, seed).unwrap();
            assert!(crate::relkin::norm(&s.momentum_sum()) <= 1e-15);
        }
        let pair = flocking_state(2, 2, 3.0, 1.0, 4).unwrap();
        assert_eq!(pair.mom(1), pair.mom(0).iter().map(|v| -v).collect::<Vec<_>>());
    }

    #[test]
    fn presets_build() {
        for name in ["pattern", "collision", "flocking", "sphere"] {
            let spec = preset(name, 3).unwrap();
            spec.build().unwrap();
            assert_eq!(ScenarioSpec::from_toml(&spec.to_toml().unwrap()).unwrap(), spec);
        }
        assert!(preset("heart", 0).is_err());
    }

    #[test]
    fn collision_example_requires_classical_model() {
        let mut spec = build_collision_example(2.0, (0.01, 0.01, 1e-4)).unwrap();
        spec.model.c = SpeedOfLight::Finite(3.0);
        assert!(matches!(spec.build(), Err(Error::Param(_))));
    }

    #[test]
    fn slope_of_a_line() {
        assert_eq!(least_squares_slope(&[0.0, 1.0, 2.0], &[1.0, -1.0, -3.0]), Some(-2.0));
        assert_eq!(least_squares_slope(&[1.0], &[1.0]), None);
    }
}
