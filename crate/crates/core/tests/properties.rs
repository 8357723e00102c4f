use abpkit::geodesy::distance;
use abpkit::harness::config::Theorem;
use abpkit::harness::report::{Diagnostics, InequalityReport};
use abpkit::harness::run::case_seed;
use abpkit::harness::{emit_report, parse_csv, parse_json, ReportFormat, RowStatus, RowSummary};
use abpkit::models::{ball_volume, unit_ball_volume};
use abpkit::{CurvatureClass, PolarPoint, WarpedModel, WarpedProfile};
use proptest::prelude::*;

fn any_float() -> impl Strategy<Value = f64> {
    prop_oneof![
        8 => any::<f64>(),
        1 => Just(f64::NAN),
        1 => prop::num::f64::NORMAL | prop::num::f64::SUBNORMAL,
    ]
}

fn row(id: String, vals: [f64; 7], seed: u64, fail: bool) -> InequalityReport {
    InequalityReport {
        case_id: id,
        theorem: Theorem::SobolevDomain,
        n: 2,
        m: 0,
        theta: vals[0],
        lhs: vals[1],
        rhs: vals[2],
        ratio: vals[3],
        status: if fail { RowStatus::Fail } else { RowStatus::Pass },
        h: vals[4],
        ode_tol: vals[5],
        mc_stderr: vals[6],
        seed,
        ratio_tolerance: 0.0,
        diagnostics: Diagnostics::empty(),
        violations: Vec::new(),
        tolerances: Vec::new(),
    }
}

fn unit_direction(a: f64) -> Vec<f64> {
    vec![a.cos(), a.sin()]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn reports_round_trip_bitwise(
        id in "[a-z][a-z0-9,\" -]{0,12}",
        vals in prop::array::uniform7(any_float()),
        seed in any::<u64>(),
        fail in any::<bool>(),
    ) {
        let rows = vec![row(id, vals, seed, fail)];
        let want = RowSummary::of(&rows[0]);
        let csv = parse_csv(&emit_report(&rows, ReportFormat::Csv).unwrap()).unwrap();
        let json = parse_json(&emit_report(&rows, ReportFormat::Json).unwrap()).unwrap();
        prop_assert!(csv[0].same_bits(&want), "{:?} vs {:?}", csv[0], want);
        // JSON cannot carry infinities, so they come back as NaN.
        let mut lossy = want.clone();
        for x in [&mut lossy.theta, &mut lossy.lhs, &mut lossy.rhs, &mut lossy.ratio, &mut lossy.h, &mut lossy.ode_tol, &mut lossy.mc_stderr] {
            if x.is_infinite() {
                *x = f64::NAN;
            }
        }
        prop_assert!(json[0].same_bits(&lossy), "{:?} vs {:?}", json[0], lossy);
    }

    #[test]
    fn unit_ball_recursion(k in 3usize..40) {
        let lhs = unit_ball_volume(k);
        let rhs = 2.0 * std::f64::consts::PI / k as f64 * unit_ball_volume(k - 2);
        prop_assert!((lhs - rhs).abs() <= 1e-13 * rhs.max(1e-300));
    }

    #[test]
    fn case_seed_is_a_bijection_in_the_seed(a in any::<u64>(), b in any::<u64>(), id in ".{0,16}") {
        prop_assert_eq!(case_seed(a, &id) == case_seed(b, &id), a == b);
    }

    #[test]
    fn cone_profiles_stay_below_the_flat_profile(alpha in 0.05f64..1.0, r in 0.0f64..60.0) {
        let m = WarpedModel::new(3, WarpedProfile::ConeSmoothed { alpha }, CurvatureClass::SectionalNonneg).unwrap();
        prop_assert!(m.phi(r) <= r + 1e-15);
        prop_assert!(m.phi(r) >= alpha * r - 1e-15);
        prop_assert!((m.theta - alpha * alpha).abs() < 1e-14);
    }

    #[test]
    fn ball_volume_is_monotone_and_below_euclidean(alpha in 0.1f64..1.0, r in 0.01f64..20.0, dr in 0.01f64..5.0) {
        let m = WarpedModel::new(2, WarpedProfile::ConeSmoothed { alpha }, CurvatureClass::SectionalNonneg).unwrap();
        let v0 = ball_volume(&m, r).unwrap();
        let v1 = ball_volume(&m, r + dr).unwrap();
        prop_assert!(v1 > v0);
        prop_assert!(v0 <= unit_ball_volume(2) * r * r * (1.0 + 1e-10));
    }

    #[test]
    fn flat_distance_is_chordal(r1 in 0.0f64..5.0, r2 in 0.0f64..5.0, a1 in 0.0f64..6.28, a2 in 0.0f64..6.28) {
        let m = WarpedModel::euclidean(2);
        let x = PolarPoint::new(r1, unit_direction(a1)).unwrap();
        let p = PolarPoint::new(r2, unit_direction(a2)).unwrap();
        let (cx, cp) = (x.to_chart(), p.to_chart());
        let chord = (cx[0] - cp[0]).hypot(cx[1] - cp[1]);
        let d = distance(&m, &x, &p).unwrap();
        prop_assert!((d - chord).abs() <= 1e-8 * (1.0 + chord), "d = {d}, chord = {chord}");
    }
}

#[test]
fn cone_distance_is_symmetric_and_obeys_the_triangle_inequality() {
    let m = WarpedModel::new(2, WarpedProfile::ConeSmoothed { alpha: 0.5 }, CurvatureClass::SectionalNonneg).unwrap();
    let pts: Vec<PolarPoint> = [(0.5, 0.0), (2.0, 1.0), (3.0, 2.5), (1.0, 4.0), (4.0, 5.5)]
        .iter()
        .map(|&(r, a)| PolarPoint::new(r, unit_direction(a)).unwrap())
        .collect();
    let d = |i: usize, j: usize| distance(&m, &pts[i], &pts[j]).unwrap();
    for i in 0..pts.len() {
        for j in 0..pts.len() {
            assert!((d(i, j) - d(j, i)).abs() < 1e-7, "asymmetric {i} {j}");
            assert!(d(i, j) <= pts[i].r + pts[j].r + 1e-8);
            for k in 0..pts.len() {
                assert!(d(i, k) <= d(i, j) + d(j, k) + 1e-7, "triangle {i} {j} {k}");
            }
        }
    }
}
