use num_complex::Complex64 as Point;
use proptest::prelude::*;
use std::f64::consts::PI;
use submetric::curves::Polyline;
use submetric::distance::{distance, DistanceOpts};
use submetric::metric::{polyline_length, segment_length};
use submetric::scene::pullback;
use submetric::turn::{gauss_bonnet_defect, left_turn, right_turn};
use submetric::{ComplexPoly, DiscDensity, Domain, HarmonicPoly, MetricScene, SignedMeasure};

fn c(x: f64, y: f64) -> Point {
    Point::new(x, y)
}

fn mixed_scene() -> MetricScene {
    let m = SignedMeasure::new(
        vec![
            submetric::Atom { pos: c(0.3, 0.2), weight: 1.1 },
            submetric::Atom { pos: c(-0.6, -0.4), weight: -0.9 },
        ],
        vec![DiscDensity { center: c(0.9, -0.7), radius: 0.3, mass: 0.6 }],
        vec![],
        vec![],
    )
    .unwrap();
    MetricScene::new(Domain::new(c(0.0, 0.0), 3.0).unwrap(), m, HarmonicPoly::new(vec![c(0.0, 0.0), c(0.1, 0.05)])).unwrap()
}

fn in_disc(r: f64) -> impl Strategy<Value = Point> {
    (0.0..r, -PI..PI).prop_map(|(rho, t)| Point::from_polar(rho, t))
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 12, .. ProptestConfig::default() })]

    #[test]
    fn distance_is_a_metric(a in in_disc(1.2), b in in_disc(1.2), m in in_disc(1.2)) {
        let s = mixed_scene();
        let o = DistanceOpts::default();
        let ab = distance(&s, a, b, &o).unwrap().value;
        let am = distance(&s, a, m, &o).unwrap().value;
        let mb = distance(&s, m, b, &o).unwrap().value;
        prop_assert!(ab >= 0.0);
        prop_assert_eq!(ab, distance(&s, b, a, &o).unwrap().value);
        prop_assert!(ab <= (am + mb) * (1.0 + 2.0 * o.tol) + 1e-12, "{} > {} + {}", ab, am, mb);
    }

    #[test]
    fn distance_never_exceeds_the_segment(a in in_disc(1.2), b in in_disc(1.2)) {
        let s = mixed_scene();
        let d = distance(&s, a, b, &DistanceOpts::default()).unwrap();
        let seg = segment_length(&s, a, b).unwrap().value;
        prop_assert!(d.value <= seg * (1.0 + 1e-6) + 1e-12);
        let w = polyline_length(&s, &d.witness).unwrap().value;
        prop_assert!((w - d.value).abs() <= 1e-4 * d.value.max(1e-9));
    }

    #[test]
    fn gauss_bonnet_on_random_quadrilaterals(
        r in proptest::collection::vec(0.4f64..1.6, 4),
        jitter in proptest::collection::vec(-0.3f64..0.3, 4),
        w in -3.0f64..3.0,
        zeta in in_disc(2.0),
    ) {
        let v: Vec<Point> = (0..4).map(|k| Point::from_polar(r[k], PI / 2.0 * k as f64 + jitter[k])).collect();
        let p = Polyline::closed(v).unwrap();
        let near = p.edges().map(|(a, b)| submetric::geometry::segment_distance(a, b, zeta)).fold(f64::INFINITY, f64::min);
        prop_assume!(near > 1e-6);
        let s = MetricScene::new(
            Domain::new(c(0.0, 0.0), 3.0).unwrap(),
            SignedMeasure::atom(zeta, w).unwrap(),
            HarmonicPoly::new(vec![c(0.0, 0.0), c(0.2, -0.1), c(0.05, 0.1)]),
        ).unwrap();
        prop_assert!(gauss_bonnet_defect(&s, &p).unwrap().abs() < 1e-9);
        // no mass on the curve, so the turns are opposite
        prop_assert!((left_turn(&s, &p).unwrap() + right_turn(&s, &p).unwrap()).abs() < 1e-9);
    }

    #[test]
    fn polynomial_pullback_preserves_polyline_length(k in 0usize..4) {
        // the image of a segment under z ↦ z² + z is a curve; compare its
        // finely sampled image length with the pulled-back segment length
        let src = mixed_scene();
        let f = ComplexPoly::new(vec![c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0)]);
        let target = Domain::new(c(0.2, 0.0), 0.4).unwrap();
        let s = pullback(&src, &f, target).unwrap();
        let ends = [(c(0.0, -0.2), c(0.4, 0.2)), (c(-0.1, 0.1), c(0.5, 0.0)), (c(0.2, -0.3), c(0.2, 0.3)), (c(0.0, 0.0), c(0.3, 0.1))];
        let (a, b) = ends[k];
        let direct = segment_length(&s, a, b).unwrap().value;
        let n = 4000;
        let img = Polyline::open((0..=n).map(|j| f.eval(a + (b - a) * (j as f64 / n as f64))).collect()).unwrap();
        let image = polyline_length(&src, &img).unwrap().value;
        prop_assert!((direct / image - 1.0).abs() < 1e-6, "{} vs {}", direct, image);
    }
}

#[test]
fn grid_refinement_converges_on_a_cone() {
    let s = MetricScene::new(
        Domain::new(c(0.0, 0.0), 2.0).unwrap(),
        SignedMeasure::atom(c(0.0, 0.0), 2.0).unwrap(),
        HarmonicPoly::zero(),
    )
    .unwrap();
    let k = submetric::cone::ConeSpec::new(c(0.0, 0.0), 2.0).unwrap();
    let (a, b) = (c(0.8, 0.1), c(-0.7, 0.3));
    let exact = submetric::cone::cone_distance(&k, a, b);
    let mut grid_errors = Vec::new();
    for n in [10, 20, 40] {
        let o = DistanceOpts { grid_n: n, ..DistanceOpts::default() };
        let r = distance(&s, a, b, &o).unwrap();
        assert!((r.value / exact - 1.0).abs() < 5e-3, "n = {n}: {} vs {exact}", r.value);
        grid_errors.push(r.grid_value - exact);
    }
    // the stage-1 graph distance is an upper bound that tightens as the grid refines
    assert!(grid_errors.iter().all(|e| *e > -1e-9), "{grid_errors:?}");
    assert!(grid_errors[2] < grid_errors[0], "{grid_errors:?}");
}
