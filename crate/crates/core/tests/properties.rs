use otdepth::depth::{lower_tukey_depth, tukey_depth};
use otdepth::geometry::{hausdorff, Cone};
use otdepth::transport::{brute_force_assignment, check_pairwise_monotone, solve_assignment};
use otdepth::{DepthMode, Point, PointCloud};
use proptest::collection::vec;
use proptest::prelude::*;

fn cloud(dim: usize, n: std::ops::RangeInclusive<usize>) -> impl Strategy<Value = PointCloud> {
    vec(vec(-10.0..10.0f64, dim), n).prop_map(|rows| PointCloud::from_rows(rows).unwrap())
}

fn rotate(p: &Point, angle: f64, scale: f64, shift: [f64; 2]) -> Point {
    let (s, c) = angle.sin_cos();
    Point::new(vec![scale * (c * p[0] - s * p[1]) + shift[0], scale * (s * p[0] + c * p[1]) + shift[1]]).unwrap()
}

fn map_cloud(cloud: &PointCloud, f: impl Fn(&Point) -> Point) -> PointCloud {
    PointCloud::new(cloud.iter().map(f).collect()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn hausdorff_is_a_metric(a in cloud(2, 1..=6), b in cloud(2, 1..=6), c in cloud(2, 1..=6)) {
        let ab = hausdorff(&a, &b).unwrap();
        prop_assert_eq!(hausdorff(&a, &a).unwrap(), 0.0);
        prop_assert_eq!(ab, hausdorff(&b, &a).unwrap());
        let via = hausdorff(&a, &c).unwrap() + hausdorff(&c, &b).unwrap();
        prop_assert!(ab <= via + 1e-9 * (1.0 + via));
    }

    #[test]
    fn cone_membership_is_rotation_invariant(
        z in vec(-5.0..5.0f64, 2),
        axis_angle in 0.0..std::f64::consts::TAU,
        theta in 0.1..1.4f64,
        turn in 0.0..std::f64::consts::TAU,
    ) {
        let z = Point::new(z).unwrap();
        let axis = vec![axis_angle.cos(), axis_angle.sin()];
        // Skip points within rounding distance of the boundary.
        let margin = (otdepth::geometry::dot(z.coords(), &axis) - theta.cos() * z.norm()).abs();
        prop_assume!(margin > 1e-9);
        let cone = Cone::new(Point::origin(2), axis, theta).unwrap();
        let turned_axis = vec![(axis_angle + turn).cos(), (axis_angle + turn).sin()];
        let turned = Cone::new(Point::origin(2), turned_axis, theta).unwrap();
        prop_assert_eq!(cone.contains(&z).unwrap(), turned.contains(&rotate(&z, turn, 1.0, [0.0, 0.0])).unwrap());
    }

    #[test]
    fn planar_depth_is_similarity_invariant(
        c in cloud(2, 1..=12),
        x in vec(-10.0..10.0f64, 2),
        angle in 0.0..std::f64::consts::TAU,
        scale in 0.5..4.0f64,
        shift in (-5.0..5.0f64, -5.0..5.0f64),
    ) {
        let x = Point::new(x).unwrap();
        let f = |p: &Point| rotate(p, angle, scale, [shift.0, shift.1]);
        let before = tukey_depth(&x, &c, DepthMode::Exact).unwrap().depth;
        let after = tukey_depth(&f(&x), &map_cloud(&c, f), DepthMode::Exact).unwrap().depth;
        prop_assert_eq!(before, after);
    }

    #[test]
    fn lower_depth_never_exceeds_depth_at_sample_points(c in cloud(2, 1..=12), i in 0usize..12) {
        let x = &c[i % c.len()];
        let td = tukey_depth(x, &c, DepthMode::Exact).unwrap().depth;
        let lower = lower_tukey_depth(x, &c, DepthMode::Exact).unwrap().depth;
        prop_assert!(lower <= td, "TD- {} > TD {}", lower, td);
    }

    #[test]
    fn approximate_depth_bounds_exact(c in cloud(2, 1..=12), x in vec(-10.0..10.0f64, 2), seed in any::<u64>()) {
        let x = Point::new(x).unwrap();
        let exact = tukey_depth(&x, &c, DepthMode::Exact).unwrap().depth;
        let approx = tukey_depth(&x, &c, DepthMode::Approximate { directions: 64, seed }).unwrap().depth;
        prop_assert!(approx >= exact);
    }

    #[test]
    fn solver_matches_brute_force(dim in 1usize..=3, seed in any::<u64>(), n in 1usize..=6) {
        let mut rng = otdepth::rng::stream(seed, 0);
        let mut draw = || -> PointCloud {
            PointCloud::from_rows((0..n).map(|_| (0..dim).map(|_| rand::Rng::random_range(&mut rng, -3.0..3.0)).collect::<Vec<f64>>())).unwrap()
        };
        let (u, x) = (draw(), draw());
        let m = solve_assignment(&u, &x).unwrap();
        let oracle = brute_force_assignment(&u, &x).unwrap();
        prop_assert!((m.total_cost - oracle.total_cost).abs() <= 1e-9 * oracle.total_cost.max(1.0));
        prop_assert!(check_pairwise_monotone(&m, &u, &x).is_empty());
    }

    #[test]
    fn translating_the_target_shifts_cost_predictably(u in cloud(2, 2..=8), shift in (-50.0..50.0f64, -50.0..50.0f64)) {
        let x = map_cloud(&u, |p| rotate(p, 1.0, 1.5, [0.0, 0.0]));
        let moved = map_cloud(&x, |p| rotate(p, 0.0, 1.0, [shift.0, shift.1]));
        let base = solve_assignment(&u, &x).unwrap().total_cost;
        let shifted = solve_assignment(&u, &moved).unwrap().total_cost;
        // sum |u - x - c|^2 = sum |u - x|^2 - 2 <sum(u) - sum(x), c> + n |c|^2, for every matching.
        let (su, sx) = (u.centroid(), x.centroid());
        let n = u.len() as f64;
        let c = [shift.0, shift.1];
        let expected = base - 2.0 * n * ((su[0] - sx[0]) * c[0] + (su[1] - sx[1]) * c[1]) + n * (c[0] * c[0] + c[1] * c[1]);
        prop_assert!((shifted - expected).abs() <= 1e-8 * (1.0 + shifted.abs()));
    }

    #[test]
    fn one_dimensional_matching_is_sorted(a in vec(-100.0..100.0f64, 1..=20), b in vec(-100.0..100.0f64, 1..=20)) {
        let n = a.len().min(b.len());
        let (u, x) = (PointCloud::from_scalars(&a[..n]).unwrap(), PointCloud::from_scalars(&b[..n]).unwrap());
        let m = solve_assignment(&u, &x).unwrap();
        let mut sa = a[..n].to_vec();
        let mut sb = b[..n].to_vec();
        sa.sort_by(f64::total_cmp);
        sb.sort_by(f64::total_cmp);
        let sorted: f64 = sa.iter().zip(&sb).map(|(p, q)| (p - q) * (p - q)).sum();
        prop_assert!((m.total_cost - sorted).abs() <= 1e-9 * sorted.max(1.0));
    }
}
