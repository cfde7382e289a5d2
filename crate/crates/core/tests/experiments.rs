use mmv_core::experiments::{compare_smv_mmv, spearman, wilson_halfwidth, PointStatus};
use mmv_core::{run_phase, DecoderKind, Schedule};

fn two_row(ratio: f64, trials: u64) -> Schedule {
    let mut s = Schedule::new(vec![vec![2.0, 2.0], vec![-2.0, 2.0]], 10.0, vec![8, 16, 32], ratio);
    s.trials_per_point = trials;
    s.master_seed = 77;
    s
}

#[test]
fn curves_are_bit_identical_across_thread_counts() {
    let s = two_row(0.5, 60);
    let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let four = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
    let a = one.install(|| run_phase(&s).unwrap());
    let b = four.install(|| run_phase(&s).unwrap());
    assert_eq!(a, b);
    let (mut x, mut y) = (Vec::new(), Vec::new());
    a.write_csv(&mut x).unwrap();
    b.write_csv(&mut y).unwrap();
    assert_eq!(x, y);
}

#[test]
fn seed_changes_the_draws() {
    let s = two_row(1.0, 100);
    let mut t = s.clone();
    t.master_seed += 1;
    assert_ne!(run_phase(&s).unwrap(), run_phase(&t).unwrap());
}

#[test]
fn ml_is_no_worse_than_net_at_matched_points() {
    let mut ml = two_row(0.25, 200);
    ml.epsilon = Some(0.4);
    let net = Schedule {
        decoder: DecoderKind::Net,
        ..ml.clone()
    };
    let (a, b) = (run_phase(&ml).unwrap(), run_phase(&net).unwrap());
    for (p, q) in a.points.iter().zip(&b.points) {
        assert_eq!((p.m, p.n), (q.m, q.n));
        assert_eq!(q.status, PointStatus::Ok);
        let (e_ml, e_net) = (p.error_rate.unwrap(), q.error_rate.unwrap());
        assert!(e_ml <= e_net + q.wilson_halfwidth.unwrap(), "m = {}: {e_ml} vs {e_net}", p.m);
    }
}

#[test]
fn error_rate_does_not_grow_with_m_below_threshold() {
    // ratio well under 1 leaves room for n to grow with log m
    let curve = run_phase(&two_row(0.3, 200)).unwrap();
    assert!(curve.trend() <= 0.0, "{:?}", curve.rates());
}

#[test]
fn orthogonal_columns_beat_single_vector_at_matched_points() {
    let cmp = compare_smv_mmv(2, 10.0, &[8, 16, 32, 64], 400, DecoderKind::Ml, 3).unwrap();
    let last = |i: usize| cmp.curves[i].points.last().unwrap().error_rate.unwrap();
    let (smv, identical, orthogonal) = (last(0), last(1), last(2));
    assert!(smv - orthogonal >= 0.1, "smv {smv}, orthogonal {orthogonal}");
    assert!(identical <= smv + cmp.curves[0].points.last().unwrap().wilson_halfwidth.unwrap());
    // reference rate sits between the single-vector and orthogonal thresholds
    assert!(cmp.curves[0].c_of_w < cmp.reference_c && cmp.reference_c < cmp.curves[2].c_of_w);
}

#[test]
fn wilson_and_spearman_oracles() {
    // Wilson 95% half-width, closed form evaluated independently
    let (n, p, z) = (400.0f64, 0.1f64, 1.959_963_984_540_054f64);
    let want = z * (p * (1.0 - p) / n + z * z / (4.0 * n * n)).sqrt() / (1.0 + z * z / n);
    assert!((wilson_halfwidth(40, 400) - want).abs() < 1e-15);
    assert!((wilson_halfwidth(40, 400) - 0.029_505_658_593_684_23).abs() < 1e-12);
    // tied middle values share rank 2.5
    let rho = spearman(&[1.0, 2.0, 3.0, 4.0], &[0.9, 0.5, 0.5, 0.1]);
    assert!((rho + 0.948_683_298_050_513_8).abs() < 1e-12, "{rho}");
}
