use approx::assert_relative_eq;
use nalgebra::Vector3;
use proptest::prelude::*;

use vlcvr::arena::{
    assign_transmitter, default_arena, parse_orientation_trace, user_grid, OrientationTrace,
};
use vlcvr::channel::{
    incidence_angle, irradiance_angle, los_received_power, total_noise_variance, ChannelParams,
    Transmitter,
};
use vlcvr::combining::{combine_egc, combine_mrc, combine_sbc, BranchObservation};
use vlcvr::geometry::{
    build_layout, min_angular_distance, pose_detectors, rotation_matrix, HeadsetParams, LayerPlan,
    Orientation, PosedDetector,
};
use vlcvr::sweep::Stats;

fn orientation() -> impl Strategy<Value = Orientation> {
    (-180.0..180.0f64, -180.0..180.0f64, -180.0..180.0f64)
        .prop_map(|(y, p, r)| Orientation::new(y, p, r).unwrap())
}

fn theta_d() -> impl Strategy<Value = f64> {
    let lo = min_angular_distance(0.0025, 0.0762).unwrap();
    lo..=90.0
}

fn branch() -> impl Strategy<Value = BranchObservation> {
    (
        0.0..1e-3f64,
        prop::collection::vec(0.0..1e-3f64, 0..4),
        1e-16..1e-12f64,
    )
        .prop_map(|(s, i, n)| BranchObservation::new(s, i, n))
}

proptest! {
    #[test]
    fn posing_is_rigid(o in orientation(), theta in 15.0..90.0f64) {
        let layout = build_layout(HeadsetParams::new(0.0762, 0.0025, theta).unwrap());
        let center = Vector3::new(1.0, 2.0, 1.33);
        let posed = pose_detectors(&layout, &o, center);
        for (a, pa) in layout.detectors.iter().zip(&posed) {
            prop_assert!(((pa.world_position - center).norm() - 0.0762).abs() < 1e-12);
            prop_assert!((pa.world_normal.norm() - 1.0).abs() < 1e-12);
            for (b, pb) in layout.detectors.iter().zip(&posed).take(5) {
                let local = (a.local_position - b.local_position).norm();
                let world = (pa.world_position - pb.world_position).norm();
                prop_assert!((local - world).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn rotation_preserves_handedness(o in orientation()) {
        let r = rotation_matrix(&o);
        let x = r.column(0).into_owned();
        let y = r.column(1).into_owned();
        let z = r.column(2).into_owned();
        prop_assert!((x.cross(&y) - z).norm() < 1e-12);
    }

    #[test]
    fn layout_is_a_hemisphere(theta in theta_d()) {
        let layout = build_layout(HeadsetParams::new(0.0762, 0.0025, theta).unwrap());
        // direct recomputation of the layer rule
        let n_layers = ((90.0 - theta / 2.0) / theta).ceil() as usize;
        let theta_z = if theta * n_layers as f64 > 90.0 { 90.0 / n_layers as f64 } else { theta };
        let counts: Vec<usize> = (1..=n_layers)
            .map(|j| (360.0 / theta * (theta_z * j as f64).to_radians().sin() - 1e-9).ceil() as usize)
            .collect();
        prop_assert_eq!(layout.len(), 1 + counts.iter().sum::<usize>());
        prop_assert_eq!(&LayerPlan::new(theta).layer_counts, &counts);
        for w in counts.windows(2) {
            prop_assert!(w[1] >= w[0]);
        }
        for d in &layout.detectors {
            prop_assert!(d.local_normal.z >= -1e-12);
        }
    }

    #[test]
    fn posing_preserves_normal_separations(o in orientation()) {
        let layout = build_layout(HeadsetParams::new(0.0762, 0.0025, 20.0).unwrap());
        let posed = pose_detectors(&layout, &o, Vector3::zeros());
        let angle = |a: &Vector3<f64>, b: &Vector3<f64>| a.dot(b).clamp(-1.0, 1.0).acos().to_degrees();
        for i in (0..layout.len()).step_by(3) {
            for j in (i + 1..layout.len()).step_by(5) {
                let local = angle(&layout.detectors[i].local_normal, &layout.detectors[j].local_normal);
                let world = angle(&posed[i].world_normal, &posed[j].world_normal);
                prop_assert!((local - world).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn combiners_are_scale_free(bs in prop::collection::vec(branch(), 1..8), c in 1e-3..1e3f64) {
        let r = 0.53;
        let scaled: Vec<_> = bs
            .iter()
            .map(|b| BranchObservation::new(
                c * b.signal_power,
                b.interference_powers.iter().map(|p| c * p).collect(),
                c * c * b.noise_variance,
            ))
            .collect();
        assert_relative_eq!(combine_egc(&scaled, r).unwrap(), combine_egc(&bs, r).unwrap(), max_relative = 1e-9);
        assert_relative_eq!(combine_mrc(&scaled, r).unwrap(), combine_mrc(&bs, r).unwrap(), max_relative = 1e-9);
        assert_relative_eq!(combine_sbc(&scaled, r).unwrap().0, combine_sbc(&bs, r).unwrap().0, max_relative = 1e-9);
    }

    #[test]
    fn dark_branches_give_zero(bs in prop::collection::vec(branch(), 1..8)) {
        let dark: Vec<_> = bs
            .iter()
            .map(|b| BranchObservation::new(0.0, b.interference_powers.clone(), b.noise_variance))
            .collect();
        prop_assert_eq!(combine_egc(&dark, 0.53).unwrap(), 0.0);
        prop_assert_eq!(combine_sbc(&dark, 0.53).unwrap().0, 0.0);
        prop_assert_eq!(combine_mrc(&dark, 0.53).unwrap(), 0.0);
    }

    #[test]
    fn noise_grows_with_power(p in 0.0..1e-2f64, dp in 0.0..1e-2f64) {
        let params = ChannelParams::default();
        let a = total_noise_variance(p, &params).unwrap();
        prop_assert!(a > 0.0);
        prop_assert!(total_noise_variance(p + dp, &params).unwrap() >= a);
    }

    #[test]
    fn power_is_zero_outside_fov(o in orientation(), beta in 5.0..90.0f64) {
        let arena = default_arena();
        let layout = build_layout(HeadsetParams::new(0.0762, 0.0025, 30.0).unwrap());
        let params = ChannelParams::default().with_fov(beta);
        let tx = &arena.transmitters()[0];
        for pd in pose_detectors(&layout, &o, Vector3::new(1.25, 1.25, 1.33)) {
            let p = los_received_power(tx, &pd, &params).unwrap();
            prop_assert!(p >= 0.0);
            if incidence_angle(&pd, tx).unwrap() > beta {
                prop_assert_eq!(p, 0.0);
            }
        }
    }

    #[test]
    fn combiners_ignore_branch_order(mut bs in prop::collection::vec(branch(), 1..8), seed in any::<u64>()) {
        let r = 0.53;
        let egc = combine_egc(&bs, r).unwrap();
        let mrc = combine_mrc(&bs, r).unwrap();
        let sbc = combine_sbc(&bs, r).unwrap().0;
        let n = bs.len();
        bs.rotate_left((seed as usize) % n);
        bs.reverse();
        assert_relative_eq!(combine_egc(&bs, r).unwrap(), egc, max_relative = 1e-12);
        assert_relative_eq!(combine_mrc(&bs, r).unwrap(), mrc, max_relative = 1e-12);
        prop_assert_eq!(combine_sbc(&bs, r).unwrap().0, sbc);
    }

    #[test]
    fn assignment_picks_a_nearest_transmitter(x in 0.0..=5.0f64, y in 0.0..=5.0f64, z in 0.0..=3.0f64) {
        let arena = default_arena();
        let p = Vector3::new(x, y, z);
        let k = assign_transmitter(&p, &arena).unwrap();
        let dk = (arena.transmitters()[k].position() - p).norm();
        for t in arena.transmitters() {
            prop_assert!(dk <= (t.position() - p).norm());
        }
    }

    #[test]
    fn irradiance_agrees_with_acos(x in -3.0..3.0f64, y in -3.0..3.0f64, z in -3.0..-0.01f64) {
        let tx = Transmitter::new(Vector3::zeros(), 1.0, 60.0).unwrap();
        let p = Vector3::new(x, y, z);
        let acos = (-z / p.norm()).clamp(-1.0, 1.0).acos().to_degrees();
        prop_assert!((irradiance_angle(&tx, &p).unwrap() - acos).abs() < 1e-9);
        let pd = PosedDetector { world_position: p, world_normal: Vector3::new(x, 0.0, 1.0).normalize() };
        let dir = -p.normalize();
        let acos = pd.world_normal.dot(&dir).clamp(-1.0, 1.0).acos().to_degrees();
        prop_assert!((incidence_angle(&pd, &tx).unwrap() - acos).abs() < 1e-9);
    }

    #[test]
    fn trace_text_round_trips(samples in prop::collection::vec((0.001..10.0f64, orientation()), 1..20)) {
        let mut t = 0.0;
        let samples: Vec<_> = samples.into_iter().map(|(dt, o)| { t += dt; (t, o) }).collect();
        let trace = OrientationTrace::new(samples).unwrap();
        let text = trace.to_text();
        let parsed = parse_orientation_trace(&text).unwrap();
        // the written form is canonical: reading and writing it again is a no-op
        prop_assert_eq!(parsed.to_text(), text);
        for ((t0, o0), (t1, o1)) in trace.samples().iter().zip(parsed.samples()) {
            prop_assert!((t0 - t1).abs() <= 1e-8 * t0.abs().max(1.0));
            prop_assert!((o0.roll() - o1.roll()).abs() <= 1e-6);
        }
    }
}

#[test]
fn half_power_at_divergence_angle() {
    for psi in [15.0, 30.0, 45.0, 60.0, 75.0] {
        let tx = Transmitter::new(Vector3::zeros(), 1.0, psi).unwrap();
        let params = ChannelParams::default().with_fov(90.0);
        let d = 2.0;
        let on_axis = PosedDetector {
            world_position: Vector3::new(0.0, 0.0, -d),
            world_normal: Vector3::z(),
        };
        let phi = psi.to_radians();
        let dir = Vector3::new(phi.sin(), 0.0, -phi.cos());
        let off_axis = PosedDetector {
            world_position: dir * d,
            world_normal: -dir,
        };
        let p0 = los_received_power(&tx, &on_axis, &params).unwrap();
        let p1 = los_received_power(&tx, &off_axis, &params).unwrap();
        assert_relative_eq!(p1 / p0, 0.5, max_relative = 1e-9);
    }
}

#[test]
fn confidence_interval_shrinks_with_root_n() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
    let draws: Vec<f64> = (0..40_000).map(|_| rng.gen_range(1.0..100.0)).collect();
    let stats = |n: usize| {
        let mut s = Stats::default();
        draws[..n].iter().for_each(|x| s.push(*x));
        s
    };
    for n in [1_000, 2_500, 10_000] {
        let ratio = stats(n).ci95_half_width() / stats(4 * n).ci95_half_width();
        assert!((ratio - 2.0).abs() <= 0.15 * 2.0, "n={n}: ratio {ratio}");
    }
}

#[test]
fn user_grid_is_inside_and_mirror_symmetric() {
    let arena = default_arena();
    let grid = user_grid(&arena, 11).unwrap();
    assert_eq!(grid.len(), 121);
    for p in &grid {
        assert!(arena.contains(p));
        let mirrored = Vector3::new(p.y, p.x, p.z);
        assert!(grid.iter().any(|q| (q - mirrored).norm() < 1e-12));
    }
}
