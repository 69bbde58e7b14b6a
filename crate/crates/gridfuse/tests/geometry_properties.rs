//! Property suites for poses, spaces, and cameras.

mod common;

use common::forward_camera_rotation;
use gridfuse::geometry::{CameraModel, CartesianSpace, FrustumSpace, Pose};
use nalgebra::Vector3;
use proptest::prelude::*;

fn arb_pose() -> impl Strategy<Value = Pose> {
    (
        [-1.0f64..1.0, -1.0..1.0, -1.0..1.0],
        -std::f64::consts::PI..std::f64::consts::PI,
        [-5.0f64..5.0, -5.0..5.0, -5.0..5.0],
    )
        .prop_map(|(axis, angle, t)| {
            Pose::from_axis_angle(
                Vector3::new(axis[0], axis[1], axis[2] + 1.5),
                angle,
                Vector3::new(t[0], t[1], t[2]),
                "vehicle",
            )
        })
}

proptest! {
    #[test]
    fn pose_composition_is_associative(a in arb_pose(), b in arb_pose(), c in arb_pose()) {
        let left = a.compose(&b).compose(&c);
        let right = a.compose(&b.compose(&c));
        let rot_err = (left.rotation() - right.rotation()).abs().max();
        let t_err = (left.translation() - right.translation()).amax();
        prop_assert!(rot_err < 1e-9, "rotation entries differ by {rot_err}");
        prop_assert!(t_err < 1e-9, "translations differ by {t_err}");
    }

    #[test]
    fn pose_inverse_composes_to_identity(p in arb_pose()) {
        let id = p.compose(&p.inverse());
        let rot_err = (id.rotation() - nalgebra::Matrix3::identity()).abs().max();
        prop_assert!(rot_err < 1e-9);
        prop_assert!(id.translation().amax() < 1e-9);
    }

    #[test]
    fn cartesian_round_trip_on_continuous_indices(
        counts in [1usize..8, 1usize..8, 1usize..8],
        cell in 0.1f64..2.0,
        frac in [0.0f64..1.0, 0.0f64..1.0, 0.0f64..1.0],
    ) {
        let space = CartesianSpace::from_counts(
            Vector3::new(-1.3, 0.4, -0.7),
            Vector3::new(cell, cell * 1.5, cell * 0.8),
            counts,
        ).unwrap();
        let dims = space.dims();
        let idx = [
            frac[0] * (dims[0] - 1) as f64,
            frac[1] * (dims[1] - 1) as f64,
            frac[2] * (dims[2] - 1) as f64,
        ];
        let p = space.grid_to_world(idx);
        let (back, in_bounds) = space.world_to_grid(&p);
        prop_assert!(in_bounds);
        for a in 0..3 {
            prop_assert!((back[a] - idx[a]).abs() < 1e-6, "axis {a}: {} vs {}", back[a], idx[a]);
        }
    }

    #[test]
    fn frustum_round_trip_on_continuous_indices(
        frac in [0.0f64..1.0, 0.0f64..1.0, 0.0f64..1.0],
        near in 0.5f64..4.0,
    ) {
        let camera = CameraModel::new(
            (60.0, 55.0),
            (23.5, 15.5),
            (32, 48),
            Pose::identity("vehicle"),
        ).unwrap();
        let planes = vec![near, near * 2.0, near * 3.5, near * 6.0];
        let frustum = FrustumSpace::new(camera, planes, 2).unwrap();
        let dims = frustum.dims();
        let idx = [
            frac[0] * (dims[0] - 1) as f64,
            frac[1] * (dims[1] - 1) as f64,
            frac[2] * (dims[2] - 1) as f64,
        ];
        let p = frustum.grid_to_world(idx);
        let (back, in_bounds) = frustum.world_to_grid(&p);
        prop_assert!(in_bounds);
        for a in 0..3 {
            prop_assert!((back[a] - idx[a]).abs() < 1e-6, "axis {a}: {} vs {}", back[a], idx[a]);
        }
    }

    #[test]
    fn project_unproject_recovers_the_point(
        p in [-8.0f64..8.0, -8.0f64..8.0, 2.0f64..30.0],
        yaw in -3.0f64..3.0,
    ) {
        let (s, c) = yaw.sin_cos();
        let yaw_rot = nalgebra::Matrix3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0);
        let pose = Pose::new(
            yaw_rot * forward_camera_rotation(),
            Vector3::new(0.3, -0.2, 1.2),
            "vehicle",
        ).unwrap();
        let camera = CameraModel::new((400.0, 420.0), (320.0, 240.0), (480, 640), pose.clone())
            .unwrap();
        // Express the candidate point in the camera frame so it sits in
        // front of the camera regardless of yaw.
        let world = pose.apply(&Vector3::new(p[0], p[1], p[2]));
        let proj = camera.project(&world);
        if proj.valid {
            let back = camera.unproject(proj.u, proj.v, proj.depth);
            prop_assert!((back - world).amax() < 1e-6);
        }
    }
}
