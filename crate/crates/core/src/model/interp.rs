//! Time evaluation of static and dynamic Gaussians.

use log::warn;

use super::quat::{add3, mat_mul, scale3, sub3, transpose, Mat3, Quat, Vec3};
use super::scene::{DynamicGaussian, GaussianScene, StaticGaussian, UNIT_TOLERANCE};
use crate::error::{Error, Result};

const TIME_SLACK: f64 = 1e-9;
const ANTIPODAL_TOLERANCE: f64 = 1e-9;

fn check_time(t: f64, duration: f64) -> Result<()> {
    if !(duration > 0.0) {
        return Err(Error::Domain(format!("duration {duration} must be positive")));
    }
    if !(t >= -TIME_SLACK && t <= duration + TIME_SLACK) {
        return Err(Error::Domain(format!("time {t} outside [0, {duration}]")));
    }
    Ok(())
}

/// `mu_0 + (t / L) * mu_disp`.
pub fn static_position_at(g: &StaticGaussian, t: f64, duration: f64) -> Result<Vec3> {
    check_time(t, duration)?;
    Ok(add3(g.pivot, scale3(g.displacement, t / duration)))
}

/// `R S S^T R^T` for per-axis scale `s` and unit quaternion `q`.
pub fn covariance_of(s: Vec3, q: Quat) -> Result<Mat3> {
    if !q.is_unit(UNIT_TOLERANCE) {
        return Err(Error::validation(format!(
            "rotation norm {} is not unit",
            q.norm()
        )));
    }
    if s.iter().any(|&v| !(v > 0.0)) {
        return Err(Error::validation("scale components must be positive"));
    }
    Ok(covariance_unchecked(s, q))
}

pub(crate) fn covariance_unchecked(s: Vec3, q: Quat) -> Mat3 {
    let r = q.to_matrix();
    let mut rs = r;
    for row in rs.iter_mut() {
        for (j, v) in row.iter_mut().enumerate() {
            *v *= s[j];
        }
    }
    mat_mul(&rs, &transpose(&rs))
}

/// Keyframe segment and local fraction `u in [0, 1]` for time `t`.
pub(crate) fn segment(t: f64, interval: u32, count: usize) -> (usize, f64) {
    let step = interval as f64;
    let x = (t / step).max(0.0);
    let seg = (x.floor() as usize).min(count.saturating_sub(2));
    let u = (x - seg as f64).clamp(0.0, 1.0);
    (seg, u)
}

/// Cubic Hermite interpolation of keyframe samples with central-difference
/// tangents (one-sided at the two ends).
pub(crate) fn hermite(points: &[Vec3], seg: usize, u: f64) -> Vec3 {
    let n = points.len();
    let tangent = |i: usize| -> Vec3 {
        if i == 0 {
            sub3(points[1], points[0])
        } else if i == n - 1 {
            sub3(points[n - 1], points[n - 2])
        } else {
            scale3(sub3(points[i + 1], points[i - 1]), 0.5)
        }
    };
    let (p0, p1) = (points[seg], points[seg + 1]);
    if u == 0.0 {
        return p0;
    }
    if u == 1.0 {
        return p1;
    }
    let (m0, m1) = (tangent(seg), tangent(seg + 1));
    let u2 = u * u;
    let u3 = u2 * u;
    let h00 = 2.0 * u3 - 3.0 * u2 + 1.0;
    let h10 = u3 - 2.0 * u2 + u;
    let h01 = -2.0 * u3 + 3.0 * u2;
    let h11 = u3 - u2;
    let mut out = [0.0; 3];
    for a in 0..3 {
        out[a] = h00 * p0[a] + h10 * m0[a] + h01 * p1[a] + h11 * m1[a];
    }
    out
}

/// Position of a dynamic Gaussian at time `t`.
pub fn dynamic_position_at(g: &DynamicGaussian, t: f64, scene: &GaussianScene) -> Result<Vec3> {
    check_time(t, scene.duration)?;
    if g.keyframe_positions.len() < 2 {
        return Err(Error::validation("at least two keyframes are required"));
    }
    let (seg, u) = segment(t, scene.keyframe_interval, g.keyframe_positions.len());
    Ok(hermite(&g.keyframe_positions, seg, u))
}

/// Result of a spherical interpolation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Slerp {
    pub rotation: Quat,
    /// Set when the endpoints were antipodal and the first endpoint was returned.
    pub degenerate: bool,
}

/// Shortest-arc spherical linear interpolation between unit quaternions.
pub fn slerp(a: Quat, b: Quat, u: f64) -> Slerp {
    let mut d = a.dot(b);
    if d <= -1.0 + ANTIPODAL_TOLERANCE {
        return Slerp {
            rotation: a,
            degenerate: true,
        };
    }
    let mut b = b;
    if d < 0.0 {
        b = b.neg();
        d = -d;
    }
    let rotation = if d > 1.0 - 1e-12 {
        Quat::new(
            a.w + u * (b.w - a.w),
            a.x + u * (b.x - a.x),
            a.y + u * (b.y - a.y),
            a.z + u * (b.z - a.z),
        )
        .normalized()
    } else {
        let theta = d.min(1.0).acos();
        let s = theta.sin();
        let wa = ((1.0 - u) * theta).sin() / s;
        let wb = (u * theta).sin() / s;
        Quat::new(
            wa * a.w + wb * b.w,
            wa * a.x + wb * b.x,
            wa * a.y + wb * b.y,
            wa * a.z + wb * b.z,
        )
        .normalized()
    };
    Slerp {
        rotation,
        degenerate: false,
    }
}

pub(crate) fn keyframe_rotation(rotations: &[Quat], seg: usize, u: f64) -> Quat {
    if u == 0.0 {
        return rotations[seg];
    }
    if u == 1.0 {
        return rotations[seg + 1];
    }
    let r = slerp(rotations[seg], rotations[seg + 1], u);
    if r.degenerate {
        warn!("antipodal keyframe rotations at segment {seg}; holding first endpoint");
    }
    r.rotation
}

/// Rotation of a dynamic Gaussian at time `t`.
pub fn dynamic_rotation_at(g: &DynamicGaussian, t: f64, scene: &GaussianScene) -> Result<Quat> {
    check_time(t, scene.duration)?;
    if g.keyframe_rotations.len() < 2 {
        return Err(Error::validation("at least two keyframes are required"));
    }
    let (seg, u) = segment(t, scene.keyframe_interval, g.keyframe_rotations.len());
    Ok(keyframe_rotation(&g.keyframe_rotations, seg, u))
}

/// Temporal visibility window: 1 on `[a_s, a_f]` with Gaussian fall-off edges.
pub fn temporal_opacity_at(g: &DynamicGaussian, t: f64) -> Result<f64> {
    if !(g.appear_variance > 0.0 && g.vanish_variance > 0.0) {
        return Err(Error::validation("temporal variances must be positive"));
    }
    Ok(temporal_window(
        t,
        g.appear_center,
        g.vanish_center,
        g.appear_variance,
        g.vanish_variance,
    ))
}

pub(crate) fn temporal_window(t: f64, a_s: f64, a_f: f64, b_s: f64, b_f: f64) -> f64 {
    if t < a_s {
        let d = t - a_s;
        (-d * d / (2.0 * b_s * b_s)).exp()
    } else if t > a_f {
        let d = t - a_f;
        (-d * d / (2.0 * b_f * b_f)).exp()
    } else {
        1.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::quat::Quat;
    use std::f64::consts::FRAC_PI_2;

    fn stat(pivot: Vec3, disp: Vec3) -> StaticGaussian {
        StaticGaussian {
            pivot,
            displacement: disp,
            log_scale: [0.0; 3],
            rotation: Quat::IDENTITY,
            opacity: 1.0,
            sh: vec![[0.0; 3]],
        }
    }

    fn dynamic(points: Vec<Vec3>, rots: Vec<Quat>) -> DynamicGaussian {
        DynamicGaussian {
            keyframe_positions: points,
            keyframe_rotations: rots,
            log_scale: [0.0; 3],
            base_opacity: 1.0,
            appear_center: 2.0,
            vanish_center: 5.0,
            appear_variance: 1.5,
            vanish_variance: 0.5,
            sh: vec![[0.0; 3]],
        }
    }

    fn scene_with(g: DynamicGaussian) -> GaussianScene {
        let n = g.keyframe_positions.len();
        let mut s = GaussianScene::empty((n - 1) as f64, 1, vec![], 0);
        s.dynamics.push(g);
        s
    }

    #[test]
    fn static_positions() {
        let g = stat([0.0; 3], [2.0, 0.0, 0.0]);
        assert_eq!(static_position_at(&g, 0.0, 8.0).unwrap(), [0.0; 3]);
        assert_eq!(static_position_at(&g, 8.0, 8.0).unwrap(), [2.0, 0.0, 0.0]);
        let g = stat([1.0; 3], [2.0, 4.0, 6.0]);
        assert_eq!(static_position_at(&g, 4.0, 8.0).unwrap(), [2.0, 3.0, 4.0]);
        assert!(matches!(
            static_position_at(&g, 8.5, 8.0),
            Err(Error::Domain(_))
        ));
        assert!(static_position_at(&g, -0.1, 8.0).is_err());
    }

    #[test]
    fn static_position_midpoint_is_exact_average() {
        let g = stat([0.3, -1.7, 2.1], [0.9, 0.25, -4.5]);
        let a = static_position_at(&g, 0.0, 10.0).unwrap();
        let b = static_position_at(&g, 10.0, 10.0).unwrap();
        let m = static_position_at(&g, 5.0, 10.0).unwrap();
        for i in 0..3 {
            assert_eq!(m[i], 0.5 * (a[i] + b[i]));
        }
    }

    #[test]
    fn covariance_examples() {
        let id = covariance_of([1.0; 3], Quat::IDENTITY).unwrap();
        assert_eq!(id, [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]);
        let d = covariance_of([2.0, 1.0, 1.0], Quat::IDENTITY).unwrap();
        assert_eq!(d, [[4.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]);
        let rz = Quat::from_axis_angle([0.0, 0.0, 1.0], FRAC_PI_2);
        let r = covariance_of([2.0, 1.0, 1.0], rz).unwrap();
        let expect = [[1.0, 0.0, 0.0], [0.0, 4.0, 0.0], [0.0, 0.0, 1.0]];
        for i in 0..3 {
            for j in 0..3 {
                assert!((r[i][j] - expect[i][j]).abs() < 1e-12);
            }
        }
        assert!(covariance_of([1.0; 3], Quat::new(1.0, 0.5, 0.0, 0.0)).is_err());
        assert!(covariance_of([1.0, 0.0, 1.0], Quat::IDENTITY).is_err());
    }

    #[test]
    fn hermite_reproduces_knots_and_constants() {
        let pts = vec![[0.5, 1.0, -2.0]; 5];
        let g = dynamic(pts.clone(), vec![Quat::IDENTITY; 5]);
        let s = scene_with(g.clone());
        for t in [0.0, 0.3, 1.7, 3.999, 4.0] {
            assert_eq!(dynamic_position_at(&g, t, &s).unwrap(), pts[0]);
        }
        let pts: Vec<Vec3> = (0..6).map(|i| [i as f64 * i as f64, 1.0 / (1.0 + i as f64), 3.0]).collect();
        let g = dynamic(pts.clone(), vec![Quat::IDENTITY; 6]);
        let s = scene_with(g.clone());
        for (n, p) in pts.iter().enumerate() {
            assert_eq!(dynamic_position_at(&g, n as f64, &s).unwrap(), *p);
        }
    }

    #[test]
    fn hermite_exact_on_linear_data() {
        let pts: Vec<Vec3> = (0..4).map(|i| [i as f64, 0.0, 0.0]).collect();
        let g = dynamic(pts, vec![Quat::IDENTITY; 4]);
        let s = scene_with(g.clone());
        assert_eq!(dynamic_position_at(&g, 1.5, &s).unwrap(), [1.5, 0.0, 0.0]);
        let one = dynamic(vec![[0.0; 3]], vec![Quat::IDENTITY]);
        assert!(dynamic_position_at(&one, 0.0, &s).is_err());
    }

    #[test]
    fn hermite_is_c1_at_interior_knots() {
        let pts: Vec<Vec3> = (0..6).map(|i| [(i as f64).sin(), (0.5 * i as f64).cos(), i as f64]).collect();
        let g = dynamic(pts, vec![Quat::IDENTITY; 6]);
        let s = scene_with(g.clone());
        let h = 1e-6;
        for n in 1..5 {
            let t = n as f64;
            let left = dynamic_position_at(&g, t - h, &s).unwrap();
            let mid = dynamic_position_at(&g, t, &s).unwrap();
            let right = dynamic_position_at(&g, t + h, &s).unwrap();
            for a in 0..3 {
                let dl = (mid[a] - left[a]) / h;
                let dr = (right[a] - mid[a]) / h;
                assert!((dl - dr).abs() < 1e-4, "knot {n} axis {a}: {dl} vs {dr}");
            }
        }
    }

    #[test]
    fn slerp_examples() {
        let z = [0.0, 0.0, 1.0];
        let q0 = Quat::IDENTITY;
        let q90 = Quat::from_axis_angle(z, FRAC_PI_2);
        assert_eq!(slerp(q90, q90, 0.4).rotation, q90);
        let half = slerp(q0, q90, 0.5).rotation;
        assert!((half.angle() - FRAC_PI_2 / 2.0).abs() < 1e-12);
        let third = slerp(q0, q90, 1.0 / 3.0).rotation;
        let expect = Quat::from_axis_angle(z, FRAC_PI_2 / 3.0);
        assert!((third.dot(expect) - 1.0).abs() < 1e-12);
        // sign-flipped endpoint still takes the short way
        let short = slerp(q0, q90.neg(), 0.5).rotation;
        assert!((short.angle() - FRAC_PI_2 / 2.0).abs() < 1e-12);
        assert!((half.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn slerp_antipodal_falls_back() {
        let q = Quat::from_axis_angle([1.0, 0.0, 0.0], 0.3);
        let r = slerp(q, q.neg(), 0.5);
        assert!(r.degenerate);
        assert_eq!(r.rotation, q);
    }

    #[test]
    fn dynamic_rotation_midpoint() {
        let z = [0.0, 0.0, 1.0];
        let g = dynamic(
            vec![[0.0; 3]; 2],
            vec![Quat::IDENTITY, Quat::from_axis_angle(z, FRAC_PI_2)],
        );
        let s = scene_with(g.clone());
        let r = dynamic_rotation_at(&g, 0.5, &s).unwrap();
        assert!((r.angle() - FRAC_PI_2 / 2.0).abs() < 1e-12);
    }

    #[test]
    fn temporal_opacity_examples() {
        let g = dynamic(vec![[0.0; 3]; 2], vec![Quat::IDENTITY; 2]);
        assert_eq!(temporal_opacity_at(&g, 3.0).unwrap(), 1.0);
        assert_eq!(temporal_opacity_at(&g, 2.0).unwrap(), 1.0);
        assert_eq!(temporal_opacity_at(&g, 5.0).unwrap(), 1.0);
        let edge = temporal_opacity_at(&g, 2.0 - 1.5).unwrap();
        assert!((edge - (-0.5f64).exp()).abs() < 1e-15);
        assert!((edge - 0.6065).abs() < 1e-4);
        assert_eq!(temporal_opacity_at(&g, -1e6).unwrap(), 0.0);
        let mut bad = g.clone();
        bad.vanish_variance = 0.0;
        assert!(temporal_opacity_at(&bad, 0.0).is_err());
    }
}
