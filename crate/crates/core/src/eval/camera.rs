use crate::error::{Error, Result};
use crate::model::{mat_vec, norm3, scale3, sub3, Mat3, Vec3};

/// Pinhole camera. Camera axes: `x` right, `y` down, `z` forward.
#[derive(Clone, Debug, PartialEq)]
pub struct ProbeCamera {
    pub position: Vec3,
    /// World-to-camera rotation; rows are the camera axes in world space.
    pub rotation: Mat3,
    /// Focal length in pixels.
    pub focal: f64,
    pub width: usize,
    pub height: usize,
    pub time: f64,
}

fn cross(a: Vec3, b: Vec3) -> Vec3 {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn unit(v: Vec3) -> Vec3 {
    scale3(v, 1.0 / norm3(v))
}

impl ProbeCamera {
    /// Camera at `eye` looking at `target` with vertical field of view `fov_y` (radians).
    pub fn look_at(
        eye: Vec3,
        target: Vec3,
        up: Vec3,
        fov_y: f64,
        width: usize,
        height: usize,
        time: f64,
    ) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::validation("image dimensions must be positive"));
        }
        if !(fov_y > 0.0 && fov_y < std::f64::consts::PI) {
            return Err(Error::validation("field of view must lie in (0, pi)"));
        }
        let forward = sub3(target, eye);
        if norm3(forward) == 0.0 {
            return Err(Error::validation("camera target coincides with its position"));
        }
        let f = unit(forward);
        let side = cross(f, up);
        if norm3(side) < 1e-9 {
            return Err(Error::validation("up vector is parallel to the view direction"));
        }
        let right = unit(side);
        let down = cross(f, right);
        Ok(ProbeCamera {
            position: eye,
            rotation: [right, down, f],
            focal: height as f64 / (2.0 * (fov_y / 2.0).tan()),
            width,
            height,
            time,
        })
    }

    /// World point in camera coordinates.
    pub fn to_camera(&self, p: Vec3) -> Vec3 {
        mat_vec(&self.rotation, sub3(p, self.position))
    }

    /// Principal point; pixel centers sit at integer coordinates.
    pub fn principal_point(&self) -> (f64, f64) {
        ((self.width as f64 - 1.0) / 2.0, (self.height as f64 - 1.0) / 2.0)
    }

    /// Pixel coordinates of a camera-space point in front of the camera.
    pub fn project(&self, c: Vec3) -> Option<(f64, f64)> {
        if c[2] <= 0.0 {
            return None;
        }
        let (cx, cy) = self.principal_point();
        Some((self.focal * c[0] / c[2] + cx, self.focal * c[1] / c[2] + cy))
    }
}
