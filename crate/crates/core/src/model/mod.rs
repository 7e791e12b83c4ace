//! Static/dynamic Gaussian scene representation and its time interpolation.

mod interp;
mod io;
mod quat;
mod scene;

pub use interp::{
    covariance_of, dynamic_position_at, dynamic_rotation_at, slerp, static_position_at,
    temporal_opacity_at, Slerp,
};
pub(crate) use interp::{covariance_unchecked, hermite, keyframe_rotation, segment, temporal_window};
pub use io::{
    decode_scene_file, encode_scene_file, load_scene, save_scene, scene_digest, SCENE_MAGIC,
    SCENE_VERSION,
};
pub use quat::{add3, dist2, mat_mul, mat_vec, norm3, scale3, sub3, transpose, Mat3, Quat, Vec3};
pub use scene::{
    keyframe_count, sh_band, sh_len, DynamicGaussian, GaussianScene, StaticGaussian,
    UNIT_TOLERANCE,
};
