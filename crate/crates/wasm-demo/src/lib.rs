//! Browser bindings for the arena simulator. Everything runs against the
//! default four-transmitter arena.
//!
//! The `*_impl` functions hold the logic so they can be tested natively; the
//! exported wrappers only translate errors.

use nalgebra::Vector3;
use wasm_bindgen::prelude::*;

use vlcvr::arena::{default_arena, user_grid};
use vlcvr::channel::ChannelParams;
use vlcvr::combining::Combiner;
use vlcvr::geometry::{build_layout, pose_detectors, HeadsetLayout, HeadsetParams, Orientation};
use vlcvr::report::to_db;
use vlcvr::sweep::{
    connectivity_sweep, evaluate_user, fov_half_angle, serving_powers, CoverageSpec, Executor,
    OrientationSet,
};

const R_HEADSET: f64 = 0.0762;
const R_PD: f64 = 0.0025;

/// Values per detector returned by [`headset_view`].
pub const DETECTOR_STRIDE: usize = 7;

fn layout(theta_d: f64) -> vlcvr::Result<HeadsetLayout> {
    Ok(build_layout(HeadsetParams::new(R_HEADSET, R_PD, theta_d)?))
}

fn channel(theta_d: f64, alpha: f64) -> vlcvr::Result<ChannelParams> {
    let beta = fov_half_angle(alpha, theta_d);
    let params = ChannelParams::default().with_fov(beta);
    params.validate()?;
    Ok(params)
}

fn user_position(x: f64, y: f64) -> vlcvr::Result<Vector3<f64>> {
    let arena = default_arena();
    let p = Vector3::new(x, y, arena.user_height());
    if !arena.contains(&p) {
        return Err(vlcvr::Error::Domain(format!(
            "user ({x}, {y}) is outside the arena"
        )));
    }
    Ok(p)
}

/// Posed detectors with their serving-link power, flattened as
/// `[x, y, z, nx, ny, nz, power_w]` per detector, head-relative.
#[allow(clippy::too_many_arguments)]
pub fn headset_view_impl(
    theta_d: f64,
    alpha: f64,
    yaw: f64,
    pitch: f64,
    roll: f64,
    x: f64,
    y: f64,
) -> vlcvr::Result<Vec<f64>> {
    let layout = layout(theta_d)?;
    let params = channel(theta_d, alpha)?;
    let o = Orientation::new(yaw, pitch, roll)?;
    let pos = user_position(x, y)?;
    let powers = serving_powers(&layout, &o, &pos, &default_arena(), &params)?;
    let posed = pose_detectors(&layout, &o, Vector3::zeros());
    let mut out = Vec::with_capacity(posed.len() * DETECTOR_STRIDE);
    for (pd, p) in posed.iter().zip(powers) {
        out.extend(pd.world_position.iter());
        out.extend(pd.world_normal.iter());
        out.push(p);
    }
    Ok(out)
}

/// Percentage of the coarse orientation lattice with an active link at the
/// arena's reference user position.
pub fn coverage_impl(theta_d: f64, alpha: f64) -> vlcvr::Result<f64> {
    let arena = default_arena();
    let spec = CoverageSpec {
        headset: HeadsetParams::new(R_HEADSET, R_PD, theta_d)?,
        alpha,
        orientations: OrientationSet::COVERAGE_COARSE,
        user_position: Vector3::new(1.25, 1.25, arena.user_height()),
        arena,
        channel: ChannelParams::default(),
    };
    connectivity_sweep(&spec, &Executor::default())
}

/// SINR in dB for every user on a `per_side` x `per_side` grid, all wearing
/// the same orientation. Row-major with x outer, y inner.
#[allow(clippy::too_many_arguments)]
pub fn sinr_map_impl(
    theta_d: f64,
    alpha: f64,
    combiner: &str,
    yaw: f64,
    pitch: f64,
    roll: f64,
    per_side: usize,
) -> vlcvr::Result<Vec<f64>> {
    let combiner: Combiner = combiner.parse()?;
    let layout = layout(theta_d)?;
    let params = channel(theta_d, alpha)?;
    let o = Orientation::new(yaw, pitch, roll)?;
    let arena = default_arena();
    user_grid(&arena, per_side)?
        .iter()
        .map(|p| {
            Ok(to_db(
                evaluate_user(&layout, &o, p, &arena, &params)?.get(combiner),
            ))
        })
        .collect()
}

fn js(err: vlcvr::Error) -> JsError {
    JsError::new(&err.to_string())
}

#[wasm_bindgen]
pub fn detector_count(theta_d: f64) -> Result<usize, JsError> {
    layout(theta_d).map(|l| l.len()).map_err(js)
}

#[wasm_bindgen]
pub fn headset_view(
    theta_d: f64,
    alpha: f64,
    yaw: f64,
    pitch: f64,
    roll: f64,
    x: f64,
    y: f64,
) -> Result<Vec<f64>, JsError> {
    headset_view_impl(theta_d, alpha, yaw, pitch, roll, x, y).map_err(js)
}

#[wasm_bindgen]
pub fn coverage(theta_d: f64, alpha: f64) -> Result<f64, JsError> {
    coverage_impl(theta_d, alpha).map_err(js)
}

#[wasm_bindgen]
pub fn sinr_map(
    theta_d: f64,
    alpha: f64,
    combiner: &str,
    yaw: f64,
    pitch: f64,
    roll: f64,
    per_side: usize,
) -> Result<Vec<f64>, JsError> {
    sinr_map_impl(theta_d, alpha, combiner, yaw, pitch, roll, per_side).map_err(js)
}
