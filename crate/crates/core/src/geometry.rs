//! Hemispherical multi-detector headset layout and head pose.
//!
//! Detectors sit on a hemisphere of radius `r_headset`: one on the apex,
//! then rings ("layers") at increasing inclination. Ring `j` sits at
//! inclination `theta_z * j` and carries `ceil(360/theta_d * sin(theta_j))`
//! detectors spaced evenly in azimuth. The local frame is centered on the
//! hemisphere center with the apex on `+z`.

use nalgebra::{Matrix3, Vector3};

use crate::error::{Error, Result};
use crate::report::fmt_num;

/// Slack used when rounding layer counts up, so that a product that is an
/// integer in exact arithmetic is not pushed to the next integer by
/// floating point noise.
const CEIL_SLACK: f64 = 1e-9;

fn ceil_tol(x: f64) -> usize {
    (x - CEIL_SLACK).ceil().max(0.0) as usize
}

/// Minimum angular distance between two circular detectors of radius `r_pd`
/// on a hemisphere of radius `r_headset`, in degrees.
pub fn min_angular_distance(r_pd: f64, r_headset: f64) -> Result<f64> {
    if !(r_pd > 0.0) || !(r_headset > 0.0) {
        return Err(Error::domain(format!(
            "detector and headset radii must be positive (r_pd={r_pd}, r_headset={r_headset})"
        )));
    }
    Ok(2.0 * (r_pd / r_headset).atan().to_degrees())
}

/// Physical headset dimensions plus the chosen detector spacing.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeadsetParams {
    r_headset: f64,
    r_pd: f64,
    theta_d: f64,
}

impl HeadsetParams {
    /// Lengths in metres, `theta_d` in degrees.
    pub fn new(r_headset: f64, r_pd: f64, theta_d: f64) -> Result<Self> {
        if !(r_headset > 0.0) || !(r_pd > 0.0) {
            return Err(Error::domain("r_headset and r_pd must be positive"));
        }
        if r_pd >= r_headset {
            return Err(Error::domain(format!(
                "r_pd ({r_pd} m) must be smaller than r_headset ({r_headset} m)"
            )));
        }
        if !(theta_d > 0.0 && theta_d <= 90.0) {
            return Err(Error::domain(format!(
                "theta_d = {theta_d} violates 0 < theta_d <= 90"
            )));
        }
        let theta_min = min_angular_distance(r_pd, r_headset)?;
        if theta_d < theta_min {
            return Err(Error::domain(format!(
                "theta_d = {theta_d} deg is below the minimum angular distance {theta_min:.6} deg"
            )));
        }
        Ok(Self {
            r_headset,
            r_pd,
            theta_d,
        })
    }

    pub fn r_headset(&self) -> f64 {
        self.r_headset
    }

    pub fn r_pd(&self) -> f64 {
        self.r_pd
    }

    pub fn theta_d(&self) -> f64 {
        self.theta_d
    }

    /// Active area of one detector, `pi * r_pd^2`.
    pub fn pd_area(&self) -> f64 {
        std::f64::consts::PI * self.r_pd * self.r_pd
    }
}

/// One detector in the headset frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectorPlacement {
    /// 0 for the apex detector, 1..=N_L for the rings.
    pub layer_index: usize,
    /// Position within the layer, 0-based, azimuth ascending.
    pub index_in_layer: usize,
    pub inclination: f64,
    pub azimuth: f64,
    pub local_position: Vector3<f64>,
    pub local_normal: Vector3<f64>,
}

/// Layer counts implied by a given spacing, without building detectors.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerPlan {
    pub n_layers: usize,
    pub theta_z: f64,
    pub layer_counts: Vec<usize>,
}

impl LayerPlan {
    pub fn new(theta_d: f64) -> Self {
        let n_layers = ceil_tol((90.0 - theta_d / 2.0) / theta_d);
        let theta_z = if theta_d * n_layers as f64 > 90.0 + CEIL_SLACK {
            90.0 / n_layers as f64
        } else {
            theta_d
        };
        let layer_counts = (1..=n_layers)
            .map(|j| {
                let theta_j = (theta_z * j as f64).to_radians();
                ceil_tol(360.0 / theta_d * theta_j.sin())
            })
            .collect();
        Self {
            n_layers,
            theta_z,
            layer_counts,
        }
    }

    /// Total detector count including the apex detector.
    pub fn detector_count(&self) -> usize {
        1 + self.layer_counts.iter().sum::<usize>()
    }
}

/// Full detector layout for one headset.
#[derive(Debug, Clone, PartialEq)]
pub struct HeadsetLayout {
    pub params: HeadsetParams,
    pub n_layers: usize,
    pub theta_z: f64,
    /// Apex first, then layers ascending, azimuth ascending within a layer.
    pub detectors: Vec<DetectorPlacement>,
}

fn placement(
    r: f64,
    layer_index: usize,
    index_in_layer: usize,
    inclination: f64,
    azimuth: f64,
) -> DetectorPlacement {
    let (st, ct) = inclination.to_radians().sin_cos();
    let (sp, cp) = azimuth.to_radians().sin_cos();
    let normal = Vector3::new(st * cp, st * sp, ct);
    DetectorPlacement {
        layer_index,
        index_in_layer,
        inclination,
        azimuth,
        local_position: normal * r,
        local_normal: normal,
    }
}

/// Place every detector for the given headset parameters.
pub fn build_layout(params: HeadsetParams) -> HeadsetLayout {
    let plan = LayerPlan::new(params.theta_d);
    let r = params.r_headset;
    let mut detectors = Vec::with_capacity(plan.detector_count());
    detectors.push(placement(r, 0, 0, 0.0, 0.0));
    for (j, &count) in plan.layer_counts.iter().enumerate() {
        let layer = j + 1;
        let inclination = plan.theta_z * layer as f64;
        for i in 0..count {
            let azimuth = 360.0 / count as f64 * i as f64;
            detectors.push(placement(r, layer, i, inclination, azimuth));
        }
    }
    HeadsetLayout {
        params,
        n_layers: plan.n_layers,
        theta_z: plan.theta_z,
        detectors,
    }
}

impl HeadsetLayout {
    pub fn len(&self) -> usize {
        self.detectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.detectors.is_empty()
    }

    /// Detector count per ring, apex excluded.
    pub fn layer_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.n_layers];
        for d in self.detectors.iter().filter(|d| d.layer_index > 0) {
            counts[d.layer_index - 1] += 1;
        }
        counts
    }

    /// Comma-separated table of detector placements, header included.
    pub fn to_csv(&self) -> String {
        let mut out =
            String::from("layer,index,inclination_deg,azimuth_deg,x_m,y_m,z_m,nx,ny,nz\n");
        for d in &self.detectors {
            let p = d.local_position;
            let n = d.local_normal;
            let fields = [
                d.layer_index.to_string(),
                d.index_in_layer.to_string(),
                fmt_num(d.inclination),
                fmt_num(d.azimuth),
                fmt_num(p.x),
                fmt_num(p.y),
                fmt_num(p.z),
                fmt_num(n.x),
                fmt_num(n.y),
                fmt_num(n.z),
            ];
            out.push_str(&fields.join(","));
            out.push('\n');
        }
        out
    }
}

/// Map an angle in degrees into (-180, 180].
pub fn normalize_angle(deg: f64) -> f64 {
    let r = deg.rem_euclid(360.0);
    if r > 180.0 {
        r - 360.0
    } else {
        r
    }
}

/// Head orientation as yaw (about z), pitch (about y) and roll (about x), degrees.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Orientation {
    yaw: f64,
    pitch: f64,
    roll: f64,
}

impl Default for Orientation {
    fn default() -> Self {
        Self::IDENTITY
    }
}

impl Orientation {
    pub const IDENTITY: Orientation = Orientation {
        yaw: 0.0,
        pitch: 0.0,
        roll: 0.0,
    };

    /// Angles are normalized into (-180, 180].
    pub fn new(yaw: f64, pitch: f64, roll: f64) -> Result<Self> {
        if !(yaw.is_finite() && pitch.is_finite() && roll.is_finite()) {
            return Err(Error::domain(format!(
                "orientation angles must be finite (yaw={yaw}, pitch={pitch}, roll={roll})"
            )));
        }
        Ok(Self {
            yaw: normalize_angle(yaw),
            pitch: normalize_angle(pitch),
            roll: normalize_angle(roll),
        })
    }

    pub fn yaw(&self) -> f64 {
        self.yaw
    }

    pub fn pitch(&self) -> f64 {
        self.pitch
    }

    pub fn roll(&self) -> f64 {
        self.roll
    }
}

/// `R = Rz(yaw) * Ry(pitch) * Rx(roll)`.
pub fn rotation_matrix(o: &Orientation) -> Matrix3<f64> {
    let (sx, cx) = o.roll.to_radians().sin_cos();
    let (sy, cy) = o.pitch.to_radians().sin_cos();
    let (sz, cz) = o.yaw.to_radians().sin_cos();
    #[rustfmt::skip]
    let rx = Matrix3::new(
        1.0, 0.0, 0.0,
        0.0, cx, -sx,
        0.0, sx, cx,
    );
    #[rustfmt::skip]
    let ry = Matrix3::new(
        cy, 0.0, sy,
        0.0, 1.0, 0.0,
        -sy, 0.0, cy,
    );
    #[rustfmt::skip]
    let rz = Matrix3::new(
        cz, -sz, 0.0,
        sz, cz, 0.0,
        0.0, 0.0, 1.0,
    );
    rz * ry * rx
}

/// Detector position and facing in world coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PosedDetector {
    pub world_position: Vector3<f64>,
    pub world_normal: Vector3<f64>,
}

/// Rotate the layout by `o` about the hemisphere center and translate it to `head_center`.
pub fn pose_detectors(
    layout: &HeadsetLayout,
    o: &Orientation,
    head_center: Vector3<f64>,
) -> Vec<PosedDetector> {
    let r = rotation_matrix(o);
    layout
        .detectors
        .iter()
        .map(|d| PosedDetector {
            world_position: head_center + r * d.local_position,
            world_normal: r * d.local_normal,
        })
        .collect()
}
