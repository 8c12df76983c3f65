//! Line-of-sight optical channel between a ceiling transmitter and one
//! photodetector, plus the receiver noise model.

use std::f64::consts::PI;

use nalgebra::Vector3;

use crate::error::{Error, Result};
use crate::geometry::PosedDetector;

pub const ELECTRON_CHARGE: f64 = 1.602_176_634e-19;
pub const BOLTZMANN: f64 = 1.380_649e-23;

/// Lambertian emission order for a half-power divergence half-angle in degrees.
pub fn lambertian_order(divergence_half_angle: f64) -> Result<f64> {
    if !(divergence_half_angle > 0.0 && divergence_half_angle < 90.0) {
        return Err(Error::domain(format!(
            "divergence half-angle {divergence_half_angle} deg outside (0, 90)"
        )));
    }
    Ok(-(2f64.ln()) / divergence_half_angle.to_radians().cos().ln())
}

/// LED or laser-diode transmitter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transmitter {
    position: Vector3<f64>,
    power: f64,
    divergence_half_angle: f64,
    pointing: Vector3<f64>,
    order: f64,
}

impl Transmitter {
    /// Downward-pointing transmitter.
    pub fn new(position: Vector3<f64>, power: f64, divergence_half_angle: f64) -> Result<Self> {
        Self::with_pointing(position, power, divergence_half_angle, -Vector3::z())
    }

    pub fn with_pointing(
        position: Vector3<f64>,
        power: f64,
        divergence_half_angle: f64,
        pointing: Vector3<f64>,
    ) -> Result<Self> {
        if !(power > 0.0) || !power.is_finite() {
            return Err(Error::domain(format!(
                "transmit power {power} W must be positive"
            )));
        }
        if !position.iter().all(|c| c.is_finite()) {
            return Err(Error::domain("transmitter position must be finite"));
        }
        let norm = pointing.norm();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::domain(
                "transmitter pointing must be a non-zero vector",
            ));
        }
        let order = lambertian_order(divergence_half_angle)?;
        Ok(Self {
            position,
            power,
            divergence_half_angle,
            pointing: pointing / norm,
            order,
        })
    }

    pub fn position(&self) -> Vector3<f64> {
        self.position
    }

    pub fn power(&self) -> f64 {
        self.power
    }

    pub fn divergence_half_angle(&self) -> f64 {
        self.divergence_half_angle
    }

    pub fn pointing(&self) -> Vector3<f64> {
        self.pointing
    }

    pub fn lambertian_order(&self) -> f64 {
        self.order
    }
}

/// Receiver front-end and noise constants, SI units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelParams {
    /// Detector area, m^2.
    pub a_pd: f64,
    /// A/W.
    pub responsivity: f64,
    /// Hz.
    pub bandwidth: f64,
    pub filter_transmission: f64,
    pub refractive_index: f64,
    /// Detector field-of-view half-angle, degrees.
    pub fov_half_angle: f64,
    /// A.
    pub background_current: f64,
    pub i2: f64,
    pub i3: f64,
    pub electron_charge: f64,
    pub boltzmann: f64,
    /// K.
    pub temperature: f64,
    pub open_loop_gain: f64,
    /// F/m^2.
    pub capacitance_per_area: f64,
    pub fet_channel_noise_factor: f64,
    /// S.
    pub fet_transconductance: f64,
}

impl Default for ChannelParams {
    /// Reference receiver: 2.5 mm detector radius, 0.53 A/W, 10 MHz,
    /// 5100 uA background, 22.5 deg field of view, and the usual
    /// FET-preamplifier thermal noise constants.
    fn default() -> Self {
        Self {
            a_pd: PI * 0.0025 * 0.0025,
            responsivity: 0.53,
            bandwidth: 10e6,
            filter_transmission: 0.9,
            refractive_index: 1.5,
            fov_half_angle: 22.5,
            background_current: 5100e-6,
            i2: 0.562,
            i3: 0.0868,
            electron_charge: ELECTRON_CHARGE,
            boltzmann: BOLTZMANN,
            temperature: 295.0,
            open_loop_gain: 10.0,
            // 112 pF/cm^2
            capacitance_per_area: 1.12e-6, // 112 pF/cm^2
            fet_channel_noise_factor: 1.5,
            fet_transconductance: 30e-3,
        }
    }
}

impl ChannelParams {
    pub fn with_fov(mut self, fov_half_angle: f64) -> Self {
        self.fov_half_angle = fov_half_angle;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("a_pd", self.a_pd),
            ("responsivity", self.responsivity),
            ("bandwidth", self.bandwidth),
            ("filter_transmission", self.filter_transmission),
            ("refractive_index", self.refractive_index),
            ("fov_half_angle", self.fov_half_angle),
            ("background_current", self.background_current),
            ("i2", self.i2),
            ("i3", self.i3),
            ("electron_charge", self.electron_charge),
            ("boltzmann", self.boltzmann),
            ("temperature", self.temperature),
            ("open_loop_gain", self.open_loop_gain),
            ("capacitance_per_area", self.capacitance_per_area),
            ("fet_channel_noise_factor", self.fet_channel_noise_factor),
            ("fet_transconductance", self.fet_transconductance),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::domain(format!(
                    "{name} = {v} must be positive and finite"
                )));
            }
        }
        if self.filter_transmission > 1.0 {
            return Err(Error::domain(
                "filter_transmission must satisfy 0 < T_s <= 1",
            ));
        }
        if self.fov_half_angle > 90.0 {
            return Err(Error::domain(format!(
                "fov_half_angle = {} violates 0 < beta <= 90",
                self.fov_half_angle
            )));
        }
        Ok(())
    }
}

/// Concentrator gain `eta^2 / sin^2(beta)` inside the field of view, 0 outside.
pub fn concentrator_gain(psi: f64, params: &ChannelParams) -> f64 {
    if psi <= params.fov_half_angle {
        let s = params.fov_half_angle.to_radians().sin();
        params.refractive_index * params.refractive_index / (s * s)
    } else {
        0.0
    }
}

/// Angle between two vectors in degrees, via atan2 of the cross norm and
/// dot product of the normalized inputs.
fn angle_between(u: &Vector3<f64>, v: &Vector3<f64>) -> f64 {
    let u = u.normalize();
    let v = v.normalize();
    u.cross(&v).norm().atan2(u.dot(&v)).to_degrees()
}

fn separation(from: &Vector3<f64>, to: &Vector3<f64>) -> Result<Vector3<f64>> {
    let v = to - from;
    if v.norm() == 0.0 {
        return Err(Error::domain("transmitter and detector positions coincide"));
    }
    Ok(v)
}

/// Angle between the transmitter axis and the ray towards the detector, degrees.
pub fn irradiance_angle(tx: &Transmitter, pd_position: &Vector3<f64>) -> Result<f64> {
    let v = separation(&tx.position, pd_position)?;
    Ok(angle_between(&tx.pointing, &v))
}

/// Angle between the detector normal and the ray towards the transmitter, degrees.
pub fn incidence_angle(pd: &PosedDetector, tx: &Transmitter) -> Result<f64> {
    let v = separation(&pd.world_position, &tx.position)?;
    Ok(angle_between(&pd.world_normal, &v))
}

/// Distance and both link angles for one transmitter-detector pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkGeometry {
    pub distance: f64,
    pub irradiance_angle: f64,
    pub incidence_angle: f64,
}

impl LinkGeometry {
    pub fn between(tx: &Transmitter, pd: &PosedDetector) -> Result<Self> {
        let v = separation(&tx.position, &pd.world_position)?;
        Ok(Self {
            distance: v.norm(),
            irradiance_angle: angle_between(&tx.pointing, &v),
            incidence_angle: angle_between(&pd.world_normal, &(-v)),
        })
    }
}

/// Received optical power (W) at a detector from a Lambertian LOS path.
///
/// Zero when the detector is behind the emitter (irradiance >= 90 deg) or
/// the ray falls outside the detector field of view.
pub fn los_received_power(
    tx: &Transmitter,
    pd: &PosedDetector,
    params: &ChannelParams,
) -> Result<f64> {
    let link = LinkGeometry::between(tx, pd)?;
    Ok(power_for_link(tx, &link, params))
}

pub(crate) fn power_for_link(tx: &Transmitter, link: &LinkGeometry, params: &ChannelParams) -> f64 {
    if link.irradiance_angle >= 90.0 || link.incidence_angle > params.fov_half_angle {
        return 0.0;
    }
    let m = tx.order;
    let d2 = link.distance * link.distance;
    let radiant = (m + 1.0) / (2.0 * PI * d2) * link.irradiance_angle.to_radians().cos().powf(m);
    let p = tx.power
        * radiant
        * params.a_pd
        * params.filter_transmission
        * concentrator_gain(link.incidence_angle, params)
        * link.incidence_angle.to_radians().cos();
    p.max(0.0)
}

/// Shot-noise variance (A^2) given the total optical power reaching the detector.
pub fn shot_noise_variance(total_received_power: f64, params: &ChannelParams) -> Result<f64> {
    if !(total_received_power >= 0.0) {
        return Err(Error::domain(format!(
            "received power {total_received_power} W must be non-negative"
        )));
    }
    let q = params.electron_charge;
    let b = params.bandwidth;
    Ok(2.0 * q * params.responsivity * total_received_power * b
        + 2.0 * q * params.background_current * params.i2 * b)
}

/// Preamplifier thermal-noise variance (A^2): feedback-resistor term plus FET channel term.
pub fn thermal_noise_variance(params: &ChannelParams) -> f64 {
    let (k, t, b) = (params.boltzmann, params.temperature, params.bandwidth);
    let ca = params.capacitance_per_area * params.a_pd;
    let feedback = 8.0 * PI * k * t / params.open_loop_gain * ca * params.i2 * b * b;
    let fet = 16.0 * PI * PI * k * t * params.fet_channel_noise_factor
        / params.fet_transconductance
        * ca
        * ca
        * params.i3
        * b
        * b
        * b;
    feedback + fet
}

/// Shot plus thermal noise variance.
pub fn total_noise_variance(total_received_power: f64, params: &ChannelParams) -> Result<f64> {
    Ok(shot_noise_variance(total_received_power, params)? + thermal_noise_variance(params))
}
