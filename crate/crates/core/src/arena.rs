//! The VR arena: room, ceiling transmitters, user placement and head-orientation inputs.

use std::io::BufRead;

use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::channel::Transmitter;
use crate::error::{Error, Result};
use crate::geometry::Orientation;
use crate::report::fmt_num;

#[derive(Debug, Clone, PartialEq)]
pub struct Arena {
    dimensions: Vector3<f64>,
    transmitters: Vec<Transmitter>,
    user_height: f64,
}

fn inside(p: &Vector3<f64>, dims: &Vector3<f64>) -> bool {
    (0..3).all(|i| p[i] >= 0.0 && p[i] <= dims[i])
}

impl Arena {
    pub fn new(
        dimensions: Vector3<f64>,
        transmitters: Vec<Transmitter>,
        user_height: f64,
    ) -> Result<Self> {
        if !dimensions.iter().all(|d| *d > 0.0 && d.is_finite()) {
            return Err(Error::domain("arena dimensions must be positive"));
        }
        if transmitters.is_empty() {
            return Err(Error::domain("arena needs at least one transmitter"));
        }
        if let Some((i, tx)) = transmitters
            .iter()
            .enumerate()
            .find(|(_, tx)| !inside(&tx.position(), &dimensions))
        {
            return Err(Error::domain(format!(
                "transmitter {i} at {:?} lies outside the arena",
                tx.position().as_slice()
            )));
        }
        if !(user_height > 0.0 && user_height < dimensions.z) {
            return Err(Error::domain(format!(
                "user height {user_height} m must lie strictly between floor and ceiling"
            )));
        }
        Ok(Self {
            dimensions,
            transmitters,
            user_height,
        })
    }

    pub fn dimensions(&self) -> Vector3<f64> {
        self.dimensions
    }

    pub fn transmitters(&self) -> &[Transmitter] {
        &self.transmitters
    }

    pub fn user_height(&self) -> f64 {
        self.user_height
    }

    pub fn contains(&self, p: &Vector3<f64>) -> bool {
        inside(p, &self.dimensions)
    }
}

/// Ceiling positions of the reference four-cell layout in a 5 x 5 x 3 m room.
pub const DEFAULT_TX_POSITIONS: [[f64; 3]; 4] = [
    [1.25, 1.25, 3.0],
    [1.25, 3.75, 3.0],
    [3.75, 1.25, 3.0],
    [3.75, 3.75, 3.0],
];
pub const DEFAULT_TX_POWER: f64 = 10.0;
pub const DEFAULT_DIVERGENCE: f64 = 60.0;
pub const DEFAULT_USER_HEIGHT: f64 = 1.33;

/// 5 x 5 x 3 m room with four 10 W, 60 deg transmitters and users at 1.33 m.
pub fn default_arena() -> Arena {
    let txs = DEFAULT_TX_POSITIONS
        .iter()
        .map(|p| Transmitter::new(Vector3::from(*p), DEFAULT_TX_POWER, DEFAULT_DIVERGENCE))
        .collect::<Result<Vec<_>>>()
        .expect("default transmitters are valid");
    Arena::new(Vector3::new(5.0, 5.0, 3.0), txs, DEFAULT_USER_HEIGHT)
        .expect("default arena is valid")
}

/// Index of the nearest transmitter; ties go to the lowest index.
pub fn assign_transmitter(position: &Vector3<f64>, arena: &Arena) -> Result<usize> {
    if !arena.contains(position) {
        return Err(Error::domain(format!(
            "position {:?} lies outside the arena",
            position.as_slice()
        )));
    }
    let mut best = (0, f64::INFINITY);
    for (i, tx) in arena.transmitters.iter().enumerate() {
        let d = (tx.position() - position).norm_squared();
        if d < best.1 {
            best = (i, d);
        }
    }
    Ok(best.0)
}

/// A user standing somewhere in the arena.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UserState {
    pub position: Vector3<f64>,
    pub orientation: Orientation,
    pub assigned_tx: usize,
}

impl UserState {
    /// Places a user and assigns the nearest transmitter.
    pub fn new(position: Vector3<f64>, orientation: Orientation, arena: &Arena) -> Result<Self> {
        let assigned_tx = assign_transmitter(&position, arena)?;
        Ok(Self {
            position,
            orientation,
            assigned_tx,
        })
    }
}

/// `per_side x per_side` floor grid at user height, wall to wall.
pub fn user_grid(arena: &Arena, per_side: usize) -> Result<Vec<Vector3<f64>>> {
    user_grid_with_margin(arena, per_side, 0.0)
}

/// Like [`user_grid`] but keeps `margin` metres away from each wall.
///
/// A single point per side degenerates to the room center.
pub fn user_grid_with_margin(
    arena: &Arena,
    per_side: usize,
    margin: f64,
) -> Result<Vec<Vector3<f64>>> {
    if per_side == 0 {
        return Err(Error::domain("user grid needs at least one point per side"));
    }
    let dims = arena.dimensions;
    if !(margin >= 0.0) || 2.0 * margin >= dims.x.min(dims.y) {
        return Err(Error::domain(format!(
            "grid margin {margin} m does not fit the floor"
        )));
    }
    let z = arena.user_height;
    if per_side == 1 {
        return Ok(vec![Vector3::new(dims.x / 2.0, dims.y / 2.0, z)]);
    }
    let axis = |len: f64| -> Vec<f64> {
        let span = len - 2.0 * margin;
        let n = (per_side - 1) as f64;
        (0..per_side)
            .map(|k| margin + span * k as f64 / n)
            .collect()
    };
    let xs = axis(dims.x);
    let ys = axis(dims.y);
    Ok(xs
        .iter()
        .flat_map(|&x| ys.iter().map(move |&y| Vector3::new(x, y, z)))
        .collect())
}

/// Timestamped head orientations, strictly increasing in time.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct OrientationTrace {
    samples: Vec<(f64, Orientation)>,
}

impl OrientationTrace {
    pub fn new(samples: Vec<(f64, Orientation)>) -> Result<Self> {
        for (i, w) in samples.windows(2).enumerate() {
            if !(w[1].0 > w[0].0) {
                return Err(Error::Validation(format!(
                    "sample {} time {} does not follow {}",
                    i + 1,
                    w[1].0,
                    w[0].0
                )));
            }
        }
        if let Some((t, _)) = samples.iter().find(|(t, _)| !t.is_finite()) {
            return Err(Error::Validation(format!("non-finite time {t}")));
        }
        Ok(Self { samples })
    }

    pub fn samples(&self) -> &[(f64, Orientation)] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Canonical text form: one `time_s,yaw_deg,pitch_deg,roll_deg` line per sample.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (t, o) in &self.samples {
            out.push_str(&format!(
                "{},{},{},{}\n",
                fmt_num(*t),
                fmt_num(o.yaw()),
                fmt_num(o.pitch()),
                fmt_num(o.roll())
            ));
        }
        out
    }
}

fn parse_trace_line(line: &str, line_no: usize) -> Result<(f64, Orientation)> {
    let fields: Vec<&str> = line.split(',').map(str::trim).collect();
    if fields.len() != 4 {
        return Err(Error::Parse {
            line: line_no,
            message: format!(
                "expected 4 fields (time_s,yaw_deg,pitch_deg,roll_deg), got {}",
                fields.len()
            ),
        });
    }
    let mut vals = [0.0; 4];
    for (v, (f, name)) in
        vals.iter_mut().zip(
            fields
                .iter()
                .zip(["time_s", "yaw_deg", "pitch_deg", "roll_deg"]),
        )
    {
        *v = f
            .parse::<f64>()
            .ok()
            .filter(|x| x.is_finite())
            .ok_or_else(|| Error::Parse {
                line: line_no,
                message: format!("{name}: `{f}` is not a finite number"),
            })?;
    }
    let o = Orientation::new(vals[1], vals[2], vals[3]).map_err(|e| Error::Parse {
        line: line_no,
        message: e.to_string(),
    })?;
    Ok((vals[0], o))
}

/// Read a trace: `time_s,yaw_deg,pitch_deg,roll_deg` per line, `#` comments
/// and blank lines ignored.
pub fn load_orientation_trace<R: BufRead>(reader: R) -> Result<OrientationTrace> {
    let mut samples = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(|e| Error::Parse {
            line: line_no,
            message: e.to_string(),
        })?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let sample = parse_trace_line(trimmed, line_no)?;
        if let Some((prev, _)) = samples.last() {
            if !(sample.0 > *prev) {
                return Err(Error::Validation(format!(
                    "line {line_no}: time {} is not after {prev}",
                    sample.0
                )));
            }
        }
        samples.push(sample);
    }
    Ok(OrientationTrace { samples })
}

pub fn parse_orientation_trace(text: &str) -> Result<OrientationTrace> {
    load_orientation_trace(text.as_bytes())
}

/// Closed interval of angles in degrees.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AxisRange {
    pub lo: f64,
    pub hi: f64,
}

impl AxisRange {
    pub const fn new(lo: f64, hi: f64) -> Self {
        Self { lo, hi }
    }

    fn validate(&self, axis: &str) -> Result<()> {
        if !(self.lo.is_finite() && self.hi.is_finite() && self.lo <= self.hi) {
            return Err(Error::domain(format!(
                "{axis} range [{}, {}] is invalid",
                self.lo, self.hi
            )));
        }
        Ok(())
    }

    /// `lo, lo + step, ...` up to `hi`; `hi` is included when `step` divides the span.
    fn lattice(&self, step: f64) -> Vec<f64> {
        let n = ((self.hi - self.lo) / step + 1e-9).floor() as usize;
        (0..=n).map(|k| self.lo + step * k as f64).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrientationRanges {
    pub yaw: AxisRange,
    pub pitch: AxisRange,
    pub roll: AxisRange,
}

impl OrientationRanges {
    /// Roll and pitch over [-90, 90], yaw over [0, 359].
    pub const COVERAGE: OrientationRanges = OrientationRanges {
        yaw: AxisRange::new(0.0, 359.0),
        pitch: AxisRange::new(-90.0, 90.0),
        roll: AxisRange::new(-90.0, 90.0),
    };

    /// Roll and pitch over [-60, 60], yaw over [-180, 180].
    pub const SINR: OrientationRanges = OrientationRanges {
        yaw: AxisRange::new(-180.0, 180.0),
        pitch: AxisRange::new(-60.0, 60.0),
        roll: AxisRange::new(-60.0, 60.0),
    };
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SamplingMode {
    /// Deterministic lattice with per-axis steps in degrees.
    Grid {
        yaw_step: f64,
        pitch_step: f64,
        roll_step: f64,
    },
    /// Seeded uniform draws.
    Random { count: usize, seed: u64 },
}

impl SamplingMode {
    /// Roll/pitch every 5 deg, yaw every 10 deg.
    pub const COARSE_GRID: SamplingMode = SamplingMode::Grid {
        yaw_step: 10.0,
        pitch_step: 5.0,
        roll_step: 5.0,
    };

    /// Every degree on all three axes.
    pub const FULL_GRID: SamplingMode = SamplingMode::Grid {
        yaw_step: 1.0,
        pitch_step: 1.0,
        roll_step: 1.0,
    };
}

/// Orientation set over the given ranges.
///
/// Grid order is roll outermost, then pitch, then yaw. Random draws take
/// yaw, pitch and roll in that order from a ChaCha8 stream.
pub fn sample_orientations(
    ranges: &OrientationRanges,
    mode: &SamplingMode,
) -> Result<Vec<Orientation>> {
    ranges.yaw.validate("yaw")?;
    ranges.pitch.validate("pitch")?;
    ranges.roll.validate("roll")?;
    match *mode {
        SamplingMode::Grid {
            yaw_step,
            pitch_step,
            roll_step,
        } => {
            for (name, s) in [
                ("yaw", yaw_step),
                ("pitch", pitch_step),
                ("roll", roll_step),
            ] {
                if !(s > 0.0) || !s.is_finite() {
                    return Err(Error::domain(format!("{name} step {s} must be positive")));
                }
            }
            let yaws = ranges.yaw.lattice(yaw_step);
            let pitches = ranges.pitch.lattice(pitch_step);
            let rolls = ranges.roll.lattice(roll_step);
            let mut out = Vec::with_capacity(yaws.len() * pitches.len() * rolls.len());
            for &r in &rolls {
                for &p in &pitches {
                    for &y in &yaws {
                        out.push(Orientation::new(y, p, r)?);
                    }
                }
            }
            Ok(out)
        }
        SamplingMode::Random { count, seed } => {
            if count == 0 {
                return Err(Error::domain("random orientation count must be positive"));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut draw = |a: &AxisRange| rng.gen_range(a.lo..=a.hi);
            (0..count)
                .map(|_| {
                    let y = draw(&ranges.yaw);
                    let p = draw(&ranges.pitch);
                    let r = draw(&ranges.roll);
                    Orientation::new(y, p, r)
                })
                .collect()
        }
    }
}
