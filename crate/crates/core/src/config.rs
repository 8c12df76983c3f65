//! Run configuration: `[section]` headers, `key = value` lines, `#` comments.
//!
//! Quantities accept a unit suffix (`7.62 cm`, `10 MHz`, `5100 uA`); a bare
//! number is read in the key's SI base unit, except angles which default to
//! degrees. Lists are comma separated and each element may carry its own
//! unit. Omitted keys take their defaults.

use std::fmt::Write as _;
use std::path::PathBuf;

use nalgebra::Vector3;

use crate::arena::{default_arena, Arena, DEFAULT_TX_POSITIONS};
use crate::channel::{ChannelParams, Transmitter};
use crate::combining::Combiner;
use crate::error::{Error, Result};
use crate::geometry::HeadsetParams;
use crate::report::fmt_num;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Dim {
    Length,
    Power,
    Angle,
    Frequency,
    Current,
    CapacitancePerArea,
    Conductance,
    Temperature,
    Responsivity,
    Charge,
    Entropy,
    Ratio,
}

impl Dim {
    /// Accepted suffixes with their scale to SI. The first entry is the base unit.
    fn units(self) -> &'static [(&'static str, Scale)] {
        use Scale::{Div, Mul};
        match self {
            Dim::Length => &[("m", Mul(1.0)), ("cm", Div(1e2)), ("mm", Div(1e3))],
            Dim::Power => &[("W", Mul(1.0)), ("mW", Div(1e3))],
            Dim::Angle => &[
                ("deg", Mul(1.0)),
                ("rad", Mul(180.0 / std::f64::consts::PI)),
            ],
            Dim::Frequency => &[
                ("Hz", Mul(1.0)),
                ("kHz", Mul(1e3)),
                ("MHz", Mul(1e6)),
                ("GHz", Mul(1e9)),
            ],
            Dim::Current => &[
                ("A", Mul(1.0)),
                ("mA", Div(1e3)),
                ("uA", Div(1e6)),
                ("nA", Div(1e9)),
            ],
            Dim::CapacitancePerArea => &[("F/m2", Mul(1.0)), ("pF/cm2", Div(1e8))],
            Dim::Conductance => &[("S", Mul(1.0)), ("mS", Div(1e3))],
            Dim::Temperature => &[("K", Mul(1.0))],
            Dim::Responsivity => &[("A/W", Mul(1.0))],
            Dim::Charge => &[("C", Mul(1.0))],
            Dim::Entropy => &[("J/K", Mul(1.0))],
            Dim::Ratio => &[("", Mul(1.0))],
        }
    }

    fn scale(self, unit: &str) -> Option<Scale> {
        self.units()
            .iter()
            .find(|(u, _)| *u == unit)
            .map(|(_, s)| *s)
    }

    fn base(self) -> &'static str {
        self.units()[0].0
    }
}

/// Sub-units divide so that e.g. `5100 uA` lands on the same double as `5.1e-3`.
#[derive(Debug, Clone, Copy)]
enum Scale {
    Mul(f64),
    Div(f64),
}

impl Scale {
    fn to_si(self, x: f64) -> f64 {
        match self {
            Scale::Mul(f) => x * f,
            Scale::Div(d) => x / d,
        }
    }

    fn of_si(self, v: f64) -> f64 {
        match self {
            Scale::Mul(f) => v / f,
            Scale::Div(d) => v * d,
        }
    }
}

fn split_number(s: &str) -> (&str, &str) {
    let bytes = s.as_bytes();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        let exponent = (c == 'e' || c == 'E')
            && i > 0
            && bytes[i - 1].is_ascii_digit() | (bytes[i - 1] == b'.')
            && bytes
                .get(i + 1)
                .is_some_and(|n| n.is_ascii_digit() || *n == b'-' || *n == b'+');
        if c.is_whitespace() || (c.is_ascii_alphabetic() && !exponent) {
            break;
        }
        i += 1;
    }
    (s[..i].trim(), s[i..].trim())
}

fn parse_quantity(raw: &str, dim: Dim) -> std::result::Result<f64, String> {
    let (num, unit) = split_number(raw.trim());
    let value: f64 = num
        .parse()
        .ok()
        .filter(|v: &f64| v.is_finite())
        .ok_or_else(|| format!("`{raw}` is not a number"))?;
    let unit = if unit.is_empty() { dim.base() } else { unit };
    let scale = dim.scale(unit).ok_or_else(|| {
        let allowed: Vec<_> = dim
            .units()
            .iter()
            .map(|(u, _)| *u)
            .filter(|u| !u.is_empty())
            .collect();
        if allowed.is_empty() {
            format!("unexpected unit `{unit}` on a dimensionless value")
        } else {
            format!(
                "unit `{unit}` not accepted here (use one of {})",
                allowed.join(", ")
            )
        }
    })?;
    Ok(scale.to_si(value))
}

/// Print `value` in `unit` if that reads back exactly, else in the base unit.
fn emit_quantity(value: f64, dim: Dim, unit: &str) -> String {
    let exact = |unit: &str| {
        let scale = dim.scale(unit)?;
        let scaled = scale.of_si(value);
        [fmt_num(scaled), format!("{scaled:?}")]
            .into_iter()
            .find(|t| t.parse::<f64>().map(|x| scale.to_si(x)) == Ok(value))
    };
    let (shown, unit) = match exact(unit) {
        Some(t) => (t, unit),
        None => (
            exact(dim.base()).unwrap_or_else(|| format!("{value:?}")),
            dim.base(),
        ),
    };
    if unit.is_empty() {
        shown
    } else {
        format!("{shown} {unit}")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GridChoice {
    /// Roll/pitch every 5 deg, yaw every 10 deg.
    #[default]
    Coarse,
    /// One-degree steps on every axis.
    Full,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ArenaConfig {
    pub dimensions: [f64; 3],
    pub user_height: f64,
    pub transmitters: Vec<[f64; 3]>,
    pub grid_margin: f64,
}

impl Default for ArenaConfig {
    fn default() -> Self {
        let a = default_arena();
        Self {
            dimensions: a.dimensions().into(),
            user_height: a.user_height(),
            transmitters: DEFAULT_TX_POSITIONS.to_vec(),
            grid_margin: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelConfig {
    pub tx_power: f64,
    pub divergence: f64,
    /// `a_pd` is overwritten from the headset detector radius.
    pub params: ChannelParams,
}

impl Default for ChannelConfig {
    fn default() -> Self {
        Self {
            tx_power: crate::arena::DEFAULT_TX_POWER,
            divergence: crate::arena::DEFAULT_DIVERGENCE,
            params: ChannelParams::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeadsetConfig {
    pub r_headset: f64,
    pub r_pd: f64,
}

impl Default for HeadsetConfig {
    fn default() -> Self {
        Self {
            r_headset: 0.0762,
            r_pd: 0.0025,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudyConfig {
    pub name: Option<String>,
    pub theta_d: Option<Vec<f64>>,
    pub alpha: Option<Vec<f64>>,
    pub grid: GridChoice,
    pub roll_step: Option<f64>,
    pub pitch_step: Option<f64>,
    pub yaw_step: Option<f64>,
    pub orientations: usize,
    pub seed: u64,
    pub users_per_side: usize,
    pub user_position: Option<[f64; 3]>,
    pub combiners: Option<Vec<Combiner>>,
    /// 0 selects every available core.
    pub workers: usize,
    pub output: Option<PathBuf>,
    pub trace: Option<PathBuf>,
}

impl Default for StudyConfig {
    fn default() -> Self {
        Self {
            name: None,
            theta_d: None,
            alpha: None,
            grid: GridChoice::Coarse,
            roll_step: None,
            pitch_step: None,
            yaw_step: None,
            orientations: 500,
            seed: 2018,
            users_per_side: 11,
            user_position: None,
            combiners: None,
            workers: 0,
            output: None,
            trace: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunConfig {
    pub arena: ArenaConfig,
    pub channel: ChannelConfig,
    pub headset: HeadsetConfig,
    pub study: StudyConfig,
}

struct Entry<'a> {
    section: &'a str,
    key: &'a str,
    value: &'a str,
    line: usize,
}

impl Entry<'_> {
    fn err(&self, message: impl Into<String>) -> Error {
        Error::Config {
            section: self.section.to_string(),
            key: self.key.to_string(),
            line: self.line,
            message: message.into(),
        }
    }

    fn quantity(&self, dim: Dim) -> Result<f64> {
        parse_quantity(self.value, dim).map_err(|m| self.err(m))
    }

    fn positive(&self, dim: Dim) -> Result<f64> {
        let v = self.quantity(dim)?;
        if v > 0.0 {
            Ok(v)
        } else {
            Err(self.err(format!("{} must be > 0 (got {v})", self.key)))
        }
    }

    fn list(&self, dim: Dim) -> Result<Vec<f64>> {
        self.value
            .split(',')
            .map(|item| parse_quantity(item, dim).map_err(|m| self.err(m)))
            .collect()
    }

    fn vec3(&self) -> Result<[f64; 3]> {
        let v = self.list(Dim::Length)?;
        <[f64; 3]>::try_from(v.as_slice()).map_err(|_| {
            self.err(format!(
                "expected 3 comma-separated lengths, got {}",
                v.len()
            ))
        })
    }

    fn integer<T: std::str::FromStr>(&self) -> Result<T> {
        self.value.trim().parse().map_err(|_| {
            self.err(format!(
                "`{}` is not a non-negative integer",
                self.value.trim()
            ))
        })
    }
}

/// Reject the key if it breaks `0 < theta_d <= 90`.
fn check_theta_d(e: &Entry, values: &[f64]) -> Result<()> {
    match values.iter().find(|t| !(**t > 0.0 && **t <= 90.0)) {
        Some(t) => Err(e.err(format!("theta_d = {t} violates 0 < theta_d ≤ 90"))),
        None => Ok(()),
    }
}

impl RunConfig {
    fn apply(&mut self, e: &Entry, seen_tx: &mut bool) -> Result<()> {
        let ch = &mut self.channel.params;
        match (e.section, e.key) {
            ("arena", "dimensions") => {
                let d = e.vec3()?;
                if d.iter().any(|x| !(*x > 0.0)) {
                    return Err(e.err("dimensions must be > 0 on every axis"));
                }
                self.arena.dimensions = d;
            }
            ("arena", "user_height") => self.arena.user_height = e.positive(Dim::Length)?,
            ("arena", "transmitter") => {
                if !*seen_tx {
                    self.arena.transmitters.clear();
                    *seen_tx = true;
                }
                self.arena.transmitters.push(e.vec3()?);
            }
            ("arena", "grid_margin") => {
                let m = e.quantity(Dim::Length)?;
                if m < 0.0 {
                    return Err(e.err("grid_margin must be >= 0"));
                }
                self.arena.grid_margin = m;
            }
            ("channel", "tx_power") => self.channel.tx_power = e.positive(Dim::Power)?,
            ("channel", "divergence") => {
                let v = e.quantity(Dim::Angle)?;
                if !(v > 0.0 && v < 90.0) {
                    return Err(e.err(format!("divergence = {v} violates 0 < divergence < 90")));
                }
                self.channel.divergence = v;
            }
            ("channel", "responsivity") => ch.responsivity = e.positive(Dim::Responsivity)?,
            ("channel", "bandwidth") => ch.bandwidth = e.positive(Dim::Frequency)?,
            ("channel", "filter_transmission") => {
                let v = e.quantity(Dim::Ratio)?;
                if !(v > 0.0 && v <= 1.0) {
                    return Err(e.err(format!("filter_transmission = {v} violates 0 < T_s ≤ 1")));
                }
                ch.filter_transmission = v;
            }
            ("channel", "refractive_index") => ch.refractive_index = e.positive(Dim::Ratio)?,
            ("channel", "fov_half_angle") => {
                let v = e.quantity(Dim::Angle)?;
                if !(v > 0.0 && v <= 90.0) {
                    return Err(e.err(format!("fov_half_angle = {v} violates 0 < beta ≤ 90")));
                }
                ch.fov_half_angle = v;
            }
            ("channel", "background_current") => {
                ch.background_current = e.positive(Dim::Current)?
            }
            ("channel", "i2") => ch.i2 = e.positive(Dim::Ratio)?,
            ("channel", "i3") => ch.i3 = e.positive(Dim::Ratio)?,
            ("channel", "electron_charge") => ch.electron_charge = e.positive(Dim::Charge)?,
            ("channel", "boltzmann") => ch.boltzmann = e.positive(Dim::Entropy)?,
            ("channel", "temperature") => ch.temperature = e.positive(Dim::Temperature)?,
            ("channel", "open_loop_gain") => ch.open_loop_gain = e.positive(Dim::Ratio)?,
            ("channel", "capacitance_per_area") => {
                ch.capacitance_per_area = e.positive(Dim::CapacitancePerArea)?
            }
            ("channel", "fet_noise_factor") => {
                ch.fet_channel_noise_factor = e.positive(Dim::Ratio)?
            }
            ("channel", "transconductance") => {
                ch.fet_transconductance = e.positive(Dim::Conductance)?
            }
            ("headset", "r_headset") => self.headset.r_headset = e.positive(Dim::Length)?,
            ("headset", "r_pd") => self.headset.r_pd = e.positive(Dim::Length)?,
            ("study", "name") => self.study.name = Some(e.value.trim().to_string()),
            ("study", "theta_d") => {
                let v = e.list(Dim::Angle)?;
                check_theta_d(e, &v)?;
                self.study.theta_d = Some(v);
            }
            ("study", "alpha") => {
                let v = e.list(Dim::Ratio)?;
                if let Some(a) = v.iter().find(|a| !(**a > 0.0)) {
                    return Err(e.err(format!("alpha = {a} must be > 0")));
                }
                self.study.alpha = Some(v);
            }
            ("study", "grid") => {
                self.study.grid = match e.value.trim() {
                    "coarse" => GridChoice::Coarse,
                    "full" => GridChoice::Full,
                    other => {
                        return Err(e.err(format!("grid must be `coarse` or `full`, got `{other}`")))
                    }
                }
            }
            ("study", "roll_step") => self.study.roll_step = Some(e.positive(Dim::Angle)?),
            ("study", "pitch_step") => self.study.pitch_step = Some(e.positive(Dim::Angle)?),
            ("study", "yaw_step") => self.study.yaw_step = Some(e.positive(Dim::Angle)?),
            ("study", "orientations") => {
                let n: usize = e.integer()?;
                if n == 0 {
                    return Err(e.err("orientations must be >= 1"));
                }
                self.study.orientations = n;
            }
            ("study", "seed") => self.study.seed = e.integer()?,
            ("study", "users_per_side") => {
                let n: usize = e.integer()?;
                if n == 0 {
                    return Err(e.err("users_per_side must be >= 1"));
                }
                self.study.users_per_side = n;
            }
            ("study", "user_position") => self.study.user_position = Some(e.vec3()?),
            ("study", "combiners") => {
                let v = e
                    .value
                    .split(',')
                    .map(|c| c.parse::<Combiner>().map_err(|err| e.err(err.to_string())))
                    .collect::<Result<Vec<_>>>()?;
                self.study.combiners = Some(v);
            }
            ("study", "workers") => self.study.workers = e.integer()?,
            ("study", "output") => self.study.output = Some(PathBuf::from(e.value.trim())),
            ("study", "trace") => self.study.trace = Some(PathBuf::from(e.value.trim())),
            _ => return Err(e.err("unknown key")),
        }
        Ok(())
    }

    /// Parse and validate a configuration document.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = RunConfig::default();
        let mut section: Option<&str> = None;
        let mut seen = std::collections::HashMap::new();
        let mut seen_tx = false;
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split(" #").next().unwrap_or("").trim();
            if content.is_empty() || content.starts_with('#') {
                continue;
            }
            if let Some(name) = content.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
                let name = name.trim();
                if !matches!(name, "arena" | "channel" | "headset" | "study") {
                    return Err(Error::Config {
                        section: name.to_string(),
                        key: String::new(),
                        line,
                        message: "unknown section".into(),
                    });
                }
                section = Some(name);
                continue;
            }
            let Some((key, value)) = content.split_once('=') else {
                return Err(Error::Config {
                    section: section.unwrap_or("").to_string(),
                    key: String::new(),
                    line,
                    message: format!("expected `key = value`, got `{content}`"),
                });
            };
            let entry = Entry {
                section: section.unwrap_or(""),
                key: key.trim(),
                value: value.trim(),
                line,
            };
            if section.is_none() {
                return Err(entry.err("key outside of any [section]"));
            }
            if entry.key != "transmitter" {
                if let Some(prev) = seen.insert((entry.section, entry.key), line) {
                    return Err(entry.err(format!("duplicate key (first set on line {prev})")));
                }
            }
            cfg.apply(&entry, &mut seen_tx)?;
        }
        let key_line = |s: &str, k: &str| seen.get(&(s, k)).copied().unwrap_or(0);
        cfg.validate_with(key_line)?;
        Ok(cfg)
    }

    /// Cross-field validation; `line_of` locates keys for error messages.
    fn validate_with(&self, line_of: impl Fn(&str, &str) -> usize) -> Result<()> {
        let err = |section: &str, key: &str, e: Error| Error::Config {
            section: section.into(),
            key: key.into(),
            line: line_of(section, key),
            message: match e {
                Error::Domain(m) => m,
                other => other.to_string(),
            },
        };
        let h = &self.headset;
        if h.r_pd >= h.r_headset {
            return Err(err(
                "headset",
                "r_pd",
                Error::domain(format!(
                    "r_pd ({}) must be smaller than r_headset ({})",
                    h.r_pd, h.r_headset
                )),
            ));
        }
        if let Some(ts) = &self.study.theta_d {
            for t in ts {
                if !(*t > 0.0 && *t <= 90.0) {
                    return Err(err(
                        "study",
                        "theta_d",
                        Error::domain(format!("theta_d = {t} violates 0 < theta_d ≤ 90")),
                    ));
                }
                HeadsetParams::new(h.r_headset, h.r_pd, *t)
                    .map_err(|e| err("study", "theta_d", e))?;
            }
        }
        if let Some(a) = self
            .study
            .alpha
            .as_ref()
            .and_then(|v| v.iter().find(|a| !(**a > 0.0)))
        {
            return Err(err(
                "study",
                "alpha",
                Error::domain(format!("alpha = {a} must be > 0")),
            ));
        }
        self.channel_params()
            .validate()
            .map_err(|e| err("channel", "", e))?;
        let arena = self.build_arena().map_err(|e| err("arena", "", e))?;
        if let Some(p) = self.study.user_position {
            if !arena.contains(&Vector3::from(p)) {
                return Err(err(
                    "study",
                    "user_position",
                    Error::domain(format!("user position {p:?} lies outside the arena")),
                ));
            }
        }
        let d = arena.dimensions();
        if 2.0 * self.arena.grid_margin >= d.x.min(d.y) {
            return Err(err(
                "arena",
                "grid_margin",
                Error::domain("grid margin does not fit the floor"),
            ));
        }
        Ok(())
    }

    /// Validation for configs modified after parsing (e.g. by command-line flags).
    pub fn validate(&self) -> Result<()> {
        self.validate_with(|_, _| 0)
    }

    /// Channel parameters with the detector area taken from the headset radius.
    pub fn channel_params(&self) -> ChannelParams {
        ChannelParams {
            a_pd: std::f64::consts::PI * self.headset.r_pd * self.headset.r_pd,
            ..self.channel.params
        }
    }

    pub fn build_arena(&self) -> Result<Arena> {
        let txs = self
            .arena
            .transmitters
            .iter()
            .map(|p| {
                Transmitter::new(
                    Vector3::from(*p),
                    self.channel.tx_power,
                    self.channel.divergence,
                )
            })
            .collect::<Result<Vec<_>>>()?;
        Arena::new(
            Vector3::from(self.arena.dimensions),
            txs,
            self.arena.user_height,
        )
    }

    pub fn headset_params(&self, theta_d: f64) -> Result<HeadsetParams> {
        HeadsetParams::new(self.headset.r_headset, self.headset.r_pd, theta_d)
    }

    /// Serialize to the configuration grammar; `parse(to_text())` reproduces `self`.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let len = |v: f64, u: &str| emit_quantity(v, Dim::Length, u);
        let vec3 = |p: &[f64; 3]| p.map(|x| len(x, "m")).join(", ");
        let a = &self.arena;
        let _ = writeln!(s, "[arena]");
        let _ = writeln!(s, "dimensions = {}", vec3(&a.dimensions));
        let _ = writeln!(s, "user_height = {}", len(a.user_height, "m"));
        for t in &a.transmitters {
            let _ = writeln!(s, "transmitter = {}", vec3(t));
        }
        let _ = writeln!(s, "grid_margin = {}", len(a.grid_margin, "m"));

        let c = &self.channel;
        let p = &c.params;
        let _ = writeln!(s, "\n[channel]");
        let rows: [(&str, f64, Dim, &str); 17] = [
            ("tx_power", c.tx_power, Dim::Power, "W"),
            ("divergence", c.divergence, Dim::Angle, "deg"),
            ("responsivity", p.responsivity, Dim::Responsivity, "A/W"),
            ("bandwidth", p.bandwidth, Dim::Frequency, "MHz"),
            ("filter_transmission", p.filter_transmission, Dim::Ratio, ""),
            ("refractive_index", p.refractive_index, Dim::Ratio, ""),
            ("fov_half_angle", p.fov_half_angle, Dim::Angle, "deg"),
            (
                "background_current",
                p.background_current,
                Dim::Current,
                "uA",
            ),
            ("i2", p.i2, Dim::Ratio, ""),
            ("i3", p.i3, Dim::Ratio, ""),
            ("electron_charge", p.electron_charge, Dim::Charge, "C"),
            ("boltzmann", p.boltzmann, Dim::Entropy, "J/K"),
            ("temperature", p.temperature, Dim::Temperature, "K"),
            ("open_loop_gain", p.open_loop_gain, Dim::Ratio, ""),
            (
                "capacitance_per_area",
                p.capacitance_per_area,
                Dim::CapacitancePerArea,
                "pF/cm2",
            ),
            (
                "fet_noise_factor",
                p.fet_channel_noise_factor,
                Dim::Ratio,
                "",
            ),
            (
                "transconductance",
                p.fet_transconductance,
                Dim::Conductance,
                "mS",
            ),
        ];
        for (key, v, dim, unit) in rows {
            let _ = writeln!(s, "{key} = {}", emit_quantity(v, dim, unit));
        }

        let _ = writeln!(s, "\n[headset]");
        let _ = writeln!(s, "r_headset = {}", len(self.headset.r_headset, "cm"));
        let _ = writeln!(s, "r_pd = {}", len(self.headset.r_pd, "mm"));

        let st = &self.study;
        let angles = |v: &[f64]| {
            v.iter()
                .map(|x| emit_quantity(*x, Dim::Angle, "deg"))
                .collect::<Vec<_>>()
                .join(", ")
        };
        let _ = writeln!(s, "\n[study]");
        if let Some(n) = &st.name {
            let _ = writeln!(s, "name = {n}");
        }
        if let Some(t) = &st.theta_d {
            let _ = writeln!(s, "theta_d = {}", angles(t));
        }
        if let Some(a) = &st.alpha {
            let v: Vec<String> = a.iter().map(|x| format!("{x:?}")).collect();
            let _ = writeln!(s, "alpha = {}", v.join(", "));
        }
        let grid = match st.grid {
            GridChoice::Coarse => "coarse",
            GridChoice::Full => "full",
        };
        let _ = writeln!(s, "grid = {grid}");
        for (key, v) in [
            ("roll_step", st.roll_step),
            ("pitch_step", st.pitch_step),
            ("yaw_step", st.yaw_step),
        ] {
            if let Some(v) = v {
                let _ = writeln!(s, "{key} = {}", emit_quantity(v, Dim::Angle, "deg"));
            }
        }
        let _ = writeln!(s, "orientations = {}", st.orientations);
        let _ = writeln!(s, "seed = {}", st.seed);
        let _ = writeln!(s, "users_per_side = {}", st.users_per_side);
        if let Some(p) = &st.user_position {
            let _ = writeln!(s, "user_position = {}", vec3(p));
        }
        if let Some(c) = &st.combiners {
            let names: Vec<&str> = c.iter().map(Combiner::name).collect();
            let _ = writeln!(s, "combiners = {}", names.join(", "));
        }
        let _ = writeln!(s, "workers = {}", st.workers);
        if let Some(o) = &st.output {
            let _ = writeln!(s, "output = {}", o.display());
        }
        if let Some(t) = &st.trace {
            let _ = writeln!(s, "trace = {}", t.display());
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_gives_defaults() {
        let cfg = RunConfig::parse("").unwrap();
        assert_eq!(cfg, RunConfig::default());
        let cfg = RunConfig::parse("[channel]\n").unwrap();
        let p = cfg.channel_params();
        assert_eq!(cfg.channel.tx_power, 10.0);
        assert_eq!(cfg.channel.divergence, 60.0);
        assert_eq!(p.refractive_index, 1.5);
        assert_eq!(p.filter_transmission, 0.9);
        assert_eq!(p.responsivity, 0.53);
        assert_eq!(p.bandwidth, 10e6);
        assert_eq!(p.background_current, 5100e-6);
        assert_eq!(cfg.headset.r_pd, 0.0025);
        assert_eq!(cfg.headset.r_headset, 0.0762);
        assert_eq!(p.a_pd, std::f64::consts::PI * 0.0025 * 0.0025);
    }

    #[test]
    fn units_are_converted() {
        let cfg = RunConfig::parse(
            "[headset]\nr_headset = 8 cm\nr_pd = 3mm\n[channel]\nbandwidth = 20 MHz\nbackground_current = 1 mA\ntransconductance = 0.05 S\n",
        )
        .unwrap();
        assert_eq!(cfg.headset.r_headset, 0.08);
        assert!((cfg.headset.r_pd - 0.003).abs() < 1e-15);
        assert_eq!(cfg.channel.params.bandwidth, 20e6);
        assert_eq!(cfg.channel.params.background_current, 1e-3);
        assert_eq!(cfg.channel.params.fet_transconductance, 0.05);
    }

    #[test]
    fn exponent_numbers_with_units() {
        assert_eq!(parse_quantity("1.5e-3 m", Dim::Length).unwrap(), 1.5e-3);
        assert_eq!(parse_quantity("2e1mm", Dim::Length).unwrap(), 20.0 * 1e-3);
        assert!(parse_quantity("5 furlong", Dim::Length).is_err());
        assert!(parse_quantity("0.5 m", Dim::Ratio).is_err());
        assert!(parse_quantity("abc", Dim::Ratio).is_err());
    }

    #[test]
    fn theta_d_constraint_error() {
        let err = RunConfig::parse("[study]\ntheta_d = -5\n").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("0 < theta_d ≤ 90"), "{msg}");
        match err {
            Error::Config {
                section, key, line, ..
            } => {
                assert_eq!(
                    (section.as_str(), key.as_str(), line),
                    ("study", "theta_d", 2)
                );
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unknown_keys_and_sections_rejected() {
        let err = RunConfig::parse("[channel]\nfoo = 1\n").unwrap_err();
        assert!(matches!(err, Error::Config { ref key, line: 2, .. } if key == "foo"));
        assert!(RunConfig::parse("[wifi]\n").is_err());
        assert!(RunConfig::parse("bandwidth = 1 MHz\n").is_err());
        assert!(RunConfig::parse("[channel]\nbandwidth\n").is_err());
    }

    #[test]
    fn type_mismatch_and_duplicates() {
        assert!(RunConfig::parse("[study]\norientations = many\n").is_err());
        assert!(RunConfig::parse("[channel]\nbandwidth = 1 MHz\nbandwidth = 2 MHz\n").is_err());
        assert!(RunConfig::parse("[channel]\nbandwidth = 10 deg\n").is_err());
    }

    #[test]
    fn cross_field_validation() {
        let err = RunConfig::parse("[headset]\nr_headset = 2 mm\n").unwrap_err();
        assert!(matches!(err, Error::Config { ref section, .. } if section == "headset"));
        let err = RunConfig::parse("[arena]\ntransmitter = 9, 1, 3\n").unwrap_err();
        assert!(matches!(err, Error::Config { ref section, .. } if section == "arena"));
        // theta_d below the minimum angular distance for these radii
        assert!(RunConfig::parse("[study]\ntheta_d = 2\n").is_err());
    }

    #[test]
    fn transmitters_replace_defaults() {
        let cfg =
            RunConfig::parse("[arena]\ntransmitter = 1, 1, 3\ntransmitter = 4, 4, 3\n").unwrap();
        assert_eq!(
            cfg.arena.transmitters,
            vec![[1.0, 1.0, 3.0], [4.0, 4.0, 3.0]]
        );
        assert_eq!(cfg.build_arena().unwrap().transmitters().len(), 2);
    }

    #[test]
    fn defaults_round_trip() {
        let cfg = RunConfig::default();
        let text = cfg.to_text();
        assert_eq!(RunConfig::parse(&text).unwrap(), cfg);
        assert!(text.contains("bandwidth = 10.0 MHz"), "{text}");
        assert!(text.contains("r_headset = 7.62 cm"), "{text}");
    }

    #[test]
    fn populated_study_round_trip() {
        let cfg = RunConfig {
            study: StudyConfig {
                name: Some("sinr-sweep".into()),
                theta_d: Some(vec![15.0, 20.0]),
                alpha: Some(vec![1.5, 2.5]),
                grid: GridChoice::Full,
                roll_step: Some(2.0),
                pitch_step: None,
                yaw_step: Some(7.5),
                orientations: 42,
                seed: 9,
                users_per_side: 5,
                user_position: Some([1.0, 2.0, 1.33]),
                combiners: Some(vec![Combiner::Mrc, Combiner::Egc]),
                workers: 4,
                output: Some("out.csv".into()),
                trace: Some("trace.txt".into()),
            },
            ..RunConfig::default()
        };
        assert_eq!(RunConfig::parse(&cfg.to_text()).unwrap(), cfg);
    }
}
