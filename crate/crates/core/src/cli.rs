//! `vlcvr` command-line front end.
//!
//! Exit codes: 0 success, 1 usage error, 2 configuration error, 3 runtime error.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use nalgebra::Vector3;

use crate::arena::{
    load_orientation_trace, user_grid_with_margin, OrientationRanges, SamplingMode,
};
use crate::combining::Combiner;
use crate::config::{GridChoice, RunConfig};
use crate::error::Error;
use crate::geometry::build_layout;
use crate::report::{fmt_num, to_db};
use crate::sweep::{
    connectivity_sweep, fov_half_angle, npd_study, sinr_alpha_sweep, trace_replay, CoverageSpec,
    Executor, OrientationSet, SinrSweepSpec, SweepResult,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;

const DEFAULT_THETA_DS: [f64; 5] = [15.0, 20.0, 30.0, 40.0, 60.0];
const COVERAGE_ALPHAS: [f64; 7] = [0.5, 0.75, 1.0, 1.25, 1.5, 1.75, 2.0];
const SINR_ALPHAS: [f64; 4] = [1.5, 2.0, 2.5, 3.0];

#[derive(Debug, Parser)]
#[command(
    name = "vlcvr",
    version,
    about = "VLC attocell simulator for multi-detector VR headsets"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args, Default)]
struct Common {
    /// Configuration file
    #[arg(long, short = 'c', global = true)]
    config: Option<PathBuf>,
    /// Write CSV here instead of standard output
    #[arg(long, short = 'o', global = true)]
    output: Option<PathBuf>,
    /// Worker threads (0 = all cores)
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Suppress progress messages on stderr
    #[arg(long, short = 'q', global = true)]
    quiet: bool,
}

#[derive(Debug, Args, Default)]
struct StudyFlags {
    /// Detector angular distance(s), degrees
    #[arg(long = "theta-d", value_delimiter = ',', allow_negative_numbers = true)]
    theta_d: Vec<f64>,
    /// alpha = FOV / theta_d value(s)
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    alpha: Vec<f64>,
    /// Combiners (egc, sbc, mrc)
    #[arg(long = "combiner", value_delimiter = ',')]
    combiners: Vec<String>,
    /// Random orientations per user
    #[arg(long)]
    orientations: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Users per side of the floor grid
    #[arg(long = "users-per-side")]
    users_per_side: Option<usize>,
    /// User head position x,y,z in metres
    #[arg(
        long,
        value_delimiter = ',',
        num_args = 3,
        allow_negative_numbers = true
    )]
    user: Vec<f64>,
    /// Roll/pitch every 5 deg, yaw every 10 deg (default)
    #[arg(long, conflicts_with = "full_grid")]
    coarse: bool,
    /// One-degree grid on every axis (181 x 181 x 360 orientations)
    #[arg(long = "full-grid")]
    full_grid: bool,
    /// Orientation trace file
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Detector placement table
    Layout {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        study: StudyFlags,
    },
    /// Connectivity percentage versus alpha
    Coverage {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        study: StudyFlags,
    },
    /// Mean SINR versus alpha per combiner
    SinrSweep {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        study: StudyFlags,
    },
    /// Mean SINR versus number of detectors
    NpdStudy {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        study: StudyFlags,
    },
    /// SINR time series for a head-orientation trace
    TraceReplay {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        study: StudyFlags,
    },
    /// Print the default configuration
    EmitDefaults {
        #[command(flatten)]
        common: Common,
    },
}

/// Failure with its exit code.
#[derive(Debug)]
struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Config { .. } => EXIT_CONFIG,
            _ => EXIT_RUNTIME,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

fn io_failure(path: &Path, e: std::io::Error) -> Failure {
    Failure {
        code: EXIT_RUNTIME,
        message: format!("{}: {e}", path.display()),
    }
}

fn flag_error(key: &str, e: Error) -> Failure {
    Failure {
        code: EXIT_CONFIG,
        message: format!(
            "invalid {key}: {}",
            match e {
                Error::Config { message, .. } | Error::Domain(message) => message,
                other => other.to_string(),
            }
        ),
    }
}

fn load_config(common: &Common) -> Result<RunConfig, Failure> {
    let Some(path) = &common.config else {
        return Ok(RunConfig::default());
    };
    let text = fs::read_to_string(path).map_err(|e| Failure {
        code: EXIT_CONFIG,
        message: format!("{}: {e}", path.display()),
    })?;
    RunConfig::parse(&text).map_err(|e| Failure {
        code: EXIT_CONFIG,
        message: format!("{}: {e}", path.display()),
    })
}

/// Flags beat config-file values, which beat defaults.
fn apply_flags(cfg: &mut RunConfig, common: &Common, f: &StudyFlags) -> Result<(), Failure> {
    let s = &mut cfg.study;
    if !f.theta_d.is_empty() {
        s.theta_d = Some(f.theta_d.clone());
    }
    if !f.alpha.is_empty() {
        s.alpha = Some(f.alpha.clone());
    }
    if !f.combiners.is_empty() {
        let parsed = f
            .combiners
            .iter()
            .map(|c| c.parse::<Combiner>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| flag_error("--combiner", e))?;
        s.combiners = Some(parsed);
    }
    if let Some(n) = f.orientations {
        if n == 0 {
            return Err(Failure::usage("--orientations must be at least 1"));
        }
        s.orientations = n;
    }
    if let Some(seed) = f.seed {
        s.seed = seed;
    }
    if let Some(n) = f.users_per_side {
        if n == 0 {
            return Err(Failure::usage("--users-per-side must be at least 1"));
        }
        s.users_per_side = n;
    }
    if !f.user.is_empty() {
        s.user_position = Some([f.user[0], f.user[1], f.user[2]]);
    }
    if f.coarse {
        s.grid = GridChoice::Coarse;
    }
    if f.full_grid {
        s.grid = GridChoice::Full;
    }
    if let Some(t) = &f.trace {
        s.trace = Some(t.clone());
    }
    if let Some(w) = common.workers {
        s.workers = w;
    }
    if let Some(o) = &common.output {
        s.output = Some(o.clone());
    }
    cfg.validate().map_err(|e| flag_error("settings", e))
}

fn executor(cfg: &RunConfig, quiet: bool) -> Result<Executor, Failure> {
    let exec = match cfg.study.workers {
        0 => Executor::default(),
        n => Executor::with_workers(n)?,
    };
    Ok(if quiet {
        exec
    } else {
        exec.on_progress(|msg| eprintln!("vlcvr: {msg}"))
    })
}

fn theta_ds(cfg: &RunConfig) -> Vec<f64> {
    cfg.study
        .theta_d
        .clone()
        .unwrap_or_else(|| DEFAULT_THETA_DS.to_vec())
}

fn single(values: Option<&Vec<f64>>, default: f64, what: &str) -> Result<f64, Failure> {
    match values.map(Vec::as_slice) {
        None | Some([]) => Ok(default),
        Some([v]) => Ok(*v),
        Some(_) => Err(Failure::usage(format!("{what} takes a single value"))),
    }
}

fn user_position(cfg: &RunConfig) -> Vector3<f64> {
    cfg.study
        .user_position
        .map(Vector3::from)
        .unwrap_or_else(|| Vector3::new(1.25, 1.25, cfg.arena.user_height))
}

fn csv_row(fields: &[String]) -> String {
    let mut row = fields.join(",");
    row.push('\n');
    row
}

fn layout_csv(cfg: &RunConfig) -> Result<String, Failure> {
    let theta_d = single(cfg.study.theta_d.as_ref(), 30.0, "--theta-d")?;
    Ok(build_layout(cfg.headset_params(theta_d)?).to_csv())
}

fn coverage_csv(cfg: &RunConfig, exec: &Executor, quiet: bool) -> Result<String, Failure> {
    let alphas = cfg
        .study
        .alpha
        .clone()
        .unwrap_or_else(|| COVERAGE_ALPHAS.to_vec());
    let base = match cfg.study.grid {
        GridChoice::Coarse => SamplingMode::COARSE_GRID,
        GridChoice::Full => SamplingMode::FULL_GRID,
    };
    let SamplingMode::Grid {
        yaw_step,
        pitch_step,
        roll_step,
    } = base
    else {
        unreachable!("grid presets are lattices")
    };
    let mode = SamplingMode::Grid {
        yaw_step: cfg.study.yaw_step.unwrap_or(yaw_step),
        pitch_step: cfg.study.pitch_step.unwrap_or(pitch_step),
        roll_step: cfg.study.roll_step.unwrap_or(roll_step),
    };
    let arena = cfg.build_arena()?;
    let mut out = csv_row(&["theta_d".into(), "alpha".into(), "coverage_pct".into()]);
    for theta_d in theta_ds(cfg) {
        for &alpha in &alphas {
            if fov_half_angle(alpha, theta_d) > 90.0 {
                if !quiet {
                    eprintln!("vlcvr: skipping theta_d={theta_d} alpha={alpha}: FOV beyond 90 deg");
                }
                continue;
            }
            let spec = CoverageSpec {
                headset: cfg.headset_params(theta_d)?,
                alpha,
                orientations: OrientationSet {
                    ranges: OrientationRanges::COVERAGE,
                    mode,
                },
                user_position: user_position(cfg),
                arena: arena.clone(),
                channel: cfg.channel_params(),
            };
            let cvg = connectivity_sweep(&spec, exec)?;
            out.push_str(&csv_row(&[fmt_num(theta_d), fmt_num(alpha), fmt_num(cvg)]));
        }
    }
    Ok(out)
}

fn sinr_spec(
    cfg: &RunConfig,
    alphas: Vec<f64>,
    combiners: Vec<Combiner>,
) -> Result<SinrSweepSpec, Failure> {
    let arena = cfg.build_arena()?;
    let users = user_grid_with_margin(&arena, cfg.study.users_per_side, cfg.arena.grid_margin)?;
    Ok(SinrSweepSpec {
        theta_ds: theta_ds(cfg),
        alphas,
        r_headset: cfg.headset.r_headset,
        r_pd: cfg.headset.r_pd,
        arena,
        channel: cfg.channel_params(),
        combiners: cfg.study.combiners.clone().unwrap_or(combiners),
        orientations: OrientationSet::sinr_random(cfg.study.orientations, cfg.study.seed),
        users,
    })
}

fn report_skipped(res: &SweepResult, quiet: bool) {
    if quiet {
        return;
    }
    for (t, a) in &res.skipped {
        eprintln!("vlcvr: skipped infeasible point theta_d={t} alpha={a}");
    }
}

fn sinr_sweep_csv(cfg: &RunConfig, exec: &Executor, quiet: bool) -> Result<String, Failure> {
    let alphas = cfg
        .study
        .alpha
        .clone()
        .unwrap_or_else(|| SINR_ALPHAS.to_vec());
    let spec = sinr_spec(cfg, alphas, Combiner::ALL.to_vec())?;
    let res = sinr_alpha_sweep(&spec, exec)?;
    report_skipped(&res, quiet);
    let mut out = csv_row(&[
        "theta_d".into(),
        "alpha".into(),
        "combiner".into(),
        "mean_sinr_db".into(),
        "ci95_db".into(),
        "n_samples".into(),
    ]);
    for p in &res.points {
        out.push_str(&csv_row(&[
            fmt_num(p.theta_d),
            fmt_num(p.alpha),
            p.combiner.to_string(),
            fmt_num(p.stats.mean_db()),
            fmt_num(p.stats.ci95_db()),
            p.stats.count.to_string(),
        ]));
    }
    Ok(out)
}

fn npd_csv(cfg: &RunConfig, exec: &Executor, quiet: bool) -> Result<String, Failure> {
    let alpha = single(cfg.study.alpha.as_ref(), 1.5, "--alpha")?;
    let spec = sinr_spec(cfg, vec![alpha], vec![Combiner::Mrc, Combiner::Sbc])?;
    let res = npd_study(&spec, alpha, exec)?;
    report_skipped(&res, quiet);
    let mut out = csv_row(&[
        "theta_d".into(),
        "n_pd".into(),
        "combiner".into(),
        "mean_sinr_db".into(),
        "ci95_db".into(),
    ]);
    for p in &res.points {
        out.push_str(&csv_row(&[
            fmt_num(p.theta_d),
            p.n_pd.to_string(),
            p.combiner.to_string(),
            fmt_num(p.stats.mean_db()),
            fmt_num(p.stats.ci95_db()),
        ]));
    }
    Ok(out)
}

fn trace_csv(cfg: &RunConfig) -> Result<String, Failure> {
    let path = cfg
        .study
        .trace
        .as_ref()
        .ok_or_else(|| Failure::usage("trace-replay needs --trace <file> or [study] trace"))?;
    let file = fs::File::open(path).map_err(|e| io_failure(path, e))?;
    let trace = load_orientation_trace(std::io::BufReader::new(file)).map_err(|e| Failure {
        code: EXIT_RUNTIME,
        message: format!("{}: {e}", path.display()),
    })?;
    let theta_d = single(cfg.study.theta_d.as_ref(), 30.0, "--theta-d")?;
    let alpha = single(cfg.study.alpha.as_ref(), 1.5, "--alpha")?;
    let combiner = match cfg.study.combiners.as_deref() {
        None | Some([]) => Combiner::Sbc,
        Some([c]) => *c,
        Some(_) => return Err(Failure::usage("trace-replay takes a single --combiner")),
    };
    let beta = fov_half_angle(alpha, theta_d);
    let params = cfg.channel_params().with_fov(beta);
    params.validate().map_err(|e| flag_error("--alpha", e))?;
    let layout = build_layout(cfg.headset_params(theta_d)?);
    let arena = cfg.build_arena()?;
    let samples = trace_replay(
        &trace,
        &user_position(cfg),
        &arena,
        &layout,
        &params,
        combiner,
    )?;
    let mut out = csv_row(&[
        "time_s".into(),
        "sinr_db".into(),
        "best_branch".into(),
        "rate_bps".into(),
    ]);
    for s in &samples {
        out.push_str(&csv_row(&[
            fmt_num(s.time),
            fmt_num(to_db(s.sinr)),
            s.report.best_branch.to_string(),
            fmt_num(s.rate),
        ]));
    }
    Ok(out)
}

fn execute(cli: Cli) -> Result<(String, Option<PathBuf>), Failure> {
    let (common, flags, kind) = match cli.command {
        Command::EmitDefaults { common } => {
            let cfg = load_config(&common)?;
            let out = common.output.or(cfg.study.output.clone());
            return Ok((cfg.to_text(), out));
        }
        Command::Layout { common, study } => (common, study, "layout"),
        Command::Coverage { common, study } => (common, study, "coverage"),
        Command::SinrSweep { common, study } => (common, study, "sinr-sweep"),
        Command::NpdStudy { common, study } => (common, study, "npd-study"),
        Command::TraceReplay { common, study } => (common, study, "trace-replay"),
    };
    let mut cfg = load_config(&common)?;
    apply_flags(&mut cfg, &common, &flags)?;
    let exec = executor(&cfg, common.quiet)?;
    let csv = match kind {
        "layout" => layout_csv(&cfg)?,
        "coverage" => coverage_csv(&cfg, &exec, common.quiet)?,
        "sinr-sweep" => sinr_sweep_csv(&cfg, &exec, common.quiet)?,
        "npd-study" => npd_csv(&cfg, &exec, common.quiet)?,
        "trace-replay" => trace_csv(&cfg)?,
        _ => unreachable!(),
    };
    Ok((csv, cfg.study.output.clone()))
}

/// Run the tool with `args` (program name first). CSV goes to `stdout`
/// unless an output path is configured; errors go to `stderr`.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(stdout, "{e}");
                    EXIT_OK
                }
                _ => {
                    let _ = write!(stderr, "{e}");
                    EXIT_USAGE
                }
            };
        }
    };
    let result = execute(cli).and_then(|(csv, path)| match path {
        Some(p) => fs::write(&p, csv).map_err(|e| io_failure(&p, e)),
        None => stdout
            .write_all(csv.as_bytes())
            .map_err(|e| io_failure(Path::new("<stdout>"), e)),
    });
    match result {
        Ok(()) => EXIT_OK,
        Err(f) => {
            let _ = writeln!(stderr, "vlcvr: {}", f.message);
            f.code
        }
    }
}
