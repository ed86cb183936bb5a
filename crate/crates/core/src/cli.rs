//! Command-line front end. Every subcommand writes its primary output to
//! `--out` and a run manifest to `<out>.manifest.json`. `analyze` also
//! writes `ellipse.csv` beside the output for two-state systems, and
//! `simulate` writes `<out>.summary.json`.
//!
//! Exit codes: 0 success, 1 infeasible or domain error, 2 usage error.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::analysis::{
    bound_reachable_set, boundary_csv, default_a_grid, ellipsoid_boundary_points, ReachableBound,
};
use crate::codesign::{
    design_convex, design_iterative, infimum_gamma_on_manifold, tradeoff_csv, tradeoff_curve, CodesignConfig,
    Method,
};
use crate::error::{Error, Result};
use crate::h2design::{evaluate_gamma, open_loop_gamma, optimal_occ_h2_ranked, RankingContext};
use crate::model::{make_detector, DetectorConfig, GainPair, LtiSystem, TruncationConfig};
use crate::sdp::SolveOptions;
use crate::simulator::{simulate, AttackKind, AttackStrategy, PhiPolicy, SimConfig, SimSummary};

#[derive(Debug, Parser)]
#[command(
    name = "codesign",
    version,
    about = "Secure observer/controller co-design with reachable-set bounds"
)]
pub struct Cli {
    /// Worker threads for parallel grid searches (default: all cores).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Reachable-set bound for given gains.
    Analyze(AnalyzeArgs),
    /// Minimum output-covariance H2 design.
    DesignH2(PlantArgs),
    /// Iterative co-design under a performance ceiling.
    DesignIter(DesignArgs),
    /// Convex co-design under a performance ceiling.
    DesignConvex(DesignArgs),
    /// Smallest ceiling admitting a convex co-design.
    Infimum(InfimumArgs),
    /// Sweep of ceilings against security.
    Tradeoff(TradeoffArgs),
    /// Monte Carlo closed-loop simulation.
    Simulate(SimulateArgs),
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct PlantArgs {
    /// System JSON with row-major matrices F, G, C, R1, R2.
    #[arg(long)]
    pub system: PathBuf,
    /// Detector false-alarm rate.
    #[arg(long, default_value_t = 0.05)]
    pub far: f64,
    /// Detector threshold; overrides the chi-squared quantile.
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Truncation probability of the process noise.
    #[arg(long, default_value_t = 0.95)]
    pub pnu: f64,
    /// Truncation probability of the estimation error.
    #[arg(long, default_value_t = 0.95)]
    pub pe: f64,
    /// Truncation probability of the sensor noise.
    #[arg(long, default_value_t = 0.95)]
    pub peta: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct AnalyzeArgs {
    #[command(flatten)]
    pub plant: PlantArgs,
    /// Gains JSON with row-major K and L.
    #[arg(long)]
    pub gains: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct DesignArgs {
    #[command(flatten)]
    pub plant: PlantArgs,
    /// Performance ceiling.
    #[arg(long)]
    pub gamma_bar: f64,
    #[arg(long)]
    pub sigma_max: Option<f64>,
    /// Observer convergence threshold.
    #[arg(long)]
    pub epsilon_l: Option<f64>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct InfimumArgs {
    #[command(flatten)]
    pub plant: PlantArgs,
    /// Fixed magnification.
    #[arg(long, default_value_t = 1e5)]
    pub sigma: f64,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum MethodArg {
    Iterative,
    Convex,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct TradeoffArgs {
    #[command(flatten)]
    pub plant: PlantArgs,
    #[arg(long, value_enum, default_value_t = MethodArg::Convex)]
    pub method: MethodArg,
    #[arg(long)]
    pub gamma_from: f64,
    #[arg(long)]
    pub gamma_to: f64,
    #[arg(long, default_value_t = 0.25)]
    pub step: f64,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum AttackArg {
    None,
    ZeroAlarm,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum PolicyArg {
    FixedDirection,
    Rotating,
    MaxGrowth,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub plant: PlantArgs,
    #[arg(long)]
    pub gains: PathBuf,
    #[arg(long)]
    pub seed: u64,
    #[arg(long, default_value_t = 100_000)]
    pub steps: usize,
    #[arg(long, default_value_t = 100)]
    pub burn_in: usize,
    #[arg(long, value_enum, default_value_t = AttackArg::None)]
    pub attack: AttackArg,
    #[arg(long, value_enum, default_value_t = PolicyArg::MaxGrowth)]
    pub policy: PolicyArg,
    /// Unit attack direction for `fixed-direction`, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub direction: Option<Vec<f64>>,
    /// Radians per step for `rotating`.
    #[arg(long, default_value_t = 0.1)]
    pub rate: f64,
    /// Fraction of the detector boundary used by the attacker.
    #[arg(long, default_value_t = 1.0)]
    pub scale: f64,
    /// Sample noise only inside its truncation ellipsoid.
    #[arg(long)]
    pub truncate: bool,
    /// Bound JSON from `analyze`; enables containment checks.
    #[arg(long)]
    pub bound: Option<PathBuf>,
}

#[derive(Debug, Serialize)]
pub struct InputDigest {
    pub path: PathBuf,
    pub sha256: String,
}

/// Written next to every output.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub config: Value,
    pub inputs: Vec<InputDigest>,
    pub version: String,
    pub duration_secs: f64,
}

/// Parses `args` and runs the command, returning the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let result = match cli.jobs {
        Some(jobs) => match rayon::ThreadPoolBuilder::new().num_threads(jobs).build() {
            Ok(pool) => pool.install(|| execute(&cli.command)),
            Err(e) => Err(Error::Argument(format!("cannot build worker pool: {e}"))),
        },
        None => execute(&cli.command),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Argument(_) => 2,
                _ => 1,
            }
        }
    }
}

/// Formats `x` with six significant digits.
pub fn sig6(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return x.to_string();
    }
    let magnitude = x.abs().log10().floor() as i32;
    if !(-4..6).contains(&magnitude) {
        return format!("{x:.5e}");
    }
    format!("{x:.*}", (5 - magnitude).max(0) as usize)
}

fn read_input(path: &Path, inputs: &mut Vec<InputDigest>) -> Result<String> {
    let bytes = fs::read(path)?;
    inputs.push(InputDigest {
        path: path.to_path_buf(),
        sha256: Sha256::digest(&bytes)
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect(),
    });
    String::from_utf8(bytes).map_err(|_| Error::Argument(format!("{} is not UTF-8", path.display())))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    fs::write(path, serde_json::to_string_pretty(value)? + "\n")?;
    Ok(())
}

fn sibling(out: &Path, name: &str) -> PathBuf {
    out.with_file_name(name)
}

fn suffixed(out: &Path, suffix: &str) -> PathBuf {
    let mut name = out.file_name().map(|s| s.to_os_string()).unwrap_or_default();
    name.push(suffix);
    out.with_file_name(name)
}

fn manifest_path(out: &Path) -> PathBuf {
    suffixed(out, ".manifest.json")
}

struct Plant {
    sys: LtiSystem,
    detector: DetectorConfig,
    trunc: TruncationConfig,
}

impl PlantArgs {
    fn load(&self, inputs: &mut Vec<InputDigest>) -> Result<Plant> {
        let sys = LtiSystem::from_json(&read_input(&self.system, inputs)?)?;
        let mut detector = make_detector(self.far, sys.p())?;
        if let Some(alpha) = self.alpha {
            detector = detector.with_alpha(alpha)?;
        }
        let trunc = TruncationConfig::for_system(&sys, self.pnu, self.pe, self.peta)?;
        Ok(Plant { sys, detector, trunc })
    }
}

fn load_gains(path: &Path, sys: &LtiSystem, inputs: &mut Vec<InputDigest>) -> Result<GainPair> {
    let gains = GainPair::from_json(&read_input(path, inputs)?)?;
    gains.validate(sys)?;
    Ok(gains)
}

fn design_config(args: &DesignArgs) -> CodesignConfig {
    let mut cfg = CodesignConfig::default();
    if let Some(v) = args.sigma_max {
        cfg.sigma_max = v;
    }
    if let Some(v) = args.epsilon_l {
        cfg.epsilon_l = v;
    }
    cfg
}

fn plant_config(plant: &Plant) -> Value {
    json!({ "detector": plant.detector, "truncation": plant.trunc })
}

fn execute(command: &Command) -> Result<()> {
    let started = Instant::now();
    let mut inputs = Vec::new();
    let (name, out, config) = match command {
        Command::Analyze(args) => {
            let plant = args.plant.load(&mut inputs)?;
            let gains = load_gains(&args.gains, &plant.sys, &mut inputs)?;
            let grid = default_a_grid();
            let bound = bound_reachable_set(&plant.sys, &gains, &plant.detector, &plant.trunc, &grid)?;
            write_json(&args.plant.out, &bound)?;
            if plant.sys.n() == 2 {
                let points = ellipsoid_boundary_points(&bound.q_x, 200)?;
                fs::write(sibling(&args.plant.out, "ellipse.csv"), boundary_csv(&points))?;
            }
            println!("trace {} at a = {}", sig6(bound.objective), bound.a);
            let config = json!({ "args": args, "plant": plant_config(&plant), "a_grid": grid });
            ("analyze", &args.plant.out, config)
        }
        Command::DesignH2(args) => {
            let plant = args.load(&mut inputs)?;
            let ranking = RankingContext::new(plant.detector, plant.trunc);
            let opts = SolveOptions::default();
            let res = optimal_occ_h2_ranked(&plant.sys, Some(&ranking), &opts)?;
            let gamma_open = open_loop_gamma(&plant.sys)?;
            write_json(
                &args.out,
                &json!({ "result": res, "gamma_open_loop": gamma_open }),
            )?;
            println!(
                "gamma* {}  open loop {}  real candidates {}/{}",
                sig6(res.gamma_star),
                sig6(gamma_open),
                res.riccati.real,
                res.riccati.candidates
            );
            let config = json!({ "args": args, "plant": plant_config(&plant), "solve": opts });
            ("design-h2", &args.out, config)
        }
        Command::DesignIter(args) | Command::DesignConvex(args) => {
            let plant = args.plant.load(&mut inputs)?;
            let cfg = design_config(args);
            let iterative = matches!(command, Command::DesignIter(_));
            let res = if iterative {
                design_iterative(&plant.sys, args.gamma_bar, &plant.detector, &plant.trunc, &cfg)?
            } else {
                design_convex(&plant.sys, args.gamma_bar, &plant.detector, &plant.trunc, &cfg)?
            };
            write_json(&args.plant.out, &res)?;
            println!(
                "sigma {}  gamma {}  security {}",
                sig6(res.sigma),
                sig6(res.gamma),
                sig6(res.bound.objective)
            );
            let name = if iterative { "design-iter" } else { "design-convex" };
            let config = json!({ "args": args, "plant": plant_config(&plant), "codesign": cfg });
            (name, &args.plant.out, config)
        }
        Command::Infimum(args) => {
            let plant = args.plant.load(&mut inputs)?;
            let cfg = CodesignConfig::default();
            let res = infimum_gamma_on_manifold(&plant.sys, &plant.detector, &plant.trunc, args.sigma, &cfg)?;
            write_json(&args.plant.out, &res)?;
            println!(
                "gamma_bar_c {}  gamma_c {}",
                sig6(res.gamma_bar_c),
                sig6(res.gamma_c)
            );
            let config = json!({ "args": args, "plant": plant_config(&plant), "codesign": cfg });
            ("infimum", &args.plant.out, config)
        }
        Command::Tradeoff(args) => {
            if args.step.is_nan() || args.step <= 0.0 || args.gamma_to < args.gamma_from {
                return Err(Error::Argument("need step > 0 and gamma-to >= gamma-from".into()));
            }
            let plant = args.plant.load(&mut inputs)?;
            let cfg = CodesignConfig::default();
            let count = ((args.gamma_to - args.gamma_from) / args.step + 1e-9).floor() as usize + 1;
            let list: Vec<f64> = (0..count)
                .map(|i| args.gamma_from + i as f64 * args.step)
                .collect();
            let method = match args.method {
                MethodArg::Iterative => Method::Iterative,
                MethodArg::Convex => Method::Convex,
            };
            let rows = tradeoff_curve(&plant.sys, &plant.detector, &plant.trunc, &list, method, &cfg)?;
            fs::write(&args.plant.out, tradeoff_csv(&rows))?;
            let failed = rows.iter().filter(|r| r.error.is_some()).count();
            println!("{} rows, {} failed", rows.len(), failed);
            let config = json!({ "args": args, "plant": plant_config(&plant), "codesign": cfg, "gamma_bars": list, "rows": rows });
            ("tradeoff", &args.plant.out, config)
        }
        Command::Simulate(args) => {
            let plant = args.plant.load(&mut inputs)?;
            let gains = load_gains(&args.gains, &plant.sys, &mut inputs)?;
            let bound: Option<ReachableBound> = match &args.bound {
                Some(p) => Some(serde_json::from_str(&read_input(p, &mut inputs)?)?),
                None => None,
            };
            let policy = match args.policy {
                PolicyArg::FixedDirection => PhiPolicy::FixedDirection(
                    args.direction
                        .clone()
                        .ok_or_else(|| Error::Argument("fixed-direction needs --direction".into()))?,
                ),
                PolicyArg::Rotating => PhiPolicy::Rotating { rate: args.rate },
                PolicyArg::MaxGrowth => PhiPolicy::MaxGrowth,
            };
            let strategy = AttackStrategy {
                kind: match args.attack {
                    AttackArg::None => AttackKind::None,
                    AttackArg::ZeroAlarm => AttackKind::ZeroAlarm,
                },
                policy,
                scale: args.scale,
            };
            let sim = SimConfig {
                steps: args.steps,
                seed: args.seed,
                truncate_noise: args.truncate,
                burn_in: args.burn_in,
            };
            let trace = simulate(
                &plant.sys,
                &gains,
                &plant.detector,
                &strategy,
                &sim,
                bound.as_ref(),
            )?;
            fs::write(&args.plant.out, trace.to_csv())?;
            let summary = SimSummary::from(&trace);
            let gamma = evaluate_gamma(&plant.sys, &gains)?.gamma;
            write_json(&suffixed(&args.plant.out, ".summary.json"), &summary)?;
            println!(
                "alarm rate {}  mean z {}  max z {}  violations {}  gamma {}",
                sig6(summary.alarm_rate),
                sig6(summary.mean_z),
                sig6(summary.max_z),
                summary.containment_violations,
                sig6(gamma)
            );
            let config =
                json!({ "args": args, "plant": plant_config(&plant), "strategy": strategy, "sim": sim });
            ("simulate", &args.plant.out, config)
        }
    };
    let manifest = RunManifest {
        command: name.into(),
        config,
        inputs,
        version: env!("CARGO_PKG_VERSION").into(),
        duration_secs: started.elapsed().as_secs_f64(),
    };
    write_json(&manifest_path(out), &manifest)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn six_significant_digits() {
        assert_eq!(sig6(1.5705321), "1.57053");
        assert_eq!(sig6(400.9123), "400.912");
        assert_eq!(sig6(0.0123456789), "0.0123457");
        assert_eq!(sig6(1234567.0), "1.23457e6");
    }

    #[test]
    fn usage_errors_exit_two() {
        assert_eq!(run(["codesign", "bogus"]), 2);
        assert_eq!(run(["codesign", "analyze", "--unknown"]), 2);
        assert_eq!(
            run(["codesign", "simulate", "--system", "s.json", "--gains", "g.json", "--out", "t.csv"]),
            2
        );
    }

    #[test]
    fn manifest_sits_next_to_output() {
        assert_eq!(
            manifest_path(Path::new("/tmp/x/bound.json")),
            PathBuf::from("/tmp/x/bound.json.manifest.json")
        );
    }
}
