//! Command-line workbench: level maps, line lists, qudit search, gate
//! compilation, Deutsch runs and error budgets.
//!
//! Settings resolve as flags > `--config` file > dataset defaults.
//! Exit codes: 0 success, 2 usage, 3 data or schema, 4 numerical failure.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use molqudit::budget::circuit_budget;
use molqudit::circuit::{deutsch_run, LogicalMapping};
use molqudit::config::{RunConfig, Settings};
use molqudit::gates::{Compiler, Gate, PulseSequence};
use molqudit::hamiltonian::ScanAxis;
use molqudit::io::{csv_table, write_atomic};
use molqudit::search::{plan_from_selection, search_qudit};
use molqudit::transitions::{line_list, lines_to_csv, FreqUnit};
use molqudit::{Engine, Error, MoleculeSpec, QuditPlan, Result, Spectrum};

#[derive(Parser, Debug)]
#[command(name = "molqudit", version, about = "Molecular qudit workbench")]
struct Cli {
    /// TOML run configuration; flags override it, it overrides dataset defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Default)]
struct Common {
    /// Builtin dataset (`caf`, `rbcs`) or path to a dataset file.
    #[arg(long)]
    molecule: Option<String>,
    /// Magnetic field, G.
    #[arg(long = "B")]
    b_gauss: Option<f64>,
    /// Trap intensity, kW/cm².
    #[arg(long = "I")]
    intensity: Option<f64>,
    /// Angle between trap polarization and B, rad.
    #[arg(long)]
    angle: Option<f64>,
    #[arg(long = "n-max")]
    n_max: Option<u32>,
    /// Output file; stdout when absent. Written atomically.
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug, Default)]
struct ModelArgs {
    #[arg(long = "primary-N")]
    primary_n: Option<u32>,
    #[arg(long = "aux-N")]
    aux_n: Option<u32>,
    /// π/2-pulse duration, s.
    #[arg(long = "t-half-pi")]
    t_half_pi: Option<f64>,
    #[arg(long = "p-loss-max")]
    p_loss_max: Option<f64>,
    #[arg(long)]
    purity: Option<f64>,
    #[arg(long = "strength-min")]
    strength_min: Option<f64>,
}

#[derive(Args, Debug, Default)]
struct NoiseArgs {
    /// RMS magnetic-field noise, G.
    #[arg(long = "noise-B")]
    noise_b: Option<f64>,
    /// RMS intensity noise as a fraction of the working intensity.
    #[arg(long = "noise-I")]
    noise_i: Option<f64>,
    /// Field-independent decoherence rate, Hz.
    #[arg(long = "external-rate")]
    external_rate: Option<f64>,
}

#[derive(Args, Debug)]
struct ScanArgs {
    #[arg(long)]
    from: f64,
    #[arg(long)]
    to: f64,
    #[arg(long, default_value_t = 61)]
    points: usize,
    /// Keep only curves starting in these rotational manifolds.
    #[arg(long = "manifold")]
    manifolds: Vec<u32>,
    /// Overlap below which a grid point is flagged.
    #[arg(long, default_value_t = 0.9)]
    threshold: f64,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Unit {
    Mhz,
    Khz,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Format {
    Text,
    Json,
    Csv,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Eigenlevels at one field point.
    Levels {
        #[command(flatten)]
        common: Common,
        #[arg(long = "manifold")]
        manifolds: Vec<u32>,
    },
    /// Levels tracked across a magnetic-field range.
    ZeemanMap {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        scan: ScanArgs,
    },
    /// Levels tracked across a trap-intensity range.
    StarkMap {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        scan: ScanArgs,
    },
    /// Electric-dipole lines between two adjacent manifolds.
    Transitions {
        #[command(flatten)]
        common: Common,
        #[arg(long = "from-N")]
        from_n: u32,
        #[arg(long = "to-N")]
        to_n: u32,
        #[arg(long, value_enum, default_value_t = Unit::Mhz)]
        unit: Unit,
        #[arg(long = "strength-min")]
        strength_min: Option<f64>,
    },
    /// Greedy qudit level-set search, or a plan from explicit pairs.
    Search {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        model: ModelArgs,
        /// Explicit `primary=auxiliary` drive; repeat to build a plan by hand.
        #[arg(long = "pair")]
        pairs: Vec<String>,
    },
    /// Compile gates to microwave pulses.
    Compile {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        plan: PathBuf,
        /// Verification tolerance on the phase-insensitive distance.
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        /// `H:k,l`, `X:k,l`, `U:k,l:zeta:phi` or `R:k:phi`, with 1-based
        /// primary indices; applied left to right.
        #[arg(required = true)]
        gates: Vec<String>,
    },
    /// Deutsch's algorithm on one oracle with its error budget.
    Deutsch {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        noise: NoiseArgs,
        #[arg(long)]
        plan: PathBuf,
        #[arg(long, value_parser = clap::value_parser!(u8).range(1..=4))]
        oracle: u8,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Error budget of the Deutsch circuit for one oracle.
    Budget {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        noise: NoiseArgs,
        #[arg(long)]
        plan: PathBuf,
        #[arg(long, value_parser = clap::value_parser!(u8).range(1..=4))]
        oracle: u8,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
}

impl Command {
    fn common(&self) -> &Common {
        match self {
            Command::Levels { common, .. }
            | Command::ZeemanMap { common, .. }
            | Command::StarkMap { common, .. }
            | Command::Transitions { common, .. }
            | Command::Search { common, .. }
            | Command::Compile { common, .. }
            | Command::Deutsch { common, .. }
            | Command::Budget { common, .. } => common,
        }
    }

    fn flags(&self) -> RunConfig {
        let c = self.common();
        let mut r = RunConfig {
            molecule: c.molecule.clone(),
            b_gauss: c.b_gauss,
            intensity_kw_cm2: c.intensity,
            polarization_angle_rad: c.angle,
            n_max: c.n_max,
            ..Default::default()
        };
        match self {
            Command::Search { model, .. } => {
                r.primary_n = model.primary_n;
                r.aux_n = model.aux_n;
                r.t_half_pi_s = model.t_half_pi;
                r.p_loss_max = model.p_loss_max;
                r.purity = model.purity;
                r.strength_min = model.strength_min;
            }
            Command::Transitions { strength_min, .. } => r.strength_min = *strength_min,
            Command::Deutsch { noise, .. } | Command::Budget { noise, .. } => {
                r.noise_b_gauss = noise.noise_b;
                r.noise_intensity_fraction = noise.noise_i;
                r.external_rate_hz = noise.external_rate;
            }
            _ => {}
        }
        r
    }
}

struct Ctx {
    config: RunConfig,
    spec: MoleculeSpec,
    settings: Settings,
}

impl Ctx {
    fn new(cli: &Cli) -> Result<Self> {
        let file = match &cli.config {
            Some(p) => RunConfig::from_file(p)?,
            None => RunConfig::default(),
        };
        let config = cli.command.flags().over(file);
        let name = config
            .molecule
            .clone()
            .ok_or_else(|| Error::InvalidArgument("no molecule given (--molecule or config)".into()))?;
        let spec = MoleculeSpec::load(&name)?;
        let settings = config.resolve(&spec)?;
        Ok(Ctx { config, spec, settings })
    }

    fn engine(&self) -> Result<Engine> {
        Engine::new(&self.spec, self.settings.n_max)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn run(cli: &Cli) -> Result<()> {
    let ctx = Ctx::new(cli)?;
    let out = output_path(&ctx.config, cli.command.common().out.as_deref());
    let text = match &cli.command {
        Command::Levels { manifolds, .. } => cmd_levels(&ctx, manifolds)?,
        Command::ZeemanMap { scan, .. } => cmd_map(&ctx, ScanAxis::B, scan)?,
        Command::StarkMap { scan, .. } => cmd_map(&ctx, ScanAxis::Intensity, scan)?,
        Command::Transitions { from_n, to_n, unit, .. } => cmd_transitions(&ctx, *from_n, *to_n, *unit)?,
        Command::Search { pairs, .. } => cmd_search(&ctx, pairs)?,
        Command::Compile { plan, tol, gates, .. } => cmd_compile(&ctx, plan, *tol, gates)?,
        Command::Deutsch { plan, oracle, format, .. } => cmd_deutsch(&ctx, plan, *oracle as usize, *format, true)?,
        Command::Budget { plan, oracle, format, .. } => cmd_deutsch(&ctx, plan, *oracle as usize, *format, false)?,
    };
    match out {
        Some(p) => write_atomic(&p, text.as_bytes()),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn output_path(config: &RunConfig, out: Option<&Path>) -> Option<PathBuf> {
    let out = out?;
    match &config.out_dir {
        Some(dir) if out.is_relative() => Some(dir.join(out)),
        _ => Some(out.to_path_buf()),
    }
}

fn cmd_levels(ctx: &Ctx, manifolds: &[u32]) -> Result<String> {
    let spectrum = ctx.engine()?.diagonalize(&ctx.settings.field)?;
    let header = ["level", "N", "mF", "energy_MHz", "mu_MHzperG", "dEdI_MHzperkWcm2"];
    let rows = spectrum
        .levels
        .iter()
        .filter(|l| manifolds.is_empty() || manifolds.contains(&l.label.n))
        .map(|l| {
            vec![
                l.name(),
                l.label.n.to_string(),
                l.label.m_f.to_string(),
                format!("{:.9}", l.energy),
                format!("{:.9e}", l.mu),
                format!("{:.9e}", l.dedi),
            ]
        });
    Ok(csv_table(&header, rows))
}

fn cmd_map(ctx: &Ctx, axis: ScanAxis, scan: &ScanArgs) -> Result<String> {
    if scan.points < 2 || !(scan.to != scan.from) || !scan.from.is_finite() || !scan.to.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "empty scan range {}..{} with {} points",
            scan.from, scan.to, scan.points
        )));
    }
    let step = (scan.to - scan.from) / (scan.points - 1) as f64;
    let grid: Vec<f64> = (0..scan.points).map(|i| scan.from + step * i as f64).collect();
    let mut map = ctx.engine()?.scan(axis, &grid, &ctx.settings.field, scan.threshold)?;
    if !scan.manifolds.is_empty() {
        map.curves.retain(|c| scan.manifolds.contains(&c.labels[0].n));
    }
    if let Some(&g) = map.flagged.first() {
        eprintln!(
            "warning: tracking overlap below {} at {} grid points, first at {}",
            scan.threshold,
            map.flagged.len(),
            map.grid[g]
        );
    }
    Ok(map.to_csv())
}

fn cmd_transitions(ctx: &Ctx, from_n: u32, to_n: u32, unit: Unit) -> Result<String> {
    let engine = ctx.engine()?;
    let spectrum = engine.diagonalize(&ctx.settings.field)?;
    let lines = line_list(&engine, &spectrum, from_n, to_n, ctx.settings.model.s_min)?;
    let unit = match unit {
        Unit::Mhz => FreqUnit::MHz,
        Unit::Khz => FreqUnit::KHz,
    };
    Ok(lines_to_csv(&lines, unit))
}

fn cmd_search(ctx: &Ctx, pairs: &[String]) -> Result<String> {
    let s = &ctx.settings;
    let engine = Engine::new(&ctx.spec, s.n_max.max(s.primary_n.max(s.aux_n)))?;
    let spectrum = engine.diagonalize(&s.field)?;
    let plan = if pairs.is_empty() {
        search_qudit(&engine, &spectrum, s.primary_n, s.aux_n, &s.model)?
    } else {
        let split: Vec<(&str, &str)> = pairs
            .iter()
            .map(|p| {
                p.split_once('=')
                    .ok_or_else(|| Error::InvalidArgument(format!("pair {p:?} is not primary=auxiliary")))
            })
            .collect::<Result<_>>()?;
        plan_from_selection(&engine, &spectrum, &split, &s.model)?
    };
    for d in &plan.diagnostics {
        eprintln!("note: {d}");
    }
    if plan.dimension() < 2 {
        eprintln!("warning: plan has a single level and cannot carry a qudit");
    }
    if !plan.passes() {
        eprintln!(
            "warning: worst audited p_loss {:.3e} exceeds {:.3e}",
            plan.worst_p_loss, plan.model.p_loss_max
        );
    }
    plan.to_json()
}

/// Plan plus the spectrum it was built on.
fn load_plan(ctx: &Ctx, path: &Path) -> Result<(QuditPlan, Spectrum)> {
    let plan = QuditPlan::load(path)?;
    if plan.molecule != ctx.spec.name {
        return Err(Error::Plan(format!(
            "plan is for {} but the dataset is {}",
            plan.molecule, ctx.spec.name
        )));
    }
    let n_max = ctx.settings.n_max.max(plan.primary_n.max(plan.aux_n));
    let spectrum = Engine::new(&ctx.spec, n_max)?.diagonalize(&plan.field)?;
    Ok((plan, spectrum))
}

fn parse_gate(token: &str, plan: &QuditPlan) -> Result<Gate> {
    let bad = || Error::InvalidArgument(format!("cannot parse gate {token:?}"));
    let level = |s: &str| -> Result<String> {
        let j: usize = s.trim().parse().map_err(|_| bad())?;
        plan.primary
            .get(j.wrapping_sub(1))
            .cloned()
            .ok_or_else(|| Error::InvalidArgument(format!("level index {j} outside 1..={}", plan.dimension())))
    };
    let num = |s: &str| -> Result<f64> { s.trim().parse().map_err(|_| bad()) };
    let parts: Vec<&str> = token.split(':').collect();
    let pair = |s: &str| -> Result<(String, String)> {
        let (a, b) = s.split_once(',').ok_or_else(bad)?;
        Ok((level(a)?, level(b)?))
    };
    match (parts[0].to_ascii_uppercase().as_str(), parts.len()) {
        ("H", 2) => pair(parts[1]).map(|(k, l)| Gate::hadamard(&k, &l)),
        ("X", 2) => pair(parts[1]).map(|(k, l)| Gate::x(&k, &l)),
        ("U", 4) => {
            let (k, l) = pair(parts[1])?;
            Ok(Gate::TwoPhoton {
                k,
                l,
                zeta: num(parts[2])?,
                phi: num(parts[3])?,
            })
        }
        ("R", 3) => Ok(Gate::Phase {
            k: level(parts[1])?,
            phi: num(parts[2])?,
        }),
        _ => Err(bad()),
    }
}

fn cmd_compile(ctx: &Ctx, plan_path: &Path, tol: f64, tokens: &[String]) -> Result<String> {
    let (plan, _) = load_plan(ctx, plan_path)?;
    let compiler = Compiler::new(&plan);
    let mut seq = PulseSequence::default();
    for t in tokens {
        let gate = parse_gate(t, &plan)?;
        let (s, dist) = compiler.compile_verified(&gate, tol)?;
        eprintln!(
            "{}: {} pulses, {:.3e} s, residual {:.2e}",
            gate.name(),
            s.pulses.len(),
            s.total_duration(),
            dist
        );
        seq.extend(s);
    }
    Ok(seq.to_csv())
}

fn cmd_deutsch(ctx: &Ctx, plan_path: &Path, oracle: usize, format: Format, full: bool) -> Result<String> {
    let (plan, spectrum) = load_plan(ctx, plan_path)?;
    let map = LogicalMapping::from_plan(&plan);
    let report = deutsch_run(&plan, &map, oracle)?;
    let budget = circuit_budget(&spectrum, &ctx.spec, &plan, &report.schedule, &ctx.settings.noise)?;
    Ok(match format {
        Format::Json if full => {
            let v = serde_json::json!({ "version": 1, "report": report, "budget": budget });
            format!("{}\n", serde_json::to_string_pretty(&v)?)
        }
        Format::Json => format!("{}\n", serde_json::to_string_pretty(&budget)?),
        Format::Csv if full => report.schedule.to_csv(),
        Format::Csv => budget.to_csv(),
        Format::Text => {
            let mut s = String::new();
            if full {
                s += &format!("oracle          {}\n", report.oracle);
                s += &format!("P(|2>)          {:.6}\n", report.p_state2);
                s += &format!("verdict         {} (expected {})\n", report.verdict, report.expected);
                s += &format!("pulses          {}\n", report.pulse_count);
                s += &format!("total time      {:.4e} s\n", report.total_time_s);
                s += &format!("gate residual   {:.2e}\n", report.max_gate_residual);
                s += &format!("leakage         {:.2e}\n\n", report.leakage);
                for st in &report.stages {
                    s += &format!("stage {:<8} {:>3} pulses {:.4e} s\n", st.stage, st.pulses, st.duration_s);
                }
                s += "\n";
            }
            s += &budget.to_table();
            if full {
                s += "\n";
                s += &report.schedule.to_csv();
            }
            s
        }
    })
}
