use std::fs::File;
use std::io::{self, BufReader, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use fchybrid::powertrain::BatterySpec;
use fchybrid::presets;
use fchybrid::profile::{
    load_profile, profile_stats, synthesize_walk_profile, write_profile, GaitParams, PowerProfile,
    IDLE_MARGIN_W,
};
use fchybrid::report::config::ConfigFile;
use fchybrid::report::{
    compare, emit_comparison, emit_flow_series, emit_simulation, emit_sizing, emit_stats, Format,
};
use fchybrid::simulator::{simulate, Mode, SimOptions};
use fchybrid::sizing::{
    optimize_setpoint, size_battery_only, size_direct_fc, size_hybrid, SetpointSearch,
};
use fchybrid::{Error, Result};

/// Fuel-cell/battery hybrid power simulator and sizing toolkit.
#[derive(Debug, Parser)]
#[command(name = "fchybrid", version)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// TOML configuration file; repeat for several `compare` entries.
    #[arg(long, global = true)]
    config: Vec<PathBuf>,
    /// Output file (default: stdout).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Output format: json or csv.
    #[arg(long, global = true)]
    format: Option<String>,
    /// Simulation time step, seconds.
    #[arg(long, global = true)]
    dt: Option<f64>,
    /// Repeat the profile until fuel or battery runs out.
    #[arg(long = "loop", global = true)]
    loop_profile: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Synthesize or summarize power profiles.
    #[command(subcommand)]
    Profile(ProfileCommand),
    /// Run a plant through a profile or a constant load.
    Simulate(SimulateArgs),
    /// Size components under a mass budget.
    Size(SizeArgs),
    /// Tabulate mass, energy density, life and run-time for several supplies.
    Compare(CompareArgs),
}

#[derive(Debug, Subcommand)]
enum ProfileCommand {
    /// Write a parametric walking-gait profile as CSV.
    Synth(SynthArgs),
    /// Average, peak, idle fraction and energy of a profile CSV.
    Stats(StatsArgs),
}

#[derive(Debug, Args)]
struct SynthArgs {
    /// Always-on load, watts.
    #[arg(long)]
    base: Option<f64>,
    /// Gait period, seconds.
    #[arg(long)]
    period: Option<f64>,
    /// Fraction of each period spent in the stride.
    #[arg(long)]
    duty: Option<f64>,
    /// Mechanical power during the stride, watts.
    #[arg(long = "mech-peak")]
    mech_peak: Option<f64>,
    /// Electrical-to-mechanical efficiency of the servos.
    #[arg(long = "servo-efficiency")]
    servo_efficiency: Option<f64>,
    /// Profile length, seconds.
    #[arg(long)]
    duration: Option<f64>,
    /// Grid points per gait period.
    #[arg(long = "samples-per-period")]
    samples_per_period: Option<usize>,
}

#[derive(Debug, Args)]
struct StatsArgs {
    /// Profile CSV (`-` for stdin).
    input: PathBuf,
    /// Demand at or below this counts as idle, watts (default: minimum + 1 W).
    #[arg(long = "idle-threshold")]
    idle_threshold: Option<f64>,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    /// Built-in plant: nimh, li_ion, direct_fc or hybrid (overridden by --config).
    #[arg(long)]
    preset: Option<String>,
    /// Profile CSV; without it a constant load is simulated.
    #[arg(long)]
    profile: Option<PathBuf>,
    /// Constant load, watts (default: the plant's load basis).
    #[arg(long, conflicts_with = "profile")]
    load: Option<f64>,
    /// Also write the per-step flow series as CSV to this file.
    #[arg(long)]
    flows: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SizeArgs {
    /// Emit the four built-in comparison sizings.
    #[arg(long, conflicts_with_all = ["mode", "optimize"])]
    table1: bool,
    /// hybrid, direct_fc or battery_only (default: from --config, else hybrid).
    #[arg(long)]
    mode: Option<String>,
    #[arg(long = "mass-budget")]
    mass_budget: Option<f64>,
    /// Fuel-cell setpoint, or the average load for battery_only, watts.
    #[arg(long)]
    steady: Option<f64>,
    #[arg(long)]
    peak: Option<f64>,
    /// Mission profile; checks the battery against its deficits.
    #[arg(long)]
    profile: Option<PathBuf>,
    /// Search the setpoint that maximizes fuel endurance on --profile.
    #[arg(long, requires = "profile")]
    optimize: bool,
    /// Minimum system life for --optimize, hours.
    #[arg(long = "life-floor")]
    life_floor: Option<f64>,
}

#[derive(Debug, Args)]
struct CompareArgs {
    /// Compare the four built-in supplies.
    #[arg(long)]
    table1: bool,
    /// Built-in plants to include, by name.
    #[arg(long)]
    preset: Vec<String>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    let common = &cli.common;
    if let Some(dt) = common.dt {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::Validation {
                field: "dt".into(),
                reason: format!("must be finite and > 0, got {dt}"),
            });
        }
    }
    match &cli.command {
        Command::Profile(ProfileCommand::Synth(args)) => synth(common, args),
        Command::Profile(ProfileCommand::Stats(args)) => stats(common, args),
        Command::Simulate(args) => simulate_cmd(common, args),
        Command::Size(args) => size_cmd(common, args),
        Command::Compare(args) => compare_cmd(common, args),
    }
}

fn format(common: &Common, default: Format) -> Result<Format> {
    common.format.as_deref().map_or(Ok(default), str::parse)
}

fn single_config(common: &Common) -> Result<ConfigFile> {
    match common.config.as_slice() {
        [] => Ok(ConfigFile::default()),
        [path] => ConfigFile::load(path),
        _ => Err(Error::Usage(
            "only `compare` accepts several --config files".into(),
        )),
    }
}

fn write_output(common: &Common, text: &str) -> Result<()> {
    match &common.out {
        Some(path) => std::fs::write(path, text)?,
        None => io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn read_profile(path: &Path) -> Result<PowerProfile> {
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "profile".into());
    if path == Path::new("-") {
        let mut text = String::new();
        io::stdin().read_to_string(&mut text)?;
        return load_profile(text.as_bytes(), "stdin");
    }
    load_profile(BufReader::new(File::open(path)?), name)
}

fn synth(common: &Common, args: &SynthArgs) -> Result<()> {
    if format(common, Format::Csv)? != Format::Csv {
        return Err(Error::Usage("profiles are written as csv only".into()));
    }
    let mut params = GaitParams::default();
    let overrides = [
        (&mut params.base_load, args.base),
        (&mut params.gait_period, args.period),
        (&mut params.stride_duty, args.duty),
        (&mut params.mech_peak, args.mech_peak),
        (&mut params.servo_efficiency, args.servo_efficiency),
        (&mut params.duration, args.duration),
    ];
    for (field, value) in overrides {
        if let Some(v) = value {
            *field = v;
        }
    }
    if let Some(n) = args.samples_per_period {
        params.samples_per_period = n;
    }
    let profile = synthesize_walk_profile(&params)?;
    let mut buf = Vec::new();
    write_profile(&profile, &mut buf)?;
    write_output(
        common,
        &String::from_utf8(buf).expect("profile CSV is ASCII"),
    )
}

fn stats(common: &Common, args: &StatsArgs) -> Result<()> {
    let profile = read_profile(&args.input)?;
    let threshold = match args.idle_threshold {
        Some(t) => t,
        None => {
            profile
                .samples()
                .iter()
                .map(|s| s.power)
                .fold(f64::INFINITY, f64::min)
                + IDLE_MARGIN_W
        }
    };
    let stats = profile_stats(&profile, threshold);
    write_output(common, &emit_stats(&stats, format(common, Format::Json)?))
}

fn simulate_cmd(common: &Common, args: &SimulateArgs) -> Result<()> {
    let file = single_config(common)?;
    let config = match (&args.preset, common.config.is_empty()) {
        (Some(name), true) => presets::by_name(name)
            .ok_or_else(|| Error::Usage(format!("unknown preset `{name}`")))?,
        (Some(_), false) => {
            return Err(Error::Usage(
                "give either --preset or --config, not both".into(),
            ))
        }
        (None, _) => file.hybrid_config()?,
    };
    let (profile, base) = match &args.profile {
        Some(path) => (read_profile(path)?, SimOptions::gait()),
        None => {
            let load = args
                .load
                .or(file.mission.load_basis_w)
                .unwrap_or(match config.mode {
                    Mode::BatteryOnly => presets::BATTERY_LOAD,
                    _ => presets::FUEL_CELL_LOAD,
                });
            (
                PowerProfile::constant("constant", load, 3600.0)?,
                SimOptions::endurance(),
            )
        }
    };
    let mut options = file.sim_options(base);
    if let Some(dt) = common.dt {
        options.dt = dt;
    }
    if common.loop_profile {
        options.loop_profile = true;
    }
    options.record_flows = args.flows.is_some();
    let result = simulate(&config, &profile, &options)?;
    if let Some(path) = &args.flows {
        std::fs::write(path, emit_flow_series(&result))?;
    }
    write_output(
        common,
        &emit_simulation(&result, format(common, Format::Json)?),
    )
}

fn size_cmd(common: &Common, args: &SizeArgs) -> Result<()> {
    let format = format(common, Format::Json)?;
    if args.table1 {
        return write_output(common, &emit_sizing(&presets::table1_sizing(), format));
    }
    let file = single_config(common)?;
    let mode = match &args.mode {
        Some(m) => m.parse::<Mode>()?,
        None => file.mode(),
    };
    let mut inputs = file.sizing_inputs()?;
    if let Some(v) = args.mass_budget {
        inputs.mass_budget = v;
    }
    if let Some(v) = args.steady {
        inputs.steady_power = v;
    }
    if let Some(v) = args.peak {
        inputs.peak_power = v;
    }
    let profile = args.profile.as_deref().map(read_profile).transpose()?;

    let result = match mode {
        Mode::Hybrid if args.optimize => {
            let profile = profile.as_ref().expect("clap enforces --profile");
            let mut search = SetpointSearch::default();
            if let Some(dt) = common.dt {
                search.dt = dt;
            }
            let floor = args.life_floor.unwrap_or_else(|| file.life_floor());
            optimize_setpoint(profile, &inputs, floor, &search)?.sizing
        }
        Mode::Hybrid => size_hybrid(&inputs, profile.as_ref())?,
        _ if args.optimize => {
            return Err(Error::Usage(
                "--optimize applies to hybrid sizing only".into(),
            ))
        }
        Mode::DirectFc => size_direct_fc(&inputs)?,
        Mode::BatteryOnly => {
            let template = match file.battery.chemistry.as_deref() {
                Some(_) => file.hybrid_config()?.battery,
                None => BatterySpec::li_ion(0.0),
            };
            let load = args.steady.unwrap_or(presets::BATTERY_LOAD);
            size_battery_only(&template, inputs.mass_budget, load)?
        }
    };
    write_output(common, &emit_sizing(std::slice::from_ref(&result), format))
}

fn compare_cmd(common: &Common, args: &CompareArgs) -> Result<()> {
    let mut entries = Vec::new();
    if args.table1 {
        entries.extend(presets::table1_entries());
    }
    for name in &args.preset {
        let config = presets::by_name(name)
            .ok_or_else(|| Error::Usage(format!("unknown preset `{name}`")))?;
        let load = match config.mode {
            Mode::BatteryOnly => presets::BATTERY_LOAD,
            _ => presets::FUEL_CELL_LOAD,
        };
        entries.push(fchybrid::report::ComparisonEntry::new(
            name.clone(),
            config,
            load,
            presets::PEAK_POWER,
        ));
    }
    for path in &common.config {
        let file = ConfigFile::load(path)?;
        entries.push(file.comparison_entry(&path.display().to_string())?);
    }
    let rows = compare(&entries)?;
    write_output(
        common,
        &emit_comparison(&rows, format(common, Format::Csv)?),
    )
}
