use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use ensemble_heat::bench::bench_multirhs;
use ensemble_heat::ensemble::{check_stability_condition, energy_budget, run, Order, Splitting};
use ensemble_heat::fem::Degree;
use ensemble_heat::io::{metadata_text, mesh_text, trajectory_csv, vtk_text, write_atomic};
use ensemble_heat::linsolve::SolverPath;
use ensemble_heat::scenarios::{build_convergence_case, LaserScenario};
use ensemble_heat::verification::{convergence_study, StudyOptions};

const CONVERGENCE_MS: [usize; 6] = [4, 8, 12, 16, 20, 24];

#[derive(Parser, Debug)]
#[command(name = "ensemble-heat", version, about = "Ensemble timestepping for the heat equation with uncertain conductivity")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    options: Options,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Manufactured-solution convergence study; writes a CSV and prints the table.
    Convergence,
    /// Laser pulse ensemble; writes norm trajectories and field snapshots.
    Laser,
    /// Prints the stability ratio and both order verdicts.
    CheckStability {
        #[arg(long, value_enum, default_value_t = ScenarioName::Laser)]
        scenario: ScenarioName,
    },
    /// Times one shared factorization against one factorization per member.
    BenchMultirhs {
        /// Number of members.
        #[arg(long = "J", default_value_t = 8)]
        members: usize,
        #[arg(long, default_value_t = 10)]
        steps: usize,
    },
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum ScenarioName {
    Laser,
    Convergence,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum SplittingArg {
    Mean,
    Kmax,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum SolverArg {
    Direct,
    Cg,
}

#[derive(Args, Debug, Default)]
struct Options {
    /// Scheme order.
    #[arg(long, global = true, value_parser = clap::value_parser!(u32).range(1..=2))]
    order: Option<u32>,
    /// Mesh resolution(s), comma separated.
    #[arg(long, global = true, value_delimiter = ',')]
    m: Option<Vec<usize>>,
    #[arg(long, global = true)]
    dt: Option<f64>,
    #[arg(long, global = true)]
    tstar: Option<f64>,
    #[arg(long, global = true, value_enum)]
    splitting: Option<SplittingArg>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Write field snapshots every this many steps.
    #[arg(long, global = true)]
    snapshots: Option<usize>,
    #[arg(long, global = true, value_enum)]
    solver: Option<SolverArg>,
    /// Run even when the stability condition fails.
    #[arg(long, global = true)]
    allow_unstable: bool,
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Flat `key = value` file; command-line flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(skip)]
    laser: BTreeMap<String, String>,
}

const LASER_KEYS: [&str; 8] =
    ["conductivities", "amplitude", "width", "cutoff", "wall_temperature", "flux", "initial", "center"];

fn parse_value<T: std::str::FromStr>(key: &str, value: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    value.parse().map_err(|e| anyhow!("invalid value `{value}` for `{key}`: {e}"))
}

fn parse_list<T: std::str::FromStr>(key: &str, value: &str) -> Result<Vec<T>>
where
    T::Err: std::fmt::Display,
{
    value.split(',').map(|v| parse_value(key, v.trim())).collect()
}

fn parse_enum<T: ValueEnum>(key: &str, value: &str) -> Result<T> {
    T::from_str(value, true).map_err(|_| anyhow!("invalid value `{value}` for `{key}`"))
}

impl Options {
    /// Fills every option not given on the command line from the config file.
    fn merge_file(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path).with_context(|| format!("cannot read config file {}", path.display()))?;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| anyhow!("config line {}: expected `key = value`", lineno + 1))?;
            let (key, value) = (key.trim(), value.trim());
            let at = |e: anyhow::Error| e.context(format!("config line {}", lineno + 1));
            match key {
                "order" => {
                    let o: u32 = parse_value(key, value).map_err(at)?;
                    if Order::from_int(o).is_none() {
                        return Err(at(anyhow!("order must be 1 or 2, got {o}")));
                    }
                    self.order.get_or_insert(o);
                }
                "m" => {
                    let ms = parse_list(key, value).map_err(at)?;
                    self.m.get_or_insert(ms);
                }
                "dt" => {
                    let v = parse_value(key, value).map_err(at)?;
                    self.dt.get_or_insert(v);
                }
                "tstar" => {
                    let v = parse_value(key, value).map_err(at)?;
                    self.tstar.get_or_insert(v);
                }
                "splitting" => {
                    let v = parse_enum(key, value).map_err(at)?;
                    self.splitting.get_or_insert(v);
                }
                "solver" => {
                    let v = parse_enum(key, value).map_err(at)?;
                    self.solver.get_or_insert(v);
                }
                "out" => {
                    self.out.get_or_insert_with(|| PathBuf::from(value));
                }
                "snapshots" => {
                    let v = parse_value(key, value).map_err(at)?;
                    self.snapshots.get_or_insert(v);
                }
                "workers" => {
                    let v = parse_value(key, value).map_err(at)?;
                    self.workers.get_or_insert(v);
                }
                "allow_unstable" => {
                    let v: bool = parse_value(key, value).map_err(at)?;
                    self.allow_unstable |= v;
                }
                k if LASER_KEYS.contains(&k) => {
                    self.laser.insert(k.to_string(), value.to_string());
                }
                other => return Err(at(anyhow!("unknown config key `{other}`"))),
            }
        }
        Ok(())
    }

    fn order(&self) -> Order {
        self.order.and_then(Order::from_int).unwrap_or(Order::First)
    }

    fn out_dir(&self) -> PathBuf {
        self.out.clone().unwrap_or_else(|| PathBuf::from("out"))
    }

    fn single_m(&self, default: usize) -> Result<usize> {
        match self.m.as_deref() {
            None => Ok(default),
            Some([m]) => Ok(*m),
            Some(list) => bail!("this command takes a single --m value, got {}", list.len()),
        }
    }

    fn apply(&self, config: &mut ensemble_heat::ensemble::SchemeConfig) -> Result<()> {
        if let Some(s) = self.splitting {
            config.splitting = match s {
                SplittingArg::Mean => Splitting::EnsembleMean,
                SplittingArg::Kmax => Splitting::KappaMax,
            };
        }
        if let Some(s) = self.solver {
            config.solver = match s {
                SolverArg::Direct => SolverPath::Direct,
                SolverArg::Cg => SolverPath::ConjugateGradient,
            };
        }
        config.allow_unstable = self.allow_unstable;
        if let Some(w) = self.workers {
            if w == 0 {
                bail!("--workers must be at least 1");
            }
            config.workers = w;
        }
        if let Some(k) = self.snapshots {
            config.snapshot_every = k;
        }
        config.validate()?;
        Ok(())
    }

    fn laser_scenario(&self) -> Result<LaserScenario> {
        let mut s = LaserScenario::default();
        for (key, value) in &self.laser {
            match key.as_str() {
                "conductivities" => s.conductivities = parse_list(key, value)?,
                "amplitude" => s.amplitude = parse_value(key, value)?,
                "width" => s.width = parse_value(key, value)?,
                "cutoff" => s.cutoff = parse_value(key, value)?,
                "wall_temperature" => s.wall_temperature = parse_value(key, value)?,
                "flux" => s.flux = parse_value(key, value)?,
                "initial" => s.initial = parse_value(key, value)?,
                "center" => {
                    let c: Vec<f64> = parse_list(key, value)?;
                    let [x, y] = c[..] else { bail!("`center` needs two coordinates") };
                    s.center = [x, y];
                }
                _ => unreachable!("filtered when reading the file"),
            }
        }
        s.m = self.single_m(s.m)?;
        if let Some(dt) = self.dt {
            s.dt = dt;
        }
        if let Some(t) = self.tstar {
            s.final_time = t;
        }
        Ok(s)
    }
}

fn convergence(opts: &Options) -> Result<()> {
    if opts.dt.is_some() || opts.tstar.is_some() {
        bail!("the convergence study fixes dt = 0.5/m and t* = 1; --dt and --tstar do not apply");
    }
    let order = opts.order();
    let ms = opts.m.clone().unwrap_or_else(|| CONVERGENCE_MS.to_vec());
    if ms.is_empty() || ms.contains(&0) {
        bail!("--m needs positive resolutions");
    }
    let mut probe = ensemble_heat::scenarios::convergence_config(order, ms[0]);
    opts.apply(&mut probe)?;
    let template = probe.clone();
    let options = StudyOptions {
        degree: Degree::P2,
        workers: 1,
        configure: Some(std::sync::Arc::new(move |c: &mut ensemble_heat::ensemble::SchemeConfig| {
            c.splitting = template.splitting;
            c.solver = template.solver;
            c.allow_unstable = template.allow_unstable;
            c.workers = template.workers;
        })),
    };
    let report = convergence_study(order, &ms, &options)?;
    let out = opts.out_dir();
    let path = out.join(format!("convergence_order{}.csv", order.as_int()));
    write_atomic(&path, report.to_csv().as_bytes())?;
    print!("{}", report.to_table());
    for row in &report.rows {
        let status = if row.energy.holds() { "holds" } else { "VIOLATED" };
        println!("m = {:>3}: energy bound {status}, factorizations = {}", row.m, row.factorizations);
    }
    println!("wrote {}", path.display());
    Ok(())
}

fn laser(opts: &Options) -> Result<()> {
    let scenario = opts.laser_scenario()?;
    let problem = scenario.build(Degree::P2)?;
    let mut config = scenario.config(opts.order());
    opts.apply(&mut config)?;
    let stats = run(&problem, &config)?;
    let out = opts.out_dir();
    write_atomic(&out.join("trajectory.csv"), trajectory_csv(&stats).as_bytes())?;
    write_atomic(&out.join("metadata.txt"), metadata_text(&stats.metadata).as_bytes())?;
    write_atomic(&out.join("mesh.txt"), mesh_text(&problem.mesh).as_bytes())?;
    for snap in &stats.snapshots {
        let names: Vec<String> = (0..snap.members.len()).map(|j| format!("T_{j}")).collect();
        let mut fields: Vec<(&str, &[f64])> = names.iter().map(String::as_str).zip(snap.members.iter().map(Vec::as_slice)).collect();
        fields.push(("mean", &snap.mean));
        fields.push(("variance", &snap.variance));
        let text = vtk_text(&problem.mesh, &stats.dofs, &format!("step {} time {}", snap.step, snap.time), &fields)?;
        write_atomic(&out.join(format!("snapshot_{:04}.vtk", snap.step)), text.as_bytes())?;
    }
    println!("{:>5}  {:>10}  {:>14}  member ||T||", "step", "time", "mean ||T||");
    for r in &stats.records {
        let norms: Vec<String> = r.member_norms.iter().map(|v| format!("{v:.6}")).collect();
        println!("{:>5}  {:>10.4}  {:>14.6}  {}", r.step, r.time, r.mean_norm, norms.join(" "));
    }
    match energy_budget(&stats, &problem, &config) {
        Ok(v) => println!("energy bound: {}", if v.holds() { "holds" } else { "VIOLATED" }),
        Err(e) => println!("energy bound: {e}"),
    }
    println!("factorizations = {}", stats.metadata.factorizations);
    println!("wrote {}", out.display());
    Ok(())
}

fn check_stability(opts: &Options, scenario: ScenarioName) -> Result<()> {
    let problem = match scenario {
        ScenarioName::Laser => LaserScenario { m: 2, ..opts.laser_scenario()? }.build(Degree::P2)?,
        ScenarioName::Convergence => build_convergence_case(2, Degree::P2)?.0,
    };
    let first = check_stability_condition(&problem, Order::First)?;
    let second = check_stability_condition(&problem, Order::Second)?;
    println!("ratio = {}", first.ratio);
    for r in [first, second] {
        let verdict = if r.satisfied { "satisfied" } else { "violated" };
        println!("order {}: {verdict} (threshold {})", r.order.as_int(), r.threshold);
    }
    Ok(())
}

fn bench(opts: &Options, members: usize, steps: usize) -> Result<()> {
    if members == 0 || steps == 0 {
        bail!("--J and --steps must be positive");
    }
    let m = opts.single_m(32)?;
    let r = bench_multirhs(members, m, steps)?;
    println!("members = {}, m = {}, steps = {}, dofs = {}", r.members, r.m, r.steps, r.dofs);
    println!("factorizations: shared = {}, independent = {}", r.shared_factorizations, r.independent_factorizations);
    println!(
        "wall time: shared = {:.6} s, independent = {:.6} s",
        r.shared_time.as_secs_f64(),
        r.independent_time.as_secs_f64()
    );
    Ok(())
}

fn execute(cli: Cli) -> Result<()> {
    let mut opts = cli.options;
    if let Some(path) = opts.config.clone() {
        opts.merge_file(&path)?;
    }
    match cli.command {
        Command::Convergence => convergence(&opts),
        Command::Laser => laser(&opts),
        Command::CheckStability { scenario } => check_stability(&opts, scenario),
        Command::BenchMultirhs { members, steps } => bench(&opts, members, steps),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
