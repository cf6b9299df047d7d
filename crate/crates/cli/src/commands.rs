use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use ancnet_core::cell::{contraction_sweep, LevelSelector, SweepAxis, ThreeSiteParams};
use ancnet_core::decoherence::{purity_vs_time_ratio, two_level_reference, DecoherenceParams, TwoLevelInitial};
use ancnet_core::exec::try_map_indexed;
use ancnet_core::linalg::purity;
use ancnet_core::network::topology::placement_from_json;
use ancnet_core::network::{
    assign_frequencies, chain_stats, compile_circuit, duty_ratio_report, route_swap_chain,
    Circuit, CompileOptions, DutyReport, LatticeTopology, NoiseModel, PulseSchedule,
    ScheduleRun, ScheduleSimulator, TopologyConfig,
};
use ancnet_core::{C64, Error, ExecMode, Ket};
use clap::{Args, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::grid::{parse_coord, parse_grid};

#[derive(Debug)]
pub enum CliError {
    Core(Error),
    Usage(String),
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Io(_) => 1,
            CliError::Core(e) => match e {
                Error::Parse { .. } | Error::Json(_) => 2,
                Error::Routing(_) => 3,
                Error::ScheduleInvariant(_) => 4,
                _ => 1,
            },
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Usage(m) | CliError::Io(m) => f.write_str(m),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

type Result<T> = std::result::Result<T, CliError>;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum)]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Axis {
    S,
    Detuning,
}

#[derive(Clone, Debug)]
pub struct Grid(pub Vec<f64>);

#[derive(Clone, Debug)]
pub struct Coord(pub Vec<usize>);

fn grid_arg(s: &str) -> std::result::Result<Grid, String> {
    parse_grid(s).map(Grid)
}

fn coord_arg(s: &str) -> std::result::Result<Coord, String> {
    parse_coord(s).map(Coord)
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

/// Fails early if `out` cannot be created.
fn check_out(out: Option<&Path>) -> Result<()> {
    if let Some(p) = out {
        let parent = p.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."));
        if !parent.is_dir() {
            return Err(CliError::Io(format!("{}: output directory does not exist", p.display())));
        }
    }
    Ok(())
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => fs::write(p, text).map_err(|e| CliError::Io(format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("json values serialize");
    s.push('\n');
    s
}

fn load_topology(path: &Path) -> Result<(TopologyConfig, LatticeTopology)> {
    let cfg = TopologyConfig::from_json(&read(path)?)?;
    let topo = cfg.build()?;
    Ok((cfg, topo))
}

#[derive(Args, Debug)]
pub struct Fig2Args {
    /// Swept parameter.
    #[arg(long, value_enum, default_value = "detuning")]
    pub axis: Axis,
    /// `a,b,c` or `start:stop:step` (inclusive).
    #[arg(long, value_parser = grid_arg, default_value = "0:0.2:0.01")]
    pub grid: Grid,
    #[arg(long, default_value_t = 1.0)]
    pub t: f64,
    #[arg(long, default_value_t = 0.001)]
    pub s: f64,
    #[arg(long = "e-c", default_value_t = 100.0)]
    pub e_c: f64,
    /// Outer-dot detuning at the base point (used on the `s` axis).
    #[arg(long, default_value_t = 0.0)]
    pub detuning: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
}

pub fn fig2(a: &Fig2Args) -> Result<()> {
    check_out(a.out.as_deref())?;
    let base = ThreeSiteParams::new(0.0, a.e_c, 0.0, a.t, a.s)?.with_detuning(a.detuning);
    let axis = match a.axis {
        Axis::S => SweepAxis::S,
        Axis::Detuning => SweepAxis::Detuning,
    };
    let points = contraction_sweep(&base, axis, &a.grid.0, LevelSelector::Middle, ExecMode::default())?;
    for p in points.iter().filter(|p| p.ambiguous) {
        log::warn!("level tracking ambiguous at x = {}", p.x);
    }
    let text = match a.format {
        Format::Csv => {
            let mut s = String::from("x,occupation_product,degenerate_flag\n");
            for p in &points {
                writeln!(s, "{:?},{:?},{}", p.x, p.product, u8::from(p.degenerate)).unwrap();
            }
            s
        }
        Format::Json => pretty(&Value::Array(
            points
                .iter()
                .map(|p| json!({"x": p.x, "occupation_product": p.product, "degenerate_flag": p.degenerate}))
                .collect(),
        )),
    };
    emit(a.out.as_deref(), &text)
}

#[derive(Args, Debug)]
pub struct Fig3Args {
    /// Inverse time ratios, `a,b,c` or `start:stop:step`.
    #[arg(long, value_parser = grid_arg, default_value = "0,0.01,0.02,0.05,0.1,0.2,0.3,0.5,0.7,1")]
    pub grid: Grid,
    /// Exchange energy of the gated operation.
    #[arg(long, default_value_t = 1.0)]
    pub j: f64,
    /// Integration step; defaults to gate_time/2000.
    #[arg(long)]
    pub dt: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
}

pub fn fig3(a: &Fig3Args) -> Result<()> {
    check_out(a.out.as_deref())?;
    let mut template = DecoherenceParams::full_flip(a.j, 1.0);
    if let Some(dt) = a.dt {
        template.dt = dt;
    }
    let mode = ExecMode::default();
    let proc_ = purity_vs_time_ratio(&a.grid.0, &template, mode)?;
    let exc = two_level_reference(TwoLevelInitial::Excited, &a.grid.0, &template, mode)?;
    let sup = two_level_reference(TwoLevelInitial::Superposition, &a.grid.0, &template, mode)?;
    let text = match a.format {
        Format::Csv => {
            let mut s =
                String::from("rt_inverse,purity,excited_purity,superposition_purity,trace_error,min_eigenvalue\n");
            for ((p, e), q) in proc_.iter().zip(&exc).zip(&sup) {
                writeln!(
                    s,
                    "{:?},{:?},{:?},{:?},{:?},{:?}",
                    p.rt_inverse, p.purity, e.purity, q.purity, p.trace_error, p.min_eigenvalue
                )
                .unwrap();
            }
            s
        }
        Format::Json => pretty(&Value::Array(
            proc_
                .iter()
                .zip(&exc)
                .zip(&sup)
                .map(|((p, e), q)| {
                    json!({
                        "rt_inverse": p.rt_inverse,
                        "purity": p.purity,
                        "excited_purity": e.purity,
                        "superposition_purity": q.purity,
                        "trace_error": p.trace_error,
                        "min_eigenvalue": p.min_eigenvalue,
                    })
                })
                .collect(),
        )),
    };
    emit(a.out.as_deref(), &text)
}

fn duty_text(r: &DutyReport, format: Format, extra: Value) -> String {
    match format {
        Format::Csv => {
            let mut s = String::from("cell,active_time,duty_ratio,effective_coherence_time\n");
            for c in &r.cells {
                let tau = c.effective_coherence_time.map(|t| format!("{t:?}")).unwrap_or_default();
                writeln!(s, "{},{:?},{:?},{}", c.cell, c.active_time, c.duty_ratio, tau).unwrap();
            }
            s
        }
        Format::Json => {
            let mut v = json!({ "duty": r });
            if let (Value::Object(m), Value::Object(e)) = (&mut v, extra) {
                m.extend(e);
            }
            pretty(&v)
        }
    }
}

#[derive(Args, Debug)]
pub struct CompileArgs {
    /// Circuit text file.
    pub circuit: PathBuf,
    /// Topology JSON.
    #[arg(long)]
    pub topology: PathBuf,
    /// JSON array of coordinates, one per qubit; defaults to qubit q on site q.
    #[arg(long)]
    pub placement: Option<PathBuf>,
    /// Overrides the topology's spot radius.
    #[arg(long = "spot-radius")]
    pub spot_radius: Option<usize>,
    /// Ancilla damping time for the effective coherence column.
    #[arg(long = "tau-a")]
    pub tau_a: Option<f64>,
    /// Schedule JSON destination.
    #[arg(long)]
    pub out: PathBuf,
    /// Format of the duty report printed on stdout.
    #[arg(long, value_enum, default_value = "json")]
    pub format: Format,
}

pub fn compile(a: &CompileArgs) -> Result<()> {
    check_out(Some(&a.out))?;
    let (cfg, topo) = load_topology(&a.topology)?;
    let circuit = Circuit::parse(&read(&a.circuit)?)?;
    let placement = match &a.placement {
        Some(p) => placement_from_json(&read(p)?, &topo)?,
        None => {
            if circuit.num_qubits > topo.num_sites() {
                return Err(Error::Topology(format!(
                    "{} qubits do not fit on {} sites",
                    circuit.num_qubits,
                    topo.num_sites()
                ))
                .into());
            }
            (0..circuit.num_qubits).collect()
        }
    };
    let opts = CompileOptions { spot_radius: a.spot_radius.unwrap_or(cfg.spot_radius), ..Default::default() };
    let compiled = compile_circuit(&circuit, &topo, &placement, &opts)?;
    let s = &compiled.schedule;
    log::info!("{} events, {} routing swaps, makespan {}", s.events.len(), compiled.routing_swaps, s.makespan());
    let report = duty_ratio_report(s, placement.len(), a.tau_a)?;
    let mut json = s.to_json()?;
    json.push('\n');
    emit(Some(&a.out), &json)?;
    let extra = json!({ "events": s.events.len(), "routing_swaps": compiled.routing_swaps });
    emit(None, &duty_text(&report, a.format, extra))
}

#[derive(Args, Debug)]
pub struct DutyArgs {
    /// Schedule JSON.
    pub schedule: PathBuf,
    #[arg(long = "tau-a")]
    pub tau_a: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
}

pub fn duty(a: &DutyArgs) -> Result<()> {
    check_out(a.out.as_deref())?;
    let s = PulseSchedule::from_json(&read(&a.schedule)?)?;
    let report = duty_ratio_report(&s, s.placement.len(), a.tau_a)?;
    emit(a.out.as_deref(), &duty_text(&report, a.format, json!({})))
}

#[derive(Args, Debug)]
pub struct RouteArgs {
    #[arg(long)]
    pub topology: PathBuf,
    /// Start coordinate, e.g. `0,0`.
    #[arg(long, value_parser = coord_arg)]
    pub from: Option<Coord>,
    #[arg(long, value_parser = coord_arg)]
    pub to: Option<Coord>,
    /// Reuse radius for the frequency summary; defaults to the topology's.
    #[arg(long = "spot-radius")]
    pub spot_radius: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    pub format: Format,
}

pub fn route(a: &RouteArgs) -> Result<()> {
    check_out(a.out.as_deref())?;
    let (cfg, topo) = load_topology(&a.topology)?;
    let site = |Coord(c): &Coord| {
        topo.site(c).ok_or_else(|| CliError::Core(Error::Topology(format!("coordinate {c:?} is outside the lattice"))))
    };
    let text = match (&a.from, &a.to) {
        (Some(f), Some(t)) => {
            let chain = route_swap_chain(&topo, site(f)?, site(t)?)?;
            match a.format {
                Format::Json => pretty(&json!({
                    "distance": chain.distance(),
                    "swap_count": chain.swap_count(),
                    "path_coords": chain.path.iter().map(|&s| topo.coord(s)).collect::<Vec<_>>(),
                    "chain": chain,
                })),
                Format::Csv => {
                    let mut s = String::from("step,kind,cell_a,cell_b\n");
                    let steps = chain
                        .forward
                        .iter()
                        .map(|p| ("swap", p))
                        .chain(std::iter::once(("interaction", &chain.interaction)))
                        .chain(chain.restore.iter().map(|p| ("restore", p)));
                    for (k, (kind, (x, y))) in steps.enumerate() {
                        writeln!(s, "{k},{kind},{x},{y}").unwrap();
                    }
                    s
                }
            }
        }
        (None, None) => {
            let stats = chain_stats(&topo, ExecMode::default())?;
            let labels = assign_frequencies(&topo, a.spot_radius.unwrap_or(cfg.spot_radius))?.label_count();
            match a.format {
                Format::Json => pretty(&json!({
                    "sites": stats.sites,
                    "pairs": stats.pairs,
                    "diameter": topo.diameter(),
                    "mean_one_way": stats.mean_one_way,
                    "mean_steps": stats.mean_steps,
                    "frequency_labels": labels,
                })),
                Format::Csv => format!(
                    "sites,pairs,diameter,mean_one_way,mean_steps,frequency_labels\n{},{},{},{:?},{:?},{}\n",
                    stats.sites,
                    stats.pairs,
                    topo.diameter(),
                    stats.mean_one_way,
                    stats.mean_steps,
                    labels
                ),
            }
        }
        _ => return Err(CliError::Usage("--from and --to must be given together".into())),
    };
    emit(a.out.as_deref(), &text)
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    /// Schedule JSON produced by `compile`.
    pub schedule: PathBuf,
    #[arg(long)]
    pub topology: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Monte Carlo repetitions for the outcome histogram (0 = none).
    #[arg(long, default_value_t = 0)]
    pub trials: usize,
    /// Ancilla damping time; omit for a noiseless run.
    #[arg(long = "tau-a")]
    pub tau_a: Option<f64>,
    #[arg(long, default_value_t = 0.01)]
    pub dt: f64,
    /// Initial qubit states from {0, 1, +, -}, comma separated; a single
    /// value applies to every qubit.
    #[arg(long, default_value = "0")]
    pub initial: String,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    pub format: Format,
}

fn initial_states(spec: &str, n: usize) -> Result<Vec<Ket>> {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let one = |s: &str| -> Result<Ket> {
        let amps = match s.trim() {
            "0" => [1.0, 0.0],
            "1" => [0.0, 1.0],
            "+" => [h, h],
            "-" => [h, -h],
            other => return Err(CliError::Usage(format!("unknown initial state {other:?}"))),
        };
        Ok(Ket::new(amps.iter().map(|&a| C64::new(a, 0.0)).collect())?)
    };
    let parts: Vec<&str> = spec.split(',').collect();
    match parts.len() {
        1 => Ok(vec![one(parts[0])?; n]),
        k if k == n => parts.into_iter().map(one).collect(),
        k => Err(CliError::Usage(format!("--initial lists {k} states for {n} qubits"))),
    }
}

fn trial_rng(seed: u64, trial: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial as u64);
    rng
}

fn outcome_key(run: &ScheduleRun) -> String {
    if run.readouts.is_empty() {
        return "-".into();
    }
    run.readouts.iter().map(|r| char::from(b'0' + r.outcome)).collect()
}

pub fn simulate(a: &SimulateArgs) -> Result<()> {
    check_out(a.out.as_deref())?;
    let (_, topo) = load_topology(&a.topology)?;
    let schedule = PulseSchedule::from_json(&read(&a.schedule)?)?;
    let n = schedule.placement.len();
    let initial = initial_states(&a.initial, n)?;
    let noise = a.tau_a.map(|tau_a| NoiseModel { tau_a, dt: a.dt });
    let sim = ScheduleSimulator::new(&schedule, &topo, &initial, noise.as_ref())?;
    let run_one = |trial: usize| sim.run(&mut trial_rng(a.seed, trial));

    let summary = run_one(0)?;
    let trials: Vec<(String, f64)> = try_map_indexed(ExecMode::default(), a.trials, |i| {
        let run = if i == 0 { Ok(summary.clone()) } else { run_one(i) };
        run.map(|r| (outcome_key(&r), r.fidelity))
    })?;
    let mut histogram: BTreeMap<String, usize> = BTreeMap::new();
    for (k, _) in &trials {
        *histogram.entry(k.clone()).or_default() += 1;
    }
    let mean_fidelity = (!trials.is_empty()).then(|| trials.iter().map(|t| t.1).sum::<f64>() / trials.len() as f64);

    let rho = &summary.logical_state;
    let populations: BTreeMap<String, f64> =
        (0..rho.dim()).map(|i| (format!("{:0w$b}", i, w = n), rho.population(i))).collect();
    let text = match a.format {
        Format::Json => {
            let mut v = json!({
                "seed": a.seed,
                "noise": noise,
                "register": summary.register,
                "state": {
                    "purity": purity(rho),
                    "trace": rho.trace().re,
                    "min_eigenvalue": rho.min_eigenvalue(),
                    "populations": populations,
                },
                "readouts": summary.readouts,
                "fidelity": summary.fidelity,
                "trials": a.trials,
            });
            if a.trials > 0 {
                v["histogram"] = json!(histogram);
                v["mean_fidelity"] = json!(mean_fidelity);
            }
            pretty(&v)
        }
        Format::Csv => {
            let mut s = String::from("quantity,value\n");
            writeln!(s, "purity,{:?}", purity(rho)).unwrap();
            writeln!(s, "trace,{:?}", rho.trace().re).unwrap();
            writeln!(s, "fidelity,{:?}", summary.fidelity).unwrap();
            for (k, p) in &populations {
                writeln!(s, "population_{k},{p:?}").unwrap();
            }
            for (k, c) in &histogram {
                writeln!(s, "count_{k},{c}").unwrap();
            }
            if let Some(f) = mean_fidelity {
                writeln!(s, "mean_fidelity,{f:?}").unwrap();
            }
            s
        }
    };
    emit(a.out.as_deref(), &text)
}
