mod config;
mod table;
mod tasks;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Map, Value};

use config::{CliError, Format, RunConfig, Task};
use edgelink::lattice::SystemSpec;
use table::{Cell, Table};
use tasks::{ordered_map, run_task, Output};

const DEFAULT_TOLERANCE: f64 = 1e-10;

#[derive(Parser, Debug)]
#[command(name = "edgelink", version, about = "Edge-state qubit coupling datasets")]
struct Cli {
    /// JSON run configuration; flags override its fields.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output file; stdout when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Worker threads for sweeps.
    #[arg(long, global = true, env = "EDGELINK_WORKERS")]
    workers: Option<usize>,
    /// Energy resolution demanded of reported roots.
    #[arg(long, global = true)]
    tolerance: Option<f64>,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Args, Debug, Default)]
struct SystemFlags {
    /// Side of a square lattice.
    #[arg(long)]
    l: Option<usize>,
    #[arg(long)]
    lx: Option<usize>,
    #[arg(long)]
    ly: Option<usize>,
    #[arg(long)]
    j: Option<f64>,
    /// Bare energy of both qubits.
    #[arg(long, allow_hyphen_values = true)]
    eps: Option<f64>,
    /// Coupling of both qubits.
    #[arg(long)]
    g: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    eps1: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    eps2: Option<f64>,
    #[arg(long)]
    g1: Option<f64>,
    #[arg(long)]
    g2: Option<f64>,
    /// Qubit separation along the first row.
    #[arg(long)]
    d: Option<usize>,
    #[arg(long)]
    blue_first_row: bool,
    /// Task parameter as `key=value`, value parsed as JSON.
    #[arg(long = "param", value_name = "KEY=VALUE", allow_hyphen_values = true)]
    params: Vec<String>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Eigenvalues, bands, parities and qubit weights.
    Spectrum(SystemFlags),
    /// Infinite-lattice bulk bands and edge dispersion.
    Bands(SystemFlags),
    /// Edge-window constants around a working energy.
    Calibrate(SystemFlags),
    /// Qubit and lattice populations over time.
    Dynamics {
        #[command(flatten)]
        system: SystemFlags,
        #[arg(long)]
        tmax: Option<f64>,
        #[arg(long)]
        samples: Option<usize>,
    },
    /// Exact dressed levels of the symmetric corner system.
    BoundaryRoots(SystemFlags),
    /// Splitting across an edge window for several couplings.
    OmegaSweep(SystemFlags),
    /// Transfer fidelity across an edge window.
    FidelitySweep(SystemFlags),
    /// Splitting and fidelity against qubit separation on one edge.
    DistanceScan(SystemFlags),
    /// Asymmetric-qubit levels, splitting and transfer.
    Asym(SystemFlags),
    /// Hopping table with Peierls phases.
    Bonds(SystemFlags),
    /// Run the task named in --config.
    Run,
}

fn set(map: &mut Map<String, Value>, key: &str, v: Option<impl Into<Value>>) {
    if let Some(v) = v {
        map.insert(key.to_string(), v.into());
    }
}

fn object<'a>(doc: &'a mut Value, key: &str) -> Result<&'a mut Map<String, Value>, CliError> {
    let entry = doc
        .as_object_mut()
        .ok_or_else(|| CliError::validation("config", "configuration must be a JSON object"))?
        .entry(key)
        .or_insert_with(|| json!({}));
    entry
        .as_object_mut()
        .ok_or_else(|| CliError::validation("config", format!("`{key}` must be an object")))
}

fn merge_system(doc: &mut Value, f: &SystemFlags) -> Result<(), CliError> {
    let sys = object(doc, "system")?;
    if let Some(l) = f.l {
        sys.insert("lx".into(), l.into());
        sys.insert("ly".into(), l.into());
    }
    set(sys, "lx", f.lx);
    set(sys, "ly", f.ly);
    set(sys, "j", f.j);
    if let Some(e) = f.eps {
        sys.insert("eps1".into(), e.into());
        sys.insert("eps2".into(), e.into());
    }
    if let Some(g) = f.g {
        sys.insert("g1".into(), g.into());
        sys.insert("g2".into(), g.into());
    }
    set(sys, "eps1", f.eps1);
    set(sys, "eps2", f.eps2);
    set(sys, "g1", f.g1);
    set(sys, "g2", f.g2);
    if let Some(d) = f.d {
        sys.remove("site1");
        sys.remove("site2");
        sys.insert("d".into(), d.into());
    }
    if f.blue_first_row {
        sys.insert("blue_first_row".into(), true.into());
    }
    let params = object(doc, "task_params")?;
    for p in &f.params {
        let (k, v) = p
            .split_once('=')
            .ok_or_else(|| CliError::validation("param", format!("expected key=value, got `{p}`")))?;
        let v = serde_json::from_str(v).unwrap_or_else(|_| Value::String(v.to_string()));
        params.insert(k.trim().to_string(), v);
    }
    Ok(())
}

/// Raw configuration document after applying command-line overrides.
fn build_document(cli: &Cli) -> Result<Value, CliError> {
    let mut doc = match &cli.config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| CliError::validation("config", format!("{}: {e}", path.display())))?;
            serde_json::from_str(&text)
                .map_err(|e| CliError::validation("config", format!("{}: {e}", path.display())))?
        }
        None => json!({}),
    };
    let (task, flags) = match &cli.command {
        Some(Command::Spectrum(f)) => (Some(Task::Spectrum), Some(f)),
        Some(Command::Bands(f)) => (Some(Task::Bands), Some(f)),
        Some(Command::Calibrate(f)) => (Some(Task::Calibrate), Some(f)),
        Some(Command::Dynamics { system, .. }) => (Some(Task::Dynamics), Some(system)),
        Some(Command::BoundaryRoots(f)) => (Some(Task::BoundaryRoots), Some(f)),
        Some(Command::OmegaSweep(f)) => (Some(Task::OmegaSweep), Some(f)),
        Some(Command::FidelitySweep(f)) => (Some(Task::FidelitySweep), Some(f)),
        Some(Command::DistanceScan(f)) => (Some(Task::DistanceScan), Some(f)),
        Some(Command::Asym(f)) => (Some(Task::Asym), Some(f)),
        Some(Command::Bonds(f)) => (Some(Task::Bonds), Some(f)),
        Some(Command::Run) | None => (None, None),
    };
    if cli.config.is_none() && task.is_none() {
        return Err(CliError::validation("usage", "give a subcommand or --config"));
    }
    if let Some(task) = task {
        let old = doc.get("task").and_then(Value::as_str).and_then(Task::parse);
        if old.is_some_and(|t| t != task) {
            // Parameters of another task would be rejected as unknown.
            doc.as_object_mut().map(|m| m.remove("task_params"));
        }
        doc["task"] = serde_json::to_value(task).expect("task serializes");
    }
    if let Some(f) = flags {
        merge_system(&mut doc, f)?;
    }
    if let Some(Command::Dynamics { tmax, samples, .. }) = &cli.command {
        let p = object(&mut doc, "task_params")?;
        set(p, "tmax", *tmax);
        set(p, "samples", *samples);
    }
    let out = object(&mut doc, "output")?;
    set(out, "path", cli.out.as_ref().map(|p| p.display().to_string()));
    set(
        out,
        "format",
        cli.format.map(|f| serde_json::to_value(f).expect("format serializes")),
    );
    if let Some(t) = cli.tolerance {
        doc["tolerance"] = t.into();
    }
    Ok(doc)
}

fn format_for(cfg: &RunConfig) -> Format {
    cfg.output.format.unwrap_or_else(|| match &cfg.output.path {
        Some(p) if p.extension().is_some_and(|e| e == "json") => Format::Json,
        _ => Format::Csv,
    })
}

/// Dotted-path scalars of a JSON value; arrays are indexed.
fn flatten(prefix: &str, v: &Value, out: &mut Vec<(String, Cell)>) {
    let key = |k: &str| {
        if prefix.is_empty() {
            k.to_string()
        } else {
            format!("{prefix}.{k}")
        }
    };
    match v {
        Value::Object(m) => m.iter().for_each(|(k, v)| flatten(&key(k), v, out)),
        Value::Array(a) => a
            .iter()
            .enumerate()
            .for_each(|(i, v)| flatten(&key(&i.to_string()), v, out)),
        Value::Number(n) if n.is_i64() => out.push((prefix.into(), Cell::Int(n.as_i64().unwrap()))),
        Value::Number(n) => out.push((prefix.into(), Cell::Num(n.as_f64().unwrap_or(f64::NAN)))),
        Value::Bool(b) => out.push((prefix.into(), Cell::Int(*b as i64))),
        Value::String(s) => out.push((prefix.into(), Cell::Text(s.clone()))),
        Value::Null => out.push((prefix.into(), Cell::Empty)),
    }
}

fn json_as_table(v: &Value) -> Table {
    let mut cells = Vec::new();
    flatten("", v, &mut cells);
    let mut t = Table::new(&["key", "value"]);
    for (k, c) in cells {
        t.push(vec![Cell::Text(k), c]);
    }
    t
}

fn render(out: &Output, format: Format) -> String {
    match (out, format) {
        (Output::Table(t) | Output::Annotated(t, _), Format::Csv) => t.to_csv(),
        (Output::Json(v), Format::Csv) => json_as_table(v).to_csv(),
        (Output::Table(t), Format::Json) => pretty(&t.to_json()),
        (Output::Annotated(t, a), Format::Json) => {
            let mut v = t.to_json();
            v["analysis"] = a.clone();
            pretty(&v)
        }
        (Output::Json(v), Format::Json) => pretty(v),
    }
}

fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("JSON serializes");
    s.push('\n');
    s
}

#[derive(Clone, Debug)]
struct GridPoint {
    l: Option<usize>,
    d: Option<usize>,
    g: Option<f64>,
    eps: Option<f64>,
}

fn grid_points(cfg: &RunConfig) -> (Vec<&'static str>, Vec<GridPoint>) {
    let gr = &cfg.grid;
    let mut axes = Vec::new();
    let opt = |name: &'static str, present: bool, axes: &mut Vec<&'static str>| {
        if present {
            axes.push(name);
        }
    };
    opt("L", gr.l.is_some(), &mut axes);
    opt("d", gr.d.is_some(), &mut axes);
    opt("g", gr.g.is_some(), &mut axes);
    opt("eps", gr.eps.is_some(), &mut axes);
    fn axis<T: Copy>(v: &Option<Vec<T>>) -> Vec<Option<T>> {
        v.as_ref().map_or(vec![None], |v| v.iter().copied().map(Some).collect())
    }
    let mut points = Vec::new();
    for l in axis(&gr.l) {
        for d in axis(&gr.d) {
            for g in axis(&gr.g) {
                for eps in axis(&gr.eps) {
                    points.push(GridPoint { l, d, g, eps });
                }
            }
        }
    }
    (axes, points)
}

fn point_spec(raw_system: &Value, p: &GridPoint) -> Result<SystemSpec, CliError> {
    let mut sys = raw_system.as_object().cloned().unwrap_or_default();
    if let Some(l) = p.l {
        sys.insert("lx".into(), l.into());
        sys.insert("ly".into(), l.into());
        sys.remove("site1");
        sys.remove("site2");
    }
    if let Some(d) = p.d {
        sys.remove("site1");
        sys.remove("site2");
        sys.insert("d".into(), d.into());
    }
    if let Some(g) = p.g {
        sys.insert("g1".into(), g.into());
        sys.insert("g2".into(), g.into());
    }
    if let Some(e) = p.eps {
        sys.insert("eps1".into(), e.into());
        sys.insert("eps2".into(), e.into());
    }
    serde_json::from_value(Value::Object(sys)).map_err(|e| CliError::validation("spec", e.to_string()))
}

fn point_cells(axes: &[&str], p: &GridPoint) -> Vec<Cell> {
    axes.iter()
        .map(|a| match *a {
            "L" => p.l.into(),
            "d" => p.d.into(),
            "g" => p.g.into(),
            _ => p.eps.into(),
        })
        .collect()
}

/// Task output at every grid point, merged in grid order with axes first.
fn run_grid(cfg: &RunConfig, raw_system: &Value, tol: f64) -> Result<Output, CliError> {
    let (axes, points) = grid_points(cfg);
    let results = ordered_map(&points, |p| {
        point_spec(raw_system, p).and_then(|spec| run_task(cfg.task, &spec, &cfg.task_params, tol))
    });
    // Validation failures are the same at every point; report them once.
    if let Some(Err(e)) = results
        .iter()
        .find(|r| matches!(r, Err(e) if e.code == 2 && e.kind == "task_params"))
    {
        return Err(CliError::validation(&e.kind, e.message.clone()));
    }
    let mut columns: Vec<String> = axes.iter().map(|s| s.to_string()).collect();
    columns.push("error".into());
    let mut task_columns: Vec<String> = Vec::new();
    let tables: Vec<Result<Table, String>> = results
        .into_iter()
        .map(|r| match r {
            Ok(Output::Table(t) | Output::Annotated(t, _)) => Ok(t),
            Ok(Output::Json(v)) => {
                let mut cells = Vec::new();
                flatten("", &v, &mut cells);
                let mut t = Table::new(&cells.iter().map(|(k, _)| k.as_str()).collect::<Vec<_>>());
                t.push(cells.into_iter().map(|(_, c)| c).collect());
                Ok(t)
            }
            Err(e) => Err(e.to_string()),
        })
        .collect();
    for t in tables.iter().flatten() {
        for c in &t.columns {
            if !task_columns.contains(c) {
                task_columns.push(c.clone());
            }
        }
    }
    // A task's own error column folds into the grid's.
    task_columns.retain(|c| c != "error");
    columns.extend(task_columns.iter().cloned());
    let mut out = Table {
        columns,
        rows: Vec::new(),
    };
    for (p, t) in points.iter().zip(tables) {
        let lead = point_cells(&axes, p);
        match t {
            Err(msg) => {
                let mut row = lead;
                row.push(Cell::Text(msg));
                row.resize(out.columns.len(), Cell::Empty);
                out.rows.push(row);
            }
            Ok(t) => {
                let err_idx = t.columns.iter().position(|c| c == "error");
                for r in t.rows {
                    let mut row = lead.clone();
                    row.push(err_idx.map_or(Cell::Empty, |i| r[i].clone()));
                    for c in &task_columns {
                        row.push(
                            t.columns
                                .iter()
                                .position(|x| x == c)
                                .map_or(Cell::Empty, |i| r[i].clone()),
                        );
                    }
                    out.rows.push(row);
                }
            }
        }
    }
    Ok(Output::Table(out))
}

fn write_output(path: Option<&Path>, text: &str) -> Result<(), CliError> {
    let io = |e: std::io::Error| CliError {
        code: 3,
        kind: "io".into(),
        message: e.to_string(),
    };
    match path {
        Some(p) => {
            // Write beside the target then rename, so a failed run leaves nothing behind.
            let tmp = p.with_extension("partial");
            fs::write(&tmp, text).map_err(io)?;
            fs::rename(&tmp, p).map_err(io)
        }
        None => std::io::stdout().write_all(text.as_bytes()).map_err(io),
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let doc = build_document(&cli)?;
    let cfg: RunConfig =
        serde_json::from_value(doc.clone()).map_err(|e| CliError::validation("config", e.to_string()))?;
    let tol = cfg.tolerance.unwrap_or(DEFAULT_TOLERANCE);
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(CliError::validation(
            "tolerance",
            format!("must be positive, got {tol}"),
        ));
    }
    let workers = cli.workers.unwrap_or(0);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| CliError::validation("workers", e.to_string()))?;
    log::info!("running {:?} on {} worker(s)", cfg.task, pool.current_num_threads());
    let output = pool.install(|| {
        if cfg.grid.is_empty() {
            run_task(cfg.task, &cfg.system, &cfg.task_params, tol)
        } else {
            run_grid(&cfg, &doc["system"], tol)
        }
    })?;
    write_output(cfg.output.path.as_deref(), &render(&output, format_for(&cfg)))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.code as u8)
        }
    }
}
