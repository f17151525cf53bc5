use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use nlpi_consensus::config::{load_graph, ScenarioConfig};
use nlpi_consensus::{
    has_jointly_strongly_connected_basis, DiGraph, DiagnosticsReport, Error, Model, Scenario,
};
use rayon::prelude::*;

pub const EXIT_OK: u8 = 0;
pub const EXIT_VALIDATION: u8 = 1;
pub const EXIT_DIVERGED: u8 = 2;
pub const EXIT_USAGE: u8 = 64;

pub const OUTPUT_ENV: &str = "NLPI_OUTPUT_DIR";

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Diverged { .. } => EXIT_DIVERGED,
        _ => EXIT_VALIDATION,
    }
}

fn fail(e: &Error) -> u8 {
    eprintln!("error: {e}");
    exit_code(e)
}

fn set(members: &[usize]) -> String {
    let inner: Vec<String> = members.iter().map(|m| (m + 1).to_string()).collect();
    format!("{{{}}}", inner.join(","))
}

fn floats(v: &[f64]) -> String {
    let inner: Vec<String> = v.iter().map(|x| x.to_string()).collect();
    format!("[{}]", inner.join(", "))
}

fn describe_graph(path: &Path, g: &DiGraph) -> Result<String, Error> {
    let mut s = String::new();
    let sccs: Vec<String> = g
        .strongly_connected_components()
        .iter()
        .map(|c| set(c))
        .collect();
    let basis = g.basis_bicomponents();
    let l = g.laplacian();
    let _ = writeln!(s, "graph = {}", path.display());
    let _ = writeln!(s, "n = {}", g.n());
    let _ = writeln!(s, "sccs = {}", sccs.join(" "));
    let _ = writeln!(
        s,
        "basis_bicomponents = {}",
        basis
            .iter()
            .map(|b| set(b.members()))
            .collect::<Vec<_>>()
            .join(" ")
    );
    let _ = writeln!(s, "rank = {}", l.rank());
    let _ = writeln!(s, "d = {}", basis.len());
    for b in &basis {
        let omega = l.reduced(b.members())?.left_null_vector()?;
        let _ = writeln!(
            s,
            "left_eigenvector.{} = {}",
            set(b.members()),
            floats(omega.omega())
        );
    }
    Ok(s)
}

pub fn analyze(files: &[PathBuf]) -> u8 {
    let mut graphs = Vec::new();
    for path in files {
        match load_graph(path).and_then(|g| describe_graph(path, &g).map(|s| (g, s))) {
            Ok((g, s)) => {
                println!("{s}");
                graphs.push(g);
            }
            Err(e) => return fail(&e),
        }
    }
    match has_jointly_strongly_connected_basis(&graphs) {
        Ok(v) => {
            println!("graphs = {}", graphs.len());
            println!("joint_basis = {v}");
            EXIT_OK
        }
        Err(e) => fail(&e),
    }
}

fn config_dir(path: &Path) -> PathBuf {
    path.parent().map(Path::to_path_buf).unwrap_or_default()
}

fn load_config(path: &Path) -> Result<ScenarioConfig, Error> {
    ScenarioConfig::from_path(path)
}

/// Schedule checks only: the scenario is not assembled, so a schedule whose
/// runs are shorter than the configured step is still reported.
pub fn validate(path: &Path) -> u8 {
    let checked = load_config(path).and_then(|cfg| {
        let model = cfg.model()?;
        cfg.controller_params(model)?;
        let schedule = cfg.build_schedule(cfg.load_graphs(&config_dir(path))?)?;
        Ok((cfg, schedule))
    });
    let (cfg, schedule) = match checked {
        Ok(v) => v,
        Err(e) => return fail(&e),
    };
    let report = schedule.validate();
    for w in report.step_warnings(cfg.sim.step) {
        eprintln!("warning: {w}");
    }
    println!("{report}");
    if report.passed() {
        EXIT_OK
    } else {
        EXIT_VALIDATION
    }
}

#[derive(Debug, Clone)]
pub struct SimulateOptions {
    pub model: Option<Model>,
    pub horizon: Option<f64>,
    pub step: Option<f64>,
    pub out: Option<PathBuf>,
    pub default_out: Option<PathBuf>,
    pub jobs: usize,
}

/// Parse `path` and apply the command-line overrides before building the scenario.
fn resolve(path: &Path, opts: &SimulateOptions) -> Result<(ScenarioConfig, Scenario), Error> {
    let mut cfg = load_config(path)?;
    if let Some(m) = opts.model {
        cfg.model = m.as_str().to_string();
    }
    if let Some(h) = opts.horizon {
        cfg.sim.horizon = h;
    }
    if let Some(s) = opts.step {
        cfg.sim.step = s;
    }
    let sc = cfg.to_scenario(&config_dir(path))?;
    Ok((cfg, sc))
}

/// `--out` wins, then the config's own directory, then the environment
/// default, then `out/`. Shared roots get one subdirectory per config.
fn output_dir(path: &Path, cfg: &ScenarioConfig, opts: &SimulateOptions, many: bool) -> PathBuf {
    let stem = path
        .file_stem()
        .map(PathBuf::from)
        .unwrap_or_else(|| "scenario".into());
    match (&opts.out, &cfg.output) {
        (Some(out), _) if many => out.join(stem),
        (Some(out), _) => out.clone(),
        (None, Some(o)) => PathBuf::from(&o.directory),
        (None, None) => opts
            .default_out
            .clone()
            .unwrap_or_else(|| "out".into())
            .join(stem),
    }
}

pub fn dump_configs(paths: &[PathBuf], opts: &SimulateOptions) -> u8 {
    let mut code = EXIT_OK;
    for path in paths {
        match resolve(path, opts) {
            Ok((cfg, sc)) => {
                let out = output_dir(path, &cfg, opts, paths.len() > 1);
                print!(
                    "{}",
                    ScenarioConfig::from_scenario(&sc, Some(out.display().to_string())).to_toml()
                );
            }
            Err(e) => code = code.max(fail(&e)),
        }
    }
    code
}

fn write_file(path: &Path, contents: &[u8]) -> Result<(), Error> {
    fs::write(path, contents).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}

fn run_one(path: &Path, opts: &SimulateOptions, many: bool) -> Result<PathBuf, Error> {
    let (cfg, sc) = resolve(path, opts)?;
    let validation = sc.schedule().validate();
    if !validation.passed() {
        log::warn!(
            "{}: schedule does not satisfy the switching assumptions",
            path.display()
        );
    }
    for w in validation.step_warnings(sc.settings().step) {
        log::warn!("{}: {w}", path.display());
    }
    let tr = nlpi_consensus::simulate(&sc)?;
    let diag = DiagnosticsReport::new(&tr, sc.gains())?;

    let dir = output_dir(path, &cfg, opts, many);
    fs::create_dir_all(&dir).map_err(|source| Error::Io {
        path: dir.display().to_string(),
        source,
    })?;
    let mut csv = Vec::new();
    tr.write_csv(&mut csv).map_err(|source| Error::Io {
        path: "trajectory.csv".into(),
        source,
    })?;
    write_file(&dir.join("trajectory.csv"), &csv)?;
    write_file(&dir.join("diagnostics.csv"), diag.series_csv().as_bytes())?;

    let mut report = String::new();
    let _ = writeln!(report, "config = {}", path.display());
    let _ = writeln!(report, "model = {}", sc.model());
    let _ = writeln!(report, "step = {}", sc.settings().step);
    for line in validation.to_string().lines() {
        let _ = writeln!(report, "schedule.{line}");
    }
    let _ = writeln!(report, "{diag}");
    let _ = writeln!(report, "status = completed");
    write_file(&dir.join("report.txt"), report.as_bytes())?;
    Ok(dir)
}

pub fn simulate(paths: &[PathBuf], opts: &SimulateOptions) -> u8 {
    let many = paths.len() > 1;
    let work = |p: &PathBuf| (p.clone(), run_one(p, opts, many));
    let results: Vec<_> = if opts.jobs > 1 {
        match rayon::ThreadPoolBuilder::new()
            .num_threads(opts.jobs)
            .build()
        {
            Ok(pool) => pool.install(|| paths.par_iter().map(work).collect()),
            Err(e) => {
                eprintln!("error: cannot start worker pool: {e}");
                return EXIT_USAGE;
            }
        }
    } else {
        paths.iter().map(work).collect()
    };
    let mut code = EXIT_OK;
    for (path, r) in results {
        match r {
            Ok(dir) => println!("{}: wrote {}", path.display(), dir.display()),
            Err(e) => {
                eprintln!("error: {}: {e}", path.display());
                code = code.max(exit_code(&e));
            }
        }
    }
    code
}
