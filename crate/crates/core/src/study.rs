//! Refinement studies and interface-position sweeps.
//!
//! A [`RunConfig`] names a problem, conductivities, penalties and mesh
//! sizes. [`run_study`] solves on each mesh and tabulates errors with
//! observed orders; [`run_sweep`] moves the interface of the vertical-line
//! problem through a list of offsets at one mesh size.

use std::io::Write;
use std::path::{Path, PathBuf};

use crate::assembly::{assemble_system, AssemblyParams, RhsOptions, SaddleSystem};
use crate::fem::{build_dofmap, DofMap};
use crate::geometry::CutOptions;
use crate::mesh::{build_perturbed, build_structured, classify, import_mesh, MeshClassification, Rect, Triangulation};
use crate::parallel::{configured_threads, map_indexed};
use crate::postprocess::{compute_errors, convergence_orders, ConvergenceTable, ErrorOptions, ErrorReport, StudyRow};
use crate::problems::{by_name, ProblemSpec, PROBLEM_NAMES};
use crate::solver::{solve_direct, SolveReport};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub problem: Option<String>,
    pub alpha1: f64,
    pub alpha2: f64,
    pub mesh_sizes: Vec<usize>,
    pub gamma: f64,
    pub gamma1: f64,
    pub gamma2: f64,
    /// Interface offset of the vertical-line problem.
    pub xi: Option<f64>,
    pub xi_list: Vec<f64>,
    /// Replaces the generated meshes with one imported mesh.
    pub mesh_file: Option<PathBuf>,
    pub polyline_depth: usize,
    pub volume_degree: usize,
    pub error_degree: usize,
    pub output: Option<PathBuf>,
    /// Seed of the jittered meshes used by `example5`.
    pub seed: u64,
    /// Prefix for Matrix Market dumps of each assembled system.
    pub dump_matrix: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            problem: None,
            alpha1: 1.0,
            alpha2: 10.0,
            mesh_sizes: vec![8, 16, 32],
            gamma: 1.0,
            gamma1: 1.0,
            gamma2: 1.0,
            xi: None,
            xi_list: Vec::new(),
            mesh_file: None,
            polyline_depth: CutOptions::default().polyline_depth,
            volume_degree: CutOptions::default().volume_degree,
            error_degree: ErrorOptions::default().volume_degree,
            output: None,
            seed: 1,
            dump_matrix: None,
        }
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value.trim().parse().map_err(|_| Error::Config(format!("invalid value `{value}` for `{key}`")))
}

fn parse_list<T: std::str::FromStr>(key: &str, value: &str) -> Result<Vec<T>> {
    value.split(',').filter(|s| !s.trim().is_empty()).map(|s| parse_num(key, s)).collect()
}

impl RunConfig {
    /// Sets one option by name; `-` and `_` are interchangeable in keys.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        match key.trim().replace('-', "_").as_str() {
            "problem" => self.problem = Some(v.to_string()),
            "alpha1" => self.alpha1 = parse_num(key, v)?,
            "alpha2" => self.alpha2 = parse_num(key, v)?,
            "mesh_sizes" => self.mesh_sizes = parse_list(key, v)?,
            "gamma" => self.gamma = parse_num(key, v)?,
            "gamma1" => self.gamma1 = parse_num(key, v)?,
            "gamma2" => self.gamma2 = parse_num(key, v)?,
            "xi" => self.xi = Some(parse_num(key, v)?),
            "xi_list" => self.xi_list = parse_list(key, v)?,
            "mesh_file" => self.mesh_file = Some(PathBuf::from(v)),
            "depth" | "polyline_depth" => self.polyline_depth = parse_num(key, v)?,
            "volume_degree" => self.volume_degree = parse_num(key, v)?,
            "error_degree" => self.error_degree = parse_num(key, v)?,
            "output" => self.output = Some(PathBuf::from(v)),
            "seed" => self.seed = parse_num(key, v)?,
            "dump_matrix" => self.dump_matrix = Some(PathBuf::from(v)),
            other => return Err(Error::Config(format!("unknown option `{other}`"))),
        }
        Ok(())
    }

    pub fn problem_name(&self) -> Result<&str> {
        self.problem.as_deref().ok_or_else(|| Error::Config("no problem selected".into()))
    }

    pub fn build_problem(&self) -> Result<ProblemSpec> {
        self.build_problem_at(self.xi)
    }

    fn build_problem_at(&self, xi: Option<f64>) -> Result<ProblemSpec> {
        by_name(self.problem_name()?, self.alpha1, self.alpha2, xi)
    }

    pub fn params(&self) -> AssemblyParams {
        let mut p = AssemblyParams::new(self.alpha1, self.alpha2).with_gammas(self.gamma, self.gamma1, self.gamma2);
        p.volume_degree = self.volume_degree;
        p
    }

    pub fn cut_options(&self) -> CutOptions {
        CutOptions { polyline_depth: self.polyline_depth, volume_degree: self.volume_degree, ..CutOptions::default() }
    }

    pub fn error_options(&self) -> ErrorOptions {
        ErrorOptions { volume_degree: self.error_degree, ..ErrorOptions::default() }
    }

    /// Checks everything that can be checked before any mesh is built.
    pub fn validate(&self) -> Result<()> {
        let name = self.problem_name()?;
        if !PROBLEM_NAMES.contains(&name) {
            return Err(Error::Config(format!("unknown problem `{name}`; expected one of {PROBLEM_NAMES:?}")));
        }
        self.params().validate()?;
        if self.mesh_file.is_none() && self.mesh_sizes.is_empty() {
            return Err(Error::Config("no mesh sizes given".into()));
        }
        if let Some(&n) = self.mesh_sizes.iter().find(|&&n| n < 2) {
            return Err(Error::Config(format!("mesh size {n} is below 2")));
        }
        if self.mesh_sizes.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config(format!("mesh sizes must be ascending, got {:?}", self.mesh_sizes)));
        }
        if !(1..=12).contains(&self.polyline_depth) {
            return Err(Error::Config(format!("polyline depth {} outside 1..=12", self.polyline_depth)));
        }
        if !(1..=10).contains(&self.volume_degree) || !(1..=16).contains(&self.error_degree) {
            return Err(Error::Config("quadrature degrees out of range".into()));
        }
        Ok(())
    }
}

/// Parses `key = value` lines; `#` starts a comment.
pub fn parse_config(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("line {}: expected `key = value`", i + 1)))?;
        let (k, v) = (k.trim(), v.trim());
        if k.is_empty() || v.is_empty() {
            return Err(Error::Config(format!("line {}: empty key or value", i + 1)));
        }
        out.push((k.to_string(), v.to_string()));
    }
    Ok(out)
}

/// Applies a parsed config file over the defaults.
pub fn config_from_text(text: &str) -> Result<RunConfig> {
    let mut cfg = RunConfig::default();
    for (k, v) in parse_config(text)? {
        cfg.set(&k, &v)?;
    }
    Ok(cfg)
}

/// Everything produced by one solve.
#[derive(Clone, Debug)]
pub struct MeshRun {
    pub tri: Triangulation,
    pub class: MeshClassification,
    pub dofs: DofMap,
    pub system: SaddleSystem,
    pub solve: SolveReport,
    pub errors: ErrorReport,
}

impl MeshRun {
    pub fn row(&self, n: usize) -> StudyRow {
        StudyRow {
            n,
            h: self.tri.h,
            dofs: self.dofs.total_dofs(),
            e_p: self.errors.e_p,
            e_up: self.errors.e_up,
            residual: self.solve.relative_residual,
        }
    }
}

/// Classifies, assembles, solves and measures errors on a given mesh.
pub fn solve_on_mesh(
    tri: Triangulation,
    problem: &ProblemSpec,
    params: &AssemblyParams,
    cut: &CutOptions,
    rhs: &RhsOptions,
    errors: &ErrorOptions,
) -> Result<MeshRun> {
    let class = classify(&tri, &problem.level_set, cut)?;
    let dofs = build_dofmap(&tri, &class);
    let system = assemble_system(&tri, &class, &dofs, params, problem, rhs)?;
    let solve = solve_direct(&system)?;
    let errors = compute_errors(&tri, &class, &dofs, problem, &solve.solution, errors)?;
    Ok(MeshRun { tri, class, dofs, system, solve, errors })
}

/// Structured mesh of the reference square, jittered for `example5`.
pub fn study_mesh(problem: &str, n: usize, seed: u64) -> Result<Triangulation> {
    if problem == "example5" {
        build_perturbed(n, Rect::REFERENCE, seed)
    } else {
        build_structured(n, Rect::REFERENCE)
    }
}

fn dump_matrix(prefix: &Path, n: usize, system: &SaddleSystem) -> Result<()> {
    let path = PathBuf::from(format!("{}_N{n}.mtx", prefix.display()));
    let mut f = std::io::BufWriter::new(std::fs::File::create(&path)?);
    system.matrix.write_matrix_market(&mut f)?;
    f.flush()?;
    log::info!("wrote {}", path.display());
    Ok(())
}

/// Nominal subdivision count of an imported mesh.
fn nominal_n(tri: &Triangulation) -> usize {
    ((tri.num_cells() as f64 / 2.0).sqrt().round() as usize).max(1)
}

fn run_config_at(cfg: &RunConfig, problem: &ProblemSpec, n: Option<usize>) -> Result<(usize, MeshRun)> {
    let (n, tri) = match (&cfg.mesh_file, n) {
        (Some(path), _) => {
            let tri = import_mesh(path)?;
            (nominal_n(&tri), tri)
        }
        (None, Some(n)) => (n, study_mesh(cfg.problem_name()?, n, cfg.seed)?),
        (None, None) => return Err(Error::Config("no mesh sizes given".into())),
    };
    let run = solve_on_mesh(tri, problem, &cfg.params(), &cfg.cut_options(), &RhsOptions::default(), &cfg.error_options())?;
    if let Some(prefix) = &cfg.dump_matrix {
        dump_matrix(prefix, n, &run.system)?;
    }
    log::info!(
        "{} N={n} dofs={} e_p={:.4e} e_up={:.4e} residual={:.2e}",
        problem.name,
        run.dofs.total_dofs(),
        run.errors.e_p,
        run.errors.e_up,
        run.solve.relative_residual
    );
    Ok((n, run))
}

/// Solves on every mesh size and tabulates errors with observed orders.
pub fn run_study(cfg: &RunConfig) -> Result<ConvergenceTable> {
    cfg.validate()?;
    let problem = cfg.build_problem()?;
    let sizes: Vec<Option<usize>> =
        if cfg.mesh_file.is_some() { vec![None] } else { cfg.mesh_sizes.iter().map(|&n| Some(n)).collect() };
    // Meshes run concurrently; rows are kept in mesh order.
    let runs = map_indexed(sizes.len(), configured_threads(), |i| {
        run_config_at(cfg, &problem, sizes[i]).map(|(n, run)| run.row(n))
    });
    let rows: Vec<StudyRow> = runs.into_iter().collect::<Result<_>>()?;
    Ok(convergence_orders(&rows))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SweepRow {
    pub xi: f64,
    pub e_up: f64,
    pub e_p: f64,
    pub residual: f64,
}

/// Solves the vertical-line problem for every offset in `xi_list` on the
/// first mesh size.
pub fn run_sweep(cfg: &RunConfig) -> Result<Vec<SweepRow>> {
    cfg.validate()?;
    if cfg.problem_name()? != "example3" {
        return Err(Error::Config("interface sweeps need problem example3".into()));
    }
    if cfg.xi_list.is_empty() {
        return Err(Error::Config("empty xi list".into()));
    }
    let n = cfg.mesh_sizes.first().copied();
    let runs = map_indexed(cfg.xi_list.len(), configured_threads(), |i| {
        let xi = cfg.xi_list[i];
        let problem = cfg.build_problem_at(Some(xi))?;
        let (_, run) = run_config_at(cfg, &problem, n)?;
        Ok(SweepRow { xi, e_up: run.errors.e_up, e_p: run.errors.e_p, residual: run.solve.relative_residual })
    });
    runs.into_iter().collect()
}

/// Six significant digits with a signed two-digit exponent: `1.06050e-03`.
pub fn format_sci(v: f64) -> String {
    if !v.is_finite() {
        return format!("{v}");
    }
    let s = format!("{v:.5e}");
    let (mantissa, exp) = s.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    let sign = if exp < 0 { '-' } else { '+' };
    format!("{mantissa}e{sign}{:02}", exp.abs())
}

fn opt_sci(v: Option<f64>) -> String {
    v.map(format_sci).unwrap_or_default()
}

pub const STUDY_HEADER: [&str; 8] = ["N", "h", "dofs", "e_p", "order_p", "e_up", "order_up", "residual"];
pub const SWEEP_HEADER: [&str; 3] = ["xi", "e_up", "e_p"];

pub fn write_study_csv<W: Write>(table: &ConvergenceTable, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(STUDY_HEADER).map_err(csv_err)?;
    for r in &table.rows {
        w.write_record([
            r.row.n.to_string(),
            format_sci(r.row.h),
            r.row.dofs.to_string(),
            format_sci(r.row.e_p),
            opt_sci(r.order_p),
            format_sci(r.row.e_up),
            opt_sci(r.order_up),
            format_sci(r.row.residual),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SWEEP_HEADER).map_err(csv_err)?;
    for r in rows {
        w.write_record([format_sci(r.xi), format_sci(r.e_up), format_sci(r.e_p)]).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Internal(format!("csv: {other:?}")),
    }
}
