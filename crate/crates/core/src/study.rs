//! Convergence studies behind the `dpgmarch` commands, and their output
//! (CSV tables, plain-text summaries, VTK snapshots).

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use crate::assembly::{assemble_condensed, Discretization, PdeCoefficients};
use crate::cases::PdeCase;
use crate::config::{Command, RunConfig};
use crate::dofmap::DofMap;
use crate::galerkin::galerkin_march;
use crate::linalg::DEFAULT_CG_TOL;
use crate::mesh::{build_structured_mesh, Mesh};
use crate::norms::{field_error, fill_rates, trace_dual_error, ErrorReport, FieldNorm};
use crate::projection::{project, ExactSolution};
use crate::timestep::{initial_field, march, MarchState, SolverOptions, TrialVector};
use crate::{DpgError, Result};

pub const CSV_HEADER: [&str; 11] = [
    "level", "h_max", "k", "n_field", "n_trace", "err_L2", "err_H1_semi", "err_trace_dual", "eoc_L2", "eoc_H1",
    "eoc_trace",
];

/// Relative deviation the DPG and Galerkin fields may show in the heat case.
pub const IDENTITY_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub struct IdentityReport {
    /// Per step `max_i |u_dpg - u_gal| / max_i |u_gal|`.
    pub per_step: Vec<f64>,
    pub max_relative: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, Default)]
pub struct StudyOutcome {
    pub rows: Vec<ErrorReport>,
    pub identity: Option<IdentityReport>,
    pub snapshot: Option<PathBuf>,
    pub warnings: Vec<String>,
}

fn solver_options(cfg: &RunConfig) -> SolverOptions {
    SolverOptions {
        cg_tol: cfg.cg_tol.unwrap_or(DEFAULT_CG_TOL),
        max_iter: None,
    }
}

/// Result of marching one case on one mesh with one time step.
pub struct MarchRun {
    pub disc: Discretization,
    pub coeffs: PdeCoefficients,
    pub state: MarchState,
    pub warnings: Vec<String>,
}

/// Marches `case` from the interpolated initial value for `n_steps` steps of size `k`.
pub fn march_case(case: &PdeCase, n: usize, p: usize, k: f64, n_steps: usize, opts: SolverOptions) -> Result<MarchRun> {
    let disc = Discretization::new(build_structured_mesh(n)?, p)?;
    let coeffs = case.coefficients(k, n_steps as f64 * k);
    let system = assemble_condensed(&disc, &coeffs)?;
    let u0 = initial_field(&disc, &|x| case.u(0.0, x));
    let state = march(&disc, &system, MarchState::initial(u0), n_steps, &|t, x| case.source(t, x), opts, |_| {})?;
    Ok(MarchRun {
        disc,
        coeffs,
        state,
        warnings: system.warnings,
    })
}

/// Errors of a trial vector against the case at time `t`.
pub fn exact_errors(
    disc: &Discretization,
    coeffs: &PdeCoefficients,
    case: &PdeCase,
    t: f64,
    x: &TrialVector,
) -> Result<(f64, f64, f64)> {
    let u = |y| case.u(t, y);
    let g = |y| case.grad_u(t, y);
    let l2 = field_error(disc, &x.field, &u, &g, FieldNorm::L2);
    let h1 = field_error(disc, &x.field, &u, &g, FieldNorm::H1Semi);
    let tr = trace_dual_error(disc, coeffs, &x.trace, &|y| case.flux(t, y), disc.p() + 2)?;
    Ok((l2, h1, tr))
}

fn report(level: usize, disc: &Discretization, k: f64, errs: (f64, f64, f64)) -> ErrorReport {
    ErrorReport {
        level,
        h_max: disc.mesh.h_max,
        k,
        n_field: disc.dofmap.n_field,
        n_trace: disc.dofmap.n_trace,
        err_l2: errs.0,
        err_h1_semi: errs.1,
        err_trace_dual: errs.2,
        eoc_l2: None,
        eoc_h1: None,
        eoc_trace: None,
    }
}

/// March on every level and measure the error at the final time.
pub fn converge_space(cfg: &RunConfig, levels: &[usize]) -> Result<(Vec<ErrorReport>, Vec<String>, Option<MarchRun>)> {
    let case = cfg.case()?;
    let mut rows = Vec::new();
    let mut warnings = Vec::new();
    let mut last = None;
    for (i, &n) in levels.iter().enumerate() {
        let h = std::f64::consts::SQRT_2 / n as f64;
        let k = cfg.time_step(i, h)?;
        let (steps, t_end) = cfg.schedule(k)?;
        let run = march_case(&case, n, cfg.p, k, steps, solver_options(cfg)).map_err(|e| e.context(format!("level n = {n}")))?;
        let errs = exact_errors(&run.disc, &run.coeffs, &case, t_end, &run.state.current)?;
        rows.push(report(i, &run.disc, k, errs));
        warnings.extend(run.warnings.iter().cloned());
        last = Some(run);
    }
    fill_rates(&mut rows, false);
    Ok((rows, warnings, last))
}

/// One mesh, a list of time steps; errors against the exact solution or a
/// fine-step reference march.
pub fn converge_time(cfg: &RunConfig) -> Result<(Vec<ErrorReport>, Vec<String>)> {
    let case = cfg.case()?;
    let n = cfg.levels[0];
    let list = cfg
        .k_list
        .clone()
        .ok_or_else(|| DpgError::Config("converge-time requires k_list".into()))?;
    let opts = solver_options(cfg);
    let reference = match cfg.k_ref {
        Some(kr) => {
            let (steps, _) = cfg.schedule(kr)?;
            Some(march_case(&case, n, cfg.p, kr, steps, opts).map_err(|e| e.context("reference march"))?)
        }
        None => None,
    };
    let mut rows = Vec::new();
    let mut warnings = Vec::new();
    for (i, &k) in list.iter().enumerate() {
        let (steps, t_end) = cfg.schedule(k)?;
        let run = march_case(&case, n, cfg.p, k, steps, opts).map_err(|e| e.context(format!("k = {k}")))?;
        let errs = match &reference {
            Some(r) => reference_errors(&run, &r.state.current)?,
            None => exact_errors(&run.disc, &run.coeffs, &case, t_end, &run.state.current)?,
        };
        rows.push(report(i, &run.disc, k, errs));
        warnings.extend(run.warnings);
    }
    fill_rates(&mut rows, true);
    Ok((rows, warnings))
}

/// Norms of the difference to a reference trial vector on the same mesh.
fn reference_errors(run: &MarchRun, reference: &TrialVector) -> Result<(f64, f64, f64)> {
    let x = &run.state.current;
    let df: Vec<f64> = x.field.iter().zip(&reference.field).map(|(a, b)| a - b).collect();
    let dt: Vec<f64> = x.trace.iter().zip(&reference.trace).map(|(a, b)| a - b).collect();
    let zero = |_| 0.0;
    let zero_g = |_| [0.0, 0.0];
    let l2 = field_error(&run.disc, &df, &zero, &zero_g, FieldNorm::L2);
    let h1 = field_error(&run.disc, &df, &zero, &zero_g, FieldNorm::H1Semi);
    let tr = trace_dual_error(&run.disc, &run.coeffs, &dt, &zero_g, run.disc.p() + 2)?;
    Ok((l2, h1, tr))
}

/// Elliptic projection of `u(0, .)` on every level.
pub fn converge_projection(cfg: &RunConfig) -> Result<Vec<ErrorReport>> {
    let case = cfg.case()?;
    let mut rows = Vec::new();
    for (i, &n) in cfg.levels.iter().enumerate() {
        let disc = Discretization::new(build_structured_mesh(n)?, cfg.p)?;
        let k = cfg.time_step(i, disc.mesh.h_max)?;
        let (_, t_end) = cfg.schedule(k)?;
        let coeffs = case.coefficients(k, t_end);
        let u = |x| case.u(0.0, x);
        let g = |x| case.grad_u(0.0, x);
        let x = project(&disc, &coeffs, ExactSolution { u: &u, grad: &g }).map_err(|e| e.context(format!("level n = {n}")))?;
        let errs = exact_errors(&disc, &coeffs, &case, 0.0, &x)?;
        rows.push(report(i, &disc, k, errs));
    }
    fill_rates(&mut rows, false);
    Ok(rows)
}

/// Marches the DPG scheme with the case coefficients and the Galerkin heat
/// solver side by side and compares the fields after every step.
pub fn heat_identity(case: &PdeCase, n: usize, p: usize, k: f64, n_steps: usize, opts: SolverOptions) -> Result<IdentityReport> {
    let disc = Discretization::new(build_structured_mesh(n)?, p)?;
    let t_end = n_steps as f64 * k;
    let coeffs = case.coefficients(k, t_end);
    let system = assemble_condensed(&disc, &coeffs)?;
    let u0 = initial_field(&disc, &|x| case.u(0.0, x));
    let source = |t: f64, x| case.source(t, x);
    let mut dpg = Vec::with_capacity(n_steps);
    march(&disc, &system, MarchState::initial(u0.clone()), n_steps, &source, opts, |s| {
        dpg.push(s.current.field.clone())
    })?;
    let mut per_step = Vec::with_capacity(n_steps);
    galerkin_march(&disc.mesh, &disc.dofmap, &PdeCoefficients::heat(k, t_end), n_steps, &source, &u0.field, |step, gal| {
        let scale = gal.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let dev = dpg[step - 1].iter().zip(gal).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        per_step.push(if scale > 0.0 { dev / scale } else { dev });
    })?;
    let max_relative = per_step.iter().fold(0.0f64, |m, &v| m.max(v));
    Ok(IdentityReport {
        per_step,
        max_relative,
        pass: max_relative <= IDENTITY_TOL,
    })
}

/// Runs the configured command and writes its outputs.
pub fn execute(cfg: &RunConfig) -> Result<StudyOutcome> {
    cfg.validate()?;
    let mut out = StudyOutcome::default();
    match cfg.command {
        Command::Run => {
            let finest = *cfg.levels.last().expect("validated");
            let idx = cfg.levels.len() - 1;
            let h = std::f64::consts::SQRT_2 / finest as f64;
            let k = cfg.time_step(idx, h)?;
            let (steps, t_end) = cfg.schedule(k)?;
            let case = cfg.case()?;
            let run = march_case(&case, finest, cfg.p, k, steps, solver_options(cfg))?;
            let errs = exact_errors(&run.disc, &run.coeffs, &case, t_end, &run.state.current)?;
            out.rows.push(report(idx, &run.disc, k, errs));
            out.warnings = run.warnings.clone();
            if cfg.snapshot {
                let path = cfg.output_path.with_extension("vtk");
                write_vtk(&path, &run.disc.mesh, &run.disc.dofmap, &run.state.current.field)?;
                out.snapshot = Some(path);
            }
        }
        Command::ConvergeSpace => {
            let (rows, warnings, last) = converge_space(cfg, &cfg.levels)?;
            out.rows = rows;
            out.warnings = warnings;
            if cfg.snapshot {
                if let Some(run) = last {
                    let path = cfg.output_path.with_extension("vtk");
                    write_vtk(&path, &run.disc.mesh, &run.disc.dofmap, &run.state.current.field)?;
                    out.snapshot = Some(path);
                }
            }
        }
        Command::ConvergeTime => {
            let (rows, warnings) = converge_time(cfg)?;
            out.rows = rows;
            out.warnings = warnings;
        }
        Command::ConvergeProjection => out.rows = converge_projection(cfg)?,
        Command::HeatIdentity => {
            let k = cfg.time_step(0, 0.0)?;
            let (steps, _) = cfg.schedule(k)?;
            let rep = heat_identity(&cfg.case()?, cfg.levels[0], cfg.p, k, steps, solver_options(cfg))?;
            write_identity_csv(&cfg.output_path, &rep)?;
            out.identity = Some(rep);
            return Ok(out);
        }
    }
    write_csv(&cfg.output_path, &out.rows)?;
    Ok(out)
}

fn num(v: f64) -> String {
    format!("{v:.15e}")
}

fn create(path: &Path) -> Result<std::io::BufWriter<std::fs::File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    Ok(std::io::BufWriter::new(std::fs::File::create(path)?))
}

pub fn write_csv(path: &Path, rows: &[ErrorReport]) -> Result<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    w.write_record(CSV_HEADER)?;
    let opt = |v: Option<f64>| v.map(num).unwrap_or_default();
    for r in rows {
        w.write_record([
            r.level.to_string(),
            num(r.h_max),
            num(r.k),
            r.n_field.to_string(),
            r.n_trace.to_string(),
            num(r.err_l2),
            num(r.err_h1_semi),
            num(r.err_trace_dual),
            opt(r.eoc_l2),
            opt(r.eoc_h1),
            opt(r.eoc_trace),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_identity_csv(path: &Path, rep: &IdentityReport) -> Result<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    w.write_record(["step", "max_relative_deviation"])?;
    for (i, d) in rep.per_step.iter().enumerate() {
        w.write_record([(i + 1).to_string(), num(*d)])?;
    }
    w.flush()?;
    Ok(())
}

/// Human-readable convergence table.
pub fn format_table(rows: &[ErrorReport]) -> String {
    let rate = |v: Option<f64>| v.map(|r| format!("{r:6.3}")).unwrap_or_else(|| "     -".into());
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{:>5} {:>10} {:>10} {:>8} {:>8} {:>11} {:>6} {:>11} {:>6} {:>11} {:>6}",
        "level", "h_max", "k", "n_field", "n_trace", "err_L2", "eoc", "err_H1", "eoc", "err_trace", "eoc"
    );
    for r in rows {
        let _ = writeln!(
            s,
            "{:>5} {:>10.4e} {:>10.4e} {:>8} {:>8} {:>11.4e} {} {:>11.4e} {} {:>11.4e} {}",
            r.level,
            r.h_max,
            r.k,
            r.n_field,
            r.n_trace,
            r.err_l2,
            rate(r.eoc_l2),
            r.err_h1_semi,
            rate(r.eoc_h1),
            r.err_trace_dual,
            rate(r.eoc_trace)
        );
    }
    s
}

/// Vertex values of a field (zero on the boundary).
pub fn vertex_values(mesh: &Mesh, dofmap: &DofMap, field: &[f64]) -> Vec<f64> {
    (0..mesh.n_vertices())
        .map(|v| dofmap.vertex_dofs[v].map_or(0.0, |g| field[g]))
        .collect()
}

/// Legacy ASCII VTK unstructured grid with point data `u` (vertex values).
pub fn write_vtk(path: &Path, mesh: &Mesh, dofmap: &DofMap, field: &[f64]) -> Result<()> {
    let mut w = create(path)?;
    writeln!(w, "# vtk DataFile Version 3.0")?;
    writeln!(w, "dpgmarch field snapshot")?;
    writeln!(w, "ASCII")?;
    writeln!(w, "DATASET UNSTRUCTURED_GRID")?;
    writeln!(w, "POINTS {} double", mesh.n_vertices())?;
    for v in &mesh.vertices {
        writeln!(w, "{} {} 0", num(v[0]), num(v[1]))?;
    }
    let ne = mesh.n_elements();
    writeln!(w, "CELLS {} {}", ne, 4 * ne)?;
    for t in &mesh.elements {
        writeln!(w, "3 {} {} {}", t[0], t[1], t[2])?;
    }
    writeln!(w, "CELL_TYPES {ne}")?;
    for _ in 0..ne {
        writeln!(w, "5")?;
    }
    writeln!(w, "POINT_DATA {}", mesh.n_vertices())?;
    writeln!(w, "SCALARS u double 1")?;
    writeln!(w, "LOOKUP_TABLE default")?;
    for v in vertex_values(mesh, dofmap, field) {
        writeln!(w, "{}", num(v))?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(level: usize, h: f64, e: f64) -> ErrorReport {
        ErrorReport {
            level,
            h_max: h,
            k: 0.1,
            n_field: 1,
            n_trace: 2,
            err_l2: e,
            err_h1_semi: e,
            err_trace_dual: e,
            eoc_l2: None,
            eoc_h1: None,
            eoc_trace: None,
        }
    }

    #[test]
    fn csv_layout() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("sub/t.csv");
        let mut rows = vec![row(0, 0.5, 0.1), row(1, 0.25, 0.025)];
        fill_rates(&mut rows, false);
        write_csv(&path, &rows).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], CSV_HEADER.join(","));
        assert!(lines[1].ends_with(",,,"));
        let fields: Vec<&str> = lines[2].split(',').collect();
        assert_eq!(fields.len(), 11);
        assert_eq!(fields[1], "2.500000000000000e-1");
        assert!(fields[8].starts_with("2.00000000000000"));
    }

    #[test]
    fn vtk_counts() {
        let dir = tempfile::tempdir().unwrap();
        let mesh = build_structured_mesh(3).unwrap();
        let dofmap = crate::dofmap::build_dofmap(&mesh, 1).unwrap();
        let path = dir.path().join("s.vtk");
        write_vtk(&path, &mesh, &dofmap, &vec![1.0; dofmap.n_field]).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.contains("POINTS 16 double"));
        assert!(text.contains("CELLS 18 72"));
        assert!(text.contains("POINT_DATA 16"));
        let values: Vec<f64> = text.lines().skip_while(|l| !l.starts_with("LOOKUP_TABLE")).skip(1).map(|l| l.parse().unwrap()).collect();
        assert_eq!(values.iter().filter(|&&v| v == 1.0).count(), 4);
    }

    #[test]
    fn table_has_one_line_per_row() {
        let rows = vec![row(0, 0.5, 0.1), row(1, 0.25, 0.05)];
        assert_eq!(format_table(&rows).lines().count(), 3);
    }
}
