//! The backward Euler march.
//!
//! Step `n` finds `u_h^n` in `U_h` with
//! `a(u_h^n, Theta_h w) = (f^n, Theta_h w) + (1/k)(u_h^{n-1}, Theta_h w)` for all
//! trial `w`. Only the field component of the previous step enters the load,
//! so the initial trace is irrelevant and set to zero.

use crate::assembly::{CondensedSystem, Discretization};
use crate::dofmap::DofMap;
use crate::linalg::{cg_solve, DEFAULT_CG_TOL};
use crate::{DpgError, Point, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct TrialVector {
    pub field: Vec<f64>,
    pub trace: Vec<f64>,
}

impl TrialVector {
    pub fn zeros(dofmap: &DofMap) -> Self {
        TrialVector {
            field: vec![0.0; dofmap.n_field],
            trace: vec![0.0; dofmap.n_trace],
        }
    }

    pub fn from_global(dofmap: &DofMap, global: &[f64]) -> Result<Self> {
        if global.len() != dofmap.n_dofs() {
            return Err(DpgError::DimensionMismatch {
                expected: dofmap.n_dofs(),
                got: global.len(),
            });
        }
        let (field, trace) = global.split_at(dofmap.n_field);
        Ok(TrialVector {
            field: field.to_vec(),
            trace: trace.to_vec(),
        })
    }

    /// Concatenation `[field | trace]`.
    pub fn to_global(&self) -> Vec<f64> {
        let mut v = self.field.clone();
        v.extend_from_slice(&self.trace);
        v
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MarchState {
    pub step: usize,
    pub time: f64,
    pub current: TrialVector,
}

impl MarchState {
    pub fn initial(u0: TrialVector) -> Self {
        MarchState {
            step: 0,
            time: 0.0,
            current: u0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolverOptions {
    pub cg_tol: f64,
    /// `None` means `10 n`.
    pub max_iter: Option<usize>,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            cg_tol: DEFAULT_CG_TOL,
            max_iter: None,
        }
    }
}

/// Nodal interpolant of `u0` at the interior field nodes; zero trace.
pub fn initial_field(disc: &Discretization, u0: &dyn Fn(Point) -> f64) -> TrialVector {
    TrialVector {
        field: disc
            .dofmap
            .field_node_points(&disc.mesh)
            .into_iter()
            .map(u0)
            .collect(),
        trace: vec![0.0; disc.dofmap.n_trace],
    }
}

/// Number of steps `N` with `N k = T`.
pub fn step_count(time_step: f64, end_time: f64) -> Result<usize> {
    let n = (end_time / time_step).round();
    if n < 1.0 || (n * time_step - end_time).abs() > 1e-12 * end_time.max(1.0) {
        return Err(DpgError::InvalidCoefficients(format!(
            "end time {end_time} is not an integer multiple of the time step {time_step}"
        )));
    }
    Ok(n as usize)
}

/// One backward Euler step with the source evaluated at the new time level.
pub fn step(
    disc: &Discretization,
    system: &CondensedSystem,
    state: &MarchState,
    source: &dyn Fn(f64, Point) -> f64,
    opts: SolverOptions,
) -> Result<MarchState> {
    let k = system.coeffs.time_step;
    let n = state.step + 1;
    let t = n as f64 * k;
    let rhs = system.condense_load(disc, &|x| source(t, x), &state.current.field);
    let max_iter = opts.max_iter.unwrap_or(10 * rhs.len().max(1));
    let out = cg_solve(&system.matrix, &rhs, opts.cg_tol, max_iter)
        .map_err(|e| e.context(format!("time step {n}")))?;
    Ok(MarchState {
        step: n,
        time: t,
        current: TrialVector::from_global(&disc.dofmap, &out.x)?,
    })
}

/// Applies `n_steps` steps starting from `start`, calling `observe` after each.
pub fn march(
    disc: &Discretization,
    system: &CondensedSystem,
    start: MarchState,
    n_steps: usize,
    source: &dyn Fn(f64, Point) -> f64,
    opts: SolverOptions,
    mut observe: impl FnMut(&MarchState),
) -> Result<MarchState> {
    let mut state = start;
    for _ in 0..n_steps {
        state = step(disc, system, &state, source, opts)?;
        observe(&state);
    }
    Ok(state)
}
