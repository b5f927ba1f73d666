use serde::Serialize;

/// One accepted iteration of a solver.
///
/// Counters are cumulative from the start of the solve and include any setup
/// evaluation of `F` at the starting point.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TraceRecord {
    pub t: usize,
    pub n_t: usize,
    pub gamma_t: f64,
    pub residual: f64,
    pub f_evals_cum: u64,
    pub resolvent_evals_cum: u64,
}
