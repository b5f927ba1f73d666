//! Monotone (`μ = 0`) inclusions via a sequence of strongly monotone
//! subproblems `0 ∈ (F_k + B)(x)`, `F_k(x) = F(x) + (x − z^k)/ρ_k`, each solved
//! by [`crate::pde_strong`] to tolerance `τ_k` from `z^k`.
//!
//! The schedules are geometric, `ρ_k = ρ₀ζ^k` and `τ_k = τ₀σ^k` with `σζ < 1`.
//! The loop stops once `‖z^{k+1} − z^k‖/ρ_k ≤ ε/2` and `τ_k ≤ ε/2`; the inner
//! certificate minus the proximal term then certifies `F+B` at `z^{k+1}`.

use crate::certificate::Certificate;
use crate::error::{Error, Result};
use crate::operator::{EvalBudget, EvalCounts, PointMap, PointOperator, ResolventMap};
use crate::pde_strong::{
    solve_strong_observed, AcceptedStep, IterState, KappaSchedule, LineSearchStart,
    StrongSolverConfig,
};
use crate::trace::TraceRecord;
use crate::vector::RealVector;
use serde::Serialize;

#[derive(Clone, Debug)]
pub struct GeneralSolverConfig {
    pub eps: f64,
    pub gamma0: f64,
    pub delta: f64,
    pub nu: f64,
    pub xi: f64,
    pub kappa: KappaSchedule,
    pub rho0: f64,
    pub tau0: f64,
    pub zeta: f64,
    pub sigma: f64,
    pub max_outer: usize,
    /// Iteration cap for each inner solve.
    pub inner_max_iters: usize,
    pub max_backtracks: usize,
    /// Cap on `F` evaluations across the whole solve.
    pub max_f_evals: Option<u64>,
    pub linesearch_start: LineSearchStart,
}

impl GeneralSolverConfig {
    pub fn new(eps: f64) -> Self {
        GeneralSolverConfig {
            eps,
            gamma0: 1.0,
            delta: 0.5,
            nu: 0.49,
            xi: 0.25,
            kappa: KappaSchedule::Maximal,
            rho0: 1.0,
            tau0: 1.0,
            zeta: 2.0,
            sigma: 0.3,
            max_outer: 200,
            inner_max_iters: 1_000_000,
            max_backtracks: 60,
            max_f_evals: None,
            linesearch_start: LineSearchStart::Restart,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if !(self.rho0 >= 1.0 && self.rho0.is_finite()) {
            return bad(format!("rho0 must be ≥ 1, got {}", self.rho0));
        }
        if !(self.tau0 > 0.0 && self.tau0 <= 1.0) {
            return bad(format!("tau0 must lie in (0, 1], got {}", self.tau0));
        }
        if !(self.zeta > 1.0 && self.zeta.is_finite()) {
            return bad(format!("zeta must be > 1, got {}", self.zeta));
        }
        if !(self.sigma > 0.0 && self.sigma * self.zeta < 1.0) {
            return bad(format!(
                "sigma must lie in (0, 1/zeta), got sigma = {}, zeta = {}",
                self.sigma, self.zeta
            ));
        }
        if self.max_outer == 0 {
            return bad("max_outer must be positive".into());
        }
        // The inner parameters share the strong solver's constraints.
        self.inner_config(1.0, 1.0, None).validate()
    }

    fn inner_config(&self, rho: f64, tau: f64, max_f_evals: Option<u64>) -> StrongSolverConfig {
        StrongSolverConfig {
            eps: tau,
            gamma0: self.gamma0,
            delta: self.delta,
            nu: self.nu,
            xi: self.xi,
            kappa: self.kappa.clone(),
            mu: 1.0 / rho,
            max_backtracks: self.max_backtracks,
            max_iters: self.inner_max_iters,
            max_f_evals,
            linesearch_start: self.linesearch_start,
        }
    }
}

/// `ρ_k` and `τ_k` advanced by repeated multiplication.
#[derive(Clone, Debug, PartialEq)]
pub struct OuterState {
    pub z_curr: RealVector,
    pub k: usize,
    pub rho_k: f64,
    pub tau_k: f64,
}

impl OuterState {
    pub fn start(z0: RealVector, cfg: &GeneralSolverConfig) -> Self {
        OuterState {
            z_curr: z0,
            k: 0,
            rho_k: cfg.rho0,
            tau_k: cfg.tau0,
        }
    }

    fn advance(&mut self, z_next: RealVector, cfg: &GeneralSolverConfig) {
        self.z_curr = z_next;
        self.k += 1;
        self.rho_k *= cfg.zeta;
        self.tau_k *= cfg.sigma;
    }
}

struct Perturbed {
    base: PointMap,
    anchor: RealVector,
    rho: f64,
}

impl PointOperator for Perturbed {
    fn dim(&self) -> usize {
        self.base.dim()
    }

    fn apply(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
        let fx = self.base.eval(&RealVector::from_raw(x.to_vec()))?;
        for i in 0..out.len() {
            out[i] = fx[i] + (x[i] - self.anchor[i]) / self.rho;
        }
        Ok(())
    }

    fn contains(&self, x: &[f64]) -> bool {
        self.base.in_domain(x)
    }
}

/// `x ↦ F(x) + (x − anchor)/ρ`. Each evaluation performs exactly one
/// evaluation of `f`, visible on `f`'s own counter.
pub fn perturbed_map(f: &PointMap, anchor: &RealVector, rho: f64) -> PointMap {
    assert!(rho > 0.0, "rho must be positive");
    PointMap::new(Perturbed {
        base: f.clone(),
        anchor: anchor.clone(),
        rho,
    })
}

/// One row of the outer trace.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OuterRecord {
    pub k: usize,
    pub rho_k: f64,
    pub tau_k: f64,
    /// `‖z^{k+1} − z^k‖`
    pub step_norm: f64,
    pub inner_iters: usize,
    pub inner_f_evals: u64,
    pub inner_residual: f64,
    /// `‖v_inner‖ + ‖z^{k+1} − z^k‖/ρ_k`
    pub residual_bound: f64,
    /// Norm of the certificate for `F+B` at `z^{k+1}`.
    pub residual: f64,
}

#[derive(Clone, Debug)]
pub struct GeneralReport {
    pub cert: Certificate,
    pub outer_trace: Vec<OuterRecord>,
    pub inner_traces: Vec<Vec<TraceRecord>>,
    /// Certificates for `F_k + B` returned by each inner solve.
    pub inner_certificates: Vec<Certificate>,
    pub counts: EvalCounts,
}

impl GeneralReport {
    pub fn outer_iterations(&self) -> usize {
        self.outer_trace.len()
    }

    pub fn inner_iterations(&self) -> usize {
        self.inner_traces.iter().map(Vec::len).sum()
    }
}

pub fn solve_general(
    f: &PointMap,
    b: &ResolventMap,
    z0: &RealVector,
    cfg: &GeneralSolverConfig,
) -> Result<GeneralReport> {
    solve_general_observed(f, b, z0, cfg, &mut |_, _, _| {})
}

/// As [`solve_general`], with `observer(k, state, step)` called for every
/// accepted inner step.
pub fn solve_general_observed(
    f: &PointMap,
    b: &ResolventMap,
    z0: &RealVector,
    cfg: &GeneralSolverConfig,
    observer: &mut dyn FnMut(usize, &IterState, &AcceptedStep),
) -> Result<GeneralReport> {
    cfg.validate()?;
    if z0.dim() != f.dim() {
        return Err(Error::DimensionMismatch {
            expected: f.dim(),
            got: z0.dim(),
        });
    }
    let budget = EvalBudget::open(f, b, cfg.max_f_evals);
    let mut outer = OuterState::start(z0.clone(), cfg);
    let mut outer_trace = Vec::new();
    let mut inner_traces = Vec::new();
    let mut inner_certificates = Vec::new();
    let mut best: Option<Certificate> = None;

    while outer.k < cfg.max_outer {
        let k = outer.k;
        let f_k = perturbed_map(f, &outer.z_curr, outer.rho_k);
        let remaining = cfg
            .max_f_evals
            .map(|cap| cap.saturating_sub(budget.used(f, b).f_evals));
        let inner_cfg = cfg.inner_config(outer.rho_k, outer.tau_k, remaining);
        let inner = solve_strong_observed(
            &f_k,
            b,
            &outer.z_curr,
            None,
            &inner_cfg,
            &mut |s: &IterState, a: &AcceptedStep| observer(k, s, a),
        )
        .map_err(|e| Error::Inner {
            outer: k,
            source: Box::new(with_outer_best(e, best.clone())),
        })?;

        let z_next = inner.cert.x.clone();
        let prox_term = z_next.sub(&outer.z_curr).scale(1.0 / outer.rho_k);
        let step_norm = z_next.distance(&outer.z_curr);
        let v = inner.cert.v.sub(&prox_term);
        let cert = Certificate::from_parts(z_next.clone(), v);
        let scaled_step = step_norm / outer.rho_k;

        outer_trace.push(OuterRecord {
            k,
            rho_k: outer.rho_k,
            tau_k: outer.tau_k,
            step_norm,
            inner_iters: inner.iterations,
            inner_f_evals: inner.counts.f_evals,
            inner_residual: inner.cert.residual,
            residual_bound: inner.cert.residual + scaled_step,
            residual: cert.residual,
        });
        log::debug!(
            "outer k = {k}: rho = {}, tau = {:e}, inner iters = {}, residual = {:e}",
            outer.rho_k,
            outer.tau_k,
            inner.iterations,
            cert.residual
        );
        inner_traces.push(inner.trace);
        inner_certificates.push(inner.cert);
        if best.as_ref().is_none_or(|c| cert.residual < c.residual) {
            best = Some(cert.clone());
        }

        let half = 0.5 * cfg.eps;
        if scaled_step <= half && outer.tau_k <= half {
            return Ok(GeneralReport {
                cert,
                outer_trace,
                inner_traces,
                inner_certificates,
                counts: budget.used(f, b),
            });
        }
        outer.advance(z_next, cfg);
    }
    let best = best.expect("max_outer ≥ 1");
    Err(Error::NonConvergence {
        iterations: cfg.max_outer,
        best_residual: best.residual,
        best: Box::new(best),
    })
}

/// Inner failures report the best certificate for `F+B`, not for `F_k+B`.
fn with_outer_best(e: Error, best: Option<Certificate>) -> Error {
    match e {
        Error::LineSearchStalled {
            iteration,
            backtracks,
            ..
        } => Error::LineSearchStalled {
            iteration,
            backtracks,
            best: best.map(Box::new),
        },
        Error::Budget { f_evals, .. } => Error::Budget {
            f_evals,
            best: best.map(Box::new),
        },
        Error::NonConvergence { iterations, .. } if best.is_some() => {
            let best = best.unwrap();
            Error::NonConvergence {
                iterations,
                best_residual: best.residual,
                best: Box::new(best),
            }
        }
        Error::Stagnation {
            steps, residual, ..
        } if best.is_some() => Error::Stagnation {
            steps,
            residual,
            best: Box::new(best.unwrap()),
        },
        e => e,
    }
}
