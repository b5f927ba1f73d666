//! Primal-dual extrapolation for strongly monotone inclusions `0 ∈ (F+B)(x)`
//! with modulus `μ > 0`.
//!
//! Each iteration forms
//!
//! ```text
//! x⁺ = (I + γB)⁻¹( x + α(x − x₋) − γ[F(x) + β(F(x) − F(x₋))] )
//! ```
//!
//! with `γ = γ₀δⁿ` chosen by backtracking until
//! `ν(1−κ)‖x⁺ − x‖ ≥ γ‖F(x⁺) − F(x) − (κ/γ)(x⁺ − x)‖`. The resolvent element
//! of the accepted step gives an explicit `v = F(x⁺) + b ∈ (F+B)(x⁺)`, and the
//! solve stops once `‖v‖ ≤ ε`.

use crate::certificate::Certificate;
use crate::error::{Error, Result};
use crate::operator::{EvalBudget, EvalCounts, PointMap, ResolventMap};
use crate::trace::TraceRecord;
use crate::vector::{norm, RealVector};
use std::fmt;
use std::sync::Arc;

/// Number of consecutive zero-length steps tolerated before giving up.
pub const STAGNATION_LIMIT: usize = 5;

/// The sequence `κ_t`, which must stay inside `[0, ξ/(1+ξ)]`.
#[derive(Clone)]
pub enum KappaSchedule {
    /// `κ_t ≡ ξ/(1+ξ)`.
    Maximal,
    Constant(f64),
    Custom(Arc<dyn Fn(usize) -> f64 + Send + Sync>),
}

impl KappaSchedule {
    pub fn at(&self, t: usize, xi: f64) -> f64 {
        match self {
            KappaSchedule::Maximal => xi / (1.0 + xi),
            KappaSchedule::Constant(k) => *k,
            KappaSchedule::Custom(f) => f(t),
        }
    }
}

impl fmt::Debug for KappaSchedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KappaSchedule::Maximal => write!(f, "Maximal"),
            KappaSchedule::Constant(k) => write!(f, "Constant({k})"),
            KappaSchedule::Custom(_) => write!(f, "Custom(..)"),
        }
    }
}

/// Where the backtracking search starts each iteration.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum LineSearchStart {
    /// Always from `γ₀`, so `γ_t = γ₀δ^{n_t}`.
    #[default]
    Restart,
    /// From `min(γ₀, γ_{t−1}/δ)`.
    Warm,
}

#[derive(Clone, Debug)]
pub struct StrongSolverConfig {
    pub eps: f64,
    pub gamma0: f64,
    pub delta: f64,
    pub nu: f64,
    pub xi: f64,
    pub kappa: KappaSchedule,
    /// A positive lower bound on the strong monotonicity modulus of `F+B`.
    pub mu: f64,
    pub max_backtracks: usize,
    pub max_iters: usize,
    pub max_f_evals: Option<u64>,
    pub linesearch_start: LineSearchStart,
}

impl StrongSolverConfig {
    pub fn new(eps: f64, mu: f64) -> Self {
        StrongSolverConfig {
            eps,
            gamma0: 1.0,
            delta: 0.5,
            nu: 0.49,
            xi: 0.25,
            kappa: KappaSchedule::Maximal,
            mu,
            max_backtracks: 60,
            max_iters: 1_000_000,
            max_f_evals: None,
            linesearch_start: LineSearchStart::Restart,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if !(self.eps > 0.0 && self.eps.is_finite()) {
            return bad(format!("eps must be positive, got {}", self.eps));
        }
        if !(self.gamma0 > 0.0 && self.gamma0.is_finite()) {
            return bad(format!("gamma0 must be positive, got {}", self.gamma0));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return bad(format!("delta must lie in (0, 1), got {}", self.delta));
        }
        if !(self.xi >= 0.0 && self.xi < self.nu && self.nu <= 0.5) {
            return bad(format!(
                "need 0 ≤ xi < nu ≤ 1/2, got xi = {}, nu = {}",
                self.xi, self.nu
            ));
        }
        if !(self.mu > 0.0 && self.mu.is_finite()) {
            return bad(format!("mu must be positive, got {}", self.mu));
        }
        if self.max_backtracks == 0 || self.max_iters == 0 {
            return bad("max_backtracks and max_iters must be positive".into());
        }
        Ok(())
    }

    /// `κ_t`, checked against `[0, ξ/(1+ξ)]`.
    pub fn kappa_at(&self, t: usize) -> Result<f64> {
        let k = self.kappa.at(t, self.xi);
        let upper = self.xi / (1.0 + self.xi);
        if !(k >= 0.0 && k <= upper) {
            return Err(Error::InvalidParameter(format!(
                "kappa_{t} = {k} outside [0, {upper}]"
            )));
        }
        Ok(k)
    }
}

/// Two consecutive iterates with their cached operator values.
#[derive(Clone, Debug, PartialEq)]
pub struct IterState {
    pub x_prev: RealVector,
    pub x_curr: RealVector,
    pub f_prev: RealVector,
    pub f_curr: RealVector,
    pub gamma_prev: f64,
    pub kappa_prev: f64,
    pub t: usize,
}

impl IterState {
    /// State at `t = 1` with `x⁰ = x¹`.
    pub fn start(x0: RealVector, f_x0: RealVector, gamma0: f64, kappa0: f64) -> Self {
        IterState {
            x_prev: x0.clone(),
            x_curr: x0,
            f_prev: f_x0.clone(),
            f_curr: f_x0,
            gamma_prev: gamma0,
            kappa_prev: kappa0,
            t: 1,
        }
    }
}

/// Extrapolation weights `(β_t, α_t)` for a trial step `γ_t`.
pub fn compute_params(gamma_t: f64, state: &IterState, kappa_t: f64, mu: f64) -> (f64, f64) {
    let g_prev = state.gamma_prev;
    let k_prev = state.kappa_prev;
    let beta = (g_prev * (1.0 - kappa_t)) / (gamma_t * (1.0 - k_prev))
        / (1.0 + 2.0 * mu * g_prev / (1.0 - k_prev));
    let alpha = k_prev * gamma_t * beta / g_prev;
    (beta, alpha)
}

/// A trial step for one value of `γ`.
#[derive(Clone, Debug, PartialEq)]
pub struct Candidate {
    pub x_next: RealVector,
    pub f_next: RealVector,
    pub b_next: RealVector,
    pub beta: f64,
    pub alpha: f64,
}

/// One evaluation of `F` and one of the resolvent at step size `gamma`.
pub fn candidate_step(
    gamma: f64,
    state: &IterState,
    kappa_t: f64,
    mu: f64,
    f: &PointMap,
    b: &ResolventMap,
) -> Result<Candidate> {
    let (beta, alpha) = compute_params(gamma, state, kappa_t, mu);
    let u: Vec<f64> = state
        .x_curr
        .iter()
        .zip(state.x_prev.iter())
        .zip(state.f_curr.iter().zip(state.f_prev.iter()))
        .map(|((x, xp), (fx, fp))| x + alpha * (x - xp) - gamma * (fx + beta * (fx - fp)))
        .collect();
    let u = RealVector::new(u)?;
    let step = b.apply(gamma, &u)?;
    let f_next = f.eval(&step.point)?;
    Ok(Candidate {
        x_next: step.point,
        f_next,
        b_next: step.element,
        beta,
        alpha,
    })
}

/// The backtracking acceptance test, with a non-strict inequality and no slack.
pub fn linesearch_accepts(
    gamma: f64,
    kappa_t: f64,
    nu: f64,
    x_curr: &[f64],
    x_next: &[f64],
    f_curr: &[f64],
    f_next: &[f64],
) -> bool {
    let n = x_curr.len();
    let mut d = Vec::with_capacity(n);
    let mut r = Vec::with_capacity(n);
    for i in 0..n {
        d.push(x_next[i] - x_curr[i]);
        r.push(f_next[i] - f_curr[i] - kappa_t / gamma * d[i]);
    }
    nu * (1.0 - kappa_t) * norm(&d) >= gamma * norm(&r)
}

/// The accepted step of one iteration.
#[derive(Clone, Debug, PartialEq)]
pub struct AcceptedStep {
    pub n_t: usize,
    pub gamma: f64,
    pub kappa: f64,
    pub beta: f64,
    pub alpha: f64,
    pub x_next: RealVector,
    pub f_next: RealVector,
    pub b_next: RealVector,
    pub cert: Certificate,
}

/// Runs the backtracking search of iteration `state.t` and returns the
/// advanced state together with the accepted step.
pub fn iterate(
    state: &IterState,
    cfg: &StrongSolverConfig,
    f: &PointMap,
    b: &ResolventMap,
    budget: &EvalBudget,
) -> Result<(IterState, AcceptedStep)> {
    let kappa = cfg.kappa_at(state.t)?;
    let start = match cfg.linesearch_start {
        LineSearchStart::Restart => cfg.gamma0,
        LineSearchStart::Warm => cfg.gamma0.min(state.gamma_prev / cfg.delta),
    };
    for n in 0..=cfg.max_backtracks {
        budget.ensure_room(f).map_err(|used| Error::Budget {
            f_evals: used,
            best: None,
        })?;
        let gamma = start * cfg.delta.powi(n as i32);
        let cand = candidate_step(gamma, state, kappa, cfg.mu, f, b)?;
        if linesearch_accepts(
            gamma,
            kappa,
            cfg.nu,
            &state.x_curr,
            &cand.x_next,
            &state.f_curr,
            &cand.f_next,
        ) {
            let cert = Certificate::from_resolvent(cand.x_next.clone(), &cand.f_next, &cand.b_next);
            let next = IterState {
                x_prev: state.x_curr.clone(),
                x_curr: cand.x_next.clone(),
                f_prev: state.f_curr.clone(),
                f_curr: cand.f_next.clone(),
                gamma_prev: gamma,
                kappa_prev: kappa,
                t: state.t + 1,
            };
            let step = AcceptedStep {
                n_t: n,
                gamma,
                kappa,
                beta: cand.beta,
                alpha: cand.alpha,
                x_next: cand.x_next,
                f_next: cand.f_next,
                b_next: cand.b_next,
                cert,
            };
            return Ok((next, step));
        }
    }
    Err(Error::LineSearchStalled {
        iteration: state.t,
        backtracks: cfg.max_backtracks,
        best: None,
    })
}

/// Result of a successful strongly monotone solve.
#[derive(Clone, Debug)]
pub struct StrongReport {
    pub cert: Certificate,
    /// `F` at the returned point.
    pub f_at_x: RealVector,
    pub trace: Vec<TraceRecord>,
    pub iterations: usize,
    pub counts: EvalCounts,
    /// `F` evaluations spent before the first iteration (0 or 1).
    pub setup_f_evals: u64,
}

/// Solves from `x0`, spending one setup evaluation of `F(x0)`.
pub fn solve_strong(
    f: &PointMap,
    b: &ResolventMap,
    x0: &RealVector,
    cfg: &StrongSolverConfig,
) -> Result<StrongReport> {
    solve_strong_observed(f, b, x0, None, cfg, &mut |_, _| {})
}

/// Full-control entry point.
///
/// `f_x0`, when supplied, must equal `F(x0)` and saves the setup evaluation.
/// `observer` sees the pre-step state and the accepted step of every iteration.
pub fn solve_strong_observed(
    f: &PointMap,
    b: &ResolventMap,
    x0: &RealVector,
    f_x0: Option<RealVector>,
    cfg: &StrongSolverConfig,
    observer: &mut dyn FnMut(&IterState, &AcceptedStep),
) -> Result<StrongReport> {
    cfg.validate()?;
    if x0.dim() != f.dim() {
        return Err(Error::DimensionMismatch {
            expected: f.dim(),
            got: x0.dim(),
        });
    }
    let budget = EvalBudget::open(f, b, cfg.max_f_evals);
    let (f0, setup_f_evals) = match f_x0 {
        Some(v) => (v, 0),
        None => {
            budget.ensure_room(f).map_err(|used| Error::Budget {
                f_evals: used,
                best: None,
            })?;
            (f.eval(x0)?, 1)
        }
    };
    let mut state = IterState::start(x0.clone(), f0, cfg.gamma0, cfg.kappa_at(0)?);
    let mut trace = Vec::new();
    let mut best: Option<Certificate> = None;
    let mut zero_steps = 0;

    for _ in 0..cfg.max_iters {
        let (next, step) = match iterate(&state, cfg, f, b, &budget) {
            Ok(r) => r,
            Err(e) => return Err(attach_best(e, best)),
        };
        observer(&state, &step);
        let used = budget.used(f, b);
        trace.push(TraceRecord {
            t: state.t,
            n_t: step.n_t,
            gamma_t: step.gamma,
            residual: step.cert.residual,
            f_evals_cum: used.f_evals,
            resolvent_evals_cum: used.resolvent_evals,
        });
        if best.as_ref().is_none_or(|c| step.cert.residual < c.residual) {
            best = Some(step.cert.clone());
        }
        if step.cert.is_within(cfg.eps) {
            log::debug!(
                "strong solve converged: t = {}, residual = {:e}",
                state.t,
                step.cert.residual
            );
            return Ok(StrongReport {
                iterations: trace.len(),
                cert: step.cert,
                f_at_x: step.f_next,
                trace,
                counts: used,
                setup_f_evals,
            });
        }
        if step.x_next == state.x_curr {
            zero_steps += 1;
            if zero_steps >= STAGNATION_LIMIT {
                return Err(Error::Stagnation {
                    steps: zero_steps,
                    residual: step.cert.residual,
                    best: Box::new(best.expect("at least one step recorded")),
                });
            }
        } else {
            zero_steps = 0;
        }
        state = next;
    }
    let best = best.expect("max_iters ≥ 1");
    Err(Error::NonConvergence {
        iterations: cfg.max_iters,
        best_residual: best.residual,
        best: Box::new(best),
    })
}

fn attach_best(e: Error, best: Option<Certificate>) -> Error {
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
        e => e,
    }
}
