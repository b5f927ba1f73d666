use super::{
    exit_code, fmt_float, problem_file, termination_reason, write_output, Algo, SolveArgs,
    SolverArgs, EXIT_OK,
};
use crate::adapters::{extract_kkt, KktReport};
use crate::baselines::{solve_fbs, solve_frbs, BaselineConfig};
use crate::certificate::Certificate;
use crate::error::{Error, Result};
use crate::operator::EvalCounts;
use crate::pde_general::{solve_general, GeneralSolverConfig};
use crate::pde_strong::{solve_strong_observed, StrongSolverConfig};
use crate::problems::{builtin_seeded, Instance};
use serde::Serialize;
use std::path::Path;
use std::time::Instant;

/// `builtin:<name>` or a JSON file path.
pub fn load_problem(spec: &str, seed: Option<u64>) -> Result<Instance> {
    match spec.strip_prefix("builtin:") {
        Some(name) => builtin_seeded(name, seed),
        None => problem_file::load(Path::new(spec)),
    }
}

/// One trace CSV row. `outer` is `(k, ρ_k, τ_k, ‖z^{k+1} − z^k‖)` for `pde`.
#[derive(Clone, Debug, PartialEq)]
pub struct TraceRow {
    pub t: usize,
    pub n_t: usize,
    pub gamma_t: f64,
    pub residual: f64,
    pub f_evals_cum: u64,
    pub resolvent_evals_cum: u64,
    pub outer: Option<(usize, f64, f64, f64)>,
}

/// Everything a solve produced, whether or not it succeeded.
#[derive(Debug)]
pub struct Outcome {
    pub algo: Algo,
    pub rows: Vec<TraceRow>,
    /// Accepted steps; outer iterations for `pde`.
    pub iterations: usize,
    /// Total inner steps for `pde`.
    pub inner_iterations: Option<usize>,
    pub counts: EvalCounts,
    /// Final certificate, or the best one seen on failure.
    pub cert: Option<Certificate>,
    pub error: Option<Error>,
}

impl Outcome {
    pub fn exit_code(&self) -> i32 {
        self.error.as_ref().map_or(EXIT_OK, exit_code)
    }

    pub fn converged(&self) -> bool {
        self.error.is_none()
    }
}

enum Resolved {
    Strong(StrongSolverConfig),
    General(GeneralSolverConfig),
    Baseline(BaselineConfig),
}

fn resolve(inst: &Instance, args: &SolverArgs) -> Result<Resolved> {
    if !(args.eps > 0.0 && args.eps.is_finite()) {
        return Err(Error::InvalidParameter(format!("eps must be positive, got {}", args.eps)));
    }
    Ok(match args.algo {
        Algo::PdeStrong => {
            let mu = args.mu.unwrap_or(inst.mu);
            if !(mu > 0.0 && mu.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "pde-strong needs mu > 0, problem {} has mu = {mu}",
                    inst.name
                )));
            }
            Resolved::Strong(args.strong_config(mu)?)
        }
        Algo::Pde => Resolved::General(args.general_config()?),
        Algo::Fbs | Algo::Frbs => Resolved::Baseline(args.baseline_config()?),
    })
}

/// Checks that `args` yields a valid solver configuration for `inst`.
pub(super) fn check_config(inst: &Instance, args: &SolverArgs) -> Result<()> {
    resolve(inst, args).map(|_| ())
}

/// Runs the selected solver. Configuration problems are returned as `Err`;
/// solver failures are recorded in the outcome.
pub fn execute(inst: &Instance, args: &SolverArgs) -> Result<Outcome> {
    let resolved = resolve(inst, args)?;
    let (f0, b0) = (inst.f.eval_count(), inst.b.apply_count());
    let used = || EvalCounts {
        f_evals: inst.f.eval_count() - f0,
        resolvent_evals: inst.b.apply_count() - b0,
    };
    let mut out = Outcome {
        algo: args.algo,
        rows: Vec::new(),
        iterations: 0,
        inner_iterations: None,
        counts: EvalCounts::default(),
        cert: None,
        error: None,
    };
    match resolved {
        Resolved::Strong(cfg) => {
            let mut rows = Vec::new();
            let r = solve_strong_observed(&inst.f, &inst.b, &inst.x0, None, &cfg, &mut |state, step| {
                let c = used();
                rows.push(TraceRow {
                    t: state.t,
                    n_t: step.n_t,
                    gamma_t: step.gamma,
                    residual: step.cert.residual,
                    f_evals_cum: c.f_evals,
                    resolvent_evals_cum: c.resolvent_evals,
                    outer: None,
                });
            });
            out.rows = rows;
            match r {
                Ok(r) => out.cert = Some(r.cert),
                Err(e) => {
                    out.cert = e.best_certificate().cloned();
                    out.error = Some(e);
                }
            }
        }
        Resolved::General(cfg) => match solve_general(&inst.f, &inst.b, &inst.x0, &cfg) {
            Ok(r) => {
                let (mut t, mut fe, mut re) = (0, 0, 0);
                for (rec, inner) in r.outer_trace.iter().zip(&r.inner_traces) {
                    let last = inner.last().expect("inner solves take at least one step");
                    t += inner.len();
                    fe += rec.inner_f_evals;
                    re += last.resolvent_evals_cum;
                    out.rows.push(TraceRow {
                        t,
                        n_t: last.n_t,
                        gamma_t: last.gamma_t,
                        residual: rec.residual,
                        f_evals_cum: fe,
                        resolvent_evals_cum: re,
                        outer: Some((rec.k, rec.rho_k, rec.tau_k, rec.step_norm)),
                    });
                }
                out.inner_iterations = Some(r.inner_iterations());
                out.cert = Some(r.cert);
            }
            Err(e) => {
                out.cert = e.best_certificate().cloned();
                out.error = Some(e);
            }
        },
        Resolved::Baseline(cfg) => {
            let run = if args.algo == Algo::Fbs { solve_fbs } else { solve_frbs };
            match run(&inst.f, &inst.b, &inst.x0, &cfg) {
                Ok(r) => {
                    out.rows = r
                        .trace
                        .iter()
                        .map(|rec| TraceRow {
                            t: rec.t,
                            n_t: rec.n_t,
                            gamma_t: rec.gamma_t,
                            residual: rec.residual,
                            f_evals_cum: rec.f_evals_cum,
                            resolvent_evals_cum: rec.resolvent_evals_cum,
                            outer: None,
                        })
                        .collect();
                    out.cert = Some(r.cert);
                }
                Err(e) => {
                    out.cert = e.best_certificate().cloned();
                    out.error = Some(e);
                }
            }
        }
    }
    out.iterations = out.rows.len();
    out.counts = used();
    Ok(out)
}

pub fn trace_csv(out: &Outcome) -> String {
    let mut header = vec!["t", "n_t", "gamma_t", "residual", "f_evals_cum", "resolvent_evals_cum"];
    if out.algo == Algo::Pde {
        header.extend(["k", "rho_k", "tau_k", "step_norm"]);
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(&header).expect("in-memory write");
    for r in &out.rows {
        let mut rec = vec![
            r.t.to_string(),
            r.n_t.to_string(),
            fmt_float(r.gamma_t),
            fmt_float(r.residual),
            r.f_evals_cum.to_string(),
            r.resolvent_evals_cum.to_string(),
        ];
        if let Some((k, rho, tau, step)) = r.outer {
            rec.extend([k.to_string(), fmt_float(rho), fmt_float(tau), fmt_float(step)]);
        }
        w.write_record(&rec).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("ascii output")
}

#[derive(Serialize)]
struct Summary<'a> {
    solver: &'static str,
    problem: &'a str,
    config: &'a SolverArgs,
    termination: &'static str,
    message: Option<String>,
    exit_code: i32,
    residual: Option<f64>,
    x: Option<&'a [f64]>,
    iterations: usize,
    inner_iterations: Option<usize>,
    f_evals: u64,
    resolvent_evals: u64,
    kkt: Option<KktReport>,
    wall_time_s: f64,
}

pub(super) fn solve_command(args: &SolveArgs) -> Result<i32> {
    let mut inst = load_problem(&args.solver.problem, args.solver.seed)?;
    if let Some(mu) = args.solver.mu {
        inst.mu = mu;
    }
    let start = Instant::now();
    let out = execute(&inst, &args.solver)?;
    let wall = start.elapsed().as_secs_f64();

    if let Some(e) = &out.error {
        eprintln!("error: {e}");
    }
    log::info!(
        "{} on {}: {} after {} iterations, {} F evaluations",
        out.algo.name(),
        inst.name,
        termination_reason(out.error.as_ref()),
        out.iterations,
        out.counts.f_evals
    );
    if let Some(path) = &args.trace {
        write_output(Some(path), &trace_csv(&out))?;
    }
    let kkt = match (&out.cert, &inst.layout) {
        (Some(c), Some(l)) => extract_kkt(c, l).ok(),
        _ => None,
    };
    let summary = Summary {
        solver: out.algo.name(),
        problem: &inst.name,
        config: &args.solver,
        termination: termination_reason(out.error.as_ref()),
        message: out.error.as_ref().map(ToString::to_string),
        exit_code: out.exit_code(),
        residual: out.cert.as_ref().map(|c| c.residual),
        x: out.cert.as_ref().map(|c| c.x.as_slice()),
        iterations: out.iterations,
        inner_iterations: out.inner_iterations,
        f_evals: out.counts.f_evals,
        resolvent_evals: out.counts.resolvent_evals,
        kkt,
        wall_time_s: wall,
    };
    let mut json = serde_json::to_string_pretty(&summary).expect("summary serializes");
    json.push('\n');
    write_output(args.summary.as_deref(), &json)?;
    Ok(out.exit_code())
}
