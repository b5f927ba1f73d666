use super::run::check_config;
use super::{
    execute, load_problem, termination_reason, write_output, Algo, ScalingArgs, SolverArgs, EXIT_OK,
};
use crate::error::{Error, Result};
use serde::Serialize;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

/// One grid point of a scaling run.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScalingRow {
    pub eps: f64,
    pub termination: &'static str,
    pub iterations: usize,
    pub f_evals: u64,
    pub resolvent_evals: u64,
    pub residual: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    /// `None` when the responses are constant.
    pub r2: Option<f64>,
    pub points: usize,
}

/// Ordinary least squares `y ≈ slope·x + intercept`.
pub fn fit_line(xs: &[f64], ys: &[f64]) -> Option<LineFit> {
    let n = xs.len();
    if n < 2 || ys.len() != n {
        return None;
    }
    let mx = xs.iter().sum::<f64>() / n as f64;
    let my = ys.iter().sum::<f64>() / n as f64;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    Some(LineFit {
        slope,
        intercept: my - slope * mx,
        r2: (syy > 0.0).then(|| sxy * sxy / (sxx * syy)),
        points: n,
    })
}

/// Which quantities are fitted for `algo`: iterations against `log₁₀(1/ε)`
/// for the strongly monotone and fixed-step solvers, `ln f_evals` against
/// `ln(1/ε)` for the perturbation loop.
pub fn scaling_fit(algo: Algo, rows: &[ScalingRow]) -> (&'static str, &'static str, Option<LineFit>) {
    let ok: Vec<&ScalingRow> = rows.iter().filter(|r| r.termination == "converged").collect();
    match algo {
        Algo::Pde => {
            let xs: Vec<f64> = ok.iter().map(|r| (1.0 / r.eps).ln()).collect();
            let ys: Vec<f64> = ok.iter().map(|r| (r.f_evals as f64).ln()).collect();
            ("ln(1/eps)", "ln(f_evals)", fit_line(&xs, &ys))
        }
        _ => {
            let xs: Vec<f64> = ok.iter().map(|r| (1.0 / r.eps).log10()).collect();
            let ys: Vec<f64> = ok.iter().map(|r| r.iterations as f64).collect();
            ("log10(1/eps)", "iterations", fit_line(&xs, &ys))
        }
    }
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() || grid.iter().any(|e| !(*e > 0.0 && e.is_finite())) {
        return Err(Error::InvalidParameter("eps grid must hold positive numbers".into()));
    }
    if grid.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidParameter("eps grid must be strictly descending".into()));
    }
    Ok(())
}

/// Runs every grid point on its own fresh instance, `threads` at a time.
pub fn run_grid(args: &ScalingArgs) -> Result<Vec<ScalingRow>> {
    check_grid(&args.eps_grid)?;
    // Fail on configuration before spawning anything.
    let mut probe = load_problem(&args.solver.problem, args.solver.seed)?;
    if let Some(mu) = args.solver.mu {
        probe.mu = mu;
    }
    for &eps in &args.eps_grid {
        check_config(&probe, &SolverArgs { eps, ..args.solver.clone() })?;
    }

    let grid = &args.eps_grid;
    let workers = args
        .threads
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
        .clamp(1, grid.len());
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<Result<ScalingRow>>>> =
        Mutex::new((0..grid.len()).map(|_| None).collect());
    std::thread::scope(|s| {
        for _ in 0..workers {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                if i >= grid.len() {
                    break;
                }
                let mut a = args.solver.clone();
                a.eps = grid[i];
                let row = load_problem(&a.problem, a.seed).and_then(|mut inst| {
                    if let Some(mu) = a.mu {
                        inst.mu = mu;
                    }
                    let out = execute(&inst, &a)?;
                    Ok(ScalingRow {
                        eps: grid[i],
                        termination: termination_reason(out.error.as_ref()),
                        iterations: out.iterations,
                        f_evals: out.counts.f_evals,
                        resolvent_evals: out.counts.resolvent_evals,
                        residual: out.cert.as_ref().map(|c| c.residual),
                    })
                });
                slots.lock().expect("no worker panics while holding the lock")[i] = Some(row);
            });
        }
    });
    slots
        .into_inner()
        .expect("workers joined")
        .into_iter()
        .map(|r| r.expect("every grid point ran"))
        .collect()
}

pub fn table_csv(rows: &[ScalingRow]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["eps", "iterations", "f_evals", "resolvent_evals", "residual", "termination"])
        .expect("in-memory write");
    for r in rows {
        w.write_record([
            super::fmt_float(r.eps),
            r.iterations.to_string(),
            r.f_evals.to_string(),
            r.resolvent_evals.to_string(),
            r.residual.map(super::fmt_float).unwrap_or_default(),
            r.termination.to_string(),
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("ascii output")
}

#[derive(Serialize)]
struct ScalingSummary<'a> {
    problem: &'a str,
    solver: &'static str,
    x: &'static str,
    y: &'static str,
    fit: Option<LineFit>,
    rows: &'a [ScalingRow],
}

pub(super) fn scaling_command(args: &ScalingArgs) -> Result<i32> {
    let rows = run_grid(args)?;
    write_output(args.output.as_deref(), &table_csv(&rows))?;
    let (x, y, fit) = scaling_fit(args.solver.algo, &rows);
    match &fit {
        Some(f) => eprintln!(
            "fit {y} vs {x}: slope {:.4}, r2 {}",
            f.slope,
            f.r2.map_or("n/a (constant)".into(), |r| format!("{r:.4}"))
        ),
        None => eprintln!("fit {y} vs {x}: fewer than two distinct converged points"),
    }
    if let Some(path) = &args.summary {
        let summary = ScalingSummary {
            problem: &args.solver.problem,
            solver: args.solver.algo.name(),
            x,
            y,
            fit,
            rows: &rows,
        };
        let mut json = serde_json::to_string_pretty(&summary).expect("summary serializes");
        json.push('\n');
        write_output(Some(path), &json)?;
    }
    Ok(EXIT_OK)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_line() {
        let f = fit_line(&[1.0, 2.0, 3.0], &[3.0, 5.0, 7.0]).unwrap();
        assert!((f.slope - 2.0).abs() < 1e-12 && (f.intercept - 1.0).abs() < 1e-12);
        assert_eq!(f.r2, Some(1.0));
        assert_eq!(fit_line(&[1.0, 2.0], &[4.0, 4.0]).unwrap().r2, None);
        assert!(fit_line(&[1.0], &[1.0]).is_none());
    }

    #[test]
    fn grid_must_descend() {
        assert!(check_grid(&[1e-2, 1e-3]).is_ok());
        assert!(check_grid(&[1e-3, 1e-2]).is_err());
        assert!(check_grid(&[1e-2, -1.0]).is_err());
    }
}
