//! Fixed-step reference iterations: forward-backward splitting and
//! forward-reflected-backward splitting.
//!
//! Both stop on the same explicit residual certificate as the extrapolation
//! solvers, so evaluation counts are directly comparable. A run whose iterate
//! norm exceeds `10⁶·(1 + ‖x⁰‖)` is reported as diverged.

use crate::certificate::Certificate;
use crate::error::{Error, Result};
use crate::operator::{EvalBudget, EvalCounts, PointMap, ResolventMap, ResolventStep};
use crate::trace::TraceRecord;
use crate::vector::RealVector;

pub const DIVERGENCE_FACTOR: f64 = 1e6;

#[derive(Clone, Debug)]
pub struct BaselineConfig {
    pub step: f64,
    pub max_iters: usize,
    pub eps: f64,
    pub max_f_evals: Option<u64>,
}

impl BaselineConfig {
    pub fn new(step: f64, eps: f64) -> Self {
        BaselineConfig {
            step,
            max_iters: 1_000_000,
            eps,
            max_f_evals: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.step > 0.0 && self.step.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "step must be positive, got {}",
                self.step
            )));
        }
        if !(self.eps > 0.0 && self.eps.is_finite()) || self.max_iters == 0 {
            return Err(Error::InvalidParameter("eps and max_iters must be positive".into()));
        }
        Ok(())
    }
}

/// One forward-backward step `x⁺ = (I+γB)⁻¹(x − γF(x))` with its certificate.
/// Costs two evaluations of `F` (at `x` and at `x⁺`).
pub fn fbs_step(
    x: &RealVector,
    gamma: f64,
    f: &PointMap,
    b: &ResolventMap,
) -> Result<(RealVector, Certificate)> {
    let fx = f.eval(x)?;
    let step = b.apply(gamma, &x.add_scaled(-gamma, &fx))?;
    let f_next = f.eval(&step.point)?;
    let cert = Certificate::from_resolvent(step.point.clone(), &f_next, &step.element);
    Ok((step.point, cert))
}

/// `x⁺ = (I+γB)⁻¹(x − γF(x) − γ₋(F(x) − F(x₋)))`. The caller owns the `F` caches.
#[allow(clippy::too_many_arguments)]
pub fn frbs_step(
    x: &RealVector,
    x_prev: &RealVector,
    f_x: &RealVector,
    f_prev: &RealVector,
    gamma: f64,
    gamma_prev: f64,
    b: &ResolventMap,
) -> Result<ResolventStep> {
    debug_assert_eq!(x.dim(), x_prev.dim());
    let u: Vec<f64> = x
        .iter()
        .zip(f_x.iter().zip(f_prev.iter()))
        .map(|(xi, (fx, fp))| xi - gamma * fx - gamma_prev * (fx - fp))
        .collect();
    b.apply(gamma, &RealVector::new(u)?)
}

#[derive(Clone, Debug)]
pub struct BaselineReport {
    pub cert: Certificate,
    pub trace: Vec<TraceRecord>,
    pub iterations: usize,
    pub counts: EvalCounts,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Method {
    Fbs,
    Frbs,
}

pub fn solve_fbs(
    f: &PointMap,
    b: &ResolventMap,
    x0: &RealVector,
    cfg: &BaselineConfig,
) -> Result<BaselineReport> {
    run(Method::Fbs, f, b, x0, cfg)
}

pub fn solve_frbs(
    f: &PointMap,
    b: &ResolventMap,
    x0: &RealVector,
    cfg: &BaselineConfig,
) -> Result<BaselineReport> {
    run(Method::Frbs, f, b, x0, cfg)
}

fn run(
    method: Method,
    f: &PointMap,
    b: &ResolventMap,
    x0: &RealVector,
    cfg: &BaselineConfig,
) -> Result<BaselineReport> {
    cfg.validate()?;
    let budget = EvalBudget::open(f, b, cfg.max_f_evals);
    let threshold = DIVERGENCE_FACTOR * (1.0 + x0.norm());
    let gamma = cfg.step;
    let room = |best: &Option<Certificate>| {
        budget.ensure_room(f).map_err(|used| Error::Budget {
            f_evals: used,
            best: best.clone().map(Box::new),
        })
    };

    let mut best: Option<Certificate> = None;
    room(&best)?;
    let mut x = x0.clone();
    let mut fx = f.eval(&x)?;
    let mut x_prev = x.clone();
    let mut f_prev = fx.clone();
    let mut trace = Vec::new();

    for t in 1..=cfg.max_iters {
        room(&best)?;
        let step = match method {
            Method::Fbs => b.apply(gamma, &x.add_scaled(-gamma, &fx)),
            Method::Frbs => frbs_step(&x, &x_prev, &fx, &f_prev, gamma, gamma, b),
        };
        let step = step.map_err(|e| as_divergence(e, t, threshold))?;
        let norm = step.point.norm();
        if norm > threshold {
            return Err(Error::Diverged {
                iteration: t,
                norm,
                threshold,
            });
        }
        let f_next = f.eval(&step.point).map_err(|e| as_divergence(e, t, threshold))?;
        let cert = Certificate::from_resolvent(step.point.clone(), &f_next, &step.element);
        let used = budget.used(f, b);
        trace.push(TraceRecord {
            t,
            n_t: 0,
            gamma_t: gamma,
            residual: cert.residual,
            f_evals_cum: used.f_evals,
            resolvent_evals_cum: used.resolvent_evals,
        });
        if cert.is_within(cfg.eps) {
            return Ok(BaselineReport {
                cert,
                iterations: trace.len(),
                trace,
                counts: used,
            });
        }
        if best.as_ref().is_none_or(|c| cert.residual < c.residual) {
            best = Some(cert);
        }
        x_prev = std::mem::replace(&mut x, step.point);
        f_prev = std::mem::replace(&mut fx, f_next);
    }
    let best = best.expect("max_iters ≥ 1");
    Err(Error::NonConvergence {
        iterations: cfg.max_iters,
        best_residual: best.residual,
        best: Box::new(best),
    })
}

fn as_divergence(e: Error, iteration: usize, threshold: f64) -> Error {
    match e {
        Error::NonFinite { .. } => Error::Diverged {
            iteration,
            norm: f64::INFINITY,
            threshold,
        },
        e => e,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oplib::ProxEntry;

    fn v(x: &[f64]) -> RealVector {
        RealVector::from_slice(x).unwrap()
    }

    fn zero_b() -> ResolventMap {
        ResolventMap::new(ProxEntry::Zero)
    }

    #[test]
    fn fbs_examples() {
        let id = PointMap::from_fn(1, |x, o| o[0] = x[0]);
        assert_eq!(fbs_step(&v(&[1.0]), 0.5, &id, &zero_b()).unwrap().0, v(&[0.5]));

        let zero = PointMap::from_fn(1, |_, o| o[0] = 0.0);
        let orthant = ResolventMap::new(ProxEntry::NonnegOrthant);
        assert_eq!(fbs_step(&v(&[-1.0]), 1.0, &zero, &orthant).unwrap().0, v(&[0.0]));

        let cube = PointMap::from_fn(1, |x, o| o[0] = x[0].powi(3));
        let (x, _) = fbs_step(&v(&[2.0]), 0.1, &cube, &zero_b()).unwrap();
        assert!((x[0] - 1.2).abs() < 1e-15);
    }

    #[test]
    fn frbs_examples() {
        let b = zero_b();
        let x = v(&[1.0]);
        let p = frbs_step(&x, &v(&[2.0]), &v(&[1.0]), &v(&[2.0]), 0.25, 0.25, &b).unwrap();
        assert_eq!(p.point, v(&[1.0]));

        // Startup: x = x_prev reduces to the forward-backward step, bit for bit.
        let cube = PointMap::from_fn(1, |x, o| o[0] = x[0].powi(3) - 0.3 * x[0]);
        let x = v(&[1.7]);
        let fx = cube.eval(&x).unwrap();
        let frbs = frbs_step(&x, &x, &fx, &fx, 0.1, 0.1, &b).unwrap().point;
        let fbs = fbs_step(&x, 0.1, &cube, &b).unwrap().0;
        assert_eq!(frbs, fbs);
    }

    #[test]
    fn frbs_cubic_small_step_converges() {
        let cube = PointMap::from_fn(1, |x, o| o[0] = x[0].powi(3));
        let r = solve_frbs(&cube, &zero_b(), &v(&[1.5]), &BaselineConfig::new(0.05, 1e-4)).unwrap();
        assert!(r.cert.x[0].abs() < 0.05);
    }

    #[test]
    fn frbs_cubic_large_start_diverges() {
        // x¹ = 10 − 0.1·1000 = −90, then |x| explodes.
        let cube = PointMap::from_fn(1, |x, o| o[0] = x[0].powi(3));
        let err = solve_frbs(&cube, &zero_b(), &v(&[10.0]), &BaselineConfig::new(0.1, 1e-6))
            .unwrap_err();
        assert!(matches!(err, Error::Diverged { .. }));
    }

    #[test]
    fn fbs_identity_residual_decreases_monotonically() {
        let id = PointMap::from_fn(2, |x, o| o.copy_from_slice(x));
        let r = solve_fbs(&id, &zero_b(), &v(&[3.0, -4.0]), &BaselineConfig::new(1.0, 1e-8)).unwrap();
        assert_eq!(r.cert.residual, 0.0);
        let mut cfg = BaselineConfig::new(0.5, 1e-8);
        cfg.max_iters = 100;
        let r = solve_fbs(&id, &zero_b(), &v(&[3.0, -4.0]), &cfg).unwrap();
        assert!(r.trace.windows(2).all(|w| w[1].residual < w[0].residual));
    }

    #[test]
    fn frbs_one_eval_per_step() {
        let id = PointMap::from_fn(1, |x, o| o[0] = 2.0 * x[0]);
        let b = zero_b();
        let r = solve_frbs(&id, &b, &v(&[1.0]), &BaselineConfig::new(0.2, 1e-10)).unwrap();
        assert_eq!(r.counts.f_evals, 1 + r.iterations as u64);
        assert_eq!(r.counts.resolvent_evals, r.iterations as u64);
        assert_eq!(id.eval_count(), r.counts.f_evals);
    }
}
