use super::{load_problem, ValidateArgs, EXIT_FAILED, EXIT_OK};
use crate::error::Result;
use crate::operator::check_monotonicity_sample;
use crate::problems::Instance;
use crate::vector::{dot, RealVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Result of one validation property; `passed` is `None` when it does not
/// apply to the instance.
#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: Option<bool>,
    pub detail: String,
}

impl Check {
    fn new(name: &'static str, passed: Option<bool>, detail: String) -> Self {
        Check { name, passed, detail }
    }

    pub fn line(&self) -> String {
        let tag = match self.passed {
            Some(true) => "PASS",
            Some(false) => "FAIL",
            None => "SKIP",
        };
        format!("{tag} {}: {}", self.name, self.detail)
    }
}

/// Random points around `center` at scales 0.1, 1 and 10.
fn sample_point(rng: &mut ChaCha8Rng, center: &RealVector) -> RealVector {
    let scale = [0.1, 1.0, 10.0][rng.gen_range(0..3)];
    let v = center.iter().map(|c| c + scale * rng.gen_range(-1.0..1.0)).collect();
    RealVector::new(v).expect("finite sample")
}

fn centers(inst: &Instance) -> Vec<RealVector> {
    let mut c = vec![inst.x0.clone()];
    c.extend(inst.x_star.clone());
    c
}

pub fn validate_instance(inst: &Instance, samples: usize, seed: u64) -> Vec<Check> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let centers = centers(inst);
    let pick = |rng: &mut ChaCha8Rng| {
        let c = &centers[rng.gen_range(0..centers.len())];
        sample_point(rng, c)
    };
    let mut checks = Vec::new();

    let pairs: Vec<_> = (0..samples)
        .map(|_| {
            let x = pick(&mut rng);
            (x.clone(), pick(&mut rng))
        })
        .filter(|(x, y)| inst.f.in_domain(x) && inst.f.in_domain(y))
        .collect();
    checks.push(match check_monotonicity_sample(&inst.f, inst.mu, &pairs) {
        Ok(ok) => Check::new(
            "monotonicity",
            Some(ok),
            format!("{} pairs, mu = {}", pairs.len(), inst.mu),
        ),
        Err(e) => Check::new("monotonicity", Some(false), e.to_string()),
    });

    let mut identity_err: f64 = 0.0;
    let mut firm_ok = true;
    let mut failure = None;
    for _ in 0..samples {
        let gamma = [0.1, 1.0, 10.0][rng.gen_range(0..3)];
        let (u, w) = (pick(&mut rng), pick(&mut rng));
        match (inst.b.apply(gamma, &u), inst.b.apply(gamma, &w)) {
            (Ok(su), Ok(sw)) => {
                let recon = su.point.add_scaled(gamma, &su.element);
                identity_err = identity_err.max(recon.distance(&u) / (1.0 + u.norm()));
                let dp = su.point.sub(&sw.point);
                let du = u.sub(&w);
                if dot(&dp, &dp) > dot(&dp, &du) + 1e-12 * (1.0 + dot(&du, &du)) {
                    firm_ok = false;
                }
            }
            (Err(e), _) | (_, Err(e)) => failure = Some(e.to_string()),
        }
    }
    match failure {
        Some(msg) => checks.push(Check::new("resolvent_identity", Some(false), msg)),
        None => {
            checks.push(Check::new(
                "resolvent_identity",
                Some(identity_err <= 1e-12),
                format!("max relative |u − (J(u) + γ·b)| = {identity_err:e}"),
            ));
            checks.push(Check::new(
                "resolvent_firm_nonexpansive",
                Some(firm_ok),
                format!("{samples} pairs"),
            ));
        }
    }

    checks.push(if inst.potential.is_some() {
        let mut worst: f64 = 0.0;
        let mut err = None;
        for _ in 0..100 {
            let x = pick(&mut rng);
            if !inst.f.in_domain(&x) {
                continue;
            }
            match inst.fd_error(&x).expect("potential present") {
                Ok(e) => worst = worst.max(e),
                Err(e) => err = Some(e.to_string()),
            }
        }
        match err {
            Some(msg) => Check::new("gradient_fd", Some(false), msg),
            None => Check::new(
                "gradient_fd",
                Some(worst <= 1e-5),
                format!("max relative central-difference error {worst:e} at 100 points"),
            ),
        }
    } else {
        Check::new("gradient_fd", None, "no potential for this operator".into())
    });

    checks.push(match inst.star_certificate() {
        Some(Ok(c)) => Check::new(
            "solution_certificate",
            Some(c.residual <= 1e-9),
            format!("residual {:e} at the reference solution ({})", c.residual, inst.oracle),
        ),
        Some(Err(e)) => Check::new("solution_certificate", Some(false), e.to_string()),
        None => Check::new("solution_certificate", None, "no reference solution".into()),
    });
    checks
}

pub(super) fn validate_command(args: &ValidateArgs) -> Result<i32> {
    let mut inst = load_problem(&args.problem, args.seed)?;
    if let Some(mu) = args.mu {
        inst.mu = mu;
    }
    println!("problem {} (dimension {})", inst.name, inst.dim());
    let checks = validate_instance(&inst, args.samples, args.seed.unwrap_or(0));
    for c in &checks {
        println!("{}", c.line());
    }
    Ok(if checks.iter().any(|c| c.passed == Some(false)) {
        EXIT_FAILED
    } else {
        EXIT_OK
    })
}
