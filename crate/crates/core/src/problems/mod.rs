//! Small test instances with independently computed solutions.
//!
//! Every instance is addressable by name (see [`builtin`]); random families
//! carry their seed in the name so runs are reproducible bit for bit.

pub mod oracles;

use crate::adapters::{
    conic_to_mi, saddle_to_mi, vi_to_mi, AffineMap, ConicProgram, KktLayout, QuadraticFunction,
    QuadraticSaddle, SaddleFunction, SaddleProblem, VIProblem,
};
use crate::certificate::Certificate;
use crate::error::{Error, Result};
use crate::oplib::{Cone, ConeProduct, Matrix, ProxEntry};
use crate::operator::{PointMap, ResolventMap};
use crate::vector::{norm, RealVector};
use oracles::{bisection, fd_gradient, AffineBoxSystem};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::fmt;
use std::sync::Arc;

/// Names accepted by [`builtin`] that the test suites iterate over.
pub const BUILTINS: &[&str] = &[
    "cubic_a0",
    "cubic_a1",
    "cubic_a10",
    "skew_bilinear_n1",
    "skew_bilinear_n3",
    "quartic_saddle_n2",
    "qp_hand",
    "qp_n2_m2_s7",
    "vi_cubic_interval",
    "affine_box2",
    "zero",
];

const DEFAULT_SKEW_SEED: u64 = 42;
const DEFAULT_QP_SEED: u64 = 7;

pub type ScalarFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// A scalar function whose signed partial derivatives are `F`:
/// `F_i(w) = signs[i]·∂φ/∂w_i`. Used for finite-difference checks.
#[derive(Clone)]
pub struct Potential {
    pub phi: ScalarFn,
    pub signs: Vec<f64>,
}

impl fmt::Debug for Potential {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Potential").field("signs", &self.signs).finish_non_exhaustive()
    }
}

#[derive(Clone, Debug)]
pub struct Instance {
    pub name: String,
    pub f: PointMap,
    pub b: ResolventMap,
    pub mu: f64,
    pub x0: RealVector,
    pub x_star: Option<RealVector>,
    /// How `x_star` was obtained.
    pub oracle: String,
    pub layout: Option<KktLayout>,
    pub potential: Option<Potential>,
}

impl Instance {
    pub fn dim(&self) -> usize {
        self.f.dim()
    }

    /// An explicit certificate near `x_star`: one resolvent step from
    /// `x* − F(x*)` returns `x*` for a solution, with element `≈ −F(x*)`.
    pub fn star_certificate(&self) -> Option<Result<Certificate>> {
        let x_star = self.x_star.as_ref()?;
        Some((|| {
            let fx = self.f.eval(x_star)?;
            let step = self.b.apply(1.0, &x_star.sub(&fx))?;
            let f_p = self.f.eval(&step.point)?;
            Ok(Certificate::from_resolvent(step.point, &f_p, &step.element))
        })())
    }

    /// Largest `|F_i − FD_i| / (1 + |F_i|)` at `x`, if a potential is known.
    pub fn fd_error(&self, x: &RealVector) -> Option<Result<f64>> {
        let pot = self.potential.as_ref()?;
        Some(self.f.eval(x).map(|fx| {
            let fd = fd_gradient(&*pot.phi, x);
            fx.iter()
                .zip(fd.iter().zip(&pot.signs))
                .map(|(a, (d, s))| (a - s * d).abs() / (1.0 + a.abs()))
                .fold(0.0, f64::max)
        }))
    }
}

fn vector(x: Vec<f64>) -> RealVector {
    RealVector::new(x).expect("instance data is finite and non-empty")
}

/// `F(x) = x³ + x − a`, `B = 0`, `μ = 1`, `x⁰ = 10`.
pub fn make_cubic_scalar(a: f64) -> Instance {
    let bracket = 1.0 + a.abs();
    let root = bisection(|x| x * x * x + x - a, -bracket, bracket, 1e-13);
    Instance {
        name: format!("cubic_a{a}"),
        f: PointMap::from_fn(1, move |x, o| o[0] = x[0] * x[0] * x[0] + x[0] - a),
        b: ResolventMap::new(ProxEntry::Zero),
        mu: 1.0,
        x0: vector(vec![10.0]),
        x_star: Some(vector(vec![root])),
        oracle: "bisection on x³ + x − a to 1e-13".into(),
        layout: None,
        potential: Some(Potential {
            phi: Arc::new(move |x| 0.25 * x[0].powi(4) + 0.5 * x[0] * x[0] - a * x[0]),
            signs: vec![1.0],
        }),
    }
}

/// `F(x, y) = (Ay, −Aᵀx)` with a random `A` whose singular values are at least
/// 0.1; for `n = 1` the coupling is `A = (1)`.
pub fn make_skew_bilinear(n: usize, seed: u64) -> Result<Instance> {
    if n == 0 {
        return Err(Error::InvalidParameter("n must be at least 1".into()));
    }
    let a = if n == 1 {
        Matrix::from_element(1, 1, 1.0)
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        loop {
            let a = Matrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
            if a.singular_values().min() >= 0.1 {
                break a;
            }
        }
    };
    let phi_a = a.clone();
    let mi = saddle_to_mi(&SaddleProblem::unconstrained(Arc::new(QuadraticSaddle::bilinear(a))))?;
    let name = if n == 1 {
        "skew_bilinear_n1".to_string()
    } else {
        format!("skew_bilinear_n{n}_s{seed}")
    };
    Ok(Instance {
        name,
        f: mi.f,
        b: mi.b,
        mu: 0.0,
        x0: vector(vec![1.0; 2 * n]),
        x_star: Some(RealVector::zeros(2 * n)),
        oracle: "origin: A has full rank, so (Ay, −Aᵀx) = 0 only at 0".into(),
        layout: Some(mi.layout),
        potential: Some(Potential {
            phi: Arc::new(move |w| {
                let (x, y) = w.split_at(n);
                let ay = &phi_a * nalgebra::DVector::from_column_slice(y);
                x.iter().zip(ay.iter()).map(|(p, q)| p * q).sum()
            }),
            signs: [vec![1.0; n], vec![-1.0; n]].concat(),
        }),
    })
}

/// `f(x, y) = ¼‖x‖⁴ + xᵀy − ¼‖y‖⁴`.
struct QuarticSaddle(usize);

impl QuarticSaddle {
    fn value(x: &[f64], y: &[f64]) -> f64 {
        let sq = |v: &[f64]| v.iter().map(|t| t * t).sum::<f64>();
        0.25 * sq(x).powi(2) + x.iter().zip(y).map(|(a, b)| a * b).sum::<f64>() - 0.25 * sq(y).powi(2)
    }
}

impl SaddleFunction for QuarticSaddle {
    fn dims(&self) -> (usize, usize) {
        (self.0, self.0)
    }

    fn value(&self, x: &[f64], y: &[f64]) -> f64 {
        QuarticSaddle::value(x, y)
    }

    fn grad_x(&self, x: &[f64], y: &[f64], out: &mut [f64]) {
        let s: f64 = x.iter().map(|t| t * t).sum();
        for i in 0..out.len() {
            out[i] = s * x[i] + y[i];
        }
    }

    fn grad_y(&self, x: &[f64], y: &[f64], out: &mut [f64]) {
        let s: f64 = y.iter().map(|t| t * t).sum();
        for i in 0..out.len() {
            out[i] = x[i] - s * y[i];
        }
    }
}

/// `F(x, y) = (‖x‖²x + y, −x + ‖y‖²y)`, `B = 0`, solution at the origin.
pub fn make_quartic_saddle(n: usize) -> Result<Instance> {
    if n == 0 {
        return Err(Error::InvalidParameter("n must be at least 1".into()));
    }
    let mi = saddle_to_mi(&SaddleProblem::unconstrained(Arc::new(QuarticSaddle(n))))?;
    Ok(Instance {
        name: format!("quartic_saddle_n{n}"),
        f: mi.f,
        b: mi.b,
        mu: 0.0,
        x0: vector(vec![1.0; 2 * n]),
        x_star: Some(RealVector::zeros(2 * n)),
        oracle: "origin: ⟨F(w), w⟩ = ‖x‖⁴ + ‖y‖⁴ vanishes only at 0".into(),
        layout: Some(mi.layout),
        potential: Some(Potential {
            phi: Arc::new(move |w| {
                let (x, y) = w.split_at(n);
                QuarticSaddle::value(x, y)
            }),
            signs: [vec![1.0; n], vec![-1.0; n]].concat(),
        }),
    })
}

/// The data of a box- and inequality-constrained QP
/// `min ½xᵀQx + qᵀx` s.t. `lo ≤ x ≤ hi`, `Ax ≤ b`.
#[derive(Clone, Debug)]
pub struct QpData {
    pub system: AffineBoxSystem,
}

impl QpData {
    fn n(&self) -> usize {
        self.system.c.len()
    }

    fn m(&self) -> usize {
        self.system.b.len()
    }

    /// Random strongly convex instance; `Ax ≤ b` is strictly feasible by
    /// construction.
    pub fn random(n: usize, m: usize, rng: &mut ChaCha8Rng) -> Self {
        let g = Matrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
        let q_mat = g.tr_mul(&g) + Matrix::identity(n, n) * 0.5;
        let c: Vec<f64> = (0..n).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let a = Matrix::from_fn(m, n, |_, _| rng.gen_range(-1.0..1.0));
        let x_feas: Vec<f64> = (0..n).map(|_| rng.gen_range(-0.5..0.5)).collect();
        let ax = &a * nalgebra::DVector::from_column_slice(&x_feas);
        let b = (0..m).map(|i| ax[i] + rng.gen_range(0.0..0.5)).collect();
        QpData {
            system: AffineBoxSystem {
                m_mat: q_mat,
                c,
                a,
                b,
                lo: vec![-1.0; n],
                hi: vec![1.0; n],
            },
        }
    }

    pub fn program(&self) -> Result<ConicProgram> {
        let s = &self.system;
        let m = self.m();
        let p = if s.lo.iter().chain(&s.hi).all(|v| v.is_infinite()) {
            ProxEntry::Zero
        } else {
            ProxEntry::boxed(s.lo.clone(), s.hi.clone())?
        };
        let (g, k): (Option<Arc<dyn crate::adapters::ConstraintMap>>, _) = if m == 0 {
            (None, ConeProduct::new(vec![])?)
        } else {
            let neg_b = s.b.iter().map(|v| -v).collect();
            (
                Some(Arc::new(AffineMap::new(s.a.clone(), neg_b)?)),
                ConeProduct::new(vec![Cone::Nonneg(m)])?,
            )
        };
        Ok(ConicProgram {
            f: Arc::new(QuadraticFunction::new(s.m_mat.clone(), s.c.clone())?),
            p,
            g,
            k,
        })
    }

    fn into_instance(self, name: String, oracle: &str) -> Result<Instance> {
        let kkt = self
            .system
            .solve_unique()
            .ok_or_else(|| Error::InvalidParameter(format!("{name}: no unique KKT point")))?;
        let mi = conic_to_mi(&self.program()?)?;
        let (n, m) = (self.n(), self.m());
        let s = self.system.clone();
        Ok(Instance {
            name,
            f: mi.f,
            b: mi.b,
            mu: 0.0,
            x0: RealVector::zeros(n + m),
            x_star: Some(vector([kkt.x, kkt.lambda].concat())),
            oracle: oracle.into(),
            layout: Some(mi.layout),
            potential: Some(Potential {
                phi: Arc::new(move |w| {
                    let (x, l) = w.split_at(n);
                    let xv = nalgebra::DVector::from_column_slice(x);
                    let qx = &s.m_mat * &xv;
                    let ax = &s.a * &xv;
                    0.5 * qx.dot(&xv)
                        + s.c.iter().zip(x).map(|(a, b)| a * b).sum::<f64>()
                        + (0..m).map(|i| l[i] * (ax[i] - s.b[i])).sum::<f64>()
                }),
                signs: [vec![1.0; n], vec![-1.0; m]].concat(),
            }),
        })
    }
}

/// A random QP reduced to `(x, λ)` form. Draws from the seeded stream until
/// the enumeration oracle finds a unique KKT pair.
pub fn make_qp_conic(n: usize, m: usize, seed: u64) -> Result<Instance> {
    if n == 0 || n > 6 || m > 6 {
        return Err(Error::InvalidParameter(format!(
            "qp instances need 1 ≤ n ≤ 6 and m ≤ 6, got n={n}, m={m}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..100 {
        let data = QpData::random(n, m, &mut rng);
        if data.system.solve_unique().is_some() {
            return data.into_instance(
                format!("qp_n{n}_m{m}_s{seed}"),
                "active-set enumeration over box bounds and inequality subsets",
            );
        }
    }
    Err(Error::InvalidParameter(format!(
        "no instance with a unique KKT point for seed {seed}"
    )))
}

/// `min ½(x − 2)²` s.t. `x ≤ 1`: `(x*, λ*) = (1, 1)`.
pub fn make_qp_hand() -> Instance {
    QpData {
        system: AffineBoxSystem {
            m_mat: Matrix::identity(1, 1),
            c: vec![-2.0],
            a: Matrix::identity(1, 1),
            b: vec![1.0],
            lo: vec![f64::NEG_INFINITY],
            hi: vec![f64::INFINITY],
        },
    }
    .into_instance("qp_hand".into(), "hand KKT, confirmed by enumeration")
    .expect("hand instance is well posed")
}

/// `F(x) = x³` with `g` the indicator of `[1, 2]`: solution `x* = 1`.
pub fn make_vi_cubic_interval() -> Instance {
    let (f, b) = vi_to_mi(&VIProblem {
        f: PointMap::from_fn(1, |x, o| o[0] = x[0] * x[0] * x[0]),
        g: ProxEntry::Box {
            lo: vec![1.0],
            hi: vec![2.0],
        },
    })
    .expect("dimensions agree");
    Instance {
        name: "vi_cubic_interval".into(),
        f,
        b,
        mu: 0.0,
        x0: vector(vec![2.0]),
        x_star: Some(vector(vec![1.0])),
        oracle: "F > 0 on [1, 2], so the lower end point is the only solution".into(),
        layout: None,
        potential: Some(Potential {
            phi: Arc::new(|x| 0.25 * x[0].powi(4)),
            signs: vec![1.0],
        }),
    }
}

/// `F(x) = (I + J)x + c` with `J` the quarter rotation, on the unit box:
/// strongly monotone with `μ = 1`.
pub fn make_affine_box2() -> Instance {
    let m_mat = Matrix::from_row_slice(2, 2, &[1.0, -1.0, 1.0, 1.0]);
    let c = vec![-2.0, 0.5];
    let system = AffineBoxSystem {
        m_mat: m_mat.clone(),
        c: c.clone(),
        a: Matrix::zeros(0, 2),
        b: vec![],
        lo: vec![0.0; 2],
        hi: vec![1.0; 2],
    };
    let kkt = system.solve_unique().expect("strongly monotone affine VI");
    Instance {
        name: "affine_box2".into(),
        f: PointMap::from_fn(2, move |x, o| {
            o[0] = m_mat[(0, 0)] * x[0] + m_mat[(0, 1)] * x[1] + c[0];
            o[1] = m_mat[(1, 0)] * x[0] + m_mat[(1, 1)] * x[1] + c[1];
        }),
        b: ResolventMap::new(ProxEntry::Box {
            lo: vec![0.0; 2],
            hi: vec![1.0; 2],
        }),
        mu: 1.0,
        x0: vector(vec![1.0, 1.0]),
        x_star: Some(vector(kkt.x)),
        oracle: "enumeration of the 9 box faces".into(),
        layout: None,
        potential: None,
    }
}

/// `F = 0`, `B = 0`: every point solves it.
pub fn make_zero() -> Instance {
    let x0 = vector(vec![1.0, -1.0]);
    Instance {
        name: "zero".into(),
        f: PointMap::from_fn(2, |_, o| o.fill(0.0)),
        b: ResolventMap::new(ProxEntry::Zero),
        mu: 0.0,
        x_star: Some(x0.clone()),
        x0,
        oracle: "every point is a solution".into(),
        layout: None,
        potential: Some(Potential {
            phi: Arc::new(|_| 0.0),
            signs: vec![1.0; 2],
        }),
    }
}

/// Looks up a builtin by name, using the family's default seed when the
/// name carries none.
pub fn builtin(name: &str) -> Result<Instance> {
    builtin_seeded(name, None)
}

/// Like [`builtin`]; `seed` applies to random families whose name has no
/// `_s<seed>` suffix.
pub fn builtin_seeded(name: &str, seed: Option<u64>) -> Result<Instance> {
    let unknown = || Error::UnknownProblem(name.to_string());
    let parse_usize = |s: &str| s.parse::<usize>().map_err(|_| unknown());
    let split_seed = |rest: &str| -> Result<(usize, Option<u64>)> {
        match rest.split_once("_s") {
            Some((n, s)) => Ok((parse_usize(n)?, Some(s.parse().map_err(|_| unknown())?))),
            None => Ok((parse_usize(rest)?, None)),
        }
    };
    match name {
        "qp_hand" => return Ok(make_qp_hand()),
        "vi_cubic_interval" => return Ok(make_vi_cubic_interval()),
        "affine_box2" => return Ok(make_affine_box2()),
        "zero" => return Ok(make_zero()),
        _ => {}
    }
    if let Some(a) = name.strip_prefix("cubic_a") {
        let a: f64 = a.parse().map_err(|_| unknown())?;
        if !a.is_finite() {
            return Err(unknown());
        }
        return Ok(make_cubic_scalar(a));
    }
    if let Some(rest) = name.strip_prefix("skew_bilinear_n") {
        let (n, s) = split_seed(rest)?;
        return make_skew_bilinear(n, s.or(seed).unwrap_or(DEFAULT_SKEW_SEED));
    }
    if let Some(rest) = name.strip_prefix("quartic_saddle_n") {
        return make_quartic_saddle(parse_usize(rest)?);
    }
    if let Some(rest) = name.strip_prefix("qp_n") {
        let (n, rest) = rest.split_once("_m").ok_or_else(unknown)?;
        let (m, s) = split_seed(rest)?;
        return make_qp_conic(parse_usize(n)?, m, s.or(seed).unwrap_or(DEFAULT_QP_SEED));
    }
    Err(unknown())
}

/// Distance from `x` to `x_star`, if known.
pub fn distance_to_star(inst: &Instance, x: &[f64]) -> Option<f64> {
    inst.x_star
        .as_ref()
        .map(|s| norm(&s.iter().zip(x).map(|(a, b)| a - b).collect::<Vec<_>>()))
}
