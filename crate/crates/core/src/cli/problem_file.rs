//! JSON problem descriptions.
//!
//! ```json
//! {"type": "conic",
//!  "objective": {"Q": [[1.0]], "q": [-2.0]},
//!  "constraints": {"A": [[1.0]], "c": [-1.0]},
//!  "cones": [{"cone": "nonneg", "dim": 1}]}
//! ```
//!
//! `type` is one of `conic`, `saddle`, `vi`, `raw-mi`. Matrices are lists of
//! rows; infinite box bounds are written `"inf"` / `"-inf"`.

use crate::adapters::{
    conic_to_mi, saddle_to_mi, vi_to_mi, AffineMap, ConicProgram, ConstraintMap, MiProblem,
    QuadraticFunction, QuadraticSaddle, SaddleFunction, SaddleProblem, SmoothFunction, VIProblem,
};
use crate::error::{Error, Result};
use crate::oplib::{Block, BlockResolvent, ConeProduct, Matrix, ProxEntry};
use crate::operator::{PointMap, ResolventMap};
use crate::problems::{Instance, Potential};
use crate::vector::RealVector;
use serde::Deserialize;
use std::path::Path;
use std::sync::Arc;

#[derive(Debug, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
enum ProblemFile {
    Conic(ConicSpec),
    Saddle(SaddleSpec),
    Vi(ViSpec),
    RawMi(RawMiSpec),
}

#[derive(Debug, Deserialize)]
struct Common {
    name: Option<String>,
    #[serde(default)]
    mu: f64,
    x0: Option<Vec<f64>>,
    x_star: Option<Vec<f64>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct QuadraticSpec {
    #[serde(rename = "Q")]
    q_mat: Vec<Vec<f64>>,
    q: Vec<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct AffineSpec {
    #[serde(rename = "A")]
    a: Vec<Vec<f64>>,
    c: Vec<f64>,
}

#[derive(Debug, Deserialize)]
struct ConicSpec {
    objective: QuadraticSpec,
    #[serde(rename = "P", default)]
    p: ProxSpec,
    constraints: Option<AffineSpec>,
    #[serde(default)]
    cones: ConeProduct,
    #[serde(flatten)]
    common: Common,
}

#[derive(Debug, Deserialize)]
struct SaddleSpec {
    #[serde(rename = "Q")]
    q_mat: Vec<Vec<f64>>,
    q: Vec<f64>,
    coupling: Vec<Vec<f64>>,
    #[serde(rename = "R")]
    r_mat: Vec<Vec<f64>>,
    r: Vec<f64>,
    #[serde(rename = "P", default)]
    p: ProxSpec,
    #[serde(rename = "P_tilde", default)]
    p_tilde: ProxSpec,
    constraints: Option<AffineSpec>,
    #[serde(default)]
    cones: ConeProduct,
    constraints_tilde: Option<AffineSpec>,
    #[serde(default)]
    cones_tilde: ConeProduct,
    #[serde(flatten)]
    common: Common,
}

/// `F(x) = Mx + c`.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct LinearOperatorSpec {
    #[serde(rename = "M")]
    m_mat: Vec<Vec<f64>>,
    c: Vec<f64>,
}

#[derive(Debug, Deserialize)]
struct ViSpec {
    #[serde(rename = "F")]
    f: LinearOperatorSpec,
    #[serde(default)]
    g: ProxSpec,
    #[serde(flatten)]
    common: Common,
}

#[derive(Debug, Deserialize)]
struct RawMiSpec {
    #[serde(rename = "F")]
    f: LinearOperatorSpec,
    blocks: Vec<BlockSpec>,
    #[serde(flatten)]
    common: Common,
}

#[derive(Debug, Deserialize)]
struct BlockSpec {
    #[serde(flatten)]
    prox: ProxSpec,
    dim: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(tag = "prox", rename_all = "snake_case")]
enum ProxSpec {
    #[default]
    Zero,
    L1 {
        weight: f64,
    },
    Box {
        lo: Vec<Bound>,
        hi: Vec<Bound>,
    },
    Nonneg,
    Soc,
    ZeroCone,
    Free,
    Halfspace {
        a: Vec<f64>,
        b: f64,
    },
    Quadratic {
        #[serde(rename = "Q")]
        q_mat: Vec<Vec<f64>>,
        q: Vec<f64>,
    },
    Ball {
        center: Vec<f64>,
        radius: f64,
    },
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum Bound {
    Number(f64),
    Text(String),
}

impl Bound {
    fn value(&self) -> Result<f64> {
        match self {
            Bound::Number(v) => Ok(*v),
            Bound::Text(s) => match s.as_str() {
                "inf" | "+inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                other => Err(bad(format!("bound must be a number, \"inf\" or \"-inf\", got {other:?}"))),
            },
        }
    }
}

fn bad(msg: String) -> Error {
    Error::ProblemFile(msg)
}

fn matrix(rows: &[Vec<f64>], what: &str) -> Result<Matrix> {
    let cols = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != cols) {
        return Err(bad(format!("{what}: rows have different lengths")));
    }
    if rows.iter().flatten().any(|v| !v.is_finite()) {
        return Err(bad(format!("{what}: non-finite entry")));
    }
    Ok(Matrix::from_row_iterator(rows.len(), cols, rows.iter().flatten().copied()))
}

impl ProxSpec {
    fn entry(&self) -> Result<ProxEntry> {
        Ok(match self {
            ProxSpec::Zero => ProxEntry::Zero,
            ProxSpec::L1 { weight } => ProxEntry::l1(*weight)?,
            ProxSpec::Box { lo, hi } => ProxEntry::boxed(
                lo.iter().map(Bound::value).collect::<Result<_>>()?,
                hi.iter().map(Bound::value).collect::<Result<_>>()?,
            )?,
            ProxSpec::Nonneg => ProxEntry::NonnegOrthant,
            ProxSpec::Soc => ProxEntry::SecondOrderCone,
            ProxSpec::ZeroCone => ProxEntry::ZeroCone,
            ProxSpec::Free => ProxEntry::FreeCone,
            ProxSpec::Halfspace { a, b } => ProxEntry::halfspace(a.clone(), *b)?,
            ProxSpec::Quadratic { q_mat, q } => ProxEntry::quadratic(matrix(q_mat, "prox Q")?, q.clone())?,
            ProxSpec::Ball { center, radius } => ProxEntry::ball(center.clone(), *radius)?,
        })
    }
}

fn affine(spec: &AffineSpec, n: usize, what: &str) -> Result<Arc<AffineMap>> {
    let a = matrix(&spec.a, what)?;
    if a.nrows() > 0 && a.ncols() != n {
        return Err(bad(format!("{what}: expected {n} columns, got {}", a.ncols())));
    }
    let a = if a.nrows() == 0 { Matrix::zeros(0, n) } else { a };
    Ok(Arc::new(AffineMap::new(a, spec.c.clone())?))
}

pub fn load(path: &Path) -> Result<Instance> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| bad(format!("cannot read {}: {e}", path.display())))?;
    let default_name = path
        .file_stem()
        .map_or_else(|| "problem".to_string(), |s| s.to_string_lossy().into_owned());
    parse(&text, &default_name)
}

pub fn parse(text: &str, default_name: &str) -> Result<Instance> {
    let file: ProblemFile = serde_json::from_str(text).map_err(|e| bad(e.to_string()))?;
    match file {
        ProblemFile::Conic(s) => conic(s, default_name),
        ProblemFile::Saddle(s) => saddle(s, default_name),
        ProblemFile::Vi(s) => vi(s, default_name),
        ProblemFile::RawMi(s) => raw_mi(s, default_name),
    }
}

fn finish(
    common: Common,
    default_name: &str,
    f: PointMap,
    b: ResolventMap,
    layout: Option<crate::adapters::KktLayout>,
    potential: Option<Potential>,
    primal_dim: usize,
) -> Result<Instance> {
    let dim = f.dim();
    if !(common.mu >= 0.0 && common.mu.is_finite()) {
        return Err(bad(format!("mu must be a nonnegative number, got {}", common.mu)));
    }
    let x0 = match common.x0 {
        None => RealVector::zeros(dim),
        Some(mut x) if x.len() == primal_dim && primal_dim < dim => {
            x.resize(dim, 0.0);
            RealVector::new(x)?
        }
        Some(x) if x.len() == dim => RealVector::new(x)?,
        Some(x) => {
            return Err(bad(format!("x0 has length {}, expected {dim}", x.len())));
        }
    };
    let x_star = match common.x_star {
        Some(x) if x.len() != dim => {
            return Err(bad(format!("x_star has length {}, expected {dim}", x.len())))
        }
        Some(x) => Some(RealVector::new(x)?),
        None => None,
    };
    Ok(Instance {
        name: common.name.unwrap_or_else(|| default_name.to_string()),
        f,
        b,
        mu: common.mu,
        x0,
        oracle: if x_star.is_some() {
            "supplied in the problem file".into()
        } else {
            "none".into()
        },
        x_star,
        layout,
        potential,
    })
}

fn from_mi(mi: MiProblem, common: Common, default_name: &str, potential: Potential, primal: usize) -> Result<Instance> {
    finish(common, default_name, mi.f, mi.b, Some(mi.layout), Some(potential), primal)
}

fn lagrangian_term(g: &Option<Arc<AffineMap>>, x: &[f64], l: &[f64]) -> f64 {
    g.as_ref().map_or(0.0, |g| {
        let mut gx = vec![0.0; l.len()];
        g.value(x, &mut gx);
        gx.iter().zip(l).map(|(a, b)| a * b).sum()
    })
}

fn conic(s: ConicSpec, default_name: &str) -> Result<Instance> {
    let f = Arc::new(QuadraticFunction::new(matrix(&s.objective.q_mat, "objective Q")?, s.objective.q)?);
    let n = f.dim();
    let g = s.constraints.as_ref().map(|c| affine(c, n, "constraints")).transpose()?;
    let m = s.cones.dim();
    let prog = ConicProgram {
        f: f.clone(),
        p: s.p.entry()?,
        g: g.clone().map(|g| g as Arc<dyn ConstraintMap>),
        k: s.cones,
    };
    let mi = conic_to_mi(&prog)?;
    let potential = Potential {
        phi: Arc::new(move |w| {
            let (x, l) = w.split_at(n);
            f.value(x) + lagrangian_term(&g, x, l)
        }),
        signs: [vec![1.0; n], vec![-1.0; m]].concat(),
    };
    from_mi(mi, s.common, default_name, potential, n)
}

fn saddle(s: SaddleSpec, default_name: &str) -> Result<Instance> {
    let f = Arc::new(QuadraticSaddle::new(
        matrix(&s.q_mat, "Q")?,
        s.q,
        matrix(&s.coupling, "coupling")?,
        matrix(&s.r_mat, "R")?,
        s.r,
    )?);
    let (n, m) = f.dims();
    let g = s.constraints.as_ref().map(|c| affine(c, n, "constraints")).transpose()?;
    let gt = s
        .constraints_tilde
        .as_ref()
        .map(|c| affine(c, m, "constraints_tilde"))
        .transpose()?;
    let (p, pt) = (s.cones.dim(), s.cones_tilde.dim());
    let prob = SaddleProblem {
        f: f.clone(),
        p: s.p.entry()?,
        p_tilde: s.p_tilde.entry()?,
        g: g.clone().map(|g| g as Arc<dyn ConstraintMap>),
        k: s.cones,
        g_tilde: gt.clone().map(|g| g as Arc<dyn ConstraintMap>),
        k_tilde: s.cones_tilde,
    };
    let mi = saddle_to_mi(&prob)?;
    let potential = Potential {
        phi: Arc::new(move |w| {
            let (x, rest) = w.split_at(n);
            let (y, rest) = rest.split_at(m);
            let (l, lt) = rest.split_at(p);
            f.value(x, y) + lagrangian_term(&g, x, l) - lagrangian_term(&gt, y, lt)
        }),
        signs: [vec![1.0; n], vec![-1.0; m], vec![-1.0; p], vec![1.0; pt]].concat(),
    };
    from_mi(mi, s.common, default_name, potential, n + m)
}

fn linear_operator(spec: &LinearOperatorSpec) -> Result<PointMap> {
    let m = matrix(&spec.m_mat, "F.M")?;
    let n = spec.c.len();
    if n == 0 {
        return Err(Error::EmptyVector);
    }
    if m.nrows() != n || m.ncols() != n {
        return Err(bad(format!("F.M must be {n}×{n}, got {}×{}", m.nrows(), m.ncols())));
    }
    let c = nalgebra::DVector::from_column_slice(&spec.c);
    Ok(PointMap::from_fn(n, move |x, out| {
        let y = &m * nalgebra::DVector::from_column_slice(x) + &c;
        out.copy_from_slice(y.as_slice());
    }))
}

/// Potential `½xᵀMx + cᵀx` when `M` is symmetric.
fn linear_potential(spec: &LinearOperatorSpec) -> Option<Potential> {
    let m = matrix(&spec.m_mat, "F.M").ok()?;
    if (&m - m.transpose()).amax() > 0.0 {
        return None;
    }
    let c = spec.c.clone();
    let n = c.len();
    Some(Potential {
        phi: Arc::new(move |x| {
            let xv = nalgebra::DVector::from_column_slice(x);
            0.5 * (&m * &xv).dot(&xv) + c.iter().zip(x).map(|(a, b)| a * b).sum::<f64>()
        }),
        signs: vec![1.0; n],
    })
}

fn vi(s: ViSpec, default_name: &str) -> Result<Instance> {
    let f = linear_operator(&s.f)?;
    let n = f.dim();
    let (f, b) = vi_to_mi(&VIProblem { f, g: s.g.entry()? })?;
    let potential = linear_potential(&s.f);
    finish(s.common, default_name, f, b, None, potential, n)
}

fn raw_mi(s: RawMiSpec, default_name: &str) -> Result<Instance> {
    let f = linear_operator(&s.f)?;
    let n = f.dim();
    let blocks = s
        .blocks
        .iter()
        .map(|b| {
            let entry = b.prox.entry()?;
            let dim = b
                .dim
                .or_else(|| entry.fixed_dim())
                .ok_or_else(|| bad("block without a fixed size needs \"dim\"".into()))?;
            Block::new(entry, dim)
        })
        .collect::<Result<Vec<_>>>()?;
    let resolvent = BlockResolvent::new(blocks)?;
    if resolvent.dim() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: resolvent.dim(),
        });
    }
    let potential = linear_potential(&s.f);
    finish(s.common, default_name, f, ResolventMap::new(resolvent), None, potential, n)
}
