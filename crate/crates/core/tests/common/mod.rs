//! Shared helpers for the integration tests: independent numeric-minimization
//! oracles for the proximal catalog and random entry generators.

#![allow(dead_code)]

use mi_splitkit::oplib::{Matrix, ProxEntry};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Golden-section minimizer of a unimodal `f` on `[a, b]`.
pub fn golden(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let (mut c, mut d) = (b - r * (b - a), a + r * (b - a));
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..300 {
        if (b - a).abs() <= 1e-15 * (1.0 + a.abs().max(b.abs())) {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

fn sq(v: f64) -> f64 {
    v * v
}

fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| sq(x - y)).sum()
}

fn norm(a: &[f64]) -> f64 {
    a.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `argmin_y h(y) + ‖y − z‖²/(2γ)` computed by direct numeric minimization,
/// without reference to the closed forms in the library.
pub fn prox_oracle(entry: &ProxEntry, gamma: f64, z: &[f64]) -> Vec<f64> {
    match entry {
        ProxEntry::Zero | ProxEntry::FreeCone => z
            .iter()
            .map(|&zi| golden(|y| sq(y - zi), zi - 1.0 - zi.abs(), zi + 1.0 + zi.abs()))
            .collect(),
        ProxEntry::ZeroCone => vec![0.0; z.len()],
        ProxEntry::L1 { weight } => z
            .iter()
            .map(|&zi| {
                let r = zi.abs() + 1.0;
                golden(|y| weight * y.abs() + sq(y - zi) / (2.0 * gamma), -r, r)
            })
            .collect(),
        ProxEntry::Box { lo, hi } => z
            .iter()
            .zip(lo.iter().zip(hi))
            .map(|(&zi, (&l, &h))| interval_min(zi, l, h))
            .collect(),
        ProxEntry::NonnegOrthant => z.iter().map(|&zi| interval_min(zi, 0.0, f64::INFINITY)).collect(),
        ProxEntry::Halfspace { a, b } => {
            // Maximize the concave dual in the multiplier λ ≥ 0.
            let at = |l: f64| z.iter().zip(a).map(|(zi, ai)| zi - l * ai).collect::<Vec<_>>();
            let dual = |l: f64| {
                let y = at(l);
                0.5 * dist2(&y, z) + l * (dot(a, &y) - b)
            };
            let hi = (dot(a, z) - b).abs() / dot(a, a) + 1.0;
            at(golden(|l| -dual(l), 0.0, hi))
        }
        ProxEntry::Ball { center, radius } => {
            let at = |l: f64| {
                z.iter()
                    .zip(center)
                    .map(|(zi, ci)| (zi + l * ci) / (1.0 + l))
                    .collect::<Vec<_>>()
            };
            let dual = |l: f64| {
                let y = at(l);
                0.5 * dist2(&y, z) + 0.5 * l * (dist2(&y, center) - radius * radius)
            };
            let hi = dist2(z, center).sqrt() / radius + 1.0;
            at(golden(|l| -dual(l), 0.0, hi))
        }
        ProxEntry::SecondOrderCone => {
            let (head, t) = z.split_at(z.len() - 1);
            let t = t[0];
            if norm(head) <= t {
                return z.to_vec();
            }
            // Otherwise the projection lies on the boundary ray through the
            // direction of `head`.
            let nh = norm(head);
            let dir: Vec<f64> = if nh > 0.0 {
                head.iter().map(|v| v / nh).collect()
            } else {
                let mut e = vec![0.0; head.len()];
                e[0] = 1.0;
                e
            };
            let point = |r: f64| {
                let mut p: Vec<f64> = dir.iter().map(|d| r * d).collect();
                p.push(r);
                p
            };
            let r = golden(|r| dist2(&point(r), z), 0.0, nh + t.abs() + 1.0);
            point(r)
        }
        ProxEntry::Quadratic { q_mat, q_vec } => quadratic_descent(q_mat, q_vec, gamma, z),
    }
}

fn interval_min(z: f64, lo: f64, hi: f64) -> f64 {
    let a = if lo.is_finite() { lo } else { z.min(hi) - 1.0 };
    let b = if hi.is_finite() { hi } else { z.max(lo) + 1.0 };
    golden(|y| sq(y - z), a, b)
}

/// Gradient descent on `½yᵀQy + qᵀy + ‖y − z‖²/(2γ)`.
fn quadratic_descent(q: &Matrix, qv: &[f64], gamma: f64, z: &[f64]) -> Vec<f64> {
    let n = z.len();
    let lip = q.norm() + 1.0 / gamma;
    let mut y = z.to_vec();
    for _ in 0..200_000 {
        let g: Vec<f64> = (0..n)
            .map(|i| (0..n).map(|j| q[(i, j)] * y[j]).sum::<f64>() + qv[i] + (y[i] - z[i]) / gamma)
            .collect();
        if norm(&g) < 1e-14 * (1.0 + norm(z)) {
            break;
        }
        for i in 0..n {
            y[i] -= g[i] / lip;
        }
    }
    y
}

pub fn random_vec(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> Vec<f64> {
    (0..n).map(|_| scale * rng.gen_range(-1.0..1.0)).collect()
}

/// One entry of every catalog kind with random parameters, in dimension `n`
/// (`n + 1` for the second-order cone).
pub fn random_entries(rng: &mut ChaCha8Rng, n: usize) -> Vec<(&'static str, ProxEntry, usize)> {
    let lo = random_vec(rng, n, 1.0);
    let hi: Vec<f64> = lo.iter().map(|l| l + rng.gen_range(0.0..2.0)).collect();
    let mut a = random_vec(rng, n, 1.0);
    a[0] += 2.0;
    let g = Matrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
    let q_mat = g.transpose() * &g;
    vec![
        ("zero", ProxEntry::Zero, n),
        ("l1", ProxEntry::l1(rng.gen_range(0.1..2.0)).unwrap(), n),
        ("box", ProxEntry::boxed(lo, hi).unwrap(), n),
        (
            "box_half_open",
            ProxEntry::boxed(vec![f64::NEG_INFINITY; n], vec![0.5; n]).unwrap(),
            n,
        ),
        ("nonneg", ProxEntry::NonnegOrthant, n),
        ("soc", ProxEntry::SecondOrderCone, n + 1),
        ("zero_cone", ProxEntry::ZeroCone, n),
        ("free_cone", ProxEntry::FreeCone, n),
        ("halfspace", ProxEntry::halfspace(a, rng.gen_range(-1.0..1.0)).unwrap(), n),
        ("quadratic", ProxEntry::quadratic(q_mat, random_vec(rng, n, 1.0)).unwrap(), n),
        (
            "ball",
            ProxEntry::ball(random_vec(rng, n, 1.0), rng.gen_range(0.2..2.0)).unwrap(),
            n,
        ),
    ]
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}
