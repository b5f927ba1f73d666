mod common;

use common::{max_abs_diff, prox_oracle, random_entries, random_vec};
use mi_splitkit::oplib::{project_box, project_soc, prox_l1, Cone, ProxEntry};
use mi_splitkit::{RealVector, ResolventMap};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

#[test]
fn catalog_matches_numeric_minimization() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst: Vec<(&str, f64)> = Vec::new();
    for case in 0..100 {
        let n = 1 + case % 4;
        for (name, entry, dim) in random_entries(&mut rng, n) {
            let gamma = [0.1, 0.5, 1.0, 3.0][rng.gen_range(0..4)];
            let z = random_vec(&mut rng, dim, 3.0);
            let got = entry.prox(gamma, &z).unwrap();
            let want = prox_oracle(&entry, gamma, &z);
            let err = max_abs_diff(&got, &want);
            assert!(err <= 1e-6, "{name}: prox({z:?}) = {got:?}, oracle {want:?}");
            match worst.iter_mut().find(|(n, _)| *n == name) {
                Some(w) => w.1 = w.1.max(err),
                None => worst.push((name, err)),
            }
        }
    }
    assert_eq!(worst.len(), 11);
}

#[test]
fn hand_values() {
    assert_eq!(prox_l1(1.0, 1.0, &[3.0, -0.5, -2.0]), vec![2.0, 0.0, -1.0]);
    assert_eq!(project_box(&[0.0, 0.0], &[1.0, 1.0], &[2.0, -1.0]).unwrap(), vec![1.0, 0.0]);
    // (3, 0, 1) → ((3+1)/2)·(1, 0, 1)
    let p = project_soc(&[3.0, 0.0, 1.0]).unwrap();
    assert!(max_abs_diff(&p, &[2.0, 0.0, 2.0]) < 1e-15);
    assert_eq!(project_soc(&[1.0, -2.0]).unwrap(), vec![0.0, 0.0]);
}

fn pair_strategy() -> impl Strategy<Value = (u64, usize, f64)> {
    (any::<u64>(), 1usize..5, prop_oneof![Just(0.1), Just(1.0), Just(10.0)])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn firmly_nonexpansive((seed, n, gamma) in pair_strategy()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for (name, entry, dim) in random_entries(&mut rng, n) {
            let u = random_vec(&mut rng, dim, 5.0);
            let w = random_vec(&mut rng, dim, 5.0);
            let pu = entry.prox(gamma, &u).unwrap();
            let pw = entry.prox(gamma, &w).unwrap();
            let dp = sub(&pu, &pw);
            let du = sub(&u, &w);
            prop_assert!(
                dot(&dp, &dp) <= dot(&dp, &du) + 1e-12 * (1.0 + dot(&du, &du)),
                "{} fails firm nonexpansiveness", name
            );
        }
    }

    #[test]
    fn projections_are_idempotent((seed, n, _g) in pair_strategy()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for (name, entry, dim) in random_entries(&mut rng, n) {
            if !entry.is_indicator() {
                continue;
            }
            let z = random_vec(&mut rng, dim, 5.0);
            let p = entry.prox(1.0, &z).unwrap();
            let pp = entry.prox(1.0, &p).unwrap();
            prop_assert!(max_abs_diff(&p, &pp) <= 1e-12 * (1.0 + z.iter().map(|v| v.abs()).sum::<f64>()),
                "{} is not idempotent", name);
            prop_assert_eq!(entry.value(&p), 0.0, "{} projects outside its set", name);
        }
    }

    #[test]
    fn moreau_decomposition_for_cones(seed in any::<u64>(), n in 2usize..6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for cone in [Cone::Nonneg(n), Cone::Zero(n), Cone::Free(n), Cone::Soc(n)] {
            let z = random_vec(&mut rng, n, 5.0);
            let p = cone.projection().prox(1.0, &z).unwrap();
            // z − Π_K(z) lies in the polar cone K° = −K*, so −(z − Π_K(z)) = Π_{K*}(−z).
            let r = sub(&z, &p);
            let neg_z: Vec<f64> = z.iter().map(|v| -v).collect();
            let q = cone.dual().projection().prox(1.0, &neg_z).unwrap();
            let neg_r: Vec<f64> = r.iter().map(|v| -v).collect();
            prop_assert!(max_abs_diff(&neg_r, &q) <= 1e-12 * (1.0 + z.iter().map(|v| v.abs()).sum::<f64>()),
                "{:?}: residual {:?} vs dual projection {:?}", cone, neg_r, q);
            prop_assert!(dot(&p, &r).abs() <= 1e-10 * (1.0 + dot(&z, &z)), "{:?} not orthogonal", cone);
        }
    }

    #[test]
    fn moreau_decomposition_for_l1(seed in any::<u64>(), n in 1usize..6, gamma in 0.05f64..5.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let w = rng.gen_range(0.1..3.0);
        let z = random_vec(&mut rng, n, 5.0);
        // z = prox_{γw‖·‖₁}(z) + γ·Π_{‖·‖∞ ≤ w}(z/γ)
        let p = prox_l1(gamma, w, &z);
        for i in 0..n {
            let dual = gamma * (z[i] / gamma).clamp(-w, w);
            prop_assert!((p[i] + dual - z[i]).abs() <= 1e-12 * (1.0 + z[i].abs()));
        }
    }

    #[test]
    fn resolvent_element_is_a_subgradient((seed, n, gamma) in pair_strategy()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for (name, entry, dim) in random_entries(&mut rng, n) {
            let map = ResolventMap::new(entry.clone());
            let u = RealVector::new(random_vec(&mut rng, dim, 5.0)).unwrap();
            let step = map.apply(gamma, &u).unwrap();
            let p = step.point.as_slice();
            let e = step.element.as_slice();
            // u = p + γ·e
            let recon: Vec<f64> = p.iter().zip(e).map(|(a, b)| a + gamma * b).collect();
            prop_assert!(max_abs_diff(&recon, u.as_slice()) <= 1e-12 * (1.0 + u.norm()), "{}", name);
            // h(y) ≥ h(p) + ⟨e, y − p⟩ at feasible test points
            let hp = entry.value(p);
            for _ in 0..5 {
                let raw = random_vec(&mut rng, dim, 5.0);
                let y = if entry.is_indicator() { entry.prox(1.0, &raw).unwrap() } else { raw };
                let lhs = entry.value(&y);
                let rhs = hp + dot(e, &sub(&y, p));
                prop_assert!(lhs >= rhs - 1e-9 * (1.0 + rhs.abs()), "{}: {} < {}", name, lhs, rhs);
            }
        }
    }
}

#[test]
fn entry_parameters_are_validated() {
    assert!(ProxEntry::l1(0.0).is_err());
    assert!(ProxEntry::boxed(vec![1.0], vec![0.0]).is_err());
    assert!(ProxEntry::ball(vec![0.0], -1.0).is_err());
    assert!(ProxEntry::halfspace(vec![0.0, 0.0], 1.0).is_err());
    assert!(ProxEntry::Box { lo: vec![0.0], hi: vec![1.0] }.prox(1.0, &[0.0, 0.0]).is_err());
}
