use proptest::prelude::*;
use rand::Rng;
use unitroot::isocrystal::{IsocrystalMatrix, SeriesMatrix};
use unitroot::sweep::{random_isocrystal, random_poly, trial_rng};
use unitroot::{Ctx, PrimeContext, Series};

fn ctx(prec: u32) -> Ctx {
    PrimeContext::new(3, 1, 1, prec, 200_000).unwrap()
}

/// `1 + pi M` with a random polynomial matrix `M`.
fn random_unipotent(seed: u64, c: &Ctx, n: usize) -> SeriesMatrix {
    let mut rng = trial_rng(seed, 99);
    let mut m = SeriesMatrix::identity(c, n);
    for i in 0..n {
        for j in 0..n {
            let t = random_poly(&mut rng, c, 2).unwrap().mul_pi_power(1);
            m.set(i, j, m.get(i, j).add(&t).unwrap());
        }
    }
    m
}

fn sigma_inverse_conjugate(a: &IsocrystalMatrix, b: &SeriesMatrix) -> SeriesMatrix {
    b.mul(a.matrix()).unwrap().mul(&b.frobenius(1).unwrap().inverse().unwrap()).unwrap()
}

fn minor2(a: &IsocrystalMatrix, r: [usize; 2], c: [usize; 2]) -> Series {
    let x = a.get(r[0], c[0]).mul(a.get(r[1], c[1])).unwrap();
    let y = a.get(r[0], c[1]).mul(a.get(r[1], c[0])).unwrap();
    x.sub(&y).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(30))]

    #[test]
    fn determinant_transforms_by_a_coboundary(seed in any::<u64>(), n in 2usize..=3, prec in 3u32..=5) {
        let c = ctx(prec);
        let mut rng = trial_rng(seed, 0);
        let r: Vec<u32> = (0..n as u32).collect();
        let a = random_isocrystal(&mut rng, &c, &r, 1, 2).unwrap();
        let b = random_unipotent(seed, &c, n);
        let conj = a.skew_conjugate(&b).unwrap();
        prop_assert_eq!(conj.matrix(), &sigma_inverse_conjugate(&a, &b));
        let det_b = b.determinant().unwrap();
        let lhs = conj.matrix().determinant().unwrap().mul(&det_b.frobenius(1).unwrap()).unwrap();
        let rhs = det_b.mul(&a.matrix().determinant().unwrap()).unwrap();
        prop_assert_eq!(lhs, rhs);
        let top = a.exterior_power(n).unwrap();
        prop_assert_eq!(top.get(0, 0), &a.matrix().determinant().unwrap());
    }

    #[test]
    fn second_exterior_power_is_minors(seed in any::<u64>()) {
        let c = ctx(4);
        let mut rng = trial_rng(seed, 1);
        let a = random_isocrystal(&mut rng, &c, &[0, 1, 3], 2, 2).unwrap();
        let w = a.exterior_power(2).unwrap();
        prop_assert_eq!(w.diag_exponents(), &[1, 3, 4][..]);
        let basis = [[0usize, 1], [0, 2], [1, 2]];
        for (i, rb) in basis.iter().enumerate() {
            for (j, cb) in basis.iter().enumerate() {
                prop_assert_eq!(w.get(i, j), &minor2(&a, *rb, *cb));
            }
        }
    }

    #[test]
    fn twist_roundtrip(seed in any::<u64>(), j in 0i64..3) {
        let c = ctx(5);
        let mut rng = trial_rng(seed, 2);
        let a = random_isocrystal(&mut rng, &c, &[0, 1], 2, 2).unwrap();
        let up = a.twist(j).unwrap();
        prop_assert_eq!(up.diag_exponents(), &[j as u32, 1 + j as u32][..]);
        let back = up.twist(-j).unwrap();
        let reduced = a.matrix().change_context(back.context()).unwrap();
        prop_assert_eq!(back.matrix(), &reduced);
    }

    #[test]
    fn unit_root_residuals(seed in any::<u64>(), n in 2usize..=3) {
        let c = ctx(6);
        let mut rng = trial_rng(seed, 3);
        let level = rng.gen_range(3..=5);
        let r: Vec<u32> = (0..n as u32).collect();
        let a = random_isocrystal(&mut rng, &c, &r, level, 2).unwrap();
        let sol = a.solve_unit_root().unwrap();
        prop_assert!(sol.epsilon[0].is_one());
        prop_assert_eq!(sol.lambda.partial_valuation(0).unwrap().finite(), Some(0));
        prop_assert!(sol.residual_level >= c.prec() - sol.guard);
        let low = sol.epsilon[0].context().clone();
        let m = a.matrix().change_context(&low).unwrap();
        let lam = sol.lambda.change_context(&low).unwrap();
        let sig: Vec<Series> = sol.epsilon.iter().map(|x| x.frobenius(1).unwrap()).collect();
        for i in 0..n {
            let mut rhs = m.get(i, 0).clone();
            for j in 1..n {
                rhs = rhs.add(&m.get(i, j).mul(&sig[j]).unwrap()).unwrap();
            }
            let res = lam.mul(&sol.epsilon[i]).unwrap().sub(&rhs).unwrap();
            prop_assert!(res.valuation() >= sol.residual_level);
        }
        prop_assert!(a.r_form_check(&sol).unwrap());
    }

    #[test]
    fn lower_left_reduction_audits(seed in any::<u64>(), n0 in 4u32..=6) {
        let c = ctx(6);
        let mut rng = trial_rng(seed, 4);
        let a = random_isocrystal(&mut rng, &c, &[0, 1, 2], 3, 2).unwrap();
        let (out, tr) = a.reduce_lower_left(1, n0).unwrap();
        prop_assert!(tr.verify(&a, &out).unwrap());
        for u in 1..3 {
            prop_assert!(out.get(u, 0).valuation() >= n0);
        }
        prop_assert!(out.validate_diagonal_congruence(3).unwrap());
    }
}
