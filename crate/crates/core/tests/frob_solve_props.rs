use num::BigRational;
use proptest::prelude::*;
use unitroot::frob_solve::{mu_product, solve_r, solve_s, solve_t_iter, IteratedEquation};
use unitroot::{CoeffElem, Ctx, PrimeContext, Series};

fn ctx(prec: u32) -> Ctx {
    PrimeContext::new(3, 1, 1, prec, 1_000_000).unwrap()
}

fn poly() -> impl Strategy<Value = Vec<(i64, i64)>> {
    prop::collection::vec((-6i64..=3, -40i64..40), 0..5)
}

fn series(c: &Ctx, t: &[(i64, i64)]) -> Series {
    Series::from_ints(c, t).unwrap()
}

/// An element of `pi * O_E`.
fn divisible(c: &Ctx, t: &[(i64, i64)], shift: u32) -> Series {
    series(c, t).mul_pi_power(shift)
}

fn pi_s(c: &Ctx, s: u32) -> Series {
    Series::constant(&CoeffElem::pi_power(c, s))
}

/// Every strictly increasing tuple `0 <= a_1 < .. < a_d = top`.
fn tuples(d: usize, top: u32) -> Vec<Vec<u32>> {
    if d == 1 {
        return vec![vec![top]];
    }
    let mut out = Vec::new();
    for prev in (d as u32 - 2)..top {
        for mut t in tuples(d - 1, prev) {
            t.push(top);
            out.push(t);
        }
    }
    out
}

fn mu_sum(c: &Ctx, s: u32, m: &[Series]) -> Series {
    let d = m.len() as u32;
    let mut total = Series::zero(c);
    let mut top = d - 1;
    while s * (top + 1 - d) < c.prec() {
        let weight = pi_s(c, s * (top + 1 - d));
        for a in tuples(m.len(), top) {
            let term = mu_product(m, &a).unwrap().mul(&weight).unwrap();
            total = total.add(&term).unwrap();
        }
        top += 1;
    }
    total
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn residual_vanishes(n in 2u32..=6, a in poly(), va in 1u32..3, b in poly()) {
        let c = ctx(n);
        let a = divisible(&c, &a, va);
        let b = series(&c, &b);
        let x = solve_r(&a, &b).unwrap();
        let residual = x.sub(&a.mul(&x.frobenius(1).unwrap()).unwrap()).unwrap().sub(&b).unwrap();
        prop_assert!(residual.is_zero());
    }

    #[test]
    fn additive_in_b(n in 2u32..=5, a in poly(), b in poly(), d in poly()) {
        let c = ctx(n);
        let a = divisible(&c, &a, 1);
        let (b, d) = (series(&c, &b), series(&c, &d));
        let lhs = solve_r(&a, &b.add(&d).unwrap()).unwrap();
        let rhs = solve_r(&a, &b).unwrap().add(&solve_r(&a, &d).unwrap()).unwrap();
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn expansion_of_sum_in_a(n in 2u32..=4, a in poly(), b in poly(), d in poly()) {
        let c = ctx(n);
        let a = divisible(&c, &a, 1);
        let b = divisible(&c, &b, 1);
        let d = series(&c, &d);
        let lhs = solve_r(&a.add(&b).unwrap(), &d).unwrap();
        let mut rhs = Series::zero(&c);
        for k in 0..n as usize {
            let mut bs = vec![b.clone(); k];
            bs.push(d.clone());
            let eq = IteratedEquation::new(vec![a.clone(); k + 1], bs).unwrap();
            rhs = rhs.add(&solve_s(&eq).unwrap()).unwrap();
        }
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn t_iter_is_a_mu_sum(n in 1u32..=4, s in 1u32..=2, m in prop::collection::vec(poly(), 1..=3)) {
        let c = ctx(n);
        let m: Vec<Series> = m.iter().map(|t| series(&c, t)).collect();
        prop_assert_eq!(solve_t_iter(&c, s, &m).unwrap(), mu_sum(&c, s, &m));
    }

    #[test]
    fn log_bound_survives_r(n in 3u32..=6, s in 1u32..=2, u in 1i64..9, tail in prop::collection::vec((-6i64..=-1, -9i64..9), 0..4)) {
        let c = ctx(n);
        let mut t = vec![(0i64, u * 3 + 1)];
        t.extend(tail.iter().map(|&(e, a)| (e, 3 * a)));
        let b = series(&c, &t);
        let r = BigRational::new(1.into(), s.into());
        let bound = b.log_bound(&r).unwrap().unwrap();
        prop_assert!(b.in_log_ring(&r, &bound).unwrap());
        let x = solve_r(&pi_s(&c, s), &b).unwrap();
        prop_assert!(x.in_log_ring(&r, &bound).unwrap());
    }
}

#[test]
fn tuple_enumeration() {
    assert_eq!(tuples(2, 2), vec![vec![0, 2], vec![1, 2]]);
    assert_eq!(tuples(3, 3).len(), 3);
}
