use super::laurent::Series;
use crate::error::{Error, Result};

/// Splits `x = x_circ + sigma(descended)` where `x_circ` has no exponent
/// divisible by `q`.
pub fn circ_split(x: &Series) -> (Series, Series) {
    let q = x.context().q() as i64;
    let circ = x.filter_exponents(|n| n % q != 0);
    let descended = x.filter_exponents(|n| n % q == 0).divide_exponents(q);
    (circ, descended)
}

/// True when no exponent of `x` is divisible by `q`.
pub fn is_circ(x: &Series) -> bool {
    let q = x.context().q() as i64;
    x.exponents().iter().all(|n| n % q != 0)
}

fn offending_term(lambda: &Series) -> Option<(i64, u32)> {
    let q = lambda.context().q() as i64;
    lambda
        .exponents()
        .iter()
        .enumerate()
        .filter(|(_, &n)| n != 0 && n % q == 0)
        .map(|(i, &n)| (n, lambda.term_valuation(i)))
        .min_by_key(|&(n, v)| (v, n))
}

/// Minimal Frobenius of a unit `lambda = 1 mod pi`.
///
/// Returns `(lambda_min, a)` with `lambda_min = sigma(a) / a * lambda` and no
/// term of `lambda_min` at a nonzero exponent divisible by `q`. Each step
/// removes the lowest offending pi-level term `b T^(q m)` by twisting with
/// `1 + b' T^m`, `b' = -b / lambda_0`.
pub fn twist_to_minimal(lambda: &Series) -> Result<(Series, Series)> {
    const OP: &str = "twist_to_minimal";
    let ctx = lambda.context();
    if !lambda.is_one_mod_pi() {
        return Err(Error::pre(OP, "lambda must be congruent to 1 modulo pi"));
    }
    let q = ctx.q() as i64;
    let one = Series::one(ctx);
    let mut lam = lambda.clone();
    let mut a = one.clone();
    let budget = 4 * ctx.prec() as usize * lambda.len().max(1);
    for _ in 0..budget {
        let Some((n, _)) = offending_term(&lam) else {
            return Ok((lam, a));
        };
        let b = lam.coeff(n);
        let lam0_inv = lam.coeff(0).inverse()?;
        let b_twist = b.mul(&lam0_inv)?.neg();
        let u = one.add(&Series::monomial(&b_twist, n / q)?)?;
        lam = lam.mul(&u.frobenius(1)?)?.mul(&u.invert()?)?;
        a = a.mul(&u)?;
    }
    Err(Error::NonConvergence {
        op: OP,
        iterations: budget,
    })
}

/// `sigma(a) * lambda - a * lambda_min`, zero exactly when the pair is a
/// valid minimal twist.
pub fn twist_defect(lambda: &Series, lambda_min: &Series, a: &Series) -> Result<Series> {
    a.frobenius(1)?.mul(lambda)?.sub(&a.mul(lambda_min)?)
}
