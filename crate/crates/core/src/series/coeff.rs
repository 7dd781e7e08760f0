//! Coefficients in `Z_p[pi]/(pi^e - p)` truncated modulo `pi^N`.
//!
//! An element is stored as `e` digits; digit `j` is the coefficient of `pi^j`
//! and lives modulo `p^ceil((N - j) / e)`. That family of moduli is exactly the
//! ideal `(pi^N)`, so digitwise reduction is a ring homomorphism.

use std::fmt;

use num::{BigInt, Integer, ToPrimitive, Zero};

use super::context::{ensure_same, Ctx};
use crate::error::{Error, Result};

pub(crate) fn vp_u64(mut n: u64, p: u64) -> u32 {
    debug_assert!(n != 0);
    let mut v = 0;
    while n.is_multiple_of(p) {
        n /= p;
        v += 1;
    }
    v
}

pub(crate) fn digits_valuation(ctx: &Ctx, d: &[u64]) -> u32 {
    let e = ctx.e();
    let mut best = ctx.prec();
    for (j, &c) in d.iter().enumerate() {
        if c != 0 {
            let v = j as u32 + e * vp_u64(c, ctx.p());
            best = best.min(v);
        }
    }
    best
}

pub(crate) fn digits_add(ctx: &Ctx, a: &[u64], b: &[u64], out: &mut [u64]) {
    for j in 0..a.len() {
        let m = ctx.modulus(j) as u128;
        out[j] = ((a[j] as u128 + b[j] as u128) % m) as u64;
    }
}

pub(crate) fn digits_sub(ctx: &Ctx, a: &[u64], b: &[u64], out: &mut [u64]) {
    for j in 0..a.len() {
        let m = ctx.modulus(j) as u128;
        out[j] = ((a[j] as u128 + m - b[j] as u128 % m) % m) as u64;
    }
}

pub(crate) fn digits_neg(ctx: &Ctx, a: &[u64], out: &mut [u64]) {
    for j in 0..a.len() {
        let m = ctx.modulus(j);
        out[j] = if a[j] == 0 { 0 } else { m - a[j] };
    }
}

/// Accumulates `a * b` into `acc` without reducing by the digit moduli.
///
/// Every addend is reduced below `M0 < 2^62`, so `acc` absorbs `2^64` products
/// before it has to be reduced.
pub(crate) fn digits_mul_acc(ctx: &Ctx, a: &[u64], b: &[u64], acc: &mut [u128]) {
    let e = a.len();
    let m0 = ctx.modulus(0) as u128;
    let p = ctx.p() as u128;
    for j in 0..e {
        if a[j] == 0 {
            continue;
        }
        for k in 0..e {
            if b[k] == 0 {
                continue;
            }
            let prod = (a[j] as u128 * b[k] as u128) % m0;
            let t = j + k;
            if t < e {
                acc[t] += prod;
            } else {
                acc[t - e] += (prod * p) % m0;
            }
        }
    }
}

pub(crate) fn finish(ctx: &Ctx, acc: &[u128], out: &mut [u64]) {
    for j in 0..acc.len() {
        out[j] = (acc[j] % ctx.modulus(j) as u128) as u64;
    }
}

pub(crate) fn digits_mul(ctx: &Ctx, a: &[u64], b: &[u64], out: &mut [u64]) {
    let mut acc = vec![0u128; a.len()];
    digits_mul_acc(ctx, a, b, &mut acc);
    finish(ctx, &acc, out);
}

/// Multiplies by `pi^k`.
pub(crate) fn digits_mul_pi(ctx: &Ctx, a: &[u64], k: u32, out: &mut [u64]) {
    let e = a.len();
    let p = ctx.p() as u128;
    let mut cur: Vec<u128> = a.iter().map(|&x| x as u128).collect();
    let m0 = ctx.modulus(0) as u128;
    for _ in 0..k {
        let top = cur[e - 1];
        for j in (1..e).rev() {
            cur[j] = cur[j - 1];
        }
        cur[0] = (top * p) % m0;
    }
    for j in 0..e {
        out[j] = (cur[j] % ctx.modulus(j) as u128) as u64;
    }
}

/// Divides by `pi^k`; the caller guarantees `v_pi(a) >= k`. The top `k`
/// pi-levels of the result are unknown and filled with zero.
pub(crate) fn digits_div_pi(ctx: &Ctx, a: &[u64], k: u32, out: &mut [u64]) {
    let e = a.len();
    let p = ctx.p();
    let mut cur: Vec<u64> = a.to_vec();
    for _ in 0..k {
        debug_assert!(cur[0].is_multiple_of(p));
        let low = cur[0] / p;
        for j in 0..e - 1 {
            cur[j] = cur[j + 1];
        }
        cur[e - 1] = low;
    }
    for j in 0..e {
        out[j] = cur[j] % ctx.modulus(j);
    }
}

fn inverse_mod(a: u64, m: u64) -> Option<u64> {
    let g = (a as i128).extended_gcd(&(m as i128));
    if g.gcd != 1 {
        return None;
    }
    Some(g.x.rem_euclid(m as i128) as u64)
}

/// Inverse of a unit (`v_pi = 0`) by Newton iteration.
pub(crate) fn digits_inverse(ctx: &Ctx, a: &[u64]) -> Option<Vec<u64>> {
    let e = a.len();
    if ctx.prec() == 0 || a[0].is_multiple_of(ctx.p()) {
        return None;
    }
    let mut x = vec![0u64; e];
    x[0] = inverse_mod(a[0], ctx.p())?;
    let mut one = vec![0u64; e];
    one[0] = 1 % ctx.modulus(0);
    let mut ax = vec![0u64; e];
    let mut r = vec![0u64; e];
    let mut xr = vec![0u64; e];
    for _ in 0..64 {
        digits_mul(ctx, a, &x, &mut ax);
        if ax == one {
            return Some(x);
        }
        digits_sub(ctx, &one, &ax, &mut r);
        digits_mul(ctx, &x, &r, &mut xr);
        let prev = x.clone();
        digits_add(ctx, &prev, &xr, &mut x);
    }
    None
}

pub(crate) fn reduce_bigint(ctx: &Ctx, j: usize, v: &BigInt) -> u64 {
    let m = BigInt::from(ctx.modulus(j));
    v.mod_floor(&m).to_u64().expect("reduced digit fits in u64")
}

/// Element of the truncated coefficient ring.
#[derive(Clone, PartialEq, Eq)]
pub struct CoeffElem {
    ctx: Ctx,
    digits: Vec<u64>,
}

impl fmt::Debug for CoeffElem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self)
    }
}

impl fmt::Display for CoeffElem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.digits.len() == 1 {
            return write!(f, "{}", self.digits[0]);
        }
        let mut first = true;
        for (j, d) in self.digits.iter().enumerate() {
            if *d == 0 {
                continue;
            }
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            match j {
                0 => write!(f, "{d}")?,
                1 => write!(f, "{d}*pi")?,
                _ => write!(f, "{d}*pi^{j}")?,
            }
        }
        if first {
            write!(f, "0")?;
        }
        Ok(())
    }
}

impl CoeffElem {
    pub fn zero(ctx: &Ctx) -> Self {
        CoeffElem {
            ctx: ctx.clone(),
            digits: vec![0; ctx.e() as usize],
        }
    }

    pub fn one(ctx: &Ctx) -> Self {
        Self::from_int(ctx, 1)
    }

    pub fn from_int(ctx: &Ctx, n: i64) -> Self {
        let mut digits = vec![0; ctx.e() as usize];
        digits[0] = reduce_bigint(ctx, 0, &BigInt::from(n));
        CoeffElem {
            ctx: ctx.clone(),
            digits,
        }
    }

    /// Builds `sum_j d_j pi^j` from arbitrary integer digits.
    pub fn from_digits(ctx: &Ctx, digits: &[BigInt]) -> Result<Self> {
        if digits.len() != ctx.e() as usize {
            return Err(Error::Literal(format!(
                "expected {} digits, found {}",
                ctx.e(),
                digits.len()
            )));
        }
        let digits = digits
            .iter()
            .enumerate()
            .map(|(j, d)| reduce_bigint(ctx, j, d))
            .collect();
        Ok(CoeffElem {
            ctx: ctx.clone(),
            digits,
        })
    }

    pub(crate) fn from_raw(ctx: &Ctx, digits: Vec<u64>) -> Self {
        debug_assert_eq!(digits.len(), ctx.e() as usize);
        CoeffElem {
            ctx: ctx.clone(),
            digits,
        }
    }

    /// `pi^k`, zero once `k >= N`.
    pub fn pi_power(ctx: &Ctx, k: u32) -> Self {
        let one = Self::one(ctx);
        let mut out = vec![0; ctx.e() as usize];
        digits_mul_pi(ctx, &one.digits, k, &mut out);
        CoeffElem {
            ctx: ctx.clone(),
            digits: out,
        }
    }

    pub fn context(&self) -> &Ctx {
        &self.ctx
    }

    pub fn digits(&self) -> &[u64] {
        &self.digits
    }

    /// Digits as signed integers in the symmetric range around zero.
    pub fn signed_digits(&self) -> Vec<BigInt> {
        self.digits
            .iter()
            .enumerate()
            .map(|(j, &d)| {
                let m = self.ctx.modulus(j);
                if d > m / 2 {
                    BigInt::from(d) - BigInt::from(m)
                } else {
                    BigInt::from(d)
                }
            })
            .collect()
    }

    pub fn valuation(&self) -> u32 {
        digits_valuation(&self.ctx, &self.digits)
    }

    pub fn is_zero(&self) -> bool {
        self.digits.iter().all(|d| *d == 0)
    }

    pub fn is_unit(&self) -> bool {
        self.valuation() == 0
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        ensure_same("coeff_add", &self.ctx, &other.ctx)?;
        let mut out = vec![0; self.digits.len()];
        digits_add(&self.ctx, &self.digits, &other.digits, &mut out);
        Ok(Self::from_raw(&self.ctx, out))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        ensure_same("coeff_sub", &self.ctx, &other.ctx)?;
        let mut out = vec![0; self.digits.len()];
        digits_sub(&self.ctx, &self.digits, &other.digits, &mut out);
        Ok(Self::from_raw(&self.ctx, out))
    }

    pub fn neg(&self) -> Self {
        let mut out = vec![0; self.digits.len()];
        digits_neg(&self.ctx, &self.digits, &mut out);
        Self::from_raw(&self.ctx, out)
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        ensure_same("coeff_mul", &self.ctx, &other.ctx)?;
        let mut out = vec![0; self.digits.len()];
        digits_mul(&self.ctx, &self.digits, &other.digits, &mut out);
        Ok(Self::from_raw(&self.ctx, out))
    }

    pub fn inverse(&self) -> Result<Self> {
        digits_inverse(&self.ctx, &self.digits)
            .map(|d| Self::from_raw(&self.ctx, d))
            .ok_or_else(|| Error::pre("coeff_inverse", format!("{self} is not a unit")))
    }

    pub fn mul_pi_power(&self, k: u32) -> Self {
        let mut out = vec![0; self.digits.len()];
        digits_mul_pi(&self.ctx, &self.digits, k, &mut out);
        Self::from_raw(&self.ctx, out)
    }

    /// Exact division by `pi^k`; requires `v_pi >= k`.
    pub fn div_pi_power(&self, k: u32) -> Result<Self> {
        if self.valuation() < k {
            return Err(Error::pre(
                "coeff_div_pi_power",
                format!("valuation {} below {k}", self.valuation()),
            ));
        }
        let mut out = vec![0; self.digits.len()];
        digits_div_pi(&self.ctx, &self.digits, k, &mut out);
        Ok(Self::from_raw(&self.ctx, out))
    }

    /// The unit `u` with `self = pi^v * u`, defined up to the lost top levels.
    pub fn unit_part(&self) -> Result<Self> {
        self.div_pi_power(self.valuation())
    }

    pub fn is_one(&self) -> bool {
        self.digits[0] == 1 % self.ctx.modulus(0) && self.digits[1..].iter().all(Zero::is_zero)
    }
}

#[cfg(test)]
mod tests {
    use super::super::context::PrimeContext;
    use super::*;

    #[test]
    fn ramified_arithmetic_respects_pi_squared_equals_p() {
        let ctx = PrimeContext::new(3, 1, 2, 6, 10).unwrap();
        let pi = CoeffElem::pi_power(&ctx, 1);
        let pi2 = pi.mul(&pi).unwrap();
        assert_eq!(pi2, CoeffElem::from_int(&ctx, 3));
        assert_eq!(pi.valuation(), 1);
        assert_eq!(pi2.valuation(), 2);
        assert!(CoeffElem::pi_power(&ctx, 6).is_zero());
    }

    #[test]
    fn inverse_round_trips() {
        let ctx = PrimeContext::new(5, 1, 3, 7, 10).unwrap();
        let x = CoeffElem::from_digits(
            &ctx,
            &[BigInt::from(7), BigInt::from(-3), BigInt::from(11)],
        )
        .unwrap();
        let y = x.inverse().unwrap();
        assert_eq!(x.mul(&y).unwrap(), CoeffElem::one(&ctx));
        assert!(CoeffElem::from_int(&ctx, 5).inverse().is_err());
    }

    #[test]
    fn division_by_pi_undoes_multiplication() {
        let ctx = PrimeContext::new(3, 1, 2, 6, 10).unwrap();
        let x = CoeffElem::from_digits(&ctx, &[BigInt::from(2), BigInt::from(1)]).unwrap();
        let y = x.mul_pi_power(3);
        assert_eq!(y.valuation(), 3);
        let back = y.div_pi_power(3).unwrap();
        // only the levels below N - 3 survive the round trip
        let diff = back.sub(&x).unwrap();
        assert!(diff.valuation() >= 3);
    }
}
