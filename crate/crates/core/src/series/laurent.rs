//! Sparse truncated Laurent series `sum a_n T^n` with exponents in `[-W, W]`.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use num::{BigInt, Signed, Zero};

use super::coeff::{
    digits_add, digits_div_pi, digits_inverse, digits_mul, digits_mul_acc, digits_mul_pi,
    digits_neg, digits_sub, digits_valuation, finish, CoeffElem,
};
use super::context::{ensure_same, same, Ctx};
use crate::error::{Error, Result};

/// Dense accumulators above this many slots switch to a hash map.
const DENSE_LIMIT: i128 = 1 << 22;

/// Element of `O_E` known modulo `pi^N` and the exponent window.
///
/// Terms are kept sorted by exponent and no stored coefficient is zero, so
/// structural equality is equality of series.
#[derive(Clone, PartialEq, Eq)]
pub struct Series {
    ctx: Ctx,
    exps: Vec<i64>,
    digits: Vec<u64>,
}

impl Series {
    pub fn zero(ctx: &Ctx) -> Self {
        Series {
            ctx: ctx.clone(),
            exps: Vec::new(),
            digits: Vec::new(),
        }
    }

    pub fn one(ctx: &Ctx) -> Self {
        Self::constant(&CoeffElem::one(ctx))
    }

    pub fn constant(c: &CoeffElem) -> Self {
        let ctx = c.context();
        let mut s = Self::zero(ctx);
        if !c.is_zero() {
            s.exps.push(0);
            s.digits.extend_from_slice(c.digits());
        }
        s
    }

    pub fn monomial(c: &CoeffElem, exponent: i64) -> Result<Self> {
        let ctx = c.context();
        ctx.check_window("series_monomial", exponent as i128)?;
        let mut s = Self::zero(ctx);
        if !c.is_zero() {
            s.exps.push(exponent);
            s.digits.extend_from_slice(c.digits());
        }
        Ok(s)
    }

    /// Sums the given terms; repeated exponents are added together.
    pub fn from_terms<I>(ctx: &Ctx, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (i64, CoeffElem)>,
    {
        let e = ctx.e() as usize;
        let mut map: BTreeMap<i64, Vec<u64>> = BTreeMap::new();
        for (n, c) in terms {
            ensure_same("series_from_terms", ctx, c.context())?;
            ctx.check_window("series_from_terms", n as i128)?;
            let slot = map.entry(n).or_insert_with(|| vec![0; e]);
            let prev = slot.clone();
            digits_add(ctx, &prev, c.digits(), slot);
        }
        let mut s = Self::zero(ctx);
        for (n, d) in map {
            s.push_raw(n, &d);
        }
        Ok(s)
    }

    /// Series with integer coefficients, e.g. `&[(0, 1), (-1, 3)]` for `1 + 3T^-1`.
    pub fn from_ints(ctx: &Ctx, terms: &[(i64, i64)]) -> Result<Self> {
        Self::from_terms(
            ctx,
            terms.iter().map(|&(n, c)| (n, CoeffElem::from_int(ctx, c))),
        )
    }

    fn push_raw(&mut self, n: i64, d: &[u64]) {
        if d.iter().any(|x| *x != 0) {
            debug_assert!(self.exps.last().is_none_or(|l| *l < n));
            self.exps.push(n);
            self.digits.extend_from_slice(d);
        }
    }

    fn e(&self) -> usize {
        self.ctx.e() as usize
    }

    pub fn context(&self) -> &Ctx {
        &self.ctx
    }

    pub fn len(&self) -> usize {
        self.exps.len()
    }

    pub fn is_zero(&self) -> bool {
        self.exps.is_empty()
    }

    pub fn is_one(&self) -> bool {
        self.exps == [0] && CoeffElem::from_raw(&self.ctx, self.digits.clone()).is_one()
    }

    pub fn exponents(&self) -> &[i64] {
        &self.exps
    }

    pub(crate) fn raw_digits(&self, i: usize) -> &[u64] {
        let e = self.e();
        &self.digits[i * e..(i + 1) * e]
    }

    pub fn terms(&self) -> impl Iterator<Item = (i64, CoeffElem)> + '_ {
        self.exps
            .iter()
            .enumerate()
            .map(|(i, &n)| (n, CoeffElem::from_raw(&self.ctx, self.raw_digits(i).to_vec())))
    }

    /// Coefficient of `T^n`.
    pub fn coeff(&self, n: i64) -> CoeffElem {
        match self.exps.binary_search(&n) {
            Ok(i) => CoeffElem::from_raw(&self.ctx, self.raw_digits(i).to_vec()),
            Err(_) => CoeffElem::zero(&self.ctx),
        }
    }

    pub(crate) fn term_valuation(&self, i: usize) -> u32 {
        digits_valuation(&self.ctx, self.raw_digits(i))
    }

    /// `min_n v_pi(a_n)`, or `N` for the zero series.
    pub fn valuation(&self) -> u32 {
        (0..self.len())
            .map(|i| self.term_valuation(i))
            .min()
            .unwrap_or(self.ctx.prec())
    }

    pub fn min_exponent(&self) -> Option<i64> {
        self.exps.first().copied()
    }

    pub fn max_exponent(&self) -> Option<i64> {
        self.exps.last().copied()
    }

    /// Largest `|n|` over the support, zero for the zero series.
    pub fn max_abs_exponent(&self) -> i64 {
        self.exps.iter().map(|n| n.abs()).max().unwrap_or(0)
    }

    fn merge(&self, other: &Self, op: &'static str, negate_other: bool) -> Result<Self> {
        ensure_same(op, &self.ctx, &other.ctx)?;
        let e = self.e();
        let ctx = &self.ctx;
        let mut out = Series::zero(ctx);
        out.exps.reserve(self.len() + other.len());
        let mut buf = vec![0u64; e];
        let (mut i, mut j) = (0, 0);
        while i < self.len() || j < other.len() {
            let take_left = j >= other.len() || (i < self.len() && self.exps[i] < other.exps[j]);
            let take_right = i >= self.len() || (j < other.len() && other.exps[j] < self.exps[i]);
            if take_left {
                out.push_raw(self.exps[i], self.raw_digits(i));
                i += 1;
            } else if take_right {
                if negate_other {
                    digits_neg(ctx, other.raw_digits(j), &mut buf);
                    out.push_raw(other.exps[j], &buf);
                } else {
                    out.push_raw(other.exps[j], other.raw_digits(j));
                }
                j += 1;
            } else {
                if negate_other {
                    digits_sub(ctx, self.raw_digits(i), other.raw_digits(j), &mut buf);
                } else {
                    digits_add(ctx, self.raw_digits(i), other.raw_digits(j), &mut buf);
                }
                out.push_raw(self.exps[i], &buf);
                i += 1;
                j += 1;
            }
        }
        Ok(out)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.merge(other, "series_add", false)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.merge(other, "series_sub", true)
    }

    pub fn neg(&self) -> Self {
        let mut out = self.clone();
        let e = self.e();
        for i in 0..self.len() {
            let src = self.raw_digits(i).to_vec();
            digits_neg(&self.ctx, &src, &mut out.digits[i * e..(i + 1) * e]);
        }
        out
    }

    /// Multiplies every coefficient by `c`.
    pub fn scale(&self, c: &CoeffElem) -> Result<Self> {
        ensure_same("series_scale", &self.ctx, c.context())?;
        let mut out = Series::zero(&self.ctx);
        let mut buf = vec![0u64; self.e()];
        for i in 0..self.len() {
            digits_mul(&self.ctx, self.raw_digits(i), c.digits(), &mut buf);
            out.push_raw(self.exps[i], &buf);
        }
        Ok(out)
    }

    pub fn mul_pi_power(&self, k: u32) -> Self {
        let mut out = Series::zero(&self.ctx);
        let mut buf = vec![0u64; self.e()];
        for i in 0..self.len() {
            digits_mul_pi(&self.ctx, self.raw_digits(i), k, &mut buf);
            out.push_raw(self.exps[i], &buf);
        }
        out
    }

    /// Exact division by `pi^k`. The result is a representative whose top `k`
    /// pi-levels are zero-filled; it is meaningful modulo `pi^(N-k)`.
    pub fn div_pi_power(&self, k: u32) -> Result<Self> {
        if self.valuation() < k {
            return Err(Error::pre(
                "series_div_pi_power",
                format!("valuation {} is below {k}", self.valuation()),
            ));
        }
        let mut out = Series::zero(&self.ctx);
        let mut buf = vec![0u64; self.e()];
        for i in 0..self.len() {
            digits_div_pi(&self.ctx, self.raw_digits(i), k, &mut buf);
            out.push_raw(self.exps[i], &buf);
        }
        Ok(out)
    }

    /// Reduction modulo `pi^level` inside the same context.
    pub fn truncate_level(&self, level: u32) -> Self {
        if level >= self.ctx.prec() {
            return self.clone();
        }
        let e = self.ctx.e();
        let p = self.ctx.p();
        let mods: Vec<u64> = (0..e)
            .map(|j| {
                let ex = (level as i64 - j as i64).max(0);
                p.pow(((ex + e as i64 - 1) / e as i64) as u32)
            })
            .collect();
        let mut out = Series::zero(&self.ctx);
        let mut buf = vec![0u64; e as usize];
        for i in 0..self.len() {
            for (j, d) in self.raw_digits(i).iter().enumerate() {
                buf[j] = d % mods[j];
            }
            out.push_raw(self.exps[i], &buf);
        }
        out
    }

    /// Multiplies by `T^shift`.
    pub fn shift(&self, shift: i64) -> Result<Self> {
        let mut out = self.clone();
        for n in out.exps.iter_mut() {
            *n = self.ctx.check_window("series_shift", *n as i128 + shift as i128)?;
        }
        Ok(out)
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        const OP: &str = "series_mul";
        ensure_same(OP, &self.ctx, &other.ctx)?;
        let ctx = &self.ctx;
        if self.is_zero() || other.is_zero() {
            return Ok(Series::zero(ctx));
        }
        let n = ctx.prec() as usize;
        let e = self.e();
        let va: Vec<usize> = (0..self.len()).map(|i| self.term_valuation(i) as usize).collect();
        let mut buckets: Vec<Vec<usize>> = vec![Vec::new(); n];
        for j in 0..other.len() {
            buckets[other.term_valuation(j) as usize].push(j);
        }
        // prefix extremes of `other` over valuations below each threshold
        let mut lo = vec![i64::MAX; n + 1];
        let mut hi = vec![i64::MIN; n + 1];
        for t in 0..n {
            lo[t + 1] = lo[t];
            hi[t + 1] = hi[t];
            for &j in &buckets[t] {
                lo[t + 1] = lo[t + 1].min(other.exps[j]);
                hi[t + 1] = hi[t + 1].max(other.exps[j]);
            }
        }
        let mut min_sum = i128::MAX;
        let mut max_sum = i128::MIN;
        for i in 0..self.len() {
            let t = n - va[i];
            if lo[t] == i64::MAX {
                continue;
            }
            let a = self.exps[i] as i128 + lo[t] as i128;
            let b = self.exps[i] as i128 + hi[t] as i128;
            ctx.check_window(OP, a)?;
            ctx.check_window(OP, b)?;
            min_sum = min_sum.min(a);
            max_sum = max_sum.max(b);
        }
        if min_sum == i128::MAX {
            return Ok(Series::zero(ctx));
        }
        let span = max_sum - min_sum + 1;
        let mut out = Series::zero(ctx);
        let mut buf = vec![0u64; e];
        if span * (e as i128) <= DENSE_LIMIT {
            let base = min_sum as i64;
            let mut acc = vec![0u128; span as usize * e];
            for i in 0..self.len() {
                let ai = self.raw_digits(i);
                for bucket in buckets.iter().take(n - va[i]) {
                    for &j in bucket {
                        let slot = (self.exps[i] + other.exps[j] - base) as usize;
                        digits_mul_acc(ctx, ai, other.raw_digits(j), &mut acc[slot * e..(slot + 1) * e]);
                    }
                }
            }
            for slot in 0..span as usize {
                let a = &acc[slot * e..(slot + 1) * e];
                if a.iter().all(|x| *x == 0) {
                    continue;
                }
                finish(ctx, a, &mut buf);
                out.push_raw(base + slot as i64, &buf);
            }
        } else {
            let mut index: HashMap<i64, usize> = HashMap::new();
            let mut acc: Vec<u128> = Vec::new();
            for i in 0..self.len() {
                let ai = self.raw_digits(i);
                for bucket in buckets.iter().take(n - va[i]) {
                    for &j in bucket {
                        let s = self.exps[i] + other.exps[j];
                        let slot = *index.entry(s).or_insert_with(|| {
                            acc.extend(std::iter::repeat_n(0, e));
                            acc.len() / e - 1
                        });
                        digits_mul_acc(ctx, ai, other.raw_digits(j), &mut acc[slot * e..(slot + 1) * e]);
                    }
                }
            }
            let mut keys: Vec<(i64, usize)> = index.into_iter().collect();
            keys.sort_unstable();
            for (s, slot) in keys {
                finish(ctx, &acc[slot * e..(slot + 1) * e], &mut buf);
                out.push_raw(s, &buf);
            }
        }
        Ok(out)
    }

    pub fn pow(&self, k: u32) -> Result<Self> {
        let mut out = Series::one(&self.ctx);
        for _ in 0..k {
            out = out.mul(self)?;
        }
        Ok(out)
    }

    /// Multiplicative inverse of a series whose reduction modulo `pi` is a
    /// nonzero constant.
    pub fn invert(&self) -> Result<Self> {
        const OP: &str = "series_invert";
        let units: Vec<usize> = (0..self.len()).filter(|&i| self.term_valuation(i) == 0).collect();
        match units.as_slice() {
            [] => return Err(Error::pre(OP, "not a unit: no coefficient of valuation 0")),
            [i] if self.exps[*i] != 0 => {
                return Err(Error::pre(
                    OP,
                    format!(
                        "unit term sits at T^{}; normalize by a monomial first",
                        self.exps[*i]
                    ),
                ))
            }
            [_] => {}
            _ => {
                return Err(Error::pre(
                    OP,
                    "reduction modulo pi is not a monomial; the inverse is not a truncated Laurent series",
                ))
            }
        }
        let c0 = digits_inverse(&self.ctx, self.raw_digits(units[0]))
            .ok_or_else(|| Error::pre(OP, "constant term is not invertible"))?;
        let one = Series::one(&self.ctx);
        let mut z = Series::constant(&CoeffElem::from_raw(&self.ctx, c0));
        let limit = 2 * (self.ctx.prec() as usize).max(1) + 8;
        for _ in 0..limit {
            let r = one.sub(&self.mul(&z)?)?;
            if r.is_zero() {
                return Ok(z);
            }
            z = z.add(&z.mul(&r)?)?;
        }
        Err(Error::NonConvergence {
            op: OP,
            iterations: limit,
        })
    }

    /// `sigma^iterate`, i.e. `T -> T^(q^iterate)` with constants fixed.
    pub fn frobenius(&self, iterate: u32) -> Result<Self> {
        const OP: &str = "frobenius_apply";
        if iterate == 0 || self.is_zero() {
            return Ok(self.clone());
        }
        let factor = (self.ctx.q() as i128).checked_pow(iterate);
        let mut out = self.clone();
        for n in out.exps.iter_mut() {
            if *n == 0 {
                continue;
            }
            let m = factor
                .and_then(|f| f.checked_mul(*n as i128))
                .unwrap_or(if *n < 0 { i128::MIN } else { i128::MAX });
            *n = self.ctx.check_window(OP, m)?;
        }
        Ok(out)
    }

    /// Re-expresses the series in a context sharing `p`, `f` and `e`. Lower
    /// precision reduces, higher precision zero-extends the representative.
    pub fn change_context(&self, ctx: &Ctx) -> Result<Self> {
        const OP: &str = "series_change_context";
        if ctx.p() != self.ctx.p() || ctx.f() != self.ctx.f() || ctx.e() != self.ctx.e() {
            return Err(Error::ContextMismatch { op: OP });
        }
        if same(ctx, &self.ctx) {
            return Ok(self.clone());
        }
        let mut out = Series::zero(ctx);
        let mut buf = vec![0u64; self.e()];
        for i in 0..self.len() {
            ctx.check_window(OP, self.exps[i] as i128)?;
            for (j, d) in self.raw_digits(i).iter().enumerate() {
                buf[j] = d % ctx.modulus(j);
            }
            out.push_raw(self.exps[i], &buf);
        }
        Ok(out)
    }

    /// Sum of the terms whose exponent satisfies `keep`.
    pub fn filter_exponents(&self, keep: impl Fn(i64) -> bool) -> Self {
        let mut out = Series::zero(&self.ctx);
        for i in 0..self.len() {
            if keep(self.exps[i]) {
                out.push_raw(self.exps[i], self.raw_digits(i));
            }
        }
        out
    }

    /// Applies `n -> n / d` to every exponent; all exponents must be divisible by `d`.
    pub(crate) fn divide_exponents(&self, d: i64) -> Self {
        let mut out = self.clone();
        for n in out.exps.iter_mut() {
            debug_assert_eq!(*n % d, 0);
            *n /= d;
        }
        out
    }

    /// True when the series is congruent to 1 modulo `pi`.
    pub fn is_one_mod_pi(&self) -> bool {
        self.sub(&Series::one(&self.ctx))
            .map(|d| d.valuation() >= 1)
            .unwrap_or(false)
    }
}

fn fmt_coeff(c: &CoeffElem) -> (bool, String) {
    let digits = c.signed_digits();
    if digits.len() == 1 {
        let d = &digits[0];
        return (d.is_negative(), d.abs().to_string());
    }
    let parts: Vec<String> = digits
        .iter()
        .enumerate()
        .filter(|(_, d)| !d.is_zero())
        .map(|(j, d)| match j {
            0 => d.to_string(),
            1 => format!("{d}*pi"),
            _ => format!("{d}*pi^{j}"),
        })
        .collect();
    (false, format!("({})", parts.join(" + ")))
}

impl fmt::Display for Series {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let one = BigInt::from(1);
        for (idx, (n, c)) in self.terms().enumerate() {
            let (neg, body) = fmt_coeff(&c);
            match (idx, neg) {
                (0, true) => write!(f, "-")?,
                (0, false) => {}
                (_, true) => write!(f, " - ")?,
                (_, false) => write!(f, " + ")?,
            }
            let unit = c.digits().len() == 1 && body == one.to_string();
            match (n, unit) {
                (0, _) => write!(f, "{body}")?,
                (_, true) => write!(f, "T^{n}")?,
                (_, false) => write!(f, "{body}*T^{n}")?,
            }
        }
        Ok(())
    }
}

impl fmt::Debug for Series {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Series[{}]", self)
    }
}
