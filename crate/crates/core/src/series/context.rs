use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

/// Shared handle to a [`PrimeContext`].
pub type Ctx = Arc<PrimeContext>;

/// Largest modulus a single coefficient digit may need.
const DIGIT_LIMIT: u128 = 1 << 62;

/// Arithmetic universe for truncated series: the prime `p`, residue degree `f`
/// (so `q = p^f`), ramification index `e` of the uniformizer `pi` with
/// `pi^e = p`, the pi-adic precision `N` and the exponent window `W`.
#[derive(Clone, PartialEq, Eq)]
pub struct PrimeContext {
    p: u64,
    f: u32,
    e: u32,
    prec: u32,
    window: i64,
    q: u64,
    moduli: Vec<u64>,
}

impl fmt::Debug for PrimeContext {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "PrimeContext(p={}, f={}, e={}, N={}, W={})",
            self.p, self.f, self.e, self.prec, self.window
        )
    }
}

fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2u64;
    while d.saturating_mul(d) <= n {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

impl PrimeContext {
    pub fn new(p: u64, f: u32, e: u32, prec: u32, window: i64) -> Result<Ctx> {
        const OP: &str = "PrimeContext::new";
        if !is_prime(p) || p < 3 {
            return Err(Error::pre(OP, format!("p = {p} must be a prime >= 3")));
        }
        if f == 0 || e == 0 {
            return Err(Error::pre(OP, "f and e must be at least 1"));
        }
        if prec == 0 || window <= 0 {
            return Err(Error::pre(OP, "prec and window must be positive"));
        }
        let q = (p as u128)
            .checked_pow(f)
            .filter(|q| *q < DIGIT_LIMIT)
            .ok_or_else(|| Error::pre(OP, format!("q = {p}^{f} does not fit in 62 bits")))?
            as u64;
        let mut moduli = Vec::with_capacity(e as usize);
        for j in 0..e {
            let exp = (prec as i64 - j as i64).max(0);
            let exp = (exp + e as i64 - 1) / e as i64;
            let m = (p as u128)
                .checked_pow(exp as u32)
                .filter(|m| *m < DIGIT_LIMIT)
                .ok_or_else(|| {
                    Error::pre(
                        OP,
                        format!("p^{exp} does not fit in 62 bits; lower the precision"),
                    )
                })?;
            moduli.push(m as u64);
        }
        Ok(Arc::new(PrimeContext {
            p,
            f,
            e,
            prec,
            window,
            q,
            moduli,
        }))
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn f(&self) -> u32 {
        self.f
    }

    pub fn e(&self) -> u32 {
        self.e
    }

    pub fn q(&self) -> u64 {
        self.q
    }

    /// pi-adic precision `N`: values are known modulo `pi^N`.
    pub fn prec(&self) -> u32 {
        self.prec
    }

    pub fn window(&self) -> i64 {
        self.window
    }

    /// Modulus of digit `j`, namely `p^ceil((N - j) / e)`.
    pub fn modulus(&self, j: usize) -> u64 {
        self.moduli[j]
    }

    pub fn with_prec(&self, prec: u32) -> Result<Ctx> {
        PrimeContext::new(self.p, self.f, self.e, prec, self.window)
    }

    pub fn with_window(&self, window: i64) -> Result<Ctx> {
        PrimeContext::new(self.p, self.f, self.e, self.prec, window)
    }

    pub(crate) fn check_window(&self, op: &'static str, exponent: i128) -> Result<i64> {
        if exponent.unsigned_abs() > self.window as u128 {
            Err(Error::WindowOverflow {
                op,
                exponent,
                window: self.window,
            })
        } else {
            Ok(exponent as i64)
        }
    }
}

pub(crate) fn same(a: &Ctx, b: &Ctx) -> bool {
    Arc::ptr_eq(a, b) || **a == **b
}

pub(crate) fn ensure_same(op: &'static str, a: &Ctx, b: &Ctx) -> Result<()> {
    if same(a, b) {
        Ok(())
    } else {
        Err(Error::ContextMismatch { op })
    }
}
