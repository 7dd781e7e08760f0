//! Ramification breaks read off minimal Frobenius elements, and exact fits of
//! pseudo-stable and log-bounded growth laws.

use num::rational::BigRational;
use num::{BigInt, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::series::{DecayProfile, PartialVal, Series};

/// Breaks `s_k = -w_k` at consecutive indices `k = first, first + 1, ..`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BreakSequence {
    pub breaks: Vec<BigRational>,
    /// Index `k` of the first entry.
    pub first: u32,
    pub p: u64,
    pub e: u32,
    /// Strictly increasing, `s_(k+1) > p s_k` and `p` divides no `s_k`.
    pub validated: bool,
}

impl BreakSequence {
    /// Sequence starting at `k = 1`.
    pub fn new(p: u64, e: u32, breaks: Vec<BigRational>) -> Self {
        Self::starting_at(p, e, 1, breaks)
    }

    pub fn from_ints(p: u64, breaks: &[i64]) -> Self {
        Self::new(p, 1, breaks.iter().map(|&b| BigRational::from_integer(b.into())).collect())
    }

    pub fn starting_at(p: u64, e: u32, first: u32, breaks: Vec<BigRational>) -> Self {
        let mut out = BreakSequence {
            breaks,
            first,
            p,
            e,
            validated: false,
        };
        out.validated = out.violations().is_empty();
        out
    }

    pub fn len(&self) -> usize {
        self.breaks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.breaks.is_empty()
    }

    /// `(k, s_k)` pairs.
    pub fn indexed(&self) -> impl Iterator<Item = (u32, &BigRational)> {
        self.breaks.iter().enumerate().map(|(i, s)| (self.first + i as u32, s))
    }

    /// Every failed growth inequality, written out.
    pub fn violations(&self) -> Vec<String> {
        let p = BigRational::from_integer(self.p.into());
        let mut out = Vec::new();
        let pairs: Vec<(u32, &BigRational)> = self.indexed().collect();
        for &(k, s) in &pairs {
            if s.is_integer() && (s.to_integer() % BigInt::from(self.p)).is_zero() {
                out.push(format!("p = {} divides s_{k} = {s}", self.p));
            }
        }
        for w in pairs.windows(2) {
            let ((k, a), (_, b)) = (w[0], w[1]);
            if *b <= &p * a {
                out.push(format!("s_{} = {b} <= p*s_{k} = {}", k + 1, &p * a));
            }
        }
        out
    }
}

fn to_sequence(p: u64, e: u32, levels: &[(u32, PartialVal)]) -> BreakSequence {
    let mut first = None;
    let mut breaks = Vec::new();
    for &(k, w) in levels {
        match w {
            PartialVal::Infinite => break,
            PartialVal::Finite(0) if first.is_none() => continue,
            PartialVal::Finite(w) => {
                first.get_or_insert(k);
                breaks.push(BigRational::from_integer((-w).into()));
            }
        }
    }
    BreakSequence::starting_at(p, e, first.unwrap_or(1), breaks)
}

/// `s_k = -w_k(lambda_min)` for `k = 1..K`. Leading levels with `w_k = 0`
/// carry no break and are skipped; `w_k = +inf` ends the sequence.
pub fn break_sequence_extract(lambda_min: &Series, k_max: u32) -> Result<BreakSequence> {
    const OP: &str = "break_sequence_extract";
    let ctx = lambda_min.context();
    if lambda_min.partial_valuation(0)? != PartialVal::Finite(0) {
        return Err(Error::pre(OP, "w_0(lambda_min) must be 0"));
    }
    let mut levels = Vec::with_capacity(k_max as usize);
    for k in 1..=k_max {
        levels.push((k, lambda_min.partial_valuation(k * ctx.e())?));
    }
    Ok(to_sequence(ctx.p(), ctx.e(), &levels))
}

/// `s_k = -min_g w_k(lambda_g)` over profiles read at the same levels.
/// Levels that are not positive multiples of `e` are ignored.
pub fn min_over_conjugates(profiles: &[DecayProfile]) -> Result<BreakSequence> {
    const OP: &str = "min_over_conjugates";
    let head = profiles.first().ok_or_else(|| Error::pre(OP, "need at least one profile"))?;
    let levels: Vec<u32> = head.entries.iter().map(|x| x.0).collect();
    for p in profiles {
        if p.p != head.p || p.e != head.e {
            return Err(Error::ContextMismatch { op: OP });
        }
        if p.entries.iter().map(|x| x.0).ne(levels.iter().copied()) {
            return Err(Error::pre(OP, "profiles must cover the same levels"));
        }
    }
    let e = head.e;
    let mins: Vec<(u32, PartialVal)> = levels
        .iter()
        .enumerate()
        .filter(|(_, &l)| l > 0 && l % e == 0)
        .map(|(i, &l)| (l / e, profiles.iter().map(|p| p.entries[i].1).min().expect("nonempty")))
        .collect();
    Ok(to_sequence(head.p, e, &mins))
}

/// `s_(km+i) = a_i p^(m r k) + b_i` for `n = km + i >= onset`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PseudoStableFit {
    pub m: u32,
    pub r: BigRational,
    pub a: Vec<BigRational>,
    pub b: Vec<BigRational>,
    /// First index `n` from which the law is exact.
    pub onset: u32,
    /// Growth inequalities the data violates; empty when the hypotheses hold.
    pub hypotheses_not_met: Vec<String>,
}

impl PseudoStableFit {
    pub fn predict(&self, p: u64, n: u32) -> BigRational {
        let i = (n % self.m) as usize;
        let k = n / self.m;
        let e = (BigRational::from_integer(self.m.into()) * &self.r * BigRational::from_integer(k.into()))
            .to_integer()
            .to_u32()
            .expect("m r is integral");
        &self.a[i] * BigRational::from_integer(BigInt::from(p).pow(e)) + &self.b[i]
    }
}

/// Exact fit of the pseudo-stable law. Each residue class is solved from
/// its last two points and must then hold on at least three points.
pub fn fit_pseudo_stable(s: &BreakSequence, r: &BigRational, m: u32) -> Result<Option<PseudoStableFit>> {
    const OP: &str = "fit_pseudo_stable";
    if m == 0 {
        return Err(Error::pre(OP, "period m must be positive"));
    }
    let mr = BigRational::from_integer(m.into()) * r;
    if !mr.is_integer() || mr.is_negative() {
        return Err(Error::pre(OP, "m r must be a nonnegative integer"));
    }
    if s.len() < 3 * m as usize {
        return Err(Error::data(OP, format!("need 3 full periods ({} breaks), have {}", 3 * m, s.len())));
    }
    let step = mr.to_integer().to_u32().ok_or_else(|| Error::pre(OP, "m r too large"))?;
    let pts: Vec<(u32, &BigRational)> = s.indexed().collect();
    let pk = |k: u32| BigRational::from_integer(BigInt::from(s.p).pow(step * k));
    let mut a = vec![BigRational::zero(); m as usize];
    let mut b = vec![BigRational::zero(); m as usize];
    for i in 0..m {
        let cls: Vec<&(u32, &BigRational)> = pts.iter().filter(|(n, _)| n % m == i).collect();
        let (&(n1, y1), &(n2, y2)) = (cls[cls.len() - 2], cls[cls.len() - 1]);
        let (x1, x2) = (pk(n1 / m), pk(n2 / m));
        if x1 == x2 {
            return Ok(None);
        }
        let ai = (y2 - y1) / (&x2 - &x1);
        b[i as usize] = y2 - &ai * x2;
        a[i as usize] = ai;
    }
    if a.iter().any(|ai| !ai.is_positive()) {
        return Ok(None);
    }
    let mut fit = PseudoStableFit {
        m,
        r: r.clone(),
        a,
        b,
        onset: 0,
        hypotheses_not_met: s.violations(),
    };
    let mut onset_pos = pts.len();
    while onset_pos > 0 && fit.predict(s.p, pts[onset_pos - 1].0) == *pts[onset_pos - 1].1 {
        onset_pos -= 1;
    }
    for i in 0..m {
        if pts[onset_pos..].iter().filter(|(n, _)| n % m == i).count() < 3 {
            return Ok(None);
        }
    }
    fit.onset = pts[onset_pos].0;
    Ok(Some(fit))
}

/// `c = max s_k / p^(r k)` unless the ratios `s_k / p^(r k)` climb with
/// nonshrinking increments over the last half of the data (at least three
/// points), which is read as unbounded growth and gives `None`. Where
/// `p^(r k)` is irrational the bound is rounded up; `s_k <= c p^(r k)`
/// always holds exactly.
pub fn check_log_bounded(s: &BreakSequence, r: &BigRational) -> Option<BigRational> {
    if s.is_empty() || !r.is_positive() {
        return None;
    }
    let pts: Vec<(u32, &BigRational)> = s.indexed().collect();
    let rf = r.to_f64()?;
    let ratios: Vec<f64> = pts
        .iter()
        .map(|&(k, sk)| sk.to_f64().unwrap_or(f64::INFINITY) / (s.p as f64).powf(rf * k as f64))
        .collect();
    let from = (ratios.len() / 2).min(ratios.len().saturating_sub(3));
    let tail = &ratios[from..];
    if tail.len() >= 3 {
        let steps: Vec<f64> = tail.windows(2).map(|w| w[1] - w[0]).collect();
        if steps.iter().all(|&d| d > 0.0) && steps.windows(2).all(|w| w[1] >= w[0]) {
            return None;
        }
    }
    let mut c = BigRational::zero();
    for &(k, sk) in &pts {
        let cand = ratio_upper(sk, s.p, r, k);
        if cand > c {
            c = cand;
        }
    }
    Some(c)
}

/// Rational upper bound for `x / p^(r k)`, exact when `r k` is integral.
fn ratio_upper(x: &BigRational, p: u64, r: &BigRational, k: u32) -> BigRational {
    let rk = r * BigRational::from_integer(k.into());
    if rk.is_integer() {
        return x / BigRational::from_integer(BigInt::from(p).pow(rk.to_integer().to_u32().unwrap_or(0)));
    }
    // floor of p^(rk) from below by integer root extraction
    let (num, den) = (rk.numer().to_u32().unwrap_or(0), rk.denom().to_u32().unwrap_or(1));
    let floor = BigInt::from(p).pow(num).nth_root(den);
    if floor.is_zero() {
        return x.clone();
    }
    x / BigRational::from_integer(floor)
}

impl BreakSequence {
    /// `s_k <= c p^(r k)` on every stored index, checked exactly.
    pub fn bounded_by(&self, c: &BigRational, r: &BigRational) -> bool {
        let (num, den) = match (r.numer().to_u32(), r.denom().to_u32()) {
            (Some(n), Some(d)) => (n, d),
            _ => return false,
        };
        self.indexed().all(|(k, sk)| {
            if !sk.is_positive() {
                return true;
            }
            if c.is_negative() {
                return false;
            }
            // (s/c)^den <= p^(num k)
            let lhs = num::pow(sk / c, den as usize);
            lhs <= BigRational::from_integer(BigInt::from(self.p).pow(num * k))
        })
    }
}

/// `s_k = a p^k + b` for `k = 1..k_max`.
pub fn geometric_breaks(p: u64, a: &BigRational, b: &BigRational, k_max: u32) -> Vec<BigRational> {
    (1..=k_max)
        .map(|k| a * BigRational::from_integer(BigInt::from(p).pow(k)) + b)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::PrimeContext;

    fn q(a: i64, b: i64) -> BigRational {
        BigRational::new(a.into(), b.into())
    }

    fn ints(v: &[i64]) -> Vec<BigRational> {
        v.iter().map(|&x| q(x, 1)).collect()
    }

    #[test]
    fn reads_breaks_from_lambda() {
        let c = PrimeContext::new(3, 1, 1, 5, 100).unwrap();
        let l = Series::from_ints(&c, &[(0, 1), (-2, 3), (-7, 9), (-22, 27)]).unwrap();
        let s = break_sequence_extract(&l, 3).unwrap();
        assert_eq!(s.breaks, ints(&[2, 7, 22]));
        assert!(s.validated);
        let s = break_sequence_extract(&Series::one(&c), 4).unwrap();
        assert!(s.is_empty());
        let l = Series::from_ints(&c, &[(0, 1), (-1, 3), (-2, 9)]).unwrap();
        let s = break_sequence_extract(&l, 2).unwrap();
        assert_eq!(s.breaks, ints(&[1, 2]));
        assert!(!s.validated);
        assert_eq!(s.violations(), vec!["s_2 = 2 <= p*s_1 = 3".to_string()]);
        let l = Series::from_ints(&c, &[(0, 2), (-2, 3)]).unwrap();
        assert!(break_sequence_extract(&l, 2).is_ok());
        let l = Series::from_ints(&c, &[(-1, 1)]).unwrap();
        assert!(break_sequence_extract(&l, 2).is_err());
        let l = Series::from_ints(&c, &[(0, 1), (-4, 9)]).unwrap();
        let s = break_sequence_extract(&l, 3).unwrap();
        assert_eq!((s.first, s.breaks.clone()), (2, ints(&[4, 4])));
    }

    #[test]
    fn pointwise_minimum() {
        let prof = |v: &[Option<i64>]| {
            DecayProfile::new(
                3,
                1,
                v.iter()
                    .enumerate()
                    .map(|(i, w)| (i as u32 + 1, w.map_or(PartialVal::Infinite, PartialVal::Finite)))
                    .collect(),
            )
        };
        let a = prof(&[Some(-2), Some(-7)]);
        let b = prof(&[Some(-3), Some(-5)]);
        let s = min_over_conjugates(&[a.clone(), b]).unwrap();
        assert_eq!(s.breaks, ints(&[3, 7]));
        let inf = prof(&[None, None]);
        assert_eq!(min_over_conjugates(&[a.clone(), inf]).unwrap().breaks, ints(&[2, 7]));
        assert_eq!(min_over_conjugates(std::slice::from_ref(&a)).unwrap().breaks, ints(&[2, 7]));
        assert!(min_over_conjugates(&[a, prof(&[Some(-1)])]).is_err());
        assert!(min_over_conjugates(&[]).is_err());
    }

    #[test]
    fn pseudo_stable_fits() {
        let s = BreakSequence::from_ints(3, &[2, 7, 22]);
        let fit = fit_pseudo_stable(&s, &q(1, 1), 1).unwrap().unwrap();
        assert_eq!((fit.a.clone(), fit.b.clone(), fit.onset), (vec![q(5, 6)], vec![q(-1, 2)], 1));
        assert!(fit.hypotheses_not_met.is_empty());
        let s = BreakSequence::from_ints(3, &[1, 3, 9]);
        let fit = fit_pseudo_stable(&s, &q(1, 1), 1).unwrap().unwrap();
        assert_eq!((fit.a.clone(), fit.b.clone()), (vec![q(1, 3)], vec![q(0, 1)]));
        assert!(!fit.hypotheses_not_met.is_empty());
        let s = BreakSequence::from_ints(3, &[1, 2, 3, 4]);
        assert_eq!(fit_pseudo_stable(&s, &q(1, 1), 1).unwrap(), None);
        assert!(fit_pseudo_stable(&BreakSequence::from_ints(3, &[1, 4]), &q(1, 1), 1).is_err());
        assert!(fit_pseudo_stable(&s, &q(1, 2), 1).is_err());
    }

    #[test]
    fn onset_skips_a_transient() {
        let mut v = ints(&[5]);
        v.extend(geometric_breaks(3, &q(5, 6), &q(-1, 2), 5).into_iter().skip(1));
        let s = BreakSequence::new(3, 1, v);
        let fit = fit_pseudo_stable(&s, &q(1, 1), 1).unwrap().unwrap();
        assert_eq!(fit.onset, 2);
    }

    #[test]
    fn period_two() {
        // s_n = a_(n mod 2) 9^(n div 2) + b_(n mod 2)
        let law = |n: u32| if n.is_multiple_of(2) { 2 * 9i64.pow(n / 2) - 1 } else { 5 * 9i64.pow(n / 2) + 1 };
        let v: Vec<i64> = (1..=7).map(law).collect();
        let s = BreakSequence::from_ints(3, &v);
        let fit = fit_pseudo_stable(&s, &q(1, 1), 2).unwrap().unwrap();
        assert_eq!(fit.a, vec![q(2, 1), q(5, 1)]);
        assert_eq!(fit.b, vec![q(-1, 1), q(1, 1)]);
    }

    #[test]
    fn log_bounds() {
        let s = BreakSequence::from_ints(3, &[2, 7, 22]);
        assert_eq!(check_log_bounded(&s, &q(1, 1)), Some(q(22, 27)));
        assert_eq!(check_log_bounded(&s, &q(1, 2)), None);
        let one = BreakSequence::from_ints(3, &[1]);
        assert_eq!(check_log_bounded(&one, &q(1, 1)), Some(q(1, 3)));
        let c = check_log_bounded(&one, &q(1, 2)).unwrap();
        assert!(one.bounded_by(&c, &q(1, 2)));
        assert!(!one.bounded_by(&q(1, 2), &q(1, 2)));
    }
}
