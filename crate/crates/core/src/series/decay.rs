//! Partial valuations `w_k` and classification of their growth.

use std::fmt;

use num::bigint::ToBigInt;
use num::{BigInt, BigRational, One, Signed, ToPrimitive, Zero};

use super::laurent::Series;
use crate::error::{Error, Result};

/// Value of a partial valuation: a finite exponent or `+infinity`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PartialVal {
    Finite(i64),
    Infinite,
}

impl PartialVal {
    pub fn finite(self) -> Option<i64> {
        match self {
            PartialVal::Finite(n) => Some(n),
            PartialVal::Infinite => None,
        }
    }

    pub fn is_infinite(self) -> bool {
        matches!(self, PartialVal::Infinite)
    }
}

impl fmt::Display for PartialVal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PartialVal::Finite(n) => write!(f, "{n}"),
            PartialVal::Infinite => write!(f, "inf"),
        }
    }
}

impl Series {
    /// `w_k` for `k = level / e`: the smallest exponent whose coefficient has
    /// `v_pi <= level`, i.e. the lowest power of `T` left after reducing modulo
    /// `pi^(level + 1)`. Needs `level < N`.
    pub fn partial_valuation(&self, level: u32) -> Result<PartialVal> {
        if level >= self.context().prec() {
            return Err(Error::PrecisionExceeded {
                op: "partial_valuation",
                level,
                prec: self.context().prec(),
            });
        }
        for (i, &n) in self.exponents().iter().enumerate() {
            if self.term_valuation(i) <= level {
                return Ok(PartialVal::Finite(n));
            }
        }
        Ok(PartialVal::Infinite)
    }

    /// Profile of `w_k` for `k = 0, 1/e, ..., max_level / e`.
    pub fn decay_profile(&self, max_level: u32) -> Result<DecayProfile> {
        let ctx = self.context();
        let entries = (0..=max_level)
            .map(|level| self.partial_valuation(level).map(|w| (level, w)))
            .collect::<Result<Vec<_>>>()?;
        Ok(DecayProfile {
            p: ctx.p(),
            e: ctx.e(),
            entries,
        })
    }
}

/// Readings `(level, w_{level/e})` of one series.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DecayProfile {
    pub p: u64,
    pub e: u32,
    pub entries: Vec<(u32, PartialVal)>,
}

impl DecayProfile {
    pub fn new(p: u64, e: u32, entries: Vec<(u32, PartialVal)>) -> Self {
        DecayProfile { p, e, entries }
    }

    /// Profile with entries at levels `0, 1, 2, ...`.
    pub fn from_values(p: u64, e: u32, values: &[PartialVal]) -> Self {
        let entries = values
            .iter()
            .enumerate()
            .map(|(i, w)| (i as u32, *w))
            .collect();
        DecayProfile { p, e, entries }
    }

    pub fn k(&self, level: u32) -> BigRational {
        BigRational::new(level.into(), self.e.into())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn values(&self) -> Vec<PartialVal> {
        self.entries.iter().map(|(_, w)| *w).collect()
    }
}

/// Growth class of a profile together with the bound it asserts.
#[derive(Clone, Debug, PartialEq)]
pub enum DecayClass {
    /// `w_k >= -(m k + c)` on every profiled `k`.
    Overconvergent { m: BigRational, c: BigRational },
    /// `w_k >= -c p^(r k)` on every profiled `k`.
    LogDecay { r: BigRational, c: BigRational },
    Inconclusive,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Classification {
    pub class: DecayClass,
    /// Levels spanned by the last half of the finite entries.
    pub range: (u32, u32),
    /// Spread of the ratio statistic the decision was based on.
    pub residual: f64,
}

fn rat(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

fn to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

/// Exact test of `g <= c * p^(r k)` with `k = level / e`.
fn below_log_bound(g: i64, c: &BigRational, r: &BigRational, p: u64, level: u32, e: u32) -> bool {
    if g <= 0 {
        return !c.is_negative();
    }
    if !c.is_positive() {
        return false;
    }
    // g^D * cd^D <= cn^D * p^(num * level) with D = den * e
    let num = r.numer().to_i64().unwrap_or(0);
    let den = r.denom().to_u32().unwrap_or(1);
    let d = den * e;
    let lhs = BigInt::from(g).pow(d) * c.denom().pow(d);
    let exp = num * level as i64;
    let pp = BigInt::from(p);
    if exp >= 0 {
        lhs <= c.numer().pow(d) * pp.pow(exp as u32)
    } else {
        lhs * pp.pow((-exp) as u32) <= c.numer().pow(d)
    }
}

impl DecayClass {
    /// Checks the asserted bound against every entry of `profile`.
    pub fn holds(&self, profile: &DecayProfile) -> bool {
        profile.entries.iter().all(|&(level, w)| {
            let Some(w) = w.finite() else { return true };
            let g = -w;
            match self {
                DecayClass::Overconvergent { m, c } => rat(g) <= m * profile.k(level) + c,
                DecayClass::LogDecay { r, c } => {
                    below_log_bound(g, c, r, profile.p, level, profile.e)
                }
                DecayClass::Inconclusive => true,
            }
        })
    }
}

fn round_up_rational(x: f64) -> BigRational {
    let scaled = (x * 1e6).ceil();
    BigRational::new(
        (scaled as i64).to_bigint().unwrap_or_default(),
        BigInt::from(1_000_000),
    )
}

/// Classifies the growth of `-w_k` as linear or as `p^(r k)`.
///
/// Ratios `(-w_{k+1/e}) / (-w_k)` over the last half of the finite entries
/// decide: all ratios at most `1 + 2/k` gives a linear fit, otherwise the
/// median of `e log_p` of the ratios, rounded to a multiple of `1/(2e)`, is the
/// rate. The returned bound is verified exactly on the whole profile.
pub fn decay_classify(profile: &DecayProfile) -> Result<Classification> {
    const OP: &str = "decay_classify";
    let p = profile.p;
    let e = profile.e;
    let finite: Vec<(u32, i64)> = profile
        .entries
        .iter()
        .filter_map(|&(l, w)| w.finite().map(|w| (l, -w)))
        .collect();
    if finite.len() < 4 {
        return Err(Error::data(
            OP,
            format!("{} finite entries, need at least 4", finite.len()),
        ));
    }
    let tail = &finite[finite.len() / 2..];
    let range = (tail[0].0, tail[tail.len() - 1].0);
    let mut ratios: Vec<(f64, f64)> = Vec::new();
    for pair in tail.windows(2) {
        let (la, ga) = pair[0];
        let (_, gb) = pair[1];
        if ga > 0 && gb > 0 {
            ratios.push((la as f64 / e as f64, gb as f64 / ga as f64));
        }
    }
    let linear = ratios
        .iter()
        .all(|&(k, rho)| k <= 0.0 || rho <= 1.0 + 2.0 / k);
    if !linear {
        let mut logs: Vec<f64> = ratios
            .iter()
            .map(|&(_, rho)| e as f64 * rho.ln() / (p as f64).ln())
            .collect();
        logs.sort_by(|a, b| a.total_cmp(b));
        let median = if logs.len() % 2 == 1 {
            logs[logs.len() / 2]
        } else {
            (logs[logs.len() / 2 - 1] + logs[logs.len() / 2]) / 2.0
        };
        let step = 2 * e as i64;
        let r = BigRational::new(
            BigInt::from((median * step as f64).round() as i64),
            BigInt::from(step),
        );
        let spread = logs.last().unwrap_or(&0.0) - logs.first().unwrap_or(&0.0);
        if r.is_positive() {
            return Ok(log_fit(&finite, tail, r, p, e, range, spread));
        }
    }
    let max_rho = ratios.iter().map(|r| r.1).fold(1.0f64, f64::max);
    Ok(linear_fit(&finite, tail, e, range, max_rho - 1.0))
}

fn linear_fit(
    all: &[(u32, i64)],
    tail: &[(u32, i64)],
    e: u32,
    range: (u32, u32),
    residual: f64,
) -> Classification {
    let k = |l: u32| BigRational::new(l.into(), e.into());
    let mut m = BigRational::zero();
    for pair in tail.windows(2) {
        let slope = (rat(pair[1].1) - rat(pair[0].1)) / (k(pair[1].0) - k(pair[0].0));
        if slope > m {
            m = slope;
        }
    }
    let c = all
        .iter()
        .map(|&(l, g)| rat(g) - &m * k(l))
        .max()
        .unwrap_or_else(BigRational::zero);
    Classification {
        class: DecayClass::Overconvergent { m, c },
        range,
        residual,
    }
}

fn log_fit(
    all: &[(u32, i64)],
    tail: &[(u32, i64)],
    r: BigRational,
    p: u64,
    e: u32,
    range: (u32, u32),
    residual: f64,
) -> Classification {
    let rf = to_f64(&r);
    let scaled = |l: u32, g: i64| g as f64 / (p as f64).powf(rf * l as f64 / e as f64);
    let t: Vec<f64> = tail.iter().map(|&(l, g)| scaled(l, g)).collect();
    let increasing = t.windows(2).all(|w| w[1] > w[0]);
    if increasing && t[t.len() - 1] > 2.0 * t[0] {
        return Classification {
            class: DecayClass::Inconclusive,
            range,
            residual,
        };
    }
    let c = log_constant(all, &r, p, e);
    let class = DecayClass::LogDecay { r, c };
    Classification {
        class,
        range,
        residual,
    }
}


/// Smallest convenient rational `c` with `g <= c p^(r k)` on every point,
/// verified exactly. Points with `g <= 0` impose nothing.
pub(crate) fn log_constant(points: &[(u32, i64)], r: &BigRational, p: u64, e: u32) -> BigRational {
    let rf = to_f64(r);
    let mut c = BigRational::zero();
    for &(l, g) in points.iter().filter(|x| x.1 > 0) {
        let rk = r * BigRational::new(l.into(), e.into());
        // exact where r k is integral, a rounded-up float elsewhere
        let cand = if rk.is_integer() && !rk.is_negative() {
            let pow = BigInt::from(p).pow(rk.to_integer().to_u32().unwrap_or(0));
            BigRational::new(BigInt::from(g), pow)
        } else {
            round_up_rational(g as f64 / (p as f64).powf(rf * l as f64 / e as f64))
        };
        if cand > c {
            c = cand;
        }
    }
    let bump = BigRational::new(BigInt::from(1_000_001), BigInt::from(1_000_000));
    let holds = |c: &BigRational| {
        points
            .iter()
            .all(|&(l, g)| below_log_bound(g, c, r, p, l, e))
    };
    while !holds(&c) {
        c = if c.is_zero() { BigRational::one() } else { &c * &bump };
    }
    c
}

impl Series {
    /// Smallest verified `c` with `w_k >= -c p^(r k)` for every profiled
    /// `k > 0`, or `None` when `w_0 < 0`.
    pub fn log_bound(&self, r: &BigRational) -> Result<Option<BigRational>> {
        let ctx = self.context();
        let top = ctx.prec().saturating_sub(1);
        let profile = self.decay_profile(top)?;
        if matches!(profile.entries[0].1, PartialVal::Finite(w) if w < 0) {
            return Ok(None);
        }
        let points: Vec<(u32, i64)> = profile
            .entries
            .iter()
            .skip(1)
            .filter_map(|&(l, w)| w.finite().map(|w| (l, -w)))
            .collect();
        Ok(Some(log_constant(&points, r, ctx.p(), ctx.e())))
    }

    /// Membership in `O^{r,c}`: `w_0 >= 0` and `w_k >= -c p^(r k)` for `k > 0`.
    pub fn in_log_ring(&self, r: &BigRational, c: &BigRational) -> Result<bool> {
        let ctx = self.context();
        let top = ctx.prec().saturating_sub(1);
        let profile = self.decay_profile(top)?;
        Ok(profile.entries.iter().all(|&(l, w)| match w {
            PartialVal::Infinite => true,
            PartialVal::Finite(w) if l == 0 => w >= 0,
            PartialVal::Finite(w) => below_log_bound(-w, c, r, ctx.p(), l, ctx.e()),
        }))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::PrimeContext;

    fn finite(values: &[i64]) -> DecayProfile {
        let v: Vec<PartialVal> = values.iter().map(|&w| PartialVal::Finite(w)).collect();
        DecayProfile::from_values(3, 1, &v)
    }

    #[test]
    fn reads_partial_valuations() {
        let ctx = PrimeContext::new(3, 1, 1, 4, 100).unwrap();
        let x = Series::from_ints(&ctx, &[(0, 1), (-2, 3), (-7, 9)]).unwrap();
        let got: Vec<PartialVal> = (0..3).map(|k| x.partial_valuation(k).unwrap()).collect();
        assert_eq!(
            got,
            vec![
                PartialVal::Finite(0),
                PartialVal::Finite(-2),
                PartialVal::Finite(-7)
            ]
        );
        let t5 = Series::from_ints(&ctx, &[(5, 1)]).unwrap();
        for k in 0..4 {
            assert_eq!(t5.partial_valuation(k).unwrap(), PartialVal::Finite(5));
        }
        assert!(t5.partial_valuation(4).is_err());
        let y = Series::from_ints(&ctx, &[(-4, 3)]).unwrap();
        assert_eq!(y.partial_valuation(0).unwrap(), PartialVal::Infinite);
        assert_eq!(y.partial_valuation(1).unwrap(), PartialVal::Finite(-4));
    }

    #[test]
    fn profiles_of_simple_series() {
        let ctx = PrimeContext::new(3, 1, 1, 3, 100).unwrap();
        let x = Series::from_ints(&ctx, &[(0, 1), (-2, 3), (-7, 9)]).unwrap();
        assert_eq!(
            x.decay_profile(2).unwrap().values(),
            vec![
                PartialVal::Finite(0),
                PartialVal::Finite(-2),
                PartialVal::Finite(-7)
            ]
        );
        let one = Series::one(&ctx).decay_profile(2).unwrap();
        assert!(one.values().iter().all(|w| *w == PartialVal::Finite(0)));
        let zero = Series::zero(&ctx).decay_profile(2).unwrap();
        assert!(zero.values().iter().all(|w| w.is_infinite()));
    }

    #[test]
    fn linear_profile_is_overconvergent() {
        let w: Vec<i64> = (0..10).map(|k| -2 * k - 1).collect();
        let c = decay_classify(&finite(&w)).unwrap();
        assert_eq!(
            c.class,
            DecayClass::Overconvergent {
                m: rat(2),
                c: rat(1)
            }
        );
    }

    #[test]
    fn exponential_profile_is_log_decay() {
        let w: Vec<i64> = (0..10).map(|k| -(3i64.pow(k))).collect();
        let c = decay_classify(&finite(&w)).unwrap();
        assert_eq!(c.class, DecayClass::LogDecay { r: rat(1), c: rat(1) });
    }

    #[test]
    fn square_root_rate() {
        let w: Vec<i64> = (0..=10)
            .map(|k| -(3f64.powf(k as f64 / 2.0).ceil() as i64))
            .collect();
        let profile = finite(&w);
        let c = decay_classify(&profile).unwrap();
        match &c.class {
            DecayClass::LogDecay { r, .. } => {
                let r = to_f64(r);
                assert!((0.4..=0.6).contains(&r), "r = {r}");
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(c.class.holds(&profile));
    }

    #[test]
    fn too_few_entries() {
        let p = DecayProfile::from_values(
            3,
            1,
            &[
                PartialVal::Finite(0),
                PartialVal::Infinite,
                PartialVal::Finite(-1),
                PartialVal::Finite(-2),
            ],
        );
        assert!(matches!(
            decay_classify(&p),
            Err(Error::InsufficientData { .. })
        ));
    }
}
