//! Ramification arithmetic of Z_p-towers in exact rationals: numbering
//! conversions, differents, Herbrand functions, base change and genus growth.

use num::rational::BigRational;
use num::{BigInt, One, Signed, Zero};

use crate::error::{Error, Result};

fn rat(n: i64) -> BigRational {
    BigRational::from_integer(n.into())
}

fn pow(p: u64, k: usize) -> BigRational {
    BigRational::from_integer(BigInt::from(p).pow(k as u32))
}

/// `lambda_n = sum_{i<n} (s_(i+1) - s_i) p^i` with `s_0 = 0`.
pub fn lower_from_upper(s: &[BigRational], p: u64) -> Vec<BigRational> {
    let mut out = Vec::with_capacity(s.len());
    let mut acc = BigRational::zero();
    let mut prev = BigRational::zero();
    for (i, si) in s.iter().enumerate() {
        acc += (si - &prev) * pow(p, i);
        prev = si.clone();
        out.push(acc.clone());
    }
    out
}

/// `s_n = sum_{i<n} (lambda_(i+1) - lambda_i) / p^i` with `lambda_0 = 0`.
pub fn upper_from_lower(lambda: &[BigRational], p: u64) -> Vec<BigRational> {
    let mut out = Vec::with_capacity(lambda.len());
    let mut acc = BigRational::zero();
    let mut prev = BigRational::zero();
    for (i, li) in lambda.iter().enumerate() {
        acc += (li - &prev) / pow(p, i);
        prev = li.clone();
        out.push(acc.clone());
    }
    out
}

/// `delta_n = sum_{i=1..n} (p^i - p^(i-1)) (s_i + 1)`, the different of the
/// `n`-th layer.
pub fn different_of_level(s: &[BigRational], p: u64, n: usize) -> Result<BigRational> {
    if n > s.len() {
        return Err(Error::data("different_of_level", format!("level {n} needs {n} breaks, have {}", s.len())));
    }
    Ok((1..=n)
        .map(|i| (pow(p, i) - pow(p, i - 1)) * (&s[i - 1] + rat(1)))
        .fold(BigRational::zero(), |a, b| a + b))
}

/// Herbrand `psi`: piecewise linear from `psi(0) = 0` with slope `p^i` on
/// `(s_i, s_(i+1))`, and slope `p^K` past the last break.
pub fn herbrand_psi(s: &[BigRational], p: u64, y: &BigRational) -> Result<BigRational> {
    if y.is_negative() {
        return Err(Error::pre("herbrand_psi", "argument must be nonnegative"));
    }
    let mut acc = BigRational::zero();
    let mut prev = BigRational::zero();
    for (i, si) in s.iter().enumerate() {
        if y <= si {
            return Ok(acc + (y - prev) * pow(p, i));
        }
        acc += (si - &prev) * pow(p, i);
        prev = si.clone();
    }
    Ok(acc + (y - prev) * pow(p, s.len()))
}

/// Inverse of [`herbrand_psi`].
pub fn herbrand_phi(s: &[BigRational], p: u64, x: &BigRational) -> Result<BigRational> {
    if x.is_negative() {
        return Err(Error::pre("herbrand_phi", "argument must be nonnegative"));
    }
    let lambda = lower_from_upper(s, p);
    let mut prev_s = BigRational::zero();
    let mut prev_l = BigRational::zero();
    for (i, (si, li)) in s.iter().zip(&lambda).enumerate() {
        if x <= li {
            return Ok(prev_s + (x - prev_l) / pow(p, i));
        }
        prev_s = si.clone();
        prev_l = li.clone();
    }
    Ok(prev_s + (x - prev_l) / pow(p, s.len()))
}

/// `s_(K,k) = p^n s_(n+k) - p^n s_n + lambda_n` for `K = F_n`.
pub fn base_change_up_tower(s: &[BigRational], p: u64, n: usize) -> Result<Vec<BigRational>> {
    if n > s.len() {
        return Err(Error::data("base_change_up_tower", format!("need at least {n} breaks")));
    }
    if n == 0 {
        return Ok(s.to_vec());
    }
    let pn = pow(p, n);
    let lambda_n = lower_from_upper(&s[..n], p).pop().expect("n >= 1");
    let shift = &lambda_n - &pn * &s[n - 1];
    Ok(s[n..].iter().map(|x| &pn * x + &shift).collect())
}

/// Breaks over a disjoint degree-`p` extension with break `s'`: unchanged
/// below the first `s_j > s'`, then `p s_n - (p - 1) s'`.
pub fn base_change_disjoint_p(s: &[BigRational], p: u64, s_prime: &BigRational) -> Result<Vec<BigRational>> {
    if !s_prime.is_positive() {
        return Err(Error::pre("base_change_disjoint_p", "s' must be positive"));
    }
    let pr = rat(p as i64);
    let c = (&pr - rat(1)) * s_prime;
    let j = s.iter().position(|x| s_prime < x).unwrap_or(s.len());
    Ok(s.iter()
        .enumerate()
        .map(|(i, x)| if i < j { x.clone() } else { &pr * x - &c })
        .collect())
}

/// A ramified point of the base curve.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TowerPoint {
    pub label: String,
    pub breaks: Vec<BigRational>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TowerRamificationData {
    pub g0: i64,
    pub p: u64,
    pub points: Vec<TowerPoint>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GenusRow {
    pub n: u32,
    pub genus: BigRational,
    pub integral: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GenusTable {
    pub p: u64,
    pub rows: Vec<GenusRow>,
}

impl GenusTable {
    pub fn values(&self) -> Vec<BigRational> {
        self.rows.iter().map(|r| r.genus.clone()).collect()
    }

    pub fn all_integral(&self) -> bool {
        self.rows.iter().all(|r| r.integral)
    }
}

/// `g_n = p^n (g_0 - 1) + 1 + sum_x delta_(x,n) / 2` for `n = 0..=n_max`.
pub fn genus_sequence(data: &TowerRamificationData, n_max: u32) -> Result<GenusTable> {
    const OP: &str = "genus_sequence";
    for pt in &data.points {
        if pt.breaks.len() < n_max as usize {
            return Err(Error::data(
                OP,
                format!("point {} has {} breaks, level {n_max} needs {n_max}", pt.label, pt.breaks.len()),
            ));
        }
        if pt.breaks.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::pre(OP, format!("breaks at {} must be strictly increasing", pt.label)));
        }
    }
    let mut rows = Vec::new();
    for n in 0..=n_max {
        let mut g = pow(data.p, n as usize) * rat(data.g0 - 1) + rat(1);
        for pt in &data.points {
            g += different_of_level(&pt.breaks, data.p, n as usize)? / rat(2);
        }
        rows.push(GenusRow {
            n,
            integral: g.is_integer(),
            genus: g,
        });
    }
    Ok(GenusTable { p: data.p, rows })
}

/// Per-class polynomials with `g_(km+i) = a_i(p^k)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GenusFit {
    pub m: u32,
    pub degree: u32,
    /// `coefficients[i][j]` multiplies `x^j` in `a_i`.
    pub coefficients: Vec<Vec<BigRational>>,
    pub onset: u32,
}

impl GenusFit {
    pub fn eval(&self, p: u64, n: u32) -> BigRational {
        let x = pow(p, (n / self.m) as usize);
        self.coefficients[(n % self.m) as usize]
            .iter()
            .rev()
            .fold(BigRational::zero(), |acc, c| acc * &x + c)
    }
}

/// Coefficients of the interpolating polynomial through `(x_i, y_i)`.
fn interpolate(xs: &[BigRational], ys: &[BigRational]) -> Vec<BigRational> {
    let n = xs.len();
    let mut coeffs = vec![BigRational::zero(); n];
    for i in 0..n {
        // basis polynomial prod_{j != i} (x - x_j) / (x_i - x_j)
        let mut basis = vec![BigRational::one()];
        let mut denom = BigRational::one();
        for j in (0..n).filter(|&j| j != i) {
            let mut next = vec![BigRational::zero(); basis.len() + 1];
            for (k, b) in basis.iter().enumerate() {
                next[k + 1] += b;
                next[k] -= b * &xs[j];
            }
            basis = next;
            denom *= &xs[i] - &xs[j];
        }
        let scale = &ys[i] / denom;
        for (k, b) in basis.iter().enumerate() {
            coeffs[k] += b * &scale;
        }
    }
    while coeffs.len() > 1 && coeffs.last().is_some_and(Zero::is_zero) {
        coeffs.pop();
    }
    coeffs
}

/// Interpolates each residue class of degree `m (r + d)` in `x = p^k` from
/// its last points and verifies on every earlier point from the onset on;
/// each class must keep at least one point beyond those interpolated.
pub fn fit_genus_polynomials(table: &GenusTable, m: u32, d: u32, r: &BigRational) -> Result<Option<GenusFit>> {
    const OP: &str = "fit_genus_polynomials";
    if m == 0 {
        return Err(Error::pre(OP, "period m must be positive"));
    }
    let deg = BigRational::from_integer(m.into()) * (r + rat(d as i64));
    if !deg.is_integer() || deg.is_negative() {
        return Err(Error::pre(OP, "m (r + d) must be a nonnegative integer"));
    }
    let degree: u32 = deg.to_integer().try_into().map_err(|_| Error::pre(OP, "degree too large"))?;
    let need = degree as usize + 2;
    let pts: Vec<(u32, &BigRational)> = table.rows.iter().map(|r| (r.n, &r.genus)).collect();
    let mut coefficients = Vec::new();
    for i in 0..m {
        let cls: Vec<&(u32, &BigRational)> = pts.iter().filter(|(n, _)| n % m == i).collect();
        if cls.len() < need {
            return Err(Error::data(OP, format!("class {i} has {} values, needs {need}", cls.len())));
        }
        let last = &cls[cls.len() - need + 1..];
        let xs: Vec<BigRational> = last.iter().map(|(n, _)| pow(table.p, (n / m) as usize)).collect();
        let ys: Vec<BigRational> = last.iter().map(|(_, g)| (*g).clone()).collect();
        coefficients.push(interpolate(&xs, &ys));
    }
    let mut fit = GenusFit {
        m,
        degree,
        coefficients,
        onset: 0,
    };
    let mut pos = pts.len();
    while pos > 0 && fit.eval(table.p, pts[pos - 1].0) == *pts[pos - 1].1 {
        pos -= 1;
    }
    for i in 0..m {
        if pts[pos..].iter().filter(|(n, _)| n % m == i).count() < need {
            return Ok(None);
        }
    }
    fit.onset = pts[pos].0;
    Ok(Some(fit))
}
