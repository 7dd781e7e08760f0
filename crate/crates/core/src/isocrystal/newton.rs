use num::rational::BigRational;
use num::BigInt;

use super::matrix::IsocrystalMatrix;
use crate::error::{Error, Result};

/// Slopes, breaks and the gap `s` of an isocrystal matrix in congruence form.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NewtonData {
    /// `alpha_i = r_i / (e f)`.
    pub slopes: Vec<BigRational>,
    /// `b_1 < .. < b_nu`: indices `i` (1-based) with `alpha_i < alpha_(i+1)`,
    /// closed by `b_nu = n`.
    pub breaks: Vec<usize>,
    /// `r_(b_1 + 1) - r_(b_1)`; absent for an isoclinic matrix.
    pub s: Option<u32>,
    pub np1: bool,
    pub np2: bool,
    pub np3: bool,
}

impl NewtonData {
    /// `r = e f / s`, the rate of the first slope gap.
    pub fn rate(&self, e: u32, f: u32) -> Option<BigRational> {
        self.s
            .map(|s| BigRational::new(BigInt::from(e * f), BigInt::from(s)))
    }

    /// `b_i` for 1-based `i`.
    pub fn break_at(&self, i: usize) -> Option<usize> {
        i.checked_sub(1).and_then(|i| self.breaks.get(i).copied())
    }
}

impl IsocrystalMatrix {
    pub fn newton_data(&self) -> Result<NewtonData> {
        if self.congruence_level()? < 1 {
            return Err(Error::pre(
                "newton_data",
                "matrix is not congruent to its declared diagonal modulo pi",
            ));
        }
        let ctx = self.context();
        let r = self.diag_exponents();
        let n = r.len();
        let ef = BigInt::from(ctx.e() * ctx.f());
        let slopes: Vec<BigRational> = r
            .iter()
            .map(|&ri| BigRational::new(BigInt::from(ri), ef.clone()))
            .collect();
        let breaks: Vec<usize> = (1..=n).filter(|&i| i == n || r[i - 1] < r[i]).collect();
        let b1 = breaks[0];
        let s = (b1 < n).then(|| r[b1] - r[b1 - 1]);
        let np1 = b1 == 1;
        let np2 = match (s, breaks.get(1)) {
            (Some(s), Some(&b2)) => r[b2 - 1] == s,
            _ => false,
        };
        let np3 = match (s, breaks.get(1), breaks.get(2)) {
            (Some(s), Some(&b2), Some(&b3)) => r[b3 - 1] - r[b2 - 1] >= s,
            (Some(_), Some(_), None) => true,
            _ => false,
        };
        Ok(NewtonData {
            slopes,
            breaks,
            s,
            np1,
            np2,
            np3,
        })
    }
}
