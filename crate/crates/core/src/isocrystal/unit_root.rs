use super::matrix::{invert_unit, IsocrystalMatrix, SeriesMatrix};
use crate::error::{Error, Result};
use crate::frob_solve::solve_r;
use crate::series::Series;

/// Unit-root vector `u = e_1 + eps_2 e_2 + .. + eps_n e_n` with
/// `phi(u) = lambda u`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UnitRootSolution {
    /// `eps_1 = 1`, then `eps_2 .. eps_n`, known modulo `pi^(N - guard)`.
    pub epsilon: Vec<Series>,
    /// Known modulo `pi^N`.
    pub lambda: Series,
    /// Least valuation of the residuals `lambda eps_i - (a_i1 + sum_j a_ij sigma(eps_j))`.
    pub residual_level: u32,
    pub guard: u32,
    pub iterations: usize,
}

impl IsocrystalMatrix {
    pub fn solve_unit_root(&self) -> Result<UnitRootSolution> {
        self.solve_unit_root_guarded(0)
    }

    /// Fixed-point solve of
    /// `eps_i = b_i1 + sum_{j>=2} b_ij sigma(eps_j) - eps_i sum_{j>=2} b_1j sigma(eps_j)`
    /// with `b = A / a_11`, run at precision `N - guard`. The guard may not
    /// exceed the valuation of any `a_1j`, so `lambda` stays exact at `N`.
    pub fn solve_unit_root_guarded(&self, guard: u32) -> Result<UnitRootSolution> {
        const OP: &str = "solve_unit_root";
        let ctx = self.context().clone();
        let n = self.n();
        let nd = self.newton_data()?;
        if !nd.np1 {
            return Err(Error::pre(OP, "unit-root part must have rank one (NP-1)"));
        }
        if self.diag_exponents()[0] != 0 {
            return Err(Error::pre(OP, "first slope must be 0; twist first"));
        }
        if let Some(s) = nd.s {
            let level = self.congruence_level()?;
            if level < s + 2 {
                return Err(Error::pre(
                    OP,
                    format!("congruence level {level} is below s + 2 = {}; no contraction", s + 2),
                ));
            }
        }
        if guard >= ctx.prec() {
            return Err(Error::pre(OP, "guard must be below the precision"));
        }
        if let Some(j) = (1..n).find(|&j| self.get(0, j).valuation() < guard) {
            return Err(Error::pre(OP, format!("guard {guard} exceeds v_pi(a_1{})", j + 1)));
        }
        let low = if guard == 0 { ctx.clone() } else { ctx.with_prec(ctx.prec() - guard)? };
        let a = self.matrix().change_context(&low)?;
        let a11_inv = invert_unit(a.get(0, 0))?;
        let b = a.map(|x| x.mul(&a11_inv))?;
        let mut eps = vec![Series::zero(&low); n];
        eps[0] = Series::one(&low);
        let limit = low.prec() as usize + 2;
        let mut iterations = 0;
        let mut converged = n == 1;
        while !converged && iterations < limit {
            iterations += 1;
            let sig = eps.iter().map(|x| x.frobenius(1)).collect::<Result<Vec<_>>>()?;
            let mu = row_dot(&b, 0, &sig, 1)?;
            let mut next = eps.clone();
            for i in 1..n {
                let x = b.get(i, 0).add(&row_dot(&b, i, &sig, 1)?)?.sub(&eps[i].mul(&mu)?)?;
                next[i] = x;
            }
            converged = next == eps;
            eps = next;
        }
        if !converged {
            return Err(Error::NonConvergence { op: OP, iterations });
        }
        let full = self.matrix();
        let lifted = eps.iter().map(|x| x.change_context(&ctx)?.frobenius(1)).collect::<Result<Vec<_>>>()?;
        let lambda = full.get(0, 0).add(&row_dot(full, 0, &lifted, 1)?)?;
        let residual_level = residual_level(&a, &lambda.change_context(&low)?, &eps)?;
        Ok(UnitRootSolution {
            epsilon: eps,
            lambda,
            residual_level,
            guard,
            iterations,
        })
    }

    /// Checks `eps_i = R(b_ii; x_i)` with
    /// `x_i = sum_{j != i} b_ij sigma(eps_j) - eps_i sum_{j>=2} b_1j sigma(eps_j)`.
    pub fn r_form_check(&self, sol: &UnitRootSolution) -> Result<bool> {
        let low = sol.epsilon[0].context().clone();
        let a = self.matrix().change_context(&low)?;
        let a11_inv = invert_unit(a.get(0, 0))?;
        let b = a.map(|x| x.mul(&a11_inv))?;
        let sig = sol.epsilon.iter().map(|x| x.frobenius(1)).collect::<Result<Vec<_>>>()?;
        let mu = row_dot(&b, 0, &sig, 1)?;
        for i in 1..self.n() {
            let mut x = b.get(i, 0).sub(&sol.epsilon[i].mul(&mu)?)?;
            for j in (1..self.n()).filter(|&j| j != i) {
                x = x.add(&b.get(i, j).mul(&sig[j])?)?;
            }
            if solve_r(b.get(i, i), &x)? != sol.epsilon[i] {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Frobenius of `det(M_i)`: the unit-root eigenvalue of
    /// `wedge^(b_i) A` twisted down by its least diagonal exponent `j0`,
    /// times `pi^j0`. `i` is 1-based.
    pub fn det_step_frobenius(&self, i: usize) -> Result<Series> {
        const OP: &str = "det_step_frobenius";
        let ctx = self.context().clone();
        let nd = self.newton_data()?;
        let b = nd.break_at(i).ok_or_else(|| Error::pre(OP, format!("no break b_{i}")))?;
        let wedge = self.exterior_power(b)?;
        let j0 = wedge.diag_exponents()[0];
        let twisted = wedge.twist(-(j0 as i64))?;
        if !twisted.newton_data()?.np1 {
            return Err(Error::pre(OP, "exterior power fails NP-1: the least slope sum is repeated"));
        }
        let lambda = twisted.solve_unit_root()?.lambda;
        Ok(lambda.change_context(&ctx)?.mul_pi_power(j0))
    }
}

fn row_dot(m: &SeriesMatrix, i: usize, v: &[Series], from: usize) -> Result<Series> {
    let mut acc = Series::zero(m.context());
    for (j, x) in v.iter().enumerate().skip(from) {
        let a = m.get(i, j);
        if !a.is_zero() && !x.is_zero() {
            acc = acc.add(&a.mul(x)?)?;
        }
    }
    Ok(acc)
}

fn residual_level(a: &SeriesMatrix, lambda: &Series, eps: &[Series]) -> Result<u32> {
    let sig = eps.iter().map(|x| x.frobenius(1)).collect::<Result<Vec<_>>>()?;
    let mut level = a.context().prec();
    for (i, e) in eps.iter().enumerate() {
        let rhs = a.get(i, 0).add(&row_dot(a, i, &sig, 1)?)?;
        level = level.min(lambda.mul(e)?.sub(&rhs)?.valuation());
    }
    Ok(level)
}
