//! Solvers for the Frobenius recurrences `x = a sigma(x) + b` and their
//! iterated forms.

use crate::error::{Error, Result};
use crate::series::{CoeffElem, Ctx, Series};

fn ensure_window(op: &'static str, ctx: &Ctx, x: &Series, iterate: u32) -> Result<()> {
    let m = x.max_abs_exponent() as i128;
    if m == 0 {
        return Ok(());
    }
    let need = (ctx.q() as i128)
        .checked_pow(iterate)
        .and_then(|f| f.checked_mul(m))
        .unwrap_or(i128::MAX);
    if need > ctx.window() as i128 {
        return Err(Error::WindowOverflow {
            op,
            exponent: need,
            window: ctx.window(),
        });
    }
    Ok(())
}

/// The solution `R(a, b) = b + a sigma(b) + a^(1 + sigma) sigma^2(b) + ...` of
/// `x = a sigma(x) + b`, summed until the tail vanishes modulo `pi^N`.
pub fn solve_r(a: &Series, b: &Series) -> Result<Series> {
    const OP: &str = "solve_R";
    let ctx = b.context().clone();
    let va = a.valuation();
    if va == 0 {
        return Err(Error::pre(OP, "v_pi(a) must be at least 1"));
    }
    let n = ctx.prec();
    let vb = b.valuation();
    if vb >= n {
        return Ok(Series::zero(&ctx));
    }
    // deepest iterate i with i * v(a) + v(b) < N
    let depth = (n - vb - 1) / va;
    ensure_window(OP, &ctx, b, depth)?;
    if depth > 0 {
        ensure_window(OP, &ctx, a, depth - 1)?;
    }
    let mut x = b.clone();
    let mut prod = Series::one(&ctx);
    for i in 1..=depth {
        prod = prod.mul(&a.frobenius(i - 1)?)?;
        if prod.valuation() + vb >= n {
            break;
        }
        x = x.add(&prod.mul(&b.frobenius(i)?)?)?;
    }
    Ok(x)
}

/// Coefficients `(a_1..a_i; b_1..b_i)` of an iterated Frobenius system.
#[derive(Clone, Debug)]
pub struct IteratedEquation {
    a: Vec<Series>,
    b: Vec<Series>,
}

impl IteratedEquation {
    pub fn new(a: Vec<Series>, b: Vec<Series>) -> Result<Self> {
        const OP: &str = "IteratedEquation";
        if a.is_empty() || a.len() != b.len() {
            return Err(Error::pre(OP, "coefficient lists must be nonempty and of equal length"));
        }
        let ctx = a[0].context().clone();
        for s in a.iter().chain(b.iter()) {
            if s.context() != &ctx {
                return Err(Error::ContextMismatch { op: OP });
            }
        }
        if let Some(i) = a.iter().position(|x| x.valuation() == 0) {
            return Err(Error::pre(OP, format!("a_{} has v_pi = 0", i + 1)));
        }
        Ok(IteratedEquation { a, b })
    }

    /// Equation with every `a_i = pi^s`.
    pub fn uniform(ctx: &Ctx, s: u32, b: Vec<Series>) -> Result<Self> {
        if s == 0 {
            return Err(Error::pre("solve_T_iter", "s must be positive"));
        }
        let a = Series::constant(&CoeffElem::pi_power(ctx, s));
        Self::new(vec![a; b.len()], b)
    }

    pub fn len(&self) -> usize {
        self.a.len()
    }

    pub fn is_empty(&self) -> bool {
        self.a.is_empty()
    }
}

/// `S(a_1..a_i; b_1..b_i) = S(a_1..a_{i-1}; b_1, .., b_{i-1} sigma(R(a_i, b_i)))`.
pub fn solve_s(eq: &IteratedEquation) -> Result<Series> {
    let mut tail = solve_r(&eq.a[eq.len() - 1], &eq.b[eq.len() - 1])?;
    for i in (0..eq.len() - 1).rev() {
        let b = eq.b[i].mul(&tail.frobenius(1)?)?;
        tail = solve_r(&eq.a[i], &b)?;
    }
    Ok(tail)
}

/// `T(pi^s; b_1..b_i)`, the iterated solve with every `a_i = pi^s`.
pub fn solve_t_iter(ctx: &Ctx, s: u32, b: &[Series]) -> Result<Series> {
    solve_s(&IteratedEquation::uniform(ctx, s, b.to_vec())?)
}

/// `mu(m; a) = prod_i sigma^(a_i)(m_i)` for nondecreasing `a`.
pub fn mu_product(m: &[Series], a: &[u32]) -> Result<Series> {
    const OP: &str = "mu_product";
    if m.is_empty() || m.len() != a.len() {
        return Err(Error::pre(OP, "monomial and exponent lists must match and be nonempty"));
    }
    if a.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::pre(OP, "exponents must be nondecreasing"));
    }
    let mut out = Series::one(m[0].context());
    for (mi, &ai) in m.iter().zip(a) {
        out = out.mul(&mi.frobenius(ai)?)?;
    }
    Ok(out)
}
