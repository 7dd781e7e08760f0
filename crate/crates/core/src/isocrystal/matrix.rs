use std::fmt;

use crate::error::{Error, Result};
use crate::series::context::ensure_same;
use crate::series::{CoeffElem, Ctx, Series};

/// Square matrix of series over one context, stored row-major.
#[derive(Clone, PartialEq, Eq)]
pub struct SeriesMatrix {
    ctx: Ctx,
    n: usize,
    entries: Vec<Series>,
}

impl fmt::Debug for SeriesMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "SeriesMatrix {}x{} [", self.n, self.n)?;
        for i in 0..self.n {
            let row: Vec<String> = (0..self.n).map(|j| self.get(i, j).to_string()).collect();
            writeln!(f, "  [{}]", row.join(", "))?;
        }
        write!(f, "]")
    }
}

impl SeriesMatrix {
    pub fn zero(ctx: &Ctx, n: usize) -> Self {
        SeriesMatrix {
            ctx: ctx.clone(),
            n,
            entries: vec![Series::zero(ctx); n * n],
        }
    }

    pub fn identity(ctx: &Ctx, n: usize) -> Self {
        let mut m = Self::zero(ctx, n);
        for i in 0..n {
            m.entries[i * n + i] = Series::one(ctx);
        }
        m
    }

    /// Builds a matrix from rows; every row must have length `rows.len()`.
    pub fn from_rows(ctx: &Ctx, rows: Vec<Vec<Series>>) -> Result<Self> {
        const OP: &str = "matrix_from_rows";
        let n = rows.len();
        if n == 0 {
            return Err(Error::pre(OP, "matrix must have at least one row"));
        }
        let mut entries = Vec::with_capacity(n * n);
        for row in rows {
            if row.len() != n {
                return Err(Error::pre(OP, "matrix must be square"));
            }
            for x in row {
                ensure_same(OP, ctx, x.context())?;
                entries.push(x);
            }
        }
        Ok(SeriesMatrix {
            ctx: ctx.clone(),
            n,
            entries,
        })
    }

    /// `1 + t E_{u,v}` with `u != v`.
    pub fn elementary(ctx: &Ctx, n: usize, u: usize, v: usize, t: &Series) -> Result<Self> {
        if u == v || u >= n || v >= n {
            return Err(Error::pre("elementary_matrix", "need distinct indices below n"));
        }
        let mut m = Self::identity(ctx, n);
        m.set(u, v, t.clone());
        Ok(m)
    }

    pub fn context(&self) -> &Ctx {
        &self.ctx
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> &Series {
        &self.entries[i * self.n + j]
    }

    pub fn set(&mut self, i: usize, j: usize, x: Series) {
        self.entries[i * self.n + j] = x;
    }

    pub fn rows(&self) -> Vec<Vec<Series>> {
        self.entries.chunks(self.n).map(|r| r.to_vec()).collect()
    }

    fn check(&self, op: &'static str, other: &Self) -> Result<()> {
        ensure_same(op, &self.ctx, &other.ctx)?;
        if self.n != other.n {
            return Err(Error::pre(op, "dimension mismatch"));
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check("matrix_add", other)?;
        self.zip(other, Series::add)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check("matrix_sub", other)?;
        self.zip(other, Series::sub)
    }

    fn zip(&self, other: &Self, f: impl Fn(&Series, &Series) -> Result<Series>) -> Result<Self> {
        let entries = self
            .entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| f(a, b))
            .collect::<Result<Vec<_>>>()?;
        Ok(SeriesMatrix {
            ctx: self.ctx.clone(),
            n: self.n,
            entries,
        })
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.check("matrix_mul", other)?;
        let n = self.n;
        let mut out = Self::zero(&self.ctx, n);
        for i in 0..n {
            for j in 0..n {
                let mut acc = Series::zero(&self.ctx);
                for k in 0..n {
                    let (a, b) = (self.get(i, k), other.get(k, j));
                    if a.is_zero() || b.is_zero() {
                        continue;
                    }
                    acc = acc.add(&a.mul(b)?)?;
                }
                out.set(i, j, acc);
            }
        }
        Ok(out)
    }

    pub fn map(&self, f: impl Fn(&Series) -> Result<Series>) -> Result<Self> {
        let entries = self.entries.iter().map(f).collect::<Result<Vec<_>>>()?;
        Ok(SeriesMatrix {
            ctx: self.ctx.clone(),
            n: self.n,
            entries,
        })
    }

    pub fn frobenius(&self, iterate: u32) -> Result<Self> {
        self.map(|x| x.frobenius(iterate))
    }

    pub fn change_context(&self, ctx: &Ctx) -> Result<Self> {
        let mut m = self.map(|x| x.change_context(ctx))?;
        m.ctx = ctx.clone();
        Ok(m)
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(Series::is_zero)
    }

    /// Smallest pi-adic valuation among the entries.
    pub fn valuation(&self) -> u32 {
        self.entries.iter().map(Series::valuation).min().unwrap_or(self.ctx.prec())
    }

    pub fn max_abs_exponent(&self) -> i64 {
        self.entries.iter().map(Series::max_abs_exponent).max().unwrap_or(0)
    }

    /// Determinant by permutation expansion.
    pub fn determinant(&self) -> Result<Series> {
        let idx: Vec<usize> = (0..self.n).collect();
        minor(self, &idx, &idx)
    }

    /// Inverse by Gauss-Jordan elimination. Pivots must reduce modulo `pi`
    /// to a single monomial.
    pub fn inverse(&self) -> Result<Self> {
        const OP: &str = "matrix_inverse";
        let n = self.n;
        let mut a = self.clone();
        let mut inv = Self::identity(&self.ctx, n);
        for col in 0..n {
            let pivot = (col..n)
                .find(|&r| invertible(a.get(r, col)))
                .ok_or_else(|| Error::pre(OP, format!("singular matrix: no unit pivot in column {}", col + 1)))?;
            if pivot != col {
                for j in 0..n {
                    a.entries.swap(pivot * n + j, col * n + j);
                    inv.entries.swap(pivot * n + j, col * n + j);
                }
            }
            let p_inv = invert_unit(a.get(col, col))?;
            for j in 0..n {
                let x = a.get(col, j).mul(&p_inv)?;
                a.set(col, j, x);
                let y = inv.get(col, j).mul(&p_inv)?;
                inv.set(col, j, y);
            }
            for r in 0..n {
                if r == col || a.get(r, col).is_zero() {
                    continue;
                }
                let f = a.get(r, col).clone();
                for j in 0..n {
                    let x = a.get(r, j).sub(&f.mul(a.get(col, j))?)?;
                    a.set(r, j, x);
                    let y = inv.get(r, j).sub(&f.mul(inv.get(col, j))?)?;
                    inv.set(r, j, y);
                }
            }
        }
        Ok(inv)
    }
}

fn invertible(x: &Series) -> bool {
    (0..x.len()).filter(|&i| x.term_valuation(i) == 0).count() == 1
}

/// Inverse of a series whose reduction modulo `pi` is a single monomial.
pub(crate) fn invert_unit(x: &Series) -> Result<Series> {
    let i = (0..x.len())
        .find(|&i| x.term_valuation(i) == 0)
        .ok_or_else(|| Error::pre("series_invert", "not a unit"))?;
    let m = x.exponents()[i];
    if m == 0 {
        return x.invert();
    }
    let inv = x.shift(-m)?.invert()?;
    inv.shift(-m)
}

/// Determinant of the submatrix on `rows x cols`.
pub(crate) fn minor(a: &SeriesMatrix, rows: &[usize], cols: &[usize]) -> Result<Series> {
    let k = rows.len();
    let mut total = Series::zero(a.context());
    let mut perm: Vec<usize> = (0..k).collect();
    let mut c = vec![0usize; k];
    let mut sign_positive = true;
    // Heap's algorithm; each swap flips the sign
    let mut visit = |perm: &[usize], positive: bool| -> Result<()> {
        let mut term = Series::one(a.context());
        for (r, &p) in rows.iter().zip(perm) {
            let x = a.get(*r, cols[p]);
            if x.is_zero() {
                return Ok(());
            }
            term = term.mul(x)?;
        }
        total = if positive { total.add(&term)? } else { total.sub(&term)? };
        Ok(())
    };
    visit(&perm, sign_positive)?;
    let mut i = 0;
    while i < k {
        if c[i] < i {
            if i % 2 == 0 {
                perm.swap(0, i);
            } else {
                perm.swap(c[i], i);
            }
            sign_positive = !sign_positive;
            visit(&perm, sign_positive)?;
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
    Ok(total)
}

/// Frobenius matrix in the congruence form
/// `A = diag(pi^r_1, .., pi^r_n) mod pi^L`, acting on columns:
/// `phi(e_j) = sum_i A(i, j) e_i`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IsocrystalMatrix {
    matrix: SeriesMatrix,
    diag_exponents: Vec<u32>,
}

impl IsocrystalMatrix {
    pub fn new(matrix: SeriesMatrix, diag_exponents: Vec<u32>) -> Result<Self> {
        const OP: &str = "IsocrystalMatrix::new";
        if diag_exponents.len() != matrix.n() {
            return Err(Error::pre(OP, "need one diagonal exponent per row"));
        }
        if diag_exponents.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::pre(OP, "diagonal exponents must be nondecreasing"));
        }
        Ok(IsocrystalMatrix {
            matrix,
            diag_exponents,
        })
    }

    pub fn from_rows(ctx: &Ctx, rows: Vec<Vec<Series>>, diag_exponents: Vec<u32>) -> Result<Self> {
        Self::new(SeriesMatrix::from_rows(ctx, rows)?, diag_exponents)
    }

    /// `diag(pi^r_1, .., pi^r_n)`.
    pub fn diagonal(ctx: &Ctx, diag_exponents: Vec<u32>) -> Result<Self> {
        let n = diag_exponents.len();
        let mut m = SeriesMatrix::zero(ctx, n);
        for (i, &r) in diag_exponents.iter().enumerate() {
            m.set(i, i, Series::constant(&CoeffElem::pi_power(ctx, r)));
        }
        Self::new(m, diag_exponents)
    }

    pub fn context(&self) -> &Ctx {
        self.matrix.context()
    }

    pub fn n(&self) -> usize {
        self.matrix.n()
    }

    pub fn matrix(&self) -> &SeriesMatrix {
        &self.matrix
    }

    pub fn get(&self, i: usize, j: usize) -> &Series {
        self.matrix.get(i, j)
    }

    pub fn diag_exponents(&self) -> &[u32] {
        &self.diag_exponents
    }

    pub(crate) fn with_matrix(&self, matrix: SeriesMatrix) -> Self {
        IsocrystalMatrix {
            matrix,
            diag_exponents: self.diag_exponents.clone(),
        }
    }

    fn defect(&self, i: usize, j: usize) -> Result<Series> {
        let x = self.get(i, j);
        if i == j {
            x.sub(&Series::constant(&CoeffElem::pi_power(self.context(), self.diag_exponents[i])))
        } else {
            Ok(x.clone())
        }
    }

    /// True iff `A = diag(pi^r_1, .., pi^r_n) mod pi^level`.
    pub fn validate_diagonal_congruence(&self, level: u32) -> Result<bool> {
        let prec = self.context().prec();
        if level > prec {
            return Err(Error::PrecisionExceeded {
                op: "validate_diagonal_congruence",
                level,
                prec,
            });
        }
        Ok(self.congruence_level()? >= level)
    }

    /// Largest `L <= N` with `A = diag(pi^r_i) mod pi^L`.
    pub fn congruence_level(&self) -> Result<u32> {
        let mut level = self.context().prec();
        for i in 0..self.n() {
            for j in 0..self.n() {
                level = level.min(self.defect(i, j)?.valuation());
            }
        }
        Ok(level)
    }

    /// `A * pi^j`. Negative `j` divides every entry by `pi^|j|`, lowering the
    /// precision by `|j|`.
    pub fn twist(&self, j: i64) -> Result<Self> {
        const OP: &str = "twist";
        let k = j.unsigned_abs() as u32;
        if j >= 0 {
            let m = self.matrix.map(|x| Ok(x.mul_pi_power(k)))?;
            let diag = self.diag_exponents.iter().map(|r| r + k).collect();
            return Self::new(m, diag);
        }
        let ctx = self.context();
        if k >= ctx.prec() {
            return Err(Error::pre(OP, format!("twist by -{k} leaves no precision")));
        }
        if self.diag_exponents[0] < k || self.matrix.valuation() < k {
            return Err(Error::pre(OP, format!("entries are not divisible by pi^{k}")));
        }
        let low = ctx.with_prec(ctx.prec() - k)?;
        let m = self.matrix.map(|x| x.div_pi_power(k)?.change_context(&low))?;
        let mut m = m;
        m.ctx = low;
        let diag = self.diag_exponents.iter().map(|r| r - k).collect();
        Self::new(m, diag)
    }

    /// `B A sigma(B)^-1`.
    pub fn skew_conjugate(&self, b: &SeriesMatrix) -> Result<Self> {
        let sb_inv = b.frobenius(1)?.inverse()?;
        Ok(self.with_matrix(b.mul(&self.matrix)?.mul(&sb_inv)?))
    }

    /// Matrix of `k x k` minors. The basis `e_I` is ordered by the exponent
    /// sum `sum_{i in I} r_i`, then lexicographically.
    pub fn exterior_power(&self, k: usize) -> Result<Self> {
        let n = self.n();
        if k == 0 || k > n {
            return Err(Error::pre("exterior_power", format!("need 1 <= k <= {n}")));
        }
        let mut basis = subsets(n, k);
        let weight = |s: &Vec<usize>| s.iter().map(|&i| self.diag_exponents[i]).sum::<u32>();
        basis.sort_by_key(|s| (weight(s), s.clone()));
        let dim = basis.len();
        let mut m = SeriesMatrix::zero(self.context(), dim);
        for (a, rows) in basis.iter().enumerate() {
            for (b, cols) in basis.iter().enumerate() {
                m.set(a, b, minor(&self.matrix, rows, cols)?);
            }
        }
        Self::new(m, basis.iter().map(weight).collect())
    }
}

fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(k);
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    rec(0, n, k, &mut cur, &mut out);
    out
}
