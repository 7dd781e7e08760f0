use std::fmt;

use num::rational::BigRational;

use super::matrix::{IsocrystalMatrix, SeriesMatrix};
use crate::error::{Error, Result};
use crate::series::{is_circ, Ctx, Series};

/// One factor `L_{u,v}(a) = 1 + a E_{u,v}` (0-based indices).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ElementaryStep {
    pub u: usize,
    pub v: usize,
    pub a: Series,
}

/// A product of elementary factors, applied left to right, together with
/// the accumulated matrix `B = L_k .. L_2 L_1`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ElementaryTransform {
    pub steps: Vec<ElementaryStep>,
    pub composite: SeriesMatrix,
}

impl ElementaryTransform {
    pub fn identity(ctx: &Ctx, n: usize) -> Self {
        ElementaryTransform {
            steps: Vec::new(),
            composite: SeriesMatrix::identity(ctx, n),
        }
    }

    pub fn is_identity(&self) -> bool {
        self.steps.is_empty()
    }

    /// Applies `L_{u,v}(t)` to `a` by skew conjugation and records it.
    pub fn apply(&mut self, a: &mut SeriesMatrix, u: usize, v: usize, t: Series) -> Result<()> {
        *a = conjugate_elementary(a, u, v, &t)?;
        let n = a.n();
        // L B only touches row u
        for j in 0..n {
            let x = self.composite.get(u, j).add(&t.mul(self.composite.get(v, j))?)?;
            self.composite.set(u, j, x);
        }
        self.steps.push(ElementaryStep { u, v, a: t });
        Ok(())
    }

    /// Audit identity `A' sigma(B) = B A`.
    pub fn verify(&self, before: &IsocrystalMatrix, after: &IsocrystalMatrix) -> Result<bool> {
        let lhs = after.matrix().mul(&self.composite.frobenius(1)?)?;
        let rhs = self.composite.mul(before.matrix())?;
        Ok(lhs == rhs)
    }
}

/// `L A sigma(L)^-1` for `L = 1 + t E_{u,v}`: row `u` gains `t` times row
/// `v`, then column `v` loses `sigma(t)` times column `u`.
pub fn conjugate_elementary(a: &SeriesMatrix, u: usize, v: usize, t: &Series) -> Result<SeriesMatrix> {
    let n = a.n();
    if u == v || u >= n || v >= n {
        return Err(Error::pre("skew_conjugate", "elementary factor needs distinct indices below n"));
    }
    let mut out = a.clone();
    for j in 0..n {
        let x = out.get(u, j).add(&t.mul(a.get(v, j))?)?;
        out.set(u, j, x);
    }
    let st = t.frobenius(1)?;
    for i in 0..n {
        let x = out.get(i, v).sub(&st.mul(out.get(i, u))?)?;
        out.set(i, v, x);
    }
    Ok(out)
}

fn lower_left(n: usize, b: usize) -> Vec<(usize, usize)> {
    (b..n).flat_map(|u| (0..b).map(move |v| (u, v))).collect()
}

/// Drives every cell in `cells` to valuation `>= n0` with factors
/// `L_{u,v}(-A(u,v) / pi^r_v)`, always attacking the least divisible cell.
fn clear_cells(
    op: &'static str,
    a: &mut SeriesMatrix,
    r: &[u32],
    cells: &[(usize, usize)],
    n0: u32,
    tr: &mut ElementaryTransform,
) -> Result<usize> {
    let budget = (a.context().prec() as usize + 1) * cells.len().max(1) * 4;
    for step in 0..budget {
        let worst = cells
            .iter()
            .map(|&(u, v)| (a.get(u, v).valuation(), u, v))
            .filter(|&(val, _, _)| val < n0)
            .min();
        let Some((val, u, v)) = worst else {
            return Ok(step);
        };
        if val <= r[v] {
            return Err(Error::pre(
                op,
                format!(
                    "entry ({}, {}) has valuation {val}, needs more than r_{} = {}",
                    u + 1,
                    v + 1,
                    v + 1,
                    r[v]
                ),
            ));
        }
        let t = a.get(u, v).div_pi_power(r[v])?.neg();
        tr.apply(a, u, v, t)?;
    }
    Err(Error::NonConvergence { op, iterations: budget })
}

impl IsocrystalMatrix {
    /// Skew conjugation clearing the block `u > b_i >= v` modulo `pi^n0`.
    /// `break_index` is 1-based.
    pub fn reduce_lower_left(&self, break_index: usize, n0: u32) -> Result<(IsocrystalMatrix, ElementaryTransform)> {
        const OP: &str = "reduce_lower_left";
        let ctx = self.context().clone();
        if n0 > ctx.prec() {
            return Err(Error::PrecisionExceeded { op: OP, level: n0, prec: ctx.prec() });
        }
        let nd = self.newton_data()?;
        let b = nd
            .break_at(break_index)
            .ok_or_else(|| Error::pre(OP, format!("no break b_{break_index}")))?;
        let r = self.diag_exponents().to_vec();
        let n = self.n();
        let mut tr = ElementaryTransform::identity(&ctx, n);
        if b == n {
            return Ok((self.clone(), tr));
        }
        let s = nd.s.unwrap_or(0);
        if r[b] - r[b - 1] < s {
            return Err(Error::pre(OP, format!("gap r_{} - r_{} is below s = {s}", b + 1, b)));
        }
        let level = self.congruence_level()?;
        if level <= r[b - 1] {
            return Err(Error::pre(OP, format!("congruence level {level} must exceed r_{b} = {}", r[b - 1])));
        }
        let mut m = self.matrix().clone();
        clear_cells(OP, &mut m, &r, &lower_left(n, b), n0, &mut tr)?;
        Ok((self.with_matrix(m), tr))
    }
}

/// The five conditions of the rank-one normal form.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Predicate {
    /// (i) every entry lies in `O^{r,c}`.
    DecayBound,
    /// (ii) `pi^n0` divides `A(i,1)` for `2 <= i <= b_2` and `A(i,j)` for
    /// `i > b_2`, `2 <= j <= b_2`.
    Divisibility,
    /// (iii) `A(1,j)` lies in `O^{r,d}` for `j > b_2`.
    RowOneDecay,
    /// (iv) `A(1,2), .., A(1,n)` have no exponent divisible by `q`.
    RowOneCirc,
    /// (v) the entries `(1,1)`, `(1,j)` and `(j,1)` for `2 <= j <= b_2` and
    /// the block `2 <= i,j <= b_2` have no positive exponent.
    NonPositiveSupport,
}

impl Predicate {
    pub const ALL: [Predicate; 5] = [
        Predicate::DecayBound,
        Predicate::Divisibility,
        Predicate::RowOneDecay,
        Predicate::RowOneCirc,
        Predicate::NonPositiveSupport,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Predicate::DecayBound => "i",
            Predicate::Divisibility => "ii",
            Predicate::RowOneDecay => "iii",
            Predicate::RowOneCirc => "iv",
            Predicate::NonPositiveSupport => "v",
        }
    }
}

impl fmt::Display for Predicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({})", self.label())
    }
}

/// Parameters the predicates are measured against.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RankOneParams {
    pub n0: u32,
    /// Rate `r = e f / s`.
    pub r: BigRational,
    /// Bound for (i); `None` when the input has no bound at all.
    pub c: Option<BigRational>,
    pub d: BigRational,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PredicateStatus {
    Holds,
    Fails(String),
    /// Reaching the condition needs solutions of `z^sigma - z = y` that do
    /// not exist over the finite residue field.
    Unattained(String),
}

impl PredicateStatus {
    pub fn holds(&self) -> bool {
        matches!(self, PredicateStatus::Holds)
    }
}

#[derive(Clone, Debug)]
pub struct RankOneForm {
    pub matrix: IsocrystalMatrix,
    pub transform: ElementaryTransform,
    pub params: RankOneParams,
    pub status: Vec<(Predicate, PredicateStatus)>,
}

impl RankOneForm {
    pub fn status_of(&self, p: Predicate) -> &PredicateStatus {
        &self.status.iter().find(|(q, _)| *q == p).expect("all predicates are reported").1
    }

    /// True when every predicate holds except those that are unattainable.
    pub fn attainable_hold(&self) -> bool {
        self.status
            .iter()
            .all(|(_, s)| !matches!(s, PredicateStatus::Fails(_)))
    }
}

fn second_break(a: &IsocrystalMatrix) -> Result<usize> {
    let nd = a.newton_data()?;
    Ok(nd.break_at(2).unwrap_or(a.n()))
}

fn divisibility_cells(n: usize, b2: usize) -> Vec<(usize, usize)> {
    let mut cells: Vec<(usize, usize)> = (1..b2).map(|i| (i, 0)).collect();
    cells.extend((b2..n).flat_map(|i| (1..b2).map(move |j| (i, j))));
    cells
}

fn designated_cells(b2: usize) -> Vec<(usize, usize)> {
    let mut cells = vec![(0, 0)];
    for j in 1..b2 {
        cells.push((0, j));
        cells.push((j, 0));
    }
    cells.extend((1..b2).flat_map(|i| (1..b2).map(move |j| (i, j))));
    cells
}

/// Evaluates one predicate of the rank-one normal form.
pub fn check_condition(a: &IsocrystalMatrix, which: Predicate, params: &RankOneParams) -> Result<bool> {
    let n = a.n();
    let b2 = second_break(a)?;
    Ok(match which {
        Predicate::DecayBound => match &params.c {
            None => false,
            Some(c) => {
                let mut ok = true;
                for i in 0..n {
                    for j in 0..n {
                        ok &= a.get(i, j).in_log_ring(&params.r, c)?;
                    }
                }
                ok
            }
        },
        Predicate::Divisibility => divisibility_cells(n, b2)
            .iter()
            .all(|&(i, j)| a.get(i, j).valuation() >= params.n0),
        Predicate::RowOneDecay => {
            let mut ok = true;
            for j in b2..n {
                ok &= a.get(0, j).in_log_ring(&params.r, &params.d)?;
            }
            ok
        }
        Predicate::RowOneCirc => (1..n).all(|j| is_circ(a.get(0, j))),
        Predicate::NonPositiveSupport => designated_cells(b2)
            .iter()
            .all(|&(i, j)| a.get(i, j).max_exponent().is_none_or(|m| m <= 0)),
    })
}

/// Smallest `c` with every entry of `a` in `O^{r,c}`.
pub fn matrix_log_bound(a: &IsocrystalMatrix, r: &BigRational) -> Result<Option<BigRational>> {
    let mut best: Option<BigRational> = None;
    for i in 0..a.n() {
        for j in 0..a.n() {
            match a.get(i, j).log_bound(r)? {
                None => return Ok(None),
                Some(c) => {
                    if best.as_ref().is_none_or(|b| c > *b) {
                        best = Some(c);
                    }
                }
            }
        }
    }
    Ok(best)
}

impl IsocrystalMatrix {
    /// Skew conjugation towards the rank-one normal form: clears the blocks
    /// below the first two breaks modulo `pi^n0`, removes positive exponents
    /// from `A(u,1)` for `2 <= u <= b_2` and exponents divisible by `q` from
    /// row 1, then reports each predicate.
    pub fn reduce_to_rank_one_form(&self, n0: u32, d: &BigRational) -> Result<RankOneForm> {
        const OP: &str = "reduce_to_rank_one_form";
        let ctx = self.context().clone();
        if n0 > ctx.prec() {
            return Err(Error::PrecisionExceeded { op: OP, level: n0, prec: ctx.prec() });
        }
        let nd = self.newton_data()?;
        let n = self.n();
        let mut tr = ElementaryTransform::identity(&ctx, n);
        let r = self.diag_exponents().to_vec();
        let (Some(s), true) = (nd.s, nd.np1 && nd.np2 && nd.np3) else {
            return Err(Error::pre(OP, "Newton polygon must satisfy NP-1, NP-2 and NP-3"));
        };
        let level = self.congruence_level()?;
        if level < s + 2 {
            return Err(Error::pre(OP, format!("congruence level {level} is below s + 2 = {}", s + 2)));
        }
        let rate = nd.rate(ctx.e(), ctx.f()).expect("s is known");
        let params = RankOneParams {
            n0,
            r: rate.clone(),
            c: matrix_log_bound(self, &rate)?,
            d: d.clone(),
        };
        let b1 = nd.breaks[0];
        let b2 = nd.break_at(2).unwrap_or(n);
        let mut region = lower_left(n, b1);
        for cell in lower_left(n, b2) {
            if !region.contains(&cell) {
                region.push(cell);
            }
        }
        let q = ctx.q() as i64;
        let mut m = self.matrix().clone();
        let budget = 4 * (ctx.prec() as usize + 1) * n * n;
        let mut stable = false;
        let mut last = OP;
        for _ in 0..budget {
            let mut moved = clear_cells(OP, &mut m, &r, &region, n0, &mut tr)? > 0;
            if moved {
                last = "reduce_to_rank_one_form (ii)";
            }
            for u in 1..b2 {
                let pos = m.get(u, 0).filter_exponents(|e| e > 0);
                if !pos.is_zero() && pos.valuation() >= n0 {
                    tr.apply(&mut m, u, 0, pos.neg())?;
                    moved = true;
                    last = "reduce_to_rank_one_form (v)";
                }
            }
            for v in 1..n {
                let g = m.get(0, v).filter_exponents(|e| e % q == 0);
                if !g.is_zero() {
                    tr.apply(&mut m, 0, v, g.divide_exponents(q))?;
                    moved = true;
                    last = "reduce_to_rank_one_form (iv)";
                }
            }
            if !moved {
                stable = true;
                break;
            }
        }
        if !stable {
            return Err(Error::NonConvergence { op: last, iterations: budget });
        }
        let out = self.with_matrix(m);
        let mut status = Vec::new();
        for p in Predicate::ALL {
            let st = if check_condition(&out, p, &params)? {
                PredicateStatus::Holds
            } else if p == Predicate::NonPositiveSupport {
                PredicateStatus::Unattained(
                    "positive exponents remain; clearing them needs z^sigma - z = y over an algebraically closed residue field"
                        .into(),
                )
            } else if p == Predicate::DecayBound && params.c.is_none() {
                PredicateStatus::Fails("input has an entry with w_0 < 0".into())
            } else {
                PredicateStatus::Fails(format!("predicate {p} false on the output"))
            };
            status.push((p, st));
        }
        Ok(RankOneForm {
            matrix: out,
            transform: tr,
            params,
            status,
        })
    }
}
