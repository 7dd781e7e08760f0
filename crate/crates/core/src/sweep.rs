//! Seeded random isocrystals and the end-to-end pipeline
//! solve, minimize, extract, fit.
//!
//! The generator is ChaCha8 (`rand_chacha`) seeded with `seed_from_u64`;
//! trial `t` of a sweep uses stream `t` of the same seed, so any single
//! trial can be replayed in isolation.

use num::rational::BigRational;
use num::BigInt;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::isocrystal::{IsocrystalMatrix, SeriesMatrix};
use crate::literal::rational_to_json;
use crate::monodromy::{break_sequence_extract, fit_pseudo_stable, BreakSequence};
use crate::series::{decay_classify, twist_to_minimal, CoeffElem, Ctx, DecayClass, PrimeContext, Series};

/// Exponents of random monomials are drawn from this range.
pub const EXPONENT_RANGE: (i64, i64) = (-8, -1);

pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

/// `terms` monomials `c T^n` with `n` in [`EXPONENT_RANGE`] and `c` a random
/// element of the coefficient ring.
pub fn random_poly(rng: &mut ChaCha8Rng, ctx: &Ctx, terms: usize) -> Result<Series> {
    let mut out = Vec::with_capacity(terms);
    for _ in 0..terms {
        let n = rng.gen_range(EXPONENT_RANGE.0..=EXPONENT_RANGE.1);
        out.push((n, random_coeff(rng, ctx)));
    }
    Series::from_terms(ctx, out)
}

/// Random coefficient whose pi-adic digits are each in `[0, p)`, with a
/// nonzero leading digit.
pub fn random_coeff(rng: &mut ChaCha8Rng, ctx: &Ctx) -> CoeffElem {
    let p = ctx.p();
    let mut c = CoeffElem::from_int(ctx, rng.gen_range(1..p) as i64);
    for level in 1..ctx.prec().min(4) {
        let d = rng.gen_range(0..p) as i64;
        let term = CoeffElem::from_int(ctx, d).mul_pi_power(level);
        c = c.add(&term).expect("same context");
    }
    c
}

/// `diag(pi^r_i) + pi^level * (random Laurent polynomials in T^-1)`.
pub fn random_isocrystal(rng: &mut ChaCha8Rng, ctx: &Ctx, r: &[u32], level: u32, terms: usize) -> Result<IsocrystalMatrix> {
    let n = r.len();
    let mut m = SeriesMatrix::zero(ctx, n);
    for i in 0..n {
        for j in 0..n {
            let mut x = random_poly(rng, ctx, terms)?.mul_pi_power(level);
            if i == j {
                x = x.add(&Series::constant(&CoeffElem::pi_power(ctx, r[i])))?;
            }
            m.set(i, j, x);
        }
    }
    IsocrystalMatrix::new(m, r.to_vec())
}

/// Congruence level drawn from `[s + 2, s + 4]`, capped below the precision.
pub fn random_level(rng: &mut ChaCha8Rng, s: u32, prec: u32) -> u32 {
    rng.gen_range(s + 2..=s + 4).min(prec.saturating_sub(1)).max(1)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SweepConfig {
    pub seed: u64,
    pub trials: u64,
    pub p: u64,
    pub f: u32,
    pub e: u32,
    pub prec: u32,
    pub window: i64,
    /// Diagonal exponents `r_i`; the rank is their count.
    pub slopes: Vec<u32>,
    /// Number of breaks to read.
    pub k: u32,
    pub terms: usize,
}

impl SweepConfig {
    pub fn context(&self) -> Result<Ctx> {
        PrimeContext::new(self.p, self.f, self.e, self.prec, self.window)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum FitOutcome {
    /// The pseudo-stable law at the predicted rate reproduces the breaks.
    Success { a: BigRational, b: BigRational, onset: u32 },
    /// Breaks violate `s_(k+1) > p s_k` or `p | s_k`.
    HypothesesNotMet(Vec<String>),
    NoFit,
    Failed { kind: &'static str, detail: String },
}

impl FitOutcome {
    pub fn tag(&self) -> &'static str {
        match self {
            FitOutcome::Success { .. } => "success",
            FitOutcome::HypothesesNotMet(_) => "hypotheses not met",
            FitOutcome::NoFit => "no fit",
            FitOutcome::Failed { .. } => "error",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrialRecord {
    pub trial: u64,
    pub np: (bool, bool, bool),
    pub level: u32,
    pub residual_level: Option<u32>,
    pub breaks: Vec<BigRational>,
    pub fit: FitOutcome,
    pub decay: Option<DecayClass>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepReport {
    pub config: SweepConfig,
    pub records: Vec<TrialRecord>,
}

/// Result of running the pipeline on one matrix.
#[derive(Clone, Debug)]
pub struct PipelineRun {
    pub lambda: Series,
    pub lambda_min: Series,
    pub residual_level: u32,
    pub breaks: BreakSequence,
}

/// Unit root, minimal twist and breaks `k = 1..k_max` of one matrix.
/// The solve uses the largest guard allowed by row 1.
pub fn run_pipeline(a: &IsocrystalMatrix, k_max: u32) -> Result<PipelineRun> {
    let n = a.n();
    let guard = (1..n)
        .map(|j| a.get(0, j).valuation())
        .min()
        .unwrap_or(0)
        .min(a.context().prec() - 1);
    let sol = a.solve_unit_root_guarded(guard)?;
    let (lambda_min, _) = twist_to_minimal(&sol.lambda)?;
    let breaks = break_sequence_extract(&lambda_min, k_max)?;
    Ok(PipelineRun {
        lambda: sol.lambda,
        lambda_min,
        residual_level: sol.residual_level,
        breaks,
    })
}

fn fit_outcome(s: &BreakSequence, rate: &BigRational) -> FitOutcome {
    let violations = s.violations();
    if !violations.is_empty() {
        return FitOutcome::HypothesesNotMet(violations);
    }
    match fit_pseudo_stable(s, rate, 1) {
        Ok(Some(fit)) => FitOutcome::Success {
            a: fit.a[0].clone(),
            b: fit.b[0].clone(),
            onset: fit.onset,
        },
        Ok(None) => FitOutcome::NoFit,
        Err(e) => FitOutcome::Failed {
            kind: e.kind(),
            detail: e.to_string(),
        },
    }
}

pub fn run_trial(cfg: &SweepConfig, ctx: &Ctx, trial: u64) -> TrialRecord {
    let mut rng = trial_rng(cfg.seed, trial);
    let s = cfg
        .slopes
        .windows(2)
        .map(|w| w[1] - w[0])
        .find(|&g| g > 0)
        .unwrap_or(1);
    let level = random_level(&mut rng, s, cfg.prec);
    let mut record = TrialRecord {
        trial,
        np: (false, false, false),
        level,
        residual_level: None,
        breaks: Vec::new(),
        fit: FitOutcome::NoFit,
        decay: None,
    };
    let fail = |record: &mut TrialRecord, e: Error| {
        record.fit = FitOutcome::Failed {
            kind: e.kind(),
            detail: e.to_string(),
        };
    };
    let a = match random_isocrystal(&mut rng, ctx, &cfg.slopes, level, cfg.terms) {
        Ok(a) => a,
        Err(e) => {
            fail(&mut record, e);
            return record;
        }
    };
    if let Ok(nd) = a.newton_data() {
        record.np = (nd.np1, nd.np2, nd.np3);
    }
    let rate = BigRational::new(BigInt::from(cfg.e * cfg.f), BigInt::from(s));
    match run_pipeline(&a, cfg.k.min(cfg.prec - 1)) {
        Ok(run) => {
            record.residual_level = Some(run.residual_level);
            record.breaks = run.breaks.breaks.clone();
            record.fit = fit_outcome(&run.breaks, &rate);
            let top = ctx.prec() - 1;
            record.decay = run
                .lambda_min
                .decay_profile(top)
                .and_then(|p| decay_classify(&p))
                .ok()
                .map(|c| c.class);
        }
        Err(e) => fail(&mut record, e),
    }
    record
}

pub fn sweep(cfg: &SweepConfig) -> Result<SweepReport> {
    if cfg.slopes.is_empty() {
        return Err(Error::pre("sweep", "need at least one slope"));
    }
    let ctx = cfg.context()?;
    let records = (0..cfg.trials).map(|t| run_trial(cfg, &ctx, t)).collect();
    Ok(SweepReport {
        config: cfg.clone(),
        records,
    })
}

fn class_json(c: &Option<DecayClass>) -> Value {
    match c {
        None => Value::Null,
        Some(DecayClass::Overconvergent { m, c }) => {
            json!({"class": "overconvergent", "m": rational_to_json(m), "c": rational_to_json(c)})
        }
        Some(DecayClass::LogDecay { r, c }) => {
            json!({"class": "log_decay", "r": rational_to_json(r), "c": rational_to_json(c)})
        }
        Some(DecayClass::Inconclusive) => json!({"class": "inconclusive"}),
    }
}

impl SweepReport {
    pub fn count(&self, tag: &str) -> usize {
        self.records.iter().filter(|r| r.fit.tag() == tag).count()
    }

    pub fn to_json(&self) -> Value {
        let c = &self.config;
        let records: Vec<Value> = self
            .records
            .iter()
            .map(|r| {
                let fit = match &r.fit {
                    FitOutcome::Success { a, b, onset } => {
                        json!({"tag": "success", "a": rational_to_json(a), "b": rational_to_json(b), "k0": onset})
                    }
                    FitOutcome::HypothesesNotMet(v) => json!({"tag": "hypotheses not met", "violated": v}),
                    FitOutcome::NoFit => json!({"tag": "no fit"}),
                    FitOutcome::Failed { kind, detail } => json!({"tag": "error", "kind": kind, "detail": detail}),
                };
                json!({
                    "trial": r.trial,
                    "np": [r.np.0, r.np.1, r.np.2],
                    "level": r.level,
                    "residual_level": r.residual_level,
                    "breaks": r.breaks.iter().map(rational_to_json).collect::<Vec<_>>(),
                    "fit": fit,
                    "decay": class_json(&r.decay),
                })
            })
            .collect();
        json!({
            "config": {
                "seed": c.seed, "trials": c.trials, "p": c.p, "f": c.f, "e": c.e,
                "prec": c.prec, "window": c.window, "slopes": c.slopes, "K": c.k,
                "generator": "ChaCha8, seed_from_u64(seed), stream = trial",
            },
            "records": records,
            "counts": {
                "success": self.count("success"),
                "hypotheses not met": self.count("hypotheses not met"),
                "no fit": self.count("no fit"),
                "error": self.count("error"),
            },
        })
    }
}
