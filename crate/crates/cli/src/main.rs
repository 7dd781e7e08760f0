use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};
use unitroot::isocrystal::{matrix_log_bound, PredicateStatus};
use unitroot::literal::{
    context_to_json, fit_to_json, matrix_from_json, matrix_to_json, parse_rational,
    rational_from_json, rational_to_json, series_from_json, series_matrix_to_json, series_to_json,
    tower_from_json, ContextOverrides,
};
use unitroot::monodromy::{break_sequence_extract, fit_pseudo_stable};
use unitroot::ramification::{fit_genus_polynomials, genus_sequence, lower_from_upper, upper_from_lower};
use unitroot::series::{decay_classify, twist_to_minimal, DecayClass, PartialVal};
use unitroot::sweep::{sweep, SweepConfig};
use unitroot::{BigRational, Error};

#[derive(Parser, Debug)]
#[command(name = "unitroot", version, about = "Unit-root Frobenius, ramification breaks and genus growth")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Override the pi-adic precision N of every input.
    #[arg(long, global = true)]
    prec: Option<u32>,

    /// Override the exponent window W of every input.
    #[arg(long, global = true)]
    window: Option<i64>,

    /// Write the result here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    #[arg(long, global = true, value_enum)]
    format: Option<Format>,

    /// Hard cap on the exponent window.
    #[arg(long, global = true, env = "UNITROOT_MAX_WINDOW")]
    max_window: Option<i64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Unit-root vector and eigenvalue of a Frobenius matrix.
    Solve {
        matrix: PathBuf,
        /// Also minimize lambda and read this many breaks.
        #[arg(long = "K")]
        k: Option<u32>,
        /// Precision guard; defaults to the least valuation in row 1.
        #[arg(long)]
        guard: Option<u32>,
    },
    /// Breaks s_k = -w_k of a minimal Frobenius element.
    Breaks {
        series: PathBuf,
        #[arg(long = "K")]
        k: u32,
        /// Twist to the minimal representative first.
        #[arg(long)]
        minimize: bool,
        /// Fit s_(km+i) = a_i p^(mrk) + b_i at this rate.
        #[arg(long)]
        rate: Option<String>,
        #[arg(long, default_value_t = 1)]
        period: u32,
    },
    /// Genus sequence of a Z_p-tower.
    Genus {
        tower: PathBuf,
        #[arg(long)]
        n: u32,
        /// Fit genus polynomials of degree m (r + d) with this d.
        #[arg(long)]
        fit_degree: Option<u32>,
        #[arg(long, default_value = "1")]
        rate: String,
        #[arg(long, default_value_t = 1)]
        period: u32,
    },
    /// Partial valuation profile and growth class of a series.
    Decay {
        series: PathBuf,
        /// Highest level read; defaults to N - 1.
        #[arg(long = "K")]
        k: Option<u32>,
    },
    /// Skew conjugation to the rank-one normal form.
    Reduce {
        matrix: PathBuf,
        #[arg(long)]
        level: u32,
        /// Bound for row 1 beyond the second break; defaults to the input's.
        #[arg(long)]
        d: Option<String>,
    },
    /// Seeded random isocrystals run through the full pipeline.
    Sweep {
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        trials: u64,
        #[arg(long)]
        rank: usize,
        /// Diagonal pi-exponents, comma separated; defaults to 0,1,..
        #[arg(long, value_delimiter = ',')]
        slopes: Option<Vec<u32>>,
        #[arg(long, default_value_t = 3)]
        p: u64,
        #[arg(long = "K")]
        k: Option<u32>,
        #[arg(long, default_value_t = 2)]
        terms: usize,
    },
    /// Convert between upper and lower numbering.
    Convert { breaks: PathBuf },
}

#[derive(Debug)]
enum Failure {
    Lib(Error),
    Io(String, io::Error),
    Usage(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

impl Failure {
    fn report(&self) -> Value {
        match self {
            Failure::Lib(e) => json!({"operation": e.operation(), "kind": e.kind(), "detail": e.to_string()}),
            Failure::Io(path, e) => json!({"operation": "io", "kind": "io", "detail": format!("{path}: {e}")}),
            Failure::Usage(msg) => json!({"operation": "run_job", "kind": "schema", "detail": msg}),
        }
    }

    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Io(..) => 6,
            Failure::Lib(e) => match e {
                Error::Literal(_) => 2,
                Error::WindowOverflow { .. } => 4,
                Error::NonConvergence { .. } => 5,
                _ => 3,
            },
        }
    }
}

type Res<T> = std::result::Result<T, Failure>;

fn read_json(path: &Path) -> Res<Value> {
    let raw = fs::read_to_string(path).map_err(|e| Failure::Io(path.display().to_string(), e))?;
    serde_json::from_str(&raw).map_err(|e| Failure::Lib(Error::Literal(format!("{}: {e}", path.display()))))
}

fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("values serialize");
    s.push('\n');
    s
}

fn csv_text(header: &[&str], rows: Vec<Vec<String>>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for r in rows {
        w.write_record(&r).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf8")
}

fn rational(s: &str) -> Res<BigRational> {
    Ok(parse_rational(s)?)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => e.exit(),
        Err(e) => {
            let text = e.render().to_string();
            let first = text.lines().next().unwrap_or("").trim_start_matches("error: ").to_string();
            return fail(&Failure::Usage(first));
        }
    };
    match run(&cli) {
        Ok(text) => {
            let written = match &cli.out {
                Some(p) => fs::write(p, &text).map_err(|e| Failure::Io(p.display().to_string(), e)),
                None => io::stdout()
                    .write_all(text.as_bytes())
                    .map_err(|e| Failure::Io("stdout".into(), e)),
            };
            match written {
                Ok(()) => ExitCode::SUCCESS,
                Err(f) => fail(&f),
            }
        }
        Err(f) => fail(&f),
    }
}

fn fail(f: &Failure) -> ExitCode {
    eprintln!("{}", serde_json::to_string(&f.report()).expect("values serialize"));
    ExitCode::from(f.code())
}

fn overrides(cli: &Cli) -> ContextOverrides {
    ContextOverrides {
        prec: cli.prec,
        window: cli.window,
        max_window: cli.max_window,
    }
}

fn w_text(w: PartialVal) -> String {
    w.to_string()
}

fn class_json(c: &DecayClass) -> Value {
    match c {
        DecayClass::Overconvergent { m, c } => {
            json!({"class": "overconvergent", "m": rational_to_json(m), "c": rational_to_json(c)})
        }
        DecayClass::LogDecay { r, c } => {
            json!({"class": "log_decay", "r": rational_to_json(r), "c": rational_to_json(c)})
        }
        DecayClass::Inconclusive => json!({"class": "inconclusive"}),
    }
}

fn run(cli: &Cli) -> Res<String> {
    let ov = overrides(cli);
    let text = match &cli.command {
        Command::Solve { matrix, k, guard } => {
            let a = matrix_from_json(&read_json(matrix)?, &ov)?;
            let guard = match guard {
                Some(g) => *g,
                None => (1..a.n())
                    .map(|j| a.get(0, j).valuation())
                    .min()
                    .unwrap_or(0)
                    .min(a.context().prec() - 1),
            };
            let sol = a.solve_unit_root_guarded(guard)?;
            let mut v = json!({
                "context": context_to_json(a.context()),
                "lambda": sol.lambda.to_string(),
                "lambda_series": series_to_json(&sol.lambda),
                "epsilon": sol.epsilon.iter().map(|x| x.to_string()).collect::<Vec<_>>(),
                "epsilon_series": sol.epsilon.iter().map(series_to_json).collect::<Vec<_>>(),
                "residual_level": sol.residual_level,
                "guard": sol.guard,
                "iterations": sol.iterations,
            });
            if let Some(k) = k {
                let (lmin, _) = twist_to_minimal(&sol.lambda)?;
                let s = break_sequence_extract(&lmin, *k)?;
                v["lambda_min"] = Value::String(lmin.to_string());
                v["breaks"] = json!(s.breaks.iter().map(rational_to_json).collect::<Vec<_>>());
                v["first_break_index"] = json!(s.first);
                v["validated"] = json!(s.validated);
            }
            pretty(&v)
        }
        Command::Breaks { series, k, minimize, rate, period } => {
            let mut x = series_from_json(&read_json(series)?, &ov)?;
            if *minimize {
                x = twist_to_minimal(&x)?.0;
            }
            let s = break_sequence_extract(&x, *k)?;
            let rows: Vec<(u32, PartialVal, &BigRational)> = s
                .indexed()
                .map(|(k, b)| x.partial_valuation(k * x.context().e()).map(|w| (k, w, b)))
                .collect::<unitroot::Result<_>>()?;
            let fit = match rate {
                Some(r) => Some(fit_pseudo_stable(&s, &rational(r)?, *period)?),
                None => None,
            };
            match cli.format.unwrap_or(Format::Csv) {
                Format::Csv => csv_text(
                    &["k", "w_k", "s_k", "validated"],
                    rows.iter()
                        .map(|(k, w, b)| vec![k.to_string(), w_text(*w), b.to_string(), s.validated.to_string()])
                        .collect(),
                ),
                Format::Json => {
                    let mut v = json!({
                        "k": rows.iter().map(|r| r.0).collect::<Vec<_>>(),
                        "w_k": rows.iter().map(|r| w_text(r.1)).collect::<Vec<_>>(),
                        "s_k": s.breaks.iter().map(rational_to_json).collect::<Vec<_>>(),
                        "validated": s.validated,
                        "violations": s.violations(),
                    });
                    if let Some(fit) = fit {
                        v["fit"] = match fit {
                            Some(f) => {
                                let mut j = fit_to_json(&f);
                                j["hypotheses_not_met"] = json!(f.hypotheses_not_met);
                                j
                            }
                            None => Value::Null,
                        };
                    }
                    pretty(&v)
                }
            }
        }
        Command::Genus { tower, n, fit_degree, rate, period } => {
            let data = tower_from_json(&read_json(tower)?)?;
            let table = genus_sequence(&data, *n)?;
            match cli.format.unwrap_or(Format::Csv) {
                Format::Csv => csv_text(
                    &["n", "g_n", "integral"],
                    table
                        .rows
                        .iter()
                        .map(|r| vec![r.n.to_string(), r.genus.to_string(), r.integral.to_string()])
                        .collect(),
                ),
                Format::Json => {
                    let mut v = json!({
                        "p": data.p,
                        "g0": data.g0,
                        "n": table.rows.iter().map(|r| r.n).collect::<Vec<_>>(),
                        "g_n": table.rows.iter().map(|r| rational_to_json(&r.genus)).collect::<Vec<_>>(),
                        "integral": table.rows.iter().map(|r| r.integral).collect::<Vec<_>>(),
                    });
                    if let Some(d) = fit_degree {
                        let fit = fit_genus_polynomials(&table, *period, *d, &rational(rate)?)?;
                        v["fit"] = match fit {
                            Some(f) => json!({
                                "m": f.m,
                                "degree": f.degree,
                                "onset": f.onset,
                                "coefficients": f.coefficients.iter()
                                    .map(|c| c.iter().map(rational_to_json).collect::<Vec<_>>())
                                    .collect::<Vec<_>>(),
                            }),
                            None => Value::Null,
                        };
                    }
                    pretty(&v)
                }
            }
        }
        Command::Decay { series, k } => {
            let x = series_from_json(&read_json(series)?, &ov)?;
            let top = k.unwrap_or(x.context().prec() - 1);
            let profile = x.decay_profile(top)?;
            match cli.format.unwrap_or(Format::Json) {
                Format::Csv => csv_text(
                    &["k", "w_k"],
                    profile
                        .entries
                        .iter()
                        .map(|(l, w)| vec![profile.k(*l).to_string(), w_text(*w)])
                        .collect(),
                ),
                Format::Json => {
                    let cls = decay_classify(&profile)?;
                    pretty(&json!({
                        "profile": profile.entries.iter()
                            .map(|(l, w)| json!([rational_to_json(&profile.k(*l)), w_text(*w)]))
                            .collect::<Vec<_>>(),
                        "classification": class_json(&cls.class),
                        "range": [cls.range.0, cls.range.1],
                        "residual": cls.residual,
                    }))
                }
            }
        }
        Command::Reduce { matrix, level, d } => {
            let a = matrix_from_json(&read_json(matrix)?, &ov)?;
            let nd = a.newton_data()?;
            let d = match d {
                Some(d) => rational(d)?,
                None => {
                    let rate = nd
                        .rate(a.context().e(), a.context().f())
                        .ok_or(Error::Precondition {
                            op: "reduce_to_rank_one_form",
                            detail: "no slope gap".into(),
                        })?;
                    matrix_log_bound(&a, &rate)?.ok_or(Error::Precondition {
                        op: "reduce_to_rank_one_form",
                        detail: "input has an entry with w_0 < 0; pass --d".into(),
                    })?
                }
            };
            let form = a.reduce_to_rank_one_form(*level, &d)?;
            let predicates: Vec<Value> = form
                .status
                .iter()
                .map(|(p, st)| {
                    let (tag, detail) = match st {
                        PredicateStatus::Holds => ("holds", String::new()),
                        PredicateStatus::Fails(s) => ("fails", s.clone()),
                        PredicateStatus::Unattained(s) => ("unattained", s.clone()),
                    };
                    json!({"predicate": p.to_string(), "status": tag, "detail": detail})
                })
                .collect();
            pretty(&json!({
                "matrix": matrix_to_json(&form.matrix),
                "transform": series_matrix_to_json(&form.transform.composite),
                "steps": form.transform.steps.len(),
                "audit": form.transform.verify(&a, &form.matrix)?,
                "params": {
                    "n0": form.params.n0,
                    "r": rational_to_json(&form.params.r),
                    "c": form.params.c.as_ref().map(rational_to_json),
                    "d": rational_to_json(&form.params.d),
                },
                "predicates": predicates,
            }))
        }
        Command::Sweep { seed, trials, rank, slopes, p, k, terms } => {
            let slopes = slopes.clone().unwrap_or_else(|| (0..*rank as u32).collect());
            if slopes.len() != *rank {
                return Err(Failure::Usage(format!("--slopes lists {} exponents for rank {rank}", slopes.len())));
            }
            let prec = cli.prec.unwrap_or(7);
            let mut window = cli.window.unwrap_or(3i64.pow(8));
            if let Some(cap) = cli.max_window {
                window = window.min(cap);
            }
            let cfg = SweepConfig {
                seed: *seed,
                trials: *trials,
                p: *p,
                f: 1,
                e: 1,
                prec,
                window,
                slopes,
                k: k.unwrap_or(prec - 1),
                terms: *terms,
            };
            pretty(&sweep(&cfg)?.to_json())
        }
        Command::Convert { breaks } => {
            let v = read_json(breaks)?;
            let schema = |m: &str| Failure::Lib(Error::Literal(m.into()));
            let p = v.get("p").and_then(Value::as_u64).ok_or_else(|| schema("missing integer field \"p\""))?;
            let list = |key: &str| -> Res<Option<Vec<BigRational>>> {
                match v.get(key) {
                    None => Ok(None),
                    Some(Value::Array(xs)) => Ok(Some(xs.iter().map(rational_from_json).collect::<unitroot::Result<_>>()?)),
                    Some(_) => Err(schema(&format!("\"{key}\" must be an array"))),
                }
            };
            let (upper, lower) = match (list("upper")?, list("lower")?) {
                (Some(u), None) => {
                    let l = lower_from_upper(&u, p);
                    (u, l)
                }
                (None, Some(l)) => (upper_from_lower(&l, p), l),
                _ => return Err(schema("give exactly one of \"upper\" and \"lower\"")),
            };
            match cli.format.unwrap_or(Format::Csv) {
                Format::Csv => csv_text(
                    &["n", "s_n", "lambda_n"],
                    upper
                        .iter()
                        .zip(&lower)
                        .enumerate()
                        .map(|(i, (s, l))| vec![(i + 1).to_string(), s.to_string(), l.to_string()])
                        .collect(),
                ),
                Format::Json => pretty(&json!({
                    "p": p,
                    "upper": upper.iter().map(rational_to_json).collect::<Vec<_>>(),
                    "lower": lower.iter().map(rational_to_json).collect::<Vec<_>>(),
                })),
            }
        }
    };
    Ok(text)
}
