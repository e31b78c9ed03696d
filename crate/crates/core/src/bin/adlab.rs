use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::json;

use adlab::decompose::{bsg_asymmetric, dec_tk, ratio_box, sidon_extract, verify_trace, SidonMode};
use adlab::dissociation::{d_k_exact, d_star_bounds, dim_k_exact, is_k_dissociated};
use adlab::energy::{additive_energy, t_k, to_f64, Op};
use adlab::harness::{self, generate, run_suite, InstanceSpec};
use adlab::modular::{dirichlet_min, fourier_max, subgroup, subgroup_growth_experiment, verify_dirichlet_dim, Exponent};
use adlab::setfile::{format_set, parse_inline, read_set};
use adlab::{Ambient, Budget, Error, GroundSet, Result};

#[derive(Parser)]
#[command(name = "adlab", version, about = "Additive dimension and energy laboratory")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct Global {
    /// Order of dissociativity (default 1) or energy (default 2).
    #[arg(long, global = true)]
    k: Option<u32>,
    /// Group operation for energies and Sidon sets.
    #[arg(long, global = true, default_value = "add")]
    op: Op,
    /// Search budget; defaults to ADLAB_BUDGET or 2^26.
    #[arg(long, global = true)]
    budget: Option<u64>,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Print JSON instead of text.
    #[arg(long, global = true)]
    json: bool,
    /// Size cap for sumsets and spans.
    #[arg(long, global = true, default_value_t = 1 << 20)]
    cap: usize,
}

impl Global {
    fn budget(&self) -> Budget {
        self.budget.map(Budget).unwrap_or_else(Budget::from_env)
    }
}

/// Where a set comes from: an inline list or a set file.
#[derive(Args, Clone)]
struct SetArg {
    /// Inline elements, e.g. `1,2,5` or `1,0;0,1` with --rank 2.
    #[arg(long, conflicts_with = "file")]
    set: Option<String>,
    /// Set file (`@ambient z d=1` or `@ambient mod N` header, one element per line).
    #[arg(long)]
    file: Option<PathBuf>,
    /// Read inline elements as residues mod N.
    #[arg(long = "mod", conflicts_with = "rank")]
    modulus: Option<u64>,
    #[arg(long, default_value_t = 1)]
    rank: usize,
}

impl SetArg {
    fn load(&self) -> Result<GroundSet> {
        match (&self.set, &self.file) {
            (Some(s), None) => {
                let ambient = match self.modulus {
                    Some(n) => Ambient::Residues { modulus: n },
                    None => Ambient::Lattice { rank: self.rank },
                };
                parse_inline(s, ambient)
            }
            (None, Some(p)) => read_set(p),
            _ => Err(Error::InvalidParam("give exactly one of --set or --file".into())),
        }
    }
}

#[derive(Subcommand)]
enum Cmd {
    /// Run a claim suite and write the report.
    Verify {
        #[arg(long, default_value = "core")]
        suite: String,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Restrict to these claim ids (comma separated).
        #[arg(long, value_delimiter = ',')]
        claims: Vec<String>,
    },
    /// dim_k, d_k and d*_k with certified bounds.
    Dim {
        #[command(flatten)]
        a: SetArg,
        /// Also report whether the whole set is k-dissociated.
        #[arg(long)]
        certificate: bool,
    },
    /// T_k of a set, or E(A, B) with --with.
    Energy {
        #[command(flatten)]
        a: SetArg,
        /// Second set (inline, same ambient) for the mixed energy E(A, B).
        #[arg(long)]
        with: Option<String>,
    },
    /// nA - mA.
    Sumset {
        #[command(flatten)]
        a: SetArg,
        #[arg(long, default_value_t = 2)]
        n: u32,
        #[arg(long, default_value_t = 0)]
        m: u32,
        /// Print the elements too.
        #[arg(long)]
        list: bool,
    },
    /// Span_k(A).
    Span {
        #[command(flatten)]
        a: SetArg,
    },
    /// The cube {Σ ε_i a_i : ε ∈ {0,1}}.
    Cube {
        #[command(flatten)]
        a: SetArg,
    },
    /// Multiplicative subgroup of F_p of order t, with growth data.
    Subgroup {
        #[arg(long)]
        p: u64,
        #[arg(long)]
        t: u64,
        #[arg(long, default_value_t = 4)]
        nmax: u32,
        #[arg(long, default_value_t = 2)]
        kmax: u32,
    },
    /// min_q Σ_a ||qa/N||^s, plus the dimension inequality.
    Dirichlet {
        #[command(flatten)]
        a: SetArg,
        #[arg(long, default_value = "2")]
        s: Exponent,
        /// Modulus N for integer sets.
        #[arg(long)]
        n: Option<u64>,
        /// Skip the dimension check.
        #[arg(long)]
        no_dim: bool,
    },
    /// max_{r≠0} |Â(r)| over Z/NZ.
    Fourier {
        #[command(flatten)]
        a: SetArg,
    },
    /// Split A into additively and multiplicatively structured parts.
    Decompose {
        #[command(flatten)]
        a: SetArg,
        #[arg(long, default_value_t = 2)]
        s: u32,
        #[arg(long, default_value_t = 2)]
        q: u32,
        #[arg(long = "K")]
        k_param: Option<f64>,
        #[arg(long, default_value_t = 32)]
        max_iter: u32,
        /// Write the replayable trace here.
        #[arg(long)]
        trace: Option<PathBuf>,
        /// Replay an existing trace instead of computing one.
        #[arg(long, conflicts_with = "trace")]
        replay: Option<PathBuf>,
    },
    /// Asymmetric Balog-Szemerédi-Gowers on (A, B); B defaults to A.
    Bsg {
        #[command(flatten)]
        a: SetArg,
        #[arg(long)]
        with: Option<String>,
        /// Target K; defaults to |A||B|^2 / E(A, B).
        #[arg(long = "K")]
        k_target: Option<f64>,
        #[arg(long, default_value_t = 1)]
        l: u32,
    },
    /// A large B_h[1] subset for the chosen operation.
    Sidon {
        #[command(flatten)]
        a: SetArg,
        #[arg(long, default_value_t = 2)]
        h: u32,
        #[arg(long)]
        exact: bool,
    },
    /// Largest n with {a/b : a, b ∈ [n]} inside A/A.
    Ratiobox {
        #[command(flatten)]
        a: SetArg,
    },
    /// Materialise an instance from a JSON spec, e.g. '{"generator":"interval","n":5}'.
    Gen {
        spec: String,
    },
}

/// Print a line, ignoring a closed stdout.
fn say(line: &str) {
    let _ = writeln!(std::io::stdout().lock(), "{line}");
}

fn emit<T: Serialize>(json: bool, value: &T, text: impl FnOnce() -> String) {
    if json {
        say(&serde_json::to_string_pretty(value).expect("serialisable"));
    } else {
        say(&text());
    }
}

fn show(set: &GroundSet) -> String {
    set.to_string()
}

fn run(cli: Cli) -> Result<bool> {
    let g = &cli.global;
    let budget = g.budget();
    match cli.cmd {
        Cmd::Verify { suite, out, claims } => {
            let (default_claims, instances) = harness::suite(&suite, g.seed)?;
            let ids: Vec<&str> =
                if claims.is_empty() { default_claims } else { claims.iter().map(String::as_str).collect() };
            let suite_budget = g.budget.map(Budget).unwrap_or_else(|| {
                std::env::var("ADLAB_BUDGET").ok().map_or(Budget(harness::SUITE_BUDGET), |_| Budget::from_env())
            });
            let report = run_suite(&suite, &ids, &instances, suite_budget, g.seed)?;
            let body = report.to_json();
            match &out {
                Some(path) => std::fs::write(path, body + "\n").map_err(|e| Error::InvalidParam(e.to_string()))?,
                None if g.json => say(&body),
                None => {}
            }
            if out.is_some() || !g.json {
                for s in &report.summary {
                    let fit = s.fit.as_ref().map_or(String::new(), |f| format!(" fitted={:.4} median={:.4}", f.value, f.median));
                    say(&format!(
                        "{:<22} {:<6} records={:<5} violations={} skipped={}{}",
                        s.claim,
                        format!("{:?}", s.class).to_lowercase(),
                        s.records,
                        s.violations,
                        s.skipped,
                        fit
                    ));
                }
                for r in report.violations() {
                    eprintln!("VIOLATION {} on {}: {}", r.claim, r.instance, r.note.as_deref().unwrap_or(""));
                }
                say(&format!("instances={} hard_violations={}", report.instances, report.hard_violations));
            }
            Ok(report.passed())
        }
        Cmd::Dim { a, certificate } => {
            let k = g.k.unwrap_or(1);
            let set = a.load()?;
            let dim = dim_k_exact(&set, k, budget)?;
            let d = d_k_exact(&set, k, budget)?;
            let ds = d_star_bounds(&set, k, budget)?;
            let cert = if certificate { Some(is_k_dissociated(&set, k, budget)?) } else { None };
            let v = json!({"k": k, "size": set.len(), "dim": dim, "d": d, "d_star": ds, "certificate": cert});
            emit(g.json, &v, || {
                let r = |b: &adlab::dissociation::DimensionBounds| {
                    if b.exact { b.lower.to_string() } else { format!("[{}, {}]", b.lower, b.upper) }
                };
                let mut s = format!("dim_{k} = {}\nd_{k} = {}\nd*_{k} = {}", r(&dim), r(&d), r(&ds), k = k);
                if let Some(w) = &dim.witness_lower {
                    s += &format!("\nwitness {}", show(w));
                }
                if let Some(c) = &cert {
                    s += &format!("\ncertificate {:?} via {:?}", c.verdict, c.method);
                }
                s
            });
            Ok(true)
        }
        Cmd::Energy { a, with } => {
            let set = a.load()?;
            let v = match with {
                Some(b) => {
                    let other = parse_inline(&b, set.ambient())?;
                    let e = additive_energy(&set, &other)?;
                    json!({"energy": "E(A,B)", "value_dec": e.to_string()})
                }
                None => {
                    let k = g.k.unwrap_or(2);
                    let e = t_k(&set, k, g.op)?;
                    json!({"energy": format!("T_{k}"), "op": format!("{:?}", g.op).to_lowercase(), "value_dec": e.to_string()})
                }
            };
            emit(g.json, &v, || format!("{} = {}", v["energy"].as_str().unwrap(), v["value_dec"].as_str().unwrap()));
            Ok(true)
        }
        Cmd::Sumset { a, n, m, list } => {
            let set = a.load()?;
            let s = if n + m <= 1 || g.cap == usize::MAX { set.n_minus_m(n, m)? } else { capped_n_minus_m(&set, n, m, g.cap)? };
            let v = json!({"n": n, "m": m, "size": s.len(), "set": if list { Some(&s) } else { None }});
            emit(g.json, &v, || if list { format_set(&s) } else { format!("|{n}A-{m}A| = {}", s.len()) });
            Ok(true)
        }
        Cmd::Span { a } => {
            let set = a.load()?;
            let k = g.k.unwrap_or(1);
            let s = set.span(k, g.cap)?;
            emit(g.json, &json!({"k": k, "size": s.len(), "set": s}), || format!("|Span_{k}(A)| = {}", s.len()));
            Ok(true)
        }
        Cmd::Cube { a } => {
            let set = a.load()?;
            let (q, proper) = set.cube()?;
            emit(g.json, &json!({"size": q.len(), "proper": proper, "set": q}), || {
                format!("|Q| = {} ({})\n{}", q.len(), if proper { "proper" } else { "not proper" }, show(&q))
            });
            Ok(true)
        }
        Cmd::Subgroup { p, t, nmax, kmax } => {
            let (spec, gamma) = subgroup(p, t)?;
            let r = subgroup_growth_experiment(p, t, nmax, kmax, budget)?;
            emit(g.json, &r, || {
                format!(
                    "Γ({p}, {t}) generated by {} = {}\n|nΓ| = {:?}\nT_k = {:?}\ndim ∈ [{}, {}]",
                    spec.generator,
                    show(&gamma),
                    r.curve.sizes,
                    r.energies,
                    r.dim.lower,
                    r.dim.upper
                )
            });
            Ok(true)
        }
        Cmd::Dirichlet { a, s, n, no_dim } => {
            let set = a.load()?;
            let modulus = n
                .or(set.ambient().modulus())
                .ok_or_else(|| Error::InvalidParam("integer sets need --n".into()))?;
            if no_dim {
                let v = dirichlet_min(&set, modulus, s, None)?;
                emit(g.json, &v, || format!("D = {} at q = {}", v.value, v.argmin_q));
                return Ok(true);
            }
            let r = verify_dirichlet_dim(&set, modulus, s, budget)?;
            emit(g.json, &r, || {
                let mut t = format!("D = {} at q = {}", r.dirichlet.value, r.dirichlet.argmin_q);
                if let Some(b) = r.bound {
                    t += &format!("\ndim >= {} needs bound {b:.4}: {:?}", r.dim.lower, r.holds);
                }
                if let Some(why) = &r.skipped {
                    t += &format!("\nskipped: {why}");
                }
                t
            });
            Ok(r.holds != Some(false) && r.pigeonhole_holds != Some(false))
        }
        Cmd::Fourier { a } => {
            let set = a.load()?;
            let f = fourier_max(&set)?;
            emit(g.json, &f, || format!("max |Â(r)| = {:.6} at r = {} (|A| = {})", f.max_abs, f.argmax, f.size));
            Ok(true)
        }
        Cmd::Decompose { a, s, q, k_param, max_iter, trace, replay } => {
            if let Some(path) = replay {
                let bytes = std::fs::read(&path).map_err(|e| Error::InvalidParam(e.to_string()))?;
                let r = adlab::decompose::DecompositionResult::from_json(&bytes)?;
                verify_trace(&r)?;
                emit(g.json, &json!({"replayed": true, "peels": r.peels()}), || format!("trace replays ({} peels)", r.peels()));
                return Ok(true);
            }
            let set = a.load()?;
            let r = dec_tk(&set, s, q, k_param, max_iter, g.seed)?;
            if let Some(path) = trace {
                std::fs::write(&path, r.to_json()).map_err(|e| Error::InvalidParam(e.to_string()))?;
            }
            emit(g.json, &r, || {
                let mut t = format!(
                    "B = {}\nC = {}\nT+_{q}(B) = {}\nTx_{s}(C) = {} (threshold {})\npeels = {}, measured δ = {:.4}",
                    show(&r.b),
                    show(&r.c),
                    r.t_add_q_b,
                    r.t_mul_s_c,
                    r.threshold,
                    r.peels(),
                    r.measured_delta
                );
                for w in &r.warnings {
                    t += &format!("\nwarning: {w}");
                }
                t
            });
            Ok(true)
        }
        Cmd::Bsg { a, with, k_target, l } => {
            let set = a.load()?;
            let b = match with {
                Some(s) => parse_inline(&s, set.ambient())?,
                None => set.clone(),
            };
            let k = match k_target {
                Some(k) => k,
                None => {
                    let e = to_f64(&additive_energy(&set, &b)?);
                    set.len() as f64 * (b.len() as f64).powi(2) / e * (1.0 + 1e-9)
                }
            };
            let r = bsg_asymmetric(&set, &b, k, l, g.seed)?;
            emit(g.json, &r, || {
                format!(
                    "H = {}\n|H+H|/|H| = {:.4}\nmax_x |B ∩ (H+x)| = {} at x = {:?}",
                    show(&r.h),
                    r.stats.doubling,
                    r.stats.intersection,
                    r.x
                )
            });
            Ok(true)
        }
        Cmd::Sidon { a, h, exact } => {
            let set = a.load()?;
            let mode = if exact { SidonMode::ExactTiny } else { SidonMode::Greedy };
            let s = sidon_extract(&set, h, g.op, mode, budget)?;
            emit(g.json, &json!({"h": h, "size": s.len(), "set": s}), || format!("|B| = {}\n{}", s.len(), show(&s)));
            Ok(true)
        }
        Cmd::Ratiobox { a } => {
            let set = a.load()?;
            let r = ratio_box(&set)?;
            emit(g.json, &r, || format!("n = {}", r.n));
            Ok(true)
        }
        Cmd::Gen { spec } => {
            let spec = InstanceSpec::from_json(spec.as_bytes())?;
            let set = generate(&spec)?;
            emit(g.json, &set, || format_set(&set).trim_end().to_string());
            Ok(true)
        }
    }
}

/// `nA - mA` built pairwise with a size cap on every intermediate set.
fn capped_n_minus_m(set: &GroundSet, n: u32, m: u32, cap: usize) -> Result<GroundSet> {
    if n as u64 + m as u64 > adlab::groundset::MAX_FOLD as u64 {
        return Err(Error::InvalidParam(format!("n + m exceeds {}", adlab::groundset::MAX_FOLD)));
    }
    let neg = set.neg()?;
    let mut acc: Option<GroundSet> = None;
    for part in std::iter::repeat(set).take(n as usize).chain(std::iter::repeat(&neg).take(m as usize)) {
        acc = Some(match acc {
            None => part.clone(),
            Some(x) => x.sumset_capped(part, cap)?,
        });
    }
    Ok(acc.unwrap_or_else(|| GroundSet::from_vectors(set.ambient(), vec![vec![0; set.rank()]]).expect("zero")))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("adlab: {e}");
            ExitCode::from(2)
        }
    }
}
