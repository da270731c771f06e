//! `qpirlab`: batch front-end for the protocol lab.
//!
//! Exit codes: 0 success, 1 input or runtime error, 2 a verdict failed.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use qpirlab::adversary::{certify_specious, default_inputs, AdversaryStrategy, RecoveryMapSet};
use qpirlab::config::{DEFAULT_DIM_GUARD, DEFAULT_RANK_TOL};
use qpirlab::fuzz::{fvdg_suite, schmidt_suite};
use qpirlab::linalg::{random_pure_state, rng_from_seed, StateVector};
use qpirlab::protocol::{execute, purify_party, schmidt_rank_profile, Party};
use qpirlab::qpir::{correctness_delta, privacy_epsilon_purified, PrivacyOptions};
use qpirlab::reduction::{lower_bound, reduce, superposition_attack};
use qpirlab::source::{load, Loaded, SourceDefaults};
use qpirlab::{Exec, LabConfig};

#[derive(Parser, Debug)]
#[command(name = "qpirlab", version, about = "Two-party quantum protocol lab")]
struct Cli {
    #[command(subcommand)]
    verb: Verb,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug)]
struct Common {
    /// builtin:<name>?k=v&... or a JSON protocol file
    #[arg(long, global = true)]
    protocol: Option<String>,
    #[arg(long, global = true)]
    n: Option<usize>,
    #[arg(long, global = true)]
    delta: Option<f64>,
    #[arg(long, global = true)]
    epsilon: Option<f64>,
    #[arg(long, global = true, env = "QPIRLAB_SEED", default_value_t = 0)]
    seed: u64,
    #[arg(long, global = true, default_value_t = DEFAULT_RANK_TOL)]
    rank_tol: f64,
    #[arg(long, global = true, default_value_t = DEFAULT_DIM_GUARD)]
    dim_guard: usize,
    #[arg(long, global = true)]
    trials: Option<usize>,
    /// write the report here instead of stdout
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// schedule independent runs on one thread
    #[arg(long, global = true)]
    sequential: bool,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Format {
    Json,
    Csv,
    Text,
}

#[derive(Subcommand, Debug)]
enum Verb {
    /// Execute a protocol and report every step.
    Run {
        source: Option<String>,
        /// database for QPIR protocols
        #[arg(long, default_value_t = 0)]
        x: u64,
        /// index for QPIR protocols (1-based)
        #[arg(long, default_value_t = 1)]
        i: usize,
    },
    /// Evaluate the communication lower bound for (n, delta, epsilon).
    Bound,
    /// Full QPIR to random access encoding pipeline.
    Reduce { source: Option<String> },
    /// Correctness error of a QPIR protocol.
    QpirCorrectness { source: Option<String> },
    /// Privacy against the purified server.
    QpirPrivacy {
        source: Option<String>,
        /// also compare indices for every basis database
        #[arg(long)]
        basis_inputs: bool,
    },
    /// Superposition attack by the purified server.
    Attack { source: Option<String> },
    /// Certify an adversary as specious against recovery maps.
    Certify {
        source: Option<String>,
        #[arg(long, value_enum, default_value_t = PartyArg::A)]
        party: PartyArg,
        /// adversary JSON file (default: the purified party)
        #[arg(long)]
        adversary: Option<PathBuf>,
        /// recovery map JSON file (default: trace out the extra registers)
        #[arg(long)]
        recovery: Option<PathBuf>,
    },
    /// Schmidt rank across the party cut after every step.
    Schmidt { source: Option<String> },
    /// Seeded Schmidt-rank and Fuchs-van de Graaf property suites.
    Fuzz,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum PartyArg {
    A,
    B,
}

struct Report {
    json: Value,
    table: Option<(Vec<&'static str>, Vec<Vec<String>>)>,
    failed: bool,
}

fn num(v: f64) -> String {
    Value::from(v).to_string()
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(false) => ExitCode::SUCCESS,
        Ok(true) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<bool> {
    let c = &cli.common;
    let cfg = LabConfig {
        rank_tol: c.rank_tol,
        dim_guard: c.dim_guard,
        exec: if c.sequential { Exec::Sequential } else { Exec::Parallel },
    };
    cfg.validate()?;
    let defaults = SourceDefaults { n: c.n, delta: c.delta, seed: Some(c.seed) };
    let source = |s: &Option<String>| -> anyhow::Result<Loaded> {
        let s = s.as_ref().or(c.protocol.as_ref()).ok_or_else(|| anyhow!("no protocol given (--protocol)"))?;
        load(s, &defaults, &cfg).with_context(|| format!("loading `{s}`"))
    };
    let report = match &cli.verb {
        Verb::Run { source: s, x, i } => run_verb(source(s)?, *x, *i, &cfg)?,
        Verb::Bound => {
            let n = c.n.ok_or_else(|| anyhow!("bound needs --n"))?;
            let b = lower_bound(n, c.delta.unwrap_or(0.0), c.epsilon.unwrap_or(0.0))?;
            let row = vec![
                n.to_string(),
                num(b.delta),
                num(b.epsilon),
                num(b.argument),
                num(b.value),
                b.vacuous.to_string(),
                num(b.effective_value),
            ];
            Report {
                json: serde_json::to_value(&b)?,
                table: Some((vec!["n", "delta", "epsilon", "argument", "bound", "vacuous", "effective_bound"], vec![row])),
                failed: false,
            }
        }
        Verb::Reduce { source: s } => {
            let q = source(s)?.qpir()?;
            let r = reduce(&q, &cfg)?;
            let row = vec![
                r.n.to_string(),
                num(r.c),
                num(r.m),
                num(r.delta_hat),
                num(r.epsilon_hat),
                num(r.p_hat),
                num(r.bound.value),
                num(r.bound.effective_value),
                r.verdict.as_str().to_string(),
            ];
            Report {
                failed: r.verdict.is_failure(),
                json: serde_json::to_value(&r)?,
                table: Some((
                    vec!["n", "c", "m", "delta_hat", "epsilon_hat", "p_hat", "bound", "effective_bound", "verdict"],
                    vec![row],
                )),
            }
        }
        Verb::QpirCorrectness { source: s } => {
            let q = source(s)?.qpir()?;
            let r = correctness_delta(&q, &cfg)?;
            let rows = r.per_index.iter().enumerate().map(|(k, d)| vec![(k + 1).to_string(), num(*d)]).collect();
            let mut json = serde_json::to_value(&r)?;
            json["protocol"] = json!(q.name());
            Report { json, table: Some((vec!["index", "delta"], rows)), failed: false }
        }
        Verb::QpirPrivacy { source: s, basis_inputs } => {
            let q = source(s)?.qpir()?;
            let r = privacy_epsilon_purified(&q, PrivacyOptions { basis_inputs: *basis_inputs }, &cfg)?;
            let rows = r.per_index.iter().enumerate().map(|(k, d)| vec![(k + 1).to_string(), num(*d)]).collect();
            let mut json = serde_json::to_value(&r)?;
            json["protocol"] = json!(q.name());
            Report { json, table: Some((vec!["index", "distance_to_index_1"], rows)), failed: false }
        }
        Verb::Attack { source: s } => {
            let q = source(s)?.qpir()?;
            let r = superposition_attack(&q, &cfg)?;
            let mut rows = Vec::new();
            for (a, row) in r.pairwise.iter().enumerate() {
                for (b, d) in row.iter().enumerate().skip(a + 1) {
                    rows.push(vec![(a + 1).to_string(), (b + 1).to_string(), num(*d)]);
                }
            }
            Report { json: serde_json::to_value(&r)?, table: Some((vec!["i", "j", "distance"], rows)), failed: false }
        }
        Verb::Certify { source: s, party, adversary, recovery } => {
            let spec = source(s)?.spec().clone();
            let party = match party {
                PartyArg::A => Party::A,
                PartyArg::B => Party::B,
            };
            let adv: AdversaryStrategy = match adversary {
                Some(p) => read_json(p)?,
                None => AdversaryStrategy::purified(&spec, party)?,
            };
            let maps: RecoveryMapSet = match recovery {
                Some(p) => read_json(p)?,
                None => RecoveryMapSet::trace_out(&spec, &adv)?,
            };
            let r = certify_specious(&spec, &adv, &maps, &default_inputs(&spec, &cfg)?, &cfg)?;
            let rows = r.rows.iter().map(|row| vec![row.step.to_string(), row.input_id.clone(), num(row.distance)]).collect();
            Report {
                failed: r.certified == Some(false),
                json: serde_json::to_value(&r)?,
                table: Some((vec!["step", "input_id", "distance"], rows)),
            }
        }
        Verb::Schmidt { source: s } => {
            let spec = source(s)?.spec().clone();
            let pure = purify_party(&purify_party(&spec, Party::A)?, Party::B)?;
            let mut rng = rng_from_seed(c.seed);
            let input = random_pure_state(pure.a_space(0).clone(), &mut rng)
                .tensor(&random_pure_state(pure.b_space(0).clone(), &mut rng))?;
            let profile = schmidt_rank_profile(&pure, &input, &cfg)?;
            let comm = spec.communication_complexity();
            let last = profile.last().map_or(1, |r| r.rank);
            let within = profile.iter().all(|r| r.within_bound) && (last as f64) <= comm.exp2() + 1e-9;
            let rows = profile
                .iter()
                .map(|r| vec![r.step.to_string(), r.rank.to_string(), r.message_dim.to_string(), r.bound.to_string()])
                .collect();
            Report {
                json: json!({
                    "communication": comm,
                    "final_rank": last,
                    "rank_bound": comm.exp2(),
                    "within_bound": within,
                    "steps": profile,
                }),
                table: Some((vec!["step", "rank", "message_dim", "bound"], rows)),
                failed: !within,
            }
        }
        Verb::Fuzz => {
            let trials = c.trials.unwrap_or(200);
            let s = schmidt_suite(trials, c.seed, &cfg)?;
            let f = fvdg_suite(trials, c.seed, &cfg)?;
            let failed = s.violations + f.violations > 0;
            let rows = vec![
                vec![s.name.to_string(), s.trials.to_string(), s.violations.to_string()],
                vec![f.name.to_string(), f.trials.to_string(), f.violations.to_string()],
            ];
            Report {
                json: json!({ "seed": c.seed, "trials": trials, "suites": [s, f] }),
                table: Some((vec!["suite", "trials", "violations"], rows)),
                failed,
            }
        }
    };
    emit(&report, c)?;
    Ok(report.failed)
}

fn run_verb(loaded: Loaded, x: u64, i: usize, cfg: &LabConfig) -> anyhow::Result<Report> {
    let (name, input) = match &loaded {
        Loaded::Qpir(q) => (q.name().to_string(), q.input(x, i)?),
        Loaded::Protocol(_) => ("protocol".to_string(), StateVector::basis(loaded.spec().input_layout(), 0)?),
    };
    let spec = loaded.spec();
    let t = execute(spec, &(&input).into(), cfg)?;
    let mut steps = Vec::new();
    let mut rows = Vec::new();
    for k in 0..=t.steps() {
        let st = t.state(k);
        steps.push(json!({
            "step": k,
            "layout": st.layout().to_string(),
            "dim": st.dim(),
            "trace": st.trace(),
            "purity": st.purity(),
        }));
        rows.push(vec![k.to_string(), st.layout().to_string(), st.dim().to_string(), num(st.purity())]);
    }
    Ok(Report {
        json: json!({
            "protocol": name,
            "rounds": spec.rounds(),
            "communication": spec.communication_complexity(),
            "steps": steps,
        }),
        table: Some((vec!["step", "layout", "dim", "purity"], rows)),
        failed: false,
    })
}

fn read_json<T: serde::de::DeserializeOwned>(path: &PathBuf) -> anyhow::Result<T> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn emit(report: &Report, c: &Common) -> anyhow::Result<()> {
    let text = match c.format {
        Format::Json => serde_json::to_string_pretty(&report.json)? + "\n",
        Format::Csv => {
            let Some((header, rows)) = &report.table else { bail!("no CSV form for this report") };
            let mut out = header.join(",") + "\n";
            for r in rows {
                out += &r.iter().map(|f| csv_field(f)).collect::<Vec<_>>().join(",");
                out.push('\n');
            }
            out
        }
        Format::Text => {
            let mut out = String::new();
            if let Value::Object(map) = &report.json {
                for (k, v) in map {
                    match v {
                        Value::Array(_) | Value::Object(_) => {}
                        Value::String(s) => out += &format!("{k}: {s}\n"),
                        other => out += &format!("{k}: {other}\n"),
                    }
                }
            }
            if let Some((header, rows)) = &report.table {
                out += &header.join("\t");
                out.push('\n');
                for r in rows {
                    out += &r.join("\t");
                    out.push('\n');
                }
            }
            out
        }
    };
    match &c.out {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display()))?,
        None => print!("{text}"),
    }
    Ok(())
}
