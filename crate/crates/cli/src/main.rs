use std::fmt::Display;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use deleg_core::delegation::Decider;
use deleg_core::label::uncompromised_traced;
use deleg_core::oracle::{
    acts_for_counterexample, oracle_flows_to, oracle_uncompromised, uncompromised_counterexample,
};
use deleg_core::solver::{parse_label, simplify, solve_traced, translate, LabelConstraint, LabelSystem};
use deleg_core::surface::check_source;
use deleg_core::syntax::parse_principal;
use deleg_core::{DelegationContext, LabelContext, NormalForm};
use serde_json::json;

/// `println!` that ignores a closed stdout, as when piped into `head`.
macro_rules! outln {
    ($($arg:tt)*) => {{
        use std::io::Write as _;
        let _ = writeln!(std::io::stdout().lock(), $($arg)*);
    }};
}

/// Acts-for, flows-to and NMIF checks under delegation, and label inference.
#[derive(Parser)]
#[command(name = "deleg", version)]
struct Cli {
    /// Cross-check every judgment against attacker enumeration.
    #[arg(long, global = true)]
    oracle: bool,
    /// Print the rules applied.
    #[arg(long, global = true)]
    trace: bool,
    /// Machine-readable output.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Decide `P >= Q` under a delegation context.
    Actsfor {
        #[arg(long)]
        ctx: Option<PathBuf>,
        p: String,
        q: String,
    },
    /// Minimal representative of a principal.
    Min {
        #[arg(long)]
        ctx: Option<PathBuf>,
        p: String,
    },
    /// Decide `L1 ⊑ L2`.
    Flowsto {
        #[arg(long)]
        cctx: Option<PathBuf>,
        #[arg(long)]
        ictx: Option<PathBuf>,
        l1: String,
        l2: String,
    },
    /// Decide whether a label is uncompromised.
    Nmif {
        #[arg(long)]
        cctx: Option<PathBuf>,
        #[arg(long)]
        ictx: Option<PathBuf>,
        label: String,
    },
    /// Solve a label constraint file.
    Solve { file: PathBuf },
    /// Check a program.
    Check { file: PathBuf },
}

enum Failure {
    Usage(String),
    Disagreement(String),
}

impl<E: Display> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure::Usage(e.to_string())
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn context(path: &Option<PathBuf>) -> Result<DelegationContext, Failure> {
    match path {
        None => Ok(DelegationContext::new()),
        Some(p) => DelegationContext::parse(&read(p)?).map_err(|e| Failure::Usage(format!("{}:{e}", p.display()))),
    }
}

fn principal(text: &str) -> Result<NormalForm, Failure> {
    Ok(parse_principal(text).map_err(|e| format!("in `{text}`: {e}"))?.normalize())
}

struct Output {
    json: bool,
    lines: Vec<String>,
}

impl Output {
    fn emit(self, trace: Vec<String>, value: serde_json::Value) {
        if self.json {
            let mut value = value;
            if !trace.is_empty() {
                value["trace"] = json!(trace);
            }
            outln!("{}", serde_json::to_string_pretty(&value).expect("serializable"));
        } else {
            for t in trace {
                outln!("  {t}");
            }
            for l in self.lines {
                outln!("{l}");
            }
        }
    }
}

fn verdict(b: bool) -> u8 {
    if b {
        0
    } else {
        1
    }
}

fn run(cli: &Cli) -> Result<u8, Failure> {
    let out = |lines: Vec<String>| Output { json: cli.json, lines };
    match &cli.command {
        Command::Actsfor { ctx, p, q } => {
            let ctx = context(ctx)?;
            let (p, q) = (principal(p)?, principal(q)?);
            let mut d = Decider::new(&ctx);
            if cli.trace {
                d = d.traced();
            }
            let holds = d.acts_for(&p, &q);
            let trace = d.take_trace();
            let mut lines = vec![holds.to_string()];
            let mut witness = None;
            if cli.oracle {
                let cex = acts_for_counterexample(&ctx, &p, &q)?;
                if cex.is_none() != holds {
                    return Err(Failure::Disagreement(format!("oracle says {} for {p} >= {q}", cex.is_none())));
                }
                if let Some(a) = cex {
                    lines.push(format!("witness: {a}"));
                    witness = Some(a.to_string());
                }
            }
            out(lines).emit(trace, json!({ "holds": holds, "witness": witness }));
            Ok(verdict(holds))
        }
        Command::Min { ctx, p } => {
            let ctx = context(ctx)?;
            let p = principal(p)?;
            let mut d = Decider::new(&ctx);
            if cli.trace {
                d = d.traced();
            }
            let m = d.min_rep(&p);
            let trace = d.take_trace();
            if cli.oracle {
                let equivalent = acts_for_counterexample(&ctx, &m, &p)?.is_none()
                    && acts_for_counterexample(&ctx, &p, &m)?.is_none();
                if !equivalent {
                    return Err(Failure::Disagreement(format!("oracle says {m} is not equivalent to {p}")));
                }
            }
            out(vec![m.to_string()]).emit(trace, json!({ "min": m.to_string() }));
            Ok(0)
        }
        Command::Flowsto { cctx, ictx, l1, l2 } => {
            let ctx = LabelContext::new(context(cctx)?, context(ictx)?);
            let a = parse_label(l1).map_err(|e| format!("in `{l1}`: {e}"))?;
            let b = parse_label(l2).map_err(|e| format!("in `{l2}`: {e}"))?;
            let mut trace = Vec::new();
            let holds = if cli.trace {
                let mut dc = Decider::new(&ctx.conf).traced();
                let mut di = Decider::new(&ctx.integ).traced();
                let c = dc.acts_for(&b.conf, &a.conf);
                trace.extend(dc.take_trace().into_iter().map(|t| format!("C: {t}")));
                let i = c && di.acts_for(&a.integ, &b.integ);
                trace.extend(di.take_trace().into_iter().map(|t| format!("I: {t}")));
                c && i
            } else {
                ctx.flows_to(&a, &b)
            };
            if cli.oracle && oracle_flows_to(&ctx, &a, &b)? != holds {
                return Err(Failure::Disagreement(format!("oracle says {} for {a} ⊑ {b}", !holds)));
            }
            out(vec![holds.to_string()]).emit(trace, json!({ "holds": holds }));
            Ok(verdict(holds))
        }
        Command::Nmif { cctx, ictx, label } => {
            let ctx = LabelContext::new(context(cctx)?, context(ictx)?);
            let l = parse_label(label).map_err(|e| format!("in `{label}`: {e}"))?;
            let (unc, trace) = uncompromised_traced(&ctx, &l);
            let trace = if cli.trace { trace } else { Vec::new() };
            let mut lines = vec![unc.to_string()];
            let mut witness = None;
            if cli.oracle {
                let cex = uncompromised_counterexample(&ctx, &l)?;
                if cex.is_none() != unc {
                    return Err(Failure::Disagreement(format!("oracle says {} for unc({l})", cex.is_none())));
                }
                if let Some(a) = cex {
                    lines.push(format!("witness: {a}"));
                    witness = Some(a.to_string());
                }
            }
            out(lines).emit(trace, json!({ "uncompromised": unc, "witness": witness }));
            Ok(verdict(unc))
        }
        Command::Solve { file } => {
            let sys = LabelSystem::parse(&read(file)?).map_err(|e| format!("{}:{e}", file.display()))?;
            let simplified = simplify(&translate(&sys));
            let mut trace = cli.trace.then(Vec::new);
            let result = simplified.and_then(|s| solve_traced(&s, &mut trace));
            let trace = trace.unwrap_or_default();
            match result {
                Ok(sol) => {
                    if cli.oracle {
                        let lookup = sol.lookup();
                        for (c, origin) in sys.constraints.iter().zip(&sys.origins) {
                            let ok = match c {
                                LabelConstraint::FlowsTo(a, b) => {
                                    oracle_flows_to(&sys.contexts, &a.eval(&lookup)?, &b.eval(&lookup)?)?
                                }
                                LabelConstraint::Uncompromised(e) => {
                                    oracle_uncompromised(&sys.contexts, &e.eval(&lookup)?)?
                                }
                            };
                            if !ok {
                                return Err(Failure::Disagreement(format!(
                                    "oracle rejects {c} ({origin}) at the solution"
                                )));
                            }
                        }
                    }
                    let labels = sol.canonical_labels();
                    let width = labels.keys().map(|k| k.len()).max().unwrap_or(0);
                    let lines = labels.iter().map(|(x, l)| format!("{x:width$} : {l}")).collect();
                    let table: serde_json::Map<String, serde_json::Value> =
                        labels.iter().map(|(x, l)| (x.to_string(), json!(l.to_string()))).collect();
                    out(lines).emit(trace, json!({ "satisfiable": true, "labels": table }));
                    Ok(0)
                }
                Err(e) => {
                    let origin = e.origin().and_then(|i| sys.origins.get(i)).cloned();
                    let at = origin.as_ref().map(|o| format!(" ({o})")).unwrap_or_default();
                    out(vec![format!("{e}{at}")])
                        .emit(trace, json!({ "satisfiable": false, "error": e.to_string(), "origin": origin }));
                    Ok(1)
                }
            }
        }
        Command::Check { file } => {
            if cli.oracle || cli.trace {
                return Err(Failure::Usage("`check` supports only --json".into()));
            }
            let report = check_source(&read(file)?).map_err(|e| format!("{}:{e}", file.display()))?;
            if cli.json {
                outln!("{}", serde_json::to_string_pretty(&report).expect("serializable"));
            } else {
                outln!("{}", report.to_string().trim_end());
            }
            Ok(verdict(report.accepted))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Disagreement(msg)) => {
            eprintln!("oracle disagreement: {msg}");
            ExitCode::from(3)
        }
    }
}
