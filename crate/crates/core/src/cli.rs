//! Command-line front end. `run` is pure apart from reading input files, so tests
//! can drive it directly.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use crate::catalog::{self, classify, eval_w, eval_ww, parse_algebra, Evaluation, Verdict};
use crate::monoid_kernel::{
    check_wm_axioms, check_wo_axioms, extnat_fragment, extnat_sup, extnat_sup_finite_only, AxiomReport,
    ClosurePolicy, ExtNat, ExtNatFullOrder, ExtNatWayBelow, Q,
};
use crate::multiplicity::{mf_leq, MultiplicityFunction, SpaceModel};
use crate::order_zero_lab::{
    oz_check_order_zero, oz_check_order_zero_exact, oz_construct_witness, oz_cuntz_leq_commutative, oz_eps_cut,
    oz_rank_certificate, OrderZeroMap,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 1;
pub const EXIT_UNKNOWN: i32 = 2;
pub const EXIT_UNDECIDED: i32 = 3;
pub const EXIT_NEGATIVE: i32 = 4;

const MAX_AXIOM_BOUND: u64 = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Text,
}

#[derive(Debug, Parser)]
#[command(name = "cuntz", version, about = "Cuntz semigroups, multiplicity functions and order zero maps")]
pub struct CliConfig {
    #[command(subcommand)]
    pub command: Command,
    /// Numerical tolerance for witness residuals.
    #[arg(long, global = true, default_value_t = 1e-6, value_parser = positive_f64)]
    pub tol: f64,
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    pub format: Format,
}

fn positive_f64(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(x) if x > 0.0 && x.is_finite() => Ok(x),
        _ => Err(format!("expected a positive number, got {s:?}")),
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate W(A,B) or WW(A,B).
    Eval {
        #[arg(long, conflicts_with = "ww")]
        w: bool,
        #[arg(long)]
        ww: bool,
        a: String,
        b: String,
    },
    /// Compare two multiplicity functions.
    Compare {
        #[arg(long)]
        space: Option<PathBuf>,
        nu: PathBuf,
        mu: PathBuf,
    },
    /// Decide isomorphism of two catalog algebras.
    Classify { a: String, b: String },
    /// Order zero map laboratory.
    Oz {
        #[command(subcommand)]
        sub: OzCommand,
    },
    /// Check the W-category axioms on a finite fragment.
    Axioms(AxiomsArgs),
}

#[derive(Debug, Subcommand)]
pub enum OzCommand {
    /// Randomized (and, for diagonal maps, exact) order-zero check.
    Check {
        phi: PathBuf,
        #[arg(long, default_value_t = 100)]
        trials: usize,
    },
    /// The ε-cut φ_ε as a map document.
    Eps {
        phi: PathBuf,
        #[arg(long)]
        eps: String,
    },
    /// Decide φ ≲ ψ and build a witness when it holds.
    Compare { phi: PathBuf, psi: PathBuf },
    /// Build and verify a witness for φ ≲ ψ.
    Witness { phi: PathBuf, psi: PathBuf },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Carrier {
    Extnat,
}

#[derive(Debug, Args)]
pub struct AxiomsArgs {
    pub carrier: Carrier,
    #[arg(long, default_value_t = 20)]
    pub bound: u64,
    #[arg(long, hide = true)]
    pub inject_fault: bool,
}

/// Exit code and the two output streams.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

impl Outcome {
    fn ok(code: i32, stdout: String) -> Outcome {
        Outcome {
            code,
            stdout,
            stderr: String::new(),
        }
    }

    fn input_error(msg: impl Into<String>) -> Outcome {
        Outcome {
            code: EXIT_INPUT,
            stdout: String::new(),
            stderr: format!("error: {}\n", msg.into()),
        }
    }
}

pub fn run<I, T>(args: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cfg = match CliConfig::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let text = e.render().to_string();
            return if e.use_stderr() {
                Outcome {
                    code,
                    stdout: String::new(),
                    stderr: text,
                }
            } else {
                Outcome::ok(code, text)
            };
        }
    };
    dispatch(&cfg).unwrap_or_else(Outcome::input_error)
}

fn emit(cfg: &CliConfig, code: i32, doc: Value, text: String) -> Result<Outcome, String> {
    let out = match cfg.format {
        Format::Json => serde_json::to_string_pretty(&doc).map_err(|e| e.to_string())? + "\n",
        Format::Text => text,
    };
    Ok(Outcome::ok(code, out))
}

fn read_json(path: &Path) -> Result<Value, String> {
    let s = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    serde_json::from_str(&s).map_err(|e| format!("{}: {e}", path.display()))
}

fn parse_expr(s: &str) -> Result<catalog::AlgebraExpr, String> {
    parse_algebra(s).map_err(|e| format!("{s:?}: {e}"))
}

fn dispatch(cfg: &CliConfig) -> Result<Outcome, String> {
    match &cfg.command {
        Command::Eval { ww, a, b, .. } => {
            let (ea, eb) = (parse_expr(a)?, parse_expr(b)?);
            let ev = if *ww { eval_ww(&ea, &eb) } else { eval_w(&ea, &eb) };
            let code = if ev.value.is_unknown() { EXIT_UNKNOWN } else { EXIT_OK };
            emit(cfg, code, ev.to_json(), eval_text(&ev))
        }
        Command::Compare { space, nu, mu } => {
            let space = match space {
                Some(p) => Some(SpaceModel::from_json(&read_json(p)?).map_err(|e| e.to_string())?),
                None => None,
            };
            let nu = MultiplicityFunction::from_json(&read_json(nu)?, space.as_ref()).map_err(|e| e.to_string())?;
            let mu = MultiplicityFunction::from_json(&read_json(mu)?, space.as_ref()).map_err(|e| e.to_string())?;
            let le = mf_leq(&nu, &mu).map_err(|e| e.to_string())?;
            let ge = mf_leq(&mu, &nu).map_err(|e| e.to_string())?;
            let verdict = match (le, ge) {
                (true, true) => "equal",
                (true, false) => "leq",
                (false, true) => "geq",
                (false, false) => "incomparable",
            };
            emit(
                cfg,
                EXIT_OK,
                json!({"schema": crate::SCHEMA, "verdict": verdict}),
                format!("{verdict}\n"),
            )
        }
        Command::Classify { a, b } => {
            let c = classify(&parse_expr(a)?, &parse_expr(b)?);
            let code = if c.verdict == Verdict::Undecided { EXIT_UNDECIDED } else { EXIT_OK };
            let doc = json!({
                "schema": crate::SCHEMA,
                "verdict": c.verdict.to_string(),
                "certificate": c.certificate,
                "data": c.data,
            });
            emit(cfg, code, doc, format!("{}\n{}\n", c.verdict, c.certificate))
        }
        Command::Oz { sub } => oz(cfg, sub),
        Command::Axioms(args) => axioms(cfg, args),
    }
}

fn eval_text(ev: &Evaluation) -> String {
    let mut s = format!("{}\n", ev.value);
    for (i, step) in ev.trace.iter().enumerate() {
        s += &format!(
            "  {:>2}. [{}] {}  ⟶  {}    ({})\n",
            i + 1,
            step.rule,
            step.before,
            step.after,
            step.anchor
        );
    }
    s
}

fn load_map(path: &Path) -> Result<OrderZeroMap, String> {
    OrderZeroMap::from_json(&read_json(path)?).map_err(|e| format!("{}: {e}", path.display()))
}

fn oz(cfg: &CliConfig, sub: &OzCommand) -> Result<Outcome, String> {
    match sub {
        OzCommand::Check { phi, trials } => {
            let phi = load_map(phi)?;
            let r = oz_check_order_zero(&phi, *trials, cfg.seed);
            let exact = if phi.is_diagonal() {
                Some(oz_check_order_zero_exact(&phi).map_err(|e| e.to_string())?)
            } else {
                None
            };
            let pass = r.pass && exact.unwrap_or(true);
            let doc = json!({
                "schema": crate::SCHEMA,
                "pass": pass,
                "trials": r.trials,
                "seed": cfg.seed,
                "worst": r.worst,
                "exact": exact,
            });
            let text = format!(
                "order zero: {} ({} trials, worst {:.3e}{})\n",
                if pass { "pass" } else { "FAIL" },
                r.trials,
                r.worst,
                match exact {
                    Some(true) => ", exact check pass",
                    Some(false) => ", exact check FAIL",
                    None => "",
                }
            );
            emit(cfg, if pass { EXIT_OK } else { EXIT_NEGATIVE }, doc, text)
        }
        OzCommand::Eps { phi, eps } => {
            let phi = load_map(phi)?;
            let e: Q = eps.trim().parse().map_err(|_| format!("bad rational {eps:?}"))?;
            let cut = oz_eps_cut(&phi, e).map_err(|e| e.to_string())?;
            let doc = cut.to_json();
            let text = serde_json::to_string_pretty(&doc).map_err(|e| e.to_string())? + "\n";
            emit(cfg, EXIT_OK, doc, text)
        }
        OzCommand::Compare { phi, psi } | OzCommand::Witness { phi, psi } => {
            let (phi, psi) = (load_map(phi)?, load_map(psi)?);
            let leq = oz_cuntz_leq_commutative(&phi, &psi).map_err(|e| e.to_string())?;
            if !leq {
                let c = oz_rank_certificate(&phi, &psi)
                    .map_err(|e| e.to_string())?
                    .expect("a failed comparison has a rank certificate");
                let doc = json!({
                    "schema": crate::SCHEMA,
                    "verdict": "not_leq",
                    "certificate": {"point": c.point, "rank_phi": c.rank_phi, "rank_psi": c.rank_psi},
                });
                let text = format!(
                    "not_leq\nrank at point {}: {} > {}\n",
                    c.point, c.rank_phi, c.rank_psi
                );
                return emit(cfg, EXIT_NEGATIVE, doc, text);
            }
            let w = oz_construct_witness(&phi, &psi, cfg.tol).map_err(|e| e.to_string())?;
            let mut doc = json!({
                "schema": crate::SCHEMA,
                "verdict": "leq",
                "residual": w.residual,
                "tolerance": w.tolerance,
                "pass": w.pass,
            });
            let mut text = format!("leq\nwitness residual {:.3e} (tolerance {:e})\n", w.residual, w.tolerance);
            if matches!(sub, OzCommand::Witness { .. }) {
                let rows: Vec<Value> = w
                    .witness
                    .row_iter()
                    .map(|r| Value::Array(r.iter().map(|x| json!(x)).collect()))
                    .collect();
                doc["witness"] = Value::Array(rows);
                text += &format!("{:.6}", w.witness);
            }
            emit(cfg, if w.pass { EXIT_OK } else { EXIT_NEGATIVE }, doc, text)
        }
    }
}

fn report_json(r: &AxiomReport<ExtNat>) -> Value {
    Value::Array(
        r.results
            .iter()
            .map(|x| {
                json!({
                    "axiom": x.axiom,
                    "pass": x.pass,
                    "checked": x.checked,
                    "skipped": x.skipped,
                    "witness": x.witness.as_ref().map(|w| w.iter().map(|e| e.to_string()).collect::<Vec<_>>()),
                    "note": x.note,
                })
            })
            .collect(),
    )
}

fn axioms(cfg: &CliConfig, args: &AxiomsArgs) -> Result<Outcome, String> {
    if args.bound > MAX_AXIOM_BOUND {
        return Err(format!("bound {} exceeds {MAX_AXIOM_BOUND}", args.bound));
    }
    let frag = extnat_fragment(args.bound);
    let wo = if args.inject_fault {
        check_wo_axioms(&ExtNatFullOrder, &frag, extnat_sup_finite_only, ClosurePolicy::InScope)
    } else {
        check_wo_axioms(&ExtNatWayBelow, &frag, extnat_sup, ClosurePolicy::InScope)
    }
    .map_err(|e| e.to_string())?;
    let mut doc = json!({
        "schema": crate::SCHEMA,
        "carrier": "extnat",
        "bound": args.bound,
        "fault_injected": args.inject_fault,
        "wo": report_json(&wo),
    });
    let mut text = format!("ExtNat fragment {{0..{}, ∞}}\n{wo}", args.bound);
    let mut pass = wo.all_pass();
    let mut morphisms = Vec::new();
    for k in 0..=5u64 {
        let target = extnat_fragment(args.bound * k.max(1));
        let wm = if args.inject_fault && k == 5 {
            check_wm_axioms(&ExtNatWayBelow, |_| ExtNat::Inf, &frag, &target, extnat_sup)
        } else {
            check_wm_axioms(&ExtNatWayBelow, |x| ExtNat::Fin(k) * *x, &frag, &target, extnat_sup)
        }
        .map_err(|e| e.to_string())?;
        pass &= wm.all_pass();
        let name = if args.inject_fault && k == 5 { "const ∞".to_string() } else { format!("×{k}") };
        text += &format!("morphism {name}\n{wm}");
        morphisms.push(json!({"map": name, "results": report_json(&wm)}));
    }
    doc["wm"] = Value::Array(morphisms);
    doc["all_pass"] = json!(pass);
    emit(cfg, EXIT_OK, doc, text)
}
