//! `gustrata` — displays, slopes, graphs and stratum verification from the shell.
//!
//! Exit status: 0 ok, 1 the mathematics disagreed (verification or checks
//! failed), 2 usage error, 3 precision failure.

use std::io::Write;
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use gustrata::displayzoo::DeformationForm;
use gustrata::fcrystal::{
    a_number, frobenius_stable_rank, newton_slopes, p_rank, polarization_check, signature, validate_display,
    DieudonneDisplay, NewtonPolygon,
};
use gustrata::modexpr::ModuleExpr;
use gustrata::slopegraph::{build_graph, cycles_through, karp_min_cycle_mean, min_cycle_slope, to_dot};
use gustrata::strata::{
    self, calibration_table, catalog, classify, default_budget, default_precision, tool_info, Mode, VerifyConfig,
    CALIBRATION_HEADER,
};
use gustrata::wittring::RingContext;
use gustrata::Error;
use serde::Serialize;
use serde_json::{json, Value};

#[derive(Parser, Debug)]
#[command(name = "gustrata", version, about = "Newton strata of unitary Dieudonné displays")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct Ring {
    /// Residue characteristic.
    #[arg(long, default_value_t = 2)]
    p: u64,
    /// Degree of the residue field over F_p.
    #[arg(long, default_value_t = 1)]
    d: usize,
    /// p-adic working precision N (default 4·n·d + 8).
    #[arg(long)]
    precision: Option<u32>,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Format {
    Json,
    Tsv,
    Dot,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum FormArg {
    Polarized,
    Literal,
}

impl From<FormArg> for DeformationForm {
    fn from(f: FormArg) -> Self {
        match f {
            FormArg::Polarized => DeformationForm::Polarized,
            FormArg::Literal => DeformationForm::Literal,
        }
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Admissible Newton polygons for GU(1, n−1).
    Catalog {
        #[arg(long)]
        n: u32,
        #[command(flatten)]
        ring: Ring,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
    },
    /// Newton polygon, a-number, p-rank and signature of a module.
    Slopes {
        #[command(flatten)]
        module: ModuleArgs,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
    },
    /// The slope graph of a module.
    Graph {
        #[command(flatten)]
        module: ModuleArgs,
        /// Graphviz output (same as `--format dot`).
        #[arg(long)]
        dot: bool,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
    },
    /// Structural validation and polarization check of a module.
    Check {
        #[command(flatten)]
        module: ModuleArgs,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
    },
    /// Compare computed strata with the predicted ones over deformation points.
    Verify {
        #[arg(long)]
        n: u32,
        #[command(flatten)]
        ring: Ring,
        #[arg(long, conflicts_with = "random")]
        exhaustive: bool,
        /// Number of random points.
        #[arg(long, value_name = "K")]
        random: Option<u64>,
        #[arg(long, default_value_t = 0, requires = "random")]
        seed: u64,
        #[arg(long, value_enum, default_value = "polarized")]
        form: FormArg,
        /// Maximum number of points (default from GUSTRATA_BUDGET, else 200000).
        #[arg(long)]
        budget: Option<u128>,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
    },
    /// Observed versus predicted strata for each even-n support pattern.
    Calibrate,
}

#[derive(Args, Debug, Clone)]
struct ModuleArgs {
    /// Module expression, e.g. "M(4)+N^2", "ss(5)", "def(5; s2=1,s4=2)".
    #[arg(long)]
    module: String,
    #[command(flatten)]
    ring: Ring,
    /// Which deformation display `def(…)` builds.
    #[arg(long, value_enum, default_value = "polarized")]
    form: FormArg,
}

/// Resolved configuration, embedded in every output.
#[derive(Serialize, Debug)]
struct RunConfig {
    subcommand: &'static str,
    p: u64,
    d: usize,
    n: Option<u32>,
    precision: u32,
    module: Option<String>,
    form: Option<DeformationForm>,
    format: Format,
    mode: Option<Mode>,
    budget: Option<u128>,
}

enum Failure {
    Usage(String),
    Precision(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_precision() {
            Failure::Precision(e.to_string())
        } else {
            Failure::Usage(e.to_string())
        }
    }
}

struct Output {
    text: String,
    ok: bool,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli.command) {
        Ok(out) => {
            let mut stdout = std::io::stdout().lock();
            let _ = stdout.write_all(out.text.as_bytes());
            ExitCode::from(if out.ok { 0 } else { 1 })
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Precision(msg)) => {
            eprintln!("precision failure: {msg}");
            ExitCode::from(3)
        }
    }
}

fn context(p: u64, d: usize, precision: u32) -> Result<Arc<RingContext>, Failure> {
    Ok(Arc::new(RingContext::new(p, d, precision)?))
}

fn header(config: &RunConfig, ctx: &RingContext) -> serde_json::Map<String, Value> {
    let mut m = serde_json::Map::new();
    m.insert("tool".into(), json!(tool_info()));
    m.insert("config".into(), json!(config));
    m.insert("context".into(), json!(ctx.to_json()));
    m
}

fn json_doc(mut head: serde_json::Map<String, Value>, body: Value) -> String {
    if let Value::Object(fields) = body {
        head.extend(fields);
    }
    let mut s = serde_json::to_string_pretty(&Value::Object(head)).expect("json values serialize");
    s.push('\n');
    s
}

/// `key\tvalue` rows, led by the provenance rows.
fn tsv_doc(config: &RunConfig, ctx: &RingContext, rows: Vec<(String, String)>) -> String {
    let mut out = String::from("key\tvalue\n");
    let mut push = |k: &str, v: String| {
        out.push_str(&format!("{k}\t{v}\n"));
    };
    push("subcommand", config.subcommand.into());
    push("p", ctx.p().to_string());
    push("d", ctx.degree().to_string());
    push("N", ctx.precision().to_string());
    push("modulus", format!("{:?}", ctx.modulus_poly()));
    push("version", tool_info().version.into());
    for (k, v) in rows {
        push(&k, v);
    }
    out
}

fn module_setup(
    args: &ModuleArgs,
    subcommand: &'static str,
    format: Format,
) -> Result<(RunConfig, DieudonneDisplay), Failure> {
    let expr: ModuleExpr = args.module.parse()?;
    let half = expr.half_rank();
    let precision = args.ring.precision.unwrap_or(default_precision(half, args.ring.d));
    let ctx = context(args.ring.p, args.ring.d, precision)?;
    let form = DeformationForm::from(args.form);
    let display = expr.build(&ctx, form)?;
    let config = RunConfig {
        subcommand,
        p: args.ring.p,
        d: args.ring.d,
        n: Some(half),
        precision,
        module: Some(expr.to_string()),
        form: Some(form),
        format,
        mode: None,
        budget: None,
    };
    Ok((config, display))
}

fn polygon_summary(polygon: &NewtonPolygon) -> Value {
    json!({
        "polygon": polygon.to_json(),
        "polygon_text": polygon.to_string(),
        "min_slope": polygon.min_slope().map(|s| s.to_string()),
    })
}

fn run(command: Command) -> Result<Output, Failure> {
    match command {
        Command::Catalog { n, ring, format } => {
            let precision = ring.precision.unwrap_or(default_precision(n, ring.d));
            let ctx = context(ring.p, ring.d, precision)?;
            let entries = catalog(n)?;
            let config = RunConfig {
                subcommand: "catalog",
                p: ring.p,
                d: ring.d,
                n: Some(n),
                precision,
                module: None,
                form: None,
                format,
                mode: None,
                budget: None,
            };
            let text = match format {
                Format::Json => json_doc(
                    header(&config, &ctx),
                    json!({ "strata": entries.iter().map(|e| e.to_json()).collect::<Vec<_>>() }),
                ),
                Format::Tsv => {
                    let mut out = tsv_doc(&config, &ctx, vec![("strata".into(), entries.len().to_string())]);
                    out.push_str("\nlabel\tj\tlambda_min\tpolygon\tcodim\tm\tr\n");
                    for e in &entries {
                        out.push_str(&format!(
                            "{}\t{}\t{}\t{}\t{}\t{}\t{}\n",
                            e.label,
                            e.j.map_or("-".into(), |j| j.to_string()),
                            e.lambda_min,
                            e.polygon,
                            e.codim,
                            e.decomposition.0,
                            e.decomposition.1
                        ));
                    }
                    out
                }
                Format::Dot => return Err(Failure::Usage("catalog has no DOT output".into())),
            };
            Ok(Output { text, ok: true })
        }

        Command::Slopes { module, format } => {
            let (config, display) = module_setup(&module, "slopes", format)?;
            let ctx = display.context().clone();
            let polygon = newton_slopes(&display)?;
            let a = a_number(&display)?;
            let prank = p_rank(&display)?;
            let stable = frobenius_stable_rank(&display);
            let sig = signature(&display)?;
            let stratum = match config.n {
                Some(n) if n >= 3 => Some(classify(n, &polygon)?.to_string()),
                _ => None,
            };
            let text = match format {
                Format::Json => {
                    let mut body = polygon_summary(&polygon);
                    let fields = body.as_object_mut().expect("object");
                    fields.insert("a_number".into(), json!(a));
                    fields.insert("p_rank".into(), json!(prank));
                    fields.insert("frobenius_stable_rank".into(), json!(stable));
                    fields.insert("signature".into(), json!([sig.0, sig.1]));
                    fields.insert("stratum".into(), json!(stratum));
                    json_doc(header(&config, &ctx), body)
                }
                Format::Tsv => tsv_doc(
                    &config,
                    &ctx,
                    vec![
                        ("module".into(), config.module.clone().unwrap_or_default()),
                        ("polygon".into(), polygon.to_string()),
                        (
                            "min_slope".into(),
                            polygon.min_slope().map_or("-".into(), |s| s.to_string()),
                        ),
                        ("a_number".into(), a.to_string()),
                        ("p_rank".into(), prank.to_string()),
                        ("frobenius_stable_rank".into(), stable.to_string()),
                        ("signature".into(), format!("({},{})", sig.0, sig.1)),
                        ("stratum".into(), stratum.unwrap_or_else(|| "-".into())),
                    ],
                ),
                Format::Dot => return Err(Failure::Usage("slopes has no DOT output".into())),
            };
            Ok(Output { text, ok: true })
        }

        Command::Graph { module, dot, format } => {
            let format = if dot { Format::Dot } else { format };
            let (config, display) = module_setup(&module, "graph", format)?;
            let ctx = display.context().clone();
            let g = build_graph(&display);
            let text = match format {
                Format::Dot => {
                    let m = ctx.to_json();
                    format!(
                        "// {} {} module={} p={} d={} N={} modulus={:?}\n{}",
                        tool_info().name,
                        tool_info().version,
                        config.module.as_deref().unwrap_or(""),
                        m.p,
                        m.d,
                        m.precision,
                        m.modulus,
                        to_dot(&g)
                    )
                }
                Format::Json | Format::Tsv => {
                    let start = gustrata::fcrystal::BasisLabel::u(1);
                    let cycles = if g.position(&start).is_some() {
                        cycles_through(&g, &start)?
                    } else {
                        vec![]
                    };
                    let min = min_cycle_slope(&g, &start).ok().map(|s| s.to_string());
                    let karp = karp_min_cycle_mean(&g).map(|s| s.to_string());
                    if format == Format::Tsv {
                        tsv_doc(
                            &config,
                            &ctx,
                            vec![
                                ("vertices".into(), g.vertices().len().to_string()),
                                ("edges".into(), g.edges().len().to_string()),
                                ("cycles_through_u1".into(), cycles.len().to_string()),
                                ("min_cycle_slope_u1".into(), min.unwrap_or_else(|| "-".into())),
                                ("karp_min_cycle_mean".into(), karp.unwrap_or_else(|| "-".into())),
                            ],
                        )
                    } else {
                        let vertices: Vec<String> = g.vertices().iter().map(ToString::to_string).collect();
                        let edges: Vec<Value> = g
                            .edges()
                            .iter()
                            .map(|e| json!({ "from": vertices[e.from], "to": vertices[e.to], "weight": e.weight }))
                            .collect();
                        json_doc(
                            header(&config, &ctx),
                            json!({
                                "vertices": vertices,
                                "edges": edges,
                                "cycles_through_u1": cycles.iter().map(|c| c.to_json()).collect::<Vec<_>>(),
                                "min_cycle_slope_u1": min,
                                "karp_min_cycle_mean": karp,
                            }),
                        )
                    }
                }
            };
            Ok(Output { text, ok: true })
        }

        Command::Check { module, format } => {
            let (config, display) = module_setup(&module, "check", format)?;
            let ctx = display.context().clone();
            let report = validate_display(&display)?;
            let violations = polarization_check(&display)?;
            let ok = report.passed() && violations.is_empty();
            let text = match format {
                Format::Json => json_doc(
                    header(&config, &ctx),
                    json!({
                        "passed": ok,
                        "validation": report,
                        "polarization_violations":
                            violations.iter().map(|v| v.to_json(&ctx)).collect::<Vec<_>>(),
                    }),
                ),
                Format::Tsv => {
                    let mut rows: Vec<(String, String)> = vec![("passed".into(), ok.to_string())];
                    rows.extend(
                        report
                            .checks
                            .iter()
                            .map(|c| (format!("check[{}]", c.name), c.passed.to_string())),
                    );
                    rows.push(("polarization_violations".into(), violations.len().to_string()));
                    rows.extend(
                        violations
                            .iter()
                            .map(|v| ("polarization_violation".into(), format!("{},{}", v.row, v.col))),
                    );
                    tsv_doc(&config, &ctx, rows)
                }
                Format::Dot => return Err(Failure::Usage("check has no DOT output".into())),
            };
            Ok(Output { text, ok })
        }

        Command::Verify {
            n,
            ring,
            exhaustive,
            random,
            seed,
            form,
            budget,
            format,
        } => {
            let mode = match (exhaustive, random) {
                (_, Some(count)) => Mode::Random { count, seed },
                (true, None) => Mode::Exhaustive,
                (false, None) => return Err(Failure::Usage("pass --exhaustive or --random K".into())),
            };
            if format == Format::Dot {
                return Err(Failure::Usage("verify has no DOT output".into()));
            }
            let cfg = VerifyConfig {
                form: form.into(),
                precision: ring.precision,
                budget: budget.unwrap_or_else(default_budget),
                ..VerifyConfig::new(n, ring.p, ring.d, mode)
            };
            let report = strata::verify_local_strata(&cfg)?;
            let math_failed = !report.disagreements.is_empty()
                || !report.slope_bound_violations.is_empty()
                || !report.structural_failures.is_empty();
            let precision_failed = !report.precision_failures.is_empty() || !report.doubling_mismatches.is_empty();
            let text = match format {
                Format::Json => {
                    let mut s = serde_json::to_string_pretty(&report).map_err(Error::from)?;
                    s.push('\n');
                    s
                }
                _ => report.to_tsv(),
            };
            if precision_failed && !math_failed {
                let mut stdout = std::io::stdout().lock();
                let _ = stdout.write_all(text.as_bytes());
                return Err(Failure::Precision(format!(
                    "{} precision failures, {} doubling mismatches",
                    report.precision_failures.len(),
                    report.doubling_mismatches.len()
                )));
            }
            Ok(Output { text, ok: !math_failed })
        }

        Command::Calibrate => {
            let table = calibration_table()?;
            debug_assert!(table.starts_with(CALIBRATION_HEADER));
            let info = tool_info();
            Ok(Output {
                text: format!("# {} {}\n{table}", info.name, info.version),
                ok: true,
            })
        }
    }
}
