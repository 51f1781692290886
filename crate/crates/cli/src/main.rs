use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::{info, warn};
use serde_json::{json, Value};

use speccalc::calculus::{apply_regularized_with, calculus_contour, restrict_to_projection, spectral_projection};
use speccalc::config::RunConfig;
use speccalc::ext::{complex_to_json, format_complex, parse_complex};
use speccalc::fredholm::{classify, extended_spectrum, profile_with};
use speccalc::function::MeromFn;
use speccalc::geometry::interior_samples;
use speccalc::operator::{OperatorModel, SpectralPoint, SpectralSet};
use speccalc::scenario::{Scenario, BUNDLED};
use speccalc::schema::{validate_schema, SchemaKind};
use speccalc::{Count, Diagnostic, Error, ExtComplex};

const WINDING_TOL: f64 = 1e-6;

#[derive(Parser)]
#[command(name = "speccalc", version, about = "Regularized functional calculus and spectral mapping checks")]
struct Cli {
    /// Run configuration (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Directory for result files; overrides the configuration.
    #[arg(long, global = true)]
    output_dir: Option<PathBuf>,

    /// Quadrature tolerance; overrides the configuration.
    #[arg(long, global = true)]
    tol: Option<f64>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct OpArg {
    /// Operator model (JSON).
    #[arg(long = "op")]
    op: PathBuf,
}

#[derive(Args)]
struct OpFnArgs {
    #[command(flatten)]
    op: OpArg,

    /// Function (JSON).
    #[arg(long = "fn")]
    function: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Certify that a dense operator is bisectorial-like.
    Certify {
        #[command(flatten)]
        op: OpArg,
        /// Resolvent samples per ray.
        #[arg(long, default_value_t = 32)]
        samples: usize,
    },
    /// Compute f(A).
    Apply(OpFnArgs),
    /// Extended essential spectrum of a given index.
    Spectrum {
        #[command(flatten)]
        op: OpArg,
        #[arg(long, value_parser = clap::value_parser!(u8).range(0..=9))]
        index: u8,
    },
    /// Fredholm profile and class membership of mu - A.
    Classify {
        #[command(flatten)]
        op: OpArg,
        #[arg(long, allow_hyphen_values = true)]
        mu: String,
    },
    /// Spectral projection onto a clopen part of the spectrum.
    Project {
        #[command(flatten)]
        op: OpArg,
        /// Comma-separated spectral points, `inf` for infinity.
        #[arg(long, allow_hyphen_values = true)]
        select: String,
    },
    /// Spectral mapping check of a scenario.
    Verify {
        /// Scenario file (JSON).
        #[arg(long, conflicts_with = "bundled", required_unless_present = "bundled")]
        scenario: Option<PathBuf>,
        /// Name of a scenario shipped with the library.
        #[arg(long)]
        bundled: Option<String>,
        /// Comma-separated indices; defaults to those of the scenario.
        #[arg(long, value_delimiter = ',')]
        indices: Option<Vec<usize>>,
    },
    /// Integration contour used by the calculus, as CSV.
    Contour(OpFnArgs),
}

/// How a run ended, mapped onto the exit code contract.
enum Failure {
    Violation(String),
    Input(Vec<Diagnostic>),
    Computation(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Violation(_) => 1,
            Failure::Input(_) => 2,
            Failure::Computation(_) => 3,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Schema(diags) => Failure::Input(diags),
            e if e.is_input_error() => Failure::Input(vec![Diagnostic::new("", e.to_string())]),
            e => Failure::Computation(e.to_string()),
        }
    }
}

type Outcome<T> = std::result::Result<T, Failure>;

fn input_error(path: &str, message: impl Into<String>) -> Failure {
    Failure::Input(vec![Diagnostic::new(path, message)])
}

fn read_json(path: &Path, kind: SchemaKind) -> Outcome<Value> {
    let text = std::fs::read_to_string(path).map_err(|e| input_error("", format!("{}: {e}", path.display())))?;
    let doc: Value = serde_json::from_str(&text).map_err(|e| input_error("", format!("{}: {e}", path.display())))?;
    validate_schema(&doc, kind).map_err(Failure::Input)?;
    Ok(doc)
}

struct Context {
    config: RunConfig,
}

impl Context {
    fn load(cli: &Cli) -> Outcome<Context> {
        let mut config = match &cli.config {
            Some(path) => RunConfig::from_json(&read_json(path, SchemaKind::Config)?)?,
            None => RunConfig::default(),
        };
        if let Some(dir) = &cli.output_dir {
            config.output_dir = dir.clone();
        }
        if let Some(tol) = cli.tol {
            config.tol = tol;
        }
        let diags = config.validate();
        if !diags.is_empty() {
            return Err(Failure::Input(diags));
        }
        Ok(Context { config })
    }

    fn operator(&self, arg: &OpArg) -> Outcome<OperatorModel> {
        let op = OperatorModel::from_json(&read_json(&arg.op, SchemaKind::Operator)?)?;
        Ok(match op {
            OperatorModel::Diagonal(d) => d.with_horizon(self.config.truncation_k).into(),
            dense => dense,
        })
    }

    fn function(&self, path: &Path, op: &OperatorModel) -> Outcome<MeromFn> {
        let a = op.region().map_or(0.0, |r| r.halfwidth_a);
        let mut doc = read_json(path, SchemaKind::Function)?;
        // the singular points of the operator decide which limits are required
        if let (Some(obj), Some(meta)) = (doc.as_object_mut(), op.meta().ok()) {
            obj.entry("a").or_insert(json!(a));
            if !obj.contains_key("singular_points") {
                let keys: Vec<String> = meta.m_a.iter().map(|d| speccalc::function::point_key(*d, a)).collect();
                obj.insert("singular_points".into(), json!(keys));
            }
        }
        validate_schema(&doc, SchemaKind::Function).map_err(Failure::Input)?;
        Ok(MeromFn::from_json(&doc, a)?)
    }

    fn write(&self, name: &str, value: &Value) -> Outcome<PathBuf> {
        let dir = &self.config.output_dir;
        std::fs::create_dir_all(dir).map_err(|e| Failure::Computation(format!("{}: {e}", dir.display())))?;
        let path = dir.join(name);
        let text = serde_json::to_string_pretty(value).map_err(|e| Failure::Computation(e.to_string()))?;
        std::fs::write(&path, text + "\n").map_err(|e| Failure::Computation(format!("{}: {e}", path.display())))?;
        info!("wrote {}", path.display());
        Ok(path)
    }
}

fn parse_point(text: &str, path: &str) -> Outcome<ExtComplex> {
    let t = text.trim();
    if matches!(t, "inf" | "infinity" | "∞") {
        return Ok(ExtComplex::Infinity);
    }
    parse_complex(t)
        .map(ExtComplex::Finite)
        .ok_or_else(|| input_error(path, format!("cannot parse `{t}` as a complex number")))
}

fn certify(ctx: &Context, op: &OpArg, samples: usize) -> Outcome<()> {
    let model = ctx.operator(op)?;
    let (doc, verdict) = match model.certify(samples) {
        Ok(cert) => (json!({ "certified": cert.certified, "constant": cert.constant }), Ok(())),
        Err(Error::NotBisectorial {
            reason,
            sample,
            constant,
        }) => (
            json!({
                "certified": false,
                "reason": reason,
                "sample": complex_to_json(sample),
                "constant": if constant.is_finite() { json!(constant) } else { Value::Null },
            }),
            Err(Failure::Violation(format!("not bisectorial: {reason} at {}", format_complex(sample)))),
        ),
        Err(e) => return Err(e.into()),
    };
    ctx.write("certificate.json", &doc)?;
    verdict
}

fn apply(ctx: &Context, args: &OpFnArgs) -> Outcome<()> {
    let op = ctx.operator(&args.op)?;
    let f = ctx.function(&args.function, &op)?;
    let a = op.region().map_or(0.0, |r| r.halfwidth_a);
    let result = apply_regularized_with(&f, &op, &ctx.config.calculus_options())?;
    let doc = json!({
        "operator": result.operator.to_json(),
        "bounded": result.bounded,
        "regularizer": result.regularizer_used.as_ref().map(|e| e.to_json(a)),
        "quadrature_report": result.quadrature_report,
    });
    ctx.write("result.json", &doc)?;
    Ok(())
}

fn spectrum(ctx: &Context, op: &OpArg, index: usize) -> Outcome<()> {
    let model = ctx.operator(op)?;
    let set = extended_spectrum(&model, index)?;
    println!("sigma~_{index} = {set}");
    ctx.write("spectrum.json", &json!({ "index": index, "spectrum": set }))?;
    Ok(())
}

fn classify_cmd(ctx: &Context, op: &OpArg, mu: &str) -> Outcome<()> {
    let model = ctx.operator(op)?;
    let ExtComplex::Finite(mu) = parse_point(mu, "/mu")? else {
        return Err(input_error("/mu", "mu must be finite"));
    };
    let p = profile_with(&model, mu, ctx.config.rank_gap_ratio)?;
    let m = classify(&p);
    println!("{m}");
    let classes: Vec<usize> = (0..10).filter(|&i| m.contains(i)).collect();
    ctx.write(
        "classification.json",
        &json!({ "mu": complex_to_json(mu), "profile": p, "classes": classes }),
    )?;
    Ok(())
}

fn project(ctx: &Context, op: &OpArg, select: &str) -> Outcome<()> {
    let model = ctx.operator(op)?;
    let mut lambda = SpectralSet::new();
    for (k, item) in select.split(',').filter(|s| !s.trim().is_empty()).enumerate() {
        match parse_point(item, &format!("/select/{k}"))? {
            ExtComplex::Finite(z) => lambda.insert(SpectralPoint::atom(z, Count::Finite(1))),
            ExtComplex::Infinity => lambda.includes_infinity = true,
        }
    }
    if lambda.is_empty() {
        return Err(input_error("/select", "no spectral points selected"));
    }
    let proj = spectral_projection(&model, &lambda)?;
    let restricted = restrict_to_projection(&model, &proj)?;
    ctx.write(
        "projection.json",
        &json!({
            "projector": proj.projector.to_json(),
            "lambda": proj.lambda_set,
            "complement_rank_finite": proj.complement_rank_finite,
            "restricted": restricted.to_json(),
        }),
    )?;
    Ok(())
}

fn verify(ctx: &Context, scenario: Option<&Path>, bundled: Option<&str>, indices: Option<&[usize]>) -> Outcome<()> {
    let mut s = match (scenario, bundled) {
        (Some(path), _) => Scenario::from_json(&read_json(path, SchemaKind::Scenario)?)?,
        (None, Some(name)) => {
            let (_, text) = BUNDLED
                .iter()
                .find(|(n, _)| *n == name)
                .ok_or_else(|| input_error("/bundled", format!("no bundled scenario named `{name}`")))?;
            Scenario::from_json(&serde_json::from_str(text).map_err(|e| Failure::Computation(e.to_string()))?)?
        }
        (None, None) => return Err(input_error("", "either --scenario or --bundled is required")),
    }
    .with_horizon(ctx.config.truncation_k);
    if let Some(list) = indices {
        if let Some(bad) = list.iter().position(|&i| i > 9) {
            return Err(input_error(&format!("/indices/{bad}"), "index must lie in 0..=9"));
        }
        s.indices = list.to_vec();
    }
    let report = s.run(&ctx.config.calculus_options())?;
    print!("{}", report.table());
    let mismatches = s.mismatches(&report);
    for m in &mismatches {
        warn!("{}: {m}", s.name);
    }
    ctx.write(
        "report.json",
        &json!({ "scenario": s.name, "report": report, "mismatches": mismatches }),
    )?;
    let violations = report.violations();
    if !violations.is_empty() {
        return Err(Failure::Violation(format!("{}: violations at indices {violations:?}", s.name)));
    }
    if !mismatches.is_empty() {
        return Err(Failure::Violation(format!("{}: {} recorded verdicts differ", s.name, mismatches.len())));
    }
    Ok(())
}

fn contour(ctx: &Context, args: &OpFnArgs) -> Outcome<()> {
    let op = ctx.operator(&args.op)?;
    let f = ctx.function(&args.function, &op)?;
    let cc = calculus_contour(&f, &op, ctx.config.nodes_per_panel)?;

    let mut worst = 0.0f64;
    let mut inside = interior_samples(&cc.region, cc.phi_prime, &cc.s_prime, &cc.path, 6);
    inside.extend(
        op.spectrum()
            .values()
            .filter(|z| cc.region.singular_at(ExtComplex::Finite(*z), 1e-12).is_none()),
    );
    for z in inside {
        worst = worst.max((cc.path.winding_number(z)? - 1.0).abs());
    }
    let a = cc.region.halfwidth_a;
    for d in cc.s_prime.keys() {
        if let ExtComplex::Finite(z) = d.location(a) {
            worst = worst.max(cc.path.winding_number(z)?.abs());
        }
    }
    info!("winding check: max defect {worst:.3e} (tol {WINDING_TOL:e})");

    let dir = &ctx.config.output_dir;
    std::fs::create_dir_all(dir).map_err(|e| Failure::Computation(format!("{}: {e}", dir.display())))?;
    let path = dir.join("contour.csv");
    let file = std::fs::File::create(&path).map_err(|e| Failure::Computation(format!("{}: {e}", path.display())))?;
    cc.path.write_csv(std::io::BufWriter::new(file))?;
    info!("wrote {}", path.display());
    ctx.write("contour.json", &cc.path.to_json())?;
    if worst > WINDING_TOL {
        return Err(Failure::Computation(format!("winding check failed: defect {worst:.3e}")));
    }
    Ok(())
}

fn configure_threads() -> Outcome<()> {
    let Ok(text) = std::env::var("SPECCALC_THREADS") else {
        return Ok(());
    };
    let n: usize = text
        .trim()
        .parse()
        .map_err(|_| input_error("/SPECCALC_THREADS", format!("expected a non-negative integer, got `{text}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Failure::Computation(e.to_string()))
}

fn run(cli: &Cli) -> Outcome<()> {
    configure_threads()?;
    let ctx = Context::load(cli)?;
    match &cli.command {
        Command::Certify { op, samples } => certify(&ctx, op, *samples),
        Command::Apply(args) => apply(&ctx, args),
        Command::Spectrum { op, index } => spectrum(&ctx, op, *index as usize),
        Command::Classify { op, mu } => classify_cmd(&ctx, op, mu),
        Command::Project { op, select } => project(&ctx, op, select),
        Command::Verify {
            scenario,
            bundled,
            indices,
        } => verify(&ctx, scenario.as_deref(), bundled.as_deref(), indices.as_deref()),
        Command::Contour(args) => contour(&ctx, args),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            match &failure {
                Failure::Violation(msg) => eprintln!("violation: {msg}"),
                Failure::Input(diags) => {
                    let doc = json!({ "errors": diags });
                    eprintln!("{}", serde_json::to_string_pretty(&doc).unwrap_or_default());
                }
                Failure::Computation(msg) => eprintln!("error: {msg}"),
            }
            ExitCode::from(failure.code())
        }
    }
}
