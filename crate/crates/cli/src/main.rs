use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use scenematch_core::desc::{parse_description, print_description, DescError, Description};
use scenematch_core::geometry::{EvalContext, MembershipParams};
use scenematch_core::matcher::{
    enumerate_hypotheses, performance, Aggregator, CompetitorRule, ItemKind, MatchHypothesis, RecognizedScene,
};
use scenematch_core::redundancy::{
    redundancy_report, AmbiguityScope, PerformanceThreshold, RedundancyConfig, RedundancyOutcome, RedundancyReport,
    SubdEvaluation,
};
use scenematch_core::scene::Scene;
use scenematch_core::synth::{generate, GenSpec};

/// Match operator descriptions against perceived scenes.
#[derive(Parser)]
#[command(name = "scenematch", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Rank the hypotheses matching a description.
    Match(MatchArgs),
    /// Find the maximal sub-description, its kernel and the description redundancy.
    Redundancy(RedundancyArgs),
    /// Parse a description and print its canonical form and syntax tree.
    Parse(ParseArgs),
    /// Generate a seeded synthetic scene with ground truth.
    Gen(GenArgs),
    /// Print the membership parameters in effect.
    Params(ParamsArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum AggregatorArg {
    Min,
    Geomean,
}

#[derive(Clone, Copy, ValueEnum)]
enum ScopeArg {
    Full,
    Subd,
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct DescSource {
    /// Description file.
    #[arg(long)]
    desc: Option<PathBuf>,
    /// Inline description text.
    #[arg(long = "desc-text")]
    desc_text: Option<String>,
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    scene: PathBuf,
    #[command(flatten)]
    source: DescSource,
    /// Membership parameter file (JSON).
    #[arg(long)]
    params: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "text")]
    format: Format,
    /// Fail on relations the scene cannot evaluate instead of assuming them.
    #[arg(long)]
    strict: bool,
    #[arg(short, long)]
    verbose: bool,
}

#[derive(Args)]
struct MatchArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long = "min-likelihood", default_value = "0.6", value_parser = unit_interval)]
    min_likelihood: f64,
    #[arg(long, value_enum, default_value = "min")]
    aggregator: AggregatorArg,
}

#[derive(Args)]
struct RedundancyArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long = "min-likelihood", default_value = "0.6", value_parser = unit_interval)]
    min_likelihood: f64,
    #[arg(long = "min-ambiguity", default_value = "0.3", value_parser = unit_interval)]
    min_ambiguity: f64,
    #[arg(long = "ambiguity-scope", value_enum, default_value = "full")]
    ambiguity_scope: ScopeArg,
}

#[derive(Args)]
struct ParseArgs {
    #[command(flatten)]
    source: DescSource,
    #[arg(long, value_enum, default_value = "text")]
    format: Format,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, default_value = "0")]
    seed: u64,
    /// Pipe chains, the target chain included.
    #[arg(long, default_value = "4")]
    chains: usize,
    #[arg(long, default_value = "0", value_parser = unit_interval)]
    degradation: f64,
    #[arg(long = "false-rate", default_value = "0", value_parser = unit_interval)]
    false_rate: f64,
    #[arg(long = "hidden-rate", default_value = "0", value_parser = unit_interval)]
    hidden_rate: f64,
    /// Also write the scene document to this file.
    #[arg(long = "scene-out")]
    scene_out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
}

#[derive(Args)]
struct ParamsArgs {
    #[arg(long)]
    params: Option<PathBuf>,
}

fn unit_interval(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("'{s}' is not a number"))?;
    if (0.0..=1.0).contains(&v) {
        Ok(v)
    } else {
        Err(format!("{v} is outside [0, 1]"))
    }
}

/// Errors in inputs, reported with exit status 2.
struct InputError(anyhow::Error);

impl<E: Into<anyhow::Error>> From<E> for InputError {
    fn from(e: E) -> Self {
        InputError(e.into())
    }
}

fn read(path: &PathBuf) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

fn load_description(source: &DescSource) -> Result<Description> {
    let text = match (&source.desc, &source.desc_text) {
        (Some(path), _) => read(path)?,
        (None, Some(text)) => text.clone(),
        (None, None) => return Err(anyhow!("a description is required")),
    };
    parse_description(&text).map_err(|e| match &e {
        DescError::Invalid(diags) => {
            anyhow!("{}", diags.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("\n"))
        }
        _ => anyhow!(e),
    })
}

fn load_params(path: &Option<PathBuf>) -> Result<MembershipParams> {
    match path {
        Some(p) => MembershipParams::from_json(&read(p)?).with_context(|| format!("in {}", p.display())),
        None => Ok(MembershipParams::default()),
    }
}

fn load_inputs(c: &Common) -> Result<(Scene, Description, EvalContext)> {
    let scene = Scene::from_json(&read(&c.scene)?).with_context(|| format!("in {}", c.scene.display()))?;
    let d = load_description(&c.source)?;
    let ctx = EvalContext::new(load_params(&c.params)?).strict(c.strict);
    Ok((scene, d, ctx))
}

fn hypothesis_lines(h: &MatchHypothesis, out: &mut String, indent: &str) {
    for item in &h.item_scores {
        let line = match item.kind {
            ItemKind::Object => format!("{} {}", item.perceived[0], item.text),
            ItemKind::Relation => format!("R({}) {}", item.perceived.join(", "), item.text),
        };
        out.push_str(&format!("{indent}{line}: π = {:.2}\n", item.score.value()));
    }
}

fn cmd_match(args: &MatchArgs) -> Result<(String, bool), InputError> {
    let (scene, d, ctx) = load_inputs(&args.common)?;
    let agg = match args.aggregator {
        AggregatorArg::Min => Aggregator::Min,
        AggregatorArg::Geomean => Aggregator::GeoMean,
    };
    let rs = enumerate_hypotheses(&d, &scene, &ctx, agg, args.min_likelihood)?;
    let found = !rs.hypotheses.is_empty();
    let perf = performance(&rs, CompetitorRule::HuntBinding);
    let text = match args.common.format {
        Format::Json => {
            let mut v = serde_json::to_value(&rs)?;
            v["non_ambiguity"] = serde_json::json!(perf.non_ambiguity);
            serde_json::to_string_pretty(&v)? + "\n"
        }
        Format::Text => match_text(&rs, perf.non_ambiguity, args.min_likelihood, d.alternatives.len() > 1),
    };
    Ok((text, found))
}

fn match_text(rs: &RecognizedScene, non_ambiguity: f64, threshold: f64, alternatives: bool) -> String {
    let mut out = String::new();
    if rs.hypotheses.is_empty() {
        out.push_str(&format!("no hypothesis reaches π = {threshold:.2}\n"));
    }
    for (k, h) in rs.hypotheses.iter().enumerate() {
        let alt = if alternatives { format!(" (alternative {})", h.alternative_index + 1) } else { String::new() };
        out.push_str(&format!("hypothesis {} π = {:.2}{alt}\n", k + 1, h.likelihood.value()));
        hypothesis_lines(h, &mut out, "  ");
    }
    if let Some(leader) = rs.leader() {
        out.push_str(&format!("hunt object: {} (non-ambiguity {non_ambiguity:.2})\n", leader.hunt));
    }
    for note in &rs.notes {
        out.push_str(&format!("note: {note}\n"));
    }
    out
}

fn cmd_redundancy(args: &RedundancyArgs) -> Result<(String, bool), InputError> {
    let (scene, d, ctx) = load_inputs(&args.common)?;
    let cfg = RedundancyConfig {
        threshold: PerformanceThreshold::new(args.min_likelihood, args.min_ambiguity)?,
        scope: match args.ambiguity_scope {
            ScopeArg::Full => AmbiguityScope::FullDescription,
            ScopeArg::Subd => AmbiguityScope::MaximalSubd,
        },
        verbose: args.common.verbose,
        ..Default::default()
    };
    let outcome = redundancy_report(&d, &scene, &ctx, &cfg)?;
    let matched = outcome.report().is_some();
    let text = match args.common.format {
        Format::Json => serde_json::to_string_pretty(&outcome)? + "\n",
        Format::Text => redundancy_text(&outcome, &cfg, d.alternatives.len() > 1),
    };
    Ok((text, matched))
}

fn perf_text(likelihood: f64, non_ambiguity: f64) -> String {
    format!("π = {likelihood:.2}, non-ambiguity {non_ambiguity:.2}")
}

fn trace_text(trace: &[SubdEvaluation], out: &mut String) {
    out.push_str("lattice:\n");
    for e in trace {
        out.push_str(&format!(
            "  {{{}}} {} hunt {} {}\n",
            e.subd.labels().join(", "),
            perf_text(e.performance.likelihood.value(), e.performance.non_ambiguity),
            e.hunt.as_deref().unwrap_or("-"),
            if e.acceptable { "accepted" } else { "rejected" }
        ));
    }
}

fn redundancy_text(outcome: &RedundancyOutcome, cfg: &RedundancyConfig, alternatives: bool) -> String {
    let mut out = String::new();
    let th = &cfg.threshold;
    match outcome {
        RedundancyOutcome::NoMatch { best_rejected, classic, trace } => {
            out.push_str(&format!(
                "no match: no sub-description reaches π ≥ {:.2} with non-ambiguity ≥ {:.2}\n",
                th.min_likelihood, th.min_non_ambiguity
            ));
            out.push_str(&format!(
                "classic performance: {}\n",
                perf_text(classic.likelihood.value(), classic.non_ambiguity)
            ));
            if let Some(e) = best_rejected {
                out.push_str(&format!(
                    "best rejected: {{{}}} {}\n",
                    e.subd.labels().join(", "),
                    perf_text(e.performance.likelihood.value(), e.performance.non_ambiguity)
                ));
            }
            if let Some(trace) = trace {
                trace_text(trace, &mut out);
            }
        }
        RedundancyOutcome::Match(r) => report_text(r, alternatives, &mut out),
    }
    out
}

fn report_text(r: &RedundancyReport, alternatives: bool, out: &mut String) {
    out.push_str(&format!("hunt object: {}\n", r.hunt));
    if alternatives {
        out.push_str(&format!("alternative: {}\n", r.alternative_index + 1));
    }
    let m = &r.maximal_performance;
    out.push_str(&format!(
        "maximal sub-description: {{{}}} {}\n",
        r.maximal_subd.labels().join(", "),
        perf_text(m.likelihood.value(), m.non_ambiguity)
    ));
    if r.maximal_candidates.len() > 1 {
        for c in &r.maximal_candidates {
            out.push_str(&format!(
                "  candidate {{{}}} {} hunt {}\n",
                c.subd.labels().join(", "),
                perf_text(c.performance.likelihood.value(), c.performance.non_ambiguity),
                c.hunt.as_deref().unwrap_or("-")
            ));
        }
    }
    out.push_str(&format!("best sub-interpretation π = {:.2}\n", r.best_subi.likelihood.value()));
    hypothesis_lines(&r.best_subi, out, "  ");
    out.push_str(&format!("dropped items: {}\n", list(&r.dropped_items)));
    for k in &r.kernels {
        out.push_str(&format!("kernel: {{{}}}\n", k.labels().join(", ")));
    }
    out.push_str(&format!("chosen kernel: {{{}}}\n", r.chosen_kernel.labels().join(", ")));
    out.push_str(&format!("description redundancy δ = {} (used {})\n", r.delta, r.used_redundancy));
    out.push_str(&format!("redundant items: {}\n", list(&r.redundant_items)));
    out.push_str(&format!(
        "classic performance: {}\n",
        perf_text(r.classic.likelihood.value(), r.classic.non_ambiguity)
    ));
    out.push_str(&format!(
        "performance with redundancy: {}\n",
        perf_text(r.performance.likelihood.value(), r.performance.non_ambiguity)
    ));
    for note in &r.notes {
        out.push_str(&format!("note: {note}\n"));
    }
    if let Some(trace) = &r.trace {
        trace_text(trace, out);
    }
}

fn list(items: &[String]) -> String {
    if items.is_empty() {
        "none".into()
    } else {
        items.join(", ")
    }
}

fn cmd_parse(args: &ParseArgs) -> Result<String, InputError> {
    let d = load_description(&args.source)?;
    let canonical = print_description(&d);
    Ok(match args.format {
        Format::Json => {
            serde_json::to_string_pretty(&serde_json::json!({ "canonical": canonical, "description": d }))? + "\n"
        }
        Format::Text => format!("{canonical}\n{}\n", serde_json::to_string_pretty(&d)?),
    })
}

fn cmd_gen(args: &GenArgs) -> Result<String, InputError> {
    let spec = GenSpec {
        seed: args.seed,
        chains: args.chains,
        degradation: args.degradation,
        false_rate: args.false_rate,
        hidden_rate: args.hidden_rate,
    };
    let scenario = generate(&spec)?;
    if let Some(path) = &args.scene_out {
        fs::write(path, scenario.scene.to_json() + "\n").with_context(|| format!("cannot write {}", path.display()))?;
    }
    Ok(match args.format {
        Format::Json => serde_json::to_string_pretty(&scenario)? + "\n",
        Format::Text => {
            let mut out = scenario.scene.to_json() + "\n";
            for t in &scenario.truths {
                let pairs: Vec<String> = t.binding.iter().map(|(o, w)| format!("{o}={w}")).collect();
                out.push_str(&format!("# {} -> hunt {} ({})\n", t.description, t.hunt, pairs.join(", ")));
            }
            out
        }
    })
}

fn cmd_params(args: &ParamsArgs) -> Result<String, InputError> {
    Ok(load_params(&args.params)?.to_json() + "\n")
}

fn run(cli: &Cli) -> Result<(String, bool), InputError> {
    match &cli.command {
        Command::Match(a) => cmd_match(a),
        Command::Redundancy(a) => cmd_redundancy(a),
        Command::Parse(a) => cmd_parse(a).map(|s| (s, true)),
        Command::Gen(a) => cmd_gen(a).map(|s| (s, true)),
        Command::Params(a) => cmd_params(a).map(|s| (s, true)),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    match run(&cli) {
        Ok((text, success)) => {
            let _ = io::stdout().write_all(text.as_bytes());
            if success {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(InputError(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
