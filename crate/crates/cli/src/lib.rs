//! Front end for the `mme` binary: argument parsing, job files and the
//! subcommands, each of which produces a JSON (or CSV) document.

pub mod config;
pub mod dsl;

use std::fs;
use std::path::PathBuf;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use mme_core::exec::{self, Mode};
use mme_core::gausswick::{map_moment_check, genus_coefficient, map_count, map_count_table, map_table_csv, ratio_series, Star};
use mme_core::master::{alpha_eval, alpha_series_with_budget, free_energy_series, free_entropy_series, Budget, LambdaSeries, Potential};
use mme_core::ncpoly::{Color, Monomial, NCPoly};
use mme_core::rational::{format_q, parse_rational, qi, to_f64};
use mme_core::sampler::{estimate, run_chains, write_dump, ModelConfig, Observable};
use mme_core::Q;
use serde_json::{json, Value};

use config::JobConfig;
use dsl::{parse_potential, PotentialSpec};

pub const SCHEMA: &str = "mme/1";

#[derive(Debug, Parser)]
#[command(name = "mme", version, about = "Exact 1/N^2 expansion of perturbed Gaussian matrix models")]
pub struct Cli {
    /// Job file with `key = value` lines; flags override it.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Write the result here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Worker threads for the parallel stages.
    #[arg(long, global = true, env = "MME_THREADS")]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

impl std::str::FromStr for Format {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        <Format as ValueEnum>::from_str(s, true)
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Coefficients α_n(λ, P) of the 1/N² expansion.
    Expand(ExpandArgs),
    /// The same coefficients from exact finite-N Gaussian moments.
    Oracle(OracleArgs),
    /// Count maps by genus.
    Maps(MapsArgs),
    /// Monte Carlo estimates at finite N.
    Sample(SampleArgs),
    /// Free entropy and free energy series.
    Entropy(EntropyArgs),
    /// Run a verification suite; exits with 2 on any mismatch.
    Verify(VerifyArgs),
}

#[derive(Debug, Args)]
pub struct ModelArgs {
    /// Potential V, e.g. "X1^4 + 1/2*X1*X2*X1*X2".
    #[arg(long)]
    pub potential: Option<String>,
    /// Number of matrices; defaults to the largest colour used.
    #[arg(long)]
    pub d: Option<usize>,
}

#[derive(Debug, Args)]
pub struct ExpandArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long)]
    pub observable: Option<String>,
    /// Largest n of α_n to compute.
    #[arg(long)]
    pub genus: Option<usize>,
    #[arg(long)]
    pub lambda_order: Option<usize>,
    /// Comma-separated λ values at which to sum the truncated series.
    #[arg(long)]
    pub lambda: Option<String>,
    /// Cap on intermediate polynomial size.
    #[arg(long)]
    pub max_terms: Option<usize>,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long)]
    pub observable: Option<String>,
    #[arg(long)]
    pub genus: Option<usize>,
    #[arg(long)]
    pub lambda_order: Option<usize>,
}

#[derive(Debug, Args)]
pub struct MapsArgs {
    /// Root vertex word.
    #[arg(long)]
    pub root: Option<String>,
    #[arg(long)]
    pub genus: Option<usize>,
    /// Comma-separated vertex words; empty for none.
    #[arg(long)]
    pub vertices: Option<String>,
    /// Tabulate over all vertex multisets drawn from this potential.
    #[arg(long)]
    pub potential: Option<String>,
    #[arg(long)]
    pub lambda_order: Option<usize>,
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Matrix size N.
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub k_cut: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub step_size: Option<f64>,
    #[arg(long)]
    pub steps: Option<usize>,
    #[arg(long)]
    pub burnin: Option<usize>,
    #[arg(long)]
    pub thinning: Option<usize>,
    #[arg(long)]
    pub chains: Option<usize>,
    /// Keep the initial step size instead of tuning it during burn-in.
    #[arg(long)]
    pub no_adapt: bool,
    /// Observables ts(P); repeat the flag or separate with ';' in a job file.
    #[arg(long)]
    pub observable: Vec<String>,
    /// Schwinger-Dyson residuals as `P@i`.
    #[arg(long)]
    pub sd_residual: Vec<String>,
    /// Raw sample dump (little-endian, magic "MMCH").
    #[arg(long)]
    pub dump: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EntropyArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long)]
    pub lambda_order: Option<usize>,
    /// Largest n for the free energy terms.
    #[arg(long)]
    pub genus: Option<usize>,
    #[arg(long)]
    pub lambda: Option<String>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// quadratic, linear, quartic, maps, entropy, sampler or all.
    #[arg(long)]
    pub suite: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Ok,
    Mismatch,
}

impl Status {
    pub fn exit_code(self) -> u8 {
        match self {
            Status::Ok => 0,
            Status::Mismatch => 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Output {
    pub body: String,
    pub status: Status,
}

struct Ctx {
    cfg: JobConfig,
    format: Format,
}

impl Ctx {
    fn potential(&self, m: &ModelArgs) -> Result<PotentialSpec> {
        let src = self.cfg.pick_opt(m.potential.clone(), "potential")?.ok_or_else(|| anyhow!("--potential is required"))?;
        parse_potential(&src).with_context(|| format!("potential {src:?}"))
    }

    fn spec(&self, flag: &Option<String>, key: &str, default: Option<&str>) -> Result<PotentialSpec> {
        let src = match self.cfg.pick_opt(flag.clone(), key)? {
            Some(s) => s,
            None => default.map(String::from).ok_or_else(|| anyhow!("--{key} is required"))?,
        };
        parse_potential(&src).with_context(|| format!("{key} {src:?}"))
    }

    fn d(&self, m: &ModelArgs, specs: &[&PotentialSpec]) -> Result<usize> {
        let used = specs.iter().map(|s| s.max_color()).max().unwrap_or(1).max(1);
        Ok(self.cfg.pick(m.d, "d", used)?)
    }

    fn model(&self, m: &ModelArgs, extra: &[&PotentialSpec]) -> Result<(PotentialSpec, Potential, usize)> {
        let spec = self.potential(m)?;
        let mut all = vec![&spec];
        all.extend_from_slice(extra);
        let d = self.d(m, &all)?;
        let v = spec.to_potential(d)?;
        Ok((spec, v, d))
    }
}

fn envelope(command: &str, mut body: Value) -> Value {
    body["schema"] = json!(SCHEMA);
    body["command"] = json!(command);
    body
}

fn render(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("json values serialize");
    s.push('\n');
    s
}

fn series_json(records: &[(usize, LambdaSeries)]) -> Value {
    json!(records.iter().map(|(n, s)| s.record(*n)).collect::<Vec<_>>())
}

fn series_csv(records: &[(usize, LambdaSeries)]) -> String {
    let mut s = String::from("n,k,coeff\n");
    for (n, series) in records {
        for (k, c) in series.coeffs.iter().enumerate() {
            s.push_str(&format!("{n},{k},{}\n", format_q(c)));
        }
    }
    s
}

fn parse_lambdas(src: &str) -> Result<Vec<Q>> {
    src.split(',').filter(|s| !s.trim().is_empty()).map(|s| Ok(parse_rational(s.trim())?)).collect()
}

fn single_word(src: &str) -> Result<Vec<Color>> {
    let spec = parse_potential(src)?;
    match spec.terms.as_slice() {
        [t] if t.coeff == dsl::Coeff::Real(Q::from_integer(1.into())) && !t.word.is_empty() => Ok(t.word.clone()),
        _ => bail!("{src:?} is not a single word"),
    }
}

fn cmd_expand(ctx: &Ctx, a: &ExpandArgs) -> Result<Output> {
    let obs = ctx.spec(&a.observable, "observable", None)?;
    let (spec, v, d) = ctx.model(&a.model, &[&obs])?;
    let p = obs.to_observable(d)?;
    let genus = ctx.cfg.pick(a.genus, "genus", 0)?;
    let order = ctx.cfg.pick(a.lambda_order, "lambda-order", 3)?;
    let mut budget = Budget::default();
    budget.max_terms = ctx.cfg.pick(a.max_terms, "max-terms", budget.max_terms)?;
    let records = (0..=genus)
        .map(|n| Ok((n, alpha_series_with_budget(n, &v, &p, order, &budget)?)))
        .collect::<Result<Vec<_>>>()?;
    let lambdas = match ctx.cfg.pick_opt(a.lambda.clone(), "lambda")? {
        Some(s) => parse_lambdas(&s)?,
        None => Vec::new(),
    };
    let mut evals = Vec::new();
    for l in &lambdas {
        for (n, _) in &records {
            let e = alpha_eval(*n, &v, &p, l, order)?;
            evals.push(json!({
                "lambda": format_q(l), "n": n,
                "value": format_q(&e.value), "value_f64": to_f64(&e.value),
                "last_term": to_f64(&e.last_term),
            }));
        }
    }
    let body = match ctx.format {
        Format::Csv => series_csv(&records),
        Format::Json => render(&envelope(
            "expand",
            json!({
                "potential": spec.to_string(), "observable": obs.to_string(), "d": d,
                "series": series_json(&records), "evaluations": evals,
            }),
        )),
    };
    Ok(Output { body, status: Status::Ok })
}

fn cmd_oracle(ctx: &Ctx, a: &OracleArgs) -> Result<Output> {
    let obs = ctx.spec(&a.observable, "observable", None)?;
    let (spec, v, d) = ctx.model(&a.model, &[&obs])?;
    obs.to_observable(d)?;
    let genus = ctx.cfg.pick(a.genus, "genus", 1)?;
    let order = ctx.cfg.pick(a.lambda_order, "lambda-order", 2)?;
    let series = ratio_series(&obs.real_terms()?, &v, order)?;
    let records: Vec<(usize, LambdaSeries)> = (0..=genus).map(|g| (g, genus_coefficient(&series, g))).collect();
    let body = match ctx.format {
        Format::Csv => {
            let mut s = String::from("k,n_power,coeff\n");
            for (k, l) in series.iter().enumerate() {
                for (e, c) in l.terms() {
                    s.push_str(&format!("{k},{e},{}\n", format_q(c)));
                }
            }
            s
        }
        Format::Json => render(&envelope(
            "oracle",
            json!({
                "potential": spec.to_string(), "observable": obs.to_string(), "d": d,
                "lambda_coeffs": series.iter().map(ToString::to_string).collect::<Vec<_>>(),
                "genus_series": series_json(&records),
            }),
        )),
    };
    Ok(Output { body, status: Status::Ok })
}

fn cmd_maps(ctx: &Ctx, a: &MapsArgs) -> Result<Output> {
    let root_src = ctx.cfg.pick_opt(a.root.clone(), "root")?.ok_or_else(|| anyhow!("--root is required"))?;
    let root = Star::new(single_word(&root_src)?)?;
    if let Some(src) = ctx.cfg.pick_opt(a.potential.clone(), "potential")? {
        let spec = parse_potential(&src)?;
        let d = spec.max_color().max(root.word.iter().copied().max().unwrap_or(1) as usize);
        let v = spec.to_potential(d)?;
        let genus = ctx.cfg.pick(a.genus, "genus", 1)?;
        let order = ctx.cfg.pick(a.lambda_order, "lambda-order", 2)?;
        let rows = map_count_table(&v, &root, genus, order)?;
        let body = match ctx.format {
            Format::Csv => map_table_csv(&rows),
            Format::Json => render(&envelope("maps", json!({ "root": root.to_string(), "potential": spec.to_string(), "rows": rows }))),
        };
        return Ok(Output { body, status: Status::Ok });
    }
    let genus = ctx.cfg.pick(a.genus, "genus", 0)?;
    let vsrc = ctx.cfg.pick(a.vertices.clone(), "vertices", String::new())?;
    let vertices = vsrc
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| Ok(Star::new(single_word(s)?)?))
        .collect::<Result<Vec<_>>>()?;
    let count = map_count(genus, &vertices, &root)?;
    let names: Vec<String> = vertices.iter().map(ToString::to_string).collect();
    let body = match ctx.format {
        Format::Csv => format!("genus,vertices,count\n{genus},\"{}\",{count}\n", names.join(" ")),
        Format::Json => render(&envelope("maps", json!({ "root": root.to_string(), "genus": genus, "vertices": names, "count": count }))),
    };
    Ok(Output { body, status: Status::Ok })
}

fn list(flag: &[String], cfg: &JobConfig, key: &str) -> Vec<String> {
    if !flag.is_empty() {
        return flag.to_vec();
    }
    cfg.raw(key).map(|s| s.split(';').map(|x| x.trim().to_string()).filter(|x| !x.is_empty()).collect()).unwrap_or_default()
}

fn cmd_sample(ctx: &Ctx, a: &SampleArgs) -> Result<Output> {
    let cfg = &ctx.cfg;
    let mut obs_specs = Vec::new();
    for s in list(&a.observable, cfg, "observable") {
        obs_specs.push(parse_potential(&s).with_context(|| format!("observable {s:?}"))?);
    }
    if obs_specs.is_empty() {
        obs_specs.push(parse_potential("X1^2")?);
    }
    let mut sd_specs = Vec::new();
    for s in list(&a.sd_residual, cfg, "sd-residual") {
        let (p, i) = s.rsplit_once('@').ok_or_else(|| anyhow!("sd residual {s:?} must look like P@i"))?;
        sd_specs.push((parse_potential(p)?, i.trim().parse::<Color>().with_context(|| format!("colour in {s:?}"))?));
    }
    let refs: Vec<&PotentialSpec> = obs_specs.iter().chain(sd_specs.iter().map(|(p, _)| p)).collect();
    let (_, v, d) = ctx.model(&a.model, &refs)?;
    let mut observables = Vec::new();
    for s in &obs_specs {
        observables.push(Observable::Trace(s.to_observable(d)?));
    }
    for (s, i) in &sd_specs {
        if *i == 0 || *i as usize > d {
            bail!("sd residual colour {i} outside 1..={d}");
        }
        observables.push(Observable::SdResidual(s.to_observable(d)?, *i));
    }
    let mut mc = ModelConfig::new(v, cfg.pick(a.lambda, "lambda", 0.0)?, cfg.pick(a.n, "n", 16)?);
    mc.k_cut = cfg.pick_opt(a.k_cut, "k-cut")?;
    mc.seed = cfg.pick(a.seed, "seed", 0)?;
    mc.step_size = cfg.pick(a.step_size, "step-size", 0.25)?;
    mc.n_steps = cfg.pick(a.steps, "steps", 10_000)?;
    mc.n_burnin = cfg.pick(a.burnin, "burnin", 1_000)?;
    mc.thinning = cfg.pick(a.thinning, "thinning", 1)?;
    mc.chains = cfg.pick(a.chains, "chains", 1)?;
    mc.adapt = !(a.no_adapt || cfg.get::<bool>("no-adapt")?.unwrap_or(false));
    let dump = cfg.pick_opt(a.dump.clone(), "dump")?;
    mc.keep_samples = dump.is_some();
    let set = run_chains(&mc, &observables)?;
    if let Some(path) = dump {
        let samples: Vec<_> = set.chains.iter().flat_map(|c| c.samples.iter().map(|(x, _)| x.clone())).collect();
        let mut f = std::io::BufWriter::new(fs::File::create(&path).with_context(|| format!("creating {}", path.display()))?);
        write_dump(&mut f, &samples)?;
    }
    let mut summary = set.summary()?;
    let names = obs_specs.iter().map(|s| format!("ts({s})")).chain(sd_specs.iter().map(|(s, i)| format!("sd({s}; {i})")));
    for (o, name) in summary.observables.iter_mut().zip(names) {
        o.name = name;
    }
    let body = match ctx.format {
        Format::Csv => {
            let mut s = String::from("name,mean,stderr,ess\n");
            for o in &summary.observables {
                s.push_str(&format!("\"{}\",{},{},{}\n", o.name, o.estimate.mean, o.estimate.stderr, o.estimate.ess));
            }
            s
        }
        Format::Json => render(&envelope("sample", serde_json::to_value(&summary)?)),
    };
    Ok(Output { body, status: Status::Ok })
}

fn cmd_entropy(ctx: &Ctx, a: &EntropyArgs) -> Result<Output> {
    let (spec, v, d) = ctx.model(&a.model, &[])?;
    let order = ctx.cfg.pick(a.lambda_order, "lambda-order", 4)?;
    let genus = ctx.cfg.pick(a.genus, "genus", 0)?;
    let chi = free_entropy_series(&v, order)?;
    let fe: Vec<(usize, LambdaSeries)> = free_energy_series(&v, genus, order)?.into_iter().enumerate().collect();
    let value = match ctx.cfg.pick_opt(a.lambda.clone(), "lambda")? {
        Some(s) => {
            let l = parse_rational(&s)?;
            let x = chi.by_difference.eval(&l);
            json!({ "lambda": format_q(&l), "value": format_q(&x), "value_f64": to_f64(&x) })
        }
        None => Value::Null,
    };
    let status = if chi.agree() { Status::Ok } else { Status::Mismatch };
    let body = match ctx.format {
        Format::Csv => {
            let mut s = String::from("k,by_difference,by_parts\n");
            for (k, (x, y)) in chi.by_difference.coeffs.iter().zip(&chi.by_parts.coeffs).enumerate() {
                s.push_str(&format!("{k},{},{}\n", format_q(x), format_q(y)));
            }
            s
        }
        Format::Json => render(&envelope(
            "entropy",
            json!({
                "potential": spec.to_string(), "d": d,
                "free_entropy": {
                    "by_difference": chi.by_difference.record(0).lambda_coeffs,
                    "by_parts": chi.by_parts.record(0).lambda_coeffs,
                    "agree": chi.agree(),
                    "at_zero": format_q(&chi.by_difference.coeffs[0]),
                },
                "free_energy": series_json(&fe),
                "evaluation": value,
            }),
        )),
    };
    Ok(Output { body, status })
}

struct Check {
    name: String,
    pass: bool,
    detail: String,
}

fn check(name: &str, pass: bool, detail: impl Into<String>) -> Check {
    Check { name: name.into(), pass, detail: detail.into() }
}

fn word(w: &[Color]) -> NCPoly {
    NCPoly::from_rational_terms([(qi(1), Monomial::base_word(w))])
}

fn both_paths(v: &Potential, p: &[Color], n: usize, order: usize) -> Result<(LambdaSeries, LambdaSeries)> {
    let master = alpha_series_with_budget(n, v, &word(p), order, &Budget::default())?;
    let oracle = genus_coefficient(&ratio_series(&[(qi(1), p.to_vec())], v, order)?, n);
    Ok((master, oracle))
}

fn coeffs(s: &LambdaSeries) -> String {
    format!("[{}]", s.coeffs.iter().map(format_q).collect::<Vec<_>>().join(", "))
}

fn suite_quadratic() -> Result<Vec<Check>> {
    let v = Potential::quadratic(1);
    let (m0, o0) = both_paths(&v, &[1, 1], 0, 6)?;
    let geometric = LambdaSeries::from_ints(&[1, -2, 4, -8, 16, -32, 64]);
    let mut higher = true;
    let mut agree = m0 == o0;
    for n in 1..=2 {
        let (m, o) = both_paths(&v, &[1, 1], n, 6)?;
        higher &= m.is_zero();
        agree &= m == o;
    }
    Ok(vec![
        check("α_0 = 1/(1+2λ)", m0 == geometric, coeffs(&m0)),
        check("α_n≡0 for n≥1", higher, "n = 1, 2 up to λ^6"),
        check("master = oracle", agree, "n ≤ 2, K = 6"),
    ])
}

fn suite_linear() -> Result<Vec<Check>> {
    let v = Potential::new(vec![(qi(1), vec![1])], 1)?;
    let (a, ao) = both_paths(&v, &[1], 0, 4)?;
    let (b, bo) = both_paths(&v, &[1, 1], 0, 4)?;
    Ok(vec![
        check("α_0(λ,X) = -λ", a == LambdaSeries::from_ints(&[0, -1, 0, 0, 0]) && a == ao, coeffs(&a)),
        check("α_0(λ,X²) = 1+λ²", b == LambdaSeries::from_ints(&[1, 0, 1, 0, 0]) && b == bo, coeffs(&b)),
    ])
}

fn suite_quartic() -> Result<Vec<Check>> {
    let v = Potential::power(4);
    let mut out = Vec::new();
    for p in [vec![1, 1], vec![1, 1, 1, 1]] {
        for n in 0..=1 {
            let (m, o) = both_paths(&v, &p, n, 3)?;
            out.push(check(&format!("α_{n}(X^{}) master = oracle", p.len()), m == o, coeffs(&m)));
        }
    }
    Ok(out)
}

fn suite_maps() -> Result<Vec<Check>> {
    let v = Potential::power(4);
    let mut out = Vec::new();
    for root in [Star::power(2), Star::power(4)] {
        for g in 0..=1 {
            let r = map_moment_check(&v, &root, g, 3)?;
            out.push(check(&format!("maps = moments, root {root}, g = {g}"), r.ok(), coeffs(&r.from_maps)));
        }
    }
    let seeds = (map_count(0, &[], &Star::power(4))?, map_count(1, &[], &Star::power(4))?);
    out.push(check("map counts of X1^4", seeds == (2, 1), format!("{seeds:?}")));
    Ok(out)
}

fn suite_entropy() -> Result<Vec<Check>> {
    let chi = free_entropy_series(&Potential::power(4), 4)?;
    Ok(vec![check("free entropy formulas agree", chi.agree() && chi.by_difference.coeffs[0] == qi(0), coeffs(&chi.by_difference))])
}

fn suite_sampler() -> Result<Vec<Check>> {
    let n = 16;
    let mut mc = ModelConfig::new(Potential::power(4), 0.0, n);
    mc.n_steps = 40_000;
    mc.n_burnin = 2_000;
    mc.thinning = 4;
    mc.seed = 1;
    let (x2, x4) = (word(&[1, 1]), word(&[1; 4]));
    let set = run_chains(&mc, &[Observable::Trace(x2.clone()), Observable::Trace(x4.clone())])?;
    let e2 = estimate(&set, &x2)?;
    let e4 = estimate(&set, &x4)?;
    let exact4 = 2.0 + 1.0 / (n * n) as f64;
    Ok(vec![
        check("λ=0: ts X² = 1", (e2.mean - 1.0).abs() <= 3.0 * e2.stderr, format!("{:.4} ± {:.4}", e2.mean, e2.stderr)),
        check("λ=0: ts X⁴ = 2 + 1/N²", (e4.mean - exact4).abs() <= 3.0 * e4.stderr, format!("{:.4} ± {:.4}", e4.mean, e4.stderr)),
    ])
}

fn cmd_verify(ctx: &Ctx, a: &VerifyArgs) -> Result<Output> {
    let suite = ctx.cfg.pick(a.suite.clone(), "suite", "all".to_string())?;
    let names: Vec<&str> = match suite.as_str() {
        "all" => vec!["quadratic", "linear", "quartic", "maps", "entropy", "sampler"],
        s => vec![s],
    };
    let mut checks = Vec::new();
    for s in names {
        checks.extend(match s {
            "quadratic" => suite_quadratic()?,
            "linear" => suite_linear()?,
            "quartic" => suite_quartic()?,
            "maps" => suite_maps()?,
            "entropy" => suite_entropy()?,
            "sampler" => suite_sampler()?,
            other => bail!("unknown suite {other:?}"),
        });
    }
    let pass = checks.iter().all(|c| c.pass);
    let verdict = |p: bool| if p { "PASS" } else { "FAIL" };
    let report: Vec<String> = checks.iter().map(|c| format!("{}: {}", c.name, verdict(c.pass))).collect();
    for line in &report {
        eprintln!("{line}");
    }
    let body = match ctx.format {
        Format::Csv => {
            let mut s = String::from("check,pass,detail\n");
            for c in &checks {
                s.push_str(&format!("\"{}\",{},\"{}\"\n", c.name, c.pass, c.detail));
            }
            s
        }
        Format::Json => render(&envelope(
            "verify",
            json!({
                "suite": suite, "pass": pass, "report": report,
                "checks": checks.iter().map(|c| json!({ "name": c.name, "pass": c.pass, "detail": c.detail })).collect::<Vec<_>>(),
            }),
        )),
    };
    Ok(Output { body, status: if pass { Status::Ok } else { Status::Mismatch } })
}

/// Runs one invocation. Errors are input or I/O problems; mismatches are reported in the status.
pub fn run(cli: &Cli) -> Result<Output> {
    let cfg = match &cli.config {
        Some(path) => JobConfig::parse(&fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?)?,
        None => JobConfig::default(),
    };
    let format = cfg.pick(cli.format, "format", Format::Json)?;
    if let Some(t) = cfg.pick_opt(cli.threads, "threads")? {
        if t == 0 {
            bail!("--threads must be positive");
        }
        exec::set_threads(t);
        if t == 1 {
            exec::set_mode(Mode::Sequential);
        }
    }
    let ctx = Ctx { cfg, format };
    match &cli.command {
        Command::Expand(a) => cmd_expand(&ctx, a),
        Command::Oracle(a) => cmd_oracle(&ctx, a),
        Command::Maps(a) => cmd_maps(&ctx, a),
        Command::Sample(a) => cmd_sample(&ctx, a),
        Command::Entropy(a) => cmd_entropy(&ctx, a),
        Command::Verify(a) => cmd_verify(&ctx, a),
    }
}
