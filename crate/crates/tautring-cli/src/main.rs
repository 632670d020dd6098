//! Command line surface for the workbench: graph and generator listings,
//! pairing-rank reports, pushforward identity suites, and Hurwitz pullback
//! runs.  Every command reads an optional JSON config file, with explicit
//! flags winning, and emits either a table or JSON.  Exit codes: 0 success,
//! 1 invalid input, 2 blown budget, 3 violated invariant.

use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand_chacha::ChaCha8Rng;
use rand::{Rng, SeedableRng};
use serde_json::{json, Value};

use tautring::calculus::{
    default_budget, integrate_top, multiply, multiply_factored, pullback_forgetful,
    pullback_gluing, pushforward_forgetful, pushforward_gluing, FactoredClass, GluingMapSpec,
};
use tautring::gcover::{pullback_hurwitz, MonodromyData};
use tautring::gorenstein::{generator_basis, gorenstein_report, known_status, socle_check};
use tautring::graph::enumerate_stable_graphs_with_budget;
use tautring::rational::{q_is_positive, q_to_string, qi, qr};
use tautring::stratum::{make_stratum, DecoratedStratum, Decoration};
use tautring::{Error, Result, StableGraph, TautClass};

const DEFAULT_SEED: u64 = 17;

fn counted(count: usize, noun: &str) -> String {
    if count == 1 {
        format!("{count} {noun}")
    } else if let Some(stem) = noun.strip_suffix("ex") {
        format!("{count} {stem}ices")
    } else {
        format!("{count} {noun}s")
    }
}

#[derive(Parser)]
#[command(
    name = "tautring",
    version,
    about = "Exact intersection arithmetic on moduli of stable curves"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// List stable graphs, optionally with one codimension's generators.
    Enumerate(EnumerateArgs),
    /// Pairing ranks against the Betti oracle, socle check, known status.
    Gorenstein(GorensteinArgs),
    /// Run the pushforward identity suites; nonzero exit on any failure.
    VerifyLemmas(VerifyLemmasArgs),
    /// Pull a bielliptic locus back over a self-glued loop tower.
    Pullback(PullbackArgs),
}

#[derive(Args, Clone)]
struct CommonArgs {
    /// Work budget; defaults to TAUTRING_BUDGET or 20000.
    #[arg(long)]
    budget: Option<u64>,
    /// Worker threads; defaults to all cores.
    #[arg(long)]
    threads: Option<usize>,
    /// Seed for the randomized suites.
    #[arg(long)]
    seed: Option<u64>,
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Output format.
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// JSON file of defaults for any flag; explicit flags win.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Table,
    Json,
}

#[derive(Args)]
struct EnumerateArgs {
    /// Genus.
    #[arg(long)]
    g: Option<u32>,
    /// Number of markings.
    #[arg(long)]
    n: Option<u32>,
    /// Largest edge count to list; defaults to the dimension.
    #[arg(long)]
    max_edges: Option<usize>,
    /// Also list the decorated generators of this codimension.
    #[arg(long)]
    codim: Option<usize>,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args)]
struct GorensteinArgs {
    /// Genus.
    #[arg(long)]
    g: Option<u32>,
    /// Number of markings.
    #[arg(long)]
    n: Option<u32>,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args)]
struct VerifyLemmasArgs {
    /// Restrict the suites to one space (needs --n too).
    #[arg(long)]
    g: Option<u32>,
    /// Restrict the suites to one space (needs --g too).
    #[arg(long)]
    n: Option<u32>,
    /// Flip a sign inside the self-intersection expansion.
    #[arg(long, hide = true)]
    inject_sign_error: bool,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args)]
struct PullbackArgs {
    /// Loops glued onto the genus-two core.
    #[arg(long)]
    loops: Option<usize>,
    #[command(flatten)]
    common: CommonArgs,
}

/// Resolved output and resource settings after the config merge.
struct Settings {
    budget: u64,
    seed: u64,
    out: Option<PathBuf>,
    format: Format,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn run(cli: Cli) -> Result<u8> {
    match cli.command {
        Command::Enumerate(args) => cmd_enumerate(args),
        Command::Gorenstein(args) => cmd_gorenstein(args),
        Command::VerifyLemmas(args) => cmd_verify_lemmas(args),
        Command::Pullback(args) => cmd_pullback(args),
    }
}

// ---------------------------------------------------------------------------
// Config plumbing.

fn load_config(common: &CommonArgs) -> Result<Value> {
    match &common.config {
        None => Ok(Value::Null),
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| {
                Error::InvalidInput(format!("cannot read config {}: {e}", path.display()))
            })?;
            let value: Value = serde_json::from_str(&text)
                .map_err(|e| Error::InvalidInput(format!("config is not valid JSON: {e}")))?;
            if value.is_object() {
                Ok(value)
            } else {
                Err(Error::InvalidInput(
                    "config must be a JSON object".into(),
                ))
            }
        }
    }
}

fn config_uint(cfg: &Value, key: &str) -> Result<Option<u64>> {
    match cfg.get(key) {
        None | Some(Value::Null) => Ok(None),
        Some(v) => v.as_u64().map(Some).ok_or_else(|| {
            Error::InvalidInput(format!("config field {key} must be a nonnegative integer"))
        }),
    }
}

fn config_string(cfg: &Value, key: &str) -> Result<Option<String>> {
    match cfg.get(key) {
        None | Some(Value::Null) => Ok(None),
        Some(v) => v.as_str().map(|s| Some(s.to_string())).ok_or_else(|| {
            Error::InvalidInput(format!("config field {key} must be a string"))
        }),
    }
}

fn settings(common: &CommonArgs, cfg: &Value) -> Result<Settings> {
    let budget = match common.budget.or(config_uint(cfg, "budget")?) {
        Some(0) => {
            return Err(Error::InvalidInput("the budget must be positive".into()))
        }
        Some(b) => b,
        None => default_budget(),
    };
    // Library calls that fall back to the default budget must see the same
    // number this run resolved.
    std::env::set_var("TAUTRING_BUDGET", budget.to_string());
    let threads = common
        .threads
        .or(config_uint(cfg, "threads")?.map(|t| t as usize));
    if let Some(t) = threads {
        if t == 0 {
            return Err(Error::InvalidInput(
                "the thread count must be positive".into(),
            ));
        }
        // A second build_global in one process is a no-op; ignore it.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global();
    }
    let seed = common
        .seed
        .or(config_uint(cfg, "seed")?)
        .unwrap_or(DEFAULT_SEED);
    let out = common.out.clone().or_else(|| {
        config_string(cfg, "out")
            .ok()
            .flatten()
            .map(PathBuf::from)
    });
    let format = match common.format {
        Some(f) => f,
        None => match config_string(cfg, "format")?.as_deref() {
            Some("json") => Format::Json,
            Some("table") | None => Format::Table,
            Some(other) => {
                return Err(Error::InvalidInput(format!(
                    "unknown format {other:?}; use json or table"
                )))
            }
        },
    };
    Ok(Settings {
        budget,
        seed,
        out,
        format,
    })
}

fn emit(settings: &Settings, json: &Value, table: &str) -> Result<u8> {
    let text = match settings.format {
        Format::Json => {
            let mut s = serde_json::to_string_pretty(json)
                .map_err(|e| Error::Internal(format!("report serialization failed: {e}")))?;
            s.push('\n');
            s
        }
        Format::Table => table.to_string(),
    };
    match &settings.out {
        Some(path) => fs::write(path, text).map_err(|e| {
            Error::InvalidInput(format!("cannot write {}: {e}", path.display()))
        })?,
        None => print!("{text}"),
    }
    Ok(0)
}

fn need_gn(g: Option<u32>, n: Option<u32>, cfg: &Value) -> Result<(u32, u32)> {
    let g = g.or(config_uint(cfg, "g")?.map(|v| v as u32));
    let n = n.or(config_uint(cfg, "n")?.map(|v| v as u32));
    match (g, n) {
        (Some(g), Some(n)) => Ok((g, n)),
        _ => Err(Error::InvalidInput(
            "both --g and --n are required (flags or config)".into(),
        )),
    }
}

// ---------------------------------------------------------------------------
// enumerate

fn cmd_enumerate(args: EnumerateArgs) -> Result<u8> {
    let cfg = load_config(&args.common)?;
    let settings = settings(&args.common, &cfg)?;
    let (g, n) = need_gn(args.g, args.n, &cfg)?;
    let dim = (3 * g as i64 - 3 + n as i64).max(0) as usize;
    let max_edges = args
        .max_edges
        .or(config_uint(&cfg, "max_edges")?.map(|v| v as usize))
        .unwrap_or(dim);
    let codim = args
        .codim
        .or(config_uint(&cfg, "codim")?.map(|v| v as usize));

    let graphs = enumerate_stable_graphs_with_budget(g, n, max_edges, settings.budget)?;
    let mut table = format!(
        "{} of genus {g} with {} and at most {}\n",
        counted(graphs.len(), "stable graph"),
        counted(n as usize, "marking"),
        counted(max_edges, "edge")
    );
    for (i, graph) in graphs.iter().enumerate() {
        let legs: Vec<usize> = (0..graph.num_vertices())
            .map(|v| graph.legs_at(v).len())
            .collect();
        let _ = writeln!(
            table,
            "  [{i}] {}, {}, genera {:?}, legs {:?}",
            counted(graph.num_vertices(), "vertex"),
            counted(graph.num_edges(), "edge"),
            graph.genera(),
            legs
        );
    }
    let mut report = json!({
        "g": g,
        "n": n,
        "max_edges": max_edges,
        "graph_count": graphs.len(),
        "graphs": graphs.iter().map(|gr| gr.to_json()).collect::<Vec<_>>(),
    });
    if let Some(k) = codim {
        let gens = generator_basis(g, n, k)?;
        let _ = writeln!(
            table,
            "{} decorated generators in codimension {k}",
            gens.len()
        );
        for (i, s) in gens.iter().enumerate() {
            let _ = writeln!(table, "  [{i}] {}", s.to_json());
        }
        report["generators"] = json!({
            "codim": k,
            "count": gens.len(),
            "list": gens.iter().map(|s| s.to_json()).collect::<Vec<_>>(),
        });
    }
    emit(&settings, &report, &table)
}

// ---------------------------------------------------------------------------
// gorenstein

fn binomial_floor(n: u64, k: u64) -> u128 {
    let k = k.min(n - k);
    let mut r: u128 = 1;
    for i in 0..k {
        r = match r.checked_mul((n - i) as u128) {
            Some(x) => x / (i as u128 + 1),
            None => return u128::MAX,
        };
    }
    r
}

fn partition_count(k: usize) -> u128 {
    let mut p = vec![0u128; k + 1];
    p[0] = 1;
    for part in 1..=k {
        for total in part..=k {
            p[total] = p[total].saturating_add(p[total - part]);
        }
    }
    p[k]
}

/// A certified lower bound on the generator count in codimension `k`: pure
/// psi monomials on the smooth graph when there are markings, pure kappa
/// monomials otherwise.
fn basis_floor(n: u32, k: usize) -> u128 {
    if n == 0 {
        partition_count(k)
    } else {
        binomial_floor(k as u64 + n as u64 - 1, n as u64 - 1)
    }
}

fn cmd_gorenstein(args: GorensteinArgs) -> Result<u8> {
    let cfg = load_config(&args.common)?;
    let settings = settings(&args.common, &cfg)?;
    let (g, n) = need_gn(args.g, args.n, &cfg)?;
    let status = known_status(g, n)?;
    let dim = (3 * g as i64 - 3 + n as i64).max(0) as usize;
    let floor = basis_floor(n, dim);
    if floor > settings.budget as u128 {
        return Err(Error::BudgetExceeded {
            context: format!(
                "sizing the pairing matrices for genus {g} with {n} markings: the top \
                 codimension alone has at least {floor} generators, far out of reach at \
                 this budget; the settled status there is: {status}",
                status = status.status
            ),
            limit: settings.budget,
        });
    }

    let report = gorenstein_report(g, n, true)?;
    let socle = socle_check(g, n, true)?;

    let defect = match report.all_match {
        Some(true) => "none".to_string(),
        Some(false) => {
            let bad: Vec<String> = report
                .pairings
                .iter()
                .filter(|p| Some(p.rank as u64) != p.expected)
                .map(|p| {
                    format!(
                        "codim {}: rank {} vs expected {:?}",
                        p.k, p.rank, p.expected
                    )
                })
                .collect();
            bad.join("; ")
        }
        None => "no expected ranks known at this size".to_string(),
    };

    let mut table = format!(
        "pairing report for genus {g} with {} (dimension {dim})\n",
        counted(n as usize, "marking")
    );
    for p in &report.pairings {
        let verdict = match p.expected {
            Some(e) if e == p.rank as u64 => "ok",
            Some(_) => "MISMATCH",
            None => "no oracle",
        };
        let _ = writeln!(
            table,
            "  codim {}: rank {} ({} x {}), expected {}, {}",
            p.k,
            p.rank,
            p.rows,
            p.cols,
            p.expected.map_or("-".to_string(), |e| e.to_string()),
            verdict
        );
    }
    let _ = writeln!(
        table,
        "socle: top rank {} over {} generators; forgetful witness {}; gluing witness {}",
        socle.top_rank,
        socle.top_basis_size,
        if socle.forgetful_witness { "ok" } else { "FAILED" },
        if socle.gluing_witness { "ok" } else { "FAILED" },
    );
    let _ = writeln!(
        table,
        "status: {}; odd cohomology vanishes: {}",
        status.status,
        match status.odd_cohomology_vanishes {
            Some(true) => "yes",
            Some(false) => "no",
            None => "unknown",
        }
    );
    let _ = writeln!(table, "defect: {defect}");

    let json = json!({
        "g": g,
        "n": n,
        "dim": dim,
        "pairings": report
            .pairings
            .iter()
            .map(|p| {
                json!({
                    "codim": p.k,
                    "rows": p.rows,
                    "cols": p.cols,
                    "rank": p.rank,
                    "expected": p.expected,
                })
            })
            .collect::<Vec<_>>(),
        "all_match": report.all_match,
        "socle": {
            "top_rank": socle.top_rank,
            "top_basis_size": socle.top_basis_size,
            "forgetful_witness": socle.forgetful_witness,
            "gluing_witness": socle.gluing_witness,
        },
        "known_status": {
            "status": status.status.to_string(),
            "odd_cohomology_vanishes": status.odd_cohomology_vanishes,
        },
        "defect": defect,
    });
    emit(&settings, &json, &table)
}

// ---------------------------------------------------------------------------
// verify-lemmas

fn singleton(s: &DecoratedStratum) -> Result<TautClass> {
    let (g, n) = s.ambient();
    let mut t = TautClass::zero(g, n);
    t.add_term(s.clone(), qi(1))?;
    Ok(t)
}

/// Pushforward along the projection keeping factor `keep`: integrates out
/// every other factor.
fn project_onto(fc: &FactoredClass, keep: usize) -> Result<TautClass> {
    let (g, n) = fc.factors()[keep];
    let mut out = TautClass::zero(g, n);
    for (key, c) in fc.terms() {
        let mut scale = c.clone();
        for (j, s) in key.iter().enumerate() {
            if j == keep {
                continue;
            }
            scale *= integrate_top(&singleton(s)?)?;
            if scale == qi(0) {
                break;
            }
        }
        if scale != qi(0) {
            out.add_term(key[keep].clone(), scale)?;
        }
    }
    Ok(out)
}

/// The identity pushing a pulled-back class against the new psi: for every
/// generator of codimension at most one, (2g-2+n)^{-1} pi_*(pi^* a . psi)
/// must return the generator exactly.
fn forgetful_inversion_suite(g: u32, n: u32) -> Result<(usize, bool)> {
    let dim = (3 * g as i64 - 3 + n as i64).max(0) as usize;
    let scale = qr(1, 2 * g as i64 - 2 + n as i64);
    let psi_new = TautClass::psi(g, n + 1, n + 1)?;
    let mut count = 0;
    let mut all_ok = true;
    for k in 0..=dim.min(1) {
        for s in generator_basis(g, n, k)? {
            let alpha = singleton(&s)?;
            let back =
                pushforward_forgetful(&multiply(&pullback_forgetful(&alpha)?, &psi_new)?)?;
            all_ok &= back.scale(&scale) == alpha;
            count += 1;
        }
    }
    Ok((count, all_ok))
}

/// The elliptic tail suite: the self-intersection expansion of the gluing
/// of a genus-two curve with an elliptic tail, checked term for term, and
/// its projection onto the genus-two factor, which must be -1/24 times the
/// class.  `flip_sign` corrupts the expansion to prove the check can fail.
fn elliptic_tail_suite(flip_sign: bool) -> Result<(bool, bool)> {
    let gamma = StableGraph::from_edge_list(vec![2, 1], vec![vec![], vec![]], &[(0, 1)])?;
    let spec = GluingMapSpec::new(&gamma)?;
    let keep = spec
        .factors()
        .iter()
        .position(|&f| f == (2, 1))
        .ok_or_else(|| Error::Internal("missing genus-two factor".into()))?;

    let alpha = TautClass::fundamental(2, 1)?;
    let tail_one = TautClass::fundamental(1, 1)?;
    let by_factor = |first: &TautClass, second: &TautClass| -> Vec<TautClass> {
        spec.factors()
            .iter()
            .map(|&f| {
                if f == (2, 1) {
                    first.clone()
                } else {
                    second.clone()
                }
            })
            .collect()
    };

    let pushed = pushforward_gluing(&spec, &FactoredClass::tensor(&by_factor(&alpha, &tail_one))?)?;
    let lhs = pullback_gluing(&spec, &pushed)?;

    // Expansion: a.(d_{1,empty} - psi_1) on the genus-two factor, plus a
    // tensor -psi_1 on the tail.
    let d_graph = StableGraph::from_edge_list(vec![1, 1], vec![vec![1], vec![]], &[(0, 1)])?;
    let d1e = make_stratum(&d_graph, &Decoration::empty(2))?;
    let psi_21 = TautClass::psi(2, 1, 1)?;
    let first_part = multiply(&alpha, &d1e.checked_sub(&psi_21)?)?;
    let tail_sign = if flip_sign { qi(1) } else { qi(-1) };
    let psi_tail = TautClass::psi(1, 1, 1)?.scale(&tail_sign);
    let rhs = FactoredClass::tensor(&by_factor(&first_part, &tail_one))?
        .checked_add(&FactoredClass::tensor(&by_factor(&alpha, &psi_tail))?)?;
    let expansion_ok = lhs == rhs;

    let projected = project_onto(&lhs, keep)?;
    let projection_ok = projected == alpha.scale(&qr(-1, 24));
    Ok((expansion_ok, projection_ok))
}

/// Random classes on one space: a short combination of basis generators
/// with small rational coefficients.
struct Sampler {
    g: u32,
    n: u32,
    bases: Vec<Vec<DecoratedStratum>>,
}

impl Sampler {
    fn new(g: u32, n: u32) -> Result<Self> {
        let dim = (3 * g as i64 - 3 + n as i64).max(0) as usize;
        let bases = (0..=dim)
            .map(|k| generator_basis(g, n, k))
            .collect::<Result<Vec<_>>>()?;
        Ok(Sampler { g, n, bases })
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> Result<TautClass> {
        let mut t = TautClass::zero(self.g, self.n);
        for _ in 0..rng.random_range(1..=3usize) {
            let basis = &self.bases[rng.random_range(0..self.bases.len())];
            let s = &basis[rng.random_range(0..basis.len())];
            let c = qr(rng.random_range(-4i64..=4), rng.random_range(1i64..=4));
            t = t.checked_add(&singleton(s)?.scale(&c))?;
        }
        Ok(t)
    }
}

/// Seeded spot check of the projection formula across a forgetful map and
/// an elliptic tail gluing.
fn projection_spot_check(seed: u64, pairs: usize) -> Result<bool> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut all_ok = true;

    let up = Sampler::new(0, 6)?;
    let down = Sampler::new(0, 5)?;
    for _ in 0..pairs / 2 {
        let x = up.sample(&mut rng)?;
        let y = down.sample(&mut rng)?;
        let lhs = integrate_top(&multiply(&pushforward_forgetful(&x)?, &y)?)?;
        let rhs = integrate_top(&multiply(&x, &pullback_forgetful(&y)?)?)?;
        all_ok &= lhs == rhs;
    }

    let gamma = StableGraph::from_edge_list(vec![0, 1], vec![vec![1, 2], vec![]], &[(0, 1)])?;
    let spec = GluingMapSpec::new(&gamma)?;
    let samplers = spec
        .factors()
        .iter()
        .map(|&(g, n)| Sampler::new(g, n))
        .collect::<Result<Vec<_>>>()?;
    let ambient = Sampler::new(1, 2)?;
    for _ in 0..pairs - pairs / 2 {
        let parts = samplers
            .iter()
            .map(|s| s.sample(&mut rng))
            .collect::<Result<Vec<_>>>()?;
        let x = FactoredClass::tensor(&parts)?;
        let y = ambient.sample(&mut rng)?;
        let lhs = integrate_top(&multiply(&pushforward_gluing(&spec, &x)?, &y)?)?;
        let rhs = multiply_factored(&x, &pullback_gluing(&spec, &y)?)?.integrate()?;
        all_ok &= lhs == rhs;
    }
    Ok(all_ok)
}

fn cmd_verify_lemmas(args: VerifyLemmasArgs) -> Result<u8> {
    let cfg = load_config(&args.common)?;
    let settings = settings(&args.common, &cfg)?;
    let g = args.g.or(config_uint(&cfg, "g")?.map(|v| v as u32));
    let n = args.n.or(config_uint(&cfg, "n")?.map(|v| v as u32));
    let restricted = match (g, n) {
        (Some(g), Some(n)) => Some((g, n)),
        (None, None) => None,
        _ => {
            return Err(Error::InvalidInput(
                "a restriction needs both --g and --n".into(),
            ))
        }
    };

    let mut identities: Vec<(String, bool)> = Vec::new();
    match restricted {
        Some((g, n)) => {
            let (count, ok) = forgetful_inversion_suite(g, n)?;
            identities.push((
                format!(
                    "forgetful inversion on genus {g} with {} ({count} generators)",
                    counted(n as usize, "marking")
                ),
                ok,
            ));
        }
        None => {
            for (g, n) in [(1u32, 1u32), (0, 4)] {
                let (count, ok) = forgetful_inversion_suite(g, n)?;
                identities.push((
                    format!(
                        "forgetful inversion on genus {g} with {} ({count} generators)",
                        counted(n as usize, "marking")
                    ),
                    ok,
                ));
            }
            let (expansion_ok, projection_ok) =
                elliptic_tail_suite(args.inject_sign_error)?;
            identities.push((
                "elliptic tail self-intersection expansion".to_string(),
                expansion_ok,
            ));
            identities.push((
                "elliptic tail projection equals -1/24".to_string(),
                projection_ok,
            ));
            let spot = projection_spot_check(settings.seed, 20)?;
            identities.push((
                format!("projection formula, 20 seeded pairs (seed {})", settings.seed),
                spot,
            ));
        }
    }

    let all_passed = identities.iter().all(|(_, ok)| *ok);
    let mut table = String::new();
    for (name, ok) in &identities {
        let _ = writeln!(table, "{}: {}", name, if *ok { "PASS" } else { "FAIL" });
    }
    let _ = writeln!(
        table,
        "{}",
        if all_passed {
            "all identities pass"
        } else {
            "IDENTITY FAILURE"
        }
    );
    let json = json!({
        "seed": settings.seed,
        "identities": identities
            .iter()
            .map(|(name, ok)| json!({"name": name, "passed": ok}))
            .collect::<Vec<_>>(),
        "all_passed": all_passed,
    });
    emit(&settings, &json, &table)?;
    Ok(if all_passed { 0 } else { 3 })
}

// ---------------------------------------------------------------------------
// pullback

fn cmd_pullback(args: PullbackArgs) -> Result<u8> {
    let cfg = load_config(&args.common)?;
    let settings = settings(&args.common, &cfg)?;
    let loops = args
        .loops
        .or(config_uint(&cfg, "loops")?.map(|v| v as usize))
        .unwrap_or(0);
    let source_genus = 2 + loops as u32;

    let target = StableGraph::from_edge_list(vec![2], vec![vec![]], &vec![(0, 0); loops])?;
    let data = MonodromyData::bielliptic(source_genus)?;
    let pullback = pullback_hurwitz(&target, &data, settings.budget)?;

    let counts = pullback.classification_counts();
    let bielliptic_terms = counts.get("bielliptic multiple").copied().unwrap_or(0);
    if bielliptic_terms > 0 && !q_is_positive(pullback.bielliptic_total()) {
        return Err(Error::Internal(format!(
            "the bielliptic coefficient must be positive, got {}",
            q_to_string(pullback.bielliptic_total())
        )));
    }

    let mut table = format!(
        "bielliptic pullback over the {loops}-loop tower: source genus {source_genus}, \
         {}, {}\n",
        counted(data.num_branch_points(), "branch point"),
        counted(pullback.terms().len(), "structure")
    );
    for (label, count) in &counts {
        let _ = writeln!(table, "  {label}: {count}");
    }
    let _ = writeln!(
        table,
        "bielliptic coefficient: {}",
        q_to_string(pullback.bielliptic_total())
    );
    for (i, term) in pullback.terms().iter().enumerate() {
        let graph = term.structure().source().graph();
        let _ = writeln!(
            table,
            "  [{i}] {}, {}, genera {:?}: {}",
            counted(graph.num_vertices(), "vertex"),
            counted(graph.num_edges(), "edge"),
            graph.genera(),
            term.classification()
        );
    }

    let json = json!({
        "loops": loops,
        "source_genus": source_genus,
        "branch_points": data.num_branch_points(),
        "pullback": pullback.to_json(),
    });
    emit(&settings, &json, &table)
}
