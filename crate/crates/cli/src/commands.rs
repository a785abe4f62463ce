//! One function per subcommand. Each returns what goes to stdout plus resolved values for the
//! manifest.

use std::io::Write;
use std::path::PathBuf;

use clap::{Args, ValueEnum};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use spinlab::counting::{deterministic_count_budget, CountingPlan, Oracle, DEFAULT_TERM_BUDGET};
use spinlab::exact::{
    chain_diagnostics, exact_distribution_capped, field_dynamics_kernel, glauber_kernel,
    max_over_pinnings, proximal_kernel, write_distribution_csv, write_matrix_csv, Encoding,
};
use spinlab::graphs::{
    gen_bounded_degree, gen_random_regular, gen_regular_bipartite, gen_symmetric_bipartite,
    tree_graph, TreeKind, DEFAULT_NODE_BUDGET,
};
use spinlab::lowerbound::{
    alpha_table, anti_concentration_ratio, coeff_tables_hardcore, coeff_tables_ising,
    critical_point_hardcore, critical_point_ising, default_exponent, gaussian_ratio_check, CoeffTable,
    Family,
};
use spinlab::models::beta_c;
use spinlab::rng::{stream, Purpose};
use spinlab::samplers::{
    config_hex, magnetization, run_chain_with, Chain, Init, InnerSpec, RunParams,
};
use spinlab::spectral::{
    coupling_independence_estimate, extinction_probability, rank_one_si_bound, sample_ary,
    write_pmf_csv, Activation, Explored,
};

use crate::error::{bad, CliError, CliResult};
use crate::model::{read_graph, resolve_beta, state_cap, ModelArgs};
use crate::output::{num, to_json, with_file};

pub struct Report {
    pub stdout: String,
    pub resolved: Value,
    pub outputs: Vec<PathBuf>,
}

impl Report {
    fn json(value: Value, resolved: Value, outputs: Vec<PathBuf>) -> Report {
        let mut stdout = to_json(&value);
        stdout.push('\n');
        Report { stdout, resolved, outputs }
    }
}

fn need<T: Clone>(value: &Option<T>, flag: &str) -> CliResult<T> {
    value.clone().ok_or_else(|| CliError::Param(format!("--{flag} is required")))
}

fn nums(xs: impl IntoIterator<Item = f64>) -> Value {
    Value::Array(xs.into_iter().map(num).collect())
}

// ---------------------------------------------------------------- gen

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GenFamily {
    /// Union of Δ perfect matchings between two sides of n vertices, coincident edges merged.
    IsingBipartite,
    /// Same union keeping parallel edges.
    IsingBipartiteMulti,
    /// Symmetric bipartite family on 4n vertices.
    HardcoreBipartite,
    /// Uniform simple Δ-regular graph on n vertices.
    RandomRegular,
    /// Random graph on n vertices with maximum degree at most Δ.
    BoundedDegree,
    /// Δ-regular tree truncated at --depth.
    TreeRegular,
    /// d-ary tree (d = Δ) truncated at --depth.
    TreeAry,
}

#[derive(Args, Clone, Debug, Serialize, Deserialize)]
pub struct GenArgs {
    #[arg(long, value_enum)]
    pub family: Option<GenFamily>,
    /// Vertices (per side for the bipartite families).
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long, default_value_t = 3)]
    pub delta: usize,
    /// Edge probability for bounded-degree.
    #[arg(long, default_value_t = 0.5)]
    pub p: f64,
    #[arg(long, default_value_t = 3)]
    pub depth: usize,
    #[arg(long, default_value_t = DEFAULT_NODE_BUDGET)]
    pub node_budget: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn gen(a: &GenArgs) -> CliResult<Report> {
    let family = need(&a.family, "family")?;
    let out = need(&a.out, "out")?;
    let n = || need(&a.n, "n");
    let g = match family {
        GenFamily::IsingBipartite => gen_regular_bipartite(n()?, a.delta, a.seed, false)?,
        GenFamily::IsingBipartiteMulti => gen_regular_bipartite(n()?, a.delta, a.seed, true)?,
        GenFamily::HardcoreBipartite => gen_symmetric_bipartite(n()?, a.delta, a.seed)?,
        GenFamily::RandomRegular => gen_random_regular(n()?, a.delta, a.seed)?,
        GenFamily::BoundedDegree => gen_bounded_degree(n()?, a.delta, a.p, a.seed)?,
        GenFamily::TreeRegular => tree_graph(TreeKind::Regular(a.delta), a.depth, a.node_budget)?,
        GenFamily::TreeAry => tree_graph(TreeKind::Ary(a.delta), a.depth, a.node_budget)?,
    };
    std::fs::write(&out, g.to_text()?)?;
    let summary = json!({
        "n": g.n(),
        "m": g.m(),
        "max_degree": g.max_degree(),
        "multigraph": g.is_multigraph(),
        "bipartite": g.bipartition().is_some(),
        "out": out,
    });
    Ok(Report::json(summary, Value::Null, vec![out]))
}

// ---------------------------------------------------------------- exact

#[derive(Args, Clone, Debug, Serialize, Deserialize)]
pub struct ExactArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub model: ModelArgs,
    /// Also maximise λ_max(Ψ) over every feasible pinning.
    #[arg(long)]
    pub pinnings: bool,
    /// CSV `mask,log_prob` of the full distribution.
    #[arg(long)]
    pub dist_out: Option<PathBuf>,
    /// CSV of the influence matrix Ψ.
    #[arg(long)]
    pub influence_out: Option<PathBuf>,
    /// CSV of the covariance matrix in the natural encoding.
    #[arg(long)]
    pub covariance_out: Option<PathBuf>,
}

pub fn exact(a: &ExactArgs) -> CliResult<Report> {
    let loaded = a.model.load()?;
    let model = &loaded.model;
    let dist = exact_distribution_capped(model, state_cap()?)?;
    let moments = dist.moments();
    let mut out = json!({
        "n": model.n(),
        "log_z": num(dist.log_z()),
        "lambda_max": num(moments.lambda_max()),
        "marginals": nums(moments.p1.iter().copied()),
    });
    if a.pinnings {
        let (lam, pinned, values) = max_over_pinnings(&dist)?;
        out["max_over_pinnings"] = json!({
            "lambda_max": num(lam),
            "pinned_mask": pinned,
            "values_mask": values,
        });
    }
    let mut outputs = Vec::new();
    if let Some(p) = &a.dist_out {
        with_file(p, |w| write_distribution_csv(w, &dist))?;
        outputs.push(p.clone());
    }
    if let Some(p) = &a.influence_out {
        with_file(p, |w| write_matrix_csv(w, &moments.influence()))?;
        outputs.push(p.clone());
    }
    if let Some(p) = &a.covariance_out {
        with_file(p, |w| write_matrix_csv(w, &moments.covariance(Encoding::natural(model))))?;
        outputs.push(p.clone());
    }
    Ok(Report::json(out, json!({ "model": loaded.resolved }), outputs))
}

// ---------------------------------------------------------------- sample / mix

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ChainKind {
    Glauber,
    /// Field dynamics (hardcore).
    Field,
    /// Proximal sampler at θ = 1/2 (Ising).
    Proximal,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitKind {
    /// Empty set (hardcore) or all −1 (Ising).
    #[value(alias = "all-minus")]
    #[serde(alias = "all-minus")]
    Empty,
    AllPlus,
    Random,
}

#[derive(Args, Clone, Debug, Serialize, Deserialize)]
pub struct SampleArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub model: ModelArgs,
    #[arg(long, value_enum, default_value_t = ChainKind::Glauber)]
    pub chain: ChainKind,
    /// Field-dynamics noise parameter. The default follows the analysis value, not a tuned one.
    #[arg(long, default_value_t = 0.9)]
    pub theta: f64,
    /// Free components up to this size are resampled exactly in field dynamics.
    #[arg(long, default_value_t = 20)]
    pub inner_exact_cap: usize,
    /// Inner Glauber updates per free vertex for larger components (default 50·ln c).
    #[arg(long)]
    pub inner_steps_per_vertex: Option<f64>,
    /// Site updates (Glauber) or rounds (field, proximal).
    #[arg(long)]
    pub steps: Option<u64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 0)]
    pub chain_index: u64,
    #[arg(long, value_enum, default_value_t = InitKind::Empty)]
    pub init: InitKind,
    #[arg(long, default_value_t = 1)]
    pub thin: u64,
    #[arg(long, default_value_t = 0)]
    pub burn_in: u64,
    /// Batches for the magnetization standard error.
    #[arg(long, default_value_t = 20)]
    pub batches: u64,
    /// Samples CSV `step,config_hex,magnetization`.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn chain_of(kind: ChainKind, theta: f64, inner: InnerSpec) -> Chain {
    match kind {
        ChainKind::Glauber => Chain::Glauber,
        ChainKind::Field => Chain::Field { theta, inner },
        ChainKind::Proximal => Chain::Proximal,
    }
}

/// Batch-means standard error of the mean.
fn batch_stderr(xs: &[f64], batches: u64) -> f64 {
    let b = batches as usize;
    if b < 2 || xs.len() < b {
        return f64::NAN;
    }
    let size = xs.len() / b;
    let means: Vec<f64> = xs.chunks(size).take(b).map(|c| c.iter().sum::<f64>() / c.len() as f64).collect();
    let mean = means.iter().sum::<f64>() / b as f64;
    let var = means.iter().map(|m| (m - mean).powi(2)).sum::<f64>() / (b as f64 - 1.0);
    (var / b as f64).sqrt()
}

pub fn sample(a: &SampleArgs) -> CliResult<Report> {
    let loaded = a.model.load()?;
    let model = &loaded.model;
    let steps = need(&a.steps, "steps")?;
    let inner = InnerSpec { exact_cap: a.inner_exact_cap, steps_per_vertex: a.inner_steps_per_vertex };
    let mut params = RunParams::new(chain_of(a.chain, a.theta, inner), steps, a.seed);
    params.init = match a.init {
        InitKind::Empty => Init::Empty,
        InitKind::AllPlus => Init::AllPlus,
        InitKind::Random => Init::Random,
    };
    params.chain_index = a.chain_index;
    params.thin = a.thin;
    params.burn_in = a.burn_in;

    let mut csv = match &a.out {
        Some(p) => {
            let mut w = std::io::BufWriter::new(std::fs::File::create(p)?);
            writeln!(w, "step,config_hex,magnetization")?;
            Some(w)
        }
        None => None,
    };
    let mut mags = Vec::new();
    let mut io_err = None;
    let summary = run_chain_with(model, &params, |t, c| {
        let m = magnetization(model, c);
        mags.push(m);
        if let (Some(w), None) = (csv.as_mut(), io_err.as_ref()) {
            if let Err(e) = writeln!(w, "{t},{},{m:.16e}", config_hex(c)) {
                io_err = Some(e);
            }
        }
    })?;
    if let Some(e) = io_err {
        return Err(e.into());
    }
    if let Some(w) = csv.as_mut() {
        w.flush()?;
    }
    let out = json!({
        "samples": summary.samples,
        "magnetization_mean": num(summary.magnetization_mean),
        "magnetization_var": num(summary.magnetization_var),
        "magnetization_stderr": num(batch_stderr(&mags, a.batches)),
        "means": nums(summary.means.iter().copied()),
        "inner_glauber_steps": summary.inner_glauber_steps,
        "approximate_inner_rounds": summary.approximate_inner_rounds,
    });
    Ok(Report::json(out, json!({ "model": loaded.resolved }), a.out.iter().cloned().collect()))
}

#[derive(Args, Clone, Debug, Serialize, Deserialize)]
pub struct MixArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub model: ModelArgs,
    #[arg(long, value_enum, default_value_t = ChainKind::Glauber)]
    pub chain: ChainKind,
    /// θ for field dynamics (default 0.9); the proximal kernel uses 1/2.
    #[arg(long)]
    pub theta: Option<f64>,
    /// TV curve at t = 1, 2, 4, …, 2^max_log2_t.
    #[arg(long, default_value_t = 10)]
    pub max_log2_t: u32,
    /// CSV of the dense kernel, rows and columns in state order.
    #[arg(long)]
    pub kernel_out: Option<PathBuf>,
}

pub fn mix(a: &MixArgs) -> CliResult<Report> {
    let loaded = a.model.load()?;
    let model = &loaded.model;
    let dist = exact_distribution_capped(model, state_cap()?)?;
    let (kernel, theta) = match a.chain {
        ChainKind::Glauber => (glauber_kernel(model)?, None),
        ChainKind::Field => {
            let t = a.theta.unwrap_or(0.9);
            (field_dynamics_kernel(model, t)?, Some(t))
        }
        ChainKind::Proximal => {
            let t = a.theta.unwrap_or(0.5);
            (proximal_kernel(model, t)?, Some(t))
        }
    };
    let diag = chain_diagnostics(&kernel, &dist, a.max_log2_t)?;
    let pi = dist.restrict(kernel.states());
    let curve: Vec<Value> = diag.tv_curve.iter().map(|&(t, tv)| json!([t, num(tv)])).collect();
    let out = json!({
        "states": kernel.size(),
        "gap": num(diag.gap),
        "relaxation_time": num(1.0 / diag.gap),
        "tensorization_constant": num(diag.tensorization_constant),
        "tv_curve": curve,
        "row_sum_error": num(kernel.row_sum_error()),
        "stationarity_error": num(kernel.stationarity_error(&pi)),
        "reversibility_error": num(kernel.reversibility_error(&pi)),
    });
    let mut outputs = Vec::new();
    if let Some(p) = &a.kernel_out {
        with_file(p, |w| write_matrix_csv(w, kernel.matrix()))?;
        outputs.push(p.clone());
    }
    let resolved = json!({ "model": loaded.resolved, "theta": theta.map(num) });
    Ok(Report::json(out, resolved, outputs))
}

// ---------------------------------------------------------------- spectral

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ActivationKind {
    Exact,
    Bound,
}

#[derive(Args, Clone, Debug, Serialize, Deserialize)]
pub struct SpectralArgs {
    /// Graph for the coupling-independence estimate.
    #[arg(long)]
    pub graph: Option<PathBuf>,
    /// Number, `critical` or `critical-antiferro` (default).
    #[arg(long, allow_hyphen_values = true)]
    pub beta: Option<String>,
    #[arg(long, default_value_t = 0)]
    pub vertex: usize,
    #[arg(long, default_value_t = 1000)]
    pub trials: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = ActivationKind::Exact)]
    pub activation: ActivationKind,
    /// Comma-separated vector u for the rank-one bound (replaces the graph estimate).
    #[arg(long, allow_hyphen_values = true)]
    pub rank_one: Option<String>,
}

pub fn spectral(a: &SpectralArgs) -> CliResult<Report> {
    if let Some(spec) = &a.rank_one {
        if a.graph.is_some() {
            return bad("--rank-one excludes --graph");
        }
        let u = spec
            .split(',')
            .map(|s| s.trim().parse::<f64>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| CliError::Param(format!("--rank-one: {e}")))?;
        let bound = rank_one_si_bound(&u)?;
        let norm2: f64 = u.iter().map(|x| x * x).sum();
        let out = json!({ "rank_one_bound": num(bound), "norm_squared": num(norm2) });
        return Ok(Report::json(out, Value::Null, Vec::new()));
    }
    let g = read_graph(&need(&a.graph, "graph")?)?;
    let spec = a.beta.as_deref().unwrap_or("critical-antiferro");
    let beta = resolve_beta(spec, g.max_degree())?;
    let mode = match a.activation {
        ActivationKind::Exact => Activation::Exact,
        ActivationKind::Bound => Activation::Bound,
    };
    let est = coupling_independence_estimate(&g, a.vertex, beta, mode, a.trials, a.seed)?;
    let out = json!({
        "n": g.n(),
        "estimate": num(est.value),
        "stderr": num(est.stderr),
        "tanh_abs_beta": num(beta.abs().tanh()),
    });
    let resolved = json!({ "beta": num(beta), "beta_spec": spec, "max_degree": g.max_degree() });
    Ok(Report::json(out, resolved, Vec::new()))
}

// ---------------------------------------------------------------- percolate

#[derive(Args, Clone, Debug, Serialize, Deserialize)]
pub struct PercolateArgs {
    #[arg(long)]
    pub d: Option<u64>,
    #[arg(long)]
    pub p: Option<f64>,
    /// Largest ℓ in the pmf table.
    #[arg(long, default_value_t = 1000)]
    pub pmf_max: u64,
    /// Write the pmf CSV here and print a JSON summary; otherwise the CSV goes to stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Monte-Carlo explorations for the summary.
    #[arg(long, default_value_t = 0)]
    pub trials: u64,
    /// Explorations reaching this many nodes count as infinite.
    #[arg(long, default_value_t = 100_000)]
    pub cap: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

pub fn percolate(a: &PercolateArgs) -> CliResult<Report> {
    let d = need(&a.d, "d")?;
    let p = need(&a.p, "p")?;
    let Some(out) = &a.out else {
        if a.trials > 0 {
            return bad("--trials needs --out (the summary goes to stdout)");
        }
        let mut buf = Vec::new();
        write_pmf_csv(&mut buf, d, p, a.pmf_max)?;
        let stdout = String::from_utf8(buf).expect("csv is ascii");
        return Ok(Report { stdout, resolved: Value::Null, outputs: Vec::new() });
    };
    with_file(out, |w| write_pmf_csv(w, d, p, a.pmf_max))?;
    let mass: f64 = (1..=a.pmf_max)
        .map(|ell| spinlab::spectral::ary_percolation_pmf(d, p, ell))
        .sum::<spinlab::Result<f64>>()?;
    let mut summary = json!({
        "d": d,
        "p": num(p),
        "pmf_max": a.pmf_max,
        "pmf_mass": num(mass),
        "extinction_probability": num(extinction_probability(d, p)?),
    });
    if a.trials > 0 {
        let capped = (0..a.trials)
            .into_par_iter()
            .filter(|&t| {
                let mut rng = stream(a.seed, t, Purpose::Percolation);
                sample_ary(d, p, a.cap, &mut rng) == Explored::Capped
            })
            .count();
        let q = capped as f64 / a.trials as f64;
        summary["survival_mc"] = json!({
            "trials": a.trials,
            "cap": a.cap,
            "value": num(q),
            "stderr": num((q * (1.0 - q) / a.trials as f64).sqrt()),
        });
    }
    Ok(Report::json(summary, Value::Null, vec![out.clone()]))
}

// ---------------------------------------------------------------- count

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OracleKind {
    Weitz,
    Exact,
}

#[derive(Args, Clone, Debug, Serialize, Deserialize)]
pub struct CountArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub model: ModelArgs,
    #[arg(long, default_value_t = 0.5)]
    pub theta: f64,
    #[arg(long, default_value_t = 0.05)]
    pub eps: f64,
    #[arg(long, default_value_t = 0.05)]
    pub eps0: f64,
    /// Subset-size cutoff; defaults to ⌈e²nθ/(1−θ) + log(2/ε)⌉.
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long, value_enum, default_value_t = OracleKind::Weitz)]
    pub oracle: OracleKind,
    #[arg(long, default_value_t = DEFAULT_TERM_BUDGET)]
    pub term_budget: u64,
}

pub fn count(a: &CountArgs) -> CliResult<Report> {
    let loaded = a.model.load()?;
    let model = &loaded.model;
    let mut plan = CountingPlan::new(model.n(), a.theta, a.eps, a.eps0)?;
    if let Some(k) = a.k {
        plan = plan.with_k(k);
    }
    let oracle = match a.oracle {
        OracleKind::Weitz => Oracle::Weitz,
        OracleKind::Exact => Oracle::Exact,
    };
    let res = deterministic_count_budget(model, &plan, oracle, a.term_budget)?;
    let cert = &res.certificate;
    let out = json!({
        "log_Z_hat": num(res.log_z_hat),
        "k": cert.k,
        "n_terms": cert.terms,
        "feasible_terms": cert.feasible_terms,
        "max_term": num(cert.max_term),
        "epsilon": num(plan.epsilon),
        "epsilon0": num(plan.epsilon0),
        "theta": num(plan.theta),
        "oracle": {
            "marginal_calls": cert.oracle.marginal_calls,
            "cache_hits": cert.oracle.cache_hits,
            "max_depth": cert.oracle.max_depth,
        },
    });
    Ok(Report::json(out, json!({ "model": loaded.resolved, "k": plan.k }), Vec::new()))
}

// ---------------------------------------------------------------- lowerbound

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LbFamily {
    Hardcore,
    Ising,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TableKind {
    Alpha,
    Numerator,
    Denominator,
}

#[derive(Args, Clone, Debug, Serialize, Deserialize)]
pub struct LowerboundArgs {
    #[arg(long, value_enum)]
    pub family: Option<LbFamily>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long, default_value_t = 3)]
    pub delta: usize,
    /// Tail fraction for the anti-concentration ratio.
    #[arg(long, default_value_t = 0.1)]
    pub eta: f64,
    /// Tail exponent (default 2/3 hardcore, 3/4 Ising).
    #[arg(long)]
    pub exponent: Option<f64>,
    /// Run the Gaussian-window check with radius 2n^exponent.
    #[arg(long)]
    pub gaussian: bool,
    /// Locate the critical point of the limiting landscape U.
    #[arg(long)]
    pub critical: bool,
    #[arg(long, value_enum, default_value_t = TableKind::Alpha)]
    pub table: TableKind,
    /// CSV of the chosen table in log scale.
    #[arg(long)]
    pub table_out: Option<PathBuf>,
}

pub fn lowerbound(a: &LowerboundArgs) -> CliResult<Report> {
    let family = match need(&a.family, "family")? {
        LbFamily::Hardcore => Family::Hardcore,
        LbFamily::Ising => Family::Ising,
    };
    let n = need(&a.n, "n")?;
    let (num_t, den_t) = match family {
        Family::Hardcore => coeff_tables_hardcore(n, a.delta)?,
        Family::Ising => coeff_tables_ising(n, a.delta, -beta_c(a.delta)?)?,
    };
    let alpha = alpha_table(&num_t, &den_t)?;
    let exponent = a.exponent.unwrap_or(default_exponent(family));
    let log_max = alpha.log_coeffs().iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut out = json!({
        "family": need(&a.family, "family")?,
        "n": n,
        "delta": a.delta,
        "checksum_error_numerator": num(num_t.checksum_error().unwrap_or(f64::NAN)),
        "checksum_error_denominator": num(den_t.checksum_error().unwrap_or(f64::NAN)),
        "log_alpha_total": num(alpha.log_evaluate_at_one()),
        "log_alpha_max_per_n": num(log_max / n as f64),
        "anti_concentration": num(anti_concentration_ratio(&alpha, a.eta, exponent)?),
        "exponent": num(exponent),
    });
    if a.gaussian {
        let g = gaussian_ratio_check(&alpha, exponent)?;
        out["gaussian"] = json!({
            "log_min_ratio": num(g.log_min_ratio),
            "log_max_ratio": num(g.log_max_ratio),
            "log_center_ratio": num(g.log_center_ratio),
            "spread": num(g.spread()),
            "points": g.points,
            "skipped": g.skipped,
        });
    }
    if a.critical {
        let cp = match family {
            Family::Hardcore => critical_point_hardcore(a.delta)?,
            Family::Ising => critical_point_ising(a.delta)?,
        };
        out["critical_point"] = json!({
            "point": nums(cp.point.iter().copied()),
            "value": num(cp.value),
            "gradient_norm": num(cp.gradient_norm),
            "is_local_max": cp.is_local_max(),
        });
    }
    let mut outputs = Vec::new();
    if let Some(p) = &a.table_out {
        let table: &CoeffTable = match a.table {
            TableKind::Alpha => &alpha,
            TableKind::Numerator => &num_t,
            TableKind::Denominator => &den_t,
        };
        with_file(p, |w| table.write_csv(w))?;
        outputs.push(p.clone());
    }
    Ok(Report::json(out, json!({ "exponent": num(exponent) }), outputs))
}
