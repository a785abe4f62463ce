//! Loading graphs and models, and resolving named thresholds.

use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};
use spinlab::exact::DIST_CAP;
use spinlab::graphs::Graph;
use spinlab::models::{beta_c, lambda_c, SpinModel};

use crate::error::{bad, CliError, CliResult};
use crate::output::num;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    Hardcore,
    Ising,
}

/// Model selection shared by every model-based command.
#[derive(Args, Clone, Debug, Default, Serialize, Deserialize)]
pub struct ModelArgs {
    /// Model family built on --graph.
    #[arg(long, value_enum)]
    pub model: Option<ModelKind>,
    /// Graph file as written by `gen`.
    #[arg(long)]
    pub graph: Option<PathBuf>,
    /// JSON model description: {"type", "graph" or "j", "lambda" or "beta", "fields"}.
    #[arg(long)]
    pub model_file: Option<PathBuf>,
    /// Hardcore fugacity: a number or `critical`.
    #[arg(long)]
    pub lambda: Option<String>,
    /// Ising inverse temperature: a number, `critical` or `critical-antiferro`.
    #[arg(long, allow_hyphen_values = true)]
    pub beta: Option<String>,
    /// Uniform Ising external field.
    #[arg(long, allow_hyphen_values = true)]
    pub field: Option<f64>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum Threshold {
    Value(f64),
    Name(String),
}

impl Threshold {
    fn into_string(self) -> String {
        match self {
            Threshold::Value(x) => format!("{x:.16e}"),
            Threshold::Name(s) => s,
        }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    #[serde(rename = "type")]
    kind: ModelKind,
    graph: Option<PathBuf>,
    j: Option<Vec<Vec<f64>>>,
    lambda: Option<Threshold>,
    beta: Option<Threshold>,
    fields: Option<Vec<f64>>,
}

pub struct Loaded {
    pub model: SpinModel,
    /// Resolved parameters for the manifest.
    pub resolved: Value,
}

pub fn read_graph(path: &Path) -> CliResult<Graph> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Param(format!("cannot read graph {}: {e}", path.display())))?;
    Ok(Graph::from_text(&text)?)
}

/// `critical` → `λ_c(Δ)`, otherwise a number.
pub fn resolve_lambda(spec: &str, delta: usize) -> CliResult<f64> {
    match spec {
        "critical" => Ok(lambda_c(delta)?),
        s => parse_number(s, "lambda"),
    }
}

/// `critical` → `β_c(Δ)`, `critical-antiferro` → `−β_c(Δ)`, otherwise a number.
pub fn resolve_beta(spec: &str, delta: usize) -> CliResult<f64> {
    match spec {
        "critical" => Ok(beta_c(delta)?),
        "critical-antiferro" => Ok(-beta_c(delta)?),
        s => parse_number(s, "beta"),
    }
}

fn parse_number(s: &str, what: &str) -> CliResult<f64> {
    match s.parse::<f64>() {
        Ok(x) if x.is_finite() => Ok(x),
        _ => bad(format!("{what} must be a number or a named threshold, got `{s}`")),
    }
}

impl ModelArgs {
    pub fn load(&self) -> CliResult<Loaded> {
        if let Some(path) = &self.model_file {
            if self.model.is_some() || self.graph.is_some() {
                return bad("--model-file excludes --model and --graph");
            }
            return load_file(path, self);
        }
        let Some(kind) = self.model else {
            return bad("need --model with --graph, or --model-file");
        };
        let Some(path) = &self.graph else {
            return bad("need --graph");
        };
        let graph = read_graph(path)?;
        build(kind, Source::Graph(graph), self.lambda.as_deref(), self.beta.as_deref(), self.field, None)
    }
}

enum Source {
    Graph(Graph),
    Matrix(DMatrix<f64>),
}

fn load_file(path: &Path, args: &ModelArgs) -> CliResult<Loaded> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Param(format!("cannot read model {}: {e}", path.display())))?;
    let file: ModelFile =
        serde_json::from_str(&text).map_err(|e| CliError::Param(format!("model file: {e}")))?;
    let source = match (&file.graph, &file.j) {
        (Some(g), None) => {
            let base = path.parent().unwrap_or(Path::new("."));
            Source::Graph(read_graph(&base.join(g))?)
        }
        (None, Some(rows)) => {
            let n = rows.len();
            if rows.iter().any(|r| r.len() != n) {
                return bad("j must be a square matrix");
            }
            Source::Matrix(DMatrix::from_fn(n, n, |i, k| rows[i][k]))
        }
        _ => return bad("model file needs exactly one of `graph` and `j`"),
    };
    // flags still override the file's thresholds
    let lambda = args.lambda.clone().or(file.lambda.map(Threshold::into_string));
    let beta = args.beta.clone().or(file.beta.map(Threshold::into_string));
    build(file.kind, source, lambda.as_deref(), beta.as_deref(), args.field, file.fields)
}

fn build(
    kind: ModelKind,
    source: Source,
    lambda: Option<&str>,
    beta: Option<&str>,
    field: Option<f64>,
    fields: Option<Vec<f64>>,
) -> CliResult<Loaded> {
    let mut resolved = Map::new();
    let model = match (kind, source) {
        (ModelKind::Hardcore, Source::Graph(graph)) => {
            if beta.is_some() || field.is_some() || fields.is_some() {
                return bad("hardcore takes --lambda only");
            }
            let delta = graph.max_degree();
            let spec = lambda.unwrap_or("critical");
            let value = resolve_lambda(spec, delta)?;
            resolved.insert("lambda".into(), num(value));
            resolved.insert("lambda_spec".into(), json!(spec));
            resolved.insert("max_degree".into(), json!(delta));
            SpinModel::hardcore(graph, value)?
        }
        (ModelKind::Hardcore, Source::Matrix(_)) => return bad("a hardcore model needs a graph"),
        (ModelKind::Ising, source) => {
            if lambda.is_some() {
                return bad("ising takes --beta, not --lambda");
            }
            let n = match &source {
                Source::Graph(g) => g.n(),
                Source::Matrix(j) => j.nrows(),
            };
            let h = match (field, fields) {
                (Some(_), Some(_)) => return bad("give either a uniform field or a field vector"),
                (Some(x), None) => vec![x; n],
                (None, Some(v)) => v,
                (None, None) => vec![0.0; n],
            };
            match source {
                Source::Graph(graph) => {
                    let delta = graph.max_degree();
                    let spec = beta.unwrap_or("critical-antiferro");
                    let value = resolve_beta(spec, delta)?;
                    resolved.insert("beta".into(), num(value));
                    resolved.insert("beta_spec".into(), json!(spec));
                    resolved.insert("max_degree".into(), json!(delta));
                    SpinModel::ising_multigraph(graph, value, h)?
                }
                Source::Matrix(j) => {
                    if beta.is_some() {
                        return bad("an interaction matrix already fixes the couplings");
                    }
                    SpinModel::ising_matrix(j, h)?
                }
            }
        }
    };
    resolved.insert("type".into(), serde_json::to_value(kind).expect("enum"));
    resolved.insert("n".into(), json!(model.n()));
    Ok(Loaded { model, resolved: Value::Object(resolved) })
}

/// Vertex cap for exact enumeration from `SPINLAB_BUDGET_STATES`.
pub fn state_cap() -> CliResult<usize> {
    match std::env::var("SPINLAB_BUDGET_STATES") {
        Err(_) => Ok(DIST_CAP),
        Ok(s) => match s.trim().parse::<u64>() {
            Ok(states) if states >= 1 => Ok((states.ilog2() as usize).min(30)),
            _ => bad(format!("SPINLAB_BUDGET_STATES must be a positive integer, got `{s}`")),
        },
    }
}
