//! Spin models, critical thresholds, tilting, pinning and interaction factorisation.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::param;
use crate::graphs::Graph;
use crate::{Error, Result};

/// Hardcore or Ising Gibbs distribution. Configurations are boolean vectors where `true`
/// means occupied (hardcore) or spin `+1` (Ising).
#[derive(Clone, Debug, PartialEq)]
pub enum SpinModel {
    /// `μ(I) ∝ Π_{v∈I} λ_v` over independent sets `I`.
    Hardcore { graph: Graph, fugacity: Vec<f64> },
    /// `μ(x) ∝ exp(β/2 xᵀA x + hᵀx)`; parallel edges multiply the coupling.
    IsingGraph { graph: Graph, beta: f64, fields: Vec<f64> },
    /// `μ(x) ∝ exp(½ xᵀJ x + hᵀx)` with symmetric positive semidefinite `J`.
    IsingMatrix { j: DMatrix<f64>, fields: Vec<f64> },
}

impl SpinModel {
    /// Hardcore model with uniform fugacity.
    pub fn hardcore(graph: Graph, lambda: f64) -> Result<SpinModel> {
        let n = graph.n();
        SpinModel::hardcore_with(graph, vec![lambda; n])
    }

    pub fn hardcore_with(graph: Graph, fugacity: Vec<f64>) -> Result<SpinModel> {
        if fugacity.len() != graph.n() {
            return param("one fugacity per vertex required");
        }
        if fugacity.iter().any(|&l| !(l > 0.0) || !l.is_finite()) {
            return param("fugacities must be positive and finite");
        }
        Ok(SpinModel::Hardcore { graph, fugacity })
    }

    /// Graphical Ising model on a simple graph.
    pub fn ising(graph: Graph, beta: f64, fields: Vec<f64>) -> Result<SpinModel> {
        if graph.has_parallel_edges() {
            return param("parallel edges need SpinModel::ising_multigraph");
        }
        SpinModel::ising_multigraph(graph, beta, fields)
    }

    /// Graphical Ising model where each parallel edge contributes its own `β` coupling.
    pub fn ising_multigraph(graph: Graph, beta: f64, fields: Vec<f64>) -> Result<SpinModel> {
        if fields.len() != graph.n() {
            return param("one field per vertex required");
        }
        if !beta.is_finite() || fields.iter().any(|h| !h.is_finite()) {
            return param("beta and fields must be finite");
        }
        Ok(SpinModel::IsingGraph { graph, beta, fields })
    }

    /// Ising model with an explicit interaction matrix.
    pub fn ising_matrix(j: DMatrix<f64>, fields: Vec<f64>) -> Result<SpinModel> {
        let n = j.nrows();
        if j.ncols() != n || fields.len() != n {
            return param("interaction matrix must be n×n with n fields");
        }
        let scale = j.amax().max(1.0);
        for a in 0..n {
            for b in 0..a {
                if (j[(a, b)] - j[(b, a)]).abs() > 1e-12 * scale {
                    return param("interaction matrix must be symmetric");
                }
            }
        }
        if n > 0 {
            let min = SymmetricEigen::new(j.clone()).eigenvalues.min();
            if min < -1e-9 * scale {
                return param(format!("interaction matrix is not PSD (min eigenvalue {min:e})"));
            }
        }
        Ok(SpinModel::IsingMatrix { j, fields })
    }

    pub fn n(&self) -> usize {
        match self {
            SpinModel::Hardcore { graph, .. } | SpinModel::IsingGraph { graph, .. } => graph.n(),
            SpinModel::IsingMatrix { j, .. } => j.nrows(),
        }
    }

    pub fn is_hardcore(&self) -> bool {
        matches!(self, SpinModel::Hardcore { .. })
    }

    pub fn graph(&self) -> Option<&Graph> {
        match self {
            SpinModel::Hardcore { graph, .. } | SpinModel::IsingGraph { graph, .. } => Some(graph),
            SpinModel::IsingMatrix { .. } => None,
        }
    }

    /// Per-vertex fields of an Ising model.
    pub fn fields(&self) -> Option<&[f64]> {
        match self {
            SpinModel::IsingGraph { fields, .. } | SpinModel::IsingMatrix { fields, .. } => {
                Some(fields)
            }
            SpinModel::Hardcore { .. } => None,
        }
    }
}

/// Partial configuration: vertex → `true` (occupied / `+1`) or `false`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Pinning {
    pub assignments: BTreeMap<usize, bool>,
}

impl Pinning {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_pairs(pairs: &[(usize, bool)]) -> Result<Pinning> {
        let mut assignments = BTreeMap::new();
        for &(v, s) in pairs {
            if assignments.insert(v, s).is_some() {
                return param(format!("vertex {v} pinned twice"));
            }
        }
        Ok(Pinning { assignments })
    }

    pub fn pin(mut self, v: usize, value: bool) -> Self {
        self.assignments.insert(v, value);
        self
    }

    pub fn is_empty(&self) -> bool {
        self.assignments.is_empty()
    }

    pub fn len(&self) -> usize {
        self.assignments.len()
    }
}

/// `λ_c(Δ) = (Δ−1)^{Δ−1} / (Δ−2)^Δ`.
pub fn lambda_c(delta: usize) -> Result<f64> {
    if delta < 3 {
        return param("lambda_c needs Δ >= 3");
    }
    let d = delta as f64;
    Ok(((d - 1.0) * (d - 1.0).ln() - d * (d - 2.0).ln()).exp())
}

/// `β_c(Δ) = artanh(1/(Δ−1))`.
pub fn beta_c(delta: usize) -> Result<f64> {
    if delta < 3 {
        return param("beta_c needs Δ >= 3");
    }
    Ok((1.0 / (delta as f64 - 1.0)).atanh())
}

/// Unique positive fixed point of `x = λ/(1+x)^d`.
pub fn tree_fixed_point(lambda: f64, d: usize) -> Result<f64> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return param("tree_fixed_point needs λ > 0");
    }
    let d = d as f64;
    let f = |x: f64| x - lambda * (-d * x.ln_1p()).exp();
    let fp = |x: f64| 1.0 + d * lambda * (-(d + 1.0) * x.ln_1p()).exp();
    let (mut lo, mut hi) = (0.0, lambda);
    let mut x = lambda / (1.0 + lambda).powf(d).max(1.0);
    for _ in 0..200 {
        let fx = f(x);
        if fx.abs() < 1e-15 * (1.0 + x) {
            return Ok(x);
        }
        if fx > 0.0 {
            hi = x;
        } else {
            lo = x;
        }
        let newton = x - fx / fp(x);
        x = if newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
        if hi - lo < 1e-300 {
            break;
        }
    }
    if f(x).abs() < 1e-12 {
        Ok(x)
    } else {
        Err(Error::Numeric(format!("tree recursion fixed point did not converge for λ={lambda}")))
    }
}

/// `δ* = 1 − d·x̂/(1+x̂)` with `d = Δ−1`; zero at `λ_c(Δ)`, positive below it.
pub fn uniqueness_slack(lambda: f64, delta: usize) -> Result<f64> {
    if delta < 3 {
        return param("uniqueness_slack needs Δ >= 3");
    }
    let d = delta - 1;
    let x = tree_fixed_point(lambda, d)?;
    Ok(1.0 - d as f64 * x / (1.0 + x))
}

/// Unnormalised log-weight of a full configuration (`-inf` off the support).
pub fn log_weight(model: &SpinModel, config: &[bool]) -> f64 {
    assert_eq!(config.len(), model.n(), "configuration length must match n");
    let spin = |b: bool| if b { 1.0 } else { -1.0 };
    match model {
        SpinModel::Hardcore { graph, fugacity } => {
            let mut lw = 0.0;
            for (&(u, v), _) in graph.edges().iter().zip(0..) {
                if config[u] && config[v] {
                    return f64::NEG_INFINITY;
                }
            }
            for (v, &occ) in config.iter().enumerate() {
                if occ {
                    lw += fugacity[v].ln();
                }
            }
            lw
        }
        SpinModel::IsingGraph { graph, beta, fields } => {
            let mut lw = 0.0;
            for &(u, v) in graph.edges() {
                lw += beta * spin(config[u]) * spin(config[v]);
            }
            for (v, &s) in config.iter().enumerate() {
                lw += fields[v] * spin(s);
            }
            lw
        }
        SpinModel::IsingMatrix { j, fields } => {
            let x: Vec<f64> = config.iter().map(|&b| spin(b)).collect();
            let n = x.len();
            let mut q = 0.0;
            for a in 0..n {
                for b in 0..n {
                    q += j[(a, b)] * x[a] * x[b];
                }
            }
            0.5 * q + fields.iter().zip(&x).map(|(h, s)| h * s).sum::<f64>()
        }
    }
}

/// Reweights every `+1`/occupied coordinate by `(1−θ)`.
pub fn tilt(model: &SpinModel, theta: f64) -> Result<SpinModel> {
    if !(0.0..1.0).contains(&theta) {
        return param("tilt needs θ in [0, 1)");
    }
    let shift = 0.5 * (-theta).ln_1p();
    Ok(match model {
        SpinModel::Hardcore { graph, fugacity } => SpinModel::Hardcore {
            graph: graph.clone(),
            fugacity: fugacity.iter().map(|l| l * (1.0 - theta)).collect(),
        },
        SpinModel::IsingGraph { graph, beta, fields } => SpinModel::IsingGraph {
            graph: graph.clone(),
            beta: *beta,
            fields: fields.iter().map(|h| h + shift).collect(),
        },
        SpinModel::IsingMatrix { j, fields } => SpinModel::IsingMatrix {
            j: j.clone(),
            fields: fields.iter().map(|h| h + shift).collect(),
        },
    })
}

/// Interaction matrix `J` with `μ(x) ∝ exp(½xᵀJx + hᵀx)`, shifted on the diagonal to be PSD.
/// For a graph with `β ≥ 0` this is `β(ΔI + A)`; for `β < 0` it is `βA − λ_min(βA) I`.
/// Diagonal shifts add a constant to the exponent and leave `μ` unchanged.
pub fn interaction_matrix(model: &SpinModel) -> Result<DMatrix<f64>> {
    match model {
        SpinModel::Hardcore { .. } => param("interaction matrix is defined for Ising models only"),
        SpinModel::IsingMatrix { j, .. } => Ok(j.clone()),
        SpinModel::IsingGraph { graph, beta, .. } => {
            let n = graph.n();
            let a = graph.adjacency_matrix() * *beta;
            if *beta >= 0.0 {
                Ok(a + DMatrix::identity(n, n) * (*beta * graph.max_degree() as f64))
            } else {
                let min = if n == 0 { 0.0 } else { SymmetricEigen::new(a.clone()).eigenvalues.min() };
                Ok(a - DMatrix::identity(n, n) * min)
            }
        }
    }
}

/// `L` (`r × n`) with `LᵀL = J`, from the eigendecomposition `J = UΛUᵀ`; eigenvalues
/// below `tol · max(1, ‖J‖_max)` are dropped.
pub fn factor_interaction(model: &SpinModel, tol: f64) -> Result<DMatrix<f64>> {
    let j = interaction_matrix(model)?;
    factor_psd(&j, tol)
}

/// Factorisation of a PSD matrix as `LᵀL`.
pub fn factor_psd(j: &DMatrix<f64>, tol: f64) -> Result<DMatrix<f64>> {
    let n = j.nrows();
    if n == 0 {
        return Ok(DMatrix::zeros(0, 0));
    }
    let scale = j.amax().max(1.0);
    let eig = SymmetricEigen::new(j.clone());
    let cut = tol * scale;
    if eig.eigenvalues.min() < -cut {
        return param(format!("matrix is not PSD (min eigenvalue {:e})", eig.eigenvalues.min()));
    }
    let keep: Vec<usize> = (0..n).filter(|&k| eig.eigenvalues[k] > cut).collect();
    let mut l = DMatrix::zeros(keep.len(), n);
    for (row, &k) in keep.iter().enumerate() {
        let s = eig.eigenvalues[k].sqrt();
        for c in 0..n {
            l[(row, c)] = s * eig.eigenvectors[(c, k)];
        }
    }
    Ok(l)
}

/// Model on the free vertices left by a pinning.
#[derive(Clone, Debug)]
pub struct Reduced {
    pub model: SpinModel,
    /// `free[i]` is the original id of reduced vertex `i`.
    pub free: Vec<usize>,
    /// Original vertices forced by the pinning without being pinned
    /// (hardcore neighbours of pinned-occupied vertices), all unoccupied.
    pub forced_out: Vec<usize>,
    /// `log_weight(original, τ ∪ σ) = log_weight(reduced, σ) + log_const`.
    pub log_const: f64,
}

impl Reduced {
    /// Full configuration from a pinning and an assignment of the free vertices.
    pub fn lift(&self, pinning: &Pinning, n: usize, sigma: &[bool]) -> Vec<bool> {
        let mut x = vec![false; n];
        for (&v, &s) in &pinning.assignments {
            x[v] = s;
        }
        for (i, &v) in self.free.iter().enumerate() {
            x[v] = sigma[i];
        }
        x
    }
}

/// Conditions `model` on `pinning` and returns the model on the remaining free vertices.
pub fn apply_pinning(model: &SpinModel, pinning: &Pinning) -> Result<Reduced> {
    let n = model.n();
    if let Some((&v, _)) = pinning.assignments.iter().next_back() {
        if v >= n {
            return param(format!("pinned vertex {v} out of range"));
        }
    }
    let pinned = |v: usize| pinning.assignments.get(&v).copied();
    match model {
        SpinModel::Hardcore { graph, fugacity } => {
            let mut forced = vec![false; n];
            let mut log_const = 0.0;
            for (&v, &occ) in &pinning.assignments {
                if occ {
                    log_const += fugacity[v].ln();
                    for &(w, _) in graph.neighbors(v) {
                        if pinned(w) == Some(true) {
                            return Err(Error::EmptySupport(format!(
                                "pinned-occupied vertices {v} and {w} are adjacent"
                            )));
                        }
                        forced[w] = true;
                    }
                }
            }
            let forced_out: Vec<usize> =
                (0..n).filter(|&v| forced[v] && pinned(v).is_none()).collect();
            let free: Vec<usize> = (0..n).filter(|&v| pinned(v).is_none() && !forced[v]).collect();
            let (sub, _) = induced(graph, &free)?;
            let fug = free.iter().map(|&v| fugacity[v]).collect();
            Ok(Reduced {
                model: SpinModel::Hardcore { graph: sub, fugacity: fug },
                free,
                forced_out,
                log_const,
            })
        }
        SpinModel::IsingGraph { graph, beta, fields } => {
            let free: Vec<usize> = (0..n).filter(|&v| pinned(v).is_none()).collect();
            let (sub, _) = induced(graph, &free)?;
            let spin = |b: bool| if b { 1.0 } else { -1.0 };
            let mut h: Vec<f64> = free.iter().map(|&v| fields[v]).collect();
            let mut log_const = 0.0;
            for (&v, &s) in &pinning.assignments {
                log_const += fields[v] * spin(s);
            }
            let index: BTreeMap<usize, usize> = free.iter().enumerate().map(|(i, &v)| (v, i)).collect();
            for &(u, v) in graph.edges() {
                match (pinned(u), pinned(v)) {
                    (Some(a), Some(b)) => log_const += beta * spin(a) * spin(b),
                    (Some(a), None) => h[index[&v]] += beta * spin(a),
                    (None, Some(b)) => h[index[&u]] += beta * spin(b),
                    (None, None) => {}
                }
            }
            Ok(Reduced {
                model: SpinModel::IsingGraph { graph: sub, beta: *beta, fields: h },
                free,
                forced_out: Vec::new(),
                log_const,
            })
        }
        SpinModel::IsingMatrix { j, fields } => {
            let free: Vec<usize> = (0..n).filter(|&v| pinned(v).is_none()).collect();
            let spin = |b: bool| if b { 1.0 } else { -1.0 };
            let pins: Vec<(usize, f64)> =
                pinning.assignments.iter().map(|(&v, &s)| (v, spin(s))).collect();
            let mut log_const = 0.0;
            for &(a, xa) in &pins {
                log_const += fields[a] * xa;
                for &(b, xb) in &pins {
                    log_const += 0.5 * j[(a, b)] * xa * xb;
                }
            }
            let k = free.len();
            let sub = DMatrix::from_fn(k, k, |r, c| j[(free[r], free[c])]);
            let h = free
                .iter()
                .map(|&v| fields[v] + pins.iter().map(|&(p, xp)| j[(v, p)] * xp).sum::<f64>())
                .collect();
            Ok(Reduced {
                model: SpinModel::IsingMatrix { j: sub, fields: h },
                free,
                forced_out: Vec::new(),
                log_const,
            })
        }
    }
}

/// Subgraph induced on `keep` (relabelled `0..keep.len()` in order) and the old→new map.
pub fn induced(g: &Graph, keep: &[usize]) -> Result<(Graph, Vec<Option<usize>>)> {
    let mut map = vec![None; g.n()];
    for (i, &v) in keep.iter().enumerate() {
        map[v] = Some(i);
    }
    let edges: Vec<(usize, usize)> = g
        .edges()
        .iter()
        .filter_map(|&(u, v)| Some((map[u]?, map[v]?)))
        .collect();
    let bip = g.bipartition().map(|b| keep.iter().map(|&v| b[v]).collect());
    Ok((Graph::new(keep.len(), &edges, g.is_multigraph(), bip)?, map))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn edge() -> Graph {
        Graph::simple(2, &[(0, 1)]).unwrap()
    }

    #[test]
    fn thresholds() {
        assert!((lambda_c(3).unwrap() - 4.0).abs() < 1e-12);
        assert!((lambda_c(4).unwrap() - 27.0 / 16.0).abs() < 1e-12);
        assert!(lambda_c(2).is_err());
        let b3 = beta_c(3).unwrap();
        assert!((b3 - 0.5 * 3f64.ln()).abs() < 1e-12);
        assert!(((2.0 * b3).exp() - 3.0).abs() < 1e-12);
        for delta in 3..=20 {
            let b = beta_c(delta).unwrap();
            let d = delta as f64;
            assert!((b.tanh() * (d - 1.0) - 1.0).abs() < 1e-12);
            assert!((b - 0.5 * (d / (d - 2.0)).ln()).abs() < 1e-12);
            let closed = (d - 1.0).powf(d - 1.0) / (d - 2.0).powf(d);
            assert!((lambda_c(delta).unwrap() / closed - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn fixed_points() {
        assert!((tree_fixed_point(4.0, 2).unwrap() - 1.0).abs() < 1e-12);
        for delta in 3..=5 {
            let d = delta - 1;
            let x = tree_fixed_point(lambda_c(delta).unwrap(), d).unwrap();
            assert!((x - 1.0 / (d as f64 - 1.0)).abs() < 1e-12);
        }
        assert!(tree_fixed_point(1e-12, 3).unwrap() < 1e-11);
        assert!(uniqueness_slack(4.0, 3).unwrap().abs() < 1e-9);
        let s = uniqueness_slack(2.0, 3).unwrap();
        assert!((s - 0.1796).abs() < 1e-3, "{s}");
        assert!(uniqueness_slack(5.0, 3).unwrap() < 0.0);
    }

    #[test]
    fn weights() {
        let m = SpinModel::hardcore(edge(), 4.0).unwrap();
        assert_eq!(log_weight(&m, &[true, true]), f64::NEG_INFINITY);
        assert_eq!(log_weight(&m, &[false, false]), 0.0);
        let m = SpinModel::ising(edge(), 0.3, vec![0.0, 0.0]).unwrap();
        assert!((log_weight(&m, &[true, true]) - 0.3).abs() < 1e-15);
    }

    #[test]
    fn tilting() {
        let m = SpinModel::hardcore(edge(), 4.0).unwrap();
        assert_eq!(tilt(&m, 0.0).unwrap(), m);
        match tilt(&m, 0.5).unwrap() {
            SpinModel::Hardcore { fugacity, .. } => assert_eq!(fugacity, vec![2.0, 2.0]),
            _ => unreachable!(),
        }
        assert!(tilt(&m, 1.0).is_err());
        let single = SpinModel::ising(Graph::simple(1, &[]).unwrap(), 0.0, vec![0.3]).unwrap();
        let t = tilt(&single, 0.5).unwrap();
        let (wp, wm) = (log_weight(&t, &[true]).exp(), log_weight(&t, &[false]).exp());
        let (op, om) = (0.3f64.exp(), (-0.3f64).exp());
        assert!((wp / (wp + wm) - 0.5 * op / (0.5 * op + om)).abs() < 1e-14);
    }

    #[test]
    fn factorisation() {
        let id = SpinModel::ising_matrix(DMatrix::identity(2, 2), vec![0.0; 2]).unwrap();
        let l = factor_interaction(&id, 1e-12).unwrap();
        assert!((l.transpose() * &l - DMatrix::<f64>::identity(2, 2)).amax() < 1e-12);
        let mf = SpinModel::ising_matrix(DMatrix::from_element(4, 4, 0.25), vec![0.0; 4]).unwrap();
        let l = factor_interaction(&mf, 1e-12).unwrap();
        assert_eq!(l.nrows(), 1);
        assert!((l.transpose() * &l - DMatrix::from_element(4, 4, 0.25)).amax() < 1e-12);
        assert!(SpinModel::ising_matrix(-DMatrix::<f64>::identity(2, 2), vec![0.0; 2]).is_err());
    }

    #[test]
    fn pinning_hardcore_edge() {
        let m = SpinModel::hardcore(edge(), 4.0).unwrap();
        let r = apply_pinning(&m, &Pinning::new()).unwrap();
        assert_eq!(r.model, m);
        let r = apply_pinning(&m, &Pinning::new().pin(0, true)).unwrap();
        assert_eq!(r.model.n(), 0);
        assert_eq!(r.forced_out, vec![1]);
        assert!((r.log_const - 4f64.ln()).abs() < 1e-15);
        let both = Pinning::new().pin(0, true).pin(1, true);
        assert!(matches!(apply_pinning(&m, &both), Err(Error::EmptySupport(_))));
    }
}
