//! Deterministic approximate counting: the subset decomposition of `Z` through tilted
//! conditional partition functions, with a self-avoiding-walk-tree marginal oracle.

use std::collections::HashMap;

use crate::error::{budget, param};
use crate::exact::log_weight_table;
use crate::graphs::{closure_pinning, order_ranks, Graph, DEFAULT_NODE_BUDGET};
use crate::models::{lambda_c, Pinning, SpinModel};
use crate::numeric::{ln_binomial, LogSum};
use crate::{Error, Result};

/// Default cap on the number of subsets enumerated by [`deterministic_count`].
pub const DEFAULT_TERM_BUDGET: u64 = 10_000_000;
/// First depth of the doubling schedule.
pub const INITIAL_DEPTH: usize = 4;

/// Parameters of the decomposition `Ẑ = Σ_{|S|<k} (θ/(1−θ))^{|S|} Ẑ_{S,θ}`.
#[derive(Clone, Debug, PartialEq)]
pub struct CountingPlan {
    pub theta: f64,
    pub epsilon: f64,
    pub epsilon0: f64,
    /// `⌈e²·n·θ/(1−θ) + log(2/ε)⌉`.
    pub k: usize,
}

impl CountingPlan {
    pub fn new(n: usize, theta: f64, epsilon: f64, epsilon0: f64) -> Result<CountingPlan> {
        if !(theta > 0.0 && theta < 1.0) {
            return param("θ must lie in (0, 1)");
        }
        if !(epsilon > 0.0 && epsilon0 > 0.0 && epsilon + epsilon0 < 1.0) {
            return param("need ε, ε₀ > 0 with ε + ε₀ < 1");
        }
        let e2 = std::f64::consts::E.powi(2);
        let k = (e2 * n as f64 * theta / (1.0 - theta) + (2.0 / epsilon).ln()).ceil() as usize;
        Ok(CountingPlan { theta, epsilon, epsilon0, k })
    }

    /// Same plan with an explicit subset-size cutoff.
    pub fn with_k(mut self, k: usize) -> CountingPlan {
        self.k = k;
        self
    }
}

/// `log Z_{S,θ} = log Σ_{T ⊇ S} wt(T)(1−θ)^{|T|}` by enumeration.
pub fn z_s_theta_exact(model: &SpinModel, s: &[usize], theta: f64) -> Result<f64> {
    let table = log_weight_table(model)?;
    let n = model.n();
    let smask = subset_mask(n, s)?;
    let l1t = (-theta).ln_1p();
    let rest = ((1usize << n) - 1) & !smask;
    let mut acc = LogSum::new();
    let mut sub = rest;
    loop {
        let t = smask | sub;
        acc.add(table[t] + t.count_ones() as f64 * l1t);
        if sub == 0 {
            break;
        }
        sub = (sub - 1) & rest;
    }
    Ok(acc.value())
}

fn subset_mask(n: usize, s: &[usize]) -> Result<usize> {
    if n >= usize::BITS as usize {
        return budget("subset masks need n < 64");
    }
    let mut m = 0usize;
    for &v in s {
        if v >= n {
            return param(format!("vertex {v} out of range"));
        }
        m |= 1 << v;
    }
    Ok(m)
}

enum Kind<'a> {
    Hardcore { fugacity: &'a [f64] },
    Ising { beta: f64 },
}

/// Tree recursion on the SAW tree of the subgraph induced by `alive`.
struct Weitz<'a> {
    g: &'a Graph,
    rank: Vec<usize>,
    kind: Kind<'a>,
    alive: Vec<bool>,
    /// Effective Ising fields including contributions of pinned vertices.
    fields: Vec<f64>,
    node_budget: usize,
    nodes: usize,
}

/// `log((e^{2J} e^m + 1)/(e^m + e^{2J}))`, the message of a child with log-ratio `m`.
fn ising_message(j: f64, m: f64) -> f64 {
    if m == f64::INFINITY {
        return 2.0 * j;
    }
    if m == f64::NEG_INFINITY {
        return -2.0 * j;
    }
    let softplus = |x: f64| if x > 0.0 { x + (-x).exp().ln_1p() } else { x.exp().ln_1p() };
    let (a, b) = (m, 2.0 * j);
    let lae = a.max(b) + (-(a - b).abs()).exp().ln_1p();
    softplus(b + a) - lae
}

impl Weitz<'_> {
    fn new<'a>(g: &'a Graph, kind: Kind<'a>, alive: Vec<bool>, fields: Vec<f64>) -> Result<Weitz<'a>> {
        Ok(Weitz {
            g,
            rank: order_ranks(g.n(), None)?,
            kind,
            alive,
            fields,
            node_budget: DEFAULT_NODE_BUDGET,
            nodes: 0,
        })
    }

    /// Occupation (or `+1`) probability of `v` and whether truncation cut the tree.
    fn marginal(&mut self, v: usize, depth: Option<usize>) -> Result<(f64, bool)> {
        self.nodes = 0;
        let mut path = vec![v];
        let mut on_path = vec![false; self.g.n()];
        on_path[v] = true;
        let mut truncated = false;
        let limit = depth.unwrap_or(usize::MAX);
        match self.kind {
            Kind::Hardcore { .. } => {
                let r = self.hardcore(&mut path, &mut on_path, limit, &mut truncated)?;
                Ok((r / (1.0 + r), truncated))
            }
            Kind::Ising { .. } => {
                let m = self.ising(&mut path, &mut on_path, limit, &mut truncated)?;
                Ok((crate::numeric::sigmoid(m), truncated))
            }
        }
    }

    /// Live children of the walk's endpoint: `(vertex, multiplicity, closure pinning)`.
    fn children(&self, path: &[usize], on_path: &[bool]) -> Vec<(usize, u32, Option<i8>)> {
        let last = *path.last().expect("non-empty");
        let prev = (path.len() >= 2).then(|| path[path.len() - 2]);
        self.g
            .neighbors(last)
            .iter()
            .filter(|&&(w, _)| self.alive[w] && Some(w) != prev)
            .map(|&(w, m)| {
                let pin = on_path[w].then(|| {
                    let i = path.iter().position(|&x| x == w).expect("on path");
                    closure_pinning(&self.rank, path[i + 1], last)
                });
                (w, m, pin)
            })
            .collect()
    }

    fn tick(&mut self) -> Result<()> {
        self.nodes += 1;
        if self.nodes > self.node_budget {
            return budget(format!("SAW recursion exceeds {} nodes", self.node_budget));
        }
        Ok(())
    }

    /// `R = λ Π (1 − p_child)` as a ratio `Pr[in]/Pr[out]`.
    fn hardcore(&mut self, path: &mut Vec<usize>, on_path: &mut [bool], left: usize, cut: &mut bool) -> Result<f64> {
        self.tick()?;
        let last = *path.last().expect("non-empty");
        let Kind::Hardcore { fugacity } = self.kind else { unreachable!() };
        let children = self.children(path, on_path);
        if left == 0 {
            *cut |= !children.is_empty();
            return Ok(fugacity[last]);
        }
        let mut r = fugacity[last];
        for (w, _, pin) in children {
            match pin {
                Some(1) => return Ok(0.0),
                Some(_) => {}
                None => {
                    path.push(w);
                    on_path[w] = true;
                    let rc = self.hardcore(path, on_path, left - 1, cut);
                    on_path[w] = false;
                    path.pop();
                    r /= 1.0 + rc?;
                }
            }
        }
        Ok(r)
    }

    /// Log-ratio `log(Pr[+]/Pr[−])` at the walk's endpoint.
    fn ising(&mut self, path: &mut Vec<usize>, on_path: &mut [bool], left: usize, cut: &mut bool) -> Result<f64> {
        self.tick()?;
        let last = *path.last().expect("non-empty");
        let Kind::Ising { beta } = self.kind else { unreachable!() };
        let children = self.children(path, on_path);
        let mut m = 2.0 * self.fields[last];
        if left == 0 {
            *cut |= !children.is_empty();
            return Ok(m);
        }
        for (w, mult, pin) in children {
            let j = beta * mult as f64;
            match pin {
                Some(s) => m += 2.0 * j * s as f64,
                None => {
                    path.push(w);
                    on_path[w] = true;
                    let mc = self.ising(path, on_path, left - 1, cut);
                    on_path[w] = false;
                    path.pop();
                    m += ising_message(j, mc?);
                }
            }
        }
        Ok(m)
    }
}

/// Live vertices and effective Ising fields left by a pinning; `None` for an infeasible
/// hardcore pinning.
fn pinned_state(model: &SpinModel, pinning: &Pinning) -> Result<Option<(Vec<bool>, Vec<f64>)>> {
    let n = model.n();
    if pinning.assignments.keys().any(|&v| v >= n) {
        return param("pinned vertex out of range");
    }
    let mut alive = vec![true; n];
    for &v in pinning.assignments.keys() {
        alive[v] = false;
    }
    match model {
        SpinModel::Hardcore { graph, .. } => {
            for (&v, &occ) in &pinning.assignments {
                if occ {
                    for &(w, _) in graph.neighbors(v) {
                        if pinning.assignments.get(&w) == Some(&true) {
                            return Ok(None);
                        }
                        alive[w] = false;
                    }
                }
            }
            Ok(Some((alive, Vec::new())))
        }
        SpinModel::IsingGraph { graph, beta, fields } => {
            let mut h = fields.clone();
            for (&v, &s) in &pinning.assignments {
                let x = if s { 1.0 } else { -1.0 };
                for &(w, m) in graph.neighbors(v) {
                    h[w] += beta * m as f64 * x;
                }
            }
            Ok(Some((alive, h)))
        }
        SpinModel::IsingMatrix { .. } => param("the tree recursion needs a graphical model"),
    }
}

fn engine<'a>(model: &'a SpinModel, alive: Vec<bool>, fields: Vec<f64>) -> Result<Weitz<'a>> {
    match model {
        SpinModel::Hardcore { graph, fugacity } => Weitz::new(graph, Kind::Hardcore { fugacity }, alive, fields),
        SpinModel::IsingGraph { graph, beta, .. } => Weitz::new(graph, Kind::Ising { beta: *beta }, alive, fields),
        SpinModel::IsingMatrix { .. } => param("the tree recursion needs a graphical model"),
    }
}

/// Marginal `Pr[v occupied | pinning]` (or `Pr[v = +1 | pinning]`) from the SAW-tree recursion
/// truncated at `depth` (`None` for the full tree, which is exact).
pub fn weitz_marginal(model: &SpinModel, pinning: &Pinning, v: usize, depth: Option<usize>) -> Result<f64> {
    if v >= model.n() {
        return param(format!("vertex {v} out of range"));
    }
    if let Some(&s) = pinning.assignments.get(&v) {
        return Ok(if s { 1.0 } else { 0.0 });
    }
    let Some((alive, fields)) = pinned_state(model, pinning)? else {
        return Err(Error::EmptySupport("pinned-occupied vertices are adjacent".into()));
    };
    if !alive[v] {
        return Ok(0.0);
    }
    Ok(engine(model, alive, fields)?.marginal(v, depth)?.0)
}

/// Statistics of the marginal oracle.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct OracleStats {
    pub marginal_calls: u64,
    pub cache_hits: u64,
    pub max_depth: usize,
}

/// Marginals along the telescoping product, memoised by live set and vertex.
struct Telescoper<'a> {
    model: &'a SpinModel,
    tol: f64,
    cache: HashMap<(u64, u64, usize), f64>,
    stats: OracleStats,
}

impl<'a> Telescoper<'a> {
    fn new(model: &'a SpinModel, eps1: f64) -> Telescoper<'a> {
        Telescoper { model, tol: eps1, cache: HashMap::new(), stats: OracleStats::default() }
    }

    /// `Pr[v out]` with relative accuracy about `ε₁`, by doubling the depth.
    fn out_probability(&mut self, alive: &[bool], plus: u64, fields: &[f64], v: usize) -> Result<f64> {
        let key = (mask_of(alive), plus, v);
        if let Some(&q) = self.cache.get(&key) {
            self.stats.cache_hits += 1;
            return Ok(q);
        }
        self.stats.marginal_calls += 1;
        let mut w = engine(self.model, alive.to_vec(), fields.to_vec())?;
        let mut depth = INITIAL_DEPTH;
        let (mut p, mut cut) = w.marginal(v, Some(depth))?;
        while cut {
            let (p2, cut2) = w.marginal(v, Some(2 * depth))?;
            depth *= 2;
            let close = ((1.0 - p2) - (1.0 - p)).abs() <= 0.5 * self.tol * (1.0 - p2);
            p = p2;
            cut = cut2;
            if close {
                break;
            }
        }
        self.stats.max_depth = self.stats.max_depth.max(depth);
        let q = 1.0 - p;
        self.cache.insert(key, q);
        Ok(q)
    }
}

fn mask_of(alive: &[bool]) -> u64 {
    alive.iter().enumerate().fold(0u64, |m, (i, &a)| if a { m | 1 << i } else { m })
}

/// `log wt(S)` for the configuration whose occupied / `+1` set is exactly `S`.
fn log_weight_of_set(model: &SpinModel, smask: u64) -> f64 {
    let config: Vec<bool> = (0..model.n()).map(|i| smask >> i & 1 == 1).collect();
    crate::models::log_weight(model, &config)
}

fn check_subcritical(model: &SpinModel, theta: f64) -> Result<()> {
    if let SpinModel::Hardcore { graph, fugacity } = model {
        let delta = graph.max_degree();
        if delta >= 3 {
            let lc = lambda_c(delta)?;
            let top = fugacity.iter().copied().fold(0.0, f64::max);
            if top * (1.0 - theta) >= lc {
                return param(format!(
                    "tilted fugacity {} is not below λ_c({delta}) = {lc}",
                    top * (1.0 - theta)
                ));
            }
        }
    }
    Ok(())
}

fn estimate_with(
    model: &SpinModel,
    tel: &mut Telescoper,
    smask: u64,
    theta: f64,
) -> Result<f64> {
    let n = model.n();
    let lw = log_weight_of_set(model, smask);
    if lw == f64::NEG_INFINITY {
        return Ok(f64::NEG_INFINITY);
    }
    let tilted = crate::models::tilt(model, theta)?;
    let mut pin = Pinning::new();
    for v in 0..n {
        if smask >> v & 1 == 1 {
            pin.assignments.insert(v, true);
        }
    }
    let Some((mut alive, mut fields)) = pinned_state(&tilted, &pin)? else {
        return Ok(f64::NEG_INFINITY);
    };
    let beta = match &tilted {
        SpinModel::IsingGraph { beta, .. } => Some(*beta),
        _ => None,
    };
    let graph = tilted.graph().expect("graphical model");
    let mut log_nu = 0.0;
    for v in 0..n {
        if !alive[v] {
            continue;
        }
        let q = tel.out_probability(&alive, smask, &fields, v)?;
        log_nu += q.ln();
        alive[v] = false;
        if let Some(b) = beta {
            for &(w, m) in graph.neighbors(v) {
                fields[w] -= b * m as f64;
            }
        }
    }
    Ok(smask.count_ones() as f64 * (-theta).ln_1p() + lw - log_nu)
}

/// `log Ẑ_{S,θ} = |S| log(1−θ) + log wt(S) − log ν^{1_S}(0)`, with `ν = (1−θ)*μ` and the
/// all-out probability as a telescoping product of recursion marginals in ascending order.
pub fn estimate_z_s_theta(model: &SpinModel, s: &[usize], theta: f64, epsilon0: f64) -> Result<f64> {
    if !(theta > 0.0 && theta < 1.0) {
        return param("θ must lie in (0, 1)");
    }
    check_subcritical(model, theta)?;
    let n = model.n();
    let smask = subset_mask(n, s)? as u64;
    let tilted = crate::models::tilt(model, theta)?;
    let mut tel = Telescoper::new(&tilted, epsilon0 / (2.0 * n.max(1) as f64));
    estimate_with(model, &mut tel, smask, theta)
}

/// Per-subset oracle for [`deterministic_count`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Oracle {
    /// Exact `Z_{S,θ}` by enumeration.
    Exact,
    /// Tree-recursion marginals with the doubling depth schedule.
    Weitz,
}

/// What the count enumerated.
#[derive(Clone, Debug, PartialEq)]
pub struct Certificate {
    pub k: usize,
    /// Subsets with `|S| < k`.
    pub terms: u64,
    /// Subsets with non-zero weight.
    pub feasible_terms: u64,
    /// Largest `log((θ/(1−θ))^{|S|} Ẑ_{S,θ})`.
    pub max_term: f64,
    pub oracle: OracleStats,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CountResult {
    pub log_z_hat: f64,
    pub certificate: Certificate,
}

/// `log Ẑ` from the subset decomposition with subsets in increasing mask order.
pub fn deterministic_count(model: &SpinModel, plan: &CountingPlan, oracle: Oracle) -> Result<CountResult> {
    deterministic_count_budget(model, plan, oracle, DEFAULT_TERM_BUDGET)
}

pub fn deterministic_count_budget(
    model: &SpinModel,
    plan: &CountingPlan,
    oracle: Oracle,
    term_budget: u64,
) -> Result<CountResult> {
    let n = model.n();
    if n >= 64 {
        return budget("subset enumeration needs n < 64");
    }
    let kmax = plan.k.min(n + 1);
    let terms: f64 = (0..kmax).map(|j| ln_binomial(n as u64, j as u64).exp()).sum();
    if terms > term_budget as f64 {
        return budget(format!("{terms:.0} subsets exceed the term budget {term_budget}"));
    }
    if oracle == Oracle::Weitz {
        check_subcritical(model, plan.theta)?;
    }
    let theta = plan.theta;
    let log_odds = theta.ln() - (-theta).ln_1p();
    let table = match oracle {
        Oracle::Exact => Some(log_weight_table(model)?),
        Oracle::Weitz => None,
    };
    let tilted = crate::models::tilt(model, theta)?;
    let mut tel = Telescoper::new(&tilted, plan.epsilon0 / (2.0 * n.max(1) as f64));
    let mut acc = LogSum::new();
    let mut cert = Certificate {
        k: plan.k,
        terms: 0,
        feasible_terms: 0,
        max_term: f64::NEG_INFINITY,
        oracle: OracleStats::default(),
    };
    let l1t = (-theta).ln_1p();
    for smask in 0u64..(1u64 << n) {
        let size = smask.count_ones() as usize;
        if size >= kmax {
            continue;
        }
        cert.terms += 1;
        let z = match &table {
            Some(t) => {
                let rest = ((1u64 << n) - 1) & !smask;
                let mut inner = LogSum::new();
                let mut sub = rest;
                loop {
                    let t_mask = (smask | sub) as usize;
                    inner.add(t[t_mask] + t_mask.count_ones() as f64 * l1t);
                    if sub == 0 {
                        break;
                    }
                    sub = (sub - 1) & rest;
                }
                inner.value()
            }
            None => estimate_with(model, &mut tel, smask, theta)?,
        };
        if z == f64::NEG_INFINITY {
            continue;
        }
        cert.feasible_terms += 1;
        let term = size as f64 * log_odds + z;
        cert.max_term = cert.max_term.max(term);
        acc.add(term);
    }
    cert.oracle = tel.stats;
    Ok(CountResult { log_z_hat: acc.value(), certificate: cert })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::{exact_distribution, log_partition};

    fn edge() -> Graph {
        Graph::simple(2, &[(0, 1)]).unwrap()
    }

    #[test]
    fn plan_k() {
        let p = CountingPlan::new(10, 0.5, 0.05, 0.05).unwrap();
        let e2 = std::f64::consts::E.powi(2);
        assert_eq!(p.k, (e2 * 10.0 + 40f64.ln()).ceil() as usize);
        assert!(CountingPlan::new(10, 0.5, 0.6, 0.5).is_err());
    }

    #[test]
    fn exact_terms() {
        let m = SpinModel::hardcore(edge(), 4.0).unwrap();
        assert!((z_s_theta_exact(&m, &[], 0.0).unwrap() - 9f64.ln()).abs() < 1e-14);
        assert!((z_s_theta_exact(&m, &[0], 0.5).unwrap() - 2f64.ln()).abs() < 1e-14);
        assert_eq!(z_s_theta_exact(&m, &[0, 1], 0.5).unwrap(), f64::NEG_INFINITY);
    }

    #[test]
    fn edge_and_vertex_marginals() {
        let one = SpinModel::hardcore(Graph::simple(1, &[]).unwrap(), 4.0).unwrap();
        for d in [Some(0), Some(3), None] {
            assert!((weitz_marginal(&one, &Pinning::new(), 0, d).unwrap() - 0.8).abs() < 1e-15);
        }
        let m = SpinModel::hardcore(edge(), 4.0).unwrap();
        assert!((weitz_marginal(&m, &Pinning::new(), 0, None).unwrap() - 4.0 / 9.0).abs() < 1e-15);
        assert!((weitz_marginal(&m, &Pinning::new(), 0, Some(0)).unwrap() - 0.8).abs() < 1e-15);
    }

    fn check_full_depth(model: &SpinModel) {
        let d = exact_distribution(model).unwrap();
        let m = d.moments();
        for v in 0..model.n() {
            let w = weitz_marginal(model, &Pinning::new(), v, None).unwrap();
            assert!((w - m.p1[v]).abs() < 1e-12, "vertex {v}: {w} vs {}", m.p1[v]);
        }
        let pin = Pinning::new().pin(0, false).pin(2, true);
        let dp = crate::models::apply_pinning(model, &pin);
        if let Ok(red) = dp {
            let dm = exact_distribution(&red.model).unwrap().moments();
            for (i, &v) in red.free.iter().enumerate() {
                let w = weitz_marginal(model, &pin, v, None).unwrap();
                assert!((w - dm.p1[i]).abs() < 1e-12, "pinned vertex {v}");
            }
        }
    }

    #[test]
    fn full_depth_recursion_is_exact_on_cyclic_graphs() {
        let k4 = Graph::simple(4, &[(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]).unwrap();
        let prism =
            Graph::simple(6, &[(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5), (0, 3), (1, 4), (2, 5)]).unwrap();
        for g in [k4, prism] {
            let h: Vec<f64> = [0.1, -0.3, 0.0, 0.2, 0.0, 0.05][..g.n()].to_vec();
            check_full_depth(&SpinModel::hardcore(g.clone(), 1.7).unwrap());
            check_full_depth(&SpinModel::ising(g.clone(), 0.4, h.clone()).unwrap());
            check_full_depth(&SpinModel::ising(g, -0.6, h).unwrap());
        }
    }

    #[test]
    fn identity_with_exact_terms() {
        let g = Graph::simple(5, &[(0, 1), (1, 2), (2, 3), (3, 4), (4, 0)]).unwrap();
        let m = SpinModel::hardcore(g, 3.0).unwrap();
        let plan = CountingPlan::new(5, 0.5, 0.05, 0.05).unwrap().with_k(6);
        let r = deterministic_count(&m, &plan, Oracle::Exact).unwrap();
        assert!((r.log_z_hat - log_partition(&m, None).unwrap()).abs() < 1e-10);
        let empty = SpinModel::hardcore(Graph::simple(4, &[]).unwrap(), 2.5).unwrap();
        let r = deterministic_count(&empty, &plan.clone().with_k(5), Oracle::Exact).unwrap();
        assert!((r.log_z_hat - 4.0 * 3.5f64.ln()).abs() < 1e-10);
    }

    #[test]
    fn weitz_count_on_edge() {
        let m = SpinModel::hardcore(edge(), 4.0).unwrap();
        let exact = z_s_theta_exact(&m, &[], 0.5).unwrap();
        let est = estimate_z_s_theta(&m, &[], 0.5, 0.01).unwrap();
        assert!((est - exact).abs() < 0.01);
        let plan = CountingPlan::new(2, 0.5, 0.05, 0.05).unwrap();
        let r = deterministic_count(&m, &plan, Oracle::Weitz).unwrap();
        assert!((r.log_z_hat - 9f64.ln()).abs() < 1e-10);
    }

    #[test]
    fn supercritical_tilt_is_rejected() {
        let g = Graph::simple(4, &[(0, 1), (0, 2), (0, 3)]).unwrap();
        let m = SpinModel::hardcore(g, 9.0).unwrap();
        assert!(estimate_z_s_theta(&m, &[], 0.5, 0.05).is_err());
    }
}
