//! Percolation on self-avoiding-walk trees: exploration, branching-process laws and the
//! rank-one series bound.

use std::io::Write;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;

use crate::error::param;
use crate::graphs::{closure_pinning, order_ranks, Graph};
use crate::numeric::{bisect, ln_binomial};
use crate::rng::{stream, Purpose};
use crate::samplers::Estimate;
use crate::Result;

/// Subtrees up to this size get exact activation probabilities.
pub const EXACT_SUBTREE_CAP: usize = 20;
/// Largest `ℓ` for the exact no-collision probability.
pub const BIRTHDAY_EXACT_MAX: usize = 12;

/// Outcome of one exploration.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Explored {
    Finite(u64),
    /// The cap was reached; stands for `N = ∞`.
    Capped,
}

impl Explored {
    /// `min{N, cap}`.
    pub fn truncated(self, cap: u64) -> u64 {
        match self {
            Explored::Finite(k) => k.min(cap),
            Explored::Capped => cap,
        }
    }
}

/// How children are activated in [`explore_saw`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Activation {
    /// Exact influence when the child's subtree has at most [`EXACT_SUBTREE_CAP`] nodes,
    /// otherwise the upper bound `tanh|β|`.
    Exact,
    /// Always `tanh|β|` (per unit of edge multiplicity folded into the coupling).
    Bound,
}

/// One exploration sample and whether any activation fell back to the bound.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ExploreSample {
    pub explored: Explored,
    pub used_bound: bool,
}

struct Saw<'a> {
    g: &'a Graph,
    rank: Vec<usize>,
    beta: f64,
}

/// A child in the SAW tree: either a regular vertex or a pinned closure leaf.
enum Child {
    Free { vertex: usize, coupling: f64 },
    Pinned { spin: f64, coupling: f64 },
}

impl Saw<'_> {
    fn children(&self, path: &[usize], on_path: &[bool]) -> Vec<Child> {
        let last = *path.last().expect("non-empty walk");
        let prev = (path.len() >= 2).then(|| path[path.len() - 2]);
        let mut out = Vec::new();
        for &(w, mult) in self.g.neighbors(last) {
            if Some(w) == prev {
                continue;
            }
            let coupling = self.beta * mult as f64;
            if on_path[w] {
                let i = path.iter().position(|&x| x == w).expect("on path");
                let spin = closure_pinning(&self.rank, path[i + 1], last) as f64;
                out.push(Child::Pinned { spin, coupling });
            } else {
                out.push(Child::Free { vertex: w, coupling });
            }
        }
        out
    }

    /// Number of nodes in the subtree of the walk's endpoint, stopping once it exceeds `limit`.
    fn subtree_size(&self, path: &mut Vec<usize>, on_path: &mut [bool], limit: usize) -> usize {
        let mut count = 1;
        for c in self.children(path, on_path) {
            if count > limit {
                break;
            }
            match c {
                Child::Pinned { .. } => count += 1,
                Child::Free { vertex, .. } => {
                    path.push(vertex);
                    on_path[vertex] = true;
                    count += self.subtree_size(path, on_path, limit - count.min(limit));
                    on_path[vertex] = false;
                    path.pop();
                }
            }
        }
        count
    }

    /// Effective field at the walk's endpoint from its own subtree (zero external field).
    fn effective_field(&self, path: &mut Vec<usize>, on_path: &mut [bool]) -> f64 {
        let mut h = 0.0;
        for c in self.children(path, on_path) {
            match c {
                Child::Pinned { spin, coupling } => h += coupling * spin,
                Child::Free { vertex, coupling } => {
                    path.push(vertex);
                    on_path[vertex] = true;
                    let hc = self.effective_field(path, on_path);
                    on_path[vertex] = false;
                    path.pop();
                    h += (coupling.tanh() * hc.tanh()).atanh();
                }
            }
        }
        h
    }
}

/// Influence of a parent on a child with coupling `j` and subtree field `h`:
/// `|Pr[+ | parent +] − Pr[+ | parent −]|`.
pub fn edge_influence(j: f64, h: f64) -> f64 {
    use crate::numeric::sigmoid;
    (sigmoid(2.0 * (h + j)) - sigmoid(2.0 * (h - j))).abs()
}

/// One sample of `N^SAW_{G,v}` for the zero-field Ising model at `β`, capped at `cap` explored nodes.
pub fn explore_saw(
    graph: &Graph,
    v: usize,
    beta: f64,
    mode: Activation,
    cap: u64,
    rng: &mut ChaCha8Rng,
) -> Result<ExploreSample> {
    if v >= graph.n() {
        return param(format!("root {v} out of range"));
    }
    let saw = Saw { g: graph, rank: order_ranks(graph.n(), None)?, beta };
    let mut used_bound = false;
    let mut explored = 0u64;
    let mut active: Vec<Vec<usize>> = vec![vec![v]];
    let mut on_path = vec![false; graph.n()];
    while let Some(mut path) = active.pop() {
        explored += 1;
        if explored >= cap {
            return Ok(ExploreSample { explored: Explored::Capped, used_bound });
        }
        if beta == 0.0 {
            continue;
        }
        for &x in &path {
            on_path[x] = true;
        }
        for c in saw.children(&path, &on_path) {
            let Child::Free { vertex, coupling } = c else {
                continue;
            };
            path.push(vertex);
            on_path[vertex] = true;
            let p = match mode {
                Activation::Bound => coupling.abs().tanh(),
                Activation::Exact => {
                    if saw.subtree_size(&mut path, &mut on_path, EXACT_SUBTREE_CAP) <= EXACT_SUBTREE_CAP {
                        edge_influence(coupling, saw.effective_field(&mut path, &mut on_path))
                    } else {
                        used_bound = true;
                        coupling.abs().tanh()
                    }
                }
            };
            if rng.random::<f64>() < p {
                active.push(path.clone());
            }
            on_path[vertex] = false;
            path.pop();
        }
        for &x in &path {
            on_path[x] = false;
        }
    }
    Ok(ExploreSample { explored: Explored::Finite(explored), used_bound })
}

/// Galton–Watson exploration where the root has `root_children` children, every other node
/// `children`, each kept with probability `p`.
pub fn simulate_branching(root_children: u64, children: u64, p: f64, cap: u64, rng: &mut ChaCha8Rng) -> Explored {
    let root = Binomial::new(root_children, p).expect("valid binomial");
    let rest = Binomial::new(children, p).expect("valid binomial");
    let mut active: u64 = 1;
    let mut explored: u64 = 0;
    let mut first = true;
    while active > 0 {
        explored += 1;
        if explored >= cap {
            return Explored::Capped;
        }
        let born = if first { root.sample(rng) } else { rest.sample(rng) };
        first = false;
        active = active - 1 + born;
    }
    Explored::Finite(explored)
}

/// Sample of `N^ary_d` (every node has `d` children).
pub fn sample_ary(d: u64, p: f64, cap: u64, rng: &mut ChaCha8Rng) -> Explored {
    simulate_branching(d, d, p, cap, rng)
}

/// Sample of `N^reg_Δ` (root has `Δ` children, other nodes `Δ−1`).
pub fn sample_regular(delta: u64, p: f64, cap: u64, rng: &mut ChaCha8Rng) -> Explored {
    simulate_branching(delta, delta.saturating_sub(1), p, cap, rng)
}

/// `log Pr[N^ary_d = ℓ] = log((1/ℓ)·Pr[Bin(dℓ, p) = ℓ−1])`.
pub fn ary_percolation_log_pmf(d: u64, p: f64, ell: u64) -> Result<f64> {
    if d == 0 || !(0.0..1.0).contains(&p) || ell == 0 {
        return param("need d >= 1, p in [0, 1) and ℓ >= 1");
    }
    let trials = d * ell;
    let k = ell - 1;
    if k > trials {
        return Ok(f64::NEG_INFINITY);
    }
    let lp = if k == 0 { 0.0 } else { k as f64 * p.ln() };
    Ok(ln_binomial(trials, k) + lp + (trials - k) as f64 * (-p).ln_1p() - (ell as f64).ln())
}

pub fn ary_percolation_pmf(d: u64, p: f64, ell: u64) -> Result<f64> {
    Ok(ary_percolation_log_pmf(d, p, ell)?.exp())
}

/// `Σ_{ℓ≥1} Pr[N^ary_d = ℓ]`: exact partial sum up to `terms`, plus a tail fitted to
/// `c·ℓ^{−3/2}(1 + a/ℓ)` at criticality, or a geometric tail away from it.
pub fn ary_pmf_total(d: u64, p: f64, terms: u64) -> Result<f64> {
    if terms < 16 {
        return param("need at least 16 explicit terms");
    }
    let mut sum = 0.0;
    let mut last = 0.0;
    for ell in 1..=terms {
        last = ary_percolation_pmf(d, p, ell)?;
        sum += last;
    }
    if last == 0.0 {
        return Ok(sum);
    }
    let l = terms as f64;
    let half = ary_percolation_pmf(d, p, terms / 2)?;
    let ratio = last / ary_percolation_pmf(d, p, terms - 1)?;
    if (d as f64 * p - 1.0).abs() < 1e-12 {
        // pmf(ℓ)·ℓ^{3/2} = c(1 + a/ℓ): solve from ℓ = L and L/2
        let lh = (terms / 2) as f64;
        let (y1, y2) = (last * l.powf(1.5), half * lh.powf(1.5));
        let a = (y2 - y1) / (y1 / l - y2 / lh);
        let c = y1 / (1.0 + a / l);
        // Euler–Maclaurin tails of Σ_{ℓ>L} ℓ^{-s}
        let zeta_tail = |s: f64| {
            let n = l + 1.0;
            n.powf(1.0 - s) / (s - 1.0) + 0.5 * n.powf(-s) + s * n.powf(-s - 1.0) / 12.0
        };
        Ok(sum + c * (zeta_tail(1.5) + a * zeta_tail(2.5)))
    } else if ratio < 1.0 {
        Ok(sum + last * ratio / (1.0 - ratio))
    } else {
        Ok(sum)
    }
}

/// Smallest fixed point of `G(z) = (1 − p + p z)^d` in `[0, 1]`: the extinction probability.
pub fn extinction_probability(d: u64, p: f64) -> Result<f64> {
    if d == 0 || !(0.0..1.0).contains(&p) {
        return param("need d >= 1 and p in [0, 1)");
    }
    let theta = d as f64 * p;
    if theta <= 1.0 {
        return Ok(1.0);
    }
    let df = d as f64;
    let g = |z: f64| (1.0 - p + p * z).powf(df) - z;
    // G' = 1 at z_m; G(z) − z is decreasing on [0, z_m] and changes sign there
    let z_m = (theta.powf(-1.0 / (df - 1.0)) - (1.0 - p)) / p;
    Ok(bisect(0.0, z_m.min(1.0), 1e-16, g))
}

/// Mean of `min{N^SAW, n}` over independent explorations, with standard error.
pub fn coupling_independence_estimate(
    graph: &Graph,
    v: usize,
    beta: f64,
    mode: Activation,
    trials: u64,
    seed: u64,
) -> Result<Estimate> {
    if trials == 0 {
        return param("need at least one trial");
    }
    let n = graph.n() as u64;
    let values: Vec<f64> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = stream(seed, t, Purpose::Percolation);
            explore_saw(graph, v, beta, mode, n + 1, &mut rng).map(|s| s.explored.truncated(n) as f64)
        })
        .collect::<Result<_>>()?;
    Ok(mean_and_stderr(&values))
}

pub(crate) fn mean_and_stderr(values: &[f64]) -> Estimate {
    let k = values.len() as f64;
    let mean = values.iter().sum::<f64>() / k;
    let var = if values.len() > 1 {
        values.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (k - 1.0)
    } else {
        0.0
    };
    Estimate { value: mean, stderr: (var / k).sqrt() }
}

/// Exact and bounded no-collision probabilities for `ℓ` i.i.d. draws.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BirthdayTail {
    /// `Pr[T ≥ ℓ]` when `ℓ ≤ 12`.
    pub exact: Option<f64>,
    /// `exp(−ℓ(ℓ−1)/2n)`.
    pub bound: f64,
}

/// `ℓ!·e_ℓ(p)`: probability that `ℓ` draws from `p` are pairwise distinct.
fn distinct_draws(p: &[f64], ell: usize) -> f64 {
    let mut e = vec![0.0; ell + 1];
    e[0] = 1.0;
    for &pi in p {
        for k in (1..=ell).rev() {
            e[k] += e[k - 1] * pi;
        }
    }
    let fact: f64 = (1..=ell).map(|k| k as f64).product();
    fact * e[ell]
}

pub fn birthday_tail(p: &[f64], ell: usize) -> Result<BirthdayTail> {
    let total: f64 = p.iter().sum();
    if p.is_empty() || p.iter().any(|&x| x < 0.0) || (total - 1.0).abs() > 1e-9 {
        return param("p must be a probability vector");
    }
    let n = p.len() as f64;
    let bound = (-(ell as f64) * (ell as f64 - 1.0).max(0.0) / (2.0 * n)).exp();
    let exact = (ell <= BIRTHDAY_EXACT_MAX).then(|| distinct_draws(p, ell));
    Ok(BirthdayTail { exact, bound })
}

/// `Σ_ℓ min{Pr[T ≥ ℓ], exp(−ℓ(ℓ−1)/2n)}·‖u‖^{2ℓ}` with `T` the first collision index among
/// draws from `p_i = u_i²/‖u‖²`; `+∞` when the series does not converge numerically.
pub fn rank_one_si_bound(u: &[f64]) -> Result<f64> {
    let nz: Vec<f64> = u.iter().copied().filter(|&x| x != 0.0).collect();
    if nz.is_empty() {
        return param("u must have a non-zero entry");
    }
    let s: f64 = nz.iter().map(|x| x * x).sum();
    let p: Vec<f64> = nz.iter().map(|x| x * x / s).collect();
    let n = p.len() as f64;
    let ls = s.ln();
    let mut sum = 0.0;
    for ell in 0u64..100_000_000 {
        let l = ell as f64;
        let log_bound = -l * (l - 1.0).max(0.0) / (2.0 * n);
        let tail = if (ell as usize) <= BIRTHDAY_EXACT_MAX {
            distinct_draws(&p, ell as usize).min(log_bound.exp())
        } else {
            log_bound.exp()
        };
        let term = tail * (l * ls).exp();
        sum += term;
        // later bound terms shrink by at most s·exp(−ℓ/n) each
        let ratio = (ls - l / n).exp();
        let next = (log_bound - l / n + (l + 1.0) * ls).exp();
        if ratio < 1.0 && next / (1.0 - ratio) < 1e-12 * sum.max(1.0) {
            return Ok(sum);
        }
    }
    Ok(f64::INFINITY)
}

/// `ell,pmf` rows for `ℓ = 1..=max_ell`.
pub fn write_pmf_csv(w: &mut impl Write, d: u64, p: f64, max_ell: u64) -> Result<()> {
    writeln!(w, "ell,pmf")?;
    for ell in 1..=max_ell {
        writeln!(w, "{ell},{:.16e}", ary_percolation_pmf(d, p, ell)?)?;
    }
    Ok(())
}

/// Empirical CDF `F(k) = #{samples ≤ k}/len` for `k = 1..=max`; capped samples count as `∞`.
pub fn empirical_cdf(samples: &[Explored], max: u64) -> Vec<f64> {
    let mut counts = vec![0u64; max as usize + 1];
    for s in samples {
        if let Explored::Finite(k) = s {
            if *k <= max {
                counts[*k as usize] += 1;
            }
        }
    }
    let total = samples.len() as f64;
    let mut acc = 0u64;
    (1..=max as usize)
        .map(|k| {
            acc += counts[k];
            acc as f64 / total
        })
        .collect()
}
