//! Monte-Carlo implementations of Glauber dynamics, field dynamics and the proximal sampler.

use std::io::Write;

use nalgebra::DMatrix;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::param;
use crate::exact::{log_weight_table, Encoding};
use crate::models::{apply_pinning, factor_interaction, induced, tilt, Pinning, SpinModel};
use crate::numeric::sigmoid;
use crate::rng::{stream, Purpose};
use crate::Result;

/// Configuration, step counter and the chain's private random stream.
#[derive(Clone, Debug)]
pub struct ChainState {
    pub config: Vec<bool>,
    pub step: u64,
    pub rng: ChaCha8Rng,
}

impl ChainState {
    /// State seeded from `(master_seed, chain_index)`.
    pub fn new(config: Vec<bool>, master_seed: u64, chain_index: u64) -> ChainState {
        ChainState { config, step: 0, rng: stream(master_seed, chain_index, Purpose::Chain) }
    }
}

/// Starting configuration.
#[derive(Clone, Debug, PartialEq)]
pub enum Init {
    /// Empty set (hardcore) or all `−1` (Ising).
    Empty,
    AllPlus,
    /// Independent fair bits; hardcore keeps a bit only when no earlier neighbour is occupied.
    Random,
    Config(Vec<bool>),
}

/// Builds and validates an initial configuration.
pub fn initial_config(model: &SpinModel, init: &Init, seed: u64, chain_index: u64) -> Result<Vec<bool>> {
    let n = model.n();
    let config = match init {
        Init::Empty => vec![false; n],
        Init::AllPlus => vec![true; n],
        Init::Random => {
            let mut rng = stream(seed, chain_index, Purpose::Init);
            let mut x: Vec<bool> = (0..n).map(|_| rng.random::<bool>()).collect();
            if let SpinModel::Hardcore { graph, .. } = model {
                for v in 0..n {
                    if x[v] && graph.neighbors(v).iter().any(|&(u, _)| u < v && x[u]) {
                        x[v] = false;
                    }
                }
            }
            x
        }
        Init::Config(c) => c.clone(),
    };
    if config.len() != n {
        return param("initial configuration has the wrong length");
    }
    if !is_valid(model, &config) {
        return param("initial configuration is not an independent set");
    }
    Ok(config)
}

/// False only for hardcore configurations that are not independent sets.
pub fn is_valid(model: &SpinModel, config: &[bool]) -> bool {
    match model {
        SpinModel::Hardcore { graph, .. } => graph.edges().iter().all(|&(u, v)| !(config[u] && config[v])),
        _ => true,
    }
}

/// `Pr[x_v = 1 | x_{−v}]`.
pub fn conditional_up(model: &SpinModel, x: &[bool], v: usize) -> f64 {
    let s = |b: bool| if b { 1.0 } else { -1.0 };
    match model {
        SpinModel::Hardcore { graph, fugacity } => {
            if graph.neighbors(v).iter().any(|&(u, _)| x[u]) {
                0.0
            } else {
                fugacity[v] / (1.0 + fugacity[v])
            }
        }
        SpinModel::IsingGraph { graph, beta, fields } => {
            let local: f64 = graph.neighbors(v).iter().map(|&(u, m)| m as f64 * s(x[u])).sum();
            sigmoid(2.0 * (fields[v] + beta * local))
        }
        SpinModel::IsingMatrix { j, fields } => {
            let local: f64 = (0..x.len()).filter(|&u| u != v).map(|u| j[(v, u)] * s(x[u])).sum();
            sigmoid(2.0 * (fields[v] + local))
        }
    }
}

fn heat_bath(model: &SpinModel, x: &mut [bool], v: usize, rng: &mut ChaCha8Rng) {
    let p = conditional_up(model, x, v);
    x[v] = rng.random::<f64>() < p;
}

/// One heat-bath update at a uniformly random vertex.
pub fn glauber_step(model: &SpinModel, state: &mut ChainState) {
    let n = model.n();
    if n > 0 {
        let v = state.rng.random_range(0..n);
        heat_bath(model, &mut state.config, v, &mut state.rng);
    }
    state.step += 1;
    debug_assert!(is_valid(model, &state.config));
}

/// How field dynamics performs its denoising draw.
#[derive(Clone, Debug, PartialEq)]
pub struct InnerSpec {
    /// Components with at most this many free vertices are sampled exactly.
    pub exact_cap: usize,
    /// Glauber updates per free vertex for larger components; `None` means `50·ln c`.
    pub steps_per_vertex: Option<f64>,
}

impl Default for InnerSpec {
    fn default() -> Self {
        InnerSpec { exact_cap: 20, steps_per_vertex: None }
    }
}

/// Bookkeeping from one field-dynamics round.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct FieldReport {
    pub exact_components: usize,
    pub glauber_components: usize,
    pub inner_glauber_steps: u64,
}

impl FieldReport {
    /// True when every component was sampled exactly.
    pub fn is_exact(&self) -> bool {
        self.glauber_components == 0
    }
}

/// Field dynamics for a fixed `(model, θ)`; the tilted model is built once.
#[derive(Clone, Debug)]
pub struct FieldSampler {
    theta: f64,
    tilted: SpinModel,
    inner: InnerSpec,
}

impl FieldSampler {
    pub fn new(model: &SpinModel, theta: f64, inner: InnerSpec) -> Result<FieldSampler> {
        if !(theta > 0.0 && theta < 1.0) {
            return param("field dynamics needs θ in (0, 1)");
        }
        Ok(FieldSampler { theta, tilted: tilt(model, theta)?, inner })
    }

    /// Thins the current set with keep probability `θ`, then redraws from the tilted
    /// distribution conditioned on containing the thinned set.
    pub fn step(&self, state: &mut ChainState) -> Result<FieldReport> {
        let kept = self.noise(state);
        self.denoise(state, &kept)
    }

    /// Thinning half: each set coordinate survives with probability `θ`.
    pub fn noise(&self, state: &mut ChainState) -> Pinning {
        let mut pinning = Pinning::new();
        for v in 0..state.config.len() {
            if state.config[v] && state.rng.random::<f64>() < self.theta {
                pinning.assignments.insert(v, true);
            }
        }
        pinning
    }

    /// Resampling half: draw from the tilted law conditioned on containing `pinning`.
    pub fn denoise(&self, state: &mut ChainState, pinning: &Pinning) -> Result<FieldReport> {
        let n = state.config.len();
        let reduced = apply_pinning(&self.tilted, pinning)?;
        let mut report = FieldReport::default();
        let mut next = vec![false; n];
        for &v in pinning.assignments.keys() {
            next[v] = true;
        }
        let free = &reduced.free;
        let current: Vec<bool> = free.iter().map(|&v| state.config[v]).collect();
        for comp in components(&reduced.model) {
            let sub = restrict(&reduced.model, &comp)?;
            let mut local: Vec<bool> = comp.iter().map(|&i| current[i]).collect();
            if comp.len() <= self.inner.exact_cap {
                sample_exact(&sub, &mut local, &mut state.rng)?;
                report.exact_components += 1;
            } else {
                let c = comp.len() as f64;
                let per = self.inner.steps_per_vertex.unwrap_or(50.0 * c.ln());
                let steps = (per * c).ceil() as u64;
                for _ in 0..steps {
                    let v = state.rng.random_range(0..comp.len());
                    heat_bath(&sub, &mut local, v, &mut state.rng);
                }
                report.glauber_components += 1;
                report.inner_glauber_steps += steps;
            }
            for (k, &i) in comp.iter().enumerate() {
                next[free[i]] = local[k];
            }
        }
        state.config = next;
        state.step += 1;
        Ok(report)
    }
}

/// One field-dynamics round.
pub fn field_dynamics_step(
    model: &SpinModel,
    state: &mut ChainState,
    theta: f64,
    inner: &InnerSpec,
) -> Result<FieldReport> {
    FieldSampler::new(model, theta, inner.clone())?.step(state)
}

/// Connected components (vertex lists, ascending); a matrix model is one component.
fn components(model: &SpinModel) -> Vec<Vec<usize>> {
    let n = model.n();
    let Some(graph) = model.graph() else {
        return if n == 0 { Vec::new() } else { vec![(0..n).collect()] };
    };
    let mut seen = vec![false; n];
    let mut out = Vec::new();
    for s in 0..n {
        if seen[s] {
            continue;
        }
        seen[s] = true;
        let mut comp = vec![s];
        let mut head = 0;
        while head < comp.len() {
            let v = comp[head];
            head += 1;
            for &(u, _) in graph.neighbors(v) {
                if !seen[u] {
                    seen[u] = true;
                    comp.push(u);
                }
            }
        }
        comp.sort_unstable();
        out.push(comp);
    }
    out
}

fn restrict(model: &SpinModel, keep: &[usize]) -> Result<SpinModel> {
    Ok(match model {
        SpinModel::Hardcore { graph, fugacity } => SpinModel::Hardcore {
            graph: induced(graph, keep)?.0,
            fugacity: keep.iter().map(|&v| fugacity[v]).collect(),
        },
        SpinModel::IsingGraph { graph, beta, fields } => SpinModel::IsingGraph {
            graph: induced(graph, keep)?.0,
            beta: *beta,
            fields: keep.iter().map(|&v| fields[v]).collect(),
        },
        SpinModel::IsingMatrix { j, .. } => {
            if keep.len() != j.nrows() {
                return param("matrix models cannot be split into components");
            }
            model.clone()
        }
    })
}

/// Exact draw from a small model by inverse CDF over the enumerated table.
fn sample_exact(model: &SpinModel, out: &mut [bool], rng: &mut ChaCha8Rng) -> Result<()> {
    let table = log_weight_table(model)?;
    let top = table.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let total: f64 = table.iter().map(|l| (l - top).exp()).sum();
    let mut u = rng.random::<f64>() * total;
    let mut pick = table.len() - 1;
    for (m, l) in table.iter().enumerate() {
        let w = (l - top).exp();
        if u < w {
            pick = m;
            break;
        }
        u -= w;
    }
    while table[pick] == f64::NEG_INFINITY {
        pick -= 1;
    }
    for (i, b) in out.iter_mut().enumerate() {
        *b = pick >> i & 1 == 1;
    }
    Ok(())
}

/// Proximal sampler at `θ = ½` with a precomputed factor `L` (`LᵀL = J`).
#[derive(Clone, Debug)]
pub struct ProximalSampler {
    l: DMatrix<f64>,
    fields: Vec<f64>,
}

impl ProximalSampler {
    pub fn new(model: &SpinModel) -> Result<ProximalSampler> {
        let fields = match model.fields() {
            Some(h) => h.to_vec(),
            None => return param("the proximal sampler needs an Ising model"),
        };
        Ok(ProximalSampler { l: factor_interaction(model, 1e-12)?, fields })
    }

    pub fn with_factor(l: DMatrix<f64>, fields: Vec<f64>) -> Result<ProximalSampler> {
        if l.ncols() != fields.len() {
            return param("factor must have one column per vertex");
        }
        Ok(ProximalSampler { l, fields })
    }

    pub fn factor(&self) -> &DMatrix<f64> {
        &self.l
    }

    /// `y ~ N(Lx, I)`, then `z_i = +1` with probability `σ(2(h + Lᵀy)_i)`.
    pub fn step(&self, state: &mut ChainState) {
        let (r, n) = self.l.shape();
        let mut y = vec![0.0; r];
        for (a, ya) in y.iter_mut().enumerate() {
            let mean: f64 = (0..n)
                .map(|i| if state.config[i] { self.l[(a, i)] } else { -self.l[(a, i)] })
                .sum();
            *ya = mean + state.rng.sample::<f64, _>(StandardNormal);
        }
        for i in 0..n {
            let w = self.fields[i] + (0..r).map(|a| self.l[(a, i)] * y[a]).sum::<f64>();
            state.config[i] = state.rng.random::<f64>() < sigmoid(2.0 * w);
        }
        state.step += 1;
    }
}

/// One proximal round with an explicit factor.
pub fn proximal_step(model: &SpinModel, state: &mut ChainState, l: &DMatrix<f64>) -> Result<()> {
    let h = model.fields().ok_or_else(|| crate::Error::Param("proximal step needs Ising".into()))?;
    ProximalSampler::with_factor(l.clone(), h.to_vec())?.step(state);
    Ok(())
}

/// Which chain to run.
#[derive(Clone, Debug, PartialEq)]
pub enum Chain {
    Glauber,
    Field { theta: f64, inner: InnerSpec },
    Proximal,
}

/// Parameters of a run. A step is one site update (Glauber) or one full round.
#[derive(Clone, Debug)]
pub struct RunParams {
    pub chain: Chain,
    pub init: Init,
    pub steps: u64,
    pub seed: u64,
    pub chain_index: u64,
    pub thin: u64,
    pub burn_in: u64,
    pub pair_statistics: bool,
}

impl RunParams {
    pub fn new(chain: Chain, steps: u64, seed: u64) -> RunParams {
        RunParams {
            chain,
            init: Init::Empty,
            steps,
            seed,
            chain_index: 0,
            thin: 1,
            burn_in: 0,
            pair_statistics: false,
        }
    }
}

/// Online estimators over the recorded samples.
#[derive(Clone, Debug, Default)]
pub struct RunSummary {
    pub samples: u64,
    /// Mean of each coordinate in the model's natural encoding.
    pub means: Vec<f64>,
    pub magnetization_mean: f64,
    pub magnetization_var: f64,
    /// `E[X_i X_j]` in the natural encoding, when requested.
    pub pair_means: Option<DMatrix<f64>>,
    pub inner_glauber_steps: u64,
    pub approximate_inner_rounds: u64,
}

/// Sum of coordinates in the model's natural encoding.
pub fn magnetization(model: &SpinModel, config: &[bool]) -> f64 {
    let enc = Encoding::natural(model);
    config.iter().map(|&b| enc.value(b)).sum()
}

/// Hex string of a configuration, vertex 0 as the least significant bit.
pub fn config_hex(config: &[bool]) -> String {
    if config.is_empty() {
        return "0".into();
    }
    let digits = config.len().div_ceil(4);
    (0..digits)
        .rev()
        .map(|d| {
            let nib = (0..4)
                .filter(|&b| config.get(4 * d + b).copied().unwrap_or(false))
                .fold(0u32, |acc, b| acc | 1 << b);
            char::from_digit(nib, 16).expect("nibble")
        })
        .collect()
}

/// Runs a chain and hands each recorded sample `(step, config)` to `sink`.
pub fn run_chain_with(
    model: &SpinModel,
    params: &RunParams,
    mut sink: impl FnMut(u64, &[bool]),
) -> Result<RunSummary> {
    if params.thin == 0 {
        return param("thin must be at least 1");
    }
    let config = initial_config(model, &params.init, params.seed, params.chain_index)?;
    let mut state = ChainState::new(config, params.seed, params.chain_index);
    let field = match &params.chain {
        Chain::Field { theta, inner } => Some(FieldSampler::new(model, *theta, inner.clone())?),
        _ => None,
    };
    let proximal = match params.chain {
        Chain::Proximal => Some(ProximalSampler::new(model)?),
        _ => None,
    };
    let n = model.n();
    let enc = Encoding::natural(model);
    let mut summary = RunSummary { means: vec![0.0; n], ..Default::default() };
    let mut pairs = params.pair_statistics.then(|| DMatrix::<f64>::zeros(n, n));
    let (mut m1, mut m2) = (0.0, 0.0);
    let mut values = vec![0.0; n];
    for t in 1..=params.steps {
        match (&field, &proximal) {
            (Some(f), _) => {
                let rep = f.step(&mut state)?;
                summary.inner_glauber_steps += rep.inner_glauber_steps;
                if !rep.is_exact() {
                    summary.approximate_inner_rounds += 1;
                }
            }
            (None, Some(p)) => p.step(&mut state),
            (None, None) => glauber_step(model, &mut state),
        }
        if t > params.burn_in && (t - params.burn_in) % params.thin == 0 {
            summary.samples += 1;
            for (v, b) in state.config.iter().enumerate() {
                values[v] = enc.value(*b);
                summary.means[v] += values[v];
            }
            let mag: f64 = values.iter().sum();
            m1 += mag;
            m2 += mag * mag;
            if let Some(p) = pairs.as_mut() {
                for i in 0..n {
                    for j in 0..n {
                        p[(i, j)] += values[i] * values[j];
                    }
                }
            }
            sink(t, &state.config);
        }
    }
    if summary.samples > 0 {
        let k = summary.samples as f64;
        summary.means.iter_mut().for_each(|m| *m /= k);
        summary.magnetization_mean = m1 / k;
        summary.magnetization_var = (m2 / k - (m1 / k).powi(2)).max(0.0);
        summary.pair_means = pairs.map(|p| p / k);
    }
    Ok(summary)
}

/// A finished run: recorded samples and summary.
#[derive(Clone, Debug)]
pub struct ChainRun {
    pub samples: Vec<(u64, Vec<bool>)>,
    pub summary: RunSummary,
}

pub fn run_chain(model: &SpinModel, params: &RunParams) -> Result<ChainRun> {
    let mut samples = Vec::new();
    let summary = run_chain_with(model, params, |t, c| samples.push((t, c.to_vec())))?;
    Ok(ChainRun { samples, summary })
}

/// Writes `step,config_hex,magnetization`.
pub fn write_samples_csv(w: &mut impl Write, model: &SpinModel, run: &ChainRun) -> Result<()> {
    writeln!(w, "step,config_hex,magnetization")?;
    for (t, c) in &run.samples {
        writeln!(w, "{t},{},{:.16e}", config_hex(c), magnetization(model, c))?;
    }
    Ok(())
}

/// Estimate with standard error.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub stderr: f64,
}

/// Settings for [`estimate_covariance_quadratic`]; lengths are in sweeps of `n` site
/// updates for Glauber and in rounds otherwise.
#[derive(Clone, Debug)]
pub struct CovarianceParams {
    pub chain: Chain,
    pub init: Init,
    pub burn_in_sweeps: u64,
    pub sample_sweeps: u64,
    pub batches: u64,
    pub seed: u64,
    pub chain_index: u64,
}

/// Monte-Carlo `Var(sᵀX)/n` with batch-means standard error, `X` in the natural encoding.
pub fn estimate_covariance_quadratic(model: &SpinModel, s: &[f64], p: &CovarianceParams) -> Result<Estimate> {
    let n = model.n();
    if s.len() != n || s.iter().any(|&x| x != 1.0 && x != -1.0) {
        return param("s must be a ±1 vector of length n");
    }
    if p.batches < 2 || p.sample_sweeps < p.batches {
        return param("need at least two batches and one sample per batch");
    }
    let per_sweep = if p.chain == Chain::Glauber { n.max(1) as u64 } else { 1 };
    let params = RunParams {
        chain: p.chain.clone(),
        init: p.init.clone(),
        steps: (p.burn_in_sweeps + p.sample_sweeps) * per_sweep,
        seed: p.seed,
        chain_index: p.chain_index,
        thin: per_sweep,
        burn_in: p.burn_in_sweeps * per_sweep,
        pair_statistics: false,
    };
    let enc = Encoding::natural(model);
    let mut stats = Vec::with_capacity(p.sample_sweeps as usize);
    run_chain_with(model, &params, |_, c| {
        stats.push(c.iter().zip(s).map(|(&b, &si)| si * enc.value(b)).sum::<f64>());
    })?;
    let k = stats.len() as f64;
    let mean = stats.iter().sum::<f64>() / k;
    let value = stats.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / k / n as f64;
    let size = stats.len() / p.batches as usize;
    let batch: Vec<f64> = stats
        .chunks(size)
        .take(p.batches as usize)
        .map(|c| c.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / c.len() as f64 / n as f64)
        .collect();
    let b = batch.len() as f64;
    let bm = batch.iter().sum::<f64>() / b;
    let var = batch.iter().map(|x| (x - bm).powi(2)).sum::<f64>() / (b - 1.0);
    Ok(Estimate { value, stderr: (var / b).sqrt() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::exact_distribution;
    use crate::graphs::Graph;

    fn edge() -> Graph {
        Graph::simple(2, &[(0, 1)]).unwrap()
    }

    #[test]
    fn blocked_vertex_stays_out() {
        let m = SpinModel::hardcore(edge(), 4.0).unwrap();
        let mut st = ChainState::new(vec![true, false], 1, 0);
        for _ in 0..1000 {
            let before = st.config.clone();
            glauber_step(&m, &mut st);
            if before[0] {
                assert!(!st.config[1]);
            }
        }
        assert_eq!(st.step, 1000);
    }

    #[test]
    fn single_vertex_occupancy() {
        let m = SpinModel::hardcore(Graph::simple(1, &[]).unwrap(), 4.0).unwrap();
        let run = run_chain(&m, &RunParams::new(Chain::Glauber, 200_000, 3)).unwrap();
        let p = run.summary.means[0];
        assert!((p - 0.8).abs() < 4.0 * (0.16f64 / 200_000.0).sqrt() * 3.0, "{p}");
    }

    #[test]
    fn runs_are_reproducible() {
        let m = SpinModel::ising(edge(), 0.3, vec![0.0; 2]).unwrap();
        let p = RunParams::new(Chain::Glauber, 500, 11);
        assert_eq!(run_chain(&m, &p).unwrap().samples, run_chain(&m, &p).unwrap().samples);
        let mut q = p.clone();
        q.burn_in = q.steps;
        let run = run_chain(&m, &q).unwrap();
        assert!(run.samples.is_empty() && run.summary.samples == 0);
    }

    #[test]
    fn field_dynamics_keeps_thinned_set() {
        let g = Graph::simple(4, &[(0, 1), (1, 2), (2, 3)]).unwrap();
        let m = SpinModel::hardcore(g, 4.0).unwrap();
        let fs = FieldSampler::new(&m, 0.5, InnerSpec::default()).unwrap();
        let mut st = ChainState::new(vec![true, false, true, false], 5, 0);
        for _ in 0..200 {
            let before = st.config.clone();
            let kept = fs.noise(&mut st);
            assert!(kept.assignments.keys().all(|&v| before[v]));
            let rep = fs.denoise(&mut st, &kept).unwrap();
            assert!(rep.is_exact());
            assert!(is_valid(&m, &st.config));
            assert!(kept.assignments.keys().all(|&v| st.config[v]));
        }
    }

    #[test]
    fn field_dynamics_inner_glauber_is_valid() {
        let g = Graph::simple(6, &[(0, 1), (1, 2), (2, 3), (3, 4), (4, 5)]).unwrap();
        let m = SpinModel::hardcore(g, 2.0).unwrap();
        let inner = InnerSpec { exact_cap: 2, steps_per_vertex: Some(20.0) };
        let fs = FieldSampler::new(&m, 0.3, inner).unwrap();
        let mut st = ChainState::new(vec![false; 6], 9, 0);
        let mut approx = 0;
        for _ in 0..200 {
            if !fs.step(&mut st).unwrap().is_exact() {
                approx += 1;
            }
            assert!(is_valid(&m, &st.config));
        }
        assert!(approx > 0);
    }

    #[test]
    fn proximal_decoupled_is_uniform() {
        let m = SpinModel::ising_matrix(DMatrix::zeros(3, 3), vec![0.0; 3]).unwrap();
        let run = run_chain(&m, &RunParams::new(Chain::Proximal, 20_000, 2)).unwrap();
        for &mean in &run.summary.means {
            assert!(mean.abs() < 0.05);
        }
    }

    #[test]
    fn covariance_estimate_on_product_model() {
        let m = SpinModel::ising(Graph::simple(4, &[]).unwrap(), 0.0, vec![0.3; 4]).unwrap();
        let p = CovarianceParams {
            chain: Chain::Glauber,
            init: Init::Empty,
            burn_in_sweeps: 10,
            sample_sweeps: 20_000,
            batches: 20,
            seed: 4,
            chain_index: 0,
        };
        let e = estimate_covariance_quadratic(&m, &[1.0; 4], &p).unwrap();
        let var1 = 1.0 - 0.3f64.tanh().powi(2);
        assert!((e.value - var1).abs() < 4.0 * e.stderr + 0.02, "{e:?}");
        let d = exact_distribution(&m).unwrap();
        assert!((d.linear_statistic_variance(&[1.0; 4], Encoding::PlusMinus) / 4.0 - var1).abs() < 1e-12);
    }

    #[test]
    fn hex_encoding() {
        assert_eq!(config_hex(&[true, false, false, false, true]), "11");
        assert_eq!(config_hex(&[false, true]), "2");
    }
}
