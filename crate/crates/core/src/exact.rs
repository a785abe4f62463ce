//! Brute-force oracles over enumerated state spaces.
//!
//! A configuration is a bit mask: bit `v` set means vertex `v` is occupied (hardcore)
//! or has spin `+1` (Ising).

use std::io::Write;

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{budget, param};
use crate::models::{apply_pinning, factor_interaction, Pinning, SpinModel};
use crate::numeric::{gauss_hermite, logsumexp, sigmoid};
use crate::{Error, Result};

/// Largest `n` for which a distribution table is built.
pub const DIST_CAP: usize = 24;
/// Largest `n` for which a kernel is built.
pub const KERNEL_CAP: usize = 20;
/// Largest number of dense kernel entries (states squared).
pub const KERNEL_ENTRY_CAP: usize = 1 << 26;
/// Largest `n` for enumeration over all pinnings.
pub const PINNING_CAP: usize = 14;
/// Gauss–Hermite nodes per latent dimension in the proximal kernel.
pub const QUADRATURE_NODES: usize = 64;

/// Unnormalised log-weights of all `2^n` configurations, by Gray-code updates.
pub fn log_weight_table(model: &SpinModel) -> Result<Vec<f64>> {
    log_weight_table_capped(model, DIST_CAP)
}

fn log_weight_table_capped(model: &SpinModel, cap: usize) -> Result<Vec<f64>> {
    let n = model.n();
    if n > cap {
        return budget(format!("state space 2^{n} exceeds the cap 2^{cap}"));
    }
    let size = 1usize << n;
    let mut table = vec![0.0; size];
    match model {
        SpinModel::Hardcore { graph, fugacity } => {
            let nbr: Vec<u64> = (0..n).map(|v| graph.neighbor_mask(v)).collect();
            let lf: Vec<f64> = fugacity.iter().map(|l| l.ln()).collect();
            let (mut mask, mut conflicts, mut lw) = (0usize, 0u32, 0.0f64);
            for k in 1..size {
                let v = k.trailing_zeros() as usize;
                let bit = 1usize << v;
                let touching = (nbr[v] & mask as u64).count_ones();
                if mask & bit == 0 {
                    conflicts += touching;
                    lw += lf[v];
                } else {
                    conflicts -= touching;
                    lw -= lf[v];
                }
                mask ^= bit;
                if k & 0xfff == 0 {
                    lw = (0..n).filter(|&u| mask >> u & 1 == 1).map(|u| lf[u]).sum();
                }
                table[mask] = if conflicts == 0 { lw } else { f64::NEG_INFINITY };
            }
        }
        SpinModel::IsingGraph { graph, beta, fields } => {
            let nbrs: Vec<&[(usize, u32)]> = (0..n).map(|v| graph.neighbors(v)).collect();
            let energy = |mask: usize| {
                let s = |u: usize| if mask >> u & 1 == 1 { 1.0 } else { -1.0 };
                let pair: f64 = graph.edges().iter().map(|&(u, v)| s(u) * s(v)).sum();
                beta * pair + (0..n).map(|u| fields[u] * s(u)).sum::<f64>()
            };
            let mut mask = 0usize;
            let mut e = energy(0);
            table[0] = e;
            for k in 1..size {
                let v = k.trailing_zeros() as usize;
                let s_old = if mask >> v & 1 == 1 { 1.0 } else { -1.0 };
                let local: f64 = nbrs[v]
                    .iter()
                    .map(|&(u, m)| m as f64 * if mask >> u & 1 == 1 { 1.0 } else { -1.0 })
                    .sum();
                e -= 2.0 * s_old * (fields[v] + beta * local);
                mask ^= 1 << v;
                if k & 0xfff == 0 {
                    e = energy(mask);
                }
                table[mask] = e;
            }
        }
        SpinModel::IsingMatrix { j, fields } => {
            let energy = |mask: usize| {
                let s = |u: usize| if mask >> u & 1 == 1 { 1.0 } else { -1.0 };
                let mut q = 0.0;
                for a in 0..n {
                    for b in 0..n {
                        q += j[(a, b)] * s(a) * s(b);
                    }
                }
                0.5 * q + (0..n).map(|u| fields[u] * s(u)).sum::<f64>()
            };
            let mut mask = 0usize;
            let mut e = energy(0);
            table[0] = e;
            for k in 1..size {
                let v = k.trailing_zeros() as usize;
                let s_old = if mask >> v & 1 == 1 { 1.0 } else { -1.0 };
                let local: f64 = (0..n)
                    .filter(|&u| u != v)
                    .map(|u| j[(v, u)] * if mask >> u & 1 == 1 { 1.0 } else { -1.0 })
                    .sum();
                e -= 2.0 * s_old * (fields[v] + local);
                mask ^= 1 << v;
                if k & 0xfff == 0 {
                    e = energy(mask);
                }
                table[mask] = e;
            }
        }
    }
    Ok(table)
}

/// Normalised log-probability table over all `2^n` configurations.
#[derive(Clone, Debug)]
pub struct ExactDistribution {
    n: usize,
    log_probs: Vec<f64>,
    log_z: f64,
}

impl ExactDistribution {
    pub fn from_log_weights(n: usize, mut log_w: Vec<f64>) -> Result<ExactDistribution> {
        if log_w.len() != 1 << n {
            return param("table length must be 2^n");
        }
        let log_z = logsumexp(&log_w);
        if log_z == f64::NEG_INFINITY {
            return Err(Error::EmptySupport("all configurations have zero weight".into()));
        }
        log_w.iter_mut().for_each(|w| *w -= log_z);
        Ok(ExactDistribution { n, log_probs: log_w, log_z })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn log_probs(&self) -> &[f64] {
        &self.log_probs
    }

    /// Log of the partition function of the model the table was built from.
    pub fn log_z(&self) -> f64 {
        self.log_z
    }

    pub fn prob(&self, mask: usize) -> f64 {
        self.log_probs[mask].exp()
    }

    pub fn probs(&self) -> Vec<f64> {
        self.log_probs.iter().map(|l| l.exp()).collect()
    }

    /// Configurations with positive probability, in increasing mask order.
    pub fn support(&self) -> Vec<usize> {
        (0..self.log_probs.len()).filter(|&m| self.log_probs[m] > f64::NEG_INFINITY).collect()
    }

    /// Probabilities restricted to `states` (no renormalisation).
    pub fn restrict(&self, states: &[usize]) -> Vec<f64> {
        states.iter().map(|&s| self.prob(s)).collect()
    }

    /// First and second moments of the bit indicators.
    pub fn moments(&self) -> Moments {
        Moments::from_weights(self.n, (0..self.log_probs.len()).map(|m| (m, self.prob(m))))
    }

    /// Moments conditioned on the bits in `pinned` equalling those in `values`;
    /// `None` when the pinning has zero probability.
    pub fn conditional_moments(&self, pinned: usize, values: usize) -> Option<Moments> {
        let full = (1usize << self.n) - 1;
        let free = full & !pinned;
        let mut states = Vec::new();
        let mut sub = free;
        loop {
            let m = values | sub;
            let p = self.prob(m);
            if p > 0.0 {
                states.push((m, p));
            }
            if sub == 0 {
                break;
            }
            sub = (sub - 1) & free;
        }
        let total: f64 = states.iter().map(|s| s.1).sum();
        (total > 0.0).then(|| Moments::from_weights(self.n, states.into_iter()))
    }

    /// `E[g(X)]` for a function of the configuration.
    pub fn expect(&self, g: impl Fn(usize) -> f64) -> f64 {
        (0..self.log_probs.len()).map(|m| self.prob(m) * g(m)).sum()
    }

    /// `Var(Σ_i s_i X_i)` with `X_i` in the given encoding, by enumeration.
    pub fn linear_statistic_variance(&self, s: &[f64], enc: Encoding) -> f64 {
        let stat = |m: usize| -> f64 {
            (0..self.n).map(|i| s[i] * enc.value(m >> i & 1 == 1)).sum()
        };
        let mean = self.expect(stat);
        self.expect(|m| (stat(m) - mean).powi(2))
    }
}

/// Coordinate encoding for covariance matrices.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Encoding {
    ZeroOne,
    PlusMinus,
}

impl Encoding {
    pub fn value(self, bit: bool) -> f64 {
        match (self, bit) {
            (_, true) => 1.0,
            (Encoding::ZeroOne, false) => 0.0,
            (Encoding::PlusMinus, false) => -1.0,
        }
    }

    /// Hardcore models use 0/1 and Ising models ±1.
    pub fn natural(model: &SpinModel) -> Encoding {
        if model.is_hardcore() {
            Encoding::ZeroOne
        } else {
            Encoding::PlusMinus
        }
    }

    fn scale(self) -> f64 {
        match self {
            Encoding::ZeroOne => 1.0,
            Encoding::PlusMinus => 4.0,
        }
    }
}

/// Bit-indicator moments: `p1[i] = Pr[X_i=1]`, `p0[i] = Pr[X_i=0]`, `q[(i,j)] = Pr[X_i=X_j=1]`.
#[derive(Clone, Debug)]
pub struct Moments {
    pub p1: Vec<f64>,
    pub p0: Vec<f64>,
    pub q: DMatrix<f64>,
}

impl Moments {
    /// Moments of a weighted set of configurations (weights need not be normalised).
    pub fn from_weights(n: usize, states: impl Iterator<Item = (usize, f64)>) -> Moments {
        let mut p1 = vec![0.0; n];
        let mut q = DMatrix::zeros(n, n);
        let mut total = 0.0;
        let mut bits = Vec::with_capacity(n);
        for (m, w) in states {
            if w == 0.0 {
                continue;
            }
            total += w;
            bits.clear();
            bits.extend((0..n).filter(|&i| m >> i & 1 == 1));
            for (a, &i) in bits.iter().enumerate() {
                p1[i] += w;
                for &j in &bits[a + 1..] {
                    q[(i, j)] += w;
                }
            }
        }
        let mut p0 = vec![0.0; n];
        for i in 0..n {
            p1[i] /= total;
            p0[i] = (1.0 - p1[i]).max(0.0);
            q[(i, i)] = p1[i];
            for j in i + 1..n {
                q[(i, j)] /= total;
                q[(j, i)] = q[(i, j)];
            }
        }
        // exact zeros for frozen coordinates, so degeneracy tests are reliable
        for i in 0..n {
            if p1[i] >= 1.0 {
                p0[i] = 0.0;
            }
        }
        Moments { p1, p0, q }
    }

    pub fn n(&self) -> usize {
        self.p1.len()
    }

    /// Coordinates whose value is not almost surely fixed.
    pub fn is_free(&self, i: usize) -> bool {
        self.p1[i] > 0.0 && self.p0[i] > 0.0
    }

    pub fn covariance(&self, enc: Encoding) -> DMatrix<f64> {
        let n = self.n();
        DMatrix::from_fn(n, n, |i, j| {
            let c = if i == j { self.p1[i] * self.p0[i] } else { self.q[(i, j)] - self.p1[i] * self.p1[j] };
            enc.scale() * c
        })
    }

    /// `Ψ(i,j) = Pr[X_j=1 | X_i=1] − Pr[X_j=1 | X_i=0]`; rows and columns of frozen
    /// coordinates are zero and the diagonal of free coordinates is one.
    pub fn influence(&self) -> DMatrix<f64> {
        let n = self.n();
        DMatrix::from_fn(n, n, |i, j| {
            if !self.is_free(i) || !self.is_free(j) {
                0.0
            } else if i == j {
                1.0
            } else {
                let q = self.q[(i, j)];
                q / self.p1[i] - (self.p1[j] - q).max(0.0) / self.p0[i]
            }
        })
    }

    /// Ratio identity `Ψ(i,j) = Cov(i,j)/Var(i)` on free rows.
    pub fn influence_by_ratio(&self) -> DMatrix<f64> {
        let cov = self.covariance(Encoding::ZeroOne);
        let n = self.n();
        DMatrix::from_fn(n, n, |i, j| {
            if !self.is_free(i) || !self.is_free(j) {
                0.0
            } else {
                cov[(i, j)] / cov[(i, i)]
            }
        })
    }

    /// `λ_max(D^{-1/2} Cov D^{-1/2})` over free coordinates, or 0 when frozen
    /// coordinates exist and the free block is empty. Equals `λ_max(Ψ)`.
    pub fn lambda_max(&self) -> f64 {
        let free: Vec<usize> = (0..self.n()).filter(|&i| self.is_free(i)).collect();
        if free.is_empty() {
            return 0.0;
        }
        let cov = self.covariance(Encoding::ZeroOne);
        let k = free.len();
        let m = DMatrix::from_fn(k, k, |a, b| {
            let (i, j) = (free[a], free[b]);
            cov[(i, j)] / (cov[(i, i)] * cov[(j, j)]).sqrt()
        });
        let top = SymmetricEigen::new(m).eigenvalues.max();
        if k < self.n() {
            top.max(0.0)
        } else {
            top
        }
    }
}

/// Largest real part among the eigenvalues of a general square matrix.
pub fn lambda_max_general(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 {
        return 0.0;
    }
    m.complex_eigenvalues().iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max)
}

pub fn exact_distribution(model: &SpinModel) -> Result<ExactDistribution> {
    exact_distribution_capped(model, DIST_CAP)
}

pub fn exact_distribution_capped(model: &SpinModel, cap: usize) -> Result<ExactDistribution> {
    let table = log_weight_table_capped(model, cap)?;
    ExactDistribution::from_log_weights(model.n(), table)
}

/// `log Z` of the (pinned) model; `-inf` when the pinning leaves no feasible configuration.
pub fn log_partition(model: &SpinModel, pinning: Option<&Pinning>) -> Result<f64> {
    let Some(pinning) = pinning.filter(|p| !p.is_empty()) else {
        return Ok(exact_distribution(model)?.log_z());
    };
    match apply_pinning(model, pinning) {
        Ok(reduced) => {
            let table = log_weight_table(&reduced.model)?;
            Ok(logsumexp(&table) + reduced.log_const)
        }
        Err(Error::EmptySupport(_)) => Ok(f64::NEG_INFINITY),
        Err(e) => Err(e),
    }
}

pub fn influence_matrix(model: &SpinModel) -> Result<DMatrix<f64>> {
    Ok(exact_distribution(model)?.moments().influence())
}

pub fn covariance_matrix(model: &SpinModel, enc: Encoding) -> Result<DMatrix<f64>> {
    Ok(exact_distribution(model)?.moments().covariance(enc))
}

/// `λ_max(Ψ)`, optionally maximised over every feasible pinning (`3^n` of them).
pub fn si_lambda_max(model: &SpinModel, over_pinnings: bool) -> Result<f64> {
    let dist = exact_distribution(model)?;
    if over_pinnings {
        Ok(max_over_pinnings(&dist)?.0)
    } else {
        Ok(dist.moments().lambda_max())
    }
}

/// Maximum of `λ_max(Ψ^τ)` over all pinnings `τ` with positive probability, with the
/// maximising pinning as `(pinned mask, values mask)`.
pub fn max_over_pinnings(dist: &ExactDistribution) -> Result<(f64, usize, usize)> {
    let n = dist.n();
    if n > PINNING_CAP {
        return budget(format!("pinning enumeration needs n <= {PINNING_CAP}, got {n}"));
    }
    let full = (1usize << n) - 1;
    let mut best = (f64::NEG_INFINITY, 0, 0);
    for pinned in 0..=full {
        let mut values = pinned;
        loop {
            if let Some(m) = dist.conditional_moments(pinned, values) {
                let l = m.lambda_max();
                if l > best.0 {
                    best = (l, pinned, values);
                }
            }
            if values == 0 {
                break;
            }
            values = (values - 1) & pinned;
        }
    }
    Ok(best)
}

/// Row-stochastic matrix over an enumerated state space (sorted masks).
#[derive(Clone, Debug)]
pub struct DenseKernel {
    n: usize,
    states: Vec<usize>,
    matrix: DMatrix<f64>,
}

impl DenseKernel {
    pub fn new(n: usize, states: Vec<usize>, matrix: DMatrix<f64>) -> Result<DenseKernel> {
        if matrix.nrows() != states.len() || matrix.ncols() != states.len() {
            return param("kernel matrix must be square over the state list");
        }
        if states.windows(2).any(|w| w[0] >= w[1]) {
            return param("kernel states must be strictly increasing");
        }
        Ok(DenseKernel { n, states, matrix })
    }

    /// Number of vertices of the underlying model.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn states(&self) -> &[usize] {
        &self.states
    }

    pub fn size(&self) -> usize {
        self.states.len()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn index_of(&self, mask: usize) -> Option<usize> {
        self.states.binary_search(&mask).ok()
    }

    pub fn row(&self, mask: usize) -> Option<Vec<f64>> {
        let i = self.index_of(mask)?;
        Some(self.matrix.row(i).iter().copied().collect())
    }

    /// `max_x |Σ_y K(x,y) − 1|`.
    pub fn row_sum_error(&self) -> f64 {
        self.matrix.row_iter().map(|r| (r.sum() - 1.0).abs()).fold(0.0, f64::max)
    }

    pub fn min_entry(&self) -> f64 {
        self.matrix.min()
    }

    /// `max_y |(πK)(y) − π(y)|`.
    pub fn stationarity_error(&self, pi: &[f64]) -> f64 {
        let k = self.size();
        (0..k)
            .map(|y| ((0..k).map(|x| pi[x] * self.matrix[(x, y)]).sum::<f64>() - pi[y]).abs())
            .fold(0.0, f64::max)
    }

    /// `max_{x,y} |π(x)K(x,y) − π(y)K(y,x)|`.
    pub fn reversibility_error(&self, pi: &[f64]) -> f64 {
        let k = self.size();
        let mut worst = 0.0f64;
        for x in 0..k {
            for y in x + 1..k {
                worst = worst.max((pi[x] * self.matrix[(x, y)] - pi[y] * self.matrix[(y, x)]).abs());
            }
        }
        worst
    }

    /// Composition `self · other` on a shared state space.
    pub fn compose(&self, other: &DenseKernel) -> Result<DenseKernel> {
        if self.states != other.states {
            return param("kernels act on different state spaces");
        }
        Ok(DenseKernel { n: self.n, states: self.states.clone(), matrix: &self.matrix * &other.matrix })
    }

    /// `(Kf)(x) = Σ_y K(x,y) f(y)`.
    pub fn apply(&self, f: &[f64]) -> Vec<f64> {
        let v = nalgebra::DVector::from_column_slice(f);
        (&self.matrix * v).iter().copied().collect()
    }

    pub fn write_csv(&self, w: &mut impl Write) -> Result<()> {
        write_matrix_csv(w, &self.matrix)
    }
}

fn kernel_states(table: &[f64], n: usize) -> Result<Vec<usize>> {
    if n > KERNEL_CAP {
        return budget(format!("kernels need n <= {KERNEL_CAP}, got {n}"));
    }
    let states: Vec<usize> = (0..table.len()).filter(|&m| table[m] > f64::NEG_INFINITY).collect();
    if states.len().saturating_mul(states.len()) > KERNEL_ENTRY_CAP {
        return budget(format!("{} states exceed the dense kernel budget", states.len()));
    }
    Ok(states)
}

/// Exact single-site heat-bath kernel over the feasible states.
pub fn glauber_kernel(model: &SpinModel) -> Result<DenseKernel> {
    let n = model.n();
    if n > KERNEL_CAP {
        return budget(format!("kernels need n <= {KERNEL_CAP}, got {n}"));
    }
    let table = log_weight_table(model)?;
    let states = kernel_states(&table, n)?;
    let k = states.len();
    let mut m = DMatrix::zeros(k, k);
    let idx = |mask: usize| states.binary_search(&mask).expect("feasible state");
    for (a, &x) in states.iter().enumerate() {
        for v in 0..n {
            let (x1, x0) = (x | 1 << v, x & !(1 << v));
            let p1 = sigmoid(table[x1] - table[x0]);
            if p1 > 0.0 {
                m[(a, idx(x1))] += p1 / n as f64;
            }
            if p1 < 1.0 {
                m[(a, idx(x0))] += (1.0 - p1) / n as f64;
            }
        }
    }
    DenseKernel::new(n, states, m)
}

/// The two halves of field dynamics on the feasible states: `P` thins each set bit
/// independently with keep probability `θ`; `Q` resamples from the `(1−θ)`-tilted
/// distribution conditioned on containing the current set.
pub fn field_dynamics_parts(model: &SpinModel, theta: f64) -> Result<(DenseKernel, DenseKernel)> {
    if !(theta > 0.0 && theta < 1.0) {
        return param("field dynamics needs θ in (0, 1)");
    }
    let n = model.n();
    if n > KERNEL_CAP {
        return budget(format!("kernels need n <= {KERNEL_CAP}, got {n}"));
    }
    let table = log_weight_table(model)?;
    let states = kernel_states(&table, n)?;
    let k = states.len();
    let idx = |mask: usize| states.binary_search(&mask).expect("feasible state");
    let (lt, l1t) = (theta.ln(), (-theta).ln_1p());
    let full = (1usize << n) - 1;

    let mut p = DMatrix::zeros(k, k);
    for (a, &t) in states.iter().enumerate() {
        let size_t = t.count_ones() as f64;
        let mut s = t;
        loop {
            let size_s = s.count_ones() as f64;
            p[(a, idx(s))] = (size_s * lt + (size_t - size_s) * l1t).exp();
            if s == 0 {
                break;
            }
            s = (s - 1) & t;
        }
    }

    let mut q = DMatrix::zeros(k, k);
    let mut logs = Vec::new();
    let mut targets = Vec::new();
    for (a, &s) in states.iter().enumerate() {
        logs.clear();
        targets.clear();
        let rest = full & !s;
        let mut sub = rest;
        loop {
            let t = s | sub;
            if table[t] > f64::NEG_INFINITY {
                logs.push(table[t] + t.count_ones() as f64 * l1t);
                targets.push(idx(t));
            }
            if sub == 0 {
                break;
            }
            sub = (sub - 1) & rest;
        }
        let lz = logsumexp(&logs);
        for (&l, &b) in logs.iter().zip(&targets) {
            q[(a, b)] = (l - lz).exp();
        }
    }
    Ok((DenseKernel::new(n, states.clone(), p)?, DenseKernel::new(n, states, q)?))
}

/// Field-dynamics kernel `K = P·Q`.
pub fn field_dynamics_kernel(model: &SpinModel, theta: f64) -> Result<DenseKernel> {
    let (p, q) = field_dynamics_parts(model, theta)?;
    p.compose(&q)
}

/// Proximal-sampler kernel at `θ = ½` by tensor Gauss–Hermite quadrature over the latent
/// Gaussian (rank of `J` at most 3).
pub fn proximal_kernel(model: &SpinModel, theta: f64) -> Result<DenseKernel> {
    if theta != 0.5 {
        return param("the exact proximal kernel is implemented for θ = 1/2 only");
    }
    let h = match model.fields() {
        Some(h) => h.to_vec(),
        None => return param("proximal kernel needs an Ising model"),
    };
    let n = model.n();
    if n > KERNEL_CAP {
        return budget(format!("kernels need n <= {KERNEL_CAP}, got {n}"));
    }
    let l = factor_interaction(model, 1e-12)?;
    let r = l.nrows();
    if r > 3 {
        return budget(format!("proximal quadrature is tensorised up to rank 3, J has rank {r}"));
    }
    let size = 1usize << n;
    if size * size > KERNEL_ENTRY_CAP {
        return budget("proximal kernel too large for a dense matrix");
    }
    let (t, w) = gauss_hermite(QUADRATURE_NODES);
    let g: Vec<f64> = t.iter().map(|t| t * std::f64::consts::SQRT_2).collect();
    let gw: Vec<f64> = w.iter().map(|w| w / std::f64::consts::PI.sqrt()).collect();
    let points = QUADRATURE_NODES.pow(r as u32);

    let spins = |mask: usize| -> Vec<f64> {
        (0..n).map(|i| if mask >> i & 1 == 1 { 1.0 } else { -1.0 }).collect()
    };
    let mut m = DMatrix::zeros(size, size);
    let mut prob = vec![0.0; size];
    let mut y = vec![0.0; r];
    for x in 0..size {
        let sx = spins(x);
        let mean: Vec<f64> = (0..r).map(|a| (0..n).map(|i| l[(a, i)] * sx[i]).sum()).collect();
        for pt in 0..points {
            let mut weight = 1.0;
            let mut code = pt;
            for a in 0..r {
                let node = code % QUADRATURE_NODES;
                code /= QUADRATURE_NODES;
                y[a] = mean[a] + g[node];
                weight *= gw[node];
            }
            prob[0] = weight;
            for i in 0..n {
                let field = h[i] + (0..r).map(|a| l[(a, i)] * y[a]).sum::<f64>();
                let up = sigmoid(2.0 * field);
                let half = 1usize << i;
                for z in 0..half {
                    let base = prob[z];
                    prob[z | half] = base * up;
                    prob[z] = base * (1.0 - up);
                }
            }
            for z in 0..size {
                m[(x, z)] += prob[z];
            }
        }
    }
    DenseKernel::new(n, (0..size).collect(), m)
}

/// Spectral summary of a kernel against its stationary law.
#[derive(Clone, Debug)]
pub struct Diagnostics {
    /// `1 − λ₂`.
    pub gap: f64,
    /// `1/(n·gap)`.
    pub tensorization_constant: f64,
    /// `(t, max_x d_TV(δ_x K^t, μ))` for `t = 1, 2, 4, …`.
    pub tv_curve: Vec<(u64, f64)>,
}

/// Spectral gap, Glauber tensorization constant and worst-start TV curve up to `t = 2^max_log2_t`.
pub fn chain_diagnostics(
    kernel: &DenseKernel,
    mu: &ExactDistribution,
    max_log2_t: u32,
) -> Result<Diagnostics> {
    let pi = mu.restrict(kernel.states());
    let mass: f64 = pi.iter().sum();
    if (mass - 1.0).abs() > 1e-8 {
        return param("kernel state space misses stationary mass");
    }
    let err = kernel.stationarity_error(&pi);
    if err > 1e-8 {
        return param(format!("kernel is not stationary for μ (error {err:e})"));
    }
    let k = kernel.size();
    let gap = if k <= 1 {
        1.0
    } else {
        let mut eig: Vec<f64> = if kernel.reversibility_error(&pi) <= 1e-10 {
            let s = DMatrix::from_fn(k, k, |x, y| {
                let a = pi[x].sqrt() * kernel.matrix[(x, y)] / pi[y].sqrt();
                let b = pi[y].sqrt() * kernel.matrix[(y, x)] / pi[x].sqrt();
                0.5 * (a + b)
            });
            SymmetricEigen::new(s).eigenvalues.iter().copied().collect()
        } else {
            kernel.matrix.complex_eigenvalues().iter().map(|z| z.re).collect()
        };
        eig.sort_by(|a, b| b.total_cmp(a));
        1.0 - eig[1]
    };
    let mut tv_curve = Vec::new();
    let mut power = kernel.matrix.clone();
    for e in 0..=max_log2_t {
        let tv = (0..k)
            .map(|x| 0.5 * (0..k).map(|y| (power[(x, y)] - pi[y]).abs()).sum::<f64>())
            .fold(0.0, f64::max);
        tv_curve.push((1u64 << e, tv));
        if e < max_log2_t {
            power = &power * &power;
        }
    }
    let n = kernel.n().max(1) as f64;
    Ok(Diagnostics { gap, tensorization_constant: 1.0 / (n * gap), tv_curve })
}

/// φ-entropy kinds.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PhiKind {
    /// `φ(x) = x²`.
    Variance,
    /// `φ(x) = x log x`.
    Entropy,
}

/// `E_p[φ(f)] − φ(E_p[f])` for a probability vector `p`.
pub fn phi_entropy(p: &[f64], f: &[f64], kind: PhiKind) -> Result<f64> {
    if p.len() != f.len() {
        return param("p and f must have the same length");
    }
    let phi = |x: f64| match kind {
        PhiKind::Variance => x * x,
        PhiKind::Entropy => {
            if x == 0.0 {
                0.0
            } else {
                x * x.ln()
            }
        }
    };
    if kind == PhiKind::Entropy && f.iter().zip(p).any(|(&v, &q)| q > 0.0 && v < 0.0) {
        return param("entropy needs f >= 0");
    }
    let mean: f64 = p.iter().zip(f).map(|(q, v)| q * v).sum();
    let e_phi: f64 = p.iter().zip(f).map(|(&q, &v)| if q > 0.0 { q * phi(v) } else { 0.0 }).sum();
    Ok((e_phi - phi(mean)).max(0.0))
}

fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

/// Row-major CSV with 17 significant digits.
pub fn write_matrix_csv(w: &mut impl Write, m: &DMatrix<f64>) -> Result<()> {
    for row in m.row_iter() {
        let cells: Vec<String> = row.iter().map(|&x| fmt17(x)).collect();
        writeln!(w, "{}", cells.join(","))?;
    }
    Ok(())
}

/// `mask,log_prob` rows for every configuration.
pub fn write_distribution_csv(w: &mut impl Write, dist: &ExactDistribution) -> Result<()> {
    writeln!(w, "mask,log_prob")?;
    for (m, &l) in dist.log_probs().iter().enumerate() {
        writeln!(w, "{m},{}", fmt17(l))?;
    }
    Ok(())
}
