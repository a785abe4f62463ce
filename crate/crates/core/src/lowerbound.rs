//! Generating-polynomial quantities behind the lower-bound instances.
//!
//! Hardcore: `N = (1+2x+2y+2z+x²+y²)^n`, `D = (1+x+y+z)^{2n}` and
//! `α_{A,B,C} = ([N*])^Δ / ([D*])^{Δ−1}` with the re-weighted polynomials
//! `N*(x,y,z) = N(x/(Δ−2), y/(Δ−2), z/(Δ−2)²)`, `D*(x,y,z) = D(x/(Δ−1), y/(Δ−1), z/(Δ−1)²)`.
//!
//! Ising: `N = (a·xy + x + y + a)^n` with `a = e^{2β}`, `D = (1+x)^n (1+y)^n` and
//! `α̃_{s,t} = ([N])^Δ / ([D])^{Δ−1}`, `β = −β_c(Δ)` unless stated otherwise.
//!
//! Everything is stored as natural logs; zero coefficients are `-inf`.

use std::io::Write;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{budget, param};
use crate::exact::{exact_distribution, Encoding};
use crate::graphs::{Graph, Side};
use crate::models::{beta_c, lambda_c, SpinModel};
use crate::numeric::{bisect, ln_factorial, logsumexp, LogSum};
use crate::samplers::{estimate_covariance_quadratic, CovarianceParams, Estimate};
use crate::{Error, Result};

/// Largest `n` for the hardcore tables (memory grows as `n³`).
pub const HARDCORE_MAX_N: usize = 400;
/// Largest `n` for the Ising tables.
pub const ISING_MAX_N: usize = 2000;
/// Largest `n` for the brute-force expectation over matching tuples.
pub const MATCHING_MAX_N: usize = 4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Family {
    Hardcore,
    Ising,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum PolyKind {
    Numerator,
    Denominator,
    Alpha,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TableMeta {
    pub family: Family,
    pub kind: PolyKind,
    pub n: usize,
    pub delta: usize,
    /// Ising inverse temperature; `None` for hardcore.
    pub beta: Option<f64>,
}

/// Index set of a table.
///
/// `Simplex` holds `(A,B,C)` with `C ≤ c_max` and `A + B + c_weight·C ≤ total`.
/// `Square` holds `(s,t) ∈ [0,side)²`, reported with `C = 0`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Shape {
    Simplex { total: usize, c_weight: usize, c_max: usize },
    Square { side: usize },
}

/// Dense log-space coefficient table.
#[derive(Clone, Debug)]
pub struct CoeffTable {
    meta: TableMeta,
    shape: Shape,
    slab: Vec<usize>,
    log_coeffs: Vec<f64>,
}

fn triangle(k: usize) -> usize {
    (k + 1) * (k + 2) / 2
}

fn row_offset(k: usize, a: usize) -> usize {
    a * (k + 1) - a * a.saturating_sub(1) / 2
}

impl CoeffTable {
    fn empty(meta: TableMeta, shape: Shape) -> CoeffTable {
        let (slab, len) = match shape {
            Shape::Square { side } => (Vec::new(), side * side),
            Shape::Simplex { total, c_weight, c_max } => {
                let mut slab = Vec::with_capacity(c_max + 2);
                let mut acc = 0;
                for c in 0..=c_max {
                    slab.push(acc);
                    acc += triangle(total - c_weight * c);
                }
                slab.push(acc);
                (slab, acc)
            }
        };
        CoeffTable { meta, shape, slab, log_coeffs: vec![f64::NEG_INFINITY; len] }
    }

    pub fn meta(&self) -> &TableMeta {
        &self.meta
    }

    pub fn shape(&self) -> Shape {
        self.shape
    }

    pub fn len(&self) -> usize {
        self.log_coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.log_coeffs.is_empty()
    }

    pub fn log_coeffs(&self) -> &[f64] {
        &self.log_coeffs
    }

    fn offset(&self, [a, b, c]: [usize; 3]) -> Option<usize> {
        match self.shape {
            Shape::Square { side } => (c == 0 && a < side && b < side).then(|| a * side + b),
            Shape::Simplex { total, c_weight, c_max } => {
                if c > c_max || c_weight * c > total {
                    return None;
                }
                let k = total - c_weight * c;
                (a + b <= k).then(|| self.slab[c] + row_offset(k, a) + b)
            }
        }
    }

    /// Log coefficient at an index; `-inf` outside the table.
    pub fn get(&self, idx: [usize; 3]) -> f64 {
        self.offset(idx).map_or(f64::NEG_INFINITY, |o| self.log_coeffs[o])
    }

    /// All indices in storage order.
    pub fn indices(&self) -> Box<dyn Iterator<Item = [usize; 3]> + '_> {
        match self.shape {
            Shape::Square { side } => Box::new((0..side).flat_map(move |s| (0..side).map(move |t| [s, t, 0]))),
            Shape::Simplex { total, c_weight, c_max } => Box::new((0..=c_max).flat_map(move |c| {
                let k = total - c_weight * c;
                (0..=k).flat_map(move |a| (0..=k - a).map(move |b| [a, b, c]))
            })),
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = ([usize; 3], f64)> + '_ {
        self.indices().zip(self.log_coeffs.iter().copied())
    }

    /// `log P(1,1,1)`: log-sum-exp over every entry.
    pub fn log_evaluate_at_one(&self) -> f64 {
        let chunks: Vec<f64> = self.log_coeffs.par_chunks(1 << 16).map(logsumexp).collect();
        logsumexp(&chunks)
    }

    /// Closed-form value of `log P(1,1,1)` for the numerator and denominator tables.
    pub fn expected_log_evaluate_at_one(&self) -> Option<f64> {
        let TableMeta { family, kind, n, delta, beta } = self.meta;
        let (n, d) = (n as f64, delta as f64);
        match (family, kind) {
            (_, PolyKind::Alpha) => None,
            (Family::Hardcore, PolyKind::Numerator) => Some(2.0 * n * (d / (d - 2.0)).ln()),
            (Family::Hardcore, PolyKind::Denominator) => Some(4.0 * n * (d / (d - 1.0)).ln()),
            (Family::Ising, PolyKind::Numerator) => {
                Some(n * (2.0 + 2.0 * (2.0 * beta.unwrap_or(0.0)).exp()).ln())
            }
            (Family::Ising, PolyKind::Denominator) => Some(2.0 * n * 2f64.ln()),
        }
    }

    /// `|log P(1,1,1) − closed form|`, `None` for α tables.
    pub fn checksum_error(&self) -> Option<f64> {
        self.expected_log_evaluate_at_one().map(|e| (self.log_evaluate_at_one() - e).abs())
    }

    /// CSV with one row per nonzero coefficient; zero coefficients are omitted.
    pub fn write_csv(&self, w: &mut impl Write) -> Result<()> {
        let name = match self.meta.kind {
            PolyKind::Alpha => "log_alpha",
            _ => "log_coeff",
        };
        match self.meta.family {
            Family::Hardcore => writeln!(w, "A,B,C,{name}")?,
            Family::Ising => writeln!(w, "s,t,{name}")?,
        }
        for ([a, b, c], v) in self.iter() {
            if v == f64::NEG_INFINITY {
                continue;
            }
            match self.meta.family {
                Family::Hardcore => writeln!(w, "{a},{b},{c},{v:.16e}")?,
                Family::Ising => writeln!(w, "{a},{b},{v:.16e}")?,
            }
        }
        Ok(())
    }
}

fn ln_factorials(up_to: usize) -> Vec<f64> {
    (0..=up_to as u64).map(ln_factorial).collect()
}

/// `log(e^c + Σ e^x + Σ e^y)`, summed pairwise so swapping `x` and `y` gives the same bits.
fn lse_mirrored(c: f64, x: [f64; 2], y: [f64; 2]) -> f64 {
    let m = c.max(x[0]).max(x[1]).max(y[0]).max(y[1]);
    if m == f64::NEG_INFINITY {
        return m;
    }
    let e = |v: f64| (v - m).exp();
    m + (e(c) + ((e(x[0]) + e(y[0])) + (e(x[1]) + e(y[1])))).ln()
}

fn check_hardcore(n: usize, delta: usize) -> Result<()> {
    if n == 0 || delta < 3 {
        return param("hardcore tables need n >= 1 and Δ >= 3");
    }
    if n > HARDCORE_MAX_N {
        return budget(format!("hardcore tables need n <= {HARDCORE_MAX_N}, got {n}"));
    }
    Ok(())
}

/// `log [x^A y^B] W^m` on the triangle `A + B ≤ 2m`, `W = 1+2x+2y+x²+y²`,
/// one factor at a time. `emit(m, triangle)` sees every power `0..=max_m`.
fn stream_w_powers(max_m: usize, mut emit: impl FnMut(usize, &[f64])) {
    let ln2 = 2f64.ln();
    let mut cur = vec![0.0];
    emit(0, &cur);
    for m in 1..=max_m {
        let (k_old, k) = (2 * m - 2, 2 * m);
        let old = &cur;
        let get = |a: isize, b: isize| -> f64 {
            if a < 0 || b < 0 || (a + b) as usize > k_old {
                f64::NEG_INFINITY
            } else {
                old[row_offset(k_old, a as usize) + b as usize]
            }
        };
        let rows: Vec<Vec<f64>> = (0..=k)
            .into_par_iter()
            .map(|a| {
                let a = a as isize;
                (0..=(k as isize - a))
                    .map(|b| {
                        lse_mirrored(get(a, b), [ln2 + get(a - 1, b), get(a - 2, b)], [
                            ln2 + get(a, b - 1),
                            get(a, b - 2),
                        ])
                    })
                    .collect()
            })
            .collect();
        cur = rows.concat();
        emit(m, &cur);
    }
}

/// Raw `log [x^A y^B z^C] N` for the hardcore numerator, by iterated convolution.
pub fn hardcore_numerator_raw(n: usize) -> Result<CoeffTable> {
    check_hardcore(n, 3)?;
    let meta = TableMeta { family: Family::Hardcore, kind: PolyKind::Numerator, n, delta: 0, beta: None };
    let mut table = CoeffTable::empty(meta, Shape::Simplex { total: 2 * n, c_weight: 2, c_max: n });
    let lf = ln_factorials(n);
    let ln2 = 2f64.ln();
    // N = (W + 2z)^n, so [z^C]N = C(n,C) 2^C W^{n−C}.
    stream_w_powers(n, |m, tri| {
        let c = n - m;
        let shift = lf[n] - lf[c] - lf[m] + c as f64 * ln2;
        let start = table.slab[c];
        for (dst, &v) in table.log_coeffs[start..start + tri.len()].iter_mut().zip(tri) {
            *dst = v + shift;
        }
    });
    Ok(table)
}

/// `log [x^A y^B z^C] D`, `D = (1+x+y+z)^{2n}`: the multinomial `(2n)!/(A! B! C! (2n−A−B−C)!)`.
pub fn hardcore_denominator_raw(n: usize) -> Result<CoeffTable> {
    check_hardcore(n, 3)?;
    let meta = TableMeta { family: Family::Hardcore, kind: PolyKind::Denominator, n, delta: 0, beta: None };
    let k = 2 * n;
    let mut table = CoeffTable::empty(meta, Shape::Simplex { total: k, c_weight: 1, c_max: k });
    let lf = ln_factorials(k);
    let slab = table.slab.clone();
    for c in 0..=k {
        let kc = k - c;
        let dst = &mut table.log_coeffs[slab[c]..slab[c + 1]];
        let mut i = 0;
        for a in 0..=kc {
            for b in 0..=kc - a {
                dst[i] = lf[k] - (lf[a] + lf[b]) - lf[c] - lf[k - a - b - c];
                i += 1;
            }
        }
    }
    Ok(table)
}

fn reweight(mut table: CoeffTable, delta: usize, base: f64) -> CoeffTable {
    let lb = base.ln();
    let idx: Vec<[usize; 3]> = table.indices().collect();
    for (v, [a, b, c]) in table.log_coeffs.iter_mut().zip(idx) {
        *v -= (a + b + 2 * c) as f64 * lb;
    }
    table.meta.delta = delta;
    table
}

/// The re-weighted hardcore tables `(N*, D*)`.
pub fn coeff_tables_hardcore(n: usize, delta: usize) -> Result<(CoeffTable, CoeffTable)> {
    check_hardcore(n, delta)?;
    let d = delta as f64;
    let num = reweight(hardcore_numerator_raw(n)?, delta, d - 2.0);
    let den = reweight(hardcore_denominator_raw(n)?, delta, d - 1.0);
    Ok((num, den))
}

/// `log [x^A y^B z^C] N` by the positive closed form
/// `C(n,C) 2^C Σ_j C(m,j) C(2m−2j, A) C(j, B−j) 2^{2j−B}`, `m = n − C`.
pub fn hardcore_numerator_coeff(n: usize, a: usize, b: usize, c: usize) -> f64 {
    if c > n || a + b + 2 * c > 2 * n {
        return f64::NEG_INFINITY;
    }
    let m = n - c;
    let lb = |x: usize, y: usize| crate::numeric::ln_binomial(x as u64, y as u64);
    let ln2 = 2f64.ln();
    let mut acc = LogSum::new();
    for j in 0..=m {
        if b < j || b - j > j || 2 * m - 2 * j < a {
            continue;
        }
        acc.add(lb(m, j) + lb(2 * m - 2 * j, a) + lb(j, b - j) + (2 * j - b) as f64 * ln2);
    }
    lb(n, c) + c as f64 * ln2 + acc.value()
}

/// `log α_{A,B,C}` from the closed forms, without building tables.
pub fn alpha_hardcore(n: usize, delta: usize, a: usize, b: usize, c: usize) -> Result<f64> {
    check_hardcore(n, delta)?;
    if a > 2 * n || b > 2 * n || c > 2 * n {
        return param("alpha_hardcore needs 0 <= A,B,C <= 2n");
    }
    let num = hardcore_numerator_coeff(n, a, b, c);
    if num == f64::NEG_INFINITY {
        return Ok(num);
    }
    let k = 2 * n;
    let den = ln_factorial(k as u64)
        - ln_factorial(a as u64)
        - ln_factorial(b as u64)
        - ln_factorial(c as u64)
        - ln_factorial((k - a - b - c) as u64);
    let d = delta as f64;
    let w = (a + b + 2 * c) as f64;
    Ok(d * (num - w * (d - 2.0).ln()) - (d - 1.0) * (den - w * (d - 1.0).ln()))
}

fn check_ising(n: usize, beta: f64) -> Result<()> {
    if n == 0 || !beta.is_finite() {
        return param("Ising tables need n >= 1 and finite β");
    }
    if n > ISING_MAX_N {
        return budget(format!("Ising tables need n <= {ISING_MAX_N}, got {n}"));
    }
    Ok(())
}

/// `log [x^s y^t] (a·xy + x + y + a)^n` with `ln a = log_a`, summed from the peak term outwards.
fn ising_numerator_coeff_with(lf: &[f64], n: usize, log_a: f64, s: usize, t: usize) -> f64 {
    if s > n || t > n {
        return f64::NEG_INFINITY;
    }
    // j factors contribute a·xy, n−s−t+j contribute a.
    let lo = (s + t).saturating_sub(n);
    let hi = s.min(t);
    let r = n as isize - s as isize - t as isize;
    let a2 = (2.0 * log_a).exp();
    let ratio = |j: usize| -> f64 {
        ((s - j) * (t - j)) as f64 * a2 / ((j + 1) as f64 * (r + j as isize + 1) as f64)
    };
    let (mut l, mut h) = (lo, hi);
    while l < h {
        let mid = (l + h) / 2;
        if ratio(mid) <= 1.0 {
            h = mid;
        } else {
            l = mid + 1;
        }
    }
    let peak = l;
    let log_term = |j: usize| -> f64 {
        lf[n] - lf[j] - lf[(r + j as isize) as usize] - (lf[s - j] + lf[t - j]) + (r + 2 * j as isize) as f64 * log_a
    };
    let mut sum = 1.0;
    let mut term = 1.0;
    for j in peak..hi {
        term *= ratio(j);
        sum += term;
        if term < 1e-18 * sum {
            break;
        }
    }
    term = 1.0;
    for j in (lo..peak).rev() {
        term /= ratio(j);
        sum += term;
        if term < 1e-18 * sum {
            break;
        }
    }
    log_term(peak) + sum.ln()
}

/// `log [x^s y^t] N` for the Ising numerator at inverse temperature `beta`.
pub fn ising_numerator_coeff(n: usize, beta: f64, s: usize, t: usize) -> f64 {
    ising_numerator_coeff_with(&ln_factorials(n), n, 2.0 * beta, s, t)
}

/// The Ising tables `(N, D)` at inverse temperature `beta`.
pub fn coeff_tables_ising(n: usize, delta: usize, beta: f64) -> Result<(CoeffTable, CoeffTable)> {
    check_ising(n, beta)?;
    let side = n + 1;
    let meta = TableMeta { family: Family::Ising, kind: PolyKind::Numerator, n, delta, beta: Some(beta) };
    let mut num = CoeffTable::empty(meta, Shape::Square { side });
    let mut den = CoeffTable::empty(TableMeta { kind: PolyKind::Denominator, ..meta }, Shape::Square { side });
    let lf = ln_factorials(n);
    num.log_coeffs.par_chunks_mut(side).enumerate().for_each(|(s, row)| {
        for (t, v) in row.iter_mut().enumerate() {
            *v = ising_numerator_coeff_with(&lf, n, 2.0 * beta, s, t);
        }
    });
    let lb = |k: usize| lf[n] - lf[k] - lf[n - k];
    for (i, v) in den.log_coeffs.iter_mut().enumerate() {
        *v = lb(i / side) + lb(i % side);
    }
    Ok((num, den))
}

/// `log α̃_{s,t}` at `β = −β_c(Δ)`.
pub fn alpha_ising(n: usize, delta: usize, s: usize, t: usize) -> Result<f64> {
    alpha_ising_beta(n, delta, -beta_c(delta)?, s, t)
}

/// `log α̃_{s,t}` at an explicit inverse temperature.
pub fn alpha_ising_beta(n: usize, delta: usize, beta: f64, s: usize, t: usize) -> Result<f64> {
    check_ising(n, beta)?;
    if s > n || t > n {
        return param("alpha_ising needs 0 <= s,t <= n");
    }
    let d = delta as f64;
    let num = ising_numerator_coeff(n, beta, s, t);
    let den = crate::numeric::ln_binomial(n as u64, s as u64) + crate::numeric::ln_binomial(n as u64, t as u64);
    Ok(d * num - (d - 1.0) * den)
}

/// `Δ·log N − (Δ−1)·log D` entrywise on the numerator's index set.
pub fn alpha_table(num: &CoeffTable, den: &CoeffTable) -> Result<CoeffTable> {
    if num.meta.kind != PolyKind::Numerator
        || den.meta.kind != PolyKind::Denominator
        || num.meta.family != den.meta.family
        || num.meta.n != den.meta.n
        || num.meta.delta != den.meta.delta
    {
        return param("alpha_table needs matching numerator and denominator tables");
    }
    let d = num.meta.delta as f64;
    let mut out = num.clone();
    out.meta.kind = PolyKind::Alpha;
    let idx: Vec<[usize; 3]> = num.indices().collect();
    out.log_coeffs.par_iter_mut().zip(idx.par_iter()).for_each(|(v, &i)| {
        if *v != f64::NEG_INFINITY {
            *v = d * *v - (d - 1.0) * den.get(i);
        }
    });
    Ok(out)
}

/// The α table for the hardcore family.
pub fn alpha_table_hardcore(n: usize, delta: usize) -> Result<CoeffTable> {
    let (num, den) = coeff_tables_hardcore(n, delta)?;
    alpha_table(&num, &den)
}

/// The α̃ table for the Ising family at `β = −β_c(Δ)`.
pub fn alpha_table_ising(n: usize, delta: usize) -> Result<CoeffTable> {
    let (num, den) = coeff_tables_ising(n, delta, -beta_c(delta)?)?;
    alpha_table(&num, &den)
}

fn spread_index([a, b, _]: [usize; 3]) -> usize {
    a.abs_diff(b)
}

/// Default deviation exponent: `2/3` for hardcore, `3/4` for Ising.
pub fn default_exponent(family: Family) -> f64 {
    match family {
        Family::Hardcore => 2.0 / 3.0,
        Family::Ising => 0.75,
    }
}

/// Share of α mass with `|A−B| > η·n^exponent` (Ising: `|s−t|`).
pub fn anti_concentration_ratio(alpha: &CoeffTable, eta: f64, exponent: f64) -> Result<f64> {
    if alpha.meta.kind != PolyKind::Alpha {
        return param("anti_concentration_ratio needs an α table");
    }
    if !(eta >= 0.0) {
        return param("eta must be nonnegative");
    }
    let cut = eta * (alpha.meta.n as f64).powf(exponent);
    let mut tail = LogSum::new();
    let mut total = LogSum::new();
    for (i, v) in alpha.iter() {
        total.add(v);
        if spread_index(i) as f64 > cut {
            tail.add(v);
        }
    }
    Ok((tail.value() - total.value()).exp())
}

/// Positive-definite form `Q(u, w) = κ₁u² + 2κ₂uw + κ₃w²` of the hardcore Gaussian window.
pub fn hardcore_kappas(delta: usize) -> [f64; 3] {
    let d = delta as f64;
    let k = d * d / ((d - 1.0) * (d.powi(3) - 4.0 * d * d + 6.0 * d - 4.0));
    [
        (2.0 - 2.0 * d * d + d.powi(3)) * k,
        (4.0 - 4.0 * d + d.powi(3)) * k,
        (8.0 - 16.0 * d + 12.0 * d * d - 4.0 * d.powi(3) + d.powi(4)) * k,
    ]
}

/// `Q = 2(Δ−1)/(Δ−2)` of the Ising Gaussian window.
pub fn ising_q(delta: usize) -> f64 {
    let d = delta as f64;
    2.0 * (d - 1.0) / (d - 2.0)
}

/// Center of mass of the α table.
pub fn center_of_mass(family: Family, n: usize, delta: usize) -> [f64; 3] {
    let (n, d) = (n as f64, delta as f64);
    match family {
        Family::Hardcore => {
            let u = 2.0 * (d - 1.0) * n / (d * d);
            [u, u, 2.0 * n / (d * d)]
        }
        Family::Ising => [n / 2.0, n / 2.0, 0.0],
    }
}

/// Range of `α / exp(−quadratic form)` over the window around the center of mass.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct GaussianRatio {
    pub log_min_ratio: f64,
    pub log_max_ratio: f64,
    /// Ratio at the lattice point nearest the center.
    pub log_center_ratio: f64,
    pub points: usize,
    /// Window points outside the polynomial's support (α = 0), not counted.
    pub skipped: usize,
}

impl GaussianRatio {
    /// `max_ratio / min_ratio`.
    pub fn spread(&self) -> f64 {
        (self.log_max_ratio - self.log_min_ratio).exp()
    }
}

/// Log of the Gaussian envelope at deviation `θ` from the center.
pub fn log_gaussian_envelope(family: Family, n: usize, delta: usize, theta: [f64; 3]) -> f64 {
    let n = n as f64;
    match family {
        Family::Hardcore => {
            let [k1, k2, k3] = hardcore_kappas(delta);
            let (u, w) = (theta[0] + theta[1], theta[2]);
            -(k1 * u * u + 2.0 * k2 * u * w + k3 * w * w) / (4.0 * n)
        }
        Family::Ising => {
            let u = theta[0] + theta[1];
            -ising_q(delta) * u * u / n
        }
    }
}

/// Scan the window `‖index − m‖∞ ≤ 2·n^exponent`.
pub fn gaussian_ratio_check(alpha: &CoeffTable, window_exponent: f64) -> Result<GaussianRatio> {
    let TableMeta { family, kind, n, delta, .. } = alpha.meta;
    if kind != PolyKind::Alpha {
        return param("gaussian_ratio_check needs an α table");
    }
    if delta < 3 {
        return param("gaussian_ratio_check needs Δ >= 3");
    }
    let m = center_of_mass(family, n, delta);
    let radius = 2.0 * (n as f64).powf(window_exponent);
    let range = |c: f64, top: usize| -> std::ops::RangeInclusive<usize> {
        let lo = (c - radius).ceil().max(0.0) as usize;
        let hi = ((c + radius).floor().max(0.0) as usize).min(top);
        lo..=hi
    };
    let c_range = match family {
        Family::Hardcore => range(m[2], 2 * n),
        Family::Ising => 0..=0,
    };
    let top = match family {
        Family::Hardcore => 2 * n,
        Family::Ising => n,
    };
    let nearest = m.map(|x| x.round() as usize);
    let mut out = GaussianRatio {
        log_min_ratio: f64::INFINITY,
        log_max_ratio: f64::NEG_INFINITY,
        log_center_ratio: f64::NAN,
        points: 0,
        skipped: 0,
    };
    for c in c_range {
        for a in range(m[0], top) {
            for b in range(m[1], top) {
                let idx = [a, b, c];
                let v = alpha.get(idx);
                if v == f64::NEG_INFINITY {
                    out.skipped += 1;
                    continue;
                }
                let theta = [a as f64 - m[0], b as f64 - m[1], c as f64 - m[2]];
                let r = v - log_gaussian_envelope(family, n, delta, theta);
                out.log_min_ratio = out.log_min_ratio.min(r);
                out.log_max_ratio = out.log_max_ratio.max(r);
                out.points += 1;
                if idx == nearest {
                    out.log_center_ratio = r;
                }
            }
        }
    }
    if out.points == 0 {
        return Err(Error::EmptySupport("no lattice point with α > 0 inside the window".into()));
    }
    Ok(out)
}

fn entropy(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        -x * x.ln()
    }
}

/// Inner maximiser of `f_N` and the constraint residual.
#[derive(Clone, Debug, Serialize)]
pub struct InnerSolution {
    pub theta: Vec<f64>,
    pub value: f64,
    pub residual: f64,
}

/// Lagrange variables of the hardcore inner problem: `P`, `q_i = x·Q_i`.
struct HardcoreInner {
    p: f64,
    q2: f64,
    q3: f64,
    sol: InnerSolution,
}

fn hardcore_inner(rho: [f64; 4], delta: usize) -> Result<HardcoreInner> {
    if delta < 3 {
        return param("hardcore U needs Δ >= 3");
    }
    let [r1, r2, r3, r4] = rho;
    if rho.iter().any(|&r| !(r >= 0.0) || r > 1.0) || (r1 + r2 + r3 + r4 - 1.0).abs() > 1e-12 {
        return param("ρ must be a probability vector");
    }
    let slack = r1 - r4;
    if slack < -1e-15 {
        return param("ρ outside Ω: needs ρ₂+ρ₃+2ρ₄ ≤ 1");
    }
    let x = lambda_c(delta)?.powf(1.0 / delta as f64);
    let ln_x = x.ln();
    let logp = [0.0, (2.0 * x).ln(), (2.0 * x).ln(), 2f64.ln() + 2.0 * ln_x, 2.0 * ln_x, 2.0 * ln_x];
    // P(q + q²) = ρ for each side; normalisation P(1 + q₂ + q₃) = ρ₁ − ρ₄.
    let pq = |r: f64, p: f64| 2.0 * r / ((1.0 + 4.0 * r / p).sqrt() + 1.0);
    let (p, q2, q3, theta) = if slack <= 0.0 {
        (0.0, f64::INFINITY, f64::INFINITY, vec![0.0, 0.0, 0.0, 2.0 * r4, r2, r3])
    } else {
        let g = |lp: f64| {
            let p = lp.exp();
            p + pq(r2, p) + pq(r3, p) - slack
        };
        let lp = bisect(slack.ln() - 60.0, slack.ln(), 1e-15, g);
        let p = lp.exp();
        let (a2, a3) = (pq(r2, p), pq(r3, p));
        let (q2, q3) = (a2 / p, a3 / p);
        let theta = vec![p, 2.0 * a2, 2.0 * a3, 2.0 * r4, a2 * q2, a3 * q3];
        (p, q2, q3, theta)
    };
    let value = theta.iter().zip(&logp).map(|(&t, &lp)| entropy(t) + t * lp).sum();
    let residual = [
        theta.iter().sum::<f64>() - 1.0,
        theta[1] + 2.0 * theta[4] - 2.0 * r2,
        theta[2] + 2.0 * theta[5] - 2.0 * r3,
        theta[3] - 2.0 * r4,
    ]
    .iter()
    .fold(0.0f64, |m, r| m.max(r.abs()));
    Ok(HardcoreInner { p, q2, q3, sol: InnerSolution { theta, value, residual } })
}

/// `max_θ f_N(θ)` for the hardcore family at `λ = λ_c(Δ)`.
pub fn max_f_n_hardcore(rho: [f64; 4], delta: usize) -> Result<InnerSolution> {
    hardcore_inner(rho, delta).map(|h| h.sol)
}

fn f_d_hardcore(rho: [f64; 4]) -> f64 {
    rho.iter().map(|&r| entropy(r)).sum()
}

/// `U(ρ) = Δ·max f_N − 2(Δ−1)·f_D(ρ)`.
pub fn evaluate_u_hardcore(rho: [f64; 4], delta: usize) -> Result<f64> {
    let inner = hardcore_inner(rho, delta)?;
    Ok(delta as f64 * inner.sol.value - 2.0 * (delta as f64 - 1.0) * f_d_hardcore(rho))
}

/// `∂U/∂ρ_i` for `i = 2, 3, 4` with `ρ₁` absorbing the change; interior points only.
pub fn gradient_u_hardcore(rho: [f64; 4], delta: usize) -> Result<[f64; 3]> {
    let h = hardcore_inner(rho, delta)?;
    if rho.iter().any(|&r| r <= 0.0) || h.p <= 0.0 {
        return param("gradient needs an interior point");
    }
    let d = delta as f64;
    let ln_x = lambda_c(delta)?.ln() / d;
    let [r1, r2, r3, r4] = rho;
    // Envelope theorem: ∂ max f_N / ∂ρ₂ = −2 log Q₂ with Q₂ = q₂/x, and ∂/∂ρ₄ = −2 log R, R = ρ₄/(x² P).
    let log_r = r4.ln() - 2.0 * ln_x - h.p.ln();
    Ok([
        -2.0 * d * (h.q2.ln() - ln_x) - 2.0 * (d - 1.0) * (r1 / r2).ln(),
        -2.0 * d * (h.q3.ln() - ln_x) - 2.0 * (d - 1.0) * (r1 / r3).ln(),
        -2.0 * d * log_r - 2.0 * (d - 1.0) * (r1 / r4).ln(),
    ])
}

fn sym_rho(rho2: f64, rho4: f64) -> [f64; 4] {
    [1.0 - 2.0 * rho2 - rho4, rho2, rho2, rho4]
}

/// `U^sym(ρ₂, ρ₄) = U(1−2ρ₂−ρ₄, ρ₂, ρ₂, ρ₄)`.
pub fn u_sym_hardcore(rho2: f64, rho4: f64, delta: usize) -> Result<f64> {
    evaluate_u_hardcore(sym_rho(rho2, rho4), delta)
}

/// Gradient of `U^sym`.
pub fn gradient_u_sym_hardcore(rho2: f64, rho4: f64, delta: usize) -> Result<[f64; 2]> {
    let g = gradient_u_hardcore(sym_rho(rho2, rho4), delta)?;
    Ok([g[0] + g[1], g[2]])
}

/// Critical point of a two-variable landscape with its local shape.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct CriticalPoint {
    pub point: [f64; 2],
    pub value: f64,
    pub gradient_norm: f64,
    /// Finite-difference Hessian at the point.
    pub hessian: [[f64; 2]; 2],
}

impl CriticalPoint {
    pub fn is_local_max(&self) -> bool {
        let [[a, b], [c, d]] = self.hessian;
        a < 0.0 && a * d - b * c > 0.0
    }
}

fn fd_hessian(grad: impl Fn(f64, f64) -> Result<[f64; 2]>, x: [f64; 2], h: f64) -> Result<[[f64; 2]; 2]> {
    let mut hs = [[0.0; 2]; 2];
    for k in 0..2 {
        let mut up = x;
        let mut dn = x;
        up[k] += h;
        dn[k] -= h;
        let (gu, gd) = (grad(up[0], up[1])?, grad(dn[0], dn[1])?);
        for i in 0..2 {
            hs[i][k] = (gu[i] - gd[i]) / (2.0 * h);
        }
    }
    let off = 0.5 * (hs[0][1] + hs[1][0]);
    hs[0][1] = off;
    hs[1][0] = off;
    Ok(hs)
}

/// Maximiser of `U^sym` by damped Newton on the envelope gradient.
pub fn critical_point_hardcore(delta: usize) -> Result<CriticalPoint> {
    let d = delta as f64;
    let inside = |x: [f64; 2]| x[0] > 0.0 && x[1] > 0.0 && 2.0 * x[0] + 2.0 * x[1] < 1.0;
    let grad = |a: f64, b: f64| gradient_u_sym_hardcore(a, b, delta);
    let mut x = [0.5 / d, 0.5 / (d * d)];
    for _ in 0..200 {
        let g = grad(x[0], x[1])?;
        if g[0].hypot(g[1]) < 1e-12 {
            break;
        }
        let h = fd_hessian(grad, x, 1e-7)?;
        let det = h[0][0] * h[1][1] - h[0][1] * h[1][0];
        let mut step = if h[0][0] < 0.0 && det > 0.0 {
            [-(h[1][1] * g[0] - h[0][1] * g[1]) / det, -(h[0][0] * g[1] - h[1][0] * g[0]) / det]
        } else {
            [1e-3 * g[0], 1e-3 * g[1]]
        };
        let u0 = u_sym_hardcore(x[0], x[1], delta)?;
        let mut accepted = false;
        for _ in 0..60 {
            let y = [x[0] + step[0], x[1] + step[1]];
            if inside(y) && u_sym_hardcore(y[0], y[1], delta)? >= u0 - 1e-14 {
                x = y;
                accepted = true;
                break;
            }
            step = [0.5 * step[0], 0.5 * step[1]];
        }
        if !accepted {
            break;
        }
    }
    let g = grad(x[0], x[1])?;
    Ok(CriticalPoint {
        point: x,
        value: u_sym_hardcore(x[0], x[1], delta)?,
        gradient_norm: g[0].hypot(g[1]),
        hessian: fd_hessian(grad, x, 1e-5)?,
    })
}

struct IsingInner {
    theta: [f64; 4],
    value: f64,
}

fn ising_inner(rho: [f64; 2], delta: usize) -> Result<IsingInner> {
    let beta = -beta_c(delta)?;
    let [r1, r2] = rho;
    if !(r1 > 0.0 && r1 < 1.0 && r2 > 0.0 && r2 < 1.0) {
        return param("ρ must lie in (0,1)²");
    }
    // Stationarity in t = θ₄: (ρ₁−t)(ρ₂−t) = c·t·(1−ρ₁−ρ₂+t) with c = e^{−4β} > 1, i.e.
    // (c−1)t² + (c − (c−1)S)t − P = 0 with S = ρ₁+ρ₂, P = ρ₁ρ₂; S and P keep ρ₁ ↔ ρ₂ exact.
    let (s, p) = (r1 + r2, r1 * r2);
    let c = (-4.0 * beta).exp();
    let a = c - 1.0;
    let b = c - a * s;
    let root = (b * b + 4.0 * a * p).sqrt();
    let t = if b >= 0.0 { 2.0 * p / (b + root) } else { (root - b) / (2.0 * a) };
    let t = t.clamp((s - 1.0).max(0.0), r1.min(r2));
    let theta = [(1.0 - s) + t, r1 - t, r2 - t, t];
    let value = theta.iter().map(|&x| entropy(x)).sum::<f64>() + 2.0 * beta * (theta[0] + theta[3]);
    Ok(IsingInner { theta, value })
}

/// `max_θ f_N(θ)` for the Ising family at `β = −β_c(Δ)`.
pub fn max_f_n_ising(rho: [f64; 2], delta: usize) -> Result<InnerSolution> {
    let inner = ising_inner(rho, delta)?;
    let th = inner.theta;
    let residual = [th.iter().sum::<f64>() - 1.0, th[1] + th[3] - rho[0], th[2] + th[3] - rho[1]]
        .iter()
        .fold(0.0f64, |m, r| m.max(r.abs()));
    Ok(InnerSolution { theta: th.to_vec(), value: inner.value, residual })
}

/// `U(ρ) = Δ·max f_N − (Δ−1)·f_D(ρ)`.
pub fn evaluate_u_ising(rho: [f64; 2], delta: usize) -> Result<f64> {
    let inner = ising_inner(rho, delta)?;
    let f_d: f64 = rho.iter().map(|&r| entropy(r) + entropy(1.0 - r)).sum();
    Ok(delta as f64 * inner.value - (delta as f64 - 1.0) * f_d)
}

/// Envelope gradient `∂U/∂ρ₁`, `∂U/∂ρ₂`.
pub fn gradient_u_ising(rho: [f64; 2], delta: usize) -> Result<[f64; 2]> {
    let beta = -beta_c(delta)?;
    let th = ising_inner(rho, delta)?.theta;
    let d = delta as f64;
    let part = |own: f64, r: f64| d * ((th[0] / own).ln() - 2.0 * beta) - (d - 1.0) * ((1.0 - r) / r).ln();
    Ok([part(th[1], rho[0]), part(th[2], rho[1])])
}

/// Critical point of the Ising landscape.
///
/// `U` is symmetric under `ρ₁ ↔ ρ₂`, so the search runs along the diagonal by
/// bisection on the diagonal derivative; the full gradient is reported at the result.
pub fn critical_point_ising(delta: usize) -> Result<CriticalPoint> {
    let diag = |r: f64| -> f64 {
        gradient_u_ising([r, r], delta).map(|g| g[0] + g[1]).unwrap_or(f64::NAN)
    };
    let r = bisect(1e-6, 1.0 - 1e-6, 0.0, diag);
    if !r.is_finite() {
        return Err(Error::Numeric("Ising critical point search failed".into()));
    }
    let grad = |a: f64, b: f64| gradient_u_ising([a, b], delta);
    let g = grad(r, r)?;
    Ok(CriticalPoint {
        point: [r, r],
        value: evaluate_u_ising([r, r], delta)?,
        gradient_norm: g[0].hypot(g[1]),
        hessian: fd_hessian(grad, [r, r], 1e-5)?,
    })
}

/// `α_{s,t}` (simple union) and `α̃_{s,t}` (multigraph union) by exact expectation
/// over every tuple of `Δ` perfect matchings between `L = [n]` and `R = [n]`.
#[derive(Clone, Debug)]
pub struct MatchingAlphas {
    pub n: usize,
    pub delta: usize,
    pub beta: f64,
    /// `log α_{s,t}` indexed `[s][t]`.
    pub simple: Vec<Vec<f64>>,
    /// `log α̃_{s,t}` indexed `[s][t]`.
    pub multi: Vec<Vec<f64>>,
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for pos in 0..n {
            let mut q = p.clone();
            q.insert(pos, n - 1);
            out.push(q);
        }
    }
    out
}

pub fn alpha_ising_by_matchings(n: usize, delta: usize, beta: f64) -> Result<MatchingAlphas> {
    if n == 0 || delta == 0 {
        return param("need n >= 1 and Δ >= 1");
    }
    if n > MATCHING_MAX_N {
        return budget(format!("matching enumeration needs n <= {MATCHING_MAX_N}"));
    }
    let perms = permutations(n);
    let tuples = perms.len().pow(delta as u32);
    let side = n + 1;
    let mut simple = vec![0.0; side * side];
    let mut multi = vec![0.0; side * side];
    let mut choice = vec![0usize; delta];
    let configs = 1usize << (2 * n);
    for _ in 0..tuples {
        let mut mult = vec![0u32; n * n];
        for &c in &choice {
            for (i, &j) in perms[c].iter().enumerate() {
                mult[i * n + j] += 1;
            }
        }
        for cfg in 0..configs {
            let (sm, tm) = (cfg & ((1 << n) - 1), cfg >> n);
            let (mut mono_simple, mut mono_multi) = (0u32, 0u32);
            for i in 0..n {
                for j in 0..n {
                    let k = mult[i * n + j];
                    if k > 0 && (sm >> i & 1) == (tm >> j & 1) {
                        mono_simple += 1;
                        mono_multi += k;
                    }
                }
            }
            let idx = sm.count_ones() as usize * side + tm.count_ones() as usize;
            simple[idx] += (2.0 * beta * mono_simple as f64).exp();
            multi[idx] += (2.0 * beta * mono_multi as f64).exp();
        }
        for slot in choice.iter_mut() {
            *slot += 1;
            if *slot < perms.len() {
                break;
            }
            *slot = 0;
        }
    }
    let scale = (tuples as f64).ln();
    let to_rows = |v: Vec<f64>| -> Vec<Vec<f64>> {
        v.chunks(side).map(|r| r.iter().map(|&x| x.ln() - scale).collect()).collect()
    };
    Ok(MatchingAlphas { n, delta, beta, simple: to_rows(simple), multi: to_rows(multi) })
}

/// `+1` on the left side, `−1` on the right side of a bipartite graph.
pub fn bipartite_signs(g: &Graph) -> Result<Vec<f64>> {
    let sides = g.bipartition().ok_or_else(|| Error::Param("graph carries no bipartition".into()))?;
    Ok(sides.iter().map(|s| if *s == Side::L { 1.0 } else { -1.0 }).collect())
}

/// How [`si_quadratic_lower`] evaluates the form.
#[derive(Clone, Debug)]
pub enum QuadraticMethod {
    Exact,
    MonteCarlo(CovarianceParams),
}

/// Quadratic-form lower bound on `λ_max(Ψ)`.
///
/// Exact: `sᵀ Cov s / Σ_i s_i² Var(X_i)` over free coordinates, the Rayleigh quotient of
/// `D^{-1/2} Cov D^{-1/2}` at `D^{1/2}s`; equal to `sᵀΨs/sᵀs` when all variances agree.
/// Monte Carlo: `c·Var(sᵀX)/n` with `c = 4` (hardcore) or `1` (Ising), using the
/// largest possible single-site variance in the denominator.
pub fn si_quadratic_lower(model: &SpinModel, s: &[f64], method: &QuadraticMethod) -> Result<Estimate> {
    let n = model.n();
    if s.len() != n {
        return param("sign vector length must equal n");
    }
    match method {
        QuadraticMethod::Exact => {
            let dist = exact_distribution(model)?;
            let mom = dist.moments();
            let enc = Encoding::natural(model);
            let cov = mom.covariance(enc);
            let free: Vec<usize> = (0..n).filter(|&i| mom.is_free(i)).collect();
            let sf = DMatrix::from_fn(free.len(), 1, |k, _| s[free[k]]);
            let cf = DMatrix::from_fn(free.len(), free.len(), |a, b| cov[(free[a], free[b])]);
            let num = (sf.transpose() * cf * &sf)[(0, 0)];
            let den: f64 = free.iter().map(|&i| s[i] * s[i] * cov[(i, i)]).sum();
            if den <= 0.0 {
                return Err(Error::EmptySupport("every coordinate is frozen".into()));
            }
            Ok(Estimate { value: num / den, stderr: 0.0 })
        }
        QuadraticMethod::MonteCarlo(p) => {
            let c = if model.is_hardcore() { 4.0 } else { 1.0 };
            let e = estimate_covariance_quadratic(model, s, p)?;
            Ok(Estimate { value: c * e.value, stderr: c * e.stderr })
        }
    }
}
