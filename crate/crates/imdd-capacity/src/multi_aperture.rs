//! Parallel-channel intensity allocation and bounds, SIMO/MISO reductions,
//! MIMO QR achievable rates, and high/low-SNR MIMO asymptotics.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::bounds::{
    lmw_mu_star, lower_cma, lower_exp_avg, lower_geom_avg, lower_lmw, upper_sp_simplex, Method,
};
use crate::channel::{RateNats, SisoChannel};
use crate::error::{Error, Result};
use crate::numeric::{bisect, golden_max, grid_then_golden_max, nelder_mead_max};

/// MIMO channel: nr x nt nonnegative gain matrix, per-input peak A and
/// total-sum average E (either may be infinite, not both).
#[derive(Debug, Clone)]
pub struct MimoChannel {
    gains: DMatrix<f64>,
    peak: f64,
    avg: f64,
}

impl MimoChannel {
    pub fn new(gains: DMatrix<f64>, peak: f64, avg: f64) -> Result<Self> {
        if gains.is_empty() {
            return Err(Error::InvalidChannel("gain matrix is empty".into()));
        }
        if gains.iter().any(|&g| !(g >= 0.0) || !g.is_finite()) {
            return Err(Error::InvalidChannel(
                "gain entries must be finite and >= 0".into(),
            ));
        }
        if !(peak > 0.0) || !(avg > 0.0) {
            return Err(Error::InvalidChannel("peak and avg must be > 0".into()));
        }
        if peak.is_infinite() && avg.is_infinite() {
            return Err(Error::InvalidChannel(
                "at least one of peak/avg must be finite".into(),
            ));
        }
        Ok(Self { gains, peak, avg })
    }

    pub fn gains(&self) -> &DMatrix<f64> {
        &self.gains
    }

    pub fn n_tx(&self) -> usize {
        self.gains.ncols()
    }

    pub fn n_rx(&self) -> usize {
        self.gains.nrows()
    }

    pub fn peak(&self) -> f64 {
        self.peak
    }

    pub fn avg(&self) -> f64 {
        self.avg
    }
}

/// Per-input average-intensity allocation with the objective it achieved.
#[derive(Debug, Clone, Serialize)]
pub struct Allocation {
    pub per_input: Vec<f64>,
    pub objective: f64,
}

impl Allocation {
    pub fn active(&self) -> usize {
        self.per_input.iter().filter(|&&e| e > 1e-9).count()
    }

    pub fn total(&self) -> f64 {
        self.per_input.iter().sum()
    }
}

/// Surrogate allocation for average-only parallel channels: maximizes
/// sum_i 0.5 log(1 + e g_i^2 E_i^2 / 2pi) subject to sum E_i <= E.
///
/// The objective is non-convex (each term is convex near zero), so interior
/// KKT points exist only on active sets whose members carry enough intensity;
/// for nt <= 16 every active subset is enumerated and the best feasible
/// stationary point wins. Single-channel vertices are always candidates.
pub fn allocate_parallel_avg(gains: &[f64], e_total: f64) -> Result<Allocation> {
    if gains.is_empty() {
        return Err(Error::InvalidArgument("gains must be non-empty".into()));
    }
    if gains.iter().any(|&g| !(g >= 0.0)) {
        return Err(Error::InvalidArgument("gains must be >= 0".into()));
    }
    if !(e_total > 0.0) || !e_total.is_finite() {
        return Err(Error::InvalidArgument("total average must be > 0".into()));
    }
    let n = gains.len();
    let c: Vec<f64> = gains
        .iter()
        .map(|g| std::f64::consts::E * g * g / (2.0 * std::f64::consts::PI))
        .collect();
    let objective = |alloc: &[f64]| -> f64 {
        alloc
            .iter()
            .zip(&c)
            .map(|(e, ci)| 0.5 * (1.0 + ci * e * e).ln())
            .sum()
    };

    let mut best_alloc = vec![0.0; n];
    // Vertex candidates: all intensity on one channel.
    let mut best_obj = f64::NEG_INFINITY;
    for i in 0..n {
        let mut alloc = vec![0.0; n];
        alloc[i] = e_total;
        let v = objective(&alloc);
        if v > best_obj {
            best_obj = v;
            best_alloc = alloc;
        }
    }

    if n <= 16 {
        let idx: Vec<usize> = (0..n).filter(|&i| c[i] > 0.0).collect();
        let m = idx.len();
        for mask in 1u32..(1u32 << m) {
            if mask.count_ones() < 2 {
                continue;
            }
            let subset: Vec<usize> = (0..m).filter(|&b| mask & (1 << b) != 0).map(|b| idx[b]).collect();
            if let Some(alloc) = kkt_allocation(&subset, &c, e_total, n) {
                let v = objective(&alloc);
                if v > best_obj {
                    best_obj = v;
                    best_alloc = alloc;
                }
            }
        }
    } else {
        // Prefix active sets of the gain ordering plus multiplier polish.
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| c[j].partial_cmp(&c[i]).unwrap());
        for take in 2..=n {
            let subset: Vec<usize> = order[..take].iter().copied().filter(|&i| c[i] > 0.0).collect();
            if subset.len() < 2 {
                continue;
            }
            if let Some(alloc) = kkt_allocation(&subset, &c, e_total, n) {
                let v = objective(&alloc);
                if v > best_obj {
                    best_obj = v;
                    best_alloc = alloc;
                }
            }
        }
    }

    Ok(Allocation {
        per_input: best_alloc,
        objective: best_obj,
    })
}

/// Interior KKT point on a fixed active set: E_i = (1 + sqrt(1 - 4 l^2/c_i)) / (2 l)
/// with the multiplier l solving the sum constraint by bisection.
fn kkt_allocation(subset: &[usize], c: &[f64], e_total: f64, n: usize) -> Option<Vec<f64>> {
    let lambda_max = subset
        .iter()
        .map(|&i| c[i].sqrt() / 2.0)
        .fold(f64::INFINITY, f64::min);
    let e_of = |lambda: f64| -> Option<Vec<f64>> {
        let mut out = vec![0.0; n];
        for &i in subset {
            // Rounding can push the discriminant a few ulps negative right
            // at lambda = sqrt(c)/2; only reject genuine infeasibility.
            let disc = 1.0 - 4.0 * lambda * lambda / c[i];
            if disc < -1e-9 {
                return None;
            }
            out[i] = (1.0 + disc.max(0.0).sqrt()) / (2.0 * lambda);
        }
        Some(out)
    };
    let sum_at = |lambda: f64| -> f64 {
        e_of(lambda).map_or(f64::INFINITY, |a| a.iter().sum())
    };
    // sum is decreasing in lambda on (0, lambda_max].
    if sum_at(lambda_max) > e_total {
        return None;
    }
    let mut lo = lambda_max;
    while sum_at(lo) < e_total {
        lo *= 0.5;
        if lo < 1e-300 {
            return None;
        }
    }
    let mut hi = lambda_max;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if sum_at(mid) < e_total {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let lambda = 0.5 * (lo + hi);
    let mut alloc = e_of(lambda)?;
    // Exact feasibility: scale out the bisection residual.
    let s: f64 = alloc.iter().sum();
    if s > 0.0 {
        for e in &mut alloc {
            *e *= e_total / s;
        }
    }
    Some(alloc)
}

/// Lower-bound family selector for parallel and QR rates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParallelMethod {
    Lmw,
    Cma,
    Fh,
}

impl ParallelMethod {
    pub fn tag(&self) -> &'static str {
        match self {
            ParallelMethod::Lmw => Method::Lmw.tag(),
            ParallelMethod::Cma => Method::Cma.tag(),
            ParallelMethod::Fh => Method::Fh.tag(),
        }
    }
}

fn single_avg_lower(g: f64, e: f64, method: ParallelMethod) -> Result<f64> {
    if g == 0.0 || e <= 0.0 {
        return Ok(0.0);
    }
    let ch = SisoChannel::avg_only(g, e)?;
    let v = match method {
        ParallelMethod::Lmw => lower_exp_avg(&ch)?.value.nats(),
        ParallelMethod::Cma => lower_cma(&ch)?.value.nats(),
        ParallelMethod::Fh => {
            let ells: Vec<f64> = (0..14).map(|i| e * 0.3 * 1.4f64.powi(i)).collect();
            lower_geom_avg(&ch, &ells)?.value.nats()
        }
    };
    Ok(v)
}

fn single_peak_avg_lower(g: f64, a: f64, e: f64, method: ParallelMethod) -> Result<f64> {
    if g == 0.0 || e <= 0.0 {
        return Ok(0.0);
    }
    let ch = SisoChannel::new(g, a, e)?;
    let v = match method {
        ParallelMethod::Lmw => lower_lmw(&ch)?.value.nats(),
        ParallelMethod::Cma => lower_cma(&ch)?.value.nats(),
        ParallelMethod::Fh => crate::bounds::lower_fh(&ch, 24)?.value.nats(),
    };
    Ok(v)
}

/// Simplex-packing upper bound as a function of the per-channel average.
fn sp_simplex_of(g: f64, e: f64) -> f64 {
    if g == 0.0 || e <= 1e-300 {
        return 0.0;
    }
    let ch = SisoChannel::avg_only(g, e).expect("valid");
    upper_sp_simplex(&ch).expect("finite avg").value.nats()
}

/// Capacity bounds for parallel channels: the lower bound sums single-user
/// rates at the surrogate allocation (inverted water-filling when a finite
/// peak constraint makes the problem low-SNR limited); the upper bound
/// maximizes the summed simplex-packing bound over allocations, since it is
/// only an upper bound at the true argmax.
pub fn parallel_bounds(
    gains: &[f64],
    peak: f64,
    e_total: f64,
    method: ParallelMethod,
) -> Result<(RateNats, RateNats)> {
    if gains.iter().all(|&g| g == 0.0) {
        return Ok((RateNats(0.0), RateNats(0.0)));
    }
    let lower = if peak.is_infinite() {
        let alloc = allocate_parallel_avg(gains, e_total)?;
        let mut s = 0.0;
        for (i, &g) in gains.iter().enumerate() {
            s += single_avg_lower(g, alloc.per_input[i], method)?;
        }
        s
    } else {
        let surrogate = allocate_parallel_avg(gains, e_total.min(gains.len() as f64 * peak / 2.0))?;
        let capped: Vec<f64> = surrogate
            .per_input
            .iter()
            .map(|&e| e.min(peak / 2.0))
            .collect();
        let iwf = allocate_inverted_waterfill(gains, peak, e_total)?;
        let mut s_cap = 0.0;
        let mut s_iwf = 0.0;
        for (i, &g) in gains.iter().enumerate() {
            s_cap += single_peak_avg_lower(g, peak, capped[i], method)?;
            s_iwf += single_peak_avg_lower(g, peak, iwf.per_input[i], method)?;
        }
        s_cap.max(s_iwf)
    };

    let upper = maximize_allocated_sum(gains, e_total, sp_simplex_of)?;
    Ok((RateNats(lower), RateNats(upper)))
}

/// Maximizes sum_i f(g_i, E_i) over the allocation simplex by coordinate
/// pairwise-transfer polish from several starts.
fn maximize_allocated_sum(
    gains: &[f64],
    e_total: f64,
    f: impl Fn(f64, f64) -> f64,
) -> Result<f64> {
    let n = gains.len();
    let eval = |alloc: &[f64]| -> f64 { alloc.iter().zip(gains).map(|(e, &g)| f(g, *e)).sum() };

    let mut starts: Vec<Vec<f64>> = Vec::new();
    starts.push(vec![e_total / n as f64; n]);
    if let Ok(sur) = allocate_parallel_avg(gains, e_total) {
        starts.push(sur.per_input);
    }
    let mut best_single = vec![0.0; n];
    let i_best = gains
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
        .map(|(i, _)| i)
        .unwrap_or(0);
    best_single[i_best] = e_total;
    starts.push(best_single);

    let mut best = f64::NEG_INFINITY;
    for mut alloc in starts {
        let mut v = eval(&alloc);
        for _round in 0..60 {
            let mut improved = false;
            for i in 0..n {
                for j in 0..n {
                    if i == j {
                        continue;
                    }
                    // Transfer t from j to i.
                    let cap = alloc[j];
                    if cap <= 1e-15 * e_total {
                        continue;
                    }
                    let (ai, aj) = (alloc[i], alloc[j]);
                    let obj = |t: f64| f(gains[i], ai + t) + f(gains[j], aj - t);
                    let base = obj(0.0);
                    let (t_star, v_star) = golden_max(obj, 0.0, cap, 1e-10 * e_total);
                    if v_star > base + 1e-13 {
                        alloc[i] = ai + t_star;
                        alloc[j] = aj - t_star;
                        improved = true;
                    }
                }
            }
            let nv = eval(&alloc);
            if !improved || nv - v < 1e-12 {
                v = nv;
                break;
            }
            v = nv;
        }
        if v > best {
            best = v;
        }
    }
    Ok(best)
}

/// Inverted water-filling: E_i* = max{0, A/2 - mu / g_i^2} with mu chosen so
/// the total equals min(E, n A/2). Weak channels shut off first.
pub fn allocate_inverted_waterfill(gains: &[f64], peak: f64, e_total: f64) -> Result<Allocation> {
    if gains.is_empty() || !(peak > 0.0) || !peak.is_finite() || !(e_total > 0.0) {
        return Err(Error::InvalidArgument(
            "need gains, finite peak > 0, and e_total > 0".into(),
        ));
    }
    let n_pos = gains.iter().filter(|&&g| g > 0.0).count();
    let target = e_total.min(n_pos as f64 * peak / 2.0);
    let alloc_at = |mu: f64| -> Vec<f64> {
        gains
            .iter()
            .map(|&g| {
                if g > 0.0 {
                    (peak / 2.0 - mu / (g * g)).max(0.0)
                } else {
                    0.0
                }
            })
            .collect()
    };
    let sum_at = |mu: f64| -> f64 { alloc_at(mu).iter().sum() };
    let mu = if sum_at(0.0) <= target + 1e-15 {
        0.0
    } else {
        let g_max = gains.iter().cloned().fold(0.0, f64::max);
        let hi = g_max * g_max * peak / 2.0;
        bisect(|mu| sum_at(mu) - target, 0.0, hi, 1e-15)?
    };
    let per_input = alloc_at(mu);
    let objective = per_input
        .iter()
        .zip(gains)
        .map(|(e, &g)| 0.5 * g * g * e * (peak - e))
        .sum();
    Ok(Allocation {
        per_input,
        objective,
    })
}

/// Low-SNR parallel asymptote evaluated at the inverted-water-filling
/// allocation. Evaluated through the per-channel relaxation form
/// 0.5 log(1 + g_i^2 E_i*(A - E_i*)), which the asymptotic-capacity series
/// of the reference figures uses; its leading term is the quadratic
/// sum_i g_i^2 E_i*(A - E_i*)/2.
pub fn parallel_low_snr_asymptote(gains: &[f64], peak: f64, e_total: f64) -> Result<RateNats> {
    let alloc = allocate_inverted_waterfill(gains, peak, e_total)?;
    let v = alloc
        .per_input
        .iter()
        .zip(gains)
        .map(|(e, &g)| 0.5 * (1.0 + g * g * e * (peak - e)).ln())
        .sum();
    Ok(RateNats(v))
}

/// SIMO reduction: maximum-ratio combining turns a column of gains into an
/// equivalent SISO channel with the column's Euclidean norm as gain.
pub fn simo_reduce(column: &[f64]) -> f64 {
    column.iter().map(|g| g * g).sum::<f64>().sqrt()
}

/// Result of reducing a MISO row to a scalar channel.
#[derive(Debug, Clone, Serialize)]
pub enum MisoReduction {
    /// Average-only: transmit on the strongest aperture alone.
    BestAperture(SisoChannel),
    /// E >= nt A / 2 or peak-only: repetition coding over all apertures.
    Repetition(SisoChannel),
    /// E < nt A / 2: no exact reduction; use the high/low-SNR asymptotics.
    NeedsAsymptotics { alpha: f64, alpha_th: f64 },
}

/// MISO reduction per constraint regime. The row is sorted descending
/// internally.
pub fn miso_reduce(row: &[f64], peak: f64, avg: f64) -> Result<MisoReduction> {
    if row.is_empty() || row.iter().any(|&g| !(g >= 0.0)) {
        return Err(Error::InvalidArgument("row gains must be >= 0".into()));
    }
    let mut g = row.to_vec();
    g.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let nt = g.len() as f64;
    let l1: f64 = g.iter().sum();
    if peak.is_infinite() {
        return Ok(MisoReduction::BestAperture(SisoChannel::avg_only(
            g[0], avg,
        )?));
    }
    if avg >= nt * peak / 2.0 || avg.is_infinite() {
        return Ok(MisoReduction::Repetition(SisoChannel::new(
            l1,
            peak,
            peak / 2.0,
        )?));
    }
    Ok(MisoReduction::NeedsAsymptotics {
        alpha: avg / peak,
        alpha_th: miso_alpha_threshold(&g),
    })
}

/// alpha_th = 1/2 + (1/||G||_1) sum_i g_i (i - 1) over the descending row.
pub fn miso_alpha_threshold(sorted_desc: &[f64]) -> f64 {
    let l1: f64 = sorted_desc.iter().sum();
    if l1 == 0.0 {
        return 0.5;
    }
    let s: f64 = sorted_desc
        .iter()
        .enumerate()
        .map(|(i, &g)| g * i as f64)
        .sum();
    0.5 + s / l1
}

/// High-SNR MISO description: capacity behaves as
/// 0.5 log(||G||_1^2 A^2 / 2 pi e) + correction.
#[derive(Debug, Clone, Serialize)]
pub struct MisoHighSnr {
    pub alpha_th: f64,
    /// Zero when alpha > alpha_th; otherwise the sup over omega.
    pub correction: f64,
    pub omega_star: Option<f64>,
    pub l1: f64,
}

impl MisoHighSnr {
    pub fn rate(&self, peak: f64) -> RateNats {
        let base = 0.5
            * (self.l1 * self.l1 * peak * peak
                / (2.0 * std::f64::consts::PI * std::f64::consts::E))
                .ln();
        RateNats(base + self.correction)
    }
}

/// High-SNR MISO asymptote: computes alpha_th and, when alpha <= alpha_th,
/// the correction sup over omega of
/// 1 - log(mu/(1-e^-mu)) - mu e^-mu/(1-e^-mu) - D(p || G/||G||_1),
/// where mu solves the truncated-exponential mean equation at omega, and the
/// aperture law p comes from the positive root a of the layer-mean equation.
pub fn miso_high_snr(row: &[f64], alpha: f64) -> Result<MisoHighSnr> {
    if row.is_empty() || row.iter().any(|&g| !(g > 0.0)) {
        return Err(Error::InvalidArgument(
            "row gains must be strictly positive".into(),
        ));
    }
    if !(alpha > 0.0) {
        return Err(Error::InvalidArgument("alpha must be > 0".into()));
    }
    let mut g = row.to_vec();
    g.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let l1: f64 = g.iter().sum();
    let alpha_th = miso_alpha_threshold(&g);
    let alpha = alpha.min(g.len() as f64 / 2.0);
    if alpha >= alpha_th - 1e-15 {
        return Ok(MisoHighSnr {
            alpha_th,
            correction: 0.0,
            omega_star: None,
            l1,
        });
    }
    let lo = (0.5 + alpha - alpha_th).max(0.0);
    let hi = alpha.min(0.5);
    if !(hi > lo) {
        return Err(Error::EmptyInterval(format!(
            "omega interval ({lo}, {hi}) is empty"
        )));
    }
    let pad = (hi - lo) * 1e-6;
    let obj = |omega: f64| miso_nu_integrand(&g, l1, alpha, omega).unwrap_or(f64::NEG_INFINITY);
    let (omega_star, correction) = grid_then_golden_max(obj, lo + pad, hi - pad, 200, 1e-10);
    Ok(MisoHighSnr {
        alpha_th,
        correction,
        omega_star: Some(omega_star),
        l1,
    })
}

fn miso_nu_integrand(g_desc: &[f64], l1: f64, alpha: f64, omega: f64) -> Result<f64> {
    let mu = lmw_mu_star(omega)?;
    let em = (-mu).exp();
    let ratio = mu / (1.0 - em);
    // Solve sum_i i g_i a^i / sum_k g_k a^k = alpha - omega + 1 for a > 0.
    let target = alpha - omega + 1.0;
    let mean_at = |ln_a: f64| -> f64 {
        let a = ln_a.exp();
        let mut num = 0.0;
        let mut den = 0.0;
        let mut ap = a;
        for (i, &gi) in g_desc.iter().enumerate() {
            num += (i + 1) as f64 * gi * ap;
            den += gi * ap;
            ap *= a;
        }
        num / den
    };
    let (mut lo, mut hi) = (-60.0, 60.0);
    if mean_at(lo) > target || mean_at(hi) < target {
        return Err(Error::RootNotBracketed { lo, hi });
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mean_at(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let a = (0.5f64 * (lo + hi)).exp();
    let mut w = Vec::with_capacity(g_desc.len());
    let mut ap = a;
    let mut z = 0.0;
    for &gi in g_desc {
        w.push(gi * ap);
        z += gi * ap;
        ap *= a;
    }
    let mut kl = 0.0;
    for (i, &wi) in w.iter().enumerate() {
        let p = wi / z;
        if p > 0.0 {
            kl += p * (p * l1 / g_desc[i]).ln();
        }
    }
    Ok(1.0 - ratio.ln() - mu * em / (1.0 - em) - kl)
}

/// Low-SNR MISO variance coefficient gamma and its maximizing on-probabilities,
/// together with the maximally-correlated binary input achieving it.
#[derive(Debug, Clone, Serialize)]
pub struct LowSnrCoefficient {
    /// gamma (MISO) or eta (MIMO): max of the correlated-variance form.
    pub value: f64,
    /// Maximizing on-probabilities, ordered like the (sorted) inputs.
    pub probs_on: Vec<f64>,
}

impl LowSnrCoefficient {
    /// Atoms of the maximally-correlated binary input on {0, A}^nt:
    /// mass 1 - a_1 on the zero vector, a_i - a_{i+1} on the pattern with the
    /// first i coordinates at A, and a_nt on the all-A vector.
    pub fn correlated_atoms(&self, peak: f64) -> Vec<(Vec<f64>, f64)> {
        correlated_binary_atoms(&self.probs_on, peak)
    }
}

pub fn correlated_binary_atoms(probs_on: &[f64], peak: f64) -> Vec<(Vec<f64>, f64)> {
    let nt = probs_on.len();
    let mut atoms = Vec::with_capacity(nt + 1);
    let zero = vec![0.0; nt];
    atoms.push((zero, 1.0 - probs_on.first().copied().unwrap_or(0.0)));
    for i in 0..nt {
        let next = if i + 1 < nt { probs_on[i + 1] } else { 0.0 };
        let mut x = vec![0.0; nt];
        for xi in x.iter_mut().take(i + 1) {
            *xi = peak;
        }
        atoms.push((x, probs_on[i] - next));
    }
    atoms
}

/// gamma = max over ordered a_1 >= ... >= a_nt, sum <= alpha, of
/// sum_ij g_i g_j min(a_i, a_j)(1 - max(a_i, a_j)).
pub fn miso_low_snr_gamma(row: &[f64], alpha: f64) -> Result<LowSnrCoefficient> {
    let mut g = row.to_vec();
    g.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let gram = |i: usize, j: usize| g[i] * g[j];
    maximize_correlated_variance(g.len(), gram, alpha)
}

fn maximize_correlated_variance(
    nt: usize,
    gram: impl Fn(usize, usize) -> f64 + Copy,
    alpha: f64,
) -> Result<LowSnrCoefficient> {
    if nt == 0 {
        return Err(Error::InvalidArgument("need at least one input".into()));
    }
    if !(alpha > 0.0) {
        return Err(Error::InvalidArgument("alpha must be > 0".into()));
    }
    let value_of = |a: &[f64]| -> f64 {
        let mut s = 0.0;
        for i in 0..nt {
            for j in 0..nt {
                let lo = a[i].min(a[j]);
                let hi = a[i].max(a[j]);
                s += gram(i, j) * lo * (1.0 - hi);
            }
        }
        s
    };
    let feasible = |a: &[f64]| -> bool {
        let mut prev = f64::INFINITY;
        let mut sum = 0.0;
        for &ai in a {
            if !(0.0..=1.0).contains(&ai) || ai > prev + 1e-12 {
                return false;
            }
            prev = ai;
            sum += ai;
        }
        sum <= alpha * (1.0 + 1e-9)
    };

    // Dense grid over ordered tuples.
    let cap = alpha.min(1.0);
    let steps = match nt {
        1 => 101,
        2 => 101,
        3 => 61,
        4 => 21,
        _ => 9,
    };
    let mut best = (f64::NEG_INFINITY, vec![0.0; nt]);
    let mut stack: Vec<(Vec<f64>, f64, f64)> = vec![(Vec::new(), cap, alpha)];
    while let Some((prefix, upper, budget)) = stack.pop() {
        if prefix.len() == nt {
            let v = value_of(&prefix);
            if v > best.0 {
                best = (v, prefix);
            }
            continue;
        }
        for s in 0..steps {
            let a = upper * s as f64 / (steps - 1) as f64;
            if a > budget + 1e-12 {
                break;
            }
            let mut p = prefix.clone();
            p.push(a);
            stack.push((p, a.min(upper), budget - a));
        }
    }

    // Local polish within the ordered feasible region.
    let obj = |a: &[f64]| -> f64 {
        if feasible(a) {
            value_of(a)
        } else {
            f64::NEG_INFINITY
        }
    };
    let step = vec![cap * 0.05; nt];
    let (polished, pv) = nelder_mead_max(obj, &best.1, &step, 600);
    if pv > best.0 {
        best = (pv, polished);
    }
    Ok(LowSnrCoefficient {
        value: best.0,
        probs_on: best.1,
    })
}

/// QR-decomposition achievable rate for nr >= nt full-column-rank MIMO under
/// an average-only constraint: successive decoding over the triangular
/// factor's diagonal, with intensity allocated by the surrogate solver.
pub fn mimo_qr_rate(gains: &DMatrix<f64>, e_total: f64, method: ParallelMethod) -> Result<RateNats> {
    let (nr, nt) = (gains.nrows(), gains.ncols());
    if nr < nt {
        return Err(Error::UnsupportedRegime(format!(
            "QR scheme needs nr >= nt, got {nr} x {nt}"
        )));
    }
    let qr = gains.clone().qr();
    let r = qr.r();
    let mut diag = Vec::with_capacity(nt);
    for i in 0..nt {
        let u = r[(i, i)].abs();
        if u < 1e-12 {
            return Err(Error::RankDeficient { diag: u });
        }
        diag.push(u);
    }
    let alloc = allocate_parallel_avg(&diag, e_total)?;
    let mut s = 0.0;
    for (i, &u) in diag.iter().enumerate() {
        s += single_avg_lower(u, alloc.per_input[i], method)?;
    }
    Ok(RateNats(s))
}

/// High-SNR MIMO asymptotic capacity (nr >= nt) in log-det form, with the
/// slack recorded for the alpha < nt/2 approximation.
#[derive(Debug, Clone, Serialize)]
pub struct MimoHighSnr {
    pub rate: RateNats,
    /// Upper bound on the approximation slack in nats (0.1 nt in the
    /// alpha < nt/2 regime; zero otherwise).
    pub slack: f64,
}

pub fn mimo_high_snr(channel: &MimoChannel) -> Result<MimoHighSnr> {
    let g = channel.gains();
    let nt = g.ncols() as f64;
    let gtg = g.transpose() * g;
    let det = gtg.determinant();
    if !(det > 0.0) {
        return Err(Error::RankDeficient { diag: det });
    }
    let two_pi = 2.0 * std::f64::consts::PI;
    let (scale, slack) = if channel.peak().is_infinite() {
        let e = channel.avg();
        (std::f64::consts::E * e * e / (two_pi * nt * nt), 0.0)
    } else {
        let a = channel.peak();
        let alpha = (channel.avg() / a).min(nt / 2.0);
        if alpha >= nt / 2.0 {
            (a * a / (two_pi * std::f64::consts::E), 0.0)
        } else {
            let inner = (alpha * alpha * a * a / (nt * nt))
                .min(a * a / (std::f64::consts::E * std::f64::consts::E));
            (std::f64::consts::E * inner / two_pi, 0.1 * nt)
        }
    };
    let k = g.ncols();
    let rate = 0.5 * (scale.powi(k as i32) * det).ln();
    Ok(MimoHighSnr {
        rate: RateNats(rate),
        slack,
    })
}

/// Low-SNR MIMO coefficient eta: the MISO optimizer with inner products of
/// gain columns; the asymptotic capacity is eta A^2 / 2 and the maximizer is
/// the Table-style maximally-correlated binary input.
pub fn mimo_low_snr_eta(gains: &DMatrix<f64>, alpha: f64) -> Result<LowSnrCoefficient> {
    let nt = gains.ncols();
    // Sort columns by norm descending; report probabilities in input order.
    let mut order: Vec<usize> = (0..nt).collect();
    let norms: Vec<f64> = (0..nt).map(|j| gains.column(j).norm()).collect();
    order.sort_by(|&i, &j| norms[j].partial_cmp(&norms[i]).unwrap());
    let gram_sorted = |i: usize, j: usize| -> f64 {
        gains.column(order[i]).dot(&gains.column(order[j]))
    };
    let sol = maximize_correlated_variance(nt, &gram_sorted, alpha)?;
    let mut probs = vec![0.0; nt];
    for (pos, &col) in order.iter().enumerate() {
        probs[col] = sol.probs_on[pos];
    }
    Ok(LowSnrCoefficient {
        value: sol.value,
        probs_on: probs,
    })
}
