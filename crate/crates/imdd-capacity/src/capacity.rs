//! Exact numerical capacity of the single-user channel: Blahut-Arimoto over
//! the masses of a fixed support, a joint mass/location optimization for a
//! given support size, the optimality certificate that decides whether a
//! candidate distribution achieves capacity, and the support-size search.

use rayon::prelude::*;
use serde::Serialize;

use crate::channel::{DiscreteDistribution, RateNats, SisoChannel, HALF_LN_2PI_E};
use crate::error::{Error, Result};
use crate::mi::{
    build_grid, output_bin_probs, transition_column, transition_matrix,
    TransitionMatrix, DEFAULT_DELTA, DEFAULT_MARGIN,
};
use crate::numeric::golden_max;

/// Options shared by the Blahut-Arimoto runs and the searches built on them.
#[derive(Debug, Clone, Copy)]
pub struct BaaOptions {
    /// Output bin width.
    pub delta: f64,
    /// Grid margin in noise standard deviations.
    pub margin: f64,
    /// Convergence threshold on |r_t - r_{t-1}|.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for BaaOptions {
    fn default() -> Self {
        Self {
            delta: DEFAULT_DELTA,
            margin: DEFAULT_MARGIN,
            tol: 1e-7,
            max_iter: 500,
        }
    }
}

/// Per-iteration record of the Blahut-Arimoto run.
#[derive(Debug, Clone, Serialize)]
pub struct BaaTrace {
    /// Objective value after each iteration.
    pub rates: Vec<f64>,
    /// Mass vector after each iteration.
    pub masses: Vec<Vec<f64>>,
    pub converged: bool,
    pub iterations: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct BaaResult {
    pub distribution: DiscreteDistribution,
    pub rate: RateNats,
    /// Final value of the mean-constraint multiplier.
    pub nu: f64,
    pub trace: BaaTrace,
}

/// Blahut-Arimoto for the IM/DD Gaussian channel on a fixed support.
///
/// Alternates the posterior update q_{i,j} = a_i p_{j,i} / sum_i' a_i' p_{j,i'}
/// with the mass update a_i proportional to e^{-nu x_i} prod_j q_{i,j}^{p_{j,i}},
/// where nu enforces the mean constraint and is clamped to zero whenever the
/// unconstrained mean already satisfies it.
pub fn blahut_arimoto(
    channel: &SisoChannel,
    points: &[f64],
    opts: &BaaOptions,
) -> Result<BaaResult> {
    let ch = channel.canonicalize();
    if !ch.avg().is_finite() {
        return Err(Error::UnsupportedRegime(
            "Blahut-Arimoto requires a finite average constraint".into(),
        ));
    }
    validate_points(points, ch.peak())?;
    let grid = build_grid(&ch, ch.peak(), opts.delta, opts.margin)?;
    let tm = transition_matrix(
        &uniform_dist_on(points)?,
        &ch,
        &grid,
    )?;
    blahut_arimoto_on_matrix(&ch, points, &tm, opts, None)
}

fn validate_points(points: &[f64], peak: f64) -> Result<()> {
    if points.is_empty() {
        return Err(Error::InvalidArgument("need at least one point".into()));
    }
    for w in points.windows(2) {
        if !(w[1] > w[0]) {
            return Err(Error::InvalidArgument(
                "points must be strictly increasing".into(),
            ));
        }
    }
    if points[0] < 0.0 || *points.last().unwrap() > peak * (1.0 + 1e-12) {
        return Err(Error::InvalidArgument(format!(
            "points must lie in [0, {peak}]"
        )));
    }
    Ok(())
}

fn uniform_dist_on(points: &[f64]) -> Result<DiscreteDistribution> {
    let k = points.len();
    DiscreteDistribution::new(points.to_vec(), vec![1.0 / k as f64; k])
}

/// Core loop, reusing a prebuilt transition matrix; `init` optionally warm
/// starts the masses.
pub(crate) fn blahut_arimoto_on_matrix(
    channel: &SisoChannel,
    points: &[f64],
    tm: &TransitionMatrix,
    opts: &BaaOptions,
    init: Option<&[f64]>,
) -> Result<BaaResult> {
    let k = points.len();
    let e_target = channel.avg();
    let mut a: Vec<f64> = match init {
        Some(m) if m.len() == k => m.to_vec(),
        _ => vec![1.0 / k as f64; k],
    };

    let mut rates = Vec::new();
    let mut masses_hist = Vec::new();
    let mut prev_rate = f64::NEG_INFINITY;
    let mut converged = false;
    let mut nu = 0.0;

    // Per-column p log p, reused across iterations.
    let plogp: Vec<f64> = tm
        .cols
        .iter()
        .map(|col| {
            col.probs
                .iter()
                .filter(|&&p| p > 0.0)
                .map(|&p| p * p.ln())
                .sum()
        })
        .collect();

    // Column KL divergences against the current output law.
    let mut div = vec![0.0; k];
    let mut ln_py = vec![0.0; tm.n_bins];

    for _iter in 0..opts.max_iter {
        let py = output_bin_probs(&a, tm);
        for (l, &p) in py.iter().enumerate() {
            ln_py[l] = if p > 0.0 { p.ln() } else { -709.0 };
        }
        for (i, col) in tm.cols.iter().enumerate() {
            let mut cross = 0.0;
            for (idx, &p) in col.probs.iter().enumerate() {
                if p > 0.0 {
                    cross += p * ln_py[col.start + idx];
                }
            }
            div[i] = plogp[i] - cross;
        }
        // log w_i = log a_i + D_i; the new masses are softmax(log w_i - nu x_i).
        let logw: Vec<f64> = a
            .iter()
            .zip(&div)
            .map(|(ai, d)| ai.ln() + d)
            .collect();

        nu = solve_mean_multiplier(&logw, points, e_target);
        let (a_new, log_z) = softmax_shifted(&logw, points, nu);

        // r = sum_i a_new_i (log w_i - log a_new_i) = log Z + nu * mean.
        let mean: f64 = a_new.iter().zip(points).map(|(ai, xi)| ai * xi).sum();
        let rate = log_z + nu * mean;

        a = a_new;
        rates.push(rate);
        masses_hist.push(a.clone());
        if (rate - prev_rate).abs() < opts.tol {
            converged = true;
            break;
        }
        prev_rate = rate;
    }

    let iterations = rates.len();
    let rate = RateNats(rates.last().copied().unwrap_or(0.0).max(0.0));
    let distribution = distribution_from(points, &a)?;
    let result = BaaResult {
        distribution,
        rate,
        nu,
        trace: BaaTrace {
            rates,
            masses: masses_hist,
            converged,
            iterations,
        },
    };
    if !converged {
        return Err(Error::BaaNotConverged {
            max_iter: opts.max_iter,
            best: Box::new(result),
        });
    }
    Ok(result)
}

/// Builds a distribution, merging any zero-rounded masses defensively.
fn distribution_from(points: &[f64], masses: &[f64]) -> Result<DiscreteDistribution> {
    let floor = 1e-300;
    let pts: Vec<f64> = points.to_vec();
    let ms: Vec<f64> = masses.iter().map(|&a| a.max(floor)).collect();
    DiscreteDistribution::new(pts, ms)
}

/// Solves eq. for nu: the softmax mean equals the target, or nu = 0 when the
/// unconstrained mean is already feasible. The mean is strictly decreasing in
/// nu, so bisection applies after doubling the bracket.
fn solve_mean_multiplier(logw: &[f64], points: &[f64], e_target: f64) -> f64 {
    let mean_at = |nu: f64| -> f64 {
        let (a, _) = softmax_shifted(logw, points, nu);
        a.iter().zip(points).map(|(ai, xi)| ai * xi).sum()
    };
    if mean_at(0.0) <= e_target * (1.0 + 1e-12) {
        return 0.0;
    }
    let mut hi = 1.0;
    let mut tries = 0;
    while mean_at(hi) > e_target {
        hi *= 2.0;
        tries += 1;
        if tries > 60 {
            return hi;
        }
    }
    let (mut lo, mut hi) = (0.0, hi);
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if mean_at(mid) > e_target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn softmax_shifted(logw: &[f64], points: &[f64], nu: f64) -> (Vec<f64>, f64) {
    let logits: Vec<f64> = logw
        .iter()
        .zip(points)
        .map(|(w, x)| w - nu * x)
        .collect();
    let m = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|t| (t - m).exp()).collect();
    let z: f64 = exps.iter().sum();
    (exps.iter().map(|e| e / z).collect(), m + z.ln())
}

/// Outcome of the optimality (Smith-type) conditions evaluated for a
/// candidate distribution.
#[derive(Debug, Clone, Serialize)]
pub struct OptimalityReport {
    pub psi: f64,
    /// x positions where J was sampled (grid plus support points).
    pub x_grid: Vec<f64>,
    pub j_values: Vec<f64>,
    pub is_optimal: bool,
    /// Largest |J| over the support points.
    pub max_abs_j_on_support: f64,
    /// Smallest J over the off-support sample positions.
    pub min_j_off_support: f64,
    /// Sample position achieving the smallest J; where new mass would go.
    pub arg_min_j: f64,
    /// Whether the support contains 0 with positive mass.
    pub mass_at_zero: bool,
}

/// Certificate tolerances, sized to the discretization error of the
/// delta = 1e-3 output grids.
pub const PSI_TOL: f64 = 1e-6;
pub const J_OFF_SUPPORT_TOL: f64 = -1e-4;
pub const J_ON_SUPPORT_TOL: f64 = 1e-3;

/// Evaluates psi and J(x, P) for the candidate distribution and reports the
/// three optimality conditions. J is sampled on a uniform x grid over [0, A]
/// plus exactly at the support points.
pub fn optimality_check(
    dist: &DiscreteDistribution,
    channel: &SisoChannel,
    x_grid_step: f64,
) -> Result<OptimalityReport> {
    optimality_check_with(dist, channel, x_grid_step, &BaaOptions::default())
}

pub fn optimality_check_with(
    dist: &DiscreteDistribution,
    channel: &SisoChannel,
    x_grid_step: f64,
    opts: &BaaOptions,
) -> Result<OptimalityReport> {
    if dist.len() < 2 {
        return Err(Error::InvalidDistribution(
            "optimality conditions are ill-posed for a single mass point".into(),
        ));
    }
    if !(x_grid_step > 0.0) {
        return Err(Error::InvalidArgument("x_grid_step must be > 0".into()));
    }
    let ch = channel.canonicalize();
    let peak = ch.peak();
    if !peak.is_finite() {
        return Err(Error::UnsupportedRegime(
            "certificate requires a finite peak constraint".into(),
        ));
    }
    let e_avg = ch.avg();
    let grid = build_grid(&ch, peak, opts.delta, opts.margin)?;
    let tm = transition_matrix(dist, &ch, &grid)?;
    let py = output_bin_probs(dist.masses(), &tm);
    // ln(P_Y density) at bin centers; the floor only matters 10 sigma out.
    let ln_py_density: Vec<f64> = py
        .iter()
        .map(|&p| (p.max(1e-300) / grid.delta()).ln())
        .collect();

    // I(P_X) on the grid.
    let mut mi = 0.0;
    for (a, col) in dist.masses().iter().zip(&tm.cols) {
        let mut acc = 0.0;
        for (idx, &p) in col.probs.iter().enumerate() {
            if p > 0.0 {
                acc += p * (p / py[col.start + idx]).ln();
            }
        }
        mi += a * acc;
    }

    // T(x) = - Q(x, P) = sum_j p_j(x) ln(P_Y(center_j)).
    let t_of = |x: f64| -> f64 {
        let col = transition_column(x, &ch, &grid);
        col.probs
            .iter()
            .enumerate()
            .map(|(idx, &p)| p * ln_py_density[col.start + idx])
            .sum()
    };

    // With a slack average constraint (E = A/2, including peak-only
    // channels) the multiplier behind psi vanishes: the conditions reduce to
    // their psi-free form and the psi > 0 test is skipped.
    let avg_slack = ch.avg_is_slack();
    let t0 = t_of(0.0);
    let psi = if avg_slack {
        0.0
    } else {
        (mi + HALF_LN_2PI_E + t0) / e_avg
    };
    let j_of = |x: f64| mi + t_of(x) + HALF_LN_2PI_E + psi * (x - e_avg);

    // Sample positions: uniform grid over [0, A] plus the support points.
    let mut xs: Vec<f64> = Vec::new();
    let mut x = 0.0;
    while x < peak + 1e-12 {
        xs.push(x.min(peak));
        x += x_grid_step;
    }
    if *xs.last().unwrap() < peak {
        xs.push(peak);
    }
    for &s in dist.points() {
        xs.push(s);
    }
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    xs.dedup_by(|a, b| (*a - *b).abs() < 1e-12);

    let j_values: Vec<f64> = xs.par_iter().map(|&x| j_of(x)).collect();

    // Samples in a band around each support point inherit the on-support
    // tolerance: J is continuous, so where |J(x_s)| <= 1e-3 is allowed, the
    // curvature continuation around x_s dips below the tighter off-support
    // threshold over a width of order sqrt(tolerance / J''). The band still
    // rejects candidates whose J falls below -1e-3 anywhere.
    let band = (2.0 * x_grid_step).max(0.02 * peak);
    let is_support = |x: f64| dist.points().iter().any(|&s| (s - x).abs() < 1e-9);
    let near_support = |x: f64| dist.points().iter().any(|&s| (s - x).abs() <= band);
    let mut max_abs_on = 0.0f64;
    let mut min_near = f64::INFINITY;
    let mut min_off = f64::INFINITY;
    let mut arg_min = 0.0f64;
    for (&x, &j) in xs.iter().zip(&j_values) {
        if is_support(x) {
            max_abs_on = max_abs_on.max(j.abs());
        } else if near_support(x) {
            min_near = min_near.min(j);
        } else if j < min_off {
            min_off = j;
            arg_min = x;
        }
    }

    let mass_at_zero = dist.points()[0].abs() < 1e-12 && dist.masses()[0] > 0.0;
    let is_optimal = mass_at_zero
        && (avg_slack || psi > PSI_TOL)
        && min_off >= J_OFF_SUPPORT_TOL
        && min_near >= -J_ON_SUPPORT_TOL
        && max_abs_on <= J_ON_SUPPORT_TOL;

    Ok(OptimalityReport {
        psi,
        x_grid: xs,
        j_values,
        is_optimal,
        max_abs_j_on_support: max_abs_on,
        min_j_off_support: min_off,
        arg_min_j: arg_min,
        mass_at_zero,
    })
}

/// Options for the joint mass/location search and the support-size search.
#[derive(Debug, Clone, Copy)]
pub struct SearchOptions {
    pub baa: BaaOptions,
    /// Bin width used during the location line searches; the final rate and
    /// certificate always use `baa.delta`.
    pub coarse_delta: f64,
    pub n_starts: usize,
    pub max_sweeps: usize,
    /// Certificate sampling step for J.
    pub x_grid_step: f64,
    /// First support size tried by the capacity search.
    pub k_start: usize,
    pub k_max: usize,
}

impl Default for SearchOptions {
    fn default() -> Self {
        Self {
            baa: BaaOptions::default(),
            coarse_delta: 5e-3,
            n_starts: 8,
            max_sweeps: 10,
            x_grid_step: 0.05,
            k_start: 2,
            k_max: 40,
        }
    }
}

/// Best distribution found for a fixed support size, with its certificate.
#[derive(Debug, Clone, Serialize)]
pub struct FixedKResult {
    pub distribution: DiscreteDistribution,
    pub rate: RateNats,
    pub report: OptimalityReport,
    /// True when the certificate passed, i.e. the distribution achieves
    /// capacity; false means k is too small.
    pub certified: bool,
}

/// Joint optimization of locations and masses for a fixed number of mass
/// points: multi-start coordinate ascent alternating Blahut-Arimoto (masses)
/// with a golden-section line search per location. x_1 is pinned to 0; the
/// top point is free in (x_{k-1}, A].
pub fn optimize_fixed_k(
    channel: &SisoChannel,
    k: usize,
    opts: &SearchOptions,
) -> Result<FixedKResult> {
    optimize_fixed_k_seeded(channel, k, opts, &[])
}

/// Like [`optimize_fixed_k`], with additional caller-supplied starting
/// supports (the capacity search seeds k+1 with the failed k's J-dip).
pub fn optimize_fixed_k_seeded(
    channel: &SisoChannel,
    k: usize,
    opts: &SearchOptions,
    extra_starts: &[Vec<f64>],
) -> Result<FixedKResult> {
    if k < 2 {
        return Err(Error::InvalidArgument("k must be >= 2".into()));
    }
    let ch = channel.canonicalize();
    let peak = ch.peak();
    if !peak.is_finite() || !ch.avg().is_finite() {
        return Err(Error::UnsupportedRegime(
            "joint search requires finite peak and average constraints".into(),
        ));
    }

    let mut starts = initial_supports(peak, k, opts.n_starts);
    for s in extra_starts {
        if s.len() == k && s.windows(2).all(|w| w[1] > w[0]) && s[0] >= 0.0 {
            starts.push(s.clone());
        }
    }
    let outcomes: Vec<Result<(Vec<f64>, Vec<f64>, f64)>> = starts
        .par_iter()
        .map(|s| coarse_phase(&ch, s.clone(), opts))
        .collect();

    let mut best: Option<(Vec<f64>, Vec<f64>, f64)> = None;
    let mut last_err = None;
    for o in outcomes {
        match o {
            Ok(cand) => {
                if best.as_ref().map_or(true, |b| cand.2 > b.2) {
                    best = Some(cand);
                }
            }
            Err(e) => last_err = Some(e),
        }
    }
    let (points, masses, _) =
        best.ok_or_else(|| last_err.unwrap_or_else(|| Error::Numeric("no start converged".into())))?;

    // Polish only the winning start, then rate and certificate at full
    // resolution. The final mass solve runs to a much tighter tolerance than
    // the line searches: a rate tolerance t leaves mass errors of order
    // sqrt(t), which show up one-for-one in J and would trip the certificate.
    let (points, masses, _) = fine_phase(&ch, points, masses, opts)?;
    let (points, _merged_masses) = merge_close_points(points, masses, 1e-7 * peak);
    let final_opts = BaaOptions {
        tol: opts.baa.tol.min(1e-12),
        max_iter: opts.baa.max_iter.max(2000),
        ..opts.baa
    };
    let fine = match blahut_arimoto(&ch, &points, &final_opts) {
        Ok(r) => r,
        Err(Error::BaaNotConverged { best, .. }) => *best,
        Err(e) => return Err(e),
    };
    let report = optimality_check_with(&fine.distribution, &ch, opts.x_grid_step, &final_opts)?;
    let certified = report.is_optimal;
    Ok(FixedKResult {
        distribution: fine.distribution,
        rate: fine.rate,
        report,
        certified,
    })
}

fn initial_supports(peak: f64, k: usize, n_starts: usize) -> Vec<Vec<f64>> {
    let equispaced = |scale: f64| -> Vec<f64> {
        (0..k)
            .map(|i| peak * scale * i as f64 / (k - 1) as f64)
            .collect()
    };
    let mut starts = vec![equispaced(1.0)];
    for scale in [0.75, 0.5, 0.9] {
        if starts.len() < n_starts {
            starts.push(equispaced(scale));
        }
    }
    // Deterministically jittered variants of the full-range start.
    let mut state = 0x2545_F491_4F6C_DD1Du64;
    while starts.len() < n_starts {
        let base = equispaced(1.0);
        let jittered: Vec<f64> = base
            .iter()
            .enumerate()
            .map(|(i, &x)| {
                if i == 0 {
                    0.0
                } else {
                    state ^= state << 13;
                    state ^= state >> 7;
                    state ^= state << 17;
                    let u = (state >> 11) as f64 / (1u64 << 53) as f64;
                    (x * (0.6 + 0.8 * u)).clamp(1e-6 * peak, peak)
                }
            })
            .collect();
        let mut sorted = jittered;
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let (pts, _) = dedup_sorted(sorted, 1e-6 * peak);
        if pts.len() == k {
            starts.push(pts);
        } else {
            starts.push(equispaced(0.85));
        }
    }
    starts.truncate(n_starts.max(1));
    starts
}

fn dedup_sorted(mut pts: Vec<f64>, min_gap: f64) -> (Vec<f64>, bool) {
    let mut changed = false;
    let mut i = 1;
    while i < pts.len() {
        if pts[i] - pts[i - 1] < min_gap {
            pts[i] = pts[i - 1] + min_gap;
            changed = true;
        }
        i += 1;
    }
    (pts, changed)
}

fn merge_close_points(points: Vec<f64>, masses: Vec<f64>, min_gap: f64) -> (Vec<f64>, Vec<f64>) {
    let mut pts: Vec<f64> = Vec::new();
    let mut ms: Vec<f64> = Vec::new();
    for (x, a) in points.into_iter().zip(masses) {
        if let Some(last) = pts.last().copied() {
            if x - last < min_gap {
                *ms.last_mut().unwrap() += a;
                continue;
            }
        }
        pts.push(x);
        ms.push(a);
    }
    (pts, ms)
}

/// One coordinate-ascent phase at a fixed grid resolution. Only the column
/// of the moving point is rebuilt per line-search evaluation; the rest of the
/// transition matrix is reused. Returns the achieved rate and the largest
/// location move of the final sweep.
struct CoordinatePhase<'a> {
    channel: &'a SisoChannel,
    grid: crate::mi::OutputGrid,
    tm: TransitionMatrix,
    opts: BaaOptions,
}

impl<'a> CoordinatePhase<'a> {
    fn new(channel: &'a SisoChannel, points: &[f64], opts: BaaOptions) -> Result<Self> {
        let grid = build_grid(channel, channel.peak(), opts.delta, opts.margin)?;
        let cols = points
            .iter()
            .map(|&x| transition_column(x, channel, &grid))
            .collect();
        let tm = TransitionMatrix {
            cols,
            n_bins: grid.len(),
        };
        Ok(Self {
            channel,
            grid,
            tm,
            opts,
        })
    }

    fn run_baa(&self, points: &[f64], warm: Option<&[f64]>) -> (f64, Vec<f64>) {
        match blahut_arimoto_on_matrix(self.channel, points, &self.tm, &self.opts, warm) {
            Ok(r) => (r.rate.nats(), r.distribution.masses().to_vec()),
            Err(Error::BaaNotConverged { best, .. }) => {
                (best.rate.nats(), best.distribution.masses().to_vec())
            }
            Err(_) => (f64::NEG_INFINITY, warm.map(|w| w.to_vec()).unwrap_or_default()),
        }
    }

    /// Sweeps all interior/top locations until the rate stalls or the
    /// locations stop moving; the top point is compared against the peak
    /// endpoint explicitly. Returns (rate, masses).
    fn sweep_to_convergence(
        &mut self,
        points: &mut [f64],
        masses: &mut Vec<f64>,
        max_sweeps: usize,
        line_tol: f64,
        move_tol: f64,
    ) -> f64 {
        let peak = self.channel.peak();
        let k = points.len();
        let (mut rate, m) = self.run_baa(points, Some(masses));
        *masses = m;
        for sweep in 0..max_sweeps {
            let before = rate;
            let mut max_move = 0.0f64;
            for i in 1..k {
                let mut lo = points[i - 1] + 1e-5 * peak;
                let mut hi = if i + 1 < k {
                    points[i + 1] - 1e-5 * peak
                } else {
                    peak
                };
                if hi <= lo {
                    continue;
                }
                // After the first sweep the moves are small; a narrower
                // bracket around the current location saves evaluations.
                if sweep > 0 {
                    let span = 0.35 * (hi - lo);
                    lo = lo.max(points[i] - span);
                    hi = hi.min(points[i] + span);
                    if hi <= lo {
                        continue;
                    }
                }
                let old_x = points[i];
                let warm = masses.clone();
                let base_points = points.to_vec();
                let obj = |x: f64| -> f64 {
                    let mut tm = self.tm.clone();
                    tm.cols[i] = transition_column(x, self.channel, &self.grid);
                    let mut p = base_points.clone();
                    p[i] = x;
                    match blahut_arimoto_on_matrix(self.channel, &p, &tm, &self.opts, Some(&warm))
                    {
                        Ok(r) => r.rate.nats(),
                        Err(Error::BaaNotConverged { best, .. }) => best.rate.nats(),
                        Err(_) => f64::NEG_INFINITY,
                    }
                };
                let (mut x_star, mut v_star) = golden_max(&obj, lo, hi, line_tol);
                if i + 1 == k {
                    let v_peak = obj(peak);
                    if v_peak >= v_star {
                        x_star = peak;
                        v_star = v_peak;
                    }
                }
                if v_star > rate {
                    points[i] = x_star;
                    self.tm.cols[i] = transition_column(x_star, self.channel, &self.grid);
                    let (r, m) = self.run_baa(points, Some(masses));
                    rate = r;
                    *masses = m;
                    max_move = max_move.max((x_star - old_x).abs());
                }
            }
            if sweep >= 1 && (rate - before < 1e-9 || max_move < move_tol) {
                break;
            }
        }
        rate
    }
}

/// Coarse-resolution coordinate ascent from one starting support.
fn coarse_phase(
    channel: &SisoChannel,
    mut points: Vec<f64>,
    opts: &SearchOptions,
) -> Result<(Vec<f64>, Vec<f64>, f64)> {
    let peak = channel.peak();
    let k = points.len();
    let mut masses = vec![1.0 / k as f64; k];
    let coarse_opts = BaaOptions {
        delta: opts.coarse_delta,
        tol: (opts.baa.tol * 10.0).min(1e-6),
        max_iter: 60,
        ..opts.baa
    };
    let mut phase = CoordinatePhase::new(channel, &points, coarse_opts)?;
    let rate = phase.sweep_to_convergence(
        &mut points,
        &mut masses,
        opts.max_sweeps.min(6),
        (3e-4 * peak).max(1e-7),
        5e-4 * peak,
    );
    Ok((points, masses, rate))
}

/// Mid-resolution polish of the winning start; the final rate and the
/// certificate are computed at the full resolution afterwards.
fn fine_phase(
    channel: &SisoChannel,
    mut points: Vec<f64>,
    mut masses: Vec<f64>,
    opts: &SearchOptions,
) -> Result<(Vec<f64>, Vec<f64>, f64)> {
    let peak = channel.peak();
    let fine_opts = BaaOptions {
        delta: opts.baa.delta.max(2e-3),
        tol: (opts.baa.tol * 10.0).min(1e-7),
        max_iter: 100,
        ..opts.baa
    };
    let mut phase = CoordinatePhase::new(channel, &points, fine_opts)?;
    let rate = phase.sweep_to_convergence(
        &mut points,
        &mut masses,
        3,
        (2e-5 * peak).max(1e-8),
        2e-5 * peak,
    );
    Ok((points, masses, rate))
}

/// Capacity of the channel together with the optimal input distribution.
#[derive(Debug, Clone, Serialize)]
pub struct CapacityResult {
    pub distribution: DiscreteDistribution,
    pub rate: RateNats,
    pub k: usize,
    pub report: OptimalityReport,
}

/// Support-size search: increments k until the joint optimization produces a
/// distribution that passes the optimality certificate. Requires both
/// constraints finite; under an average constraint alone the optimal support
/// is not finite and only bounds apply.
pub fn capacity(channel: &SisoChannel, opts: &SearchOptions) -> Result<CapacityResult> {
    let ch = channel.canonicalize();
    if !ch.peak().is_finite() {
        return Err(Error::UnsupportedRegime(
            "capacity search requires a finite peak constraint".into(),
        ));
    }
    let mut k = opts.k_start.max(2);
    let mut seeds: Vec<Vec<f64>> = Vec::new();
    while k <= opts.k_max {
        let fixed = optimize_fixed_k_seeded(&ch, k, opts, &seeds)?;
        if fixed.certified {
            return Ok(CapacityResult {
                distribution: fixed.distribution,
                rate: fixed.rate,
                k,
                report: fixed.report,
            });
        }
        // Seed the next size with this support plus the J-dip location,
        // where the certificate says new mass wants to appear.
        let mut seed = fixed.distribution.points().to_vec();
        let dip = fixed.report.arg_min_j;
        if seed.iter().all(|&x| (x - dip).abs() > 1e-6 * ch.peak()) {
            seed.push(dip);
            seed.sort_by(|a, b| a.partial_cmp(b).unwrap());
            seeds = vec![seed];
        } else {
            seeds.clear();
        }
        k += 1;
    }
    Err(Error::SupportSearchExhausted { k_max: opts.k_max })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn example_channel() -> SisoChannel {
        SisoChannel::new(1.0, 5.0, 1.25).unwrap()
    }

    #[test]
    fn baa_reproduces_table_iii() {
        let ch = example_channel();
        let res = blahut_arimoto(&ch, &[0.0, 2.0, 5.0], &BaaOptions::default()).unwrap();
        // Iteration 1 of the mass evolution.
        let it1 = &res.trace.masses[0];
        assert_abs_diff_eq!(it1[0], 0.5912, epsilon = 2e-3);
        assert_abs_diff_eq!(it1[1], 0.2647, epsilon = 2e-3);
        assert_abs_diff_eq!(it1[2], 0.1441, epsilon = 2e-3);
        assert_abs_diff_eq!(res.trace.rates[0], 0.5679, epsilon = 2e-3);
        // Iteration 7.
        let it7 = &res.trace.masses[6];
        assert_abs_diff_eq!(it7[0], 0.6380, epsilon = 2e-3);
        assert_abs_diff_eq!(it7[1], 0.1866, epsilon = 2e-3);
        assert_abs_diff_eq!(it7[2], 0.1753, epsilon = 2e-3);
        assert_abs_diff_eq!(res.trace.rates[6], 0.6100, epsilon = 2e-3);
        // Converged values.
        let m = res.distribution.masses();
        assert_abs_diff_eq!(m[0], 0.638, epsilon = 2e-3);
        assert_abs_diff_eq!(m[1], 0.1866, epsilon = 2e-3);
        assert_abs_diff_eq!(m[2], 0.1753, epsilon = 2e-3);
        assert_abs_diff_eq!(res.rate.nats(), 0.61, epsilon = 5e-3);
    }

    #[test]
    fn baa_trace_is_monotone() {
        let ch = example_channel();
        let res = blahut_arimoto(&ch, &[0.0, 2.0, 5.0], &BaaOptions::default()).unwrap();
        for w in res.trace.rates.windows(2) {
            assert!(w[1] >= w[0] - 1e-10, "trace decreased: {} -> {}", w[0], w[1]);
        }
        assert!(res.trace.converged);
    }

    #[test]
    fn baa_respects_mean_constraint() {
        let ch = example_channel();
        let res = blahut_arimoto(&ch, &[0.0, 2.0, 5.0], &BaaOptions::default()).unwrap();
        let mean = res.distribution.mean();
        assert!(mean <= 1.25 + 1e-9);
        // Constraint binds here, so nu > 0 and the mean sits at E.
        assert!(res.nu > 0.0);
        assert_abs_diff_eq!(mean, 1.25, epsilon = 1e-6);
    }

    #[test]
    fn baa_single_point_is_zero_rate() {
        let ch = example_channel();
        let res = blahut_arimoto(&ch, &[0.0], &BaaOptions::default()).unwrap();
        assert_eq!(res.rate.nats(), 0.0);
        assert_eq!(res.distribution.masses(), &[1.0]);
    }

    #[test]
    fn baa_symmetric_two_point_is_uniform() {
        // E = A/2: the mean constraint is slack, nu = 0, masses 1/2 each.
        let ch = SisoChannel::new(1.0, 5.0, 2.5).unwrap();
        let res = blahut_arimoto(&ch, &[0.0, 5.0], &BaaOptions::default()).unwrap();
        assert_eq!(res.nu, 0.0);
        assert_abs_diff_eq!(res.distribution.masses()[0], 0.5, epsilon = 1e-9);
        assert_abs_diff_eq!(res.distribution.masses()[1], 0.5, epsilon = 1e-9);
    }

    #[test]
    fn mean_preserved_by_posterior_update() {
        // sum_i x_i sum_j ptilde_j q_{i,j} equals the pre-update mean.
        let ch = example_channel();
        let grid = build_grid(&ch, 5.0, 1e-3, 10.0).unwrap();
        let d =
            DiscreteDistribution::new_normalized(vec![0.0, 2.0, 5.0], vec![0.638, 0.1866, 0.1753]).unwrap();
        let tm = transition_matrix(&d, &ch, &grid).unwrap();
        let py = output_bin_probs(d.masses(), &tm);
        let mut post_mean = 0.0;
        for (i, col) in tm.cols.iter().enumerate() {
            let a = d.masses()[i];
            let x = d.points()[i];
            for (idx, &p) in col.probs.iter().enumerate() {
                let ptilde = py[col.start + idx];
                if ptilde > 0.0 {
                    // ptilde_j * q_{i,j} = a_i p_{j,i}
                    post_mean += x * a * p;
                }
            }
        }
        assert_abs_diff_eq!(post_mean, d.mean(), epsilon = 1e-9);
    }

    #[test]
    fn certificate_rejects_example6_distribution() {
        // psi = 0.2528 but J dips below zero near x = 2.05.
        let ch = example_channel();
        let d =
            DiscreteDistribution::new_normalized(vec![0.0, 2.0, 5.0], vec![0.638, 0.1866, 0.1753]).unwrap();
        let rep = optimality_check(&d, &ch, 0.05).unwrap();
        assert_abs_diff_eq!(rep.psi, 0.2528, epsilon = 2e-3);
        assert!(!rep.is_optimal);
        assert!(rep.min_j_off_support < -0.001);
    }

    #[test]
    fn certificate_accepts_example8_distribution() {
        let ch = example_channel();
        let d = DiscreteDistribution::new_normalized(
            vec![0.0, 2.7058, 5.0],
            vec![0.6643, 0.1869, 0.1489],
        )
        .unwrap();
        let rep = optimality_check(&d, &ch, 0.05).unwrap();
        assert_abs_diff_eq!(rep.psi, 0.2501, epsilon = 2e-3);
        assert!(rep.mass_at_zero);
        assert!(rep.psi > 0.0);
    }

    #[test]
    fn certificate_rejects_single_point() {
        let ch = example_channel();
        let d = DiscreteDistribution::new(vec![1.25], vec![1.0]).unwrap();
        assert!(optimality_check(&d, &ch, 0.05).is_err());
    }

    #[test]
    fn low_snr_ook_is_optimal() {
        // Tiny peak with E = A/2: equiprobable OOK passes the certificate.
        let ch = SisoChannel::new(1.0, 0.01, 0.005).unwrap();
        let res = blahut_arimoto(&ch, &[0.0, 0.01], &BaaOptions::default()).unwrap();
        let rep = optimality_check(&res.distribution, &ch, 0.0005).unwrap();
        assert!(rep.min_j_off_support >= -1e-4);
    }

    #[test]
    fn fixed_k3_matches_example8() {
        let ch = example_channel();
        let opts = SearchOptions {
            n_starts: 4,
            ..SearchOptions::default()
        };
        let res = optimize_fixed_k(&ch, 3, &opts).unwrap();
        assert!(res.certified, "certificate failed: {:?}", res.report.psi);
        let p = res.distribution.points();
        let m = res.distribution.masses();
        assert_abs_diff_eq!(p[1], 2.7058, epsilon = 0.02);
        assert_abs_diff_eq!(p[2], 5.0, epsilon = 1e-9);
        assert_abs_diff_eq!(m[0], 0.6643, epsilon = 3e-3);
        assert_abs_diff_eq!(m[1], 0.1869, epsilon = 3e-3);
        assert_abs_diff_eq!(m[2], 0.1489, epsilon = 3e-3);
        assert_abs_diff_eq!(res.rate.nats(), 0.626, epsilon = 5e-3);
        assert_abs_diff_eq!(res.report.psi, 0.2501, epsilon = 2e-3);
    }

    #[test]
    fn fixed_k2_fails_certificate_at_a5() {
        let ch = example_channel();
        let opts = SearchOptions {
            n_starts: 4,
            ..SearchOptions::default()
        };
        let res = optimize_fixed_k(&ch, 2, &opts).unwrap();
        assert!(!res.certified);
    }

    #[test]
    fn fixed_k2_certifies_at_low_peak() {
        // Fig. 8 region with k* = 2.
        let ch = SisoChannel::new(1.0, 1.0, 0.25).unwrap();
        let opts = SearchOptions {
            n_starts: 4,
            ..SearchOptions::default()
        };
        let res = optimize_fixed_k(&ch, 2, &opts).unwrap();
        assert!(res.certified);
    }

    #[test]
    fn capacity_search_example8() {
        let ch = example_channel();
        let opts = SearchOptions {
            n_starts: 4,
            ..SearchOptions::default()
        };
        let res = capacity(&ch, &opts).unwrap();
        assert_eq!(res.k, 3);
        assert_abs_diff_eq!(res.rate.nats(), 0.626, epsilon = 5e-3);
    }

    #[test]
    fn capacity_rejects_infinite_peak() {
        let ch = SisoChannel::avg_only(1.0, 1.0).unwrap();
        assert!(matches!(
            capacity(&ch, &SearchOptions::default()),
            Err(Error::UnsupportedRegime(_))
        ));
    }
}
