//! Numerical mutual information for a discrete input over the unit-variance
//! Gaussian channel.
//!
//! The output axis is discretized into bins of width `delta`; conditional bin
//! probabilities come from differences of the Gaussian tail function, which
//! stays exact for wide bins and far tails. A seeded Monte-Carlo estimator
//! provides an independent check on the grid computation.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

use crate::channel::{q_function, DiscreteDistribution, RateNats, SisoChannel, LN_2PI};
use crate::error::{Error, Result};

pub const DEFAULT_DELTA: f64 = 1e-3;
pub const DEFAULT_MARGIN: f64 = 10.0;
/// Largest permitted number of output bins.
pub const GRID_BIN_CAP: usize = 10_000_000;

/// Uniform discretization of the output interval `[y_lo, y_hi]`.
#[derive(Debug, Clone, Copy)]
pub struct OutputGrid {
    y_lo: f64,
    delta: f64,
    len: usize,
}

impl OutputGrid {
    pub fn y_lo(&self) -> f64 {
        self.y_lo
    }

    pub fn y_hi(&self) -> f64 {
        self.y_lo + self.delta * self.len as f64
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// Number of bins.
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Lower edge of bin j.
    pub fn edge(&self, j: usize) -> f64 {
        self.y_lo + self.delta * j as f64
    }
}

/// Grid bracketing `[-margin, g * support_max + margin]` in steps of `delta`.
/// The margin is in noise standard deviations; the default of 10 keeps the
/// out-of-grid probability mass below 1e-23.
pub fn build_grid(
    channel: &SisoChannel,
    support_max: f64,
    delta: f64,
    margin_sigmas: f64,
) -> Result<OutputGrid> {
    if !(delta > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "delta must be > 0, got {delta}"
        )));
    }
    if !(margin_sigmas > 0.0) || !support_max.is_finite() || support_max < 0.0 {
        return Err(Error::InvalidArgument(
            "margin must be > 0 and support_max finite and >= 0".into(),
        ));
    }
    let y_lo = -margin_sigmas;
    let y_hi = channel.gain() * support_max + margin_sigmas;
    let len = ((y_hi - y_lo) / delta).ceil() as usize;
    if len > GRID_BIN_CAP {
        return Err(Error::GridTooLarge {
            bins: len,
            cap: GRID_BIN_CAP,
        });
    }
    Ok(OutputGrid { y_lo, delta, len })
}

/// One column of the transition matrix: bin probabilities of `Y` given a
/// fixed input, stored over the window of bins where they are non-negligible.
/// Out-of-window mass is folded into the two window edge bins so every column
/// sums to exactly one, which the Blahut-Arimoto updates rely on.
#[derive(Debug, Clone)]
pub struct TransitionColumn {
    /// Index of the first stored bin.
    pub start: usize,
    pub probs: Vec<f64>,
}

impl TransitionColumn {
    pub fn sum(&self) -> f64 {
        self.probs.iter().sum()
    }
}

/// Conditional bin probabilities for every support point of a distribution.
#[derive(Debug, Clone)]
pub struct TransitionMatrix {
    pub cols: Vec<TransitionColumn>,
    pub n_bins: usize,
}

/// Builds the column for input level `x`: p_j = Q(edge_j - g x) - Q(edge_{j+1} - g x).
pub fn transition_column(x: f64, channel: &SisoChannel, grid: &OutputGrid) -> TransitionColumn {
    let g = channel.gain();
    let center = g * x;
    // Window of +-window_sigmas noise deviations around the signal level.
    let window_sigmas = DEFAULT_MARGIN;
    let lo_bin = (((center - window_sigmas) - grid.y_lo()) / grid.delta()).floor() as isize;
    let hi_bin = (((center + window_sigmas) - grid.y_lo()) / grid.delta()).ceil() as isize;
    let start = lo_bin.clamp(0, grid.len() as isize - 1) as usize;
    let end = hi_bin.clamp(start as isize + 1, grid.len() as isize) as usize;

    let n = end - start;
    let mut probs = Vec::with_capacity(n);
    let mut q_prev = q_function(grid.edge(start) - center);
    for j in start..end {
        let q_next = q_function(grid.edge(j + 1) - center);
        probs.push((q_prev - q_next).max(0.0));
        q_prev = q_next;
    }
    // Fold the below-window and above-window mass into the edge bins.
    let below = 1.0 - q_function(grid.edge(start) - center);
    let above = q_function(grid.edge(end) - center);
    probs[0] += below;
    probs[n - 1] += above;
    TransitionColumn { start, probs }
}

pub fn transition_matrix(
    dist: &DiscreteDistribution,
    channel: &SisoChannel,
    grid: &OutputGrid,
) -> Result<TransitionMatrix> {
    let peak = channel.peak();
    for &x in dist.points() {
        if x < 0.0 || x > peak * (1.0 + 1e-12) {
            return Err(Error::InvalidDistribution(format!(
                "support point {x} outside [0, {peak}]"
            )));
        }
    }
    let cols = dist
        .points()
        .iter()
        .map(|&x| transition_column(x, channel, grid))
        .collect();
    Ok(TransitionMatrix {
        cols,
        n_bins: grid.len(),
    })
}

/// Output bin distribution induced by the input masses.
pub fn output_bin_probs(masses: &[f64], tm: &TransitionMatrix) -> Vec<f64> {
    let mut py = vec![0.0; tm.n_bins];
    for (a, col) in masses.iter().zip(&tm.cols) {
        for (k, &p) in col.probs.iter().enumerate() {
            py[col.start + k] += a * p;
        }
    }
    py
}

/// Discretized mutual information in nats:
/// sum_{i,j} a_i p_{j,i} log(p_{j,i} / sum_i' a_i' p_{j,i'}).
/// Bins with zero probability are skipped (0 log 0 = 0).
pub fn mutual_information(
    dist: &DiscreteDistribution,
    channel: &SisoChannel,
    grid: &OutputGrid,
) -> Result<RateNats> {
    let tm = transition_matrix(dist, channel, grid)?;
    Ok(mutual_information_from_matrix(dist.masses(), &tm))
}

pub fn mutual_information_from_matrix(masses: &[f64], tm: &TransitionMatrix) -> RateNats {
    let py = output_bin_probs(masses, tm);
    let mut total = 0.0;
    for (a, col) in masses.iter().zip(&tm.cols) {
        if *a == 0.0 {
            continue;
        }
        let mut acc = 0.0;
        for (k, &p) in col.probs.iter().enumerate() {
            if p > 0.0 {
                acc += p * (p / py[col.start + k]).ln();
            }
        }
        total += a * acc;
    }
    RateNats(total.max(0.0))
}

/// Monte-Carlo mutual-information estimate with its standard error.
#[derive(Debug, Clone, Copy)]
pub struct McEstimate {
    pub nats: f64,
    pub std_err: f64,
    pub n_samples: usize,
}

impl McEstimate {
    pub fn rate(&self) -> RateNats {
        RateNats(self.nats)
    }
}

const MC_CHUNK: usize = 1 << 16;

/// Unbiased sample-average estimate of E[log(P_{Y|X} / P_Y)] for a discrete
/// input over the Gaussian channel. Deterministic given (seed, n_samples):
/// the stream is split into fixed chunks whose seeds derive from `seed`, so
/// the result does not depend on thread count.
pub fn mc_mutual_information(
    dist: &DiscreteDistribution,
    channel: &SisoChannel,
    n_samples: usize,
    seed: u64,
) -> Result<McEstimate> {
    if n_samples < 10_000 {
        return Err(Error::InvalidArgument(format!(
            "n_samples must be >= 10^4, got {n_samples}"
        )));
    }
    let g = channel.gain();
    let points = dist.points();
    let masses = dist.masses();
    let ln_masses: Vec<f64> = masses.iter().map(|a| a.ln()).collect();

    // Cumulative masses for inverse-CDF sampling.
    let mut cum = Vec::with_capacity(masses.len());
    let mut acc = 0.0;
    for &a in masses {
        acc += a;
        cum.push(acc);
    }

    let n_chunks = n_samples.div_ceil(MC_CHUNK);
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for chunk in 0..n_chunks {
        let count = if chunk + 1 == n_chunks {
            n_samples - chunk * MC_CHUNK
        } else {
            MC_CHUNK
        };
        // Chunk-derived seed keeps the stream reproducible and splittable.
        let chunk_seed = seed
            .wrapping_mul(0x9E37_79B9_7F4A_7C15)
            .wrapping_add(chunk as u64);
        let mut rng = ChaCha12Rng::seed_from_u64(chunk_seed);
        for _ in 0..count {
            let u: f64 = rng.random();
            let i = cum.partition_point(|&c| c < u).min(points.len() - 1);
            let z = sample_standard_normal(&mut rng);
            let y = g * points[i] + z;
            // log P_{Y|X}(y|x_i) = -z^2/2 - log sqrt(2 pi)
            let ln_cond = -0.5 * z * z - 0.5 * LN_2PI;
            // log P_Y(y) by logsumexp over the mixture components.
            let mut max_term = f64::NEG_INFINITY;
            let mut terms = Vec::with_capacity(points.len());
            for (k, &x) in points.iter().enumerate() {
                let d = y - g * x;
                let t = ln_masses[k] - 0.5 * d * d;
                terms.push(t);
                if t > max_term {
                    max_term = t;
                }
            }
            let lse: f64 = terms.iter().map(|t| (t - max_term).exp()).sum();
            let ln_py = max_term + lse.ln() - 0.5 * LN_2PI;
            let w = ln_cond - ln_py;
            sum += w;
            sum_sq += w * w;
        }
    }
    let n = n_samples as f64;
    let mean = sum / n;
    let var = (sum_sq / n - mean * mean).max(0.0);
    Ok(McEstimate {
        nats: mean,
        std_err: (var / n).sqrt(),
        n_samples,
    })
}

/// Box-Muller; two uniforms per normal keeps the stream layout simple.
fn sample_standard_normal<R: Rng>(rng: &mut R) -> f64 {
    loop {
        let u1: f64 = rng.random();
        if u1 > 0.0 {
            let u2: f64 = rng.random();
            return (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn example6_channel() -> SisoChannel {
        SisoChannel::new(1.0, 5.0, 1.25).unwrap()
    }

    fn example6_dist() -> DiscreteDistribution {
        DiscreteDistribution::new_normalized(vec![0.0, 2.0, 5.0], vec![0.638, 0.1866, 0.1753]).unwrap()
    }

    #[test]
    fn grid_matches_paper_settings() {
        // y_l = -10, y_u = gA + 10, delta = 1e-3.
        let ch = example6_channel();
        let grid = build_grid(&ch, 5.0, 1e-3, 10.0).unwrap();
        assert_eq!(grid.y_lo(), -10.0);
        assert_abs_diff_eq!(grid.y_hi(), 15.0, epsilon = 1e-9);
        assert_eq!(grid.len(), 25_000);
    }

    #[test]
    fn grid_zero_gain_brackets_noise() {
        let ch = SisoChannel::new(0.0, 5.0, 1.0).unwrap();
        let grid = build_grid(&ch, 5.0, 1e-2, 10.0).unwrap();
        assert_eq!(grid.y_lo(), -10.0);
        assert_abs_diff_eq!(grid.y_hi(), 10.0, epsilon = 1e-9);
    }

    #[test]
    fn grid_rejects_bad_delta_and_cap() {
        let ch = example6_channel();
        assert!(build_grid(&ch, 5.0, 0.0, 10.0).is_err());
        assert!(matches!(
            build_grid(&ch, 5.0, 1e-9, 10.0),
            Err(Error::GridTooLarge { .. })
        ));
    }

    #[test]
    fn columns_are_stochastic() {
        let ch = example6_channel();
        let grid = build_grid(&ch, 5.0, 1e-3, 10.0).unwrap();
        let tm = transition_matrix(&example6_dist(), &ch, &grid).unwrap();
        for col in &tm.cols {
            assert_abs_diff_eq!(col.sum(), 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn single_wide_bin_captures_all_mass() {
        let ch = SisoChannel::new(1.0, 5.0, 2.5).unwrap();
        let grid = build_grid(&ch, 0.0, 20.0, 10.0).unwrap();
        assert_eq!(grid.len(), 1);
        let col = transition_column(0.0, &ch, &grid);
        assert_abs_diff_eq!(col.sum(), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn zero_input_column_is_symmetric() {
        let ch = SisoChannel::new(1.0, 5.0, 2.5).unwrap();
        // Grid symmetric about 0 for support_max = 0.
        let grid = build_grid(&ch, 0.0, 1e-3, 8.0).unwrap();
        let col = transition_column(0.0, &ch, &grid);
        let n = col.probs.len();
        for k in 0..n / 2 {
            assert_abs_diff_eq!(col.probs[k], col.probs[n - 1 - k], epsilon = 1e-15);
        }
    }

    #[test]
    fn column_means_sit_at_gain_times_x() {
        // Quadrature oracle: the mean of each column must be g x_i within delta.
        let ch = example6_channel();
        let grid = build_grid(&ch, 5.0, 1e-3, 10.0).unwrap();
        let tm = transition_matrix(&example6_dist(), &ch, &grid).unwrap();
        for (col, &x) in tm.cols.iter().zip(example6_dist().points()) {
            let mean: f64 = col
                .probs
                .iter()
                .enumerate()
                .map(|(k, &p)| p * (grid.edge(col.start + k) + grid.delta() / 2.0))
                .sum();
            assert_abs_diff_eq!(mean, ch.gain() * x, epsilon = grid.delta());
        }
    }

    #[test]
    fn single_point_distribution_has_zero_mi() {
        let ch = example6_channel();
        let grid = build_grid(&ch, 5.0, 1e-3, 10.0).unwrap();
        let d = DiscreteDistribution::new(vec![1.0], vec![1.0]).unwrap();
        assert_eq!(mutual_information(&d, &ch, &grid).unwrap().nats(), 0.0);
        let mc = mc_mutual_information(&d, &ch, 10_000, 7).unwrap();
        assert!(mc.nats.abs() < 1e-12);
        assert!(mc.std_err < 1e-12);
    }

    #[test]
    fn example6_mutual_information() {
        // 0.61 nats (0.88 bits) for the Example 6 distribution.
        let ch = example6_channel();
        let grid = build_grid(&ch, 5.0, 1e-3, 10.0).unwrap();
        let mi = mutual_information(&example6_dist(), &ch, &grid).unwrap();
        assert_abs_diff_eq!(mi.nats(), 0.61, epsilon = 5e-3);
        assert_abs_diff_eq!(mi.bits(), 0.88, epsilon = 1e-2);
    }

    #[test]
    fn example6_monte_carlo_agrees() {
        let ch = example6_channel();
        let mc = mc_mutual_information(&example6_dist(), &ch, 1_000_000, 42).unwrap();
        assert!((mc.nats - 0.61).abs() < 3.0 * mc.std_err + 1e-3);
    }

    #[test]
    fn weak_signal_expansion() {
        // {0, A} equiprobable with gA = 0.1: I ~ Var(gX)/2 = (gA)^2/8 within 5%.
        let ch = SisoChannel::new(1.0, 0.1, 0.05).unwrap();
        let grid = build_grid(&ch, 0.1, 1e-3, 10.0).unwrap();
        let d = DiscreteDistribution::ook(0.1, 0.5).unwrap();
        let mi = mutual_information(&d, &ch, &grid).unwrap().nats();
        let expansion = 0.1f64.powi(2) / 8.0;
        assert!((mi - expansion).abs() / expansion < 0.05);
        // Cross-check by Monte-Carlo.
        let mc = mc_mutual_information(&d, &ch, 1_000_000, 3).unwrap();
        assert!((mc.nats - mi).abs() < 3.0 * mc.std_err + 1e-4);
    }

    #[test]
    fn well_separated_levels_reach_log2() {
        // {0, 1} equiprobable with g = 10: I -> log 2. Grid MI is the oracle
        // for the separation limit; MC must agree within 3 SE.
        let ch = SisoChannel::new(10.0, 1.0, 0.5).unwrap();
        let grid = build_grid(&ch, 1.0, 1e-3, 10.0).unwrap();
        let d = DiscreteDistribution::ook(1.0, 0.5).unwrap();
        let mi = mutual_information(&d, &ch, &grid).unwrap().nats();
        assert_abs_diff_eq!(mi, std::f64::consts::LN_2, epsilon = 1e-4);
        let mc = mc_mutual_information(&d, &ch, 200_000, 11).unwrap();
        assert!((mc.nats - mi).abs() < 3.0 * mc.std_err + 1e-4);
    }

    #[test]
    fn mc_is_reproducible() {
        let ch = example6_channel();
        let a = mc_mutual_information(&example6_dist(), &ch, 50_000, 9).unwrap();
        let b = mc_mutual_information(&example6_dist(), &ch, 50_000, 9).unwrap();
        assert_eq!(a.nats, b.nats);
    }

    #[test]
    fn delta_halving_is_converged() {
        let ch = example6_channel();
        let d = example6_dist();
        let g1 = build_grid(&ch, 5.0, 1e-3, 10.0).unwrap();
        let g2 = build_grid(&ch, 5.0, 5e-4, 10.0).unwrap();
        let a = mutual_information(&d, &ch, &g1).unwrap().nats();
        let b = mutual_information(&d, &ch, &g2).unwrap().nats();
        assert!((a - b).abs() < 1e-4);
    }

    #[test]
    fn mi_bounded_by_entropy() {
        let ch = example6_channel();
        let grid = build_grid(&ch, 5.0, 1e-3, 10.0).unwrap();
        let d = example6_dist();
        let mi = mutual_information(&d, &ch, &grid).unwrap().nats();
        assert!(mi >= 0.0);
        assert!(mi <= d.entropy());
    }
}
