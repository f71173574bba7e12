//! Domain types for the scalar intensity channel, constraint canonicalization,
//! and Gaussian / truncated-Gaussian utilities shared by every other module.
//!
//! The channel is `Y = g X + Z` with `Z ~ N(0, 1)`; the noise variance is
//! fixed to one by normalization, so all intensities are expressed in noise
//! standard deviations.

use serde::Serialize;

use crate::error::{Error, Result};

/// log(2*pi)
pub const LN_2PI: f64 = 1.837_877_066_409_345_3;
/// 0.5 * log(2*pi*e)
pub const HALF_LN_2PI_E: f64 = 1.418_938_533_204_672_7;
/// sqrt(2*pi)
pub const SQRT_2PI: f64 = 2.506_628_274_631_000_2;

/// Standard Gaussian tail function Q(x) = P{N(0,1) > x}, computed through
/// erfc so large arguments do not suffer cancellation.
pub fn q_function(x: f64) -> f64 {
    0.5 * libm::erfc(x / std::f64::consts::SQRT_2)
}

/// Standard normal density.
pub fn normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / SQRT_2PI
}

/// A rate in nats per transmission.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize)]
pub struct RateNats(pub f64);

impl RateNats {
    pub fn nats(self) -> f64 {
        self.0
    }

    /// Display-time conversion; rates are computed and stored in nats.
    pub fn bits(self) -> f64 {
        self.0 / std::f64::consts::LN_2
    }
}

/// Single-input single-output IM/DD Gaussian channel with gain `g`, peak
/// intensity constraint `A` (possibly infinite) and average intensity
/// constraint `E` (possibly infinite). At least one constraint is finite.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SisoChannel {
    gain: f64,
    peak: f64,
    avg: f64,
}

impl SisoChannel {
    pub fn new(gain: f64, peak: f64, avg: f64) -> Result<Self> {
        if !(gain >= 0.0) || !gain.is_finite() {
            return Err(Error::InvalidChannel(format!(
                "gain must be finite and >= 0, got {gain}"
            )));
        }
        if !(peak > 0.0) {
            return Err(Error::InvalidChannel(format!(
                "peak must be > 0, got {peak}"
            )));
        }
        if !(avg > 0.0) {
            return Err(Error::InvalidChannel(format!("avg must be > 0, got {avg}")));
        }
        if peak.is_infinite() && avg.is_infinite() {
            return Err(Error::InvalidChannel(
                "at least one of peak/avg must be finite".into(),
            ));
        }
        Ok(Self { gain, peak, avg })
    }

    /// Peak-constraint-only channel; the average constraint is vacuous.
    pub fn peak_only(gain: f64, peak: f64) -> Result<Self> {
        Self::new(gain, peak, f64::INFINITY)
    }

    /// Average-constraint-only channel.
    pub fn avg_only(gain: f64, avg: f64) -> Result<Self> {
        Self::new(gain, f64::INFINITY, avg)
    }

    pub fn gain(&self) -> f64 {
        self.gain
    }

    pub fn peak(&self) -> f64 {
        self.peak
    }

    pub fn avg(&self) -> f64 {
        self.avg
    }

    /// The average-to-peak ratio alpha = E/A of the canonical channel.
    /// Infinite E maps to 1/2, infinite A to 0.
    pub fn alpha(&self) -> f64 {
        let c = self.canonicalize();
        if c.peak.is_infinite() {
            0.0
        } else {
            c.avg / c.peak
        }
    }

    /// Clamps the average constraint to A/2: the optimal input satisfies
    /// E[X] = E when E <= A/2 and E[X] = A/2 otherwise, so it suffices to
    /// study E <= A/2. Idempotent.
    pub fn canonicalize(&self) -> Self {
        Self {
            gain: self.gain,
            peak: self.peak,
            avg: self.avg.min(self.peak / 2.0),
        }
    }

    pub fn is_canonical(&self) -> bool {
        self.avg <= self.peak / 2.0
    }

    /// True when the (canonical) average constraint is slack, i.e. E = A/2,
    /// which is also the peak-only case.
    pub fn avg_is_slack(&self) -> bool {
        let c = self.canonicalize();
        c.peak.is_finite() && c.avg == c.peak / 2.0
    }
}

/// Finite discrete input distribution: strictly increasing support points
/// with positive masses summing to one.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiscreteDistribution {
    points: Vec<f64>,
    masses: Vec<f64>,
}

impl DiscreteDistribution {
    pub fn new(points: Vec<f64>, masses: Vec<f64>) -> Result<Self> {
        if points.is_empty() || points.len() != masses.len() {
            return Err(Error::InvalidDistribution(
                "points and masses must be non-empty and of equal length".into(),
            ));
        }
        for w in points.windows(2) {
            if !(w[1] > w[0]) {
                return Err(Error::InvalidDistribution(format!(
                    "points must be strictly increasing, got {} then {}",
                    w[0], w[1]
                )));
            }
        }
        if points.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidDistribution("points must be finite".into()));
        }
        let sum: f64 = masses.iter().sum();
        if masses.iter().any(|&a| !(a > 0.0)) {
            return Err(Error::InvalidDistribution(
                "all masses must be positive".into(),
            ));
        }
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidDistribution(format!(
                "masses must sum to 1, got {sum}"
            )));
        }
        // Renormalize exactly so the stored sum is 1 to rounding.
        let masses = masses.iter().map(|a| a / sum).collect();
        Ok(Self { points, masses })
    }

    /// Accepts positive weights that need not sum to one and rescales them.
    /// Convenient for literature values quoted to a few digits.
    pub fn new_normalized(points: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        let sum: f64 = weights.iter().sum();
        if !(sum > 0.0) || !sum.is_finite() {
            return Err(Error::InvalidDistribution(format!(
                "weights must have a positive finite sum, got {sum}"
            )));
        }
        Self::new(points, weights.iter().map(|a| a / sum).collect())
    }

    /// Two-point on-off keying distribution on {0, peak} with P{X = peak} = p.
    pub fn ook(peak: f64, p: f64) -> Result<Self> {
        Self::new(vec![0.0, peak], vec![1.0 - p, p])
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn mean(&self) -> f64 {
        self.points
            .iter()
            .zip(&self.masses)
            .map(|(x, a)| x * a)
            .sum()
    }

    pub fn variance(&self) -> f64 {
        let m = self.mean();
        self.points
            .iter()
            .zip(&self.masses)
            .map(|(x, a)| a * (x - m) * (x - m))
            .sum()
    }

    /// Shannon entropy in nats.
    pub fn entropy(&self) -> f64 {
        -self
            .masses
            .iter()
            .filter(|&&a| a > 0.0)
            .map(|a| a * a.ln())
            .sum::<f64>()
    }
}

/// Parameters of a Gaussian N(mu, nu^2) truncated to [0, peak], together with
/// the derived normalization eta and the truncated mean/variance.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct TruncGaussParams {
    pub mu: f64,
    pub nu: f64,
    pub peak: f64,
    /// eta = 1 / (F(A) - F(0)), the truncation normalization; >= 1.
    pub eta: f64,
    /// Mean of the truncated distribution.
    pub mu_tilde: f64,
    /// Variance of the truncated distribution.
    pub nu_tilde2: f64,
}

impl TruncGaussParams {
    /// Density of the underlying (untruncated) Gaussian at x.
    pub fn base_pdf(&self, x: f64) -> f64 {
        normal_pdf((x - self.mu) / self.nu) / self.nu
    }

    /// Density of the truncated distribution at x in [0, peak].
    pub fn pdf(&self, x: f64) -> f64 {
        self.eta * self.base_pdf(x)
    }
}

/// Computes eta, mu_tilde and nu_tilde^2 for a Gaussian truncated to
/// [0, peak]. `peak` may be infinite (truncation to [0, inf)).
pub fn trunc_gauss_params(mu: f64, nu: f64, peak: f64) -> Result<TruncGaussParams> {
    if !(nu > 0.0) || !nu.is_finite() {
        return Err(Error::DegenerateScale(format!(
            "nu must be finite and > 0, got {nu}"
        )));
    }
    if !(peak > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "peak must be > 0, got {peak}"
        )));
    }
    let z0 = (0.0 - mu) / nu;
    // Mass on [0, A] as Q(z0) - Q(zA); stable for mu far below 0.
    let (mass, pdf_a_scaled) = if peak.is_infinite() {
        (q_function(z0), 0.0)
    } else {
        let za = (peak - mu) / nu;
        (q_function(z0) - q_function(za), normal_pdf(za) / nu)
    };
    if !(mass > 1e-280) {
        return Err(Error::Numeric(format!(
            "truncated-Gaussian mass on [0, peak] underflows (mu={mu}, nu={nu}, peak={peak})"
        )));
    }
    let eta = 1.0 / mass;
    let pdf_0 = normal_pdf(z0) / nu;
    let mu_tilde = mu + nu * nu * eta * (pdf_0 - pdf_a_scaled);
    let t_pdf_0 = eta * pdf_0;
    let t_pdf_a = eta * pdf_a_scaled;
    let nu_tilde2 = if peak.is_infinite() {
        nu * nu * (1.0 - mu_tilde * t_pdf_0)
    } else {
        nu * nu * (1.0 - peak * t_pdf_a - mu_tilde * (t_pdf_0 - t_pdf_a))
    };
    Ok(TruncGaussParams {
        mu,
        nu,
        peak,
        eta,
        mu_tilde,
        nu_tilde2,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn q_at_zero_and_one() {
        assert_abs_diff_eq!(q_function(0.0), 0.5, epsilon = 1e-15);
        // High-precision erfc evaluation of Q(1).
        assert_abs_diff_eq!(q_function(1.0), 0.158_655_253_931_457_05, epsilon = 1e-12);
    }

    #[test]
    fn q_tail_underflows_cleanly() {
        let v = q_function(40.0);
        assert!(v >= 0.0 && v < 1e-300);
    }

    #[test]
    fn q_symmetry_on_grid() {
        for i in 0..1000 {
            let x = -8.0 + 16.0 * (i as f64) / 999.0;
            assert!((q_function(x) + q_function(-x) - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn q_monotone_decreasing() {
        let mut prev = q_function(-8.0);
        for i in 1..1000 {
            let x = -8.0 + 16.0 * (i as f64) / 999.0;
            let v = q_function(x);
            assert!(v <= prev, "Q increased at x = {x}");
            if v > 1e-12 && v < 1.0 - 1e-12 {
                assert!(v < prev, "Q plateaued at x = {x}");
            }
            prev = v;
        }
        assert!(q_function(8.0) < q_function(-8.0));
    }

    #[test]
    fn canonicalize_clamps_and_is_idempotent() {
        let ch = SisoChannel::new(1.0, 5.0, 4.0).unwrap().canonicalize();
        assert_eq!(ch.avg(), 2.5);
        assert_eq!(ch.canonicalize(), ch);

        let ch = SisoChannel::new(1.0, 5.0, 1.25).unwrap();
        assert_eq!(ch.canonicalize(), ch);

        let ch = SisoChannel::avg_only(1.0, 1.0).unwrap();
        assert_eq!(ch.canonicalize(), ch);
    }

    #[test]
    fn channel_rejects_doubly_infinite() {
        assert!(SisoChannel::new(1.0, f64::INFINITY, f64::INFINITY).is_err());
        assert!(SisoChannel::new(-1.0, 5.0, 1.0).is_err());
        assert!(SisoChannel::new(1.0, 0.0, 1.0).is_err());
    }

    #[test]
    fn distribution_mean_and_normalization() {
        let d =
            DiscreteDistribution::new_normalized(vec![0.0, 2.0, 5.0], vec![0.638, 0.1866, 0.1753]).unwrap();
        assert!((d.masses().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!((d.mean() - 1.2497 / 0.9999).abs() < 1e-3);
        assert!(DiscreteDistribution::new(vec![0.0, 0.0], vec![0.5, 0.5]).is_err());
        assert!(DiscreteDistribution::new(vec![0.0, 1.0], vec![0.9, 0.2]).is_err());
    }

    #[test]
    fn trunc_gauss_symmetric_mean_is_center() {
        // Symmetry about A/2 makes P(0) = P(A), so mu_tilde = A/2 exactly.
        for nu in [0.1, 0.5, 2.0, 50.0] {
            let p = trunc_gauss_params(0.5, nu, 1.0).unwrap();
            assert_abs_diff_eq!(p.mu_tilde, 0.5, epsilon = 1e-12);
            assert!(p.eta >= 1.0);
            assert!(p.nu_tilde2 > 0.0 && p.nu_tilde2 <= nu * nu);
        }
    }

    #[test]
    fn trunc_gauss_flat_limit_is_uniform() {
        // nu >> A behaves like a uniform distribution on [0, 1].
        let p = trunc_gauss_params(0.5, 1e6, 1.0).unwrap();
        assert_abs_diff_eq!(p.mu_tilde, 0.5, epsilon = 1e-9);
        // The variance formula cancels catastrophically for nu/A ~ 1e6, so
        // the uniform-variance limit is checked at a flat-but-sane scale.
        let p = trunc_gauss_params(0.5, 100.0, 1.0).unwrap();
        assert_abs_diff_eq!(p.nu_tilde2, 1.0 / 12.0, epsilon = 1e-4);
    }

    #[test]
    fn trunc_gauss_narrow_keeps_moments() {
        let p = trunc_gauss_params(0.5, 0.1, 1.0).unwrap();
        assert!((p.eta - 1.0).abs() < 1e-5);
        assert_abs_diff_eq!(p.mu_tilde, 0.5, epsilon = 1e-8);
        assert_abs_diff_eq!(p.nu_tilde2, 0.01, epsilon = 1e-6);
    }

    #[test]
    fn trunc_gauss_rejects_bad_scale() {
        assert!(trunc_gauss_params(0.5, 0.0, 1.0).is_err());
        assert!(trunc_gauss_params(0.5, -1.0, 1.0).is_err());
        // Mass underflows: mean 4000 sigmas above the window.
        assert!(trunc_gauss_params(40.0, 0.01, 1.0).is_err());
    }

    // Oracle: adaptive-ish quadrature of the truncated pdf moments. The
    // closed-form mu_tilde / nu_tilde2 must match the integrals.
    fn quad_moments(mu: f64, nu: f64, peak: f64) -> (f64, f64, f64) {
        let n = 400_001;
        let h = peak / (n - 1) as f64;
        let pdf = |x: f64| normal_pdf((x - mu) / nu) / nu;
        let mut m0 = 0.0;
        let mut m1 = 0.0;
        let mut m2 = 0.0;
        // Simpson's rule.
        for i in 0..n {
            let x = i as f64 * h;
            let w = if i == 0 || i == n - 1 {
                1.0
            } else if i % 2 == 1 {
                4.0
            } else {
                2.0
            };
            let p = pdf(x) * w;
            m0 += p;
            m1 += p * x;
            m2 += p * x * x;
        }
        let scale = h / 3.0;
        (m0 * scale, m1 * scale, m2 * scale)
    }

    #[test]
    fn trunc_gauss_matches_quadrature() {
        for &(mu, nu, peak) in &[
            (0.5, 0.1, 1.0),
            (0.5, 0.3, 1.0),
            (-0.2, 0.5, 1.0),
            (1.4, 0.8, 1.0),
            (2.0, 1.7, 5.0),
            (-1.0, 2.0, 5.0),
        ] {
            let p = trunc_gauss_params(mu, nu, peak).unwrap();
            let (m0, m1, m2) = quad_moments(mu, nu, peak);
            let mean = m1 / m0;
            let var = m2 / m0 - mean * mean;
            assert_abs_diff_eq!(p.eta, 1.0 / m0, epsilon = 1e-8 * p.eta);
            assert_abs_diff_eq!(p.mu_tilde, mean, epsilon = 1e-8);
            assert_abs_diff_eq!(p.nu_tilde2, var, epsilon = 1e-8);
        }
    }

    #[test]
    fn rate_conversion() {
        let r = RateNats(std::f64::consts::LN_2);
        assert_abs_diff_eq!(r.bits(), 1.0, epsilon = 1e-15);
    }
}
