//! 2-user broadcast-channel and multiple-access-channel rate regions:
//! outer bounds from single-user upper bounds, truncated-Gaussian
//! superposition inner bounds, and the high/low-SNR asymptotic regions.

use rayon::prelude::*;
use serde::Serialize;

use crate::bounds::{upper_duality_lmw, upper_relaxation};
use crate::channel::{trunc_gauss_params, SisoChannel, TruncGaussParams};
use crate::error::{Error, Result};
use crate::numeric::nelder_mead_max;

/// Which single-user upper bound generates an outer region.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum OuterMethod {
    /// Duality bound with the truncated-exponential output law.
    Lmw,
    /// Constraint-relaxation (maximum-variance) bound.
    Relax0,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RegionTag {
    Inner,
    Outer,
    Asymptotic,
}

/// How the stored boundary points describe the region: a staircase of
/// rectangle corners (unions of boxes are not convex) or a convex polyline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryInterp {
    Staircase,
    Polyline,
}

/// A 2-user rate region described by its upper-right boundary: points sorted
/// by increasing r1 with non-increasing r2, in nats/transmission.
#[derive(Debug, Clone, Serialize)]
pub struct RateRegion2 {
    pub boundary: Vec<[f64; 2]>,
    pub tag: RegionTag,
    pub interp: BoundaryInterp,
    /// Gap-to-capacity constant attached by the asymptotic theorems.
    pub gap: Option<f64>,
    /// True when the constructor re-ordered the users (BC requires g1 >= g2)
    /// and the output was mapped back to the caller's indexing.
    pub users_swapped: bool,
}

impl RateRegion2 {
    fn from_points(mut pts: Vec<[f64; 2]>, tag: RegionTag, interp: BoundaryInterp) -> Self {
        for p in &mut pts {
            p[0] = p[0].max(0.0);
            p[1] = p[1].max(0.0);
        }
        // Drop dominated points, sort by r1, keep r2 strictly shaping.
        pts.sort_by(|a, b| a[0].partial_cmp(&b[0]).unwrap());
        let mut kept: Vec<[f64; 2]> = Vec::new();
        for p in pts.into_iter().rev() {
            // Scanning right-to-left, keep points whose r2 exceeds all seen.
            if kept.last().map_or(true, |k| p[1] > k[1] + 1e-15) {
                kept.push(p);
            }
        }
        kept.reverse();
        Self {
            boundary: kept,
            tag,
            interp,
            gap: None,
            users_swapped: false,
        }
    }

    pub fn with_gap(mut self, gap: f64) -> Self {
        self.gap = Some(gap);
        self
    }

    /// Largest r2 the region allows at rate r1 (0 outside).
    pub fn max_r2_at(&self, r1: f64) -> f64 {
        if self.boundary.is_empty() || r1 < -1e-15 {
            return 0.0;
        }
        match self.interp {
            BoundaryInterp::Staircase => self
                .boundary
                .iter()
                .filter(|p| p[0] >= r1 - 1e-15)
                .map(|p| p[1])
                .fold(0.0, f64::max),
            BoundaryInterp::Polyline => {
                let b = &self.boundary;
                if r1 <= b[0][0] {
                    return b[0][1].max(if b[0][0] > 0.0 { b[0][1] } else { b[0][1] });
                }
                for w in b.windows(2) {
                    if r1 <= w[1][0] {
                        let t = (r1 - w[0][0]) / (w[1][0] - w[0][0]).max(1e-300);
                        return w[0][1] + t * (w[1][1] - w[0][1]);
                    }
                }
                0.0
            }
        }
    }

    pub fn contains(&self, r1: f64, r2: f64, tol: f64) -> bool {
        r1 >= -tol && r2 <= self.max_r2_at(r1.max(0.0)) + tol
    }

    /// Largest achievable r1 (the r1-axis intercept).
    pub fn r1_intercept(&self) -> f64 {
        self.boundary.iter().map(|p| p[0]).fold(0.0, f64::max)
    }

    /// Largest achievable r2 (the r2-axis intercept).
    pub fn r2_intercept(&self) -> f64 {
        self.boundary.iter().map(|p| p[1]).fold(0.0, f64::max)
    }

    /// Reflects the region across the diagonal, mapping user 1 <-> user 2.
    pub fn swap_users(mut self) -> Self {
        for p in &mut self.boundary {
            p.swap(0, 1);
        }
        self.boundary
            .sort_by(|a, b| a[0].partial_cmp(&b[0]).unwrap());
        self.users_swapped = !self.users_swapped;
        self
    }

    /// Pointwise domination check: every boundary point of `self` lies inside
    /// `outer`, within `tol`.
    pub fn is_inside(&self, outer: &RateRegion2, tol: f64) -> bool {
        self.boundary
            .iter()
            .all(|p| outer.contains(p[0], p[1], tol))
    }
}

/// Upper-right hull of a candidate point cloud (monotone chain restricted to
/// the decreasing frontier), with the axis projections included.
fn convex_hull_region(mut pts: Vec<[f64; 2]>, tag: RegionTag) -> RateRegion2 {
    let r1max = pts.iter().map(|p| p[0]).fold(0.0, f64::max);
    let r2max = pts.iter().map(|p| p[1]).fold(0.0, f64::max);
    pts.push([r1max, 0.0]);
    pts.push([0.0, r2max]);
    pts.push([0.0, 0.0]);
    pts.sort_by(|a, b| {
        a[0].partial_cmp(&b[0])
            .unwrap()
            .then(b[1].partial_cmp(&a[1]).unwrap())
    });
    // Upper hull from (0, r2max) to (r1max, 0).
    let cross = |o: &[f64; 2], a: &[f64; 2], b: &[f64; 2]| -> f64 {
        (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
    };
    let mut hull: Vec<[f64; 2]> = Vec::new();
    for p in pts {
        while hull.len() >= 2 && cross(&hull[hull.len() - 2], &hull[hull.len() - 1], &p) >= -1e-18 {
            hull.pop();
        }
        hull.push(p);
    }
    RateRegion2::from_points(hull, tag, BoundaryInterp::Polyline)
}

/// 2-user broadcast channel: one transmitter with shared peak/average
/// constraints, receiver gains g1 >= g2 (sorted on construction).
#[derive(Debug, Clone, Copy, Serialize)]
pub struct BcChannel {
    g1: f64,
    g2: f64,
    peak: f64,
    avg: f64,
    swapped: bool,
}

impl BcChannel {
    pub fn new(g1: f64, g2: f64, peak: f64, avg: f64) -> Result<Self> {
        if !(g1 > 0.0) || !(g2 > 0.0) {
            return Err(Error::InvalidChannel(
                "broadcast gains must be positive".into(),
            ));
        }
        if !(peak > 0.0) || !peak.is_finite() || !(avg > 0.0) || !avg.is_finite() {
            return Err(Error::InvalidChannel(
                "broadcast regions require finite peak and average".into(),
            ));
        }
        let swapped = g2 > g1;
        let (g1, g2) = if swapped { (g2, g1) } else { (g1, g2) };
        Ok(Self {
            g1,
            g2,
            peak,
            avg: avg.min(peak / 2.0),
            swapped,
        })
    }

    pub fn alpha(&self) -> f64 {
        self.avg / self.peak
    }

    /// Whether outputs must be reflected to match the caller's user order.
    pub fn users_swapped(&self) -> bool {
        self.swapped
    }

    fn orient(&self, region: RateRegion2) -> RateRegion2 {
        if self.swapped {
            region.swap_users()
        } else {
            region
        }
    }
}

/// 2-user multiple-access channel with per-user constraints.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct MacChannel {
    pub g1: f64,
    pub g2: f64,
    pub peak1: f64,
    pub peak2: f64,
    pub avg1: f64,
    pub avg2: f64,
}

impl MacChannel {
    pub fn new(
        g1: f64,
        g2: f64,
        peak1: f64,
        peak2: f64,
        avg1: f64,
        avg2: f64,
    ) -> Result<Self> {
        if !(g1 >= 0.0) || !(g2 >= 0.0) {
            return Err(Error::InvalidChannel("MAC gains must be >= 0".into()));
        }
        for (a, e) in [(peak1, avg1), (peak2, avg2)] {
            if !(a > 0.0) || !a.is_finite() || !(e > 0.0) || !e.is_finite() {
                return Err(Error::InvalidChannel(
                    "MAC regions require finite per-user peak and average".into(),
                ));
            }
        }
        Ok(Self {
            g1,
            g2,
            peak1,
            peak2,
            avg1: avg1.min(peak1 / 2.0),
            avg2: avg2.min(peak2 / 2.0),
        })
    }

    /// Symmetric constraints for both users.
    pub fn symmetric(g1: f64, g2: f64, peak: f64, avg: f64) -> Result<Self> {
        Self::new(g1, g2, peak, peak, avg, avg)
    }
}

fn outer_rate(method: OuterMethod, g: f64, peak: f64, avg: f64) -> Result<f64> {
    if peak <= 0.0 || avg <= 0.0 || g == 0.0 {
        return Ok(0.0);
    }
    let ch = SisoChannel::new(g, peak, avg)?;
    Ok(match method {
        OuterMethod::Lmw => upper_duality_lmw(&ch)?.value.nats(),
        OuterMethod::Relax0 => upper_relaxation(&ch)?.value.nats(),
    })
}

/// Degraded-BC outer bound: the union over the split parameter rho of
/// rectangles whose corners come from the single-user upper bound at the
/// scaled constraints (rho A, rho E).
pub fn bc_outer(channel: &BcChannel, method: OuterMethod, rho_points: usize) -> Result<RateRegion2> {
    if rho_points < 2 {
        return Err(Error::InvalidArgument("need at least 2 rho points".into()));
    }
    let (g1, g2, a, e) = (channel.g1, channel.g2, channel.peak, channel.avg);
    let full = outer_rate(method, g2, a, e)?;
    let ratio2 = g1 * g1 / (g2 * g2);
    let corners: Result<Vec<[f64; 2]>> = (0..rho_points)
        .into_par_iter()
        .map(|i| {
            let rho = i as f64 / (rho_points - 1) as f64;
            let scaled = if rho == 0.0 {
                0.0
            } else {
                outer_rate(method, g2, rho * a, rho * e)?
            };
            let r1 = 0.5 * (1.0 + ratio2 * ((2.0 * scaled).exp() - 1.0)).ln();
            let r2 = (full - scaled).max(0.0);
            Ok([r1, r2])
        })
        .collect();
    let region = RateRegion2::from_points(corners?, RegionTag::Outer, BoundaryInterp::Staircase);
    Ok(channel.orient(region))
}

/// phi(A, mu, nu) penalty of the truncated-Gaussian achievable-rate forms.
fn phi_tg(p: &TruncGaussParams) -> f64 {
    p.eta.ln() + 0.5 * ((p.peak - p.mu) * p.pdf(p.peak) + p.mu * p.pdf(0.0))
}

/// Per-user parameter grid for the truncated-Gaussian searches.
fn tg_grid(peak: f64, mu_points: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    if peak <= 0.0 {
        return out;
    }
    for i in 0..mu_points {
        let mu = peak * (0.1 + 0.8 * i as f64 / (mu_points - 1) as f64);
        for div in [8.0, 6.0, 4.0, 3.0] {
            out.push((mu, peak / div));
        }
    }
    out
}

fn bc_pair_rates(
    g1: f64,
    g2: f64,
    a1: f64,
    a2: f64,
    e_total: f64,
    q: &[f64; 4],
) -> Option<[f64; 2]> {
    let (mu1, nu1, mu2, nu2) = (q[0], q[1], q[2], q[3]);
    let p1 = trunc_gauss_params(mu1, nu1, a1).ok()?;
    let p2 = trunc_gauss_params(mu2, nu2, a2).ok()?;
    if p1.mu_tilde + p2.mu_tilde > e_total {
        return None;
    }
    let r1 = 0.5 * (nu1 * nu1 / p1.nu_tilde2 + g1 * g1 * nu1 * nu1).ln() - phi_tg(&p1);
    let r2 = 0.5
        * (nu2 * nu2 / p2.nu_tilde2 + g2 * g2 * nu2 * nu2 / (g2 * g2 * p1.nu_tilde2 + 1.0)).ln()
        - phi_tg(&p2);
    Some([r1.max(0.0), r2.max(0.0)])
}

/// Single-user truncated-Gaussian rate in the superposition form (no
/// interference), maximized over the (mu, nu) grid plus a local polish.
fn tg_single_best(g: f64, peak: f64, e_cap: f64) -> f64 {
    let obj = |p: &[f64]| -> f64 {
        let tg = match trunc_gauss_params(p[0], p[1].abs().max(1e-9 * peak), peak) {
            Ok(t) => t,
            Err(_) => return f64::NEG_INFINITY,
        };
        if tg.mu_tilde > e_cap {
            return f64::NEG_INFINITY;
        }
        0.5 * (p[1] * p[1] / tg.nu_tilde2 + g * g * p[1] * p[1]).ln() - phi_tg(&tg)
    };
    let mut best = (f64::NEG_INFINITY, [0.0, 0.0]);
    for (mu, nu) in tg_grid(peak, 9) {
        let v = obj(&[mu, nu]);
        if v > best.0 {
            best = (v, [mu, nu]);
        }
    }
    if best.0.is_finite() {
        let (_, v) = nelder_mead_max(obj, &best.1, &[0.05 * peak, 0.05 * peak], 250);
        best.0 = best.0.max(v);
    }
    best.0.max(0.0)
}

/// Truncated-Gaussian superposition inner bound for the BC: grid over the
/// peak split rho and the per-user parameters q = (mu1, nu1, mu2, nu2) with
/// the feasibility mu~1 + mu~2 <= E, convex-hulled (time sharing).
pub fn bc_inner_tg(channel: &BcChannel, rho_points: usize, mu_points: usize) -> Result<RateRegion2> {
    if rho_points < 2 || mu_points < 2 {
        return Err(Error::InvalidArgument(
            "need at least 2 rho and 2 mu grid points".into(),
        ));
    }
    let (g1, g2, a, e) = (channel.g1, channel.g2, channel.peak, channel.avg);
    let mut pts: Vec<[f64; 2]> = (1..rho_points - 1)
        .into_par_iter()
        .flat_map_iter(|i| {
            let rho = i as f64 / (rho_points - 1) as f64;
            let (a1, a2) = (rho * a, (1.0 - rho) * a);
            let grid1 = tg_grid(a1, mu_points);
            let grid2 = tg_grid(a2, mu_points);
            let mut local: Vec<[f64; 2]> = Vec::new();
            let mut best_cells: Vec<([f64; 4], f64, f64)> = Vec::new();
            for &(mu1, nu1) in &grid1 {
                for &(mu2, nu2) in &grid2 {
                    let q = [mu1, nu1, mu2, nu2];
                    if let Some(r) = bc_pair_rates(g1, g2, a1, a2, e, &q) {
                        local.push(r);
                        best_cells.push((q, r[0], r[1]));
                    }
                }
            }
            // Local polish of the best cell for a few weightings of the
            // two rates (the hull only needs good extreme points).
            for w in [0.25, 1.0, 4.0] {
                if let Some((q0, _, _)) = best_cells
                    .iter()
                    .max_by(|x, y| {
                        (x.1 + w * x.2)
                            .partial_cmp(&(y.1 + w * y.2))
                            .unwrap()
                    })
                    .copied()
                {
                    let obj = |p: &[f64]| -> f64 {
                        let q = [p[0], p[1].abs(), p[2], p[3].abs()];
                        match bc_pair_rates(g1, g2, a1, a2, e, &q) {
                            Some(r) => r[0] + w * r[1],
                            None => f64::NEG_INFINITY,
                        }
                    };
                    let step = [0.04 * a1.max(1e-6), 0.04 * a1.max(1e-6), 0.04 * a2.max(1e-6), 0.04 * a2.max(1e-6)];
                    let (p, v) = nelder_mead_max(obj, &q0, &step, 300);
                    if v.is_finite() {
                        let q = [p[0], p[1].abs(), p[2], p[3].abs()];
                        if let Some(r) = bc_pair_rates(g1, g2, a1, a2, e, &q) {
                            local.push(r);
                        }
                    }
                }
            }
            local
        })
        .collect();
    // Degenerate splits evaluated as single-user limits.
    pts.push([tg_single_best(g1, a, e), 0.0]);
    pts.push([0.0, tg_single_best(g2, a, e)]);
    let region = convex_hull_region(pts, RegionTag::Inner);
    Ok(channel.orient(region))
}

/// High-SNR BC asymptotic region with its gap constant log(3 sqrt(c)/alpha).
pub fn bc_high_snr_region(channel: &BcChannel) -> Result<RateRegion2> {
    let (g1, g2, a) = (channel.g1, channel.g2, channel.peak);
    let alpha = channel.alpha();
    let c = (1.0 / (2.0 * std::f64::consts::PI * std::f64::consts::E))
        .min(std::f64::consts::E * alpha * alpha / (2.0 * std::f64::consts::PI));
    let n = 1001;
    let mut corners = Vec::with_capacity(n);
    for i in 0..n {
        let rho = i as f64 / (n - 1) as f64;
        let r1 = 0.5 * (1.0 + c * rho * rho * g1 * g1 * a * a).ln();
        let sinr = c * (1.0 - rho) * (1.0 - rho) * g2 * g2 * a * a
            / (c * rho * rho * g2 * g2 * a * a + 1.0);
        let r2 = 0.5 * (1.0 + sinr).ln();
        corners.push([r1, r2]);
    }
    let gap = (3.0 * c.sqrt() / alpha).ln();
    let region = RateRegion2::from_points(corners, RegionTag::Asymptotic, BoundaryInterp::Staircase)
        .with_gap(gap);
    Ok(channel.orient(region))
}

/// Low-SNR BC asymptotic capacity region: the simplex
/// r1/g1^2 + r2/g2^2 <= alpha(1 - alpha) A^2 / 2.
pub fn bc_low_snr_region(channel: &BcChannel) -> Result<RateRegion2> {
    let (g1, g2, a) = (channel.g1, channel.g2, channel.peak);
    let alpha = channel.alpha();
    let budget = alpha * (1.0 - alpha) * a * a / 2.0;
    let region = RateRegion2::from_points(
        vec![[0.0, g2 * g2 * budget], [g1 * g1 * budget, 0.0]],
        RegionTag::Asymptotic,
        BoundaryInterp::Polyline,
    );
    Ok(channel.orient(region))
}

fn pentagon_vertices(r1m: f64, r2m: f64, rsum: f64) -> Vec<[f64; 2]> {
    let r1m = r1m.max(0.0);
    let r2m = r2m.max(0.0);
    let rsum = rsum.max(0.0);
    if rsum >= r1m + r2m {
        // Sum cut inactive: a box.
        vec![[0.0, r2m], [r1m, r2m], [r1m, 0.0]]
    } else {
        let r1c = (rsum - r2m).max(0.0);
        let r2c = (rsum - r1m).max(0.0);
        vec![
            [0.0, r2m.min(rsum)],
            [r1c, r2m.min(rsum)],
            [r1m.min(rsum), r2c],
            [r1m.min(rsum), 0.0],
        ]
    }
}

/// MAC outer bound: per-user single-user bounds plus a sum-rate cut from
/// treating g1 X1 + g2 X2 as one unit-gain transmit signal.
pub fn mac_outer(channel: &MacChannel, method: OuterMethod) -> Result<RateRegion2> {
    let r1 = outer_rate(method, channel.g1, channel.peak1, channel.avg1)?;
    let r2 = outer_rate(method, channel.g2, channel.peak2, channel.avg2)?;
    let a_sum = channel.g1 * channel.peak1 + channel.g2 * channel.peak2;
    let e_sum = channel.g1 * channel.avg1 + channel.g2 * channel.avg2;
    let rsum = outer_rate(method, 1.0, a_sum, e_sum)?;
    Ok(RateRegion2::from_points(
        pentagon_vertices(r1, r2, rsum),
        RegionTag::Outer,
        BoundaryInterp::Polyline,
    ))
}

fn mac_pentagon(
    channel: &MacChannel,
    q: &[f64; 4],
) -> Option<(f64, f64, f64)> {
    let (g1, g2) = (channel.g1, channel.g2);
    let p1 = trunc_gauss_params(q[0], q[1], channel.peak1).ok()?;
    let p2 = trunc_gauss_params(q[2], q[3], channel.peak2).ok()?;
    if p1.mu_tilde > channel.avg1 || p2.mu_tilde > channel.avg2 {
        return None;
    }
    let (n1, n2) = (q[1] * q[1], q[3] * q[3]);
    let (t1, t2) = (p1.nu_tilde2, p2.nu_tilde2);
    let (f1, f2) = (phi_tg(&p1), phi_tg(&p2));
    let r1 = (0.5 * (n1 / t1 + g1 * g1 * n1).ln() - f1).max(0.0);
    let r2 = (0.5 * (n2 / t2 + g2 * g2 * n2).ln() - f2).max(0.0);
    let rsum = (0.5 * (n1 * n2 / (t1 * t2) + g1 * g1 * n1 * n2 / t2 + g2 * g2 * n2 * n1 / t1).ln()
        - f1
        - f2)
        .max(0.0);
    Some((r1, r2, rsum))
}

/// Truncated-Gaussian MAC inner bound: pentagons over the per-user parameter
/// grid (plus single-user edges with one user silenced), convex-hulled.
/// The per-user and sum-rate forms carry the user gains in the signal terms;
/// the printed theorem omits them, which would violate the outer bounds for
/// weak-gain users.
pub fn mac_inner_tg(channel: &MacChannel, mu_points: usize) -> Result<RateRegion2> {
    if mu_points < 2 {
        return Err(Error::InvalidArgument("need at least 2 mu grid points".into()));
    }
    let grid1 = tg_grid(channel.peak1, mu_points);
    let grid2 = tg_grid(channel.peak2, mu_points);
    let mut pts: Vec<[f64; 2]> = Vec::new();
    for &(mu1, nu1) in &grid1 {
        for &(mu2, nu2) in &grid2 {
            if let Some((r1, r2, rsum)) = mac_pentagon(channel, &[mu1, nu1, mu2, nu2]) {
                pts.extend(pentagon_vertices(r1, r2, rsum));
            }
        }
    }
    // One user silenced reduces to the single-user bound on the other.
    pts.push([
        tg_single_best(channel.g1, channel.peak1, channel.avg1),
        0.0,
    ]);
    pts.push([
        0.0,
        tg_single_best(channel.g2, channel.peak2, channel.avg2),
    ]);
    Ok(convex_hull_region(pts, RegionTag::Inner))
}

/// High-SNR MAC pentagon with the gap constant 0.5 log(9e / 2 pi).
pub fn mac_high_snr_region(channel: &MacChannel) -> Result<RateRegion2> {
    let two_pi = 2.0 * std::f64::consts::PI;
    let e_const = std::f64::consts::E;
    let c_of = |alpha: f64| (1.0 / (two_pi * e_const)).min(e_const * alpha * alpha / two_pi);
    let (a1, a2) = (channel.peak1, channel.peak2);
    let (al1, al2) = (channel.avg1 / a1, channel.avg2 / a2);
    let r1 = 0.5 * (1.0 + c_of(al1) * channel.g1 * channel.g1 * a1 * a1).ln();
    let r2 = 0.5 * (1.0 + c_of(al2) * channel.g2 * channel.g2 * a2 * a2).ln();
    let agg = channel.g1 * a1 + channel.g2 * a2;
    let alpha12 = (channel.g1 * channel.avg1 + channel.g2 * channel.avg2) / agg;
    let rsum = 0.5 * (1.0 + c_of(alpha12) * agg * agg).ln();
    let gap = 0.5 * (9.0 * e_const / two_pi).ln();
    Ok(RateRegion2::from_points(
        pentagon_vertices(r1, r2, rsum),
        RegionTag::Asymptotic,
        BoundaryInterp::Polyline,
    )
    .with_gap(gap))
}

/// Low-SNR MAC asymptotic region: the box r_i <= alpha_i(1-alpha_i) g_i^2 A_i^2 / 2
/// achieved by on-off keying with successive cancellation.
pub fn mac_low_snr_region(channel: &MacChannel) -> Result<RateRegion2> {
    let (al1, al2) = (channel.avg1 / channel.peak1, channel.avg2 / channel.peak2);
    let r1 = al1 * (1.0 - al1) * channel.g1 * channel.g1 * channel.peak1 * channel.peak1 / 2.0;
    let r2 = al2 * (1.0 - al2) * channel.g2 * channel.g2 * channel.peak2 * channel.peak2 / 2.0;
    Ok(RateRegion2::from_points(
        vec![[0.0, r2], [r1, r2], [r1, 0.0]],
        RegionTag::Asymptotic,
        BoundaryInterp::Polyline,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn fig13b_channel() -> BcChannel {
        let a = 10f64.powf(-0.2);
        BcChannel::new(1.0, 0.5, a, a / 3.0).unwrap()
    }

    #[test]
    fn bc_outer_relax0_fig13b_intercepts() {
        let region = bc_outer(&fig13b_channel(), OuterMethod::Relax0, 101).unwrap();
        assert_abs_diff_eq!(region.r1_intercept(), 0.042386, epsilon = 1e-4);
        assert_abs_diff_eq!(region.r2_intercept(), 0.010938, epsilon = 1e-4);
    }

    #[test]
    fn bc_outer_endpoints() {
        let ch = BcChannel::new(1.0, 0.5, 2.0, 0.5).unwrap();
        let region = bc_outer(&ch, OuterMethod::Relax0, 51).unwrap();
        // rho = 0 corner: r1 = 0, r2 = full single-user bound of user 2.
        let full = upper_relaxation(&SisoChannel::new(0.5, 2.0, 0.5).unwrap())
            .unwrap()
            .value
            .nats();
        assert_abs_diff_eq!(region.r2_intercept(), full, epsilon = 1e-12);
        // rho = 1 corner: r2 = 0 with positive r1.
        assert!(region.r1_intercept() > 0.0);
    }

    #[test]
    fn bc_outer_monotone_in_rho() {
        let ch = fig13b_channel();
        let (g1, g2, a, e) = (1.0, 0.5, ch.peak, ch.avg);
        let mut prev = (-1.0, f64::INFINITY);
        for i in 0..21 {
            let rho = i as f64 / 20.0;
            let scaled = if rho == 0.0 {
                0.0
            } else {
                outer_rate(OuterMethod::Relax0, g2, rho * a, rho * e).unwrap()
            };
            let full = outer_rate(OuterMethod::Relax0, g2, a, e).unwrap();
            let r1 = 0.5 * (1.0 + (g1 * g1 / (g2 * g2)) * ((2.0 * scaled).exp() - 1.0)).ln();
            let r2 = full - scaled;
            assert!(r1 >= prev.0 - 1e-12);
            assert!(r2 <= prev.1 + 1e-12);
            prev = (r1, r2);
        }
    }

    #[test]
    fn bc_inner_sits_inside_outers() {
        let ch = BcChannel::new(1.0, 0.5, 6.0, 2.0).unwrap();
        let inner = bc_inner_tg(&ch, 21, 7).unwrap();
        let outer_relax = bc_outer(&ch, OuterMethod::Relax0, 101).unwrap();
        let outer_lmw = bc_outer(&ch, OuterMethod::Lmw, 101).unwrap();
        assert!(inner.is_inside(&outer_relax, 1e-6));
        assert!(inner.is_inside(&outer_lmw, 1e-6));
        assert_eq!(inner.tag, RegionTag::Inner);
    }

    #[test]
    fn bc_inner_symmetric_corner_tracks_single_user_rate() {
        // Equal gains with a symmetric split: the r1 corner of the inner
        // region matches the single-user truncated-Gaussian rate (in the
        // superposition form) on the full channel.
        let ch = BcChannel::new(1.0, 1.0, 8.0, 3.0).unwrap();
        let inner = bc_inner_tg(&ch, 15, 7).unwrap();
        let single = tg_single_best(1.0, 8.0, 3.0);
        assert_abs_diff_eq!(inner.r1_intercept(), single, epsilon = 1e-9);
        assert!(single > 0.0);
    }

    #[test]
    fn bc_high_snr_constants_alpha_third() {
        let ch = BcChannel::new(1.0, 0.5, 1000.0, 1000.0 / 3.0).unwrap();
        let region = bc_high_snr_region(&ch).unwrap();
        let c = std::f64::consts::E / (18.0 * std::f64::consts::PI);
        assert_abs_diff_eq!(c, 0.048066, epsilon = 1e-5);
        let delta = (3.0 * c.sqrt() / (1.0 / 3.0)).ln();
        assert_abs_diff_eq!(region.gap.unwrap(), delta, epsilon = 1e-12);
        assert!(delta <= 0.68);
        // rho = 1 corner: the r2 SINR bound saturates below log(2)/2.
        let sinr_cap = 0.5 * 2.0f64.ln();
        let r2_at_max_r1 = region.max_r2_at(region.r1_intercept() - 1e-9);
        assert!(r2_at_max_r1 <= sinr_cap + 1e-12);
    }

    #[test]
    fn bc_inner_within_gap_of_high_snr_region() {
        // 10 log10(A) = 30, alpha = 1/3: per-dimension gap below 0.68 nats.
        let a = 1000.0;
        let ch = BcChannel::new(1.0, 0.5, a, a / 3.0).unwrap();
        let inner = bc_inner_tg(&ch, 21, 7).unwrap();
        let asym = bc_high_snr_region(&ch).unwrap();
        let delta = asym.gap.unwrap();
        assert!(delta <= 0.68);
        // Compare the r1 intercepts (per-dimension distance at the axis).
        let gap1 = asym.r1_intercept() - inner.r1_intercept();
        assert!(gap1.abs() <= delta + 0.1, "axis-1 gap {gap1}, delta {delta}");
        let gap2 = asym.r2_intercept() - inner.r2_intercept();
        assert!(gap2.abs() <= delta + 0.1, "axis-2 gap {gap2}, delta {delta}");
    }

    #[test]
    fn bc_low_snr_simplex_values() {
        let region = bc_low_snr_region(&fig13b_channel()).unwrap();
        assert_abs_diff_eq!(region.r1_intercept(), 0.044234, epsilon = 1e-5);
        assert_abs_diff_eq!(region.r2_intercept(), 0.011059, epsilon = 1e-5);
        // Within 5% of the finite-A outer intercepts.
        let outer = bc_outer(&fig13b_channel(), OuterMethod::Relax0, 101).unwrap();
        assert!((region.r1_intercept() / outer.r1_intercept() - 1.0).abs() < 0.05);
        assert!((region.r2_intercept() / outer.r2_intercept() - 1.0).abs() < 0.05);
        // The TDMA chord between the intercepts is dominated by the simplex.
        let mid_r1 = region.r1_intercept() / 2.0;
        assert!(region.max_r2_at(mid_r1) >= region.r2_intercept() / 2.0 - 1e-12);
    }

    #[test]
    fn bc_user_relabeling_round_trips() {
        let a = 10f64.powf(-0.2);
        let swapped = BcChannel::new(0.5, 1.0, a, a / 3.0).unwrap();
        assert!(swapped.users_swapped());
        let region = bc_outer(&swapped, OuterMethod::Relax0, 101).unwrap();
        // Caller's user 1 is the weak user now: intercepts swap.
        assert_abs_diff_eq!(region.r1_intercept(), 0.010938, epsilon = 1e-4);
        assert_abs_diff_eq!(region.r2_intercept(), 0.042386, epsilon = 1e-4);
        assert!(region.users_swapped);
    }

    fn fig14b_channel() -> MacChannel {
        let a = 10f64.powf(-0.2);
        MacChannel::symmetric(1.0, 0.5, a, a / 3.0).unwrap()
    }

    #[test]
    fn mac_outer_relax0_fig14b_box() {
        let region = mac_outer(&fig14b_channel(), OuterMethod::Relax0).unwrap();
        assert_abs_diff_eq!(region.r1_intercept(), 0.0423857, epsilon = 1e-4);
        assert_abs_diff_eq!(region.r2_intercept(), 0.0109380, epsilon = 1e-4);
        // Sum cut is inactive here: the region is the box.
        assert_abs_diff_eq!(
            region.max_r2_at(region.r1_intercept() - 1e-12),
            region.r2_intercept(),
            epsilon = 1e-9
        );
    }

    #[test]
    fn mac_outer_degenerates_with_silent_user() {
        let ch = MacChannel::symmetric(1.0, 0.0, 2.0, 0.6).unwrap();
        let region = mac_outer(&ch, OuterMethod::Relax0).unwrap();
        assert_eq!(region.r2_intercept(), 0.0);
        assert!(region.r1_intercept() > 0.0);
    }

    #[test]
    fn mac_outer_symmetric_pentagon() {
        let ch = MacChannel::symmetric(0.8, 0.8, 4.0, 1.2).unwrap();
        let region = mac_outer(&ch, OuterMethod::Lmw).unwrap();
        assert_abs_diff_eq!(
            region.r1_intercept(),
            region.r2_intercept(),
            epsilon = 1e-9
        );
        // Proper pentagon: the sum cut binds strictly inside.
        let r1m = region.r1_intercept();
        assert!(region.max_r2_at(r1m - 1e-9) < region.r2_intercept() - 1e-6);
    }

    #[test]
    fn mac_inner_sits_inside_outers() {
        let ch = MacChannel::symmetric(1.0, 0.5, 6.0, 2.0).unwrap();
        let inner = mac_inner_tg(&ch, 7).unwrap();
        for method in [OuterMethod::Relax0, OuterMethod::Lmw] {
            let outer = mac_outer(&ch, method).unwrap();
            assert!(inner.is_inside(&outer, 1e-6));
        }
    }

    #[test]
    fn mac_inner_silenced_user_reduces_to_single_user() {
        let ch = MacChannel::symmetric(1.0, 0.5, 6.0, 2.0).unwrap();
        let inner = mac_inner_tg(&ch, 7).unwrap();
        let single = tg_single_best(1.0, 6.0, 2.0);
        assert!(inner.r1_intercept() >= single - 1e-9);
    }

    #[test]
    fn mac_inner_symmetric_users_symmetric_hull() {
        let ch = MacChannel::symmetric(0.7, 0.7, 5.0, 1.5).unwrap();
        let inner = mac_inner_tg(&ch, 7).unwrap();
        assert_abs_diff_eq!(
            inner.r1_intercept(),
            inner.r2_intercept(),
            epsilon = 1e-9
        );
    }

    #[test]
    fn mac_high_snr_constants() {
        // Branch switch of c_i at alpha = 1/e.
        let two_pi = 2.0 * std::f64::consts::PI;
        let e_c = std::f64::consts::E;
        let switch = 1.0 / e_c;
        let lhs = e_c * switch * switch / two_pi;
        let rhs = 1.0 / (two_pi * e_c);
        assert_abs_diff_eq!(lhs, rhs, epsilon = 1e-15);
        let ch = MacChannel::symmetric(1.0, 0.5, 1000.0, 1000.0 / 3.0).unwrap();
        let region = mac_high_snr_region(&ch).unwrap();
        assert_abs_diff_eq!(region.gap.unwrap(), 0.5 * (9.0 * e_c / two_pi).ln(), epsilon = 1e-15);
        // Corner ordering: sum cut below the sum of individual cuts.
        let r1 = region.r1_intercept();
        let r2 = region.r2_intercept();
        let sum_at_corner = r1 + region.max_r2_at(r1 - 1e-9);
        assert!(sum_at_corner <= r1 + r2 + 1e-12);
    }

    #[test]
    fn mac_high_snr_symmetric_alpha12() {
        let ch = MacChannel::symmetric(1.0, 1.0, 100.0, 25.0).unwrap();
        // Symmetric users: alpha12 equals the common alpha, so the per-user
        // and aggregate c constants share the same branch.
        let agg = 2.0 * 100.0;
        let alpha12 = 2.0 * 25.0 / agg;
        assert_abs_diff_eq!(alpha12, 0.25, epsilon = 1e-15);
        assert!(mac_high_snr_region(&ch).is_ok());
    }

    #[test]
    fn mac_low_snr_box_values() {
        let region = mac_low_snr_region(&fig14b_channel()).unwrap();
        assert_abs_diff_eq!(region.r1_intercept(), 0.044234, epsilon = 1e-5);
        assert_abs_diff_eq!(region.r2_intercept(), 0.011059, epsilon = 1e-5);
        // Within 5% of the Fig. 14b inner corner (0.04236, 0.010938).
        assert!((region.r1_intercept() / 0.04236 - 1.0).abs() < 0.05);
        assert!((region.r2_intercept() / 0.010938 - 1.0).abs() < 0.05);
        // alpha -> 0 degenerates to a point.
        let tiny = MacChannel::new(1.0, 1.0, 1.0, 1.0, 1e-12, 1e-12).unwrap();
        let r = mac_low_snr_region(&tiny).unwrap();
        assert!(r.r1_intercept() < 1e-11);
    }

    #[test]
    fn mac_outer_inside_low_snr_box() {
        // 0.5 log(1 + x) <= x/2: the relaxation outer bound is dominated by
        // the asymptotic box at any SNR.
        let ch = fig14b_channel();
        let outer = mac_outer(&ch, OuterMethod::Relax0).unwrap();
        let boxr = mac_low_snr_region(&ch).unwrap();
        assert!(outer.is_inside(&boxr, 1e-12));
    }

    #[test]
    fn low_snr_intercept_ratio_approaches_one() {
        // At gA = 0.05 the outer and asymptotic intercepts agree within 5%.
        let a = 0.05;
        let bc = BcChannel::new(1.0, 0.5, a, a / 3.0).unwrap();
        let outer = bc_outer(&bc, OuterMethod::Relax0, 51).unwrap();
        let asym = bc_low_snr_region(&bc).unwrap();
        let ratio = outer.r1_intercept() / asym.r1_intercept();
        assert!(ratio > 0.95 && ratio <= 1.0 + 1e-12, "ratio {ratio}");

        let mac = MacChannel::symmetric(1.0, 0.5, a, a / 3.0).unwrap();
        let outer = mac_outer(&mac, OuterMethod::Relax0).unwrap();
        let asym = mac_low_snr_region(&mac).unwrap();
        let ratio = outer.r1_intercept() / asym.r1_intercept();
        assert!(ratio > 0.95 && ratio <= 1.0 + 1e-12, "ratio {ratio}");
    }

    #[test]
    fn regions_shrink_when_gain_drops() {
        let a = 2.0;
        let strong = BcChannel::new(1.0, 0.5, a, 0.5).unwrap();
        let weak = BcChannel::new(0.8, 0.4, a, 0.5).unwrap();
        let rs = bc_outer(&strong, OuterMethod::Relax0, 51).unwrap();
        let rw = bc_outer(&weak, OuterMethod::Relax0, 51).unwrap();
        assert!(rw.is_inside(&rs, 1e-9));
    }
}
