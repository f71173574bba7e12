//! Scalar root finding and derivative-free optimization used across the crate.

use crate::error::{Error, Result};

const INV_PHI: f64 = 0.618_033_988_749_894_9; // (sqrt(5) - 1) / 2

/// Bisection for f(x) = 0 on [lo, hi]; requires a sign change.
pub fn bisect<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, tol: f64) -> Result<f64> {
    let mut flo = f(lo);
    let fhi = f(hi);
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if flo * fhi > 0.0 {
        return Err(Error::RootNotBracketed { lo, hi });
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid);
        if fm == 0.0 || (hi - lo).abs() <= tol * (1.0 + mid.abs()) {
            return Ok(mid);
        }
        if fm * flo > 0.0 {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Root of a strictly decreasing function, with the upper bracket found by doubling.
pub fn bisect_decreasing<F: Fn(f64) -> f64>(f: F, target: f64, lo: f64, hi0: f64) -> Result<f64> {
    let mut hi = hi0;
    let mut tries = 0;
    while f(hi) > target {
        hi *= 2.0;
        tries += 1;
        if tries > 80 {
            return Err(Error::RootNotBracketed { lo, hi });
        }
    }
    bisect(|x| f(x) - target, lo, hi, 1e-14)
}

/// Golden-section maximization of a unimodal function on [a, b].
/// Returns (argmax, max). Endpoints are also compared against the interior.
pub fn golden_max<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> (f64, f64) {
    let (mut lo, mut hi) = (a.min(b), a.max(b));
    let (fa, fb) = (f(lo), f(hi));
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while hi - lo > tol {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = f(x1);
        }
    }
    let xm = 0.5 * (lo + hi);
    let fm = f(xm);
    let mut best = (xm, fm);
    if fa > best.1 {
        best = (a.min(b), fa);
    }
    if fb > best.1 {
        best = (a.max(b), fb);
    }
    best
}

/// Golden-section minimization on [a, b].
pub fn golden_min<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> (f64, f64) {
    let (x, negv) = golden_max(|t| -f(t), a, b, tol);
    (x, -negv)
}

/// Maximization over [a, b] by a bracketing grid followed by golden-section
/// refinement inside the best bracket.
pub fn grid_then_golden_max<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    n_grid: usize,
    tol: f64,
) -> (f64, f64) {
    assert!(n_grid >= 3);
    let step = (b - a) / (n_grid - 1) as f64;
    let mut best_i = 0usize;
    let mut best_v = f64::NEG_INFINITY;
    for i in 0..n_grid {
        let v = f(a + step * i as f64);
        if v > best_v {
            best_v = v;
            best_i = i;
        }
    }
    let lo = a + step * best_i.saturating_sub(1) as f64;
    let hi = (a + step * (best_i + 1) as f64).min(b);
    golden_max(f, lo, hi, tol)
}

/// Minimization counterpart of [`grid_then_golden_max`].
pub fn grid_then_golden_min<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    n_grid: usize,
    tol: f64,
) -> (f64, f64) {
    let (x, negv) = grid_then_golden_max(|t| -f(t), a, b, n_grid, tol);
    (x, -negv)
}

/// Nelder-Mead simplex maximization. `x0` is the starting point and `step`
/// the initial simplex edge per coordinate. Infeasible points are handled by
/// the objective returning `f64::NEG_INFINITY`.
pub fn nelder_mead_max<F: Fn(&[f64]) -> f64>(
    f: F,
    x0: &[f64],
    step: &[f64],
    max_iter: usize,
) -> (Vec<f64>, f64) {
    let n = x0.len();
    let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    simplex.push(x0.to_vec());
    for i in 0..n {
        let mut p = x0.to_vec();
        p[i] += step[i];
        simplex.push(p);
    }
    let mut values: Vec<f64> = simplex.iter().map(|p| f(p)).collect();

    let (alpha, gamma, rho, sigma) = (1.0, 2.0, 0.5, 0.5);
    for _ in 0..max_iter {
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&i, &j| values[j].partial_cmp(&values[i]).unwrap());
        let best = order[0];
        let worst = order[n];
        let second_worst = order[n - 1];

        if values[best].is_finite()
            && values[worst].is_finite()
            && (values[best] - values[worst]).abs() < 1e-12 * (1.0 + values[best].abs())
        {
            break;
        }

        let mut centroid = vec![0.0; n];
        for (idx, p) in simplex.iter().enumerate() {
            if idx != worst {
                for k in 0..n {
                    centroid[k] += p[k] / n as f64;
                }
            }
        }

        let reflect: Vec<f64> = (0..n)
            .map(|k| centroid[k] + alpha * (centroid[k] - simplex[worst][k]))
            .collect();
        let fr = f(&reflect);

        if fr > values[best] {
            let expand: Vec<f64> = (0..n)
                .map(|k| centroid[k] + gamma * (reflect[k] - centroid[k]))
                .collect();
            let fe = f(&expand);
            if fe > fr {
                simplex[worst] = expand;
                values[worst] = fe;
            } else {
                simplex[worst] = reflect;
                values[worst] = fr;
            }
        } else if fr > values[second_worst] {
            simplex[worst] = reflect;
            values[worst] = fr;
        } else {
            let contract: Vec<f64> = (0..n)
                .map(|k| centroid[k] + rho * (simplex[worst][k] - centroid[k]))
                .collect();
            let fc = f(&contract);
            if fc > values[worst] {
                simplex[worst] = contract;
                values[worst] = fc;
            } else {
                let best_point = simplex[best].clone();
                for idx in 0..=n {
                    if idx == best {
                        continue;
                    }
                    for k in 0..n {
                        simplex[idx][k] =
                            best_point[k] + sigma * (simplex[idx][k] - best_point[k]);
                    }
                    values[idx] = f(&simplex[idx]);
                }
            }
        }
    }

    let mut best_idx = 0;
    for i in 1..=n {
        if values[i] > values[best_idx] {
            best_idx = i;
        }
    }
    (simplex[best_idx].clone(), values[best_idx])
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn bisect_finds_sqrt2() {
        let r = bisect(|x| x * x - 2.0, 0.0, 2.0, 1e-13).unwrap();
        assert_abs_diff_eq!(r, std::f64::consts::SQRT_2, epsilon = 1e-10);
    }

    #[test]
    fn bisect_rejects_unbracketed() {
        assert!(bisect(|x| x * x + 1.0, -1.0, 1.0, 1e-12).is_err());
    }

    #[test]
    fn golden_max_quadratic() {
        let (x, v) = golden_max(|t| -(t - 0.3) * (t - 0.3), 0.0, 1.0, 1e-10);
        assert_abs_diff_eq!(x, 0.3, epsilon = 1e-8);
        assert_abs_diff_eq!(v, 0.0, epsilon = 1e-14);
    }

    #[test]
    fn golden_max_picks_boundary() {
        // Monotone increasing: max sits at the right endpoint.
        let (x, _) = golden_max(|t| t, 0.0, 1.0, 1e-10);
        assert_abs_diff_eq!(x, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn nelder_mead_rosenbrock_like() {
        let f = |p: &[f64]| {
            let (x, y) = (p[0], p[1]);
            -((1.0 - x).powi(2) + 10.0 * (y - x * x).powi(2))
        };
        let (p, v) = nelder_mead_max(f, &[0.0, 0.0], &[0.5, 0.5], 800);
        assert!(v > -1e-8, "v = {v}, p = {p:?}");
    }

    #[test]
    fn decreasing_root_with_doubling() {
        // f(x) = 1/x, solve f(x) = 0.25 -> x = 4, bracket starts at hi = 1.
        let r = bisect_decreasing(|x| 1.0 / x, 0.25, 1e-9, 1.0).unwrap();
        assert_abs_diff_eq!(r, 4.0, epsilon = 1e-9);
    }
}
