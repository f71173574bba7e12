//! `imdd mimo`: multi-aperture reports from a gain-matrix file.
//!
//! The matrix file is either a JSON 2-D array or whitespace-separated text,
//! row-major, one row per line.

use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use nalgebra::DMatrix;
use serde_json::json;

use imdd_capacity::multi_aperture::{
    allocate_inverted_waterfill, allocate_parallel_avg, mimo_high_snr, mimo_low_snr_eta,
    mimo_qr_rate, miso_high_snr, miso_low_snr_gamma, miso_reduce, parallel_bounds,
    parallel_low_snr_asymptote, simo_reduce, MimoChannel, MisoReduction, ParallelMethod,
};

use crate::output::{emit_json, parse_constraint, usage_error};

// Re-exported to main for the nalgebra dependency note: the CLI only builds
// matrices; the numerics live in the library.

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MimoOp {
    /// Diagonal/parallel bounds at the best intensity allocation.
    Parallel,
    /// QR successive-decoding achievable rate (nr >= nt, average-only).
    Qr,
    /// SIMO reduction (column vector): equivalent gain and bounds.
    Simo,
    /// MISO reduction (row vector) with regime dispatch.
    Miso,
    /// Low-SNR asymptotics: inverted water-filling / gamma / eta.
    LowSnr,
    /// High-SNR asymptotics (log-det or reduction forms).
    HighSnr,
}

#[derive(Args)]
pub struct MimoArgs {
    /// Gain-matrix file (JSON 2-D array or whitespace text, row-major).
    #[arg(long)]
    pub matrix: PathBuf,
    #[arg(long, value_enum)]
    pub op: MimoOp,
    /// Per-input peak constraint A, or "inf".
    #[arg(long, default_value = "inf")]
    pub peak: String,
    /// Total average constraint E, or "inf".
    #[arg(long)]
    pub avg: String,
    /// Lower-bound family for parallel/QR rates.
    #[arg(long, value_enum, default_value = "lmw")]
    pub method: MethodArg,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Lmw,
    Cma,
    Fh,
}

impl From<MethodArg> for ParallelMethod {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Lmw => ParallelMethod::Lmw,
            MethodArg::Cma => ParallelMethod::Cma,
            MethodArg::Fh => ParallelMethod::Fh,
        }
    }
}

pub fn read_matrix(path: &Path) -> anyhow::Result<DMatrix<f64>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| usage_error(format!("cannot read {}: {e}", path.display())))?;
    let trimmed = text.trim_start();
    let rows: Vec<Vec<f64>> = if trimmed.starts_with('[') {
        serde_json::from_str(&text)
            .map_err(|e| usage_error(format!("malformed JSON matrix: {e}")))?
    } else {
        text.lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(|l| {
                l.split_whitespace()
                    .map(|t| {
                        t.parse::<f64>()
                            .map_err(|_| usage_error(format!("malformed matrix entry '{t}'")))
                    })
                    .collect()
            })
            .collect::<anyhow::Result<_>>()?
    };
    if rows.is_empty() || rows[0].is_empty() {
        return Err(usage_error("matrix must be non-empty"));
    }
    let ncols = rows[0].len();
    if rows.iter().any(|r| r.len() != ncols) {
        return Err(usage_error("matrix rows must have equal length"));
    }
    let nrows = rows.len();
    Ok(DMatrix::from_row_iterator(
        nrows,
        ncols,
        rows.iter().flatten().copied(),
    ))
}

fn diagonal_of(g: &DMatrix<f64>) -> Option<Vec<f64>> {
    if g.nrows() != g.ncols() {
        return None;
    }
    for i in 0..g.nrows() {
        for j in 0..g.ncols() {
            if i != j && g[(i, j)] != 0.0 {
                return None;
            }
        }
    }
    Some((0..g.nrows()).map(|i| g[(i, i)]).collect())
}

pub fn run(args: MimoArgs) -> anyhow::Result<()> {
    let g = read_matrix(&args.matrix)?;
    let peak = parse_constraint(&args.peak)?;
    let avg = parse_constraint(&args.avg)?;
    let method: ParallelMethod = args.method.into();
    let channel = MimoChannel::new(g.clone(), peak, avg)
        .map_err(|e| usage_error(format!("invalid MIMO channel: {e}")))?;

    let report = match args.op {
        MimoOp::Parallel => {
            let diag = diagonal_of(&g).ok_or_else(|| {
                usage_error("--op parallel requires a square diagonal gain matrix")
            })?;
            if !avg.is_finite() {
                return Err(usage_error("--op parallel requires a finite --avg"));
            }
            let (lo, hi) = parallel_bounds(&diag, peak, avg, method)?;
            let alloc = allocate_parallel_avg(&diag, avg.min(diag.len() as f64 * peak / 2.0))?;
            json!({
                "op": "parallel",
                "gains": diag,
                "method": method.tag(),
                "lower_nats": lo.nats(),
                "upper_nats": hi.nats(),
                "allocation": alloc.per_input,
                "active_channels": alloc.active(),
            })
        }
        MimoOp::Qr => {
            if !avg.is_finite() {
                return Err(usage_error("--op qr requires a finite --avg"));
            }
            let rate = mimo_qr_rate(&g, avg, method)?;
            json!({
                "op": "qr",
                "method": method.tag(),
                "rate_nats": rate.nats(),
            })
        }
        MimoOp::Simo => {
            if g.ncols() != 1 {
                return Err(usage_error("--op simo expects a column vector (nt = 1)"));
            }
            let col: Vec<f64> = g.column(0).iter().copied().collect();
            let gain = simo_reduce(&col);
            let reduced = imdd_capacity::SisoChannel::new(gain, peak, avg)
                .map_err(|e| usage_error(format!("reduced channel invalid: {e}")))?;
            let canonical = reduced.canonicalize();
            let lowers = imdd_capacity::bounds::all_lower_bounds(&canonical, 24)?;
            let uppers = imdd_capacity::bounds::all_upper_bounds(&canonical)?;
            json!({
                "op": "simo",
                "equivalent_gain": gain,
                "lower_bounds": lowers.iter().map(|b| json!({"method": b.method.tag(), "nats": b.value.nats()})).collect::<Vec<_>>(),
                "upper_bounds": uppers.iter().map(|b| json!({"method": b.method.tag(), "nats": b.value.nats()})).collect::<Vec<_>>(),
            })
        }
        MimoOp::Miso => {
            if g.nrows() != 1 {
                return Err(usage_error("--op miso expects a row vector (nr = 1)"));
            }
            let row: Vec<f64> = g.row(0).iter().copied().collect();
            match miso_reduce(&row, peak, avg)? {
                MisoReduction::BestAperture(ch) => json!({
                    "op": "miso", "regime": "best_aperture",
                    "gain": ch.gain(), "avg": ch.avg(),
                }),
                MisoReduction::Repetition(ch) => json!({
                    "op": "miso", "regime": "repetition",
                    "gain": ch.gain(), "peak": ch.peak(), "avg": ch.avg(),
                }),
                MisoReduction::NeedsAsymptotics { alpha, alpha_th } => {
                    let hi = miso_high_snr(&row, alpha).ok();
                    let lo = miso_low_snr_gamma(&row, alpha)?;
                    json!({
                        "op": "miso", "regime": "asymptotic",
                        "alpha": alpha, "alpha_th": alpha_th,
                        "high_snr": hi.map(|h| json!({
                            "rate_nats": h.rate(peak).nats(),
                            "correction": h.correction,
                        })),
                        "low_snr_gamma": lo.value,
                        "low_snr_rate_nats": lo.value * peak * peak / 2.0,
                        "probs_on": lo.probs_on,
                    })
                }
            }
        }
        MimoOp::LowSnr => {
            if !peak.is_finite() {
                return Err(usage_error("--op low-snr requires a finite --peak"));
            }
            let alpha = avg / peak;
            if let Some(diag) = diagonal_of(&g) {
                let alloc = allocate_inverted_waterfill(&diag, peak, avg)?;
                let asym = parallel_low_snr_asymptote(&diag, peak, avg)?;
                json!({
                    "op": "low_snr", "kind": "parallel",
                    "allocation": alloc.per_input,
                    "asymptote_nats": asym.nats(),
                })
            } else {
                let eta = mimo_low_snr_eta(&g, alpha)?;
                json!({
                    "op": "low_snr", "kind": "mimo",
                    "eta": eta.value,
                    "rate_nats": eta.value * peak * peak / 2.0,
                    "probs_on": eta.probs_on,
                    "atoms": eta.correlated_atoms(peak).iter().map(|(x, p)| json!({"x": x, "p": p})).collect::<Vec<_>>(),
                })
            }
        }
        MimoOp::HighSnr => {
            let h = mimo_high_snr(&channel)?;
            json!({
                "op": "high_snr",
                "rate_nats": h.rate.nats(),
                "slack_nats": h.slack,
            })
        }
    };
    emit_json(report, args.out.as_deref())
}
