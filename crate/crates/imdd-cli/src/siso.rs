//! `imdd siso`: evaluate capacity and bounds for one channel.

use std::path::PathBuf;

use clap::Args;
use serde_json::json;

use imdd_capacity::bounds::{self, BoundResult};
use imdd_capacity::capacity::{capacity, SearchOptions};
use imdd_capacity::channel::SisoChannel;
use imdd_capacity::error::Error;

use crate::output::{convergence_error, emit_json, parse_constraint, usage_error};

#[derive(Args)]
pub struct SisoArgs {
    /// Channel gain g (>= 0).
    #[arg(long)]
    pub gain: f64,
    /// Peak constraint A, or "inf".
    #[arg(long)]
    pub peak: String,
    /// Average constraint E, or "inf".
    #[arg(long)]
    pub avg: String,
    /// Comma-separated methods; default: every applicable method.
    /// Known: capacity, lmw, cma, fh, exp, geom, duality, mckellips, relax,
    /// sp-simplex, sp-cube, asym-hi, asym-lo.
    #[arg(long, value_delimiter = ',')]
    pub methods: Vec<String>,
    /// Output-grid bin width for numerical methods.
    #[arg(long, default_value_t = 1e-3)]
    pub delta: f64,
    /// Convergence tolerance of the Blahut-Arimoto iteration.
    #[arg(long, default_value_t = 1e-7)]
    pub tol: f64,
    /// Largest equispaced support size for the fh lower bound.
    #[arg(long, default_value_t = 30)]
    pub fh_k_max: usize,
    /// Also report rates in bits/transmission.
    #[arg(long)]
    pub bits: bool,
    /// Write JSON here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn bound_json(b: &BoundResult, bits: bool) -> serde_json::Value {
    let mut v = json!({
        "method": b.method.tag(),
        "nats": b.value.nats(),
        "optimizer": b.optimizer,
    });
    if bits {
        v["bits"] = json!(b.value.bits());
    }
    v
}

pub fn run(args: SisoArgs) -> anyhow::Result<()> {
    let peak = parse_constraint(&args.peak)?;
    let avg = parse_constraint(&args.avg)?;
    let channel = SisoChannel::new(args.gain, peak, avg)
        .map_err(|e| usage_error(format!("invalid channel: {e}")))?;
    let canonical = channel.canonicalize();

    let requested: Vec<String> = if args.methods.is_empty() {
        default_methods(&canonical)
    } else {
        args.methods
            .iter()
            .map(|m| m.trim().to_ascii_lowercase().replace('-', "_"))
            .collect()
    };

    let mut results = Vec::new();
    let mut capacity_json = serde_json::Value::Null;
    for method in &requested {
        match method.as_str() {
            "capacity" => {
                if canonical.gain() == 0.0 {
                    capacity_json = json!({"nats": 0.0, "k": 1, "points": [0.0], "masses": [1.0]});
                    continue;
                }
                let opts = SearchOptions {
                    baa: imdd_capacity::capacity::BaaOptions {
                        delta: args.delta,
                        tol: args.tol,
                        ..Default::default()
                    },
                    ..Default::default()
                };
                let res = capacity(&canonical, &opts).map_err(|e| match e {
                    Error::BaaNotConverged { .. } | Error::SupportSearchExhausted { .. } => {
                        convergence_error(format!("capacity search failed: {e}"))
                    }
                    other => usage_error(format!("capacity: {other}")),
                })?;
                let mut v = json!({
                    "nats": res.rate.nats(),
                    "k": res.k,
                    "points": res.distribution.points(),
                    "masses": res.distribution.masses(),
                    "psi": res.report.psi,
                    "certified": res.report.is_optimal,
                });
                if args.bits {
                    v["bits"] = json!(res.rate.bits());
                }
                capacity_json = v;
            }
            tag => {
                let outcome = eval_bound(&canonical, tag, args.fh_k_max);
                match outcome {
                    Ok(Some(b)) => results.push(bound_json(&b, args.bits)),
                    Ok(None) => return Err(usage_error(format!("unknown method '{tag}'"))),
                    Err(Error::UnsupportedRegime(msg)) => {
                        return Err(usage_error(format!("method '{tag}': {msg}")))
                    }
                    Err(e) => return Err(anyhow::anyhow!("method '{tag}': {e}")),
                }
            }
        }
    }

    let report = json!({
        "channel": {
            "gain": channel.gain(),
            "peak": if peak.is_finite() { json!(peak) } else { json!("inf") },
            "avg": if avg.is_finite() { json!(avg) } else { json!("inf") },
            "canonical_avg": if canonical.avg().is_finite() { json!(canonical.avg()) } else { json!("inf") },
        },
        "units": "nats/transmission",
        "capacity": capacity_json,
        "bounds": results,
    });
    emit_json(report, args.out.as_deref())
}

fn default_methods(ch: &SisoChannel) -> Vec<String> {
    let mut m: Vec<&str> = Vec::new();
    if ch.peak().is_finite() {
        m.extend(["lmw", "cma", "fh", "duality", "relax", "sp_simplex", "sp_cube"]);
        if ch.avg_is_slack() {
            m.push("mckellips");
        }
        if ch.gain() > 0.0 {
            m.push("asym_hi");
        }
        m.push("asym_lo");
    } else {
        m.extend(["exp", "cma", "geom", "sp_simplex"]);
        if ch.gain() > 0.0 {
            m.push("asym_hi");
        }
    }
    m.into_iter().map(String::from).collect()
}

fn eval_bound(
    ch: &SisoChannel,
    tag: &str,
    fh_k_max: usize,
) -> Result<Option<BoundResult>, Error> {
    let b = match tag {
        "lmw" => bounds::lower_lmw(ch)?,
        "cma" => bounds::lower_cma(ch)?,
        "fh" => bounds::lower_fh(ch, fh_k_max)?,
        "exp" => bounds::lower_exp_avg(ch)?,
        "geom" => {
            let e = ch.avg();
            let ells: Vec<f64> = (0..16).map(|i| e * 0.25 * 1.35f64.powi(i)).collect();
            bounds::lower_geom_avg(ch, &ells)?
        }
        "duality" => bounds::upper_duality_lmw(ch)?,
        "mckellips" => bounds::upper_mckellips(ch)?,
        "relax" => bounds::upper_relaxation(ch)?,
        "sp_simplex" => bounds::upper_sp_simplex(ch)?,
        "sp_cube" => bounds::upper_sp_cube(ch)?,
        "asym_hi" => bounds::asymptotic_high_snr(ch)?,
        "asym_lo" => bounds::asymptotic_low_snr(ch)?,
        _ => return Ok(None),
    };
    Ok(Some(b))
}
