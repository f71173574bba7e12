//! `imdd region`: export 2-user broadcast / multiple-access rate regions.

use std::path::PathBuf;

use clap::{Args, ValueEnum};
use serde_json::json;

use imdd_capacity::multi_user::{
    bc_high_snr_region, bc_inner_tg, bc_low_snr_region, bc_outer, mac_high_snr_region,
    mac_inner_tg, mac_low_snr_region, mac_outer, BcChannel, MacChannel, OuterMethod, RateRegion2,
};

use crate::output::{emit_json, parse_constraint, usage_error};

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RegionChannel {
    Bc,
    Mac,
}

#[derive(Args)]
pub struct RegionArgs {
    /// Channel type: broadcast (bc) or multiple access (mac).
    #[arg(long, value_enum)]
    pub channel: RegionChannel,
    #[arg(long)]
    pub g1: f64,
    #[arg(long)]
    pub g2: f64,
    /// Peak constraint A (per user for MAC unless --peak2 is given).
    #[arg(long)]
    pub peak: String,
    /// Average constraint E (per user for MAC unless --avg2 is given).
    #[arg(long)]
    pub avg: String,
    /// Second user's peak (MAC only; defaults to --peak).
    #[arg(long)]
    pub peak2: Option<String>,
    /// Second user's average (MAC only; defaults to --avg).
    #[arg(long)]
    pub avg2: Option<String>,
    /// Regions to emit: outer-lmw, outer-relax0, inner-tg, high-snr, low-snr.
    #[arg(long, value_delimiter = ',', default_values_t = [String::from("outer-relax0")])]
    pub regions: Vec<String>,
    /// Grid size for the BC split parameter rho.
    #[arg(long, default_value_t = 101)]
    pub rho_points: usize,
    /// Per-user location-grid size of the truncated-Gaussian search.
    #[arg(long, default_value_t = 9)]
    pub mu_points: usize,
    /// Output file (stdout when omitted).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn region_json(name: &str, region: &RateRegion2) -> serde_json::Value {
    json!({
        "name": name,
        "tag": region.tag,
        "interpolation": region.interp,
        "gap_nats": region.gap,
        "users_swapped": region.users_swapped,
        "boundary": region.boundary,
    })
}

pub fn run(args: RegionArgs) -> anyhow::Result<()> {
    let peak = parse_constraint(&args.peak)?;
    let avg = parse_constraint(&args.avg)?;
    let mut out = Vec::new();

    match args.channel {
        RegionChannel::Bc => {
            let ch = BcChannel::new(args.g1, args.g2, peak, avg)
                .map_err(|e| usage_error(format!("invalid BC channel: {e}")))?;
            for name in &args.regions {
                let region = match name.trim().to_ascii_lowercase().as_str() {
                    "outer-lmw" => bc_outer(&ch, OuterMethod::Lmw, args.rho_points)?,
                    "outer-relax0" => bc_outer(&ch, OuterMethod::Relax0, args.rho_points)?,
                    "inner-tg" => bc_inner_tg(&ch, args.rho_points.min(41), args.mu_points)?,
                    "high-snr" => bc_high_snr_region(&ch)?,
                    "low-snr" => bc_low_snr_region(&ch)?,
                    other => return Err(usage_error(format!("unknown region '{other}'"))),
                };
                out.push(region_json(name, &region));
            }
            emit_json(
                json!({
                    "channel": "bc",
                    "g1": args.g1, "g2": args.g2,
                    "peak": peak, "avg": avg,
                    "units": "nats/transmission",
                    "regions": out,
                }),
                args.out.as_deref(),
            )
        }
        RegionChannel::Mac => {
            let peak2 = match &args.peak2 {
                Some(s) => parse_constraint(s)?,
                None => peak,
            };
            let avg2 = match &args.avg2 {
                Some(s) => parse_constraint(s)?,
                None => avg,
            };
            let ch = MacChannel::new(args.g1, args.g2, peak, peak2, avg, avg2)
                .map_err(|e| usage_error(format!("invalid MAC channel: {e}")))?;
            for name in &args.regions {
                let region = match name.trim().to_ascii_lowercase().as_str() {
                    "outer-lmw" => mac_outer(&ch, OuterMethod::Lmw)?,
                    "outer-relax0" => mac_outer(&ch, OuterMethod::Relax0)?,
                    "inner-tg" => mac_inner_tg(&ch, args.mu_points)?,
                    "high-snr" => mac_high_snr_region(&ch)?,
                    "low-snr" => mac_low_snr_region(&ch)?,
                    other => return Err(usage_error(format!("unknown region '{other}'"))),
                };
                out.push(region_json(name, &region));
            }
            emit_json(
                json!({
                    "channel": "mac",
                    "g1": args.g1, "g2": args.g2,
                    "peak1": peak, "peak2": peak2,
                    "avg1": avg, "avg2": avg2,
                    "units": "nats/transmission",
                    "regions": out,
                }),
                args.out.as_deref(),
            )
        }
    }
}
