//! `imdd sweep`: tabulate methods over a range of peak/average constraints.
//!
//! Rows are sweep points, columns the requested methods. In log10 mode the
//! range is given in 10 log10 units, matching the usual dB-style plots.

use std::path::PathBuf;

use clap::{Args, ValueEnum};
use rayon::prelude::*;
use serde_json::json;

use imdd_capacity::bounds;
use imdd_capacity::capacity::{capacity, SearchOptions};
use imdd_capacity::channel::SisoChannel;

use crate::output::{emit_json, sig10, usage_error};

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SweepVariable {
    /// Vary the peak A with the average fixed.
    Peak,
    /// Vary the average E with the peak fixed.
    Avg,
    /// Vary the peak with E = alpha * A held proportional.
    AlphaFixed,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SweepScale {
    Linear,
    /// Interpret start/stop as 10 log10 of the swept quantity.
    Log10,
}

#[derive(Args)]
pub struct SweepArgs {
    #[arg(long, value_enum)]
    pub variable: SweepVariable,
    #[arg(long)]
    pub start: f64,
    #[arg(long)]
    pub stop: f64,
    #[arg(long)]
    pub points: usize,
    #[arg(long, value_enum, default_value = "linear")]
    pub scale: SweepScale,
    #[arg(long, default_value_t = 1.0)]
    pub gain: f64,
    /// Fixed alpha for --variable alpha-fixed.
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Fixed peak (avg sweeps) or fixed avg (peak sweeps); "inf" allowed.
    #[arg(long)]
    pub fixed: Option<String>,
    /// Comma-separated method columns (see `imdd siso --help`), in order.
    #[arg(long, value_delimiter = ',', required = true)]
    pub methods: Vec<String>,
    /// Largest equispaced support size for the fh lower bound.
    #[arg(long, default_value_t = 30)]
    pub fh_k_max: usize,
    /// Output file; .csv or .json decides the format (default CSV to stdout).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Emit JSON instead of CSV.
    #[arg(long)]
    pub json: bool,
}

struct Row {
    x: f64,
    swept: f64,
    values: Vec<f64>,
}

pub fn run(args: SweepArgs) -> anyhow::Result<()> {
    if args.points < 2 {
        return Err(usage_error("need at least 2 sweep points"));
    }
    if !(args.start < args.stop) {
        return Err(usage_error("range start must be below stop"));
    }
    let methods: Vec<String> = args
        .methods
        .iter()
        .map(|m| m.trim().to_ascii_lowercase().replace('-', "_"))
        .collect();

    let xs: Vec<f64> = (0..args.points)
        .map(|i| args.start + (args.stop - args.start) * i as f64 / (args.points - 1) as f64)
        .collect();

    let rows: anyhow::Result<Vec<Row>> = xs
        .par_iter()
        .map(|&x| {
            let swept = match args.scale {
                SweepScale::Linear => x,
                SweepScale::Log10 => 10f64.powf(x / 10.0),
            };
            let channel = channel_at(&args, swept)?;
            let values = methods
                .iter()
                .map(|m| eval_method(&channel, m, args.fh_k_max))
                .collect::<anyhow::Result<Vec<f64>>>()?;
            Ok(Row { x, swept, values })
        })
        .collect();
    let rows = rows?;

    if args.json || matches!(&args.out, Some(p) if p.extension().is_some_and(|e| e == "json")) {
        let json_rows: Vec<_> = rows
            .iter()
            .map(|r| {
                let mut obj = serde_json::Map::new();
                obj.insert("x".into(), json!(r.x));
                obj.insert("value".into(), json!(r.swept));
                for (m, v) in methods.iter().zip(&r.values) {
                    obj.insert(m.clone(), json!(v));
                }
                serde_json::Value::Object(obj)
            })
            .collect();
        emit_json(
            json!({"variable": variable_name(args.variable), "rows": json_rows}),
            args.out.as_deref(),
        )
    } else {
        write_csv(&args, &methods, &rows)
    }
}

fn variable_name(v: SweepVariable) -> &'static str {
    match v {
        SweepVariable::Peak => "peak",
        SweepVariable::Avg => "avg",
        SweepVariable::AlphaFixed => "peak_alpha_fixed",
    }
}

fn channel_at(args: &SweepArgs, swept: f64) -> anyhow::Result<SisoChannel> {
    let fixed = match &args.fixed {
        Some(s) => Some(crate::output::parse_constraint(s)?),
        None => None,
    };
    let (peak, avg) = match args.variable {
        SweepVariable::Peak => {
            let avg = fixed.ok_or_else(|| usage_error("--fixed <avg> required for peak sweeps"))?;
            (swept, avg)
        }
        SweepVariable::Avg => {
            let peak =
                fixed.ok_or_else(|| usage_error("--fixed <peak> required for avg sweeps"))?;
            (peak, swept)
        }
        SweepVariable::AlphaFixed => {
            let alpha = args
                .alpha
                .ok_or_else(|| usage_error("--alpha required for alpha-fixed sweeps"))?;
            if !(alpha > 0.0) {
                return Err(usage_error("--alpha must be > 0"));
            }
            (swept, alpha * swept)
        }
    };
    SisoChannel::new(args.gain, peak, avg).map_err(|e| usage_error(format!("invalid channel: {e}")))
}

fn eval_method(ch: &SisoChannel, method: &str, fh_k_max: usize) -> anyhow::Result<f64> {
    let v = match method {
        "capacity" => capacity(ch, &SearchOptions::default())
            .map(|r| r.rate.nats())
            .map_err(|e| anyhow::anyhow!("capacity at peak {}: {e}", ch.peak()))?,
        "lmw" => bounds::lower_lmw(ch)?.value.nats(),
        "cma" => bounds::lower_cma(ch)?.value.nats(),
        "fh" => bounds::lower_fh(ch, fh_k_max)?.value.nats(),
        "exp" => bounds::lower_exp_avg(ch)?.value.nats(),
        "geom" => {
            let e = ch.avg();
            let ells: Vec<f64> = (0..16).map(|i| e * 0.25 * 1.35f64.powi(i)).collect();
            bounds::lower_geom_avg(ch, &ells)?.value.nats()
        }
        "duality" => bounds::upper_duality_lmw(ch)?.value.nats(),
        "mckellips" => bounds::upper_mckellips(ch)?.value.nats(),
        "relax" => bounds::upper_relaxation(ch)?.value.nats(),
        "sp_simplex" => bounds::upper_sp_simplex(ch)?.value.nats(),
        "sp_cube" => bounds::upper_sp_cube(ch)?.value.nats(),
        "asym_hi" => bounds::asymptotic_high_snr(ch)?.value.nats(),
        "asym_lo" => bounds::asymptotic_low_snr(ch)?.value.nats(),
        other => return Err(usage_error(format!("unknown method '{other}'"))),
    };
    Ok(v)
}

fn write_csv(args: &SweepArgs, methods: &[String], rows: &[Row]) -> anyhow::Result<()> {
    let mut header = vec!["x".to_string(), variable_name(args.variable).to_string()];
    header.extend(methods.iter().cloned());
    let write_to = |w: &mut csv::Writer<Box<dyn std::io::Write>>| -> anyhow::Result<()> {
        w.write_record(&header)?;
        for r in rows {
            let mut rec = vec![format!("{}", sig10(r.x)), format!("{}", sig10(r.swept))];
            rec.extend(r.values.iter().map(|v| format!("{}", sig10(*v))));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    };
    let sink: Box<dyn std::io::Write> = match &args.out {
        Some(path) => Box::new(std::fs::File::create(path)?),
        None => Box::new(std::io::stdout()),
    };
    let mut writer = csv::Writer::from_writer(sink);
    write_to(&mut writer)
}
