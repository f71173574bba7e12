use imdd_capacity::capacity::{capacity, optimize_fixed_k, SearchOptions};
use imdd_capacity::channel::SisoChannel;

fn main() {
    let opts = SearchOptions {
        n_starts: 4,
        ..Default::default()
    };
    let ch10 = SisoChannel::new(1.0, 10.0, 5.0).unwrap();
    for k in [4usize, 5] {
        let r = optimize_fixed_k(&ch10, k, &opts).unwrap();
        println!(
            "A=10 a=1/2 k={k}: cert={} rate={:.6} min_off={:.2e} max_on={:.2e}",
            r.certified,
            r.rate.nats(),
            r.report.min_j_off_support,
            r.report.max_abs_j_on_support
        );
    }
    for (a, alpha) in [
        (10.0, 0.5),
        (31.6227766, 0.5),
        (10.0, 0.25),
        (100.0, 0.25),
        (100.0, 0.5),
    ] {
        let ch = SisoChannel::new(1.0, a, alpha * a).unwrap();
        let mut o = opts;
        if a > 30.0 {
            o.k_start = 6;
            o.n_starts = 2;
        }
        let t = std::time::Instant::now();
        match capacity(&ch, &o) {
            Ok(r) => println!(
                "A={a:.2} alpha={alpha}: rate={:.6} k={} [{:.1?}]",
                r.rate.nats(),
                r.k,
                t.elapsed()
            ),
            Err(e) => println!("A={a:.2} alpha={alpha}: {e} [{:.1?}]", t.elapsed()),
        }
    }
}
