//! Regenerates the synthetic fixture in `fixtures/`.
//!
//!     cargo run -p riskpipe --example make_fixture [-- <out-dir>]
//!
//! Twenty stocks follow a one-factor model on an index whose daily returns
//! are AR(1) with Student-t(4) shocks. Volatility rises 1.6× from the event
//! date. The cap weights put 60% on the four highest-beta, highest-noise
//! names. One stock has a missing quote on one day.

use std::fmt::Write as _;
use std::path::PathBuf;

use chrono::{Datelike, NaiveDate, Weekday};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StudentT;

const SEED: u64 = 20_220_224;
const STOCKS: usize = 20;

fn main() {
    let dir = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures"));
    std::fs::create_dir_all(&dir).expect("output directory");

    let start = NaiveDate::from_ymd_opt(2021, 1, 4).unwrap();
    let end = NaiveDate::from_ymd_opt(2022, 6, 30).unwrap();
    let event = NaiveDate::from_ymd_opt(2022, 2, 24).unwrap();
    let gap = NaiveDate::from_ymd_opt(2021, 11, 4).unwrap();
    let dates: Vec<NaiveDate> = start
        .iter_days()
        .take_while(|d| *d <= end)
        .filter(|d| !matches!(d.weekday(), Weekday::Sat | Weekday::Sun))
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let t4 = StudentT::new(4.0).unwrap();
    let t5 = StudentT::new(5.0).unwrap();
    // unit-variance scalings of the t shocks
    let s4 = (2.0f64).sqrt().recip();
    let s5 = (3.0f64 / 5.0).sqrt();

    let betas: Vec<f64> = (0..STOCKS)
        .map(|i| if i < 4 { 1.5 + 0.1 * i as f64 } else { 0.6 + 0.04 * i as f64 })
        .collect();
    let idio: Vec<f64> = (0..STOCKS)
        .map(|i| if i < 4 { 0.022 } else { 0.009 + 0.0004 * i as f64 })
        .collect();

    let mut index = 15_000.0f64;
    let mut stock: Vec<f64> = (0..STOCKS).map(|i| 500.0 + 100.0 * i as f64).collect();
    let mut prev = 0.0f64;
    let mut csv = String::from("date,NIFTY");
    for i in 0..STOCKS {
        let _ = write!(csv, ",S{:02}", i + 1);
    }
    csv.push('\n');
    for (k, d) in dates.iter().enumerate() {
        if k > 0 {
            let scale = if *d >= event { 1.6 } else { 1.0 };
            let shock: f64 = rng.sample(t4);
            let f = 0.0002 + 0.3 * prev + scale * 0.009 * s4 * shock;
            prev = f;
            index *= f.exp();
            for i in 0..STOCKS {
                let e: f64 = rng.sample(t5);
                stock[i] *= (betas[i] * f + scale * idio[i] * s5 * e).exp();
            }
        }
        let _ = write!(csv, "{},{:.4}", d.format("%Y-%m-%d"), index);
        for (i, p) in stock.iter().enumerate() {
            if i == 7 && *d == gap {
                csv.push(',');
            } else {
                let _ = write!(csv, ",{p:.4}");
            }
        }
        csv.push('\n');
    }
    std::fs::write(dir.join("prices.csv"), csv).expect("prices.csv");

    let mut weights = String::from("asset,weight\n");
    for i in 0..STOCKS {
        let w = if i < 4 { 15.0 } else { 40.0 / (STOCKS - 4) as f64 };
        let _ = writeln!(weights, "S{:02},{w}", i + 1);
    }
    std::fs::write(dir.join("cap_weights.csv"), weights).expect("cap_weights.csv");
}
