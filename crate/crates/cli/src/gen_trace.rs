use std::path::Path;

use anyhow::Result;
use oco_queue::datacenter::{synth_price_trace, write_price_trace};
use serde::Serialize;

use crate::config::RunConfig;
use crate::output;
use crate::Outcome;

#[derive(Serialize)]
struct TraceSummary {
    file: String,
    zones: usize,
    slots: usize,
    mean_price: f64,
    max_price: f64,
}

pub fn cmd_gen_trace(config: &RunConfig, out: &Path) -> Result<Outcome> {
    let c = &config.gen_trace;
    let trace = synth_price_trace(c.zones, c.slots, c.seed, &c.spec)?;
    output::ensure_dir(out)?;
    let path = out.join(&c.file);
    write_price_trace(&trace, &path)?;
    let prices: Vec<f64> = (0..trace.zones()).flat_map(|z| trace.zone_prices(z).to_vec()).collect();
    let summary = TraceSummary {
        file: c.file.clone(),
        zones: trace.zones(),
        slots: trace.slots(),
        mean_price: prices.iter().sum::<f64>() / prices.len() as f64,
        max_price: prices.iter().copied().fold(0.0, f64::max),
    };
    output::write_json(out, "trace.json", "gen-trace", c.seed, config, &summary)?;
    println!("wrote {} ({} zones x {} slots)", path.display(), summary.zones, summary.slots);
    Ok(Outcome::Ok)
}
