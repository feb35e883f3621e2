//! Electricity price traces: CSV I/O and a synthetic generator.

use std::f64::consts::PI;
use std::fs::File;
use std::io;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Slots per day at 5-minute resolution.
pub const SLOTS_PER_DAY: usize = 288;

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("cannot read trace: {0}")]
    Io(#[from] io::Error),
    #[error("line {line}: {message}")]
    Malformed { line: u64, message: String },
    #[error("header must be `slot,zone_0,...,zone_{{Z-1}}`, got `{0}`")]
    Header(String),
    #[error("line {line}: negative price {value} for zone {zone}")]
    NegativePrice { line: u64, zone: usize, value: f64 },
    #[error("line {line}: expected {expected} fields, found {found}")]
    Ragged { line: u64, expected: usize, found: usize },
    #[error("trace has no zones or no slots")]
    Empty,
    #[error("invalid synthetic spec: {0}")]
    BadSpec(&'static str),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

/// Prices indexed `[zone][slot]`, slots 0-based.
#[derive(Debug, Clone, PartialEq)]
pub struct PriceTrace {
    prices: Vec<Vec<f64>>,
    slot_minutes: f64,
}

impl PriceTrace {
    pub fn new(prices: Vec<Vec<f64>>) -> Result<Self, TraceError> {
        if prices.is_empty() || prices[0].is_empty() {
            return Err(TraceError::Empty);
        }
        let slots = prices[0].len();
        for (z, row) in prices.iter().enumerate() {
            if row.len() != slots {
                return Err(TraceError::Ragged {
                    line: 0,
                    expected: slots,
                    found: row.len(),
                });
            }
            if let Some(&value) = row.iter().find(|p| !(**p >= 0.0 && p.is_finite())) {
                return Err(TraceError::NegativePrice { line: 0, zone: z, value });
            }
        }
        Ok(Self {
            prices,
            slot_minutes: 5.0,
        })
    }

    pub fn zones(&self) -> usize {
        self.prices.len()
    }

    pub fn slots(&self) -> usize {
        self.prices[0].len()
    }

    pub fn slot_minutes(&self) -> f64 {
        self.slot_minutes
    }

    pub fn price(&self, zone: usize, slot: usize) -> f64 {
        self.prices[zone][slot]
    }

    pub fn zone_prices(&self, zone: usize) -> &[f64] {
        &self.prices[zone]
    }
}

/// Reads a CSV with header `slot,zone_0,...,zone_{Z-1}`, one row per slot.
pub fn load_price_trace(path: impl AsRef<Path>) -> Result<PriceTrace, TraceError> {
    read_price_trace(File::open(path)?)
}

pub fn read_price_trace<R: io::Read>(reader: R) -> Result<PriceTrace, TraceError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header = rdr.headers()?.clone();
    let zones = header.len().saturating_sub(1);
    let header_ok = header.get(0) == Some("slot")
        && zones > 0
        && header.iter().skip(1).enumerate().all(|(z, h)| h == format!("zone_{z}"));
    if !header_ok {
        return Err(TraceError::Header(header.iter().collect::<Vec<_>>().join(",")));
    }
    let mut prices = vec![Vec::new(); zones];
    for record in rdr.records() {
        let record = record?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        if record.len() != zones + 1 {
            return Err(TraceError::Ragged {
                line,
                expected: zones + 1,
                found: record.len(),
            });
        }
        record[0].parse::<u64>().map_err(|_| TraceError::Malformed {
            line,
            message: format!("slot index `{}` is not a nonnegative integer", &record[0]),
        })?;
        for z in 0..zones {
            let cell = &record[z + 1];
            let value: f64 = cell.parse().map_err(|_| TraceError::Malformed {
                line,
                message: format!("price `{cell}` for zone {z} is not a number"),
            })?;
            if !(value >= 0.0 && value.is_finite()) {
                return Err(TraceError::NegativePrice { line, zone: z, value });
            }
            prices[z].push(value);
        }
    }
    PriceTrace::new(prices)
}

/// Writes prices with shortest round-trip formatting, so reloading yields
/// bit-identical values.
pub fn write_price_trace(trace: &PriceTrace, path: impl AsRef<Path>) -> Result<(), TraceError> {
    let mut wtr = csv::Writer::from_path(path)?;
    let mut header = vec!["slot".to_string()];
    header.extend((0..trace.zones()).map(|z| format!("zone_{z}")));
    wtr.write_record(&header)?;
    for t in 0..trace.slots() {
        let mut row = vec![t.to_string()];
        row.extend((0..trace.zones()).map(|z| format!("{}", trace.price(z, t))));
        wtr.write_record(&row)?;
    }
    wtr.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthSpec {
    pub base: f64,
    pub daily_amplitude: f64,
    pub spike_prob: f64,
    pub spike_scale: f64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            base: 30.0,
            daily_amplitude: 0.8,
            spike_prob: 0.01,
            spike_scale: 2.0,
        }
    }
}

/// `base * (1 + amplitude * sin(2 pi t / 288 + phi_z))` plus independent
/// spikes with probability `spike_prob` and exponential size of mean
/// `spike_scale * base`, clipped at zero. Zone phases are `2 pi z / zones`.
pub fn synth_price_trace(zones: usize, slots: usize, seed: u64, spec: &SynthSpec) -> Result<PriceTrace, TraceError> {
    if !(spec.spike_prob >= 0.0 && spec.spike_prob <= 1.0) {
        return Err(TraceError::BadSpec("spike_prob must lie in [0, 1]"));
    }
    if !(spec.base >= 0.0 && spec.daily_amplitude >= 0.0 && spec.spike_scale >= 0.0) {
        return Err(TraceError::BadSpec("base, daily_amplitude and spike_scale must be nonnegative"));
    }
    if zones == 0 || slots == 0 {
        return Err(TraceError::Empty);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let prices = (0..zones)
        .map(|z| {
            let phase = 2.0 * PI * z as f64 / zones as f64;
            (0..slots)
                .map(|t| {
                    let daily = (2.0 * PI * t as f64 / SLOTS_PER_DAY as f64 + phase).sin();
                    let mut p = spec.base * (1.0 + spec.daily_amplitude * daily);
                    if rng.random::<f64>() < spec.spike_prob {
                        let size: f64 = rng.sample(Exp1);
                        p += size * spec.spike_scale * spec.base;
                    }
                    p.max(0.0)
                })
                .collect()
        })
        .collect();
    PriceTrace::new(prices)
}
