//! Calibrated constants for the bounds whose orders are only asymptotic.
//!
//! The stored file lives at `data/calibration.json` and is embedded at
//! compile time; `hamming-forge binom-calibrate` regenerates it.

use std::collections::BTreeMap;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::binom;
use crate::error::{Error, Result};

pub const LN_BINOM_ERROR: &str = "ln_binom_error";
pub const BASIC3_SLACK: &str = "basic3_slack";
pub const PROPORTIONAL_ERROR: &str = "proportional_error";

const FORMAT_VERSION: u32 = 1;
const EMBEDDED: &str = include_str!("../data/calibration.json");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstantEntry {
    pub value: f64,
    pub sweep_range: String,
    /// Seconds since the Unix epoch.
    pub timestamp: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrationFile {
    pub version: u32,
    pub constants: BTreeMap<String, ConstantEntry>,
}

/// The three constants in the form the checkers use.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Constants {
    pub ln_binom_error: f64,
    pub basic3_slack: f64,
    pub proportional_error: f64,
}

/// Sweep extents used by the calibration run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SweepRanges {
    pub ln_binom_max_p: u64,
    pub basic3_max_l: u64,
    pub proportional_max: u64,
}

impl Default for SweepRanges {
    fn default() -> Self {
        SweepRanges {
            ln_binom_max_p: 2000,
            basic3_max_l: 400,
            proportional_max: 200,
        }
    }
}

impl CalibrationFile {
    pub fn from_json(text: &str) -> Result<Self> {
        let file: CalibrationFile =
            serde_json::from_str(text).map_err(|e| Error::parse(Some(e.line()), e.to_string()))?;
        if file.version != FORMAT_VERSION {
            return Err(Error::parse(None, format!("unsupported version {}", file.version)));
        }
        for name in [LN_BINOM_ERROR, BASIC3_SLACK, PROPORTIONAL_ERROR] {
            match file.constants.get(name) {
                None => return Err(Error::parse(None, format!("missing constant {name}"))),
                Some(e) if !e.value.is_finite() => {
                    return Err(Error::parse(None, format!("constant {name} is not finite")))
                }
                _ => {}
            }
        }
        Ok(file)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("serializable");
        s.push('\n');
        s
    }

    pub fn constants(&self) -> Constants {
        let get = |name: &str| self.constants[name].value;
        Constants {
            ln_binom_error: get(LN_BINOM_ERROR),
            basic3_slack: get(BASIC3_SLACK),
            proportional_error: get(PROPORTIONAL_ERROR),
        }
    }
}

/// The constants compiled into the library.
pub fn stored() -> &'static CalibrationFile {
    static FILE: OnceLock<CalibrationFile> = OnceLock::new();
    FILE.get_or_init(|| CalibrationFile::from_json(EMBEDDED).expect("embedded calibration file"))
}

pub fn constants() -> Constants {
    stored().constants()
}

/// Raw sweep maxima, before rounding.
pub fn sweep(ranges: SweepRanges) -> Constants {
    Constants {
        ln_binom_error: binom::sweep_ln_binom_error(ranges.ln_binom_max_p),
        basic3_slack: binom::sweep_basic3(ranges.basic3_max_l),
        proportional_error: binom::sweep_proportional(ranges.proportional_max),
    }
}

/// Runs every sweep and packages the results, each rounded up to 12
/// significant digits so the stored value dominates the raw maximum.
pub fn calibrate(ranges: SweepRanges, timestamp: u64) -> CalibrationFile {
    let raw = sweep(ranges);
    let entry = |value: f64, sweep_range: String| ConstantEntry {
        value: round_up(value),
        sweep_range,
        timestamp,
    };
    let mut constants = BTreeMap::new();
    constants.insert(
        LN_BINOM_ERROR.to_string(),
        entry(
            raw.ln_binom_error,
            format!("2 <= q < p <= {}", ranges.ln_binom_max_p),
        ),
    );
    constants.insert(
        BASIC3_SLACK.to_string(),
        entry(
            raw.basic3_slack,
            format!("1 <= j <= m, m^2 <= l <= {}", ranges.basic3_max_l),
        ),
    );
    constants.insert(
        PROPORTIONAL_ERROR.to_string(),
        entry(
            raw.proportional_error,
            format!("1 <= p, q <= {}, 0 <= r <= p + q", ranges.proportional_max),
        ),
    );
    CalibrationFile {
        version: FORMAT_VERSION,
        constants,
    }
}

/// Rounds toward `+inf` at 12 significant digits.
pub fn round_up(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    let scale = 10f64.powi(11 - x.abs().log10().floor() as i32);
    let r = (x * scale).ceil() / scale;
    if r < x {
        r + 1.0 / scale
    } else {
        r
    }
}
