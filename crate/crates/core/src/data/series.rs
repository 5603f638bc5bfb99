//! Sliding time windows over multi-sensor unit histories.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::Mat64;

/// Sensor history of one unit: `readings` is `timesteps x sensors`,
/// `rul[t]` the remaining useful life at row `t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnitSeries {
    pub unit: u32,
    pub readings: Mat64,
    pub rul: Vec<f64>,
}

impl UnitSeries {
    pub fn len(&self) -> usize {
        self.readings.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.readings.rows() == 0
    }

    pub fn sensors(&self) -> usize {
        self.readings.cols()
    }
}

/// Windows flattened timestep-major: entry `t * sensors + s` holds sensor `s`
/// at relative timestep `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeWindowDataset {
    pub windows: Mat64,
    pub labels: Vec<f64>,
    pub window: usize,
    pub sensors: usize,
    pub units: Vec<u32>,
    /// Units shorter than the window, left out of `windows`.
    pub skipped_units: Vec<u32>,
}

impl TimeWindowDataset {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

/// Index of `(timestep, sensor)` inside a flattened window.
pub fn flat_index(timestep: usize, sensor: usize, sensors: usize) -> usize {
    timestep * sensors + sensor
}

/// One window per timestep `t >= window - 1` of every unit, covering
/// `[t - window + 1, t]` and labelled with the RUL at `t`.
pub fn make_windows(series: &[UnitSeries], window: usize) -> Result<TimeWindowDataset> {
    if window == 0 {
        return Err(Error::Domain("window must be >= 1".into()));
    }
    let sensors = series.first().map_or(0, UnitSeries::sensors);
    let mut values = Vec::new();
    let mut labels = Vec::new();
    let mut units = Vec::new();
    let mut skipped_units = Vec::new();
    for unit in series {
        if unit.sensors() != sensors {
            return Err(Error::dim(sensors, unit.sensors()));
        }
        if unit.rul.len() != unit.len() {
            return Err(Error::dim(unit.len(), unit.rul.len()));
        }
        if unit.len() < window {
            skipped_units.push(unit.unit);
            continue;
        }
        for end in window - 1..unit.len() {
            for t in end + 1 - window..=end {
                values.extend_from_slice(unit.readings.row(t));
            }
            labels.push(unit.rul[end]);
            units.push(unit.unit);
        }
    }
    Ok(TimeWindowDataset {
        windows: Mat64::new(labels.len(), window * sensors, values)?,
        labels,
        window,
        sensors,
        units,
        skipped_units,
    })
}

/// `1` when `rul <= threshold`, otherwise `0`.
pub fn binarize_rul(labels: &[f64], threshold: f64) -> Result<Vec<f64>> {
    if !(threshold > 0.0) {
        return Err(Error::Domain(format!("RUL threshold must be > 0, got {threshold}")));
    }
    Ok(labels.iter().map(|&r| if r <= threshold { 1.0 } else { 0.0 }).collect())
}
