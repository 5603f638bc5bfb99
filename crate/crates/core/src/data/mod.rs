//! Dataset pipelines and on-disk formats.
//!
//! CSV layouts:
//!
//! * text corpus: `label,text`
//! * time series: `unit,timestep,sensor_1,...,sensor_k,rul`
//! * dense table: `label,x_1,...,x_k`

mod series;
mod synth;
mod text;

use std::collections::BTreeMap;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use series::{binarize_rul, flat_index, make_windows, TimeWindowDataset, UnitSeries};
pub use synth::{synth_classification, synth_corpus, synth_degradation, DenseDataset};
pub use text::{preprocess_text, stem_token, tfidf_fit, tfidf_tokens, tfidf_transform, tokenize, Vocabulary};

use crate::error::{Error, Result};
use crate::numerics::Mat64;

/// Disjoint train/test split of a labelled corpus.
#[derive(Debug, Clone, PartialEq)]
pub struct CorpusSplit {
    pub train: Vec<(f64, String)>,
    pub test: Vec<(f64, String)>,
    pub seed: u64,
    pub ratio: f64,
}

/// Shuffles with `seed` and keeps `round(ratio * n)` documents for training.
pub fn split_corpus(corpus: &[(f64, String)], ratio: f64, seed: u64) -> Result<CorpusSplit> {
    let order = split_indices(corpus.len(), ratio, seed)?;
    let pick = |idx: &[usize]| idx.iter().map(|&i| corpus[i].clone()).collect();
    Ok(CorpusSplit {
        train: pick(&order.0),
        test: pick(&order.1),
        seed,
        ratio,
    })
}

/// Shuffled `(train, test)` index sets of a seeded split.
pub fn split_indices(n: usize, ratio: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(0.0..=1.0).contains(&ratio) {
        return Err(Error::Domain(format!("split ratio must be in [0, 1], got {ratio}")));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let cut = (ratio * n as f64).round() as usize;
    let test = order.split_off(cut);
    Ok((order, test))
}

/// Kind of data a workspace holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DataKind {
    /// Dense features in `[0, 1]`, binary labels.
    Toy,
    /// Short documents vectorised by TF-IDF, binary labels.
    Text,
    /// Sensor windows; labels are RUL (regression) or binarised RUL.
    Timeseries,
}

/// Describes the dataset files of a workspace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub kind: DataKind,
    pub seed: u64,
    /// CSV file names relative to the workspace, keyed by split (`train`, `val`).
    pub splits: BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sensors: Option<usize>,
    /// RUL threshold; when set, windows are classified as `rul <= threshold`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threshold: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_features: Option<usize>,
}

impl DatasetManifest {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| Error::from_json(e, &text))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let text = serde_json::to_string_pretty(self).expect("manifest serialization cannot fail");
        std::fs::write(path, text + "\n")?;
        Ok(())
    }
}

fn csv_error(e: csv::Error) -> Error {
    let offset = e.position().map_or(0, |p| p.byte() as usize);
    Error::Parse {
        offset,
        message: e.to_string(),
    }
}

fn parse_f64(field: &str, what: &str, offset: usize) -> Result<f64> {
    field.trim().parse::<f64>().map_err(|_| Error::Parse {
        offset,
        message: format!("{what}: expected a number, found {field:?}"),
    })
}

pub fn read_corpus_csv(path: impl AsRef<Path>) -> Result<Vec<(f64, String)>> {
    let mut reader = csv::Reader::from_path(path).map_err(csv_error)?;
    let mut out = Vec::new();
    for record in reader.records() {
        let record = record.map_err(csv_error)?;
        let offset = record.position().map_or(0, |p| p.byte() as usize);
        if record.len() < 2 {
            return Err(Error::Parse {
                offset,
                message: "expected columns label,text".into(),
            });
        }
        let label = parse_f64(&record[0], "label", offset)?;
        out.push((label, record[1].to_string()));
    }
    Ok(out)
}

pub fn write_corpus_csv(path: impl AsRef<Path>, corpus: &[(f64, String)]) -> Result<()> {
    let mut writer = csv::Writer::from_path(path).map_err(csv_error)?;
    writer.write_record(["label", "text"]).map_err(csv_error)?;
    for (label, text) in corpus {
        writer
            .write_record([label.to_string(), text.clone()])
            .map_err(csv_error)?;
    }
    writer.flush()?;
    Ok(())
}

pub fn read_dense_csv(path: impl AsRef<Path>) -> Result<DenseDataset> {
    let mut reader = csv::Reader::from_path(path).map_err(csv_error)?;
    let mut labels = Vec::new();
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for record in reader.records() {
        let record = record.map_err(csv_error)?;
        let offset = record.position().map_or(0, |p| p.byte() as usize);
        labels.push(parse_f64(&record[0], "label", offset)?);
        rows.push(
            record
                .iter()
                .skip(1)
                .map(|f| parse_f64(f, "feature", offset))
                .collect::<Result<_>>()?,
        );
    }
    Ok(DenseDataset {
        x: Mat64::from_rows(&rows)?,
        labels,
    })
}

pub fn write_dense_csv(path: impl AsRef<Path>, data: &DenseDataset) -> Result<()> {
    let mut writer = csv::Writer::from_path(path).map_err(csv_error)?;
    let mut header = vec!["label".to_string()];
    header.extend((1..=data.x.cols()).map(|j| format!("x_{j}")));
    writer.write_record(&header).map_err(csv_error)?;
    for (row, label) in data.x.iter_rows().zip(&data.labels) {
        let mut fields = vec![label.to_string()];
        fields.extend(row.iter().map(f64::to_string));
        writer.write_record(&fields).map_err(csv_error)?;
    }
    writer.flush()?;
    Ok(())
}

/// Reads `unit,timestep,sensor_1..k,rul` rows; rows of a unit are ordered by
/// timestep.
pub fn read_series_csv(path: impl AsRef<Path>) -> Result<Vec<UnitSeries>> {
    let mut reader = csv::Reader::from_path(path).map_err(csv_error)?;
    let mut by_unit: BTreeMap<u32, Vec<(f64, Vec<f64>, f64)>> = BTreeMap::new();
    for record in reader.records() {
        let record = record.map_err(csv_error)?;
        let offset = record.position().map_or(0, |p| p.byte() as usize);
        if record.len() < 4 {
            return Err(Error::Parse {
                offset,
                message: "expected columns unit,timestep,sensor_1..sensor_k,rul".into(),
            });
        }
        let unit = record[0].trim().parse::<u32>().map_err(|_| Error::Parse {
            offset,
            message: format!("unit: expected an integer, found {:?}", &record[0]),
        })?;
        let t = parse_f64(&record[1], "timestep", offset)?;
        let last = record.len() - 1;
        let sensors = (2..last)
            .map(|j| parse_f64(&record[j], "sensor", offset))
            .collect::<Result<Vec<_>>>()?;
        let rul = parse_f64(&record[last], "rul", offset)?;
        by_unit.entry(unit).or_default().push((t, sensors, rul));
    }
    by_unit
        .into_iter()
        .map(|(unit, mut rows)| {
            rows.sort_by(|a, b| a.0.total_cmp(&b.0));
            let readings: Vec<Vec<f64>> = rows.iter().map(|r| r.1.clone()).collect();
            Ok(UnitSeries {
                unit,
                readings: Mat64::from_rows(&readings)?,
                rul: rows.iter().map(|r| r.2).collect(),
            })
        })
        .collect()
}

pub fn write_series_csv(path: impl AsRef<Path>, series: &[UnitSeries]) -> Result<()> {
    let mut writer = csv::Writer::from_path(path).map_err(csv_error)?;
    let sensors = series.first().map_or(0, UnitSeries::sensors);
    let mut header = vec!["unit".to_string(), "timestep".to_string()];
    header.extend((1..=sensors).map(|s| format!("sensor_{s}")));
    header.push("rul".into());
    writer.write_record(&header).map_err(csv_error)?;
    for unit in series {
        for t in 0..unit.len() {
            let mut fields = vec![unit.unit.to_string(), (t + 1).to_string()];
            fields.extend(unit.readings.row(t).iter().map(f64::to_string));
            fields.push(unit.rul[t].to_string());
            writer.write_record(&fields).map_err(csv_error)?;
        }
    }
    writer.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn split_is_disjoint_and_sized() {
        let corpus: Vec<(f64, String)> = (0..25).map(|i| (f64::from(i % 2), format!("doc {i}"))).collect();
        let s = split_corpus(&corpus, 0.8, 5).unwrap();
        assert_eq!(s.train.len(), 20);
        assert_eq!(s.test.len(), 5);
        for doc in &s.test {
            assert!(!s.train.contains(doc));
        }
        assert_eq!(s, split_corpus(&corpus, 0.8, 5).unwrap());
    }

    #[test]
    fn csv_round_trips() {
        let dir = std::env::temp_dir().join(format!("lionex-data-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();

        let corpus = vec![(1.0, "Win a \"free\", prize".to_string()), (0.0, "see you".to_string())];
        write_corpus_csv(dir.join("c.csv"), &corpus).unwrap();
        assert_eq!(read_corpus_csv(dir.join("c.csv")).unwrap(), corpus);

        let series = synth_degradation(2, 3, 1).unwrap();
        write_series_csv(dir.join("s.csv"), &series).unwrap();
        assert_eq!(read_series_csv(dir.join("s.csv")).unwrap(), series);

        let dense = synth_classification(10, 3, 2).unwrap();
        write_dense_csv(dir.join("d.csv"), &dense).unwrap();
        assert_eq!(read_dense_csv(dir.join("d.csv")).unwrap(), dense);

        std::fs::write(dir.join("bad.csv"), "label,text\nabc,hello\n").unwrap();
        match read_corpus_csv(dir.join("bad.csv")) {
            Err(Error::Parse { offset, .. }) => assert_eq!(offset, 11),
            other => panic!("{other:?}"),
        }
        std::fs::remove_dir_all(&dir).ok();
    }
}
