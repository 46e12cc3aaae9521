use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use super::erp::{erp_epochs, ErpEpochs, ERP_SAMPLES};
use super::hilbert::{hilbert_features, HILBERT_STATS};
use super::stats::{window_stats, WindowSpec, WINDOW_STATS};
use super::tf::{tf_features, TfClassMaps, TF_STATS};
use crate::dsp::WaveletBank;
use crate::error::{Error, Result};
use crate::model::{BandDefinition, Label, Recording, CHANNELS};

pub const N_ERP_STATS: usize = 336;
pub const N_LDA: usize = 8;
pub const N_ERP: usize = N_ERP_STATS + N_LDA;
pub const N_TF: usize = 56;
pub const N_HILBERT: usize = 240;
pub const N_FEATURES: usize = N_ERP + N_TF + N_HILBERT;

pub const LDA_OFFSET: usize = N_ERP_STATS;
pub const TF_OFFSET: usize = N_ERP;
pub const HILBERT_OFFSET: usize = N_ERP + N_TF;

pub const FEATURES_FILE: &str = "features.csv";
pub const EPOCHS_FILE: &str = "erp_epochs.csv";
pub const TF_MAPS_FILE: &str = "tf_maps.json";

/// Decoded column name.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColumnName {
    pub family: String,
    pub channel: String,
    pub descriptor: String,
}

impl ColumnName {
    pub fn parse(s: &str) -> Option<Self> {
        let mut parts = s.splitn(3, '/');
        let family = parts.next()?.to_string();
        let channel = parts.next()?.to_string();
        let descriptor = parts.next()?.to_string();
        (!family.is_empty() && !channel.is_empty() && !descriptor.is_empty()).then_some(ColumnName {
            family,
            channel,
            descriptor,
        })
    }

    pub fn encode(&self) -> String {
        format!("{}/{}/{}", self.family, self.channel, self.descriptor)
    }
}

/// Column names of the 640-feature layout for the given bands.
pub fn column_names(bands: &[BandDefinition]) -> Vec<String> {
    let windows = WindowSpec::standard();
    let mut cols = Vec::with_capacity(N_FEATURES);
    for ch in CHANNELS {
        for &w in &windows.0 {
            for stat in WINDOW_STATS {
                cols.push(format!("erp/{ch}/{}/{stat}", WindowSpec::label(w)));
            }
        }
    }
    for ch in CHANNELS {
        cols.push(format!("lda/{ch}/projection"));
    }
    for ch in CHANNELS {
        for stat in TF_STATS {
            cols.push(format!("tf/{ch}/{stat}"));
        }
    }
    for ch in CHANNELS {
        for band in bands {
            for stat in HILBERT_STATS {
                cols.push(format!("hilbert/{ch}/{}/{stat}", band.name));
            }
        }
    }
    cols
}

/// Trial-by-feature table. The LDA columns are zero placeholders that are
/// filled per cross-validation fold from the companion ERP epochs.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub subject_id: String,
    pub columns: Vec<String>,
    /// Row-major `[n_trials][n_columns]`.
    pub values: Vec<f64>,
    pub labels: Vec<Label>,
    pub block_of: Vec<usize>,
    pub erp: ErpEpochs,
}

impl FeatureMatrix {
    pub fn n_rows(&self) -> usize {
        self.labels.len()
    }

    pub fn n_cols(&self) -> usize {
        self.columns.len()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let n = self.n_cols();
        &self.values[i * n..(i + 1) * n]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        let n = self.n_cols();
        &mut self.values[i * n..(i + 1) * n]
    }

    /// Write `features.csv` and `erp_epochs.csv` into `dir`.
    pub fn write(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;

        let path = dir.join(FEATURES_FILE);
        let mut header: Vec<String> = self.columns.clone();
        header.extend(["label".into(), "block".into()]);
        write_rows(&path, &header, (0..self.n_rows()).map(|i| (self.row(i), self.labels[i], self.block_of[i])))?;

        let path = dir.join(EPOCHS_FILE);
        let mut header: Vec<String> = Vec::with_capacity(self.erp.n_channels * ERP_SAMPLES + 2);
        for ch in CHANNELS.iter().take(self.erp.n_channels) {
            header.extend((0..ERP_SAMPLES).map(|i| format!("{ch}@{i}")));
        }
        header.extend(["label".into(), "block".into()]);
        let stride = self.erp.n_channels * ERP_SAMPLES;
        write_rows(
            &path,
            &header,
            (0..self.erp.n_trials)
                .map(|t| (&self.erp.data[t * stride..(t + 1) * stride], self.erp.labels[t], self.erp.block_of[t])),
        )
    }

    /// Read a directory written by [`FeatureMatrix::write`].
    pub fn read(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        let (columns, values, labels, block_of) = read_rows(&dir.join(FEATURES_FILE))?;
        if columns.len() != N_FEATURES {
            return Err(Error::Schema {
                path: dir.join(FEATURES_FILE),
                msg: format!("expected {N_FEATURES} feature columns, found {}", columns.len()),
            });
        }
        if let Some(bad) = columns.iter().find(|c| ColumnName::parse(c).is_none()) {
            return Err(Error::Schema { path: dir.join(FEATURES_FILE), msg: format!("malformed column name {bad:?}") });
        }
        let epochs_path = dir.join(EPOCHS_FILE);
        let (ecols, edata, elabels, eblocks) = read_rows(&epochs_path)?;
        if ecols.len() != CHANNELS.len() * ERP_SAMPLES {
            return Err(Error::Schema {
                path: epochs_path,
                msg: format!("expected {} epoch columns, found {}", CHANNELS.len() * ERP_SAMPLES, ecols.len()),
            });
        }
        if elabels != labels || eblocks != block_of {
            return Err(Error::Schema {
                path: epochs_path,
                msg: "trial labels/blocks disagree with features.csv".into(),
            });
        }
        let subject_id = dir.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        Ok(FeatureMatrix {
            subject_id,
            columns,
            values,
            erp: ErpEpochs {
                data: edata,
                n_trials: labels.len(),
                n_channels: CHANNELS.len(),
                labels: labels.clone(),
                block_of: block_of.clone(),
            },
            labels,
            block_of,
        })
    }
}

fn write_rows<'a>(path: &Path, header: &[String], rows: impl Iterator<Item = (&'a [f64], Label, usize)>) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let io_err = |e| Error::io(path, e);
    writeln!(w, "{}", header.join(",")).map_err(io_err)?;
    let mut line = String::new();
    for (vals, label, block) in rows {
        use std::fmt::Write as _;
        line.clear();
        for v in vals {
            let _ = write!(line, "{v},");
        }
        let _ = writeln!(line, "{label},{block}");
        w.write_all(line.as_bytes()).map_err(io_err)?;
    }
    w.flush().map_err(io_err)
}

type Rows = (Vec<String>, Vec<f64>, Vec<Label>, Vec<usize>);

fn read_rows(path: &Path) -> Result<Rows> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new().flexible(true).from_reader(file);
    let parse_err = |line: u64, msg: String| Error::Parse { path: path.to_path_buf(), line, msg };
    let header: Vec<String> =
        reader.headers().map_err(|e| parse_err(1, e.to_string()))?.iter().map(str::to_string).collect();
    let n = header.len();
    if n < 2 || header[n - 2] != "label" || header[n - 1] != "block" {
        return Err(parse_err(1, "header must end with label,block".into()));
    }
    let columns = header[..n - 2].to_vec();
    let (mut values, mut labels, mut blocks) = (Vec::new(), Vec::new(), Vec::new());
    for rec in reader.records() {
        let rec = rec.map_err(|e| parse_err(e.position().map_or(0, |p| p.line()), e.to_string()))?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() != n {
            return Err(parse_err(line, format!("expected {n} fields, found {}", rec.len())));
        }
        for f in rec.iter().take(n - 2) {
            values.push(f.parse::<f64>().map_err(|_| parse_err(line, format!("bad number {f:?}")))?);
        }
        labels.push(rec[n - 2].parse::<Label>().map_err(|e| parse_err(line, e))?);
        blocks.push(rec[n - 1].parse::<usize>().map_err(|_| parse_err(line, format!("bad block {:?}", &rec[n - 1])))?);
    }
    Ok((columns, values, labels, blocks))
}

/// Feature matrix plus the class-averaged time-frequency maps computed on the
/// way.
#[derive(Debug, Clone)]
pub struct Extraction {
    pub matrix: FeatureMatrix,
    pub tf_maps: TfClassMaps,
}

pub fn extract(rec: &Recording, bands: &[BandDefinition]) -> Result<Extraction> {
    if bands.len() != 5 {
        return Err(Error::arg(format!("expected 5 bands, got {}", bands.len())));
    }
    let erp = erp_epochs(rec)?;
    let bank = WaveletBank::standard(rec.fs() as f64)?;
    let tf = tf_features(rec, &bank)?;
    let hil = hilbert_features(rec, bands)?;
    let windows = WindowSpec::standard();
    let columns = column_names(bands);
    debug_assert_eq!(columns.len(), N_FEATURES);

    let n = rec.n_trials();
    let mut values = Vec::with_capacity(n * N_FEATURES);
    for t in 0..n {
        let start = values.len();
        for c in 0..erp.n_channels {
            values.extend(window_stats(erp.epoch(t, c), &windows)?);
        }
        values.extend(std::iter::repeat_n(0.0, N_LDA));
        values.extend_from_slice(&tf.rows[t]);
        values.extend_from_slice(&hil[t]);
        let row = &values[start..];
        if row.len() != N_FEATURES {
            return Err(Error::arg(format!("trial {t} produced {} features", row.len())));
        }
        if let Some(j) = row.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { column: columns[j].clone(), trial: t });
        }
    }
    Ok(Extraction {
        matrix: FeatureMatrix {
            subject_id: rec.subject_id().to_string(),
            columns,
            values,
            labels: rec.trial_labels(),
            block_of: rec.trial_blocks(),
            erp,
        },
        tf_maps: tf.maps,
    })
}

/// ERP statistics, LDA placeholders, time-frequency and Hilbert features.
pub fn assemble(rec: &Recording, bands: &[BandDefinition]) -> Result<FeatureMatrix> {
    extract(rec, bands).map(|e| e.matrix)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layout_counts() {
        let cols = column_names(&BandDefinition::standard());
        assert_eq!(cols.len(), 640);
        let fam = |f: &str| cols.iter().filter(|c| c.starts_with(f)).count();
        assert_eq!((fam("erp/"), fam("lda/"), fam("tf/"), fam("hilbert/")), (336, 8, 56, 240));
        assert!(cols[LDA_OFFSET].starts_with("lda/Fz"));
        assert!(cols[TF_OFFSET].starts_with("tf/Fz"));
        assert!(cols[HILBERT_OFFSET].starts_with("hilbert/Fz/delta"));
    }

    #[test]
    fn names_round_trip() {
        for c in column_names(&BandDefinition::standard()) {
            let parsed = ColumnName::parse(&c).unwrap();
            assert!(CHANNELS.contains(&parsed.channel.as_str()));
            assert_eq!(parsed.encode(), c);
        }
    }
}
