//! CSV dataset files and the JSON dataset manifest.

use std::fs::File;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Dataset, Point};

/// Shapes `(name, m, d)` of the external benchmark datasets.
pub const KNOWN_SHAPES: [(&str, usize, usize); 3] = [
    ("LifeSci", 26_733, 10),
    ("Image", 34_112, 3),
    ("EuropeDiff", 169_308, 2),
];

/// Parses comma-separated rows of reals. A first row with any non-numeric
/// cell is taken as a header and skipped.
pub fn read_dataset<R: Read>(reader: R) -> Result<Dataset> {
    let mut csv = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut points = Vec::new();
    let mut dim = None;
    for (row, record) in csv.records().enumerate() {
        let record = record?;
        if record.iter().all(str::is_empty) {
            continue;
        }
        let parsed: std::result::Result<Vec<f64>, _> =
            record.iter().map(str::parse::<f64>).collect();
        let coords = match parsed {
            Ok(c) => c,
            Err(_) if row == 0 => continue,
            Err(e) => {
                return Err(Error::Parse {
                    row: row + 1,
                    msg: e.to_string(),
                })
            }
        };
        match dim {
            None => dim = Some(coords.len()),
            Some(d) if d != coords.len() => {
                return Err(Error::Parse {
                    row: row + 1,
                    msg: format!("expected {d} columns, found {}", coords.len()),
                })
            }
            _ => {}
        }
        points.push(Point::new(coords).map_err(|e| Error::Parse {
            row: row + 1,
            msg: e.to_string(),
        })?);
    }
    Dataset::new(points)
}

pub fn load_dataset(path: impl AsRef<Path>) -> Result<Dataset> {
    read_dataset(File::open(path)?)
}

/// Writes one row per point, shortest round-trip decimal representation.
pub fn write_dataset<W: Write>(data: &Dataset, writer: W) -> Result<()> {
    let mut csv = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(writer);
    for p in data.points() {
        csv.write_record(p.coords().iter().map(|x| x.to_string()))?;
    }
    csv.flush()?;
    Ok(())
}

pub fn save_dataset(data: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    write_dataset(data, File::create(path)?)
}

/// Registry entry describing a dataset file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub path: PathBuf,
    pub d: usize,
    pub m: usize,
    pub name: String,
}

impl DatasetManifest {
    pub fn describe(name: impl Into<String>, path: impl Into<PathBuf>, data: &Dataset) -> Self {
        Self {
            path: path.into(),
            d: data.dim(),
            m: data.len(),
            name: name.into(),
        }
    }

    /// Loads the file and checks it against the recorded and, for the
    /// known benchmark names, the published shape.
    pub fn load(&self) -> Result<Dataset> {
        let data = load_dataset(&self.path)?;
        if data.len() != self.m || data.dim() != self.d {
            return Err(Error::InvalidParameter(format!(
                "{}: manifest says {}x{}, file has {}x{}",
                self.name,
                self.m,
                self.d,
                data.len(),
                data.dim()
            )));
        }
        check_known_shape(&self.name, &data)?;
        Ok(data)
    }
}

/// Errors when `name` is a known benchmark dataset whose shape differs.
pub fn check_known_shape(name: &str, data: &Dataset) -> Result<()> {
    match KNOWN_SHAPES
        .iter()
        .find(|(n, _, _)| n.eq_ignore_ascii_case(name))
    {
        Some(&(n, m, d)) if data.len() != m || data.dim() != d => Err(Error::InvalidParameter(
            format!("{n} must be {m}x{d}, got {}x{}", data.len(), data.dim()),
        )),
        _ => Ok(()),
    }
}

pub fn load_manifests(path: impl AsRef<Path>) -> Result<Vec<DatasetManifest>> {
    Ok(serde_json::from_reader(File::open(path)?)?)
}

pub fn save_manifests(entries: &[DatasetManifest], path: impl AsRef<Path>) -> Result<()> {
    serde_json::to_writer_pretty(File::create(path)?, entries)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_examples() {
        let d = read_dataset("0,0\n1,1\n".as_bytes()).unwrap();
        assert_eq!((d.len(), d.dim()), (2, 2));
        let d = read_dataset("x,y\n0,0\n1,1\n".as_bytes()).unwrap();
        assert_eq!(d.len(), 2);
        assert_eq!(d.point(1).coords(), &[1.0, 1.0]);
    }

    #[test]
    fn parse_errors() {
        assert!(matches!(
            read_dataset("".as_bytes()),
            Err(Error::EmptyDataset)
        ));
        assert!(matches!(
            read_dataset("x,y\n".as_bytes()),
            Err(Error::EmptyDataset)
        ));
        assert!(matches!(
            read_dataset("0,0\n1\n".as_bytes()),
            Err(Error::Parse { row: 2, .. })
        ));
        assert!(matches!(
            read_dataset("0,0\n1,a\n".as_bytes()),
            Err(Error::Parse { row: 2, .. })
        ));
        assert!(read_dataset("0,inf\n".as_bytes()).is_err());
    }

    #[test]
    fn round_trip() {
        let d = Dataset::from_rows(&[[0.1, -2.5e-7], [1.0 / 3.0, 12345.678]]).unwrap();
        let mut buf = Vec::new();
        write_dataset(&d, &mut buf).unwrap();
        assert_eq!(read_dataset(buf.as_slice()).unwrap(), d);
    }

    #[test]
    fn manifest_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let data_path = dir.path().join("a.csv");
        let d = Dataset::from_rows(&[[0.0, 1.0], [2.0, 3.0]]).unwrap();
        save_dataset(&d, &data_path).unwrap();
        let entry = DatasetManifest::describe("toy", &data_path, &d);
        let mpath = dir.path().join("m.json");
        save_manifests(std::slice::from_ref(&entry), &mpath).unwrap();
        let back = load_manifests(&mpath).unwrap();
        assert_eq!(back, vec![entry.clone()]);
        assert_eq!(back[0].load().unwrap(), d);
        let wrong = DatasetManifest {
            name: "Image".into(),
            ..entry
        };
        assert!(wrong.load().is_err());
    }
}
