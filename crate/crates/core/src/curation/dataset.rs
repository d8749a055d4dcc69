//! Feature datasets on disk.
//!
//! ```text
//! # auxlearn-dataset v1 k=3 dim=2
//! example_id,f0,f1,label
//! syn-000000,0.1875,-0.03125,0
//! ```
//!
//! Features use shortest round-trip decimals, so files reload exactly.

use std::collections::HashMap;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use super::{DatasetManifest, LabeledExample, Split};
use crate::error::{check_len, Error, Result};

const MAGIC: &str = "# auxlearn-dataset v1";

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    num_classes: usize,
    dim: usize,
    ids: Vec<String>,
    examples: Vec<LabeledExample>,
}

impl LabeledDataset {
    pub fn new(
        num_classes: usize,
        dim: usize,
        ids: Vec<String>,
        examples: Vec<LabeledExample>,
    ) -> Result<Self> {
        check_len("dataset ids vs examples", examples.len(), ids.len())?;
        if dim == 0 {
            return Err(Error::domain("feature dimension must be positive"));
        }
        for ex in &examples {
            check_len("example features", dim, ex.features.len())?;
            if ex.label >= num_classes {
                return Err(Error::domain(format!(
                    "label {} out of range for {num_classes} classes",
                    ex.label
                )));
            }
        }
        Ok(LabeledDataset {
            num_classes,
            dim,
            ids,
            examples,
        })
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn examples(&self) -> &[LabeledExample] {
        &self.examples
    }

    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }

    /// Examples listed in `split` of `manifest`, in manifest order.
    /// Labels must agree between the two sources.
    pub fn select(&self, manifest: &DatasetManifest, split: Split) -> Result<Vec<LabeledExample>> {
        let by_id: HashMap<&str, &LabeledExample> = self
            .ids
            .iter()
            .map(String::as_str)
            .zip(&self.examples)
            .collect();
        manifest
            .split_records(split)
            .map(|r| {
                let ex = by_id.get(r.example_id.as_str()).ok_or_else(|| {
                    Error::domain(format!(
                        "manifest example '{}' not in dataset",
                        r.example_id
                    ))
                })?;
                if ex.label != r.class_label {
                    return Err(Error::domain(format!(
                        "example '{}' has label {} in the dataset but {} in the manifest",
                        r.example_id, ex.label, r.class_label
                    )));
                }
                Ok((*ex).clone())
            })
            .collect()
    }

    pub fn write<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "{MAGIC} k={} dim={}", self.num_classes, self.dim)?;
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(out);
        let mut header = vec!["example_id".to_string()];
        header.extend((0..self.dim).map(|i| format!("f{i}")));
        header.push("label".into());
        w.write_record(&header)?;
        let mut row = Vec::with_capacity(self.dim + 2);
        for (id, ex) in self.ids.iter().zip(&self.examples) {
            row.clear();
            row.push(id.clone());
            row.extend(ex.features.iter().map(f64::to_string));
            row.push(ex.label.to_string());
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read<R: Read>(input: R) -> Result<Self> {
        let mut input = BufReader::new(input);
        let mut first = String::new();
        input.read_line(&mut first)?;
        let (k, dim) = parse_preamble(first.trim_end()).ok_or_else(|| {
            Error::parse(1, format!("expected '{MAGIC} k=<classes> dim=<features>'"))
        })?;
        let mut rdr = csv::ReaderBuilder::new().from_reader(input);
        let headers = rdr.headers()?.clone();
        if headers.len() != dim + 2 {
            return Err(Error::parse(
                2,
                format!("expected {} columns, found {}", dim + 2, headers.len()),
            ));
        }
        let mut ids = Vec::new();
        let mut examples = Vec::new();
        for row in rdr.records() {
            let row = row?;
            let line = row.position().map_or(0, |p| p.line() as usize + 1);
            let features = row
                .iter()
                .skip(1)
                .take(dim)
                .map(|v| v.parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| Error::parse(line, format!("bad feature: {e}")))?;
            let label = row[dim + 1]
                .parse()
                .map_err(|e| Error::parse(line, format!("bad label: {e}")))?;
            ids.push(row[0].to_string());
            examples.push(
                LabeledExample::new(features, label)
                    .map_err(|e| Error::parse(line, e.to_string()))?,
            );
        }
        LabeledDataset::new(k, dim, ids, examples)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = std::fs::File::create(path).map_err(|e| Error::from(e).in_file(path))?;
        self.write(std::io::BufWriter::new(file))
            .map_err(|e| e.in_file(path))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|e| Error::from(e).in_file(path))?;
        LabeledDataset::read(file).map_err(|e| e.in_file(path))
    }
}

fn parse_preamble(line: &str) -> Option<(usize, usize)> {
    let rest = line.strip_prefix(MAGIC)?;
    let mut k = None;
    let mut dim = None;
    for field in rest.split_whitespace() {
        match field.split_once('=')? {
            ("k", v) => k = v.parse().ok(),
            ("dim", v) => dim = v.parse().ok(),
            _ => return None,
        }
    }
    Some((k?, dim?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curation::ManifestRecord;

    fn sample() -> LabeledDataset {
        LabeledDataset::new(
            3,
            2,
            vec!["a".into(), "b".into(), "c".into()],
            vec![
                LabeledExample::new(vec![0.1, -1.0], 0).unwrap(),
                LabeledExample::new(vec![1.0 / 3.0, 0.0], 2).unwrap(),
                LabeledExample::new(vec![-0.0, 5e-324], 1).unwrap(),
            ],
        )
        .unwrap()
    }

    #[test]
    fn round_trip() {
        let d = sample();
        let mut bytes = Vec::new();
        d.write(&mut bytes).unwrap();
        let text = String::from_utf8(bytes.clone()).unwrap();
        assert!(text.starts_with("# auxlearn-dataset v1 k=3 dim=2\nexample_id,f0,f1,label\n"));
        let back = LabeledDataset::read(bytes.as_slice()).unwrap();
        assert_eq!(back, d);
        assert_eq!(
            back.examples()[2].features[1].to_bits(),
            5e-324f64.to_bits()
        );
    }

    #[test]
    fn read_rejects_out_of_range_feature() {
        let text = "# auxlearn-dataset v1 k=2 dim=1\nexample_id,f0,label\na,1.5,0\n";
        assert!(matches!(
            LabeledDataset::read(text.as_bytes()),
            Err(Error::Parse { line: 3, .. })
        ));
        assert!(LabeledDataset::read("nonsense\n".as_bytes()).is_err());
    }

    #[test]
    fn select_joins_on_id() {
        let d = sample();
        let mut recs = vec![
            ManifestRecord::unsplit("c", 1),
            ManifestRecord::unsplit("a", 0),
            ManifestRecord::unsplit("b", 2),
        ];
        recs[2].split = Split::Test;
        let m = DatasetManifest::new(vec!["x".into(), "y".into(), "z".into()], recs).unwrap();
        let train = d.select(&m, Split::Train).unwrap();
        assert_eq!(
            train.iter().map(|e| e.label).collect::<Vec<_>>(),
            vec![1, 0]
        );
        let test = d.select(&m, Split::Test).unwrap();
        assert_eq!(test[0].label, 2);

        let wrong = DatasetManifest::new(
            vec!["x".into(), "y".into(), "z".into()],
            vec![ManifestRecord::unsplit("a", 1)],
        )
        .unwrap();
        assert!(d.select(&wrong, Split::Train).is_err());
    }
}
