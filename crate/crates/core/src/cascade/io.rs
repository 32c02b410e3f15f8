//! Line-delimited JSON dataset files: one header line, then one record per
//! cascade.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{indicator, ones, Cascade, DatasetBundle, Mechanism, SimConfig};
use crate::error::{Error, Result};

const FORMAT: &str = "pdsl-dataset";
const VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetHeader {
    pub format: String,
    pub version: u32,
    /// Graph file the cascades were simulated on.
    pub graph: String,
    pub node_count: usize,
    pub config: SimConfig,
    pub train_count: usize,
    pub test_count: usize,
    pub manifest_hash: String,
}

impl DatasetHeader {
    pub fn new(graph: &str, bundle: &DatasetBundle, manifest_hash: &str) -> Self {
        Self {
            format: FORMAT.into(),
            version: VERSION,
            graph: graph.into(),
            node_count: bundle.node_count,
            config: bundle.config.clone(),
            train_count: bundle.train.len(),
            test_count: bundle.test.len(),
            manifest_hash: manifest_hash.into(),
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum Split {
    Train,
    Test,
}

#[derive(Serialize, Deserialize)]
struct Record {
    split: Split,
    mechanism: Mechanism,
    seed: u64,
    sources: Vec<usize>,
    snapshots: Vec<Vec<usize>>,
    result: Vec<usize>,
    infection_order: Vec<(usize, usize)>,
}

impl Record {
    fn from_cascade(split: Split, c: &Cascade) -> Self {
        Self {
            split,
            mechanism: c.mechanism,
            seed: c.seed,
            sources: ones(&c.sources),
            snapshots: c.snapshots.iter().map(|s| ones(s)).collect(),
            result: ones(&c.result),
            infection_order: c.infection_order.clone(),
        }
    }

    fn into_cascade(self, n: usize) -> Result<(Split, Cascade)> {
        let check = |ids: &[usize]| match ids.iter().find(|&&i| i >= n) {
            Some(&id) => Err(Error::NodeOutOfRange { id, n }),
            None => Ok(()),
        };
        check(&self.sources)?;
        check(&self.result)?;
        for s in &self.snapshots {
            check(s)?;
        }
        let c = Cascade {
            mechanism: self.mechanism,
            seed: self.seed,
            sources: indicator(n, &self.sources),
            infection_order: self.infection_order,
            snapshots: self.snapshots.iter().map(|s| indicator(n, s)).collect(),
            result: indicator(n, &self.result),
        };
        Ok((self.split, c))
    }
}

pub fn dataset_to_string(header: &DatasetHeader, bundle: &DatasetBundle) -> Result<String> {
    let mut out = serde_json::to_string(header)?;
    out.push('\n');
    let records = bundle
        .train
        .iter()
        .map(|c| Record::from_cascade(Split::Train, c))
        .chain(bundle.test.iter().map(|c| Record::from_cascade(Split::Test, c)));
    for r in records {
        writeln!(out, "{}", serde_json::to_string(&r)?).unwrap();
    }
    Ok(out)
}

pub fn dataset_from_str(text: &str, origin: &str) -> Result<(DatasetHeader, DatasetBundle)> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let parse_err = |line: usize, msg: String| Error::Parse {
        path: origin.into(),
        line: line + 1,
        msg,
    };
    let (i, first) = lines
        .next()
        .ok_or_else(|| parse_err(0, "empty dataset file".into()))?;
    let header: DatasetHeader =
        serde_json::from_str(first).map_err(|e| parse_err(i, e.to_string()))?;
    if header.format != FORMAT {
        return Err(parse_err(i, format!("not a dataset file ({})", header.format)));
    }
    if header.version != VERSION {
        return Err(Error::Version(header.version));
    }
    let n = header.node_count;
    let mut bundle = DatasetBundle {
        node_count: n,
        config: header.config.clone(),
        train: Vec::with_capacity(header.train_count),
        test: Vec::with_capacity(header.test_count),
    };
    for (i, line) in lines {
        let record: Record = serde_json::from_str(line).map_err(|e| parse_err(i, e.to_string()))?;
        match record.into_cascade(n)? {
            (Split::Train, c) => bundle.train.push(c),
            (Split::Test, c) => bundle.test.push(c),
        }
    }
    if bundle.train.len() != header.train_count || bundle.test.len() != header.test_count {
        return Err(parse_err(
            0,
            format!(
                "header promises {}/{} cascades, file holds {}/{}",
                header.train_count,
                header.test_count,
                bundle.train.len(),
                bundle.test.len()
            ),
        ));
    }
    Ok((header, bundle))
}

pub fn write_dataset(
    path: impl AsRef<Path>,
    header: &DatasetHeader,
    bundle: &DatasetBundle,
) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, dataset_to_string(header, bundle)?).map_err(|e| Error::io(path, e))
}

pub fn read_dataset(path: impl AsRef<Path>) -> Result<(DatasetHeader, DatasetBundle)> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    dataset_from_str(&text, &path.display().to_string())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cascade::build_dataset;
    use crate::graph::barabasi_albert;
    use crate::rng::seeded;

    #[test]
    fn round_trip_is_exact() {
        let g = barabasi_albert(60, 2, &mut seeded(1))
            .unwrap()
            .assign_edge_weights(&mut seeded(2));
        let cfg = SimConfig {
            mechanism: Mechanism::Sir,
            seed: 4,
            ..SimConfig::default()
        };
        let bundle = build_dataset(&g, &cfg, 12).unwrap();
        let header = DatasetHeader::new("ba.txt", &bundle, "abc");
        let text = dataset_to_string(&header, &bundle).unwrap();
        let (h2, b2) = dataset_from_str(&text, "mem").unwrap();
        assert_eq!(h2, header);
        assert_eq!(b2, bundle);
        assert_eq!(dataset_to_string(&h2, &b2).unwrap(), text);
    }

    #[test]
    fn rejects_truncated_file() {
        let g = barabasi_albert(60, 2, &mut seeded(1))
            .unwrap()
            .assign_edge_weights(&mut seeded(2));
        let bundle = build_dataset(&g, &SimConfig::default(), 5).unwrap();
        let header = DatasetHeader::new("g", &bundle, "h");
        let text = dataset_to_string(&header, &bundle).unwrap();
        let cut: String = text.lines().take(3).map(|l| format!("{l}\n")).collect();
        assert!(dataset_from_str(&cut, "mem").is_err());
    }
}
