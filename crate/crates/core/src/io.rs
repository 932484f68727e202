//! Dataset directory IO.
//!
//! A dataset directory holds `nodes.jsonl` (one `{"id", "text", "label"}`
//! object per line), `edges.csv` (header `src,dst`, string ids), and an
//! optional `splits.json` (`{"train": [...], "val": [...], "test": [...]}`).
//! Node ids are assigned densely in file order; the label vocabulary is
//! derived by first appearance.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufRead, BufReader, Write as _};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{GraphError, Split, TextAttributedGraph};

#[derive(Debug, Error)]
pub enum DatasetIoError {
    #[error("missing file {0}")]
    MissingFile(String),
    #[error("io error on {file}: {source}")]
    Io {
        file: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{file}:{line}: malformed row: {message}")]
    MalformedRow { file: String, line: usize, message: String },
    #[error("{file}:{line}: duplicate node id {id:?}")]
    DuplicateId { file: String, line: usize, id: String },
    #[error("{file}:{line}: unknown node id {id:?}")]
    UnknownId { file: String, line: usize, id: String },
    #[error("{file}:{line}: self-loop on {id:?} rejected")]
    SelfLoopRow { file: String, line: usize, id: String },
    #[error("splits.json: unknown node id {0:?}")]
    SplitUnknownNode(String),
    #[error("splits.json: node {0:?} assigned to more than one split")]
    SplitDuplicateNode(String),
    #[error("splits.json: {0} nodes have no split assignment")]
    SplitMissingNodes(usize),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

#[derive(Debug, Serialize, Deserialize)]
struct NodeRow {
    id: String,
    text: String,
    label: String,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SplitsFile {
    train: Vec<String>,
    val: Vec<String>,
    test: Vec<String>,
}

/// A loaded dataset plus whether the directory shipped explicit splits.
#[derive(Debug, Clone)]
pub struct LoadedDataset {
    pub graph: TextAttributedGraph,
    pub splits_present: bool,
}

/// Load and validate a dataset directory. Duplicate and reversed edge rows
/// are deduplicated; self-loop rows are rejected with their line number.
/// When `splits.json` is absent every node is tagged train and the caller is
/// expected to run `split_nodes`.
pub fn load_dataset(dir: &Path) -> Result<LoadedDataset, DatasetIoError> {
    let nodes_path = dir.join("nodes.jsonl");
    let edges_path = dir.join("edges.csv");
    if !nodes_path.exists() {
        return Err(DatasetIoError::MissingFile(nodes_path.display().to_string()));
    }
    if !edges_path.exists() {
        return Err(DatasetIoError::MissingFile(edges_path.display().to_string()));
    }

    let nodes_file = "nodes.jsonl".to_string();
    let reader = BufReader::new(File::open(&nodes_path).map_err(|source| DatasetIoError::Io {
        file: nodes_file.clone(),
        source,
    })?);
    let mut texts = Vec::new();
    let mut labels = Vec::new();
    let mut external_ids = Vec::new();
    let mut id_index: BTreeMap<String, usize> = BTreeMap::new();
    let mut class_names: Vec<String> = Vec::new();
    let mut class_index: BTreeMap<String, usize> = BTreeMap::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line.map_err(|source| DatasetIoError::Io { file: nodes_file.clone(), source })?;
        if line.trim().is_empty() {
            continue;
        }
        let row: NodeRow = serde_json::from_str(&line).map_err(|e| DatasetIoError::MalformedRow {
            file: nodes_file.clone(),
            line: lineno + 1,
            message: e.to_string(),
        })?;
        if id_index.contains_key(&row.id) {
            return Err(DatasetIoError::DuplicateId {
                file: nodes_file,
                line: lineno + 1,
                id: row.id,
            });
        }
        let label = *class_index.entry(row.label.clone()).or_insert_with(|| {
            class_names.push(row.label.clone());
            class_names.len() - 1
        });
        id_index.insert(row.id.clone(), texts.len());
        external_ids.push(row.id);
        texts.push(row.text);
        labels.push(label);
    }

    let edges_file = "edges.csv".to_string();
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_path(&edges_path).map_err(
        |e| DatasetIoError::MalformedRow { file: edges_file.clone(), line: 1, message: e.to_string() },
    )?;
    {
        let headers = rdr.headers().map_err(|e| DatasetIoError::MalformedRow {
            file: edges_file.clone(),
            line: 1,
            message: e.to_string(),
        })?;
        if headers.len() != 2 || &headers[0] != "src" || &headers[1] != "dst" {
            return Err(DatasetIoError::MalformedRow {
                file: edges_file,
                line: 1,
                message: format!("expected header src,dst; got {headers:?}"),
            });
        }
    }
    let mut edges = Vec::new();
    for (recno, record) in rdr.records().enumerate() {
        let line = recno + 2; // 1-based, after the header
        let record = record.map_err(|e| DatasetIoError::MalformedRow {
            file: edges_file.clone(),
            line,
            message: e.to_string(),
        })?;
        if record.len() != 2 {
            return Err(DatasetIoError::MalformedRow {
                file: edges_file,
                line,
                message: format!("expected 2 fields, got {}", record.len()),
            });
        }
        let lookup = |id: &str| -> Result<usize, DatasetIoError> {
            id_index.get(id).copied().ok_or_else(|| DatasetIoError::UnknownId {
                file: edges_file.clone(),
                line,
                id: id.to_string(),
            })
        };
        let u = lookup(&record[0])?;
        let v = lookup(&record[1])?;
        if u == v {
            return Err(DatasetIoError::SelfLoopRow {
                file: edges_file,
                line,
                id: record[0].to_string(),
            });
        }
        edges.push((u, v));
    }

    let splits_path = dir.join("splits.json");
    let (split, splits_present) = if splits_path.exists() {
        let raw = fs::read_to_string(&splits_path).map_err(|source| DatasetIoError::Io {
            file: "splits.json".into(),
            source,
        })?;
        let parsed: SplitsFile =
            serde_json::from_str(&raw).map_err(|e| DatasetIoError::MalformedRow {
                file: "splits.json".into(),
                line: 0,
                message: e.to_string(),
            })?;
        let mut split = vec![None; texts.len()];
        for (ids, tag) in
            [(&parsed.train, Split::Train), (&parsed.val, Split::Val), (&parsed.test, Split::Test)]
        {
            for id in ids {
                let &u = id_index
                    .get(id)
                    .ok_or_else(|| DatasetIoError::SplitUnknownNode(id.clone()))?;
                if split[u].is_some() {
                    return Err(DatasetIoError::SplitDuplicateNode(id.clone()));
                }
                split[u] = Some(tag);
            }
        }
        let missing = split.iter().filter(|s| s.is_none()).count();
        if missing > 0 {
            return Err(DatasetIoError::SplitMissingNodes(missing));
        }
        (split.into_iter().map(|s| s.expect("checked above")).collect(), true)
    } else {
        (vec![Split::Train; texts.len()], false)
    };

    let graph = TextAttributedGraph::new(texts, labels, class_names, external_ids, edges, split)?;
    Ok(LoadedDataset { graph, splits_present })
}

/// Write a dataset directory in the canonical on-disk form. Loading, saving,
/// and reloading yields an identical graph.
pub fn save_dataset(graph: &TextAttributedGraph, dir: &Path) -> Result<(), DatasetIoError> {
    fs::create_dir_all(dir)
        .map_err(|source| DatasetIoError::Io { file: dir.display().to_string(), source })?;
    let io_err = |file: &str| {
        let file = file.to_string();
        move |source: std::io::Error| DatasetIoError::Io { file: file.clone(), source }
    };

    let mut nodes = File::create(dir.join("nodes.jsonl")).map_err(io_err("nodes.jsonl"))?;
    for u in 0..graph.node_count() {
        let row = NodeRow {
            id: graph.external_id(u).to_string(),
            text: graph.text(u).to_string(),
            label: graph.class_names()[graph.label(u)].clone(),
        };
        let line = serde_json::to_string(&row).expect("node row serializes");
        writeln!(nodes, "{line}").map_err(io_err("nodes.jsonl"))?;
    }

    let mut edges = File::create(dir.join("edges.csv")).map_err(io_err("edges.csv"))?;
    writeln!(edges, "src,dst").map_err(io_err("edges.csv"))?;
    for (u, v) in graph.edges() {
        writeln!(edges, "{},{}", graph.external_id(u), graph.external_id(v))
            .map_err(io_err("edges.csv"))?;
    }

    let mut buckets: [Vec<String>; 3] = [Vec::new(), Vec::new(), Vec::new()];
    for u in 0..graph.node_count() {
        let idx = match graph.split_of(u) {
            Split::Train => 0,
            Split::Val => 1,
            Split::Test => 2,
        };
        buckets[idx].push(graph.external_id(u).to_string());
    }
    let [train, val, test] = buckets;
    let splits = SplitsFile { train, val, test };
    let raw = serde_json::to_string_pretty(&splits).expect("splits serialize");
    fs::write(dir.join("splits.json"), raw).map_err(io_err("splits.json"))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use tempfile::tempdir;

    fn write_dataset(dir: &Path, nodes: &str, edges: &str, splits: Option<&str>) {
        fs::create_dir_all(dir).unwrap();
        let mut f = File::create(dir.join("nodes.jsonl")).unwrap();
        f.write_all(nodes.as_bytes()).unwrap();
        let mut f = File::create(dir.join("edges.csv")).unwrap();
        f.write_all(edges.as_bytes()).unwrap();
        if let Some(s) = splits {
            fs::write(dir.join("splits.json"), s).unwrap();
        }
    }

    const NODES: &str = r#"{"id":"a","text":"alpha text","label":"x"}
{"id":"b","text":"beta text","label":"y"}
{"id":"c","text":"gamma text","label":"x"}
"#;

    #[test]
    fn loads_and_dedupes_reversed_edges() {
        let dir = tempdir().unwrap();
        write_dataset(dir.path(), NODES, "src,dst\na,b\nb,a\n", None);
        let loaded = load_dataset(dir.path()).unwrap();
        assert_eq!(loaded.graph.node_count(), 3);
        assert_eq!(loaded.graph.edge_count(), 1);
        assert!(!loaded.splits_present);
        // label vocabulary by first appearance: x=0, y=1
        assert_eq!(loaded.graph.label(0), 0);
        assert_eq!(loaded.graph.label(1), 1);
    }

    #[test]
    fn missing_file_reported() {
        let dir = tempdir().unwrap();
        let err = load_dataset(dir.path()).unwrap_err();
        assert!(matches!(err, DatasetIoError::MissingFile(_)));
    }

    #[test]
    fn malformed_node_row_reports_line() {
        let dir = tempdir().unwrap();
        write_dataset(dir.path(), "{\"id\":\"a\"}\n", "src,dst\n", None);
        match load_dataset(dir.path()).unwrap_err() {
            DatasetIoError::MalformedRow { line, .. } => assert_eq!(line, 1),
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn self_loop_row_reports_line() {
        let dir = tempdir().unwrap();
        write_dataset(dir.path(), NODES, "src,dst\na,b\nb,b\n", None);
        match load_dataset(dir.path()).unwrap_err() {
            DatasetIoError::SelfLoopRow { line, .. } => assert_eq!(line, 3),
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn unknown_edge_id_reports_line() {
        let dir = tempdir().unwrap();
        write_dataset(dir.path(), NODES, "src,dst\na,zz\n", None);
        match load_dataset(dir.path()).unwrap_err() {
            DatasetIoError::UnknownId { line, id, .. } => {
                assert_eq!(line, 2);
                assert_eq!(id, "zz");
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn splits_must_cover_every_node() {
        let dir = tempdir().unwrap();
        write_dataset(
            dir.path(),
            NODES,
            "src,dst\na,b\n",
            Some(r#"{"train":["a"],"val":["b"],"test":[]}"#),
        );
        match load_dataset(dir.path()).unwrap_err() {
            DatasetIoError::SplitMissingNodes(n) => assert_eq!(n, 1),
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn splits_reject_unknown_node() {
        let dir = tempdir().unwrap();
        write_dataset(
            dir.path(),
            NODES,
            "src,dst\n",
            Some(r#"{"train":["a","b","c"],"val":[],"test":["zz"]}"#),
        );
        assert!(matches!(
            load_dataset(dir.path()).unwrap_err(),
            DatasetIoError::SplitUnknownNode(id) if id == "zz"
        ));
    }

    #[test]
    fn load_save_reload_round_trip() {
        let dir = tempdir().unwrap();
        write_dataset(
            dir.path(),
            NODES,
            "src,dst\na,b\nc,a\n",
            Some(r#"{"train":["a"],"val":["b"],"test":["c"]}"#),
        );
        let first = load_dataset(dir.path()).unwrap();
        let out = tempdir().unwrap();
        save_dataset(&first.graph, out.path()).unwrap();
        let second = load_dataset(out.path()).unwrap();
        assert_eq!(first.graph, second.graph);
        assert!(second.splits_present);
    }
}
