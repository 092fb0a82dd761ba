//! Dataset ingestion and export.
//!
//! Two on-disk layouts are understood:
//!
//! * CSV directory: `edges.csv` (`src,dst`), `labels.csv` (`node,label`) and
//!   optionally `features.csv` (`node,f0,...`) and `annotations.csv`
//!   (`node,generation,level`). Headers are optional.
//! * Planetoid raw citation files: `<name>.content` with rows
//!   `id<TAB>f0..fk<TAB>label` and `<name>.cites` with rows `cited<TAB>citing`.

use std::collections::HashMap;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use super::{Features, Graph};
use crate::error::{Error, Result};
use crate::generators::{HierarchyLevel, HnmAnnotation};

/// A graph loaded from disk plus optional hierarchy annotations.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub name: String,
    pub graph: Graph,
    pub annotations: Option<HnmAnnotation>,
    /// Citation edges dropped because an endpoint was missing from `.content`.
    pub dropped_edges: usize,
}

/// Loads a dataset directory, detecting the layout from the files present.
pub fn load_dataset(dir: &Path) -> Result<Dataset> {
    let name = dir
        .file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    if dir.join("edges.csv").exists() {
        let graph = load_csv_graph(dir)?;
        let ann_path = dir.join("annotations.csv");
        let annotations = if ann_path.exists() {
            Some(read_annotations(&ann_path, graph.node_count())?)
        } else {
            None
        };
        return Ok(Dataset {
            name,
            graph,
            annotations,
            dropped_edges: 0,
        });
    }
    let content = find_with_extension(dir, "content")?;
    let cites = find_with_extension(dir, "cites")?;
    let (graph, dropped_edges) = load_planetoid(&content, &cites)?;
    Ok(Dataset {
        name,
        graph,
        annotations: None,
        dropped_edges,
    })
}

fn find_with_extension(dir: &Path, ext: &str) -> Result<PathBuf> {
    let entries = fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut found: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == ext))
        .collect();
    found.sort();
    found.into_iter().next().ok_or_else(|| {
        Error::InvalidArgument(format!(
            "{} has neither edges.csv nor a *.{ext} file",
            dir.display()
        ))
    })
}

fn read_lines(path: &Path) -> Result<Vec<(usize, String)>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim().to_string()))
        .filter(|(_, l)| !l.is_empty())
        .collect())
}

/// Parses comma-separated fields; returns `None` when the first field is not
/// an integer, which marks a header row.
fn numeric_row(line: &str) -> Option<Vec<&str>> {
    let fields: Vec<&str> = line.split(',').map(str::trim).collect();
    fields[0].parse::<usize>().ok().map(|_| fields)
}

fn parse_usize(path: &Path, line: usize, s: &str) -> Result<usize> {
    s.parse()
        .map_err(|_| Error::parse(path, line, format!("expected a node id, found {s:?}")))
}

/// Reads the CSV layout. The node count is one past the largest id seen in
/// any of the files.
pub fn load_csv_graph(dir: &Path) -> Result<Graph> {
    let edge_path = dir.join("edges.csv");
    let mut edges = Vec::new();
    let mut n = 0usize;
    for (idx, (lineno, line)) in read_lines(&edge_path)?.into_iter().enumerate() {
        let Some(fields) = numeric_row(&line) else {
            if idx == 0 {
                continue;
            }
            return Err(Error::parse(&edge_path, lineno, "expected src,dst"));
        };
        if fields.len() != 2 {
            return Err(Error::parse(&edge_path, lineno, "expected src,dst"));
        }
        let u = parse_usize(&edge_path, lineno, fields[0])?;
        let v = parse_usize(&edge_path, lineno, fields[1])?;
        n = n.max(u + 1).max(v + 1);
        edges.push((u, v));
    }

    let mut labels_raw = Vec::new();
    let label_path = dir.join("labels.csv");
    if label_path.exists() {
        for (idx, (lineno, line)) in read_lines(&label_path)?.into_iter().enumerate() {
            let Some(fields) = numeric_row(&line) else {
                if idx == 0 {
                    continue;
                }
                return Err(Error::parse(&label_path, lineno, "expected node,label"));
            };
            if fields.len() != 2 {
                return Err(Error::parse(&label_path, lineno, "expected node,label"));
            }
            let v = parse_usize(&label_path, lineno, fields[0])?;
            let y = parse_usize(&label_path, lineno, fields[1])?;
            n = n.max(v + 1);
            labels_raw.push((v, y));
        }
    }

    let mut feature_rows: Vec<(usize, Vec<f64>)> = Vec::new();
    let feat_path = dir.join("features.csv");
    if feat_path.exists() {
        for (idx, (lineno, line)) in read_lines(&feat_path)?.into_iter().enumerate() {
            let Some(fields) = numeric_row(&line) else {
                if idx == 0 {
                    continue;
                }
                return Err(Error::parse(&feat_path, lineno, "expected node,f0,..."));
            };
            let v = parse_usize(&feat_path, lineno, fields[0])?;
            let row = fields[1..]
                .iter()
                .map(|s| {
                    s.parse::<f64>()
                        .map_err(|_| Error::parse(&feat_path, lineno, format!("bad value {s:?}")))
                })
                .collect::<Result<Vec<_>>>()?;
            n = n.max(v + 1);
            feature_rows.push((v, row));
        }
    }

    let mut g = Graph::from_edges(n, edges)?;
    if !labels_raw.is_empty() {
        let classes = labels_raw.iter().map(|&(_, y)| y + 1).max().unwrap_or(0);
        let mut labels = vec![None; n];
        for (v, y) in labels_raw {
            labels[v] = Some(y);
        }
        g = g.with_labels(labels, classes)?;
    }
    if !feature_rows.is_empty() {
        let d = feature_rows[0].1.len();
        let mut dense = vec![vec![0.0; d]; n];
        for (v, row) in feature_rows {
            if row.len() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    got: row.len(),
                });
            }
            dense[v] = row;
        }
        g = g.with_features(Features::from_dense_rows(&dense)?)?;
    }
    Ok(g)
}

/// Reads Planetoid raw `.content`/`.cites` files. String ids and labels are
/// interned to dense integers in first-seen order. Returns the graph and the
/// number of citation rows dropped for referencing unknown ids.
pub fn load_planetoid(content: &Path, cites: &Path) -> Result<(Graph, usize)> {
    let mut ids: HashMap<String, usize> = HashMap::new();
    let mut classes: HashMap<String, usize> = HashMap::new();
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for (lineno, line) in read_lines(content)? {
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() < 3 {
            return Err(Error::parse(
                content,
                lineno,
                "expected id, features, label",
            ));
        }
        let id = fields[0].to_string();
        if ids.contains_key(&id) {
            return Err(Error::parse(content, lineno, format!("duplicate id {id}")));
        }
        let next = ids.len();
        ids.insert(id, next);
        let row = fields[1..fields.len() - 1]
            .iter()
            .map(|s| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::parse(content, lineno, format!("bad feature {s:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
        let label = fields[fields.len() - 1].trim().to_string();
        let next_class = classes.len();
        labels.push(Some(*classes.entry(label).or_insert(next_class)));
    }

    let mut edges = Vec::new();
    let mut dropped = 0usize;
    for (lineno, line) in read_lines(cites)? {
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 2 {
            return Err(Error::parse(cites, lineno, "expected cited<TAB>citing"));
        }
        match (ids.get(fields[0]), ids.get(fields[1])) {
            (Some(&a), Some(&b)) => edges.push((a, b)),
            _ => dropped += 1,
        }
    }
    if dropped > 0 {
        log::warn!(
            "{}: dropped {dropped} citation rows referencing unknown ids",
            cites.display()
        );
    }
    let n = ids.len();
    let g = Graph::from_edges(n, edges)?
        .with_labels(labels, classes.len())?
        .with_features(Features::from_dense_rows(&rows)?)?;
    Ok((g, dropped))
}

fn create(path: &Path) -> Result<BufWriter<fs::File>> {
    Ok(BufWriter::new(
        fs::File::create(path).map_err(|e| Error::io(path, e))?,
    ))
}

/// Writes the CSV layout (plus `annotations.csv` when given).
pub fn write_csv_dataset(dir: &Path, g: &Graph, annotations: Option<&HnmAnnotation>) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let io_err = |p: &Path| {
        let p = p.to_path_buf();
        move |e| Error::io(p.clone(), e)
    };

    let path = dir.join("edges.csv");
    let mut w = create(&path)?;
    writeln!(w, "src,dst").map_err(io_err(&path))?;
    for &(u, v) in g.edges() {
        writeln!(w, "{u},{v}").map_err(io_err(&path))?;
    }
    w.flush().map_err(io_err(&path))?;

    if g.labels().iter().any(Option::is_some) {
        let path = dir.join("labels.csv");
        let mut w = create(&path)?;
        writeln!(w, "node,label").map_err(io_err(&path))?;
        for (v, y) in g.labels().iter().enumerate() {
            if let Some(y) = y {
                writeln!(w, "{v},{y}").map_err(io_err(&path))?;
            }
        }
        w.flush().map_err(io_err(&path))?;
    }

    if let Some(x) = g.features() {
        let path = dir.join("features.csv");
        let mut w = create(&path)?;
        let header: Vec<String> = (0..x.ncols()).map(|j| format!("f{j}")).collect();
        writeln!(w, "node,{}", header.join(",")).map_err(io_err(&path))?;
        for v in 0..x.nrows() {
            let mut row = vec![0.0; x.ncols()];
            for (j, val) in x.row(v) {
                row[j] = val;
            }
            let row: Vec<String> = row.iter().map(|f| f.to_string()).collect();
            writeln!(w, "{v},{}", row.join(",")).map_err(io_err(&path))?;
        }
        w.flush().map_err(io_err(&path))?;
    }

    if let Some(ann) = annotations {
        let path = dir.join("annotations.csv");
        let mut w = create(&path)?;
        writeln!(w, "node,generation,level").map_err(io_err(&path))?;
        for v in 0..ann.generation.len() {
            writeln!(w, "{v},{},{}", ann.generation[v], ann.level(v)).map_err(io_err(&path))?;
        }
        w.flush().map_err(io_err(&path))?;
    }
    Ok(())
}

/// Reads `annotations.csv`. The level column is informational; levels are
/// recomputed from generations.
pub fn read_annotations(path: &Path, n: usize) -> Result<HnmAnnotation> {
    let mut generation = vec![0usize; n];
    let mut seen = vec![false; n];
    for (idx, (lineno, line)) in read_lines(path)?.into_iter().enumerate() {
        let Some(fields) = numeric_row(&line) else {
            if idx == 0 {
                continue;
            }
            return Err(Error::parse(path, lineno, "expected node,generation,level"));
        };
        if fields.len() < 2 {
            return Err(Error::parse(path, lineno, "expected node,generation,level"));
        }
        let v = parse_usize(path, lineno, fields[0])?;
        if v >= n {
            return Err(Error::NodeOutOfRange { id: v, n });
        }
        generation[v] = parse_usize(path, lineno, fields[1])?;
        if let Some(level) = fields.get(2) {
            if level.parse::<HierarchyLevel>().is_err() {
                return Err(Error::parse(
                    path,
                    lineno,
                    format!("unknown level {level:?}"),
                ));
            }
        }
        seen[v] = true;
    }
    if let Some(v) = seen.iter().position(|s| !s) {
        return Err(Error::parse(path, 0, format!("node {v} has no annotation")));
    }
    let iterations = generation.iter().copied().max().unwrap_or(1);
    Ok(HnmAnnotation {
        generation,
        iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn planetoid_interning_and_dropped_edges() {
        let dir = tempfile::tempdir().unwrap();
        let content = dir.path().join("toy.content");
        let cites = dir.path().join("toy.cites");
        fs::write(
            &content,
            "p9\t1\t0\tTheory\np3\t0\t1\tAI\np7\t1\t1\tTheory\n",
        )
        .unwrap();
        fs::write(&cites, "p9\tp3\np3\tp7\np7\tghost\np3\tp9\n").unwrap();
        let ds = load_dataset(dir.path()).unwrap();
        let g = &ds.graph;
        assert_eq!(g.node_count(), 3);
        assert_eq!(g.edges(), &[(0, 1), (1, 2)]);
        assert_eq!(g.labels(), &[Some(0), Some(1), Some(0)]);
        assert_eq!(g.num_classes(), 2);
        assert_eq!(ds.dropped_edges, 1);
        assert_eq!(g.features().unwrap().ncols(), 2);
    }

    #[test]
    fn csv_with_and_without_headers() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("edges.csv"), "0,1\n1,2\n2,0\n").unwrap();
        fs::write(dir.path().join("labels.csv"), "node,label\n0,1\n2,0\n").unwrap();
        fs::write(dir.path().join("features.csv"), "0,1.5,0\n1,0,2\n2,1,1\n").unwrap();
        let g = load_dataset(dir.path()).unwrap().graph;
        assert_eq!(g.edge_count(), 3);
        assert_eq!(g.labels(), &[Some(1), None, Some(0)]);
        assert_eq!(g.features().unwrap().to_dense()[[1, 1]], 2.0);
    }

    #[test]
    fn csv_rejects_garbage_rows() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("edges.csv"), "src,dst\n0,1\nx,2\n").unwrap();
        assert!(matches!(
            load_dataset(dir.path()),
            Err(Error::Parse { line: 3, .. })
        ));
    }
}
