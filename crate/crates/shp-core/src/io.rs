//! File formats: events, count matrices, and edge lists as CSV; reports as
//! JSON. Writers are deterministic (fixed field order, fixed float
//! formatting), so identical runs produce byte-identical artifacts.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write as _};
use std::path::Path;

use serde::Serialize;

use crate::counts::BinnedCounts;
use crate::error::{Result, ShpError};
use crate::events::EventRecord;

/// Serde adapter for rates that may be infinite (`beta = inf` switches the
/// lagged terms off). JSON has no literal for infinity, so non-finite values
/// are written as strings; both numbers and strings are accepted on read.
pub mod float_or_inf {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else if *v > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_str("-inf")
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Str(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(x) => Ok(x),
            Raw::Str(s) => s.trim().parse::<f64>().map_err(serde::de::Error::custom),
        }
    }
}

fn io_err(path: &Path, source: std::io::Error) -> ShpError {
    ShpError::Io {
        path: path.display().to_string(),
        source,
    }
}

fn parse_err(path: &Path, line: u64, msg: impl Into<String>) -> ShpError {
    ShpError::Parse {
        path: path.display().to_string(),
        line,
        msg: msg.into(),
    }
}

/// Writes `event_type,timestamp` rows.
pub fn write_events_csv(path: &Path, events: &[EventRecord]) -> Result<()> {
    let mut out = BufWriter::new(File::create(path).map_err(|e| io_err(path, e))?);
    writeln!(out, "event_type,timestamp").map_err(|e| io_err(path, e))?;
    for r in events {
        writeln!(out, "{},{}", r.event_type, r.timestamp).map_err(|e| io_err(path, e))?;
    }
    out.flush().map_err(|e| io_err(path, e))
}

/// Reads `event_type,timestamp` rows. Ordering and range checks happen when
/// the records are assembled into a sequence.
pub fn read_events_csv(path: &Path) -> Result<Vec<EventRecord>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .from_reader(BufReader::new(
            File::open(path).map_err(|e| io_err(path, e))?,
        ));
    let mut events = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let line = i as u64 + 1;
        let rec = rec.map_err(|e| parse_err(path, line, e.to_string()))?;
        if i == 0 {
            if rec.len() != 2 || &rec[0] != "event_type" || &rec[1] != "timestamp" {
                return Err(parse_err(path, line, "expected header `event_type,timestamp`"));
            }
            continue;
        }
        if rec.len() != 2 {
            return Err(parse_err(path, line, format!("expected 2 fields, got {}", rec.len())));
        }
        let timestamp: f64 = rec[1]
            .trim()
            .parse()
            .map_err(|_| parse_err(path, line, format!("bad timestamp `{}`", &rec[1])))?;
        events.push(EventRecord {
            event_type: rec[0].to_string(),
            timestamp,
        });
    }
    Ok(events)
}

/// Writes a count matrix as `bin,<node>,<node>,...` with 1-based bin ids.
pub fn write_counts_csv(path: &Path, counts: &BinnedCounts) -> Result<()> {
    let mut out = BufWriter::new(File::create(path).map_err(|e| io_err(path, e))?);
    write!(out, "bin").map_err(|e| io_err(path, e))?;
    for name in counts.node_names() {
        write!(out, ",{name}").map_err(|e| io_err(path, e))?;
    }
    writeln!(out).map_err(|e| io_err(path, e))?;
    for k in 0..counts.n_bins() {
        write!(out, "{}", k + 1).map_err(|e| io_err(path, e))?;
        for v in 0..counts.n_nodes() {
            write!(out, ",{}", counts.get(k, v)).map_err(|e| io_err(path, e))?;
        }
        writeln!(out).map_err(|e| io_err(path, e))?;
    }
    out.flush().map_err(|e| io_err(path, e))
}

/// Reads a count matrix written by [`write_counts_csv`]. The file carries no
/// time scale, so the bin width is supplied by the caller.
pub fn read_counts_csv(path: &Path, delta: f64) -> Result<BinnedCounts> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .from_reader(BufReader::new(
            File::open(path).map_err(|e| io_err(path, e))?,
        ));
    let mut names: Vec<String> = Vec::new();
    let mut columns: Vec<Vec<u32>> = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let line = i as u64 + 1;
        let rec = rec.map_err(|e| parse_err(path, line, e.to_string()))?;
        if i == 0 {
            if rec.len() < 2 || &rec[0] != "bin" {
                return Err(parse_err(path, line, "expected header `bin,<node>,...`"));
            }
            names = rec.iter().skip(1).map(str::to_string).collect();
            columns = vec![Vec::new(); names.len()];
            continue;
        }
        if rec.len() != names.len() + 1 {
            return Err(parse_err(
                path,
                line,
                format!("expected {} fields, got {}", names.len() + 1, rec.len()),
            ));
        }
        let bin: usize = rec[0]
            .trim()
            .parse()
            .map_err(|_| parse_err(path, line, format!("bad bin id `{}`", &rec[0])))?;
        if bin != i {
            return Err(parse_err(
                path,
                line,
                format!("bin ids must be contiguous from 1; expected {i}, got {bin}"),
            ));
        }
        for (v, field) in rec.iter().skip(1).enumerate() {
            let x: u32 = field.trim().parse().map_err(|_| {
                parse_err(
                    path,
                    line,
                    format!("bad count `{}` for node `{}`", field, names[v]),
                )
            })?;
            columns[v].push(x);
        }
    }
    if names.is_empty() {
        return Err(parse_err(path, 1, "empty counts file"));
    }
    BinnedCounts::from_columns(names, delta, columns)
}

/// Writes a graph as `src,dst` edge rows (node names), sorted.
pub fn write_edge_list_csv(path: &Path, g: &crate::graph::CausalGraph) -> Result<()> {
    let mut out = BufWriter::new(File::create(path).map_err(|e| io_err(path, e))?);
    writeln!(out, "src,dst").map_err(|e| io_err(path, e))?;
    for (u, v) in g.edges() {
        writeln!(out, "{},{}", g.node_names()[u], g.node_names()[v])
            .map_err(|e| io_err(path, e))?;
    }
    out.flush().map_err(|e| io_err(path, e))
}

/// Reads `src,dst` edge rows as name pairs. Duplicate rows collapse when the
/// graph is built.
pub fn read_edge_list_csv(path: &Path) -> Result<Vec<(String, String)>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .from_reader(BufReader::new(
            File::open(path).map_err(|e| io_err(path, e))?,
        ));
    let mut edges = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let line = i as u64 + 1;
        let rec = rec.map_err(|e| parse_err(path, line, e.to_string()))?;
        if i == 0 {
            if rec.len() != 2 || &rec[0] != "src" || &rec[1] != "dst" {
                return Err(parse_err(path, line, "expected header `src,dst`"));
            }
            continue;
        }
        if rec.len() != 2 {
            return Err(parse_err(path, line, format!("expected 2 fields, got {}", rec.len())));
        }
        edges.push((rec[0].to_string(), rec[1].to_string()));
    }
    Ok(edges)
}

/// Writes any serializable report as pretty JSON with a trailing newline.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut out = BufWriter::new(File::create(path).map_err(|e| io_err(path, e))?);
    serde_json::to_writer_pretty(&mut out, value)
        .map_err(|e| parse_err(path, 0, e.to_string()))?;
    writeln!(out).map_err(|e| io_err(path, e))?;
    out.flush().map_err(|e| io_err(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::CausalGraph;

    fn names(list: &[&str]) -> Vec<String> {
        list.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn counts_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("counts.csv");
        let c = BinnedCounts::from_rows(
            names(&["a", "b"]),
            0.5,
            &[vec![1, 0], vec![0, 3], vec![2, 2]],
        )
        .unwrap();
        write_counts_csv(&path, &c).unwrap();
        let back = read_counts_csv(&path, 0.5).unwrap();
        assert_eq!(c, back);
    }

    #[test]
    fn counts_reject_bad_cells_with_line_number() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        std::fs::write(&path, "bin,a\n1,2\n2,oops\n").unwrap();
        match read_counts_csv(&path, 1.0).unwrap_err() {
            ShpError::Parse { line, .. } => assert_eq!(line, 3),
            other => panic!("expected Parse, got {other:?}"),
        }
    }

    #[test]
    fn counts_reject_gap_in_bin_ids() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("gap.csv");
        std::fs::write(&path, "bin,a\n1,0\n3,1\n").unwrap();
        assert!(matches!(
            read_counts_csv(&path, 1.0).unwrap_err(),
            ShpError::Parse { line: 3, .. }
        ));
    }

    #[test]
    fn events_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("events.csv");
        let events = vec![
            EventRecord {
                event_type: "a".into(),
                timestamp: 0.125,
            },
            EventRecord {
                event_type: "b".into(),
                timestamp: 2.5,
            },
        ];
        write_events_csv(&path, &events).unwrap();
        assert_eq!(read_events_csv(&path).unwrap(), events);
    }

    #[test]
    fn edge_list_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("graph.csv");
        let g = CausalGraph::with_edges(names(&["a", "b", "c"]), [(0, 2), (1, 2)]).unwrap();
        write_edge_list_csv(&path, &g).unwrap();
        let edges = read_edge_list_csv(&path).unwrap();
        assert_eq!(
            edges,
            vec![
                ("a".to_string(), "c".to_string()),
                ("b".to_string(), "c".to_string())
            ]
        );
    }

    #[test]
    fn missing_file_is_io_error() {
        let err = read_counts_csv(Path::new("/nonexistent/x.csv"), 1.0).unwrap_err();
        assert_eq!(err.class(), crate::error::ErrorClass::Io);
    }

    #[test]
    fn float_or_inf_round_trips_through_json() {
        #[derive(Debug, PartialEq, serde::Serialize, serde::Deserialize)]
        struct Holder {
            #[serde(with = "float_or_inf")]
            beta: f64,
        }
        for beta in [1.5, f64::INFINITY] {
            let h = Holder { beta };
            let s = serde_json::to_string(&h).unwrap();
            let back: Holder = serde_json::from_str(&s).unwrap();
            assert_eq!(h, back);
        }
        assert_eq!(
            serde_json::to_string(&Holder {
                beta: f64::INFINITY
            })
            .unwrap(),
            r#"{"beta":"inf"}"#
        );
    }
}
