//! Whitespace-separated edge-list text format.
//!
//! ```text
//! # comment
//! # nodes 5
//! 0 1
//! 1 2 0.37
//! ```
//!
//! Each data line is `u v` or `u v w`; either every line carries a weight or
//! none does. Integer labels are used as ids directly (`n = 1 + max id`);
//! any non-integer label switches the whole file to first-appearance
//! remapping. A `# nodes N` comment raises the node count to at least `N`
//! so trailing isolated nodes survive a round-trip.

use std::collections::{HashMap, HashSet};
use std::fmt::Write as _;
use std::path::Path;

use super::{Edge, Graph};
use crate::error::{Error, Result};

struct Line<'a> {
    number: usize,
    src: &'a str,
    dst: &'a str,
    weight: Option<f64>,
}

pub fn load_edge_list(path: impl AsRef<Path>, directed: bool) -> Result<Graph> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_edge_list(&text, directed, &path.display().to_string())
}

/// Parse edge-list text; `origin` is used in error messages only.
pub fn parse_edge_list(text: &str, directed: bool, origin: &str) -> Result<Graph> {
    let parse_err = |line: usize, msg: String| Error::Parse {
        path: origin.to_string(),
        line,
        msg,
    };

    let mut lines = Vec::new();
    let mut declared_nodes = 0usize;
    for (i, raw) in text.lines().enumerate() {
        let number = i + 1;
        let trimmed = raw.trim();
        if let Some(comment) = trimmed.strip_prefix('#') {
            let mut parts = comment.split_whitespace();
            if parts.next() == Some("nodes") {
                if let Some(count) = parts.next().and_then(|c| c.parse().ok()) {
                    declared_nodes = count;
                }
            }
            continue;
        }
        let body = trimmed.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let tokens: Vec<&str> = body.split_whitespace().collect();
        let weight = match tokens.len() {
            2 => None,
            3 => Some(
                tokens[2]
                    .parse::<f64>()
                    .map_err(|_| parse_err(number, format!("bad weight {:?}", tokens[2])))?,
            ),
            k => return Err(parse_err(number, format!("expected 2 or 3 fields, got {k}"))),
        };
        lines.push(Line {
            number,
            src: tokens[0],
            dst: tokens[1],
            weight,
        });
    }

    let numeric = lines
        .iter()
        .all(|l| l.src.parse::<usize>().is_ok() && l.dst.parse::<usize>().is_ok());
    let mut labels: HashMap<String, usize> = HashMap::new();
    let mut id_of = |label: &str| -> usize {
        if numeric {
            label.parse().expect("checked numeric")
        } else {
            let next = labels.len();
            *labels.entry(label.to_string()).or_insert(next)
        }
    };

    let weighted = lines.first().is_some_and(|l| l.weight.is_some());
    let mut edges = Vec::with_capacity(lines.len());
    let mut weights = Vec::new();
    let mut n = declared_nodes;
    let mut seen = HashSet::new();
    for line in &lines {
        if line.weight.is_some() != weighted {
            return Err(parse_err(
                line.number,
                "either every edge carries a weight or none does".into(),
            ));
        }
        let src = id_of(line.src);
        let dst = id_of(line.dst);
        if src == dst {
            return Err(parse_err(line.number, format!("self-loop on node {src}")));
        }
        let key = if directed {
            (src, dst)
        } else {
            (src.min(dst), src.max(dst))
        };
        if !seen.insert(key) {
            return Err(parse_err(line.number, format!("duplicate edge ({src}, {dst})")));
        }
        n = n.max(src + 1).max(dst + 1);
        edges.push(Edge { src, dst });
        if let Some(w) = line.weight {
            weights.push(w);
        }
    }

    let graph = Graph::new(n.max(1), directed, edges)?;
    if weighted {
        graph.with_weights(weights)
    } else {
        Ok(graph)
    }
}

pub fn serialize_edge_list(g: &Graph) -> String {
    let mut out = String::new();
    writeln!(out, "# nodes {}", g.node_count()).unwrap();
    match g.weights() {
        Some(w) => {
            for (e, w) in g.edges().iter().zip(w) {
                writeln!(out, "{} {} {}", e.src, e.dst, w).unwrap();
            }
        }
        None => {
            for e in g.edges() {
                writeln!(out, "{} {}", e.src, e.dst).unwrap();
            }
        }
    }
    out
}

pub fn save_edge_list(g: &Graph, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, serialize_edge_list(g)).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::barabasi_albert;
    use crate::rng::seeded;

    #[test]
    fn parses_simple_file() {
        let g = parse_edge_list("0 1\n1 2", false, "t").unwrap();
        assert_eq!(g.node_count(), 3);
        assert_eq!(g.edge_count(), 2);
        assert!(g.weights().is_none());
    }

    #[test]
    fn reports_self_loop_with_line() {
        let err = parse_edge_list("# c\n0 0", false, "t").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err}");
        assert!(err.to_string().contains("self-loop"));
    }

    #[test]
    fn reports_duplicate_with_line() {
        let err = parse_edge_list("0 1\n2 1\n1 0\n", false, "t").unwrap_err();
        assert!(err.to_string().contains("duplicate"), "{err}");
        assert!(matches!(err, Error::Parse { line: 3, .. }), "{err}");
    }

    #[test]
    fn rejects_garbage_and_mixed_weights() {
        assert!(matches!(
            parse_edge_list("0 1\n1 x 0.3 9", false, "t"),
            Err(Error::Parse { line: 2, .. })
        ));
        assert!(matches!(
            parse_edge_list("0 1 0.3\n1 2", false, "t"),
            Err(Error::Parse { line: 2, .. })
        ));
        assert!(parse_edge_list("0 1 0.9", false, "t").is_err());
    }

    #[test]
    fn remaps_string_labels() {
        let g = parse_edge_list("alice bob\nbob carol # trailing\n", true, "t").unwrap();
        assert_eq!(g.node_count(), 3);
        assert_eq!(g.edges()[1], Edge { src: 1, dst: 2 });
    }

    #[test]
    fn round_trip_preserves_edges_and_weights() {
        let mut rng = seeded(4);
        let g = barabasi_albert(60, 2, &mut rng)
            .unwrap()
            .assign_edge_weights(&mut rng);
        let back = parse_edge_list(&serialize_edge_list(&g), false, "t").unwrap();
        assert_eq!(back.node_count(), g.node_count());
        assert_eq!(back.edges(), g.edges());
        assert_eq!(back.weights(), g.weights());

        let isolated = Graph::new(5, false, vec![Edge { src: 0, dst: 1 }]).unwrap();
        let back = parse_edge_list(&serialize_edge_list(&isolated), false, "t").unwrap();
        assert_eq!(back.node_count(), 5);
    }
}
