//! Text interchange for graphs and tree tables.
//!
//! Graph files start with `graph v1`, then one `edge <id> <tail> <head>
//! <length>` line per edge and at most one `root <vertex>` line. Tree files
//! start with `tree v1`, then consecutive `gen <n> <b_n> <rho_n>` lines from
//! generation 0. Blank lines and `#` comments are ignored.

use crate::error::{Error, Result};
use crate::graph::{GraphBuilder, MetricGraph, RegularTreeSpec};
use crate::textio::{content_lines, fmt_g17, parse_f64, parse_usize};

pub const GRAPH_HEADER: &str = "graph v1";
pub const TREE_HEADER: &str = "tree v1";

/// Parses a `graph v1` document. The root line, when present, is returned
/// as a vertex name for the caller to orient by.
pub fn parse_graph(text: &str) -> Result<(MetricGraph, Option<String>)> {
    let mut lines = content_lines(text);
    match lines.next() {
        Some((_, line)) if line == GRAPH_HEADER => {}
        Some((line, got)) => {
            return Err(Error::Parse {
                line,
                msg: format!("expected header '{GRAPH_HEADER}', got '{got}'"),
            })
        }
        None => {
            return Err(Error::Parse {
                line: 1,
                msg: "empty graph file".to_string(),
            })
        }
    }
    let mut builder = GraphBuilder::new();
    let mut root: Option<String> = None;
    let mut edge_names = std::collections::BTreeSet::new();
    for (lineno, line) in lines {
        let tokens: Vec<&str> = line.split_whitespace().collect();
        match tokens[0] {
            "edge" => {
                if tokens.len() != 5 {
                    return Err(Error::Parse {
                        line: lineno,
                        msg: "edge lines read: edge <id> <tail> <head> <length>".to_string(),
                    });
                }
                if !edge_names.insert(tokens[1].to_string()) {
                    return Err(Error::Parse {
                        line: lineno,
                        msg: format!("duplicate edge id '{}'", tokens[1]),
                    });
                }
                let length = parse_f64(tokens[4], lineno)?;
                builder.edge(tokens[1], tokens[2], tokens[3], length);
            }
            "root" => {
                if tokens.len() != 2 {
                    return Err(Error::Parse {
                        line: lineno,
                        msg: "root lines read: root <vertex>".to_string(),
                    });
                }
                if root.replace(tokens[1].to_string()).is_some() {
                    return Err(Error::Parse {
                        line: lineno,
                        msg: "more than one root line".to_string(),
                    });
                }
            }
            other => {
                return Err(Error::Parse {
                    line: lineno,
                    msg: format!("unknown directive '{other}'"),
                })
            }
        }
    }
    let graph = builder.build();
    if let Some(name) = &root {
        if graph.vertex(name).is_none() {
            return Err(Error::invalid(format!(
                "root '{name}' names no vertex of the graph"
            )));
        }
    }
    Ok((graph, root))
}

pub fn write_graph(graph: &MetricGraph, root: Option<&str>) -> String {
    let mut out = String::from(GRAPH_HEADER);
    out.push('\n');
    for e in graph.edge_ids() {
        let edge = graph.edge(e);
        out.push_str(&format!(
            "edge {} {} {} {}\n",
            edge.name,
            graph.vertex_name(edge.tail),
            graph.vertex_name(edge.head),
            fmt_g17(edge.length)
        ));
    }
    if let Some(name) = root {
        out.push_str(&format!("root {name}\n"));
    }
    out
}

/// Parses a `tree v1` document into a generation table; the depth is the
/// last listed generation.
pub fn parse_tree(text: &str) -> Result<RegularTreeSpec> {
    let mut lines = content_lines(text);
    match lines.next() {
        Some((_, line)) if line == TREE_HEADER => {}
        Some((line, got)) => {
            return Err(Error::Parse {
                line,
                msg: format!("expected header '{TREE_HEADER}', got '{got}'"),
            })
        }
        None => {
            return Err(Error::Parse {
                line: 1,
                msg: "empty tree file".to_string(),
            })
        }
    }
    let mut branching = Vec::new();
    let mut radii = Vec::new();
    for (lineno, line) in lines {
        let tokens: Vec<&str> = line.split_whitespace().collect();
        if tokens[0] != "gen" || tokens.len() != 4 {
            return Err(Error::Parse {
                line: lineno,
                msg: "tree lines read: gen <n> <b_n> <rho_n>".to_string(),
            });
        }
        let n = parse_usize(tokens[1], lineno)?;
        if n != branching.len() {
            return Err(Error::Parse {
                line: lineno,
                msg: format!("generations must be consecutive from 0, got {n}"),
            });
        }
        let b = tokens[2].parse::<u64>().map_err(|_| Error::Parse {
            line: lineno,
            msg: format!("expected a branching count, got '{}'", tokens[2]),
        })?;
        branching.push(b);
        radii.push(parse_f64(tokens[3], lineno)?);
    }
    if branching.len() < 2 {
        return Err(Error::invalid(
            "tree table needs generation 0 and at least one more".to_string(),
        ));
    }
    let depth = branching.len() - 1;
    RegularTreeSpec::new(branching, radii, depth)
}

pub fn write_tree(spec: &RegularTreeSpec) -> String {
    let mut out = String::from(TREE_HEADER);
    out.push('\n');
    for n in 0..spec.branching.len() {
        out.push_str(&format!(
            "gen {n} {} {}\n",
            spec.branching[n],
            fmt_g17(spec.radii[n])
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_graph_with_root() {
        let text = "graph v1\nedge e1 a b 1.0\nedge e2 b c 2.5\nroot a\n";
        let (g, root) = parse_graph(text).unwrap();
        assert_eq!(g.num_edges(), 2);
        assert_eq!(root.as_deref(), Some("a"));
        assert!((g.edge(crate::graph::EdgeId(1)).length - 2.5).abs() < 1e-15);
    }

    #[test]
    fn graph_round_trip_is_exact() {
        let text = "graph v1\nedge e1 a b 0.1\nedge e2 b c 0.30000000000000004\n";
        let (g, _) = parse_graph(text).unwrap();
        let written = write_graph(&g, None);
        let (g2, _) = parse_graph(&written).unwrap();
        for (e1, e2) in g.edge_ids().zip(g2.edge_ids()) {
            assert_eq!(
                g.edge(e1).length.to_bits(),
                g2.edge(e2).length.to_bits()
            );
        }
    }

    #[test]
    fn rejects_bad_graph_lines() {
        assert!(parse_graph("graph v2\n").is_err());
        assert!(parse_graph("graph v1\nedge e1 a b\n").is_err());
        assert!(parse_graph("graph v1\nedge e1 a b xyz\n").is_err());
        assert!(parse_graph("graph v1\nedge e1 a b 1\nedge e1 b c 1\n").is_err());
        assert!(parse_graph("graph v1\nvertex a\n").is_err());
        assert!(parse_graph("graph v1\nedge e1 a b 1\nroot zzz\n").is_err());
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let err = parse_graph("graph v1\n# fine\nedge e1 a b oops\n").unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 3),
            other => panic!("expected parse error, got {other}"),
        }
    }

    #[test]
    fn parses_tree_table() {
        let text = "tree v1\ngen 0 1 0\ngen 1 2 1.0\ngen 2 2 2.0\n";
        let spec = parse_tree(text).unwrap();
        assert_eq!(spec.branching, vec![1, 2, 2]);
        assert_eq!(spec.depth, 2);
        let written = write_tree(&spec);
        let back = parse_tree(&written).unwrap();
        assert_eq!(back, spec);
    }

    #[test]
    fn rejects_gap_in_generations() {
        assert!(parse_tree("tree v1\ngen 0 1 0\ngen 2 2 2.0\n").is_err());
    }
}
