//! Plain-text graph and id files.
//!
//! A graph file starts with `n m` followed by optional flags (`directed`,
//! `edgecolored`), then one line per edge: `u v` or `u v color`, endpoints
//! 0-based. A directed edge is written tail first. Edges are written in edge
//! index order, so writing a parsed file written by us reproduces it byte for
//! byte. An id file has one decimal id per line.

use std::fmt::Write as _;
use std::path::Path;

use localsim_core::Graph;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Graph(#[from] localsim_core::GraphError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error("{0}")]
    Invalid(String),
}

fn parse_err(line: usize, msg: impl Into<String>) -> FormatError {
    FormatError::Parse { line, msg: msg.into() }
}

pub fn write_graph(g: &Graph) -> String {
    let mut s = String::new();
    write!(s, "{} {}", g.n(), g.m()).unwrap();
    if g.orientation().is_some() {
        s.push_str(" directed");
    }
    if g.edge_colors().is_some() {
        s.push_str(" edgecolored");
    }
    s.push('\n');
    for (i, &(u, v)) in g.edges().iter().enumerate() {
        let (a, b) = match g.orientation() {
            Some(o) if !o[i] => (v, u),
            _ => (u, v),
        };
        match g.edge_colors() {
            Some(c) => writeln!(s, "{a} {b} {}", c[i]).unwrap(),
            None => writeln!(s, "{a} {b}").unwrap(),
        }
    }
    s
}

pub fn read_graph(text: &str) -> Result<Graph, FormatError> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, head) = lines.next().ok_or_else(|| parse_err(1, "empty graph file"))?;
    let mut tok = head.split_whitespace();
    let num = |t: Option<&str>, what: &str| -> Result<usize, FormatError> {
        t.ok_or_else(|| parse_err(1, format!("missing {what}")))?.parse().map_err(|_| parse_err(1, format!("bad {what}")))
    };
    let n = num(tok.next(), "n")?;
    let m = num(tok.next(), "m")?;
    let (mut directed, mut colored) = (false, false);
    for f in tok {
        match f {
            "directed" => directed = true,
            "edgecolored" => colored = true,
            other => return Err(parse_err(1, format!("unknown flag {other}"))),
        }
    }
    let mut arcs = Vec::with_capacity(m);
    let mut colors = Vec::with_capacity(m);
    for (i, l) in lines {
        let f: Vec<&str> = l.split_whitespace().collect();
        let want = 2 + colored as usize;
        if f.len() != want {
            return Err(parse_err(i + 1, format!("expected {want} fields")));
        }
        let p = |x: &str| x.parse::<usize>().map_err(|_| parse_err(i + 1, "bad endpoint"));
        arcs.push((p(f[0])?, p(f[1])?));
        if colored {
            colors.push(f[2].parse::<u32>().map_err(|_| parse_err(i + 1, "bad colour"))?);
        }
    }
    if arcs.len() != m {
        return Err(FormatError::Invalid(format!("header says {m} edges, found {}", arcs.len())));
    }
    let mut g = if directed { Graph::from_arcs(n, &arcs)? } else { Graph::from_edges(n, &arcs)? };
    if colored {
        let mut c = vec![0; m];
        for (&(u, v), &col) in arcs.iter().zip(&colors) {
            c[g.edge_index(u, v).expect("edge just inserted")] = col;
        }
        g = g.with_edge_colors(c)?;
    }
    Ok(g)
}

pub fn write_ids(ids: &[u64]) -> String {
    let mut s = String::with_capacity(ids.len() * 8);
    for id in ids {
        writeln!(s, "{id}").unwrap();
    }
    s
}

pub fn read_ids(text: &str, n: usize) -> Result<Vec<u64>, FormatError> {
    let ids = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| l.trim().parse::<u64>().map_err(|_| parse_err(i + 1, "bad id")))
        .collect::<Result<Vec<_>, _>>()?;
    if ids.len() != n {
        return Err(FormatError::Invalid(format!("{} ids for {n} nodes", ids.len())));
    }
    Ok(ids)
}

pub fn load_graph(path: &Path) -> Result<Graph, FormatError> {
    read_graph(&std::fs::read_to_string(path)?)
}

pub fn save_graph(path: &Path, g: &Graph) -> Result<(), FormatError> {
    Ok(std::fs::write(path, write_graph(g))?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use localsim_core::generators;

    #[test]
    fn cycle_file() {
        let g = generators::cycle(4).unwrap();
        let s = write_graph(&g);
        assert_eq!(s, "4 4 directed\n0 1\n3 0\n1 2\n2 3\n");
        assert_eq!(read_graph(&s).unwrap(), g);
    }

    #[test]
    fn colored_round_trip() {
        let g = Graph::from_edges(3, &[(0, 1), (1, 2)]).unwrap().with_edge_colors(vec![2, 1]).unwrap();
        let s = write_graph(&g);
        assert_eq!(s, "3 2 edgecolored\n0 1 2\n1 2 1\n");
        assert_eq!(write_graph(&read_graph(&s).unwrap()), s);
    }

    #[test]
    fn rejects_garbage() {
        assert!(read_graph("3 1\n0 5\n").is_err());
        assert!(read_graph("3 2\n0 1\n").is_err());
        assert!(read_graph("3 1 weird\n0 1\n").is_err());
        assert!(read_ids("1\n2\n", 3).is_err());
    }
}
