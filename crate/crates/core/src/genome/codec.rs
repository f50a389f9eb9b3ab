//! Line-oriented genome files.
//!
//! ```text
//! neat-duel-genome 1
//! io <sensors> <bias> <outputs>
//! node <id> <sensor|bias|hidden|output>
//! conn <innovation> <in> <out> <weight> <1|0>
//! ```
//!
//! Weights are written with 17 significant digits so files round-trip
//! bit-exactly. Blank lines and lines starting with `#` are ignored.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::str::FromStr;

use super::{ConnectionGene, Genome, GenomeError, IoSpec, NodeGene, NodeKind};

pub const GENOME_MAGIC: &str = "neat-duel-genome";
pub const GENOME_FORMAT_VERSION: &str = "1";

pub fn encode_genome(g: &Genome) -> String {
    let mut out = String::with_capacity(64 + 48 * g.connections.len());
    let io = g.io;
    writeln!(out, "{GENOME_MAGIC} {GENOME_FORMAT_VERSION}").unwrap();
    writeln!(out, "io {} {} {}", io.sensors, io.bias, io.outputs).unwrap();
    for n in &g.nodes {
        writeln!(out, "node {} {}", n.id, n.kind.as_str()).unwrap();
    }
    for c in &g.connections {
        writeln!(
            out,
            "conn {} {} {} {:.16e} {}",
            c.innovation, c.in_node, c.out_node, c.weight, c.enabled as u8
        )
        .unwrap();
    }
    out
}

fn field<T: FromStr>(line: usize, name: &'static str, tok: Option<&str>) -> Result<T, GenomeError> {
    let tok = tok.ok_or_else(|| GenomeError::Parse {
        line,
        field: name,
        message: "missing".into(),
    })?;
    tok.parse().map_err(|_| GenomeError::Parse {
        line,
        field: name,
        message: format!("cannot parse {tok:?}"),
    })
}

pub fn decode_genome(text: &str) -> Result<Genome, GenomeError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));

    let (ln, header) = lines.next().ok_or(GenomeError::Parse {
        line: 1,
        field: "header",
        message: "empty input".into(),
    })?;
    let mut toks = header.split_whitespace();
    if toks.next() != Some(GENOME_MAGIC) {
        return Err(GenomeError::Parse {
            line: ln,
            field: "header",
            message: format!("expected `{GENOME_MAGIC} <version>`"),
        });
    }
    match toks.next() {
        Some(GENOME_FORMAT_VERSION) => {}
        other => {
            return Err(GenomeError::Version {
                found: other.unwrap_or("").to_string(),
            })
        }
    }

    let mut io = None;
    let mut nodes = Vec::new();
    let mut connections: Vec<ConnectionGene> = Vec::new();
    let mut innovations = HashSet::new();
    for (ln, line) in lines {
        let mut t = line.split_whitespace();
        match t.next() {
            Some("io") if io.is_none() => {
                io = Some(IoSpec::new(
                    field(ln, "sensors", t.next())?,
                    field(ln, "bias", t.next())?,
                    field(ln, "outputs", t.next())?,
                ));
            }
            Some("node") => {
                let id = field(ln, "node id", t.next())?;
                let kind: String = field(ln, "node kind", t.next())?;
                let kind = NodeKind::parse(&kind).ok_or_else(|| GenomeError::Parse {
                    line: ln,
                    field: "node kind",
                    message: format!("unknown kind {kind:?}"),
                })?;
                nodes.push(NodeGene { id, kind });
            }
            Some("conn") => {
                let innovation = field(ln, "innovation", t.next())?;
                if !innovations.insert(innovation) {
                    return Err(GenomeError::Parse {
                        line: ln,
                        field: "innovation",
                        message: format!("duplicate innovation {innovation}"),
                    });
                }
                let in_node = field(ln, "in node", t.next())?;
                let out_node = field(ln, "out node", t.next())?;
                let weight = field(ln, "weight", t.next())?;
                let enabled = match t.next() {
                    Some("1") => true,
                    Some("0") => false,
                    other => {
                        return Err(GenomeError::Parse {
                            line: ln,
                            field: "enabled",
                            message: format!("expected 0 or 1, got {other:?}"),
                        })
                    }
                };
                connections.push(ConnectionGene {
                    innovation,
                    in_node,
                    out_node,
                    weight,
                    enabled,
                });
            }
            _ => {
                return Err(GenomeError::Parse {
                    line: ln,
                    field: "record",
                    message: format!("unexpected line {line:?}"),
                })
            }
        }
        if t.next().is_some() {
            return Err(GenomeError::Parse {
                line: ln,
                field: "record",
                message: "trailing fields".into(),
            });
        }
    }
    let io = io.ok_or(GenomeError::Parse {
        line: 0,
        field: "io",
        message: "missing io line".into(),
    })?;
    connections.sort_by_key(|c| c.innovation);
    Genome::from_parts(io, nodes, connections)
}
