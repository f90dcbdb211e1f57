//! The line-oriented `.fg` flowgraph format.

use std::collections::BTreeMap;

use super::graph::{Edge, EdgeId, FlowGraph, Instruction, SourcePos};
use super::lex::{flatten, lex, Parser};
use crate::error::{Error, ParseError};

/// Parses `.fg` text. Edge ids follow line order.
pub fn parse_flowgraph(text: &str) -> Result<FlowGraph, Error> {
    let mut begin: Option<String> = None;
    let mut end: Option<String> = None;
    let mut edges = Vec::new();
    let mut provenance = BTreeMap::new();
    for (ln, raw) in text.lines().enumerate() {
        let line = ln + 1;
        let content = raw.split('#').next().unwrap_or("");
        let words = split_words(content, 4);
        let Some((kw, kw_col)) = words.first().map(|(w, c)| (*w, *c)) else {
            continue;
        };
        let word = |i: usize, what: &str| {
            words.get(i).map(|(w, _)| w.to_string()).ok_or_else(|| {
                ParseError::new(
                    line,
                    content.trim_end().len() + 1,
                    format!("missing {what}"),
                )
            })
        };
        match kw {
            "begin" | "end" => {
                if words.len() > 2 {
                    return Err(
                        ParseError::new(line, words[2].1, "unexpected text after node id").into(),
                    );
                }
                let id = check_node_id(word(1, "node id")?, line, words[1].1)?;
                let slot = if kw == "begin" { &mut begin } else { &mut end };
                if slot.is_some() {
                    return Err(ParseError::new(
                        line,
                        kw_col,
                        format!("duplicate `{kw}` declaration"),
                    )
                    .into());
                }
                *slot = Some(id);
            }
            "edge" => {
                let src = check_node_id(word(1, "source node")?, line, words[1].1)?;
                let dst = check_node_id(word(2, "destination node")?, line, words[2].1)?;
                let kind = word(3, "`assign` or `assume`")?;
                let rest_col = words[3].1 + kind.len();
                let rest = &content[rest_col - 1..];
                let mut p = Parser::new(lex(rest, line, rest_col)?);
                let instr = match kind.as_str() {
                    "assign" => {
                        let var = p.ident()?;
                        if !p.eat(":=") {
                            p.expect("=")?;
                        }
                        Instruction::Assign(var, p.expr().map_err(flatten)?)
                    }
                    "assume" => Instruction::Assume(p.formula().map_err(flatten)?),
                    other => {
                        return Err(ParseError::new(
                            line,
                            words[3].1,
                            format!("expected `assign` or `assume`, found `{other}`"),
                        )
                        .into())
                    }
                };
                if !p.at_eof() {
                    return Err(p.error(format!("unexpected {}", p.describe())).into());
                }
                let id = EdgeId(edges.len() as u32);
                provenance.insert(id, SourcePos { line, col: kw_col });
                edges.push(Edge {
                    id,
                    src,
                    dst,
                    instr,
                });
            }
            other => {
                return Err(ParseError::new(
                    line,
                    kw_col,
                    format!("expected `begin`, `end` or `edge`, found `{other}`"),
                )
                .into())
            }
        }
    }
    let last = text.lines().count().max(1);
    let begin = begin.ok_or_else(|| ParseError::new(last, 1, "missing `begin` declaration"))?;
    let end = end.ok_or_else(|| ParseError::new(last, 1, "missing `end` declaration"))?;
    let g = FlowGraph::new(begin, end, edges, [], [], [])?;
    Ok(g.with_provenance(provenance))
}

/// The first `n` whitespace-separated words with their 1-based columns.
fn split_words(s: &str, n: usize) -> Vec<(&str, usize)> {
    let mut out = Vec::new();
    let mut rest = s;
    let mut offset = 0;
    while out.len() < n {
        let trimmed = rest.trim_start();
        offset += rest.len() - trimmed.len();
        if trimmed.is_empty() {
            break;
        }
        let len = trimmed.find(char::is_whitespace).unwrap_or(trimmed.len());
        out.push((&trimmed[..len], offset + 1));
        offset += len;
        rest = &trimmed[len..];
    }
    out
}

fn check_node_id(id: String, line: usize, col: usize) -> Result<String, ParseError> {
    let ok = !id.is_empty()
        && id
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '\'' || c == '.');
    if ok {
        Ok(id)
    } else {
        Err(ParseError::new(
            line,
            col,
            format!("invalid node id `{id}`"),
        ))
    }
}
