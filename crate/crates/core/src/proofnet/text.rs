//! Line-oriented net serialization.
//!
//! ```text
//! place p0 n0
//! place p1
//! link l0 + top=p1 bottom=p0 jump=p7
//! hyper h0 + links=l0
//! jumpedge l0 l3
//! conclusion p0
//! ```
//!
//! `top=` and `bottom=` list typed and junction places; `jump=` names the
//! link's jump place, which is never listed elsewhere. The `conclusion` line
//! is redundant with the graph and verified on load. Ids round-trip
//! verbatim.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::formulas::{Atom, Polarity};

use super::{HyperId, LinkId, PlaceId, ProofStructure};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum NetTextError {
    #[error("line {line}: {msg}")]
    Malformed { line: usize, msg: String },
    #[error("line {line}: unknown id {id}")]
    UnknownId { line: usize, id: String },
    #[error("line {line}: duplicate id {id}")]
    DuplicateId { line: usize, id: String },
    #[error("conclusion line lists [{given}] but the graph concludes [{computed}]")]
    ConclusionMismatch { given: String, computed: String },
}

pub fn net_to_text(net: &ProofStructure) -> String {
    let mut out = String::new();
    for p in net.places() {
        match &p.label {
            Some(a) => out.push_str(&format!("place {} {}\n", p.id, a)),
            None => out.push_str(&format!("place {}\n", p.id)),
        }
    }
    for l in net.links() {
        let sign = match l.polarity {
            Polarity::Positive => '+',
            Polarity::Negative => '-',
        };
        let ids = |s: &BTreeSet<PlaceId>| {
            s.iter()
                .map(|p| p.to_string())
                .collect::<Vec<_>>()
                .join(",")
        };
        // top classes: `,` separates classes, `+` joins places in one class
        let top = l
            .top_classes
            .iter()
            .filter(|c| !c.is_empty())
            .map(|c| {
                c.iter()
                    .map(|p| p.to_string())
                    .collect::<Vec<_>>()
                    .join("+")
            })
            .collect::<Vec<_>>()
            .join(",");
        out.push_str(&format!(
            "link {} {} top={} bottom={}",
            l.id,
            sign,
            top,
            ids(&l.bottom)
        ));
        if let Some(star) = l.jump {
            out.push_str(&format!(" jump={star}"));
        }
        out.push('\n');
    }
    for h in net.hyperlinks() {
        let sign = match h.polarity {
            Polarity::Positive => '+',
            Polarity::Negative => '-',
        };
        let ids = h
            .links
            .iter()
            .map(|l| l.to_string())
            .collect::<Vec<_>>()
            .join(",");
        out.push_str(&format!("hyper {} {} links={}\n", h.id, sign, ids));
    }
    for (x, y) in net.jump_edges() {
        out.push_str(&format!("jumpedge {x} {y}\n"));
    }
    let conclusion = net
        .conclusion_places()
        .iter()
        .map(|p| p.to_string())
        .collect::<Vec<_>>()
        .join(",");
    out.push_str(&format!("conclusion {conclusion}\n"));
    out
}

fn parse_id(tok: &str, prefix: char, line: usize) -> Result<u32, NetTextError> {
    tok.strip_prefix(prefix)
        .and_then(|rest| rest.parse::<u32>().ok())
        .ok_or_else(|| NetTextError::Malformed {
            line,
            msg: format!("expected {prefix}<number>, got {tok:?}"),
        })
}

fn parse_id_list(tok: &str, prefix: char, line: usize) -> Result<Vec<u32>, NetTextError> {
    if tok.is_empty() {
        return Ok(Vec::new());
    }
    tok.split(',').map(|t| parse_id(t, prefix, line)).collect()
}

/// `p1+p2,p3` is two classes: {p1, p2} and {p3}.
fn parse_classes(tok: &str, line: usize) -> Result<Vec<Vec<u32>>, NetTextError> {
    if tok.is_empty() {
        return Ok(Vec::new());
    }
    tok.split(',')
        .map(|class| class.split('+').map(|t| parse_id(t, 'p', line)).collect())
        .collect()
}

fn field<'a>(tok: Option<&'a str>, name: &str, line: usize) -> Result<&'a str, NetTextError> {
    let tok = tok.ok_or_else(|| NetTextError::Malformed {
        line,
        msg: format!("missing {name}"),
    })?;
    tok.strip_prefix(name)
        .and_then(|rest| rest.strip_prefix('='))
        .ok_or_else(|| NetTextError::Malformed {
            line,
            msg: format!("expected {name}=..."),
        })
}

fn parse_sign(tok: &str, line: usize) -> Result<Polarity, NetTextError> {
    match tok {
        "+" => Ok(Polarity::Positive),
        "-" => Ok(Polarity::Negative),
        _ => Err(NetTextError::Malformed {
            line,
            msg: format!("expected + or -, got {tok:?}"),
        }),
    }
}

pub fn net_from_text(text: &str) -> Result<ProofStructure, NetTextError> {
    let mut net = ProofStructure::new();
    let mut place_ids: BTreeSet<u32> = BTreeSet::new();
    let mut link_ids: BTreeSet<u32> = BTreeSet::new();
    let mut hyper_ids: BTreeSet<u32> = BTreeSet::new();
    let mut declared_conclusion: Option<(usize, Vec<u32>)> = None;

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let mut toks = trimmed.split_whitespace();
        let kind = toks.next().expect("nonempty line");
        match kind {
            "place" => {
                let id_tok = toks.next().ok_or_else(|| NetTextError::Malformed {
                    line,
                    msg: "missing place id".into(),
                })?;
                let id = parse_id(id_tok, 'p', line)?;
                if !place_ids.insert(id) {
                    return Err(NetTextError::DuplicateId {
                        line,
                        id: id_tok.to_string(),
                    });
                }
                let label = match toks.next() {
                    None => None,
                    Some(name) => Some(Atom::new(validate_atom(name, line)?)),
                };
                net.insert_place_raw(PlaceId(id), label);
            }
            "link" => {
                let id_tok = toks.next().ok_or_else(|| NetTextError::Malformed {
                    line,
                    msg: "missing link id".into(),
                })?;
                let id = parse_id(id_tok, 'l', line)?;
                if !link_ids.insert(id) {
                    return Err(NetTextError::DuplicateId {
                        line,
                        id: id_tok.to_string(),
                    });
                }
                let polarity = parse_sign(
                    toks.next().ok_or_else(|| NetTextError::Malformed {
                        line,
                        msg: "missing polarity".into(),
                    })?,
                    line,
                )?;
                let classes = parse_classes(field(toks.next(), "top", line)?, line)?;
                let bottom = parse_id_list(field(toks.next(), "bottom", line)?, 'p', line)?;
                let jump = match toks.next() {
                    None => None,
                    Some(tok) => {
                        let star =
                            tok.strip_prefix("jump=")
                                .ok_or_else(|| NetTextError::Malformed {
                                    line,
                                    msg: format!("expected jump=..., got {tok:?}"),
                                })?;
                        Some(PlaceId(parse_id(star, 'p', line)?))
                    }
                };
                for p in classes.iter().flatten().chain(bottom.iter()) {
                    if !place_ids.contains(p) {
                        return Err(NetTextError::UnknownId {
                            line,
                            id: format!("p{p}"),
                        });
                    }
                }
                if let Some(star) = jump {
                    if !place_ids.contains(&star.0) {
                        return Err(NetTextError::UnknownId {
                            line,
                            id: star.to_string(),
                        });
                    }
                }
                net.insert_link_raw(
                    LinkId(id),
                    polarity,
                    classes
                        .into_iter()
                        .map(|c| c.into_iter().map(PlaceId).collect())
                        .collect(),
                    bottom.into_iter().map(PlaceId).collect(),
                    jump,
                );
            }
            "hyper" => {
                let id_tok = toks.next().ok_or_else(|| NetTextError::Malformed {
                    line,
                    msg: "missing hyperlink id".into(),
                })?;
                let id = parse_id(id_tok, 'h', line)?;
                if !hyper_ids.insert(id) {
                    return Err(NetTextError::DuplicateId {
                        line,
                        id: id_tok.to_string(),
                    });
                }
                let polarity = parse_sign(
                    toks.next().ok_or_else(|| NetTextError::Malformed {
                        line,
                        msg: "missing polarity".into(),
                    })?,
                    line,
                )?;
                let links = parse_id_list(field(toks.next(), "links", line)?, 'l', line)?;
                for l in &links {
                    if !link_ids.contains(l) {
                        return Err(NetTextError::UnknownId {
                            line,
                            id: format!("l{l}"),
                        });
                    }
                }
                net.insert_hyperlink_raw(
                    HyperId(id),
                    polarity,
                    links.into_iter().map(LinkId).collect(),
                );
            }
            "jumpedge" => {
                let x = parse_id(
                    toks.next().ok_or_else(|| NetTextError::Malformed {
                        line,
                        msg: "missing source link".into(),
                    })?,
                    'l',
                    line,
                )?;
                let y = parse_id(
                    toks.next().ok_or_else(|| NetTextError::Malformed {
                        line,
                        msg: "missing target link".into(),
                    })?,
                    'l',
                    line,
                )?;
                for l in [x, y] {
                    if !link_ids.contains(&l) {
                        return Err(NetTextError::UnknownId {
                            line,
                            id: format!("l{l}"),
                        });
                    }
                }
                net.insert_jump_edge_raw(LinkId(x), LinkId(y));
            }
            "conclusion" => {
                let list = toks.next().unwrap_or("");
                declared_conclusion = Some((line, parse_id_list(list, 'p', line)?));
            }
            other => {
                return Err(NetTextError::Malformed {
                    line,
                    msg: format!("unknown record {other:?}"),
                });
            }
        }
    }

    if let Some((_, declared)) = declared_conclusion {
        let computed: Vec<u32> = net.conclusion_places().iter().map(|p| p.0).collect();
        let mut declared_sorted = declared;
        declared_sorted.sort_unstable();
        if declared_sorted != computed {
            return Err(NetTextError::ConclusionMismatch {
                given: declared_sorted
                    .iter()
                    .map(|p| format!("p{p}"))
                    .collect::<Vec<_>>()
                    .join(","),
                computed: computed
                    .iter()
                    .map(|p| format!("p{p}"))
                    .collect::<Vec<_>>()
                    .join(","),
            });
        }
    }
    Ok(net)
}

fn validate_atom(name: &str, line: usize) -> Result<&str, NetTextError> {
    let ok = name
        .chars()
        .next()
        .map(|c| c.is_ascii_lowercase())
        .unwrap_or(false)
        && name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_');
    if ok {
        Ok(name)
    } else {
        Err(NetTextError::Malformed {
            line,
            msg: format!("invalid atom {name:?}"),
        })
    }
}
