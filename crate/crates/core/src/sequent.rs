//! Bipolar focussing sequent proofs over a program of bipoles.
//!
//! A sequent is a multiset of negative atoms. An inference consumes the
//! trigger of one bipole variant from its conclusion and opens one premise
//! per with-branch combination, carrying the untouched context into every
//! premise. Proofs are trees of such applications; leaves use zero-premise
//! schemes.

use std::fmt;

use thiserror::Error;

use crate::bipolarizer::{InferenceScheme, Program};
use crate::formulas::{Atom, Multiset};

/// A sequent: a multiset of negative atoms over the extended atom set.
#[derive(Clone, PartialEq, Eq, Default, Debug)]
pub struct Sequent(pub Multiset);

impl Sequent {
    pub fn from_atoms<I: IntoIterator<Item = Atom>>(atoms: I) -> Sequent {
        Sequent(atoms.into_iter().collect())
    }

    pub fn atoms(&self) -> &Multiset {
        &self.0
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl fmt::Display for Sequent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ApplyError {
    #[error("trigger {trigger} is not contained in the conclusion {conclusion}")]
    TriggerMismatch {
        trigger: Multiset,
        conclusion: Multiset,
    },
}

/// Applies a scheme to a conclusion: each premise is the conclusion minus the
/// trigger, united with the premise atoms. Zero-premise schemes close the
/// branch and return no sequents.
pub fn apply_scheme(
    conclusion: &Sequent,
    scheme: &InferenceScheme,
) -> Result<Vec<Sequent>, ApplyError> {
    if !scheme.trigger.subset_of(conclusion.atoms()) {
        return Err(ApplyError::TriggerMismatch {
            trigger: scheme.trigger.clone(),
            conclusion: conclusion.atoms().clone(),
        });
    }
    let context = conclusion.atoms().minus(&scheme.trigger);
    Ok(scheme
        .premises
        .iter()
        .map(|p| Sequent(context.union(p)))
        .collect())
}

/// Names the scheme a proof node applies: a bipole head plus a 1-based
/// variant ordinal.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Debug)]
pub struct RuleRef {
    pub head: Atom,
    pub variant: usize,
}

impl fmt::Display for RuleRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}#{}", self.head, self.variant)
    }
}

/// A proof tree node: the conclusion, the rule applied to it, and one child
/// per premise of that rule, in premise order.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct ProofTree {
    pub conclusion: Sequent,
    pub rule: RuleRef,
    pub children: Vec<ProofTree>,
}

impl ProofTree {
    pub fn node_count(&self) -> usize {
        1 + self
            .children
            .iter()
            .map(ProofTree::node_count)
            .sum::<usize>()
    }

    /// Multiset of rules used, as (head, variant, count) sorted.
    pub fn rule_census(&self) -> Vec<(RuleRef, usize)> {
        fn walk(t: &ProofTree, acc: &mut Vec<RuleRef>) {
            acc.push(t.rule.clone());
            for c in &t.children {
                walk(c, acc);
            }
        }
        let mut rules = Vec::new();
        walk(self, &mut rules);
        rules.sort();
        let mut out: Vec<(RuleRef, usize)> = Vec::new();
        for r in rules {
            match out.last_mut() {
                Some((prev, n)) if *prev == r => *n += 1,
                _ => out.push((r, 1)),
            }
        }
        out
    }
}

/// One defect found while checking a proof. `path` is the child-index route
/// from the root to the offending node.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CheckFailure {
    pub path: Vec<usize>,
    pub reason: String,
}

impl fmt::Display for CheckFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "at ")?;
        if self.path.is_empty() {
            write!(f, "root")?;
        } else {
            let route: Vec<String> = self.path.iter().map(|i| i.to_string()).collect();
            write!(f, "root.{}", route.join("."))?;
        }
        write!(f, ": {}", self.reason)
    }
}

/// Result of checking a proof against a program.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ProofCheckReport {
    pub failures: Vec<CheckFailure>,
}

impl ProofCheckReport {
    pub fn is_ok(&self) -> bool {
        self.failures.is_empty()
    }
}

impl fmt::Display for ProofCheckReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_ok() {
            write!(f, "ok")
        } else {
            for (i, fail) in self.failures.iter().enumerate() {
                if i > 0 {
                    writeln!(f)?;
                }
                write!(f, "{fail}")?;
            }
            Ok(())
        }
    }
}

/// Checks that every node's rule comes from the program and that applying it
/// reproduces exactly the children's conclusions, in order.
pub fn check_proof(proof: &ProofTree, program: &Program) -> ProofCheckReport {
    let mut report = ProofCheckReport::default();
    let mut path = Vec::new();
    check_node(proof, program, &mut path, &mut report);
    report
}

fn check_node(
    node: &ProofTree,
    program: &Program,
    path: &mut Vec<usize>,
    report: &mut ProofCheckReport,
) {
    match program.scheme(&node.rule.head, node.rule.variant) {
        None => {
            report.failures.push(CheckFailure {
                path: path.clone(),
                reason: format!("rule {} is not in the program", node.rule),
            });
        }
        Some(scheme) => match apply_scheme(&node.conclusion, &scheme) {
            Err(e) => report.failures.push(CheckFailure {
                path: path.clone(),
                reason: e.to_string(),
            }),
            Ok(premises) => {
                if premises.len() != node.children.len() {
                    report.failures.push(CheckFailure {
                        path: path.clone(),
                        reason: format!(
                            "rule {} opens {} premises but the node has {} children",
                            node.rule,
                            premises.len(),
                            node.children.len()
                        ),
                    });
                } else {
                    for (i, (premise, child)) in premises.iter().zip(&node.children).enumerate() {
                        if premise != &child.conclusion {
                            report.failures.push(CheckFailure {
                                path: path.clone(),
                                reason: format!(
                                    "premise {} should be [{}] but child concludes [{}]",
                                    i, premise, child.conclusion
                                ),
                            });
                        }
                    }
                }
            }
        },
    }
    for (i, child) in node.children.iter().enumerate() {
        path.push(i);
        check_node(child, program, path, report);
        path.pop();
    }
}

// ---------------------------------------------------------------------------
// Proof text format
// ---------------------------------------------------------------------------

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ProofTextError {
    #[error("line {line}: expected `rule#variant ⊢ atoms`")]
    BadLine { line: usize },
    #[error("line {line}: bad indentation (levels step by two spaces)")]
    BadIndent { line: usize },
    #[error("line {line}: invalid atom {atom:?}")]
    BadAtom { line: usize, atom: String },
    #[error("empty proof text")]
    Empty,
    #[error("line {line}: multiple roots")]
    MultipleRoots { line: usize },
}

/// Renders a proof as an indented tree, one node per line:
/// `<rule-name>#<variant> ⊢ <comma-separated atoms>`.
pub fn proof_to_text(proof: &ProofTree) -> String {
    fn go(node: &ProofTree, depth: usize, out: &mut String) {
        for _ in 0..depth {
            out.push_str("  ");
        }
        out.push_str(&format!("{} ⊢ {}\n", node.rule, node.conclusion));
        for c in &node.children {
            go(c, depth + 1, out);
        }
    }
    let mut out = String::new();
    go(proof, 0, &mut out);
    out
}

/// Parses the indented proof format. Conclusions are taken as written;
/// consistency with the rules is [`check_proof`]'s job.
pub fn proof_from_text(text: &str) -> Result<ProofTree, ProofTextError> {
    struct Raw {
        depth: usize,
        rule: RuleRef,
        conclusion: Sequent,
        line: usize,
    }

    let mut rows = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        if raw.trim().is_empty() || raw.trim_start().starts_with('#') {
            continue;
        }
        let indent = raw.len() - raw.trim_start_matches(' ').len();
        if indent % 2 != 0 {
            return Err(ProofTextError::BadIndent { line });
        }
        let body = raw.trim();
        let (rule_txt, seq_txt) = body
            .split_once('⊢')
            .or_else(|| body.split_once("|-"))
            .ok_or(ProofTextError::BadLine { line })?;
        let (head_txt, variant_txt) = rule_txt
            .trim()
            .split_once('#')
            .ok_or(ProofTextError::BadLine { line })?;
        let variant: usize = variant_txt
            .trim()
            .parse()
            .map_err(|_| ProofTextError::BadLine { line })?;
        let head = parse_atom(head_txt.trim(), line)?;
        let mut atoms = Multiset::new();
        let seq_txt = seq_txt.trim();
        if !seq_txt.is_empty() {
            for part in seq_txt.split(',') {
                atoms.insert(parse_atom(part.trim(), line)?);
            }
        }
        rows.push(Raw {
            depth: indent / 2,
            rule: RuleRef { head, variant },
            conclusion: Sequent(atoms),
            line,
        });
    }

    if rows.is_empty() {
        return Err(ProofTextError::Empty);
    }
    if rows[0].depth != 0 {
        return Err(ProofTextError::BadIndent { line: rows[0].line });
    }

    // Stack-based tree reconstruction from depths.
    let mut stack: Vec<ProofTree> = Vec::new();
    let mut depths: Vec<usize> = Vec::new();
    for row in rows {
        while let Some(&d) = depths.last() {
            if d >= row.depth {
                let finished = stack.pop().expect("stack tracks depths");
                depths.pop();
                match stack.last_mut() {
                    Some(parent) => parent.children.push(finished),
                    None => return Err(ProofTextError::MultipleRoots { line: row.line }),
                }
            } else {
                break;
            }
        }
        if row.depth > depths.last().map_or(0, |d| d + 1) {
            return Err(ProofTextError::BadIndent { line: row.line });
        }
        stack.push(ProofTree {
            conclusion: row.conclusion,
            rule: row.rule,
            children: Vec::new(),
        });
        depths.push(row.depth);
    }
    while stack.len() > 1 {
        let finished = stack.pop().expect("len > 1");
        depths.pop();
        stack.last_mut().expect("len >= 1").children.push(finished);
    }
    Ok(stack.pop().expect("nonempty"))
}

fn parse_atom(s: &str, line: usize) -> Result<Atom, ProofTextError> {
    use crate::formulas::parse_formula;
    match parse_formula(s) {
        Ok(crate::formulas::Formula::NegAtom(a)) => Ok(Atom::new(a.name())),
        _ => Err(ProofTextError::BadAtom {
            line,
            atom: s.to_string(),
        }),
    }
}
