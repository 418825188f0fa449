//! Sequent proofs to nets and back.
//!
//! De-sequentialization folds the proof tree into expansions. Usages of one
//! bipole that consume the same places for the occurrences shared by all of
//! its variants are one expansion: the variants become sibling links of a
//! single positive hyperlink, and the bipole's monopole output is built once
//! and shared. The fold runs on symbolic places first, so sharing is decided
//! before any structure exists, then replays the grouped expansions through
//! the transaction path.
//!
//! Sequentialization searches the net for a rule order: at each branch state
//! (a set of open places) it applies some variant link whose consumed places
//! are available, splitting into one child per branch combination of the
//! hyperlinks above it. Candidates are tried in ascending (hyperlink,
//! variant) order with exhaustive backtracking, so the first proof found is
//! canonical for that ordering.

use std::collections::{BTreeMap, BTreeSet};

use crate::bipolarizer::{BipoleShape, Program};
use crate::formulas::{Atom, Multiset};
use crate::proofnet::{is_proof_net, HyperId, LinkId, PlaceId, ProofStructure};
use crate::sequent::{check_proof, ProofTree, RuleRef, Sequent};

use super::{auto_jumps, try_transaction, Binding, EngineError};

type SymId = u64;

struct GroupRec {
    head: Atom,
    /// Occurrence to symbolic place, per variant that appears in the proof.
    variant_places: BTreeMap<usize, BTreeMap<usize, SymId>>,
    /// Symbolic places produced per (factor, group, branch, atom position).
    produced: BTreeMap<(usize, usize, usize, usize), SymId>,
}

struct Fold<'a> {
    program: &'a Program,
    next_sym: SymId,
    labels: BTreeMap<SymId, Atom>,
    groups: Vec<GroupRec>,
    group_index: BTreeMap<(Atom, Vec<(usize, SymId)>), usize>,
}

impl<'a> Fold<'a> {
    fn alloc(&mut self, label: Atom) -> SymId {
        let id = self.next_sym;
        self.next_sym += 1;
        self.labels.insert(id, label);
        id
    }

    fn walk(&mut self, node: &ProofTree, syms: &[SymId]) -> Result<(), EngineError> {
        let head = &node.rule.head;
        let bipole = self
            .program
            .bipole(head)
            .ok_or_else(|| EngineError::UnknownBipole(head.clone()))?;
        let shape = bipole.shape();
        let variant = shape
            .variants
            .get(node.rule.variant - 1)
            .ok_or_else(|| EngineError::DeseqDefect(format!("no variant {}", node.rule)))?;

        // bind trigger occurrences to the lowest matching symbolic places
        let mut available: Vec<SymId> = syms.to_vec();
        available.sort_unstable();
        let mut consumed: BTreeMap<usize, SymId> = BTreeMap::new();
        for occ in &variant.occs {
            let atom = &shape.occurrences[*occ].atom;
            let pos = available
                .iter()
                .position(|s| &self.labels[s] == atom)
                .ok_or_else(|| {
                    EngineError::DeseqDefect(format!(
                        "conclusion of {} lacks a {atom} resource",
                        node.rule
                    ))
                })?;
            consumed.insert(*occ, available.remove(pos));
        }

        // group usages by the places of the occurrences every variant shares
        let key_occs = shape.shared_occs();
        let key: Vec<(usize, SymId)> = key_occs.iter().map(|o| (*o, consumed[o])).collect();
        let gi = match self.group_index.get(&(head.clone(), key.clone())) {
            Some(gi) => *gi,
            None => {
                let gi = self.groups.len();
                self.groups.push(GroupRec {
                    head: head.clone(),
                    variant_places: BTreeMap::new(),
                    produced: BTreeMap::new(),
                });
                self.group_index.insert((head.clone(), key), gi);
                gi
            }
        };
        match self.groups[gi].variant_places.get(&node.rule.variant) {
            Some(prev) if prev != &consumed => {
                return Err(EngineError::DeseqDefect(format!(
                    "rule {} consumes different places in different branches",
                    node.rule
                )));
            }
            _ => {
                self.groups[gi]
                    .variant_places
                    .insert(node.rule.variant, consumed.clone());
            }
        }

        // children: one per branch combination, sharing produced places
        // through the per-group memo
        let premise_count = shape.premise_count(variant);
        if premise_count != node.children.len() {
            return Err(EngineError::DeseqDefect(format!(
                "rule {} opens {} premises but the proof has {} children",
                node.rule,
                premise_count,
                node.children.len()
            )));
        }
        let pairs = shape.variant_groups(variant);
        for (i, child) in node.children.iter().enumerate() {
            let choices = shape.premise_choices(variant, i);
            let mut child_syms = available.clone();
            for (k, (fi, gidx)) in pairs.iter().enumerate() {
                let branch = &shape.factors[*fi].groups[*gidx].branches[choices[k]];
                for (ai, atom) in branch.iter().enumerate() {
                    let key = (*fi, *gidx, choices[k], ai);
                    let sym = match self.groups[gi].produced.get(&key) {
                        Some(s) => *s,
                        None => {
                            let s = self.alloc(atom.clone());
                            self.groups[gi].produced.insert(key, s);
                            s
                        }
                    };
                    child_syms.push(sym);
                }
            }
            self.walk(child, &child_syms)?;
        }
        Ok(())
    }
}

/// De-sequentializes a checked proof into a proof net with the same
/// conclusion. Rejections along the way surface as defects: the fold of a
/// checked proof is expected to commit every grouped expansion.
pub fn desequentialize(
    proof: &ProofTree,
    program: &Program,
) -> Result<ProofStructure, EngineError> {
    let mut fold = Fold {
        program,
        next_sym: 0,
        labels: BTreeMap::new(),
        groups: Vec::new(),
        group_index: BTreeMap::new(),
    };
    let root_syms: Vec<SymId> = proof
        .conclusion
        .atoms()
        .iter()
        .map(|a| fold.alloc(a.clone()))
        .collect();
    fold.walk(proof, &root_syms)?;

    // materialize: goal places, then grouped expansions in dependency order
    let mut net = ProofStructure::new();
    let mut real: BTreeMap<SymId, PlaceId> = BTreeMap::new();
    for sym in &root_syms {
        let place = net.new_place(Some(fold.labels[sym].clone()));
        real.insert(*sym, place);
    }

    let mut done: Vec<bool> = vec![false; fold.groups.len()];
    loop {
        let mut progressed = false;
        for (gi, group) in fold.groups.iter().enumerate() {
            if done[gi] {
                continue;
            }
            let ready = group
                .variant_places
                .values()
                .flat_map(|m| m.values())
                .all(|s| real.contains_key(s));
            if !ready {
                continue;
            }
            let bipole = program
                .bipole(&group.head)
                .expect("verified during the fold");
            let shape = bipole.shape();
            let mut places: BTreeMap<usize, PlaceId> = BTreeMap::new();
            for occ_map in group.variant_places.values() {
                for (occ, sym) in occ_map {
                    places.insert(*occ, real[sym]);
                }
            }
            let bound_variants: BTreeSet<usize> = group.variant_places.keys().copied().collect();
            let primary = *bound_variants.iter().next().expect("nonempty group");
            let mut binding = Binding {
                head: group.head.clone(),
                variant: primary,
                places,
                bound_variants,
                jumps: BTreeMap::new(),
            };
            binding.jumps = auto_jumps(&net, &shape, &binding).ok_or_else(|| {
                EngineError::DeseqDefect(format!(
                    "no creator-derived jump assignment toggles the variants of {}",
                    group.head
                ))
            })?;
            let outcome = try_transaction(&net, program, &binding);
            let expansion = outcome.result.map_err(|e| {
                EngineError::DeseqDefect(format!("expansion of {} rejected: {e}", group.head))
            })?;
            for (key, sym) in &group.produced {
                if let Some(place) = expansion.produced.get(key) {
                    real.insert(*sym, *place);
                }
            }
            net = expansion.net;
            done[gi] = true;
            progressed = true;
        }
        if done.iter().all(|d| *d) {
            break;
        }
        if !progressed {
            return Err(EngineError::DeseqDefect(
                "expansion dependencies never become available".into(),
            ));
        }
    }
    Ok(net)
}

// ---------------------------------------------------------------------------
// Sequentialization
// ---------------------------------------------------------------------------

struct RuleInfo {
    rule: RuleRef,
    /// Consumed typed places of the variant link.
    consumed: BTreeSet<PlaceId>,
    /// Junction hyperlinks above the link, in premise enumeration order;
    /// each with its member links in branch order.
    junctions: Vec<Vec<LinkId>>,
}

/// Sequentializes a proof net into a checked proof with the same conclusion.
/// The net must be correct and closed; rule identities come from the
/// expansion tags when present and are otherwise inferred from the program
/// by trigger and output matching.
pub fn sequentialize(net: &ProofStructure, program: &Program) -> Result<ProofTree, EngineError> {
    if !is_proof_net(net) {
        return Err(EngineError::NotCorrect);
    }

    // rule identity per positive link
    let mut rules: BTreeMap<LinkId, RuleInfo> = BTreeMap::new();
    for h in net
        .hyperlinks()
        .filter(|h| h.polarity == crate::formulas::Polarity::Positive)
    {
        for l in &h.links {
            let info = rule_info(net, program, h.id, *l)?;
            rules.insert(*l, info);
        }
    }

    let initial: BTreeSet<PlaceId> = net.conclusion_places().into_iter().collect();
    let mut failed: BTreeSet<Vec<PlaceId>> = BTreeSet::new();
    let proof = prove(net, &rules, &initial, &mut failed).ok_or_else(|| {
        EngineError::SequentializationFailed(
            "no rule order covers every branch (is the net closed?)".into(),
        )
    })?;

    let report = check_proof(&proof, program);
    if !report.is_ok() {
        return Err(EngineError::SequentializationFailed(format!(
            "search produced an unsound proof:\n{report}"
        )));
    }
    Ok(proof)
}

fn rule_info(
    net: &ProofStructure,
    program: &Program,
    hyper: HyperId,
    link: LinkId,
) -> Result<RuleInfo, EngineError> {
    let l = net.link(link).expect("member link exists");
    let consumed: BTreeSet<PlaceId> = l.bottom.clone();
    // junction hyperlinks in ascending junction order
    let mut junctions: Vec<Vec<LinkId>> = Vec::new();
    for j in &l.top {
        let members = net
            .links_above(*j)
            .into_iter()
            .collect::<BTreeSet<LinkId>>();
        junctions.push(members.into_iter().collect());
    }

    if let Some(tag) = net.tag(hyper) {
        if let Some(variant) = tag.variants.get(&link) {
            return Ok(RuleInfo {
                rule: RuleRef {
                    head: tag.head.clone(),
                    variant: *variant,
                },
                consumed,
                junctions,
            });
        }
    }

    // infer from the program: unique (bipole, variant) whose trigger matches
    // the consumed labels and whose group branches match the junction tops
    let trigger: Multiset = consumed
        .iter()
        .filter_map(|p| net.label(*p).cloned())
        .collect();
    let mut candidates: Vec<RuleRef> = Vec::new();
    for b in program.bipoles() {
        let shape = b.shape();
        for (vi, v) in shape.variants.iter().enumerate() {
            if shape.trigger_of(v) != trigger {
                continue;
            }
            if junction_shapes_match(net, &shape, v, &junctions) {
                candidates.push(RuleRef {
                    head: b.head.clone(),
                    variant: vi + 1,
                });
            }
        }
    }
    match candidates.len() {
        1 => Ok(RuleInfo {
            rule: candidates.remove(0),
            consumed,
            junctions,
        }),
        0 => Err(EngineError::SequentializationFailed(format!(
            "no program rule matches link {link}"
        ))),
        _ => Err(EngineError::SequentializationFailed(format!(
            "link {link} matches several program rules: {candidates:?}"
        ))),
    }
}

fn junction_shapes_match(
    net: &ProofStructure,
    shape: &BipoleShape,
    variant: &crate::bipolarizer::Variant,
    junctions: &[Vec<LinkId>],
) -> bool {
    let pairs = shape.variant_groups(variant);
    if pairs.len() != junctions.len() {
        return false;
    }
    pairs.iter().zip(junctions).all(|((fi, gi), members)| {
        let branches = &shape.factors[*fi].groups[*gi].branches;
        if branches.len() != members.len() {
            return false;
        }
        branches.iter().zip(members).all(|(branch, m)| {
            let tops: Multiset = net
                .link(*m)
                .map(|l| {
                    l.top
                        .iter()
                        .filter_map(|p| net.label(*p).cloned())
                        .collect()
                })
                .unwrap_or_default();
            let expected: Multiset = branch.iter().cloned().collect();
            tops == expected
        })
    })
}

fn prove(
    net: &ProofStructure,
    rules: &BTreeMap<LinkId, RuleInfo>,
    state: &BTreeSet<PlaceId>,
    failed: &mut BTreeSet<Vec<PlaceId>>,
) -> Option<ProofTree> {
    if state.is_empty() {
        return None;
    }
    let key: Vec<PlaceId> = state.iter().copied().collect();
    if failed.contains(&key) {
        return None;
    }

    let conclusion = Sequent(
        state
            .iter()
            .filter_map(|p| net.label(*p).cloned())
            .collect(),
    );

    for (link, info) in rules {
        if !info.consumed.is_subset(state) {
            continue;
        }
        let remainder: BTreeSet<PlaceId> = state.difference(&info.consumed).copied().collect();
        if info.junctions.is_empty() && !remainder.is_empty() {
            continue; // a closing rule must consume the state exactly
        }
        let _ = link;
        // child states: cross product over junction hyperlinks
        let mut child_states: Vec<BTreeSet<PlaceId>> = vec![remainder.clone()];
        for members in &info.junctions {
            let mut next = Vec::new();
            for acc in &child_states {
                for m in members {
                    let mut s = acc.clone();
                    s.extend(
                        net.link(*m)
                            .map(|l| l.top.iter().copied())
                            .unwrap_or_default(),
                    );
                    next.push(s);
                }
            }
            child_states = next;
        }
        if info.junctions.is_empty() {
            child_states.clear();
        }

        let mut children = Vec::with_capacity(child_states.len());
        let mut ok = true;
        for child_state in &child_states {
            match prove(net, rules, child_state, failed) {
                Some(p) => children.push(p),
                None => {
                    ok = false;
                    break;
                }
            }
        }
        if ok {
            return Some(ProofTree {
                conclusion,
                rule: info.rule.clone(),
                children,
            });
        }
    }

    failed.insert(key);
    None
}
