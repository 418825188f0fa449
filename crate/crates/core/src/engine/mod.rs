//! The incremental construction engine: trigger matching, expansion of a
//! structure by a bipole, transactional commits with dominator-derived lock
//! regions, sequentialization in both directions, and the deterministic
//! concurrency simulator.

mod deseq;
mod simulate;
mod transaction;

pub use deseq::{desequentialize, sequentialize};
pub use simulate::{simulate, Policy, Schedule, SimOutcome, Trace};
pub use transaction::{
    try_transaction, Action, TraceEvent, Transaction, TransactionManager, TxOutcome, TxState,
};

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::bipolarizer::{Bipole, BipoleShape};
use crate::formulas::{Atom, Polarity};
use crate::proofnet::{HyperId, LinkId, PlaceId, ProofStructure, Trip, ValidationReport};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EngineError {
    #[error("no bipole named {0} in the program")]
    UnknownBipole(Atom),
    #[error("binding is stale: {0}")]
    BindingStale(String),
    #[error("expansion violates the structural conditions:\n{0}")]
    Def3Violation(ValidationReport),
    #[error("expansion rejected: singularity-free loop {0}")]
    ValidationFailed(Trip),
    #[error("lock conflict with transaction {holder}")]
    LockConflict { holder: u64 },
    #[error("structure is not a proof net")]
    NotCorrect,
    #[error("de-sequentialization defect: {0}")]
    DeseqDefect(String),
    #[error("sequentialization failed: {0}")]
    SequentializationFailed(String),
}

/// A candidate expansion: a bipole, the primary variant pursued, the open
/// places each bound trigger occurrence consumes, and the jump target of
/// each bound variant's link.
///
/// The place map covers the primary variant and, opportunistically, any
/// other variant whose occurrences could all be bound; those variants become
/// member links of the new positive hyperlink.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct Binding {
    pub head: Atom,
    /// Primary variant, 1-based.
    pub variant: usize,
    /// Trigger occurrence index (into the bipole shape) to bound open place.
    pub places: BTreeMap<usize, PlaceId>,
    /// Variants realized as links of the new hyperlink, 1-based.
    pub bound_variants: BTreeSet<usize>,
    /// Jump target per bound variant.
    pub jumps: BTreeMap<usize, LinkId>,
}

impl Binding {
    /// The same binding reduced to its primary variant alone.
    pub fn restricted_to_primary(&self, shape: &BipoleShape) -> Binding {
        let v = &shape.variants[self.variant - 1];
        let places = self
            .places
            .iter()
            .filter(|(occ, _)| v.occs.contains(occ))
            .map(|(o, p)| (*o, *p))
            .collect();
        Binding {
            head: self.head.clone(),
            variant: self.variant,
            places,
            bound_variants: BTreeSet::from([self.variant]),
            jumps: BTreeMap::new(),
        }
    }

    /// A copy with caller-chosen jump targets.
    pub fn with_jumps(mut self, jumps: BTreeMap<usize, LinkId>) -> Binding {
        self.jumps = jumps;
        self
    }
}

/// Everything `expand` adds, with the new ids exposed for callers that need
/// to trace produced places back to branch choices.
#[derive(Clone, Debug)]
pub struct Expansion {
    pub net: ProofStructure,
    pub hyper: HyperId,
    /// New positive link per bound variant.
    pub links: BTreeMap<usize, LinkId>,
    /// New negative hyperlink per (factor, group) pair.
    pub group_hypers: BTreeMap<(usize, usize), HyperId>,
    /// Produced top place per (factor, group, branch, atom position).
    pub produced: BTreeMap<(usize, usize, usize, usize), PlaceId>,
    /// New negative links per (factor, group, branch).
    pub branch_links: BTreeMap<(usize, usize, usize), LinkId>,
}

impl Expansion {
    /// Every link the expansion added.
    pub fn new_links(&self) -> BTreeSet<LinkId> {
        self.links
            .values()
            .copied()
            .chain(self.branch_links.values().copied())
            .collect()
    }
}

/// Enumerates all bindings of a bipole against the open places of a
/// structure: for each variant, every injective label-respecting assignment
/// of its trigger occurrences, extended opportunistically to the other
/// variants and completed with creator-derived jump targets.
pub fn match_trigger(net: &ProofStructure, bipole: &Bipole) -> Vec<Binding> {
    let shape = bipole.shape();
    let open: Vec<PlaceId> = net.open_places();
    let mut out = Vec::new();

    for (vi, v) in shape.variants.iter().enumerate() {
        let variant = vi + 1;
        let mut used: BTreeSet<PlaceId> = BTreeSet::new();
        let mut assignment: BTreeMap<usize, PlaceId> = BTreeMap::new();
        let ctx = MatchCtx {
            net,
            shape: &shape,
            open: &open,
        };
        enumerate_assignments(
            &ctx,
            &v.occs,
            0,
            &mut used,
            &mut assignment,
            &mut |assignment, used| {
                let (places, bound) =
                    extend_to_other_variants(net, &shape, variant, assignment, used, &open);
                let mut binding = Binding {
                    head: bipole.head.clone(),
                    variant,
                    places,
                    bound_variants: bound,
                    jumps: BTreeMap::new(),
                };
                match auto_jumps(net, &shape, &binding) {
                    Some(jumps) => binding.jumps = jumps,
                    None => {
                        // toggling unsatisfiable for the full variant set;
                        // fall back to the primary variant alone
                        binding = binding.restricted_to_primary(&shape);
                    }
                }
                out.push(binding);
            },
        );
    }
    out
}

struct MatchCtx<'a> {
    net: &'a ProofStructure,
    shape: &'a BipoleShape,
    open: &'a [PlaceId],
}

fn enumerate_assignments(
    ctx: &MatchCtx<'_>,
    occs: &[usize],
    k: usize,
    used: &mut BTreeSet<PlaceId>,
    assignment: &mut BTreeMap<usize, PlaceId>,
    emit: &mut impl FnMut(&BTreeMap<usize, PlaceId>, &BTreeSet<PlaceId>),
) {
    if k == occs.len() {
        emit(assignment, used);
        return;
    }
    let occ = occs[k];
    let atom = &ctx.shape.occurrences[occ].atom;
    for p in ctx.open {
        if used.contains(p) || ctx.net.label(*p) != Some(atom) {
            continue;
        }
        used.insert(*p);
        assignment.insert(occ, *p);
        enumerate_assignments(ctx, occs, k + 1, used, assignment, emit);
        assignment.remove(&occ);
        used.remove(p);
    }
}

/// Extends a primary assignment to the remaining variants: each unbound
/// occurrence takes the first free open place with its label; variants that
/// cannot complete are left out.
fn extend_to_other_variants(
    net: &ProofStructure,
    shape: &BipoleShape,
    primary: usize,
    assignment: &BTreeMap<usize, PlaceId>,
    used: &BTreeSet<PlaceId>,
    open: &[PlaceId],
) -> (BTreeMap<usize, PlaceId>, BTreeSet<usize>) {
    let mut places = assignment.clone();
    let mut taken = used.clone();
    let mut bound = BTreeSet::from([primary]);

    for (wi, w) in shape.variants.iter().enumerate() {
        let variant = wi + 1;
        if variant == primary {
            continue;
        }
        let mut extra: Vec<(usize, PlaceId)> = Vec::new();
        let mut ok = true;
        for occ in &w.occs {
            if places.contains_key(occ) {
                continue;
            }
            let atom = &shape.occurrences[*occ].atom;
            let candidate = open
                .iter()
                .find(|p| !taken.contains(p) && net.label(**p) == Some(atom));
            match candidate {
                Some(p) => {
                    taken.insert(*p);
                    extra.push((*occ, *p));
                }
                None => {
                    ok = false;
                    break;
                }
            }
        }
        if ok {
            for (occ, p) in extra {
                places.insert(occ, p);
            }
            bound.insert(variant);
        } else {
            for (_, p) in extra {
                taken.remove(&p);
            }
        }
    }
    (places, bound)
}

/// Derives jump targets that realize the toggling condition: every bound
/// variant's link jumps to a distinct creator of one of its consumed places,
/// all targets within one negative hyperlink. A single bound variant needs
/// no jumps.
pub fn auto_jumps(
    net: &ProofStructure,
    shape: &BipoleShape,
    binding: &Binding,
) -> Option<BTreeMap<usize, LinkId>> {
    if binding.bound_variants.len() <= 1 {
        return Some(BTreeMap::new());
    }
    let variants: Vec<usize> = binding.bound_variants.iter().copied().collect();
    // creator candidates per variant
    let mut candidates: BTreeMap<usize, BTreeSet<LinkId>> = BTreeMap::new();
    for &v in &variants {
        let occs = &shape.variants[v - 1].occs;
        let mut set = BTreeSet::new();
        for occ in occs {
            if let Some(p) = binding.places.get(occ) {
                for creator in net.links_below(*p) {
                    set.insert(creator);
                }
            }
        }
        candidates.insert(v, set);
    }
    // common negative hyperlink with an injective choice of targets
    let hypers: Vec<HyperId> = net
        .hyperlinks()
        .filter(|h| h.polarity == Polarity::Negative)
        .map(|h| h.id)
        .collect();
    for h in hypers {
        let members = &net.hyperlink(h).expect("iterated id").links;
        let per_variant: Vec<Vec<LinkId>> = variants
            .iter()
            .map(|v| {
                candidates[v]
                    .iter()
                    .copied()
                    .filter(|c| members.contains(c))
                    .collect()
            })
            .collect();
        if per_variant.iter().any(|c| c.is_empty()) {
            continue;
        }
        if let Some(choice) = injective_choice(&per_variant) {
            return Some(variants.into_iter().zip(choice).collect());
        }
    }
    None
}

/// First injective selection (one item per row, all distinct), rows in
/// order, candidates ascending.
fn injective_choice(rows: &[Vec<LinkId>]) -> Option<Vec<LinkId>> {
    fn go(rows: &[Vec<LinkId>], k: usize, taken: &mut Vec<LinkId>) -> bool {
        if k == rows.len() {
            return true;
        }
        for cand in &rows[k] {
            if taken.contains(cand) {
                continue;
            }
            taken.push(*cand);
            if go(rows, k + 1, taken) {
                return true;
            }
            taken.pop();
        }
        false
    }
    let mut taken = Vec::new();
    if go(rows, 0, &mut taken) {
        Some(taken)
    } else {
        None
    }
}

/// Expands a structure by one bipole under a binding: the bound variants
/// become the links of a new positive hyperlink sitting on the bound places;
/// each (factor, group) pair of a bound variant becomes one negative
/// hyperlink over a fresh junction place, its links producing fresh labeled
/// top places per with-branch. The result must satisfy the structural
/// conditions or the expansion is rejected.
pub fn expand(
    net: &ProofStructure,
    bipole: &Bipole,
    binding: &Binding,
) -> Result<Expansion, EngineError> {
    if bipole.head != binding.head {
        return Err(EngineError::BindingStale(format!(
            "binding names {} but the bipole is {}",
            binding.head, bipole.head
        )));
    }
    let shape = bipole.shape();
    if !binding.bound_variants.contains(&binding.variant) {
        return Err(EngineError::BindingStale(
            "primary variant is not among the bound variants".into(),
        ));
    }
    for &v in &binding.bound_variants {
        let variant = shape
            .variants
            .get(v - 1)
            .ok_or_else(|| EngineError::BindingStale(format!("no variant {v}")))?;
        for occ in &variant.occs {
            if !binding.places.contains_key(occ) {
                return Err(EngineError::BindingStale(format!(
                    "variant {v} occurrence {occ} is unbound"
                )));
            }
        }
    }
    // places must be open, labeled correctly, and pairwise distinct
    let open: BTreeSet<PlaceId> = net.open_places().into_iter().collect();
    let mut seen: BTreeSet<PlaceId> = BTreeSet::new();
    for (occ, place) in &binding.places {
        if !open.contains(place) {
            return Err(EngineError::BindingStale(format!(
                "place {place} is not open"
            )));
        }
        if !seen.insert(*place) {
            return Err(EngineError::BindingStale(format!(
                "place {place} bound twice"
            )));
        }
        let expected = &shape.occurrences[*occ].atom;
        if net.label(*place) != Some(expected) {
            return Err(EngineError::BindingStale(format!(
                "place {place} is not labeled {expected}"
            )));
        }
    }
    for target in binding.jumps.values() {
        if net.link(*target).map(|l| l.polarity) != Some(Polarity::Negative) {
            return Err(EngineError::BindingStale(format!(
                "jump target {target} is not a negative link"
            )));
        }
    }

    let mut out = net.clone();

    // factor groups needed by any bound variant, in (factor, group) order
    let mut needed_groups: BTreeSet<(usize, usize)> = BTreeSet::new();
    for &v in &binding.bound_variants {
        for pair in shape.variant_groups(&shape.variants[v - 1]) {
            needed_groups.insert(pair);
        }
    }

    let mut junctions: BTreeMap<(usize, usize), PlaceId> = BTreeMap::new();
    let mut group_hypers: BTreeMap<(usize, usize), HyperId> = BTreeMap::new();
    let mut produced: BTreeMap<(usize, usize, usize, usize), PlaceId> = BTreeMap::new();
    let mut branch_links: BTreeMap<(usize, usize, usize), LinkId> = BTreeMap::new();

    for &(fi, gi) in &needed_groups {
        let junction = out.new_place(None);
        junctions.insert((fi, gi), junction);
        let group = &shape.factors[fi].groups[gi];
        let mut links = Vec::new();
        for (bi, branch) in group.branches.iter().enumerate() {
            let mut tops = Vec::new();
            for (ai, atom) in branch.iter().enumerate() {
                let p = out.new_place(Some(atom.clone()));
                produced.insert((fi, gi, bi, ai), p);
                tops.push(p);
            }
            let link = out.new_link(Polarity::Negative, tops, [junction]);
            branch_links.insert((fi, gi, bi), link);
            links.push(link);
        }
        let h = out.new_hyperlink(Polarity::Negative, links);
        group_hypers.insert((fi, gi), h);
    }

    let mut links: BTreeMap<usize, LinkId> = BTreeMap::new();
    for &v in &binding.bound_variants {
        let variant = &shape.variants[v - 1];
        let bottoms: BTreeSet<PlaceId> =
            variant.occs.iter().map(|occ| binding.places[occ]).collect();
        // one top class per factor: its junctions hang off one par spine
        let mut classes: BTreeMap<usize, BTreeSet<PlaceId>> = BTreeMap::new();
        for (fi, gi) in shape.variant_groups(variant) {
            classes.entry(fi).or_default().insert(junctions[&(fi, gi)]);
        }
        let tops: BTreeSet<PlaceId> = classes.values().flatten().copied().collect();
        let link = out.new_link_classed(
            Polarity::Positive,
            tops,
            bottoms,
            classes.into_values().collect(),
        );
        links.insert(v, link);
    }
    let hyper = out.new_hyperlink(Polarity::Positive, links.values().copied());
    out.set_tag(
        hyper,
        crate::proofnet::BipoleTag {
            head: bipole.head.clone(),
            variants: links.iter().map(|(v, l)| (*l, *v)).collect(),
        },
    );
    for (&v, &target) in &binding.jumps {
        if let Some(&link) = links.get(&v) {
            out.add_jump_edge(link, target);
        }
    }

    let report = out.validate();
    if !report.is_ok() {
        return Err(EngineError::Def3Violation(report));
    }
    Ok(Expansion {
        net: out,
        hyper,
        links,
        group_hypers,
        produced,
        branch_links,
    })
}
