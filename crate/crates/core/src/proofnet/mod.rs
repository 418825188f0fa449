//! Bipolar focussing proof structures: places, links, hyperlinks and jump
//! edges, with structural validation, slicing, and the loop-based
//! correctness check.
//!
//! Orientation convention: structures grow upward. The bottom places of a
//! positive link are the resources it consumes; the top places of a negative
//! link are the resources it produces. A typed place that is at nobody's
//! bottom is *open* (available to a later expansion); a typed place at
//! nobody's top is part of the structure's *conclusion*.
//!
//! Jump places are untyped, as are the junction places that connect a
//! positive link to the negative hyperlinks above it; every other place
//! carries an atom label.

mod slice;
mod text;
mod trip;

pub mod dot;

pub use slice::{Slice, SliceIter};
pub use text::{net_from_text, net_to_text, NetTextError};
pub use trip::{find_loop, find_singularity_free_loop, LoopSearch, Side, Trip, TripStep};

pub(crate) use trip::{search_loop, step_ctx, Entry};

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::formulas::{Atom, Multiset, Polarity};

macro_rules! id_type {
    ($name:ident, $prefix:literal) => {
        #[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
        pub struct $name(pub u32);

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, "{}{}", $prefix, self.0)
            }
        }

        impl fmt::Debug for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, "{}{}", $prefix, self.0)
            }
        }
    };
}

id_type!(PlaceId, "p");
id_type!(LinkId, "l");
id_type!(HyperId, "h");

/// A resource place. Jump places and junction places carry no label.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Place {
    pub id: PlaceId,
    pub label: Option<Atom>,
}

/// A link: two disjoint sets of typed places plus an optional jump place.
/// The jump place of a positive link counts among its bottom places, that of
/// a negative link among its top places.
///
/// The top places of a positive link are partitioned into classes, one per
/// monopole factor of the bipole it realizes. Junctions in one class hang
/// off a common par spine, so a trip can never pass from one to another;
/// junctions in different classes are joined by the tensor structure and
/// are freely connected. Links built directly get one singleton class per
/// top place.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Link {
    pub id: LinkId,
    pub polarity: Polarity,
    pub top: BTreeSet<PlaceId>,
    pub bottom: BTreeSet<PlaceId>,
    pub jump: Option<PlaceId>,
    pub top_classes: Vec<BTreeSet<PlaceId>>,
}

impl Link {
    /// Index of the class a top place belongs to.
    pub fn class_of(&self, p: PlaceId) -> Option<usize> {
        self.top_classes.iter().position(|c| c.contains(&p))
    }
}

/// A set of same-polarity links sharing places.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Hyperlink {
    pub id: HyperId,
    pub polarity: Polarity,
    pub links: BTreeSet<LinkId>,
}

/// Provenance of a positive hyperlink built by the expansion engine: the
/// bipole head and the 1-based variant each member link realizes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BipoleTag {
    pub head: Atom,
    pub variants: BTreeMap<LinkId, usize>,
}

/// An immutable-after-construction proof structure. The expansion engine
/// mutates only fresh clones, so committed versions can be shared freely.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ProofStructure {
    places: BTreeMap<PlaceId, Place>,
    links: BTreeMap<LinkId, Link>,
    hyperlinks: BTreeMap<HyperId, Hyperlink>,
    jump_edges: BTreeSet<(LinkId, LinkId)>,
    tags: BTreeMap<HyperId, BipoleTag>,
    next_place: u32,
    next_link: u32,
    next_hyper: u32,
}

impl ProofStructure {
    pub fn new() -> ProofStructure {
        ProofStructure::default()
    }

    // -- construction -------------------------------------------------------

    pub fn new_place(&mut self, label: Option<Atom>) -> PlaceId {
        let id = PlaceId(self.next_place);
        self.next_place += 1;
        self.places.insert(id, Place { id, label });
        id
    }

    pub fn new_link(
        &mut self,
        polarity: Polarity,
        top: impl IntoIterator<Item = PlaceId>,
        bottom: impl IntoIterator<Item = PlaceId>,
    ) -> LinkId {
        let top: BTreeSet<PlaceId> = top.into_iter().collect();
        let top_classes = top.iter().map(|p| BTreeSet::from([*p])).collect();
        self.new_link_classed(polarity, top, bottom.into_iter().collect(), top_classes)
    }

    /// A link with an explicit top-class partition.
    pub fn new_link_classed(
        &mut self,
        polarity: Polarity,
        top: BTreeSet<PlaceId>,
        bottom: BTreeSet<PlaceId>,
        top_classes: Vec<BTreeSet<PlaceId>>,
    ) -> LinkId {
        let id = LinkId(self.next_link);
        self.next_link += 1;
        self.links.insert(
            id,
            Link {
                id,
                polarity,
                top,
                bottom,
                jump: None,
                top_classes,
            },
        );
        id
    }

    pub fn new_hyperlink(
        &mut self,
        polarity: Polarity,
        links: impl IntoIterator<Item = LinkId>,
    ) -> HyperId {
        let id = HyperId(self.next_hyper);
        self.next_hyper += 1;
        self.hyperlinks.insert(
            id,
            Hyperlink {
                id,
                polarity,
                links: links.into_iter().collect(),
            },
        );
        id
    }

    /// Records a jump edge from a positive to a negative link, creating the
    /// two jump places on demand.
    pub fn add_jump_edge(&mut self, pos: LinkId, neg: LinkId) {
        debug_assert_eq!(self.links[&pos].polarity, Polarity::Positive);
        debug_assert_eq!(self.links[&neg].polarity, Polarity::Negative);
        if self.links[&pos].jump.is_none() {
            let star = self.new_place(None);
            self.links.get_mut(&pos).expect("pos exists").jump = Some(star);
        }
        if self.links[&neg].jump.is_none() {
            let star = self.new_place(None);
            self.links.get_mut(&neg).expect("neg exists").jump = Some(star);
        }
        self.jump_edges.insert((pos, neg));
    }

    pub fn set_tag(&mut self, hyper: HyperId, tag: BipoleTag) {
        self.tags.insert(hyper, tag);
    }

    // raw insertion with caller-chosen ids, for the text loader

    pub(crate) fn insert_place_raw(&mut self, id: PlaceId, label: Option<Atom>) {
        self.next_place = self.next_place.max(id.0 + 1);
        self.places.insert(id, Place { id, label });
    }

    pub(crate) fn insert_link_raw(
        &mut self,
        id: LinkId,
        polarity: Polarity,
        top_classes: Vec<BTreeSet<PlaceId>>,
        bottom: BTreeSet<PlaceId>,
        jump: Option<PlaceId>,
    ) {
        self.next_link = self.next_link.max(id.0 + 1);
        let top: BTreeSet<PlaceId> = top_classes.iter().flatten().copied().collect();
        self.links.insert(
            id,
            Link {
                id,
                polarity,
                top,
                bottom,
                jump,
                top_classes,
            },
        );
    }

    pub(crate) fn insert_hyperlink_raw(
        &mut self,
        id: HyperId,
        polarity: Polarity,
        links: BTreeSet<LinkId>,
    ) {
        self.next_hyper = self.next_hyper.max(id.0 + 1);
        self.hyperlinks.insert(
            id,
            Hyperlink {
                id,
                polarity,
                links,
            },
        );
    }

    pub(crate) fn insert_jump_edge_raw(&mut self, pos: LinkId, neg: LinkId) {
        self.jump_edges.insert((pos, neg));
    }

    // -- access --------------------------------------------------------------

    pub fn places(&self) -> impl Iterator<Item = &Place> {
        self.places.values()
    }

    pub fn place(&self, id: PlaceId) -> Option<&Place> {
        self.places.get(&id)
    }

    pub fn label(&self, id: PlaceId) -> Option<&Atom> {
        self.places.get(&id).and_then(|p| p.label.as_ref())
    }

    pub fn links(&self) -> impl Iterator<Item = &Link> {
        self.links.values()
    }

    pub fn link(&self, id: LinkId) -> Option<&Link> {
        self.links.get(&id)
    }

    pub fn hyperlinks(&self) -> impl Iterator<Item = &Hyperlink> {
        self.hyperlinks.values()
    }

    pub fn hyperlink(&self, id: HyperId) -> Option<&Hyperlink> {
        self.hyperlinks.get(&id)
    }

    pub fn jump_edges(&self) -> &BTreeSet<(LinkId, LinkId)> {
        &self.jump_edges
    }

    pub fn tag(&self, hyper: HyperId) -> Option<&BipoleTag> {
        self.tags.get(&hyper)
    }

    pub fn tags(&self) -> impl Iterator<Item = (&HyperId, &BipoleTag)> {
        self.tags.iter()
    }

    /// The hyperlink a link belongs to.
    pub fn hyper_of(&self, link: LinkId) -> Option<HyperId> {
        self.hyperlinks
            .values()
            .find(|h| h.links.contains(&link))
            .map(|h| h.id)
    }

    /// Links sitting above the place: those with `p` among their bottoms.
    pub fn links_above(&self, p: PlaceId) -> Vec<LinkId> {
        self.links
            .values()
            .filter(|l| l.bottom.contains(&p))
            .map(|l| l.id)
            .collect()
    }

    /// Links sitting below the place: those with `p` among their tops. These
    /// are the producers (creators) of the place.
    pub fn links_below(&self, p: PlaceId) -> Vec<LinkId> {
        self.links
            .values()
            .filter(|l| l.top.contains(&p))
            .map(|l| l.id)
            .collect()
    }

    /// Typed places consumed by nobody, available for expansion.
    pub fn open_places(&self) -> Vec<PlaceId> {
        let consumed: BTreeSet<PlaceId> = self
            .links
            .values()
            .flat_map(|l| l.bottom.iter().copied())
            .collect();
        self.places
            .values()
            .filter(|p| p.label.is_some() && !consumed.contains(&p.id))
            .map(|p| p.id)
            .collect()
    }

    /// Typed places produced by nobody: the structure's conclusion.
    pub fn conclusion_places(&self) -> Vec<PlaceId> {
        let produced: BTreeSet<PlaceId> = self
            .links
            .values()
            .flat_map(|l| l.top.iter().copied())
            .collect();
        self.places
            .values()
            .filter(|p| p.label.is_some() && !produced.contains(&p.id))
            .map(|p| p.id)
            .collect()
    }

    pub fn conclusion_atoms(&self) -> Multiset {
        self.conclusion_places()
            .into_iter()
            .filter_map(|p| self.label(p).cloned())
            .collect()
    }

    /// A structure is closed when every slice covers all of its surviving
    /// typed places: nothing remains to prove in any with-resolution.
    pub fn is_closed(&self) -> bool {
        self.slices().all(|s| {
            s.live_places.iter().all(|p| {
                self.links_above(*p)
                    .iter()
                    .any(|l| s.live_links.contains(l))
            })
        })
    }

    // -- validation -----------------------------------------------------------

    /// Checks the structural conditions; see [`Violation`] for the catalog.
    pub fn validate(&self) -> ValidationReport {
        let mut v = Vec::new();

        // link arity and shape
        for l in self.links.values() {
            if !l.top.is_disjoint(&l.bottom) {
                v.push(Violation::TopBottomOverlap { link: l.id });
            }
            let classed: BTreeSet<PlaceId> = l.top_classes.iter().flatten().copied().collect();
            let class_total: usize = l.top_classes.iter().map(|c| c.len()).sum();
            if classed != l.top || class_total != l.top.len() {
                v.push(Violation::LinkArity {
                    link: l.id,
                    reason: "top classes must partition the top places".into(),
                });
            }
            match l.polarity {
                Polarity::Positive => {
                    if l.bottom.is_empty() && l.jump.is_none() {
                        v.push(Violation::LinkArity {
                            link: l.id,
                            reason: "positive link needs at least one bottom place".into(),
                        });
                    }
                }
                Polarity::Negative => {
                    if l.bottom.len() != 1 {
                        v.push(Violation::LinkArity {
                            link: l.id,
                            reason: "negative link needs exactly one bottom place".into(),
                        });
                    }
                }
            }
            if let Some(star) = l.jump {
                if self
                    .places
                    .get(&star)
                    .map(|p| p.label.is_some())
                    .unwrap_or(true)
                {
                    v.push(Violation::LinkArity {
                        link: l.id,
                        reason: "jump place must be an unlabeled place".into(),
                    });
                }
            }
        }

        // hyperlink membership: every link in exactly one hyperlink
        let mut owner: BTreeMap<LinkId, HyperId> = BTreeMap::new();
        for h in self.hyperlinks.values() {
            if h.links.is_empty() {
                v.push(Violation::HyperlinkEmpty { hyper: h.id });
            }
            for l in &h.links {
                if let Some(prev) = owner.insert(*l, h.id) {
                    v.push(Violation::LinkInMultipleHyperlinks {
                        link: *l,
                        a: prev,
                        b: h.id,
                    });
                }
                if let Some(link) = self.links.get(l) {
                    if link.polarity != h.polarity {
                        v.push(Violation::HyperlinkPolarityMix {
                            hyper: h.id,
                            link: *l,
                        });
                    }
                }
            }
        }
        for l in self.links.keys() {
            if !owner.contains_key(l) {
                v.push(Violation::LinkOutsideHyperlinks { link: *l });
            }
        }

        // hyperlink shape: pairwise sharing; unique bottom for negatives
        for h in self.hyperlinks.values() {
            let members: Vec<&Link> = h.links.iter().filter_map(|l| self.links.get(l)).collect();
            for (i, a) in members.iter().enumerate() {
                for b in members.iter().skip(i + 1) {
                    let shares = !a.top.is_disjoint(&b.top)
                        || !a.bottom.is_disjoint(&b.bottom)
                        || !a.top.is_disjoint(&b.bottom)
                        || !a.bottom.is_disjoint(&b.top);
                    if !shares {
                        v.push(Violation::HyperlinkPairwiseShare {
                            hyper: h.id,
                            a: a.id,
                            b: b.id,
                        });
                    }
                }
            }
            if h.polarity == Polarity::Negative {
                let bottoms: BTreeSet<PlaceId> = members
                    .iter()
                    .flat_map(|l| l.bottom.iter().copied())
                    .collect();
                if bottoms.len() > 1 {
                    v.push(Violation::NegativeHyperlinkBottom { hyper: h.id });
                }
            }
        }

        // condition 1: top (bottom) place sets of distinct hyperlinks are disjoint
        let hyper_tops: BTreeMap<HyperId, BTreeSet<PlaceId>> = self
            .hyperlinks
            .values()
            .map(|h| {
                (
                    h.id,
                    h.links
                        .iter()
                        .filter_map(|l| self.links.get(l))
                        .flat_map(|l| l.top.iter().copied())
                        .collect(),
                )
            })
            .collect();
        let hyper_bottoms: BTreeMap<HyperId, BTreeSet<PlaceId>> = self
            .hyperlinks
            .values()
            .map(|h| {
                (
                    h.id,
                    h.links
                        .iter()
                        .filter_map(|l| self.links.get(l))
                        .flat_map(|l| l.bottom.iter().copied())
                        .collect(),
                )
            })
            .collect();
        let ids: Vec<HyperId> = self.hyperlinks.keys().copied().collect();
        for (i, a) in ids.iter().enumerate() {
            for b in ids.iter().skip(i + 1) {
                if let Some(p) = hyper_tops[a].intersection(&hyper_tops[b]).next() {
                    v.push(Violation::Disjointness {
                        a: *a,
                        b: *b,
                        place: *p,
                    });
                }
                if let Some(p) = hyper_bottoms[a].intersection(&hyper_bottoms[b]).next() {
                    v.push(Violation::Disjointness {
                        a: *a,
                        b: *b,
                        place: *p,
                    });
                }
            }
        }

        // condition 2: adjacent hyperlinks have opposite polarity
        for a in &ids {
            for b in &ids {
                if a == b {
                    continue;
                }
                if let Some(p) = hyper_tops[a].intersection(&hyper_bottoms[b]).next() {
                    let pa = self.hyperlinks[a].polarity;
                    let pb = self.hyperlinks[b].polarity;
                    if pa == pb {
                        v.push(Violation::PolarityAlternation {
                            a: *a,
                            b: *b,
                            place: *p,
                        });
                    }
                }
            }
        }

        // condition 3: in any positive hyperlink every pair of links is toggled
        let jump_targets: BTreeMap<LinkId, BTreeSet<LinkId>> = {
            let mut m: BTreeMap<LinkId, BTreeSet<LinkId>> = BTreeMap::new();
            for (x, y) in &self.jump_edges {
                m.entry(*x).or_default().insert(*y);
            }
            m
        };
        for h in self
            .hyperlinks
            .values()
            .filter(|h| h.polarity == Polarity::Positive)
        {
            let members: Vec<LinkId> = h.links.iter().copied().collect();
            for (i, x1) in members.iter().enumerate() {
                for x2 in members.iter().skip(i + 1) {
                    if !self.pair_toggled(*x1, *x2, &jump_targets) {
                        v.push(Violation::Toggling {
                            hyper: h.id,
                            a: *x1,
                            b: *x2,
                        });
                    }
                }
            }
        }

        // condition 4: links do not share jump places
        let mut star_owner: BTreeMap<PlaceId, LinkId> = BTreeMap::new();
        for l in self.links.values() {
            if let Some(star) = l.jump {
                if let Some(prev) = star_owner.insert(star, l.id) {
                    v.push(Violation::JumpPlaceSharing {
                        a: prev,
                        b: l.id,
                        place: star,
                    });
                }
            }
        }

        // jump edge endpoints
        for (x, y) in &self.jump_edges {
            let ok = self.links.get(x).map(|l| l.polarity) == Some(Polarity::Positive)
                && self.links.get(y).map(|l| l.polarity) == Some(Polarity::Negative);
            if !ok {
                v.push(Violation::BadJumpEdge { from: *x, to: *y });
            }
        }

        ValidationReport { violations: v }
    }

    fn pair_toggled(
        &self,
        x1: LinkId,
        x2: LinkId,
        jump_targets: &BTreeMap<LinkId, BTreeSet<LinkId>>,
    ) -> bool {
        let empty = BTreeSet::new();
        let t1 = jump_targets.get(&x1).unwrap_or(&empty);
        let t2 = jump_targets.get(&x2).unwrap_or(&empty);
        for y1 in t1 {
            for y2 in t2 {
                if y1 == y2 {
                    continue;
                }
                if let (Some(h1), Some(h2)) = (self.hyper_of(*y1), self.hyper_of(*y2)) {
                    if h1 == h2 {
                        return true;
                    }
                }
            }
        }
        false
    }
}

/// One violated structural condition, with the offending ids.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Violation {
    LinkArity {
        link: LinkId,
        reason: String,
    },
    TopBottomOverlap {
        link: LinkId,
    },
    HyperlinkEmpty {
        hyper: HyperId,
    },
    HyperlinkPolarityMix {
        hyper: HyperId,
        link: LinkId,
    },
    HyperlinkPairwiseShare {
        hyper: HyperId,
        a: LinkId,
        b: LinkId,
    },
    NegativeHyperlinkBottom {
        hyper: HyperId,
    },
    LinkInMultipleHyperlinks {
        link: LinkId,
        a: HyperId,
        b: HyperId,
    },
    LinkOutsideHyperlinks {
        link: LinkId,
    },
    /// Distinct hyperlinks share a top place or share a bottom place.
    Disjointness {
        a: HyperId,
        b: HyperId,
        place: PlaceId,
    },
    /// Adjacent hyperlinks with equal polarity.
    PolarityAlternation {
        a: HyperId,
        b: HyperId,
        place: PlaceId,
    },
    /// A pair of links in a positive hyperlink no negative hyperlink toggles.
    Toggling {
        hyper: HyperId,
        a: LinkId,
        b: LinkId,
    },
    /// Two links own the same jump place.
    JumpPlaceSharing {
        a: LinkId,
        b: LinkId,
        place: PlaceId,
    },
    BadJumpEdge {
        from: LinkId,
        to: LinkId,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::LinkArity { link, reason } => write!(f, "{link}: {reason}"),
            Violation::TopBottomOverlap { link } => {
                write!(f, "{link}: top and bottom places overlap")
            }
            Violation::HyperlinkEmpty { hyper } => write!(f, "{hyper}: empty hyperlink"),
            Violation::HyperlinkPolarityMix { hyper, link } => {
                write!(f, "{hyper}: member {link} has the wrong polarity")
            }
            Violation::HyperlinkPairwiseShare { hyper, a, b } => {
                write!(f, "{hyper}: members {a} and {b} share no place")
            }
            Violation::NegativeHyperlinkBottom { hyper } => {
                write!(
                    f,
                    "{hyper}: negative hyperlink must have a unique bottom place"
                )
            }
            Violation::LinkInMultipleHyperlinks { link, a, b } => {
                write!(f, "{link}: appears in both {a} and {b}")
            }
            Violation::LinkOutsideHyperlinks { link } => {
                write!(f, "{link}: belongs to no hyperlink")
            }
            Violation::Disjointness { a, b, place } => {
                write!(
                    f,
                    "hyperlinks {a} and {b} share place {place} on the same side"
                )
            }
            Violation::PolarityAlternation { a, b, place } => {
                write!(
                    f,
                    "adjacent hyperlinks {a} and {b} (at {place}) have equal polarity"
                )
            }
            Violation::Toggling { hyper, a, b } => {
                write!(
                    f,
                    "{hyper}: links {a} and {b} are not toggled by any negative hyperlink"
                )
            }
            Violation::JumpPlaceSharing { a, b, place } => {
                write!(f, "links {a} and {b} share jump place {place}")
            }
            Violation::BadJumpEdge { from, to } => {
                write!(
                    f,
                    "jump edge {from} -> {to} must go from a positive to a negative link"
                )
            }
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_ok() {
            write!(f, "ok")
        } else {
            for (i, v) in self.violations.iter().enumerate() {
                if i > 0 {
                    writeln!(f)?;
                }
                write!(f, "{v}")?;
            }
            Ok(())
        }
    }
}

/// Checks the structural conditions of a candidate structure.
pub fn validate_bps(p: &ProofStructure) -> ValidationReport {
    p.validate()
}

/// True iff every slice is free of proper singularity-free loop trips.
pub fn is_proof_net(p: &ProofStructure) -> bool {
    p.slices()
        .all(|s| find_singularity_free_loop(p, &s).is_none())
}

#[cfg(test)]
mod tests;
