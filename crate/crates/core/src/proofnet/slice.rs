//! Slices: the sub-structures induced by with-resolutions.
//!
//! A resolution picks one link in every negative hyperlink; the rest are
//! erased, and the erasure propagates upward to a fixpoint: a place dies
//! when all of its producers are dead, a link dies when any of its typed
//! places is dead. Jump edges survive with both endpoints.

use std::collections::{BTreeMap, BTreeSet};

use crate::formulas::Polarity;

use super::{HyperId, LinkId, PlaceId, ProofStructure};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Slice {
    /// Chosen link per negative hyperlink.
    pub resolution: BTreeMap<HyperId, LinkId>,
    pub live_links: BTreeSet<LinkId>,
    /// Surviving typed and junction places. Jump places follow their links.
    pub live_places: BTreeSet<PlaceId>,
    /// Surviving jump edges.
    pub jumps: BTreeSet<(LinkId, LinkId)>,
}

impl Slice {
    /// A copy of the slice keeping only the given jump edges.
    pub fn with_jumps(&self, jumps: BTreeSet<(LinkId, LinkId)>) -> Slice {
        Slice {
            resolution: self.resolution.clone(),
            live_links: self.live_links.clone(),
            live_places: self.live_places.clone(),
            jumps,
        }
    }

    /// Negative links surviving in the slice, ascending.
    pub fn negative_links(&self, net: &ProofStructure) -> Vec<LinkId> {
        self.live_links
            .iter()
            .copied()
            .filter(|l| net.link(*l).map(|l| l.polarity) == Some(Polarity::Negative))
            .collect()
    }

    /// Positive links with no live link below them: the roots of the slice.
    pub fn roots(&self, net: &ProofStructure) -> Vec<LinkId> {
        self.live_links
            .iter()
            .copied()
            .filter(|l| {
                let link = match net.link(*l) {
                    Some(link) => link,
                    None => return false,
                };
                link.polarity == Polarity::Positive
                    && link.bottom.iter().all(|p| {
                        net.links_below(*p)
                            .iter()
                            .all(|below| !self.live_links.contains(below))
                    })
            })
            .collect()
    }
}

impl ProofStructure {
    /// The slice induced by a with-resolution (one chosen link per negative
    /// hyperlink), after erasure to fixpoint.
    pub fn slice_for(&self, resolution: BTreeMap<HyperId, LinkId>) -> Slice {
        let mut dead_links: BTreeSet<LinkId> = BTreeSet::new();
        for h in self.hyperlinks() {
            if h.polarity != Polarity::Negative {
                continue;
            }
            let chosen = resolution.get(&h.id);
            for l in &h.links {
                if Some(l) != chosen {
                    dead_links.insert(*l);
                }
            }
        }

        // producers of each typed place
        let mut producers: BTreeMap<PlaceId, Vec<LinkId>> = BTreeMap::new();
        for link in self.links() {
            for p in &link.top {
                producers.entry(*p).or_default().push(link.id);
            }
        }

        let mut dead_places: BTreeSet<PlaceId> = BTreeSet::new();
        loop {
            let mut changed = false;
            for (p, prods) in &producers {
                if !dead_places.contains(p) && prods.iter().all(|l| dead_links.contains(l)) {
                    dead_places.insert(*p);
                    changed = true;
                }
            }
            for link in self.links() {
                if dead_links.contains(&link.id) {
                    continue;
                }
                if link
                    .top
                    .iter()
                    .chain(link.bottom.iter())
                    .any(|p| dead_places.contains(p))
                {
                    dead_links.insert(link.id);
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }

        let live_links: BTreeSet<LinkId> = self
            .links()
            .map(|l| l.id)
            .filter(|l| !dead_links.contains(l))
            .collect();
        let stars: BTreeSet<PlaceId> = self.links().filter_map(|l| l.jump).collect();
        let live_places: BTreeSet<PlaceId> = self
            .places()
            .map(|p| p.id)
            .filter(|p| !stars.contains(p) && !dead_places.contains(p))
            .collect();
        let jumps = self
            .jump_edges()
            .iter()
            .copied()
            .filter(|(x, y)| live_links.contains(x) && live_links.contains(y))
            .collect();

        Slice {
            resolution,
            live_links,
            live_places,
            jumps,
        }
    }

    /// The degenerate slice that erases nothing; the whole structure viewed
    /// as a single multiplicative graph.
    pub fn full_slice(&self) -> Slice {
        let resolution = self
            .hyperlinks()
            .filter(|h| h.polarity == Polarity::Negative && h.links.len() == 1)
            .map(|h| (h.id, *h.links.iter().next().expect("nonempty")))
            .collect();
        let stars: BTreeSet<PlaceId> = self.links().filter_map(|l| l.jump).collect();
        Slice {
            resolution,
            live_links: self.links().map(|l| l.id).collect(),
            live_places: self
                .places()
                .map(|p| p.id)
                .filter(|p| !stars.contains(p))
                .collect(),
            jumps: self.jump_edges().clone(),
        }
    }

    /// Lazily enumerates every slice, one per with-resolution, in
    /// lexicographic order over (hyperlink id, member link id).
    pub fn slices(&self) -> SliceIter<'_> {
        let choices: Vec<(HyperId, Vec<LinkId>)> = self
            .hyperlinks()
            .filter(|h| h.polarity == Polarity::Negative)
            .map(|h| (h.id, h.links.iter().copied().collect()))
            .collect();
        SliceIter {
            net: self,
            indices: vec![0; choices.len()],
            choices,
            done: false,
        }
    }

    /// The number of with-resolutions: the product over negative hyperlinks
    /// of their member counts.
    pub fn resolution_count(&self) -> u128 {
        self.hyperlinks()
            .filter(|h| h.polarity == Polarity::Negative)
            .map(|h| h.links.len() as u128)
            .product()
    }
}

/// Streaming enumeration of slices; the resolution space is never
/// materialized.
pub struct SliceIter<'a> {
    net: &'a ProofStructure,
    choices: Vec<(HyperId, Vec<LinkId>)>,
    indices: Vec<usize>,
    done: bool,
}

impl<'a> Iterator for SliceIter<'a> {
    type Item = Slice;

    fn next(&mut self) -> Option<Slice> {
        if self.done {
            return None;
        }
        if self.choices.iter().any(|(_, ls)| ls.is_empty()) {
            self.done = true;
            return None;
        }
        let resolution: BTreeMap<HyperId, LinkId> = self
            .choices
            .iter()
            .zip(&self.indices)
            .map(|((h, ls), i)| (*h, ls[*i]))
            .collect();
        // odometer increment
        let mut k = self.choices.len();
        loop {
            if k == 0 {
                self.done = true;
                break;
            }
            k -= 1;
            self.indices[k] += 1;
            if self.indices[k] < self.choices[k].1.len() {
                break;
            }
            self.indices[k] = 0;
        }
        Some(self.net.slice_for(resolution))
    }
}
