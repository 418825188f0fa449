//! Switching analysis: maximal jump edges, the domination order on negative
//! links, and the isolation regions that bound what an expansion has to
//! lock.
//!
//! The domination order is defined by trips: `x <= y` when every
//! singularity-free trip that starts at a root of the slice and stops with
//! an upward (bottom-side) arrival at `y` also arrives upward at `x` on the
//! way. The production computation enumerates those trips directly; walking
//! the state graph instead would launder entry sides through bounces and
//! disagree with the trip semantics, so the enumeration is the semantics
//! here and the test oracle is an independent re-implementation.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::formulas::Polarity;
use crate::proofnet::{find_loop, Entry, LinkId, LoopSearch, ProofStructure, Slice};

// ---------------------------------------------------------------------------
// Maximal switchings
// ---------------------------------------------------------------------------

/// Upward reachability over live links, by place sharing only (no jumps):
/// for each live link, every live link strictly above it.
fn above_closure(net: &ProofStructure, slice: &Slice) -> BTreeMap<LinkId, BTreeSet<LinkId>> {
    // one-step: links whose bottom shares a place with my top
    let mut step_up: BTreeMap<LinkId, BTreeSet<LinkId>> = BTreeMap::new();
    for l in &slice.live_links {
        let link = match net.link(*l) {
            Some(link) => link,
            None => continue,
        };
        let ups: BTreeSet<LinkId> = link
            .top
            .iter()
            .flat_map(|p| net.links_above(*p))
            .filter(|n| slice.live_links.contains(n))
            .collect();
        step_up.insert(*l, ups);
    }
    // transitive closure, small graphs
    let mut closure: BTreeMap<LinkId, BTreeSet<LinkId>> = step_up.clone();
    loop {
        let mut changed = false;
        for l in slice.live_links.iter() {
            let current: Vec<LinkId> = closure[l].iter().copied().collect();
            let mut add: BTreeSet<LinkId> = BTreeSet::new();
            for up in current {
                for next in &closure[&up] {
                    if !closure[l].contains(next) {
                        add.insert(*next);
                    }
                }
            }
            if !add.is_empty() {
                closure.get_mut(l).expect("present").extend(add);
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    closure
}

/// Keeps a jump edge (x, y) unless some other surviving positive link that
/// also depends on y sits strictly above x (and not conversely; mutual
/// aboveness keeps both edges, which can only add loops for the search to
/// find).
pub fn maximal_jump_edges(net: &ProofStructure, slice: &Slice) -> BTreeSet<(LinkId, LinkId)> {
    let above = above_closure(net, slice);
    let mut by_target: BTreeMap<LinkId, Vec<LinkId>> = BTreeMap::new();
    for (x, y) in &slice.jumps {
        by_target.entry(*y).or_default().push(*x);
    }
    let mut keep = BTreeSet::new();
    for (y, sources) in &by_target {
        for x in sources {
            let dominated = sources
                .iter()
                .any(|z| z != x && above[x].contains(z) && !above[z].contains(x));
            if !dominated {
                keep.insert((*x, *y));
            }
        }
    }
    keep
}

/// The maximal switching of a slice: same links, only maximal jump edges.
pub fn maximal_switching(net: &ProofStructure, slice: &Slice) -> Slice {
    slice.with_jumps(maximal_jump_edges(net, slice))
}

/// Correctness via maximal switchings: loop search restricted to maximal
/// jump edges, slice by slice. Agrees with the full check.
pub fn is_proof_net_fast(net: &ProofStructure) -> bool {
    net.slices().all(|s| {
        let max = maximal_switching(net, &s);
        find_loop(net, &max, &LoopSearch::default()).is_none()
    })
}

// ---------------------------------------------------------------------------
// Domination
// ---------------------------------------------------------------------------

/// The domination order of one slice, as dominator sets per negative link.
#[derive(Clone, Debug)]
pub struct DominationForest {
    /// For each live negative link y, the set of x with x <= y. Always
    /// contains y itself.
    dominators: BTreeMap<LinkId, BTreeSet<LinkId>>,
    /// Negative links no root trip stops at; kept as isolated nodes.
    unreachable: BTreeSet<LinkId>,
    roots: Vec<LinkId>,
}

// Safety valve for the exhaustive trip enumeration.
const TRIP_VISIT_BUDGET: u64 = 50_000_000;

/// Computes the domination order of a slice by enumerating every
/// singularity-free trip from the slice roots.
pub fn domination_forest(net: &ProofStructure, slice: &Slice) -> DominationForest {
    let negatives = slice.negative_links(net);
    let roots = slice.roots(net);
    let mut dominators: BTreeMap<LinkId, Option<BTreeSet<LinkId>>> =
        negatives.iter().map(|l| (*l, None)).collect();

    let ctx = crate::proofnet::step_ctx(net, slice);
    let mut budget = TRIP_VISIT_BUDGET;

    // Iterative DFS over simple paths. Each stack frame owns the move list
    // of one visited link.
    struct Frame {
        link: LinkId,
        moves: Vec<(LinkId, Entry)>,
        next: usize,
    }

    for root in &roots {
        let moves: Vec<(LinkId, Entry)> = ctx.successor_pairs(*root, None);
        let mut stack = vec![Frame {
            link: *root,
            moves,
            next: 0,
        }];
        let mut on_path: BTreeSet<LinkId> = BTreeSet::new();
        on_path.insert(*root);
        // negatives entered upward along the current path, in order
        let mut upward: Vec<LinkId> = Vec::new();
        let mut upward_at: Vec<usize> = Vec::new(); // stack depth markers

        while let Some(frame) = stack.last_mut() {
            let idx = frame.next;
            frame.next += 1;
            match frame.moves.get(idx).copied() {
                None => {
                    let left = stack.pop().expect("nonempty").link;
                    on_path.remove(&left);
                    while upward_at.last() == Some(&stack.len()) {
                        upward_at.pop();
                        upward.pop();
                    }
                }
                Some((to, entry)) => {
                    if on_path.contains(&to) {
                        continue;
                    }
                    budget = budget
                        .checked_sub(1)
                        .unwrap_or_else(|| panic!("trip enumeration budget exhausted"));
                    let is_negative = net.link(to).map(|l| l.polarity) == Some(Polarity::Negative);
                    if is_negative && entry == Entry::Bottom {
                        // a trip stopping upward at `to`
                        let mut visited: BTreeSet<LinkId> = upward.iter().copied().collect();
                        visited.insert(to);
                        match dominators.get_mut(&to).expect("negative is live") {
                            Some(acc) => {
                                acc.retain(|l| visited.contains(l));
                            }
                            acc @ None => *acc = Some(visited),
                        }
                        upward.push(to);
                        upward_at.push(stack.len());
                    }
                    on_path.insert(to);
                    let moves = ctx.successor_pairs(to, Some(entry));
                    stack.push(Frame {
                        link: to,
                        moves,
                        next: 0,
                    });
                }
            }
        }
    }

    let mut out = BTreeMap::new();
    let mut unreachable = BTreeSet::new();
    for (l, doms) in dominators {
        match doms {
            Some(set) => {
                out.insert(l, set);
            }
            None => {
                unreachable.insert(l);
                out.insert(l, BTreeSet::from([l]));
            }
        }
    }
    DominationForest {
        dominators: out,
        unreachable,
        roots,
    }
}

impl DominationForest {
    /// `x <= y`: x dominates y.
    pub fn le(&self, x: LinkId, y: LinkId) -> bool {
        self.dominators.get(&y).is_some_and(|d| d.contains(&x))
    }

    pub fn lt(&self, x: LinkId, y: LinkId) -> bool {
        x != y && self.le(x, y)
    }

    pub fn dominators_of(&self, y: LinkId) -> Option<&BTreeSet<LinkId>> {
        self.dominators.get(&y)
    }

    pub fn negative_links(&self) -> impl Iterator<Item = LinkId> + '_ {
        self.dominators.keys().copied()
    }

    pub fn roots(&self) -> &[LinkId] {
        &self.roots
    }

    pub fn is_unreachable(&self, l: LinkId) -> bool {
        self.unreachable.contains(&l)
    }

    /// Greatest lower bound of a nonempty set of negative links, when it
    /// exists.
    pub fn joint_dominator(&self, links: &BTreeSet<LinkId>) -> Option<LinkId> {
        let mut iter = links.iter();
        let first = iter.next()?;
        let mut common: BTreeSet<LinkId> = self.dominators.get(first)?.clone();
        for l in iter {
            let d = self.dominators.get(l)?;
            common.retain(|x| d.contains(x));
        }
        // greatest element of the common lower bounds
        common
            .iter()
            .copied()
            .find(|z| common.iter().all(|w| self.le(*w, *z)))
    }

    /// Greatest strict dominator of a link, absent for minimal elements.
    pub fn immediate_dominator(&self, x: LinkId) -> Option<LinkId> {
        let preds: BTreeSet<LinkId> = self
            .dominators
            .get(&x)?
            .iter()
            .copied()
            .filter(|z| *z != x)
            .collect();
        preds
            .iter()
            .copied()
            .find(|z| preds.iter().all(|w| self.le(*w, *z)))
    }

    /// Checks reflexivity, antisymmetry, transitivity and the forest
    /// condition.
    pub fn check_order_laws(&self) -> Result<(), String> {
        let links: Vec<LinkId> = self.negative_links().collect();
        for &y in &links {
            if !self.le(y, y) {
                return Err(format!("not reflexive at {y}"));
            }
        }
        for &x in &links {
            for &y in &links {
                if x != y && self.le(x, y) && self.le(y, x) {
                    return Err(format!("not antisymmetric at {x}, {y}"));
                }
                for &z in &links {
                    if self.le(x, y) && self.le(y, z) && !self.le(x, z) {
                        return Err(format!("not transitive at {x} <= {y} <= {z}"));
                    }
                }
            }
        }
        for &x in &links {
            for &y in &links {
                for &z in &links {
                    if self.le(x, z) && self.le(y, z) && !self.le(x, y) && !self.le(y, x) {
                        return Err(format!(
                            "forest condition fails: {x} and {y} both below {z} but incomparable"
                        ));
                    }
                }
            }
        }
        Ok(())
    }

    /// Immediate-dominator children, for rendering.
    fn children_of(&self, x: Option<LinkId>) -> Vec<LinkId> {
        self.negative_links()
            .filter(|l| self.immediate_dominator(*l) == x.filter(|_| true))
            .filter(|l| x.is_some() || self.immediate_dominator(*l).is_none())
            .collect()
    }
}

impl fmt::Display for DominationForest {
    /// Indented forest text: minimal elements at the margin, each link's
    /// immediately dominated links nested below it.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn render(
            forest: &DominationForest,
            node: LinkId,
            depth: usize,
            f: &mut fmt::Formatter<'_>,
        ) -> fmt::Result {
            for _ in 0..depth {
                f.write_str("  ")?;
            }
            if forest.is_unreachable(node) {
                writeln!(f, "{node} (unreachable)")?;
            } else {
                writeln!(f, "{node}")?;
            }
            let children: Vec<LinkId> = forest
                .negative_links()
                .filter(|l| forest.immediate_dominator(*l) == Some(node))
                .collect();
            for c in children {
                render(forest, c, depth + 1, f)?;
            }
            Ok(())
        }
        for root in self.children_of(None) {
            render(self, root, 0, f)?;
        }
        Ok(())
    }
}

/// The negative links strictly dominated by the joint dominator of x and y:
/// everything a singularity-free trip from x down to y up may visit. Falls
/// back to every negative link of the slice when the joint dominator is
/// undefined.
pub fn isolation_region(
    net: &ProofStructure,
    slice: &Slice,
    forest: &DominationForest,
    x: LinkId,
    y: LinkId,
) -> BTreeSet<LinkId> {
    let endpoints: BTreeSet<LinkId> = [x, y].into_iter().collect();
    match forest.joint_dominator(&endpoints) {
        None => slice.negative_links(net).into_iter().collect(),
        Some(glb) => forest
            .negative_links()
            .filter(|z| forest.lt(glb, *z))
            .collect(),
    }
}
