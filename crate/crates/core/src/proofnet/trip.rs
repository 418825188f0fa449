//! Trips and the singularity-free loop search.
//!
//! A trip moves between adjacent links of a slice: downward through a place
//! shared by a bottom and a top, upward through the reverse, and across jump
//! edges in either direction. A negative link passed top-in/top-out is a
//! singularity; the correctness criterion demands a singularity in every
//! proper loop (more than two links) of every slice. A positive link never
//! carries a singularity, but a trip cannot enter and leave it through two
//! junctions of the same top class: those hang off one par spine and are
//! never connected below the negative layer above them.
//!
//! The search works on a state graph whose nodes are (link, entry) pairs —
//! entry being the bottom side or a specific top class — and whose
//! transitions exclude the forbidden passes. Strongly connected components
//! prune the search; an explicit depth-first extraction then looks for a
//! simple loop over at least three distinct links, which is exactly a
//! proper singularity-free loop trip.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::formulas::Polarity;

use super::{LinkId, PlaceId, ProofStructure, Slice};

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Debug, Hash)]
pub enum Side {
    Top,
    Bottom,
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Side::Top => f.write_str("top"),
            Side::Bottom => f.write_str("bottom"),
        }
    }
}

/// Entry point into a link: from below, or into a specific top class.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Debug)]
pub(crate) enum Entry {
    Bottom,
    /// Top entry; the payload is the top-class index at positive links and
    /// zero at negative links.
    Top(usize),
}

impl Entry {
    pub fn side(self) -> Side {
        match self {
            Entry::Bottom => Side::Bottom,
            Entry::Top(_) => Side::Top,
        }
    }
}

/// One pass of a loop trip: the link, the side it was entered on, and the
/// side it was exited on toward the next step (cyclically).
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct TripStep {
    pub link: LinkId,
    pub entry: Side,
    pub exit: Side,
}

/// A closed loop trip. Step `i` exits toward step `i + 1`, wrapping at the
/// end.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Trip {
    pub steps: Vec<TripStep>,
}

impl Trip {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// Proper loops span more than two links.
    pub fn is_proper(&self) -> bool {
        self.steps.len() > 2
    }

    /// Verifies the trip invariants against a slice: closed over distinct
    /// live links, each consecutive pair adjacency-realizable with the
    /// recorded sides, and no forbidden pass. Passes are checked at the
    /// place level: some choice of entry and exit places must realize both
    /// moves legally.
    pub fn validate(&self, net: &ProofStructure, slice: &Slice) -> Result<(), String> {
        if !self.is_proper() {
            return Err(format!("loop spans only {} links", self.steps.len()));
        }
        let mut seen = BTreeSet::new();
        for s in &self.steps {
            if !slice.live_links.contains(&s.link) {
                return Err(format!("{} is not live in the slice", s.link));
            }
            if !seen.insert(s.link) {
                return Err(format!("{} is visited twice", s.link));
            }
        }
        let ctx = StepCtx::new(net, slice);
        for (i, cur) in self.steps.iter().enumerate() {
            let prev = &self.steps[(i + self.steps.len() - 1) % self.steps.len()];
            let next = &self.steps[(i + 1) % self.steps.len()];
            // some entry realizing prev -> cur must admit some move cur -> next
            let entries: Vec<Entry> = ctx
                .moves(prev.link, None)
                .into_iter()
                .filter(|m| m.to == cur.link && m.entry.side() == cur.entry)
                .map(|m| m.entry)
                .collect();
            if entries.is_empty() {
                return Err(format!(
                    "no step from {} reaches {} at its {}",
                    prev.link, cur.link, cur.entry
                ));
            }
            let ok = entries.iter().any(|e| {
                ctx.moves(cur.link, Some(*e)).into_iter().any(|m| {
                    m.to == next.link && m.exit == cur.exit && m.entry.side() == next.entry
                })
            });
            if !ok {
                return Err(format!(
                    "no legal pass through {} ({}-entry, {}-exit)",
                    cur.link, cur.entry, cur.exit
                ));
            }
        }
        Ok(())
    }
}

impl fmt::Display for Trip {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for s in &self.steps {
            if !first {
                f.write_str(" -> ")?;
            }
            first = false;
            write!(f, "{}[{}/{}]", s.link, s.entry, s.exit)?;
        }
        Ok(())
    }
}

/// One admissible move between adjacent links.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) struct Move {
    pub to: LinkId,
    /// Entry into `to`.
    pub entry: Entry,
    /// Exit side at the source.
    pub exit: Side,
}

/// Adjacency context for one slice: shared-place incidence and surviving
/// jump edges.
pub(crate) struct StepCtx<'a> {
    net: &'a ProofStructure,
    slice: &'a Slice,
    above: BTreeMap<PlaceId, Vec<LinkId>>,
    below: BTreeMap<PlaceId, Vec<LinkId>>,
    jumps_from: BTreeMap<LinkId, Vec<LinkId>>,
    jumps_to: BTreeMap<LinkId, Vec<LinkId>>,
}

impl<'a> StepCtx<'a> {
    pub fn new(net: &'a ProofStructure, slice: &'a Slice) -> StepCtx<'a> {
        let mut above: BTreeMap<PlaceId, Vec<LinkId>> = BTreeMap::new();
        let mut below: BTreeMap<PlaceId, Vec<LinkId>> = BTreeMap::new();
        for l in net.links() {
            if !slice.live_links.contains(&l.id) {
                continue;
            }
            for p in &l.bottom {
                above.entry(*p).or_default().push(l.id);
            }
            for p in &l.top {
                below.entry(*p).or_default().push(l.id);
            }
        }
        let mut jumps_from: BTreeMap<LinkId, Vec<LinkId>> = BTreeMap::new();
        let mut jumps_to: BTreeMap<LinkId, Vec<LinkId>> = BTreeMap::new();
        for (x, y) in &slice.jumps {
            jumps_from.entry(*x).or_default().push(*y);
            jumps_to.entry(*y).or_default().push(*x);
        }
        StepCtx {
            net,
            slice,
            above,
            below,
            jumps_from,
            jumps_to,
        }
    }

    fn polarity(&self, l: LinkId) -> Polarity {
        self.net.link(l).expect("link exists").polarity
    }

    pub fn is_negative(&self, l: LinkId) -> bool {
        self.polarity(l) == Polarity::Negative
    }

    /// The entry produced by arriving at `to` through its top place `p`.
    fn top_entry(&self, to: LinkId, p: PlaceId) -> Entry {
        let link = self.net.link(to).expect("link exists");
        match link.polarity {
            Polarity::Negative => Entry::Top(0),
            Polarity::Positive => Entry::Top(link.class_of(p).unwrap_or(0)),
        }
    }

    /// Moves available from `link`, entered as `entry` (`None` at a trip
    /// start). A negative link entered at the top may only exit at the
    /// bottom; a positive link entered at a top class may not exit through
    /// the same class.
    pub fn moves(&self, link: LinkId, entry: Option<Entry>) -> Vec<Move> {
        let l = match self.net.link(link) {
            Some(l) => l,
            None => return Vec::new(),
        };
        let negative = l.polarity == Polarity::Negative;
        let blocked_class: Option<usize> = match (negative, entry) {
            (true, Some(Entry::Top(_))) => return self.bottom_moves(l),
            (false, Some(Entry::Top(c))) => Some(c),
            _ => None,
        };
        let mut out = self.bottom_moves(l);

        // upward, through a top place shared with a bottom above
        for p in &l.top {
            if !negative {
                if let (Some(b), Some(c)) = (blocked_class, l.class_of(*p)) {
                    if b == c {
                        continue;
                    }
                }
            }
            if let Some(nexts) = self.above.get(p) {
                for n in nexts {
                    if *n != link {
                        out.push(Move {
                            to: *n,
                            entry: Entry::Bottom,
                            exit: Side::Top,
                        });
                    }
                }
            }
        }
        // backward jump traversal exits through the negative top star
        if negative {
            if let Some(xs) = self.jumps_to.get(&link) {
                for x in xs {
                    out.push(Move {
                        to: *x,
                        entry: Entry::Bottom,
                        exit: Side::Top,
                    });
                }
            }
        }
        out.sort_by_key(|m| (m.to, m.entry, m.exit));
        out.dedup();
        out.retain(|m| self.slice.live_links.contains(&m.to));
        out
    }

    /// Downward exits: shared typed places and forward jump edges.
    fn bottom_moves(&self, l: &super::Link) -> Vec<Move> {
        let mut out = Vec::new();
        for p in &l.bottom {
            if let Some(nexts) = self.below.get(p) {
                for n in nexts {
                    if *n != l.id {
                        out.push(Move {
                            to: *n,
                            entry: self.top_entry(*n, *p),
                            exit: Side::Bottom,
                        });
                    }
                }
            }
        }
        if l.polarity == Polarity::Positive {
            if let Some(ys) = self.jumps_from.get(&l.id) {
                for y in ys {
                    out.push(Move {
                        to: *y,
                        entry: Entry::Top(0),
                        exit: Side::Bottom,
                    });
                }
            }
        }
        out.sort_by_key(|m| (m.to, m.entry, m.exit));
        out.dedup();
        out.retain(|m| self.slice.live_links.contains(&m.to));
        out
    }

    /// (target, entry) pairs, deduplicated, deterministic order.
    pub fn successor_pairs(&self, link: LinkId, entry: Option<Entry>) -> Vec<(LinkId, Entry)> {
        let mut v: Vec<(LinkId, Entry)> = self
            .moves(link, entry)
            .into_iter()
            .map(|m| (m.to, m.entry))
            .collect();
        v.dedup();
        v
    }
}

/// Crate-internal access to the stepping relation of one slice.
pub(crate) fn step_ctx<'a>(net: &'a ProofStructure, slice: &'a Slice) -> StepCtx<'a> {
    StepCtx::new(net, slice)
}

/// Options for the loop search.
#[derive(Default)]
pub struct LoopSearch {
    /// When set, only these links may be visited.
    pub allowed: Option<BTreeSet<LinkId>>,
    /// When set, only loops visiting at least one of these links are sought.
    pub through: Option<BTreeSet<LinkId>>,
}

/// Outcome of a restricted loop search: the loop, if any, plus every
/// negative link the search touched (state-graph nodes and extraction
/// visits).
pub(crate) struct SearchOutcome {
    pub touched_negatives: BTreeSet<LinkId>,
    pub found: Option<Trip>,
}

type State = (LinkId, Entry);

/// Searches one slice for a proper singularity-free loop trip.
pub fn find_loop(net: &ProofStructure, slice: &Slice, opts: &LoopSearch) -> Option<Trip> {
    search_loop(net, slice, opts).found
}

/// Searches a slice with no restrictions; `None` on every slice means the
/// structure is correct.
pub fn find_singularity_free_loop(net: &ProofStructure, slice: &Slice) -> Option<Trip> {
    find_loop(net, slice, &LoopSearch::default())
}

pub(crate) fn search_loop(net: &ProofStructure, slice: &Slice, opts: &LoopSearch) -> SearchOutcome {
    let ctx = StepCtx::new(net, slice);
    let permitted = |l: LinkId| opts.allowed.as_ref().is_none_or(|a| a.contains(&l));

    let mut touched: BTreeSet<LinkId> = BTreeSet::new();

    // state graph
    let mut states: Vec<State> = Vec::new();
    for l in &slice.live_links {
        if !permitted(*l) {
            continue;
        }
        states.push((*l, Entry::Bottom));
        match net.link(*l) {
            Some(link) if link.polarity == Polarity::Positive => {
                for c in 0..link.top_classes.len().max(1) {
                    states.push((*l, Entry::Top(c)));
                }
            }
            _ => states.push((*l, Entry::Top(0))),
        }
    }
    let index: BTreeMap<State, usize> = states.iter().enumerate().map(|(i, s)| (*s, i)).collect();
    let mut succ: Vec<Vec<usize>> = vec![Vec::new(); states.len()];
    for (i, (l, entry)) in states.iter().enumerate() {
        if ctx.is_negative(*l) {
            touched.insert(*l);
        }
        for m in ctx.moves(*l, Some(*entry)) {
            if !permitted(m.to) {
                continue;
            }
            if let Some(&j) = index.get(&(m.to, m.entry)) {
                succ[i].push(j);
            }
        }
    }

    // strongly connected components, then simple-cycle extraction per
    // component
    let sccs = tarjan(&succ);

    for comp in &sccs {
        if comp.len() < 2 {
            continue;
        }
        let comp_set: BTreeSet<usize> = comp.iter().copied().collect();
        let mut starts: Vec<usize> = comp_set.iter().copied().collect();
        starts.sort_by_key(|&s| states[s]);
        for &start in &starts {
            let (l0, _) = states[start];
            if let Some(must) = &opts.through {
                if !must.contains(&l0) {
                    continue;
                }
            }
            if let Some(trip) = extract_cycle(&states, &succ, &comp_set, start, &ctx, &mut touched)
            {
                return SearchOutcome {
                    touched_negatives: touched,
                    found: Some(trip),
                };
            }
        }
    }

    SearchOutcome {
        touched_negatives: touched,
        found: None,
    }
}

/// Depth-first search for a simple link cycle of length at least three that
/// starts and ends at `start`, confined to one strongly connected component.
fn extract_cycle(
    states: &[State],
    succ: &[Vec<usize>],
    comp: &BTreeSet<usize>,
    start: usize,
    ctx: &StepCtx<'_>,
    touched: &mut BTreeSet<LinkId>,
) -> Option<Trip> {
    struct Frame {
        state: usize,
        next_idx: usize,
    }

    let mut stack = vec![Frame {
        state: start,
        next_idx: 0,
    }];
    let mut on_path: BTreeSet<LinkId> = BTreeSet::new();
    on_path.insert(states[start].0);
    if ctx.is_negative(states[start].0) {
        touched.insert(states[start].0);
    }

    while let Some(frame) = stack.last_mut() {
        let state = frame.state;
        let idx = frame.next_idx;
        frame.next_idx += 1;
        match succ[state].get(idx) {
            None => {
                stack.pop();
                on_path.remove(&states[state].0);
            }
            Some(&next) => {
                if next == start && stack.len() >= 3 {
                    // close the loop; the exit side toward each following
                    // state is determined by its entry side
                    let mut steps = Vec::with_capacity(stack.len());
                    for (i, f) in stack.iter().enumerate() {
                        let (link, entry) = states[f.state];
                        let to_state = if i + 1 < stack.len() {
                            stack[i + 1].state
                        } else {
                            start
                        };
                        let (_, to_entry) = states[to_state];
                        let exit = match to_entry {
                            Entry::Top(_) => Side::Bottom,
                            Entry::Bottom => Side::Top,
                        };
                        steps.push(TripStep {
                            link,
                            entry: entry.side(),
                            exit,
                        });
                    }
                    return Some(Trip { steps });
                }
                if !comp.contains(&next) {
                    continue;
                }
                let (link, _) = states[next];
                if on_path.contains(&link) {
                    continue;
                }
                if ctx.is_negative(link) {
                    touched.insert(link);
                }
                on_path.insert(link);
                stack.push(Frame {
                    state: next,
                    next_idx: 0,
                });
            }
        }
    }
    None
}

/// Iterative Tarjan SCC over an adjacency-list digraph.
fn tarjan(succ: &[Vec<usize>]) -> Vec<Vec<usize>> {
    let n = succ.len();
    let mut index = vec![usize::MAX; n];
    let mut low = vec![0usize; n];
    let mut on_stack = vec![false; n];
    let mut stack: Vec<usize> = Vec::new();
    let mut next_index = 0usize;
    let mut out: Vec<Vec<usize>> = Vec::new();

    enum Ev {
        Enter(usize),
        Leave(usize, usize),
    }

    for root in 0..n {
        if index[root] != usize::MAX {
            continue;
        }
        let mut work = vec![Ev::Enter(root)];
        while let Some(ev) = work.pop() {
            match ev {
                Ev::Enter(v) => {
                    if index[v] != usize::MAX {
                        continue;
                    }
                    index[v] = next_index;
                    low[v] = next_index;
                    next_index += 1;
                    stack.push(v);
                    on_stack[v] = true;
                    work.push(Ev::Leave(v, usize::MAX));
                    for &w in succ[v].iter().rev() {
                        if index[w] == usize::MAX {
                            work.push(Ev::Leave(v, w));
                            work.push(Ev::Enter(w));
                        } else if on_stack[w] {
                            low[v] = low[v].min(index[w]);
                        }
                    }
                }
                Ev::Leave(v, child) => {
                    if child != usize::MAX {
                        // A child popped as its own component root is done;
                        // only merge lows within the open stack region.
                        if on_stack[child] {
                            low[v] = low[v].min(low[child]);
                        }
                        continue;
                    }
                    if low[v] == index[v] {
                        let mut comp = Vec::new();
                        while let Some(w) = stack.pop() {
                            on_stack[w] = false;
                            comp.push(w);
                            if w == v {
                                break;
                            }
                        }
                        comp.sort_unstable();
                        out.push(comp);
                    }
                }
            }
        }
    }
    out
}
