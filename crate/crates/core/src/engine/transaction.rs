//! Transactional expansion: lock regions from the domination analysis,
//! restricted revalidation, and a lock-table manager for overlapping
//! in-flight expansions.
//!
//! A candidate expansion touches the existing structure at the creators of
//! its bound places and at its jump targets. Any new singularity-free loop
//! has to descend into the old structure at one such endpoint and climb back
//! at another, so the negative links that validation may visit are bounded
//! by the isolation regions of endpoint pairs, per slice, on the maximal
//! switching. Those regions are the lock set.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::analysis::{domination_forest, isolation_region, maximal_switching};
use crate::bipolarizer::Program;
use crate::formulas::{Atom, Polarity};
use crate::proofnet::{is_proof_net, search_loop, LinkId, LoopSearch, ProofStructure};

use super::{expand, Binding, EngineError, Expansion};

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum TxState {
    Pending,
    Validating,
    Committed,
    Aborted,
}

impl fmt::Display for TxState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TxState::Pending => f.write_str("pending"),
            TxState::Validating => f.write_str("validating"),
            TxState::Committed => f.write_str("committed"),
            TxState::Aborted => f.write_str("aborted"),
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Action {
    Begin,
    Lock,
    Commit,
    Abort,
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Action::Begin => f.write_str("begin"),
            Action::Lock => f.write_str("lock"),
            Action::Commit => f.write_str("commit"),
            Action::Abort => f.write_str("abort"),
        }
    }
}

/// One line of the trace format:
/// `step=<n> agent=<bipole> action=<a> locks=[ids] version=<v>`.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct TraceEvent {
    pub step: u64,
    pub agent: Atom,
    pub action: Action,
    pub locks: BTreeSet<LinkId>,
    pub version: u64,
}

impl TraceEvent {
    pub fn to_json(&self) -> String {
        let locks: Vec<String> = self.locks.iter().map(|l| format!("\"{l}\"")).collect();
        format!(
            "{{\"step\":{},\"agent\":\"{}\",\"action\":\"{}\",\"locks\":[{}],\"version\":{}}}",
            self.step,
            self.agent,
            self.action,
            locks.join(","),
            self.version
        )
    }
}

impl fmt::Display for TraceEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let locks: Vec<String> = self.locks.iter().map(|l| l.to_string()).collect();
        write!(
            f,
            "step={} agent={} action={} locks=[{}] version={}",
            self.step,
            self.agent,
            self.action,
            locks.join(","),
            self.version
        )
    }
}

/// One candidate expansion's lifecycle record.
#[derive(Clone, Debug)]
pub struct Transaction {
    pub id: u64,
    pub binding: Binding,
    pub state: TxState,
    pub locks: BTreeSet<LinkId>,
    /// Negative links the validation actually touched; always within the
    /// lock set plus the expansion's own new links.
    pub touched: BTreeSet<LinkId>,
    pub events: Vec<TraceEvent>,
}

/// Result of a one-shot transaction: the lifecycle record plus the
/// committed expansion. The input structure is never modified.
#[derive(Clone, Debug)]
pub struct TxOutcome {
    pub transaction: Transaction,
    pub result: Result<Expansion, EngineError>,
}

impl TxOutcome {
    pub fn committed(&self) -> Option<&ProofStructure> {
        self.result.as_ref().ok().map(|e| &e.net)
    }
}

/// Attachment points of a binding in the current structure: creators of the
/// bound places plus the jump targets.
pub(crate) fn endpoints(net: &ProofStructure, binding: &Binding) -> BTreeSet<LinkId> {
    let mut out: BTreeSet<LinkId> = BTreeSet::new();
    for p in binding.places.values() {
        out.extend(net.links_below(*p));
    }
    out.extend(binding.jumps.values().copied());
    out
}

/// The lock set of a candidate expansion: for every slice (on its maximal
/// switching) and every pair of distinct live endpoints, the isolation
/// region of the pair, united with the endpoints themselves.
pub(crate) fn lock_region(
    net: &ProofStructure,
    binding: &Binding,
) -> (BTreeSet<LinkId>, BTreeSet<LinkId>) {
    let ends = endpoints(net, binding);
    let mut locks: BTreeSet<LinkId> = ends.clone();
    if ends.len() >= 2 {
        for slice in net.slices() {
            let live: Vec<LinkId> = ends
                .iter()
                .copied()
                .filter(|l| slice.live_links.contains(l))
                .collect();
            if live.len() < 2 {
                continue;
            }
            let max = maximal_switching(net, &slice);
            let forest = domination_forest(net, &max);
            for (i, x) in live.iter().enumerate() {
                for y in live.iter().skip(i + 1) {
                    locks.extend(isolation_region(net, &max, &forest, *x, *y));
                }
            }
        }
    }
    (locks, ends)
}

/// Revalidates correctness after an expansion, restricted to slices that
/// keep at least one new link, on their maximal switchings, visiting only
/// locked negative links. Returns the touched negatives.
pub(crate) fn validate_expansion(
    expansion: &Expansion,
    locks: &BTreeSet<LinkId>,
    ends: &BTreeSet<LinkId>,
) -> (BTreeSet<LinkId>, Result<(), EngineError>) {
    let net = &expansion.net;
    let new_links = expansion.new_links();
    let new_positive: BTreeSet<LinkId> = expansion.links.values().copied().collect();
    let mut touched: BTreeSet<LinkId> = BTreeSet::new();

    for slice in net.slices() {
        if new_links.iter().all(|l| !slice.live_links.contains(l)) {
            continue; // the expansion is erased here; verdict unchanged
        }
        let max = maximal_switching(net, &slice);
        let allowed: BTreeSet<LinkId> = max
            .live_links
            .iter()
            .copied()
            .filter(|l| {
                net.link(*l).map(|l| l.polarity) == Some(Polarity::Positive)
                    || locks.contains(l)
                    || ends.contains(l)
                    || new_links.contains(l)
            })
            .collect();
        let outcome = search_loop(
            net,
            &max,
            &LoopSearch {
                allowed: Some(allowed),
                through: Some(new_positive.clone()),
            },
        );
        touched.extend(outcome.touched_negatives);
        if let Some(trip) = outcome.found {
            return (touched, Err(EngineError::ValidationFailed(trip)));
        }
    }
    (touched, Ok(()))
}

/// Runs one expansion as a transaction against a structure, with no
/// competing lock holders: compute the lock region, expand, revalidate the
/// affected slices, and either return the committed successor structure or
/// leave the input untouched.
pub fn try_transaction(net: &ProofStructure, program: &Program, binding: &Binding) -> TxOutcome {
    let mut tx = Transaction {
        id: 0,
        binding: binding.clone(),
        state: TxState::Pending,
        locks: BTreeSet::new(),
        touched: BTreeSet::new(),
        events: Vec::new(),
    };
    let mut step = 0u64;
    let mut log = |tx: &mut Transaction, action: Action| {
        tx.events.push(TraceEvent {
            step,
            agent: binding.head.clone(),
            action,
            locks: tx.locks.clone(),
            version: 0,
        });
        step += 1;
    };
    log(&mut tx, Action::Begin);

    let bipole = match program.bipole(&binding.head) {
        Some(b) => b,
        None => {
            tx.state = TxState::Aborted;
            log(&mut tx, Action::Abort);
            return TxOutcome {
                transaction: tx,
                result: Err(EngineError::UnknownBipole(binding.head.clone())),
            };
        }
    };

    let (locks, ends) = lock_region(net, binding);
    tx.locks = locks;
    log(&mut tx, Action::Lock);

    tx.state = TxState::Validating;
    let outcome = expand(net, bipole, binding).and_then(|expansion| {
        let (touched, verdict) = validate_expansion(&expansion, &tx.locks, &ends);
        tx.touched = touched;
        verdict.map(|()| expansion)
    });

    match outcome {
        Ok(expansion) => {
            debug_assert!(
                is_proof_net(&expansion.net),
                "commit must preserve correctness"
            );
            tx.state = TxState::Committed;
            log(&mut tx, Action::Commit);
            TxOutcome {
                transaction: tx,
                result: Ok(expansion),
            }
        }
        Err(e) => {
            tx.state = TxState::Aborted;
            log(&mut tx, Action::Abort);
            TxOutcome {
                transaction: tx,
                result: Err(e),
            }
        }
    }
}

struct PendingTx {
    binding: Binding,
    locks: BTreeSet<LinkId>,
    endpoints: BTreeSet<LinkId>,
}

/// Versioned structure store with a negative-link lock table. Commits
/// publish a fresh copy; readers of an existing version are never affected.
pub struct TransactionManager {
    versions: Vec<ProofStructure>,
    lock_table: BTreeMap<LinkId, u64>,
    pending: BTreeMap<u64, PendingTx>,
    next_tx: u64,
}

impl TransactionManager {
    pub fn new(initial: ProofStructure) -> TransactionManager {
        TransactionManager {
            versions: vec![initial],
            lock_table: BTreeMap::new(),
            pending: BTreeMap::new(),
            next_tx: 0,
        }
    }

    pub fn current(&self) -> &ProofStructure {
        self.versions.last().expect("at least the initial version")
    }

    pub fn version(&self) -> u64 {
        (self.versions.len() - 1) as u64
    }

    pub fn versions(&self) -> &[ProofStructure] {
        &self.versions
    }

    pub fn pending_count(&self) -> usize {
        self.pending.len()
    }

    /// Computes and acquires the lock region of a binding against the
    /// current version.
    pub fn begin(&mut self, binding: &Binding) -> Result<(u64, BTreeSet<LinkId>), EngineError> {
        let (locks, ends) = lock_region(self.current(), binding);
        for l in &locks {
            if let Some(holder) = self.lock_table.get(l) {
                return Err(EngineError::LockConflict { holder: *holder });
            }
        }
        let id = self.next_tx;
        self.next_tx += 1;
        for l in &locks {
            self.lock_table.insert(*l, id);
        }
        self.pending.insert(
            id,
            PendingTx {
                binding: binding.clone(),
                locks: locks.clone(),
                endpoints: ends,
            },
        );
        Ok((id, locks))
    }

    /// Validates and commits a pending transaction against the current
    /// version. The binding is re-checked (places may have been consumed by
    /// a commit since `begin`) and the lock region re-derived; missing locks
    /// are acquired when free. Locks are released either way.
    pub fn finish(
        &mut self,
        id: u64,
        program: &Program,
    ) -> (BTreeSet<LinkId>, Result<(), EngineError>) {
        let tx = match self.pending.remove(&id) {
            Some(tx) => tx,
            None => {
                return (
                    BTreeSet::new(),
                    Err(EngineError::BindingStale("unknown transaction".into())),
                )
            }
        };
        let result = self.finish_inner(&tx, program);
        self.release(id, &tx.locks);
        (tx.locks, result)
    }

    fn finish_inner(&mut self, tx: &PendingTx, program: &Program) -> Result<(), EngineError> {
        let bipole = program
            .bipole(&tx.binding.head)
            .ok_or_else(|| EngineError::UnknownBipole(tx.binding.head.clone()))?;

        // lock escalation: the region may have grown under commits that
        // happened since begin
        let (needed, ends) = lock_region(self.current(), &tx.binding);
        debug_assert_eq!(ends, tx.endpoints); // endpoints only depend on the binding
        for l in needed.difference(&tx.locks) {
            if let Some(holder) = self.lock_table.get(l) {
                return Err(EngineError::LockConflict { holder: *holder });
            }
        }

        let expansion = expand(self.current(), bipole, &tx.binding)?;
        let (_touched, verdict) = validate_expansion(&expansion, &needed, &ends);
        verdict?;
        debug_assert!(is_proof_net(&expansion.net));
        self.versions.push(expansion.net);
        Ok(())
    }

    /// Drops a pending transaction, releasing its locks. The structure is
    /// untouched.
    pub fn abort(&mut self, id: u64) -> BTreeSet<LinkId> {
        match self.pending.remove(&id) {
            Some(tx) => {
                self.release(id, &tx.locks);
                tx.locks
            }
            None => BTreeSet::new(),
        }
    }

    fn release(&mut self, id: u64, locks: &BTreeSet<LinkId>) {
        for l in locks {
            if self.lock_table.get(l) == Some(&id) {
                self.lock_table.remove(l);
            }
        }
    }
}
