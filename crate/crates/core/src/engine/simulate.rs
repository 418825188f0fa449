//! Deterministic concurrency simulator: one agent per bipole, a seeded
//! scheduler interleaving transaction phases, and a replayable trace.
//!
//! An agent's turn either advances its in-flight transaction (validate and
//! commit against the current version) or proposes a new one (first usable
//! binding, locks acquired at begin). Lock conflicts back off exponentially
//! in simulated time, bounded, and a binding rejected at some version is
//! not retried at that version. The run ends when the structure is closed,
//! when every agent is permanently idle, or at the step budget.

use std::collections::BTreeSet;
use std::fmt;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use crate::bipolarizer::Program;
use crate::proofnet::ProofStructure;
use crate::sequent::Sequent;

use super::transaction::{Action, TraceEvent, TransactionManager};
use super::{match_trigger, Binding, EngineError};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Policy {
    RoundRobin,
    Random,
    /// Fixed agent order, cycled.
    Adversarial(Vec<usize>),
}

impl fmt::Display for Policy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Policy::RoundRobin => f.write_str("round-robin"),
            Policy::Random => f.write_str("random"),
            Policy::Adversarial(_) => f.write_str("adversarial"),
        }
    }
}

/// Interleaving policy plus seed; equal schedules give identical traces.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Schedule {
    pub seed: u64,
    pub policy: Policy,
}

impl Default for Schedule {
    fn default() -> Schedule {
        Schedule {
            seed: 0,
            policy: Policy::RoundRobin,
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct Trace {
    pub events: Vec<TraceEvent>,
}

impl Trace {
    pub fn commits(&self) -> usize {
        self.events
            .iter()
            .filter(|e| e.action == Action::Commit)
            .count()
    }

    pub fn aborts(&self) -> usize {
        self.events
            .iter()
            .filter(|e| e.action == Action::Abort)
            .count()
    }
}

impl fmt::Display for Trace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for e in &self.events {
            writeln!(f, "{e}")?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct SimOutcome {
    pub trace: Trace,
    pub final_net: ProofStructure,
    /// Every committed version, oldest first, starting with the goal
    /// structure.
    pub versions: Vec<ProofStructure>,
    /// True when the run ended with every branch of the structure handled.
    pub closed: bool,
    pub steps: u64,
}

const BACKOFF_CAP: u64 = 8;

struct Agent {
    index: usize,
    /// Transaction id, version at begin, and the proposed binding.
    pending: Option<(u64, u64, Binding)>,
    backoff_until: u64,
    backoff: u64,
    /// (version, binding) pairs already rejected; retried only after the
    /// structure changes.
    rejected: BTreeSet<(u64, Binding)>,
}

/// Runs the collaborative construction of the goal sequent by the program's
/// bipoles under the given schedule.
pub fn simulate(program: &Program, goal: &Sequent, sched: &Schedule, max_steps: u64) -> SimOutcome {
    let mut initial = ProofStructure::new();
    for atom in goal.atoms().iter() {
        initial.new_place(Some(atom.clone()));
    }
    let mut mgr = TransactionManager::new(initial);
    let mut trace = Trace::default();
    let mut rng = StdRng::seed_from_u64(sched.seed);

    let n = program.len();
    if n == 0 {
        let closed = mgr.current().is_closed();
        return SimOutcome {
            final_net: mgr.current().clone(),
            versions: mgr.versions().to_vec(),
            trace,
            closed,
            steps: 0,
        };
    }
    let mut agents: Vec<Agent> = (0..n)
        .map(|index| Agent {
            index,
            pending: None,
            backoff_until: 0,
            backoff: 1,
            rejected: BTreeSet::new(),
        })
        .collect();

    // quiescence detection: an agent is quiet once it proposed nothing
    // against the current version
    let mut idle_at: Vec<Option<u64>> = vec![None; n];
    let mut steps = 0u64;
    let mut closed = mgr.current().is_closed();

    while steps < max_steps && !closed {
        let pick = match &sched.policy {
            Policy::RoundRobin => (steps as usize) % n,
            Policy::Random => rng.gen_range(0..n),
            Policy::Adversarial(order) if order.is_empty() => (steps as usize) % n,
            Policy::Adversarial(order) => order[(steps as usize) % order.len()] % n,
        };
        let step = steps;
        steps += 1;

        let agent = &mut agents[pick];
        let head = program.bipoles()[agent.index].head.clone();
        let mut acted = false;

        if let Some((tx, begin_version, binding)) = agent.pending.take() {
            let (locks, result) = mgr.finish(tx, program);
            match result {
                Ok(()) => {
                    agent.backoff = 1;
                    trace.events.push(TraceEvent {
                        step,
                        agent: head.clone(),
                        action: Action::Commit,
                        locks,
                        version: mgr.version(),
                    });
                }
                Err(e) => {
                    trace.events.push(TraceEvent {
                        step,
                        agent: head.clone(),
                        action: Action::Abort,
                        locks,
                        version: mgr.version(),
                    });
                    if matches!(e, EngineError::LockConflict { .. }) {
                        agent.backoff_until = step + agent.backoff;
                        agent.backoff = (agent.backoff * 2).min(BACKOFF_CAP);
                    } else if mgr.version() == begin_version {
                        // deterministic rejection at this version; do not
                        // retry until something commits
                        agent.rejected.insert((begin_version, binding));
                    }
                }
            }
            acted = true;
        } else if agent.backoff_until <= step {
            // propose: first binding not yet rejected at this version, full
            // superposition first, its primary-only restriction as fallback
            let version = mgr.version();
            let bipole = &program.bipoles()[agent.index];
            let shape = bipole.shape();
            let mut candidates = Vec::new();
            for b in match_trigger(mgr.current(), bipole) {
                let primary = b.restricted_to_primary(&shape);
                candidates.push(b);
                candidates.push(primary);
            }
            candidates.dedup();
            let candidate = candidates
                .into_iter()
                .find(|b| !agent.rejected.contains(&(version, b.clone())));
            if let Some(binding) = candidate {
                match mgr.begin(&binding) {
                    Ok((tx, locks)) => {
                        agent.pending = Some((tx, version, binding.clone()));
                        trace.events.push(TraceEvent {
                            step,
                            agent: head.clone(),
                            action: Action::Begin,
                            locks: BTreeSet::new(),
                            version,
                        });
                        trace.events.push(TraceEvent {
                            step,
                            agent: head.clone(),
                            action: Action::Lock,
                            locks,
                            version,
                        });
                    }
                    Err(EngineError::LockConflict { .. }) => {
                        trace.events.push(TraceEvent {
                            step,
                            agent: head.clone(),
                            action: Action::Abort,
                            locks: BTreeSet::new(),
                            version,
                        });
                        agent.backoff_until = step + agent.backoff;
                        agent.backoff = (agent.backoff * 2).min(BACKOFF_CAP);
                    }
                    Err(_) => {
                        agent.rejected.insert((version, binding));
                        trace.events.push(TraceEvent {
                            step,
                            agent: head.clone(),
                            action: Action::Abort,
                            locks: BTreeSet::new(),
                            version,
                        });
                    }
                }
                acted = true;
                agent.rejected.retain(|(v, _)| *v == version);
            }
        }

        let version_now = mgr.version();
        if acted {
            idle_at = vec![None; n];
        } else {
            idle_at[pick] = Some(version_now);
        }
        closed = mgr.current().is_closed();

        let all_quiet = agents.iter().all(|a| a.pending.is_none())
            && agents.iter().all(|a| a.backoff_until <= steps)
            && idle_at.iter().all(|v| *v == Some(version_now));
        if all_quiet {
            break;
        }
    }

    SimOutcome {
        final_net: mgr.current().clone(),
        versions: mgr.versions().to_vec(),
        trace,
        closed,
        steps,
    }
}
