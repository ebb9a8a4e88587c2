//! Deterministic discrete-event network for driving replica clusters.
//!
//! Everything observable is a function of the scenario and the master seed:
//! events are ordered by `(time, insertion sequence)`, every random draw
//! (delays, per-node clock skew) comes from a seeded generator consumed in
//! that order, and replicas own their own seeded generators. Running the
//! same configuration twice yields byte-identical traces.

use crate::chain::Block;
use crate::pbft::{Action, Behavior, NodeId, Replica, SignedMessage, TraceEvent};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};
use std::cmp::Reverse;
use std::collections::{BinaryHeap, BTreeMap, BTreeSet};

/// A nodes-versus-rest network split active during a time window.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Partition {
    pub from_ms: u64,
    pub to_ms: u64,
    pub group_a: BTreeSet<NodeId>,
}

/// Message-delay model: `base + uniform(0..=jitter)`, capped at `delta_ms`
/// once the network has stabilized. Before `stabilization_ms` the cap does
/// not apply, so early messages may take arbitrarily long within the jitter
/// budget.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DelayModel {
    pub base_ms: u64,
    pub jitter_ms: u64,
    pub stabilization_ms: u64,
    pub delta_ms: u64,
    #[serde(default)]
    pub partitions: Vec<Partition>,
}

impl Default for DelayModel {
    fn default() -> Self {
        DelayModel {
            base_ms: 50,
            jitter_ms: 100,
            stabilization_ms: 0,
            delta_ms: 2_000,
            partitions: Vec::new(),
        }
    }
}

impl DelayModel {
    fn partitioned(&self, a: NodeId, b: NodeId, t: u64) -> bool {
        self.partitions.iter().any(|p| {
            t >= p.from_ms && t < p.to_ms && (p.group_a.contains(&a) != p.group_a.contains(&b))
        })
    }

    fn sample(&self, t: u64, rng: &mut ChaCha12Rng) -> u64 {
        let raw = self.base_ms + rng.gen_range(0..=self.jitter_ms);
        if t >= self.stabilization_ms {
            raw.min(self.delta_ms)
        } else {
            raw
        }
    }
}

/// Scheduled failures: byzantine behaviors are installed at construction,
/// crashes silence a node from the given sim time on.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct FaultPlan {
    #[serde(default)]
    pub byzantine: BTreeMap<NodeId, Behavior>,
    #[serde(default)]
    pub crashes: BTreeMap<NodeId, u64>,
}

/// One line of the run trace: sim time, local node, and the node's event.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TraceRecord {
    pub t: u64,
    pub node: NodeId,
    #[serde(flatten)]
    pub event: TraceEvent,
}

#[derive(Debug, Clone)]
enum Payload {
    Msg(SignedMessage),
    Block(Block),
    ChainRequest { from_height: u64 },
}

#[derive(Debug, Clone)]
enum EventKind {
    Deliver {
        to: NodeId,
        from: NodeId,
        payload: Payload,
    },
    RoundWakeup {
        node: NodeId,
        height: u64,
    },
    VcTimer {
        node: NodeId,
        epoch: u64,
    },
}

struct Event {
    at: u64,
    seq: u64,
    kind: EventKind,
}

impl PartialEq for Event {
    fn eq(&self, other: &Self) -> bool {
        (self.at, self.seq) == (other.at, other.seq)
    }
}
impl Eq for Event {}
impl PartialOrd for Event {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Event {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        (self.at, self.seq).cmp(&(other.at, other.seq))
    }
}

pub struct SimNet {
    pub replicas: Vec<Replica>,
    /// Per-node clock skew in ms (local = sim + skew), fixed per run.
    pub skews: Vec<i64>,
    crash_at: Vec<Option<u64>>,
    vc_epoch: Vec<u64>,
    delay: DelayModel,
    rng: ChaCha12Rng,
    queue: BinaryHeap<Reverse<Event>>,
    seq: u64,
    now: u64,
    pub trace: Vec<TraceRecord>,
    pub events_processed: u64,
    max_events: u64,
}

impl SimNet {
    pub fn new(
        replicas: Vec<Replica>,
        delay: DelayModel,
        faults: &FaultPlan,
        skew_magnitude_ms: u64,
        seed: u64,
        max_events: u64,
    ) -> Self {
        let n = replicas.len();
        let mut rng = ChaCha12Rng::seed_from_u64(seed ^ 0x5349_4d4e_4554); // "SIMNET"
        let skews: Vec<i64> = (0..n)
            .map(|_| {
                if skew_magnitude_ms == 0 {
                    0
                } else {
                    rng.gen_range(-(skew_magnitude_ms as i64)..=skew_magnitude_ms as i64)
                }
            })
            .collect();
        let crash_at = (0..n as NodeId)
            .map(|i| faults.crashes.get(&i).copied())
            .collect();
        SimNet {
            replicas,
            skews,
            crash_at,
            vc_epoch: vec![0; n],
            delay,
            rng,
            queue: BinaryHeap::new(),
            seq: 0,
            now: 0,
            trace: Vec::new(),
            events_processed: 0,
            max_events,
        }
    }

    fn local_clock(&self, node: NodeId) -> u64 {
        (self.now as i64 + self.skews[node as usize]).max(0) as u64
    }

    fn crashed(&self, node: NodeId, t: u64) -> bool {
        self.crash_at[node as usize]
            .map(|c| t >= c)
            .unwrap_or(false)
    }

    fn push(&mut self, at: u64, kind: EventKind) {
        let seq = self.seq;
        self.seq += 1;
        self.queue.push(Reverse(Event { at, seq, kind }));
    }

    /// Schedules every round wakeup upfront: node `i` wakes for height `h`
    /// when its local clock reads `nominal(h) - lead_delta`.
    pub fn schedule_rounds(&mut self, t0_ms: u64, tau_ms: u64, lead_delta_ms: u64, rounds: u64) {
        for h in 1..=rounds {
            let nominal = t0_ms + h * tau_ms;
            for node in 0..self.replicas.len() as NodeId {
                let local_target = nominal.saturating_sub(lead_delta_ms) as i64;
                let sim_t = (local_target - self.skews[node as usize]).max(0) as u64;
                self.push(sim_t, EventKind::RoundWakeup { node, height: h });
            }
        }
    }

    fn enqueue_delivery(&mut self, from: NodeId, to: NodeId, payload: Payload) {
        if self.delay.partitioned(from, to, self.now) {
            return;
        }
        let d = self.delay.sample(self.now, &mut self.rng);
        self.push(
            self.now + d,
            EventKind::Deliver { to, from, payload },
        );
    }

    fn apply_actions(&mut self, node: NodeId, actions: Vec<Action>) {
        let n = self.replicas.len() as NodeId;
        for act in actions {
            match act {
                Action::Trace(event) => self.trace.push(TraceRecord {
                    t: self.now,
                    node,
                    event,
                }),
                Action::Send { to, msg } => {
                    self.enqueue_delivery(node, to, Payload::Msg(msg))
                }
                Action::Broadcast(msg) => {
                    for to in 0..n {
                        if to != node {
                            self.enqueue_delivery(node, to, Payload::Msg(msg.clone()));
                        }
                    }
                }
                Action::GossipBlock(block) => {
                    for to in 0..n {
                        if to != node {
                            self.enqueue_delivery(node, to, Payload::Block(block.clone()));
                        }
                    }
                }
                Action::SendBlock { to, block } => {
                    self.enqueue_delivery(node, to, Payload::Block(block))
                }
                Action::RequestChain { from_height } => {
                    for to in 0..n {
                        if to != node {
                            self.enqueue_delivery(
                                node,
                                to,
                                Payload::ChainRequest { from_height },
                            );
                        }
                    }
                }
                Action::ArmViewChangeTimer { duration_ms } => {
                    self.vc_epoch[node as usize] += 1;
                    let epoch = self.vc_epoch[node as usize];
                    self.push(self.now + duration_ms, EventKind::VcTimer { node, epoch });
                }
                Action::DisarmViewChangeTimer => {
                    self.vc_epoch[node as usize] += 1;
                }
            }
        }
    }

    /// Drains the queue up to `t_end` (inclusive) or until the event budget
    /// is exhausted. Returns false if the budget tripped.
    pub fn run_until(&mut self, t_end: u64) -> bool {
        loop {
            let Some(at) = self.queue.peek().map(|Reverse(e)| e.at) else {
                break;
            };
            if at > t_end {
                break;
            }
            if self.events_processed >= self.max_events {
                return false;
            }
            let Reverse(ev) = self.queue.pop().expect("peeked");
            self.events_processed += 1;
            self.now = ev.at;
            match ev.kind {
                EventKind::RoundWakeup { node, height } => {
                    if self.crashed(node, ev.at) {
                        continue;
                    }
                    let local = self.local_clock(node);
                    let actions = self.replicas[node as usize].on_round_wakeup(height, local);
                    self.apply_actions(node, actions);
                }
                EventKind::VcTimer { node, epoch } => {
                    if self.crashed(node, ev.at) || self.vc_epoch[node as usize] != epoch {
                        continue;
                    }
                    let local = self.local_clock(node);
                    let actions = self.replicas[node as usize].on_view_change_timeout(local);
                    self.apply_actions(node, actions);
                }
                EventKind::Deliver { to, from, payload } => {
                    if self.crashed(to, ev.at) {
                        continue;
                    }
                    let local = self.local_clock(to);
                    let actions = match payload {
                        Payload::Msg(msg) => self.replicas[to as usize].on_message(msg, local),
                        Payload::Block(block) => {
                            self.replicas[to as usize].on_gossip_block(block, local)
                        }
                        Payload::ChainRequest { from_height } => {
                            self.replicas[to as usize].on_chain_request(from, from_height)
                        }
                    };
                    self.apply_actions(to, actions);
                }
            }
        }
        true
    }
}
