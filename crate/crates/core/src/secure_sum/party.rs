use std::collections::BTreeMap;

use super::{aggregate, compute_announcement, derive_pad, Announcement, KeyBuffer, RingTopology, SumResult, Word};
use crate::transport::{Message, Node, NodeError, Outgoing, Payload};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PartyState {
    /// Pads for the current round are derived.
    Keyed,
    /// The current round's announcement is out; waiting for the others.
    Announced,
    Done,
    Violated(String),
}

#[derive(Debug, Default)]
struct RoundInbox {
    announcements: BTreeMap<String, u64>,
    key_sync: Option<u64>,
}

/// One participant of the ring protocol, run for a fixed number of rounds.
/// Round `r` uses key bits `[r·n, (r+1)·n)` of both neighbour keys.
#[derive(Debug)]
pub struct Party<W> {
    session: String,
    ring: RingTopology,
    index: usize,
    n: u32,
    input: W,
    rounds: u64,
    next_key: KeyBuffer,
    prev_key: KeyBuffer,
    state: PartyState,
    round: u64,
    own: Option<Announcement<W>>,
    inbox: BTreeMap<u64, RoundInbox>,
    announcements: Vec<Announcement<W>>,
    results: Vec<SumResult<W>>,
    transcript: Vec<String>,
}

impl<W: Word> Party<W> {
    /// `next_key` is shared with the clockwise neighbour, `prev_key` with the other one.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        session: &str,
        ring: RingTopology,
        index: usize,
        n: u32,
        input: W,
        rounds: u64,
        next_key: KeyBuffer,
        prev_key: KeyBuffer,
    ) -> Self {
        Party {
            session: session.to_string(),
            ring,
            index,
            n,
            input,
            rounds,
            next_key,
            prev_key,
            state: PartyState::Keyed,
            round: 0,
            own: None,
            inbox: BTreeMap::new(),
            announcements: Vec::new(),
            results: Vec::new(),
            transcript: Vec::new(),
        }
    }

    pub fn name(&self) -> &str {
        &self.ring.parties()[self.index]
    }

    pub fn state(&self) -> &PartyState {
        &self.state
    }

    pub fn results(&self) -> &[SumResult<W>] {
        &self.results
    }

    /// Every announcement this party has seen, its own included, in arrival order per round.
    pub fn announcements(&self) -> &[Announcement<W>] {
        &self.announcements
    }

    pub fn transcript(&self) -> &[String] {
        &self.transcript
    }

    fn offset(&self, round: u64) -> usize {
        round as usize * self.n as usize
    }

    fn violation(&mut self, reason: String) -> NodeError {
        self.transcript.push(format!("round={} VIOLATION {reason}", self.round));
        self.state = PartyState::Violated(reason.clone());
        NodeError::Violation {
            party: self.name().to_string(),
            reason,
        }
    }

    fn begin_round(&mut self) -> Result<Vec<Outgoing>, NodeError> {
        let offset = self.offset(self.round);
        let pads = derive_pad::<W>(&mut self.next_key, self.n, offset)
            .and_then(|next| derive_pad::<W>(&mut self.prev_key, self.n, offset).map(|prev| (next, prev)));
        let (mut next, mut prev) = match pads {
            Ok(p) => p,
            Err(e) => return Err(self.violation(e.to_string())),
        };
        self.state = PartyState::Keyed;
        self.transcript.push(format!("round={} KEYED offset={offset}", self.round));
        let ann = match compute_announcement(self.name(), self.round, self.input, &mut next, &mut prev, self.n) {
            Ok(a) => a,
            Err(e) => return Err(self.violation(e.to_string())),
        };
        let x = ann.x.to_u64().expect("word fits u64");
        self.transcript.push(format!("round={} ANNOUNCED x={x}", self.round));
        self.state = PartyState::Announced;
        self.announcements.push(ann.clone());
        self.own = Some(ann);

        let me = self.name().to_string();
        let next_party = self.ring.parties()[self.ring.next(self.index)].clone();
        let sync = Message::new(
            &self.session,
            self.round,
            &me,
            Payload::KeySync {
                peer: me.clone(),
                offset: offset as u64,
                bits: self.n,
            },
        );
        let announce = Message::new(&self.session, self.round, &me, Payload::Announce { x });
        let mut out = vec![Outgoing::To(next_party, sync), Outgoing::Broadcast(announce)];
        out.extend(self.try_complete()?);
        Ok(out)
    }

    fn try_complete(&mut self) -> Result<Vec<Outgoing>, NodeError> {
        let needed = self.ring.len() - 1;
        let ready = self
            .inbox
            .get(&self.round)
            .is_some_and(|r| r.announcements.len() == needed && r.key_sync.is_some());
        if !ready {
            return Ok(Vec::new());
        }
        let inbox = self.inbox.remove(&self.round).expect("checked above");
        let mut anns = vec![self.own.take().expect("announced before completing")];
        for (party, x) in inbox.announcements {
            let x = W::from(x).expect("checked on receipt");
            anns.push(Announcement {
                party,
                round: self.round,
                x,
            });
        }
        let result = match aggregate(&anns, &self.ring, self.n) {
            Ok(r) => r,
            Err(e) => return Err(self.violation(e.to_string())),
        };
        self.transcript.push(format!("round={} SUM t={}", self.round, result.t));
        self.results.push(result);
        if self.round + 1 >= self.rounds {
            self.state = PartyState::Done;
            self.transcript.push(format!("round={} DONE", self.round));
            return Ok(Vec::new());
        }
        self.round += 1;
        self.begin_round()
    }

    fn receive(&mut self, msg: Message) -> Result<Vec<Outgoing>, NodeError> {
        if matches!(self.state, PartyState::Done | PartyState::Violated(_)) {
            return Err(self.violation(format!("message from {} after the protocol ended", msg.sender)));
        }
        if msg.session != self.session {
            return Err(self.violation(format!("message for session {}", msg.session)));
        }
        let Some(sender) = self.ring.index_of(&msg.sender) else {
            return Err(self.violation(format!("unknown sender {}", msg.sender)));
        };
        if sender == self.index {
            return Err(self.violation("message claims to come from this party".into()));
        }
        if msg.round < self.round || msg.round > self.round + 1 || msg.round >= self.rounds {
            return Err(self.violation(format!(
                "{} from {} for round {} while in round {}",
                msg.kind().as_str(),
                msg.sender,
                msg.round,
                self.round
            )));
        }
        let limit = super::mask::<W>(self.n).expect("width validated").to_u64().expect("word fits u64");
        let expected_offset = self.offset(msg.round) as u64;
        let from_prev = sender == self.ring.prev(self.index);
        let n = self.n;
        let slot = self.inbox.entry(msg.round).or_default();
        let problem = match &msg.payload {
            Payload::Announce { x } => {
                if *x > limit {
                    Some(format!("announcement {x} from {} exceeds {n} bits", msg.sender))
                } else if slot.announcements.insert(msg.sender.clone(), *x).is_some() {
                    Some(format!("duplicate ANNOUNCE from {} in round {}", msg.sender, msg.round))
                } else {
                    None
                }
            }
            Payload::KeySync { peer, offset, bits } => {
                if !from_prev || peer != &msg.sender {
                    Some(format!("KEY_SYNC from {} who does not share this party's counter-clockwise key", msg.sender))
                } else if *offset != expected_offset || *bits != n {
                    Some(format!(
                        "KEY_SYNC offset {offset}+{bits} from {} disagrees with {expected_offset}+{n}",
                        msg.sender
                    ))
                } else if slot.key_sync.replace(*offset).is_some() {
                    Some(format!("duplicate KEY_SYNC from {}", msg.sender))
                } else {
                    None
                }
            }
            Payload::Control { op } => Some(format!("unexpected CONTROL {op} from {}", msg.sender)),
        };
        if let Some(reason) = problem {
            return Err(self.violation(reason));
        }
        if msg.round == self.round {
            self.try_complete()
        } else {
            Ok(Vec::new())
        }
    }
}

impl<W: Word> Node for Party<W> {
    fn id(&self) -> &str {
        self.name()
    }

    fn start(&mut self) -> Result<Vec<Outgoing>, NodeError> {
        if self.rounds == 0 {
            self.state = PartyState::Done;
            return Ok(Vec::new());
        }
        self.begin_round()
    }

    fn handle(&mut self, msg: Message) -> Result<Vec<Outgoing>, NodeError> {
        self.receive(msg)
    }

    fn is_done(&self) -> bool {
        self.state == PartyState::Done
    }

    fn round(&self) -> u64 {
        self.round
    }
}
