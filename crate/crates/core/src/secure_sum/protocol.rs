use std::thread;
use std::time::Duration;

use super::{check_fits, mask, Announcement, KeyBuffer, KeySource, Party, RingTopology, SecureSumError, SumResult, Word};
use crate::transport::{inproc_mesh, run_lockstep, run_node, tcp_mesh, NodeError, DEFAULT_TIMEOUT};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TransportMode {
    /// In-process queues driven on one thread in a fixed order.
    Lockstep,
    /// In-process queues, one thread per party.
    Threads,
    /// Loopback TCP, one thread per party.
    Tcp,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProtocolRun<W> {
    /// Ordered by round, then ring position.
    pub announcements: Vec<Announcement<W>>,
    pub sums: Vec<SumResult<W>>,
    pub transcripts: Vec<Vec<String>>,
}

/// Whether `Σ inputs` reaches `2^n`, in which case the protocol returns the sum modulo `2^n`.
pub fn sum_wraps<W: Word>(inputs: &[W], n: u32) -> bool {
    let total: u128 = inputs.iter().map(|v| v.to_u128().expect("word fits u128")).sum();
    n < 128 && total >> n != 0
}

/// Runs `rounds` rounds of the ring protocol, each party as its own state
/// machine over the chosen transport. Every party must arrive at the same
/// sum in every round.
pub fn run_protocol<W: Word>(
    ring: &RingTopology,
    inputs: &[W],
    n: u32,
    rounds: u64,
    keys: &mut dyn KeySource,
    mode: TransportMode,
    session: &str,
) -> Result<ProtocolRun<W>, SecureSumError> {
    mask::<W>(n)?;
    if inputs.len() != ring.len() {
        return Err(SecureSumError::Violation(format!(
            "{} inputs for {} parties",
            inputs.len(),
            ring.len()
        )));
    }
    for &v in inputs {
        check_fits(v, n)?;
    }
    let bits = rounds as usize * n as usize;
    let mut next_keys: Vec<Option<KeyBuffer>> = vec![None; ring.len()];
    let mut prev_keys: Vec<Option<KeyBuffer>> = vec![None; ring.len()];
    for (i, j) in ring.links() {
        let (left, right) = keys.link_key(&ring.parties()[i], &ring.parties()[j], bits)?;
        next_keys[i] = Some(KeyBuffer::new(left));
        prev_keys[j] = Some(KeyBuffer::new(right));
    }
    let mut parties: Vec<Party<W>> = (0..ring.len())
        .map(|i| {
            Party::new(
                session,
                ring.clone(),
                i,
                n,
                inputs[i],
                rounds,
                next_keys[i].take().expect("every party has a clockwise link"),
                prev_keys[i].take().expect("every party has a counter-clockwise link"),
            )
        })
        .collect();

    let outcomes = drive(&mut parties, ring, mode, session, DEFAULT_TIMEOUT)?;
    for o in outcomes {
        o?;
    }

    let sums = parties[0].results().to_vec();
    for p in &parties[1..] {
        if let Some(bad) = sums.iter().zip(p.results()).find(|(a, b)| a != b) {
            return Err(SecureSumError::Disagreement(bad.0.round));
        }
    }
    let mut announcements: Vec<Announcement<W>> = parties
        .iter()
        .flat_map(|p| p.announcements().iter().filter(|a| a.party == p.name()).cloned())
        .collect();
    announcements.sort_by_key(|a| (a.round, ring.index_of(&a.party)));
    Ok(ProtocolRun {
        announcements,
        sums,
        transcripts: parties.iter().map(|p| p.transcript().to_vec()).collect(),
    })
}

fn drive<W: Word>(
    parties: &mut [Party<W>],
    ring: &RingTopology,
    mode: TransportMode,
    session: &str,
    timeout: Duration,
) -> Result<Vec<Result<(), NodeError>>, SecureSumError> {
    match mode {
        TransportMode::Lockstep => {
            let mut eps = inproc_mesh(ring.parties());
            Ok(run_lockstep(parties, &mut eps))
        }
        TransportMode::Threads => {
            let eps = inproc_mesh(ring.parties());
            Ok(threaded(parties, eps, timeout))
        }
        TransportMode::Tcp => {
            let eps = tcp_mesh(session, ring.parties())?;
            Ok(threaded(parties, eps, timeout))
        }
    }
}

fn threaded<W: Word, E: crate::transport::Endpoint>(
    parties: &mut [Party<W>],
    eps: Vec<E>,
    timeout: Duration,
) -> Vec<Result<(), NodeError>> {
    thread::scope(|s| {
        let handles: Vec<_> = parties
            .iter_mut()
            .zip(eps)
            .map(|(p, mut ep)| {
                s.spawn(move || {
                    let r = run_node(p, &mut ep, timeout);
                    (r, ep)
                })
            })
            .collect();
        // Endpoints are dropped only after every party stops, so no one sees a peer vanish mid-round.
        let (results, _eps): (Vec<_>, Vec<_>) =
            handles.into_iter().map(|h| h.join().expect("party thread panicked")).unzip();
        results
    })
}
