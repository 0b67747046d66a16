use std::time::Duration;

use thiserror::Error;

use super::{Endpoint, InProcEndpoint, Message, TransportError};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Outgoing {
    To(String, Message),
    Broadcast(Message),
}

#[derive(Debug, Error)]
pub enum NodeError {
    #[error("protocol violation at {party}: {reason}")]
    Violation { party: String, reason: String },
    #[error("{party} timed out in round {round} with the round incomplete")]
    IncompleteRound { party: String, round: u64 },
    #[error(transparent)]
    Transport(#[from] TransportError),
}

/// A single-threaded party state machine driven by inbound messages.
pub trait Node {
    fn id(&self) -> &str;

    /// Messages to send when the node starts.
    fn start(&mut self) -> Result<Vec<Outgoing>, NodeError>;

    fn handle(&mut self, msg: Message) -> Result<Vec<Outgoing>, NodeError>;

    fn is_done(&self) -> bool;

    /// Round the node is currently waiting on.
    fn round(&self) -> u64;
}

fn dispatch<E: Endpoint + ?Sized>(ep: &mut E, out: Vec<Outgoing>) -> Result<(), NodeError> {
    for o in out {
        match o {
            Outgoing::To(to, m) => ep.send(&to, &m)?,
            Outgoing::Broadcast(m) => {
                ep.broadcast(&m)?;
            }
        }
    }
    Ok(())
}

/// Drives `node` until it is done, handling inbound messages one at a time.
/// A quiet channel for `timeout` ends the run with an incomplete-round error.
pub fn run_node<N: Node, E: Endpoint + ?Sized>(node: &mut N, ep: &mut E, timeout: Duration) -> Result<(), NodeError> {
    let out = node.start()?;
    dispatch(ep, out)?;
    while !node.is_done() {
        let msg = match ep.recv_timeout(timeout) {
            Ok(m) => m,
            Err(TransportError::Timeout(_)) | Err(TransportError::Closed(_)) => {
                return Err(NodeError::IncompleteRound {
                    party: node.id().to_string(),
                    round: node.round(),
                })
            }
            Err(e) => return Err(e.into()),
        };
        let out = node.handle(msg)?;
        dispatch(ep, out)?;
    }
    Ok(())
}

/// Runs all nodes on the calling thread: start in order, then repeatedly
/// drain each inbox in node order until nothing moves. The transcript is a
/// function of the nodes' inputs alone.
pub fn run_lockstep<N: Node>(nodes: &mut [N], eps: &mut [InProcEndpoint]) -> Vec<Result<(), NodeError>> {
    assert_eq!(nodes.len(), eps.len(), "one endpoint per node");
    let mut status: Vec<Option<Result<(), NodeError>>> = nodes.iter().map(|_| None).collect();
    for i in 0..nodes.len() {
        if let Err(e) = nodes[i].start().and_then(|out| dispatch(&mut eps[i], out)) {
            status[i] = Some(Err(e));
        }
    }
    loop {
        let mut progress = false;
        for i in 0..nodes.len() {
            if status[i].is_some() {
                continue;
            }
            loop {
                let msg = match eps[i].try_recv() {
                    Ok(Some(m)) => m,
                    Ok(None) => break,
                    Err(e) => {
                        status[i] = Some(Err(e.into()));
                        break;
                    }
                };
                progress = true;
                if let Err(e) = nodes[i].handle(msg).and_then(|out| dispatch(&mut eps[i], out)) {
                    status[i] = Some(Err(e));
                    break;
                }
            }
            if status[i].is_none() && nodes[i].is_done() {
                status[i] = Some(Ok(()));
            }
        }
        if !progress {
            break;
        }
    }
    status
        .into_iter()
        .zip(nodes.iter())
        .map(|(s, n)| {
            s.unwrap_or_else(|| {
                Err(NodeError::IncompleteRound {
                    party: n.id().to_string(),
                    round: n.round(),
                })
            })
        })
        .collect()
}
