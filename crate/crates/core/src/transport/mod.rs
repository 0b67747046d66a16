//! Classical message layer for the parties: reliable FIFO channels, a
//! broadcast primitive and a node runtime. Channels are not authenticated;
//! the parties are assumed to talk over a trusted classical network.

mod inproc;
mod message;
mod node;
mod tcp;

use std::io;
use std::time::Duration;

use thiserror::Error;

pub use inproc::{inproc_mesh, InProcEndpoint};
pub use message::{encode_frame, read_frame, write_frame, Message, MessageKind, Payload, MAX_FRAME_LEN};
pub use node::{run_lockstep, run_node, Node, NodeError, Outgoing};
pub use tcp::{tcp_mesh, TcpEndpoint};

pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(5);

#[derive(Debug, Error)]
pub enum TransportError {
    #[error("channel to {0} is closed")]
    Closed(String),
    #[error("unknown peer {0}")]
    UnknownPeer(String),
    #[error("no message within {0:?}")]
    Timeout(Duration),
    #[error("malformed message: {0}")]
    Malformed(String),
    #[error("broadcast failed for {failed:?}")]
    Broadcast { failed: Vec<String> },
    #[error("I/O: {0}")]
    Io(#[from] io::Error),
}

/// One party's connections to the rest of its session.
pub trait Endpoint: Send {
    fn id(&self) -> &str;

    /// Other members, sorted.
    fn peers(&self) -> Vec<String>;

    fn send(&mut self, to: &str, msg: &Message) -> Result<(), TransportError>;

    fn recv_timeout(&mut self, timeout: Duration) -> Result<Message, TransportError>;

    /// `Ok(None)` when nothing is queued.
    fn try_recv(&mut self) -> Result<Option<Message>, TransportError>;

    /// Sends an identical copy to every other member; returns the number of deliveries.
    fn broadcast(&mut self, msg: &Message) -> Result<usize, TransportError> {
        let mut failed = Vec::new();
        let peers = self.peers();
        for p in &peers {
            if self.send(p, msg).is_err() {
                failed.push(p.clone());
            }
        }
        if failed.is_empty() {
            Ok(peers.len())
        } else {
            Err(TransportError::Broadcast { failed })
        }
    }
}
