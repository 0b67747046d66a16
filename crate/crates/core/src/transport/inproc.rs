use std::collections::BTreeMap;
use std::sync::mpsc::{self, Receiver, RecvTimeoutError, Sender, TryRecvError};
use std::time::Duration;

use super::{Endpoint, Message, TransportError};

/// In-process endpoint. Messages travel as canonical text so the codec is
/// exercised on this path too. A single inbox per node keeps each sender's
/// messages in order.
pub struct InProcEndpoint {
    id: String,
    outboxes: BTreeMap<String, Sender<String>>,
    inbox: Receiver<String>,
}

/// Fully connected in-process endpoints, one per id, in the given order.
pub fn inproc_mesh(ids: &[String]) -> Vec<InProcEndpoint> {
    let (senders, receivers): (Vec<_>, Vec<_>) = ids.iter().map(|_| mpsc::channel::<String>()).unzip();
    ids.iter()
        .zip(receivers)
        .enumerate()
        .map(|(i, (id, inbox))| InProcEndpoint {
            id: id.clone(),
            outboxes: ids
                .iter()
                .enumerate()
                .filter(|(j, _)| *j != i)
                .map(|(j, peer)| (peer.clone(), senders[j].clone()))
                .collect(),
            inbox,
        })
        .collect()
}

impl InProcEndpoint {
    /// Drops the outgoing channels; peers see their inbox close once every
    /// sender is gone.
    pub fn close(&mut self) {
        self.outboxes.clear();
    }
}

impl Endpoint for InProcEndpoint {
    fn id(&self) -> &str {
        &self.id
    }

    fn peers(&self) -> Vec<String> {
        self.outboxes.keys().cloned().collect()
    }

    fn send(&mut self, to: &str, msg: &Message) -> Result<(), TransportError> {
        let tx = self.outboxes.get(to).ok_or_else(|| TransportError::UnknownPeer(to.to_string()))?;
        tx.send(msg.encode()?).map_err(|_| TransportError::Closed(to.to_string()))
    }

    fn recv_timeout(&mut self, timeout: Duration) -> Result<Message, TransportError> {
        match self.inbox.recv_timeout(timeout) {
            Ok(text) => Message::decode(&text),
            Err(RecvTimeoutError::Timeout) => Err(TransportError::Timeout(timeout)),
            Err(RecvTimeoutError::Disconnected) => Err(TransportError::Closed(self.id.clone())),
        }
    }

    fn try_recv(&mut self) -> Result<Option<Message>, TransportError> {
        match self.inbox.try_recv() {
            Ok(text) => Message::decode(&text).map(Some),
            Err(TryRecvError::Empty) => Ok(None),
            Err(TryRecvError::Disconnected) => Err(TransportError::Closed(self.id.clone())),
        }
    }
}
