use std::collections::BTreeMap;
use std::io::{BufReader, BufWriter};
use std::net::{Shutdown, TcpListener, TcpStream};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError, Sender, TryRecvError};
use std::thread;
use std::time::Duration;

use super::{read_frame, write_frame, Endpoint, Message, Payload, TransportError};

/// Endpoint over loopback TCP streams, one stream per peer. A reader thread
/// per stream decodes frames into a shared inbox.
pub struct TcpEndpoint {
    id: String,
    writers: BTreeMap<String, BufWriter<TcpStream>>,
    inbox: Receiver<Result<Message, String>>,
}

fn spawn_reader(stream: TcpStream, peer: String, tx: Sender<Result<Message, String>>) {
    thread::spawn(move || {
        let mut r = BufReader::new(stream);
        loop {
            match read_frame(&mut r) {
                Ok(Some(msg)) => {
                    if tx.send(Ok(msg)).is_err() {
                        return;
                    }
                }
                Ok(None) => return,
                Err(e) => {
                    let _ = tx.send(Err(format!("from {peer}: {e}")));
                    return;
                }
            }
        }
    });
}

/// Full mesh of loopback connections between `ids`. The connecting side
/// introduces itself with a `CONTROL op=hello` frame.
pub fn tcp_mesh(session: &str, ids: &[String]) -> Result<Vec<TcpEndpoint>, TransportError> {
    let listeners: Vec<TcpListener> = ids
        .iter()
        .map(|_| TcpListener::bind("127.0.0.1:0"))
        .collect::<Result<_, _>>()?;
    let mut streams: Vec<BTreeMap<String, TcpStream>> = ids.iter().map(|_| BTreeMap::new()).collect();
    for j in 0..ids.len() {
        for i in 0..j {
            let mut out = TcpStream::connect(listeners[i].local_addr()?)?;
            out.set_nodelay(true)?;
            write_frame(&mut out, &Message::new(session, 0, &ids[j], Payload::Control { op: "hello".into() }))?;
            let (mut inc, _) = listeners[i].accept()?;
            inc.set_nodelay(true)?;
            match read_frame(&mut inc)? {
                Some(m) if m.sender == ids[j] && m.payload == (Payload::Control { op: "hello".into() }) => {}
                other => return Err(TransportError::Malformed(format!("bad handshake {other:?}"))),
            }
            streams[i].insert(ids[j].clone(), inc);
            streams[j].insert(ids[i].clone(), out);
        }
    }
    let mut endpoints = Vec::with_capacity(ids.len());
    for (id, conns) in ids.iter().zip(streams) {
        let (tx, rx) = mpsc::channel();
        let mut writers = BTreeMap::new();
        for (peer, stream) in conns {
            spawn_reader(stream.try_clone()?, peer.clone(), tx.clone());
            writers.insert(peer, BufWriter::new(stream));
        }
        endpoints.push(TcpEndpoint {
            id: id.clone(),
            writers,
            inbox: rx,
        });
    }
    Ok(endpoints)
}

impl TcpEndpoint {
    pub fn close(&mut self) {
        for w in self.writers.values() {
            let _ = w.get_ref().shutdown(Shutdown::Both);
        }
        self.writers.clear();
    }
}

impl Drop for TcpEndpoint {
    fn drop(&mut self) {
        self.close();
    }
}

impl Endpoint for TcpEndpoint {
    fn id(&self) -> &str {
        &self.id
    }

    fn peers(&self) -> Vec<String> {
        self.writers.keys().cloned().collect()
    }

    fn send(&mut self, to: &str, msg: &Message) -> Result<(), TransportError> {
        let w = self.writers.get_mut(to).ok_or_else(|| TransportError::UnknownPeer(to.to_string()))?;
        write_frame(w, msg).map_err(|e| match e {
            TransportError::Io(_) => TransportError::Closed(to.to_string()),
            other => other,
        })
    }

    fn recv_timeout(&mut self, timeout: Duration) -> Result<Message, TransportError> {
        match self.inbox.recv_timeout(timeout) {
            Ok(Ok(m)) => Ok(m),
            Ok(Err(e)) => Err(TransportError::Malformed(e)),
            Err(RecvTimeoutError::Timeout) => Err(TransportError::Timeout(timeout)),
            Err(RecvTimeoutError::Disconnected) => Err(TransportError::Closed(self.id.clone())),
        }
    }

    fn try_recv(&mut self) -> Result<Option<Message>, TransportError> {
        match self.inbox.try_recv() {
            Ok(Ok(m)) => Ok(Some(m)),
            Ok(Err(e)) => Err(TransportError::Malformed(e)),
            Err(TryRecvError::Empty) => Ok(None),
            Err(TryRecvError::Disconnected) => Err(TransportError::Closed(self.id.clone())),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn loopback_mesh_delivers_broadcasts() {
        let ids: Vec<String> = ["A1", "B1", "A2"].map(String::from).to_vec();
        let mut eps = tcp_mesh("t", &ids).unwrap();
        let m = Message::new("t", 1, "A1", Payload::Announce { x: 42 });
        assert_eq!(eps[0].broadcast(&m).unwrap(), 2);
        for ep in &mut eps[1..] {
            assert_eq!(ep.recv_timeout(Duration::from_secs(5)).unwrap(), m);
        }
        eps[2].close();
        // Writes may be buffered by the kernel before the reset shows up.
        let m2 = Message::new("t", 1, "A1", Payload::Announce { x: 1 });
        let mut failed = false;
        for _ in 0..200 {
            if eps[0].send("A2", &m2).is_err() {
                failed = true;
                break;
            }
            thread::sleep(Duration::from_millis(5));
        }
        assert!(failed);
    }
}
