use std::fmt::Write as _;
use std::io::{self, Read, Write};

use super::TransportError;

pub const MAX_FRAME_LEN: usize = 1 << 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MessageKind {
    Announce,
    KeySync,
    Control,
}

impl MessageKind {
    pub fn as_str(self) -> &'static str {
        match self {
            MessageKind::Announce => "ANNOUNCE",
            MessageKind::KeySync => "KEY_SYNC",
            MessageKind::Control => "CONTROL",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        match s {
            "ANNOUNCE" => Some(MessageKind::Announce),
            "KEY_SYNC" => Some(MessageKind::KeySync),
            "CONTROL" => Some(MessageKind::Control),
            _ => None,
        }
    }

    fn fields(self) -> &'static [&'static str] {
        match self {
            MessageKind::Announce => &["x"],
            MessageKind::KeySync => &["peer", "offset", "bits"],
            MessageKind::Control => &["op"],
        }
    }
}

/// Kind-specific body.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Payload {
    Announce { x: u64 },
    /// Which slice of the key shared with `peer` the sender uses this round.
    KeySync { peer: String, offset: u64, bits: u32 },
    Control { op: String },
}

impl Payload {
    pub fn kind(&self) -> MessageKind {
        match self {
            Payload::Announce { .. } => MessageKind::Announce,
            Payload::KeySync { .. } => MessageKind::KeySync,
            Payload::Control { .. } => MessageKind::Control,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Message {
    pub session: String,
    pub round: u64,
    pub sender: String,
    pub payload: Payload,
}

fn check_token(what: &str, s: &str) -> Result<(), TransportError> {
    if s.is_empty() || s.chars().any(|c| c.is_whitespace() || c == '=') {
        return Err(TransportError::Malformed(format!("{what} {s:?} must be a non-empty token")));
    }
    Ok(())
}

impl Message {
    pub fn new(session: &str, round: u64, sender: &str, payload: Payload) -> Self {
        Message {
            session: session.to_string(),
            round,
            sender: sender.to_string(),
            payload,
        }
    }

    pub fn kind(&self) -> MessageKind {
        self.payload.kind()
    }

    /// Canonical `field=value` text, one field per line.
    pub fn encode(&self) -> Result<String, TransportError> {
        check_token("session", &self.session)?;
        check_token("sender", &self.sender)?;
        let mut s = String::new();
        let _ = write!(
            s,
            "session={}\nround={}\nsender={}\nkind={}\n",
            self.session,
            self.round,
            self.sender,
            self.kind().as_str()
        );
        match &self.payload {
            Payload::Announce { x } => {
                let _ = writeln!(s, "x={x}");
            }
            Payload::KeySync { peer, offset, bits } => {
                check_token("peer", peer)?;
                let _ = write!(s, "peer={peer}\noffset={offset}\nbits={bits}\n");
            }
            Payload::Control { op } => {
                check_token("op", op)?;
                let _ = writeln!(s, "op={op}");
            }
        }
        Ok(s)
    }

    pub fn decode(text: &str) -> Result<Self, TransportError> {
        let bad = |msg: String| TransportError::Malformed(msg);
        let body = text.strip_suffix('\n').ok_or_else(|| bad("payload must end with a newline".into()))?;
        let mut fields = Vec::new();
        for line in body.split('\n') {
            let (k, v) = line.split_once('=').ok_or_else(|| bad(format!("line {line:?} is not field=value")))?;
            fields.push((k, v));
        }
        let header = ["session", "round", "sender", "kind"];
        if fields.len() < header.len() || fields.iter().zip(header).any(|((k, _), h)| *k != h) {
            return Err(bad("header must be session, round, sender, kind".into()));
        }
        let kind = MessageKind::parse(fields[3].1).ok_or_else(|| bad(format!("unknown kind {:?}", fields[3].1)))?;
        let rest = &fields[4..];
        let expected = kind.fields();
        if rest.len() != expected.len() || rest.iter().zip(expected).any(|((k, _), e)| k != e) {
            return Err(bad(format!("{} expects fields {}", kind.as_str(), expected.join(","))));
        }
        let num = |name: &str, v: &str| -> Result<u64, TransportError> {
            if v.is_empty() || !v.bytes().all(|b| b.is_ascii_digit()) {
                return Err(bad(format!("{name}={v:?} is not a decimal integer")));
            }
            v.parse().map_err(|_| bad(format!("{name}={v:?} out of range")))
        };
        let payload = match kind {
            MessageKind::Announce => Payload::Announce { x: num("x", rest[0].1)? },
            MessageKind::KeySync => Payload::KeySync {
                peer: rest[0].1.to_string(),
                offset: num("offset", rest[1].1)?,
                bits: u32::try_from(num("bits", rest[2].1)?).map_err(|_| bad("bits out of range".into()))?,
            },
            MessageKind::Control => Payload::Control { op: rest[0].1.to_string() },
        };
        let msg = Message {
            session: fields[0].1.to_string(),
            round: num("round", fields[1].1)?,
            sender: fields[2].1.to_string(),
            payload,
        };
        // Reject anything that would not re-encode to the same bytes.
        if msg.encode()? != text {
            return Err(bad("payload is not in canonical form".into()));
        }
        Ok(msg)
    }
}

/// 4-byte big-endian length, then the canonical payload.
pub fn encode_frame(msg: &Message) -> Result<Vec<u8>, TransportError> {
    let payload = msg.encode()?;
    if payload.len() > MAX_FRAME_LEN {
        return Err(TransportError::Malformed(format!("frame of {} bytes is too large", payload.len())));
    }
    let mut frame = Vec::with_capacity(4 + payload.len());
    frame.extend_from_slice(&(payload.len() as u32).to_be_bytes());
    frame.extend_from_slice(payload.as_bytes());
    Ok(frame)
}

pub fn write_frame<W: Write>(w: &mut W, msg: &Message) -> Result<(), TransportError> {
    w.write_all(&encode_frame(msg)?)?;
    w.flush()?;
    Ok(())
}

/// Reads one frame; `Ok(None)` on a clean end of stream between frames.
pub fn read_frame<R: Read>(r: &mut R) -> Result<Option<Message>, TransportError> {
    let mut len = [0u8; 4];
    match r.read_exact(&mut len) {
        Ok(()) => {}
        Err(e) if e.kind() == io::ErrorKind::UnexpectedEof => return Ok(None),
        Err(e) => return Err(e.into()),
    }
    let len = u32::from_be_bytes(len) as usize;
    if len > MAX_FRAME_LEN {
        return Err(TransportError::Malformed(format!("frame length {len} exceeds {MAX_FRAME_LEN}")));
    }
    let mut buf = vec![0u8; len];
    r.read_exact(&mut buf)?;
    let text = String::from_utf8(buf).map_err(|_| TransportError::Malformed("payload is not UTF-8".into()))?;
    Message::decode(&text).map(Some)
}
