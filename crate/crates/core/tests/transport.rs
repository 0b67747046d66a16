use std::thread;
use std::time::Duration;

use eanet::secure_sum::{KeyBuffer, Party, PartyState, RingTopology};
use eanet::transport::*;
use proptest::prelude::*;

fn ids(names: &[&str]) -> Vec<String> {
    names.iter().map(|s| s.to_string()).collect()
}

#[test]
fn fifo_per_channel_under_concurrent_senders() {
    const N: u64 = 10_000;
    for tcp in [false, true] {
        let names = ids(&["R", "S1", "S2", "S3"]);
        let mut eps: Vec<Box<dyn Endpoint>> = if tcp {
            tcp_mesh("fifo", &names).unwrap().into_iter().map(|e| Box::new(e) as Box<dyn Endpoint>).collect()
        } else {
            inproc_mesh(&names).into_iter().map(|e| Box::new(e) as Box<dyn Endpoint>).collect()
        };
        let mut receiver = eps.remove(0);
        let senders: Vec<_> = eps
            .into_iter()
            .map(|mut ep| {
                thread::spawn(move || {
                    let me = ep.id().to_string();
                    for i in 0..N {
                        ep.send("R", &Message::new("fifo", i, &me, Payload::Announce { x: i })).unwrap();
                    }
                    ep
                })
            })
            .collect();
        let mut next = [0u64; 3];
        for _ in 0..3 * N {
            let m = receiver.recv_timeout(Duration::from_secs(10)).unwrap();
            let k = ["S1", "S2", "S3"].iter().position(|s| *s == m.sender).unwrap();
            assert_eq!(m.round, next[k], "out of order from {}", m.sender);
            next[k] += 1;
        }
        let _keep: Vec<_> = senders.into_iter().map(|h| h.join().unwrap()).collect();
        assert_eq!(next, [N; 3]);
    }
}

#[test]
fn tcp_frames_are_length_prefixed_canonical_text() {
    use std::io::Read;
    use std::net::{TcpListener, TcpStream};
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let mut client = TcpStream::connect(listener.local_addr().unwrap()).unwrap();
    let (mut server, _) = listener.accept().unwrap();
    write_frame(&mut client, &Message::new("s", 2, "B1", Payload::Announce { x: 5 })).unwrap();
    let mut raw = vec![0u8; 4 + 46];
    server.read_exact(&mut raw).unwrap();
    assert_eq!(&raw[..4], &[0, 0, 0, 46]);
    assert_eq!(&raw[4..], b"session=s\nround=2\nsender=B1\nkind=ANNOUNCE\nx=5\n");
}

fn party(ring: &RingTopology, i: usize, input: u64, rounds: u64) -> Party<u64> {
    // Every link carries the same all-zero key, so X_i = v_i.
    let key = KeyBuffer::new(vec![0; 25 * rounds as usize]);
    Party::new("t", ring.clone(), i, 25, input, rounds, key.clone(), key)
}

#[test]
fn nodes_on_threads_reach_done_with_equal_sums() {
    let ring = RingTopology::four_party();
    let eps = inproc_mesh(ring.parties());
    let handles: Vec<_> = eps
        .into_iter()
        .enumerate()
        .map(|(i, mut ep)| {
            let mut p = party(&ring, i, 10 * (i as u64 + 1), 3);
            thread::spawn(move || {
                run_node(&mut p, &mut ep, DEFAULT_TIMEOUT).unwrap();
                (p, ep)
            })
        })
        .collect();
    let done: Vec<_> = handles.into_iter().map(|h| h.join().unwrap()).collect();
    for (p, _) in &done {
        assert_eq!(p.state(), &PartyState::Done);
        assert_eq!(p.results().iter().map(|r| r.t).collect::<Vec<_>>(), vec![100, 100, 100]);
    }
}

#[test]
fn duplicate_announce_is_a_violation() {
    let ring = RingTopology::four_party();
    let mut p = party(&ring, 0, 1, 2);
    p.start().unwrap();
    let m = Message::new("t", 0, "B1", Payload::Announce { x: 3 });
    p.handle(m.clone()).unwrap();
    assert!(matches!(p.handle(m), Err(NodeError::Violation { .. })));
    assert!(matches!(p.state(), PartyState::Violated(_)));
}

#[test]
fn out_of_window_rounds_and_strangers_are_violations() {
    let ring = RingTopology::four_party();
    let cases = [
        Message::new("t", 2, "B1", Payload::Announce { x: 3 }),
        Message::new("t", 0, "C9", Payload::Announce { x: 3 }),
        Message::new("other", 0, "B1", Payload::Announce { x: 3 }),
        Message::new("t", 0, "B1", Payload::KeySync { peer: "B1".into(), offset: 0, bits: 25 }),
        Message::new("t", 0, "B2", Payload::KeySync { peer: "B2".into(), offset: 25, bits: 25 }),
        Message::new("t", 0, "B1", Payload::Announce { x: 1 << 25 }),
        Message::new("t", 0, "A1", Payload::Announce { x: 3 }),
        Message::new("t", 0, "B1", Payload::Control { op: "stop".into() }),
    ];
    for m in cases {
        let mut p = party(&ring, 0, 1, 3);
        p.start().unwrap();
        assert!(p.handle(m.clone()).is_err(), "{m:?} accepted");
    }
    // One round ahead is buffered, not rejected.
    let mut p = party(&ring, 0, 1, 3);
    p.start().unwrap();
    p.handle(Message::new("t", 1, "B1", Payload::Announce { x: 3 })).unwrap();
}

#[test]
fn missing_announcement_times_out() {
    let ring = RingTopology::four_party();
    let mut eps = inproc_mesh(ring.parties());
    let mut p = party(&ring, 0, 1, 1);
    let started = std::time::Instant::now();
    let r = run_node(&mut p, &mut eps[0], Duration::from_millis(100));
    assert!(matches!(r, Err(NodeError::IncompleteRound { round: 0, .. })), "{r:?}");
    assert!(started.elapsed() >= Duration::from_millis(100));
}

#[test]
fn lockstep_reports_stalled_nodes() {
    let ring = RingTopology::four_party();
    let mut eps = inproc_mesh(ring.parties());
    // The last party holds a key too short for its first pad.
    let mut parties: Vec<_> = (0..3).map(|i| party(&ring, i, 1, 1)).collect();
    parties.push(Party::new("t", ring.clone(), 3, 25, 1, 1, KeyBuffer::new(vec![0; 5]), KeyBuffer::new(vec![0; 25])));
    let out = run_lockstep(&mut parties, &mut eps);
    assert!(matches!(out[3], Err(NodeError::Violation { .. })));
    assert!(out[..3].iter().all(|r| matches!(r, Err(NodeError::IncompleteRound { .. }))));
}

proptest! {
    #[test]
    fn codec_round_trips(
        session in "[a-z0-9_-]{1,12}",
        sender in "[A-Z][0-9]{1,2}",
        round in any::<u64>(),
        x in any::<u64>(),
        offset in any::<u64>(),
        bits in any::<u32>(),
        kind in 0u8..3,
    ) {
        let payload = match kind {
            0 => Payload::Announce { x },
            1 => Payload::KeySync { peer: sender.clone(), offset, bits },
            _ => Payload::Control { op: session.clone() },
        };
        let m = Message::new(&session, round, &sender, payload);
        let frame = encode_frame(&m).unwrap();
        prop_assert_eq!(u32::from_be_bytes(frame[..4].try_into().unwrap()) as usize, frame.len() - 4);
        prop_assert_eq!(read_frame(&mut frame.as_slice()).unwrap(), Some(m));
    }
}
