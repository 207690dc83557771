// SPDX-License-Identifier: Apache-2.0

use std::collections::HashMap;
use std::io::{self, Read, Write};
use std::net::{SocketAddr, TcpListener, TcpStream, ToSocketAddrs};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex};
use std::thread::{self, JoinHandle};
use std::time::{Duration, SystemTime, UNIX_EPOCH};

use thiserror::Error;

use crate::protocol::table::{node_handle, SharedTable};
use crate::protocol::wire::{
    decode, encode, AckCode, DecodeError, Message, RuleAck, RuleSubmission,
};
use crate::NodeId;

/// Largest accepted frame body.
pub const MAX_FRAME: usize = 64 * 1024;

#[derive(Debug, Error)]
pub enum FrameError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("frame of {0} bytes exceeds the limit")]
    TooLarge(usize),
}

/// Writes a 4-byte big-endian length followed by the body.
pub fn write_frame<W: Write>(w: &mut W, body: &[u8]) -> io::Result<()> {
    let len = u32::try_from(body.len())
        .map_err(|_| io::Error::new(io::ErrorKind::InvalidInput, "frame too large"))?;
    let mut buf = Vec::with_capacity(4 + body.len());
    buf.extend_from_slice(&len.to_be_bytes());
    buf.extend_from_slice(body);
    w.write_all(&buf)?;
    w.flush()
}

pub fn read_frame<R: Read>(r: &mut R) -> Result<Vec<u8>, FrameError> {
    let mut len = [0u8; 4];
    r.read_exact(&mut len)?;
    let len = u32::from_be_bytes(len) as usize;
    if len > MAX_FRAME {
        return Err(FrameError::TooLarge(len));
    }
    let mut body = vec![0u8; len];
    r.read_exact(&mut body)?;
    Ok(body)
}

pub fn unix_now() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

pub type Clock = Arc<dyn Fn() -> u64 + Send + Sync>;

/// Answers one decoded frame. Anything but a well-formed submission gets an
/// `Other` ack.
pub fn respond(table: &SharedTable, frame: &[u8], now: u64) -> RuleAck {
    match decode(frame) {
        Ok(Message::Submission(m)) => match table.write() {
            Ok(mut t) => node_handle(&mut t, &m, now),
            Err(_) => RuleAck::new(m.rule_id, AckCode::Internal),
        },
        Ok(Message::Ack(a)) => RuleAck::new(a.rule_id, AckCode::Other),
        Err(_) => {
            let id = frame
                .get(2..10)
                .map(|b| u64::from_be_bytes(b.try_into().unwrap()))
                .unwrap_or(0);
            RuleAck::new(id, AckCode::Other)
        }
    }
}

fn serve_connection(mut stream: TcpStream, table: SharedTable, clock: Clock) {
    let _ = stream.set_nodelay(true);
    while let Ok(frame) = read_frame(&mut stream) {
        let ack = respond(&table, &frame, clock());
        if write_frame(&mut stream, &encode(&Message::Ack(ack))).is_err() {
            break;
        }
    }
}

/// A filtering node listening for submissions, one thread per connection.
pub struct NodeServer {
    addr: SocketAddr,
    table: SharedTable,
    stop: Arc<AtomicBool>,
    accept: Option<JoinHandle<()>>,
}

impl NodeServer {
    pub fn spawn<A: ToSocketAddrs>(addr: A, table: SharedTable, clock: Clock) -> io::Result<Self> {
        let listener = TcpListener::bind(addr)?;
        let addr = listener.local_addr()?;
        let stop = Arc::new(AtomicBool::new(false));
        let (t, s) = (table.clone(), stop.clone());
        let accept = thread::spawn(move || {
            for stream in listener.incoming() {
                if s.load(Ordering::SeqCst) {
                    break;
                }
                let Ok(stream) = stream else { continue };
                let (t, c) = (t.clone(), clock.clone());
                thread::spawn(move || serve_connection(stream, t, c));
            }
        });
        Ok(NodeServer {
            addr,
            table,
            stop,
            accept: Some(accept),
        })
    }

    pub fn local_addr(&self) -> SocketAddr {
        self.addr
    }

    pub fn table(&self) -> &SharedTable {
        &self.table
    }

    /// Blocks until the accept loop ends.
    pub fn join(mut self) {
        if let Some(h) = self.accept.take() {
            let _ = h.join();
        }
    }

    pub fn shutdown(mut self) {
        self.stop.store(true, Ordering::SeqCst);
        let _ = TcpStream::connect(self.addr);
        if let Some(h) = self.accept.take() {
            let _ = h.join();
        }
    }
}

/// Where to reach a filtering node.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Endpoint {
    pub node: NodeId,
    pub addr: String,
}

#[derive(Debug, Error)]
pub enum TransportError {
    #[error("{0}")]
    Io(#[from] io::Error),
    #[error("bad reply: {0}")]
    Decode(#[from] DecodeError),
    #[error("bad reply: {0}")]
    Frame(String),
    #[error("reply was not an ack for rule {0}")]
    UnexpectedReply(u64),
    #[error("node {0} unreachable")]
    Unreachable(NodeId),
}

pub trait Transport {
    fn request(&self, to: &Endpoint, msg: &RuleSubmission) -> Result<RuleAck, TransportError>;
}

/// Length-framed TCP with one cached connection per endpoint. A failed
/// exchange is retried on a fresh connection up to `retries` times.
pub struct TcpTransport {
    pub timeout: Duration,
    pub retries: u32,
    conns: Mutex<HashMap<String, TcpStream>>,
}

impl Default for TcpTransport {
    fn default() -> Self {
        TcpTransport {
            timeout: Duration::from_secs(5),
            retries: 1,
            conns: Mutex::new(HashMap::new()),
        }
    }
}

impl TcpTransport {
    fn connect(&self, addr: &str) -> io::Result<TcpStream> {
        let mut last = io::Error::new(io::ErrorKind::NotFound, format!("{addr} did not resolve"));
        for sa in addr.to_socket_addrs()? {
            match TcpStream::connect_timeout(&sa, self.timeout) {
                Ok(s) => {
                    s.set_read_timeout(Some(self.timeout))?;
                    s.set_write_timeout(Some(self.timeout))?;
                    s.set_nodelay(true)?;
                    return Ok(s);
                }
                Err(e) => last = e,
            }
        }
        Err(last)
    }

    fn exchange(
        &self,
        to: &Endpoint,
        body: &[u8],
        rule_id: u64,
    ) -> Result<RuleAck, TransportError> {
        let cached = self
            .conns
            .lock()
            .expect("connection cache")
            .remove(&to.addr);
        let mut stream = match cached {
            Some(s) => s,
            None => self.connect(&to.addr)?,
        };
        write_frame(&mut stream, body)?;
        let reply = read_frame(&mut stream).map_err(|e| match e {
            FrameError::Io(e) => TransportError::Io(e),
            e => TransportError::Frame(e.to_string()),
        })?;
        let Message::Ack(ack) = decode(&reply)? else {
            return Err(TransportError::UnexpectedReply(rule_id));
        };
        if ack.rule_id != rule_id {
            return Err(TransportError::UnexpectedReply(rule_id));
        }
        self.conns
            .lock()
            .expect("connection cache")
            .insert(to.addr.clone(), stream);
        Ok(ack)
    }
}

impl Transport for TcpTransport {
    fn request(&self, to: &Endpoint, msg: &RuleSubmission) -> Result<RuleAck, TransportError> {
        let body = encode(&Message::Submission(*msg));
        let mut result = self.exchange(to, &body, msg.rule_id);
        for _ in 0..self.retries {
            if result.is_ok() {
                break;
            }
            log::debug!("retrying rule {} at node {}", msg.rule_id, to.node);
            result = self.exchange(to, &body, msg.rule_id);
        }
        result
    }
}

/// Nodes in the same process, keyed by node id; absent nodes are unreachable.
pub struct InMemoryTransport {
    pub nodes: HashMap<NodeId, SharedTable>,
    pub clock: Clock,
}

impl Transport for InMemoryTransport {
    fn request(&self, to: &Endpoint, msg: &RuleSubmission) -> Result<RuleAck, TransportError> {
        let table = self
            .nodes
            .get(&to.node)
            .ok_or(TransportError::Unreachable(to.node))?;
        Ok(respond(
            table,
            &encode(&Message::Submission(*msg)),
            (self.clock)(),
        ))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Outcome {
    Ack(AckCode),
    Transport(String),
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("rule {rule_id} rejected by every candidate node")]
pub struct AllFailed {
    pub rule_id: u64,
    pub outcomes: Vec<(NodeId, Outcome)>,
}

/// Offers the rule to each candidate in order and stops at the first node
/// that installs it.
pub fn subscriber_submit(
    msg: &RuleSubmission,
    candidates: &[Endpoint],
    transport: &dyn Transport,
) -> Result<(NodeId, RuleAck), AllFailed> {
    let mut outcomes = Vec::new();
    for ep in candidates {
        match transport.request(ep, msg) {
            Ok(ack) if ack.code == AckCode::Ok => return Ok((ep.node, ack)),
            Ok(ack) => outcomes.push((ep.node, Outcome::Ack(ack.code))),
            Err(e) => outcomes.push((ep.node, Outcome::Transport(e.to_string()))),
        }
    }
    Err(AllFailed {
        rule_id: msg.rule_id,
        outcomes,
    })
}
