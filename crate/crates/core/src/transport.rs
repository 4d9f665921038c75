//! Length-prefixed JSON frames over a duplex stream.
//!
//! Each frame is a 4-byte big-endian body length followed by a UTF-8 JSON
//! object of the form `{"kind": "...", "body": ...}`. Big integers travel as
//! lowercase hex without a prefix.

use std::collections::HashMap;
use std::io::{self, Read, Write};
use std::net::{TcpListener, TcpStream, ToSocketAddrs};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError, Sender};
use std::sync::{Mutex, OnceLock};
use std::thread;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::encoding::TableColumn;
use crate::error::{Error, Result};

pub const PROTOCOL_VERSION: u32 = 1;

/// Frames larger than this are rejected on both ends.
pub const MAX_FRAME_BYTES: usize = 64 * 1024 * 1024;

/// Per-flight receive timeout.
pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(30);

/// Prefix of in-process endpoint tokens.
pub const MEM_SCHEME: &str = "mem:";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Hello {
    pub width: u32,
    pub pad_to: u32,
    pub n: String,
    pub g: String,
    pub protocol_version: u32,
    /// Deduplicated list length, sent only by linkage sessions.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub records: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AdvanceAction {
    AdvanceAlice,
    AdvanceBob,
    Matched,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "body", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum WireMessage {
    Hello(Hello),
    Table(Vec<TableColumn>),
    Products {
        set_a: Vec<String>,
        set_b: Vec<String>,
    },
    Result {
        equal: bool,
    },
    Advance {
        action: AdvanceAction,
        /// Record identifiers behind a matched hash, exchanged on `matched`.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        ids: Option<Vec<u64>>,
    },
    Abort {
        reason: String,
    },
}

impl WireMessage {
    pub fn kind(&self) -> &'static str {
        match self {
            WireMessage::Hello(_) => "HELLO",
            WireMessage::Table(_) => "TABLE",
            WireMessage::Products { .. } => "PRODUCTS",
            WireMessage::Result { .. } => "RESULT",
            WireMessage::Advance { .. } => "ADVANCE",
            WireMessage::Abort { .. } => "ABORT",
        }
    }

    /// Number of ciphertexts carried by the message.
    pub fn ciphertext_count(&self) -> usize {
        match self {
            WireMessage::Table(cols) => cols.len() * 2,
            WireMessage::Products { set_a, set_b } => set_a.len() + set_b.len(),
            _ => 0,
        }
    }

    pub fn abort(reason: impl Into<String>) -> Self {
        WireMessage::Abort {
            reason: reason.into(),
        }
    }
}

/// Serializes a message into a complete frame.
pub fn encode_frame(msg: &WireMessage) -> Result<Vec<u8>> {
    let body = serde_json::to_vec(msg)?;
    if body.len() > MAX_FRAME_BYTES {
        return Err(Error::Framing(format!(
            "frame of {} bytes exceeds limit",
            body.len()
        )));
    }
    let mut frame = Vec::with_capacity(body.len() + 4);
    frame.extend_from_slice(&(body.len() as u32).to_be_bytes());
    frame.extend_from_slice(&body);
    Ok(frame)
}

fn decode_body(body: &[u8]) -> Result<WireMessage> {
    let text =
        std::str::from_utf8(body).map_err(|e| Error::Framing(format!("body is not UTF-8: {e}")))?;
    serde_json::from_str(text).map_err(|e| Error::Framing(format!("malformed message: {e}")))
}

/// Parses exactly one complete frame.
pub fn decode_frame(frame: &[u8]) -> Result<WireMessage> {
    if frame.len() < 4 {
        return Err(Error::Framing("truncated frame header".into()));
    }
    let len = u32::from_be_bytes(frame[..4].try_into().unwrap()) as usize;
    if len > MAX_FRAME_BYTES {
        return Err(Error::Framing(format!(
            "declared frame length {len} exceeds limit"
        )));
    }
    let body = &frame[4..];
    if body.len() < len {
        return Err(Error::Framing(format!(
            "truncated frame: {} of {len} bytes",
            body.len()
        )));
    }
    if body.len() > len {
        return Err(Error::Framing("trailing bytes after frame".into()));
    }
    decode_body(body)
}

fn map_io(e: io::Error) -> Error {
    match e.kind() {
        io::ErrorKind::WouldBlock | io::ErrorKind::TimedOut => Error::Timeout,
        _ => Error::Io(e),
    }
}

/// Reads one frame from a stream. A clean EOF before the header is reported
/// as [`Error::Closed`]; an EOF inside a frame is a framing error.
pub fn read_frame<R: Read>(r: &mut R) -> Result<WireMessage> {
    let mut header = [0u8; 4];
    let mut got = 0;
    while got < 4 {
        match r.read(&mut header[got..]) {
            Ok(0) if got == 0 => return Err(Error::Closed),
            Ok(0) => return Err(Error::Framing("truncated frame header".into())),
            Ok(k) => got += k,
            Err(e) if e.kind() == io::ErrorKind::Interrupted => {}
            Err(e) => return Err(map_io(e)),
        }
    }
    let len = u32::from_be_bytes(header) as usize;
    if len > MAX_FRAME_BYTES {
        return Err(Error::Framing(format!(
            "declared frame length {len} exceeds limit"
        )));
    }
    let mut body = vec![0u8; len];
    r.read_exact(&mut body).map_err(|e| match e.kind() {
        io::ErrorKind::UnexpectedEof => {
            Error::Framing(format!("truncated frame: expected {len} bytes"))
        }
        _ => map_io(e),
    })?;
    decode_body(&body)
}

pub fn write_frame<W: Write>(w: &mut W, msg: &WireMessage) -> Result<()> {
    let frame = encode_frame(msg)?;
    w.write_all(&frame).map_err(map_io)?;
    w.flush().map_err(map_io)
}

/// A strictly ordered, exactly-once duplex message channel.
pub trait Channel {
    fn send(&mut self, msg: &WireMessage) -> Result<()>;

    /// Blocks until a whole message arrives or the flight timeout expires.
    fn receive(&mut self) -> Result<WireMessage>;

    fn close(&mut self) -> Result<()> {
        Ok(())
    }
}

impl<C: Channel + ?Sized> Channel for Box<C> {
    fn send(&mut self, msg: &WireMessage) -> Result<()> {
        (**self).send(msg)
    }

    fn receive(&mut self) -> Result<WireMessage> {
        (**self).receive()
    }

    fn close(&mut self) -> Result<()> {
        (**self).close()
    }
}

impl<C: Channel + ?Sized> Channel for &mut C {
    fn send(&mut self, msg: &WireMessage) -> Result<()> {
        (**self).send(msg)
    }

    fn receive(&mut self) -> Result<WireMessage> {
        (**self).receive()
    }

    fn close(&mut self) -> Result<()> {
        (**self).close()
    }
}

/// Frames over any byte stream.
pub struct StreamChannel<S> {
    stream: S,
}

impl<S: Read + Write> StreamChannel<S> {
    pub fn new(stream: S) -> Self {
        StreamChannel { stream }
    }

    pub fn into_inner(self) -> S {
        self.stream
    }
}

impl StreamChannel<TcpStream> {
    pub fn tcp(stream: TcpStream, timeout: Duration) -> Result<Self> {
        stream.set_read_timeout(Some(timeout))?;
        stream.set_write_timeout(Some(timeout))?;
        stream.set_nodelay(true)?;
        Ok(StreamChannel { stream })
    }
}

impl<S: Read + Write> Channel for StreamChannel<S> {
    fn send(&mut self, msg: &WireMessage) -> Result<()> {
        write_frame(&mut self.stream, msg)
    }

    fn receive(&mut self) -> Result<WireMessage> {
        read_frame(&mut self.stream)
    }
}

/// In-process channel. Messages are still encoded to frames so that both
/// transports share one codec.
pub struct MemChannel {
    tx: Option<Sender<Vec<u8>>>,
    rx: Receiver<Vec<u8>>,
    timeout: Duration,
}

/// Two connected in-process channel ends.
pub fn mem_pair(timeout: Duration) -> (MemChannel, MemChannel) {
    let (tx_a, rx_b) = mpsc::channel();
    let (tx_b, rx_a) = mpsc::channel();
    (
        MemChannel {
            tx: Some(tx_a),
            rx: rx_a,
            timeout,
        },
        MemChannel {
            tx: Some(tx_b),
            rx: rx_b,
            timeout,
        },
    )
}

impl Channel for MemChannel {
    fn send(&mut self, msg: &WireMessage) -> Result<()> {
        let frame = encode_frame(msg)?;
        let tx = self.tx.as_ref().ok_or(Error::Closed)?;
        tx.send(frame).map_err(|_| Error::Closed)
    }

    fn receive(&mut self) -> Result<WireMessage> {
        match self.rx.recv_timeout(self.timeout) {
            Ok(frame) => decode_frame(&frame),
            Err(RecvTimeoutError::Timeout) => Err(Error::Timeout),
            Err(RecvTimeoutError::Disconnected) => Err(Error::Closed),
        }
    }

    fn close(&mut self) -> Result<()> {
        self.tx = None;
        Ok(())
    }
}

/// Where a channel connects: a TCP `host:port` or an in-process `mem:` token.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Endpoint {
    Tcp(String),
    Mem(String),
}

impl std::str::FromStr for Endpoint {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if let Some(name) = s.strip_prefix(MEM_SCHEME) {
            return Ok(Endpoint::Mem(name.to_string()));
        }
        match s.rsplit_once(':') {
            Some((host, port)) if !host.is_empty() && port.parse::<u16>().is_ok() => {
                Ok(Endpoint::Tcp(s.to_string()))
            }
            _ => Err(Error::Config(format!(
                "endpoint {s:?} is neither host:port nor mem:<name>"
            ))),
        }
    }
}

type Rendezvous = Mutex<HashMap<String, Sender<MemChannel>>>;

fn rendezvous() -> &'static Rendezvous {
    static SLOTS: OnceLock<Rendezvous> = OnceLock::new();
    SLOTS.get_or_init(Default::default)
}

const DIAL_RETRY: Duration = Duration::from_millis(20);

/// Waits for one peer to dial `endpoint` and returns the connected channel.
pub fn listen(endpoint: &Endpoint, timeout: Duration) -> Result<Box<dyn Channel + Send>> {
    match endpoint {
        Endpoint::Mem(name) => {
            let (tx, rx) = mpsc::channel();
            {
                let mut slots = rendezvous().lock().unwrap();
                if slots.contains_key(name) {
                    return Err(Error::Config(format!("mem:{name} already has a listener")));
                }
                slots.insert(name.clone(), tx);
            }
            let accepted = rx.recv_timeout(timeout);
            rendezvous().lock().unwrap().remove(name);
            accepted
                .map(|ch| Box::new(ch) as _)
                .map_err(|_| Error::Timeout)
        }
        Endpoint::Tcp(addr) => {
            let listener = TcpListener::bind(addr)?;
            let (stream, _) = accept_with_timeout(&listener, timeout)?;
            Ok(Box::new(StreamChannel::tcp(stream, timeout)?))
        }
    }
}

fn accept_with_timeout(
    listener: &TcpListener,
    timeout: Duration,
) -> Result<(TcpStream, std::net::SocketAddr)> {
    listener.set_nonblocking(true)?;
    let deadline = Instant::now() + timeout;
    loop {
        match listener.accept() {
            Ok((stream, peer)) => {
                stream.set_nonblocking(false)?;
                return Ok((stream, peer));
            }
            Err(e) if e.kind() == io::ErrorKind::WouldBlock => {
                if Instant::now() >= deadline {
                    return Err(Error::Timeout);
                }
                thread::sleep(DIAL_RETRY);
            }
            Err(e) => return Err(e.into()),
        }
    }
}

/// Connects to a listening peer, retrying until `timeout` elapses.
pub fn dial(endpoint: &Endpoint, timeout: Duration) -> Result<Box<dyn Channel + Send>> {
    let deadline = Instant::now() + timeout;
    match endpoint {
        Endpoint::Mem(name) => loop {
            if let Some(tx) = rendezvous().lock().unwrap().remove(name) {
                let (ours, theirs) = mem_pair(timeout);
                tx.send(theirs).map_err(|_| Error::Closed)?;
                return Ok(Box::new(ours));
            }
            if Instant::now() >= deadline {
                return Err(Error::Timeout);
            }
            thread::sleep(DIAL_RETRY);
        },
        Endpoint::Tcp(addr) => loop {
            let attempt = addr
                .to_socket_addrs()?
                .next()
                .ok_or_else(|| Error::Config(format!("cannot resolve {addr}")))
                .and_then(|sa| {
                    TcpStream::connect_timeout(&sa, timeout.min(Duration::from_secs(5)))
                        .map_err(Error::from)
                });
            match attempt {
                Ok(stream) => return Ok(Box::new(StreamChannel::tcp(stream, timeout)?)),
                Err(Error::Io(e)) if Instant::now() < deadline && retryable(&e) => {
                    thread::sleep(DIAL_RETRY)
                }
                Err(e) => return Err(e),
            }
        },
    }
}

fn retryable(e: &io::Error) -> bool {
    matches!(
        e.kind(),
        io::ErrorKind::ConnectionRefused | io::ErrorKind::ConnectionReset | io::ErrorKind::TimedOut
    )
}

/// Direction of a traced frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Sent,
    Received,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrameRecord {
    pub direction: Direction,
    pub kind: &'static str,
    pub ciphertexts: usize,
    pub bytes: usize,
}

/// Wraps a channel and records every frame passing through it.
pub struct TracedChannel<C> {
    inner: C,
    log: Vec<FrameRecord>,
}

impl<C: Channel> TracedChannel<C> {
    pub fn new(inner: C) -> Self {
        TracedChannel {
            inner,
            log: Vec::new(),
        }
    }

    pub fn log(&self) -> &[FrameRecord] {
        &self.log
    }

    pub fn into_parts(self) -> (C, Vec<FrameRecord>) {
        (self.inner, self.log)
    }

    fn record(&mut self, direction: Direction, msg: &WireMessage) {
        let bytes = serde_json::to_vec(msg).map(|b| b.len() + 4).unwrap_or(0);
        self.log.push(FrameRecord {
            direction,
            kind: msg.kind(),
            ciphertexts: msg.ciphertext_count(),
            bytes,
        });
    }
}

impl<C: Channel> Channel for TracedChannel<C> {
    fn send(&mut self, msg: &WireMessage) -> Result<()> {
        self.inner.send(msg)?;
        self.record(Direction::Sent, msg);
        Ok(())
    }

    fn receive(&mut self) -> Result<WireMessage> {
        let msg = self.inner.receive()?;
        self.record(Direction::Received, &msg);
        Ok(msg)
    }

    fn close(&mut self) -> Result<()> {
        self.inner.close()
    }
}
