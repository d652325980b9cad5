//! TCP conduit.
//!
//! The client opens with the protocol version byte and the server echoes it.
//! The client then announces its site and flows (u16 site length + bytes,
//! u16 flow count, then per flow a u16 id length + bytes and one constraint
//! byte, 0 for hard and 1 for soft). Slice frames follow until the client
//! closes its side, which ends every announced flow.

use std::io::{BufReader, BufWriter, Read, Write};
use std::net::{TcpListener, TcpStream, ToSocketAddrs};
use std::sync::mpsc::Sender;
use std::thread::JoinHandle;

use crate::model::{Constraint, FlowDescriptor, FlowId, SiteId, SynchronousSlice};

use super::wire::{encode_slice, read_slice, WIRE_VERSION};
use super::TransportError;

/// What a client says it is going to send.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Announcement {
    pub site: SiteId,
    pub flows: Vec<(FlowId, Constraint)>,
}

impl Announcement {
    pub fn from_descriptors(site: SiteId, flows: &[FlowDescriptor]) -> Self {
        Announcement {
            site,
            flows: flows
                .iter()
                .map(|d| (d.flow_id.clone(), d.constraint))
                .collect(),
        }
    }

    pub fn descriptors(&self, source: &str) -> Vec<FlowDescriptor> {
        self.flows
            .iter()
            .map(|(id, c)| FlowDescriptor::new(id.clone(), source, self.site.clone(), *c))
            .collect()
    }

    fn encode(&self) -> Result<Vec<u8>, TransportError> {
        let mut out = Vec::new();
        let put = |out: &mut Vec<u8>, s: &str| -> Result<(), TransportError> {
            let n = u16::try_from(s.len()).map_err(|_| TransportError::TooLarge("identifier"))?;
            out.extend_from_slice(&n.to_le_bytes());
            out.extend_from_slice(s.as_bytes());
            Ok(())
        };
        put(&mut out, self.site.as_str())?;
        let n =
            u16::try_from(self.flows.len()).map_err(|_| TransportError::TooLarge("flow count"))?;
        out.extend_from_slice(&n.to_le_bytes());
        for (id, c) in &self.flows {
            put(&mut out, id.as_str())?;
            out.push(match c {
                Constraint::Hard => 0,
                Constraint::Soft => 1,
            });
        }
        Ok(out)
    }

    fn read<R: Read>(mut r: R) -> Result<Self, TransportError> {
        fn exact<R: Read, const N: usize>(r: &mut R) -> Result<[u8; N], TransportError> {
            let mut b = [0u8; N];
            r.read_exact(&mut b)
                .map_err(|_| TransportError::MalformedFrame("truncated announcement".into()))?;
            Ok(b)
        }
        fn string<R: Read>(r: &mut R) -> Result<String, TransportError> {
            let len = u16::from_le_bytes(exact(r)?) as usize;
            let mut buf = vec![0u8; len];
            r.read_exact(&mut buf)
                .map_err(|_| TransportError::MalformedFrame("truncated announcement".into()))?;
            String::from_utf8(buf)
                .map_err(|_| TransportError::MalformedFrame("identifier is not UTF-8".into()))
        }
        let bad = |what: &str| TransportError::MalformedFrame(format!("announcement: {what}"));
        let site = SiteId::new(string(&mut r)?).map_err(|_| bad("empty site id"))?;
        let count = u16::from_le_bytes(exact(&mut r)?);
        let mut flows = Vec::with_capacity(count as usize);
        for _ in 0..count {
            let id = FlowId::new(string(&mut r)?).map_err(|_| bad("empty flow id"))?;
            let c = match exact::<_, 1>(&mut r)?[0] {
                0 => Constraint::Hard,
                1 => Constraint::Soft,
                other => return Err(bad(&format!("constraint byte {other}"))),
            };
            flows.push((id, c));
        }
        Ok(Announcement { site, flows })
    }
}

/// Sending end of a conduit.
pub struct SocketSender {
    stream: BufWriter<TcpStream>,
}

impl SocketSender {
    pub fn connect(
        addr: impl ToSocketAddrs,
        announcement: &Announcement,
    ) -> Result<Self, TransportError> {
        let mut stream = TcpStream::connect(addr)?;
        stream.set_nodelay(true)?;
        stream.write_all(&[WIRE_VERSION])?;
        let mut echo = [0u8; 1];
        stream
            .read_exact(&mut echo)
            .map_err(|_| TransportError::ChannelClosed)?;
        if echo[0] != WIRE_VERSION {
            return Err(TransportError::VersionMismatch(echo[0]));
        }
        stream.write_all(&announcement.encode()?)?;
        Ok(SocketSender {
            stream: BufWriter::new(stream),
        })
    }

    pub fn send(&mut self, slice: &SynchronousSlice) -> Result<(), TransportError> {
        let bytes = encode_slice(slice)?;
        self.stream
            .write_all(&bytes)
            .map_err(|_| TransportError::ChannelClosed)?;
        self.stream
            .flush()
            .map_err(|_| TransportError::ChannelClosed)
    }

    /// Closes the write side, which ends all announced flows.
    pub fn finish(mut self) -> Result<(), TransportError> {
        self.stream.flush()?;
        let stream = self
            .stream
            .into_inner()
            .map_err(|e| TransportError::Io(e.to_string()))?;
        stream.shutdown(std::net::Shutdown::Write)?;
        Ok(())
    }
}

/// Receiving end of a conduit after the handshake.
pub struct SocketReceiver {
    announcement: Announcement,
    stream: BufReader<TcpStream>,
}

impl SocketReceiver {
    /// Accepts one client and runs the handshake.
    pub fn accept(listener: &TcpListener) -> Result<Self, TransportError> {
        let (stream, _) = listener.accept()?;
        Self::handshake(stream)
    }

    pub fn handshake(mut stream: TcpStream) -> Result<Self, TransportError> {
        let mut version = [0u8; 1];
        stream
            .read_exact(&mut version)
            .map_err(|_| TransportError::MalformedFrame("missing version byte".into()))?;
        if version[0] != WIRE_VERSION {
            // answer with ours so the client can report the mismatch
            let _ = stream.write_all(&[WIRE_VERSION]);
            return Err(TransportError::VersionMismatch(version[0]));
        }
        stream.write_all(&version)?;
        let mut stream = BufReader::new(stream);
        let announcement = Announcement::read(&mut stream)?;
        Ok(SocketReceiver {
            announcement,
            stream,
        })
    }

    pub fn announcement(&self) -> &Announcement {
        &self.announcement
    }

    /// Next slice, or `None` once the client has closed.
    pub fn recv(&mut self) -> Result<Option<SynchronousSlice>, TransportError> {
        read_slice(&mut self.stream)
    }

    /// Moves the receiver onto a thread that forwards every frame.
    pub fn spawn_forwarder(mut self, tx: Sender<Inbound>) -> JoinHandle<()> {
        std::thread::spawn(move || loop {
            let msg = match self.recv() {
                Ok(Some(slice)) => Inbound::Slice(slice),
                Ok(None) => Inbound::Closed,
                Err(e) => Inbound::Failed(e),
            };
            let done = !matches!(msg, Inbound::Slice(_));
            if tx.send(msg).is_err() || done {
                return;
            }
        })
    }
}

/// Messages from a forwarder thread.
#[derive(Debug)]
pub enum Inbound {
    Slice(SynchronousSlice),
    Closed,
    Failed(TransportError),
}
