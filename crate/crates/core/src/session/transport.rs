//! Point-to-point links between roles: in-process channels or a TCP mesh.
//!
//! Every ordered pair of roles has a FIFO link. Receiving names the sender,
//! so a role's view of the session depends only on the messages themselves,
//! never on arrival timing.

use std::io::{self, Read, Write};
use std::net::{SocketAddr, TcpListener, TcpStream};
use std::sync::mpsc::{channel, Receiver, RecvTimeoutError, Sender};
use std::sync::Arc;
use std::time::Duration;

use super::message::{frame, unframe, AbortReason, Body, Message, Phase};
use super::transcript::{Entry, Recorder};
use super::Role;
use crate::commit::sha256;

/// Largest frame a TCP reader accepts.
pub const MAX_FRAME: usize = 1 << 30;

/// Why a role stopped receiving.
#[derive(Clone, Debug, PartialEq, Eq)]
pub(crate) enum Stop {
    /// Detected locally.
    Local(AbortReason),
    /// `from` sent an abort with this reason.
    Peer { from: Role, reason: AbortReason },
}

enum Tx {
    Channel(Sender<Vec<u8>>),
    Tcp(TcpStream),
}

struct Link {
    tx: Tx,
    rx: Receiver<Vec<u8>>,
}

/// One role's view of the network.
pub(crate) struct Endpoint {
    pub role: Role,
    pub phase: Option<Phase>,
    roles: Vec<Role>,
    links: Vec<Option<Link>>,
    session: u64,
    timeout: Option<Duration>,
    recorder: Arc<Recorder>,
    seq: u64,
}

impl Endpoint {
    fn slot(&self, r: Role) -> usize {
        self.roles.iter().position(|&x| x == r).expect("known role")
    }

    pub fn set_phase(&mut self, p: Option<Phase>) {
        if let (Some(old), Some(new)) = (self.phase, p) {
            assert!(new >= old, "phase went backwards: {old:?} -> {new:?}");
        }
        self.phase = p;
        self.recorder.mark(self.role, p);
    }

    fn send_frame(&mut self, to: Role, f: &[u8], m: &Message, digest: [u8; 32]) -> Result<(), Stop> {
        let tag = m.tag();
        if !tag.allows(self.role, to) {
            return Err(Stop::Local(AbortReason::Protocol(format!("{} may not go {} -> {}", tag.name(), self.role, to))));
        }
        let slot = self.slot(to);
        let link = self.links[slot].as_mut().expect("link to peer");
        match &mut link.tx {
            // the receiving endpoint outlives every sender, so this cannot fail
            Tx::Channel(tx) => tx.send(f.to_vec()).map_err(|_| Stop::Local(AbortReason::Transport(format!("{to} gone"))))?,
            Tx::Tcp(s) => s.write_all(f).map_err(|e| Stop::Local(AbortReason::Transport(format!("{to}: {e}"))))?,
        }
        self.recorder.push(Entry {
            phase: self.phase.unwrap_or(Phase::Output),
            sender: self.role,
            receiver: to,
            tag,
            bytes: f.len(),
            micros: self.recorder.micros(),
            seq: self.seq,
            digest,
        });
        self.seq += 1;
        Ok(())
    }

    pub fn send_all(&mut self, to: &[Role], body: Body) -> Result<(), Stop> {
        let m = Message { session: self.session, sender: self.role, body };
        let f = frame(&m).map_err(|e| Stop::Local(AbortReason::Protocol(e.to_string())))?;
        let digest = sha256(&f);
        for &r in to {
            self.send_frame(r, &f, &m, digest)?;
        }
        Ok(())
    }

    pub fn send(&mut self, to: Role, body: Body) -> Result<(), Stop> {
        self.send_all(&[to], body)
    }

    /// Sends an abort to everyone who may receive one. Errors are ignored: the
    /// role is stopping anyway.
    pub fn broadcast_abort(&mut self, reason: AbortReason) {
        let input = self.phase == Some(Phase::Input);
        let targets: Vec<Role> = self.roles.iter().copied().filter(|&r| r != self.role).collect();
        for r in targets {
            let body = if input { Body::InputAbort(reason.clone()) } else { Body::Abort(reason.clone()) };
            if body.tag().allows(self.role, r) {
                let _ = self.send(r, body);
            }
        }
    }

    /// Next message from `from`. Aborts surface as [`Stop::Peer`].
    pub fn recv(&mut self, from: Role) -> Result<Body, Stop> {
        let slot = self.slot(from);
        let rx = &self.links[slot].as_ref().expect("link to peer").rx;
        let bytes = match self.timeout {
            None => rx.recv().map_err(|_| Stop::Local(AbortReason::Transport(format!("{from} disconnected"))))?,
            Some(t) => rx.recv_timeout(t).map_err(|e| match e {
                RecvTimeoutError::Timeout => Stop::Local(AbortReason::Timeout(from)),
                RecvTimeoutError::Disconnected => Stop::Local(AbortReason::Transport(format!("{from} disconnected"))),
            })?,
        };
        let m = unframe(&bytes).map_err(|e| Stop::Local(AbortReason::Protocol(format!("from {from}: {e}"))))?;
        if m.session != self.session || m.sender != from {
            return Err(Stop::Local(AbortReason::Protocol(format!("{from} sent a message for another session or role"))));
        }
        match m.body {
            Body::InputAbort(reason) | Body::Abort(reason) => Err(Stop::Peer { from, reason }),
            b => Ok(b),
        }
    }
}

impl Drop for Endpoint {
    fn drop(&mut self) {
        // unblocks the reader threads on both ends
        for link in self.links.iter().flatten() {
            if let Tx::Tcp(s) = &link.tx {
                let _ = s.shutdown(std::net::Shutdown::Both);
            }
        }
    }
}

fn build(roles: &[Role], session: u64, timeout: Option<Duration>, recorder: &Arc<Recorder>) -> Vec<Endpoint> {
    roles
        .iter()
        .map(|&role| Endpoint {
            role,
            phase: None,
            roles: roles.to_vec(),
            links: roles.iter().map(|_| None).collect(),
            session,
            timeout,
            recorder: recorder.clone(),
            seq: 0,
        })
        .collect()
}

/// Endpoints joined by unbounded channels.
pub(crate) fn in_process(roles: &[Role], session: u64, timeout: Option<Duration>, recorder: &Arc<Recorder>) -> Vec<Endpoint> {
    let mut eps = build(roles, session, timeout, recorder);
    let k = roles.len();
    for a in 0..k {
        for b in a + 1..k {
            let (tx, rx) = channel();
            let (tx_back, rx_back) = channel();
            eps[a].links[b] = Some(Link { tx: Tx::Channel(tx), rx: rx_back });
            eps[b].links[a] = Some(Link { tx: Tx::Channel(tx_back), rx });
        }
    }
    eps
}

/// Listeners for a TCP mesh. Role `i` listens on `base.port() + i`, or on an
/// ephemeral port when `base.port()` is 0.
pub struct TcpMesh {
    listeners: Vec<TcpListener>,
    addrs: Vec<SocketAddr>,
}

impl TcpMesh {
    pub fn bind(base: SocketAddr, count: usize) -> io::Result<Self> {
        let mut listeners = Vec::with_capacity(count);
        let mut addrs = Vec::with_capacity(count);
        for i in 0..count {
            let mut a = base;
            if base.port() != 0 {
                let port = base.port() as usize + i;
                a.set_port(u16::try_from(port).map_err(|_| io::Error::other("port range exceeds 65535"))?);
            }
            let l = TcpListener::bind(a)?;
            addrs.push(l.local_addr()?);
            listeners.push(l);
        }
        Ok(TcpMesh { listeners, addrs })
    }

    pub fn addrs(&self) -> &[SocketAddr] {
        &self.addrs
    }
}

fn spawn_reader(mut s: TcpStream) -> Receiver<Vec<u8>> {
    let (tx, rx) = channel();
    std::thread::spawn(move || loop {
        let mut len = [0u8; 4];
        if s.read_exact(&mut len).is_err() {
            return;
        }
        let n = u32::from_be_bytes(len) as usize;
        if n > MAX_FRAME {
            return;
        }
        let mut buf = Vec::with_capacity(4 + n);
        buf.extend_from_slice(&len);
        buf.resize(4 + n, 0);
        if s.read_exact(&mut buf[4..]).is_err() || tx.send(buf).is_err() {
            return;
        }
    });
    rx
}

/// Connects every pair of roles: the higher slot dials the lower one and
/// announces itself with `session ‖ slot`.
pub(crate) fn tcp(
    mesh: TcpMesh,
    roles: &[Role],
    session: u64,
    timeout: Option<Duration>,
    recorder: &Arc<Recorder>,
) -> io::Result<Vec<Endpoint>> {
    let mut eps = build(roles, session, timeout, recorder);
    let k = roles.len();
    let mut streams: Vec<Vec<Option<TcpStream>>> = (0..k).map(|_| (0..k).map(|_| None).collect()).collect();
    for b in 0..k {
        for a in 0..b {
            let mut s = TcpStream::connect(mesh.addrs[a])?;
            let mut hello = session.to_be_bytes().to_vec();
            hello.extend_from_slice(&(b as u32).to_be_bytes());
            s.write_all(&hello)?;
            streams[b][a] = Some(s);
        }
    }
    for (a, l) in mesh.listeners.iter().enumerate() {
        for _ in a + 1..k {
            let (mut s, _) = l.accept()?;
            s.set_read_timeout(Some(Duration::from_secs(30)))?;
            let mut hello = [0u8; 12];
            s.read_exact(&mut hello)?;
            s.set_read_timeout(None)?;
            let b = u32::from_be_bytes(hello[8..].try_into().unwrap()) as usize;
            if u64::from_be_bytes(hello[..8].try_into().unwrap()) != session || b <= a || b >= k {
                return Err(io::Error::other("unexpected peer in handshake"));
            }
            streams[a][b] = Some(s);
        }
    }
    for a in 0..k {
        for b in 0..k {
            if let Some(s) = streams[a][b].take() {
                s.set_nodelay(true)?;
                let rx = spawn_reader(s.try_clone()?);
                eps[a].links[b] = Some(Link { tx: Tx::Tcp(s), rx });
            }
        }
    }
    Ok(eps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::session::message::Phase;

    fn pair(eps: &mut [Endpoint]) -> (&mut Endpoint, &mut Endpoint) {
        let (a, b) = eps.split_at_mut(1);
        (&mut a[0], &mut b[0])
    }

    fn exchange(mut eps: Vec<Endpoint>) {
        let (p1, p2) = pair(&mut eps);
        p1.set_phase(Some(Phase::Input));
        p1.send(Role::P2, Body::InputDigests(vec![[7; 32]])).unwrap();
        p1.send(Role::P2, Body::InputDigests(vec![])).unwrap();
        assert_eq!(p2.recv(Role::P1).unwrap(), Body::InputDigests(vec![[7; 32]]));
        assert_eq!(p2.recv(Role::P1).unwrap(), Body::InputDigests(vec![]));
        p2.set_phase(Some(Phase::Input));
        p2.broadcast_abort(AbortReason::ChallengeMismatch);
        assert_eq!(
            p1.recv(Role::P2),
            Err(Stop::Peer { from: Role::P2, reason: AbortReason::ChallengeMismatch })
        );
    }

    #[test]
    fn channels_deliver_in_order() {
        let rec = Arc::new(Recorder::new());
        exchange(in_process(&[Role::P1, Role::P2], 5, None, &rec));
        let t = Arc::try_unwrap(rec).unwrap().finish();
        assert_eq!(t.entries.len(), 3);
    }

    #[test]
    fn tcp_delivers_in_order() {
        let rec = Arc::new(Recorder::new());
        let mesh = TcpMesh::bind("127.0.0.1:0".parse().unwrap(), 2).unwrap();
        exchange(tcp(mesh, &[Role::P1, Role::P2], 5, Some(Duration::from_secs(5)), &rec).unwrap());
    }

    #[test]
    fn timeout_is_reported() {
        let rec = Arc::new(Recorder::new());
        let mut eps = in_process(&[Role::P1, Role::P2], 5, Some(Duration::from_millis(10)), &rec);
        assert_eq!(eps[0].recv(Role::P2), Err(Stop::Local(AbortReason::Timeout(Role::P2))));
    }

    #[test]
    fn direction_table_is_enforced() {
        let rec = Arc::new(Recorder::new());
        let mut eps = in_process(&[Role::P1, Role::Provider(0)], 5, None, &rec);
        assert!(eps[1].send(Role::P1, Body::BundleDigest([0; 32])).is_err());
    }
}
