//! WebSocket service for one session and one pilot.
//!
//! Connection tasks only decode and forward; a single task owns the
//! [`TickLoop`] and consumes their messages between ticks. The session
//! ticks while a pilot is attached, has completed the handshake and has not
//! paused. A disconnect pauses it; the next pilot resumes from the same
//! state.

use std::net::SocketAddr;
use std::time::Duration;

use futures_util::{SinkExt, StreamExt};
use log::{debug, info, warn};
use thiserror::Error;
use tokio::net::{TcpListener, TcpStream};
use tokio::sync::mpsc;
use tokio::task::JoinHandle;
use tokio::time::{interval, timeout, MissedTickBehavior};
use tokio_tungstenite::tungstenite::Message;

use safespect_core::canonical;
use safespect_core::config::EngineConfig;
use safespect_core::hud::InterfaceMode;
use safespect_core::scenario::ScenarioSpec;
use safespect_core::script::Script;

use crate::protocol::{decode, encode, ErrorCode, ProtocolError, WireMessage, PROTOCOL_VERSION};
use crate::tick_loop::{SessionOutcome, TickLoop};

/// Frames buffered per connection before the tick loop waits for the socket.
const OUTBOUND_BUFFER: usize = 256;
/// How long a finished session waits for the pilot's socket to flush.
const CLOSE_GRACE: Duration = Duration::from_secs(5);
/// Ticks between cooperative yields when running flat out.
const YIELD_EVERY: u64 = 64;

#[derive(Debug, Clone)]
pub struct ServerConfig {
    pub spec: ScenarioSpec,
    pub engine: EngineConfig,
    pub mode: InterfaceMode,
    /// Simulated seconds per wall second; 0 runs as fast as the pilot reads.
    pub realtime_factor: f64,
    pub script: Option<Script>,
    pub addr: SocketAddr,
}

#[derive(Debug, Error)]
pub enum ServeError {
    #[error("cannot listen on {addr}: {source}")]
    Bind {
        addr: SocketAddr,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid session config: {0}")]
    Config(String),
    #[error("listener failed: {0}")]
    Io(#[from] std::io::Error),
}

enum Control {
    Message(u64, Result<WireMessage, ProtocolError>),
    Closed(u64),
}

struct Pilot {
    id: u64,
    out: mpsc::Sender<String>,
    task: JoinHandle<()>,
    greeted: bool,
    paused: bool,
}

pub struct Server {
    listener: TcpListener,
    tick_loop: TickLoop,
    mode: InterfaceMode,
    period: Option<Duration>,
}

impl Server {
    pub async fn bind(config: ServerConfig) -> Result<Self, ServeError> {
        let factor = config.realtime_factor;
        if !(factor >= 0.0 && factor.is_finite()) {
            return Err(ServeError::Config(format!("realtime factor must be >= 0, got {factor}")));
        }
        if !(config.engine.tick_rate_hz > 0.0) {
            return Err(ServeError::Config("tick rate must be > 0".into()));
        }
        if let Some(script) = &config.script {
            script.check(&config.spec).map_err(|e| ServeError::Config(e.to_string()))?;
        }
        let period = (factor > 0.0).then(|| Duration::from_secs_f64(config.engine.dt() / factor));
        let tick_loop = TickLoop::new(config.spec, config.engine, config.mode, config.script.as_ref())
            .map_err(|e| ServeError::Config(e.to_string()))?;
        let listener = TcpListener::bind(config.addr).await.map_err(|source| ServeError::Bind {
            addr: config.addr,
            source,
        })?;
        Ok(Self {
            listener,
            tick_loop,
            mode: config.mode,
            period,
        })
    }

    pub fn local_addr(&self) -> SocketAddr {
        self.listener.local_addr().expect("bound listener has an address")
    }

    /// Serve until the mission ends, then return the session's telemetry.
    pub async fn run(mut self) -> Result<SessionOutcome, ServeError> {
        let (ctl_tx, mut ctl_rx) = mpsc::unbounded_channel::<Control>();
        let mut pilot: Option<Pilot> = None;
        let mut next_id = 0u64;
        let mut pacer = self.period.map(|p| {
            let mut i = interval(p);
            i.set_missed_tick_behavior(MissedTickBehavior::Delay);
            i
        });
        let mut flat_out_ticks = 0u64;

        loop {
            let running = pilot.as_ref().is_some_and(|p| p.greeted && !p.paused);
            tokio::select! {
                biased;
                accepted = self.listener.accept() => {
                    let (stream, peer) = accepted?;
                    next_id += 1;
                    if pilot.is_some() {
                        info!("refusing {peer}: session busy");
                        tokio::spawn(refuse_busy(stream));
                        continue;
                    }
                    info!("pilot {next_id} connected from {peer}");
                    let (out_tx, out_rx) = mpsc::channel(OUTBOUND_BUFFER);
                    let task = tokio::spawn(connection(stream, next_id, ctl_tx.clone(), out_rx));
                    pilot = Some(Pilot { id: next_id, out: out_tx, task, greeted: false, paused: false });
                }
                Some(ctl) = ctl_rx.recv() => match ctl {
                    Control::Closed(id) => {
                        if pilot.as_ref().is_some_and(|p| p.id == id) {
                            info!("pilot {id} left at tick {}; session paused", self.tick_loop.session().tick());
                            pilot = None;
                        }
                    }
                    Control::Message(id, msg) => {
                        let Some(p) = pilot.as_mut().filter(|p| p.id == id) else { continue };
                        if !self.handle(p, msg).await {
                            pilot = None;
                        }
                    }
                },
                _ = tick_wait(pacer.as_mut()), if running => {
                    let p = pilot.as_mut().expect("running implies a pilot");
                    let mut sent = true;
                    for msg in self.tick_loop.tick() {
                        if p.out.send(encode(&msg)).await.is_err() {
                            sent = false;
                            break;
                        }
                    }
                    if self.tick_loop.finished() {
                        let p = pilot.take().expect("pilot present");
                        drop(p.out);
                        if timeout(CLOSE_GRACE, p.task).await.is_err() {
                            warn!("pilot socket did not close in time");
                        }
                        info!("mission ended after {} ticks", self.tick_loop.log().len());
                        return Ok(self.tick_loop.outcome());
                    }
                    if !sent {
                        pilot = None;
                    }
                    if pacer.is_none() {
                        flat_out_ticks += 1;
                        if flat_out_ticks % YIELD_EVERY == 0 {
                            tokio::task::yield_now().await;
                        }
                    }
                }
            }
        }
    }

    /// Apply one pilot message. Returns false when the pilot is dropped.
    async fn handle(&mut self, p: &mut Pilot, msg: Result<WireMessage, ProtocolError>) -> bool {
        let reply = |code: ErrorCode, message: String| WireMessage::Error { code, message };
        let (response, keep) = match msg {
            Err(e) => (Some(reply(ErrorCode::Protocol, e.to_string())), true),
            Ok(WireMessage::Hello { schema_version, mode }) => {
                if schema_version != PROTOCOL_VERSION {
                    let m = format!("server speaks schema {PROTOCOL_VERSION}, client sent {schema_version}");
                    (Some(reply(ErrorCode::VersionMismatch, m)), false)
                } else if mode.is_some_and(|m| m != self.mode) {
                    let m = format!("session runs {}, client asked for {}", wire_name(self.mode), wire_name(mode.unwrap()));
                    (Some(reply(ErrorCode::ModeMismatch, m)), false)
                } else {
                    p.greeted = true;
                    (Some(self.tick_loop.welcome()), true)
                }
            }
            Ok(_) if !p.greeted => (Some(reply(ErrorCode::NotReady, "send hello first".into())), true),
            Ok(WireMessage::Input { input }) => {
                if self.tick_loop.scripted() {
                    (Some(reply(ErrorCode::Scripted, "session input comes from a script".into())), true)
                } else {
                    self.tick_loop.queue_input(input);
                    (None, true)
                }
            }
            Ok(WireMessage::Pause) => {
                p.paused = true;
                (None, true)
            }
            Ok(WireMessage::Resume) => {
                p.paused = false;
                (None, true)
            }
            Ok(_) => (Some(reply(ErrorCode::Protocol, "server messages are not accepted".into())), true),
        };
        if let Some(r) = response {
            if p.out.send(encode(&r)).await.is_err() {
                return false;
            }
        }
        keep
    }
}

fn wire_name(mode: InterfaceMode) -> String {
    canonical::to_value(&mode).as_str().unwrap_or_default().to_string()
}

async fn tick_wait(pacer: Option<&mut tokio::time::Interval>) {
    if let Some(i) = pacer {
        i.tick().await;
    }
}

async fn refuse_busy(stream: TcpStream) {
    let Ok(mut ws) = tokio_tungstenite::accept_async(stream).await else { return };
    let msg = WireMessage::Error {
        code: ErrorCode::Busy,
        message: "session already has a pilot".into(),
    };
    let _ = ws.send(Message::text(encode(&msg))).await;
    let _ = ws.close(None).await;
}

async fn connection(
    stream: TcpStream,
    id: u64,
    ctl: mpsc::UnboundedSender<Control>,
    mut out: mpsc::Receiver<String>,
) {
    let ws = match tokio_tungstenite::accept_async(stream).await {
        Ok(ws) => ws,
        Err(e) => {
            debug!("pilot {id} handshake failed: {e}");
            let _ = ctl.send(Control::Closed(id));
            return;
        }
    };
    let (mut sink, mut source) = ws.split();
    let writer = async {
        while let Some(text) = out.recv().await {
            if sink.send(Message::text(text)).await.is_err() {
                return;
            }
        }
        let _ = sink.close().await;
    };
    let reader = async {
        while let Some(frame) = source.next().await {
            let msg = match frame {
                Ok(Message::Text(t)) => decode(t.as_str()),
                Ok(Message::Binary(_)) => Err(ProtocolError::Schema {
                    path: String::new(),
                    message: "messages are text frames".into(),
                }),
                Ok(Message::Close(_)) | Err(_) => break,
                Ok(_) => continue,
            };
            if ctl.send(Control::Message(id, msg)).is_err() {
                break;
            }
        }
    };
    tokio::select! {
        _ = writer => {}
        _ = reader => {}
    }
    let _ = ctl.send(Control::Closed(id));
}
