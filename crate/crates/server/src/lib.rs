//! Session server: the wire protocol, the authoritative tick loop and a
//! WebSocket service that lets one cockpit fly one session.

pub mod protocol;
pub mod serve;
pub mod tick_loop;

pub use protocol::{decode, encode, ErrorCode, ProtocolError, WireMessage, PROTOCOL_VERSION};
pub use serve::{ServeError, Server, ServerConfig};
pub use tick_loop::{SessionOutcome, TickLoop};
