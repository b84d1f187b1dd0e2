//! Interactive latent-space optimization sessions over HTTP.
//!
//! Each round the user picks up to `mu` favourite images out of `lambda`.
//! The picks are told to a rank-based optimizer, a decision tree separating
//! picked from unpicked latents is fitted, and every offspring is a Voronoi
//! crossover of the picked latents nudged into the tree's "good" region.

mod error;
pub mod http;
pub mod session;
mod store;

pub use error::{ErrorBody, SessionError};
pub use http::{router, serve, AppState, ServiceConfig};
pub use session::{BatchItem, Event, Mode, Selection, Session, SessionConfig, Status};
pub use store::SessionStore;
