//! SLSP: a language server protocol for specification languages.
//!
//! The crate has three layers:
//!
//! * a protocol SDK ([`base_protocol`], [`slsp_types`]) implementing the
//!   header-framed JSON-RPC transport and the typed SLSP method schemas;
//! * a reference server for the MiniSpec specification language
//!   ([`minispec`], [`pog`], [`ct`], [`translate`], [`proof`], [`server`])
//!   covering proof obligations, combinatorial testing, translation and
//!   interactive theorem proving;
//! * a scriptable client and conformance checker ([`client`]).

pub mod base_protocol;
pub mod client;
pub mod ct;
pub mod minispec;
pub mod pog;
pub mod proof;
pub mod server;
pub mod slsp_types;
pub mod translate;
