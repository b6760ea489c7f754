//! Certification tools for finite-speed hidden-influence explanations of
//! quantum correlations.
//!
//! The crate builds the four-party quantum behavior violating the
//! inequality `S <= 7`, proves the bound over no-signalling correlations
//! with local B-C conditionals by exact linear programming, and simulates
//! how direct-cause models turn into signalling.

pub mod behavior;
pub mod ch;
pub mod inequality;
pub mod linalg;
pub mod prob;
pub mod quantum;

pub use behavior::{Behavior, BehaviorError, Fixed, Marginal, SignallingEntry, SignallingReport};
pub use ch::{ch_facets, ch_value, is_local_2222, ChFacet, LocalityVerdict};
pub use inequality::{CorrelatorTerm, InequalityError, InequalityS};
pub use linalg::ComplexMatrix;
pub use prob::Prob;
pub use quantum::{build_paper_model, Observable, QuantumError, QuantumModel, StateVector};
pub mod certifier;
pub mod lp;
pub mod io;
pub mod spacetime;
pub mod vcausal;

pub use certifier::{maximize_s, CertifierError};
pub use io::ParseError;
pub use lp::{Certificate, LinearProgram};
pub use spacetime::{Event, FrameBoost, SpacetimeError, VConeConfig};
pub use vcausal::{behavior_of_model, dc_behavior_fig3, ghz_protocol, Message, ProtocolResult, VCausalError, VCausalModel};
pub use num_rational;
