//! Scenario seeding for closed-loop driving tests.
//!
//! Initial scenes are chosen by adaptive random selection, refined with Stein
//! variational gradient descent against an online-trained hazard model, and
//! executed in a small kinematic simulator where a gradient-driven tester
//! steers the other road users. Campaign metrics score how often and how
//! diversely the ego fails.

pub mod arsg;
pub mod campaign;
pub mod error;
pub mod geom;
pub mod hazard;
pub mod map;
pub mod metrics;
pub mod scenario;
pub mod sim;
pub mod svgd;
pub mod trace;

pub use error::{Error, Result};
pub use geom::Vec2;
pub use hazard::HazardModel;
pub use map::{BuiltinMap, RoadNetwork};
pub use scenario::Chromosome;
