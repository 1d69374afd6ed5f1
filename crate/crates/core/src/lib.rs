//! Joint optimization of cooperative-relaying time, IoT offloading and
//! local computation, and MEC processor allocation for an IoT network that
//! relays a licensed link in exchange for spectrum access.
//!
//! The crate is `no_std` (it needs `alloc`) and free of I/O. The `coopmec`
//! crate adds configuration files, report formats and the command line.

#![no_std]

extern crate alloc;

mod math;
pub(crate) mod serde_float;

pub mod baseline;
pub mod dual;
pub mod error;
pub mod lp;
pub mod model;
pub mod montecarlo;
pub mod oracle;
pub mod recovery;

pub use baseline::solve_equal_allocation;
pub use dual::{Allocation, DualPoint, DualSettings};
pub use error::{Error, Result};
pub use lp::{solve_lp, LinearProgram, LpSolution, LpStatus};
pub use model::{ChannelGains, Geometry, Instance, Node, PrimalSolution, SystemParams};
pub use recovery::{solve_instance, Feasibility, SolveReport, SolveSettings};
