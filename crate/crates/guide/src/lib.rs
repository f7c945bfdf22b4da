//! The mdbook chapters under `book/src`, included as rustdoc so that
//! `cargo test --doc` runs every snippet in the guide.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}
#[doc = include_str!("../../../book/src/channel.md")]
pub mod channel {}
#[doc = include_str!("../../../book/src/distribution.md")]
pub mod distribution {}
#[doc = include_str!("../../../book/src/asymptotics.md")]
pub mod asymptotics {}
#[doc = include_str!("../../../book/src/outage.md")]
pub mod outage {}
#[doc = include_str!("../../../book/src/monte_carlo.md")]
pub mod monte_carlo {}
#[doc = include_str!("../../../book/src/scenarios.md")]
pub mod scenarios {}
#[doc = include_str!("../../../README.md")]
pub mod readme {}
