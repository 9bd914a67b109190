//! A three-valued policy algebra: rules, policy operators, per-request and
//! whole-domain semantics, analyses, and an XACML 3.0 subset front end.

pub mod analysis;
pub mod gen;
pub mod kernel;
pub mod lang;
pub mod schema;
pub mod semantics;
pub mod xacml;
