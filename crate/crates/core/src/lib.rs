//! VCST-RCP: Voronoi-constrained Steiner trunk planning with relay
//! coordination for multi-robot single-source package delivery.
//!
//! Pipeline: [`geometry`] partitions the workspace and extracts relay
//! candidates, [`transport_graph`] builds the service-cost graph,
//! [`steiner_trunk`] computes the relay trunk and routes package flows, and
//! [`coordination`] compiles the trunk into executable per-robot timelines.
//! [`baselines`] provides the comparison planners, [`simulation_metrics`]
//! validates plans and scores them, and [`scenarios`] generates seeded
//! benchmark instances.

pub mod baselines;
pub mod coordination;
pub mod experiment;
pub mod geometry;
pub mod scenarios;
pub mod simulation_metrics;
pub mod steiner_trunk;
pub mod transport_graph;
