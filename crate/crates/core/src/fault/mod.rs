//! Fault-tolerant pipeline: the top-l and telescoped relaxations with lazy
//! subset constraints, facility splitting, bundle creation, dangerous-client
//! filtering, the laminar ball family, and marginal-preserving stochastic
//! rounding over an integral two-family polytope.
