//! Stabilizer circuits, their general forms, and exact equivalence checks.

pub mod circuit;
pub mod clifford;
pub mod codedeform;
pub mod f2linalg;
pub mod genform;
pub mod logical;
pub mod oracle;
pub mod pauli;
pub mod sim;
pub mod verify;
