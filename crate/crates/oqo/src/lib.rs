pub mod error;
pub mod fock;
pub mod measurement;
pub mod phase;
pub mod qp;
pub mod special;
pub mod verify;
