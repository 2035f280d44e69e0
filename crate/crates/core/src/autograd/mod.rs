//! Reverse-mode differentiation over mixed classical/quantum graphs.
//! Circuit nodes get their vector-Jacobian products from the adjoint method.

mod adjoint;
mod tape;

pub use adjoint::{adjoint_expval_grad, AdjointOutput};
pub use tape::{Gradients, NodeId, Tape};

pub(crate) use tape::sigmoid;
