//! Reverse-mode automatic differentiation over dense f64 tensors.
//!
//! Ops build a graph as they run whenever an input requires a gradient.
//! [`backward`] returns first-order gradients; [`grad_as_node`] returns the
//! gradient as a graph node so that it can be differentiated again, which is
//! what a gradient penalty needs. Every op's backward rule is written in
//! terms of other ops, so double backprop works for the whole op set except
//! [`Tensor::frame_conv`] and [`Tensor::resonator_bank`], which report
//! [`AdError::NoSecondOrder`].
//!
//! ```
//! use artgan_autodiff::{backward, Tensor};
//!
//! let x = Tensor::param(vec![0.5], &[1]).unwrap();
//! let g = backward(&x.tanh().sum()).unwrap();
//! assert!((g.get(&x).unwrap().item() - 0.786448).abs() < 1e-6);
//! ```

mod backward;
mod error;
pub mod gradcheck;
mod op;
mod ops;
pub mod suites;
mod tensor;

pub use backward::{backward, grad, grad_as_node, Gradients};
pub use error::{AdError, Result};
pub use ops::conv::ConvGeometry;
pub use ops::signal::{reflect_index, FrameSpec, ResonatorSpec};
pub use tensor::{is_grad_enabled, no_grad, set_grad_enabled, GradModeGuard, Tensor};
