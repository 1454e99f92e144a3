//! AdamW with decoupled weight decay and s-step weight prediction.
//!
//! The training scheme evaluates the forward and backward pass at weights
//! extrapolated `s` AdamW updates into the future, then applies the resulting
//! gradient to the cached current weights:
//!
//! ```text
//! cached    = θ_t
//! predicted = θ_t − s·γ·m̂_t / (√v̂_t + ε)
//! g         = ∇f(predicted)
//! θ_{t+1}   = (1 − γλ)·cached − γ·m̂_{t+1} / (√v̂_{t+1} + ε)
//! ```
//!
//! The numeric core ([`numerics`], [`optim`], [`models`], [`controller`]) is
//! generic over [`Scalar`] (`f32` or `f64`). The experiment [`harness`] and
//! the self-check suite in [`verify`] run in `f64`; the aliases below name the
//! concrete types they use.

pub mod controller;
pub mod data;
mod error;
pub mod harness;
pub mod models;
pub mod numerics;
pub mod optim;
pub mod rng;
mod scalar;
pub mod verify;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type ParamVector = numerics::ParamVec<f64>;
pub type GradVector = numerics::GradVec<f64>;
pub type AdamWConfig = optim::AdamWConfig<f64>;
pub type AdamWState = optim::AdamWState<f64>;
pub type Dataset = data::Dataset<f64>;
pub type Batch = data::Batch<f64>;

pub type ParamVectorF32 = numerics::ParamVec<f32>;
pub type AdamWConfigF32 = optim::AdamWConfig<f32>;
pub type AdamWStateF32 = optim::AdamWState<f32>;
