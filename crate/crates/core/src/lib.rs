//! Semi-supervised video rain removal.
//!
//! A rainy clip is modelled as background + rain + Gaussian residual. The
//! background comes from a 3-D convolutional derainer, the rain from a
//! dynamical generator (a recurrent transition over a low-dimensional state and
//! a convolutional emission per frame). Training alternates Langevin sampling
//! of the generator latents with gradient steps on both networks.

pub mod inference;
pub mod nn;
pub mod priors;
pub mod training;
pub mod video;
