//! Ground states and reflection-symmetric saddles of the Choquard equation
//! `-Δu + u = (I_α * F(u)) f(u)` on truncated grids in two and three
//! dimensions.
//!
//! The modules follow the data flow: [`coxeter`] builds finite reflection
//! groups, [`field`] holds grids, spectral operators and group actions,
//! [`riesz`] convolves with the Riesz kernel, [`functionals`] evaluates the
//! energy and its scaling, [`solver`] finds critical points, and
//! [`analysis`] measures them. [`cli`] is the command-line front end.

pub mod coxeter;
pub mod field;
pub mod riesz;
pub mod functionals;
pub mod analysis;
pub mod solver;
pub mod cli;

// Keeps the guide's snippets compiling and passing.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/grids-and-fields.md")]
    mod grids_and_fields {}
    #[doc = include_str!("../../../book/src/reflection-groups.md")]
    mod reflection_groups {}
    #[doc = include_str!("../../../book/src/riesz-potential.md")]
    mod riesz_potential {}
    #[doc = include_str!("../../../book/src/energy-and-scaling.md")]
    mod energy_and_scaling {}
    #[doc = include_str!("../../../book/src/solving.md")]
    mod solving {}
    #[doc = include_str!("../../../book/src/diagnostics.md")]
    mod diagnostics {}
    #[doc = include_str!("../../../book/src/command-line.md")]
    mod command_line {}
}
