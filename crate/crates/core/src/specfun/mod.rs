//! Special functions needed by the first-passage solvers.

pub mod bessel;
pub mod dd;
pub mod errorfn;
pub mod gamma;
pub mod kummer;
pub mod mittag_leffler;
pub mod parabolic;
pub mod tricomi;

pub use bessel::{bessel_j, hyp0f1};
pub use errorfn::{dawson, erf, erfc, erfcx, erfi};
pub use gamma::{digamma, gamma, lgamma, rgamma};
pub use kummer::{kummer_m, kummer_m_da, HypergeomResult, Method};
pub use mittag_leffler::mittag_leffler;
pub use parabolic::{parabolic_d, parabolic_d_dnu, parabolic_d_scaled, parabolic_d_scaled_dnu};
pub use tricomi::{tricomi_u, tricomi_u_da};
