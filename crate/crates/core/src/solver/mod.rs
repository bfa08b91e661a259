//! Full-wave solvers: the resonator volume-integral operator, the complex
//! pole search, the dipole oracle on the same operator (dense LU or FFT-accelerated
//! GMRES), and the analytic Mie cylinder.

pub mod container;
pub mod fft;
pub mod mie;
pub mod mode;
pub mod oracle;
pub mod pole;
pub mod radiator;
pub mod vie;
