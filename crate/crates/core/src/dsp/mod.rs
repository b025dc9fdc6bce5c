//! Signal-processing building blocks shared by the noise generators, the
//! time-frequency representation and the auditory model.

pub mod fft;
pub mod filters;
pub mod gammatone;
pub mod stft;

pub use rustfft::num_complex::Complex64;
