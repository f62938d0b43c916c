pub(crate) use alloc::{format, string::String, vec, vec::Vec};

// Float methods (sqrt, exp, ln, ...) come from libm when std is unavailable.
#[cfg(not(feature = "std"))]
pub(crate) use num_traits::Float;
