//! C ABI surface for the sivsim library.
