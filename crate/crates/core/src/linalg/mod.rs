pub mod krylov;
pub mod transform;
