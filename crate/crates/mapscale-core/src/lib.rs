//! Exact finite-size laws for block-weighted planar maps at their dual
//! critical point, the universal scaling limits they converge to, and the
//! dual Liouville identities that mirror them in the continuum.

pub mod distance;
pub mod dualmeasure;
pub mod field;
pub mod laws;
pub mod models;
pub mod multifractal;
pub mod quadrature;
pub mod scaled;
pub mod scaling;
pub mod series;
pub mod special;
