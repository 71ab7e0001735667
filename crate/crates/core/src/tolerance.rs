//! Discretization tolerances.
//!
//! Continuum comparisons on a mesh of spacing `h` use `tol = C·h` with a
//! constant calibrated on the unit square with the Euclidean metric.

use crate::mesh::MeshGraph;

/// Calibrated constant `C` in `tol = C·h`.
pub const CALIBRATED_C: f64 = 0.1;

/// Uniqueness-mask threshold as a multiple of the discrete tolerance.
pub const UNIQUENESS_FACTOR: f64 = 3.0;

/// Floor below which differences count as floating-point roundoff.
pub const ROUNDOFF: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tolerance {
    pub h: f64,
    pub c: f64,
}

impl Tolerance {
    pub fn for_spacing(h: f64) -> Self {
        Self { h, c: CALIBRATED_C }
    }

    pub fn for_mesh(mesh: &MeshGraph) -> Self {
        Self::for_spacing(mesh.h())
    }

    /// `C·h`, never below [`ROUNDOFF`].
    pub fn discrete(&self) -> f64 {
        (self.c * self.h).max(ROUNDOFF)
    }

    /// Default `ε` of the uniqueness mask.
    pub fn uniqueness_eps(&self) -> f64 {
        UNIQUENESS_FACTOR * self.discrete()
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            h: self.h,
            c: self.c * factor,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_in_h() {
        let t = Tolerance::for_spacing(1.0 / 64.0);
        assert_eq!(t.discrete(), CALIBRATED_C / 64.0);
        assert_eq!(t.uniqueness_eps(), 3.0 * t.discrete());
        assert_eq!(Tolerance::for_spacing(0.0).discrete(), ROUNDOFF);
    }
}
