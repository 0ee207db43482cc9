//! Fixtures shared by the benchmarks.

use phfem::{CausalitySpec, Corner, SegmentSpec};

/// Single p-input at the bottom-left corner, q-inputs elsewhere.
pub fn corner() -> CausalitySpec {
    CausalitySpec { p_segments: vec![SegmentSpec::Corner(Corner::BottomLeft)], q_segments: None }
}

/// Grid sizes swept by the assembly benchmarks.
pub const SIZES: [usize; 3] = [10, 20, 40];
