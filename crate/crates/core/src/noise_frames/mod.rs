//! Noise vector fields `a_1 … a_N` whose squares sum to twice the metric,
//! so that `½ Σ a_i(a_i ψ) = Δψ − ½ Σ ā_i(ψ)`.

pub mod bump;
pub mod frame;
pub mod ops;

pub use frame::{gram_schmidt_frame, gram_schmidt_t, squared_partition_check, FrameField, FrameKind, NoiseFrame};
pub use ops::{bar_a_apply, ellipticity_residual, lambda_op, section_defect};
