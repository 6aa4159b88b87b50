//! Lattice bath spectrum, memory kernels and the limiting friction matrix.

mod coupling;
mod decay;
mod friction;
mod lattice;
mod limit;
mod memory;

pub use coupling::{BetaFunction, BetaGrid, CouplingCoefficients, CouplingSpec, ExampleBeta, ForceTable};
pub use decay::{kernel_decay_diagnostic, DecayDiagnostic};
pub(crate) use friction::check_symmetric_psd;
pub use friction::{friction_from_beta, friction_from_forces, FrictionMatrix, FrictionProvenance};
pub use lattice::{lattice_frequencies, BathSpectrum, LatticeBathSpec};
pub use limit::{
    angular_profile, kernel_limit, kernel_limit_quadrature, LimitKernel, RadialProfileKernel, LIMIT_TOLERANCE,
};
pub use memory::{kernel_finite, sinc, FiniteKernel, KernelMode, MemoryKernel, SincKernel, ZeroKernel};
