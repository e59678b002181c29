//! Hofstadter butterfly on a zigzag chain of frequency-modulated qubits.
//!
//! The linear algebra, models, drive schedules, dynamics and spectroscopy are
//! generic over the scalar (`f32` or `f64`); [`sweep`] works in `f64`. The
//! aliases below fix the scalar to `f64`.

pub mod numerics;
pub mod model;
pub mod modulation;
pub mod dynamics;
pub mod spectroscopy;
pub mod sweep;

pub type ComplexVectorF64 = numerics::ComplexVector<f64>;
pub type HermitianMatrixF64 = numerics::HermitianMatrix<f64>;
pub type SparseHermitianF64 = numerics::SparseHermitian<f64>;
pub type EigenDecompositionF64 = numerics::EigenDecomposition<f64>;
pub type PowerSpectrumF64 = numerics::PowerSpectrum<f64>;

pub type LatticeSpecF64 = model::LatticeSpec<f64>;
pub type BandProblemF64 = model::BandProblem<f64>;
pub type ExactRowF64 = model::ExactRow<f64>;

pub type DeviceSpecF64 = modulation::DeviceSpec<f64>;
pub type FrequencyPlanF64 = modulation::FrequencyPlan<f64>;
pub type DriveScheduleF64 = modulation::DriveSchedule<f64>;
pub type EffectiveCouplingsF64 = modulation::EffectiveCouplings<f64>;
pub type InteractionHamiltonianF64 = modulation::InteractionHamiltonian<f64>;

pub type QuantumStateF64 = dynamics::QuantumState<f64>;
pub type DensityMatrixF64 = dynamics::DensityMatrix<f64>;
pub type NoiseSpecF64 = dynamics::NoiseSpec<f64>;
pub type TimeGridF64 = dynamics::TimeGrid<f64>;
pub type TrajectoryAverageF64 = dynamics::TrajectoryAverage<f64>;

pub type ExpectationRecordF64 = spectroscopy::ExpectationRecord<f64>;
pub type SpectrumRowF64 = spectroscopy::SpectrumRow<f64>;
pub type PeakF64 = spectroscopy::Peak<f64>;
pub type PeakListF64 = spectroscopy::PeakList<f64>;
