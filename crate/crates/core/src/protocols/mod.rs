//! Defect transfer, Y-junction braiding and edge-state memory experiments.

mod braiding;
mod memory;
mod transfer;

pub use braiding::{
    align_block, braid_probe, extract_gate, run_braid_ensemble, run_braiding, BraidProtocol, DefectBasis, GateKind,
    GateReport, JunctionDrive, SectorReport,
};
pub use memory::*;
pub use transfer::{
    run_transfer, run_transfer_ensemble, Channel, ChannelReport, DefectSide, TransferDrive, TransferOrder,
    TransferProtocol, TransferReport, ADIABATIC_MARGIN, GAP_SAMPLES,
};
