//! Cycle-accurate model of the nibble-serial datapath, protected and not.

mod fsm;
mod log;
mod registers;
mod sim;

pub use fsm::{
    dwell_cycles, edges, fsm_next, Counters, Design, FsmState, BCOUNT_END, RCOUNT_END, SCOUNT_END,
};
pub use log::{CycleEntry, Transition, TransitionLog};
pub use registers::{total_register_bits, RegisterId, REGISTER_COUNT};
pub use sim::{
    run_protected, run_unprotected, sbox_wiring, CycleInfo, RcSharing, RunResult, SimError,
    Simulator, Wire,
};
