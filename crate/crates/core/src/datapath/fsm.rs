use std::fmt;

use serde::{Deserialize, Serialize};

/// Which datapath is simulated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Design {
    /// Two-share threshold implementation with the three-cycle shared Sbox.
    Protected,
    /// Single-share nibble-serial baseline with a one-cycle Sbox.
    Unprotected,
}

impl Design {
    pub fn name(self) -> &'static str {
        match self {
            Design::Protected => "led-ti",
            Design::Unprotected => "led",
        }
    }

    pub fn shares(self) -> usize {
        match self {
            Design::Protected => 2,
            Design::Unprotected => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FsmState {
    Idle,
    AddShare,
    Init,
    AddConstant,
    SboxCal,
    SboxShift,
    ShiftRow,
    MixCol,
    NextRound,
    AddKey,
    Back,
}

impl FsmState {
    pub const ALL: [FsmState; 11] = [
        FsmState::Idle,
        FsmState::AddShare,
        FsmState::Init,
        FsmState::AddConstant,
        FsmState::SboxCal,
        FsmState::SboxShift,
        FsmState::ShiftRow,
        FsmState::MixCol,
        FsmState::NextRound,
        FsmState::AddKey,
        FsmState::Back,
    ];

    pub fn label(self) -> &'static str {
        match self {
            FsmState::Idle => "IDLE",
            FsmState::AddShare => "ADDSHARE",
            FsmState::Init => "INIT",
            FsmState::AddConstant => "ADDCONSTANT",
            FsmState::SboxCal => "SBOX_CAL",
            FsmState::SboxShift => "SBOX_SHIFT",
            FsmState::ShiftRow => "SHIFTROW",
            FsmState::MixCol => "MIXCOL",
            FsmState::NextRound => "NEXTROUND",
            FsmState::AddKey => "ADDKEY",
            FsmState::Back => "BACK",
        }
    }
}

impl fmt::Display for FsmState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Loop counters. `bcount` counts nibbles through the Sbox in the current
/// round, `rcount` rounds in the current step, `scount` completed steps.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize)]
pub struct Counters {
    pub bcount: u8,
    pub rcount: u8,
    pub scount: u8,
}

pub const BCOUNT_END: u8 = 16;
pub const RCOUNT_END: u8 = 4;
pub const SCOUNT_END: u8 = 12;

impl Counters {
    /// Update applied in the last cycle of a visit to `state`, before the
    /// successor is chosen.
    pub fn on_exit(mut self, state: FsmState) -> Self {
        match state {
            FsmState::SboxShift => self.bcount += 1,
            FsmState::ShiftRow => self.bcount = 0,
            FsmState::MixCol => self.rcount += 1,
            FsmState::NextRound if self.rcount == RCOUNT_END => self.scount += 1,
            FsmState::AddKey => self.rcount = 0,
            _ => {}
        }
        self
    }
}

/// Cycles spent in one visit to `state`.
pub fn dwell_cycles(design: Design, state: FsmState) -> u32 {
    match state {
        FsmState::Idle => 0,
        FsmState::AddShare | FsmState::Init | FsmState::AddKey | FsmState::Back => 16,
        FsmState::MixCol => 16,
        FsmState::SboxCal => match design {
            Design::Protected => 3,
            Design::Unprotected => 1,
        },
        FsmState::ShiftRow => 3,
        FsmState::AddConstant | FsmState::SboxShift | FsmState::NextRound => 1,
    }
}

/// Successor of `state` once its visit completes, given the counters after
/// the visit's exit update.
pub fn fsm_next(design: Design, state: FsmState, c: Counters) -> FsmState {
    use FsmState::*;
    match state {
        Idle => match design {
            Design::Protected => AddShare,
            Design::Unprotected => Init,
        },
        AddShare => Init,
        Init => AddConstant,
        AddConstant => SboxCal,
        SboxCal => SboxShift,
        SboxShift if c.bcount == BCOUNT_END => ShiftRow,
        SboxShift => SboxCal,
        ShiftRow => MixCol,
        MixCol => NextRound,
        NextRound if c.rcount == RCOUNT_END => AddKey,
        NextRound => AddConstant,
        AddKey if c.scount == SCOUNT_END => match design {
            Design::Protected => Back,
            Design::Unprotected => Idle,
        },
        AddKey => AddConstant,
        Back => Idle,
    }
}

/// Every edge of the state graph for `design`.
pub fn edges(design: Design) -> Vec<(FsmState, FsmState)> {
    use FsmState::*;
    let mut e = vec![
        (Init, AddConstant),
        (AddConstant, SboxCal),
        (SboxCal, SboxShift),
        (SboxShift, SboxCal),
        (SboxShift, ShiftRow),
        (ShiftRow, MixCol),
        (MixCol, NextRound),
        (NextRound, AddConstant),
        (NextRound, AddKey),
        (AddKey, AddConstant),
    ];
    match design {
        Design::Protected => e.extend([
            (Idle, AddShare),
            (AddShare, Init),
            (AddKey, Back),
            (Back, Idle),
        ]),
        Design::Unprotected => e.extend([(Idle, Init), (AddKey, Idle)]),
    }
    e
}
