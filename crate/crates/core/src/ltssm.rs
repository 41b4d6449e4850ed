//! A reduced link training and status state machine. Frames cross the
//! physical layer only in L0; everything else is a form of down time.

/// Training states plus the operational and disabled states.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Ltssm {
    Detect,
    Polling,
    Config,
    L0,
    RecoveryRetrain,
    Disabled,
}

impl Ltssm {
    pub fn is_training(self) -> bool {
        matches!(self, Ltssm::Detect | Ltssm::Polling | Ltssm::Config)
    }

    /// Whether frames may move across the physical layer.
    pub fn link_up(self) -> bool {
        self == Ltssm::L0
    }

    pub fn name(self) -> &'static str {
        match self {
            Ltssm::Detect => "Detect",
            Ltssm::Polling => "Polling",
            Ltssm::Config => "Config",
            Ltssm::L0 => "L0",
            Ltssm::RecoveryRetrain => "RecoveryRetrain",
            Ltssm::Disabled => "Disabled",
        }
    }
}

impl std::fmt::Display for Ltssm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Inputs that move the state machine.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LinkEvent {
    TrainOk,
    TrainFail,
    FatalSeen,
    RetrainDone,
}

/// Link state as carried by the simulator and shown in traces.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LinkState {
    pub ltssm: Ltssm,
    pub cycles_in_state: u64,
    pub retrain_count: u64,
}

impl LinkState {
    pub fn new() -> LinkState {
        LinkState { ltssm: Ltssm::Detect, cycles_in_state: 0, retrain_count: 0 }
    }
}

impl Default for LinkState {
    fn default() -> LinkState {
        LinkState::new()
    }
}

/// Pure transition function. TrainOk walks Detect to Polling to Config to
/// L0; TrainFail anywhere outside Disabled restarts training at Detect;
/// FatalSeen in L0 enters RecoveryRetrain; RetrainDone leaves it. The
/// caller raises any associated error events and drives dwell times.
pub fn ltssm_step(state: LinkState, event: LinkEvent) -> LinkState {
    let mut retrain_count = state.retrain_count;
    let next = match (state.ltssm, event) {
        (Ltssm::Detect, LinkEvent::TrainOk) => Ltssm::Polling,
        (Ltssm::Polling, LinkEvent::TrainOk) => Ltssm::Config,
        (Ltssm::Config, LinkEvent::TrainOk) => Ltssm::L0,
        (Ltssm::Disabled, _) => Ltssm::Disabled,
        (_, LinkEvent::TrainFail) => {
            retrain_count += 1;
            Ltssm::Detect
        }
        (Ltssm::L0, LinkEvent::FatalSeen) => {
            retrain_count += 1;
            Ltssm::RecoveryRetrain
        }
        (Ltssm::RecoveryRetrain, LinkEvent::RetrainDone) => Ltssm::L0,
        (current, _) => current,
    };
    LinkState {
        ltssm: next,
        cycles_in_state: if next == state.ltssm { state.cycles_in_state } else { 0 },
        retrain_count,
    }
}
