pub mod asymptotics;
pub mod extended;
pub mod flow;
pub mod heat;
pub mod verify;
pub mod wim;
