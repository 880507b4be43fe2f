//! Communication game: the first player sees a secret drawn from
//! `{0..2^L-1}`, sends `L` binary public signals, and the second player
//! then guesses the secret. Reward is 1 on a correct guess, 0 otherwise.

use crate::error::BuildError;

use super::{ActionCode, Deal, GameSpec, PlayerId};

const SIGNAL_CODES: u16 = 2;

/// Communication game of length `L`. See [`comm_game`].
#[derive(Debug, Clone)]
pub struct CommGame {
    length: u32,
    secrets: u16,
}

/// Build the communication game of length `length`, with secrets in
/// `{0..2^length - 1}`. Guarded to `1..=12`; anything larger cannot be
/// materialized at desk scale anyway.
pub fn comm_game(length: u32) -> Result<CommGame, BuildError> {
    if !(1..=12).contains(&length) {
        return Err(BuildError::InvalidParameter(format!(
            "comm game length must be in 1..=12, got {length}"
        )));
    }
    Ok(CommGame { length, secrets: 1 << length })
}

impl CommGame {
    pub fn length(&self) -> u32 {
        self.length
    }

    fn guess_code(&self, guess: u16) -> ActionCode {
        SIGNAL_CODES + guess
    }

    fn signal_prefix(history: &[ActionCode]) -> String {
        history.iter().map(|c| c.to_string()).collect()
    }
}

impl GameSpec for CommGame {
    fn name(&self) -> String {
        format!("comm-L{}", self.length)
    }

    fn deals(&self) -> Vec<(Deal, f64)> {
        let p = 1.0 / f64::from(self.secrets);
        (0..self.secrets).map(|s| (vec![s, 0], p)).collect()
    }

    fn actor(&self, history: &[ActionCode]) -> PlayerId {
        if history.len() < self.length as usize {
            0
        } else {
            1
        }
    }

    fn legal_actions(&self, history: &[ActionCode]) -> Vec<ActionCode> {
        if history.len() < self.length as usize {
            vec![0, 1]
        } else {
            (0..self.secrets).map(|g| self.guess_code(g)).collect()
        }
    }

    fn is_terminal(&self, history: &[ActionCode]) -> bool {
        history.len() == self.length as usize + 1
    }

    fn reward(&self, deal: &Deal, history: &[ActionCode]) -> f64 {
        let guess = history[self.length as usize] - SIGNAL_CODES;
        if deal[0] == guess {
            1.0
        } else {
            0.0
        }
    }

    fn infoset_key(&self, player: PlayerId, deal: &Deal, history: &[ActionCode]) -> String {
        let signals = Self::signal_prefix(&history[..history.len().min(self.length as usize)]);
        if player == 0 {
            format!("P1|s{}|{}", deal[0], signals)
        } else {
            format!("P2|{signals}")
        }
    }

    fn action_label(&self, code: ActionCode) -> String {
        if code < SIGNAL_CODES {
            code.to_string()
        } else {
            format!("g{}", code - SIGNAL_CODES)
        }
    }
}
