//! Two-suit mini-bridge: each player is dealt a number in `{0..N}` and the
//! players bid over an ordered ladder `1H < 1S < 2H < 2S < ... < NH < NS`.
//! A spade contract at level `k` makes when the numbers sum to at least
//! `N+k`; a heart contract at level `k` makes when they sum to at most
//! `N-k`. Made contracts pay `2^(k-1)`, failed ones -1, and a pass-out 0.
//!
//! The opening pass does not end the game: after `P1: Pass` the second
//! player may still open, and only `(Pass, Pass)` is a pass-out. Any pass
//! after a bid ends the auction immediately.

use crate::error::BuildError;

use super::{ActionCode, Deal, GameSpec, PlayerId};

/// Two-suit mini-bridge of size `N`. See [`two_suit_mini_bridge`].
#[derive(Debug, Clone)]
pub struct TwoSuitMiniBridge {
    n: u16,
    /// Bid codes run 1..=2N; odd codes are hearts, even codes spades,
    /// level of code `c` is `(c+1)/2`.
    bids: u16,
}

/// Build the two-suit mini-bridge of size `n` (in `2..=6`). Deals are
/// uniform over `{0..n}` per player.
pub fn two_suit_mini_bridge(n: u16) -> Result<TwoSuitMiniBridge, BuildError> {
    if !(2..=6).contains(&n) {
        return Err(BuildError::InvalidParameter(format!(
            "mini-bridge size must be in 2..=6, got {n}"
        )));
    }
    Ok(TwoSuitMiniBridge { n, bids: 2 * n })
}

impl TwoSuitMiniBridge {
    pub fn size(&self) -> u16 {
        self.n
    }

    pub fn level(code: ActionCode) -> u16 {
        (code + 1) / 2
    }

    pub fn is_hearts(code: ActionCode) -> bool {
        code % 2 == 1
    }

    fn last_bid(history: &[ActionCode]) -> Option<ActionCode> {
        history.iter().rev().find(|&&c| c != 0).copied()
    }
}

impl GameSpec for TwoSuitMiniBridge {
    fn name(&self) -> String {
        format!("mini-bridge-N{}", self.n)
    }

    fn deals(&self) -> Vec<(Deal, f64)> {
        let vals = self.n + 1;
        let p = 1.0 / f64::from(vals) / f64::from(vals);
        let mut out = Vec::with_capacity(usize::from(vals) * usize::from(vals));
        for s1 in 0..vals {
            for s2 in 0..vals {
                out.push((vec![s1, s2], p));
            }
        }
        out
    }

    fn actor(&self, history: &[ActionCode]) -> PlayerId {
        (history.len() % 2) as PlayerId
    }

    fn legal_actions(&self, history: &[ActionCode]) -> Vec<ActionCode> {
        let from = Self::last_bid(history).map_or(1, |b| b + 1);
        let mut acts = Vec::with_capacity((usize::from(self.bids) + 2).saturating_sub(usize::from(from)));
        acts.push(0);
        acts.extend(from..=self.bids);
        acts
    }

    fn is_terminal(&self, history: &[ActionCode]) -> bool {
        match history {
            [0] => false, // opening pass keeps the game alive
            [.., 0] => true,
            _ => false,
        }
    }

    fn reward(&self, deal: &Deal, history: &[ActionCode]) -> f64 {
        let Some(bid) = Self::last_bid(history) else {
            return 0.0; // pass-out
        };
        let k = Self::level(bid);
        let sum = deal[0] + deal[1];
        let made = if Self::is_hearts(bid) {
            sum + k <= self.n
        } else {
            sum >= self.n + k
        };
        if made {
            f64::from(1u32 << (k - 1))
        } else {
            -1.0
        }
    }

    fn infoset_key(&self, player: PlayerId, deal: &Deal, history: &[ActionCode]) -> String {
        format!(
            "P{}|s{}|{}",
            player + 1,
            deal[usize::from(player)],
            super::history_string(self, history)
        )
    }

    fn action_label(&self, code: ActionCode) -> String {
        if code == 0 {
            "P".to_string()
        } else {
            format!("{}{}", Self::level(code), if Self::is_hearts(code) { "H" } else { "S" })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reward_cases() {
        let g = two_suit_mini_bridge(4).unwrap();
        let code_4h = 7;
        let code_4s = 8;
        // s=(0,0), final contract 4H -> make, reward 8
        assert_eq!(g.reward(&vec![0, 0], &[code_4h, 0]), 8.0);
        // s=(4,4), final contract 4S -> make (8 >= 8), reward 8
        assert_eq!(g.reward(&vec![4, 4], &[code_4s, 0]), 8.0);
        // s=(2,2), 1S (code 2): 4 < 5 -> fail
        assert_eq!(g.reward(&vec![2, 2], &[2, 0]), -1.0);
        // pass-out
        assert_eq!(g.reward(&vec![2, 2], &[0, 0]), 0.0);
    }

    #[test]
    fn first_round_pass_rules() {
        let g = two_suit_mini_bridge(3).unwrap();
        assert!(!g.is_terminal(&[0]));
        assert!(g.is_terminal(&[0, 0]));
        assert!(g.is_terminal(&[1, 0]));
        assert!(g.is_terminal(&[0, 2, 0]));
        assert!(!g.is_terminal(&[0, 2]));
    }

    #[test]
    fn reward_depends_on_sum_only() {
        let g = two_suit_mini_bridge(4).unwrap();
        for h in [vec![1, 0], vec![2, 3, 0], vec![0, 5, 0]] {
            for sum in 0..=8u16 {
                let mut vals = Vec::new();
                for s1 in 0..=4u16 {
                    if sum >= s1 && sum - s1 <= 4 {
                        vals.push(g.reward(&vec![s1, sum - s1], &h));
                    }
                }
                assert!(vals.windows(2).all(|w| w[0] == w[1]), "history {h:?} sum {sum}");
            }
        }
    }

    #[test]
    fn size_guard() {
        assert!(two_suit_mini_bridge(1).is_err());
        assert!(two_suit_mini_bridge(7).is_err());
    }
}
