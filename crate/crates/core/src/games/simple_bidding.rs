//! Simple bidding game: each player is dealt a number in `{0..N-1}`,
//! players alternately bid strictly increasing powers of two or pass, the
//! first pass ends the auction, and the contract (last bid `v`) pays `v`
//! when the two numbers sum to at least `v` and 0 otherwise.

use crate::error::BuildError;

use super::{ActionCode, Deal, GameSpec, PlayerId};

/// Simple bidding game of size `N`. See [`simple_bidding`].
#[derive(Debug, Clone)]
pub struct SimpleBidding {
    n: u16,
    /// Number of bid codes; bid code `c` (1-based) has value `2^(c-1)`.
    /// The top bid is `2N`.
    bids: u16,
}

/// Build the simple bidding game of size `n` (a power of two in
/// `{2,4,8,16,32}`). Bids range over `{1, 2, ..., 2n}` in powers of two.
pub fn simple_bidding(n: u16) -> Result<SimpleBidding, BuildError> {
    if !matches!(n, 2 | 4 | 8 | 16 | 32) {
        return Err(BuildError::InvalidParameter(format!(
            "simple bidding size must be a power of two in 2..=32, got {n}"
        )));
    }
    let bids = n.trailing_zeros() as u16 + 2;
    Ok(SimpleBidding { n, bids })
}

impl SimpleBidding {
    pub fn size(&self) -> u16 {
        self.n
    }

    pub fn bid_count(&self) -> u16 {
        self.bids
    }

    /// Contract value of a bid code.
    pub fn bid_value(code: ActionCode) -> u32 {
        1 << (code - 1)
    }

    fn last_bid(history: &[ActionCode]) -> Option<ActionCode> {
        history.iter().rev().find(|&&c| c != 0).copied()
    }
}

impl GameSpec for SimpleBidding {
    fn name(&self) -> String {
        format!("simple-bidding-N{}", self.n)
    }

    fn deals(&self) -> Vec<(Deal, f64)> {
        let p = 1.0 / f64::from(self.n) / f64::from(self.n);
        let mut out = Vec::with_capacity(usize::from(self.n) * usize::from(self.n));
        for s1 in 0..self.n {
            for s2 in 0..self.n {
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
        history.last() == Some(&0)
    }

    fn reward(&self, deal: &Deal, history: &[ActionCode]) -> f64 {
        match Self::last_bid(history) {
            None => 0.0,
            Some(bid) => {
                let value = Self::bid_value(bid);
                if u32::from(deal[0]) + u32::from(deal[1]) >= value {
                    f64::from(value)
                } else {
                    0.0
                }
            }
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
            Self::bid_value(code).to_string()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn top_bid_is_twice_n() {
        for n in [2u16, 4, 8, 16, 32] {
            let g = simple_bidding(n).unwrap();
            assert_eq!(SimpleBidding::bid_value(g.bids), u32::from(n) * 2);
        }
    }

    #[test]
    fn reward_matches_definition() {
        let g = simple_bidding(4).unwrap();
        // s=(3,3), history (1, 2, Pass): contract 2, 6 >= 2 -> reward 2
        assert_eq!(g.reward(&vec![3, 3], &[1, 2, 0]), 2.0);
        // s=(0,0), history (1, Pass): contract 1, 0 < 1 -> 0
        assert_eq!(g.reward(&vec![0, 0], &[1, 0]), 0.0);
        // immediate pass: no contract
        assert_eq!(g.reward(&vec![3, 3], &[0]), 0.0);
    }

    #[test]
    fn bids_strictly_increase() {
        let g = simple_bidding(8).unwrap();
        let legal = g.legal_actions(&[2]);
        assert_eq!(legal, vec![0, 3, 4, 5]);
        assert_eq!(g.legal_actions(&[5]), vec![0]);
    }

    #[test]
    fn size_guard() {
        assert!(simple_bidding(3).is_err());
        assert!(simple_bidding(64).is_err());
    }
}
