//! Postseason qualification: who gets in, how the qualifiers overlap, and
//! which bracket they play.
//!
//! Five slots exist: the top three of the total table (Y1, Y2, Y3) and the
//! two stage winners, relabelled W1/W2 by total-table rank. When a stage
//! winner also holds a Y slot the field shrinks; the eight possible overlap
//! patterns are numbered 1..=8:
//!
//! | case | overlaps | teams |
//! |------|----------|-------|
//! | 1 | none | 5 |
//! | 2 | (Y3, W1) | 4 |
//! | 3 | (Y2, W1) | 4 |
//! | 4 | (Y2, W1), (Y3, W2) | 3 |
//! | 5 | (Y1, W1) | 4 |
//! | 6 | (Y1, W1), (Y3, W2) | 3 |
//! | 7 | (Y1, W1), (Y2, W2) | 3 |
//! | 8 | (Y1, W1), (Y1, W2) | 3 |
//!
//! Patterns outside that table (a double stage winner not ranked first, or a
//! stage winner removed by the bottom-three exclusion) are reported as
//! [`ExtendedCase`]s.

mod bracket;
mod simulate;

pub use bracket::{
    build_bracket_official, build_bracket_proposed, Bracket, BracketJson, Entrant, KnockoutMatch,
    MatchupStructure, Participant,
};
pub use simulate::{simulate_bracket, DrawRule};

use crate::error::{invalid, Result};
use crate::standings::SeasonOutcome;
use crate::TeamId;
use serde::{Deserialize, Serialize};
use std::fmt;

/// Number of bottom total-table places whose stage winners lose their berth
/// when the exclusion rule is enabled (16th-18th of 18).
pub const EXCLUDED_BOTTOM_PLACES: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct StageWinner {
    pub team: TeamId,
    /// 1-based rank in the total table.
    pub total_rank: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct QualifierSet {
    pub y1: TeamId,
    pub y2: TeamId,
    pub y3: TeamId,
    /// Higher-ranked stage winner; `None` only if excluded.
    pub w1: Option<StageWinner>,
    /// Lower-ranked stage winner; equals `w1` for a double stage winner.
    pub w2: Option<StageWinner>,
}

impl QualifierSet {
    /// Build from total-table ranks of the two stage winners (ranks are 1-based and
    /// refer to `order`, the total table from first to last).
    pub fn from_ranks(order: &[TeamId], stage1_rank: usize, stage2_rank: usize, exclude_low_winners: bool) -> Result<Self> {
        let n = order.len();
        if n < 3 {
            return Err(invalid("a total table needs at least three teams"));
        }
        for r in [stage1_rank, stage2_rank] {
            if r == 0 || r > n {
                return Err(invalid(format!("rank {r} outside 1..={n}")));
            }
        }
        let (hi, lo) = (stage1_rank.min(stage2_rank), stage1_rank.max(stage2_rank));
        let keep = |rank: usize| !(exclude_low_winners && rank + EXCLUDED_BOTTOM_PLACES > n);
        let winner = |rank: usize| keep(rank).then(|| StageWinner { team: order[rank - 1], total_rank: rank });
        let (w1, w2) = match (winner(hi), winner(lo)) {
            (None, Some(w)) => (Some(w), None),
            other => other,
        };
        Ok(QualifierSet { y1: order[0], y2: order[1], y3: order[2], w1, w2 })
    }

    pub fn winners(&self) -> impl Iterator<Item = StageWinner> + '_ {
        self.w1.into_iter().chain(self.w2)
    }

    /// Distinct teams with a postseason berth.
    pub fn teams(&self) -> Vec<TeamId> {
        let mut teams = vec![self.y1, self.y2, self.y3];
        for w in self.winners() {
            if !teams.contains(&w.team) {
                teams.push(w.team);
            }
        }
        teams
    }

    /// Total-table rank of a qualified team.
    pub fn rank_of(&self, team: TeamId) -> Option<usize> {
        if team == self.y1 {
            Some(1)
        } else if team == self.y2 {
            Some(2)
        } else if team == self.y3 {
            Some(3)
        } else {
            self.winners().find(|w| w.team == team).map(|w| w.total_rank)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.y1 == self.y2 || self.y2 == self.y3 || self.y1 == self.y3 {
            return Err(invalid("Y1, Y2 and Y3 must be distinct"));
        }
        if self.w2.is_some() && self.w1.is_none() {
            return Err(invalid("W2 present without W1"));
        }
        if let (Some(a), Some(b)) = (self.w1, self.w2) {
            if a.total_rank > b.total_rank || (a.team == b.team) != (a.total_rank == b.total_rank) {
                return Err(invalid("W1 must outrank W2, and share its rank only when it is the same team"));
            }
        }
        for w in self.winners() {
            let expected = [self.y1, self.y2, self.y3].iter().position(|&y| y == w.team).map(|p| p + 1);
            let consistent = match expected {
                Some(rank) => rank == w.total_rank,
                None => w.total_rank >= 4,
            };
            if !consistent {
                return Err(invalid(format!("stage winner {} has inconsistent rank {}", w.team, w.total_rank)));
            }
        }
        Ok(())
    }
}

/// Pick the qualifiers from a completed season.
pub fn select_qualifiers(outcome: &SeasonOutcome, exclude_low_winners: bool) -> QualifierSet {
    let order: Vec<TeamId> = outcome.total_table.iter().map(|r| r.team_id).collect();
    let rank = |t: TeamId| order.iter().position(|&x| x == t).expect("stage winner is in the total table") + 1;
    let (a, b) = outcome.stage_winners;
    QualifierSet::from_ranks(&order, rank(a), rank(b), exclude_low_winners)
        .expect("total table of a valid season has at least four teams")
}

/// Where a stage winner sits in the total table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Slot {
    Y1,
    Y2,
    Y3,
    /// Fourth or lower.
    Y4,
}

impl Slot {
    pub fn of_rank(rank: usize) -> Slot {
        match rank {
            1 => Slot::Y1,
            2 => Slot::Y2,
            3 => Slot::Y3,
            _ => Slot::Y4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", content = "slot", rename_all = "snake_case")]
pub enum ExtendedCase {
    /// One team won both stages but is not first overall.
    DoubleWinner(Slot),
    /// Only one stage winner remains after the bottom-three exclusion.
    LoneWinner(Slot),
    /// Every stage winner was excluded.
    NoWinner,
}

impl ExtendedCase {
    pub const ALL: [ExtendedCase; 8] = [
        ExtendedCase::DoubleWinner(Slot::Y2),
        ExtendedCase::DoubleWinner(Slot::Y3),
        ExtendedCase::DoubleWinner(Slot::Y4),
        ExtendedCase::LoneWinner(Slot::Y1),
        ExtendedCase::LoneWinner(Slot::Y2),
        ExtendedCase::LoneWinner(Slot::Y3),
        ExtendedCase::LoneWinner(Slot::Y4),
        ExtendedCase::NoWinner,
    ];

    pub fn label(&self) -> &'static str {
        match self {
            ExtendedCase::DoubleWinner(Slot::Y1) => "double_winner_y1",
            ExtendedCase::DoubleWinner(Slot::Y2) => "double_winner_y2",
            ExtendedCase::DoubleWinner(Slot::Y3) => "double_winner_y3",
            ExtendedCase::DoubleWinner(Slot::Y4) => "double_winner_y4",
            ExtendedCase::LoneWinner(Slot::Y1) => "lone_winner_y1",
            ExtendedCase::LoneWinner(Slot::Y2) => "lone_winner_y2",
            ExtendedCase::LoneWinner(Slot::Y3) => "lone_winner_y3",
            ExtendedCase::LoneWinner(Slot::Y4) => "lone_winner_y4",
            ExtendedCase::NoWinner => "no_winner",
        }
    }

    pub fn team_count(&self) -> usize {
        match self {
            ExtendedCase::DoubleWinner(Slot::Y4) | ExtendedCase::LoneWinner(Slot::Y4) => 4,
            _ => 3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OverlapCase {
    /// One of the eight tabulated cases, `1..=8`.
    Table(u8),
    Extended(ExtendedCase),
}

impl OverlapCase {
    pub fn case_id(&self) -> Option<u8> {
        match self {
            OverlapCase::Table(id) => Some(*id),
            OverlapCase::Extended(_) => None,
        }
    }

    pub fn extra(&self) -> Option<ExtendedCase> {
        match self {
            OverlapCase::Table(_) => None,
            OverlapCase::Extended(e) => Some(*e),
        }
    }
}

impl fmt::Display for OverlapCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OverlapCase::Table(id) => write!(f, "case {id}"),
            OverlapCase::Extended(e) => write!(f, "extended case {}", e.label()),
        }
    }
}

/// Postseason field size for each tabulated case, indexed by `case_id - 1`.
pub const TABLE_TEAM_COUNTS: [usize; 8] = [5, 4, 4, 3, 4, 3, 3, 3];

pub fn team_count(c: OverlapCase) -> usize {
    match c {
        OverlapCase::Table(id) => TABLE_TEAM_COUNTS[usize::from(id) - 1],
        OverlapCase::Extended(e) => e.team_count(),
    }
}

pub fn classify_overlap(q: &QualifierSet) -> OverlapCase {
    use Slot::*;
    match (q.w1, q.w2) {
        (None, _) => OverlapCase::Extended(ExtendedCase::NoWinner),
        (Some(w), None) => OverlapCase::Extended(ExtendedCase::LoneWinner(Slot::of_rank(w.total_rank))),
        (Some(a), Some(b)) if a.team == b.team => match Slot::of_rank(a.total_rank) {
            Y1 => OverlapCase::Table(8),
            slot => OverlapCase::Extended(ExtendedCase::DoubleWinner(slot)),
        },
        (Some(a), Some(b)) => {
            let (hi, lo) = if a.total_rank <= b.total_rank { (a, b) } else { (b, a) };
            let id = match (Slot::of_rank(hi.total_rank), Slot::of_rank(lo.total_rank)) {
                (Y4, Y4) => 1,
                (Y3, Y4) => 2,
                (Y2, Y4) => 3,
                (Y2, Y3) => 4,
                (Y1, Y4) => 5,
                (Y1, Y3) => 6,
                (Y1, Y2) => 7,
                (x, y) => unreachable!("distinct winners ordered by rank cannot occupy {x:?}/{y:?}"),
            };
            OverlapCase::Table(id)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn order(n: u32) -> Vec<TeamId> {
        // Deliberately not identity so ids and ranks differ.
        (0..n).map(|k| TeamId((k * 7 + 3) % n)).collect()
    }

    fn q(r1: usize, r2: usize) -> QualifierSet {
        QualifierSet::from_ranks(&order(18), r1, r2, false).unwrap()
    }

    #[test]
    fn winners_relabelled_by_total_rank() {
        let o = order(18);
        let set = QualifierSet::from_ranks(&o, 4, 1, false).unwrap();
        assert_eq!(set.w1.unwrap().team, o[0]);
        assert_eq!(set.w2.unwrap().team, o[3]);
        assert_eq!(set.w2.unwrap().total_rank, 4);
        assert!(set.validate().is_ok());
    }

    #[test]
    fn double_winner_fills_both_slots() {
        let set = q(1, 1);
        assert_eq!(set.w1, set.w2);
        assert_eq!(classify_overlap(&set), OverlapCase::Table(8));
        assert_eq!(team_count(classify_overlap(&set)), 3);
    }

    #[test]
    fn bottom_three_exclusion() {
        let o = order(18);
        let set = QualifierSet::from_ranks(&o, 2, 17, true).unwrap();
        assert_eq!(set.w1.unwrap().total_rank, 2);
        assert!(set.w2.is_none());
        assert_eq!(classify_overlap(&set), OverlapCase::Extended(ExtendedCase::LoneWinner(Slot::Y2)));
        // Rank 15 survives, 16 does not.
        assert!(QualifierSet::from_ranks(&o, 1, 15, true).unwrap().w2.is_some());
        assert!(QualifierSet::from_ranks(&o, 1, 16, true).unwrap().w2.is_none());
        // Flag off: same season keeps its winner.
        let set = QualifierSet::from_ranks(&o, 2, 17, false).unwrap();
        assert_eq!(set.w2.unwrap().total_rank, 17);
        let none = QualifierSet::from_ranks(&o, 18, 16, true).unwrap();
        assert_eq!(classify_overlap(&none), OverlapCase::Extended(ExtendedCase::NoWinner));
    }

    #[test]
    fn tabulated_cases() {
        let expect = [
            ((7, 9), 1, 5),
            ((3, 8), 2, 4),
            ((2, 5), 3, 4),
            ((2, 3), 4, 3),
            ((1, 4), 5, 4),
            ((1, 3), 6, 3),
            ((1, 2), 7, 3),
            ((1, 1), 8, 3),
        ];
        for ((a, b), id, teams) in expect {
            for (r1, r2) in [(a, b), (b, a)] {
                let set = q(r1, r2);
                let c = classify_overlap(&set);
                assert_eq!(c, OverlapCase::Table(id), "ranks {r1},{r2}");
                assert_eq!(team_count(c), teams);
                assert_eq!(set.teams().len(), teams);
            }
        }
    }

    #[test]
    fn extended_double_winners() {
        assert_eq!(classify_overlap(&q(2, 2)), OverlapCase::Extended(ExtendedCase::DoubleWinner(Slot::Y2)));
        assert_eq!(classify_overlap(&q(3, 3)), OverlapCase::Extended(ExtendedCase::DoubleWinner(Slot::Y3)));
        let c = classify_overlap(&q(6, 6));
        assert_eq!(c, OverlapCase::Extended(ExtendedCase::DoubleWinner(Slot::Y4)));
        assert_eq!(team_count(c), 4);
    }

    #[test]
    fn team_count_equals_distinct_qualifiers_everywhere() {
        for flag in [false, true] {
            for r1 in 1..=18 {
                for r2 in 1..=18 {
                    let set = QualifierSet::from_ranks(&order(18), r1, r2, flag).unwrap();
                    set.validate().unwrap();
                    assert_eq!(team_count(classify_overlap(&set)), set.teams().len(), "{r1} {r2} {flag}");
                }
            }
        }
    }

    #[test]
    fn invalid_sets_rejected() {
        let mut set = q(1, 4);
        set.y2 = set.y1;
        assert!(set.validate().is_err());
        let mut set = q(1, 4);
        std::mem::swap(&mut set.w1, &mut set.w2);
        assert!(set.validate().is_err());
        assert!(QualifierSet::from_ranks(&order(18), 0, 4, false).is_err());
        assert!(QualifierSet::from_ranks(&order(18), 1, 19, false).is_err());
    }
}
