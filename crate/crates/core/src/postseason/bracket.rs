//! Postseason brackets.
//!
//! Every bracket has the same skeleton: an optional first round of up to two
//! single matches, one second-round match deciding the Super Stage, and a
//! two-legged Championship between Y1 and the Super Stage winner. Teams that
//! skip the first round are listed as byes.
//!
//! Two builders exist. [`build_bracket_official`] applies the league's
//! overlap-resolution rules case by case; [`build_bracket_proposed`] applies
//! the simpler "top three plus repechage stage winners" description. The two
//! are expected to agree on every tabulated case.

use super::{classify_overlap, team_count, ExtendedCase, OverlapCase, QualifierSet, Slot, StageWinner};
use crate::error::{invalid, Result};
use crate::TeamId;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Participant {
    pub team: TeamId,
    pub total_rank: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Entrant {
    Team(TeamId),
    /// Winner of first-round match `k`.
    WinnerOf(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct KnockoutMatch {
    /// Higher-ranked side (or the team that had a bye).
    pub higher: Entrant,
    pub lower: Entrant,
    /// Host team, when the rules name one.
    pub venue: Option<TeamId>,
}

impl KnockoutMatch {
    fn teams(higher: TeamId, lower: TeamId, venue: Option<TeamId>) -> Self {
        KnockoutMatch { higher: Entrant::Team(higher), lower: Entrant::Team(lower), venue }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Bracket {
    pub case: OverlapCase,
    /// Distinct qualified teams ordered by total rank.
    pub participants: Vec<Participant>,
    pub first_round: Vec<KnockoutMatch>,
    /// Super Stage teams that skip the first round.
    pub byes: Vec<TeamId>,
    pub second_round: KnockoutMatch,
    /// Seeded straight into the Championship (always Y1).
    pub championship_seed: TeamId,
}

/// Order-free description of who meets whom in which round.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct MatchupStructure {
    pub first_round: BTreeMap<(TeamId, TeamId), Option<TeamId>>,
    pub byes: BTreeSet<TeamId>,
    pub second_round: BTreeSet<BTreeSet<TeamId>>,
    pub championship_seed: TeamId,
}

impl Bracket {
    pub fn team_count(&self) -> usize {
        self.participants.len()
    }

    pub fn rank_of(&self, team: TeamId) -> Option<usize> {
        self.participants.iter().find(|p| p.team == team).map(|p| p.total_rank)
    }

    /// Second-round entrants resolved to the set of teams that could fill them.
    fn possible(&self, e: Entrant) -> BTreeSet<TeamId> {
        match e {
            Entrant::Team(t) => BTreeSet::from([t]),
            Entrant::WinnerOf(k) => {
                let m = &self.first_round[k];
                let mut s = self.possible(m.higher);
                s.extend(self.possible(m.lower));
                s
            }
        }
    }

    pub fn structure(&self) -> MatchupStructure {
        let first_round = self
            .first_round
            .iter()
            .map(|m| {
                let (Entrant::Team(a), Entrant::Team(b)) = (m.higher, m.lower) else {
                    unreachable!("first-round entrants are teams")
                };
                ((a.min(b), a.max(b)), m.venue)
            })
            .collect();
        let second_round = [self.second_round.higher, self.second_round.lower]
            .into_iter()
            .map(|e| self.possible(e))
            .collect();
        MatchupStructure {
            first_round,
            byes: self.byes.iter().copied().collect(),
            second_round,
            championship_seed: self.championship_seed,
        }
    }

    pub fn equivalent(&self, other: &Bracket) -> bool {
        self.structure() == other.structure()
    }

    /// Check the structural invariants; returns a description of each breach.
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        let mut first = BTreeSet::new();
        for m in &self.first_round {
            for e in [m.higher, m.lower] {
                match e {
                    Entrant::Team(t) if !first.insert(t) => out.push(format!("team {t} twice in first round")),
                    Entrant::WinnerOf(_) => out.push("placeholder in first round".to_string()),
                    _ => {}
                }
            }
        }
        let mut second = BTreeSet::new();
        for e in [self.second_round.higher, self.second_round.lower] {
            match e {
                Entrant::Team(t) => {
                    if !second.insert(t) {
                        out.push(format!("team {t} twice in second round"));
                    }
                    if first.contains(&t) {
                        out.push(format!("team {t} both plays the first round and enters the second directly"));
                    }
                }
                Entrant::WinnerOf(k) if k >= self.first_round.len() => {
                    out.push(format!("second round refers to missing first-round match {k}"))
                }
                Entrant::WinnerOf(_) => {}
            }
        }
        let mut fed: Vec<usize> = [self.second_round.higher, self.second_round.lower]
            .into_iter()
            .filter_map(|e| match e {
                Entrant::WinnerOf(k) => Some(k),
                _ => None,
            })
            .collect();
        fed.sort_unstable();
        if fed != (0..self.first_round.len()).collect::<Vec<_>>() {
            out.push("first-round winners do not each feed the second round once".to_string());
        }
        if self.rank_of(self.championship_seed) != Some(1) {
            out.push("championship seed is not Y1".to_string());
        }
        if first.contains(&self.championship_seed) || second.contains(&self.championship_seed) {
            out.push("Y1 plays in the Super Stage".to_string());
        }
        let mut all: BTreeSet<TeamId> = first.union(&second).copied().collect();
        all.insert(self.championship_seed);
        let listed: BTreeSet<TeamId> = self.participants.iter().map(|p| p.team).collect();
        if all != listed {
            out.push("bracket teams differ from the participant list".to_string());
        }
        if !(3..=5).contains(&all.len()) {
            out.push(format!("{} distinct teams, expected 3 to 5", all.len()));
        }
        if all.len() != team_count(self.case) {
            out.push(format!("{} teams but {} implies {}", all.len(), self.case, team_count(self.case)));
        }
        out
    }
}

fn participants(q: &QualifierSet) -> Vec<Participant> {
    let mut ps: Vec<Participant> = q
        .teams()
        .into_iter()
        .map(|team| Participant { team, total_rank: q.rank_of(team).expect("qualified team has a rank") })
        .collect();
    ps.sort_by_key(|p| p.total_rank);
    ps
}

/// A stage winner hosts its first-round match; otherwise no host is named.
fn venue(q: &QualifierSet, a: TeamId, b: TeamId) -> Option<TeamId> {
    let is_winner = |t: TeamId| q.winners().any(|w| w.team == t);
    match (is_winner(a), is_winner(b)) {
        (true, false) => Some(a),
        (false, true) => Some(b),
        _ => None,
    }
}

fn ordered(q: &QualifierSet, a: TeamId, b: TeamId) -> (TeamId, TeamId) {
    if q.rank_of(a) <= q.rank_of(b) {
        (a, b)
    } else {
        (b, a)
    }
}

fn first_round_match(q: &QualifierSet, a: TeamId, b: TeamId) -> KnockoutMatch {
    let (hi, lo) = ordered(q, a, b);
    KnockoutMatch::teams(hi, lo, venue(q, a, b))
}

fn assemble(q: &QualifierSet, case: OverlapCase, first_round: Vec<KnockoutMatch>, second_round: KnockoutMatch, byes: Vec<TeamId>) -> Bracket {
    Bracket { case, participants: participants(q), first_round, byes, second_round, championship_seed: q.y1 }
}

/// Super Stage consisting of the single match `a` v `b`.
fn single_match(q: &QualifierSet, case: OverlapCase, a: TeamId, b: TeamId) -> Bracket {
    let (hi, lo) = ordered(q, a, b);
    assemble(q, case, Vec::new(), KnockoutMatch::teams(hi, lo, None), Vec::new())
}

/// First round `a` v `b`, its winner meets the seeded team.
fn one_bye(q: &QualifierSet, case: OverlapCase, seeded: TeamId, a: TeamId, b: TeamId) -> Bracket {
    let second = KnockoutMatch { higher: Entrant::Team(seeded), lower: Entrant::WinnerOf(0), venue: None };
    assemble(q, case, vec![first_round_match(q, a, b)], second, vec![seeded])
}

/// Two first-round matches whose winners meet.
fn no_bye(q: &QualifierSet, case: OverlapCase, m0: (TeamId, TeamId), m1: (TeamId, TeamId)) -> Bracket {
    let second = KnockoutMatch { higher: Entrant::WinnerOf(0), lower: Entrant::WinnerOf(1), venue: None };
    assemble(q, case, vec![first_round_match(q, m0.0, m0.1), first_round_match(q, m1.0, m1.1)], second, Vec::new())
}

/// Official overlap resolution.
///
/// * No overlap: W1 v Y3 and W2 v Y2 at the stage winners' grounds, winners meet.
/// * Y1 = W1: Y1 waits in the Championship, Y2 v Y3 in the first round, W2 seeded.
/// * A stage winner that is also Y2 or Y3 is seeded past the first round.
/// * W1 = Y2 and W2 = Y3: only the second-round match is played.
///
/// Configurations the official rules do not address are built with the
/// proposed rules.
pub fn build_bracket_official(q: &QualifierSet, c: OverlapCase) -> Result<Bracket> {
    q.validate()?;
    let actual = classify_overlap(q);
    if actual != c {
        return Err(invalid(format!("qualifier set is {actual}, not {c}")));
    }
    let OverlapCase::Table(id) = c else {
        return Ok(build_bracket_proposed(q));
    };
    let (y2, y3) = (q.y2, q.y3);
    let w1 = q.w1.expect("tabulated cases have two winners").team;
    let w2 = q.w2.expect("tabulated cases have two winners").team;
    let bracket = match id {
        1 => no_bye(q, c, (w1, y3), (w2, y2)),
        // W1 is Y3: seeded, its first-round slot vanishes; W2 v Y2 stands.
        2 => one_bye(q, c, w1, w2, y2),
        // W1 is Y2: seeded; W2 takes on Y3, whose opponent W1 has gone.
        3 => one_bye(q, c, w1, w2, y3),
        4 => single_match(q, c, w1, w2),
        5 => one_bye(q, c, w2, y2, y3),
        // W2 is Y3 (6) or Y2 (7) and therefore seeded; the Y2 v Y3 first
        // round collapses into a single Super Stage match.
        6 | 7 => single_match(q, c, y2, y3),
        8 => single_match(q, c, y2, y3),
        _ => unreachable!("case ids are 1..=8"),
    };
    Ok(bracket)
}

/// Bracket under the "top three plus repechage" description: Y1 waits in the
/// Championship and Y2 v Y3 is the base Super Stage; stage winners ranked
/// fourth or lower enter as repechage teams.
///
/// * One repechage team and W1 is Y2 or Y3: W1 is seeded, the repechage team
///   plays the other of Y2/Y3.
/// * One repechage team otherwise: it is seeded, Y2 v Y3 in the first round.
/// * Two repechage teams: Y2 v W2 and Y3 v W1.
pub fn build_bracket_proposed(q: &QualifierSet) -> Bracket {
    let case = classify_overlap(q);
    let (y2, y3) = (q.y2, q.y3);
    let mut repechage: Vec<StageWinner> = q.winners().filter(|w| Slot::of_rank(w.total_rank) == Slot::Y4).collect();
    repechage.dedup();
    match repechage.as_slice() {
        [] => single_match(q, case, y2, y3),
        [r] => {
            let in_super_stage = q.winners().map(|w| w.team).find(|&t| t == y2 || t == y3);
            match in_super_stage {
                Some(seeded) => {
                    let other = if seeded == y2 { y3 } else { y2 };
                    one_bye(q, case, seeded, r.team, other)
                }
                None => one_bye(q, case, r.team, y2, y3),
            }
        }
        [w1, w2] => no_bye(q, case, (y2, w2.team), (y3, w1.team)),
        _ => unreachable!("at most two stage winners"),
    }
}

/// Serializable bracket layout: one entry per round, each a list of
/// `(home, away, bye)` rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BracketJson {
    pub case_id: Option<u8>,
    pub extended_case: Option<String>,
    pub team_count: usize,
    pub rounds: Vec<RoundJson>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundJson {
    pub name: String,
    pub entries: Vec<EntryJson>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntryJson {
    pub home: String,
    pub away: Option<String>,
    pub bye: bool,
}

impl From<&Bracket> for BracketJson {
    fn from(b: &Bracket) -> Self {
        let name = |e: Entrant| match e {
            Entrant::Team(t) => t.to_string(),
            Entrant::WinnerOf(k) => format!("winner of first round #{}", k + 1),
        };
        let pair = |m: &KnockoutMatch| {
            let (home, away) = match (m.venue, m.higher, m.lower) {
                (Some(v), hi, Entrant::Team(lo)) if v == lo => (Entrant::Team(lo), hi),
                (_, hi, lo) => (hi, lo),
            };
            EntryJson { home: name(home), away: Some(name(away)), bye: false }
        };
        let mut first: Vec<EntryJson> = b.first_round.iter().map(pair).collect();
        if !b.first_round.is_empty() {
            first.extend(b.byes.iter().map(|t| EntryJson { home: t.to_string(), away: None, bye: true }));
        }
        let mut rounds = Vec::new();
        if !first.is_empty() {
            rounds.push(RoundJson { name: "first_round".into(), entries: first });
        }
        rounds.push(RoundJson { name: "second_round".into(), entries: vec![pair(&b.second_round)] });
        rounds.push(RoundJson {
            name: "championship".into(),
            entries: vec![EntryJson {
                home: b.championship_seed.to_string(),
                away: Some("super stage winner".into()),
                bye: false,
            }],
        });
        BracketJson {
            case_id: b.case.case_id(),
            extended_case: b.case.extra().map(|e: ExtendedCase| e.label().to_string()),
            team_count: b.team_count(),
            rounds,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn order() -> Vec<TeamId> {
        (0..18).map(|k| TeamId(17 - k)).collect()
    }

    fn q(r1: usize, r2: usize) -> QualifierSet {
        QualifierSet::from_ranks(&order(), r1, r2, false).unwrap()
    }

    fn t(rank: usize) -> TeamId {
        order()[rank - 1]
    }

    fn official(q: &QualifierSet) -> Bracket {
        build_bracket_official(q, classify_overlap(q)).unwrap()
    }

    #[test]
    fn case1_two_first_round_matches_at_winners() {
        let set = q(7, 9);
        let b = official(&set);
        assert_eq!(b.first_round.len(), 2);
        assert_eq!(b.first_round[0], KnockoutMatch::teams(t(3), t(7), Some(t(7))));
        assert_eq!(b.first_round[1], KnockoutMatch::teams(t(2), t(9), Some(t(9))));
        assert!(b.byes.is_empty());
        assert_eq!(b.team_count(), 5);
        assert!(b.violations().is_empty(), "{:?}", b.violations());
    }

    #[test]
    fn case4_second_round_only() {
        let b = official(&q(2, 3));
        assert!(b.first_round.is_empty());
        assert_eq!(b.second_round, KnockoutMatch::teams(t(2), t(3), None));
        assert_eq!(b.team_count(), 3);
    }

    #[test]
    fn case5_winner_two_seeded() {
        let b = official(&q(1, 6));
        assert_eq!(b.first_round, vec![KnockoutMatch::teams(t(2), t(3), None)]);
        assert_eq!(b.byes, vec![t(6)]);
        assert_eq!(b.second_round.higher, Entrant::Team(t(6)));
    }

    #[test]
    fn case8_is_y2_v_y3_then_y1() {
        // Rule-by-rule: Y1 = W1 = W2 leaves Y2 and Y3; they meet once, the winner faces Y1.
        let b = official(&q(1, 1));
        assert!(b.first_round.is_empty());
        let s = b.structure();
        assert_eq!(s.second_round, BTreeSet::from([BTreeSet::from([t(2)]), BTreeSet::from([t(3)])]));
        assert_eq!(b.championship_seed, t(1));
    }

    #[test]
    fn proposed_base_format() {
        let b = build_bracket_proposed(&q(2, 3));
        assert_eq!(b.team_count(), 3);
        assert!(b.first_round.is_empty());
        let b = build_bracket_proposed(&q(1, 2));
        assert_eq!(b.second_round, KnockoutMatch::teams(t(2), t(3), None));
    }

    #[test]
    fn proposed_seeds_top_three_winner() {
        let b = build_bracket_proposed(&q(3, 8));
        assert_eq!(b.byes, vec![t(3)]);
        assert_eq!(b.first_round, vec![KnockoutMatch::teams(t(2), t(8), Some(t(8)))]);
    }

    #[test]
    fn proposed_two_repechage_teams() {
        let b = build_bracket_proposed(&q(5, 4));
        let s = b.structure();
        let pairs: Vec<_> = s.first_round.keys().copied().collect();
        let norm = |a: TeamId, b: TeamId| (a.min(b), a.max(b));
        assert!(pairs.contains(&norm(t(2), t(5))));
        assert!(pairs.contains(&norm(t(3), t(4))));
    }

    #[test]
    fn official_rejects_mismatched_case() {
        assert!(build_bracket_official(&q(1, 4), OverlapCase::Table(1)).is_err());
    }

    #[test]
    fn official_matches_proposed_for_every_tabulated_case() {
        for r1 in 1..=18 {
            for r2 in 1..=18 {
                let set = q(r1, r2);
                let c = classify_overlap(&set);
                let a = build_bracket_official(&set, c).unwrap();
                let b = build_bracket_proposed(&set);
                assert!(a.violations().is_empty(), "{r1} {r2}: {:?}", a.violations());
                assert!(b.violations().is_empty(), "{r1} {r2}: {:?}", b.violations());
                assert!(a.equivalent(&b), "{r1} {r2}");
            }
        }
    }

    #[test]
    fn json_layout() {
        let b = official(&q(1, 6));
        let j = BracketJson::from(&b);
        assert_eq!(j.case_id, Some(5));
        assert_eq!(j.team_count, 4);
        assert_eq!(j.rounds.len(), 3);
        assert_eq!(j.rounds[0].entries.len(), 2);
        assert!(j.rounds[0].entries[1].bye);
        let text = serde_json::to_string(&j).unwrap();
        assert_eq!(serde_json::from_str::<BracketJson>(&text).unwrap(), j);
    }

    #[test]
    fn violations_detect_broken_brackets() {
        let mut b = official(&q(7, 9));
        b.championship_seed = t(2);
        assert!(!b.violations().is_empty());
        let mut b = official(&q(7, 9));
        b.first_round[1].lower = Entrant::Team(t(7));
        assert!(b.violations().iter().any(|v| v.contains("twice")));
    }
}
