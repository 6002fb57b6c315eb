//! League tables under the 3-1-0 point system.
//!
//! Rows are ordered by points, then goal difference, then goals scored. Teams
//! still level are ordered by a per-team key hashed from the tie-break seed,
//! which is a uniform random order for a given seed and does not depend on
//! which other teams are tied.

use crate::error::{invalid, Result};
use crate::goal_models::MatchScore;
use crate::rng::mix64;
use crate::schedule::{Fixture, SeasonSchedule};
use crate::TeamId;
use serde::{Deserialize, Serialize};
use std::cmp::{Ordering, Reverse};

pub const POINTS_WIN: u32 = 3;
pub const POINTS_DRAW: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TableRow {
    pub team_id: TeamId,
    pub played: u32,
    pub wins: u32,
    pub draws: u32,
    pub losses: u32,
    pub goals_for: u32,
    pub goals_against: u32,
    pub points: u32,
}

impl TableRow {
    pub fn new(team_id: TeamId) -> Self {
        TableRow { team_id, played: 0, wins: 0, draws: 0, losses: 0, goals_for: 0, goals_against: 0, points: 0 }
    }

    pub fn goal_difference(&self) -> i64 {
        i64::from(self.goals_for) - i64::from(self.goals_against)
    }

    fn record(&mut self, scored: u32, conceded: u32) {
        self.played += 1;
        self.goals_for += scored;
        self.goals_against += conceded;
        match scored.cmp(&conceded) {
            Ordering::Greater => self.wins += 1,
            Ordering::Equal => self.draws += 1,
            Ordering::Less => self.losses += 1,
        }
        self.points = POINTS_WIN * self.wins + POINTS_DRAW * self.draws;
    }

    fn add(&mut self, other: &TableRow) {
        self.played += other.played;
        self.wins += other.wins;
        self.draws += other.draws;
        self.losses += other.losses;
        self.goals_for += other.goals_for;
        self.goals_against += other.goals_against;
        self.points += other.points;
    }
}

/// `(home_points, away_points)` for one result.
pub fn score_fixture(ms: MatchScore) -> (u32, u32) {
    match ms.home_goals.cmp(&ms.away_goals) {
        Ordering::Greater => (POINTS_WIN, 0),
        Ordering::Equal => (POINTS_DRAW, POINTS_DRAW),
        Ordering::Less => (0, POINTS_WIN),
    }
}

fn rank_key(row: &TableRow, seed: u64) -> (Reverse<u32>, Reverse<i64>, Reverse<u32>, u64, TeamId) {
    (
        Reverse(row.points),
        Reverse(row.goal_difference()),
        Reverse(row.goals_for),
        mix64(seed, u64::from(row.team_id.0)),
        row.team_id,
    )
}

/// Compare two rows in ranking order (`Less` means `a` ranks higher).
pub fn compare_rows(a: &TableRow, b: &TableRow, tiebreak_seed: u64) -> Ordering {
    rank_key(a, tiebreak_seed).cmp(&rank_key(b, tiebreak_seed))
}

pub fn rank_with_tiebreak(mut rows: Vec<TableRow>, tiebreak_seed: u64) -> Vec<TableRow> {
    rows.sort_by_cached_key(|r| rank_key(r, tiebreak_seed));
    rows
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeasonOutcome {
    pub schedule: SeasonSchedule,
    pub scores: Vec<MatchScore>,
    pub stage_tables: [Vec<TableRow>; 2],
    pub total_table: Vec<TableRow>,
    pub stage_winners: (TeamId, TeamId),
}

impl SeasonOutcome {
    /// 1-based rank of `team` in the total table.
    pub fn total_rank(&self, team: TeamId) -> Option<usize> {
        self.total_table.iter().position(|r| r.team_id == team).map(|p| p + 1)
    }

    pub fn total_row(&self, team: TeamId) -> Option<&TableRow> {
        self.total_table.iter().find(|r| r.team_id == team)
    }
}

fn tally<'a>(n: usize, results: impl Iterator<Item = (&'a Fixture, &'a MatchScore)>) -> Vec<TableRow> {
    let mut rows: Vec<TableRow> = (0..n as u32).map(|t| TableRow::new(TeamId(t))).collect();
    for (fx, ms) in results {
        rows[fx.home.index()].record(ms.home_goals, ms.away_goals);
        rows[fx.away.index()].record(ms.away_goals, ms.home_goals);
    }
    rows
}

/// Tally and rank the stage and total tables for a completed season.
pub fn build_tables(schedule: &SeasonSchedule, scores: &[MatchScore], tiebreak_seed: u64) -> Result<SeasonOutcome> {
    if scores.len() != schedule.fixtures.len() {
        return Err(invalid(format!(
            "expected one score per fixture: {} fixtures, {} scores",
            schedule.fixtures.len(),
            scores.len()
        )));
    }
    let n = schedule.n_teams;
    for (k, fx) in schedule.fixtures.iter().enumerate() {
        if fx.home.index() >= n || fx.away.index() >= n || !(1..=2).contains(&fx.stage) {
            return Err(invalid(format!("fixture #{k} references a team or stage outside the schedule")));
        }
    }
    let played = || schedule.fixtures.iter().zip(scores);
    let stage1 = tally(n, played().filter(|(f, _)| f.stage == 1));
    let stage2 = tally(n, played().filter(|(f, _)| f.stage == 2));
    let mut total = stage1.clone();
    for (t, row) in total.iter_mut().zip(&stage2) {
        t.add(row);
    }

    let stage_tables = [rank_with_tiebreak(stage1, tiebreak_seed), rank_with_tiebreak(stage2, tiebreak_seed)];
    let total_table = rank_with_tiebreak(total, tiebreak_seed);
    let stage_winners = (stage_tables[0][0].team_id, stage_tables[1][0].team_id);
    Ok(SeasonOutcome { schedule: schedule.clone(), scores: scores.to_vec(), stage_tables, total_table, stage_winners })
}
