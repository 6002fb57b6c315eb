//! Two-stage single round-robin schedules.
//!
//! Rounds come from the circle method. Venues are an orientation of the
//! complete graph on the teams in which every team hosts `floor((n-1)/2)` or
//! `ceil((n-1)/2)` of its stage-1 games; stage 2 replays the same pairs with
//! venues swapped, so every team hosts exactly `n-1` games over the season.

use crate::error::{invalid, Result};
use crate::rng;
use crate::TeamId;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;

pub const MIN_TEAMS: usize = 4;
pub const MAX_TEAMS: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Fixture {
    /// 1-based round within the stage.
    pub round: u32,
    /// 1 or 2.
    pub stage: u8,
    pub home: TeamId,
    pub away: TeamId,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeasonSchedule {
    pub n_teams: usize,
    pub fixtures: Vec<Fixture>,
}

impl SeasonSchedule {
    pub fn stage(&self, stage: u8) -> impl Iterator<Item = &Fixture> + '_ {
        self.fixtures.iter().filter(move |f| f.stage == stage)
    }

    pub fn fixtures_per_stage(&self) -> usize {
        self.n_teams * (self.n_teams.saturating_sub(1)) / 2
    }
}

fn check_team_count(n_teams: usize) -> Result<()> {
    if n_teams % 2 != 0 || !(MIN_TEAMS..=MAX_TEAMS).contains(&n_teams) {
        return Err(invalid(format!(
            "team count must be even and within [{MIN_TEAMS}, {MAX_TEAMS}], got {n_teams}"
        )));
    }
    Ok(())
}

/// Circle-method pairings: `rounds[r]` holds the `n/2` unordered pairs of round `r`.
pub fn circle_rounds(n_teams: usize) -> Result<Vec<Vec<(usize, usize)>>> {
    check_team_count(n_teams)?;
    let m = n_teams - 1;
    let rounds = (0..m)
        .map(|r| {
            let mut pairs = Vec::with_capacity(n_teams / 2);
            pairs.push((m, r));
            for k in 1..n_teams / 2 {
                pairs.push(((r + k) % m, (r + m - k) % m));
            }
            pairs
        })
        .collect();
    Ok(rounds)
}

/// Venue orientation for stage 1: `hosts[i * n + j]` is true when `i` hosts `j`.
struct Orientation {
    n: usize,
    hosts: Vec<bool>,
    home_games: Vec<usize>,
}

impl Orientation {
    fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        let mut o = Orientation {
            n,
            hosts: vec![false; n * n],
            home_games: vec![0; n],
        };
        for i in 0..n {
            for j in i + 1..n {
                if rng.random::<bool>() {
                    o.set(i, j);
                } else {
                    o.set(j, i);
                }
            }
        }
        o
    }

    fn hosts(&self, i: usize, j: usize) -> bool {
        self.hosts[i * self.n + j]
    }

    fn set(&mut self, host: usize, guest: usize) {
        self.hosts[host * self.n + guest] = true;
        self.hosts[guest * self.n + host] = false;
        self.home_games[host] += 1;
    }

    fn reverse(&mut self, host: usize, guest: usize) {
        debug_assert!(self.hosts(host, guest));
        self.home_games[host] -= 1;
        self.set(guest, host);
    }

    fn bounds(&self) -> (usize, usize) {
        ((self.n - 1) / 2, self.n / 2)
    }

    /// Shortest path `from -> .. -> x` following host edges (forward) or
    /// guest edges (backward) to the first `x` satisfying `target`.
    fn path_to(&self, from: usize, forward: bool, target: impl Fn(usize) -> bool) -> Vec<usize> {
        let n = self.n;
        let mut prev = vec![usize::MAX; n];
        prev[from] = from;
        let mut queue = std::collections::VecDeque::from([from]);
        while let Some(v) = queue.pop_front() {
            for w in 0..n {
                if w == v || prev[w] != usize::MAX {
                    continue;
                }
                let edge = if forward { self.hosts(v, w) } else { self.hosts(w, v) };
                if !edge {
                    continue;
                }
                prev[w] = v;
                if target(w) {
                    let mut path = vec![w];
                    let mut cur = w;
                    while cur != from {
                        cur = prev[cur];
                        path.push(cur);
                    }
                    path.reverse();
                    return path;
                }
                queue.push_back(w);
            }
        }
        Vec::new()
    }

    /// Reverse directed paths until every home count is within bounds.
    ///
    /// From a team above the upper bound, the set of teams it reaches along
    /// host edges has average home count `(|R|-1)/2`, so it always contains a
    /// team at or below the lower bound; the backward case is symmetric.
    fn balance(&mut self) {
        let (low, high) = self.bounds();
        loop {
            if let Some(v) = (0..self.n).find(|&v| self.home_games[v] > high) {
                let path = self.path_to(v, true, |u| self.home_games[u] <= low);
                for w in path.windows(2) {
                    self.reverse(w[0], w[1]);
                }
            } else if let Some(u) = (0..self.n).find(|&u| self.home_games[u] < low) {
                let path = self.path_to(u, false, |v| self.home_games[v] >= high);
                for w in path.windows(2) {
                    self.reverse(w[1], w[0]);
                }
            } else {
                return;
            }
        }
    }

    /// Reversing a directed 3-cycle leaves every home count unchanged.
    fn shuffle_cycles<R: Rng + ?Sized>(&mut self, attempts: usize, rng: &mut R) {
        let n = self.n;
        for _ in 0..attempts {
            let a = rng.random_range(0..n);
            let b = rng.random_range(0..n);
            let c = rng.random_range(0..n);
            if a == b || b == c || a == c {
                continue;
            }
            if self.hosts(a, b) && self.hosts(b, c) && self.hosts(c, a) {
                self.reverse(a, b);
                self.reverse(b, c);
                self.reverse(c, a);
            } else if self.hosts(b, a) && self.hosts(c, b) && self.hosts(a, c) {
                self.reverse(b, a);
                self.reverse(c, b);
                self.reverse(a, c);
            }
        }
    }
}

/// Generate a two-stage schedule for `n_teams` teams (even, 4..=64).
///
/// Deterministic in `(n_teams, home_assignment_seed)`.
pub fn generate_season_schedule(n_teams: usize, home_assignment_seed: u64) -> Result<SeasonSchedule> {
    let rounds = circle_rounds(n_teams)?;
    let mut rng = rng::seeded(home_assignment_seed);
    let mut orientation = Orientation::random(n_teams, &mut rng);
    orientation.balance();
    orientation.shuffle_cycles(2 * n_teams * n_teams, &mut rng);

    let mut fixtures = Vec::with_capacity(n_teams * (n_teams - 1));
    for stage in [1u8, 2] {
        for (r, pairs) in rounds.iter().enumerate() {
            for &(a, b) in pairs {
                let (host, guest) = if orientation.hosts(a, b) { (a, b) } else { (b, a) };
                let (home, away) = if stage == 1 { (host, guest) } else { (guest, host) };
                fixtures.push(Fixture {
                    round: r as u32 + 1,
                    stage,
                    home: TeamId(home as u32),
                    away: TeamId(away as u32),
                });
            }
        }
    }
    Ok(SeasonSchedule { n_teams, fixtures })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    BadTeamCount { n_teams: usize },
    BadStage { index: usize, stage: u8 },
    RoundOutOfRange { index: usize, round: u32 },
    TeamOutOfRange { index: usize, team: TeamId },
    SelfMatch { index: usize, team: TeamId },
    FixtureCount { stage: u8, expected: usize, found: usize },
    PairRepeated { stage: u8, a: TeamId, b: TeamId, count: usize },
    PairMissing { stage: u8, a: TeamId, b: TeamId },
    VenueNotComplementary { a: TeamId, b: TeamId },
    HomeImbalance { stage: u8, team: TeamId, home_games: usize },
    SeasonHomeTotal { team: TeamId, home_games: usize, expected: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::BadTeamCount { n_teams } => write!(f, "team count {n_teams} is not even or below {MIN_TEAMS}"),
            Violation::BadStage { index, stage } => write!(f, "fixture #{index}: stage {stage} is not 1 or 2"),
            Violation::RoundOutOfRange { index, round } => write!(f, "fixture #{index}: round {round} out of range"),
            Violation::TeamOutOfRange { index, team } => write!(f, "fixture #{index}: team {team} out of range"),
            Violation::SelfMatch { index, team } => write!(f, "fixture #{index}: team {team} plays itself"),
            Violation::FixtureCount { stage, expected, found } => {
                write!(f, "stage {stage}: {found} fixtures, expected {expected}")
            }
            Violation::PairRepeated { stage, a, b, count } => {
                write!(f, "stage {stage}: pair ({a}, {b}) meets {count} times")
            }
            Violation::PairMissing { stage, a, b } => write!(f, "stage {stage}: pair ({a}, {b}) never meets"),
            Violation::VenueNotComplementary { a, b } => {
                write!(f, "pair ({a}, {b}): venues are not swapped between stages")
            }
            Violation::HomeImbalance { stage, team, home_games } => {
                write!(f, "stage {stage}: team {team} has {home_games} home games")
            }
            Violation::SeasonHomeTotal { team, home_games, expected } => {
                write!(f, "team {team} has {home_games} home games over the season, expected {expected}")
            }
        }
    }
}

/// Check every schedule invariant; an empty list means the schedule is valid.
pub fn validate_schedule(s: &SeasonSchedule) -> Vec<Violation> {
    let n = s.n_teams;
    let mut out = Vec::new();
    if n % 2 != 0 || n < MIN_TEAMS {
        out.push(Violation::BadTeamCount { n_teams: n });
    }

    // (stage, lo, hi) -> home teams, in fixture order
    let mut meetings: BTreeMap<(u8, u32, u32), Vec<TeamId>> = BTreeMap::new();
    let mut per_stage = [0usize; 2];
    let mut home = vec![[0usize; 2]; n];
    for (index, fx) in s.fixtures.iter().enumerate() {
        let mut ok = true;
        if fx.stage != 1 && fx.stage != 2 {
            out.push(Violation::BadStage { index, stage: fx.stage });
            ok = false;
        }
        if fx.round < 1 || fx.round as usize > n.saturating_sub(1) {
            out.push(Violation::RoundOutOfRange { index, round: fx.round });
        }
        for team in [fx.home, fx.away] {
            if team.index() >= n {
                out.push(Violation::TeamOutOfRange { index, team });
                ok = false;
            }
        }
        if fx.home == fx.away {
            out.push(Violation::SelfMatch { index, team: fx.home });
            ok = false;
        }
        if !ok {
            continue;
        }
        let si = (fx.stage - 1) as usize;
        per_stage[si] += 1;
        home[fx.home.index()][si] += 1;
        let key = (fx.stage, fx.home.0.min(fx.away.0), fx.home.0.max(fx.away.0));
        meetings.entry(key).or_default().push(fx.home);
    }

    let expected = s.fixtures_per_stage();
    for stage in [1u8, 2] {
        let found = per_stage[(stage - 1) as usize];
        if found != expected {
            out.push(Violation::FixtureCount { stage, expected, found });
        }
    }

    for a in 0..n as u32 {
        for b in a + 1..n as u32 {
            let (ta, tb) = (TeamId(a), TeamId(b));
            let first = meetings.get(&(1, a, b));
            let second = meetings.get(&(2, a, b));
            for (stage, m) in [(1u8, first), (2u8, second)] {
                match m.map(Vec::len).unwrap_or(0) {
                    0 => out.push(Violation::PairMissing { stage, a: ta, b: tb }),
                    1 => {}
                    count => out.push(Violation::PairRepeated { stage, a: ta, b: tb, count }),
                }
            }
            if let (Some(x), Some(y)) = (first, second) {
                if x.len() == 1 && y.len() == 1 && x[0] == y[0] {
                    out.push(Violation::VenueNotComplementary { a: ta, b: tb });
                }
            }
        }
    }

    if n >= 2 {
        let (low, high) = ((n - 1) / 2, n / 2);
        for (t, counts) in home.iter().enumerate() {
            let team = TeamId(t as u32);
            for (si, &h) in counts.iter().enumerate() {
                if h < low || h > high {
                    out.push(Violation::HomeImbalance { stage: si as u8 + 1, team, home_games: h });
                }
            }
            let total = counts[0] + counts[1];
            if total != n - 1 {
                out.push(Violation::SeasonHomeTotal { team, home_games: total, expected: n - 1 });
            }
        }
    }
    out
}
