//! Replicated season simulation.
//!
//! Replication `i` draws everything from stream `i` of the master seed (see
//! [`crate::rng`]) and reports only integer tallies, which are merged by
//! addition. The report is therefore bit-identical for any worker count.

use crate::error::{invalid, Error, Result};
use crate::goal_models::{check_model_inputs, draw_score, mu_unchecked, GoalModel, LeagueParams, RegressionCoeffs};
use crate::postseason::{
    build_bracket_official, classify_overlap, select_qualifiers, simulate_bracket, team_count, DrawRule, ExtendedCase,
    OverlapCase,
};
use crate::rng::replication_stream;
use crate::schedule::{generate_season_schedule, SeasonSchedule, MAX_TEAMS, MIN_TEAMS};
use crate::standings::build_tables;
use crate::TeamId;
use rand::RngCore;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt::Write as _;

pub const DEFAULT_REPLICATIONS: u64 = 100_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub model: GoalModel,
    pub n_replications: u64,
    pub master_seed: u64,
    pub league: LeagueParams,
    pub coeffs: Option<RegressionCoeffs>,
    pub exclude_low_winners: bool,
    pub draw_rule: DrawRule,
    pub n_workers: usize,
    /// Reuse one schedule for every replication instead of redrawing venues.
    pub fixed_schedule: bool,
    /// Also play out each postseason and count champions.
    pub simulate_postseason: bool,
}

impl SimConfig {
    pub fn new(model: GoalModel, league: LeagueParams) -> Self {
        SimConfig {
            model,
            n_replications: DEFAULT_REPLICATIONS,
            master_seed: 0,
            league,
            coeffs: None,
            exclude_low_winners: false,
            draw_rule: DrawRule::HigherRank,
            n_workers: 1,
            fixed_schedule: false,
            simulate_postseason: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_replications == 0 {
            return Err(invalid("at least one replication is required"));
        }
        if self.n_workers == 0 {
            return Err(invalid("at least one worker is required"));
        }
        let n = self.league.n_teams();
        if n % 2 != 0 || !(MIN_TEAMS..=MAX_TEAMS).contains(&n) {
            return Err(invalid(format!("league must have an even number of teams in [{MIN_TEAMS}, {MAX_TEAMS}], got {n}")));
        }
        self.league.validate()?;
        check_model_inputs(self.model, self.coeffs.as_ref())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TeamPointStats {
    pub team_id: TeamId,
    pub name: String,
    pub mean_points: f64,
    pub std_points: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtendedCount {
    pub case: ExtendedCase,
    pub label: String,
    pub team_count: usize,
    pub count: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimReport {
    pub model: GoalModel,
    pub replications: u64,
    pub seed: u64,
    pub n_teams: usize,
    pub exclude_low_winners: bool,
    pub fixed_schedule: bool,
    /// Tabulated cases `"1"`..`"8"`.
    pub case_counts: BTreeMap<u8, u64>,
    pub case_probs: BTreeMap<u8, f64>,
    pub extended_counts: Vec<ExtendedCount>,
    /// Field size `3`, `4`, `5`.
    pub team_count_counts: BTreeMap<u8, u64>,
    pub team_count_probs: BTreeMap<u8, f64>,
    pub mean_team_count: f64,
    pub per_team_stats: Vec<TeamPointStats>,
    pub champion_counts: Option<Vec<(TeamId, u64)>>,
}

impl SimReport {
    pub fn case_prob(&self, id: u8) -> f64 {
        self.case_probs.get(&id).copied().unwrap_or(0.0)
    }

    pub fn team_count_prob(&self, k: u8) -> f64 {
        self.team_count_probs.get(&k).copied().unwrap_or(0.0)
    }

    pub fn extended_total(&self) -> u64 {
        self.extended_counts.iter().map(|e| e.count).sum()
    }

    /// Arithmetic identities every report must satisfy; returns each failure.
    pub fn consistency_errors(&self) -> Vec<String> {
        let mut out = Vec::new();
        let n = self.replications;
        let cases: u64 = self.case_counts.values().sum::<u64>() + self.extended_total();
        if cases != n {
            out.push(format!("case counts sum to {cases}, expected {n}"));
        }
        let sizes: u64 = self.team_count_counts.values().sum();
        if sizes != n {
            out.push(format!("team-count counts sum to {sizes}, expected {n}"));
        }
        for k in 3u8..=5 {
            let from_cases: u64 = self
                .case_counts
                .iter()
                .filter(|(&id, _)| team_count(OverlapCase::Table(id)) == usize::from(k))
                .map(|(_, c)| c)
                .sum::<u64>()
                + self.extended_counts.iter().filter(|e| e.team_count == usize::from(k)).map(|e| e.count).sum::<u64>();
            let direct = self.team_count_counts.get(&k).copied().unwrap_or(0);
            if from_cases != direct {
                out.push(format!("{direct} seasons with {k} teams, but cases imply {from_cases}"));
            }
        }
        let psum: f64 = self.case_probs.values().sum::<f64>() + self.extended_total() as f64 / n as f64;
        if (psum - 1.0).abs() > 1e-12 {
            out.push(format!("case probabilities sum to {psum}"));
        }
        let mean: f64 = (3u8..=5).map(|k| f64::from(k) * self.team_count_prob(k)).sum();
        if (mean - self.mean_team_count).abs() > 1e-12 {
            out.push(format!("mean team count {} differs from sum k*P(k) = {mean}", self.mean_team_count));
        }
        out
    }

    /// Fixed-width text tables of field sizes and cases, rounded to 4 places.
    pub fn render_table(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "model {}  replications {}  seed {}", self.model, self.replications, self.seed);
        let _ = writeln!(s);
        let _ = writeln!(s, "{:<6} {:>8}  case #", "teams", "prob");
        let groups = [(3u8, "4, 6, 7, 8"), (4, "2, 3, 5"), (5, "1")];
        for (k, cases) in groups {
            let _ = writeln!(s, "{:<6} {:>8.4}  {}", k, self.team_count_prob(k), cases);
        }
        let _ = writeln!(s, "{:<6} {:>8.4}", "mean", self.mean_team_count);
        let _ = writeln!(s);
        let _ = writeln!(s, "{:<6} {:>8}  {:>8}", "case", "teams", "prob");
        for id in 1u8..=8 {
            let _ = writeln!(s, "{:<6} {:>8}  {:>8.4}", id, team_count(OverlapCase::Table(id)), self.case_prob(id));
        }
        for e in self.extended_counts.iter().filter(|e| e.count > 0) {
            let p = e.count as f64 / self.replications as f64;
            let _ = writeln!(s, "{:<6} {:>8}  {:>8.4}  ({})", "ext", e.team_count, p, e.label);
        }
        s
    }
}

/// Integer tallies of a batch of replications.
#[derive(Debug, Clone)]
struct Tally {
    cases: [u64; 8],
    extended: [u64; ExtendedCase::ALL.len()],
    sizes: [u64; 3],
    points: Vec<u64>,
    points_sq: Vec<u64>,
    champions: Vec<u64>,
}

impl Tally {
    fn new(n_teams: usize) -> Self {
        Tally {
            cases: [0; 8],
            extended: [0; ExtendedCase::ALL.len()],
            sizes: [0; 3],
            points: vec![0; n_teams],
            points_sq: vec![0; n_teams],
            champions: vec![0; n_teams],
        }
    }

    fn merge(mut self, other: Tally) -> Tally {
        for (a, b) in self.cases.iter_mut().zip(other.cases) {
            *a += b;
        }
        for (a, b) in self.extended.iter_mut().zip(other.extended) {
            *a += b;
        }
        for (a, b) in self.sizes.iter_mut().zip(other.sizes) {
            *a += b;
        }
        for (a, b) in self.points.iter_mut().zip(&other.points) {
            *a += b;
        }
        for (a, b) in self.points_sq.iter_mut().zip(&other.points_sq) {
            *a += b;
        }
        for (a, b) in self.champions.iter_mut().zip(&other.champions) {
            *a += b;
        }
        self
    }
}

fn replicate(cfg: &SimConfig, index: u64, fixed: Option<&SeasonSchedule>, tally: &mut Tally) -> Result<()> {
    let mut rng = replication_stream(cfg.master_seed, index);
    let schedule_seed = rng.next_u64();
    let tiebreak_seed = rng.next_u64();
    let drawn;
    let schedule = match fixed {
        Some(s) => s,
        None => {
            drawn = generate_season_schedule(cfg.league.n_teams(), schedule_seed)?;
            &drawn
        }
    };
    let league = &cfg.league;
    let coeffs = cfg.coeffs.as_ref();
    let scores: Vec<_> = schedule
        .fixtures
        .iter()
        .map(|f| {
            let (mh, ma) = mu_unchecked(cfg.model, league.team(f.home), league.team(f.away), league, coeffs);
            draw_score(mh, ma, &mut rng)
        })
        .collect();
    let outcome = build_tables(schedule, &scores, tiebreak_seed)?;
    let q = select_qualifiers(&outcome, cfg.exclude_low_winners);
    let case = classify_overlap(&q);
    match case {
        OverlapCase::Table(id) => tally.cases[usize::from(id) - 1] += 1,
        OverlapCase::Extended(e) => {
            let k = ExtendedCase::ALL.iter().position(|x| *x == e).expect("extended case is enumerated");
            tally.extended[k] += 1;
        }
    }
    tally.sizes[team_count(case) - 3] += 1;
    for row in &outcome.total_table {
        let p = u64::from(row.points);
        tally.points[row.team_id.index()] += p;
        tally.points_sq[row.team_id.index()] += p * p;
    }
    if cfg.simulate_postseason {
        let bracket = build_bracket_official(&q, case)?;
        let champion = simulate_bracket(&bracket, cfg.model, league, coeffs, &mut rng, cfg.draw_rule)?;
        tally.champions[champion.index()] += 1;
    }
    Ok(())
}

fn point_stats(league: &LeagueParams, tally: &Tally, n: u64) -> Vec<TeamPointStats> {
    league
        .teams
        .iter()
        .map(|t| {
            let k = t.team_id.index();
            let (sum, sq) = (u128::from(tally.points[k]), u128::from(tally.points_sq[k]));
            let n128 = u128::from(n);
            let mean_points = sum as f64 / n as f64;
            // Sample variance from exact integer moments.
            let std_points = if n > 1 {
                let num = n128 * sq - sum * sum;
                (num as f64 / (n128 * (n128 - 1)) as f64).sqrt()
            } else {
                0.0
            };
            TeamPointStats { team_id: t.team_id, name: t.name.clone(), mean_points, std_points }
        })
        .collect()
}

pub fn run_simulation(cfg: &SimConfig) -> Result<SimReport> {
    cfg.validate()?;
    let n_teams = cfg.league.n_teams();
    let fixed = if cfg.fixed_schedule {
        Some(generate_season_schedule(n_teams, replication_stream(cfg.master_seed, u64::MAX).next_u64())?)
    } else {
        None
    };

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.n_workers)
        .build()
        .map_err(|e| invalid(format!("cannot start worker pool: {e}")))?;
    let tally = pool.install(|| {
        (0..cfg.n_replications)
            .into_par_iter()
            .try_fold(
                || Tally::new(n_teams),
                |mut t, i| {
                    replicate(cfg, i, fixed.as_ref(), &mut t)?;
                    Ok::<_, Error>(t)
                },
            )
            .try_reduce(|| Tally::new(n_teams), |a, b| Ok(a.merge(b)))
    })?;

    let n = cfg.n_replications;
    let nf = n as f64;
    let case_counts: BTreeMap<u8, u64> = (1u8..=8).zip(tally.cases).collect();
    let case_probs = case_counts.iter().map(|(&k, &c)| (k, c as f64 / nf)).collect();
    let extended_counts = ExtendedCase::ALL
        .iter()
        .zip(tally.extended)
        .map(|(e, count)| ExtendedCount { case: *e, label: e.label().to_string(), team_count: e.team_count(), count })
        .collect();
    let team_count_counts: BTreeMap<u8, u64> = (3u8..=5).zip(tally.sizes).collect();
    let team_count_probs = team_count_counts.iter().map(|(&k, &c)| (k, c as f64 / nf)).collect();
    let weighted: u64 = team_count_counts.iter().map(|(&k, &c)| u64::from(k) * c).sum();
    let mean_team_count = weighted as f64 / nf;
    let champion_counts = cfg.simulate_postseason.then(|| {
        cfg.league.teams.iter().map(|t| (t.team_id, tally.champions[t.team_id.index()])).collect()
    });

    Ok(SimReport {
        model: cfg.model,
        replications: n,
        seed: cfg.master_seed,
        n_teams,
        exclude_low_winners: cfg.exclude_low_winners,
        fixed_schedule: cfg.fixed_schedule,
        case_counts,
        case_probs,
        extended_counts,
        team_count_counts,
        team_count_probs,
        mean_team_count,
        per_team_stats: point_stats(&cfg.league, &tally, n),
        champion_counts,
    })
}

/// Mean and standard deviation of each team's season points.
pub fn per_team_point_stats(cfg: &SimConfig) -> Result<Vec<TeamPointStats>> {
    Ok(run_simulation(cfg)?.per_team_stats)
}

/// Signed error of a simulated mean against the actual points, in standard
/// deviations: `(mean - actual) / std`. Positive when the simulation
/// over-predicts.
pub fn normalized_error(actual_points: f64, mean: f64, std: f64) -> Result<f64> {
    if !(std.is_finite() && std > 0.0) {
        return Err(Error::UndefinedStatistic(format!("normalized error needs a positive standard deviation, got {std}")));
    }
    Ok((mean - actual_points) / std)
}
