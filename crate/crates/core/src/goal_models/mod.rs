//! Match-score generation under the five Poisson goal models.
//!
//! Every model draws the two sides' goals independently from Poisson
//! distributions; the models differ only in how the two means are formed:
//!
//! | model | home mean | away mean |
//! |-------|-----------|-----------|
//! | M1 | `λ_all` | `λ_all` |
//! | M2 | home `λ_gf` | away `λ_gf` |
//! | M3 | (home `λ_gf` + away `λ_ga`) / 2 | (away `λ_gf` + home `λ_ga`) / 2 |
//! | M4 | (home `λ_gf_h` + away `λ_ga_a`) / 2 | (away `λ_gf_a` + home `λ_ga_h`) / 2 |
//! | M5 | `a1·λ_gf + a2·λ_ga(opp) + a3`, floored at 0 | same, mirrored |
//!
//! `λ_all` is goals per game *per team*, so a match averages `2·λ_all` goals.

mod fit;
mod poisson;

pub use fit::{bin_history, fit_m5, BinnedCell, FitOptions, HistoryRecord, Regressor, Weighting};
pub use poisson::{ln_factorial, poisson_pmf, sample_poisson};

use crate::error::{invalid, Result};
use crate::TeamId;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TeamParams {
    pub team_id: TeamId,
    #[serde(default)]
    pub name: String,
    pub lambda_gf: f64,
    pub lambda_ga: f64,
    pub lambda_gf_h: f64,
    pub lambda_gf_a: f64,
    pub lambda_ga_h: f64,
    pub lambda_ga_a: f64,
}

impl TeamParams {
    /// A team whose every rate equals `lambda`.
    pub fn uniform(team_id: TeamId, lambda: f64) -> Self {
        TeamParams {
            team_id,
            name: format!("team{}", team_id.0),
            lambda_gf: lambda,
            lambda_ga: lambda,
            lambda_gf_h: lambda,
            lambda_gf_a: lambda,
            lambda_ga_h: lambda,
            lambda_ga_a: lambda,
        }
    }

    fn rates(&self) -> [(&'static str, f64); 6] {
        [
            ("lambda_gf", self.lambda_gf),
            ("lambda_ga", self.lambda_ga),
            ("lambda_gf_h", self.lambda_gf_h),
            ("lambda_gf_a", self.lambda_gf_a),
            ("lambda_ga_h", self.lambda_ga_h),
            ("lambda_ga_a", self.lambda_ga_a),
        ]
    }

    pub fn validate(&self) -> Result<()> {
        for (field, v) in self.rates() {
            if !v.is_finite() || v < 0.0 {
                return Err(invalid(format!("team {}: {field} must be finite and >= 0, got {v}", self.team_id)));
            }
        }
        Ok(())
    }
}

/// League-wide scoring data. Team `k` in `teams` must carry `TeamId(k)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeagueParams {
    pub lambda_all: f64,
    pub teams: Vec<TeamParams>,
}

impl LeagueParams {
    pub fn new(lambda_all: f64, teams: Vec<TeamParams>) -> Result<Self> {
        let league = LeagueParams { lambda_all, teams };
        league.validate()?;
        Ok(league)
    }

    /// `n_teams` interchangeable teams, every rate equal to `lambda_all`.
    pub fn identical(n_teams: usize, lambda_all: f64) -> Result<Self> {
        let teams = (0..n_teams as u32).map(|k| TeamParams::uniform(TeamId(k), lambda_all)).collect();
        Self::new(lambda_all, teams)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.lambda_all.is_finite() || self.lambda_all < 0.0 {
            return Err(invalid(format!("lambda_all must be finite and >= 0, got {}", self.lambda_all)));
        }
        for (k, team) in self.teams.iter().enumerate() {
            if team.team_id.index() != k {
                return Err(invalid(format!(
                    "team ids must be 0..n-1 in row order: row {k} carries id {}",
                    team.team_id
                )));
            }
            team.validate()?;
        }
        Ok(())
    }

    pub fn team(&self, id: TeamId) -> &TeamParams {
        &self.teams[id.index()]
    }

    pub fn n_teams(&self) -> usize {
        self.teams.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GoalModel {
    M1,
    M2,
    M3,
    M4,
    M5,
}

impl GoalModel {
    pub const ALL: [GoalModel; 5] = [GoalModel::M1, GoalModel::M2, GoalModel::M3, GoalModel::M4, GoalModel::M5];
}

impl fmt::Display for GoalModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            GoalModel::M1 => "m1",
            GoalModel::M2 => "m2",
            GoalModel::M3 => "m3",
            GoalModel::M4 => "m4",
            GoalModel::M5 => "m5",
        };
        f.write_str(s)
    }
}

impl FromStr for GoalModel {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "m1" => Ok(GoalModel::M1),
            "m2" => Ok(GoalModel::M2),
            "m3" => Ok(GoalModel::M3),
            "m4" => Ok(GoalModel::M4),
            "m5" => Ok(GoalModel::M5),
            other => Err(invalid(format!("unknown goal model '{other}', expected m1..m5"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegressionCoeffs {
    pub a1: f64,
    pub a2: f64,
    pub a3: f64,
    pub r_squared: f64,
    pub n_bins_used: usize,
}

impl RegressionCoeffs {
    /// Coefficients supplied by hand rather than fitted.
    pub fn manual(a1: f64, a2: f64, a3: f64) -> Self {
        RegressionCoeffs { a1, a2, a3, r_squared: 1.0, n_bins_used: 0 }
    }

    pub fn validate(&self) -> Result<()> {
        if ![self.a1, self.a2, self.a3].iter().all(|c| c.is_finite()) {
            return Err(invalid("regression coefficients must be finite"));
        }
        if !(0.0..=1.0).contains(&self.r_squared) {
            return Err(invalid(format!("r_squared must lie in [0, 1], got {}", self.r_squared)));
        }
        Ok(())
    }

    /// Expected goals for an attacker with `gf` against a defender with `ga`.
    pub fn predict(&self, gf: f64, ga: f64) -> f64 {
        (self.a1 * gf + self.a2 * ga + self.a3).max(0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchScore {
    pub home_goals: u32,
    pub away_goals: u32,
}

impl MatchScore {
    pub fn new(home_goals: u32, away_goals: u32) -> Self {
        MatchScore { home_goals, away_goals }
    }
}

/// Checks that `coeffs` is supplied exactly when the model is M5.
pub fn check_model_inputs(model: GoalModel, coeffs: Option<&RegressionCoeffs>) -> Result<()> {
    match (model, coeffs) {
        (GoalModel::M5, None) => Err(invalid("model m5 requires regression coefficients")),
        (GoalModel::M5, Some(c)) => c.validate(),
        (m, Some(_)) => Err(invalid(format!("regression coefficients are only used by m5, not {m}"))),
        (_, None) => Ok(()),
    }
}

/// Poisson means `(home, away)` for one fixture.
pub fn match_mu(
    model: GoalModel,
    home: &TeamParams,
    away: &TeamParams,
    league: &LeagueParams,
    coeffs: Option<&RegressionCoeffs>,
) -> Result<(f64, f64)> {
    check_model_inputs(model, coeffs)?;
    Ok(mu_unchecked(model, home, away, league, coeffs))
}

pub(crate) fn mu_unchecked(
    model: GoalModel,
    home: &TeamParams,
    away: &TeamParams,
    league: &LeagueParams,
    coeffs: Option<&RegressionCoeffs>,
) -> (f64, f64) {
    match model {
        GoalModel::M1 => (league.lambda_all, league.lambda_all),
        GoalModel::M2 => (home.lambda_gf, away.lambda_gf),
        GoalModel::M3 => (
            (home.lambda_gf + away.lambda_ga) / 2.0,
            (away.lambda_gf + home.lambda_ga) / 2.0,
        ),
        GoalModel::M4 => (
            (home.lambda_gf_h + away.lambda_ga_a) / 2.0,
            (away.lambda_gf_a + home.lambda_ga_h) / 2.0,
        ),
        GoalModel::M5 => {
            let c = coeffs.expect("m5 coefficients checked by caller");
            (c.predict(home.lambda_gf, away.lambda_ga), c.predict(away.lambda_gf, home.lambda_ga))
        }
    }
}

pub fn sample_match<R: Rng + ?Sized>(
    model: GoalModel,
    home: &TeamParams,
    away: &TeamParams,
    league: &LeagueParams,
    coeffs: Option<&RegressionCoeffs>,
    rng: &mut R,
) -> Result<MatchScore> {
    let (mu_home, mu_away) = match_mu(model, home, away, league, coeffs)?;
    Ok(draw_score(mu_home, mu_away, rng))
}

pub(crate) fn draw_score<R: Rng + ?Sized>(mu_home: f64, mu_away: f64, rng: &mut R) -> MatchScore {
    let home_goals = poisson::draw(mu_home, rng) as u32;
    let away_goals = poisson::draw(mu_away, rng) as u32;
    MatchScore { home_goals, away_goals }
}
