use super::{Bracket, Entrant, KnockoutMatch};
use crate::error::Result;
use crate::goal_models::{check_model_inputs, draw_score, mu_unchecked, GoalModel, LeagueParams, RegressionCoeffs};
use crate::TeamId;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::str::FromStr;

/// How a level knockout tie is settled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DrawRule {
    /// The side ranked higher in the total table goes through.
    #[default]
    HigherRank,
    CoinFlip,
}

impl FromStr for DrawRule {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "higher-rank" | "higher_rank" => Ok(DrawRule::HigherRank),
            "coin-flip" | "coin_flip" => Ok(DrawRule::CoinFlip),
            other => Err(crate::error::invalid(format!("unknown draw rule '{other}'"))),
        }
    }
}

struct Ctx<'a, R: ?Sized> {
    bracket: &'a Bracket,
    model: GoalModel,
    league: &'a LeagueParams,
    coeffs: Option<&'a RegressionCoeffs>,
    draw_rule: DrawRule,
    rng: &'a mut R,
}

impl<R: Rng + ?Sized> Ctx<'_, R> {
    fn rank(&self, t: TeamId) -> usize {
        self.bracket.rank_of(t).unwrap_or(usize::MAX)
    }

    fn settle(&mut self, a: TeamId, b: TeamId, goals_a: u32, goals_b: u32) -> TeamId {
        if goals_a != goals_b {
            return if goals_a > goals_b { a } else { b };
        }
        match self.draw_rule {
            DrawRule::HigherRank => {
                if self.rank(a) <= self.rank(b) {
                    a
                } else {
                    b
                }
            }
            DrawRule::CoinFlip => {
                if self.rng.random::<bool>() {
                    a
                } else {
                    b
                }
            }
        }
    }

    /// Goals `(home, away)` for one game.
    fn play(&mut self, home: TeamId, away: TeamId) -> (u32, u32) {
        let (mh, ma) = mu_unchecked(self.model, self.league.team(home), self.league.team(away), self.league, self.coeffs);
        let s = draw_score(mh, ma, self.rng);
        (s.home_goals, s.away_goals)
    }

    /// Single match; without a named venue the higher-ranked side hosts.
    fn single(&mut self, a: TeamId, b: TeamId, venue: Option<TeamId>) -> TeamId {
        let (home, away) = match venue {
            Some(v) if v == b => (b, a),
            Some(_) => (a, b),
            None if self.rank(a) <= self.rank(b) => (a, b),
            None => (b, a),
        };
        let (gh, ga) = self.play(home, away);
        self.settle(home, away, gh, ga)
    }

    fn resolve(&self, e: Entrant, first: &[TeamId]) -> TeamId {
        match e {
            Entrant::Team(t) => t,
            Entrant::WinnerOf(k) => first[k],
        }
    }

    fn knockout(&mut self, m: &KnockoutMatch, first: &[TeamId]) -> TeamId {
        let (a, b) = (self.resolve(m.higher, first), self.resolve(m.lower, first));
        self.single(a, b, m.venue)
    }
}

/// Play out a bracket and return the champion.
///
/// Single matches are decided by goals, then by `draw_rule`. The Championship
/// is two legs, one at each side's ground, decided on aggregate and then by
/// `draw_rule`.
pub fn simulate_bracket<R: Rng + ?Sized>(
    b: &Bracket,
    model: GoalModel,
    league: &LeagueParams,
    coeffs: Option<&RegressionCoeffs>,
    rng: &mut R,
    draw_rule: DrawRule,
) -> Result<TeamId> {
    check_model_inputs(model, coeffs)?;
    for p in &b.participants {
        if p.team.index() >= league.n_teams() {
            return Err(crate::error::invalid(format!("bracket team {} is not in the league", p.team)));
        }
    }
    let mut ctx = Ctx { bracket: b, model, league, coeffs, draw_rule, rng };
    let first: Vec<TeamId> = b.first_round.iter().map(|m| ctx.knockout(m, &[])).collect();
    let finalist = ctx.knockout(&b.second_round, &first);
    let seed = b.championship_seed;
    let (s1, f1) = ctx.play(finalist, seed);
    let (f2, s2) = ctx.play(seed, finalist);
    Ok(ctx.settle(seed, finalist, f2 + f1, s1 + s2))
}
