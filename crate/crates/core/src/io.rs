//! CSV and JSON file formats.
//!
//! | file | columns |
//! |------|---------|
//! | teams | `team_id,name,lambda_gf,lambda_ga,lambda_gf_h,lambda_gf_a,lambda_ga_h,lambda_ga_a` |
//! | history | `scorer_lambda_gf,opponent_lambda_ga,goals` |
//! | schedule | `stage,round,home_id,away_id` |
//! | table | `rank,team_id,played,w,d,l,gf,ga,gd,points` |
//! | cases | `case_id,count,probability` |
//! | team counts | `team_count,probability` |
//!
//! All files carry a header row, are UTF-8 and use LF line endings.

use crate::error::{Error, Result};
use crate::goal_models::{HistoryRecord, RegressionCoeffs, TeamParams};
use crate::montecarlo::SimReport;
use crate::schedule::{Fixture, SeasonSchedule};
use crate::standings::TableRow;
use crate::TeamId;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use std::io::{Read, Write};

pub const TEAM_COLUMNS: [&str; 8] =
    ["team_id", "name", "lambda_gf", "lambda_ga", "lambda_gf_h", "lambda_gf_a", "lambda_ga_h", "lambda_ga_a"];
pub const HISTORY_COLUMNS: [&str; 3] = ["scorer_lambda_gf", "opponent_lambda_ga", "goals"];
pub const SCHEDULE_COLUMNS: [&str; 4] = ["stage", "round", "home_id", "away_id"];

fn malformed(line: u64, message: impl Into<String>) -> Error {
    Error::Malformed { line, message: message.into() }
}

fn from_csv(e: csv::Error) -> Error {
    let line = e.position().map(|p| p.line()).unwrap_or(0);
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        csv::ErrorKind::Deserialize { err, .. } => malformed(line, err.to_string()),
        other => malformed(line, format!("{other:?}")),
    }
}

fn writer<W: Write>(w: W) -> csv::Writer<W> {
    csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(w)
}

/// Deserialize every row, checking the header first. Returns `(line, row)`.
fn read_rows<T: DeserializeOwned, R: Read>(r: R, columns: &[&str]) -> Result<Vec<(u64, T)>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(r);
    let headers = rdr.headers().map_err(from_csv)?.clone();
    if headers.is_empty() || (headers.len() == 1 && headers[0].is_empty()) {
        return Err(malformed(1, "empty file, expected a header row"));
    }
    for col in columns {
        if !headers.iter().any(|h| h == *col) {
            return Err(malformed(1, format!("missing column '{col}' (expected {})", columns.join(","))));
        }
    }
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(from_csv)?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        let row: T = rec.deserialize(Some(&headers)).map_err(from_csv)?;
        rows.push((line, row));
    }
    if rows.is_empty() {
        return Err(malformed(2, "no data rows"));
    }
    Ok(rows)
}

/// Read team parameters; ids must be `0..n-1` in row order.
pub fn read_teams_csv<R: Read>(r: R) -> Result<Vec<TeamParams>> {
    let rows: Vec<(u64, TeamParams)> = read_rows(r, &TEAM_COLUMNS)?;
    let mut teams = Vec::with_capacity(rows.len());
    for (k, (line, team)) in rows.into_iter().enumerate() {
        if team.team_id.index() != k {
            return Err(malformed(line, format!("team_id {} out of order, expected {k}", team.team_id)));
        }
        team.validate().map_err(|e| malformed(line, e.to_string()))?;
        teams.push(team);
    }
    Ok(teams)
}

pub fn write_teams_csv<W: Write>(w: W, teams: &[TeamParams]) -> Result<()> {
    let mut wtr = writer(w);
    for t in teams {
        wtr.serialize(t).map_err(from_csv)?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn read_history_csv<R: Read>(r: R) -> Result<Vec<HistoryRecord>> {
    let rows: Vec<(u64, HistoryRecord)> = read_rows(r, &HISTORY_COLUMNS)?;
    rows.into_iter()
        .map(|(line, rec)| {
            let ok = [rec.scorer_lambda_gf, rec.opponent_lambda_ga].iter().all(|v| v.is_finite() && *v >= 0.0);
            if ok {
                Ok(rec)
            } else {
                Err(malformed(line, "rates must be finite and >= 0"))
            }
        })
        .collect()
}

pub fn write_history_csv<W: Write>(w: W, history: &[HistoryRecord]) -> Result<()> {
    let mut wtr = writer(w);
    for h in history {
        wtr.serialize(h).map_err(from_csv)?;
    }
    wtr.flush()?;
    Ok(())
}

#[derive(Debug, Serialize, Deserialize)]
struct ScheduleRow {
    stage: u8,
    round: u32,
    home_id: u32,
    away_id: u32,
}

pub fn write_schedule_csv<W: Write>(w: W, s: &SeasonSchedule) -> Result<()> {
    let mut wtr = writer(w);
    for f in &s.fixtures {
        wtr.serialize(ScheduleRow { stage: f.stage, round: f.round, home_id: f.home.0, away_id: f.away.0 })
            .map_err(from_csv)?;
    }
    wtr.flush()?;
    Ok(())
}

/// Read a schedule; the team count is taken as one more than the largest id.
pub fn read_schedule_csv<R: Read>(r: R) -> Result<SeasonSchedule> {
    let rows: Vec<(u64, ScheduleRow)> = read_rows(r, &SCHEDULE_COLUMNS)?;
    let n_teams = rows.iter().map(|(_, r)| r.home_id.max(r.away_id) as usize + 1).max().unwrap_or(0);
    let fixtures = rows
        .into_iter()
        .map(|(_, r)| Fixture { round: r.round, stage: r.stage, home: TeamId(r.home_id), away: TeamId(r.away_id) })
        .collect();
    Ok(SeasonSchedule { n_teams, fixtures })
}

#[derive(Debug, Serialize)]
struct TableCsvRow {
    rank: usize,
    team_id: u32,
    played: u32,
    w: u32,
    d: u32,
    l: u32,
    gf: u32,
    ga: u32,
    gd: i64,
    points: u32,
}

pub fn write_table_csv<W: Write>(w: W, ranked: &[TableRow]) -> Result<()> {
    let mut wtr = writer(w);
    for (k, r) in ranked.iter().enumerate() {
        wtr.serialize(TableCsvRow {
            rank: k + 1,
            team_id: r.team_id.0,
            played: r.played,
            w: r.wins,
            d: r.draws,
            l: r.losses,
            gf: r.goals_for,
            ga: r.goals_against,
            gd: r.goal_difference(),
            points: r.points,
        })
        .map_err(from_csv)?;
    }
    wtr.flush()?;
    Ok(())
}

/// `case_id,count,probability`: tabulated cases 1..8, then extended cases by label.
pub fn write_case_csv<W: Write>(w: W, report: &SimReport) -> Result<()> {
    let mut wtr = writer(w);
    wtr.write_record(["case_id", "count", "probability"]).map_err(from_csv)?;
    let n = report.replications as f64;
    for (id, count) in &report.case_counts {
        wtr.write_record([id.to_string(), count.to_string(), (*count as f64 / n).to_string()]).map_err(from_csv)?;
    }
    for e in &report.extended_counts {
        wtr.write_record([e.label.clone(), e.count.to_string(), (e.count as f64 / n).to_string()])
            .map_err(from_csv)?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn write_team_count_csv<W: Write>(w: W, report: &SimReport) -> Result<()> {
    let mut wtr = writer(w);
    wtr.write_record(["team_count", "probability"]).map_err(from_csv)?;
    for (k, p) in &report.team_count_probs {
        wtr.write_record([k.to_string(), p.to_string()]).map_err(from_csv)?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn read_coeffs_json<R: Read>(r: R) -> Result<RegressionCoeffs> {
    let c: RegressionCoeffs = serde_json::from_reader(r).map_err(|e| malformed(e.line() as u64, e.to_string()))?;
    c.validate().map_err(|e| malformed(0, e.to_string()))?;
    Ok(c)
}
