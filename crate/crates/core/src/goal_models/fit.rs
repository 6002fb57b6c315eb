//! Linear expected-goals model fitted on binned history.
//!
//! Records `(scorer λ_gf, opponent λ_ga, goals)` are dropped into square
//! cells of side `bin_width` anchored at the origin (`[k·w, (k+1)·w)`). Cells
//! with fewer than `min_games` records are discarded; the remaining cell means
//! are regressed on the cell's representative rates by least squares.

use super::RegressionCoeffs;
use crate::error::{invalid, Error, Result};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HistoryRecord {
    pub scorer_lambda_gf: f64,
    pub opponent_lambda_ga: f64,
    pub goals: u32,
}

/// Which point stands in for a cell on the regressor axes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regressor {
    #[default]
    CellCenter,
    CellMean,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Weighting {
    #[default]
    Unweighted,
    GameCount,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    pub bin_width: f64,
    pub min_games: usize,
    pub regressor: Regressor,
    pub weighting: Weighting,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions { bin_width: 0.4, min_games: 30, regressor: Regressor::CellCenter, weighting: Weighting::Unweighted }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BinnedCell {
    pub gf_bin: i64,
    pub ga_bin: i64,
    pub games: usize,
    pub mean_goals: f64,
    pub center: (f64, f64),
    pub mean_lambda: (f64, f64),
}

fn sorted_sum(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    xs.into_iter().sum()
}

/// Every occupied cell, in `(gf_bin, ga_bin)` order. Sums are formed so the
/// result does not depend on record order.
pub fn bin_history(history: &[HistoryRecord], bin_width: f64) -> Result<Vec<BinnedCell>> {
    if !bin_width.is_finite() || bin_width <= 0.0 {
        return Err(invalid(format!("bin width must be finite and > 0, got {bin_width}")));
    }
    if history.is_empty() {
        return Err(invalid("history is empty"));
    }
    struct Acc {
        goals: u64,
        gf: Vec<f64>,
        ga: Vec<f64>,
    }
    let mut cells: BTreeMap<(i64, i64), Acc> = BTreeMap::new();
    for (k, r) in history.iter().enumerate() {
        for v in [r.scorer_lambda_gf, r.opponent_lambda_ga] {
            if !v.is_finite() || v < 0.0 {
                return Err(invalid(format!("history record {k}: rates must be finite and >= 0")));
            }
        }
        let key = (
            (r.scorer_lambda_gf / bin_width).floor() as i64,
            (r.opponent_lambda_ga / bin_width).floor() as i64,
        );
        let acc = cells.entry(key).or_insert_with(|| Acc { goals: 0, gf: Vec::new(), ga: Vec::new() });
        acc.goals += u64::from(r.goals);
        acc.gf.push(r.scorer_lambda_gf);
        acc.ga.push(r.opponent_lambda_ga);
    }
    Ok(cells
        .into_iter()
        .map(|((gx, gy), acc)| {
            let games = acc.gf.len();
            let n = games as f64;
            BinnedCell {
                gf_bin: gx,
                ga_bin: gy,
                games,
                mean_goals: acc.goals as f64 / n,
                center: ((gx as f64 + 0.5) * bin_width, (gy as f64 + 0.5) * bin_width),
                mean_lambda: (sorted_sum(acc.gf) / n, sorted_sum(acc.ga) / n),
            }
        })
        .collect())
}

/// Solve the 3x3 system by Gaussian elimination with partial pivoting.
fn solve3(mut a: [[f64; 3]; 3], mut b: [f64; 3]) -> Option<[f64; 3]> {
    let scale = a.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
    if scale == 0.0 {
        return None;
    }
    for col in 0..3 {
        let pivot = (col..3).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[pivot][col].abs() <= 1e-12 * scale {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..3 {
            let f = a[row][col] / a[col][col];
            for k in col..3 {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = [0.0; 3];
    for row in (0..3).rev() {
        let tail: f64 = (row + 1..3).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - tail) / a[row][row];
    }
    Some(x)
}

/// Fit `goals ≈ a1·λ_gf + a2·λ_ga + a3` on binned history.
pub fn fit_m5(history: &[HistoryRecord], opts: &FitOptions) -> Result<RegressionCoeffs> {
    let cells = bin_history(history, opts.bin_width)?;
    let occupied = cells.len();
    let kept: Vec<&BinnedCell> = cells.iter().filter(|c| c.games >= opts.min_games).collect();
    let insufficient = || Error::InsufficientData { occupied, retained: kept.len(), min_games: opts.min_games };
    if kept.len() < 3 {
        return Err(insufficient());
    }

    let points: Vec<(f64, f64, f64, f64)> = kept
        .iter()
        .map(|c| {
            let (x1, x2) = match opts.regressor {
                Regressor::CellCenter => c.center,
                Regressor::CellMean => c.mean_lambda,
            };
            let w = match opts.weighting {
                Weighting::Unweighted => 1.0,
                Weighting::GameCount => c.games as f64,
            };
            (x1, x2, c.mean_goals, w)
        })
        .collect();

    let mut xtx = [[0.0; 3]; 3];
    let mut xty = [0.0; 3];
    for &(x1, x2, y, w) in &points {
        let row = [x1, x2, 1.0];
        for i in 0..3 {
            for j in 0..3 {
                xtx[i][j] += w * row[i] * row[j];
            }
            xty[i] += w * row[i] * y;
        }
    }
    let [a1, a2, a3] = solve3(xtx, xty).ok_or_else(insufficient)?;

    let wsum: f64 = points.iter().map(|p| p.3).sum();
    let ybar = points.iter().map(|p| p.3 * p.2).sum::<f64>() / wsum;
    let (mut ss_res, mut ss_tot) = (0.0, 0.0);
    for &(x1, x2, y, w) in &points {
        let fitted = a1 * x1 + a2 * x2 + a3;
        ss_res += w * (y - fitted).powi(2);
        ss_tot += w * (y - ybar).powi(2);
    }
    let r_squared = if ss_tot > 0.0 { (1.0 - ss_res / ss_tot).clamp(0.0, 1.0) } else { 1.0 };

    Ok(RegressionCoeffs { a1, a2, a3, r_squared, n_bins_used: kept.len() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::goal_models::poisson::draw;
    use crate::rng::seeded;
    use proptest::prelude::*;
    use rand::Rng;

    fn planted(records_per_cell: usize, seed: u64) -> Vec<HistoryRecord> {
        let mut rng = seeded(seed);
        let mut out = Vec::new();
        for gx in 0..5 {
            for gy in 0..5 {
                for _ in 0..records_per_cell {
                    let gf = (gx as f64 + rng.random::<f64>()) * 0.4;
                    let ga = (gy as f64 + rng.random::<f64>()) * 0.4;
                    let mu = 0.7 * gf + 0.3 * ga + 0.1;
                    out.push(HistoryRecord { scorer_lambda_gf: gf, opponent_lambda_ga: ga, goals: draw(mu, &mut rng) as u32 });
                }
            }
        }
        out
    }

    #[test]
    fn recovers_planted_model() {
        let history = planted(10_000, 5);
        for regressor in [Regressor::CellCenter, Regressor::CellMean] {
            for weighting in [Weighting::Unweighted, Weighting::GameCount] {
                let opts = FitOptions { regressor, weighting, ..FitOptions::default() };
                let c = fit_m5(&history, &opts).unwrap();
                assert!((c.a1 - 0.7).abs() < 0.02, "{c:?}");
                assert!((c.a2 - 0.3).abs() < 0.02, "{c:?}");
                assert!((c.a3 - 0.1).abs() < 0.02, "{c:?}");
                assert!(c.r_squared > 0.99);
                assert_eq!(c.n_bins_used, 25);
            }
        }
    }

    #[test]
    fn exact_plane_is_recovered_exactly() {
        // Deterministic goals on cell centers: mean goals = 2*gf_bin + ga_bin.
        let mut history = Vec::new();
        for gx in 0..3i64 {
            for gy in 0..3i64 {
                for _ in 0..30 {
                    history.push(HistoryRecord {
                        scorer_lambda_gf: (gx as f64 + 0.5) * 0.4,
                        opponent_lambda_ga: (gy as f64 + 0.5) * 0.4,
                        goals: (2 * gx + gy) as u32,
                    });
                }
            }
        }
        let c = fit_m5(&history, &FitOptions::default()).unwrap();
        // goals = 2*(x/0.4 - 0.5) + (y/0.4 - 0.5) = 5x + 2.5y - 1.5
        assert!((c.a1 - 5.0).abs() < 1e-9);
        assert!((c.a2 - 2.5).abs() < 1e-9);
        assert!((c.a3 + 1.5).abs() < 1e-9);
        assert!((c.r_squared - 1.0).abs() < 1e-12);
    }

    #[test]
    fn single_cell_is_insufficient() {
        let history: Vec<_> = (0..100)
            .map(|k| HistoryRecord { scorer_lambda_gf: 1.1, opponent_lambda_ga: 1.3, goals: k % 3 })
            .collect();
        match fit_m5(&history, &FitOptions::default()) {
            Err(Error::InsufficientData { occupied: 1, retained: 1, min_games: 30 }) => {}
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn sparse_cells_are_discarded() {
        let mut history = planted(40, 9);
        // A far-away cell with only 29 records must not count.
        history.extend((0..29).map(|_| HistoryRecord { scorer_lambda_gf: 9.9, opponent_lambda_ga: 9.9, goals: 50 }));
        let c = fit_m5(&history, &FitOptions::default()).unwrap();
        assert_eq!(c.n_bins_used, 25);
    }

    #[test]
    fn collinear_cells_are_insufficient() {
        let history: Vec<_> = (0..3)
            .flat_map(|gx| {
                (0..30).map(move |_| HistoryRecord { scorer_lambda_gf: gx as f64 * 0.4 + 0.1, opponent_lambda_ga: 1.0, goals: 1 })
            })
            .collect();
        assert!(matches!(fit_m5(&history, &FitOptions::default()), Err(Error::InsufficientData { .. })));
    }

    #[test]
    fn rejects_bad_inputs() {
        let rec = HistoryRecord { scorer_lambda_gf: 1.0, opponent_lambda_ga: 1.0, goals: 1 };
        assert!(matches!(fit_m5(&[], &FitOptions::default()), Err(Error::InvalidArgument(_))));
        let zero = FitOptions { bin_width: 0.0, ..FitOptions::default() };
        assert!(matches!(fit_m5(&[rec], &zero), Err(Error::InvalidArgument(_))));
        let neg = HistoryRecord { scorer_lambda_gf: -1.0, ..rec };
        assert!(fit_m5(&[neg], &FitOptions::default()).is_err());
    }

    #[test]
    fn bins_are_half_open_at_origin() {
        let recs = [
            HistoryRecord { scorer_lambda_gf: 0.0, opponent_lambda_ga: 0.39, goals: 0 },
            HistoryRecord { scorer_lambda_gf: 0.4, opponent_lambda_ga: 0.8, goals: 0 },
        ];
        let cells = bin_history(&recs, 0.4).unwrap();
        assert_eq!((cells[0].gf_bin, cells[0].ga_bin), (0, 0));
        assert_eq!((cells[1].gf_bin, cells[1].ga_bin), (1, 2));
        assert!((cells[1].center.0 - 0.6).abs() < 1e-12);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn permutation_invariant(seed in any::<u64>(), rot in 0usize..1000) {
            let history = planted(40, seed);
            let mut shuffled = history.clone();
            shuffled.rotate_left(rot % history.len());
            shuffled.reverse();
            for regressor in [Regressor::CellCenter, Regressor::CellMean] {
                let opts = FitOptions { regressor, ..FitOptions::default() };
                let a = fit_m5(&history, &opts).unwrap();
                let b = fit_m5(&shuffled, &opts).unwrap();
                prop_assert_eq!(a, b);
            }
        }
    }
}
