use j1sim_core::goal_models::{GoalModel, LeagueParams, RegressionCoeffs, TeamParams};
use j1sim_core::io::read_teams_csv;
use j1sim_core::montecarlo::{run_simulation, SimConfig, SimReport};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use std::path::Path;

fn synthetic_league() -> LeagueParams {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/teams_synthetic.csv");
    let teams = read_teams_csv(std::fs::File::open(path).unwrap()).unwrap();
    LeagueParams::new(1.35, teams).unwrap()
}

fn run(model: GoalModel, league: LeagueParams, coeffs: Option<RegressionCoeffs>, reps: u64, seed: u64) -> SimReport {
    let mut cfg = SimConfig::new(model, league);
    cfg.coeffs = coeffs;
    cfg.n_replications = reps;
    cfg.master_seed = seed;
    let report = run_simulation(&cfg).unwrap();
    assert!(report.consistency_errors().is_empty(), "{:?}", report.consistency_errors());
    report
}

#[test]
fn spread_league_has_fewer_five_team_postseasons() {
    let reps = 100_000u64;
    let m1 = run(GoalModel::M1, LeagueParams::identical(18, 1.35).unwrap(), None, reps, 1);
    let m2 = run(GoalModel::M2, synthetic_league(), None, reps, 2);
    let (p1, p2) = (m1.team_count_prob(5), m2.team_count_prob(5));
    let n = reps as f64;
    let se = (p1 * (1.0 - p1) / n + p2 * (1.0 - p2) / n).sqrt();
    assert!(p1 - p2 > 3.0 * se, "P(5): m1 {p1}, m2 {p2}, se {se}");
    assert!(m1.mean_team_count > m2.mean_team_count);
}

/// Knuth's product method; slow but short enough to check by eye.
fn oracle_poisson(lambda: f64, rng: &mut StdRng) -> u32 {
    let limit = (-lambda).exp();
    let mut k = 0;
    let mut p: f64 = rng.random();
    while p > limit {
        k += 1;
        p *= rng.random::<f64>();
    }
    k
}

/// Expected goals for `h` at home against `a`, from the model definitions.
fn oracle_mu(model: GoalModel, h: &TeamParams, a: &TeamParams, c: &RegressionCoeffs) -> (f64, f64) {
    match model {
        GoalModel::M1 => unreachable!(),
        GoalModel::M2 => (h.lambda_gf, a.lambda_gf),
        GoalModel::M3 => ((h.lambda_gf + a.lambda_ga) / 2.0, (a.lambda_gf + h.lambda_ga) / 2.0),
        GoalModel::M4 => ((h.lambda_gf_h + a.lambda_ga_a) / 2.0, (a.lambda_gf_a + h.lambda_ga_h) / 2.0),
        GoalModel::M5 => (
            (c.a1 * h.lambda_gf + c.a2 * a.lambda_ga + c.a3).max(0.0),
            (c.a1 * a.lambda_gf + c.a2 * h.lambda_ga + c.a3).max(0.0),
        ),
    }
}

/// Mean and std of season points by direct simulation: every ordered pair
/// meets once with the first team at home, which is the same set of fixtures
/// as a full season whatever the round order.
fn oracle_points(model: GoalModel, league: &LeagueParams, c: &RegressionCoeffs, seasons: usize) -> Vec<(f64, f64)> {
    let n = league.n_teams();
    let mut rng = StdRng::seed_from_u64(99);
    let mut sum = vec![0.0; n];
    let mut sum_sq = vec![0.0; n];
    for _ in 0..seasons {
        let mut pts = vec![0.0; n];
        for i in 0..n {
            for j in 0..n {
                if i == j {
                    continue;
                }
                let (mh, ma) = oracle_mu(model, &league.teams[i], &league.teams[j], c);
                let (gh, ga) = (oracle_poisson(mh, &mut rng), oracle_poisson(ma, &mut rng));
                match gh.cmp(&ga) {
                    std::cmp::Ordering::Greater => pts[i] += 3.0,
                    std::cmp::Ordering::Equal => {
                        pts[i] += 1.0;
                        pts[j] += 1.0;
                    }
                    std::cmp::Ordering::Less => pts[j] += 3.0,
                }
            }
        }
        for t in 0..n {
            sum[t] += pts[t];
            sum_sq[t] += pts[t] * pts[t];
        }
    }
    let s = seasons as f64;
    (0..n)
        .map(|t| {
            let mean = sum[t] / s;
            (mean, (sum_sq[t] / s - mean * mean).sqrt())
        })
        .collect()
}

#[test]
fn per_team_points_match_direct_resimulation() {
    let league = synthetic_league();
    let coeffs = RegressionCoeffs::manual(0.6, 0.4, 0.0);
    let (reps, seasons) = (20_000u64, 5_000usize);
    for (k, model) in [GoalModel::M2, GoalModel::M3, GoalModel::M4, GoalModel::M5].into_iter().enumerate() {
        let c = (model == GoalModel::M5).then_some(coeffs);
        let report = run(model, league.clone(), c, reps, 10 + k as u64);
        let oracle = oracle_points(model, &league, &coeffs, seasons);
        for (stats, (o_mean, o_std)) in report.per_team_stats.iter().zip(oracle) {
            let se = (stats.std_points.powi(2) / reps as f64 + o_std.powi(2) / seasons as f64).sqrt();
            assert!(
                (stats.mean_points - o_mean).abs() < 4.5 * se,
                "{model} team {}: mean {} vs oracle {o_mean}",
                stats.team_id,
                stats.mean_points
            );
            assert!(
                (stats.std_points - o_std).abs() < 0.05 * o_std,
                "{model} team {}: std {} vs oracle {o_std}",
                stats.team_id,
                stats.std_points
            );
            assert!((6.0..=9.0).contains(&stats.std_points), "{model} team {}: std {}", stats.team_id, stats.std_points);
        }
    }
}

#[test]
fn fixed_schedule_and_exclusion_keep_reports_consistent() {
    let mut cfg = SimConfig::new(GoalModel::M4, synthetic_league());
    cfg.n_replications = 5_000;
    cfg.master_seed = 21;
    cfg.fixed_schedule = true;
    cfg.exclude_low_winners = true;
    let a = run_simulation(&cfg).unwrap();
    assert!(a.consistency_errors().is_empty());
    assert_eq!(a, run_simulation(&cfg).unwrap());
    cfg.fixed_schedule = false;
    let b = run_simulation(&cfg).unwrap();
    assert!(b.consistency_errors().is_empty());
    assert_ne!(a.case_counts, b.case_counts);
}

#[test]
fn champions_cover_every_replication() {
    let mut cfg = SimConfig::new(GoalModel::M2, synthetic_league());
    cfg.n_replications = 5_000;
    cfg.master_seed = 8;
    cfg.simulate_postseason = true;
    let r = run_simulation(&cfg).unwrap();
    let champions = r.champion_counts.unwrap();
    assert_eq!(champions.iter().map(|(_, c)| c).sum::<u64>(), 5_000);
    let best = champions.iter().max_by_key(|(_, c)| *c).unwrap().0;
    assert_eq!(best.0, 0, "the strongest team should win most often: {champions:?}");
}
