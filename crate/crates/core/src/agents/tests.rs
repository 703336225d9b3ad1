use proptest::prelude::*;
use rand::SeedableRng;

use super::kmeans::KMeans;
use super::*;
use crate::env::{agent_curve, ActionR2, EvalOn, ObservationR2};
use crate::harness::{episode_context, play_episode};
use crate::lc::{alc, Anchor, CurvePoint, SizeCurveTriplet, TimeCurve};
use crate::meta::fixtures::{algos, dataset, triplet};
use crate::meta::{CurveTable, MetaDataset, TimeCurvePair};

/// R2 meta-dataset; `cells[i][j]` gives validation (= test) score per grid step.
fn r2_md(budgets: &[f64], cost: f64, cells: &[Vec<fn(u8) -> f64>]) -> MetaDataset {
    let m = cells[0].len();
    let datasets = budgets
        .iter()
        .enumerate()
        .map(|(i, &b)| dataset(&format!("d{i}"), b))
        .collect();
    let table = cells
        .iter()
        .flat_map(|row| row.iter().map(|f| triplet(cost, |k| (f(k), f(k)))))
        .collect();
    MetaDataset::new(datasets, algos(m), CurveTable::R2(table)).unwrap()
}

fn r1_pair(points: &[(f64, f64)]) -> TimeCurvePair {
    let tc = TimeCurve::new(points.iter().map(|&(t, s)| CurvePoint { t, s }).collect(), "auc").unwrap();
    TimeCurvePair {
        valid: tc.clone(),
        test: tc,
    }
}

fn actions_r2(md: &MetaDataset, agent: &mut dyn Agent, ds: usize) -> Vec<(usize, u8)> {
    play_episode(agent, md, ds, 10_000)
        .unwrap()
        .records
        .iter()
        .map(|r| match r.action {
            Action::R2(a) => (a.algo, a.p.step()),
            Action::R1(_) => panic!("R1 action in R2 episode"),
        })
        .collect()
}

fn episode_alc(md: &MetaDataset, agent: &mut dyn Agent, ds: usize) -> f64 {
    let run = play_episode(agent, md, ds, 10_000).unwrap();
    let curve = agent_curve(&run.records, md, ds, EvalOn::Test).unwrap();
    alc(&curve, &AlcConfig::linear()).unwrap()
}

// Round-2 toy sets use plain fn pointers so rows can be written inline.
fn low(_: u8) -> f64 {
    0.3
}
fn high(_: u8) -> f64 {
    0.8
}
fn rising(k: u8) -> f64 {
    0.3 + 0.05 * f64::from(k)
}
fn fast(k: u8) -> f64 {
    0.09 * f64::from(k)
}

#[test]
fn fractional_ranks_share_ties() {
    assert_eq!(fractional_ranks(&[0.9, 0.5, 0.9, 0.1]), vec![1.5, 3.0, 1.5, 4.0]);
}

#[test]
fn own_validation_alc_sweeps_grid() {
    // Cost 1 per query, budget 10: the sweep ends exactly at the horizon.
    let md = r2_md(&[10.0], 1.0, &[vec![flat_half]]);
    let ids = [0];
    let slice = MetaSlice::new(&md, &ids).unwrap();
    assert!((own_validation_alc(&slice, 0, 0).unwrap() - 0.45).abs() < 1e-12);
}

fn flat_half(_: u8) -> f64 {
    0.5
}

#[test]
fn random_search_is_reproducible_and_starts_on_grid() {
    let md = r2_md(&[6.0], 1.0, &[vec![low, high, rising]]);
    let a = actions_r2(&md, &mut RandomSearch::new(7), 0);
    let b = actions_r2(&md, &mut RandomSearch::new(7), 0);
    assert_eq!(a, b);
    assert_eq!(a[0].1, 1);
    // Every algorithm is walked up its own grid.
    for j in 0..3 {
        let steps: Vec<u8> = a.iter().filter(|x| x.0 == j).map(|x| x.1).collect();
        assert!(steps.iter().enumerate().all(|(k, &s)| s as usize == k + 1));
    }
}

#[test]
fn random_search_first_choice_is_uniform() {
    let m = 4;
    let md = r2_md(&[1.0], 1.0, &[vec![low; m]]);
    let mut counts = vec![0usize; m];
    let n = 1000;
    for seed in 0..n {
        let mut agent = RandomSearch::new(seed);
        agent.start_episode(&episode_context(&md, 0)).unwrap();
        let (_, obs) = crate::env::Env::reset(&md, 0).unwrap();
        match agent.suggest(&obs).unwrap() {
            Action::R2(a) => counts[a.algo] += 1,
            Action::R1(_) => unreachable!(),
        }
    }
    let p = 1.0 / m as f64;
    let sd = (n as f64 * p * (1.0 - p)).sqrt();
    for c in counts {
        assert!((c as f64 - n as f64 * p).abs() <= 3.0 * sd, "count {c}");
    }
}

#[test]
fn average_rank_top_and_sequence() {
    let md = r2_md(&[100.0; 4], 1.0, &[
        vec![low, low, low, high, low],
        vec![low, rising, low, high, low],
        vec![rising, low, low, high, low],
        vec![low, low, low, low, low],
    ]);
    let ids = [0, 1, 2];
    let mut agent = AverageRank::new();
    agent.meta_train(&MetaSlice::new(&md, &ids).unwrap()).unwrap();
    assert_eq!(agent.table().unwrap().top(), 3);
    let acts = actions_r2(&md, &mut agent, 3);
    let expected: Vec<(usize, u8)> = (1..=10).map(|k| (3, k)).collect();
    assert_eq!(acts[..10], expected[..]);
}

#[test]
fn average_rank_ties_go_to_lower_index() {
    let md = r2_md(&[10.0; 2], 1.0, &[vec![low, high, low, high], vec![low, high, low, high]]);
    let ids = [0, 1];
    let t = RankTable::by_average_rank(&MetaSlice::new(&md, &ids).unwrap()).unwrap();
    assert_eq!(t.order, vec![1, 3, 0, 2]);
}

#[test]
fn average_rank_needs_training() {
    let md = r2_md(&[10.0], 1.0, &[vec![low, high]]);
    let mut agent = AverageRank::new();
    agent.start_episode(&episode_context(&md, 0)).unwrap();
    let (_, obs) = crate::env::Env::reset(&md, 0).unwrap();
    assert!(matches!(agent.suggest(&obs), Err(Error::NotTrained(_))));
    let ids: [usize; 0] = [];
    assert!(matches!(
        agent.meta_train(&MetaSlice::new(&md, &ids).unwrap()),
        Err(Error::NotTrainable(_))
    ));
}

#[test]
fn best_on_samples_probes_then_exploits() {
    let md = r2_md(&[100.0], 1.0, &[vec![low, rising, high, low]]);
    let acts = actions_r2(&md, &mut BestOnSamples::new(0.05), 0);
    assert_eq!(acts[..5], [(0, 1), (1, 1), (2, 1), (3, 1), (2, 2)]);
}

#[test]
fn best_on_samples_switches_when_exploited_curve_drops() {
    fn dropping(k: u8) -> f64 {
        if k == 1 {
            0.9
        } else {
            0.2
        }
    }
    let md = r2_md(&[100.0], 1.0, &[vec![low, dropping, rising]]);
    let acts = actions_r2(&md, &mut BestOnSamples::new(0.05), 0);
    // Algorithm 1 wins the probe, drops to 0.2 at p=0.2, and algorithm 2
    // (probe score 0.35) takes over.
    assert_eq!(acts[..6], [(0, 1), (1, 1), (2, 1), (1, 2), (2, 2), (2, 3)]);
}

#[test]
fn best_on_samples_budget_ends_mid_probe() {
    let md = r2_md(&[2.5], 1.0, &[vec![low, low, low, low]]);
    let run = play_episode(&mut BestOnSamples::new(0.05), &md, 0, 100).unwrap();
    assert_eq!(run.records.len(), 3);
    assert!(!run.truncated);
    let curve = agent_curve(&run.records, &md, 0, EvalOn::Test).unwrap();
    // Only the first query's score is on the curve: 0.3 from t=1 to t=2.5.
    assert!((alc(&curve, &AlcConfig::linear()).unwrap() - 0.3 * 1.5 / 2.5).abs() < 1e-12);
}

#[test]
fn freeze_thaw_recovers_exact_model() {
    let f = |x: f64| 0.8 - 0.6 * (-5.0 * x).exp();
    let pts: Vec<(f64, f64)> = (1..=5).map(|k| f64::from(k) / 10.0).map(|x| (x, f(x))).collect();
    let fit = FreezeThawFit::fit(&pts);
    assert!((fit.a - 0.8).abs() < 1e-4, "{fit:?}");
    assert!((fit.b - 0.6).abs() < 1e-4, "{fit:?}");
    assert!((fit.c - 5.0).abs() < 1e-4, "{fit:?}");
    assert_eq!(fit.n, 5);
}

#[test]
fn freeze_thaw_prior_below_three_points() {
    let fit = FreezeThawFit::fit(&[(0.1, 0.4), (0.2, 0.5)]);
    assert_eq!((fit.a, fit.b, fit.c), (0.5, 0.0, 0.0));
    let empty = FreezeThawFit::fit(&[]);
    assert_eq!((empty.a, empty.predict(0.7)), (0.0, 0.0));
}

#[test]
fn freeze_thaw_residual_does_not_grow_on_exact_points() {
    let f = |x: f64| 0.7 - 0.5 * (-3.0 * x).exp();
    let pts: Vec<(f64, f64)> = (1..=10).map(|k| f64::from(k) / 10.0).map(|x| (x, f(x))).collect();
    let mut last = 0.0f64;
    for n in 3..=pts.len() {
        let r = FreezeThawFit::fit(&pts[..n]).residual;
        assert!(r <= last.max(1e-18), "n={n}: {r} > {last}");
        last = r;
    }
}

fn r2_obs(algo: usize, step: u8, valid: f64) -> Observation {
    Observation::R2(ObservationR2 {
        algo: Some(algo),
        p: GridFraction::from_step(step),
        cost: 1.0,
        r_train: Some(valid),
        r_valid: Some(valid),
        wallclock: 0.0,
        remaining_budget: 100.0,
        done: false,
    })
}

#[test]
fn freeze_thaw_prefers_rising_curve_once_it_crosses() {
    let md = r2_md(&[100.0], 1.0, &[vec![low, low]]);
    let mut ft = FreezeThaw::new(0.1);
    ft.start_episode(&episode_context(&md, 0)).unwrap();
    let g = |x: f64| 0.9 - 0.8 * (-3.0 * x).exp();
    for k in 1..=3u8 {
        ft.observe(&r2_obs(0, k, 0.6));
        ft.observe(&r2_obs(1, k, g(f64::from(k) / 10.0)));
    }
    // Algorithm 1 is still behind (0.575 < 0.6) but extrapolates past it.
    assert!(g(0.3) < 0.6);
    let acq = ft.acquisitions();
    assert!(acq[1] > acq[0], "{acq:?}");
}

#[test]
fn freeze_thaw_without_data_picks_lowest_index() {
    let md = r2_md(&[100.0], 1.0, &[vec![high, high, high]]);
    let mut ft = FreezeThaw::new(0.1);
    ft.start_episode(&episode_context(&md, 0)).unwrap();
    let (_, obs) = crate::env::Env::reset(&md, 0).unwrap();
    let a = ft.suggest(&obs).unwrap();
    assert_eq!(a, Action::R2(ActionR2 { algo: 0, p: GridFraction::FIRST }));
}

/// Six datasets where algorithm 1 dominates.
fn q_toy() -> MetaDataset {
    let row: Vec<fn(u8) -> f64> = vec![low, high, rising];
    r2_md(&[5.0; 6], 1.0, &vec![row; 6])
}

#[test]
fn q_learning_learns_dominant_algorithm() {
    let md = q_toy();
    let ids: Vec<usize> = (0..6).collect();
    let slice = MetaSlice::new(&md, &ids).unwrap();
    for seed in 0..5 {
        let mut q = QLearning::new(QConfig::default(), 1, seed);
        q.meta_train(&slice).unwrap();
        assert_eq!(q.start_choice(0), Some(1), "seed {seed}");
    }
}

#[test]
fn single_cluster_matches_unclustered() {
    let md = q_toy();
    let ids: Vec<usize> = (0..6).collect();
    let slice = MetaSlice::new(&md, &ids).unwrap();
    let mut plain = AgentSpec::QLearning { config: QConfig::default() }.build(3).unwrap();
    let mut one = AgentSpec::ClusteredQ { clusters: 1, config: QConfig::default() }.build(3).unwrap();
    plain.meta_train(&slice).unwrap();
    one.meta_train(&slice).unwrap();
    let mut a = QLearning::new(QConfig::default(), 1, 3);
    a.meta_train(&slice).unwrap();
    let mut b = QLearning::new(QConfig::default(), 1, 3);
    b.meta_train(&slice).unwrap();
    assert_eq!(a.model().unwrap().tables, b.model().unwrap().tables);
    assert_eq!(episode_alc(&md, plain.as_mut(), 0), episode_alc(&md, one.as_mut(), 0));
}

#[test]
fn clusters_route_datasets_by_meta_features() {
    let mut md_sets: Vec<_> = (0..6).map(|i| dataset(&format!("d{i}"), 5.0)).collect();
    for (i, d) in md_sets.iter_mut().enumerate() {
        d.extra.insert("latent_00".into(), if i < 3 { -1.0 } else { 1.0 });
    }
    let m = 2;
    let table = (0..6 * m).map(|_| triplet(1.0, |_| (0.5, 0.5))).collect();
    let md = MetaDataset::new(md_sets, algos(m), CurveTable::R2(table)).unwrap();
    let ids: Vec<usize> = (0..6).collect();
    let mut q = QLearning::new(QConfig { epochs: 1, ..QConfig::default() }, 2, 0);
    q.meta_train(&MetaSlice::new(&md, &ids).unwrap()).unwrap();
    let model = q.model().unwrap();
    let c: Vec<usize> = (0..6).map(|i| model.cluster_of(md.dataset(i))).collect();
    assert!(c[..3].iter().all(|&x| x == c[0]));
    assert!(c[3..].iter().all(|&x| x == c[3]));
    assert_ne!(c[0], c[3]);
}

#[test]
fn kmeans_separates_blobs() {
    use rand_distr::{Distribution, StandardNormal};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for (label, centre) in [(0usize, 0.0), (1, 10.0)] {
        for _ in 0..50 {
            let x: f64 = StandardNormal.sample(&mut rng);
            let y: f64 = StandardNormal.sample(&mut rng);
            rows.push(vec![centre + x, centre + y]);
            labels.push(label);
        }
    }
    let km = KMeans::fit(&rows, 2, &mut rng).unwrap();
    let purity = [[0, 1], [1, 0]]
        .iter()
        .map(|perm| km.assignments.iter().zip(&labels).filter(|(&a, &l)| perm[a] == l).count())
        .max()
        .unwrap();
    assert_eq!(purity, rows.len());
}

#[test]
fn kmeans_caps_k_and_handles_duplicates() {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0);
    let rows = vec![vec![1.0f32, 1.0]; 3];
    let km = KMeans::fit(&rows, 12, &mut rng).unwrap();
    assert_eq!(km.k(), 3);
    assert!(km.assignments.iter().all(|&a| a == 0));
    assert!(KMeans::<f64>::fit(&[], 2, &mut rng).is_err());
}

#[test]
fn q_learning_improves_with_training() {
    fn weak(k: u8) -> f64 {
        0.2 + 0.01 * f64::from(k)
    }
    let row: Vec<fn(u8) -> f64> = vec![weak, high];
    let md = r2_md(&[4.0; 4], 1.0, &vec![row; 4]);
    let ids: Vec<usize> = (0..4).collect();
    let slice = MetaSlice::new(&md, &ids).unwrap();
    let mut last = f64::NEG_INFINITY;
    for epochs in [0, 1, 5, 20, 50] {
        let mut total = 0.0;
        for seed in 0..10 {
            let mut q = QLearning::new(QConfig { epochs, ..QConfig::default() }, 1, seed);
            q.meta_train(&slice).unwrap();
            total += (0..4).map(|i| episode_alc(&md, &mut q, i)).sum::<f64>();
        }
        let mean = total / 40.0;
        assert!(mean >= last - 1e-12, "epochs {epochs}: {mean} < {last}");
        last = mean;
    }
}

/// Datasets 0 and 1 rank algorithm 0 first; dataset 2 is the test set.
fn ranked_md(test_row: Vec<fn(u8) -> f64>, budget: f64) -> MetaDataset {
    let train: Vec<fn(u8) -> f64> = vec![high, low];
    r2_md(&[10.0, 10.0, budget], 1.0, &[train.clone(), train, test_row])
}

fn switches(acts: &[(usize, u8)]) -> usize {
    acts.windows(2).filter(|w| w[0].0 != w[1].0).count()
}

#[test]
fn ranked_never_leaves_a_fast_riser() {
    let md = ranked_md(vec![fast, rising], 10.0);
    let ids = [0, 1];
    let mut agent = RankedScheduler::new(0.001);
    agent.meta_train(&MetaSlice::new(&md, &ids).unwrap()).unwrap();
    assert_eq!(agent.table().unwrap().top(), 0);
    let acts = actions_r2(&md, &mut agent, 2);
    assert_eq!(acts.len(), 10);
    assert!(acts.iter().all(|a| a.0 == 0));
}

#[test]
fn ranked_switches_once_from_flat_to_rising() {
    let md = ranked_md(vec![low, rising], 13.0);
    let ids = [0, 1];
    let mut agent = RankedScheduler::new(0.001);
    agent.meta_train(&MetaSlice::new(&md, &ids).unwrap()).unwrap();
    let acts = actions_r2(&md, &mut agent, 2);
    assert_eq!(switches(&acts), 1, "{acts:?}");
    assert_eq!(acts[..4], [(0, 1), (0, 2), (0, 3), (1, 1)]);
}

#[test]
fn ranked_r1_first_slice_is_predicted_first_point() {
    let pairs = vec![
        r1_pair(&[(10.0, 0.5), (50.0, 0.6)]),
        r1_pair(&[(30.0, 0.2)]),
        r1_pair(&[(20.0, 0.5), (60.0, 0.7)]),
        r1_pair(&[(30.0, 0.2)]),
        r1_pair(&[(5.0, 0.5)]),
        r1_pair(&[(5.0, 0.2)]),
    ];
    let md = MetaDataset::new(
        vec![dataset("a", 100.0), dataset("b", 100.0), dataset("c", 50.0)],
        algos(2),
        CurveTable::R1(pairs),
    )
    .unwrap();
    let ids = [0, 1];
    let mut agent = RankedScheduler::new(0.001);
    agent.meta_train(&MetaSlice::new(&md, &ids).unwrap()).unwrap();
    assert!((agent.first_point_fraction(0).unwrap() - 0.15).abs() < 1e-12);
    let run = play_episode(&mut agent, &md, 2, 100).unwrap();
    match run.records[0].action {
        Action::R1(a) => {
            assert_eq!(a.reveal_algo, 0);
            assert!((a.delta_t - 7.5).abs() < 1e-12);
        }
        Action::R2(_) => unreachable!(),
    }
}

#[test]
fn spec_round_trips_through_json() {
    let spec: AgentSpec = serde_json::from_str(r#"{"kind":"clustered_q","clusters":4,"epochs":7}"#).unwrap();
    assert_eq!(
        spec,
        AgentSpec::ClusteredQ {
            clusters: 4,
            config: QConfig { epochs: 7, ..QConfig::default() }
        }
    );
    let back: AgentSpec = serde_json::from_str(&serde_json::to_string(&spec).unwrap()).unwrap();
    assert_eq!(back, spec);
    assert!(AgentSpec::FreezeThaw { beta: -1.0 }.build(0).is_err());
    assert!(AgentSpec::ClusteredQ { clusters: 0, config: QConfig::default() }.build(0).is_err());
}

fn arb_r2_md() -> impl Strategy<Value = MetaDataset> {
    (1usize..5, 1.0f64..30.0).prop_flat_map(|(m, budget)| {
        proptest::collection::vec((0.1f64..3.0, proptest::collection::vec(0.0f64..1.0, 10)), 2 * m).prop_map(
            move |cells| {
                let table = cells
                    .iter()
                    .map(|(cost, scores)| {
                        SizeCurveTriplet::new(
                            GridFraction::all()
                                .zip(scores)
                                .map(|(p, &s)| Anchor {
                                    p,
                                    cost: *cost * p.fraction::<f64>(),
                                    train: s,
                                    valid: s,
                                    test: s,
                                })
                                .collect(),
                        )
                        .unwrap()
                    })
                    .collect();
                MetaDataset::new(
                    vec![dataset("train", budget), dataset("test", budget)],
                    algos(m),
                    CurveTable::R2(table),
                )
                .unwrap()
            },
        )
    })
}

fn arb_r1_md() -> impl Strategy<Value = MetaDataset> {
    (1usize..4, 10.0f64..200.0).prop_flat_map(|(m, budget)| {
        proptest::collection::vec(proptest::collection::vec((0.1f64..20.0, 0.0f64..1.0), 0..6), 2 * m).prop_map(
            move |cells| {
                let pairs = cells
                    .iter()
                    .map(|pts| {
                        let mut t = 0.0;
                        let pts: Vec<(f64, f64)> = pts
                            .iter()
                            .map(|&(dt, s)| {
                                t += dt;
                                (t, s)
                            })
                            .collect();
                        r1_pair(&pts)
                    })
                    .collect();
                MetaDataset::new(
                    vec![dataset("train", budget), dataset("test", budget)],
                    algos(m),
                    CurveTable::R1(pairs),
                )
                .unwrap()
            },
        )
    })
}

fn check_roster(md: &MetaDataset) {
    let ids = [0];
    let slice = MetaSlice::new(md, &ids).unwrap();
    for (id, spec) in AgentSpec::baseline_roster() {
        let spec = match spec {
            AgentSpec::QLearning { .. } => AgentSpec::QLearning {
                config: QConfig { epochs: 3, ..QConfig::default() },
            },
            AgentSpec::ClusteredQ { .. } => AgentSpec::ClusteredQ {
                clusters: 12,
                config: QConfig { epochs: 3, ..QConfig::default() },
            },
            s => s,
        };
        let mut agent = spec.build(5).unwrap();
        agent.meta_train(&slice).unwrap();
        let run = play_episode(agent.as_mut(), md, 1, 5_000).unwrap_or_else(|e| panic!("{id}: {e}"));
        assert!(!run.truncated, "{id} did not finish");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn agents_stay_in_action_space_r2(md in arb_r2_md()) {
        check_roster(&md);
    }

    #[test]
    fn agents_stay_in_action_space_r1(md in arb_r1_md()) {
        check_roster(&md);
    }
}
