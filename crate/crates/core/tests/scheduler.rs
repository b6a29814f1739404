use platelet_abc::scheduler::{
    chunk_bounds, chunked_schedule, dynamic_schedule, imbalance_report, makespan, schedule, Executor, Strategy,
    WorkerPool,
};
use proptest::prelude::{any, prop, prop_assert, prop_assert_eq, proptest};
use rand::SeedableRng;
use rand_distr::{Distribution, LogNormal};
use rand_xoshiro::Xoshiro256PlusPlus;

/// Optimal makespan by enumerating every assignment of tasks to workers.
fn brute_force_opt(durations: &[f64], n: usize) -> f64 {
    fn go(i: usize, d: &[f64], loads: &mut [f64], best: &mut f64) {
        let current = loads.iter().copied().fold(0.0, f64::max);
        if current >= *best {
            return;
        }
        if i == d.len() {
            *best = current;
            return;
        }
        for w in 0..loads.len() {
            loads[w] += d[i];
            go(i + 1, d, loads, best);
            loads[w] -= d[i];
        }
    }
    let mut best = f64::INFINITY;
    go(0, durations, &mut vec![0.0; n], &mut best);
    if durations.is_empty() {
        0.0
    } else {
        best
    }
}

/// Every workload with `m` tasks drawn from {1, 2, 3}.
fn workloads(m: usize) -> impl Iterator<Item = Vec<f64>> {
    (0..3usize.pow(m as u32)).map(move |mut code| {
        (0..m)
            .map(|_| {
                let d = (code % 3 + 1) as f64;
                code /= 3;
                d
            })
            .collect()
    })
}

#[test]
fn textbook_imbalance_example() {
    let d = [5.0, 1.0, 1.0, 1.0, 1.0, 1.0];
    assert_eq!(makespan(&chunked_schedule(&d, 2)), 7.0);
    assert_eq!(makespan(&dynamic_schedule(&d, 2)), 5.0);
}

#[test]
fn greedy_within_graham_bound_of_optimum() {
    let mut checked = 0;
    for n in 1..=3 {
        for m in 0..=10 {
            for d in workloads(m) {
                let opt = brute_force_opt(&d, n);
                let greedy = makespan(&dynamic_schedule(&d, n));
                assert!(greedy >= opt - 1e-12, "greedy below optimum on {d:?}");
                assert!(
                    greedy <= (2.0 - 1.0 / n as f64) * opt + 1e-12,
                    "n = {n}, {d:?}: greedy {greedy}, optimum {opt}"
                );
                checked += 1;
            }
        }
    }
    assert_eq!(checked, 3 * (0..=10).map(|m| 3usize.pow(m)).sum::<usize>());
}

#[test]
fn dynamic_usually_beats_chunked_on_heavy_tails() {
    // Over 2000 workloads the strict win rate is about 0.91; chunked never ties.
    let ln = LogNormal::new(0.0, 1.0).unwrap();
    let mut wins = 0;
    for w in 0..2000 {
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(w);
        let d: Vec<f64> = (0..64).map(|_| ln.sample(&mut rng)).collect();
        if makespan(&dynamic_schedule(&d, 8)) < makespan(&chunked_schedule(&d, 8)) {
            wins += 1;
        }
    }
    assert!((1700..1900).contains(&wins), "dynamic strictly better on {wins}/2000");
}

#[test]
fn chunk_sizes_differ_by_at_most_one() {
    for m in 0..40 {
        for n in 1..9 {
            let b = chunk_bounds(m, n);
            assert_eq!(b.len(), n);
            assert_eq!(b.iter().map(|r| r.len()).sum::<usize>(), m);
            let (lo, hi) = (b.iter().map(|r| r.len()).min().unwrap(), b.iter().map(|r| r.len()).max().unwrap());
            assert!(hi - lo <= 1);
        }
    }
}

#[test]
fn failures_stay_in_their_slots() {
    let tasks: Vec<u32> = (0..20).collect();
    for strategy in [Strategy::Chunked, Strategy::Dynamic] {
        let pool = WorkerPool::new(3, strategy);
        let batch = pool.run(&tasks, |i, t| if t % 7 == 3 { Err(format!("task {i}")) } else { Ok(t * 2) });
        assert_eq!(batch.failures(), vec![3, 10, 17]);
        assert_eq!(batch.results[4], Ok(8));
        assert_eq!(batch.results[10], Err("task 10".to_string()));
        batch.timeline.validate().unwrap();
        assert_eq!(pool.take_timelines().len(), 1);
    }
}

#[test]
fn imbalance_report_of_textbook_example() {
    let r = imbalance_report(&chunked_schedule(&[5.0, 1.0, 1.0, 1.0, 1.0, 1.0], 2));
    assert_eq!(r.makespan, 7.0);
    assert_eq!(r.busy_fraction, vec![1.0, 3.0 / 7.0]);
    assert_eq!(r.min, 3.0 / 7.0);
    assert_eq!(r.max, 1.0);
}

fn durations() -> impl proptest::strategy::Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.01f64..10.0, 0..40)
}

proptest! {
    #[test]
    fn small_workloads_match_brute_force_bounds(d in prop::collection::vec(1u8..=3, 0..8), n in 1usize..4) {
        let d: Vec<f64> = d.into_iter().map(f64::from).collect();
        let opt = brute_force_opt(&d, n);
        let greedy = makespan(&dynamic_schedule(&d, n));
        prop_assert!(opt <= greedy + 1e-12);
        prop_assert!(greedy <= (2.0 - 1.0 / n as f64) * opt + 1e-12);
    }

    #[test]
    fn schedules_are_valid_and_complete(d in durations(), n in 1usize..10) {
        for strategy in [Strategy::Chunked, Strategy::Dynamic] {
            let t = schedule(strategy, &d, n);
            prop_assert_eq!(t.workers.len(), n);
            prop_assert_eq!(t.n_tasks(), d.len());
            prop_assert!(t.validate().is_ok());
            for (_, iv) in t.rows() {
                prop_assert!((iv.end - iv.start - d[iv.task]).abs() < 1e-12);
            }
            let total: f64 = d.iter().sum();
            let longest = d.iter().copied().fold(0.0, f64::max);
            let span = makespan(&t);
            prop_assert!(span + 1e-9 >= (total / n as f64).max(longest));
            prop_assert!(span <= total + 1e-9);
        }
    }

    #[test]
    fn dynamic_workers_never_idle_while_work_remains(d in durations(), n in 1usize..10) {
        let t = dynamic_schedule(&d, n);
        for list in &t.workers {
            let mut clock = 0.0;
            for iv in list {
                prop_assert!((iv.start - clock).abs() < 1e-9, "gap before task {}", iv.task);
                clock = iv.end;
            }
        }
        // The queue hands out tasks in index order.
        let mut starts: Vec<(usize, f64)> = t.rows().map(|(_, iv)| (iv.task, iv.start)).collect();
        starts.sort_by_key(|s| s.0);
        for w in starts.windows(2) {
            prop_assert!(w[0].1 <= w[1].1 + 1e-12, "tasks must start in index order");
        }
    }

    #[test]
    fn pool_returns_results_in_task_order(tasks in prop::collection::vec(any::<i32>(), 0..100), n in 1usize..6, dynamic in any::<bool>()) {
        let strategy = if dynamic { Strategy::Dynamic } else { Strategy::Chunked };
        let pool = WorkerPool::new(n, strategy);
        let batch = pool.run(&tasks, |i, &x| -> Result<(usize, i64), ()> { Ok((i, x as i64 * 3)) });
        prop_assert_eq!(batch.results.len(), tasks.len());
        for (i, r) in batch.results.iter().enumerate() {
            prop_assert_eq!(r, &Ok((i, tasks[i] as i64 * 3)));
        }
        prop_assert!(batch.timeline.validate().is_ok());
        prop_assert_eq!(batch.timeline.n_tasks(), tasks.len());
    }
}
