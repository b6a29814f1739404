//! Allocation of independent tasks to a pool of workers.
//!
//! Two strategies: `Chunked` splits the task list into one contiguous chunk
//! per worker up front; `Dynamic` hands the next unstarted task to whichever
//! worker becomes idle first. Both run on scoped OS threads and return
//! results in task order. The `*_schedule` functions replay the same
//! policies on a simulated clock with prescribed durations.

use std::cmp::Reverse;
use std::collections::BinaryHeap;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    Chunked,
    #[default]
    Dynamic,
}

impl std::str::FromStr for Strategy {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "chunked" => Ok(Strategy::Chunked),
            "dynamic" => Ok(Strategy::Dynamic),
            other => Err(format!("unknown strategy '{other}' (expected chunked or dynamic)")),
        }
    }
}

/// One task execution on a worker, times in seconds from batch start.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub task: usize,
    pub start: f64,
    pub end: f64,
}

/// Per-worker ordered task intervals.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ExecutorTimeline {
    pub workers: Vec<Vec<Interval>>,
}

impl ExecutorTimeline {
    pub fn new(n_workers: usize) -> Self {
        Self {
            workers: vec![Vec::new(); n_workers],
        }
    }

    pub fn n_tasks(&self) -> usize {
        self.workers.iter().map(Vec::len).sum()
    }

    /// Rows `(worker, interval)` ordered by worker, then start time.
    pub fn rows(&self) -> impl Iterator<Item = (usize, &Interval)> {
        self.workers
            .iter()
            .enumerate()
            .flat_map(|(w, iv)| iv.iter().map(move |i| (w, i)))
    }

    /// Checks the structural invariants: intervals on each worker ordered
    /// and disjoint, every task `0..m` present exactly once.
    pub fn validate(&self) -> Result<(), String> {
        let m = self.n_tasks();
        let mut seen = vec![false; m];
        for (w, list) in self.workers.iter().enumerate() {
            let mut last_end = f64::NEG_INFINITY;
            for iv in list {
                if !(iv.start <= iv.end) || iv.start < last_end {
                    return Err(format!("worker {w}: overlapping or inverted interval for task {}", iv.task));
                }
                last_end = iv.end;
                match seen.get_mut(iv.task) {
                    Some(s) if !*s => *s = true,
                    _ => return Err(format!("task {} missing index slot or scheduled twice", iv.task)),
                }
            }
        }
        Ok(())
    }
}

/// Results of one batch, in task order, with the timeline that produced them.
#[derive(Debug)]
pub struct Batch<R, E> {
    pub results: Vec<Result<R, E>>,
    pub timeline: ExecutorTimeline,
}

impl<R, E> Batch<R, E> {
    /// Indices of the failed tasks.
    pub fn failures(&self) -> Vec<usize> {
        self.results
            .iter()
            .enumerate()
            .filter_map(|(i, r)| r.is_err().then_some(i))
            .collect()
    }
}

/// Contiguous chunk boundaries: the first `m % n` chunks get one extra task.
pub fn chunk_bounds(m: usize, n_workers: usize) -> Vec<std::ops::Range<usize>> {
    assert!(n_workers >= 1, "need at least one worker");
    let (q, r) = (m / n_workers, m % n_workers);
    let mut start = 0;
    (0..n_workers)
        .map(|w| {
            let len = q + usize::from(w < r);
            let range = start..start + len;
            start += len;
            range
        })
        .collect()
}

type Slot<R, E> = Mutex<Option<Result<R, E>>>;

fn collect<R, E>(slots: Vec<Slot<R, E>>, timeline: ExecutorTimeline) -> Batch<R, E> {
    let results = slots
        .into_iter()
        .map(|s| s.into_inner().unwrap().expect("every task produces a result"))
        .collect();
    Batch { results, timeline }
}

/// Runs each worker's contiguous chunk sequentially.
pub fn chunked_map<T, R, E, F>(tasks: &[T], n_workers: usize, task_fn: F) -> Batch<R, E>
where
    T: Sync,
    R: Send,
    E: Send,
    F: Fn(usize, &T) -> Result<R, E> + Sync,
{
    let bounds = chunk_bounds(tasks.len(), n_workers);
    let slots: Vec<Slot<R, E>> = tasks.iter().map(|_| Mutex::new(None)).collect();
    let t0 = Instant::now();
    let mut timeline = ExecutorTimeline::new(n_workers);
    std::thread::scope(|scope| {
        let handles: Vec<_> = bounds
            .into_iter()
            .map(|range| {
                let (slots, task_fn) = (&slots, &task_fn);
                scope.spawn(move || {
                    let mut log = Vec::with_capacity(range.len());
                    for i in range {
                        let start = t0.elapsed().as_secs_f64();
                        let r = task_fn(i, &tasks[i]);
                        log.push(Interval {
                            task: i,
                            start,
                            end: t0.elapsed().as_secs_f64(),
                        });
                        *slots[i].lock().unwrap() = Some(r);
                    }
                    log
                })
            })
            .collect();
        for (w, h) in handles.into_iter().enumerate() {
            timeline.workers[w] = h.join().expect("worker thread panicked");
        }
    });
    collect(slots, timeline)
}

/// Work-queue execution: an idle worker takes the next unstarted task.
pub fn dynamic_map<T, R, E, F>(tasks: &[T], n_workers: usize, task_fn: F) -> Batch<R, E>
where
    T: Sync,
    R: Send,
    E: Send,
    F: Fn(usize, &T) -> Result<R, E> + Sync,
{
    assert!(n_workers >= 1, "need at least one worker");
    let next = AtomicUsize::new(0);
    let slots: Vec<Slot<R, E>> = tasks.iter().map(|_| Mutex::new(None)).collect();
    let t0 = Instant::now();
    let mut timeline = ExecutorTimeline::new(n_workers);
    std::thread::scope(|scope| {
        let handles: Vec<_> = (0..n_workers)
            .map(|_| {
                let (slots, task_fn, next) = (&slots, &task_fn, &next);
                scope.spawn(move || {
                    let mut log = Vec::new();
                    loop {
                        let i = next.fetch_add(1, Ordering::Relaxed);
                        if i >= tasks.len() {
                            break;
                        }
                        let start = t0.elapsed().as_secs_f64();
                        let r = task_fn(i, &tasks[i]);
                        log.push(Interval {
                            task: i,
                            start,
                            end: t0.elapsed().as_secs_f64(),
                        });
                        *slots[i].lock().unwrap() = Some(r);
                    }
                    log
                })
            })
            .collect();
        for (w, h) in handles.into_iter().enumerate() {
            timeline.workers[w] = h.join().expect("worker thread panicked");
        }
    });
    collect(slots, timeline)
}

/// Chunked allocation replayed on a simulated clock.
pub fn chunked_schedule(durations: &[f64], n_workers: usize) -> ExecutorTimeline {
    let mut timeline = ExecutorTimeline::new(n_workers);
    for (w, range) in chunk_bounds(durations.len(), n_workers).into_iter().enumerate() {
        let mut t = 0.0;
        for i in range {
            timeline.workers[w].push(Interval {
                task: i,
                start: t,
                end: t + durations[i],
            });
            t += durations[i];
        }
    }
    timeline
}

#[derive(PartialEq, PartialOrd)]
struct FreeAt(f64);
impl Eq for FreeAt {}
impl Ord for FreeAt {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&other.0)
    }
}

/// Dynamic allocation replayed on a simulated clock. Tasks are issued in
/// index order; simultaneous idle workers acquire them in worker order.
pub fn dynamic_schedule(durations: &[f64], n_workers: usize) -> ExecutorTimeline {
    assert!(n_workers >= 1, "need at least one worker");
    let mut timeline = ExecutorTimeline::new(n_workers);
    let mut idle: BinaryHeap<Reverse<(FreeAt, usize)>> =
        (0..n_workers).map(|w| Reverse((FreeAt(0.0), w))).collect();
    for (i, &d) in durations.iter().enumerate() {
        let Reverse((FreeAt(t), w)) = idle.pop().expect("pool is never empty");
        timeline.workers[w].push(Interval {
            task: i,
            start: t,
            end: t + d,
        });
        idle.push(Reverse((FreeAt(t + d), w)));
    }
    timeline
}

/// Simulated-clock schedule for either strategy.
pub fn schedule(strategy: Strategy, durations: &[f64], n_workers: usize) -> ExecutorTimeline {
    match strategy {
        Strategy::Chunked => chunked_schedule(durations, n_workers),
        Strategy::Dynamic => dynamic_schedule(durations, n_workers),
    }
}

/// Latest end minus earliest start; zero for an empty timeline.
pub fn makespan(timeline: &ExecutorTimeline) -> f64 {
    let (lo, hi) = timeline
        .rows()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), (_, iv)| {
            (lo.min(iv.start), hi.max(iv.end))
        });
    if lo.is_finite() {
        hi - lo
    } else {
        0.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImbalanceReport {
    pub makespan: f64,
    /// Busy time of each worker divided by the makespan.
    pub busy_fraction: Vec<f64>,
    pub min: f64,
    pub max: f64,
    pub mean: f64,
}

pub fn imbalance_report(timeline: &ExecutorTimeline) -> ImbalanceReport {
    let span = makespan(timeline);
    let busy_fraction: Vec<f64> = timeline
        .workers
        .iter()
        .map(|list| {
            let busy: f64 = list.iter().map(|iv| iv.end - iv.start).sum();
            if span > 0.0 {
                busy / span
            } else {
                0.0
            }
        })
        .collect();
    let n = busy_fraction.len().max(1) as f64;
    ImbalanceReport {
        makespan: span,
        min: busy_fraction.iter().copied().fold(f64::INFINITY, f64::min).min(1.0),
        max: busy_fraction.iter().copied().fold(0.0, f64::max),
        mean: busy_fraction.iter().sum::<f64>() / n,
        busy_fraction,
    }
}

/// Something that runs a batch of independent tasks and returns their
/// results in task order.
pub trait Executor: Sync {
    fn workers(&self) -> usize;

    fn run<T, R, E, F>(&self, tasks: &[T], task_fn: F) -> Batch<R, E>
    where
        T: Sync,
        R: Send,
        E: Send,
        F: Fn(usize, &T) -> Result<R, E> + Sync;
}

/// Thread pool using one of the two allocation strategies. Timelines of
/// all batches are kept for later inspection.
#[derive(Debug)]
pub struct WorkerPool {
    workers: usize,
    strategy: Strategy,
    log: Mutex<Vec<ExecutorTimeline>>,
}

impl WorkerPool {
    pub fn new(workers: usize, strategy: Strategy) -> Self {
        Self {
            workers: workers.max(1),
            strategy,
            log: Mutex::new(Vec::new()),
        }
    }

    pub fn strategy(&self) -> Strategy {
        self.strategy
    }

    /// Timelines of all batches run so far, oldest first.
    pub fn take_timelines(&self) -> Vec<ExecutorTimeline> {
        std::mem::take(&mut *self.log.lock().unwrap())
    }
}

impl Executor for WorkerPool {
    fn workers(&self) -> usize {
        self.workers
    }

    fn run<T, R, E, F>(&self, tasks: &[T], task_fn: F) -> Batch<R, E>
    where
        T: Sync,
        R: Send,
        E: Send,
        F: Fn(usize, &T) -> Result<R, E> + Sync,
    {
        let batch = match self.strategy {
            Strategy::Chunked => chunked_map(tasks, self.workers, task_fn),
            Strategy::Dynamic => dynamic_map(tasks, self.workers, task_fn),
        };
        self.log.lock().unwrap().push(batch.timeline.clone());
        batch
    }
}
