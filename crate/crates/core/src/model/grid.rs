//! Deposition substrate.
//!
//! Cells are stored row-major. Occupied cells are tracked in a union-find
//! forest so that cluster membership is always current under
//! 8-neighbourhood connectivity; cluster count and footprint are kept as
//! running totals.
//!
//! Albumin is sampled lazily. All cells receive the same expected number
//! of albumin hits per step, and each free slot of a cell is filled
//! independently with probability `c / ρ_max` per hit, so the number of
//! slots still free after a cumulative exposure `E = Σ c·h/ρ_max` is
//! `Binomial(free, exp(−ΔE))`. A cell is brought up to date only when a
//! platelet lands on it (or on an explicit [`SubstrateGrid::sync_albumin`]).

use std::io::{self, Write};

use rand::Rng;
use rand_distr::{Binomial, Distribution, StandardNormal};

const EMPTY: u32 = u32::MAX;

/// What a landing platelet finds at a cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Site {
    /// At least one platelet already sits here.
    Occupied,
    /// Platelet-free, but an 8-neighbour is occupied.
    Adjacent,
    Free,
}

#[derive(Debug, Clone)]
pub struct SubstrateGrid {
    rows: usize,
    cols: usize,
    rho_max: f64,
    /// Deposited albumin per cell, as of `seen[i]`.
    albumin: Vec<f64>,
    seen: Vec<f64>,
    exposure: f64,
    mean_free: f64,
    stack: Vec<u32>,
    parent: Vec<u32>,
    size: Vec<u32>,
    active: Vec<bool>,
    active_list: Vec<u32>,
    n_clusters: usize,
    n_occupied: usize,
}

impl SubstrateGrid {
    pub fn new(rows: usize, cols: usize, rho_max: f64) -> Self {
        let n = rows * cols;
        let rho_max = rho_max.floor();
        Self {
            rows,
            cols,
            rho_max,
            albumin: vec![0.0; n],
            seen: vec![0.0; n],
            exposure: 0.0,
            mean_free: rho_max,
            stack: vec![0; n],
            parent: vec![EMPTY; n],
            size: vec![0; n],
            active: vec![false; n],
            active_list: Vec::new(),
            n_clusters: 0,
            n_occupied: 0,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn len(&self) -> usize {
        self.stack.len()
    }

    pub fn is_empty(&self) -> bool {
        self.stack.is_empty()
    }

    pub fn rho_max(&self) -> f64 {
        self.rho_max
    }

    pub fn index(&self, row: usize, col: usize) -> usize {
        row * self.cols + col
    }

    /// Platelets stacked on `cell`.
    pub fn platelet_stack(&self, cell: usize) -> u32 {
        self.stack[cell]
    }

    pub fn stacks(&self) -> &[u32] {
        &self.stack
    }

    /// Deposited albumin as of the last update of `cell`.
    pub fn albumin_density(&self, cell: usize) -> f64 {
        self.albumin[cell]
    }

    /// Sets the albumin of a cell directly, clamped to `[0, ρ_max]`.
    pub fn set_albumin(&mut self, cell: usize, value: f64) {
        let v = value.clamp(0.0, self.rho_max).round();
        let n = self.len() as f64;
        self.mean_free += (self.albumin[cell] - v) / n;
        self.albumin[cell] = v;
        self.seen[cell] = self.exposure;
    }

    /// Cluster label of `cell`, `None` when no platelet sits there.
    pub fn cluster_label(&self, cell: usize) -> Option<usize> {
        if self.parent[cell] == EMPTY {
            return None;
        }
        let mut c = cell;
        while self.parent[c] as usize != c {
            c = self.parent[c] as usize;
        }
        Some(c)
    }

    pub fn cluster_count(&self) -> usize {
        self.n_clusters
    }

    /// Number of cells carrying at least one platelet.
    pub fn occupied_cells(&self) -> usize {
        self.n_occupied
    }

    pub fn site(&self, cell: usize) -> Site {
        if self.stack[cell] > 0 {
            Site::Occupied
        } else if self.active[cell] {
            Site::Adjacent
        } else {
            Site::Free
        }
    }

    /// Occupied cells and their platelet-free neighbours, in order of activation.
    pub fn active_cells(&self) -> &[u32] {
        &self.active_list
    }

    fn neighbours(&self, cell: usize) -> impl Iterator<Item = usize> + '_ {
        let (r, c) = ((cell / self.cols) as isize, (cell % self.cols) as isize);
        let (rows, cols) = (self.rows as isize, self.cols as isize);
        (-1isize..=1)
            .flat_map(move |dr| (-1isize..=1).map(move |dc| (dr, dc)))
            .filter(|&(dr, dc)| dr != 0 || dc != 0)
            .filter_map(move |(dr, dc)| {
                let (nr, nc) = (r + dr, c + dc);
                (nr >= 0 && nr < rows && nc >= 0 && nc < cols).then(|| (nr * cols + nc) as usize)
            })
    }

    fn find(&mut self, mut c: usize) -> usize {
        while self.parent[c] as usize != c {
            let gp = self.parent[self.parent[c] as usize];
            self.parent[c] = gp;
            c = gp as usize;
        }
        c
    }

    fn activate(&mut self, cell: usize) {
        if !self.active[cell] {
            self.active[cell] = true;
            self.active_list.push(cell as u32);
        }
    }

    /// Puts one platelet on `cell`, merging clusters as needed.
    pub fn deposit_platelet(&mut self, cell: usize) {
        self.stack[cell] += 1;
        if self.stack[cell] > 1 {
            return;
        }
        self.n_occupied += 1;
        self.n_clusters += 1;
        self.parent[cell] = cell as u32;
        self.size[cell] = 1;
        self.activate(cell);
        let neighbours: Vec<usize> = self.neighbours(cell).collect();
        for nb in neighbours {
            self.activate(nb);
            if self.stack[nb] == 0 {
                continue;
            }
            let (a, b) = (self.find(cell), self.find(nb));
            if a != b {
                let (big, small) = if self.size[a] >= self.size[b] { (a, b) } else { (b, a) };
                self.parent[small] = big as u32;
                self.size[big] += self.size[small];
                self.n_clusters -= 1;
            }
        }
    }

    /// Adds a uniform albumin exposure of `hits_per_cell` hits, each
    /// filling a free slot with probability `fill_prob / ρ_max`.
    ///
    /// Returns the expected number of albumin particles deposited over the
    /// whole substrate, used for the bulk mass ledger.
    pub(crate) fn expose_albumin(&mut self, hits_per_cell: f64, fill_prob: f64) -> f64 {
        let inc = fill_prob.clamp(0.0, 1.0) * hits_per_cell / self.rho_max;
        if !(inc > 0.0) {
            return 0.0;
        }
        let survive = (-inc).exp();
        let deposited = self.len() as f64 * self.mean_free * (1.0 - survive);
        self.mean_free *= survive;
        self.exposure += inc;
        deposited
    }

    /// Brings the albumin of `cell` up to the current exposure and returns it.
    pub fn albumin_at<R: Rng + ?Sized>(&mut self, cell: usize, rng: &mut R) -> f64 {
        let dt = self.exposure - self.seen[cell];
        if dt > 0.0 {
            let free = (self.rho_max - self.albumin[cell]) as u64;
            if free > 0 {
                let survivors = sample_binomial(free, (-dt).exp(), rng);
                self.albumin[cell] = self.rho_max - survivors as f64;
            }
            self.seen[cell] = self.exposure;
        }
        self.albumin[cell]
    }

    /// Brings every cell's albumin up to date.
    pub fn sync_albumin<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        for cell in 0..self.len() {
            self.albumin_at(cell, rng);
        }
    }

    /// Mean-field free albumin slots per cell.
    pub fn mean_free_albumin(&self) -> f64 {
        self.mean_free
    }

    /// Writes the platelet stack heights as a plain-text PGM (`P2`) raster.
    pub fn write_pgm<W: Write>(&self, mut out: W) -> io::Result<()> {
        let max = self.stack.iter().copied().max().unwrap_or(0).max(1);
        writeln!(out, "P2")?;
        writeln!(out, "{} {}", self.cols, self.rows)?;
        writeln!(out, "{max}")?;
        for row in self.stack.chunks(self.cols) {
            let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            writeln!(out, "{}", line.join(" "))?;
        }
        Ok(())
    }
}

/// Binomial draw; switches to a rounded normal when the variance exceeds
/// 100, where the two agree to well below one particle per hundred.
fn sample_binomial<R: Rng + ?Sized>(n: u64, p: f64, rng: &mut R) -> u64 {
    let mean = n as f64 * p;
    let var = mean * (1.0 - p);
    if var > 100.0 {
        let z: f64 = rng.sample(StandardNormal);
        (mean + var.sqrt() * z).round().clamp(0.0, n as f64) as u64
    } else {
        Binomial::new(n, p).map(|b| b.sample(rng)).unwrap_or(n)
    }
}

/// Cluster statistics of a substrate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClusterCensus {
    pub count: usize,
    /// Mean cluster footprint (μm²).
    pub mean_area: f64,
}

/// Number of 8-connected platelet clusters and their mean footprint area.
pub fn cluster_census(grid: &SubstrateGrid, cell_area: f64) -> ClusterCensus {
    let count = grid.cluster_count();
    let mean_area = if count == 0 {
        0.0
    } else {
        grid.occupied_cells() as f64 * cell_area / count as f64
    };
    ClusterCensus { count, mean_area }
}
