//! Event-driven simulation of the branching particle system: α-stable
//! motion, Exp(V) lifetimes pre-drawn at birth, critical (1+β) offspring
//! at the death site.
//!
//! Exactness contract: positions are sampled exactly in law at observation
//! grid times and at death times (independent stable increments between
//! consecutive sample times); lifetimes and offspring counts are exact.
//! The only approximation anywhere downstream is the trapezoidal occupation
//! quadrature between grid times, which is the observers' concern.
//!
//! One replica owns one RNG stream; processing order (death-time priority
//! queue, ties by particle id) is deterministic, so a seed fully determines
//! every emitted segment.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rand::Rng;

use crate::error::{Error, Result};
use crate::model::{ModelParams, OffspringLaw, SimBox};
use crate::samplers::{sample_isotropic_increment, sample_offspring, sample_poisson_field};
use crate::Point;

/// Receives every particle path segment exactly once.  All methods default
/// to no-ops so observers implement only what they consume.
pub trait PathObserver {
    /// Particle `id` was at `x0` at time `t0` and at `x1` at time `t1`,
    /// with no other sample points in between (`t0 < t1`; both endpoints
    /// are grid times, birth times, or the death/horizon time).
    fn segment(&mut self, _id: u64, _t0: f64, _x0: &Point, _t1: f64, _x1: &Point) {}

    /// Particle `id` is alive at observation-grid index `j` with position
    /// `x` (grid time = `grid[j]`; alive means `birth ≤ grid[j] < death`).
    fn at_grid(&mut self, _id: u64, _j: usize, _x: &Point) {}

    /// Particle `id` born at time `t`, position `x`.  Ancestors carry
    /// `parent == u64::MAX`; offspring inherit the parent's death position
    /// bit-for-bit.
    fn born(&mut self, _id: u64, _parent: u64, _t: f64, _x: &Point) {}

    /// Particle `id` died at time `t`, position `x`, leaving `offspring`
    /// children.  Not called for particles still alive at the horizon.
    fn died(&mut self, _id: u64, _t: f64, _x: &Point, _offspring: u64) {}
}

impl<T: PathObserver + ?Sized> PathObserver for &mut T {
    fn segment(&mut self, id: u64, t0: f64, x0: &Point, t1: f64, x1: &Point) {
        (**self).segment(id, t0, x0, t1, x1);
    }
    fn at_grid(&mut self, id: u64, j: usize, x: &Point) {
        (**self).at_grid(id, j, x);
    }
    fn born(&mut self, id: u64, parent: u64, t: f64, x: &Point) {
        (**self).born(id, parent, t, x);
    }
    fn died(&mut self, id: u64, t: f64, x: &Point, offspring: u64) {
        (**self).died(id, t, x, offspring);
    }
}

impl<A: PathObserver, B: PathObserver> PathObserver for (A, B) {
    fn segment(&mut self, id: u64, t0: f64, x0: &Point, t1: f64, x1: &Point) {
        self.0.segment(id, t0, x0, t1, x1);
        self.1.segment(id, t0, x0, t1, x1);
    }
    fn at_grid(&mut self, id: u64, j: usize, x: &Point) {
        self.0.at_grid(id, j, x);
        self.1.at_grid(id, j, x);
    }
    fn born(&mut self, id: u64, parent: u64, t: f64, x: &Point) {
        self.0.born(id, parent, t, x);
        self.1.born(id, parent, t, x);
    }
    fn died(&mut self, id: u64, t: f64, x: &Point, offspring: u64) {
        self.0.died(id, t, x, offspring);
        self.1.died(id, t, x, offspring);
    }
}

/// Simulation knobs shared by both population and single-ancestor modes.
#[derive(Debug, Clone)]
pub struct BranchingConfig {
    pub params: ModelParams,
    /// Simulated time window `[0, horizon]`.
    pub horizon: f64,
    /// Requested observation-grid step Δ; the actual step is
    /// `horizon / ceil(horizon/Δ)` so the horizon lands on the grid.
    pub path_step: f64,
    /// Explosion guard: total events (births + deaths) per replica.
    pub max_events: u64,
    /// Replica id reported in explosion diagnostics.
    pub replica: u64,
}

impl BranchingConfig {
    /// The simulator is exact for any `v ≥ 0` and any offspring law (the
    /// law arrives separately), so this checks only the motion parameters
    /// rather than the full limit-theorem parameter range.
    pub fn new(params: ModelParams, horizon: f64, path_step: f64) -> Result<Self> {
        if !(1..=3).contains(&params.d) {
            return Err(Error::invalid(format!("d={} outside 1..=3", params.d)));
        }
        if !(params.alpha > 0.0 && params.alpha <= 2.0) {
            return Err(Error::invalid(format!("alpha={} outside (0, 2]", params.alpha)));
        }
        if !(params.v >= 0.0 && params.v.is_finite()) {
            return Err(Error::invalid(format!("v={} must be nonnegative", params.v)));
        }
        if !(params.intensity >= 0.0 && params.intensity.is_finite()) {
            return Err(Error::invalid(format!("intensity={} must be nonnegative", params.intensity)));
        }
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(Error::invalid(format!("horizon must be positive, got {horizon}")));
        }
        if !(path_step > 0.0 && path_step.is_finite()) {
            return Err(Error::invalid(format!("path step must be positive, got {path_step}")));
        }
        Ok(Self { params, horizon, path_step, max_events: 50_000_000, replica: 0 })
    }

    /// Observation grid `0 = g_0 < … < g_m = horizon`, uniform.
    pub fn grid(&self) -> Vec<f64> {
        let m = (self.horizon / self.path_step).ceil().max(1.0) as usize;
        let h = self.horizon / m as f64;
        let mut g: Vec<f64> = (0..=m).map(|j| j as f64 * h).collect();
        g[m] = self.horizon;
        g
    }
}

/// Per-replica outcome counters (diagnostics; criticality says the mean
/// live count is constant in time).
#[derive(Debug, Clone, Copy, Default)]
pub struct SimStats {
    pub ancestors: u64,
    pub births: u64,
    pub deaths: u64,
    pub max_live: usize,
    pub final_live: usize,
}

struct Pending {
    death: f64,
    id: u64,
    /// Time of the last sampled position.
    t: f64,
    x: Point,
}

impl PartialEq for Pending {
    fn eq(&self, other: &Self) -> bool {
        self.id == other.id
    }
}
impl Eq for Pending {}
impl PartialOrd for Pending {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Pending {
    // Reversed (earliest death first) so BinaryHeap acts as a min-heap;
    // ties broken by id for a total, replayable order.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .death
            .total_cmp(&self.death)
            .then(other.id.cmp(&self.id))
    }
}

/// Population mode: Poisson(intensity·Lebesgue on `bx`) ancestors at t = 0.
pub fn run_population(
    cfg: &BranchingConfig,
    bx: &SimBox,
    law: &OffspringLaw,
    obs: &mut impl PathObserver,
    rng: &mut impl Rng,
) -> Result<SimStats> {
    if bx.d != cfg.params.d {
        return Err(Error::invalid("box dimension does not match model dimension"));
    }
    let ancestors = sample_poisson_field(cfg.params.intensity, bx, rng);
    run_from(cfg, &ancestors, law, obs, rng)
}

/// Single-ancestor mode: one particle at `x` at t = 0 (the `N^x` system).
pub fn run_single_ancestor(
    cfg: &BranchingConfig,
    x: &Point,
    law: &OffspringLaw,
    obs: &mut impl PathObserver,
    rng: &mut impl Rng,
) -> Result<SimStats> {
    run_from(cfg, std::slice::from_ref(x), law, obs, rng)
}

fn run_from(
    cfg: &BranchingConfig,
    initial: &[Point],
    law: &OffspringLaw,
    obs: &mut impl PathObserver,
    rng: &mut impl Rng,
) -> Result<SimStats> {
    let grid = cfg.grid();
    let d = cfg.params.d;
    let alpha = cfg.params.alpha;
    let v = cfg.params.v;
    let horizon = cfg.horizon;

    let mut heap: BinaryHeap<Pending> = BinaryHeap::with_capacity(initial.len() * 2);
    let mut next_id: u64 = 0;
    let mut stats = SimStats { ancestors: initial.len() as u64, ..Default::default() };

    for x in initial {
        let id = next_id;
        next_id += 1;
        obs.born(id, u64::MAX, 0.0, x);
        obs.at_grid(id, 0, x);
        heap.push(Pending { death: exp_lifetime(v, rng), id, t: 0.0, x: *x });
    }
    stats.births = initial.len() as u64;
    stats.max_live = heap.len();

    while let Some(mut p) = heap.pop() {
        if p.death >= horizon {
            // Min-heap: every remaining particle also survives the horizon.
            stats.final_live = 1 + heap.len();
            advance(&mut p, obs, d, alpha, &grid, horizon, true, rng);
            while let Some(mut q) = heap.pop() {
                advance(&mut q, obs, d, alpha, &grid, horizon, true, rng);
            }
            break;
        }
        let death = p.death;
        advance(&mut p, obs, d, alpha, &grid, death, false, rng);
        // `advance` left the particle synced at its death point.
        stats.deaths += 1;
        let k = sample_offspring(law, rng);
        obs.died(p.id, death, &p.x, k);
        for _ in 0..k {
            let id = next_id;
            next_id += 1;
            obs.born(id, p.id, death, &p.x);
            heap.push(Pending { death: death + exp_lifetime(v, rng), id, t: death, x: p.x });
        }
        stats.births += k;
        stats.max_live = stats.max_live.max(heap.len());
        if stats.births + stats.deaths > cfg.max_events {
            return Err(Error::PopulationExplosion {
                events: stats.births + stats.deaths,
                live: heap.len(),
                cap: cfg.max_events,
                replica: cfg.replica,
            });
        }
    }
    Ok(stats)
}

fn exp_lifetime(v: f64, rng: &mut impl Rng) -> f64 {
    if v == 0.0 {
        return f64::INFINITY;
    }
    let e: f64 = rng.sample(rand_distr::Exp1);
    e / v
}

/// Advances a particle from its last synced point to `t_end`, emitting a
/// segment per grid interval and grid-index callbacks.  `at_end_grid` marks
/// `t_end` as the final grid point (horizon) rather than a death time.
fn advance(
    p: &mut Pending,
    obs: &mut impl PathObserver,
    d: u32,
    alpha: f64,
    grid: &[f64],
    t_end: f64,
    at_end_grid: bool,
    rng: &mut impl Rng,
) {
    let mut j = grid.partition_point(|&g| g <= p.t);
    while j < grid.len() && grid[j] < t_end {
        let g = grid[j];
        let x1 = step(d, alpha, g - p.t, &p.x, rng);
        obs.segment(p.id, p.t, &p.x, g, &x1);
        obs.at_grid(p.id, j, &x1);
        p.t = g;
        p.x = x1;
        j += 1;
    }
    if t_end > p.t {
        let x1 = step(d, alpha, t_end - p.t, &p.x, rng);
        obs.segment(p.id, p.t, &p.x, t_end, &x1);
        if at_end_grid && j < grid.len() && grid[j] == t_end {
            obs.at_grid(p.id, j, &x1);
        }
        p.t = t_end;
        p.x = x1;
    } else if at_end_grid && j < grid.len() && grid[j] == t_end {
        // Particle was already synced exactly at the horizon.
        obs.at_grid(p.id, j, &p.x);
    }
}

fn step(d: u32, alpha: f64, dt: f64, x: &Point, rng: &mut impl Rng) -> Point {
    let inc = sample_isotropic_increment(d, alpha, dt, rng);
    let mut y = *x;
    for i in 0..d as usize {
        y[i] += inc[i];
    }
    y
}

/// Live-particle counts per observation-grid index, summed over a replica.
#[derive(Debug, Clone)]
pub struct GridCounts {
    pub counts: Vec<u64>,
}

impl GridCounts {
    pub fn new(grid_len: usize) -> Self {
        Self { counts: vec![0; grid_len] }
    }
}

impl PathObserver for GridCounts {
    fn at_grid(&mut self, _id: u64, j: usize, _x: &Point) {
        self.counts[j] += 1;
    }
}

/// Optional event/path log for debugging dumps: one row per segment and
/// one per birth/death event, in emission order.
#[derive(Debug, Default)]
pub struct PathLog {
    pub rows: Vec<String>,
}

impl PathObserver for PathLog {
    fn segment(&mut self, id: u64, t0: f64, x0: &Point, t1: f64, x1: &Point) {
        self.rows.push(format!(
            "seg\t{id}\t{t0:e}\t{:e}\t{:e}\t{:e}\t{t1:e}\t{:e}\t{:e}\t{:e}",
            x0[0], x0[1], x0[2], x1[0], x1[1], x1[2]
        ));
    }
    fn born(&mut self, id: u64, parent: u64, t: f64, x: &Point) {
        self.rows
            .push(format!("born\t{id}\t{parent}\t{t:e}\t{:e}\t{:e}\t{:e}", x[0], x[1], x[2]));
    }
    fn died(&mut self, id: u64, t: f64, x: &Point, offspring: u64) {
        self.rows
            .push(format!("died\t{id}\t{offspring}\t{t:e}\t{:e}\t{:e}\t{:e}", x[0], x[1], x[2]));
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::offspring_pmf;
    use crate::samplers::ReplicaStreams;
    use crate::stable::semigroup::semigroup_apply;
    use crate::testfn::TestFunction;
    use crate::StableKernel;

    // Direct construction: simulator tests use degenerate corners (v = 0,
    // binary branching) outside the limit-theorem parameter range.
    fn params(d: u32, alpha: f64, beta: f64, v: f64, intensity: f64) -> ModelParams {
        ModelParams { d, alpha, beta, v, intensity }
    }

    #[test]
    fn zero_intensity_population_is_empty() {
        let cfg = BranchingConfig::new(params(2, 1.5, 0.5, 1.0, 0.0), 4.0, 0.5).unwrap();
        let law = offspring_pmf(0.5, 64, true).unwrap();
        let bx = SimBox::centered(2, 10.0);
        let mut counts = GridCounts::new(cfg.grid().len());
        let mut rng = ReplicaStreams::new(7).replica(0);
        let stats = run_population(&cfg, &bx, &law, &mut counts, &mut rng).unwrap();
        assert_eq!(stats.ancestors, 0);
        assert_eq!(stats.births, 0);
        assert_eq!(stats.deaths, 0);
        assert_eq!(stats.final_live, 0);
        assert!(counts.counts.iter().all(|&c| c == 0));
    }

    #[test]
    fn zero_branching_rate_keeps_population_constant() {
        // V = 0: no deaths ever, each particle contributes exactly one
        // sample per grid index and one segment per grid interval.
        let cfg = BranchingConfig::new(params(1, 1.5, 0.5, 0.0, 1.0), 3.0, 0.5).unwrap();
        let law = offspring_pmf(0.5, 64, true).unwrap();
        let grid = cfg.grid();
        assert_eq!(grid.len(), 7);
        let mut obs = (GridCounts::new(grid.len()), PathLog::default());
        let mut rng = ReplicaStreams::new(11).replica(0);
        let x0 = [0.25, 0.0, 0.0];
        let stats = run_single_ancestor(&cfg, &x0, &law, &mut obs, &mut rng).unwrap();
        assert_eq!(stats.deaths, 0);
        assert_eq!(stats.final_live, 1);
        assert_eq!(stats.max_live, 1);
        assert!(obs.0.counts.iter().all(|&c| c == 1));
        let segs = obs.1.rows.iter().filter(|r| r.starts_with("seg")).count();
        assert_eq!(segs, grid.len() - 1);
    }

    #[test]
    fn replay_is_deterministic() {
        let cfg = BranchingConfig::new(params(2, 1.2, 0.5, 2.0, 0.5), 2.0, 0.25).unwrap();
        let law = offspring_pmf(0.5, 64, true).unwrap();
        let bx = SimBox::centered(2, 3.0);
        let run = || {
            let mut log = PathLog::default();
            let mut rng = ReplicaStreams::new(42).replica(3);
            run_population(&cfg, &bx, &law, &mut log, &mut rng).unwrap();
            log.rows
        };
        let a = run();
        let b = run();
        assert!(!a.is_empty());
        assert_eq!(a, b);
    }

    /// Checks that every child's birth position is bit-for-bit the parent's
    /// death position, and that birth/death bookkeeping is consistent.
    #[derive(Default)]
    struct Lineage {
        died_at: std::collections::HashMap<u64, (u64, [u64; 3])>,
        checked: u64,
    }

    impl PathObserver for Lineage {
        fn born(&mut self, _id: u64, parent: u64, _t: f64, x: &Point) {
            if parent == u64::MAX {
                return;
            }
            let (left, bits) = self
                .died_at
                .get_mut(&parent)
                .expect("child born before parent's death was recorded");
            assert!(*left > 0, "more children than the recorded offspring count");
            *left -= 1;
            assert_eq!([x[0].to_bits(), x[1].to_bits(), x[2].to_bits()], *bits);
            self.checked += 1;
        }
        fn died(&mut self, id: u64, _t: f64, x: &Point, offspring: u64) {
            let prev = self
                .died_at
                .insert(id, (offspring, [x[0].to_bits(), x[1].to_bits(), x[2].to_bits()]));
            assert!(prev.is_none(), "particle died twice");
        }
    }

    #[test]
    fn offspring_inherit_death_site_exactly() {
        let cfg = BranchingConfig::new(params(3, 0.7, 0.5, 3.0, 0.8), 2.0, 0.5).unwrap();
        let law = offspring_pmf(0.5, 64, true).unwrap();
        let bx = SimBox::centered(3, 2.0);
        let mut lin = Lineage::default();
        let mut rng = ReplicaStreams::new(5).replica(1);
        let stats = run_population(&cfg, &bx, &law, &mut lin, &mut rng).unwrap();
        assert_eq!(stats.births, stats.ancestors + lin.checked);
        assert!(lin.checked > 20, "want a branching-rich replica, got {}", lin.checked);
        assert!(lin.died_at.values().all(|&(left, _)| left == 0));
    }

    #[test]
    fn explosion_guard_trips() {
        let mut cfg = BranchingConfig::new(params(1, 2.0, 1.0, 1000.0, 20.0), 10.0, 1.0).unwrap();
        cfg.max_events = 100;
        let law = OffspringLaw::binary();
        let bx = SimBox::centered(1, 5.0);
        let mut obs = GridCounts::new(cfg.grid().len());
        let mut rng = ReplicaStreams::new(1).replica(0);
        match run_population(&cfg, &bx, &law, &mut obs, &mut rng) {
            Err(Error::PopulationExplosion { cap: 100, .. }) => {}
            other => panic!("expected explosion guard, got {other:?}"),
        }
    }

    #[test]
    fn critical_branching_preserves_mean_count() {
        // E[live at t] = 1 per ancestor for any critical offspring law.
        // β = 1 (binary) keeps the offspring variance finite so the sample
        // mean obeys the usual CLT: Var[N_t] = V·σ²·t = 4 here.
        let cfg = BranchingConfig::new(params(1, 2.0, 1.0, 2.0, 1.0), 2.0, 2.0).unwrap();
        let law = OffspringLaw::binary();
        let streams = ReplicaStreams::new(90210);
        let n = 4000;
        let mut total_final = 0u64;
        for i in 0..n {
            let mut rng = streams.replica(i);
            let mut obs = GridCounts::new(cfg.grid().len());
            let stats =
                run_single_ancestor(&cfg, &[0.0; 3], &law, &mut obs, &mut rng).unwrap();
            assert_eq!(stats.final_live, *obs.counts.last().unwrap() as usize);
            total_final += stats.final_live as u64;
        }
        let mean = total_final as f64 / n as f64;
        let stderr = (4.0 / n as f64).sqrt();
        assert!(
            (mean - 1.0).abs() < 4.0 * stderr,
            "mean live count {mean} vs 1.0 (stderr {stderr:.4})"
        );
    }

    #[test]
    fn population_mean_matches_semigroup_action() {
        // Expectation identity E⟨N^x_t, φ⟩ = T_t φ(x): the branching is
        // critical, so only the motion semigroup survives in the mean.
        let d = 1;
        let alpha = 1.5;
        let cfg = BranchingConfig::new(params(d, alpha, 1.0, 1.5, 1.0), 1.0, 1.0).unwrap();
        let law = OffspringLaw::binary();
        let phi = TestFunction::gaussian(d, 1.0, 0.8).unwrap();
        let x0 = [0.3, 0.0, 0.0];
        let kernel = StableKernel::new(d, alpha).unwrap();
        let expected = semigroup_apply(&kernel, cfg.horizon, &phi, &x0).unwrap();

        struct SumPhi<'a> {
            phi: &'a TestFunction,
            last: usize,
            total: f64,
        }
        impl PathObserver for SumPhi<'_> {
            fn at_grid(&mut self, _id: u64, j: usize, x: &Point) {
                if j == self.last {
                    self.total += self.phi.eval(x);
                }
            }
        }

        let streams = ReplicaStreams::new(314159);
        let n = 20_000;
        let last = cfg.grid().len() - 1;
        let mut vals = Vec::with_capacity(n as usize);
        for i in 0..n {
            let mut rng = streams.replica(i);
            let mut obs = SumPhi { phi: &phi, last, total: 0.0 };
            run_single_ancestor(&cfg, &x0, &law, &mut obs, &mut rng).unwrap();
            vals.push(obs.total);
        }
        let mean = vals.iter().sum::<f64>() / n as f64;
        let var = vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64;
        let stderr = (var / n as f64).sqrt();
        assert!(
            (mean - expected).abs() < 4.0 * stderr + 1e-12,
            "E⟨N,φ⟩ = {mean:.5} vs semigroup {expected:.5} (stderr {stderr:.5})"
        );
    }

    #[test]
    fn gaussian_motion_has_exact_increment_variance() {
        // α = 2, V = 0: a single particle performs the heat-semigroup
        // motion e^{t Δ}; each coordinate increment over [0, t] is
        // N(0, 2t).  Sample variance over replicas must match.
        let cfg = BranchingConfig::new(params(2, 2.0, 0.5, 0.0, 1.0), 1.0, 1.0).unwrap();
        let law = offspring_pmf(0.5, 64, true).unwrap();
        let streams = ReplicaStreams::new(777);
        let n = 30_000;
        let (mut s1, mut s2) = (0.0, 0.0);
        struct Last(Point);
        impl PathObserver for Last {
            fn at_grid(&mut self, _id: u64, j: usize, x: &Point) {
                if j == 1 {
                    self.0 = *x;
                }
            }
        }
        for i in 0..n {
            let mut rng = streams.replica(i);
            let mut obs = Last([0.0; 3]);
            run_single_ancestor(&cfg, &[0.0; 3], &law, &mut obs, &mut rng).unwrap();
            s1 += obs.0[0];
            s2 += obs.0[0] * obs.0[0];
        }
        let nf = n as f64;
        let var = s2 / nf - (s1 / nf) * (s1 / nf);
        // Var of the sample variance of N(0,2) over 30k draws ≈ 2·4/n.
        let tol = 4.0 * (2.0 * 4.0 / nf).sqrt();
        assert!((var - 2.0).abs() < tol, "coordinate variance {var:.4} vs 2.0");
    }

    #[test]
    fn grid_snaps_to_horizon() {
        let cfg = BranchingConfig::new(params(1, 1.5, 0.5, 1.0, 1.0), 1.0, 0.3).unwrap();
        let g = cfg.grid();
        assert_eq!(g.len(), 5);
        assert_eq!(g[0], 0.0);
        assert_eq!(*g.last().unwrap(), 1.0);
        let steps: Vec<f64> = g.windows(2).map(|w| w[1] - w[0]).collect();
        for s in &steps {
            assert!((s - 0.25).abs() < 1e-15);
        }
    }
}
