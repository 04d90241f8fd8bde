//! Event-driven simulation of the particle system.
//!
//! A binary rate tree holds the current jump rates; each step draws an
//! exponential waiting time at the total rate (with the diffusive `n^2`
//! speedup on the clock) and picks one event proportionally to its rate.
//! After a jump only the events whose rate reads a changed site are
//! re-rated, and every parent refresh recomputes `left + right` exactly, so
//! the tree cannot drift away from its leaves. Stopping at a deadline
//! discards the pending waiting time; re-drawing it later is legitimate
//! because the exponential clock is memoryless.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::boundary::BoundaryProfile;
use crate::lattice::{Configuration, EventTable, LatticeGeometry};
use crate::mesh::{DensityField, Mesh};
use crate::{Error, ModelParams, Result};

/// Seed and stream of a reproducible generator; distinct streams under the
/// same seed are independent (used for parallel replicas).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RngSpec {
    pub seed: u64,
    pub stream: u64,
}

impl RngSpec {
    pub fn new(seed: u64, stream: u64) -> Self {
        RngSpec { seed, stream }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream);
        rng
    }

    /// Same seed, different stream.
    pub fn with_stream(&self, stream: u64) -> Self {
        RngSpec {
            seed: self.seed,
            stream,
        }
    }
}

/// Binary sum tree over per-event rates with exact parent refresh.
#[derive(Debug, Clone)]
pub struct RateTree {
    len: usize,
    base: usize,
    tree: Vec<f64>,
}

impl RateTree {
    pub fn new(rates: &[f64]) -> Self {
        let len = rates.len();
        let base = len.next_power_of_two().max(1);
        let mut tree = vec![0.0; 2 * base];
        tree[base..base + len].copy_from_slice(rates);
        for i in (1..base).rev() {
            tree[i] = tree[2 * i] + tree[2 * i + 1];
        }
        RateTree { len, base, tree }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn total(&self) -> f64 {
        self.tree[1]
    }

    pub fn rate(&self, i: usize) -> f64 {
        self.tree[self.base + i]
    }

    pub fn update(&mut self, i: usize, rate: f64) {
        let mut pos = self.base + i;
        self.tree[pos] = rate;
        pos /= 2;
        while pos >= 1 {
            self.tree[pos] = self.tree[2 * pos] + self.tree[2 * pos + 1];
            if pos == 1 {
                break;
            }
            pos /= 2;
        }
    }

    /// Leaf whose prefix-sum interval contains `x` (`0 <= x < total`),
    /// descending one branch per level.
    pub fn select(&self, mut x: f64) -> usize {
        let mut node = 1;
        while node < self.base {
            let left = self.tree[2 * node];
            if x < left {
                node = 2 * node;
            } else {
                x -= left;
                node = 2 * node + 1;
            }
        }
        (node - self.base).min(self.len - 1)
    }
}

/// One executed jump.
#[derive(Debug, Clone, Copy)]
pub struct Step {
    /// Macroscopic clock after the jump.
    pub time: f64,
    /// Index into the event catalog.
    pub event: usize,
    /// Sites whose occupancy changed (both `None` for a no-op exchange).
    pub changed: [Option<usize>; 2],
}

/// Event-driven simulator of one particle system replica.
pub struct Simulation {
    table: EventTable,
    config: Configuration,
    tree: RateTree,
    time: f64,
    rng: ChaCha8Rng,
    speed: f64,
}

impl Simulation {
    pub fn new(
        params: &ModelParams,
        b: &BoundaryProfile,
        initial: Configuration,
        rng: RngSpec,
    ) -> Result<Self> {
        let table = EventTable::new(params, b)?;
        if initial.len() != table.geom.site_count() {
            return Err(Error::shape("initial configuration has wrong site count"));
        }
        let rates: Vec<f64> = (0..table.len()).map(|k| table.rate(k, &initial)).collect();
        let tree = RateTree::new(&rates);
        let speed = table.geom.speedup();
        Ok(Simulation {
            table,
            config: initial,
            tree,
            time: 0.0,
            rng: rng.rng(),
            speed,
        })
    }

    pub fn geometry(&self) -> &LatticeGeometry {
        &self.table.geom
    }

    pub fn configuration(&self) -> &Configuration {
        &self.config
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn total_rate(&self) -> f64 {
        self.tree.total()
    }

    fn draw_wait(&mut self) -> f64 {
        let u: f64 = self.rng.gen();
        -(1.0 - u).ln() / (self.speed * self.tree.total())
    }

    fn execute_jump(&mut self) -> (usize, [Option<usize>; 2]) {
        let x: f64 = self.rng.gen::<f64>() * self.tree.total();
        let event = self.tree.select(x);
        let changed = self.table.apply(event, &mut self.config);
        for site in changed.into_iter().flatten() {
            for &dep in self.table.dependents_of(site) {
                self.tree
                    .update(dep as usize, self.table.rate(dep as usize, &self.config));
            }
        }
        (event, changed)
    }

    /// Executes exactly one jump.
    pub fn step(&mut self) -> Step {
        let wait = self.draw_wait();
        self.time += wait;
        let (event, changed) = self.execute_jump();
        Step {
            time: self.time,
            event,
            changed,
        }
    }

    /// Advances the clock to `deadline`, executing every jump before it.
    pub fn run_until(&mut self, deadline: f64) {
        loop {
            let wait = self.draw_wait();
            if self.time + wait > deadline {
                self.time = deadline;
                return;
            }
            self.time += wait;
            self.execute_jump();
        }
    }

    /// First time a configuration satisfying `target` is entered, if it
    /// happens before `cap` (the initial state is checked first).
    pub fn hitting_time(&mut self, target: impl Fn(&Configuration) -> bool, cap: f64) -> Option<f64> {
        if target(&self.config) {
            return Some(self.time);
        }
        while self.time < cap {
            let wait = self.draw_wait();
            if self.time + wait > cap {
                self.time = cap;
                return None;
            }
            self.time += wait;
            self.execute_jump();
            if target(&self.config) {
                return Some(self.time);
            }
        }
        None
    }
}

/// Draws a configuration with independent occupancies of mean
/// `profile(u1, u_transverse)` at each site's macroscopic position.
pub fn sample_profile_configuration(
    geom: &LatticeGeometry,
    profile: impl Fn(f64, &[f64]) -> f64,
    rng: &mut ChaCha8Rng,
) -> Configuration {
    let mut pos = vec![0.0; geom.d];
    let mut occ = vec![0u8; geom.site_count()];
    for (i, slot) in occ.iter_mut().enumerate() {
        geom.site_position(i, &mut pos);
        let p = profile(pos[0], &pos[1..]).clamp(0.0, 1.0);
        *slot = (rng.gen::<f64>() < p) as u8;
    }
    Configuration::from_occupancies(occ).expect("bits are 0 or 1")
}

/// Accumulates configurations into cell densities on a mesh.
///
/// Sites bin into the cell containing their macroscopic position (bins are
/// closed on the left); a cell's density is its particle count divided by
/// `n^d * volume`, the nominal site count of the cell.
pub struct EmpiricalProfile {
    mesh: Mesh,
    site_cell: Vec<u32>,
    nominal_sites: f64,
    sums: Vec<f64>,
    samples: usize,
}

impl EmpiricalProfile {
    pub fn new(geom: &LatticeGeometry, mesh: Mesh) -> Result<Self> {
        if mesh.d != geom.d {
            return Err(Error::shape("mesh and lattice disagree on dimension"));
        }
        let site_cell = (0..geom.site_count())
            .map(|i| site_cell_index(geom, &mesh, i) as u32)
            .collect();
        Ok(EmpiricalProfile {
            mesh,
            site_cell,
            nominal_sites: nominal_cell_sites(geom, &mesh),
            sums: vec![0.0; mesh.node_count()],
            samples: 0,
        })
    }

    pub fn add(&mut self, config: &Configuration) {
        debug_assert_eq!(config.len(), self.site_cell.len());
        for (i, &cell) in self.site_cell.iter().enumerate() {
            if config.occupied(i) {
                self.sums[cell as usize] += 1.0;
            }
        }
        self.samples += 1;
    }

    pub fn samples(&self) -> usize {
        self.samples
    }

    /// Mean cell densities over the added samples.
    pub fn mean(&self) -> Result<DensityField> {
        if self.samples == 0 {
            return Err(Error::invalid("no samples accumulated"));
        }
        let scale = self.nominal_sites * self.samples as f64;
        let values = self.sums.iter().map(|&s| s / scale).collect();
        DensityField::new(self.mesh, values)
    }
}

fn nominal_cell_sites(geom: &LatticeGeometry, mesh: &Mesh) -> f64 {
    (geom.n as f64).powi(geom.d as i32) * mesh.cell_volume()
}

/// Cell of the mesh containing site `i`'s macroscopic position.
pub fn site_cell_index(geom: &LatticeGeometry, mesh: &Mesh, i: usize) -> usize {
    let (c1, mut t) = geom.site_coords(i);
    let u1 = c1 as f64 / geom.n as f64;
    let i1 = ((u1 + 1.0) / mesh.h(0)).floor() as usize;
    let mut cell_t = 0;
    if geom.d > 1 {
        let mut digits = vec![0usize; geom.d - 1];
        for k in (0..geom.d - 1).rev() {
            digits[k] = t % geom.n;
            t /= geom.n;
        }
        for &j in &digits {
            let u = j as f64 / geom.n as f64;
            let bin = (u / mesh.h(1)).floor() as usize;
            cell_t = cell_t * mesh.mt + bin.min(mesh.mt - 1);
        }
    }
    mesh.node_index(i1.min(mesh.m1 - 1), cell_t)
}

/// Reference profile seen through the same site binning as
/// [`EmpiricalProfile`]: evaluates `f` at every site position and divides
/// per-cell sums by the nominal site count, so boundary cells that hold
/// fewer sites are biased identically on both sides of a comparison.
pub fn site_average_profile(
    geom: &LatticeGeometry,
    mesh: &Mesh,
    f: impl Fn(f64, &[f64]) -> f64,
) -> Result<DensityField> {
    if mesh.d != geom.d {
        return Err(Error::shape("mesh and lattice disagree on dimension"));
    }
    let mut sums = vec![0.0; mesh.node_count()];
    let mut pos = vec![0.0; geom.d];
    for i in 0..geom.site_count() {
        geom.site_position(i, &mut pos);
        sums[site_cell_index(geom, mesh, i)] += f(pos[0], &pos[1..]);
    }
    let scale = nominal_cell_sites(geom, mesh);
    DensityField::new(*mesh, sums.into_iter().map(|s| s / scale).collect())
}

/// Plan for a long stationary run summarized by batch means.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StationaryRunSpec {
    pub mesh: Mesh,
    /// Discarded initial stretch (macroscopic time).
    pub burn_in: f64,
    /// Averaging horizon after burn-in (macroscopic time).
    pub run_time: f64,
    /// Number of batches for the standard error (at least 20).
    pub batches: usize,
    /// Snapshots per batch.
    pub samples_per_batch: usize,
}

/// Stationary profile estimate with per-cell batch-means standard errors.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProfileEstimate {
    pub mean: DensityField,
    pub standard_error: Vec<f64>,
    pub batches: usize,
    pub samples: usize,
}

/// Long-run average of the empirical density with batch-means errors.
///
/// The chain starts from independent occupancies at the linear interpolation
/// of the face densities, discards `burn_in`, then averages snapshots taken
/// on a uniform grid, grouped into batches; the per-cell standard error is
/// the spread of the batch means.
pub fn stationary_profile_experiment(
    params: &ModelParams,
    b: &BoundaryProfile,
    spec: &StationaryRunSpec,
    rng: RngSpec,
) -> Result<ProfileEstimate> {
    if spec.batches < 20 {
        return Err(Error::invalid("batch means need at least 20 batches"));
    }
    if spec.samples_per_batch == 0 {
        return Err(Error::invalid("need at least one snapshot per batch"));
    }
    if !(spec.burn_in >= 0.0 && spec.run_time > 0.0) {
        return Err(Error::invalid("burn-in must be nonnegative and run time positive"));
    }
    let geom = LatticeGeometry::new(params);
    let mut generator = rng.rng();
    let initial = sample_profile_configuration(
        &geom,
        |u1, ut| {
            let w = 0.5 * (1.0 + u1);
            (1.0 - w) * b.value(crate::boundary::Face::Left, ut)
                + w * b.value(crate::boundary::Face::Right, ut)
        },
        &mut generator,
    );
    let mut sim = Simulation::new(params, b, initial, rng)?;
    sim.rng = generator;
    sim.run_until(spec.burn_in);

    let mesh = spec.mesh;
    let cells = mesh.node_count();
    let total_samples = spec.batches * spec.samples_per_batch;
    let dt = spec.run_time / total_samples as f64;
    let mut overall = EmpiricalProfile::new(&geom, mesh)?;
    let mut batch_means: Vec<Vec<f64>> = Vec::with_capacity(spec.batches);
    for batch in 0..spec.batches {
        let mut acc = EmpiricalProfile::new(&geom, mesh)?;
        for s in 0..spec.samples_per_batch {
            let k = (batch * spec.samples_per_batch + s + 1) as f64;
            sim.run_until(spec.burn_in + k * dt);
            acc.add(sim.configuration());
            overall.add(sim.configuration());
        }
        batch_means.push(acc.mean()?.values);
    }
    let mean = overall.mean()?;
    let mut standard_error = vec![0.0; cells];
    for c in 0..cells {
        let m = mean.values[c];
        let var: f64 = batch_means.iter().map(|bm| (bm[c] - m).powi(2)).sum::<f64>()
            / (spec.batches as f64 - 1.0);
        standard_error[c] = (var / spec.batches as f64).sqrt();
    }
    Ok(ProfileEstimate {
        mean,
        standard_error,
        batches: spec.batches,
        samples: total_samples,
    })
}

/// Fraction of time spent in each packed state over a long run (small
/// lattices only); converges to the stationary distribution.
pub fn occupation_histogram(
    params: &ModelParams,
    b: &BoundaryProfile,
    burn_in: f64,
    run_time: f64,
    rng: RngSpec,
) -> Result<Vec<f64>> {
    let geom = LatticeGeometry::new(params);
    let sites = geom.site_count();
    if sites > 20 {
        return Err(Error::StateSpaceTooLarge(format!(
            "{sites} sites is too many for a state histogram"
        )));
    }
    let mut sim = Simulation::new(params, b, Configuration::empty(&geom), rng)?;
    sim.run_until(burn_in);
    let mut hist = vec![0.0; 1 << sites];
    let deadline = burn_in + run_time;
    while sim.time() < deadline {
        let state = sim.configuration().state_code()? as usize;
        let before = sim.time();
        let wait = sim.draw_wait();
        if before + wait > deadline {
            hist[state] += deadline - before;
            sim.time = deadline;
            break;
        }
        sim.time += wait;
        sim.execute_jump();
        hist[state] += wait;
    }
    for v in hist.iter_mut() {
        *v /= run_time;
    }
    Ok(hist)
}

/// Terminal-state counts of independent replicas all started from `initial`
/// and run to time `t`; replica `k` uses stream `rng.stream + k`.
pub fn replica_state_counts(
    params: &ModelParams,
    b: &BoundaryProfile,
    initial: &Configuration,
    t: f64,
    replicas: usize,
    rng: RngSpec,
) -> Result<Vec<u64>> {
    let geom = LatticeGeometry::new(params);
    let sites = geom.site_count();
    if sites > 20 {
        return Err(Error::StateSpaceTooLarge(format!(
            "{sites} sites is too many for replica counting"
        )));
    }
    let mut counts = vec![0u64; 1 << sites];
    for k in 0..replicas {
        let mut sim = Simulation::new(params, b, initial.clone(), rng.with_stream(rng.stream + k as u64))?;
        sim.run_until(t);
        counts[sim.configuration().state_code()? as usize] += 1;
    }
    Ok(counts)
}
