//! Exact finite-state reference for the particle system.
//!
//! For small lattices the full continuous-time Markov chain on the `2^S`
//! occupancy states is tractable: this module builds its generator from the
//! jump catalog, solves for the exact stationary distribution by dense
//! factorization, and propagates distributions in time by uniformization.
//! States are coded as integers, bit `i` holding the occupancy of site `i`.
//! All rates carry the diffusive `n^2` speedup, so times here are on the
//! same scale as the macroscopic equations.

use nalgebra::{DMatrix, DVector};

use crate::boundary::BoundaryProfile;
use crate::lattice::{Configuration, EventTable, LatticeGeometry};
use crate::{Error, ModelParams, Result};

/// Largest site count for which the exact chain is built.
pub const MAX_EXACT_SITES: usize = 12;

/// Per-chunk cap on `rate * time` in uniformization; keeps the leading
/// Poisson weight `exp(-rate * time)` far from the underflow threshold.
const UNIFORMIZATION_CHUNK: f64 = 400.0;

/// Exact continuous-time Markov chain on all occupancy states.
pub struct ExactChain {
    table: EventTable,
    sites: usize,
}

impl ExactChain {
    pub fn new(params: &ModelParams, b: &BoundaryProfile) -> Result<Self> {
        let table = EventTable::new(params, b)?;
        let sites = table.geom.site_count();
        if sites > MAX_EXACT_SITES {
            return Err(Error::StateSpaceTooLarge(format!(
                "{sites} sites give 2^{sites} states; exact treatment is capped at {MAX_EXACT_SITES} sites"
            )));
        }
        Ok(ExactChain { table, sites })
    }

    pub fn sites(&self) -> usize {
        self.sites
    }

    pub fn state_count(&self) -> usize {
        1 << self.sites
    }

    pub fn geometry(&self) -> &LatticeGeometry {
        &self.table.geom
    }

    pub fn catalog(&self) -> &EventTable {
        &self.table
    }

    /// Outgoing transitions of `state` as `(target, rate)` pairs, speedup
    /// included; no-op exchanges are dropped, duplicate targets not merged.
    pub fn transitions(&self, state: u64) -> Vec<(u64, f64)> {
        let speed = self.table.geom.speedup();
        let config = Configuration::from_state_code(self.sites, state)
            .expect("state code within capped range");
        let mut out = Vec::new();
        for k in 0..self.table.len() {
            let mut next = config.clone();
            let changed = self.table.apply(k, &mut next);
            if changed[0].is_none() {
                continue;
            }
            let target = next.state_code().expect("capped range");
            out.push((target, speed * self.table.rate(k, &config)));
        }
        out
    }

    /// Dense generator: off-diagonal `[s, s']` is the total jump rate from
    /// `s` to `s'`, the diagonal makes rows sum to zero.
    pub fn generator_matrix(&self) -> DMatrix<f64> {
        let m = self.state_count();
        let mut q = DMatrix::zeros(m, m);
        for s in 0..m {
            for (target, rate) in self.transitions(s as u64) {
                q[(s, target as usize)] += rate;
                q[(s, s)] -= rate;
            }
        }
        q
    }

    /// Exact stationary distribution: solves the balance equations with the
    /// normalization replacing one redundant row.
    pub fn stationary_distribution(&self) -> Result<Vec<f64>> {
        let m = self.state_count();
        let mut system = self.generator_matrix().transpose();
        for s in 0..m {
            system[(m - 1, s)] = 1.0;
        }
        let mut rhs = DVector::zeros(m);
        rhs[m - 1] = 1.0;
        let lu = system.lu();
        let pi = lu
            .solve(&rhs)
            .ok_or_else(|| Error::SolverFailure("stationary balance system is singular".into()))?;
        let mut dist: Vec<f64> = pi.iter().copied().collect();
        let floor = dist.iter().cloned().fold(f64::INFINITY, f64::min);
        if floor < -1e-10 {
            return Err(Error::SolverFailure(format!(
                "stationary solve produced mass {floor:.3e} below zero"
            )));
        }
        let mut total = 0.0;
        for v in dist.iter_mut() {
            *v = v.max(0.0);
            total += *v;
        }
        for v in dist.iter_mut() {
            *v /= total;
        }
        Ok(dist)
    }

    fn adjacency(&self) -> (Vec<Vec<(u32, f64)>>, Vec<f64>) {
        let m = self.state_count();
        let mut adj = Vec::with_capacity(m);
        let mut exit = vec![0.0; m];
        for s in 0..m {
            let list: Vec<(u32, f64)> = self
                .transitions(s as u64)
                .into_iter()
                .map(|(t, r)| (t as u32, r))
                .collect();
            exit[s] = list.iter().map(|&(_, r)| r).sum();
            adj.push(list);
        }
        (adj, exit)
    }

    /// Distribution at time `t` started from `p0`, by uniformization with
    /// the Poisson tail truncated below `1e-14` (long horizons are split
    /// into chunks to keep the weights representable).
    pub fn transient_distribution(&self, p0: &[f64], t: f64) -> Result<Vec<f64>> {
        let m = self.state_count();
        if p0.len() != m {
            return Err(Error::shape("initial distribution has wrong length"));
        }
        if !(t.is_finite() && t >= 0.0) {
            return Err(Error::invalid("time must be finite and nonnegative"));
        }
        let mass: f64 = p0.iter().sum();
        if p0.iter().any(|&v| v < -1e-14) || (mass - 1.0).abs() > 1e-10 {
            return Err(Error::domain("initial distribution must be a probability vector"));
        }
        let (adj, exit) = self.adjacency();
        let lambda = exit.iter().cloned().fold(0.0_f64, f64::max);
        if lambda == 0.0 || t == 0.0 {
            return Ok(p0.to_vec());
        }
        let chunks = (lambda * t / UNIFORMIZATION_CHUNK).ceil().max(1.0) as usize;
        let tau = t / chunks as f64;
        let lt = lambda * tau;

        let mut p = p0.to_vec();
        let mut v = vec![0.0; m];
        let mut next = vec![0.0; m];
        for _ in 0..chunks {
            v.copy_from_slice(&p);
            let mut out = vec![0.0; m];
            let mut weight = (-lt).exp();
            let mut cum = weight;
            for (s, &val) in v.iter().enumerate() {
                out[s] += weight * val;
            }
            let mut k = 0usize;
            let cap = (lt + 60.0 * lt.sqrt() + 200.0) as usize;
            while cum < 1.0 - 1e-14 {
                k += 1;
                if k > cap {
                    return Err(Error::SolverFailure(
                        "uniformization failed to converge within the Poisson cap".into(),
                    ));
                }
                // one application of the uniformized kernel, transposed
                for x in next.iter_mut() {
                    *x = 0.0;
                }
                for s in 0..m {
                    let val = v[s];
                    if val == 0.0 {
                        continue;
                    }
                    next[s] += val * (1.0 - exit[s] / lambda);
                    for &(tgt, r) in &adj[s] {
                        next[tgt as usize] += val * (r / lambda);
                    }
                }
                std::mem::swap(&mut v, &mut next);
                weight *= lt / k as f64;
                cum += weight;
                for (s, &val) in v.iter().enumerate() {
                    out[s] += weight * val;
                }
            }
            // absorb the truncated tail into a renormalization
            let total: f64 = out.iter().sum();
            for x in out.iter_mut() {
                *x /= total;
            }
            p = out;
        }
        Ok(p)
    }

    /// Expected occupancy of every site under `dist`.
    pub fn mean_occupancy(&self, dist: &[f64]) -> Vec<f64> {
        let mut profile = vec![0.0; self.sites];
        for (s, &w) in dist.iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            for (i, slot) in profile.iter_mut().enumerate() {
                if (s >> i) & 1 == 1 {
                    *slot += w;
                }
            }
        }
        profile
    }
}

/// Total variation distance between two distributions on the same states.
pub fn total_variation(p: &[f64], q: &[f64]) -> f64 {
    0.5 * p
        .iter()
        .zip(q.iter())
        .map(|(a, b)| (a - b).abs())
        .sum::<f64>()
}

/// Product measure with independent site occupancies.
pub fn product_bernoulli(densities: &[f64]) -> Vec<f64> {
    let sites = densities.len();
    let mut dist = vec![0.0; 1 << sites];
    for (s, slot) in dist.iter_mut().enumerate() {
        let mut w = 1.0;
        for (i, &rho) in densities.iter().enumerate() {
            w *= if (s >> i) & 1 == 1 { rho } else { 1.0 - rho };
        }
        *slot = w;
    }
    dist
}

/// Pearson goodness-of-fit p-value of observed state counts against a
/// reference distribution. Cells with expected count below 5 are pooled
/// into their most probable neighbor to keep the statistic calibrated.
pub fn chi_square_p_value(counts: &[u64], reference: &[f64]) -> Result<f64> {
    if counts.len() != reference.len() || counts.is_empty() {
        return Err(Error::shape("counts and reference must have equal nonzero length"));
    }
    let total: u64 = counts.iter().sum();
    if total == 0 {
        return Err(Error::domain("no observations"));
    }
    let mut cells: Vec<(f64, f64)> = counts
        .iter()
        .zip(reference.iter())
        .map(|(&c, &p)| (c as f64, p * total as f64))
        .collect();
    // pool ascending by expectation until every remaining cell has >= 5
    cells.sort_by(|a, b| a.1.total_cmp(&b.1));
    let mut pooled: Vec<(f64, f64)> = Vec::with_capacity(cells.len());
    let mut acc = (0.0, 0.0);
    for (o, e) in cells {
        acc.0 += o;
        acc.1 += e;
        if acc.1 >= 5.0 {
            pooled.push(acc);
            acc = (0.0, 0.0);
        }
    }
    if acc.1 > 0.0 {
        match pooled.last_mut() {
            Some(last) => {
                last.0 += acc.0;
                last.1 += acc.1;
            }
            None => return Err(Error::domain("expected counts too small to test")),
        }
    }
    if pooled.len() < 2 {
        return Err(Error::domain("too few cells after pooling"));
    }
    let stat: f64 = pooled
        .iter()
        .map(|(o, e)| (o - e) * (o - e) / e)
        .sum();
    let df = (pooled.len() - 1) as f64;
    let dist = statrs::distribution::ChiSquared::new(df)
        .map_err(|e| Error::SolverFailure(format!("chi-square setup: {e}")))?;
    use statrs::distribution::ContinuousCDF;
    Ok(1.0 - dist.cdf(stat))
}
