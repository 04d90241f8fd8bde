//! Microscopic particle system on the discrete slab.
//!
//! Sites live on `{-(n-1), ..., n-1} x {0, ..., n-1}^(d-1)`: the first
//! coordinate runs across the slab and never wraps, the transverse
//! coordinates are periodic. Each site holds at most one particle. Dynamics
//! consist of nearest-neighbour exchanges whose rate reads the two sites
//! flanking the bond (substituting a reservoir density where the flanking
//! site would leave the slab) and of creation/annihilation flips on the two
//! wall layers driven by the reservoir densities. All rates here are order
//! one; the diffusive speedup `n^2` is applied by the clock of whichever
//! driver consumes the catalog.

use serde::{Deserialize, Serialize};

use crate::boundary::BoundaryProfile;
use crate::{Error, ModelParams, Result};

/// Site layout of the discrete slab.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LatticeGeometry {
    pub d: usize,
    pub n: usize,
}

impl LatticeGeometry {
    pub fn new(params: &ModelParams) -> Self {
        LatticeGeometry {
            d: params.d,
            n: params.n,
        }
    }

    /// Number of layers across the slab: `2n - 1`.
    pub fn slab_len(&self) -> usize {
        2 * self.n - 1
    }

    /// Number of sites in one transverse layer: `n^(d-1)`.
    pub fn transverse_count(&self) -> usize {
        self.n.pow((self.d - 1) as u32)
    }

    pub fn site_count(&self) -> usize {
        self.slab_len() * self.transverse_count()
    }

    /// Diffusive clock speedup `n^2`.
    pub fn speedup(&self) -> f64 {
        (self.n * self.n) as f64
    }

    /// Smallest and largest admissible first coordinate.
    pub fn c1_range(&self) -> (isize, isize) {
        let m = self.n as isize - 1;
        (-m, m)
    }

    fn transverse_stride(&self, k: usize) -> usize {
        self.n.pow((self.d - 2 - k) as u32)
    }

    /// Flat index; the first coordinate varies slowest.
    pub fn site_index(&self, c1: isize, t: usize) -> usize {
        debug_assert!(c1.unsigned_abs() < self.n && t < self.transverse_count());
        (c1 + self.n as isize - 1) as usize * self.transverse_count() + t
    }

    /// Inverse of [`site_index`](Self::site_index): `(c1, transverse index)`.
    pub fn site_coords(&self, idx: usize) -> (isize, usize) {
        let tc = self.transverse_count();
        ((idx / tc) as isize - (self.n as isize - 1), idx % tc)
    }

    /// Macroscopic position of a site: first coordinate `c1 / n` in
    /// `(-1, 1)`, transverse coordinates `t_k / n` in `[0, 1)`.
    pub fn site_position(&self, idx: usize, out: &mut [f64]) {
        debug_assert_eq!(out.len(), self.d);
        let (c1, mut t) = self.site_coords(idx);
        out[0] = c1 as f64 / self.n as f64;
        for k in (1..self.d).rev() {
            out[k] = (t % self.n) as f64 / self.n as f64;
            t /= self.n;
        }
    }

    /// Periodic neighbour of transverse index `t` in transverse dimension
    /// `k` (`0..d-1`), displaced by `step` layers.
    pub fn transverse_neighbor(&self, t: usize, k: usize, step: isize) -> usize {
        let stride = self.transverse_stride(k);
        let j = (t / stride) % self.n;
        let jn = (j as isize + step).rem_euclid(self.n as isize) as usize;
        t - j * stride + jn * stride
    }
}

/// Occupancy configuration with a cached particle count.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Configuration {
    occ: Vec<u8>,
    particles: usize,
}

impl Configuration {
    pub fn empty(geom: &LatticeGeometry) -> Self {
        Configuration {
            occ: vec![0; geom.site_count()],
            particles: 0,
        }
    }

    pub fn full(geom: &LatticeGeometry) -> Self {
        let n = geom.site_count();
        Configuration {
            occ: vec![1; n],
            particles: n,
        }
    }

    pub fn from_occupancies(occ: Vec<u8>) -> Result<Self> {
        if occ.iter().any(|&v| v > 1) {
            return Err(Error::domain("occupancies must be 0 or 1"));
        }
        let particles = occ.iter().map(|&v| v as usize).sum();
        Ok(Configuration { occ, particles })
    }

    pub fn len(&self) -> usize {
        self.occ.len()
    }

    pub fn is_empty(&self) -> bool {
        self.occ.is_empty()
    }

    #[inline]
    pub fn occupied(&self, i: usize) -> bool {
        self.occ[i] == 1
    }

    #[inline]
    pub fn value(&self, i: usize) -> f64 {
        self.occ[i] as f64
    }

    pub fn particle_count(&self) -> usize {
        self.particles
    }

    pub fn occupancies(&self) -> &[u8] {
        &self.occ
    }

    pub fn set(&mut self, i: usize, occupied: bool) {
        let new = occupied as u8;
        self.particles = self.particles + new as usize - self.occ[i] as usize;
        self.occ[i] = new;
    }

    #[inline]
    pub fn toggle(&mut self, i: usize) {
        if self.occ[i] == 1 {
            self.occ[i] = 0;
            self.particles -= 1;
        } else {
            self.occ[i] = 1;
            self.particles += 1;
        }
    }

    #[inline]
    pub fn swap(&mut self, i: usize, j: usize) {
        self.occ.swap(i, j);
    }

    /// Packs the configuration into an integer, bit `i` = occupancy of site
    /// `i`. Only available for state spaces that fit in 64 bits.
    pub fn state_code(&self) -> Result<u64> {
        if self.occ.len() > 63 {
            return Err(Error::StateSpaceTooLarge(format!(
                "{} sites do not fit a 64-bit state code",
                self.occ.len()
            )));
        }
        let mut code = 0u64;
        for (i, &v) in self.occ.iter().enumerate() {
            code |= (v as u64) << i;
        }
        Ok(code)
    }

    pub fn from_state_code(sites: usize, code: u64) -> Result<Self> {
        if sites > 63 {
            return Err(Error::StateSpaceTooLarge(format!(
                "{sites} sites do not fit a 64-bit state code"
            )));
        }
        let occ: Vec<u8> = (0..sites).map(|i| ((code >> i) & 1) as u8).collect();
        Configuration::from_occupancies(occ)
    }
}

/// A site the exchange rate reads, or the reservoir density standing in for
/// a site beyond the wall.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum NeighborRef {
    Site(usize),
    Reservoir(f64),
}

impl NeighborRef {
    #[inline]
    fn density(&self, config: &Configuration) -> f64 {
        match *self {
            NeighborRef::Site(i) => config.value(i),
            NeighborRef::Reservoir(b) => b,
        }
    }

    fn site(&self) -> Option<usize> {
        match *self {
            NeighborRef::Site(i) => Some(i),
            NeighborRef::Reservoir(_) => None,
        }
    }
}

/// One elementary transition of the jump dynamics.
///
/// `Exchange` swaps the contents of the bond `(x, y)`; its rate
/// `1 + a (eta(lower) + eta(upper))` reads only the two flanking slots and
/// in particular not the bond itself, so the catalog keeps bonds whose swap
/// happens to be a no-op. `Flip` toggles a wall site; an empty site fills at
/// rate `beta`, an occupied one empties at rate `1 - beta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Event {
    Exchange {
        x: usize,
        y: usize,
        lower: NeighborRef,
        upper: NeighborRef,
    },
    Flip {
        site: usize,
        beta: f64,
    },
}

impl Event {
    /// Jump rate in the current configuration (order one, no `n^2` factor).
    #[inline]
    pub fn rate(&self, a: f64, config: &Configuration) -> f64 {
        match *self {
            Event::Exchange { lower, upper, .. } => {
                1.0 + a * (lower.density(config) + upper.density(config))
            }
            Event::Flip { site, beta } => {
                if config.occupied(site) {
                    1.0 - beta
                } else {
                    beta
                }
            }
        }
    }

    /// Applies the transition; returns the sites whose occupancy changed.
    pub fn apply(&self, config: &mut Configuration) -> [Option<usize>; 2] {
        match *self {
            Event::Exchange { x, y, .. } => {
                if config.occupied(x) == config.occupied(y) {
                    [None, None]
                } else {
                    config.swap(x, y);
                    [Some(x), Some(y)]
                }
            }
            Event::Flip { site, .. } => {
                config.toggle(site);
                [Some(site), None]
            }
        }
    }

    /// Sites the rate reads.
    pub fn reads(&self) -> [Option<usize>; 2] {
        match *self {
            Event::Exchange { lower, upper, .. } => [lower.site(), upper.site()],
            Event::Flip { site, .. } => [Some(site), None],
        }
    }

    /// Sites the transition may write.
    pub fn writes(&self) -> [Option<usize>; 2] {
        match *self {
            Event::Exchange { x, y, .. } => [Some(x), Some(y)],
            Event::Flip { site, .. } => [Some(site), None],
        }
    }
}

/// The full static jump catalog of the model: every bond in every direction
/// and every wall flip, with reservoir substitutions resolved once.
#[derive(Debug, Clone)]
pub struct EventTable {
    pub geom: LatticeGeometry,
    a: f64,
    events: Vec<Event>,
    dependents: Vec<Vec<u32>>,
}

impl EventTable {
    /// Enumerates the jump catalog for the given interaction and reservoir
    /// profile. Order: slab-direction bonds (wall to wall, transverse index
    /// fastest), then each transverse direction, then left flips, then right
    /// flips.
    pub fn new(params: &ModelParams, b: &BoundaryProfile) -> Result<Self> {
        b.validate()?;
        let geom = LatticeGeometry::new(params);
        let faces = b.sample_lattice(geom.d, geom.n);
        let tc = geom.transverse_count();
        let (c1_min, c1_max) = geom.c1_range();
        let mut events = Vec::new();

        for c1 in c1_min..c1_max {
            for t in 0..tc {
                let x = geom.site_index(c1, t);
                let y = geom.site_index(c1 + 1, t);
                let lower = if c1 == c1_min {
                    NeighborRef::Reservoir(faces.left[t])
                } else {
                    NeighborRef::Site(geom.site_index(c1 - 1, t))
                };
                let upper = if c1 + 1 == c1_max {
                    NeighborRef::Reservoir(faces.right[t])
                } else {
                    NeighborRef::Site(geom.site_index(c1 + 2, t))
                };
                events.push(Event::Exchange { x, y, lower, upper });
            }
        }
        for k in 0..geom.d - 1 {
            for c1 in c1_min..=c1_max {
                for t in 0..tc {
                    let x = geom.site_index(c1, t);
                    let y = geom.site_index(c1, geom.transverse_neighbor(t, k, 1));
                    let lower = NeighborRef::Site(geom.site_index(c1, geom.transverse_neighbor(t, k, -1)));
                    let upper = NeighborRef::Site(geom.site_index(c1, geom.transverse_neighbor(t, k, 2)));
                    events.push(Event::Exchange { x, y, lower, upper });
                }
            }
        }
        for t in 0..tc {
            events.push(Event::Flip {
                site: geom.site_index(c1_min, t),
                beta: faces.left[t],
            });
        }
        for t in 0..tc {
            events.push(Event::Flip {
                site: geom.site_index(c1_max, t),
                beta: faces.right[t],
            });
        }

        let mut dependents = vec![Vec::new(); geom.site_count()];
        for (idx, ev) in events.iter().enumerate() {
            for site in ev.reads().into_iter().flatten() {
                dependents[site].push(idx as u32);
            }
        }
        // on tiny periodic rings both flanking slots may be the same site
        for list in &mut dependents {
            list.dedup();
        }
        Ok(EventTable {
            geom,
            a: params.a,
            events,
            dependents,
        })
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn interaction(&self) -> f64 {
        self.a
    }

    #[inline]
    pub fn rate(&self, event: usize, config: &Configuration) -> f64 {
        self.events[event].rate(self.a, config)
    }

    /// Events whose rate reads the given site.
    pub fn dependents_of(&self, site: usize) -> &[u32] {
        &self.dependents[site]
    }

    /// Applies event `event` and returns the changed sites (both `None` for
    /// a no-op exchange).
    pub fn apply(&self, event: usize, config: &mut Configuration) -> [Option<usize>; 2] {
        self.events[event].apply(config)
    }

    /// Sum of all jump rates in the current configuration (order one).
    pub fn total_rate(&self, config: &Configuration) -> f64 {
        self.events.iter().map(|e| e.rate(self.a, config)).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn table(a: f64, d: usize, n: usize, left: f64, right: f64) -> EventTable {
        let params = ModelParams::new(a, d, n).unwrap();
        let b = BoundaryProfile::two_sided(left, right).unwrap();
        EventTable::new(&params, &b).unwrap()
    }

    #[test]
    fn site_indexing_round_trips() {
        let geom = LatticeGeometry { d: 3, n: 4 };
        assert_eq!(geom.site_count(), 7 * 16);
        let mut seen = vec![false; geom.site_count()];
        for c1 in -3..=3isize {
            for t in 0..16 {
                let idx = geom.site_index(c1, t);
                assert!(!seen[idx]);
                seen[idx] = true;
                assert_eq!(geom.site_coords(idx), (c1, t));
            }
        }
        assert!(seen.iter().all(|&s| s));
    }

    #[test]
    fn first_coordinate_varies_slowest() {
        let geom = LatticeGeometry { d: 2, n: 3 };
        assert_eq!(geom.site_index(-2, 0), 0);
        assert_eq!(geom.site_index(-2, 2), 2);
        assert_eq!(geom.site_index(-1, 0), 3);
        assert_eq!(geom.site_index(2, 2), 14);
    }

    #[test]
    fn transverse_wrap_is_periodic() {
        let geom = LatticeGeometry { d: 2, n: 3 };
        assert_eq!(geom.transverse_neighbor(2, 0, 1), 0);
        assert_eq!(geom.transverse_neighbor(0, 0, -1), 2);
        assert_eq!(geom.transverse_neighbor(1, 0, 2), 0);
        let geom3 = LatticeGeometry { d: 3, n: 4 };
        // dimension 0 has stride 4, dimension 1 has stride 1
        assert_eq!(geom3.transverse_neighbor(13, 0, 1), 1);
        assert_eq!(geom3.transverse_neighbor(13, 1, -2), 15);
    }

    #[test]
    fn catalog_size_matches_bond_count() {
        // One event per slab bond, per transverse bond (one per site and
        // direction on the periodic ring), per wall site.
        let t = table(0.5, 1, 2, 0.2, 0.8);
        assert_eq!(t.len(), 2 + 2);
        let t = table(0.5, 2, 3, 0.2, 0.8);
        assert_eq!(t.len(), 4 * 3 + 15 + 6);
        let t = table(0.5, 3, 2, 0.2, 0.8);
        assert_eq!(t.len(), 2 * 4 + 2 * 12 + 2 * 4);
    }

    #[test]
    fn empty_configuration_rates() {
        let t = table(1.0, 1, 2, 0.2, 0.8);
        let config = Configuration::empty(&t.geom);
        // bonds (-1,0) and (0,1): flanking slots are (reservoir 0.2, site 1)
        // and (site -1, reservoir 0.8); empty sites contribute 0
        let rates: Vec<f64> = (0..t.len()).map(|k| t.rate(k, &config)).collect();
        assert!((rates[0] - 1.2).abs() < 1e-14);
        assert!((rates[1] - 1.8).abs() < 1e-14);
        // empty wall sites fill at the reservoir density
        assert!((rates[2] - 0.2).abs() < 1e-14);
        assert!((rates[3] - 0.8).abs() < 1e-14);
    }

    #[test]
    fn full_configuration_rates() {
        let t = table(1.0, 1, 2, 0.2, 0.8);
        let config = Configuration::full(&t.geom);
        let rates: Vec<f64> = (0..t.len()).map(|k| t.rate(k, &config)).collect();
        assert!((rates[0] - 2.2).abs() < 1e-14);
        assert!((rates[1] - 2.8).abs() < 1e-14);
        // occupied wall sites empty at one minus the reservoir density
        assert!((rates[2] - 0.8).abs() < 1e-14);
        assert!((rates[3] - 0.2).abs() < 1e-14);
    }

    #[test]
    fn no_interaction_makes_exchanges_unit_rate() {
        let t = table(0.0, 2, 3, 0.3, 0.6);
        let config = Configuration::from_state_code(t.geom.site_count(), 0b101_110_010_001_100).unwrap();
        for (k, ev) in t.events().iter().enumerate() {
            if matches!(ev, Event::Exchange { .. }) {
                assert_eq!(t.rate(k, &config), 1.0);
            }
        }
    }

    #[test]
    fn transitions_are_involutions() {
        let t = table(0.8, 2, 3, 0.2, 0.8);
        let reference = Configuration::from_state_code(t.geom.site_count(), 0b110_010_101_001_110).unwrap();
        for k in 0..t.len() {
            let mut config = reference.clone();
            t.apply(k, &mut config);
            t.apply(k, &mut config);
            assert_eq!(config, reference, "event {k} applied twice is not the identity");
        }
    }

    #[test]
    fn exchange_conserves_particles_and_flip_changes_by_one() {
        let t = table(0.8, 2, 3, 0.2, 0.8);
        let reference = Configuration::from_state_code(t.geom.site_count(), 0b001_110_100_011_010).unwrap();
        for (k, ev) in t.events().iter().enumerate() {
            let mut config = reference.clone();
            t.apply(k, &mut config);
            match ev {
                Event::Exchange { .. } => {
                    assert_eq!(config.particle_count(), reference.particle_count())
                }
                Event::Flip { .. } => {
                    let diff = config.particle_count() as isize - reference.particle_count() as isize;
                    assert_eq!(diff.abs(), 1);
                }
            }
        }
    }

    #[test]
    fn dependency_lists_are_exact() {
        // flipping a site changes an event rate iff the catalog records the
        // dependency; checked exhaustively on a small two-dimensional slab
        let t = table(0.7, 2, 2, 0.25, 0.7);
        let sites = t.geom.site_count();
        for code in [0u64, 0b10_11_01, 0b11_00_10, (1 << sites) - 1] {
            let base = Configuration::from_state_code(sites, code).unwrap();
            for s in 0..sites {
                let mut flipped = base.clone();
                flipped.toggle(s);
                for k in 0..t.len() {
                    let changed = (t.rate(k, &base) - t.rate(k, &flipped)).abs() > 0.0;
                    let recorded = t.dependents_of(s).contains(&(k as u32));
                    if changed {
                        assert!(recorded, "event {k} reads site {s} but is not registered");
                    }
                    let reads = t.events()[k].reads();
                    assert_eq!(recorded, reads.contains(&Some(s)));
                }
            }
        }
    }

    #[test]
    fn state_code_round_trips() {
        let geom = LatticeGeometry { d: 1, n: 3 };
        for code in 0..(1u64 << geom.site_count()) {
            let config = Configuration::from_state_code(geom.site_count(), code).unwrap();
            assert_eq!(config.state_code().unwrap(), code);
            assert_eq!(config.particle_count(), code.count_ones() as usize);
        }
    }

    proptest! {
        #[test]
        fn rates_are_strictly_positive(
            a in -0.49f64..3.0,
            left in 0.01f64..0.99,
            right in 0.01f64..0.99,
            code in 0u64..(1 << 15),
        ) {
            let t = table(a, 2, 3, left, right);
            let config = Configuration::from_state_code(t.geom.site_count(), code).unwrap();
            for k in 0..t.len() {
                prop_assert!(t.rate(k, &config) > 0.0);
            }
        }

        #[test]
        fn exchange_rate_ignores_the_bond_itself(
            a in -0.49f64..3.0,
            code in 0u64..(1 << 15),
        ) {
            let t = table(a, 2, 3, 0.2, 0.8);
            let config = Configuration::from_state_code(t.geom.site_count(), code).unwrap();
            for (k, ev) in t.events().iter().enumerate() {
                if let Event::Exchange { x, y, .. } = *ev {
                    let before = t.rate(k, &config);
                    let mut other = config.clone();
                    other.toggle(x);
                    prop_assert!((t.rate(k, &other) - before).abs() < 1e-15);
                    other.toggle(y);
                    let mut third = config.clone();
                    third.toggle(y);
                    prop_assert!((t.rate(k, &third) - before).abs() < 1e-15);
                }
            }
        }

        #[test]
        fn total_rate_matches_catalog_sum(code in 0u64..(1 << 9)) {
            let t = table(1.3, 1, 5, 0.35, 0.65);
            let config = Configuration::from_state_code(t.geom.site_count(), code).unwrap();
            let by_hand: f64 = (0..t.len()).map(|k| t.rate(k, &config)).sum();
            prop_assert!((t.total_rate(&config) - by_hand).abs() < 1e-12);
        }
    }
}
