//! The stochastic evolution process: a growing multigraph of vertices with
//! central/peripheral weights, registries of N-stars and (N-1)-stars, and
//! preferential-attachment sampling over their weights.

pub mod sampler;

use crate::params::{ModelParams, ParamError};
use indexmap::IndexMap;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use sampler::WeightedSampler;
use smallvec::SmallVec;
use std::time::Instant;

type VertexId = u32;
type Peripherals = SmallVec<[VertexId; 4]>;

/// Identity of a star: its center plus the canonically sorted set of
/// peripheral vertices (N-1 of them for an N-star, N-2 for an (N-1)-star).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct StarKey {
    pub center: VertexId,
    pub peripherals: Peripherals,
}

impl StarKey {
    fn new(center: VertexId, mut peripherals: Peripherals) -> Self {
        peripherals.sort_unstable();
        debug_assert!(peripherals.windows(2).all(|w| w[0] < w[1]));
        debug_assert!(!peripherals.contains(&center));
        StarKey { center, peripherals }
    }
}

/// Registry of stars of one arity: key -> index lookup, per-index integer
/// weights, and a sampling structure whose total tracks the weights exactly.
pub struct StarRegistry {
    index: IndexMap<StarKey, ()>,
    sampler: WeightedSampler,
}

impl StarRegistry {
    fn new() -> Self {
        StarRegistry { index: IndexMap::new(), sampler: WeightedSampler::new() }
    }

    pub fn len(&self) -> usize {
        self.index.len()
    }

    pub fn is_empty(&self) -> bool {
        self.index.is_empty()
    }

    pub fn total_weight(&self) -> u64 {
        self.sampler.total()
    }

    pub fn weight(&self, idx: usize) -> u64 {
        self.sampler.weight(idx)
    }

    pub fn key(&self, idx: usize) -> &StarKey {
        self.index.get_index(idx).expect("index in range").0
    }

    pub fn iter(&self) -> impl Iterator<Item = (&StarKey, u64)> + '_ {
        self.index.keys().enumerate().map(|(i, k)| (k, self.sampler.weight(i)))
    }

    fn insert_new(&mut self, key: StarKey) {
        let (idx, prev) = self.index.insert_full(key, ());
        debug_assert!(prev.is_none(), "star already registered");
        debug_assert_eq!(idx, self.sampler.len());
        self.sampler.push(1);
    }

    /// Activation of a possibly existing star: +1 if present, weight 1 if new.
    fn activate(&mut self, key: StarKey) {
        let entry = self.index.entry(key);
        let idx = entry.index();
        entry.or_insert(());
        if idx == self.sampler.len() {
            self.sampler.push(1);
        } else {
            self.sampler.increment(idx, 1);
        }
    }

    fn increment(&mut self, idx: usize) {
        self.sampler.increment(idx, 1);
    }

    fn sample<R: Rng>(&self, rng: &mut R) -> usize {
        self.sampler.sample(rng).expect("registry never empty after init")
    }
}

/// Which of the four evolution branches a step executed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepKind {
    /// New vertex joins a preferentially sampled (N-1)-star as peripheral.
    NewVertexPreferential,
    /// New vertex becomes center over N-1 uniformly chosen old vertices.
    NewVertexUniform,
    /// Existing N-star reactivated, sampled proportionally to weight.
    OldStarPreferential,
    /// N uniformly chosen old vertices interact, center uniform among them.
    OldStarUniform,
}

impl StepKind {
    pub const ALL: [StepKind; 4] = [
        StepKind::NewVertexPreferential,
        StepKind::NewVertexUniform,
        StepKind::OldStarPreferential,
        StepKind::OldStarUniform,
    ];

    fn ix(self) -> usize {
        match self {
            StepKind::NewVertexPreferential => 0,
            StepKind::NewVertexUniform => 1,
            StepKind::OldStarPreferential => 2,
            StepKind::OldStarUniform => 3,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SimConfig {
    pub params: ModelParams,
    pub steps: u64,
    pub seed: u64,
    pub record_edges: bool,
}

impl SimConfig {
    pub fn new(params: ModelParams, steps: u64, seed: u64) -> Self {
        SimConfig { params, steps, seed, record_edges: false }
    }
}

/// The evolving multigraph. Mutation is single-threaded; finished states are
/// immutable and safe to share.
pub struct GraphState {
    params: ModelParams,
    w1: Vec<u64>,
    w2: Vec<u64>,
    sum_w1: u64,
    sum_w2: u64,
    nstars: StarRegistry,
    substars: StarRegistry,
    steps: u64,
    rng: ChaCha12Rng,
    branch_counts: [u64; 4],
    edges: Option<Vec<(VertexId, VertexId)>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub steps: u64,
    pub vertices: usize,
    pub branch_counts: [u64; 4],
    pub nstar_count: usize,
    pub substar_count: usize,
    pub digest: u64,
    pub elapsed_secs: f64,
}

impl GraphState {
    /// Initial graph: one N-star of weight 1 (center 0, peripherals 1..N-1)
    /// with its N-1 sub-stars at weight 1; the initial star counts as one
    /// activation, so the center starts at (w1, w2) = (1, 0) and each
    /// peripheral at (0, 1).
    pub fn init(params: ModelParams, seed: u64) -> Result<Self, ParamError> {
        Self::init_with(params, seed, false)
    }

    pub fn init_with(
        params: ModelParams,
        seed: u64,
        record_edges: bool,
    ) -> Result<Self, ParamError> {
        params.validate_simulation()?;
        let n = params.n as usize;
        let mut state = GraphState {
            params,
            w1: vec![0; n],
            w2: vec![0; n],
            sum_w1: 0,
            sum_w2: 0,
            nstars: StarRegistry::new(),
            substars: StarRegistry::new(),
            steps: 0,
            rng: ChaCha12Rng::seed_from_u64(seed),
            branch_counts: [0; 4],
            edges: record_edges.then(Vec::new),
        };
        let peripherals: Peripherals = (1..params.n).collect();
        let key = StarKey::new(0, peripherals.clone());
        for sub in substar_keys(&key) {
            state.substars.insert_new(sub);
        }
        state.nstars.insert_new(key);
        state.record_interaction(0, &peripherals);
        Ok(state)
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    pub fn vertex_count(&self) -> usize {
        self.w1.len()
    }

    pub fn weights(&self, v: usize) -> (u64, u64) {
        (self.w1[v], self.w2[v])
    }

    pub fn vertex_weights(&self) -> impl Iterator<Item = (u64, u64)> + '_ {
        self.w1.iter().zip(&self.w2).map(|(&a, &b)| (a, b))
    }

    pub fn branch_counts(&self) -> [u64; 4] {
        self.branch_counts
    }

    pub fn nstars(&self) -> &StarRegistry {
        &self.nstars
    }

    pub fn substars(&self) -> &StarRegistry {
        &self.substars
    }

    pub fn edges(&self) -> Option<&[(VertexId, VertexId)]> {
        self.edges.as_deref()
    }

    fn record_interaction(&mut self, center: VertexId, peripherals: &[VertexId]) {
        self.w1[center as usize] += 1;
        self.sum_w1 += 1;
        for &v in peripherals {
            self.w2[v as usize] += 1;
            self.sum_w2 += 1;
        }
        if let Some(edges) = &mut self.edges {
            edges.extend(peripherals.iter().map(|&v| (v, center)));
        }
    }

    fn add_vertex(&mut self) -> VertexId {
        let id = self.w1.len() as VertexId;
        self.w1.push(0);
        self.w2.push(0);
        id
    }

    /// `count` distinct existing vertices, uniformly, by rejection.
    fn sample_distinct(&mut self, count: usize) -> Peripherals {
        let pool = self.w1.len() as VertexId;
        debug_assert!(count <= pool as usize);
        let mut chosen: Peripherals = SmallVec::new();
        while chosen.len() < count {
            let v = self.rng.gen_range(0..pool);
            if !chosen.contains(&v) {
                chosen.push(v);
            }
        }
        chosen
    }

    /// Execute one evolution step and report which branch fired.
    pub fn step(&mut self) -> StepKind {
        let ModelParams { p, q, r, n } = self.params;
        let n = n as usize;
        let u: f64 = self.rng.gen();
        let kind = if u < p * r {
            StepKind::NewVertexPreferential
        } else if u < p {
            StepKind::NewVertexUniform
        } else if u < p + (1.0 - p) * q {
            StepKind::OldStarPreferential
        } else {
            StepKind::OldStarUniform
        };
        match kind {
            StepKind::NewVertexPreferential => {
                let idx = {
                    let i = self.substars.sample(&mut self.rng);
                    i
                };
                let old = self.substars.key(idx).clone();
                let newcomer = self.add_vertex();
                let mut peripherals = old.peripherals.clone();
                peripherals.push(newcomer);
                let star = StarKey::new(old.center, peripherals);
                // sub-stars containing the newcomer are all new; the one
                // without it is exactly the sampled old (N-1)-star
                for sub in substar_keys(&star) {
                    if sub.peripherals.contains(&newcomer) {
                        self.substars.insert_new(sub);
                    }
                }
                self.substars.increment(idx);
                let peripherals = star.peripherals.clone();
                self.nstars.insert_new(star);
                self.record_interaction(old.center, &peripherals);
            }
            StepKind::NewVertexUniform => {
                let peripherals = self.sample_distinct(n - 1);
                let newcomer = self.add_vertex();
                let star = StarKey::new(newcomer, peripherals);
                for sub in substar_keys(&star) {
                    self.substars.insert_new(sub);
                }
                let peripherals = star.peripherals.clone();
                self.nstars.insert_new(star);
                self.record_interaction(newcomer, &peripherals);
            }
            StepKind::OldStarPreferential => {
                let idx = self.nstars.sample(&mut self.rng);
                let star = self.nstars.key(idx).clone();
                self.nstars.increment(idx);
                for sub in substar_keys(&star) {
                    self.substars.activate(sub);
                }
                self.record_interaction(star.center, &star.peripherals);
            }
            StepKind::OldStarUniform => {
                let mut chosen = self.sample_distinct(n);
                let center_pos = self.rng.gen_range(0..n);
                let center = chosen.swap_remove(center_pos);
                let star = StarKey::new(center, chosen);
                for sub in substar_keys(&star) {
                    self.substars.activate(sub);
                }
                let peripherals = star.peripherals.clone();
                self.nstars.activate(star);
                self.record_interaction(center, &peripherals);
            }
        }
        self.steps += 1;
        self.branch_counts[kind.ix()] += 1;
        debug_assert!(self.check_conservation(), "conservation broken at step {}", self.steps);
        kind
    }

    /// The four integer conservation identities, from running totals.
    pub fn check_conservation(&self) -> bool {
        let activations = self.steps + 1;
        let nf = u64::from(self.params.n);
        self.nstars.total_weight() == activations
            && self.substars.total_weight() == (nf - 1) * activations
            && self.sum_w1 == activations
            && self.sum_w2 == (nf - 1) * activations
    }

    /// Recompute every total from scratch and compare with the running
    /// counters; O(V + stars).
    pub fn audit(&self) -> Result<(), String> {
        let w1_sum: u64 = self.w1.iter().sum();
        let w2_sum: u64 = self.w2.iter().sum();
        if w1_sum != self.sum_w1 || w2_sum != self.sum_w2 {
            return Err("vertex weight counters drifted".into());
        }
        let nstar_sum: u64 = (0..self.nstars.len()).map(|i| self.nstars.weight(i)).sum();
        if nstar_sum != self.nstars.total_weight() {
            return Err("N-star sampler total drifted".into());
        }
        let substar_sum: u64 = (0..self.substars.len()).map(|i| self.substars.weight(i)).sum();
        if substar_sum != self.substars.total_weight() {
            return Err("(N-1)-star sampler total drifted".into());
        }
        if !self.check_conservation() {
            return Err("conservation identities violated".into());
        }
        Ok(())
    }

    /// Exhaustive check that every (N-1)-star weight equals the sum of the
    /// weights of the N-stars containing it. O(stars * N); short runs only.
    pub fn verify_substar_consistency(&self) -> Result<(), String> {
        let mut expected: IndexMap<StarKey, u64> = IndexMap::new();
        for (key, weight) in self.nstars.iter() {
            for sub in substar_keys(key) {
                *expected.entry(sub).or_insert(0) += weight;
            }
        }
        if expected.len() != self.substars.len() {
            return Err(format!(
                "substar count mismatch: derived {}, registered {}",
                expected.len(),
                self.substars.len()
            ));
        }
        for (key, weight) in self.substars.iter() {
            match expected.get(key) {
                Some(&w) if w == weight => {}
                Some(&w) => {
                    return Err(format!(
                        "substar {key:?} weight {weight} != containing-star sum {w}"
                    ))
                }
                None => return Err(format!("substar {key:?} not derivable from N-stars")),
            }
        }
        Ok(())
    }

    /// Order-independent-free FNV-1a digest of the full state, for
    /// reproducibility checks.
    pub fn digest(&self) -> u64 {
        let mut h = Fnv1a::new();
        h.write_u64(u64::from(self.params.n));
        h.write_u64(self.steps);
        for (&a, &b) in self.w1.iter().zip(&self.w2) {
            h.write_u64(a);
            h.write_u64(b);
        }
        for reg in [&self.nstars, &self.substars] {
            for (key, weight) in reg.iter() {
                h.write_u64(u64::from(key.center));
                for &v in &key.peripherals {
                    h.write_u64(u64::from(v));
                }
                h.write_u64(weight);
            }
        }
        h.finish()
    }
}

/// The N-1 (resp. N-2)-peripheral sub-stars obtained by dropping one
/// peripheral vertex; the center is kept.
fn substar_keys(star: &StarKey) -> impl Iterator<Item = StarKey> + '_ {
    (0..star.peripherals.len()).map(move |skip| {
        let peripherals = star
            .peripherals
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != skip)
            .map(|(_, &v)| v)
            .collect();
        // already sorted: dropping an element preserves order
        StarKey { center: star.center, peripherals }
    })
}

/// Run a full simulation from a config.
pub fn run(config: &SimConfig) -> Result<(GraphState, RunSummary), ParamError> {
    let start = Instant::now();
    let mut state = GraphState::init_with(config.params, config.seed, config.record_edges)?;
    for _ in 0..config.steps {
        state.step();
    }
    let summary = RunSummary {
        steps: state.steps,
        vertices: state.vertex_count(),
        branch_counts: state.branch_counts,
        nstar_count: state.nstars.len(),
        substar_count: state.substars.len(),
        digest: state.digest(),
        elapsed_secs: start.elapsed().as_secs_f64(),
    };
    Ok((state, summary))
}

struct Fnv1a(u64);

impl Fnv1a {
    fn new() -> Self {
        Fnv1a(0xcbf29ce484222325)
    }

    fn write_u64(&mut self, v: u64) {
        for byte in v.to_le_bytes() {
            self.0 ^= u64::from(byte);
            self.0 = self.0.wrapping_mul(0x100000001b3);
        }
    }

    fn finish(&self) -> u64 {
        self.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(n: u32, p: f64, q: f64, r: f64) -> ModelParams {
        ModelParams::new(n, p, q, r).unwrap()
    }

    #[test]
    fn initial_state_n4() {
        let s = GraphState::init(params(4, 0.4, 0.4, 0.4), 1).unwrap();
        assert_eq!(s.vertex_count(), 4);
        assert_eq!(s.nstars.len(), 1);
        assert_eq!(s.nstars.total_weight(), 1);
        assert_eq!(s.substars.len(), 3);
        assert_eq!(s.substars.total_weight(), 3);
        assert_eq!(s.sum_w1, 1);
        assert_eq!(s.sum_w2, 3);
        assert_eq!(s.weights(0), (1, 0));
        assert_eq!(s.weights(1), (0, 1));
        assert!(s.check_conservation());
        s.verify_substar_consistency().unwrap();
    }

    #[test]
    fn same_seed_same_digest() {
        let cfg = SimConfig::new(params(4, 0.4, 0.4, 0.4), 500, 42);
        let (_, a) = run(&cfg).unwrap();
        let (_, b) = run(&cfg).unwrap();
        assert_eq!(a.digest, b.digest);
        let cfg2 = SimConfig::new(params(4, 0.4, 0.4, 0.4), 500, 43);
        let (_, c) = run(&cfg2).unwrap();
        assert_ne!(a.digest, c.digest);
    }

    #[test]
    fn single_step_totals() {
        let mut s = GraphState::init(params(4, 0.4, 0.4, 0.4), 7).unwrap();
        s.step();
        assert_eq!(s.nstars.total_weight(), 2);
        assert_eq!(s.substars.total_weight(), 6);
    }

    #[test]
    fn forced_new_center_branch() {
        // p=1, r=0 forces every step into the uniform new-center branch
        let mut s = GraphState::init(params(4, 1.0, 0.5, 0.0), 3).unwrap();
        for _ in 0..50 {
            assert_eq!(s.step(), StepKind::NewVertexUniform);
        }
        let newest = s.vertex_count() - 1;
        assert_eq!(s.weights(newest), (1, 0));
        assert_eq!(s.vertex_count(), 4 + 50);
        s.verify_substar_consistency().unwrap();
    }

    #[test]
    fn forced_single_star_chain() {
        // p -> 0, q = 1: the lone N-star is reactivated forever
        let mut s = GraphState::init(params(4, 1e-12, 1.0, 0.5), 11).unwrap();
        for i in 0..10 {
            assert_eq!(s.step(), StepKind::OldStarPreferential);
            assert_eq!(s.nstars.len(), 1);
            assert_eq!(s.nstars.weight(0), i + 2);
        }
        assert_eq!(s.weights(0), (11, 0));
        s.verify_substar_consistency().unwrap();
    }

    #[test]
    fn vertex_count_tracks_new_vertex_branches() {
        let cfg = SimConfig::new(params(5, 0.7, 0.3, 0.6), 2000, 9);
        let (state, summary) = run(&cfg).unwrap();
        assert_eq!(
            state.vertex_count() - 5,
            (summary.branch_counts[0] + summary.branch_counts[1]) as usize
        );
        state.audit().unwrap();
    }

    #[test]
    fn substar_consistency_short_runs() {
        for seed in 0..5 {
            let cfg = SimConfig::new(params(4, 0.4, 0.4, 0.4), 1000, seed);
            let (state, _) = run(&cfg).unwrap();
            state.verify_substar_consistency().unwrap();
            state.audit().unwrap();
        }
        let cfg = SimConfig::new(params(5, 0.3, 0.8, 0.2), 1000, 77);
        let (state, _) = run(&cfg).unwrap();
        state.verify_substar_consistency().unwrap();
    }

    #[test]
    fn zero_steps_leaves_initial_state() {
        let cfg = SimConfig::new(params(4, 0.4, 0.4, 0.4), 0, 5);
        let (state, summary) = run(&cfg).unwrap();
        assert_eq!(summary.vertices, 4);
        assert_eq!(summary.branch_counts, [0; 4]);
        assert_eq!(state.nstars.total_weight(), 1);
    }

    #[test]
    fn edge_log_matches_degree_relations() {
        let params = params(4, 0.4, 0.4, 0.4);
        let cfg =
            SimConfig { params, steps: 300, seed: 3, record_edges: true };
        let (state, _) = run(&cfg).unwrap();
        let edges = state.edges().unwrap();
        let n = u64::from(params.n);
        assert_eq!(edges.len() as u64, (n - 1) * (state.steps() + 1));
        let mut indeg = vec![0u64; state.vertex_count()];
        let mut outdeg = vec![0u64; state.vertex_count()];
        for &(from, to) in edges {
            outdeg[from as usize] += 1;
            indeg[to as usize] += 1;
        }
        for v in 0..state.vertex_count() {
            let (w1, w2) = state.weights(v);
            assert_eq!(indeg[v], (n - 1) * w1);
            assert_eq!(outdeg[v], w2);
        }
    }
}
