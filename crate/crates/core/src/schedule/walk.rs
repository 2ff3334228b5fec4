use rand_distr::{Distribution, StandardNormal};

use crate::rng::KeyedRng;

use super::params::{reflect_tick, sample_initial_params, Bounds, ParamSpace, ParamVector, LATTICE, NUM_COMPONENTS};

/// Default per-step standard deviation as a fraction of each component's range.
pub const DEFAULT_STEP_FRACTION: f64 = 0.1;

/// Largest single increment magnitude in ticks; reflection folds anything larger.
const MAX_STEP_TICKS: f64 = (1u64 << 60) as f64;

/// Random-walk configuration: bounds, per-component step scales and seed.
#[derive(Debug, Clone, PartialEq)]
pub struct WalkSpec {
    pub space: ParamSpace,
    /// Standard deviation of each component's increment, in physical units.
    pub steps: [f64; NUM_COMPONENTS],
    pub seed: u64,
}

impl WalkSpec {
    pub fn new(space: ParamSpace, seed: u64) -> Self {
        Self::with_step_fraction(space, DEFAULT_STEP_FRACTION, seed)
    }

    pub fn with_step_fraction(space: ParamSpace, fraction: f64, seed: u64) -> Self {
        let steps = space.bounds.map(|b| fraction.max(0.0) * b.width());
        Self { space, steps, seed }
    }

    fn step_ticks(&self, i: usize) -> f64 {
        let width = self.space.bounds[i].width();
        if width <= 0.0 || self.steps[i] <= 0.0 {
            return 0.0;
        }
        self.steps[i] / width * LATTICE as f64
    }
}

/// Per-frame parameters of one sequence together with the increments that produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct DegradationTimeline {
    pub(crate) bounds: [Bounds; NUM_COMPONENTS],
    pub(crate) slots: Vec<ParamVector>,
    pub(crate) increments: Vec<[i64; NUM_COMPONENTS]>,
}

impl DegradationTimeline {
    /// A timeline that repeats `p` for `len` slots.
    pub fn constant(p: ParamVector, bounds: [Bounds; NUM_COMPONENTS], len: usize) -> Self {
        Self { bounds, slots: vec![p; len.max(1)], increments: vec![[0; NUM_COMPONENTS]; len.max(1) - 1] }
    }

    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    pub fn slots(&self) -> &[ParamVector] {
        &self.slots
    }

    pub fn slot(&self, i: usize) -> &ParamVector {
        &self.slots[i]
    }

    /// Raw lattice increments; `increments()[i]` produced slot `i + 1`.
    pub fn increments(&self) -> &[[i64; NUM_COMPONENTS]] {
        &self.increments
    }

    pub fn bounds(&self) -> &[Bounds; NUM_COMPONENTS] {
        &self.bounds
    }

    /// Rebuilds the slots from slot 0 and the recorded increments.
    pub fn replay(&self) -> Vec<ParamVector> {
        replay(&self.slots[0], &self.increments, &self.bounds)
    }
}

/// Applies `p_{i+1} = reflect(p_i + r_{i+1})` for each recorded increment.
pub fn replay(p0: &ParamVector, increments: &[[i64; NUM_COMPONENTS]], bounds: &[Bounds; NUM_COMPONENTS]) -> Vec<ParamVector> {
    let mut out = Vec::with_capacity(increments.len() + 1);
    out.push(p0.clone());
    for r in increments {
        out.push(advance(out.last().expect("non-empty"), r, bounds));
    }
    out
}

fn advance(p: &ParamVector, r: &[i64; NUM_COMPONENTS], bounds: &[Bounds; NUM_COMPONENTS]) -> ParamVector {
    let mut next = *p.ticks();
    for (t, dr) in next.iter_mut().zip(r) {
        *t = reflect_tick(*t + dr);
    }
    ParamVector::from_ticks(next, *p.discrete(), bounds)
}

/// Evolves `p0` for `n` slots. Increments are zero-mean Gaussian per component,
/// drawn from the stream keyed by `(spec.seed, sequence, slot, "walk")`.
pub fn random_walk(p0: &ParamVector, spec: &WalkSpec, n: usize, sequence: u64) -> DegradationTimeline {
    let n = n.max(1);
    let keyed = KeyedRng::new(spec.seed);
    let bounds = spec.space.bounds;
    let mut slots = Vec::with_capacity(n);
    let mut increments = Vec::with_capacity(n - 1);
    slots.push(ParamVector::from_ticks(*p0.ticks(), *p0.discrete(), &bounds));
    for slot in 1..n {
        let mut rng = keyed.stream(sequence, slot as u64, "walk");
        let mut r = [0i64; NUM_COMPONENTS];
        for (i, ri) in r.iter_mut().enumerate() {
            let z: f64 = StandardNormal.sample(&mut rng);
            *ri = (spec.step_ticks(i) * z).round().clamp(-MAX_STEP_TICKS, MAX_STEP_TICKS) as i64;
        }
        slots.push(advance(slots.last().expect("non-empty"), &r, &bounds));
        increments.push(r);
    }
    DegradationTimeline { bounds, slots, increments }
}

/// Samples initial parameters for `sequence` and walks them over `len` frame slots.
///
/// In the stochastic loading scheme the walk simply continues through the
/// temporally flipped half, so mirrored frames receive different parameters.
pub fn realize_timeline(len: usize, spec: &WalkSpec, sequence: u64) -> DegradationTimeline {
    let mut rng = KeyedRng::new(spec.seed).stream(sequence, 0, "init");
    let p0 = sample_initial_params(&spec.space, &mut rng);
    random_walk(&p0, spec, len, sequence)
}
