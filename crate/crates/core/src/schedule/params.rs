use std::fmt;

use rand::Rng;

use crate::degrade::{
    BlurSpec, CodecBackend, CodecName, DegradeRanges, JpegSpec, NoiseKind, NoiseSpec, ResizeMode, ResizeSpec,
    VideoCodecSpec,
};

/// Number of lattice steps spanning each component's `[min, max]` range.
///
/// Parameters live on this integer lattice so increments add and reflect
/// exactly; `2^52` steps keep every lattice point exactly representable.
pub const LATTICE: i64 = 1 << 52;

/// First or second pass of the degradation chain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Order {
    First,
    Second,
}

impl Order {
    pub(crate) fn index(self) -> usize {
        match self {
            Order::First => 0,
            Order::Second => 1,
        }
    }
}

macro_rules! components {
    ($($variant:ident => $name:literal),+ $(,)?) => {
        /// Continuous, walked parameters of a [`ParamVector`].
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
        pub enum Component { $($variant),+ }

        impl Component {
            pub const ALL: [Component; [$($name),+].len()] = [$(Component::$variant),+];

            pub fn name(self) -> &'static str {
                match self { $(Component::$variant => $name),+ }
            }
        }
    };
}

components! {
    Blur1SigmaX => "blur1.sigma_x",
    Blur1SigmaY => "blur1.sigma_y",
    Blur1Rotation => "blur1.rotation",
    Resize1Scale => "resize1.scale",
    Noise1Sigma => "noise1.sigma",
    Noise1PoissonScale => "noise1.poisson_scale",
    Jpeg1Quality => "jpeg1.quality",
    Blur2SigmaX => "blur2.sigma_x",
    Blur2SigmaY => "blur2.sigma_y",
    Blur2Rotation => "blur2.rotation",
    Resize2Scale => "resize2.scale",
    Noise2Sigma => "noise2.sigma",
    Noise2PoissonScale => "noise2.poisson_scale",
    Jpeg2Quality => "jpeg2.quality",
    Bitrate => "video.bitrate",
}

pub const NUM_COMPONENTS: usize = Component::ALL.len();

impl Component {
    #[inline]
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|c| c.name() == name)
    }

    fn of_order(order: Order, first: Component, second: Component) -> Component {
        match order {
            Order::First => first,
            Order::Second => second,
        }
    }
}

impl fmt::Display for Component {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Closed interval of a continuous component.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bounds {
    pub min: f64,
    pub max: f64,
}

impl Bounds {
    pub fn new(min: f64, max: f64) -> Self {
        Self { min, max }
    }

    pub fn width(&self) -> f64 {
        self.max - self.min
    }

    /// Physical value of a lattice point.
    pub fn value_at(&self, tick: i64) -> f64 {
        if tick == 0 || self.max == self.min {
            return self.min;
        }
        if tick == LATTICE {
            return self.max;
        }
        (self.min + self.width() * (tick as f64 / LATTICE as f64)).clamp(self.min, self.max)
    }
}

/// Choices held fixed for a whole sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DiscreteChoices {
    pub kernel_size: [usize; 2],
    pub resize_mode: [ResizeMode; 2],
    /// `true` selects Gaussian noise, `false` Poisson.
    pub gaussian_noise: [bool; 2],
    pub gray_noise: [bool; 2],
    pub codec: CodecName,
}

/// Sampling space: component bounds plus the discrete choice sets.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamSpace {
    pub bounds: [Bounds; NUM_COMPONENTS],
    pub ranges: DegradeRanges,
}

impl ParamSpace {
    pub fn from_ranges(ranges: &DegradeRanges) -> Self {
        use Component::*;
        let b = |(lo, hi): (f64, f64)| Bounds::new(lo, hi);
        let mut bounds = [Bounds::new(0.0, 0.0); NUM_COMPONENTS];
        for c in Component::ALL {
            bounds[c.index()] = match c {
                Blur1SigmaX | Blur1SigmaY | Blur2SigmaX | Blur2SigmaY => b(ranges.blur_sigma),
                Blur1Rotation | Blur2Rotation => b(ranges.blur_rotation),
                Resize1Scale | Resize2Scale => b(ranges.resize_scale),
                Noise1Sigma | Noise2Sigma => b(ranges.gaussian_sigma),
                Noise1PoissonScale | Noise2PoissonScale => b(ranges.poisson_scale),
                Jpeg1Quality | Jpeg2Quality => b(ranges.jpeg_quality),
                Bitrate => b(ranges.bitrate),
            };
        }
        Self { bounds, ranges: ranges.clone() }
    }

    pub fn bounds(&self, c: Component) -> Bounds {
        self.bounds[c.index()]
    }
}

impl Default for ParamSpace {
    fn default() -> Self {
        Self::from_ranges(&DegradeRanges::default())
    }
}

/// Degradation parameters of one frame slot.
///
/// Continuous components are stored as lattice ticks in `[0, LATTICE]`;
/// [`ParamVector::value`] maps them into the component's bounds.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamVector {
    ticks: [i64; NUM_COMPONENTS],
    values: [f64; NUM_COMPONENTS],
    discrete: DiscreteChoices,
}

impl ParamVector {
    /// Builds a vector from lattice ticks; ticks outside `[0, LATTICE]` are folded back in.
    pub fn from_ticks(ticks: [i64; NUM_COMPONENTS], discrete: DiscreteChoices, bounds: &[Bounds; NUM_COMPONENTS]) -> Self {
        let ticks = ticks.map(reflect_tick);
        let mut values = [0.0; NUM_COMPONENTS];
        for (i, v) in values.iter_mut().enumerate() {
            *v = bounds[i].value_at(ticks[i]);
        }
        Self { ticks, values, discrete }
    }

    pub fn ticks(&self) -> &[i64; NUM_COMPONENTS] {
        &self.ticks
    }

    pub fn tick(&self, c: Component) -> i64 {
        self.ticks[c.index()]
    }

    pub fn value(&self, c: Component) -> f64 {
        self.values[c.index()]
    }

    pub fn values(&self) -> &[f64; NUM_COMPONENTS] {
        &self.values
    }

    pub fn discrete(&self) -> &DiscreteChoices {
        &self.discrete
    }

    pub fn blur_spec(&self, order: Order) -> BlurSpec {
        use Component::*;
        BlurSpec {
            kernel_size: self.discrete.kernel_size[order.index()],
            sigma_x: self.value(Component::of_order(order, Blur1SigmaX, Blur2SigmaX)),
            sigma_y: self.value(Component::of_order(order, Blur1SigmaY, Blur2SigmaY)),
            rotation: self.value(Component::of_order(order, Blur1Rotation, Blur2Rotation)),
        }
    }

    pub fn resize_spec(&self, order: Order) -> ResizeSpec {
        ResizeSpec {
            scale: self.value(Component::of_order(order, Component::Resize1Scale, Component::Resize2Scale)),
            mode: self.discrete.resize_mode[order.index()],
        }
    }

    pub fn noise_spec(&self, order: Order) -> NoiseSpec {
        use Component::*;
        let kind = if self.discrete.gaussian_noise[order.index()] {
            NoiseKind::Gaussian { sigma: self.value(Component::of_order(order, Noise1Sigma, Noise2Sigma)) }
        } else {
            NoiseKind::Poisson {
                scale: self.value(Component::of_order(order, Noise1PoissonScale, Noise2PoissonScale)),
            }
        };
        NoiseSpec { kind, gray_noise: self.discrete.gray_noise[order.index()] }
    }

    pub fn jpeg_spec(&self, order: Order) -> JpegSpec {
        let q = self.value(Component::of_order(order, Component::Jpeg1Quality, Component::Jpeg2Quality));
        JpegSpec { quality: q.round().clamp(1.0, 100.0) as u8 }
    }

    pub fn video_spec(&self, backend: CodecBackend) -> VideoCodecSpec {
        VideoCodecSpec::from_bitrate(backend, self.discrete.codec, self.value(Component::Bitrate).round() as u32)
    }
}

/// Folds a tick into `[0, LATTICE]` by mirror reflection at both ends.
pub(crate) fn reflect_tick(t: i64) -> i64 {
    let period = 2 * LATTICE;
    let m = t.rem_euclid(period);
    if m > LATTICE {
        period - m
    } else {
        m
    }
}

fn pick<T: Copy, R: Rng + ?Sized>(choices: &[T], rng: &mut R) -> T {
    choices[rng.gen_range(0..choices.len())]
}

/// Draws every continuous component uniformly within its bounds and every
/// discrete choice uniformly from its set (noise kind and gray noise by their
/// configured probabilities).
pub fn sample_initial_params<R: Rng + ?Sized>(space: &ParamSpace, rng: &mut R) -> ParamVector {
    let mut ticks = [0i64; NUM_COMPONENTS];
    for t in ticks.iter_mut() {
        *t = rng.gen_range(0..=LATTICE);
    }
    let kernels = space.ranges.kernel_sizes();
    let r = &space.ranges;
    let discrete = DiscreteChoices {
        kernel_size: [pick(&kernels, rng), pick(&kernels, rng)],
        resize_mode: [pick(&r.resize_modes, rng), pick(&r.resize_modes, rng)],
        gaussian_noise: [rng.gen_bool(r.gaussian_noise_prob), rng.gen_bool(r.gaussian_noise_prob)],
        gray_noise: [rng.gen_bool(r.gray_noise_prob), rng.gen_bool(r.gray_noise_prob)],
        codec: pick(&r.codecs, rng),
    };
    ParamVector::from_ticks(ticks, discrete, &space.bounds)
}
