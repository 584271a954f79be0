//! Seeded random instances.

use crate::model::{lower_bound_t, Instance, Job};
use crate::rational::{rat, Rational};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Instance families.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    /// Uniform lengths and requirements.
    Random,
    /// About one job per machine longer than half the lower bound, plus short fillers.
    HugeHeavy,
    /// Requirements of at least half the resource.
    WideHeavy,
    /// A few long jobs and many very short ones.
    ManySmall,
}

impl Family {
    pub const ALL: [Family; 4] = [Family::Random, Family::HugeHeavy, Family::WideHeavy, Family::ManySmall];

    pub fn name(self) -> &'static str {
        match self {
            Family::Random => "random",
            Family::HugeHeavy => "huge-heavy",
            Family::WideHeavy => "wide-heavy",
            Family::ManySmall => "many-small",
        }
    }

    pub fn parse(s: &str) -> Option<Family> {
        Family::ALL.into_iter().find(|f| f.name() == s)
    }
}

/// Size ranges for [`generate`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenParams {
    pub family: Family,
    pub n_min: usize,
    pub n_max: usize,
    pub m_max: u64,
    pub resource_max: u64,
    /// Lengths are multiples of `1 / p_den`.
    pub p_den: i64,
    pub p_max: i64,
}

impl GenParams {
    pub fn new(family: Family, n_min: usize, n_max: usize) -> Self {
        GenParams { family, n_min, n_max, m_max: 4, resource_max: 10, p_den: 2, p_max: 10 }
    }
}

fn length(rng: &mut ChaCha8Rng, lo: i64, hi: i64, den: i64) -> Rational {
    rat(rng.gen_range(lo * den..=hi * den), den)
}

/// One instance drawn from `rng`. Huge-heavy draws are repeated until the longest job
/// exceeds half the lower bound.
pub fn generate_with(params: &GenParams, rng: &mut ChaCha8Rng) -> Instance {
    loop {
        let inst = draw(params, rng);
        if params.family != Family::HugeHeavy
            || inst.jobs.is_empty()
            || inst.p_max() * Rational::from_integer(2.into()) > lower_bound_t(&inst)
        {
            return inst;
        }
    }
}

fn draw(params: &GenParams, rng: &mut ChaCha8Rng) -> Instance {
    let n = rng.gen_range(params.n_min..=params.n_max.max(params.n_min));
    let m = rng.gen_range(1..=params.m_max.max(1));
    let resource = rng.gen_range(1..=params.resource_max.max(1));
    let den = params.p_den.max(1);
    let mut jobs = Vec::with_capacity(n);
    for id in 0..n as u64 {
        let (p, r) = match params.family {
            Family::Random => (length(rng, 1, params.p_max, den), rng.gen_range(1..=resource)),
            Family::WideHeavy => (length(rng, 1, params.p_max, den), rng.gen_range(resource.div_ceil(2)..=resource)),
            Family::HugeHeavy => {
                if id < m {
                    (length(rng, 4 * params.p_max, 5 * params.p_max, den), rng.gen_range(1..=resource.div_ceil(m)))
                } else {
                    (length(rng, 1, params.p_max, den), rng.gen_range(1..=resource))
                }
            }
            Family::ManySmall => {
                if id < 2 {
                    (length(rng, 20 * params.p_max, 40 * params.p_max, den), rng.gen_range(1..=resource))
                } else {
                    (rat(rng.gen_range(1..=den), den), rng.gen_range(1..=resource))
                }
            }
        };
        jobs.push(Job::new(id, p, r));
    }
    Instance::new(m, resource, jobs).expect("generated jobs respect the resource")
}

/// One instance from a fixed seed.
pub fn generate(params: &GenParams, seed: u64) -> Instance {
    generate_with(params, &mut ChaCha8Rng::seed_from_u64(seed))
}

/// `count` instances from one seeded stream.
pub fn corpus(params: &GenParams, count: usize, seed: u64) -> Vec<Instance> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| generate_with(params, &mut rng)).collect()
}
