//! Normal special functions and seeded sampling primitives.
//!
//! `std_normal_cdf` is built on W. J. Cody's rational Chebyshev
//! approximations to erf/erfc, which are accurate to near machine precision
//! over the whole real line, including the far tails. The quantile starts
//! from Acklam's rational approximation and is polished with one Halley step
//! against the CDF.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const SQRT_2: f64 = std::f64::consts::SQRT_2;
const SQRT_2PI: f64 = 2.506_628_274_631_000_5;
const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;
const INV_SQRT_PI: f64 = 0.564_189_583_547_756_3;

/// A probability in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Probability(f64);

impl Probability {
    pub fn new(value: f64) -> Result<Self> {
        if (0.0..=1.0).contains(&value) {
            Ok(Probability(value))
        } else {
            Err(Error::domain(format!(
                "probability must lie in [0, 1], got {value}"
            )))
        }
    }

    /// Clamps into `[0, 1]`; NaN maps to 0.
    pub fn saturating(value: f64) -> Self {
        if value.is_nan() {
            Probability(0.0)
        } else {
            Probability(value.clamp(0.0, 1.0))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn complement(self) -> Self {
        Probability(1.0 - self.0)
    }
}

impl TryFrom<f64> for Probability {
    type Error = Error;
    fn try_from(v: f64) -> Result<Self> {
        Probability::new(v)
    }
}

impl From<Probability> for f64 {
    fn from(p: Probability) -> f64 {
        p.0
    }
}

fn require_finite(z: f64, what: &str) -> Result<()> {
    if z.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(format!(
            "{what} requires a finite argument, got {z}"
        )))
    }
}

// Cody (1969), "Rational Chebyshev approximations for the error function".
// Coefficients are kept as published.
#[allow(clippy::excessive_precision)]
const ERF_A: [f64; 5] = [
    3.161_123_743_870_565_6,
    1.138_641_541_510_501_6e2,
    3.774_852_376_853_020_2e2,
    3.209_377_589_138_469_5e3,
    1.857_777_061_846_031_5e-1,
];
#[allow(clippy::excessive_precision)]
const ERF_B: [f64; 4] = [
    2.360_129_095_234_412_1e1,
    2.440_246_379_344_441_7e2,
    1.282_616_526_077_372_3e3,
    2.844_236_833_439_170_6e3,
];
#[allow(clippy::excessive_precision)]
const ERF_C: [f64; 9] = [
    5.641_884_969_886_701e-1,
    8.883_149_794_388_376,
    6.611_919_063_714_163e1,
    2.986_351_381_974_001_3e2,
    8.819_522_212_417_691e2,
    1.712_047_612_634_070_6e3,
    2.051_078_377_826_071_5e3,
    1.230_339_354_797_997_2e3,
    2.153_115_354_744_038_5e-8,
];
#[allow(clippy::excessive_precision)]
const ERF_D: [f64; 8] = [
    1.574_492_611_070_983_5e1,
    1.176_939_508_913_125e2,
    5.371_811_018_620_099e2,
    1.621_389_574_566_690_2e3,
    3.290_799_235_733_459_6e3,
    4.362_619_090_143_247e3,
    3.439_367_674_143_721_6e3,
    1.230_339_354_803_749_4e3,
];
#[allow(clippy::excessive_precision)]
const ERF_P: [f64; 6] = [
    3.053_266_349_612_323_4e-1,
    3.603_448_999_498_044_4e-1,
    1.257_817_261_112_292_5e-1,
    1.608_378_514_874_227_7e-2,
    6.587_491_615_298_378e-4,
    1.631_538_713_730_209_8e-2,
];
#[allow(clippy::excessive_precision)]
const ERF_Q: [f64; 5] = [
    2.568_520_192_289_822,
    1.872_952_849_923_467_3,
    5.279_051_029_514_284e-1,
    6.051_834_131_244_132e-2,
    2.335_204_976_268_691_8e-3,
];

/// erf(x) for |x| <= 0.46875.
fn erf_small(x: f64) -> f64 {
    let ysq = x * x;
    let mut num = ERF_A[4] * ysq;
    let mut den = ysq;
    for i in 0..3 {
        num = (num + ERF_A[i]) * ysq;
        den = (den + ERF_B[i]) * ysq;
    }
    x * (num + ERF_A[3]) / (den + ERF_B[3])
}

/// exp(-x^2) evaluated in two pieces to avoid cancellation for large x.
fn exp_neg_sq(x: f64) -> f64 {
    let head = (x * 16.0).trunc() / 16.0;
    let del = (x - head) * (x + head);
    (-head * head).exp() * (-del).exp()
}

/// erfc(x) for x > 0.46875.
fn erfc_pos(x: f64) -> f64 {
    if x <= 4.0 {
        let mut num = ERF_C[8] * x;
        let mut den = x;
        for i in 0..7 {
            num = (num + ERF_C[i]) * x;
            den = (den + ERF_D[i]) * x;
        }
        exp_neg_sq(x) * (num + ERF_C[7]) / (den + ERF_D[7])
    } else if x >= 27.3 {
        0.0
    } else {
        let ysq = 1.0 / (x * x);
        let mut num = ERF_P[5] * ysq;
        let mut den = ysq;
        for i in 0..4 {
            num = (num + ERF_P[i]) * ysq;
            den = (den + ERF_Q[i]) * ysq;
        }
        let r = ysq * (num + ERF_P[4]) / (den + ERF_Q[4]);
        exp_neg_sq(x) * (INV_SQRT_PI - r) / x
    }
}

/// Complementary error function.
pub fn erfc(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    let ax = x.abs();
    if ax <= 0.46875 {
        return 1.0 - erf_small(x);
    }
    let tail = erfc_pos(ax);
    if x < 0.0 {
        2.0 - tail
    } else {
        tail
    }
}

/// Standard normal CDF, valid for every finite `z`.
pub fn std_normal_cdf(z: f64) -> Result<Probability> {
    require_finite(z, "std_normal_cdf")?;
    Ok(Probability(phi_cdf(z)))
}

/// Unchecked Φ; callers guarantee a finite argument (infinities saturate).
pub(crate) fn phi_cdf(z: f64) -> f64 {
    let x = -z / SQRT_2;
    if x.abs() <= 0.46875 {
        0.5 * (1.0 - erf_small(x))
    } else if x > 0.0 {
        0.5 * erfc_pos(x)
    } else {
        1.0 - 0.5 * erfc_pos(-x)
    }
}

pub fn std_normal_pdf(z: f64) -> Result<f64> {
    require_finite(z, "std_normal_pdf")?;
    Ok(phi_pdf(z))
}

pub(crate) fn phi_pdf(z: f64) -> f64 {
    INV_SQRT_2PI * (-0.5 * z * z).exp()
}

/// Inverse of the standard normal CDF for `p` strictly inside (0, 1).
pub fn std_normal_quantile(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::domain(format!(
            "std_normal_quantile requires 0 < p < 1, got {p}"
        )));
    }
    Ok(phi_quantile(p))
}

pub(crate) fn phi_quantile(p: f64) -> f64 {
    // Acklam's coefficients.
    const A: [f64; 6] = [
        -3.969_683_028_665_376e1,
        2.209_460_984_245_205e2,
        -2.759_285_104_469_687e2,
        1.383_577_518_672_69e2,
        -3.066_479_806_614_716e1,
        2.506_628_277_459_239,
    ];
    const B: [f64; 5] = [
        -5.447_609_879_822_406e1,
        1.615_858_368_580_409e2,
        -1.556_989_798_598_866e2,
        6.680_131_188_771_972e1,
        -1.328_068_155_288_572e1,
    ];
    const C: [f64; 6] = [
        -7.784_894_002_430_293e-3,
        -3.223_964_580_411_365e-1,
        -2.400_758_277_161_838,
        -2.549_732_539_343_734,
        4.374_664_141_464_968,
        2.938_163_982_698_783,
    ];
    const D: [f64; 4] = [
        7.784_695_709_041_462e-3,
        3.224_671_290_700_398e-1,
        2.445_134_137_142_996,
        3.754_408_661_907_416,
    ];
    const P_LOW: f64 = 0.02425;

    let tail = |q: f64| {
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    };
    let x = if p < P_LOW {
        tail((-2.0 * p.ln()).sqrt())
    } else if p <= 1.0 - P_LOW {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        -tail((-2.0 * (1.0 - p).ln()).sqrt())
    };

    // Halley refinement. Work in the tail nearer to p so the residual keeps
    // its relative precision.
    let e = if p < 0.5 {
        phi_cdf(x) - p
    } else {
        (1.0 - p) - phi_cdf(-x)
    };
    let u = e * SQRT_2PI * (0.5 * x * x).exp();
    x - u / (1.0 + 0.5 * x * u)
}

/// Seed for a reproducible sample stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RngSeed(pub u64);

/// A single-consumer stream of random variates.
///
/// Streams are ChaCha12 keyed by the seed; sub-streams for parallel work use
/// the generator's 64-bit stream id, so `(seed, cell, replicate)` fixes every
/// draw regardless of scheduling.
#[derive(Debug, Clone)]
pub struct SampleStream {
    rng: ChaCha12Rng,
}

impl SampleStream {
    pub fn new(seed: RngSeed) -> Self {
        SampleStream {
            rng: ChaCha12Rng::seed_from_u64(seed.0),
        }
    }

    /// Independent sub-stream for `(cell, replicate)`.
    pub fn substream(seed: RngSeed, cell: u32, replicate: u32) -> Self {
        let mut rng = ChaCha12Rng::seed_from_u64(seed.0);
        rng.set_stream(((cell as u64) << 32) | replicate as u64);
        SampleStream { rng }
    }

    pub fn sample_normal(&mut self, mean: f64, sd: f64) -> Result<f64> {
        if !(sd >= 0.0) || !mean.is_finite() || !sd.is_finite() {
            return Err(Error::domain(format!(
                "normal sampling requires finite mean and sd >= 0, got mean {mean}, sd {sd}"
            )));
        }
        if sd == 0.0 {
            return Ok(mean);
        }
        let z: f64 = StandardNormal.sample(&mut self.rng);
        Ok(mean + sd * z)
    }

    pub fn sample_bernoulli(&mut self, p: f64) -> Result<bool> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::domain(format!(
                "bernoulli probability must lie in [0, 1], got {p}"
            )));
        }
        Ok(self.bernoulli_unchecked(p))
    }

    #[inline]
    pub(crate) fn bernoulli_unchecked(&mut self, p: f64) -> bool {
        // gen::<f64>() is uniform on [0, 1), so p = 0 never fires and p = 1 always does.
        self.rng.gen::<f64>() < p
    }

    pub fn sample_uniform(&mut self, lo: f64, hi: f64) -> Result<f64> {
        if !(lo <= hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::domain(format!(
                "uniform sampling requires finite lo <= hi, got [{lo}, {hi}]"
            )));
        }
        if lo == hi {
            return Ok(lo);
        }
        Ok(lo + (hi - lo) * self.rng.gen::<f64>())
    }

    /// Uniform index in `0..n`.
    pub fn sample_index(&mut self, n: usize) -> usize {
        self.rng.gen_range(0..n)
    }
}
