//! Standard normal primitives used by every likelihood and simulation path.
//!
//! `erfc` follows W. J. Cody's rational Chebyshev approximations, which keep
//! full relative precision deep into the upper tail. The scaled variant
//! `exp(x²)·erfc(x)` is what makes the log-cdf tail branch possible without
//! ever forming a subnormal intermediate.

use crate::error::{Error, Result};

const FRAC_1_SQRT_2PI: f64 = 0.398_942_280_401_432_7;
const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;
const FRAC_1_SQRT_PI: f64 = 0.564_189_583_547_756_3;

/// Below this point `log_norm_cdf` switches to the scaled-tail branch.
pub const LOG_CDF_TAIL_SWITCH: f64 = -5.0;

const ERF_A: [f64; 5] = [
    3.161_123_743_870_565_6,
    1.138_641_541_510_501_6e2,
    3.774_852_376_853_020_2e2,
    3.209_377_589_138_469_5e3,
    1.857_777_061_846_031_5e-1,
];
const ERF_B: [f64; 4] = [
    2.360_129_095_234_412_1e1,
    2.440_246_379_344_441_7e2,
    1.282_616_526_077_372_3e3,
    2.844_236_833_439_170_6e3,
];
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
const ERF_P: [f64; 6] = [
    3.053_266_349_612_323_4e-1,
    3.603_448_999_498_044_4e-1,
    1.257_817_261_112_292_5e-1,
    1.608_378_514_874_227_7e-2,
    6.587_491_615_298_378e-4,
    1.631_538_713_730_209_8e-2,
];
const ERF_Q: [f64; 5] = [
    2.568_520_192_289_822,
    1.872_952_849_923_467_3,
    5.279_051_029_514_284e-1,
    6.051_834_131_244_132e-2,
    2.335_204_976_268_691_8e-3,
];

/// `erf(x)` for `|x| <= 0.46875`.
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

/// `exp(y²)·erfc(y)` for `y >= 0.46875`.
fn erfcx_large(y: f64) -> f64 {
    if y <= 4.0 {
        let mut num = ERF_C[8] * y;
        let mut den = y;
        for i in 0..7 {
            num = (num + ERF_C[i]) * y;
            den = (den + ERF_D[i]) * y;
        }
        (num + ERF_C[7]) / (den + ERF_D[7])
    } else {
        let ysq = 1.0 / (y * y);
        let mut num = ERF_P[5] * ysq;
        let mut den = ysq;
        for i in 0..4 {
            num = (num + ERF_P[i]) * ysq;
            den = (den + ERF_Q[i]) * ysq;
        }
        let r = ysq * (num + ERF_P[4]) / (den + ERF_Q[4]);
        (FRAC_1_SQRT_PI - r) / y
    }
}

/// Scaled complementary error function `exp(y²)·erfc(y)` for `y >= 0`.
fn erfcx_nonneg(y: f64) -> f64 {
    if y <= 0.468_75 {
        (y * y).exp() * (1.0 - erf_small(y))
    } else {
        erfcx_large(y)
    }
}

/// Complementary error function with full relative accuracy for large `x`.
pub fn erfc(x: f64) -> f64 {
    let y = x.abs();
    if y <= 0.468_75 {
        return 1.0 - erf_small(x);
    }
    let upper = if y >= 26.55 {
        0.0
    } else {
        // exp(-y²) split as exp(-ysq²)·exp(-del) to avoid cancellation.
        let ysq = (y * 16.0).trunc() / 16.0;
        let del = (y - ysq) * (y + ysq);
        (-ysq * ysq).exp() * (-del).exp() * erfcx_large(y)
    };
    if x < 0.0 {
        2.0 - upper
    } else {
        upper
    }
}

/// Standard normal cumulative distribution function.
///
/// Saturates to exactly 0 or 1 in the extreme tails; use [`log_norm_cdf`]
/// when the tail value itself matters.
pub fn norm_cdf(z: f64) -> f64 {
    let t = z * std::f64::consts::FRAC_1_SQRT_2;
    if z < 0.0 {
        0.5 * erfc(-t)
    } else {
        1.0 - 0.5 * erfc(t)
    }
}

/// Standard normal density.
pub fn norm_pdf(z: f64) -> f64 {
    FRAC_1_SQRT_2PI * (-0.5 * z * z).exp()
}

/// `ln φ(z)`.
pub fn log_norm_pdf(z: f64) -> f64 {
    -0.5 * z * z - LN_SQRT_2PI
}

/// `ln Φ(z)`, finite for every finite `z`.
///
/// Above zero the value is `ln(1 - Φ(-z))` through `ln_1p`; between the tail
/// switch and zero it is the direct log; below the switch it is assembled as
/// `ln(erfcx(-z/√2)/2) - z²/2`, so nothing underflows.
pub fn log_norm_cdf(z: f64) -> f64 {
    if z > 0.0 {
        (-norm_cdf(-z)).ln_1p()
    } else if z >= LOG_CDF_TAIL_SWITCH {
        norm_cdf(z).ln()
    } else {
        let y = -z * std::f64::consts::FRAC_1_SQRT_2;
        (0.5 * erfcx_nonneg(y)).ln() - 0.5 * z * z
    }
}

/// Inverse Mills ratio `φ(z)/Φ(z)`, stable for large negative `z`.
pub fn inv_mills(z: f64) -> f64 {
    if z >= LOG_CDF_TAIL_SWITCH {
        norm_pdf(z) / norm_cdf(z)
    } else {
        // φ(z)/Φ(z) = √(2/π) / erfcx(-z/√2)
        let y = -z * std::f64::consts::FRAC_1_SQRT_2;
        2.0 * FRAC_1_SQRT_2PI / erfcx_nonneg(y)
    }
}

fn poly(coef: &[f64; 8], r: f64) -> f64 {
    coef.iter().rev().fold(0.0, |acc, c| acc * r + c)
}

const PPND_A: [f64; 8] = [
    3.387_132_872_796_366_5,
    1.331_416_678_917_843_8e2,
    1.971_590_950_306_551_3e3,
    1.373_169_376_550_946e4,
    4.592_195_393_154_987e4,
    6.726_577_092_700_87e4,
    3.343_057_558_358_813e4,
    2.509_080_928_730_122_7e3,
];
const PPND_B: [f64; 8] = [
    1.0,
    4.231_333_070_160_091e1,
    6.871_870_074_920_579e2,
    5.394_196_021_424_751e3,
    2.121_379_430_158_659_7e4,
    3.930_789_580_009_271e4,
    2.872_908_573_572_194_3e4,
    5.226_495_278_852_854_5e3,
];
const PPND_C: [f64; 8] = [
    1.423_437_110_749_683_5,
    4.630_337_846_156_546,
    5.769_497_221_460_691,
    3.647_848_324_763_204_5,
    1.270_458_252_452_368_4,
    2.417_807_251_774_506e-1,
    2.272_384_498_926_918_4e-2,
    7.745_450_142_783_414e-4,
];
const PPND_D: [f64; 8] = [
    1.0,
    2.053_191_626_637_759,
    1.676_384_830_183_803_8,
    6.897_673_349_851e-1,
    1.481_039_764_274_800_8e-1,
    1.519_866_656_361_645_7e-2,
    5.475_938_084_995_345e-4,
    1.050_750_071_644_416_8e-9,
];
const PPND_E: [f64; 8] = [
    6.657_904_643_501_103,
    5.463_784_911_164_114,
    1.784_826_539_917_291_3,
    2.965_605_718_285_048_7e-1,
    2.653_218_952_657_612_4e-2,
    1.242_660_947_388_078_4e-3,
    2.711_555_568_743_487_6e-5,
    2.010_334_399_292_288_1e-7,
];
const PPND_F: [f64; 8] = [
    1.0,
    5.998_322_065_558_879e-1,
    1.369_298_809_227_358e-1,
    1.487_536_129_085_061_5e-2,
    7.868_691_311_456_133e-4,
    1.846_318_317_510_054_8e-5,
    1.421_511_758_316_446e-7,
    2.044_263_103_389_939_7e-15,
];

/// Standard normal quantile (Wichura's AS 241).
pub fn norm_quantile(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::Domain(format!(
            "normal quantile requires 0 < p < 1, got {p}"
        )));
    }
    let q = p - 0.5;
    if q.abs() <= 0.425 {
        let r = 0.180_625 - q * q;
        return Ok(q * poly(&PPND_A, r) / poly(&PPND_B, r));
    }
    let tail = if q < 0.0 { p } else { 1.0 - p };
    let mut r = (-tail.ln()).sqrt();
    let x = if r <= 5.0 {
        r -= 1.6;
        poly(&PPND_C, r) / poly(&PPND_D, r)
    } else {
        r -= 5.0;
        poly(&PPND_E, r) / poly(&PPND_F, r)
    };
    Ok(if q < 0.0 { -x } else { x })
}

#[cfg(test)]
mod tests {
    use super::*;

    // ln Φ(z) at 50 significant digits (mpmath `log(ncdf(z))`).
    const LOG_CDF_REFERENCE: [(f64, f64); 18] = [
        (-37.0, -689.030_585_576_890_593_6),
        (-30.0, -454.321_243_956_343_197_11),
        (-20.0, -203.917_155_371_097_263_94),
        (-10.0, -53.231_285_150_512_470_578),
        (-7.0, -27.384_307_498_811_075_243),
        (-5.5, -17.779_376_352_625_260_511),
        (-5.0, -15.064_998_393_988_725_736),
        (-4.999, -15.059_812_373_671_576_348),
        (-3.0, -6.607_726_221_510_349_543_3),
        (-1.0, -1.841_021_645_009_263_505_8),
        (-0.5, -1.175_911_761_593_618_608_9),
        (0.0, -0.693_147_180_559_945_309_42),
        (0.5, -0.368_946_415_288_656_393_07),
        (1.0, -0.172_753_779_023_449_889_53),
        (3.0, -0.001_350_809_964_748_193_798_8),
        (5.0, -2.866_516_129_637_635_933_8e-7),
        (6.0, -9.865_876_455_243_757_316_9e-10),
        (8.0, -6.220_960_574_271_786_058_5e-16),
    ];

    /// Mills ratio `Q(x)/φ(x)` from Laplace's continued fraction (modified
    /// Lentz), an evaluation route independent of the Cody rationals.
    fn mills_continued_fraction(x: f64) -> f64 {
        let tiny = 1e-300;
        let mut f = x;
        let mut c = x;
        let mut d = 0.0;
        for k in 1..500 {
            let a = k as f64;
            d = x + a * d;
            if d.abs() < tiny {
                d = tiny;
            }
            c = x + a / c;
            if c.abs() < tiny {
                c = tiny;
            }
            d = 1.0 / d;
            let delta = c * d;
            f *= delta;
            if (delta - 1.0).abs() < 1e-17 {
                break;
            }
        }
        1.0 / f
    }

    #[test]
    fn cdf_reference_points() {
        assert_eq!(norm_cdf(0.0), 0.5);
        assert!((norm_cdf(1.959_964) - 0.975).abs() < 1e-8);
        assert!((norm_cdf(1.959_964) - 0.975_000_000_903_557_6).abs() < 1e-15);
        let far = norm_cdf(-40.0);
        assert!(far >= 0.0);
        assert!(log_norm_cdf(-40.0).is_finite());
        assert!((log_norm_cdf(-40.0) - (-804.608_442_013_753_788)).abs() < 1e-10 * 804.6);
    }

    #[test]
    fn cdf_symmetry() {
        let mut z = -40.0;
        while z <= 40.0 {
            let s = norm_cdf(z) + norm_cdf(-z);
            assert!((s - 1.0).abs() < 1e-15, "z={z}: {s}");
            z += 0.013;
        }
    }

    #[test]
    fn log_cdf_matches_high_precision_reference() {
        for &(z, want) in LOG_CDF_REFERENCE.iter() {
            let got = log_norm_cdf(z);
            let rel = ((got - want) / want).abs();
            assert!(rel < 1e-12, "z={z}: got {got}, want {want}, rel {rel:e}");
        }
        assert_eq!(log_norm_cdf(0.0), 0.5f64.ln());
    }

    #[test]
    fn log_cdf_tail_matches_continued_fraction() {
        let mut z = -38.0;
        while z < -2.0 {
            let x = -z;
            let oracle = log_norm_pdf(x) + mills_continued_fraction(x).ln();
            let got = log_norm_cdf(z);
            assert!(((got - oracle) / oracle).abs() < 1e-12, "z={z}");
            z += 0.0731;
        }
    }

    #[test]
    fn log_cdf_minus_ten_matches_asymptotic_series() {
        let z: f64 = -10.0;
        let z2 = z * z;
        // φ(z)/|z| · (1 - 1/z² + 3/z⁴ - 15/z⁶ + 105/z⁸ - 945/z¹⁰ + 10395/z¹²)
        let mut term = 1.0;
        let mut series = 1.0;
        for k in 1..=7 {
            term *= -((2 * k - 1) as f64) / z2;
            series += term;
        }
        let oracle = log_norm_pdf(z) - z.abs().ln() + series.ln();
        assert!(((log_norm_cdf(z) - oracle) / oracle).abs() < 1e-10);
    }

    #[test]
    fn log_cdf_upper_branch() {
        let want = -norm_cdf(-5.0);
        let got = log_norm_cdf(5.0);
        assert!(((got - want) / want).abs() < 1e-6);
        assert!(((got - (-2.866_516_129_637_636e-7)) / got).abs() < 1e-12);
    }

    #[test]
    fn tail_switch_is_continuous() {
        let below = log_norm_cdf(LOG_CDF_TAIL_SWITCH - 1e-12);
        let at = log_norm_cdf(LOG_CDF_TAIL_SWITCH);
        assert!((below - at).abs() < 1e-9);
    }

    #[test]
    fn pdf_values() {
        assert!((norm_pdf(0.0) - 0.398_942_280_401_432_7).abs() < 1e-16);
        assert_eq!(norm_pdf(1.7), norm_pdf(-1.7));
        assert!((norm_pdf(3.0) - 0.004_431_848_411_938_007).abs() < 1e-17);
    }

    #[test]
    fn pdf_is_cdf_derivative() {
        let h = 1e-5;
        // Upper-tail cdf values lose absolute precision, so round trips run
        // through the lower half.
        let mut z = -8.0;
        while z <= 0.0 {
            let fd = (norm_cdf(z + h) - norm_cdf(z - h)) / (2.0 * h);
            assert!((fd - norm_pdf(z)).abs() < 1e-8, "z={z}");
            z += 0.01;
        }
    }

    #[test]
    fn quantile_reference_points() {
        assert_eq!(norm_quantile(0.5).unwrap(), 0.0);
        assert!((norm_quantile(0.975).unwrap() - 1.959_963_984_540_054).abs() < 1e-12);
        assert!(norm_quantile(0.0).is_err());
        assert!(norm_quantile(1.0).is_err());
        assert!(norm_quantile(f64::NAN).is_err());
    }

    #[test]
    fn quantile_round_trip() {
        let mut grid = vec![1e-8, 1e-6, 1e-4, 1e-2, 0.1, 0.3, 0.5];
        let upper: Vec<f64> = grid.iter().map(|p| 1.0 - p).collect();
        grid.extend(upper);
        for k in 1..1000 {
            grid.push(k as f64 / 1000.0);
        }
        for p in grid {
            let z = norm_quantile(p).unwrap();
            assert!((norm_cdf(z) - p).abs() < 1e-12, "p={p}");
        }
        // Upper-tail cdf values lose absolute precision, so round trips run
        // through the lower half.
        let mut z = -8.0;
        while z <= 0.0 {
            let back = norm_quantile(norm_cdf(z)).unwrap();
            assert!((back - z).abs() < 1e-9, "z={z}");
            z += 0.05;
        }
    }

    #[test]
    fn inverse_mills_branches_agree() {
        for &z in &[-4.9, -5.0, -5.1, -10.0, -30.0, 0.0, 2.0] {
            let direct = (log_norm_pdf(z) - log_norm_cdf(z)).exp();
            assert!(((inv_mills(z) - direct) / direct).abs() < 1e-12, "z={z}");
        }
    }
}
