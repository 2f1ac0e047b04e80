//! Counter-based normal increments.
//!
//! Every draw is a pure function of `(seed, path_index, draw_index)`: the
//! ChaCha8 key comes from the seed, the stream id is the path index and each
//! draw occupies a fixed block of two 32-bit words (one `u64`). Paths can
//! therefore be generated on any number of workers, in any order, with
//! identical results.
//!
//! Normals are produced by inverting the CDF with Wichura's AS241
//! (`PPND16`), accurate to about 1e-16 relative, so a draw never needs more
//! than one uniform.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

const WORDS_PER_DRAW: u128 = 2;
const TWO_POW_NEG_53: f64 = 1.0 / (1u64 << 53) as f64;

#[derive(Debug, Clone)]
pub struct PathRng {
    inner: ChaCha8Rng,
}

impl PathRng {
    pub fn new(seed: u64, path_index: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(path_index);
        PathRng { inner }
    }

    /// Positions the generator so that the next draw is draw `index`.
    pub fn seek(&mut self, index: u64) {
        self.inner.set_word_pos(index as u128 * WORDS_PER_DRAW);
    }

    #[inline]
    pub fn normal(&mut self) -> f64 {
        inverse_norm_cdf(self.open_uniform())
    }

    /// Uniform on `(0, 1]`.
    #[inline]
    pub fn uniform(&mut self) -> f64 {
        ((self.inner.next_u64() >> 11) + 1) as f64 * TWO_POW_NEG_53
    }

    /// Uniform on the open interval `(0, 1)`, centred on the 2^-53 lattice.
    #[inline]
    fn open_uniform(&mut self) -> f64 {
        ((self.inner.next_u64() >> 11) as f64 + 0.5) * TWO_POW_NEG_53
    }
}

/// Standard normal quantile for `p` in `(0, 1)`, Wichura's AS241.
pub fn inverse_norm_cdf(p: f64) -> f64 {
    let q = p - 0.5;
    if q.abs() <= 0.425 {
        let r = 0.180625 - q * q;
        return q
            * (((((((2509.080_928_730_122_7 * r + 33430.575_583_588_128) * r
                + 67265.770_927_008_700)
                * r
                + 45921.953_931_549_871)
                * r
                + 13731.693_765_509_461)
                * r
                + 1971.590_950_306_551_3)
                * r
                + 133.141_667_891_784_38)
                * r
                + 3.387_132_872_796_366_5)
            / (((((((5226.495_278_852_545_4 * r + 28729.085_735_721_942) * r
                + 39307.895_800_092_710)
                * r
                + 21213.794_301_586_595)
                * r
                + 5394.196_021_424_751_1)
                * r
                + 687.187_007_492_057_91)
                * r
                + 42.313_330_701_600_911)
                * r
                + 1.0);
    }
    let tail = if q < 0.0 { p } else { 1.0 - p };
    let mut r = (-tail.ln()).sqrt();
    let x = if r <= 5.0 {
        r -= 1.6;
        (((((((7.745_450_142_783_414_1e-4 * r + 0.022_723_844_989_269_184) * r
            + 0.241_780_725_177_450_61)
            * r
            + 1.270_458_252_452_368_4)
            * r
            + 3.647_848_324_763_204_5)
            * r
            + 5.769_497_221_460_691_4)
            * r
            + 4.630_337_846_156_545_3)
            * r
            + 1.423_437_110_749_683_5)
            / (((((((1.050_750_071_644_416_9e-9 * r + 5.475_938_084_995_344_9e-4) * r
                + 0.015_198_666_563_616_457)
                * r
                + 0.148_103_976_427_480_07)
                * r
                + 0.689_767_334_985_100_05)
                * r
                + 1.676_384_830_183_803_8)
                * r
                + 2.053_191_626_637_758_8)
                * r
                + 1.0)
    } else {
        r -= 5.0;
        (((((((2.010_334_399_292_288_1e-7 * r + 2.711_555_568_743_487_6e-5) * r
            + 0.001_242_660_947_388_078_4)
            * r
            + 0.026_532_189_526_576_123)
            * r
            + 0.296_560_571_828_504_89)
            * r
            + 1.784_826_539_917_291_3)
            * r
            + 5.463_784_911_164_114_4)
            * r
            + 6.657_904_643_501_103_8)
            / (((((((2.044_263_103_389_939_7e-15 * r + 1.421_511_758_316_445_9e-7) * r
                + 1.846_318_317_510_054_8e-5)
                * r
                + 7.868_691_311_456_132_6e-4)
                * r
                + 0.014_875_361_290_850_615)
                * r
                + 0.136_929_880_922_735_81)
                * r
                + 0.599_832_206_555_887_94)
                * r
                + 1.0)
    };
    if q < 0.0 {
        -x
    } else {
        x
    }
}

/// The `index`-th normal draw of path `path_index` under `seed`.
pub fn normal_at(seed: u64, path_index: u64, index: u64) -> f64 {
    let mut rng = PathRng::new(seed, path_index);
    rng.seek(index);
    rng.normal()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn draws_are_keyed_by_counter() {
        let mut rng = PathRng::new(11, 3);
        let seq: Vec<f64> = (0..50).map(|_| rng.normal()).collect();
        for (i, z) in seq.iter().enumerate() {
            assert_eq!(*z, normal_at(11, 3, i as u64));
        }
    }

    #[test]
    fn streams_differ() {
        assert_ne!(normal_at(1, 0, 0), normal_at(2, 0, 0));
        assert_ne!(normal_at(1, 0, 0), normal_at(1, 1, 0));
    }

    #[test]
    fn moments_look_standard() {
        let mut rng = PathRng::new(2024, 0);
        let n = 200_000;
        let (mut s1, mut s2) = (0.0, 0.0);
        for _ in 0..n {
            let z = rng.normal();
            s1 += z;
            s2 += z * z;
        }
        let mean = s1 / n as f64;
        let var = s2 / n as f64 - mean * mean;
        assert!(mean.abs() < 4.0 / (n as f64).sqrt());
        assert!((var - 1.0).abs() < 0.02);
    }

    #[test]
    fn quantile_inverts_cdf() {
        use crate::model::norm_cdf;
        for &p in &[1e-300, 1e-20, 1e-8, 0.001, 0.02425, 0.1, 0.3, 0.5, 0.7, 0.975, 0.999, 1.0 - 1e-12] {
            let x = inverse_norm_cdf(p);
            let back = norm_cdf(x);
            assert!(((back - p) / p).abs() < 1e-12, "p = {p}, x = {x}, back = {back}");
        }
        assert_eq!(inverse_norm_cdf(0.5), 0.0);
        assert!((inverse_norm_cdf(0.975) - 1.959_963_984_540_054).abs() < 1e-14);
    }

    #[test]
    fn uniform_is_in_unit_interval() {
        let mut rng = PathRng::new(5, 0);
        for _ in 0..10_000 {
            let u = rng.uniform();
            assert!(u > 0.0 && u <= 1.0);
        }
    }
}
