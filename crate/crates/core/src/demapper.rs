//! Receiver processing: one-tap equalization, I/Q decoupling and per-bit
//! soft metrics.
//!
//! Metrics follow the max-log form
//! `z_k = min_{b_k=0} (y - s)^2 / 4 - min_{b_k=1} (y - s)^2 / 4`, and the LLR is
//! `(4 G^2 / sigma^2) z_k`, positive when bit 1 is more likely.

use num_complex::Complex;

use crate::error::{Branch, Error, Result};
use crate::geometry::EquivalentChannel;
use crate::hqam::HierPam;
use crate::scalar::Real;

/// Which metric implementation the receiver pipeline uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MetricPath {
    /// Closed-form piecewise-linear metric (up to 3 bits per branch).
    Piecewise,
    /// Exhaustive dual-min search (any branch size).
    DualMin,
}

impl Default for MetricPath {
    fn default() -> Self {
        if cfg!(feature = "dual-min") {
            MetricPath::DualMin
        } else {
            MetricPath::Piecewise
        }
    }
}

/// Equalized sample of one branch together with the constellation it is
/// demapped against.
#[derive(Debug, Clone, Copy)]
pub struct BranchObservation<'a, T> {
    pub y: T,
    pub branch: Branch,
    pub pam: &'a HierPam<T>,
    /// Variance of the equalized noise on this branch, `sigma^2 / (2 G^2)`.
    pub noise_var: T,
}

/// `(Re, Im)` of `e^{-j phase} y / gain`.
pub fn equalize<T: Real>(y: Complex<T>, gain: T, phase: T) -> Result<(T, T)> {
    if !(gain > T::zero()) {
        return Err(Error::ZeroGain { user: 0 });
    }
    let z = y * Complex::from_polar(gain.recip(), -phase);
    Ok((z.re, z.im))
}

fn check_k(bits: usize, k: usize) -> Result<()> {
    if k == 0 || k > bits {
        return Err(Error::BitIndex { k, bits });
    }
    Ok(())
}

/// Max-log metric by exhaustive search over both bit-conditioned subsets.
pub fn dual_min_metric<T: Real>(obs: &BranchObservation<'_, T>, k: usize) -> Result<T> {
    let pam = obs.pam;
    check_k(pam.bits(), k)?;
    let mut best = [T::infinity(); 2];
    for (idx, &s) in pam.points().iter().enumerate() {
        let e = obs.y - s;
        let d = e * e;
        let b = usize::from(pam.bit(idx, k));
        if d < best[b] {
            best[b] = d;
        }
    }
    Ok((best[0] - best[1]) * T::lit(0.25))
}

/// Closed-form metric for branches carrying 1, 2 or 3 bits. Smaller branches
/// use the 3-bit expressions with the missing distances set to zero.
pub fn piecewise_metric<T: Real>(obs: &BranchObservation<'_, T>, k: usize) -> Result<T> {
    let pam = obs.pam;
    let bits = pam.bits();
    if bits > 3 {
        return Err(Error::UnsupportedBranch { bits });
    }
    check_k(bits, k)?;
    let d = pam.distances();
    let d1 = d[0];
    let d2 = d.get(1).copied().unwrap_or_else(T::zero);
    let d3 = d.get(2).copied().unwrap_or_else(T::zero);
    let y = obs.y;
    let a = y.abs();
    let sg = if y < T::zero() { -T::one() } else { T::one() };
    let z = match k {
        1 => {
            if a < d1 - d2 {
                y * (d1 - d2 - d3)
            } else if a < d1 {
                (d1 - d2) * (y - sg * d3)
            } else if a < d1 + d2 {
                (d1 - d3) * (y - sg * d2)
            } else {
                d1 * (y - sg * (d2 + d3))
            }
        }
        2 => {
            if a < d1 - d2 {
                d2 * (d1 - d3 - a)
            } else if a < d1 + d2 {
                (d2 - d3) * (d1 - a)
            } else {
                d2 * (d1 + d3 - a)
            }
        }
        _ => d3 * (d2 - (d1 - a).abs()),
    };
    Ok(z)
}

/// Metric for bit `k` via the chosen implementation.
pub fn metric<T: Real>(obs: &BranchObservation<'_, T>, k: usize, path: MetricPath) -> Result<T> {
    match path {
        MetricPath::Piecewise => piecewise_metric(obs, k),
        MetricPath::DualMin => dual_min_metric(obs, k),
    }
}

/// Metrics and LLRs of every bit on one branch.
#[derive(Debug, Clone, PartialEq)]
pub struct LlrVector<T> {
    pub branch: Branch,
    pub metrics: Vec<T>,
    pub llrs: Vec<T>,
}

impl<T: Real> LlrVector<T> {
    /// Hard decisions: bit 1 where the LLR is positive.
    pub fn hard_bits(&self) -> Vec<bool> {
        self.llrs.iter().map(|&l| l > T::zero()).collect()
    }
}

/// Demaps every bit of a branch observation.
pub fn branch_llrs<T: Real>(obs: &BranchObservation<'_, T>, path: MetricPath) -> Result<LlrVector<T>> {
    let scale = T::lit(2.0) / obs.noise_var;
    let metrics = (1..=obs.pam.bits())
        .map(|k| metric(obs, k, path))
        .collect::<Result<Vec<_>>>()?;
    let llrs = metrics.iter().map(|&z| z * scale).collect();
    Ok(LlrVector { branch: obs.branch, metrics, llrs })
}

/// LLRs of all composite bits of one user from its received sample. Only the
/// user's own gain, phase and composite constellation are used.
pub fn bit_llrs<T: Real>(
    y: Complex<T>,
    eq: &EquivalentChannel<T>,
    pams: (&HierPam<T>, &HierPam<T>),
    sigma2: T,
    path: MetricPath,
) -> Result<[LlrVector<T>; 2]> {
    if !(sigma2 > T::zero()) {
        return Err(Error::NoiseVariance);
    }
    let (yi, yq) = equalize(y, eq.gain, eq.phase).map_err(|_| Error::ZeroGain { user: eq.user })?;
    let noise_var = eq.branch_noise_var(sigma2);
    let i = BranchObservation { y: yi, branch: Branch::I, pam: pams.0, noise_var };
    let q = BranchObservation { y: yq, branch: Branch::Q, pam: pams.1, noise_var };
    Ok([branch_llrs(&i, path)?, branch_llrs(&q, path)?])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hqam::label_bits;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn obs(y: f64, pam: &HierPam<f64>) -> BranchObservation<'_, f64> {
        BranchObservation { y, branch: Branch::I, pam, noise_var: 0.1 }
    }

    fn random_distances(rng: &mut ChaCha8Rng, bits: usize) -> Vec<f64> {
        let mut d = vec![rng.random_range(0.05..1.0)];
        for _ in 1..bits {
            let last = *d.last().unwrap();
            d.push(last / rng.random_range(2.0..6.0));
        }
        d
    }

    #[test]
    fn equalize_examples() {
        let s = Complex::new(0.3f64, -0.4f64);
        for (g, ph) in [(0.5f64, 1.0f64), (3.0, -2.5), (1.0, 0.0)] {
            let y = Complex::from_polar(g, ph) * s;
            let (i, q) = equalize(y, g, ph).unwrap();
            assert!((i - 0.3).abs() < 1e-15 && (q + 0.4).abs() < 1e-15);
        }
        assert_eq!(equalize(Complex::new(2.0, 2.0), 2.0, 0.0).unwrap(), (1.0, 1.0));
        assert!(equalize(Complex::new(1.0, 0.0), 0.0, 0.0).is_err());
    }

    #[test]
    fn equalized_noise_variance() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let (g, ph, sigma2) = (1.7f64, 0.4f64, 0.3f64);
        let n = 1_000_000;
        let (mut si, mut sq) = (0.0, 0.0);
        let normal = rand_distr::Normal::new(0.0, (sigma2 / 2.0).sqrt()).unwrap();
        for _ in 0..n {
            let s = Complex::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            let w = Complex::new(rng.sample(normal), rng.sample(normal));
            let (i, q) = equalize(Complex::from_polar(g, ph) * s + w, g, ph).unwrap();
            si += (i - s.re).powi(2);
            sq += (q - s.im).powi(2);
        }
        let want = sigma2 / (2.0 * g * g);
        // the variance estimator of a Gaussian has relative std sqrt(2/n)
        let se = want * (2.0 / n as f64).sqrt();
        assert!((si / n as f64 - want).abs() < 3.0 * se);
        assert!((sq / n as f64 - want).abs() < 3.0 * se);
    }

    #[test]
    fn two_pam_metrics() {
        let p = HierPam::build(&[1.0]).unwrap();
        assert_eq!(dual_min_metric(&obs(0.0, &p), 1).unwrap(), 0.0);
        assert_eq!(dual_min_metric(&obs(1.0, &p), 1).unwrap(), 1.0);
        assert_eq!(piecewise_metric(&obs(1.0, &p), 1).unwrap(), 1.0);
        assert!(dual_min_metric(&obs(1.0, &p), 2).is_err());
    }

    #[test]
    fn eight_pam_at_origin() {
        let s = 21f64.sqrt();
        let p = HierPam::build(&[4.0 / s, 2.0 / s, 1.0 / s]).unwrap();
        let o = obs(0.0, &p);
        let want = [0.0, 6.0 / 21.0, -2.0 / 21.0];
        for k in 1..=3 {
            let z = piecewise_metric(&o, k).unwrap();
            let oracle = dual_min_metric(&o, k).unwrap();
            assert!((z - want[k - 1]).abs() < 1e-15, "k={k} {z}");
            assert!((oracle - want[k - 1]).abs() < 1e-15);
        }
    }

    #[test]
    fn outer_slope_and_symmetry() {
        let p = HierPam::build(&[0.8, 0.3, 0.1]).unwrap();
        let z = |y: f64, k| piecewise_metric(&obs(y, &p), k).unwrap();
        let slope = (z(10.0, 1) - z(9.0, 1)) / 1.0;
        assert!((slope - 0.8).abs() < 1e-12);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..1000 {
            let y = rng.random_range(-2.0..2.0);
            assert!((z(-y, 1) + z(y, 1)).abs() < 1e-15);
            assert!((z(-y, 2) - z(y, 2)).abs() < 1e-15);
            assert!((z(-y, 3) - z(y, 3)).abs() < 1e-15);
        }
    }

    #[test]
    fn piecewise_matches_dual_min() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for bits in 1..=3 {
            for _ in 0..20_000 {
                let d = random_distances(&mut rng, bits);
                let p = HierPam::build(&d).unwrap();
                let span: f64 = d.iter().sum::<f64>() * 1.5;
                let o = obs(rng.random_range(-span..span), &p);
                for k in 1..=bits {
                    let a = piecewise_metric(&o, k).unwrap();
                    let b = dual_min_metric(&o, k).unwrap();
                    assert!((a - b).abs() < 1e-12, "bits={bits} k={k} y={} d={d:?}", o.y);
                }
            }
        }
    }

    #[test]
    fn first_metric_is_monotone() {
        let p = HierPam::build(&[0.7, 0.3, 0.12]).unwrap();
        let mut prev = f64::NEG_INFINITY;
        for i in 0..4000 {
            let y = -2.0 + i as f64 * 1e-3;
            let z = piecewise_metric(&obs(y, &p), 1).unwrap();
            assert!(z >= prev - 1e-15);
            prev = z;
        }
    }

    #[test]
    fn unsupported_branch() {
        let p = HierPam::build(&[8.0, 4.0, 2.0, 1.0]).unwrap();
        assert!(matches!(piecewise_metric(&obs(0.0, &p), 1), Err(Error::UnsupportedBranch { bits: 4 })));
        assert!(dual_min_metric(&obs(0.0, &p), 4).is_ok());
    }

    #[test]
    fn hard_decisions_match_nearest_point() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for bits in 1..=3 {
            let d = random_distances(&mut rng, bits);
            let p = HierPam::build(&d).unwrap();
            for _ in 0..2000 {
                let o = obs(rng.random_range(-2.0..2.0), &p);
                let l = branch_llrs(&o, MetricPath::Piecewise).unwrap();
                let nearest = p.nearest(o.y);
                assert_eq!(l.hard_bits(), label_bits(p.labels()[nearest], bits));
            }
            // noiseless points decode to their own labels
            for (idx, &s) in p.points().iter().enumerate() {
                let l = branch_llrs(&obs(s, &p), MetricPath::default()).unwrap();
                assert!(l.llrs.iter().all(|&x| x != 0.0));
                assert_eq!(l.hard_bits(), label_bits(p.labels()[idx], bits));
            }
        }
    }

    #[test]
    fn llr_scale() {
        let p = HierPam::build(&[1.0]).unwrap();
        let o = BranchObservation { y: 0.5f64, branch: Branch::Q, pam: &p, noise_var: 0.25 };
        let l = branch_llrs(&o, MetricPath::DualMin).unwrap();
        // 4 G^2 / sigma^2 = 2 / noise_var
        assert!((l.llrs[0] - 0.5 * 8.0).abs() < 1e-15);
        let big = BranchObservation { noise_var: 1e12, ..o };
        assert!(branch_llrs(&big, MetricPath::Piecewise).unwrap().llrs[0].abs() < 1e-11);
    }

    #[test]
    fn f32_piecewise() {
        let p = HierPam::<f32>::build(&[0.6, 0.3, 0.1]).unwrap();
        let o = BranchObservation { y: 0.45f32, branch: Branch::I, pam: &p, noise_var: 0.1 };
        for k in 1..=3 {
            let a = piecewise_metric(&o, k).unwrap();
            let b = dual_min_metric(&o, k).unwrap();
            assert!((a - b).abs() < 1e-6);
        }
    }
}
