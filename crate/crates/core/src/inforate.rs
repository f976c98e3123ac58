//! Bit-channel mutual information under the equalized scalar AWGN model and
//! per-user rate aggregation.
//!
//! Each bit `b_k` of a branch sees the parallel BICM channel
//! `I(b_k; y) = 1/2 sum_b E[log2(2 f(y|b) / (f(y|0) + f(y|1))) | b]`, with
//! `f(y|b)` the uniform Gaussian mixture over the points whose label carries
//! `b_k = b`. [`branch_bit_mis`] evaluates it by 64-node Gauss-Hermite
//! quadrature per mixture component; [`bit_mi_montecarlo`] samples the same
//! integrand.

use std::sync::OnceLock;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Branch, Error, Result};
use crate::geometry::EquivalentChannel;
use crate::hqam::HierPam;
use crate::scalar::Real;

/// Number of Gauss-Hermite nodes.
pub const GH_NODES: usize = 64;

/// Samples per Monte Carlo chunk; chunk `c` draws from ChaCha8 stream `c`.
const MC_CHUNK: usize = 1 << 14;

/// Gauss-Hermite nodes and weights for the weight function `exp(-x^2)`.
pub fn gauss_hermite() -> &'static ([f64; GH_NODES], [f64; GH_NODES]) {
    static RULE: OnceLock<([f64; GH_NODES], [f64; GH_NODES])> = OnceLock::new();
    RULE.get_or_init(|| {
        let n = GH_NODES;
        let nf = n as f64;
        let mut x = [0.0; GH_NODES];
        let mut w = [0.0; GH_NODES];
        let pim4 = std::f64::consts::PI.powf(-0.25);
        let mut z = 0.0f64;
        for i in 0..n.div_ceil(2) {
            z = match i {
                0 => (2.0 * nf + 1.0).sqrt() - 1.85575 * (2.0 * nf + 1.0).powf(-1.0 / 6.0),
                1 => z - 1.14 * nf.powf(0.426) / z,
                2 => 1.86 * z - 0.86 * x[0],
                3 => 1.91 * z - 0.91 * x[1],
                _ => 2.0 * z - x[i - 2],
            };
            let mut pp = 0.0;
            for _ in 0..100 {
                // orthonormal Hermite recurrence
                let (mut p1, mut p2) = (pim4, 0.0);
                for j in 1..=n {
                    let p3 = p2;
                    p2 = p1;
                    let jf = j as f64;
                    p1 = z * (2.0 / jf).sqrt() * p2 - ((jf - 1.0) / jf).sqrt() * p3;
                }
                pp = (2.0 * nf).sqrt() * p2;
                let step = p1 / pp;
                z -= step;
                if step.abs() <= 1e-15 * z.abs().max(1.0) {
                    break;
                }
            }
            x[i] = z;
            x[n - 1 - i] = -z;
            w[i] = 2.0 / (pp * pp);
            w[n - 1 - i] = w[i];
        }
        (x, w)
    })
}

fn check_noise<T: Real>(noise_var: T) -> Result<()> {
    if !(noise_var > T::zero()) || !noise_var.is_finite() {
        return Err(Error::NoiseVariance);
    }
    Ok(())
}

/// `log2(S_b / S_all)` for every bit at observation `y`, where `S_b` sums the
/// component likelihoods of the points sharing bit `k` with point `own`.
fn log_ratios<T: Real>(pam: &HierPam<T>, own: usize, y: T, inv2v: T, expo: &mut [T], out: &mut [T]) {
    let pts = pam.points();
    let mut top = T::neg_infinity();
    for (e, &s) in expo.iter_mut().zip(pts) {
        let d = y - s;
        *e = -(d * d) * inv2v;
        if *e > top {
            top = *e;
        }
    }
    let mut all = T::zero();
    for e in expo.iter_mut() {
        let v = (*e - top).exp();
        all += v;
        *e = v;
    }
    for (k, o) in out.iter_mut().enumerate() {
        let want = pam.bit(own, k + 1);
        let mut sb = T::zero();
        for (l, &v) in expo.iter().enumerate() {
            if pam.bit(l, k + 1) == want {
                sb += v;
            }
        }
        *o = if sb > T::min_positive_value() {
            (sb / all).log2()
        } else {
            // subset likelihood underflowed relative to the global max
            let mut sub_top = T::neg_infinity();
            for (l, &s) in pts.iter().enumerate() {
                if pam.bit(l, k + 1) == want {
                    let d = y - s;
                    sub_top = sub_top.max(-(d * d) * inv2v);
                }
            }
            let mut sub = T::zero();
            for (l, &s) in pts.iter().enumerate() {
                if pam.bit(l, k + 1) == want {
                    let d = y - s;
                    sub += (-(d * d) * inv2v - sub_top).exp();
                }
            }
            (sub_top - top) * T::LOG2_E() + (sub / all).log2()
        };
    }
}

/// Mutual information of every bit of a branch, by quadrature.
pub fn branch_bit_mis<T: Real>(pam: &HierPam<T>, noise_var: T) -> Result<Vec<T>> {
    check_noise(noise_var)?;
    let bits = pam.bits();
    if bits == 0 {
        return Ok(Vec::new());
    }
    let (nodes, weights) = gauss_hermite();
    let scale = (T::lit(2.0) * noise_var).sqrt();
    let inv2v = (T::lit(2.0) * noise_var).recip();
    let mut expo = vec![T::zero(); pam.len()];
    let mut lr = vec![T::zero(); bits];
    let mut acc = vec![T::zero(); bits];
    // mirror points carry labels differing only in the first bit, so their
    // contributions coincide
    let half = pam.len() / 2;
    for (own, &s) in pam.points().iter().enumerate().take(half) {
        for (&x, &w) in nodes.iter().zip(weights.iter()) {
            let w = T::lit(w);
            if w == T::zero() {
                continue;
            }
            log_ratios(pam, own, s + scale * T::lit(x), inv2v, &mut expo, &mut lr);
            for (a, &l) in acc.iter_mut().zip(&lr) {
                *a += w * l;
            }
        }
    }
    let norm = (T::PI().sqrt() * T::count(half)).recip();
    Ok(acc.into_iter().map(|a| (T::one() + a * norm).max(T::zero()).min(T::one())).collect())
}

/// Mutual information of bit `k` (1-based), by quadrature.
pub fn bit_mi_quadrature<T: Real>(pam: &HierPam<T>, k: usize, noise_var: T) -> Result<T> {
    if k == 0 || k > pam.bits() {
        return Err(Error::BitIndex { k, bits: pam.bits() });
    }
    Ok(branch_bit_mis(pam, noise_var)?[k - 1])
}

/// Sample mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub mean: f64,
    pub std_err: f64,
}

/// Monte Carlo estimate of the bit-`k` mutual information. Deterministic in
/// `seed` and independent of the thread count.
pub fn bit_mi_montecarlo<T: Real>(
    pam: &HierPam<T>,
    k: usize,
    noise_var: T,
    n_samples: usize,
    seed: u64,
) -> Result<McEstimate> {
    check_noise(noise_var)?;
    if k == 0 || k > pam.bits() {
        return Err(Error::BitIndex { k, bits: pam.bits() });
    }
    if n_samples < 2 {
        return Err(Error::EmptyGrid("monte carlo samples"));
    }
    let sd = noise_var.sqrt();
    let inv2v = (T::lit(2.0) * noise_var).recip();
    let chunks = n_samples.div_ceil(MC_CHUNK);
    let sums: Vec<(f64, f64)> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c as u64);
            let len = MC_CHUNK.min(n_samples - c * MC_CHUNK);
            let mut expo = vec![T::zero(); pam.len()];
            let mut lr = vec![T::zero(); pam.bits()];
            let (mut s1, mut s2) = (0.0, 0.0);
            for _ in 0..len {
                let own = rng.random_range(0..pam.len());
                let n: f64 = rng.sample(StandardNormal);
                let y = pam.points()[own] + sd * T::lit(n);
                log_ratios(pam, own, y, inv2v, &mut expo, &mut lr);
                let v = 1.0 + lr[k - 1].as_f64();
                s1 += v;
                s2 += v * v;
            }
            (s1, s2)
        })
        .collect();
    let (s1, s2) = sums.iter().fold((0.0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1));
    let n = n_samples as f64;
    let mean = s1 / n;
    let var = ((s2 - n * mean * mean) / (n - 1.0)).max(0.0);
    Ok(McEstimate { mean, std_err: (var / n).sqrt() })
}

/// Per-bit mutual information of one user's composite I and Q branches.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserBitMis<T> {
    pub i: Vec<T>,
    pub q: Vec<T>,
}

impl<T: Real> UserBitMis<T> {
    /// Evaluates both branches of a user's equivalent channel.
    pub fn evaluate(eq: &EquivalentChannel<T>, sigma2: T) -> Result<Self> {
        check_noise(sigma2)?;
        let (pi, pq) = eq.constellations()?;
        let v = eq.branch_noise_var(sigma2);
        Ok(Self { i: branch_bit_mis(&pi, v)?, q: branch_bit_mis(&pq, v)? })
    }

    pub fn branch(&self, b: Branch) -> &[T] {
        match b {
            Branch::I => &self.i,
            Branch::Q => &self.q,
        }
    }

    /// Rate of `user` when the first `m0`/`n0` composite bits are shared and
    /// only those assigned to `user` count.
    pub fn rate(&self, user: u8, assignment: &BitAssignment) -> Result<T> {
        let (m0, n0) = (assignment.m0(), assignment.n0());
        if self.i.len() < m0 || self.q.len() < n0 {
            return Err(Error::LengthMismatch {
                what: "shared bits",
                expected: m0 + n0,
                got: self.i.len().min(m0) + self.q.len().min(n0),
            });
        }
        let mut r = T::zero();
        for (k, &v) in self.i.iter().enumerate() {
            if k >= m0 || assignment.owner(Branch::I, k + 1) == user {
                r += v;
            }
        }
        for (k, &v) in self.q.iter().enumerate() {
            if k >= n0 || assignment.owner(Branch::Q, k + 1) == user {
                r += v;
            }
        }
        Ok(r)
    }
}

/// Per-bit mutual information of both users.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BitChannelRates<T> {
    pub users: [UserBitMis<T>; 2],
}

impl<T: Real> BitChannelRates<T> {
    pub fn evaluate(eqs: &[EquivalentChannel<T>; 2], sigma2: T) -> Result<Self> {
        Ok(Self { users: [UserBitMis::evaluate(&eqs[0], sigma2)?, UserBitMis::evaluate(&eqs[1], sigma2)?] })
    }

    pub fn rates(&self, assignment: &BitAssignment) -> Result<RatePoint<T>> {
        Ok(RatePoint { r1: self.users[0].rate(1, assignment)?, r2: self.users[1].rate(2, assignment)? })
    }
}

/// Partition of the shared symbol's bits between the users. Bit `k - 1` of a
/// mask is set when shared bit `k` of that branch goes to user 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BitAssignment {
    m0: u8,
    n0: u8,
    mask_i: u8,
    mask_q: u8,
}

impl BitAssignment {
    pub fn new(m0: usize, n0: usize, mask_i: u32, mask_q: u32) -> Result<Self> {
        if m0 > 3 || n0 > 3 {
            return Err(Error::Assignment(format!("shared symbol too large ({m0}, {n0})")));
        }
        if mask_i >> m0 != 0 || mask_q >> n0 != 0 {
            return Err(Error::Assignment(format!(
                "mask ({mask_i:#b}, {mask_q:#b}) names bits beyond ({m0}, {n0})"
            )));
        }
        Ok(Self { m0: m0 as u8, n0: n0 as u8, mask_i: mask_i as u8, mask_q: mask_q as u8 })
    }

    /// Builds the assignment from the bit sets `S_{0,1}` and `S_{0,2}`, given
    /// as `(branch, k)` pairs. They must partition the shared bits.
    pub fn from_sets(m0: usize, n0: usize, user1: &[(Branch, usize)], user2: &[(Branch, usize)]) -> Result<Self> {
        let mut owner_i = vec![0u8; m0];
        let mut owner_q = vec![0u8; n0];
        for (u, set) in [(1u8, user1), (2u8, user2)] {
            for &(b, k) in set {
                let slot = match b {
                    Branch::I => owner_i.get_mut(k.wrapping_sub(1)),
                    Branch::Q => owner_q.get_mut(k.wrapping_sub(1)),
                }
                .ok_or_else(|| Error::Assignment(format!("no shared bit {b}{k}")))?;
                if *slot != 0 {
                    return Err(Error::Assignment(format!("shared bit {b}{k} assigned twice")));
                }
                *slot = u;
            }
        }
        let mask = |owners: &[u8], b: Branch| -> Result<u32> {
            owners.iter().enumerate().try_fold(0u32, |m, (k, &o)| match o {
                0 => Err(Error::Assignment(format!("shared bit {b}{} unassigned", k + 1))),
                1 => Ok(m | 1 << k),
                _ => Ok(m),
            })
        };
        Self::new(m0, n0, mask(&owner_i, Branch::I)?, mask(&owner_q, Branch::Q)?)
    }

    /// Every shared bit to one user.
    pub fn all_to(user: u8, m0: usize, n0: usize) -> Result<Self> {
        let full = |m: usize| if user == 1 { (1u32 << m) - 1 } else { 0 };
        Self::new(m0, n0, full(m0), full(n0))
    }

    /// All `2^(m0 + n0)` assignments.
    pub fn enumerate(m0: usize, n0: usize) -> impl Iterator<Item = BitAssignment> {
        (0u32..1 << m0).flat_map(move |i| (0u32..1 << n0).map(move |q| BitAssignment::new(m0, n0, i, q)))
            .filter_map(Result::ok)
    }

    pub fn m0(&self) -> usize {
        self.m0 as usize
    }

    pub fn n0(&self) -> usize {
        self.n0 as usize
    }

    pub fn mask_i(&self) -> u32 {
        self.mask_i as u32
    }

    pub fn mask_q(&self) -> u32 {
        self.mask_q as u32
    }

    /// User (1 or 2) receiving shared bit `k` of the branch.
    pub fn owner(&self, b: Branch, k: usize) -> u8 {
        let mask = match b {
            Branch::I => self.mask_i,
            Branch::Q => self.mask_q,
        };
        if (mask >> (k - 1)) & 1 == 1 {
            1
        } else {
            2
        }
    }

    /// Number of shared bits owned by `user`.
    pub fn count(&self, user: u8) -> usize {
        let ones = (self.mask_i.count_ones() + self.mask_q.count_ones()) as usize;
        if user == 1 {
            ones
        } else {
            self.m0() + self.n0() - ones
        }
    }
}

/// Achievable rate pair in bits per channel use.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RatePoint<T> {
    pub r1: T,
    pub r2: T,
}

/// Rates of both users for the given equivalent channels and assignment.
pub fn user_rates<T: Real>(
    eqs: &[EquivalentChannel<T>; 2],
    assignment: &BitAssignment,
    sigma2: T,
) -> Result<RatePoint<T>> {
    BitChannelRates::evaluate(eqs, sigma2)?.rates(assignment)
}
