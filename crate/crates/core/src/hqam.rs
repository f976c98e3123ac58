//! Hierarchical PAM/QAM constellations with Gray labels, the joint
//! shared/private symbol mapping, and composite constellation formation.
//!
//! Bit index 1 is always the highest layer (largest distance) of a branch.
//! Labels are stored as integers with bit 1 in the most significant position,
//! so the label of the point with left-to-right index `i` is `i ^ (i >> 1)`.

use num_complex::Complex;

use crate::error::{Branch, Error, Result};
use crate::scalar::Real;

/// Relative slack accepted when checking `d_k >= 2 d_{k+1}`.
fn ordering_slack<T: Real>() -> T {
    T::epsilon() * T::lit(16.0)
}

fn check_branch<T: Real>(d: &[T], branch: Branch) -> Result<()> {
    for (index, &v) in d.iter().enumerate() {
        if !(v > T::zero()) || !v.is_finite() {
            return Err(Error::NonPositiveDistance { branch, index: index + 1, value: v.as_f64() });
        }
    }
    for k in 0..d.len().saturating_sub(1) {
        let need = T::lit(2.0) * d[k + 1];
        if d[k] < need * (T::one() - ordering_slack::<T>()) {
            return Err(Error::Ordering { branch, index: k + 1 });
        }
    }
    Ok(())
}

/// Per-branch layer distances of one H-QAM symbol, normalized to unit energy.
///
/// The only profile allowed to have zero energy is the empty one (a symbol
/// carrying no bits), which maps every word to the origin.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceProfile<T> {
    i: Vec<T>,
    q: Vec<T>,
}

impl<T: Real> DistanceProfile<T> {
    /// Profile for a symbol carrying no bits.
    pub fn empty() -> Self {
        Self { i: Vec::new(), q: Vec::new() }
    }

    /// Builds a profile from already-normalized distances.
    pub fn new(i: Vec<T>, q: Vec<T>) -> Result<Self> {
        check_branch(&i, Branch::I)?;
        check_branch(&q, Branch::Q)?;
        let p = Self { i, q };
        if !p.is_empty() {
            let e = p.energy();
            if (e - T::one()).abs() > T::lit(1e-12).max(T::epsilon() * T::lit(64.0)) {
                return Err(Error::Energy { energy: e.as_f64() });
            }
        }
        Ok(p)
    }

    /// Builds a profile from unnormalized distance ratios and scales it to
    /// unit energy.
    pub fn from_ratios(i: &[T], q: &[T]) -> Result<Self> {
        check_branch(i, Branch::I)?;
        check_branch(q, Branch::Q)?;
        if i.is_empty() && q.is_empty() {
            return Ok(Self::empty());
        }
        let e: T = i.iter().chain(q).fold(T::zero(), |acc, &d| acc + d * d);
        let s = e.sqrt().recip();
        Ok(Self {
            i: i.iter().map(|&d| d * s).collect(),
            q: q.iter().map(|&d| d * s).collect(),
        })
    }

    /// Geometric layering `d_k = ratio * d_{k+1}` on both branches, with the
    /// innermost distance equal on I and Q. `ratio = 2` gives uniform
    /// rectangular QAM.
    pub fn geometric(m: usize, n: usize, ratio: T) -> Result<Self> {
        if !(ratio >= T::lit(2.0)) {
            return Err(Error::Mode(format!("layer ratio {} is below 2", ratio)));
        }
        let layer = |bits: usize| -> Vec<T> {
            (0..bits).map(|k| ratio.powi((bits - 1 - k) as i32)).collect()
        };
        Self::from_ratios(&layer(m), &layer(n))
    }

    pub fn uniform(m: usize, n: usize) -> Result<Self> {
        Self::geometric(m, n, T::lit(2.0))
    }

    pub fn i(&self) -> &[T] {
        &self.i
    }

    pub fn q(&self) -> &[T] {
        &self.q
    }

    pub fn branch(&self, b: Branch) -> &[T] {
        match b {
            Branch::I => &self.i,
            Branch::Q => &self.q,
        }
    }

    pub fn bits_i(&self) -> usize {
        self.i.len()
    }

    pub fn bits_q(&self) -> usize {
        self.q.len()
    }

    pub fn is_empty(&self) -> bool {
        self.i.is_empty() && self.q.is_empty()
    }

    pub fn energy(&self) -> T {
        self.i.iter().chain(&self.q).fold(T::zero(), |acc, &d| acc + d * d)
    }
}

/// Natural binary labels from Gray labels: `a_k = b_1 ^ ... ^ b_k`.
pub fn gray_to_natural(bits: &[bool]) -> Vec<bool> {
    bits.iter()
        .scan(false, |acc, &b| {
            *acc ^= b;
            Some(*acc)
        })
        .collect()
}

/// Gray labels from natural binary labels: `b_1 = a_1`, `b_k = a_k ^ a_{k-1}`.
pub fn natural_to_gray(bits: &[bool]) -> Vec<bool> {
    let mut prev = false;
    bits.iter()
        .map(|&a| {
            let b = a ^ prev;
            prev = a;
            b
        })
        .collect()
}

/// PAM point of a Gray word: `sum_k (-1)^(1 + b_1 + ... + b_k) d_k`.
pub fn gray_point<T: Real>(bits: &[bool], d: &[T]) -> T {
    debug_assert_eq!(bits.len(), d.len());
    let mut parity = false;
    bits.iter().zip(d).fold(T::zero(), |acc, (&b, &dk)| {
        parity ^= b;
        if parity {
            acc + dk
        } else {
            acc - dk
        }
    })
}

/// Splits an integer label into `m` bits, bit 1 first.
pub fn label_bits(label: u32, m: usize) -> Vec<bool> {
    (0..m).map(|k| (label >> (m - 1 - k)) & 1 == 1).collect()
}

/// Packs bits (bit 1 first) into an integer label.
pub fn bits_label(bits: &[bool]) -> u32 {
    bits.iter().fold(0u32, |acc, &b| (acc << 1) | b as u32)
}

/// Real hierarchical 2^m-PAM with Gray labels, points sorted ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct HierPam<T> {
    distances: Vec<T>,
    points: Vec<T>,
    labels: Vec<u32>,
}

impl<T: Real> HierPam<T> {
    /// Builds the constellation for the given layer distances. An empty
    /// distance list yields the single point `{0}` with an empty label.
    pub fn build(distances: &[T]) -> Result<Self> {
        Self::build_on(distances, Branch::I)
    }

    pub(crate) fn build_on(distances: &[T], branch: Branch) -> Result<Self> {
        check_branch(distances, branch)?;
        let m = distances.len();
        if m > 16 {
            return Err(Error::UnsupportedBranch { bits: m });
        }
        let size = 1usize << m;
        let mut points = Vec::with_capacity(size);
        let mut labels = Vec::with_capacity(size);
        for idx in 0..size as u32 {
            let label = idx ^ (idx >> 1);
            points.push(gray_point(&label_bits(label, m), distances));
            labels.push(label);
        }
        Ok(Self { distances: distances.to_vec(), points, labels })
    }

    pub fn bits(&self) -> usize {
        self.distances.len()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn distances(&self) -> &[T] {
        &self.distances
    }

    pub fn points(&self) -> &[T] {
        &self.points
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    /// Value of bit `k` (1-based) in the label of point `idx`.
    #[inline]
    pub fn bit(&self, idx: usize, k: usize) -> bool {
        (self.labels[idx] >> (self.bits() - k)) & 1 == 1
    }

    /// Point carrying the given Gray label.
    pub fn point_for_label(&self, label: u32) -> T {
        gray_point(&label_bits(label, self.bits()), &self.distances)
    }

    /// Index of the point nearest to `y`.
    pub fn nearest(&self, y: T) -> usize {
        // points are sorted, so the nearest one borders the insertion position
        let pos = self.points.partition_point(|&p| p < y);
        match pos {
            0 => 0,
            p if p == self.points.len() => p - 1,
            p => {
                if (y - self.points[p - 1]) <= (self.points[p] - y) {
                    p - 1
                } else {
                    p
                }
            }
        }
    }

    pub fn mean_energy(&self) -> T {
        let s = self.points.iter().fold(T::zero(), |acc, &p| acc + p * p);
        s / T::count(self.points.len())
    }
}

/// All bits of one channel use as seen by one user: the shared symbol's bits
/// and that user's private symbol bits.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct BitWord {
    pub shared_i: Vec<bool>,
    pub shared_q: Vec<bool>,
    pub private_i: Vec<bool>,
    pub private_q: Vec<bool>,
}

impl BitWord {
    /// Composite I and Q labels: shared bits followed by private bits.
    pub fn composite_bits(&self) -> (Vec<bool>, Vec<bool>) {
        let i = self.shared_i.iter().chain(&self.private_i).copied().collect();
        let q = self.shared_q.iter().chain(&self.private_q).copied().collect();
        (i, q)
    }

    /// Every word with the given lengths, enumerated in label order.
    pub fn all(m0: usize, n0: usize, mu: usize, nu: usize) -> impl Iterator<Item = BitWord> {
        let total = m0 + n0 + mu + nu;
        (0u32..(1u32 << total)).map(move |w| {
            let bits = label_bits(w, total);
            let (si, rest) = bits.split_at(m0);
            let (sq, rest) = rest.split_at(n0);
            let (pi, pq) = rest.split_at(mu);
            BitWord {
                shared_i: si.to_vec(),
                shared_q: sq.to_vec(),
                private_i: pi.to_vec(),
                private_q: pq.to_vec(),
            }
        })
    }
}

fn check_len(what: &'static str, expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::LengthMismatch { what, expected, got });
    }
    Ok(())
}

/// Conventional Gray mapping of the shared symbol.
pub fn map_shared<T: Real>(word: &BitWord, profile: &DistanceProfile<T>) -> Result<Complex<T>> {
    check_len("shared I bits", profile.bits_i(), word.shared_i.len())?;
    check_len("shared Q bits", profile.bits_q(), word.shared_q.len())?;
    Ok(Complex::new(
        gray_point(&word.shared_i, profile.i()),
        gray_point(&word.shared_q, profile.q()),
    ))
}

/// `(-1)^(1 + sum b0) * sum_k (-1)^(b_1 + ... + b_k) d_k`
fn private_component<T: Real>(shared: &[bool], private: &[bool], d: &[T]) -> T {
    let shared_odd = shared.iter().fold(false, |acc, &b| acc ^ b);
    // the inner sum is the negated standard Gray point
    let inner = -gray_point(private, d);
    if shared_odd {
        inner
    } else {
        -inner
    }
}

/// Private symbol mapping whose Gray rule depends on the shared bits, so that
/// the over-the-air sum with the shared symbol stays Gray coded.
pub fn map_private<T: Real>(word: &BitWord, profile: &DistanceProfile<T>) -> Result<Complex<T>> {
    check_len("private I bits", profile.bits_i(), word.private_i.len())?;
    check_len("private Q bits", profile.bits_q(), word.private_q.len())?;
    Ok(Complex::new(
        private_component(&word.shared_i, &word.private_i, profile.i()),
        private_component(&word.shared_q, &word.private_q, profile.q()),
    ))
}

/// Composite distances seen by `user`: shared layers scaled by `beta_shared`
/// followed by private layers scaled by `beta_private`.
pub fn compose_profiles<T: Real>(
    shared: &DistanceProfile<T>,
    private: &DistanceProfile<T>,
    beta_shared: T,
    beta_private: T,
    user: u8,
) -> Result<DistanceProfile<T>> {
    let in_unit = |b: T| b >= T::zero() && b <= T::one() + T::lit(1e-12);
    let norm = beta_shared * beta_shared + beta_private * beta_private;
    if !in_unit(beta_shared)
        || !in_unit(beta_private)
        || (norm - T::one()).abs() > T::lit(1e-9).max(T::epsilon() * T::lit(64.0))
    {
        return Err(Error::MixingWeights { user });
    }
    let mut out = DistanceProfile::empty();
    for branch in [Branch::I, Branch::Q] {
        let sd = shared.branch(branch);
        let pd = private.branch(branch);
        let d: Vec<T> = sd
            .iter()
            .map(|&d| beta_shared * d)
            .chain(pd.iter().map(|&d| beta_private * d))
            .collect();
        match check_branch(&d, branch) {
            Ok(()) => {}
            Err(Error::Ordering { index, .. }) if index == sd.len() => {
                return Err(Error::CompositeOrdering { user, branch });
            }
            Err(e) => return Err(e),
        }
        match branch {
            Branch::I => out.i = d,
            Branch::Q => out.q = d,
        }
    }
    Ok(out)
}

/// I and Q constellations of a profile.
pub fn branch_pams<T: Real>(profile: &DistanceProfile<T>) -> Result<(HierPam<T>, HierPam<T>)> {
    Ok((
        HierPam::build_on(profile.i(), Branch::I)?,
        HierPam::build_on(profile.q(), Branch::Q)?,
    ))
}

/// Composite constellation received by `user` for the given mixing weights.
pub fn compose_received_constellation<T: Real>(
    shared: &DistanceProfile<T>,
    private: &DistanceProfile<T>,
    beta_shared: T,
    beta_private: T,
    user: u8,
) -> Result<(HierPam<T>, HierPam<T>)> {
    branch_pams(&compose_profiles(shared, private, beta_shared, beta_private, user)?)
}
