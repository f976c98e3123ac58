//! Two-user channel geometry and closed-form precoder synthesis.
//!
//! Private beams are zero-forced onto the other user and phase aligned with
//! the shared beam at their own user, so that each receiver observes
//! `y_u = e^{j phi_u} G_u (beta_{u,0} s_0 + beta_{u,u} s_u) + w_u`.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::hqam::{compose_profiles, DistanceProfile, HierPam};
use crate::scalar::Real;

/// Largest accepted `|rho|`; the private beams divide by `sqrt(1 - |rho|^2)`.
pub const MAX_RHO_ABS: f64 = 1.0 - 1e-9;

/// `a^H b`
pub fn inner<T: Real>(a: &[Complex<T>], b: &[Complex<T>]) -> Complex<T> {
    a.iter().zip(b).fold(Complex::new(T::zero(), T::zero()), |acc, (x, y)| acc + x.conj() * y)
}

pub fn norm<T: Real>(a: &[Complex<T>]) -> T {
    a.iter().fold(T::zero(), |acc, x| acc + x.norm_sqr()).sqrt()
}

fn scale<T: Real>(a: &[Complex<T>], s: Complex<T>) -> Vec<Complex<T>> {
    a.iter().map(|x| x * s).collect()
}

fn axpy<T: Real>(a: &[Complex<T>], sa: Complex<T>, b: &[Complex<T>], sb: Complex<T>) -> Vec<Complex<T>> {
    a.iter().zip(b).map(|(x, y)| x * sa + y * sb).collect()
}

fn real<T: Real>(x: T) -> Complex<T> {
    Complex::new(x, T::zero())
}

/// Channel vectors of both users plus the derived correlation quantities.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelPair<T> {
    h: [Vec<Complex<T>>; 2],
    lambda: [T; 2],
    rho: Complex<T>,
    theta: T,
    sigma2: T,
}

impl<T: Real> ChannelPair<T> {
    /// Canonical two-antenna scenario: `h1 = lambda1 [1, 0]`,
    /// `h2 = lambda2 [rho, sqrt(1 - |rho|^2)]`, so that `h1~^H h2~ = rho`.
    pub fn canonical(lambda1: T, lambda2: T, rho: Complex<T>, sigma2: T) -> Result<Self> {
        Self::canonical_nt(lambda1, lambda2, rho, sigma2, 2)
    }

    /// Same as [`ChannelPair::canonical`] embedded in `nt >= 2` antennas.
    pub fn canonical_nt(lambda1: T, lambda2: T, rho: Complex<T>, sigma2: T, nt: usize) -> Result<Self> {
        if nt < 2 {
            return Err(Error::Dimension);
        }
        let r = rho.norm();
        if !(r < T::lit(MAX_RHO_ABS)) {
            return Err(Error::DegenerateCorrelation { rho_abs: r.as_f64() });
        }
        if !(lambda1 > T::zero()) {
            return Err(Error::ChannelNorm { user: 1 });
        }
        if !(lambda2 > T::zero()) {
            return Err(Error::ChannelNorm { user: 2 });
        }
        let zero = Complex::new(T::zero(), T::zero());
        let mut h1 = vec![zero; nt];
        let mut h2 = vec![zero; nt];
        h1[0] = real(lambda1);
        h2[0] = rho * lambda2;
        h2[1] = real(lambda2 * (T::one() - r * r).sqrt());
        Self::from_vectors(h1, h2, sigma2)
    }

    /// Channel pair from arbitrary vectors of equal length.
    pub fn from_vectors(h1: Vec<Complex<T>>, h2: Vec<Complex<T>>, sigma2: T) -> Result<Self> {
        if h1.len() != h2.len() || h1.len() < 2 {
            return Err(Error::Dimension);
        }
        if !(sigma2 > T::zero()) {
            return Err(Error::NoiseVariance);
        }
        let l1 = norm(&h1);
        let l2 = norm(&h2);
        if !(l1 > T::zero()) {
            return Err(Error::ChannelNorm { user: 1 });
        }
        if !(l2 > T::zero()) {
            return Err(Error::ChannelNorm { user: 2 });
        }
        let rho = inner(&h1, &h2) / (l1 * l2);
        let r = rho.norm();
        if !(r < T::lit(MAX_RHO_ABS)) {
            return Err(Error::DegenerateCorrelation { rho_abs: r.as_f64() });
        }
        Ok(Self { h: [h1, h2], lambda: [l1, l2], rho, theta: r.min(T::one()).acos(), sigma2 })
    }

    /// Channel vector `h_u` for `user` in {1, 2}.
    pub fn h(&self, user: u8) -> &[Complex<T>] {
        &self.h[usize::from(user - 1)]
    }

    /// Unit-norm direction `h_u / lambda_u`.
    pub fn unit(&self, user: u8) -> Vec<Complex<T>> {
        let u = usize::from(user - 1);
        scale(&self.h[u], real(self.lambda[u].recip()))
    }

    pub fn lambda(&self, user: u8) -> T {
        self.lambda[usize::from(user - 1)]
    }

    pub fn rho(&self) -> Complex<T> {
        self.rho
    }

    /// Hermitian angle `arccos |rho|`.
    pub fn theta(&self) -> T {
        self.theta
    }

    pub fn sin_theta(&self) -> T {
        let r = self.rho.norm();
        (T::one() - r * r).sqrt()
    }

    pub fn sigma2(&self) -> T {
        self.sigma2
    }

    /// Reference SNR `lambda_u^2 / sigma^2` (linear).
    pub fn snr(&self, user: u8) -> T {
        let l = self.lambda(user);
        l * l / self.sigma2
    }

    pub fn antennas(&self) -> usize {
        self.h[0].len()
    }

    /// `e^{-j angle(rho)}`, taken as 1 when `rho = 0`.
    fn counter_phase(&self) -> Complex<T> {
        let r = self.rho.norm();
        if r > T::zero() {
            (self.rho / r).conj()
        } else {
            real(T::one())
        }
    }
}

/// Orthonormal basis of `span{h1, h2}` by Gram-Schmidt from `h1~`.
pub fn gram_schmidt_basis<T: Real>(ch: &ChannelPair<T>) -> (Vec<Complex<T>>, Vec<Complex<T>>) {
    let h1 = ch.unit(1);
    let h2 = ch.unit(2);
    let s = ch.sin_theta();
    let q2 = axpy(&h2, real(s.recip()), &h1, -ch.rho / s);
    (h1, q2)
}

/// Shared beam `cos(theta0) q1 + e^{-j angle(rho)} sin(theta0) q2`, giving
/// `h1~^H p0 = cos(theta0)` and `h2~^H p0 = cos(Theta - theta0) e^{-j angle(rho)}`.
pub fn shared_precoder_direction<T: Real>(ch: &ChannelPair<T>, theta0: T) -> Result<Vec<Complex<T>>> {
    let slack = T::epsilon() * T::lit(8.0);
    if !(theta0 >= -slack && theta0 <= ch.theta + slack) {
        return Err(Error::BeamAngle { theta0: theta0.as_f64(), max: ch.theta.as_f64() });
    }
    let theta0 = theta0.max(T::zero()).min(ch.theta);
    let (q1, q2) = gram_schmidt_basis(ch);
    Ok(axpy(&q1, real(theta0.cos()), &q2, ch.counter_phase() * theta0.sin()))
}

/// Zero-forcing private beams with the phase of each user's own gain aligned
/// to the shared beam.
pub fn private_precoder_directions<T: Real>(ch: &ChannelPair<T>) -> (Vec<Complex<T>>, Vec<Complex<T>>) {
    let h1 = ch.unit(1);
    let h2 = ch.unit(2);
    let inv = real(ch.sin_theta().recip());
    let p1 = axpy(&h1, inv, &h2, -ch.rho.conj() * inv);
    let rot = ch.counter_phase() * inv;
    let p2 = axpy(&h2, rot, &h1, -ch.rho * rot);
    (p1, p2)
}

/// Precoders `p_i = alpha_i p_i~` for the shared symbol and both private
/// symbols.
#[derive(Debug, Clone, PartialEq)]
pub struct PrecoderSet<T> {
    directions: [Vec<Complex<T>>; 3],
    alpha: [T; 3],
    theta0: T,
}

impl<T: Real> PrecoderSet<T> {
    pub fn synthesize(ch: &ChannelPair<T>, theta0: T, alpha: [T; 3]) -> Result<Self> {
        let sum = alpha.iter().fold(T::zero(), |acc, &a| acc + a * a);
        if alpha.iter().any(|&a| !(a >= T::zero())) || (sum - T::one()).abs() > T::lit(1e-12).max(T::epsilon() * T::lit(16.0)) {
            return Err(Error::Power { sum: sum.as_f64() });
        }
        let p0 = shared_precoder_direction(ch, theta0)?;
        let (p1, p2) = private_precoder_directions(ch);
        Ok(Self { directions: [p0, p1, p2], alpha, theta0 })
    }

    /// Unit direction of beam `i` (0 shared, 1 and 2 private).
    pub fn direction(&self, i: usize) -> &[Complex<T>] {
        &self.directions[i]
    }

    /// Full precoding vector `alpha_i p_i~`.
    pub fn vector(&self, i: usize) -> Vec<Complex<T>> {
        scale(&self.directions[i], real(self.alpha[i]))
    }

    pub fn alpha(&self) -> [T; 3] {
        self.alpha
    }

    pub fn theta0(&self) -> T {
        self.theta0
    }

    /// Transmit vector `x = p0 s0 + p1 s1 + p2 s2`.
    pub fn transmit(&self, s: [Complex<T>; 3]) -> Vec<Complex<T>> {
        let nt = self.directions[0].len();
        (0..nt)
            .map(|n| {
                (0..3).fold(Complex::new(T::zero(), T::zero()), |acc, i| {
                    acc + self.directions[i][n] * self.alpha[i] * s[i]
                })
            })
            .collect()
    }
}

/// Scalar channel observed by one user after precoding.
#[derive(Debug, Clone, PartialEq)]
pub struct EquivalentChannel<T> {
    pub user: u8,
    pub gain: T,
    pub phase: T,
    pub beta_shared: T,
    pub beta_private: T,
    pub composite: DistanceProfile<T>,
}

impl<T: Real> EquivalentChannel<T> {
    /// Composite I and Q constellations seen by this user.
    pub fn constellations(&self) -> Result<(HierPam<T>, HierPam<T>)> {
        crate::hqam::branch_pams(&self.composite)
    }

    /// Per-branch noise variance after one-tap equalization, `sigma^2 / (2 G^2)`.
    pub fn branch_noise_var(&self, sigma2: T) -> T {
        sigma2 / (T::lit(2.0) * self.gain * self.gain)
    }
}

/// Equivalent channel of `user` for the given symbol profiles.
pub fn equivalent_channel<T: Real>(
    ch: &ChannelPair<T>,
    pre: &PrecoderSet<T>,
    shared: &DistanceProfile<T>,
    private: &DistanceProfile<T>,
    user: u8,
) -> Result<EquivalentChannel<T>> {
    let alpha = pre.alpha();
    let u = usize::from(user);
    if shared.is_empty() && alpha[0] > T::zero() {
        return Err(Error::Mode("power allocated to a shared symbol carrying no bits".into()));
    }
    if private.is_empty() && alpha[u] > T::zero() {
        return Err(Error::Mode(format!("power allocated to private symbol {user} carrying no bits")));
    }
    let h = ch.h(user);
    let a0 = inner(h, &pre.vector(0));
    let au = inner(h, &pre.vector(u));
    let gain = (a0.norm_sqr() + au.norm_sqr()).sqrt();
    if !(gain > ch.lambda(user) * T::epsilon() * T::lit(64.0)) {
        return Err(Error::ZeroGain { user });
    }
    let phase = if a0.norm() >= au.norm() { a0.arg() } else { au.arg() };
    let beta_shared = a0.norm() / gain;
    let beta_private = au.norm() / gain;
    let composite = compose_profiles(shared, private, beta_shared, beta_private, user)?;
    Ok(EquivalentChannel { user, gain, phase, beta_shared, beta_private, composite })
}

/// Equivalent channels of both users.
pub fn equivalent_channels<T: Real>(
    ch: &ChannelPair<T>,
    pre: &PrecoderSet<T>,
    shared: &DistanceProfile<T>,
    private: [&DistanceProfile<T>; 2],
) -> Result<[EquivalentChannel<T>; 2]> {
    Ok([
        equivalent_channel(ch, pre, shared, private[0], 1)?,
        equivalent_channel(ch, pre, shared, private[1], 2)?,
    ])
}

/// Closed-form gains `G_u` for the synthesized beams.
pub fn closed_form_gains<T: Real>(ch: &ChannelPair<T>, theta0: T, alpha: [T; 3]) -> [T; 2] {
    let s = ch.sin_theta();
    let g = |lambda: T, c: T, a: T| {
        let x = lambda * alpha[0] * c;
        let y = lambda * a * s;
        (x * x + y * y).sqrt()
    };
    [
        g(ch.lambda(1), theta0.cos(), alpha[1]),
        g(ch.lambda(2), (ch.theta - theta0).cos(), alpha[2]),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hqam::{map_private, map_shared, BitWord};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex<f64> {
        Complex::new(re, im)
    }

    fn close(a: Complex<f64>, b: Complex<f64>, tol: f64) -> bool {
        (a - b).norm() < tol
    }

    fn random_pair(rng: &mut ChaCha8Rng) -> ChannelPair<f64> {
        let l1 = rng.random_range(0.1..10.0);
        let l2 = rng.random_range(0.1..10.0);
        let r = rng.random_range(0.0..0.99);
        let ph = rng.random_range(-std::f64::consts::PI..std::f64::consts::PI);
        ChannelPair::canonical(l1, l2, Complex::from_polar(r, ph), 1.0).unwrap()
    }

    #[test]
    fn canonical_channels() {
        let ch = ChannelPair::canonical(1.0, 2.0, c(0.0, 0.0), 0.1).unwrap();
        assert!((ch.theta() - std::f64::consts::FRAC_PI_2).abs() < 1e-15);
        assert!(inner(ch.h(1), ch.h(2)).norm() < 1e-15);
        assert!((10.0 * ch.snr(1).log10() - 10.0).abs() < 1e-12);

        let ch = ChannelPair::canonical(1.0, 1.0, c(0.6, 0.0), 1.0).unwrap();
        assert!((ch.theta() - 0.927295218).abs() < 1e-9);
        assert!((ch.sin_theta() - 0.8).abs() < 1e-15);
        assert!(close(ch.rho(), c(0.6, 0.0), 1e-15));

        assert!(matches!(
            ChannelPair::canonical(1.0, 1.0, c(1.0, 0.0), 1.0),
            Err(Error::DegenerateCorrelation { .. })
        ));
    }

    #[test]
    fn unit_vectors_are_unit() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let ch = random_pair(&mut rng);
            assert!((norm(&ch.unit(1)) - 1.0).abs() < 1e-12);
            assert!((norm(&ch.unit(2)) - 1.0).abs() < 1e-12);
            assert!(close(inner(&ch.unit(1), &ch.unit(2)), ch.rho(), 1e-12));
        }
    }

    #[test]
    fn gram_schmidt_examples() {
        let ch = ChannelPair::canonical(1.0, 1.0, c(0.0, 0.0), 1.0).unwrap();
        let (_, q2) = gram_schmidt_basis(&ch);
        assert!(close(inner(&q2, &ch.unit(2)), c(1.0, 0.0), 1e-15));

        let ch = ChannelPair::canonical(1.0, 1.0, c(0.6, 0.0), 1.0).unwrap();
        let (_, q2) = gram_schmidt_basis(&ch);
        assert!(close(q2[0], c(0.0, 0.0), 1e-15) && close(q2[1], c(1.0, 0.0), 1e-15));

        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..200 {
            let ch = random_pair(&mut rng);
            let (q1, q2) = gram_schmidt_basis(&ch);
            assert!((norm(&q1) - 1.0).abs() < 1e-12);
            assert!((norm(&q2) - 1.0).abs() < 1e-12);
            assert!(inner(&q1, &q2).norm() < 1e-12);
        }
    }

    #[test]
    fn shared_direction_examples() {
        let ch = ChannelPair::canonical(1.0, 1.0, c(0.3, -0.4), 1.0).unwrap();
        let p0 = shared_precoder_direction(&ch, 0.0).unwrap();
        let h1 = ch.unit(1);
        assert!(p0.iter().zip(&h1).all(|(a, b)| close(*a, *b, 1e-15)));

        let p0 = shared_precoder_direction(&ch, ch.theta()).unwrap();
        assert!((inner(&ch.unit(2), &p0).norm() - 1.0).abs() < 1e-12);

        let ch = ChannelPair::canonical(1.0, 1.0, c(0.0, 0.0), 1.0).unwrap();
        let p0 = shared_precoder_direction(&ch, std::f64::consts::FRAC_PI_4).unwrap();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let want = axpy(&ch.unit(1), c(s, 0.0), &ch.unit(2), c(s, 0.0));
        assert!(p0.iter().zip(&want).all(|(a, b)| close(*a, *b, 1e-15)));

        assert!(matches!(shared_precoder_direction(&ch, 2.0), Err(Error::BeamAngle { .. })));
        assert!(matches!(shared_precoder_direction(&ch, -0.1), Err(Error::BeamAngle { .. })));
    }

    #[test]
    fn shared_direction_gains() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let ch = random_pair(&mut rng);
            let t0 = rng.random_range(0.0..=1.0) * ch.theta();
            let p0 = shared_precoder_direction(&ch, t0).unwrap();
            let ph = ch.counter_phase();
            assert!(close(inner(&ch.unit(1), &p0), c(t0.cos(), 0.0), 1e-10));
            assert!(close(inner(&ch.unit(2), &p0), ph * (ch.theta() - t0).cos(), 1e-10));
            assert!((norm(&p0) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn private_direction_examples() {
        let ch = ChannelPair::canonical(1.0, 1.0, c(0.6, 0.0), 1.0).unwrap();
        let (p1, _) = private_precoder_directions(&ch);
        assert!(close(p1[0], c(0.8, 0.0), 1e-15) && close(p1[1], c(-0.6, 0.0), 1e-15));
        assert!(close(inner(&ch.unit(1), &p1), c(0.8, 0.0), 1e-15));

        let ch = ChannelPair::canonical(1.0, 1.0, c(0.0, 0.0), 1.0).unwrap();
        let (p1, p2) = private_precoder_directions(&ch);
        assert!(p1.iter().zip(&ch.unit(1)).all(|(a, b)| close(*a, *b, 1e-15)));
        assert!(p2.iter().zip(&ch.unit(2)).all(|(a, b)| close(*a, *b, 1e-15)));

        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..200 {
            let ch = random_pair(&mut rng);
            let (p1, p2) = private_precoder_directions(&ch);
            assert!(inner(ch.h(2), &p1).norm() < 1e-12 * ch.lambda(2));
            assert!(inner(ch.h(1), &p2).norm() < 1e-12 * ch.lambda(1));
            assert!((norm(&p1) - 1.0).abs() < 1e-12 && (norm(&p2) - 1.0).abs() < 1e-12);
            assert!(inner(&ch.unit(1), &p1).arg().abs() < 1e-10);
            if ch.rho().norm() > 1e-6 {
                let d = inner(&ch.unit(2), &p2).arg() + ch.rho().arg();
                assert!(d.sin().abs() < 1e-10 && d.cos() > 0.0);
            }
        }
    }

    #[test]
    fn precoder_power_checks() {
        let ch = ChannelPair::canonical(1.0, 1.0, c(0.5, 0.0), 1.0).unwrap();
        assert!(matches!(PrecoderSet::synthesize(&ch, 0.1, [0.5, 0.5, 0.5]), Err(Error::Power { .. })));
        assert!(matches!(PrecoderSet::synthesize(&ch, 0.1, [-0.6, 0.8, 0.0]), Err(Error::Power { .. })));
        let pre = PrecoderSet::synthesize(&ch, 0.1, [0.6, 0.8, 0.0]).unwrap();
        let total: f64 = (0..3).map(|i| norm(&pre.vector(i)).powi(2)).sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn equivalent_channel_examples() {
        let e = DistanceProfile::<f64>::empty();
        let q = DistanceProfile::<f64>::uniform(1, 1).unwrap();
        let ch = ChannelPair::canonical(1.0, 1.0, c(0.0, 0.0), 1.0).unwrap();

        // balanced shared/private power at user 1
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let pre = PrecoderSet::synthesize(&ch, 0.0, [s, s, 0.0]).unwrap();
        let eq = equivalent_channel(&ch, &pre, &q, &q, 1);
        // equal betas break the layer ordering at the seam
        assert!(matches!(eq, Err(Error::CompositeOrdering { .. })));
        let [g1, _] = closed_form_gains(&ch, 0.0, [s, s, 0.0]);
        assert!((g1 - 1.0).abs() < 1e-15);
        let a0 = inner(ch.h(1), &pre.vector(0)).norm();
        assert!((a0 / g1 - s).abs() < 1e-15);

        // QAMA-BF: only the shared beam
        let ch = ChannelPair::canonical(1.5, 2.0, c(0.5, 0.2), 1.0).unwrap();
        let pre = PrecoderSet::synthesize(&ch, 0.3, [1.0, 0.0, 0.0]).unwrap();
        let [e1, e2] = equivalent_channels(&ch, &pre, &q, [&e, &e]).unwrap();
        assert_eq!((e1.beta_shared, e1.beta_private), (1.0, 0.0));
        assert!((e2.beta_shared - 1.0).abs() < 1e-15);
        assert_eq!(e1.composite, q);

        // SDMA: private beams only
        let pre = PrecoderSet::synthesize(&ch, 0.3, [0.0, 0.6, 0.8]).unwrap();
        let [e1, e2] = equivalent_channels(&ch, &pre, &e, [&q, &q]).unwrap();
        assert_eq!(e1.beta_private, 1.0);
        assert_eq!(e2.beta_private, 1.0);
        assert!((e2.phase + ch.rho().arg()).abs() < 1e-12);
        assert!(e1.phase.abs() < 1e-12);

        // power on an empty symbol
        assert!(matches!(equivalent_channel(&ch, &pre, &e, &e, 1), Err(Error::Mode(_))));
    }

    #[test]
    fn gains_match_closed_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let ch = random_pair(&mut rng);
            let t0 = rng.random_range(0.0..=1.0) * ch.theta();
            let a = [rng.random_range(0.1..1.0f64), rng.random_range(0.1..1.0), rng.random_range(0.1..1.0)];
            let n = a.iter().map(|x| x * x).sum::<f64>().sqrt();
            let a = a.map(|x| x / n);
            let pre = PrecoderSet::synthesize(&ch, t0, a).unwrap();
            let g = closed_form_gains(&ch, t0, a);
            for u in 1..=2u8 {
                let h = ch.h(u);
                let a0 = inner(h, &pre.vector(0));
                let au = inner(h, &pre.vector(usize::from(u)));
                let gi = (a0.norm_sqr() + au.norm_sqr()).sqrt();
                assert!((gi - g[usize::from(u - 1)]).abs() < 1e-10 * ch.lambda(u));
                // phase alignment between shared and private contribution
                let d = a0.arg() - au.arg();
                assert!(d.sin().abs() < 1e-10 && d.cos() > 0.0);
            }
        }
    }

    #[test]
    fn parallax_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let shared = DistanceProfile::<f64>::uniform(1, 1).unwrap();
        let private = DistanceProfile::<f64>::uniform(1, 1).unwrap();
        let mut checked = 0;
        while checked < 200 {
            let ch = random_pair(&mut rng);
            let t0 = rng.random_range(0.0..=1.0) * ch.theta();
            let a = [0.9f64, 0.3, 0.3];
            let n = a.iter().map(|x| x * x).sum::<f64>().sqrt();
            let pre = PrecoderSet::synthesize(&ch, t0, a.map(|x| x / n)).unwrap();
            let Ok(eqs) = equivalent_channels(&ch, &pre, &shared, [&private, &private]) else { continue };
            let bits: Vec<bool> = (0..6).map(|_| rng.random()).collect();
            let words = [
                BitWord { shared_i: vec![bits[0]], shared_q: vec![bits[1]], private_i: vec![bits[2]], private_q: vec![bits[3]] },
                BitWord { shared_i: vec![bits[0]], shared_q: vec![bits[1]], private_i: vec![bits[4]], private_q: vec![bits[5]] },
            ];
            let s0 = map_shared(&words[0], &shared).unwrap();
            let s1 = map_private(&words[0], &private).unwrap();
            let s2 = map_private(&words[1], &private).unwrap();
            let x = pre.transmit([s0, s1, s2]);
            let w = c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            for (u, eq) in [1u8, 2].into_iter().zip(&eqs) {
                let forward = inner(ch.h(u), &x) + w;
                let (pi, pq) = eq.constellations().unwrap();
                let (ci, cq) = words[usize::from(u - 1)].composite_bits();
                let st = c(pi.point_for_label(crate::hqam::bits_label(&ci)), pq.point_for_label(crate::hqam::bits_label(&cq)));
                let model = Complex::from_polar(eq.gain, eq.phase) * st + w;
                assert!(close(forward, model, 1e-10), "{forward} vs {model}");
            }
            checked += 1;
        }
    }

    #[test]
    fn f32_precoders() {
        let ch = ChannelPair::<f32>::canonical(1.0, 2.0, Complex::new(0.6, 0.0), 1.0).unwrap();
        let (p1, _) = private_precoder_directions(&ch);
        assert!(inner(ch.h(2), &p1).norm() < 1e-6);
    }
}
