//! Transmission-mode sweeps, the achievable rate region and mode reduction.
//!
//! A mode fixes the symbol sizes, the layer ratio, how the shared bits are
//! split between users, the shared beam angle `theta0` and the amplitude
//! split `(a0, a1, a2)`. The region is the convex hull of all achieved rate
//! pairs, closed towards the origin (time sharing and rate reduction).

use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{equivalent_channel, ChannelPair, EquivalentChannel, PrecoderSet};
use crate::hqam::DistanceProfile;
use crate::inforate::{BitAssignment, RatePoint, UserBitMis};
use crate::scalar::Real;

/// Branch bit counts of the shared symbol and of each private symbol (both
/// private symbols have the same size).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Sizes {
    pub m0: u8,
    pub n0: u8,
    pub m1: u8,
    pub n1: u8,
}

impl Sizes {
    pub fn new(m0: usize, n0: usize, m1: usize, n1: usize) -> Self {
        let c = |v: usize| v.min(u8::MAX as usize) as u8;
        Self { m0: c(m0), n0: c(n0), m1: c(m1), n1: c(n1) }
    }

    pub fn shared_bits(&self) -> usize {
        (self.m0 + self.n0) as usize
    }

    pub fn private_bits(&self) -> usize {
        (self.m1 + self.n1) as usize
    }

    /// Largest composite branch seen by either user.
    pub fn composite_branch_bits(&self) -> usize {
        ((self.m0 + self.m1).max(self.n0 + self.n1)) as usize
    }

    /// The same sizes with I and Q exchanged.
    pub fn swapped(&self) -> Self {
        Self { m0: self.n0, n0: self.m0, m1: self.n1, n1: self.m1 }
    }
}

impl fmt::Display for Sizes {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{};{},{})", self.m0, self.n0, self.m1, self.n1)
    }
}

/// One transmission mode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModeConfig<T> {
    pub sizes: Sizes,
    /// Ratio `d_k / d_{k+1}` inside every symbol branch (2 is uniform PAM).
    pub layer_ratio: T,
    pub assignment: BitAssignment,
    pub theta0: T,
    /// Amplitudes `(a0, a1, a2)` with `a0^2 + a1^2 + a2^2 = 1`.
    pub alpha: [T; 3],
}

impl<T: Real> ModeConfig<T> {
    pub fn shared_profile(&self) -> Result<DistanceProfile<T>> {
        DistanceProfile::geometric(self.sizes.m0 as usize, self.sizes.n0 as usize, self.layer_ratio)
    }

    pub fn private_profile(&self) -> Result<DistanceProfile<T>> {
        DistanceProfile::geometric(self.sizes.m1 as usize, self.sizes.n1 as usize, self.layer_ratio)
    }

    /// Checks the structural invariants that do not depend on the channel.
    pub fn validate(&self) -> Result<()> {
        let s = self.sizes;
        if s.shared_bits() + s.private_bits() == 0 {
            return Err(Error::Mode("mode carries no bits".into()));
        }
        if s.composite_branch_bits() > 3 {
            return Err(Error::Mode(format!("composite branch exceeds 3 bits for sizes {s}")));
        }
        if self.assignment.m0() != s.m0 as usize || self.assignment.n0() != s.n0 as usize {
            return Err(Error::Assignment(format!("assignment does not match shared sizes {s}")));
        }
        let carries = [s.shared_bits() > 0, s.private_bits() > 0, s.private_bits() > 0];
        for (i, (&a, &c)) in self.alpha.iter().zip(&carries).enumerate() {
            if a < T::zero() || (a > T::zero()) != c {
                return Err(Error::Mode(format!("amplitude a{i} = {a} does not match the bits it carries")));
            }
        }
        let sum = self.alpha.iter().fold(T::zero(), |acc, &a| acc + a * a);
        if (sum - T::one()).abs() > T::lit(1e-12) {
            return Err(Error::Power { sum: sum.as_f64() });
        }
        Ok(())
    }

    /// Users receiving at least one bit.
    pub fn participates(&self, user: u8) -> bool {
        self.sizes.private_bits() > 0 || self.assignment.count(user) > 0
    }

    /// SDMA: no shared symbol.
    pub fn is_sdma(&self) -> bool {
        self.sizes.shared_bits() == 0
    }

    /// Single-beam QAMA: no private symbols.
    pub fn is_qama_bf(&self) -> bool {
        self.sizes.private_bits() == 0
    }

    /// The user served alone, if every bit goes to one user.
    pub fn single_user(&self) -> Option<u8> {
        if self.sizes.private_bits() > 0 {
            return None;
        }
        [1u8, 2].into_iter().find(|&u| self.assignment.count(u) == self.sizes.shared_bits())
    }

    /// The mode with users swapped, for a channel whose users are swapped.
    pub fn mirrored(&self, theta: T) -> Result<Self> {
        let s = self.sizes;
        let flip = |mask: u32, m: u8| !mask & ((1u32 << m) - 1);
        Ok(Self {
            assignment: BitAssignment::new(
                s.m0 as usize,
                s.n0 as usize,
                flip(self.assignment.mask_i(), s.m0),
                flip(self.assignment.mask_q(), s.n0),
            )?,
            theta0: if s.shared_bits() > 0 { theta - self.theta0 } else { self.theta0 },
            alpha: [self.alpha[0], self.alpha[2], self.alpha[1]],
            ..*self
        })
    }
}

/// Channel realization of a scenario, in the linear domain.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario<T> {
    pub channel: ChannelPair<T>,
}

impl<T: Real> Scenario<T> {
    /// Canonical two-antenna scenario with reference SNRs `snr_u = lambda_u^2 / sigma^2`.
    pub fn new(snr1: T, snr2: T, rho: Complex<T>, sigma2: T) -> Result<Self> {
        if !(sigma2 > T::zero()) || !sigma2.is_finite() {
            return Err(Error::NoiseVariance);
        }
        let lambda = |snr: T, user: u8| {
            if snr > T::zero() && snr.is_finite() {
                Ok((snr * sigma2).sqrt())
            } else {
                Err(Error::ChannelNorm { user })
            }
        };
        Ok(Self { channel: ChannelPair::canonical(lambda(snr1, 1)?, lambda(snr2, 2)?, rho, sigma2)? })
    }

    pub fn from_channel(channel: ChannelPair<T>) -> Self {
        Self { channel }
    }

    pub fn theta(&self) -> T {
        self.channel.theta()
    }
}

/// Which mode family a sweep covers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    #[default]
    All,
    Sdma,
    QamaBf,
}

impl Family {
    pub fn admits(&self, sizes: Sizes) -> bool {
        match self {
            Family::All => true,
            Family::Sdma => sizes.shared_bits() == 0,
            Family::QamaBf => sizes.private_bits() == 0,
        }
    }
}

/// Sweep resolution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    /// Points of the `theta0` grid over `[0, Theta]`.
    pub theta_points: usize,
    /// Steps of the squared-amplitude simplex (20 gives 0.05).
    pub power_steps: usize,
    /// Candidate layer ratios; `[2.0]` keeps uniform PAM.
    pub layer_ratios: Vec<f64>,
    /// Largest composite branch size.
    pub max_branch_bits: usize,
    pub family: Family,
    /// Restricts the sweep to these sizes when set.
    pub sizes: Option<Vec<Sizes>>,
}

impl Default for Grid {
    fn default() -> Self {
        Self {
            theta_points: 17,
            power_steps: 20,
            layer_ratios: vec![2.0],
            max_branch_bits: 3,
            family: Family::All,
            sizes: None,
        }
    }
}

impl Grid {
    fn check(&self) -> Result<()> {
        if self.theta_points == 0 {
            return Err(Error::EmptyGrid("theta0"));
        }
        if self.power_steps == 0 {
            return Err(Error::EmptyGrid("power"));
        }
        if self.layer_ratios.is_empty() {
            return Err(Error::EmptyGrid("layer ratios"));
        }
        if let Some(r) = self.layer_ratios.iter().find(|&&r| !(r >= 2.0) || !r.is_finite()) {
            return Err(Error::Mode(format!("layer ratio {r} is below 2")));
        }
        if self.max_branch_bits == 0 || self.max_branch_bits > 3 {
            return Err(Error::Mode(format!("max_branch_bits must be 1..=3, got {}", self.max_branch_bits)));
        }
        if matches!(&self.sizes, Some(s) if s.is_empty()) {
            return Err(Error::EmptyGrid("sizes"));
        }
        Ok(())
    }

    /// Size combinations in canonical I/Q orientation.
    pub fn size_list(&self) -> Vec<Sizes> {
        let b = self.max_branch_bits;
        let mut out = Vec::new();
        if let Some(list) = &self.sizes {
            for &s in list {
                let c = canonical(s);
                if !out.contains(&c) && s.composite_branch_bits() <= b && self.family.admits(c) {
                    out.push(c);
                }
            }
            return out;
        }
        for m0 in 0..=b {
            for m1 in 0..=b - m0 {
                for n0 in 0..=b {
                    for n1 in 0..=b - n0 {
                        let s = Sizes::new(m0, n0, m1, n1);
                        if s.shared_bits() + s.private_bits() > 0 && canonical(s) == s && self.family.admits(s) {
                            out.push(s);
                        }
                    }
                }
            }
        }
        out
    }

    fn thetas<T: Real>(&self, theta: T) -> Vec<T> {
        if self.theta_points == 1 {
            return vec![T::zero()];
        }
        let n = T::count(self.theta_points - 1);
        (0..self.theta_points).map(|j| theta * T::count(j) / n).collect()
    }

    fn powers<T: Real>(&self, sizes: Sizes) -> Vec<[T; 3]> {
        let s = self.power_steps;
        let amp = |k: usize| (T::count(k) / T::count(s)).sqrt();
        match (sizes.shared_bits() > 0, sizes.private_bits() > 0) {
            (true, false) => vec![[T::one(), T::zero(), T::zero()]],
            (false, true) => (1..s).map(|j| [T::zero(), amp(j), amp(s - j)]).collect(),
            _ => {
                let mut out = Vec::new();
                for i in 1..s {
                    for j in 1..s - i {
                        out.push([amp(i), amp(j), amp(s - i - j)]);
                    }
                }
                out
            }
        }
    }
}

/// Orientation kept when I/Q mirror images are deduplicated.
fn canonical(s: Sizes) -> Sizes {
    if (s.m0, s.m1) >= (s.n0, s.n1) {
        s
    } else {
        s.swapped()
    }
}

fn keep_assignment(s: Sizes, a: &BitAssignment) -> bool {
    (s.m0, s.m1) != (s.n0, s.n1) || a.mask_i() >= a.mask_q()
}

/// Why a mode was dropped from a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Reject {
    CompositeOrdering,
    ZeroGain,
    Degenerate,
}

impl Reject {
    fn of(e: &Error) -> Self {
        match e {
            Error::CompositeOrdering { .. } | Error::Ordering { .. } => Reject::CompositeOrdering,
            Error::ZeroGain { .. } | Error::NonPositiveDistance { .. } => Reject::ZeroGain,
            _ => Reject::Degenerate,
        }
    }
}

impl fmt::Display for Reject {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Reject::CompositeOrdering => "composite_ordering",
            Reject::ZeroGain => "zero_gain",
            Reject::Degenerate => "degenerate",
        })
    }
}

/// Mode with its achieved rates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModePoint<T> {
    pub mode: ModeConfig<T>,
    pub rate: RatePoint<T>,
}

/// Transmit-side setting shared by all bit assignments of one mode.
#[derive(Debug, Clone, Copy)]
struct Physical<T> {
    sizes: Sizes,
    layer_ratio: T,
    theta0: T,
    alpha: [T; 3],
}

fn views<T: Real>(scn: &Scenario<T>, p: &Physical<T>) -> Result<[Result<EquivalentChannel<T>>; 2]> {
    let probe = ModeConfig {
        sizes: p.sizes,
        layer_ratio: p.layer_ratio,
        assignment: BitAssignment::new(p.sizes.m0 as usize, p.sizes.n0 as usize, 0, 0)?,
        theta0: p.theta0,
        alpha: p.alpha,
    };
    probe.validate()?;
    let shared = probe.shared_profile()?;
    let private = probe.private_profile()?;
    let pre = PrecoderSet::synthesize(&scn.channel, p.theta0, p.alpha)?;
    Ok([
        equivalent_channel(&scn.channel, &pre, &shared, &private, 1),
        equivalent_channel(&scn.channel, &pre, &shared, &private, 2),
    ])
}

#[derive(Debug, Default)]
struct Outcome<T> {
    points: Vec<ModePoint<T>>,
    modes: Vec<ModeConfig<T>>,
    rejected: BTreeMap<Reject, usize>,
}

fn expand<T: Real>(scn: &Scenario<T>, p: &Physical<T>, sigma2: T, with_rates: bool) -> Result<Outcome<T>> {
    let [e1, e2] = views(scn, p)?;
    let mis = |e: &Result<EquivalentChannel<T>>| -> Result<Option<UserBitMis<T>>> {
        match e {
            Ok(eq) if with_rates => UserBitMis::evaluate(eq, sigma2).map(Some),
            _ => Ok(None),
        }
    };
    let mis = [mis(&e1)?, mis(&e2)?];
    let eqs = [e1, e2];
    let mut out = Outcome { points: Vec::new(), modes: Vec::new(), rejected: BTreeMap::new() };
    for assignment in BitAssignment::enumerate(p.sizes.m0 as usize, p.sizes.n0 as usize) {
        if !keep_assignment(p.sizes, &assignment) {
            continue;
        }
        let mode = ModeConfig {
            sizes: p.sizes,
            layer_ratio: p.layer_ratio,
            assignment,
            theta0: p.theta0,
            alpha: p.alpha,
        };
        let failed = [1u8, 2]
            .into_iter()
            .zip(&eqs)
            .find_map(|(u, e)| match e {
                Err(err) if mode.participates(u) => Some(Reject::of(err)),
                _ => None,
            });
        if let Some(reason) = failed {
            *out.rejected.entry(reason).or_default() += 1;
            continue;
        }
        if !with_rates {
            out.modes.push(mode);
            continue;
        }
        let mut r = [T::zero(); 2];
        for (u, m) in [1u8, 2].into_iter().zip(&mis) {
            if let (true, Some(m)) = (mode.participates(u), m) {
                r[usize::from(u - 1)] = m.rate(u, &assignment)?;
            }
        }
        out.points.push(ModePoint { mode, rate: RatePoint { r1: r[0], r2: r[1] } });
    }
    Ok(out)
}

fn physical_list<T: Real>(scn: &Scenario<T>, grid: &Grid) -> Result<Vec<Physical<T>>> {
    grid.check()?;
    let sizes = grid.size_list();
    if sizes.is_empty() {
        return Err(Error::EmptyGrid("sizes"));
    }
    let thetas = grid.thetas(scn.theta());
    let mut out = Vec::new();
    for &s in &sizes {
        let ratios: &[f64] = if s.composite_branch_bits() > 1 && (s.m0.max(s.n0) > 1 || s.m1.max(s.n1) > 1) {
            &grid.layer_ratios
        } else {
            &grid.layer_ratios[..1]
        };
        let th: &[T] = if s.shared_bits() > 0 { &thetas } else { &thetas[..1] };
        for &ratio in ratios {
            for &theta0 in th {
                for alpha in grid.powers(s) {
                    out.push(Physical { sizes: s, layer_ratio: T::lit(ratio), theta0, alpha });
                }
            }
        }
    }
    Ok(out)
}

/// Valid modes of a grid, with rejection counts.
#[derive(Debug, Clone)]
pub struct ModeEnumeration<T> {
    pub modes: Vec<ModeConfig<T>>,
    pub rejected: BTreeMap<Reject, usize>,
}

/// Enumerates every mode of `grid` and filters those whose composite
/// constellation is not a valid H-QAM for a user that receives bits.
pub fn enumerate_modes<T: Real>(scn: &Scenario<T>, grid: &Grid) -> Result<ModeEnumeration<T>> {
    let sigma2 = scn.channel.sigma2();
    let mut modes = Vec::new();
    let mut rejected = BTreeMap::new();
    for p in physical_list(scn, grid)? {
        let o = expand(scn, &p, sigma2, false)?;
        modes.extend(o.modes);
        for (k, v) in o.rejected {
            *rejected.entry(k).or_default() += v;
        }
    }
    Ok(ModeEnumeration { modes, rejected })
}

/// Rates of a single mode.
pub fn evaluate_mode<T: Real>(mode: &ModeConfig<T>, scn: &Scenario<T>) -> Result<RatePoint<T>> {
    mode.validate()?;
    let p = Physical { sizes: mode.sizes, layer_ratio: mode.layer_ratio, theta0: mode.theta0, alpha: mode.alpha };
    let eqs = views(scn, &p)?;
    let mut r = [T::zero(); 2];
    for (u, e) in [1u8, 2].into_iter().zip(eqs) {
        if mode.participates(u) {
            let mis = UserBitMis::evaluate(&e?, scn.channel.sigma2())?;
            r[usize::from(u - 1)] = mis.rate(u, &mode.assignment)?;
        }
    }
    Ok(RatePoint { r1: r[0], r2: r[1] })
}

/// All evaluated modes of a scenario, in deterministic enumeration order.
#[derive(Debug, Clone)]
pub struct Sweep<T> {
    pub points: Vec<ModePoint<T>>,
    pub rejected: BTreeMap<Reject, usize>,
}

impl<T: Real> Sweep<T> {
    /// Points of one mode family.
    pub fn family(&self, family: Family) -> Vec<ModePoint<T>> {
        self.points.iter().filter(|p| family.admits(p.mode.sizes)).copied().collect()
    }

    pub fn rates(&self) -> Vec<RatePoint<T>> {
        self.points.iter().map(|p| p.rate).collect()
    }
}

/// Evaluates every mode of `grid`. Runs on the current rayon pool.
pub fn sweep<T: Real>(scn: &Scenario<T>, grid: &Grid) -> Result<Sweep<T>> {
    let sigma2 = scn.channel.sigma2();
    let outcomes = physical_list(scn, grid)?
        .par_iter()
        .map(|p| expand(scn, p, sigma2, true))
        .collect::<Result<Vec<_>>>()?;
    let mut points = Vec::new();
    let mut rejected = BTreeMap::new();
    for o in outcomes {
        points.extend(o.points);
        for (k, v) in o.rejected {
            *rejected.entry(k).or_default() += v;
        }
    }
    if points.is_empty() {
        return Err(Error::NoPoints);
    }
    Ok(Sweep { points, rejected })
}

/// Vertex of the region boundary; `point` indexes the source rate point, or
/// is `None` for an axis anchor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HullVertex<T> {
    pub r1: T,
    pub r2: T,
    pub point: Option<usize>,
}

/// Convex, origin-closed rate region.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateRegion<T> {
    /// Boundary from `(0, R2max)` to `(R1max, 0)`, upper-right part only.
    pub hull: Vec<HullVertex<T>>,
    pub area: T,
    /// Per input point: whether it sits on a hull vertex.
    pub on_hull: Vec<bool>,
    /// Number of distinct Pareto-efficient rate pairs.
    pub pareto_count: usize,
}

impl<T: Real> RateRegion<T> {
    /// Hull vertices achieved by an actual point.
    pub fn vertex_points(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self.hull.iter().filter_map(|h| h.point).collect();
        v.dedup();
        v
    }
}

fn cross<T: Real>(o: (T, T), a: (T, T), b: (T, T)) -> T {
    (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0)
}

/// Builds the region of `points` together with the origin and the axis
/// projections `(R1max, 0)` and `(0, R2max)`.
pub fn build_region<T: Real>(points: &[RatePoint<T>]) -> Result<RateRegion<T>> {
    if points.is_empty() {
        return Err(Error::NoPoints);
    }
    if points.iter().any(|p| !(p.r1 >= T::zero() && p.r2 >= T::zero()) || !p.r1.is_finite() || !p.r2.is_finite()) {
        return Err(Error::Mode("rate points must be finite and nonnegative".into()));
    }
    let r1max = points.iter().fold(T::zero(), |m, p| m.max(p.r1));
    let r2max = points.iter().fold(T::zero(), |m, p| m.max(p.r2));
    let mut cand: Vec<HullVertex<T>> = points
        .iter()
        .enumerate()
        .map(|(i, p)| HullVertex { r1: p.r1, r2: p.r2, point: Some(i) })
        .collect();
    cand.push(HullVertex { r1: T::zero(), r2: r2max, point: None });
    cand.push(HullVertex { r1: r1max, r2: T::zero(), point: None });
    // by r1 ascending, then r2 descending, real points before anchors
    cand.sort_by(|a, b| {
        a.r1.partial_cmp(&b.r1)
            .unwrap()
            .then(b.r2.partial_cmp(&a.r2).unwrap())
            .then(a.point.is_none().cmp(&b.point.is_none()))
            .then(a.point.cmp(&b.point))
    });
    cand.dedup_by(|b, a| a.r1 == b.r1 && a.r2 == b.r2);
    let mut hull: Vec<HullVertex<T>> = Vec::new();
    for c in cand {
        while hull.len() >= 2 {
            let n = hull.len();
            let o = (hull[n - 2].r1, hull[n - 2].r2);
            let a = (hull[n - 1].r1, hull[n - 1].r2);
            if cross(o, a, (c.r1, c.r2)) >= T::zero() {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(c);
    }
    // drop the leading part that climbs to the R2max vertex and any points
    // below the R1max vertex; both lie inside the origin-closed region
    let top = hull.iter().position(|h| h.r2 == r2max).unwrap_or(0);
    let mut hull = hull.split_off(top);
    if let Some(end) = hull.iter().position(|h| h.r1 == r1max) {
        hull.truncate(end + 1);
    }
    if hull.first().is_some_and(|h| h.r1 > T::zero()) {
        hull.insert(0, HullVertex { r1: T::zero(), r2: r2max, point: None });
    }
    if hull.last().is_some_and(|h| h.r2 > T::zero()) {
        hull.push(HullVertex { r1: r1max, r2: T::zero(), point: None });
    }
    // polygon (0,0) -> hull, shoelace
    let mut twice = T::zero();
    let mut prev = (T::zero(), T::zero());
    for h in hull.iter().map(|h| (h.r1, h.r2)).chain(std::iter::once((T::zero(), T::zero()))) {
        twice += prev.0 * h.1 - h.0 * prev.1;
        prev = h;
    }
    let area = (twice * T::lit(0.5)).abs();
    let mut on_hull = vec![false; points.len()];
    for h in &hull {
        if h.point.is_some() {
            for (flag, p) in on_hull.iter_mut().zip(points) {
                if p.r1 == h.r1 && p.r2 == h.r2 {
                    *flag = true;
                }
            }
        }
    }
    Ok(RateRegion { hull, area, on_hull, pareto_count: pareto_count(points) })
}

/// Distinct rate pairs not weakly dominated by another point.
pub fn pareto_count<T: Real>(points: &[RatePoint<T>]) -> usize {
    let mut v: Vec<(T, T)> = points.iter().map(|p| (p.r1, p.r2)).collect();
    v.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then(b.1.partial_cmp(&a.1).unwrap()));
    v.dedup();
    let mut best = T::neg_infinity();
    let mut n = 0;
    for (_, r2) in v {
        if r2 > best {
            n += 1;
            best = r2;
        }
    }
    n
}

/// Reduced set of modes and the region they span.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeSelection<T> {
    /// Indices into the point list, in selection order.
    pub indices: Vec<usize>,
    pub region: RateRegion<T>,
    /// Area of the reduced polygon over the full region area.
    pub area_ratio: T,
}

/// Greedily picks `n2` hull modes, starting from the two modes that maximize
/// each user's rate, adding at each step the one that enlarges the polygon
/// most.
pub fn select_modes<T: Real>(points: &[RatePoint<T>], full: &RateRegion<T>, n2: usize) -> Result<ModeSelection<T>> {
    if n2 < 2 {
        return Err(Error::TooFewModes(n2));
    }
    let cand = full.vertex_points();
    if n2 > cand.len() {
        return Err(Error::TooManyModes { requested: n2, available: cand.len() });
    }
    // the boundary runs from the R2max end to the R1max end
    let mut chosen = vec![cand[0]];
    if cand[cand.len() - 1] != cand[0] {
        chosen.push(cand[cand.len() - 1]);
    }
    let sub = |idx: &[usize]| -> Result<RateRegion<T>> {
        build_region(&idx.iter().map(|&i| points[i]).collect::<Vec<_>>())
    };
    while chosen.len() < n2 {
        let mut best: Option<(T, usize)> = None;
        for &c in &cand {
            if chosen.contains(&c) {
                continue;
            }
            let mut trial = chosen.clone();
            trial.push(c);
            let a = sub(&trial)?.area;
            if best.is_none_or(|(ba, _)| a > ba) {
                best = Some((a, c));
            }
        }
        match best {
            Some((_, c)) => chosen.push(c),
            None => break,
        }
    }
    let region = sub(&chosen)?;
    let area_ratio = if full.area > T::zero() { region.area / full.area } else { T::one() };
    Ok(ModeSelection { indices: chosen, region, area_ratio })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rp(r1: f64, r2: f64) -> RatePoint<f64> {
        RatePoint { r1, r2 }
    }

    fn scn(g1_db: f64, g2_db: f64, rho: f64) -> Scenario<f64> {
        let lin = |db: f64| 10f64.powf(db / 10.0);
        Scenario::new(lin(g1_db), lin(g2_db), Complex::new(rho, 0.0), 1.0).unwrap()
    }

    fn coords(r: &RateRegion<f64>) -> Vec<(f64, f64)> {
        r.hull.iter().map(|h| (h.r1, h.r2)).collect()
    }

    #[test]
    fn region_examples() {
        let r = build_region(&[rp(1.0, 0.0), rp(0.0, 1.0), rp(0.6, 0.6)]).unwrap();
        assert_eq!(coords(&r), vec![(0.0, 1.0), (0.6, 0.6), (1.0, 0.0)]);
        assert!((r.area - (0.6 * 1.0)).abs() < 1e-15);
        assert_eq!(r.on_hull, vec![true, true, true]);
        let r = build_region(&[rp(1.0, 0.0), rp(0.0, 1.0), rp(0.4, 0.4)]).unwrap();
        assert_eq!(coords(&r), vec![(0.0, 1.0), (1.0, 0.0)]);
        assert_eq!(r.on_hull, vec![true, true, false]);
        assert!((r.area - 0.5).abs() < 1e-15);
        assert_eq!(r.pareto_count, 3);
    }

    #[test]
    fn region_anchors_and_single_point() {
        let r = build_region(&[rp(2.0, 1.0)]).unwrap();
        assert_eq!(coords(&r), vec![(0.0, 1.0), (2.0, 1.0), (2.0, 0.0)]);
        assert_eq!(r.area, 2.0);
        assert_eq!(r.hull[0].point, None);
        assert_eq!(r.hull[1].point, Some(0));
        assert!(build_region::<f64>(&[]).is_err());
        let r = build_region(&[rp(1.0, 3.0), rp(3.0, 1.0), rp(2.0, 2.0), rp(0.5, 0.5)]).unwrap();
        assert_eq!(coords(&r), vec![(0.0, 3.0), (1.0, 3.0), (3.0, 1.0), (3.0, 0.0)]);
        assert_eq!(r.area, 3.0 + 4.0);
    }

    #[test]
    fn selection() {
        let pts = vec![rp(4.0, 0.0), rp(0.0, 4.0), rp(3.0, 3.0), rp(3.8, 1.5), rp(1.0, 3.9), rp(1.0, 1.0)];
        let full = build_region(&pts).unwrap();
        let n = full.vertex_points().len();
        assert_eq!(n, 5);
        let all = select_modes(&pts, &full, n).unwrap();
        assert!((all.area_ratio - 1.0).abs() < 1e-15);
        let two = select_modes(&pts, &full, 2).unwrap();
        assert_eq!(two.indices.len(), 2);
        assert!(two.indices.contains(&0) && two.indices.contains(&1));
        assert!((two.region.area - 8.0).abs() < 1e-15);
        let three = select_modes(&pts, &full, 3).unwrap();
        assert_eq!(three.indices[2], 2);
        assert!(matches!(select_modes(&pts, &full, 1), Err(Error::TooFewModes(1))));
        assert!(matches!(select_modes(&pts, &full, n + 1), Err(Error::TooManyModes { .. })));
    }

    #[test]
    fn grid_counts() {
        let g = Grid::default();
        let s: Scenario<f64> = scn(10.0, 20.0, 0.8);
        assert_eq!(g.powers::<f64>(Sizes::new(1, 1, 1, 1)).len(), 171);
        assert_eq!(g.powers::<f64>(Sizes::new(0, 0, 1, 1)).len(), 19);
        assert_eq!(g.powers::<f64>(Sizes::new(1, 1, 0, 0)).len(), 1);
        let th = g.thetas(s.theta());
        assert_eq!(th.len(), 17);
        assert_eq!(th[16], s.theta());
        for sz in g.size_list() {
            assert_eq!(canonical(sz), sz);
            assert!(sz.composite_branch_bits() <= 3);
        }
        let sdma = Grid { family: Family::Sdma, ..Grid::default() };
        assert!(sdma.size_list().iter().all(|s| s.shared_bits() == 0));
        let bad = Grid { theta_points: 0, ..Grid::default() };
        assert!(matches!(enumerate_modes(&s, &bad), Err(Error::EmptyGrid(_))));
        let none = Grid { sizes: Some(vec![]), ..Grid::default() };
        assert!(matches!(enumerate_modes(&s, &none), Err(Error::EmptyGrid(_))));
    }

    #[test]
    fn qpsk_modes_compose_h16qam() {
        let s = scn(10.0, 20.0, 0.8);
        let g = Grid { sizes: Some(vec![Sizes::new(1, 1, 1, 1)]), ..Grid::default() };
        let e = enumerate_modes(&s, &g).unwrap();
        assert!(!e.modes.is_empty());
        let m = e.modes[0];
        let pre = PrecoderSet::synthesize(&s.channel, m.theta0, m.alpha).unwrap();
        let eq = equivalent_channel(&s.channel, &pre, &m.shared_profile().unwrap(), &m.private_profile().unwrap(), 1)
            .unwrap();
        let (i, q) = eq.constellations().unwrap();
        assert_eq!(i.len() * q.len(), 16);
    }

    #[test]
    fn shared_only_to_one_user() {
        let s = scn(10.0, 20.0, 0.8);
        let mode = ModeConfig {
            sizes: Sizes::new(2, 2, 0, 0),
            layer_ratio: 2.0,
            assignment: BitAssignment::all_to(1, 2, 2).unwrap(),
            theta0: 0.0,
            alpha: [1.0, 0.0, 0.0],
        };
        let r = evaluate_mode(&mode, &s).unwrap();
        assert_eq!(r.r2, 0.0);
        assert!(r.r1 > 3.0 && r.r1 <= 4.0);
        assert_eq!(mode.single_user(), Some(1));
    }

    #[test]
    fn mirrored_mode_swaps_rates() {
        let s = scn(15.0, 15.0, 0.6);
        let theta = s.theta();
        let g = Grid { theta_points: 5, power_steps: 20, sizes: Some(vec![Sizes::new(2, 1, 1, 1)]), ..Grid::default() };
        let modes = enumerate_modes(&s, &g).unwrap().modes;
        let mut checked = 0;
        for mode in modes.iter().step_by(3) {
            let a = evaluate_mode(mode, &s).unwrap();
            let b = evaluate_mode(&mode.mirrored(theta).unwrap(), &s).unwrap();
            assert!((a.r1 - b.r2).abs() < 1e-10 && (a.r2 - b.r1).abs() < 1e-10, "{a:?} {b:?}");
            checked += 1;
        }
        assert!(checked > 10);
    }

    #[test]
    fn sweep_is_reproducible_and_filters() {
        let s = scn(10.0, 20.0, 0.8);
        let g = Grid {
            theta_points: 5,
            power_steps: 8,
            sizes: Some(vec![Sizes::new(1, 1, 1, 1), Sizes::new(0, 0, 1, 1), Sizes::new(1, 0, 0, 0)]),
            ..Grid::default()
        };
        let a = sweep(&s, &g).unwrap();
        let b = sweep(&s, &g).unwrap();
        assert_eq!(a.points, b.points);
        assert!(a.rejected.get(&Reject::CompositeOrdering).copied().unwrap_or(0) > 0);
        let e = enumerate_modes(&s, &g).unwrap();
        assert_eq!(e.modes.len(), a.points.len());
        assert_eq!(e.rejected, a.rejected);
        for p in &a.points {
            let s = p.mode.sizes;
            let cap = |u: u8| (p.mode.assignment.count(u) + s.private_bits()) as f64;
            assert!(p.rate.r1 <= cap(1) + 1e-12 && p.rate.r2 <= cap(2) + 1e-12);
        }
    }
}
