//! Fuzzy sets over bounded real universes.
//!
//! Membership functions are piecewise linear (triangular, trapezoidal, or a
//! crisp interval acting as a characteristic function). Operations that
//! combine sets work on a [`SampledFuzzySet`], a uniform discretization of the
//! universe.

use std::fmt;

use thiserror::Error;

/// Sample count used when a universe is built without an explicit resolution.
pub const DEFAULT_RESOLUTION: usize = 1001;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FuzzyError {
    #[error("invalid universe [{lo}, {hi}]: lower bound must be below upper bound")]
    EmptyUniverse { lo: f64, hi: f64 },
    #[error("universe resolution must be at least 2, got {0}")]
    Resolution(usize),
    #[error("breakpoints of {kind} membership function are not ordered: {points:?}")]
    Unordered { kind: &'static str, points: Vec<f64> },
    #[error("degree {0} is outside [0, 1]")]
    Degree(f64),
    #[error("expected {expected} samples, got {got}")]
    SampleCount { expected: usize, got: usize },
    #[error("fuzzy sets are defined over different universes")]
    UniverseMismatch,
    #[error("cannot aggregate an empty list of fuzzy sets")]
    NothingToAggregate,
    #[error("empty aggregate: no rule fired, the fuzzy set has no mass")]
    EmptyAggregate,
}

/// A closed real interval sampled at `resolution` evenly spaced points.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Universe {
    lo: f64,
    hi: f64,
    resolution: usize,
}

impl Universe {
    pub fn new(lo: f64, hi: f64, resolution: usize) -> Result<Self, FuzzyError> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(FuzzyError::EmptyUniverse { lo, hi });
        }
        if resolution < 2 {
            return Err(FuzzyError::Resolution(resolution));
        }
        Ok(Self { lo, hi, resolution })
    }

    pub fn with_default_resolution(lo: f64, hi: f64) -> Result<Self, FuzzyError> {
        Self::new(lo, hi, DEFAULT_RESOLUTION)
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    /// Distance between neighbouring sample points.
    pub fn step(&self) -> f64 {
        (self.hi - self.lo) / (self.resolution - 1) as f64
    }

    /// The `i`-th sample point. The last point is exactly `hi`.
    pub fn point(&self, i: usize) -> f64 {
        if i + 1 == self.resolution {
            self.hi
        } else {
            self.lo + i as f64 * self.step()
        }
    }

    pub fn points(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.resolution).map(move |i| self.point(i))
    }

    pub fn contains(&self, x: f64) -> bool {
        (self.lo..=self.hi).contains(&x)
    }

    pub fn clamp(&self, x: f64) -> f64 {
        x.clamp(self.lo, self.hi)
    }
}

/// Piecewise-linear membership function.
///
/// `Crisp(a, b)` is the characteristic function of the closed interval
/// `[a, b]`: degree 1 inside, 0 outside.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MembershipFunction {
    Triangular { a: f64, b: f64, c: f64 },
    Trapezoidal { a: f64, b: f64, c: f64, d: f64 },
    Crisp { a: f64, b: f64 },
}

fn check_ordered(kind: &'static str, points: &[f64]) -> Result<(), FuzzyError> {
    let finite = points.iter().all(|p| p.is_finite());
    if !finite || points.windows(2).any(|w| w[0] > w[1]) {
        return Err(FuzzyError::Unordered { kind, points: points.to_vec() });
    }
    Ok(())
}

impl MembershipFunction {
    pub fn triangular(a: f64, b: f64, c: f64) -> Result<Self, FuzzyError> {
        check_ordered("triangular", &[a, b, c])?;
        Ok(Self::Triangular { a, b, c })
    }

    pub fn trapezoidal(a: f64, b: f64, c: f64, d: f64) -> Result<Self, FuzzyError> {
        check_ordered("trapezoidal", &[a, b, c, d])?;
        Ok(Self::Trapezoidal { a, b, c, d })
    }

    pub fn crisp(a: f64, b: f64) -> Result<Self, FuzzyError> {
        check_ordered("crisp", &[a, b])?;
        Ok(Self::Crisp { a, b })
    }

    /// Degree of membership of `x`, always in `[0, 1]`.
    pub fn eval(&self, x: f64) -> f64 {
        let degree = match *self {
            Self::Triangular { a, b, c } => {
                if x < a || x > c {
                    0.0
                } else if x < b {
                    (x - a) / (b - a)
                } else if x == b {
                    1.0
                } else {
                    (c - x) / (c - b)
                }
            }
            Self::Trapezoidal { a, b, c, d } => {
                if x < a || x > d {
                    0.0
                } else if x < b {
                    (x - a) / (b - a)
                } else if x <= c {
                    1.0
                } else {
                    (d - x) / (d - c)
                }
            }
            Self::Crisp { a, b } => {
                if (a..=b).contains(&x) {
                    1.0
                } else {
                    0.0
                }
            }
        };
        degree.clamp(0.0, 1.0)
    }

    pub fn breakpoints(&self) -> Vec<f64> {
        match *self {
            Self::Triangular { a, b, c } => vec![a, b, c],
            Self::Trapezoidal { a, b, c, d } => vec![a, b, c, d],
            Self::Crisp { a, b } => vec![a, b],
        }
    }

    /// Closed interval outside which the degree is zero.
    pub fn support(&self) -> (f64, f64) {
        match *self {
            Self::Triangular { a, c, .. } => (a, c),
            Self::Trapezoidal { a, d, .. } => (a, d),
            Self::Crisp { a, b } => (a, b),
        }
    }

    /// Interval on which the degree is exactly 1.
    pub fn core(&self) -> (f64, f64) {
        match *self {
            Self::Triangular { b, .. } => (b, b),
            Self::Trapezoidal { b, c, .. } => (b, c),
            Self::Crisp { a, b } => (a, b),
        }
    }

    /// Midpoint of the core: a point of full membership.
    pub fn apex(&self) -> f64 {
        let (l, r) = self.core();
        0.5 * (l + r)
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Self::Triangular { .. } => "tri",
            Self::Trapezoidal { .. } => "trap",
            Self::Crisp { .. } => "crisp",
        }
    }

    pub fn sample(&self, universe: &Universe) -> SampledFuzzySet {
        SampledFuzzySet {
            universe: *universe,
            degrees: universe.points().map(|x| self.eval(x)).collect(),
        }
    }
}

impl fmt::Display for MembershipFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.kind())?;
        for p in self.breakpoints() {
            write!(f, " {p}")?;
        }
        Ok(())
    }
}

fn check_degree(d: f64) -> Result<f64, FuzzyError> {
    if (0.0..=1.0).contains(&d) {
        Ok(d)
    } else {
        Err(FuzzyError::Degree(d))
    }
}

/// Minimum t-norm (fuzzy AND).
pub fn t_norm_min(a: f64, b: f64) -> Result<f64, FuzzyError> {
    Ok(check_degree(a)?.min(check_degree(b)?))
}

/// Maximum t-conorm (fuzzy OR).
pub fn s_norm_max(a: f64, b: f64) -> Result<f64, FuzzyError> {
    Ok(check_degree(a)?.max(check_degree(b)?))
}

/// A fuzzy set given by its degrees at the sample points of a universe.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledFuzzySet {
    universe: Universe,
    degrees: Vec<f64>,
}

impl SampledFuzzySet {
    pub fn new(universe: Universe, degrees: Vec<f64>) -> Result<Self, FuzzyError> {
        if degrees.len() != universe.resolution() {
            return Err(FuzzyError::SampleCount {
                expected: universe.resolution(),
                got: degrees.len(),
            });
        }
        for &d in &degrees {
            check_degree(d)?;
        }
        Ok(Self { universe, degrees })
    }

    pub fn empty(universe: Universe) -> Self {
        Self { universe, degrees: vec![0.0; universe.resolution()] }
    }

    pub fn universe(&self) -> &Universe {
        &self.universe
    }

    pub fn degrees(&self) -> &[f64] {
        &self.degrees
    }

    pub fn is_empty(&self) -> bool {
        self.degrees.iter().all(|&d| d == 0.0)
    }

    /// Pointwise `min(degree, alpha)`.
    pub fn clipped(&self, alpha: f64) -> Result<Self, FuzzyError> {
        let alpha = check_degree(alpha)?;
        Ok(Self {
            universe: self.universe,
            degrees: self.degrees.iter().map(|&d| d.min(alpha).clamp(0.0, 1.0)).collect(),
        })
    }

    /// Pointwise maximum with `other`, in place.
    pub fn union_with(&mut self, other: &SampledFuzzySet) -> Result<(), FuzzyError> {
        if self.universe != other.universe {
            return Err(FuzzyError::UniverseMismatch);
        }
        for (d, &o) in self.degrees.iter_mut().zip(&other.degrees) {
            *d = d.max(o).clamp(0.0, 1.0);
        }
        Ok(())
    }

    /// Sample point holding the largest degree (first one on ties).
    pub fn argmax(&self) -> f64 {
        let mut best = 0;
        for (i, &d) in self.degrees.iter().enumerate() {
            if d > self.degrees[best] {
                best = i;
            }
        }
        self.universe.point(best)
    }
}

/// Mamdani implication: the membership function cut off at `alpha`.
pub fn clip(
    mf: &MembershipFunction,
    alpha: f64,
    universe: &Universe,
) -> Result<SampledFuzzySet, FuzzyError> {
    mf.sample(universe).clipped(alpha)
}

pub fn aggregate_max(sets: &[SampledFuzzySet]) -> Result<SampledFuzzySet, FuzzyError> {
    let (first, rest) = sets.split_first().ok_or(FuzzyError::NothingToAggregate)?;
    let mut acc = first.clone();
    for s in rest {
        acc.union_with(s)?;
    }
    Ok(acc)
}

/// Center of gravity of the set.
///
/// The samples are joined by straight lines and the first moment and area of
/// that polyline are integrated exactly segment by segment. For interior
/// samples this coincides with `Σ x·μ / Σ μ`; the two end samples carry half
/// weight, as they bound only one segment.
pub fn defuzzify_centroid(set: &SampledFuzzySet) -> Result<f64, FuzzyError> {
    let u = set.universe();
    let h = u.step();
    let mut area = 0.0;
    let mut moment = 0.0;
    for (i, w) in set.degrees().windows(2).enumerate() {
        let (m0, m1) = (w[0], w[1]);
        if m0 == 0.0 && m1 == 0.0 {
            continue;
        }
        let x0 = u.point(i);
        let x1 = u.point(i + 1);
        area += 0.5 * h * (m0 + m1);
        moment += h / 6.0 * (m0 * (2.0 * x0 + x1) + m1 * (x0 + 2.0 * x1));
    }
    if area <= 0.0 {
        return Err(FuzzyError::EmptyAggregate);
    }
    Ok((moment / area).clamp(u.lo(), u.hi()))
}

/// A named membership function belonging to a linguistic variable.
#[derive(Debug, Clone, PartialEq)]
pub struct Term {
    pub name: String,
    pub mf: MembershipFunction,
}

/// A quantity described by linguistic terms over a universe.
#[derive(Debug, Clone, PartialEq)]
pub struct LinguisticVariable {
    pub name: String,
    pub universe: Universe,
    pub terms: Vec<Term>,
}

impl LinguisticVariable {
    pub fn term(&self, name: &str) -> Option<&Term> {
        self.terms.iter().find(|t| t.name == name)
    }

    pub fn term_index(&self, name: &str) -> Option<usize> {
        self.terms.iter().position(|t| t.name == name)
    }

    /// Term with the highest degree at `x` (first declared on ties).
    pub fn dominant_term(&self, x: f64) -> Option<&Term> {
        let mut best: Option<(&Term, f64)> = None;
        for t in &self.terms {
            let d = t.mf.eval(x);
            if best.map_or(true, |(_, bd)| d > bd) {
                best = Some((t, d));
            }
        }
        best.map(|(t, _)| t)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn tri(a: f64, b: f64, c: f64) -> MembershipFunction {
        MembershipFunction::triangular(a, b, c).unwrap()
    }

    fn u100() -> Universe {
        Universe::with_default_resolution(0.0, 100.0).unwrap()
    }

    #[test]
    fn universe_invariants() {
        assert!(Universe::new(10.0, 0.0, 11).is_err());
        assert!(Universe::new(0.0, 0.0, 11).is_err());
        assert!(Universe::new(0.0, 1.0, 1).is_err());
        let u = Universe::new(0.0, 1.0, 5).unwrap();
        assert_eq!(u.points().collect::<Vec<_>>(), vec![0.0, 0.25, 0.5, 0.75, 1.0]);
    }

    #[test]
    fn shape_ordering_is_checked() {
        assert!(MembershipFunction::triangular(0.0, 6.0, 5.0).is_err());
        assert!(MembershipFunction::trapezoidal(0.0, 1.0, 0.5, 2.0).is_err());
        assert!(MembershipFunction::crisp(2.0, 1.0).is_err());
        assert!(MembershipFunction::triangular(0.0, f64::NAN, 5.0).is_err());
        assert!(MembershipFunction::triangular(0.0, 0.0, 5.0).is_ok());
    }

    #[test]
    fn eval_examples() {
        let t = tri(0.0, 5.0, 10.0);
        assert_eq!(t.eval(5.0), 1.0);
        assert_eq!(t.eval(2.5), 0.5);
        assert_eq!(t.eval(-1.0), 0.0);
        assert_eq!(t.eval(11.0), 0.0);
        let c = MembershipFunction::crisp(3.0, 7.0).unwrap();
        assert_eq!(c.eval(2.9), 0.0);
        assert_eq!(c.eval(3.0), 1.0);
        assert_eq!(c.eval(7.0), 1.0);
        assert_eq!(c.eval(7.01), 0.0);
    }

    #[test]
    fn shoulders_reach_full_degree_at_the_edge() {
        assert_eq!(tri(0.0, 0.0, 50.0).eval(0.0), 1.0);
        assert_eq!(tri(50.0, 100.0, 100.0).eval(100.0), 1.0);
        let trap = MembershipFunction::trapezoidal(50.0, 80.0, 100.0, 100.0).unwrap();
        assert_eq!(trap.eval(100.0), 1.0);
        assert_eq!(trap.eval(65.0), 0.5);
    }

    #[test]
    fn norms() {
        assert_eq!(t_norm_min(0.3, 0.7).unwrap(), 0.3);
        assert_eq!(s_norm_max(0.3, 0.7).unwrap(), 0.7);
        assert!(t_norm_min(1.2, 0.5).is_err());
        assert!(s_norm_max(0.5, -0.1).is_err());
        assert!(t_norm_min(f64::NAN, 0.5).is_err());
    }

    #[test]
    fn clip_examples() {
        let u = u100();
        let t = tri(0.0, 50.0, 100.0);
        assert!(clip(&t, 0.0, &u).unwrap().is_empty());
        assert_eq!(clip(&t, 1.0, &u).unwrap(), t.sample(&u));
        let half = clip(&t, 0.5, &u).unwrap();
        for (x, &d) in u.points().zip(half.degrees()) {
            if (25.0..=75.0).contains(&x) {
                assert!((d - 0.5).abs() < 1e-12, "x={x} d={d}");
            } else {
                assert!(d < 0.5 + 1e-12);
            }
        }
        assert!(clip(&t, 1.5, &u).is_err());
    }

    #[test]
    fn aggregate_examples() {
        let u = u100();
        let s = tri(10.0, 20.0, 30.0).sample(&u);
        assert_eq!(aggregate_max(&[s.clone()]).unwrap(), s);
        assert_eq!(aggregate_max(&[s.clone(), SampledFuzzySet::empty(u)]).unwrap(), s);
        assert_eq!(aggregate_max(&[]), Err(FuzzyError::NothingToAggregate));
        let other = Universe::new(0.0, 100.0, 11).unwrap();
        assert_eq!(
            aggregate_max(&[s, SampledFuzzySet::empty(other)]),
            Err(FuzzyError::UniverseMismatch)
        );
    }

    #[test]
    fn aggregate_of_disjoint_clipped_triangles_is_pointwise_max() {
        let u = u100();
        let a = tri(0.0, 15.0, 30.0);
        let b = tri(60.0, 75.0, 90.0);
        let agg = aggregate_max(&[clip(&a, 0.4, &u).unwrap(), clip(&b, 0.8, &u).unwrap()]).unwrap();
        for (x, &d) in u.points().zip(agg.degrees()) {
            let expected = a.eval(x).min(0.4).max(b.eval(x).min(0.8));
            assert_eq!(d, expected);
        }
        // two separated modes
        assert!(agg.degrees()[150] > 0.0 && agg.degrees()[750] > 0.0 && agg.degrees()[450] == 0.0);
    }

    #[test]
    fn centroid_examples() {
        for res in [11, 101, 1001, 4096] {
            let u = Universe::new(0.0, 10.0, res).unwrap();
            let c = defuzzify_centroid(&tri(0.0, 5.0, 10.0).sample(&u)).unwrap();
            assert!((c - 5.0).abs() < 1e-9, "res={res} c={c}");
        }
        let u = Universe::new(0.0, 10.0, 1001).unwrap();
        let c = defuzzify_centroid(&MembershipFunction::crisp(4.0, 6.0).unwrap().sample(&u)).unwrap();
        assert!((c - 5.0).abs() < 1e-9);
        assert_eq!(
            defuzzify_centroid(&SampledFuzzySet::empty(u)),
            Err(FuzzyError::EmptyAggregate)
        );
    }

    #[test]
    fn centroid_of_shoulder_is_exact() {
        // Triangle (0,0,50): centroid 50/3. Trapezoid (50,80,100,100): 2850/35.
        let u = u100();
        let c = defuzzify_centroid(&tri(0.0, 0.0, 50.0).sample(&u)).unwrap();
        assert!((c - 50.0 / 3.0).abs() < 1e-9);
        let trap = MembershipFunction::trapezoidal(50.0, 80.0, 100.0, 100.0).unwrap();
        let c = defuzzify_centroid(&trap.sample(&u)).unwrap();
        assert!((c - 2850.0 / 35.0).abs() < 1e-9);
    }

    /// Uniform-weight Riemann quotient on a grid ten times finer, evaluating
    /// the analytic clipped set directly.
    fn fine_riemann_centroid(f: impl Fn(f64) -> f64, lo: f64, hi: f64, n: usize) -> f64 {
        let h = (hi - lo) / (n - 1) as f64;
        let (mut num, mut den) = (0.0, 0.0);
        for i in 0..n {
            let x = lo + i as f64 * h;
            let m = f(x);
            num += x * m;
            den += m;
        }
        num / den
    }

    #[test]
    fn clipped_asymmetric_centroid_matches_fine_grid() {
        let u = u100();
        let t = tri(10.0, 30.0, 90.0);
        let set = clip(&t, 0.6, &u).unwrap();
        let got = defuzzify_centroid(&set).unwrap();
        let oracle = fine_riemann_centroid(|x| t.eval(x).min(0.6), 0.0, 100.0, 10_001);
        assert!(((got - oracle) / oracle).abs() < 1e-6, "{got} vs {oracle}");
    }

    #[test]
    fn dominant_term() {
        let v = LinguisticVariable {
            name: "v".into(),
            universe: u100(),
            terms: vec![
                Term { name: "L".into(), mf: tri(0.0, 0.0, 50.0) },
                Term { name: "M".into(), mf: tri(0.0, 50.0, 100.0) },
                Term { name: "H".into(), mf: tri(50.0, 100.0, 100.0) },
            ],
        };
        assert_eq!(v.dominant_term(10.0).unwrap().name, "L");
        assert_eq!(v.dominant_term(60.0).unwrap().name, "M");
        assert_eq!(v.dominant_term(95.0).unwrap().name, "H");
    }

    fn shape() -> impl Strategy<Value = MembershipFunction> {
        // strictly increasing breakpoints so every flank has finite slope
        (0.0..50.0f64, 0.5..20.0f64, 0.0..20.0f64, 0.5..20.0f64, any::<bool>()).prop_map(
            |(a, w1, p, w2, trap)| {
                if trap {
                    MembershipFunction::trapezoidal(a, a + w1, a + w1 + p, a + w1 + p + w2).unwrap()
                } else {
                    MembershipFunction::triangular(a, a + w1, a + w1 + w2).unwrap()
                }
            },
        )
    }

    fn max_slope(mf: &MembershipFunction) -> f64 {
        let bp = mf.breakpoints();
        let rise = bp[1] - bp[0];
        let fall = bp[bp.len() - 1] - bp[bp.len() - 2];
        (1.0 / rise).max(1.0 / fall)
    }

    proptest! {
        #[test]
        fn eval_in_unit_interval(mf in shape(), x in -10.0..110.0f64) {
            let d = mf.eval(x);
            prop_assert!((0.0..=1.0).contains(&d));
        }

        #[test]
        fn eval_is_lipschitz(mf in shape(), x in -10.0..110.0f64, eps in 1e-6..1e-2f64) {
            let l = max_slope(&mf);
            prop_assert!((mf.eval(x) - mf.eval(x + eps)).abs() <= l * eps * (1.0 + 1e-9) + 1e-12);
        }

        #[test]
        fn clip_is_monotone_in_alpha(mf in shape(), a1 in 0.0..=1.0f64, a2 in 0.0..=1.0f64) {
            let u = Universe::new(0.0, 100.0, 201).unwrap();
            let (lo, hi) = if a1 <= a2 { (a1, a2) } else { (a2, a1) };
            let s1 = clip(&mf, lo, &u).unwrap();
            let s2 = clip(&mf, hi, &u).unwrap();
            for (p, q) in s1.degrees().iter().zip(s2.degrees()) {
                prop_assert!(p <= q);
            }
        }

        #[test]
        fn centroid_inside_support_hull(mf in shape(), alpha in 0.05..=1.0f64) {
            let u = Universe::new(0.0, 100.0, 501).unwrap();
            let set = clip(&mf, alpha, &u).unwrap();
            prop_assume!(!set.is_empty());
            let c = defuzzify_centroid(&set).unwrap();
            let nz: Vec<f64> = u.points().zip(set.degrees()).filter(|(_, &d)| d > 0.0).map(|(x, _)| x).collect();
            let h = u.step();
            prop_assert!(c >= nz[0] - h && c <= nz[nz.len() - 1] + h);
            prop_assert!(u.contains(c));
        }

        #[test]
        fn centroid_is_scale_invariant(mf in shape(), scale in 0.01..1.0f64) {
            let u = Universe::new(0.0, 100.0, 501).unwrap();
            let set = mf.sample(&u);
            prop_assume!(!set.is_empty());
            let scaled = SampledFuzzySet::new(u, set.degrees().iter().map(|d| d * scale).collect()).unwrap();
            let a = defuzzify_centroid(&set).unwrap();
            let b = defuzzify_centroid(&scaled).unwrap();
            prop_assert!((a - b).abs() < 1e-9 * a.abs().max(1.0));
        }

        #[test]
        fn centroid_converges_under_grid_refinement(mf in shape(), alpha in 0.1..=1.0f64) {
            // For a polyline with kinks off the grid, the error per kink is
            // bounded by step² · slope jump; measured against C / resolution
            // with C = width · (sum of slope jumps).
            let c = 100.0 * 4.0 * max_slope(&mf);
            let mut prev = None;
            for res in [251usize, 501, 1001, 2001] {
                let u = Universe::new(0.0, 100.0, res).unwrap();
                let v = defuzzify_centroid(&clip(&mf, alpha, &u).unwrap()).unwrap();
                if let Some(p) = prev {
                    let diff: f64 = v - p;
                    prop_assert!(diff.abs() < c / res as f64, "res={} diff={}", res, diff);
                }
                prev = Some(v);
            }
        }
    }
}
