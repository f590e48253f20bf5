//! Critical values of a stratification at a point, the critical value
//! function over prescribed distance vectors, and its exact
//! piecewise-monomial fit.
//!
//! A radius `γ` is critical at `c` when some witness `x` with
//! `v(x - c) = γ` makes the stratification non-trivial in direction
//! `dir(x - c)` on `B(x, < γ)`.  Witness search is a deliberate
//! under-approximation (structured placements plus seeded random ones);
//! inclusion is therefore witnessed, exclusion is sampling evidence.

use std::collections::BTreeSet;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero as NumZero};
use rand::Rng;

use crate::config::Config;
use crate::error::{Error, Result};
use crate::gamma::{Exp, GammaValue};
use crate::puiseux::{Coeff, PSeries};
use crate::vla::{dir, KVector};

use super::{dist_to_stratum, is_dir_trivial_on_ball, Ball, Family, StratSpec, Stratum, TrivialVerdict};

// ---------------------------------------------------------------------------
// candidate radii

/// The search grid of candidate radii: `⟨p/q⟩` for `q` dividing
/// `lcm(a, b, 6)` and `|p/q| <= 12`, together with powers and products of
/// the finite input distances with the same denominators.
pub fn candidate_radii(spec: &StratSpec, lambda: &[GammaValue]) -> Vec<GammaValue> {
    let q_lcm: i64 = match spec.family {
        Family::Cusp { a, b } => lcm(lcm(a as i64, b as i64), 6),
        _ => 6,
    };
    let mut exps: BTreeSet<Exp> = BTreeSet::new();
    for q in 1..=q_lcm {
        if q_lcm % q != 0 {
            continue;
        }
        for p in -12i64..=12 {
            exps.insert(BigRational::new(BigInt::from(p), BigInt::from(q)));
        }
    }
    let finite: Vec<Exp> = lambda
        .iter()
        .filter_map(|l| l.exponent().cloned())
        .collect();
    for le in &finite {
        for q in [1i64, 2, 3, 6] {
            if q_lcm % q != 0 {
                continue;
            }
            for p in -(2 * q)..=(2 * q) {
                if p == 0 {
                    continue;
                }
                exps.insert(le * BigRational::new(BigInt::from(p), BigInt::from(q)));
            }
        }
    }
    for (i, a) in finite.iter().enumerate() {
        for b in finite.iter().skip(i + 1) {
            exps.insert(a + b);
            exps.insert(a - b);
            exps.insert(b - a);
        }
    }
    exps.into_iter().map(GammaValue::Finite).collect()
}

fn lcm(a: i64, b: i64) -> i64 {
    a / gcd_i(a, b) * b
}

fn gcd_i(a: i64, b: i64) -> i64 {
    if b == 0 { a.abs() } else { gcd_i(b, a % b) }
}

// ---------------------------------------------------------------------------
// critical values at a point

/// Per-candidate outcome of the witness search.
#[derive(Debug, Clone)]
pub struct CritNote {
    pub candidate: GammaValue,
    pub included: bool,
    /// Winning witness, if any.
    pub witness: Option<KVector>,
    /// Witnesses tried.
    pub tried: usize,
    /// Witnesses whose triviality check was inconclusive.
    pub inconclusive: usize,
}

#[derive(Debug, Clone)]
pub struct CritResult {
    pub values: BTreeSet<GammaValue>,
    pub notes: Vec<CritNote>,
}

/// Critical values of the stratification at `c`, within the candidate set.
pub fn crit_values_at_point(
    spec: &StratSpec,
    c: &KVector,
    candidates: &[GammaValue],
    cfg: &Config,
) -> Result<CritResult> {
    if candidates.is_empty() {
        return Err(Error::Input("candidate list must be nonempty".into()));
    }
    let mut values = BTreeSet::new();
    let mut notes = Vec::new();
    for cand in candidates {
        let Some(_) = cand.exponent() else {
            notes.push(CritNote {
                candidate: cand.clone(),
                included: false,
                witness: None,
                tried: 0,
                inconclusive: 0,
            });
            continue;
        };
        let witnesses = witness_points(spec, c, cand, cfg)?;
        let mut included = false;
        let mut winning = None;
        let mut inconclusive = 0usize;
        let tried = witnesses.len();
        for x in witnesses {
            let diff = x.sub(c)?;
            if diff.is_zero_at_prec() {
                continue;
            }
            let line = dir(&diff)?;
            let ball = Ball::open(x.clone(), cand.clone())?;
            match is_dir_trivial_on_ball(spec, &ball, &line, cfg.n_fibers, cfg)? {
                TrivialVerdict::NonTrivial { .. } => {
                    included = true;
                    winning = Some(x);
                    break;
                }
                TrivialVerdict::Inconclusive { .. } => inconclusive += 1,
                TrivialVerdict::TrivialOnSample { .. } => {}
            }
        }
        if included {
            values.insert(cand.clone());
        }
        notes.push(CritNote {
            candidate: cand.clone(),
            included,
            witness: winning,
            tried,
            inconclusive,
        });
    }
    Ok(CritResult { values, notes })
}

/// Structured witness placements at exact distance `γ` from `c`: stratum
/// points realizing the distance, nearby branch points, coordinate-direction
/// offsets, and seeded random directions.
fn witness_points(
    spec: &StratSpec,
    c: &KVector,
    gamma: &GammaValue,
    cfg: &Config,
) -> Result<Vec<KVector>> {
    let ge = gamma.exponent().expect("finite candidate").clone();
    let mut out: Vec<KVector> = Vec::new();
    let mut seen: Vec<KVector> = Vec::new();
    let push = |p: KVector, out: &mut Vec<KVector>, seen: &mut Vec<KVector>| -> Result<()> {
        let d = p.sub(c)?;
        if d.is_zero_at_prec() {
            return Ok(());
        }
        if d.val()? != *gamma {
            return Ok(());
        }
        for q in seen.iter() {
            if p.sub(q)?.is_zero_at_prec() {
                return Ok(());
            }
        }
        seen.push(p.clone());
        out.push(p);
        Ok(())
    };

    // stratum points at the candidate distance: point strata and same-fiber
    // solutions of the variety strata
    for stratum in &spec.strata {
        if let Stratum::Points(pts) = stratum {
            for p in pts {
                push(p.clone(), &mut out, &mut seen)?;
            }
        }
    }
    for pattern in super::frozen_patterns(spec) {
        let values: Vec<PSeries> = pattern.iter().map(|&i| c.coords[i].clone()).collect();
        if let Ok(points) = super::solve_variety_fiber(spec, &pattern, &values, cfg.depth) {
            for p in points {
                push(p, &mut out, &mut seen)?;
            }
        }
        // shifted fibers: freeze at c_i + ζ t^γ to land on nearby branches
        for (ci, phase) in [(0usize, 1.0f64), (0, -1.0), (0, 0.5)] {
            if ci >= pattern.len() {
                continue;
            }
            let mut values: Vec<PSeries> =
                pattern.iter().map(|&i| c.coords[i].clone()).collect();
            let offset = PSeries::monomial(
                ge.clone(),
                Complex64::from_polar(1.0, phase * std::f64::consts::PI / 3.0),
            );
            values[ci] = values[ci].add(&offset)?;
            if let Ok(points) = super::solve_variety_fiber(spec, &pattern, &values, cfg.depth) {
                for p in points {
                    push(p, &mut out, &mut seen)?;
                }
            }
        }
        if out.len() > 10 {
            break;
        }
    }
    // coordinate directions
    for i in 0..spec.n {
        for ph in [0.0, std::f64::consts::PI] {
            let mut p = c.clone();
            p.coords[i] = p.coords[i].add(&PSeries::monomial(
                ge.clone(),
                Complex64::from_polar(1.0, ph),
            ))?;
            push(p, &mut out, &mut seen)?;
        }
    }
    // seeded random directions
    let mut rng = cfg.rng("crit-witness");
    for _ in 0..2 {
        let mut p = c.clone();
        for i in 0..spec.n {
            let coeff = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            if coeff.norm() < 0.2 {
                continue;
            }
            p.coords[i] = p.coords[i].add(&PSeries::monomial(ge.clone(), coeff))?;
        }
        push(p, &mut out, &mut seen)?;
    }
    out.truncate(12);
    Ok(out)
}

// ---------------------------------------------------------------------------
// the critical value function

/// Result of evaluating the critical value function at one distance vector.
#[derive(Debug, Clone)]
pub struct CritFnSample {
    pub lambda: Vec<GammaValue>,
    pub values: BTreeSet<GammaValue>,
    /// No point achieving the prescribed distances was found.
    pub unrealized: bool,
    /// Points used.
    pub placements: Vec<KVector>,
}

/// Evaluates `f(λ)`: places points at the prescribed distances from the
/// partial skeletons (verified), and unions their critical values over the
/// candidate grid.
pub fn crit_function_eval(
    spec: &StratSpec,
    lambda: &[GammaValue],
    cfg: &Config,
) -> Result<CritFnSample> {
    if lambda.len() != spec.n {
        return Err(Error::Domain(format!(
            "distance vector needs {} components",
            spec.n
        )));
    }
    for w in lambda.windows(2) {
        if w[0] < w[1] {
            return Err(Error::Domain(
                "distance vector must be weakly decreasing".into(),
            ));
        }
    }
    let placements = place_points(spec, lambda, cfg)?;
    if placements.is_empty() {
        return Ok(CritFnSample {
            lambda: lambda.to_vec(),
            values: BTreeSet::new(),
            unrealized: true,
            placements,
        });
    }
    let candidates = candidate_radii(spec, lambda);
    let mut values = BTreeSet::new();
    for c in &placements {
        let r = crit_values_at_point(spec, c, &candidates, cfg)?;
        values.extend(r.values);
    }
    Ok(CritFnSample {
        lambda: lambda.to_vec(),
        values,
        unrealized: false,
        placements,
    })
}

/// Verified placements `c` with `v(c - S_{<=i}) = λ_i` for all `i`.
fn place_points(spec: &StratSpec, lambda: &[GammaValue], cfg: &Config) -> Result<Vec<KVector>> {
    let mut rng = cfg.rng("crit-place");
    let mut out: Vec<KVector> = Vec::new();
    let consider = |cand: KVector, out: &mut Vec<KVector>| -> Result<bool> {
        for (i, li) in lambda.iter().enumerate() {
            let d = dist_to_stratum(spec, i, &cand, cfg)?;
            if d.value != *li {
                return Ok(false);
            }
        }
        for p in out.iter() {
            if p.sub(&cand)?.is_zero_at_prec() {
                return Ok(false);
            }
        }
        out.push(cand);
        Ok(true)
    };

    // structured placements
    for cand in structured_placements(spec, lambda, cfg, &mut rng)? {
        if out.len() >= cfg.n_points {
            break;
        }
        let _ = consider(cand, &mut out)?;
    }
    // randomized fallback
    if out.is_empty() {
        for _ in 0..2000 {
            if out.len() >= cfg.n_points {
                break;
            }
            let Some(cand) = random_placement(spec, lambda, cfg, &mut rng)? else {
                continue;
            };
            let _ = consider(cand, &mut out)?;
        }
    }
    Ok(out)
}

fn structured_placements(
    spec: &StratSpec,
    lambda: &[GammaValue],
    cfg: &Config,
    rng: &mut impl Rng,
) -> Result<Vec<KVector>> {
    let mut out = Vec::new();
    let coeffs: Vec<Coeff> = vec![
        Complex64::new(1.0, 0.0),
        Complex64::new(2.0, 0.0),
        Complex64::new(1.0, 0.7),
        Complex64::new(rng.gen_range(0.5..1.5), rng.gen_range(-0.5..0.5)),
    ];
    match spec.family {
        Family::Cusp { a, b } => {
            let (l0, l1) = (&lambda[0], &lambda[1]);
            match (l0, l1) {
                (GammaValue::Zero, GammaValue::Zero) => out.push(KVector::zero(2)),
                (GammaValue::Finite(e0), GammaValue::Zero) => {
                    // on the curve at v(c) = λ0 via the parametrization
                    for cf in &coeffs {
                        let eu = if e0.is_positive() || e0.is_zero() {
                            e0 / BigRational::from_integer(BigInt::from(b))
                        } else {
                            e0 / BigRational::from_integer(BigInt::from(a))
                        };
                        let u = PSeries::monomial(eu, *cf);
                        out.push(KVector::new(vec![u.pow_int(b)?, u.pow_int(a)?]));
                    }
                }
                (GammaValue::Finite(e0), GammaValue::Finite(e1)) => {
                    // branch point at λ0 plus an offset of size λ1
                    // perpendicular to the branch's graph coordinate
                    for cf in &coeffs {
                        let eu = if e0.is_positive() || e0.is_zero() {
                            e0 / BigRational::from_integer(BigInt::from(b))
                        } else {
                            e0 / BigRational::from_integer(BigInt::from(a))
                        };
                        let u = PSeries::monomial(eu, *cf);
                        let x = u.pow_int(b)?;
                        let y = u.pow_int(a)?;
                        let off = PSeries::monomial(e1.clone(), Complex64::new(1.0, 0.3));
                        if e0.is_positive() {
                            out.push(KVector::new(vec![x.clone(), y.add(&off)?]));
                        } else {
                            out.push(KVector::new(vec![x.add(&off)?, y.clone()]));
                        }
                        // the other perpendicular, for boundary cases
                        let off2 = PSeries::monomial(e1.clone(), Complex64::new(0.8, -0.2));
                        if e0.is_positive() {
                            out.push(KVector::new(vec![x.add(&off2)?, y]));
                        } else {
                            out.push(KVector::new(vec![x, y.add(&off2)?]));
                        }
                    }
                }
                _ => {}
            }
        }
        Family::Trumpet => {
            // S_1 is empty, so realizable vectors have λ1 = λ0
            let (l0, l2) = (&lambda[0], &lambda[2]);
            if lambda[1] != lambda[0] {
                return Ok(out);
            }
            match (l0, l2) {
                (GammaValue::Zero, GammaValue::Zero) => out.push(KVector::zero(3)),
                (GammaValue::Finite(e0), GammaValue::Zero) => {
                    for cf in &coeffs {
                        let ex = e0 / BigRational::from_integer(BigInt::from(2));
                        let x = PSeries::monomial(ex, *cf);
                        let z = x.pow_int(3)?.nth_root(2, 0, cfg.depth)?;
                        out.push(KVector::new(vec![x, PSeries::zero(), z]));
                    }
                }
                (GammaValue::Finite(e0), GammaValue::Finite(e2)) => {
                    for cf in &coeffs {
                        let ex = e0 / BigRational::from_integer(BigInt::from(2));
                        let x = PSeries::monomial(ex, *cf);
                        let z = x.pow_int(3)?.nth_root(2, 0, cfg.depth)?;
                        let off = PSeries::monomial(e2.clone(), Complex64::new(1.0, 0.4));
                        out.push(KVector::new(vec![x.add(&off)?, PSeries::zero(), z]));
                    }
                }
                _ => {}
            }
        }
        Family::Parabola => {
            // S_0 empty: λ0 = Inf rows only; distance to the curve is λ1
            if lambda[0] != GammaValue::Inf {
                return Ok(out);
            }
            match &lambda[1] {
                GammaValue::Zero => {
                    for cf in &coeffs {
                        let u = PSeries::monomial(Exp::one(), *cf);
                        let u2 = u.mul(&u)?;
                        out.push(KVector::new(vec![u, u2]));
                    }
                }
                GammaValue::Finite(e1) => {
                    for cf in &coeffs {
                        let u = PSeries::monomial(Exp::one(), *cf);
                        let u2 = u.mul(&u)?;
                        let off = PSeries::monomial(e1.clone(), Complex64::new(1.0, 0.0));
                        out.push(KVector::new(vec![u, u2.add(&off)?]));
                    }
                }
                GammaValue::Inf => {}
            }
        }
        Family::Custom => {}
    }
    Ok(out)
}

fn random_placement(
    spec: &StratSpec,
    lambda: &[GammaValue],
    cfg: &Config,
    rng: &mut impl Rng,
) -> Result<Option<KVector>> {
    // random point of the variety stratum plus random offsets at the
    // prescribed scales
    let exps: Vec<Exp> = lambda
        .iter()
        .filter_map(|l| l.exponent().cloned())
        .collect();
    if exps.is_empty() {
        return Ok(None);
    }
    let base = &exps[0];
    let mut point = match spec.family {
        Family::Cusp { a, b } => {
            let den = if base.is_positive() { b } else { a };
            let eu = base / BigRational::from_integer(BigInt::from(den));
            let u = PSeries::monomial(
                eu,
                Complex64::new(rng.gen_range(0.3..2.0), rng.gen_range(-1.0..1.0)),
            );
            KVector::new(vec![u.pow_int(b)?, u.pow_int(a)?])
        }
        Family::Parabola => {
            let u = PSeries::monomial(
                base.clone(),
                Complex64::new(rng.gen_range(0.3..2.0), 0.0),
            );
            let u2 = u.mul(&u)?;
            KVector::new(vec![u, u2])
        }
        Family::Trumpet => {
            let ex = base / BigRational::from_integer(BigInt::from(2));
            let x = PSeries::monomial(ex, Complex64::new(rng.gen_range(0.3..2.0), 0.0));
            let z = x.pow_int(3)?.nth_root(2, rng.gen_range(0..2), cfg.depth)?;
            KVector::new(vec![x, PSeries::zero(), z])
        }
        Family::Custom => return Ok(None),
    };
    if let Some(last) = exps.last() {
        if exps.len() > 1 {
            let i = rng.gen_range(0..spec.n);
            let jitter = BigRational::new(BigInt::from(rng.gen_range(0i64..=4)), BigInt::from(4));
            let e = last + jitter * BigRational::new(BigInt::from(1), BigInt::from(1));
            point.coords[i] = point.coords[i].add(&PSeries::monomial(
                e,
                Complex64::new(rng.gen_range(-1.5..1.5), rng.gen_range(-1.5..1.5)),
            ))?;
        }
    }
    Ok(Some(point))
}

// ---------------------------------------------------------------------------
// monomial fit

/// Kind of a distance-vector coordinate over a region.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum LambdaPattern {
    Zero,
    Finite,
    Inf,
}

/// `λ ↦ ⟨mu⟩ · Π λ_i^{r_i}` over the finite coordinates.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MonomialFn {
    /// Exponent of the constant factor.
    pub mu: Exp,
    /// Powers per coordinate (only finite coordinates participate).
    pub exps: Vec<Exp>,
}

impl MonomialFn {
    pub fn eval(&self, lambda: &[GammaValue]) -> Option<GammaValue> {
        let mut e = self.mu.clone();
        for (r, l) in self.exps.iter().zip(lambda) {
            if r.is_zero() {
                continue;
            }
            match l.exponent() {
                Some(le) => e += le * r,
                None => return None,
            }
        }
        Some(GammaValue::Finite(e))
    }
}

/// `g(λ) <= 1` (or `< 1` when strict), i.e. the exponent of `g(λ)` is
/// non-negative (positive).
#[derive(Debug, Clone)]
pub struct MonomialConstraint {
    pub g: MonomialFn,
    pub strict: bool,
}

impl MonomialConstraint {
    pub fn holds(&self, lambda: &[GammaValue]) -> bool {
        match self.g.eval(lambda) {
            Some(GammaValue::Finite(e)) => {
                if self.strict {
                    e.is_positive()
                } else {
                    !e.is_negative()
                }
            }
            _ => false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Piece {
    pub pattern: Vec<LambdaPattern>,
    pub region: Vec<MonomialConstraint>,
    pub values: Vec<MonomialFn>,
}

impl Piece {
    pub fn matches(&self, lambda: &[GammaValue]) -> bool {
        if lambda.len() != self.pattern.len() {
            return false;
        }
        for (p, l) in self.pattern.iter().zip(lambda) {
            let ok = match p {
                LambdaPattern::Zero => *l == GammaValue::Zero,
                LambdaPattern::Inf => *l == GammaValue::Inf,
                LambdaPattern::Finite => l.exponent().is_some(),
            };
            if !ok {
                return false;
            }
        }
        self.region.iter().all(|c| c.holds(lambda))
    }
}

/// A fitted piecewise-monomial multi-function.
#[derive(Debug, Clone)]
pub struct CritFunction {
    pub pieces: Vec<Piece>,
}

impl CritFunction {
    /// Evaluates over the fitted pieces; `None` when no piece matches.
    pub fn eval(&self, lambda: &[GammaValue]) -> Option<BTreeSet<GammaValue>> {
        let piece = self.pieces.iter().find(|p| p.matches(lambda))?;
        let mut out = BTreeSet::new();
        for v in &piece.values {
            out.insert(v.eval(lambda)?);
        }
        Some(out)
    }

    pub fn to_json(&self) -> serde_json::Value {
        let enc_fn = |f: &MonomialFn| {
            serde_json::json!({
                "mu": rat_json(&f.mu),
                "exps": f.exps.iter().map(rat_json).collect::<Vec<_>>(),
            })
        };
        serde_json::json!({
            "pieces": self.pieces.iter().map(|p| serde_json::json!({
                "pattern": p.pattern.iter().map(|k| match k {
                    LambdaPattern::Zero => "zero",
                    LambdaPattern::Finite => "finite",
                    LambdaPattern::Inf => "inf",
                }).collect::<Vec<_>>(),
                "region": p.region.iter().map(|c| serde_json::json!({
                    "g": enc_fn(&c.g),
                    "strict": c.strict,
                })).collect::<Vec<_>>(),
                "values": p.values.iter().map(enc_fn).collect::<Vec<_>>(),
            })).collect::<Vec<_>>(),
        })
    }
}

fn rat_json(r: &Exp) -> serde_json::Value {
    use num_traits::ToPrimitive;
    serde_json::json!([
        r.numer().to_i64().unwrap_or(i64::MAX),
        r.denom().to_i64().unwrap_or(i64::MAX)
    ])
}

fn pattern_of(lambda: &[GammaValue]) -> Vec<LambdaPattern> {
    lambda
        .iter()
        .map(|l| match l {
            GammaValue::Zero => LambdaPattern::Zero,
            GammaValue::Inf => LambdaPattern::Inf,
            GammaValue::Finite(_) => LambdaPattern::Finite,
        })
        .collect()
}

/// Fits monomial tracks through sampled critical value sets, grouping
/// samples by coordinate pattern and splitting each group into regions
/// where a fixed set of monomials reproduces the samples exactly.
pub fn fit_monomial_pieces(
    samples: &[(Vec<GammaValue>, BTreeSet<GammaValue>)],
) -> Result<CritFunction> {
    if samples.is_empty() {
        return Err(Error::Input("no samples".into()));
    }
    let n = samples[0].0.len();
    // group by pattern
    let mut groups: Vec<(Vec<LambdaPattern>, Vec<usize>)> = Vec::new();
    for (i, (l, _)) in samples.iter().enumerate() {
        if l.len() != n {
            return Err(Error::Input("ragged distance vectors".into()));
        }
        let p = pattern_of(l);
        match groups.iter_mut().find(|(gp, _)| *gp == p) {
            Some((_, idxs)) => idxs.push(i),
            None => groups.push((p, vec![i])),
        }
    }
    let mut pieces = Vec::new();
    for (pattern, idxs) in groups {
        let finite_coords: Vec<usize> = pattern
            .iter()
            .enumerate()
            .filter(|(_, k)| **k == LambdaPattern::Finite)
            .map(|(i, _)| i)
            .collect();
        if idxs.len() < 2 && !finite_coords.is_empty() {
            return Err(Error::UnfitSamples(format!(
                "pattern {pattern:?} has a single sample"
            )));
        }
        let tracks = fit_tracks(samples, &idxs, &finite_coords, n)?;
        // region classes by which tracks predict inside the sample's set
        let mut classes: Vec<(Vec<usize>, Vec<usize>)> = Vec::new(); // (signature, sample idxs)
        for &s in &idxs {
            let (l, set) = &samples[s];
            let mut sig = Vec::new();
            for (ti, t) in tracks.iter().enumerate() {
                if let Some(v) = t.eval(l) {
                    if set.contains(&v) {
                        sig.push(ti);
                    }
                }
            }
            // every value must be produced by some track
            let mut produced: BTreeSet<GammaValue> = BTreeSet::new();
            for &ti in &sig {
                if let Some(v) = tracks[ti].eval(l) {
                    produced.insert(v);
                }
            }
            if &produced != set {
                return Err(Error::UnfitSamples(format!(
                    "sample {l:?} -> {set:?} not reproduced by any track set"
                )));
            }
            match classes.iter_mut().find(|(csig, _)| *csig == sig) {
                Some((_, cs)) => cs.push(s),
                None => classes.push((sig, vec![s])),
            }
        }
        // every region needs at least two samples to pin its tracks down
        if !finite_coords.is_empty() {
            let thin: Vec<String> = classes
                .iter()
                .filter(|(_, members)| members.len() < 2)
                .map(|(_, members)| format!("{:?}", samples[members[0]].0))
                .collect();
            if !thin.is_empty() {
                return Err(Error::UnfitSamples(format!(
                    "regions with a single sample: {}",
                    thin.join("; ")
                )));
            }
        }
        // constraints: coordinate boxes separating the classes
        for (sig, members) in &classes {
            let mut region = Vec::new();
            for (k, &coord) in finite_coords.iter().enumerate() {
                let exps_in: Vec<Exp> = members
                    .iter()
                    .map(|&s| samples[s].0[coord].exponent().unwrap().clone())
                    .collect();
                let lo = exps_in.iter().min().unwrap().clone();
                let hi = exps_in.iter().max().unwrap().clone();
                // nearest foreign exponents outside [lo, hi]
                let mut below: Option<Exp> = None;
                let mut above: Option<Exp> = None;
                for (osig, omembers) in &classes {
                    if osig == sig {
                        continue;
                    }
                    for &s in omembers {
                        let e = samples[s].0[coord].exponent().unwrap().clone();
                        if e < lo {
                            below = Some(match below {
                                Some(b) if b > e => b,
                                _ => e,
                            });
                        } else if e > hi {
                            above = Some(match above {
                                Some(a) if a < e => a,
                                _ => e,
                            });
                        }
                    }
                }
                let half = BigRational::new(BigInt::from(1), BigInt::from(2));
                let mut mk = |threshold: Exp, lower_bound: bool| {
                    // lower_bound: exponent(λ_coord) >= threshold
                    // encode as g(λ) = λ_coord · ⟨-threshold⟩ <= 1
                    let mut exps = vec![Exp::zero(); n];
                    if lower_bound {
                        exps[coord] = Exp::one();
                        region.push(MonomialConstraint {
                            g: MonomialFn { mu: -threshold, exps },
                            strict: false,
                        });
                    } else {
                        exps[coord] = -Exp::one();
                        region.push(MonomialConstraint {
                            g: MonomialFn { mu: threshold, exps },
                            strict: false,
                        });
                    }
                };
                if let Some(b) = below {
                    mk((&b + &lo) * &half, true);
                }
                if let Some(a) = above {
                    mk((&a + &hi) * &half, false);
                }
                let _ = k;
            }
            pieces.push(Piece {
                pattern: pattern.clone(),
                region,
                values: sig.iter().map(|&ti| tracks[ti].clone()).collect(),
            });
        }
        // verify that every group sample routes to its own class
        for &s in &idxs {
            let (l, set) = &samples[s];
            let matched: Vec<&Piece> = pieces
                .iter()
                .filter(|p| p.pattern == pattern && p.matches(l))
                .collect();
            let ok = matched.len() == 1 && {
                let mut produced = BTreeSet::new();
                let mut total = true;
                for v in &matched[0].values {
                    match v.eval(l) {
                        Some(x) => {
                            produced.insert(x);
                        }
                        None => total = false,
                    }
                }
                total && &produced == set
            };
            if !ok {
                return Err(Error::UnfitSamples(format!(
                    "region constraints do not isolate sample {l:?}"
                )));
            }
        }
    }
    Ok(CritFunction { pieces })
}

/// Fits individual monomial tracks on a pattern group by solving exact
/// linear systems through small sample subsets and keeping every hypothesis
/// that predicts at least two incidences.
fn fit_tracks(
    samples: &[(Vec<GammaValue>, BTreeSet<GammaValue>)],
    idxs: &[usize],
    finite_coords: &[usize],
    n: usize,
) -> Result<Vec<MonomialFn>> {
    let k = finite_coords.len();
    let mut incidences: Vec<(usize, GammaValue)> = Vec::new();
    for &s in idxs {
        for v in &samples[s].1 {
            incidences.push((s, v.clone()));
        }
    }
    // hypothesis generation over combinations of k+1 samples
    let mut candidates: Vec<(MonomialFn, Vec<usize>)> = Vec::new(); // with hit indices
    let combos = sample_combinations(idxs, k + 1, 400);
    for combo in combos {
        // value assignments
        let mut assignment = vec![0usize; combo.len()];
        loop {
            // build and solve the (k+1)x(k+1) system
            let mut rows: Vec<Vec<Exp>> = Vec::new();
            let mut rhs: Vec<Exp> = Vec::new();
            let mut degenerate = false;
            for (ci, &s) in combo.iter().enumerate() {
                let vals: Vec<&GammaValue> = samples[s].1.iter().collect();
                if vals.is_empty() {
                    degenerate = true;
                    break;
                }
                let v = vals[assignment[ci] % vals.len()];
                let Some(ve) = v.exponent() else {
                    degenerate = true;
                    break;
                };
                let mut row = vec![Exp::one()];
                for &c in finite_coords {
                    row.push(samples[s].0[c].exponent().unwrap().clone());
                }
                rows.push(row);
                rhs.push(ve.clone());
            }
            if !degenerate {
                if let Some(sol) = solve_exact(&rows, &rhs) {
                    let mut exps = vec![Exp::zero(); n];
                    for (i, &c) in finite_coords.iter().enumerate() {
                        exps[c] = sol[i + 1].clone();
                    }
                    let cand = MonomialFn { mu: sol[0].clone(), exps };
                    if !candidates.iter().any(|(t, _)| *t == cand) {
                        let hits: Vec<usize> = incidences
                            .iter()
                            .enumerate()
                            .filter(|(_, (s, v))| {
                                cand.eval(&samples[*s].0).map_or(false, |p| p == *v)
                            })
                            .map(|(i, _)| i)
                            .collect();
                        if hits.len() >= 2.max(k + 1) {
                            candidates.push((cand, hits));
                        }
                    }
                }
            }
            // advance the assignment counter
            let mut pos = 0usize;
            loop {
                if pos == combo.len() {
                    break;
                }
                let setsize = samples[combo[pos]].1.len().max(1);
                assignment[pos] += 1;
                if assignment[pos] < setsize {
                    break;
                }
                assignment[pos] = 0;
                pos += 1;
            }
            if pos == combo.len() {
                break;
            }
        }
    }
    // greedy minimal cover: prefer tracks explaining the most incidences,
    // then the simplest exponents, so spurious interpolants through few
    // points are never selected
    candidates.sort_by(|a, b| {
        b.1.len()
            .cmp(&a.1.len())
            .then_with(|| complexity(&a.0).cmp(&complexity(&b.0)))
            .then_with(|| (a.0.mu.clone(), a.0.exps.clone()).cmp(&(b.0.mu.clone(), b.0.exps.clone())))
    });
    let mut covered = vec![false; incidences.len()];
    let mut tracks: Vec<MonomialFn> = Vec::new();
    for (cand, hits) in candidates {
        if hits.iter().any(|&i| !covered[i]) {
            for &i in &hits {
                covered[i] = true;
            }
            tracks.push(cand);
        }
    }
    // uncovered incidences are outliers
    let outliers: Vec<String> = incidences
        .iter()
        .enumerate()
        .filter(|(i, _)| !covered[*i])
        .map(|(_, (s, v))| format!("λ={:?} value {}", samples[*s].0, v))
        .collect();
    if !outliers.is_empty() {
        return Err(Error::UnfitSamples(outliers.join("; ")));
    }
    // deterministic order
    tracks.sort_by(|a, b| (a.mu.clone(), a.exps.clone()).cmp(&(b.mu.clone(), b.exps.clone())));
    Ok(tracks)
}

/// Description length of a monomial: simpler exponents are preferred when
/// coverage ties.
fn complexity(f: &MonomialFn) -> BigInt {
    let one_term = |r: &Exp| r.numer().abs() + r.denom();
    let mut total = one_term(&f.mu);
    for r in &f.exps {
        total += one_term(r);
    }
    total
}

fn sample_combinations(idxs: &[usize], size: usize, cap: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let m = idxs.len();
    if size == 0 || size > m {
        return out;
    }
    let mut sel: Vec<usize> = (0..size).collect();
    loop {
        out.push(sel.iter().map(|&i| idxs[i]).collect());
        if out.len() >= cap {
            break;
        }
        // next combination
        let mut i = size;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if sel[i] != i + m - size {
                break;
            }
            if i == 0 {
                return out;
            }
        }
        sel[i] += 1;
        for j in (i + 1)..size {
            sel[j] = sel[j - 1] + 1;
        }
    }
    out
}

/// Exact Gaussian elimination over the rationals; `None` for singular
/// systems.
fn solve_exact(rows: &[Vec<Exp>], rhs: &[Exp]) -> Option<Vec<Exp>> {
    let n = rows.len();
    if n == 0 || rows[0].len() != n {
        return None;
    }
    let mut a: Vec<Vec<Exp>> = rows.to_vec();
    let mut b: Vec<Exp> = rhs.to_vec();
    for col in 0..n {
        let piv = (col..n).find(|&r| !a[r][col].is_zero())?;
        a.swap(col, piv);
        b.swap(col, piv);
        let p = a[col][col].clone();
        for j in 0..n {
            a[col][j] = &a[col][j] / &p;
        }
        b[col] = &b[col] / &p;
        for r in 0..n {
            if r != col && !a[r][col].is_zero() {
                let f = a[r][col].clone();
                for j in 0..n {
                    let sub = &f * &a[col][j];
                    a[r][j] = &a[r][j] - sub;
                }
                let sub = &f * &b[col];
                b[r] = &b[r] - sub;
            }
        }
    }
    Some(b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gamma::exp;

    fn g(n: i64, d: i64) -> GammaValue {
        GammaValue::finite(n, d)
    }

    #[test]
    fn fit_recovers_power_track() {
        // λ0 ∈ {<1>,<2>,<3>}, values λ0^{3/2} (plus λ0 itself to make the
        // sets realistic)
        let samples: Vec<(Vec<GammaValue>, BTreeSet<GammaValue>)> = [1i64, 2, 3]
            .iter()
            .map(|&e| {
                let set: BTreeSet<GammaValue> =
                    [g(3 * e, 2), g(e, 1)].into_iter().collect();
                (vec![g(e, 1), GammaValue::Zero], set)
            })
            .collect();
        let fit = fit_monomial_pieces(&samples).unwrap();
        let has_three_halves = fit.pieces.iter().any(|p| {
            p.values
                .iter()
                .any(|v| v.mu.is_zero() && v.exps[0] == exp(3, 2) && v.exps[1].is_zero())
        });
        assert!(has_three_halves, "{fit:?}");
        // evaluation reproduces the samples
        for (l, set) in &samples {
            assert_eq!(fit.eval(l).unwrap(), *set);
        }
    }

    #[test]
    fn fit_constant_track() {
        let samples: Vec<(Vec<GammaValue>, BTreeSet<GammaValue>)> = [1i64, 2, 3]
            .iter()
            .map(|&e| {
                let set: BTreeSet<GammaValue> = [GammaValue::one()].into_iter().collect();
                (vec![g(e, 1), GammaValue::Zero], set)
            })
            .collect();
        let fit = fit_monomial_pieces(&samples).unwrap();
        for (l, set) in &samples {
            assert_eq!(fit.eval(l).unwrap(), *set);
        }
        let piece = &fit.pieces[0];
        assert!(piece.values.iter().any(|v| v.mu.is_zero()
            && v.exps.iter().all(|r| r.is_zero())));
    }

    #[test]
    fn fit_rejects_inconsistent_track() {
        let mk = |e: i64, v: i64| {
            let set: BTreeSet<GammaValue> = [g(v, 1)].into_iter().collect();
            (vec![g(e, 1), GammaValue::Zero], set)
        };
        // {<1>,<3>} at λ0 ∈ {<1>,<2>} is the line 2e-1, but <10> at <3> fits
        // nothing
        let samples = vec![mk(1, 1), mk(2, 3), mk(3, 10)];
        assert!(matches!(
            fit_monomial_pieces(&samples),
            Err(Error::UnfitSamples(_))
        ));
    }

    #[test]
    fn candidate_grid_contains_table_exponents() {
        let cusp = StratSpec::cusp(3, 2).unwrap();
        let cands = candidate_radii(&cusp, &[g(1, 1), GammaValue::Zero]);
        for want in [g(0, 1), g(1, 1), g(3, 2), g(-3, 1), g(-2, 1)] {
            assert!(cands.contains(&want), "missing {want}");
        }
    }

    #[test]
    fn split_regions_by_boxes() {
        // one track on e <= 2, another on e >= 4 (exponents), same pattern
        let mk = |e: i64, v: i64| {
            let set: BTreeSet<GammaValue> = [g(v, 1)].into_iter().collect();
            (vec![g(e, 1)], set)
        };
        let samples = vec![mk(1, 1), mk(2, 2), mk(4, 9), mk(5, 10)];
        // region 1: identity track; region 2: e + 5 track
        let fit = fit_monomial_pieces(&samples).unwrap();
        for (l, set) in &samples {
            assert_eq!(fit.eval(l).unwrap(), *set, "at {l:?}");
        }
    }
}
