//! Stratified built-in families and the sampling machinery on them:
//! membership, valuative distances to partial skeletons, fiber
//! intersections, directional triviality on balls, critical values and the
//! piecewise-monomial critical value function.

mod crit;
mod trivial;

pub use crit::{
    crit_function_eval, crit_values_at_point, fit_monomial_pieces, CritFunction, CritNote,
    CritResult, LambdaPattern, MonomialConstraint, MonomialFn, Piece,
};
pub use trivial::{is_dir_trivial_on_ball, TrivialVerdict};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero as NumZero;
use rand::Rng;

use crate::config::Config;
use crate::error::{Error, Result};
use crate::gamma::{exp_int, Exp, GammaValue};
use crate::puiseux::{Coeff, PSeries};
use crate::vla::KVector;

// ---------------------------------------------------------------------------
// balls

/// A valuative ball in `K^n`.  Radius `Inf` with `open` means all of `K^n`.
#[derive(Debug, Clone)]
pub struct Ball {
    pub center: KVector,
    pub radius: GammaValue,
    pub open: bool,
}

impl Ball {
    pub fn open(center: KVector, radius: GammaValue) -> Result<Self> {
        if radius == GammaValue::Zero {
            return Err(Error::Input("ball radius must be in Γ^× or inf".into()));
        }
        Ok(Ball { center, radius, open: true })
    }

    pub fn closed(center: KVector, radius: GammaValue) -> Result<Self> {
        match radius {
            GammaValue::Finite(_) => Ok(Ball { center, radius, open: false }),
            _ => Err(Error::Input("closed balls need a finite radius".into())),
        }
    }

    pub fn full_space(n: usize) -> Self {
        Ball {
            center: KVector::zero(n),
            radius: GammaValue::Inf,
            open: true,
        }
    }

    pub fn contains(&self, x: &KVector) -> Result<bool> {
        if self.radius == GammaValue::Inf {
            return Ok(true);
        }
        let d = x.sub(&self.center)?;
        let (best, uncertain) = d.val_with_uncertainty()?;
        let inside = |v: &GammaValue| if self.open { *v < self.radius } else { *v <= self.radius };
        match uncertain {
            None => Ok(inside(&best)),
            // the valuation lies between `best` and the precision bound
            Some(bound) => {
                if inside(&bound) {
                    Ok(true)
                } else if !inside(&best) {
                    Ok(false)
                } else {
                    Err(Error::PrecisionExhausted(
                        "ball membership undecidable at precision".into(),
                    ))
                }
            }
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "center": self.center.to_json(),
            "radius": self.radius.to_json(),
            "open": self.open,
        })
    }

    pub fn from_json(v: &serde_json::Value) -> Result<Ball> {
        let center = KVector::from_json(
            v.get("center")
                .ok_or_else(|| Error::Input("ball needs a center".into()))?,
        )?;
        let radius = GammaValue::from_json(
            v.get("radius")
                .ok_or_else(|| Error::Input("ball needs a radius".into()))?,
        )?;
        let open = v.get("open").and_then(|o| o.as_bool()).unwrap_or(true);
        if open {
            Ball::open(center, radius)
        } else {
            Ball::closed(center, radius)
        }
    }
}

// ---------------------------------------------------------------------------
// polynomials with rational coefficients

/// A multivariate polynomial with exact rational coefficients.
#[derive(Debug, Clone)]
pub struct MPoly {
    pub nvars: usize,
    /// `(coefficient, exponent per variable)`
    pub terms: Vec<(BigRational, Vec<u32>)>,
}

impl MPoly {
    pub fn new(nvars: usize, terms: Vec<(BigRational, Vec<u32>)>) -> Self {
        MPoly { nvars, terms }
    }

    fn term_int(c: i64, exps: Vec<u32>) -> (BigRational, Vec<u32>) {
        (BigRational::from_integer(BigInt::from(c)), exps)
    }

    pub fn eval(&self, x: &[PSeries]) -> Result<PSeries> {
        let mut acc = PSeries::zero();
        for (c, exps) in &self.terms {
            let cf = rational_to_f64(c);
            let mut term = PSeries::constant(Coeff::new(cf, 0.0));
            for (i, &e) in exps.iter().enumerate() {
                if e > 0 {
                    term = term.mul(&x[i].pow_int(e)?)?;
                }
            }
            acc = acc.add(&term)?;
        }
        Ok(acc)
    }

    /// Valuation of the largest individual monomial at `x` (no cancellation).
    pub fn monomial_scale(&self, x: &[PSeries]) -> Result<GammaValue> {
        let mut best = GammaValue::Zero;
        for (_, exps) in &self.terms {
            let mut v = GammaValue::one();
            for (i, &e) in exps.iter().enumerate() {
                if e == 0 {
                    continue;
                }
                let vi = x[i].val()?;
                v = v.mul(&vi.pow(&exp_int(e as i64))?)?;
            }
            if v > best {
                best = v;
            }
        }
        Ok(best)
    }

    pub fn partial(&self, var: usize) -> MPoly {
        let mut terms = Vec::new();
        for (c, exps) in &self.terms {
            let e = exps[var];
            if e == 0 {
                continue;
            }
            let mut ne = exps.clone();
            ne[var] = e - 1;
            terms.push((c * BigRational::from_integer(BigInt::from(e)), ne));
        }
        MPoly { nvars: self.nvars, terms }
    }

    pub fn gradient(&self) -> Vec<MPoly> {
        (0..self.nvars).map(|i| self.partial(i)).collect()
    }
}

fn rational_to_f64(r: &BigRational) -> f64 {
    use num_traits::ToPrimitive;
    r.to_f64().unwrap_or(f64::NAN)
}

// ---------------------------------------------------------------------------
// stratification specifications

/// Built-in families.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Family {
    /// Plane curve `x^a = y^b` (coprime `a > b > 1`): a point stratum at the
    /// origin, the punctured curve, and the rest of the plane.
    Cusp { a: u32, b: u32 },
    /// Surface `y^2 + z^2 = x^3` in 3-space with its apex as point stratum.
    Trumpet,
    /// Smooth parabola `y = x^2` with no point stratum.
    Parabola,
    /// User-supplied strata.
    Custom,
}

/// One stratum: a finite point list, a variety given by polynomials (lower
/// strata removed implicitly), the unstructured rest of the space, or empty.
#[derive(Debug, Clone)]
pub enum Stratum {
    Points(Vec<KVector>),
    Variety(Vec<MPoly>),
    Rest,
    Empty,
}

/// A stratification of `K^n` (n ≤ 3): strata `S_0 .. S_n` of weakly
/// increasing declared dimension.
#[derive(Debug, Clone)]
pub struct StratSpec {
    pub n: usize,
    pub family: Family,
    pub strata: Vec<Stratum>,
}

impl StratSpec {
    pub fn cusp(a: u32, b: u32) -> Result<Self> {
        if !(a > b && b > 1) || gcd(a, b) != 1 {
            return Err(Error::Input(
                "cusp family needs coprime a > b > 1".into(),
            ));
        }
        let poly = MPoly::new(
            2,
            vec![MPoly::term_int(1, vec![a, 0]), MPoly::term_int(-1, vec![0, b])],
        );
        Ok(StratSpec {
            n: 2,
            family: Family::Cusp { a, b },
            strata: vec![
                Stratum::Points(vec![KVector::zero(2)]),
                Stratum::Variety(vec![poly]),
                Stratum::Rest,
            ],
        })
    }

    pub fn trumpet() -> Self {
        let poly = MPoly::new(
            3,
            vec![
                MPoly::term_int(1, vec![0, 2, 0]),
                MPoly::term_int(1, vec![0, 0, 2]),
                MPoly::term_int(-1, vec![3, 0, 0]),
            ],
        );
        StratSpec {
            n: 3,
            family: Family::Trumpet,
            strata: vec![
                Stratum::Points(vec![KVector::zero(3)]),
                Stratum::Empty,
                Stratum::Variety(vec![poly]),
                Stratum::Rest,
            ],
        }
    }

    pub fn parabola() -> Self {
        let poly = MPoly::new(
            2,
            vec![MPoly::term_int(1, vec![2, 0]), MPoly::term_int(-1, vec![0, 1])],
        );
        StratSpec {
            n: 2,
            family: Family::Parabola,
            strata: vec![
                Stratum::Empty,
                Stratum::Variety(vec![poly]),
                Stratum::Rest,
            ],
        }
    }

    /// Parses `cusp:a,b`, `trumpet`, `parabola`.
    pub fn by_name(name: &str) -> Result<Self> {
        if let Some(args) = name.strip_prefix("cusp:") {
            let parts: Vec<&str> = args.split(',').collect();
            if parts.len() != 2 {
                return Err(Error::Input("expected cusp:a,b".into()));
            }
            let a = parts[0]
                .trim()
                .parse::<u32>()
                .map_err(|_| Error::Input("bad cusp exponent".into()))?;
            let b = parts[1]
                .trim()
                .parse::<u32>()
                .map_err(|_| Error::Input("bad cusp exponent".into()))?;
            return StratSpec::cusp(a, b);
        }
        match name {
            "trumpet" => Ok(StratSpec::trumpet()),
            "parabola" => Ok(StratSpec::parabola()),
            other => Err(Error::Input(format!("unknown family {other:?}"))),
        }
    }

    /// Index of the unique variety stratum, if any.
    pub fn variety_index(&self) -> Option<usize> {
        self.strata
            .iter()
            .position(|s| matches!(s, Stratum::Variety(_)))
    }

    pub fn variety_polys(&self) -> Option<&[MPoly]> {
        self.strata.iter().find_map(|s| match s {
            Stratum::Variety(p) => Some(p.as_slice()),
            _ => None,
        })
    }
}

fn gcd(a: u32, b: u32) -> u32 {
    if b == 0 { a } else { gcd(b, a % b) }
}

// ---------------------------------------------------------------------------
// membership

/// Outcome of a stratum membership test.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Membership {
    /// Certified by exact cancellation.
    In,
    /// Cancellation holds below precision while every monomial was visible.
    InNumeric,
    Out,
    /// Cannot be certified either way at the available precision.
    Undecidable,
}

impl Membership {
    pub fn is_in(&self) -> bool {
        matches!(self, Membership::In | Membership::InNumeric)
    }
}

/// Whether a point satisfies a variety's equations, with the certification
/// grade described above.
fn on_variety(polys: &[MPoly], x: &KVector) -> Result<Membership> {
    let mut numeric = false;
    for p in polys {
        let v = p.eval(&x.coords)?;
        if v.is_exact_zero() {
            continue;
        }
        if !v.is_zero_at_prec() {
            return Ok(Membership::Out);
        }
        // cancellation below precision: certify only if the monomials were
        // individually visible at that precision
        let scale = p.monomial_scale(&x.coords)?;
        let visible = match (&scale, v.prec()) {
            (GammaValue::Finite(e), crate::puiseux::Prec::Exp(pr)) => e < pr,
            (GammaValue::Zero, _) => false,
            _ => true,
        };
        if visible {
            numeric = true;
        } else {
            return Ok(Membership::Undecidable);
        }
    }
    Ok(if numeric { Membership::InNumeric } else { Membership::In })
}

fn at_point(p: &KVector, x: &KVector) -> Result<Membership> {
    let d = x.sub(p)?;
    if d.is_exact_zero() {
        return Ok(Membership::In);
    }
    if d.is_zero_at_prec() {
        return Ok(Membership::Undecidable);
    }
    Ok(Membership::Out)
}

/// Membership of `x` in stratum `d` (defining data satisfied and `x` not in
/// a lower stratum).
pub fn stratum_membership(spec: &StratSpec, d: usize, x: &KVector) -> Result<Membership> {
    if d >= spec.strata.len() {
        return Err(Error::Input("stratum index out of range".into()));
    }
    // not in a lower stratum
    for lower in 0..d {
        match raw_membership(spec, lower, x)? {
            Membership::In | Membership::InNumeric => return Ok(Membership::Out),
            Membership::Undecidable => return Ok(Membership::Undecidable),
            Membership::Out => {}
        }
    }
    raw_membership(spec, d, x)
}

fn raw_membership(spec: &StratSpec, d: usize, x: &KVector) -> Result<Membership> {
    match &spec.strata[d] {
        Stratum::Empty => Ok(Membership::Out),
        Stratum::Points(pts) => {
            let mut undecided = false;
            for p in pts {
                match at_point(p, x)? {
                    Membership::In => return Ok(Membership::In),
                    Membership::Undecidable => undecided = true,
                    _ => {}
                }
            }
            Ok(if undecided { Membership::Undecidable } else { Membership::Out })
        }
        Stratum::Variety(polys) => on_variety(polys, x),
        Stratum::Rest => {
            // rest of the space: the lower-strata exclusion was already done
            Ok(Membership::In)
        }
    }
}

// ---------------------------------------------------------------------------
// fiber solving on the built-in families

/// All points of the family's variety stratum with the coordinates in
/// `frozen` fixed to the given values. The frozen pattern must reduce the
/// defining equations to univariate root extraction.
pub fn solve_variety_fiber(
    spec: &StratSpec,
    frozen: &[usize],
    values: &[PSeries],
    depth: i64,
) -> Result<Vec<KVector>> {
    if frozen.len() != values.len() {
        return Err(Error::Input("frozen index/value mismatch".into()));
    }
    let mk_point = |free_idx: usize, roots: Vec<PSeries>| -> Vec<KVector> {
        roots
            .into_iter()
            .map(|r| {
                let mut coords = vec![PSeries::zero(); spec.n];
                for (i, v) in frozen.iter().zip(values) {
                    coords[*i] = v.clone();
                }
                coords[free_idx] = r;
                KVector::new(coords)
            })
            .collect()
    };
    let val_of = |i: usize| -> Result<&PSeries> {
        frozen
            .iter()
            .position(|&j| j == i)
            .map(|k| &values[k])
            .ok_or_else(|| Error::Input("expected coordinate to be frozen".into()))
    };
    match spec.family {
        Family::Cusp { a, b } => {
            if frozen == [0] {
                // y^b = x^a
                let rhs = val_of(0)?.pow_int(a)?;
                Ok(mk_point(1, all_roots(&rhs, b, depth)?))
            } else if frozen == [1] {
                // x^a = y^b
                let rhs = val_of(1)?.pow_int(b)?;
                Ok(mk_point(0, all_roots(&rhs, a, depth)?))
            } else {
                Err(Error::Input("cusp fibers freeze one coordinate".into()))
            }
        }
        Family::Parabola => {
            if frozen == [0] {
                let x = val_of(0)?;
                Ok(mk_point(1, vec![x.mul(x)?]))
            } else if frozen == [1] {
                Ok(mk_point(0, all_roots(val_of(1)?, 2, depth)?))
            } else {
                Err(Error::Input("parabola fibers freeze one coordinate".into()))
            }
        }
        Family::Trumpet => {
            if frozen.len() != 2 {
                return Err(Error::Input(
                    "trumpet fibers freeze two coordinates".into(),
                ));
            }
            let mut f = frozen.to_vec();
            f.sort_unstable();
            if f == [0, 1] {
                // z^2 = x^3 - y^2
                let x = val_of(0)?;
                let y = val_of(1)?;
                let rhs = x.pow_int(3)?.sub(&y.mul(y)?)?;
                Ok(mk_point(2, all_roots(&rhs, 2, depth)?))
            } else if f == [0, 2] {
                let x = val_of(0)?;
                let z = val_of(2)?;
                let rhs = x.pow_int(3)?.sub(&z.mul(z)?)?;
                Ok(mk_point(1, all_roots(&rhs, 2, depth)?))
            } else if f == [1, 2] {
                // x^3 = y^2 + z^2
                let y = val_of(1)?;
                let z = val_of(2)?;
                let rhs = y.mul(y)?.add(&z.mul(z)?)?;
                Ok(mk_point(0, all_roots(&rhs, 3, depth)?))
            } else {
                Err(Error::Input("bad trumpet fiber pattern".into()))
            }
        }
        Family::Custom => Err(Error::UnsupportedFamily(
            "fiber solving is only built in for the named families".into(),
        )),
    }
}

/// All k-th roots of a series (empty input yields the single root 0).
fn all_roots(rhs: &PSeries, k: u32, depth: i64) -> Result<Vec<PSeries>> {
    if rhs.is_exact_zero() {
        return Ok(vec![PSeries::zero()]);
    }
    if rhs.is_zero_at_prec() {
        return Err(Error::PrecisionExhausted(
            "radicand indistinguishable from zero".into(),
        ));
    }
    (0..k).map(|b| rhs.nth_root(k, b, depth)).collect()
}

/// Points of any stratum (index attached) in a fiber over the projection
/// `proj`, restricted to a ball.  Only finite intersections are returned:
/// point strata and variety strata whose frozen system is univariate.
pub fn sample_fiber_points(
    spec: &StratSpec,
    proj: &[usize],
    base: &[PSeries],
    ball: &Ball,
    depth: i64,
) -> Result<Vec<(KVector, usize)>> {
    let mut out = Vec::new();
    for (d, stratum) in spec.strata.iter().enumerate() {
        match stratum {
            Stratum::Points(pts) => {
                for p in pts {
                    let mut matches = true;
                    for (i, v) in proj.iter().zip(base) {
                        if !p.coords[*i].sub(v)?.is_zero_at_prec() {
                            matches = false;
                            break;
                        }
                    }
                    if matches && ball.contains(p)? {
                        out.push((p.clone(), d));
                    }
                }
            }
            Stratum::Variety(_) => {
                let pts = solve_variety_fiber(spec, proj, base, depth)?;
                for p in pts {
                    if !ball.contains(&p)? {
                        continue;
                    }
                    // respect the stratification: skip points of lower strata
                    if stratum_membership(spec, d, &p)?.is_in() {
                        out.push((p, d));
                    }
                }
            }
            Stratum::Rest | Stratum::Empty => {}
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// distance to partial skeletons

/// A valuative distance together with how it was obtained: `exact` when the
/// minimum came from structured (same-fiber / stratum point) candidates,
/// sampled-only otherwise.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dist {
    pub value: GammaValue,
    pub exact: bool,
}

/// `v(c - S_{<= d_max})`: minimum over finite strata directly; for variety
/// strata the minimum of (a) same-fiber solutions with the other coordinates
/// frozen at `c` and (b) a seeded neighborhood sample along the family's
/// parametrization.  Returns `Inf` when the partial skeleton is empty.
pub fn dist_to_stratum(
    spec: &StratSpec,
    d_max: usize,
    c: &KVector,
    cfg: &Config,
) -> Result<Dist> {
    let mut best = GammaValue::Inf;
    let mut exact = true;
    let mut any = false;
    for d in 0..=d_max.min(spec.strata.len() - 1) {
        match &spec.strata[d] {
            Stratum::Empty => {}
            Stratum::Rest => {
                // distance to the full-dimensional rest is zero whenever it
                // is inhabited arbitrarily close; not used by the callers
                any = true;
                if GammaValue::Zero < best {
                    best = GammaValue::Zero;
                }
            }
            Stratum::Points(pts) => {
                for p in pts {
                    any = true;
                    let v = c.sub(p)?.val()?;
                    if v < best {
                        best = v;
                    }
                }
            }
            Stratum::Variety(_) => {
                any = true;
                let (v, ex) = dist_to_variety(spec, c, cfg)?;
                if v < best {
                    best = v;
                    exact = ex;
                }
            }
        }
    }
    if !any {
        return Ok(Dist { value: GammaValue::Inf, exact: true });
    }
    Ok(Dist { value: best, exact })
}

fn dist_to_variety(spec: &StratSpec, c: &KVector, cfg: &Config) -> Result<(GammaValue, bool)> {
    let mut best = GammaValue::Inf;
    let mut exact_found = false;
    let mut solver_failed = false;
    // (a) same-fiber candidates for every supported frozen pattern
    for pattern in frozen_patterns(spec) {
        let values: Vec<PSeries> = pattern.iter().map(|&i| c.coords[i].clone()).collect();
        match solve_variety_fiber(spec, &pattern, &values, cfg.depth) {
            Ok(points) => {
                for p in points {
                    let d = c.sub(&p)?;
                    let v = if d.is_zero_at_prec() {
                        GammaValue::Zero
                    } else {
                        d.val()?
                    };
                    if v < best {
                        best = v;
                        exact_found = true;
                    }
                }
            }
            Err(Error::PrecisionExhausted(_)) => solver_failed = true,
            Err(e) => return Err(e),
        }
    }
    // membership short-circuit
    if on_variety(spec.variety_polys().unwrap(), c)?.is_in() {
        return Ok((GammaValue::Zero, true));
    }
    // (b) seeded neighborhood sample along the parametrization
    let mut rng = cfg.rng("dist-sample");
    for p in parametrized_samples(spec, c, cfg, &mut rng)? {
        let d = c.sub(&p)?;
        let v = if d.is_zero_at_prec() { GammaValue::Zero } else { d.val()? };
        if v < best {
            best = v;
            exact_found = false;
        }
    }
    Ok((best, exact_found && !solver_failed))
}

fn frozen_patterns(spec: &StratSpec) -> Vec<Vec<usize>> {
    match spec.family {
        Family::Cusp { .. } | Family::Parabola => vec![vec![0], vec![1]],
        Family::Trumpet => vec![vec![0, 1], vec![0, 2], vec![1, 2]],
        Family::Custom => vec![],
    }
}

/// Random points on the variety stratum near the scale of `c`.
fn parametrized_samples(
    spec: &StratSpec,
    c: &KVector,
    cfg: &Config,
    rng: &mut impl Rng,
) -> Result<Vec<KVector>> {
    let mut exps: Vec<Exp> = Vec::new();
    for coord in &c.coords {
        if let Some((e, _)) = coord.leading() {
            exps.push(e.clone());
        }
    }
    if exps.is_empty() {
        exps.push(Exp::zero());
    }
    let mut out = Vec::new();
    let n_samples = 24usize;
    for _ in 0..n_samples {
        let base = exps[rng.gen_range(0..exps.len())].clone();
        let jitter = BigRational::new(BigInt::from(rng.gen_range(-6i64..=6)), BigInt::from(6));
        let e = base + jitter;
        let coeff = Coeff::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
        if coeff.norm() < 0.2 {
            continue;
        }
        match spec.family {
            Family::Cusp { a, b } => {
                let u = PSeries::monomial(&e / BigRational::from_integer(BigInt::from(b)), coeff);
                out.push(KVector::new(vec![u.pow_int(b)?, u.pow_int(a)?]));
            }
            Family::Parabola => {
                let u = PSeries::monomial(e, coeff);
                let u2 = u.mul(&u)?;
                out.push(KVector::new(vec![u, u2]));
            }
            Family::Trumpet => {
                // (x, y) free, z = sqrt(x^3 - y^2), both branches
                let x = PSeries::monomial(e.clone(), Coeff::new(coeff.re.abs().max(0.3), 0.0));
                let ye = &e + BigRational::new(
                    BigInt::from(rng.gen_range(1i64..6)),
                    BigInt::from(2),
                );
                let y = PSeries::monomial(ye, Coeff::new(rng.gen_range(-1.5..1.5), 0.0));
                let rhs = x.pow_int(3)?.sub(&y.mul(&y)?)?;
                if rhs.is_zero_at_prec() {
                    continue;
                }
                for branch in 0..2 {
                    let z = rhs.nth_root(2, branch, cfg.depth)?;
                    out.push(KVector::new(vec![x.clone(), y.clone(), z]));
                }
            }
            Family::Custom => {}
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// branch graphs (used by triviality probing and the Lipschitz pipeline)

/// The variety stratum viewed locally as a graph over one coordinate: the
/// value of the dependent block at the given free value, per branch.
/// For the cusp, branch graphs over `x` are `y = ζ_b^k x^{a/b}` and over
/// `y` are `x = ζ_a^k y^{b/a}`.
pub fn branch_values(
    spec: &StratSpec,
    free_coord: usize,
    at: &PSeries,
    depth: i64,
) -> Result<Vec<KVector>> {
    solve_variety_fiber(spec, &[free_coord], std::slice::from_ref(at), depth).or_else(|e| {
        if spec.n == 2 {
            Err(e)
        } else {
            Err(Error::UnsupportedFamily(
                "branch graphs over one coordinate need a plane curve".into(),
            ))
        }
    })
}

/// Derivative of the curve branch through (or nearest) the point `p`, as
/// `d(dependent)/d(free)`: implicit differentiation of the defining
/// polynomial.  Only for plane-curve families.
pub fn branch_slope(
    spec: &StratSpec,
    free_coord: usize,
    p: &KVector,
    depth: i64,
) -> Result<PSeries> {
    if spec.n != 2 {
        return Err(Error::UnsupportedFamily("branch slopes are planar".into()));
    }
    let polys = spec
        .variety_polys()
        .ok_or_else(|| Error::Input("family has no variety stratum".into()))?;
    let f = &polys[0];
    let dep = 1 - free_coord;
    let df_free = f.partial(free_coord).eval(&p.coords)?;
    let df_dep = f.partial(dep).eval(&p.coords)?;
    df_free.neg().mul(&df_dep.inv(depth)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gamma::exp;

    fn re(x: f64) -> Coeff {
        Coeff::new(x, 0.0)
    }

    fn mono(e: i64, d: i64, c: f64) -> PSeries {
        PSeries::monomial(exp(e, d), re(c))
    }

    fn t() -> PSeries {
        PSeries::var()
    }

    #[test]
    fn membership_examples() {
        let cusp = StratSpec::cusp(3, 2).unwrap();
        // (t^2, t^3) lies on the curve exactly
        let p = KVector::new(vec![mono(2, 1, 1.0), mono(3, 1, 1.0)]);
        assert_eq!(stratum_membership(&cusp, 1, &p).unwrap(), Membership::In);
        // the origin is the point stratum and excluded from S_1
        let o = KVector::zero(2);
        assert_eq!(stratum_membership(&cusp, 0, &o).unwrap(), Membership::In);
        assert_eq!(stratum_membership(&cusp, 1, &o).unwrap(), Membership::Out);
        // trumpet surface point with y = 0
        let trumpet = StratSpec::trumpet();
        let q = KVector::new(vec![mono(2, 1, 1.0), PSeries::zero(), mono(3, 1, 1.0)]);
        assert_eq!(stratum_membership(&trumpet, 2, &q).unwrap(), Membership::In);
        // off-curve point
        let off = KVector::new(vec![t(), t()]);
        assert_eq!(stratum_membership(&cusp, 1, &off).unwrap(), Membership::Out);
        assert_eq!(stratum_membership(&cusp, 2, &off).unwrap(), Membership::In);
    }

    #[test]
    fn fiber_solving_examples() {
        let cusp = StratSpec::cusp(3, 2).unwrap();
        let cfg = Config::default();
        // fiber x = t^2 near (t^2, 0): both branch points ±t^3
        let ball = Ball::closed(
            KVector::new(vec![mono(2, 1, 1.0), PSeries::zero()]),
            GammaValue::finite_int(2),
        )
        .unwrap();
        let pts =
            sample_fiber_points(&cusp, &[0], &[mono(2, 1, 1.0)], &ball, cfg.depth).unwrap();
        assert_eq!(pts.len(), 2);
        for (p, d) in &pts {
            assert_eq!(*d, 1);
            assert_eq!(p.coords[1].val().unwrap(), GammaValue::finite_int(3));
        }
        // fiber missing the curve entirely (both roots of y^2 = 1 are far
        // from the ball around (1, 5))
        let far_ball = Ball::closed(
            KVector::new(vec![PSeries::one(), PSeries::constant(re(5.0))]),
            GammaValue::finite_int(5),
        )
        .unwrap();
        let pts = sample_fiber_points(&cusp, &[0], &[PSeries::one()], &far_ball, cfg.depth).unwrap();
        assert!(pts.is_empty());
        // trumpet fiber (x, y) = (t^2, 0)
        let trumpet = StratSpec::trumpet();
        let tball = Ball::closed(
            KVector::new(vec![mono(2, 1, 1.0), PSeries::zero(), PSeries::zero()]),
            GammaValue::finite_int(3),
        )
        .unwrap();
        let pts = sample_fiber_points(
            &trumpet,
            &[0, 1],
            &[mono(2, 1, 1.0), PSeries::zero()],
            &tball,
            cfg.depth,
        )
        .unwrap();
        assert_eq!(pts.len(), 2);
        for (p, d) in &pts {
            assert_eq!(*d, 2);
            assert_eq!(p.coords[2].val().unwrap(), GammaValue::finite_int(3));
        }
    }

    #[test]
    fn dist_examples() {
        let cusp = StratSpec::cusp(3, 2).unwrap();
        let cfg = Config::default();
        // a point of the curve has distance zero to S_{<=1}
        let on_curve = KVector::new(vec![mono(2, 1, 1.0), mono(3, 1, 1.0)]);
        let d = dist_to_stratum(&cusp, 1, &on_curve, &cfg).unwrap();
        assert_eq!(d.value, GammaValue::Zero);
        // v(c - S_0) for c = (t^2, t^3) is the valuation of c
        let d = dist_to_stratum(&cusp, 0, &on_curve, &cfg).unwrap();
        assert_eq!(d.value, GammaValue::finite_int(2));
        // c = (t^2, t^3 + t^5): branch point wins over tangential moves
        let c = KVector::new(vec![
            mono(2, 1, 1.0),
            mono(3, 1, 1.0).add(&mono(5, 1, 1.0)).unwrap(),
        ]);
        let d = dist_to_stratum(&cusp, 1, &c, &cfg).unwrap();
        assert_eq!(d.value, GammaValue::finite_int(5));
        assert!(d.exact);
    }

    #[test]
    fn dist_tangential_beats_fiber_offset() {
        // steep region: a pure y-offset of size <-1> at (t^-2, t^-3) is
        // approached to within <0> by sliding along the curve
        let cusp = StratSpec::cusp(3, 2).unwrap();
        let cfg = Config::default();
        let c = KVector::new(vec![
            mono(-2, 1, 1.0),
            mono(-3, 1, 1.0).add(&mono(-1, 1, 1.0)).unwrap(),
        ]);
        let d = dist_to_stratum(&cusp, 1, &c, &cfg).unwrap();
        assert_eq!(d.value, GammaValue::one());
        // whereas an x-offset of the same size really is at distance <-1>
        let c = KVector::new(vec![
            mono(-2, 1, 1.0).add(&mono(-1, 1, 1.0)).unwrap(),
            mono(-3, 1, 1.0),
        ]);
        let d = dist_to_stratum(&cusp, 1, &c, &cfg).unwrap();
        assert_eq!(d.value, GammaValue::finite_int(-1));
    }

    #[test]
    fn dist_to_empty_skeleton_is_inf() {
        let parabola = StratSpec::parabola();
        let cfg = Config::default();
        let c = KVector::new(vec![t(), t()]);
        let d = dist_to_stratum(&parabola, 0, &c, &cfg).unwrap();
        assert_eq!(d.value, GammaValue::Inf);
    }

    #[test]
    fn branch_slope_cusp() {
        let cusp = StratSpec::cusp(3, 2).unwrap();
        // at (t^2, t^3): dy/dx = 3x^2 / 2y = (3/2) t
        let p = KVector::new(vec![mono(2, 1, 1.0), mono(3, 1, 1.0)]);
        let s = branch_slope(&cusp, 0, &p, 24).unwrap();
        assert!(s.approx_eq(&mono(1, 1, 1.5)));
    }
}
