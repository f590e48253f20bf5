//! Risometry checking and search on finite point sets, and validation of
//! sampled translater families.
//!
//! A bijection between finite sets is a risometry when it preserves the
//! leading terms of differences; between finite sets there is at most one.
//! Verdicts here are sample-level: they certify the finite sample, not an
//! ambient definable map.

use crate::error::{Error, Result};
use crate::gamma::GammaValue;
use crate::puiseux::{PSeries, RVClass, DEFAULT_DEPTH};
use crate::vla::{dir, KVector, ResSubspace};

/// Brute-force cap for risometry search.
pub const SEARCH_CAP: usize = 8;

/// A finite partial map `x_i ↦ y_i` with duplicate-free sides.
#[derive(Debug, Clone)]
pub struct PointMap {
    pub pairs: Vec<(KVector, KVector)>,
}

impl PointMap {
    pub fn new(pairs: Vec<(KVector, KVector)>) -> Result<Self> {
        for (i, (xi, yi)) in pairs.iter().enumerate() {
            for (xj, yj) in pairs.iter().skip(i + 1) {
                if points_indistinguishable(xi, xj)? {
                    return Err(Error::Input("duplicate source point".into()));
                }
                if points_indistinguishable(yi, yj)? {
                    return Err(Error::Input("duplicate target point".into()));
                }
            }
        }
        Ok(PointMap { pairs })
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "pairs": self.pairs.iter()
                .map(|(x, y)| serde_json::json!([x.to_json(), y.to_json()]))
                .collect::<Vec<_>>(),
        })
    }

    pub fn from_json(v: &serde_json::Value) -> Result<PointMap> {
        let pairs = v
            .get("pairs")
            .and_then(|p| p.as_array())
            .ok_or_else(|| Error::Input("point map needs a \"pairs\" array".into()))?;
        let mut out = Vec::new();
        for p in pairs {
            let pair = p
                .as_array()
                .filter(|a| a.len() == 2)
                .ok_or_else(|| Error::Input("pair must be [x, y]".into()))?;
            out.push((KVector::from_json(&pair[0])?, KVector::from_json(&pair[1])?));
        }
        PointMap::new(out)
    }
}

fn points_indistinguishable(a: &KVector, b: &KVector) -> Result<bool> {
    let d = a.sub(b)?;
    if d.is_exact_zero() {
        return Ok(true);
    }
    if d.is_zero_at_prec() {
        return Err(Error::PrecisionExhausted(
            "points indistinguishable at precision".into(),
        ));
    }
    Ok(false)
}

/// Same-point test up to the available precision, for matching sampled
/// values of maps computed along different routes.
fn same_point_at_prec(a: &KVector, b: &KVector) -> Result<bool> {
    Ok(a.sub(b)?.is_zero_at_prec())
}

/// Outcome of a sample-level risometry check.
#[derive(Debug, Clone)]
pub enum RisoVerdict {
    Ok,
    /// First violating pair of source points.
    Violation { i: usize, j: usize },
}

impl RisoVerdict {
    pub fn is_ok(&self) -> bool {
        matches!(self, RisoVerdict::Ok)
    }
}

/// Checks `rv(x - x') = rv(φx - φx')` for every pair of rows.
pub fn check_risometry(map: &PointMap) -> Result<RisoVerdict> {
    if map.pairs.len() < 2 {
        return Err(Error::Input("need at least two pairs".into()));
    }
    for i in 0..map.pairs.len() {
        for j in (i + 1)..map.pairs.len() {
            let (xi, yi) = &map.pairs[i];
            let (xj, yj) = &map.pairs[j];
            let dx = xi.sub(xj)?;
            let dy = yi.sub(yj)?;
            if !dx.rv()?.approx_eq(&dy.rv()?) {
                return Ok(RisoVerdict::Violation { i, j });
            }
        }
    }
    Ok(RisoVerdict::Ok)
}

/// Exhaustive search for risometric bijections between labeled point sets,
/// collecting at most `max_found`.  Assignments must preserve labels, and
/// every partial assignment must already preserve leading terms of
/// differences.
pub fn find_labeled_risometries(
    xs: &[(KVector, u32)],
    ys: &[(KVector, u32)],
    max_found: usize,
) -> Result<Vec<Vec<usize>>> {
    if xs.len() != ys.len() {
        return Ok(Vec::new());
    }
    if xs.len() > SEARCH_CAP {
        return Err(Error::SizeCap(SEARCH_CAP));
    }
    // precomputed rv of differences
    let n = xs.len();
    let mut dx: Vec<Vec<Option<RVClass>>> = vec![vec![None; n]; n];
    let mut dy: Vec<Vec<Option<RVClass>>> = vec![vec![None; n]; n];
    for i in 0..n {
        for j in 0..n {
            if i != j {
                dx[i][j] = Some(xs[i].0.sub(&xs[j].0)?.rv()?);
                dy[i][j] = Some(ys[i].0.sub(&ys[j].0)?.rv()?);
            }
        }
    }
    let mut found = Vec::new();
    let mut assign: Vec<usize> = Vec::with_capacity(n);
    let mut used = vec![false; n];
    search(
        xs, ys, &dx, &dy, &mut assign, &mut used, &mut found, max_found,
    );
    return Ok(found);

    fn search(
        xs: &[(KVector, u32)],
        ys: &[(KVector, u32)],
        dx: &[Vec<Option<RVClass>>],
        dy: &[Vec<Option<RVClass>>],
        assign: &mut Vec<usize>,
        used: &mut Vec<bool>,
        found: &mut Vec<Vec<usize>>,
        max_found: usize,
    ) {
        if found.len() >= max_found {
            return;
        }
        let k = assign.len();
        if k == xs.len() {
            found.push(assign.clone());
            return;
        }
        for cand in 0..ys.len() {
            if used[cand] || xs[k].1 != ys[cand].1 {
                continue;
            }
            let ok = (0..k).all(|i| {
                let a = dx[i][k].as_ref().unwrap();
                let b = dy[assign[i]][cand].as_ref().unwrap();
                a.approx_eq(b)
            });
            if ok {
                assign.push(cand);
                used[cand] = true;
                search(xs, ys, dx, dy, assign, used, found, max_found);
                used[cand] = false;
                assign.pop();
            }
        }
    }
}

/// The unique risometric bijection between two point sets, if one exists.
pub fn find_risometry(xs: &[KVector], ys: &[KVector]) -> Result<Option<PointMap>> {
    let xl: Vec<(KVector, u32)> = xs.iter().map(|x| (x.clone(), 0)).collect();
    let yl: Vec<(KVector, u32)> = ys.iter().map(|y| (y.clone(), 0)).collect();
    let found = find_labeled_risometries(&xl, &yl, 1)?;
    match found.first() {
        None => Ok(None),
        Some(assign) => {
            let pairs = assign
                .iter()
                .enumerate()
                .map(|(i, &j)| (xs[i].clone(), ys[j].clone()))
                .collect();
            Ok(Some(PointMap::new(pairs)?))
        }
    }
}

// ---------------------------------------------------------------------------
// translater samples

/// A sampled fiber-to-fiber map family `α_{q,q'}` over an exhibition of a
/// residue subspace.  Each entry records sampled values of one `α_{q,q'}`.
#[derive(Debug, Clone)]
pub struct TranslaterSample {
    /// Exhibition coordinates of `target`.
    pub proj: Vec<usize>,
    /// The residue subspace the displacement directions must lie in.
    pub target: ResSubspace,
    /// Base points `q` in projected coordinates.
    pub bases: Vec<KVector>,
    /// Sampled maps: `(from, to, sampled point pairs, optional labels)`.
    pub entries: Vec<TranslaterEntry>,
}

#[derive(Debug, Clone)]
pub struct TranslaterEntry {
    pub from: usize,
    pub to: usize,
    /// Sampled `(z, α(z))` pairs.
    pub points: Vec<(KVector, KVector)>,
    /// Optional value labels `(χ(z), χ(α(z)))` per sampled point.
    pub labels: Option<Vec<(u32, u32)>>,
}

/// Per-condition outcome of a translater-sample validation.
#[derive(Debug, Clone)]
pub struct TranslaterReport {
    /// χ ∘ α = χ on labeled samples.
    pub values_respected: Option<(bool, String)>,
    /// α_{q',q''} ∘ α_{q,q'} = α_{q,q''} on sampled compositions.
    pub composition: (bool, String),
    /// Displacement directions lie in the target subspace.
    pub directions: (bool, String),
    /// Every sampled α passes the risometry check.
    pub risometries: (bool, String),
}

impl TranslaterReport {
    pub fn all_pass(&self) -> bool {
        self.values_respected.as_ref().map(|(b, _)| *b).unwrap_or(true)
            && self.composition.0
            && self.directions.0
            && self.risometries.0
    }
}

/// Validates a translater sample: value preservation (when labels are
/// given), composability on closed triples, displacement directions inside
/// the target space, and the risometry property of each sampled map.
pub fn check_translater_samples(sample: &TranslaterSample) -> Result<TranslaterReport> {
    // identity on diagonal samples
    for e in &sample.entries {
        if e.from == e.to {
            for (z, az) in &e.points {
                if !same_point_at_prec(z, az)? {
                    return Err(Error::Input(
                        "diagonal map sample is not the identity".into(),
                    ));
                }
            }
        }
    }

    // (1) labels
    let mut any_labels = false;
    let mut values_ok = true;
    let mut values_msg = String::from("all labeled samples preserved");
    'outer1: for e in &sample.entries {
        if let Some(labels) = &e.labels {
            any_labels = true;
            for (k, (lz, laz)) in labels.iter().enumerate() {
                if lz != laz {
                    values_ok = false;
                    values_msg = format!(
                        "entry {}→{} sample {} maps label {} to {}",
                        e.from, e.to, k, lz, laz
                    );
                    break 'outer1;
                }
            }
        }
    }

    // (2) composability on sampled triples
    let mut comp_ok = true;
    let mut comp_msg = String::from("all sampled compositions agree");
    let mut tested = 0usize;
    'outer2: for e1 in &sample.entries {
        for e2 in &sample.entries {
            if e2.from != e1.to || e1.from == e1.to || e2.from == e2.to {
                continue;
            }
            for (z, az) in &e1.points {
                // the image must be a sampled source of e2
                let mut mid: Option<&KVector> = None;
                for (w, aw) in &e2.points {
                    if same_point_at_prec(az, w)? {
                        mid = Some(aw);
                        break;
                    }
                }
                let Some(az2) = mid else { continue };
                // a round trip composes to the (implicit) identity
                if e1.from == e2.to {
                    tested += 1;
                    if !same_point_at_prec(az2, z)? {
                        comp_ok = false;
                        comp_msg = format!(
                            "α_{{{},{}}} ∘ α_{{{},{}}} is not the identity at a sampled point",
                            e1.to, e2.to, e1.from, e1.to
                        );
                        break 'outer2;
                    }
                    continue;
                }
                // closure: (from, to) = (e1.from, e2.to) must be sampled at z
                let direct = sample.entries.iter().find(|e| {
                    e.from == e1.from && e.to == e2.to
                });
                let Some(direct) = direct else {
                    return Err(Error::SampleClosure(format!(
                        "composition {}→{}→{} sampled but {}→{} is not",
                        e1.from, e1.to, e2.to, e1.from, e2.to
                    )));
                };
                let mut found = false;
                for (w, aw) in &direct.points {
                    if same_point_at_prec(z, w)? {
                        found = true;
                        tested += 1;
                        if !same_point_at_prec(aw, az2)? {
                            comp_ok = false;
                            comp_msg = format!(
                                "α_{{{},{}}} ∘ α_{{{},{}}} ≠ α_{{{},{}}} at a sampled point",
                                e1.to, e2.to, e1.from, e1.to, e1.from, e2.to
                            );
                            break 'outer2;
                        }
                        break;
                    }
                }
                if !found {
                    return Err(Error::SampleClosure(format!(
                        "entry {}→{} misses the composite sample point",
                        e1.from, e2.to
                    )));
                }
            }
        }
    }
    if comp_ok && tested == 0 {
        comp_msg = "no composable triples in the sample".into();
    }

    // (3) displacement directions
    let mut dir_ok = true;
    let mut dir_msg = String::from("all displacement directions inside the target space");
    'outer3: for e in &sample.entries {
        if e.from == e.to {
            continue;
        }
        for (z, az) in &e.points {
            let d = az.sub(z)?;
            if d.is_exact_zero() {
                continue;
            }
            let line = dir(&d)?;
            if !sample.target.contains_space(&line) {
                dir_ok = false;
                dir_msg = format!(
                    "entry {}→{} moves a point in direction outside the target space",
                    e.from, e.to
                );
                break 'outer3;
            }
        }
    }

    // each sampled map is a risometry
    let mut riso_ok = true;
    let mut riso_msg = String::from("all sampled maps pass the risometry check");
    for e in &sample.entries {
        if e.points.len() < 2 {
            continue;
        }
        let map = PointMap::new(e.points.clone())?;
        if let RisoVerdict::Violation { i, j } = check_risometry(&map)? {
            riso_ok = false;
            riso_msg = format!(
                "entry {}→{} violates the risometry property at sampled points {} and {}",
                e.from, e.to, i, j
            );
            break;
        }
    }

    Ok(TranslaterReport {
        values_respected: if any_labels { Some((values_ok, values_msg)) } else { None },
        composition: (comp_ok, comp_msg),
        directions: (dir_ok, dir_msg),
        risometries: (riso_ok, riso_msg),
    })
}

// ---------------------------------------------------------------------------
// the square-curve example family

/// Sample data for the square-curve trivialization near `(a, a^2)` on the
/// ball of radius `v(a)`.  With `big_parameter`, `a = t^{-2}` (so `v(a) > 1`
/// as in the written example) and the curve is steep there: points move
/// along the fibers of `x - sqrt(y) = const`, i.e.
/// `α_{q,q'}(x, y) = (x - sqrt(q) + sqrt(q'), q')` for `q` along the second
/// coordinate.  With the flag off, `a = t^2` (the `v(a) < 1` variant) and
/// the curve is a shallow graph over `x`, so the arcs are its vertical
/// translates and `q` runs along the first coordinate.
pub fn square_translater_sample(
    big_parameter: bool,
    n_fibers: usize,
    n_points: usize,
    rng: &mut impl rand::Rng,
) -> Result<TranslaterSample> {
    let one = num_complex::Complex64::new(1.0, 0.0);
    let a = if big_parameter {
        PSeries::monomial(crate::gamma::exp_int(-2), one)
    } else {
        PSeries::monomial(crate::gamma::exp_int(2), one)
    };
    let a2 = a.mul(&a)?;
    let base_exp = match a.val()? {
        GammaValue::Finite(e) => e,
        _ => unreachable!(),
    };
    // offsets strictly inside the ball: v < v(a)
    let mut offsets = vec![PSeries::zero()];
    for k in 1..n_fibers.max(2) {
        let off_e = &base_exp + crate::gamma::exp(k as i64, 2);
        let c = num_complex::Complex64::new(rng.gen_range(0.5..1.5), 0.0);
        offsets.push(PSeries::monomial(off_e, c));
    }
    let mut arc_offsets = vec![PSeries::zero()];
    for _ in 1..n_points.max(2) {
        let off_e = &base_exp + crate::gamma::exp(rng.gen_range(1..6), 2);
        let c = num_complex::Complex64::new(rng.gen_range(0.2..1.5), 0.0)
            * if rng.gen_bool(0.5) { -one } else { one };
        arc_offsets.push(PSeries::monomial(off_e, c));
    }

    let (proj, target, bases, point_on): (
        Vec<usize>,
        ResSubspace,
        Vec<PSeries>,
        Box<dyn Fn(&PSeries, &PSeries) -> Result<KVector>>,
    ) = if big_parameter {
        // fibers y = a^2 + offset; arcs x = b - a + sqrt(y)
        let bases: Vec<PSeries> = offsets
            .iter()
            .map(|o| a2.add(o))
            .collect::<Result<_>>()?;
        let f = move |b_off: &PSeries, y: &PSeries| -> Result<KVector> {
            let root = y.sqrt(DEFAULT_DEPTH)?;
            let x = b_off.add(&root)?;
            Ok(KVector::new(vec![x, y.clone()]))
        };
        (
            vec![1],
            ResSubspace::line(&[num_complex::Complex64::new(0.0, 0.0), one]),
            bases,
            Box::new(f),
        )
    } else {
        // fibers x = a + offset; arcs y = x^2 + b
        let bases: Vec<PSeries> = offsets
            .iter()
            .map(|o| a.add(o))
            .collect::<Result<_>>()?;
        let f = move |b_off: &PSeries, x: &PSeries| -> Result<KVector> {
            let y = x.mul(x)?.add(b_off)?;
            Ok(KVector::new(vec![x.clone(), y]))
        };
        (
            vec![0],
            ResSubspace::line(&[one, num_complex::Complex64::new(0.0, 0.0)]),
            bases,
            Box::new(f),
        )
    };

    let mut entries = Vec::new();
    for i in 0..bases.len() {
        for j in 0..bases.len() {
            if i == j {
                continue;
            }
            let mut points = Vec::new();
            for b in &arc_offsets {
                points.push((point_on(b, &bases[i])?, point_on(b, &bases[j])?));
            }
            entries.push(TranslaterEntry { from: i, to: j, points, labels: None });
        }
    }
    Ok(TranslaterSample {
        proj,
        target,
        bases: bases.into_iter().map(|b| KVector::new(vec![b])).collect(),
        entries,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gamma::{exp, exp_int};
    use crate::puiseux::Coeff;
    use crate::vla::affdir;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn t() -> PSeries {
        PSeries::var()
    }

    fn re(x: f64) -> Coeff {
        Coeff::new(x, 0.0)
    }

    fn pt1(s: PSeries) -> KVector {
        KVector::new(vec![s])
    }

    fn random_points(rng: &mut StdRng, n: usize, count: usize) -> Vec<KVector> {
        let mut out: Vec<KVector> = Vec::new();
        while out.len() < count {
            let coords: Vec<PSeries> = (0..n)
                .map(|_| {
                    let e = exp(rng.gen_range(-3..8), rng.gen_range(1..3));
                    let c = Coeff::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
                    if c.norm() < 0.2 {
                        PSeries::zero()
                    } else {
                        PSeries::monomial(e, c)
                    }
                })
                .collect();
            let cand = KVector::new(coords);
            if out
                .iter()
                .all(|p| !p.sub(&cand).unwrap().is_zero_at_prec())
            {
                out.push(cand);
            }
        }
        out
    }

    #[test]
    fn identity_is_risometry() {
        let mut rng = StdRng::seed_from_u64(1);
        let pts = random_points(&mut rng, 2, 5);
        let map = PointMap::new(pts.iter().map(|p| (p.clone(), p.clone())).collect()).unwrap();
        assert!(check_risometry(&map).unwrap().is_ok());
    }

    #[test]
    fn one_plus_t_scaling_is_risometry() {
        let mut rng = StdRng::seed_from_u64(2);
        let pts = random_points(&mut rng, 2, 5);
        let factor = PSeries::one().add(&t()).unwrap();
        let map = PointMap::new(
            pts.iter()
                .map(|p| (p.clone(), p.scale_series(&factor).unwrap()))
                .collect(),
        )
        .unwrap();
        assert!(check_risometry(&map).unwrap().is_ok());
    }

    #[test]
    fn doubling_is_not_a_risometry() {
        let x0 = pt1(PSeries::zero());
        let x1 = pt1(PSeries::one());
        let map = PointMap::new(vec![
            (x0.clone(), x0.clone()),
            (x1.clone(), x1.scale(re(2.0))),
        ])
        .unwrap();
        assert!(!check_risometry(&map).unwrap().is_ok());
    }

    #[test]
    fn find_risometry_examples() {
        // singletons: the only map works
        let found = find_risometry(&[pt1(t())], &[pt1(t().scale(re(3.0)))]).unwrap();
        assert!(found.is_some());
        // X = {0, 1}, Y = {0, 1+t}
        let found = find_risometry(
            &[pt1(PSeries::zero()), pt1(PSeries::one())],
            &[pt1(PSeries::zero()), pt1(PSeries::one().add(&t()).unwrap())],
        )
        .unwrap()
        .unwrap();
        assert!(found.pairs[1].1.coords[0].approx_eq(&PSeries::one().add(&t()).unwrap()));
        // X = {0, 1}, Y = {0, 2}: rv(1) != rv(2) kills both bijections
        let none = find_risometry(
            &[pt1(PSeries::zero()), pt1(PSeries::one())],
            &[pt1(PSeries::zero()), pt1(PSeries::constant(re(2.0)))],
        )
        .unwrap();
        assert!(none.is_none());
    }

    #[test]
    fn size_cap_enforced() {
        let mut rng = StdRng::seed_from_u64(3);
        let xs = random_points(&mut rng, 1, 9);
        let ys = random_points(&mut rng, 1, 9);
        assert!(matches!(
            find_risometry(&xs, &ys),
            Err(Error::SizeCap(_))
        ));
    }

    #[test]
    fn risometries_between_finite_sets_are_unique() {
        let mut rng = StdRng::seed_from_u64(4);
        for round in 0..200 {
            let n = rng.gen_range(1..3usize);
            let count = rng.gen_range(1..=6usize);
            let xs = random_points(&mut rng, n, count);
            // half the rounds: a genuinely risometric image; other half random
            let ys: Vec<KVector> = if round % 2 == 0 {
                let factor = PSeries::one().add(&t().scale(re(rng.gen_range(-1.0..1.0)))).unwrap();
                let shift = random_points(&mut rng, n, 1).pop().unwrap();
                xs.iter()
                    .map(|x| x.scale_series(&factor).unwrap().add(&shift).unwrap())
                    .collect()
            } else {
                random_points(&mut rng, n, count)
            };
            let xl: Vec<(KVector, u32)> = xs.into_iter().map(|x| (x, 0)).collect();
            let yl: Vec<(KVector, u32)> = ys.into_iter().map(|y| (y, 0)).collect();
            let found = find_labeled_risometries(&xl, &yl, 2).unwrap();
            assert!(found.len() <= 1, "two distinct risometries found");
        }
    }

    #[test]
    fn risometry_preserves_affdir() {
        let mut rng = StdRng::seed_from_u64(5);
        for _ in 0..50 {
            let xs = random_points(&mut rng, 2, 4);
            let factor = PSeries::one().add(&t().scale(re(0.7))).unwrap();
            let ys: Vec<KVector> = xs
                .iter()
                .map(|x| x.scale_series(&factor).unwrap())
                .collect();
            let map = PointMap::new(
                xs.iter().cloned().zip(ys.iter().cloned()).collect(),
            )
            .unwrap();
            if check_risometry(&map).unwrap().is_ok() {
                assert!(affdir(&xs).unwrap().approx_eq(&affdir(&ys).unwrap()));
            }
        }
    }

    #[test]
    fn riso_iff_projected_riso_on_exhibition() {
        // points along a graph over the first coordinate
        let mut rng = StdRng::seed_from_u64(6);
        for _ in 0..50 {
            let mut xs = Vec::new();
            for _ in 0..4 {
                let x = PSeries::monomial(exp(rng.gen_range(1..8), 1), re(rng.gen_range(0.5..2.0)));
                let y = x.mul(&x).unwrap().scale(re(0.25));
                xs.push(KVector::new(vec![x, y]));
            }
            let xs: Vec<KVector> = {
                let mut uniq: Vec<KVector> = Vec::new();
                for x in xs {
                    if uniq.iter().all(|u| !u.sub(&x).unwrap().is_zero_at_prec()) {
                        uniq.push(x);
                    }
                }
                uniq
            };
            if xs.len() < 2 {
                continue;
            }
            let ad = affdir(&xs).unwrap();
            if !crate::vla::is_exhibition(&[0], &ad) {
                continue;
            }
            let factor = PSeries::one().add(&t().scale(re(0.5))).unwrap();
            let ys: Vec<KVector> = xs
                .iter()
                .map(|x| x.scale_series(&factor).unwrap())
                .collect();
            let full = PointMap::new(xs.iter().cloned().zip(ys.iter().cloned()).collect()).unwrap();
            let proj = PointMap::new(
                xs.iter()
                    .map(|x| x.project(&[0]))
                    .zip(ys.iter().map(|y| y.project(&[0])))
                    .collect(),
            )
            .unwrap();
            let full_ok = check_risometry(&full).unwrap().is_ok();
            let proj_ok = check_risometry(&proj).unwrap().is_ok()
                && affdir(&xs).unwrap().approx_eq(&affdir(&ys).unwrap());
            assert_eq!(full_ok, proj_ok);
        }
    }

    #[test]
    fn translation_family_passes() {
        // α_{q,q'}(z) = z + lift(q' - q) along the second coordinate
        let n_fibers = 3usize;
        let ys: Vec<PSeries> = (0..n_fibers)
            .map(|k| PSeries::monomial(exp_int(k as i64 + 1), re(1.0)))
            .collect();
        let zs: Vec<PSeries> = vec![PSeries::zero(), PSeries::one(), t()];
        let mut entries = Vec::new();
        for i in 0..n_fibers {
            for j in 0..n_fibers {
                if i == j {
                    continue;
                }
                let points: Vec<(KVector, KVector)> = zs
                    .iter()
                    .map(|x| {
                        (
                            KVector::new(vec![x.clone(), ys[i].clone()]),
                            KVector::new(vec![x.clone(), ys[j].clone()]),
                        )
                    })
                    .collect();
                entries.push(TranslaterEntry {
                    from: i,
                    to: j,
                    points,
                    labels: Some(vec![(7, 7); zs.len()]),
                });
            }
        }
        let sample = TranslaterSample {
            proj: vec![1],
            target: ResSubspace::line(&[re(0.0), re(1.0)]),
            bases: ys.iter().map(|y| KVector::new(vec![y.clone()])).collect(),
            entries,
        };
        let report = check_translater_samples(&sample).unwrap();
        assert!(report.all_pass(), "{report:?}");
    }

    #[test]
    fn square_family_passes() {
        let mut rng = StdRng::seed_from_u64(7);
        let sample = square_translater_sample(true, 4, 3, &mut rng).unwrap();
        let report = check_translater_samples(&sample).unwrap();
        assert!(report.all_pass(), "{report:?}");
        // the v(a) < 1 variant behind the flag
        let mut rng = StdRng::seed_from_u64(8);
        let sample = square_translater_sample(false, 4, 3, &mut rng).unwrap();
        let report = check_translater_samples(&sample).unwrap();
        assert!(report.all_pass(), "{report:?}");
    }

    #[test]
    fn displacement_outside_target_fails() {
        // family moving points with a component outside the target space
        let p = |x: f64, y: PSeries| KVector::new(vec![PSeries::constant(re(x)), y]);
        let entries = vec![TranslaterEntry {
            from: 0,
            to: 1,
            points: vec![
                (p(0.0, t()), p(1.0, t().mul(&t()).unwrap())),
                (p(1.0, t()), p(2.0, t().mul(&t()).unwrap())),
            ],
            labels: None,
        }];
        let sample = TranslaterSample {
            proj: vec![1],
            target: ResSubspace::line(&[re(0.0), re(1.0)]),
            bases: vec![
                KVector::new(vec![t()]),
                KVector::new(vec![t().mul(&t()).unwrap()]),
            ],
            entries,
        };
        let report = check_translater_samples(&sample).unwrap();
        assert!(!report.directions.0);
    }
}
