//! Sampled directional triviality of a stratification on a ball.
//!
//! For a one-dimensional residue direction `L`, the ball is sliced into
//! fibers of a coordinate exhibition of `L`.  If the stratification is
//! `L`-trivial on the ball, a translater maps each fiber's finite stratum
//! intersections risometrically onto any other fiber's, moving points only
//! in directions inside `L`.  The checks below test exactly these necessary
//! conditions on finitely many sampled fibers, so `NonTrivial` verdicts are
//! witnessed and `TrivialOnSample` is sampling evidence.

use num_complex::Complex64;
use rand::Rng;

use crate::config::Config;
use crate::error::{Error, Result};
use crate::gamma::{exp, Exp, GammaValue};
use crate::puiseux::PSeries;
use crate::riso::find_labeled_risometries;
use crate::vla::{dir, KVector, ResSubspace};

use super::{sample_fiber_points, Ball, StratSpec, Stratum};

/// Verdict of a sampled triviality check.
#[derive(Debug, Clone)]
pub enum TrivialVerdict {
    /// All sampled fiber pairs admit direction-constrained matchings.
    TrivialOnSample { fibers: usize, pairs: usize },
    /// A witnessed failure between two sampled fibers.
    NonTrivial { reason: String },
    /// Solver or size-cap failure; no verdict.
    Inconclusive { reason: String },
}

impl TrivialVerdict {
    pub fn is_non_trivial(&self) -> bool {
        matches!(self, TrivialVerdict::NonTrivial { .. })
    }
    pub fn is_trivial_on_sample(&self) -> bool {
        matches!(self, TrivialVerdict::TrivialOnSample { .. })
    }
}

/// Tests `L`-triviality of the stratification on the ball by fiber
/// sampling; `L` must be one-dimensional.
pub fn is_dir_trivial_on_ball(
    spec: &StratSpec,
    ball: &Ball,
    line: &ResSubspace,
    n_fibers: usize,
    cfg: &Config,
) -> Result<TrivialVerdict> {
    if line.dim() != 1 {
        return Err(Error::Input("direction must be one-dimensional".into()));
    }
    if ball.center.dim() != spec.n {
        return Err(Error::DimensionMismatch("ball vs ambient".into()));
    }
    // exhibition coordinate: any coordinate where the direction has a
    // residue component (the largest one, for stability)
    let slice = &line.basis[0];
    let mut exh = 0usize;
    let mut best = 0.0f64;
    for (i, c) in slice.iter().enumerate() {
        if c.norm() > best {
            best = c.norm();
            exh = i;
        }
    }
    if best <= crate::vla::PIVOT_EPS {
        return Err(Error::Input("degenerate direction".into()));
    }

    let mut rng = cfg.rng("trivial-fibers");
    let offsets = fiber_offsets(ball, n_fibers, &mut rng);

    match spec.n {
        2 => check_plane(spec, ball, line, exh, &offsets, cfg),
        3 => check_surface(spec, ball, line, exh, &offsets, cfg),
        _ => Err(Error::Input("ambient dimension must be 2 or 3".into())),
    }
}

/// Fiber base offsets spread over the scales inside the ball (the center
/// fiber first).
fn fiber_offsets(ball: &Ball, n_fibers: usize, rng: &mut impl Rng) -> Vec<PSeries> {
    let base = match &ball.radius {
        GammaValue::Finite(e) => e.clone(),
        _ => exp(-3, 1),
    };
    let mut out = vec![PSeries::zero()];
    let mut k = 0i64;
    while out.len() < n_fibers {
        k += 1;
        // exponents strictly inside the radius for open balls, from the
        // radius itself for closed ones
        let start = if ball.open { 1i64 } else { 0 };
        let step = exp(start + k, 2);
        let e = &base + step;
        let phase = rng.gen_range(0.0..std::f64::consts::TAU);
        let mag = rng.gen_range(0.5..1.5);
        let c = if k % 3 == 0 {
            Complex64::from_polar(mag, phase)
        } else if k % 3 == 1 {
            Complex64::new(mag, 0.0)
        } else {
            Complex64::new(-mag, 0.0)
        };
        out.push(PSeries::monomial(e, c));
    }
    out
}

fn soft_err(e: Error) -> Option<TrivialVerdict> {
    match e {
        Error::PrecisionExhausted(msg) => Some(TrivialVerdict::Inconclusive {
            reason: format!("precision: {msg}"),
        }),
        Error::SizeCap(c) => Some(TrivialVerdict::Inconclusive {
            reason: format!("fiber intersection above the matching cap {c}"),
        }),
        Error::UnsupportedFamily(msg) => Some(TrivialVerdict::Inconclusive {
            reason: format!("solver: {msg}"),
        }),
        _ => None,
    }
}

fn run_soft<T>(r: Result<T>) -> std::result::Result<T, std::result::Result<TrivialVerdict, Error>> {
    match r {
        Ok(v) => Ok(v),
        Err(e) => match soft_err(e.clone()) {
            Some(verdict) => Err(Ok(verdict)),
            None => Err(Err(e)),
        },
    }
}

macro_rules! try_soft {
    ($expr:expr) => {
        match run_soft($expr) {
            Ok(v) => v,
            Err(out) => return out,
        }
    };
}

/// Plane case: fibers meet every lower stratum in finitely many points;
/// match them with the unique finite risometry and test displacements.
fn check_plane(
    spec: &StratSpec,
    ball: &Ball,
    line: &ResSubspace,
    exh: usize,
    offsets: &[PSeries],
    cfg: &Config,
) -> Result<TrivialVerdict> {
    let center_q = ball.center.coords[exh].clone();
    let mut fibers: Vec<(PSeries, Vec<(KVector, u32)>)> = Vec::new();
    for off in offsets {
        let q = try_soft!(center_q.add(off));
        let pts = try_soft!(sample_fiber_points(
            spec,
            &[exh],
            std::slice::from_ref(&q),
            ball,
            cfg.depth
        ));
        let labeled = pts.into_iter().map(|(p, d)| (p, d as u32)).collect();
        fibers.push((q, labeled));
    }
    let nf = fibers.len();
    let mut pairs = 0usize;
    for i in 0..nf {
        for j in (i + 1)..nf {
            pairs += 1;
            let (qa, xa) = &fibers[i];
            let (qb, xb) = &fibers[j];
            // per-stratum cardinalities
            for d in 0..spec.strata.len() {
                let ca = xa.iter().filter(|(_, l)| *l == d as u32).count();
                let cb = xb.iter().filter(|(_, l)| *l == d as u32).count();
                if ca != cb {
                    return Ok(TrivialVerdict::NonTrivial {
                        reason: format!(
                            "fibers at {qa} and {qb} meet stratum {d} in {ca} vs {cb} points"
                        ),
                    });
                }
            }
            if xa.is_empty() {
                continue;
            }
            let matchings = try_soft!(find_labeled_risometries(xa, xb, 1));
            let Some(assign) = matchings.first() else {
                return Ok(TrivialVerdict::NonTrivial {
                    reason: format!(
                        "no risometric matching between the fibers at {qa} and {qb}"
                    ),
                });
            };
            for (k, &m) in assign.iter().enumerate() {
                let disp = try_soft!(xb[m].0.sub(&xa[k].0));
                if disp.is_zero_at_prec() {
                    continue;
                }
                let dline = try_soft!(dir(&disp));
                if !line.contains_space(&dline) {
                    return Ok(TrivialVerdict::NonTrivial {
                        reason: format!(
                            "matched points between fibers at {qa} and {qb} move in a direction outside the given line"
                        ),
                    });
                }
            }
        }
    }
    Ok(TrivialVerdict::TrivialOnSample { fibers: nf, pairs })
}

/// Surface case (trumpet-like, `n = 3`): fibers are planes and meet the
/// surface stratum in curves, so the fibers are probed at shared values of a
/// second coordinate and roots are matched probe-by-probe.  The probe
/// displacement reflects the translater displacement whenever the fiber
/// curve has slope at most 1 over the probe coordinate, which is checked.
fn check_surface(
    spec: &StratSpec,
    ball: &Ball,
    line: &ResSubspace,
    exh: usize,
    offsets: &[PSeries],
    cfg: &Config,
) -> Result<TrivialVerdict> {
    let center_q = ball.center.coords[exh].clone();
    // point strata are matched as whole fiber intersections
    let mut point_sets: Vec<Vec<(KVector, u32)>> = Vec::new();
    for off in offsets {
        let q = try_soft!(center_q.add(off));
        let mut pts = Vec::new();
        for (d, stratum) in spec.strata.iter().enumerate() {
            if let Stratum::Points(ps) = stratum {
                for p in ps {
                    let same = try_soft!(p.coords[exh].sub(&q)).is_zero_at_prec();
                    if same && try_soft!(ball.contains(p)) {
                        pts.push((p.clone(), d as u32));
                    }
                }
            }
        }
        point_sets.push(pts);
    }
    for j in 1..point_sets.len() {
        if point_sets[j].len() != point_sets[0].len() {
            return Ok(TrivialVerdict::NonTrivial {
                reason: format!(
                    "point strata meet fiber 0 in {} points but fiber {j} in {}",
                    point_sets[0].len(),
                    point_sets[j].len()
                ),
            });
        }
    }

    // probe the surface stratum
    let Some(surf_d) = spec.variety_index() else {
        return Ok(TrivialVerdict::TrivialOnSample {
            fibers: offsets.len(),
            pairs: offsets.len() * (offsets.len() - 1) / 2,
        });
    };
    let others: Vec<usize> = (0..3).filter(|&i| i != exh).collect();
    let mut rng = cfg.rng("trivial-probes");
    let mut checked_any_probe = false;
    let mut pairs = 0usize;
    for &probe_coord in &others {
        let solve_coord = others.iter().copied().find(|&i| i != probe_coord).unwrap();
        let probes = probe_values(ball, probe_coord, 4, &mut rng);
        // roots per (fiber, probe)
        let mut table: Vec<Vec<Vec<KVector>>> = Vec::new();
        let mut solver_trouble = false;
        for off in offsets {
            let q = try_soft!(center_q.add(off));
            let mut per_probe = Vec::new();
            for pv in &probes {
                let frozen = vec![exh, probe_coord];
                let vals = vec![q.clone(), pv.clone()];
                match super::solve_variety_fiber(spec, &frozen, &vals, cfg.depth) {
                    Ok(roots) => {
                        let mut kept = Vec::new();
                        for r in roots {
                            if try_soft!(ball.contains(&r)) {
                                kept.push(r);
                            }
                        }
                        per_probe.push(kept);
                    }
                    Err(Error::PrecisionExhausted(_)) => {
                        solver_trouble = true;
                        per_probe.push(Vec::new());
                    }
                    Err(e) => match soft_err(e.clone()) {
                        Some(v) => return Ok(v),
                        None => return Err(e),
                    },
                }
            }
            table.push(per_probe);
        }
        if solver_trouble {
            continue;
        }
        for i in 0..table.len() {
            for j in (i + 1)..table.len() {
                pairs += 1;
                for (pi, _) in probes.iter().enumerate() {
                    let ra = &table[i][pi];
                    let rb = &table[j][pi];
                    if ra.len() != rb.len() {
                        return Ok(TrivialVerdict::NonTrivial {
                            reason: format!(
                                "surface stratum meets matching probes of fibers {i} and {j} in {} vs {} points",
                                ra.len(),
                                rb.len()
                            ),
                        });
                    }
                    let Some(pairing) = pair_roots(ra, rb, solve_coord)? else {
                        // ambiguous nearest-root pairing: no verdict
                        continue;
                    };
                    for (a, b) in pairing {
                        // slope guard: the fiber curve must be at most
                        // 1-Lipschitz over the probe coordinate here
                        if !try_soft!(slope_at_most_one(spec, &a, solve_coord, probe_coord, cfg)) {
                            continue;
                        }
                        checked_any_probe = true;
                        let disp = try_soft!(b.sub(&a));
                        if disp.is_zero_at_prec() {
                            continue;
                        }
                        let dline = try_soft!(dir(&disp));
                        if !line.contains_space(&dline) {
                            return Ok(TrivialVerdict::NonTrivial {
                                reason: format!(
                                    "probe-matched surface points between fibers {i} and {j} move in a direction outside the given line"
                                ),
                            });
                        }
                    }
                }
            }
        }
        let _ = surf_d;
    }
    if !checked_any_probe {
        return Ok(TrivialVerdict::Inconclusive {
            reason: "no probe satisfied the slope guard".into(),
        });
    }
    Ok(TrivialVerdict::TrivialOnSample { fibers: offsets.len(), pairs })
}

/// Values for the secondary (probe) coordinate, inside the ball.
fn probe_values(ball: &Ball, coord: usize, count: usize, rng: &mut impl Rng) -> Vec<PSeries> {
    let center = ball.center.coords[coord].clone();
    let base = match &ball.radius {
        GammaValue::Finite(e) => e.clone(),
        _ => exp(-3, 1),
    };
    let mut out = vec![center.clone()];
    let mut k = 0i64;
    while out.len() < count {
        k += 1;
        let e: Exp = &base + exp(2 * k + 1, 2);
        let c = Complex64::new(rng.gen_range(0.4..1.4), rng.gen_range(-0.4..0.4));
        if let Ok(v) = center.add(&PSeries::monomial(e, c)) {
            out.push(v);
        }
    }
    out
}

/// Pairs each root with its nearest counterpart (largest valuation of the
/// difference in the solve coordinate); `None` when the nearest-root map is
/// not a bijection.
fn pair_roots(
    ra: &[KVector],
    rb: &[KVector],
    solve_coord: usize,
) -> Result<Option<Vec<(KVector, KVector)>>> {
    let mut used = vec![false; rb.len()];
    let mut out = Vec::new();
    for a in ra {
        let mut best: Option<(usize, GammaValue)> = None;
        for (k, b) in rb.iter().enumerate() {
            let d = a.coords[solve_coord].sub(&b.coords[solve_coord])?;
            let v = if d.is_zero_at_prec() {
                GammaValue::Zero
            } else {
                d.val()?
            };
            match &best {
                Some((_, bv)) if *bv <= v => {}
                _ => best = Some((k, v)),
            }
        }
        let Some((k, _)) = best else { return Ok(None) };
        if used[k] {
            return Ok(None);
        }
        used[k] = true;
        out.push((a.clone(), rb[k].clone()));
    }
    Ok(Some(out))
}

/// Whether `|d(solve)/d(probe)| <= 1` valuatively at the given surface point.
fn slope_at_most_one(
    spec: &StratSpec,
    at: &KVector,
    solve_coord: usize,
    probe_coord: usize,
    _cfg: &Config,
) -> Result<bool> {
    let polys = spec
        .variety_polys()
        .ok_or_else(|| Error::Input("no variety stratum".into()))?;
    let f = &polys[0];
    let dp = f.partial(probe_coord).eval(&at.coords)?;
    let ds = f.partial(solve_coord).eval(&at.coords)?;
    if dp.is_zero_at_prec() {
        // flat over the probe direction
        return Ok(true);
    }
    if ds.is_zero_at_prec() {
        return Ok(false);
    }
    let slope_val = dp.val()?.div_conv(&ds.val()?)?;
    Ok(slope_val <= GammaValue::one())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gamma::exp_int;
    use crate::puiseux::Coeff;
    use crate::strat::StratSpec;

    fn re(x: f64) -> Coeff {
        Coeff::new(x, 0.0)
    }

    fn mono(e: i64, c: f64) -> PSeries {
        PSeries::monomial(exp_int(e), re(c))
    }

    fn cfg() -> Config {
        Config { depth: 12, ..Config::default() }
    }

    #[test]
    fn ball_off_the_curve_is_trivial() {
        let cusp = StratSpec::cusp(3, 2).unwrap();
        let ball = Ball::open(
            KVector::new(vec![PSeries::constant(re(5.0)), PSeries::constant(re(7.0))]),
            GammaValue::finite_int(2),
        )
        .unwrap();
        let line = ResSubspace::line(&[re(1.0), re(0.0)]);
        let v = is_dir_trivial_on_ball(&cusp, &ball, &line, 8, &cfg()).unwrap();
        assert!(v.is_trivial_on_sample(), "{v:?}");
    }

    #[test]
    fn diagonal_direction_at_one_one_is_non_trivial() {
        let cusp = StratSpec::cusp(3, 2).unwrap();
        let ball = Ball::open(
            KVector::new(vec![PSeries::one(), PSeries::one()]),
            GammaValue::one(),
        )
        .unwrap();
        let line = ResSubspace::line(&[re(1.0), re(1.0)]);
        let v = is_dir_trivial_on_ball(&cusp, &ball, &line, 8, &cfg()).unwrap();
        assert!(v.is_non_trivial(), "{v:?}");
    }

    #[test]
    fn horizontal_direction_along_branch_is_trivial() {
        let cusp = StratSpec::cusp(3, 2).unwrap();
        let ball = Ball::open(
            KVector::new(vec![mono(2, 1.0), mono(3, 1.0)]),
            GammaValue::finite_int(2),
        )
        .unwrap();
        let line = ResSubspace::line(&[re(1.0), re(0.0)]);
        let v = is_dir_trivial_on_ball(&cusp, &ball, &line, 16, &cfg()).unwrap();
        assert!(v.is_trivial_on_sample(), "{v:?}");
    }

    #[test]
    fn cusp_tip_ball_is_non_trivial_horizontally() {
        // the ball around the origin sees the branch count drop at x = 0
        let cusp = StratSpec::cusp(3, 2).unwrap();
        let ball = Ball::open(KVector::zero(2), GammaValue::finite_int(1)).unwrap();
        let line = ResSubspace::line(&[re(1.0), re(0.0)]);
        let v = is_dir_trivial_on_ball(&cusp, &ball, &line, 8, &cfg()).unwrap();
        assert!(v.is_non_trivial(), "{v:?}");
    }

    #[test]
    fn trumpet_opposite_point_is_non_trivial_along_z() {
        let trumpet = StratSpec::trumpet();
        let witness = KVector::new(vec![mono(2, 1.0), PSeries::zero(), mono(3, -1.0)]);
        let ball = Ball::open(witness, GammaValue::finite_int(3)).unwrap();
        let line = ResSubspace::line(&[re(0.0), re(0.0), re(1.0)]);
        let v = is_dir_trivial_on_ball(&trumpet, &ball, &line, 8, &cfg()).unwrap();
        assert!(v.is_non_trivial(), "{v:?}");
    }
}
