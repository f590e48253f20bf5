//! Valued linear algebra over `K^n`.
//!
//! Directions and affine direction spaces, valuation-reduced bases,
//! subspace residues and lifts, exhibitions, the distance `Δ(U, W)` between
//! subspaces of equal dimension, and the isometry / risometry classification
//! of matrices.

use num_complex::Complex64;
use num_traits::Zero as NumZero;

use crate::error::{Error, Result};
use crate::gamma::{exp_int, Exp, GammaValue};
use crate::puiseux::{Coeff, PSeries, Prec, RVClass, COEFF_EPS, DEFAULT_DEPTH};

/// Rank decisions on residue matrices require pivots above this threshold
/// after row normalization; anything between the coefficient floor and this
/// margin is reported as a precision failure rather than decided.
pub const PIVOT_EPS: f64 = 1e-6;

/// Cap on elimination rounds in distance computations.
const ELIM_ROUNDS: usize = 200;

// ---------------------------------------------------------------------------
// vectors

/// A vector in `K^n`.
#[derive(Debug, Clone, PartialEq)]
pub struct KVector {
    pub coords: Vec<PSeries>,
}

impl KVector {
    pub fn new(coords: Vec<PSeries>) -> Self {
        KVector { coords }
    }

    pub fn zero(n: usize) -> Self {
        KVector {
            coords: vec![PSeries::zero(); n],
        }
    }

    /// Constant vector from residue coordinates.
    pub fn constant(coords: &[Coeff]) -> Self {
        KVector {
            coords: coords.iter().map(|c| PSeries::constant(*c)).collect(),
        }
    }

    pub fn standard(n: usize, i: usize) -> Self {
        let mut v = Self::zero(n);
        v.coords[i] = PSeries::one();
        v
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn add(&self, other: &KVector) -> Result<KVector> {
        let coords = self
            .coords
            .iter()
            .zip(&other.coords)
            .map(|(a, b)| a.add(b))
            .collect::<Result<_>>()?;
        Ok(KVector { coords })
    }

    pub fn sub(&self, other: &KVector) -> Result<KVector> {
        let coords = self
            .coords
            .iter()
            .zip(&other.coords)
            .map(|(a, b)| a.sub(b))
            .collect::<Result<_>>()?;
        Ok(KVector { coords })
    }

    pub fn neg(&self) -> KVector {
        KVector {
            coords: self.coords.iter().map(|c| c.neg()).collect(),
        }
    }

    pub fn scale_series(&self, s: &PSeries) -> Result<KVector> {
        let coords = self
            .coords
            .iter()
            .map(|c| c.mul(s))
            .collect::<Result<_>>()?;
        Ok(KVector { coords })
    }

    pub fn scale(&self, c: Coeff) -> KVector {
        KVector {
            coords: self.coords.iter().map(|x| x.scale(c)).collect(),
        }
    }

    pub fn mul_monomial(&self, e: &Exp, c: Coeff) -> KVector {
        KVector {
            coords: self.coords.iter().map(|x| x.mul_monomial(e, c)).collect(),
        }
    }

    /// Largest certified coordinate valuation together with the upper bound
    /// contributed by coordinates that vanish up to finite precision.
    pub fn val_with_uncertainty(&self) -> Result<(GammaValue, Option<GammaValue>)> {
        let mut best = GammaValue::Zero;
        let mut uncertain: Option<GammaValue> = None;
        for c in &self.coords {
            match c.val() {
                Ok(v) => {
                    if v > best {
                        best = v;
                    }
                }
                Err(_) => {
                    // zero up to finite precision: bounded by v <= <prec>
                    if let Prec::Exp(p) = c.prec() {
                        let bound = GammaValue::Finite(p.clone());
                        match &uncertain {
                            Some(u) if *u >= bound => {}
                            _ => uncertain = Some(bound),
                        }
                    }
                }
            }
        }
        if let Some(u) = &uncertain {
            if *u < best {
                uncertain = None;
            }
        }
        Ok((best, uncertain))
    }

    /// `v(a) = max_i v(a_i)`.
    pub fn val(&self) -> Result<GammaValue> {
        let (best, uncertain) = self.val_with_uncertainty()?;
        if uncertain.is_some() {
            return Err(Error::PrecisionExhausted(
                "vector valuation not certifiable".into(),
            ));
        }
        Ok(best)
    }

    pub fn is_exact_zero(&self) -> bool {
        self.coords.iter().all(|c| c.is_exact_zero())
    }

    pub fn is_zero_at_prec(&self) -> bool {
        self.coords.iter().all(|c| c.is_zero_at_prec())
    }

    pub fn rv(&self) -> Result<RVClass> {
        RVClass::of_parts(&self.coords)
    }

    /// Coordinate projection.
    pub fn project(&self, idx: &[usize]) -> KVector {
        KVector {
            coords: idx.iter().map(|&i| self.coords[i].clone()).collect(),
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::Value::Array(self.coords.iter().map(|c| c.to_json()).collect())
    }

    pub fn from_json(v: &serde_json::Value) -> Result<KVector> {
        let arr = v
            .as_array()
            .ok_or_else(|| Error::Input("vector must be an array of series".into()))?;
        let coords = arr.iter().map(PSeries::from_json).collect::<Result<_>>()?;
        Ok(KVector { coords })
    }
}

// ---------------------------------------------------------------------------
// residue linear algebra

pub(crate) fn cnorm(row: &[Coeff]) -> f64 {
    row.iter().map(|c| c.norm()).fold(0.0, f64::max)
}

/// Row-reduces complex rows in place and returns the pivot columns.
/// Rows whose remaining mass is below the pivot margin are dropped.
pub(crate) fn rref(rows: &mut Vec<Vec<Coeff>>) -> Vec<usize> {
    let ncols = rows.first().map(|r| r.len()).unwrap_or(0);
    let mut pivots = Vec::new();
    let mut r = 0;
    for col in 0..ncols {
        // partial pivoting on normalized rows
        let mut best = r;
        let mut best_mag = 0.0;
        for i in r..rows.len() {
            let scale = cnorm(&rows[i]).max(1e-300);
            let mag = rows[i][col].norm() / scale;
            if mag > best_mag {
                best_mag = mag;
                best = i;
            }
        }
        if best_mag <= PIVOT_EPS {
            continue;
        }
        rows.swap(r, best);
        let p = rows[r][col];
        for c in rows[r].iter_mut() {
            *c /= p;
        }
        for i in 0..rows.len() {
            if i != r {
                let f = rows[i][col];
                if f.norm() > 0.0 {
                    for c in 0..ncols {
                        let sub = f * rows[r][c];
                        rows[i][c] -= sub;
                    }
                }
            }
        }
        pivots.push(col);
        r += 1;
        if r == rows.len() {
            break;
        }
    }
    rows.truncate(r);
    // clean float dust
    for row in rows.iter_mut() {
        let scale = cnorm(row);
        for c in row.iter_mut() {
            if c.norm() <= COEFF_EPS * scale {
                *c = Complex64::zero();
            }
        }
    }
    pivots
}

/// Solves `Σ x_j rows[j] = target` over the residue field, if possible.
pub(crate) fn solve_combination(rows: &[Vec<Coeff>], target: &[Coeff]) -> Option<Vec<Coeff>> {
    let n = target.len();
    let k = rows.len();
    if k == 0 {
        return if cnorm(target) <= COEFF_EPS { Some(Vec::new()) } else { None };
    }
    // augmented system A x = b with A columns = rows (transposed)
    let mut aug: Vec<Vec<Coeff>> = (0..n)
        .map(|i| {
            let mut row: Vec<Coeff> = rows.iter().map(|r| r[i]).collect();
            row.push(target[i]);
            row
        })
        .collect();
    // gaussian elimination with partial pivoting
    let mut pivots: Vec<(usize, usize)> = Vec::new();
    let mut r = 0;
    let scale = aug.iter().map(|row| cnorm(row)).fold(0.0, f64::max).max(1e-300);
    for col in 0..k {
        let mut best = r;
        let mut best_mag = 0.0;
        for i in r..n {
            let mag = aug[i][col].norm();
            if mag > best_mag {
                best_mag = mag;
                best = i;
            }
        }
        if best_mag <= PIVOT_EPS * scale {
            continue;
        }
        aug.swap(r, best);
        let p = aug[r][col];
        for c in aug[r].iter_mut() {
            *c /= p;
        }
        for i in 0..n {
            if i != r {
                let f = aug[i][col];
                if f.norm() > 0.0 {
                    for c in 0..=k {
                        let sub = f * aug[r][c];
                        aug[i][c] -= sub;
                    }
                }
            }
        }
        pivots.push((r, col));
        r += 1;
        if r == n {
            break;
        }
    }
    // consistency: rows past the pivot rows must have zero rhs
    for row in aug.iter().skip(r) {
        if row[k].norm() > (COEFF_EPS * 10.0) * scale.max(cnorm(&row[..k]).max(1.0)) {
            return None;
        }
    }
    let mut x = vec![Complex64::zero(); k];
    for (row, col) in pivots {
        x[col] = aug[row][k];
    }
    Some(x)
}

/// A subspace of the residue vector space, kept in row-reduced canonical
/// form so that equality is testable.
#[derive(Debug, Clone)]
pub struct ResSubspace {
    pub n: usize,
    pub basis: Vec<Vec<Coeff>>,
}

impl ResSubspace {
    pub fn zero(n: usize) -> Self {
        ResSubspace { n, basis: Vec::new() }
    }

    pub fn full(n: usize) -> Self {
        let basis = (0..n)
            .map(|i| {
                let mut row = vec![Complex64::zero(); n];
                row[i] = Complex64::new(1.0, 0.0);
                row
            })
            .collect();
        ResSubspace { n, basis }
    }

    pub fn span(n: usize, rows: Vec<Vec<Coeff>>) -> Self {
        let mut rows = rows;
        rref(&mut rows);
        ResSubspace { n, basis: rows }
    }

    pub fn line(v: &[Coeff]) -> Self {
        Self::span(v.len(), vec![v.to_vec()])
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn approx_eq(&self, other: &ResSubspace) -> bool {
        if self.n != other.n || self.dim() != other.dim() {
            return false;
        }
        self.contains_space(other) && other.contains_space(self)
    }

    pub fn contains(&self, v: &[Coeff]) -> bool {
        solve_combination(&self.basis, v).is_some()
    }

    pub fn contains_space(&self, other: &ResSubspace) -> bool {
        other.basis.iter().all(|v| self.contains(v))
    }

    /// Span of the union.
    pub fn sum(&self, other: &ResSubspace) -> ResSubspace {
        let mut rows = self.basis.clone();
        rows.extend(other.basis.iter().cloned());
        ResSubspace::span(self.n, rows)
    }

    /// Dimension of the intersection, via `dim A + dim B - dim(A+B)`.
    pub fn intersection_dim(&self, other: &ResSubspace) -> usize {
        self.dim() + other.dim() - self.sum(other).dim()
    }

    /// Projection to a coordinate subset.
    pub fn project(&self, idx: &[usize]) -> ResSubspace {
        let rows = self
            .basis
            .iter()
            .map(|r| idx.iter().map(|&i| r[i]).collect())
            .collect();
        ResSubspace::span(idx.len(), rows)
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "n": self.n,
            "dim": self.dim(),
            "basis": self.basis.iter()
                .map(|r| serde_json::Value::Array(
                    r.iter().map(|c| serde_json::json!([c.re, c.im])).collect()))
                .collect::<Vec<_>>(),
        })
    }

    pub fn from_json(v: &serde_json::Value) -> Result<ResSubspace> {
        let n = v
            .get("n")
            .and_then(|x| x.as_u64())
            .ok_or_else(|| Error::Input("residue subspace needs \"n\"".into()))?
            as usize;
        let rows = v
            .get("basis")
            .and_then(|b| b.as_array())
            .ok_or_else(|| Error::Input("residue subspace needs \"basis\"".into()))?;
        let mut basis = Vec::new();
        for row in rows {
            let entries = row
                .as_array()
                .ok_or_else(|| Error::Input("residue basis row must be an array".into()))?;
            let mut out = Vec::new();
            for e in entries {
                let pair = e
                    .as_array()
                    .filter(|p| p.len() == 2)
                    .ok_or_else(|| Error::Input("residue entry must be [re,im]".into()))?;
                out.push(Complex64::new(
                    pair[0].as_f64().unwrap_or(0.0),
                    pair[1].as_f64().unwrap_or(0.0),
                ));
            }
            if out.len() != n {
                return Err(Error::Input("residue row length mismatch".into()));
            }
            basis.push(out);
        }
        Ok(ResSubspace::span(n, basis))
    }
}

/// `dir(x)`: the residue line of `K·x` (zero space for `x = 0`).
pub fn dir(x: &KVector) -> Result<ResSubspace> {
    if x.is_exact_zero() {
        return Ok(ResSubspace::zero(x.dim()));
    }
    let rv = x.rv()?;
    Ok(ResSubspace::line(&rv.slice))
}

/// `affdir(C)`: the residue span of all pairwise difference directions.
pub fn affdir(points: &[KVector]) -> Result<ResSubspace> {
    if points.is_empty() {
        return Err(Error::Input("affdir of an empty set".into()));
    }
    let n = points[0].dim();
    let mut rows = Vec::new();
    for i in 0..points.len() {
        for j in (i + 1)..points.len() {
            let d = points[i].sub(&points[j])?;
            if d.is_exact_zero() {
                continue;
            }
            rows.push(d.rv()?.slice);
        }
    }
    Ok(ResSubspace::span(n, rows))
}

/// Whether the coordinate projection `proj` restricts to an isomorphism on
/// the residue subspace.
pub fn is_exhibition(proj: &[usize], space: &ResSubspace) -> bool {
    if proj.len() != space.dim() {
        return false;
    }
    space.project(proj).dim() == space.dim()
}

/// Picks a coordinate exhibition of `space`, lowest indices first.
pub fn find_exhibition(space: &ResSubspace) -> Option<Vec<usize>> {
    let d = space.dim();
    if d == 0 {
        return Some(Vec::new());
    }
    // greedy: extend the index set while the projection keeps full rank
    let mut chosen: Vec<usize> = Vec::new();
    for i in 0..space.n {
        if chosen.len() == d {
            break;
        }
        let mut cand = chosen.clone();
        cand.push(i);
        if space.project(&cand).dim() == cand.len() {
            chosen = cand;
        }
    }
    if chosen.len() == d {
        Some(chosen)
    } else {
        None
    }
}

// ---------------------------------------------------------------------------
// subspaces of K^n

/// A sub-vector space of `K^n`, with a cached valuation-reduced basis: every
/// reduced vector has value 1 and their residues are independent.
#[derive(Debug, Clone)]
pub struct Subspace {
    pub n: usize,
    basis: Vec<KVector>,
    reduced: Vec<KVector>,
}

impl Subspace {
    pub fn new(n: usize, basis: Vec<KVector>) -> Result<Self> {
        Self::with_depth(n, basis, DEFAULT_DEPTH)
    }

    pub fn with_depth(n: usize, basis: Vec<KVector>, depth: i64) -> Result<Self> {
        for b in &basis {
            if b.dim() != n {
                return Err(Error::DimensionMismatch(
                    "basis vector has wrong length".into(),
                ));
            }
        }
        let reduced = reduce_basis(&basis, depth)?;
        Ok(Subspace { n, basis, reduced })
    }

    pub fn zero(n: usize) -> Self {
        Subspace { n, basis: Vec::new(), reduced: Vec::new() }
    }

    pub fn full(n: usize) -> Self {
        let basis: Vec<KVector> = (0..n).map(|i| KVector::standard(n, i)).collect();
        Subspace { n, basis: basis.clone(), reduced: basis }
    }

    pub fn dim(&self) -> usize {
        self.reduced.len()
    }

    pub fn basis(&self) -> &[KVector] {
        &self.basis
    }

    pub fn reduced(&self) -> &[KVector] {
        &self.reduced
    }

    /// Residues of the reduced basis, canonicalized.
    pub fn res_subspace(&self) -> Result<ResSubspace> {
        let mut rows = Vec::with_capacity(self.reduced.len());
        for v in &self.reduced {
            rows.push(v.rv()?.slice);
        }
        Ok(ResSubspace::span(self.n, rows))
    }

    pub fn contains(&self, v: &KVector) -> Result<bool> {
        Ok(dist_vector_to_subspace(v, self)? == GammaValue::Zero)
    }

    pub fn contains_space(&self, other: &Subspace) -> Result<bool> {
        for b in other.reduced() {
            if !self.contains(b)? {
                return Ok(false);
            }
        }
        Ok(true)
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "dim": self.dim(),
            "basis": self.basis.iter().map(|b| b.to_json()).collect::<Vec<_>>(),
        })
    }

    pub fn from_json(n: usize, v: &serde_json::Value) -> Result<Subspace> {
        let rows = v
            .get("basis")
            .and_then(|b| b.as_array())
            .ok_or_else(|| Error::Input("subspace needs a \"basis\" array".into()))?;
        let basis = rows.iter().map(KVector::from_json).collect::<Result<Vec<_>>>()?;
        let space = Subspace::new(n, basis)?;
        if let Some(d) = v.get("dim").and_then(|d| d.as_u64()) {
            if d as usize != space.dim() {
                return Err(Error::Input(format!(
                    "declared dim {d} does not match basis rank {}",
                    space.dim()
                )));
            }
        }
        Ok(space)
    }
}

/// Valuation-reduction: scales every vector to value 1 and resolves residue
/// dependencies by subtracting constant-coefficient combinations, which
/// strictly drops the offending vector's value.  Fails with a precision
/// error when a value is driven `depth` levels down (the basis is
/// numerically dependent).
pub fn reduce_basis(basis: &[KVector], depth: i64) -> Result<Vec<KVector>> {
    let mut vecs: Vec<KVector> = Vec::with_capacity(basis.len());
    let floor = exp_int(depth);
    for v in basis {
        vecs.push(rescale_to_unit(v, &floor)?);
    }
    let mut rounds = 0usize;
    loop {
        // residues of the current vectors
        let slices: Vec<Vec<Coeff>> = vecs
            .iter()
            .map(|v| v.rv().map(|r| r.slice))
            .collect::<Result<_>>()?;
        // find a residue dependency
        let mut dependent: Option<(usize, Vec<Coeff>)> = None;
        for k in 0..vecs.len() {
            let others: Vec<Vec<Coeff>> = slices
                .iter()
                .take(k)
                .cloned()
                .collect();
            if let Some(c) = solve_combination(&others, &slices[k]) {
                dependent = Some((k, c));
                break;
            }
        }
        let Some((k, coeffs)) = dependent else {
            return Ok(vecs);
        };
        // subtract the constant lift of the combination
        let mut w = vecs[k].clone();
        for (j, c) in coeffs.iter().enumerate() {
            if c.norm() == 0.0 {
                continue;
            }
            w = w.sub(&vecs[j].scale(*c))?;
        }
        vecs[k] = rescale_to_unit(&w, &floor)?;
        rounds += 1;
        if rounds > ELIM_ROUNDS * basis.len().max(1) {
            return Err(Error::PrecisionExhausted(
                "basis reduction did not stabilize".into(),
            ));
        }
    }
}

fn rescale_to_unit(v: &KVector, floor: &Exp) -> Result<KVector> {
    let val = v.val().map_err(|_| {
        Error::PrecisionExhausted("basis vector indistinguishable from zero".into())
    })?;
    let e = match val {
        GammaValue::Finite(e) => e,
        GammaValue::Zero => {
            return Err(Error::PrecisionExhausted(
                "basis vector is exactly zero (numerically dependent basis)".into(),
            ))
        }
        GammaValue::Inf => unreachable!(),
    };
    if e > *floor {
        return Err(Error::PrecisionExhausted(format!(
            "basis vector value t^{e} fell below the working precision"
        )));
    }
    Ok(v.mul_monomial(&-e, Coeff::new(1.0, 0.0)))
}

/// Constant-coefficient lift: each residue basis vector read as a constant
/// vector of `K^n`.
pub fn lift_subspace(space: &ResSubspace) -> Result<Subspace> {
    let basis = space
        .basis
        .iter()
        .map(|r| KVector::constant(r))
        .collect();
    Subspace::new(space.n, basis)
}

/// Exact minimum of `v(u - w)` over `w ∈ W`, by greedy elimination against
/// the reduced basis: while the residual's leading slice lies in the span of
/// the reduced residues, subtract the matching combination; each round
/// strictly increases the residual's exponent.
pub fn dist_vector_to_subspace(u: &KVector, w: &Subspace) -> Result<GammaValue> {
    if u.dim() != w.n {
        return Err(Error::DimensionMismatch("vector vs subspace".into()));
    }
    let slices: Vec<Vec<Coeff>> = w
        .reduced
        .iter()
        .map(|v| v.rv().map(|r| r.slice))
        .collect::<Result<_>>()?;
    let mut r = u.clone();
    for _ in 0..ELIM_ROUNDS {
        if r.is_exact_zero() {
            return Ok(GammaValue::Zero);
        }
        if r.is_zero_at_prec() {
            return Err(Error::PrecisionExhausted(
                "residual vanished below precision before membership was certified".into(),
            ));
        }
        let rv = r.rv()?;
        let e = match &rv.value {
            GammaValue::Finite(e) => e.clone(),
            _ => return Ok(rv.value),
        };
        match solve_combination(&slices, &rv.slice) {
            None => return Ok(rv.value),
            Some(coeffs) => {
                for (j, c) in coeffs.iter().enumerate() {
                    if c.norm() == 0.0 {
                        continue;
                    }
                    let corr = w.reduced[j].mul_monomial(&e, *c);
                    r = r.sub(&corr)?;
                }
            }
        }
    }
    Err(Error::PrecisionExhausted(
        "elimination round cap exceeded".into(),
    ))
}

/// Completes the reduced basis of `u` to a change of basis in `GL_n(O)`
/// (columns: reduced vectors, then standard vectors chosen greedily by pivot
/// availability, lowest index first).
pub fn completion_matrix(u: &Subspace) -> Result<KMatrix> {
    let n = u.n;
    let mut residues: Vec<Vec<Coeff>> = u
        .reduced
        .iter()
        .map(|v| v.rv().map(|r| r.slice))
        .collect::<Result<_>>()?;
    let mut cols: Vec<KVector> = u.reduced.clone();
    for i in 0..n {
        if cols.len() == n {
            break;
        }
        let mut probe = residues.clone();
        let mut unit = vec![Complex64::zero(); n];
        unit[i] = Complex64::new(1.0, 0.0);
        probe.push(unit.clone());
        let before = {
            let mut r = residues.clone();
            rref(&mut r);
            r.len()
        };
        let after = {
            rref(&mut probe);
            probe.len()
        };
        if after > before {
            residues.push(unit.clone());
            cols.push(KVector::constant(&unit));
        }
    }
    if cols.len() != n {
        return Err(Error::PrecisionExhausted(
            "could not complete basis to GL_n(O)".into(),
        ));
    }
    Ok(KMatrix::from_columns(&cols))
}

/// The distance `Δ(U, W)`: the smallest `γ` such that every `u ∈ U` is
/// approximated by some `w ∈ W` with `v(u - w) <= v(u) γ`.  Computed by
/// moving `U` to a coordinate subspace with a `GL_n(O)` change of basis and
/// maximizing the per-direction distances.
pub fn delta_distance(u: &Subspace, w: &Subspace) -> Result<GammaValue> {
    if u.dim() != w.dim() {
        return Err(Error::DimensionMismatch(format!(
            "Δ needs equal dimensions, got {} vs {}",
            u.dim(),
            w.dim()
        )));
    }
    if u.n != w.n {
        return Err(Error::DimensionMismatch("ambient dimensions differ".into()));
    }
    if u.dim() == 0 {
        return Ok(GammaValue::Zero);
    }
    let m = completion_matrix(u)?;
    // transformed W basis: solve M x = w_j  (x = M^{-1} w_j)
    let wt: Vec<KVector> = w
        .reduced
        .iter()
        .map(|v| m.solve(v))
        .collect::<Result<_>>()?;
    let w_prime = Subspace::new(w.n, wt)?;
    let mut best = GammaValue::Zero;
    for i in 0..u.dim() {
        let e = KVector::standard(u.n, i);
        let d = dist_vector_to_subspace(&e, &w_prime)?;
        let ratio = d.div_conv(&GammaValue::one())?;
        if ratio > best {
            best = ratio;
        }
    }
    Ok(best)
}

// ---------------------------------------------------------------------------
// matrices

/// A matrix over `K`, stored row-major.
#[derive(Debug, Clone)]
pub struct KMatrix {
    pub rows: usize,
    pub cols: usize,
    entries: Vec<PSeries>,
}

impl KMatrix {
    pub fn new(rows: usize, cols: usize, entries: Vec<PSeries>) -> Result<Self> {
        if entries.len() != rows * cols {
            return Err(Error::DimensionMismatch("matrix entry count".into()));
        }
        Ok(KMatrix { rows, cols, entries })
    }

    pub fn identity(n: usize) -> Self {
        let mut entries = vec![PSeries::zero(); n * n];
        for i in 0..n {
            entries[i * n + i] = PSeries::one();
        }
        KMatrix { rows: n, cols: n, entries }
    }

    pub fn from_columns(cols: &[KVector]) -> Self {
        let n = cols.first().map(|c| c.dim()).unwrap_or(0);
        let mut entries = vec![PSeries::zero(); n * cols.len()];
        for (j, col) in cols.iter().enumerate() {
            for i in 0..n {
                entries[i * cols.len() + j] = col.coords[i].clone();
            }
        }
        KMatrix { rows: n, cols: cols.len(), entries }
    }

    pub fn at(&self, i: usize, j: usize) -> &PSeries {
        &self.entries[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: PSeries) {
        self.entries[i * self.cols + j] = v;
    }

    pub fn column(&self, j: usize) -> KVector {
        KVector {
            coords: (0..self.rows).map(|i| self.at(i, j).clone()).collect(),
        }
    }

    pub fn mul_vec(&self, v: &KVector) -> Result<KVector> {
        if v.dim() != self.cols {
            return Err(Error::DimensionMismatch("matrix * vector".into()));
        }
        let mut out = Vec::with_capacity(self.rows);
        for i in 0..self.rows {
            let mut acc = PSeries::zero();
            for j in 0..self.cols {
                acc = acc.add(&self.at(i, j).mul(&v.coords[j])?)?;
            }
            out.push(acc);
        }
        Ok(KVector { coords: out })
    }

    /// Solves `self * x = b` by Gaussian elimination with maximal-valuation
    /// pivoting (square matrices).
    pub fn solve(&self, b: &KVector) -> Result<KVector> {
        if self.rows != self.cols || b.dim() != self.rows {
            return Err(Error::DimensionMismatch("solve needs square system".into()));
        }
        let n = self.rows;
        let mut a: Vec<Vec<PSeries>> = (0..n)
            .map(|i| (0..n).map(|j| self.at(i, j).clone()).collect())
            .collect();
        let mut rhs: Vec<PSeries> = b.coords.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        for col in 0..n {
            // pivot: entry with maximal value (closest to a unit)
            let mut best: Option<(usize, GammaValue)> = None;
            for row in col..n {
                if let Ok(v) = a[row][col].val() {
                    if v != GammaValue::Zero {
                        match &best {
                            Some((_, bv)) if *bv >= v => {}
                            _ => best = Some((row, v)),
                        }
                    }
                }
            }
            let Some((prow, _)) = best else {
                return Err(Error::SingularMatrix);
            };
            a.swap(col, prow);
            rhs.swap(col, prow);
            perm.swap(col, prow);
            let pinv = a[col][col].inv(DEFAULT_DEPTH)?;
            for j in 0..n {
                a[col][j] = a[col][j].mul(&pinv)?;
            }
            rhs[col] = rhs[col].mul(&pinv)?;
            for row in 0..n {
                if row != col {
                    let f = a[row][col].clone();
                    if f.is_zero_at_prec() {
                        continue;
                    }
                    for j in 0..n {
                        let sub = f.mul(&a[col][j])?;
                        a[row][j] = a[row][j].sub(&sub)?;
                    }
                    let sub = f.mul(&rhs[col])?;
                    rhs[row] = rhs[row].sub(&sub)?;
                }
            }
        }
        Ok(KVector { coords: rhs })
    }

    pub fn inverse(&self) -> Result<KMatrix> {
        if self.rows != self.cols {
            return Err(Error::DimensionMismatch("inverse of non-square".into()));
        }
        let n = self.rows;
        let mut cols = Vec::with_capacity(n);
        for j in 0..n {
            cols.push(self.solve(&KVector::standard(n, j))?);
        }
        Ok(KMatrix::from_columns(&cols))
    }

    /// Residue matrix; requires every entry in the valuation ring.
    pub fn res_matrix(&self) -> Result<Vec<Vec<Coeff>>> {
        let mut out = Vec::with_capacity(self.rows);
        for i in 0..self.rows {
            let mut row = Vec::with_capacity(self.cols);
            for j in 0..self.cols {
                row.push(self.at(i, j).res()?.coeff);
            }
            out.push(row);
        }
        Ok(out)
    }

    fn entries_in_ring(&self) -> Result<bool> {
        for e in &self.entries {
            match e.val() {
                Ok(GammaValue::Zero) => {}
                Ok(v) => {
                    if v > GammaValue::one() {
                        return Ok(false);
                    }
                }
                Err(err) => return Err(err),
            }
        }
        Ok(true)
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "rows": self.rows,
            "cols": self.cols,
            "entries": (0..self.rows).map(|i| serde_json::Value::Array(
                (0..self.cols).map(|j| self.at(i, j).to_json()).collect()
            )).collect::<Vec<_>>(),
        })
    }

    pub fn from_json(v: &serde_json::Value) -> Result<KMatrix> {
        let rows = v
            .get("entries")
            .and_then(|e| e.as_array())
            .ok_or_else(|| Error::Input("matrix needs an \"entries\" array".into()))?;
        let nrows = rows.len();
        let mut entries = Vec::new();
        let mut ncols = None;
        for row in rows {
            let cells = row
                .as_array()
                .ok_or_else(|| Error::Input("matrix row must be an array".into()))?;
            match ncols {
                None => ncols = Some(cells.len()),
                Some(c) if c != cells.len() => {
                    return Err(Error::Input("ragged matrix".into()))
                }
                _ => {}
            }
            for cell in cells {
                entries.push(PSeries::from_json(cell)?);
            }
        }
        KMatrix::new(nrows, ncols.unwrap_or(0), entries)
    }
}

/// Classification of a square matrix over `K`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatrixClass {
    /// Not in `GL_n(O)`: the matrix or its inverse has an entry outside the
    /// valuation ring.
    NotGlnO,
    /// In `GL_n(O)`: preserves all valuations.
    Isometry,
    /// In `GL_n(O)` with residue the identity: preserves leading terms.
    Risometry,
}

/// Classifies `M`: isometry iff `M` and `M^{-1}` have entries in `O`;
/// risometry additionally needs `res(M) = I`.
pub fn matrix_risometry_class(m: &KMatrix) -> Result<MatrixClass> {
    if m.rows != m.cols {
        return Err(Error::DimensionMismatch("classification needs square".into()));
    }
    let inv = m.inverse()?;
    if !(m.entries_in_ring()? && inv.entries_in_ring()?) {
        return Ok(MatrixClass::NotGlnO);
    }
    let res = m.res_matrix()?;
    let mut is_identity = true;
    for i in 0..m.rows {
        for j in 0..m.cols {
            let want = if i == j { 1.0 } else { 0.0 };
            if (res[i][j] - Complex64::new(want, 0.0)).norm() > COEFF_EPS * 10.0 {
                is_identity = false;
            }
        }
    }
    Ok(if is_identity {
        MatrixClass::Risometry
    } else {
        MatrixClass::Isometry
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gamma::exp;

    fn t() -> PSeries {
        PSeries::var()
    }

    fn re(x: f64) -> Coeff {
        Coeff::new(x, 0.0)
    }

    fn vec2(a: PSeries, b: PSeries) -> KVector {
        KVector::new(vec![a, b])
    }

    fn tm(e: i64) -> PSeries {
        PSeries::monomial(exp_int(e), re(1.0))
    }

    #[test]
    fn vector_val_is_coordinate_max() {
        let v = vec2(t(), tm(-2));
        assert_eq!(v.val().unwrap(), GammaValue::finite_int(-2));
    }

    #[test]
    fn dir_examples() {
        let z = dir(&KVector::zero(2)).unwrap();
        assert_eq!(z.dim(), 0);
        let d = dir(&vec2(t(), t().mul(&t()).unwrap())).unwrap();
        assert!(d.approx_eq(&ResSubspace::line(&[re(1.0), re(0.0)])));
        // dir(c x) = dir(x)
        let x = vec2(t(), tm(3));
        let cx = x.scale_series(&tm(-5).scale(re(2.0))).unwrap();
        assert!(dir(&x).unwrap().approx_eq(&dir(&cx).unwrap()));
    }

    #[test]
    fn affdir_examples() {
        let single = affdir(&[vec2(t(), t())]).unwrap();
        assert_eq!(single.dim(), 0);
        let pts = vec![
            KVector::zero(2),
            vec2(t(), PSeries::zero()),
            vec2(tm(2), PSeries::zero()),
        ];
        let a = affdir(&pts).unwrap();
        assert!(a.approx_eq(&ResSubspace::line(&[re(1.0), re(0.0)])));
        // points (s^2, s^3) for s in {t, 2t, t+t^2}
        let s_vals = [
            t(),
            t().scale(re(2.0)),
            t().add(&tm(2)).unwrap(),
        ];
        let pts: Vec<KVector> = s_vals
            .iter()
            .map(|s| vec2(s.pow_int(2).unwrap(), s.pow_int(3).unwrap()))
            .collect();
        let a = affdir(&pts).unwrap();
        assert!(a.approx_eq(&ResSubspace::line(&[re(1.0), re(0.0)])));
    }

    #[test]
    fn reduce_examples() {
        // scaling only
        let s = Subspace::new(2, vec![vec2(t(), PSeries::zero()), vec2(PSeries::zero(), PSeries::one())]).unwrap();
        assert_eq!(s.dim(), 2);
        let r = s.res_subspace().unwrap();
        assert!(r.approx_eq(&ResSubspace::full(2)));
        // dependent residues: subtract and rescale
        let s = Subspace::new(2, vec![vec2(PSeries::one(), PSeries::zero()), vec2(PSeries::one(), t())]).unwrap();
        let r = s.res_subspace().unwrap();
        assert!(r.approx_eq(&ResSubspace::full(2)));
        // dependence not resolvable at the default precision
        let out = Subspace::new(2, vec![
            vec2(PSeries::one(), PSeries::zero()),
            vec2(PSeries::one(), tm(30)),
        ]);
        assert!(matches!(out, Err(Error::PrecisionExhausted(_))));
    }

    #[test]
    fn res_and_lift() {
        let s = Subspace::new(2, vec![vec2(PSeries::one(), t())]).unwrap();
        let r = s.res_subspace().unwrap();
        assert!(r.approx_eq(&ResSubspace::line(&[re(1.0), re(0.0)])));
        assert!(Subspace::full(2).res_subspace().unwrap().approx_eq(&ResSubspace::full(2)));
        let lifted = lift_subspace(&ResSubspace::line(&[re(1.0), re(1.0)])).unwrap();
        assert!(lifted
            .res_subspace()
            .unwrap()
            .approx_eq(&ResSubspace::line(&[re(1.0), re(1.0)])));
    }

    #[test]
    fn lift_round_trip_random() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand::rngs::StdRng::seed_from_u64(0x5eed_0005);
        for _ in 0..100 {
            let n = rng.gen_range(1..4usize);
            let d = rng.gen_range(0..=n);
            let rows: Vec<Vec<Coeff>> = (0..d)
                .map(|_| {
                    (0..n)
                        .map(|_| Coeff::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)))
                        .collect()
                })
                .collect();
            let space = ResSubspace::span(n, rows);
            let lifted = lift_subspace(&space).unwrap();
            assert!(lifted.res_subspace().unwrap().approx_eq(&space));
        }
    }

    #[test]
    fn exhibition_examples() {
        assert!(is_exhibition(&[0, 1], &ResSubspace::full(2)));
        let diag = ResSubspace::line(&[re(1.0), re(1.0)]);
        assert!(is_exhibition(&[0], &diag));
        let e2 = ResSubspace::line(&[re(0.0), re(1.0)]);
        assert!(!is_exhibition(&[0], &e2));
    }

    #[test]
    fn dist_examples() {
        // membership
        let w = Subspace::new(2, vec![vec2(PSeries::one(), t())]).unwrap();
        let u = vec2(PSeries::one(), t()).scale_series(&tm(2)).unwrap();
        assert_eq!(dist_vector_to_subspace(&u, &w).unwrap(), GammaValue::Zero);
        // dist(e2, span{(1,t)}) = 1
        let e2 = KVector::standard(2, 1);
        assert_eq!(
            dist_vector_to_subspace(&e2, &w).unwrap(),
            GammaValue::one()
        );
        // dist(e2, span{(t,1)}) = <1>
        let w2 = Subspace::new(2, vec![vec2(t(), PSeries::one())]).unwrap();
        assert_eq!(
            dist_vector_to_subspace(&e2, &w2).unwrap(),
            GammaValue::finite_int(1)
        );
    }

    #[test]
    fn delta_examples() {
        let u = Subspace::new(2, vec![vec2(PSeries::one(), t())]).unwrap();
        assert_eq!(delta_distance(&u, &u).unwrap(), GammaValue::Zero);
        let w = Subspace::new(2, vec![vec2(PSeries::one(), t().mul(&t()).unwrap())]).unwrap();
        assert_eq!(delta_distance(&u, &w).unwrap(), GammaValue::finite_int(1));
        let e1 = Subspace::new(2, vec![KVector::standard(2, 0)]).unwrap();
        let e2 = Subspace::new(2, vec![KVector::standard(2, 1)]).unwrap();
        assert_eq!(delta_distance(&e1, &e2).unwrap(), GammaValue::one());
    }

    #[test]
    fn matrix_classification() {
        assert_eq!(
            matrix_risometry_class(&KMatrix::identity(3)).unwrap(),
            MatrixClass::Risometry
        );
        let diag = KMatrix::new(
            2,
            2,
            vec![
                PSeries::one().add(&t()).unwrap(),
                PSeries::zero(),
                PSeries::zero(),
                PSeries::one(),
            ],
        )
        .unwrap();
        assert_eq!(matrix_risometry_class(&diag).unwrap(), MatrixClass::Risometry);
        let two = KMatrix::new(
            2,
            2,
            vec![
                PSeries::constant(re(2.0)),
                PSeries::zero(),
                PSeries::zero(),
                PSeries::one(),
            ],
        )
        .unwrap();
        assert_eq!(matrix_risometry_class(&two).unwrap(), MatrixClass::Isometry);
        let tt = KMatrix::new(
            2,
            2,
            vec![t(), PSeries::zero(), PSeries::zero(), PSeries::one()],
        )
        .unwrap();
        assert_eq!(matrix_risometry_class(&tt).unwrap(), MatrixClass::NotGlnO);
    }

    #[test]
    fn delta_invariant_under_isometries() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand::rngs::StdRng::seed_from_u64(0x5eed_0006);
        for _ in 0..40 {
            let u = Subspace::new(
                2,
                vec![vec2(
                    PSeries::one(),
                    PSeries::monomial(exp(rng.gen_range(1..5), 1), re(rng.gen_range(-2.0..2.0))),
                )],
            )
            .unwrap();
            let w = Subspace::new(
                2,
                vec![vec2(
                    PSeries::one(),
                    PSeries::monomial(exp(rng.gen_range(1..5), 1), re(rng.gen_range(-2.0..2.0))),
                )],
            )
            .unwrap();
            // a random isometry with unit diagonal entries and O off-diagonal
            let m = KMatrix::new(
                2,
                2,
                vec![
                    PSeries::constant(re(1.0)),
                    PSeries::constant(re(rng.gen_range(-0.9..0.9))),
                    t().scale(re(rng.gen_range(-1.0..1.0))),
                    PSeries::constant(re(1.0)),
                ],
            )
            .unwrap();
            if matrix_risometry_class(&m).unwrap() == MatrixClass::NotGlnO {
                continue;
            }
            let mu = Subspace::new(2, u.reduced().iter().map(|v| m.mul_vec(v).unwrap()).collect()).unwrap();
            let mw = Subspace::new(2, w.reduced().iter().map(|v| m.mul_vec(v).unwrap()).collect()).unwrap();
            assert_eq!(
                delta_distance(&u, &w).unwrap(),
                delta_distance(&mu, &mw).unwrap()
            );
        }
    }
}
