//! Val-chains, the valuative Lipschitz conditions and the constructive
//! nested-subspace algorithm, tangent spaces of the built-in strata, and
//! order-r Taylor checks on sampled arc families.

mod taylor;

pub use taylor::{taylor_order_check, ArcFamily, TaylorReport};

use num_complex::Complex64;

use crate::config::Config;
use crate::error::{Error, Result};
use crate::gamma::GammaValue;
use crate::puiseux::PSeries;
use crate::strat::{dist_to_stratum, stratum_membership, StratSpec, Stratum};
use crate::vla::{
    delta_distance, dist_vector_to_subspace, rref, solve_combination, KMatrix, KVector,
    ResSubspace, Subspace,
};

// ---------------------------------------------------------------------------
// tangent spaces

/// Tangent space of stratum `d` at `x`: the kernel of the Jacobian of the
/// defining polynomials.  Point strata have the zero space, the top stratum
/// the full space.
pub fn tangent_space(spec: &StratSpec, d: usize, x: &KVector, cfg: &Config) -> Result<Subspace> {
    if !stratum_membership(spec, d, x)?.is_in() {
        return Err(Error::Input("point does not lie in the stratum".into()));
    }
    match &spec.strata[d] {
        Stratum::Points(_) => Ok(Subspace::zero(spec.n)),
        Stratum::Rest => Ok(Subspace::full(spec.n)),
        Stratum::Empty => Err(Error::Input("empty stratum".into())),
        Stratum::Variety(polys) => {
            let mut rows = Vec::new();
            for p in polys {
                let grad: Vec<PSeries> = p
                    .gradient()
                    .iter()
                    .map(|g| g.eval(&x.coords))
                    .collect::<Result<_>>()?;
                rows.push(KVector::new(grad));
            }
            let kernel = jacobian_kernel(&rows, spec.n, cfg)?;
            if kernel.dim() != d {
                return Err(Error::SingularPoint);
            }
            Ok(kernel)
        }
    }
}

/// Kernel of the row space over `K`, by Gaussian elimination with
/// maximal-valuation pivoting.
fn jacobian_kernel(rows: &[KVector], n: usize, cfg: &Config) -> Result<Subspace> {
    let mut mat: Vec<Vec<PSeries>> = rows.iter().map(|r| r.coords.clone()).collect();
    let mut pivots: Vec<usize> = Vec::new();
    let mut rank = 0usize;
    for _ in 0..mat.len() {
        // best pivot among remaining rows/columns
        let mut best: Option<(usize, usize, GammaValue)> = None;
        for (ri, row) in mat.iter().enumerate().skip(rank) {
            for (ci, entry) in row.iter().enumerate() {
                if pivots.contains(&ci) {
                    continue;
                }
                if let Ok(v) = entry.val() {
                    if v == GammaValue::Zero {
                        continue;
                    }
                    match &best {
                        Some((_, _, bv)) if *bv >= v => {}
                        _ => best = Some((ri, ci, v)),
                    }
                }
            }
        }
        let Some((ri, ci, _)) = best else { break };
        mat.swap(rank, ri);
        let pinv = mat[rank][ci].inv(cfg.depth)?;
        for j in 0..n {
            mat[rank][j] = mat[rank][j].mul(&pinv)?;
        }
        for r in 0..mat.len() {
            if r != rank {
                let f = mat[r][ci].clone();
                if f.is_zero_at_prec() {
                    continue;
                }
                for j in 0..n {
                    let sub = f.mul(&mat[rank][j])?;
                    mat[r][j] = mat[r][j].sub(&sub)?;
                }
            }
        }
        pivots.push(ci);
        rank += 1;
    }
    // kernel basis: one vector per free column
    let mut basis = Vec::new();
    for free in 0..n {
        if pivots.contains(&free) {
            continue;
        }
        let mut v = vec![PSeries::zero(); n];
        v[free] = PSeries::one();
        for (r, &pc) in pivots.iter().enumerate() {
            v[pc] = mat[r][free].neg();
        }
        basis.push(KVector::new(v));
    }
    Subspace::with_depth(n, basis, cfg.depth)
}

// ---------------------------------------------------------------------------
// val-chains

/// A validated chain of points with prescribed stratum dimensions and its
/// distances `λ_1 < ... < λ_{m+1}`.
#[derive(Debug, Clone)]
pub struct ValChain {
    pub points: Vec<KVector>,
    pub dims: Vec<usize>,
    pub lambdas: Vec<GammaValue>,
}

impl ValChain {
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "points": self.points.iter().map(|p| p.to_json()).collect::<Vec<_>>(),
            "dims": self.dims,
            "lambdas": self.lambdas.iter().map(|l| l.to_json()).collect::<Vec<_>>(),
        })
    }
}

/// Outcome of chain validation.
#[derive(Debug, Clone)]
pub enum ChainVerdict {
    Ok {
        chain: ValChain,
        /// Some distance was only certified by sampling.
        on_sample: bool,
    },
    Violated {
        condition: u8,
        detail: String,
    },
}

impl ChainVerdict {
    pub fn is_ok(&self) -> bool {
        matches!(self, ChainVerdict::Ok { .. })
    }
}

fn skeleton_empty(spec: &StratSpec, below: usize) -> bool {
    spec.strata.iter().take(below).all(|s| match s {
        Stratum::Empty => true,
        Stratum::Points(p) => p.is_empty(),
        _ => false,
    })
}

/// Checks the four chain conditions for `points` with stratum dimensions
/// `dims` and computes the distances.
pub fn validate_val_chain(
    spec: &StratSpec,
    points: &[KVector],
    dims: &[usize],
    cfg: &Config,
) -> Result<ChainVerdict> {
    if points.is_empty() || points.len() != dims.len() {
        return Err(Error::Input("chain needs matching points and dims".into()));
    }
    let m = points.len() - 1;
    // (1) n >= d_0 >= d_1 > d_2 > ... > d_m
    if dims[0] > spec.n {
        return Ok(ChainVerdict::Violated {
            condition: 1,
            detail: format!("d_0 = {} exceeds the ambient dimension", dims[0]),
        });
    }
    for i in 1..=m {
        let ok = if i == 1 { dims[1] <= dims[0] } else { dims[i] < dims[i - 1] };
        if !ok {
            return Ok(ChainVerdict::Violated {
                condition: 1,
                detail: format!("dimension sequence fails at index {i}"),
            });
        }
    }
    // (2) membership
    let mut on_sample = false;
    for (i, (p, &d)) in points.iter().zip(dims).enumerate() {
        match stratum_membership(spec, d, p)? {
            m if m.is_in() => {
                if m == crate::strat::Membership::InNumeric {
                    on_sample = true;
                }
            }
            _ => {
                return Ok(ChainVerdict::Violated {
                    condition: 2,
                    detail: format!("point {i} is not in stratum {d}"),
                })
            }
        }
    }
    let a0 = &points[0];
    let mut lambdas = Vec::with_capacity(m + 1);
    for i in 1..=m {
        let li = a0.sub(&points[i])?.val()?;
        // (3) λ_i < v(a_0 - S_{<d_i})
        if !skeleton_empty(spec, dims[i]) {
            let d = dist_to_stratum(spec, dims[i].wrapping_sub(1), a0, cfg)?;
            if !d.exact {
                on_sample = true;
            }
            if dims[i] > 0 && li >= d.value {
                return Ok(ChainVerdict::Violated {
                    condition: 3,
                    detail: format!(
                        "v(a_0 - a_{i}) = {li} is not below the distance {} to the lower skeleton",
                        d.value
                    ),
                });
            }
        }
        // (4) λ_i = v(a_0 - S_{<d_{i-1}}) when the dimension drops
        if dims[i - 1] > dims[i] {
            let dist = if skeleton_empty(spec, dims[i - 1]) {
                GammaValue::Inf
            } else {
                let d = dist_to_stratum(spec, dims[i - 1] - 1, a0, cfg)?;
                if !d.exact {
                    on_sample = true;
                }
                d.value
            };
            if li != dist {
                return Ok(ChainVerdict::Violated {
                    condition: 4,
                    detail: format!(
                        "v(a_0 - a_{i}) = {li} but v(a_0 - lower skeleton) = {dist}"
                    ),
                });
            }
        }
        lambdas.push(li);
    }
    // λ_{m+1}
    let last = if skeleton_empty(spec, dims[m]) {
        GammaValue::Inf
    } else {
        let d = dist_to_stratum(spec, dims[m].wrapping_sub(1), a0, cfg)?;
        if !d.exact {
            on_sample = true;
        }
        d.value
    };
    lambdas.push(last);
    for w in lambdas.windows(2) {
        if w[0] >= w[1] {
            return Ok(ChainVerdict::Violated {
                condition: 3,
                detail: format!("distances {} and {} are not strictly increasing", w[0], w[1]),
            });
        }
    }
    Ok(ChainVerdict::Ok {
        chain: ValChain {
            points: points.to_vec(),
            dims: dims.to_vec(),
            lambdas,
        },
        on_sample,
    })
}

/// All chains starting at `a0` through points of the pool that validate,
/// deduplicated by dimensions and distances.  The trivial chain `[a0]` is
/// always included.
pub fn enumerate_val_chains(
    spec: &StratSpec,
    a0: &KVector,
    max_m: usize,
    pool: &[(KVector, usize)],
    cfg: &Config,
) -> Result<Vec<ValChain>> {
    let d0 = (0..spec.strata.len())
        .find(|&d| {
            stratum_membership(spec, d, a0)
                .map(|m| m.is_in())
                .unwrap_or(false)
        })
        .ok_or_else(|| Error::Input("base point lies in no stratum".into()))?;
    let mut found: Vec<ValChain> = vec![ValChain {
        points: vec![a0.clone()],
        dims: vec![d0],
        lambdas: Vec::new(),
    }];
    let mut stack: Vec<(Vec<KVector>, Vec<usize>)> = vec![(vec![a0.clone()], vec![d0])];
    while let Some((pts, dims)) = stack.pop() {
        if pts.len() > max_m {
            continue;
        }
        for (cand, cd) in pool {
            let admissible = if dims.len() == 1 {
                *cd <= dims[0]
            } else {
                *cd < *dims.last().unwrap()
            };
            if !admissible {
                continue;
            }
            let mut npts = pts.clone();
            npts.push(cand.clone());
            let mut ndims = dims.clone();
            ndims.push(*cd);
            if let ChainVerdict::Ok { chain, .. } =
                validate_val_chain(spec, &npts, &ndims, cfg)?
            {
                let dup = found.iter().any(|c| {
                    c.dims == chain.dims && c.lambdas == chain.lambdas
                });
                if !dup {
                    found.push(chain);
                }
                stack.push((npts, ndims));
            }
        }
    }
    Ok(found)
}

// ---------------------------------------------------------------------------
// subspace grids

/// A triangular array of subspaces `entries[i][j]` for `0 <= i <= j <= m`
/// with column dimensions `dims[j]` and distances `λ_1 < ... < λ_{m+1}`.
#[derive(Debug, Clone)]
pub struct SubspaceGrid {
    pub n: usize,
    pub dims: Vec<usize>,
    pub lambdas: Vec<GammaValue>,
    /// Row `i` holds entries for columns `j = i..=m`.
    rows: Vec<Vec<Subspace>>,
}

impl SubspaceGrid {
    pub fn new(
        n: usize,
        dims: Vec<usize>,
        lambdas: Vec<GammaValue>,
        rows: Vec<Vec<Subspace>>,
    ) -> Result<Self> {
        let m = dims.len().checked_sub(1).ok_or_else(|| Error::Input("empty grid".into()))?;
        if lambdas.len() != m + 1 {
            return Err(Error::Input("grid needs m+1 distances".into()));
        }
        if rows.len() != m + 1 {
            return Err(Error::Input("grid needs m+1 rows".into()));
        }
        for (i, row) in rows.iter().enumerate() {
            if row.len() != m + 1 - i {
                return Err(Error::Input(format!("row {i} has the wrong length")));
            }
        }
        Ok(SubspaceGrid { n, dims, lambdas, rows })
    }

    pub fn m(&self) -> usize {
        self.dims.len() - 1
    }

    pub fn get(&self, i: usize, j: usize) -> &Subspace {
        &self.rows[i][j - i]
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "n": self.n,
            "dims": self.dims,
            "lambdas": self.lambdas.iter().map(|l| l.to_json()).collect::<Vec<_>>(),
            "entries": self.rows.iter()
                .map(|row| row.iter().map(|s| s.to_json()).collect::<Vec<_>>())
                .collect::<Vec<_>>(),
        })
    }

    pub fn from_json(v: &serde_json::Value) -> Result<SubspaceGrid> {
        let n = v
            .get("n")
            .and_then(|x| x.as_u64())
            .ok_or_else(|| Error::Input("grid needs \"n\"".into()))? as usize;
        let dims: Vec<usize> = v
            .get("dims")
            .and_then(|d| d.as_array())
            .ok_or_else(|| Error::Input("grid needs \"dims\"".into()))?
            .iter()
            .map(|x| x.as_u64().map(|u| u as usize))
            .collect::<Option<_>>()
            .ok_or_else(|| Error::Input("bad dims".into()))?;
        let lambdas = v
            .get("lambdas")
            .and_then(|l| l.as_array())
            .ok_or_else(|| Error::Input("grid needs \"lambdas\"".into()))?
            .iter()
            .map(GammaValue::from_json)
            .collect::<Result<Vec<_>>>()?;
        let rows = v
            .get("entries")
            .and_then(|e| e.as_array())
            .ok_or_else(|| Error::Input("grid needs \"entries\"".into()))?
            .iter()
            .map(|row| {
                row.as_array()
                    .ok_or_else(|| Error::Input("grid row must be an array".into()))?
                    .iter()
                    .map(|s| Subspace::from_json(n, s))
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        SubspaceGrid::new(n, dims, lambdas, rows)
    }
}

/// Verifies the construction hypotheses on a W-grid: column dimensions,
/// row containment `W_{i,j} ⊆ W_{i,i}`, and the distance bounds
/// `Δ(W_{i+1,j}, W_{i,j}) <= λ_{i+1}/λ_{j+1}`.
pub fn check_grid_hypotheses(w: &SubspaceGrid) -> Result<()> {
    let m = w.m();
    for k in 0..m {
        if w.lambdas[k] >= w.lambdas[k + 1] {
            return Err(Error::RejectedInput(
                "distances",
                format!("λ_{} and λ_{} are not strictly increasing", k + 1, k + 2),
            ));
        }
        if w.lambdas[k] == GammaValue::Inf {
            return Err(Error::RejectedInput(
                "distances",
                "only the last distance may be inf".into(),
            ));
        }
    }
    for w2 in w.dims.windows(2) {
        if w2[1] > w2[0] {
            return Err(Error::RejectedInput(
                "dimensions",
                "column dimensions must be weakly decreasing".into(),
            ));
        }
    }
    for i in 0..=m {
        for j in i..=m {
            if w.get(i, j).dim() != w.dims[j] {
                return Err(Error::RejectedInput(
                    "(i) dimension",
                    format!("entry ({i},{j}) has dim {} != {}", w.get(i, j).dim(), w.dims[j]),
                ));
            }
            if j > i {
                for b in w.get(i, j).reduced() {
                    if dist_vector_to_subspace(b, w.get(i, i))? != GammaValue::Zero {
                        return Err(Error::RejectedInput(
                            "(ii) containment",
                            format!("entry ({i},{j}) is not inside entry ({i},{i})"),
                        ));
                    }
                }
            }
        }
    }
    for j in 1..=m {
        for i in 0..j {
            let bound = w.lambdas[i].div_conv(&w.lambdas[j])?;
            let delta = delta_distance(w.get(i + 1, j), w.get(i, j))?;
            if delta > bound {
                return Err(Error::RejectedInput(
                    "(iii) distance bound",
                    format!("Δ(W_{},{j}, W_{i},{j}) = {delta} exceeds {bound}", i + 1),
                ));
            }
        }
    }
    Ok(())
}

/// The nested-subspace construction: produces `V_{i,j}` with the same
/// dimensions, containments and distance bounds as the input grid, with
/// `V_{i,i} = W_{i,i}` and additionally `V_{i,j+1} ⊆ V_{i,j}`.
///
/// Steps: verify the hypotheses; move the common residue flag to the
/// standard one with a lifted change of basis; normalize each entry's basis
/// to the form `e_k + ({0}^{d_j} × M^{n-d_j})` via the inverse of its top
/// block; regroup the normalized vectors along the dimension blocks; and
/// transport back.
pub fn nested_subspaces(w: &SubspaceGrid, cfg: &Config) -> Result<SubspaceGrid> {
    check_grid_hypotheses(w)?;
    let n = w.n;
    let m = w.m();
    // common residues per column and the flag condition
    let mut col_res: Vec<ResSubspace> = Vec::with_capacity(m + 1);
    for j in 0..=m {
        let r0 = w.get(0, j).res_subspace()?;
        for i in 1..=j {
            let ri = w.get(i, j).res_subspace()?;
            if !r0.approx_eq(&ri) {
                return Err(Error::RejectedInput(
                    "common residues",
                    format!("entries (0,{j}) and ({i},{j}) have different residues"),
                ));
            }
        }
        col_res.push(r0);
    }
    for j in 0..m {
        if !col_res[j].contains_space(&col_res[j + 1]) {
            return Err(Error::RejectedInput(
                "residue flag",
                format!("residues of column {} do not contain column {}", j, j + 1),
            ));
        }
    }
    // compatible residue basis: smallest column first, extended outwards,
    // then completed by standard vectors
    let mut basis_rows: Vec<Vec<Complex64>> = Vec::new();
    for j in (0..=m).rev() {
        for row in &col_res[j].basis {
            let mut probe = basis_rows.clone();
            probe.push(row.clone());
            if rref(&mut probe).len() > basis_rows.len() {
                basis_rows.push(row.clone());
            }
            if basis_rows.len() == w.dims[j] {
                break;
            }
        }
        if basis_rows.len() != w.dims[j] {
            return Err(Error::RejectedInput(
                "residue flag",
                format!("could not extend the residue basis across column {j}"),
            ));
        }
    }
    for i in 0..n {
        if basis_rows.len() == n {
            break;
        }
        let mut unit = vec![Complex64::new(0.0, 0.0); n];
        unit[i] = Complex64::new(1.0, 0.0);
        let mut probe = basis_rows.clone();
        probe.push(unit.clone());
        if rref(&mut probe).len() > basis_rows.len() {
            basis_rows.push(unit);
        }
    }
    if basis_rows.len() != n {
        return Err(Error::RejectedInput(
            "residue completion",
            "could not complete the residue basis".into(),
        ));
    }
    // M sends b_k to e_k: M = B^{-1}, both lifted with constant entries
    let b_cols: Vec<KVector> = basis_rows.iter().map(|r| KVector::constant(r)).collect();
    let b_mat = KMatrix::from_columns(&b_cols);
    let to_std = move |v: &KVector| b_mat.solve(v);
    let back_cols = b_cols.clone();
    let back_mat = KMatrix::from_columns(&back_cols);

    // normalized bases per entry
    let mut normalized: Vec<Vec<Vec<KVector>>> = Vec::with_capacity(m + 1);
    for i in 0..=m {
        let mut per_row = Vec::with_capacity(m + 1 - i);
        for j in i..=m {
            let dj = w.dims[j];
            let transformed: Vec<KVector> = w
                .get(i, j)
                .reduced()
                .iter()
                .map(&to_std)
                .collect::<Result<_>>()?;
            if dj == 0 {
                per_row.push(Vec::new());
                continue;
            }
            let space = Subspace::with_depth(n, transformed, cfg.depth)?;
            // preimages of the standard residue vectors
            let slices: Vec<Vec<Complex64>> = space
                .reduced()
                .iter()
                .map(|v| v.rv().map(|r| r.slice))
                .collect::<Result<_>>()?;
            let mut pre: Vec<KVector> = Vec::with_capacity(dj);
            for k in 0..dj {
                let mut target = vec![Complex64::new(0.0, 0.0); n];
                target[k] = Complex64::new(1.0, 0.0);
                let coeffs = solve_combination(&slices, &target).ok_or_else(|| {
                    Error::RejectedInput(
                        "standard residues",
                        format!("entry ({i},{j}) misses residue direction {k}"),
                    )
                })?;
                let mut acc = KVector::zero(n);
                for (l, c) in coeffs.iter().enumerate() {
                    if c.norm() == 0.0 {
                        continue;
                    }
                    acc = acc.add(&space.reduced()[l].scale(*c))?;
                }
                pre.push(acc);
            }
            // top-block inverse: columns w_k = B · A^{-1} e_k
            let b = KMatrix::from_columns(&pre);
            let mut a_entries = Vec::with_capacity(dj * dj);
            for r in 0..dj {
                for c in 0..dj {
                    a_entries.push(b.at(r, c).clone());
                }
            }
            let a = KMatrix::new(dj, dj, a_entries)?;
            let mut cols = Vec::with_capacity(dj);
            for k in 0..dj {
                let x = a.solve(&KVector::standard(dj, k))?;
                cols.push(b.mul_vec(&x)?);
            }
            per_row.push(cols);
        }
        normalized.push(per_row);
    }
    // regroup along the dimension blocks and transport back
    let mut out_rows: Vec<Vec<Subspace>> = Vec::with_capacity(m + 1);
    for i in 0..=m {
        let mut row = Vec::with_capacity(m + 1 - i);
        for j in i..=m {
            let mut basis: Vec<KVector> = Vec::with_capacity(w.dims[j]);
            for l in (j..=m).rev() {
                let d_lp1 = if l == m { 0 } else { w.dims[l + 1] };
                for k in d_lp1..w.dims[l] {
                    basis.push(normalized[i][l - i][k].clone());
                }
            }
            let back: Vec<KVector> = basis
                .iter()
                .map(|v| back_mat.mul_vec(v))
                .collect::<Result<_>>()?;
            row.push(Subspace::with_depth(n, back, cfg.depth)?);
        }
        out_rows.push(row);
    }
    SubspaceGrid::new(n, w.dims.clone(), w.lambdas.clone(), out_rows)
}

// ---------------------------------------------------------------------------
// the Lipschitz conditions along a chain

/// Outcome of checking the Lipschitz conditions for a chain and a V-grid.
#[derive(Debug, Clone)]
pub enum LipVerdict {
    Ok,
    Violated { condition: u8, i: usize, j: usize, detail: String },
}

impl LipVerdict {
    pub fn is_ok(&self) -> bool {
        matches!(self, LipVerdict::Ok)
    }
}

/// Verifies, for a validated chain and a grid `V`: tangency on the diagonal,
/// the nesting across columns, the column dimensions, and the distance
/// bounds with the convention `λ_{i+1}/inf = 0`.
pub fn check_lipschitz_chain(
    spec: &StratSpec,
    chain: &ValChain,
    v: &SubspaceGrid,
    cfg: &Config,
) -> Result<LipVerdict> {
    let m = chain.points.len() - 1;
    if v.m() != m || v.dims != chain.dims {
        return Err(Error::DimensionMismatch("grid does not match the chain".into()));
    }
    // (3) dimensions
    for i in 0..=m {
        for j in i..=m {
            if v.get(i, j).dim() != chain.dims[j] {
                return Ok(LipVerdict::Violated {
                    condition: 3,
                    i,
                    j,
                    detail: "wrong dimension".into(),
                });
            }
        }
    }
    // (1) diagonal tangency
    for i in 0..=m {
        let tangent = tangent_space(spec, chain.dims[i], &chain.points[i], cfg)?;
        if tangent.dim() != v.get(i, i).dim()
            || delta_distance(v.get(i, i), &tangent)? != GammaValue::Zero
        {
            return Ok(LipVerdict::Violated {
                condition: 1,
                i,
                j: i,
                detail: "diagonal entry is not the stratum tangent".into(),
            });
        }
    }
    // (2) nesting V_{i,j} ⊆ V_{i,j-1}
    for i in 0..=m {
        for j in (i + 1)..=m {
            for b in v.get(i, j).reduced() {
                if dist_vector_to_subspace(b, v.get(i, j - 1))? != GammaValue::Zero {
                    return Ok(LipVerdict::Violated {
                        condition: 2,
                        i,
                        j,
                        detail: "column nesting fails".into(),
                    });
                }
            }
        }
    }
    // (4) distance bounds
    for j in 1..=m {
        for i in 0..j {
            let bound = chain.lambdas[i].div_conv(&chain.lambdas[j])?;
            let delta = delta_distance(v.get(i, j), v.get(i + 1, j))?;
            if delta > bound {
                return Ok(LipVerdict::Violated {
                    condition: 4,
                    i,
                    j,
                    detail: format!("Δ = {delta} exceeds {bound}"),
                });
            }
        }
    }
    Ok(LipVerdict::Ok)
}

/// Assembles the W-grid of a chain for the built-in families: diagonal
/// entries are stratum tangents; for `i < j` the entry is the tangent at
/// `a_i` to the translate of the variety's branch graph through `a_i`,
/// viewed over the exhibition coordinates of the lower tangent's residues.
pub fn build_w_grid(spec: &StratSpec, chain: &ValChain, cfg: &Config) -> Result<SubspaceGrid> {
    let m = chain.points.len() - 1;
    let n = spec.n;
    let mut diag: Vec<Subspace> = Vec::with_capacity(m + 1);
    for i in 0..=m {
        diag.push(tangent_space(spec, chain.dims[i], &chain.points[i], cfg)?);
    }
    let mut rows = Vec::with_capacity(m + 1);
    for i in 0..=m {
        let mut row = Vec::with_capacity(m + 1 - i);
        for j in i..=m {
            if j == i {
                row.push(diag[i].clone());
            } else if chain.dims[j] == 0 {
                row.push(Subspace::zero(n));
            } else if chain.dims[j] == chain.dims[i] {
                row.push(diag[i].clone());
            } else {
                // exhibition coordinates of the lower tangent's residues
                let res_j = diag[j].res_subspace()?;
                let exh = crate::vla::find_exhibition(&res_j).ok_or_else(|| {
                    Error::Input("no exhibition for the lower tangent".into())
                })?;
                row.push(arc_tangent_at(spec, &chain.points[i], &exh, cfg)?);
            }
        }
        rows.push(row);
    }
    SubspaceGrid::new(n, chain.dims.clone(), chain.lambdas.clone(), rows)
}

/// Tangent at `p` to the translate of the variety branch graph through `p`,
/// as a graph over the coordinates `exh`: spanned by
/// `e_c - (∂f/∂x_c)/(∂f/∂x_dep) e_dep` at the branch point over `p`.
fn arc_tangent_at(
    spec: &StratSpec,
    p: &KVector,
    exh: &[usize],
    cfg: &Config,
) -> Result<Subspace> {
    let n = spec.n;
    let polys = spec
        .variety_polys()
        .ok_or_else(|| Error::Input("family has no variety stratum".into()))?;
    if polys.len() != 1 || exh.len() != n - 1 {
        return Err(Error::UnsupportedFamily(
            "arc tangents need a codimension-one variety".into(),
        ));
    }
    let f = &polys[0];
    let dep = (0..n)
        .find(|i| !exh.contains(i))
        .ok_or_else(|| Error::Input("bad exhibition".into()))?;
    // branch point over the exhibition coordinates nearest to p
    let frozen_vals: Vec<PSeries> = exh.iter().map(|&i| p.coords[i].clone()).collect();
    let roots = crate::strat::solve_variety_fiber(spec, exh, &frozen_vals, cfg.depth)?;
    let mut nearest: Option<(KVector, GammaValue)> = None;
    for r in roots {
        let d = p.sub(&r)?;
        let v = if d.is_zero_at_prec() { GammaValue::Zero } else { d.val()? };
        match &nearest {
            Some((_, bv)) if *bv <= v => {}
            _ => nearest = Some((r, v)),
        }
    }
    let (at, _) = nearest.ok_or_else(|| Error::Input("no branch over the point".into()))?;
    let df_dep = f.partial(dep).eval(&at.coords)?;
    let dep_inv = df_dep.inv(cfg.depth)?;
    let mut basis = Vec::with_capacity(exh.len());
    for &c in exh {
        let slope = f.partial(c).eval(&at.coords)?.neg().mul(&dep_inv)?;
        let mut coords = vec![PSeries::zero(); n];
        coords[c] = PSeries::one();
        coords[dep] = slope;
        basis.push(KVector::new(coords));
    }
    Subspace::with_depth(n, basis, cfg.depth)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gamma::exp;
    use crate::puiseux::Coeff;
    use crate::strat::StratSpec;

    fn re(x: f64) -> Coeff {
        Coeff::new(x, 0.0)
    }

    fn mono(e_num: i64, e_den: i64, c: f64) -> PSeries {
        PSeries::monomial(exp(e_num, e_den), re(c))
    }

    fn cfg() -> Config {
        Config::default()
    }

    #[test]
    fn tangent_examples() {
        let cusp = StratSpec::cusp(3, 2).unwrap();
        // top stratum: full plane
        let p = KVector::new(vec![PSeries::var(), PSeries::var()]);
        let t = tangent_space(&cusp, 2, &p, &cfg()).unwrap();
        assert_eq!(t.dim(), 2);
        // curve tangent at (t^2, t^3): span (2, 3t)
        let p = KVector::new(vec![mono(2, 1, 1.0), mono(3, 1, 1.0)]);
        let t = tangent_space(&cusp, 1, &p, &cfg()).unwrap();
        assert_eq!(t.dim(), 1);
        let want = KVector::new(vec![PSeries::constant(re(2.0)), mono(1, 1, 3.0)]);
        assert_eq!(
            dist_vector_to_subspace(&want, &t).unwrap(),
            GammaValue::Zero
        );
        // trumpet tangent at (t^2, 0, t^3): span {(2,0,3t), (0,1,0)}
        let trumpet = StratSpec::trumpet();
        let q = KVector::new(vec![mono(2, 1, 1.0), PSeries::zero(), mono(3, 1, 1.0)]);
        let t = tangent_space(&trumpet, 2, &q, &cfg()).unwrap();
        assert_eq!(t.dim(), 2);
        let w1 = KVector::new(vec![
            PSeries::constant(re(2.0)),
            PSeries::zero(),
            mono(1, 1, 3.0),
        ]);
        let w2 = KVector::new(vec![PSeries::zero(), PSeries::one(), PSeries::zero()]);
        assert_eq!(dist_vector_to_subspace(&w1, &t).unwrap(), GammaValue::Zero);
        assert_eq!(dist_vector_to_subspace(&w2, &t).unwrap(), GammaValue::Zero);
        // point stratum: zero space
        let z = tangent_space(&cusp, 0, &KVector::zero(2), &cfg()).unwrap();
        assert_eq!(z.dim(), 0);
    }

    fn cusp_chain_points() -> (KVector, KVector, KVector) {
        // a_0 = (t, t^{3/2} + t^4) just off the curve, nearest branch point
        // a_1 = (t, t^{3/2}), and the origin
        let a0 = KVector::new(vec![
            mono(1, 1, 1.0),
            mono(3, 2, 1.0).add(&mono(4, 1, 1.0)).unwrap(),
        ]);
        let a1 = KVector::new(vec![mono(1, 1, 1.0), mono(3, 2, 1.0)]);
        let a2 = KVector::zero(2);
        (a0, a1, a2)
    }

    #[test]
    fn validate_chain_example() {
        let cusp = StratSpec::cusp(3, 2).unwrap();
        let (a0, a1, a2) = cusp_chain_points();
        let verdict = validate_val_chain(
            &cusp,
            &[a0.clone(), a1.clone(), a2.clone()],
            &[2, 1, 0],
            &cfg(),
        )
        .unwrap();
        match verdict {
            ChainVerdict::Ok { chain, .. } => {
                assert_eq!(chain.lambdas[0], GammaValue::finite_int(4));
                assert_eq!(chain.lambdas[1], GammaValue::finite_int(1));
                assert_eq!(chain.lambdas[2], GammaValue::Inf);
            }
            other => panic!("expected ok, got {other:?}"),
        }
    }

    #[test]
    fn chain_with_equal_leading_dims_is_allowed() {
        let cusp = StratSpec::cusp(3, 2).unwrap();
        // both points on the curve, d_1 = d_0 = 1
        let a0 = KVector::new(vec![mono(1, 1, 1.0), mono(3, 2, 1.0)]);
        let a1 = KVector::new(vec![
            mono(1, 1, 1.0).add(&mono(3, 1, 1.0)).unwrap(),
            mono(1, 1, 1.0)
                .add(&mono(3, 1, 1.0))
                .unwrap()
                .nth_root(2, 0, 24)
                .unwrap()
                .pow_int(3)
                .unwrap(),
        ]);
        let verdict = validate_val_chain(&cusp, &[a0, a1], &[1, 1], &cfg()).unwrap();
        assert!(verdict.is_ok(), "{verdict:?}");
    }

    #[test]
    fn chain_condition3_violation() {
        let cusp = StratSpec::cusp(3, 2).unwrap();
        // a_1 on the curve but farther from a_0 than the origin is
        let a0 = KVector::new(vec![mono(1, 1, 1.0), mono(3, 2, 1.0)]);
        let far = KVector::new(vec![mono(-2, 1, 1.0), mono(-3, 1, 1.0)]);
        let verdict = validate_val_chain(&cusp, &[a0, far], &[1, 1], &cfg()).unwrap();
        match verdict {
            ChainVerdict::Violated { condition: 3, .. } => {}
            other => panic!("expected condition 3 violation, got {other:?}"),
        }
    }

    #[test]
    fn enumerate_chains_recovers_example() {
        let cusp = StratSpec::cusp(3, 2).unwrap();
        let (a0, a1, a2) = cusp_chain_points();
        let pool = vec![(a1, 1usize), (a2.clone(), 0usize)];
        let chains = enumerate_val_chains(&cusp, &a0, 2, &pool, &cfg()).unwrap();
        // trivial chain plus (a0,a1), (a0,a1,a2) and (a0,a2)? -- the last
        // fails condition (4); expect exactly the three valid ones
        assert!(chains.iter().any(|c| c.dims == vec![2, 1, 0]));
        assert!(chains.iter().any(|c| c.dims == vec![2]));
        // origin alone: v(a0 - origin) = <1> = v(a0 - S_{<=1})? no: the
        // nearest curve point is at <4>, so condition (4) fails
        assert!(!chains.iter().any(|c| c.dims == vec![2, 0]));
        // empty pool in a required stratum: only the trivial chain
        let chains = enumerate_val_chains(&cusp, &a0, 2, &[], &cfg()).unwrap();
        assert_eq!(chains.len(), 1);
    }

    #[test]
    fn nested_on_identity_grid_is_identity() {
        // all entries coordinate subspaces: output equals input
        let e = |i: usize| KVector::standard(3, i);
        let full = Subspace::new(3, vec![e(0), e(1), e(2)]).unwrap();
        let line = Subspace::new(3, vec![e(0)]).unwrap();
        let grid = SubspaceGrid::new(
            3,
            vec![3, 1],
            vec![GammaValue::finite_int(2), GammaValue::finite_int(1)],
            vec![vec![full.clone(), line.clone()], vec![line.clone()]],
        )
        .unwrap();
        let v = nested_subspaces(&grid, &cfg()).unwrap();
        for (i, j) in [(0usize, 0usize), (0, 1), (1, 1)] {
            assert_eq!(v.get(i, j).dim(), grid.get(i, j).dim());
            assert_eq!(
                delta_distance(v.get(i, j), grid.get(i, j)).unwrap(),
                GammaValue::Zero
            );
        }
    }

    #[test]
    fn nested_single_column_hand_trace() {
        // m=1, n=2, d=(2,1): V_{0,1} = W_{0,1}, V_{1,1} = W_{1,1}, V_{0,0} = K^2
        let t = PSeries::var;
        let w01 = Subspace::new(
            2,
            vec![KVector::new(vec![PSeries::one(), t().scale(re(0.5))])],
        )
        .unwrap();
        let w11 = Subspace::new(
            2,
            vec![KVector::new(vec![PSeries::one(), t().scale(re(0.5)).add(&mono(2, 1, 0.25)).unwrap()])],
        )
        .unwrap();
        let grid = SubspaceGrid::new(
            2,
            vec![2, 1],
            vec![GammaValue::finite_int(2), GammaValue::finite_int(1)],
            vec![vec![Subspace::full(2), w01.clone()], vec![w11.clone()]],
        )
        .unwrap();
        let v = nested_subspaces(&grid, &cfg()).unwrap();
        assert_eq!(delta_distance(v.get(0, 1), &w01).unwrap(), GammaValue::Zero);
        assert_eq!(delta_distance(v.get(1, 1), &w11).unwrap(), GammaValue::Zero);
        assert_eq!(v.get(0, 0).dim(), 2);
    }

    #[test]
    fn rejected_input_names_hypothesis() {
        // distance bound broken: Δ of the column pair exceeds λ_1/λ_2
        let w01 = Subspace::new(
            2,
            vec![KVector::new(vec![PSeries::one(), PSeries::constant(re(0.5))])],
        )
        .unwrap();
        let w11 = Subspace::new(2, vec![KVector::standard(2, 0)]).unwrap();
        let grid = SubspaceGrid::new(
            2,
            vec![2, 1],
            vec![GammaValue::finite_int(1), GammaValue::finite_int(2)],
            vec![vec![Subspace::full(2), w01], vec![w11]],
        )
        .unwrap();
        match nested_subspaces(&grid, &cfg()) {
            Err(Error::RejectedInput(name, _)) => assert!(name.contains("(iii)")),
            other => panic!("expected rejected input, got {other:?}"),
        }
    }

    #[test]
    fn lipschitz_pipeline_on_example_chain() {
        let cusp = StratSpec::cusp(3, 2).unwrap();
        let (a0, a1, a2) = cusp_chain_points();
        let verdict =
            validate_val_chain(&cusp, &[a0, a1, a2], &[2, 1, 0], &cfg()).unwrap();
        let ChainVerdict::Ok { chain, .. } = verdict else {
            panic!("chain invalid")
        };
        let w = build_w_grid(&cusp, &chain, &cfg()).unwrap();
        let v = nested_subspaces(&w, &cfg()).unwrap();
        let verdict = check_lipschitz_chain(&cusp, &chain, &v, &cfg()).unwrap();
        assert!(verdict.is_ok(), "{verdict:?}");
    }
}
