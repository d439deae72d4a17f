//! Restricted roots of a compact symmetric pair and the centralizer tower
//! `h`, `z(h)`, `g_h`, `g_H` with the finite group `D_a`.

use nalgebra::{Complex, DMatrix, DVector, SymmetricEigen};
use rand::rngs::StdRng;
use rand::{RngExt, SeedableRng};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::liealg::{MatrixLieAlgebra, SymmetricPair};
use crate::linalg::{canonical_sign, columns, sorted_symmetric_eigen, split_columns};
use crate::spaces::{KMembership, SymmetricSpace};

/// Relative tolerance for grouping eigenvalues of `-ad^2_w` into roots.
pub const CLUSTER_TOL: f64 = 1e-8;
/// Default enumeration bound for `D_a`, in multiples of pi per direction.
pub const DEFAULT_LATTICE_BOUND: i64 = 4;
const MAX_REGULAR_ATTEMPTS: u64 = 8;

/// A positive restricted root with adapted bases of `m_lambda` and `k_lambda`.
#[derive(Clone, Debug)]
pub struct PositiveRoot {
    /// Values `lambda'(X_i)` on the Cartan basis.
    pub lambda_prime: DVector<f64>,
    pub multiplicity: usize,
    /// Orthonormal basis of `m_lambda` (columns).
    pub xi_basis: DMatrix<f64>,
    /// Matched basis of `k_lambda`: `[w, xi^j] = -lambda'(w) zeta^j`.
    pub zeta_basis: DMatrix<f64>,
    pub in_sigma_h: bool,
    pub in_sigma_big_h: bool,
}

impl PositiveRoot {
    /// `lambda'(v)` for `v` given by its coordinates on the Cartan basis.
    pub fn eval(&self, x: &DVector<f64>) -> f64 {
        self.lambda_prime.dot(x)
    }
}

/// The full restricted-root apparatus of a symmetric pair.
#[derive(Clone, Debug)]
pub struct RestrictedRootData {
    pub pair: SymmetricPair,
    pub a_basis: DMatrix<f64>,
    pub roots: Vec<PositiveRoot>,
    /// Regular element used for clustering, in Cartan coordinates.
    pub w_reg: DVector<f64>,
    pub h_basis: DMatrix<f64>,
    pub z_h_basis: DMatrix<f64>,
    pub g_h_basis: DMatrix<f64>,
    pub g_big_h_basis: DMatrix<f64>,
    /// Non-identity elements of `D_a` as matrices of the realization.
    pub d_a_generators: Vec<DMatrix<f64>>,
    /// Their adjoint actions on `g`.
    pub d_a_adjoint: Vec<DMatrix<f64>>,
    /// Indices into `roots` of the roots in `Sigma_H`.
    pub sigma_big_h: Vec<usize>,
    /// Whether `D_a` was computed from group data (false: connected-K default).
    pub d_a_from_group: bool,
}

/// Orthonormal basis of a maximal commutative subspace of `within`
/// containing `seed`.
pub fn maximal_abelian(
    alg: &MatrixLieAlgebra,
    within: &DMatrix<f64>,
    seed: &DVector<f64>,
) -> Result<DMatrix<f64>> {
    if alg.norm(seed) == 0.0 {
        return Err(Error::Input("seed must be nonzero".into()));
    }
    let mut a = alg.orthonormalize(std::slice::from_ref(seed));
    loop {
        let maps: Vec<DMatrix<f64>> =
            split_columns(&a).iter().map(|x| alg.ad_matrix(x)).collect();
        let cent = alg.kernel_within(within, &maps);
        let extra = alg.complement_within(&cent, &a);
        if extra.ncols() == 0 {
            return Ok(a);
        }
        let mut cols = split_columns(&a);
        cols.push(extra.column(0).into_owned());
        a = alg.orthonormalize(&cols);
    }
}

/// Cartan subspace of `m` containing `seed`.
pub fn cartan_subspace(pair: &SymmetricPair, seed: &DVector<f64>) -> Result<DMatrix<f64>> {
    pair.check_in_m(seed, "seed")?;
    maximal_abelian(&pair.algebra, &pair.m_basis, seed)
}

fn default_weights(r: usize) -> DVector<f64> {
    DVector::from_fn(r, |i, _| 1.0 + (i + 1) as f64 / 10.0)
}

/// Positive restricted roots with respect to the Cartan basis `a_basis`,
/// trying the default regular element first and seeded random ones after a
/// degeneracy.
pub fn restricted_roots(
    pair: &SymmetricPair,
    a_basis: &DMatrix<f64>,
) -> Result<(Vec<PositiveRoot>, DVector<f64>)> {
    let r = a_basis.ncols();
    if r == 0 {
        return Err(Error::Input("empty Cartan basis".into()));
    }
    if pair.algebra.commutator_defect(a_basis) > 1e-10 {
        return Err(Error::Input("Cartan basis is not commutative".into()));
    }
    let mut last = None;
    for attempt in 0..MAX_REGULAR_ATTEMPTS {
        let weights = if attempt == 0 {
            default_weights(r)
        } else {
            let mut rng = StdRng::seed_from_u64(attempt);
            DVector::from_fn(r, |_, _| rng.random_range(0.5..1.5))
        };
        match roots_at(pair, a_basis, &weights) {
            Ok(roots) => return Ok((roots, weights)),
            Err(e @ Error::Degeneracy(_)) => last = Some(e),
            Err(e) => return Err(e),
        }
    }
    Err(last.expect("at least one attempt"))
}

/// Roots computed with a fixed regular element `w = sum weights_i X_i`.
pub fn roots_at(
    pair: &SymmetricPair,
    a_basis: &DMatrix<f64>,
    weights: &DVector<f64>,
) -> Result<Vec<PositiveRoot>> {
    let alg = &pair.algebra;
    let w = a_basis * weights;
    let ad_w = alg.ad_matrix(&w);
    let m_perp = alg.complement_within(&pair.m_basis, a_basis);
    if m_perp.ncols() == 0 {
        return Ok(Vec::new());
    }
    let g = alg.inner_product();
    let q = -(m_perp.transpose() * g * &ad_w * &ad_w * &m_perp);
    let (vals, vecs) = sorted_symmetric_eigen(&q);
    let scale = vals.iter().cloned().fold(0.0, f64::max).max(1.0);
    if vals[0] <= CLUSTER_TOL * scale {
        return Err(Error::Degeneracy(format!(
            "regular element {} annihilates part of m outside a",
            fmt_vec(weights)
        )));
    }
    let mut clusters: Vec<Vec<usize>> = Vec::new();
    for i in 0..vals.len() {
        match clusters.last_mut() {
            Some(c) if (vals[i] - vals[c[0]]).abs() <= CLUSTER_TOL * scale => c.push(i),
            _ => clusters.push(vec![i]),
        }
    }
    let ad_x: Vec<DMatrix<f64>> = split_columns(a_basis).iter().map(|x| alg.ad_matrix(x)).collect();
    let mut roots = Vec::new();
    for cluster in clusters {
        let mean = cluster.iter().map(|&i| vals[i]).sum::<f64>() / cluster.len() as f64;
        let lam = mean.sqrt();
        let mut xis: Vec<DVector<f64>> =
            cluster.iter().map(|&i| &m_perp * vecs.column(i)).collect();
        if xis.len() == 1 {
            canonical_sign(&mut xis[0]);
        }
        let xi = columns(alg.dim(), &xis);
        let zeta = -(&ad_w * &xi) / lam;
        let mut lambda_prime = DVector::zeros(a_basis.ncols());
        for (i, ad) in ad_x.iter().enumerate() {
            let b = -(zeta.transpose() * g * ad * &xi);
            let d = b.trace() / b.nrows() as f64;
            let off = (&b - DMatrix::<f64>::identity(b.nrows(), b.nrows()) * d).amax();
            if off > 1e-8 * scale.sqrt() {
                return Err(Error::Degeneracy(format!(
                    "eigenvalue {mean:.6e} of -ad_w^2 mixes distinct roots at weights {}",
                    fmt_vec(weights)
                )));
            }
            lambda_prime[i] = d;
        }
        roots.push(PositiveRoot {
            lambda_prime,
            multiplicity: xis.len(),
            xi_basis: xi,
            zeta_basis: zeta,
            in_sigma_h: false,
            in_sigma_big_h: false,
        });
    }
    Ok(roots)
}

fn fmt_vec(v: &DVector<f64>) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{x:.4}")).collect();
    format!("[{}]", parts.join(", "))
}

/// Centralizer data `h`, `z(h)`, `g_h` and the `Sigma_h` flags.
#[derive(Clone, Debug)]
pub struct CentralizerTower {
    pub h_basis: DMatrix<f64>,
    pub z_h_basis: DMatrix<f64>,
    pub g_h_basis: DMatrix<f64>,
    pub sigma_h: Vec<bool>,
}

fn ad_maps(alg: &MatrixLieAlgebra, b: &DMatrix<f64>) -> Vec<DMatrix<f64>> {
    split_columns(b).iter().map(|x| alg.ad_matrix(x)).collect()
}

/// Orthonormal basis of all of `g` adapted to `m + k`.
pub fn full_basis(pair: &SymmetricPair) -> DMatrix<f64> {
    let mut cols = split_columns(&pair.m_basis);
    cols.extend(split_columns(&pair.k_basis));
    columns(pair.algebra.dim(), &cols)
}

pub fn centralizer_tower(
    pair: &SymmetricPair,
    a_basis: &DMatrix<f64>,
    roots: &[PositiveRoot],
) -> CentralizerTower {
    let alg = &pair.algebra;
    let h_basis = alg.kernel_within(&pair.k_basis, &ad_maps(alg, a_basis));
    let h_maps = ad_maps(alg, &h_basis);
    let z_h_basis = alg.kernel_within(&h_basis, &h_maps);
    let g_h_basis = alg.kernel_within(&full_basis(pair), &h_maps);
    let sigma_h = roots
        .iter()
        .map(|root| alg.kernel_within(&root.xi_basis, &h_maps).ncols() > 0)
        .collect();
    CentralizerTower { h_basis, z_h_basis, g_h_basis, sigma_h }
}

/// Result of the `D_a` enumeration.
#[derive(Clone, Debug)]
pub struct DaData {
    pub generators: Vec<DMatrix<f64>>,
    pub adjoint: Vec<DMatrix<f64>>,
    pub g_big_h_basis: DMatrix<f64>,
    pub sigma_big_h: Vec<bool>,
}

/// Joint functionals of the commuting realization matrices of `a`: row `k`
/// holds the values `chi_k(X_i)` with `X_i u_k = i chi_k(X_i) u_k`.
fn joint_functionals(mats: &[DMatrix<f64>]) -> DMatrix<f64> {
    let n = mats[0].nrows();
    let mut rng = StdRng::seed_from_u64(0x5eed);
    let mut h = DMatrix::<Complex<f64>>::zeros(n, n);
    for m in mats {
        let c: f64 = rng.random_range(0.5..1.5);
        h += m.map(|x| Complex::new(0.0, c * x));
    }
    let eig = SymmetricEigen::new(h);
    let mut out = DMatrix::zeros(n, mats.len());
    for k in 0..n {
        let u = eig.eigenvectors.column(k);
        for (i, m) in mats.iter().enumerate() {
            let mu = m.map(|x| Complex::new(0.0, x));
            // u^* (i X) u = -chi
            let v = (u.adjoint() * mu * u)[(0, 0)];
            out[(k, i)] = -v.re;
        }
    }
    out
}

fn independent_rows(m: &DMatrix<f64>) -> Vec<usize> {
    let mut chosen: Vec<usize> = Vec::new();
    let mut basis: Vec<DVector<f64>> = Vec::new();
    for k in 0..m.nrows() {
        let mut v = m.row(k).transpose();
        for b in &basis {
            let c = b.dot(&v);
            v -= b * c;
        }
        let nv = v.norm();
        if nv > 1e-8 * (1.0 + m.row(k).norm()) {
            basis.push(v / nv);
            chosen.push(k);
        }
        if chosen.len() == m.ncols() {
            break;
        }
    }
    chosen
}

fn near_integer(x: f64) -> bool {
    (x - x.round()).abs() < 1e-8
}

/// `D_a = exp(a) ∩ K`, the fixed-point algebra `g_H` and the `Sigma_H` flags.
///
/// Without a matrix realization or a membership test, `K` is assumed
/// connected: `D_a` is trivial and `g_H = g_h`.
pub fn d_a_and_g_h(
    pair: &SymmetricPair,
    a_basis: &DMatrix<f64>,
    roots: &[PositiveRoot],
    g_h_basis: &DMatrix<f64>,
    k_membership: Option<&KMembership>,
    bound: i64,
) -> Result<DaData> {
    let alg = &pair.algebra;
    let connected = DaData {
        generators: Vec::new(),
        adjoint: Vec::new(),
        g_big_h_basis: g_h_basis.clone(),
        sigma_big_h: vec_sigma_big_h(alg, roots, g_h_basis, &[]),
    };
    let member = match k_membership {
        Some(m) if !alg.basis().is_empty() => m,
        _ => return Ok(connected),
    };
    let mats: Vec<DMatrix<f64>> = split_columns(a_basis)
        .iter()
        .map(|x| alg.matrix_of(x))
        .collect::<Result<_>>()?;
    let chi = joint_functionals(&mats);
    let rows = independent_rows(&chi);
    let r = a_basis.ncols();
    if rows.len() < r {
        return Err(Error::Degeneracy("Cartan realization has dependent functionals".into()));
    }
    let sub = DMatrix::from_fn(r, r, |i, j| chi[(rows[i], j)]);
    let sub_inv = sub
        .try_inverse()
        .ok_or_else(|| Error::Degeneracy("singular functional block".into()))?;
    let size = mats[0].nrows();
    let identity = DMatrix::<f64>::identity(size, size);
    let mut elements: Vec<DMatrix<f64>> = Vec::new();
    let span = (2 * bound + 1) as usize;
    let total = span.pow(r as u32);
    for idx in 0..total {
        let mut rem = idx;
        let n = DVector::from_fn(r, |_, _| {
            let d = (rem % span) as i64 - bound;
            rem /= span;
            d as f64
        });
        let v = &sub_inv * (n * std::f64::consts::PI);
        let on_lattice = (&chi * &v).iter().all(|x| near_integer(x / std::f64::consts::PI));
        if !on_lattice {
            continue;
        }
        let mut gen = DMatrix::zeros(size, size);
        for (m, c) in mats.iter().zip(v.iter()) {
            gen += m * *c;
        }
        let e = gen.exp();
        if !member(&e) {
            continue;
        }
        if !elements.iter().any(|x| (x - &e).amax() < 1e-8) {
            elements.push(e);
        }
    }
    for a in &elements {
        for b in &elements {
            let p = a * b;
            if !elements.iter().any(|x| (x - &p).amax() < 1e-8) {
                return Err(Error::IncompleteEnumeration {
                    bound: bound as f64 * std::f64::consts::PI,
                    detail: format!("{} elements found, products escape the set", elements.len()),
                });
            }
        }
    }
    let generators: Vec<DMatrix<f64>> =
        elements.into_iter().filter(|e| (e - &identity).amax() > 1e-8).collect();
    let adjoint: Vec<DMatrix<f64>> =
        generators.iter().map(|g| alg.group_adjoint(g)).collect::<Result<_>>()?;
    let n = alg.dim();
    let fixed_maps: Vec<DMatrix<f64>> =
        adjoint.iter().map(|ad| ad - DMatrix::<f64>::identity(n, n)).collect();
    let g_big_h_basis = alg.kernel_within(g_h_basis, &fixed_maps);
    let sigma_big_h = vec_sigma_big_h(alg, roots, g_h_basis, &adjoint);
    Ok(DaData { generators, adjoint, g_big_h_basis, sigma_big_h })
}

fn vec_sigma_big_h(
    alg: &MatrixLieAlgebra,
    roots: &[PositiveRoot],
    g_h_basis: &DMatrix<f64>,
    adjoint: &[DMatrix<f64>],
) -> Vec<bool> {
    let p = alg.projector(g_h_basis);
    roots
        .iter()
        .map(|root| {
            let inside = |b: &DMatrix<f64>| (&p * b - b).amax() < 1e-10;
            let fixed = |b: &DMatrix<f64>| adjoint.iter().all(|ad| (ad * b - b).amax() < 1e-10);
            inside(&root.xi_basis)
                && inside(&root.zeta_basis)
                && fixed(&root.xi_basis)
                && fixed(&root.zeta_basis)
        })
        .collect()
}

impl RestrictedRootData {
    /// Full pipeline from the space's default seed.
    pub fn compute(space: &SymmetricSpace) -> Result<Self> {
        Self::compute_with(space, &space.seed, DEFAULT_LATTICE_BOUND)
    }

    pub fn compute_with(space: &SymmetricSpace, seed: &DVector<f64>, bound: i64) -> Result<Self> {
        let pair = space.pair.clone();
        let a_basis = cartan_subspace(&pair, seed)?;
        let (mut roots, w_reg) = restricted_roots(&pair, &a_basis)?;
        let tower = centralizer_tower(&pair, &a_basis, &roots);
        for (root, flag) in roots.iter_mut().zip(&tower.sigma_h) {
            root.in_sigma_h = *flag;
        }
        let da = d_a_and_g_h(
            &pair,
            &a_basis,
            &roots,
            &tower.g_h_basis,
            space.k_membership.as_ref(),
            bound,
        )?;
        let mut sigma_big_h = Vec::new();
        for (i, (root, flag)) in roots.iter_mut().zip(&da.sigma_big_h).enumerate() {
            root.in_sigma_big_h = *flag && root.in_sigma_h;
            if root.in_sigma_big_h {
                sigma_big_h.push(i);
            }
        }
        Ok(RestrictedRootData {
            pair,
            a_basis,
            roots,
            w_reg,
            h_basis: tower.h_basis,
            z_h_basis: tower.z_h_basis,
            g_h_basis: tower.g_h_basis,
            g_big_h_basis: da.g_big_h_basis,
            d_a_generators: da.generators,
            d_a_adjoint: da.adjoint,
            sigma_big_h,
            d_a_from_group: space.k_membership.is_some() && !space.pair.algebra.basis().is_empty(),
        })
    }

    pub fn rank(&self) -> usize {
        self.a_basis.ncols()
    }

    pub fn algebra(&self) -> &MatrixLieAlgebra {
        &self.pair.algebra
    }

    /// Algebra element `sum x_i X_i`.
    pub fn a_element(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.a_basis * x
    }

    /// Roots outside `Sigma_H`.
    pub fn star_roots(&self) -> Vec<usize> {
        (0..self.roots.len()).filter(|i| !self.roots[*i].in_sigma_big_h).collect()
    }

    /// The operator `T` on `g`: `T xi = -zeta`, `T zeta = xi` on every root
    /// space, zero on `a + h`.
    pub fn t_operator(&self) -> DMatrix<f64> {
        let alg = self.algebra();
        let n = alg.dim();
        let g = alg.inner_product();
        let mut t = DMatrix::zeros(n, n);
        for root in &self.roots {
            t -= &root.zeta_basis * root.xi_basis.transpose() * g;
            t += &root.xi_basis * root.zeta_basis.transpose() * g;
        }
        t
    }

    /// Projector onto `m+ ⊕ k+`, the sum of all root spaces.
    pub fn root_space_projector(&self) -> DMatrix<f64> {
        let alg = self.algebra();
        let mut cols = Vec::new();
        for root in &self.roots {
            cols.extend(split_columns(&root.xi_basis));
            cols.extend(split_columns(&root.zeta_basis));
        }
        alg.projector(&columns(alg.dim(), &cols))
    }

    /// Max residual of `[X_i, xi^j] = -lambda'(X_i) zeta^j` and
    /// `[X_i, zeta^j] = lambda'(X_i) xi^j`.
    pub fn pairing_defect(&self) -> f64 {
        let alg = self.algebra();
        let mut worst: f64 = 0.0;
        for (i, x) in split_columns(&self.a_basis).iter().enumerate() {
            let ad = alg.ad_matrix(x);
            for root in &self.roots {
                let l = root.lambda_prime[i];
                worst = worst.max((&ad * &root.xi_basis + &root.zeta_basis * l).amax());
                worst = worst.max((&ad * &root.zeta_basis - &root.xi_basis * l).amax());
            }
        }
        worst
    }

    /// A Cartan subalgebra of `h` (empty when `h = 0`).
    pub fn h_cartan(&self) -> Result<DMatrix<f64>> {
        if self.h_basis.ncols() == 0 {
            return Ok(self.h_basis.clone());
        }
        maximal_abelian(self.algebra(), &self.h_basis, &self.h_basis.column(0).into_owned())
    }

    pub fn report(&self, space: &str) -> RootReport {
        RootReport {
            space: space.to_string(),
            dim_g: self.algebra().dim(),
            dim_m: self.pair.dim_m(),
            dim_k: self.pair.dim_k(),
            rank: self.rank(),
            roots: self
                .roots
                .iter()
                .map(|r| RootEntry {
                    lambda_prime: r.lambda_prime.iter().cloned().collect(),
                    lambda_prime_at_w_reg: r.eval(&self.w_reg),
                    multiplicity: r.multiplicity,
                    in_sigma_h: r.in_sigma_h,
                    in_sigma_big_h: r.in_sigma_big_h,
                })
                .collect(),
            dim_h: self.h_basis.ncols(),
            dim_z_h: self.z_h_basis.ncols(),
            dim_g_h: self.g_h_basis.ncols(),
            dim_g_big_h: self.g_big_h_basis.ncols(),
            d_a_nontrivial_elements: self.d_a_generators.len(),
            d_a_from_group: self.d_a_from_group,
        }
    }
}

/// Serializable summary of the root data.
#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct RootReport {
    pub space: String,
    pub dim_g: usize,
    pub dim_m: usize,
    pub dim_k: usize,
    pub rank: usize,
    pub roots: Vec<RootEntry>,
    pub dim_h: usize,
    pub dim_z_h: usize,
    pub dim_g_h: usize,
    #[serde(rename = "dim_g_H")]
    pub dim_g_big_h: usize,
    pub d_a_nontrivial_elements: usize,
    pub d_a_from_group: bool,
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct RootEntry {
    pub lambda_prime: Vec<f64>,
    pub lambda_prime_at_w_reg: f64,
    pub multiplicity: usize,
    pub in_sigma_h: bool,
    #[serde(rename = "in_sigma_H")]
    pub in_sigma_big_h: bool,
}
