//! The generic transfer apparatus: a terminal functional, a per-site family
//! of transfer maps, and a unit section, whose composition reproduces all
//! local expectation values of a translation-covariant state.
//!
//! Expectation values are evaluated by a single sweep over the observable's
//! support: the unit section enters at the leftmost site and each site's
//! transfer map is applied in ascending site order, with the terminal
//! functional closing the contraction. Restricting the sweep to the support
//! is exact because the apparatus axioms make the identity transfer map fix
//! both the unit section and the terminal functional; both facts are checked
//! on construction.
//!
//! The block approximant returned by [`block_approximant`] evaluates the
//! p-block product state averaged over the p grid offsets. Blocks truncated
//! by the window's edges are evaluated as shorter blocks, which is the same
//! as padding the observable with identity factors to fill the block.

use std::sync::Arc;

use ndarray::Array1;

use crate::error::{CoreError, CoreResult};
use crate::linalg::{
    self, check_finite, eye, numerical_rank, CMat, CVec, Tolerance,
};
use crate::C64;

/// Flatten a matrix row-major.
pub fn vec_r(m: &CMat) -> CVec {
    Array1::from_iter(m.iter().cloned())
}

/// Inverse of [`vec_r`] for square matrices.
pub fn unvec_r(v: &CVec, d: usize) -> CMat {
    let mut m = CMat::zeros((d, d));
    for i in 0..d {
        for j in 0..d {
            m[(i, j)] = v[i * d + j];
        }
    }
    m
}

/// Per-site transfer-map factory: observable and site index to the D²×D²
/// transfer matrix in the row-major matrix-unit basis.
pub type SiteMap = Arc<dyn Fn(&CMat, i64) -> CoreResult<CMat> + Send + Sync>;

/// Transfer apparatus (terminal functional, per-site transfer maps, unit
/// section) over a bond space of dimension D and site dimension d.
///
/// The per-site map takes a d×d site observable and a site index and returns
/// the D²×D² matrix of the corresponding transfer map in the row-major
/// matrix-unit basis of the bond space.
#[derive(Clone)]
pub struct Apparatus {
    bond_dim: usize,
    site_dim: usize,
    /// Weight matrix w of the terminal functional ϱ(b) = tr[w·b].
    terminal: CMat,
    /// Unit section e (a D×D bond matrix).
    unit: CMat,
    site_map: SiteMap,
}

impl Apparatus {
    /// Build an apparatus and verify its axioms at the given probe sites
    /// (sites where the site map is defined, e.g. the ends of the angle
    /// window): ϱ(e) = 1, E_1(e) = e, and ϱ∘E_1 = ϱ (each within 1e-10).
    pub fn new(
        bond_dim: usize,
        site_dim: usize,
        terminal: CMat,
        unit: CMat,
        site_map: SiteMap,
        probe_sites: &[i64],
    ) -> CoreResult<Self> {
        if terminal.dim() != (bond_dim, bond_dim) || unit.dim() != (bond_dim, bond_dim) {
            return Err(CoreError::domain(
                "terminal and unit section must be D×D bond matrices",
            ));
        }
        if probe_sites.is_empty() {
            return Err(CoreError::domain(
                "apparatus construction needs at least one probe site",
            ));
        }
        check_finite(&terminal)?;
        check_finite(&unit)?;
        let app = Apparatus {
            bond_dim,
            site_dim,
            terminal,
            unit,
            site_map,
        };
        let unit_val = app.terminal_of(&vec_r(&app.unit));
        if (unit_val - C64::new(1.0, 0.0)).norm() > 1e-12 {
            return Err(CoreError::domain(format!(
                "terminal(unit_section) = {unit_val} must equal 1"
            )));
        }
        let id_site = eye(site_dim);
        let unit_vec = vec_r(&app.unit);
        let term_row = app.terminal_row();
        for &j in probe_sites {
            let rep = (app.site_map)(&id_site, j)?;
            if rep.dim() != (bond_dim * bond_dim, bond_dim * bond_dim) {
                return Err(CoreError::domain(
                    "site map must return a D²×D² transfer matrix",
                ));
            }
            let moved = rep.dot(&unit_vec);
            let unit_err: f64 = moved
                .iter()
                .zip(unit_vec.iter())
                .map(|(a, b)| (a - b).norm())
                .fold(0.0, f64::max);
            if unit_err > 1e-12 {
                return Err(CoreError::domain(format!(
                    "identity transfer map must fix the unit section (site {j}, defect {unit_err:.3e})"
                )));
            }
            // ϱ∘E_1 = ϱ — required for support trimming to be exact.
            let composed = term_row.dot(&rep);
            let term_err: f64 = composed
                .iter()
                .zip(term_row.iter())
                .map(|(a, b)| (a - b).norm())
                .fold(0.0, f64::max);
            if term_err > 1e-10 {
                return Err(CoreError::domain(format!(
                    "identity transfer map must preserve the terminal functional (site {j}, defect {term_err:.3e})"
                )));
            }
        }
        Ok(app)
    }

    pub fn bond_dim(&self) -> usize {
        self.bond_dim
    }

    pub fn site_dim(&self) -> usize {
        self.site_dim
    }

    /// The transfer matrix of observable `a` at site `j`.
    pub fn transfer_at(&self, a: &CMat, j: i64) -> CoreResult<CMat> {
        (self.site_map)(a, j)
    }

    /// ϱ applied to a vectorized bond matrix.
    fn terminal_of(&self, v: &CVec) -> C64 {
        self.terminal_row().dot(v)
    }

    /// Row vector r with ϱ(b) = r·vec_r(b), i.e. r = vec_r(wᵀ).
    fn terminal_row(&self) -> CVec {
        vec_r(&self.terminal.t().to_owned())
    }

    fn evaluate_tensor(&self, start: i64, factors: &[CMat]) -> CoreResult<C64> {
        let mut v = vec_r(&self.unit);
        for (offset, a) in factors.iter().enumerate() {
            if a.dim() != (self.site_dim, self.site_dim) {
                return Err(CoreError::domain(format!(
                    "observable factor must be {d}×{d}",
                    d = self.site_dim
                )));
            }
            let rep = (self.site_map)(a, start + offset as i64)?;
            v = rep.dot(&v);
        }
        Ok(self.terminal_of(&v))
    }
}

/// Evaluation interface shared by the transfer apparatus and its block
/// approximant.
pub trait Evaluate {
    fn site_dim(&self) -> usize;
    /// Expectation value of a local observable.
    fn evaluate(&self, obs: &LocalObservable) -> CoreResult<C64>;
}

impl Evaluate for Apparatus {
    fn site_dim(&self) -> usize {
        self.site_dim
    }

    fn evaluate(&self, obs: &LocalObservable) -> CoreResult<C64> {
        let mut total = C64::new(0.0, 0.0);
        for (w, factors) in &obs.terms {
            total += *w * self.evaluate_tensor(obs.start, factors)?;
        }
        Ok(total)
    }
}

/// A local observable on a contiguous window: a weighted sum of pure tensor
/// products of per-site matrices (a single tensor in the common case).
#[derive(Clone)]
pub struct LocalObservable {
    start: i64,
    /// (weight, one factor per site) — all terms share the window.
    terms: Vec<(C64, Vec<CMat>)>,
}

impl LocalObservable {
    /// A pure tensor product of per-site factors starting at `start`.
    pub fn tensor(start: i64, factors: Vec<CMat>) -> CoreResult<Self> {
        if factors.is_empty() {
            return Err(CoreError::domain("observable must cover at least one site"));
        }
        let d = factors[0].nrows();
        for f in &factors {
            if f.dim() != (d, d) {
                return Err(CoreError::domain(
                    "observable factors must be square matrices of one common dimension",
                ));
            }
            check_finite(f)?;
        }
        Ok(LocalObservable {
            start,
            terms: vec![(C64::new(1.0, 0.0), factors)],
        })
    }

    /// A single-site observable.
    pub fn site_op(site: i64, a: CMat) -> CoreResult<Self> {
        Self::tensor(site, vec![a])
    }

    /// A weighted sum of pure tensors sharing one window.
    pub fn weighted_sum(start: i64, terms: Vec<(C64, Vec<CMat>)>) -> CoreResult<Self> {
        if terms.is_empty() {
            return Err(CoreError::domain("weighted sum needs at least one term"));
        }
        let len = terms[0].1.len();
        let d = terms[0]
            .1
            .first()
            .map(|m| m.nrows())
            .ok_or_else(|| CoreError::domain("terms must cover at least one site"))?;
        for (_, factors) in &terms {
            if factors.len() != len {
                return Err(CoreError::domain("all terms must share the window"));
            }
            for f in factors {
                if f.dim() != (d, d) {
                    return Err(CoreError::domain(
                        "observable factors must be square matrices of one common dimension",
                    ));
                }
                check_finite(f)?;
            }
        }
        Ok(LocalObservable { start, terms })
    }

    /// Inclusive support interval (m, n).
    pub fn support(&self) -> (i64, i64) {
        (self.start, self.start + self.terms[0].1.len() as i64 - 1)
    }

    pub fn terms(&self) -> &[(C64, Vec<CMat>)] {
        &self.terms
    }

    /// Upper bound on the operator norm: Σ_t |w_t| ∏_j σ_max(a_{t,j}).
    /// Exact for a single pure tensor.
    pub fn norm_bound(&self) -> CoreResult<f64> {
        let mut total = 0.0;
        for (w, factors) in &self.terms {
            let mut prod = w.norm();
            for f in factors {
                prod *= linalg::operator_norm(f)?;
            }
            total += prod;
        }
        Ok(total)
    }

    /// The same observable with identity factors appended on both sides
    /// (support grows to [m − left, n + right]).
    pub fn padded(&self, left: usize, right: usize) -> Self {
        let d = self.terms[0].1[0].nrows();
        let id = eye(d);
        let terms = self
            .terms
            .iter()
            .map(|(w, factors)| {
                let mut padded = Vec::with_capacity(factors.len() + left + right);
                padded.extend(std::iter::repeat_with(|| id.clone()).take(left));
                padded.extend(factors.iter().cloned());
                padded.extend(std::iter::repeat_with(|| id.clone()).take(right));
                (*w, padded)
            })
            .collect();
        LocalObservable {
            start: self.start - left as i64,
            terms,
        }
    }
}

/// Apparatus of a pure product state ⊗_j ρ_j over sites
/// start..start+len−1 (bond dimension 1).
///
/// Each ρ_j must be a density matrix: Hermitian, positive semidefinite and
/// of unit trace, all within 1e-10.
pub fn product_apparatus(states: &[CMat], start: i64) -> CoreResult<Apparatus> {
    if states.is_empty() {
        return Err(CoreError::domain("product apparatus needs at least one site"));
    }
    let d = states[0].nrows();
    for (idx, rho) in states.iter().enumerate() {
        if rho.dim() != (d, d) {
            return Err(CoreError::domain(
                "product-state factors must share one dimension",
            ));
        }
        check_finite(rho)?;
        let herm = linalg::max_abs(&(rho - &linalg::dagger(rho)));
        if herm > 1e-10 {
            return Err(CoreError::domain(format!(
                "site state {idx} is not Hermitian (defect {herm:.3e})"
            )));
        }
        let tr: C64 = (0..d).map(|i| rho[(i, i)]).sum();
        if (tr - C64::new(1.0, 0.0)).norm() > 1e-10 {
            return Err(CoreError::domain(format!(
                "site state {idx} must have unit trace, got {tr}"
            )));
        }
        let (vals, _) = linalg::hermitian_lowest(rho, 1, linalg::DENSE_EIG_CROSSOVER)?;
        if vals[0] < -1e-10 {
            return Err(CoreError::domain(format!(
                "site state {idx} is not positive semidefinite (λ_min = {:.3e})",
                vals[0]
            )));
        }
    }
    let states: Vec<CMat> = states.to_vec();
    let len = states.len() as i64;
    let site_map: SiteMap = Arc::new(move |a: &CMat, j: i64| {
        if j < start || j >= start + len {
            return Err(CoreError::domain(format!(
                "site {j} lies outside the product state's range [{start}, {})",
                start + len
            )));
        }
        let rho = &states[(j - start) as usize];
        let val: C64 = rho
            .t()
            .iter()
            .zip(a.iter())
            .map(|(r, x)| r * x)
            .sum();
        let mut rep = CMat::zeros((1, 1));
        rep[(0, 0)] = val;
        Ok(rep)
    });
    let one = eye(1);
    let probes = [start, start + len - 1];
    Apparatus::new(1, d, one.clone(), one, site_map, &probes)
}

/// Block approximant: evaluates the p-block product state built from `base`,
/// averaged over the p translates of the block grid inside `window`.
#[derive(Clone)]
pub struct BlockApparatus {
    base: Apparatus,
    p: usize,
    window: (i64, i64),
}

/// Build the block approximant of `base` with block length `p` on `window`
/// (inclusive interval). `p = 0` is rejected.
pub fn block_approximant(
    base: &Apparatus,
    p: usize,
    window: (i64, i64),
) -> CoreResult<BlockApparatus> {
    if p == 0 {
        return Err(CoreError::domain("block length p must be positive"));
    }
    if window.0 > window.1 {
        return Err(CoreError::domain("block window is empty"));
    }
    Ok(BlockApparatus {
        base: base.clone(),
        p,
        window,
    })
}

impl BlockApparatus {
    pub fn p(&self) -> usize {
        self.p
    }

    pub fn window(&self) -> (i64, i64) {
        self.window
    }
}

impl Evaluate for BlockApparatus {
    fn site_dim(&self) -> usize {
        self.base.site_dim()
    }

    fn evaluate(&self, obs: &LocalObservable) -> CoreResult<C64> {
        let (m, n) = obs.support();
        if m < self.window.0 || n > self.window.1 {
            return Err(CoreError::domain(format!(
                "observable support [{m}, {n}] exceeds the approximant window [{}, {}]",
                self.window.0, self.window.1
            )));
        }
        let p = self.p as i64;
        let mut total = C64::new(0.0, 0.0);
        for r in 0..self.p as i64 {
            // Cut positions inside the support: c separates sites c−1 | c.
            // The grid for offset r starts blocks at window.0 + r + k·p.
            let mut cuts: Vec<i64> = Vec::new();
            let mut c = self.window.0 + r;
            while c <= n {
                if c > m {
                    cuts.push(c);
                }
                c += p;
            }
            for (w, factors) in obs.terms() {
                let mut value = C64::new(1.0, 0.0);
                let mut seg_start = m;
                for &cut in cuts.iter().chain(std::iter::once(&(n + 1))) {
                    let lo = (seg_start - m) as usize;
                    let hi = (cut - m) as usize;
                    let segment = factors[lo..hi].to_vec();
                    value *= self
                        .base
                        .evaluate(&LocalObservable::tensor(seg_start, segment)?)?;
                    seg_start = cut;
                }
                total += *w * value;
            }
        }
        Ok(total / C64::new(self.p as f64, 0.0))
    }
}

/// Numerical rank of the two-sided correlation matrix across the cut between
/// sites `cut_after` and `cut_after + 1`.
///
/// Rows run over the matrix-unit operator basis of the `gen_radius` sites
/// left of the cut, columns over the same basis right of the cut, both in
/// lexicographic site-major order; entry (c, a) is evaluate(c ⊗ a).
pub fn correlation_rank(
    app: &dyn Evaluate,
    cut_after: i64,
    gen_radius: usize,
    tol: Tolerance,
) -> CoreResult<usize> {
    if gen_radius == 0 {
        return Err(CoreError::domain("generation radius must be at least 1"));
    }
    let d = app.site_dim();
    let per_site = d * d;
    let side = per_site.pow(gen_radius as u32);
    if side > 1 << 12 {
        return Err(CoreError::capacity(format!(
            "correlation matrix side {side} exceeds the 4096 cap"
        )));
    }
    let start = cut_after - gen_radius as i64 + 1;
    let mut m = CMat::zeros((side, side));
    let units: Vec<CMat> = (0..per_site)
        .map(|u| {
            let mut e = CMat::zeros((d, d));
            e[(u / d, u % d)] = C64::new(1.0, 0.0);
            e
        })
        .collect();
    for row in 0..side {
        let left = factors_of_index(row, gen_radius, per_site, &units);
        for col in 0..side {
            let right = factors_of_index(col, gen_radius, per_site, &units);
            let mut factors = left.clone();
            factors.extend(right.iter().cloned());
            let obs = LocalObservable::tensor(start, factors)?;
            m[(row, col)] = app.evaluate(&obs)?;
        }
    }
    numerical_rank(&m, tol)
}

fn factors_of_index(index: usize, sites: usize, per_site: usize, units: &[CMat]) -> Vec<CMat> {
    let mut digits = vec![0usize; sites];
    let mut rem = index;
    for slot in (0..sites).rev() {
        digits[slot] = rem % per_site;
        rem /= per_site;
    }
    digits.into_iter().map(|u| units[u].clone()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::array;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    /// diag(1, 0, −1) in the (+, 0, −) ordering of the spin-1 basis.
    fn sz3() -> CMat {
        let mut m = CMat::zeros((3, 3));
        m[(0, 0)] = c(1.0, 0.0);
        m[(2, 2)] = c(-1.0, 0.0);
        m
    }

    fn maximally_mixed(d: usize) -> CMat {
        eye(d).mapv(|z| z / C64::new(d as f64, 0.0))
    }

    fn basis_state(d: usize, which: usize) -> CMat {
        let mut m = CMat::zeros((d, d));
        m[(which, which)] = c(1.0, 0.0);
        m
    }

    #[test]
    fn product_state_pure_tensor_factorizes() {
        let app = product_apparatus(&[maximally_mixed(3), maximally_mixed(3)], 0).unwrap();
        let a = array![
            [c(1.0, 0.0), c(2.0, 0.0), c(0.0, 0.0)],
            [c(0.0, 0.0), c(3.0, 0.0), c(0.0, 0.0)],
            [c(0.0, 0.0), c(0.0, 0.0), c(5.0, 0.0)]
        ];
        let b = eye(3).mapv(|z| z * c(2.0, 0.0));
        let obs = LocalObservable::tensor(0, vec![a.clone(), b.clone()]).unwrap();
        let got = app.evaluate(&obs).unwrap();
        // ∏ tr(a_j)/d = (9/3)·(6/3) = 6.
        assert_abs_diff_eq!(got.re, 6.0, epsilon = 1e-12);
        assert_abs_diff_eq!(got.im, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn product_state_sz_examples() {
        // |0⟩⟨0| (index 1 in the (+,0,−) ordering) → ⟨S^z⟩ = 0.
        let app = product_apparatus(&[basis_state(3, 1)], 0).unwrap();
        let got = app
            .evaluate(&LocalObservable::site_op(0, sz3()).unwrap())
            .unwrap();
        assert_abs_diff_eq!(got.norm(), 0.0, epsilon = 1e-12);

        // |+⟩⟨+| ⊗ |−⟩⟨−| → ⟨S^z S^z⟩ = −1.
        let app2 = product_apparatus(&[basis_state(3, 0), basis_state(3, 2)], 5).unwrap();
        let obs = LocalObservable::tensor(5, vec![sz3(), sz3()]).unwrap();
        let got2 = app2.evaluate(&obs).unwrap();
        assert_abs_diff_eq!(got2.re, -1.0, epsilon = 1e-12);
    }

    #[test]
    fn product_apparatus_rejects_bad_states() {
        // Trace ≠ 1.
        let bad = eye(2).mapv(|z| z * c(2.0, 0.0));
        assert!(matches!(
            product_apparatus(&[bad], 0),
            Err(CoreError::Domain(_))
        ));
        // Not PSD.
        let mut neg = eye(2);
        neg[(0, 0)] = c(-0.5, 0.0);
        neg[(1, 1)] = c(1.5, 0.0);
        assert!(matches!(
            product_apparatus(&[neg], 0),
            Err(CoreError::Domain(_))
        ));
    }

    #[test]
    fn evaluate_outside_range_is_domain_error() {
        let app = product_apparatus(&[maximally_mixed(2)], 0).unwrap();
        let obs = LocalObservable::site_op(3, eye(2)).unwrap();
        assert!(matches!(app.evaluate(&obs), Err(CoreError::Domain(_))));
    }

    #[test]
    fn unit_padding_is_exact() {
        let app =
            product_apparatus(&[maximally_mixed(2), maximally_mixed(2), maximally_mixed(2)], 0)
                .unwrap();
        let a = array![[c(1.0, 0.0), c(0.5, 0.5)], [c(0.5, -0.5), c(2.0, 0.0)]];
        let obs = LocalObservable::site_op(1, a).unwrap();
        let v1 = app.evaluate(&obs).unwrap();
        let v2 = app.evaluate(&obs.padded(1, 1)).unwrap();
        assert_abs_diff_eq!((v1 - v2).norm(), 0.0, epsilon = 1e-13);
    }

    #[test]
    fn evaluate_is_linear_in_weighted_sums() {
        let app = product_apparatus(&[maximally_mixed(2), maximally_mixed(2)], 0).unwrap();
        let a = array![[c(1.0, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), c(-1.0, 0.0)]];
        let b = array![[c(0.0, 0.0), c(1.0, 0.0)], [c(1.0, 0.0), c(0.0, 0.0)]];
        let id = eye(2);
        let w1 = c(0.7, -0.2);
        let w2 = c(-1.3, 0.4);
        let sum = LocalObservable::weighted_sum(
            0,
            vec![
                (w1, vec![a.clone(), id.clone()]),
                (w2, vec![b.clone(), id.clone()]),
            ],
        )
        .unwrap();
        let lhs = app.evaluate(&sum).unwrap();
        let rhs = w1 * app
            .evaluate(&LocalObservable::tensor(0, vec![a, id.clone()]).unwrap())
            .unwrap()
            + w2 * app
                .evaluate(&LocalObservable::tensor(0, vec![b, id]).unwrap())
                .unwrap();
        assert_abs_diff_eq!((lhs - rhs).norm(), 0.0, epsilon = 1e-13);
    }

    #[test]
    fn block_approximant_p1_is_exact_on_product_state() {
        let states: Vec<CMat> = (0..4).map(|_| maximally_mixed(2)).collect();
        let app = product_apparatus(&states, 0).unwrap();
        let blocked = block_approximant(&app, 1, (0, 3)).unwrap();
        let a = array![[c(1.0, 0.0), c(0.2, 0.1)], [c(0.2, -0.1), c(0.5, 0.0)]];
        let obs = LocalObservable::tensor(1, vec![a.clone(), a]).unwrap();
        let exact = app.evaluate(&obs).unwrap();
        let approx_val = blocked.evaluate(&obs).unwrap();
        assert_abs_diff_eq!((exact - approx_val).norm(), 0.0, epsilon = 1e-13);
    }

    #[test]
    fn block_approximant_rejects_p0_and_out_of_window() {
        let app = product_apparatus(&[maximally_mixed(2)], 0).unwrap();
        assert!(matches!(
            block_approximant(&app, 0, (0, 0)),
            Err(CoreError::Domain(_))
        ));
        let blocked = block_approximant(&app, 2, (0, 0)).unwrap();
        let obs = LocalObservable::site_op(4, eye(2)).unwrap();
        assert!(matches!(blocked.evaluate(&obs), Err(CoreError::Domain(_))));
    }

    #[test]
    fn correlation_rank_of_product_state_is_one() {
        let states: Vec<CMat> = (0..4).map(|_| maximally_mixed(3)).collect();
        let app = product_apparatus(&states, 0).unwrap();
        let rank = correlation_rank(&app, 1, 1, Tolerance::default()).unwrap();
        assert_eq!(rank, 1);
        let rank2 = correlation_rank(&app, 1, 2, Tolerance::default()).unwrap();
        assert_eq!(rank2, 1);
    }
}
