//! The disordered spin-1 valence-bond chain: per-site isometries, Kraus
//! operators, transfer maps, amplitude tables, the closed-form identity
//! coefficient, the distance of the window channel to its terminal limit,
//! the Gram condition number, and the chain's transfer apparatus.
//!
//! Basis conventions, used consistently everywhere:
//! * the physical spin-1 basis is ordered (+, 0, −) for all 3×3 site
//!   matrices (so S^z = diag(1, 0, −1));
//! * spin configurations are indexed base-3 with digit order (−, 0, +) and
//!   the leftmost site as the most significant digit.

use std::sync::Arc;

use ndarray::Array1;

use crate::apparatus::{Apparatus, SiteMap};
use crate::error::{CoreError, CoreResult};
use crate::linalg::{dagger, eye, kron, operator_norm, CMat, CVec};
use crate::C64;

/// Angles within this distance of a multiple of π/2 are flagged degenerate
/// (a vanishing sine or cosine collapses parts of the model).
pub const DEGENERACY_MARGIN: f64 = 1e-6;

/// A site angle ω. Any finite value is allowed; angles near a multiple of
/// π/2 are flagged degenerate and rejected by the routines that divide by
/// sin or cos unless explicitly overridden.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Angle(f64);

impl Angle {
    pub fn new(value: f64) -> CoreResult<Self> {
        if !value.is_finite() {
            return Err(CoreError::domain(format!(
                "angle must be finite, got {value}"
            )));
        }
        Ok(Angle(value))
    }

    pub fn radians(&self) -> f64 {
        self.0
    }

    pub fn cos(&self) -> f64 {
        self.0.cos()
    }

    pub fn sin(&self) -> f64 {
        self.0.sin()
    }

    /// True when the angle lies within [`DEGENERACY_MARGIN`] of a multiple
    /// of π/2.
    pub fn is_degenerate(&self) -> bool {
        let half_pi = std::f64::consts::FRAC_PI_2;
        let rem = (self.0 / half_pi).round() * half_pi - self.0;
        rem.abs() < DEGENERACY_MARGIN
    }
}

/// A contiguous window of site angles starting at a given site index.
#[derive(Debug, Clone, PartialEq)]
pub struct AngleWindow {
    start: i64,
    angles: Vec<Angle>,
}

impl AngleWindow {
    pub fn new(start: i64, values: &[f64]) -> CoreResult<Self> {
        if values.is_empty() {
            return Err(CoreError::domain("angle window must be nonempty"));
        }
        let angles = values
            .iter()
            .map(|&v| Angle::new(v))
            .collect::<CoreResult<Vec<_>>>()?;
        Ok(AngleWindow { start, angles })
    }

    pub fn constant(start: i64, len: usize, value: f64) -> CoreResult<Self> {
        Self::new(start, &vec![value; len])
    }

    /// First site of the window.
    pub fn start(&self) -> i64 {
        self.start
    }

    /// Last site of the window (inclusive).
    pub fn end(&self) -> i64 {
        self.start + self.angles.len() as i64 - 1
    }

    pub fn len(&self) -> usize {
        self.angles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.angles.is_empty()
    }

    pub fn angles(&self) -> &[Angle] {
        &self.angles
    }

    pub fn angle_at(&self, site: i64) -> CoreResult<Angle> {
        if site < self.start || site > self.end() {
            return Err(CoreError::domain(format!(
                "site {site} lies outside the angle window [{}, {}]",
                self.start,
                self.end()
            )));
        }
        Ok(self.angles[(site - self.start) as usize])
    }

    pub fn has_degenerate(&self) -> bool {
        self.angles.iter().any(Angle::is_degenerate)
    }

    /// Same angles, window translated by `offset`.
    pub fn shifted(&self, offset: i64) -> Self {
        AngleWindow {
            start: self.start + offset,
            angles: self.angles.clone(),
        }
    }

    /// Restriction to the inclusive sub-interval [lo, hi].
    pub fn sub_window(&self, lo: i64, hi: i64) -> CoreResult<Self> {
        if lo > hi || lo < self.start || hi > self.end() {
            return Err(CoreError::domain(format!(
                "[{lo}, {hi}] is not a sub-interval of [{}, {}]",
                self.start,
                self.end()
            )));
        }
        let a = (lo - self.start) as usize;
        let b = (hi - self.start) as usize;
        Ok(AngleWindow {
            start: lo,
            angles: self.angles[a..=b].to_vec(),
        })
    }
}

/// S^z in the (+, 0, −) basis.
pub fn sz() -> CMat {
    let mut m = CMat::zeros((3, 3));
    m[(0, 0)] = C64::new(1.0, 0.0);
    m[(2, 2)] = C64::new(-1.0, 0.0);
    m
}

/// The single-site twist matrix diag(e^{−iθ}, 1, e^{iθ}) = e^{−iθS^z}.
pub fn twist_matrix(theta: f64) -> CMat {
    let mut m = CMat::zeros((3, 3));
    m[(0, 0)] = C64::from_polar(1.0, -theta);
    m[(1, 1)] = C64::new(1.0, 0.0);
    m[(2, 2)] = C64::from_polar(1.0, theta);
    m
}

/// The site isometry V_ω: C² → C³ ⊗ C², a 6×2 matrix whose rows run over
/// (physical, bond) pairs in the order (+,↑), (+,↓), (0,↑), (0,↓), (−,↑),
/// (−,↓).
pub fn isometry(w: Angle) -> CMat {
    let (c, s) = (w.cos(), w.sin());
    let mut v = CMat::zeros((6, 2));
    v[(1, 0)] = C64::new(c, 0.0);
    v[(2, 0)] = C64::new(-s, 0.0);
    v[(3, 1)] = C64::new(s, 0.0);
    v[(4, 1)] = C64::new(-c, 0.0);
    v
}

/// The three Kraus operators [X⁺, X⁰, X⁻] of the site channel, indexed by
/// the physical basis order (+, 0, −). They satisfy
/// [X^{(j)}]_{k,ℓ} = ⟨j,k|V_ω|ℓ⟩ and Σ_j X^{(j)†}X^{(j)} = 1.
pub fn kraus(w: Angle) -> [CMat; 3] {
    let (c, s) = (w.cos(), w.sin());
    let mut xp = CMat::zeros((2, 2));
    xp[(1, 0)] = C64::new(c, 0.0);
    let mut x0 = CMat::zeros((2, 2));
    x0[(0, 0)] = C64::new(-s, 0.0);
    x0[(1, 1)] = C64::new(s, 0.0);
    let mut xm = CMat::zeros((2, 2));
    xm[(0, 1)] = C64::new(-c, 0.0);
    [xp, x0, xm]
}

/// The 4×4 matrix of the site transfer map b ↦ Σ_{p,q} a_{pq} X^{(p)†} b X^{(q)}
/// in the row-major matrix-unit basis of the bond space.
pub fn transfer(a: &CMat, w: Angle) -> CoreResult<CMat> {
    if a.dim() != (3, 3) {
        return Err(CoreError::domain("site observable must be 3×3"));
    }
    let xs = kraus(w);
    let mut rep = CMat::zeros((4, 4));
    for p in 0..3 {
        for q in 0..3 {
            let apq = a[(p, q)];
            if apq == C64::new(0.0, 0.0) {
                continue;
            }
            let block = kron(&dagger(&xs[p]), &xs[q].t().to_owned());
            rep += &block.mapv(|z| z * apq);
        }
    }
    Ok(rep)
}

/// Eigenvalues of the identity transfer map in the orthonormal rescaled
/// Pauli basis, ordered (1, σˣ, σʸ, σᶻ): (1, −sin²ω, −sin²ω, sin²ω − cos²ω).
pub fn transfer_pauli_eigenvalues(w: Angle) -> [f64; 4] {
    let (c2, s2) = (w.cos() * w.cos(), w.sin() * w.sin());
    [1.0, -s2, -s2, s2 - c2]
}

/// The 4×4 matrix of the terminal map b ↦ ½tr[b]·1 in the same basis.
pub fn terminal_rep() -> CMat {
    let mut m = CMat::zeros((4, 4));
    for &row in &[0usize, 3] {
        for &col in &[0usize, 3] {
            m[(row, col)] = C64::new(0.5, 0.0);
        }
    }
    m
}

/// Composite transfer matrix of the identity observable across the window
/// (site maps composed left to right, i.e. the product of the per-site 4×4
/// matrices with the leftmost site applied first).
pub fn channel_rep(window: &AngleWindow) -> CoreResult<CMat> {
    let id3 = eye(3);
    let mut prod = eye(4);
    for &w in window.angles() {
        prod = transfer(&id3, w)?.dot(&prod);
    }
    Ok(prod)
}

/// Distance in operator norm between the window's composite transfer map and
/// the terminal map: max{∏|cos 2ω_j|, ∏ sin²ω_j}.
///
/// The composite map is diagonal in the rescaled Pauli basis, hence normal,
/// so this closed form is the exact operator norm. Degenerate angles are
/// rejected unless `allow_degenerate` (the formula itself stays valid; the
/// override exists for deliberately degenerate probes).
pub fn channel_distance(window: &AngleWindow, allow_degenerate: bool) -> CoreResult<f64> {
    if window.has_degenerate() && !allow_degenerate {
        return Err(CoreError::domain(
            "window contains a degenerate angle (within 1e-6 of a multiple of π/2); \
             pass allow_degenerate to proceed",
        ));
    }
    let mut cos_prod = 1.0f64;
    let mut sin_prod = 1.0f64;
    for w in window.angles() {
        cos_prod *= (2.0 * w.radians()).cos().abs();
        sin_prod *= w.sin() * w.sin();
    }
    Ok(cos_prod.max(sin_prod))
}

/// Maximum number of sites an amplitude table will expand (3¹² entries).
pub const MAX_TABLE_SITES: usize = 12;

/// A spin configuration σ ∈ {−1, 0, +1}^n over a window.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpinConfig(Vec<i8>);

impl SpinConfig {
    pub fn new(spins: Vec<i8>) -> CoreResult<Self> {
        if spins.is_empty() {
            return Err(CoreError::domain("spin configuration must be nonempty"));
        }
        if spins.iter().any(|&s| !(-1..=1).contains(&s)) {
            return Err(CoreError::domain("spins must lie in {−1, 0, +1}"));
        }
        Ok(SpinConfig(spins))
    }

    /// Decode a base-3 index with digit order (−, 0, +) ↦ (0, 1, 2) and the
    /// leftmost site as the most significant digit.
    pub fn from_index(index: usize, len: usize) -> CoreResult<Self> {
        if len == 0 || len > MAX_TABLE_SITES {
            return Err(CoreError::domain(format!(
                "configuration length must lie in 1..={MAX_TABLE_SITES}"
            )));
        }
        let total = 3usize.pow(len as u32);
        if index >= total {
            return Err(CoreError::domain(format!(
                "configuration index {index} out of range for {len} sites"
            )));
        }
        let mut spins = vec![0i8; len];
        let mut rem = index;
        for slot in (0..len).rev() {
            spins[slot] = (rem % 3) as i8 - 1;
            rem /= 3;
        }
        Ok(SpinConfig(spins))
    }

    /// The base-3 index of this configuration (inverse of [`from_index`]).
    pub fn index(&self) -> usize {
        self.0
            .iter()
            .fold(0usize, |acc, &s| acc * 3 + (s + 1) as usize)
    }

    pub fn spins(&self) -> &[i8] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// The configuration with every spin flipped (time reversal).
    pub fn flipped(&self) -> Self {
        SpinConfig(self.0.iter().map(|&s| -s).collect())
    }

    /// Text form, e.g. "+0−" rendered as "+0-".
    pub fn label(&self) -> String {
        self.0
            .iter()
            .map(|&s| match s {
                1 => '+',
                0 => '0',
                _ => '-',
            })
            .collect()
    }
}

/// All amplitudes ⟨σ| over a window for one boundary insertion b:
/// value(σ) = tr[b · X^{σ_n}(ω_n) ⋯ X^{σ_m}(ω_m)].
#[derive(Debug, Clone)]
pub struct AmplitudeTable {
    start: i64,
    len: usize,
    values: Vec<C64>,
}

impl AmplitudeTable {
    pub fn start(&self) -> i64 {
        self.start
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Amplitudes indexed by configuration (see [`SpinConfig::index`]).
    pub fn values(&self) -> &[C64] {
        &self.values
    }

    pub fn value(&self, config: &SpinConfig) -> CoreResult<C64> {
        if config.len() != self.len {
            return Err(CoreError::domain(format!(
                "configuration has {} sites, table covers {}",
                config.len(),
                self.len
            )));
        }
        Ok(self.values[config.index()])
    }
}

/// Expand every configuration amplitude over the window for the boundary
/// insertion b (2×2): one depth-first sweep building the Kraus products
/// rightmost-site-last, O(3^n) matrix multiplications.
pub fn gamma(window: &AngleWindow, b: &CMat) -> CoreResult<AmplitudeTable> {
    if b.dim() != (2, 2) {
        return Err(CoreError::domain("boundary insertion must be 2×2"));
    }
    let n = window.len();
    if n > MAX_TABLE_SITES {
        return Err(CoreError::capacity(format!(
            "amplitude table over {n} sites exceeds the {MAX_TABLE_SITES}-site cap"
        )));
    }
    let site_kraus: Vec<[CMat; 3]> = window.angles().iter().map(|&w| kraus(w)).collect();
    let mut values = vec![C64::new(0.0, 0.0); 3usize.pow(n as u32)];
    // Depth-first over sites left to right; the running product keeps the
    // newest site's Kraus factor on the left, so a leaf holds
    // X^{σ_n} ⋯ X^{σ_m}.
    fn descend(
        depth: usize,
        idx: usize,
        partial: &CMat,
        site_kraus: &[[CMat; 3]],
        b: &CMat,
        values: &mut [C64],
    ) {
        if depth == site_kraus.len() {
            let prod = b.dot(partial);
            values[idx] = prod[(0, 0)] + prod[(1, 1)];
            return;
        }
        for digit in 0..3usize {
            // Digit order (−,0,+) versus physical order (+,0,−).
            let x = &site_kraus[depth][2 - digit];
            let next = x.dot(partial);
            descend(depth + 1, idx * 3 + digit, &next, site_kraus, b, values);
        }
    }
    descend(0, 0, &eye(2), &site_kraus, b, &mut values);
    Ok(AmplitudeTable {
        start: window.start(),
        len: n,
        values,
    })
}

/// Closed form for the identity-insertion amplitude of one configuration,
/// equal to gamma(window, 1).value(config) without expanding the table.
///
/// Nonzero only when the nonzero spins alternate in sign with an even count
/// (or vanish entirely over an even window); the sign bookkeeping tracks how
/// the off-diagonal Kraus factors anticommute with the diagonal ones.
pub fn coefficient(window: &AngleWindow, config: &SpinConfig) -> CoreResult<f64> {
    if config.len() != window.len() {
        return Err(CoreError::domain(format!(
            "configuration has {} sites, window has {}",
            config.len(),
            window.len()
        )));
    }
    let m = window.start();
    let n = window.end();
    let nonzero: Vec<(i64, i8)> = config
        .spins()
        .iter()
        .enumerate()
        .filter(|(_, &s)| s != 0)
        .map(|(off, &s)| (m + off as i64, s))
        .collect();

    if nonzero.is_empty() {
        if config.len() % 2 != 0 {
            return Ok(0.0);
        }
        let prod: f64 = window.angles().iter().map(Angle::sin).product();
        return Ok(2.0 * prod);
    }
    if nonzero.len() % 2 != 0 {
        return Ok(0.0);
    }
    if nonzero.windows(2).any(|pair| pair[0].1 == pair[1].1) {
        return Ok(0.0);
    }

    let mut magnitude = 1.0f64;
    for (off, &s) in config.spins().iter().enumerate() {
        let w = window.angles()[off];
        magnitude *= if s == 0 {
            w.sin()
        } else {
            f64::from(s) * w.cos()
        };
    }
    // Parity of the anticommutation count: each + entry (except the first
    // nonzero) anticommutes past the diagonal factors in the preceding gap;
    // a trailing − wraps the boundary gaps.
    let mut parity = 0i64;
    for pair in nonzero.windows(2) {
        if pair[1].1 == 1 {
            parity += pair[1].0 - pair[0].0 - 1;
        }
    }
    let (first, last) = (nonzero[0], nonzero[nonzero.len() - 1]);
    if last.1 == -1 {
        parity += (first.0 - m) + (n - last.0);
    }
    let sign = if parity % 2 == 0 { 1.0 } else { -1.0 };
    Ok(sign * magnitude)
}

/// The 16×16-free paired transfer product Σ_σ w(σ) · conj(M_σ) ⊗ M_σ as a
/// 4×4 matrix, where M_σ is the window's Kraus product and w(σ) = ∏_x
/// weight_x(σ_x). `weights[i][j]` is site i's weight for physical index j in
/// the (+, 0, −) order; `None` means all weights 1.
///
/// With weights 1 this encodes every pairing ⟨Γ(b), Γ(b′)⟩ = Σ_σ
/// conj(tr[bM_σ])·tr[b′M_σ]; with unimodular twist weights it encodes the
/// twisted bracket.
pub fn paired_transfer_product(
    window: &AngleWindow,
    weights: Option<&[[C64; 3]]>,
) -> CoreResult<CMat> {
    if let Some(ws) = weights {
        if ws.len() != window.len() {
            return Err(CoreError::domain(format!(
                "got {} weight triples for {} sites",
                ws.len(),
                window.len()
            )));
        }
    }
    let one = [C64::new(1.0, 0.0); 3];
    let mut prod = eye(4);
    for (off, &w) in window.angles().iter().enumerate() {
        let xs = kraus(w);
        let site_w = weights.map_or(&one, |ws| &ws[off]);
        let mut layer = CMat::zeros((4, 4));
        for j in 0..3 {
            if site_w[j] == C64::new(0.0, 0.0) {
                continue;
            }
            let conj_x = xs[j].mapv(|z| z.conj());
            layer += &kron(&conj_x, &xs[j]).mapv(|z| z * site_w[j]);
        }
        // Leftmost site applied first ⇒ it sits rightmost in the product.
        prod = layer.dot(&prod);
    }
    Ok(prod)
}

/// The 4×4 Gram matrix G[(i,j),(k,l)] = ⟨Γ(E_ij), Γ(E_kl)⟩ of the window's
/// amplitude map over the matrix-unit basis (row-major order E₁₁, E₁₂, E₂₁,
/// E₂₂). Hermitian positive semidefinite; its trace is exactly 2.
pub fn gram_matrix(window: &AngleWindow) -> CoreResult<CMat> {
    let a = paired_transfer_product(window, None)?;
    let mut g = CMat::zeros((4, 4));
    for i in 0..2 {
        for j in 0..2 {
            for k in 0..2 {
                for l in 0..2 {
                    // ⟨Γ(E_ij), Γ(E_kl)⟩ = A[(j,l),(i,k)].
                    g[(i * 2 + j, k * 2 + l)] = a[(j * 2 + l, i * 2 + k)];
                }
            }
        }
    }
    Ok(g)
}

/// Condition number of the window's amplitude map: the smallest stretch of
/// Γ relative to the normalized boundary norm, κ = 4·λ_min(Gram).
///
/// Degenerate angles are rejected unless `allow_degenerate`.
pub fn condition_number(window: &AngleWindow, allow_degenerate: bool) -> CoreResult<f64> {
    if window.has_degenerate() && !allow_degenerate {
        return Err(CoreError::domain(
            "window contains a degenerate angle (within 1e-6 of a multiple of π/2); \
             pass allow_degenerate to proceed",
        ));
    }
    let g = gram_matrix(window)?;
    let (vals, _) = crate::linalg::hermitian_lowest(&g, 1, crate::linalg::DENSE_EIG_CROSSOVER)?;
    Ok(4.0 * vals[0])
}

/// Transfer apparatus of the chain over an angle window: terminal functional
/// b ↦ ½tr[b], unit section 1, and the per-site transfer maps. Sites outside
/// the window are domain errors at evaluation time.
pub fn aklt_apparatus(window: &AngleWindow) -> CoreResult<Apparatus> {
    let w = window.clone();
    let site_map: SiteMap = Arc::new(move |a: &CMat, j: i64| {
        let angle = w.angle_at(j)?;
        transfer(a, angle)
    });
    let half = eye(2).mapv(|z| z * C64::new(0.5, 0.0));
    let probes = [window.start(), window.end()];
    Apparatus::new(2, 3, half, eye(2), site_map, &probes)
}

/// Closed form for the two-point S^z correlation across [x, x+ℓ], ℓ ≥ 1:
/// −cos²(ω_x)·cos²(ω_{x+ℓ})·∏_{j=1}^{ℓ−1}(sin² − cos²)(ω_{x+j}).
pub fn szsz_closed_form(window: &AngleWindow, x: i64, ell: u32) -> CoreResult<f64> {
    if ell == 0 {
        return Err(CoreError::domain(
            "closed form covers separations ℓ ≥ 1; the coincident point is a \
             different observable",
        ));
    }
    let lo = window.angle_at(x)?;
    let hi = window.angle_at(x + i64::from(ell))?;
    let mut value = -(lo.cos().powi(2)) * hi.cos().powi(2);
    for j in 1..i64::from(ell) {
        let w = window.angle_at(x + j)?;
        value *= w.sin().powi(2) - w.cos().powi(2);
    }
    Ok(value)
}

/// Choi matrix of a map given by its d²×d² matrix-unit representation:
/// C = Σ_{kl} E_kl ⊗ Φ(E_kl). Positive semidefinite iff Φ is completely
/// positive.
pub fn choi_of_rep(rep: &CMat, d: usize) -> CoreResult<CMat> {
    if rep.dim() != (d * d, d * d) {
        return Err(CoreError::domain(format!(
            "representation must be {0}×{0} for site dimension {d}",
            d * d
        )));
    }
    let mut choi = CMat::zeros((d * d, d * d));
    for k in 0..d {
        for l in 0..d {
            // Φ(E_kl) as a d×d block: column (k,l) of the rep, unvectorized.
            for i in 0..d {
                for j in 0..d {
                    choi[(k * d + i, l * d + j)] = rep[(i * d + j, k * d + l)];
                }
            }
        }
    }
    Ok(choi)
}

/// The unit-section defect ‖Φ(1) − 1‖_max and trace defect ‖Φ*(1) − 1‖_max
/// of a site channel given by its Kraus family: (unital, trace-preserving).
pub fn channel_defects(w: Angle) -> (f64, f64) {
    let xs = kraus(w);
    let mut unital = CMat::zeros((2, 2));
    let mut trace = CMat::zeros((2, 2));
    for x in &xs {
        unital += &x.dot(&dagger(x));
        trace += &dagger(x).dot(x);
    }
    let id = eye(2);
    (
        crate::linalg::max_abs(&(&unital - &id)),
        crate::linalg::max_abs(&(&trace - &id)),
    )
}

/// Identity-observable amplitude vector Γ(1) as a coordinate vector in the
/// configuration basis (convenience wrapper over [`gamma`]).
pub fn gamma_identity_vector(window: &AngleWindow) -> CoreResult<CVec> {
    let table = gamma(window, &eye(2))?;
    Ok(Array1::from(table.values().to_vec()))
}

/// Direct (definition-level) transfer action V†(a ⊗ b)V for cross-checks.
pub fn transfer_direct(a: &CMat, b: &CMat, w: Angle) -> CoreResult<CMat> {
    if a.dim() != (3, 3) || b.dim() != (2, 2) {
        return Err(CoreError::domain(
            "direct transfer needs a 3×3 site observable and 2×2 bond matrix",
        ));
    }
    let v = isometry(w);
    let big = kron(a, b);
    Ok(dagger(&v).dot(&big).dot(&v))
}

/// Operator-norm distance between the composite transfer matrix and the
/// terminal matrix, computed directly from the 4×4 representations (the
/// cross-check partner of [`channel_distance`]).
pub fn channel_distance_direct(window: &AngleWindow) -> CoreResult<f64> {
    let diff = channel_rep(window)? - terminal_rep();
    operator_norm(&diff)
}
