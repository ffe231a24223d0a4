//! Polynomials in the unilateral shift `T`, their finite sections, and the
//! two norm estimates used to cross-check each other: Lanczos iteration on
//! the truncated matrix and the sup of the symbol on roots of unity.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64;
use num_integer::Integer;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};

pub type Complex = Complex64;

/// `Σ c_m T^m` with distinct exponents and no zero coefficients.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct OperatorPoly {
    terms: BTreeMap<u64, Complex>,
}

impl OperatorPoly {
    pub fn zero() -> Self {
        OperatorPoly::default()
    }

    pub fn identity() -> Self {
        Self::monomial(0)
    }

    /// The shift `T`.
    pub fn shift() -> Self {
        Self::monomial(1)
    }

    pub fn monomial(exponent: u64) -> Self {
        Self::term(exponent, Complex::new(1.0, 0.0))
    }

    pub fn term(exponent: u64, coeff: Complex) -> Self {
        Self::from_terms([(exponent, coeff)])
    }

    /// Sums repeated exponents and drops zero coefficients.
    pub fn from_terms<I: IntoIterator<Item = (u64, Complex)>>(terms: I) -> Self {
        let mut map: BTreeMap<u64, Complex> = BTreeMap::new();
        for (m, c) in terms {
            *map.entry(m).or_default() += c;
        }
        map.retain(|_, c| *c != Complex::new(0.0, 0.0));
        OperatorPoly { terms: map }
    }

    /// Real coefficients `coeffs[m]` of `T^m`.
    pub fn from_real(coeffs: &[f64]) -> Self {
        Self::from_terms(
            coeffs
                .iter()
                .enumerate()
                .map(|(m, &c)| (m as u64, Complex::new(c, 0.0))),
        )
    }

    pub fn terms(&self) -> &BTreeMap<u64, Complex> {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Largest exponent; `None` for the zero polynomial.
    pub fn degree(&self) -> Option<u64> {
        self.terms.keys().next_back().copied()
    }

    /// `Some(e)` when the polynomial is exactly `T^e`.
    pub fn as_monomial(&self) -> Option<u64> {
        match self.terms.iter().next() {
            Some((&e, &c)) if self.terms.len() == 1 && c == Complex::new(1.0, 0.0) => Some(e),
            _ => None,
        }
    }

    /// Greatest common divisor of the non-zero exponents, or 1 if there are
    /// none.
    pub fn exponent_gcd(&self) -> u64 {
        let g = self.terms.keys().filter(|&&m| m > 0).fold(0u64, |g, &m| g.gcd(&m));
        g.max(1)
    }

    pub fn scale(&self, c: Complex) -> Self {
        Self::from_terms(self.terms.iter().map(|(&m, &a)| (m, a * c)))
    }

    pub fn add(&self, other: &Self) -> Self {
        Self::from_terms(self.terms.iter().chain(other.terms.iter()).map(|(&m, &c)| (m, c)))
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        let mut out = Vec::with_capacity(self.terms.len() * other.terms.len());
        for (&a, &ca) in &self.terms {
            for (&b, &cb) in &other.terms {
                let e = a
                    .checked_add(b)
                    .ok_or_else(|| Error::OverflowGuard("polynomial product exponent".into()))?;
                out.push((e, ca * cb));
            }
        }
        Ok(Self::from_terms(out))
    }

    pub fn pow(&self, k: u64) -> Result<Self> {
        let mut result = Self::identity();
        let mut base = self.clone();
        let mut k = k;
        while k > 0 {
            if k & 1 == 1 {
                result = result.mul(&base)?;
            }
            k >>= 1;
            if k > 0 {
                base = base.mul(&base)?;
            }
        }
        Ok(result)
    }

    /// The Coburn endomorphism `T ↦ T^n` applied to an analytic polynomial:
    /// every exponent is multiplied by `n`, coefficients are unchanged.
    pub fn coburn(&self, n: u64) -> Result<Self> {
        let mut terms = BTreeMap::new();
        for (&m, &c) in &self.terms {
            let e = m
                .checked_mul(n)
                .ok_or_else(|| Error::OverflowGuard(format!("exponent {m} * {n}")))?;
            terms.insert(e, c);
        }
        if n == 0 {
            // Every term collapses onto the identity.
            return Ok(Self::from_terms(self.terms.values().map(|&c| (0, c))));
        }
        Ok(OperatorPoly { terms })
    }

    /// Value of the symbol `Σ c_m z^m` at `z`.
    pub fn symbol_at(&self, z: Complex) -> Complex {
        self.terms.iter().map(|(&m, &c)| c * z.powu(m as u32)).sum()
    }
}

/// `coburn_map(n)` as a free-standing map on polynomials.
pub fn coburn_map(n: u64) -> impl Fn(&OperatorPoly) -> Result<OperatorPoly> {
    move |p| p.coburn(n)
}

fn fmt_coeff(c: Complex) -> String {
    if c.im == 0.0 {
        format!("{}", c.re)
    } else {
        format!("({}{:+}i)", c.re, c.im)
    }
}

impl fmt::Display for OperatorPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let parts: Vec<String> = self
            .terms
            .iter()
            .map(|(&m, &c)| {
                let var = match m {
                    0 => String::new(),
                    1 => "T".to_string(),
                    _ => format!("T^{m}"),
                };
                match (var.is_empty(), c == Complex::new(1.0, 0.0)) {
                    (true, _) => fmt_coeff(c),
                    (false, true) => var,
                    (false, false) => format!("{}*{var}", fmt_coeff(c)),
                }
            })
            .collect();
        write!(f, "{}", parts.join(" + "))
    }
}

impl Serialize for OperatorPoly {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl std::str::FromStr for OperatorPoly {
    type Err = Error;

    /// Parses sums of terms `c`, `T`, `T^m`, `c*T^m` with real `c`, e.g.
    /// `1 + 2*T^3 - 0.5*T`.
    fn from_str(s: &str) -> Result<Self> {
        let cleaned: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        if cleaned.is_empty() {
            return Err(Error::Parse("empty polynomial".into()));
        }
        let mut terms = Vec::new();
        let mut rest = cleaned.as_str();
        while !rest.is_empty() {
            let (sign, body) = match rest.as_bytes()[0] {
                b'+' => (1.0, &rest[1..]),
                b'-' => (-1.0, &rest[1..]),
                _ => (1.0, rest),
            };
            let end = body[1..].find(['+', '-']).map(|i| i + 1).unwrap_or(body.len());
            let term = &body[..end];
            rest = &body[end..];
            let bad = || Error::Parse(format!("bad term `{term}`"));
            let (coeff, var) = match term.find('T') {
                None => (term.parse::<f64>().map_err(|_| bad())?, None),
                Some(i) => {
                    let c = match term[..i].strip_suffix('*') {
                        Some(c) => c.parse::<f64>().map_err(|_| bad())?,
                        None if i == 0 => 1.0,
                        None => return Err(bad()),
                    };
                    (c, Some(&term[i + 1..]))
                }
            };
            let exponent = match var {
                None => 0,
                Some("") => 1,
                Some(e) => e
                    .strip_prefix('^')
                    .and_then(|e| e.parse::<u64>().ok())
                    .ok_or_else(bad)?,
            };
            terms.push((exponent, Complex::new(sign * coeff, 0.0)));
        }
        Ok(OperatorPoly::from_terms(terms))
    }
}

/// An `N × N` complex matrix stored by sparse columns, together with the
/// number of leading columns that carry no truncation loss.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedOperator {
    dim: usize,
    cols: Vec<Vec<(usize, Complex)>>,
    safe_interior: usize,
}

impl TruncatedOperator {
    pub fn zeros(dim: usize) -> Self {
        TruncatedOperator {
            dim,
            cols: vec![Vec::new(); dim],
            safe_interior: dim,
        }
    }

    pub fn identity(dim: usize) -> Self {
        let cols = (0..dim).map(|k| vec![(k, Complex::new(1.0, 0.0))]).collect();
        TruncatedOperator {
            dim,
            cols,
            safe_interior: dim,
        }
    }

    /// Builds from `(row, col, value)` entries; repeated positions add up.
    pub fn from_entries<I>(dim: usize, entries: I, safe_interior: usize) -> Self
    where
        I: IntoIterator<Item = (usize, usize, Complex)>,
    {
        let mut cols: Vec<BTreeMap<usize, Complex>> = vec![BTreeMap::new(); dim];
        for (r, c, v) in entries {
            assert!(r < dim && c < dim, "entry ({r}, {c}) outside {dim}x{dim}");
            *cols[c].entry(r).or_default() += v;
        }
        let cols = cols
            .into_iter()
            .map(|col| col.into_iter().filter(|(_, v)| *v != Complex::new(0.0, 0.0)).collect())
            .collect();
        TruncatedOperator {
            dim,
            cols,
            safe_interior: safe_interior.min(dim),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn safe_interior(&self) -> usize {
        self.safe_interior
    }

    pub fn entry(&self, row: usize, col: usize) -> Complex {
        self.cols[col]
            .iter()
            .find(|(r, _)| *r == row)
            .map(|&(_, v)| v)
            .unwrap_or_default()
    }

    pub fn column(&self, col: usize) -> &[(usize, Complex)] {
        &self.cols[col]
    }

    pub fn to_dense(&self) -> Vec<Vec<Complex>> {
        let mut out = vec![vec![Complex::default(); self.dim]; self.dim];
        for (c, col) in self.cols.iter().enumerate() {
            for &(r, v) in col {
                out[r][c] = v;
            }
        }
        out
    }

    fn check_dim(&self, other: &Self) -> Result<()> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch(self.dim, other.dim));
        }
        Ok(())
    }

    fn entries(&self) -> impl Iterator<Item = (usize, usize, Complex)> + '_ {
        self.cols
            .iter()
            .enumerate()
            .flat_map(|(c, col)| col.iter().map(move |&(r, v)| (r, c, v)))
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_dim(other)?;
        Ok(Self::from_entries(
            self.dim,
            self.entries().chain(other.entries()),
            self.safe_interior.min(other.safe_interior),
        ))
    }

    pub fn scale(&self, c: Complex) -> Self {
        Self::from_entries(
            self.dim,
            self.entries().map(|(r, col, v)| (r, col, v * c)),
            self.safe_interior,
        )
    }

    /// `self · other`. The interior shrinks by the degree `self` consumes:
    /// `max(0, s_self + s_other - N)`.
    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.check_dim(other)?;
        let mut entries = Vec::new();
        for (c, col) in other.cols.iter().enumerate() {
            for &(k, b) in col {
                for &(r, a) in &self.cols[k] {
                    entries.push((r, c, a * b));
                }
            }
        }
        let interior = (self.safe_interior + other.safe_interior).saturating_sub(self.dim);
        Ok(Self::from_entries(self.dim, entries, interior))
    }

    /// Conjugate transpose. Keeps the interior of `self`.
    pub fn adjoint(&self) -> Self {
        Self::from_entries(
            self.dim,
            self.entries().map(|(r, c, v)| (c, r, v.conj())),
            self.safe_interior,
        )
    }

    pub fn apply(&self, x: &[Complex]) -> Vec<Complex> {
        let mut y = vec![Complex::default(); self.dim];
        for (c, col) in self.cols.iter().enumerate() {
            let xc = x[c];
            if xc == Complex::default() {
                continue;
            }
            for &(r, v) in col {
                y[r] += v * xc;
            }
        }
        y
    }

    /// `selfᴴ · y` without forming the adjoint.
    pub fn apply_adjoint(&self, y: &[Complex]) -> Vec<Complex> {
        self.cols
            .iter()
            .map(|col| col.iter().map(|&(r, v)| v.conj() * y[r]).sum())
            .collect()
    }
}

/// `e_k ↦ e_{k+1}` for `k < N - 1`, `e_{N-1} ↦ 0`.
pub fn shift_matrix(dim: usize) -> TruncatedOperator {
    TruncatedOperator::from_entries(
        dim,
        (0..dim.saturating_sub(1)).map(|k| (k + 1, k, Complex::new(1.0, 0.0))),
        dim.saturating_sub(1),
    )
}

/// Finite section `Σ c_m S^m` of an analytic polynomial, `S = shift_matrix(N)`.
pub fn evaluate(p: &OperatorPoly, dim: usize) -> Result<TruncatedOperator> {
    let degree = p.degree().unwrap_or(0);
    if degree as usize >= dim {
        return Err(Error::DegreeOverflow { degree, dim });
    }
    let entries = p.terms().iter().flat_map(|(&m, &c)| {
        let m = m as usize;
        (0..dim - m).map(move |k| (k + m, k, c))
    });
    Ok(TruncatedOperator::from_entries(dim, entries, dim - degree as usize))
}

/// True iff the first `k` columns of `a` and `b` agree entry for entry.
pub fn masked_equal(a: &TruncatedOperator, b: &TruncatedOperator, k: usize) -> Result<bool> {
    masked_compare(a, b, k, 0.0)
}

/// Like [`masked_equal`] with an absolute tolerance of `1e-12` per entry.
pub fn masked_close(a: &TruncatedOperator, b: &TruncatedOperator, k: usize) -> Result<bool> {
    masked_compare(a, b, k, 1e-12)
}

fn masked_compare(a: &TruncatedOperator, b: &TruncatedOperator, k: usize, tol: f64) -> Result<bool> {
    a.check_dim(b)?;
    let interior = a.safe_interior.min(b.safe_interior);
    if k > interior {
        return Err(Error::MaskTooWide { k, interior });
    }
    Ok((0..k).all(|c| {
        let rows = a.cols[c].iter().chain(b.cols[c].iter()).map(|&(r, _)| r);
        rows.into_iter().all(|r| (a.entry(r, c) - b.entry(r, c)).norm() <= tol)
    }))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormOptions {
    pub max_iterations: usize,
}

impl Default for NormOptions {
    fn default() -> Self {
        NormOptions {
            max_iterations: 2_000_000,
        }
    }
}

/// Largest singular value of `A`, as the square root of the top eigenvalue
/// of `AᴴA`. Lanczos iteration from the normalised all-ones vector with full
/// reorthogonalisation, i.e. power iteration with the whole Krylov space
/// kept. Stops when the top Ritz pair `(θ, y)` of the `k`-step tridiagonal
/// has residual `β_k |y_k| <= 2·tol·θ`, which puts `√θ` within `tol`
/// (relative) of a singular value.
pub fn operator_norm(a: &TruncatedOperator, tol: f64) -> Result<f64> {
    operator_norm_with(a, tol, NormOptions::default())
}

/// Ritz values are extracted every this many Lanczos steps.
const RITZ_STRIDE: usize = 4;

/// As [`operator_norm`], with at most `opts.max_iterations` Lanczos steps.
pub fn operator_norm_with(a: &TruncatedOperator, tol: f64, opts: NormOptions) -> Result<f64> {
    assert!(tol > 0.0, "tolerance must be positive");
    let n = a.dim();
    if n == 0 {
        return Ok(0.0);
    }
    let steps = opts.max_iterations.min(n);
    let dot = |x: &[Complex], y: &[Complex]| -> Complex { x.iter().zip(y).map(|(a, b)| a.conj() * b).sum() };

    let mut basis: Vec<Vec<Complex>> = vec![vec![Complex::new(1.0 / (n as f64).sqrt(), 0.0); n]];
    let mut alpha: Vec<f64> = Vec::with_capacity(steps);
    let mut beta: Vec<f64> = Vec::with_capacity(steps);
    for k in 0..steps {
        let q = &basis[k];
        let mut w = a.apply_adjoint(&a.apply(q));
        alpha.push(dot(q, &w).re);
        // One Gram-Schmidt pass loses orthogonality once β_k is small
        // next to ‖AᴴA q_k‖; two passes keep it at rounding level.
        for _ in 0..2 {
            for b in &basis {
                let c = dot(b, &w);
                for (wi, bi) in w.iter_mut().zip(b) {
                    *wi -= c * bi;
                }
            }
        }
        let b_k = w.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
        let exhausted = k + 1 == steps;
        if (k + 1) % RITZ_STRIDE == 0 || exhausted || b_k == 0.0 {
            let (theta, last) = top_ritz(&alpha, &beta);
            if theta <= 0.0 {
                return Ok(0.0);
            }
            if b_k * last.abs() <= 2.0 * tol * theta || b_k <= f64::EPSILON * theta {
                return Ok(theta.sqrt());
            }
        }
        if exhausted {
            break;
        }
        beta.push(b_k);
        basis.push(w.into_iter().map(|v| v / b_k).collect());
    }
    Err(Error::NonConvergence(steps))
}

/// Largest eigenvalue of the symmetric tridiagonal matrix with diagonal
/// `alpha` and off-diagonal `beta`, with the last entry of its unit
/// eigenvector. Implicit QL with Wilkinson-type shifts; only the last row
/// of the eigenvector matrix is accumulated.
fn top_ritz(alpha: &[f64], beta: &[f64]) -> (f64, f64) {
    let n = alpha.len();
    let mut d = alpha.to_vec();
    let mut e: Vec<f64> = beta.iter().copied().chain(std::iter::once(0.0)).take(n).collect();
    let mut z = vec![0.0; n];
    z[n - 1] = 1.0;
    for l in 0..n {
        for _ in 0..64 {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0f64, 1.0f64, 0.0f64);
            let mut deflated = false;
            for i in (l..m).rev() {
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    deflated = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                let zf = z[i + 1];
                z[i + 1] = s * z[i] + c * zf;
                z[i] = c * z[i] - s * zf;
            }
            if !deflated {
                d[l] -= p;
                e[l] = g;
                e[m] = 0.0;
            }
        }
    }
    let top = (0..n).fold(0, |best, i| if d[i] > d[best] { i } else { best });
    (d[top], z[top])
}

/// Max of `|Σ c_m z^m|` over the `grid` points `z_k = e^{2πik/grid}`.
pub fn symbol_max_on_grid(p: &OperatorPoly, grid: usize) -> f64 {
    let roots: Vec<Complex> = (0..grid)
        .map(|k| Complex::from_polar(1.0, 2.0 * PI * k as f64 / grid as f64))
        .collect();
    let g = grid as u128;
    (0..grid)
        .map(|k| {
            p.terms()
                .iter()
                .map(|(&m, &c)| c * roots[((k as u128 * m as u128) % g) as usize])
                .sum::<Complex>()
                .norm()
        })
        .fold(0.0, f64::max)
}

/// Sup-norm estimate of the symbol on the unit circle. A polynomial with
/// exponent gcd `d` is `r(z^d)`; `r` is evaluated on `grid` roots of unity,
/// which is the same as evaluating `p` on the `grid·d` roots. Dilations
/// `T ↦ T^n` therefore leave the estimate unchanged.
pub fn symbol_sup_norm(p: &OperatorPoly, grid: usize) -> Result<f64> {
    let d = p.exponent_gcd();
    let reduced = OperatorPoly {
        terms: p.terms().iter().map(|(&m, &c)| (m / d, c)).collect(),
    };
    let degree = reduced.degree().unwrap_or(0);
    if (grid as u128) < 4 * (degree as u128 + 1) {
        return Err(Error::GridTooCoarse { grid, degree });
    }
    Ok(symbol_max_on_grid(&reduced, grid))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    fn c(re: f64) -> Complex {
        Complex::new(re, 0.0)
    }

    fn dense_real(op: &TruncatedOperator) -> Vec<Vec<f64>> {
        op.to_dense().iter().map(|r| r.iter().map(|v| v.re).collect()).collect()
    }

    #[test]
    fn shift_examples() {
        assert_eq!(dense_real(&shift_matrix(2)), vec![vec![0.0, 0.0], vec![1.0, 0.0]]);
        let s = shift_matrix(4);
        let sts = s.adjoint().mul(&s).unwrap();
        let sst = s.mul(&s.adjoint()).unwrap();
        let diag = |m: &TruncatedOperator| (0..4).map(|k| m.entry(k, k).re).collect::<Vec<_>>();
        assert_eq!(diag(&sts), vec![1.0, 1.0, 1.0, 0.0]);
        assert_eq!(diag(&sst), vec![0.0, 1.0, 1.0, 1.0]);
        assert_eq!(s.safe_interior(), 3);
    }

    #[test]
    fn isometry_law_on_interior() {
        for n in [2usize, 5, 17] {
            let s = shift_matrix(n);
            let sts = s.adjoint().mul(&s).unwrap();
            let id = TruncatedOperator::identity(n);
            for r in 0..n - 1 {
                for col in 0..n - 1 {
                    assert_eq!(sts.entry(r, col), id.entry(r, col));
                }
            }
        }
    }

    #[test]
    fn coburn_examples() {
        assert_eq!(OperatorPoly::shift().coburn(3).unwrap(), OperatorPoly::monomial(3));
        let p = OperatorPoly::from_real(&[1.0, 2.0, 1.0]);
        let q = OperatorPoly::from_terms([(0, c(1.0)), (2, c(2.0)), (4, c(1.0))]);
        assert_eq!(p.coburn(2).unwrap(), q);
        assert_eq!(p.coburn(1).unwrap(), p);
        assert_eq!(OperatorPoly::identity().coburn(7).unwrap(), OperatorPoly::identity());
        assert!(OperatorPoly::monomial(u64::MAX / 2).coburn(3).is_err());
    }

    #[test]
    fn evaluate_examples() {
        let id = evaluate(&OperatorPoly::identity(), 6).unwrap();
        assert_eq!(id, TruncatedOperator::identity(6));
        let t2 = evaluate(&OperatorPoly::monomial(2), 5).unwrap();
        assert_eq!(t2.safe_interior(), 3);
        let s = shift_matrix(5);
        assert_eq!(t2.to_dense(), s.mul(&s).unwrap().to_dense());
        let p = OperatorPoly::from_terms([(1, c(1.0)), (3, c(1.0))]);
        let e = evaluate(&p, 6).unwrap();
        let s = shift_matrix(6);
        let s3 = s.mul(&s).unwrap().mul(&s).unwrap();
        assert_eq!(e.to_dense(), s.add(&s3).unwrap().to_dense());
        assert_eq!(
            evaluate(&OperatorPoly::monomial(4), 4).unwrap_err(),
            Error::DegreeOverflow { degree: 4, dim: 4 }
        );
    }

    #[test]
    fn masked_equality_examples() {
        let t2 = evaluate(&OperatorPoly::monomial(2), 8).unwrap();
        assert!(masked_equal(&t2, &t2, 6).unwrap());
        let dilated = evaluate(&OperatorPoly::shift().coburn(2).unwrap(), 8).unwrap();
        assert!(masked_equal(&t2, &dilated, 6).unwrap());
        let t = evaluate(&OperatorPoly::shift(), 8).unwrap();
        assert!(!masked_equal(&t, &t2, 1).unwrap());
        assert!(masked_equal(&t, &t2, 7).is_err());
        assert!(masked_equal(&t, &shift_matrix(9), 1).is_err());
        let nudged = t
            .add(&TruncatedOperator::from_entries(8, [(1, 0, c(1e-14))], 8))
            .unwrap();
        assert!(!masked_equal(&t, &nudged, 6).unwrap());
        assert!(masked_close(&t, &nudged, 6).unwrap());
    }

    #[test]
    fn norm_examples() {
        for n in [1usize, 4, 33] {
            let id = TruncatedOperator::identity(n);
            assert!((operator_norm(&id, 1e-12).unwrap() - 1.0).abs() < 1e-12);
        }
        let s = shift_matrix(16);
        assert!((operator_norm(&s, 1e-12).unwrap() - 1.0).abs() < 1e-12);
        let sym = s.add(&s.adjoint()).unwrap();
        let expected = 2.0 * (PI / 17.0).cos();
        assert!((operator_norm(&sym, 1e-13).unwrap() - expected).abs() < 1e-9);
        assert_eq!(operator_norm(&TruncatedOperator::zeros(3), 1e-9).unwrap(), 0.0);
    }

    #[test]
    fn ritz_solver_matches_dense_eigensolver() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for k in 1..40 {
            let alpha: Vec<f64> = (0..k).map(|_| rng.gen_range(-3.0..3.0)).collect();
            let beta: Vec<f64> = (1..k).map(|_| rng.gen_range(0.01..2.0)).collect();
            let t = nalgebra::DMatrix::from_fn(k, k, |i, j| match (i, j) {
                _ if i == j => alpha[i],
                _ if i + 1 == j => beta[i],
                _ if j + 1 == i => beta[j],
                _ => 0.0,
            });
            let eig = nalgebra::SymmetricEigen::new(t);
            let top = eig.eigenvalues.imax();
            let (theta, last) = top_ritz(&alpha, &beta);
            assert!((theta - eig.eigenvalues[top]).abs() < 1e-12, "k = {k}");
            assert!(
                (last.abs() - eig.eigenvectors[(k - 1, top)].abs()).abs() < 1e-8,
                "k = {k}"
            );
        }
    }

    #[test]
    fn non_convergence_is_reported() {
        let s = shift_matrix(64);
        let sym = s.add(&s.adjoint()).unwrap();
        let err = operator_norm_with(&sym, 1e-15, NormOptions { max_iterations: 3 }).unwrap_err();
        assert_eq!(err, Error::NonConvergence(3));
    }

    #[test]
    fn symbol_examples() {
        assert_eq!(symbol_sup_norm(&OperatorPoly::identity(), 16).unwrap(), 1.0);
        let one_plus_t = OperatorPoly::from_real(&[1.0, 1.0]);
        assert!((symbol_sup_norm(&one_plus_t, 64).unwrap() - 2.0).abs() < 1e-15);
        for k in [1u64, 5, 40] {
            let v = symbol_sup_norm(&OperatorPoly::monomial(k), 16).unwrap();
            assert!((v - 1.0).abs() < 1e-15);
        }
        assert!(symbol_sup_norm(&OperatorPoly::from_real(&[1.0, 0.0, 1.0, 1.0]), 8).is_err());
    }

    #[test]
    fn gcd_reduction_matches_fine_grid() {
        // r(z^d) on `grid` roots of r equals p on `grid * d` roots of p.
        let p = OperatorPoly::from_terms([(0, c(0.3)), (6, Complex::new(-1.0, 0.4)), (15, c(0.8))]);
        let reduced = symbol_sup_norm(&p, 64).unwrap();
        let direct = symbol_max_on_grid(&p, 64 * 3);
        assert!((reduced - direct).abs() < 1e-12);
    }

    #[test]
    fn parse_and_display() {
        let p: OperatorPoly = "1 + 2*T^3 - 0.5*T".parse().unwrap();
        assert_eq!(p, OperatorPoly::from_real(&[1.0, -0.5, 0.0, 2.0]));
        assert_eq!(p.to_string(), "1 + -0.5*T + 2*T^3");
        assert_eq!("T".parse::<OperatorPoly>().unwrap(), OperatorPoly::shift());
        assert!("2*".parse::<OperatorPoly>().is_err());
        assert!("T^x".parse::<OperatorPoly>().is_err());
    }

    fn arb_poly() -> impl Strategy<Value = OperatorPoly> {
        prop::collection::vec((-2.0f64..2.0, -2.0f64..2.0), 1..6).prop_map(|cs| {
            OperatorPoly::from_terms(
                cs.into_iter()
                    .enumerate()
                    .map(|(m, (re, im))| (m as u64, Complex::new(re, im))),
            )
        })
    }

    proptest! {
        #[test]
        fn coburn_composes(p in arb_poly(), a in 1u64..12, b in 1u64..12) {
            let lhs = p.coburn(b).unwrap().coburn(a).unwrap();
            prop_assert_eq!(lhs, p.coburn(a * b).unwrap());
        }

        #[test]
        fn dilation_preserves_symbol_norm(p in arb_poly(), n in 1u64..50) {
            prop_assume!(!p.is_zero());
            let lhs = symbol_sup_norm(&p, 256).unwrap();
            let rhs = symbol_sup_norm(&p.coburn(n).unwrap(), 256).unwrap();
            prop_assert_eq!(lhs, rhs);
        }

        #[test]
        fn coburn_is_multiplicative(p in arb_poly(), q in arb_poly(), n in 1u64..6) {
            let lhs = p.mul(&q).unwrap().coburn(n).unwrap();
            let rhs = p.coburn(n).unwrap().mul(&q.coburn(n).unwrap()).unwrap();
            for (m, c) in lhs.terms() {
                let d = rhs.terms().get(m).copied().unwrap_or_default();
                prop_assert!((c - d).norm() < 1e-12);
            }
        }
    }
}
