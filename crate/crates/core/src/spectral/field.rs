//! Finite spectral fields on the torus.

use num_complex::Complex;

use super::lattice::{LatticeBox, LatticeMode};
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Fourier coefficients of a mean-zero field, stored densely over the box
/// `max(|k1|, |k2|) <= extent`. Modes outside the box are zero.
///
/// When `hermitian` is set the coefficients satisfy
/// `c(-k) = conj(c(k))`, i.e. the physical field is real.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField<T> {
    grid: LatticeBox,
    coeffs: Vec<Complex<T>>,
    hermitian: bool,
}

impl<T: Real> SpectralField<T> {
    pub fn zeros(extent: u32, hermitian: bool) -> Self {
        let grid = LatticeBox::new(extent);
        Self { grid, coeffs: vec![Complex::new(T::zero(), T::zero()); grid.len()], hermitian }
    }

    /// Builds a field from explicit entries; the extent is the largest box
    /// norm present. Later entries overwrite earlier ones.
    pub fn from_modes<I>(hermitian: bool, entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (LatticeMode, Complex<T>)>,
    {
        let entries: Vec<_> = entries.into_iter().collect();
        let extent = entries.iter().map(|(k, _)| k.max_norm()).max().unwrap_or(0);
        let mut field = Self::zeros(extent, hermitian);
        for (k, c) in entries {
            field.set(k, c)?;
        }
        Ok(field)
    }

    /// Real field with `c(k) = value` and `c(-k) = conj(value)` for each entry.
    pub fn hermitian_from_pairs<I>(pairs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (LatticeMode, Complex<T>)>,
    {
        let pairs: Vec<_> = pairs.into_iter().collect();
        let extent = pairs.iter().map(|(k, _)| k.max_norm()).max().unwrap_or(0);
        let mut field = Self::zeros(extent, true);
        for (k, c) in pairs {
            field.set_pair(k, c)?;
        }
        Ok(field)
    }

    pub(crate) fn from_raw(grid: LatticeBox, coeffs: Vec<Complex<T>>, hermitian: bool) -> Self {
        debug_assert_eq!(coeffs.len(), grid.len());
        debug_assert!(coeffs[grid.zero_index()] == Complex::new(T::zero(), T::zero()));
        Self { grid, coeffs, hermitian }
    }

    #[inline]
    pub fn extent(&self) -> u32 {
        self.grid.extent()
    }

    #[inline]
    pub fn grid(&self) -> LatticeBox {
        self.grid
    }

    #[inline]
    pub fn is_hermitian(&self) -> bool {
        self.hermitian
    }

    pub fn set_hermitian_flag(&mut self, hermitian: bool) {
        self.hermitian = hermitian;
    }

    /// Dense coefficient slice in the row-major layout of [`LatticeBox`].
    #[inline]
    pub fn as_slice(&self) -> &[Complex<T>] {
        &self.coeffs
    }

    #[inline]
    pub(crate) fn as_mut_slice(&mut self) -> &mut [Complex<T>] {
        &mut self.coeffs
    }

    #[inline]
    pub fn get(&self, k: LatticeMode) -> Complex<T> {
        match self.grid.index(k) {
            Some(i) => self.coeffs[i],
            None => Complex::new(T::zero(), T::zero()),
        }
    }

    /// Sets one coefficient, growing the storage box when needed.
    pub fn set(&mut self, k: LatticeMode, value: Complex<T>) -> Result<()> {
        if k.is_zero() {
            return Err(Error::ZeroMode);
        }
        if !self.grid.contains(k) {
            *self = self.with_extent(k.max_norm());
        }
        let i = self.grid.index_unchecked(k);
        self.coeffs[i] = value;
        Ok(())
    }

    /// Sets `c(k) = value` and `c(-k) = conj(value)`.
    pub fn set_pair(&mut self, k: LatticeMode, value: Complex<T>) -> Result<()> {
        self.set(k, value)?;
        self.set(-k, value.conj())
    }

    /// Copy laid out on a box of a different radius; modes outside the new
    /// box are dropped.
    pub fn with_extent(&self, extent: u32) -> Self {
        let mut out = Self::zeros(extent, self.hermitian);
        let small = LatticeBox::new(self.extent().min(extent));
        for k in small.modes() {
            out.coeffs[out.grid.index_unchecked(k)] = self.coeffs[self.grid.index_unchecked(k)];
        }
        out
    }

    /// Nonzero-mode entries in row-major order (zero coefficients included).
    pub fn iter(&self) -> impl Iterator<Item = (LatticeMode, Complex<T>)> + '_ {
        self.grid.modes().map(move |k| (k, self.coeffs[self.grid.index_unchecked(k)]))
    }

    /// Largest box norm carrying a nonzero coefficient (0 for the zero field).
    pub fn support_radius(&self) -> u32 {
        self.iter().filter(|(_, c)| !is_zero(*c)).map(|(k, _)| k.max_norm()).max().unwrap_or(0)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| is_zero(*c))
    }

    /// `max_k |c(-k) - conj(c(k))|`.
    pub fn hermitian_defect(&self) -> T {
        self.grid
            .representatives()
            .map(|k| (self.coeffs[self.grid.index_unchecked(-k)] - self.coeffs[self.grid.index_unchecked(k)].conj()).norm())
            .fold(T::zero(), T::max)
    }

    pub fn max_abs(&self) -> T {
        self.coeffs.iter().map(|c| c.norm()).fold(T::zero(), T::max)
    }

    /// Checks the Hermitian flag and the symmetry itself, relative to the
    /// largest coefficient.
    pub fn check_hermitian(&self, rel_tol: T) -> Result<()> {
        let defect = self.hermitian_defect();
        if !self.hermitian || defect > rel_tol * self.max_abs() {
            return Err(Error::NotHermitian { defect: defect.to_f64_lossy() });
        }
        Ok(())
    }

    /// `sum_k |k|^{2s} |c(k)|^2` with the Euclidean `|k|`.
    pub fn sobolev_norm_sq(&self, s: T) -> T {
        self.iter()
            .filter(|(_, c)| !is_zero(*c))
            .map(|(k, c)| T::of(k.norm_sq() as f64).powf(s) * c.norm_sqr())
            .sum()
    }

    /// Box projection `Pi_N`: keeps modes with `max(|k1|, |k2|) <= n`.
    pub fn project(&self, n: u32) -> Self {
        let mut out = self.clone();
        for (i, c) in out.coeffs.iter_mut().enumerate() {
            if !self.grid.mode(i).in_box(n) {
                *c = Complex::new(T::zero(), T::zero());
            }
        }
        out
    }

    /// `Pi_N^perp = I - Pi_N`.
    pub fn project_complement(&self, n: u32) -> Self {
        let mut out = self.clone();
        for (i, c) in out.coeffs.iter_mut().enumerate() {
            if self.grid.mode(i).in_box(n) {
                *c = Complex::new(T::zero(), T::zero());
            }
        }
        out
    }

    /// Coefficient-wise sum; the result lives on the larger box.
    pub fn add(&self, other: &Self) -> Self {
        let extent = self.extent().max(other.extent());
        let mut out = self.with_extent(extent);
        out.hermitian = self.hermitian && other.hermitian;
        for k in other.grid.modes() {
            let i = out.grid.index_unchecked(k);
            out.coeffs[i] = out.coeffs[i] + other.coeffs[other.grid.index_unchecked(k)];
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scaled(-T::one()))
    }

    pub fn scaled(&self, factor: T) -> Self {
        let mut out = self.clone();
        out.coeffs.iter_mut().for_each(|c| *c = c.scale(factor));
        out
    }

    /// Largest coefficient difference after aligning boxes.
    pub fn max_abs_diff(&self, other: &Self) -> T {
        self.sub(other).max_abs()
    }

    /// Converts the scalar type.
    pub fn cast<U: Real>(&self) -> SpectralField<U> {
        SpectralField {
            grid: self.grid,
            coeffs: self.coeffs.iter().map(|c| Complex::new(U::of(c.re.to_f64_lossy()), U::of(c.im.to_f64_lossy()))).collect(),
            hermitian: self.hermitian,
        }
    }
}

#[inline]
fn is_zero<T: Real>(c: Complex<T>) -> bool {
    c.re == T::zero() && c.im == T::zero()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex<f64> {
        Complex::new(re, im)
    }

    #[test]
    fn zero_mode_is_rejected() {
        let mut f = SpectralField::<f64>::zeros(2, false);
        assert!(matches!(f.set(LatticeMode::ZERO, c(1.0, 0.0)), Err(Error::ZeroMode)));
        assert!(SpectralField::from_modes(false, [(LatticeMode::ZERO, c(1.0, 0.0))]).is_err());
    }

    #[test]
    fn set_grows_storage() {
        let mut f = SpectralField::<f64>::zeros(1, false);
        f.set(LatticeMode::new(1, 1), c(2.0, 0.0)).unwrap();
        f.set(LatticeMode::new(5, 0), c(1.0, -1.0)).unwrap();
        assert_eq!(f.extent(), 5);
        assert_eq!(f.get(LatticeMode::new(1, 1)), c(2.0, 0.0));
        assert_eq!(f.get(LatticeMode::new(5, 0)), c(1.0, -1.0));
        assert_eq!(f.get(LatticeMode::new(9, 9)), c(0.0, 0.0));
    }

    #[test]
    fn sobolev_norm_of_unit_pair() {
        let f = SpectralField::hermitian_from_pairs([(LatticeMode::new(1, 0), c(1.0, 0.0))]).unwrap();
        assert_eq!(f.sobolev_norm_sq(0.0), 2.0);
        assert_eq!(f.sobolev_norm_sq(1.0), 2.0);
        assert_eq!(SpectralField::<f64>::zeros(3, true).sobolev_norm_sq(1.0), 0.0);
        let g = SpectralField::hermitian_from_pairs([(LatticeMode::new(1, 1), c(0.0, 1.0))]).unwrap();
        assert!((g.sobolev_norm_sq(1.0) - 4.0).abs() < 1e-15);
    }

    #[test]
    fn projections() {
        let f = SpectralField::hermitian_from_pairs([
            (LatticeMode::new(1, 0), c(1.0, 0.5)),
            (LatticeMode::new(5, 0), c(0.25, 0.0)),
            (LatticeMode::new(3, -4), c(0.0, 2.0)),
        ])
        .unwrap();
        assert!(f.project(0).is_zero());
        let lo = f.project(4);
        let hi = f.project_complement(4);
        assert_eq!(hi.get(LatticeMode::new(5, 0)), c(0.25, 0.0));
        assert_eq!(lo.get(LatticeMode::new(5, 0)), c(0.0, 0.0));
        assert_eq!(lo.get(LatticeMode::new(3, -4)), c(0.0, 2.0));
        assert_eq!(lo.add(&hi), f);
        assert_eq!(f.support_radius(), 5);
    }

    #[test]
    fn hermitian_check() {
        let mut f = SpectralField::hermitian_from_pairs([(LatticeMode::new(2, 1), c(1.0, 1.0))]).unwrap();
        assert!(f.check_hermitian(1e-12).is_ok());
        f.set(LatticeMode::new(-2, -1), c(1.0, 1.0)).unwrap();
        assert!(f.check_hermitian(1e-12).is_err());
    }
}
