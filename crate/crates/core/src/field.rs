//! Vorticity fields in coefficient and grid-value form.
//!
//! A `SpectralField` stores the full complex coefficient table of a real,
//! mean-zero scalar on the torus; `coeff(-j, -m)` is the conjugate of
//! `coeff(j, m)`. A `PhysicalField` stores grid values. Transforms between
//! the two preserve the normalization in which a unit cosine mode has a
//! coefficient pair of magnitude 1/2.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fft::Fft2;
use crate::grid::TorusConfig;

/// Relative mean tolerance accepted by the strict grid-to-coefficient path.
pub const MEAN_TOLERANCE: f64 = 1e-10;

/// Coefficient-space representation of a real mean-zero field.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    config: TorusConfig,
    coeffs: Vec<Complex64>,
}

impl SpectralField {
    /// The zero field.
    pub fn zeros(config: &TorusConfig) -> Self {
        SpectralField {
            config: config.clone(),
            coeffs: vec![Complex64::default(); config.nx * config.ny],
        }
    }

    pub fn config(&self) -> &TorusConfig {
        &self.config
    }

    /// Coefficient at lattice mode `(j, m)`; zero outside the Nyquist box.
    pub fn coeff(&self, j: i64, m: i64) -> Complex64 {
        if !self.config.in_nyquist_box(j, m) {
            return Complex64::default();
        }
        self.coeffs[self.config.row(j) * self.config.ny + self.config.col(m)]
    }

    /// Overwrites the coefficient at `(j, m)` without touching its mirror.
    pub fn set_coeff(&mut self, j: i64, m: i64, value: Complex64) -> Result<()> {
        if !self.config.in_nyquist_box(j, m) {
            return Err(Error::IncompatibleDomain(format!(
                "mode ({j},{m}) lies outside the {}x{} Nyquist box",
                self.config.nx, self.config.ny
            )));
        }
        let idx = self.config.row(j) * self.config.ny + self.config.col(m);
        self.coeffs[idx] = value;
        Ok(())
    }

    /// Adds `amplitude * cos(alpha*j*x + beta*m*y)`.
    pub fn add_cos(&mut self, j: i64, m: i64, amplitude: f64) -> Result<()> {
        self.add_mode_pair(j, m, Complex64::new(0.5 * amplitude, 0.0))
    }

    /// Adds `amplitude * sin(alpha*j*x + beta*m*y)`.
    pub fn add_sin(&mut self, j: i64, m: i64, amplitude: f64) -> Result<()> {
        self.add_mode_pair(j, m, Complex64::new(0.0, -0.5 * amplitude))
    }

    /// Adds `half` at `(j, m)` and its conjugate at `(-j, -m)`.
    fn add_mode_pair(&mut self, j: i64, m: i64, half: Complex64) -> Result<()> {
        if j == 0 && m == 0 {
            return Err(Error::InvalidConfig(
                "mode (0,0) would carry a nonzero mean".into(),
            ));
        }
        if !self.config.in_nyquist_box(j, m) || !self.config.in_nyquist_box(-j, -m) {
            return Err(Error::IncompatibleDomain(format!(
                "mode pair +-({j},{m}) does not fit the {}x{} Nyquist box",
                self.config.nx, self.config.ny
            )));
        }
        let ny = self.config.ny;
        let idx = self.config.row(j) * ny + self.config.col(m);
        let mirror = self.config.row(-j) * ny + self.config.col(-m);
        self.coeffs[idx] += half;
        self.coeffs[mirror] += half.conj();
        Ok(())
    }

    /// Largest coefficient magnitude.
    pub fn linf_coeff(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// Whether every coefficient is finite.
    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }

    /// Largest deviation from conjugate symmetry.
    pub fn hermitian_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for r in 0..self.config.nx {
            for c in 0..self.config.ny {
                let j = self.config.j_of_row(r);
                let m = self.config.m_of_col(c);
                let mirror = self.coeffs
                    [self.config.row(wrap_neg(j, self.config.nx)) * self.config.ny
                        + self.config.col(wrap_neg(m, self.config.ny))];
                let defect = (self.coeffs[r * self.config.ny + c] - mirror.conj()).norm();
                worst = worst.max(defect);
            }
        }
        worst
    }

    /// Projects onto the conjugate-symmetric part, removing roundoff skew.
    pub fn hermitianize(&mut self) {
        let (nx, ny) = (self.config.nx, self.config.ny);
        for r in 0..nx {
            let rm = if r == 0 { 0 } else { nx - r };
            for c in 0..ny {
                let cm = if c == 0 { 0 } else { ny - c };
                if (rm, cm) < (r, c) {
                    continue;
                }
                let a = self.coeffs[r * ny + c];
                let b = self.coeffs[rm * ny + cm];
                let sym = 0.5 * (a + b.conj());
                self.coeffs[r * ny + c] = sym;
                self.coeffs[rm * ny + cm] = sym.conj();
            }
        }
    }

    /// Multiplies every coefficient by `s`.
    pub fn scale(&mut self, s: f64) {
        for c in self.coeffs.iter_mut() {
            *c *= s;
        }
    }

    /// Adds `s * other` in place.
    pub fn axpy(&mut self, s: f64, other: &Self) -> Result<()> {
        self.config.ensure_matches(&other.config)?;
        for (a, b) in self.coeffs.iter_mut().zip(&other.coeffs) {
            *a += s * b;
        }
        Ok(())
    }

    /// Largest coefficient magnitude of `self - other`.
    pub fn max_coeff_diff(&self, other: &Self) -> Result<f64> {
        self.config.ensure_matches(&other.config)?;
        Ok(self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max))
    }

    /// Visits every stored mode as `(j, m, coefficient)`.
    pub fn iter_modes(&self) -> impl Iterator<Item = (i64, i64, Complex64)> + '_ {
        let (nx, ny) = (self.config.nx, self.config.ny);
        (0..nx).flat_map(move |r| {
            (0..ny).map(move |c| {
                (
                    self.config.j_of_row(r),
                    self.config.m_of_col(c),
                    self.coeffs[r * ny + c],
                )
            })
        })
    }

    /// Synthesizes grid values; the roundoff imaginary residue is dropped.
    pub fn to_physical(&self) -> PhysicalField {
        let mut buffer = self.coeffs.clone();
        let mut fft = Fft2::new(self.config.nx, self.config.ny);
        fft.inverse(&mut buffer);
        let mut max_mag = 0.0f64;
        let mut max_imag = 0.0f64;
        let values = buffer
            .iter()
            .map(|v| {
                max_mag = max_mag.max(v.re.abs());
                max_imag = max_imag.max(v.im.abs());
                v.re
            })
            .collect();
        if max_imag > 1e-12 * max_mag.max(1e-300) {
            log::warn!(
                "imaginary residue {max_imag:.3e} exceeds 1e-12 of field magnitude {max_mag:.3e}"
            );
        }
        PhysicalField {
            config: self.config.clone(),
            values,
        }
    }

    /// Analyzes grid values; a mean above `MEAN_TOLERANCE` of the field
    /// magnitude is zeroed with a warning.
    pub fn from_physical(field: &PhysicalField) -> Self {
        Self::analyze(field, false).expect("non-strict analysis cannot fail")
    }

    /// Analyzes grid values; errors instead of zeroing an oversized mean.
    pub fn from_physical_strict(field: &PhysicalField) -> Result<Self> {
        Self::analyze(field, true)
    }

    fn analyze(field: &PhysicalField, strict: bool) -> Result<Self> {
        let config = &field.config;
        let mut buffer: Vec<Complex64> = field
            .values
            .iter()
            .map(|&v| Complex64::new(v, 0.0))
            .collect();
        let mut fft = Fft2::new(config.nx, config.ny);
        fft.forward(&mut buffer);
        let mean = buffer[0].norm();
        let scale = field.linf().max(1e-300);
        if mean > MEAN_TOLERANCE * scale {
            if strict {
                return Err(Error::MeanNotZero {
                    mean,
                    tol: MEAN_TOLERANCE,
                });
            }
            log::warn!("zeroing mean coefficient {mean:.3e} (field magnitude {scale:.3e})");
        }
        buffer[0] = Complex64::default();
        let mut out = SpectralField {
            config: config.clone(),
            coeffs: buffer,
        };
        out.hermitianize();
        Ok(out)
    }

    pub(crate) fn raw(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub(crate) fn raw_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }
}

fn wrap_neg(i: i64, n: usize) -> i64 {
    let half = n as i64 / 2;
    if -i >= half {
        -i - n as i64
    } else if -i < -half {
        -i + n as i64
    } else {
        -i
    }
}

/// Grid-value representation of a real field.
#[derive(Debug, Clone, PartialEq)]
pub struct PhysicalField {
    config: TorusConfig,
    values: Vec<f64>,
}

impl PhysicalField {
    pub fn config(&self) -> &TorusConfig {
        &self.config
    }

    /// Samples `f(x, y)` on the grid nodes.
    pub fn from_fn(config: &TorusConfig, f: impl Fn(f64, f64) -> f64) -> Self {
        let mut values = Vec::with_capacity(config.nx * config.ny);
        for p in 0..config.nx {
            for q in 0..config.ny {
                let (x, y) = config.node(p, q);
                values.push(f(x, y));
            }
        }
        PhysicalField {
            config: config.clone(),
            values,
        }
    }

    /// Value at grid node `(p, q)`.
    pub fn value(&self, p: usize, q: usize) -> f64 {
        self.values[p * self.config.ny + q]
    }

    /// Largest absolute grid value.
    pub fn linf(&self) -> f64 {
        self.values.iter().fold(0.0, |acc, v| acc.max(v.abs()))
    }

    /// Grid values in row-major order (x-index outer, y-index inner).
    pub fn raw(&self) -> &[f64] {
        &self.values
    }

    /// Wraps row-major grid samples (x-index outer, y-index inner).
    ///
    /// Panics if `values.len() != nx * ny`.
    pub fn from_raw(config: &TorusConfig, values: Vec<f64>) -> Self {
        assert_eq!(
            values.len(),
            config.nx * config.ny,
            "sample count must match the grid"
        );
        PhysicalField {
            config: config.clone(),
            values,
        }
    }
}
