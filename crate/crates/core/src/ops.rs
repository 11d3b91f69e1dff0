//! Spectral operators: derivatives, Poisson solve, velocity recovery, the
//! dealiased advection Jacobian, and the shear term `sin y * d/dx (1 + inv_lap)`.
//!
//! The Jacobian `J(phi, w) = dx(phi) dy(w) - dy(phi) dx(w)` is evaluated
//! pseudo-spectrally with sharp truncation to the dealias box, which for the
//! default 2/3 fraction removes every aliased product exactly. The shear term
//! is evaluated in coefficient space, where multiplication by `sin y` is an
//! exact shift of the y-index.

use num_complex::Complex64;

use crate::error::Result;
use crate::fft::Fft2;
use crate::field::SpectralField;
use crate::grid::TorusConfig;

/// Applies `-|k|^2` per mode.
pub fn laplacian(w: &SpectralField) -> SpectralField {
    let config = w.config().clone();
    let mut out = w.clone();
    let tables = Tables::new(&config);
    for (i, c) in out.raw_mut().iter_mut().enumerate() {
        *c *= -tables.k_sq[i];
    }
    out
}

/// Applies `-1/|k|^2` per mode; the mean mode stays zero.
pub fn inv_laplacian(w: &SpectralField) -> SpectralField {
    let config = w.config().clone();
    let mut out = w.clone();
    let tables = Tables::new(&config);
    for (i, c) in out.raw_mut().iter_mut().enumerate() {
        *c *= -tables.inv_k_sq[i];
    }
    out
}

/// x-derivative, `i * alpha * j` per mode.
pub fn d_x(w: &SpectralField) -> SpectralField {
    let config = w.config().clone();
    let mut out = w.clone();
    let ny = config.ny;
    for (i, c) in out.raw_mut().iter_mut().enumerate() {
        let kx = config.alpha * config.j_of_row(i / ny) as f64;
        *c = Complex64::new(0.0, kx) * *c;
    }
    out
}

/// y-derivative, `i * beta * m` per mode.
pub fn d_y(w: &SpectralField) -> SpectralField {
    let config = w.config().clone();
    let mut out = w.clone();
    let ny = config.ny;
    for (i, c) in out.raw_mut().iter_mut().enumerate() {
        let ky = config.beta * config.m_of_col(i % ny) as f64;
        *c = Complex64::new(0.0, ky) * *c;
    }
    out
}

/// Velocity `(dy psi, -dx psi)` with `psi = -inv_laplacian(w)`.
pub fn velocity_from_vorticity(w: &SpectralField) -> (SpectralField, SpectralField) {
    let psi = {
        let mut p = inv_laplacian(w);
        p.scale(-1.0);
        p
    };
    (d_y(&psi), {
        let mut v = d_x(&psi);
        v.scale(-1.0);
        v
    })
}

/// Dealiased `J(phi, w) = dx(phi) dy(w) - dy(phi) dx(w)`.
///
/// Both inputs are truncated to the dealias box before the pointwise product,
/// so the retained output modes are free of aliasing; the output is truncated
/// to the same box, forced mean-zero, and conjugate-symmetrized.
pub fn jacobian(phi: &SpectralField, w: &SpectralField) -> Result<SpectralField> {
    phi.config().ensure_matches(w.config())?;
    let mut engine = Engine::new(phi.config());
    let mut out = SpectralField::zeros(phi.config());
    engine.jacobian_into(phi.raw(), w.raw(), out.raw_mut(), 1.0);
    Ok(out)
}

/// Reference Jacobian by direct convolution, truncated to the dealias box.
///
/// `J_k = -alpha beta sum over k1 + k2 = k of (j1 m2 - m1 j2) phi_k1 w_k2`,
/// summed over all active coefficient pairs in O(N^2) time. Shares nothing
/// with the transform-based path, so agreement between the two validates the
/// dealiasing: for inputs inside the dealias box every aliased product image
/// of the pseudo-spectral evaluation falls outside the box, making the fast
/// path equal to this truncated convolution to roundoff.
pub fn jacobian_direct(phi: &SpectralField, w: &SpectralField) -> Result<SpectralField> {
    let config = phi.config().clone();
    config.ensure_matches(w.config())?;
    let active = |f: &SpectralField| -> Vec<(i64, i64, Complex64)> {
        f.iter_modes()
            .filter(|&(_, _, c)| c.norm_sqr() > 0.0)
            .collect()
    };
    let phi_modes = active(phi);
    let w_modes = active(w);
    let mut out = SpectralField::zeros(&config);
    let raw = out.raw_mut();
    for &(j1, m1, c1) in &phi_modes {
        for &(j2, m2, c2) in &w_modes {
            let cross = (j1 * m2 - m1 * j2) as f64;
            if cross == 0.0 {
                continue;
            }
            let (j, m) = (j1 + j2, m1 + m2);
            if !config.in_dealias_box(j, m) {
                continue;
            }
            raw[config.row(j) * config.ny + config.col(m)] -= cross * c1 * c2;
        }
    }
    let scale = config.alpha * config.beta;
    for c in raw.iter_mut() {
        *c *= scale;
    }
    Ok(out)
}

/// Exact coefficient-space evaluation of `sin y * d/dx (1 + inv_lap) w`.
///
/// Multiplication by `sin y` shifts the y-index by the lattice position of
/// the unit mode; components shifted beyond the Nyquist box are dropped.
pub fn mult_sin_y_dx_oneplus(w: &SpectralField) -> SpectralField {
    let engine = ShearOp::new(w.config());
    let mut out = SpectralField::zeros(w.config());
    engine.apply_scaled(w.raw(), out.raw_mut(), 1.0);
    out
}

/// Per-mode lookup tables shared by the spectral operators.
pub(crate) struct Tables {
    pub k_sq: Vec<f64>,
    /// `1/|k|^2` with the mean mode set to zero.
    pub inv_k_sq: Vec<f64>,
    pub kx: Vec<f64>,
    pub ky: Vec<f64>,
    /// 1.0 inside the dealias box, 0.0 outside.
    pub dealias: Vec<f64>,
}

impl Tables {
    pub fn new(config: &TorusConfig) -> Self {
        let n = config.nx * config.ny;
        let mut k_sq = Vec::with_capacity(n);
        let mut inv_k_sq = Vec::with_capacity(n);
        let mut kx = Vec::with_capacity(n);
        let mut ky = Vec::with_capacity(n);
        let mut dealias = Vec::with_capacity(n);
        for r in 0..config.nx {
            let j = config.j_of_row(r);
            for c in 0..config.ny {
                let m = config.m_of_col(c);
                let (kxv, kyv) = config.wavenumber(j, m);
                let ks = kxv * kxv + kyv * kyv;
                k_sq.push(ks);
                inv_k_sq.push(if ks == 0.0 { 0.0 } else { 1.0 / ks });
                kx.push(kxv);
                ky.push(kyv);
                dealias.push(if config.in_dealias_box(j, m) { 1.0 } else { 0.0 });
            }
        }
        Tables {
            k_sq,
            inv_k_sq,
            kx,
            ky,
            dealias,
        }
    }
}

/// Reusable buffers and plans for the pseudo-spectral Jacobian.
pub(crate) struct Engine {
    config: TorusConfig,
    fft: Fft2,
    pub(crate) tables: Tables,
    pack_a: Vec<Complex64>,
    pack_b: Vec<Complex64>,
    psi: Vec<Complex64>,
}

impl Engine {
    pub fn new(config: &TorusConfig) -> Self {
        let n = config.nx * config.ny;
        Engine {
            config: config.clone(),
            fft: Fft2::new(config.nx, config.ny),
            tables: Tables::new(config),
            pack_a: vec![Complex64::default(); n],
            pack_b: vec![Complex64::default(); n],
            psi: vec![Complex64::default(); n],
        }
    }

    /// `out = scale * J(phi, w)` dealiased, mean-zero, conjugate-symmetric.
    ///
    /// Uses two packed inverse transforms: `pack_a` carries
    /// `dx(phi) + i*dy(w)` and `pack_b` carries `dy(phi) + i*dx(w)`, so both
    /// factor pairs arrive with a single synthesis each.
    pub fn jacobian_into(
        &mut self,
        phi: &[Complex64],
        w: &[Complex64],
        out: &mut [Complex64],
        scale: f64,
    ) {
        let t = &self.tables;
        for i in 0..phi.len() {
            let mask = t.dealias[i];
            let p = phi[i] * mask;
            let q = w[i] * mask;
            // dx(phi) + i * dy(w) and dy(phi) + i * dx(w)
            let dxp = Complex64::new(-t.kx[i] * p.im, t.kx[i] * p.re);
            let dyw = Complex64::new(-t.ky[i] * q.im, t.ky[i] * q.re);
            let dyp = Complex64::new(-t.ky[i] * p.im, t.ky[i] * p.re);
            let dxw = Complex64::new(-t.kx[i] * q.im, t.kx[i] * q.re);
            self.pack_a[i] = dxp + Complex64::new(-dyw.im, dyw.re);
            self.pack_b[i] = dyp + Complex64::new(-dxw.im, dxw.re);
        }
        self.fft.inverse(&mut self.pack_a);
        self.fft.inverse(&mut self.pack_b);
        for i in 0..out.len() {
            let a = self.pack_a[i];
            let b = self.pack_b[i];
            out[i] = Complex64::new(a.re * a.im - b.re * b.im, 0.0);
        }
        self.fft.forward(out);
        for i in 0..out.len() {
            out[i] *= scale * self.tables.dealias[i];
        }
        out[0] = Complex64::default();
        hermitianize_raw(&self.config, out);
    }

    /// `out = scale * J(inv_laplacian(w), w)`, the self-advection term.
    pub fn self_advection_into(&mut self, w: &[Complex64], out: &mut [Complex64], scale: f64) {
        for i in 0..w.len() {
            self.psi[i] = -self.tables.inv_k_sq[i] * w[i];
        }
        let psi = std::mem::take(&mut self.psi);
        self.jacobian_into(&psi, w, out, scale);
        self.psi = psi;
    }

    /// Largest pointwise speed of the velocity recovered from `w`.
    pub fn max_speed(&mut self, w: &[Complex64]) -> f64 {
        let t = &self.tables;
        for i in 0..w.len() {
            let psi = t.inv_k_sq[i] * w[i];
            let u = Complex64::new(-t.ky[i] * psi.im, t.ky[i] * psi.re);
            let v = Complex64::new(t.kx[i] * psi.im, -t.kx[i] * psi.re);
            // u + i*v, both real on the grid
            self.pack_a[i] = u + Complex64::new(-v.im, v.re);
        }
        self.fft.inverse(&mut self.pack_a);
        self.pack_a
            .iter()
            .map(|c| c.norm())
            .fold(0.0f64, f64::max)
    }
}

/// Conjugate-symmetrizes a raw coefficient table.
pub(crate) fn hermitianize_raw(config: &TorusConfig, data: &mut [Complex64]) {
    let (nx, ny) = (config.nx, config.ny);
    for r in 0..nx {
        let rm = if r == 0 { 0 } else { nx - r };
        for c in 0..ny {
            let cm = if c == 0 { 0 } else { ny - c };
            if (rm, cm) < (r, c) {
                continue;
            }
            let a = data[r * ny + c];
            let b = data[rm * ny + cm];
            let sym = 0.5 * (a + b.conj());
            data[r * ny + c] = sym;
            data[rm * ny + cm] = sym.conj();
        }
    }
}

/// Coefficient-space shear operator `w -> sin y * d/dx (1 + inv_lap) w`.
pub(crate) struct ShearOp {
    ny: usize,
    /// `alpha*j * (1 - 1/|k|^2)` per mode, zero on the mean column.
    mult: Vec<f64>,
    /// Per column: source columns for the y-shifts `m-q` and `m+q`.
    shift_src: Vec<(Option<usize>, Option<usize>)>,
}

impl ShearOp {
    pub fn new(config: &TorusConfig) -> Self {
        let tables = Tables::new(config);
        let mult = tables
            .kx
            .iter()
            .zip(&tables.inv_k_sq)
            .zip(&tables.k_sq)
            .map(|((kx, inv), ks)| if *ks == 0.0 { 0.0 } else { kx * (1.0 - inv) })
            .collect();
        let q = config.unit_y_mode();
        let half = config.ny as i64 / 2;
        let shift_src = (0..config.ny)
            .map(|c| {
                let m = config.m_of_col(c);
                let lo = m - q;
                let hi = m + q;
                (
                    (-half..half).contains(&lo).then(|| config.col(lo)),
                    (-half..half).contains(&hi).then(|| config.col(hi)),
                )
            })
            .collect();
        ShearOp {
            ny: config.ny,
            mult,
            shift_src,
        }
    }

    /// `out[j][m] = -(scale/2) * (g[j][m+q] - g[j][m-q])` with
    /// `g = alpha*j * (1 - 1/|k|^2) * w`, the two `i` factors from the
    /// x-derivative and from `sin y = (e^{iy} - e^{-iy}) / 2i` combined.
    pub fn apply_scaled(&self, w: &[Complex64], out: &mut [Complex64], scale: f64) {
        let ny = self.ny;
        let factor = -0.5 * scale;
        for (row_idx, (w_row, out_row)) in
            w.chunks_exact(ny).zip(out.chunks_exact_mut(ny)).enumerate()
        {
            let mult_row = &self.mult[row_idx * ny..(row_idx + 1) * ny];
            for (c, slot) in out_row.iter_mut().enumerate() {
                let (lo, hi) = self.shift_src[c];
                let plus = hi.map_or(Complex64::default(), |s| mult_row[s] * w_row[s]);
                let minus = lo.map_or(Complex64::default(), |s| mult_row[s] * w_row[s]);
                *slot = factor * (plus - minus);
            }
        }
    }
}
