//! Discretized half-strip `[0, 2pi) x [0, Ymax]`: Fourier collocation in x,
//! Chebyshev-Gauss-Lobatto collocation in y, Clenshaw-Curtis quadrature, and
//! the vertical integral operator used to reconstruct the normal velocity.
//!
//! Vertical nodes ascend from `ys[0] = 0` to `ys[ny-1] = Ymax`. Differentiation
//! uses the collocation matrix with the negative-sum trick; the antiderivative
//! operator goes through Chebyshev coefficient space so that `Dy * Iy` is the
//! identity up to the dropped top coefficient.

use std::io::{Read as _, Write as _};
use std::path::Path;
use std::sync::Arc;

use ndarray::{Array1, Array2};
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

pub const FIELD_MAGIC: &[u8; 8] = b"HYPRLFLD";
pub const FIELD_VERSION: u32 = 1;

pub struct FieldGrid {
    pub nx: usize,
    pub ny: usize,
    pub ymax: f64,
    pub ell: f64,
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
    /// Clenshaw-Curtis weights on `[0, Ymax]`, aligned with `ys`.
    pub quad_w: Vec<f64>,
    /// First y-derivative, acting on node values: `(Dy f)_i = sum_j Dy[i][j] f_j`.
    pub dy: Array2<f64>,
    /// Antiderivative from y = 0.
    pub iy: Array2<f64>,
    /// Chebyshev analysis matrix: coefficients = `cheb = Ct . values`.
    pub cheb_analysis: Array2<f64>,
    dy_t: Array2<f64>,
    iy_t: Array2<f64>,
    yfilter_t: Array2<f64>,
    fft_fwd: Arc<dyn Fft<f64>>,
    fft_inv: Arc<dyn Fft<f64>>,
    fft_fwd_pad: Arc<dyn Fft<f64>>,
    fft_inv_pad: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for FieldGrid {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FieldGrid")
            .field("nx", &self.nx)
            .field("ny", &self.ny)
            .field("ymax", &self.ymax)
            .field("ell", &self.ell)
            .finish()
    }
}

impl FieldGrid {
    pub fn new(nx: usize, ny: usize, ymax: f64, ell: f64) -> Result<Arc<Self>> {
        let mut problems = Vec::new();
        if nx < 4 || !nx.is_power_of_two() {
            problems.push(format!("nx must be a power of two >= 4, got {nx}"));
        }
        if ny < 8 {
            problems.push(format!("ny must be >= 8, got {ny}"));
        }
        if !(ymax > 0.0) {
            problems.push(format!("ymax must be positive, got {ymax}"));
        }
        if !(ell >= 2.0) {
            problems.push(format!("ell must be >= 2, got {ell}"));
        }
        if !problems.is_empty() {
            return Err(Error::Config(problems.join("\n")));
        }

        let xs: Vec<f64> = (0..nx)
            .map(|i| 2.0 * std::f64::consts::PI * i as f64 / nx as f64)
            .collect();

        let n = ny - 1; // Chebyshev order
        // standard CGL abscissae x_j = cos(pi j / n), mapped to y = ymax (1 - x)/2
        let xcheb: Vec<f64> = (0..=n)
            .map(|j| (std::f64::consts::PI * j as f64 / n as f64).cos())
            .collect();
        let ys: Vec<f64> = xcheb.iter().map(|&x| ymax * (1.0 - x) / 2.0).collect();

        let dcheb = cheb_diff_matrix(&xcheb);
        // x = 1 - 2y/ymax so d/dy = -(2/ymax) d/dx
        let dy = dcheb.mapv(|v| -2.0 / ymax * v);

        let quad_w = clenshaw_curtis(n).iter().map(|w| w * ymax / 2.0).collect();

        let analysis = cheb_analysis_matrix(n);
        let synthesis = cheb_synthesis_matrix(n);
        let integ = cheb_integration_coeff_matrix(n);
        // int_0^y f = -(ymax/2) (F(x) - F(1)) with F(1) = 0 built into `integ`
        let mut iy = synthesis.dot(&integ).dot(&analysis).mapv(|v| -ymax / 2.0 * v);
        // the wall row vanishes analytically; make it exact
        iy.row_mut(0).fill(0.0);

        // Exponential filter on the top quarter of the Chebyshev spectrum:
        // exactly unity below 3n/4, dropping to e^{-36} (machine zero) at
        // k = n. It drains the top-mode content that explicit stepping of a
        // hyperbolic system otherwise accumulates, without touching any mode
        // a well-resolved solution actually uses.
        let mut sigma = Array2::<f64>::zeros((n + 1, n + 1));
        let k0 = 3 * n / 4;
        for k in 0..=n {
            sigma[[k, k]] = if k <= k0 {
                1.0
            } else {
                let r = (k - k0) as f64 / (n - k0) as f64;
                (-36.0 * r.powi(8)).exp()
            };
        }
        let yfilter = synthesis.dot(&sigma).dot(&analysis);

        let mut planner = FftPlanner::new();
        let npad = 3 * nx / 2;
        Ok(Arc::new(FieldGrid {
            nx,
            ny,
            ymax,
            ell,
            xs,
            ys,
            quad_w,
            dy_t: dy.t().to_owned(),
            iy_t: iy.t().to_owned(),
            yfilter_t: yfilter.t().to_owned(),
            dy,
            iy,
            cheb_analysis: analysis,
            fft_fwd: planner.plan_fft_forward(nx),
            fft_inv: planner.plan_fft_inverse(nx),
            fft_fwd_pad: planner.plan_fft_forward(npad),
            fft_inv_pad: planner.plan_fft_inverse(npad),
        }))
    }

    /// Smallest vertical node spacing (next to the wall).
    pub fn dy_min(&self) -> f64 {
        self.ys[1] - self.ys[0]
    }

    pub fn dx(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.nx as f64
    }

    fn same_grid(a: &Arc<FieldGrid>, b: &Arc<FieldGrid>) -> Result<()> {
        if Arc::ptr_eq(a, b) {
            Ok(())
        } else {
            Err(Error::domain("fields live on different grids"))
        }
    }
}

/// Trefethen collocation derivative matrix on arbitrary CGL abscissae,
/// diagonal filled by the negative-sum trick.
fn cheb_diff_matrix(x: &[f64]) -> Array2<f64> {
    let n = x.len() - 1;
    let c = |i: usize| -> f64 {
        let ci = if i == 0 || i == n { 2.0 } else { 1.0 };
        ci * if i % 2 == 0 { 1.0 } else { -1.0 }
    };
    let mut d = Array2::zeros((n + 1, n + 1));
    for i in 0..=n {
        for j in 0..=n {
            if i != j {
                d[[i, j]] = c(i) / c(j) / (x[i] - x[j]);
            }
        }
    }
    for i in 0..=n {
        let mut s = 0.0;
        for j in 0..=n {
            if i != j {
                s += d[[i, j]];
            }
        }
        d[[i, i]] = -s;
    }
    d
}

/// Clenshaw-Curtis weights on `[-1, 1]` for the CGL nodes of order `n`.
fn clenshaw_curtis(n: usize) -> Vec<f64> {
    let mut w = vec![0.0; n + 1];
    let endpoint = if n % 2 == 0 {
        1.0 / (n as f64 * n as f64 - 1.0)
    } else {
        1.0 / (n as f64 * n as f64)
    };
    w[0] = endpoint;
    w[n] = endpoint;
    for j in 1..n {
        let theta = std::f64::consts::PI * j as f64 / n as f64;
        let mut v = 1.0;
        let half = n / 2;
        for k in 1..=half {
            let term = (2.0 * k as f64 * theta).cos() / (4.0 * k as f64 * k as f64 - 1.0);
            if n % 2 == 0 && k == half {
                v -= term; // the k = n/2 term enters with half weight
            } else {
                v -= 2.0 * term;
            }
        }
        w[j] = 2.0 * v / n as f64;
    }
    w
}

/// `a_k = (2 / (n c_k)) sum_j'' f(x_j) cos(pi j k / n)` with `c_0 = c_n = 2`.
fn cheb_analysis_matrix(n: usize) -> Array2<f64> {
    let mut m = Array2::zeros((n + 1, n + 1));
    for k in 0..=n {
        let ck = if k == 0 || k == n { 2.0 } else { 1.0 };
        for j in 0..=n {
            let cj = if j == 0 || j == n { 2.0 } else { 1.0 };
            m[[k, j]] = 2.0 / (n as f64 * ck * cj)
                * (std::f64::consts::PI * (j * k) as f64 / n as f64).cos();
        }
    }
    m
}

/// `values_j = sum_k a_k T_k(x_j)`, i.e. `V[j][k] = cos(pi j k / n)`.
fn cheb_synthesis_matrix(n: usize) -> Array2<f64> {
    let mut m = Array2::zeros((n + 1, n + 1));
    for j in 0..=n {
        for k in 0..=n {
            m[[j, k]] = (std::f64::consts::PI * (j * k) as f64 / n as f64).cos();
        }
    }
    m
}

/// Coefficient-space antiderivative with the constant fixed so `F(x=1) = 0`:
/// `b_1 = a_0 - a_2/2`, `b_k = (a_{k-1} - a_{k+1}) / (2k)`, `b_0 = -sum b_k`.
fn cheb_integration_coeff_matrix(n: usize) -> Array2<f64> {
    let mut m = Array2::zeros((n + 1, n + 1));
    for k in 1..=n {
        if k == 1 {
            m[[1, 0]] = 1.0;
            if n >= 2 {
                m[[1, 2]] = -0.5;
            }
        } else {
            m[[k, k - 1]] = 1.0 / (2.0 * k as f64);
            if k + 1 <= n {
                m[[k, k + 1]] = -1.0 / (2.0 * k as f64);
            }
        }
    }
    for col in 0..=n {
        let mut s = 0.0;
        for k in 1..=n {
            s += m[[k, col]];
        }
        m[[0, col]] = -s;
    }
    m
}

/// Scalar field sampled on a [`FieldGrid`], row `i` holding the y-profile at
/// `xs[i]`. Public operations reject non-finite values.
#[derive(Debug, Clone)]
pub struct ScalarField {
    pub grid: Arc<FieldGrid>,
    pub values: Array2<f64>,
}

/// Result of a repeated vertical derivative together with its round-off
/// noise indicator (share of energy in the top two Chebyshev coefficients).
#[derive(Debug, Clone)]
pub struct DyPowerResult {
    pub field: ScalarField,
    pub noise_indicator: f64,
}

impl DyPowerResult {
    pub fn noise_dominated(&self) -> bool {
        self.noise_indicator > 0.1
    }
}

impl ScalarField {
    pub fn zeros(grid: &Arc<FieldGrid>) -> Self {
        ScalarField { grid: grid.clone(), values: Array2::zeros((grid.nx, grid.ny)) }
    }

    pub fn from_fn(grid: &Arc<FieldGrid>, f: impl Fn(f64, f64) -> f64) -> Self {
        let mut values = Array2::zeros((grid.nx, grid.ny));
        for (i, &x) in grid.xs.iter().enumerate() {
            for (j, &y) in grid.ys.iter().enumerate() {
                values[[i, j]] = f(x, y);
            }
        }
        ScalarField { grid: grid.clone(), values }
    }

    pub fn from_values(grid: &Arc<FieldGrid>, values: Array2<f64>) -> Result<Self> {
        if values.dim() != (grid.nx, grid.ny) {
            return Err(Error::domain(format!(
                "value array {:?} does not match grid ({}, {})",
                values.dim(),
                grid.nx,
                grid.ny
            )));
        }
        let f = ScalarField { grid: grid.clone(), values };
        f.assert_finite("from_values")?;
        Ok(f)
    }

    pub fn assert_finite(&self, context: &str) -> Result<()> {
        if self.values.iter().all(|v| v.is_finite()) {
            Ok(())
        } else {
            Err(Error::domain(format!("non-finite values in {context}")))
        }
    }

    /// `d^m/dx^m` as a Fourier multiplier; exact per mode.
    pub fn dx_power(&self, m: usize) -> Result<ScalarField> {
        self.assert_finite("dx_power input")?;
        if m == 0 {
            return Ok(self.clone());
        }
        let nx = self.grid.nx;
        let half = nx / 2;
        // |k|^m must stay representable
        if m as f64 * (half as f64).ln() > 700.0 {
            return Err(Error::domain(format!(
                "tangential derivative order {m} too large for physical evaluation on {nx} modes"
            )));
        }
        let mut factors = vec![Complex64::new(0.0, 0.0); nx];
        for (p, slot) in factors.iter_mut().enumerate() {
            let k = if p <= half { p as i64 } else { p as i64 - nx as i64 };
            if p == half {
                // Nyquist: zero for odd orders, real for even
                if m % 2 == 0 {
                    let mag = (k as f64).abs().powi(m as i32);
                    *slot = Complex64::new(if (m / 2) % 2 == 0 { mag } else { -mag }, 0.0);
                }
                continue;
            }
            *slot = Complex64::new(0.0, k as f64).powu(m as u32);
        }
        let mut out = self.values.clone();
        let mut buf = vec![Complex64::new(0.0, 0.0); nx];
        let mut scratch = vec![Complex64::new(0.0, 0.0); self.grid.fft_fwd.get_inplace_scratch_len()];
        for j in 0..self.grid.ny {
            for i in 0..nx {
                buf[i] = Complex64::new(self.values[[i, j]], 0.0);
            }
            self.grid.fft_fwd.process_with_scratch(&mut buf, &mut scratch);
            for (b, f) in buf.iter_mut().zip(&factors) {
                *b *= f;
            }
            self.grid.fft_inv.process_with_scratch(&mut buf, &mut scratch);
            for i in 0..nx {
                out[[i, j]] = buf[i].re / nx as f64;
            }
        }
        Ok(ScalarField { grid: self.grid.clone(), values: out })
    }

    pub fn dx(&self) -> Result<ScalarField> {
        self.dx_power(1)
    }

    /// Vertical spectral filter pass (see the `yfilter` construction note).
    pub fn y_filtered(&self) -> ScalarField {
        ScalarField { grid: self.grid.clone(), values: self.values.dot(&self.grid.yfilter_t) }
    }

    /// Single vertical derivative (no noise accounting; hot path).
    pub fn dy(&self) -> Result<ScalarField> {
        self.assert_finite("dy input")?;
        Ok(ScalarField { grid: self.grid.clone(), values: self.values.dot(&self.grid.dy_t) })
    }

    /// `k`-fold vertical derivative with noise indicator.
    pub fn dy_power(&self, k: usize) -> Result<DyPowerResult> {
        self.assert_finite("dy_power input")?;
        let mut values = self.values.clone();
        for _ in 0..k {
            values = values.dot(&self.grid.dy_t);
        }
        let field = ScalarField { grid: self.grid.clone(), values };
        let noise_indicator = field.top_cheb_energy_share();
        Ok(DyPowerResult { field, noise_indicator })
    }

    /// Share of Chebyshev-coefficient energy carried by the top quarter of
    /// the spectrum. Collocation differentiation suppresses the very top
    /// coefficients structurally, so round-off contamination accumulates just
    /// below them; a wide window catches it either way.
    pub fn top_cheb_energy_share(&self) -> f64 {
        let coeffs = self.values.dot(&self.grid.cheb_analysis.t());
        let ny = self.grid.ny;
        let window = noise_window(ny);
        let mut top = 0.0;
        let mut total = 0.0;
        for row in coeffs.rows() {
            for (j, &a) in row.iter().enumerate() {
                let e = a * a;
                total += e;
                if j >= window {
                    top += e;
                }
            }
        }
        if total == 0.0 {
            0.0
        } else {
            top / total
        }
    }

    /// `F(x, y) = int_0^y f(x, s) ds`; `F(x, 0) = 0` by construction.
    pub fn vertical_integral(&self) -> Result<ScalarField> {
        self.assert_finite("vertical_integral input")?;
        Ok(ScalarField { grid: self.grid.clone(), values: self.values.dot(&self.grid.iy_t) })
    }

    /// `|| <y>^p f ||_{L2}` over the strip, trapezoid in x, Clenshaw-Curtis in y.
    pub fn weighted_l2(&self, weight_power: f64) -> f64 {
        let dx = self.grid.dx();
        let mut acc = 0.0;
        for (j, (&w, &y)) in self.grid.quad_w.iter().zip(&self.grid.ys).enumerate() {
            let yw = (1.0 + y * y).powf(weight_power);
            let mut col = 0.0;
            for i in 0..self.grid.nx {
                let v = self.values[[i, j]];
                col += v * v;
            }
            acc += w * yw * col;
        }
        (acc * dx).max(0.0).sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |a, &v| a.max(v.abs()))
    }

    /// Largest `|f(x, 0)|` over the wall nodes.
    pub fn boundary_residual(&self) -> f64 {
        (0..self.grid.nx).fold(0.0f64, |a, i| a.max(self.values[[i, 0]].abs()))
    }

    pub fn set_wall_zero(&mut self) {
        for i in 0..self.grid.nx {
            self.values[[i, 0]] = 0.0;
        }
    }

    pub fn set_top_zero(&mut self) {
        let j = self.grid.ny - 1;
        for i in 0..self.grid.nx {
            self.values[[i, j]] = 0.0;
        }
    }

    /// Quadratic product with 3/2-rule zero padding in x.
    pub fn mul_dealiased(&self, other: &ScalarField) -> Result<ScalarField> {
        FieldGrid::same_grid(&self.grid, &other.grid)?;
        self.assert_finite("mul_dealiased lhs")?;
        other.assert_finite("mul_dealiased rhs")?;
        let g = &self.grid;
        let nx = g.nx;
        let npad = 3 * nx / 2;
        let half = nx / 2;
        let mut out = Array2::zeros((nx, g.ny));
        let mut ba = vec![Complex64::default(); nx];
        let mut bb = vec![Complex64::default(); nx];
        let mut pa = vec![Complex64::default(); npad];
        let mut pb = vec![Complex64::default(); npad];
        let mut scratch = vec![
            Complex64::default();
            g.fft_fwd
                .get_inplace_scratch_len()
                .max(g.fft_fwd_pad.get_inplace_scratch_len())
        ];
        for j in 0..g.ny {
            for i in 0..nx {
                ba[i] = Complex64::new(self.values[[i, j]], 0.0);
                bb[i] = Complex64::new(other.values[[i, j]], 0.0);
            }
            g.fft_fwd.process_with_scratch(&mut ba, &mut scratch);
            g.fft_fwd.process_with_scratch(&mut bb, &mut scratch);
            pad_spectrum(&ba, &mut pa, nx, npad);
            pad_spectrum(&bb, &mut pb, nx, npad);
            g.fft_inv_pad.process_with_scratch(&mut pa, &mut scratch);
            g.fft_inv_pad.process_with_scratch(&mut pb, &mut scratch);
            for (a, b) in pa.iter_mut().zip(&pb) {
                *a *= b;
            }
            g.fft_fwd_pad.process_with_scratch(&mut pa, &mut scratch);
            // truncate back, dropping Nyquist
            for i in 0..nx {
                ba[i] = Complex64::default();
            }
            let scale = 1.0 / npad as f64;
            for p in 0..half {
                ba[p] = pa[p] * scale;
            }
            for q in 1..half {
                ba[nx - q] = pa[npad - q] * scale;
            }
            g.fft_inv.process_with_scratch(&mut ba, &mut scratch);
            for i in 0..nx {
                out[[i, j]] = ba[i].re;
            }
        }
        Ok(ScalarField { grid: self.grid.clone(), values: out })
    }

    /// Complex Fourier mode profiles `c_K(y)`, `K = 0 ..= nx/2`, normalized so
    /// `||f||^2_{L2x} = 2 pi * sum_K mult(K) |c_K|^2` with `mult = 2` for the
    /// interior modes.
    pub fn mode_profiles(&self) -> Vec<Array1<Complex64>> {
        let g = &self.grid;
        let nx = g.nx;
        let half = nx / 2;
        let mut buf = vec![Complex64::default(); nx];
        let mut scratch = vec![Complex64::default(); g.fft_fwd.get_inplace_scratch_len()];
        let mut profiles = vec![Array1::from_elem(g.ny, Complex64::default()); half + 1];
        for j in 0..g.ny {
            for i in 0..nx {
                buf[i] = Complex64::new(self.values[[i, j]], 0.0);
            }
            g.fft_fwd.process_with_scratch(&mut buf, &mut scratch);
            for (k, profile) in profiles.iter_mut().enumerate() {
                profile[j] = buf[k] / nx as f64;
            }
        }
        profiles
    }

    pub fn scaled(&self, c: f64) -> ScalarField {
        ScalarField { grid: self.grid.clone(), values: self.values.mapv(|v| c * v) }
    }

    pub fn add(&self, other: &ScalarField) -> Result<ScalarField> {
        FieldGrid::same_grid(&self.grid, &other.grid)?;
        Ok(ScalarField { grid: self.grid.clone(), values: &self.values + &other.values })
    }

    pub fn sub(&self, other: &ScalarField) -> Result<ScalarField> {
        FieldGrid::same_grid(&self.grid, &other.grid)?;
        Ok(ScalarField { grid: self.grid.clone(), values: &self.values - &other.values })
    }

    /// `self += c * other`, in place.
    pub fn axpy(&mut self, c: f64, other: &ScalarField) {
        self.values.zip_mut_with(&other.values, |a, &b| *a += c * b);
    }
}

/// First Chebyshev coefficient index counted as "tail" by the round-off
/// noise indicators.
pub fn noise_window(ny: usize) -> usize {
    ny - (ny / 4).max(3)
}

fn pad_spectrum(src: &[Complex64], dst: &mut [Complex64], nx: usize, npad: usize) {
    let half = nx / 2;
    for d in dst.iter_mut() {
        *d = Complex64::default();
    }
    let scale = 1.0 / nx as f64;
    for p in 0..half {
        dst[p] = src[p] * scale;
    }
    for q in 1..half {
        dst[npad - q] = src[nx - q] * scale;
    }
    // split the Nyquist coefficient symmetrically to keep the product real
    let nyq = src[half] * (0.5 * scale);
    dst[half] = nyq;
    dst[npad - half] = nyq;
}

/// Write a field dump: 64-byte header then row-major little-endian f64.
pub fn write_field(path: &Path, field: &ScalarField, time: f64) -> Result<()> {
    let g = &field.grid;
    let mut header = [0u8; 64];
    header[..8].copy_from_slice(FIELD_MAGIC);
    header[8..12].copy_from_slice(&FIELD_VERSION.to_le_bytes());
    header[12..16].copy_from_slice(&(g.nx as u32).to_le_bytes());
    header[16..20].copy_from_slice(&(g.ny as u32).to_le_bytes());
    header[24..32].copy_from_slice(&g.ymax.to_le_bytes());
    header[32..40].copy_from_slice(&g.ell.to_le_bytes());
    header[40..48].copy_from_slice(&time.to_le_bytes());
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    w.write_all(&header)?;
    for &v in field.values.iter() {
        w.write_all(&v.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldHeader {
    pub nx: usize,
    pub ny: usize,
    pub ymax: f64,
    pub ell: f64,
    pub time: f64,
}

impl std::fmt::Display for FieldHeader {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "nx={} ny={} ymax={} ell={} t={}",
            self.nx, self.ny, self.ymax, self.ell, self.time
        )
    }
}

/// Read any field dump without grid checks.
pub fn read_field_raw(path: &Path) -> Result<(FieldHeader, Array2<f64>)> {
    let mut r = std::io::BufReader::new(std::fs::File::open(path)?);
    let mut header = [0u8; 64];
    r.read_exact(&mut header)
        .map_err(|_| Error::Format(format!("{}: file too short for header", path.display())))?;
    if &header[..8] != FIELD_MAGIC {
        return Err(Error::Format(format!("{}: bad magic", path.display())));
    }
    let version = u32::from_le_bytes(header[8..12].try_into().unwrap());
    if version != FIELD_VERSION {
        return Err(Error::Format(format!("{}: unsupported version {version}", path.display())));
    }
    let nx = u32::from_le_bytes(header[12..16].try_into().unwrap()) as usize;
    let ny = u32::from_le_bytes(header[16..20].try_into().unwrap()) as usize;
    let ymax = f64::from_le_bytes(header[24..32].try_into().unwrap());
    let ell = f64::from_le_bytes(header[32..40].try_into().unwrap());
    let time = f64::from_le_bytes(header[40..48].try_into().unwrap());
    let mut data = vec![0u8; nx * ny * 8];
    r.read_exact(&mut data)
        .map_err(|_| Error::Format(format!("{}: truncated payload", path.display())))?;
    let values: Vec<f64> = data
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    let arr = Array2::from_shape_vec((nx, ny), values)
        .map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;
    Ok((FieldHeader { nx, ny, ymax, ell, time }, arr))
}

/// Read a field dump onto an existing grid; the header must match.
pub fn read_field(path: &Path, grid: &Arc<FieldGrid>) -> Result<(ScalarField, f64)> {
    let (h, values) = read_field_raw(path)?;
    if h.nx != grid.nx || h.ny != grid.ny || h.ymax != grid.ymax || h.ell != grid.ell {
        return Err(Error::Format(format!(
            "{}: header mismatch\n  file:   {}\n  active: nx={} ny={} ymax={} ell={}",
            path.display(),
            h,
            grid.nx,
            grid.ny,
            grid.ymax,
            grid.ell
        )));
    }
    Ok((ScalarField { grid: grid.clone(), values }, h.time))
}
