//! Field radiated by a polarization confined to the resonator cells,
//! evaluated anywhere in the plane.
//!
//! Points within twice the enclosing radius use cell integrals directly;
//! beyond that a cylindrical multipole expansion about the cell centroid is
//! used (Graf's addition theorem), which is exact up to truncation and keeps
//! large quadrature domains cheap.

use num_complex::Complex64;

use crate::kernel::CellKernel;
use crate::model::{Background, Point2};
use crate::quadrature::gauss_on;
use crate::solver::vie::{radiate, radiate_curl, Discretization};
use crate::special;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Cylindrical multipole expansion of `sum_j g(r - r_j) p_j`.
#[derive(Debug, Clone)]
pub struct Multipole {
    pub center: Point2,
    /// Valid for `|r - center| >= radius`.
    pub radius: f64,
    order: usize,
    k: Complex64,
    k0sq: Complex64,
    /// `a_m` for `m = -order-2 ..= order+2`, per component.
    ax: Vec<Complex64>,
    ay: Vec<Complex64>,
}

impl Multipole {
    /// Expansion of cell polarizations.
    pub fn new(kernel: &CellKernel, disc: &Discretization, polarization: &[[Complex64; 2]], order: usize) -> Self {
        let (center, enclosing) = disc.enclosing_circle();
        let k = kernel.k();
        let big = order + 2;
        let mut ax = vec![Complex64::default(); 2 * big + 1];
        let mut ay = vec![Complex64::default(); 2 * big + 1];
        // 3x3 Gauss points per cell so the expansion matches the cell integrals.
        let rule = gauss_on(3, -0.5 * disc.h, 0.5 * disc.h);
        for (idx, p) in polarization.iter().enumerate() {
            for &(x, wx) in &rule {
                for &(y, wy) in &rule {
                    let d = disc.center(idx) + Point2::new(x, y) - center;
                    let rj = d.norm();
                    let phi = d.y.atan2(d.x);
                    let j = special::bessel_j_seq(big, k * rj);
                    for m in -(big as i64)..=(big as i64) {
                        let jm = if m < 0 && m % 2 != 0 { -j[m.unsigned_abs() as usize] } else { j[m.unsigned_abs() as usize] };
                        let w = jm * Complex64::from_polar(wx * wy, -(m as f64) * phi);
                        let at = (m + big as i64) as usize;
                        ax[at] += w * p[0];
                        ay[at] += w * p[1];
                    }
                }
            }
        }
        Self { center, radius: 2.0 * enclosing, order, k, k0sq: kernel.k0sq(), ax, ay }
    }

    /// `Z_n = H_n(k r) e^{i n phi}` for `n = -(order+4) ..= order+4`.
    fn z_values(&self, r: Point2) -> (Vec<Complex64>, usize) {
        let d = r - self.center;
        let rho = d.norm();
        let phi = d.y.atan2(d.x);
        let top = self.order + 4;
        let h = special::hankel1_seq(top, self.k * rho);
        let mut z = vec![Complex64::default(); 2 * top + 1];
        for n in -(top as i64)..=(top as i64) {
            let hn = if n < 0 && n % 2 != 0 { -h[n.unsigned_abs() as usize] } else { h[n.unsigned_abs() as usize] };
            z[(n + top as i64) as usize] = hn * Complex64::from_polar(1.0, n as f64 * phi);
        }
        (z, top)
    }

    pub fn field(&self, r: Point2) -> [Complex64; 2] {
        let (z, top) = self.z_values(r);
        self.field_from(&z, top)
    }

    fn field_from(&self, z: &[Complex64], top: usize) -> [Complex64; 2] {
        let big = self.order + 2;
        let zz = |n: i64| z[(n + top as i64) as usize];
        let (mut ex, mut ey) = (Complex64::default(), Complex64::default());
        for m in -(big as i64)..=(big as i64) {
            let at = (m + big as i64) as usize;
            let (ax, ay) = (self.ax[at], self.ay[at]);
            let sum = zz(m + 2) + zz(m - 2);
            let diff = zz(m + 2) - zz(m - 2);
            ex += ax * (zz(m) * 0.5 + sum * 0.25) - I * ay * diff * 0.25;
            ey += ay * (zz(m) * 0.5 - sum * 0.25) - I * ax * diff * 0.25;
        }
        let pre = self.k0sq * I * 0.25;
        [ex * pre, ey * pre]
    }

    pub fn curl(&self, r: Point2) -> Complex64 {
        let (z, top) = self.z_values(r);
        self.curl_from(&z, top)
    }

    /// Field and curl sharing one Hankel evaluation.
    pub fn field_and_curl(&self, r: Point2) -> ([Complex64; 2], Complex64) {
        let (z, top) = self.z_values(r);
        (self.field_from(&z, top), self.curl_from(&z, top))
    }

    fn curl_from(&self, z: &[Complex64], top: usize) -> Complex64 {
        let big = self.order + 2;
        let zz = |n: i64| z[(n + top as i64) as usize];
        let mut acc = Complex64::default();
        for m in -(big as i64)..=(big as i64) {
            let at = (m + big as i64) as usize;
            let dx = (zz(m - 1) - zz(m + 1)) * (self.k * 0.5);
            let dy = (zz(m - 1) + zz(m + 1)) * (I * self.k * 0.5);
            acc += dx * self.ay[at] - dy * self.ax[at];
        }
        acc * self.k0sq * I * 0.25
    }
}

/// Field of a fixed cell polarization at one frequency.
#[derive(Debug, Clone)]
pub struct Radiator {
    pub disc: Discretization,
    pub kernel: CellKernel,
    pub polarization: Vec<[Complex64; 2]>,
    pub multipole: Multipole,
}

/// Expansion order used for far evaluations.
pub const MULTIPOLE_ORDER: usize = 40;

impl Radiator {
    pub fn new(disc: &Discretization, omega: Complex64, bg: &Background, polarization: Vec<[Complex64; 2]>) -> Self {
        let kernel = CellKernel::new(omega, bg, disc.h);
        let multipole = Multipole::new(&kernel, disc, &polarization, MULTIPOLE_ORDER);
        Self { disc: disc.clone(), kernel, polarization, multipole }
    }

    pub fn is_far(&self, r: Point2) -> bool {
        r.dist(self.multipole.center) >= self.multipole.radius
    }

    pub fn field(&self, r: Point2) -> [Complex64; 2] {
        if self.is_far(r) {
            self.multipole.field(r)
        } else {
            self.field_direct(r)
        }
    }

    pub fn field_direct(&self, r: Point2) -> [Complex64; 2] {
        radiate(&self.kernel, &self.disc, &self.polarization, r)
    }

    pub fn field_and_curl(&self, r: Point2) -> ([Complex64; 2], Complex64) {
        if self.is_far(r) {
            self.multipole.field_and_curl(r)
        } else {
            (self.field_direct(r), radiate_curl(&self.kernel, &self.disc, &self.polarization, r))
        }
    }

    pub fn curl(&self, r: Point2) -> Complex64 {
        if self.is_far(r) {
            self.multipole.curl(r)
        } else {
            radiate_curl(&self.kernel, &self.disc, &self.polarization, r)
        }
    }
}
