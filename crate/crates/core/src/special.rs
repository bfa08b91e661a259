//! Cylinder functions of complex argument: Bessel `J_n` and Hankel `H_n^(1)`.
//!
//! Orders 0 and 1 use the ascending series for `|z| <= 12` and the Hankel
//! asymptotic expansion beyond. Higher orders come from recurrences: upward
//! for `H_n`, and either the ascending series or Miller's backward recurrence
//! for `J_n`. All routines assume `|arg z| < pi/2`, i.e. `Re z > 0`, which
//! covers every argument `k r` with `k` at a real or decaying complex
//! frequency.

use std::f64::consts::{FRAC_2_PI, FRAC_PI_2, FRAC_PI_4, PI};

use num_complex::Complex64;

const SWITCH: f64 = 12.0;
const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
const I: Complex64 = Complex64::new(0.0, 1.0);

/// `(J0, J1, Y0, Y1)` from the ascending series.
fn series01(z: Complex64) -> (Complex64, Complex64, Complex64, Complex64) {
    let q = -z * z * 0.25;
    let half = z * 0.5;
    let log_half = half.ln();

    // psi(k+1) = -gamma + H_k
    let mut psi0 = -EULER_GAMMA;
    let mut psi1 = 1.0 - EULER_GAMMA;
    let mut t0 = Complex64::new(1.0, 0.0); // q^k / (k!)^2
    let mut t1 = Complex64::new(1.0, 0.0); // q^k / (k!(k+1)!)
    let (mut j0, mut j1) = (Complex64::default(), Complex64::default());
    let (mut s0, mut s1) = (Complex64::default(), Complex64::default());
    for k in 0..200 {
        j0 += t0;
        j1 += t1;
        s0 += t0 * (2.0 * psi0);
        s1 += t1 * (psi0 + psi1);
        if k > 2 && t0.norm() < 1e-17 * j0.norm().max(1e-300) && t1.norm() < 1e-17 * j1.norm().max(1e-300) {
            break;
        }
        let kf = (k + 1) as f64;
        t0 = t0 * q / (kf * kf);
        t1 = t1 * q / (kf * (kf + 1.0));
        psi0 += 1.0 / kf;
        psi1 += 1.0 / (kf + 1.0);
    }
    let j1 = j1 * half;
    let y0 = FRAC_2_PI * log_half * j0 - s0 / PI;
    let y1 = FRAC_2_PI * log_half * j1 - FRAC_2_PI / z - half * s1 / PI;
    (j0, j1, y0, y1)
}

/// Hankel asymptotic expansion: returns `(H^(1)_nu, H^(2)_nu)`.
fn asymptotic(nu: f64, z: Complex64) -> (Complex64, Complex64) {
    let mu = 4.0 * nu * nu;
    let pre = (Complex64::new(FRAC_2_PI, 0.0) / z).sqrt();
    let phase = z - (nu * FRAC_PI_2 + FRAC_PI_4);
    let mut term = Complex64::new(1.0, 0.0);
    let mut p = Complex64::new(1.0, 0.0);
    let mut m = Complex64::new(1.0, 0.0);
    let mut last = f64::INFINITY;
    for k in 1..60 {
        let kf = k as f64;
        let odd = 2.0 * kf - 1.0;
        let next = term * (mu - odd * odd) / (kf * 8.0 * z);
        let size = next.norm();
        if size > last || size < 1e-17 {
            break;
        }
        last = size;
        term = next;
        // i^k and (-i)^k
        let ik = I.powu(k as u32);
        p += ik * term;
        m += ik.conj() * term;
    }
    let e = (I * phase).exp();
    let em = (-I * phase).exp();
    (pre * e * p, pre * em * m)
}

/// `(J0(z), J1(z))`.
pub fn bessel_j01(z: Complex64) -> (Complex64, Complex64) {
    if z.norm() <= SWITCH {
        let (j0, j1, _, _) = series01(z);
        (j0, j1)
    } else {
        let (h10, h20) = asymptotic(0.0, z);
        let (h11, h21) = asymptotic(1.0, z);
        ((h10 + h20) * 0.5, (h11 + h21) * 0.5)
    }
}

/// `(H^(1)_0(z), H^(1)_1(z))`.
pub fn hankel1_01(z: Complex64) -> (Complex64, Complex64) {
    if z.norm() <= SWITCH {
        let (j0, j1, y0, y1) = series01(z);
        (j0 + I * y0, j1 + I * y1)
    } else {
        (asymptotic(0.0, z).0, asymptotic(1.0, z).0)
    }
}

/// `H^(1)_n(z)` for `n = 0..=nmax` by upward recurrence.
pub fn hankel1_seq(nmax: usize, z: Complex64) -> Vec<Complex64> {
    let (h0, h1) = hankel1_01(z);
    let mut out = Vec::with_capacity(nmax + 1);
    out.push(h0);
    if nmax >= 1 {
        out.push(h1);
    }
    for n in 1..nmax {
        let next = out[n] * (2.0 * n as f64) / z - out[n - 1];
        out.push(next);
    }
    out
}

/// `J_n(z)` for `n = 0..=nmax`.
pub fn bessel_j_seq(nmax: usize, z: Complex64) -> Vec<Complex64> {
    if z.norm() == 0.0 {
        let mut out = vec![Complex64::default(); nmax + 1];
        out[0] = Complex64::new(1.0, 0.0);
        return out;
    }
    if z.norm() <= SWITCH {
        return (0..=nmax).map(|n| bessel_j_series(n, z)).collect();
    }
    // Miller: start well above both nmax and |z|, recur downward, normalize.
    let start = nmax.max(z.norm() as usize) + 40 + (z.norm().sqrt() * 4.0) as usize;
    let mut vals = vec![Complex64::default(); start + 2];
    vals[start] = Complex64::new(1e-30, 0.0);
    for k in (1..=start).rev() {
        vals[k - 1] = vals[k] * (2.0 * k as f64) / z - vals[k + 1];
        if vals[k - 1].norm() > 1e100 {
            for v in vals.iter_mut().skip(k - 1) {
                *v *= 1e-100;
            }
        }
    }
    let (j0, j1) = bessel_j01(z);
    let scale = if j0.norm() >= j1.norm() { j0 / vals[0] } else { j1 / vals[1] };
    vals.truncate(nmax + 1);
    vals.iter().map(|v| v * scale).collect()
}

fn bessel_j_series(n: usize, z: Complex64) -> Complex64 {
    let half = z * 0.5;
    let q = -half * half;
    let mut lead = Complex64::new(1.0, 0.0);
    for k in 1..=n {
        lead = lead * half / k as f64;
    }
    let mut term = Complex64::new(1.0, 0.0);
    let mut sum = term;
    for k in 1..300 {
        term = term * q / ((k * (n + k)) as f64);
        sum += term;
        if term.norm() < 1e-17 * sum.norm() {
            break;
        }
    }
    lead * sum
}

/// Derivatives `C_n'(z)` for `n = 0..seq.len()-1`, using
/// `C_n' = C_{n-1} - (n/z) C_n` and `C_0' = -C_1`. The last entry needs
/// `C_{nmax+1}`, so the returned vector is one shorter than `seq`.
pub fn derivative_seq(seq: &[Complex64], z: Complex64) -> Vec<Complex64> {
    let mut out = Vec::with_capacity(seq.len().saturating_sub(1));
    for n in 0..seq.len().saturating_sub(1) {
        out.push(if n == 0 { -seq[1] } else { seq[n - 1] - seq[n] * (n as f64) / z });
    }
    out
}

/// `int_0^X H^(1)_0(x) x dx = X H^(1)_1(X) + 2i/pi`, evaluated without the
/// small-`X` cancellation between the two terms.
pub fn int_x_hankel0(x: Complex64) -> Complex64 {
    if x.norm() == 0.0 {
        return Complex64::default();
    }
    if x.norm() > SWITCH {
        let (_, h1) = hankel1_01(x);
        return x * h1 + I * FRAC_2_PI;
    }
    // X Y1(X) + 2/pi = (2/pi) X ln(X/2) J1(X) - (X^2/(2 pi)) sum_k (psi(k+1)+psi(k+2)) q^k/(k!(k+1)!)
    let (_, j1, _, _) = series01(x);
    let q = -x * x * 0.25;
    let mut psi0 = -EULER_GAMMA;
    let mut psi1 = 1.0 - EULER_GAMMA;
    let mut t = Complex64::new(1.0, 0.0);
    let mut s = Complex64::default();
    for k in 0..200 {
        s += t * (psi0 + psi1);
        if k > 2 && t.norm() < 1e-17 * s.norm() {
            break;
        }
        let kf = (k + 1) as f64;
        t = t * q / (kf * (kf + 1.0));
        psi0 += 1.0 / kf;
        psi1 += 1.0 / (kf + 1.0);
    }
    let xy1 = FRAC_2_PI * x * (x * 0.5).ln() * j1 - x * x * s / (2.0 * PI);
    x * j1 + I * xy1
}
