//! Deterministic sampling utilities: a low-discrepancy Kronecker sequence
//! (the generalized-golden-ratio R_d recurrence), a splittable 64-bit PRNG
//! for seeded sweeps, the inverse normal CDF used to map either of them onto
//! spheres, and a bracketing scalar root finder for ray shooting.

use crate::Real;

/// Low-discrepancy points in [0,1)^d via the additive recurrence
/// x_k = frac(k * alpha), alpha_j = phi_d^-(j+1), with phi_d the positive
/// root of x^(d+1) = x + 1.
#[derive(Debug, Clone)]
pub struct QuasiRandom {
    alpha: Vec<f64>,
    state: Vec<f64>,
}

impl QuasiRandom {
    pub fn new(dim: usize) -> Self {
        let mut phi = 1.5f64;
        for _ in 0..64 {
            phi = (1.0 + phi).powf(1.0 / (dim as f64 + 1.0));
        }
        let mut alpha = Vec::with_capacity(dim);
        let mut a = 1.0;
        for _ in 0..dim {
            a /= phi;
            alpha.push(a);
        }
        Self {
            alpha,
            state: vec![0.5; dim],
        }
    }

    pub fn next_point<R: Real>(&mut self) -> Vec<R> {
        for (s, a) in self.state.iter_mut().zip(&self.alpha) {
            *s += a;
            if *s >= 1.0 {
                *s -= 1.0;
            }
        }
        self.state.iter().map(|&u| R::lit(u)).collect()
    }
}

/// Splittable deterministic PRNG (splitmix64). Seeding a child stream with
/// `split(row)` gives independent, reproducible per-row streams.
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9e3779b97f4a7c15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
        z ^ (z >> 31)
    }

    /// Independent child stream for row `index`.
    pub fn split(&self, index: u64) -> Self {
        let mut probe = Self {
            state: self.state ^ index.wrapping_mul(0xd1b54a32d192ed03),
        };
        let s = probe.next_u64();
        Self { state: s }
    }

    /// Uniform in [0, 1).
    pub fn uniform<R: Real>(&mut self) -> R {
        R::lit((self.next_u64() >> 11) as f64 / (1u64 << 53) as f64)
    }

    pub fn uniform_in<R: Real>(&mut self, lo: R, hi: R) -> R {
        lo + (hi - lo) * self.uniform::<R>()
    }

    /// Standard normal via inverse-CDF transform.
    pub fn normal<R: Real>(&mut self) -> R {
        let u = ((self.next_u64() >> 11) as f64 + 0.5) / (1u64 << 53) as f64;
        R::lit(inverse_normal_cdf(u))
    }

    /// Uniform direction on the unit sphere of `dim` components.
    pub fn direction<R: Real>(&mut self, dim: usize) -> Vec<R> {
        loop {
            let v: Vec<R> = (0..dim).map(|_| self.normal()).collect();
            let n = crate::linalg::norm(&v);
            if n > R::lit(1e-8) {
                return crate::linalg::scale(&v, n.recip());
            }
        }
    }
}

/// Acklam's rational approximation of the standard normal quantile
/// (relative error below 1.2e-9; plenty for sampling directions).
pub fn inverse_normal_cdf(p: f64) -> f64 {
    debug_assert!(p > 0.0 && p < 1.0);
    const A: [f64; 6] = [
        -3.969683028665376e+01,
        2.209460984245205e+02,
        -2.759285104469687e+02,
        1.383577518672690e+02,
        -3.066479806614716e+01,
        2.506628277459239e+00,
    ];
    const B: [f64; 5] = [
        -5.447609879822406e+01,
        1.615858368580409e+02,
        -1.556989798598866e+02,
        6.680131188771972e+01,
        -1.328068155288572e+01,
    ];
    const C: [f64; 6] = [
        -7.784894002430293e-03,
        -3.223964580411365e-01,
        -2.400758277161838e+00,
        -2.549732539343734e+00,
        4.374664141464968e+00,
        2.938163982698783e+00,
    ];
    const D: [f64; 4] = [
        7.784695709041462e-03,
        3.224671290700398e-01,
        2.445134137142996e+00,
        3.754408661907416e+00,
    ];
    const P_LOW: f64 = 0.02425;
    if p < P_LOW {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else if p <= 1.0 - P_LOW {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        -inverse_normal_cdf(1.0 - p)
    }
}

/// Maps a low-discrepancy cube point to a direction on the unit sphere by the
/// inverse-normal transform.
pub fn cube_to_direction<R: Real>(u: &[R]) -> Vec<R> {
    let v: Vec<R> = u
        .iter()
        .map(|&ui| {
            let p = ui.to_f64().unwrap().clamp(1e-12, 1.0 - 1e-12);
            R::lit(inverse_normal_cdf(p))
        })
        .collect();
    let n = crate::linalg::norm(&v);
    if n > R::lit(1e-8) {
        crate::linalg::scale(&v, n.recip())
    } else {
        let mut e = vec![R::zero(); u.len()];
        e[0] = R::one();
        e
    }
}

/// Finds the first sign change of `g` on a geometric grid of `[lo, hi]` and
/// refines it by bisection to `tol` in |g|. `g` may return `None` where it is
/// undefined; such panels are skipped.
pub fn bracketed_root<R: Real, G: Fn(R) -> Option<R>>(
    g: &G,
    lo: R,
    hi: R,
    steps: usize,
    tol: R,
) -> Option<R> {
    let ratio = (hi / lo).powf(R::of_usize(steps).recip());
    let mut s_prev = lo;
    let mut g_prev = g(lo)?;
    if g_prev == R::zero() {
        return Some(lo);
    }
    let mut s = lo;
    for _ in 0..steps {
        s = s * ratio;
        let gs = match g(s) {
            Some(v) if v.is_finite() => v,
            _ => {
                s_prev = s;
                g_prev = R::nan();
                continue;
            }
        };
        if g_prev.is_finite() && gs * g_prev < R::zero() {
            // Bisection refinement.
            let (mut a, mut b, mut ga) = (s_prev, s, g_prev);
            for _ in 0..200 {
                let m = R::lit(0.5) * (a + b);
                let gm = g(m)?;
                if gm.abs() < tol {
                    return Some(m);
                }
                if ga * gm < R::zero() {
                    b = m;
                } else {
                    a = m;
                    ga = gm;
                }
                if (b - a).abs() < R::epsilon() * b.abs() {
                    return Some(m);
                }
            }
            return Some(R::lit(0.5) * (a + b));
        }
        if gs == R::zero() {
            return Some(s);
        }
        s_prev = s;
        g_prev = gs;
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quasi_random_stays_in_cube() {
        let mut q = QuasiRandom::new(4);
        for _ in 0..1000 {
            let p: Vec<f64> = q.next_point();
            assert!(p.iter().all(|&u| (0.0..1.0).contains(&u)));
        }
    }

    #[test]
    fn quasi_random_is_roughly_uniform() {
        let mut q = QuasiRandom::new(2);
        let n = 4096;
        let mean: f64 = (0..n)
            .map(|_| q.next_point::<f64>()[0])
            .sum::<f64>()
            / n as f64;
        assert!((mean - 0.5).abs() < 0.01);
    }

    #[test]
    fn inverse_normal_matches_known_quantiles() {
        assert!(inverse_normal_cdf(0.5).abs() < 1e-9);
        assert!((inverse_normal_cdf(0.975) - 1.959963984540054).abs() < 1e-7);
        assert!((inverse_normal_cdf(0.025) + 1.959963984540054).abs() < 1e-7);
    }

    #[test]
    fn directions_are_unit() {
        let mut q = QuasiRandom::new(3);
        for _ in 0..100 {
            let d = cube_to_direction::<f64>(&q.next_point());
            assert!((crate::linalg::norm(&d) - 1.0).abs() < 1e-12);
        }
        let mut rng = SplitMix64::new(7);
        for _ in 0..100 {
            let d = rng.direction::<f64>(5);
            assert!((crate::linalg::norm(&d) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn splitmix_rows_are_reproducible() {
        let root = SplitMix64::new(42);
        let a: Vec<u64> = {
            let mut r = root.split(3);
            (0..4).map(|_| r.next_u64()).collect()
        };
        let b: Vec<u64> = {
            let mut r = root.split(3);
            (0..4).map(|_| r.next_u64()).collect()
        };
        assert_eq!(a, b);
        let mut other = root.split(4);
        assert_ne!(a[0], other.next_u64());
    }

    #[test]
    fn bracketed_root_finds_sphere_crossing() {
        // g(s) = s^2 - 2 has root sqrt(2).
        let g = |s: f64| Some(s * s - 2.0);
        let r = bracketed_root(&g, 1e-3, 64.0, 200, 1e-13).unwrap();
        assert!((r - 2.0f64.sqrt()).abs() < 1e-10);
    }

    #[test]
    fn bracketed_root_none_without_crossing() {
        let g = |s: f64| Some(s * s + 1.0);
        assert!(bracketed_root(&g, 1e-3, 64.0, 100, 1e-12).is_none());
    }
}
