//! Seeded random Hermitian matrices with prescribed spectra.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::hermitian::{CMatrix, CVector, HermitianMatrix, C64};

/// Deterministic stream `stream` derived from `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn gaussian_c64<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Haar-distributed unitary: QR of a complex Gaussian matrix with the phases
/// of `diag(R)` moved into `Q`.
pub fn haar_unitary<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> CMatrix {
    let g = CMatrix::from_fn(dim, dim, |_, _| gaussian_c64(rng));
    let qr = g.qr();
    let (mut q, r) = (qr.q(), qr.r());
    for k in 0..dim {
        let d = r[(k, k)];
        let phase = if d.norm() > 0.0 {
            d / d.norm()
        } else {
            C64::new(1.0, 0.0)
        };
        for z in q.column_mut(k).iter_mut() {
            *z *= phase;
        }
    }
    q
}

/// Uniform random unit vector in `ℂ^dim`.
pub fn unit_vector<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> CVector {
    loop {
        let v = CVector::from_fn(dim, |_, _| gaussian_c64(rng));
        let n = v.norm();
        if n > 1e-8 {
            return v / C64::new(n, 0.0);
        }
    }
}

/// `V diag(spectrum) V*` with Haar `V`.
pub fn with_spectrum<R: Rng + ?Sized>(spectrum: &[f64], rng: &mut R) -> HermitianMatrix {
    let n = spectrum.len();
    let v = haar_unitary(n, rng);
    let mut scaled = v.clone();
    for (k, &x) in spectrum.iter().enumerate() {
        scaled.column_mut(k).scale_mut(x);
    }
    HermitianMatrix::symmetrized(&(scaled * v.adjoint()))
}

/// Spectrum drawn uniformly from `[lo, hi]`.
pub fn uniform_spectrum<R: Rng + ?Sized>(dim: usize, lo: f64, hi: f64, rng: &mut R) -> Vec<f64> {
    (0..dim)
        .map(|_| lo + (hi - lo) * rng.random::<f64>())
        .collect()
}

/// Random Hermitian matrix with eigenvalues uniform in `[lo, hi]`.
pub fn hermitian_in_box<R: Rng + ?Sized>(
    dim: usize,
    lo: f64,
    hi: f64,
    rng: &mut R,
) -> HermitianMatrix {
    let spectrum = uniform_spectrum(dim, lo, hi, rng);
    with_spectrum(&spectrum, rng)
}

/// Random matrix with i.i.d. complex Gaussian entries (not Hermitian).
pub fn gaussian_matrix<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| gaussian_c64(rng))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hermitian::op_norm;

    #[test]
    fn haar_is_unitary() {
        let mut rng = stream_rng(7, 0);
        for dim in 1..7 {
            let u = haar_unitary(dim, &mut rng);
            let e = op_norm(&(u.adjoint() * &u - CMatrix::identity(dim, dim)));
            assert!(e < 1e-13, "dim {dim}: {e}");
        }
    }

    #[test]
    fn prescribed_spectrum_is_recovered() {
        let mut rng = stream_rng(1, 3);
        let spec = [0.5, 2.0, 2.0, 9.5];
        let m = with_spectrum(&spec, &mut rng);
        let ev = m.eigenvalues().unwrap();
        for (a, b) in ev.iter().zip(spec.iter()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn streams_are_deterministic_and_distinct() {
        let a = hermitian_in_box(3, 0.0, 1.0, &mut stream_rng(5, 1));
        let b = hermitian_in_box(3, 0.0, 1.0, &mut stream_rng(5, 1));
        let c = hermitian_in_box(3, 0.0, 1.0, &mut stream_rng(5, 2));
        assert_eq!(a, b);
        assert_ne!(a, c);
    }
}
