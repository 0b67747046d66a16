//! Small fixed-size complex matrix helpers for two-qubit states.

use num_complex::Complex;

use crate::scalar::Real;

pub(crate) type Mat2<T> = [[Complex<T>; 2]; 2];
pub(crate) type Mat4<T> = [[Complex<T>; 4]; 4];

pub(crate) fn zero4<T: Real>() -> Mat4<T> {
    [[Complex::new(T::zero(), T::zero()); 4]; 4]
}

pub(crate) fn mul4<T: Real>(a: &Mat4<T>, b: &Mat4<T>) -> Mat4<T> {
    let mut out = zero4();
    for i in 0..4 {
        for j in 0..4 {
            let mut acc = Complex::new(T::zero(), T::zero());
            for k in 0..4 {
                acc = acc + a[i][k] * b[k][j];
            }
            out[i][j] = acc;
        }
    }
    out
}

pub(crate) fn adjoint4<T: Real>(a: &Mat4<T>) -> Mat4<T> {
    let mut out = zero4();
    for i in 0..4 {
        for j in 0..4 {
            out[i][j] = a[j][i].conj();
        }
    }
    out
}

pub(crate) fn mul2<T: Real>(a: &Mat2<T>, b: &Mat2<T>) -> Mat2<T> {
    let z = Complex::new(T::zero(), T::zero());
    let mut out = [[z; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    out
}

pub(crate) fn adjoint2<T: Real>(a: &Mat2<T>) -> Mat2<T> {
    [
        [a[0][0].conj(), a[1][0].conj()],
        [a[0][1].conj(), a[1][1].conj()],
    ]
}

/// Kronecker product over the ordered basis (HH, HV, VH, VV).
pub(crate) fn kron<T: Real>(a: &Mat2<T>, b: &Mat2<T>) -> Mat4<T> {
    let mut out = zero4();
    for i in 0..2 {
        for j in 0..2 {
            for k in 0..2 {
                for l in 0..2 {
                    out[2 * i + k][2 * j + l] = a[i][j] * b[k][l];
                }
            }
        }
    }
    out
}

pub(crate) fn trace4<T: Real>(a: &Mat4<T>) -> Complex<T> {
    (0..4).fold(Complex::new(T::zero(), T::zero()), |acc, i| acc + a[i][i])
}

/// Largest elementwise modulus of `a - a†`.
pub(crate) fn hermiticity_defect<T: Real>(a: &Mat4<T>) -> T {
    let mut worst = T::zero();
    for i in 0..4 {
        for j in 0..4 {
            worst = worst.max((a[i][j] - a[j][i].conj()).norm());
        }
    }
    worst
}

/// Eigenvalues of a Hermitian 4×4 matrix, ascending.
///
/// Uses the real symmetric embedding `[[Re, -Im], [Im, Re]]`, whose spectrum is
/// the Hermitian spectrum with every eigenvalue doubled, and diagonalizes it by
/// cyclic Jacobi rotations.
pub(crate) fn hermitian_eigenvalues<T: Real>(a: &Mat4<T>) -> [T; 4] {
    let mut s = [[T::zero(); 8]; 8];
    for i in 0..4 {
        for j in 0..4 {
            let z = a[i][j];
            s[i][j] = z.re;
            s[i + 4][j + 4] = z.re;
            s[i][j + 4] = -z.im;
            s[i + 4][j] = z.im;
        }
    }
    let mut eig = symmetric_eigenvalues(s);
    eig.sort_by(|x, y| x.partial_cmp(y).expect("finite eigenvalues"));
    [eig[0], eig[2], eig[4], eig[6]]
}

fn symmetric_eigenvalues<T: Real, const N: usize>(mut a: [[T; N]; N]) -> [T; N] {
    let two = T::lit(2.0);
    for _sweep in 0..64 {
        let mut off = T::zero();
        for (i, row) in a.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                if i != j {
                    off += *v * *v;
                }
            }
        }
        if off <= T::epsilon() * T::epsilon() {
            break;
        }
        for p in 0..N {
            for q in (p + 1)..N {
                let apq = a[p][q];
                if apq.abs() <= T::min_positive_value() {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (two * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt());
                let c = T::one() / (t * t + T::one()).sqrt();
                let s = t * c;
                for row in a.iter_mut() {
                    let (kp, kq) = (row[p], row[q]);
                    row[p] = c * kp - s * kq;
                    row[q] = s * kp + c * kq;
                }
                for k in 0..N {
                    let (pk, qk) = (a[p][k], a[q][k]);
                    a[p][k] = c * pk - s * qk;
                    a[q][k] = s * pk + c * qk;
                }
            }
        }
    }
    let mut out = [T::zero(); N];
    for (i, v) in out.iter_mut().enumerate() {
        *v = a[i][i];
    }
    out
}
