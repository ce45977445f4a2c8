//! The natural basis of observables. For a quantum site of dimension `d` it is the
//! matrix units `E_ij` with index `i*d + j`; for a classical site with `d` states it is
//! the indicator functions. Several sites are ordered site-major, first site most significant.

use crate::dense::{self, CMatrix, CVector, ONE};

/// Mixed-radix digits of `index`, most significant first.
pub(crate) fn digits(mut index: usize, radices: &[usize]) -> Vec<usize> {
    let mut out = vec![0; radices.len()];
    for (k, &r) in radices.iter().enumerate().rev() {
        out[k] = index % r;
        index /= r;
    }
    out
}

pub(crate) fn undigits(ds: &[usize], radices: &[usize]) -> usize {
    ds.iter().zip(radices).fold(0, |acc, (&d, &r)| acc * r + d)
}

/// Natural index of the joint matrix unit `E_IJ` on sites of Hilbert dimensions `dims`.
pub(crate) fn pair_index(dims: &[usize], i: usize, j: usize) -> usize {
    let di = digits(i, dims);
    let dj = digits(j, dims);
    let radices: Vec<usize> = dims.iter().map(|d| d * d).collect();
    let pairs: Vec<usize> = di.iter().zip(&dj).zip(dims).map(|((a, b), d)| a * d + b).collect();
    undigits(&pairs, &radices)
}

/// Natural coefficients of the joint observable `a`.
pub(crate) fn to_natural(dims: &[usize], a: &CMatrix) -> CVector {
    let n: usize = dims.iter().product();
    let mut v = CVector::zeros(n * n);
    for i in 0..n {
        for j in 0..n {
            v[pair_index(dims, i, j)] = a[(i, j)];
        }
    }
    v
}

/// Joint observable with natural coefficients `v`.
pub(crate) fn from_natural(dims: &[usize], v: &CVector) -> CMatrix {
    let n: usize = dims.iter().product();
    CMatrix::from_fn(n, n, |i, j| v[pair_index(dims, i, j)])
}

/// Matrix of a linear map on joint observables in the natural basis.
pub(crate) fn superoperator(dims: &[usize], f: impl Fn(&CMatrix) -> CMatrix) -> CMatrix {
    let n: usize = dims.iter().product();
    let mut m = CMatrix::zeros(n * n, n * n);
    for i in 0..n {
        for j in 0..n {
            let mut unit = CMatrix::zeros(n, n);
            unit[(i, j)] = ONE;
            let col = to_natural(dims, &f(&unit));
            m.set_column(pair_index(dims, i, j), &col);
        }
    }
    m
}

/// Heisenberg-picture Lindblad generator
/// `l(A) = i[H, A] + sum_k gamma_k (L_k* A L_k - {L_k* L_k, A}/2)` on sites of dimensions `dims`.
pub fn lindblad_superoperator(dims: &[usize], h: &CMatrix, jumps: &[(f64, CMatrix)]) -> CMatrix {
    superoperator(dims, |a| {
        let mut out = dense::commutator(h, a) * dense::I;
        for (gamma, l) in jumps {
            let ld = l.adjoint();
            let ll = &ld * l;
            out += (&ld * a * l - (&ll * a + a * &ll) * dense::r(0.5)) * dense::r(*gamma);
        }
        out
    })
}

/// Left multiplication `X -> A X` on joint observables.
pub(crate) fn left_multiplication(dims: &[usize], a: &CMatrix) -> CMatrix {
    superoperator(dims, |x| a * x)
}

/// Natural coefficients of the identity observable.
pub(crate) fn identity_natural(dims: &[usize], classical: bool) -> CVector {
    if classical {
        CVector::from_element(dims.iter().product(), ONE)
    } else {
        let n: usize = dims.iter().product();
        to_natural(dims, &dense::identity(n))
    }
}

/// Embeds `m`, acting on the factors `sites` (ascending) of a tensor product with factor
/// dimensions `dims`, into the full product.
pub fn embed(dims: &[usize], sites: &[usize], m: &CMatrix) -> CMatrix {
    let total: usize = dims.iter().product();
    let local: Vec<usize> = sites.iter().map(|&x| dims[x]).collect();
    let mut out = CMatrix::zeros(total, total);
    for col in 0..total {
        let cd = digits(col, dims);
        let lc = undigits(&sites.iter().map(|&x| cd[x]).collect::<Vec<_>>(), &local);
        for lr in 0..m.nrows() {
            let z = m[(lr, lc)];
            if z == dense::ZERO {
                continue;
            }
            let mut rd = cd.clone();
            for (k, d) in digits(lr, &local).into_iter().enumerate() {
                rd[sites[k]] = d;
            }
            out[(undigits(&rd, dims), col)] += z;
        }
    }
    out
}
