//! Small helpers over `&[f64]` d-vectors.

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[inline]
pub fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

#[inline]
pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    dist2(a, b).sqrt()
}

/// `y += alpha * x`
#[inline]
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// Mean of `n` row vectors of length `dim` stored contiguously.
pub fn mean_rows(data: &[f64], dim: usize) -> Vec<f64> {
    let n = data.len() / dim;
    let mut m = vec![0.0; dim];
    for row in data.chunks_exact(dim) {
        for (mk, xk) in m.iter_mut().zip(row) {
            *mk += xk;
        }
    }
    if n > 0 {
        for mk in &mut m {
            *mk /= n as f64;
        }
    }
    m
}

/// Largest Euclidean norm of a row in a flat row-major array.
pub fn max_row_norm(data: &[f64], dim: usize) -> f64 {
    data.chunks_exact(dim).map(norm).fold(0.0, f64::max)
}
