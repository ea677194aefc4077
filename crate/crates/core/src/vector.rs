//! Small dense-vector helpers on `&[f64]`.

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

#[inline]
pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

pub fn scale(a: &[f64], s: f64) -> Vec<f64> {
    a.iter().map(|x| x * s).collect()
}

/// `a + s * b`
pub fn axpy(a: &[f64], s: f64, b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + s * y).collect()
}

pub fn midpoint(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| 0.5 * (x + y)).collect()
}

/// Orthonormal basis of the complement of the unit vector `u` (Gram-Schmidt
/// against the standard basis).
pub fn orthonormal_complement(u: &[f64]) -> Vec<Vec<f64>> {
    let d = u.len();
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(d.saturating_sub(1));
    let mut axes: Vec<usize> = (0..d).collect();
    // Start from the axes least aligned with u for numerical stability.
    axes.sort_by(|&a, &b| u[a].abs().total_cmp(&u[b].abs()));
    for axis in axes {
        if basis.len() + 1 == d {
            break;
        }
        let mut e = vec![0.0; d];
        e[axis] = 1.0;
        let p = dot(&e, u);
        let mut w = axpy(&e, -p, u);
        for b in &basis {
            let q = dot(&w, b);
            w = axpy(&w, -q, b);
        }
        let n = norm(&w);
        if n > 1e-10 {
            basis.push(scale(&w, 1.0 / n));
        }
    }
    basis
}

/// Volume of the unit ball in `d` dimensions.
pub fn unit_ball_volume(d: usize) -> f64 {
    // V_0 = 1, V_1 = 2, V_d = 2 pi / d * V_{d-2}
    let mut v = if d % 2 == 0 { 1.0 } else { 2.0 };
    let mut k = if d % 2 == 0 { 2 } else { 3 };
    while k <= d {
        v *= 2.0 * std::f64::consts::PI / k as f64;
        k += 2;
    }
    v
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ball_volumes() {
        assert_eq!(unit_ball_volume(1), 2.0);
        assert!((unit_ball_volume(2) - std::f64::consts::PI).abs() < 1e-15);
        assert!((unit_ball_volume(3) - 4.0 / 3.0 * std::f64::consts::PI).abs() < 1e-14);
        assert!((unit_ball_volume(4) - std::f64::consts::PI.powi(2) / 2.0).abs() < 1e-14);
    }

    #[test]
    fn complement_is_orthonormal() {
        let u = {
            let v = [0.3, -1.2, 0.7, 2.0];
            scale(&v, 1.0 / norm(&v))
        };
        let basis = orthonormal_complement(&u);
        assert_eq!(basis.len(), 3);
        for (i, a) in basis.iter().enumerate() {
            assert!(dot(a, &u).abs() < 1e-12);
            for (j, b) in basis.iter().enumerate() {
                let expected = if i == j { 1.0 } else { 0.0 };
                assert!((dot(a, b) - expected).abs() < 1e-12);
            }
        }
    }
}
