//! Imaginary-frequency evaluation of the ring resummation: the
//! irreducible polarizability in the reduced pair basis, the
//! log-determinant correlation energy, and the order-by-order ring
//! contributions used as a diagrammatic oracle.

use nalgebra::DMatrix;
use thiserror::Error;

use crate::linalg;
use crate::manifold::ExcitationManifold;
use crate::partition::InteractionKernel;
use crate::scalar::Scalar;

#[derive(Debug, Error)]
pub enum QuadratureError {
    #[error("{0}")]
    Usage(String),
    #[error("det(I - VΠ) ≤ 0 at node {node} (ω = {omega:e}); ring resummation unstable")]
    Instability { node: usize, omega: f64 },
}

/// Positive imaginary-frequency nodes with quadrature weights.
#[derive(Debug, Clone)]
pub struct FrequencyGrid<T> {
    pub nodes: Vec<T>,
    pub weights: Vec<T>,
}

impl<T: Scalar> FrequencyGrid<T> {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

/// Gauss–Legendre nodes and weights on (-1, 1), ascending.
pub fn gauss_legendre<T: Scalar>(n: usize) -> (Vec<T>, Vec<T>) {
    let mut nodes = vec![T::zero(); n];
    let mut weights = vec![T::zero(); n];
    let nf = T::from_count(n);
    for k in 0..n {
        // Newton on P_n from the classic cosine initial guess.
        let guess = (T::pi() * (T::from_count(k + 1) - T::cast(0.25)) / (nf + T::cast(0.5))).cos();
        let mut x = guess;
        for _ in 0..100 {
            let (pn, pn1) = legendre_pair(n, x);
            let dp = nf * (x * pn - pn1) / (x * x - T::one());
            let dx = pn / dp;
            x -= dx;
            if dx.abs() < T::cast(1e-16) {
                break;
            }
        }
        let (pn, pn1) = legendre_pair(n, x);
        let dp = nf * (x * pn - pn1) / (x * x - T::one());
        // descending in k; store ascending
        nodes[n - 1 - k] = x;
        weights[n - 1 - k] = T::cast(2.0) / ((T::one() - x * x) * dp * dp);
    }
    (nodes, weights)
}

/// (P_n(x), P_{n-1}(x)) by the three-term recurrence.
fn legendre_pair<T: Scalar>(n: usize, x: T) -> (T, T) {
    let mut p0 = T::one();
    let mut p1 = x;
    if n == 0 {
        return (p0, T::zero());
    }
    for k in 2..=n {
        let kf = T::from_count(k);
        let p2 = ((T::cast(2.0) * kf - T::one()) * x * p1 - (kf - T::one()) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    (p1, p0)
}

/// Gauss–Legendre nodes on (0,1) mapped by ω = scale·x/(1−x), weights
/// folded with the Jacobian scale/(1−x)².
pub fn make_grid<T: Scalar>(n_nodes: usize, scale: T) -> Result<FrequencyGrid<T>, QuadratureError> {
    if n_nodes < 4 {
        return Err(QuadratureError::Usage(format!(
            "grid needs at least 4 nodes, got {n_nodes}"
        )));
    }
    if scale <= T::zero() {
        return Err(QuadratureError::Usage(format!(
            "grid scale must be positive, got {scale}"
        )));
    }
    let (xs, ws) = gauss_legendre::<T>(n_nodes);
    let half = T::cast(0.5);
    let mut nodes = Vec::with_capacity(n_nodes);
    let mut weights = Vec::with_capacity(n_nodes);
    for (x, w) in xs.into_iter().zip(ws) {
        let u = half * (x + T::one());
        let wu = half * w;
        let denom = T::one() - u;
        nodes.push(scale * u / denom);
        weights.push(wu * scale / (denom * denom));
    }
    Ok(FrequencyGrid { nodes, weights })
}

/// Default 64-node grid with the scale set to the median excitation
/// energy of the manifold.
pub fn default_grid<T: Scalar>(
    man: &ExcitationManifold<T>,
) -> Result<FrequencyGrid<T>, QuadratureError> {
    grid_for(man, 64, None)
}

/// Grid with explicit node count; `scale = None` auto-sets the median ω.
pub fn grid_for<T: Scalar>(
    man: &ExcitationManifold<T>,
    n_nodes: usize,
    scale: Option<T>,
) -> Result<FrequencyGrid<T>, QuadratureError> {
    let scale = scale.or_else(|| man.median_omega()).unwrap_or_else(T::one);
    make_grid(n_nodes, scale)
}

/// Π(iω) = −Σ_N 2ω_N/(ω²+ω_N²) d_N d_Nᵀ in the pair basis; exactly
/// symmetric by construction.
pub fn polarizability<T: Scalar>(man: &ExcitationManifold<T>, omega: T) -> DMatrix<T> {
    let m = man.pair_index.len();
    let mut pi = DMatrix::zeros(m, m);
    let two = T::cast(2.0);
    let mut embedded: Vec<(usize, T)> = Vec::new();
    for st in &man.states {
        let g = two * st.omega / (omega * omega + st.omega * st.omega);
        embedded.clear();
        for &(p, r, v) in &st.d {
            let col = man
                .pair_index
                .of(p, r)
                .expect("every density pair is registered");
            embedded.push((col, v));
        }
        for &(i, vi) in &embedded {
            for &(j, vj) in &embedded {
                pi[(i, j)] -= g * vi * vj;
            }
        }
    }
    pi
}

/// The m×m coupling kernel in the pair basis: V[(p,r),(q,s)] = v_{pr,qs}.
pub fn kernel_matrix<T: Scalar, K: InteractionKernel<T>>(
    man: &ExcitationManifold<T>,
    kernel: &K,
) -> DMatrix<T> {
    let m = man.pair_index.len();
    DMatrix::from_fn(m, m, |i, j| {
        let (p, r) = man.pair_index.pair(i);
        let (q, s) = man.pair_index.pair(j);
        kernel.two_body(p, r, q, s)
    })
}

/// Resummed ring energy by quadrature:
/// ΔE = (1/2π)·2·Σ_k w_k · ½ [ln det(I − VΠ(iω_k)) + tr(VΠ(iω_k))],
/// the factor 2 from the even integrand.
pub fn rpa_energy_quadrature<T: Scalar, K: InteractionKernel<T>>(
    man: &ExcitationManifold<T>,
    kernel: &K,
    grid: &FrequencyGrid<T>,
) -> Result<T, QuadratureError> {
    let m = man.pair_index.len();
    if m == 0 {
        return Ok(T::zero());
    }
    let v = kernel_matrix(man, kernel);
    let half = T::cast(0.5);
    let mut acc = T::zero();
    for (k, (&omega, &w)) in grid.nodes.iter().zip(&grid.weights).enumerate() {
        let vpi = &v * polarizability(man, omega);
        let mut resolvent = -vpi.clone();
        for i in 0..m {
            resolvent[(i, i)] += T::one();
        }
        let (sign, log_abs) = linalg::sign_log_det(&resolvent);
        if sign <= 0 {
            return Err(QuadratureError::Instability {
                node: k,
                omega: omega.as_f64(),
            });
        }
        acc += w * half * (log_abs + vpi.trace());
    }
    Ok(acc / T::pi())
}

/// Order-n ring contribution
/// ΔE_n = −(1/2n)·(1/2π)·∫ tr([VΠ(iω)]ⁿ) dω, same grid and symmetry.
pub fn ring_order_n<T: Scalar, K: InteractionKernel<T>>(
    man: &ExcitationManifold<T>,
    kernel: &K,
    order: u32,
    grid: &FrequencyGrid<T>,
) -> Result<T, QuadratureError> {
    if order < 2 {
        return Err(QuadratureError::Usage(format!(
            "ring orders start at 2, got {order}"
        )));
    }
    let m = man.pair_index.len();
    if m == 0 {
        return Ok(T::zero());
    }
    let v = kernel_matrix(man, kernel);
    let mut acc = T::zero();
    for (&omega, &w) in grid.nodes.iter().zip(&grid.weights) {
        let vpi = &v * polarizability(man, omega);
        let mut power = vpi.clone();
        for _ in 1..order {
            power *= &vpi;
        }
        acc += w * power.trace();
    }
    Ok(-acc / (T::cast(2.0 * order as f64) * T::pi()))
}
