//! Finite-difference weights (Fornberg) and 4th-order derivative operators
//! on uniform grids.

use num_complex::Complex64;

use super::VerifyError;

/// Fornberg's algorithm: weights for the `m`-th derivative at `x0` using the
/// given nodes.
pub fn fornberg_weights(x0: f64, nodes: &[f64], m: usize) -> Vec<f64> {
    let n = nodes.len();
    let mut c = vec![vec![0.0; m + 1]; n];
    c[0][0] = 1.0;
    let mut c1 = 1.0;
    let mut c4 = nodes[0] - x0;
    for i in 1..n {
        let mn = i.min(m);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = nodes[i] - x0;
        for j in 0..i {
            let c3 = nodes[i] - nodes[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[i][k] = c1 * (k as f64 * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
                }
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for k in (1..=mn).rev() {
                c[j][k] = (c4 * c[j][k] - k as f64 * c[j][k - 1]) / c3;
            }
            c[j][0] = c4 * c[j][0] / c3;
        }
        c1 = c2;
    }
    c.into_iter().map(|row| row[m]).collect()
}

/// Half-width of the centred 4th-order stencil for derivative `order`.
pub fn central_half_width(order: usize) -> usize {
    (order + 1) / 2 + 1
}

/// Weights (unit spacing) for one derivative order: the centred stencil for
/// the interior, and `order + 4`-point off-centre stencils near the edges.
#[derive(Debug, Clone)]
pub struct DerivativeStencil {
    pub order: usize,
    pub half_width: usize,
    pub central: Vec<f64>,
    /// `edge[i]` are weights over nodes `0..order+4` for node `i < half_width`.
    pub edge: Vec<Vec<f64>>,
}

impl DerivativeStencil {
    pub fn new(order: usize) -> Self {
        let r = central_half_width(order);
        let nodes: Vec<f64> = (-(r as i64)..=r as i64).map(|k| k as f64).collect();
        let mut central = fornberg_weights(0.0, &nodes, order);
        let sign = if order % 2 == 1 { -1.0 } else { 1.0 };
        for k in 1..=r {
            let w = 0.5 * (central[r + k] + sign * central[r - k]);
            central[r + k] = w;
            central[r - k] = sign * w;
        }
        let width = order + 4;
        let edge_nodes: Vec<f64> = (0..width).map(|k| k as f64).collect();
        let edge = (0..r).map(|i| fornberg_weights(i as f64, &edge_nodes, order)).collect();
        Self { order, half_width: r, central, edge }
    }

    pub fn min_points(&self) -> usize {
        self.order + 4
    }

    /// Applies the stencil along a strided line of `n` values.
    pub fn apply_line(
        &self,
        n: usize,
        get: impl Fn(usize) -> Complex64,
        h: f64,
        mut put: impl FnMut(usize, Complex64),
    ) {
        let r = self.half_width;
        let scale = h.powi(self.order as i32).recip();
        // written as Σ w_k (f_k − f_i) so constants differentiate to exactly zero
        for i in 0..n {
            let fi = get(i);
            let v: Complex64 = if i < r {
                self.edge[i].iter().enumerate().map(|(k, w)| (get(k) - fi) * *w).sum()
            } else if i + r >= n {
                // mirrored left-edge stencil; odd derivatives flip sign
                let sign = if self.order % 2 == 1 { -1.0 } else { 1.0 };
                sign * self.edge[n - 1 - i]
                    .iter()
                    .enumerate()
                    .map(|(k, w)| (get(n - 1 - k) - fi) * *w)
                    .sum::<Complex64>()
            } else if self.order % 2 == 1 {
                (1..=r).map(|k| (get(i + k) - get(i - k)) * self.central[r + k]).sum()
            } else {
                (1..=r).map(|k| (get(i + k) + get(i - k) - 2.0 * fi) * self.central[r + k]).sum()
            };
            put(i, v * scale);
        }
    }
}

/// `d^order/dx^order` of a 1-D array.
pub fn derivative_1d(values: &[Complex64], h: f64, order: usize) -> Result<Vec<Complex64>, VerifyError> {
    check_order(order)?;
    let st = DerivativeStencil::new(order);
    if values.len() < st.min_points() {
        return Err(VerifyError::GridTooSmall { points: values.len(), needed: st.min_points() });
    }
    let mut out = vec![Complex64::new(0.0, 0.0); values.len()];
    st.apply_line(values.len(), |k| values[k], h, |i, v| out[i] = v);
    Ok(out)
}

fn check_order(order: usize) -> Result<(), VerifyError> {
    if !(1..=5).contains(&order) {
        return Err(VerifyError::UnsupportedOrder(order));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    X,
    T,
}

/// Derivative of a `t`-outer, `x`-inner array of shape `(nt, nx)`.
pub fn derivative_2d(
    values: &[Complex64],
    nx: usize,
    nt: usize,
    h: f64,
    axis: Axis,
    order: usize,
) -> Result<Vec<Complex64>, VerifyError> {
    check_order(order)?;
    let st = DerivativeStencil::new(order);
    let n = match axis {
        Axis::X => nx,
        Axis::T => nt,
    };
    if n < st.min_points() {
        return Err(VerifyError::GridTooSmall { points: n, needed: st.min_points() });
    }
    let mut out = vec![Complex64::new(0.0, 0.0); values.len()];
    match axis {
        Axis::X => {
            for j in 0..nt {
                let row = &values[j * nx..(j + 1) * nx];
                let dst = &mut out[j * nx..(j + 1) * nx];
                st.apply_line(nx, |k| row[k], h, |i, v| dst[i] = v);
            }
        }
        Axis::T => {
            for i in 0..nx {
                st.apply_line(nt, |k| values[k * nx + i], h, |j, v| out[j * nx + i] = v);
            }
        }
    }
    Ok(out)
}
