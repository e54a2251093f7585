//! Manufactured exact solutions `y_e(x, t) = w_e(x) sin(2 pi t)` with quartic
//! `w_e`, the data they induce, and the variance functional along them.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::decomposition::{BatchFamily, SubgraphPartition};
use crate::error::{Error, Result};
use crate::fem::{l2_error_sq, CoefficientSet, DofMap};
use crate::graph::{EdgeId, MetricGraph, VertexId};
use crate::quadrature::gauss_legendre;

/// Quartic coefficients of the demo graph, edges `e1..e10`.
pub const DEMO_ALPHA: [f64; 10] = [10.0, -3.0, 5.0, 4.0, 4.0, 10.0, -3.0, 5.0, -3.0, 4.0];
/// Cubic coefficients of the demo graph, edges `e1..e10`.
pub const DEMO_BETA: [f64; 10] = [-12.0, 1.0, -7.0, -6.0, -6.0, -12.0, 1.0, -7.0, 1.0, -6.0];

/// Tolerance on the least-squares residual of the vertex constraints.
const CONSTRAINT_TOLERANCE: f64 = 1e-8;
/// Elements per edge used to integrate the variance functional.
const LAMBDA_ELEMENTS: usize = 200;

/// Edge-independent coefficients `a`, `a'`, `b`, `p` as functions of the edge
/// coordinate.
#[derive(Debug, Clone, Copy)]
pub struct SpatialCoefficients {
    pub a: fn(f64) -> f64,
    pub da: fn(f64) -> f64,
    pub b: fn(f64) -> f64,
    pub p: fn(f64) -> f64,
}

impl SpatialCoefficients {
    /// `a = x(x-1) + 1/2`, `b = sin(pi x)/2`, `p = sin(pi x)`.
    pub fn standard() -> Self {
        Self {
            a: |x| x * (x - 1.0) + 0.5,
            da: |x| 2.0 * x - 1.0,
            b: |x| (PI * x).sin() / 2.0,
            p: |x| (PI * x).sin(),
        }
    }

    /// Pure diffusion with `a = 1`.
    pub fn unit_diffusion() -> Self {
        Self { a: |_| 1.0, da: |_| 0.0, b: |_| 0.0, p: |_| 0.0 }
    }
}

/// Solves the vertex continuity and Kirchhoff conditions for the lower
/// coefficients `(gamma_e, delta_e, epsilon_e)` given `alpha_e`, `beta_e`.
///
/// The system is underdetermined; the minimum-norm solution is returned.
pub fn solve_lower_coefficients(
    graph: &MetricGraph,
    coeffs: &SpatialCoefficients,
    alpha: &[f64],
    beta: &[f64],
) -> Result<Vec<[f64; 3]>> {
    let m = graph.n_edges();
    if alpha.len() != m || beta.len() != m {
        return Err(Error::DimensionMismatch(format!(
            "{} alpha and {} beta values for {m} edges",
            alpha.len(),
            beta.len()
        )));
    }
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut rhs = Vec::new();
    for v in graph.interior_vertices() {
        let incident = graph.incident_edges(v);
        let at = |e: EdgeId| graph.edge(e).coordinate_of(v).expect("incident edge");
        let anchor = incident[0];
        let xa = at(anchor);
        for &e in &incident[1..] {
            let x = at(e);
            let mut row = vec![0.0; 3 * m];
            row[3 * anchor.0..3 * anchor.0 + 3].copy_from_slice(&[xa * xa, xa, 1.0]);
            for (k, c) in [x * x, x, 1.0].into_iter().enumerate() {
                row[3 * e.0 + k] -= c;
            }
            rows.push(row);
            let high = |e: EdgeId, x: f64| alpha[e.0] * x.powi(4) + beta[e.0] * x.powi(3);
            rhs.push(high(e, x) - high(anchor, xa));
        }
        let mut row = vec![0.0; 3 * m];
        let mut known = 0.0;
        for &e in incident {
            let x = at(e);
            let weight = (coeffs.a)(x) * f64::from(graph.incidence(e, v));
            row[3 * e.0] += weight * 2.0 * x;
            row[3 * e.0 + 1] += weight;
            known += weight * (4.0 * alpha[e.0] * x.powi(3) + 3.0 * beta[e.0] * x * x);
        }
        rows.push(row);
        rhs.push(-known);
    }
    if rows.is_empty() {
        return Ok(vec![[0.0; 3]; m]);
    }
    let matrix = DMatrix::from_fn(rows.len(), 3 * m, |i, j| rows[i][j]);
    let b = DVector::from_vec(rhs);
    let x = matrix
        .clone()
        .svd(true, true)
        .solve(&b, 1e-12)
        .map_err(|msg| Error::Config(format!("least-squares solve failed: {msg}")))?;
    let residual = (&matrix * &x - &b).amax();
    if residual > CONSTRAINT_TOLERANCE {
        return Err(Error::InconsistentConstraints(residual));
    }
    Ok((0..m).map(|e| [x[3 * e], x[3 * e + 1], x[3 * e + 2]]).collect())
}

#[derive(Debug)]
struct Inner {
    graph: MetricGraph,
    coeffs: SpatialCoefficients,
    /// `[alpha, beta, gamma, delta, epsilon]` per edge.
    poly: Vec<[f64; 5]>,
    /// Edge and coordinate through which each vertex is evaluated.
    anchors: Vec<(EdgeId, f64)>,
}

/// A solved manufactured solution on a fixed graph. Cheap to clone.
#[derive(Debug, Clone)]
pub struct ManufacturedSolution {
    inner: Arc<Inner>,
}

impl ManufacturedSolution {
    pub fn new(graph: &MetricGraph, coeffs: SpatialCoefficients, alpha: &[f64], beta: &[f64]) -> Result<Self> {
        let lower = solve_lower_coefficients(graph, &coeffs, alpha, beta)?;
        let poly = (0..graph.n_edges()).map(|e| [alpha[e], beta[e], lower[e][0], lower[e][1], lower[e][2]]).collect();
        Ok(Self::from_polynomials(graph, coeffs, poly))
    }

    /// Uses the given per-edge coefficients as they are.
    pub fn from_polynomials(graph: &MetricGraph, coeffs: SpatialCoefficients, poly: Vec<[f64; 5]>) -> Self {
        let anchors = graph
            .vertex_ids()
            .map(|v| {
                let e = graph.incident_edges(v)[0];
                (e, graph.edge(e).coordinate_of(v).expect("incident edge"))
            })
            .collect();
        Self { inner: Arc::new(Inner { graph: graph.clone(), coeffs, poly, anchors }) }
    }

    /// The demo graph with the standard coefficients and the built-in table.
    pub fn demo(graph: &MetricGraph) -> Result<Self> {
        Self::new(graph, SpatialCoefficients::standard(), &DEMO_ALPHA, &DEMO_BETA)
    }

    pub fn graph(&self) -> &MetricGraph {
        &self.inner.graph
    }

    pub fn coefficients(&self) -> &SpatialCoefficients {
        &self.inner.coeffs
    }

    /// `[alpha, beta, gamma, delta, epsilon]` of edge `e`.
    pub fn polynomial(&self, e: EdgeId) -> [f64; 5] {
        self.inner.poly[e.0]
    }

    pub fn w(&self, e: EdgeId, x: f64) -> f64 {
        let [a, b, c, d, f] = self.inner.poly[e.0];
        (((a * x + b) * x + c) * x + d) * x + f
    }

    pub fn w_dx(&self, e: EdgeId, x: f64) -> f64 {
        let [a, b, c, d, _] = self.inner.poly[e.0];
        ((4.0 * a * x + 3.0 * b) * x + 2.0 * c) * x + d
    }

    pub fn w_dxx(&self, e: EdgeId, x: f64) -> f64 {
        let [a, b, c, _, _] = self.inner.poly[e.0];
        (12.0 * a * x + 6.0 * b) * x + 2.0 * c
    }

    pub fn v(t: f64) -> f64 {
        (2.0 * PI * t).sin()
    }

    pub fn v_dt(t: f64) -> f64 {
        2.0 * PI * (2.0 * PI * t).cos()
    }

    pub fn exact(&self, e: EdgeId, x: f64, t: f64) -> f64 {
        self.w(e, x) * Self::v(t)
    }

    pub fn exact_dx(&self, e: EdgeId, x: f64, t: f64) -> f64 {
        self.w_dx(e, x) * Self::v(t)
    }

    pub fn exact_dxx(&self, e: EdgeId, x: f64, t: f64) -> f64 {
        self.w_dxx(e, x) * Self::v(t)
    }

    pub fn exact_dt(&self, e: EdgeId, x: f64, t: f64) -> f64 {
        self.w(e, x) * Self::v_dt(t)
    }

    /// `a'w' + a w'' - b w' - p w`, so that `f = w v' - R v`.
    fn spatial_residual(&self, e: EdgeId, x: f64) -> f64 {
        let c = &self.inner.coeffs;
        let (w, w1, w2) = (self.w(e, x), self.w_dx(e, x), self.w_dxx(e, x));
        (c.da)(x) * w1 + (c.a)(x) * w2 - (c.b)(x) * w1 - (c.p)(x) * w
    }

    /// `f = y_t - (a y_x)_x + b y_x + p y`.
    pub fn source(&self, e: EdgeId, x: f64, t: f64) -> f64 {
        self.w(e, x) * Self::v_dt(t) - self.spatial_residual(e, x) * Self::v(t)
    }

    pub fn boundary_value(&self, v: VertexId, t: f64) -> f64 {
        let (e, x) = self.inner.anchors[v.0];
        self.exact(e, x, t)
    }

    /// Largest continuity mismatch and Kirchhoff residual of `w` over the
    /// interior vertices.
    pub fn vertex_residuals(&self) -> (f64, f64) {
        let g = &self.inner.graph;
        let mut continuity: f64 = 0.0;
        let mut kirchhoff: f64 = 0.0;
        for v in g.interior_vertices() {
            let values: Vec<(EdgeId, f64)> =
                g.incident_edges(v).iter().map(|&e| (e, g.edge(e).coordinate_of(v).unwrap())).collect();
            let w0 = self.w(values[0].0, values[0].1);
            for &(e, x) in &values[1..] {
                continuity = continuity.max((self.w(e, x) - w0).abs());
            }
            let flux: f64 = values
                .iter()
                .map(|&(e, x)| (self.inner.coeffs.a)(x) * self.w_dx(e, x) * f64::from(g.incidence(e, v)))
                .sum();
            kirchhoff = kirchhoff.max(flux.abs());
        }
        (continuity, kirchhoff)
    }

    /// Coefficients, source, boundary data and initial state induced by the
    /// solution.
    pub fn derive_data(&self) -> CoefficientSet {
        let c = self.inner.coeffs;
        let (f, g, y0) = (self.clone(), self.clone(), self.clone());
        CoefficientSet {
            a: Arc::new(move |_, x| (c.a)(x)),
            b: Arc::new(move |_, x| (c.b)(x)),
            p: Arc::new(move |_, x| (c.p)(x)),
            f: Arc::new(move |e, x, t| f.source(e, x, t)),
            g: Arc::new(move |v, t| g.boundary_value(v, t)),
            y0: Arc::new(move |e, x| y0.exact(e, x, 0.0)),
        }
    }

    /// `||y(t) - u||^2` for a P1 dof vector `u`.
    pub fn l2_error(&self, dofmap: &DofMap, u: &[f64], t: f64) -> f64 {
        l2_error_sq(&self.inner.graph, dofmap, u, |e, x| self.exact(e, x, t))
    }

    /// Per-edge integrals entering the variance functional.
    fn edge_integrals(&self) -> Vec<EdgeIntegrals> {
        let (xs, ws) = gauss_legendre(5);
        let c = &self.inner.coeffs;
        self.inner
            .graph
            .edge_ids()
            .map(|e| {
                let dx = self.inner.graph.edge(e).length / LAMBDA_ELEMENTS as f64;
                let mut acc = EdgeIntegrals::default();
                for k in 0..LAMBDA_ELEMENTS {
                    for (&s, &w) in xs.iter().zip(&ws) {
                        let x = (k as f64 + s) * dx;
                        let wt = w * dx;
                        let (w0, w1, w2) = (self.w(e, x), self.w_dx(e, x), self.w_dxx(e, x));
                        let r = self.spatial_residual(e, x);
                        let diffusion = (c.da)(x) * w1 + (c.a)(x) * w2;
                        acc.operator += wt * (diffusion.powi(2) + ((c.b)(x) * w1).powi(2) + ((c.p)(x) * w0).powi(2));
                        acc.ww += wt * w0 * w0;
                        acc.wr += wt * w0 * r;
                        acc.rr += wt * r * r;
                    }
                }
                acc
            })
            .collect()
    }

    /// The variance functional on `times` with its trapezoidal L1 norm.
    ///
    /// With batch factors `c_e^j` the coefficient mismatch on edge `e` is
    /// `(1 - c_e^j)` times the coefficient, so each term reduces to a fixed
    /// spatial integral times a power of `v(t)` or `v'(t)`.
    pub fn lambda_profile(
        &self,
        partition: &SubgraphPartition,
        family: &BatchFamily,
        times: &[f64],
    ) -> Result<LambdaProfile> {
        let g = &self.inner.graph;
        let integrals = self.edge_integrals();
        // Expected squared mismatch weight per edge: sum_j p_j (1 - c_e^j)^2.
        let mut weight = vec![0.0; g.n_edges()];
        for j in 0..family.len() {
            let zeta = family.zeta(g, partition, j)?;
            for e in g.edge_ids() {
                weight[e.0] += family.probs()[j] * (1.0 - zeta.edge_factor(e)).powi(2);
            }
        }
        let values: Vec<f64> = times
            .iter()
            .map(|&t| {
                let (v, vt) = (Self::v(t), Self::v_dt(t));
                integrals
                    .iter()
                    .zip(&weight)
                    .map(|(i, w)| {
                        let source = vt * vt * i.ww - 2.0 * v * vt * i.wr + v * v * i.rr;
                        w * (i.operator * v * v + source.max(0.0))
                    })
                    .sum()
            })
            .collect();
        let l1 = times.windows(2).zip(values.windows(2)).map(|(t, y)| 0.5 * (t[1] - t[0]) * (y[0] + y[1])).sum();
        Ok(LambdaProfile { times: times.to_vec(), values, l1 })
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct EdgeIntegrals {
    /// `||a'w' + a w''||^2 + ||b w'||^2 + ||p w||^2`.
    operator: f64,
    ww: f64,
    wr: f64,
    rr: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LambdaProfile {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub l1: f64,
}

/// `n + 1` equispaced times on `[0, t_final]`.
pub fn uniform_times(t_final: f64, n: usize) -> Vec<f64> {
    (0..=n).map(|k| t_final * k as f64 / n as f64).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decomposition::{demo_partition, option_one, option_two, BatchFamily};
    use crate::fem::{build_dofmap, interpolate, Mesh};
    use crate::graph::{build_graph, demo_graph};

    #[test]
    fn single_edge_has_no_constraints() {
        let g = build_graph(&[(0, 1, 1.0)], &[0, 1]).unwrap();
        let lower = solve_lower_coefficients(&g, &SpatialCoefficients::standard(), &[3.0], &[-2.0]).unwrap();
        assert_eq!(lower, vec![[0.0; 3]]);
    }

    #[test]
    fn two_edge_path_matches_hand_minimum_norm() {
        // Unknowns (g1, d1, e1, g2, d2, e2). With alpha_1 = 1 and a = 1:
        //   continuity  g1 + d1 + e1 - e2 = -1
        //   Kirchhoff   2 g1 + d1 - d2    = -4
        // Minimum norm: x = A^T (A A^T)^{-1} b.
        let g = build_graph(&[(0, 1, 1.0), (1, 2, 1.0)], &[0, 2]).unwrap();
        let lower =
            solve_lower_coefficients(&g, &SpatialCoefficients::unit_diffusion(), &[1.0, 0.0], &[0.0, 0.0]).unwrap();
        let r1 = [1.0, 1.0, 1.0, 0.0, 0.0, -1.0];
        let r2 = [2.0, 1.0, 0.0, 0.0, -1.0, 0.0];
        let dot = |a: &[f64; 6], b: &[f64; 6]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
        let (g11, g12, g22) = (dot(&r1, &r1), dot(&r1, &r2), dot(&r2, &r2));
        let det = g11 * g22 - g12 * g12;
        let b = [-1.0, -4.0];
        let y = [(g22 * b[0] - g12 * b[1]) / det, (-g12 * b[0] + g11 * b[1]) / det];
        let want: Vec<f64> = (0..6).map(|k| r1[k] * y[0] + r2[k] * y[1]).collect();
        let got: Vec<f64> = lower.iter().flatten().copied().collect();
        for (a, b) in got.iter().zip(&want) {
            assert!((a - b).abs() < 1e-12, "{got:?} vs {want:?}");
        }
    }

    #[test]
    fn demo_solution_satisfies_vertex_conditions() {
        let g = demo_graph();
        let sol = ManufacturedSolution::demo(&g).unwrap();
        let (continuity, kirchhoff) = sol.vertex_residuals();
        assert!(continuity <= 1e-10 && kirchhoff <= 1e-10, "{continuity:e} {kirchhoff:e}");
        for e in g.edge_ids() {
            let [a, b, ..] = sol.polynomial(e);
            assert_eq!((a, b), (DEMO_ALPHA[e.0], DEMO_BETA[e.0]));
        }
    }

    #[test]
    fn coefficient_count_must_match_edges() {
        let g = build_graph(&[(0, 1, 1.0), (1, 2, 1.0)], &[0, 2]).unwrap();
        let c = SpatialCoefficients::standard();
        assert!(matches!(solve_lower_coefficients(&g, &c, &[1.0], &[0.0]), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn closed_form_evaluations() {
        let g = demo_graph();
        let sol = ManufacturedSolution::demo(&g).unwrap();
        for e in g.edge_ids() {
            for &x in &[0.0, 0.3, 1.0] {
                assert_eq!(sol.exact(e, x, 0.0), 0.0);
                assert!((sol.exact(e, x, 0.25) - sol.w(e, x)).abs() < 1e-14);
            }
            assert!((sol.exact_dx(e, 0.0, 0.25) - sol.polynomial(e)[3]).abs() < 1e-14);
        }
        let data = sol.derive_data();
        for v in g.boundary_vertices() {
            assert_eq!((data.g)(v, 0.0), 0.0);
        }
    }

    #[test]
    fn derivatives_agree_with_finite_differences() {
        let g = demo_graph();
        let sol = ManufacturedSolution::demo(&g).unwrap();
        let data = sol.derive_data();
        let c = SpatialCoefficients::standard();
        let eps = 1e-4;
        for e in g.edge_ids() {
            for k in 1..10 {
                let (x, t) = (k as f64 / 10.0, 0.037 * k as f64);
                let y = |x: f64, t: f64| sol.exact(e, x, t);
                let y_t = (y(x, t + eps) - y(x, t - eps)) / (2.0 * eps);
                let flux = |x: f64| (c.a)(x) * (y(x + eps, t) - y(x - eps, t)) / (2.0 * eps);
                let flux_x = (flux(x + eps) - flux(x - eps)) / (2.0 * eps);
                let y_x = (y(x + eps, t) - y(x - eps, t)) / (2.0 * eps);
                let residual = y_t - flux_x + (c.b)(x) * y_x + (c.p)(x) * y(x, t) - (data.f)(e, x, t);
                assert!(residual.abs() < 1e-4, "edge {e} x {x}: {residual:e}");
            }
        }
    }

    #[test]
    fn interpolation_error_is_fourth_order_in_squared_norm() {
        let g = demo_graph();
        let sol = ManufacturedSolution::demo(&g).unwrap();
        let errs: Vec<f64> = [9, 19, 39]
            .iter()
            .map(|&n| {
                let map = build_dofmap(&g, Mesh::new(n).unwrap(), &[]).unwrap();
                let u = interpolate(&g, &map, |e, x| sol.exact(e, x, 0.25));
                sol.l2_error(&map, &u, 0.25)
            })
            .collect();
        for pair in errs.windows(2) {
            let rate = (pair[0] / pair[1]).log2();
            assert!((rate - 4.0).abs() < 0.15, "rate {rate}");
        }
    }

    #[test]
    fn zero_state_error_is_integral_of_w_squared() {
        let g = demo_graph();
        let sol = ManufacturedSolution::demo(&g).unwrap();
        // Exact integral of the squared quartic by expanding coefficients.
        let closed: f64 = g
            .edge_ids()
            .map(|e| {
                let p = sol.polynomial(e);
                let c = [p[4], p[3], p[2], p[1], p[0]];
                let mut sum = 0.0;
                for i in 0..5 {
                    for j in 0..5 {
                        sum += c[i] * c[j] / (i + j + 1) as f64;
                    }
                }
                sum
            })
            .sum();
        let map = build_dofmap(&g, Mesh::new(3).unwrap(), &[]).unwrap();
        let zero = vec![0.0; map.n_dofs()];
        assert!((sol.l2_error(&map, &zero, 0.25) - closed).abs() < 1e-10 * closed.max(1.0));
    }

    #[test]
    fn lambda_vanishes_for_single_batch() {
        let g = demo_graph();
        let sol = ManufacturedSolution::demo(&g).unwrap();
        let part = demo_partition(&g).unwrap();
        let prof = sol.lambda_profile(&part, &BatchFamily::single(&part), &uniform_times(1.0, 50)).unwrap();
        assert!(prof.values.iter().all(|&v| v == 0.0));
        assert_eq!(prof.l1, 0.0);
    }

    #[test]
    fn lambda_is_positive_and_grid_stable() {
        let g = demo_graph();
        let sol = ManufacturedSolution::demo(&g).unwrap();
        let part = demo_partition(&g).unwrap();
        for fam in [option_one(&part).unwrap(), option_two(&part).unwrap()] {
            let coarse = sol.lambda_profile(&part, &fam, &uniform_times(1.0, 2000)).unwrap();
            let fine = sol.lambda_profile(&part, &fam, &uniform_times(1.0, 4000)).unwrap();
            assert!(coarse.values.iter().all(|&v| v >= 0.0));
            assert!(coarse.l1.is_finite() && coarse.l1 > 0.0);
            assert!(((coarse.l1 - fine.l1) / fine.l1).abs() < 0.01);
        }
    }

    #[test]
    fn lambda_at_zero_has_only_source_term() {
        let g = demo_graph();
        let sol = ManufacturedSolution::demo(&g).unwrap();
        let part = demo_partition(&g).unwrap();
        let fam = option_two(&part).unwrap();
        let l0 = sol.lambda_profile(&part, &fam, &[0.0]).unwrap().values[0];
        // At t = 0, v = 0 and v' = 2 pi: only ||w||^2 (2 pi)^2 survives.
        let ww: f64 = sol.edge_integrals().iter().map(|i| i.ww).sum();
        // Option two: every edge is inactive with probability 3/5 and active
        // with factor 5/2 otherwise.
        let weight = 0.6 + 0.4 * 2.25;
        assert!((l0 - weight * (2.0 * PI).powi(2) * ww).abs() < 1e-9 * l0);
    }
}
