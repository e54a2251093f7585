//! One-step time integrators for `M u' + (K + C + P) u = F`.

use std::fmt;

use crate::error::{Error, Result};
use crate::fem::AssembledOperators;
use crate::sparse::{BandedLu, CsrMatrix};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Scheme {
    ImplicitEuler,
    CrankNicolson,
    Theta(f64),
    /// Diffusion implicit, convection and potential explicit.
    SemiImplicitEuler,
}

impl Scheme {
    /// Parses a scheme name (`ie`, `cn`, `theta`, `siem`).
    pub fn from_name(name: &str, theta: Option<f64>) -> Result<Self> {
        let scheme = match name.to_ascii_lowercase().as_str() {
            "ie" => Scheme::ImplicitEuler,
            "cn" => Scheme::CrankNicolson,
            "siem" => Scheme::SemiImplicitEuler,
            "theta" => {
                Scheme::Theta(theta.ok_or_else(|| Error::Config("scheme `theta` needs --theta".into()))?)
            }
            other => return Err(Error::Config(format!("unknown scheme `{other}`"))),
        };
        scheme.validate()?;
        Ok(scheme)
    }

    pub fn validate(self) -> Result<()> {
        match self {
            Scheme::Theta(t) if !(0.0..=1.0).contains(&t) => {
                Err(Error::Config(format!("theta must lie in [0, 1], got {t}")))
            }
            _ => Ok(()),
        }
    }

    /// Implicitness weight of the theta family; `None` for the split scheme.
    pub fn theta(self) -> Option<f64> {
        match self {
            Scheme::ImplicitEuler => Some(1.0),
            Scheme::CrankNicolson => Some(0.5),
            Scheme::Theta(t) => Some(t),
            Scheme::SemiImplicitEuler => None,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Scheme::ImplicitEuler => "ie",
            Scheme::CrankNicolson => "cn",
            Scheme::Theta(_) => "theta",
            Scheme::SemiImplicitEuler => "siem",
        }
    }

    /// Weights `(lhs, rhs)` on `[M, K, C, P]`: the scheme reads
    /// `lhs · ops u_{k+1} = rhs · ops u_k + dt (w_next F_{k+1} + w_now F_k)`.
    fn operator_weights(self, dt: f64) -> ([f64; 4], [f64; 4]) {
        match self.theta() {
            Some(t) => {
                let l = dt * t;
                let r = -dt * (1.0 - t);
                ([1.0, l, l, l], [1.0, r, r, r])
            }
            None => ([1.0, dt, 0.0, 0.0], [1.0, 0.0, -dt, -dt]),
        }
    }

    /// Load weights `(w_now, w_next)`, without the factor `dt`.
    fn load_weights(self) -> (f64, f64) {
        match self.theta() {
            Some(t) => (1.0 - t, t),
            None => (0.0, 1.0),
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scheme::Theta(t) => f.pad(&format!("theta({t})")),
            s => f.pad(s.label()),
        }
    }
}

fn combine(ops: &AssembledOperators, w: [f64; 4]) -> CsrMatrix {
    CsrMatrix::linear_combination(&[
        (w[0], &ops.mass),
        (w[1], &ops.stiffness),
        (w[2], &ops.convection),
        (w[3], &ops.reaction),
    ])
}

/// A factored one-step propagator on a fixed system with Dirichlet dofs
/// eliminated.
#[derive(Debug, Clone)]
pub struct Stepper {
    scheme: Scheme,
    dt: f64,
    free: Vec<usize>,
    constrained: Vec<usize>,
    lu: BandedLu,
    /// `A_fc`.
    coupling: CsrMatrix,
    /// Free rows of the explicit operator, all columns.
    explicit: CsrMatrix,
}

impl Stepper {
    /// `constrained[k]` marks dofs whose next value is prescribed.
    pub fn new(scheme: Scheme, ops: &AssembledOperators, dt: f64, constrained: &[bool]) -> Result<Self> {
        scheme.validate()?;
        if !(dt > 0.0) {
            return Err(Error::Config(format!("time step must be positive, got {dt}")));
        }
        let n = ops.dim();
        if constrained.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "constraint mask has {} entries for a system of size {n}",
                constrained.len()
            )));
        }
        let free: Vec<usize> = (0..n).filter(|&k| !constrained[k]).collect();
        let fixed: Vec<usize> = (0..n).filter(|&k| constrained[k]).collect();
        let all: Vec<usize> = (0..n).collect();
        let (lhs, rhs) = scheme.operator_weights(dt);
        let a = combine(ops, lhs);
        let b = combine(ops, rhs);
        let lu = BandedLu::factor(&a.submatrix(&free, &free))?;
        Ok(Self {
            scheme,
            dt,
            coupling: a.submatrix(&free, &fixed),
            explicit: b.submatrix(&free, &all),
            free,
            constrained: fixed,
            lu,
        })
    }

    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn dim(&self) -> usize {
        self.free.len() + self.constrained.len()
    }

    pub fn n_free(&self) -> usize {
        self.free.len()
    }

    /// Stored entries of the factorization.
    pub fn factor_entries(&self) -> usize {
        self.lu.stored_entries()
    }

    /// Whether `advance` reads `load_now`.
    pub fn needs_current_load(&self) -> bool {
        self.scheme.load_weights().0 != 0.0
    }

    /// Advances `u` by one step. The constrained entries of `next` must already
    /// hold their prescribed values; the free entries are overwritten.
    pub fn advance(&self, u: &[f64], load_now: &[f64], load_next: &[f64], next: &mut [f64]) {
        let (w_now, w_next) = self.scheme.load_weights();
        let mut rhs = self.explicit.mul_vec(u);
        let fixed: Vec<f64> = self.constrained.iter().map(|&k| next[k]).collect();
        let lift = self.coupling.mul_vec(&fixed);
        for (r, (&k, l)) in rhs.iter_mut().zip(self.free.iter().zip(&lift)) {
            let mut load = w_next * load_next[k];
            if w_now != 0.0 {
                load += w_now * load_now[k];
            }
            *r += self.dt * load - l;
        }
        let x = self.lu.solve(&rhs);
        for (&k, v) in self.free.iter().zip(x) {
            next[k] = v;
        }
    }
}

/// A single unconstrained step from `u_k` with loads `f_k`, `f_k1`.
pub fn step(
    scheme: Scheme,
    ops: &AssembledOperators,
    f_k: &[f64],
    f_k1: &[f64],
    u_k: &[f64],
    dt: f64,
) -> Result<Vec<f64>> {
    let stepper = Stepper::new(scheme, ops, dt, &vec![false; ops.dim()])?;
    let mut next = vec![0.0; ops.dim()];
    stepper.advance(u_k, f_k, f_k1, &mut next);
    Ok(next)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::{assemble, build_dofmap, interpolate, CoefficientSet, Mesh};
    use crate::graph::demo_graph;

    fn scalar(m: f64, k: f64, c: f64, p: f64) -> AssembledOperators {
        let one = |v: f64| CsrMatrix::from_dense(&[vec![v]]);
        AssembledOperators { mass: one(m), stiffness: one(k), convection: one(c), reaction: one(p) }
    }

    #[test]
    fn scalar_decay_closed_forms() {
        let ops = scalar(1.0, 1.0, 0.0, 0.0);
        let cases = [
            (Scheme::ImplicitEuler, 1.0 / 1.1),
            (Scheme::CrankNicolson, 0.95 / 1.05),
            (Scheme::Theta(0.75), 0.975 / 1.075),
            (Scheme::SemiImplicitEuler, 1.0 / 1.1),
        ];
        for (scheme, want) in cases {
            let u = step(scheme, &ops, &[0.0], &[0.0], &[1.0], 0.1).unwrap();
            assert!((u[0] - want).abs() < 1e-15, "{scheme}");
        }
        // Split scheme: (1 + dt k) u1 = (1 - dt (c + p)) u0.
        let split = scalar(1.0, 2.0, 0.5, 1.0);
        let u = step(Scheme::SemiImplicitEuler, &split, &[0.0], &[3.0], &[1.0], 0.1).unwrap();
        assert!((u[0] - (0.85 + 0.3) / 1.2).abs() < 1e-15);
    }

    #[test]
    fn theta_endpoints_match_named_schemes() {
        let g = demo_graph();
        let mesh = Mesh::new(5).unwrap();
        let map = build_dofmap(&g, mesh, &[]).unwrap();
        let coeffs = CoefficientSet::heat(1.0).with_b(|_, x| x).with_p(|_, _| 2.0);
        let ops = assemble(&g, mesh, &map, &coeffs, None).unwrap();
        let u0 = interpolate(&g, &map, |e, x| (e.0 as f64 + x).cos());
        let f0: Vec<f64> = (0..map.n_dofs()).map(|i| (i as f64).sin()).collect();
        let f1: Vec<f64> = (0..map.n_dofs()).map(|i| (i as f64).cos()).collect();
        for (named, theta) in [(Scheme::ImplicitEuler, 1.0), (Scheme::CrankNicolson, 0.5)] {
            let a = step(named, &ops, &f0, &f1, &u0, 0.01).unwrap();
            let b = step(Scheme::Theta(theta), &ops, &f0, &f1, &u0, 0.01).unwrap();
            assert!(a.iter().zip(&b).all(|(x, y)| (x - y).abs() < 1e-14));
        }
    }

    /// Error at `t = 1` of `u' = -u + cos t`, `u(0) = 0`.
    fn scalar_error(scheme: Scheme, steps: usize) -> f64 {
        let ops = scalar(1.0, 1.0, 0.0, 0.0);
        let dt = 1.0 / steps as f64;
        let stepper = Stepper::new(scheme, &ops, dt, &[false]).unwrap();
        let mut u = [0.0];
        for k in 0..steps {
            let (t0, t1) = (k as f64 * dt, (k + 1) as f64 * dt);
            let mut next = [0.0];
            stepper.advance(&u, &[t0.cos()], &[t1.cos()], &mut next);
            u = next;
        }
        let exact = 0.5 * (1f64.cos() + 1f64.sin() - (-1f64).exp());
        (u[0] - exact).abs()
    }

    #[test]
    fn observed_orders() {
        for (scheme, order) in [(Scheme::ImplicitEuler, 1.0), (Scheme::CrankNicolson, 2.0), (Scheme::Theta(0.3), 1.0)] {
            let rate = (scalar_error(scheme, 100) / scalar_error(scheme, 200)).log2();
            assert!((rate - order).abs() < 0.1, "{scheme}: {rate}");
        }
    }

    #[test]
    fn heat_energy_decays_with_dirichlet_elimination() {
        let g = demo_graph();
        let mesh = Mesh::new(9).unwrap();
        let map = build_dofmap(&g, mesh, &g.boundary_vertices()).unwrap();
        let ops = assemble(&g, mesh, &map, &CoefficientSet::heat(1.0), None).unwrap();
        let mut u = interpolate(&g, &map, |e, x| 1.0 + (e.0 as f64 * x).sin());
        for d in map.constrained_dofs() {
            u[d] = 0.0;
        }
        let zero = vec![0.0; map.n_dofs()];
        let energy = |u: &[f64]| ops.mass.mul_vec(u).iter().zip(u).map(|(a, b)| a * b).sum::<f64>();
        for scheme in [Scheme::ImplicitEuler, Scheme::CrankNicolson, Scheme::SemiImplicitEuler] {
            let stepper = Stepper::new(scheme, &ops, 0.05, map.constrained_mask()).unwrap();
            let mut state = u.clone();
            let mut last = energy(&state);
            for _ in 0..20 {
                let mut next = zero.clone();
                stepper.advance(&state, &zero, &zero, &mut next);
                let e = energy(&next);
                assert!(e < last, "{scheme}");
                last = e;
                state = next;
            }
            assert!(map.constrained_dofs().iter().all(|&d| state[d] == 0.0));
        }
    }

    #[test]
    fn scheme_parsing() {
        assert_eq!(Scheme::from_name("CN", None).unwrap(), Scheme::CrankNicolson);
        assert_eq!(Scheme::from_name("theta", Some(0.25)).unwrap(), Scheme::Theta(0.25));
        assert!(Scheme::from_name("theta", None).is_err());
        assert!(Scheme::from_name("theta", Some(1.5)).is_err());
        assert!(Scheme::from_name("rk4", None).is_err());
    }
}
