//! Oracles and instance generators shared by the integration tests and the
//! acceptance binary. Everything here is deliberately dense and direct.
#![allow(dead_code)]

use dqseco::config::MissionConfig;
use dqseco::dynamics::{Dynamics, DynamicsError};
use dqseco::precondition::Hatted;
use dqseco::seco::{Problem, SecoConfig};
use dqseco::subproblem::{Primal, ProductSet, Set, Subproblem, Weights};
use nalgebra::{DMatrix, DVector, SMatrix, SVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn lunar() -> (Problem, SecoConfig) {
    let m = MissionConfig::lunar();
    (m.problem().unwrap(), m.seco_config().unwrap())
}

pub fn uniform(rng: &mut impl Rng, n: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(lo..hi)).collect()
}

pub fn gaussian_matrix(rng: &mut impl Rng, r: usize, c: usize) -> DMatrix<f64> {
    // sum of uniforms is close enough to normal for spectrum tests
    DMatrix::from_fn(r, c, |_, _| (0..6).map(|_| rng.random_range(-1.0..1.0)).sum::<f64>() / 2.0)
}

/// `ẋ = A x + B u`.
pub struct Lti<const N: usize, const M: usize> {
    pub a: SMatrix<f64, N, N>,
    pub b: SMatrix<f64, N, M>,
}

impl<const N: usize, const M: usize> Dynamics<N, M> for Lti<N, M> {
    fn f(&self, x: &SVector<f64, N>, u: &SVector<f64, M>) -> Result<SVector<f64, N>, DynamicsError> {
        Ok(self.a * x + self.b * u)
    }

    fn linearize(
        &self,
        x: &SVector<f64, N>,
        u: &SVector<f64, M>,
    ) -> Result<(SVector<f64, N>, SMatrix<f64, N, N>, SMatrix<f64, N, M>), DynamicsError> {
        Ok((self.f(x, u)?, self.a, self.b))
    }
}

/// Exact first-order-hold discretization over a span `t` from the matrix
/// exponential of `[[A, B, 0], [0, 0, I], [0, 0, 0]]·t`.
/// Returns `(Φ, B⁻, B⁺)`.
pub fn foh_expm(a: &DMatrix<f64>, b: &DMatrix<f64>, t: f64) -> (DMatrix<f64>, DMatrix<f64>, DMatrix<f64>) {
    let (n, m) = (a.nrows(), b.ncols());
    let mut big = DMatrix::zeros(n + 2 * m, n + 2 * m);
    big.view_mut((0, 0), (n, n)).copy_from(a);
    big.view_mut((0, n), (n, m)).copy_from(b);
    for i in 0..m {
        big[(n + i, n + m + i)] = 1.0;
    }
    let e = (big * t).exp();
    let phi = e.view((0, 0), (n, n)).into_owned();
    let g1 = e.view((0, n), (n, m)).into_owned();
    let g2 = e.view((0, n + m), (n, m)).into_owned();
    // u(τ) = u⁻ + (u⁺ − u⁻) τ/t, so the second integral picks up 1/t
    let bp = &g2 / t;
    let bm = &g1 - &bp;
    (phi, bm, bp)
}

/// End state of the exact FOH solution.
pub fn foh_expm_state(a: &DMatrix<f64>, b: &DMatrix<f64>, t: f64, x: &DVector<f64>, u0: &DVector<f64>, u1: &DVector<f64>) -> DVector<f64> {
    let (phi, bm, bp) = foh_expm(a, b, t);
    phi * x + bm * u0 + bp * u1
}

/// Projection onto `{n1ᵀz ≤ o1, n2ᵀz ≤ o2}` by enumerating the four active sets
/// and keeping the closest feasible candidate.
pub fn two_halfspace_oracle(z: &[f64], n1: &[f64], o1: f64, n2: &[f64], o2: f64) -> Vec<f64> {
    let z = DVector::from_column_slice(z);
    let n1 = DVector::from_column_slice(n1);
    let n2 = DVector::from_column_slice(n2);
    let feasible = |p: &DVector<f64>| {
        let tol = 1e-10 * (1.0 + p.amax());
        n1.dot(p) - o1 <= tol * n1.amax() && n2.dot(p) - o2 <= tol * n2.amax()
    };
    let onto = |n: &DVector<f64>, o: f64| &z - n * ((n.dot(&z) - o) / n.dot(n));
    let mut cands = vec![z.clone(), onto(&n1, o1), onto(&n2, o2)];
    let g = nalgebra::Matrix2::new(n1.dot(&n1), n1.dot(&n2), n1.dot(&n2), n2.dot(&n2));
    if let Some(gi) = g.try_inverse() {
        let r = nalgebra::Vector2::new(n1.dot(&z) - o1, n2.dot(&z) - o2);
        let l = gi * r;
        cands.push(&z - &n1 * l[0] - &n2 * l[1]);
    }
    cands
        .into_iter()
        .filter(|p| feasible(p))
        .min_by(|a, b| (a - &z).norm().total_cmp(&(b - &z).norm()))
        .expect("the intersection is nonempty")
        .as_slice()
        .to_vec()
}

/// Random toy subproblem. With `constrained`, every later node carries a mix
/// of ball, halfspace, two-halfspace and box constraints; otherwise only the
/// first state is pinned.
pub fn toy_subproblem<const NX: usize, const NU: usize>(rng: &mut ChaCha8Rng, n: usize, constrained: bool) -> Subproblem<NX, NU> {
    assert!(NX >= 4 && NU >= 1);
    let weights = Weights {
        w_m: 1.0,
        w_tr: 10f64.powf(rng.random_range(-1.0..1.5)),
        w_tr_s: 10f64.powf(rng.random_range(-1.0..1.5)),
        w_vse: 10f64.powf(rng.random_range(0.0..3.0)),
    };
    fn mat<const R: usize, const C: usize>(rng: &mut ChaCha8Rng, k: f64) -> SMatrix<f64, R, C> {
        SMatrix::from_fn(|_, _| rng.random_range(-k..k))
    }
    let a = (0..n - 1).map(|_| SMatrix::<f64, NX, NX>::identity() + mat::<NX, NX>(rng, 0.3)).collect();
    let b_minus = (0..n - 1).map(|_| mat::<NX, NU>(rng, 0.5)).collect();
    let b_plus = (0..n - 1).map(|_| mat::<NX, NU>(rng, 0.5)).collect();
    let s = (0..n - 1).map(|_| mat::<NX, 1>(rng, 0.2)).collect();
    let d = (0..n - 1).map(|_| mat::<NX, 1>(rng, 0.05)).collect();
    let q_x = (0..n).map(|_| mat::<NX, 1>(rng, 0.5)).collect();
    let q_xi = (0..n).map(|_| mat::<NX, 1>(rng, 0.5)).collect();
    let q_u = (0..n).map(|_| mat::<NU, 1>(rng, 0.5)).collect();
    let x1_set = ProductSet::singleton(&uniform(rng, NX, -0.2, 0.2));

    let mut xi_sets = vec![ProductSet::singleton(&[0.0; NX])];
    for _ in 1..n {
        xi_sets.push(if constrained {
            let n1 = uniform(rng, 2, -1.0, 1.0);
            let n2 = uniform(rng, 2, -1.0, 1.0);
            let (o1, o2) = (rng.random_range(-0.1..0.3), rng.random_range(-0.1..0.3));
            let hn = uniform(rng, 1, 0.5, 1.0);
            let ho = rng.random_range(-0.05..0.2);
            let c = uniform(rng, NX - 3, -0.05, 0.05);
            let r = rng.random_range(0.05..0.3);
            ProductSet::free(NX)
                .with(0..2, Set::two_halfspaces(n1, o1, n2, o2).unwrap())
                .unwrap()
                .with(2..3, Set::halfspace(hn, ho).unwrap())
                .unwrap()
                .with(3..NX, Set::ball(c, r).unwrap())
                .unwrap()
        } else {
            ProductSet::free(NX)
        });
    }
    let u_sets = (0..n)
        .map(|_| {
            if constrained {
                let lo = uniform(rng, NU, -0.3, -0.05);
                let hi = uniform(rng, NU, 0.05, 0.3);
                ProductSet::free(NU).with(0..NU, Set::boxed(lo, hi).unwrap()).unwrap()
            } else {
                ProductSet::free(NU)
            }
        })
        .collect();
    let s_set = if constrained {
        ProductSet::free(1).with(0..1, Set::boxed(vec![-0.2], vec![0.2]).unwrap()).unwrap()
    } else {
        ProductSet::free(1)
    };
    let sub = Subproblem {
        a,
        b_minus,
        b_plus,
        s,
        d,
        q_x,
        q_xi,
        q_u,
        q_s: rng.random_range(-0.5..0.5),
        weights,
        x1_set,
        xi_sets,
        u_sets,
        s_set,
    };
    sub.validate().unwrap();
    sub
}

/// Flat indices of the pinned first state and first virtual state.
pub fn pinned_indices(n: usize, nx: usize) -> Vec<usize> {
    (0..nx).chain(n * nx..(n + 1) * nx).collect()
}

/// Solves the preconditioned problem with only equality constraints (dynamics
/// and the pinned first node) through its KKT system.
pub fn kkt_solve<const NX: usize, const NU: usize>(
    h: &DMatrix<f64>,
    rhs: &DVector<f64>,
    q: &DVector<f64>,
    hat: &Hatted<NX, NU>,
) -> DVector<f64> {
    let n = hat.nodes();
    let len = h.ncols();
    let mut pinned_value = vec![0.0; len];
    hat.project_flat(&mut pinned_value);
    let pins = pinned_indices(n, NX);
    let m = h.nrows() + pins.len();
    let mut e = DMatrix::zeros(m, len);
    let mut ev = DVector::zeros(m);
    e.view_mut((0, 0), (h.nrows(), len)).copy_from(h);
    ev.rows_mut(0, h.nrows()).copy_from(rhs);
    for (r, &i) in pins.iter().enumerate() {
        e[(h.nrows() + r, i)] = 1.0;
        ev[h.nrows() + r] = pinned_value[i];
    }
    let mut k = DMatrix::zeros(len + m, len + m);
    k.view_mut((0, 0), (len, len)).fill_with_identity();
    k.view_mut((0, 0), (len, len)).scale_mut(hat.lambda);
    k.view_mut((len, 0), (m, len)).copy_from(&e);
    k.view_mut((0, len), (len, m)).copy_from(&e.transpose());
    let mut r = DVector::zeros(len + m);
    r.rows_mut(0, len).copy_from(&(-q));
    r.rows_mut(len, m).copy_from(&ev);
    let sol = k.lu().solve(&r).expect("KKT system is nonsingular");
    sol.rows(0, len).into_owned()
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

pub fn flat<const NX: usize, const NU: usize>(z: &Primal<NX, NU>) -> Vec<f64> {
    z.to_flat()
}
