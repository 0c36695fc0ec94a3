use super::{EvolutionProblem, Workspace};
use crate::signals::Time;

/// Exponential integrator used for the nonlinear term.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Scheme {
    /// First order: `x+ = e^{zh} x + h phi1 N(x)`.
    ExpEuler,
    /// Fourth-order exponential Runge-Kutta (Cox-Matthews).
    Etdrk4,
}

impl Scheme {
    pub fn order(self) -> u32 {
        match self {
            Scheme::ExpEuler => 1,
            Scheme::Etdrk4 => 4,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Scheme::ExpEuler => "exp-euler",
            Scheme::Etdrk4 => "etdrk4",
        }
    }

    pub fn from_name(name: &str) -> Option<Scheme> {
        match name {
            "exp-euler" | "exp_euler" | "euler" => Some(Scheme::ExpEuler),
            "etdrk4" | "etd-rk4" | "rk4" => Some(Scheme::Etdrk4),
            _ => None,
        }
    }
}

/// `(phi1(z), phi2(z), phi3(z))` with `phi_k(z) = sum_j z^j / (j + k)!`.
pub fn phi_functions(z: f64) -> (f64, f64, f64) {
    if z.abs() < 1.0 {
        let mut phis = [0.0f64; 3];
        for (k, phi) in phis.iter_mut().enumerate() {
            // term_j = z^j / (j + k + 1)!
            let mut fact = 1.0;
            for i in 2..=(k + 1) {
                fact *= i as f64;
            }
            let mut term = 1.0 / fact;
            let mut sum = term;
            for j in 1..24 {
                term *= z / (j + k + 1) as f64;
                sum += term;
            }
            *phi = sum;
        }
        (phis[0], phis[1], phis[2])
    } else {
        let em1 = z.exp_m1();
        let p1 = em1 / z;
        let p2 = (em1 - z) / (z * z);
        let p3 = (em1 - z - 0.5 * z * z) / (z * z * z);
        (p1, p2, p3)
    }
}

enum Coeffs {
    Euler {
        e: Vec<f64>,
        p1: Vec<f64>,
    },
    Rk4 {
        e: Vec<f64>,
        e2: Vec<f64>,
        q: Vec<f64>,
        f1: Vec<f64>,
        f2: Vec<f64>,
        f3: Vec<f64>,
    },
}

impl Coeffs {
    fn new(eigenvalues: &[f64], scheme: Scheme, h: f64) -> Coeffs {
        match scheme {
            Scheme::ExpEuler => {
                let (e, p1) = eigenvalues
                    .iter()
                    .map(|l| {
                        let z = -l * h;
                        (z.exp(), h * phi_functions(z).0)
                    })
                    .unzip();
                Coeffs::Euler { e, p1 }
            }
            Scheme::Etdrk4 => {
                let n = eigenvalues.len();
                let mut c = Coeffs::Rk4 {
                    e: Vec::with_capacity(n),
                    e2: Vec::with_capacity(n),
                    q: Vec::with_capacity(n),
                    f1: Vec::with_capacity(n),
                    f2: Vec::with_capacity(n),
                    f3: Vec::with_capacity(n),
                };
                if let Coeffs::Rk4 { e, e2, q, f1, f2, f3 } = &mut c {
                    for l in eigenvalues {
                        let z = -l * h;
                        let (p1, p2, p3) = phi_functions(z);
                        e.push(z.exp());
                        e2.push((0.5 * z).exp());
                        q.push(0.5 * h * phi_functions(0.5 * z).0);
                        f1.push(h * (p1 - 3.0 * p2 + 4.0 * p3));
                        f2.push(h * (p2 - 2.0 * p3));
                        f3.push(h * (-p2 + 4.0 * p3));
                    }
                }
                c
            }
        }
    }
}

struct Buffers {
    ws: Workspace,
    nx: Vec<f64>,
    na: Vec<f64>,
    nb: Vec<f64>,
    nc: Vec<f64>,
    a: Vec<f64>,
    b: Vec<f64>,
    c: Vec<f64>,
}

/// Advances a coefficient vector over substeps with a constant input level.
pub(super) struct Stepper<'a> {
    problem: &'a EvolutionProblem,
    scheme: Scheme,
    full_step: Time,
    full: Coeffs,
    buf: Buffers,
}

impl<'a> Stepper<'a> {
    pub(super) fn new(problem: &'a EvolutionProblem, scheme: Scheme, dt: Time) -> Stepper<'a> {
        let n = problem.modes();
        Stepper {
            problem,
            scheme,
            full_step: dt,
            full: Coeffs::new(problem.spectrum().eigenvalues(), scheme, dt.as_secs()),
            buf: Buffers {
                ws: problem.workspace(),
                nx: vec![0.0; n],
                na: vec![0.0; n],
                nb: vec![0.0; n],
                nc: vec![0.0; n],
                a: vec![0.0; n],
                b: vec![0.0; n],
                c: vec![0.0; n],
            },
        }
    }

    pub(super) fn advance(&mut self, x: &mut [f64], h: Time, level: f64) {
        if h == Time::ZERO {
            return;
        }
        if h == self.full_step {
            apply(self.problem, &self.full, &mut self.buf, x, level);
        } else {
            let coeffs = Coeffs::new(self.problem.spectrum().eigenvalues(), self.scheme, h.as_secs());
            apply(self.problem, &coeffs, &mut self.buf, x, level);
        }
    }
}

fn apply(p: &EvolutionProblem, coeffs: &Coeffs, bf: &mut Buffers, x: &mut [f64], level: f64) {
    let n = x.len();
    match coeffs {
        Coeffs::Euler { e, p1 } => {
            p.rhs_into(x, level, &mut bf.nx, &mut bf.ws);
            for k in 0..n {
                x[k] = e[k] * x[k] + p1[k] * bf.nx[k];
            }
        }
        Coeffs::Rk4 { e, e2, q, f1, f2, f3 } => {
            p.rhs_into(x, level, &mut bf.nx, &mut bf.ws);
            for k in 0..n {
                bf.a[k] = e2[k] * x[k] + q[k] * bf.nx[k];
            }
            p.rhs_into(&bf.a, level, &mut bf.na, &mut bf.ws);
            for k in 0..n {
                bf.b[k] = e2[k] * x[k] + q[k] * bf.na[k];
            }
            p.rhs_into(&bf.b, level, &mut bf.nb, &mut bf.ws);
            for k in 0..n {
                bf.c[k] = e2[k] * bf.a[k] + q[k] * (2.0 * bf.nb[k] - bf.nx[k]);
            }
            p.rhs_into(&bf.c, level, &mut bf.nc, &mut bf.ws);
            for k in 0..n {
                x[k] = e[k] * x[k] + f1[k] * bf.nx[k] + 2.0 * f2[k] * (bf.na[k] + bf.nb[k]) + f3[k] * bf.nc[k];
            }
        }
    }
}
