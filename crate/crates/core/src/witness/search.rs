//! Multistart damped Gauss–Newton search.
//!
//! The first `p` matrices are `M_j = Q_j G_j Q_j^{-1}` with `G_j` the normal
//! form of class `j`; the last one is forced by the product (or sum)
//! condition and only its class membership is optimized. Frames are updated
//! multiplicatively, `Q_j ← (I + Y_j) Q_j`, so `dM_j = Y_j M_j − M_j Y_j`.

use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::diagnostics::{verify_witness, Diagnostics, RANK_TOL};
use super::linalg::{
    cmul, identity, mat_of, product, random_frame, smallest_right_singular_vectors, vec_of, CMatrix, CVector, C64,
};
use super::{
    check_constraint, conjugate, product_jacobian, residual_matrix, ConcreteClass, Witness, WitnessError, MAX_N,
};
use crate::jnf::Mode;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchOptions {
    pub seed: u64,
    pub restarts: usize,
    pub iterations: usize,
    /// Convergence threshold on the residual norm (objective `< tol²`).
    pub tol: f64,
    /// Worker threads; `None` uses the global pool.
    pub threads: Option<usize>,
    pub max_condition: f64,
    pub objective: Objective,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions {
            seed: 0,
            restarts: 20,
            iterations: 300,
            tol: 1e-10,
            threads: None,
            max_condition: 1e3,
            objective: Objective::ClassDefect,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RestartOutcome {
    pub index: usize,
    pub converged: bool,
    pub iterations: usize,
    /// Final class-membership defect of the forced matrix.
    pub objective_residual: f64,
    pub irreducible: Option<bool>,
    pub centralizer_dim: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FoundWitness {
    pub restart: usize,
    pub witness: Witness,
    pub diagnostics: Diagnostics,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct HistogramBin {
    pub label: String,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchReport {
    pub mode: Mode,
    pub n: usize,
    pub seed: u64,
    pub restarts: usize,
    pub iterations: usize,
    pub tol: f64,
    pub objective: Objective,
    pub outcomes: Vec<RestartOutcome>,
    pub witnesses: Vec<FoundWitness>,
    pub best_residual: f64,
    /// Wall-clock seconds; not part of the serialized report.
    pub wall_time: f64,
}

impl SearchReport {
    pub fn converged(&self) -> usize {
        self.witnesses.len()
    }

    pub fn irreducible_count(&self) -> usize {
        self.witnesses.iter().filter(|w| w.diagnostics.irreducible()).count()
    }

    pub fn ensure_converged(&self) -> Result<&Self, WitnessError> {
        if self.witnesses.is_empty() {
            Err(WitnessError::NoConvergence {
                best_residual: self.best_residual,
            })
        } else {
            Ok(self)
        }
    }

    /// Decade buckets of the final per-restart residuals.
    pub fn histogram(&self) -> Vec<HistogramBin> {
        let edges = [-10, -8, -6, -4, -2, 0];
        let mut counts = vec![0usize; edges.len() + 1];
        for o in &self.outcomes {
            let r = o.objective_residual;
            let slot = edges.iter().position(|&e| r < 10f64.powi(e)).unwrap_or(edges.len());
            counts[slot] += 1;
        }
        counts
            .into_iter()
            .enumerate()
            .map(|(i, count)| HistogramBin {
                label: match i {
                    0 => format!("<1e{}", edges[0]),
                    i if i == edges.len() => format!(">=1e{}", edges[i - 1]),
                    i => format!("1e{}..1e{}", edges[i - 1], edges[i]),
                },
                count,
            })
            .collect()
    }
}

/// Which residual the optimizer drives to zero.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Objective {
    /// Class-membership defect of the matrix forced by the product condition.
    #[default]
    ClassDefect,
    /// `‖ΠM_j − I‖` (or `‖ΣA_j‖`) with every matrix conjugated from its normal form.
    Product,
}

/// The residual map of one search problem. Matrices are kept in search order.
struct Problem {
    objective: Objective,
    mode: Mode,
    n: usize,
    /// Normal forms of the parametrized matrices.
    normal_forms: Vec<CMatrix>,
    last_values: Vec<C64>,
    last_power_sums: Vec<C64>,
}

struct State {
    /// Every matrix of the tuple, the forced one last for [`Objective::ClassDefect`].
    ms: Vec<CMatrix>,
    r: CVector,
}

impl Problem {
    fn forced(&self, ms: &[CMatrix]) -> Option<CMatrix> {
        match self.mode {
            Mode::Multiplicative => product(ms, self.n).try_inverse(),
            Mode::Additive => Some(-ms.iter().fold(CMatrix::zeros(self.n, self.n), |acc, m| acc + m)),
        }
    }

    fn evaluate(&self, frames: &[CMatrix]) -> Option<State> {
        let mut ms = conjugate(frames, &self.normal_forms)?;
        let r = match self.objective {
            Objective::ClassDefect => {
                let last = self.forced(&ms)?;
                let r = self.class_defect(&last);
                ms.push(last);
                r
            }
            Objective::Product => vec_of(&residual_matrix(self.mode, &ms)),
        };
        r.iter()
            .all(|z| z.re.is_finite() && z.im.is_finite())
            .then_some(State { ms, r })
    }

    fn jacobian(&self, state: &State) -> CMatrix {
        match self.objective {
            Objective::ClassDefect => {
                let (ms, last) = state.ms.split_at(state.ms.len() - 1);
                cmul(
                    &self.class_defect_jacobian(&last[0]),
                    &self.forced_jacobian(ms, &last[0]),
                )
            }
            Objective::Product => product_jacobian(self.mode, &state.ms),
        }
    }

    /// Power-sum defects followed by the entries of the annihilating product.
    fn class_defect(&self, last: &CMatrix) -> CVector {
        let n = self.n;
        let s = self.last_power_sums.len();
        let mut r = CVector::zeros(s + n * n);
        let mut power = identity(n);
        for k in 0..s {
            power = &power * last;
            r[k] = power.trace() - self.last_power_sums[k];
        }
        let ann = self
            .last_values
            .iter()
            .fold(identity(n), |acc, &v| acc * (last - identity(n) * v));
        for a in 0..n {
            for b in 0..n {
                r[s + a * n + b] = ann[(a, b)];
            }
        }
        r
    }

    /// Derivative of [`Problem::class_defect`] with respect to the row-major entries of the forced matrix.
    fn class_defect_jacobian(&self, last: &CMatrix) -> CMatrix {
        let n = self.n;
        let nn = n * n;
        let s = self.last_power_sums.len();
        let mut jac = CMatrix::zeros(s + nn, nn);
        let mut power = identity(n); // last^{k-1}
        for k in 1..=s {
            for cc in 0..n {
                for d in 0..n {
                    jac[(k - 1, cc * n + d)] = power[(d, cc)] * k as f64;
                }
            }
            power = &power * last;
        }
        let factors: Vec<CMatrix> = self.last_values.iter().map(|&v| last - identity(n) * v).collect();
        for i in 0..factors.len() {
            let left = product(&factors[..i], n);
            let right = product(&factors[i + 1..], n);
            // vec_r(L dM R) = (L ⊗ R^T) vec_r(dM)
            let mut view = jac.view_mut((s, 0), (nn, nn));
            view += left.kronecker(&right.transpose());
        }
        jac
    }

    /// `∂ vec_r(M_last) / ∂ vec_r(Y_j)` stacked over the parametrized matrices.
    fn forced_jacobian(&self, ms: &[CMatrix], last: &CMatrix) -> CMatrix {
        let n = self.n;
        let nn = n * n;
        let mut out = CMatrix::zeros(nn, ms.len() * nn);
        for j in 0..ms.len() {
            // dM_last = −U (Y M_j − M_j Y) V
            let (u, v) = match self.mode {
                Mode::Multiplicative => (last * product(&ms[..j], n), product(&ms[j + 1..], n) * last),
                Mode::Additive => (identity(n), identity(n)),
            };
            let block = (&u * &ms[j]).kronecker(&v.transpose()) - u.kronecker(&(&ms[j] * &v).transpose());
            out.view_mut((0, j * nn), (nn, nn)).copy_from(&block);
        }
        out
    }
}

struct Run {
    converged: bool,
    iterations: usize,
    residual: f64,
    frames: Vec<CMatrix>,
    state: Option<State>,
}

/// Extra iterations after convergence while the residual still halves.
const POLISH_ITERATIONS: usize = 20;

fn levenberg_marquardt(problem: &Problem, mut frames: Vec<CMatrix>, iterations: usize, tol: f64) -> Run {
    let n = problem.n;
    let nn = n * n;
    let Some(mut state) = problem.evaluate(&frames) else {
        return Run {
            converged: false,
            iterations: 0,
            residual: f64::INFINITY,
            frames,
            state: None,
        };
    };
    let mut mu = -1.0;
    let mut iter = 0;
    let mut polish = 0;
    loop {
        let norm = state.r.norm();
        if norm < tol {
            polish += 1;
            if polish > POLISH_ITERATIONS {
                break;
            }
        } else if iter >= iterations {
            break;
        }
        iter += 1;
        let jac = problem.jacobian(&state);
        let jh = jac.adjoint();
        let jjh = cmul(&jac, &jh);
        if mu < 0.0 {
            mu = 1e-3 * jjh.trace().re / jjh.nrows() as f64;
        }
        let mut accepted = false;
        for _ in 0..12 {
            let mut sys = jjh.clone();
            for i in 0..sys.nrows() {
                sys[(i, i)] += mu;
            }
            let Some(y) = sys.cholesky().map(|ch| ch.solve(&state.r)) else {
                mu *= 10.0;
                continue;
            };
            let step = -(&jh * y);
            let trial: Vec<CMatrix> = frames
                .iter()
                .enumerate()
                .map(|(j, q)| (identity(n) + mat_of(&step.rows(j * nn, nn).into_owned(), n)) * q)
                .collect();
            if let Some(next) = problem.evaluate(&trial) {
                let next_norm = next.r.norm();
                let enough = if norm < tol {
                    next_norm < 0.5 * norm
                } else {
                    next_norm < norm
                };
                if enough {
                    frames = trial;
                    state = next;
                    mu = (mu * 0.3).max(1e-300);
                    accepted = true;
                    break;
                }
            }
            if norm < tol {
                break;
            }
            mu *= 10.0;
        }
        if !accepted {
            break;
        }
    }
    let residual = state.r.norm();
    Run {
        converged: residual < tol,
        iterations: iter,
        residual,
        frames,
        state: Some(state),
    }
}

/// Frame whose columns are eigenvectors in the slot order of a semisimple class.
pub(super) fn semisimple_frame(m: &CMatrix, class: &ConcreteClass) -> CMatrix {
    let n = m.nrows();
    let mut q = CMatrix::zeros(n, n);
    let mut col = 0;
    for (v, mult) in class
        .complex_values()
        .into_iter()
        .zip(class.jnf().slot_multiplicities())
    {
        let kernel = smallest_right_singular_vectors(&(m - identity(n) * v), mult);
        q.view_mut((0, col), (n, mult)).copy_from(&kernel);
        col += mult;
    }
    q
}

/// Multistart search for a tuple in `classes` with product `I` (or sum `0`).
pub fn search_tuple(classes: &[ConcreteClass], opts: &SearchOptions) -> Result<SearchReport, WitnessError> {
    check_constraint(classes)?;
    let n = classes[0].n();
    if n > MAX_N {
        return Err(WitnessError::TooLarge(n));
    }
    let mode = classes[0].mode();
    let count = classes.len();
    let forced = opts.objective == Objective::ClassDefect;
    // Rotate so that a semisimple class is forced; cyclic rotation preserves the product condition.
    let shift = if forced {
        (0..count)
            .rev()
            .find(|&j| classes[j].is_semisimple())
            .map(|j| j + 1)
            .ok_or_else(|| WitnessError::UnsupportedClass("at least one class must be semisimple".into()))?
    } else {
        0
    };
    let order: Vec<usize> = (0..count).map(|i| (i + shift) % count).collect();
    let rotated: Vec<&ConcreteClass> = order.iter().map(|&j| &classes[j]).collect();
    let last = rotated[count - 1];
    let parametrized = if forced { count - 1 } else { count };
    let problem = Problem {
        objective: opts.objective,
        mode,
        n,
        normal_forms: rotated[..parametrized].iter().map(|cl| cl.normal_form()).collect(),
        last_values: last.complex_values(),
        // Once Π(M − σ) = 0 the power sums beyond the number of distinct
        // eigenvalues are determined by the lower ones.
        last_power_sums: last.power_sums(last.values().len()),
    };

    let start = Instant::now();
    let run_one = |index: usize| -> (RestartOutcome, Option<FoundWitness>) {
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
        rng.set_stream(index as u64);
        let frames: Vec<CMatrix> = (0..parametrized)
            .map(|_| random_frame(n, opts.max_condition, &mut rng))
            .collect();
        let run = levenberg_marquardt(&problem, frames, opts.iterations, opts.tol);
        let mut outcome = RestartOutcome {
            index,
            converged: run.converged,
            iterations: run.iterations,
            objective_residual: run.residual,
            irreducible: None,
            centralizer_dim: None,
        };
        let (true, Some(state)) = (run.converged, run.state) else {
            return (outcome, None);
        };
        let mut run_frames = run.frames;
        if forced {
            run_frames.push(semisimple_frame(&state.ms[count - 1], last));
        }
        let mut matrices = vec![CMatrix::zeros(n, n); count];
        let mut frames = vec![CMatrix::zeros(n, n); count];
        for (pos, &j) in order.iter().enumerate() {
            matrices[j] = state.ms[pos].clone();
            frames[j] = run_frames[pos].clone();
        }
        let witness = Witness::new(mode, matrices).with_frames(frames);
        let diagnostics = verify_witness(&witness, classes, RANK_TOL).expect("sizes checked");
        outcome.irreducible = Some(diagnostics.irreducible());
        outcome.centralizer_dim = Some(diagnostics.centralizer_dim);
        (
            outcome,
            Some(FoundWitness {
                restart: index,
                witness,
                diagnostics,
            }),
        )
    };

    let results: Vec<(RestartOutcome, Option<FoundWitness>)> = match opts.threads {
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .map_err(|e| WitnessError::ThreadPool(e.to_string()))?
            .install(|| (0..opts.restarts).into_par_iter().map(run_one).collect()),
        None => (0..opts.restarts).into_par_iter().map(run_one).collect(),
    };
    let best_residual = results
        .iter()
        .map(|(o, _)| o.objective_residual)
        .fold(f64::INFINITY, f64::min);
    let (outcomes, found): (Vec<_>, Vec<_>) = results.into_iter().unzip();
    Ok(SearchReport {
        mode,
        n,
        seed: opts.seed,
        restarts: opts.restarts,
        iterations: opts.iterations,
        tol: opts.tol,
        objective: opts.objective,
        outcomes,
        witnesses: found.into_iter().flatten().collect(),
        best_residual,
        wall_time: start.elapsed().as_secs_f64(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jnf::MultiplicityVector;
    use crate::spectra::{sample_spectrum, SampleOptions, SampleTarget, Spectrum};

    fn sampled(pmv: &[&[usize]], target: SampleTarget, seed: u64) -> Spectrum {
        let pmv: Vec<MultiplicityVector> = pmv.iter().map(|c| MultiplicityVector::new(c.to_vec())).collect();
        sample_spectrum(
            &pmv,
            Mode::Multiplicative,
            &target,
            SampleOptions {
                seed,
                ..SampleOptions::default()
            },
        )
        .unwrap()
    }

    #[test]
    fn positive_control_quadruple() {
        let s = sampled(&[&[1, 1][..]; 4], SampleTarget::generic(), 5);
        let classes = ConcreteClass::from_spectrum(&s);
        let report = search_tuple(
            &classes,
            &SearchOptions {
                restarts: 8,
                seed: 1,
                ..SearchOptions::default()
            },
        )
        .unwrap();
        assert!(report.converged() >= 1);
        for f in &report.witnesses {
            assert!(f.witness.residual < 1e-10);
            assert!(f.diagnostics.max_class_residual() < 1e-9);
            assert_eq!(f.diagnostics.burnside_dim, 4);
            assert_eq!(f.diagnostics.centralizer_dim, 1);
        }
    }

    #[test]
    fn additive_triple() {
        let pmv: Vec<MultiplicityVector> = vec![MultiplicityVector::new(vec![1, 1]); 3];
        let s = sample_spectrum(&pmv, Mode::Additive, &SampleTarget::generic(), SampleOptions::default()).unwrap();
        let report = search_tuple(
            &ConcreteClass::from_spectrum(&s),
            &SearchOptions {
                restarts: 4,
                ..SearchOptions::default()
            },
        )
        .unwrap();
        assert!(report.converged() >= 1);
        assert!(report.witnesses[0].diagnostics.irreducible());
    }

    #[test]
    fn deterministic_reports() {
        let s = sampled(&[&[1, 1][..]; 4], SampleTarget::generic(), 9);
        let classes = ConcreteClass::from_spectrum(&s);
        let opts = SearchOptions {
            restarts: 4,
            seed: 3,
            ..SearchOptions::default()
        };
        let a = search_tuple(&classes, &opts).unwrap();
        let b = search_tuple(
            &classes,
            &SearchOptions {
                threads: Some(1),
                ..opts
            },
        )
        .unwrap();
        assert_eq!(a.outcomes, b.outcomes);
        assert_eq!(a.witnesses.len(), b.witnesses.len());
        for (x, y) in a.witnesses.iter().zip(&b.witnesses) {
            assert_eq!(x.witness.matrices, y.witness.matrices);
        }
    }

    #[test]
    fn invalid_spectrum_rejected() {
        let s = Spectrum::from_triples(
            Mode::Multiplicative,
            &[&[(1, 3, 1), (1, 5, 1)], &[(1, 7, 1), (1, 11, 1)]],
        )
        .unwrap();
        assert!(matches!(
            search_tuple(&ConcreteClass::from_spectrum(&s), &SearchOptions::default()),
            Err(WitnessError::SpectrumInvalid(_))
        ));
    }

    #[test]
    fn histogram_buckets() {
        let s = sampled(&[&[1, 1][..]; 4], SampleTarget::generic(), 5);
        let report = search_tuple(
            &ConcreteClass::from_spectrum(&s),
            &SearchOptions {
                restarts: 3,
                ..SearchOptions::default()
            },
        )
        .unwrap();
        let h = report.histogram();
        assert_eq!(h.iter().map(|b| b.count).sum::<usize>(), 3);
        assert_eq!(h[0].label, "<1e-10");
    }
}
