use super::{DcrfProblem, Field, SweepMode};
use crate::error::{Error, Result};
use crate::par;

/// Combined pairwise weights `w_ij = sum_k beta_k kappa_k(i, j)` for `i != j`.
#[derive(Debug, Clone)]
pub enum PairwiseWeights {
    /// Full `N x N` matrix, zero diagonal.
    Dense { n: usize, weights: Vec<f64> },
    /// CSR rows holding only weights at or above a threshold.
    Sparse {
        offsets: Vec<usize>,
        cols: Vec<u32>,
        weights: Vec<f64>,
    },
}

impl PairwiseWeights {
    pub fn build(problem: &DcrfProblem) -> Self {
        let (h, w) = problem.dims();
        let n = h * w;
        let row = |i: usize| -> Vec<f64> {
            (0..n)
                .map(|j| {
                    if i == j {
                        0.0
                    } else {
                        problem
                            .kernels
                            .iter()
                            .filter(|k| k.beta > 0.0)
                            .map(|k| k.beta * k.kernel(&problem.features, i, j))
                            .sum()
                    }
                })
                .collect()
        };
        match problem.truncation {
            None => {
                let rows = par::map_indices(n, row);
                PairwiseWeights::Dense {
                    n,
                    weights: rows.into_iter().flatten().collect(),
                }
            }
            Some(threshold) => {
                let rows = par::map_indices(n, |i| {
                    row(i)
                        .into_iter()
                        .enumerate()
                        .filter(|&(j, v)| j != i && v > 0.0 && v >= threshold)
                        .map(|(j, v)| (j as u32, v))
                        .collect::<Vec<_>>()
                });
                let mut offsets = Vec::with_capacity(n + 1);
                let mut cols = Vec::new();
                let mut weights = Vec::new();
                offsets.push(0);
                for r in rows {
                    for (j, v) in r {
                        cols.push(j);
                        weights.push(v);
                    }
                    offsets.push(cols.len());
                }
                PairwiseWeights::Sparse {
                    offsets,
                    cols,
                    weights,
                }
            }
        }
    }

    #[inline]
    pub fn for_each_in_row(&self, i: usize, mut f: impl FnMut(usize, f64)) {
        match self {
            PairwiseWeights::Dense { n, weights } => {
                for (j, &w) in weights[i * n..(i + 1) * n].iter().enumerate() {
                    if w != 0.0 {
                        f(j, w);
                    }
                }
            }
            PairwiseWeights::Sparse {
                offsets,
                cols,
                weights,
            } => {
                for k in offsets[i]..offsets[i + 1] {
                    f(cols[k] as usize, weights[k]);
                }
            }
        }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let mut out = 0.0;
        match self {
            PairwiseWeights::Dense { n, weights } => out = weights[i * n + j],
            PairwiseWeights::Sparse { .. } => self.for_each_in_row(i, |k, w| {
                if k == j {
                    out = w;
                }
            }),
        }
        out
    }

    pub fn row_sum(&self, i: usize) -> f64 {
        let mut s = 0.0;
        self.for_each_in_row(i, |_, w| s += w);
        s
    }
}

/// Energy of `x` under `problem`. The pairwise sum runs over ordered pairs.
pub fn dcrf_energy(x: &Field, problem: &DcrfProblem) -> Result<f64> {
    let weights = PairwiseWeights::build(problem);
    energy_with(x, problem, &weights)
}

fn energy_with(x: &Field, problem: &DcrfProblem, weights: &PairwiseWeights) -> Result<f64> {
    if x.dims() != problem.dims() {
        return Err(Error::DimensionMismatch {
            expected: problem.dims(),
            actual: x.dims(),
        });
    }
    if x.channels != problem.channels() {
        return Err(Error::invalid("field channel count does not match the problem"));
    }
    let n = x.pixels();
    let mut unary = 0.0;
    for u in &problem.unaries {
        for i in 0..n {
            let a = u.weight.as_slice()[i];
            if a != 0.0 {
                let d2: f64 = x.at(i).iter().zip(u.target.at(i)).map(|(p, t)| (p - t) * (p - t)).sum();
                unary += a * d2;
            }
        }
    }
    let pair_rows = par::map_indices(n, |i| {
        let xi = x.at(i);
        let mut s = 0.0;
        weights.for_each_in_row(i, |j, w| {
            let d2: f64 = xi.iter().zip(x.at(j)).map(|(a, b)| (a - b) * (a - b)).sum();
            s += w * d2;
        });
        s
    });
    Ok(unary + pair_rows.iter().sum::<f64>())
}

/// Result of a solve. `field` is the raw minimizer, before any
/// renormalization.
#[derive(Debug, Clone)]
pub struct SolveOutcome {
    pub field: Field,
    pub sweeps: usize,
    pub converged: bool,
    pub max_update: f64,
    /// Energy at the start and after every sweep; empty unless traced.
    pub energies: Vec<f64>,
}

struct Prepared {
    weights: PairwiseWeights,
    /// `sum_u alpha_u,i t_u,i` per pixel and channel.
    unary_num: Vec<f64>,
    /// `sum_u alpha_u,i` per pixel.
    unary_den: Vec<f64>,
    row_sums: Vec<f64>,
}

fn prepare(problem: &DcrfProblem) -> Prepared {
    let weights = PairwiseWeights::build(problem);
    let (h, w) = problem.dims();
    let n = h * w;
    let ch = problem.channels();
    let mut unary_num = vec![0.0; n * ch];
    let mut unary_den = vec![0.0; n];
    for u in &problem.unaries {
        for i in 0..n {
            let a = u.weight.as_slice()[i];
            unary_den[i] += a;
            for (k, t) in u.target.at(i).iter().enumerate() {
                unary_num[i * ch + k] += a * t;
            }
        }
    }
    let row_sums = (0..n).map(|i| weights.row_sum(i)).collect();
    Prepared {
        weights,
        unary_num,
        unary_den,
        row_sums,
    }
}

/// Stationarity update for pixel `i` given the current iterate `x`.
#[inline]
fn update(prep: &Prepared, x: &[f64], ch: usize, i: usize, out: &mut [f64]) -> bool {
    let s = prep.row_sums[i];
    let den = prep.unary_den[i] + 2.0 * s;
    if s == 0.0 || den == 0.0 {
        return false;
    }
    out.copy_from_slice(&prep.unary_num[i * ch..(i + 1) * ch]);
    prep.weights.for_each_in_row(i, |j, w| {
        for k in 0..ch {
            out[k] += 2.0 * w * x[j * ch + k];
        }
    });
    out.iter_mut().for_each(|v| *v /= den);
    true
}

/// Runs the solver, recording the energy after every sweep when `trace` is
/// set.
pub fn dcrf_solve_traced(problem: &DcrfProblem, trace: bool) -> Result<SolveOutcome> {
    problem.validate()?;
    let prep = prepare(problem);
    let ch = problem.channels();
    let mut field = problem.unary_solution();
    let n = field.pixels();
    let mut energies = Vec::new();
    if trace {
        energies.push(energy_with(&field, problem, &prep.weights)?);
    }
    let mut sweeps = 0;
    let mut converged = false;
    let mut max_update = f64::INFINITY;
    let mut scratch = vec![0.0; ch];
    while sweeps < problem.iterations {
        max_update = 0.0;
        match problem.mode {
            SweepMode::GaussSeidel => {
                for i in 0..n {
                    if update(&prep, &field.data, ch, i, &mut scratch) {
                        let cur = &mut field.data[i * ch..(i + 1) * ch];
                        for (c, v) in cur.iter_mut().zip(&scratch) {
                            max_update = f64::max(max_update, (*c - v).abs());
                            *c = *v;
                        }
                    }
                }
            }
            SweepMode::Jacobi { damping } => {
                let old = &field.data;
                let next: Vec<Vec<f64>> = par::map_indices(n, |i| {
                    let mut out = vec![0.0; ch];
                    if update(&prep, old, ch, i, &mut out) {
                        out.iter_mut()
                            .zip(&old[i * ch..(i + 1) * ch])
                            .for_each(|(v, o)| *v = (1.0 - damping) * o + damping * *v);
                    } else {
                        out.copy_from_slice(&old[i * ch..(i + 1) * ch]);
                    }
                    out
                });
                for (i, v) in next.into_iter().enumerate() {
                    for (k, nv) in v.into_iter().enumerate() {
                        let c = &mut field.data[i * ch + k];
                        max_update = f64::max(max_update, (*c - nv).abs());
                        *c = nv;
                    }
                }
            }
        }
        sweeps += 1;
        if trace {
            energies.push(energy_with(&field, problem, &prep.weights)?);
        }
        if max_update < problem.tolerance {
            converged = true;
            break;
        }
    }
    Ok(SolveOutcome {
        field,
        sweeps,
        converged,
        max_update,
        energies,
    })
}

/// Approximate minimizer of [`dcrf_energy`]; three-channel problems flagged
/// for renormalization come back as unit vectors.
pub fn dcrf_solve(problem: &DcrfProblem) -> Result<Field> {
    let out = dcrf_solve_traced(problem, false)?;
    if problem.renormalize && out.field.channels == 3 {
        Ok(Field::from_vectors(&out.field.to_normals()?))
    } else {
        Ok(out.field)
    }
}
