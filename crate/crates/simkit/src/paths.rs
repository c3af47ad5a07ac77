use mpr_core::field::rational_to_f64;
use mpr_core::{Builtin, Rational};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::{Binomial, Distribution, Gamma, Normal, Poisson};
use rayon::prelude::*;
use serde::Serialize;

use crate::{Result, SimError};

/// Paths per chunk; each chunk has its own random stream.
pub const CHUNK: usize = 2048;

/// `n_paths x grid.len()` states, row-major by path.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PathBatch {
    pub process: String,
    pub grid: Vec<f64>,
    #[serde(skip)]
    pub exact_grid: Vec<Rational>,
    pub n_paths: usize,
    pub seed: u64,
    #[serde(skip)]
    pub states: Vec<f64>,
}

impl PathBatch {
    pub fn path(&self, i: usize) -> &[f64] {
        let w = self.grid.len();
        &self.states[i * w..(i + 1) * w]
    }

    /// Column index of an exact grid time.
    pub fn index_of(&self, t: &Rational) -> Result<usize> {
        self.exact_grid.iter().position(|g| g == t).ok_or_else(|| SimError::GridMismatch(t.to_string()))
    }

    /// States at one grid time, in path order.
    pub fn column(&self, t: &Rational) -> Result<Vec<f64>> {
        let j = self.index_of(t)?;
        Ok((0..self.n_paths).map(|i| self.path(i)[j]).collect())
    }
}

enum Increment {
    Wiener,
    Poisson(f64),
    Gamma,
    BernoulliJumps(f64),
}

impl Increment {
    fn draw<R: Rng>(&self, dt: f64, rng: &mut R) -> f64 {
        match self {
            Increment::Wiener => Normal::new(0.0, dt.sqrt()).expect("finite dt").sample(rng),
            Increment::Poisson(rate) => Poisson::new(rate * dt).expect("positive mean").sample(rng),
            Increment::Gamma => Gamma::new(dt, 1.0).expect("positive shape").sample(rng),
            Increment::BernoulliJumps(rate) => {
                let jumps: f64 = Poisson::new(rate * dt).expect("positive mean").sample(rng);
                let up = Binomial::new(jumps as u64, 0.5).expect("valid p").sample(rng) as f64;
                2.0 * up - jumps
            }
        }
    }
}

fn chunk_rng(seed: u64, chunk: usize) -> ChaCha12Rng {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(chunk as u64);
    rng
}

/// Simulate `n_paths` paths started at `X_0 = 0` on an ascending grid, with
/// `workers` threads (0 = rayon default).
pub fn sample_paths(
    process: &Builtin,
    grid: &[Rational],
    n_paths: usize,
    seed: u64,
    workers: usize,
) -> Result<PathBatch> {
    if grid.is_empty() {
        return Err(SimError::InvalidGrid("empty grid".into()));
    }
    if grid[0] < Rational::from_integer(0.into()) || grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(SimError::InvalidGrid("times must be nonnegative and strictly increasing".into()));
    }
    if n_paths == 0 {
        return Err(SimError::InvalidParameter("n_paths must be at least 1".into()));
    }
    let rate = |r: &Rational| {
        let v = rational_to_f64(r);
        if v > 0.0 && v.is_finite() {
            Ok(v)
        } else {
            Err(SimError::InvalidParameter(format!("rate {r} must be positive")))
        }
    };
    let inc = match process {
        Builtin::Wiener => Increment::Wiener,
        Builtin::Poisson(l) => Increment::Poisson(rate(l)?),
        Builtin::Gamma => Increment::Gamma,
        Builtin::BernoulliJumps(l) => Increment::BernoulliJumps(rate(l)?),
    };
    let times: Vec<f64> = grid.iter().map(rational_to_f64).collect();
    let steps: Vec<f64> = times.iter().scan(0.0, |prev, &t| Some(t - std::mem::replace(prev, t))).collect();
    let width = times.len();
    let n_chunks = n_paths.div_ceil(CHUNK);

    let run_chunk = |c: usize| -> Vec<f64> {
        let mut rng = chunk_rng(seed, c);
        let rows = CHUNK.min(n_paths - c * CHUNK);
        let mut out = Vec::with_capacity(rows * width);
        for _ in 0..rows {
            let mut x = 0.0;
            for &dt in &steps {
                if dt > 0.0 {
                    x += inc.draw(dt, &mut rng);
                }
                out.push(x);
            }
        }
        out
    };
    let chunks: Vec<Vec<f64>> = with_workers(workers, || (0..n_chunks).into_par_iter().map(run_chunk).collect())?;
    Ok(PathBatch {
        process: process.to_string(),
        grid: times,
        exact_grid: grid.to_vec(),
        n_paths,
        seed,
        states: chunks.concat(),
    })
}

/// Run `f` on a pool of `workers` threads (0 = the global pool).
pub(crate) fn with_workers<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    if workers == 0 {
        return Ok(f());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| SimError::InvalidParameter(e.to_string()))?;
    Ok(pool.install(f))
}
