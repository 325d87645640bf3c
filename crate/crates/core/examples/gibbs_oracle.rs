//! Compare sampler marginals on a tiny corpus with the exact posterior
//! obtained by enumerating every assignment.

use latent_aspects::lda::TrainingState;
use latent_aspects::rng::rng_from_seed;
use latent_aspects::synthetic::exact_posterior_docs;

fn main() -> latent_aspects::Result<()> {
    let docs = vec![vec![0, 1, 1], vec![2, 2, 0], vec![1, 2]];
    let (k, v, alpha, beta) = (2, 3, 2.5, 0.01);
    let exact = exact_posterior_docs(&docs, k, v, alpha, beta)?;
    let co_exact = exact.co_assignment();

    let mut rng = rng_from_seed(5);
    let mut state = TrainingState::new(docs.clone(), k, v, alpha, beta, &mut rng)?;
    for _ in 0..1000 {
        state.sweep(&mut rng);
    }
    let n = docs.iter().map(Vec::len).sum::<usize>();
    let mut together = vec![vec![0.0; n]; n];
    let sweeps = 100_000;
    for _ in 0..sweeps {
        state.sweep(&mut rng);
        let z: Vec<usize> = state.assignments().iter().flatten().copied().collect();
        for i in 0..n {
            for j in 0..n {
                if z[i] == z[j] {
                    together[i][j] += 1.0;
                }
            }
        }
    }
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            worst = worst.max((together[i][j] / sweeps as f64 - co_exact[i][j]).abs());
        }
    }
    println!("{} assignments enumerated", exact.probabilities.len());
    println!("largest co-assignment error after {sweeps} sweeps: {worst:.4}");
    Ok(())
}
