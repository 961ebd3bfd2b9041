//! Instance generators: the path constructions used in the lower-bound
//! examples and seeded random graphs.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{GameInstance, GameKind, Vertex};

/// Uniform path `v0 – v1 – … – v_{n−1}`, all weights 1.
pub fn gen_path_uniform(n: usize) -> Result<GameInstance> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!("path needs n >= 2, got {n}")));
    }
    Ok(path_with_weights(vec![1.0; n - 1]))
}

fn path_with_weights(w: Vec<f64>) -> GameInstance {
    let n = w.len() + 1;
    let edges = w
        .into_iter()
        .enumerate()
        .map(|(i, w)| (Vertex::Agent(i), Vertex::Agent(i + 1), w));
    GameInstance::new(GameKind::Matching, n, edges)
}

fn check_odd(n: usize) -> Result<()> {
    if n >= 5 && n % 2 == 1 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("n must be odd and at least 5, got {n}")))
    }
}

/// Uniform path and its copy with the first and last edge set to 0.
pub fn gen_example1_pair(n: usize) -> Result<(GameInstance, GameInstance)> {
    check_odd(n)?;
    let base = gen_path_uniform(n)?;
    let mut w = vec![1.0; n - 1];
    w[0] = 0.0;
    w[n - 2] = 0.0;
    let other = base.with_weights(w)?;
    Ok((base, other))
}

/// Uniform path and its copy with the second edge raised to `1 + delta`.
pub fn gen_theorem3_pair(n: usize, delta: f64) -> Result<(GameInstance, GameInstance)> {
    check_odd(n)?;
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::InvalidParameter(format!("delta must be positive, got {delta}")));
    }
    let base = gen_path_uniform(n)?;
    let other = base.perturbed(1, delta)?;
    Ok((base, other))
}

/// Seeded Erdős–Rényi graph with weights uniform in `(0, w_max]`. Spanning
/// tree games always get every root edge.
pub fn gen_random(kind: GameKind, n: usize, edge_prob: f64, w_max: f64, seed: u64) -> Result<GameInstance> {
    if n == 0 {
        return Err(Error::InvalidParameter("n must be at least 1".into()));
    }
    if !(0.0..=1.0).contains(&edge_prob) {
        return Err(Error::InvalidParameter(format!("edge probability must lie in [0, 1], got {edge_prob}")));
    }
    if !(w_max > 0.0 && w_max.is_finite()) {
        return Err(Error::InvalidParameter(format!("w_max must be positive, got {w_max}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let weight = |rng: &mut ChaCha8Rng| w_max * (1.0 - rng.gen::<f64>());
    let mut edges = Vec::new();
    if kind == GameKind::MinSpanningTree {
        for v in 0..n {
            edges.push((Vertex::Root, Vertex::Agent(v), weight(&mut rng)));
        }
    }
    for u in 0..n {
        for v in u + 1..n {
            if rng.gen_bool(edge_prob) {
                edges.push((Vertex::Agent(u), Vertex::Agent(v), weight(&mut rng)));
            }
        }
    }
    GameInstance::try_new(kind, n, edges)
}

/// A named generator with its parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "generator", rename_all = "snake_case")]
pub enum InstanceSpec {
    PathUniform { n: usize },
    Example1Pair { n: usize },
    Theorem3Pair { n: usize, delta: f64 },
    Random { kind: GameKind, n: usize, edge_prob: f64, w_max: f64, seed: u64 },
}

impl InstanceSpec {
    /// The generated instances: one for single generators, base then
    /// perturbed for pairs.
    pub fn build(&self) -> Result<Vec<GameInstance>> {
        Ok(match *self {
            InstanceSpec::PathUniform { n } => vec![gen_path_uniform(n)?],
            InstanceSpec::Example1Pair { n } => {
                let (a, b) = gen_example1_pair(n)?;
                vec![a, b]
            }
            InstanceSpec::Theorem3Pair { n, delta } => {
                let (a, b) = gen_theorem3_pair(n, delta)?;
                vec![a, b]
            }
            InstanceSpec::Random { kind, n, edge_prob, w_max, seed } => {
                vec![gen_random(kind, n, edge_prob, w_max, seed)?]
            }
        })
    }
}
