//! Exact sampling of `M(n; L)` and isolated-node censuses.
//!
//! Draw layout within a replication stream: the `n * L` attribute draws come
//! first (node-major), then one uniform per unordered pair `(u, v)`, `u < v`,
//! in row-major pair order. Because the stream is counter-based, the census
//! mode evaluates only the pairs it needs and still sees exactly the graph the
//! full sampler would have built from the same stream.

use std::io::{self, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{AttributeVector, MagParams};
use crate::numerics::pairwise_sum;
use crate::rng::{Purpose, Stream};

/// Largest node count for which [`sample_graph`] stores a full adjacency.
pub const MAX_FULL_GRAPH_NODES: usize = 1 << 16;

const Z_95: f64 = 1.959_963_984_540_054;

/// Index of the unordered pair `{u, v}` in row-major order over `u < v`.
#[inline]
pub fn pair_index(u: usize, v: usize, n: usize) -> u64 {
    let (u, v) = if u < v { (u, v) } else { (v, u) };
    debug_assert!(v < n && u != v);
    let (u, v, n) = (u as u64, v as u64, n as u64);
    u * (2 * n - u - 1) / 2 + (v - u - 1)
}

/// `Q_L` as a function of (shared ones, mismatches), tabulated for small `L`.
#[derive(Debug, Clone)]
pub(crate) struct EdgeKernel {
    levels: usize,
    ln_q11: f64,
    ln_q10: f64,
    ln_q00: f64,
    table: Option<Vec<f64>>,
}

impl EdgeKernel {
    const TABLE_MAX_LEVELS: usize = 2048;

    pub(crate) fn new(params: &MagParams) -> Self {
        let q = params.q();
        let mut kernel = Self {
            levels: params.levels(),
            ln_q11: q.q11().ln(),
            ln_q10: q.q10().ln(),
            ln_q00: q.q00().ln(),
            table: None,
        };
        if kernel.levels <= Self::TABLE_MAX_LEVELS {
            let width = kernel.levels + 1;
            let mut table = vec![0.0; width * width];
            for common in 0..=kernel.levels {
                for mismatches in 0..=kernel.levels - common {
                    table[common * width + mismatches] = kernel.compute(common, mismatches);
                }
            }
            kernel.table = Some(table);
        }
        kernel
    }

    // Same expression as `model::ln_q_l_of_type`, so sampled edge
    // probabilities are bit-identical to `model::q_l`.
    fn compute(&self, common: usize, mismatches: usize) -> f64 {
        let j00 = self.levels - common - mismatches;
        (common as f64 * self.ln_q11 + mismatches as f64 * self.ln_q10 + j00 as f64 * self.ln_q00)
            .exp()
    }

    #[inline]
    pub(crate) fn value(&self, common: usize, mismatches: usize) -> f64 {
        match &self.table {
            Some(t) => t[common * (self.levels + 1) + mismatches],
            None => self.compute(common, mismatches),
        }
    }
}

/// Attribute vectors drawn from the head of `stream`.
pub fn sample_attributes(params: &MagParams, stream: &Stream) -> Vec<AttributeVector> {
    let (n, levels) = (params.n(), params.levels());
    let mu1 = params.pmf().mu1();
    (0..n)
        .map(|u| {
            let base = (u * levels) as u64;
            AttributeVector::from_bits((0..levels).map(|l| stream.bernoulli_at(base + l as u64, mu1)))
        })
        .collect()
}

/// Decides pair adjacency for one replication.
struct PairOracle<'a> {
    n: usize,
    stream: &'a Stream,
    offset: u64,
    attributes: &'a [AttributeVector],
    kernel: EdgeKernel,
}

impl<'a> PairOracle<'a> {
    fn new(params: &MagParams, stream: &'a Stream, attributes: &'a [AttributeVector]) -> Self {
        Self {
            n: params.n(),
            stream,
            offset: (params.n() * params.levels()) as u64,
            attributes,
            kernel: EdgeKernel::new(params),
        }
    }

    #[inline]
    fn edge(&self, u: usize, v: usize) -> bool {
        let (a, b) = (&self.attributes[u], &self.attributes[v]);
        let common = a.common_ones(b);
        let mismatches = a.ones() + b.ones() - 2 * common;
        let p = self.kernel.value(common, mismatches);
        // Weak inequality: a uniform equal to the threshold creates the edge.
        self.stream.uniform_at(self.offset + pair_index(u, v, self.n)) <= p
    }
}

/// A sampled realization: attributes plus a symmetric, loop-free adjacency.
#[derive(Debug, Clone, PartialEq)]
pub struct MagGraph {
    n: usize,
    levels: usize,
    attributes: Vec<AttributeVector>,
    words_per_row: usize,
    rows: Vec<u64>,
    degrees: Vec<usize>,
}

impl MagGraph {
    /// An edgeless graph on the given attributes.
    pub fn empty(levels: usize, attributes: Vec<AttributeVector>) -> Self {
        let n = attributes.len();
        assert!(attributes.iter().all(|a| a.len() == levels));
        let words_per_row = n.div_ceil(64);
        Self {
            n,
            levels,
            attributes,
            words_per_row,
            rows: vec![0; n * words_per_row],
            degrees: vec![0; n],
        }
    }

    /// Inserts the undirected edge `{u, v}`; self-loops are ignored.
    pub fn add_edge(&mut self, u: usize, v: usize) {
        if u == v || self.has_edge(u, v) {
            return;
        }
        self.rows[u * self.words_per_row + v / 64] |= 1 << (v % 64);
        self.rows[v * self.words_per_row + u / 64] |= 1 << (u % 64);
        self.degrees[u] += 1;
        self.degrees[v] += 1;
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.rows[u * self.words_per_row + v / 64] >> (v % 64) & 1 == 1
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn levels(&self) -> usize {
        self.levels
    }

    pub fn attributes(&self) -> &[AttributeVector] {
        &self.attributes
    }

    pub fn degree(&self, u: usize) -> usize {
        self.degrees[u]
    }

    pub fn edge_count(&self) -> usize {
        self.degrees.iter().sum::<usize>() / 2
    }

    pub fn neighbors(&self, u: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.n).filter(move |&v| self.has_edge(u, v))
    }

    /// Edges `(u, v)` with `u < v` in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.n).flat_map(move |u| ((u + 1)..self.n).filter(move |&v| self.has_edge(u, v)).map(move |v| (u, v)))
    }

    /// `"u v"` lines, 0-based, `u < v`.
    pub fn write_edge_list<W: Write>(&self, mut out: W) -> io::Result<()> {
        for (u, v) in self.edges() {
            writeln!(out, "{u} {v}")?;
        }
        Ok(())
    }

    /// One row of space-separated 0/1 attribute values per node.
    pub fn write_attribute_matrix<W: Write>(&self, mut out: W) -> io::Result<()> {
        for a in &self.attributes {
            let row: Vec<&str> = a.bits().map(|b| if b { "1" } else { "0" }).collect();
            writeln!(out, "{}", row.join(" "))?;
        }
        Ok(())
    }
}

/// Samples a full realization of `M(n; L)` from `stream`.
pub fn sample_graph(params: &MagParams, stream: &Stream) -> Result<MagGraph> {
    let n = params.n();
    if n > MAX_FULL_GRAPH_NODES {
        return Err(Error::InvalidSize {
            name: "n",
            value: n,
            reason: "full-graph mode stores at most 2^16 nodes; use the census mode",
        });
    }
    let attributes = sample_attributes(params, stream);
    let mut edges = Vec::new();
    {
        let oracle = PairOracle::new(params, stream, &attributes);
        for u in 0..n {
            for v in (u + 1)..n {
                if oracle.edge(u, v) {
                    edges.push((u, v));
                }
            }
        }
    }
    let mut graph = MagGraph::empty(params.levels(), attributes);
    for (u, v) in edges {
        graph.add_edge(u, v);
    }
    Ok(graph)
}

/// Isolated nodes, in total and split by the number of ones in their attributes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IsolationCensus {
    pub total: usize,
    pub by_level: Vec<usize>,
}

impl IsolationCensus {
    fn from_flags(levels: usize, attributes: &[AttributeVector], isolated: impl Iterator<Item = bool>) -> Self {
        let mut by_level = vec![0; levels + 1];
        let mut total = 0;
        for (a, iso) in attributes.iter().zip(isolated) {
            if iso {
                by_level[a.ones()] += 1;
                total += 1;
            }
        }
        Self { total, by_level }
    }
}

pub fn isolation_census(g: &MagGraph) -> IsolationCensus {
    IsolationCensus::from_flags(g.levels, &g.attributes, g.degrees.iter().map(|&d| d == 0))
}

/// Node indices ordered by ascending count of ones (stable).
fn by_ascending_ones(attributes: &[AttributeVector], levels: usize) -> Vec<usize> {
    let mut buckets = vec![Vec::new(); levels + 1];
    for (u, a) in attributes.iter().enumerate() {
        buckets[a.ones()].push(u);
    }
    buckets.into_iter().flatten().collect()
}

/// Census of the graph [`sample_graph`] would build from `stream`, without
/// storing it. Each node still lacking a neighbor scans candidates until one
/// is found, so memory is O(n) and only a fraction of pairs is evaluated.
pub fn census_streaming(params: &MagParams, stream: &Stream) -> IsolationCensus {
    let attributes = sample_attributes(params, stream);
    let oracle = PairOracle::new(params, stream, &attributes);
    let order = by_ascending_ones(&attributes, params.levels());
    let mut has_neighbor = vec![false; params.n()];
    for &u in &order {
        if has_neighbor[u] {
            continue;
        }
        // High-count nodes have the largest edge probabilities.
        if let Some(&v) = order.iter().rev().find(|&&v| v != u && oracle.edge(u, v)) {
            has_neighbor[u] = true;
            has_neighbor[v] = true;
        }
    }
    IsolationCensus::from_flags(params.levels(), &attributes, has_neighbor.iter().map(|&h| !h))
}

/// Whether the graph [`sample_graph`] would build from `stream` has an
/// isolated node; stops at the first one found.
pub fn has_isolated_node(params: &MagParams, stream: &Stream) -> bool {
    let attributes = sample_attributes(params, stream);
    let oracle = PairOracle::new(params, stream, &attributes);
    let order = by_ascending_ones(&attributes, params.levels());
    let mut has_neighbor = vec![false; params.n()];
    for &u in &order {
        if has_neighbor[u] {
            continue;
        }
        match order.iter().rev().find(|&&v| v != u && oracle.edge(u, v)) {
            Some(&v) => {
                has_neighbor[u] = true;
                has_neighbor[v] = true;
            }
            None => return true,
        }
    }
    false
}

/// Stream of replication `index` under `seed`.
pub fn replication_stream(seed: u64, index: u64) -> Stream {
    Stream::new(seed).substream(Purpose::Replication, index)
}

/// Runs `f` once per replication on its own substream; results are in
/// replication order whatever the thread count.
pub fn replicate<T, F>(replications: usize, seed: u64, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(&Stream) -> T + Sync,
{
    (0..replications as u64)
        .into_par_iter()
        .map(|r| f(&replication_stream(seed, r)))
        .collect()
}

/// Monte Carlo estimate of a probability.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateResult {
    pub replications: usize,
    pub p_hat: f64,
    pub std_err: f64,
    /// Wilson score interval.
    pub ci95: (f64, f64),
}

impl EstimateResult {
    pub fn from_successes(successes: usize, replications: usize) -> Self {
        let r = replications as f64;
        let p_hat = successes as f64 / r;
        let std_err = (p_hat * (1.0 - p_hat) / r).sqrt();
        let z2 = Z_95 * Z_95;
        let denom = 1.0 + z2 / r;
        let centre = (p_hat + z2 / (2.0 * r)) / denom;
        let half = Z_95 * (p_hat * (1.0 - p_hat) / r + z2 / (4.0 * r * r)).sqrt() / denom;
        Self {
            replications,
            p_hat,
            std_err,
            ci95: ((centre - half).max(0.0), (centre + half).min(1.0)),
        }
    }
}

/// Estimates `P[M(n; L) has no isolated nodes]`.
pub fn estimate_prob_no_isolated(params: &MagParams, replications: usize, seed: u64) -> Result<EstimateResult> {
    if replications == 0 {
        return Err(Error::InvalidSize {
            name: "replications",
            value: 0,
            reason: "at least one replication is required",
        });
    }
    let outcomes = replicate(replications, seed, |s| !has_isolated_node(params, s));
    let successes = outcomes.iter().filter(|&&ok| ok).count();
    Ok(EstimateResult::from_successes(successes, replications))
}

/// Sample moments of the isolated-node counts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentEstimate {
    pub replications: usize,
    pub mean_i: f64,
    pub se_i: f64,
    pub mean_i_sq: f64,
    pub se_i_sq: f64,
    pub per_level_means: Vec<f64>,
    pub per_level_se: Vec<f64>,
}

fn mean_and_se(xs: &[f64]) -> (f64, f64) {
    let r = xs.len() as f64;
    let mean = pairwise_sum(xs) / r;
    let dev: Vec<f64> = xs.iter().map(|x| (x - mean) * (x - mean)).collect();
    let var = pairwise_sum(&dev) / (r - 1.0);
    (mean, (var / r).sqrt())
}

/// Estimates `E[I]`, `E[I^2]` and each `E[I^(l)]` by simulation.
pub fn estimate_moments_mc(params: &MagParams, replications: usize, seed: u64) -> Result<MomentEstimate> {
    if replications < 2 {
        return Err(Error::InvalidSize {
            name: "replications",
            value: replications,
            reason: "at least two replications are required for standard errors",
        });
    }
    let censuses = replicate(replications, seed, |s| census_streaming(params, s));
    let totals: Vec<f64> = censuses.iter().map(|c| c.total as f64).collect();
    let squares: Vec<f64> = totals.iter().map(|t| t * t).collect();
    let (mean_i, se_i) = mean_and_se(&totals);
    let (mean_i_sq, se_i_sq) = mean_and_se(&squares);
    let (per_level_means, per_level_se) = (0..=params.levels())
        .map(|l| {
            let xs: Vec<f64> = censuses.iter().map(|c| c.by_level[l] as f64).collect();
            mean_and_se(&xs)
        })
        .unzip();
    Ok(MomentEstimate {
        replications,
        mean_i,
        se_i,
        mean_i_sq,
        se_i_sq,
        per_level_means,
        per_level_se,
    })
}
