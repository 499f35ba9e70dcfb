use crate::canonical::CanonicalSet;
use crate::command::conflicts;
use crate::refluence::check_jointly_refluent;

use super::union::{sorted_union, UnionCommand};
use super::{MergeError, Merger};

type Bits = Vec<u64>;

fn bits(n: usize) -> Bits {
    vec![0; n.div_ceil(64)]
}

fn set(b: &mut Bits, i: usize) {
    b[i / 64] |= 1 << (i % 64);
}

fn clear(b: &mut Bits, i: usize) {
    b[i / 64] &= !(1 << (i % 64));
}

fn ones(b: &Bits) -> impl Iterator<Item = usize> + '_ {
    b.iter().enumerate().flat_map(|(w, &word)| {
        (0..64).filter(move |k| word >> k & 1 == 1).map(move |k| w * 64 + k)
    })
}

fn is_zero(b: &Bits) -> bool {
    b.iter().all(|&w| w == 0)
}

fn and(a: &Bits, b: &Bits) -> Bits {
    a.iter().zip(b).map(|(x, y)| x & y).collect()
}

fn and_not(a: &Bits, b: &Bits) -> Bits {
    a.iter().zip(b).map(|(x, y)| x & !y).collect()
}

fn count(b: &Bits) -> u32 {
    b.iter().map(|w| w.count_ones()).sum()
}

/// Explicit conflict graph over the distinct commands of a union.
#[derive(Debug, Clone)]
pub struct ConflictGraph {
    vertices: Vec<UnionCommand>,
    adjacency: Vec<Bits>,
}

impl ConflictGraph {
    /// Quadratic construction.
    pub fn new(sets: &[CanonicalSet]) -> Self {
        let vertices = sorted_union(sets);
        let n = vertices.len();
        let mut adjacency = vec![bits(n); n];
        for i in 0..n {
            for j in i + 1..n {
                if conflicts(&vertices[i].cmd, &vertices[j].cmd) {
                    set(&mut adjacency[i], j);
                    set(&mut adjacency[j], i);
                }
            }
        }
        ConflictGraph { vertices, adjacency }
    }

    pub fn vertices(&self) -> &[UnionCommand] {
        &self.vertices
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.adjacency[i][j / 64] >> (j % 64) & 1 == 1
    }

    pub fn neighbors(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        ones(&self.adjacency[i])
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(|b| count(b) as usize).sum::<usize>() / 2
    }

    /// Maximal independent sets, as vertex index lists.
    pub fn maximal_independent_sets(&self, limit: Option<usize>) -> Vec<Vec<usize>> {
        let n = self.len();
        let mut all = bits(n);
        for i in 0..n {
            set(&mut all, i);
        }
        // Non-neighbours, excluding the vertex itself.
        let compatible: Vec<Bits> = (0..n)
            .map(|i| {
                let mut b = and_not(&all, &self.adjacency[i]);
                clear(&mut b, i);
                b
            })
            .collect();
        let mut out = Vec::new();
        let mut current = Vec::new();
        bron_kerbosch(&compatible, &mut current, all, bits(n), &mut out, limit);
        out
    }
}

fn bron_kerbosch(
    nbr: &[Bits],
    current: &mut Vec<usize>,
    p: Bits,
    mut x: Bits,
    out: &mut Vec<Vec<usize>>,
    limit: Option<usize>,
) {
    if limit.is_some_and(|l| out.len() >= l) {
        return;
    }
    if is_zero(&p) && is_zero(&x) {
        out.push(current.clone());
        return;
    }
    let pivot = ones(&p).chain(ones(&x)).max_by_key(|&u| count(&and(&p, &nbr[u]))).expect("non-empty");
    let mut p = p;
    let candidates: Vec<usize> = ones(&and_not(&p, &nbr[pivot])).collect();
    for v in candidates {
        current.push(v);
        bron_kerbosch(nbr, current, and(&p, &nbr[v]), and(&x, &nbr[v]), out, limit);
        current.pop();
        clear(&mut p, v);
        set(&mut x, v);
    }
}

/// All mergers, as maximal conflict-free subsets of the union. Sorted by
/// their command lists; at most `limit` when given.
pub fn enumerate_mergers(sets: &[CanonicalSet], limit: Option<usize>) -> Result<Vec<Merger>, MergeError> {
    check_jointly_refluent(sets)?;
    let graph = ConflictGraph::new(sets);
    let mut mergers: Vec<Merger> = graph
        .maximal_independent_sets(limit)
        .into_iter()
        .map(|mut vs| {
            vs.sort_unstable();
            Merger::from_union(vs.iter().map(|&v| &graph.vertices[v]))
        })
        .collect();
    mergers.sort_by(|a, b| a.commands().commands().cmp(b.commands().commands()));
    mergers.dedup_by(|a, b| a.commands() == b.commands());
    Ok(mergers)
}
