//! Undirected simple graph in compressed sparse row form.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use ndarray::{Array2, ArrayView2, Axis};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::real::Real;

/// Immutable undirected graph. Every edge is stored in both rows and each
/// row's neighbours are strictly increasing.
#[derive(Debug, Clone)]
pub struct SparseGraph {
    n: usize,
    row_offsets: Vec<usize>,
    col_indices: Vec<u32>,
    degrees: Vec<f64>,
    m: usize,
}

/// What was dropped while building a graph from a raw edge list.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct EdgeStats {
    /// Edge records read, before any cleanup.
    pub raw_edges: usize,
    pub duplicates_dropped: usize,
    pub self_loops_dropped: usize,
}

/// Mapping between external node ids (as found in input files) and dense
/// internal ids `0..n`. External ids are assigned internal ids in ascending
/// order, so an input already numbered `0..n` maps to itself.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IdMap {
    external: Vec<u64>,
    internal: BTreeMap<u64, usize>,
}

impl IdMap {
    pub fn from_external(mut ids: Vec<u64>) -> Self {
        ids.sort_unstable();
        ids.dedup();
        let internal = ids.iter().enumerate().map(|(i, &e)| (e, i)).collect();
        IdMap {
            external: ids,
            internal,
        }
    }

    /// Keeps the given row order: row `r` has external id `ids[r]`.
    pub fn from_rows(ids: Vec<u64>) -> Result<Self> {
        let mut internal = BTreeMap::new();
        for (i, &e) in ids.iter().enumerate() {
            if internal.insert(e, i).is_some() {
                return Err(Error::invalid(format!("external id {e} appears twice")));
            }
        }
        Ok(IdMap {
            external: ids,
            internal,
        })
    }

    pub fn identity(n: usize) -> Self {
        Self::from_external((0..n as u64).collect())
    }

    pub fn len(&self) -> usize {
        self.external.len()
    }

    pub fn is_empty(&self) -> bool {
        self.external.is_empty()
    }

    pub fn external(&self, internal: usize) -> u64 {
        self.external[internal]
    }

    pub fn internal(&self, external: u64) -> Option<usize> {
        self.internal.get(&external).copied()
    }

    pub fn externals(&self) -> &[u64] {
        &self.external
    }
}

impl SparseGraph {
    /// Builds a graph over nodes `0..n` from an undirected edge list.
    /// Self-loops and repeated edges (in either orientation) are dropped
    /// and counted.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<(Self, EdgeStats)> {
        if n > u32::MAX as usize {
            return Err(Error::invalid(format!("{n} nodes exceeds the u32 index range")));
        }
        let mut stats = EdgeStats {
            raw_edges: edges.len(),
            ..Default::default()
        };
        let mut keyed: Vec<(u32, u32)> = Vec::with_capacity(edges.len());
        for &(a, b) in edges {
            for node in [a, b] {
                if node >= n {
                    return Err(Error::NodeOutOfRange { node, n });
                }
            }
            if a == b {
                stats.self_loops_dropped += 1;
                continue;
            }
            keyed.push((a.min(b) as u32, a.max(b) as u32));
        }
        keyed.sort_unstable();
        let before = keyed.len();
        keyed.dedup();
        stats.duplicates_dropped = before - keyed.len();

        let m = keyed.len();
        if m == 0 {
            return Err(Error::EmptyGraph);
        }

        let mut counts = vec![0usize; n];
        for &(a, b) in &keyed {
            counts[a as usize] += 1;
            counts[b as usize] += 1;
        }
        let mut row_offsets = Vec::with_capacity(n + 1);
        row_offsets.push(0);
        for c in &counts {
            row_offsets.push(row_offsets.last().unwrap() + c);
        }
        let mut cursor = row_offsets[..n].to_vec();
        let mut col_indices = vec![0u32; 2 * m];
        // Two passes over the sorted (min, max) list: the first writes every
        // row's smaller neighbours in ascending order, the second appends the
        // larger ones, so each row ends up strictly increasing.
        for &(a, b) in &keyed {
            col_indices[cursor[b as usize]] = a;
            cursor[b as usize] += 1;
        }
        for &(a, b) in &keyed {
            col_indices[cursor[a as usize]] = b;
            cursor[a as usize] += 1;
        }
        let degrees = counts.iter().map(|&c| c as f64).collect();
        let graph = SparseGraph {
            n,
            row_offsets,
            col_indices,
            degrees,
            m,
        };
        debug_assert!(graph.validate().is_ok());
        Ok((graph, stats))
    }

    /// Checks every structural invariant. Used by tests and after
    /// deserialization.
    pub fn validate(&self) -> Result<()> {
        if self.row_offsets.len() != self.n + 1 || self.degrees.len() != self.n {
            return Err(Error::invalid("CSR arrays do not match node count"));
        }
        if *self.row_offsets.last().unwrap() != self.col_indices.len()
            || self.col_indices.len() != 2 * self.m
        {
            return Err(Error::invalid("CSR column array does not hold 2m entries"));
        }
        for i in 0..self.n {
            let row = self.neighbors(i);
            if row.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::invalid(format!("row {i} is not strictly increasing")));
            }
            if self.degrees[i] != row.len() as f64 {
                return Err(Error::invalid(format!("degree of node {i} is stale")));
            }
            for &j in row {
                let j = j as usize;
                if j == i {
                    return Err(Error::invalid(format!("self-loop at node {i}")));
                }
                if self.neighbors(j).binary_search(&(i as u32)).is_err() {
                    return Err(Error::invalid(format!("edge ({i}, {j}) is not symmetric")));
                }
            }
        }
        Ok(())
    }

    /// Loads a whitespace-separated edge list. Node ids are remapped to
    /// `0..n` in ascending external order. With `skip_comments`, lines
    /// starting with `#` are ignored; otherwise they are parse errors.
    pub fn load_edge_list(
        path: impl AsRef<Path>,
        skip_comments: bool,
    ) -> Result<(Self, IdMap, EdgeStats)> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let mut raw: Vec<(u64, u64)> = Vec::new();
        for (lineno, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|e| Error::io(path, e))?;
            let trimmed = line.trim();
            if trimmed.is_empty() {
                continue;
            }
            if skip_comments && trimmed.starts_with('#') {
                continue;
            }
            let parse_err = |message: String| Error::Parse {
                path: path.to_path_buf(),
                line: lineno + 1,
                message,
            };
            let mut fields = trimmed.split_whitespace();
            let mut next_id = || -> Result<u64> {
                let field = fields
                    .next()
                    .ok_or_else(|| parse_err("expected two node ids".into()))?;
                field
                    .parse::<u64>()
                    .map_err(|_| parse_err(format!("invalid node id {field:?}")))
            };
            let a = next_id()?;
            let b = next_id()?;
            raw.push((a, b));
        }
        let ids = IdMap::from_external(raw.iter().flat_map(|&(a, b)| [a, b]).collect());
        let edges: Vec<(usize, usize)> = raw
            .iter()
            .map(|&(a, b)| (ids.internal(a).unwrap(), ids.internal(b).unwrap()))
            .collect();
        let (graph, stats) = Self::from_edges(ids.len(), &edges)?;
        Ok((graph, ids, stats))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Undirected edge count.
    pub fn m(&self) -> usize {
        self.m
    }

    pub fn degrees(&self) -> &[f64] {
        &self.degrees
    }

    pub fn row_offsets(&self) -> &[usize] {
        &self.row_offsets
    }

    pub fn col_indices(&self) -> &[u32] {
        &self.col_indices
    }

    #[inline]
    pub fn neighbors(&self, i: usize) -> &[u32] {
        &self.col_indices[self.row_offsets[i]..self.row_offsets[i + 1]]
    }

    /// Mean degree `2m / n`.
    pub fn average_degree(&self) -> f64 {
        2.0 * self.m as f64 / self.n as f64
    }

    /// Iterates each undirected edge once as `(i, j)` with `i < j`.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.n).flat_map(move |i| {
            self.neighbors(i)
                .iter()
                .map(move |&j| (i, j as usize))
                .filter(|&(i, j)| i < j)
        })
    }

    /// `A · X` in one pass over the CSR rows.
    pub fn spmv<T: Real>(&self, x: ArrayView2<'_, T>) -> Result<Array2<T>> {
        let mut out = Array2::zeros(x.raw_dim());
        self.spmv_into(x, &mut out)?;
        Ok(out)
    }

    /// `out = A · X`. Rows are independent and each row sums its neighbours
    /// left to right, so the result does not depend on the thread count.
    pub fn spmv_into<T: Real>(&self, x: ArrayView2<'_, T>, out: &mut Array2<T>) -> Result<()> {
        if x.nrows() != self.n {
            return Err(Error::shape(
                format!("{} rows", self.n),
                format!("{} rows", x.nrows()),
            ));
        }
        if out.dim() != x.dim() {
            return Err(Error::shape(format!("{:?}", x.dim()), format!("{:?}", out.dim())));
        }
        let k = x.ncols();
        if let (Some(xs), Some(os)) = (x.as_slice(), out.as_slice_mut()) {
            if k > 0 {
                os.par_chunks_mut(k).enumerate().for_each(|(i, row)| {
                    row.fill(T::zero());
                    for &j in self.neighbors(i) {
                        let src = &xs[j as usize * k..(j as usize + 1) * k];
                        row.iter_mut().zip(src).for_each(|(o, &v)| *o = *o + v);
                    }
                });
            }
            return Ok(());
        }
        out.axis_iter_mut(Axis(0))
            .into_par_iter()
            .enumerate()
            .for_each(|(i, mut row)| {
                row.fill(T::zero());
                for &j in self.neighbors(i) {
                    row.zip_mut_with(&x.row(j as usize), |o, &v| *o = *o + v);
                }
            });
        Ok(())
    }

    /// Second Zagreb index, `Σ d_i d_j` over undirected edges counted once.
    pub fn zagreb_m2(&self) -> f64 {
        self.edges()
            .map(|(i, j)| self.degrees[i] * self.degrees[j])
            .sum()
    }

    /// Euclidean norm of the degree vector.
    pub fn degree_norm(&self) -> f64 {
        self.degrees.iter().map(|d| d * d).sum::<f64>().sqrt()
    }
}
