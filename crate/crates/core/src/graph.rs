//! The collector→artist network.
//!
//! Every sale adds an endorsement from the buyer to the original creator of
//! the artwork, whether the seller is the creator (primary market) or a
//! previous collector (secondary market). Repeat purchases between the same
//! pair aggregate into a single edge carrying total USD and sale count.

use std::collections::{BTreeMap, HashMap};
use std::io::Write;

use log::warn;
use rust_decimal::prelude::ToPrimitive;
use rust_decimal::Decimal;

use crate::ingest::EventLog;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum GraphError {
    #[error("event {index} has no USD price; convert currency first")]
    UnpricedEvent { index: usize },
    #[error("event {index} is a self-sale ({user})")]
    SelfSale { index: usize, user: String },
    #[error("matrix entry ({row}, {col}) is invalid: {reason}")]
    InvalidEntry {
        row: usize,
        col: usize,
        reason: &'static str,
    },
    #[error("failed to write edge list: {0}")]
    Io(String),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RoleFlags {
    pub minted: bool,
    pub sold: bool,
    pub bought: bool,
}

/// Active users with dense indices in order of first appearance.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct NodeSet {
    ids: Vec<String>,
    index: HashMap<String, usize>,
    roles: Vec<RoleFlags>,
}

impl NodeSet {
    fn intern(&mut self, id: &str) -> usize {
        if let Some(&i) = self.index.get(id) {
            return i;
        }
        let i = self.ids.len();
        self.ids.push(id.to_string());
        self.index.insert(id.to_string(), i);
        self.roles.push(RoleFlags::default());
        i
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn id(&self, index: usize) -> &str {
        &self.ids[index]
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn roles(&self, index: usize) -> RoleFlags {
        self.roles[index]
    }

    pub fn roles_of(&self, id: &str) -> Option<RoleFlags> {
        self.index_of(id).map(|i| self.roles[i])
    }
}

/// Users who sold, bought, or created at least one sold artwork.
pub fn active_users(log: &EventLog) -> NodeSet {
    let mut nodes = NodeSet::default();
    for ev in &log.events {
        let s = nodes.intern(&ev.seller_id);
        let b = nodes.intern(&ev.buyer_id);
        let c = nodes.intern(&ev.creator_id);
        nodes.roles[s].sold = true;
        nodes.roles[b].bought = true;
        nodes.roles[c].minted = true;
    }
    nodes
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EdgeData {
    pub total_usd: Decimal,
    pub sale_count: u64,
}

impl EdgeData {
    fn add(&mut self, usd: Decimal) {
        self.total_usd += usd;
        self.sale_count += 1;
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CollectorArtistNetwork {
    nodes: NodeSet,
    edges: BTreeMap<(usize, usize), EdgeData>,
    dropped_buybacks: usize,
    dropped_usd: Decimal,
}

/// Builds the network; buy-backs (buyer is the creator) are dropped and
/// counted because they would be self-endorsements.
pub fn build_network(log: &EventLog) -> Result<CollectorArtistNetwork, GraphError> {
    let nodes = active_users(log);
    let mut edges: BTreeMap<(usize, usize), EdgeData> = BTreeMap::new();
    let mut dropped_buybacks = 0;
    let mut dropped_usd = Decimal::ZERO;
    for (index, ev) in log.events.iter().enumerate() {
        let usd = ev.price_usd.ok_or(GraphError::UnpricedEvent { index })?;
        if ev.buyer_id == ev.seller_id {
            return Err(GraphError::SelfSale {
                index,
                user: ev.buyer_id.clone(),
            });
        }
        let collector = nodes.index[&ev.buyer_id];
        let artist = nodes.index[&ev.creator_id];
        if collector == artist {
            dropped_buybacks += 1;
            dropped_usd += usd;
            continue;
        }
        edges
            .entry((collector, artist))
            .or_insert(EdgeData {
                total_usd: Decimal::ZERO,
                sale_count: 0,
            })
            .add(usd);
    }
    if dropped_buybacks > 0 {
        warn!("dropped {dropped_buybacks} buy-back sale(s) that would form self-loops");
    }
    Ok(CollectorArtistNetwork {
        nodes,
        edges,
        dropped_buybacks,
        dropped_usd,
    })
}

impl CollectorArtistNetwork {
    pub fn nodes(&self) -> &NodeSet {
        &self.nodes
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Edges as `((collector, artist), data)` in index order.
    pub fn edges(&self) -> impl Iterator<Item = ((usize, usize), &EdgeData)> + '_ {
        self.edges.iter().map(|(k, v)| (*k, v))
    }

    pub fn edge(&self, collector: &str, artist: &str) -> Option<&EdgeData> {
        let c = self.nodes.index_of(collector)?;
        let a = self.nodes.index_of(artist)?;
        self.edges.get(&(c, a))
    }

    pub fn dropped_buybacks(&self) -> usize {
        self.dropped_buybacks
    }

    pub fn dropped_usd(&self) -> Decimal {
        self.dropped_usd
    }

    pub fn total_usd(&self) -> Decimal {
        self.edges.values().map(|e| e.total_usd).sum()
    }

    /// Edge list as `collector,artist,total_usd,sale_count`, sorted by
    /// collector then artist identifier.
    pub fn write_edge_list<W: Write>(&self, out: W) -> Result<(), GraphError> {
        let io = |e: csv::Error| GraphError::Io(e.to_string());
        let mut rows: Vec<(&str, &str, &EdgeData)> = self
            .edges
            .iter()
            .map(|(&(c, a), d)| (self.nodes.id(c), self.nodes.id(a), d))
            .collect();
        rows.sort_by(|x, y| (x.0, x.1).cmp(&(y.0, y.1)));
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["collector", "artist", "total_usd", "sale_count"])
            .map_err(io)?;
        for (c, a, d) in rows {
            w.write_record([c, a, &d.total_usd.to_string(), &d.sale_count.to_string()])
                .map_err(io)?;
        }
        w.flush().map_err(|e| GraphError::Io(e.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Weighting {
    /// Entry = total USD paid along the edge.
    #[default]
    WeightedUsd,
    /// Entry = 1 for every edge.
    UnweightedBinary,
    /// Entry = number of sales along the edge.
    UnweightedMultiplicity,
}

/// Sparse row-major (CSR) adjacency matrix; row = collector, column = artist.
#[derive(Debug, Clone, PartialEq)]
pub struct AdjacencyView {
    weighting: Weighting,
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
    // column-major index into `values`
    col_ptr: Vec<usize>,
    col_pos: Vec<usize>,
    col_row: Vec<usize>,
}

pub fn adjacency(net: &CollectorArtistNetwork, weighting: Weighting) -> AdjacencyView {
    let entries = net.edges.iter().map(|(&(c, a), d)| {
        let w = match weighting {
            Weighting::WeightedUsd => d.total_usd.to_f64().unwrap_or(0.0),
            Weighting::UnweightedBinary => 1.0,
            Weighting::UnweightedMultiplicity => d.sale_count as f64,
        };
        (c, a, w)
    });
    AdjacencyView::from_sorted(net.node_count(), weighting, entries)
}

impl AdjacencyView {
    fn from_sorted<I>(n: usize, weighting: Weighting, entries: I) -> Self
    where
        I: IntoIterator<Item = (usize, usize, f64)>,
    {
        let mut row_ptr = vec![0usize; n + 1];
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        for (r, c, w) in entries {
            row_ptr[r + 1] += 1;
            col_idx.push(c);
            values.push(w);
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        let mut col_ptr = vec![0usize; n + 1];
        for &c in &col_idx {
            col_ptr[c + 1] += 1;
        }
        for i in 0..n {
            col_ptr[i + 1] += col_ptr[i];
        }
        let mut fill = col_ptr.clone();
        let mut col_pos = vec![0usize; col_idx.len()];
        let mut col_row = vec![0usize; col_idx.len()];
        for r in 0..n {
            for (k, &c) in col_idx
                .iter()
                .enumerate()
                .take(row_ptr[r + 1])
                .skip(row_ptr[r])
            {
                col_pos[fill[c]] = k;
                col_row[fill[c]] = r;
                fill[c] += 1;
            }
        }
        AdjacencyView {
            weighting,
            n,
            row_ptr,
            col_idx,
            values,
            col_ptr,
            col_pos,
            col_row,
        }
    }

    /// Builds a view from arbitrary `(row, col, weight)` triplets. Duplicate
    /// positions are summed; zero weights are kept out of the structure.
    pub fn from_triplets(n: usize, triplets: &[(usize, usize, f64)]) -> Result<Self, GraphError> {
        let mut cells: BTreeMap<(usize, usize), f64> = BTreeMap::new();
        for &(row, col, w) in triplets {
            let invalid = |reason| GraphError::InvalidEntry { row, col, reason };
            if row >= n || col >= n {
                return Err(invalid("out of bounds"));
            }
            if row == col {
                return Err(invalid("diagonal entries are not allowed"));
            }
            if !w.is_finite() || w < 0.0 {
                return Err(invalid("weight must be finite and non-negative"));
            }
            if w > 0.0 {
                *cells.entry((row, col)).or_insert(0.0) += w;
            }
        }
        Ok(Self::from_sorted(
            n,
            Weighting::WeightedUsd,
            cells.into_iter().map(|((r, c), w)| (r, c, w)),
        ))
    }

    pub fn weighting(&self) -> Weighting {
        self.weighting
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        let span = self.row_ptr[row]..self.row_ptr[row + 1];
        match self.col_idx[span.clone()].binary_search(&col) {
            Ok(k) => self.values[span.start + k],
            Err(_) => 0.0,
        }
    }

    /// Nonzeros of one row as `(col, value)`.
    pub fn row(&self, row: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let span = self.row_ptr[row]..self.row_ptr[row + 1];
        self.col_idx[span.clone()]
            .iter()
            .copied()
            .zip(self.values[span].iter().copied())
    }

    /// All nonzeros as `(row, col, value)` in row-major order.
    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n).flat_map(move |r| self.row(r).map(move |(c, v)| (r, c, v)))
    }

    /// `out = A x`. Terms are summed in sorted order, so the result does
    /// not depend on node order.
    pub fn mul_vec(&self, x: &[f64], out: &mut [f64]) {
        let mut terms = Vec::new();
        for (r, o) in out.iter_mut().enumerate().take(self.n) {
            terms.clear();
            terms.extend(self.row(r).map(|(c, v)| v * x[c]));
            *o = sorted_sum(&mut terms);
        }
    }

    /// `out = Aᵀ y`, summed like [`mul_vec`](Self::mul_vec).
    pub fn tr_mul_vec(&self, y: &[f64], out: &mut [f64]) {
        let mut terms = Vec::new();
        for (c, o) in out.iter_mut().enumerate().take(self.n) {
            terms.clear();
            let span = self.col_ptr[c]..self.col_ptr[c + 1];
            terms.extend(
                self.col_pos[span.clone()]
                    .iter()
                    .zip(&self.col_row[span])
                    .map(|(&k, &r)| self.values[k] * y[r]),
            );
            *o = sorted_sum(&mut terms);
        }
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut m = vec![vec![0.0; self.n]; self.n];
        for (r, c, v) in self.triplets() {
            m[r][c] = v;
        }
        m
    }

    /// Same sparsity pattern with every weight multiplied by `k`.
    pub fn scaled(&self, k: f64) -> Self {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= k);
        out
    }
}

/// Sum in ascending order, independent of the order of `terms` (which is
/// sorted in place).
pub(crate) fn sorted_sum(terms: &mut [f64]) -> f64 {
    terms.sort_unstable_by(f64::total_cmp);
    terms.iter().fold(0.0, |acc, t| acc + t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{parse_events, FieldMap, InputFormat};

    fn log(rows: &str) -> EventLog {
        let text = format!("seller,buyer,creator,price_usd,timestamp,artwork_id\n{rows}");
        let (log, rejects) =
            parse_events(text.as_bytes(), InputFormat::Csv, &FieldMap::default(), "t").unwrap();
        assert!(rejects.is_empty(), "{rejects:?}");
        log
    }

    fn flags(minted: bool, sold: bool, bought: bool) -> RoleFlags {
        RoleFlags {
            minted,
            sold,
            bought,
        }
    }

    #[test]
    fn active_users_cases() {
        assert!(active_users(&log("")).is_empty());

        let primary = active_users(&log("s,b,s,1,0,t\n"));
        assert_eq!(primary.len(), 2);
        assert_eq!(primary.roles_of("s"), Some(flags(true, true, false)));
        assert_eq!(primary.roles_of("b"), Some(flags(false, false, true)));

        let secondary = active_users(&log("s,b,c,1,0,t\n"));
        assert_eq!(secondary.len(), 3);
        assert_eq!(secondary.roles_of("s"), Some(flags(false, true, false)));
        assert_eq!(secondary.roles_of("b"), Some(flags(false, false, true)));
        assert_eq!(secondary.roles_of("c"), Some(flags(true, false, false)));
    }

    #[test]
    fn repeat_sales_aggregate() {
        let net = build_network(&log("a,b,a,100,0,t1\na,b,a,50,1,t2\n")).unwrap();
        assert_eq!(net.edge_count(), 1);
        let e = net.edge("b", "a").unwrap();
        assert_eq!(e.total_usd, Decimal::from(150));
        assert_eq!(e.sale_count, 2);
    }

    #[test]
    fn secondary_sale_links_to_creator() {
        let net = build_network(&log("s,b,a,10,0,t\n")).unwrap();
        assert!(net.edge("b", "a").is_some());
        assert!(net.edge("b", "s").is_none());
        assert_eq!(net.node_count(), 3);
    }

    #[test]
    fn buy_back_is_dropped() {
        let net = build_network(&log("a,s,a,10,0,t\ns,a,a,30,1,t\n")).unwrap();
        assert_eq!(net.edge_count(), 1);
        assert!(net.edge("s", "a").is_some());
        assert!(net.edge("a", "a").is_none());
        assert_eq!(net.dropped_buybacks(), 1);
        assert_eq!(net.dropped_usd(), Decimal::from(30));
        let view = adjacency(&net, Weighting::WeightedUsd);
        assert!((0..view.n()).all(|i| view.get(i, i) == 0.0));
    }

    #[test]
    fn unpriced_events_are_refused() {
        let text = "seller,buyer,creator,price_eth,timestamp\na,b,a,1,0\n";
        let (log, _) =
            parse_events(text.as_bytes(), InputFormat::Csv, &FieldMap::default(), "t").unwrap();
        assert_eq!(
            build_network(&log),
            Err(GraphError::UnpricedEvent { index: 0 })
        );
    }

    #[test]
    fn adjacency_views() {
        let net = build_network(&log("a,b,a,100,0,t1\na,b,a,50,1,t2\n")).unwrap();
        let b = net.nodes().index_of("b").unwrap();
        let a = net.nodes().index_of("a").unwrap();
        assert_eq!(adjacency(&net, Weighting::WeightedUsd).get(b, a), 150.0);
        assert_eq!(adjacency(&net, Weighting::UnweightedBinary).get(b, a), 1.0);
        assert_eq!(
            adjacency(&net, Weighting::UnweightedMultiplicity).get(b, a),
            2.0
        );

        let empty = build_network(&log("")).unwrap();
        assert_eq!(adjacency(&empty, Weighting::WeightedUsd).nnz(), 0);
    }

    #[test]
    fn sparse_view_matches_dense_hand_built() {
        // nodes in order of appearance: a, x, b
        let net = build_network(&log("a,x,a,7,0,t1\nx,b,a,3,1,t2\n")).unwrap();
        let view = adjacency(&net, Weighting::WeightedUsd);
        assert_eq!(view.nnz(), 2);
        let expected = vec![
            vec![0.0, 0.0, 0.0],
            vec![7.0, 0.0, 0.0],
            vec![3.0, 0.0, 0.0],
        ];
        assert_eq!(view.to_dense(), expected);
    }

    #[test]
    fn matvec_agrees_with_dense() {
        let view =
            AdjacencyView::from_triplets(3, &[(0, 1, 2.0), (0, 2, 1.0), (2, 1, 4.0)]).unwrap();
        let x = [1.0, 2.0, 3.0];
        let dense = view.to_dense();
        let mut ax = [0.0; 3];
        let mut atx = [0.0; 3];
        view.mul_vec(&x, &mut ax);
        view.tr_mul_vec(&x, &mut atx);
        for i in 0..3 {
            let want_ax: f64 = (0..3).map(|j| dense[i][j] * x[j]).sum();
            let want_atx: f64 = (0..3).map(|j| dense[j][i] * x[j]).sum();
            assert_eq!(ax[i], want_ax);
            assert_eq!(atx[i], want_atx);
        }
    }

    #[test]
    fn triplet_validation() {
        assert!(AdjacencyView::from_triplets(2, &[(0, 0, 1.0)]).is_err());
        assert!(AdjacencyView::from_triplets(2, &[(0, 1, -1.0)]).is_err());
        assert!(AdjacencyView::from_triplets(2, &[(0, 2, 1.0)]).is_err());
        let v = AdjacencyView::from_triplets(2, &[(0, 1, 1.0), (0, 1, 2.0), (1, 0, 0.0)]).unwrap();
        assert_eq!(v.nnz(), 1);
        assert_eq!(v.get(0, 1), 3.0);
    }

    #[test]
    fn edge_list_export() {
        let net = build_network(&log("a,b,a,100,0,t1\na,c,a,5.5,1,t2\na,b,a,50,2,t3\n")).unwrap();
        let mut buf = Vec::new();
        net.write_edge_list(&mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "collector,artist,total_usd,sale_count\nb,a,150,2\nc,a,5.5,1\n"
        );
    }
}
