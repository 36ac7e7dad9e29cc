//! The random multilinear construction of box-free d-partite hypergraphs.
//!
//! Given `r` forms `T_1..T_r` on `V^d`, `V = F_q^s`, the hypergraph `H` has an
//! edge `(v_1, .., v_d)` whenever every `T_i` evaluates to 1 there. The
//! family `F` collects ordered boxes: `d` pairs of distinct vectors whose
//! `2^d` corners are all edges. Every box lies on a tuple of affine lines
//! `(l_1, .., l_d)` and then every pair of distinct points on those lines
//! spans a box too, so `F` splits into blocks of size `q^d (q-1)^d`. Removing
//! the union `B` of the grids `l_1 x .. x l_d` leaves a box-free hypergraph.
//!
//! Two independent routes compute `B`: the union of line grids, and a
//! purely combinatorial search that tries to extend each edge to a box.

use std::collections::BTreeSet;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::ToPrimitive;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use rustc_hash::{FxHashMap, FxHashSet};
use serde::Serialize;
use smallvec::SmallVec;
use thiserror::Error;

use crate::bounds;
use crate::gf::{AffineLine, Field, GfError, Scalar, Vector, VectorSpace};
use crate::tensor::{MultilinearForm, TensorError};

#[derive(Debug, Error)]
pub enum ConstructError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("{what} of {needed} exceeds the budget of {limit}")]
    Budget {
        what: &'static str,
        needed: String,
        limit: u128,
    },
    #[error("forms do not match the parameters: {0}")]
    FormMismatch(String),
    #[error("bad set is not contained in the edge set")]
    NotSubset,
    #[error("internal inconsistency: {0}")]
    Inconsistent(String),
    #[error(transparent)]
    Tensor(#[from] TensorError),
    #[error(transparent)]
    Field(#[from] GfError),
}

/// Enumeration limits. The defaults refuse anything a laptop would take
/// minutes on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Budget {
    /// Max `(q^s)^d`, the number of vertex tuples.
    pub tuples: u128,
    /// Max `q^(r s^d)`, the size of the space of form tuples.
    pub tensor_space: u128,
}

impl Default for Budget {
    fn default() -> Self {
        Budget {
            tuples: 10_000_000,
            tensor_space: 1 << 20,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Params {
    d: usize,
    r: usize,
    s: usize,
    field: Field,
}

impl Params {
    pub fn new(d: usize, r: usize, s: usize, field: Field) -> Result<Params, ConstructError> {
        if d < 2 {
            return Err(ConstructError::InvalidParams(format!(
                "d = {d}, need d >= 2"
            )));
        }
        if d > 16 {
            return Err(ConstructError::InvalidParams(format!(
                "d = {d} is too large to enumerate"
            )));
        }
        if r < 1 {
            return Err(ConstructError::InvalidParams("r must be at least 1".into()));
        }
        if s < 1 {
            return Err(ConstructError::InvalidParams("s must be at least 1".into()));
        }
        Ok(Params { d, r, s, field })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn r(&self) -> usize {
        self.r
    }

    pub fn s(&self) -> usize {
        self.s
    }

    pub fn field(&self) -> &Field {
        &self.field
    }

    pub fn q(&self) -> u32 {
        self.field.q()
    }

    pub fn space(&self) -> VectorSpace {
        VectorSpace::new(self.field.clone(), self.s)
    }

    pub fn form_dims(&self) -> Vec<usize> {
        vec![self.s; self.d]
    }

    fn q_big(&self) -> BigInt {
        BigInt::from(self.q())
    }

    /// `q^s`, the size of one part.
    pub fn part_size(&self) -> BigInt {
        self.q_big().pow(self.s as u32)
    }

    /// Vertex count `n = d q^s`.
    pub fn n(&self) -> BigInt {
        BigInt::from(self.d) * self.part_size()
    }

    /// `d - r/s`.
    pub fn target_exponent(&self) -> BigRational {
        BigRational::new(BigInt::from(self.d * self.s) - self.r, BigInt::from(self.s))
    }

    /// `d (s - 1) < (2^d - 1) r`.
    pub fn theorem_regime(&self) -> bool {
        bounds::check_params(self.d as u32, self.r as u64, self.s as u64)
    }

    /// `c = d^(r/s - d)`, so that `q^(ds - r) = c n^(d - r/s)`.
    pub fn leading_constant(&self) -> f64 {
        (self.d as f64).powf(self.r as f64 / self.s as f64 - self.d as f64)
    }

    /// `(q^s)^d`.
    pub fn tuple_count(&self) -> BigInt {
        self.part_size().pow(self.d as u32)
    }

    /// `q^(r s^d)`.
    pub fn tensor_space_size(&self) -> BigInt {
        let exp = self.r * self.s.pow(self.d as u32);
        self.q_big().pow(exp as u32)
    }

    /// `q^(ds - r)`.
    pub fn edge_scale(&self) -> BigRational {
        let q = BigRational::from_integer(self.q_big());
        let e = (self.d * self.s) as i32 - self.r as i32;
        num_traits::pow::Pow::pow(&q, e)
    }

    /// `|P(l_1..l_d)| = q^d (q-1)^d`.
    pub fn line_product_size(&self) -> BigInt {
        let q = self.q_big();
        (q.clone() * (q - 1u32)).pow(self.d as u32)
    }

    /// `E|E| = (q^s - 1)^d q^(-r)`.
    pub fn expected_edges(&self) -> BigRational {
        let qs = self.part_size();
        BigRational::new(
            (qs - 1u32).pow(self.d as u32),
            self.q_big().pow(self.r as u32),
        )
    }

    /// `E|F| = (q^s - 1)^d (q^s - q)^d q^(-2^d r)`.
    pub fn expected_boxes(&self) -> BigRational {
        let qs = self.part_size();
        let q = self.q_big();
        let num = ((qs.clone() - 1u32) * (qs - &q)).pow(self.d as u32);
        BigRational::new(num, q.pow(((1u32 << self.d) as usize * self.r) as u32))
    }

    pub fn check_tuple_budget(&self, budget: &Budget) -> Result<(), ConstructError> {
        let needed = self.tuple_count();
        if needed > BigInt::from(budget.tuples) {
            return Err(ConstructError::Budget {
                what: "vertex tuple count",
                needed: needed.to_string(),
                limit: budget.tuples,
            });
        }
        Ok(())
    }

    pub fn check_tensor_budget(&self, budget: &Budget) -> Result<u64, ConstructError> {
        let needed = self.tensor_space_size();
        if needed > BigInt::from(budget.tensor_space) {
            return Err(ConstructError::Budget {
                what: "tensor space size",
                needed: needed.to_string(),
                limit: budget.tensor_space,
            });
        }
        Ok(needed.to_u64().expect("bounded by the budget"))
    }

    fn check_forms(&self, forms: &[MultilinearForm]) -> Result<(), ConstructError> {
        if forms.len() != self.r {
            return Err(ConstructError::FormMismatch(format!(
                "expected {} forms, got {}",
                self.r,
                forms.len()
            )));
        }
        let dims = self.form_dims();
        for (i, t) in forms.iter().enumerate() {
            if t.field() != &self.field {
                return Err(TensorError::FieldMismatch.into());
            }
            if t.dims() != dims.as_slice() {
                return Err(ConstructError::FormMismatch(format!(
                    "form {i} has dims {:?}, expected {:?}",
                    t.dims(),
                    dims
                )));
            }
        }
        Ok(())
    }

    /// Uniformly random forms from `rng`.
    pub fn sample_forms(&self, rng: &mut ChaCha8Rng) -> Vec<MultilinearForm> {
        (0..self.r)
            .map(|_| {
                MultilinearForm::sample_uniform(self.field.clone(), self.form_dims(), rng)
                    .expect("params are validated")
            })
            .collect()
    }

    /// Form tuple number `index` of the full tensor space; the first form
    /// holds the most significant digits.
    pub fn forms_from_index(&self, index: u64) -> Vec<MultilinearForm> {
        let per_form = (self.q() as u64).pow(self.s.pow(self.d as u32) as u32);
        let mut idx = index;
        let mut forms: Vec<MultilinearForm> = (0..self.r)
            .map(|_| {
                let f = MultilinearForm::from_index(
                    self.field.clone(),
                    self.form_dims(),
                    idx % per_form,
                )
                .expect("params are validated");
                idx /= per_form;
                f
            })
            .collect();
        forms.reverse();
        forms
    }
}

/// A hyperedge: one vector per part.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Edge(Vec<Vector>);

impl Edge {
    pub fn new(slots: Vec<Vector>) -> Edge {
        Edge(slots)
    }

    pub fn slots(&self) -> &[Vector] {
        &self.0
    }

    pub fn arity(&self) -> usize {
        self.0.len()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct EdgeSet {
    edges: BTreeSet<Edge>,
}

impl EdgeSet {
    pub fn new() -> EdgeSet {
        EdgeSet::default()
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn contains(&self, e: &Edge) -> bool {
        self.edges.contains(e)
    }

    pub fn insert(&mut self, e: Edge) -> bool {
        self.edges.insert(e)
    }

    pub fn iter(&self) -> impl Iterator<Item = &Edge> {
        self.edges.iter()
    }

    pub fn is_subset(&self, other: &EdgeSet) -> bool {
        self.edges.is_subset(&other.edges)
    }

    pub fn difference(&self, other: &EdgeSet) -> EdgeSet {
        EdgeSet {
            edges: self.edges.difference(&other.edges).cloned().collect(),
        }
    }

    /// Every d-tuple with entries drawn from `parts[j]` in slot `j`.
    pub fn complete(parts: &[Vec<Vector>]) -> EdgeSet {
        let mut out = EdgeSet::new();
        let mut idx = vec![0usize; parts.len()];
        if parts.iter().any(|p| p.is_empty()) {
            return out;
        }
        loop {
            out.insert(Edge(
                idx.iter().zip(parts).map(|(&i, p)| p[i].clone()).collect(),
            ));
            let mut slot = parts.len();
            loop {
                if slot == 0 {
                    return out;
                }
                slot -= 1;
                idx[slot] += 1;
                if idx[slot] < parts[slot].len() {
                    break;
                }
                idx[slot] = 0;
            }
        }
    }
}

impl FromIterator<Edge> for EdgeSet {
    fn from_iter<I: IntoIterator<Item = Edge>>(iter: I) -> Self {
        EdgeSet {
            edges: iter.into_iter().collect(),
        }
    }
}

/// An ordered box: `d` pairs `(v_j^0, v_j^1)` with `v_j^0 != v_j^1`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BoxWitness {
    pairs: Vec<(Vector, Vector)>,
}

impl BoxWitness {
    pub fn new(pairs: Vec<(Vector, Vector)>) -> BoxWitness {
        BoxWitness { pairs }
    }

    pub fn pairs(&self) -> &[(Vector, Vector)] {
        &self.pairs
    }

    /// Corner selected by the bits of `mask`: bit `j` set picks `v_j^1`.
    pub fn corner(&self, mask: u32) -> Edge {
        Edge(
            self.pairs
                .iter()
                .enumerate()
                .map(|(j, (a, b))| {
                    if mask >> j & 1 == 1 {
                        b.clone()
                    } else {
                        a.clone()
                    }
                })
                .collect(),
        )
    }

    pub fn corners(&self) -> impl Iterator<Item = Edge> + '_ {
        (0..1u32 << self.pairs.len()).map(move |m| self.corner(m))
    }

    pub fn is_box_in(&self, edges: &EdgeSet) -> bool {
        self.pairs.iter().all(|(a, b)| a != b) && self.corners().all(|c| edges.contains(&c))
    }
}

pub type BoxFamily = BTreeSet<BoxWitness>;

/// A tuple of canonical affine lines, one per part.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LineTuple {
    lines: Vec<AffineLine>,
}

impl LineTuple {
    pub fn new(lines: Vec<AffineLine>) -> LineTuple {
        LineTuple { lines }
    }

    pub fn lines(&self) -> &[AffineLine] {
        &self.lines
    }

    /// `q^d (q-1)^d`.
    pub fn product_size(&self) -> u128 {
        self.lines
            .iter()
            .map(|l| {
                let q = l.points().len() as u128;
                q * (q - 1)
            })
            .product()
    }

    /// `l_1 x .. x l_d`.
    pub fn grid(&self) -> impl Iterator<Item = Edge> + '_ {
        let parts: Vec<Vec<Vector>> = self.lines.iter().map(|l| l.points().to_vec()).collect();
        EdgeSet::complete(&parts).edges.into_iter()
    }

    /// `P(l_1..l_d)`: all choices of an ordered pair of distinct points on
    /// each line.
    pub fn members(&self) -> Vec<BoxWitness> {
        let mut out = vec![Vec::new()];
        for l in &self.lines {
            let pts = l.points();
            let mut next = Vec::with_capacity(out.len() * pts.len() * (pts.len() - 1));
            for prefix in &out {
                for a in pts {
                    for b in pts {
                        if a != b {
                            let mut p: Vec<(Vector, Vector)> = Vec::clone(prefix);
                            p.push((a.clone(), b.clone()));
                            next.push(p);
                        }
                    }
                }
            }
            out = next;
        }
        out.into_iter().map(BoxWitness::new).collect()
    }
}

/// Inputs shorter than this are mapped on the calling thread; tiny instances
/// are dominated by scheduling overhead otherwise.
const PAR_MIN_ITEMS: usize = 32;

fn map_items<T: Sync, R: Send>(items: &[T], f: impl Fn(&T) -> R + Sync + Send) -> Vec<R> {
    if items.len() < PAR_MIN_ITEMS {
        items.iter().map(f).collect()
    } else {
        items.par_iter().map(f).collect()
    }
}

/// All tuples of nonzero vectors where every form is 1.
pub fn build_edge_set(
    params: &Params,
    forms: &[MultilinearForm],
    budget: &Budget,
) -> Result<EdgeSet, ConstructError> {
    params.check_forms(forms)?;
    params.check_tuple_budget(budget)?;
    let space = params.space();
    let nonzero: Vec<Vector> = space.nonzero_vectors().collect();
    let d = params.d;
    let zero = Vector::zero(params.s);

    // Prefixes over slots 0..d-1; the last slot is solved by scanning against
    // the linear functionals T_i(prefix, .).
    let per_head = map_items(&nonzero, |head| {
        let mut out = Vec::new();
        let mut prefix = vec![head];
        complete_edges(&nonzero, forms, d, &zero, &mut prefix, &mut out);
        out
    });
    Ok(per_head.into_iter().flatten().collect())
}

fn complete_edges<'a>(
    nonzero: &'a [Vector],
    forms: &[MultilinearForm],
    d: usize,
    zero: &'a Vector,
    prefix: &mut Vec<&'a Vector>,
    out: &mut Vec<Edge>,
) {
    if prefix.len() == d - 1 {
        prefix.push(zero);
        let field = forms[0].field();
        let m = zero.dim();
        let mut functionals: SmallVec<[Scalar; 64]> =
            SmallVec::from_elem(Scalar::ZERO, m * forms.len());
        for (t, l) in forms.iter().zip(functionals.chunks_mut(m)) {
            t.functional_into(d - 1, prefix, l);
        }
        prefix.pop();
        // a vanishing functional never takes the value 1
        if functionals.chunks(m).any(|l| l.iter().all(|c| c.is_zero())) {
            return;
        }
        for x in nonzero {
            if functionals
                .chunks(m)
                .all(|l| field.dot(l, x.entries()).index() == 1)
            {
                let mut slots: Vec<Vector> = prefix.iter().map(|&v| v.clone()).collect();
                slots.push(x.clone());
                out.push(Edge(slots));
            }
        }
        return;
    }
    for v in nonzero {
        prefix.push(v);
        complete_edges(nonzero, forms, d, zero, prefix, out);
        prefix.pop();
    }
}

/// The family `F` of ordered boxes all of whose corners evaluate to 1 under
/// every form. Each box is grown from its all-zero corner (an edge); the
/// partner of slot `j` must make every corner that uses it evaluate to 1,
/// which is a set of linear conditions. Partners collinear with the base
/// vector are never tried.
pub fn find_boxes(
    params: &Params,
    forms: &[MultilinearForm],
    budget: &Budget,
) -> Result<BoxFamily, ConstructError> {
    let edges = build_edge_set(params, forms, budget)?;
    Ok(boxes_over_edges(params, forms, &edges))
}

fn boxes_over_edges(params: &Params, forms: &[MultilinearForm], edges: &EdgeSet) -> BoxFamily {
    let space = params.space();
    let all: Vec<(u64, Vector)> = space
        .vectors()
        .map(|v| (space.projective_key(&v), v))
        .collect();
    let field = params.field();
    let list: Vec<&Edge> = edges.iter().collect();
    let found = map_items(&list, |edge| {
        let mut out = Vec::new();
        let mut partners = Vec::with_capacity(params.d);
        let keys: Vec<u64> = edge
            .slots()
            .iter()
            .map(|v| space.projective_key(v))
            .collect();
        let search = BoxSearch {
            field,
            forms,
            all: &all,
            base: edge.slots(),
            base_keys: &keys,
        };
        search.grow(&mut partners, &mut out);
        out
    });
    let found = found.into_iter().flatten();
    // Sorting on packed vector indices is much cheaper than comparing
    // witnesses, and the set is then built from already sorted input.
    let radix = space.size().map(u128::from);
    match radix.and_then(|n| n.checked_pow(2 * params.d as u32)) {
        Some(_) => {
            let n = radix.expect("checked above");
            let mut keyed: Vec<(u128, BoxWitness)> = found
                .map(|w| {
                    let key = w.pairs().iter().fold(0u128, |k, (a, b)| {
                        (k * n + u128::from(space.index_of(a))) * n + u128::from(space.index_of(b))
                    });
                    (key, w)
                })
                .collect();
            keyed.sort_unstable_by_key(|&(k, _)| k);
            keyed.into_iter().map(|(_, w)| w).collect()
        }
        None => found.collect(),
    }
}

struct BoxSearch<'a> {
    field: &'a Field,
    forms: &'a [MultilinearForm],
    /// Every vector of V with its projective key.
    all: &'a [(u64, Vector)],
    base: &'a [Vector],
    base_keys: &'a [u64],
}

impl<'a> BoxSearch<'a> {
    fn grow(&self, partners: &mut Vec<&'a Vector>, out: &mut Vec<BoxWitness>) {
        let j = partners.len();
        let d = self.base.len();
        if j == d {
            out.push(BoxWitness::new(
                self.base
                    .iter()
                    .cloned()
                    .zip(partners.iter().map(|&v| v.clone()))
                    .collect(),
            ));
            return;
        }
        // Corners with slot j on the partner, slots < j free, slots > j on base.
        let m = self.base[j].dim();
        let mut functionals: SmallVec<[Scalar; 64]> =
            SmallVec::from_elem(Scalar::ZERO, m * (self.forms.len() << j));
        let mut chunks = functionals.chunks_mut(m);
        let mut args: SmallVec<[&Vector; 8]> = self.base.iter().collect();
        for mask in 0..1u32 << j {
            for (i, arg) in args.iter_mut().enumerate().take(j) {
                *arg = if mask >> i & 1 == 1 {
                    partners[i]
                } else {
                    &self.base[i]
                };
            }
            for t in self.forms {
                let l = chunks.next().expect("sized above");
                t.functional_into(j, &args, l);
            }
        }
        for (key, x) in self.all {
            // zero and multiples of the base vector cannot complete a box
            if *key == 0 || *key == self.base_keys[j] {
                continue;
            }
            if functionals
                .chunks(m)
                .all(|l| self.field.dot(l, x.entries()).index() == 1)
            {
                partners.push(x);
                self.grow(partners, out);
                partners.pop();
            }
        }
    }
}

/// The canonical line tuples through the boxes of `family`.
pub fn lines_of_boxes(field: &Field, family: &BoxFamily) -> Result<BTreeSet<LineTuple>, GfError> {
    // Lines are numbered as they are met; a box is reduced to its tuple of
    // line ids so the many boxes sharing a tuple cost one hash lookup each.
    let mut ids: FxHashMap<(&Vector, &Vector), usize> = FxHashMap::default();
    let mut by_line: FxHashMap<AffineLine, usize> = FxHashMap::default();
    let mut tuples: FxHashSet<SmallVec<[usize; 8]>> = FxHashSet::default();
    for w in family {
        let mut tuple = SmallVec::with_capacity(w.pairs().len());
        for (a, b) in w.pairs() {
            let id = match ids.get(&(a, b)) {
                Some(&id) => id,
                None => {
                    let line = field.affine_line_through(a, b)?;
                    let next = by_line.len();
                    let id = *by_line.entry(line).or_insert(next);
                    ids.insert((a, b), id);
                    id
                }
            };
            tuple.push(id);
        }
        tuples.insert(tuple);
    }
    let mut found = vec![None; by_line.len()];
    for (line, id) in by_line {
        found[id] = Some(line);
    }
    let found: Vec<AffineLine> = found.into_iter().flatten().collect();
    Ok(tuples
        .into_iter()
        .map(|t| LineTuple::new(t.iter().map(|&i| found[i].clone()).collect()))
        .collect())
}

/// `union of P(l)` over the given line tuples.
pub fn expand_lines(lines: &BTreeSet<LineTuple>) -> BoxFamily {
    lines.iter().flat_map(|l| l.members()).collect()
}

/// Union of the grids `l_1 x .. x l_d`. Every grid point must already be an
/// edge; one that is not means the line tuples did not come from `edges`.
pub fn bad_edges(edges: &EdgeSet, lines: &BTreeSet<LineTuple>) -> Result<EdgeSet, ConstructError> {
    let mut bad = EdgeSet::new();
    for lt in lines {
        for e in lt.grid() {
            if !edges.contains(&e) {
                return Err(ConstructError::Inconsistent(format!(
                    "grid point {:?} of a line tuple is not an edge",
                    e.slots().iter().map(|v| v.to_string()).collect::<Vec<_>>()
                )));
            }
            bad.insert(e);
        }
    }
    Ok(bad)
}

/// Lookup structure for extending edges to boxes using only membership in
/// an edge set. Vertices are renumbered per slot and edges packed into
/// mixed-radix integer codes.
struct EdgeIndex {
    /// Distinct vectors of each slot, sorted; a vertex id is a position here.
    vertices: Vec<Vec<Vector>>,
    /// Radix weight of each slot in an edge code.
    weights: Vec<u64>,
    codes: FxHashSet<u64>,
    /// For each slot, code with that slot's digit zeroed -> ids completing it.
    by_slot: Vec<FxHashMap<u64, Vec<u64>>>,
}

impl EdgeIndex {
    fn new(edges: &EdgeSet) -> EdgeIndex {
        let d = edges.iter().next().map_or(0, Edge::arity);
        let mut vertices: Vec<Vec<Vector>> = vec![Vec::new(); d];
        for e in edges.iter() {
            for (j, v) in e.slots().iter().enumerate() {
                vertices[j].push(v.clone());
            }
        }
        for part in vertices.iter_mut() {
            part.sort();
            part.dedup();
        }
        let mut weights = Vec::with_capacity(d);
        let mut w = 1u64;
        for part in &vertices {
            weights.push(w);
            w = w
                .checked_mul(part.len() as u64)
                .expect("edge codes fit in u64");
        }
        let mut index = EdgeIndex {
            vertices,
            weights,
            codes: FxHashSet::default(),
            by_slot: vec![FxHashMap::default(); d],
        };
        for e in edges.iter() {
            let ids = index.ids(e);
            let code = index.code(&ids);
            index.codes.insert(code);
            for (j, &id) in ids.iter().enumerate() {
                let key = code - id * index.weights[j];
                index.by_slot[j].entry(key).or_default().push(id);
            }
        }
        index
    }

    fn ids(&self, e: &Edge) -> Vec<u64> {
        e.slots()
            .iter()
            .zip(&self.vertices)
            .map(|(v, part)| part.binary_search(v).expect("vertex of an indexed edge") as u64)
            .collect()
    }

    fn code(&self, ids: &[u64]) -> u64 {
        ids.iter().zip(&self.weights).map(|(i, w)| i * w).sum()
    }

    /// Some box whose all-zero corner is `edge`, if one exists.
    fn extend(&self, edge: &Edge) -> Option<BoxWitness> {
        let base = self.ids(edge);
        let mut partners = Vec::with_capacity(base.len());
        if self.extend_from(&base, self.code(&base), &mut partners) {
            Some(BoxWitness::new(
                base.iter()
                    .zip(&partners)
                    .enumerate()
                    .map(|(j, (&a, &b))| {
                        (
                            self.vertices[j][a as usize].clone(),
                            self.vertices[j][b as usize].clone(),
                        )
                    })
                    .collect(),
            ))
        } else {
            None
        }
    }

    fn extend_from(&self, base: &[u64], base_code: u64, partners: &mut Vec<u64>) -> bool {
        let j = partners.len();
        if j == base.len() {
            return true;
        }
        let w = self.weights[j];
        let key = base_code - base[j] * w;
        let Some(candidates) = self.by_slot[j].get(&key) else {
            return false;
        };
        'cand: for &x in candidates {
            if x == base[j] {
                continue;
            }
            // remaining corners through x: some nonempty subset of slots < j flipped
            for mask in 1..1u32 << j {
                let mut code = key + x * w;
                for (i, &p) in partners.iter().enumerate() {
                    if mask >> i & 1 == 1 {
                        code = code - base[i] * self.weights[i] + p * self.weights[i];
                    }
                }
                if !self.codes.contains(&code) {
                    continue 'cand;
                }
            }
            partners.push(x);
            if self.extend_from(base, base_code, partners) {
                return true;
            }
            partners.pop();
        }
        false
    }
}

/// Edges of `edges` that are a corner of some box in `edges`, found by
/// trying to extend each edge directly.
pub fn bad_edges_direct(edges: &EdgeSet) -> EdgeSet {
    let index = EdgeIndex::new(edges);
    let list: Vec<&Edge> = edges.iter().collect();
    // any corner of a box can serve as its all-zero corner after relabeling
    map_items(&list, |e| index.extend(e).is_some().then(|| (*e).clone()))
        .into_iter()
        .flatten()
        .collect()
}

/// Brute-force box detector over an arbitrary edge set.
pub fn find_box(edges: &EdgeSet) -> Option<BoxWitness> {
    let index = EdgeIndex::new(edges);
    edges.iter().find_map(|e| index.extend(e))
}

/// `E' = E \ B` together with the detector's verdict on `E'`.
pub fn delete_and_verify(
    edges: &EdgeSet,
    bad: &EdgeSet,
) -> Result<(EdgeSet, Option<BoxWitness>), ConstructError> {
    if !bad.is_subset(edges) {
        return Err(ConstructError::NotSubset);
    }
    let pruned = edges.difference(bad);
    let witness = find_box(&pruned);
    Ok((pruned, witness))
}

/// Everything computed for one choice of forms.
#[derive(Debug, Clone)]
pub struct Instance {
    pub edges: EdgeSet,
    pub boxes: BoxFamily,
    pub lines: BTreeSet<LineTuple>,
    pub bad: EdgeSet,
    pub bad_direct: EdgeSet,
    pub pruned: EdgeSet,
    pub witness: Option<BoxWitness>,
}

impl Instance {
    pub fn box_free(&self) -> bool {
        self.witness.is_none()
    }

    pub fn counts(&self) -> Counts {
        Counts {
            edges: self.edges.len() as u64,
            boxes: self.boxes.len() as u64,
            lines: self.lines.len() as u64,
            bad: self.bad.len() as u64,
            pruned: self.pruned.len() as u64,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Counts {
    pub edges: u64,
    pub boxes: u64,
    pub lines: u64,
    pub bad: u64,
    pub pruned: u64,
}

/// Runs the whole pipeline on one tuple of forms and cross-checks the
/// structural identities. A failed identity is an error; a box surviving in
/// `E'` is reported through [`Instance::witness`].
pub fn run_instance(
    params: &Params,
    forms: &[MultilinearForm],
    budget: &Budget,
) -> Result<Instance, ConstructError> {
    let edges = build_edge_set(params, forms, budget)?;
    let boxes = boxes_over_edges(params, forms, &edges);
    let lines = lines_of_boxes(params.field(), &boxes)?;

    let block = params.line_product_size();
    if BigInt::from(lines.len()) * &block != BigInt::from(boxes.len()) {
        return Err(ConstructError::Inconsistent(format!(
            "|F| = {} but |L| * q^d (q-1)^d = {} * {}",
            boxes.len(),
            lines.len(),
            block
        )));
    }
    // Distinct line tuples have disjoint products, so with the count above,
    // containment of every member means equality.
    if !lines
        .iter()
        .all(|lt| lt.members().iter().all(|m| boxes.contains(m)))
    {
        return Err(ConstructError::Inconsistent(
            "F differs from the union of its line products".into(),
        ));
    }

    let bad = bad_edges(&edges, &lines)?;
    let bad_direct = bad_edges_direct(&edges);
    if bad != bad_direct {
        return Err(ConstructError::Inconsistent(format!(
            "bad set from line grids has {} edges, direct search found {}",
            bad.len(),
            bad_direct.len()
        )));
    }
    let (pruned, witness) = delete_and_verify(&edges, &bad)?;
    Ok(Instance {
        edges,
        boxes,
        lines,
        bad,
        bad_direct,
        pruned,
        witness,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    /// Average over every tuple of forms.
    Exact,
    /// Independent uniformly random tuples of forms.
    Sampled,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TrialRecord {
    pub trial: u64,
    #[serde(flatten)]
    pub counts: Counts,
    pub box_free: bool,
}

/// Mean, sample variance and standard error of one count.
#[derive(Debug, Clone, PartialEq)]
pub struct Moments {
    pub sum: u128,
    pub mean: f64,
    pub variance: f64,
    pub std_err: f64,
}

impl Moments {
    fn of(values: impl Iterator<Item = u64> + Clone) -> Moments {
        let n = values.clone().count() as f64;
        let sum: u128 = values.clone().map(u128::from).sum();
        let mean = sum as f64 / n;
        let variance = if n > 1.0 {
            values.map(|v| (v as f64 - mean).powi(2)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        Moments {
            sum,
            mean,
            variance,
            std_err: (variance / n).sqrt(),
        }
    }

    /// `(mean - expected) / std_err`; infinite when the spread is zero and
    /// the mean is off.
    pub fn z_score(&self, expected: f64) -> f64 {
        let diff = self.mean - expected;
        if self.std_err == 0.0 {
            if diff == 0.0 {
                0.0
            } else {
                diff.signum() * f64::INFINITY
            }
        } else {
            diff / self.std_err
        }
    }
}

#[derive(Debug, Clone)]
pub struct TrialStats {
    pub params: Params,
    pub mode: Mode,
    pub seed: u64,
    pub records: Vec<TrialRecord>,
}

impl TrialStats {
    pub fn count(&self) -> usize {
        self.records.len()
    }

    pub fn all_box_free(&self) -> bool {
        self.records.iter().all(|r| r.box_free)
    }

    pub fn moments(&self, pick: impl Fn(&Counts) -> u64) -> Moments {
        Moments::of(self.records.iter().map(|r| pick(&r.counts)))
    }

    /// Exact mean of a count as a rational.
    pub fn exact_mean(&self, pick: impl Fn(&Counts) -> u64) -> BigRational {
        let sum: BigInt = self
            .records
            .iter()
            .map(|r| BigInt::from(pick(&r.counts)))
            .sum();
        BigRational::new(sum, BigInt::from(self.records.len()))
    }

    /// Instances with `|E'| >= (1 - delta) q^(ds - r)`.
    pub fn good_instances(&self, delta: f64) -> Vec<u64> {
        let threshold = (1.0 - delta) * bounds::to_f64(&self.params.edge_scale());
        self.records
            .iter()
            .filter(|r| r.counts.pruned as f64 >= threshold)
            .map(|r| r.trial)
            .collect()
    }
}

/// The generator for trial `trial`: the seed fixes the key, the trial index
/// picks the stream.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

/// Runs the pipeline over the whole tensor space (`Exact`, `trials` is then
/// ignored) or over `trials` seeded random draws (`Sampled`). Records come
/// back in trial order.
pub fn run_trials(
    params: &Params,
    trials: u64,
    seed: u64,
    mode: Mode,
    budget: &Budget,
) -> Result<TrialStats, ConstructError> {
    params.check_tuple_budget(budget)?;
    let run = |trial: u64, forms: Vec<MultilinearForm>| -> Result<TrialRecord, ConstructError> {
        let inst = run_instance(params, &forms, budget)?;
        Ok(TrialRecord {
            trial,
            counts: inst.counts(),
            box_free: inst.box_free(),
        })
    };
    let records = match mode {
        Mode::Exact => {
            let size = params.check_tensor_budget(budget)?;
            (0..size)
                .into_par_iter()
                .map(|i| run(i, params.forms_from_index(i)))
                .collect::<Result<Vec<_>, _>>()?
        }
        Mode::Sampled => {
            if trials == 0 {
                return Err(ConstructError::InvalidParams(
                    "trials must be at least 1".into(),
                ));
            }
            (0..trials)
                .into_par_iter()
                .map(|t| run(t, params.sample_forms(&mut trial_rng(seed, t))))
                .collect::<Result<Vec<_>, _>>()?
        }
    };
    Ok(TrialStats {
        params: params.clone(),
        mode,
        seed,
        records,
    })
}
