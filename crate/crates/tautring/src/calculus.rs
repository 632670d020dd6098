//! The ring operations: products, integration, and the pullback and
//! pushforward along forgetful and gluing maps.
//!
//! Products follow the excess intersection formula for boundary strata: the
//! product of two decorated strata is a sum over common degenerations, i.e.
//! triples of a stable graph with contraction morphisms onto both factors
//! whose surviving edges jointly cover it, counted up to simultaneous
//! precomposition by automorphisms.  Edges surviving into both factors
//! contribute an excess factor `(-psi - psi')`.
//!
//! All maps here are the honest functorial ones, so the projection formula
//! holds on the nose; the generator normalization (each stored stratum
//! means "gluing pushforward over its automorphism count") is what makes
//! the bookkeeping below come out with integer-free coefficients.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::sync::{Arc, Mutex, OnceLock};

use num_bigint::BigUint;
use num_traits::{One, Zero};

use crate::correlator::vertex_integral;
use crate::graph::{GraphMorphism, Iso, LegLabel, StableGraph};
use crate::rational::{q_from_biguint, q_inv, Q};
use crate::stratum::{check_stable, DecoratedStratum, Decoration, TautClass};
use crate::{Error, Result};

/// The shared default size budget: the `TAUTRING_BUDGET` environment
/// variable when set, otherwise 20000.
pub fn default_budget() -> u64 {
    std::env::var("TAUTRING_BUDGET")
        .ok()
        .and_then(|s| s.parse().ok())
        .unwrap_or(20_000)
}

/// A slot of a vertex: either a marking or a half-edge.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Slot {
    Leg(LegLabel),
    Half(usize),
}

/// Legs (sorted by label) followed by half-edges (ascending): the canonical
/// slot order of a vertex, which fixes how factor spaces are marked.
pub fn vertex_slots(graph: &StableGraph, v: usize) -> Vec<Slot> {
    let mut out: Vec<Slot> = graph.legs_at(v).into_iter().map(Slot::Leg).collect();
    out.extend(graph.half_edges_at(v).into_iter().map(Slot::Half));
    out
}

fn slot_exponent(dec: &Decoration, slot: Slot) -> u32 {
    match slot {
        Slot::Leg(l) => dec.psi_leg.get(&l).copied().unwrap_or(0),
        Slot::Half(h) => dec.psi_half.get(&h).copied().unwrap_or(0),
    }
}

// ---------------------------------------------------------------------------
// Monomials: intermediate decorations with a coefficient, on a fixed graph.

#[derive(Clone, Debug)]
struct Mono {
    coeff: Q,
    kappa: Vec<BTreeMap<u32, u32>>,
    psi_leg: BTreeMap<LegLabel, u32>,
    psi_half: BTreeMap<usize, u32>,
}

impl Mono {
    fn one(num_vertices: usize) -> Self {
        Mono {
            coeff: Q::one(),
            kappa: vec![BTreeMap::new(); num_vertices],
            psi_leg: BTreeMap::new(),
            psi_half: BTreeMap::new(),
        }
    }

    fn mul(&self, other: &Self) -> Self {
        let mut out = self.clone();
        out.coeff *= &other.coeff;
        for (v, ks) in other.kappa.iter().enumerate() {
            for (&a, &m) in ks {
                *out.kappa[v].entry(a).or_insert(0) += m;
            }
        }
        for (&l, &e) in &other.psi_leg {
            *out.psi_leg.entry(l).or_insert(0) += e;
        }
        for (&h, &e) in &other.psi_half {
            *out.psi_half.entry(h).or_insert(0) += e;
        }
        out
    }

    fn degree_at(&self, graph: &StableGraph, v: usize) -> i64 {
        let mut d: i64 = self.kappa[v].iter().map(|(&a, &m)| (a * m) as i64).sum();
        for &l in &graph.legs_at(v) {
            d += self.psi_leg.get(&l).copied().unwrap_or(0) as i64;
        }
        for h in graph.half_edges_at(v) {
            d += self.psi_half.get(&h).copied().unwrap_or(0) as i64;
        }
        d
    }

    fn fits(&self, graph: &StableGraph) -> bool {
        (0..graph.num_vertices()).all(|v| self.degree_at(graph, v) <= graph.vertex_dim(v))
    }

    fn to_decoration(&self) -> Decoration {
        let kappa = self
            .kappa
            .iter()
            .map(|ks| {
                let mut v = Vec::new();
                for (&a, &m) in ks {
                    for _ in 0..m {
                        v.push(a);
                    }
                }
                v
            })
            .collect();
        Decoration {
            kappa,
            psi_leg: self.psi_leg.iter().filter(|(_, &e)| e > 0).map(|(&l, &e)| (l, e)).collect(),
            psi_half: self
                .psi_half
                .iter()
                .filter(|(_, &e)| e > 0)
                .map(|(&h, &e)| (h, e))
                .collect(),
        }
    }
}

/// Adds `scale * mono` as a canonical term of `out`, treating decorations
/// that overflow a vertex dimension as zero.
fn accumulate(out: &mut TautClass, graph: &StableGraph, mono: &Mono, scale: &Q) -> Result<()> {
    if !mono.fits(graph) {
        return Ok(());
    }
    let dec = mono.to_decoration();
    match DecoratedStratum::try_new(graph, &dec) {
        Ok(s) => out.add_term(s, &mono.coeff * scale),
        Err(Error::DecorationTooDeep { .. }) => Ok(()),
        Err(e) => Err(e),
    }
}

/// Pulls a decoration on `target` back along a contraction morphism
/// `f: lambda -> target`.  Kappa classes distribute over the fiber vertices,
/// which branches into several monomials.
fn pull_decoration(
    lambda: &StableGraph,
    f: &GraphMorphism,
    dec: &Decoration,
) -> Vec<Mono> {
    let mut seed = Mono::one(lambda.num_vertices());
    for (&l, &e) in &dec.psi_leg {
        *seed.psi_leg.entry(l).or_insert(0) += e;
    }
    for (&h_t, &e) in &dec.psi_half {
        *seed.psi_half.entry(f.beta_half[h_t]).or_insert(0) += e;
    }

    let mut fibers: Vec<Vec<usize>> = vec![Vec::new(); dec.kappa.len()];
    for (w, &v) in f.vertex_map.iter().enumerate() {
        fibers[v].push(w);
    }

    let mut monos = vec![seed];
    for (v_t, ks) in dec.kappa.iter().enumerate() {
        for &a in ks {
            let mut grown = Vec::with_capacity(monos.len() * fibers[v_t].len());
            for m in &monos {
                for &w in &fibers[v_t] {
                    let mut m2 = m.clone();
                    *m2.kappa[w].entry(a).or_insert(0) += 1;
                    grown.push(m2);
                }
            }
            monos = grown;
        }
    }
    monos
}

/// Expands the excess factor over the shared edges: the product of
/// `(-psi_h - psi_h')` over each edge kept by both morphisms.
fn excess_monos(lambda: &StableGraph, shared: &[usize]) -> Vec<Mono> {
    let mut monos = vec![Mono::one(lambda.num_vertices())];
    for &e in shared {
        let (h1, h2) = lambda.edges()[e];
        let mut grown = Vec::with_capacity(monos.len() * 2);
        for m in &monos {
            for h in [h1, h2] {
                let mut m2 = m.clone();
                m2.coeff = -m2.coeff;
                *m2.psi_half.entry(h).or_insert(0) += 1;
                grown.push(m2);
            }
        }
        monos = grown;
    }
    monos
}

// ---------------------------------------------------------------------------
// Common degenerations and their cache.

pub(crate) struct CommonDegeneration {
    pub lambda: StableGraph,
    pub aut_lambda: BigUint,
    pub f1: GraphMorphism,
    pub f2: GraphMorphism,
    /// Lambda edges surviving into both factors.
    pub shared_edges: Vec<usize>,
}

struct Caches {
    graphs: Mutex<HashMap<(u32, u32, usize), Arc<Vec<StableGraph>>>>,
    morphisms: Mutex<HashMap<(StableGraph, StableGraph), Arc<Vec<GraphMorphism>>>>,
    auts: Mutex<HashMap<StableGraph, Arc<Vec<Iso>>>>,
    degens: Mutex<HashMap<(StableGraph, StableGraph), Arc<Vec<CommonDegeneration>>>>,
}

fn caches() -> &'static Caches {
    static CACHES: OnceLock<Caches> = OnceLock::new();
    CACHES.get_or_init(|| Caches {
        graphs: Mutex::new(HashMap::new()),
        morphisms: Mutex::new(HashMap::new()),
        auts: Mutex::new(HashMap::new()),
        degens: Mutex::new(HashMap::new()),
    })
}

const ISO_CAP: usize = 1_000_000;

pub(crate) fn cached_graphs(g: u32, n: u32, max_edges: usize) -> Result<Arc<Vec<StableGraph>>> {
    let key = (g, n, max_edges);
    if let Some(v) = caches().graphs.lock().unwrap().get(&key) {
        return Ok(v.clone());
    }
    let v = Arc::new(crate::graph::enumerate_stable_graphs(g, n, max_edges)?);
    caches().graphs.lock().unwrap().insert(key, v.clone());
    Ok(v)
}

fn cached_morphisms(lambda: &StableGraph, target: &StableGraph) -> Result<Arc<Vec<GraphMorphism>>> {
    let key = (lambda.clone(), target.clone());
    if let Some(v) = caches().morphisms.lock().unwrap().get(&key) {
        return Ok(v.clone());
    }
    let v = Arc::new(lambda.morphisms_to(target, ISO_CAP)?);
    caches().morphisms.lock().unwrap().insert(key, v.clone());
    Ok(v)
}

fn cached_auts(graph: &StableGraph) -> Result<Arc<Vec<Iso>>> {
    if let Some(v) = caches().auts.lock().unwrap().get(graph) {
        return Ok(v.clone());
    }
    let v = Arc::new(graph.automorphisms(ISO_CAP)?);
    caches()
        .auts
        .lock()
        .unwrap()
        .insert(graph.clone(), v.clone());
    Ok(v)
}

fn precompose(m: &GraphMorphism, tau: &Iso) -> GraphMorphism {
    let vertex_map: Vec<usize> = (0..tau.vertex_map.len())
        .map(|w| m.vertex_map[tau.vertex_map[w]])
        .collect();
    let mut inv = vec![0usize; tau.half_map.len()];
    for (x, &y) in tau.half_map.iter().enumerate() {
        inv[y] = x;
    }
    let beta_half: Vec<usize> = m.beta_half.iter().map(|&b| inv[b]).collect();
    GraphMorphism {
        vertex_map,
        beta_half,
    }
}

/// All common degenerations of two canonical stable graphs on the same
/// ambient space: stable graphs `lambda` with contraction morphisms onto
/// both whose image edges jointly cover `lambda`, listed once per orbit of
/// simultaneous precomposition by `Aut(lambda)`.
pub(crate) fn common_degenerations(
    ga: &StableGraph,
    gb: &StableGraph,
) -> Result<Arc<Vec<CommonDegeneration>>> {
    let key = (ga.clone(), gb.clone());
    if let Some(v) = caches().degens.lock().unwrap().get(&key) {
        return Ok(v.clone());
    }

    let (g, n) = ga.ambient();
    if gb.ambient() != (g, n) {
        return Err(Error::AmbientMismatch {
            expected_g: g,
            expected_n: n,
            got_g: gb.ambient().0,
            got_n: gb.ambient().1,
        });
    }
    let dim = (3 * g as i64 - 3 + n as i64).max(0) as usize;
    let emax = (ga.num_edges() + gb.num_edges()).min(dim);
    let emin = ga.num_edges().max(gb.num_edges());

    let mut out = Vec::new();
    for lambda in cached_graphs(g, n, emax)?.iter() {
        if lambda.num_edges() < emin {
            continue;
        }
        let m1s = cached_morphisms(lambda, ga)?;
        if m1s.is_empty() {
            continue;
        }
        let m2s = cached_morphisms(lambda, gb)?;
        if m2s.is_empty() {
            continue;
        }
        let auts = cached_auts(lambda)?;
        let all_edges: BTreeSet<usize> = (0..lambda.num_edges()).collect();
        let mut reps: BTreeSet<(GraphMorphism, GraphMorphism)> = BTreeSet::new();
        for m1 in m1s.iter() {
            let im1 = m1.image_edges(lambda);
            for m2 in m2s.iter() {
                let im2 = m2.image_edges(lambda);
                let union: BTreeSet<usize> = im1.union(&im2).copied().collect();
                if union != all_edges {
                    continue;
                }
                let rep = auts
                    .iter()
                    .map(|tau| (precompose(m1, tau), precompose(m2, tau)))
                    .min()
                    .expect("identity automorphism");
                reps.insert(rep);
            }
        }
        let aut_lambda = lambda.aut_order();
        for (f1, f2) in reps {
            let shared: Vec<usize> = f1
                .image_edges(lambda)
                .intersection(&f2.image_edges(lambda))
                .copied()
                .collect();
            out.push(CommonDegeneration {
                lambda: lambda.clone(),
                aut_lambda: aut_lambda.clone(),
                f1,
                f2,
                shared_edges: shared,
            });
        }
    }

    let arc = Arc::new(out);
    caches().degens.lock().unwrap().insert(key, arc.clone());
    Ok(arc)
}

// ---------------------------------------------------------------------------
// Ring operations.

/// The product of two tautological classes on the same space.
pub fn multiply(a: &TautClass, b: &TautClass) -> Result<TautClass> {
    let (g, n) = a.ambient();
    if b.ambient() != (g, n) {
        return Err(Error::AmbientMismatch {
            expected_g: g,
            expected_n: n,
            got_g: b.g(),
            got_n: b.n(),
        });
    }
    let dim = (3 * g as i64 - 3 + n as i64).max(0) as usize;
    let mut out = TautClass::zero(g, n);
    for (sa, ca) in a.terms() {
        for (sb, cb) in b.terms() {
            if sa.codim() + sb.codim() > dim {
                continue;
            }
            let scale_base = ca * cb
                * q_inv(&sa.aut_order())
                * q_inv(&sb.aut_order());
            for d in common_degenerations(sa.graph(), sb.graph())?.iter() {
                let scale = &scale_base * q_from_biguint(&d.aut_lambda);
                let p1 = pull_decoration(&d.lambda, &d.f1, sa.decoration());
                let p2 = pull_decoration(&d.lambda, &d.f2, sb.decoration());
                let ex = excess_monos(&d.lambda, &d.shared_edges);
                for m1 in &p1 {
                    for m2 in &p2 {
                        let m12 = m1.mul(m2);
                        for e in &ex {
                            let m = m12.mul(e);
                            accumulate(&mut out, &d.lambda, &m, &scale)?;
                        }
                    }
                }
            }
        }
    }
    Ok(out)
}

/// The integral of the top-degree part of a class over its moduli space.
/// Parts below the top degree contribute nothing.
pub fn integrate_top(t: &TautClass) -> Result<Q> {
    let mut acc = Q::zero();
    for (s, c) in t.terms() {
        acc += c * integrate_stratum(s)?;
    }
    Ok(acc)
}

/// The integral of one generator: zero unless it sits in top codimension,
/// otherwise the product of vertex integrals over the automorphism count.
pub(crate) fn integrate_stratum(s: &DecoratedStratum) -> Result<Q> {
    let (g, n) = s.ambient();
    let dim = (3 * g as i64 - 3 + n as i64).max(0) as usize;
    if s.codim() != dim {
        return Ok(Q::zero());
    }
    let graph = s.graph();
    let dec = s.decoration();
    let mut acc = q_inv(&s.aut_order());
    for v in 0..graph.num_vertices() {
        let psis: Vec<u32> = vertex_slots(graph, v)
            .into_iter()
            .map(|slot| slot_exponent(dec, slot))
            .collect();
        acc *= vertex_integral(graph.genus_of(v), &psis, &dec.kappa[v])?;
    }
    Ok(acc)
}

// ---------------------------------------------------------------------------
// Forgetful maps.

fn add_leg(graph: &StableGraph, v: usize, label: LegLabel) -> Result<StableGraph> {
    let mut legs = graph.legs().to_vec();
    legs.push((label, v));
    legs.sort_unstable();
    StableGraph::new(
        graph.genera().to_vec(),
        legs,
        graph.half_edge_vertices().to_vec(),
        graph.edges().to_vec(),
    )
}

fn binomial(m: u32, t: u32) -> u64 {
    let mut acc: u64 = 1;
    for i in 0..t.min(m - t) {
        acc = acc * (m - i) as u64 / (i + 1) as u64;
    }
    acc
}

fn kappa_groups(kv: &[u32]) -> Vec<(u32, u32)> {
    let mut groups: Vec<(u32, u32)> = Vec::new();
    for &a in kv {
        match groups.last_mut() {
            Some((b, m)) if *b == a => *m += 1,
            _ => groups.push((a, 1)),
        }
    }
    groups
}

/// Expansion of the pullback of a kappa monomial: each subset of the kappa
/// copies trades for a power of psi at the new marking, with a sign.
/// Entries are (coefficient, remaining kappa multiset, new psi exponent).
fn kappa_pull_expansions(kv: &[u32]) -> Vec<(Q, Vec<u32>, u32)> {
    let mut out: Vec<(Q, Vec<u32>, u32)> = vec![(Q::one(), Vec::new(), 0)];
    for (a, m) in kappa_groups(kv) {
        let mut grown = Vec::new();
        for t in 0..=m {
            let sign = if t % 2 == 0 { 1i64 } else { -1i64 };
            let c = Q::from_integer((sign * binomial(m, t) as i64).into());
            for (c0, kv0, pe0) in &out {
                let mut kv1 = kv0.clone();
                kv1.extend(std::iter::repeat(a).take((m - t) as usize));
                grown.push((c0 * &c, kv1, pe0 + a * t));
            }
        }
        out = grown;
    }
    out
}

/// Pullback along the map forgetting a new last marking: classes on the
/// space with `n` markings become classes on the space with `n + 1`.
pub fn pullback_forgetful(t: &TautClass) -> Result<TautClass> {
    let (g, n) = t.ambient();
    check_stable(g, n)?;
    let new_leg: LegLabel = n + 1;
    let mut out = TautClass::zero(g, n + 1);
    for (s, c) in t.terms() {
        let graph = s.graph();
        let dec = s.decoration();
        let inv_aut = q_inv(&s.aut_order());
        for v in 0..graph.num_vertices() {
            // Main terms: the new marking joins vertex v; kappa classes at v
            // pick up psi corrections at the new marking.
            let main = add_leg(graph, v, new_leg)?;
            let ratio = q_from_biguint(&main.aut_order()) * &inv_aut;
            for (coef, kv, pe) in kappa_pull_expansions(&dec.kappa[v]) {
                let mut d = dec.clone();
                d.kappa[v] = kv;
                if pe > 0 {
                    d.psi_leg.insert(new_leg, pe);
                }
                let mut mono = Mono::one(main.num_vertices());
                mono.coeff = coef;
                for (w, ks) in d.kappa.iter().enumerate() {
                    for &a in ks {
                        *mono.kappa[w].entry(a).or_insert(0) += 1;
                    }
                }
                mono.psi_leg = d.psi_leg.clone();
                mono.psi_half = d.psi_half.clone();
                accumulate(&mut out, &main, &mono, &(c * &ratio))?;
            }

            // Correction terms: each psi power at a slot of v sheds one
            // degree onto a rational bubble carrying that slot and the new
            // marking.
            for slot in vertex_slots(graph, v) {
                let a = slot_exponent(dec, slot);
                if a == 0 {
                    continue;
                }
                let (dgraph, h_v) = split_slot(graph, v, slot, new_leg)?;
                let ratio = q_from_biguint(&dgraph.aut_order()) * &inv_aut;
                let mut mono = Mono::one(dgraph.num_vertices());
                mono.coeff = -Q::one();
                for (w, ks) in dec.kappa.iter().enumerate() {
                    for &b in ks {
                        *mono.kappa[w].entry(b).or_insert(0) += 1;
                    }
                }
                mono.psi_leg = dec.psi_leg.clone();
                mono.psi_half = dec.psi_half.clone();
                match slot {
                    Slot::Leg(l) => {
                        mono.psi_leg.remove(&l);
                    }
                    Slot::Half(h) => {
                        mono.psi_half.remove(&h);
                    }
                }
                if a > 1 {
                    *mono.psi_half.entry(h_v).or_insert(0) += a - 1;
                }
                accumulate(&mut out, &dgraph, &mono, &(c * &ratio))?;
            }
        }
    }
    Ok(out)
}

/// Splits slot `s` off vertex `v` onto a new rational bubble that also
/// carries the new marking.  Existing half-edge indices are preserved; the
/// new edge's half at `v` is returned alongside the graph.
fn split_slot(
    graph: &StableGraph,
    v: usize,
    slot: Slot,
    new_leg: LegLabel,
) -> Result<(StableGraph, usize)> {
    let mut genus = graph.genera().to_vec();
    genus.push(0);
    let w = genus.len() - 1;
    let mut legs = graph.legs().to_vec();
    let mut hv = graph.half_edge_vertices().to_vec();
    match slot {
        Slot::Leg(l) => {
            for entry in legs.iter_mut() {
                if entry.0 == l {
                    entry.1 = w;
                }
            }
        }
        Slot::Half(h) => {
            hv[h] = w;
        }
    }
    legs.push((new_leg, w));
    legs.sort_unstable();
    let h_v = hv.len();
    hv.push(v);
    hv.push(w);
    let mut edges = graph.edges().to_vec();
    edges.push((h_v, h_v + 1));
    Ok((StableGraph::new(genus, legs, hv, edges)?, h_v))
}

/// Pushforward along the map forgetting the last marking.
pub fn pushforward_forgetful(t: &TautClass) -> Result<TautClass> {
    let (g, n1) = t.ambient();
    if n1 == 0 {
        return Err(Error::InvalidInput("no marking to forget".into()));
    }
    let n = n1 - 1;
    check_stable(g, n)?;
    let q_label: LegLabel = n1;
    let mut out = TautClass::zero(g, n);

    for (s, c) in t.terms() {
        let graph = s.graph();
        let dec = s.decoration();
        let inv_aut = q_inv(&s.aut_order());
        let v = graph
            .legs()
            .iter()
            .find(|&&(l, _)| l == q_label)
            .map(|&(_, v)| v)
            .ok_or_else(|| Error::Internal("marking missing from stratum".into()))?;
        let a_q = dec.psi_leg.get(&q_label).copied().unwrap_or(0);
        let val = graph.valence(v) as i64;
        let gv = graph.genus_of(v) as i64;

        if 2 * gv - 2 + val - 1 > 0 {
            // The vertex stays stable after losing the marking.
            let minus = remove_leg(graph, q_label)?;
            let ratio = q_from_biguint(&minus.aut_order()) * &inv_aut;
            let kappa0 = Q::from_integer((2 * gv - 2 + val - 1).into());
            let groups = kappa_groups(&dec.kappa[v]);

            // Sub-multisets of the kappa classes at v, with binomial
            // multiplicities.
            let mut selections: Vec<(u64, Vec<u32>, u32)> = vec![(1, Vec::new(), 0)];
            for (a, m) in &groups {
                let mut grown = Vec::new();
                for t_a in 0..=*m {
                    let mult = binomial(*m, t_a);
                    for (c0, keep0, sum0) in &selections {
                        let mut keep = keep0.clone();
                        keep.extend(std::iter::repeat(*a).take((*m - t_a) as usize));
                        grown.push((c0 * mult, keep, sum0 + a * t_a));
                    }
                }
                selections = grown;
            }

            let emit =
                |out: &mut TautClass, kv: Vec<u32>, coeff: Q, psi_change: Option<(Slot, u32)>| {
                    let mut mono = Mono::one(minus.num_vertices());
                    mono.coeff = coeff;
                    for (w, ks) in dec.kappa.iter().enumerate() {
                        if w == v {
                            continue;
                        }
                        for &b in ks {
                            *mono.kappa[w].entry(b).or_insert(0) += 1;
                        }
                    }
                    for b in kv {
                        *mono.kappa[v].entry(b).or_insert(0) += 1;
                    }
                    mono.psi_leg = dec.psi_leg.clone();
                    mono.psi_leg.remove(&q_label);
                    mono.psi_half = dec.psi_half.clone();
                    if let Some((slot, new_exp)) = psi_change {
                        match slot {
                            Slot::Leg(l) => {
                                if new_exp > 0 {
                                    mono.psi_leg.insert(l, new_exp);
                                } else {
                                    mono.psi_leg.remove(&l);
                                }
                            }
                            Slot::Half(h) => {
                                if new_exp > 0 {
                                    mono.psi_half.insert(h, new_exp);
                                } else {
                                    mono.psi_half.remove(&h);
                                }
                            }
                        }
                    }
                    accumulate(out, &minus, &mono, &Q::one())
                };

            if a_q >= 1 {
                for (mult, keep, traded) in &selections {
                    let r = a_q as i64 + *traded as i64 - 1;
                    let base = c * &ratio * Q::from_integer((*mult as i64).into());
                    if r == 0 {
                        emit(&mut out, keep.clone(), base * &kappa0, None)?;
                    } else {
                        let mut kv = keep.clone();
                        kv.push(r as u32);
                        emit(&mut out, kv, base, None)?;
                    }
                }
            } else {
                for (mult, keep, traded) in &selections {
                    if *traded == 0 {
                        continue;
                    }
                    let r = *traded as i64 - 1;
                    let base = c * &ratio * Q::from_integer((*mult as i64).into());
                    if r == 0 {
                        emit(&mut out, keep.clone(), base * &kappa0, None)?;
                    } else {
                        let mut kv = keep.clone();
                        kv.push(r as u32);
                        emit(&mut out, kv, base, None)?;
                    }
                }
                // String-type terms: lower one psi power at another slot.
                for slot in vertex_slots(graph, v) {
                    if slot == Slot::Leg(q_label) {
                        continue;
                    }
                    let a_s = slot_exponent(dec, slot);
                    if a_s == 0 {
                        continue;
                    }
                    emit(
                        &mut out,
                        dec.kappa[v].clone(),
                        c * &ratio,
                        Some((slot, a_s - 1)),
                    )?;
                }
            }
        } else {
            // The vertex is a rational bridge or tail: genus 0 with exactly
            // three slots, one of which is the forgotten marking, and its
            // decoration is trivial.  Contract it away.
            let others: Vec<Slot> = vertex_slots(graph, v)
                .into_iter()
                .filter(|&s| s != Slot::Leg(q_label))
                .collect();
            if others.len() != 2 {
                return Err(Error::Internal(
                    "unstable vertex is not trivalent".into(),
                ));
            }
            match (others[0], others[1]) {
                (Slot::Half(hx), Slot::Half(hy)) => {
                    let ex = graph.edge_of_half(hx);
                    let ey = graph.edge_of_half(hy);
                    if ex == ey {
                        return Err(Error::Internal(
                            "loop at an unstable vertex cannot reach a stable target".into(),
                        ));
                    }
                    let xbar = graph.partner(hx);
                    let ybar = graph.partner(hy);
                    let (ng, half_map) =
                        excise_vertex(graph, v, &[ex, ey], Some((xbar, ybar)), None)?;
                    let ratio = q_from_biguint(&ng.aut_order()) * &inv_aut;
                    let mut mono = Mono::one(ng.num_vertices());
                    transport_after_excision(&mut mono, graph, dec, v, &half_map, None);
                    accumulate(&mut out, &ng, &mono, &(c * &ratio))?;
                }
                (a, b) => {
                    let (leg, half) = match (a, b) {
                        (Slot::Leg(l), Slot::Half(h)) => (l, h),
                        (Slot::Half(h), Slot::Leg(l)) => (l, h),
                        _ => {
                            return Err(Error::Internal(
                                "two markings on an unstable vertex need an unstable target"
                                    .into(),
                            ))
                        }
                    };
                    let e = graph.edge_of_half(half);
                    let ybar = graph.partner(half);
                    let (ng, half_map) =
                        excise_vertex(graph, v, &[e], None, Some((leg, ybar)))?;
                    let ratio = q_from_biguint(&ng.aut_order()) * &inv_aut;
                    let mut mono = Mono::one(ng.num_vertices());
                    transport_after_excision(&mut mono, graph, dec, v, &half_map, Some((leg, ybar)));
                    accumulate(&mut out, &ng, &mono, &(c * &ratio))?;
                }
            }
        }
    }
    Ok(out)
}

fn remove_leg(graph: &StableGraph, label: LegLabel) -> Result<StableGraph> {
    let legs: Vec<(LegLabel, usize)> = graph
        .legs()
        .iter()
        .copied()
        .filter(|&(l, _)| l != label)
        .collect();
    StableGraph::new(
        graph.genera().to_vec(),
        legs,
        graph.half_edge_vertices().to_vec(),
        graph.edges().to_vec(),
    )
}

/// Removes trivalent vertex `v` together with the edges in `drop`.  With
/// `join = Some((xbar, ybar))` the two far halves fuse into one new edge;
/// with `relocate = Some((leg, ybar))` the leg moves to the vertex of the
/// far half `ybar`.  Returns the new graph and the old-to-new half-edge map
/// (dropped halves absent).
fn excise_vertex(
    graph: &StableGraph,
    v: usize,
    drop: &[usize],
    join: Option<(usize, usize)>,
    relocate: Option<(LegLabel, usize)>,
) -> Result<(StableGraph, BTreeMap<usize, usize>)> {
    let mut vmap = vec![usize::MAX; graph.num_vertices()];
    let mut genus = Vec::new();
    for u in 0..graph.num_vertices() {
        if u != v {
            vmap[u] = genus.len();
            genus.push(graph.genus_of(u));
        }
    }
    let mut hv: Vec<usize> = Vec::new();
    let mut edges = Vec::new();
    let mut half_map = BTreeMap::new();
    for e in 0..graph.num_edges() {
        if drop.contains(&e) {
            continue;
        }
        let (h1, h2) = graph.edges()[e];
        let base = hv.len();
        hv.push(vmap[graph.half_edge_vertex(h1)]);
        hv.push(vmap[graph.half_edge_vertex(h2)]);
        edges.push((base, base + 1));
        half_map.insert(h1, base);
        half_map.insert(h2, base + 1);
    }
    if let Some((xbar, ybar)) = join {
        let base = hv.len();
        hv.push(vmap[graph.half_edge_vertex(xbar)]);
        hv.push(vmap[graph.half_edge_vertex(ybar)]);
        edges.push((base, base + 1));
        half_map.insert(xbar, base);
        half_map.insert(ybar, base + 1);
    }
    let mut legs: Vec<(LegLabel, usize)> = Vec::new();
    for &(l, u) in graph.legs() {
        if u == v {
            match relocate {
                Some((rl, ybar)) if rl == l => {
                    legs.push((l, vmap[graph.half_edge_vertex(ybar)]));
                }
                _ => {
                    // The forgotten marking simply disappears.
                }
            }
        } else {
            legs.push((l, vmap[u]));
        }
    }
    legs.sort_unstable();
    Ok((StableGraph::new(genus, legs, hv, edges)?, half_map))
}

fn transport_after_excision(
    mono: &mut Mono,
    graph: &StableGraph,
    dec: &Decoration,
    v: usize,
    half_map: &BTreeMap<usize, usize>,
    relocate: Option<(LegLabel, usize)>,
) {
    for (w, ks) in dec.kappa.iter().enumerate() {
        if w == v {
            continue;
        }
        let nw = mono_vertex_after(graph, v, w);
        for &b in ks {
            *mono.kappa[nw].entry(b).or_insert(0) += 1;
        }
    }
    for (&l, &e) in &dec.psi_leg {
        mono.psi_leg.insert(l, e);
    }
    for (&h, &e) in &dec.psi_half {
        if let Some(&nh) = half_map.get(&h) {
            *mono.psi_half.entry(nh).or_insert(0) += e;
        } else if let Some((leg, ybar)) = relocate {
            // The far half of the dropped edge becomes the relocated leg.
            if h == ybar {
                *mono.psi_leg.entry(leg).or_insert(0) += e;
            }
        }
    }
}

fn mono_vertex_after(_graph: &StableGraph, v_removed: usize, w: usize) -> usize {
    if w > v_removed {
        w - 1
    } else {
        w
    }
}

// ---------------------------------------------------------------------------
// Gluing maps.

/// A gluing map onto a fixed ambient space, given by a stable graph: the
/// product of the vertex moduli spaces maps onto the closed stratum.  Each
/// vertex becomes a factor space, with markings ordered legs-then-half-edges.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GluingMapSpec {
    gamma: StableGraph,
    factors: Vec<(u32, u32)>,
}

impl GluingMapSpec {
    pub fn new(graph: &StableGraph) -> Result<Self> {
        graph.validate().map_err(Error::from)?;
        let gamma = graph.canonical();
        let factors = (0..gamma.num_vertices())
            .map(|v| (gamma.genus_of(v), gamma.valence(v)))
            .collect();
        Ok(GluingMapSpec { gamma, factors })
    }

    pub fn graph(&self) -> &StableGraph {
        &self.gamma
    }

    /// Ambient `(g, n)` of the target space.
    pub fn ambient(&self) -> (u32, u32) {
        self.gamma.ambient()
    }

    /// `(genus, markings)` of every factor space, in vertex order.
    pub fn factors(&self) -> &[(u32, u32)] {
        &self.factors
    }

    /// The slots of vertex `v` in marking order.
    pub fn slots(&self, v: usize) -> Vec<Slot> {
        vertex_slots(&self.gamma, v)
    }
}

/// A class on a product of moduli spaces, stored as a combination of
/// tuples of canonical decorated strata (one per factor).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FactoredClass {
    factors: Vec<(u32, u32)>,
    terms: BTreeMap<Vec<DecoratedStratum>, Q>,
}

impl FactoredClass {
    pub fn zero(factors: Vec<(u32, u32)>) -> Self {
        FactoredClass {
            factors,
            terms: BTreeMap::new(),
        }
    }

    /// The outer tensor product of classes on the factor spaces.
    pub fn tensor(parts: &[TautClass]) -> Result<Self> {
        let factors: Vec<(u32, u32)> = parts.iter().map(|t| t.ambient()).collect();
        let mut out = FactoredClass::zero(factors);
        let mut stack: Vec<(Vec<DecoratedStratum>, Q)> = vec![(Vec::new(), Q::one())];
        for part in parts {
            let mut grown = Vec::new();
            for (prefix, coeff) in &stack {
                for (s, c) in part.terms() {
                    let mut p = prefix.clone();
                    p.push(s.clone());
                    grown.push((p, coeff * c));
                }
            }
            stack = grown;
        }
        for (key, c) in stack {
            out.add_term(key, c)?;
        }
        Ok(out)
    }

    pub fn factors(&self) -> &[(u32, u32)] {
        &self.factors
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Vec<DecoratedStratum>, &Q)> {
        self.terms.iter()
    }

    pub fn add_term(&mut self, key: Vec<DecoratedStratum>, c: Q) -> Result<()> {
        if key.len() != self.factors.len() {
            return Err(Error::InvalidInput(
                "factored term has the wrong number of factors".into(),
            ));
        }
        for (s, &(g, n)) in key.iter().zip(self.factors.iter()) {
            if s.ambient() != (g, n) {
                return Err(Error::AmbientMismatch {
                    expected_g: g,
                    expected_n: n,
                    got_g: s.ambient().0,
                    got_n: s.ambient().1,
                });
            }
        }
        if c.is_zero() {
            return Ok(());
        }
        use std::collections::btree_map::Entry;
        match self.terms.entry(key) {
            Entry::Vacant(e) => {
                e.insert(c);
            }
            Entry::Occupied(mut e) => {
                *e.get_mut() += c;
                if e.get().is_zero() {
                    e.remove();
                }
            }
        }
        Ok(())
    }

    pub fn checked_add(&self, other: &Self) -> Result<Self> {
        if self.factors != other.factors {
            return Err(Error::InvalidInput(
                "factored classes live on different products".into(),
            ));
        }
        let mut out = self.clone();
        for (k, c) in &other.terms {
            out.add_term(k.clone(), c.clone())?;
        }
        Ok(out)
    }

    pub fn checked_sub(&self, other: &Self) -> Result<Self> {
        self.checked_add(&other.scale(&Q::from_integer((-1).into())))
    }

    pub fn scale(&self, c: &Q) -> Self {
        if c.is_zero() {
            return FactoredClass::zero(self.factors.clone());
        }
        FactoredClass {
            factors: self.factors.clone(),
            terms: self
                .terms
                .iter()
                .map(|(k, q)| (k.clone(), q * c))
                .collect(),
        }
    }

    /// The integral over the whole product space.
    pub fn integrate(&self) -> Result<Q> {
        let mut acc = Q::zero();
        for (key, c) in &self.terms {
            let mut prod = c.clone();
            for s in key {
                prod *= integrate_stratum(s)?;
                if prod.is_zero() {
                    break;
                }
            }
            acc += prod;
        }
        Ok(acc)
    }

    /// Pushforward along the projection onto the first factor: integrates
    /// out all other factors.
    pub fn project_to_first(&self) -> Result<TautClass> {
        let (g, n) = *self
            .factors
            .first()
            .ok_or_else(|| Error::InvalidInput("no factors to project onto".into()))?;
        let mut out = TautClass::zero(g, n);
        for (key, c) in &self.terms {
            let mut scale = c.clone();
            for s in &key[1..] {
                scale *= integrate_stratum(s)?;
                if scale.is_zero() {
                    break;
                }
            }
            if !scale.is_zero() {
                out.add_term(key[0].clone(), scale)?;
            }
        }
        Ok(out)
    }
}

/// Factorwise product of two classes on the same product of spaces.
pub fn multiply_factored(a: &FactoredClass, b: &FactoredClass) -> Result<FactoredClass> {
    if a.factors != b.factors {
        return Err(Error::InvalidInput(
            "factored classes live on different products".into(),
        ));
    }
    let mut out = FactoredClass::zero(a.factors.clone());
    for (ka, ca) in &a.terms {
        for (kb, cb) in &b.terms {
            // Multiply factor by factor, then expand the product of sums.
            let mut partials: Vec<(Vec<DecoratedStratum>, Q)> = vec![(Vec::new(), ca * cb)];
            for (sa, sb) in ka.iter().zip(kb.iter()) {
                let (g, n) = sa.ambient();
                let mut ta = TautClass::zero(g, n);
                ta.add_term(sa.clone(), Q::one())?;
                let mut tb = TautClass::zero(g, n);
                tb.add_term(sb.clone(), Q::one())?;
                let prod = multiply(&ta, &tb)?;
                let mut grown = Vec::new();
                for (prefix, coeff) in &partials {
                    for (s, c) in prod.terms() {
                        let mut p = prefix.clone();
                        p.push(s.clone());
                        grown.push((p, coeff * c));
                    }
                }
                partials = grown;
                if partials.is_empty() {
                    break;
                }
            }
            for (key, c) in partials {
                out.add_term(key, c)?;
            }
        }
    }
    Ok(out)
}

/// Pushforward along a gluing map: glues the factor classes into decorated
/// strata of the ambient space.
pub fn pushforward_gluing(spec: &GluingMapSpec, fc: &FactoredClass) -> Result<TautClass> {
    if fc.factors() != spec.factors() {
        return Err(Error::InvalidInput(
            "factored class does not match the gluing map's factors".into(),
        ));
    }
    let (g, n) = spec.ambient();
    let gamma = spec.graph();
    let mut out = TautClass::zero(g, n);

    for (key, c) in fc.terms() {
        // Assemble the composite graph: each vertex of gamma is replaced by
        // the graph of its factor stratum.
        let mut genus: Vec<u32> = Vec::new();
        let mut vertex_offset = Vec::with_capacity(key.len());
        for s in key.iter() {
            vertex_offset.push(genus.len());
            genus.extend_from_slice(s.graph().genera());
        }

        let mut hv: Vec<usize> = Vec::new();
        let mut edges: Vec<(usize, usize)> = Vec::new();
        // Internal edges of each factor graph, with an offset half-edge map.
        let mut half_offset = Vec::with_capacity(key.len());
        for (v, s) in key.iter().enumerate() {
            let base = hv.len();
            half_offset.push(base);
            for h in 0..s.graph().num_half_edges() {
                hv.push(vertex_offset[v] + s.graph().half_edge_vertex(h));
            }
            for &(h1, h2) in s.graph().edges() {
                edges.push((base + h1, base + h2));
            }
        }

        // Where factor marking j of factor v lives in the composite graph.
        let marked_vertex = |v: usize, label: LegLabel| -> Result<usize> {
            key[v]
                .graph()
                .legs()
                .iter()
                .find(|&&(l, _)| l == label)
                .map(|&(_, w)| vertex_offset[v] + w)
                .ok_or_else(|| Error::Internal("factor marking missing".into()))
        };

        // Legs of gamma pass through; edges of gamma become new edges.
        let mut legs: Vec<(LegLabel, usize)> = Vec::new();
        let mut slot_index: BTreeMap<(usize, Slot), u32> = BTreeMap::new();
        for v in 0..gamma.num_vertices() {
            for (j, slot) in spec.slots(v).into_iter().enumerate() {
                slot_index.insert((v, slot), (j + 1) as u32);
            }
        }
        for &(l, v) in gamma.legs() {
            let j = slot_index[&(v, Slot::Leg(l))];
            legs.push((l, marked_vertex(v, j)?));
        }
        // Track the composite half-edge that realizes each gamma half-edge.
        let mut gamma_half_to_new: BTreeMap<usize, usize> = BTreeMap::new();
        for &(h1, h2) in gamma.edges() {
            let (v1, v2) = (gamma.half_edge_vertex(h1), gamma.half_edge_vertex(h2));
            let j1 = slot_index[&(v1, Slot::Half(h1))];
            let j2 = slot_index[&(v2, Slot::Half(h2))];
            let base = hv.len();
            hv.push(marked_vertex(v1, j1)?);
            hv.push(marked_vertex(v2, j2)?);
            edges.push((base, base + 1));
            gamma_half_to_new.insert(h1, base);
            gamma_half_to_new.insert(h2, base + 1);
        }
        legs.sort_unstable();
        let composite = StableGraph::new(genus, legs, hv, edges)?;

        // Decoration: kappa and internal psi carry over; psi on a factor
        // marking lands on the matching leg or new half-edge.
        let mut mono = Mono::one(composite.num_vertices());
        mono.coeff = c.clone();
        for (v, s) in key.iter().enumerate() {
            let dec = s.decoration();
            for (w, ks) in dec.kappa.iter().enumerate() {
                for &b in ks {
                    *mono.kappa[vertex_offset[v] + w].entry(b).or_insert(0) += 1;
                }
            }
            for (&h, &e) in &dec.psi_half {
                *mono.psi_half.entry(half_offset[v] + h).or_insert(0) += e;
            }
            for (&label, &e) in &dec.psi_leg {
                // Which slot of gamma's vertex v is this factor marking?
                let slot = spec
                    .slots(v)
                    .into_iter()
                    .nth((label - 1) as usize)
                    .ok_or_else(|| Error::Internal("factor marking out of range".into()))?;
                match slot {
                    Slot::Leg(l) => {
                        *mono.psi_leg.entry(l).or_insert(0) += e;
                    }
                    Slot::Half(h) => {
                        let nh = gamma_half_to_new[&h];
                        *mono.psi_half.entry(nh).or_insert(0) += e;
                    }
                }
            }
        }

        // Honest pushforward: |Aut(composite)| / prod |Aut(factor)| on the
        // generator normalization.
        let mut scale = q_from_biguint(&composite.aut_order());
        for s in key.iter() {
            scale *= q_inv(&s.aut_order());
        }
        accumulate(&mut out, &composite, &mono, &scale)?;
    }
    Ok(out)
}

/// Pullback along a gluing map: restricts an ambient class to the product
/// of the factor spaces.
pub fn pullback_gluing(spec: &GluingMapSpec, t: &TautClass) -> Result<FactoredClass> {
    let (g, n) = spec.ambient();
    if t.ambient() != (g, n) {
        return Err(Error::AmbientMismatch {
            expected_g: g,
            expected_n: n,
            got_g: t.g(),
            got_n: t.n(),
        });
    }
    let gamma = spec.graph();
    let mut out = FactoredClass::zero(spec.factors().to_vec());

    for (s, c) in t.terms() {
        let scale_base = c * q_inv(&s.aut_order());
        for d in common_degenerations(gamma, s.graph())?.iter() {
            let pulled = pull_decoration(&d.lambda, &d.f2, s.decoration());
            let ex = excess_monos(&d.lambda, &d.shared_edges);
            for m1 in &pulled {
                for e in &ex {
                    let mono = m1.mul(e);
                    if !mono.fits(&d.lambda) {
                        continue;
                    }
                    split_into_factors(spec, d, &mono, &scale_base, &mut out)?;
                }
            }
        }
    }
    Ok(out)
}

/// Splits a decorated common degeneration along the fibers of its morphism
/// onto the gluing graph, producing one stratum per factor space.
fn split_into_factors(
    spec: &GluingMapSpec,
    d: &CommonDegeneration,
    mono: &Mono,
    scale_base: &Q,
    out: &mut FactoredClass,
) -> Result<()> {
    let gamma = spec.graph();
    let lambda = &d.lambda;
    let f1 = &d.f1;

    // Edges of lambda surviving into gamma, and the fiber containing each
    // lambda vertex.
    let image_edges = f1.image_edges(lambda);
    let mut fiber_vertices: Vec<Vec<usize>> = vec![Vec::new(); gamma.num_vertices()];
    for (w, &v) in f1.vertex_map.iter().enumerate() {
        fiber_vertices[v].push(w);
    }

    let mut key: Vec<DecoratedStratum> = Vec::with_capacity(gamma.num_vertices());
    let mut coeff = scale_base * &mono.coeff;
    for v in 0..gamma.num_vertices() {
        let members = &fiber_vertices[v];
        let local_index = |w: usize| members.iter().position(|&x| x == w).unwrap();

        let genus: Vec<u32> = members.iter().map(|&w| lambda.genus_of(w)).collect();
        let mut hv: Vec<usize> = Vec::new();
        let mut edges: Vec<(usize, usize)> = Vec::new();
        let mut half_map: BTreeMap<usize, usize> = BTreeMap::new();
        for e in 0..lambda.num_edges() {
            if image_edges.contains(&e) {
                continue;
            }
            let (h1, h2) = lambda.edges()[e];
            let w1 = lambda.half_edge_vertex(h1);
            if f1.vertex_map[w1] != v {
                continue;
            }
            let w2 = lambda.half_edge_vertex(h2);
            let base = hv.len();
            hv.push(local_index(w1));
            hv.push(local_index(w2));
            edges.push((base, base + 1));
            half_map.insert(h1, base);
            half_map.insert(h2, base + 1);
        }

        // Factor markings: slots of gamma's vertex v, realized in lambda.
        let mut legs: Vec<(LegLabel, usize)> = Vec::new();
        let mut marking_of_lambda_leg: BTreeMap<LegLabel, LegLabel> = BTreeMap::new();
        let mut marking_of_lambda_half: BTreeMap<usize, LegLabel> = BTreeMap::new();
        for (j, slot) in spec.slots(v).into_iter().enumerate() {
            let label = (j + 1) as LegLabel;
            match slot {
                Slot::Leg(l) => {
                    let w = lambda
                        .legs()
                        .iter()
                        .find(|&&(ll, _)| ll == l)
                        .map(|&(_, w)| w)
                        .ok_or_else(|| Error::Internal("leg missing from degeneration".into()))?;
                    legs.push((label, local_index(w)));
                    marking_of_lambda_leg.insert(l, label);
                }
                Slot::Half(h) => {
                    let lh = f1.beta_half[h];
                    let w = lambda.half_edge_vertex(lh);
                    legs.push((label, local_index(w)));
                    marking_of_lambda_half.insert(lh, label);
                }
            }
        }
        legs.sort_unstable();
        let fiber_graph = StableGraph::new(genus, legs, hv, edges)?;

        // Decoration restricted to this fiber.
        let mut dec = Decoration {
            kappa: vec![Vec::new(); members.len()],
            psi_leg: BTreeMap::new(),
            psi_half: BTreeMap::new(),
        };
        for (li, &w) in members.iter().enumerate() {
            let mut ks = Vec::new();
            for (&a, &m) in &mono.kappa[w] {
                for _ in 0..m {
                    ks.push(a);
                }
            }
            dec.kappa[li] = ks;
        }
        for (&l, &e) in &mono.psi_leg {
            if e == 0 {
                continue;
            }
            if let Some(&label) = marking_of_lambda_leg.get(&l) {
                dec.psi_leg.insert(label, e);
            }
        }
        for (&h, &e) in &mono.psi_half {
            if e == 0 {
                continue;
            }
            if let Some(&label) = marking_of_lambda_half.get(&h) {
                *dec.psi_leg.entry(label).or_insert(0) += e;
            } else if let Some(&nh) = half_map.get(&h) {
                *dec.psi_half.entry(nh).or_insert(0) += e;
            }
        }

        match DecoratedStratum::try_new(&fiber_graph, &dec) {
            Ok(stratum) => {
                coeff *= q_from_biguint(&stratum.aut_order());
                key.push(stratum);
            }
            Err(Error::DecorationTooDeep { .. }) => return Ok(()),
            Err(e) => return Err(e),
        }
    }
    out.add_term(key, coeff)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{qi, qr};

    fn psi(g: u32, n: u32, i: u32) -> TautClass {
        TautClass::psi(g, n, i).unwrap()
    }

    fn kappa(g: u32, n: u32, a: u32) -> TautClass {
        TautClass::kappa(g, n, a).unwrap()
    }

    fn fund(g: u32, n: u32) -> TautClass {
        TautClass::fundamental(g, n).unwrap()
    }

    fn dirr(g: u32, n: u32) -> TautClass {
        TautClass::delta_irr(g, n).unwrap()
    }

    #[test]
    fn integrate_top_anchors() {
        assert_eq!(integrate_top(&fund(0, 3)).unwrap(), qi(1));
        assert_eq!(integrate_top(&psi(1, 1, 1)).unwrap(), qr(1, 24));
        assert_eq!(integrate_top(&kappa(1, 1, 1)).unwrap(), qr(1, 24));
        assert_eq!(integrate_top(&dirr(1, 1)).unwrap(), qr(1, 2));
        // Below top degree integrates to zero.
        assert_eq!(integrate_top(&fund(1, 1)).unwrap(), qi(0));
        // A stratum with automorphisms: the two-vertex graph with three
        // parallel edges has |Aut| = 12 and trivial vertex integrals.
        let theta = StableGraph::from_edge_list(
            vec![0, 0],
            vec![vec![], vec![]],
            &[(0, 1), (0, 1), (0, 1)],
        )
        .unwrap();
        let t = crate::stratum::make_stratum(&theta, &Decoration::empty(2)).unwrap();
        assert_eq!(integrate_top(&t).unwrap(), qr(1, 12));
    }

    #[test]
    fn fundamental_is_the_unit() {
        let one11 = fund(1, 1);
        for x in [psi(1, 1, 1), kappa(1, 1, 1), dirr(1, 1), fund(1, 1)] {
            assert_eq!(multiply(&one11, &x).unwrap(), x);
            assert_eq!(multiply(&x, &one11).unwrap(), x);
        }
        let one12 = fund(1, 2);
        for x in [dirr(1, 2), psi(1, 2, 2)] {
            assert_eq!(multiply(&one12, &x).unwrap(), x);
        }
    }

    #[test]
    fn products_match_known_integrals() {
        // psi_1 * psi_2 on the (1,2) space.
        let p = multiply(&psi(1, 2, 1), &psi(1, 2, 2)).unwrap();
        assert_eq!(integrate_top(&p).unwrap(), qr(1, 24));

        // The self-intersection of the irreducible boundary integrates to
        // zero on the (1,2) space.
        let dd = multiply(&dirr(1, 2), &dirr(1, 2)).unwrap();
        assert_eq!(integrate_top(&dd).unwrap(), qi(0));
        assert!(!dd.is_zero());

        // Mixed product: delta_irr * psi_1 integrates to 1/2.
        let dp = multiply(&dirr(1, 2), &psi(1, 2, 1)).unwrap();
        assert_eq!(integrate_top(&dp).unwrap(), qr(1, 2));

        // Degree overflow gives the zero class.
        let over = multiply(&dirr(1, 1), &dirr(1, 1)).unwrap();
        assert!(over.is_zero());
    }

    #[test]
    fn product_is_commutative_and_distributive() {
        let a = dirr(1, 2);
        let b = psi(1, 2, 1);
        let c = kappa(1, 2, 1);
        assert_eq!(multiply(&a, &b).unwrap(), multiply(&b, &a).unwrap());
        let ab_ac = multiply(&a, &b)
            .unwrap()
            .checked_add(&multiply(&a, &c).unwrap())
            .unwrap();
        let a_bc = multiply(&a, &b.checked_add(&c).unwrap()).unwrap();
        assert_eq!(ab_ac, a_bc);
        // Associativity on divisor classes of the (0,5) space.
        let x = psi(0, 5, 1);
        let y = psi(0, 5, 2);
        let z = psi(0, 5, 3);
        let xy_z = multiply(&multiply(&x, &y).unwrap(), &z).unwrap();
        let x_yz = multiply(&x, &multiply(&y, &z).unwrap()).unwrap();
        assert_eq!(integrate_top(&xy_z).unwrap(), integrate_top(&x_yz).unwrap());
        assert_eq!(xy_z, x_yz);
    }

    #[test]
    fn forgetful_pullback_basics() {
        // Pullback of the fundamental class is fundamental.
        assert_eq!(pullback_forgetful(&fund(1, 1)).unwrap(), fund(1, 2));

        // pi^* psi_1 = psi_1 - [bubble with markings 1 and 2].
        let pb = pullback_forgetful(&psi(1, 1, 1)).unwrap();
        assert_eq!(pb.num_terms(), 2);
        let direct = psi(1, 2, 1);
        let diff = pb.checked_sub(&direct).unwrap();
        assert_eq!(diff.num_terms(), 1);
        let (s, c) = diff.terms().next().unwrap();
        assert_eq!(c, &qi(-1));
        assert_eq!(s.graph().num_edges(), 1);
        assert_eq!(s.graph().num_vertices(), 2);

        // pi^* kappa_1 = kappa_1 - psi at the new marking.
        let pk = pullback_forgetful(&kappa(1, 1, 1)).unwrap();
        let expect = kappa(1, 2, 1).checked_sub(&psi(1, 2, 2)).unwrap();
        assert_eq!(pk, expect);
    }

    #[test]
    fn forgetful_pushforward_basics() {
        // pi_* 1 = 0, pi_* psi_new = 2g - 2 + n, pi_* psi_new^2 = kappa_1.
        assert!(pushforward_forgetful(&fund(1, 2)).unwrap().is_zero());
        assert_eq!(
            pushforward_forgetful(&psi(1, 2, 2)).unwrap(),
            fund(1, 1).scale(&qi(1))
        );
        assert_eq!(
            pushforward_forgetful(&multiply(&psi(1, 2, 2), &psi(1, 2, 2)).unwrap()).unwrap(),
            kappa(1, 1, 1)
        );
        // pi_*(psi_1) = 1 by the string-type term.
        assert_eq!(pushforward_forgetful(&psi(1, 2, 1)).unwrap(), fund(1, 1));
        // pi_*(kappa_1) = kappa_0 = (2g - 2 + n) as a scalar.
        assert_eq!(
            pushforward_forgetful(&kappa(1, 2, 1)).unwrap(),
            fund(1, 1).scale(&qi(1))
        );
        // pi_* pi^* annihilates everything.
        for x in [psi(1, 1, 1), dirr(1, 1), kappa(1, 1, 1)] {
            let up = pullback_forgetful(&x).unwrap();
            assert!(pushforward_forgetful(&up).unwrap().is_zero());
        }
    }

    #[test]
    fn forgetful_pushforward_contracts_unstable_bubbles() {
        // A rational tail with markings 1 and 2 on the (1,2) space: after
        // forgetting marking 2, the tail collapses and psi on the far half
        // becomes psi_1.
        let graph = StableGraph::from_edge_list(
            vec![0, 1],
            vec![vec![1, 2], vec![]],
            &[(0, 1)],
        )
        .unwrap();
        let mut dec = Decoration::empty(2);
        dec.psi_half.insert(1, 1);
        let t = crate::stratum::make_stratum(&graph, &dec).unwrap();
        assert_eq!(pushforward_forgetful(&t).unwrap(), psi(1, 1, 1));
        // Without decoration the tail pushes to the fundamental class.
        let t0 = crate::stratum::make_stratum(&graph, &Decoration::empty(2)).unwrap();
        assert_eq!(pushforward_forgetful(&t0).unwrap(), fund(1, 1));

        // A rational bridge: vertex with marking 3 joining two genus-1
        // pieces carrying markings 1 and 2; forgetting 3 joins the halves.
        let bridge = StableGraph::from_edge_list(
            vec![0, 1, 1],
            vec![vec![3], vec![1], vec![2]],
            &[(0, 1), (0, 2)],
        )
        .unwrap();
        let t = crate::stratum::make_stratum(&bridge, &Decoration::empty(3)).unwrap();
        let pushed = pushforward_forgetful(&t).unwrap();
        let expect_graph = StableGraph::from_edge_list(
            vec![1, 1],
            vec![vec![1], vec![2]],
            &[(0, 1)],
        )
        .unwrap();
        let expect =
            crate::stratum::make_stratum(&expect_graph, &Decoration::empty(2)).unwrap();
        assert_eq!(pushed, expect);
    }

    #[test]
    fn marking_average_identity_on_small_spaces() {
        // pi_*(pi^* alpha . psi_new) = (2g - 2 + n) alpha.
        for (g, n, alpha) in [
            (1u32, 1u32, fund(1, 1)),
            (1, 1, psi(1, 1, 1)),
            (1, 1, kappa(1, 1, 1)),
            (1, 1, dirr(1, 1)),
            (0, 4, psi(0, 4, 2)),
        ] {
            let scalar = qi(2 * g as i64 - 2 + n as i64);
            let up = pullback_forgetful(&alpha).unwrap();
            let timespsi = multiply(&up, &psi(g, n + 1, n + 1)).unwrap();
            let down = pushforward_forgetful(&timespsi).unwrap();
            assert_eq!(down, alpha.scale(&scalar), "failed at ({g},{n})");
        }
    }

    #[test]
    fn gluing_pushforward_and_pullback_on_the_loop() {
        // The self-gluing of the three-pointed rational curve onto the
        // (1,1) space.
        let loopg =
            StableGraph::from_edge_list(vec![0], vec![vec![1]], &[(0, 0)]).unwrap();
        let spec = GluingMapSpec::new(&loopg).unwrap();
        assert_eq!(spec.factors(), &[(0, 3)]);

        let pushed = pushforward_gluing(&spec, &FactoredClass::tensor(&[fund(0, 3)]).unwrap())
            .unwrap();
        assert_eq!(pushed, dirr(1, 1).scale(&qi(2)));
        assert_eq!(integrate_top(&pushed).unwrap(), qi(1));

        let pulled = pullback_gluing(&spec, &fund(1, 1)).unwrap();
        assert_eq!(pulled, FactoredClass::tensor(&[fund(0, 3)]).unwrap());
        assert_eq!(pulled.integrate().unwrap(), qi(1));

        // Projection formula on the nose: integral of xi_* x . y equals the
        // integral of x . xi^* y.
        let y = psi(1, 1, 1);
        let lhs = integrate_top(&multiply(&pushed, &y).unwrap()).unwrap();
        let rhs = multiply_factored(
            &FactoredClass::tensor(&[fund(0, 3)]).unwrap(),
            &pullback_gluing(&spec, &y).unwrap(),
        )
        .unwrap()
        .integrate()
        .unwrap();
        assert_eq!(lhs, rhs);
    }

    #[test]
    fn gluing_on_elliptic_tail_spec() {
        // Gluing (0; 1, 2, node) x (1; node) onto the (1,2) space.
        let gamma = StableGraph::from_edge_list(
            vec![0, 1],
            vec![vec![1, 2], vec![]],
            &[(0, 1)],
        )
        .unwrap();
        let spec = GluingMapSpec::new(&gamma).unwrap();
        assert_eq!(spec.factors(), &[(0, 3), (1, 1)]);

        // Push 1 (x) psi: psi on the (1,1) factor decorates the far half.
        let fc = FactoredClass::tensor(&[fund(0, 3), psi(1, 1, 1)]).unwrap();
        let pushed = pushforward_gluing(&spec, &fc).unwrap();
        assert_eq!(pushed.num_terms(), 1);
        assert_eq!(integrate_top(&pushed).unwrap(), qr(1, 24));

        // Projection formula against the psi class at marking 1.
        let y = psi(1, 2, 1).scale(&qr(5, 3));
        let lhs = integrate_top(
            &multiply(&pushforward_gluing(&spec, &fc).unwrap(), &y).unwrap(),
        )
        .unwrap();
        let rhs = multiply_factored(&fc, &pullback_gluing(&spec, &y).unwrap())
            .unwrap()
            .integrate()
            .unwrap();
        assert_eq!(lhs, rhs);

        // Project the pullback of a divisor onto the first factor.
        let pulled = pullback_gluing(&spec, &dirr(1, 2)).unwrap();
        let projected = pulled.project_to_first().unwrap();
        // The (1,1) factor integrates delta_irr to 1/2, leaving a class on
        // the (0,3) factor.
        assert_eq!(projected.ambient(), (0, 3));
        assert_eq!(integrate_top(&projected).unwrap(), qr(1, 2));
    }
}
