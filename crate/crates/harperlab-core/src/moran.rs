//! Typed languages, nested covering structures and their dimension bounds.
//!
//! A node `w` expands through a [`Template`]: an ordered child family inside
//! a reference hull, grouped into `k_w` blocks. Every block has exactly one
//! type-2 child (local index 0); the rest are type 1. Child intervals are the
//! affine images of the template bands in `I_w`.
//!
//! Nodes are never materialized level by level. Each node carries a
//! [`NodeKey`], and nodes with equal keys expand through the same template.
//! Under [`KeyScheme::PerLevel`] the key depends only on depth and type, so
//! level sums and node counts reduce to a small dynamic program over keys;
//! positional queries (box counts, prefractals, covers) walk the tree
//! virtually.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::bandset::{BandError, BandSet, Interval};
use crate::config::{gen_k_rho, Affine, BandRun, ConfigError, ConfigParams, Configuration};
use crate::contfrac::{CfError, ContinuedFraction};
use crate::numeric::Neumaier;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MoranError {
    #[error("structure violation at {word}: {reason}")]
    StructureViolation { word: String, reason: String },
    #[error("scale {r} is not resolved by the tree built to depth {depth}")]
    DepthInsufficient { r: f64, depth: u32 },
    #[error("{what} would need {needed} nodes (limit {limit})")]
    TooLarge { what: &'static str, needed: f64, limit: u64 },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Cf(#[from] CfError),
    #[error(transparent)]
    Band(#[from] BandError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum NodeType {
    One,
    Two,
}

impl NodeType {
    pub fn index(self) -> usize {
        match self {
            NodeType::One => 0,
            NodeType::Two => 1,
        }
    }

    pub fn number(self) -> u8 {
        self.index() as u8 + 1
    }
}

/// A letter `i_t^{[k]}`: type, global (block) index `k >= 1` and local index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Letter {
    pub ty: NodeType,
    pub global: u32,
    pub local: i64,
}

impl PartialOrd for Letter {
    fn partial_cmp(&self, o: &Self) -> Option<core::cmp::Ordering> {
        Some(self.cmp(o))
    }
}

impl Ord for Letter {
    // sibling order: global index first, then local index
    fn cmp(&self, o: &Self) -> core::cmp::Ordering {
        (self.global, self.local).cmp(&(o.global, o.local))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Word {
    pub root: NodeType,
    pub letters: Vec<Letter>,
}

impl Word {
    pub fn root(ty: NodeType) -> Self {
        Self { root: ty, letters: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    /// Type of the last letter (the root type for the empty word).
    pub fn ty(&self) -> NodeType {
        self.letters.last().map_or(self.root, |l| l.ty)
    }

    pub fn is_prefix_of(&self, other: &Word) -> bool {
        self.root == other.root
            && self.letters.len() <= other.letters.len()
            && other.letters[..self.letters.len()] == self.letters[..]
    }

    pub fn child(&self, l: Letter) -> Self {
        let mut w = self.clone();
        w.letters.push(l);
        w
    }
}

impl fmt::Display for Word {
    /// `@t` for the root, then `.global:local` per letter.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "@{}", self.root.number())?;
        for l in &self.letters {
            write!(f, ".{}:{}", l.global, l.local)?;
        }
        Ok(())
    }
}

/// Contiguous block of a child family: bands `first..=last`, type-2 child
/// `central`, and the map to its standard frame when known.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlockSpan {
    pub first: u64,
    pub last: u64,
    pub central: u64,
    pub frame: Option<Affine>,
}

/// Child family of a node in reference coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct Template {
    config: Configuration,
    blocks: Vec<BlockSpan>,
    h: Option<f64>,
    ln_hull: f64,
}

impl Template {
    pub fn new(config: Configuration, blocks: Vec<BlockSpan>, h: Option<f64>) -> Result<Self, String> {
        let n = config.band_count();
        let mut next = 0u64;
        for b in &blocks {
            if b.first != next || b.last < b.first || b.central < b.first || b.central > b.last {
                return Err(format!("blocks must tile the children in order, got {b:?}"));
            }
            next = b.last + 1;
        }
        if blocks.is_empty() || next != n {
            return Err("blocks must cover every child".into());
        }
        let ln_hull = config.hull().len().ln();
        Ok(Self { config, blocks, h, ln_hull })
    }

    /// Single-block template whose type-2 child is `central`.
    pub fn single_block(config: Configuration, central: u64, h: Option<f64>) -> Result<Self, String> {
        let last = config.band_count() - 1;
        Self::new(config, alloc::vec![BlockSpan { first: 0, last, central, frame: None }], h)
    }

    pub fn config(&self) -> &Configuration {
        &self.config
    }

    pub fn blocks(&self) -> &[BlockSpan] {
        &self.blocks
    }

    pub fn k(&self) -> u32 {
        self.blocks.len() as u32
    }

    pub fn h(&self) -> Option<f64> {
        self.h
    }

    pub fn child_count(&self) -> u64 {
        self.config.band_count()
    }

    pub fn letter(&self, i: u64) -> Letter {
        let b = self.blocks.partition_point(|b| b.last < i);
        let local = i as i64 - self.blocks[b].central as i64;
        let ty = if local == 0 { NodeType::Two } else { NodeType::One };
        Letter { ty, global: b as u32 + 1, local }
    }

    /// `ln(|J_i| / |hull|)`.
    pub fn ln_ratio(&self, i: u64) -> f64 {
        self.config.log_len(i) - self.ln_hull
    }

    /// `(min, max)` of `ln(|J| / |hull|)`.
    pub fn ln_ratio_range(&self) -> (f64, f64) {
        let (a, b) = self.config.log_len_range();
        (a - self.ln_hull, b - self.ln_hull)
    }

    /// `sum (|J|/|hull|)^delta` split by child type.
    pub fn delta_sums(&self, delta: f64) -> [f64; 2] {
        let mut all = Neumaier::new();
        for r in self.config.runs() {
            all.add(r.count as f64 * (delta * (r.log_len - self.ln_hull)).exp());
        }
        let mut two = Neumaier::new();
        for b in &self.blocks {
            two.add((delta * self.ln_ratio(b.central)).exp());
        }
        let two = two.total();
        [(all.total() - two).max(0.0), two]
    }

    fn count_by_type(&self) -> [f64; 2] {
        let k = self.blocks.len() as f64;
        [self.child_count() as f64 - k, k]
    }
}

/// How node keys are derived.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KeyScheme {
    /// Key depends on `(seed, depth, type)`: all nodes of one type on one
    /// level share a template.
    PerLevel,
    /// Key depends on the whole word; every node may differ.
    PerNode,
}

pub type NodeKey = u64;

/// Constants of the cover bound `16 k e^{C/h} / rho` per node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LemmaConstants {
    pub c: f64,
    pub rho: f64,
}

/// Deterministic node expansion.
pub trait ExpansionRule {
    fn scheme(&self) -> KeyScheme;
    /// Upper bound on `k_w`.
    fn kappa(&self) -> u32;
    /// Child family of a node with this key, type and depth.
    fn expand(&self, key: NodeKey, ty: NodeType, depth: u32) -> Result<Template, MoranError>;
    fn lemma_constants(&self) -> Option<LemmaConstants> {
        None
    }
}

/// splitmix64 finalizer.
pub fn mix(a: u64, b: u64) -> u64 {
    let mut z = a ^ b.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(0x632B_E59B_D9B4_E019);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn level_key(seed: u64, depth: u32, ty: NodeType) -> NodeKey {
    mix(mix(seed, depth as u64), ty.index() as u64 + 1)
}

fn letter_key(parent: NodeKey, l: Letter) -> NodeKey {
    mix(mix(parent, l.global as u64), l.local as u64 ^ ((l.ty.index() as u64) << 63))
}

#[derive(Debug, Clone, PartialEq)]
enum Children {
    /// Child level-node index per type.
    ByType([Option<usize>; 2]),
    /// Child level-node index per band.
    PerBand(Vec<usize>),
}

#[derive(Debug, Clone, PartialEq)]
struct LevelNode {
    key: NodeKey,
    ty: NodeType,
    witness: Word,
    /// Number of tree nodes carrying this key.
    count: f64,
    template: Option<usize>,
    children: Children,
}

/// Word-indexed nested covering structure built to a fixed depth.
#[derive(Debug, Clone, PartialEq)]
pub struct NestedCovering {
    root: Interval,
    root_type: NodeType,
    depth: u32,
    scheme: KeyScheme,
    kappa: u32,
    lemma: Option<LemmaConstants>,
    templates: Vec<Template>,
    levels: Vec<Vec<LevelNode>>,
}

/// Distinct keys allowed on one level.
pub const MAX_KEYS_PER_LEVEL: u64 = 1 << 20;

const RATIO_CAP: f64 = 0.1 * (1.0 + 1e-12);

fn violation(word: &Word, reason: impl Into<String>) -> MoranError {
    MoranError::StructureViolation { word: format!("{word}"), reason: reason.into() }
}

/// Builds the structure to `depth` from the root interval.
pub fn build(
    rule: &dyn ExpansionRule,
    root: Interval,
    root_type: NodeType,
    depth: u32,
    seed: u64,
) -> Result<NestedCovering, MoranError> {
    if !(root.len() > 0.0) {
        return Err(MoranError::InvalidArgument("root interval must have positive length".into()));
    }
    let scheme = rule.scheme();
    let kappa = rule.kappa();
    let mut templates: Vec<Template> = Vec::new();
    let mut levels: Vec<Vec<LevelNode>> = Vec::with_capacity(depth as usize + 1);
    let root_key = level_key(seed, 0, root_type);
    levels.push(alloc::vec![LevelNode {
        key: root_key,
        ty: root_type,
        witness: Word::root(root_type),
        count: 1.0,
        template: None,
        children: Children::ByType([None, None]),
    }]);
    for d in 0..depth {
        let mut next: Vec<LevelNode> = Vec::new();
        let mut index: BTreeMap<NodeKey, usize> = BTreeMap::new();
        let cur = &mut levels[d as usize];
        for node in cur.iter_mut() {
            let t = rule.expand(node.key, node.ty, d)?;
            validate(&t, node, kappa)?;
            let ti = templates.len();
            node.template = Some(ti);
            match scheme {
                KeyScheme::PerLevel => {
                    let mut by_type = [None, None];
                    let counts = t.count_by_type();
                    for ty in [NodeType::One, NodeType::Two] {
                        if counts[ty.index()] == 0.0 {
                            continue;
                        }
                        let key = level_key(seed, d + 1, ty);
                        let idx = *index.entry(key).or_insert_with(|| {
                            let i = next.len();
                            let first = if ty == NodeType::Two {
                                t.blocks[0].central
                            } else {
                                (0..t.child_count()).find(|&i| t.letter(i).ty == ty).expect("counted")
                            };
                            next.push(LevelNode {
                                key,
                                ty,
                                witness: node.witness.child(t.letter(first)),
                                count: 0.0,
                                template: None,
                                children: Children::ByType([None, None]),
                            });
                            i
                        });
                        next[idx].count += node.count * counts[ty.index()];
                        by_type[ty.index()] = Some(idx);
                    }
                    node.children = Children::ByType(by_type);
                }
                KeyScheme::PerNode => {
                    let n = t.child_count();
                    if next.len() as u64 + n > MAX_KEYS_PER_LEVEL {
                        return Err(MoranError::TooLarge {
                            what: "per-node expansion",
                            needed: (next.len() as u64 + n) as f64,
                            limit: MAX_KEYS_PER_LEVEL,
                        });
                    }
                    let mut v = Vec::with_capacity(n as usize);
                    for i in 0..n {
                        let l = t.letter(i);
                        v.push(next.len());
                        next.push(LevelNode {
                            key: letter_key(node.key, l),
                            ty: l.ty,
                            witness: node.witness.child(l),
                            count: node.count,
                            template: None,
                            children: Children::ByType([None, None]),
                        });
                    }
                    node.children = Children::PerBand(v);
                }
            }
            templates.push(t);
        }
        levels.push(next);
    }
    Ok(NestedCovering { root, root_type, depth, scheme, kappa, lemma: rule.lemma_constants(), templates, levels })
}

fn validate(t: &Template, node: &LevelNode, kappa: u32) -> Result<(), MoranError> {
    let k = t.k();
    if node.ty == NodeType::One && k != 1 {
        return Err(violation(&node.witness, format!("type-1 node expands with k = {k}")));
    }
    if k > kappa {
        return Err(violation(&node.witness, format!("k = {k} exceeds kappa = {kappa}")));
    }
    let (_, hi) = t.ln_ratio_range();
    if hi > RATIO_CAP.ln() {
        return Err(violation(&node.witness, format!("child ratio {} exceeds 1/10", hi.exp())));
    }
    // ordering and disjointness are enforced by the configuration itself
    Ok(())
}

/// A node reached by a virtual walk.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeView {
    pub word: Word,
    pub depth: u32,
    pub ty: NodeType,
    /// `k_w`, absent on the deepest built level.
    pub k: Option<u32>,
    pub h: Option<f64>,
    pub lo: f64,
    pub hi: f64,
    pub ln_len: f64,
}

#[derive(Debug, Clone, Copy)]
struct Pos {
    level_idx: usize,
    depth: u32,
    lo: f64,
    ln_len: f64,
}

/// Per-level `delta`-sum certificate.
#[derive(Debug, Clone, PartialEq)]
pub struct Certificate {
    pub delta: f64,
    pub holds: bool,
    /// Largest child sum `sum_e (|I_we| / |I_w|)^delta` over built nodes.
    pub max_child_sum: f64,
    /// A word attaining `max_child_sum`.
    pub worst: Word,
    /// `sum_{w in Omega_n} |I_w|^delta` for `n = 0..=depth`.
    pub level_sums: Vec<f64>,
    /// `|I_root|^delta`.
    pub root_bound: f64,
    /// Every level sum is at most the root bound (within `1e-12 * n`).
    pub levels_bounded: bool,
}

/// Output of [`NestedCovering::box_bound`].
#[derive(Debug, Clone, PartialEq)]
pub struct BoxBound {
    pub r: f64,
    pub cover_size: u64,
    /// `ln sum_u 16 k_u e^{C/h_u} / rho`, when the constants are known.
    pub ln_lemma_bound: Option<f64>,
    /// `sum_u ceil(|I_u| / r)`: each `I_u` covered by itself.
    pub interval_bound: f64,
    /// `min` of the two bounds above.
    pub n_r_bound: f64,
    /// Exact greedy box count of the deepest prefractal.
    pub exact: u64,
    pub holds: bool,
    /// `#U r^delta <= |I_root|^delta`.
    pub cover_size_holds: bool,
}

impl NestedCovering {
    pub fn root(&self) -> Interval {
        self.root
    }

    pub fn root_type(&self) -> NodeType {
        self.root_type
    }

    pub fn depth(&self) -> u32 {
        self.depth
    }

    pub fn scheme(&self) -> KeyScheme {
        self.scheme
    }

    pub fn kappa(&self) -> u32 {
        self.kappa
    }

    /// Distinct templates in use.
    pub fn templates(&self) -> &[Template] {
        &self.templates
    }

    /// Template of the root, if the structure has depth at least 1.
    pub fn root_template(&self) -> Option<&Template> {
        self.levels.first()?.first()?.template.map(|t| &self.templates[t])
    }

    /// `(witness word, template)` for every expanded key.
    pub fn expanded(&self) -> impl Iterator<Item = (&Word, &Template)> + '_ {
        self.levels
            .iter()
            .flatten()
            .filter_map(move |n| n.template.map(|t| (&n.witness, &self.templates[t])))
    }

    /// Number of nodes on each level.
    pub fn level_counts(&self) -> Vec<f64> {
        self.levels.iter().map(|l| l.iter().map(|n| n.count).sum()).collect()
    }

    pub fn node_count(&self) -> f64 {
        self.level_counts().iter().sum()
    }

    fn node(&self, depth: u32, idx: usize) -> &LevelNode {
        &self.levels[depth as usize][idx]
    }

    fn child_pos(&self, p: &Pos, t: &Template, i: u64) -> Pos {
        let node = self.node(p.depth, p.level_idx);
        let level_idx = match &node.children {
            Children::ByType(bt) => bt[t.letter(i).ty.index()].expect("child level node"),
            Children::PerBand(v) => v[i as usize],
        };
        let hull = t.config.hull();
        let b = t.config.band(i);
        let scale = (p.ln_len - t.ln_hull).exp();
        Pos { level_idx, depth: p.depth + 1, lo: p.lo + (b.lo - hull.lo) * scale, ln_len: p.ln_len + t.ln_ratio(i) }
    }

    fn root_pos(&self) -> Pos {
        Pos { level_idx: 0, depth: 0, lo: self.root.lo, ln_len: self.root.len().ln() }
    }

    fn template_at(&self, p: &Pos) -> Option<&Template> {
        self.node(p.depth, p.level_idx).template.map(|t| &self.templates[t])
    }

    fn hi_of(p: &Pos) -> f64 {
        p.lo + p.ln_len.exp()
    }

    /// Hausdorff `delta`-sum certificate: holds iff every expanded node has
    /// child sum at most 1.
    pub fn hausdorff_certificate(&self, delta: f64) -> Result<Certificate, MoranError> {
        if !(delta > 0.0 && delta < 1.0) {
            return Err(MoranError::InvalidArgument(format!("delta must lie in (0,1), got {delta}")));
        }
        let mut max_child = f64::NEG_INFINITY;
        let mut worst = Word::root(self.root_type);
        let root_bound = self.root.len().powf(delta);
        let mut weights = alloc::vec![root_bound];
        let mut level_sums = alloc::vec![root_bound];
        for d in 0..self.depth as usize {
            let mut next = alloc::vec![0.0f64; self.levels[d + 1].len()];
            for (node, &wgt) in self.levels[d].iter().zip(&weights) {
                let t = &self.templates[node.template.expect("expanded")];
                let sums = t.delta_sums(delta);
                let total = sums[0] + sums[1];
                if total > max_child {
                    max_child = total;
                    worst = node.witness.clone();
                }
                match &node.children {
                    Children::ByType(bt) => {
                        for ty in 0..2 {
                            if let Some(c) = bt[ty] {
                                next[c] += wgt * sums[ty];
                            }
                        }
                    }
                    Children::PerBand(v) => {
                        // a per-node weight is the node's own |I_w|^delta
                        for (i, &c) in v.iter().enumerate() {
                            next[c] += wgt * (delta * t.ln_ratio(i as u64)).exp();
                        }
                    }
                }
            }
            let mut s = Neumaier::new();
            for &x in &next {
                s.add(x);
            }
            level_sums.push(s.total());
            weights = next;
        }
        let holds = max_child <= 1.0 + 1e-12;
        let levels_bounded =
            level_sums.iter().enumerate().all(|(n, &s)| s <= root_bound * (1.0 + 1e-12 * (n as f64 + 1.0)));
        Ok(Certificate { delta, holds, max_child_sum: max_child, worst, level_sums, root_bound, levels_bounded })
    }

    /// Visits nodes in depth-first order up to `max_depth`; `f` returns
    /// `false` to skip a subtree.
    pub fn walk(&self, max_depth: u32, f: &mut dyn FnMut(&NodeView) -> bool) {
        let max_depth = max_depth.min(self.depth);
        let mut word = Word::root(self.root_type);
        self.walk_rec(&self.root_pos(), max_depth, &mut word, f);
    }

    fn walk_rec(&self, p: &Pos, max_depth: u32, word: &mut Word, f: &mut dyn FnMut(&NodeView) -> bool) {
        let node = self.node(p.depth, p.level_idx);
        let t = self.template_at(p);
        let view = NodeView {
            word: word.clone(),
            depth: p.depth,
            ty: node.ty,
            k: t.map(|t| t.k()),
            h: t.and_then(|t| t.h),
            lo: p.lo,
            hi: Self::hi_of(p),
            ln_len: p.ln_len,
        };
        if !f(&view) || p.depth >= max_depth {
            return;
        }
        let t = t.expect("expanded below the built depth");
        for i in 0..t.child_count() {
            let c = self.child_pos(p, t, i);
            word.letters.push(t.letter(i));
            self.walk_rec(&c, max_depth, word, f);
            word.letters.pop();
        }
    }

    /// `{I_w : w in Omega_n}` normalized; refuses beyond `limit` intervals.
    pub fn prefractal(&self, n: u32, limit: u64) -> Result<BandSet, MoranError> {
        if n > self.depth {
            return Err(MoranError::InvalidArgument(format!("level {n} beyond built depth {}", self.depth)));
        }
        let needed = self.level_counts()[n as usize];
        if needed > limit as f64 {
            return Err(MoranError::TooLarge { what: "prefractal", needed, limit });
        }
        let mut v = Vec::with_capacity(needed as usize);
        self.walk(n, &mut |nv| {
            if nv.depth == n {
                v.push(Interval { lo: nv.lo, hi: nv.hi.max(nv.lo) });
            }
            true
        });
        Ok(BandSet::normalize(&v)?)
    }

    /// Greedy box count of the level-`n` prefractal at scale `r`, by a
    /// pruned in-order walk; same sweep as [`BandSet::box_count`].
    pub fn box_count(&self, n: u32, r: f64) -> Result<u64, MoranError> {
        if !(r > 0.0) {
            return Err(BandError::NonPositiveScale(r).into());
        }
        if n > self.depth {
            return Err(MoranError::InvalidArgument(format!("level {n} beyond built depth {}", self.depth)));
        }
        let mut s = Sweep { r, slack: 1e-9 * r, count: 0, start: f64::NEG_INFINITY, run: 0, end: f64::NEG_INFINITY };
        self.sweep_rec(&self.root_pos(), n, &mut s);
        Ok(s.count)
    }

    fn sweep_rec(&self, p: &Pos, n: u32, s: &mut Sweep) {
        let hi = Self::hi_of(p);
        if hi <= s.end + s.slack {
            return;
        }
        let len = p.ln_len.exp();
        if p.depth == n || len == 0.0 {
            s.leaf(p.lo, hi);
            return;
        }
        let t = self.template_at(p).expect("expanded below the built depth");
        let hull = t.config.hull();
        let to_ref = |x: f64| hull.lo + (x - p.lo) * (t.ln_hull - p.ln_len).exp();
        let count = t.child_count();
        let mut i = 0u64;
        while i < count {
            if let Some(j) = t.config.first_ending_after(to_ref(s.end + s.slack)) {
                // step back one child against rounding in the reference map
                i = i.max(j.saturating_sub(1));
            } else {
                return;
            }
            if i >= count {
                return;
            }
            let c = self.child_pos(p, t, i);
            self.sweep_rec(&c, n, s);
            i += 1;
        }
    }

    /// The `r`-adapted cover: for every deepest word the shortest prefix `u`
    /// with `|I_u| > r` and `(J_u)_min <= r`.
    pub fn adapted_cover(&self, r: f64) -> Result<Vec<NodeView>, MoranError> {
        let ln_r = r.ln();
        if !(r > 0.0) || !(self.root.len() > r) {
            return Err(MoranError::DepthInsufficient { r, depth: self.depth });
        }
        let mut out = Vec::new();
        let mut word = Word::root(self.root_type);
        self.cover_rec(&self.root_pos(), ln_r, &mut word, &mut out)?;
        Ok(out)
    }

    fn cover_rec(&self, p: &Pos, ln_r: f64, word: &mut Word, out: &mut Vec<NodeView>) -> Result<(), MoranError> {
        let t = match self.template_at(p) {
            Some(t) => t,
            None => return Err(MoranError::DepthInsufficient { r: ln_r.exp(), depth: self.depth }),
        };
        let (ln_min, _) = t.ln_ratio_range();
        if p.ln_len + ln_min <= ln_r {
            let node = self.node(p.depth, p.level_idx);
            out.push(NodeView {
                word: word.clone(),
                depth: p.depth,
                ty: node.ty,
                k: Some(t.k()),
                h: t.h,
                lo: p.lo,
                hi: Self::hi_of(p),
                ln_len: p.ln_len,
            });
            if out.len() as u64 > MAX_KEYS_PER_LEVEL {
                return Err(MoranError::TooLarge {
                    what: "adapted cover",
                    needed: out.len() as f64,
                    limit: MAX_KEYS_PER_LEVEL,
                });
            }
            return Ok(());
        }
        for i in 0..t.child_count() {
            let c = self.child_pos(p, t, i);
            word.letters.push(t.letter(i));
            let res = self.cover_rec(&c, ln_r, word, out);
            word.letters.pop();
            res?;
        }
        Ok(())
    }

    /// Box-count bound from the adapted cover, compared with the exact count
    /// of the deepest prefractal.
    pub fn box_bound(&self, delta: f64, r: f64) -> Result<BoxBound, MoranError> {
        let cover = self.adapted_cover(r)?;
        let mut interval_bound = 0.0;
        let mut ln_terms: Option<f64> = self.lemma.map(|_| f64::NEG_INFINITY);
        for u in &cover {
            interval_bound += (u.ln_len.exp() / r * (1.0 - 1e-9)).ceil().max(1.0);
            if let (Some(acc), Some(lc)) = (ln_terms.as_mut(), self.lemma) {
                match u.h {
                    Some(h) => {
                        let term = (16.0 * u.k.unwrap_or(1) as f64 / lc.rho).ln() + lc.c / h;
                        *acc = crate::numeric::log_add_exp(*acc, term);
                    }
                    None => ln_terms = None,
                }
            }
        }
        let n_r_bound = match ln_terms {
            Some(l) => interval_bound.min(l.exp()),
            None => interval_bound,
        };
        let exact = self.box_count(self.depth, r)?;
        let cover_size = cover.len() as u64;
        let cover_size_holds = (cover_size as f64).ln() + delta * r.ln() <= delta * self.root.len().ln() + 1e-12;
        Ok(BoxBound {
            r,
            cover_size,
            ln_lemma_bound: ln_terms,
            interval_bound,
            n_r_bound,
            exact,
            holds: exact as f64 <= n_r_bound,
            cover_size_holds,
        })
    }
}

struct Sweep {
    r: f64,
    slack: f64,
    count: u64,
    start: f64,
    run: u64,
    end: f64,
}

impl Sweep {
    fn leaf(&mut self, lo: f64, hi: f64) {
        if hi <= self.end + self.slack {
            return;
        }
        if lo > self.end + self.slack {
            self.start = lo;
            self.run = 1;
            self.count += 1;
            self.end = lo + self.r;
        }
        if hi > self.end + self.slack {
            let extra = ((hi - self.end - self.slack) / self.r).ceil().max(1.0) as u64;
            self.run += extra;
            self.count += extra;
            self.end = self.start + self.run as f64 * self.r;
        }
    }
}

/// Two children `[0, 1/10]` (type 1, local -1) and `[9/10, 1]` (type 2).
#[derive(Debug, Clone, Copy, Default)]
pub struct ToyRule;

impl ToyRule {
    pub fn template() -> Template {
        let hull = Interval { lo: 0.0, hi: 1.0 };
        let runs = alloc::vec![BandRun::single(0.0, 0.1, 0.0), BandRun::single(0.9, 1.0, 0.8)];
        let cfg = Configuration::family(hull, runs).expect("static family");
        Template::single_block(cfg, 1, None).expect("static blocks")
    }
}

impl ExpansionRule for ToyRule {
    fn scheme(&self) -> KeyScheme {
        KeyScheme::PerLevel
    }

    fn kappa(&self) -> u32 {
        1
    }

    fn expand(&self, _: NodeKey, _: NodeType, _: u32) -> Result<Template, MoranError> {
        Ok(Self::template())
    }
}

/// Semiclassical parameter per depth.
#[derive(Debug, Clone, PartialEq)]
pub enum HStream {
    Constant(f64),
    /// `h_{depth + offset}` of a continued fraction.
    Continued { cf: ContinuedFraction, offset: usize },
    /// Explicit values; the last one repeats.
    Scripted(Vec<f64>),
}

impl HStream {
    pub fn at(&self, depth: u32) -> Result<f64, MoranError> {
        match self {
            HStream::Constant(h) => Ok(*h),
            HStream::Continued { cf, offset } => Ok(cf.h_n(depth as usize + offset)?),
            HStream::Scripted(v) => v
                .get(depth as usize)
                .or(v.last())
                .copied()
                .ok_or_else(|| MoranError::InvalidArgument("empty h script".into())),
        }
    }
}

/// Expansion by generated `(k, rho)`-configurations: type-1 nodes use one
/// standard block, type-2 nodes `k = 1 + key mod kappa` blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct StandardRule {
    pub params: ConfigParams,
    pub kappa: u32,
    pub rho: f64,
    pub h: HStream,
}

impl ExpansionRule for StandardRule {
    fn scheme(&self) -> KeyScheme {
        KeyScheme::PerLevel
    }

    fn kappa(&self) -> u32 {
        self.kappa
    }

    fn expand(&self, key: NodeKey, ty: NodeType, depth: u32) -> Result<Template, MoranError> {
        let h = self.h.at(depth)?;
        let params = self.params.with_h(h);
        let k = match ty {
            NodeType::One => 1,
            NodeType::Two => 1 + (key % self.kappa.max(1) as u64) as u32,
        };
        let g = gen_k_rho(&params, k, self.rho, Interval { lo: 0.0, hi: 1.0 }, key)?;
        let blocks = g
            .blocks
            .iter()
            .map(|b| BlockSpan { first: b.first, last: b.last, central: b.central, frame: b.frame })
            .collect();
        Template::new(g.config, blocks, Some(h)).map_err(|e| MoranError::InvalidArgument(e))
    }

    fn lemma_constants(&self) -> Option<LemmaConstants> {
        Some(LemmaConstants { c: self.params.c, rho: self.rho })
    }
}

/// Random per-node rule for structural tests: 2 to `max_children` children
/// with ratios in `[min_ratio, 1/10]`, random gaps, `k <= kappa` blocks on
/// type-2 nodes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RandomRule {
    pub seed: u64,
    pub max_children: u32,
    pub kappa: u32,
    pub min_ratio: f64,
}

impl ExpansionRule for RandomRule {
    fn scheme(&self) -> KeyScheme {
        KeyScheme::PerNode
    }

    fn kappa(&self) -> u32 {
        self.kappa
    }

    fn expand(&self, key: NodeKey, ty: NodeType, _: u32) -> Result<Template, MoranError> {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(mix(self.seed, key));
        let k = match ty {
            NodeType::One => 1,
            NodeType::Two => rng.gen_range(1..=self.kappa.max(1)),
        };
        let n = rng.gen_range(2.max(k)..=self.max_children.max(2).max(k)) as usize;
        let lens: Vec<f64> = (0..n).map(|_| rng.gen_range(self.min_ratio..=0.1)).collect();
        let free = 1.0 - lens.iter().sum::<f64>();
        let mut cuts: Vec<f64> = (0..n + 1).map(|_| rng.gen_range(0.0..1.0)).collect();
        let total: f64 = cuts.iter().sum();
        cuts.iter_mut().for_each(|c| *c *= free / total);
        let mut runs = Vec::with_capacity(n);
        let mut pos = cuts[0];
        for (i, &l) in lens.iter().enumerate() {
            let lead = if i == 0 { pos } else { cuts[i] };
            runs.push(BandRun { lo: pos, log_len: l.ln(), gap: 0.0, lead, count: 1 });
            pos += l + cuts[i + 1];
        }
        let cfg = Configuration::family(Interval { lo: 0.0, hi: 1.0 }, runs)?;
        // k contiguous blocks with a random type-2 child each
        let mut bounds: Vec<u64> = (1..n as u64).collect();
        for i in 0..bounds.len() {
            let j = rng.gen_range(i..bounds.len());
            bounds.swap(i, j);
        }
        bounds.truncate(k as usize - 1);
        bounds.sort_unstable();
        let mut blocks = Vec::with_capacity(k as usize);
        let mut first = 0u64;
        for end in bounds.into_iter().chain(core::iter::once(n as u64)) {
            let central = rng.gen_range(first..end);
            blocks.push(BlockSpan { first, last: end - 1, central, frame: None });
            first = end;
        }
        Template::new(cfg, blocks, None).map_err(MoranError::InvalidArgument)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{audit_k_rho, h_threshold, Block};

    fn unit() -> Interval {
        Interval { lo: 0.0, hi: 1.0 }
    }

    fn moran_delta() -> f64 {
        2f64.ln() / 10f64.ln()
    }

    #[test]
    fn toy_leaves() {
        let nc = build(&ToyRule, unit(), NodeType::Two, 3, 0).unwrap();
        assert_eq!(nc.level_counts(), alloc::vec![1.0, 2.0, 4.0, 8.0]);
        let p = nc.prefractal(3, 100).unwrap();
        assert_eq!(p.len(), 8);
        for iv in p.iter() {
            assert!((iv.len() - 1e-3).abs() < 1e-15);
        }
        let p1 = nc.prefractal(1, 100).unwrap();
        assert_eq!(p1.len(), 2);
        assert!((p1.intervals()[1].lo - 0.9).abs() < 1e-15);
        let root = build(&ToyRule, unit(), NodeType::Two, 0, 0).unwrap();
        assert_eq!(root.prefractal(0, 1).unwrap().intervals(), &[unit()]);
    }

    #[test]
    fn toy_letters_and_types() {
        let t = ToyRule::template();
        assert_eq!(t.letter(0), Letter { ty: NodeType::One, global: 1, local: -1 });
        assert_eq!(t.letter(1), Letter { ty: NodeType::Two, global: 1, local: 0 });
        assert!(t.letter(0) < t.letter(1));
    }

    #[test]
    fn toy_measure_and_nesting() {
        let nc = build(&ToyRule, unit(), NodeType::Two, 6, 0).unwrap();
        let mut prev = nc.prefractal(0, 1000).unwrap();
        for n in 1..=6 {
            let p = nc.prefractal(n, 1000).unwrap();
            assert!(p.is_subset_within(&prev, 1e-15));
            assert!(p.measure() <= prev.measure());
            assert!(p.measure() <= 0.2f64.powi(n as i32) * (1.0 + 1e-9), "{n} {}", p.measure());
            prev = p;
        }
    }

    #[test]
    fn toy_certificate() {
        let nc = build(&ToyRule, unit(), NodeType::Two, 5, 0).unwrap();
        let d = moran_delta();
        let c = nc.hausdorff_certificate(d).unwrap();
        assert!(c.holds && c.levels_bounded);
        assert!((c.max_child_sum - 1.0).abs() < 1e-12);
        for s in &c.level_sums {
            assert!((s - 1.0).abs() < 1e-12);
        }
        let c = nc.hausdorff_certificate(0.9 * d).unwrap();
        assert!(!c.holds && c.max_child_sum > 1.0);
    }

    #[test]
    fn toy_adapted_cover() {
        let nc = build(&ToyRule, unit(), NodeType::Two, 3, 0).unwrap();
        let u = nc.adapted_cover(0.999).unwrap();
        assert_eq!(u.len(), 1);
        assert!(u[0].word.is_empty());
        let u = nc.adapted_cover(1.5 / 100.0).unwrap();
        assert_eq!(u.len(), 2);
        assert!(u.iter().all(|v| v.depth == 1));
        assert!(matches!(nc.adapted_cover(1e-5), Err(MoranError::DepthInsufficient { .. })));
        assert!(matches!(nc.adapted_cover(2.0), Err(MoranError::DepthInsufficient { .. })));
    }

    #[test]
    fn toy_box_counts_match_prefractal() {
        let nc = build(&ToyRule, unit(), NodeType::Two, 6, 0).unwrap();
        let p = nc.prefractal(6, 1 << 10).unwrap();
        let mut r = 0.7;
        while r > 1e-7 {
            assert_eq!(nc.box_count(6, r).unwrap(), p.box_count(r).unwrap(), "r={r}");
            r *= 0.37;
        }
        let b = nc.box_bound(moran_delta(), 0.015).unwrap();
        assert!(b.holds && b.cover_size_holds);
        assert!(b.exact as f64 <= b.n_r_bound);
    }

    #[test]
    fn random_rules_are_consistent() {
        for seed in 0..40 {
            let rule = RandomRule { seed, max_children: 4, kappa: 3, min_ratio: 0.01 };
            let nc = build(&rule, unit(), NodeType::Two, 3, seed).unwrap();
            let p = nc.prefractal(3, 1 << 12).unwrap();
            for r in [0.05, 3e-3, 4e-4, 2e-5] {
                assert_eq!(nc.box_count(3, r).unwrap(), p.box_count(r).unwrap());
            }
            let cover = nc.adapted_cover(2e-3).unwrap();
            for (a, u) in cover.iter().enumerate() {
                for v in &cover[a + 1..] {
                    assert!(!u.word.is_prefix_of(&v.word) && !v.word.is_prefix_of(&u.word));
                }
            }
            let ivs: Vec<Interval> = cover.iter().map(|u| Interval { lo: u.lo, hi: u.hi }).collect();
            assert!(p.is_subset_within(&BandSet::normalize(&ivs).unwrap(), 1e-15));
            // type-1 nodes never split
            for (w, t) in nc.expanded() {
                assert!(w.ty() == NodeType::Two || t.k() == 1);
            }
        }
    }

    #[test]
    fn oversized_child_is_rejected() {
        struct Wide;
        impl ExpansionRule for Wide {
            fn scheme(&self) -> KeyScheme {
                KeyScheme::PerLevel
            }
            fn kappa(&self) -> u32 {
                1
            }
            fn expand(&self, _: NodeKey, _: NodeType, _: u32) -> Result<Template, MoranError> {
                let runs = alloc::vec![BandRun::single(0.0, 0.5, 0.0), BandRun::single(0.9, 1.0, 0.4)];
                let cfg = Configuration::family(Interval { lo: 0.0, hi: 1.0 }, runs)?;
                Ok(Template::single_block(cfg, 1, None).unwrap())
            }
        }
        let e = build(&Wide, unit(), NodeType::Two, 2, 0).unwrap_err();
        assert!(matches!(e, MoranError::StructureViolation { .. }), "{e}");
    }

    fn standard_rule(h: f64) -> StandardRule {
        let params = ConfigParams::new(3.5, 0.03, 8.0, 2.0, 1e-3).unwrap();
        StandardRule { params, kappa: 2, rho: 0.5, h: HStream::Constant(h) }
    }

    #[test]
    fn standard_rule_nodes_pass_the_audit() {
        let rule = standard_rule(1e-3);
        let nc = build(&rule, unit(), NodeType::Two, 3, 5).unwrap();
        assert!(nc.templates().len() >= 4);
        let p = rule.params;
        for (_, t) in nc.expanded() {
            let blocks: Vec<Block> = t
                .blocks()
                .iter()
                .map(|b| {
                    let hull = if t.k() == 1 {
                        t.config().hull()
                    } else {
                        Interval { lo: t.config().band(b.first).lo, hi: t.config().band(b.last).hi }
                    };
                    Block { hull, first: b.first, last: b.last, central: b.central, frame: b.frame }
                })
                .collect();
            let rep = audit_k_rho(t.config(), Some(&blocks), t.k(), 0.5, &p).unwrap();
            assert!(rep.pass, "{rep:?}");
        }
    }

    #[test]
    fn standard_rule_certificate_below_threshold() {
        let rule = standard_rule(1e-3);
        let t = h_threshold(0.5, 2, 0.5, &rule.params).unwrap();
        let rule = standard_rule(t.h);
        let nc = build(&rule, unit(), NodeType::Two, 4, 1).unwrap();
        let c = nc.hausdorff_certificate(0.5).unwrap();
        assert!(c.holds && c.levels_bounded, "{c:?}");
        assert!(nc.node_count() > 1e6);
    }

    #[test]
    fn h_streams() {
        assert_eq!(HStream::Scripted(alloc::vec![0.1, 0.2]).at(5).unwrap(), 0.2);
        let cf = ContinuedFraction::constant(1).unwrap();
        let s = HStream::Continued { cf: cf.clone(), offset: 1 };
        assert_eq!(s.at(0).unwrap(), cf.h_n(1).unwrap());
    }
}
