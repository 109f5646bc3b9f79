//! Labeled binary forests, the destruction map `R`, uniform tree sampling,
//! and Lukasiewicz coding of plane forests.
//!
//! A forest on `{0, ..., N-1}` whose components are full binary trees, with
//! internal vertices bijectively labeled `1..=(N-m)/2`, destructs by deleting
//! the outgoing edges of the highest-labeled internal vertex (`R`). Every
//! fiber of `R` has the same size, so running the randomized inverse from the
//! edgeless forest samples uniformly at every level and realizes the
//! coalescent state chain as ranked component sizes.

use crate::error::{Error, Result};
use crate::partition::MassPartition;
use crate::rng::{root_rng, SimRng};
use crate::walk::LatticePath;
use rand::Rng;

/// Forest of full binary trees with labeled internal vertices.
///
/// Children pairs are stored as `(min, max)`; the child order of the labeled
/// object is immaterial. Roots are kept sorted ascending, the component
/// enumeration order.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LabeledBinaryForest {
    children: Vec<Option<(usize, usize)>>,
    parent: Vec<Option<usize>>,
    label: Vec<Option<u32>>,
    roots: Vec<usize>,
}

impl LabeledBinaryForest {
    /// The edgeless forest on `n_vertices` isolated vertices.
    pub fn edgeless(n_vertices: usize) -> Result<Self> {
        if n_vertices == 0 || n_vertices % 2 == 0 {
            return Err(Error::InvalidParameter(format!(
                "vertex count must be odd, got {n_vertices}"
            )));
        }
        Ok(Self {
            children: vec![None; n_vertices],
            parent: vec![None; n_vertices],
            label: vec![None; n_vertices],
            roots: (0..n_vertices).collect(),
        })
    }

    pub fn n_vertices(&self) -> usize {
        self.children.len()
    }

    pub fn n_components(&self) -> usize {
        self.roots.len()
    }

    pub fn roots(&self) -> &[usize] {
        &self.roots
    }

    pub fn children(&self, v: usize) -> Option<(usize, usize)> {
        self.children[v]
    }

    pub fn label_of(&self, v: usize) -> Option<u32> {
        self.label[v]
    }

    pub fn n_internal(&self) -> usize {
        (self.n_vertices() - self.n_components()) / 2
    }

    /// Vertices that are not internal: isolated vertices and degree-one ends.
    pub fn leaves(&self) -> Vec<usize> {
        (0..self.n_vertices()).filter(|&v| self.children[v].is_none()).collect()
    }

    pub fn root_of(&self, mut v: usize) -> usize {
        while let Some(p) = self.parent[v] {
            v = p;
        }
        v
    }

    fn component_size(&self, root: usize) -> u64 {
        let mut stack = vec![root];
        let mut size = 0u64;
        while let Some(v) = stack.pop() {
            size += 1;
            if let Some((a, b)) = self.children[v] {
                stack.push(a);
                stack.push(b);
            }
        }
        size
    }

    /// Ranked component sizes.
    pub fn size_partition(&self) -> MassPartition {
        let sizes: Vec<u64> = self.roots.iter().map(|&r| self.component_size(r)).collect();
        MassPartition::rank(&sizes).expect("forest has at least one component")
    }

    /// Destruction step: delete both outgoing edges of the internal vertex
    /// with the highest label (which becomes an unlabeled leaf).
    pub fn apply_r(&self) -> Result<Self> {
        let v = (0..self.n_vertices())
            .filter(|&v| self.label[v].is_some())
            .max_by_key(|&v| self.label[v])
            .ok_or(Error::NoInternalVertex)?;
        let (a, b) = self.children[v].expect("labeled vertex has children");
        let mut next = self.clone();
        next.children[v] = None;
        next.label[v] = None;
        next.parent[a] = None;
        next.parent[b] = None;
        next.roots.push(a);
        next.roots.push(b);
        next.roots.sort_unstable();
        Ok(next)
    }

    /// Deterministic preimage of `R`: attach the roots `root_a` and `root_b`
    /// (of components not containing `leaf`) below `leaf`, which receives the
    /// next label.
    pub fn merge_at(&self, leaf: usize, root_a: usize, root_b: usize) -> Result<Self> {
        if self.children[leaf].is_some() {
            return Err(Error::InvalidParameter(format!("vertex {leaf} is not a leaf")));
        }
        let own_root = self.root_of(leaf);
        for r in [root_a, root_b] {
            if !self.roots.contains(&r) || r == own_root {
                return Err(Error::InvalidParameter(format!("{r} is not a usable root")));
            }
        }
        if root_a == root_b {
            return Err(Error::InvalidParameter("roots must be distinct".into()));
        }
        let (a, b) = (root_a.min(root_b), root_a.max(root_b));
        let mut next = self.clone();
        next.children[leaf] = Some((a, b));
        next.parent[a] = Some(leaf);
        next.parent[b] = Some(leaf);
        next.label[leaf] = Some(next.n_internal() as u32 + 1);
        next.roots.retain(|&r| r != a && r != b);
        Ok(next)
    }

    /// Randomized inverse of `R`: pick a uniform leaf, connect it to two
    /// uniformly chosen roots of other components, and give it the next
    /// label. Uniform over the `(n+k+1) k (2k-1)` preimages.
    pub fn inverse_r_step(&self, rng: &mut SimRng) -> Result<Self> {
        let m = self.n_components();
        if m < 3 {
            return Err(Error::InvalidParameter(format!(
                "need at least 3 components to merge, got {m}"
            )));
        }
        let leaves = self.leaves();
        let leaf = leaves[rng.gen_range(0..leaves.len())];
        let own_root = self.root_of(leaf);
        let others: Vec<usize> = self.roots.iter().copied().filter(|&r| r != own_root).collect();
        let i0 = rng.gen_range(0..others.len());
        let mut i1 = rng.gen_range(0..others.len() - 1);
        if i1 >= i0 {
            i1 += 1;
        }
        self.merge_at(leaf, others[i0], others[i1])
    }

    /// Structural sanity check used by tests and the oracle enumeration.
    pub fn check_invariants(&self) -> Result<()> {
        let n = self.n_vertices();
        let m = self.n_components();
        let internal = self.n_internal();
        let mut seen_labels = vec![false; internal];
        for v in 0..n {
            match (self.children[v], self.label[v]) {
                (Some((a, b)), Some(lab)) => {
                    if a >= b || self.parent[a] != Some(v) || self.parent[b] != Some(v) {
                        return Err(Error::InconsistentState(format!("bad children of {v}")));
                    }
                    let idx = lab as usize - 1;
                    if idx >= internal || seen_labels[idx] {
                        return Err(Error::InconsistentState(format!("bad label {lab}")));
                    }
                    seen_labels[idx] = true;
                }
                (None, None) => {}
                _ => return Err(Error::InconsistentState(format!("vertex {v} half-internal"))),
            }
        }
        let total: u64 = self.roots.iter().map(|&r| self.component_size(r)).sum();
        if total != n as u64 || self.roots.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InconsistentState("roots do not partition the forest".into()));
        }
        if (n + m) / 2 != self.leaves().len() {
            return Err(Error::InconsistentState("leaf count off".into()));
        }
        Ok(())
    }
}

/// Uniform sample from the labeled binary trees on `n_vertices` vertices:
/// `(N-1)/2` inverse destruction steps from the edgeless forest.
pub fn sample_uniform_tree(n_vertices: usize, seed: u64) -> Result<LabeledBinaryForest> {
    let mut rng = root_rng(seed);
    sample_uniform_tree_with(n_vertices, &mut rng)
}

pub fn sample_uniform_tree_with(
    n_vertices: usize,
    rng: &mut SimRng,
) -> Result<LabeledBinaryForest> {
    let mut f = LabeledBinaryForest::edgeless(n_vertices)?;
    for _ in 0..(n_vertices - 1) / 2 {
        f = f.inverse_r_step(rng)?;
    }
    Ok(f)
}

/// Coalescent-order state chain read off the forest construction: ranked
/// component sizes after each merge, from `(1, ..., 1)` to `(N)`.
pub fn forest_chain(n_vertices: usize, seed: u64) -> Result<Vec<MassPartition>> {
    let mut rng = root_rng(seed);
    forest_chain_with(n_vertices, &mut rng)
}

pub fn forest_chain_with(n_vertices: usize, rng: &mut SimRng) -> Result<Vec<MassPartition>> {
    let mut f = LabeledBinaryForest::edgeless(n_vertices)?;
    let mut states = vec![f.size_partition()];
    for _ in 0..(n_vertices - 1) / 2 {
        f = f.inverse_r_step(rng)?;
        states.push(f.size_partition());
    }
    Ok(states)
}

/// Full binary plane tree: children are ordered.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PlaneTree {
    Leaf,
    Node(Box<PlaneTree>, Box<PlaneTree>),
}

impl PlaneTree {
    pub fn size(&self) -> usize {
        match self {
            PlaneTree::Leaf => 1,
            PlaneTree::Node(l, r) => 1 + l.size() + r.size(),
        }
    }
}

/// Ordered sequence of full binary plane trees.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PlaneForest {
    pub trees: Vec<PlaneTree>,
}

impl PlaneForest {
    pub fn n_vertices(&self) -> usize {
        self.trees.iter().map(PlaneTree::size).sum()
    }

    pub fn n_components(&self) -> usize {
        self.trees.len()
    }
}

/// Lukasiewicz path of a plane forest: depth-first increments
/// `children - 1`, a new tree starting at each new minimum.
pub fn lukasiewicz_encode(forest: &PlaneForest) -> LatticePath {
    let mut values = vec![0i64];
    let mut v = 0i64;
    for tree in &forest.trees {
        let mut stack = vec![tree];
        while let Some(node) = stack.pop() {
            match node {
                PlaneTree::Leaf => v -= 1,
                PlaneTree::Node(l, r) => {
                    v += 1;
                    stack.push(r);
                    stack.push(l);
                }
            }
            values.push(v);
        }
    }
    LatticePath::from_values(values).expect("encoding starts at zero")
}

/// Rebuild the plane forest from its Lukasiewicz path.
pub fn lukasiewicz_decode(path: &LatticePath) -> Result<PlaneForest> {
    let values = path.values();
    if values.is_empty() || values[0] != 0 {
        return Err(Error::InvalidParameter("path must start at zero".into()));
    }
    let incs: Vec<i64> = values.windows(2).map(|w| w[1] - w[0]).collect();
    if let Some(bad) = incs.iter().find(|&&i| i != 1 && i != -1) {
        return Err(Error::InvalidParameter(format!("increment {bad} invalid for binary coding")));
    }
    fn parse(incs: &[i64], pos: &mut usize) -> Result<PlaneTree> {
        match incs.get(*pos) {
            Some(1) => {
                *pos += 1;
                let left = parse(incs, pos)?;
                let right = parse(incs, pos)?;
                Ok(PlaneTree::Node(Box::new(left), Box::new(right)))
            }
            Some(-1) => {
                *pos += 1;
                Ok(PlaneTree::Leaf)
            }
            _ => Err(Error::InvalidParameter("path ends inside a tree".into())),
        }
    }
    let mut pos = 0usize;
    let mut trees = Vec::new();
    while pos < incs.len() {
        trees.push(parse(&incs, &mut pos)?);
    }
    Ok(PlaneForest { trees })
}

/// Forget labels: randomize the component order and every child order.
///
/// A uniform labeled forest with uniform orientations projects to a uniform
/// plane forest (the conversion factor `2^{(N-m)/2} m! / (N! ((N-m)/2)!)`
/// between the two counts is constant over shapes).
pub fn to_plane_with(f: &LabeledBinaryForest, rng: &mut SimRng) -> PlaneForest {
    fn build(f: &LabeledBinaryForest, v: usize, rng: &mut SimRng) -> PlaneTree {
        match f.children(v) {
            None => PlaneTree::Leaf,
            Some((a, b)) => {
                let (first, second) = if rng.gen::<bool>() { (a, b) } else { (b, a) };
                PlaneTree::Node(
                    Box::new(build(f, first, rng)),
                    Box::new(build(f, second, rng)),
                )
            }
        }
    }
    let mut order: Vec<usize> = f.roots().to_vec();
    // Fisher-Yates over component order.
    for i in (1..order.len()).rev() {
        let j = rng.gen_range(0..=i);
        order.swap(i, j);
    }
    PlaneForest { trees: order.into_iter().map(|r| build(f, r, rng)).collect() }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeMap;

    #[test]
    fn edgeless_shape() {
        let f = LabeledBinaryForest::edgeless(5).unwrap();
        assert_eq!(f.n_components(), 5);
        assert_eq!(f.n_internal(), 0);
        assert_eq!(f.size_partition().masses(), &[1, 1, 1, 1, 1]);
        f.check_invariants().unwrap();
        assert!(LabeledBinaryForest::edgeless(4).is_err());
        assert!(matches!(f.apply_r(), Err(Error::NoInternalVertex)));
    }

    #[test]
    fn single_merge_and_back() {
        let mut rng = root_rng(1);
        let f = LabeledBinaryForest::edgeless(3).unwrap();
        let merged = f.inverse_r_step(&mut rng).unwrap();
        merged.check_invariants().unwrap();
        assert_eq!(merged.n_components(), 1);
        assert_eq!(merged.size_partition().masses(), &[3]);
        let back = merged.apply_r().unwrap();
        assert_eq!(back, f);
    }

    #[test]
    fn three_trees_on_three_vertices() {
        // F(1,3) has exactly three elements: each vertex once as the root.
        let mut rng = root_rng(2);
        let mut counts: BTreeMap<usize, u64> = BTreeMap::new();
        let samples = 30_000;
        for _ in 0..samples {
            let f =
                LabeledBinaryForest::edgeless(3).unwrap().inverse_r_step(&mut rng).unwrap();
            *counts.entry(f.roots()[0]).or_default() += 1;
        }
        assert_eq!(counts.len(), 3);
        for (_, c) in counts {
            assert!((c as f64 / samples as f64 - 1.0 / 3.0).abs() < 0.02);
        }
    }

    #[test]
    fn inverse_r_is_section_of_r() {
        let mut rng = root_rng(3);
        for n_vertices in [5usize, 7, 9] {
            let mut f = LabeledBinaryForest::edgeless(n_vertices).unwrap();
            while f.n_components() >= 3 {
                let next = f.inverse_r_step(&mut rng).unwrap();
                next.check_invariants().unwrap();
                assert_eq!(next.n_components(), f.n_components() - 2);
                assert_eq!(next.apply_r().unwrap(), f);
                f = next;
            }
            assert_eq!(f.n_components(), 1);
        }
    }

    #[test]
    fn destruction_reverses_construction_sizes() {
        let seed = 4;
        let tree = sample_uniform_tree(9, seed).unwrap();
        tree.check_invariants().unwrap();
        let mut f = tree;
        let mut sizes = vec![f.size_partition()];
        while f.n_internal() > 0 {
            f = f.apply_r().unwrap();
            sizes.push(f.size_partition());
        }
        assert_eq!(sizes.first().unwrap().masses(), &[9]);
        assert_eq!(sizes.last().unwrap().masses(), &vec![1u64; 9][..]);
        for (i, s) in sizes.iter().enumerate() {
            assert_eq!(s.len(), 2 * i + 1);
            assert!(s.masses().iter().all(|&m| m % 2 == 1));
        }
    }

    #[test]
    fn forest_chain_shapes() {
        let chain = forest_chain(3, 5).unwrap();
        assert_eq!(chain.len(), 2);
        assert_eq!(chain[0].masses(), &[1, 1, 1]);
        assert_eq!(chain[1].masses(), &[3]);

        let chain = forest_chain(9, 6).unwrap();
        assert_eq!(chain.len(), 5);
        for (l, state) in chain.iter().enumerate() {
            assert_eq!(state.total_mass(), 9);
            assert_eq!(state.len(), 9 - 2 * l);
            assert!(state.masses().iter().all(|&m| m % 2 == 1));
        }
    }

    #[test]
    fn lukasiewicz_single_vertex() {
        let forest = PlaneForest { trees: vec![PlaneTree::Leaf] };
        let path = lukasiewicz_encode(&forest);
        assert_eq!(path.values(), &[0, -1]);
        assert_eq!(lukasiewicz_decode(&path).unwrap(), forest);
    }

    #[test]
    fn lukasiewicz_figure_forest() {
        // Eleven vertices, three components: a 7-vertex tree whose root has a
        // leaf first child and whose second child carries another internal
        // vertex, then an isolated vertex, then a 3-vertex tree. The path
        // first hits -1 at 7, -2 at 8 and -3 at 11.
        let seven = PlaneTree::Node(
            Box::new(PlaneTree::Leaf),
            Box::new(PlaneTree::Node(
                Box::new(PlaneTree::Node(Box::new(PlaneTree::Leaf), Box::new(PlaneTree::Leaf))),
                Box::new(PlaneTree::Leaf),
            )),
        );
        let three = PlaneTree::Node(Box::new(PlaneTree::Leaf), Box::new(PlaneTree::Leaf));
        let forest = PlaneForest { trees: vec![seven, PlaneTree::Leaf, three] };
        assert_eq!(forest.n_vertices(), 11);
        let path = lukasiewicz_encode(&forest);
        assert_eq!(path.values(), &[0, 1, 0, 1, 2, 1, 0, -1, -2, -1, -2, -3]);
        let first_hit = |target: i64| {
            path.values().iter().position(|&v| v == target).unwrap()
        };
        assert_eq!(first_hit(-1), 7);
        assert_eq!(first_hit(-2), 8);
        assert_eq!(first_hit(-3), 11);
        assert_eq!(lukasiewicz_decode(&path).unwrap(), forest);
    }

    #[test]
    fn lukasiewicz_roundtrip_random() {
        fn random_tree(size: usize, rng: &mut SimRng) -> PlaneTree {
            if size == 1 {
                return PlaneTree::Leaf;
            }
            let max_left = size - 2;
            let left = 1 + 2 * rng.gen_range(0..=(max_left - 1) / 2);
            PlaneTree::Node(
                Box::new(random_tree(left, rng)),
                Box::new(random_tree(size - 1 - left, rng)),
            )
        }
        let mut rng = root_rng(7);
        for _ in 0..2000 {
            let m = 1 + 2 * rng.gen_range(0..3usize);
            let trees: Vec<PlaneTree> =
                (0..m).map(|_| random_tree(1 + 2 * rng.gen_range(0..4usize), &mut rng)).collect();
            let forest = PlaneForest { trees };
            let path = lukasiewicz_encode(&forest);
            assert_eq!(path.terminal(), -(forest.n_components() as i64));
            assert_eq!(lukasiewicz_decode(&path).unwrap(), forest);
        }
    }

    #[test]
    fn lukasiewicz_rejects_malformed() {
        let path = LatticePath::from_values(vec![0, 2, 1]).unwrap();
        assert!(lukasiewicz_decode(&path).is_err());
        let path = LatticePath::from_values(vec![0, 1, 0]).unwrap();
        assert!(lukasiewicz_decode(&path).is_err());
    }

    #[test]
    fn uniform_plane_tree_has_conditioned_walk_law() {
        // N = 7: five plane trees, in bijection with the five +-1 paths
        // conditioned on first hitting -1 at time 7; all equally likely.
        let mut rng = root_rng(8);
        let samples = 50_000;
        let mut counts: BTreeMap<Vec<i64>, u64> = BTreeMap::new();
        for _ in 0..samples {
            let tree = sample_uniform_tree_with(7, &mut rng).unwrap();
            let plane = to_plane_with(&tree, &mut rng);
            *counts.entry(lukasiewicz_encode(&plane).values().to_vec()).or_default() += 1;
        }
        assert_eq!(counts.len(), 5);
        for (path, c) in counts {
            let f = c as f64 / samples as f64;
            assert!((f - 0.2).abs() < 0.015, "path {path:?}: {f}");
        }
    }
}
