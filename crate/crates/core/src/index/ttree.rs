//! In-memory T-tree: an AVL-balanced binary tree whose nodes each hold up to
//! `Y1` sorted items.
//!
//! Nodes live in an arena and refer to each other by index. Search follows the
//! marked-node descent: go left while the key is below a node's minimum,
//! otherwise mark the node and go right; at the bottom, binary-search the last
//! marked (bounding) node.

use std::fmt;

use super::{AccessStats, IndexError, Ptn};

type NodeId = usize;

#[derive(Debug, Clone)]
struct TNode<V> {
    items: Vec<(Ptn, V)>,
    parent: Option<NodeId>,
    left: Option<NodeId>,
    right: Option<NodeId>,
    height: u32,
    min: Ptn,
    max: Ptn,
}

impl<V> TNode<V> {
    fn refresh_bounds(&mut self) {
        if let (Some(first), Some(last)) = (self.items.first(), self.items.last()) {
            self.min = first.0;
            self.max = last.0;
        }
    }

    fn is_interior(&self) -> bool {
        self.left.is_some() && self.right.is_some()
    }
}

/// First structural problem found by [`TTree::validate`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    /// Path from the root, e.g. `root.L.R`.
    pub path: String,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "node {}: {}", self.path, self.message)
    }
}

impl std::error::Error for Violation {}

/// Result of a T-tree lookup.
#[derive(Debug, Clone, PartialEq)]
pub struct Lookup<'a, V> {
    pub payload: Option<&'a V>,
    pub stats: AccessStats,
}

impl<V> Lookup<'_, V> {
    pub fn found(&self) -> bool {
        self.payload.is_some()
    }
}

#[derive(Debug, Clone)]
pub struct TTree<V> {
    nodes: Vec<Option<TNode<V>>>,
    free: Vec<NodeId>,
    root: Option<NodeId>,
    len: usize,
    max_items: usize,
    min_interior: usize,
}

impl<V> TTree<V> {
    /// `max_items` is Y1, `min_interior` is Y2.
    pub fn new(max_items: usize, min_interior: usize) -> Result<Self, IndexError> {
        if max_items == 0 || min_interior == 0 || min_interior > max_items {
            return Err(IndexError::BadNodeCapacity {
                max_items,
                min_interior,
            });
        }
        Ok(Self {
            nodes: Vec::new(),
            free: Vec::new(),
            root: None,
            len: 0,
            max_items,
            min_interior,
        })
    }

    /// Y2 defaults to ⌈Y1/2⌉.
    pub fn with_capacity(max_items: usize) -> Result<Self, IndexError> {
        Self::new(max_items, max_items.div_ceil(2).max(1))
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn max_items(&self) -> usize {
        self.max_items
    }

    pub fn min_interior(&self) -> usize {
        self.min_interior
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len() - self.free.len()
    }

    pub fn height(&self) -> u32 {
        self.h(self.root)
    }

    fn node(&self, id: NodeId) -> &TNode<V> {
        self.nodes[id].as_ref().expect("live node")
    }

    fn node_mut(&mut self, id: NodeId) -> &mut TNode<V> {
        self.nodes[id].as_mut().expect("live node")
    }

    fn h(&self, id: Option<NodeId>) -> u32 {
        id.map_or(0, |n| self.node(n).height)
    }

    fn alloc(&mut self, key: Ptn, payload: V, parent: Option<NodeId>) -> NodeId {
        let node = TNode {
            items: vec![(key, payload)],
            parent,
            left: None,
            right: None,
            height: 1,
            min: key,
            max: key,
        };
        if let Some(id) = self.free.pop() {
            self.nodes[id] = Some(node);
            id
        } else {
            self.nodes.push(Some(node));
            self.nodes.len() - 1
        }
    }

    fn release(&mut self, id: NodeId) {
        self.nodes[id] = None;
        self.free.push(id);
    }

    /// Marked-node descent. Every node on the way down counts as visited and
    /// costs one comparison against its minimum; the bounding node then costs
    /// one comparison per binary-search probe.
    pub fn search(&self, key: Ptn) -> Lookup<'_, V> {
        let mut stats = AccessStats::default();
        let mut marked = None;
        let mut cur = self.root;
        while let Some(id) = cur {
            let node = self.node(id);
            stats.nodes_visited += 1;
            stats.comparisons += 1;
            if key < node.min {
                cur = node.left;
            } else {
                marked = Some(id);
                cur = node.right;
            }
        }
        let payload = marked.and_then(|id| {
            stats.node_searches += 1;
            let items = &self.node(id).items;
            let (mut lo, mut hi) = (0usize, items.len());
            while lo < hi {
                let mid = lo + (hi - lo) / 2;
                stats.comparisons += 1;
                match items[mid].0.cmp(&key) {
                    std::cmp::Ordering::Less => lo = mid + 1,
                    std::cmp::Ordering::Greater => hi = mid,
                    std::cmp::Ordering::Equal => return Some(&items[mid].1),
                }
            }
            None
        });
        Lookup { payload, stats }
    }

    pub fn get(&self, key: Ptn) -> Option<&V> {
        self.search(key).payload
    }

    pub fn contains(&self, key: Ptn) -> bool {
        self.search(key).found()
    }

    /// Node whose [min, max] range contains `key`, or the last node on the
    /// search path when none does.
    fn locate(&self, key: Ptn) -> (Option<NodeId>, Option<NodeId>) {
        let mut cur = self.root;
        let mut last = None;
        while let Some(id) = cur {
            let node = self.node(id);
            last = Some(id);
            if key < node.min {
                cur = node.left;
            } else if key > node.max {
                cur = node.right;
            } else {
                return (Some(id), last);
            }
        }
        (None, last)
    }

    pub fn insert(&mut self, key: Ptn, payload: V) -> Result<(), IndexError> {
        let Some(_) = self.root else {
            let id = self.alloc(key, payload, None);
            self.root = Some(id);
            self.len = 1;
            return Ok(());
        };
        let (bounding, last) = self.locate(key);
        if let Some(id) = bounding {
            let cap = self.max_items;
            let node = self.node_mut(id);
            let pos = match node.items.binary_search_by_key(&key, |(k, _)| *k) {
                Ok(_) => return Err(IndexError::DuplicateKey(key)),
                Err(pos) => pos,
            };
            node.items.insert(pos, (key, payload));
            if node.items.len() > cap {
                // Overflow: the node's minimum moves down to the greatest
                // lower bound position.
                let (min_key, min_payload) = node.items.remove(0);
                node.refresh_bounds();
                self.insert_glb(id, min_key, min_payload);
            } else {
                node.refresh_bounds();
            }
        } else {
            let id = last.expect("non-empty tree has a last node");
            let cap = self.max_items;
            let node = self.node_mut(id);
            if node.items.len() < cap {
                if key < node.min {
                    node.items.insert(0, (key, payload));
                } else {
                    node.items.push((key, payload));
                }
                node.refresh_bounds();
            } else {
                let go_left = key < node.min;
                let child = self.alloc(key, payload, Some(id));
                let node = self.node_mut(id);
                if go_left {
                    node.left = Some(child);
                } else {
                    node.right = Some(child);
                }
                self.rebalance_from(Some(id));
            }
        }
        self.len += 1;
        Ok(())
    }

    /// Places an item that is smaller than everything in `id` but larger than
    /// everything in its left subtree.
    fn insert_glb(&mut self, id: NodeId, key: Ptn, payload: V) {
        match self.node(id).left {
            None => {
                let child = self.alloc(key, payload, Some(id));
                self.node_mut(id).left = Some(child);
                self.rebalance_from(Some(id));
            }
            Some(left) => {
                let glb = self.rightmost(left);
                if self.node(glb).items.len() < self.max_items {
                    let node = self.node_mut(glb);
                    node.items.push((key, payload));
                    node.refresh_bounds();
                } else {
                    let child = self.alloc(key, payload, Some(glb));
                    self.node_mut(glb).right = Some(child);
                    self.rebalance_from(Some(glb));
                }
            }
        }
    }

    fn rightmost(&self, mut id: NodeId) -> NodeId {
        while let Some(r) = self.node(id).right {
            id = r;
        }
        id
    }

    pub fn delete(&mut self, key: Ptn) -> Result<V, IndexError> {
        let (Some(id), _) = self.locate(key) else {
            return Err(IndexError::NotFound(key));
        };
        let Ok(pos) = self.node(id).items.binary_search_by_key(&key, |(k, _)| *k) else {
            return Err(IndexError::NotFound(key));
        };
        let (_, payload) = self.remove_at(id, pos);
        self.len -= 1;
        Ok(payload)
    }

    /// Removes one item and restores the structural rules around its node.
    fn remove_at(&mut self, id: NodeId, pos: usize) -> (Ptn, V) {
        let item = {
            let node = self.node_mut(id);
            let item = node.items.remove(pos);
            node.refresh_bounds();
            item
        };
        let node = self.node(id);
        let (left, right, len) = (node.left, node.right, node.items.len());
        match (left, right) {
            (Some(l), Some(_)) => {
                if len < self.min_interior {
                    // Interior underflow: borrow the greatest lower bound.
                    let glb = self.rightmost(l);
                    let last = self.node(glb).items.len() - 1;
                    let borrowed = self.remove_at(glb, last);
                    let node = self.node_mut(id);
                    // a rotation during the fixup may already have topped
                    // this node up from below, so insert by position
                    let at = node.items.partition_point(|(k, _)| *k < borrowed.0);
                    node.items.insert(at, borrowed);
                    node.refresh_bounds();
                }
            }
            (None, None) => {
                if len == 0 {
                    let parent = self.node(id).parent;
                    self.replace_child(parent, id, None);
                    self.release(id);
                    self.rebalance_from(parent);
                }
            }
            (Some(child), None) | (None, Some(child)) => {
                let child_node = self.node(child);
                let child_is_leaf = child_node.left.is_none() && child_node.right.is_none();
                if len == 0 {
                    let parent = self.node(id).parent;
                    self.node_mut(child).parent = parent;
                    self.replace_child(parent, id, Some(child));
                    self.release(id);
                    self.rebalance_from(parent);
                } else if child_is_leaf && len + child_node.items.len() <= self.max_items {
                    // Half-leaf absorbs its leaf child.
                    let moved = std::mem::take(&mut self.node_mut(child).items);
                    let node = self.node_mut(id);
                    if Some(child) == node.left {
                        let rest = std::mem::replace(&mut node.items, moved);
                        node.items.extend(rest);
                        node.left = None;
                    } else {
                        node.items.extend(moved);
                        node.right = None;
                    }
                    node.refresh_bounds();
                    self.release(child);
                    self.rebalance_from(Some(id));
                }
            }
        }
        item
    }

    fn replace_child(&mut self, parent: Option<NodeId>, old: NodeId, new: Option<NodeId>) {
        match parent {
            None => self.root = new,
            Some(p) => {
                let pn = self.node_mut(p);
                if pn.left == Some(old) {
                    pn.left = new;
                } else {
                    debug_assert_eq!(pn.right, Some(old));
                    pn.right = new;
                }
            }
        }
    }

    fn update_height(&mut self, id: NodeId) {
        let (l, r) = (self.node(id).left, self.node(id).right);
        let h = 1 + self.h(l).max(self.h(r));
        self.node_mut(id).height = h;
    }

    fn balance(&self, id: NodeId) -> i64 {
        let node = self.node(id);
        i64::from(self.h(node.left)) - i64::from(self.h(node.right))
    }

    fn rebalance_from(&mut self, mut cur: Option<NodeId>) {
        while let Some(id) = cur {
            self.update_height(id);
            let b = self.balance(id);
            let top = if b > 1 {
                let l = self.node(id).left.expect("left-heavy");
                if self.balance(l) < 0 {
                    self.rotate_left(l);
                }
                self.rotate_right(id)
            } else if b < -1 {
                let r = self.node(id).right.expect("right-heavy");
                if self.balance(r) > 0 {
                    self.rotate_right(r);
                }
                self.rotate_left(id)
            } else {
                id
            };
            if top != id {
                self.fill_interior(top);
            }
            cur = self.node(top).parent;
        }
    }

    /// Left rotation around `id`; returns the new subtree root.
    fn rotate_left(&mut self, id: NodeId) -> NodeId {
        let pivot = self
            .node(id)
            .right
            .expect("rotate_left needs a right child");
        let parent = self.node(id).parent;
        let inner = self.node(pivot).left;

        self.node_mut(id).right = inner;
        if let Some(i) = inner {
            self.node_mut(i).parent = Some(id);
        }
        self.node_mut(pivot).left = Some(id);
        self.node_mut(id).parent = Some(pivot);
        self.node_mut(pivot).parent = parent;
        self.replace_child(parent, id, Some(pivot));

        self.update_height(id);
        self.update_height(pivot);
        pivot
    }

    fn rotate_right(&mut self, id: NodeId) -> NodeId {
        let pivot = self.node(id).left.expect("rotate_right needs a left child");
        let parent = self.node(id).parent;
        let inner = self.node(pivot).right;

        self.node_mut(id).left = inner;
        if let Some(i) = inner {
            self.node_mut(i).parent = Some(id);
        }
        self.node_mut(pivot).right = Some(id);
        self.node_mut(id).parent = Some(pivot);
        self.node_mut(pivot).parent = parent;
        self.replace_child(parent, id, Some(pivot));

        self.update_height(id);
        self.update_height(pivot);
        pivot
    }

    /// A rotation can lift a sparse leaf into an interior position. Top it up
    /// from the greatest-lower-bound node without emptying that node, so the
    /// shape (and therefore balance) is untouched.
    fn fill_interior(&mut self, id: NodeId) {
        if !self.node(id).is_interior() {
            return;
        }
        let Some(left) = self.node(id).left else {
            return;
        };
        let glb = self.rightmost(left);
        while self.node(id).items.len() < self.min_interior && self.node(glb).items.len() > 1 {
            let item = {
                let g = self.node_mut(glb);
                let item = g.items.pop().expect("non-empty");
                g.refresh_bounds();
                item
            };
            let node = self.node_mut(id);
            node.items.insert(0, item);
            node.refresh_bounds();
        }
    }

    /// In-order keys.
    pub fn keys(&self) -> Vec<Ptn> {
        self.iter().map(|(k, _)| k).collect()
    }

    /// In-order iteration.
    pub fn iter(&self) -> impl Iterator<Item = (Ptn, &V)> + '_ {
        let mut stack = Vec::new();
        let mut cur = self.root;
        let mut out = Vec::with_capacity(self.len);
        loop {
            while let Some(id) = cur {
                stack.push(id);
                cur = self.node(id).left;
            }
            let Some(id) = stack.pop() else { break };
            out.extend(self.node(id).items.iter().map(|(k, v)| (*k, v)));
            cur = self.node(id).right;
        }
        out.into_iter()
    }

    /// Checks ordering, cached bounds, parent links, stored heights, AVL
    /// balance and the item count. Reports the first problem found.
    pub fn validate(&self) -> Result<(), Violation> {
        let mut counted = 0usize;
        if let Some(root) = self.root {
            if self.node(root).parent.is_some() {
                return Err(Violation {
                    path: "root".into(),
                    message: "root has a parent".into(),
                });
            }
            self.check(root, "root".to_string(), None, None, &mut counted)?;
        }
        if counted != self.len {
            return Err(Violation {
                path: "root".into(),
                message: format!("size {} but nodes hold {counted} items", self.len),
            });
        }
        Ok(())
    }

    fn check(
        &self,
        id: NodeId,
        path: String,
        lower: Option<Ptn>,
        upper: Option<Ptn>,
        counted: &mut usize,
    ) -> Result<u32, Violation> {
        let fail = |message: String| Violation {
            path: path.clone(),
            message,
        };
        let node = self.nodes[id]
            .as_ref()
            .ok_or_else(|| fail("dangling node reference".into()))?;
        if node.items.is_empty() {
            return Err(fail("empty node".into()));
        }
        if node.items.len() > self.max_items {
            return Err(fail(format!(
                "{} items exceed capacity {}",
                node.items.len(),
                self.max_items
            )));
        }
        if let Some(w) = node.items.windows(2).find(|w| w[0].0 >= w[1].0) {
            return Err(fail(format!(
                "items out of order: {} before {}",
                w[0].0, w[1].0
            )));
        }
        let (first, last) = (node.items[0].0, node.items[node.items.len() - 1].0);
        if node.min != first || node.max != last {
            return Err(fail(format!(
                "cached bounds [{}, {}] differ from items [{first}, {last}]",
                node.min, node.max
            )));
        }
        if lower.is_some_and(|lo| first <= lo) || upper.is_some_and(|hi| last >= hi) {
            return Err(fail(format!(
                "keys [{first}, {last}] escape ancestor bounds ({lower:?}, {upper:?})"
            )));
        }
        *counted += node.items.len();

        let mut child_height =
            |child: Option<NodeId>, tag: &str, lo, hi| -> Result<u32, Violation> {
                match child {
                    None => Ok(0),
                    Some(c) => {
                        let cp = self.nodes[c].as_ref().and_then(|n| n.parent);
                        if cp != Some(id) {
                            return Err(fail(format!("{tag} child has wrong parent link")));
                        }
                        self.check(c, format!("{path}.{tag}"), lo, hi, counted)
                    }
                }
            };
        let lh = child_height(node.left, "L", lower, Some(first))?;
        let rh = child_height(node.right, "R", Some(last), upper)?;
        if lh.abs_diff(rh) > 1 {
            return Err(fail(format!(
                "unbalanced: left height {lh}, right height {rh}"
            )));
        }
        let height = 1 + lh.max(rh);
        if node.height != height {
            return Err(fail(format!(
                "stored height {} but actual {height}",
                node.height
            )));
        }
        Ok(height)
    }

    /// Mean items per interior node, or `None` without interior nodes.
    pub fn interior_occupancy(&self) -> Option<f64> {
        let interior: Vec<usize> = self
            .nodes
            .iter()
            .flatten()
            .filter(|n| n.is_interior())
            .map(|n| n.items.len())
            .collect();
        if interior.is_empty() {
            None
        } else {
            Some(interior.iter().sum::<usize>() as f64 / interior.len() as f64)
        }
    }
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeMap;

    use rand::seq::SliceRandom;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;

    fn avl_bound(nodes: usize) -> f64 {
        1.44 * ((nodes + 1) as f64).log2() + 1.0
    }

    #[test]
    fn first_insert_makes_single_node() {
        let mut t = TTree::with_capacity(15).unwrap();
        t.insert(5, "five").unwrap();
        assert_eq!(t.height(), 1);
        assert_eq!(t.node_count(), 1);
        assert_eq!(t.keys(), vec![5]);
        t.validate().unwrap();
    }

    #[test]
    fn ascending_inserts_stay_sorted_and_balanced() {
        let mut t = TTree::with_capacity(15).unwrap();
        for k in 1..=100u64 {
            t.insert(k, k * 10).unwrap();
            t.validate().unwrap();
        }
        assert_eq!(t.keys(), (1..=100).collect::<Vec<_>>());
        assert!(f64::from(t.height()) <= avl_bound(t.node_count()));
    }

    #[test]
    fn duplicate_insert_rejected_without_change() {
        let mut t = TTree::with_capacity(4).unwrap();
        for k in [10, 20, 30, 40, 50, 60] {
            t.insert(k, ()).unwrap();
        }
        let before = t.keys();
        assert_eq!(t.insert(30, ()), Err(IndexError::DuplicateKey(30)));
        assert_eq!(t.keys(), before);
        assert_eq!(t.len(), 6);
        t.validate().unwrap();
    }

    #[test]
    fn delete_only_key_empties_tree() {
        let mut t = TTree::with_capacity(15).unwrap();
        t.insert(7, 'x').unwrap();
        assert_eq!(t.delete(7), Ok('x'));
        assert!(t.is_empty());
        assert_eq!(t.height(), 0);
        t.validate().unwrap();
    }

    #[test]
    fn delete_evens_leaves_odds() {
        let mut t = TTree::with_capacity(15).unwrap();
        let mut oracle = std::collections::BTreeSet::new();
        for k in 1..=1000u64 {
            t.insert(k, ()).unwrap();
            oracle.insert(k);
        }
        for k in (2..=1000u64).step_by(2) {
            t.delete(k).unwrap();
            oracle.remove(&k);
            t.validate().unwrap();
        }
        assert_eq!(t.keys(), oracle.into_iter().collect::<Vec<_>>());
    }

    #[test]
    fn delete_absent_key_is_not_found() {
        let mut t = TTree::with_capacity(3).unwrap();
        for k in [1, 2, 3, 5, 8] {
            t.insert(k, ()).unwrap();
        }
        assert_eq!(t.delete(4), Err(IndexError::NotFound(4)));
        assert_eq!(t.delete(100), Err(IndexError::NotFound(100)));
        assert_eq!(t.keys(), vec![1, 2, 3, 5, 8]);
    }

    #[test]
    fn search_empty_tree() {
        let t: TTree<()> = TTree::with_capacity(15).unwrap();
        let r = t.search(1);
        assert!(!r.found());
        assert_eq!(r.stats.nodes_visited, 0);
    }

    #[test]
    fn search_single_node() {
        let mut t = TTree::with_capacity(15).unwrap();
        for k in [10, 20, 30] {
            t.insert(k, k + 1).unwrap();
        }
        let r = t.search(20);
        assert_eq!(r.payload, Some(&21));
        assert_eq!(r.stats.nodes_visited, 1);
        assert_eq!(r.stats.node_searches, 1);
        assert!(!t.search(25).found());
        // below the only node: no bounding node at all
        let miss = t.search(5);
        assert!(!miss.found());
        assert_eq!(miss.stats.node_searches, 0);
    }

    #[test]
    fn random_probes_match_membership_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut t = TTree::with_capacity(15).unwrap();
        let mut sorted = Vec::new();
        while sorted.len() < 10_000 {
            let k = rng.random_range(0..200_000u64);
            if t.insert(k, k ^ 0xabcd).is_ok() {
                sorted.push(k);
            }
        }
        sorted.sort_unstable();
        for i in 0..10_000 {
            let probe = if i % 2 == 0 {
                sorted[rng.random_range(0..sorted.len())]
            } else {
                rng.random_range(0..200_000u64)
            };
            let r = t.search(probe);
            assert_eq!(
                r.found(),
                sorted.binary_search(&probe).is_ok(),
                "probe {probe}"
            );
            if let Some(v) = r.payload {
                assert_eq!(*v, probe ^ 0xabcd);
            }
            assert!(r.stats.nodes_visited <= t.height() as u64);
        }
    }

    #[test]
    fn corrupted_order_is_reported_with_path() {
        let mut t = TTree::with_capacity(4).unwrap();
        for k in 1..=40u64 {
            t.insert(k, ()).unwrap();
        }
        t.validate().unwrap();
        let root = t.root.unwrap();
        let left = t.node(root).left.unwrap();
        t.node_mut(left).items.swap(0, 1);
        let v = t.validate().unwrap_err();
        assert_eq!(v.path, "root.L");
        assert!(v.message.contains("out of order"), "{v}");
    }

    #[test]
    fn corrupted_bound_cache_is_reported() {
        let mut t = TTree::with_capacity(4).unwrap();
        for k in 1..=3u64 {
            t.insert(k, ()).unwrap();
        }
        let root = t.root.unwrap();
        t.node_mut(root).max = 99;
        let v = t.validate().unwrap_err();
        assert_eq!(v.path, "root");
        assert!(v.message.contains("cached bounds"));
    }

    #[test]
    fn random_workload_matches_btreemap() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for cap in [1usize, 2, 3, 7, 15] {
            let mut t = TTree::with_capacity(cap).unwrap();
            let mut oracle = BTreeMap::new();
            for step in 0..20_000u64 {
                let key = rng.random_range(0..2_000u64);
                match rng.random_range(0..3) {
                    0 => {
                        let res = t.insert(key, step);
                        if let std::collections::btree_map::Entry::Vacant(e) = oracle.entry(key) {
                            e.insert(step);
                            assert!(res.is_ok());
                        } else {
                            assert_eq!(res, Err(IndexError::DuplicateKey(key)));
                        }
                    }
                    1 => assert_eq!(t.delete(key).ok(), oracle.remove(&key)),
                    _ => assert_eq!(t.get(key), oracle.get(&key)),
                }
                if step % 97 == 0 {
                    t.validate()
                        .unwrap_or_else(|v| panic!("cap {cap} step {step}: {v}"));
                }
            }
            t.validate().unwrap();
            let expected: Vec<_> = oracle.iter().map(|(k, v)| (*k, *v)).collect();
            let got: Vec<_> = t.iter().map(|(k, v)| (k, *v)).collect();
            assert_eq!(got, expected);
        }
    }

    #[test]
    fn shuffled_fill_keeps_interior_nodes_dense() {
        let mut keys: Vec<u64> = (0..50_000).collect();
        keys.shuffle(&mut ChaCha8Rng::seed_from_u64(3));
        let mut t = TTree::with_capacity(15).unwrap();
        for &k in &keys {
            t.insert(k, ()).unwrap();
        }
        t.validate().unwrap();
        let occ = t.interior_occupancy().unwrap();
        assert!(occ >= t.min_interior() as f64, "interior occupancy {occ}");
    }

    #[test]
    fn rejects_bad_capacity() {
        assert!(TTree::<()>::new(0, 0).is_err());
        assert!(TTree::<()>::new(4, 5).is_err());
        assert!(TTree::<()>::new(1, 1).is_ok());
    }
}
