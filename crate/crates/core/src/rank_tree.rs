//! Order-statistic treap over location means.
//!
//! Keys are `(mean, slot)` under `f64::total_cmp`. Each node carries its
//! subtree size and the subtree sum of `mean - origin`, which supports the
//! threshold queries and the weighted draw over the top of the ordering in
//! `O(log V)`. `origin` is fixed at the first insertion so that subtree sums
//! stay well conditioned when means are large and close together.

use std::cmp::Ordering;

use crate::rng::splitmix64;

const NIL: u32 = u32::MAX;

#[derive(Debug, Clone)]
struct Node {
    mean: f64,
    offset: f64,
    prio: u64,
    left: u32,
    right: u32,
    count: u32,
    sum: f64,
}

#[derive(Debug, Clone, Default)]
pub(crate) struct RankTree {
    nodes: Vec<Node>,
    root: u32,
    origin: Option<f64>,
}

impl RankTree {
    pub fn new() -> Self {
        RankTree {
            nodes: Vec::new(),
            root: NIL,
            origin: None,
        }
    }

    pub fn with_origin(origin: Option<f64>) -> Self {
        RankTree {
            origin,
            ..RankTree::new()
        }
    }

    pub fn origin(&self) -> Option<f64> {
        self.origin
    }

    pub fn len(&self) -> usize {
        self.count(self.root) as usize
    }

    /// Adds a new slot; slots must be inserted in order `0, 1, 2, ...`.
    pub fn insert(&mut self, slot: usize, mean: f64) {
        assert_eq!(slot, self.nodes.len(), "slots must be inserted sequentially");
        let origin = *self.origin.get_or_insert(mean);
        self.nodes.push(Node {
            mean,
            offset: mean - origin,
            prio: splitmix64(slot as u64),
            left: NIL,
            right: NIL,
            count: 1,
            sum: mean - origin,
        });
        self.link(slot as u32);
    }

    pub fn update(&mut self, slot: usize, mean: f64) {
        let t = slot as u32;
        self.root = self.erase(self.root, t);
        let origin = self.origin.expect("origin set on first insert");
        let node = &mut self.nodes[slot];
        node.mean = mean;
        node.offset = mean - origin;
        node.left = NIL;
        node.right = NIL;
        node.count = 1;
        node.sum = node.offset;
        self.link(t);
    }

    fn link(&mut self, t: u32) {
        let (l, r) = self.split(self.root, t);
        let lt = self.merge(l, t);
        self.root = self.merge(lt, r);
    }

    fn key_cmp(&self, a: u32, b: u32) -> Ordering {
        let (na, nb) = (&self.nodes[a as usize], &self.nodes[b as usize]);
        na.mean.total_cmp(&nb.mean).then(a.cmp(&b))
    }

    fn count(&self, t: u32) -> u32 {
        if t == NIL {
            0
        } else {
            self.nodes[t as usize].count
        }
    }

    fn sum(&self, t: u32) -> f64 {
        if t == NIL {
            0.0
        } else {
            self.nodes[t as usize].sum
        }
    }

    fn pull(&mut self, t: u32) {
        let (l, r) = {
            let n = &self.nodes[t as usize];
            (n.left, n.right)
        };
        let count = 1 + self.count(l) + self.count(r);
        let sum = self.sum(l) + self.nodes[t as usize].offset + self.sum(r);
        let n = &mut self.nodes[t as usize];
        n.count = count;
        n.sum = sum;
    }

    /// Splits `t` into keys less than `key`'s and the rest.
    fn split(&mut self, t: u32, key: u32) -> (u32, u32) {
        if t == NIL {
            return (NIL, NIL);
        }
        if self.key_cmp(t, key) == Ordering::Less {
            let (l, r) = self.split(self.nodes[t as usize].right, key);
            self.nodes[t as usize].right = l;
            self.pull(t);
            (t, r)
        } else {
            let (l, r) = self.split(self.nodes[t as usize].left, key);
            self.nodes[t as usize].left = r;
            self.pull(t);
            (l, t)
        }
    }

    fn merge(&mut self, a: u32, b: u32) -> u32 {
        if a == NIL {
            return b;
        }
        if b == NIL {
            return a;
        }
        if self.nodes[a as usize].prio > self.nodes[b as usize].prio {
            let right = self.merge(self.nodes[a as usize].right, b);
            self.nodes[a as usize].right = right;
            self.pull(a);
            a
        } else {
            let left = self.merge(a, self.nodes[b as usize].left);
            self.nodes[b as usize].left = left;
            self.pull(b);
            b
        }
    }

    fn erase(&mut self, t: u32, target: u32) -> u32 {
        assert!(t != NIL, "slot missing from rank tree");
        if t == target {
            let (l, r) = {
                let n = &self.nodes[t as usize];
                (n.left, n.right)
            };
            return self.merge(l, r);
        }
        if self.key_cmp(target, t) == Ordering::Less {
            let left = self.erase(self.nodes[t as usize].left, target);
            self.nodes[t as usize].left = left;
        } else {
            let right = self.erase(self.nodes[t as usize].right, target);
            self.nodes[t as usize].right = right;
        }
        self.pull(t);
        t
    }

    /// Slot holding the `k`-th smallest key (0-based).
    pub fn kth(&self, mut k: usize) -> Option<usize> {
        let mut t = self.root;
        while t != NIL {
            let n = &self.nodes[t as usize];
            let lc = self.count(n.left) as usize;
            match k.cmp(&lc) {
                Ordering::Less => t = n.left,
                Ordering::Equal => return Some(t as usize),
                Ordering::Greater => {
                    k -= lc + 1;
                    t = n.right;
                }
            }
        }
        None
    }

    /// Number of entries whose mean is strictly below `mean`.
    pub fn count_less(&self, mean: f64) -> usize {
        let mut t = self.root;
        let mut acc = 0usize;
        while t != NIL {
            let n = &self.nodes[t as usize];
            if n.mean.total_cmp(&mean) == Ordering::Less {
                acc += self.count(n.left) as usize + 1;
                t = n.right;
            } else {
                t = n.left;
            }
        }
        acc
    }

    pub fn min_slot(&self) -> Option<usize> {
        self.kth(0)
    }

    pub fn mean(&self, slot: usize) -> f64 {
        self.nodes[slot].mean
    }

    pub fn offset(&self, slot: usize) -> f64 {
        self.nodes[slot].offset
    }

    /// Sum of `mean - origin` over the `r` largest keys.
    pub fn top_offset_sum(&self, r: usize) -> f64 {
        let mut t = self.root;
        let mut rem = r;
        let mut acc = 0.0;
        while t != NIL && rem > 0 {
            let n = &self.nodes[t as usize];
            let rc = self.count(n.right) as usize;
            if rem <= rc {
                t = n.right;
            } else {
                acc += self.sum(n.right) + n.offset;
                rem -= rc + 1;
                t = n.left;
            }
        }
        acc
    }

    /// Weighted draw among the `r` largest keys, each weighted by
    /// `offset - base + delta`. `target` must lie in `[0, total)` where
    /// `total` is the sum of those weights.
    pub fn sample_top(&self, r: usize, base: f64, delta: f64, target: f64) -> usize {
        debug_assert!(r >= 1 && r <= self.len());
        let mut t = self.root;
        let mut rem = target;
        let mut skipped = 0usize;
        let chosen = loop {
            let n = &self.nodes[t as usize];
            let rc = self.count(n.right);
            let rw = self.sum(n.right) - rc as f64 * base + rc as f64 * delta;
            if n.right != NIL && rem < rw {
                t = n.right;
                continue;
            }
            rem -= rw;
            skipped += rc as usize;
            let w = n.offset - base + delta;
            if rem < w || n.left == NIL {
                break t as usize;
            }
            rem -= w;
            skipped += 1;
            t = n.left;
        };
        if skipped >= r {
            // rounding carried the walk past the retained block
            self.kth(self.len() - r).expect("r within tree size")
        } else {
            chosen
        }
    }

    /// Slots in ascending key order.
    pub fn in_order(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.len());
        let mut stack = Vec::new();
        let mut t = self.root;
        while t != NIL || !stack.is_empty() {
            while t != NIL {
                stack.push(t);
                t = self.nodes[t as usize].left;
            }
            let top = stack.pop().unwrap();
            out.push(top as usize);
            t = self.nodes[top as usize].right;
        }
        out
    }
}
