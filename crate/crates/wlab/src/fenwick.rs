//! Fenwick (binary indexed) tree over nonnegative event rates: point update,
//! total, and inverse-prefix-sum selection in logarithmic time.

#[derive(Debug, Clone)]
pub struct RateTree {
    tree: Vec<f64>,
    leaves: Vec<f64>,
}

impl RateTree {
    pub fn new(rates: &[f64]) -> Self {
        let mut t = RateTree {
            tree: vec![0.0; rates.len() + 1],
            leaves: vec![0.0; rates.len()],
        };
        for (i, &r) in rates.iter().enumerate() {
            t.set(i, r);
        }
        t
    }

    pub fn len(&self) -> usize {
        self.leaves.len()
    }

    pub fn is_empty(&self) -> bool {
        self.leaves.is_empty()
    }

    pub fn get(&self, i: usize) -> f64 {
        self.leaves[i]
    }

    pub fn set(&mut self, i: usize, rate: f64) {
        debug_assert!(rate >= 0.0);
        let delta = rate - self.leaves[i];
        if delta == 0.0 {
            return;
        }
        self.leaves[i] = rate;
        let mut idx = i + 1;
        while idx < self.tree.len() {
            self.tree[idx] += delta;
            idx += idx & idx.wrapping_neg();
        }
    }

    pub fn total(&self) -> f64 {
        let mut idx = self.len();
        let mut acc = 0.0;
        while idx > 0 {
            acc += self.tree[idx];
            idx -= idx & idx.wrapping_neg();
        }
        acc
    }

    /// Smallest index whose inclusive prefix sum exceeds `target`; `target`
    /// must lie in `[0, total)`. Skips zero-rate leaves by construction.
    pub fn select(&self, mut target: f64) -> usize {
        let mut idx = 0usize;
        let mut mask = self.tree.len().next_power_of_two() >> 1;
        while mask > 0 {
            let next = idx + mask;
            if next < self.tree.len() && self.tree[next] <= target {
                target -= self.tree[next];
                idx = next;
            }
            mask >>= 1;
        }
        // guard against landing on a zero-rate leaf through rounding
        let mut i = idx.min(self.len() - 1);
        while self.leaves[i] == 0.0 && i + 1 < self.len() {
            i += 1;
        }
        i
    }
}
