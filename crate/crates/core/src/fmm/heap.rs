//! Indexed binary min-heap keyed by `(priority, node index)`.

const ABSENT: u32 = u32::MAX;

#[derive(Clone, Debug)]
pub struct IndexedHeap {
    data: Vec<(f64, u32)>,
    pos: Vec<u32>,
}

#[inline]
fn less(a: (f64, u32), b: (f64, u32)) -> bool {
    a.0 < b.0 || (a.0 == b.0 && a.1 < b.1)
}

impl IndexedHeap {
    /// Heap over item ids `0..capacity`.
    pub fn new(capacity: usize) -> Self {
        IndexedHeap {
            data: Vec::new(),
            pos: vec![ABSENT; capacity],
        }
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn contains(&self, id: u32) -> bool {
        self.pos[id as usize] != ABSENT
    }

    pub fn peek(&self) -> Option<(f64, u32)> {
        self.data.first().copied()
    }

    /// Inserts `id` or moves it to `key`, in either direction.
    pub fn push_or_update(&mut self, id: u32, key: f64) {
        debug_assert!(!key.is_nan());
        let p = self.pos[id as usize];
        if p == ABSENT {
            self.data.push((key, id));
            let i = self.data.len() - 1;
            self.pos[id as usize] = i as u32;
            self.sift_up(i);
        } else {
            let i = p as usize;
            let old = self.data[i].0;
            self.data[i].0 = key;
            if key < old {
                self.sift_up(i);
            } else {
                self.sift_down(i);
            }
        }
    }

    pub fn pop(&mut self) -> Option<(f64, u32)> {
        let top = *self.data.first()?;
        let last = self.data.pop().expect("non-empty");
        self.pos[top.1 as usize] = ABSENT;
        if !self.data.is_empty() {
            self.data[0] = last;
            self.pos[last.1 as usize] = 0;
            self.sift_down(0);
        }
        Some(top)
    }

    fn sift_up(&mut self, mut i: usize) {
        let item = self.data[i];
        while i > 0 {
            let parent = (i - 1) / 2;
            if !less(item, self.data[parent]) {
                break;
            }
            self.data[i] = self.data[parent];
            self.pos[self.data[i].1 as usize] = i as u32;
            i = parent;
        }
        self.data[i] = item;
        self.pos[item.1 as usize] = i as u32;
    }

    fn sift_down(&mut self, mut i: usize) {
        let n = self.data.len();
        let item = self.data[i];
        loop {
            let l = 2 * i + 1;
            if l >= n {
                break;
            }
            let r = l + 1;
            let c = if r < n && less(self.data[r], self.data[l]) { r } else { l };
            if !less(self.data[c], item) {
                break;
            }
            self.data[i] = self.data[c];
            self.pos[self.data[i].1 as usize] = i as u32;
            i = c;
        }
        self.data[i] = item;
        self.pos[item.1 as usize] = i as u32;
    }
}
