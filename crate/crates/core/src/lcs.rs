//! Line-level longest-common-subsequence diffing.
//!
//! Linear-space Myers with common prefix/suffix trimming. The output is a
//! list of maximal changed regions; everything between them is unchanged.

use std::ops::Range;

/// One maximal run of non-matching lines: `old` lines are replaced by `new`
/// lines. Either side may be empty, never both.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Change {
    pub old: Range<usize>,
    pub new: Range<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Op {
    Equal { old: usize, new: usize, len: usize },
    Delete { old: usize, len: usize },
    Insert { new: usize, len: usize },
}

/// Changed regions between `old` and `new`, in ascending order.
pub fn changes<T: PartialEq>(old: &[T], new: &[T]) -> Vec<Change> {
    let mut ops = Vec::new();
    conquer(old, 0..old.len(), new, 0..new.len(), &mut ops);

    let mut out: Vec<Change> = Vec::new();
    let (mut oi, mut ni) = (0usize, 0usize);
    let mut pending: Option<Change> = None;
    for op in ops {
        match op {
            Op::Equal { old: o, new: n, len } => {
                if let Some(c) = pending.take() {
                    out.push(c);
                }
                debug_assert_eq!((o, n), (oi, ni));
                oi = o + len;
                ni = n + len;
            }
            Op::Delete { old: o, len } => {
                let c = pending.get_or_insert(Change { old: oi..oi, new: ni..ni });
                debug_assert_eq!(o, c.old.end);
                c.old.end = o + len;
                oi = o + len;
            }
            Op::Insert { new: n, len } => {
                let c = pending.get_or_insert(Change { old: oi..oi, new: ni..ni });
                debug_assert_eq!(n, c.new.end);
                c.new.end = n + len;
                ni = n + len;
            }
        }
    }
    if let Some(c) = pending {
        out.push(c);
    }
    out
}

/// Length of the LCS implied by [`changes`].
pub fn lcs_len<T: PartialEq>(old: &[T], new: &[T]) -> usize {
    let removed: usize = changes(old, new).iter().map(|c| c.old.len()).sum();
    old.len() - removed
}

fn push(ops: &mut Vec<Op>, op: Op) {
    // coalesce adjacent ops of the same kind
    if let Some(last) = ops.last_mut() {
        match (last, op) {
            (Op::Equal { old, len, .. }, Op::Equal { old: o2, len: l2, .. }) if *old + *len == o2 => {
                *len += l2;
                return;
            }
            (Op::Delete { old, len }, Op::Delete { old: o2, len: l2 }) if *old + *len == o2 => {
                *len += l2;
                return;
            }
            (Op::Insert { new, len }, Op::Insert { new: n2, len: l2 }) if *new + *len == n2 => {
                *len += l2;
                return;
            }
            _ => {}
        }
    }
    ops.push(op);
}

fn conquer<T: PartialEq>(
    old: &[T],
    mut o: Range<usize>,
    new: &[T],
    mut n: Range<usize>,
    ops: &mut Vec<Op>,
) {
    let prefix = common_prefix(&old[o.clone()], &new[n.clone()]);
    if prefix > 0 {
        push(ops, Op::Equal { old: o.start, new: n.start, len: prefix });
    }
    o.start += prefix;
    n.start += prefix;

    let suffix = common_suffix(&old[o.clone()], &new[n.clone()]);
    o.end -= suffix;
    n.end -= suffix;

    if o.is_empty() && n.is_empty() {
    } else if n.is_empty() {
        push(ops, Op::Delete { old: o.start, len: o.len() });
    } else if o.is_empty() {
        push(ops, Op::Insert { new: n.start, len: n.len() });
    } else if let Some((x, y)) = middle_snake(old, o.clone(), new, n.clone()) {
        conquer(old, o.start..x, new, n.start..y, ops);
        conquer(old, x..o.end, new, y..n.end, ops);
    } else {
        push(ops, Op::Delete { old: o.start, len: o.len() });
        push(ops, Op::Insert { new: n.start, len: n.len() });
    }

    if suffix > 0 {
        push(ops, Op::Equal { old: o.end, new: n.end, len: suffix });
    }
}

fn common_prefix<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    a.iter().zip(b).take_while(|(x, y)| x == y).count()
}

fn common_suffix<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    a.iter().rev().zip(b.iter().rev()).take_while(|(x, y)| x == y).count()
}

/// Diagonal-indexed vector for the Myers frontier.
struct V {
    offset: isize,
    v: Vec<usize>,
}

impl V {
    fn new(max_d: usize) -> Self {
        Self { offset: max_d as isize + 1, v: vec![0; 2 * max_d + 3] }
    }
}

impl std::ops::Index<isize> for V {
    type Output = usize;
    fn index(&self, k: isize) -> &usize {
        &self.v[(k + self.offset) as usize]
    }
}

impl std::ops::IndexMut<isize> for V {
    fn index_mut(&mut self, k: isize) -> &mut usize {
        &mut self.v[(k + self.offset) as usize]
    }
}

/// Finds a split point on an optimal edit path, returned in absolute
/// coordinates. Both ranges are non-empty and share no prefix or suffix.
fn middle_snake<T: PartialEq>(
    old: &[T],
    o: Range<usize>,
    new: &[T],
    nr: Range<usize>,
) -> Option<(usize, usize)> {
    let n = o.len();
    let m = nr.len();
    let a = &old[o.clone()];
    let b = &new[nr.clone()];
    let delta = n as isize - m as isize;
    let odd = delta & 1 == 1;
    let max_d = (n + m).div_ceil(2) + 1;
    let mut vf = V::new(max_d);
    let mut vb = V::new(max_d);
    vf[1] = 0;
    vb[1] = 0;

    for d in 0..max_d as isize {
        let mut k = d;
        while k >= -d {
            let mut x = if k == -d || (k != d && vf[k - 1] < vf[k + 1]) {
                vf[k + 1]
            } else {
                vf[k - 1] + 1
            };
            let y = (x as isize - k) as usize;
            let (x0, y0) = (x, y);
            if x < n && y < m {
                x += common_prefix(&a[x..], &b[y..]);
            }
            vf[k] = x;
            if odd && (k - delta).abs() < d && vf[k] + vb[-(k - delta)] >= n {
                return Some((x0 + o.start, y0 + nr.start));
            }
            k -= 2;
        }

        let mut k = d;
        while k >= -d {
            let mut x = if k == -d || (k != d && vb[k - 1] < vb[k + 1]) {
                vb[k + 1]
            } else {
                vb[k - 1] + 1
            };
            let mut y = (x as isize - k) as usize;
            if x < n && y < m {
                let adv = common_suffix(&a[..n - x], &b[..m - y]);
                x += adv;
                y += adv;
            }
            vb[k] = x;
            if !odd && (k - delta).abs() <= d && vb[k] + vf[-(k - delta)] >= n {
                return Some((n - x + o.start, m - y + nr.start));
            }
            k -= 2;
        }
    }
    None
}
