//! Carry-save reduction tree and carry-select final adder.

use crate::wide::WideInt;

/// Shape of one reduction: the number of rows left after each layer.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CsaTrace {
    pub rows_per_layer: Vec<usize>,
    /// 64-bit blocks of the carry-select adder whose carry-in was one.
    pub carry_blocks: usize,
}

/// 3:2 counter over whole words: sum and left-shifted majority.
fn full_add(a: &WideInt, b: &WideInt, c: &WideInt) -> (WideInt, WideInt) {
    let sum = a.xor(b).xor(c);
    let carry = a.and(b).or(&a.and(c)).or(&b.and(c)).shl(1);
    (sum, carry)
}

/// 4:2 compressor built from two chained 3:2 counters.
fn compress_4_2(a: &WideInt, b: &WideInt, c: &WideInt, d: &WideInt) -> (WideInt, WideInt) {
    let (s1, c1) = full_add(a, b, c);
    full_add(&s1, &c1, d)
}

/// Carry-select adder over 64-bit blocks: each block precomputes its sum for
/// carry-in 0 and 1 and the incoming carry picks one.
fn carry_select_add(a: &WideInt, b: &WideInt) -> (WideInt, usize) {
    let mut out = *a;
    let mut carry = false;
    let mut selected = 0;
    for i in 0..a.len() {
        let (x, y) = (a.limbs()[i], b.limbs()[i]);
        let (s0, c0) = x.overflowing_add(y);
        let (s1, c1) = (s0.wrapping_add(1), c0 || s0 == u64::MAX);
        let (s, c) = if carry { (s1, c1) } else { (s0, c0) };
        selected += carry as usize;
        out = out.with_limb(i, s);
        carry = c;
    }
    (out, selected)
}

fn reduce(addends: &[WideInt], len: usize, mut trace: Option<&mut CsaTrace>) -> WideInt {
    let mut rows: Vec<WideInt> = addends.to_vec();
    while rows.len() > 2 {
        let mut next = Vec::with_capacity(rows.len() / 2 + 1);
        let mut chunks = rows.chunks_exact(4);
        for q in &mut chunks {
            let (s, c) = compress_4_2(&q[0], &q[1], &q[2], &q[3]);
            next.push(s);
            next.push(c);
        }
        match chunks.remainder() {
            [a, b, c] => {
                let (s, cy) = full_add(a, b, c);
                next.push(s);
                next.push(cy);
            }
            rest => next.extend_from_slice(rest),
        }
        rows = next;
        if let Some(t) = trace.as_deref_mut() {
            t.rows_per_layer.push(rows.len());
        }
    }
    match rows.as_slice() {
        [] => WideInt::zero(len),
        [a] => *a,
        [a, b] => {
            let (s, blocks) = carry_select_add(a, b);
            if let Some(t) = trace {
                t.carry_blocks = blocks;
            }
            s
        }
        _ => unreachable!(),
    }
}

/// Sums two's-complement addends (modulo the container width) through 4:2
/// compressor layers and a carry-select adder.
pub fn csa_reduce(addends: &[WideInt], len: usize) -> WideInt {
    reduce(addends, len, None)
}

pub fn csa_reduce_traced(addends: &[WideInt], len: usize) -> (WideInt, CsaTrace) {
    let mut trace = CsaTrace::default();
    let sum = reduce(addends, len, Some(&mut trace));
    (sum, trace)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matches_serial_sum() {
        let vals: Vec<i128> = vec![5, -7, 1 << 90, -(1 << 70), 3, 99, -1, 0, 12345, -54321, 7, 7, 7, 7, -28, 1];
        for n in 0..=vals.len() {
            let ws: Vec<_> = vals[..n].iter().map(|&v| WideInt::from_i128(v, 3)).collect();
            let expect: i128 = vals[..n].iter().sum();
            assert_eq!(csa_reduce(&ws, 3), WideInt::from_i128(expect, 3), "n = {n}");
        }
    }

    #[test]
    fn sixteen_rows_take_three_layers() {
        let ws: Vec<_> = (0..16).map(|i| WideInt::from_u64(i, 1)).collect();
        let (s, t) = csa_reduce_traced(&ws, 1);
        assert_eq!(s, WideInt::from_u64(120, 1));
        assert_eq!(t.rows_per_layer, vec![8, 4, 2]);
    }

    #[test]
    fn carry_select_propagates_across_blocks() {
        let a = WideInt::from_u64(u64::MAX, 2);
        let b = WideInt::from_u64(1, 2);
        let (s, blocks) = carry_select_add(&a, &b);
        assert_eq!(s.limbs(), &[0, 1]);
        assert_eq!(blocks, 1);
    }
}
