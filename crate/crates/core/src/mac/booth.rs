//! Booth-recoded 4-bit multipliers and their composition into wider tiles.

/// Product of two 4-bit nibbles on one radix-2 modified-Booth unit.
///
/// Each nibble is read as two's-complement or unsigned according to its
/// flag; the multiplier is extended to five bits and recoded into digits
/// `b[i-1] - b[i]` in {-1, 0, +1}, each selecting `0` or `±a << i` as a
/// partial product.
pub fn booth_nibble_product(a: u8, a_signed: bool, b: u8, b_signed: bool) -> i16 {
    let extend = |v: u8, signed: bool| -> i16 {
        let v = (v & 0xF) as i16;
        if signed && v & 0x8 != 0 {
            v - 16
        } else {
            v
        }
    };
    let multiplicand = extend(a, a_signed);
    let multiplier = (extend(b, b_signed) as u16) & 0x1F;
    let mut sum: i16 = 0;
    let mut prev = 0u16;
    for i in 0..5 {
        let bit = (multiplier >> i) & 1;
        match (bit, prev) {
            (0, 1) => sum += multiplicand << i,
            (1, 0) => sum -= multiplicand << i,
            _ => {}
        }
        prev = bit;
    }
    sum
}

/// Signed 4x4 Booth multiply. Both operands must lie in [-8, 7].
pub fn booth_multiply_4x4(a: i8, b: i8) -> i8 {
    assert!((-8..=7).contains(&a) && (-8..=7).contains(&b), "operands out of 4-bit range");
    booth_nibble_product(a as u8, true, b as u8, true) as i8
}

/// Unsigned `width`-bit multiply on an array of `(width/4)^2` Booth units.
///
/// Operands are split into nibbles; nibble pair `(i, j)` runs on its own
/// unit and the partial products are recombined with shifts of `4(i + j)`.
pub fn tile_multiply(a: u32, b: u32, width: u32) -> u64 {
    assert!(matches!(width, 4 | 8 | 12 | 16), "tile width {width} not in {{4, 8, 12, 16}}");
    debug_assert!(a >> width == 0 && b >> width == 0, "operand wider than {width} bits");
    let digits = width / 4;
    let mut acc = 0u64;
    for i in 0..digits {
        let da = ((a >> (4 * i)) & 0xF) as u8;
        for j in 0..digits {
            let db = ((b >> (4 * j)) & 0xF) as u8;
            let p = booth_nibble_product(da, false, db, false);
            debug_assert!(p >= 0);
            acc += (p as u64) << (4 * (i + j));
        }
    }
    acc
}
