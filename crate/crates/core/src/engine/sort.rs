/// Rows at most this long may use the bitonic network.
pub const BITONIC_MAX_LEN: usize = 8192;

/// Sorts `(column, value)` pairs by column with a bitonic network.
///
/// The input is padded with `usize::MAX` keys up to the next power of two and
/// the padding is dropped afterwards. Keys within a row are unique, so
/// stability does not matter.
pub fn bitonic_sort_pairs(pairs: &mut Vec<(usize, f64)>) {
    let n = pairs.len();
    if n < 2 {
        return;
    }
    let m = n.next_power_of_two();
    pairs.resize(m, (usize::MAX, f64::INFINITY));
    let mut k = 2;
    while k <= m {
        let mut j = k / 2;
        while j > 0 {
            for i in 0..m {
                let l = i ^ j;
                if l > i {
                    let ascending = i & k == 0;
                    let out_of_order = if ascending {
                        pairs[i].0 > pairs[l].0
                    } else {
                        pairs[i].0 < pairs[l].0
                    };
                    if out_of_order {
                        pairs.swap(i, l);
                    }
                }
            }
            j /= 2;
        }
        k *= 2;
    }
    pairs.truncate(n);
}

pub(crate) fn sort_row(pairs: &mut Vec<(usize, f64)>, bitonic: bool) {
    if bitonic && pairs.len() <= BITONIC_MAX_LEN {
        bitonic_sort_pairs(pairs);
    } else {
        pairs.sort_unstable_by_key(|p| p.0);
    }
}
