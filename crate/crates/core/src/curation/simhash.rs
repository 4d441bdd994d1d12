//! SimHash near-duplicate detection.
//!
//! Fingerprint: the text is lowercased (when configured), split on
//! whitespace, and sliced into overlapping token windows (shingles). Each
//! shingle hashes to 64 bits with FNV-1a over its tokens joined by a unit
//! separator; every shingle occurrence votes per bit, and a fingerprint
//! bit is 1 when strictly more than half the votes are 1. Texts with
//! fewer tokens than the window size contribute their whole token
//! sequence as one shingle, and empty texts hash the single empty
//! shingle, so every document gets a fingerprint.
//!
//! Candidate search splits the 64 bits into `num_blocks` nearly-equal
//! blocks and indexes every unordered pair of blocks. Two fingerprints
//! within Hamming distance `d` differ in at most `d` blocks, so with
//! `num_blocks >= d + 2` at least two blocks survive intact and the pair
//! lands in the same bucket for that block pair — banding finds every
//! true near-duplicate (verified afterwards by exact Hamming distance).

use std::collections::HashMap;

const FNV_OFFSET: u64 = 0xcbf29ce484222325;
const FNV_PRIME: u64 = 0x100000001b3;

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h = FNV_OFFSET;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(FNV_PRIME);
    }
    h
}

/// 64-bit SimHash of `text` using `window_size`-token shingles.
pub fn simhash_fingerprint(text: &str, window_size: usize, lowercase: bool) -> u64 {
    assert!(window_size > 0, "window size must be positive");
    let lowered;
    let text = if lowercase {
        lowered = text.to_lowercase();
        &lowered
    } else {
        text
    };
    let tokens: Vec<&str> = text.split_whitespace().collect();
    let mut votes = [0i64; 64];
    let mut total = 0i64;
    let mut add_shingle = |tokens: &[&str]| {
        let joined = tokens.join("\u{1f}");
        let h = fnv1a(joined.as_bytes());
        for (bit, vote) in votes.iter_mut().enumerate() {
            if h >> bit & 1 == 1 {
                *vote += 1;
            }
        }
        total += 1;
    };
    if tokens.len() < window_size {
        add_shingle(&tokens);
    } else {
        for w in tokens.windows(window_size) {
            add_shingle(w);
        }
    }
    let mut fp = 0u64;
    for (bit, &vote) in votes.iter().enumerate() {
        if 2 * vote > total {
            fp |= 1 << bit;
        }
    }
    fp
}

/// Widths of the bit blocks: 64 bits split as evenly as possible.
fn block_widths(num_blocks: usize) -> Vec<u32> {
    let base = 64 / num_blocks as u32;
    let extra = 64 % num_blocks as u32;
    (0..num_blocks as u32)
        .map(|i| base + u32::from(i < extra))
        .collect()
}

fn block_values(fp: u64, widths: &[u32]) -> Vec<u64> {
    let mut values = Vec::with_capacity(widths.len());
    let mut shift = 0;
    for &w in widths {
        let mask = if w == 64 { u64::MAX } else { (1u64 << w) - 1 };
        values.push(fp >> shift & mask);
        shift += w;
    }
    values
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, i: usize) -> usize {
        let mut root = i;
        while self.parent[root] != root {
            root = self.parent[root];
        }
        let mut node = i;
        while self.parent[node] != root {
            let next = self.parent[node];
            self.parent[node] = root;
            node = next;
        }
        root
    }

    /// Unions by smaller index so each cluster's representative is its
    /// first-seen member.
    fn union(&mut self, a: usize, b: usize) {
        let ra = self.find(a);
        let rb = self.find(b);
        if ra != rb {
            let (keep, drop) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.parent[drop] = keep;
        }
    }
}

/// Result of clustering fingerprints: for every input index, either its
/// own index (kept) or the index of the first-seen member of its
/// duplicate cluster.
pub fn simhash_dedup(fingerprints: &[u64], hamming_max: u32, num_blocks: usize) -> Vec<usize> {
    assert!((2..=64).contains(&num_blocks), "need 2..=64 blocks");
    assert!(
        num_blocks as u32 >= hamming_max + 2,
        "banding requires num_blocks >= hamming_max + 2 to be exhaustive"
    );
    let widths = block_widths(num_blocks);
    let mut buckets: HashMap<(u8, u8, u64, u64), Vec<usize>> = HashMap::new();
    let blocks: Vec<Vec<u64>> = fingerprints
        .iter()
        .map(|&fp| block_values(fp, &widths))
        .collect();
    for (idx, b) in blocks.iter().enumerate() {
        for i in 0..num_blocks {
            for j in i + 1..num_blocks {
                buckets
                    .entry((i as u8, j as u8, b[i], b[j]))
                    .or_default()
                    .push(idx);
            }
        }
    }
    let mut uf = UnionFind::new(fingerprints.len());
    for members in buckets.values() {
        for (pos, &a) in members.iter().enumerate() {
            for &b in &members[pos + 1..] {
                if (fingerprints[a] ^ fingerprints[b]).count_ones() <= hamming_max {
                    uf.union(a, b);
                }
            }
        }
    }
    (0..fingerprints.len()).map(|i| uf.find(i)).collect()
}
