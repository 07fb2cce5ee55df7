//! Extended binary Golay code and the minimal shell of the Leech lattice.
//!
//! Coordinates are scaled so the minimal vectors are integer vectors of squared
//! norm 32. A vector `x` in Z^24 lies in the lattice iff all coordinates share a
//! parity `m`, the word `((x_i - m)/2 mod 2)_i` is a Golay codeword, and
//! `sum x_i = 4m (mod 8)`.

use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

pub const LEECH_KISSING: usize = 196_560;
pub const LEECH_NORM: i64 = 32;
pub const CACHE_ENV: &str = "SPHERECODE_CACHE";
const CACHE_FILE: &str = "leech_minimal_v1.bin";

/// Quadratic residues mod 11 together with 0.
const QR11: [usize; 6] = [0, 1, 3, 4, 5, 9];

/// Extended binary Golay code [24, 12, 8] with generator `[I_12 | B]`.
///
/// Words are `u32` bit masks: bit `i` is coordinate `i`.
#[derive(Clone, Debug)]
pub struct GolayCode {
    b_rows: [u16; 12],
    syndrome: Vec<u16>,
}

impl Default for GolayCode {
    fn default() -> Self {
        Self::new()
    }
}

impl GolayCode {
    pub fn new() -> Self {
        // B = [[0, 1^11], [1^11^T, N]] with N_ij = 1 iff (j - i) mod 11 in {0} u QR.
        let mut b_rows = [0u16; 12];
        b_rows[0] = 0b1111_1111_1110;
        for i in 0..11 {
            let mut row = 1u16;
            for j in 0..11 {
                if QR11.contains(&((j + 11 - i) % 11)) {
                    row |= 1 << (j + 1);
                }
            }
            b_rows[i + 1] = row;
        }
        let syndrome = (0..4096u32)
            .map(|m| {
                (0..12)
                    .filter(|k| m >> k & 1 == 1)
                    .fold(0u16, |acc, k| acc ^ b_rows[k])
            })
            .collect();
        GolayCode { b_rows, syndrome }
    }

    pub fn generator_row(&self, i: usize) -> u32 {
        (1u32 << i) | (u32::from(self.b_rows[i]) << 12)
    }

    pub fn contains(&self, word: u32) -> bool {
        word >> 24 == 0 && self.syndrome[(word & 0xfff) as usize] == (word >> 12) as u16
    }

    /// All 4096 codewords, in the order of their message bits.
    pub fn codewords(&self) -> Vec<u32> {
        (0..4096u32)
            .map(|m| {
                (0..12)
                    .filter(|k| m >> k & 1 == 1)
                    .fold(0u32, |acc, k| acc ^ self.generator_row(k))
            })
            .collect()
    }
}

/// Membership test for the Leech lattice in the norm-32 scaling.
pub fn is_leech_vector(golay: &GolayCode, x: &[i32]) -> bool {
    if x.len() != 24 {
        return false;
    }
    let m = x[0].rem_euclid(2);
    let mut word = 0u32;
    let mut sum = 0i64;
    for (i, &v) in x.iter().enumerate() {
        if v.rem_euclid(2) != m {
            return false;
        }
        if ((v - m) / 2).rem_euclid(2) == 1 {
            word |= 1 << i;
        }
        sum += i64::from(v);
    }
    sum.rem_euclid(8) == i64::from(4 * m) && golay.contains(word)
}

/// Enumerates the three norm-32 shapes `(±4^2, 0^22)`, `(±2^8, 0^16)` and
/// `(∓3, ±1^23)` and keeps the vectors accepted by [`is_leech_vector`].
///
/// For the `(±2^8)` shape the support pattern is the Golay word of the
/// candidate, so supports that are not codewords are skipped before the
/// sign patterns are expanded. The odd shape is pruned the same way.
pub fn enumerate_minimal_vectors(golay: &GolayCode) -> Vec<[i8; 24]> {
    let mut out: Vec<[i8; 24]> = Vec::with_capacity(LEECH_KISSING);
    let accept = |v: &[i8; 24]| {
        let x: [i32; 24] = std::array::from_fn(|i| i32::from(v[i]));
        is_leech_vector(golay, &x)
    };

    for i in 0..24 {
        for j in i + 1..24 {
            for signs in 0..4u8 {
                let mut v = [0i8; 24];
                v[i] = if signs & 1 == 0 { 4 } else { -4 };
                v[j] = if signs & 2 == 0 { 4 } else { -4 };
                if accept(&v) {
                    out.push(v);
                }
            }
        }
    }

    // 8-subsets of 24 positions in increasing mask order (Gosper's hack).
    let mut support: u32 = 0xff;
    while support < 1 << 24 {
        if golay.contains(support) {
            let pos: Vec<usize> = (0..24).filter(|k| support >> k & 1 == 1).collect();
            for signs in 0..256u32 {
                let mut v = [0i8; 24];
                for (b, &p) in pos.iter().enumerate() {
                    v[p] = if signs >> b & 1 == 0 { 2 } else { -2 };
                }
                if accept(&v) {
                    out.push(v);
                }
            }
        }
        let c = support & support.wrapping_neg();
        let r = support + c;
        support = (((r ^ support) >> 2) / c) | r;
    }

    // An odd-shape vector determines its Golay word: coordinate i is in the
    // word iff x_i is -1 or 3. Candidates are generated per codeword and per
    // position of the entry of magnitude 3, which covers every odd-shape vector
    // whose word can pass the Golay test.
    for word in golay.codewords() {
        for p in 0..24 {
            let v: [i8; 24] = std::array::from_fn(|i| {
                let inside = word >> i & 1 == 1;
                match (i == p, inside) {
                    (false, false) => 1,
                    (false, true) => -1,
                    (true, false) => -3,
                    (true, true) => 3,
                }
            });
            if accept(&v) {
                out.push(v);
            }
        }
    }
    out
}

fn cache_path() -> Option<PathBuf> {
    std::env::var_os(CACHE_ENV).map(|d| Path::new(&d).join(CACHE_FILE))
}

fn load_cache(path: &Path, golay: &GolayCode) -> Option<Vec<[i8; 24]>> {
    let mut bytes = Vec::new();
    fs::File::open(path).ok()?.read_to_end(&mut bytes).ok()?;
    if bytes.len() != LEECH_KISSING * 24 {
        return None;
    }
    let rows: Vec<[i8; 24]> = bytes
        .chunks_exact(24)
        .map(|c| std::array::from_fn(|i| c[i] as i8))
        .collect();
    let valid = rows.iter().all(|r| {
        let x: [i32; 24] = std::array::from_fn(|i| i32::from(r[i]));
        x.iter().map(|v| v * v).sum::<i32>() == LEECH_NORM as i32 && is_leech_vector(golay, &x)
    });
    valid.then_some(rows)
}

fn store_cache(path: &Path, rows: &[[i8; 24]]) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    let tmp = path.with_extension("tmp");
    let mut f = fs::File::create(&tmp)?;
    let bytes: Vec<u8> = rows.iter().flat_map(|r| r.iter().map(|&v| v as u8)).collect();
    f.write_all(&bytes)?;
    fs::rename(tmp, path)?;
    Ok(())
}

/// The 196560 minimal vectors, memoized under `$SPHERECODE_CACHE` when set.
pub fn minimal_vectors() -> Result<Vec<[i8; 24]>> {
    let golay = GolayCode::new();
    let path = cache_path();
    if let Some(p) = &path {
        if let Some(rows) = load_cache(p, &golay) {
            return Ok(rows);
        }
    }
    let rows = enumerate_minimal_vectors(&golay);
    if rows.len() != LEECH_KISSING {
        return Err(Error::Degenerate(format!(
            "Leech enumeration produced {} vectors",
            rows.len()
        )));
    }
    if let Some(p) = &path {
        store_cache(p, &rows)?;
    }
    Ok(rows)
}
