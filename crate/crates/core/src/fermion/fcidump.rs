//! FCIDUMP reader: namelist header, then `value i j k l` lines with 1-based
//! spatial indices in chemists' order (ij|kl).  `i j 0 0` lines are one-body
//! integrals, `0 0 0 0` is the core energy.  The stored unique entries are
//! completed to the full 8-fold permutation symmetry and expanded to
//! spin-orbitals with alpha on even and beta on odd indices.

use crate::error::{Error, Result};

use super::IntegralSet;

pub fn parse_fcidump(text: &str) -> Result<IntegralSet> {
    let mut lines = text.lines().enumerate();

    // ---- header: everything up to &END (or a bare "/") ----
    let mut header = String::new();
    let mut header_done = false;
    for (idx, line) in lines.by_ref() {
        let t = line.trim();
        if idx == 0 && !t.starts_with("&FCI") && !t.starts_with("&fci") {
            return Err(Error::Fcidump {
                line: 1,
                msg: "expected &FCI namelist header".into(),
            });
        }
        header.push(' ');
        header.push_str(t);
        if t.contains("&END") || t.contains("&end") || t == "/" || t.ends_with('/') {
            header_done = true;
            break;
        }
    }
    if !header_done {
        return Err(Error::Fcidump { line: 1, msg: "unterminated namelist header".into() });
    }

    let norb = header_field(&header, "NORB")
        .ok_or_else(|| Error::Fcidump { line: 1, msg: "missing NORB".into() })?;
    let nelec = header_field(&header, "NELEC")
        .ok_or_else(|| Error::Fcidump { line: 1, msg: "missing NELEC".into() })?;
    if norb == 0 || norb > 32 {
        return Err(Error::Fcidump { line: 1, msg: format!("unsupported NORB={norb}") });
    }

    // ---- body: spatial integrals ----
    let nsp = norb;
    let mut h1 = vec![0.0f64; nsp * nsp];
    let mut eri = vec![0.0f64; nsp * nsp * nsp * nsp];
    let mut core = 0.0f64;
    let at = |i: usize, j: usize, k: usize, l: usize| ((i * nsp + j) * nsp + k) * nsp + l;

    for (idx, line) in lines {
        let lineno = idx + 1;
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        let mut parts = t.split_whitespace();
        let value: f64 = parts
            .next()
            .unwrap()
            .parse()
            .map_err(|_| Error::Fcidump { line: lineno, msg: "non-numeric value".into() })?;
        let mut ix = [0usize; 4];
        for slot in ix.iter_mut() {
            let tok = parts
                .next()
                .ok_or_else(|| Error::Fcidump { line: lineno, msg: "missing index".into() })?;
            *slot = tok
                .parse()
                .map_err(|_| Error::Fcidump { line: lineno, msg: "non-integer index".into() })?;
        }
        if parts.next().is_some() {
            return Err(Error::Fcidump { line: lineno, msg: "trailing tokens".into() });
        }
        if ix.iter().any(|&v| v > norb) {
            return Err(Error::Fcidump {
                line: lineno,
                msg: format!("index out of range (NORB={norb})"),
            });
        }
        let [i, j, k, l] = ix;
        match (i, j, k, l) {
            (0, 0, 0, 0) => core = value,
            (_, _, 0, 0) if i > 0 && j > 0 => {
                h1[(i - 1) * nsp + (j - 1)] = value;
                h1[(j - 1) * nsp + (i - 1)] = value;
            }
            _ if i > 0 && j > 0 && k > 0 && l > 0 => {
                let (i, j, k, l) = (i - 1, j - 1, k - 1, l - 1);
                // real-orbital 8-fold symmetry of (ij|kl)
                for (a, b, c, d) in [
                    (i, j, k, l),
                    (j, i, k, l),
                    (i, j, l, k),
                    (j, i, l, k),
                    (k, l, i, j),
                    (l, k, i, j),
                    (k, l, j, i),
                    (l, k, j, i),
                ] {
                    eri[at(a, b, c, d)] = value;
                }
            }
            _ => {
                return Err(Error::Fcidump {
                    line: lineno,
                    msg: "mixed zero/nonzero index pattern".into(),
                })
            }
        }
    }

    // ---- spin-orbital expansion, interleaved layout ----
    // Spatial orbital p becomes qubit-side indices 2p (alpha) and 2p+1 (beta).
    // h_PQRS = (pr|qs) δ_{σP σR} δ_{σQ σS}  (physicists' <PQ|RS>).
    let n = 2 * nsp;
    let mut ints = IntegralSet::empty(n, nelec);
    ints.core_energy = core;
    for cp in 0..n {
        for cq in 0..n {
            if cp % 2 == cq % 2 {
                ints.one_body[cp * n + cq] = h1[(cp / 2) * nsp + (cq / 2)];
            }
        }
    }
    for p in 0..n {
        for q in 0..n {
            for r in 0..n {
                for s in 0..n {
                    if p % 2 == r % 2 && q % 2 == s % 2 {
                        let v = eri[at(p / 2, r / 2, q / 2, s / 2)];
                        ints.two_body[((p * n + q) * n + r) * n + s] = v;
                    }
                }
            }
        }
    }
    Ok(ints)
}

fn header_field(header: &str, key: &str) -> Option<usize> {
    let upper = header.to_uppercase();
    let pos = upper.find(key)?;
    let rest = &upper[pos + key.len()..];
    let rest = rest.trim_start().strip_prefix('=')?.trim_start();
    let end = rest.find(|c: char| !c.is_ascii_digit()).unwrap_or(rest.len());
    rest[..end].parse().ok()
}
