//! Plain-text MDP files.
//!
//! ```text
//! # comment
//! <states> <actions> <gamma>
//! T <s> <a> <s'> <p>
//! R <s> <a> <r>
//! S <s> <p>        optional start weight; defaults to state 0
//! F <s>            optional terminal state; made absorbing if it has no T records
//! M <steps>        optional episode step budget; defaults to 1000
//! ```

use std::fmt::Write as _;
use std::str::FromStr;

use crate::error::{Error, Result};

use super::MdpSpec;

const DEFAULT_MAX_STEPS: usize = 1000;

fn field<T: FromStr>(tok: Option<&str>, line: usize, what: &str) -> Result<T> {
    tok.ok_or_else(|| Error::parse(line, format!("missing {what}")))?
        .parse()
        .map_err(|_| Error::parse(line, format!("bad {what}")))
}

fn bounded(v: usize, limit: usize, line: usize, what: &str) -> Result<usize> {
    if v < limit {
        Ok(v)
    } else {
        Err(Error::parse(line, format!("{what} {v} out of range (< {limit})")))
    }
}

pub fn parse_mdp(name: &str, text: &str) -> Result<MdpSpec> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty());
    let (hline, header) = lines.next().ok_or_else(|| Error::parse(1, "missing header"))?;
    let mut toks = header.split_whitespace();
    let n: usize = field(toks.next(), hline, "state count")?;
    let na: usize = field(toks.next(), hline, "action count")?;
    let gamma: f64 = field(toks.next(), hline, "gamma")?;
    if n == 0 || na == 0 {
        return Err(Error::parse(hline, "need at least one state and one action"));
    }

    let mut transition = vec![0.0; n * na * n];
    let mut reward = vec![0.0; n * na];
    let mut start = vec![0.0; n];
    let mut terminal = vec![false; n];
    let mut max_steps = DEFAULT_MAX_STEPS;
    for (line, body) in lines {
        let mut toks = body.split_whitespace();
        match toks.next() {
            Some("T") => {
                let s = bounded(field(toks.next(), line, "state")?, n, line, "state")?;
                let a = bounded(field(toks.next(), line, "action")?, na, line, "action")?;
                let s2 = bounded(field(toks.next(), line, "next state")?, n, line, "next state")?;
                let p: f64 = field(toks.next(), line, "probability")?;
                transition[(s * na + a) * n + s2] = p;
            }
            Some("R") => {
                let s = bounded(field(toks.next(), line, "state")?, n, line, "state")?;
                let a = bounded(field(toks.next(), line, "action")?, na, line, "action")?;
                reward[s * na + a] = field(toks.next(), line, "reward")?;
            }
            Some("S") => {
                let s = bounded(field(toks.next(), line, "state")?, n, line, "state")?;
                start[s] = field(toks.next(), line, "start weight")?;
            }
            Some("F") => {
                let s = bounded(field(toks.next(), line, "state")?, n, line, "state")?;
                terminal[s] = true;
            }
            Some("M") => max_steps = field(toks.next(), line, "step budget")?,
            Some(other) => return Err(Error::parse(line, format!("unknown record {other:?}"))),
            None => {}
        }
    }
    for s in (0..n).filter(|&s| terminal[s]) {
        for a in 0..na {
            let row = &mut transition[(s * na + a) * n..(s * na + a + 1) * n];
            if row.iter().all(|&p| p == 0.0) {
                row[s] = 1.0;
            }
        }
    }
    let total: f64 = start.iter().sum();
    if total == 0.0 {
        start[0] = 1.0;
    } else {
        start.iter_mut().for_each(|p| *p /= total);
    }
    MdpSpec::new(name, n, na, transition, reward, gamma, start, terminal, max_steps)
}

/// Writes an MDP in the text format. Arrival rewards are folded into the
/// expected `(s, a)` reward, so sampled rewards of the reloaded MDP are
/// expectations.
pub fn write_mdp(mdp: &MdpSpec) -> String {
    let mut out = String::new();
    let (n, na) = (mdp.num_states(), mdp.num_actions());
    let _ = writeln!(out, "{n} {na} {}", mdp.gamma());
    for s in 0..n {
        for a in 0..na {
            for &(s2, p) in mdp.successors(s, a) {
                let _ = writeln!(out, "T {s} {a} {s2} {p:e}");
            }
        }
    }
    for s in 0..n {
        for a in 0..na {
            let r = mdp.reward(s, a);
            if r != 0.0 {
                let _ = writeln!(out, "R {s} {a} {r:e}");
            }
        }
    }
    for (s, &p) in mdp.start_distribution().iter().enumerate() {
        if p > 0.0 {
            let _ = writeln!(out, "S {s} {p:e}");
        }
    }
    for s in mdp.terminal_states() {
        let _ = writeln!(out, "F {s}");
    }
    let _ = writeln!(out, "M {}", mdp.max_steps());
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = "\
# two-state example
2 2 0.9
T 0 0 0 1
T 0 1 1 1.0
T 1 0 1 1
T 1 1 1 1
R 0 1 1.0
F 1
";

    #[test]
    fn parses_sample() {
        let mdp = parse_mdp("sample", SAMPLE).unwrap();
        assert_eq!(mdp.num_states(), 2);
        assert_eq!(mdp.gamma(), 0.9);
        assert_eq!(mdp.reward(0, 1), 1.0);
        assert!(mdp.is_terminal(1));
        assert_eq!(mdp.start_distribution(), &[1.0, 0.0]);
    }

    #[test]
    fn rejects_incomplete_rows_and_bad_ids() {
        assert!(parse_mdp("x", "2 1 0.9\nT 0 0 1 1\n").is_err());
        assert!(matches!(parse_mdp("x", "1 1 0.9\nT 0 0 3 1\n"), Err(Error::Parse { line: 2, .. })));
        assert!(parse_mdp("x", "1 1 0.9\nQ 0\n").is_err());
    }

    #[test]
    fn bare_terminal_becomes_absorbing() {
        let mdp = parse_mdp("x", "2 2 0.9\nT 0 0 1 1\nT 0 1 1 1\nF 1\n").unwrap();
        assert_eq!(mdp.row(1, 0), &[0.0, 1.0]);
        assert_eq!(mdp.row(1, 1), &[0.0, 1.0]);
    }

    #[test]
    fn write_then_parse_preserves_kernel() {
        let mdp = crate::mdp::build_two_arm_chain();
        let back = parse_mdp("chain", &write_mdp(&mdp)).unwrap();
        assert_eq!(back.num_states(), mdp.num_states());
        for s in 0..mdp.num_states() {
            for a in 0..mdp.num_actions() {
                assert_eq!(back.row(s, a), mdp.row(s, a));
                assert_eq!(back.reward(s, a), mdp.reward(s, a));
            }
        }
        assert_eq!(back.max_steps(), 450);
    }
}
