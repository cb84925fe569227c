//! Line-oriented instance files.
//!
//! ```text
//! # comments run to end of line
//! N M
//! q_1 ... q_M
//! <N ranking lines, object numbers, most preferred first>
//! priorities            (optional)
//! <M lines, agent numbers, highest priority first>
//! ```
//!
//! All numbers are 1-based.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::mechanisms::PriorityProfile;
use crate::model::{Instance, Preference, Profile};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InstanceFile {
    pub instance: Instance,
    pub profile: Profile,
    pub priorities: Option<PriorityProfile>,
}

struct Lines<'a> {
    inner: std::iter::Peekable<Box<dyn Iterator<Item = (usize, &'a str)> + 'a>>,
    last: usize,
}

impl<'a> Lines<'a> {
    fn new(text: &'a str) -> Self {
        let it: Box<dyn Iterator<Item = (usize, &'a str)>> = Box::new(
            text.lines()
                .enumerate()
                .map(|(k, l)| (k + 1, l.split('#').next().unwrap_or("").trim()))
                .filter(|(_, l)| !l.is_empty()),
        );
        Self {
            inner: it.peekable(),
            last: 0,
        }
    }

    fn next(&mut self, what: &str) -> Result<(usize, &'a str)> {
        match self.inner.next() {
            Some((n, l)) => {
                self.last = n;
                Ok((n, l))
            }
            None => Err(Error::Parse {
                line: self.last + 1,
                message: format!("unexpected end of input, expected {what}"),
            }),
        }
    }

    fn peek(&mut self) -> Option<&(usize, &'a str)> {
        self.inner.peek()
    }
}

fn numbers(line: usize, text: &str) -> Result<Vec<usize>> {
    text.split_whitespace()
        .map(|tok| {
            tok.parse::<usize>().map_err(|_| Error::Parse {
                line,
                message: format!("expected a non-negative integer, found {tok:?}"),
            })
        })
        .collect()
}

fn at_line(line: usize) -> impl Fn(Error) -> Error {
    move |e| match e {
        Error::Parse { .. } => e,
        other => Error::Parse {
            line,
            message: other.to_string(),
        },
    }
}

/// Parses and validates an instance file.
pub fn parse_instance(text: &str) -> Result<InstanceFile> {
    let mut lines = Lines::new(text);

    let (ln, header) = lines.next("header `N M`")?;
    let header = numbers(ln, header)?;
    let [n, m] = header[..] else {
        return Err(Error::Parse {
            line: ln,
            message: format!("header must be `N M`, found {} numbers", header.len()),
        });
    };

    let (ln, caps) = lines.next("capacity line")?;
    let caps = numbers(ln, caps)?;
    if caps.len() != m {
        return Err(Error::Parse {
            line: ln,
            message: format!("expected {m} capacities, found {}", caps.len()),
        });
    }
    let instance = Instance::new(n, caps).map_err(at_line(ln))?;

    let mut prefs = Vec::with_capacity(n);
    for agent in 1..=n {
        let (ln, text) = lines.next(&format!("ranking for agent {agent}"))?;
        if text.eq_ignore_ascii_case("priorities") {
            return Err(Error::Parse {
                line: ln,
                message: format!("expected {n} ranking lines, found {}", agent - 1),
            });
        }
        let ranking = numbers(ln, text)?;
        if ranking.len() != m {
            return Err(Error::Parse {
                line: ln,
                message: format!("ranking has {} entries, expected {m}", ranking.len()),
            });
        }
        prefs.push(Preference::from_one_based(&ranking).map_err(at_line(ln))?);
    }
    let profile = Profile::new(&instance, prefs).expect("lengths checked");

    let priorities = match lines.peek() {
        None => None,
        Some(&(_, text)) if text.eq_ignore_ascii_case("priorities") => {
            lines.next("priorities")?;
            let mut orders = Vec::with_capacity(m);
            for object in 1..=m {
                let (ln, text) = lines.next(&format!("priority order for object {object}"))?;
                let order = numbers(ln, text)?;
                if order.len() != n {
                    return Err(Error::Parse {
                        line: ln,
                        message: format!(
                            "priority order has {} entries, expected {n}",
                            order.len()
                        ),
                    });
                }
                let zero = order
                    .iter()
                    .map(|&a| {
                        if a == 0 || a > n {
                            Err(Error::Parse {
                                line: ln,
                                message: format!("agent {a} out of range 1..={n}"),
                            })
                        } else {
                            Ok(a - 1)
                        }
                    })
                    .collect::<Result<Vec<_>>>()?;
                let mut seen = vec![false; n];
                if let Some(&dup) = zero
                    .iter()
                    .find(|&&a| std::mem::replace(&mut seen[a], true))
                {
                    return Err(Error::Parse {
                        line: ln,
                        message: format!("agent {} listed twice", dup + 1),
                    });
                }
                orders.push(zero);
            }
            Some(PriorityProfile::new(&instance, orders).expect("orders validated per line"))
        }
        Some(&(ln, text)) => {
            // more agents than declared, or trailing junk
            return Err(Error::Parse {
                line: ln,
                message: format!("unexpected line {text:?} after {n} rankings"),
            });
        }
    };

    if let Some(&(ln, text)) = lines.peek() {
        return Err(Error::Parse {
            line: ln,
            message: format!("unexpected trailing line {text:?}"),
        });
    }

    Ok(InstanceFile {
        instance,
        profile,
        priorities,
    })
}

/// Renders a file that [`parse_instance`] reads back to the same value.
pub fn render_instance(file: &InstanceFile) -> String {
    let inst = &file.instance;
    let mut out = String::new();
    writeln!(out, "{} {}", inst.n_agents(), inst.n_objects()).unwrap();
    let caps: Vec<String> = inst.capacities().iter().map(|q| q.to_string()).collect();
    writeln!(out, "{}", caps.join(" ")).unwrap();
    for p in file.profile.prefs() {
        writeln!(out, "{p}").unwrap();
    }
    if let Some(pr) = &file.priorities {
        out.push_str("priorities\n");
        for order in pr.orders() {
            let agents: Vec<String> = order.iter().map(|a| (a + 1).to_string()).collect();
            writeln!(out, "{}", agents.join(" ")).unwrap();
        }
    }
    out
}
