//! Runner for the acceptance target: every selected criterion is evaluated,
//! reported on one line, and the process exit code reflects the lot.

use std::any::Any;
use std::io::Write;
use std::panic::{self, AssertUnwindSafe};

/// Outcome of one acceptance criterion.
#[derive(Debug, Clone, PartialEq)]
pub struct Verdict {
    pub id: u32,
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
}

impl Verdict {
    pub fn line(&self) -> String {
        let word = if self.pass { "PASS" } else { "FAIL" };
        format!("criterion {} {}: {word} ({})", self.id, self.name, self.detail)
    }
}

/// Criterion number and the check that produces its verdict.
pub type Criterion = (u32, fn() -> Verdict);

fn panic_message(payload: &(dyn Any + Send)) -> String {
    payload
        .downcast_ref::<&str>()
        .map(|s| s.to_string())
        .or_else(|| payload.downcast_ref::<String>().cloned())
        .unwrap_or_else(|| "non-string panic".into())
}

/// Numeric arguments select criteria; flags (anything starting with `-`)
/// and other words are ignored so that harness options pass through.
pub fn selection(args: impl IntoIterator<Item = String>) -> Vec<u32> {
    args.into_iter()
        .filter(|a| !a.starts_with('-'))
        .filter_map(|a| a.parse().ok())
        .collect()
}

/// Runs the selected criteria in order and returns the exit code: 0 when
/// every one passed, 1 otherwise. A panicking check counts as a failure.
pub fn run_criteria(criteria: &[Criterion], args: impl IntoIterator<Item = String>) -> i32 {
    let wanted = selection(args);
    let hook = panic::take_hook();
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    let mut ran = 0;
    for &(id, check) in criteria {
        if !wanted.is_empty() && !wanted.contains(&id) {
            continue;
        }
        ran += 1;
        let line = match panic::catch_unwind(AssertUnwindSafe(check)) {
            Ok(v) => {
                failed += usize::from(!v.pass);
                v.line()
            }
            Err(payload) => {
                failed += 1;
                format!("criterion {id}: FAIL (panicked: {})", panic_message(payload.as_ref()))
            }
        };
        println!("{line}");
        let _ = std::io::stdout().flush();
    }
    panic::set_hook(hook);
    println!("\nacceptance: {} passed, {failed} failed", ran - failed);
    i32::from(failed > 0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn good() -> Verdict {
        Verdict {
            id: 1,
            name: "good",
            pass: true,
            detail: "ok".into(),
        }
    }

    fn bad() -> Verdict {
        Verdict {
            id: 2,
            name: "bad",
            pass: false,
            detail: "off by one".into(),
        }
    }

    fn boom() -> Verdict {
        panic!("no convergence")
    }

    #[test]
    fn line_format() {
        assert_eq!(good().line(), "criterion 1 good: PASS (ok)");
        assert_eq!(bad().line(), "criterion 2 bad: FAIL (off by one)");
    }

    #[test]
    fn selection_ignores_flags_and_words() {
        let args = ["--nocapture", "5", "x", "7"].map(String::from);
        assert_eq!(selection(args), vec![5, 7]);
    }

    #[test]
    fn exit_code_reflects_failures() {
        let none: [String; 0] = [];
        assert_eq!(run_criteria(&[(1, good)], none.clone()), 0);
        assert_eq!(run_criteria(&[(1, good), (2, bad)], none.clone()), 1);
        assert_eq!(run_criteria(&[(3, boom)], none), 1);
        assert_eq!(run_criteria(&[(1, good), (2, bad)], ["1".to_string()]), 0);
    }
}
