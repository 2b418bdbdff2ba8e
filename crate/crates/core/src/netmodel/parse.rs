//! Line-oriented reader and writer for network definition files.
//!
//! ```text
//! species: X
//! omega: 100
//! convention: falling
//! reaction r3: 2 X -> 3 X @ rate_scaled=18
//! ```

use super::{Convention, NetError, Reaction, ReactionNetwork, MAX_ORDER};
use std::fmt::Write as _;

#[derive(Debug)]
enum RateSpec {
    Count(f64),
    Scaled(f64),
}

#[derive(Debug)]
struct RawReaction {
    line: usize,
    label: String,
    reactants: Vec<(usize, u32, String)>,
    products: Vec<(usize, u32, String)>,
    rate: RateSpec,
}

/// Cursor over one line, tracking 1-based columns for diagnostics.
struct Cursor<'a> {
    line: usize,
    text: &'a str,
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn new(line: usize, text: &'a str) -> Self {
        Self { line, text, pos: 0 }
    }

    fn column(&self) -> usize {
        self.text[..self.pos].chars().count() + 1
    }

    fn error(&self, message: impl Into<String>) -> NetError {
        NetError::Syntax {
            line: self.line,
            column: self.column(),
            message: message.into(),
        }
    }

    fn rest(&self) -> &'a str {
        &self.text[self.pos..]
    }

    fn skip_ws(&mut self) {
        let rest = self.rest();
        self.pos += rest.len() - rest.trim_start().len();
    }

    fn at_end(&mut self) -> bool {
        self.skip_ws();
        self.rest().is_empty()
    }

    fn eat(&mut self, token: &str) -> bool {
        self.skip_ws();
        if self.rest().starts_with(token) {
            self.pos += token.len();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, token: &str) -> Result<(), NetError> {
        if self.eat(token) {
            Ok(())
        } else {
            Err(self.error(format!("expected `{token}`")))
        }
    }

    fn identifier(&mut self) -> Result<String, NetError> {
        self.skip_ws();
        let rest = self.rest();
        let len = rest
            .char_indices()
            .find(|&(i, c)| !(c == '_' || c.is_ascii_alphabetic() || (i > 0 && c.is_ascii_digit())))
            .map_or(rest.len(), |(i, _)| i);
        if len == 0 {
            return Err(self.error("expected a name"));
        }
        self.pos += len;
        Ok(rest[..len].to_string())
    }

    fn integer(&mut self) -> Option<u32> {
        self.skip_ws();
        let rest = self.rest();
        let len = rest.find(|c: char| !c.is_ascii_digit()).unwrap_or(rest.len());
        if len == 0 {
            return None;
        }
        let value = rest[..len].parse().ok()?;
        self.pos += len;
        Some(value)
    }

    fn real(&mut self) -> Result<f64, NetError> {
        self.skip_ws();
        let rest = self.rest();
        let len = rest
            .find(|c: char| !(c.is_ascii_digit() || matches!(c, '.' | 'e' | 'E' | '+' | '-')))
            .unwrap_or(rest.len());
        let value = rest[..len]
            .parse::<f64>()
            .map_err(|_| self.error("expected a number"))?;
        if !value.is_finite() {
            return Err(self.error("number is not finite"));
        }
        self.pos += len;
        Ok(value)
    }
}

fn strip_comment(line: &str) -> &str {
    line.split('#').next().unwrap_or("")
}

/// Parses a network definition. `rate_scaled` values are converted to count
/// scale with the file's `omega`.
pub fn parse_network(text: &str) -> Result<ReactionNetwork, NetError> {
    parse_network_with_omega(text, None)
}

/// As [`parse_network`], with `omega_override` replacing any `omega:` line.
pub fn parse_network_with_omega(text: &str, omega_override: Option<f64>) -> Result<ReactionNetwork, NetError> {
    let mut species: Vec<String> = Vec::new();
    let mut omega: Option<f64> = None;
    let mut convention = Convention::Falling;
    let mut raw: Vec<RawReaction> = Vec::new();

    for (idx, full_line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let mut cur = Cursor::new(line_no, strip_comment(full_line));
        if cur.at_end() {
            continue;
        }
        if cur.eat("species:") {
            loop {
                let name = cur.identifier()?;
                if species.contains(&name) {
                    return Err(cur.error(format!("species `{name}` declared twice")));
                }
                species.push(name);
                if !cur.eat(",") {
                    break;
                }
            }
        } else if cur.eat("omega:") {
            let value = cur.real()?;
            if value <= 0.0 {
                return Err(cur.error("omega must be positive"));
            }
            omega = Some(value);
        } else if cur.eat("convention:") {
            let name = cur.identifier()?;
            convention = match name.as_str() {
                "falling" => Convention::Falling,
                "binomial" => Convention::Binomial,
                _ => return Err(cur.error(format!("unknown convention `{name}`"))),
            };
        } else if cur.eat("reaction") {
            raw.push(parse_reaction(&mut cur)?);
        } else {
            return Err(cur.error("expected `species:`, `omega:`, `convention:` or `reaction`"));
        }
        if !cur.at_end() {
            return Err(cur.error("unexpected trailing input"));
        }
    }

    if let Some(o) = omega_override {
        omega = Some(o);
    }
    let n = species.len();
    let mut reactions = Vec::with_capacity(raw.len());
    for r in raw {
        let mut reactants = vec![0u32; n];
        let mut products = vec![0u32; n];
        for (side, target) in [(&r.reactants, &mut reactants), (&r.products, &mut products)] {
            for (_, coeff, name) in side {
                let i = species
                    .iter()
                    .position(|s| s == name)
                    .ok_or_else(|| NetError::UnknownSpecies {
                        line: r.line,
                        name: name.clone(),
                    })?;
                target[i] += coeff;
            }
        }
        let order: u32 = reactants.iter().sum();
        if order > MAX_ORDER {
            return Err(NetError::OrderTooHigh { label: r.label, order });
        }
        let rate_constant = match r.rate {
            RateSpec::Count(k) => k,
            RateSpec::Scaled(kt) => {
                let om = omega.ok_or(NetError::MissingOmega { line: r.line })?;
                kt / om.powi(order as i32 - 1)
            }
        };
        reactions.push(Reaction {
            label: r.label,
            reactants,
            products,
            rate_constant,
        });
    }

    ReactionNetwork::new(species, reactions, omega.unwrap_or(1.0), convention)
}

fn parse_reaction(cur: &mut Cursor<'_>) -> Result<RawReaction, NetError> {
    let line = cur.line;
    let label = cur.identifier()?;
    cur.expect(":")?;
    let reactants = parse_side(cur)?;
    cur.expect("->")?;
    let products = parse_side(cur)?;
    cur.expect("@")?;
    let rate = if cur.eat("rate_scaled") {
        cur.expect("=")?;
        RateSpec::Scaled(cur.real()?)
    } else if cur.eat("rate") {
        cur.expect("=")?;
        RateSpec::Count(cur.real()?)
    } else {
        RateSpec::Count(cur.real()?)
    };
    let value = match rate {
        RateSpec::Count(v) | RateSpec::Scaled(v) => v,
    };
    if value <= 0.0 {
        return Err(NetError::NonpositiveRate { line, value });
    }
    Ok(RawReaction {
        line,
        label,
        reactants,
        products,
        rate,
    })
}

fn parse_side(cur: &mut Cursor<'_>) -> Result<Vec<(usize, u32, String)>, NetError> {
    cur.skip_ws();
    let rest = cur.rest();
    // a lone "0" is the empty complex; "0 X" would still be a coefficient
    if let Some(after) = rest.strip_prefix('0') {
        let after = after.trim_start();
        if after.starts_with("->") || after.starts_with('@') || after.is_empty() {
            cur.pos += 1;
            return Ok(Vec::new());
        }
    }
    let mut terms = Vec::new();
    loop {
        let column = {
            cur.skip_ws();
            cur.column()
        };
        let coeff = cur.integer().unwrap_or(1);
        let name = cur.identifier()?;
        terms.push((column, coeff, name));
        if !cur.eat("+") {
            break;
        }
    }
    Ok(terms)
}

fn fmt_real(x: f64) -> String {
    format!("{x:.16e}")
}

fn write_side(out: &mut String, species: &[String], coeffs: &[u32]) {
    let terms: Vec<String> = species
        .iter()
        .zip(coeffs)
        .filter(|(_, &c)| c > 0)
        .map(|(s, &c)| if c == 1 { s.clone() } else { format!("{c} {s}") })
        .collect();
    if terms.is_empty() {
        out.push('0');
    } else {
        out.push_str(&terms.join(" + "));
    }
}

/// Writes a network back to the definition format with count-scale rates.
pub fn serialize_network(net: &ReactionNetwork) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "species: {}", net.species().join(", "));
    let _ = writeln!(out, "omega: {}", fmt_real(net.omega()));
    let conv = match net.convention() {
        Convention::Falling => "falling",
        Convention::Binomial => "binomial",
    };
    let _ = writeln!(out, "convention: {conv}");
    for r in net.reactions() {
        let _ = write!(out, "reaction {}: ", r.label);
        write_side(&mut out, net.species(), &r.reactants);
        out.push_str(" -> ");
        write_side(&mut out, net.species(), &r.products);
        let _ = writeln!(out, " @ rate={}", fmt_real(r.rate_constant));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const BISTABLE: &str = "# bistable\nspecies: X\nomega: 100\n\
        reaction r1: 0 -> X @ rate_scaled=22.5\n\
        reaction r2: X -> 0 @ rate_scaled=37.5\n\
        reaction r3: 2 X -> 3 X @ rate_scaled=18\n\
        reaction r4: 3 X -> 2 X @ rate_scaled=2.5  # trailing comment\n";

    #[test]
    fn parses_bistable_listing() {
        let net = parse_network(BISTABLE).unwrap();
        assert_eq!(net.species(), &["X".to_string()]);
        assert_eq!(net.omega(), 100.0);
        let a: Vec<i64> = net.net_effect_matrix().0.iter().copied().collect();
        assert_eq!(a, vec![1, -1, 1, -1]);
        assert_eq!(net.reactions()[2].reactants, vec![2]);
        assert_eq!(net.reactions()[2].products, vec![3]);
    }

    #[test]
    fn nonpositive_rate_is_rejected() {
        let err = parse_network("species: X\nreaction r: 2 X -> 3 X @ -1").unwrap_err();
        assert!(matches!(err, NetError::NonpositiveRate { line: 2, .. }), "{err}");
        let err = parse_network("species: X\nreaction r: X -> 0 @ rate=0").unwrap_err();
        assert!(matches!(err, NetError::NonpositiveRate { .. }));
    }

    #[test]
    fn unknown_species_is_rejected() {
        let err = parse_network("species: X\nreaction r: Y -> X @ 1").unwrap_err();
        assert_eq!(
            err,
            NetError::UnknownSpecies {
                line: 2,
                name: "Y".into()
            }
        );
    }

    #[test]
    fn order_four_is_rejected() {
        let err = parse_network("species: X\nreaction r: 4 X -> 0 @ 1").unwrap_err();
        assert!(matches!(err, NetError::OrderTooHigh { order: 4, .. }));
    }

    #[test]
    fn missing_omega_for_scaled_rate() {
        let err = parse_network("species: X\nreaction r: X -> 0 @ rate_scaled=1").unwrap_err();
        assert_eq!(err, NetError::MissingOmega { line: 2 });
    }

    #[test]
    fn syntax_error_reports_position() {
        let err = parse_network("species: X\nreaction r X -> 0 @ 1").unwrap_err();
        match err {
            NetError::Syntax { line, column, .. } => {
                assert_eq!(line, 2);
                assert_eq!(column, 12);
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn omega_declared_after_reactions() {
        let net = parse_network("species: X\nreaction r: 2 X -> 0 @ rate_scaled=5\nomega: 10\n").unwrap();
        assert!((net.rate_constants()[0] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn omega_override_applies_to_scaled_rates() {
        let net = parse_network_with_omega(BISTABLE, Some(50.0)).unwrap();
        assert_eq!(net.omega(), 50.0);
        assert!((net.rate_constants()[0] - 22.5 * 50.0).abs() < 1e-9);
    }

    #[test]
    fn compact_coefficient_form() {
        let net = parse_network("species: A, B\nreaction r: 2A + B -> 3B @ 1").unwrap();
        assert_eq!(net.reactions()[0].reactants, vec![2, 1]);
        assert_eq!(net.reactions()[0].products, vec![0, 3]);
    }

    #[test]
    fn serialize_round_trip_bistable() {
        let net = parse_network(BISTABLE).unwrap();
        let again = parse_network(&serialize_network(&net)).unwrap();
        assert_eq!(net, again);
    }

    proptest! {
        #[test]
        fn serialize_round_trip(
            n in 1usize..4,
            specs in prop::collection::vec(
                (prop::collection::vec(0u32..2, 3), prop::collection::vec(0u32..3, 3), 1e-6f64..1e6),
                1..6),
            omega in 0.5f64..500.0,
            binomial in any::<bool>(),
        ) {
            let species: Vec<String> = (0..n).map(|i| format!("S{i}")).collect();
            let reactions = specs.iter().enumerate().map(|(j, (re, pr, k))| Reaction {
                label: format!("r{j}"),
                reactants: re[..n].to_vec(),
                products: pr[..n].to_vec(),
                rate_constant: *k,
            }).collect();
            let conv = if binomial { Convention::Binomial } else { Convention::Falling };
            let net = ReactionNetwork::new(species, reactions, omega, conv).unwrap();
            let again = parse_network(&serialize_network(&net)).unwrap();
            prop_assert_eq!(net, again);
        }
    }
}
