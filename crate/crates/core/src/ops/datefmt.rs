//! Date patterns over the tokens `yyyy`, `mm`, `dd` with literal
//! separators, and the ordered `auto` detection list.

use chrono::NaiveDate;

/// Formats tried, in order, when the input format is `auto`.
pub const AUTO_FORMATS: [&str; 5] =
    ["yyyy.mm.dd", "yyyy/mm/dd", "yyyy-mm-dd", "dd/mm/yyyy", "mm-dd-yyyy"];

#[derive(Debug, Clone, PartialEq, Eq)]
enum Segment {
    Year,
    Month,
    Day,
    Literal(String),
}

/// A compiled pattern containing each of `yyyy`, `mm`, `dd` exactly once.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatePattern {
    segments: Vec<Segment>,
}

impl DatePattern {
    pub fn compile(pattern: &str) -> Result<DatePattern, String> {
        let mut segments = Vec::new();
        let bytes = pattern.as_bytes();
        let mut i = 0;
        let mut literal = String::new();
        while i < bytes.len() {
            if pattern[i..].starts_with("yyyy") {
                if !literal.is_empty() {
                    segments.push(Segment::Literal(std::mem::take(&mut literal)));
                }
                segments.push(Segment::Year);
                i += 4;
            } else if pattern[i..].starts_with("mm") {
                if !literal.is_empty() {
                    segments.push(Segment::Literal(std::mem::take(&mut literal)));
                }
                segments.push(Segment::Month);
                i += 2;
            } else if pattern[i..].starts_with("dd") {
                if !literal.is_empty() {
                    segments.push(Segment::Literal(std::mem::take(&mut literal)));
                }
                segments.push(Segment::Day);
                i += 2;
            } else {
                let c = pattern[i..].chars().next().expect("in bounds");
                literal.push(c);
                i += c.len_utf8();
            }
        }
        if !literal.is_empty() {
            segments.push(Segment::Literal(literal));
        }
        for (segment, label) in [(Segment::Year, "yyyy"), (Segment::Month, "mm"), (Segment::Day, "dd")] {
            let n = segments.iter().filter(|s| **s == segment).count();
            if n != 1 {
                return Err(format!("pattern {pattern:?} must contain {label} exactly once, found {n}"));
            }
        }
        Ok(DatePattern { segments })
    }

    /// Parses strictly: 4-digit year, 2-digit month/day, exact literals,
    /// and a valid calendar date.
    pub fn parse(&self, text: &str) -> Option<NaiveDate> {
        let mut rest = text;
        let mut year = 0i32;
        let mut month = 0u32;
        let mut day = 0u32;
        for segment in &self.segments {
            match segment {
                Segment::Year => {
                    let digits = rest.get(..4)?;
                    if !digits.bytes().all(|b| b.is_ascii_digit()) {
                        return None;
                    }
                    year = digits.parse().ok()?;
                    rest = &rest[4..];
                }
                Segment::Month | Segment::Day => {
                    let digits = rest.get(..2)?;
                    if !digits.bytes().all(|b| b.is_ascii_digit()) {
                        return None;
                    }
                    let v: u32 = digits.parse().ok()?;
                    if *segment == Segment::Month {
                        month = v;
                    } else {
                        day = v;
                    }
                    rest = &rest[2..];
                }
                Segment::Literal(lit) => {
                    rest = rest.strip_prefix(lit.as_str())?;
                }
            }
        }
        if !rest.is_empty() {
            return None;
        }
        NaiveDate::from_ymd_opt(year, month, day)
    }

    pub fn render(&self, date: NaiveDate) -> String {
        use chrono::Datelike;
        let mut out = String::new();
        for segment in &self.segments {
            match segment {
                Segment::Year => out.push_str(&format!("{:04}", date.year())),
                Segment::Month => out.push_str(&format!("{:02}", date.month())),
                Segment::Day => out.push_str(&format!("{:02}", date.day())),
                Segment::Literal(lit) => out.push_str(lit),
            }
        }
        out
    }
}

/// Parses `text` with the first matching auto format, returning the
/// matched pattern string as well.
pub fn parse_auto(text: &str) -> Option<(&'static str, NaiveDate)> {
    for fmt in AUTO_FORMATS {
        let pattern = DatePattern::compile(fmt).expect("auto formats are valid");
        if let Some(d) = pattern.parse(text) {
            return Some((fmt, d));
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dotted_to_dashed() {
        let p = DatePattern::compile("yyyy.mm.dd").unwrap();
        let d = p.parse("2024.01.01").unwrap();
        let out = DatePattern::compile("yyyy-mm-dd").unwrap().render(d);
        assert_eq!(out, "2024-01-01");
    }

    #[test]
    fn calendar_validity_enforced() {
        let p = DatePattern::compile("yyyy.mm.dd").unwrap();
        assert!(p.parse("2024.13.01").is_none());
        assert!(p.parse("2024.02.30").is_none());
        assert!(p.parse("2024.1.1").is_none(), "month/day must be two digits");
    }

    #[test]
    fn pattern_must_cover_all_tokens_once() {
        assert!(DatePattern::compile("yyyy-mm").is_err());
        assert!(DatePattern::compile("yyyy-mm-dd-dd").is_err());
    }

    #[test]
    fn auto_order_is_respected() {
        assert_eq!(parse_auto("2024.03.05").unwrap().0, "yyyy.mm.dd");
        assert_eq!(parse_auto("2024/03/05").unwrap().0, "yyyy/mm/dd");
        assert_eq!(parse_auto("2024-03-05").unwrap().0, "yyyy-mm-dd");
        assert_eq!(parse_auto("05/03/2024").unwrap().0, "dd/mm/yyyy");
        assert_eq!(parse_auto("03-05-2024").unwrap().0, "mm-dd-yyyy");
        assert!(parse_auto("5 March 2024").is_none());
    }
}
