//! Parsers for the loosely structured text that comes back from prompts:
//! numbered lists, bare scores, and verdict words.

/// Splits a response into list items, stripping common line markers
/// (`1.`, `2)`, `(iii)`, `-`, `*`, `•`). Empty lines vanish. A `cap` of 0
/// means unlimited.
pub(crate) fn numbered_list(text: &str, cap: usize) -> Vec<String> {
    let mut items = Vec::new();
    for line in text.lines() {
        let item = strip_marker(line.trim());
        if !item.is_empty() {
            items.push(item.to_string());
        }
        if cap > 0 && items.len() == cap {
            break;
        }
    }
    items
}

fn strip_marker(line: &str) -> &str {
    let mut rest = line;
    rest = rest.trim_start_matches(['-', '*', '•', '–']).trim_start();
    if let Some(after) = rest.strip_prefix('(') {
        if let Some(close) = after.find(')') {
            let label = &after[..close];
            if !label.is_empty()
                && label
                    .chars()
                    .all(|c| c.is_ascii_digit() || "ivxlcdm".contains(c.to_ascii_lowercase()))
            {
                return after[close + 1..].trim_start();
            }
        }
    }
    let digits = rest.chars().take_while(|c| c.is_ascii_digit()).count();
    if digits > 0 {
        let after = &rest[digits..];
        if let Some(stripped) = after.strip_prefix('.').or_else(|| after.strip_prefix(')')) {
            return stripped.trim_start();
        }
    }
    rest
}

/// First parseable decimal number in the text, if any.
pub(crate) fn first_number(text: &str) -> Option<f64> {
    for word in text.split_whitespace() {
        let trimmed = word.trim_matches(|c: char| !(c.is_ascii_digit() || c == '.' || c == '-'));
        let trimmed = trimmed.trim_end_matches('.');
        if trimmed.is_empty() {
            continue;
        }
        if let Ok(value) = trimmed.parse::<f64>() {
            if value.is_finite() {
                return Some(value);
            }
        }
    }
    None
}

fn first_verdict(text: &str, positive: &[&str], negative: &[&str]) -> Option<bool> {
    for word in text.split(|c: char| !c.is_ascii_alphabetic()) {
        if word.is_empty() {
            continue;
        }
        let upper = word.to_ascii_uppercase();
        if positive.contains(&upper.as_str()) {
            return Some(true);
        }
        if negative.contains(&upper.as_str()) {
            return Some(false);
        }
    }
    None
}

/// YES/NO verdict (also TRUE/FALSE), scanning for the first verdict word.
pub(crate) fn yes_no(text: &str) -> Option<bool> {
    first_verdict(text, &["YES", "TRUE"], &["NO", "FALSE"])
}

/// PASS/FAIL verdict, with YES/NO and TRUE/FALSE as synonyms.
pub(crate) fn pass_fail(text: &str) -> Option<bool> {
    first_verdict(text, &["PASS", "YES", "TRUE"], &["FAIL", "NO", "FALSE"])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lists_survive_varied_markers() {
        let text = "1. first idea\n2) second idea\n(iii) third idea\n- fourth idea\n• fifth idea\n\n";
        assert_eq!(
            numbered_list(text, 0),
            vec![
                "first idea",
                "second idea",
                "third idea",
                "fourth idea",
                "fifth idea"
            ]
        );
    }

    #[test]
    fn cap_truncates_and_zero_means_unlimited() {
        let text = "1. a\n2. b\n3. c";
        assert_eq!(numbered_list(text, 2), vec!["a", "b"]);
        assert_eq!(numbered_list(text, 0).len(), 3);
    }

    #[test]
    fn unnumbered_lines_pass_through() {
        assert_eq!(numbered_list("a plain line", 0), vec!["a plain line"]);
        // A year is not a list marker unless followed by `.` or `)`.
        assert_eq!(numbered_list("2024 was busy", 0), vec!["2024 was busy"]);
    }

    #[test]
    fn numbers_are_found_in_noise() {
        assert_eq!(first_number("0.65"), Some(0.65));
        assert_eq!(first_number("Score: 0.8."), Some(0.8));
        assert_eq!(first_number("I'd say 1 out of 1"), Some(1.0));
        assert_eq!(first_number("minus -0.25 overall"), Some(-0.25));
        assert_eq!(first_number("no digits here"), None);
    }

    #[test]
    fn verdicts_are_recognised() {
        assert_eq!(yes_no("YES"), Some(true));
        assert_eq!(yes_no("no."), Some(false));
        assert_eq!(yes_no("Verdict: True"), Some(true));
        assert_eq!(yes_no("maybe"), None);
        assert_eq!(pass_fail("PASS"), Some(true));
        assert_eq!(pass_fail("This one must FAIL"), Some(false));
        assert_eq!(pass_fail("yes, it satisfies it"), Some(true));
        assert_eq!(pass_fail("hmm"), None);
    }
}
