use assocnet::norms::RESPONSES_PER_ROW;

/// Splits model output into at most three responses. Accepts comma,
/// semicolon or newline separated words and numbered or bulleted lists.
pub fn parse_responses(text: &str) -> Vec<String> {
    text.split([',', ';', '\n'])
        .map(clean)
        .filter(|s| !s.is_empty())
        .take(RESPONSES_PER_ROW)
        .collect()
}

fn clean(item: &str) -> String {
    let mut s = item.trim();
    // "1." / "2)" / "- " / "* " list markers
    let digits = s.len() - s.trim_start_matches(|c: char| c.is_ascii_digit()).len();
    if digits > 0 && s[digits..].starts_with(['.', ')', ':']) {
        s = &s[digits + 1..];
    }
    s = s.trim_start_matches(['-', '*', '•']).trim();
    s = s.trim_matches(|c: char| matches!(c, '"' | '\'' | '`' | '“' | '”'));
    s.trim_end_matches(['.', '!']).trim().to_string()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn comma_list() {
        assert_eq!(parse_responses("banana, fruit, orange"), ["banana", "fruit", "orange"]);
    }

    #[test]
    fn keeps_first_three() {
        assert_eq!(parse_responses("a, b, c, d, e"), ["a", "b", "c"]);
    }

    #[test]
    fn numbered_and_bulleted() {
        assert_eq!(parse_responses("1. Red\n2) Round\n3: Tree"), ["Red", "Round", "Tree"]);
        assert_eq!(parse_responses("- pie\n* \"core\"\n• seed."), ["pie", "core", "seed"]);
    }

    #[test]
    fn blanks_and_multiword() {
        assert!(parse_responses("  \n , ").is_empty());
        assert_eq!(parse_responses("ice cream,\n\nnew york"), ["ice cream", "new york"]);
        assert_eq!(parse_responses("3d, 7up"), ["3d", "7up"]);
    }
}
