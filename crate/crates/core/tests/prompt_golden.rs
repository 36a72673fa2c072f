use std::collections::BTreeMap;

use neosift_core::llm::{
    parse_response, render_prompt, Label, MockProvider, PromptToken, Provider, Template,
};

fn batch() -> Vec<PromptToken> {
    serde_json::from_str(include_str!("golden/batch.json")).unwrap()
}

#[test]
fn multi_batch_matches_golden() {
    assert_eq!(
        render_prompt(&batch(), Template::Multi),
        include_str!("golden/multi_batch.txt")
    );
}

#[test]
fn single_bare_token_matches_golden() {
    let one = [batch().remove(3)];
    assert!(one[0].contexts.is_empty());
    assert_eq!(
        render_prompt(&one, Template::Multi),
        include_str!("golden/multi_one_bare.txt")
    );
}

#[test]
fn retry_prompt_matches_golden() {
    let one = [batch().remove(2)];
    assert_eq!(
        render_prompt(&one, Template::Single),
        include_str!("golden/single_retry.txt")
    );
}

#[test]
fn mock_answers_parse_back_to_its_table() {
    let tokens = batch();
    let table: BTreeMap<String, Label> = [
        ("doomscroll", Label::Neologism),
        ("vtuber", Label::Neologism),
        ("covidiot", Label::Neologism),
        ("además", Label::Foreign),
        ("tradwife", Label::Neologism),
        ("longcovid", Label::Entity),
    ]
    .into_iter()
    .map(|(s, l)| (s.to_string(), l))
    .collect();
    let mock = MockProvider::new(table.clone(), Label::None);
    let surfaces: Vec<&str> = tokens.iter().map(|t| t.surface.as_str()).collect();

    let reply = mock.complete(&render_prompt(&tokens, Template::Multi)).unwrap();
    let parsed = parse_response(&reply, &surfaces);
    for s in &surfaces {
        let want = table.get(*s).copied().unwrap_or(Label::None);
        assert_eq!(parsed[*s], Some(want), "{s}");
    }

    let one = [tokens[2].clone()];
    let reply = mock.complete(&render_prompt(&one, Template::Single)).unwrap();
    assert_eq!(
        parse_response(&reply, &["covidiot"])["covidiot"],
        Some(Label::Neologism)
    );
}
