use std::io::Write;

use dctsent::embeddings::{
    load_table, lookup_sentence, read_table, EmbeddingTable, OovPolicy, Tokenizer,
};
use dctsent::Error;
use proptest::prelude::*;

fn table_strategy() -> impl Strategy<Value = (usize, Vec<(String, Vec<f32>)>)> {
    (1usize..12).prop_flat_map(|dim| {
        let entry = ("[a-z]{1,8}", prop::collection::vec(-1e3f32..1e3, dim));
        (Just(dim), prop::collection::vec(entry, 1..40))
    })
}

proptest! {
    #[test]
    fn text_round_trip((dim, entries) in table_strategy()) {
        let table = EmbeddingTable::from_entries(dim, entries).unwrap();
        let mut buf = Vec::new();
        table.write_text(&mut buf).unwrap();
        let back = read_table(&buf[..], None).unwrap();
        prop_assert_eq!(back.dim(), table.dim());
        prop_assert_eq!(back.len(), table.len());
        for ((w1, v1), (w2, v2)) in table.iter().zip(back.iter()) {
            prop_assert_eq!(w1, w2);
            for (a, b) in v1.iter().zip(v2) {
                prop_assert!((a - b).abs() <= 1e-6);
            }
        }
    }

    #[test]
    fn row_count_follows_policy(tokens in prop::collection::vec("[a-f]", 0..20)) {
        let table = EmbeddingTable::from_entries(
            2,
            [("a", vec![1.0, 0.0]), ("b", vec![0.0, 1.0]), ("c", vec![1.0, 1.0])],
        ).unwrap();
        let line = tokens.join(" ");
        let toks = Tokenizer::default().tokenize(&line);
        let oov = toks.iter().filter(|t| !table.contains(t.as_str())).count();
        let skip = lookup_sentence(&table, &toks, OovPolicy::Skip);
        let zero = lookup_sentence(&table, &toks, OovPolicy::ZeroVector);
        prop_assert_eq!(skip.n_words(), toks.len() - oov);
        prop_assert_eq!(zero.n_words(), toks.len());
    }
}

#[test]
fn loads_from_disk_with_limit() {
    let mut file = tempfile::NamedTempFile::new().unwrap();
    write!(file, "3 2\nthe 0.1 0.2\ncat -1 2.5\nsat 3 4\n").unwrap();
    let table = load_table(file.path(), None).unwrap();
    assert_eq!((table.len(), table.dim()), (3, 2));
    assert_eq!(table.get("cat"), Some(&[-1.0f32, 2.5][..]));
    assert_eq!(table.source_path(), file.path().display().to_string());
    let table = load_table(file.path(), Some(2)).unwrap();
    assert_eq!(table.len(), 2);
    assert!(!table.contains("sat"));
}

#[test]
fn missing_file_is_io_error() {
    let err = load_table("/nonexistent/vectors.txt", None).unwrap_err();
    assert!(matches!(err, Error::Io { .. }));
    assert_eq!(err.exit_code(), 2);
}

#[test]
fn header_count_caps_entries() {
    let table = read_table("1 2\na 1 2\nb 3 4\n".as_bytes(), None).unwrap();
    assert_eq!(table.len(), 1);
}

#[test]
fn crlf_lines_are_accepted() {
    let table = read_table("2 2\r\na 1 2\r\nb 3 4\r\n".as_bytes(), None).unwrap();
    assert_eq!(table.get("b"), Some(&[3.0f32, 4.0][..]));
}
