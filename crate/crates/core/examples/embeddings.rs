//! Load word vectors, mean-pool a document and list its nearest words.

use std::fs;

use bbbg::embeddings::{cosine_similarity, embed_document, load_embeddings, nearest_words, tokenize};

fn main() -> bbbg::Result<()> {
    let dir = tempfile::tempdir().expect("tempdir");
    let path = dir.path().join("vectors.txt");
    fs::write(
        &path,
        "tax 1.0 0.1 0.0\nbudget 0.9 0.2 0.1\nspending 0.8 0.0 0.2\n\
         gun 0.0 1.0 0.1\nrifle 0.1 0.9 0.0\nschool 0.1 0.1 1.0\nteacher 0.0 0.2 0.9\n",
    )
    .expect("write vectors");
    let (vocab, table) = load_embeddings(&path, 3)?;
    println!("{} words of width {}", vocab.len(), table.dim());

    let text = "Cutting the TAX burden and the budget, not school spending!";
    let tokens = tokenize(text);
    let doc = embed_document(&tokens, &vocab, &table)?;
    println!("{} of {} tokens in vocabulary", doc.in_vocab, tokens.len());
    for (w, s) in nearest_words(doc.vector.as_slice(), &vocab, &table, 3)? {
        println!("  {w:<10} {s:.3}");
    }
    let gun = table.vector(vocab.get("gun").unwrap());
    let rifle = table.vector(vocab.get("rifle").unwrap());
    println!("cos(gun, rifle) = {:.3}", cosine_similarity(gun.as_slice(), rifle.as_slice())?);
    Ok(())
}
