//! Train the hashed n-gram classifier, score sentences and persist the model.

use charmer::oracle::{
    cw_loss, is_adversarial, train_builtin, BuiltinClassifier, Label, Oracle, TrainConfig,
};
use charmer::sentence::Sentence;
use charmer::synth::{keyword_corpus, CorpusConfig};

fn main() -> charmer::Result<()> {
    let corpus = keyword_corpus(&CorpusConfig::default());
    let model = train_builtin(&corpus, &TrainConfig::default())?;
    let correct = corpus
        .iter()
        .filter(|(s, y)| model.predict(s) == *y)
        .count();
    println!("training accuracy {}/{}", correct, corpus.len());

    let probes = [
        "the movie was great",
        "the movie was grext",
        "the plot was awful",
    ];
    let sentences: Vec<Sentence> = probes
        .iter()
        .map(|t| Sentence::new(t))
        .collect::<Result<_, _>>()?;
    let positive = Label(1);
    for (s, scores) in sentences.iter().zip(model.score_batch(&sentences)?) {
        println!(
            "{:<22} logits {:?}  cw(y=1) {:+.3}  adversarial {}",
            s.to_string(),
            scores
                .as_slice()
                .iter()
                .map(|v| (v * 1000.0).round() / 1000.0)
                .collect::<Vec<_>>(),
            cw_loss(&scores, positive)?,
            is_adversarial(&scores, positive)
        );
    }

    let path = std::env::temp_dir().join("charmer-example.chng");
    model.save_to_path(&path)?;
    let reloaded = BuiltinClassifier::load_from_path(&path)?;
    assert_eq!(reloaded.logits(&sentences[0]), model.logits(&sentences[0]));
    println!("saved and reloaded {}", path.display());
    Ok(())
}
