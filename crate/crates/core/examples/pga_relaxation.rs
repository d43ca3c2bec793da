//! Simplex projection and the relaxed attack over a capped edit ball.

use charmer::oracle::{train_builtin, Label, TrainConfig};
use charmer::pga::{capped_ball, pga_solve, project_simplex, PgaConfig};
use charmer::sentence::{Alphabet, Sentence};
use charmer::synth::{keyword_corpus, CorpusConfig};

fn main() -> charmer::Result<()> {
    for u in [
        vec![0.5, 0.5],
        vec![2.0, 0.0],
        vec![0.8, 0.6],
        vec![-1.0, 3.0, 0.2],
    ] {
        println!("project({u:?}) = {:?}", project_simplex(&u)?);
    }

    let model = train_builtin(
        &keyword_corpus(&CorpusConfig::default()),
        &TrainConfig::default(),
    )?;
    let s = Sentence::new("the film was bad")?;
    let alphabet = Alphabet::new("abcdefghijklmnopqrstuvwxyz ".chars())?;
    println!(
        "|S_2| capped at 4096: {}",
        capped_ball(&s, &alphabet, 2, 4096, 0).len()
    );

    let mut config = PgaConfig::new(alphabet);
    config.k = 2;
    let run = pga_solve(&model, &s, Label(0), &config)?;
    let support = run.state.u.iter().filter(|&&v| v > 0.0).count();
    println!(
        "{} candidates, final support {support}, mixture loss {:+.3}, best single {:+.3}",
        run.state.candidates.len(),
        run.mixture_loss,
        run.best_single_loss
    );
    println!(
        "chosen {:?} (loss {:+.3}, success {})",
        run.outcome.adversarial.to_string(),
        run.outcome.final_loss,
        run.outcome.success
    );
    Ok(())
}
