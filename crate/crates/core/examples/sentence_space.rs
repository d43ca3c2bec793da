//! Expansion, single edits and Levenshtein balls.

use charmer::sentence::{
    ball_size_bounds, enumerate_ball, expand, generate_neighbors, levenshtein, single_edit,
    Alphabet, Sentence, SPECIAL,
};

fn main() -> charmer::Result<()> {
    let hello = Sentence::new("Hello")?;
    println!("phi(Hello) = {}", expand(&hello));

    // Odd expanded positions are insertion slots, even ones are characters.
    for (i, c) in [(1, 'X'), (4, 'a'), (6, SPECIAL), (8, SPECIAL), (11, '!')] {
        let edited = single_edit(&hello, i, c)?;
        println!(
            "edit i={i:>2} c={c:?} -> {edited:<8} d_lev = {}",
            levenshtein(&hello, &edited)
        );
    }

    let alphabet = Alphabet::new("ab".chars())?;
    let s = Sentence::new("ab")?;
    let neighbors: Vec<String> = generate_neighbors(&s, &alphabet)
        .iter()
        .map(|x| format!("{x:?}"))
        .collect();
    println!("S_1(ab) = {{{}}}", neighbors.join(", "));
    for k in 1..=3 {
        let ball = enumerate_ball(&s, &alphabet, k, 1_000_000)?;
        let (lo, hi) = ball_size_bounds(s.len(), alphabet.len(), k)?;
        println!("|S_{k}(ab)| = {:>4}   bounds [{lo}, {hi}]", ball.len());
    }
    Ok(())
}
