//! Print the positional channels of each encoding tier.

use hydroseries::encodings::{build_encoding_set, EncodingConfig};

fn main() -> hydroseries::Result<()> {
    let n_days = 730;
    for tier in 1..=4 {
        let set = build_encoding_set(EncodingConfig::new(tier, false)?, n_days, 5)?;
        println!("tier {tier}: time {:?}, space {:?}", set.time_channel_names, set.space_channel_names);
    }
    let set = build_encoding_set(EncodingConfig::new(4, false)?, n_days, 5)?;
    println!("day    {}", set.time_channel_names.join(" "));
    for day in [0, 91, 182, 365, 729] {
        let row: Vec<String> = set.per_day.row(day).iter().map(|v| format!("{v:+.3}")).collect();
        println!("{day:<6} {}", row.join(" "));
    }
    Ok(())
}
