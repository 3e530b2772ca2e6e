//! Replicated AIF, IF1 and IF2 searches from random starts, scored by a
//! common bank of evaluation filters.

use aif::harness::{quantile, RunConfig};

const CONFIG: &str = r#"
seed = 4

[model]
id = "linear_gaussian"

[simulate]
n = 100
seed = 42

[estimation]
particles = 1000
iterations = 25
sigma = { alpha_2 = 0.02, alpha_3 = 0.02 }
final_sigma_ratio = 0.55

[replication]
count = 8
start = { alpha_2 = [-1.0, 1.0], alpha_3 = [-1.0, 1.0] }
"#;

fn main() -> aif::Result<()> {
    let cfg = RunConfig::parse(CONFIG, std::path::Path::new("."))?;
    let built = cfg.build_model()?;
    let data = cfg.load_data(&built)?;
    let mif = cfg.mif_config(&built)?;
    let start_box = cfg.start_box(&built)?;
    let eval = cfg.evaluation();
    for method in [aif::estimators::Method::Aif, aif::estimators::Method::If1, aif::estimators::Method::If2] {
        let res = aif::estimators::replicate_search(
            method,
            built.as_model(),
            &data,
            &start_box,
            cfg.replication.count,
            &mif,
            cfg.seed,
            &eval,
        )?;
        let mut ll = res.logliks();
        ll.sort_by(f64::total_cmp);
        let secs: f64 = res.rows.iter().map(|r| r.wall_seconds).sum();
        println!(
            "{method}: median {:.2}  IQR [{:.2}, {:.2}]  best {:.2}  failures {}  {secs:.1}s",
            quantile(&ll, 0.5),
            quantile(&ll, 0.25),
            quantile(&ll, 0.75),
            ll.last().copied().unwrap_or(f64::NAN),
            res.failures()
        );
    }
    Ok(())
}
