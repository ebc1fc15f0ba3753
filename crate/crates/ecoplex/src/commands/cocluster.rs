use ecoplex_core::cocluster::{
    assign, embed, fit_gmm_1d, joint_membership, kmeans_baseline, AssignmentFlag, CoClusterAssignment, EntityKind, Label,
};
use ecoplex_core::interpretation::average_pci_profile;
use serde::Serialize;

use crate::config::RunConfig;
use crate::error::CliResult;
use crate::format::{fmt_num, write_json, write_text};
use crate::io::{read_matrix_artifacts, read_scores};

/// Histogram bins per side of the 0.5 threshold.
pub const HALF_BINS: usize = 10;

fn kind_name(kind: EntityKind) -> &'static str {
    match kind {
        EntityKind::Country => "country",
        EntityKind::Product => "product",
    }
}

fn label_name(label: Label) -> &'static str {
    match label {
        Label::A => "A",
        Label::B => "B",
    }
}

fn assignment_csv(a: &CoClusterAssignment) -> String {
    let mut out = String::from("code,kind,prob_B,label\n");
    for i in 0..a.labels.len() {
        out.push_str(&format!(
            "{},{},{},{}\n",
            a.codes[i],
            kind_name(a.kinds[i]),
            fmt_num(a.prob_b[i]),
            label_name(a.labels[i])
        ));
    }
    out
}

/// Bins `[0, 0.05], (0.05, 0.1], …, (0.45, 0.5]` hold label A and
/// `(0.5, 0.55], …, (0.95, 1]` hold label B.
fn histogram_csv(a: &CoClusterAssignment) -> String {
    let width = 0.5 / HALF_BINS as f64;
    let mut out = String::from("kind,label,bin_lo,bin_hi,count\n");
    for kind in [EntityKind::Country, EntityKind::Product] {
        let mut counts = [0usize; 2 * HALF_BINS];
        for (i, &p) in a.prob_b.iter().enumerate() {
            if a.kinds[i] != kind {
                continue;
            }
            let bin = if p <= 0.5 {
                ((p / width).ceil() as usize).saturating_sub(1).min(HALF_BINS - 1)
            } else {
                (HALF_BINS + ((p - 0.5) / width).ceil() as usize - 1).clamp(HALF_BINS, 2 * HALF_BINS - 1)
            };
            counts[bin] += 1;
        }
        for (b, count) in counts.iter().enumerate() {
            let label = if b < HALF_BINS { "A" } else { "B" };
            out.push_str(&format!(
                "{},{label},{},{},{count}\n",
                kind_name(kind),
                fmt_num(b as f64 * width),
                fmt_num((b + 1) as f64 * width)
            ));
        }
    }
    out
}

#[derive(Serialize)]
struct GmmReport<'a> {
    weights: [f64; 2],
    means: [f64; 2],
    variances: [f64; 2],
    converged: bool,
    iterations: usize,
    log_likelihood: &'a [f64],
    b_component: Option<usize>,
    countries_b: usize,
    products_b: usize,
    flags: &'a [AssignmentFlag],
    kmeans_agreement: f64,
}

pub fn run_cocluster(config: &RunConfig) -> CliResult<()> {
    let input = config.input()?;
    let (m, _) = read_matrix_artifacts(input)?;
    let (scores, _) = read_scores(input, &m)?;
    super::prepare(config, "cocluster")?;
    let out = &config.out;

    let z = embed(&m, &scores)?;
    let model = fit_gmm_1d(&z, &config.gmm_options())?;
    let a = assign(&model, &z);
    for f in &a.flags {
        log::warn!("{f:?}");
    }
    let km = kmeans_baseline(&z)?;
    let agreement = a.labels.iter().zip(&km.labels).filter(|(x, y)| x == y).count() as f64 / a.labels.len() as f64;
    write_text(&out.join("assignment.csv"), &assignment_csv(&a))?;
    write_text(&out.join("kmeans_assignment.csv"), &assignment_csv(&km))?;
    write_json(
        &out.join("gmm.json"),
        &GmmReport {
            weights: model.weights,
            means: model.means,
            variances: model.variances,
            converged: model.converged,
            iterations: model.iterations,
            log_likelihood: &model.log_likelihood,
            b_component: a.b_component,
            countries_b: a.country_labels().iter().filter(|l| **l == Label::B).count(),
            products_b: a.product_labels().iter().filter(|l| **l == Label::B).count(),
            flags: &a.flags,
            kmeans_agreement: agreement,
        },
    )?;
    write_text(&out.join("histogram.csv"), &histogram_csv(&a))?;

    let joint = joint_membership(&a);
    for (name, values) in [("joint_membership.csv", &joint.joint_b), ("same_cluster.csv", &joint.same_cluster)] {
        let mut csv = String::from("country");
        for p in m.products() {
            csv.push(',');
            csv.push_str(p);
        }
        csv.push('\n');
        for (c, code) in m.countries().iter().enumerate() {
            csv.push_str(code);
            for v in &values[c * joint.n_products..(c + 1) * joint.n_products] {
                csv.push(',');
                csv.push_str(&fmt_num(*v));
            }
            csv.push('\n');
        }
        write_text(&out.join(name), &csv)?;
    }

    // Matrix with rows and columns ordered by membership, then by score.
    let order = |probs: &[f64], score: &[f64]| {
        let mut idx: Vec<usize> = (0..probs.len()).collect();
        idx.sort_by(|&i, &j| probs[j].total_cmp(&probs[i]).then(score[j].total_cmp(&score[i])).then(i.cmp(&j)));
        let mut pos = vec![0; probs.len()];
        for (k, i) in idx.into_iter().enumerate() {
            pos[i] = k;
        }
        pos
    };
    let row_pos = order(a.country_prob_b(), &scores.eci_raw);
    let col_pos = order(a.product_prob_b(), &scores.pci_raw);
    let mut sorted = String::from("row,col,country,product\n");
    let mut scatter = String::from("country,product,eci_raw,pci_raw,same_cocluster\n");
    let nc = m.n_countries();
    for (c, p) in m.entries() {
        let (cc, pc) = (&m.countries()[c], &m.products()[p]);
        sorted.push_str(&format!("{},{},{cc},{pc}\n", row_pos[c], col_pos[p]));
        scatter.push_str(&format!(
            "{cc},{pc},{},{},{}\n",
            fmt_num(scores.eci_raw[c]),
            fmt_num(scores.pci_raw[p]),
            a.labels[c] == a.labels[nc + p]
        ));
    }
    write_text(&out.join("sorted_matrix.csv"), &sorted)?;
    write_text(&out.join("scatter.csv"), &scatter)?;

    let profile = average_pci_profile(&m, &scores);
    let mut countries = String::from("code,eci_raw,mean_pci\n");
    for (c, code) in m.countries().iter().enumerate() {
        countries.push_str(&format!(
            "{code},{},{}\n",
            fmt_num(scores.eci_raw[c]),
            fmt_num(profile.country_mean_pci[c])
        ));
    }
    let mut products = String::from("code,pci_raw,mean_eci\n");
    for (p, code) in m.products().iter().enumerate() {
        products.push_str(&format!(
            "{code},{},{}\n",
            fmt_num(scores.pci_raw[p]),
            fmt_num(profile.product_mean_eci[p])
        ));
    }
    write_text(&out.join("overlay_countries.csv"), &countries)?;
    write_text(&out.join("overlay_products.csv"), &products)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn histogram_splits_at_one_half() {
        let a = CoClusterAssignment {
            prob_b: vec![0.0, 0.5, 0.5000001, 1.0, 0.05],
            labels: vec![Label::A, Label::A, Label::B, Label::B, Label::A],
            kinds: vec![EntityKind::Country; 5],
            codes: (0..5).map(|i| format!("c{i}")).collect(),
            n_countries: 5,
            b_component: Some(1),
            flags: vec![],
        };
        let csv = histogram_csv(&a);
        let rows: Vec<&str> = csv.lines().filter(|l| l.starts_with("country") && !l.ends_with(",0")).collect();
        assert_eq!(
            rows,
            vec![
                "country,A,0,0.05,2",
                "country,A,0.45,0.5,1",
                "country,B,0.5,0.55,1",
                "country,B,0.95,1,1"
            ]
        );
    }
}
