//! CSV tables, gnuplot data files and `key: value` summaries.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use hjbpi_core::analysis::{RateStudy, TauStudy};
use hjbpi_core::legendre::GeneralizedRun;
use hjbpi_core::pi::PIRun;
use hjbpi_core::{Field, SpaceTimeSolution};

pub type IoResult<T> = std::io::Result<T>;

fn csv_writer(path: &Path) -> IoResult<csv::Writer<File>> {
    csv::Writer::from_path(path).map_err(std::io::Error::other)
}

fn finish(mut w: csv::Writer<File>) -> IoResult<()> {
    w.flush()
}

fn num(v: f64) -> String {
    format!("{v:e}")
}

/// Columns `t, linear_index, x_0.., value, control_index`; the control
/// column is empty where no policy was recorded.
pub fn write_solution(path: &Path, solution: &SpaceTimeSolution) -> IoResult<()> {
    let grid = solution.grid();
    let mut w = csv_writer(path)?;
    let mut header = vec!["t".to_owned(), "linear_index".to_owned()];
    header.extend((0..grid.dim()).map(|i| format!("x_{i}")));
    header.extend(["value".to_owned(), "control_index".to_owned()]);
    w.write_record(&header)?;
    let steps = solution.params.steps;
    for (k, slice) in solution.slices.iter().enumerate() {
        // policy k−1 drives the step out of level k
        let policy = solution
            .policy_slices
            .as_ref()
            .and_then(|p| (k >= 1 && k <= steps).then(|| &p[k - 1]));
        for (i, v) in slice.values().iter().enumerate() {
            let mut row = vec![num(slice.time()), i.to_string()];
            row.extend(grid.coords(i).iter().map(|x| num(*x)));
            row.push(num(*v));
            row.push(
                policy
                    .map(|p| p.choices()[i].to_string())
                    .unwrap_or_default(),
            );
            w.write_record(&row)?;
        }
    }
    finish(w)
}

pub fn write_fields(path: &Path, fields: &[Field]) -> IoResult<()> {
    let Some(first) = fields.first() else {
        return Ok(());
    };
    let grid = first.grid();
    let mut w = csv_writer(path)?;
    let mut header = vec!["t".to_owned(), "linear_index".to_owned()];
    header.extend((0..grid.dim()).map(|i| format!("x_{i}")));
    header.push("value".to_owned());
    w.write_record(&header)?;
    for f in fields {
        for (i, v) in f.values().iter().enumerate() {
            let mut row = vec![num(f.time()), i.to_string()];
            row.extend(grid.coords(i).iter().map(|x| num(*x)));
            row.push(num(*v));
            w.write_record(&row)?;
        }
    }
    finish(w)
}

/// Columns `iteration, sup_error, l2_error, policy_l2, monotonicity_worst`.
pub fn write_pi_run(path: &Path, run: &PIRun) -> IoResult<()> {
    let mut w = csv_writer(path)?;
    w.write_record([
        "iteration",
        "sup_error",
        "l2_error",
        "policy_l2",
        "monotonicity_worst",
    ])?;
    for n in 0..run.errors_to_fixed_point.len() {
        w.write_record([
            n.to_string(),
            num(run.errors_to_fixed_point[n]),
            num(run.errors_l2[n]),
            num(run.policy_l2_distance[n]),
            num(run.monotonicity_worst[n]),
        ])?;
    }
    finish(w)
}

/// The columns of [`write_pi_run`] plus `legendre_resolution`,
/// `successive_change` and `max_gradient`.
pub fn write_generalized_run(path: &Path, run: &GeneralizedRun) -> IoResult<()> {
    let mut w = csv_writer(path)?;
    w.write_record([
        "iteration",
        "sup_error",
        "l2_error",
        "policy_l2",
        "monotonicity_worst",
        "legendre_resolution",
        "successive_change",
        "max_gradient",
    ])?;
    for n in 0..run.errors_to_fixed_point.len() {
        w.write_record([
            n.to_string(),
            num(run.errors_to_fixed_point[n]),
            num(run.errors_l2[n]),
            num(run.policy_l2_distance[n]),
            num(run.monotonicity_worst[n]),
            num(run.legendre_resolution),
            num(run.successive_change[n]),
            num(run.max_gradient[n]),
        ])?;
    }
    finish(w)
}

/// `study.csv` with columns `h, tau, sup_error, l2_error`, plus
/// `study_sup.dat` and `study_l2.dat` for gnuplot.
pub fn write_rate_study(dir: &Path, study: &RateStudy) -> IoResult<()> {
    let rows: Vec<[f64; 4]> = (0..study.h_values.len())
        .map(|i| {
            [
                study.h_values[i],
                study.tau_values[i],
                study.errors[i],
                study.l2_errors[i],
            ]
        })
        .collect();
    write_study_rows(dir, &rows, 0)
}

/// Row `i` holds the distance between the runs at `τ_i` and `τ_{i+1}`.
pub fn write_tau_study(dir: &Path, study: &TauStudy) -> IoResult<()> {
    let rows: Vec<[f64; 4]> = (0..study.distances.len())
        .map(|i| {
            [
                study.h,
                study.tau_values[i],
                study.distances[i],
                study.l2_distances[i],
            ]
        })
        .collect();
    write_study_rows(dir, &rows, 1)
}

fn write_study_rows(dir: &Path, rows: &[[f64; 4]], abscissa: usize) -> IoResult<()> {
    let mut w = csv_writer(&dir.join("study.csv"))?;
    w.write_record(["h", "tau", "sup_error", "l2_error"])?;
    for r in rows {
        w.write_record(r.iter().map(|v| num(*v)))?;
    }
    finish(w)?;
    for (name, column) in [("study_sup.dat", 2), ("study_l2.dat", 3)] {
        let mut f = BufWriter::new(File::create(dir.join(name))?);
        writeln!(
            f,
            "# {} {}",
            ["h", "tau"][abscissa],
            ["", "", "sup_error", "l2_error"][column]
        )?;
        for r in rows {
            writeln!(f, "{} {}", num(r[abscissa]), num(r[column]))?;
        }
        f.flush()?;
    }
    Ok(())
}

/// Writes a CSV from a header and string rows.
pub fn write_table(path: &Path, header: &[&str], rows: &[Vec<String>]) -> IoResult<()> {
    let mut w = csv_writer(path)?;
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    finish(w)
}

/// Ordered `key: value` lines.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Summary {
    entries: Vec<(String, String)>,
}

impl Summary {
    pub fn push(&mut self, key: &str, value: impl ToString) {
        self.entries.push((key.to_owned(), value.to_string()));
    }

    pub fn push_num(&mut self, key: &str, value: f64) {
        self.push(key, num(value));
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    pub fn entries(&self) -> &[(String, String)] {
        &self.entries
    }

    pub fn render(&self) -> String {
        self.entries
            .iter()
            .map(|(k, v)| format!("{k}: {v}\n"))
            .collect()
    }

    pub fn write(&self, dir: &Path) -> IoResult<PathBuf> {
        let path = dir.join("summary.txt");
        std::fs::write(&path, self.render())?;
        Ok(path)
    }
}

/// Parses `key: value` lines back into pairs.
pub fn parse_summary(text: &str) -> Vec<(String, String)> {
    text.lines()
        .filter_map(|l| l.split_once(": "))
        .map(|(k, v)| (k.to_owned(), v.to_owned()))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn summary_round_trips() {
        let mut s = Summary::default();
        s.push("mode", "pi");
        s.push_num("rho", 0.5);
        let parsed = parse_summary(&s.render());
        assert_eq!(parsed, s.entries());
        assert_eq!(s.get("rho"), Some("5e-1"));
    }
}
