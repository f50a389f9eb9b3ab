use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use neat_duel::cli::{read_archive, write_archive, RunConfig, STATS_HEADER};
use neat_duel::coevolution::{run_coevolution, CoevolutionConfig};
use neat_duel::duel::Replay;
use neat_duel::genome::{encode_genome, minimal_genome, IoSpec};
use neat_duel::rng::seeded;

const SMALL_RUN: &str = "\
# tiny run for tests
seed = 12
generations = 3
population_size = 12
max_steps = 100
parasite_champions = 2
parasite_hall = 2
";

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_neat-duel")).args(args).output().unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn files(dir: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_owned()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push((p.strip_prefix(dir).unwrap().to_owned(), fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}

fn evolve(tmp: &Path, name: &str, workers: &str) -> PathBuf {
    let cfg = tmp.join("run.cfg");
    fs::write(&cfg, SMALL_RUN).unwrap();
    let out = tmp.join(name);
    let o = bin(&["--workers", workers, "evolve", s(&cfg), "--out", s(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    out
}

#[test]
fn evolve_is_byte_identical_across_worker_counts() {
    let tmp = tempfile::tempdir().unwrap();
    let one = evolve(tmp.path(), "one", "1");
    let eight = evolve(tmp.path(), "eight", "8");
    assert_eq!(files(&one), files(&eight));
    assert!(one.join("gen_0002/generation_champion.genome").exists());
}

#[test]
fn archive_round_trips() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = RunConfig::parse(SMALL_RUN, tmp.path()).unwrap().coevolution(0).unwrap();
    let archive = run_coevolution(&cfg).unwrap();
    let dir = tmp.path().join("a");
    write_archive(&dir, &archive).unwrap();
    assert_eq!(read_archive(&dir).unwrap(), archive);
    // writing again into the same place is refused
    assert_eq!(write_archive(&dir, &archive).unwrap_err().exit_code(), 2);
}

#[test]
fn seeded_archive_round_trips() {
    let tmp = tempfile::tempdir().unwrap();
    let seed = tmp.path().join("seed.genome");
    fs::write(&seed, encode_genome(&minimal_genome(IoSpec::DUEL, &mut seeded(1), 1.0))).unwrap();
    let text = format!("{SMALL_RUN}mode = fixed-topology\nseed_genome = seed.genome\n");
    let cfg: CoevolutionConfig = RunConfig::parse(&text, tmp.path()).unwrap().coevolution(0).unwrap();
    let archive = run_coevolution(&cfg).unwrap();
    let dir = tmp.path().join("a");
    write_archive(&dir, &archive).unwrap();
    assert_eq!(read_archive(&dir).unwrap(), archive);
}

#[test]
fn config_errors_are_usage_errors() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("bad.cfg");
    fs::write(&cfg, "generations = 2\n").unwrap();
    let o = bin(&["evolve", s(&cfg), "--out", s(&tmp.path().join("x"))]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("seed"));
    fs::write(&cfg, "seed = 1\npopulaton_size = 3\n").unwrap();
    let o = bin(&["evolve", s(&cfg), "--out", s(&tmp.path().join("x"))]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("populaton_size"));
    assert_eq!(bin(&["no-such-command"]).status.code(), Some(1));
}

#[test]
fn duel_reports_outcome_and_replay() {
    let tmp = tempfile::tempdir().unwrap();
    let g = tmp.path().join("g.genome");
    fs::write(&g, encode_genome(&minimal_genome(IoSpec::DUEL, &mut seeded(3), 2.0))).unwrap();
    let replay = tmp.path().join("r.txt");
    let o = bin(&["duel", s(&g), s(&g), "--replay", s(&replay)]);
    assert_eq!(o.status.code(), Some(4), "self-play is a draw");
    let text = fs::read_to_string(&replay).unwrap();
    let steps: usize = String::from_utf8_lossy(&o.stdout)
        .split("steps: ")
        .nth(1)
        .unwrap()
        .trim()
        .parse()
        .unwrap();
    assert_eq!(text.lines().count(), steps + 1);
    assert_eq!(Replay::parse(&text).unwrap().to_text(), text);
}

#[test]
fn duel_exit_codes_distinguish_winner() {
    let tmp = tempfile::tempdir().unwrap();
    let mut rng = seeded(8);
    // hunt for a decisive pair among random genomes
    for _ in 0..200 {
        let a = minimal_genome(IoSpec::DUEL, &mut rng, 4.0);
        let b = minimal_genome(IoSpec::DUEL, &mut rng, 4.0);
        let out = neat_duel::run_duel(&a, &b, &Default::default(), false).unwrap();
        if out.winner == neat_duel::Winner::Draw {
            continue;
        }
        let (pa, pb) = (tmp.path().join("a.genome"), tmp.path().join("b.genome"));
        fs::write(&pa, encode_genome(&a)).unwrap();
        fs::write(&pb, encode_genome(&b)).unwrap();
        let ab = bin(&["duel", s(&pa), s(&pb)]).status.code().unwrap();
        let ba = bin(&["duel", s(&pb), s(&pa), "--swap"]).status.code().unwrap();
        assert!(ab == 0 || ab == 3);
        assert_eq!(ab + ba, 3, "swapping roles and sides swaps the winner");
        return;
    }
    panic!("no decisive duel found");
}

#[test]
fn bad_genome_names_file_and_line() {
    let tmp = tempfile::tempdir().unwrap();
    let g = tmp.path().join("bad.genome");
    let mut text = encode_genome(&minimal_genome(IoSpec::DUEL, &mut seeded(3), 1.0));
    text = text.replacen("conn 2 ", "conn x ", 1);
    fs::write(&g, text).unwrap();
    let o = bin(&["duel", s(&g), s(&g)]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("bad.genome") && err.contains("line"), "{err}");
}

#[test]
fn tournament_compare_and_report() {
    let tmp = tempfile::tempdir().unwrap();
    let run = evolve(tmp.path(), "run", "0");
    let o = bin(&["tournament", s(&run)]);
    assert!(o.status.success());
    let out = String::from_utf8_lossy(&o.stdout);
    assert!(out.contains("matches archive: true"));
    let archive = read_archive(&run).unwrap();
    let comparisons: usize = out.split("comparisons: ").nth(1).unwrap().lines().next().unwrap().parse().unwrap();
    assert!(comparisons <= archive.records.len() * archive.hierarchy.len());

    let champion = run.join("gen_0002/generation_champion.genome");
    let o = bin(&["compare", s(&champion), s(&run), s(&run)]);
    assert!(o.status.success());
    let out = String::from_utf8_lossy(&o.stdout);
    assert!(out.starts_with("archive,levels,score\n"));
    assert!(out.lines().last().unwrap().starts_with("mean,,"));

    let rep = tmp.path().join("report");
    assert!(bin(&["report", s(&run), s(&rep)]).status.success());
    let csv = fs::read_to_string(rep.join("stats.csv")).unwrap();
    assert_eq!(csv.lines().nth(1), Some(STATS_HEADER));
    assert_eq!(csv, fs::read_to_string(run.join("stats.csv")).unwrap());
    let svg = fs::read_to_string(rep.join("dominance.svg")).unwrap();
    let transitions = archive.records.iter().filter(|r| r.new_dominant).count();
    assert_eq!(svg.matches("class=\"transition\"").count(), transitions);
    assert!(rep.join("complexity.svg").exists());
}

#[test]
fn single_generation_archive_has_only_d1() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("one.cfg");
    fs::write(&cfg, SMALL_RUN.replace("generations = 3", "generations = 1")).unwrap();
    let run = tmp.path().join("one");
    assert!(bin(&["evolve", s(&cfg), "--out", s(&run)]).status.success());
    let out = String::from_utf8_lossy(&bin(&["tournament", s(&run)]).stdout).to_string();
    assert!(out.contains("\n1,0,"));
    assert!(!out.contains("\n2,"));
    assert!(out.contains("comparisons: 0"));
}

#[test]
fn corrupt_archive_is_a_data_error() {
    let tmp = tempfile::tempdir().unwrap();
    let run = evolve(tmp.path(), "run", "1");
    fs::write(run.join("stats.csv"), "nonsense\n").unwrap();
    assert_eq!(bin(&["tournament", s(&run)]).status.code(), Some(2));
}
