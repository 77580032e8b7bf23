"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Tolerances and sizes are pinned below and must not be loosened to make a
criterion pass. Monte Carlo criteria use fixed seeds chosen before any run.
"""


from rabilab.cli import main
from rabilab.validation import (
    check_conjecture_c1,
    check_conjecture_c2,
    check_exact_anchors,
    check_fk_consistency,
    check_jc_crossings,
    check_oracle_equivalence,
    check_ou_covariance,
    check_poisson_law,
    check_positivity,
    check_segment_vs_euler,
)

ORACLE_ATOL = 1e-10  # times omega, omega = 1
ORACLE_N_MAX = 80
ORACLE_K = 8
C1_GAP_FLOOR = 1e-6
MC_DRAWS = 10**6
EULER_STEP = 1e-4
FK_SAMPLES = 10**6
FK_SEED = 0
POSITIVITY_SAMPLES = 10**6
POSITIVITY_SEED = 0


def report(capsys, number, title, results):
    ok = all(r.passed for r in results)
    with capsys.disabled():
        print(f"\n[criterion {number}] {'PASS' if ok else 'FAIL'} {title}")
        for r in results:
            print("    " + r.line())
    assert ok, f"criterion {number} failed: " + "; ".join(r.line() for r in results if not r.passed)


def test_1_oracle_equivalence(capsys):
    report(capsys, 1, "parity blocks vs dense diagonalization", [check_oracle_equivalence(ORACLE_N_MAX, ORACLE_K, ORACLE_ATOL)])


def test_2_exact_anchors(capsys):
    report(capsys, 2, "exact anchors", check_exact_anchors())


def test_3_jc_crossings(capsys):
    report(capsys, 3, "JC crossings and envelope", check_jc_crossings())


def test_4_conjecture_c1(capsys):
    report(capsys, 4, "ground gap above floor and constant ground parity", check_conjecture_c1(C1_GAP_FLOOR))


def test_5_conjecture_c2(capsys):
    report(capsys, 5, "crossing counts between excited levels", check_conjecture_c2())


def test_6_sampler_laws(capsys):
    results = check_poisson_law(MC_DRAWS) + check_ou_covariance(MC_DRAWS)
    results += check_segment_vs_euler(MC_DRAWS, step=EULER_STEP)
    report(capsys, 6, "Poisson, OU and segment-vs-Euler laws", results)


def test_7_fk_consistency(capsys):
    report(capsys, 7, "Feynman-Kac energy vs diagonalization", check_fk_consistency(FK_SAMPLES, FK_SEED))


def test_8_positivity(capsys):
    report(capsys, 8, "positivity probe", [check_positivity(POSITIVITY_SAMPLES, POSITIVITY_SEED)])


DETERMINISM_RUNS = [
    ["jc-spectrum", "--delta", "0.5"],
    ["jc-crossings", "--delta", "0.5"],
    ["rabi-sweep", "--delta", "0.5", "--g-max", "2", "--zero-point", "--workers", "4"],
    ["check-c1", "--delta", "0.5", "--g-step", "0.1"],
    ["count-crossings", "--delta", "0.5", "--levels", "4,5"],
    ["fk-energy", "--delta", "0.5", "--g", "0.5", "--n-samples", "200000", "--seed", "7", "--workers", "3"],
    ["fk-positivity", "--delta", "0.5", "--g", "0.5", "--t", "2", "--n-samples", "200000", "--seed", "7"],
    ["validate", "--quick"],
]


def test_9_determinism(capsys, tmp_path):
    from rabilab.validation import CheckResult

    results = []
    for argv in DETERMINISM_RUNS:
        blobs = []
        for fmt in ("csv", "json"):
            for rep in range(2):
                path = tmp_path / f"{argv[0]}-{fmt}-{rep}"
                main(argv + ["--format", fmt, "-o", str(path)])
                blobs.append(path.read_bytes())
        same = blobs[0] == blobs[1] and blobs[2] == blobs[3] and all(blobs)
        results.append(CheckResult(" ".join(argv), same, f"{len(blobs[0])} csv bytes, {len(blobs[2])} json bytes"))
    capsys.readouterr()  # drop the validate command's own progress lines
    report(capsys, 9, "byte-identical repeated runs", results)
