"""End-to-end checks of the maslov-stab executable: exit codes, summaries, schemas, determinism."""

import argparse
import json
import pathlib
import shutil
import subprocess
import sys
import tempfile

import jsonschema

SCHEMA_OF = {
    "hypotheses.json": "hypotheses",
    "conjugate_points.json": "conjugate_points",
    "maslov_rect.json": "maslov_rect",
    "morse.json": "morse",
    "evans.json": "evans",
    "verdict.json": "verdict",
    "error.json": "error",
}

failures = []


def check(cond, what):
    print(("ok   " if cond else "FAIL ") + what)
    if not cond:
        failures.append(what)


def run(exe, args, out):
    p = subprocess.run([exe, *args, "--out-dir", str(out)], capture_output=True, text=True)
    return p.returncode, p.stdout.strip()


def validate_dir(schemas, out):
    for f in sorted(pathlib.Path(out).glob("*.json")):
        schema = json.loads((schemas / (SCHEMA_OF[f.name] + ".schema.json")).read_text())
        try:
            jsonschema.validate(json.loads(f.read_text()), schema)
            check(True, f"schema {f.name}")
        except jsonschema.ValidationError as e:
            check(False, f"schema {f.name}: {e.message} at {list(e.path)}")


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--exe", required=True)
    ap.add_argument("--source", required=True)
    a = ap.parse_args()
    src = pathlib.Path(a.source)
    cfg = src / "configs"
    schemas = src / "schemas"
    tmp = pathlib.Path(tempfile.mkdtemp(prefix="maslov-cli-"))
    try:
        cases = [
            (["check", "--problem", cfg / "scalar_pulse.toml"], 0, "hypotheses: H1 pass, H2 pass, H3 pass"),
            (["check", "--problem", cfg / "negative_constant.toml"], 2, "H2 FAIL"),
            (["pulse", "--problem", cfg / "scalar_pulse.toml"], 0,
             "UNSTABLE: conjugate point at s=0.000000 (mult 1); Mor(H)=1"),
            (["morse", "--problem", cfg / "pt_c1_m2.toml"], 0, "Mor(H)=1 (maslov) = 1 (oracle) = 1 (evans)"),
            (["maslov-rect", "--problem", cfg / "pt_c1_m1.toml", "--L", "20"], 0, "A=(0,0,0,0); identity holds"),
            (["conjugate-points", "--problem", cfg / "pt_c0p5_m2.toml", "--L", "10"], 0, "2 conjugate point(s)"),
            (["evans", "--problem", cfg / "block_double.toml"], 0, "lambda=-1.250000 (mult 2)"),
            (["pulse", "--problem", cfg / "unstable_background.toml"], 2, "essential spectrum"),
            (["morse", "--problem", cfg / "tabulated_pt.json"], 0, "Mor(H)=1 (maslov) = 1 (oracle) = 1 (evans)"),
        ]
        for i, (args, code, text) in enumerate(cases):
            out = tmp / f"case{i}"
            rc, stdout = run(a.exe, [str(x) for x in args], out)
            label = " ".join(str(x).replace(str(cfg) + "/", "") for x in args)
            check(rc == code, f"{label}: exit {rc} (want {code})")
            check(text in stdout, f"{label}: summary contains '{text}' (got '{stdout}')")
            validate_dir(schemas, out)

        rc, _ = run(a.exe, ["morse", "--problem", str(cfg / "negative_constant.toml")], tmp / "h2")
        err = json.loads((tmp / "h2" / "error.json").read_text())
        check(rc == 2 and err["error"] == "hypothesis-violation" and "(H2)" in err["message"],
              f"morse on V = -I: exit {rc}, error '{err['error']}'")
        validate_dir(schemas, tmp / "h2")

        # usage errors
        bad = tmp / "bad.toml"
        bad.write_text('name = "x"\nD = [1.0]\nunknown_key = 3\n[potential]\nkind = "constant"\n'
                       'params = { value = [[1.0]] }\n')
        rc, _ = run(a.exe, ["check", "--problem", str(bad)], tmp / "bad")
        check(rc == 64, f"unknown key: exit {rc} (want 64)")
        check("unknown key" in json.loads((tmp / "bad" / "error.json").read_text())["message"],
              "unknown key named in error.json")
        broken = tmp / "broken.toml"
        broken.write_text("name = = 1\n")
        rc, _ = run(a.exe, ["check", "--problem", str(broken)], tmp / "broken")
        check(rc == 64, f"malformed TOML: exit {rc} (want 64)")
        validate_dir(schemas, tmp / "broken")
        rc, _ = run(a.exe, ["check", "--problem", str(tmp / "missing.toml")], tmp / "missing")
        check(rc == 64, f"missing file: exit {rc} (want 64)")
        rc, _ = run(a.exe, ["frobnicate", "--problem", str(cfg / "pt_c1_m1.toml")], tmp / "sub")
        check(rc == 64, f"unknown subcommand: exit {rc} (want 64)")

        # determinism: same config + seed -> byte-identical reports
        for args in (["maslov-rect", "--problem", str(cfg / "double_pulse.toml"), "--L", "10", "--seed", "7"],
                     ["pulse", "--problem", str(cfg / "scalar_pulse.toml"), "--seed", "7"]):
            run(a.exe, args, tmp / "det1")
            run(a.exe, args, tmp / "det2")
            for f in sorted((tmp / "det1").iterdir()):
                same = f.read_bytes() == (tmp / "det2" / f.name).read_bytes()
                check(same, f"deterministic {args[0]} {f.name}")
            shutil.rmtree(tmp / "det1")
            shutil.rmtree(tmp / "det2")

        # --jobs must not change the result
        run(a.exe, ["evans", "--problem", str(cfg / "pt_c0p5_m2.toml")], tmp / "j1")
        run(a.exe, ["evans", "--problem", str(cfg / "pt_c0p5_m2.toml"), "--jobs", "3"], tmp / "j3")
        check((tmp / "j1" / "evans.json").read_bytes() == (tmp / "j3" / "evans.json").read_bytes(),
              "evans report independent of --jobs")
    finally:
        shutil.rmtree(tmp, ignore_errors=True)
    print(f"{len(failures)} failure(s)")
    return 1 if failures else 0


if __name__ == "__main__":
    sys.exit(main())
