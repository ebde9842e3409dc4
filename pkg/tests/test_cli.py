import io
import json

import pytest

from awhile.cli import main

LISTING1 = "if i < a1_size then j <- a1[i]; x <- a2[j] end\n"
LISTING1_LABELS = (
    "i: public\na1_size: public\nj: public\nx: public\na1: public\na2: public\n"
)


@pytest.fixture
def files(tmp_path):
    def write(name, content):
        p = tmp_path / name
        p.write_text(content)
        return str(p)

    return write


def test_parse_ok(files, capsys):
    assert main(["parse", files("p.aw", "skip")]) == 0
    assert "Skip" in capsys.readouterr().out


def test_parse_empty_is_usage_error(files, capsys):
    assert main(["parse", files("p.aw", "")]) == 2
    assert "error" in capsys.readouterr().err


def test_parse_syntax_error_exit_2(files, capsys):
    assert main(["parse", files("p.aw", "if x then")]) == 2


def test_print_round_trip(files, capsys):
    path = files("p.aw", LISTING1)
    assert main(["print", path]) == 0
    out = capsys.readouterr().out
    assert " ".join(out.split()) == " ".join(LISTING1.split())


def test_typecheck_cct(files, capsys):
    p = files("p.aw", LISTING1)
    labels = files("labels", LISTING1_LABELS)
    assert main(["typecheck", "--system", "cct", "--labels", labels, p]) == 0
    assert main(["typecheck", "--system", "cct", p]) == 1  # all-secret labels


def test_harden_matches_listing2(files, capsys):
    p = files("p.aw", LISTING1)
    assert main(["harden", "--variant", "islh", p]) == 0
    out = capsys.readouterr().out
    assert "(b = 1 ? 0 : i)" in out
    assert "b := (i < a1_size ? b : 1)" in out


def test_run_seq_json(files, capsys):
    p = files("p.aw", LISTING1)
    st = files("s", "i = 1\na1_size = 4\na1 = [0,7,1,2]\na2 = [0,0,0,0,0,0,0,0]")
    assert main(["run", "--sem", "seq", "--state", st, "--format", "json", p]) == 0
    data = json.loads(capsys.readouterr().out)
    assert data["outcome"] == "terminated"
    assert data["trace"] == ["branch true", "read a1 1", "read a2 7"]


def test_run_spec_with_dirs(files, capsys):
    p = files("p.aw", LISTING1)
    st = files(
        "s", "i = 4\na1_size = 4\na1 = [0,7,1,2]\na2 = [0,0,0,0,0,0,0,0]\na3 = [5]"
    )
    assert main(
        ["run", "--sem", "spec", "--state", st, "--dirs", "force load a3 0 step", p]
    ) == 0
    out = capsys.readouterr().out
    assert "read a2 5" in out
    assert "consumed: 3" in out


def test_run_ideal_fs(files, capsys):
    p = files("p.aw", "if false then a[isecret] <- e end")
    st = files("s", "isecret = 1\ne = 5\na = [0,0]")
    labels = files("labels", "e: public")
    assert main(
        ["run", "--sem", "ideal-fs", "--state", st, "--labels", labels,
         "--dirs", "force step", p]
    ) == 0
    out = capsys.readouterr().out
    assert "write a 0" in out  # masked store index


def test_check_sct_exit_codes(files):
    fx_prog = files("l3.aw", (
        "if i < secrets_size then\n"
        "  secrets[i] <- key;\n"
        "  x <- a[0];\n"
        "  if 1 <= x then skip end\n"
        "end\n"
    ))
    labels = files("labels", "i: public\nsecrets_size: public\nx: public\na: public")
    space = files("space", (
        "i in {0,1}\nsecrets_size in {1}\nx in {0}\nkey in {0,1}\n"
        "secrets : size 1 in {0}\na : size 1 in {0}"
    ))
    common = ["check", "--property", "sct", "--labels", labels, "--space", space,
              "--max-dirs", "6", fx_prog]
    assert main(common[:1] + ["--variant", "sislh-nostore"] + common[1:]) == 1
    assert main(common[:1] + ["--variant", "sislh"] + common[1:]) == 0
    assert main(common[:1] + ["--variant", "svslh"] + common[1:]) == 0


def test_check_relsec_precondition_exit_2(files, capsys):
    p = files("p.aw", "y := secret")
    labels = files("labels", "y: public")
    space = files("space", "secret in {0,1}")
    code = main(["check", "--property", "relsec", "--variant", "fislh",
                 "--labels", labels, "--space", space, p])
    assert code == 2


def test_check_bcc_random(files):
    p = files("p.aw", LISTING1)
    labels = files("labels", LISTING1_LABELS)
    space = files("space", (
        "i in {0,4}\na1_size in {4}\na1 : size 4 in {0}\n"
        "a2 : size 4 in {0}\na3 : size 1 in {42}"
    ))
    assert main(["check", "--property", "bcc", "--variant", "fislh",
                 "--labels", labels, "--space", space, "--trials", "40", p]) == 0


def test_check_unwind_and_wl(files):
    p = files("p.aw", "if secret = 0 then y := 1 end")
    space = files("space", "secret in {0,1}\ny in {0}")
    assert main(["check", "--property", "unwind", "--variant", "fislh",
                 "--space", space, "--max-dirs", "4", p]) == 0
    assert main(["check", "--property", "wl", "--space", space, p]) == 0


def test_check_equality(files):
    p = files("p.aw", LISTING1)
    assert main(["check", "--property", "equality", p]) == 0


def test_repro_exit_codes(capsys):
    assert main(["repro", "--listing", "1"]) == 1
    out = capsys.readouterr().out
    assert "force load a3 0 step" in out
    assert main(["repro", "--listing", "2"]) == 0


def test_repro_json(capsys):
    assert main(["repro", "--listing", "1", "--format", "json"]) == 1
    data = json.loads(capsys.readouterr().out)
    assert data["verdicts"][0]["status"] == "violated"
    assert data["verdicts"][0]["witness"]["dirs"] == "force load a3 0 step"


def test_env_overrides_bounds(files, monkeypatch):
    # with a directive budget of 1 the attack cannot be reached
    monkeypatch.setenv("SLH_MAX_DIRS", "1")
    assert main(["repro", "--listing", "1"]) == 0
    monkeypatch.delenv("SLH_MAX_DIRS")
    assert main(["repro", "--listing", "1"]) == 1


def test_interactive_run(files, capsys, monkeypatch):
    p = files("p.aw", LISTING1)
    st = files(
        "s", "i = 4\na1_size = 4\na1 = [0,7,1,2]\na2 = [0,0,0,0,0,0,0,0]\na3 = [5]"
    )
    monkeypatch.setattr("sys.stdin", io.StringIO("force\nload a3 0\nstep\n"))
    assert main(["run", "--sem", "spec", "--state", st, "--interactive", p]) == 0
    out = capsys.readouterr().out
    assert "feasible: step | force" in out
    assert "obs: read a2 5" in out


def test_gen_subcommand(capsys):
    assert main(["gen", "--seed", "5", "--size", "8"]) == 0
    first = capsys.readouterr().out
    assert main(["gen", "--seed", "5", "--size", "8"]) == 0
    assert capsys.readouterr().out == first
