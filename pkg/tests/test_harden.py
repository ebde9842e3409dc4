import random

import pytest

from awhile.flow_ifc import ABranch, ASKIP, flow_track
from awhile.harden import (
    FISLH,
    FVSLH,
    FlagCollisionError,
    ISLH,
    SISLH,
    SISLH_NO_STORE_MASK,
    SVSLH,
    USLH,
    BranchNodeError,
    harden,
    harden_fs,
)
from awhile.ifc_static import PUBLIC, all_public, all_secret, parse_labeling
from awhile.lang import Seq, parse_com, pretty_com, used_vars
from awhile.seccheck import (
    NamePools,
    enum_spec_runs,
    enum_states,
    gen_program,
    random_labeling,
)
from awhile.seq_sem import RunKind, seq_run
from awhile.spec_sem import spec_run
from awhile.state import SpecConfig, parse_state
from awhile.fixtures import FIXTURES

LISTING1 = parse_com("if i < a1_size then j <- a1[i]; x <- a2[j] end")

LISTING2_TEXT = """
if i < a1_size then
  b := (i < a1_size ? b : 1);
  j <- a1[(b = 1 ? 0 : i)];
  x <- a2[(b = 1 ? 0 : j)]
else
  b := (i < a1_size ? 1 : b)
end
"""

pools = NamePools(("x", "y", "i", "k"), ("a", "c"))


def _squash(text):
    return " ".join(text.split())


def test_islh_on_listing1_is_listing2():
    hardened = harden(ISLH, LISTING1, all_secret(), all_secret())
    assert hardened == parse_com(LISTING2_TEXT)
    assert _squash(pretty_com(hardened)) == _squash(LISTING2_TEXT)


def test_flag_collision_rejected():
    with pytest.raises(FlagCollisionError):
        harden(ISLH, parse_com("b := 1"), all_secret(), all_secret())
    hardened = harden(ISLH, parse_com("x := 1"), all_secret(), all_secret(),
                      flag_var="flag")
    assert "flag" not in used_vars(parse_com("x := 1"))
    assert hardened == parse_com("x := 1")


def test_custom_flag_variable():
    com = parse_com("if x < 1 then skip end")
    hardened = harden(USLH, com, all_secret(), all_secret(), flag_var="spec_flag")
    assert "spec_flag" in used_vars(hardened)
    assert "b" not in used_vars(hardened)


def test_sislh_store_mask_depends_on_value_label():
    labels = parse_labeling("i: public\ne: public")
    com = parse_com("a[i] <- key")  # key defaults to secret
    protected = harden(SISLH, com, labels, labels)
    assert protected != com  # index masked for a secret value
    pub_store = parse_com("a[i] <- e")
    assert harden(SISLH, pub_store, labels, labels) == pub_store
    # the diagnostic variant never masks stores
    assert harden(SISLH_NO_STORE_MASK, com, labels, labels) == com


def test_svslh_masks_value_not_index():
    labels = parse_labeling("x: public")
    hardened = harden(SVSLH, parse_com("x <- a[i]"), labels, labels)
    assert isinstance(hardened, Seq)
    assert hardened.first == parse_com("x <- a[i]")  # index untouched
    assert hardened.second == parse_com("x := (b = 1 ? 0 : x)")
    # secret destination: nothing to do under value SLH
    assert harden(SVSLH, parse_com("s <- a[i]"), labels, labels) == parse_com(
        "s <- a[i]"
    )


def test_fislh_equals_sislh_on_cct_programs():
    from awhile.ifc_static import wt_cct

    rng = random.Random(11)
    everything_public = all_public(pools.scalars + pools.arrays)
    count = 0
    while count < 120:
        com = gen_program(rng.randrange(10**9), 12, pools)
        if count % 2 == 0:
            P = PA = everything_public
        else:
            P, PA = random_labeling(rng, pools)
        if not wt_cct(P, PA, com):
            continue
        assert harden(FISLH, com, P, PA) == harden(SISLH, com, P, PA)
        count += 1


def test_fislh_and_fvslh_equal_uslh_when_all_secret():
    secret = all_secret()
    for seed in range(120):
        com = gen_program(seed, 12, pools)
        uslh = harden(USLH, com, secret, secret)
        assert harden(FISLH, com, secret, secret) == uslh
        assert harden(FVSLH, com, secret, secret) == uslh


ALL_VARIANTS = (ISLH, SISLH, SISLH_NO_STORE_MASK, FISLH, USLH, SVSLH, FVSLH)


def test_sequential_transparency():
    """With the flag at 0, hardening changes neither the sequential trace
    nor the final state outside the flag variable."""
    rng = random.Random(3)
    rho0, mu0 = parse_state("x = 1\ny = 2\ni = 0\nk = 1\na = [1,2]\nc = [3]")
    for seed in range(150):
        com = gen_program(seed, 12, pools)
        P, PA = random_labeling(rng, pools)
        base = seq_run(com, rho0, mu0, 500)
        targets = [harden(v, com, P, PA) for v in ALL_VARIANTS]
        targets.append(harden_fs(flow_track(com, P, PA, PUBLIC)[0]))
        for hardened in targets:
            out = seq_run(hardened, rho0, mu0, 2000)
            assert out.trace == base.trace
            if base.kind is RunKind.TERMINATED:
                assert out.kind is RunKind.TERMINATED
                names = (out.rho.names() | base.rho.names()) - {"b"}
                assert all(out.rho.get(n) == base.rho.get(n) for n in names)
                assert out.mu == base.mu
                assert out.rho.get("b") == 0


def test_harden_fs_trivial_cases():
    assert harden_fs(ASKIP) == parse_com("skip")
    with pytest.raises(BranchNodeError):
        harden_fs(ABranch(PUBLIC, ASKIP))


def test_harden_fs_public_read_gets_value_mask():
    labels = parse_labeling("x: public\ni: public\na: public")
    acom, _ = flow_track(parse_com("x <- a[i]"), labels, labels, PUBLIC)
    hardened = harden_fs(acom)
    assert hardened == parse_com("x <- a[i]; x := (b = 1 ? 0 : x)")


def test_harden_fs_secret_target_public_index_left_alone():
    labels = parse_labeling("i: public")
    acom, _ = flow_track(parse_com("x <- a[i]"), labels, labels, PUBLIC)
    assert harden_fs(acom) == parse_com("x <- a[i]")


def test_harden_fs_all_secret_matches_uslh_traces_on_fixtures():
    """Flow-sensitive hardening from the all-secret labeling produces the
    same observations as ultimate hardening under every directive sequence
    feasible for either, on all fixture programs and states."""
    secret = all_secret()
    for fx in FIXTURES.values():
        if fx.number == 2:
            continue  # already-hardened artifact, reserves the flag itself
        com = fx.program()
        uslh = harden(USLH, com, secret, secret)
        acom, _ = flow_track(com, secret, secret, PUBLIC)
        fs = harden_fs(acom)
        for rho, mu in enum_states(fx.space()):
            for a, b in ((uslh, fs), (fs, uslh)):
                runs = enum_spec_runs(
                    SpecConfig(a, rho, mu, False), max_dirs=4, fuel=300
                )
                for dirs, trace, _kind in runs:
                    other = spec_run(SpecConfig(b, rho, mu, False), dirs, 300)
                    n = min(len(trace), len(other.trace))
                    assert trace[:n] == other.trace[:n]
