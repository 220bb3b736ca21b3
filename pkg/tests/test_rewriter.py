import time

import pytest
from hypothesis import given, strategies as st

from fmtwist.derivations import bundled_scripts
from fmtwist.lattice import identity_op
from fmtwist.presets import get_preset
from fmtwist.rewriter import (DerivationScript, Gen, RewriteError, Shift, Step, T,
                              apply_rule, check_derivation, format_word, normalize,
                              orthogonal, parse_object, parse_word, rule_table, search,
                              shadow_check, transport, transversal_ext)

A2 = get_preset("a2_surface")
Z5 = get_preset("z5_threefold")


def w(geom, *items):
    return parse_word(geom, list(items))


def obj(geom, text):
    return parse_object(geom, text)


def test_parse_format_roundtrip():
    word = w(A2, "ST(O_C3)", "T(C2)", "ST(O_C4(1))", "Shift(2)")
    assert parse_word(A2, format_word(A2, word).split(" . ")) == word


def test_transport_by_line_twist():
    image, ev = transport(A2, w(A2, "T(C2)"), obj(A2, "O_C3"))
    assert image == obj(A2, "O_C3(1)")
    assert ev == "restriction tables"


def test_transport_by_orthogonal_twist():
    assert orthogonal(Z5, obj(Z5, "O_D4"), obj(Z5, "O_D5(2f)"))
    image, _ = transport(Z5, w(Z5, "ST(O_D4)"), obj(Z5, "O_D5(2f)"))
    assert image == obj(Z5, "O_D5(2f)")


def test_transport_undefined():
    with pytest.raises(RewriteError):
        transport(A2, w(A2, "ST(O_C3)"), obj(A2, "O_C4"))


def test_transversal_ext_symmetric_in_orthogonality():
    e, f = obj(Z5, "O_D4"), obj(Z5, "O_D5(2f)")
    assert transversal_ext(Z5, e, f) == -1
    assert orthogonal(Z5, f, e)


def test_r1_conjugation():
    new, cert = apply_rule(A2, w(A2, "T(C2)", "ST(O_C3)"), 0, "R1")
    assert format_word(A2, new) == "ST(O_C3(1)) . T(C2)"
    assert cert.rule == "R1" and "O_C3(1)" in cert.evidence


def test_r2_exact_sequence():
    new, cert = apply_rule(A2, w(A2, "ST(O_C3)", "ST(O_C3(1))"), 0, "R2")
    assert new == (T(1, -2),)
    assert cert.evidence == "exact sequence"


def test_r2_translate_needs_conjugation():
    new, cert = apply_rule(A2, w(A2, "ST(O_C4(1))", "ST(O_C4(2))"), 0, "R2")
    assert new == (T(-2, 1),)
    assert cert.evidence.startswith("conjugate by")


def test_r2_side_condition():
    with pytest.raises(RewriteError, match="side condition"):
        apply_rule(A2, w(A2, "ST(O_C3)", "ST(O_C3(2))"), 0, "R2")


def test_r5_merges_line_twists():
    new, _ = apply_rule(A2, w(A2, "T(C3)", "T(2C2)"), 0, "R5")
    assert new == (T(1, 0),)


def test_r5_drops_zero():
    new, _ = apply_rule(A2, w(A2, "T(C1)", "T(-C1)"), 0, "R5")
    assert new == ()


def test_r6_cancels_inverse():
    g = w(A2, "ST(O_C3)")[0]
    new, _ = apply_rule(A2, (g, g.inverse()), 0, "R6")
    assert new == ()


@pytest.mark.parametrize("rule", ["R1", "R2", "R5", "R6"])
def test_empty_word_is_rejected(rule):
    with pytest.raises(RewriteError, match="empty"):
        apply_rule(A2, (), 0, rule)


def test_unknown_rule():
    with pytest.raises(RewriteError):
        apply_rule(A2, w(A2, "T(C1)"), 0, "R9")


@pytest.mark.parametrize("name", sorted(bundled_scripts()))
def test_bundled_scripts_certify(name):
    cert = check_derivation(bundled_scripts()[name])
    assert cert.passed, cert.error
    assert cert.shadow_agree


def test_scripts_are_fast():
    t0 = time.perf_counter()
    for sc in bundled_scripts().values():
        check_derivation(DerivationScript(sc.name + "_timed", sc.preset, sc.start, sc.target,
                                          sc.steps, sc.description, sc.lemmas))
    assert time.perf_counter() - t0 < 1.0


def test_mm5_records_assumptions():
    cert = check_derivation(bundled_scripts()["MM5_fifth"])
    assert "R4F" in cert.assumptions


def test_empty_script_is_trivially_certified():
    sc = DerivationScript("empty", "a2_surface", ("T(C1)",), ("T(C1)",), ())
    cert = check_derivation(sc)
    assert cert.passed and cert.steps == []


def test_wrong_target_fails():
    sc = bundled_scripts()["M2_squared"]
    bad = DerivationScript("bad", sc.preset, sc.start, ("T(C2)",), sc.steps)
    cert = check_derivation(bad)
    assert not cert.passed and not cert.shadow_agree


def test_perturbed_rule_table_fails():
    sc = bundled_scripts()["MM3_cubed"]
    with rule_table({"R3": [[1], [2], [4]]}):
        cert = check_derivation(sc)
    assert not cert.passed and cert.failing_step is not None
    assert check_derivation(sc).passed


def test_rule_table_unknown_rule():
    with pytest.raises(RewriteError):
        with rule_table({"R5": [[0]]}):
            pass


def test_failing_step_is_reported():
    sc = DerivationScript("broken", "a2_surface", ("ST(O_C3)", "ST(O_C4)"), (),
                          (Step("R2", 0),))
    cert = check_derivation(sc)
    assert cert.failing_step == 0 and "R2" in cert.error


def test_search_finds_m2_squared():
    steps = search(A2, w(A2, *(("ST(O_C3)", "T(C2)") * 2)), w(A2, "T(C1)"), max_depth=6)
    assert steps is not None


@pytest.mark.parametrize("geom, word", [
    (A2, ("ST(O_C4)", "ST(O_C3)", "T(C2)") * 3),
    (Z5, ("ST(O_D4)", "T(-D1)", "ST(O_D5)", "T(D1)", "ST(O_D5)", "T(D2)") * 5),
])
def test_shadow_of_order_relations(geom, word):
    assert shadow_check(geom, w(geom, *word)).matrix == identity_op(geom.lattice).matrix


line_words = st.lists(st.one_of(
    st.builds(T, st.integers(-3, 3), st.integers(-3, 3)),
    st.builds(Shift, st.integers(-2, 2))), max_size=8)


@given(line_words)
def test_normalize_idempotent_and_shadow_preserving(word):
    word = tuple(word)
    n = normalize(A2, word)
    assert normalize(A2, n) == n
    assert shadow_check(A2, n).matrix == shadow_check(A2, word).matrix


@given(line_words, st.data())
def test_r5_confluence(word, data):
    # any sequence of R5 steps reaches the same normal form
    word = tuple(word)
    cur = word
    while True:
        options = []
        for i in range(len(cur)):
            try:
                options.append(apply_rule(A2, cur, i, "R5")[0])
            except RewriteError:
                pass
        if not options:
            break
        cur = data.draw(st.sampled_from(options))
    assert normalize(A2, cur) == normalize(A2, word)


@given(st.integers(-3, 3), st.integers(-3, 3), st.sampled_from(["O_C3", "O_C4", "O_C4(2)"]))
def test_r1_preserves_shadow(a, b, text):
    word = (T(a, b),) + w(A2, f"ST({text})")
    new, _ = apply_rule(A2, word, 0, "R1")
    assert shadow_check(A2, new).matrix == shadow_check(A2, word).matrix
