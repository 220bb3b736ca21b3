"""Bundled derivation scripts for the surface and threefold relations.

Scripts are generated by a small builder that applies rules and records
each step with the resulting word, so the stored scripts are plain data
that ``check_derivation`` replays independently.
"""
from __future__ import annotations

from .presets import get_preset
from .rewriter import (DerivationScript, RewriteError, Step, apply_rule, format_gen,
                       format_word, parse_word, register_script, SCRIPTS)


class Builder:
    def __init__(self, preset: str, start):
        self.geom = get_preset(preset)
        self.preset = preset
        self.start = tuple(start)
        self.word = parse_word(self.geom, list(start))
        self.steps: list[Step] = []

    def apply(self, rule: str, position: int, q_len: int = 1, lemma: str | None = None):
        self.word, _ = apply_rule(self.geom, self.word, position, rule, q_len, lemma)
        self.steps.append(Step(rule, position, q_len, lemma,
                               tuple(format_gen(self.geom, g) for g in self.word)))
        return self

    def find(self, pattern) -> int:
        pat = parse_word(self.geom, list(pattern))
        for i in range(len(self.word) - len(pat) + 1):
            if self.word[i:i + len(pat)] == pat:
                return i
        raise RewriteError(f"{pattern} not found in {format_word(self.geom, self.word)}")

    def at(self, rule: str, pattern, offset: int = 0, **kw):
        return self.apply(rule, self.find(pattern) + offset, **kw)

    def push_twists(self):
        """Move every line twist to the right end with R1, merging with R5."""
        while True:
            w = self.word
            for i, g in enumerate(w[:-1]):
                if g.kind != "T":
                    continue
                if not any(g.pic):
                    self.apply("R5", i)
                    break
                nxt = w[i + 1]
                if nxt.kind == "T":
                    self.apply("R5", i)
                    break
                if nxt.kind == "ST":
                    self.apply("R1", i)
                    break
            else:
                if w and w[-1].kind == "T" and not any(w[-1].pic):
                    self.apply("R5", len(w) - 1)
                    continue
                return self

    def script(self, name: str, target, description: str, lemmas=()) -> DerivationScript:
        return DerivationScript(name, self.preset, self.start, tuple(target),
                                tuple(self.steps), description, tuple(lemmas))


M2 = ("ST(O_C3)", "T(C2)")
MTILDE2 = ("ST(O_C4)", "T(C1)")
M3 = ("ST(O_C4)",) + M2
MM2 = ("T(-D1)", "ST(O_D5)", "T(D1)", "ST(O_D5)", "T(D2)")
MM3 = ("T(D1)", "ST(O_D4)")
MM5 = ("ST(O_D4)",) + MM2


def _m2_squared():
    b = Builder("a2_surface", M2 * 2)
    b.apply("R1", 1).apply("R2", 0).apply("R5", 0).apply("R5", 0)
    return b.script("M2_squared", ("T(C1)",), "M2^2 = T(C1)")


def _mtilde2_squared():
    b = Builder("a2_surface", MTILDE2 * 2)
    b.apply("R1", 1).apply("R2", 0).apply("R5", 0).apply("R5", 0)
    return b.script("Mtilde2_squared", ("T(C2)",), "Mtilde2^2 = T(C2)")


def _m3_cubed():
    b = Builder("a2_surface", M3 * 3)
    b.apply("R1", 0, q_len=3)                       # M3 moves O_C4 to O_C3
    b.at("LEMMA", M2 * 2, lemma="M2_squared")
    b.at("R1", ("T(C1)", "ST(O_C4)"))
    b.at("R2", ("ST(O_C4)", "ST(O_C4(1))"))
    b.push_twists()
    b.at("R2", ("ST(O_C3)", "ST(O_C3(1))"))
    b.push_twists()
    return b.script("M3_cubed", (), "M3^3 = id", lemmas=("M2_squared",))


def _mm2_squared():
    b = Builder("z5_threefold", MM2 * 2)
    b.push_twists()
    b.apply("R4", 0)
    b.push_twists()
    return b.script("MM2_squared", ("T(D1)",), "MM2^2 = T(D1)")


def _mm3_cubed():
    b = Builder("z5_threefold", MM3 * 3)
    b.push_twists()
    b.apply("R3", 0)
    b.push_twists()
    return b.script("MM3_cubed", ("T(D2)",), "MM3^3 = T(D2)")


def _mm5_fifth():
    b = Builder("z5_threefold", MM5 * 5)
    # the registered fact MM5(O_D4) = O_D5(f), used on copies 1|2 and 3|4
    b.apply("R1", 0, q_len=6)
    b.apply("R1", 12, q_len=6)
    b.push_twists()
    b.at("R4", ("ST(O_D5(-f))", "ST(O_D5)", "ST(O_D5(s+2f))", "ST(O_D5(s+3f))"))
    b.push_twists()
    b.at("R4", ("ST(O_D5)", "ST(O_D5(f))", "ST(O_D5(s+3f))", "ST(O_D5(s+4f))"))
    b.push_twists()
    # O_D4 and O_D5(2f) are orthogonal, so their twists commute
    b.at("R1", ("ST(O_D4)", "ST(O_D5(2f))"))
    b.at("R3", ("ST(O_D4)", "ST(O_D4(h))", "ST(O_D4(2h))"))
    b.push_twists()
    b.apply("R4F", 0)
    b.push_twists()
    return b.script("MM5_fifth", (), "MM5^5 = id")


def bundled_scripts() -> dict[str, DerivationScript]:
    if not SCRIPTS:
        for make in (_m2_squared, _mtilde2_squared, _m3_cubed, _mm2_squared,
                     _mm3_cubed, _mm5_fifth):
            sc = make()
            register_script(sc)
    return dict(SCRIPTS)
