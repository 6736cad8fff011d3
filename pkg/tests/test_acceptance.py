"""End-to-end acceptance checks, one test per criterion.

Each test records a single PASS/FAIL line (shown in the pytest terminal summary)
and then asserts. Run directly with ``python3 tests/test_acceptance.py`` to get
just the nine lines.
"""

import time

import numpy as np

from parachar.charfn import characters, weyl_conjugate, weyl_sigma_group
from parachar.frobenius import vreg_torus_elements
from parachar.genericity import GenericElement, depth, is_generic_character
from parachar.howe import factorize, parabolic_choices, tower_induce, verify_factorization
from parachar.induction import (
    NotFactoringThroughLevi,
    dl_character,
    frobenius_scalar_check,
    induce_split,
    sigma_group,
    verify_mackey,
    vreg_values,
    z_character,
)
from parachar.matgroup import GroupContext, Parabolic, simple_reflection, verify_bruhat_multiplication, weyl_group
from parachar.sheaffn import hc_support_check, verify_fourier_induction, verify_idempotents

from conftest import ACCEPTANCE_LINES, make_structure


def record(k: int, passed: bool, detail: str) -> None:
    line = f"CRITERION {k}: {'PASS' if passed else 'FAIL'} {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert passed, line


def _generic(theta, T) -> bool:
    if depth(theta, T) != T.group.ctx.r:
        return False
    rep = is_generic_character(theta, T)
    return rep["ge1"] and rep["ge2"]


def _stabilizer_size(theta, tw) -> int:
    return sum(weyl_conjugate(theta, w, tw.kind).exps == theta.exps for w in weyl_sigma_group(tw))


def test_criterion_1_split_oracle():
    start = time.time()
    ctx, tw, T, S = make_structure("GL", 2, 3, 1)
    chars = characters(S)
    worst = 0.0
    for theta in chars:
        z = z_character(theta, tw, ctx).values
        worst = max(worst, float(np.abs(z - induce_split(theta, ctx).values).max()))
    n_elems = len(sigma_group(ctx, tw))
    elapsed = time.time() - start
    ok = len(chars) == 36 and n_elems == 3888 and worst < 1e-6 and elapsed < 300
    record(1, ok, f"36 characters x {n_elems} elements, max deviation {worst:.2e}, {elapsed:.1f}s")


def test_criterion_2_irreducibility():
    ctx, tw, T, S = make_structure("GL", 2, 3, 1)
    generic_norms, non_generic_norms, report_only = [], [], []
    for theta in characters(S):
        norm = z_character(theta, tw, ctx).norm()
        if _generic(theta, T):
            generic_norms.append(norm)
        else:
            non_generic_norms.append(norm)
            if _stabilizer_size(theta, tw) == 1:
                report_only.append(norm)
    worst = max(abs(v - 1) for v in generic_norms)
    ok = len(generic_norms) == 24 and worst < 1e-6 and max(non_generic_norms) >= 2 - 1e-9
    record(
        2,
        ok,
        f"{len(generic_norms)} generic with |<chi,chi>-1| <= {worst:.1e}; max non-generic norm "
        f"{max(non_generic_norms):.1f}; trivial-stabilizer non-generic norms {sorted({round(v, 6) for v in report_only})} (report only)",
    )


def test_criterion_3_twisted_dl():
    start = time.time()
    ctx, tw, T, S = make_structure("GL", 2, 2, 1, [2, 1])
    s = next(w for w in weyl_sigma_group(tw) if w.length() == 1)
    generic = [c for c in characters(S) if _generic(c, T)]
    norm_dev = vreg_dev = inv_dev = 0.0
    for theta in generic:
        chi = dl_character(theta, tw, ctx)
        norm_dev = max(norm_dev, abs(chi.norm() - 1))
        vreg_dev = max(vreg_dev, max(v["deviation"] for v in vreg_values(chi, ctx)))
        other = dl_character(weyl_conjugate(theta, s), tw, ctx)
        inv_dev = max(inv_dev, float(np.abs(chi.values - other.values).max()))
    elapsed = time.time() - start
    ok = len(S.group) == 12 and len(generic) > 0 and norm_dev < 1e-6 and vreg_dev < 1e-8 and inv_dev < 1e-8 and elapsed < 1800
    record(
        3,
        ok,
        f"{len(generic)} generic of {len(S.group)}: norm dev {norm_dev:.1e}, vreg dev {vreg_dev:.1e}, "
        f"theta^s dev {inv_dev:.1e}, {elapsed:.1f}s",
    )


def test_criterion_4_frobenius_scalar():
    ctx, tw, T, S = make_structure("GL", 2, 2, 1, [2, 1])
    worst, scalars, other = 0.0, set(), []
    for theta in characters(S):
        rep = frobenius_scalar_check(theta, tw, ctx, m_max=2)
        if _generic(theta, T):
            worst = max(worst, max(rep.residuals))
            scalars.add(tuple(round(float(x), 6) + 0.0 for x in rep.scalars[1]))
        else:
            other.append(max(rep.residuals))
    ok = worst < 1e-6
    record(
        4,
        ok,
        f"generic residual {worst:.1e}, m=2 scalars {sorted(scalars)}; non-generic worst residual {max(other):.2f} (report only)",
    )


def test_criterion_5_mackey():
    ctx, tw, T, S = make_structure("GL", 2, 3, 1)
    B = Parabolic.borel(2)
    off, dev, idx_ok, count = 0.0, 0.0, True, 0
    for theta in characters(S):
        if not _generic(theta, T):
            continue
        rep = verify_mackey(theta, ctx, B)
        count += 1
        off, dev = max(off, rep.max_off_weyl), max(dev, rep.weyl_sum_deviation)
        idx_ok &= rep.weyl_cosets == rep.weyl_double_cosets == len(weyl_group(2))
    ctx3, tw3, T3, S3 = make_structure("GL", 3, 2, 1)
    L = Parabolic(((0, 1), (2,)))
    count3 = 0
    for theta in characters(S3):
        try:
            rep = verify_mackey(theta, ctx3, L)
        except NotFactoringThroughLevi:
            continue
        if not rep.generic:
            continue
        count3 += 1
        off, dev = max(off, rep.max_off_weyl), max(dev, rep.weyl_sum_deviation)
        idx_ok &= rep.weyl_cosets == rep.weyl_double_cosets == 2
    ok = count == 24 and count3 > 0 and off < 1e-6 and dev < 1e-6 and idx_ok
    record(
        5,
        ok,
        f"GL_2 q=3: {count} generic; GL_3 q=2 (2,1)-Levi: {count3} generic; off-Weyl contribution {off:.1e}, "
        f"Weyl-indexed remainder deviation {dev:.1e}",
    )


def test_criterion_6_bruhat():
    results = []
    for kind in ("GL", "SL"):
        for q in (2, 3):
            ctx = GroupContext.make(kind, 2, q, 1)
            s = simple_reflection(2, 0)
            for w in weyl_group(2):
                rep = verify_bruhat_multiplication(ctx, s, w)
                results.append((kind, q, rep.case, rep.passed and rep.literal_checked))
    cases = {c for _, _, c, _ in results}
    ok = all(r[-1] for r in results) and cases == {"length-additive", "length-reducing"}
    failing = [r[:3] for r in results if not r[-1]]
    record(6, ok, f"{len(results)} exhaustive set equalities (GL_2, SL_2; q=2,3; both cases), failing {failing}")


def test_criterion_7_sheaf_calculus():
    worst = {"idempotent": 0.0, "fourier-induction": 0.0, "hc-support": 0.0}
    points = 0
    for q in (2, 3):
        ctx, tw, T, S = make_structure("GL", 2, q, 1)
        seen = set()
        for theta in characters(S):
            if not _generic(theta, T):
                continue
            X = is_generic_character(theta, T)["X_psi"]["coords"]
            if tuple(X) in seen:
                continue
            seen.add(tuple(X))
            Xe = GenericElement(tuple(X), 1, ((0,), (1,)))
            worst["idempotent"] = max(worst["idempotent"], verify_idempotents(ctx, Xe)["max_deviation"])
            fi = verify_fourier_induction(ctx, Xe)
            worst["fourier-induction"] = max(worst["fourier-induction"], fi["max_deviation"], fi["fourier_inversion"])
            worst["hc-support"] = max(worst["hc-support"], hc_support_check(ctx, Xe).max_off_borel)
            points += 1
    ok = points == 8 and all(v < 1e-8 for v in worst.values())
    record(7, ok, f"{points} generic X over q=2,3; worst deviations " + ", ".join(f"{k} {v:.1e}" for k, v in worst.items()))


def test_criterion_8_howe():
    lines = []
    ok = True
    for n, q in ((2, 3), (3, 2)):
        ctx, tw, T, S = make_structure("GL", n, q, 1)
        G = sigma_group(ctx, tw)
        vreg = G.find(T.elems[vreg_torus_elements(T)])
        verified, dep_fact, dep_par = 0, 0.0, 0.0
        trivial_stab, mismatched, worst, worst_vreg = 0, [], 0.0, 0.0
        chars = characters(S)
        for theta in chars:
            tower = factorize(theta, tw)
            verified += verify_factorization(tower) and verify_factorization(factorize(theta, tw, "lexmax"))
            base = tower_induce(tower).values
            dep_fact = max(dep_fact, float(np.abs(tower_induce(factorize(theta, tw, "lexmax")).values - base).max()))
            for Ps in parabolic_choices(tower):
                dep_par = max(dep_par, float(np.abs(tower_induce(tower, Ps).values - base).max()))
            if _stabilizer_size(theta, tw) == 1:
                trivial_stab += 1
                diff = np.abs(base - induce_split(theta, ctx).values)
                worst = max(worst, float(diff.max()))
                if len(vreg):
                    worst_vreg = max(worst_vreg, float(diff[vreg].max()))
                if diff.max() >= 1e-6:
                    mismatched.append(list(theta.exps))
        ok &= verified == len(chars) and dep_fact < 1e-6 and dep_par < 1e-6 and not mismatched
        lines.append(
            f"GL_{n} q={q}: {verified}/{len(chars)} verified, factorization dep {dep_fact:.1e}, parabolic dep {dep_par:.1e}, "
            f"trivial-stabilizer {trivial_stab} with {len(mismatched)} differing from ordinary induction "
            f"(max {worst:.1f}, on very regular elements {worst_vreg:.1e}) {mismatched}"
        )
    record(8, ok, "; ".join(lines))


def test_criterion_9_very_regular():
    counts = {}
    for label, q, twist in (("split q=2", 2, None), ("split q=3", 3, None), ("swap q=2", 2, [2, 1])):
        ctx, tw, T, S = make_structure("GL", 2, q, 1, twist)
        counts[label] = int(vreg_torus_elements(T).sum())
    ok = counts["split q=2"] == 0 and counts["split q=3"] > 0 and counts["swap q=2"] > 0
    record(9, ok, f"very regular torus elements {counts}")


if __name__ == "__main__":
    for name, fn in sorted(globals().items()):
        if name.startswith("test_criterion_"):
            try:
                fn()
            except AssertionError:
                pass
