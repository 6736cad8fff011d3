"""Command-line driver: every computation and verifier, with JSON reports and fixed exit codes.

Exit codes: 0 success or PASS, 1 computational error, 2 verification failure.
"""

from __future__ import annotations

import functools
import json
import sys
from pathlib import Path

import click
import numpy as np

from .charfn import TorusChar, abelian_structure, characters, inner_product, weyl_conjugate, weyl_sigma_group
from .errors import ParacharError
from .frobenius import FrobTwist, vreg_torus_elements
from .genericity import depth, extract_generic_element, is_generic_character
from .matgroup import DEFAULT_CAP, GroupContext, Parabolic, enumerate_group, simple_reflection, weyl_group

EXIT_OK, EXIT_ERROR, EXIT_FAIL = 0, 1, 2


class VerificationFailed(Exception):
    def __init__(self, report: dict):
        super().__init__("verification failed")
        self.report = report


def _dump(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), default=_default)


def _default(x):
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.floating,)):
        return float(x)
    if isinstance(x, np.bool_):
        return bool(x)
    if isinstance(x, np.ndarray):
        return x.tolist()
    if isinstance(x, complex):
        return [x.real, x.imag]
    raise TypeError(f"cannot serialize {type(x).__name__}")


def _emit(report: dict, out: str | None) -> None:
    text = _dump(report)
    if out:
        Path(out).write_text(text + "\n")
    click.echo(text)


# -- shared options -----------------------------------------------------------------------


def _parse_twist(value: str, n: int, kind: str) -> FrobTwist:
    if value in ("split", "identity", ""):
        return FrobTwist.split(n, kind)
    if value == "swap":
        if n != 2:
            raise click.BadParameter("'swap' is the twist of GL_2/SL_2; give a one-line permutation")
        return FrobTwist.from_one_line([2, 1], kind)
    if value == "coxeter":
        return FrobTwist.from_one_line(list(range(2, n + 1)) + [1], kind)
    try:
        seq = [int(x) for x in value.split(",")]
    except ValueError as exc:
        raise click.BadParameter(f"twist {value!r} is not split/swap/coxeter or a permutation") from exc
    if sorted(seq) != list(range(1, n + 1)):
        raise click.BadParameter(f"twist {seq} is not a one-line permutation of 1..{n}")
    return FrobTwist.from_one_line(seq, kind)


def common_options(fn):
    @click.option("--kind", type=click.Choice(["GL", "SL"]), default="GL", show_default=True)
    @click.option("--n", "n", type=int, default=2, show_default=True)
    @click.option("--q", "q", type=int, default=2, show_default=True, help="field size p^f")
    @click.option("--r", "r", type=int, default=1, show_default=True, help="truncation depth")
    @click.option("--twist", default="split", show_default=True, help="split, swap, coxeter or a one-line permutation of 1..n")
    @click.option("--theta", default=None, help="exponent vector a,b,..., or 'all' / 'generic'")
    @click.option("--cap", type=int, default=DEFAULT_CAP, show_default=True)
    @click.option("--cache-dir", default=None, type=click.Path(file_okay=False))
    @click.option("--tol", type=float, default=1e-6, show_default=True)
    @click.option("--seed", type=int, default=0, show_default=True)
    @click.option("--out", default=None, type=click.Path(dir_okay=False))
    @functools.wraps(fn)
    def wrapper(kind, n, q, r, twist, theta, cap, cache_dir, tol, seed, out, **kw):
        ctx = GroupContext.make(kind, n, q, r)
        if r >= ctx.p:
            click.echo(f"warning: r = {r} >= p = {ctx.p}", err=True)
        cfg = Config(ctx, _parse_twist(twist, n, kind), theta, cap, cache_dir, tol, seed, out)
        try:
            report = fn(cfg, **kw)
        except VerificationFailed as exc:
            _emit(exc.report, out)
            sys.exit(EXIT_FAIL)
        except ParacharError as exc:
            click.echo(_dump(exc.to_json()))
            sys.exit(EXIT_ERROR)
        if report is not None:
            _emit(report, cfg.out)

    return wrapper


class Config:
    def __init__(self, ctx, tw, theta, cap, cache_dir, tol, seed, out):
        self.ctx, self.tw, self.theta_spec = ctx, tw, theta
        self.cap, self.cache_dir, self.tol, self.seed, self.out = cap, cache_dir, tol, seed, out

    @functools.cached_property
    def torus(self):
        from .induction import sigma_torus

        return sigma_torus(self.ctx, self.tw)

    @functools.cached_property
    def structure(self):
        return abelian_structure(self.torus)

    def group(self):
        from .induction import sigma_group

        if self.tw.is_split:
            return enumerate_group(self.ctx, 1, cap=self.cap, cache_dir=self.cache_dir)
        return sigma_group(self.ctx, self.tw)

    def thetas(self, default: str = "all") -> list[TorusChar]:
        spec = self.theta_spec or default
        chars = characters(self.structure)
        if spec == "all":
            return chars
        if spec == "generic":
            return [c for c in chars if _is_generic(c, self.torus)]
        try:
            exps = tuple(int(x) for x in spec.split(","))
        except ValueError as exc:
            raise click.BadParameter(f"theta {spec!r} is not an exponent vector") from exc
        if len(exps) != len(self.structure.orders):
            raise click.BadParameter(f"theta needs {len(self.structure.orders)} exponents {self.structure.orders}")
        return [TorusChar(self.structure, tuple(e % o for e, o in zip(exps, self.structure.orders)))]

    def theta(self) -> TorusChar:
        if self.theta_spec in (None, "all", "generic"):
            raise click.BadParameter("this command needs a single --theta exponent vector")
        return self.thetas()[0]


def _is_generic(theta: TorusChar, T) -> bool:
    r = T.group.ctx.r
    if r < 1 or depth(theta, T) != r:
        return False
    rep = is_generic_character(theta, T)
    return bool(rep["ge1"] and rep["ge2"])


def _char_row(theta: TorusChar, cfg: Config) -> dict:
    T = cfg.torus
    d = depth(theta, T)
    row = {"theta": list(theta.exps), "depth": d, "ge1": None, "ge2": None}
    if d == cfg.ctx.r and d >= 1:
        rep = is_generic_character(theta, T)
        row.update(ge1=rep["ge1"], ge2=rep["ge2"], X_psi=rep["X_psi"]["coords"])
    stab = [w.one_line() for w in weyl_sigma_group(cfg.tw) if weyl_conjugate(theta, w, cfg.ctx.kind).exps == theta.exps]
    row["weyl_stabilizer"] = stab
    return row


def _parabolic(spec: str | None, n: int) -> Parabolic:
    if not spec:
        return Parabolic.borel(n)
    return Parabolic.standard([int(x) for x in spec.split(",")])


def _finish(report: dict, passed: bool) -> dict:
    report["status"] = "PASS" if passed else "FAIL"
    if not passed:
        raise VerificationFailed(report)
    return report


# -- commands ---------------------------------------------------------------------------------


@click.group()
def cli():
    """Characters of truncated parahoric groups over F_q[t]/t^(r+1)."""


def main(argv: list[str] | None = None) -> None:
    """Entry point; usage errors become error JSON with exit code 1, keeping 2 for failed verifications."""
    try:
        code = cli.main(args=argv, prog_name="parachar", standalone_mode=False)
    except click.exceptions.NoArgsIsHelpError as exc:
        click.echo(exc.ctx.get_help() if exc.ctx else exc.format_message())
        sys.exit(EXIT_OK)
    except click.ClickException as exc:
        click.echo(_dump({"error": type(exc).__name__, "message": exc.format_message()}))
        sys.exit(EXIT_ERROR)
    except click.Abort:
        sys.exit(EXIT_ERROR)
    sys.exit(code if isinstance(code, int) else EXIT_OK)


@cli.command("group-info")
@common_options
def group_info(cfg: Config):
    G = cfg.group()
    T = cfg.torus
    vreg = int(np.sum(vreg_torus_elements(T)))
    return {
        "group": cfg.ctx.label,
        "q": cfg.ctx.q,
        "r": cfg.ctx.r,
        "twist": cfg.tw.w.one_line(),
        "order": len(G),
        "predicted_split_order": cfg.ctx.predicted_order(),
        "dim_G_r": cfg.ctx.dim_G_r,
        "torus_order": len(T),
        "torus_invariants": cfg.structure.orders,
        "torus_very_regular": vreg,
    }


@cli.command("char-list")
@common_options
def char_list(cfg: Config):
    rows = [_char_row(t, cfg) for t in cfg.thetas()]
    return {"torus_invariants": cfg.structure.orders, "count": len(rows), "characters": rows}


@cli.command("check-generic")
@common_options
def check_generic(cfg: Config):
    return {"results": [is_generic_character(t, cfg.torus) for t in cfg.thetas("generic")]}


@cli.command("induce-split")
@click.option("--parabolic", default=None, help="block composition, e.g. 2,1")
@common_options
def induce_split_cmd(cfg: Config, parabolic):
    from .induction import induce_split

    P = _parabolic(parabolic, cfg.ctx.n)
    chi = induce_split(cfg.theta(), cfg.ctx, P, cfg.tw)
    if cfg.out and cfg.out.endswith(".csv"):
        Path(cfg.out).write_text(chi.fn.to_csv())
        cfg.out = None
    return {"theta": list(chi.theta.exps), "parabolic": [list(b) for b in P.blocks], "norm": chi.norm(), **chi.fn.summary()}


@cli.command("z-partition")
@click.option("--g-index", type=int, default=None, help="element index in G^sigma (default: identity)")
@click.option("--mult", type=int, default=1, show_default=True)
@common_options
def z_partition_cmd(cfg: Config, g_index, mult):
    from .induction import z_engine

    eng = z_engine(cfg.ctx, cfg.tw, mult, cfg.seed)
    g = eng.G.identity_index if g_index is None else g_index
    counts = eng.element_counts(g)
    T = eng.T.group
    return {
        "g": eng.G.ops.encode(eng.G.elems[g]),
        "mult": mult,
        "working_degree": eng.degree,
        "total": int(np.sum(counts)),
        "counts": [[T.ops.encode(T.elems[i]), int(c)] for i, c in enumerate(counts) if c],
    }


@cli.command("dl-char")
@click.option("--no-check", is_flag=True, help="skip the genericity precondition")
@common_options
def dl_char(cfg: Config, no_check):
    from .induction import dl_character, vreg_values

    chi = dl_character(cfg.theta(), cfg.tw, cfg.ctx, check_generic=not no_check)
    if cfg.out and cfg.out.endswith(".csv"):
        Path(cfg.out).write_text(chi.fn.to_csv())
        cfg.out = None
    vals = vreg_values(chi, cfg.ctx)
    return {
        "theta": list(chi.theta.exps),
        "norm": chi.norm(),
        "normalization": chi.extra,
        "vreg_max_deviation": max((v["deviation"] for v in vals), default=0.0),
        **chi.fn.summary(),
    }


@cli.command("inner")
@click.option("--theta2", required=True, help="second exponent vector")
@click.option("--method", type=click.Choice(["split", "dl", "z"]), default="split", show_default=True)
@common_options
def inner(cfg: Config, theta2, method):
    from .induction import dl_character, induce_split, z_character

    a = cfg.theta()
    b = TorusChar(cfg.structure, tuple(int(x) % o for x, o in zip(theta2.split(","), cfg.structure.orders)))

    def build(t):
        if method == "split":
            return induce_split(t, cfg.ctx, None, cfg.tw)
        if method == "dl":
            return dl_character(t, cfg.tw, cfg.ctx, check_generic=False)
        return z_character(t, cfg.tw, cfg.ctx)

    z = inner_product(build(a).fn, build(b).fn)
    return {"theta": list(a.exps), "theta2": list(b.exps), "method": method, "inner": [z.real, z.imag]}


@cli.command("howe-factorize")
@common_options
def howe_factorize(cfg: Config):
    from .howe import factorize, root_levels, verify_factorization

    rows = []
    for t in cfg.thetas():
        tower = factorize(t, cfg.tw)
        rows.append({**tower.to_json(), "verified": verify_factorization(tower), "root_levels": root_levels(t, cfg.tw).to_json()})
    return {"towers": rows}


@cli.command("tower-induce")
@common_options
def tower_induce_cmd(cfg: Config):
    from .frobenius import very_regular_mask
    from .howe import factorize, tower_induce
    from .induction import induce_split

    rows = []
    for t in cfg.thetas():
        chi = tower_induce(factorize(t, cfg.tw), tw=cfg.tw)
        ref = induce_split(t, cfg.ctx, None, cfg.tw).values
        vm = very_regular_mask(chi.fn.domain.elems, chi.fn.domain.ops)
        diff = np.abs(chi.values - ref)
        rows.append(
            {
                "theta": list(t.exps),
                "tower": chi.extra["tower"],
                "degree": [chi.values[chi.fn.domain.identity_index].real, 0.0],
                "norm": chi.norm(),
                "deviation_from_induce_split": float(diff.max()),
                "deviation_on_very_regular": float(diff[vm].max(initial=0.0)),
            }
        )
    return {"results": rows}


# -- verifiers ----------------------------------------------------------------------------------


@cli.group()
def verify():
    """Exhaustive checks; each prints PASS/FAIL with the worst witness."""


@verify.command("bruhat")
@common_options
def verify_bruhat(cfg: Config):
    from .matgroup import verify_bruhat_multiplication

    reps = []
    for i in range(cfg.ctx.n - 1):
        s = simple_reflection(cfg.ctx.n, i)
        for w in weyl_group(cfg.ctx.n):
            reps.append(verify_bruhat_multiplication(cfg.ctx, s, w, cfg.cap, cfg.cache_dir).to_json())
    failing = [r for r in reps if not r["pass"]]
    return _finish({"checks": reps, "witness": failing[0] if failing else None}, not failing)


@verify.command("mackey")
@click.option("--parabolic", default=None, help="block composition, e.g. 2,1")
@common_options
def verify_mackey_cmd(cfg: Config, parabolic):
    from .induction import NotFactoringThroughLevi, _levi_generic, check_factors_through_levi, verify_mackey

    P = _parabolic(parabolic, cfg.ctx.n)

    thetas = []
    for t in cfg.thetas("all"):
        try:
            check_factors_through_levi(t, P)
        except NotFactoringThroughLevi:
            continue
        if cfg.theta_spec in (None, "generic") and not _levi_generic(t, P, cfg.ctx):
            continue
        thetas.append(t)
    reports = [{"theta": list(t.exps), **verify_mackey(t, cfg.ctx, P, tol=cfg.tol).to_json()} for t in thetas]
    failing = [r for r in reports if not r["passed"]]
    worst = max((max(r["max_off_weyl"], r["weyl_sum_deviation"]) for r in reports if r["generic"]), default=0.0)
    return _finish({"reports": reports, "max_deviation": worst, "witness": failing[0]["theta"] if failing else None}, not failing)


def _generic_elements(cfg: Config):
    out = []
    for t in cfg.thetas("generic"):
        X = extract_generic_element(t, cfg.torus)
        if X.coords not in [x.coords for x in out]:
            out.append(X)
    return out


@verify.command("fourier")
@common_options
def verify_fourier(cfg: Config):
    from .sheaffn import verify_fourier_induction

    reps = [verify_fourier_induction(cfg.ctx, X) for X in _generic_elements(cfg)]
    worst = max((r["max_deviation"] for r in reps), default=0.0)
    return _finish({"reports": reps, "max_deviation": worst}, worst < min(cfg.tol, 1e-8))


@verify.command("idempotent")
@common_options
def verify_idempotent(cfg: Config):
    from .sheaffn import verify_idempotents

    reps = [verify_idempotents(cfg.ctx, X) for X in _generic_elements(cfg)]
    worst = max((r["max_deviation"] for r in reps), default=0.0)
    return _finish({"reports": reps, "max_deviation": worst}, worst < min(cfg.tol, 1e-8))


@verify.command("hc-support")
@common_options
def verify_hc(cfg: Config):
    from .sheaffn import hc_support_check

    reps = [hc_support_check(cfg.ctx, X).to_json() for X in _generic_elements(cfg)]
    worst = max((r["max_off_borel"] for r in reps), default=0.0)
    return _finish({"reports": reps, "max_deviation": worst}, worst < min(cfg.tol, 1e-8))


@verify.command("frob-scalar")
@click.option("--m-max", type=int, default=2, show_default=True)
@common_options
def verify_frob(cfg: Config, m_max):
    from .induction import frobenius_scalar_check

    reps = [frobenius_scalar_check(t, cfg.tw, cfg.ctx, m_max, cfg.tol).to_json() for t in cfg.thetas("generic")]
    failing = [r for r in reps if not r["passed"]]
    worst = max((max(r["residuals"]) for r in reps), default=0.0)
    return _finish({"reports": reps, "max_deviation": worst, "witness": failing[0]["theta"] if failing else None}, not failing)


@verify.command("vreg-values")
@common_options
def verify_vreg(cfg: Config):
    from .induction import dl_character, vreg_values

    reps = []
    for t in cfg.thetas("generic"):
        vals = vreg_values(dl_character(t, cfg.tw, cfg.ctx), cfg.ctx)
        worst = max((v["deviation"] for v in vals), default=0.0)
        reps.append({"theta": list(t.exps), "points": len(vals), "max_deviation": worst})
    worst = max((r["max_deviation"] for r in reps), default=0.0)
    bad = [r for r in reps if r["max_deviation"] >= min(cfg.tol, 1e-8)]
    return _finish({"reports": reps, "max_deviation": worst, "witness": bad[0]["theta"] if bad else None}, not bad)


@verify.command("oracle")
@common_options
def verify_oracle(cfg: Config):
    from .induction import induce_split, z_character

    if not cfg.tw.is_split:
        raise click.BadParameter("the oracle compares against ordinary induction, which needs --twist split")
    worst, witness = 0.0, None
    for t in cfg.thetas("all"):
        dev = float(np.abs(z_character(t, cfg.tw, cfg.ctx).values - induce_split(t, cfg.ctx).values).max())
        if dev > worst:
            worst, witness = dev, list(t.exps)
    tol = min(cfg.tol, 1e-8)
    return _finish({"characters": len(cfg.thetas("all")), "max_deviation": worst, "witness": witness if worst >= tol else None}, worst < tol)


if __name__ == "__main__":  # pragma: no cover
    main()
