import argparse
import csv
import io
import logging
import re
import sys
from math import prod

from pydantic import BaseModel, ValidationError

from omega_orbits import config as cf
from omega_orbits.cli.models import (
    ARTIFACTS,
    EnumerationResult,
    FactorRecord,
    H1Result,
    OmegaTestResult,
    OrbitsResult,
    ReduceResult,
    RunConfig,
    SchemasResult,
    SixTermResult,
)
from omega_orbits.core import cohomology, descent, forms, projective, sarith, utils
from omega_orbits.core.errors import CapacityError, DomainError

logger = logging.getLogger(__name__)

EXIT_OK, EXIT_DOMAIN, EXIT_USAGE, EXIT_CAPACITY = 0, 1, 2, 3

_GROUP_RE = re.compile(r"^z(\d+)$")
_MODULE_RE = re.compile(r"^Z(?:/(\d+))?(?:\^(\d+))?;action=(-?\d+(?:,-?\d+)*)$")


def _common_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=["json", "csv", "text"], default="json")
    common.add_argument("--output", default=None, help="Output path, stdout when omitted")
    common.add_argument("--verbose", action="store_true", help="Log at DEBUG level")
    return common


def build_parser() -> argparse.ArgumentParser:
    common = _common_parser()
    parser = argparse.ArgumentParser(
        prog="omega-orbits",
        description="Binary forms with S-unit discriminant, GL_2 orbits, group cohomology and descent.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("enumerate", parents=[common], help="Enumerate forms of T(Q, S)")
    p.add_argument("--degree", type=int, required=True)
    p.add_argument("--s", default="", help='Comma separated primes, "" for the empty set')
    p.add_argument("--height", type=int, required=True)
    p.add_argument("--orbits", action="store_true", help="Also partition into orbits")
    p.add_argument("--bound", type=int, default=3, help="Height bound of the GL_2 search")

    p = sub.add_parser("orbits", parents=[common], help="Partition forms into orbits")
    p.add_argument("--forms", required=True, help='Forms separated by ";", e.g. "[1,0,1];[0,1,0]"')
    p.add_argument("--s", default="")
    p.add_argument("--bound", type=int, default=3)

    p = sub.add_parser("omega-test", parents=[common], help="Membership of a configuration in Omega")
    p.add_argument("--points", required=True, help='Points "a:b,c:d,..."')
    p.add_argument("--s", default="")

    p = sub.add_parser("reduce", parents=[common], help="Factorization pattern of a form mod p")
    p.add_argument("--form", required=True, help='Coefficients "[a_n,...,a_0]"')
    p.add_argument("--p", type=int, required=True)

    p = sub.add_parser("h1", parents=[common], help="H^1 of a cyclic group acting on a module")
    p.add_argument("--group", required=True, help="z<m>, the cyclic group of order m")
    p.add_argument(
        "--module",
        required=True,
        help='"Z^r;action=<generator matrix entries>" or "Z/m^r;action=<entries>"',
    )

    p = sub.add_parser("six-term", parents=[common], help="Check the six-term exact sequence")
    p.add_argument(
        "--sequence", default="all", choices=["all", *cohomology.TOY_SEQUENCE_NAMES]
    )
    p.add_argument("--twist", action="store_true", help="Also check every twisted fiber")

    p = sub.add_parser("descent-report", parents=[common], help="Finite-field descent report")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--q", type=int, required=True)
    p.add_argument("--k", type=int, required=True)

    p = sub.add_parser("schemas", parents=[common], help="Write the JSON schemas of all artifacts")
    p.add_argument("--directory", default=cf.SCHEMAS_DIR)
    return parser


def parse_args(argv: list[str] | None = None) -> RunConfig:
    parser = build_parser()
    namespace = vars(parser.parse_args(argv))
    general = {key: namespace.pop(key) for key in ("command", "format", "output", "verbose")}
    try:
        return RunConfig(parameters=namespace, **general)
    except ValidationError as e:
        parser.error(e.errors()[0]["msg"])


def _primes(config: RunConfig) -> sarith.SPrimeSet:
    return sarith.SPrimeSet.parse(config.parameters["s"])


def _enumerate(config: RunConfig) -> EnumerationResult:
    params = config.parameters
    S = _primes(config)
    found = forms.enumerate_omega_forms(params["degree"], S, params["height"])
    result = EnumerationResult(
        degree=params["degree"],
        S=list(S.primes),
        height=params["height"],
        count=len(found),
        forms=[list(f.coeffs) for f in found],
    )
    if params.get("orbits"):
        partition = forms.orbit_partition(found, S, params["bound"])
        result.orbit_count = len(partition)
        result.orbits = [[list(f.coeffs) for f in orbit] for orbit in partition]
    return result


def _orbits(config: RunConfig) -> OrbitsResult:
    params = config.parameters
    S = _primes(config)
    parsed = [forms.BinaryForm.parse(t) for t in params["forms"].split(";") if t.strip()]
    partition = forms.orbit_partition(parsed, S, params["bound"])
    return OrbitsResult(
        S=list(S.primes),
        bound=params["bound"],
        forms=[list(f.coeffs) for f in parsed],
        orbit_count=len(partition),
        orbits=[[list(f.coeffs) for f in orbit] for orbit in partition],
    )


def _omega_test(config: RunConfig) -> OmegaTestResult:
    S = _primes(config)
    A = projective.parse_config(config.parameters["points"])
    form = forms.config_to_form(A)
    delta = forms.discriminant(form) if form.n >= 2 else 1
    return OmegaTestResult(
        points=[str(P) for P in A.sorted_points()],
        S=list(S.primes),
        member=projective.omega_member(A, S),
        colliding_primes=sorted(projective.colliding_primes(A)),
        form=list(form.coeffs),
        discriminant=delta,
        is_omega_form=forms.is_omega_form(form, S) if form.n >= 2 else True,
    )


def _reduce(config: RunConfig) -> ReduceResult:
    form = forms.BinaryForm.parse(config.parameters["form"])
    pattern = forms.reduce_form_mod_p(form, config.parameters["p"])
    return ReduceResult(
        form=list(form.coeffs),
        p=pattern.p,
        degree=pattern.degree,
        factors=[FactorRecord(coeffs=list(f.coeffs), mult=f.mult) for f in pattern.factors],
    )


def _parse_module(group: str, module: str) -> tuple[cohomology.GModuleZr, int | None]:
    group_match = _GROUP_RE.match(group.strip().lower())
    if group_match is None:
        raise DomainError(f"Unsupported group {group!r}, expected z<m>")
    match = _MODULE_RE.match(module.replace(" ", ""))
    if match is None:
        raise DomainError(f"Malformed module {module!r}, expected 'Z^r;action=...'")
    modulus, rank, entries = match.groups()
    rank = int(rank or 1)
    entries = [int(x) for x in entries.split(",")]
    if len(entries) != rank * rank:
        raise DomainError(f"A rank {rank} action needs {rank * rank} entries, got {len(entries)}")
    matrix = [entries[i * rank : (i + 1) * rank] for i in range(rank)]
    M = cohomology.GModuleZr.cyclic(int(group_match.group(1)), matrix)
    return M, int(modulus) if modulus else None


def _h1(config: RunConfig) -> H1Result:
    group, module = config.parameters["group"], config.parameters["module"]
    M, modulus = _parse_module(group, module)
    if modulus is None:
        divisors = cohomology.h1_zr(M)
        return H1Result(
            group=group, module=module, h1_order=prod(divisors), elementary_divisors=divisors
        )
    reduced = M.reduce_mod(modulus)
    classes = cohomology.h1_finite(reduced)
    return H1Result(
        group=group,
        module=module,
        h1_order=len(classes),
        classes=[[reduced.A.label(a) for a in c.representative.values] for c in classes],
    )


def _six_term(config: RunConfig) -> SixTermResult:
    name = config.parameters["sequence"]
    toys = cohomology.toy_sequences()
    chosen = list(toys.values()) if name == "all" else [toys[name]]
    reports = [cohomology.six_term_check(seq) for seq in chosen]
    bounds = [cohomology.fiber_bound_check(seq) for seq in chosen]
    twisted = []
    if config.parameters.get("twist"):
        for seq in chosen:
            for cls in cohomology.h1_finite(seq.B):
                twisted.append(cohomology.twisted_fiber_check(seq, cls.representative))
    return SixTermResult(
        reports=reports,
        fiber_bounds=bounds,
        twisted=twisted,
        passed=all(r.passed for r in reports)
        and all(b.holds for b in bounds)
        and all(t.passed for t in twisted),
    )


def _descent(config: RunConfig) -> descent.DescentReport:
    params = config.parameters
    return descent.orbit_fiber_report(params["n"], params["q"], params["k"])


def _schemas(config: RunConfig) -> SchemasResult:
    directory = config.parameters["directory"]
    for name, model in ARTIFACTS.items():
        path = utils.write_schema(name, model.model_json_schema(), directory)
        logger.info("Wrote %s", path)
    return SchemasResult(available_schemas=sorted(cf.AVAILABLE_SCHEMAS))


COMMANDS = {
    "enumerate": _enumerate,
    "orbits": _orbits,
    "omega-test": _omega_test,
    "reduce": _reduce,
    "h1": _h1,
    "six-term": _six_term,
    "descent-report": _descent,
    "schemas": _schemas,
}


def render(result: BaseModel, fmt: str) -> str:
    if fmt == "json":
        return result.model_dump_json(indent=2) + "\n"
    if fmt == "csv":
        if not isinstance(result, EnumerationResult):
            raise DomainError("CSV output is only available for flat enumeration tables")
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow([f"a{i}" for i in range(result.degree, -1, -1)])
        writer.writerows(result.forms)
        return buffer.getvalue()
    return "".join(f"{key}: {value}\n" for key, value in result.model_dump(mode="json").items())


def run(config: RunConfig) -> int:
    logging.basicConfig(
        level=logging.DEBUG if config.verbose else cf.LOG_LEVEL,
        stream=sys.stderr,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        text = render(COMMANDS[config.command](config), config.format)
    except CapacityError as e:
        logger.error("%s", e)
        return EXIT_CAPACITY
    except (ValueError, ArithmeticError) as e:
        logger.error("%s", e)
        return EXIT_DOMAIN
    if config.output:
        with open(config.output, "w") as f:
            f.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def main(argv: list[str] | None = None) -> None:
    sys.exit(run(parse_args(argv)))


if __name__ == "__main__":
    main()
